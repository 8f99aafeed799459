//! Flat key-value experiment configuration.
//!
//! The parameter space is small, so the config surface is a flat
//! `key = value` document: greppable, diffable, and trivially embedded in a
//! run manifest.  Lists use brackets (`f = [0.5, 0.25]`), noise channels are
//! numbered keys (`h1 = [0.1]`, `h2 = [0, 0.05]`), `#` starts a comment.
//!
//! Parsing is strict where silence would corrupt an experiment: duplicate
//! keys are errors (the second assignment would silently win otherwise) and
//! unknown keys are errors with a nearest-key suggestion (a typo like
//! `alpa = 10` must not run with the default).

use serde::Serialize;

use crate::constants::choose_delta;
use crate::error::{Error, Result};
use crate::params::Params;

/// Which experiment the harness runs; selected by the CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CheckParams,
    Simulate,
    Attractor,
    Rotation,
    Sweep,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::CheckParams => "check-params",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Attractor => "attractor",
            ExperimentKind::Rotation => "rotation",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

/// Fully resolved experiment description; serialized into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: Params,
    /// Forward horizon for `simulate` and `rotation`.
    pub horizon: f64,
    /// Pullback horizons for `attractor` (also the absorbing-check ladder).
    pub t_ladder: Vec<f64>,
    /// Curve grid resolution.
    pub n_p: usize,
    pub n_realizations: usize,
    pub n_ics: usize,
    /// Matched-grid Hausdorff tolerance for curve convergence.
    pub curve_tol: f64,
    /// Checkpoint count for curve evolutions and order checks.
    pub n_checkpoints: usize,
    /// Sweep grid (lexicographic over alpha, then kappa).
    pub alpha_list: Vec<f64>,
    pub kappa_list: Vec<f64>,
    /// Whether `delta` was chosen automatically; sweeps re-derive it per
    /// grid point in that case (a fixed weight is rarely valid grid-wide).
    pub delta_auto: bool,
}

impl ExperimentConfig {
    /// Lexicographically ordered sweep jobs.
    pub fn sweep_grid(&self) -> Vec<(f64, f64)> {
        let mut jobs = Vec::with_capacity(self.alpha_list.len() * self.kappa_list.len());
        for &alpha in &self.alpha_list {
            for &kappa in &self.kappa_list {
                jobs.push((alpha, kappa));
            }
        }
        jobs
    }
}

const VALID_KEYS: &[&str] = &[
    "alpha",
    "kappa",
    "delta",
    "length",
    "f",
    "h1",
    "n_modes",
    "n_quad",
    "dt",
    "seed",
    "t",
    "t_ladder",
    "n_p",
    "n_realizations",
    "n_ics",
    "curve_tol",
    "n_checkpoints",
    "alpha_list",
    "kappa_list",
];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            let val = (prev + cost).min(row[j] + 1).min(row[j + 1] + 1);
            prev = row[j + 1];
            row[j + 1] = val;
        }
    }
    row[b.len()]
}

fn nearest_key(key: &str) -> &'static str {
    VALID_KEYS
        .iter()
        .min_by_key(|k| levenshtein(key, k))
        .copied()
        .unwrap_or("alpha")
}

fn parse_f64(key: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| Error::Config(format!("key `{key}`: expected a number, got `{raw}`")))
}

fn parse_usize(key: &str, raw: &str) -> Result<usize> {
    raw.parse::<usize>()
        .map_err(|_| Error::Config(format!("key `{key}`: expected a non-negative integer, got `{raw}`")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    let inner = raw
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| {
            Error::Config(format!("key `{key}`: expected a bracketed list like [0.1, 0.2], got `{raw}`"))
        })?;
    let trimmed = inner.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|tok| parse_f64(key, tok.trim()))
        .collect()
}

/// Parse and validate a config document for the given experiment kind.
pub fn load_config(text: &str, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{key}` (keys may be assigned once)",
                lineno + 1
            )));
        }
        entries.push((key, value));
    }

    let is_channel_key = |k: &str| {
        k.strip_prefix('h')
            .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
    };
    for (key, _) in &entries {
        if !VALID_KEYS.contains(&key.as_str()) && !is_channel_key(key) {
            return Err(Error::Config(format!(
                "unknown key `{key}` (did you mean `{}`?)",
                nearest_key(key)
            )));
        }
    }

    let get = |name: &str| entries.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());

    let alpha = parse_f64("alpha", get("alpha").ok_or_else(|| {
        Error::Config("missing required key `alpha`".into())
    })?)?;
    let kappa = parse_f64("kappa", get("kappa").ok_or_else(|| {
        Error::Config("missing required key `kappa`".into())
    })?)?;
    let length = match get("length") {
        Some(raw) => parse_f64("length", raw)?,
        None => std::f64::consts::PI,
    };
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Config(format!("key `length`: must be positive, got {length}")));
    }
    let lambda1 = kappa * (std::f64::consts::PI / length).powi(2);
    let (delta, delta_auto) = match get("delta") {
        None => (choose_delta(alpha, lambda1), true),
        Some("auto") => (choose_delta(alpha, lambda1), true),
        Some(raw) => (parse_f64("delta", raw)?, false),
    };
    let f_coeffs = match get("f") {
        Some(raw) => parse_list("f", raw)?,
        None => Vec::new(),
    };

    // Noise channels h1, h2, ...: contiguous from 1.
    let mut h_coeffs = Vec::new();
    for j in 1.. {
        match get(&format!("h{j}")) {
            Some(raw) => h_coeffs.push(parse_list(&format!("h{j}"), raw)?),
            None => break,
        }
    }
    if h_coeffs.is_empty() {
        if let Some((key, _)) = entries.iter().find(|(k, _)| is_channel_key(k)) {
            return Err(Error::Config(format!(
                "noise channels must be numbered contiguously from h1; found `{key}` without h1"
            )));
        }
        h_coeffs.push(vec![0.1]);
    } else if let Some((key, _)) = entries
        .iter()
        .find(|(k, _)| is_channel_key(k) && !(1..=h_coeffs.len()).any(|j| k == &format!("h{j}")))
    {
        return Err(Error::Config(format!(
            "noise channels must be numbered contiguously from h1; found `{key}` after a gap"
        )));
    }

    let params = Params {
        alpha,
        kappa,
        delta,
        domain_length: length,
        f_coeffs,
        h_coeffs,
        n_modes: match get("n_modes") {
            Some(raw) => parse_usize("n_modes", raw)?,
            None => 32,
        },
        n_quad: 0, // placeholder, resolved below
        dt: match get("dt") {
            Some(raw) => parse_f64("dt", raw)?,
            None => 1e-3,
        },
        seed: match get("seed") {
            Some(raw) => raw.parse::<u64>().map_err(|_| {
                Error::Config(format!("key `seed`: expected an unsigned integer, got `{raw}`"))
            })?,
            None => 0,
        },
    };
    let mut params = params;
    params.n_quad = match get("n_quad") {
        Some(raw) => parse_usize("n_quad", raw)?,
        None => 2 * params.n_modes,
    };
    params.validate().map_err(|e| Error::Config(e.to_string()))?;

    let horizon = match get("t") {
        Some(raw) => parse_f64("t", raw)?,
        None => 10.0,
    };
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("key `t`: horizon must be >= 0, got {horizon}")));
    }
    let t_ladder = match get("t_ladder") {
        Some(raw) => parse_list("t_ladder", raw)?,
        None => vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0],
    };
    if t_ladder.is_empty() {
        return Err(Error::Config("key `t_ladder`: ladder must be nonempty".into()));
    }
    if t_ladder.windows(2).any(|w| w[1] <= w[0]) || t_ladder.iter().any(|&t| t < 0.0) {
        return Err(Error::Config(
            "key `t_ladder`: horizons must be non-negative and strictly increasing".into(),
        ));
    }
    let n_p = match get("n_p") {
        Some(raw) => parse_usize("n_p", raw)?,
        None => 128,
    };
    if n_p < 2 {
        return Err(Error::Config(format!("key `n_p`: need at least 2 curve points, got {n_p}")));
    }
    let n_realizations = match get("n_realizations") {
        Some(raw) => parse_usize("n_realizations", raw)?.max(1),
        None => 1,
    };
    let n_ics = match get("n_ics") {
        Some(raw) => parse_usize("n_ics", raw)?.max(1),
        None => 8,
    };
    let curve_tol = match get("curve_tol") {
        Some(raw) => parse_f64("curve_tol", raw)?,
        None => 1e-4,
    };
    if !curve_tol.is_finite() || curve_tol <= 0.0 {
        return Err(Error::Config(format!("key `curve_tol`: must be positive, got {curve_tol}")));
    }
    let n_checkpoints = match get("n_checkpoints") {
        Some(raw) => parse_usize("n_checkpoints", raw)?,
        None => 20,
    };
    let alpha_list = match get("alpha_list") {
        Some(raw) => parse_list("alpha_list", raw)?,
        None => vec![alpha],
    };
    let kappa_list = match get("kappa_list") {
        Some(raw) => parse_list("kappa_list", raw)?,
        None => vec![kappa],
    };
    if alpha_list.is_empty() || kappa_list.is_empty() {
        return Err(Error::Config("sweep lists must be nonempty".into()));
    }

    Ok(ExperimentConfig {
        kind,
        params,
        horizon,
        t_ladder,
        n_p,
        n_realizations,
        n_ics,
        curve_tol,
        n_checkpoints,
        alpha_list,
        kappa_list,
        delta_auto,
    })
}
