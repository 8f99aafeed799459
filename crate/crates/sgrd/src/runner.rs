//! Experiment orchestration and artifact emission.
//!
//! `run` takes a resolved [`ExperimentConfig`], builds a worker pool, and
//! executes the selected experiment, writing everything a reader needs into
//! one output directory:
//!
//! * `manifest.json` — the full resolved configuration.  Replaying a
//!   manifest reproduces every numeric artifact bit-for-bit on the same
//!   build, so the manifest deliberately contains no output paths, worker
//!   counts, or timestamps (none of those may influence results).
//! * `summary.json` — derived constants, regime flags, and the headline
//!   numbers of the experiment (radii, convergence flags, rotation number).
//! * CSV files — plot-ready trajectories, curves, and tables.
//!
//! Scientific failures (a regime flag that is false, a ladder that did not
//! converge, an absorbing check that landed outside the radius) are report
//! fields, never process errors: sweeps must be able to traverse failing
//! regions of parameter space.  Process errors are reserved for broken
//! configs, numerical blow-up, and I/O.
//!
//! Determinism: every stochastic object derives its stream from the master
//! seed (sweep rows via `derive_seed(master, grid_index)`), parallel maps
//! collect in input order, all containers serialized here have fixed field
//! order, and floats are printed with Rust's shortest-round-trip formatter.
//! Output bytes therefore depend only on (config, seed, build), not on the
//! worker count or scheduler.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::{
    absorbing_check, absorbing_radius, attracting_radius, estimate_attractor, evolve_curve,
    q_spread, tempered_ics, AbsorbingRow, HorizontalCurve,
};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::constants::{ledger_constants, ConstantsLedger};
use crate::dynamics::{Integrator, RecordSpec, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::geometry::{torus_reduce, EnergyGeometry};
use crate::noise::{
    derive_seed, tempered_bounds_on_window, NoisePath, OuPath, TemperedBoundEstimate,
};
use crate::params::Params;
use crate::rotation::{ensemble_rho, order_check, OrderReport, RotationEstimate};
use crate::spectral::SpectralOperator;

/// Realization id of the pullback path used by the curve battery inside a
/// sweep row, kept away from the forward ids `0..n_realizations` used by the
/// rotation battery so the two sub-experiments draw independent streams.
const CURVE_REALIZATION: u64 = 0x4355_5256; // "CURV"

/// Stream index (see `derive_seed`) for validation initial conditions.
const VALIDATION_SEED_INDEX: u64 = 1;
/// Stream index for absorbing-check initial conditions.
const ABSORBING_SEED_INDEX: u64 = 2;

/// Map an error to the process exit code contract:
/// `2` config/parameter/usage errors, `3` numerical blow-up, `4` I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::Regime(_)
        | Error::Shape(_)
        | Error::Window(_) => 2,
        Error::BlowUp { .. } => 3,
        Error::Io(_) | Error::Serialize(_) => 4,
    }
}

/// Execute the experiment described by `cfg`, writing artifacts into
/// `out_dir` (created if missing).  `workers` bounds the worker pool;
/// `None` or `Some(0)` uses all cores.  Results are identical either way.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_inner(cfg, out_dir))
}

fn run_inner(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("manifest.json"), cfg)?;
    match cfg.kind {
        ExperimentKind::CheckParams => run_check_params(cfg, out_dir),
        ExperimentKind::Simulate => run_simulate(cfg, out_dir),
        ExperimentKind::Attractor => run_attractor(cfg, out_dir),
        ExperimentKind::Rotation => run_rotation(cfg, out_dir),
        ExperimentKind::Sweep => run_sweep(cfg, out_dir),
    }
}

fn build_stage(params: &Params) -> Result<(SpectralOperator, EnergyGeometry)> {
    let op = SpectralOperator::new(params.kappa, params.domain_length, params.n_modes, params.n_quad)?;
    let geom = EnergyGeometry::new(params, &op)?;
    Ok((op, geom))
}

// ---------------------------------------------------------------------------
// check-params

#[derive(Serialize)]
struct CheckParamsSummary {
    kind: &'static str,
    ledger: ConstantsLedger,
}

fn run_check_params(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let (op, _geom) = build_stage(&cfg.params)?;
    let ledger = ledger_constants(&cfg.params, &op);
    write_json(&out_dir.join("summary.json"), &CheckParamsSummary {
        kind: cfg.kind.as_str(),
        ledger,
    })
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimulateSummary {
    kind: &'static str,
    ledger: ConstantsLedger,
    horizon: f64,
    n_recorded: usize,
    final_s: f64,
    final_s_mod_2pi: f64,
    final_q_norm: f64,
    /// Noise-envelope suprema over the simulated window (`None` when the
    /// fluctuation gap is not positive, so no envelope rate exists).
    tempered: Option<TemperedBoundEstimate>,
    absorbing_radius: Option<f64>,
    attracting_radius: Option<f64>,
}

/// Envelope bounds and the two radii on a window, when the gap allows them.
fn radii_on_window(
    params: &Params,
    op: &SpectralOperator,
    ledger: &ConstantsLedger,
    path: &NoisePath,
    ou: &OuPath,
    t_begin: f64,
    t_end: f64,
) -> Result<(Option<TemperedBoundEstimate>, Option<f64>, Option<f64>)> {
    if ledger.a <= 0.0 {
        return Ok((None, None, None));
    }
    let tb = tempered_bounds_on_window(
        path,
        ou,
        &params.padded_h(),
        op,
        0.5 * ledger.a,
        t_begin,
        t_end,
    )?;
    let r0 = absorbing_radius(ledger, &tb)?;
    let r1 = attracting_radius(ledger, &tb)?;
    Ok((Some(tb), Some(r0), Some(r1)))
}

/// Record stride that keeps a trajectory CSV near (but never above) ~1000
/// data rows regardless of step count.
fn csv_stride(n_steps: usize) -> usize {
    n_steps.div_ceil(1000).max(1)
}

fn run_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let params = &cfg.params;
    let (op, geom) = build_stage(params)?;
    let ledger = ledger_constants(params, &op);

    let path = NoisePath::sample(params.n_channels(), 0.0, cfg.horizon, params.dt, params.seed, 0)?;
    let ou = OuPath::generate(&path);
    let mut integ = Integrator::new(params, &op, &geom)?;
    let y0 = crate::geometry::State::zeros(params.n_modes);
    let rec = integ.integrate(
        y0,
        &path,
        &ou,
        0.0,
        cfg.horizon,
        RecordSpec::every(csv_stride(path.n_steps())),
    )?;

    write_text(&out_dir.join("trajectory.csv"), &trajectory_csv(&rec))?;

    let (tempered, r0, r1) = radii_on_window(params, &op, &ledger, &path, &ou, 0.0, cfg.horizon)?;
    let last = rec.times.len() - 1;
    write_json(&out_dir.join("summary.json"), &SimulateSummary {
        kind: cfg.kind.as_str(),
        ledger,
        horizon: cfg.horizon,
        n_recorded: rec.times.len(),
        final_s: rec.s[last],
        final_s_mod_2pi: torus_reduce(rec.s[last]),
        final_q_norm: rec.q_norm[last],
        tempered,
        absorbing_radius: r0,
        attracting_radius: r1,
    })
}

// ---------------------------------------------------------------------------
// attractor

#[derive(Serialize)]
struct AttractorSummary {
    kind: &'static str,
    ledger: ConstantsLedger,
    converged: bool,
    pullback_t: f64,
    /// Matched-grid Hausdorff distance between the last two ladder iterates
    /// (`null` when the ladder had a single rung).
    hausdorff_step: f64,
    /// `(horizon, distance to previous iterate)` per rung.
    hausdorff_history: Vec<(f64, f64)>,
    /// Max energy distance of validation trajectories to the final curve.
    q_residual: Option<f64>,
    /// Measured Lipschitz ratio of the final curve (graph regime wants < 1).
    lipschitz_ratio: f64,
    /// Worst adjacent ordering gap seen while evolving (negative = inversion).
    min_order_gap: f64,
    tempered: Option<TemperedBoundEstimate>,
    absorbing_radius: Option<f64>,
    attracting_radius: Option<f64>,
    /// Per-horizon absorbing-set check (empty when the gap is not positive).
    absorbing: Vec<AbsorbingRow>,
}

fn run_attractor(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let params = &cfg.params;
    let (op, geom) = build_stage(params)?;
    let ledger = ledger_constants(params, &op);

    let t_max = *cfg.t_ladder.last().expect("config guarantees a nonempty ladder");
    let path = NoisePath::sample(params.n_channels(), -t_max, 0.0, params.dt, params.seed, 0)?;
    let ou = OuPath::generate(&path);

    let seed_curve = HorizontalCurve::flat(cfg.n_p, params.n_modes);
    let validation = tempered_ics(
        cfg.n_ics,
        10.0,
        params.n_modes,
        &geom,
        derive_seed(params.seed, VALIDATION_SEED_INDEX),
    );
    let est = estimate_attractor(
        params,
        &op,
        &geom,
        &path,
        &ou,
        &seed_curve,
        &cfg.t_ladder,
        cfg.curve_tol,
        &validation,
    )?;
    let lipschitz = est.curve.lipschitz_verify(&geom)?;

    let absorbing = if ledger.a > 0.0 {
        let ics = tempered_ics(
            16,
            1e3,
            params.n_modes,
            &geom,
            derive_seed(params.seed, ABSORBING_SEED_INDEX),
        );
        absorbing_check(params, &op, &geom, &ledger, &path, &ou, &ics, &cfg.t_ladder, 0.5 * ledger.a)?
    } else {
        Vec::new()
    };

    write_text(&out_dir.join("curve.csv"), &curve_csv(&est.curve))?;

    let (tempered, r0, r1) = radii_on_window(params, &op, &ledger, &path, &ou, -t_max, 0.0)?;
    write_json(&out_dir.join("summary.json"), &AttractorSummary {
        kind: cfg.kind.as_str(),
        ledger,
        converged: est.converged,
        pullback_t: est.pullback_t,
        hausdorff_step: est.hausdorff_step,
        hausdorff_history: est.history,
        q_residual: est.q_residual,
        lipschitz_ratio: lipschitz.max_ratio,
        min_order_gap: est.min_order_gap,
        tempered,
        absorbing_radius: r0,
        attracting_radius: r1,
        absorbing: absorbing.clone(),
    })?;
    write_text(&out_dir.join("absorbing.csv"), &absorbing_csv(&absorbing))
}

// ---------------------------------------------------------------------------
// rotation

#[derive(Serialize)]
struct RotationSummary {
    kind: &'static str,
    ledger: ConstantsLedger,
    estimate: RotationEstimate,
    order: OrderReport,
}

fn run_rotation(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let params = &cfg.params;
    let (op, geom) = build_stage(params)?;
    let ledger = ledger_constants(params, &op);

    let estimate = ensemble_rho(
        params,
        &op,
        &geom,
        cfg.n_realizations,
        cfg.n_ics,
        cfg.horizon,
        params.seed,
    )?;

    // Order diagnostics and per-IC trajectories ride on realization 0, the
    // same path the first ensemble row used.
    let path = NoisePath::sample(params.n_channels(), 0.0, cfg.horizon, params.dt, params.seed, 0)?;
    let ou = OuPath::generate(&path);

    let n_pts = cfg.n_ics.max(2);
    let points: Vec<_> = (0..n_pts)
        .map(|i| geom.p_embed(crate::TWO_PI * i as f64 / n_pts as f64, params.n_modes))
        .collect();
    let order = order_check(
        params,
        &op,
        &geom,
        &path,
        &ou,
        &points,
        cfg.horizon,
        cfg.n_checkpoints.max(1),
    )?;

    let ics = tempered_ics(cfg.n_ics, 2.0, params.n_modes, &geom, params.seed);
    let proto = Integrator::new(params, &op, &geom)?;
    let stride = csv_stride(path.n_steps());
    let records = ics
        .par_iter()
        .map(|ic| {
            let mut integ = proto.clone();
            integ.integrate(ic.clone(), &path, &ou, 0.0, cfg.horizon, RecordSpec::every(stride))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("ic,t,s,s_mod_2pi,q_norm\n");
    for (i, rec) in records.iter().enumerate() {
        for k in 0..rec.times.len() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                i,
                rec.times[k],
                rec.s[k],
                torus_reduce(rec.s[k]),
                rec.q_norm[k]
            );
        }
    }
    write_text(&out_dir.join("rotation.csv"), &csv)?;

    write_json(&out_dir.join("summary.json"), &RotationSummary {
        kind: cfg.kind.as_str(),
        ledger,
        estimate,
        order,
    })
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Serialize)]
struct SweepSummary {
    kind: &'static str,
    n_jobs: usize,
    n_failed: usize,
}

/// One phase-table row.  Metric fields are `None` (CSV `NaN`) when the row's
/// battery failed; the `error` column then says why.
struct SweepRow {
    alpha: f64,
    kappa: f64,
    delta: f64,
    a: f64,
    a_positive: bool,
    curve_regime: bool,
    gamma_exists: bool,
    regime_1d: bool,
    lipschitz_ratio: Option<f64>,
    min_order_gap: Option<f64>,
    q_spread: Option<f64>,
    rho_hat: Option<f64>,
    rho_within_spread: Option<f64>,
    error: Option<String>,
}

struct SweepMetrics {
    lipschitz_ratio: f64,
    min_order_gap: f64,
    q_spread: Option<f64>,
    rho_hat: f64,
    rho_within_spread: f64,
}

fn sweep_metrics(cfg: &ExperimentConfig, params: &Params) -> Result<SweepMetrics> {
    params.validate()?;
    let (op, geom) = build_stage(params)?;
    let t = cfg.horizon;

    // Curve battery: evolve a flat seed curve over the pullback window.
    let path = NoisePath::sample(params.n_channels(), -t, 0.0, params.dt, params.seed, CURVE_REALIZATION)?;
    let ou = OuPath::generate(&path);
    let seed_curve = HorizontalCurve::flat(cfg.n_p, params.n_modes);
    let outcome = evolve_curve(&seed_curve, params, &op, &geom, &path, &ou, -t, 0.0, 0)?;
    let lipschitz = outcome.curve.lipschitz_verify(&geom)?;

    // Collapse battery: pull a spread of initial conditions back over the
    // same window and measure the fluctuation spread at nearby angles.
    let ics = tempered_ics(
        cfg.n_ics.max(8),
        10.0,
        params.n_modes,
        &geom,
        derive_seed(params.seed, VALIDATION_SEED_INDEX),
    );
    let proto = Integrator::new(params, &op, &geom)?;
    let finals = ics
        .par_iter()
        .map(|ic| {
            let mut integ = proto.clone();
            integ.pullback_solve(ic.clone(), &path, &ou, t)
        })
        .collect::<Result<Vec<_>>>()?;
    let spread = q_spread(&finals, &geom, std::f64::consts::FRAC_PI_8).map(|s| s.spread);

    // Rotation battery: one realization, the row's own forward streams.
    let est = ensemble_rho(params, &op, &geom, 1, cfg.n_ics, t, params.seed)?;

    Ok(SweepMetrics {
        lipschitz_ratio: lipschitz.max_ratio,
        min_order_gap: outcome.min_order_gap,
        q_spread: spread,
        rho_hat: est.rho_hat,
        rho_within_spread: est.within_spread,
    })
}

fn sweep_row(cfg: &ExperimentConfig, index: usize, alpha: f64, kappa: f64) -> SweepRow {
    let mut params = cfg.params.clone();
    params.alpha = alpha;
    params.kappa = kappa;
    if cfg.delta_auto {
        params = params.with_auto_delta();
    }
    params.seed = derive_seed(cfg.params.seed, index as u64);

    let lambda1 = params.lambda1();
    let a = crate::constants::compute_a(alpha, params.delta, lambda1);
    let flags = crate::constants::regime_check(alpha, a);
    let mut row = SweepRow {
        alpha,
        kappa,
        delta: params.delta,
        a,
        a_positive: flags.a_positive,
        curve_regime: flags.curve_regime,
        gamma_exists: flags.gamma_exists,
        regime_1d: flags.a_positive && flags.curve_regime && flags.gamma_exists,
        lipschitz_ratio: None,
        min_order_gap: None,
        q_spread: None,
        rho_hat: None,
        rho_within_spread: None,
        error: None,
    };
    match sweep_metrics(cfg, &params) {
        Ok(m) => {
            row.lipschitz_ratio = Some(m.lipschitz_ratio);
            row.min_order_gap = Some(m.min_order_gap);
            row.q_spread = m.q_spread;
            row.rho_hat = Some(m.rho_hat);
            row.rho_within_spread = Some(m.rho_within_spread);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let jobs = cfg.sweep_grid();
    if jobs.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    // `collect` keeps input order, so the table is lexicographic over the
    // grid and independent of scheduling.
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(alpha, kappa))| sweep_row(cfg, i, alpha, kappa))
        .collect();

    let mut csv = String::from(
        "alpha,kappa,delta,a,a_positive,curve_regime,gamma_exists,regime_1d,\
         lipschitz_ratio,min_order_gap,q_spread,rho_hat,rho_within_spread,error\n",
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.alpha,
            r.kappa,
            r.delta,
            r.a,
            r.a_positive,
            r.curve_regime,
            r.gamma_exists,
            r.regime_1d,
            fmt_opt(r.lipschitz_ratio),
            fmt_opt(r.min_order_gap),
            fmt_opt(r.q_spread),
            fmt_opt(r.rho_hat),
            fmt_opt(r.rho_within_spread),
            csv_quote(r.error.as_deref().unwrap_or("")),
        );
    }
    write_text(&out_dir.join("sweep.csv"), &csv)?;

    let n_failed = rows.iter().filter(|r| r.error.is_some()).count();
    write_json(&out_dir.join("summary.json"), &SweepSummary {
        kind: cfg.kind.as_str(),
        n_jobs: rows.len(),
        n_failed,
    })
}

// ---------------------------------------------------------------------------
// serialization helpers

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v}"),
        None => "NaN".into(),
    }
}

/// Quote a CSV field that may contain commas or quotes (the error column).
fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn trajectory_csv(rec: &TrajectoryRecord) -> String {
    let mut s = String::from("t,s,s_mod_2pi,q_norm\n");
    for i in 0..rec.times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            rec.times[i],
            rec.s[i],
            torus_reduce(rec.s[i]),
            rec.q_norm[i]
        );
    }
    s
}

/// Curve table: one row per grid angle.  Columns are the fluctuation
/// coefficients; the residual mean coordinates of a fluctuation state are
/// locked together (`u_res = -v_res / alpha`), so only `v_res` is stored.
fn curve_csv(curve: &HorizontalCurve) -> String {
    let n = curve.phi.first().map_or(0, |y| y.u.coeffs.len());
    let mut s = String::from("p");
    for i in 1..n {
        let _ = write!(s, ",u_{i}");
    }
    s.push_str(",v_res");
    for i in 1..n {
        let _ = write!(s, ",v_{i}");
    }
    s.push('\n');
    for (k, y) in curve.phi.iter().enumerate() {
        let _ = write!(s, "{}", curve.p_grid[k]);
        for c in &y.u.coeffs[1..] {
            let _ = write!(s, ",{c}");
        }
        let _ = write!(s, ",{}", y.v.coeffs[0]);
        for c in &y.v.coeffs[1..] {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
    }
    s
}

fn absorbing_csv(rows: &[AbsorbingRow]) -> String {
    let mut s = String::from("horizon,r0,max_q_norm,inside\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.horizon, r.r0, r.max_q_norm, r.inside);
    }
    s
}
