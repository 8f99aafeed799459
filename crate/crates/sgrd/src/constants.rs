//! Derived constants and regime classification.
//!
//! Everything the qualitative theory needs is a handful of scalars computed
//! from `(alpha, kappa, delta, L, f)`:
//!
//! * the spectral gap `a` of the linear part on the fluctuation subspace,
//! * the Lipschitz bound `2 / alpha` of the nonlinearity in the energy norm,
//! * the attraction-rate window `gamma in (0, a/2)` with its optimum
//!   `gamma_star = (2 - sqrt(2)) a / 2` and prefactor `M`,
//! * the envelope constants `a1 ... a7` entering the absorbing and
//!   attracting radii,
//! * the per-mode decay rates `mu_i = (-alpha +- sqrt(alpha^2 - 4 lambda_i)) / 2`.
//!
//! `ConstantsLedger` bundles them so that experiment summaries, radius
//! formulas, and regime flags all read from one audited place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::spectral::SpectralOperator;

/// Threshold on `alpha * a` above which an admissible attraction rate
/// exists: `2 sqrt(2) / (3 sqrt(2) - 4) = 6 + 4 sqrt(2)`.  Strictly stronger
/// than the curve condition `alpha * a > 8`.
pub const GAMMA_EXISTS_THRESHOLD: f64 = 11.65685424949238;

/// Decay rates of one 2x2 mode block, stored as `(re, im)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRates {
    pub mu_plus: (f64, f64),
    pub mu_minus: (f64, f64),
}

/// Which structural results apply at the given parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// The fluctuation subspace contracts at some positive rate (`a > 0`);
    /// an absorbing set exists.
    pub a_positive: bool,
    /// The gap beats four times the nonlinearity's Lipschitz bound
    /// (`a > 8 / alpha`); the attractor is a one-dimensional curve.
    pub curve_regime: bool,
    /// An admissible attraction rate exists (`alpha a > 6 + 4 sqrt(2)`);
    /// the exponential-attraction constant `M` is finite.
    pub gamma_exists: bool,
}

/// Audited bundle of every derived constant for one parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub alpha: f64,
    pub delta: f64,
    /// First nonzero Laplacian eigenvalue `kappa (pi / L)^2`.
    pub lambda1: f64,
    /// Spectral gap on the fluctuation subspace.
    pub a: f64,
    /// Lipschitz bound of the nonlinearity in the energy norm, `2 / alpha`.
    pub lf_bound: f64,
    /// Optimal attraction rate `(2 - sqrt(2)) a / 2`; `None` unless `a > 0`.
    pub gamma_star: Option<f64>,
    /// Attraction prefactor at `gamma_star`; `None` unless an admissible
    /// rate exists.
    pub big_m: Option<f64>,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub a7: f64,
    pub regime: RegimeFlags,
    /// `regime.a_positive && regime.curve_regime && regime.gamma_exists`.
    pub regime_1d: bool,
    /// Per-mode decay-rate pairs, one entry per retained mode.
    pub mu_pairs: Vec<ModeRates>,
}

/// Spectral gap `a = alpha/2 - |alpha/2 - delta lambda1 / alpha|` of the
/// linear part restricted to the fluctuation subspace.
///
/// As a function of `delta lambda1` it rises with slope `1/alpha` until
/// `delta lambda1 = alpha^2 / 2`, where it peaks at `alpha / 2`, then falls.
pub fn compute_a(alpha: f64, delta: f64, lambda1: f64) -> f64 {
    let half = 0.5 * alpha;
    half - (half - delta * lambda1 / alpha).abs()
}

/// Gap-maximizing energy weight `min(1, alpha^2 / (2 lambda1))`.
pub fn choose_delta(alpha: f64, lambda1: f64) -> f64 {
    (alpha * alpha / (2.0 * lambda1)).min(1.0)
}

/// Optimal attraction rate: the minimizer of `1/gamma + 1/(a - 2 gamma)`
/// over `(0, a/2)`, in closed form `(2 - sqrt(2)) a / 2`.
pub fn gamma_star(a: f64) -> Result<f64> {
    if a <= 0.0 {
        return Err(Error::Regime(format!("gamma_star needs a positive gap, got a = {a}")));
    }
    Ok(0.5 * (2.0 - std::f64::consts::SQRT_2) * a)
}

/// Exponential-attraction prefactor
/// `M = 1 / (1 - (2/alpha) (1/gamma + 1/(a - 2 gamma)))`.
///
/// Defined only for `gamma in (0, a/2)` with a positive denominator; always
/// `> 1` there.
pub fn attraction_constant_m(alpha: f64, a: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 0.5 * a) {
        return Err(Error::Regime(format!(
            "attraction rate gamma = {gamma} outside (0, a/2) = (0, {})",
            0.5 * a
        )));
    }
    let s = 1.0 / gamma + 1.0 / (a - 2.0 * gamma);
    let denom = 1.0 - (2.0 / alpha) * s;
    if denom <= 0.0 {
        return Err(Error::Regime(format!(
            "no attraction at gamma = {gamma}: (2/alpha)(1/gamma + 1/(a-2gamma)) = {} >= 1",
            (2.0 / alpha) * s
        )));
    }
    Ok(1.0 / denom)
}

/// Classify the parameter point.  `gamma_exists` uses the closed-form
/// minimum `sqrt(2) / ((3 sqrt(2) - 4) a)` of the rate expression, i.e. the
/// condition `alpha a > 6 + 4 sqrt(2)`.
pub fn regime_check(alpha: f64, a: f64) -> RegimeFlags {
    RegimeFlags {
        a_positive: a > 0.0,
        curve_regime: a > 8.0 / alpha,
        gamma_exists: alpha * a > GAMMA_EXISTS_THRESHOLD,
    }
}

/// Decay rates of the 2x2 block with eigenvalue `lambda`:
/// `mu_pm = (-alpha +- sqrt(alpha^2 - 4 lambda)) / 2`, complex when
/// `alpha^2 < 4 lambda`.
pub fn mode_rates(alpha: f64, lambda: f64) -> ModeRates {
    let disc = alpha * alpha - 4.0 * lambda;
    if disc >= 0.0 {
        let root = disc.sqrt();
        ModeRates {
            mu_plus: ((-alpha + root) / 2.0, 0.0),
            mu_minus: ((-alpha - root) / 2.0, 0.0),
        }
    } else {
        let root = (-disc).sqrt();
        ModeRates {
            mu_plus: (-alpha / 2.0, root / 2.0),
            mu_minus: (-alpha / 2.0, -root / 2.0),
        }
    }
}

/// Build the full ledger for a validated parameter set.
///
/// The envelope constants depend on the forcing only through its plain and
/// gradient-weighted norms:
///
/// * `a1 = sqrt(alpha^2 - 3 alpha + 3)`
/// * `a2 = sqrt(3 |U| + 3 |f|^2)`
/// * `a3 = sqrt(7/4 alpha^2 |U| + 7/4 alpha^2 |f|^2 + 3 |A^(1/2) f|^2)`
/// * `a4 = sqrt(2 / (2 - delta))`
/// * `a5 = (4 a1 + 2 sqrt(7) alpha |1 - alpha|) / a + 8 sqrt(3) a1 a4 / a^2`
/// * `a6 = (4 + 4 sqrt(3) |1 - alpha|) / a + 8 sqrt(3) a4 / a^2`
/// * `a7 = (2 a2 + 2 a3) / a + 2 sqrt(3) a2 a4 / a^2`
///
/// `a5..a7` are only meaningful when `a > 0`; they are stored as `NaN`
/// otherwise so that accidental use is loud.
pub fn ledger_constants(params: &Params, op: &SpectralOperator) -> ConstantsLedger {
    let alpha = params.alpha;
    let delta = params.delta;
    let lambda1 = params.lambda1();
    let a = compute_a(alpha, delta, lambda1);
    let length = params.domain_length;

    let f = params.padded_f();
    let f_sq: f64 = f.iter().map(|c| c * c).sum();
    let fgrad_sq: f64 = f.iter().zip(op.lambdas()).map(|(c, l)| l * c * c).sum();

    let a1 = (alpha * alpha - 3.0 * alpha + 3.0).sqrt();
    let a2 = (3.0 * length + 3.0 * f_sq).sqrt();
    let a3 = (1.75 * alpha * alpha * length + 1.75 * alpha * alpha * f_sq + 3.0 * fgrad_sq).sqrt();
    let a4 = (2.0 / (2.0 - delta)).sqrt();

    let sqrt3 = 3.0_f64.sqrt();
    let sqrt7 = 7.0_f64.sqrt();
    let (a5, a6, a7) = if a > 0.0 {
        (
            (4.0 * a1 + 2.0 * sqrt7 * alpha * (1.0 - alpha).abs()) / a
                + 8.0 * sqrt3 * a1 * a4 / (a * a),
            (4.0 + 4.0 * sqrt3 * (1.0 - alpha).abs()) / a + 8.0 * sqrt3 * a4 / (a * a),
            (2.0 * a2 + 2.0 * a3) / a + 2.0 * sqrt3 * a2 * a4 / (a * a),
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };

    let regime = regime_check(alpha, a);
    let gs = gamma_star(a).ok();
    let big_m = gs.and_then(|g| attraction_constant_m(alpha, a, g).ok());

    let mu_pairs = op.lambdas().iter().map(|&l| mode_rates(alpha, l)).collect();

    ConstantsLedger {
        alpha,
        delta,
        lambda1,
        a,
        lf_bound: 2.0 / alpha,
        gamma_star: gs,
        big_m,
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
        a7,
        regime,
        regime_1d: regime.a_positive && regime.curve_regime && regime.gamma_exists,
        mu_pairs,
    }
}
