//! Rotation-number estimation and order preservation.
//!
//! The mean (torus) coordinate of a solution winds; the rotation number is
//! the almost-sure limit of `s(T) / T`.  Its existence is frequency locking:
//! every solution winds at the same asymptotic rate, independent of the
//! initial condition, and the rate is deterministic (the same for almost
//! every noise path).
//!
//! We estimate with the endpoint quotient `(s(T) - s(0)) / T` on the
//! *unreduced* coordinate -- winding is accumulated by the integrator, never
//! recovered by re-wrapping -- and report agreement two ways:
//!
//! * within one realization, across initial conditions (the finite-`T`
//!   sandwich between shifted copies gives agreement up to `4 pi / T`);
//! * across realizations (concentration of the per-realization means).
//!
//! `order_check` verifies the comparison principle behind the sandwich: two
//! solutions driven by the same path never swap the order of their mean
//! coordinates.

use rayon::prelude::*;

use crate::attractor::tempered_ics;
use crate::dynamics::{Integrator, RecordSpec};
use crate::error::{Error, Result};
use crate::geometry::{EnergyGeometry, State};
use crate::noise::{NoisePath, OuPath};
use crate::params::Params;
use crate::spectral::SpectralOperator;

/// Endpoint estimate of the rotation number over `[0, T]`.
pub fn estimate_rho(
    params: &Params,
    op: &SpectralOperator,
    geom: &EnergyGeometry,
    path: &NoisePath,
    ou: &OuPath,
    y0: State,
    horizon: f64,
) -> Result<f64> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rotation horizon must be positive, got {horizon}"
        )));
    }
    let mut integ = Integrator::new(params, op, geom)?;
    let rec = integ.integrate(y0, path, ou, 0.0, horizon, RecordSpec::endpoints())?;
    let s0 = rec.s.first().expect("endpoint record");
    let s1 = rec.s.last().expect("endpoint record");
    Ok((s1 - s0) / horizon)
}

/// Ensemble rotation estimate: all `(realization, initial condition)` pairs,
/// with the spreads the theory says should collapse.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RotationEstimate {
    /// Grand mean over realizations and initial conditions.
    pub rho_hat: f64,
    pub horizon: f64,
    /// `per_ic[realization][ic]`: every endpoint estimate.
    pub per_ic: Vec<Vec<f64>>,
    /// Max over realizations of the max pairwise estimate difference
    /// within that realization (should shrink like `1/T`).
    pub within_spread: f64,
    /// Half the range of per-realization means (should concentrate: the
    /// rotation number is deterministic).
    pub ci_halfwidth: f64,
    pub method: &'static str,
}

/// Run `n_realizations x n_ics` endpoint estimates.  Initial conditions are
/// shared across realizations; each realization owns one noise path.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_rho(
    params: &Params,
    op: &SpectralOperator,
    geom: &EnergyGeometry,
    n_realizations: usize,
    n_ics: usize,
    horizon: f64,
    master_seed: u64,
) -> Result<RotationEstimate> {
    if n_realizations == 0 || n_ics == 0 {
        return Err(Error::InvalidParameter(
            "ensemble needs at least one realization and one initial condition".into(),
        ));
    }
    let ics = tempered_ics(n_ics, 2.0, params.n_modes, geom, master_seed);
    let mut per_ic = Vec::with_capacity(n_realizations);
    for rid in 0..n_realizations {
        let path = NoisePath::sample(
            params.h_coeffs.len(),
            0.0,
            horizon,
            params.dt,
            master_seed,
            rid as u64,
        )?;
        let ou = OuPath::generate(&path);
        let rhos = ics
            .par_iter()
            .map(|ic| estimate_rho(params, op, geom, &path, &ou, ic.clone(), horizon))
            .collect::<Result<Vec<f64>>>()?;
        per_ic.push(rhos);
    }

    let mut within_spread = 0.0_f64;
    let mut means = Vec::with_capacity(n_realizations);
    for rhos in &per_ic {
        let lo = rhos.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rhos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        within_spread = within_spread.max(hi - lo);
        means.push(rhos.iter().sum::<f64>() / rhos.len() as f64);
    }
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rho_hat = means.iter().sum::<f64>() / means.len() as f64;

    Ok(RotationEstimate {
        rho_hat,
        horizon,
        per_ic,
        within_spread,
        ci_halfwidth: 0.5 * (hi - lo),
        method: "endpoint",
    })
}

/// Order-preservation scan result.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct OrderReport {
    /// Adjacent-pair inversions deeper than the tolerance, summed over all
    /// recorded times.
    pub violations: usize,
    /// Deepest inversion seen (0 when order is preserved).
    pub max_gap_inversion: f64,
    /// Number of recorded times scanned.
    pub n_checked: usize,
}

/// Integrate a family of states with sorted mean coordinates against one
/// shared path and count adjacent-pair order inversions over time.
#[allow(clippy::too_many_arguments)]
pub fn order_check(
    params: &Params,
    op: &SpectralOperator,
    geom: &EnergyGeometry,
    path: &NoisePath,
    ou: &OuPath,
    points: &[State],
    horizon: f64,
    n_checkpoints: usize,
) -> Result<OrderReport> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("order check needs at least two points".into()));
    }
    let p0: Vec<f64> = points.iter().map(|y| geom.project_p(y)).collect();
    if p0.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "order check points must be sorted by mean coordinate".into(),
        ));
    }
    let proto = Integrator::new(params, op, geom)?;
    let n_steps = (horizon / params.dt).round() as usize;
    let every = n_steps.checked_div(n_checkpoints).map_or(0, |e| e.max(1));
    let records = points
        .par_iter()
        .map(|y0| {
            let mut integ = proto.clone();
            integ.integrate(y0.clone(), path, ou, 0.0, horizon, RecordSpec { every, keep_states: false })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_times = records[0].times.len();
    let tol = crate::attractor::ORDER_TOL;
    let mut violations = 0;
    let mut max_gap_inversion = 0.0_f64;
    for c in 0..n_times {
        for pair in records.windows(2) {
            let gap = pair[1].s[c] - pair[0].s[c];
            if gap < -tol {
                violations += 1;
            }
            max_gap_inversion = max_gap_inversion.max(-gap);
        }
    }
    Ok(OrderReport { violations, max_gap_inversion: max_gap_inversion.max(0.0), n_checked: n_times })
}
