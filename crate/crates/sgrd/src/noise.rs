//! Two-sided Brownian paths and the stationary Ornstein-Uhlenbeck process.
//!
//! A `NoisePath` holds i.i.d. Gaussian increments on a uniform grid that
//! must contain `t = 0`, with the path pinned to `omega(0) = 0` bit-exactly
//! (cumulative sums are anchored at the zero index, never re-based through
//! roundoff).  Streams are keyed by `(seed, realization_id, channel)`, so a
//! path is reproducible on its own and adding channels never perturbs the
//! existing ones.
//!
//! Each channel `j` drives a scalar OU process `dz_j + z_j dt = dW_j`, whose
//! stationary law is `N(0, 1/2)`.  The discrete update is exact decay plus
//! Euler noise injection: `z <- exp(-dt) z + dW`.  `OuPath` caches `z_j` on
//! the whole path grid from a stationary draw at the left edge; every solver
//! that shares the path then sees literally the same `z(t)` values, which
//! makes pullback runs at different horizons live on the same fiber and the
//! flow property hold exactly on the grid.
//!
//! The analysis needs sup-type bounds on the assembled noise field
//! `z(t) = sum_j z_j(t) h_j` relative to a slowly-growing envelope
//! `exp(eps |t|)`.  `estimate_tempered_bounds` computes the empirical
//! suprema `r = sup_t exp(-eps |t|) |z(t)|` (plus gradient- and
//! Laplacian-weighted variants) over the simulated window; they replace the
//! abstract tempered random variables in every radius formula.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, SpectralOperator};

/// Stream id used for the stationary OU initial draw (channels use `0..m`).
const OU_INIT_STREAM: u64 = u64::MAX;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive an independent sub-seed, e.g. one per sweep grid cell, so that
/// jobs never share noise streams with each other or with their parent.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x2545f4914f6cdd1d)))
}

/// Deterministic per-object RNG: seed and realization are mixed into the
/// ChaCha key, the stream selects the channel.
pub fn stream_rng(seed: u64, realization_id: u64, stream: u64) -> ChaCha8Rng {
    let mixed = splitmix64(seed ^ splitmix64(realization_id.wrapping_add(0x517cc1b727220a95)));
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(stream);
    rng
}

/// Round `x / dt` to the nearest integer, failing if it is not one.
fn grid_count(x: f64, dt: f64, what: &str) -> Result<i64> {
    let ratio = x / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-9 * (1.0 + ratio.abs()) {
        return Err(Error::Window(format!(
            "{what} = {x} is not a multiple of dt = {dt} (ratio {ratio})"
        )));
    }
    Ok(rounded as i64)
}

/// Sampled two-sided Wiener increments on a uniform grid containing 0.
#[derive(Debug, Clone)]
pub struct NoisePath {
    m: usize,
    t0: f64,
    dt: f64,
    n_steps: usize,
    zero_index: usize,
    /// `increments[k * m + j]`: increment of channel `j` over `[t_k, t_{k+1}]`.
    increments: Vec<f64>,
    /// `cum[k * m + j] = omega_j(t_k)`; exactly zero at `zero_index`.
    cum: Vec<f64>,
    seed: u64,
    realization_id: u64,
}

impl NoisePath {
    /// Sample `m` independent channels on the grid `t0, t0+dt, ..., t1`.
    ///
    /// Requires `t0 <= 0 <= t1`, both multiples of `dt`.
    pub fn sample(
        m: usize,
        t0: f64,
        t1: f64,
        dt: f64,
        seed: u64,
        realization_id: u64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one noise channel".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !(t0 <= 0.0 && t1 >= 0.0 && t0 <= t1) {
            return Err(Error::Window(format!(
                "path window [{t0}, {t1}] must contain 0"
            )));
        }
        let n_steps = grid_count(t1 - t0, dt, "window length")? as usize;
        let zero_index = grid_count(-t0, dt, "-t0")?;
        if zero_index < 0 || zero_index as usize > n_steps {
            return Err(Error::Window(format!("t = 0 falls outside the grid (index {zero_index})")));
        }
        let zero_index = zero_index as usize;

        let normal = Normal::new(0.0, dt.sqrt()).expect("dt > 0 checked above");
        let mut increments = vec![0.0; n_steps * m];
        for j in 0..m {
            let mut rng = stream_rng(seed, realization_id, j as u64);
            for k in 0..n_steps {
                increments[k * m + j] = normal.sample(&mut rng);
            }
        }
        let mut path = NoisePath {
            m,
            t0,
            dt,
            n_steps,
            zero_index,
            increments,
            cum: Vec::new(),
            seed,
            realization_id,
        };
        path.rebuild_cum();
        Ok(path)
    }

    /// Anchor cumulative sums at the zero index so `omega(0) = 0` exactly.
    fn rebuild_cum(&mut self) {
        let (m, n, z) = (self.m, self.n_steps, self.zero_index);
        let mut cum = vec![0.0; (n + 1) * m];
        for j in 0..m {
            for k in z..n {
                cum[(k + 1) * m + j] = cum[k * m + j] + self.increments[k * m + j];
            }
            for k in (0..z).rev() {
                cum[k * m + j] = cum[(k + 1) * m + j] - self.increments[k * m + j];
            }
        }
        self.cum = cum;
    }

    pub fn n_channels(&self) -> usize {
        self.m
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.n_steps as f64 * self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization_id(&self) -> u64 {
        self.realization_id
    }

    /// Time of grid point `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        (k as i64 - self.zero_index as i64) as f64 * self.dt
    }

    /// Grid index of time `t` (must be on the grid and inside the window).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = grid_count(t, self.dt, "t")? + self.zero_index as i64;
        if k < 0 || k as usize > self.n_steps {
            return Err(Error::Window(format!(
                "t = {t} outside path window [{}, {}]",
                self.t0,
                self.t1()
            )));
        }
        Ok(k as usize)
    }

    /// Channel values `omega_j(t_k)` at grid point `k`.
    pub fn values_at(&self, k: usize) -> &[f64] {
        &self.cum[k * self.m..(k + 1) * self.m]
    }

    /// Channel increments over `[t_k, t_{k+1}]`.
    pub fn increments_at(&self, k: usize) -> &[f64] {
        &self.increments[k * self.m..(k + 1) * self.m]
    }

    /// Time-shift the path: the result represents `omega(. + s) - omega(s)`
    /// with `s = steps * dt`.  Increments are unchanged; only the origin
    /// moves, so the shifted window must still contain the new zero.
    pub fn shift_steps(&self, steps: i64) -> Result<NoisePath> {
        let new_zero = self.zero_index as i64 + steps;
        if new_zero < 0 || new_zero as usize > self.n_steps {
            return Err(Error::Window(format!(
                "shift by {steps} steps moves the origin outside the sampled window"
            )));
        }
        let mut shifted = self.clone();
        shifted.zero_index = new_zero as usize;
        shifted.t0 = -(new_zero as f64) * self.dt;
        shifted.rebuild_cum();
        Ok(shifted)
    }

    /// Dump increments for replay: header `(m, n_steps, dt, t0)` then the
    /// increment table, all little-endian.
    pub fn write_binary<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&(self.n_steps as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&self.t0.to_le_bytes())?;
        for x in &self.increments {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`NoisePath::write_binary`].  Replayed paths carry
    /// `seed = realization_id = 0`.
    pub fn read_binary<R: std::io::Read>(r: &mut R) -> Result<NoisePath> {
        let mut u = [0u8; 8];
        r.read_exact(&mut u)?;
        let m = u64::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let n_steps = u64::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let dt = f64::from_le_bytes(u);
        r.read_exact(&mut u)?;
        let t0 = f64::from_le_bytes(u);
        if m == 0 || !dt.is_finite() || dt <= 0.0 || !t0.is_finite() {
            return Err(Error::Window("corrupt path header".into()));
        }
        let zero_index = grid_count(-t0, dt, "-t0")?;
        if zero_index < 0 || zero_index as usize > n_steps {
            return Err(Error::Window("replayed grid does not contain t = 0".into()));
        }
        let mut increments = vec![0.0; n_steps * m];
        for x in &mut increments {
            r.read_exact(&mut u)?;
            *x = f64::from_le_bytes(u);
            if !x.is_finite() {
                return Err(Error::Window("non-finite increment in replayed path".into()));
            }
        }
        let mut path = NoisePath {
            m,
            t0,
            dt,
            n_steps,
            zero_index: zero_index as usize,
            increments,
            cum: Vec::new(),
            seed: 0,
            realization_id: 0,
        };
        path.rebuild_cum();
        Ok(path)
    }
}

/// Scalar OU states, one per channel, tagged with their time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuState {
    pub z: Vec<f64>,
    pub t: f64,
}

/// Draw every channel from the stationary law `N(0, 1/2)`.
pub fn ou_init_stationary(m: usize, t: f64, rng: &mut impl Rng) -> OuState {
    let normal = Normal::new(0.0, 0.5_f64.sqrt()).expect("positive std");
    OuState { z: (0..m).map(|_| normal.sample(rng)).collect(), t }
}

/// One step of the exact-decay / Euler-noise update:
/// `z <- exp(-dt) z + dW`.
pub fn ou_advance(state: &mut OuState, dw: &[f64], dt: f64) {
    debug_assert_eq!(state.z.len(), dw.len(), "channel count mismatch");
    let decay = (-dt).exp();
    for (z, d) in state.z.iter_mut().zip(dw) {
        *z = decay * *z + d;
    }
    state.t += dt;
}

/// Assemble the noise field `sum_j z_j h_j` in coefficient space.
pub fn assemble_z(z: &[f64], h_padded: &[Vec<f64>], n_modes: usize) -> SpectralField {
    debug_assert_eq!(z.len(), h_padded.len(), "channel count mismatch");
    let mut field = SpectralField::zeros(n_modes);
    for (zj, h) in z.iter().zip(h_padded) {
        for (c, hc) in field.coeffs.iter_mut().zip(h) {
            *c += zj * hc;
        }
    }
    field
}

/// OU channel values cached on a path grid (shared fiber for all solvers).
#[derive(Debug, Clone)]
pub struct OuPath {
    m: usize,
    /// `values[k * m + j] = z_j(t_k)`.
    values: Vec<f64>,
    n_points: usize,
}

impl OuPath {
    /// Run the OU recursion over the whole path from a stationary draw at
    /// the left edge.  The draw uses a dedicated stream of the path's key,
    /// so it is as reproducible as the increments themselves.
    pub fn generate(path: &NoisePath) -> OuPath {
        let mut rng = stream_rng(path.seed(), path.realization_id(), OU_INIT_STREAM);
        let init = ou_init_stationary(path.n_channels(), path.t0(), &mut rng);
        Self::generate_from(path, init)
    }

    /// Same, but with an explicit state at the left edge of the window.
    pub fn generate_from(path: &NoisePath, init: OuState) -> OuPath {
        let m = path.n_channels();
        assert_eq!(init.z.len(), m, "channel count mismatch");
        let n_points = path.n_steps() + 1;
        let mut values = vec![0.0; n_points * m];
        values[..m].copy_from_slice(&init.z);
        let mut state = init;
        for k in 0..path.n_steps() {
            ou_advance(&mut state, path.increments_at(k), path.dt());
            values[(k + 1) * m..(k + 2) * m].copy_from_slice(&state.z);
        }
        OuPath { m, values, n_points }
    }

    pub fn n_channels(&self) -> usize {
        self.m
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Channel values at grid point `k`.
    pub fn z_at(&self, k: usize) -> &[f64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }
}

/// Empirical envelope bounds on the assembled noise field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TemperedBoundEstimate {
    /// `sup_t exp(-eps |t|) |z(t)|`.
    pub r: f64,
    /// Same with the gradient weight `|A^(1/2) z(t)|`.
    pub r_prime: f64,
    /// Same with the Laplacian weight `|A z(t)|`.
    pub r_double_prime: f64,
    /// Envelope rate used.
    pub epsilon: f64,
}

/// Envelope suprema of an assembled noise history `(t, z-field)`.
///
/// The envelope weight decreases away from `t = 0` in both directions, so a
/// larger `eps` can only shrink each supremum.
pub fn estimate_tempered_bounds(
    z_history: impl Iterator<Item = (f64, SpectralField)>,
    op: &SpectralOperator,
    epsilon: f64,
) -> Result<TemperedBoundEstimate> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!("envelope rate must be positive, got {epsilon}")));
    }
    let mut est =
        TemperedBoundEstimate { r: 0.0, r_prime: 0.0, r_double_prime: 0.0, epsilon };
    let mut any = false;
    for (t, field) in z_history {
        any = true;
        let w = (-epsilon * t.abs()).exp();
        est.r = est.r.max(w * op.weighted_norm_sq(&field, 0).sqrt());
        est.r_prime = est.r_prime.max(w * op.weighted_norm_sq(&field, 1).sqrt());
        est.r_double_prime = est.r_double_prime.max(w * op.weighted_norm_sq(&field, 2).sqrt());
    }
    if !any {
        return Err(Error::InvalidParameter("empty noise history".into()));
    }
    Ok(est)
}

/// Envelope suprema over a window `[t_begin, t_end]` of a cached OU path.
pub fn tempered_bounds_on_window(
    path: &NoisePath,
    ou: &OuPath,
    h_padded: &[Vec<f64>],
    op: &SpectralOperator,
    epsilon: f64,
    t_begin: f64,
    t_end: f64,
) -> Result<TemperedBoundEstimate> {
    let k0 = path.index_of(t_begin)?;
    let k1 = path.index_of(t_end)?;
    estimate_tempered_bounds(
        (k0..=k1).map(|k| (path.time_at(k), assemble_z(ou.z_at(k), h_padded, op.n_modes()))),
        op,
        epsilon,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn path_grid_and_pinning() {
        // [-1, 1] at dt = 0.5: 5 grid points, omega(0) at index 2, exact 0.
        let p = NoisePath::sample(1, -1.0, 1.0, 0.5, 42, 0).unwrap();
        assert_eq!(p.n_steps(), 4);
        assert_eq!(p.zero_index(), 2);
        assert_eq!(p.values_at(2)[0], 0.0);
        assert_eq!(p.time_at(0), -1.0);
        assert_eq!(p.index_of(0.5).unwrap(), 3);
        assert!(p.index_of(0.51).is_err());
        assert!(p.index_of(1.5).is_err());
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(NoisePath::sample(1, 0.5, 1.0, 0.5, 0, 0).is_err());
        assert!(NoisePath::sample(1, -1.0, -0.5, 0.5, 0, 0).is_err());
        assert!(NoisePath::sample(1, -1.3, 1.0, 0.5, 0, 0).is_err());
        assert!(NoisePath::sample(0, -1.0, 1.0, 0.5, 0, 0).is_err());
    }

    #[test]
    fn same_key_is_bit_identical() {
        let a = NoisePath::sample(2, -1.0, 1.0, 0.25, 7, 3).unwrap();
        let b = NoisePath::sample(2, -1.0, 1.0, 0.25, 7, 3).unwrap();
        assert_eq!(a.increments, b.increments);
        let c = NoisePath::sample(2, -1.0, 1.0, 0.25, 7, 4).unwrap();
        assert_ne!(a.increments, c.increments);
    }

    #[test]
    fn channels_are_stable_under_widening() {
        // Adding a channel must not change existing ones (per-channel streams).
        let a = NoisePath::sample(1, -1.0, 1.0, 0.25, 7, 3).unwrap();
        let b = NoisePath::sample(3, -1.0, 1.0, 0.25, 7, 3).unwrap();
        for k in 0..a.n_steps() {
            assert_eq!(a.increments_at(k)[0], b.increments_at(k)[0]);
        }
    }

    #[test]
    fn increment_variance_matches_brownian_scaling() {
        // Var[omega(t)] ~ |t| at both window ends, 10^4 realizations, 5%.
        let mut sum_sq_left = 0.0;
        let mut sum_sq_right = 0.0;
        let n = 10_000;
        for id in 0..n {
            let p = NoisePath::sample(1, -1.0, 1.0, 0.5, 1234, id).unwrap();
            sum_sq_left += p.values_at(0)[0].powi(2);
            sum_sq_right += p.values_at(p.n_steps())[0].powi(2);
        }
        let var_left = sum_sq_left / n as f64;
        let var_right = sum_sq_right / n as f64;
        assert!((var_left - 1.0).abs() < 0.05, "Var[omega(-1)] = {var_left}");
        assert!((var_right - 1.0).abs() < 0.05, "Var[omega(1)] = {var_right}");
    }

    #[test]
    fn shift_relabels_origin() {
        // theta_s omega (.) = omega(. + s) - omega(s) on the shared grid.
        let p = NoisePath::sample(2, -2.0, 2.0, 0.5, 9, 1).unwrap();
        let s_steps = 3; // s = 1.5
        let shifted = p.shift_steps(s_steps).unwrap();
        assert_eq!(shifted.zero_index(), p.zero_index() + 3);
        for k in 0..=p.n_steps() {
            for j in 0..2 {
                let want = p.values_at(k)[j] - p.values_at(p.zero_index() + 3)[j];
                assert_abs_diff_eq!(shifted.values_at(k)[j], want, epsilon = 1e-12);
            }
        }
        // Shift pinned exactly at the new origin.
        assert_eq!(shifted.values_at(shifted.zero_index())[0], 0.0);
        assert!(p.shift_steps(100).is_err());
    }

    #[test]
    fn ou_advance_examples() {
        // Pure decay: z = 1, dW = 0, dt = ln 2 halves the state.
        let mut st = OuState { z: vec![1.0], t: 0.0 };
        ou_advance(&mut st, &[0.0], std::f64::consts::LN_2);
        assert_abs_diff_eq!(st.z[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(st.t, std::f64::consts::LN_2, epsilon = 1e-15);
        // Repeated decay is exact: n steps of dt decay by exp(-n dt) exactly
        // up to the single-multiplication roundoff per step.
        let mut st = OuState { z: vec![1.0], t: 0.0 };
        for _ in 0..100 {
            ou_advance(&mut st, &[0.0], 0.1);
        }
        assert_abs_diff_eq!(st.z[0], (-10.0_f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn stationary_init_moments() {
        // 10^5 draws: mean within 0.01, variance within 5% of 1/2, and for
        // m = 3 the cross-channel correlations stay below 0.02.
        let mut rng = stream_rng(77, 0, 0);
        let n = 100_000;
        let m = 3;
        let mut sums = vec![0.0; m];
        let mut sq = vec![0.0; m];
        let mut cross = vec![0.0; 3];
        for _ in 0..n {
            let st = ou_init_stationary(m, 0.0, &mut rng);
            for j in 0..m {
                sums[j] += st.z[j];
                sq[j] += st.z[j] * st.z[j];
            }
            cross[0] += st.z[0] * st.z[1];
            cross[1] += st.z[0] * st.z[2];
            cross[2] += st.z[1] * st.z[2];
        }
        for j in 0..m {
            let mean = sums[j] / n as f64;
            let var = sq[j] / n as f64 - mean * mean;
            assert!(mean.abs() < 0.01, "mean[{j}] = {mean}");
            assert!((var - 0.5).abs() < 0.025, "var[{j}] = {var}");
        }
        for c in cross {
            let corr = (c / n as f64) / 0.5;
            assert!(corr.abs() < 0.02, "cross-correlation {corr}");
        }
    }

    #[test]
    fn ou_long_run_variance() {
        // Time average over 4e7 steps at dt = 1e-3 covers ~2e4 correlation
        // times, so the variance estimator has std ~0.005; the 0.017 band is
        // a 3+ sigma test of the stationary variance 1/2.
        let dt: f64 = 1e-3;
        let normal = Normal::new(0.0, dt.sqrt()).unwrap();
        let mut rng = stream_rng(5150, 0, 0);
        let mut st = OuState { z: vec![0.0], t: 0.0 };
        // Burn in past the initial transient.
        for _ in 0..10_000 {
            ou_advance(&mut st, &[normal.sample(&mut rng)], dt);
        }
        let n = 40_000_000;
        let mut sq = 0.0;
        for _ in 0..n {
            ou_advance(&mut st, &[normal.sample(&mut rng)], dt);
            sq += st.z[0] * st.z[0];
        }
        let var = sq / n as f64;
        assert!((var - 0.5).abs() < 0.017, "long-run variance {var}");
    }

    #[test]
    fn ou_path_matches_manual_recursion() {
        let p = NoisePath::sample(2, -1.0, 1.0, 0.25, 3, 8).unwrap();
        let ou = OuPath::generate(&p);
        let mut st = OuState { z: ou.z_at(0).to_vec(), t: p.t0() };
        for k in 0..p.n_steps() {
            ou_advance(&mut st, p.increments_at(k), p.dt());
            for j in 0..2 {
                assert_eq!(st.z[j], ou.z_at(k + 1)[j], "cache diverged at step {k}");
            }
        }
    }

    #[test]
    fn assemble_is_linear() {
        let h = vec![vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 0.0]];
        let z1 = assemble_z(&[1.0, 0.0], &h, 3);
        let z2 = assemble_z(&[0.0, 1.0], &h, 3);
        let both = assemble_z(&[2.0, 3.0], &h, 3);
        for i in 0..3 {
            assert_abs_diff_eq!(
                both.coeffs[i],
                2.0 * z1.coeffs[i] + 3.0 * z2.coeffs[i],
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn tempered_bounds_pure_decay() {
        // Zero increments: z(t) = z(t0) exp(-(t - t0)).  With |h| = 1 the
        // envelope supremum over [t0, 0] is exp(eps t0) for eps < 1 (max at
        // the left edge) and exp(t0) for eps > 1 (max at 0).
        let mut p = NoisePath::sample(1, -2.0, 0.0, 0.25, 0, 0).unwrap();
        for x in &mut p.increments {
            *x = 0.0;
        }
        p.rebuild_cum();
        let init = OuState { z: vec![1.0], t: -2.0 };
        let ou = OuPath::generate_from(&p, init);
        let op = SpectralOperator::new(1.0, 1.0, 2, 4).unwrap();
        let h = vec![vec![1.0, 0.0]];
        for &(eps, want) in
            &[(0.5, (-1.0_f64).exp()), (2.0, (-2.0_f64).exp())]
        {
            let est =
                tempered_bounds_on_window(&p, &ou, &h, &op, eps, -2.0, 0.0).unwrap();
            assert_abs_diff_eq!(est.r, want, epsilon = 1e-12);
            // Mode-0 noise has no gradient content.
            assert_eq!(est.r_prime, 0.0);
            assert_eq!(est.r_double_prime, 0.0);
        }
    }

    #[test]
    fn tempered_bounds_monotone_in_envelope_rate() {
        let p = NoisePath::sample(2, -5.0, 5.0, 0.01, 11, 2).unwrap();
        let ou = OuPath::generate(&p);
        let op = SpectralOperator::new(1.0, 1.0, 4, 8).unwrap();
        let h = vec![vec![0.5, 0.2, 0.0, 0.1], vec![0.0, 0.3, 0.3, 0.0]];
        let mut prev = f64::INFINITY;
        for &eps in &[0.25, 0.5, 1.0, 2.0] {
            let est = tempered_bounds_on_window(&p, &ou, &h, &op, eps, -5.0, 5.0).unwrap();
            assert!(est.r <= prev + 1e-15, "r not monotone in eps");
            prev = est.r;
        }
    }

    #[test]
    fn binary_round_trip() {
        let p = NoisePath::sample(3, -1.0, 2.0, 0.5, 21, 5).unwrap();
        let mut buf = Vec::new();
        p.write_binary(&mut buf).unwrap();
        let q = NoisePath::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(p.increments, q.increments);
        assert_eq!(p.cum, q.cum);
        assert_eq!(q.zero_index(), p.zero_index());
        assert_eq!(q.dt(), 0.5);
    }
}
