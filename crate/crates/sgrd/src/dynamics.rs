//! Exponential time integrator for the transformed system.
//!
//! After the OU subtraction the state `Y = (u, v)` obeys
//!
//! ```text
//! dY/dt = C Y + F(z(t), Y),      C = [[0, I], [-A, -alpha I]],
//! F = ( z,  -sin u + f + (1 - alpha) z ),
//! ```
//!
//! and the scheme is first-order exponential Euler on the mild form: with
//! `E = exp(C dt)` and `Phi = integral_0^dt exp(C s) ds`,
//!
//! ```text
//! Y_{n+1} = E Y_n + Phi F(z_n, Y_n).
//! ```
//!
//! `C` is block-diagonal over cosine modes, so `E` and `Phi` are families of
//! 2x2 matrices computed once per run from the eigenvalues
//! `mu_pm = -alpha/2 +- sqrt(alpha^2/4 - lambda_i)`:
//!
//! * `lambda = 0` uses the explicit closed form (the neutral direction must
//!   be preserved exactly, so nothing is allowed to cancel);
//! * real-split and oscillatory modes go through `cosh`/`sinh` or
//!   `cos`/`sin` of the gap -- one formula, two branches, no subtraction of
//!   near-equal exponentials;
//! * `Phi` interpolates `phi1(z) = (e^z - 1)/z` over the two eigenvalues,
//!   switching to a divided-difference series when the spectral gap times
//!   `dt` drops below 1e-6 (this covers the critically damped double root).
//!
//! The nonlinearity is evaluated pseudo-spectrally: synthesize `u`, take
//! `sin` pointwise on the collocation grid, project back.  The OU channel
//! values are read from a cached `OuPath` on the same grid, which keeps every
//! solver sharing a path on literally the same noise fiber, and makes the
//! two-parameter flow property an exact identity of loop splits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EnergyGeometry, State};
use crate::noise::{assemble_z, NoisePath, OuPath};
use crate::params::Params;
use crate::spectral::{SpectralField, SpectralOperator};

/// Eigenvalue-gap threshold (in `rate * dt` units) below which `Phi` switches
/// from the explicit divided difference to its midpoint series.  The divided
/// difference loses about `4 eps / gap` relative accuracy to cancellation
/// while the series truncates at `(gap / 2)^4 / 24`; both stay below ~2e-13
/// at this crossover.
const DEGENERATE_GAP: f64 = 2e-3;

/// `phi1(z) = (e^z - 1) / z`, stable for all real `z`.
fn phi1_real(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `phi2(z) = (e^z - 1 - z) / z^2`, stable for all real `z`.
fn phi2_real(z: f64) -> f64 {
    if z.abs() < 0.125 {
        // phi2(z) = sum_j z^j / (j + 2)!
        let mut term = 0.5;
        let mut acc = term;
        for j in 1..14 {
            term *= z / (j as f64 + 2.0);
            acc += term;
        }
        acc
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `k`-th derivative of `phi1` at `z`: `sum_j z^j / (j! (j + k + 1))`.
fn phi1_deriv_series(k: u32, z: f64) -> f64 {
    let mut pow = 1.0; // z^j / j!
    let mut acc = 0.0;
    for j in 0..16 {
        acc += pow / (j as f64 + k as f64 + 1.0);
        pow *= z / (j as f64 + 1.0);
    }
    acc
}

fn phi1_deriv(k: u32, z: f64) -> f64 {
    if z.abs() < 0.125 {
        return phi1_deriv_series(k, z);
    }
    let ez = z.exp();
    match k {
        0 => phi1_real(z),
        1 => (ez * (z - 1.0) + 1.0) / (z * z),
        2 => (ez * (z * z - 2.0 * z + 2.0) - 2.0) / (z * z * z),
        3 => (ez * (z * z * z - 3.0 * z * z + 6.0 * z - 6.0) + 6.0) / (z * z * z * z),
        _ => unreachable!("only derivatives 0..3 are used"),
    }
}

fn phi1_complex(u: Complex64) -> Complex64 {
    if u.norm() < 0.125 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for j in 1..14 {
            term *= u / (j as f64 + 1.0);
            acc += term;
        }
        acc
    } else {
        (u.exp() - 1.0) / u
    }
}

/// `(cosh x, sinh(x)/x)` parameterized by the signed square `w = x^2`
/// (negative `w` means the trigonometric branch `(cos y, sin(y)/y)`).
fn cosh_sinhc(w: f64) -> (f64, f64) {
    if w.abs() < 1e-12 {
        // Unified series in w; covers the double-root case w = 0.
        return (1.0 + w / 2.0 + w * w / 24.0, 1.0 + w / 6.0 + w * w / 120.0);
    }
    if w > 0.0 {
        let x = w.sqrt();
        (x.cosh(), x.sinh() / x)
    } else {
        let y = (-w).sqrt();
        (y.cos(), y.sin() / y)
    }
}

/// One mode's step matrices, row-major 2x2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBlock {
    pub e: [f64; 4],
    pub phi: [f64; 4],
}

/// Build the matrices for a single mode block `C = [[0, 1], [-lambda, -alpha]]`.
pub fn mode_propagator(lambda: f64, alpha: f64, dt: f64) -> ModeBlock {
    if lambda == 0.0 {
        // Exact closed form: the (1,1) entry must be exactly 1 so the
        // neutral direction survives arbitrarily many steps.
        let q = dt * phi1_real(-alpha * dt); // (1 - e^{-alpha dt}) / alpha
        let ead = (-alpha * dt).exp();
        return ModeBlock {
            e: [1.0, q, 0.0, ead],
            phi: [dt, dt * dt * phi2_real(-alpha * dt), 0.0, q],
        };
    }

    let m = -0.5 * alpha;
    let disc = m * m - lambda; // d^2, signed
    let w = disc * dt * dt;
    let (ch, shc) = cosh_sinhc(w);
    let emt = (m * dt).exp();
    // exp(C dt) = beta0 I + beta1 C; m < 0 keeps both terms of beta0 positive.
    let beta0 = emt * (ch - m * dt * shc);
    let beta1 = dt * emt * shc;
    let e = [beta0, beta1, -lambda * beta1, beta0 - alpha * beta1];

    // Phi = gamma0 I + gamma1 C with gamma interpolating psi(mu) = dt phi1(mu dt).
    let gap = 2.0 * disc.abs().sqrt() * dt;
    let (gamma0, gamma1) = if gap >= DEGENERATE_GAP {
        if disc > 0.0 {
            let d = disc.sqrt();
            let psi_p = dt * phi1_real((m + d) * dt);
            let psi_m = dt * phi1_real((m - d) * dt);
            let g1 = (psi_p - psi_m) / (2.0 * d);
            (0.5 * (psi_p + psi_m) - m * g1, g1)
        } else {
            let nu = (-disc).sqrt();
            let p = phi1_complex(Complex64::new(m * dt, nu * dt));
            let g1 = dt * p.im / nu;
            (dt * p.re - m * g1, g1)
        }
    } else {
        // Divided difference of phi1 over mu_pm dt collapsed onto the
        // midpoint ubar = m dt, corrected to second order in the half-gap.
        let ubar = m * dt;
        let h2 = w; // ((mu_p - mu_m) dt / 2)^2, signed
        let g1 = dt * dt * (phi1_deriv(1, ubar) + phi1_deriv(3, ubar) * h2 / 6.0);
        let mean = dt * (phi1_deriv(0, ubar) + phi1_deriv(2, ubar) * h2 / 2.0);
        (mean - m * g1, g1)
    };
    let phi = [gamma0, gamma1, -lambda * gamma1, gamma0 - alpha * gamma1];
    ModeBlock { e, phi }
}

/// Per-mode step matrices for the whole retained spectrum.
#[derive(Debug, Clone)]
pub struct Propagator {
    dt: f64,
    blocks: Vec<ModeBlock>,
}

impl Propagator {
    pub fn build(op: &SpectralOperator, alpha: f64, dt: f64) -> Result<Propagator> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Propagator {
            dt,
            blocks: op.lambdas().iter().map(|&l| mode_propagator(l, alpha, dt)).collect(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn blocks(&self) -> &[ModeBlock] {
        &self.blocks
    }

    /// `Y <- E Y + Phi F` with `F = (f_u, f_v)` in coefficient space.
    pub fn apply(&self, y: &mut State, f_u: &[f64], f_v: &[f64]) {
        let n = self.blocks.len();
        debug_assert_eq!(y.u.coeffs.len(), n);
        debug_assert_eq!(f_u.len(), n);
        debug_assert_eq!(f_v.len(), n);
        for i in 0..n {
            let b = &self.blocks[i];
            let (u, v) = (y.u.coeffs[i], y.v.coeffs[i]);
            let (fu, fv) = (f_u[i], f_v[i]);
            y.u.coeffs[i] = b.e[0] * u + b.e[1] * v + b.phi[0] * fu + b.phi[1] * fv;
            y.v.coeffs[i] = b.e[2] * u + b.e[3] * v + b.phi[2] * fu + b.phi[3] * fv;
        }
    }

    /// Linear part only: `Y <- E Y`.
    pub fn apply_linear(&self, y: &mut State) {
        for (i, b) in self.blocks.iter().enumerate() {
            let (u, v) = (y.u.coeffs[i], y.v.coeffs[i]);
            y.u.coeffs[i] = b.e[0] * u + b.e[1] * v;
            y.v.coeffs[i] = b.e[2] * u + b.e[3] * v;
        }
    }
}

/// What to keep while integrating.
#[derive(Debug, Clone, Copy)]
pub struct RecordSpec {
    /// Record every `every` steps (0 = endpoints only).  The initial and
    /// final points are always recorded.
    pub every: usize,
    /// Keep full states at recorded times (otherwise only scalars).
    pub keep_states: bool,
}

impl RecordSpec {
    pub fn endpoints() -> Self {
        RecordSpec { every: 0, keep_states: false }
    }

    pub fn every(every: usize) -> Self {
        RecordSpec { every, keep_states: false }
    }
}

/// Scalar history of one trajectory (plus optional state snapshots).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Unreduced mean coordinate `s(t)`; continuous winding, never wrapped.
    pub s: Vec<f64>,
    /// Energy norm of the fluctuation part at each recorded time.
    pub q_norm: Vec<f64>,
    #[serde(skip)]
    pub states: Option<Vec<State>>,
    #[serde(skip)]
    pub final_state: Option<State>,
}

impl TrajectoryRecord {
    fn with_capacity(cap: usize, keep_states: bool) -> Self {
        TrajectoryRecord {
            times: Vec::with_capacity(cap),
            s: Vec::with_capacity(cap),
            q_norm: Vec::with_capacity(cap),
            states: if keep_states { Some(Vec::with_capacity(cap)) } else { None },
            final_state: None,
        }
    }

    fn push(&mut self, t: f64, s: f64, q_norm: f64, state: Option<&State>) {
        self.times.push(t);
        self.s.push(s);
        self.q_norm.push(q_norm);
        if let (Some(states), Some(st)) = (self.states.as_mut(), state) {
            states.push(st.clone());
        }
    }
}

/// The full stepper: spectral transforms + mode blocks + forcing/noise data.
///
/// Holds scratch buffers, so one `Integrator` drives one trajectory at a
/// time; clone it (cheap, a few KiB) for parallel ensembles.
#[derive(Debug, Clone)]
pub struct Integrator<'a> {
    op: &'a SpectralOperator,
    geom: &'a EnergyGeometry,
    prop: Propagator,
    alpha: f64,
    f_hat: Vec<f64>,
    h_padded: Vec<Vec<f64>>,
    dt: f64,
    // scratch
    phys: Vec<f64>,
    sin_hat: SpectralField,
    f_u: Vec<f64>,
    f_v: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(
        params: &Params,
        op: &'a SpectralOperator,
        geom: &'a EnergyGeometry,
    ) -> Result<Self> {
        params.validate()?;
        let prop = Propagator::build(op, params.alpha, params.dt)?;
        Ok(Integrator {
            op,
            geom,
            prop,
            alpha: params.alpha,
            f_hat: params.padded_f(),
            h_padded: params.padded_h(),
            dt: params.dt,
            phys: vec![0.0; op.n_quad()],
            sin_hat: SpectralField::zeros(op.n_modes()),
            f_u: vec![0.0; op.n_modes()],
            f_v: vec![0.0; op.n_modes()],
        })
    }

    /// Same stepper with a different time step (used by refinement studies).
    pub fn with_dt(params: &Params, op: &'a SpectralOperator, geom: &'a EnergyGeometry, dt: f64) -> Result<Self> {
        let mut p = params.clone();
        p.dt = dt;
        Self::new(&p, op, geom)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    pub fn geometry(&self) -> &EnergyGeometry {
        self.geom
    }

    pub fn operator(&self) -> &SpectralOperator {
        self.op
    }

    /// Forcing tendency `F = (z, -sin u + f + (1 - alpha) z)` in coefficient
    /// space; `z` holds the per-channel OU values.
    pub fn nonlinearity(&mut self, y: &State, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.fill_tendency(y, z);
        (self.f_u.clone(), self.f_v.clone())
    }

    fn fill_tendency(&mut self, y: &State, z: &[f64]) {
        let z_field = assemble_z(z, &self.h_padded, self.op.n_modes());
        self.op.to_physical_into(&y.u, &mut self.phys);
        for p in &mut self.phys {
            *p = p.sin();
        }
        self.op.to_spectral_into(&self.phys, &mut self.sin_hat);
        let one_minus_alpha = 1.0 - self.alpha;
        for i in 0..self.op.n_modes() {
            self.f_u[i] = z_field.coeffs[i];
            self.f_v[i] = -self.sin_hat.coeffs[i] + self.f_hat[i] + one_minus_alpha * z_field.coeffs[i];
        }
    }

    /// One exponential-Euler step from time `t`; fails on non-finite output.
    pub fn step(&mut self, y: &mut State, z: &[f64], t: f64) -> Result<()> {
        self.fill_tendency(y, z);
        // Borrow dance: apply reads the scratch tendencies.
        let (f_u, f_v) = (std::mem::take(&mut self.f_u), std::mem::take(&mut self.f_v));
        self.prop.apply(y, &f_u, &f_v);
        self.f_u = f_u;
        self.f_v = f_v;
        if !y.is_finite() {
            return Err(Error::BlowUp { t: t + self.dt });
        }
        Ok(())
    }

    /// March `y0` from `t_begin` to `t_end` (both on the path grid), reading
    /// noise from the shared OU cache.
    pub fn integrate(
        &mut self,
        y0: State,
        path: &NoisePath,
        ou: &OuPath,
        t_begin: f64,
        t_end: f64,
        rec: RecordSpec,
    ) -> Result<TrajectoryRecord> {
        if (path.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Shape(format!(
                "path dt = {} does not match integrator dt = {}",
                path.dt(),
                self.dt
            )));
        }
        if ou.n_points() != path.n_steps() + 1 {
            return Err(Error::Shape("OU cache does not cover the path grid".into()));
        }
        let k0 = path.index_of(t_begin)?;
        let k1 = path.index_of(t_end)?;
        if k1 < k0 {
            return Err(Error::Window(format!("t_begin = {t_begin} after t_end = {t_end}")));
        }
        let n_rec = (k1 - k0).checked_div(rec.every).map_or(2, |n| n + 2);
        let mut record = TrajectoryRecord::with_capacity(n_rec, rec.keep_states);
        let mut y = y0;
        let snap = |record: &mut TrajectoryRecord, y: &State, t: f64, geom: &EnergyGeometry| {
            let s = geom.project_p(y);
            let q = geom.norm(&geom.project_q(y));
            record.push(t, s, q, Some(y));
        };
        snap(&mut record, &y, path.time_at(k0), self.geom);
        for k in k0..k1 {
            self.step(&mut y, ou.z_at(k), path.time_at(k))?;
            let done = k + 1 == k1;
            if (rec.every > 0 && (k + 1 - k0) % rec.every == 0 && !done) || done {
                snap(&mut record, &y, path.time_at(k + 1), self.geom);
            }
        }
        record.final_state = Some(y);
        Ok(record)
    }

    /// Pullback solve: integrate over `[-t_horizon, 0]` and return the state
    /// at time 0.  The path must cover the window.
    pub fn pullback_solve(
        &mut self,
        y0: State,
        path: &NoisePath,
        ou: &OuPath,
        t_horizon: f64,
    ) -> Result<State> {
        let rec = self.integrate(y0, path, ou, -t_horizon, 0.0, RecordSpec::endpoints())?;
        Ok(rec.final_state.expect("integrate always sets the final state"))
    }

    /// Solve in the original variables: `phi0 = (u, u_t)` at `t_begin`, with
    /// the OU value subtracted on entry and added back on exit.
    pub fn phi_solution(
        &mut self,
        phi0: State,
        path: &NoisePath,
        ou: &OuPath,
        t_begin: f64,
        t_end: f64,
    ) -> Result<State> {
        let k0 = path.index_of(t_begin)?;
        let z0 = assemble_z(ou.z_at(k0), &self.h_padded, self.op.n_modes());
        let mut y0 = phi0;
        y0.v.axpy(-1.0, &z0);
        let rec = self.integrate(y0, path, ou, t_begin, t_end, RecordSpec::endpoints())?;
        let mut out = rec.final_state.expect("integrate always sets the final state");
        let k1 = path.index_of(t_end)?;
        let z1 = assemble_z(ou.z_at(k1), &self.h_padded, self.op.n_modes());
        out.v.axpy(1.0, &z1);
        Ok(out)
    }
}

/// Write a state checkpoint: `n_modes`, then all `u`, then all `v`
/// coefficients, little-endian 64-bit floats.
pub fn write_state<W: std::io::Write>(state: &State, w: &mut W) -> Result<()> {
    w.write_all(&(state.n_modes() as u64).to_le_bytes())?;
    for c in state.u.coeffs.iter().chain(&state.v.coeffs) {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

/// Inverse of [`write_state`].
pub fn read_state<R: std::io::Read>(r: &mut R) -> Result<State> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let n = u64::from_le_bytes(b) as usize;
    if !(2..=1 << 20).contains(&n) {
        return Err(Error::Shape(format!("implausible checkpoint mode count {n}")));
    }
    let mut read_field = |n: usize| -> Result<SpectralField> {
        let mut coeffs = vec![0.0; n];
        for c in &mut coeffs {
            r.read_exact(&mut b)?;
            *c = f64::from_le_bytes(b);
        }
        Ok(SpectralField { coeffs })
    };
    let u = read_field(n)?;
    let v = read_field(n)?;
    Ok(State { u, v })
}
