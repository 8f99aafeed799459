//! Energy geometry of the first-order system.
//!
//! A state is `Y = (u, v)` (displacement, transformed velocity).  The
//! analysis runs in a twisted energy inner product, chosen so that the
//! linear flow is a strict contraction off the mean:
//!
//! * on the mean (constant-in-x) pair the form is
//!   `alpha^2/4 <u1,u2> + <alpha/2 u1 + v1, alpha/2 u2 + v2>`;
//! * on the fluctuations it additionally carries the stiffness,
//!   `<A^(1/2)u1, A^(1/2)u2> + (alpha^2/4 - delta lambda1) <u1,u2>`.
//!
//! The neutral direction is the constant pair `(1, 0)`: the flow neither
//! grows nor damps it.  `project_p` extracts its coordinate
//! `s = ubar + vbar / alpha` (the residual mean then lies along `(1, -alpha)`,
//! which decays like `exp(-alpha t)` and is E-orthogonal to `(1, 0)`), and
//! `project_q` removes it.  Because the nonlinearity is `2 pi`-periodic in
//! `u`, `s` lives on a circle; `torus_reduce` wraps it to `[0, 2 pi)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::spectral::{SpectralField, SpectralOperator};
use crate::TWO_PI;

/// Full system state: displacement and transformed velocity coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: SpectralField,
    pub v: SpectralField,
}

impl State {
    pub fn zeros(n_modes: usize) -> Self {
        State { u: SpectralField::zeros(n_modes), v: SpectralField::zeros(n_modes) }
    }

    pub fn n_modes(&self) -> usize {
        self.u.n_modes()
    }

    /// `self += s * other` componentwise.
    pub fn axpy(&mut self, s: f64, other: &State) {
        self.u.axpy(s, &other.u);
        self.v.axpy(s, &other.v);
    }

    pub fn scale(&mut self, s: f64) {
        self.u.scale(s);
        self.v.scale(s);
    }

    pub fn sub(&self, other: &State) -> State {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        d
    }

    /// Linear interpolation `(1 - w) self + w other`.
    pub fn lerp(&self, other: &State, w: f64) -> State {
        let mut out = self.clone();
        out.scale(1.0 - w);
        out.axpy(w, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Wrapped mean coordinate, always in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TorusCoordinate(pub f64);

impl TorusCoordinate {
    pub fn new(s: f64) -> Self {
        TorusCoordinate(torus_reduce(s))
    }
}

/// Reduce a mean coordinate modulo `2 pi` into `[0, 2 pi)`.
pub fn torus_reduce(s: f64) -> f64 {
    let r = s.rem_euclid(TWO_PI);
    // rem_euclid can return exactly 2 pi when s is a tiny negative number.
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Wrapped distance between two torus coordinates, in `[0, pi]`.
pub fn torus_distance(s1: f64, s2: f64) -> f64 {
    let d = (s1 - s2).rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}

/// The energy inner product and the mean/fluctuation splitting.
#[derive(Debug, Clone)]
pub struct EnergyGeometry {
    alpha: f64,
    delta: f64,
    lambda1: f64,
    lambdas: Vec<f64>,
    kappa: f64,
    length: f64,
    sqrt_length: f64,
}

impl EnergyGeometry {
    /// Build and verify positive-definiteness of the fluctuation form.
    pub fn new(params: &Params, op: &SpectralOperator) -> Result<Self> {
        let g = EnergyGeometry {
            alpha: params.alpha,
            delta: params.delta,
            lambda1: params.lambda1(),
            lambdas: op.lambdas().to_vec(),
            kappa: op.kappa(),
            length: op.length(),
            sqrt_length: op.length().sqrt(),
        };
        let min_eig = g.min_fluctuation_eigenvalue();
        if !min_eig.is_finite() || min_eig <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "fluctuation energy form is not positive definite (min eigenvalue {min_eig}); \
                 requires delta * lambda1 < lambda1 + alpha^2 / 4"
            )));
        }
        Ok(g)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Smallest eigenvalue of the per-mode 2x2 fluctuation form over all
    /// retained modes `i >= 1`.
    pub fn min_fluctuation_eigenvalue(&self) -> f64 {
        let mut min_eig = f64::INFINITY;
        for &l in &self.lambdas[1..] {
            let g11 = l + 0.5 * self.alpha * self.alpha - self.delta * self.lambda1;
            let g12 = 0.5 * self.alpha;
            let g22 = 1.0;
            let mean = 0.5 * (g11 + g22);
            let rad = (0.25 * (g11 - g22) * (g11 - g22) + g12 * g12).sqrt();
            min_eig = min_eig.min(mean - rad);
        }
        min_eig
    }

    /// Energy inner product `<Y1, Y2>_E`.
    pub fn inner(&self, y1: &State, y2: &State) -> f64 {
        let n = y1.n_modes();
        assert_eq!(n, self.lambdas.len(), "state/geometry mode mismatch");
        assert_eq!(n, y2.n_modes(), "state/state mode mismatch");
        let half = 0.5 * self.alpha;
        let quarter_sq = half * half;
        let mut acc = 0.0;
        for i in 0..n {
            let (u1, v1) = (y1.u.coeffs[i], y1.v.coeffs[i]);
            let (u2, v2) = (y2.u.coeffs[i], y2.v.coeffs[i]);
            let w1 = half * u1 + v1;
            let w2 = half * u2 + v2;
            acc += quarter_sq * u1 * u2 + w1 * w2;
            if i > 0 {
                acc += (self.lambdas[i] - self.delta * self.lambda1) * u1 * u2;
            }
        }
        acc
    }

    /// Energy norm `|Y|_E`.
    pub fn norm(&self, y: &State) -> f64 {
        self.inner(y, y).max(0.0).sqrt()
    }

    /// Comparison norm on H1 x L2: `(|grad u|^2 + |u|^2 + |v|^2)^(1/2)`.
    pub fn h1l2_norm(&self, y: &State) -> f64 {
        let mut acc = 0.0;
        for i in 0..y.n_modes() {
            let wavenumber_sq = self.lambdas[i] / self.kappa;
            acc += (1.0 + wavenumber_sq) * y.u.coeffs[i] * y.u.coeffs[i];
            acc += y.v.coeffs[i] * y.v.coeffs[i];
        }
        acc.sqrt()
    }

    /// Coordinate of the neutral direction: `s = ubar + vbar / alpha`
    /// (unreduced; wrap with [`torus_reduce`] when a circle coordinate is
    /// wanted).
    pub fn project_p(&self, y: &State) -> f64 {
        let ubar = y.u.coeffs[0] / self.sqrt_length;
        let vbar = y.v.coeffs[0] / self.sqrt_length;
        ubar + vbar / self.alpha
    }

    /// Remove the neutral component: `Q Y = Y - s * (1, 0)`.
    pub fn project_q(&self, y: &State) -> State {
        let s = self.project_p(y);
        let mut q = y.clone();
        q.u.coeffs[0] -= s * self.sqrt_length;
        q
    }

    /// State `s * (1, 0)`: the constant pair with mean displacement `s`.
    pub fn p_embed(&self, s: f64, n_modes: usize) -> State {
        let mut y = State::zeros(n_modes);
        y.u.coeffs[0] = s * self.sqrt_length;
        y
    }

    /// Energy norm of the neutral direction `(1, 0)`: `alpha sqrt(L / 2)`.
    pub fn eta0_norm(&self) -> f64 {
        self.alpha * (self.length / 2.0).sqrt()
    }

    /// Shift the displacement by one period: `Y + (2 pi, 0)`.
    pub fn shift_period(&self, y: &State, periods: f64) -> State {
        let mut out = y.clone();
        out.u.coeffs[0] += periods * TWO_PI * self.sqrt_length;
        out
    }
}
