//! Model and discretization parameters.
//!
//! `Params` is the single source of truth a run is built from: physical
//! coefficients (damping `alpha`, stiffness `kappa`, forcing `f`, noise
//! profiles `h_j`), the weight `delta` used by the energy norm, and the
//! discretization (mode count, collocation size, time step, seed).  All
//! downstream objects (`SpectralOperator`, `EnergyGeometry`, `Integrator`)
//! borrow from a validated `Params` and never re-check.
//!
//! Fields are plain data; `validate` enforces the domain constraints once.

use serde::{Deserialize, Serialize};

use crate::constants::choose_delta;
use crate::error::{Error, Result};

/// Complete parameter set for one experiment.
///
/// Forcing and noise profiles are given as coefficient vectors in the
/// orthonormal cosine basis; shorter vectors are implicitly zero-padded to
/// `n_modes`.  A spatially constant forcing with mean `c` therefore has
/// coefficient vector `[c * sqrt(domain_length)]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Params {
    /// Damping coefficient, `> 0`.
    pub alpha: f64,
    /// Diffusion (stiffness) coefficient in front of the Laplacian, `> 0`.
    pub kappa: f64,
    /// Energy-norm weight, in `(0, 1]`.  Use [`Params::with_auto_delta`] to
    /// pick the gap-maximizing value.
    pub delta: f64,
    /// Interval length `|U|`, `> 0`.
    pub domain_length: f64,
    /// Forcing coefficients in the cosine basis (zero-padded to `n_modes`).
    pub f_coeffs: Vec<f64>,
    /// One coefficient vector per noise channel (zero-padded to `n_modes`).
    pub h_coeffs: Vec<Vec<f64>>,
    /// Number of retained cosine modes, `>= 2`.
    pub n_modes: usize,
    /// Collocation grid size for the nonlinearity, `>= 2 * n_modes`.
    pub n_quad: usize,
    /// Time step of the exponential integrator, `> 0`.
    pub dt: f64,
    /// Master seed; every stochastic object derives its stream from this.
    pub seed: u64,
}

impl Params {
    /// Baseline parameter set used throughout the strong-damping experiments:
    /// `alpha = 10`, `kappa = 50` on `[0, pi]`, zero forcing, one noise
    /// channel `h_1 = 0.1 e_0`, 32 modes, `dt = 1e-3`.
    pub fn strong_damping() -> Self {
        Params {
            alpha: 10.0,
            kappa: 50.0,
            delta: 1.0,
            domain_length: std::f64::consts::PI,
            f_coeffs: vec![],
            h_coeffs: vec![vec![0.1]],
            n_modes: 32,
            n_quad: 64,
            dt: 1e-3,
            seed: 0,
        }
    }

    /// Number of noise channels.
    pub fn n_channels(&self) -> usize {
        self.h_coeffs.len()
    }

    /// First nonzero Laplacian eigenvalue `kappa * (pi / L)^2`.
    pub fn lambda1(&self) -> f64 {
        let k1 = std::f64::consts::PI / self.domain_length;
        self.kappa * k1 * k1
    }

    /// Replace `delta` by the gap-maximizing choice `min(1, alpha^2 / (2 lambda1))`.
    pub fn with_auto_delta(mut self) -> Self {
        self.delta = choose_delta(self.alpha, self.lambda1());
        self
    }

    /// Set a spatially constant forcing with domain mean `f_mean`.
    pub fn with_constant_forcing(mut self, f_mean: f64) -> Self {
        self.f_coeffs = vec![f_mean * self.domain_length.sqrt()];
        self
    }

    /// Check every domain constraint; returns the first violation.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, x: f64) -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
            }
        }
        positive("alpha", self.alpha)?;
        positive("kappa", self.kappa)?;
        positive("domain_length", self.domain_length)?;
        positive("dt", self.dt)?;
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if self.n_modes < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_modes must be >= 2, got {}",
                self.n_modes
            )));
        }
        if self.n_quad < 2 * self.n_modes {
            return Err(Error::InvalidParameter(format!(
                "n_quad must be >= 2 * n_modes = {}, got {}",
                2 * self.n_modes,
                self.n_quad
            )));
        }
        if self.f_coeffs.len() > self.n_modes {
            return Err(Error::InvalidParameter(format!(
                "f_coeffs has {} entries but only {} modes are retained",
                self.f_coeffs.len(),
                self.n_modes
            )));
        }
        if self.h_coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one noise channel h_j is required (use a zero vector to disable noise)"
                    .into(),
            ));
        }
        for (j, h) in self.h_coeffs.iter().enumerate() {
            if h.len() > self.n_modes {
                return Err(Error::InvalidParameter(format!(
                    "h_coeffs[{j}] has {} entries but only {} modes are retained",
                    h.len(),
                    self.n_modes
                )));
            }
            if h.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("h_coeffs[{j}] contains a non-finite entry")));
            }
        }
        if self.f_coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("f_coeffs contains a non-finite entry".into()));
        }
        Ok(())
    }

    /// `f_coeffs` zero-padded to `n_modes`.
    pub fn padded_f(&self) -> Vec<f64> {
        let mut f = self.f_coeffs.clone();
        f.resize(self.n_modes, 0.0);
        f
    }

    /// Each `h_coeffs[j]` zero-padded to `n_modes`.
    pub fn padded_h(&self) -> Vec<Vec<f64>> {
        self.h_coeffs
            .iter()
            .map(|h| {
                let mut p = h.clone();
                p.resize(self.n_modes, 0.0);
                p
            })
            .collect()
    }
}
