//! Cosine spectral basis for the Neumann Laplacian on `[0, L]`.
//!
//! The operator `A = -kappa d^2/dx^2` with zero end-slope has the orthonormal
//! eigenbasis
//!
//! ```text
//! e_0(x) = 1 / sqrt(L),      e_i(x) = sqrt(2/L) cos(i pi x / L),  i >= 1,
//! ```
//!
//! with eigenvalues `lambda_i = kappa (i pi / L)^2`.  A field is stored as
//! its first `N` coefficients; `A` acts diagonally.  Physical-space work
//! (only the pointwise `sin`) happens on `M >= 2N` midpoint collocation
//! nodes `x_k = L (k + 1/2) / M`, where the midpoint rule integrates
//! products of retained basis functions exactly, so the two transforms are
//! inverse to each other up to roundoff and no separate de-aliasing step is
//! needed.
//!
//! Transforms are plain `O(N M)` matrix passes against a precomputed sample
//! table; at the mode counts used here (N <= 64) that is faster and simpler
//! than an FFT round trip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;

/// Coefficients of a field in the cosine basis (index = mode number).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(n_modes: usize) -> Self {
        SpectralField { coeffs: vec![0.0; n_modes] }
    }

    /// Field from a (possibly short) coefficient list, zero-padded.
    pub fn from_coeffs(coeffs: &[f64], n_modes: usize) -> Self {
        let mut c = coeffs.to_vec();
        c.resize(n_modes, 0.0);
        SpectralField { coeffs: c }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Plain L2 norm: coefficients are in an orthonormal basis.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.coeffs {
            *a *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Discretized Neumann Laplacian: eigenvalues, basis samples on the
/// collocation grid, and the quadrature rule tying them together.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    kappa: f64,
    length: f64,
    n_modes: usize,
    n_quad: usize,
    lambdas: Vec<f64>,
    /// Normalization of each basis function: `1/sqrt(L)`, then `sqrt(2/L)`.
    norm_factors: Vec<f64>,
    /// `basis[k * n_modes + i] = e_i(x_k)`, row per collocation node.
    basis: Vec<f64>,
    /// `basis_t[i * n_quad + k] = e_i(x_k)`, row per mode (analysis pass).
    basis_t: Vec<f64>,
    /// Midpoint quadrature weight `L / M`.
    weight: f64,
}

impl SpectralOperator {
    /// Build the operator for explicit `(kappa, L, N, M)`.
    pub fn new(kappa: f64, length: f64, n_modes: usize, n_quad: usize) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "operator needs positive finite kappa and length, got kappa = {kappa}, L = {length}"
            )));
        }
        if n_modes < 2 {
            return Err(Error::InvalidParameter(format!("n_modes must be >= 2, got {n_modes}")));
        }
        if n_quad < 2 * n_modes {
            return Err(Error::InvalidParameter(format!(
                "n_quad must be >= 2 * n_modes = {}, got {n_quad}",
                2 * n_modes
            )));
        }
        let pi = std::f64::consts::PI;
        let lambdas: Vec<f64> = (0..n_modes)
            .map(|i| {
                let k = i as f64 * pi / length;
                kappa * k * k
            })
            .collect();
        let mut norm_factors = vec![(2.0 / length).sqrt(); n_modes];
        norm_factors[0] = 1.0 / length.sqrt();

        let mut basis = vec![0.0; n_quad * n_modes];
        let mut basis_t = vec![0.0; n_quad * n_modes];
        for k in 0..n_quad {
            // theta = i * pi * (k + 1/2) / M equals i * pi * x_k / L.
            let base = pi * (k as f64 + 0.5) / n_quad as f64;
            for i in 0..n_modes {
                let v = norm_factors[i] * (i as f64 * base).cos();
                basis[k * n_modes + i] = v;
                basis_t[i * n_quad + k] = v;
            }
        }
        Ok(SpectralOperator {
            kappa,
            length,
            n_modes,
            n_quad,
            lambdas,
            norm_factors,
            basis,
            basis_t,
            weight: length / n_quad as f64,
        })
    }

    /// Build from a validated parameter set.
    pub fn build(params: &Params) -> Result<Self> {
        params.validate()?;
        Self::new(params.kappa, params.domain_length, params.n_modes, params.n_quad)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn norm_factors(&self) -> &[f64] {
        &self.norm_factors
    }

    /// Collocation nodes `x_k = L (k + 1/2) / M`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_quad).map(|k| self.length * (k as f64 + 0.5) / self.n_quad as f64).collect()
    }

    /// Synthesis: sample the field on the collocation grid into `out`.
    pub fn to_physical_into(&self, field: &SpectralField, out: &mut [f64]) {
        assert_eq!(field.coeffs.len(), self.n_modes, "field/operator mode mismatch");
        assert_eq!(out.len(), self.n_quad, "output/collocation size mismatch");
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.basis[k * self.n_modes..(k + 1) * self.n_modes];
            let mut acc = 0.0;
            for (b, c) in row.iter().zip(&field.coeffs) {
                acc += b * c;
            }
            *o = acc;
        }
    }

    /// Synthesis, allocating.
    pub fn to_physical(&self, field: &SpectralField) -> Vec<f64> {
        let mut out = vec![0.0; self.n_quad];
        self.to_physical_into(field, &mut out);
        out
    }

    /// Analysis: midpoint-rule projection of grid samples onto the basis.
    pub fn to_spectral_into(&self, samples: &[f64], out: &mut SpectralField) {
        assert_eq!(samples.len(), self.n_quad, "sample/collocation size mismatch");
        assert_eq!(out.coeffs.len(), self.n_modes, "field/operator mode mismatch");
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let row = &self.basis_t[i * self.n_quad..(i + 1) * self.n_quad];
            let mut acc = 0.0;
            for (b, s) in row.iter().zip(samples) {
                acc += b * s;
            }
            *c = self.weight * acc;
        }
    }

    /// Analysis, allocating.
    pub fn to_spectral(&self, samples: &[f64]) -> SpectralField {
        let mut out = SpectralField::zeros(self.n_modes);
        self.to_spectral_into(samples, &mut out);
        out
    }

    /// Domain mean of the field: `c_0 / sqrt(L)`.
    pub fn mean_part(&self, field: &SpectralField) -> f64 {
        field.coeffs[0] / self.length.sqrt()
    }

    /// Point evaluation of the cosine series (diagnostics; O(N)).
    pub fn eval_at(&self, field: &SpectralField, x: f64) -> f64 {
        let pi = std::f64::consts::PI;
        field
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.norm_factors[i] * (i as f64 * pi * x / self.length).cos())
            .sum()
    }

    /// `|A^(pow/2) field|^2 = sum_i lambda_i^pow c_i^2` for `pow in {0,1,2}`.
    pub fn weighted_norm_sq(&self, field: &SpectralField, pow: u32) -> f64 {
        field
            .coeffs
            .iter()
            .zip(&self.lambdas)
            .map(|(c, l)| l.powi(pow as i32) * c * c)
            .sum()
    }
}
