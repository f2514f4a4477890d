//! Tomographic kernels `R[A](outcome, setting)` whose average over measurement
//! records gives `Tr[A rho]`, with an exact-average route for each family.
//!
//! Matrix-element conventions: for `A = |n><n+d|` every family estimates
//! `<n+d|rho|n>`, matching the kernels `<n+d| ... |n>` of the parity and Kerr
//! resolutions.

mod homodyne;
mod kerr;
mod nonunitary;
mod parity;
mod spin;

pub use homodyne::{
    homodyne_estimate, homodyne_exact_average, homodyne_kernel_matrix, squeezed_homodyne_estimate,
    squeezed_homodyne_exact_average, squeezed_homodyne_kernel, squeezed_padding, HomodyneKernel, PatternTable,
    SqueezeParams,
};
pub(crate) use homodyne::{embed, squeeze_block, FockPatterns};
pub use kerr::{
    kerr_biorthogonality_defect, kerr_estimate, kerr_exact_average, kerr_kernel, kerr_kernel_regularized,
    kerr_epsilon_sweep, kerr_operator_kernel, EpsilonSweep,
};
pub use nonunitary::{
    nonunitary_operator, nonunitary_orthogonality, nonunitary_phase_trace, nonunitary_phase_trace_grid,
    nonunitary_reconstruct, OrthogonalityReport,
};
pub use parity::{
    displaced_parity_kernel, displaced_parity_kernel_matrix, BOUNDARY_MASS_TOL, generalized_glauber_check, parity_boundary_mass,
    parity_estimate, parity_exact_average, parity_operator_kernel, GlauberReport,
};
pub use spin::{
    pauli_estimate, spin_estimate, spin_kernel, spin_kernel_matrix, spin_kernel_quadrature,
    spin_quadrature_average, SphereRule,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Numerical parameters shared by the estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Fock truncation `n_max + 1`.
    pub dim: usize,
    /// Frequency cutoff of the homodyne kernel integral.
    pub k_max: f64,
    /// Gaussian regularizer `exp(-eps k^2)` of the homodyne kernel.
    pub reg_eps: f64,
    /// Composite Gauss-Legendre panels and order for the `k` integral.
    pub k_panels: usize,
    pub k_order: usize,
    /// Spacing of the tabulated pattern functions.
    pub q_step: f64,
    /// Phase grid for Kerr and nonunitary exact averages; 0 picks the minimum exact size.
    pub phi_points: usize,
    /// Kerr-shift grid; 0 picks the minimum exact size.
    pub psi_points: usize,
    /// Radius of the uniform disk for displacements; `None` means `2 + sqrt(n_max)`.
    pub alpha_radius: Option<f64>,
    /// Radial and angular nodes of the parity exact average.
    pub alpha_radial: usize,
    pub alpha_angular: usize,
    /// Gauss-Legendre order in `cos theta` for spin sphere quadrature; 0 picks `2s + 1`.
    pub sphere_order: usize,
    /// Largest `|n|` of the nonunitary resolution; `None` means `dim - 1`.
    pub shift_cutoff: Option<usize>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            k_max: 40.0,
            reg_eps: 1e-8,
            k_panels: 40,
            k_order: 16,
            q_step: 0.005,
            phi_points: 0,
            psi_points: 0,
            alpha_radius: None,
            alpha_radial: 96,
            alpha_angular: 0,
            sphere_order: 0,
            shift_cutoff: None,
        }
    }
}

impl EstimatorConfig {
    pub fn with_dim(dim: usize) -> Self {
        Self { dim, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dim must be at least 1".into()));
        }
        if !(self.k_max > 0.0) {
            return Err(Error::InvalidSpec("k_max must be positive".into()));
        }
        if !(self.reg_eps > 0.0) {
            return Err(Error::InvalidSpec("reg_eps must be positive".into()));
        }
        if self.k_panels == 0 || self.k_order < 2 {
            return Err(Error::InvalidSpec("k quadrature needs panels >= 1 and order >= 2".into()));
        }
        if !(self.q_step > 0.0 && self.q_step < 0.1) {
            return Err(Error::InvalidSpec("q_step must lie in (0, 0.1)".into()));
        }
        if self.alpha_radial < 8 {
            return Err(Error::InvalidSpec("alpha_radial must be at least 8".into()));
        }
        if let Some(r) = self.alpha_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidSpec("alpha_radius must be positive".into()));
            }
        }
        Ok(())
    }

    /// `R` of the displacement disk.
    pub fn disk_radius(&self) -> f64 {
        self.alpha_radius.unwrap_or_else(|| 2.0 + ((self.dim - 1) as f64).sqrt())
    }

    pub(crate) fn phi_grid(&self) -> usize {
        if self.phi_points == 0 {
            4 * self.dim
        } else {
            self.phi_points
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}
