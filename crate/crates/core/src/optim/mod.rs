//! Variational constants: the GNS ground state, the constrained suprema
//! `C_K` / `C_{K,N}`, and the Bernstein constant `C_B`.

mod ascent;
mod constants;
mod ground_state;

pub use ascent::{sphere_ascent, AscentConfig, SphereProblem};
pub use constants::{
    cb_bernstein, ck_supremum, ckn_torus_supremum, ek_torus_supremum, threshold_label, SolverOptions,
    DEFAULT_STARTS,
};
pub use ground_state::{gns_ground_state, weinstein_functional, GroundState, GroundStateConfig};

use serde::Serialize;

use crate::spectral::SpectralField;

/// Outcome of any variational solver.
#[derive(Debug, Clone, Serialize)]
pub struct OptimResult {
    #[serde(skip)]
    pub field: SpectralField,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Tangential gradient norm at exit, relative to `max(1, ||grad||)`.
    pub grad_norm: f64,
    /// Objective after every accepted step.
    #[serde(skip)]
    pub trace: Vec<f64>,
    /// Index of the winning start in a multi-start run.
    pub start: usize,
    pub warnings: Vec<String>,
}

/// `½||u||^2_{H^s} − (1/p)||u||^p_{L^p}`.
pub fn hamiltonian_eval(u: &SpectralField, s: f64, p: f64) -> f64 {
    0.5 * u.sobolev_norm_sq(s) - u.lp_norm_pow(p) / p
}

/// Boundary-decay warning for fields on an `R^d`-approximating cell.
pub(crate) fn decay_warning(u: &SpectralField) -> Option<String> {
    let ratio = u.boundary_ratio();
    (ratio > 1e-8).then(|| {
        format!(
            "|u| at the cell boundary is {ratio:.2e} of its maximum; enlarge L = {}",
            u.grid().length
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use num_complex::Complex64;

    #[test]
    fn hamiltonian_zero_and_homogeneity() {
        let grid = GridSpec::torus_for(1, 6, 6.0).unwrap();
        assert_eq!(hamiltonian_eval(&SpectralField::zeros(grid, true), 1.0, 6.0), 0.0);
        let u = SpectralField::from_fn(grid, true, |k, _| Complex64::new(1.0 / (1.0 + k[0].abs() as f64), 0.2));
        let lam = 1.7;
        let h2 = 0.5 * u.sobolev_norm_sq(1.0);
        let lp = u.lp_norm_pow(6.0) / 6.0;
        let want = lam * lam * h2 - lam.powi(6) * lp;
        let got = hamiltonian_eval(&u.scale(lam), 1.0, 6.0);
        assert!((got - want).abs() <= 1e-10 * want.abs().max(h2));
    }
}
