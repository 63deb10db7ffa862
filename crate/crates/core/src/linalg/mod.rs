//! Dense kernels for the 2-mode problem: quadrature embedding, Lyapunov and
//! biased Riccati steady states, closed-form stability margins.

mod lyapunov;
mod matrix;
mod riccati;

pub use lyapunov::{lyapunov_residual, solve_lyapunov, solve_lyapunov_with};
pub use matrix::{
    characteristic_polynomial, embed_drift, embedding_gram, is_hurwitz, real_embedding_matrix,
    stability_margin, ComplexMatrix2, ComplexVector2, RealMatrix4, RealMatrix4x2,
};
pub use riccati::{riccati_residual, solve_riccati_biased, solve_riccati_biased_with};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("linearized Lyapunov system is numerically singular (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },
    #[error("noise matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NonSymmetricInput { asymmetry: f64 },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("Riccati iteration did not converge after {iterations} steps (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error("effective Riccati drift lost stability at iteration {iteration}")]
    UnstableEffectiveDrift { iteration: usize },
}

/// Solver tolerances. The defaults are the documented contract values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative asymmetry allowed in a noise matrix.
    pub symmetry: f64,
    /// Pivot threshold, relative to the largest operator entry.
    pub singular_pivot: f64,
    /// Riccati successive-iterate tolerance, relative to `max(1, ‖V‖)`.
    pub riccati_step: f64,
    /// Riccati residual bound, relative to `max(‖N‖, 1)`.
    pub riccati_residual: f64,
    pub riccati_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-12,
            singular_pivot: 1e-13,
            riccati_step: 1e-11,
            riccati_residual: 1e-9,
            riccati_max_iter: 100,
        }
    }
}
