use super::{is_hurwitz, solve_lyapunov_with, LinalgError, RealMatrix4, Tolerances};

/// `[A - F₋]·V + V·[A - F₋]ᵀ + V·F₊·V + N`.
pub fn riccati_residual(
    a: &RealMatrix4,
    n: &RealMatrix4,
    fminus: &RealMatrix4,
    fplus: &RealMatrix4,
    v: &RealMatrix4,
) -> RealMatrix4 {
    let shifted = *a - *fminus;
    shifted * *v + *v * shifted.transpose() + *v * *fplus * *v + *n
}

/// Solve `0 = [A - F₋]·V + V·[A - F₋]ᵀ + V·F₊·V + N` by Newton–Kleinman
/// iteration from the warm start `v0`, with default tolerances.
pub fn solve_riccati_biased(
    a: &RealMatrix4,
    n: &RealMatrix4,
    fminus: &RealMatrix4,
    fplus: &RealMatrix4,
    v0: &RealMatrix4,
) -> Result<RealMatrix4, LinalgError> {
    solve_riccati_biased_with(a, n, fminus, fplus, v0, &Tolerances::default())
}

/// Newton–Kleinman: `V_{k+1}` solves the Lyapunov equation with drift
/// `A - F₋ + V_k F₊` and constant term `N - V_k F₊ V_k`. The effective drift
/// must stay Hurwitz; losing that means the tilted problem has no
/// stabilizing solution on this branch.
pub fn solve_riccati_biased_with(
    a: &RealMatrix4,
    n: &RealMatrix4,
    fminus: &RealMatrix4,
    fplus: &RealMatrix4,
    v0: &RealMatrix4,
    tol: &Tolerances,
) -> Result<RealMatrix4, LinalgError> {
    if ![a, n, fminus, fplus, v0].iter().all(|m| m.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let shifted = *a - *fminus;
    let n = n.symmetrized();
    let fplus = fplus.symmetrized();
    let mut v = v0.symmetrized();
    let mut last_step = f64::INFINITY;

    for iteration in 0..tol.riccati_max_iter {
        let drift = shifted + v * fplus;
        if !is_hurwitz(&drift) {
            return Err(LinalgError::UnstableEffectiveDrift { iteration });
        }
        let constant = (n - v * fplus * v).symmetrized();
        let next = solve_lyapunov_with(&drift, &constant, tol).map_err(|e| match e {
            LinalgError::SingularSystem { .. } => LinalgError::UnstableEffectiveDrift { iteration },
            other => other,
        })?;
        last_step = (next - v).max_abs();
        v = next;
        if last_step <= tol.riccati_step * v.max_abs().max(1.0) {
            let residual = riccati_residual(a, &n, fminus, &fplus, &v).max_abs();
            if residual > tol.riccati_residual * n.max_abs().max(1.0) {
                break;
            }
            if !is_hurwitz(&(shifted + v * fplus)) {
                return Err(LinalgError::UnstableEffectiveDrift { iteration });
            }
            return Ok(v);
        }
    }
    Err(LinalgError::NoConvergence {
        iterations: tol.riccati_max_iter,
        last_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_lyapunov;

    fn stable_drift() -> RealMatrix4 {
        RealMatrix4([
            [-0.9, 0.4, 0.1, 0.0],
            [-0.4, -0.9, 0.0, 0.1],
            [-0.6, 0.2, -1.1, 1.3],
            [-0.2, -0.6, -1.3, -1.1],
        ])
    }

    #[test]
    fn unbiased_reduces_to_lyapunov() {
        let a = stable_drift();
        let n = RealMatrix4::diagonal([1.0, 1.0, 2.5, 2.5]);
        let z = RealMatrix4::zeros();
        let v = solve_riccati_biased(&a, &n, &z, &z, &RealMatrix4::identity()).unwrap();
        let w = solve_lyapunov(&a, &n).unwrap();
        assert!((v - w).max_abs() < 1e-11);
    }

    #[test]
    fn biased_solution_is_symmetric_and_solves() {
        let a = stable_drift();
        let n = RealMatrix4::diagonal([1.0, 1.0, 2.5, 2.5]);
        let proj = RealMatrix4::diagonal([1.0, 1.0, 0.0, 0.0]);
        let fm = proj.scale(-0.05);
        let fp = proj.scale(-0.02);
        let v0 = solve_lyapunov(&a, &n).unwrap();
        let v = solve_riccati_biased(&a, &n, &fm, &fp, &v0).unwrap();
        assert!(v.asymmetry() <= 1e-12);
        assert!(riccati_residual(&a, &n, &fm, &fp, &v).max_abs() < 1e-9);
    }

    #[test]
    fn strong_positive_bias_has_no_stable_branch() {
        let a = RealMatrix4::identity().scale(-0.5);
        let n = RealMatrix4::identity();
        let fp = RealMatrix4::identity().scale(5.0);
        let err = solve_riccati_biased(&a, &n, &RealMatrix4::zeros(), &fp, &RealMatrix4::identity())
            .unwrap_err();
        assert!(matches!(
            err,
            LinalgError::UnstableEffectiveDrift { .. } | LinalgError::NoConvergence { .. }
        ));
    }
}
