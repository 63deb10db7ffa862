use super::{LinalgError, RealMatrix4, Tolerances};

const DIM: usize = 16;

#[inline]
fn vec_index(i: usize, j: usize) -> usize {
    i + 4 * j
}

/// `A·V + V·Aᵀ + N`.
pub fn lyapunov_residual(a: &RealMatrix4, v: &RealMatrix4, n: &RealMatrix4) -> RealMatrix4 {
    *a * *v + *v * a.transpose() + *n
}

/// Solve `A·V + V·Aᵀ + N = 0` with default tolerances.
pub fn solve_lyapunov(a: &RealMatrix4, n: &RealMatrix4) -> Result<RealMatrix4, LinalgError> {
    solve_lyapunov_with(a, n, &Tolerances::default())
}

/// Solve `A·V + V·Aᵀ + N = 0` through the vectorized 16×16 system
/// `(I⊗A + A⊗I)·vec V = -vec N`, followed by one step of iterative
/// refinement.
pub fn solve_lyapunov_with(
    a: &RealMatrix4,
    n: &RealMatrix4,
    tol: &Tolerances,
) -> Result<RealMatrix4, LinalgError> {
    if !a.is_finite() || !n.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = n.max_abs();
    let asymmetry = if scale > 0.0 { n.asymmetry() / scale } else { 0.0 };
    if asymmetry > tol.symmetry {
        return Err(LinalgError::NonSymmetricInput { asymmetry });
    }
    let n = n.symmetrized();

    let mut op = [[0.0; DIM]; DIM];
    for i in 0..4 {
        for j in 0..4 {
            let row = vec_index(i, j);
            for k in 0..4 {
                op[row][vec_index(k, j)] += a[(i, k)];
                op[row][vec_index(i, k)] += a[(j, k)];
            }
        }
    }
    let lu = Lu::factor(op, tol.singular_pivot)?;

    let mut rhs = [0.0; DIM];
    for i in 0..4 {
        for j in 0..4 {
            rhs[vec_index(i, j)] = -n[(i, j)];
        }
    }
    let x = lu.solve(rhs);
    let mut v = RealMatrix4::from_fn(|i, j| x[vec_index(i, j)]);

    let r = lyapunov_residual(a, &v, &n);
    let mut rr = [0.0; DIM];
    for i in 0..4 {
        for j in 0..4 {
            rr[vec_index(i, j)] = -r[(i, j)];
        }
    }
    let dx = lu.solve(rr);
    v = v + RealMatrix4::from_fn(|i, j| dx[vec_index(i, j)]);

    Ok(v.symmetrized())
}

/// LU factorization with partial pivoting of the fixed 16×16 operator.
struct Lu {
    lu: [[f64; DIM]; DIM],
    perm: [usize; DIM],
}

impl Lu {
    fn factor(mut m: [[f64; DIM]; DIM], rel_pivot: f64) -> Result<Self, LinalgError> {
        let scale = m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if scale == 0.0 {
            return Err(LinalgError::SingularSystem { pivot: 0.0 });
        }
        let mut perm = [0usize; DIM];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for col in 0..DIM {
            let (pivot_row, pivot) = (col..DIM)
                .map(|r| (r, m[r][col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= rel_pivot * scale {
                return Err(LinalgError::SingularSystem { pivot: pivot / scale });
            }
            m.swap(col, pivot_row);
            perm.swap(col, pivot_row);
            let d = m[col][col];
            for r in col + 1..DIM {
                let f = m[r][col] / d;
                if f == 0.0 {
                    continue;
                }
                m[r][col] = f;
                for c in col + 1..DIM {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
        Ok(Self { lu: m, perm })
    }

    fn solve(&self, b: [f64; DIM]) -> [f64; DIM] {
        let mut y = [0.0; DIM];
        for i in 0..DIM {
            let mut s = b[self.perm[i]];
            for k in 0..i {
                s -= self.lu[i][k] * y[k];
            }
            y[i] = s;
        }
        let mut x = [0.0; DIM];
        for i in (0..DIM).rev() {
            let mut s = y[i];
            for k in i + 1..DIM {
                s -= self.lu[i][k] * x[k];
            }
            x[i] = s / self.lu[i][i];
        }
        x
    }
}
