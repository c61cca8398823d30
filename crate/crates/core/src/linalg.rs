//! Dense linear algebra used by the kernel and intertwiner solvers.
//!
//! Matrices are vectorized column-major: `vec(A)[i + rows * j] = A[(i, j)]`,
//! so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};

/// Singular values below `NULLSPACE_RTOL * max(σ_max, 1)` count as zero.
pub const NULLSPACE_RTOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;

pub fn vectorize(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v)
}

/// Matrix of `X ↦ A X B` acting on `vec(X)`.
pub fn sandwich_operator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    b.transpose().kronecker(a)
}

/// Singular values (descending) and matching right singular vectors of a
/// constraint matrix.
///
/// Wide matrices are padded with zero rows so every right singular vector
/// is available, and tall ones are first compressed to their square
/// triangular QR factor, which has the same singular values and right
/// singular vectors.
pub struct RightSvd {
    values: Vec<f64>,
    // Right singular vectors as rows, in the order of `values`.
    v_rows: DMatrix<f64>,
}

impl RightSvd {
    pub fn new(a: &DMatrix<f64>) -> RightSvd {
        let (m, n) = a.shape();
        if n == 0 {
            return RightSvd { values: Vec::new(), v_rows: DMatrix::zeros(0, 0) };
        }
        let square = if m < n {
            a.clone().resize_vertically(n, 0.0)
        } else if m > n {
            a.clone().qr().r()
        } else {
            a.clone()
        };
        let svd = square.svd(false, true);
        let v_t = svd.v_t.expect("requested V");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let values = order.iter().map(|&i| svd.singular_values[i]).collect();
        let v_rows = DMatrix::from_fn(order.len(), n, |r, c| v_t[(order[r], c)]);
        RightSvd { values, v_rows }
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_singular_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Canonical orthonormal nullspace basis (columns), counting singular
    /// values at or below `NULLSPACE_RTOL * max(scale, 1)` as zero.
    pub fn nullspace(&self, scale: f64) -> DMatrix<f64> {
        let n = self.v_rows.ncols();
        let cutoff = NULLSPACE_RTOL * scale.max(1.0);
        let null_rows: Vec<usize> =
            (0..self.values.len()).filter(|&i| self.values[i] <= cutoff).collect();
        let basis = DMatrix::from_fn(n, null_rows.len(), |r, c| self.v_rows[(null_rows[c], r)]);
        canonical_basis(&basis)
    }
}

/// Singular values of `a` in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank under the nullspace threshold.
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = singular_values(a);
    let cutoff = NULLSPACE_RTOL * s[0].max(1.0);
    s.iter().filter(|&&v| v > cutoff).count()
}

/// Orthonormal basis of the nullspace of `a`, as columns, in canonical form.
pub fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return canonical_basis(&DMatrix::identity(n, n));
    }
    let svd = RightSvd::new(a);
    svd.nullspace(svd.max_singular_value())
}

/// Largest singular value of `a`, or 0 for empty matrices.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        singular_values(a)[0]
    }
}

/// A canonical orthonormal basis for the column span of `basis`.
///
/// The span is brought to reduced row echelon form (which depends only on
/// the subspace), then Gram-Schmidt orthonormalized in pivot order with the
/// first significant coordinate of each vector made positive. Different
/// bases of the same subspace give the same output up to rounding.
pub fn canonical_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = basis.shape();
    if k == 0 {
        return DMatrix::zeros(n, 0);
    }
    // Rows of `r` span the subspace.
    let mut r = basis.transpose();
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == k {
            break;
        }
        let (best, best_abs) = (pivot_row..k)
            .map(|i| (i, r[(i, col)].abs()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= PIVOT_TOL {
            continue;
        }
        r.swap_rows(pivot_row, best);
        let p = r[(pivot_row, col)];
        for j in 0..n {
            r[(pivot_row, j)] /= p;
        }
        for i in 0..k {
            if i != pivot_row {
                let factor = r[(i, col)];
                if factor != 0.0 {
                    for j in 0..n {
                        r[(i, j)] -= factor * r[(pivot_row, j)];
                    }
                }
            }
        }
        pivot_row += 1;
    }
    let rows: Vec<DVector<f64>> = (0..pivot_row).map(|i| r.row(i).transpose()).collect();
    let q = gram_schmidt(&rows);
    DMatrix::from_columns(&q)
}

/// Modified Gram-Schmidt with re-orthogonalization; drops vectors that are
/// numerically dependent on earlier ones.
pub fn gram_schmidt(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm <= PIVOT_TOL * norm0.max(1.0) {
            continue;
        }
        w /= norm;
        if let Some(first) = w.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                w.neg_mut();
            }
        }
        out.push(w);
    }
    out
}

/// Orthonormal basis (columns) of the span of `vectors`, via SVD.
pub fn orthonormal_span(vectors: &[DVector<f64>], len: usize) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::zeros(len, 0);
    }
    let a = DMatrix::from_columns(vectors);
    let svd = a.svd(true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cutoff = NULLSPACE_RTOL * smax.max(1.0);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > cutoff).collect();
    DMatrix::from_fn(len, keep.len(), |r, c| u[(r, keep[c])])
}

/// Largest relative residual `‖v − QQᵀv‖ / ‖v‖` over `vectors`, for an
/// orthonormal column basis `q`. Zero vectors contribute nothing.
pub fn projection_residual(q: &DMatrix<f64>, vectors: &[DVector<f64>]) -> f64 {
    vectors
        .iter()
        .map(|v| {
            let norm = v.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let proj = if q.ncols() == 0 { DVector::zeros(v.len()) } else { q * (q.transpose() * v) };
            (v - proj).norm() / norm
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sandwich_matches_direct_product() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 0.5, 2.0, -3.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 2.0]);
        let direct = vectorize(&(&a * &x * &b));
        let via_op = sandwich_operator(&a, &b) * vectorize(&x);
        assert!((direct - via_op).norm() < 1e-12);
    }

    #[test]
    fn nullspace_of_swap_commutant() {
        // X P - P X = 0 for the 2x2 swap P.
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let i = DMatrix::identity(2, 2);
        let a = sandwich_operator(&i, &p) - sandwich_operator(&p, &i);
        let ns = nullspace(&a);
        assert_eq!(ns.ncols(), 2);
        assert!((&a * &ns).norm() < 1e-12);
        assert!((ns.transpose() * &ns - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn empty_system_is_unconstrained() {
        let a = DMatrix::<f64>::zeros(0, 3);
        assert_eq!(nullspace(&a).ncols(), 3);
        let z = DMatrix::<f64>::zeros(4, 3);
        assert_eq!(nullspace(&z).ncols(), 3);
    }

    #[test]
    fn wide_systems_return_full_nullspace() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let ns = nullspace(&a);
        assert_eq!(ns.ncols(), 2);
        assert!((&a * &ns).norm() < 1e-12);
    }

    #[test]
    fn rank_and_projection() {
        let v1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let v2 = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let q = orthonormal_span(&[v1.clone(), v2.clone(), &v1 + &v2], 3);
        assert_eq!(q.ncols(), 2);
        assert!(projection_residual(&q, &[v1 * 3.0 - v2]) < 1e-14);
        let off = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!((projection_residual(&q, &[off]) - 1.0).abs() < 1e-14);
        assert_eq!(rank(&DMatrix::from_columns(&[q.column(0).into_owned()])), 1);
    }

    proptest! {
        // The canonical form depends only on the subspace, not the basis.
        #[test]
        fn canonical_basis_is_basis_independent(
            entries in proptest::collection::vec(-1.0f64..1.0, 12),
            mix in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let basis = DMatrix::from_column_slice(6, 2, &entries);
            prop_assume!(singular_values(&basis)[1] > 1e-3);
            let m = DMatrix::from_column_slice(2, 2, &mix);
            prop_assume!(m.determinant().abs() > 1e-2);
            let a = canonical_basis(&basis);
            let b = canonical_basis(&(&basis * m));
            prop_assert_eq!(a.ncols(), 2);
            prop_assert!((a - b).norm() < 1e-8);
        }
    }
}
