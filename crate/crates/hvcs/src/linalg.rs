//! Small dense linear algebra kernels.
//!
//! Everything here accumulates contractions in a fixed index order, so
//! results are bitwise reproducible and, for column-wise operations,
//! independent of how many trailing zero columns a matrix carries. The
//! iterative solver relies on that to stay faithful to its
//! discretization-independent formulation.

use ndarray::{Array1, Array2};

/// `a * b` with deterministic accumulation over the shared index.
///
/// Skipping exactly-zero multipliers never changes a result (adding a
/// signed zero to an accumulator is exact) and makes products with
/// row-sparse iterates cheap.
pub(crate) fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (p, q) = a.dim();
    let (q2, r) = b.dim();
    assert_eq!(q, q2, "matmul: inner dimensions {q} vs {q2}");
    let mut c = Array2::<f64>::zeros((p, r));
    let a_s = a.as_slice().expect("contiguous");
    let b_s = b.as_slice().expect("contiguous");
    let c_s = c.as_slice_mut().expect("contiguous");
    for i in 0..p {
        let arow = &a_s[i * q..(i + 1) * q];
        let crow = &mut c_s[i * r..(i + 1) * r];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b_s[k * r..(k + 1) * r];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += aik * bv;
            }
        }
    }
    c
}

/// `a^T * b` with deterministic accumulation over rows of `a`.
pub(crate) fn at_b(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (m, p) = a.dim();
    let (m2, r) = b.dim();
    assert_eq!(m, m2, "at_b: row counts {m} vs {m2}");
    let mut c = Array2::<f64>::zeros((p, r));
    let a_s = a.as_slice().expect("contiguous");
    let b_s = b.as_slice().expect("contiguous");
    let c_s = c.as_slice_mut().expect("contiguous");
    for i in 0..m {
        let arow = &a_s[i * p..(i + 1) * p];
        let brow = &b_s[i * r..(i + 1) * r];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let crow = &mut c_s[k * r..(k + 1) * r];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += aik * bv;
            }
        }
    }
    c
}

/// Gram matrix `a^T a`.
pub(crate) fn gram(a: &Array2<f64>) -> Array2<f64> {
    at_b(a, a)
}

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` if a
/// pivot fails (the matrix is not positive definite to working precision).
pub(crate) fn cholesky_lower(m: &Array2<f64>) -> Option<Array2<f64>> {
    let (n, n2) = m.dim();
    assert_eq!(n, n2, "cholesky: matrix must be square");
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solves `L y = b` for lower-triangular `L`, overwriting nothing.
pub(crate) fn solve_lower(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub(crate) fn solve_lower_transpose(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    assert_eq!(b.len(), n);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves the SPD system `m x = b` via Cholesky. Returns `None` when the
/// factorization fails.
pub(crate) fn spd_solve_many(m: &Array2<f64>, b: &Array2<f64>) -> Option<Array2<f64>> {
    let l = cholesky_lower(m)?;
    let (n, r) = b.dim();
    let mut x = Array2::<f64>::zeros((n, r));
    for j in 0..r {
        let col: Vec<f64> = (0..n).map(|i| b[[i, j]]).collect();
        let y = solve_lower(&l, &col);
        let z = solve_lower_transpose(&l, &y);
        for i in 0..n {
            x[[i, j]] = z[i];
        }
    }
    Some(x)
}

/// Right-multiplication solve `X L = B` for lower-triangular `L`; applied
/// row by row of `B`.
pub(crate) fn right_solve_lower(b: &Array2<f64>, l: &Array2<f64>) -> Array2<f64> {
    let (n, k) = b.dim();
    assert_eq!(l.nrows(), k);
    let mut x = Array2::<f64>::zeros((n, k));
    for i in 0..n {
        // (X L)[i, j] = sum_{c >= j} X[i, c] L[c, j]
        for j in (0..k).rev() {
            let mut s = b[[i, j]];
            for c in j + 1..k {
                s -= x[[i, c]] * l[[c, j]];
            }
            x[[i, j]] = s / l[[j, j]];
        }
    }
    x
}

/// Thomas algorithm for a tridiagonal system with sub/main/super diagonals.
/// Pivots are asserted nonzero; the elliptic systems this serves are
/// strictly diagonally dominant M-matrices.
pub(crate) fn thomas_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Array1<f64> {
    let n = diag.len();
    assert!(n >= 1);
    assert_eq!(sub.len(), n.saturating_sub(1));
    assert_eq!(sup.len(), n.saturating_sub(1));
    assert_eq!(rhs.len(), n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    assert!(diag[0] != 0.0, "tridiagonal solve: zero pivot");
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i - 1] * c[i - 1];
        assert!(denom != 0.0, "tridiagonal solve: zero pivot at row {i}");
        if i < n - 1 {
            c[i] = sup[i] / denom;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / denom;
    }
    let mut x = Array1::<f64>::zeros(n);
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, sorted
/// ascending. Intended for the small matrices of the brute-force checkers.
pub(crate) fn symmetric_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let (n, n2) = m.dim();
    assert_eq!(n, n2, "symmetric_eigenvalues: matrix must be square");
    let mut a = m.clone();
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() <= 1e-15 * (1.0 + frobenius(&a)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

pub(crate) fn frobenius(a: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for v in a.iter() {
        s += v * v;
    }
    s.sqrt()
}
