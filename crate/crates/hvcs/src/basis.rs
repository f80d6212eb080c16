//! Tensor-product orthonormal Legendre system on `[-1, 1]^d`.
//!
//! The univariate family is normalized against the uniform probability
//! measure: `eval_1d(n, t) = sqrt(2n + 1) * P_n(t)` with `P_n` the standard
//! Legendre polynomial, so that the basis is orthonormal in
//! `L^2([-1,1], dt/2)`. The sup-norm of a tensor factor is attained at the
//! cube boundary, giving the uniform bound `prod_i sqrt(2 nu_i + 1)` used in
//! sample-complexity bookkeeping.

use crate::multiindex::{IndexSet, MultiIndex};

/// Round-off tolerance when clamping evaluation points onto the cube.
pub const DOMAIN_CLAMP: f64 = 1e-12;

fn clamp_unit(t: f64) -> f64 {
    assert!(
        t.abs() <= 1.0 + DOMAIN_CLAMP,
        "evaluation point {t} outside [-1, 1]"
    );
    t.clamp(-1.0, 1.0)
}

/// Orthonormal Legendre polynomial `sqrt(2n+1) P_n(t)` by the three-term
/// recurrence. Points outside `[-1, 1]` by at most `1e-12` are clamped.
pub fn eval_1d(n: u32, t: f64) -> f64 {
    let t = clamp_unit(t);
    let mut prev = 1.0; // P_0
    if n == 0 {
        return prev;
    }
    let mut cur = t; // P_1
    for k in 1..n {
        let kf = f64::from(k);
        let next = ((2.0 * kf + 1.0) * t * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (2.0 * f64::from(n) + 1.0).sqrt() * cur
}

/// Tensor-product evaluation `Psi_nu(y) = prod_i eval_1d(nu_i, y_i)`.
///
/// Panics on a dimension mismatch between `nu` and `y`.
pub fn eval_tensor(nu: &MultiIndex, y: &[f64]) -> f64 {
    assert_eq!(
        nu.dim(),
        y.len(),
        "multi-index dimension {} vs point dimension {}",
        nu.dim(),
        y.len()
    );
    let mut prod = 1.0;
    for (&n, &t) in nu.entries().iter().zip(y) {
        if n == 0 {
            // factor is identically 1; still validate the point
            let _ = clamp_unit(t);
            continue;
        }
        prod *= eval_1d(n, t);
    }
    prod
}

/// Sup-norm of a single tensor factor: `prod_i sqrt(2 nu_i + 1)`.
pub fn tensor_sup_norm(nu: &MultiIndex) -> f64 {
    nu.entries()
        .iter()
        .map(|&n| (2.0 * f64::from(n) + 1.0).sqrt())
        .product()
}

/// Uniform bound of the system over the index set:
/// `max_{nu in J} prod_i sqrt(2 nu_i + 1)`. At least 1, with equality iff
/// the set is `{0}`.
pub fn uniform_bound(set: &IndexSet) -> f64 {
    set.iter()
        .map(tensor_sup_norm)
        .fold(f64::NEG_INFINITY, f64::max)
}
