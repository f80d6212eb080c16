//! Empirical verification of compressed-sensing properties at small scale.
//!
//! Three tools back the recovery theory:
//!
//! - [`rip_constant_exact`]: the restricted isometry constant `delta_s` by
//!   exhaustive support enumeration (hard-limited to `N <= 20`, `s <= 4`).
//! - [`nsp_randomized_check`]: a randomized *falsifier* for the
//!   Hilbert-valued robust null space property. It can find violations; it
//!   cannot certify the property, which is computationally hard in general.
//!   [`nsp_grid_scan`] maps the `(rho, tau)` region where no violation was
//!   found over a trial budget.
//! - [`sample_complexity_bound`]: bookkeeping evaluation of the
//!   uniform-recovery sample bound driven by the basis sup-norm bound; the
//!   universal constant is supplied by the caller.

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::basis;
use crate::error::{Error, Result};
use crate::hilbert::{HilbertVector, InnerProduct};
use crate::linalg;
use crate::multiindex::IndexSet;

/// Hard enumeration limits for the exact RIP computation.
pub const RIP_MAX_COLUMNS: usize = 20;
pub const RIP_MAX_ORDER: usize = 4;

/// Exact restricted isometry constant of order `s`.
#[derive(Debug, Clone, Serialize)]
pub struct RipEstimate {
    pub s: usize,
    pub delta_s: f64,
    /// Column support attaining the constant.
    pub worst_support: Vec<usize>,
}

/// Exact `delta_s = max_{|S| = s} max(|lambda_max(A_S^T A_S) - 1|,
/// |1 - lambda_min(A_S^T A_S)|)` by enumerating every support.
pub fn rip_constant_exact(a: &Array2<f64>, s: usize) -> Result<RipEstimate> {
    let n = a.ncols();
    if n > RIP_MAX_COLUMNS || s > RIP_MAX_ORDER {
        return Err(Error::EnumerationLimit(format!(
            "exact RIP limited to N <= {RIP_MAX_COLUMNS}, s <= {RIP_MAX_ORDER}; got N = {n}, s = {s}"
        )));
    }
    if s == 0 || s > n {
        return Err(Error::EnumerationLimit(format!(
            "order s = {s} must satisfy 1 <= s <= N = {n}"
        )));
    }
    let mut delta = -1.0f64;
    let mut worst = Vec::new();
    let mut support = (0..s).collect::<Vec<usize>>();
    loop {
        let sub = column_submatrix(a, &support);
        let gram = linalg::gram(&sub);
        let eigs = linalg::symmetric_eigenvalues(&gram);
        let lo = eigs.first().copied().unwrap();
        let hi = eigs.last().copied().unwrap();
        let local = (hi - 1.0).abs().max((1.0 - lo).abs());
        if local > delta {
            delta = local;
            worst = support.clone();
        }
        if !next_combination(&mut support, n) {
            break;
        }
    }
    Ok(RipEstimate {
        s,
        delta_s: delta,
        worst_support: worst,
    })
}

/// Advances a sorted k-subset of `0..n` to its lexicographic successor.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn column_submatrix(a: &Array2<f64>, support: &[usize]) -> Array2<f64> {
    let m = a.nrows();
    let mut sub = Array2::<f64>::zeros((m, support.len()));
    for (c, &j) in support.iter().enumerate() {
        for i in 0..m {
            sub[[i, c]] = a[[i, j]];
        }
    }
    sub
}

/// A concrete witness violating the null space property inequality.
#[derive(Debug, Clone)]
pub struct NspViolation {
    pub vector: HilbertVector,
    pub support: Vec<usize>,
    /// Amount by which the left side exceeds the right side.
    pub gap: f64,
}

/// Outcome of a randomized null-space-property search.
#[derive(Debug, Clone)]
pub struct NspWitness {
    pub s: usize,
    pub rho: f64,
    pub tau_nsp: f64,
    pub trials: usize,
    /// First violation found, if any. Absence is NOT a certificate.
    pub violating_example: Option<NspViolation>,
}

impl NspWitness {
    pub fn violated(&self) -> bool {
        self.violating_example.is_some()
    }
}

/// Margin below which a numerical violation is not trusted.
const NSP_VIOLATION_MARGIN: f64 = 1e-10;

/// Left-minus-right of the robust NSP inequality of order `s` at `(z, S)`:
/// `||z_S||_{V,2} - (rho/sqrt(s)) ||z_{S^c}||_{V,1} - tau ||A z||_{V,2}`.
/// Positive values violate the property.
pub fn nsp_inequality_gap(
    a: &Array2<f64>,
    z: &HilbertVector,
    support: &[usize],
    s: usize,
    rho: f64,
    tau_nsp: f64,
) -> f64 {
    assert!(s >= 1 && support.len() <= s, "support larger than the order");
    let member = |j: usize| support.contains(&j);
    let mut on_sq = 0.0;
    let mut off_l1 = 0.0;
    for j in 0..z.rows() {
        let norm = z.row_norm(j);
        if member(j) {
            on_sq += norm * norm;
        } else {
            off_l1 += norm;
        }
    }
    let az = crate::operator::apply_matrix(a, z);
    on_sq.sqrt() - (rho / (s as f64).sqrt()) * off_l1 - tau_nsp * az.v2_norm()
}

/// Randomized falsifier for the robust NSP of order `s` with constants
/// `(rho, tau_nsp)`.
///
/// Each trial draws a Gaussian Hilbert-valued vector and a random support of
/// size at most `s`, and additionally tests the adversarial support holding
/// the `s` largest rows. With an identity inner product the discretization
/// dimension is itself randomized in `1..=ip.dim()` per trial; an explicit
/// Gram keeps its fixed dimension. Returns the first violation found, or a
/// no-violation record over the trial budget.
pub fn nsp_randomized_check(
    a: &Array2<f64>,
    s: usize,
    rho: f64,
    tau_nsp: f64,
    trials: usize,
    ip: &Arc<InnerProduct>,
    seed: u64,
) -> NspWitness {
    assert!(trials >= 1, "at least one trial required");
    assert!(s >= 1, "order must be at least 1");
    let n = a.ncols();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let trial_ip = if ip.is_identity() && ip.dim() > 1 {
            InnerProduct::identity(rng.random_range(1..=ip.dim()))
        } else {
            Arc::clone(ip)
        };
        let k = trial_ip.dim();
        let data = Array2::from_shape_fn((n, k), |_| rng.sample::<f64, _>(StandardNormal));
        let z = HilbertVector::new(data, trial_ip).expect("finite Gaussian draw");

        let size = rng.random_range(1..=s.min(n));
        let mut support = sample_without_replacement(&mut rng, n, size);
        support.sort_unstable();
        let candidates = [support, top_rows(&z, s.min(n))];
        for support in candidates {
            let gap = nsp_inequality_gap(a, &z, &support, s, rho, tau_nsp);
            if gap > NSP_VIOLATION_MARGIN {
                return NspWitness {
                    s,
                    rho,
                    tau_nsp,
                    trials,
                    violating_example: Some(NspViolation {
                        vector: z,
                        support,
                        gap,
                    }),
                };
            }
        }
    }
    NspWitness {
        s,
        rho,
        tau_nsp,
        trials,
        violating_example: None,
    }
}

fn sample_without_replacement(rng: &mut ChaCha20Rng, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

fn top_rows(z: &HilbertVector, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.rows()).collect();
    let norms = z.row_norms();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let mut top: Vec<usize> = order.into_iter().take(k).collect();
    top.sort_unstable();
    top
}

/// One grid point of a `(rho, tau)` scan.
#[derive(Debug, Clone, Serialize)]
pub struct NspGridPoint {
    pub rho: f64,
    pub tau_nsp: f64,
    pub violation_found: bool,
}

/// Scans a `(rho, tau)` grid with [`nsp_randomized_check`] and reports
/// where the falsifier failed to find a violation — the empirically
/// feasible constant region.
pub fn nsp_grid_scan(
    a: &Array2<f64>,
    s: usize,
    rhos: &[f64],
    taus: &[f64],
    trials: usize,
    ip: &Arc<InnerProduct>,
    seed: u64,
) -> Vec<NspGridPoint> {
    let mut out = Vec::with_capacity(rhos.len() * taus.len());
    for (i, &rho) in rhos.iter().enumerate() {
        for (j, &tau_nsp) in taus.iter().enumerate() {
            let witness = nsp_randomized_check(
                a,
                s,
                rho,
                tau_nsp,
                trials,
                ip,
                seed.wrapping_add((i * taus.len() + j) as u64),
            );
            out.push(NspGridPoint {
                rho,
                tau_nsp,
                violation_found: witness.violated(),
            });
        }
    }
    out
}

/// Evaluates the uniform-recovery sample bound
/// `ceil(C * T * max(log^2(T) log N, log(T) log(log(T) N^{log s})))` with
/// `T = Theta^2 s` and `Theta` the basis uniform bound over `set`.
/// Bookkeeping only: the universal constant is not computable, and no
/// sufficiency claim is made at finite scale.
pub fn sample_complexity_bound(set: &IndexSet, s: usize, c: f64) -> Result<u64> {
    if s < 2 {
        return Err(Error::InvalidConfig(format!(
            "sample complexity bound needs s >= 2 for positive logarithms, got {s}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("constant C must be positive, got {c}")));
    }
    let theta = basis::uniform_bound(set);
    let n = set.len() as f64;
    let t = theta * theta * s as f64;
    let log_t = t.ln();
    let term1 = log_t * log_t * n.ln();
    let term2 = log_t * (log_t.ln() + (s as f64).ln() * n.ln());
    let bound = c * t * term1.max(term2);
    Ok(bound.max(0.0).ceil() as u64)
}
