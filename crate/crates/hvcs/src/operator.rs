//! The normalized sampling operator and its spectral data.
//!
//! Given an index set `J` and sample points `y_1, ..., y_m` in the cube, the
//! operator is the `m x N` matrix with entries `Psi_nu(y_i) / sqrt(m)`.
//! Applied to an `N x K` coefficient matrix it produces `m x K`
//! measurements; the adjoint is the plain transpose. Because the entries are
//! scalars acting identically on every `V`-coordinate, the adjoint is
//! independent of the `V` Gram matrix — the Gram only ever enters through
//! row norms.

use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::basis;
use crate::error::{Error, Result};
use crate::hilbert::{HilbertVector, InnerProduct};
use crate::linalg;
use crate::multiindex::IndexSet;

/// Normalized measurements: row `i` holds the discretized sample
/// `u(y_i) / sqrt(m)`.
#[derive(Debug, Clone)]
pub struct Measurements {
    data: Array2<f64>,
    ip: Arc<InnerProduct>,
}

impl Measurements {
    /// Wraps an already-normalized `m x K` matrix.
    pub fn new(data: Array2<f64>, ip: Arc<InnerProduct>) -> Result<Self> {
        if data.ncols() != ip.dim() {
            return Err(Error::DimensionMismatch(format!(
                "measurement dimension {} vs inner-product dimension {}",
                data.ncols(),
                ip.dim()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("measurements must be finite".into()));
        }
        Ok(Measurements { data, ip })
    }

    /// Stacks raw solution samples row-wise and applies the `1/sqrt(m)`
    /// normalization.
    pub fn from_solution_samples(samples: &[Array1<f64>], ip: Arc<InnerProduct>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("at least one sample required".into()));
        }
        let k = ip.dim();
        let m = samples.len();
        let scale = 1.0 / (m as f64).sqrt();
        let mut data = Array2::<f64>::zeros((m, k));
        for (i, s) in samples.iter().enumerate() {
            if s.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "sample {i} has length {}, expected {k}",
                    s.len()
                )));
            }
            for j in 0..k {
                data[[i, j]] = s[j] * scale;
            }
        }
        Measurements::new(data, ip)
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn inner_product(&self) -> &Arc<InnerProduct> {
        &self.ip
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    /// `||r||_{V,2}`: square root of the summed row `V`-norms squared.
    pub fn v2_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.data.nrows() {
            let row = self.data.row(i);
            s += self.ip.v_norm_sq(row.as_slice().expect("contiguous row"));
        }
        s.sqrt()
    }
}

/// The normalized `m x N` sampling matrix together with the sample points
/// and column index set it was assembled from.
#[derive(Debug, Clone)]
pub struct SamplingOperator {
    matrix: Array2<f64>,
    samples: Vec<Vec<f64>>,
    set: IndexSet,
}

impl SamplingOperator {
    /// Evaluates `Psi_nu(y_i) / sqrt(m)` for every sample and index.
    /// Samples must lie in `[-1, 1]^d` up to round-off.
    pub fn assemble(set: IndexSet, samples: &[Vec<f64>]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("at least one sample required".into()));
        }
        let d = set.dimension();
        for (i, y) in samples.iter().enumerate() {
            if y.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "sample {i} has dimension {}, index set has {d}",
                    y.len()
                )));
            }
            for &t in y {
                if t.abs() > 1.0 + basis::DOMAIN_CLAMP {
                    return Err(Error::InvalidConfig(format!(
                        "sample {i} coordinate {t} outside [-1, 1]"
                    )));
                }
            }
        }
        let m = samples.len();
        let n = set.len();
        let scale = 1.0 / (m as f64).sqrt();
        let mut matrix = Array2::<f64>::zeros((m, n));
        for (i, y) in samples.iter().enumerate() {
            for (j, nu) in set.iter().enumerate() {
                matrix[[i, j]] = basis::eval_tensor(nu, y) * scale;
            }
        }
        Ok(SamplingOperator {
            matrix,
            samples: samples.to_vec(),
            set,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    pub fn num_samples(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_columns(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, z: &HilbertVector) -> Measurements {
        apply_matrix(&self.matrix, z)
    }

    pub fn adjoint_apply(&self, r: &Measurements) -> HilbertVector {
        adjoint_apply_matrix(&self.matrix, r)
    }

    /// Power-iteration estimate of `||A^T A||_2`; see [`spectral_norm_sq`].
    pub fn spectral_norm_sq(&self, tol: f64, max_iter: usize) -> Result<f64> {
        spectral_norm_sq(&self.matrix, tol, max_iter)
    }

    /// One sample point per line, comma-separated coordinates.
    pub fn save_samples_csv(&self, path: &Path) -> Result<()> {
        save_samples_csv(&self.samples, path)
    }
}

/// `A * c` for a raw matrix; the result shares `c`'s inner product.
pub fn apply_matrix(a: &Array2<f64>, z: &HilbertVector) -> Measurements {
    assert_eq!(
        a.ncols(),
        z.rows(),
        "operator has {} columns, vector has {} rows",
        a.ncols(),
        z.rows()
    );
    Measurements {
        data: linalg::matmul(a, z.data()),
        ip: Arc::clone(z.inner_product()),
    }
}

/// `A^T * r` for a raw matrix; the result shares `r`'s inner product.
pub fn adjoint_apply_matrix(a: &Array2<f64>, r: &Measurements) -> HilbertVector {
    assert_eq!(
        a.nrows(),
        r.len(),
        "operator has {} rows, measurements have {}",
        a.nrows(),
        r.len()
    );
    let data = linalg::at_b(a, r.data());
    HilbertVector::new(data, Arc::clone(r.inner_product())).expect("finite product")
}

/// Largest eigenvalue of `A^T A` by power iteration with a deterministic
/// seeded start vector. Terminates when the Rayleigh quotient's relative
/// increment drops below `tol`; the estimate approaches the true value from
/// below, so step-size selection divides by `estimate / (1 - tol)`.
pub fn spectral_norm_sq(a: &Array2<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    assert!(tol > 0.0 && tol < 1.0, "tolerance must be in (0, 1)");
    if linalg::frobenius(a) == 0.0 {
        return Err(Error::InvalidConfig(
            "spectral norm of the zero matrix requested".into(),
        ));
    }
    let n = a.ncols();
    let b = linalg::gram(a);
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_0001);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut lambda_prev = 0.0;
    let mut best = 0.0f64;
    for _ in 0..max_iter {
        let w = mat_vec(&b, &v);
        let lambda: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        best = best.max(lambda);
        let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wnorm == 0.0 {
            // v landed in the null space; restart from a fresh direction
            v = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            normalize(&mut v);
            continue;
        }
        if (lambda - lambda_prev).abs() <= tol * lambda.max(f64::MIN_POSITIVE) {
            return Ok(lambda);
        }
        lambda_prev = lambda;
        v = w;
        for x in &mut v {
            *x /= wnorm;
        }
    }
    Err(Error::SpectralNormStalled {
        iterations: max_iter,
        best,
    })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn mat_vec(b: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    let n = b.nrows();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..b.ncols() {
            s += b[[i, j]] * v[j];
        }
        out[i] = s;
    }
    out
}

pub fn save_samples_csv(samples: &[Vec<f64>], path: &Path) -> Result<()> {
    let mut out = String::new();
    for y in samples {
        let line: Vec<String> = y.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_samples_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let coords: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let coords = coords.map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        samples.push(coords);
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::total_degree_set;
    use ndarray::array;

    #[test]
    fn assemble_matches_direct_evaluation() {
        // J = {0}: constant column 1/sqrt(m)
        let set = total_degree_set(1, 0).unwrap();
        let samples = vec![vec![0.3], vec![-0.7], vec![0.0]];
        let a = SamplingOperator::assemble(set, &samples).unwrap();
        let expect = 1.0 / 3.0f64.sqrt();
        for i in 0..3 {
            assert!((a.matrix()[[i, 0]] - expect).abs() < 1e-15);
        }

        // J = TD(1,1) at {-1, +1}
        let set = total_degree_set(1, 1).unwrap();
        let a = SamplingOperator::assemble(set, &[vec![-1.0], vec![1.0]]).unwrap();
        let s2 = 2.0f64.sqrt();
        let s3 = 3.0f64.sqrt();
        let expect = array![[1.0 / s2, -s3 / s2], [1.0 / s2, s3 / s2]];
        for (x, y) in a.matrix().iter().zip(expect.iter()) {
            assert!((x - y).abs() < 1e-14);
        }

        // m = 1, TD(2,1) at the origin
        let set = total_degree_set(2, 1).unwrap();
        let a = SamplingOperator::assemble(set, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(a.matrix()[[0, 0]], 1.0);
        assert_eq!(a.matrix()[[0, 1]], 0.0);
        assert_eq!(a.matrix()[[0, 2]], 0.0);
    }

    #[test]
    fn assemble_rejects_bad_samples() {
        let set = total_degree_set(2, 1).unwrap();
        assert!(SamplingOperator::assemble(set.clone(), &[vec![0.0]]).is_err());
        assert!(SamplingOperator::assemble(set.clone(), &[vec![0.0, 1.5]]).is_err());
        assert!(SamplingOperator::assemble(set, &[]).is_err());
    }

    #[test]
    fn apply_and_adjoint_are_matrix_products() {
        let ip = InnerProduct::identity(2);
        let a = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let z = HilbertVector::new(array![[1.0, 2.0], [3.0, 4.0]], Arc::clone(&ip)).unwrap();
        let az = apply_matrix(&a, &z);
        assert_eq!(az.data(), &array![[1.0, 2.0], [3.0, 4.0], [4.0, 6.0]]);
        let back = adjoint_apply_matrix(&a, &az);
        assert_eq!(back.data(), &array![[5.0, 8.0], [7.0, 10.0]]);
    }

    #[test]
    fn zero_maps_to_zero() {
        let ip = InnerProduct::identity(3);
        let a = array![[0.5, -0.5], [0.25, 0.75]];
        let z = HilbertVector::zeros(2, Arc::clone(&ip));
        assert_eq!(apply_matrix(&a, &z).v2_norm(), 0.0);
    }

    #[test]
    fn orthonormal_columns_invert() {
        let ip = InnerProduct::identity(2);
        let a = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let z = HilbertVector::new(array![[1.5, -0.5], [2.0, 0.25]], Arc::clone(&ip)).unwrap();
        let back = adjoint_apply_matrix(&a, &apply_matrix(&a, &z));
        assert_eq!(back.data(), z.data());
    }

    #[test]
    fn adjoint_identity_holds() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let ip = InnerProduct::identity(4);
        let a = Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0));
        let z = HilbertVector::new(
            Array2::from_shape_fn((2, 4), |_| rng.random_range(-1.0..1.0)),
            Arc::clone(&ip),
        )
        .unwrap();
        let r = Measurements::new(
            Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0)),
            Arc::clone(&ip),
        )
        .unwrap();
        // <Az, r> = <z, A^T r> under the Frobenius pairing
        let az = apply_matrix(&a, &z);
        let atr = adjoint_apply_matrix(&a, &r);
        let lhs: f64 = az.data().iter().zip(r.data().iter()).map(|(x, y)| x * y).sum();
        let rhs: f64 = z.data().iter().zip(atr.data().iter()).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn spectral_norm_on_known_matrices() {
        let eye = Array2::<f64>::eye(5);
        let est = spectral_norm_sq(&eye, 1e-12, 1000).unwrap();
        assert!((est - 1.0).abs() < 1e-10);

        let a = array![[2.0, 0.0], [0.0, 1.0]];
        let est = spectral_norm_sq(&a, 1e-12, 10_000).unwrap();
        assert!((est - 4.0).abs() < 1e-8);

        assert!(spectral_norm_sq(&Array2::<f64>::zeros((2, 2)), 1e-10, 10).is_err());
    }

    #[test]
    fn spectral_norm_matches_eigen_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let a = Array2::from_shape_fn((10, 20), |_| rng.random_range(-1.0..1.0));
        let est = spectral_norm_sq(&a, 1e-13, 100_000).unwrap();
        let eigs = crate::linalg::symmetric_eigenvalues(&crate::linalg::gram(&a));
        let top = eigs.last().copied().unwrap();
        assert!((est - top).abs() < 1e-8 * top, "est {est} vs oracle {top}");
    }

    #[test]
    fn first_column_is_constant_and_entries_spot_checked() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let set = total_degree_set(3, 2).unwrap();
        let samples: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let a = SamplingOperator::assemble(set.clone(), &samples).unwrap();
        let scale = 1.0 / 7.0f64.sqrt();
        for i in 0..7 {
            assert_eq!(a.matrix()[[i, 0]], scale);
            for (j, nu) in set.iter().enumerate() {
                let direct = basis::eval_tensor(nu, &samples[i]) * scale;
                assert!((a.matrix()[[i, j]] - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gram_concentrates_toward_identity() {
        use rand::{Rng, SeedableRng};
        let set = total_degree_set(2, 2).unwrap();
        let mut max_dev = Vec::new();
        for (k, m) in [100usize, 1000, 10_000].iter().enumerate() {
            let mut rng = ChaCha20Rng::seed_from_u64(40 + k as u64);
            let samples: Vec<Vec<f64>> = (0..*m)
                .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let a = SamplingOperator::assemble(set.clone(), &samples).unwrap();
            let g = crate::linalg::gram(a.matrix());
            let mut dev = 0.0f64;
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((g[[i, j]] - target).abs());
                }
            }
            max_dev.push(dev);
        }
        assert!(max_dev[0] > max_dev[1] && max_dev[1] > max_dev[2], "{max_dev:?}");
    }

    #[test]
    fn samples_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        let samples = vec![vec![0.25, -0.5], vec![1.0, 0.0]];
        save_samples_csv(&samples, &path).unwrap();
        let back = load_samples_csv(&path).unwrap();
        assert_eq!(back, samples);
    }
}
