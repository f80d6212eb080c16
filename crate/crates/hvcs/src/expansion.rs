//! Recovered orthonormal expansions `u_J(y) = sum_{nu in J} c_nu Psi_nu(y)`.
//!
//! Couples an index set with a Hilbert-valued coefficient matrix and
//! provides the quantities experiments read off: point evaluation, the mean
//! and standard-deviation fields implied by orthonormality (the zero index
//! carries the expectation; the remaining rows sum squarewise to the
//! variance), the algebraic truncation tail, and an empirical `L^2` error
//! against sampled references.

use ndarray::Array1;

use crate::basis;
use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::multiindex::{IndexSet, MultiIndex};

#[derive(Debug, Clone)]
pub struct ExpansionModel {
    set: IndexSet,
    coefficients: HilbertVector,
}

impl ExpansionModel {
    pub fn new(set: IndexSet, coefficients: HilbertVector) -> Result<Self> {
        if set.len() != coefficients.rows() {
            return Err(Error::DimensionMismatch(format!(
                "index set has {} entries, coefficients have {} rows",
                set.len(),
                coefficients.rows()
            )));
        }
        Ok(ExpansionModel { set, coefficients })
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    pub fn coefficients(&self) -> &HilbertVector {
        &self.coefficients
    }

    /// Evaluates the expansion at a point `y` of the unit cube, returning
    /// the length-`K` field `sum_nu Psi_nu(y) c_nu`.
    pub fn evaluate(&self, y: &[f64]) -> Array1<f64> {
        let k = self.coefficients.coord_dim();
        let mut out = Array1::<f64>::zeros(k);
        for (j, nu) in self.set.iter().enumerate() {
            let w = basis::eval_tensor(nu, y);
            if w == 0.0 {
                continue;
            }
            for r in 0..k {
                out[r] += w * self.coefficients.data()[[j, r]];
            }
        }
        out
    }

    fn zero_rank(&self) -> Option<usize> {
        let zero = MultiIndex::new(vec![0; self.set.dimension()]);
        self.set.rank(&zero).expect("dimension matches")
    }

    /// Expectation field: the coefficient of the zero index (all basis
    /// functions with `nu != 0` integrate to zero against the sampling
    /// measure). Zero when the set omits the constant index.
    pub fn mean_field(&self) -> Array1<f64> {
        let k = self.coefficients.coord_dim();
        match self.zero_rank() {
            Some(j) => Array1::from_iter((0..k).map(|r| self.coefficients.data()[[j, r]])),
            None => Array1::zeros(k),
        }
    }

    /// Pointwise standard deviation field
    /// `sqrt(sum_{nu != 0} c_nu(r)^2)` per coordinate `r`.
    pub fn std_field(&self) -> Array1<f64> {
        let k = self.coefficients.coord_dim();
        let zero = self.zero_rank();
        let mut var = Array1::<f64>::zeros(k);
        for j in 0..self.coefficients.rows() {
            if Some(j) == zero {
                continue;
            }
            for r in 0..k {
                let v = self.coefficients.data()[[j, r]];
                var[r] += v * v;
            }
        }
        var.mapv_into(f64::sqrt)
    }

    /// Positions of the `s` rows with the largest `V`-norms (ties keep the
    /// lower position), sorted ascending.
    pub fn top_rows(&self, s: usize) -> Vec<usize> {
        let norms = self.coefficients.row_norms();
        let mut order: Vec<usize> = (0..norms.len()).collect();
        order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));
        let mut top: Vec<usize> = order.into_iter().take(s).collect();
        top.sort_unstable();
        top
    }

    /// A copy with every row outside `keep` zeroed.
    pub fn restrict_to_rows(&self, keep: &[usize]) -> ExpansionModel {
        let mut coeffs = self.coefficients.clone();
        for j in 0..coeffs.rows() {
            if !keep.contains(&j) {
                for r in 0..coeffs.coord_dim() {
                    coeffs.data_mut()[[j, r]] = 0.0;
                }
            }
        }
        ExpansionModel {
            set: self.set.clone(),
            coefficients: coeffs,
        }
    }

    /// A copy keeping only the `s` largest rows by `V`-norm.
    pub fn restrict_to_top_rows(&self, s: usize) -> ExpansionModel {
        self.restrict_to_rows(&self.top_rows(s))
    }

    /// `L^2` truncation tail of dropping every row outside `keep`:
    /// `sqrt(sum_{j not in keep} ||c_j||_V^2)`. By orthonormality this is
    /// exactly the `L^2(U; V)` distance between the expansion and its
    /// restriction.
    pub fn truncation_error(&self, keep: &[usize]) -> f64 {
        let mut tail = 0.0;
        for j in 0..self.coefficients.rows() {
            if !keep.contains(&j) {
                let n = self.coefficients.row_norm(j);
                tail += n * n;
            }
        }
        tail.sqrt()
    }

    /// Empirical `L^2(U; V)` error against sampled fields:
    /// `sqrt(mean_i ||u_J(y_i) - u_i||_V^2)`.
    pub fn empirical_l2_error(&self, points: &[Vec<f64>], fields: &[Array1<f64>]) -> f64 {
        assert_eq!(points.len(), fields.len(), "points and fields must pair up");
        assert!(!points.is_empty(), "at least one evaluation point required");
        let ip = self.coefficients.inner_product();
        let mut acc = 0.0;
        for (y, field) in points.iter().zip(fields) {
            let predicted = self.evaluate(y);
            let diff: Vec<f64> = predicted
                .iter()
                .zip(field.iter())
                .map(|(a, b)| a - b)
                .collect();
            acc += ip.v_norm_sq(&diff);
        }
        (acc / points.len() as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::InnerProduct;
    use crate::multiindex::total_degree_set;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn small_model() -> ExpansionModel {
        // TD(2,1): indices (0,0), (0,1), (1,0)
        let set = total_degree_set(2, 1).unwrap();
        let ip = InnerProduct::identity(2);
        let mut data = Array2::<f64>::zeros((3, 2));
        data[[0, 0]] = 1.0;
        data[[0, 1]] = -2.0;
        data[[1, 0]] = 0.5;
        data[[2, 1]] = 0.25;
        let coeffs = HilbertVector::new(data, ip).unwrap();
        ExpansionModel::new(set, coeffs).unwrap()
    }

    #[test]
    fn evaluate_matches_direct_sum() {
        let model = small_model();
        let y = [0.3, -0.6];
        let got = model.evaluate(&y);
        let s3 = 3.0f64.sqrt();
        // Psi_(0,0) = 1, Psi_(0,1) = sqrt(3) y_2, Psi_(1,0) = sqrt(3) y_1
        let expect0 = 1.0 + 0.5 * s3 * y[1];
        let expect1 = -2.0 + 0.25 * s3 * y[0];
        assert!((got[0] - expect0).abs() < 1e-14);
        assert!((got[1] - expect1).abs() < 1e-14);
    }

    #[test]
    fn mean_and_std_fields_follow_orthonormality() {
        let model = small_model();
        let mean = model.mean_field();
        assert_eq!(mean[0], 1.0);
        assert_eq!(mean[1], -2.0);
        let std = model.std_field();
        assert!((std[0] - 0.5).abs() < 1e-15);
        assert!((std[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn std_field_matches_monte_carlo_variance() {
        let model = small_model();
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let n = 200_000;
        let mut mean = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for _ in 0..n {
            let y = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let v = model.evaluate(&y);
            for r in 0..2 {
                mean[r] += v[r];
                sq[r] += v[r] * v[r];
            }
        }
        let std = model.std_field();
        for r in 0..2 {
            let m = mean[r] / n as f64;
            let var = sq[r] / n as f64 - m * m;
            assert!(
                (var.sqrt() - std[r]).abs() < 0.01,
                "coordinate {r}: {} vs {}",
                var.sqrt(),
                std[r]
            );
        }
    }

    #[test]
    fn truncation_error_is_the_dropped_tail() {
        let model = small_model();
        // dropping rows 1 and 2 leaves tail sqrt(0.5^2 + 0.25^2)
        let tail = model.truncation_error(&[0]);
        assert!((tail - (0.25f64 + 0.0625).sqrt()).abs() < 1e-15);
        // keeping everything leaves nothing
        assert_eq!(model.truncation_error(&[0, 1, 2]), 0.0);
    }

    #[test]
    fn top_row_restriction_keeps_largest_norms() {
        let model = small_model();
        // row norms: sqrt(5), 0.5, 0.25
        assert_eq!(model.top_rows(2), vec![0, 1]);
        let restricted = model.restrict_to_top_rows(1);
        assert_eq!(restricted.coefficients().row_support(0.0), vec![0]);
        // restriction error shrinks as more rows are kept
        let mut prev = f64::INFINITY;
        for s in 1..=3 {
            let tail = model.truncation_error(&model.top_rows(s));
            assert!(tail <= prev);
            prev = tail;
        }
    }

    #[test]
    fn empirical_error_vanishes_on_own_samples() {
        let model = small_model();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let points: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let fields: Vec<Array1<f64>> = points.iter().map(|y| model.evaluate(y)).collect();
        assert!(model.empirical_l2_error(&points, &fields) < 1e-14);

        // and grows when the fields are perturbed
        let shifted: Vec<Array1<f64>> = fields.iter().map(|f| f + 1.0).collect();
        let err = model.empirical_l2_error(&points, &shifted);
        assert!((err - 2.0f64.sqrt()).abs() < 1e-12); // sqrt(1^2 + 1^2)
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let set = total_degree_set(2, 1).unwrap();
        let ip = InnerProduct::identity(2);
        let coeffs = HilbertVector::zeros(5, ip);
        assert!(ExpansionModel::new(set, coeffs).is_err());
    }
}
