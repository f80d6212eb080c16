//! Hilbert-valued vectors and the mixed norms.
//!
//! A [`HilbertVector`] holds `N` coefficients, each a length-`K` coordinate
//! vector in a discretization of a Hilbert space `V`. The `V` geometry is
//! carried by a shared [`InnerProduct`]: either the identity (coordinates in
//! an orthonormal basis of `V`, the joint-sparse matrix setting) or an
//! explicit SPD Gram matrix (e.g. the discrete `H^1_0` energy product of a
//! PDE grid).
//!
//! The mixed norm `||c||_{V,q}` is the `l_q` norm of the vector of row
//! `V`-norms; with the identity Gram it coincides with the matrix norm
//! `||c||_{2,q}` (row-wise Euclidean, then `l_q`).

use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// The inner product of the discretized space `V`.
#[derive(Debug)]
pub struct InnerProduct {
    dim: usize,
    /// `None` means the identity Gram.
    gram: Option<Array2<f64>>,
    /// Lower Cholesky factor of the Gram, available when the SPD check ran.
    chol: Option<Array2<f64>>,
}

/// Largest discretization dimension at which construction verifies positive
/// definiteness by factorization.
pub const SPD_CHECK_LIMIT: usize = 500;

impl InnerProduct {
    /// Euclidean inner product on `R^dim`.
    pub fn identity(dim: usize) -> Arc<Self> {
        assert!(dim >= 1, "inner product dimension must be at least 1");
        Arc::new(InnerProduct {
            dim,
            gram: None,
            chol: None,
        })
    }

    /// Inner product `<v, w> = v^T M w` for an explicit SPD matrix `M`.
    ///
    /// Symmetry is required within `1e-12` relative to the largest entry.
    /// For `dim <= 500` positive definiteness is verified by Cholesky
    /// factorization; larger matrices are accepted on the symmetry check
    /// alone and factorized lazily when a solve needs the factor.
    pub fn explicit_spd(gram: Array2<f64>) -> Result<Arc<Self>> {
        let (n, m) = gram.dim();
        if n != m || n == 0 {
            return Err(Error::NotSpd(format!("matrix is {n} x {m}")));
        }
        let scale = gram.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (gram[[i, j]] - gram[[j, i]]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::NotSpd(format!(
                        "asymmetric at ({i}, {j}): {} vs {}",
                        gram[[i, j]],
                        gram[[j, i]]
                    )));
                }
            }
        }
        let chol = if n <= SPD_CHECK_LIMIT {
            match linalg::cholesky_lower(&gram) {
                Some(l) => Some(l),
                None => {
                    return Err(Error::NotSpd(
                        "Cholesky factorization failed (non-positive pivot)".into(),
                    ))
                }
            }
        } else {
            None
        };
        Ok(Arc::new(InnerProduct {
            dim: n,
            gram: Some(gram),
            chol,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_identity(&self) -> bool {
        self.gram.is_none()
    }

    pub fn gram(&self) -> Option<&Array2<f64>> {
        self.gram.as_ref()
    }

    /// Lower Cholesky factor of the Gram matrix (identity has none).
    pub(crate) fn cholesky_factor(&self) -> Result<Array2<f64>> {
        match (&self.chol, &self.gram) {
            (Some(l), _) => Ok(l.clone()),
            (None, Some(g)) => linalg::cholesky_lower(g).ok_or_else(|| {
                Error::NotSpd("Cholesky factorization failed (non-positive pivot)".into())
            }),
            (None, None) => Err(Error::InvalidConfig(
                "identity inner product has no Cholesky factor".into(),
            )),
        }
    }

    /// `sqrt(v^T M v)`.
    pub fn v_norm(&self, v: &[f64]) -> f64 {
        self.v_norm_sq(v).sqrt()
    }

    /// `v^T M v`, accumulated in index order.
    pub fn v_norm_sq(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim, "vector length vs inner-product dim");
        match &self.gram {
            None => {
                let mut s = 0.0;
                for &x in v {
                    s += x * x;
                }
                s
            }
            Some(m) => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let mut mi = 0.0;
                    for j in 0..self.dim {
                        mi += m[[i, j]] * v[j];
                    }
                    s += v[i] * mi;
                }
                s
            }
        }
    }

    /// Same geometry: identical shared object, or both identity of equal dim.
    pub fn compatible(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other)
            || (self.is_identity() && other.is_identity() && self.dim == other.dim)
    }

    fn kind_name(&self) -> &'static str {
        if self.is_identity() {
            "identity"
        } else {
            "explicit-spd"
        }
    }
}

/// Sidecar descriptor accompanying the CSV serialization.
#[derive(Debug, Serialize, Deserialize)]
struct CsvDescriptor {
    rows: usize,
    cols: usize,
    gram: String,
}

/// An element of `V^N`: `N` rows of `K` coordinates plus the shared inner
/// product.
#[derive(Debug, Clone)]
pub struct HilbertVector {
    data: Array2<f64>,
    ip: Arc<InnerProduct>,
}

impl HilbertVector {
    /// Wraps an `N x K` coordinate matrix. All entries must be finite and
    /// `K` must match the inner product dimension.
    pub fn new(data: Array2<f64>, ip: Arc<InnerProduct>) -> Result<Self> {
        if data.ncols() != ip.dim() {
            return Err(Error::DimensionMismatch(format!(
                "coordinate dimension {} vs inner-product dimension {}",
                data.ncols(),
                ip.dim()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "Hilbert vector entries must be finite".into(),
            ));
        }
        Ok(HilbertVector { data, ip })
    }

    pub fn zeros(rows: usize, ip: Arc<InnerProduct>) -> Self {
        let k = ip.dim();
        HilbertVector {
            data: Array2::zeros((rows, k)),
            ip,
        }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    /// Discretization dimension `K` of each coefficient.
    pub fn coord_dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn inner_product(&self) -> &Arc<InnerProduct> {
        &self.ip
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.data.row(j).to_vec()
    }

    /// `V`-norm of row `j`.
    pub fn row_norm(&self, j: usize) -> f64 {
        let row = self.data.row(j);
        self.ip.v_norm(row.as_slice().expect("contiguous row"))
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.rows()).map(|j| self.row_norm(j)).collect()
    }

    /// Mixed norm `||c||_{V,q}`: the `l_q` norm of the row `V`-norms.
    /// Requires `q >= 1`.
    pub fn mixed_norm(&self, q: f64) -> f64 {
        assert!(q >= 1.0, "mixed norm requires q >= 1, got {q}");
        if q == 1.0 {
            let mut s = 0.0;
            for j in 0..self.rows() {
                s += self.row_norm(j);
            }
            s
        } else if q == 2.0 {
            let mut s = 0.0;
            for j in 0..self.rows() {
                let row = self.data.row(j);
                s += self.ip.v_norm_sq(row.as_slice().expect("contiguous row"));
            }
            s.sqrt()
        } else {
            let mut s = 0.0;
            for j in 0..self.rows() {
                s += self.row_norm(j).powf(q);
            }
            s.powf(1.0 / q)
        }
    }

    /// Positions of rows whose `V`-norm exceeds `tol`.
    pub fn row_support(&self, tol: f64) -> Vec<usize> {
        assert!(tol >= 0.0, "support tolerance must be nonnegative");
        (0..self.rows()).filter(|&j| self.row_norm(j) > tol).collect()
    }

    fn assert_same_space(&self, other: &HilbertVector) {
        assert_eq!(self.data.dim(), other.data.dim(), "shape mismatch");
        assert!(
            self.ip.compatible(&other.ip),
            "inner product mismatch between operands"
        );
    }

    pub fn scale(&self, alpha: f64) -> HilbertVector {
        HilbertVector {
            data: self.data.mapv(|v| alpha * v),
            ip: Arc::clone(&self.ip),
        }
    }

    pub fn add(&self, other: &HilbertVector) -> HilbertVector {
        self.assert_same_space(other);
        HilbertVector {
            data: &self.data + &other.data,
            ip: Arc::clone(&self.ip),
        }
    }

    pub fn sub(&self, other: &HilbertVector) -> HilbertVector {
        self.assert_same_space(other);
        HilbertVector {
            data: &self.data - &other.data,
            ip: Arc::clone(&self.ip),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &HilbertVector) {
        self.assert_same_space(other);
        self.data.zip_mut_with(&other.data, |a, &b| *a += alpha * b);
    }

    /// Writes `row,col,value` CSV plus a `<stem>.meta.json` sidecar holding
    /// the shape and Gram kind.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["row", "col", "value"])
            .map_err(|e| csv_error(path, e))?;
        for ((i, j), v) in self.data.indexed_iter() {
            w.write_record(&[i.to_string(), j.to_string(), format!("{v}")])
                .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let desc = CsvDescriptor {
            rows: self.rows(),
            cols: self.coord_dim(),
            gram: self.ip.kind_name().to_string(),
        };
        let sidecar = sidecar_path(path);
        let text = serde_json::to_string_pretty(&desc)
            .map_err(|e| Error::parse(&sidecar, e.to_string()))?;
        std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
    }

    /// Reads the CSV format written by [`save_csv`](Self::save_csv). The
    /// caller supplies the inner product; shape is validated against the
    /// sidecar when one is present.
    pub fn load_csv(path: &Path, ip: Arc<InnerProduct>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut triples = Vec::new();
        let mut max_row = 0usize;
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            if record.len() != 3 {
                return Err(Error::parse(path, format!("expected 3 fields, got {}", record.len())));
            }
            let i: usize = record[0].parse().map_err(|e| Error::parse(path, format!("row: {e}")))?;
            let j: usize = record[1].parse().map_err(|e| Error::parse(path, format!("col: {e}")))?;
            let v: f64 = record[2].parse().map_err(|e| Error::parse(path, format!("value: {e}")))?;
            max_row = max_row.max(i);
            triples.push((i, j, v));
        }
        let sidecar = sidecar_path(path);
        let rows = if sidecar.exists() {
            let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            let desc: CsvDescriptor = serde_json::from_str(&text)
                .map_err(|e| Error::parse(&sidecar, e.to_string()))?;
            if desc.cols != ip.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "sidecar records K = {}, inner product has dim {}",
                    desc.cols,
                    ip.dim()
                )));
            }
            desc.rows
        } else {
            max_row + 1
        };
        let mut data = Array2::<f64>::zeros((rows, ip.dim()));
        for (i, j, v) in triples {
            if i >= rows || j >= ip.dim() {
                return Err(Error::parse(path, format!("entry ({i}, {j}) out of bounds")));
            }
            data[[i, j]] = v;
        }
        HilbertVector::new(data, ip)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("meta.json")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}
