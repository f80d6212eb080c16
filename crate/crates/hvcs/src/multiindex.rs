//! Multi-index sets truncating the orthonormal expansion.
//!
//! An [`IndexSet`] is an ordered collection of distinct multi-indices in
//! `N_0^d`. The order is canonical — ascending total degree, ties broken
//! lexicographically — so the column order of the sampling matrix is
//! reproducible across runs and machines.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A multi-index `(nu_1, ..., nu_d)` of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `sum_i nu_i`.
    pub fn total_degree(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// Canonical comparison: total degree first, then lexicographic.
    fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// How an [`IndexSet`] was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    /// All indices with total degree at most `p`.
    TotalDegree { p: u32 },
    /// An explicitly supplied list.
    ExplicitList,
}

/// A finite, canonically ordered set of distinct multi-indices.
#[derive(Debug, Clone)]
pub struct IndexSet {
    dimension: usize,
    indices: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
    kind: SetKind,
}

impl IndexSet {
    /// Builds a set from explicit indices. The indices are sorted into the
    /// canonical order; duplicates, dimension mismatches, and empty lists
    /// are rejected.
    pub fn from_indices(dimension: usize, mut indices: Vec<MultiIndex>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig(
                "index set dimension must be at least 1".into(),
            ));
        }
        if indices.is_empty() {
            return Err(Error::InvalidConfig("index set must be nonempty".into()));
        }
        for nu in &indices {
            if nu.dim() != dimension {
                return Err(Error::DimensionMismatch(format!(
                    "index {:?} has length {}, expected {}",
                    nu.entries(),
                    nu.dim(),
                    dimension
                )));
            }
        }
        indices.sort_by(|a, b| a.canonical_cmp(b));
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidConfig(format!(
                    "duplicate index {:?}",
                    w[0].entries()
                )));
            }
        }
        let positions = indices
            .iter()
            .enumerate()
            .map(|(i, nu)| (nu.clone(), i))
            .collect();
        Ok(IndexSet {
            dimension,
            indices,
            positions,
            kind: SetKind::ExplicitList,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of indices `N`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // rejected at construction
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn get(&self, position: usize) -> &MultiIndex {
        &self.indices[position]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    /// Canonical position of `nu`, or `None` if `nu` is not a member.
    pub fn rank(&self, nu: &MultiIndex) -> Result<Option<usize>> {
        if nu.dim() != self.dimension {
            return Err(Error::DimensionMismatch(format!(
                "index has length {}, set dimension is {}",
                nu.dim(),
                self.dimension
            )));
        }
        Ok(self.positions.get(nu).copied())
    }

    /// Membership test for the set relation `J ⊂ J'`.
    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.dimension == other.dimension
            && self
                .indices
                .iter()
                .all(|nu| other.positions.contains_key(nu))
    }

    /// Plain-text form: one index per line, entries space-separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for nu in &self.indices {
            let mut first = true;
            for v in nu.entries() {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Parses the plain-text form. The resulting set has kind
    /// `ExplicitList` even if it happens to coincide with a total-degree set.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut indices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let entries: std::result::Result<Vec<u32>, _> =
                line.split_whitespace().map(str::parse).collect();
            let entries = entries.map_err(|e| {
                Error::InvalidConfig(format!("line {}: {e}", lineno + 1))
            })?;
            indices.push(MultiIndex::new(entries));
        }
        let d = indices
            .first()
            .map(MultiIndex::dim)
            .ok_or_else(|| Error::InvalidConfig("index set text is empty".into()))?;
        Self::from_indices(d, indices)
    }

    pub fn load_text(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

/// `C(n, k)` if it fits in `usize`.
fn binomial_checked(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    usize::try_from(acc).ok()
}

/// All multi-indices in `N_0^d` with total degree at most `p`, in canonical
/// order. The cardinality is `C(d + p, p)`; exceeding the platform index
/// range is reported as [`Error::IndexSetCapacity`].
pub fn total_degree_set(d: usize, p: u32) -> Result<IndexSet> {
    if d == 0 {
        return Err(Error::InvalidConfig(
            "parametric dimension must be at least 1".into(),
        ));
    }
    let cardinality = binomial_checked(d + p as usize, p as usize)
        .ok_or(Error::IndexSetCapacity { d, p: p as usize })?;
    let mut indices = Vec::with_capacity(cardinality);
    let mut scratch = vec![0u32; d];
    for degree in 0..=p {
        emit_compositions(&mut scratch, 0, degree, &mut indices);
    }
    debug_assert_eq!(indices.len(), cardinality);
    let positions = indices
        .iter()
        .enumerate()
        .map(|(i, nu): (usize, &MultiIndex)| (nu.clone(), i))
        .collect();
    Ok(IndexSet {
        dimension: d,
        indices,
        positions,
        kind: SetKind::TotalDegree { p },
    })
}

/// Emits all fillings of `scratch[pos..]` summing to `remaining`, in
/// lexicographic order of the full tuple.
fn emit_compositions(scratch: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(MultiIndex::new(scratch.clone()));
        return;
    }
    for v in 0..=remaining {
        scratch[pos] = v;
        emit_compositions(scratch, pos + 1, remaining - v, out);
    }
    scratch[pos] = 0;
}
