//! Normalized adjacency and Laplacian operators in compressed sparse row form.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::Graph;

/// Which matrix a [`SparseOperator`] holds. `D̂ = D + I` below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `A`, no normalization.
    AdjRaw,
    /// `D⁻¹A`.
    AdjRw,
    /// `D^(-1/2) A D^(-1/2)`.
    AdjSym,
    /// `D̂^(-1/2) (A+I) D̂^(-1/2)`.
    AdjRenorm,
    /// `D̂⁻¹ (A+I)`.
    AdjRwSelfLoop,
    /// `D − A`.
    LapUnnorm,
    /// `I − D^(-1/2) A D^(-1/2)`.
    LapSym,
    /// `I − D⁻¹A`.
    LapRw,
    Identity,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::AdjRaw,
        Scheme::AdjRw,
        Scheme::AdjSym,
        Scheme::AdjRenorm,
        Scheme::AdjRwSelfLoop,
        Scheme::LapUnnorm,
        Scheme::LapSym,
        Scheme::LapRw,
        Scheme::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::AdjRaw => "adj_raw",
            Scheme::AdjRw => "adj_rw",
            Scheme::AdjSym => "adj_sym",
            Scheme::AdjRenorm => "adj_renorm",
            Scheme::AdjRwSelfLoop => "adj_rw_self_loop",
            Scheme::LapUnnorm => "lap_unnorm",
            Scheme::LapSym => "lap_sym",
            Scheme::LapRw => "lap_rw",
            Scheme::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::UnsupportedScheme(s.to_string()))
    }

    pub fn is_laplacian(self) -> bool {
        matches!(self, Scheme::LapUnnorm | Scheme::LapSym | Scheme::LapRw)
    }

    pub fn is_adjacency(self) -> bool {
        matches!(
            self,
            Scheme::AdjRaw | Scheme::AdjRw | Scheme::AdjSym | Scheme::AdjRenorm | Scheme::AdjRwSelfLoop
        )
    }

    /// Normalized adjacency schemes, whose eigenvalues `μ` lie in `[-1, 1]`
    /// and map to the Laplacian axis by `λ = 1 − μ`.
    pub fn is_normalized_adjacency(self) -> bool {
        matches!(
            self,
            Scheme::AdjRw | Scheme::AdjSym | Scheme::AdjRenorm | Scheme::AdjRwSelfLoop
        )
    }

    pub fn is_symmetric(self) -> bool {
        !matches!(self, Scheme::AdjRw | Scheme::AdjRwSelfLoop | Scheme::LapRw)
    }

    /// Upper bound on the spectral radius that holds for every graph, when
    /// one exists independent of the weights.
    pub fn spectral_radius_bound(self) -> Option<f64> {
        match self {
            Scheme::AdjRw | Scheme::AdjSym | Scheme::AdjRenorm | Scheme::AdjRwSelfLoop => Some(1.0),
            Scheme::LapSym | Scheme::LapRw => Some(2.0),
            Scheme::Identity => Some(1.0),
            Scheme::AdjRaw | Scheme::LapUnnorm => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Square sparse matrix tagged with the scheme that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    scheme: Scheme,
    symmetric: bool,
}

fn inv_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        0.0
    }
}

fn inv_sqrt_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x.sqrt()
    } else {
        0.0
    }
}

impl SparseOperator {
    /// Builds the operator for any scheme.
    pub fn build(g: &Graph, scheme: Scheme) -> SparseOperator {
        match scheme {
            Scheme::Identity => Self::identity(g.num_nodes()),
            Scheme::AdjRaw => Self::adjacency(g),
            s if s.is_laplacian() => laplacian(g, s).expect("laplacian scheme"),
            s => normalized_adjacency(g, s).expect("adjacency scheme"),
        }
    }

    pub fn identity(n: usize) -> SparseOperator {
        SparseOperator {
            num_nodes: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
            scheme: Scheme::Identity,
            symmetric: true,
        }
    }

    /// The raw weighted adjacency matrix `A`.
    pub fn adjacency(g: &Graph) -> SparseOperator {
        let n = g.num_nodes();
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        for i in 0..n {
            row_offsets.push(g.row_range(i).end);
        }
        SparseOperator {
            num_nodes: n,
            row_offsets,
            col_indices: g.raw_neighbors().to_vec(),
            values: g.raw_weights().to_vec(),
            scheme: Scheme::AdjRaw,
            symmetric: true,
        }
    }

    /// Rescales adjacency entries; `self_loop` gives the diagonal entry for
    /// row `i` when the scheme adds `I`.
    fn scaled_adjacency(
        g: &Graph,
        scheme: Scheme,
        entry: impl Fn(usize, usize, f64) -> f64,
        self_loop: Option<&dyn Fn(usize) -> f64>,
    ) -> SparseOperator {
        let n = g.num_nodes();
        let extra = if self_loop.is_some() { n } else { 0 };
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(g.raw_neighbors().len() + extra);
        let mut values = Vec::with_capacity(g.raw_neighbors().len() + extra);
        row_offsets.push(0);
        for i in 0..n {
            let mut diag_done = self_loop.is_none();
            for (j, w) in g.neighbors(i) {
                if !diag_done && j > i {
                    col_indices.push(i);
                    values.push(self_loop.unwrap()(i));
                    diag_done = true;
                }
                col_indices.push(j);
                values.push(entry(i, j, w));
            }
            if !diag_done {
                col_indices.push(i);
                values.push(self_loop.unwrap()(i));
            }
            row_offsets.push(col_indices.len());
        }
        SparseOperator {
            num_nodes: n,
            row_offsets,
            col_indices,
            values,
            scheme,
            symmetric: scheme.is_symmetric(),
        }
    }

    /// `I − self`, computed entrywise so that `LapSym = I − AdjSym` holds
    /// with identical arithmetic.
    fn identity_minus(&self, scheme: Scheme) -> SparseOperator {
        let n = self.num_nodes;
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(self.values.len() + n);
        let mut values = Vec::with_capacity(self.values.len() + n);
        row_offsets.push(0);
        for i in 0..n {
            let mut diag_done = false;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                if !diag_done && j > i {
                    col_indices.push(i);
                    values.push(1.0);
                    diag_done = true;
                }
                if j == i {
                    col_indices.push(i);
                    values.push(1.0 - self.values[k]);
                    diag_done = true;
                } else {
                    col_indices.push(j);
                    values.push(0.0 - self.values[k]);
                }
            }
            if !diag_done {
                col_indices.push(i);
                values.push(1.0);
            }
            row_offsets.push(col_indices.len());
        }
        SparseOperator {
            num_nodes: n,
            row_offsets,
            col_indices,
            values,
            scheme,
            symmetric: scheme.is_symmetric(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Nonzeros of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// Largest absolute row sum (induced ∞-norm).
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.num_nodes)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Spectral radius bound: the scheme's universal bound when one exists,
    /// otherwise the Gershgorin row-sum bound.
    pub fn spectral_radius_bound(&self) -> f64 {
        self.scheme
            .spectral_radius_bound()
            .unwrap_or_else(|| self.max_abs_row_sum())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.num_nodes, self.num_nodes);
        for i in 0..self.num_nodes {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Sparse-times-dense product `self · X`.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.rows() != self.num_nodes {
            return Err(Error::DimensionMismatch {
                expected: self.num_nodes,
                found: x.rows(),
            });
        }
        Ok(FeatureMatrix::from_matrix(self.mul_dense(x.as_matrix())))
    }

    /// Unchecked product used on internal iterates. Columns are processed
    /// independently with a fixed summation order.
    pub(crate) fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.num_nodes, x.ncols());
        self.mul_dense_into(x, &mut out);
        out
    }

    pub(crate) fn mul_dense_into(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        debug_assert_eq!(x.nrows(), self.num_nodes);
        let n = self.num_nodes;
        for (xc, oc) in x
            .as_slice()
            .chunks_exact(n.max(1))
            .zip(out.as_mut_slice().chunks_exact_mut(n.max(1)))
        {
            for i in 0..n {
                let mut acc = 0.0;
                for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                    acc += self.values[k] * xc[self.col_indices[k]];
                }
                oc[i] = acc;
            }
        }
    }
}

/// `AdjRw`, `AdjSym`, `AdjRenorm` or `AdjRwSelfLoop`. Isolated nodes get
/// zero rows (and columns for the symmetric form).
pub fn normalized_adjacency(g: &Graph, scheme: Scheme) -> Result<SparseOperator> {
    let deg = g.degree_vector();
    let op = match scheme {
        Scheme::AdjRw => {
            let inv: Vec<f64> = deg.iter().map(|&d| inv_or_zero(d)).collect();
            SparseOperator::scaled_adjacency(g, scheme, |i, _, w| w * inv[i], None)
        }
        Scheme::AdjSym => {
            let s: Vec<f64> = deg.iter().map(|&d| inv_sqrt_or_zero(d)).collect();
            SparseOperator::scaled_adjacency(g, scheme, |i, j, w| s[i] * w * s[j], None)
        }
        Scheme::AdjRenorm => {
            let s: Vec<f64> = deg.iter().map(|&d| inv_sqrt_or_zero(d + 1.0)).collect();
            let diag = |i: usize| s[i] * s[i];
            SparseOperator::scaled_adjacency(g, scheme, |i, j, w| s[i] * w * s[j], Some(&diag))
        }
        Scheme::AdjRwSelfLoop => {
            let inv: Vec<f64> = deg.iter().map(|&d| inv_or_zero(d + 1.0)).collect();
            let diag = |i: usize| inv[i];
            SparseOperator::scaled_adjacency(g, scheme, |i, _, w| w * inv[i], Some(&diag))
        }
        other => return Err(Error::UnsupportedScheme(other.name().into())),
    };
    Ok(op)
}

/// `LapUnnorm = D − A`, `LapSym = I − AdjSym`, `LapRw = I − AdjRw`.
pub fn laplacian(g: &Graph, scheme: Scheme) -> Result<SparseOperator> {
    match scheme {
        Scheme::LapUnnorm => {
            let deg = g.degree_vector();
            let neg = SparseOperator::scaled_adjacency(g, scheme, |_, _, w| -w, Some(&|i| deg[i]));
            Ok(neg)
        }
        Scheme::LapSym => Ok(normalized_adjacency(g, Scheme::AdjSym)?.identity_minus(scheme)),
        Scheme::LapRw => Ok(normalized_adjacency(g, Scheme::AdjRw)?.identity_minus(scheme)),
        other => Err(Error::UnsupportedScheme(other.name().into())),
    }
}

/// Free-function form of [`SparseOperator::apply`].
pub fn apply(op: &SparseOperator, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    op.apply(x)
}
