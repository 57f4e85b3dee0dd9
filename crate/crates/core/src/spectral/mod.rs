//! Spectral side: eigendecomposition, frequency responses, and the check
//! that spatial propagation matches `U g(Λ) Uᵀ X`.

mod jacobi;
pub mod table;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{max_rel_error, FeatureMatrix};
use crate::filter::{FilterSpec, SolverOptions};
use crate::graph::Graph;
use crate::operator::{normalized_adjacency, laplacian, Scheme, SparseOperator};

pub use jacobi::{jacobi_eigen, OFF_DIAGONAL_TOL};

/// Largest operator the dense oracle will decompose.
pub const DENSE_CAP: usize = 2048;
pub const DEFAULT_GRID_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn num_nodes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(Λ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * u.transpose()
    }

    /// `‖UᵀU − I‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.num_nodes();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n)).amax()
    }

    /// Graph Fourier transform `UᵀX` (N × F).
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.eigenvectors.transpose() * x
    }
}

/// Full decomposition of a symmetric operator.
pub fn eigendecompose(op: &SparseOperator) -> Result<SpectralDecomposition> {
    eigendecompose_capped(op, DENSE_CAP)
}

pub fn eigendecompose_capped(op: &SparseOperator, cap: usize) -> Result<SpectralDecomposition> {
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if op.num_nodes() > cap {
        return Err(Error::TooLarge {
            size: op.num_nodes(),
            cap,
        });
    }
    let (eigenvalues, eigenvectors) = jacobi_eigen(&op.to_dense())?;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Which eigenvalue axis a response curve is sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseAxis {
    /// Normalized Laplacian eigenvalues, `λ ∈ [0, 2]`.
    Laplacian,
    /// Eigenvalues of the raw adjacency matrix; no canonical range.
    RawAdjacency,
    /// Eigenvalues of `D − A`; no canonical range.
    UnnormalizedLaplacian,
}

impl ResponseAxis {
    pub fn of(s: Scheme) -> ResponseAxis {
        match s {
            Scheme::AdjRaw => ResponseAxis::RawAdjacency,
            Scheme::LapUnnorm => ResponseAxis::UnnormalizedLaplacian,
            _ => ResponseAxis::Laplacian,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Preset name, or `"custom"`.
    pub closed_form_id: String,
    pub axis: ResponseAxis,
}

impl ResponseCurve {
    /// Linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return None;
        }
        let k = g.partition_point(|&v| v <= x);
        if k == 0 {
            return Some(self.values[0]);
        }
        if k == g.len() {
            return Some(self.values[g.len() - 1]);
        }
        let (x0, x1) = (g[k - 1], g[k]);
        let w = (x - x0) / (x1 - x0);
        Some(self.values[k - 1] * (1.0 - w) + self.values[k] * w)
    }

    /// Two columns with header `lambda,g`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,g\n");
        for (l, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", crate::io::fmt_f64(*l), crate::io::fmt_f64(*v)));
        }
        out
    }
}

/// `n` uniformly spaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// 256 points on `[0, 2]`.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(0.0, 2.0, DEFAULT_GRID_POINTS)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("grid has non-finite points".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Samples the filter's response on `grid`.
///
/// Normalized bases are reported on the Laplacian axis (`λ = 1 − μ` for
/// adjacency bases). Raw adjacency and `D − A` filters are sampled on their
/// own eigenvalue axis, recorded in [`ResponseCurve::axis`].
pub fn frequency_response(f: &FilterSpec, grid: &[f64]) -> Result<ResponseCurve> {
    check_grid(grid)?;
    let values: Vec<f64> = grid.iter().map(|&l| f.response(l)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::PoleInDomain {
            lo: grid[i],
            hi: grid[i],
        });
    }
    Ok(ResponseCurve {
        grid: grid.to_vec(),
        values,
        closed_form_id: f
            .preset
            .as_ref()
            .map_or_else(|| "custom".to_string(), |p| p.name.clone()),
        axis: ResponseAxis::of(f.scheme),
    })
}

/// `U diag(g(λᵢ)) Uᵀ X`.
pub fn spectral_apply(
    g: impl Fn(f64) -> f64,
    dec: &SpectralDecomposition,
    x: &FeatureMatrix,
) -> Result<FeatureMatrix> {
    if x.rows() != dec.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: dec.num_nodes(),
            found: x.rows(),
        });
    }
    let gains = DVector::from_iterator(dec.num_nodes(), dec.eigenvalues.iter().map(|&l| g(l)));
    if gains.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularDenominator);
    }
    let mut coeffs = dec.transform(x.as_matrix());
    for (i, gain) in gains.iter().enumerate() {
        coeffs.row_mut(i).scale_mut(*gain);
    }
    FeatureMatrix::new(&dec.eigenvectors * coeffs)
}

/// [`spectral_apply`] with a sampled curve, interpolated linearly.
pub fn spectral_apply_curve(
    curve: &ResponseCurve,
    dec: &SpectralDecomposition,
    x: &FeatureMatrix,
) -> Result<FeatureMatrix> {
    if let Some(&l) = dec
        .eigenvalues
        .iter()
        .find(|&&l| curve.interpolate(l).is_none())
    {
        return Err(Error::InvalidGrid(format!("eigenvalue {l} lies outside the curve's grid")));
    }
    spectral_apply(|l| curve.interpolate(l).unwrap(), dec, x)
}

/// Symmetric operator `S` and diagonal `t` with `Op = diag(t) S diag(t)⁻¹`.
///
/// Random-walk schemes are similar to their symmetric counterparts through
/// `D^(1/2)`. Isolated nodes have zero rows and columns in both forms, so a
/// unit scale there keeps the similarity exact.
pub fn symmetric_similar(g: &Graph, scheme: Scheme) -> (SparseOperator, Vec<f64>) {
    let deg = g.degree_vector();
    let scale = |shift: f64| -> Vec<f64> {
        deg.iter()
            .map(|&d| if d + shift > 0.0 { 1.0 / (d + shift).sqrt() } else { 1.0 })
            .collect()
    };
    match scheme {
        Scheme::AdjRw => (normalized_adjacency(g, Scheme::AdjSym).unwrap(), scale(0.0)),
        Scheme::AdjRwSelfLoop => (normalized_adjacency(g, Scheme::AdjRenorm).unwrap(), scale(1.0)),
        Scheme::LapRw => (laplacian(g, Scheme::LapSym).unwrap(), scale(0.0)),
        s => (SparseOperator::build(g, s), vec![1.0; g.num_nodes()]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub max_rel_error: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub spatial: FeatureMatrix,
    pub spectral: FeatureMatrix,
}

/// Computes `f(G)X` by sparse propagation and by `T U g(Λ) Uᵀ T⁻¹ X` on
/// the symmetric form of the basis, and compares them in relative max-norm.
pub fn check_equivalence(f: &FilterSpec, g: &Graph, x: &FeatureMatrix, tol: f64) -> Result<EquivalenceReport> {
    check_equivalence_with(f, g, x, tol, &SolverOptions::default())
}

pub fn check_equivalence_with(
    f: &FilterSpec,
    g: &Graph,
    x: &FeatureMatrix,
    tol: f64,
    opts: &SolverOptions,
) -> Result<EquivalenceReport> {
    if g.num_nodes() > DENSE_CAP {
        return Err(Error::TooLarge {
            size: g.num_nodes(),
            cap: DENSE_CAP,
        });
    }
    let spatial = f.apply(g, x, opts)?;

    let (sym, t) = symmetric_similar(g, f.scheme);
    let dec = eigendecompose(&sym)?;
    let mut scaled = x.as_matrix().clone();
    for (i, ti) in t.iter().enumerate() {
        scaled.row_mut(i).scale_mut(1.0 / ti);
    }
    let filtered = spectral_apply(
        |mu| f.eval_on_operator_axis(mu),
        &dec,
        &FeatureMatrix::new(scaled)?,
    )?;
    let mut spectral = filtered.into_inner();
    for (i, ti) in t.iter().enumerate() {
        spectral.row_mut(i).scale_mut(*ti);
    }
    let spectral = FeatureMatrix::new(spectral)?;

    let err = max_rel_error(spatial.as_matrix(), spectral.as_matrix());
    Ok(EquivalenceReport {
        max_rel_error: err,
        pass: err <= tol,
        tolerance: tol,
        spatial,
        spectral,
    })
}
