//! Dirichlet energy and how it evolves under repeated propagation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::filter::{Family, FilterSpec};
use crate::graph::Graph;
use crate::io::fmt_f64;
use crate::operator::{Scheme, SparseOperator};

/// `Σ_{(i,j)∈E} w_ij ‖Zᵢ − Zⱼ‖²`, i.e. `trace(Zᵀ (D − A) Z)`.
pub fn dirichlet_energy(g: &Graph, z: &FeatureMatrix) -> Result<f64> {
    if z.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.num_nodes(),
            found: z.rows(),
        });
    }
    Ok(energy(g, z.as_matrix()))
}

fn energy(g: &Graph, z: &DMatrix<f64>) -> f64 {
    g.edges()
        .map(|(u, v, w)| w * (z.row(u) - z.row(v)).norm_squared())
        .sum()
}

/// Row scaling `sᵢ` such that the propagation operator's invariant
/// direction is `1/sᵢ`: `1/√d̂ᵢ` for the symmetric schemes, 1 otherwise.
fn stationary_scaling(g: &Graph, scheme: Scheme) -> Vec<f64> {
    let shift = match scheme {
        Scheme::AdjRenorm => 1.0,
        Scheme::AdjSym => 0.0,
        _ => return vec![1.0; g.num_nodes()],
    };
    g.degree_vector()
        .iter()
        .map(|&d| if d + shift > 0.0 { 1.0 / (d + shift).sqrt() } else { 1.0 })
        .collect()
}

/// Dirichlet energy of `diag(s) Z`.
fn scaled_energy(g: &Graph, z: &DMatrix<f64>, s: &[f64]) -> f64 {
    g.edges()
        .map(|(u, v, w)| w * (z.row(u) * s[u] - z.row(v) * s[v]).norm_squared())
        .sum()
}

/// Mean Euclidean distance over all unordered pairs of rows.
pub fn pairwise_spread(z: &DMatrix<f64>) -> f64 {
    let n = z.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += (z.row(i) - z.row(j)).norm();
        }
    }
    total / (n * (n - 1) / 2) as f64
}

/// How depth is realized for a profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Propagation {
    /// `Z_K = M^K X`.
    Stack(Scheme),
    /// `Z_{K+1} = c X + d M Z_K`, starting from `Z_0 = X`.
    FixedPoint { scheme: Scheme, c: f64, d: f64 },
}

impl Propagation {
    /// GCN/SGC and other pure-power filters stack their basis operator;
    /// first-order rational filters iterate their fixed-point map.
    pub fn from_filter(f: &FilterSpec) -> Result<Propagation> {
        match &f.family {
            Family::Linear { phi, psi } if *phi == 0.0 && *psi != 0.0 => Ok(Propagation::Stack(f.scheme)),
            Family::Polynomial { coeffs } if coeffs.iter().filter(|c| **c != 0.0).count() == 1 => {
                Ok(Propagation::Stack(f.scheme))
            }
            Family::Rational {
                num_coeffs,
                den_coeffs,
            } if num_coeffs.len() == 1 && den_coeffs.len() == 1 => Ok(Propagation::FixedPoint {
                scheme: f.scheme,
                c: num_coeffs[0],
                d: -den_coeffs[0],
            }),
            other => Err(Error::UnsupportedFamily(format!(
                "no layer-wise propagation for {} filter",
                other.name()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingProfile {
    pub depths: Vec<usize>,
    /// Dirichlet energy of the degree-normalized features `D̂^(−1/2) Z` for
    /// symmetric bases (plain energy otherwise). It vanishes exactly on the
    /// operator's invariant direction, which is not constant on irregular
    /// graphs.
    pub energy: Vec<f64>,
    /// Plain [`dirichlet_energy`] of `Z`.
    pub raw_energy: Vec<f64>,
    pub pairwise_spread: Vec<f64>,
    /// False when the graph is disconnected, in which case the energy only
    /// decays to the per-component constant.
    pub connected: bool,
}

impl SmoothingProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,energy,raw_energy,pairwise_spread\n");
        for (i, d) in self.depths.iter().enumerate() {
            out.push_str(&format!(
                "{d},{},{},{}\n",
                fmt_f64(self.energy[i]),
                fmt_f64(self.raw_energy[i]),
                fmt_f64(self.pairwise_spread[i])
            ));
        }
        out
    }
}

/// Energy and row spread of the propagated features at each depth.
pub fn oversmoothing_profile(
    g: &Graph,
    x: &FeatureMatrix,
    f: &FilterSpec,
    depths: &[usize],
) -> Result<SmoothingProfile> {
    if x.rows() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.num_nodes(),
            found: x.rows(),
        });
    }
    if depths.is_empty() || depths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("depths must be nonempty and strictly ascending".into()));
    }
    let prop = Propagation::from_filter(f)?;
    let scheme = match prop {
        Propagation::Stack(s) | Propagation::FixedPoint { scheme: s, .. } => s,
    };
    let op = SparseOperator::build(g, scheme);
    let scale = stationary_scaling(g, scheme);
    let x0 = x.as_matrix();
    let mut z = x0.clone();
    let mut buf = DMatrix::zeros(z.nrows(), z.ncols());
    let mut depth = 0;
    let mut profile = SmoothingProfile {
        depths: depths.to_vec(),
        energy: Vec::with_capacity(depths.len()),
        raw_energy: Vec::with_capacity(depths.len()),
        pairwise_spread: Vec::with_capacity(depths.len()),
        connected: g.is_connected(),
    };
    for &target in depths {
        while depth < target {
            op.mul_dense_into(&z, &mut buf);
            match prop {
                Propagation::Stack(_) => std::mem::swap(&mut z, &mut buf),
                Propagation::FixedPoint { c, d, .. } => {
                    z.copy_from(x0);
                    z *= c;
                    crate::filter::axpy(&mut z, d, &buf);
                }
            }
            depth += 1;
        }
        profile.energy.push(scaled_energy(g, &z, &scale));
        profile.raw_energy.push(energy(g, &z));
        profile.pairwise_spread.push(pairwise_spread(&z));
    }
    Ok(profile)
}
