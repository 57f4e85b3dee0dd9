//! Linear, polynomial and rational propagation filters.
//!
//! Every filter is a scalar function `h` of one basis operator `Ã`:
//!
//! ```text
//! Linear      Z = (φI + ψÃ) X
//! Polynomial  Z = Σⱼ ψⱼ Ãʲ X
//! Rational    Z = P(Ã) Q(Ã)⁻¹ X,   Q(x) = 1 + Σₘ φₘ xᵐ
//! ```
//!
//! Polynomials are always evaluated by repeated sparse products on the
//! features, never by forming powers of `Ã`.

mod presets;
mod solver;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::Graph;
use crate::operator::{Scheme, SparseOperator};

pub use presets::{make_preset, make_preset_from, PRESET_NAMES};
pub use solver::{solve_rational, RationalSolve, SolverMethod, SolverOptions};

/// Default cap on polynomial degree.
pub const DEFAULT_MAX_ORDER: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Linear {
        phi: f64,
        psi: f64,
    },
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// Denominator coefficients start at the first power; the constant
    /// term of `Q` is fixed at 1.
    Rational {
        num_coeffs: Vec<f64>,
        den_coeffs: Vec<f64>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Linear { .. } => "linear",
            Family::Polynomial { .. } => "polynomial",
            Family::Rational { .. } => "rational",
        }
    }
}

/// Named model a spec was built from, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// A filter family with its coefficients and the operator it acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct FilterSpec {
    pub family: Family,
    pub scheme: Scheme,
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BasisKind {
    Adjacency,
    Laplacian,
    Identity,
}

impl BasisKind {
    fn of(s: Scheme) -> BasisKind {
        if s.is_adjacency() {
            BasisKind::Adjacency
        } else if s.is_laplacian() {
            BasisKind::Laplacian
        } else {
            BasisKind::Identity
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    #[serde(flatten)]
    family: Family,
    basis: BasisKind,
    scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<Preset>,
}

impl TryFrom<SpecRepr> for FilterSpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<FilterSpec> {
        if BasisKind::of(r.scheme) != r.basis {
            return Err(Error::InvalidParam(format!(
                "scheme {} does not belong to basis {:?}",
                r.scheme, r.basis
            )));
        }
        let spec = FilterSpec {
            family: r.family,
            scheme: r.scheme,
            preset: r.preset,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<FilterSpec> for SpecRepr {
    fn from(f: FilterSpec) -> SpecRepr {
        SpecRepr {
            basis: BasisKind::of(f.scheme),
            family: f.family,
            scheme: f.scheme,
            preset: f.preset,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl FilterSpec {
    pub fn linear(phi: f64, psi: f64, scheme: Scheme) -> FilterSpec {
        FilterSpec {
            family: Family::Linear { phi, psi },
            scheme,
            preset: None,
        }
    }

    pub fn polynomial(coeffs: Vec<f64>, scheme: Scheme) -> Result<FilterSpec> {
        let f = FilterSpec {
            family: Family::Polynomial { coeffs },
            scheme,
            preset: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn rational(num_coeffs: Vec<f64>, den_coeffs: Vec<f64>, scheme: Scheme) -> Result<FilterSpec> {
        let f = FilterSpec {
            family: Family::Rational {
                num_coeffs,
                den_coeffs,
            },
            scheme,
            preset: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_preset(mut self, name: &str, params: BTreeMap<String, f64>) -> FilterSpec {
        self.preset = Some(Preset {
            name: name.to_string(),
            params,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = |c: &[f64]| c.iter().all(|x| x.is_finite());
        match &self.family {
            Family::Linear { phi, psi } => {
                if !phi.is_finite() || !psi.is_finite() {
                    return Err(Error::InvalidParam("linear weights must be finite".into()));
                }
            }
            Family::Polynomial { coeffs } => {
                if coeffs.is_empty() || !all_finite(coeffs) {
                    return Err(Error::InvalidParam(
                        "polynomial coefficients must be nonempty and finite".into(),
                    ));
                }
            }
            Family::Rational {
                num_coeffs,
                den_coeffs,
            } => {
                if num_coeffs.is_empty() || !all_finite(num_coeffs) || !all_finite(den_coeffs) {
                    return Err(Error::InvalidParam(
                        "rational numerator must be nonempty and all coefficients finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Monomial coefficients of the numerator (of the whole filter for the
    /// linear and polynomial families).
    pub fn numerator(&self) -> Vec<f64> {
        match &self.family {
            Family::Linear { phi, psi } => vec![*phi, *psi],
            Family::Polynomial { coeffs } => coeffs.clone(),
            Family::Rational { num_coeffs, .. } => num_coeffs.clone(),
        }
    }

    /// Full denominator `[1, φ₁, …, φₙ]`; `[1]` for non-rational filters.
    pub fn denominator(&self) -> Vec<f64> {
        match &self.family {
            Family::Rational { den_coeffs, .. } => {
                std::iter::once(1.0).chain(den_coeffs.iter().copied()).collect()
            }
            _ => vec![1.0],
        }
    }

    /// Highest power of the basis operator applied to the features.
    pub fn order(&self) -> usize {
        (self.numerator().len() - 1).max(self.denominator().len() - 1)
    }

    /// Scalar response `h(μ)` at an eigenvalue `μ` of the basis operator.
    pub fn eval_on_operator_axis(&self, mu: f64) -> f64 {
        horner(&self.numerator(), mu) / horner(&self.denominator(), mu)
    }

    /// Frequency response on the Laplacian-eigenvalue axis. Normalized
    /// adjacency bases use `μ = 1 − λ`; Laplacian bases use `λ` itself; raw
    /// adjacency filters are evaluated on the raw eigenvalue axis.
    pub fn response(&self, lambda: f64) -> f64 {
        let mu = if self.scheme.is_normalized_adjacency() {
            1.0 - lambda
        } else if self.scheme == Scheme::Identity {
            1.0
        } else {
            lambda
        };
        self.eval_on_operator_axis(mu)
    }

    pub fn operator(&self, g: &Graph) -> SparseOperator {
        SparseOperator::build(g, self.scheme)
    }

    /// Applies the filter on a prebuilt basis operator.
    pub fn apply_with_operator(
        &self,
        op: &SparseOperator,
        x: &FeatureMatrix,
        opts: &SolverOptions,
    ) -> Result<FeatureMatrix> {
        if op.scheme() != self.scheme {
            return Err(Error::BasisMismatch(
                op.scheme().name().into(),
                self.scheme.name().into(),
            ));
        }
        check_rows(op, x)?;
        match &self.family {
            Family::Linear { phi, psi } => {
                Ok(FeatureMatrix::from_matrix(poly_apply(op, &[*phi, *psi], x.as_matrix())))
            }
            Family::Polynomial { coeffs } => {
                check_order(coeffs.len() - 1, opts.max_order)?;
                Ok(FeatureMatrix::from_matrix(poly_apply(op, coeffs, x.as_matrix())))
            }
            Family::Rational {
                num_coeffs,
                den_coeffs,
            } => Ok(solve_rational(op, num_coeffs, den_coeffs, x, opts)?.z),
        }
    }

    /// Builds the basis operator for `g` and applies the filter.
    pub fn apply(&self, g: &Graph, x: &FeatureMatrix, opts: &SolverOptions) -> Result<FeatureMatrix> {
        self.apply_with_operator(&self.operator(g), x, opts)
    }

    /// The filter as an explicit dense `N × N` matrix.
    pub fn dense_operator(&self, g: &Graph) -> Result<DMatrix<f64>> {
        let m = self.operator(g).to_dense();
        let n = m.nrows();
        let dense_poly = |c: &[f64]| {
            let mut acc = DMatrix::<f64>::zeros(n, n);
            for &cj in c.iter().rev() {
                acc = &acc * &m;
                for i in 0..n {
                    acc[(i, i)] += cj;
                }
            }
            acc
        };
        let p = dense_poly(&self.numerator());
        match &self.family {
            Family::Rational { .. } => {
                let q = dense_poly(&self.denominator());
                q.lu().solve(&p).ok_or(Error::SingularDenominator)
            }
            _ => Ok(p),
        }
    }
}

fn check_rows(op: &SparseOperator, x: &FeatureMatrix) -> Result<()> {
    if op.num_nodes() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: op.num_nodes(),
            found: x.rows(),
        });
    }
    Ok(())
}

fn check_order(order: usize, max: usize) -> Result<()> {
    if order > max {
        return Err(Error::OrderTooLarge { order, max });
    }
    Ok(())
}

/// `z += c · y`, elementwise.
pub(crate) fn axpy(z: &mut DMatrix<f64>, c: f64, y: &DMatrix<f64>) {
    for (a, b) in z.as_mut_slice().iter_mut().zip(y.as_slice()) {
        *a += c * b;
    }
}

/// `Σⱼ cⱼ Ãʲ X` with `Yⱼ = Ã Yⱼ₋₁`. Zero coefficients are skipped so that
/// e.g. `[0, 0, 1]` reproduces two successive `Ã` products bit for bit.
pub(crate) fn poly_apply(op: &SparseOperator, coeffs: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(x.nrows(), x.ncols());
    if coeffs[0] != 0.0 {
        axpy(&mut z, coeffs[0], x);
    }
    if coeffs.len() == 1 {
        return z;
    }
    let mut y = x.clone();
    let mut next = DMatrix::zeros(x.nrows(), x.ncols());
    for &c in &coeffs[1..] {
        op.mul_dense_into(&y, &mut next);
        std::mem::swap(&mut y, &mut next);
        if c != 0.0 {
            axpy(&mut z, c, &y);
        }
    }
    z
}

fn expect_family(f: &FilterSpec, want: &str) -> Result<()> {
    if f.family.name() != want {
        return Err(Error::UnsupportedFamily(format!(
            "expected a {want} filter, got {}",
            f.family.name()
        )));
    }
    Ok(())
}

/// `Z = φX + ψ·ÃX`.
pub fn apply_linear(f: &FilterSpec, g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    expect_family(f, "linear")?;
    f.apply(g, x, &SolverOptions::default())
}

/// `Z = Σⱼ ψⱼ ÃʲX` with the default order cap.
pub fn apply_polynomial(f: &FilterSpec, g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    apply_polynomial_capped(f, g, x, DEFAULT_MAX_ORDER)
}

pub fn apply_polynomial_capped(
    f: &FilterSpec,
    g: &Graph,
    x: &FeatureMatrix,
    max_order: usize,
) -> Result<FeatureMatrix> {
    expect_family(f, "polynomial")?;
    let opts = SolverOptions {
        max_order,
        ..SolverOptions::default()
    };
    f.apply(g, x, &opts)
}

/// Solves `Q(Ã) Z = P(Ã) X`.
pub fn apply_rational(
    f: &FilterSpec,
    g: &Graph,
    x: &FeatureMatrix,
    opts: &SolverOptions,
) -> Result<FeatureMatrix> {
    expect_family(f, "rational")?;
    f.apply(g, x, opts)
}

fn trim_trailing_zeros(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    c
}

/// Stacks two filters on the same basis: `compose(f1, f2)` applies `f2`
/// first, then `f1`. Coefficients are convolved; trailing zero
/// coefficients are dropped, and a product of two linear filters that
/// stays first-order is reported as linear.
pub fn compose(f1: &FilterSpec, f2: &FilterSpec) -> Result<FilterSpec> {
    if f1.scheme != f2.scheme {
        return Err(Error::BasisMismatch(f1.scheme.name().into(), f2.scheme.name().into()));
    }
    for f in [f1, f2] {
        if let Family::Rational { .. } = f.family {
            return Err(Error::UnsupportedFamily("rational".into()));
        }
    }
    let a = f1.numerator();
    let b = f2.numerator();
    let mut c = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            c[i + j] += ai * bj;
        }
    }
    let c = trim_trailing_zeros(c);
    let both_linear = matches!(f1.family, Family::Linear { .. }) && matches!(f2.family, Family::Linear { .. });
    let family = if both_linear && c.len() <= 2 {
        Family::Linear {
            phi: c[0],
            psi: c.get(1).copied().unwrap_or(0.0),
        }
    } else {
        Family::Polynomial { coeffs: c }
    };
    Ok(FilterSpec {
        family,
        scheme: f1.scheme,
        preset: None,
    })
}
