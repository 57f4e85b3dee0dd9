//! Linear solves for rational filters: `Q(Ã) Z = P(Ã) X`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_order, check_rows, poly_apply, DEFAULT_MAX_ORDER};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::operator::{Scheme, SparseOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Fixed point when the denominator is a contraction, dense LU up to
    /// `dense_cap` nodes, conjugate gradient beyond that on symmetric bases.
    Auto,
    ConjugateGradient,
    FixedPoint,
    DenseDirect,
}

impl SolverMethod {
    pub fn parse(s: &str) -> Result<SolverMethod> {
        match s {
            "auto" => Ok(SolverMethod::Auto),
            "cg" | "conjugate_gradient" => Ok(SolverMethod::ConjugateGradient),
            "fixed_point" => Ok(SolverMethod::FixedPoint),
            "dense" | "dense_direct" => Ok(SolverMethod::DenseDirect),
            other => Err(Error::InvalidParam(format!("unknown solver method {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative residual `‖Q(Ã)Z − P(Ã)X‖_F / ‖P(Ã)X‖_F` to reach.
    pub tolerance: f64,
    pub method: SolverMethod,
    /// Largest power of the basis operator any filter may use.
    pub max_order: usize,
    /// Node limit for dense factorization.
    pub dense_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 1000,
            tolerance: 1e-10,
            method: SolverMethod::Auto,
            max_order: DEFAULT_MAX_ORDER,
            dense_cap: 2048,
        }
    }
}

impl SolverOptions {
    pub fn with_method(method: SolverMethod) -> Self {
        SolverOptions {
            method,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "solver tolerance and max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalSolve {
    pub z: FeatureMatrix,
    pub method: SolverMethod,
    pub iterations: usize,
    /// Final relative residual, measured with sparse products.
    pub residual: f64,
}

/// `Q(x) − 1` as coefficients, i.e. `[0, φ₁, …, φₙ]`.
fn tail_poly(den: &[f64]) -> Vec<f64> {
    std::iter::once(0.0).chain(den.iter().copied()).collect()
}

fn q_poly(den: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(den.iter().copied()).collect()
}

fn fro(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn relative_residual(op: &SparseOperator, den: &[f64], z: &DMatrix<f64>, b: &DMatrix<f64>, bnorm: f64) -> f64 {
    let qz = poly_apply(op, &q_poly(den), z);
    fro(&(b - qz)) / bnorm
}

/// Contraction factor `Σ |φₘ| ρᵐ` of the fixed-point map, where `ρ`
/// bounds the spectral radius of the basis.
pub(crate) fn contraction_factor(op: &SparseOperator, den: &[f64]) -> f64 {
    let rho = op.spectral_radius_bound();
    den.iter()
        .enumerate()
        .map(|(m, c)| c.abs() * rho.powi(m as i32 + 1))
        .sum()
}

fn has_universal_bound(s: Scheme) -> bool {
    s.spectral_radius_bound().is_some()
}

fn choose_method(op: &SparseOperator, den: &[f64], opts: &SolverOptions) -> Result<SolverMethod> {
    Ok(match opts.method {
        SolverMethod::Auto => {
            if den.iter().all(|&c| c == 0.0) {
                SolverMethod::FixedPoint
            } else if has_universal_bound(op.scheme()) && contraction_factor(op, den) < 1.0 {
                SolverMethod::FixedPoint
            } else if op.num_nodes() <= opts.dense_cap {
                SolverMethod::DenseDirect
            } else if op.is_symmetric() {
                SolverMethod::ConjugateGradient
            } else {
                return Err(Error::MethodUnsupported(format!(
                    "no solver for a nonsymmetric {} basis with {} nodes",
                    op.scheme(),
                    op.num_nodes()
                )));
            }
        }
        m => m,
    })
}

/// Evaluates `P(Ã) Q(Ã)⁻¹ X`. `den` holds `φ₁…φₙ`; the constant term of
/// `Q` is 1.
pub fn solve_rational(
    op: &SparseOperator,
    num: &[f64],
    den: &[f64],
    x: &FeatureMatrix,
    opts: &SolverOptions,
) -> Result<RationalSolve> {
    opts.validate()?;
    check_rows(op, x)?;
    if num.is_empty() {
        return Err(Error::InvalidParam("empty numerator".into()));
    }
    check_order((num.len() - 1).max(den.len()), opts.max_order)?;

    let b = poly_apply(op, num, x.as_matrix());
    let bnorm = fro(&b);
    let method = choose_method(op, den, opts)?;
    if bnorm == 0.0 {
        return Ok(RationalSolve {
            z: FeatureMatrix::from_matrix(DMatrix::zeros(b.nrows(), b.ncols())),
            method,
            iterations: 0,
            residual: 0.0,
        });
    }
    let (z, iterations) = match method {
        SolverMethod::FixedPoint => fixed_point(op, den, &b, bnorm, opts)?,
        SolverMethod::DenseDirect => dense_direct(op, den, &b, bnorm, opts)?,
        SolverMethod::ConjugateGradient => conjugate_gradient(op, den, &b, opts)?,
        SolverMethod::Auto => unreachable!("resolved above"),
    };
    let residual = relative_residual(op, den, &z, &b, bnorm);
    if !(residual <= opts.tolerance) {
        return Err(Error::SolverDiverged {
            iterations,
            residual,
            tolerance: opts.tolerance,
        });
    }
    Ok(RationalSolve {
        z: FeatureMatrix::from_matrix(z),
        method,
        iterations,
        residual,
    })
}

/// `Z ← B − (Q(Ã) − I) Z`, starting from `Z = B`. For PPNP this is
/// `Z ← αX + (1−α) Ã Z`. The residual `B − Q(Ã)Z` is the step itself.
fn fixed_point(
    op: &SparseOperator,
    den: &[f64],
    b: &DMatrix<f64>,
    bnorm: f64,
    opts: &SolverOptions,
) -> Result<(DMatrix<f64>, usize)> {
    if !has_universal_bound(op.scheme()) {
        return Err(Error::MethodUnsupported(format!(
            "fixed point needs a normalized basis, got {}",
            op.scheme()
        )));
    }
    let tail = tail_poly(den);
    let mut z = b.clone();
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let next = b - poly_apply(op, &tail, &z);
        let step = fro(&(&next - &z)) / bnorm;
        if step <= opts.tolerance * 0.5 {
            // `step` is exactly the residual of the current iterate
            return Ok((z, it));
        }
        z = next;
        if !step.is_finite() || step > 1e100 {
            last = step;
            break;
        }
        last = step;
    }
    Err(Error::SolverDiverged {
        iterations: opts.max_iterations,
        residual: last,
        tolerance: opts.tolerance,
    })
}

fn dense_direct(
    op: &SparseOperator,
    den: &[f64],
    b: &DMatrix<f64>,
    bnorm: f64,
    opts: &SolverOptions,
) -> Result<(DMatrix<f64>, usize)> {
    let n = op.num_nodes();
    if n > opts.dense_cap {
        return Err(Error::TooLarge {
            size: n,
            cap: opts.dense_cap,
        });
    }
    let m = op.to_dense();
    let q_coeffs = q_poly(den);
    let mut q = DMatrix::<f64>::zeros(n, n);
    for &c in q_coeffs.iter().rev() {
        q = &q * &m;
        for i in 0..n {
            q[(i, i)] += c;
        }
    }
    let lu = q.lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
    let pmax = pivots.iter().cloned().fold(0.0, f64::max);
    let pmin = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if n > 0 && (pmax == 0.0 || pmin <= pmax * 1e-14) {
        return Err(Error::SingularDenominator);
    }
    let mut z = lu.solve(b).ok_or(Error::SingularDenominator)?;
    let mut steps = 1;
    // iterative refinement against the sparse residual
    for _ in 0..3 {
        let r = b - poly_apply(op, &q_coeffs, &z);
        if fro(&r) / bnorm <= opts.tolerance * 0.5 {
            break;
        }
        let dz = lu.solve(&r).ok_or(Error::SingularDenominator)?;
        z += dz;
        steps += 1;
    }
    Ok((z, steps))
}

/// Column-by-column CG on `Q(Ã)`; requires a symmetric basis and a
/// positive definite `Q(Ã)`.
fn conjugate_gradient(
    op: &SparseOperator,
    den: &[f64],
    b: &DMatrix<f64>,
    opts: &SolverOptions,
) -> Result<(DMatrix<f64>, usize)> {
    if !op.is_symmetric() {
        return Err(Error::MethodUnsupported(format!(
            "conjugate gradient needs a symmetric operator, {} is not",
            op.scheme()
        )));
    }
    let q_coeffs = q_poly(den);
    let n = op.num_nodes();
    let apply_q = |v: &DVector<f64>| -> DVector<f64> {
        let m = DMatrix::from_column_slice(n, 1, v.as_slice());
        let out = poly_apply(op, &q_coeffs, &m);
        DVector::from_column_slice(out.as_slice())
    };
    let mut z = DMatrix::zeros(n, b.ncols());
    let mut worst = 0;
    for c in 0..b.ncols() {
        let rhs: DVector<f64> = b.column(c).into_owned();
        let rhs_norm = rhs.norm();
        if rhs_norm == 0.0 {
            continue;
        }
        let target = 0.5 * opts.tolerance * rhs_norm;
        let mut x = DVector::zeros(n);
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rr = r.dot(&r);
        let mut it = 0;
        while rr.sqrt() > target {
            if it == opts.max_iterations {
                return Err(Error::SolverDiverged {
                    iterations: it,
                    residual: rr.sqrt() / rhs_norm,
                    tolerance: opts.tolerance,
                });
            }
            let qp = apply_q(&p);
            let pqp = p.dot(&qp);
            if !(pqp > 0.0) {
                return Err(Error::MethodUnsupported(
                    "conjugate gradient needs a positive definite denominator".into(),
                ));
            }
            let step = rr / pqp;
            x.axpy(step, &p, 1.0);
            r.axpy(-step, &qp, 1.0);
            let rr_new = r.dot(&r);
            p = &r + &p * (rr_new / rr);
            rr = rr_new;
            it += 1;
        }
        worst = worst.max(it);
        z.set_column(c, &x);
    }
    Ok((z, worst))
}
