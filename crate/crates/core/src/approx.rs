//! Least-squares fitting of polynomial and rational frequency responses.
//!
//! Fits are computed in the Chebyshev basis on the target's domain and
//! converted to monomial coefficients in `λ` on the `LapSym` basis at the end.
//! Errors are always measured from the Chebyshev form, on a 1024-point
//! uniform grid.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::io::fmt_f64;
use crate::operator::Scheme;

pub const ERROR_GRID_POINTS: usize = 1024;
pub const MAX_CONDITION: f64 = 1e12;
pub const SK_MAX_ITERATIONS: usize = 50;
pub const SK_TOLERANCE: f64 = 1e-8;

#[derive(Clone)]
pub enum TargetKind {
    /// `high` below `threshold`, `low` at and above it.
    Step { threshold: f64, low: f64, high: f64 },
    /// Linearly interpolated samples.
    Sampled { grid: Vec<f64>, values: Vec<f64> },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Frequency response of an existing filter.
    ClosedForm(FilterSpec),
}

impl fmt::Debug for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Step { threshold, low, high } => f
                .debug_struct("Step")
                .field("threshold", threshold)
                .field("low", low)
                .field("high", high)
                .finish(),
            TargetKind::Sampled { grid, .. } => write!(f, "Sampled({} points)", grid.len()),
            TargetKind::Function(_) => f.write_str("Function"),
            TargetKind::ClosedForm(spec) => write!(f, "ClosedForm({:?})", spec.family),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TargetSignal {
    pub kind: TargetKind,
    pub domain: (f64, f64),
}

impl TargetSignal {
    pub fn new(kind: TargetKind, domain: (f64, f64)) -> Result<TargetSignal> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidTarget(format!("domain [{lo}, {hi}] is empty")));
        }
        match &kind {
            TargetKind::Step { threshold, low, high } => {
                if !(lo < *threshold && *threshold < hi) {
                    return Err(Error::InvalidTarget(format!(
                        "step threshold {threshold} not inside ({lo}, {hi})"
                    )));
                }
                if !low.is_finite() || !high.is_finite() {
                    return Err(Error::InvalidTarget("step levels must be finite".into()));
                }
            }
            TargetKind::Sampled { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(Error::InvalidTarget(
                        "sampled target needs matching grid and values, at least two".into(),
                    ));
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidTarget(
                        "sampled grid must increase strictly and values be finite".into(),
                    ));
                }
                if grid[0] > lo || grid[grid.len() - 1] < hi {
                    return Err(Error::InvalidTarget("samples do not cover the domain".into()));
                }
            }
            TargetKind::Function(_) | TargetKind::ClosedForm(_) => {}
        }
        Ok(TargetSignal { kind, domain })
    }

    /// The jump signal: 1 on `[0, 1)`, 0 on `[1, 2]`.
    pub fn jump() -> TargetSignal {
        TargetSignal::step(1.0, 0.0, 1.0, (0.0, 2.0)).unwrap()
    }

    pub fn step(threshold: f64, low: f64, high: f64, domain: (f64, f64)) -> Result<TargetSignal> {
        TargetSignal::new(TargetKind::Step { threshold, low, high }, domain)
    }

    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static, domain: (f64, f64)) -> Result<TargetSignal> {
        TargetSignal::new(TargetKind::Function(Arc::new(f)), domain)
    }

    pub fn closed_form(f: FilterSpec, domain: (f64, f64)) -> Result<TargetSignal> {
        TargetSignal::new(TargetKind::ClosedForm(f), domain)
    }

    pub fn sampled(grid: Vec<f64>, values: Vec<f64>) -> Result<TargetSignal> {
        let domain = (
            grid.first().copied().unwrap_or(0.0),
            grid.last().copied().unwrap_or(0.0),
        );
        TargetSignal::new(TargetKind::Sampled { grid, values }, domain)
    }

    pub fn eval(&self, l: f64) -> f64 {
        match &self.kind {
            TargetKind::Step { threshold, low, high } => {
                if l < *threshold {
                    *high
                } else {
                    *low
                }
            }
            TargetKind::Sampled { grid, values } => {
                let k = grid.partition_point(|&g| g <= l).clamp(1, grid.len() - 1);
                let w = (l - grid[k - 1]) / (grid[k] - grid[k - 1]);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
            TargetKind::Function(f) => f(l),
            TargetKind::ClosedForm(spec) => spec.response(l),
        }
    }

    fn to_unit(&self, l: f64) -> f64 {
        let (a, b) = self.domain;
        (2.0 * l - a - b) / (b - a)
    }
}

/// Value of `Σ cⱼ Tⱼ(x)` by Clenshaw's recurrence.
pub fn chebyshev_eval(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cj in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// `m` Chebyshev nodes of the first kind on `[-1, 1]`, ascending.
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    (0..m)
        .rev()
        .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / m as f64).cos())
        .collect()
}

/// Monomial coefficients in `λ` of `Σ cⱼ Tⱼ(αλ + β)`.
fn chebyshev_to_monomial(c: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    let mut prev: Vec<f64> = vec![1.0];
    let mut cur: Vec<f64> = vec![beta, alpha];
    for (j, &cj) in c.iter().enumerate() {
        let tj: &[f64] = match j {
            0 => &prev,
            _ => &cur,
        };
        for (o, t) in out.iter_mut().zip(tj) {
            *o += cj * t;
        }
        if j >= 1 {
            // T_{j+1} = 2(αλ + β) T_j − T_{j−1}
            let mut next = vec![0.0; cur.len() + 1];
            for (i, &t) in cur.iter().enumerate() {
                next[i] += 2.0 * beta * t;
                next[i + 1] += 2.0 * alpha * t;
            }
            for (i, &t) in prev.iter().enumerate() {
                next[i] -= t;
            }
            prev = std::mem::replace(&mut cur, next);
        }
    }
    out
}

/// Result of a single fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Fitted filter on the `LapSym` basis; its `response` is the fit.
    pub filter: FilterSpec,
    /// Chebyshev coefficients of the numerator on the target domain.
    pub num_chebyshev: Vec<f64>,
    /// Chebyshev coefficients of the denominator; `[1]` for polynomials.
    pub den_chebyshev: Vec<f64>,
    pub domain: (f64, f64),
    pub max_error: f64,
    pub rms_error: f64,
    pub iterations_used: usize,
    pub condition: f64,
}

impl FitResult {
    /// Fitted response at `λ`, from the Chebyshev form.
    pub fn eval(&self, l: f64) -> f64 {
        let (a, b) = self.domain;
        let x = (2.0 * l - a - b) / (b - a);
        chebyshev_eval(&self.num_chebyshev, x) / chebyshev_eval(&self.den_chebyshev, x)
    }
}

fn error_grid(domain: (f64, f64)) -> Vec<f64> {
    crate::spectral::uniform_grid(domain.0, domain.1, ERROR_GRID_POINTS)
}

/// `(max_error, rms_error)` of a Chebyshev-form ratio on the error grid.
fn measure(target: &TargetSignal, num: &[f64], den: &[f64]) -> (f64, f64) {
    let mut max: f64 = 0.0;
    let mut sq = 0.0;
    let grid = error_grid(target.domain);
    for &l in &grid {
        let x = target.to_unit(l);
        let e = (chebyshev_eval(num, x) / chebyshev_eval(den, x) - target.eval(l)).abs();
        max = max.max(e);
        sq += e * e;
    }
    let rms = (sq / grid.len() as f64).sqrt();
    if max.is_nan() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (max, rms.min(max))
    }
}

/// Minimum-norm least squares with the 2-norm condition number of `a`.
fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let x = svd
        .solve(b, smax * f64::EPSILON * a.nrows().max(a.ncols()) as f64)
        .map_err(|e| Error::InvalidTarget(e.to_string()))?;
    Ok((x, cond))
}

fn check_grid_size(grid_size: usize, unknowns: usize) -> Result<()> {
    if grid_size < unknowns {
        return Err(Error::InvalidParam(format!(
            "grid of {grid_size} points cannot determine {unknowns} coefficients"
        )));
    }
    Ok(())
}

fn chebyshev_row(x: f64, len: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(len);
    for j in 0..len {
        t.push(match j {
            0 => 1.0,
            1 => x,
            _ => 2.0 * x * t[j - 1] - t[j - 2],
        });
    }
    t
}

fn polynomial_chebyshev(target: &TargetSignal, k: usize, grid_size: usize) -> Result<(Vec<f64>, f64)> {
    check_grid_size(grid_size, k + 1)?;
    let nodes = chebyshev_nodes(grid_size);
    let (a, b) = target.domain;
    let mut v = DMatrix::zeros(grid_size, k + 1);
    let mut y = DVector::zeros(grid_size);
    for (i, &x) in nodes.iter().enumerate() {
        for (j, t) in chebyshev_row(x, k + 1).into_iter().enumerate() {
            v[(i, j)] = t;
        }
        y[i] = target.eval(0.5 * (a + b) + 0.5 * (b - a) * x);
    }
    let (c, cond) = lstsq(&v, &y)?;
    Ok((c.iter().copied().collect(), cond))
}

/// Affine map `x = αλ + β` from the domain onto `[-1, 1]`.
fn unit_map(domain: (f64, f64)) -> (f64, f64) {
    let (a, b) = domain;
    (2.0 / (b - a), -(a + b) / (b - a))
}

/// Degree-`k` least-squares polynomial on `grid_size` Chebyshev nodes.
pub fn fit_polynomial(target: &TargetSignal, k: usize, grid_size: usize) -> Result<FitResult> {
    let (cheb, cond) = polynomial_chebyshev(target, k, grid_size)?;
    let (alpha, beta) = unit_map(target.domain);
    let filter = FilterSpec::polynomial(chebyshev_to_monomial(&cheb, alpha, beta), Scheme::LapSym)?;
    let (max_error, rms_error) = measure(target, &cheb, &[1.0]);
    Ok(FitResult {
        filter,
        num_chebyshev: cheb,
        den_chebyshev: vec![1.0],
        domain: target.domain,
        max_error,
        rms_error,
        iterations_used: 1,
        condition: cond,
    })
}

/// Best affine response `φ + ψλ`, returned as a linear filter.
pub fn fit_linear(target: &TargetSignal, grid_size: usize) -> Result<FitResult> {
    let mut r = fit_polynomial(target, 1, grid_size)?;
    let c = r.filter.numerator();
    r.filter = FilterSpec::linear(c[0], c.get(1).copied().unwrap_or(0.0), Scheme::LapSym);
    Ok(r)
}

/// True when the Chebyshev-form denominator vanishes or changes sign on
/// the unit interval. Checked on the error grid and the fitting nodes.
fn has_pole(den: &[f64], fit_nodes: &[f64]) -> bool {
    if den.len() == 1 {
        return den[0] == 0.0;
    }
    let scale: f64 = den.iter().map(|c| c.abs()).sum();
    let unit = crate::spectral::uniform_grid(-1.0, 1.0, ERROR_GRID_POINTS);
    let mut sign = 0.0;
    for &x in unit.iter().chain(fit_nodes) {
        let q = chebyshev_eval(den, x);
        if !q.is_finite() || q.abs() <= 1e-12 * scale {
            return true;
        }
        if sign == 0.0 {
            sign = q.signum();
        } else if q.signum() != sign {
            return true;
        }
    }
    false
}

/// Returns `PoleInDomain` when a fitted denominator vanishes on the domain.
pub fn check_poles(fit: &FitResult) -> Result<()> {
    if has_pole(&fit.den_chebyshev, &[]) {
        return Err(Error::PoleInDomain {
            lo: fit.domain.0,
            hi: fit.domain.1,
        });
    }
    Ok(())
}

/// Rational fit `P/Q` with `deg P = k`, `deg Q = n` by linearized,
/// reweighted least squares.
///
/// Each step solves `min Σ ((P(xᵢ) − gᵢ Q(xᵢ)) / Q_prev(xᵢ))²` with the
/// constant Chebyshev coefficient of `Q` fixed to 1, until the denominator
/// coefficients move by at most `1e-8` or 50 steps have run. The returned
/// fit is the pole-free iterate with the smallest sup-norm error; the
/// least-squares polynomial of degree `k` is included as a candidate, so
/// the result is never worse than it. This is not a minimax fit.
pub fn fit_rational(target: &TargetSignal, k: usize, n: usize, grid_size: usize) -> Result<FitResult> {
    if n == 0 {
        return Err(Error::InvalidParam("denominator degree must be at least 1".into()));
    }
    check_grid_size(grid_size, k + n + 1)?;
    let nodes = chebyshev_nodes(grid_size);
    let (a, b) = target.domain;
    let g: Vec<f64> = nodes
        .iter()
        .map(|&x| target.eval(0.5 * (a + b) + 0.5 * (b - a) * x))
        .collect();
    let rows: Vec<Vec<f64>> = nodes.iter().map(|&x| chebyshev_row(x, k.max(n) + 1)).collect();

    let (poly, poly_cond) = polynomial_chebyshev(target, k, grid_size)?;
    let (pm, pr) = measure(target, &poly, &[1.0]);
    let mut best = (poly, vec![1.0], pm, pr, 0usize, poly_cond);

    let mut den = vec![1.0];
    den.resize(n + 1, 0.0);
    let mut iterations = 0;
    for it in 1..=SK_MAX_ITERATIONS {
        iterations = it;
        let weights: Vec<f64> = nodes.iter().map(|&x| 1.0 / chebyshev_eval(&den, x).abs()).collect();
        if weights.iter().any(|w| !w.is_finite()) {
            break;
        }
        let mut m = DMatrix::zeros(grid_size, k + 1 + n);
        let mut rhs = DVector::zeros(grid_size);
        for (i, t) in rows.iter().enumerate() {
            let w = weights[i];
            for j in 0..=k {
                m[(i, j)] = w * t[j];
            }
            for j in 1..=n {
                m[(i, k + j)] = -w * g[i] * t[j];
            }
            rhs[i] = w * g[i];
        }
        let (sol, cond) = match lstsq(&m, &rhs) {
            Ok(s) => s,
            Err(e) if it == 1 => return Err(e),
            Err(_) => break,
        };
        let num: Vec<f64> = sol.rows(0, k + 1).iter().copied().collect();
        let mut next = vec![1.0];
        next.extend(sol.rows(k + 1, n).iter());
        let change = next
            .iter()
            .zip(&den)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        den = next;
        if !has_pole(&den, &nodes) {
            let (me, re) = measure(target, &num, &den);
            if me <= best.2 {
                best = (num, den.clone(), me, re, it, cond);
            }
        }
        if change <= SK_TOLERANCE {
            break;
        }
    }

    let (num, mut den, max_error, rms_error, _, condition) = best;
    den.resize(n + 1, 0.0);
    let (alpha, beta) = unit_map(target.domain);
    let p = chebyshev_to_monomial(&num, alpha, beta);
    let q = chebyshev_to_monomial(&den, alpha, beta);
    if q[0] == 0.0 || !q[0].is_finite() {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let filter = FilterSpec::rational(
        p.iter().map(|c| c / q[0]).collect(),
        q[1..].iter().map(|c| c / q[0]).collect(),
        Scheme::LapSym,
    )?;
    Ok(FitResult {
        filter,
        num_chebyshev: num,
        den_chebyshev: den,
        domain: target.domain,
        max_error,
        rms_error,
        iterations_used: iterations,
        condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitFamily {
    Polynomial,
    /// Numerator and denominator both of the study degree.
    Rational,
}

impl FitFamily {
    pub fn parse(s: &str) -> Result<FitFamily> {
        match s {
            "polynomial" | "poly" => Ok(FitFamily::Polynomial),
            "rational" => Ok(FitFamily::Rational),
            other => Err(Error::InvalidParam(format!("unknown fit family {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitFamily::Polynomial => "polynomial",
            FitFamily::Rational => "rational",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub degree: usize,
    pub max_error: f64,
    pub rms_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub family: FitFamily,
    pub rows: Vec<StudyRow>,
    /// Slope of `log(max_error)` against `log K` (polynomial) or `√K`
    /// (rational).
    pub slope: f64,
    /// Same slope computed from the rms errors.
    pub rms_slope: f64,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,max_error,rms_error\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.degree, fmt_f64(r.max_error), fmt_f64(r.rms_error)));
        }
        out
    }

    pub fn summary(&self) -> String {
        let axis = match self.family {
            FitFamily::Polynomial => "log_k",
            FitFamily::Rational => "sqrt_k",
        };
        format!(
            "family={} axis={axis} slope={} rms_slope={}",
            self.family.name(),
            fmt_f64(self.slope),
            fmt_f64(self.rms_slope)
        )
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs one fit per degree and fits the decay rate of the error.
pub fn convergence_study(
    target: &TargetSignal,
    family: FitFamily,
    degrees: &[usize],
    grid_size: usize,
) -> Result<ConvergenceStudy> {
    if degrees.len() < 2 || degrees.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam(
            "degrees must be strictly ascending with at least two entries".into(),
        ));
    }
    if family == FitFamily::Rational && degrees[0] == 0 {
        return Err(Error::InvalidParam("rational study degrees must be positive".into()));
    }
    let mut rows = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let fit = match family {
            FitFamily::Polynomial => fit_polynomial(target, d, grid_size)?,
            FitFamily::Rational => fit_rational(target, d, d, grid_size)?,
        };
        rows.push(StudyRow {
            degree: d,
            max_error: fit.max_error,
            rms_error: fit.rms_error,
        });
    }
    let xs: Vec<f64> = degrees
        .iter()
        .map(|&d| match family {
            FitFamily::Polynomial => (d.max(1) as f64).ln(),
            FitFamily::Rational => (d as f64).sqrt(),
        })
        .collect();
    let logs = |f: fn(&StudyRow) -> f64| -> Vec<f64> {
        rows.iter().map(|r| f(r).max(f64::MIN_POSITIVE).ln()).collect()
    };
    let slope = ls_slope(&xs, &logs(|r| r.max_error));
    let rms_slope = ls_slope(&xs, &logs(|r| r.rms_error));
    Ok(ConvergenceStudy {
        family,
        rows,
        slope,
        rms_slope,
    })
}
