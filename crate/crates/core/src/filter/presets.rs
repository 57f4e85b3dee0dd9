//! Named models expressed as [`FilterSpec`]s.

use std::collections::BTreeMap;

use super::{Family, FilterSpec};
use crate::error::{Error, Result};
use crate::operator::Scheme;

pub const PRESET_NAMES: [&str; 9] = [
    "gcn", "sage", "gin", "chebnet", "dcnn", "sgc", "ar_lp", "ppnp", "arma",
];

/// Convenience form of [`make_preset_from`] taking `(name, value)` pairs.
pub fn make_preset(name: &str, params: &[(&str, f64)]) -> Result<FilterSpec> {
    let map = params.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    make_preset_from(name, &map)
}

struct Params<'a> {
    model: &'a str,
    raw: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn allow(&self, keys: &[&str]) -> Result<()> {
        for k in self.raw.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::InvalidParam(format!("{} does not take parameter {k}", self.model)));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.raw.get(key).copied().or(default) {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => Err(Error::InvalidParam(format!("{key}={v} is not finite"))),
            None => Err(Error::InvalidParam(format!("{} requires parameter {key}", self.model))),
        }
    }

    /// `prefix0, prefix1, …` (starting at `first`) with no gaps.
    fn sequence(&self, prefix: &str, first: usize) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut i = first;
        while let Some(&v) = self.raw.get(&format!("{prefix}{i}")) {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{prefix}{i} is not finite")));
            }
            out.push(v);
            i += 1;
        }
        let used = out.len();
        for k in self.raw.keys() {
            let idx = k.strip_prefix(prefix).and_then(|s| s.parse::<usize>().ok());
            match idx {
                Some(j) if j >= first && j < first + used => {}
                _ => {
                    return Err(Error::InvalidParam(format!(
                        "{}: unexpected or non-contiguous parameter {k}",
                        self.model
                    )))
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidParam(format!(
                "{} requires {prefix}{first}, {prefix}{}, …",
                self.model,
                first + 1
            )));
        }
        Ok(out)
    }
}

/// Monomial coefficients of `Σₖ θₖ Tₖ(x)`.
pub(crate) fn chebyshev_to_monomial(theta: &[f64]) -> Vec<f64> {
    let k = theta.len();
    let mut out = vec![0.0; k];
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    for (j, &t) in theta.iter().enumerate() {
        let tj: &[f64] = if j == 0 { &prev } else { &cur };
        for (o, &c) in out.iter_mut().zip(tj) {
            *o += t * c;
        }
        if j >= 1 {
            let mut next = vec![0.0; cur.len() + 1];
            for (i, &c) in cur.iter().enumerate() {
                next[i + 1] += 2.0 * c;
            }
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= c;
            }
            prev = std::mem::replace(&mut cur, next);
        }
    }
    out
}

/// Builds the filter for a named model.
///
/// | name    | family     | basis            | parameters (default)        |
/// |---------|------------|------------------|-----------------------------|
/// | gcn     | linear 0,1 | adj_renorm       |                             |
/// | sage    | linear 0,1 | adj_rw_self_loop |                             |
/// | gin     | linear 1+ε,1 | adj_raw        | `eps` (0)                   |
/// | chebnet | polynomial | adj_sym          | `theta0`, `theta1`, …       |
/// | dcnn    | polynomial | adj_rw           | `psi1`, `psi2`, …           |
/// | sgc     | polynomial | adj_renorm       | `k` (2)                     |
/// | ar_lp   | rational   | adj_rw           | `alpha` > 0 (1)             |
/// | ppnp    | rational   | adj_rw_self_loop | `alpha` in (0, 1] (0.1)     |
/// | arma    | rational   | adj_rw_self_loop | `a` with abs(a) < 1 (0.5), `b` (0.5) |
///
/// GraphSAGE's mean aggregator `D̂⁻¹(I + A)` is exactly the `adj_rw_self_loop`
/// operator, so its self weight lives in the operator's diagonal.
///
/// ChebNet uses `L̃ = LapSym − I` (largest eigenvalue taken as 2), so
/// `Tₖ(L̃) = Tₖ(−Ã)` and the coefficients are re-expanded in powers of the
/// symmetric adjacency.
pub fn make_preset_from(name: &str, params: &BTreeMap<String, f64>) -> Result<FilterSpec> {
    let p = Params { model: name, raw: params };
    let mut canonical = BTreeMap::new();
    let (family, scheme) = match name {
        "gcn" => {
            p.allow(&[])?;
            (Family::Linear { phi: 0.0, psi: 1.0 }, Scheme::AdjRenorm)
        }
        "sage" => {
            p.allow(&[])?;
            (Family::Linear { phi: 0.0, psi: 1.0 }, Scheme::AdjRwSelfLoop)
        }
        "gin" => {
            p.allow(&["eps"])?;
            let eps = p.get("eps", Some(0.0))?;
            canonical.insert("eps".into(), eps);
            (Family::Linear { phi: 1.0 + eps, psi: 1.0 }, Scheme::AdjRaw)
        }
        "chebnet" => {
            let theta = p.sequence("theta", 0)?;
            for (i, &t) in theta.iter().enumerate() {
                canonical.insert(format!("theta{i}"), t);
            }
            let in_x = chebyshev_to_monomial(&theta);
            let coeffs = in_x
                .iter()
                .enumerate()
                .map(|(j, &c)| if j % 2 == 1 { -c } else { c })
                .collect();
            (Family::Polynomial { coeffs }, Scheme::AdjSym)
        }
        "dcnn" => {
            let psi = p.sequence("psi", 1)?;
            for (i, &t) in psi.iter().enumerate() {
                canonical.insert(format!("psi{}", i + 1), t);
            }
            let coeffs = std::iter::once(0.0).chain(psi).collect();
            (Family::Polynomial { coeffs }, Scheme::AdjRw)
        }
        "sgc" => {
            p.allow(&["k"])?;
            let k = p.get("k", Some(2.0))?;
            if k < 0.0 || k.fract() != 0.0 {
                return Err(Error::InvalidParam(format!("sgc k={k} must be a nonnegative integer")));
            }
            canonical.insert("k".into(), k);
            let mut coeffs = vec![0.0; k as usize + 1];
            coeffs[k as usize] = 1.0;
            (Family::Polynomial { coeffs }, Scheme::AdjRenorm)
        }
        "ar_lp" => {
            p.allow(&["alpha"])?;
            let alpha = p.get("alpha", Some(1.0))?;
            if alpha <= 0.0 {
                return Err(Error::InvalidParam(format!("ar_lp alpha={alpha} must be positive")));
            }
            canonical.insert("alpha".into(), alpha);
            // ((1+α)I − αÃ)⁻¹ rescaled so that Q has unit constant term
            (
                Family::Rational {
                    num_coeffs: vec![1.0 / (1.0 + alpha)],
                    den_coeffs: vec![-alpha / (1.0 + alpha)],
                },
                Scheme::AdjRw,
            )
        }
        "ppnp" => {
            p.allow(&["alpha"])?;
            let alpha = p.get("alpha", Some(0.1))?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::InvalidParam(format!("ppnp alpha={alpha} must lie in (0, 1]")));
            }
            canonical.insert("alpha".into(), alpha);
            (
                Family::Rational {
                    num_coeffs: vec![alpha],
                    den_coeffs: vec![-(1.0 - alpha)],
                },
                Scheme::AdjRwSelfLoop,
            )
        }
        "arma" => {
            p.allow(&["a", "b"])?;
            let a = p.get("a", Some(0.5))?;
            let b = p.get("b", Some(0.5))?;
            if a.abs() >= 1.0 {
                return Err(Error::InvalidParam(format!("arma a={a} must satisfy |a| < 1")));
            }
            canonical.insert("a".into(), a);
            canonical.insert("b".into(), b);
            (
                Family::Rational {
                    num_coeffs: vec![b],
                    den_coeffs: vec![-a],
                },
                Scheme::AdjRwSelfLoop,
            )
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    let spec = FilterSpec {
        family,
        scheme,
        preset: None,
    };
    spec.validate()?;
    Ok(spec.with_preset(name, canonical))
}
