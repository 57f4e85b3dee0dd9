//! Closed-form frequency responses of the named models, written directly on
//! the Laplacian-eigenvalue axis (GIN on the raw adjacency axis).
//!
//! These are independent of the coefficient expansion in
//! [`FilterSpec`](crate::filter::FilterSpec) and serve as its reference.
//!
//! Two forms differ from a literal reading of the usual table:
//! label propagation is `1/(1 + αλ)` (from `(I + αL)⁻¹`), and SGC is
//! `(1 − λ)ᴷ` with alternating signs.

use crate::error::{Error, Result};
use crate::filter::Preset;

use super::ResponseAxis;

pub type Response = Box<dyn Fn(f64) -> f64 + Send + Sync>;

fn param(p: &Preset, key: &str) -> Result<f64> {
    p.params
        .get(key)
        .copied()
        .ok_or_else(|| Error::InvalidParam(format!("{} closed form needs {key}", p.name)))
}

fn sequence(p: &Preset, prefix: &str, first: usize) -> Vec<f64> {
    (first..)
        .map_while(|i| p.params.get(&format!("{prefix}{i}")).copied())
        .collect()
}

/// Returns the closed form `g(λ)` of a preset and the axis it lives on.
pub fn closed_form(p: &Preset) -> Result<(Response, ResponseAxis)> {
    let lap = ResponseAxis::Laplacian;
    Ok(match p.name.as_str() {
        "gcn" | "sage" => (Box::new(|l| 1.0 - l), lap),
        "gin" => {
            let eps = param(p, "eps")?;
            (Box::new(move |mu| 1.0 + eps + mu), ResponseAxis::RawAdjacency)
        }
        "chebnet" => {
            let theta = sequence(p, "theta", 0);
            let f = move |l: f64| {
                let x = l - 1.0;
                let (mut t0, mut t1) = (1.0, x);
                let mut acc = 0.0;
                for (k, &th) in theta.iter().enumerate() {
                    let tk = match k {
                        0 => t0,
                        1 => t1,
                        _ => {
                            let t2 = 2.0 * x * t1 - t0;
                            t0 = t1;
                            t1 = t2;
                            t2
                        }
                    };
                    acc += th * tk;
                }
                acc
            };
            (Box::new(f), lap)
        }
        "dcnn" => {
            let psi = sequence(p, "psi", 1);
            let f = move |l: f64| {
                psi.iter()
                    .enumerate()
                    .map(|(j, &c)| c * (1.0 - l).powi(j as i32 + 1))
                    .sum()
            };
            (Box::new(f), lap)
        }
        "sgc" => {
            let k = param(p, "k")? as i32;
            (Box::new(move |l: f64| (1.0 - l).powi(k)), lap)
        }
        "ar_lp" => {
            let alpha = param(p, "alpha")?;
            (Box::new(move |l| 1.0 / (1.0 + alpha * l)), lap)
        }
        "ppnp" => {
            let alpha = param(p, "alpha")?;
            (Box::new(move |l| alpha / (alpha + (1.0 - alpha) * l)), lap)
        }
        "arma" => {
            let a = param(p, "a")?;
            let b = param(p, "b")?;
            (Box::new(move |l| b / (1.0 - a + a * l)), lap)
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}
