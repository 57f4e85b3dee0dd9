//! Random-walk co-occurrence operators and their Monte-Carlo check.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::graph::Graph;
use crate::operator::{Scheme, SparseOperator};
use crate::spectral::DENSE_CAP;

fn require_no_isolated(g: &Graph) -> Result<()> {
    match g.isolated_node() {
        Some(i) => Err(Error::IsolatedNode(i)),
        None => Ok(()),
    }
}

/// `1/(t+1) (I + Ã + … + Ãᵗ)` on the random-walk basis.
pub fn deepwalk_operator(g: &Graph, t: usize) -> Result<FilterSpec> {
    require_no_isolated(g)?;
    FilterSpec::polynomial(vec![1.0 / (t + 1) as f64; t + 1], Scheme::AdjRw)
}

/// Dense `(1/p) I + Ã + (1/q)(Ã² − Ã)` on the random-walk basis.
pub fn node2vec_operator(g: &Graph, p: f64, q: f64) -> Result<DMatrix<f64>> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
        }
    }
    require_no_isolated(g)?;
    let a = SparseOperator::build(g, Scheme::AdjRw).to_dense();
    let a2 = &a * &a;
    let n = g.num_nodes();
    Ok(DMatrix::identity(n, n) / p + &a + (a2 - &a) / q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    /// Window size `t`.
    pub window: usize,
    /// Walks started from every node.
    pub num_walks: usize,
    /// Steps per walk; at least `window`.
    pub walk_length: usize,
    pub seed: u64,
    /// Upper bound on `num_walks · num_nodes`.
    pub budget: usize,
}

pub const DEFAULT_WALK_BUDGET: usize = 100_000_000;

impl WalkConfig {
    pub fn new(window: usize, num_walks: usize, seed: u64) -> WalkConfig {
        WalkConfig {
            window,
            num_walks,
            walk_length: window,
            seed,
            budget: DEFAULT_WALK_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be positive".into()));
        }
        if self.num_walks == 0 {
            return Err(Error::InvalidConfig("num_walks must be positive".into()));
        }
        if self.walk_length < self.window {
            return Err(Error::InvalidConfig(format!(
                "walk_length {} is shorter than the window {}",
                self.walk_length, self.window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkCheck {
    /// Row-normalized co-occurrence frequencies.
    pub empirical: DMatrix<f64>,
    /// Dense `deepwalk_operator(g, t)`.
    pub expected: DMatrix<f64>,
    pub max_abs_dev: f64,
}

fn step(g: &Graph, v: usize, rng: &mut ChaCha8Rng) -> usize {
    let r = rng.random::<f64>() * g.degree(v);
    let mut acc = 0.0;
    let mut last = v;
    for (u, w) in g.neighbors(v) {
        acc += w;
        last = u;
        if r < acc {
            return u;
        }
    }
    last
}

/// Simulates uniform random walks and compares windowed co-occurrence
/// frequencies with the closed-form DeepWalk operator.
///
/// Every position `s` whose window `s..=s+t` lies inside the walk counts
/// the pairs `(v_s, v_{s+d})` for `d = 0..=t`; rows are normalized by their
/// total. Walks from node `i` use a generator seeded with `seed + i`, so
/// the result does not depend on the thread count.
pub fn monte_carlo_walk_check(g: &Graph, cfg: &WalkConfig) -> Result<WalkCheck> {
    cfg.validate()?;
    require_no_isolated(g)?;
    let n = g.num_nodes();
    if n > DENSE_CAP {
        return Err(Error::TooLarge { size: n, cap: DENSE_CAP });
    }
    let requested = cfg.num_walks.saturating_mul(n);
    if requested > cfg.budget {
        return Err(Error::BudgetExceeded {
            requested,
            budget: cfg.budget,
        });
    }

    let t = cfg.window;
    let shards: Vec<BTreeMap<(usize, usize), u64>> = (0..n)
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(start as u64));
            let mut counts = BTreeMap::new();
            let mut walk = Vec::with_capacity(cfg.walk_length + 1);
            for _ in 0..cfg.num_walks {
                walk.clear();
                walk.push(start);
                for _ in 0..cfg.walk_length {
                    let v = step(g, *walk.last().unwrap(), &mut rng);
                    walk.push(v);
                }
                for s in 0..walk.len() - t {
                    for d in 0..=t {
                        *counts.entry((walk[s], walk[s + d])).or_insert(0) += 1;
                    }
                }
            }
            counts
        })
        .collect();

    let mut counts = DMatrix::<f64>::zeros(n, n);
    for shard in shards {
        for ((a, b), c) in shard {
            counts[(a, b)] += c as f64;
        }
    }
    for mut row in counts.row_iter_mut() {
        let total: f64 = row.sum();
        if total > 0.0 {
            row /= total;
        }
    }
    let expected = deepwalk_operator(g, t)?.dense_operator(g)?;
    let max_abs_dev = (&counts - &expected).amax();
    Ok(WalkCheck {
        empirical: counts,
        expected,
        max_abs_dev,
    })
}
