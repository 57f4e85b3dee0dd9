//! Wall-clock timing of sparse filter application.

use std::time::Instant;

use crate::approx::ls_slope;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::filter::{FilterSpec, SolverOptions};
use crate::graph::random_regular;
use crate::io::fmt_f64;

pub const BENCH_DEGREE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub num_nodes: usize,
    pub nnz: usize,
    pub order: usize,
    pub features: usize,
    /// Median wall time of one application.
    pub seconds: f64,
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times `f` on a random 16-regular graph of each size.
pub fn bench_filter(
    f: &FilterSpec,
    sizes: &[usize],
    features: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("sizes must be nonempty and strictly ascending".into()));
    }
    if repetitions == 0 || features == 0 {
        return Err(Error::InvalidConfig("repetitions and features must be positive".into()));
    }
    let opts = SolverOptions::default();
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let g = random_regular(n, BENCH_DEGREE, seed)?;
        let op = f.operator(&g);
        let x = FeatureMatrix::random(n, features, seed);
        // warm-up
        std::hint::black_box(f.apply_with_operator(&op, &x, &opts)?);
        let mut times = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            std::hint::black_box(f.apply_with_operator(&op, &x, &opts)?);
            times.push(start.elapsed().as_secs_f64());
        }
        rows.push(BenchRow {
            num_nodes: n,
            nnz: op.nnz(),
            order: f.order(),
            features,
            seconds: median(times),
        });
    }
    Ok(rows)
}

pub fn bench_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("num_nodes,nnz,order,features,seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.num_nodes,
            r.nnz,
            r.order,
            r.features,
            fmt_f64(r.seconds)
        ));
    }
    out
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    ls_slope(&lx, &ly)
}
