//! Walk-sampling equivalences, over-smoothing profiles and timing.

pub mod bench;
pub mod smoothing;
pub mod walks;

pub use bench::{bench_filter, bench_to_csv, loglog_slope, BenchRow};
pub use smoothing::{dirichlet_energy, oversmoothing_profile, pairwise_spread, Propagation, SmoothingProfile};
pub use walks::{deepwalk_operator, monte_carlo_walk_check, node2vec_operator, WalkCheck, WalkConfig};
