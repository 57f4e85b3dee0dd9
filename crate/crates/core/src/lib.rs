//! Graph filters in one frame: every propagation rule is a linear,
//! polynomial or rational function of a normalized graph operator, applied
//! spatially by sparse products and checked against its spectral response.

pub mod analysis;
pub mod approx;
pub mod cli;
pub mod error;
pub mod features;
pub mod filter;
pub mod graph;
pub mod io;
pub mod operator;
pub mod spectral;

pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use filter::{make_preset, Family, FilterSpec, SolverMethod, SolverOptions};
pub use graph::{build_graph, Graph};
pub use operator::{Scheme, SparseOperator};
