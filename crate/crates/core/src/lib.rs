pub mod benefit;
pub mod cli;
pub mod error;
pub mod hv_grad;
pub mod io;
pub mod kdtree;
pub mod nn;
pub mod pareto;
pub mod problems;
pub mod simplex;
pub mod solvers;
pub mod voronoi;

pub use error::{Error, Result};
