pub mod admm;
pub mod bench;
pub mod cli;
pub mod colormap;
pub mod error;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod signal;
pub mod synth;
pub mod tvprox;

pub use admm::{admm_solve, SolverConfig, SolverReport, StopReason};
pub use error::{Error, Result};
pub use graph::{Graph, GraphKind};
pub use signal::{MetricsRecord, Signal};
