//! Discovery of graph-based quantum error-correcting codes through annealed
//! best-response games between competing objectives.
//!
//! The pipeline: a [`graph::Graph`] with input and output vertices defines a
//! code ([`code::GraphCode`]); [`objectives`] score codes; [`game`] runs
//! players that edit the graph until no one can improve unilaterally;
//! [`circuits`] emits preparation and syndrome circuits and [`noise`]
//! benchmarks logical error rates. [`runner`] ties these together for the
//! command-line tool.

pub mod circuits;
pub mod code;
mod connectivity;
pub mod error;
pub mod f2;
pub mod game;
pub mod graph;
pub mod noise;
pub mod objectives;
pub mod pauli;
pub mod phases;
pub mod runner;

pub use code::{Backend, Certainty, CodeParams, GraphCode};
pub use error::{Error, Result};
pub use graph::{Graph, GraphAction, GraphMetrics, Scope};
pub use pauli::PauliVec;
