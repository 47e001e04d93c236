pub mod cli;
pub mod corpus;
pub mod error;
pub mod graph_ops;
pub mod jost;
pub mod ode;
pub mod oracle;
pub mod potentials;
pub mod quadrature;
pub mod spectrum;
pub mod ssf;

pub use error::{Error, Result};
