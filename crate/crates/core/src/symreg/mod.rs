//! Genetic-programming symbolic regression over [`Expr`](crate::Expr) trees.

mod config;
pub mod constopt;
mod engine;
pub mod mutate;
mod pareto;

use thiserror::Error;

pub use config::{Link, MutationWeights, SRConfig};
pub use constopt::{link_mse, nelder_mead, optimize_constants};
pub use engine::{constant_fallback, fit, fit_observed, IterationStats};
pub use mutate::{crossover, mutate, MutationKind};
pub use pareto::{select_equation, Candidate, ParetoFront};

#[derive(Debug, Error, PartialEq)]
pub enum SrError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no data to fit")]
    EmptyData,
    #[error("column {column} has {found} rows, expected {expected}")]
    LengthMismatch {
        column: usize,
        expected: usize,
        found: usize,
    },
    #[error("target value at row {0} is not finite")]
    NonFiniteTarget(usize),
}
