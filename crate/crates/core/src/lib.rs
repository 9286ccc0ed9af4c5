//! Hierarchical latent extraction plus per-level symbolic regression for
//! thin-layer chromatography retardation factors.

pub mod expr;

pub use expr::{BinaryOp, Expr, ParseError, UnaryOp, VarTable};
pub mod dataset;
pub mod eqsystem;
pub mod hiernet;
pub mod neural;
pub mod symreg;
pub mod synth;
