//! Exact differential-rational expression kernel.

mod constraint;
mod display;
mod gcd;
pub mod numeric;
mod parse;
mod poly;
mod rational;
pub mod solve;
mod symbol;

pub use constraint::{total_derivative, ConstraintRule, ConstraintSet};
pub use gcd::{gcd, gcd_many};
pub use parse::{parse, parse_symbol, Scope};
pub use poly::Poly;
pub use rational::{rational, Bindings, Expr};
pub use symbol::{AlgSymbol, Symbol};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("division by the zero polynomial")]
    DivisionByZeroPolynomial,
    #[error("nested radical: {0}")]
    NestedRadical(String),
    #[error("radical {0} changes under substitution but is not bound")]
    UnboundAlgebraic(String),
    #[error("no derivative binding for {0}")]
    MissingDerivativeBinding(String),
    #[error("unknown state variable {0}")]
    UnknownStateVariable(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("undeclared symbol {0}")]
    UndeclaredSymbol(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("root not rational over the coefficient field: {0}")]
    NonRationalRoot(String),
    #[error("cannot solve: {0}")]
    Unsolvable(String),
}
