use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::poly::Poly;

/// An adjoined square root: a symbol `s` with the single relation `s^2 = square`.
#[derive(Clone, Debug)]
pub struct AlgSymbol {
    name: Arc<str>,
    square: Arc<Poly>,
}

impl AlgSymbol {
    /// Fails when `square` itself involves an algebraic symbol (nested radicals are not supported).
    pub fn new(name: &str, square: Poly) -> Result<Self, super::ExprError> {
        if square.vars().iter().any(|s| matches!(s, Symbol::Alg(_))) {
            return Err(super::ExprError::NestedRadical(name.to_string()));
        }
        if square.is_zero() {
            return Err(super::ExprError::NestedRadical(format!(
                "{name} squares to zero"
            )));
        }
        Ok(AlgSymbol {
            name: Arc::from(name),
            square: Arc::new(square),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn square(&self) -> &Poly {
        &self.square
    }
}

impl PartialEq for AlgSymbol {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}
impl Eq for AlgSymbol {}
impl PartialOrd for AlgSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for AlgSymbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}
impl Hash for AlgSymbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}

/// Every indeterminate an expression can contain.
///
/// The derived ordering is the global variable order used by the monomial order:
/// state variables, then function jets, then time, then parameters, then radicals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Var(Arc<str>),
    Func(Arc<str>, u8),
    Time,
    Param(Arc<str>),
    Alg(AlgSymbol),
}

impl Symbol {
    pub fn var(name: &str) -> Self {
        Symbol::Var(Arc::from(name))
    }
    pub fn param(name: &str) -> Self {
        Symbol::Param(Arc::from(name))
    }
    pub fn func(base: &str, order: u8) -> Self {
        Symbol::Func(Arc::from(base), order)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Symbol::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Symbol::Var(n) | Symbol::Param(n) | Symbol::Func(n, _) => n,
            Symbol::Time => "t",
            Symbol::Alg(a) => a.name(),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Func(b, k) => {
                write!(f, "{b}")?;
                for _ in 0..*k {
                    write!(f, "'")?;
                }
                Ok(())
            }
            other => write!(f, "{}", other.name()),
        }
    }
}
