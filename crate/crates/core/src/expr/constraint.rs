//! Differential constraints on function symbols and their closure under `d/dt`.

use std::collections::BTreeMap;
use std::sync::Mutex;

use super::rational::{Bindings, Expr};
use super::symbol::Symbol;
use super::ExprError;

/// `base^(order) = rhs`, where `rhs` involves only lower derivatives of `base`.
/// Order zero eliminates the function outright (`g = (r''r - r'^2)/r^2`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintRule {
    pub base: String,
    pub order: u8,
    pub rhs: Expr,
}

impl ConstraintRule {
    pub fn new(base: &str, order: u8, rhs: Expr) -> Result<ConstraintRule, ExprError> {
        for s in rhs.symbols() {
            match &s {
                Symbol::Func(b, k) if **b == *base && *k >= order => {
                    return Err(ExprError::InvalidConstraint(format!(
                        "{base}: right side contains {s}"
                    )));
                }
                Symbol::Var(_) => {
                    return Err(ExprError::InvalidConstraint(format!(
                        "{base}: right side contains state variable {s}"
                    )));
                }
                _ => {}
            }
        }
        Ok(ConstraintRule {
            base: base.to_string(),
            order,
            rhs,
        })
    }
}

/// A set of rules, at most one per base, with cached higher-order consequences.
#[derive(Debug, Default)]
pub struct ConstraintSet {
    rules: BTreeMap<String, ConstraintRule>,
    closure: Mutex<BTreeMap<(String, u8), Expr>>,
}

impl Clone for ConstraintSet {
    fn clone(&self) -> Self {
        let c = self.closure.lock().expect("closure cache").clone();
        ConstraintSet {
            rules: self.rules.clone(),
            closure: Mutex::new(c),
        }
    }
}

impl ConstraintSet {
    pub fn new(rules: Vec<ConstraintRule>) -> Result<ConstraintSet, ExprError> {
        let mut map = BTreeMap::new();
        for r in rules {
            if map.contains_key(&r.base) {
                return Err(ExprError::InvalidConstraint(format!(
                    "two rules for {}",
                    r.base
                )));
            }
            map.insert(r.base.clone(), r);
        }
        // rhs of one rule may not reach the constrained order of another
        for r in map.values() {
            for s in r.rhs.symbols() {
                if let Symbol::Func(b, k) = &s {
                    if let Some(o) = map.get(&**b) {
                        if *k >= o.order {
                            return Err(ExprError::InvalidConstraint(format!(
                                "{}: right side contains {s}, constrained at order {}",
                                r.base, o.order
                            )));
                        }
                    }
                }
            }
        }
        Ok(ConstraintSet {
            rules: map,
            closure: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = &ConstraintRule> {
        self.rules.values()
    }

    pub fn rule(&self, base: &str) -> Option<&ConstraintRule> {
        self.rules.get(base)
    }

    /// Replaces every constrained symbol at exactly its constrained order.
    fn reduce_level0(&self, e: &Expr) -> Result<Expr, ExprError> {
        let mut b = Bindings::new();
        for s in e.symbols() {
            if let Symbol::Func(base, k) = &s {
                if let Some(r) = self.rules.get(&**base) {
                    if *k == r.order {
                        b.insert(s.clone(), r.rhs.clone());
                    } else if *k > r.order {
                        return Err(ExprError::InvalidConstraint(format!(
                            "{s} above closure level"
                        )));
                    }
                }
            }
        }
        e.substitute(&b)
    }

    /// `base^(k)` expressed through derivatives below the constrained order.
    pub fn closure_rule(&self, base: &str, k: u8) -> Result<Option<Expr>, ExprError> {
        let Some(r) = self.rules.get(base) else {
            return Ok(None);
        };
        if k < r.order {
            return Ok(None);
        }
        if k == r.order {
            return Ok(Some(r.rhs.clone()));
        }
        if let Some(e) = self
            .closure
            .lock()
            .expect("closure cache")
            .get(&(base.to_string(), k))
        {
            return Ok(Some(e.clone()));
        }
        let prev = self
            .closure_rule(base, k - 1)?
            .expect("order at or above rule");
        let d = prev.derivation(&jet_rate)?;
        let next = self.reduce_level0(&d)?;
        self.closure
            .lock()
            .expect("closure cache")
            .insert((base.to_string(), k), next.clone());
        Ok(Some(next))
    }

    /// Rewrites all constrained derivatives into the free jet coordinates.
    pub fn reduce(&self, e: &Expr) -> Result<Expr, ExprError> {
        if self.rules.is_empty() {
            return Ok(e.clone());
        }
        let mut b = Bindings::new();
        for s in e.symbols() {
            if let Symbol::Func(base, k) = &s {
                if let Some(v) = self.closure_rule(base, *k)? {
                    b.insert(s.clone(), v);
                }
            }
        }
        e.substitute(&b)
    }

    /// True when `e` has no constrained derivative at or above its order.
    pub fn is_reduced(&self, e: &Expr) -> bool {
        e.symbols().iter().all(|s| match s {
            Symbol::Func(b, k) => self.rules.get(&**b).map(|r| *k < r.order).unwrap_or(true),
            _ => true,
        })
    }
}

/// Time rates of parameters, functions and `t` alone.
fn jet_rate(s: &Symbol) -> Option<Expr> {
    match s {
        Symbol::Func(b, k) => Some(Expr::func(b, k + 1)),
        Symbol::Time => Some(Expr::one()),
        _ => None,
    }
}

/// Total time derivative along a vector field, reduced by the constraints.
///
/// `rates` maps each state variable to its rate; a state variable without a rate is an error.
pub fn total_derivative(
    e: &Expr,
    rates: &BTreeMap<Symbol, Expr>,
    constraints: Option<&ConstraintSet>,
) -> Result<Expr, ExprError> {
    let d = e.try_derivation(&|s: &Symbol| match s {
        Symbol::Var(n) => rates
            .get(s)
            .cloned()
            .map(Some)
            .ok_or_else(|| ExprError::UnknownStateVariable(n.to_string())),
        other => Ok(jet_rate(other)),
    })?;
    match constraints {
        Some(c) => c.reduce(&d),
        None => Ok(d),
    }
}
