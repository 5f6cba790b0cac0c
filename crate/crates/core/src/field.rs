//! Rational vector fields in named charts.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::expr::solve::solve_linear;
use crate::expr::{total_derivative, Bindings, ConstraintSet, Expr, ExprError, Symbol};

/// `dx_i/dt = rhs_i` in the chart `chart`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub chart: String,
    pub vars: Vec<Symbol>,
    pub rhs: Vec<Expr>,
    /// Index of the boundary coordinate, when the chart has one.
    pub divisor: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldText {
    pub chart: String,
    pub vars: Vec<String>,
    pub rhs: Vec<String>,
    pub divisor: Option<String>,
}

impl VectorField {
    pub fn new(chart: &str, vars: Vec<Symbol>, rhs: Vec<Expr>) -> VectorField {
        assert_eq!(vars.len(), rhs.len(), "one right-hand side per variable");
        VectorField {
            chart: chart.to_string(),
            vars,
            rhs,
            divisor: None,
        }
    }

    pub fn with_divisor(mut self, i: usize) -> VectorField {
        self.divisor = Some(i);
        self
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn rates(&self) -> BTreeMap<Symbol, Expr> {
        self.vars
            .iter()
            .cloned()
            .zip(self.rhs.iter().cloned())
            .collect()
    }

    /// Total derivative of `e` along the field.
    pub fn derivative(
        &self,
        e: &Expr,
        constraints: Option<&ConstraintSet>,
    ) -> Result<Expr, ExprError> {
        total_derivative(e, &self.rates(), constraints)
    }

    /// Every right-hand side is polynomial in the chart variables.
    pub fn is_polynomial(&self) -> bool {
        self.rhs.iter().all(|e| e.is_polynomial_in(&self.vars))
    }

    pub fn reduce(&self, c: &ConstraintSet) -> Result<VectorField, ExprError> {
        let rhs = self
            .rhs
            .iter()
            .map(|e| c.reduce(e))
            .collect::<Result<_, _>>()?;
        Ok(VectorField {
            rhs,
            ..self.clone()
        })
    }

    /// The same field in coordinates `new = forward(old)`.
    ///
    /// `inverse` gives the old variables in terms of the new ones; when absent it is
    /// found by successive linear elimination.
    pub fn change_coordinates(
        &self,
        chart: &str,
        forward: &[Expr],
        new_vars: &[Symbol],
        inverse: Option<&[Expr]>,
        constraints: Option<&ConstraintSet>,
    ) -> Result<VectorField, ExprError> {
        if forward.len() != new_vars.len() {
            return Err(ExprError::Unsolvable(format!(
                "{} components for {} variables",
                forward.len(),
                new_vars.len()
            )));
        }
        // work with fresh names so old and new coordinates may share names
        let tmp: Vec<Symbol> = (0..new_vars.len())
            .map(|i| Symbol::var(&format!("_n{i}")))
            .collect();
        let inv: Bindings = match inverse {
            Some(inv) => {
                let to_tmp: Bindings = new_vars
                    .iter()
                    .cloned()
                    .zip(tmp.iter().map(|s| Expr::symbol(s.clone())))
                    .collect();
                self.vars
                    .iter()
                    .cloned()
                    .zip(inv.iter().map(|e| e.substitute(&to_tmp)))
                    .map(|(s, e)| e.map(|e| (s, e)))
                    .collect::<Result<_, _>>()?
            }
            None => invert(forward, &self.vars, &tmp)?,
        };
        let back: Bindings = tmp
            .iter()
            .cloned()
            .zip(new_vars.iter().map(|s| Expr::symbol(s.clone())))
            .collect();
        let mut rhs = Vec::with_capacity(forward.len());
        for f in forward {
            let d = self.derivative(f, constraints)?;
            let d = d.substitute(&inv)?.substitute(&back)?;
            rhs.push(match constraints {
                Some(c) => c.reduce(&d)?,
                None => d,
            });
        }
        Ok(VectorField {
            chart: chart.to_string(),
            vars: new_vars.to_vec(),
            rhs,
            divisor: None,
        })
    }

    pub fn to_text(&self) -> FieldText {
        FieldText {
            chart: self.chart.clone(),
            vars: self.vars.iter().map(|s| s.to_string()).collect(),
            rhs: self.rhs.iter().map(|e| e.to_text()).collect(),
            divisor: self.divisor.map(|i| self.vars[i].to_string()),
        }
    }
}

/// Solves `new_i = forward_i(old)` for the old variables; returns `old -> expr(new)`.
pub fn invert(forward: &[Expr], old: &[Symbol], new: &[Symbol]) -> Result<Bindings, ExprError> {
    let eqs: Vec<Expr> = forward
        .iter()
        .zip(new)
        .map(|(f, n)| Expr::symbol(n.clone()).sub(f))
        .collect();
    let sol = solve_linear(&eqs, old)?;
    for (f, n) in forward.iter().zip(new) {
        let back = f.substitute(&sol)?;
        if back != Expr::symbol(n.clone()) {
            return Err(ExprError::Unsolvable(format!(
                "inverse does not reproduce {n}"
            )));
        }
    }
    Ok(sol)
}
