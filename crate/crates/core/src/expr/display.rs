use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::poly::Poly;
use super::rational::Expr;
use super::symbol::Symbol;

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Style {
    Machine,
    Human,
}

impl Style {
    fn times(self) -> &'static str {
        match self {
            Style::Machine => "*",
            Style::Human => " ",
        }
    }
}

/// Factors of a monomial; parameters are written first (`C1 t`, `a x^2`).
fn monomial(p: &Poly, exps: &[u32]) -> Vec<String> {
    let mut f: Vec<(&Symbol, u32)> = p
        .vars()
        .iter()
        .zip(exps.iter().copied())
        .filter(|(_, e)| *e > 0)
        .collect();
    f.sort_by_key(|(s, _)| !matches!(s, Symbol::Param(_)));
    f.into_iter()
        .map(|(s, e)| {
            if e == 1 {
                s.to_string()
            } else {
                format!("{s}^{e}")
            }
        })
        .collect()
}

fn term(p: &Poly, i: usize, style: Style, first: bool) -> String {
    let c = p.term_coeff(i);
    let factors = monomial(p, p.term_exps(i));
    let neg = c.is_negative();
    let a: BigInt = c.abs();
    let body = if factors.is_empty() {
        a.to_string()
    } else if a.is_one() {
        factors.join(style.times())
    } else {
        format!("{}{}{}", a, style.times(), factors.join(style.times()))
    };
    match (first, neg) {
        (true, false) => body,
        (true, true) => format!("-{body}"),
        (false, false) => format!(" + {body}"),
        (false, true) => format!(" - {body}"),
    }
}

pub(crate) fn render_poly(p: &Poly, style: Style) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    (0..p.nterms()).map(|i| term(p, i, style, i == 0)).collect()
}

fn needs_parens(p: &Poly) -> bool {
    p.nterms() > 1
}

pub(crate) fn render(e: &Expr, style: Style) -> String {
    let n = render_poly(e.numer(), style);
    if e.denom().is_one() {
        return n;
    }
    let d = e.denom();
    let n = if needs_parens(e.numer()) {
        format!("({n})")
    } else {
        n
    };
    let ds = render_poly(d, style);
    let simple_den = d.nterms() == 1
        && (d.is_constant()
            || (d.term_coeff(0).is_one()
                && d.term_exps(0).iter().filter(|&&x| x > 0).count() == 1));
    if simple_den {
        format!("{n}/{ds}")
    } else {
        format!("{n}/({ds})")
    }
}
