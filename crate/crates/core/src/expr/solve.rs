//! Exact solving: linear elimination, square roots, rational roots of univariate polynomials.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::gcd::{gcd, gcd_many};
use super::poly::Poly;
use super::rational::{rational, Bindings, Expr};
use super::symbol::Symbol;
use super::ExprError;

/// Solves `eqs = 0` for `unknowns`, where each elimination step finds an equation of
/// degree one in some remaining unknown.
pub fn solve_linear(eqs: &[Expr], unknowns: &[Symbol]) -> Result<Bindings, ExprError> {
    let mut eqs: Vec<Expr> = eqs.iter().filter(|e| !e.is_zero()).cloned().collect();
    let mut left: Vec<Symbol> = unknowns.to_vec();
    let mut sol = Bindings::new();
    while !left.is_empty() {
        // (cost, equation, unknown, solution)
        let mut best: Option<(usize, usize, usize, Expr)> = None;
        for (i, e) in eqs.iter().enumerate() {
            for (j, u) in left.iter().enumerate() {
                let Some(cs) = Expr::from_poly(e.numer().clone()).poly_coefficients(u) else {
                    continue;
                };
                if cs.len() != 2 || cs[1].is_zero() {
                    continue;
                }
                let cost = cs[1].numer().nterms()
                    + cs[1].denom().nterms()
                    + if cs[1].is_constant() { 0 } else { 100 };
                if best.as_ref().map(|b| cost < b.0).unwrap_or(true) {
                    let v = cs[0].neg().div(&cs[1])?;
                    best = Some((cost, i, j, v));
                }
            }
        }
        let Some((_, i, j, v)) = best else {
            let names: Vec<String> = left.iter().map(|s| s.to_string()).collect();
            return Err(ExprError::Unsolvable(format!(
                "no linear equation for {}",
                names.join(", ")
            )));
        };
        let u = left.remove(j);
        eqs.remove(i);
        let mut b = Bindings::new();
        b.insert(u.clone(), v.clone());
        for e in eqs.iter_mut() {
            *e = e.substitute(&b)?;
        }
        eqs.retain(|e| !e.is_zero());
        for w in sol.values_mut() {
            *w = w.substitute(&b)?;
        }
        sol.insert(u, v);
    }
    Ok(sol)
}

/// Exact square root of a polynomial with integer coefficients, if one exists.
pub fn poly_sqrt(p: &Poly) -> Option<Poly> {
    if p.is_zero() {
        return Some(Poly::zero());
    }
    let lc = p.lc();
    if lc.is_negative() {
        return None;
    }
    let r0 = lc.sqrt();
    if &r0 * &r0 != lc {
        return None;
    }
    let e0 = p.term_exps(0);
    if e0.iter().any(|e| e % 2 == 1) {
        return None;
    }
    let mut root = Poly::monomial_in(p.vars_arc(), e0.iter().map(|e| e / 2).collect(), r0);
    let lead2 = root.scale(&BigInt::from(2));
    let mut last = root.clone();
    loop {
        let rem = p.sub(&root.mul(&root));
        if rem.is_zero() {
            return Some(root.prune());
        }
        let (rem, l2) = Poly::unify(&rem, &lead2);
        let lt = Poly::monomial_in(
            rem.vars_arc(),
            rem.term_exps(0).to_vec(),
            rem.term_coeff(0).clone(),
        );
        let t = lt.div_exact(&l2)?;
        let (t_u, last_u) = Poly::unify(&t, &last);
        if super::poly::cmp_mono(t_u.term_exps(0), last_u.term_exps(0)) != std::cmp::Ordering::Less
        {
            return None;
        }
        root = root.add(&t);
        last = t;
    }
}

/// Exact square root of an expression (numerator and denominator separately).
pub fn expr_sqrt(e: &Expr) -> Option<Expr> {
    let n = poly_sqrt(e.numer())?;
    let d = poly_sqrt(e.denom())?;
    Expr::from_parts(n, d).ok()
}

/// Roots of `e = 0` in `x` over the field generated by the remaining symbols, with
/// multiplicities. Fails with `NonRationalRoot` when a factor does not split.
pub fn roots_in(e: &Expr, x: &Symbol) -> Result<Vec<(Expr, u32)>, ExprError> {
    let f = e.numer().clone();
    if f.is_zero() {
        return Err(ExprError::Unsolvable("identically zero".into()));
    }
    let Some(xi) = f.var_index(x) else {
        return Ok(Vec::new());
    };
    let mut out: Vec<(Expr, u32)> = Vec::new();
    let m = f.min_degree_at(xi);
    if m > 0 {
        out.push((Expr::zero(), m));
    }
    let mut exps = vec![0u32; f.vars().len()];
    exps[xi] = m;
    let f = f.div_monomial(&exps);
    let cont = gcd_many(f.coefficients_in(x).iter());
    let f = f.div_exact(&cont).expect("content divides");
    for (factor, mult) in squarefree(&f, x) {
        for r in split_factor(&factor, x)? {
            match out.iter_mut().find(|(v, _)| *v == r) {
                Some(slot) => slot.1 += mult,
                None => out.push((r, mult)),
            }
        }
    }
    Ok(out)
}

/// Yun's algorithm; factors of degree zero in `x` are dropped.
fn squarefree(f: &Poly, x: &Symbol) -> Vec<(Poly, u32)> {
    let mut out = Vec::new();
    if f.degree(x) == 0 {
        return out;
    }
    let df = f.deriv(x);
    let a0 = gcd(f, &df);
    let mut b = f.div_exact(&a0).expect("gcd divides");
    let c = df.div_exact(&a0).expect("gcd divides");
    let mut d = c.sub(&b.deriv(x));
    let mut i = 1;
    while b.degree(x) > 0 {
        let a = gcd(&b, &d);
        let nb = b.div_exact(&a).expect("gcd divides");
        let c = d.div_exact(&a).expect("gcd divides");
        d = c.sub(&nb.deriv(x));
        if a.degree(x) > 0 {
            out.push((a, i));
        }
        b = nb;
        i += 1;
    }
    out
}

fn split_factor(f: &Poly, x: &Symbol) -> Result<Vec<Expr>, ExprError> {
    let cs: Vec<Expr> = f
        .coefficients_in(x)
        .into_iter()
        .map(Expr::from_poly)
        .collect();
    match cs.len() {
        2 => Ok(vec![cs[0].neg().div(&cs[1])?]),
        3 => {
            let disc = cs[1].mul(&cs[1]).sub(&cs[0].mul(&cs[2]).scale(4));
            let s = expr_sqrt(&disc)
                .ok_or_else(|| ExprError::NonRationalRoot(Expr::from_poly(f.clone()).to_text()))?;
            let two_a = cs[2].scale(2);
            let mb = cs[1].neg();
            Ok(vec![mb.add(&s).div(&two_a)?, mb.sub(&s).div(&two_a)?])
        }
        _ => {
            if cs.iter().all(|c| c.is_constant()) {
                let ints: Vec<BigInt> = f
                    .coefficients_in(x)
                    .iter()
                    .map(|c| c.constant_value().unwrap())
                    .collect();
                numeric_roots(ints, f, x)
            } else {
                Err(ExprError::NonRationalRoot(
                    Expr::from_poly(f.clone()).to_text(),
                ))
            }
        }
    }
}

/// Rational root theorem, then the quadratic formula for what is left.
fn numeric_roots(c: Vec<BigInt>, f: &Poly, x: &Symbol) -> Result<Vec<Expr>, ExprError> {
    let c0 = c[0].abs();
    let cn = c.last().unwrap().abs();
    if c0.is_zero() {
        return Err(ExprError::NonRationalRoot(
            "zero constant term after stripping".into(),
        ));
    }
    let divisors = |n: &BigInt| -> Vec<BigInt> {
        let mut v = Vec::new();
        let mut k = BigInt::one();
        while &k * &k <= *n {
            if (n % &k).is_zero() {
                v.push(k.clone());
                v.push(n / &k);
            }
            k += 1;
        }
        v
    };
    let mut rest = f.clone();
    let mut roots = Vec::new();
    for p in divisors(&c0) {
        for q in divisors(&cn) {
            if !p.gcd(&q).is_one() {
                continue;
            }
            for sp in [p.clone(), -p.clone()] {
                let r = rational(&sp, &q);
                let lin = Expr::symbol(x.clone())
                    .mul(&Expr::big(q.clone()))
                    .sub(&Expr::big(sp.clone()));
                while let Some(d) = rest.div_exact(lin.numer()) {
                    if !roots.contains(&r) {
                        roots.push(r.clone());
                    }
                    rest = d;
                }
            }
        }
    }
    if rest.degree(x) > 0 {
        roots.extend(split_factor(&rest, x)?);
    }
    Ok(roots)
}
