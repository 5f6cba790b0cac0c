//! Multivariate polynomial gcd over the integers (recursive subresultant PRS).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::poly::Poly;

/// Greatest common divisor with positive leading coefficient.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return normalize_sign(b.clone());
    }
    if b.is_zero() {
        return normalize_sign(a.clone());
    }
    let (a, b) = Poly::unify(a, b);
    normalize_sign(gcd_same(&a, &b)).prune()
}

/// Gcd of a list of polynomials.
pub fn gcd_many<'a>(items: impl IntoIterator<Item = &'a Poly>) -> Poly {
    let mut g = Poly::zero();
    for p in items {
        g = gcd(&g, p);
        if g.is_one() {
            break;
        }
    }
    g
}

fn normalize_sign(p: Poly) -> Poly {
    if p.lc_is_negative() {
        p.neg()
    } else {
        p
    }
}

fn mono(p: &Poly, exps: Vec<u32>, c: BigInt) -> Poly {
    Poly::monomial_in(p.vars_arc(), exps, c)
}

/// Both arguments share a variable list and are nonzero.
fn gcd_same(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let n = a.vars().len();
    let ca = a.content();
    let cb = b.content();
    let cg = ca.gcd(&cb);
    if a.is_constant() || b.is_constant() {
        return mono(a, vec![0; n], cg);
    }
    let ma = a.min_exps();
    let mb = b.min_exps();
    let mg: Vec<u32> = ma.iter().zip(&mb).map(|(x, y)| *x.min(y)).collect();
    let a = a.div_monomial(&ma).div_scalar(&ca);
    let b = b.div_monomial(&mb).div_scalar(&cb);
    let unit = mono(&a, mg, cg);
    if a.is_constant() || b.is_constant() {
        return unit;
    }
    if a == b {
        return a.mul(&unit);
    }
    if a.nterms() == 1 || b.nterms() == 1 {
        // a monomial over a polynomial with no monomial content
        return unit;
    }
    let da: Vec<u32> = (0..n).map(|i| a.degree_at(i)).collect();
    let db: Vec<u32> = (0..n).map(|i| b.degree_at(i)).collect();
    // a variable present in only one argument: the gcd divides every coefficient in that variable
    for i in 0..n {
        let (only, other) = if da[i] > 0 && db[i] == 0 {
            (&a, &b)
        } else if db[i] > 0 && da[i] == 0 {
            (&b, &a)
        } else {
            continue;
        };
        let mut g = (*other).clone();
        let mut parts = only.split_at(i);
        parts.sort_by_key(|p| p.nterms());
        for c in parts.iter().filter(|c| !c.is_zero()) {
            g = normalize_sign(gcd_same(&g, c));
            if g.is_constant() {
                break;
            }
        }
        return g.mul(&unit);
    }
    // main variable: smallest maximum degree
    let v = (0..n)
        .filter(|&i| da[i] > 0)
        .min_by_key(|&i| (da[i].max(db[i]), da[i] + db[i]))
        .expect("nonconstant polynomials share a variable");
    if let Some(g) = quick_coprime(&a, &b, v) {
        return g.mul(&unit);
    }
    let pa = a.split_at(v);
    let pb = b.split_at(v);
    let conta = content_of(&pa);
    let contb = content_of(&pb);
    let contg = normalize_sign(gcd_same(&conta, &contb));
    let a = a.div_exact(&conta).expect("content divides");
    let b = b.div_exact(&contb).expect("content divides");
    let g = subresultant(&a, &b, v);
    let g = if g.degree_at(v) == 0 {
        Poly::one()
    } else {
        let parts = g.split_at(v);
        let c = content_of(&parts);
        let g = g.div_exact(&c).expect("content divides");
        normalize_sign(g)
    };
    g.mul(&contg).mul(&unit)
}

fn content_of(parts: &[Poly]) -> Poly {
    let mut sorted: Vec<&Poly> = parts.iter().filter(|p| !p.is_zero()).collect();
    sorted.sort_by_key(|p| p.nterms());
    let mut g = Poly::zero();
    for (k, p) in sorted.iter().enumerate() {
        g = if g.is_zero() {
            normalize_sign((*p).clone())
        } else {
            normalize_sign(gcd_same(&g, p))
        };
        if g.is_constant() {
            // only the integer content of the rest matters now
            let c = sorted[k + 1..]
                .iter()
                .fold(g.constant_value().unwrap().abs(), |c, q| {
                    c.gcd(&q.content())
                });
            return Poly::monomial_in(parts[0].vars_arc(), vec![0; parts[0].vars().len()], c);
        }
    }
    g
}

/// Sound coprimality shortcut: evaluate every variable but `v` at pseudo-random integers;
/// if the univariate images have a constant gcd while the leading coefficients survive,
/// the gcd has degree 0 in `v` and equals the gcd of the contents.
fn quick_coprime(a: &Poly, b: &Poly, v: usize) -> Option<Poly> {
    let n = a.vars().len();
    let points: Vec<BigInt> = (0..n)
        .map(|i| BigInt::from(((i * 7919 + 104729) % 89) as i64 + 11))
        .collect();
    let ua = eval_except(a, v, &points);
    let ub = eval_except(b, v, &points);
    let lca = a.split_at(v).pop().unwrap();
    let lcb = b.split_at(v).pop().unwrap();
    if eval_all(&lca, &points).is_zero() || eval_all(&lcb, &points).is_zero() {
        return None;
    }
    if ua.len() < 2 || ub.len() < 2 {
        return None;
    }
    if univariate_gcd_degree(ua, ub) == Some(0) {
        let conta = content_of(&a.split_at(v));
        let contb = content_of(&b.split_at(v));
        Some(normalize_sign(gcd_same(&conta, &contb)))
    } else {
        None
    }
}

fn eval_all(p: &Poly, points: &[BigInt]) -> BigInt {
    let mut s = BigInt::zero();
    for (e, c) in p.terms() {
        let mut t = c.clone();
        for (k, &ek) in e.iter().enumerate() {
            if ek > 0 {
                t *= num_traits::pow(points[k].clone(), ek as usize);
            }
        }
        s += t;
    }
    s
}

fn eval_except(p: &Poly, v: usize, points: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); p.degree_at(v) as usize + 1];
    for (e, c) in p.terms() {
        let mut t = c.clone();
        for (k, &ek) in e.iter().enumerate() {
            if k != v && ek > 0 {
                t *= num_traits::pow(points[k].clone(), ek as usize);
            }
        }
        out[e[v] as usize] += t;
    }
    out
}

/// Degree of the gcd of two integer univariate polynomials (coefficients by ascending degree),
/// computed modulo a large prime; `None` when a leading coefficient vanishes modulo the prime.
fn univariate_gcd_degree(a: Vec<BigInt>, b: Vec<BigInt>) -> Option<usize> {
    const P: i64 = 2_147_483_647;
    let p = BigInt::from(P);
    let red = |v: Vec<BigInt>| -> Vec<i64> {
        let mut r: Vec<i64> = v
            .iter()
            .map(|c| i64::try_from(c.mod_floor(&p)).unwrap())
            .collect();
        while r.last() == Some(&0) {
            r.pop();
        }
        r
    };
    let (la, lb) = (a.len(), b.len());
    let mut x = red(a);
    let mut y = red(b);
    if x.len() != la || y.len() != lb {
        return None;
    }
    let inv = |a: i64| -> i64 {
        let (mut t, mut nt, mut r, mut nr) = (0i128, 1i128, P as i128, a as i128);
        while nr != 0 {
            let q = r / nr;
            (t, nt) = (nt, t - q * nt);
            (r, nr) = (nr, r - q * nr);
        }
        (t.rem_euclid(P as i128)) as i64
    };
    while !y.is_empty() {
        // x <- x mod y
        let ly = *y.last().unwrap();
        let il = inv(ly);
        while x.len() >= y.len() && !x.is_empty() {
            let f = ((*x.last().unwrap() as i128 * il as i128) % P as i128) as i64;
            let shift = x.len() - y.len();
            for (k, &c) in y.iter().enumerate() {
                let idx = k + shift;
                x[idx] = ((x[idx] as i128 - f as i128 * c as i128).rem_euclid(P as i128)) as i64;
            }
            while x.last() == Some(&0) {
                x.pop();
            }
        }
        std::mem::swap(&mut x, &mut y);
    }
    Some(x.len().saturating_sub(1))
}

/// Last nonzero subresultant of two primitive polynomials in the variable at `v`.
fn subresultant(a: &Poly, b: &Poly, v: usize) -> Poly {
    let (mut a, mut b) = if a.degree_at(v) >= b.degree_at(v) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    let mut g = Poly::one();
    let mut h = Poly::one();
    loop {
        let delta = a.degree_at(v) - b.degree_at(v);
        let r = prem(&a, &b, v);
        if r.is_zero() {
            return b;
        }
        if r.degree_at(v) == 0 {
            return Poly::one();
        }
        let divisor = g.mul(&h.pow(delta));
        a = b;
        b = r
            .div_exact(&divisor)
            .expect("subresultant division is exact");
        g = lead_in(&a, v);
        h = if delta == 0 {
            h
        } else {
            let num = g.pow(delta);
            let den = h.pow(delta - 1);
            num.div_exact(&den).expect("subresultant h update is exact")
        };
    }
}

fn lead_in(p: &Poly, v: usize) -> Poly {
    p.split_at(v).pop().unwrap()
}

/// Pseudo-remainder of `a` by `b` in the variable at `v`.
pub(crate) fn prem(a: &Poly, b: &Poly, v: usize) -> Poly {
    let db = b.degree_at(v);
    let lb = lead_in(b, v);
    let mut r = a.clone();
    let mut e = a.degree_at(v) as i64 - db as i64 + 1;
    while !r.is_zero() && r.degree_at(v) >= db {
        let dr = r.degree_at(v);
        let lr = lead_in(&r, v);
        r = r.mul(&lb).sub(&b.mul(&lr).shift_at(v, dr - db));
        e -= 1;
    }
    if e > 0 {
        r = r.mul(&lb.pow(e as u32));
    }
    r
}

#[allow(dead_code)]
fn is_unit(p: &Poly) -> bool {
    p.constant_value()
        .map(|c| c.abs().is_one())
        .unwrap_or(false)
}
