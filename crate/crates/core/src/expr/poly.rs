use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::symbol::Symbol;

/// Graded lexicographic comparison of two exponent vectors over the same variable list.
pub(crate) fn cmp_mono(a: &[u32], b: &[u32]) -> Ordering {
    let da: u64 = a.iter().map(|&e| e as u64).sum();
    let db: u64 = b.iter().map(|&e| e as u64).sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

/// Sparse multivariate polynomial with big-integer coefficients.
///
/// Terms are kept sorted in decreasing graded lexicographic order and all
/// coefficients are nonzero. `vars` is strictly increasing in the global
/// symbol order; it may contain variables that do not occur (see [`Poly::prune`]).
#[derive(Clone, Debug)]
pub struct Poly {
    vars: Arc<[Symbol]>,
    exps: Vec<u32>,
    coeffs: Vec<BigInt>,
}

fn empty_vars() -> Arc<[Symbol]> {
    Arc::from(Vec::<Symbol>::new())
}

impl Poly {
    pub fn zero() -> Poly {
        Poly {
            vars: empty_vars(),
            exps: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            vars: empty_vars(),
            exps: Vec::new(),
            coeffs: vec![c],
        }
    }

    pub fn from_i64(c: i64) -> Poly {
        Poly::constant(BigInt::from(c))
    }

    pub fn one() -> Poly {
        Poly::from_i64(1)
    }

    pub fn symbol(s: Symbol) -> Poly {
        Poly {
            vars: Arc::from(vec![s]),
            exps: vec![1],
            coeffs: vec![BigInt::one()],
        }
    }

    pub(crate) fn zero_in(vars: &Arc<[Symbol]>) -> Poly {
        Poly {
            vars: vars.clone(),
            exps: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    pub(crate) fn monomial_in(vars: &Arc<[Symbol]>, exps: Vec<u32>, c: BigInt) -> Poly {
        debug_assert_eq!(exps.len(), vars.len());
        if c.is_zero() {
            return Poly::zero_in(vars);
        }
        Poly {
            vars: vars.clone(),
            exps,
            coeffs: vec![c],
        }
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    pub(crate) fn vars_arc(&self) -> &Arc<[Symbol]> {
        &self.vars
    }

    pub fn nterms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty() || (self.coeffs.len() == 1 && self.exps.iter().all(|&e| e == 0))
    }

    pub fn constant_value(&self) -> Option<BigInt> {
        if self.is_zero() {
            Some(BigInt::zero())
        } else if self.is_constant() {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn is_one(&self) -> bool {
        self.is_constant() && !self.is_zero() && self.coeffs[0].is_one()
    }

    pub fn is_monomial(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn term_exps(&self, i: usize) -> &[u32] {
        let n = self.vars.len();
        &self.exps[i * n..(i + 1) * n]
    }

    pub fn term_coeff(&self, i: usize) -> &BigInt {
        &self.coeffs[i]
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigInt)> + '_ {
        (0..self.nterms()).map(move |i| (self.term_exps(i), &self.coeffs[i]))
    }

    /// Leading coefficient in the graded lexicographic order (zero for the zero polynomial).
    pub fn lc(&self) -> BigInt {
        self.coeffs.first().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn var_index(&self, s: &Symbol) -> Option<usize> {
        self.vars.binary_search(s).ok()
    }

    pub fn degree_at(&self, idx: usize) -> u32 {
        let n = self.vars.len();
        (0..self.nterms())
            .map(|i| self.exps[i * n + idx])
            .max()
            .unwrap_or(0)
    }

    pub fn min_degree_at(&self, idx: usize) -> u32 {
        let n = self.vars.len();
        (0..self.nterms())
            .map(|i| self.exps[i * n + idx])
            .min()
            .unwrap_or(0)
    }

    pub fn degree(&self, s: &Symbol) -> u32 {
        self.var_index(s).map(|i| self.degree_at(i)).unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        (0..self.nterms())
            .map(|i| self.term_exps(i).iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.degree(s) > 0
    }

    /// Symbols that actually occur with positive degree.
    pub fn symbols(&self) -> Vec<Symbol> {
        (0..self.vars.len())
            .filter(|&i| self.degree_at(i) > 0)
            .map(|i| self.vars[i].clone())
            .collect()
    }

    /// Builds a polynomial from unsorted terms; equal monomials are combined and zeros dropped.
    pub(crate) fn from_terms(vars: &Arc<[Symbol]>, exps: Vec<u32>, coeffs: Vec<BigInt>) -> Poly {
        let n = vars.len();
        let m = coeffs.len();
        if m <= 1 {
            if m == 1 && coeffs[0].is_zero() {
                return Poly::zero_in(vars);
            }
            return Poly {
                vars: vars.clone(),
                exps,
                coeffs,
            };
        }
        let mut idx: Vec<usize> = (0..m).collect();
        if n == 0 {
            let total: BigInt = coeffs.into_iter().sum();
            return Poly::monomial_in(vars, Vec::new(), total);
        }
        idx.sort_unstable_by(|&p, &q| {
            cmp_mono(&exps[q * n..(q + 1) * n], &exps[p * n..(p + 1) * n])
        });
        let mut out_e: Vec<u32> = Vec::with_capacity(exps.len());
        let mut out_c: Vec<BigInt> = Vec::with_capacity(m);
        let mut coeffs: Vec<Option<BigInt>> = coeffs.into_iter().map(Some).collect();
        let mut k = 0;
        while k < m {
            let p = idx[k];
            let mut c = coeffs[p].take().unwrap();
            let mut j = k + 1;
            while j < m && exps[idx[j] * n..(idx[j] + 1) * n] == exps[p * n..(p + 1) * n] {
                c += coeffs[idx[j]].take().unwrap();
                j += 1;
            }
            if !c.is_zero() {
                out_e.extend_from_slice(&exps[p * n..(p + 1) * n]);
                out_c.push(c);
            }
            k = j;
        }
        Poly {
            vars: vars.clone(),
            exps: out_e,
            coeffs: out_c,
        }
    }

    /// Re-expresses the polynomial over a superset of its variables.
    pub(crate) fn with_vars(&self, vars: &Arc<[Symbol]>) -> Poly {
        if Arc::ptr_eq(&self.vars, vars) || *self.vars == **vars {
            return Poly {
                vars: vars.clone(),
                exps: self.exps.clone(),
                coeffs: self.coeffs.clone(),
            };
        }
        let n_old = self.vars.len();
        let n_new = vars.len();
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|s| {
                vars.binary_search(s)
                    .expect("with_vars: target is not a superset")
            })
            .collect();
        let mut exps = vec![0u32; self.nterms() * n_new];
        for i in 0..self.nterms() {
            for (j, &t) in map.iter().enumerate() {
                exps[i * n_new + t] = self.exps[i * n_old + j];
            }
        }
        Poly {
            vars: vars.clone(),
            exps,
            coeffs: self.coeffs.clone(),
        }
    }

    pub(crate) fn merged_vars(a: &[Symbol], b: &[Symbol]) -> Arc<[Symbol]> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1
                }
                Ordering::Equal => {
                    out.push(a[i].clone());
                    i += 1;
                    j += 1
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Arc::from(out)
    }

    /// Brings two polynomials onto a common variable list.
    pub fn unify(a: &Poly, b: &Poly) -> (Poly, Poly) {
        if Arc::ptr_eq(&a.vars, &b.vars) || *a.vars == *b.vars {
            let b2 = Poly {
                vars: a.vars.clone(),
                exps: b.exps.clone(),
                coeffs: b.coeffs.clone(),
            };
            return (a.clone(), b2);
        }
        let vars = Poly::merged_vars(&a.vars, &b.vars);
        (a.with_vars(&vars), b.with_vars(&vars))
    }

    /// Drops variables that do not occur.
    pub fn prune(&self) -> Poly {
        let n = self.vars.len();
        let keep: Vec<usize> = (0..n).filter(|&i| self.degree_at(i) > 0).collect();
        if keep.len() == n {
            return self.clone();
        }
        let vars: Arc<[Symbol]> = keep
            .iter()
            .map(|&i| self.vars[i].clone())
            .collect::<Vec<_>>()
            .into();
        let k = keep.len();
        let mut exps = Vec::with_capacity(self.nterms() * k);
        for t in 0..self.nterms() {
            for &i in &keep {
                exps.push(self.exps[t * n + i]);
            }
        }
        Poly {
            vars,
            exps,
            coeffs: self.coeffs.clone(),
        }
    }

    fn merge(a: &Poly, b: &Poly, negate_b: bool) -> Poly {
        let (a, b) = Poly::unify(a, b);
        let n = a.vars.len();
        let mut exps = Vec::with_capacity(a.exps.len() + b.exps.len());
        let mut coeffs = Vec::with_capacity(a.nterms() + b.nterms());
        let (mut i, mut j) = (0, 0);
        let bneg = |c: &BigInt| if negate_b { -c } else { c.clone() };
        while i < a.nterms() && j < b.nterms() {
            let ea = a.term_exps(i);
            let eb = b.term_exps(j);
            match cmp_mono(ea, eb) {
                Ordering::Greater => {
                    exps.extend_from_slice(ea);
                    coeffs.push(a.coeffs[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    exps.extend_from_slice(eb);
                    coeffs.push(bneg(&b.coeffs[j]));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate_b {
                        &a.coeffs[i] - &b.coeffs[j]
                    } else {
                        &a.coeffs[i] + &b.coeffs[j]
                    };
                    if !c.is_zero() {
                        exps.extend_from_slice(ea);
                        coeffs.push(c);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        while i < a.nterms() {
            exps.extend_from_slice(a.term_exps(i));
            coeffs.push(a.coeffs[i].clone());
            i += 1;
        }
        while j < b.nterms() {
            exps.extend_from_slice(b.term_exps(j));
            coeffs.push(bneg(&b.coeffs[j]));
            j += 1;
        }
        let _ = n;
        Poly {
            vars: a.vars.clone(),
            exps,
            coeffs,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        Poly::merge(self, other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        if other.is_zero() {
            return self.clone();
        }
        Poly::merge(self, other, true)
    }

    pub fn neg(&self) -> Poly {
        Poly {
            vars: self.vars.clone(),
            exps: self.exps.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero_in(&self.vars);
        }
        if c.is_one() {
            return self.clone();
        }
        Poly {
            vars: self.vars.clone(),
            exps: self.exps.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Divides every coefficient by `c`; the caller guarantees exactness.
    pub fn div_scalar(&self, c: &BigInt) -> Poly {
        if c.is_one() {
            return self.clone();
        }
        Poly {
            vars: self.vars.clone(),
            exps: self.exps.clone(),
            coeffs: self.coeffs.iter().map(|x| x / c).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        let (a, b) = Poly::unify(self, other);
        let n = a.vars.len();
        if a.nterms() == 1 || b.nterms() == 1 {
            // a monomial factor preserves the term order
            let (m, p) = if a.nterms() == 1 { (&a, &b) } else { (&b, &a) };
            let me = m.term_exps(0);
            let mc = &m.coeffs[0];
            let mut exps = Vec::with_capacity(p.exps.len());
            for i in 0..p.nterms() {
                exps.extend(p.term_exps(i).iter().zip(me).map(|(x, y)| x + y));
            }
            let coeffs = p.coeffs.iter().map(|c| c * mc).collect();
            return Poly {
                vars: a.vars.clone(),
                exps,
                coeffs,
            };
        }
        let mut exps = Vec::with_capacity(a.nterms() * b.nterms() * n);
        let mut coeffs = Vec::with_capacity(a.nterms() * b.nterms());
        for i in 0..a.nterms() {
            let ea = a.term_exps(i);
            for j in 0..b.nterms() {
                exps.extend(ea.iter().zip(b.term_exps(j)).map(|(x, y)| x + y));
                coeffs.push(&a.coeffs[i] * &b.coeffs[j]);
            }
        }
        Poly::from_terms(&a.vars, exps, coeffs)
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.constant_value() {
            if self.coeffs.iter().all(|x| x.is_multiple_of(&c)) {
                return Some(self.div_scalar(&c));
            }
            return None;
        }
        let (a, d) = Poly::unify(self, d);
        let n = a.vars.len();
        for i in 0..n {
            if a.degree_at(i) < d.degree_at(i) {
                return None;
            }
        }
        let mut q_exps = Vec::new();
        let mut q_coeffs = Vec::new();
        let mut r = a;
        let de = d.term_exps(0).to_vec();
        let dc = d.coeffs[0].clone();
        while !r.is_zero() {
            let re = r.term_exps(0);
            if re.iter().zip(&de).any(|(x, y)| x < y) {
                return None;
            }
            let (qc, rem) = r.coeffs[0].div_rem(&dc);
            if !rem.is_zero() {
                return None;
            }
            let qe: Vec<u32> = re.iter().zip(&de).map(|(x, y)| x - y).collect();
            let t = Poly::monomial_in(&r.vars, qe.clone(), qc.clone());
            r = r.sub(&t.mul(&d));
            q_exps.extend(qe);
            q_coeffs.push(qc);
        }
        Some(Poly {
            vars: d.vars.clone(),
            exps: q_exps,
            coeffs: q_coeffs,
        })
    }

    /// Partial derivative with respect to a symbol (algebraic dependencies are not followed here).
    pub fn deriv(&self, s: &Symbol) -> Poly {
        let Some(idx) = self.var_index(s) else {
            return Poly::zero();
        };
        let n = self.vars.len();
        let mut exps = Vec::with_capacity(self.exps.len());
        let mut coeffs = Vec::with_capacity(self.nterms());
        for i in 0..self.nterms() {
            let e = self.exps[i * n + idx];
            if e == 0 {
                continue;
            }
            let mut te = self.term_exps(i).to_vec();
            te[idx] -= 1;
            exps.extend(te);
            coeffs.push(&self.coeffs[i] * BigInt::from(e));
        }
        Poly::from_terms(&self.vars, exps, coeffs)
    }

    /// Positive gcd of all coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Coefficients with respect to the variable at `idx`, as polynomials on the same variable list.
    pub(crate) fn split_at(&self, idx: usize) -> Vec<Poly> {
        let n = self.vars.len();
        let deg = self.degree_at(idx) as usize;
        let mut parts: Vec<(Vec<u32>, Vec<BigInt>)> = vec![(Vec::new(), Vec::new()); deg + 1];
        for i in 0..self.nterms() {
            let e = self.exps[i * n + idx] as usize;
            let mut te = self.term_exps(i).to_vec();
            te[idx] = 0;
            parts[e].0.extend(te);
            parts[e].1.push(self.coeffs[i].clone());
        }
        // removing one variable keeps the relative order of terms inside each part
        parts
            .into_iter()
            .map(|(e, c)| Poly {
                vars: self.vars.clone(),
                exps: e,
                coeffs: c,
            })
            .collect()
    }

    /// Coefficients with respect to a symbol (index = degree).
    pub fn coefficients_in(&self, s: &Symbol) -> Vec<Poly> {
        match self.var_index(s) {
            Some(i) => self.split_at(i),
            None => vec![self.clone()],
        }
    }

    /// `self * x_idx^k`.
    pub(crate) fn shift_at(&self, idx: usize, k: u32) -> Poly {
        if k == 0 {
            return self.clone();
        }
        let n = self.vars.len();
        let mut exps = self.exps.clone();
        for i in 0..self.nterms() {
            exps[i * n + idx] += k;
        }
        Poly {
            vars: self.vars.clone(),
            exps,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Monomial with exponent vector `min` over all terms, as an exponent list on `vars`.
    pub(crate) fn min_exps(&self) -> Vec<u32> {
        let n = self.vars.len();
        let mut m = vec![u32::MAX; n];
        for i in 0..self.nterms() {
            for (k, &e) in self.term_exps(i).iter().enumerate() {
                m[k] = m[k].min(e);
            }
        }
        if self.is_zero() {
            m.iter_mut().for_each(|x| *x = 0);
        }
        m
    }

    /// Divides by the monomial `exps` (which must divide every term).
    pub(crate) fn div_monomial(&self, exps: &[u32]) -> Poly {
        if exps.iter().all(|&e| e == 0) {
            return self.clone();
        }
        let n = self.vars.len();
        let mut out = self.exps.clone();
        for i in 0..self.nterms() {
            for k in 0..n {
                out[i * n + k] -= exps[k];
            }
        }
        Poly {
            vars: self.vars.clone(),
            exps: out,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Flips the sign of a single term; used by mutation testing.
    pub fn flip_term_sign(&self, i: usize) -> Poly {
        let mut p = self.clone();
        p.coeffs[i] = -p.coeffs[i].clone();
        p
    }

    /// Leading coefficient is negative.
    pub fn lc_is_negative(&self) -> bool {
        self.coeffs
            .first()
            .map(|c| c.is_negative())
            .unwrap_or(false)
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        if self.nterms() != other.nterms() {
            return false;
        }
        let (a, b) = Poly::unify(self, other);
        a.coeffs == b.coeffs && a.exps == b.exps
    }
}
impl Eq for Poly {}
