use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use super::gcd::gcd;
use super::poly::Poly;
use super::symbol::{AlgSymbol, Symbol};
use super::ExprError;

/// Canonical fraction `num/den` of integer polynomials.
///
/// Invariants: `den` is nonzero and free of algebraic symbols, `num` has degree at most
/// one in every algebraic symbol, `gcd(num, den) = 1`, the integer contents are coprime
/// and the leading coefficient of `den` is positive.
#[derive(Clone, Debug)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

/// Simultaneous substitution map.
pub type Bindings = BTreeMap<Symbol, Expr>;

impl Expr {
    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(c: i64) -> Expr {
        Expr {
            num: Poly::from_i64(c),
            den: Poly::one(),
        }
    }

    pub fn big(c: BigInt) -> Expr {
        Expr {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::from_parts(Poly::from_i64(p), Poly::from_i64(q)).expect("nonzero denominator")
    }

    pub fn symbol(s: Symbol) -> Expr {
        Expr::from_poly(Poly::symbol(s))
    }

    pub fn var(name: &str) -> Expr {
        Expr::symbol(Symbol::var(name))
    }

    pub fn param(name: &str) -> Expr {
        Expr::symbol(Symbol::param(name))
    }

    pub fn func(base: &str, order: u8) -> Expr {
        Expr::symbol(Symbol::func(base, order))
    }

    pub fn time() -> Expr {
        Expr::symbol(Symbol::Time)
    }

    pub fn alg(a: &AlgSymbol) -> Expr {
        Expr::symbol(Symbol::Alg(a.clone()))
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr::from_parts(p, Poly::one()).expect("unit denominator")
    }

    /// Normalizes `num/den` into canonical form.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Expr, ExprError> {
        let den_red = reduce_radicals(&den);
        if den_red.is_zero() {
            return Err(ExprError::DivisionByZeroPolynomial);
        }
        let num_red = reduce_radicals(&num);
        let (mut n, mut d) = (num_red, den_red);
        // rationalize the denominator one radical at a time
        while let Some(a) = first_alg(&d) {
            let s = Symbol::Alg(a.clone());
            let parts = d.coefficients_in(&s);
            let d0 = parts[0].clone();
            let d1 = parts.get(1).cloned().unwrap_or_else(Poly::zero);
            let conj = d0.sub(&d1.mul(&Poly::symbol(s.clone())));
            n = reduce_radicals(&n.mul(&conj));
            d = reduce_radicals(&d0.mul(&d0).sub(&d1.mul(&d1).mul(a.square())));
            if d.is_zero() {
                return Err(ExprError::DivisionByZeroPolynomial);
            }
        }
        Ok(Expr::canonical(n, d))
    }

    /// `n`, `d` already free of radical powers and `d` free of radicals.
    fn canonical(n: Poly, d: Poly) -> Expr {
        if n.is_zero() {
            return Expr::zero();
        }
        let (n, d) = if d.is_constant() {
            (n, d)
        } else {
            let g = gcd(&n, &d);
            if g.is_one() {
                (n, d)
            } else {
                (
                    n.div_exact(&g).expect("gcd divides numerator"),
                    d.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        let c = n.content().gcd(&d.content());
        let c = if d.lc_is_negative() { -c } else { c };
        let (n, d) = if c.is_one() {
            (n, d)
        } else {
            (n.div_scalar(&c), d.div_scalar(&c))
        };
        Expr {
            num: n.prune(),
            den: d.prune(),
        }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// Rational constant value, when the expression has no symbols.
    pub fn as_rational(&self) -> Option<(BigInt, BigInt)> {
        Some((self.num.constant_value()?, self.den.constant_value()?))
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut s: BTreeSet<Symbol> = self.num.symbols().into_iter().collect();
        s.extend(self.den.symbols());
        s
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.num.contains(s) || self.den.contains(s)
    }

    /// The denominator involves none of `vars`.
    pub fn is_polynomial_in(&self, vars: &[Symbol]) -> bool {
        vars.iter().all(|v| !self.den.contains(v))
    }

    pub fn add(&self, o: &Expr) -> Expr {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        if self.den == o.den {
            return Expr::canonical(reduce_radicals(&self.num.add(&o.num)), self.den.clone());
        }
        let g = gcd(&self.den, &o.den);
        let (b1, d1) = if g.is_one() {
            (self.den.clone(), o.den.clone())
        } else {
            (
                self.den.div_exact(&g).unwrap(),
                o.den.div_exact(&g).unwrap(),
            )
        };
        let n = self.num.mul(&d1).add(&o.num.mul(&b1));
        let d = self.den.mul(&d1);
        Expr::canonical(n, d)
    }

    pub fn neg(&self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        if self.is_zero() || o.is_zero() {
            return Expr::zero();
        }
        if self.is_one() {
            return o.clone();
        }
        if o.is_one() {
            return self.clone();
        }
        let has_alg = first_alg(&self.num).is_some() && first_alg(&o.num).is_some();
        if has_alg {
            let n = reduce_radicals(&self.num.mul(&o.num));
            return Expr::canonical(n, self.den.mul(&o.den));
        }
        // cross-cancel before multiplying
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let n1 = self.num.div_exact(&g1).unwrap();
        let d2 = o.den.div_exact(&g1).unwrap();
        let n2 = o.num.div_exact(&g2).unwrap();
        let d1 = self.den.div_exact(&g2).unwrap();
        let n = n1.mul(&n2);
        let d = d1.mul(&d2);
        let c = n.content().gcd(&d.content());
        let c = if d.lc_is_negative() { -c } else { c };
        let (n, d) = if c.is_one() {
            (n, d)
        } else {
            (n.div_scalar(&c), d.div_scalar(&c))
        };
        Expr {
            num: n.prune(),
            den: d.prune(),
        }
    }

    pub fn scale(&self, c: i64) -> Expr {
        self.mul(&Expr::int(c))
    }

    pub fn inv(&self) -> Result<Expr, ExprError> {
        Expr::from_parts(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &Expr) -> Result<Expr, ExprError> {
        if o.is_zero() {
            return Err(ExprError::DivisionByZeroPolynomial);
        }
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Expr, ExprError> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut result = Expr::one();
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    /// Partial derivative holding every other symbol fixed, except that radicals whose
    /// square involves `s` are differentiated through their defining relation.
    pub fn partial(&self, s: &Symbol) -> Expr {
        self.derivation(&|sym: &Symbol| if sym == s { Some(Expr::one()) } else { None })
            .expect("partial derivative has no failing rates")
    }

    /// The derivation `e -> sum over symbols of (de/dsym) * rate(sym)`.
    ///
    /// `rate` returns `None` for symbols with zero rate. Radicals are handled through
    /// `ds = d(square) / (2 s)` using the same rates.
    pub fn derivation<F>(&self, rate: &F) -> Result<Expr, ExprError>
    where
        F: Fn(&Symbol) -> Option<Expr>,
    {
        self.try_derivation(&|s| Ok(rate(s)))
    }

    pub fn try_derivation<F>(&self, rate: &F) -> Result<Expr, ExprError>
    where
        F: Fn(&Symbol) -> Result<Option<Expr>, ExprError>,
    {
        let dn = poly_derivation(&self.num, rate)?;
        if self.den.is_constant() {
            return dn.div(&Expr::from_poly(self.den.clone()));
        }
        let dd = poly_derivation(&self.den, rate)?;
        let d = Expr::from_poly(self.den.clone());
        let n = Expr::from_poly(self.num.clone());
        // (n' d - n d') / d^2
        dn.mul(&d).sub(&n.mul(&dd)).div(&d.mul(&d))
    }

    /// Simultaneous substitution followed by normalization.
    ///
    /// A radical whose square changes under the bindings must itself be bound.
    pub fn substitute(&self, b: &Bindings) -> Result<Expr, ExprError> {
        if b.is_empty() {
            return Ok(self.clone());
        }
        let (nn, nd) = subst_poly(&self.num, b)?;
        if self.den.is_constant() {
            let c = Expr::from_poly(self.den.clone());
            return Expr::from_parts(nn, nd.mul(&c.num));
        }
        let (dn, dd) = subst_poly(&self.den, b)?;
        Expr::from_parts(nn.mul(&dd), nd.mul(&dn))
    }

    /// Substitutes a single symbol.
    pub fn subs1(&self, s: &Symbol, v: &Expr) -> Result<Expr, ExprError> {
        let mut b = Bindings::new();
        b.insert(s.clone(), v.clone());
        self.substitute(&b)
    }

    /// Coefficients as a polynomial in `s`: `self = sum c_k s^k` with `c_k` free of `s`.
    /// Fails (returns `None`) when `s` occurs in the denominator.
    pub fn poly_coefficients(&self, s: &Symbol) -> Option<Vec<Expr>> {
        if self.den.contains(s) {
            return None;
        }
        let d = Expr::from_poly(self.den.clone());
        Some(
            self.num
                .coefficients_in(s)
                .into_iter()
                .map(|c| Expr::from_poly(c).div(&d).expect("nonzero denominator"))
                .collect(),
        )
    }

    /// Maximal `k` such that `s^k` divides the denominator, as a pole order (negative values
    /// mean the numerator vanishes to that order).
    pub fn pole_order(&self, s: &Symbol) -> i64 {
        let dn = self
            .den
            .var_index(s)
            .map(|i| self.den.min_degree_at(i))
            .unwrap_or(0) as i64;
        let nn = self
            .num
            .var_index(s)
            .map(|i| self.num.min_degree_at(i))
            .unwrap_or(0) as i64;
        dn - nn
    }

    /// `self * s^k` (k may be negative).
    pub fn mul_pow(&self, s: &Symbol, k: i64) -> Expr {
        let p = Expr::symbol(s.clone()).pow(k).expect("symbol is nonzero");
        self.mul(&p)
    }

    /// Grammar-compatible rendering (`*` for products).
    pub fn to_text(&self) -> String {
        super::display::render(self, super::display::Style::Machine)
    }

    /// Human rendering (juxtaposition for products).
    pub fn to_pretty(&self) -> String {
        super::display::render(self, super::display::Style::Human)
    }

    /// Flips the sign of the `i`-th numerator term.
    pub fn flip_numerator_term(&self, i: usize) -> Expr {
        Expr::from_parts(self.num.flip_term_sign(i), self.den.clone())
            .expect("denominator unchanged")
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}
impl Eq for Expr {}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

fn first_alg(p: &Poly) -> Option<AlgSymbol> {
    p.symbols().into_iter().find_map(|s| match s {
        Symbol::Alg(a) => Some(a),
        _ => None,
    })
}

/// Rewrites `s^e` as `square^(e/2) s^(e mod 2)` for every radical `s`.
pub(crate) fn reduce_radicals(p: &Poly) -> Poly {
    let algs: Vec<(usize, AlgSymbol)> = p
        .vars()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            Symbol::Alg(a) if p.degree_at(i) >= 2 => Some((i, a.clone())),
            _ => None,
        })
        .collect();
    if algs.is_empty() {
        return p.clone();
    }
    let vars: Arc<[Symbol]> = p.vars_arc().clone();
    let mut out = Poly::zero();
    let mut square_pows: BTreeMap<(usize, u32), Poly> = BTreeMap::new();
    for (e, c) in p.terms() {
        let mut te = e.to_vec();
        let mut factor = Poly::one();
        for (i, a) in &algs {
            let k = te[*i] / 2;
            if k > 0 {
                te[*i] %= 2;
                let sp = square_pows
                    .entry((*i, k))
                    .or_insert_with(|| a.square().pow(k))
                    .clone();
                factor = factor.mul(&sp);
            }
        }
        let mono = Poly::monomial_in(&vars, te, c.clone());
        out = out.add(&mono.mul(&factor));
    }
    // squares may reintroduce radicals only if they contain them, which is excluded
    out
}

fn poly_derivation<F>(p: &Poly, rate: &F) -> Result<Expr, ExprError>
where
    F: Fn(&Symbol) -> Result<Option<Expr>, ExprError>,
{
    let mut acc = Expr::zero();
    for s in p.symbols() {
        let r = match &s {
            Symbol::Alg(a) => {
                let sq = Expr::from_poly(a.square().clone());
                let dsq = sq.try_derivation(rate)?;
                if dsq.is_zero() {
                    None
                } else {
                    // ds = d(square) * s / (2 square)
                    Some(dsq.mul(&Expr::symbol(s.clone())).div(&sq.scale(2))?)
                }
            }
            _ => rate(&s)?,
        };
        if let Some(r) = r {
            if r.is_zero() {
                continue;
            }
            let dp = Expr::from_poly(p.deriv(&s));
            acc = acc.add(&dp.mul(&r));
        }
    }
    Ok(acc)
}

/// Substitutes into a polynomial, returning numerator and denominator polynomials.
fn subst_poly(p: &Poly, b: &Bindings) -> Result<(Poly, Poly), ExprError> {
    let vars = p.vars();
    let mut bound: Vec<Option<&Expr>> = Vec::with_capacity(vars.len());
    for s in vars {
        let v = b.get(s);
        if v.is_none() {
            if let Symbol::Alg(a) = s {
                if p.contains(s) {
                    let sq = Expr::from_poly(a.square().clone());
                    let sq2 = sq.substitute(b)?;
                    if sq2 != sq {
                        return Err(ExprError::UnboundAlgebraic(a.name().to_string()));
                    }
                }
            }
        }
        bound.push(v);
    }
    if bound.iter().all(|v| v.is_none()) {
        return Ok((p.clone(), Poly::one()));
    }
    let n = vars.len();
    let degs: Vec<u32> = (0..n).map(|i| p.degree_at(i)).collect();
    // powers of numerators and denominators of bound values
    let mut num_pows: Vec<Vec<Poly>> = vec![Vec::new(); n];
    let mut den_pows: Vec<Vec<Poly>> = vec![Vec::new(); n];
    for i in 0..n {
        if let Some(v) = bound[i] {
            let d = degs[i] as usize;
            let mut np = vec![Poly::one()];
            let mut dp = vec![Poly::one()];
            for k in 1..=d {
                np.push(np[k - 1].mul(v.numer()));
                dp.push(dp[k - 1].mul(v.denom()));
            }
            num_pows[i] = np;
            den_pows[i] = dp;
        }
    }
    let free_vars: Arc<[Symbol]> = p.vars_arc().clone();
    let mut out = Poly::zero();
    for (e, c) in p.terms() {
        let mut fe = vec![0u32; n];
        let mut term = Poly::one();
        for i in 0..n {
            match bound[i] {
                Some(_) => {
                    let k = e[i] as usize;
                    let d = degs[i] as usize;
                    term = term.mul(&num_pows[i][k]).mul(&den_pows[i][d - k]);
                }
                None => fe[i] = e[i],
            }
        }
        let m = Poly::monomial_in(&free_vars, fe, c.clone());
        out = out.add(&m.mul(&term));
    }
    let mut den = Poly::one();
    for i in 0..n {
        if bound[i].is_some() && degs[i] > 0 {
            den = den.mul(&den_pows[i][degs[i] as usize]);
        }
    }
    Ok((out, den))
}

/// `p/q` as an exact rational number expression.
pub fn rational(p: &BigInt, q: &BigInt) -> Expr {
    Expr::from_parts(Poly::constant(p.clone()), Poly::constant(q.clone()))
        .expect("nonzero denominator")
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        Expr::add(self, o)
    }
}
impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        Expr::sub(self, o)
    }
}
impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        Expr::mul(self, o)
    }
}
impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
