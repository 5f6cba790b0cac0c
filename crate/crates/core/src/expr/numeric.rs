//! Floating-point evaluation of exact expressions.

use num_complex::Complex64;
use num_traits::ToPrimitive;

use super::poly::Poly;
use super::rational::Expr;
use super::symbol::Symbol;
use super::ExprError;

#[derive(Clone, Debug)]
struct CompiledPoly {
    // (coefficient, [(slot, exponent)])
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    fn new(p: &Poly, slots: &[Symbol]) -> Result<CompiledPoly, ExprError> {
        let map: Vec<usize> = p
            .vars()
            .iter()
            .map(|s| {
                slots
                    .iter()
                    .position(|x| x == s)
                    .ok_or_else(|| ExprError::UndeclaredSymbol(s.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let terms = p
            .terms()
            .map(|(e, c)| {
                let f = c.to_f64().unwrap_or(f64::NAN);
                let m = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| (map[i], k))
                    .collect();
                (f, m)
            })
            .collect();
        Ok(CompiledPoly { terms })
    }

    fn eval(&self, vals: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (c, m) in &self.terms {
            let mut t = Complex64::new(*c, 0.0);
            for &(i, k) in m {
                t *= vals[i].powu(k);
            }
            s += t;
        }
        s
    }
}

/// An expression compiled against a fixed slot order.
#[derive(Clone, Debug)]
pub struct Compiled {
    num: CompiledPoly,
    den: CompiledPoly,
}

impl Compiled {
    /// Every symbol of `e` must appear in `slots`.
    pub fn new(e: &Expr, slots: &[Symbol]) -> Result<Compiled, ExprError> {
        Ok(Compiled {
            num: CompiledPoly::new(e.numer(), slots)?,
            den: CompiledPoly::new(e.denom(), slots)?,
        })
    }

    pub fn eval(&self, vals: &[Complex64]) -> Complex64 {
        self.num.eval(vals) / self.den.eval(vals)
    }

    /// Numerator and denominator values.
    pub fn eval_parts(&self, vals: &[Complex64]) -> (Complex64, Complex64) {
        (self.num.eval(vals), self.den.eval(vals))
    }
}

/// One-off evaluation with a symbol lookup.
pub fn eval_with<F>(e: &Expr, value: F) -> Result<Complex64, ExprError>
where
    F: Fn(&Symbol) -> Option<Complex64>,
{
    let slots: Vec<Symbol> = e.symbols().into_iter().collect();
    let vals: Vec<Complex64> = slots
        .iter()
        .map(|s| value(s).ok_or_else(|| ExprError::UndeclaredSymbol(s.to_string())))
        .collect::<Result<_, _>>()?;
    Ok(Compiled::new(e, &slots)?.eval(&vals))
}

/// Exact rational constant as `f64`.
pub fn to_f64(e: &Expr) -> Option<f64> {
    let (p, q) = e.as_rational()?;
    Some(p.to_f64()? / q.to_f64()?)
}
