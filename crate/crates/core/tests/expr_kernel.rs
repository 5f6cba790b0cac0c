use std::collections::BTreeMap;

use ince_core::expr::solve::{expr_sqrt, roots_in, solve_linear};
use ince_core::expr::{
    gcd, parse, total_derivative, ConstraintRule, ConstraintSet, Expr, Poly, Scope, Symbol,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn scope() -> Scope {
    Scope::new()
        .with_vars(&["x", "y"])
        .with_params(&["a", "b"])
        .with_funcs(&["q", "r"])
}

fn p(s: &str) -> Expr {
    parse(s, &scope()).unwrap()
}

// Independent oracle: a plain expression tree evaluated over exact rationals.
#[derive(Clone, Debug)]
enum Tree {
    Int(i64),
    Sym(&'static str),
    Add(Box<Tree>, Box<Tree>),
    Sub(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    Div(Box<Tree>, Box<Tree>),
    Pow(Box<Tree>, u32),
}

const NAMES: [&str; 4] = ["x", "y", "a", "t"];

impl Tree {
    fn eval(&self, at: &BTreeMap<&str, BigRational>) -> Option<BigRational> {
        Some(match self {
            Tree::Int(n) => BigRational::from_integer(BigInt::from(*n)),
            Tree::Sym(s) => at[s].clone(),
            Tree::Add(a, b) => a.eval(at)? + b.eval(at)?,
            Tree::Sub(a, b) => a.eval(at)? - b.eval(at)?,
            Tree::Mul(a, b) => a.eval(at)? * b.eval(at)?,
            Tree::Div(a, b) => {
                let d = b.eval(at)?;
                if d.is_zero() {
                    return None;
                }
                a.eval(at)? / d
            }
            Tree::Pow(a, k) => {
                let v = a.eval(at)?;
                (0..*k).fold(BigRational::one(), |acc, _| acc * v.clone())
            }
        })
    }

    fn build(&self) -> Option<Expr> {
        Some(match self {
            Tree::Int(n) => Expr::int(*n),
            Tree::Sym("t") => Expr::time(),
            Tree::Sym("a") => Expr::param("a"),
            Tree::Sym(s) => Expr::var(s),
            Tree::Add(a, b) => a.build()?.add(&b.build()?),
            Tree::Sub(a, b) => a.build()?.sub(&b.build()?),
            Tree::Mul(a, b) => a.build()?.mul(&b.build()?),
            Tree::Div(a, b) => a.build()?.div(&b.build()?).ok()?,
            Tree::Pow(a, k) => a.build()?.pow(*k as i64).ok()?,
        })
    }

    fn text(&self) -> String {
        match self {
            Tree::Int(n) => format!("({n})"),
            Tree::Sym(s) => s.to_string(),
            Tree::Add(a, b) => format!("({} + {})", a.text(), b.text()),
            Tree::Sub(a, b) => format!("({} - {})", a.text(), b.text()),
            Tree::Mul(a, b) => format!("({} * {})", a.text(), b.text()),
            Tree::Div(a, b) => format!("({} / {})", a.text(), b.text()),
            Tree::Pow(a, k) => format!("({})^{k}", a.text()),
        }
    }
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![
        (-4i64..5).prop_map(Tree::Int),
        (0usize..4).prop_map(|i| Tree::Sym(NAMES[i]))
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Div(Box::new(a), Box::new(b))),
            (inner, 0u32..3).prop_map(|(a, k)| Tree::Pow(Box::new(a), k)),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-9i64..10, 1i64..6), 4)
}

fn eval_expr(e: &Expr, at: &BTreeMap<&str, BigRational>) -> Option<BigRational> {
    let mut b = BTreeMap::new();
    for (n, v) in at {
        let val = Expr::big(v.numer().clone())
            .div(&Expr::big(v.denom().clone()))
            .unwrap();
        let s = match *n {
            "t" => Symbol::Time,
            "a" => Symbol::param("a"),
            other => Symbol::var(other),
        };
        b.insert(s, val);
    }
    let v = e.substitute(&b).ok()?;
    let (n, d) = v.as_rational()?;
    Some(BigRational::new(n, d))
}

fn at_point(pt: &[(i64, i64)]) -> BTreeMap<&'static str, BigRational> {
    NAMES
        .iter()
        .zip(pt)
        .map(|(n, (a, b))| (*n, BigRational::new(BigInt::from(*a), BigInt::from(*b))))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_agrees_with_tree_evaluation(t in tree(), pt in point()) {
        let Some(e) = t.build() else { return Ok(()) };
        let at = at_point(&pt);
        if let (Some(want), Some(got)) = (t.eval(&at), eval_expr(&e, &at)) {
            prop_assert_eq!(want, got);
        }
    }

    #[test]
    fn canonical_form_is_idempotent(t in tree()) {
        let Some(e) = t.build() else { return Ok(()) };
        let again = Expr::from_parts(e.numer().clone(), e.denom().clone()).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert!(gcd(e.numer(), e.denom()).is_constant());
    }

    #[test]
    fn text_round_trips(t in tree()) {
        let Some(e) = t.build() else { return Ok(()) };
        let sc = Scope::new().with_vars(&["x", "y"]).with_params(&["a"]);
        prop_assert_eq!(&parse(&e.to_text(), &sc).unwrap(), &e);
        prop_assert_eq!(&parse(&e.to_pretty(), &sc).unwrap(), &e);
        if let Ok(from_tree) = parse(&t.text(), &sc) {
            prop_assert_eq!(&from_tree, &e);
        }
    }

    #[test]
    fn ring_axioms(a in tree(), b in tree(), c in tree()) {
        let (Some(a), Some(b), Some(c)) = (a.build(), b.build(), c.build()) else { return Ok(()) };
        prop_assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).sub(&b), a.clone());
        if !b.is_zero() {
            prop_assert_eq!(a.mul(&b).div(&b).unwrap(), a);
        }
    }

    #[test]
    fn partial_derivative_is_a_derivation(a in tree(), b in tree()) {
        let (Some(a), Some(b)) = (a.build(), b.build()) else { return Ok(()) };
        let x = Symbol::var("x");
        let lhs = a.mul(&b).partial(&x);
        let rhs = a.partial(&x).mul(&b).add(&a.mul(&b.partial(&x)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn gcd_divides_both(a in tree(), b in tree(), c in tree()) {
        let (Some(a), Some(b), Some(c)) = (a.build(), b.build(), c.build()) else { return Ok(()) };
        let (a, b, c) = (a.numer().clone(), b.numer().clone(), c.numer().clone());
        if c.is_zero() || a.is_zero() || b.is_zero() {
            return Ok(());
        }
        let g = gcd(&a.mul(&c), &b.mul(&c));
        prop_assert!(a.mul(&c).div_exact(&g).is_some());
        prop_assert!(b.mul(&c).div_exact(&g).is_some());
        prop_assert!(g.div_exact(&c).is_some() || g.div_exact(&c.neg()).is_some());
    }

    #[test]
    fn substitution_is_simultaneous(t in tree()) {
        let Some(e) = t.build() else { return Ok(()) };
        let (x, y) = (Symbol::var("x"), Symbol::var("y"));
        let mut swap = BTreeMap::new();
        swap.insert(x.clone(), Expr::var("y"));
        swap.insert(y.clone(), Expr::var("x"));
        let twice = e.substitute(&swap).unwrap().substitute(&swap).unwrap();
        prop_assert_eq!(twice, e);
    }
}

#[test]
fn fractions_cancel() {
    let e = p("(x^2 - y^2)/(x + y)");
    assert_eq!(e, p("x - y"));
    assert!(e.is_polynomial());
    assert_eq!(p("(2x + 2)/(4x + 4)"), Expr::ratio(1, 2));
    assert_eq!(p("1/(-x)").denom(), p("x").numer());
}

#[test]
fn multivariate_gcd() {
    let a = p("(x + y)^2 (x - a)").numer().clone();
    let b = p("(x + y) (x - a)^3 (y + 1)").numer().clone();
    let g = gcd(&a, &b);
    assert_eq!(Expr::from_poly(g), p("(x + y)(x - a)"));
    let c = p("x^3 y + 2").numer().clone();
    assert!(gcd(&c, &p("x y - 1").numer().clone()).is_one());
}

#[test]
fn human_rendering_orders_state_then_jets_then_time_then_params() {
    let sc = Scope::new()
        .with_vars(&["x"])
        .with_params(&["C1", "C2"])
        .with_funcs(&["q"]);
    let e = parse("-C2 - C1*t + 6*q^2", &sc).unwrap();
    assert_eq!(e.to_pretty(), "6 q^2 - C1 t - C2");
    assert_eq!(parse(&e.to_pretty(), &sc).unwrap(), e);
    let d = parse("q'' x/(2 q' + 1)", &sc).unwrap();
    assert_eq!(parse(&d.to_text(), &sc).unwrap(), d);
}

#[test]
fn radicals_reduce_and_rationalize() {
    let mut sc = scope();
    let s = sc.add_alg("s", "x + 1").unwrap();
    assert_eq!(parse("s^2", &sc).unwrap(), p("x + 1"));
    assert_eq!(parse("sqrt(x + 1)", &sc).unwrap(), Expr::alg(&s));
    let inv = parse("1/(1 + s)", &sc).unwrap();
    assert!(!inv.denom().contains(&Symbol::Alg(s.clone())));
    assert!(parse("(1 + s) / (1 + s)", &sc).unwrap().is_one());
    assert_eq!(inv.mul(&parse("1 + s", &sc).unwrap()), Expr::one());
    // d s / dx = 1 / (2 s)
    let ds = Expr::alg(&s).partial(&Symbol::var("x"));
    assert_eq!(ds, parse("s/(2x + 2)", &sc).unwrap());
    assert_eq!(ds.mul(&Expr::alg(&s)).scale(2), Expr::one());
}

#[test]
fn nested_radicals_are_rejected() {
    let mut sc = scope();
    sc.add_alg("s", "x").unwrap();
    assert!(sc.add_alg("w", "s + 1").is_err());
}

#[test]
fn radicals_must_be_bound_when_their_square_moves() {
    let mut sc = scope();
    let s = sc.add_alg("s", "x").unwrap();
    let e = parse("s + y", &sc).unwrap();
    let r = e.subs1(&Symbol::var("x"), &Expr::int(4));
    assert!(matches!(
        r,
        Err(ince_core::expr::ExprError::UnboundAlgebraic(_))
    ));
    let mut b = BTreeMap::new();
    b.insert(Symbol::var("x"), Expr::int(4));
    b.insert(Symbol::Alg(s), Expr::int(2));
    assert_eq!(e.substitute(&b).unwrap(), p("2 + y"));
}

#[test]
fn constraint_closure_matches_hand_derivatives() {
    let sc = Scope::new().with_params(&["C1", "C2"]).with_funcs(&["q"]);
    let rule = ConstraintRule::new("q", 2, parse("6 q^2 - C1 t - C2", &sc).unwrap()).unwrap();
    let cs = ConstraintSet::new(vec![rule]).unwrap();
    assert_eq!(
        cs.closure_rule("q", 3).unwrap().unwrap(),
        parse("12 q q' - C1", &sc).unwrap()
    );
    let q4 = parse("12 q'^2 + 12 q (6 q^2 - C1 t - C2)", &sc).unwrap();
    assert_eq!(cs.closure_rule("q", 4).unwrap().unwrap(), q4);
    let e = parse("q'''' - 12 q'^2", &sc).unwrap();
    let red = cs.reduce(&e).unwrap();
    assert!(cs.is_reduced(&red));
    assert_eq!(red, parse("72 q^3 - 12 C1 q t - 12 C2 q", &sc).unwrap());
}

#[test]
fn coupled_constraints_close() {
    let sc = Scope::new()
        .with_params(&["c1", "c2"])
        .with_funcs(&["q", "r"]);
    let rq = ConstraintRule::new(
        "q",
        2,
        parse("-2 q q' - 3 q r - (3 c1 + c2)/4", &sc).unwrap(),
    )
    .unwrap();
    let rr = ConstraintRule::new("r", 1, parse("2 q r + c1", &sc).unwrap()).unwrap();
    let cs = ConstraintSet::new(vec![rq, rr]).unwrap();
    let q3 = cs.closure_rule("q", 3).unwrap().unwrap();
    // oracle: d/dt of the q'' rule with q'' and r' substituted by hand
    let want = parse(
        "-2 q'^2 - 2 q (-2 q q' - 3 q r - (3 c1 + c2)/4) - 3 q' r - 3 q (2 q r + c1)",
        &sc,
    )
    .unwrap();
    assert_eq!(q3, want);
    assert!(cs.is_reduced(&q3));
}

#[test]
fn invalid_constraints_are_refused() {
    let sc = Scope::new().with_vars(&["x"]).with_funcs(&["q"]);
    assert!(ConstraintRule::new("q", 2, parse("q''", &sc).unwrap()).is_err());
    assert!(ConstraintRule::new("q", 2, parse("x q", &sc).unwrap()).is_err());
}

#[test]
fn total_derivative_along_a_field() {
    let sc = Scope::new().with_vars(&["x", "y"]).with_funcs(&["q"]);
    let mut rates = BTreeMap::new();
    rates.insert(Symbol::var("x"), parse("y", &sc).unwrap());
    rates.insert(Symbol::var("y"), parse("6 x^2 + q", &sc).unwrap());
    let h = parse("y^2/2 - 2 x^3 - q x", &sc).unwrap();
    let dh = total_derivative(&h, &rates, None).unwrap();
    assert_eq!(dh, parse("-q' x", &sc).unwrap());
    rates.remove(&Symbol::var("y"));
    assert!(total_derivative(&h, &rates, None).is_err());
}

#[test]
fn roots_with_multiplicity() {
    let sc = Scope::new().with_vars(&["X"]).with_params(&["a"]);
    let x = Symbol::var("X");
    let e = parse("X^2 (X - 1)^2 (X + 2)", &sc).unwrap();
    let mut r = roots_in(&e, &x).unwrap();
    r.sort_by_key(|(_, m)| *m);
    assert_eq!(r.len(), 3);
    assert!(r.contains(&(Expr::zero(), 2)));
    assert!(r.contains(&(Expr::int(1), 2)));
    assert!(r.contains(&(Expr::int(-2), 1)));
    let e = parse("4 X^2 - a^2", &sc).unwrap();
    let r = roots_in(&e, &x).unwrap();
    assert_eq!(r.len(), 2);
    assert!(r.contains(&(parse("a/2", &sc).unwrap(), 1)));
    let cubic = parse("2X^3 - 3X^2 - 3X + 2", &sc).unwrap();
    let r = roots_in(&cubic, &x).unwrap();
    assert_eq!(r.len(), 3);
    assert!(r.contains(&(Expr::ratio(1, 2), 1)));
    assert!(roots_in(&parse("X^2 - 2", &sc).unwrap(), &x).is_err());
}

#[test]
fn square_roots() {
    let e = p("(x + 2 y a)^2 / (a - 1)^2");
    assert_eq!(expr_sqrt(&e).map(|s| s.mul(&s)), Some(e));
    assert!(expr_sqrt(&p("x^2 + 1")).is_none());
}

#[test]
fn linear_elimination() {
    let sc = Scope::new()
        .with_vars(&["u", "v", "x", "y"])
        .with_params(&["a"]);
    let eqs = [
        parse("x - 1/u", &sc).unwrap(),
        parse("y - (v + a u) u", &sc).unwrap(),
    ];
    let sol = solve_linear(&eqs, &[Symbol::var("u"), Symbol::var("v")]).unwrap();
    assert_eq!(sol[&Symbol::var("u")], parse("1/x", &sc).unwrap());
    assert_eq!(sol[&Symbol::var("v")], parse("x y - a/x", &sc).unwrap());
    assert!(solve_linear(&[parse("u^2 - x", &sc).unwrap()], &[Symbol::var("u")]).is_err());
}

#[test]
fn parse_errors_carry_positions() {
    let sc = scope();
    match parse("x + * y", &sc) {
        Err(ince_core::expr::ExprError::Parse { pos, .. }) => assert_eq!(pos, 4),
        other => panic!("{other:?}"),
    }
    assert!(parse("z", &sc).is_err());
    assert!(parse("x'", &sc).is_err());
    assert!(parse("(x", &sc).is_err());
}

#[test]
fn numeric_evaluation_matches_exact() {
    use ince_core::expr::numeric::{eval_with, to_f64};
    use num_complex::Complex64;
    let e = p("(x^2 + a)/(y - 3)");
    let v = eval_with(&e, |s| match s.name() {
        "x" => Some(Complex64::new(2.0, 0.0)),
        "y" => Some(Complex64::new(5.0, 0.0)),
        "a" => Some(Complex64::new(1.0, 0.0)),
        _ => None,
    })
    .unwrap();
    let mut b = BTreeMap::new();
    b.insert(Symbol::var("x"), Expr::int(2));
    b.insert(Symbol::var("y"), Expr::int(5));
    b.insert(Symbol::param("a"), Expr::int(1));
    let exact = to_f64(&e.substitute(&b).unwrap()).unwrap();
    assert!((v.re - exact).abs() < 1e-14 && v.im == 0.0);
    let _ = Poly::zero();
}
