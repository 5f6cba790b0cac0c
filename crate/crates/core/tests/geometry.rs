use ince_core::expr::{parse, total_derivative, Expr, Scope, Symbol};
use ince_core::field::VectorField;
use ince_core::geometry::*;
use ince_core::registry::{get_equation, EquationEntry, Step, StepKind};
use proptest::prelude::*;

fn points(id: &str) -> Vec<AccessibleSingularity> {
    let e = get_equation(id).unwrap();
    let charts = extend_to_p2(e.system.as_ref().unwrap(), Some(&e.constraints)).unwrap();
    find_accessible_singularities(&charts).unwrap()
}

fn ex(src: &str, e: &EquationEntry) -> Expr {
    parse(src, &e.scope).unwrap()
}

fn xy_scope() -> Scope {
    Scope::new().with_vars(&["x", "y"])
}

#[test]
fn singularity_counts() {
    for (id, n) in [
        ("Ince-X", 1),
        ("Ince-XV", 1),
        ("Ince-XXVI", 2),
        ("Ince-XXV", 0),
        ("Ince-VII", 3),
    ] {
        assert_eq!(points(id).len(), n, "{id}");
    }
    let x = points("Ince-X");
    assert_eq!((x[0].chart.as_str(), x[0].multiplicity), ("U2", 2));
    assert_eq!(x[0].point, vec![Expr::zero(), Expr::zero()]);
    let xxvi = points("Ince-XXVI");
    let mut m: Vec<u32> = xxvi.iter().map(|p| p.multiplicity).collect();
    m.sort();
    assert_eq!(m, vec![1, 2]);
}

#[test]
fn certificates_hold() {
    for id in ["Ince-X", "Ince-XV", "Ince-XXVI", "Ince-VII", "Ince-XI"] {
        let e = get_equation(id).unwrap();
        let charts = extend_to_p2(e.system.as_ref().unwrap(), Some(&e.constraints)).unwrap();
        for p in find_accessible_singularities(&charts).unwrap() {
            let f = charts.iter().find(|c| c.chart == p.chart).unwrap();
            assert!(certify(f, &p).unwrap(), "{id} {p:?}");
        }
    }
}

#[test]
fn local_index_table() {
    // (entry, label, eigenvalues, ratio)
    let table = [
        ("Ince-X", "P(1)", ("-3", "-1/2"), "6"),
        ("Ince-X", "P(2)", ("3", "1"), "3"),
        ("Ince-XV", "P(1)", ("-1", "-1/2"), "2"),
    ];
    for (id, label, (a, b), ratio) in table {
        let e = get_equation(id).unwrap();
        let p = e.index_points.iter().find(|p| p.label == label).unwrap();
        let li = index_at(e, p).unwrap();
        let mut got = li.eigenvalues.clone();
        let mut want = vec![ex(a, e), ex(b, e)];
        got.sort_by_key(|x| x.to_text());
        want.sort_by_key(|x| x.to_text());
        assert_eq!(got, want, "{id} {label}");
        assert_eq!(li.ratio(), &ex(ratio, e), "{id} {label}");
    }
    // Ince-XXVI P2 is read straight off the U2 chart
    let e = get_equation("Ince-XXVI").unwrap();
    let p2 = points("Ince-XXVI")
        .into_iter()
        .find(|p| p.multiplicity == 1)
        .unwrap();
    let charts = extend_to_p2(e.system.as_ref().unwrap(), Some(&e.constraints)).unwrap();
    let f = charts.iter().find(|c| c.chart == p2.chart).unwrap();
    let li = local_index_at(f, &p2.point).unwrap();
    assert_eq!(li.ratio(), &Expr::int(5));
    let mut eig = li.eigenvalues.clone();
    eig.sort_by_key(|x| x.to_text());
    assert_eq!(eig, vec![ex("1/4", e), ex("5/4", e)]);
}

#[test]
fn degenerate_points_need_blowups() {
    let e = get_equation("Ince-X").unwrap();
    let charts = extend_to_p2(e.system.as_ref().unwrap(), Some(&e.constraints)).unwrap();
    let p = &points("Ince-X")[0];
    let f = charts.iter().find(|c| c.chart == p.chart).unwrap();
    assert!(local_index_at(f, &p.point).is_err());
}

fn synthetic(rhs_y: &str) -> VectorField {
    let s = xy_scope();
    let (x, y) = (Symbol::var("x"), Symbol::var("y"));
    VectorField::new(
        "syn",
        vec![x, y],
        vec![Expr::one(), parse(rhs_y, &s).unwrap()],
    )
    .with_divisor(0)
}

#[test]
fn alpha_test_verdicts() {
    let o = [Expr::zero(), Expr::zero()];
    // x * rhs = (x, y/2): index (1, 1/2)
    let a = alpha_test(&synthetic("y/(2*x)"), &o, &Symbol::Time).unwrap();
    assert_eq!(a.single_valued, Some(false));
    // x * rhs = (x, x + y): equal eigenvalues, a21 = 1
    let b = alpha_test(&synthetic("(x + y)/x"), &o, &Symbol::Time).unwrap();
    assert_eq!(b.single_valued, Some(false));
    assert!(b.reason.contains("equal"));
    // x * rhs = (x, 2y)
    let c = alpha_test(&synthetic("2*y/x"), &o, &Symbol::Time).unwrap();
    assert_eq!(c.single_valued, Some(true));
    assert_eq!(c.index.ratio(), &Expr::int(2));
}

#[test]
fn alpha_test_on_catalogued_points() {
    for (id, label) in [("Ince-X", "P(1)"), ("Ince-X", "P(2)"), ("Ince-XV", "P(1)")] {
        let e = get_equation(id).unwrap();
        let p = e.index_points.iter().find(|p| p.label == label).unwrap();
        let s = e.resolution(&p.resolution, Some(&p.variant)).unwrap();
        let f = script_stages(e, s, p.after_step).unwrap().pop().unwrap();
        let a = alpha_test(&f, &p.point, &Symbol::Time).unwrap();
        assert_eq!(a.single_valued, Some(true), "{id} {label}: {}", a.reason);
    }
}

#[test]
fn blow_down_undoes_every_step() {
    for id in ["Ince-X", "Ince-XV", "Ince-XXVI"] {
        let e = get_equation(id).unwrap();
        for s in &e.resolutions {
            let Ok(stages) = script_stages(e, s, s.steps.len()) else {
                continue;
            };
            for (k, st) in s.steps.iter().enumerate() {
                let back = blow_down(&stages[k + 1], st, stages[k].divisor).unwrap();
                assert_eq!(
                    back.rhs,
                    stages[k].rhs,
                    "{id} {} ({}) step {}",
                    s.name,
                    s.variant,
                    k + 1
                );
            }
        }
    }
}

#[test]
fn identity_step_is_inert() {
    let f = synthetic("2*y/x");
    let step = Step {
        kind: StepKind::Change,
        map: vec![Expr::var("x"), Expr::var("y")],
        center: None,
        divisor: 0,
    };
    let g = apply_step(&f, &step, 1).unwrap();
    assert_eq!(g.rhs, f.rhs);
}

#[test]
fn center_off_divisor_rejected() {
    let f = synthetic("2*y/x");
    let s = xy_scope();
    let step = Step {
        kind: StepKind::Blowup,
        map: vec![parse("x", &s).unwrap(), parse("(y - 1)/x", &s).unwrap()],
        center: Some(vec![Expr::one(), Expr::one()]),
        divisor: 0,
    };
    assert!(matches!(
        apply_step(&f, &step, 4),
        Err(GeometryError::CenterNotOnDivisor { step: 4, .. })
    ));
}

#[test]
fn resolution_x_p1() {
    let e = get_equation("Ince-X").unwrap();
    let r = run_resolution(e, e.resolution("P1", Some("free-jet")).unwrap()).unwrap();
    // 24 (12 q'^2 + 12 q q'' - q'''')
    assert_eq!(r.obstruction, ex("288*q'^2 + 288*q*q'' - 24*q''''", e));
    let c = r.constraint.as_ref().unwrap();
    assert_eq!(c.lhs, Symbol::func("q", 2));
    assert_eq!(c.rhs, ex("6*q^2 - C1*t - C2", e));
    assert_eq!(c.integrations, 2);
    assert!(r.polynomial_with_constraint);
    assert!(!r.polynomial_without_constraint);
    assert_eq!(r.chart_agreement, Some(Ok("corrected".to_string())));
    assert!(r.resolved());

    let printed = run_resolution(e, e.resolution("P1", Some("printed")).unwrap()).unwrap();
    assert!(!printed.resolved());
}

#[test]
fn resolution_x_p2() {
    let e = get_equation("Ince-X").unwrap();
    let r = run_resolution(e, e.resolution("P2", Some("extended")).unwrap()).unwrap();
    assert!(r.obstruction.is_zero());
    assert!(r.resolved());
    assert_eq!(r.chart_agreement, Some(Ok("printed".to_string())));
    let printed = run_resolution(e, e.resolution("P2", Some("printed")).unwrap()).unwrap();
    assert!(!printed.resolved());
}

#[test]
fn resolution_xv() {
    let e = get_equation("Ince-XV").unwrap();
    let r = run_resolution(e, e.resolution("P1", Some("swapped")).unwrap()).unwrap();
    let c = r.constraint.as_ref().unwrap();
    assert_eq!(c.lhs, Symbol::func("g", 0));
    assert_eq!(c.rhs, ex("(r*r'' - r'^2)/r^2", e));
    assert!(r.polynomial_with_constraint && !r.polynomial_without_constraint);
}

#[test]
fn resolution_xxvi() {
    let e = get_equation("Ince-XXVI").unwrap();
    let r = run_resolution(e, e.resolution("P2", Some("corrected")).unwrap()).unwrap();
    assert_eq!(
        r.constraint.as_ref().unwrap().rhs,
        ex("6*q^2 + C1*t + C2", e)
    );
    assert!(r.polynomial_with_constraint && !r.polynomial_without_constraint);
    assert_eq!(r.chart_agreement, Some(Ok("printed".to_string())));
    assert!(run_resolution(e, e.resolution("P2", Some("printed")).unwrap()).is_err());
}

#[test]
fn zero_field_has_no_points() {
    let s = xy_scope();
    let f = VectorField::new(
        "U0",
        vec![Symbol::var("x"), Symbol::var("y")],
        vec![Expr::zero(), parse("0", &s).unwrap()],
    );
    let charts = extend_to_p2(&f, None).unwrap();
    assert!(find_accessible_singularities(&charts).unwrap().is_empty());
    assert!(obstruction(&charts[1]).unwrap().is_zero());
}

#[test]
fn three_dimensional_systems_rejected() {
    let c = ince_core::registry::Catalog::bundled().unwrap();
    let f = c.get("3rd").unwrap().system.clone().unwrap();
    assert!(matches!(
        extend_to_p2(&f, None),
        Err(GeometryError::NotPlanar(_))
    ));
}

#[test]
fn exact_integration_solves_jet_equation() {
    let sc = Scope::new().with_params(&["C1", "C2"]).with_funcs(&["q"]);
    let k = parse("C1*t + C2", &sc).unwrap();
    let obs = parse("q'''' - 12*q*q'' - 12*q'^2", &sc).unwrap();
    let c = derive_constraint(&obs, &Symbol::func("q", 2), Some(&k)).unwrap();
    assert_eq!(c.rhs, parse("6*q^2 + C1*t + C2", &sc).unwrap());
    // a kernel that survives two derivatives is refused
    let bad = parse("C1*t^2", &sc).unwrap();
    assert!(derive_constraint(&obs, &Symbol::func("q", 2), Some(&bad)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integrate_exact_inverts_d_dt(a in -6i64..=6, b in -6i64..=6, c in -6i64..=6, d in -6i64..=6) {
        let sc = Scope::new().with_funcs(&["q"]);
        let p = parse(&format!("{a}*q^2*q' + {b}*q'^2 + {c}*t*q + {d}*t^2"), &sc).unwrap();
        let dp = total_derivative(&p, &Default::default(), None).unwrap();
        let back = integrate_exact(&dp, "q").unwrap();
        let dback = total_derivative(&back, &Default::default(), None).unwrap();
        prop_assert_eq!(dback, dp);
    }

    #[test]
    fn blow_up_then_down(a in -4i64..=4, b in -4i64..=4, c in -4i64..=4) {
        let s = xy_scope();
        let (x, y) = (Symbol::var("x"), Symbol::var("y"));
        let f = VectorField::new(
            "U0",
            vec![x, y],
            vec![parse(&format!("{a}*x*y + {b}"), &s).unwrap(), parse(&format!("{c}*y^2 + x"), &s).unwrap()],
        )
        .with_divisor(0);
        let step = Step { kind: StepKind::Blowup, map: vec![parse("x", &s).unwrap(), parse("y/x", &s).unwrap()], center: Some(vec![Expr::zero(), Expr::zero()]), divisor: 0 };
        let up = apply_step(&f, &step, 1).unwrap();
        let down = blow_down(&up, &step, Some(0)).unwrap();
        prop_assert_eq!(down.rhs, f.rhs);
    }
}
