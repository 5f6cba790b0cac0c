use ince_core::expr::{parse, Expr};
use ince_core::registry::{get_equation, load_catalog, Catalog, EquationEntry, Status};
use ince_core::verifier::mutation::mutation_suite;
use ince_core::verifier::*;
use proptest::prelude::*;

fn cat() -> &'static Catalog {
    Catalog::bundled().unwrap()
}

fn entry(id: &str) -> EquationEntry {
    get_equation(id).unwrap().clone()
}

#[test]
fn every_transform_passes() {
    let mut n = 0;
    for e in cat()
        .entries()
        .iter()
        .filter(|e| e.status == Status::Verified)
    {
        let r = verify_transform(e);
        assert!(r.passed(), "{}", r.to_text_line());
        n += 1;
    }
    assert_eq!(n, 22);
}

#[test]
fn sign_flip_in_v_fails() {
    let mut e = entry("Ince-V");
    let sys = e.system.as_mut().unwrap();
    // -x^2 y - q x + 1  ->  x^2 y - q x + 1
    sys.rhs[0] = parse("x^2*y - q*x + 1", &e.scope).unwrap();
    let r = verify_transform(&e);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.residual.iter().any(|c| probe_nonzero(c, 20, 1)));
}

#[test]
fn xii_printed_variant_fails_delta_squared_passes() {
    let mut e = entry("Ince-XII");
    let r = verify_transform(&e);
    assert!(r.passed());
    assert_eq!(r.variant.as_deref(), Some("delta-squared"));
    assert!(
        r.notes.iter().any(|n| n.contains("printed")),
        "{:?}",
        r.notes
    );

    e.ode.retain(|v| v.name == "printed");
    let r = verify_transform(&e);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.residual.iter().any(|c| !c.is_zero()));
}

#[test]
fn xxxv_list_variant_fails_alone() {
    let mut e = entry("Ince-XXXV");
    e.ode.retain(|v| v.name == "list");
    assert_eq!(verify_transform(&e).verdict, Verdict::Fail);
}

#[test]
fn scaled_hamiltonian_fails() {
    let mut e = entry("Ince-XVIII");
    assert!(verify_hamiltonian_form(&e).passed());
    let h = e.hamiltonian.clone().unwrap();
    e.hamiltonian = Some(h.scale(2));
    let r = verify_hamiltonian_form(&e);
    assert_eq!(r.verdict, Verdict::Fail);
    // x' = H_y gives x y vs 2 x y, so the residual is x y up to sign
    let xy = parse("x*y", &e.scope).unwrap();
    assert!(
        r.residual.iter().any(|c| *c == xy || *c == xy.neg()),
        "{}",
        r.residual_string()
    );
}

#[test]
fn xii_checks_all_pass() {
    let rs = verify_entry(get_equation("Ince-XII").unwrap());
    let checks: Vec<&str> = rs.iter().map(|r| r.check.as_str()).collect();
    for c in ["transform", "hamiltonian-form", "first-integral"] {
        assert!(checks.contains(&c), "{checks:?}");
    }
    assert_eq!(
        rs.iter()
            .filter(|r| r.check.starts_with("symmetry:"))
            .count(),
        3
    );
    assert_eq!(
        rs.iter()
            .filter(|r| r.check.starts_with("involution:"))
            .count(),
        3
    );
    for r in &rs {
        assert!(r.passed(), "{}", r.to_text_line());
    }
}

#[test]
fn s2_without_parameter_action_fails() {
    let mut e = entry("Ince-XXX");
    let k = e.symmetries.iter().position(|s| s.name == "s2").unwrap();
    assert!(verify_symmetry(&e, &e.symmetries[k]).passed());
    e.symmetries[k].params.clear();
    let r = verify_symmetry(&e, &e.symmetries[k]);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.residual.iter().any(|c| probe_nonzero(c, 20, 3)));
}

#[test]
fn xxx_s0_printed_fails_corrected_named() {
    let e = get_equation("Ince-XXX").unwrap();
    let r = verify_symmetry_group(e, "s0").unwrap();
    assert!(r.passed());
    assert_eq!(r.variant.as_deref(), Some("corrected"));
    let printed = e
        .symmetries
        .iter()
        .find(|s| s.name == "s0" && s.variant == "printed")
        .unwrap();
    assert_eq!(verify_symmetry(e, printed).verdict, Verdict::Fail);
}

#[test]
fn arity_mismatch_is_a_failure() {
    let c = cat();
    let third = c.get("3rd").unwrap();
    let printed = third
        .symmetries
        .iter()
        .find(|s| s.name == "s1" && s.variant == "printed")
        .unwrap();
    let r = verify_symmetry(third, printed);
    assert_eq!(r.verdict, Verdict::Fail);
    // two components for three variables
    assert_eq!(r.residual, vec![Expr::int(-1)]);
    assert!(verify_symmetry_group(third, "s1").unwrap().passed());
}

#[test]
fn riccati_triangular() {
    for id in ["Ince-VI", "Ince-XXIV", "Ince-XXVII"] {
        assert!(
            verify_riccati_triangular(get_equation(id).unwrap()).passed(),
            "{id}"
        );
    }
    let r = verify_riccati_triangular(get_equation("Ince-VII").unwrap());
    assert_eq!(r.verdict, Verdict::Fail);
    // d/dx of 2x^2 - y^2
    assert_eq!(
        r.residual,
        vec![parse("4*x", &get_equation("Ince-VII").unwrap().scope).unwrap()]
    );
}

#[test]
fn explicit_solutions() {
    for id in ["Ince-XXII", "Ince-XXXII"] {
        assert!(
            verify_explicit_solution(get_equation(id).unwrap()).passed(),
            "{id}"
        );
    }
    let mut e = entry("Ince-XXII");
    e.solutions[0].values[1] = parse("1/(t + c1)", &e.scope).unwrap();
    assert_eq!(verify_explicit_solution(&e).verdict, Verdict::Fail);
}

#[test]
fn first_integrals_conserved() {
    for id in [
        "Ince-XII",
        "Ince-XVIII",
        "Ince-XXI",
        "Ince-XXIII",
        "Ince-XXX",
    ] {
        let r = verify_first_integral(get_equation(id).unwrap());
        assert!(r.passed(), "{}", r.to_text_line());
    }
}

#[test]
fn links_chain() {
    let rs = verify_links(cat());
    assert!(!rs.is_empty());
    for r in &rs {
        assert!(r.passed(), "{}", r.to_text_line());
    }
    let first = &rs[0];
    assert_eq!(first.variant.as_deref(), Some("sign-corrected"));
    let printed = cat()
        .links()
        .iter()
        .find(|l| l.variant == "printed")
        .unwrap();
    assert_eq!(verify_link(cat(), printed).verdict, Verdict::Fail);
}

#[test]
fn stubs_are_skipped() {
    let rs = verify_entry(get_equation("Ince-XIII").unwrap());
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0].verdict, Verdict::Skipped);
}

#[test]
fn catalog_has_no_failures_and_failures_are_sound() {
    let rs = verify_catalog(cat());
    assert!(
        rs.iter().all(|r| r.verdict != Verdict::Fail),
        "{:?}",
        rs.iter()
            .filter(|r| !r.passed())
            .map(|r| r.to_text_line())
            .collect::<Vec<_>>()
    );
    // every failing variant behind a PASS has a residual that evaluates away from zero
    let e = get_equation("Ince-XXIII").unwrap();
    let mut list = e.clone();
    list.ode.retain(|v| v.name == "list");
    let r = verify_transform(&list);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.residual.iter().any(|c| probe_nonzero(c, 20, 5)));
}

#[test]
fn variants_pass_exclusively_where_catalogued() {
    // a passing group names the passing variant and lists the failing ones
    for (id, good, bad) in [
        ("Ince-XII", "delta-squared", "printed"),
        ("Ince-XXXV", "section", "list"),
        ("Ince-XXIII", "section", "list"),
    ] {
        let r = verify_transform(get_equation(id).unwrap());
        assert_eq!(r.variant.as_deref(), Some(good), "{id}");
        assert!(
            r.notes.iter().any(|n| n.contains(bad)),
            "{id}: {:?}",
            r.notes
        );
    }
}

#[test]
fn mutations_are_caught() {
    let ms = mutation_suite(cat(), 50, 2024);
    assert_eq!(ms.len(), 50);
    let missed: Vec<_> = ms.iter().filter(|m| !m.caught()).collect();
    assert!(missed.is_empty(), "{missed:?}");
}

#[test]
fn reports_serialize_with_uppercase_verdicts() {
    let r = verify_transform(get_equation("Ince-VII").unwrap());
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["id"], "Ince-VII");
    assert_eq!(v["residual"], "(0, 0)");
}

fn hamiltonian_doc(h: &str, xs: &str, ys: &str) -> String {
    format!("[[entry]]\nid = \"h\"\nvars = [\"x\", \"y\"]\nsystem = [\"{xs}\", \"{ys}\"]\nhamiltonian = \"{h}\"\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // H = a x^2 y + b x y^2 + c x^2 + d y^3: x' = H_y, y' = -H_x
    #[test]
    fn hamiltonian_systems_pass_and_perturbations_fail(a in -5i64..=5, b in -5i64..=5, c in -5i64..=5, d in 1i64..=5) {
        let h = format!("{a}*x^2*y + {b}*x*y^2 + {c}*x^2 + {d}*y^3");
        let xs = format!("{a}*x^2 + 2*{b}*x*y + 3*{d}*y^2");
        let ys = format!("-(2*{a}*x*y + {b}*y^2 + 2*{c}*x)");
        let good = &load_catalog(&hamiltonian_doc(&h, &xs, &ys)).unwrap()[0];
        prop_assert!(verify_hamiltonian_form(good).passed());
        prop_assert!(verify_first_integral(good).passed());
        let bad_ys = format!("{ys} + x");
        let bad = &load_catalog(&hamiltonian_doc(&h, &xs, &bad_ys)).unwrap()[0];
        prop_assert_eq!(verify_hamiltonian_form(bad).verdict, Verdict::Fail);
        prop_assert_eq!(verify_first_integral(bad).verdict, Verdict::Fail);
    }
}
