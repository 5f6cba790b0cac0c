use ince_core::expr::{parse, Bindings, Expr, Symbol};
use ince_core::registry::{get_equation, load_catalog, Catalog, RegistryError, Status};

fn cat() -> &'static Catalog {
    Catalog::bundled().expect("bundled catalog loads")
}

#[test]
fn bundled_counts() {
    let c = cat();
    assert_eq!(c.entries().len(), 36);
    let verified = c
        .entries()
        .iter()
        .filter(|e| e.status == Status::Verified)
        .count();
    let stubs = c
        .entries()
        .iter()
        .filter(|e| e.status == Status::Stub)
        .count();
    assert_eq!((verified, stubs), (22, 14));
    for e in c.entries() {
        assert!(e.ode_variant(None).is_some(), "{} has an equation", e.id);
    }
    assert_eq!(c.related().len(), 3);
    assert_eq!(c.links().len(), 3);
}

#[test]
fn ids_follow_table_order() {
    let ids: Vec<&str> = cat().entries().iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids[0], "Ince-I");
    assert_eq!(ids[9], "Ince-X");
    assert_eq!(ids[35], "Ince-XXXVI");
}

#[test]
fn hamiltonian_of_xii() {
    let e = get_equation("Ince-XII").unwrap();
    // typed independently of the catalog text
    let h = parse(
        "x^2*y^2/2 - alpha*x^2/2 - gamma*x*y/delta + delta*y - beta*x",
        &e.scope,
    )
    .unwrap();
    assert_eq!(e.hamiltonian.as_ref().unwrap(), &h);
    assert_eq!(e.surface.as_deref(), Some("D6(1)"));
}

#[test]
fn xiii_is_stub_with_note() {
    let e = get_equation("Ince-XIII").unwrap();
    assert_eq!(e.status, Status::Stub);
    assert!(e.note.as_deref().unwrap().contains("Painlevé III"));
    assert!(e.system.is_none() && e.transform.is_none());
}

#[test]
fn unknown_id() {
    assert_eq!(
        get_equation("Ince-99").unwrap_err(),
        RegistryError::UnknownId("Ince-99".into())
    );
}

#[test]
fn empty_document() {
    assert!(load_catalog("").unwrap().is_empty());
}

#[test]
fn undeclared_function() {
    let src = "[[entry]]\nid = \"t\"\nstatus = \"stub\"\node = \"q'''*u\"\n";
    match load_catalog(src) {
        Err(RegistryError::UndeclaredSymbol { id, name, .. }) => {
            assert_eq!(id, "t");
            assert!(name.starts_with('q'));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn parse_error_has_location() {
    let src = "[[entry]]\nid = \"t\"\node = \"u + * du\"\n";
    assert!(matches!(
        load_catalog(src),
        Err(RegistryError::Parse { pos: 4, .. })
    ));
}

#[test]
fn duplicate_id() {
    let src = "[[entry]]\nid = \"a\"\node = \"u\"\n[[entry]]\nid = \"a\"\node = \"u\"\n";
    assert_eq!(
        load_catalog(src).unwrap_err(),
        RegistryError::DuplicateId("a".into())
    );
}

#[test]
fn unknown_field_rejected() {
    let src = "[[entry]]\nid = \"a\"\node = \"u\"\ncolour = \"red\"\n";
    assert!(matches!(load_catalog(src), Err(RegistryError::Toml(_))));
}

#[test]
fn stub_with_system_rejected() {
    let src = "[[entry]]\nid = \"a\"\nstatus = \"stub\"\node = \"u\"\nsystem = [\"y\", \"x\"]\n";
    assert!(matches!(
        load_catalog(src),
        Err(RegistryError::Invalid { .. })
    ));
}

#[test]
fn wrong_format_header() {
    assert!(matches!(
        Catalog::load("format = \"other\"\n"),
        Err(RegistryError::BadFormat(_))
    ));
}

#[test]
fn round_trip_toml_and_json() {
    let c = cat();
    let again = Catalog::load(&c.to_toml()).unwrap();
    assert_eq!(&again, c);
    let raw: ince_core::registry::raw::RawCatalog = serde_json::from_str(&c.to_json()).unwrap();
    assert_eq!(&Catalog::from_raw(&raw).unwrap(), c);
}

#[test]
fn stored_inverses_compose_to_identity() {
    let [u, du] = ince_core::registry::ode_vars();
    let mut checked = 0;
    for e in cat().entries() {
        let (Some(t), Some(inv)) = (&e.transform, &e.inverse) else {
            continue;
        };
        let mut b = Bindings::new();
        b.insert(u.clone(), inv[0].clone());
        b.insert(du.clone(), inv[1].clone());
        for (ti, v) in t.iter().zip(&e.vars) {
            assert_eq!(
                ti.substitute(&b).unwrap(),
                Expr::symbol(v.clone()),
                "{}",
                e.id
            );
        }
        checked += 1;
    }
    assert_eq!(checked, 19);
}

#[test]
fn constraints_compiled() {
    let x = get_equation("Ince-X").unwrap();
    let q4 = Expr::func("q", 4);
    let r = x.constraints.reduce(&q4).unwrap();
    assert!(!r.contains(&Symbol::func("q", 2)));
    let xv = get_equation("Ince-XV").unwrap();
    assert!(xv
        .constraints
        .reduce(&Expr::func("g", 0))
        .unwrap()
        .contains(&Symbol::func("r", 2)));
}

#[test]
fn radicals_and_aliases() {
    let e = get_equation("Ince-XIV").unwrap();
    let a = parse("sqrt(-r)^2 + r", &e.scope).unwrap();
    assert!(a.is_zero());
    let s = get_equation("Ince-XXIII").unwrap();
    assert!(parse("sqrt(-beta)^2 + beta", &s.scope).unwrap().is_zero());
}

#[test]
fn resolution_scripts_and_index_points() {
    let x = get_equation("Ince-X").unwrap();
    let p1 = x.resolution("P1", Some("free-jet")).unwrap();
    assert_eq!(p1.steps.len(), 10);
    assert_eq!(p1.matches_chart, Some(2));
    assert!(p1.swap);
    assert_eq!(x.index_points.len(), 2);
    let xv = get_equation("Ince-XV").unwrap();
    assert_eq!(
        xv.resolution("P1", Some("swapped")).unwrap().steps[2].divisor,
        1
    );
}
