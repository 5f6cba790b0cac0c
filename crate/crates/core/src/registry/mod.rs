//! The catalog of Ince equations: systems, transformations, symmetries, charts and
//! resolution scripts, loaded from a TOML document.
//!
//! ```text
//! format = "ince-catalog"      optional header
//! version = 1
//!
//! [[entry]]                    one block per equation
//! id = "Ince-X"
//! params = ["C1", "C2"]        parameters, function symbols, radicals
//! funcs = ["q"]
//! ode = "-u*du + u^3 - 12*q*u + 12*q'"     u'' in terms of u, du, t
//! transform = ["u", "du"]      (x, y) in terms of (u, du)
//! system = ["y", "-x*y + x^3 - 12*q*x + 12*q'"]
//! [[entry.constraints]]        lhs is a derivative of a function symbol
//! [[entry.symmetries]] [[entry.atlas]] [[entry.resolutions]] [[entry.index_points]]
//!
//! [[related]]                  auxiliary systems (same fields as an entry)
//! [[link]]                     maps between systems
//! ```

pub mod raw;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    parse, parse_symbol, Bindings, ConstraintRule, ConstraintSet, Expr, ExprError, Scope, Symbol,
};
use crate::field::VectorField;
use raw::*;

pub const FORMAT: &str = "ince-catalog";
pub const VERSION: u32 = 1;

/// The catalog shipped with the crate.
pub const BUNDLED: &str = include_str!("../../catalog/ince.toml");

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RegistryError {
    #[error("catalog is not valid TOML: {0}")]
    Toml(String),
    #[error("{id}: {field}: parse error at {pos}: {msg}")]
    Parse {
        id: String,
        field: String,
        pos: usize,
        msg: String,
    },
    #[error("{id}: {field}: undeclared symbol {name}")]
    UndeclaredSymbol {
        id: String,
        field: String,
        name: String,
    },
    #[error("{id}: {field}: {msg}")]
    Invalid {
        id: String,
        field: String,
        msg: String,
    },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("unsupported catalog format: {0}")]
    BadFormat(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Stub,
    Related,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::Stub => "stub",
            Status::Related => "related",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeVariant {
    pub name: String,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub params: Vec<Symbol>,
    pub values: Vec<Expr>,
}

/// A birational map of state and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Symmetry {
    pub name: String,
    pub variant: String,
    pub map: Vec<Expr>,
    pub params: Bindings,
    /// Images of radicals whose squares change under `params`.
    pub radicals: Bindings,
    pub involution: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: u32,
    pub variant: String,
    pub vars: Vec<Symbol>,
    pub forward: Vec<Expr>,
    pub inverse: Option<Vec<Expr>>,
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Blowup,
    Change,
}

/// One step of a resolution, written in the previous coordinates (named like the
/// entry's state variables).
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub kind: StepKind,
    pub map: Vec<Expr>,
    pub center: Option<Vec<Expr>>,
    pub divisor: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolutionScript {
    pub name: String,
    pub variant: String,
    pub start: String,
    pub steps: Vec<Step>,
    pub solve_for: Option<Symbol>,
    /// Integration constants added to the integrated obstruction.
    pub kernel: Option<Expr>,
    pub matches_chart: Option<u32>,
    pub swap: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexPoint {
    pub label: String,
    pub resolution: String,
    pub variant: String,
    pub after_step: usize,
    pub point: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct EquationEntry {
    pub id: String,
    pub status: Status,
    pub surface: Option<String>,
    pub note: Option<String>,
    pub scope: Scope,
    pub vars: Vec<Symbol>,
    pub constraints: ConstraintSet,
    pub ode: Vec<OdeVariant>,
    pub transform: Option<Vec<Expr>>,
    pub inverse: Option<Vec<Expr>>,
    pub system: Option<VectorField>,
    pub hamiltonian: Option<Expr>,
    pub integrals: Vec<Expr>,
    pub riccati: bool,
    pub solutions: Vec<Solution>,
    pub symmetries: Vec<Symmetry>,
    pub atlas: Vec<Chart>,
    pub resolutions: Vec<ResolutionScript>,
    pub index_points: Vec<IndexPoint>,
}

impl PartialEq for EquationEntry {
    fn eq(&self, o: &Self) -> bool {
        let rules = |c: &ConstraintSet| c.rules().cloned().collect::<Vec<_>>();
        self.id == o.id
            && self.status == o.status
            && self.surface == o.surface
            && self.note == o.note
            && self.vars == o.vars
            && rules(&self.constraints) == rules(&o.constraints)
            && self.ode == o.ode
            && self.transform == o.transform
            && self.inverse == o.inverse
            && self.system == o.system
            && self.hamiltonian == o.hamiltonian
            && self.integrals == o.integrals
            && self.riccati == o.riccati
            && self.solutions == o.solutions
            && self.symmetries == o.symmetries
            && self.atlas == o.atlas
            && self.resolutions == o.resolutions
            && self.index_points == o.index_points
    }
}

/// State variables of the scalar equation.
pub fn ode_vars() -> [Symbol; 2] {
    [Symbol::var("u"), Symbol::var("du")]
}

impl EquationEntry {
    /// The ODE variant with the given name, or the first one.
    pub fn ode_variant(&self, name: Option<&str>) -> Option<&OdeVariant> {
        match name {
            Some(n) => self.ode.iter().find(|v| v.name == n),
            None => self.ode.first(),
        }
    }

    pub fn param_symbols(&self) -> Vec<Symbol> {
        self.scope.params().map(|p| Symbol::param(p)).collect()
    }

    /// Symbols that appear in the system or Hamiltonian besides state variables.
    pub fn is_autonomous(&self, e: &Expr) -> bool {
        e.symbols()
            .iter()
            .all(|s| !matches!(s, Symbol::Time | Symbol::Func(..)))
    }

    pub fn chart(&self, id: u32, variant: Option<&str>) -> Option<&Chart> {
        self.atlas
            .iter()
            .find(|c| c.id == id && variant.map(|v| v == c.variant).unwrap_or(true))
    }

    /// Chart ids in catalog order, each once.
    pub fn chart_ids(&self) -> Vec<u32> {
        let mut seen = Vec::new();
        for c in &self.atlas {
            if !seen.contains(&c.id) {
                seen.push(c.id);
            }
        }
        seen
    }

    pub fn resolution(&self, name: &str, variant: Option<&str>) -> Option<&ResolutionScript> {
        self.resolutions
            .iter()
            .find(|r| r.name == name && variant.map(|v| v == r.variant).unwrap_or(true))
    }

    /// The first-order system of the scalar equation: `x = u`, `y = u'`.
    pub fn companion_system(&self) -> Option<VectorField> {
        let ode = self.ode.first()?;
        let [u, du] = ode_vars();
        let (x, y) = (Symbol::var("x"), Symbol::var("y"));
        let mut b = Bindings::new();
        b.insert(u, Expr::symbol(x.clone()));
        b.insert(du, Expr::symbol(y.clone()));
        let rhs = ode.rhs.substitute(&b).ok()?;
        Some(VectorField::new(
            "U0",
            vec![x, y.clone()],
            vec![Expr::symbol(y), rhs],
        ))
    }

    pub fn to_raw(&self) -> RawEntry {
        let txt = |v: &[Expr]| v.iter().map(|e| e.to_text()).collect::<Vec<_>>();
        let names = |v: &[Symbol]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let bmap = |b: &Bindings| {
            b.iter()
                .map(|(k, v)| (k.to_string(), v.to_text()))
                .collect::<BTreeMap<_, _>>()
        };
        let mut ode = self.ode.iter();
        let first = ode.next();
        RawEntry {
            id: self.id.clone(),
            status: Some(self.status.as_str().to_string()),
            surface: self.surface.clone(),
            note: self.note.clone(),
            vars: Some(names(&self.vars)),
            params: self.scope.params().cloned().collect(),
            funcs: self.scope.funcs().cloned().collect(),
            radicals: self
                .scope
                .algs()
                .iter()
                .map(|a| RawRadical {
                    name: a.name().to_string(),
                    square: Expr::from_poly(a.square().clone()).to_text(),
                })
                .collect(),
            aliases: self
                .scope
                .aliases()
                .iter()
                .map(|(a, v)| RawAlias {
                    arg: a.to_text(),
                    value: v.to_text(),
                })
                .collect(),
            constraints: self
                .constraints
                .rules()
                .map(|r| RawConstraint {
                    lhs: Symbol::func(&r.base, r.order).to_string(),
                    rhs: r.rhs.to_text(),
                })
                .collect(),
            ode: first.map(|o| o.rhs.to_text()),
            ode_label: first.map(|o| o.name.clone()),
            variants: ode
                .map(|o| RawVariant {
                    name: o.name.clone(),
                    ode: o.rhs.to_text(),
                })
                .collect(),
            transform: self.transform.as_deref().map(txt),
            inverse: self.inverse.as_deref().map(txt),
            system: self.system.as_ref().map(|f| txt(&f.rhs)),
            hamiltonian: self.hamiltonian.as_ref().map(|h| h.to_text()),
            integrals: txt(&self.integrals),
            riccati: self.riccati,
            solutions: self
                .solutions
                .iter()
                .map(|s| RawSolution {
                    params: names(&s.params),
                    values: txt(&s.values),
                })
                .collect(),
            symmetries: self
                .symmetries
                .iter()
                .map(|s| RawSymmetry {
                    name: s.name.clone(),
                    variant: Some(s.variant.clone()),
                    map: txt(&s.map),
                    params: bmap(&s.params),
                    radicals: bmap(&s.radicals),
                    involution: s.involution,
                })
                .collect(),
            atlas: self
                .atlas
                .iter()
                .map(|c| RawChart {
                    chart: c.id,
                    variant: Some(c.variant.clone()),
                    vars: Some(names(&c.vars)),
                    forward: txt(&c.forward),
                    inverse: c.inverse.as_deref().map(txt),
                    note: c.note.clone(),
                })
                .collect(),
            resolutions: self
                .resolutions
                .iter()
                .map(|r| RawResolution {
                    name: r.name.clone(),
                    variant: Some(r.variant.clone()),
                    start: r.start.clone(),
                    steps: r
                        .steps
                        .iter()
                        .map(|s| RawStep {
                            kind: match s.kind {
                                StepKind::Blowup => "blowup".into(),
                                StepKind::Change => "change".into(),
                            },
                            map: txt(&s.map),
                            center: s.center.as_deref().map(txt),
                            divisor: Some(s.divisor),
                        })
                        .collect(),
                    solve_for: r.solve_for.as_ref().map(|s| s.to_string()),
                    kernel: r.kernel.as_ref().map(|k| k.to_text()),
                    matches_chart: r.matches_chart,
                    swap: r.swap,
                })
                .collect(),
            index_points: self
                .index_points
                .iter()
                .map(|p| RawIndexPoint {
                    label: p.label.clone(),
                    resolution: p.resolution.clone(),
                    variant: Some(p.variant.clone()),
                    after_step: p.after_step,
                    point: txt(&p.point),
                })
                .collect(),
        }
    }
}

/// A map from one catalogued system to another, checked as a pullback.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub from: String,
    pub to: String,
    pub variant: String,
    pub map: Vec<Expr>,
    /// State variables of `from` replaced by known functions of `t` before mapping.
    pub substitute: Bindings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    entries: Vec<EquationEntry>,
    related: Vec<EquationEntry>,
    links: Vec<Link>,
}

impl Catalog {
    pub fn load(src: &str) -> Result<Catalog, RegistryError> {
        let raw: RawCatalog =
            toml::from_str(src).map_err(|e| RegistryError::Toml(e.to_string()))?;
        Catalog::from_raw(&raw)
    }

    /// The bundled catalog, compiled once.
    pub fn bundled() -> Result<&'static Catalog, RegistryError> {
        static CELL: OnceLock<Result<Catalog, RegistryError>> = OnceLock::new();
        CELL.get_or_init(|| Catalog::load(BUNDLED))
            .as_ref()
            .map_err(|e| e.clone())
    }

    pub fn from_raw(raw: &RawCatalog) -> Result<Catalog, RegistryError> {
        if let Some(f) = &raw.format {
            if f != FORMAT {
                return Err(RegistryError::BadFormat(f.clone()));
            }
        }
        if let Some(v) = raw.version {
            if v != VERSION {
                return Err(RegistryError::BadFormat(format!("version {v}")));
            }
        }
        let mut ids = BTreeSet::new();
        for e in raw.entries.iter().chain(&raw.related) {
            if !ids.insert(e.id.clone()) {
                return Err(RegistryError::DuplicateId(e.id.clone()));
            }
        }
        let entries = raw
            .entries
            .iter()
            .map(|e| compile_entry(e, false))
            .collect::<Result<Vec<_>, _>>()?;
        let related = raw
            .related
            .iter()
            .map(|e| compile_entry(e, true))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cat = Catalog {
            entries,
            related,
            links: Vec::new(),
        };
        for l in &raw.links {
            let link = compile_link(&cat, l)?;
            cat.links.push(link);
        }
        Ok(cat)
    }

    /// Entries of the table, in catalog order.
    pub fn entries(&self) -> &[EquationEntry] {
        &self.entries
    }

    /// Auxiliary systems reached through links.
    pub fn related(&self) -> &[EquationEntry] {
        &self.related
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub(crate) fn links_mut(&mut self) -> &mut [Link] {
        &mut self.links
    }

    pub fn all(&self) -> impl Iterator<Item = &EquationEntry> {
        self.entries.iter().chain(&self.related)
    }

    pub fn get(&self, id: &str) -> Result<&EquationEntry, RegistryError> {
        self.all()
            .find(|e| e.id == id)
            .ok_or_else(|| RegistryError::UnknownId(id.to_string()))
    }

    pub fn to_raw(&self) -> RawCatalog {
        RawCatalog {
            format: Some(FORMAT.to_string()),
            version: Some(VERSION),
            entries: self.entries.iter().map(|e| e.to_raw()).collect(),
            related: self.related.iter().map(|e| e.to_raw()).collect(),
            links: self
                .links
                .iter()
                .map(|l| RawLink {
                    from: l.from.clone(),
                    to: l.to.clone(),
                    variant: Some(l.variant.clone()),
                    map: l.map.iter().map(|e| e.to_text()).collect(),
                    substitute: l
                        .substitute
                        .iter()
                        .map(|(k, v)| (k.to_string(), v.to_text()))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("catalog serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("catalog serializes")
    }
}

/// Loads a catalog document and returns its table entries.
pub fn load_catalog(src: &str) -> Result<Vec<EquationEntry>, RegistryError> {
    Ok(Catalog::load(src)?.entries)
}

/// Looks an entry up in the bundled catalog.
pub fn get_equation(id: &str) -> Result<&'static EquationEntry, RegistryError> {
    Catalog::bundled()?.get(id)
}

struct Ctx<'a> {
    id: &'a str,
    scope: &'a Scope,
}

impl Ctx<'_> {
    fn err(&self, field: &str, e: ExprError) -> RegistryError {
        match e {
            ExprError::Parse { pos, msg } => RegistryError::Parse {
                id: self.id.to_string(),
                field: field.to_string(),
                pos,
                msg,
            },
            ExprError::UndeclaredSymbol(name) => RegistryError::UndeclaredSymbol {
                id: self.id.to_string(),
                field: field.to_string(),
                name,
            },
            other => self.invalid(field, other.to_string()),
        }
    }

    fn invalid(&self, field: &str, msg: String) -> RegistryError {
        RegistryError::Invalid {
            id: self.id.to_string(),
            field: field.to_string(),
            msg,
        }
    }

    fn expr(&self, field: &str, s: &str) -> Result<Expr, RegistryError> {
        parse(s, self.scope).map_err(|e| self.err(field, e))
    }

    fn exprs(&self, field: &str, v: &[String]) -> Result<Vec<Expr>, RegistryError> {
        v.iter()
            .enumerate()
            .map(|(i, s)| self.expr(&format!("{field}[{i}]"), s))
            .collect()
    }

    fn symbol(&self, field: &str, s: &str) -> Result<Symbol, RegistryError> {
        parse_symbol(s, self.scope).map_err(|e| self.err(field, e))
    }

    fn bindings(
        &self,
        field: &str,
        m: &BTreeMap<String, String>,
    ) -> Result<Bindings, RegistryError> {
        let mut b = Bindings::new();
        for (k, v) in m {
            let f = format!("{field}.{k}");
            b.insert(self.symbol(&f, k)?, self.expr(&f, v)?);
        }
        Ok(b)
    }
}

fn default_chart_vars(j: u32, n: usize) -> Vec<String> {
    ["x", "y", "z"]
        .iter()
        .take(n)
        .map(|v| format!("{v}{j}"))
        .collect()
}

fn compile_entry(r: &RawEntry, related: bool) -> Result<EquationEntry, RegistryError> {
    let id = r.id.as_str();
    let vars: Vec<String> = r
        .vars
        .clone()
        .unwrap_or_else(|| vec!["x".into(), "y".into()]);
    let mut scope = Scope::new();
    for v in &vars {
        scope.add_var(v);
    }
    let has_ode = r.ode.is_some();
    if has_ode {
        scope.add_var("u");
        scope.add_var("du");
    }
    for c in &r.atlas {
        for v in c
            .vars
            .clone()
            .unwrap_or_else(|| default_chart_vars(c.chart, vars.len()))
        {
            scope.add_var(&v);
        }
    }
    for p in &r.params {
        scope.add_param(p);
    }
    for f in &r.funcs {
        scope.add_func(f);
    }
    for a in &r.radicals {
        // radicals are declared in order; later squares may not use earlier radicals
        let s = scope.clone();
        let c = Ctx { id, scope: &s };
        c.expr("radicals", &a.square)?;
        scope
            .add_alg(&a.name, &a.square)
            .map_err(|e| c.err("radicals", e))?;
    }
    for a in &r.aliases {
        let s = scope.clone();
        scope
            .add_alias(&a.arg, &a.value)
            .map_err(|e| Ctx { id, scope: &s }.err("aliases", e))?;
    }
    let cx = Ctx { id, scope: &scope };
    let state: Vec<Symbol> = vars.iter().map(|v| Symbol::var(v)).collect();

    let mut rules = Vec::new();
    for c in &r.constraints {
        let lhs = cx.symbol("constraints.lhs", &c.lhs)?;
        let Symbol::Func(base, order) = &lhs else {
            return Err(cx.invalid("constraints.lhs", format!("{lhs} is not a function symbol")));
        };
        let rhs = cx.expr("constraints.rhs", &c.rhs)?;
        rules.push(ConstraintRule::new(base, *order, rhs).map_err(|e| cx.err("constraints", e))?);
    }
    let constraints = ConstraintSet::new(rules).map_err(|e| cx.err("constraints", e))?;

    let mut ode = Vec::new();
    if let Some(o) = &r.ode {
        ode.push(OdeVariant {
            name: r.ode_label.clone().unwrap_or_else(|| "printed".into()),
            rhs: cx.expr("ode", o)?,
        });
    }
    for v in &r.variants {
        if ode.iter().any(|o: &OdeVariant| o.name == v.name) {
            return Err(cx.invalid("variants", format!("duplicate variant {}", v.name)));
        }
        ode.push(OdeVariant {
            name: v.name.clone(),
            rhs: cx.expr(&format!("variants.{}", v.name), &v.ode)?,
        });
    }

    let arity = |field: &str, v: &[String], n: usize| -> Result<(), RegistryError> {
        if v.len() != n {
            return Err(cx.invalid(field, format!("expected {n} components, found {}", v.len())));
        }
        Ok(())
    };
    let transform = match &r.transform {
        Some(t) => {
            arity("transform", t, vars.len())?;
            Some(cx.exprs("transform", t)?)
        }
        None => None,
    };
    let inverse = match &r.inverse {
        Some(t) => {
            arity("inverse", t, 2)?;
            Some(cx.exprs("inverse", t)?)
        }
        None => None,
    };
    let system = match &r.system {
        Some(s) => {
            arity("system", s, vars.len())?;
            Some(VectorField::new(
                "U0",
                state.clone(),
                cx.exprs("system", s)?,
            ))
        }
        None => None,
    };
    let hamiltonian = r
        .hamiltonian
        .as_ref()
        .map(|h| cx.expr("hamiltonian", h))
        .transpose()?;
    let integrals = cx.exprs("integrals", &r.integrals)?;

    let mut solutions = Vec::new();
    for (i, s) in r.solutions.iter().enumerate() {
        let f = format!("solutions[{i}]");
        arity(&f, &s.values, vars.len())?;
        let params = s
            .params
            .iter()
            .map(|p| cx.symbol(&f, p))
            .collect::<Result<Vec<_>, _>>()?;
        solutions.push(Solution {
            params,
            values: cx.exprs(&f, &s.values)?,
        });
    }

    let mut symmetries = Vec::new();
    for s in &r.symmetries {
        let f = format!("symmetries.{}", s.name);
        // arity is checked by the verifier so that a malformed map is a reported finding
        symmetries.push(Symmetry {
            name: s.name.clone(),
            variant: s.variant.clone().unwrap_or_else(|| "printed".into()),
            map: cx.exprs(&f, &s.map)?,
            params: cx.bindings(&format!("{f}.params"), &s.params)?,
            radicals: cx.bindings(&format!("{f}.radicals"), &s.radicals)?,
            involution: s.involution,
        });
    }

    let mut atlas = Vec::new();
    for c in &r.atlas {
        let f = format!("atlas[{}]", c.chart);
        arity(&f, &c.forward, vars.len())?;
        let cv = c
            .vars
            .clone()
            .unwrap_or_else(|| default_chart_vars(c.chart, vars.len()));
        arity(&format!("{f}.vars"), &cv, vars.len())?;
        let inverse = match &c.inverse {
            Some(i) => {
                arity(&format!("{f}.inverse"), i, vars.len())?;
                Some(cx.exprs(&format!("{f}.inverse"), i)?)
            }
            None => None,
        };
        atlas.push(Chart {
            id: c.chart,
            variant: c.variant.clone().unwrap_or_else(|| "printed".into()),
            vars: cv.iter().map(|v| Symbol::var(v)).collect(),
            forward: cx.exprs(&f, &c.forward)?,
            inverse,
            note: c.note.clone(),
        });
    }

    let mut resolutions = Vec::new();
    for s in &r.resolutions {
        let f = format!("resolutions.{}", s.name);
        if !["U0", "U1", "U2"].contains(&s.start.as_str()) {
            return Err(cx.invalid(&f, format!("unknown start chart {}", s.start)));
        }
        let mut steps = Vec::new();
        for (k, st) in s.steps.iter().enumerate() {
            let sf = format!("{f}.steps[{}]", k + 1);
            arity(&sf, &st.map, vars.len())?;
            let kind = match st.kind.as_str() {
                "blowup" => StepKind::Blowup,
                "change" | "recenter" => StepKind::Change,
                other => return Err(cx.invalid(&sf, format!("unknown step kind {other}"))),
            };
            let map = cx.exprs(&sf, &st.map)?;
            let center = st
                .center
                .as_ref()
                .map(|c| cx.exprs(&format!("{sf}.center"), c))
                .transpose()?;
            let bare: Vec<usize> = (0..map.len())
                .filter(|&i| map[i] == Expr::symbol(state[i].clone()))
                .collect();
            let divisor = match (st.divisor, bare.as_slice()) {
                (Some(d), _) if d < vars.len() => d,
                (Some(d), _) => {
                    return Err(cx.invalid(&sf, format!("divisor index {d} out of range")))
                }
                (None, [d]) => *d,
                (None, _) => {
                    return Err(cx.invalid(&sf, "divisor not determined; give `divisor`".into()))
                }
            };
            steps.push(Step {
                kind,
                map,
                center,
                divisor,
            });
        }
        resolutions.push(ResolutionScript {
            name: s.name.clone(),
            variant: s.variant.clone().unwrap_or_else(|| "printed".into()),
            start: s.start.clone(),
            steps,
            solve_for: s
                .solve_for
                .as_ref()
                .map(|v| cx.symbol(&format!("{f}.solve_for"), v))
                .transpose()?,
            kernel: s
                .kernel
                .as_ref()
                .map(|v| cx.expr(&format!("{f}.kernel"), v))
                .transpose()?,
            matches_chart: s.matches_chart,
            swap: s.swap,
        });
    }
    let mut index_points = Vec::new();
    for p in &r.index_points {
        let f = format!("index_points.{}", p.label);
        let variant = p.variant.clone().unwrap_or_else(|| "printed".into());
        let res = resolutions
            .iter()
            .find(|s: &&ResolutionScript| s.name == p.resolution && s.variant == variant)
            .ok_or_else(|| cx.invalid(&f, format!("no resolution {} ({variant})", p.resolution)))?;
        if p.after_step > res.steps.len() {
            return Err(cx.invalid(&f, format!("step {} beyond script", p.after_step)));
        }
        arity(&f, &p.point, vars.len())?;
        index_points.push(IndexPoint {
            label: p.label.clone(),
            resolution: p.resolution.clone(),
            variant,
            after_step: p.after_step,
            point: cx.exprs(&f, &p.point)?,
        });
    }

    let status = match (related, r.status.as_deref()) {
        (true, _) => Status::Related,
        (false, Some("verified")) => Status::Verified,
        (false, Some("stub")) => Status::Stub,
        (false, Some(other)) => return Err(cx.invalid("status", format!("unknown status {other}"))),
        (false, None) if transform.is_some() || system.is_some() => Status::Verified,
        (false, None) => Status::Stub,
    };
    if status == Status::Stub && (transform.is_some() || system.is_some()) {
        return Err(cx.invalid("status", "stub entries carry only the equation".into()));
    }
    if status == Status::Verified && system.is_none() {
        return Err(cx.invalid("status", "verified entries need a system".into()));
    }

    Ok(EquationEntry {
        id: id.to_string(),
        status,
        surface: r.surface.clone(),
        note: r.note.clone(),
        vars: state,
        constraints,
        ode,
        transform,
        inverse,
        system,
        hamiltonian,
        integrals,
        riccati: r.riccati,
        solutions,
        symmetries,
        atlas,
        resolutions,
        index_points,
        scope,
    })
}

fn compile_link(cat: &Catalog, l: &RawLink) -> Result<Link, RegistryError> {
    let from = cat.get(&l.from)?;
    let to = cat.get(&l.to)?;
    let id = format!("{}->{}", l.from, l.to);
    let cx = Ctx {
        id: &id,
        scope: &from.scope,
    };
    if l.map.len() != to.vars.len() {
        return Err(cx.invalid(
            "map",
            format!(
                "expected {} components, found {}",
                to.vars.len(),
                l.map.len()
            ),
        ));
    }
    Ok(Link {
        from: l.from.clone(),
        to: l.to.clone(),
        variant: l.variant.clone().unwrap_or_else(|| "printed".into()),
        map: cx.exprs("map", &l.map)?,
        substitute: cx.bindings("substitute", &l.substitute)?,
    })
}
