//! Symbolic checks of the catalogued identities, each producing a report with an
//! explicit residual.

pub mod mutation;

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::numeric::eval_with;
use crate::expr::{total_derivative, Bindings, ConstraintSet, Expr, ExprError, Symbol};
use crate::field::invert;
use crate::registry::{ode_vars, Catalog, EquationEntry, Link, Symmetry};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error("{0} has no {1}")]
    Missing(String, &'static str),
    #[error("denominator of the map vanishes identically")]
    DenominatorVanishesIdentically,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIPPED",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub id: String,
    pub check: String,
    pub verdict: Verdict,
    /// One component per compared quantity; all zero on PASS.
    pub residual: Vec<Expr>,
    pub variant: Option<String>,
    pub notes: Vec<String>,
    pub wall_time_ms: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    id: &'a str,
    check: &'a str,
    verdict: Verdict,
    residual: String,
    variant: Option<&'a str>,
    notes: &'a [String],
    wall_time_ms: f64,
}

impl Serialize for VerificationReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ReportJson {
            id: &self.id,
            check: &self.check,
            verdict: self.verdict,
            residual: self.residual_string(),
            variant: self.variant.as_deref(),
            notes: &self.notes,
            wall_time_ms: self.wall_time_ms,
        }
        .serialize(s)
    }
}

impl VerificationReport {
    fn new(id: &str, check: &str) -> VerificationReport {
        VerificationReport {
            id: id.to_string(),
            check: check.to_string(),
            verdict: Verdict::Skipped,
            residual: Vec::new(),
            variant: None,
            notes: Vec::new(),
            wall_time_ms: 0.0,
        }
    }

    fn skipped(id: &str, check: &str, why: String) -> VerificationReport {
        let mut r = VerificationReport::new(id, check);
        r.notes.push(why);
        r
    }

    fn judged(id: &str, check: &str, residual: Vec<Expr>) -> VerificationReport {
        let mut r = VerificationReport::new(id, check);
        r.verdict = if residual.iter().all(Expr::is_zero) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        r.residual = residual;
        r
    }

    fn failed(id: &str, check: &str, why: String) -> VerificationReport {
        let mut r = VerificationReport::new(id, check);
        r.verdict = Verdict::Fail;
        r.notes.push(why);
        r
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn residual_string(&self) -> String {
        match self.residual.len() {
            0 => String::new(),
            1 => self.residual[0].to_text(),
            _ => format!(
                "({})",
                self.residual
                    .iter()
                    .map(|e| e.to_text())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }

    pub fn to_text_line(&self) -> String {
        let mut s = format!(
            "{:<12} {:<24} {}",
            self.id,
            self.check,
            self.verdict.as_str()
        );
        if let Some(v) = &self.variant {
            s.push_str(&format!(" [{v}]"));
        }
        if self.verdict == Verdict::Fail && !self.residual.is_empty() {
            s.push_str(&format!(" residual {}", self.residual_string()));
        }
        for n in &self.notes {
            s.push_str(&format!("; {n}"));
        }
        s
    }
}

fn timed<F: FnOnce() -> VerificationReport>(f: F) -> VerificationReport {
    let start = Instant::now();
    let mut r = f();
    r.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    r
}

fn state_bindings(vars: &[Symbol], values: &[Expr]) -> Bindings {
    vars.iter().cloned().zip(values.iter().cloned()).collect()
}

fn reduce_all(c: &ConstraintSet, v: Vec<Expr>) -> Result<Vec<Expr>, ExprError> {
    v.iter().map(|e| c.reduce(e)).collect()
}

/// Differentiates the transform along `u'' = F` and compares with the system in both
/// directions: pulled back to `(u, u')` and pushed forward to `(x, y)`.
pub fn verify_transform(entry: &EquationEntry) -> VerificationReport {
    timed(|| transform_inner(entry))
}

fn transform_inner(entry: &EquationEntry) -> VerificationReport {
    let check = "transform";
    let (Some(t), Some(sys)) = (&entry.transform, &entry.system) else {
        return VerificationReport::skipped(&entry.id, check, "no transform or system".into());
    };
    let [u, du] = ode_vars();
    let (inverse, how) = match &entry.inverse {
        Some(inv) => (
            Some(state_bindings(&[u.clone(), du.clone()], inv)),
            "stored inverse",
        ),
        None => match invert(t, &[u.clone(), du.clone()], &entry.vars) {
            Ok(b) => (Some(b), "inverse by elimination"),
            Err(_) => (None, "no inverse; pullback with Jacobian check"),
        },
    };
    let mut outcomes = Vec::new();
    for v in &entry.ode {
        let rates = [
            (u.clone(), Expr::symbol(du.clone())),
            (du.clone(), v.rhs.clone()),
        ]
        .into_iter()
        .collect();
        let run = || -> Result<(Vec<Expr>, Vec<Expr>), ExprError> {
            let dt: Vec<Expr> = t
                .iter()
                .map(|ti| total_derivative(ti, &rates, Some(&entry.constraints)))
                .collect::<Result<_, _>>()?;
            let at_t = state_bindings(&entry.vars, t);
            let pull: Vec<Expr> = dt
                .iter()
                .zip(&sys.rhs)
                .map(|(d, f)| Ok(d.sub(&f.substitute(&at_t)?)))
                .collect::<Result<_, ExprError>>()?;
            let push = match &inverse {
                Some(inv) => dt
                    .iter()
                    .zip(&sys.rhs)
                    .map(|(d, f)| Ok(d.substitute(inv)?.sub(f)))
                    .collect::<Result<_, ExprError>>()?,
                None => {
                    // without an inverse the transform must at least be locally invertible
                    let j = t[0]
                        .partial(&u)
                        .mul(&t[1].partial(&du))
                        .sub(&t[0].partial(&du).mul(&t[1].partial(&u)));
                    vec![if j.is_zero() {
                        Expr::one()
                    } else {
                        Expr::zero()
                    }]
                }
            };
            Ok((
                reduce_all(&entry.constraints, pull)?,
                reduce_all(&entry.constraints, push)?,
            ))
        };
        match run() {
            Ok((pull, push)) => outcomes.push((v.name.clone(), pull, push)),
            Err(e) => {
                return VerificationReport::failed(
                    &entry.id,
                    check,
                    format!("variant {}: {e}", v.name),
                )
            }
        }
    }
    let passing: Vec<&(String, Vec<Expr>, Vec<Expr>)> = outcomes
        .iter()
        .filter(|(_, a, b)| a.iter().chain(b).all(Expr::is_zero))
        .collect();
    let mut r = match passing.first() {
        Some((name, pull, _)) => {
            let mut r = VerificationReport::judged(&entry.id, check, pull.clone());
            r.variant = Some(name.clone());
            r
        }
        None => {
            let (name, pull, push) = &outcomes[0];
            let residual = if pull.iter().all(Expr::is_zero) {
                push.clone()
            } else {
                pull.clone()
            };
            let mut r = VerificationReport::judged(&entry.id, check, residual);
            if r.verdict == Verdict::Pass {
                // pullback vanished but the pushforward route did not
                r.verdict = Verdict::Fail;
                r.notes.push("pullback and pushforward disagree".into());
            }
            r.variant = Some(name.clone());
            r
        }
    };
    r.notes.push(how.into());
    if passing.len() > 1 {
        let names: Vec<&str> = passing.iter().map(|p| p.0.as_str()).collect();
        r.notes
            .push(format!("several variants pass: {}", names.join(", ")));
    }
    for (name, pull, push) in &outcomes {
        if Some(name) != r.variant.as_ref() && !pull.iter().chain(push).all(Expr::is_zero) {
            r.notes.push(format!("variant {name} fails"));
        }
    }
    r
}

/// `x' = dH/dy`, `y' = -dH/dx`.
pub fn verify_hamiltonian_form(entry: &EquationEntry) -> VerificationReport {
    timed(|| {
        let check = "hamiltonian-form";
        let (Some(h), Some(sys)) = (&entry.hamiltonian, &entry.system) else {
            return VerificationReport::skipped(&entry.id, check, "no Hamiltonian".into());
        };
        if sys.dim() != 2 {
            return VerificationReport::skipped(&entry.id, check, "not a planar system".into());
        }
        let (x, y) = (&sys.vars[0], &sys.vars[1]);
        let res = vec![sys.rhs[0].sub(&h.partial(y)), sys.rhs[1].add(&h.partial(x))];
        match reduce_all(&entry.constraints, res) {
            Ok(res) => VerificationReport::judged(&entry.id, check, res),
            Err(e) => VerificationReport::failed(&entry.id, check, e.to_string()),
        }
    })
}

/// The quantities expected to be conserved: catalogued integrals and an autonomous `H`.
pub fn conserved_quantities(entry: &EquationEntry) -> Vec<Expr> {
    let mut v = entry.integrals.clone();
    if let (Some(h), Some(sys)) = (&entry.hamiltonian, &entry.system) {
        if entry.is_autonomous(h) && sys.rhs.iter().all(|f| entry.is_autonomous(f)) {
            v.push(h.clone());
        }
    }
    v
}

pub fn verify_first_integral(entry: &EquationEntry) -> VerificationReport {
    timed(|| {
        let check = "first-integral";
        let Some(sys) = &entry.system else {
            return VerificationReport::skipped(&entry.id, check, "no system".into());
        };
        let ints = conserved_quantities(entry);
        if ints.is_empty() {
            return VerificationReport::skipped(&entry.id, check, "no first integral".into());
        }
        let res: Result<Vec<Expr>, ExprError> = ints
            .iter()
            .map(|i| sys.derivative(i, Some(&entry.constraints)))
            .collect();
        match res {
            Ok(res) => {
                let mut r = VerificationReport::judged(&entry.id, check, res);
                r.notes.push(if ints.len() == 1 {
                    "1 quantity".to_string()
                } else {
                    format!("{} quantities", ints.len())
                });
                r
            }
            Err(e) => VerificationReport::failed(&entry.id, check, e.to_string()),
        }
    })
}

/// Substitutes each closed-form solution into the system.
pub fn verify_explicit_solution(entry: &EquationEntry) -> VerificationReport {
    timed(|| {
        let check = "explicit-solution";
        let Some(sys) = &entry.system else {
            return VerificationReport::skipped(&entry.id, check, "no system".into());
        };
        if entry.solutions.is_empty() {
            return VerificationReport::skipped(&entry.id, check, "no explicit solution".into());
        }
        let none = Default::default();
        let mut res = Vec::new();
        for s in &entry.solutions {
            let at = state_bindings(&sys.vars, &s.values);
            for (v, f) in s.values.iter().zip(&sys.rhs) {
                let step = || -> Result<Expr, ExprError> {
                    let d = total_derivative(v, &none, Some(&entry.constraints))?;
                    entry.constraints.reduce(&d.sub(&f.substitute(&at)?))
                };
                match step() {
                    Ok(e) => res.push(e),
                    Err(e) => return VerificationReport::failed(&entry.id, check, e.to_string()),
                }
            }
        }
        VerificationReport::judged(&entry.id, check, res)
    })
}

fn symmetry_bindings(entry: &EquationEntry, s: &Symmetry) -> Bindings {
    let mut b = state_bindings(&entry.vars, &s.map);
    b.extend(s.params.iter().map(|(k, v)| (k.clone(), v.clone())));
    b.extend(s.radicals.iter().map(|(k, v)| (k.clone(), v.clone())));
    b
}

fn arity_finding(entry: &EquationEntry, s: &Symmetry, check: &str) -> Option<VerificationReport> {
    if s.map.len() == entry.vars.len() {
        return None;
    }
    let mut r = VerificationReport::failed(
        &entry.id,
        check,
        format!(
            "map has {} components for {} variables",
            s.map.len(),
            entry.vars.len()
        ),
    );
    r.residual = vec![Expr::int(s.map.len() as i64 - entry.vars.len() as i64)];
    r.variant = Some(s.variant.clone());
    Some(r)
}

/// `d/dt s(x) = F(s(x); s(params))` along the system.
pub fn verify_symmetry(entry: &EquationEntry, s: &Symmetry) -> VerificationReport {
    timed(|| {
        let check = format!("symmetry:{}", s.name);
        let Some(sys) = &entry.system else {
            return VerificationReport::skipped(&entry.id, &check, "no system".into());
        };
        if let Some(r) = arity_finding(entry, s, &check) {
            return r;
        }
        let run = || -> Result<Vec<Expr>, VerifyError> {
            if s.map.iter().any(|m| m.denom().is_zero()) {
                return Err(VerifyError::DenominatorVanishesIdentically);
            }
            let b = symmetry_bindings(entry, s);
            let mut res = Vec::new();
            for (m, f) in s.map.iter().zip(&sys.rhs) {
                let lhs = sys.derivative(m, Some(&entry.constraints))?;
                let rhs = f.substitute(&b)?;
                res.push(entry.constraints.reduce(&lhs.sub(&rhs))?);
            }
            Ok(res)
        };
        let mut r = match run() {
            Ok(res) => VerificationReport::judged(&entry.id, &check, res),
            Err(e) => VerificationReport::failed(&entry.id, &check, e.to_string()),
        };
        r.variant = Some(s.variant.clone());
        r
    })
}

/// `s(s(x)) = x` on state, parameters and radicals.
pub fn verify_involution(entry: &EquationEntry, s: &Symmetry) -> VerificationReport {
    timed(|| {
        let check = format!("involution:{}", s.name);
        if let Some(r) = arity_finding(entry, s, &check) {
            return r;
        }
        let b = symmetry_bindings(entry, s);
        let run = || -> Result<Vec<Expr>, ExprError> {
            let mut res = Vec::new();
            for (v, m) in entry.vars.iter().zip(&s.map) {
                res.push(m.substitute(&b)?.sub(&Expr::symbol(v.clone())));
            }
            for (p, m) in s.params.iter().chain(&s.radicals) {
                res.push(m.substitute(&b)?.sub(&Expr::symbol(p.clone())));
            }
            Ok(res)
        };
        let mut r = match run() {
            Ok(res) => VerificationReport::judged(&entry.id, &check, res),
            Err(e) => VerificationReport::failed(&entry.id, &check, e.to_string()),
        };
        r.variant = Some(s.variant.clone());
        r
    })
}

/// Symmetries by name, in catalog order, with their variants.
pub fn symmetry_groups(entry: &EquationEntry) -> Vec<(String, Vec<&Symmetry>)> {
    let mut out: Vec<(String, Vec<&Symmetry>)> = Vec::new();
    for s in &entry.symmetries {
        match out.iter_mut().find(|(n, _)| *n == s.name) {
            Some((_, v)) => v.push(s),
            None => out.push((s.name.clone(), vec![s])),
        }
    }
    out
}

/// Runs `check` on every variant and keeps the first that passes, or the first report.
fn best_of(mut reports: Vec<VerificationReport>) -> VerificationReport {
    let i = reports.iter().position(|r| r.passed()).unwrap_or(0);
    let mut r = reports.swap_remove(i.min(reports.len() - 1));
    let failing: Vec<String> = reports
        .iter()
        .filter(|o| !o.passed())
        .filter_map(|o| o.variant.clone())
        .collect();
    if r.passed() && !failing.is_empty() {
        r.notes
            .push(format!("failing variants: {}", failing.join(", ")));
    }
    r
}

pub fn verify_symmetry_group(entry: &EquationEntry, name: &str) -> Option<VerificationReport> {
    let group: Vec<&Symmetry> = entry.symmetries.iter().filter(|s| s.name == name).collect();
    (!group.is_empty()).then(|| best_of(group.iter().map(|s| verify_symmetry(entry, s)).collect()))
}

pub fn verify_involution_group(entry: &EquationEntry, name: &str) -> Option<VerificationReport> {
    let group: Vec<&Symmetry> = entry
        .symmetries
        .iter()
        .filter(|s| s.name == name && s.involution)
        .collect();
    (!group.is_empty())
        .then(|| best_of(group.iter().map(|s| verify_involution(entry, s)).collect()))
}

/// `y'` free of `x` and at most quadratic in `y`; the note carries the Riccati equation.
pub fn verify_riccati_triangular(entry: &EquationEntry) -> VerificationReport {
    timed(|| {
        let check = "riccati";
        let Some(sys) = &entry.system else {
            return VerificationReport::skipped(&entry.id, check, "no system".into());
        };
        if sys.dim() != 2 {
            return VerificationReport::skipped(&entry.id, check, "not a planar system".into());
        }
        let (x, y) = (&sys.vars[0], &sys.vars[1]);
        let g = &sys.rhs[1];
        let dx = g.partial(x);
        let mut r = VerificationReport::judged(&entry.id, check, vec![dx]);
        match g.poly_coefficients(y) {
            Some(cs) if cs.len() <= 3 => {
                if r.passed() {
                    r.notes.push(format!("{y}' = {}", g.to_pretty()));
                }
            }
            _ => {
                r.verdict = Verdict::Fail;
                r.notes
                    .push(format!("{y}' is not a quadratic polynomial in {y}"));
                if r.residual.iter().all(Expr::is_zero) {
                    r.residual = vec![g.partial(y).partial(y).partial(y)];
                }
            }
        }
        r
    })
}

/// Pullback and pushforward of a map between two catalogued systems.
pub fn verify_link(cat: &Catalog, link: &Link) -> VerificationReport {
    timed(|| {
        let id = format!("{}->{}", link.from, link.to);
        let check = "link";
        let (Ok(from), Ok(to)) = (cat.get(&link.from), cat.get(&link.to)) else {
            return VerificationReport::failed(&id, check, "unknown system".into());
        };
        let (Some(fs), Some(ts)) = (&from.system, &to.system) else {
            return VerificationReport::skipped(&id, check, "missing system".into());
        };
        let run = || -> Result<Vec<Expr>, ExprError> {
            let sub = &link.substitute;
            let mut res = Vec::new();
            // substituted state variables must follow their own equations
            for (v, w) in sub {
                let i = fs
                    .vars
                    .iter()
                    .position(|s| s == v)
                    .ok_or_else(|| ExprError::UnknownStateVariable(v.to_string()))?;
                let dw = total_derivative(w, &Default::default(), Some(&from.constraints))?;
                res.push(dw.sub(&fs.rhs[i].substitute(sub)?));
            }
            let dm: Vec<Expr> = link
                .map
                .iter()
                .map(|m| fs.derivative(m, Some(&from.constraints))?.substitute(sub))
                .collect::<Result<_, _>>()?;
            let map: Vec<Expr> = link
                .map
                .iter()
                .map(|m| m.substitute(sub))
                .collect::<Result<_, _>>()?;
            let at = state_bindings(&ts.vars, &map);
            for (d, f) in dm.iter().zip(&ts.rhs) {
                res.push(d.sub(&f.substitute(&at)?));
            }
            let free: Vec<Symbol> = fs
                .vars
                .iter()
                .filter(|v| !sub.contains_key(*v))
                .cloned()
                .collect();
            let inv = invert(&map, &free, &ts.vars)?;
            for (d, f) in dm.iter().zip(&ts.rhs) {
                res.push(d.substitute(&inv)?.sub(f));
            }
            reduce_all(&from.constraints, res)
        };
        let mut r = match run() {
            Ok(res) => VerificationReport::judged(&id, check, res),
            Err(e) => VerificationReport::failed(&id, check, e.to_string()),
        };
        r.variant = Some(link.variant.clone());
        r
    })
}

/// Links grouped by endpoints; a group passes when one of its variants does.
pub fn verify_links(cat: &Catalog) -> Vec<VerificationReport> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for l in cat.links() {
        if !keys.contains(&(l.from.as_str(), l.to.as_str())) {
            keys.push((&l.from, &l.to));
        }
    }
    keys.iter()
        .map(|(f, t)| {
            best_of(
                cat.links()
                    .iter()
                    .filter(|l| l.from == *f && l.to == *t)
                    .map(|l| verify_link(cat, l))
                    .collect(),
            )
        })
        .collect()
}

/// Every applicable check of one entry, in a fixed order.
pub fn verify_entry(entry: &EquationEntry) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    if entry.system.is_none() {
        out.push(VerificationReport::skipped(
            &entry.id,
            "transform",
            format!("{} entry", entry.status.as_str()),
        ));
        return out;
    }
    if entry.transform.is_some() {
        out.push(verify_transform(entry));
    }
    if entry.hamiltonian.is_some() {
        out.push(verify_hamiltonian_form(entry));
    }
    if !conserved_quantities(entry).is_empty() {
        out.push(verify_first_integral(entry));
    }
    if !entry.solutions.is_empty() {
        out.push(verify_explicit_solution(entry));
    }
    for (name, _) in symmetry_groups(entry) {
        out.extend(verify_symmetry_group(entry, &name));
        out.extend(verify_involution_group(entry, &name));
    }
    if entry.riccati {
        out.push(verify_riccati_triangular(entry));
    }
    if !entry.atlas.is_empty() || entry.surface.as_deref() == Some("P2") {
        out.push(crate::geometry::check_atlas_polynomial(entry));
    }
    out
}

/// All checks of the catalog, entries in parallel, reports in catalog order.
pub fn verify_catalog(cat: &Catalog) -> Vec<VerificationReport> {
    let entries: Vec<&EquationEntry> = cat.all().collect();
    let mut out: Vec<VerificationReport> = entries
        .par_iter()
        .map(|e| verify_entry(e))
        .collect::<Vec<_>>()
        .concat();
    out.extend(verify_links(cat));
    out
}

/// Evaluates `e` at `n` random rational points; true when some value is clearly nonzero.
///
/// Radicals take the principal square root of their evaluated square.
pub fn probe_nonzero(e: &Expr, n: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let syms: Vec<Symbol> = e.symbols().into_iter().collect();
    for _ in 0..n {
        let mut vals: Vec<(Symbol, Complex64)> = Vec::new();
        for s in syms.iter().filter(|s| !matches!(s, Symbol::Alg(_))) {
            let p: i32 = rng.gen_range(-40..=40);
            let q: i32 = rng.gen_range(1..=13);
            vals.push((s.clone(), Complex64::new(p as f64 / q as f64 + 0.01, 0.0)));
        }
        let lookup =
            |v: &[(Symbol, Complex64)], s: &Symbol| v.iter().find(|(k, _)| k == s).map(|(_, c)| *c);
        for s in &syms {
            if let Symbol::Alg(a) = s {
                let sq = Expr::from_poly(a.square().clone());
                let Ok(v) = eval_with(&sq, |t| lookup(&vals, t)) else {
                    continue;
                };
                vals.push((s.clone(), v.sqrt()));
            }
        }
        let Ok(num) = eval_with(&Expr::from_poly(e.numer().clone()), |t| lookup(&vals, t)) else {
            continue;
        };
        let Ok(den) = eval_with(&Expr::from_poly(e.denom().clone()), |t| lookup(&vals, t)) else {
            continue;
        };
        if den.norm() < 1e-9 {
            continue;
        }
        if (num / den).norm() > 1e-9 {
            return true;
        }
    }
    false
}
