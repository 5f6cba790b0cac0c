//! Sign-flip mutations of passing identities; each must turn the check into a FAIL.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::*;
use crate::registry::Catalog;

/// Where a mutated expression lives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    System(usize),
    Hamiltonian,
    Integral(usize),
    Solution(usize, usize),
    /// Index into `entry.symmetries`, then the component.
    SymmetryMap(usize, usize),
    /// Index into `catalog.links()`, then the component.
    LinkMap(usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct Mutation {
    pub id: String,
    pub target: Target,
    pub check: String,
    pub term: usize,
    pub original: String,
    pub mutated: String,
    pub verdict: Verdict,
}

impl Mutation {
    pub fn caught(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Numerator terms that involve a state variable, function or time, and none of `free`.
/// A sign flip on a term carrying a free constant can be undone by renaming the constant.
fn flippable_terms(e: &Expr, free: &[Symbol]) -> Vec<usize> {
    let p = e.numer();
    (0..p.nterms())
        .filter(|&i| {
            let used = || {
                p.term_exps(i)
                    .iter()
                    .zip(p.vars())
                    .filter(|(&k, _)| k > 0)
                    .map(|(_, s)| s)
            };
            used().any(|s| matches!(s, Symbol::Var(_) | Symbol::Func(..) | Symbol::Time))
                && !used().any(|s| free.contains(s))
        })
        .collect()
}

fn free_constants(e: &EquationEntry, t: &Target) -> Vec<Symbol> {
    match *t {
        Target::Solution(k, _) => e.solutions[k].params.clone(),
        _ => Vec::new(),
    }
}

fn target_expr<'a>(cat: &'a Catalog, e: &'a EquationEntry, t: &Target) -> Option<&'a Expr> {
    match *t {
        Target::System(i) => e.system.as_ref()?.rhs.get(i),
        Target::Hamiltonian => e.hamiltonian.as_ref(),
        Target::Integral(i) => e.integrals.get(i),
        Target::Solution(k, i) => e.solutions.get(k)?.values.get(i),
        Target::SymmetryMap(k, i) => e.symmetries.get(k)?.map.get(i),
        Target::LinkMap(k, i) => cat.links().get(k)?.map.get(i),
    }
}

fn run_check(cat: &Catalog, e: &EquationEntry, t: &Target) -> VerificationReport {
    match *t {
        Target::System(_) => verify_transform(e),
        Target::Hamiltonian => verify_hamiltonian_form(e),
        Target::Integral(_) => verify_first_integral(e),
        Target::Solution(..) => verify_explicit_solution(e),
        Target::SymmetryMap(k, _) => verify_symmetry(e, &e.symmetries[k]),
        Target::LinkMap(k, _) => verify_link(cat, &cat.links()[k]),
    }
}

fn with_mutation(
    cat: &Catalog,
    e: &EquationEntry,
    t: &Target,
    new: Expr,
) -> (Catalog, EquationEntry) {
    let mut e = e.clone();
    let mut cat = cat.clone();
    match *t {
        Target::System(i) => e.system.as_mut().unwrap().rhs[i] = new,
        Target::Hamiltonian => e.hamiltonian = Some(new),
        Target::Integral(i) => e.integrals[i] = new,
        Target::Solution(k, i) => e.solutions[k].values[i] = new,
        Target::SymmetryMap(k, i) => e.symmetries[k].map[i] = new,
        Target::LinkMap(k, i) => cat.links_mut()[k].map[i] = new,
    }
    (cat, e)
}

/// Identities that pass unmutated, as (entry id, target).
pub fn passing_identities(cat: &Catalog) -> Vec<(String, Target)> {
    let mut out = Vec::new();
    for e in cat.all() {
        let Some(sys) = &e.system else { continue };
        let mut cands = Vec::new();
        if e.transform.is_some() {
            cands.extend((0..sys.dim()).map(Target::System));
        }
        if e.hamiltonian.is_some() {
            cands.push(Target::Hamiltonian);
        }
        cands.extend((0..e.integrals.len()).map(Target::Integral));
        for (k, s) in e.solutions.iter().enumerate() {
            cands.extend((0..s.values.len()).map(|i| Target::Solution(k, i)));
        }
        for (k, s) in e.symmetries.iter().enumerate() {
            cands.extend((0..s.map.len()).map(|i| Target::SymmetryMap(k, i)));
        }
        for t in cands {
            let Some(x) = target_expr(cat, e, &t) else {
                continue;
            };
            if flippable_terms(x, &free_constants(e, &t)).is_empty() {
                continue;
            }
            if run_check(cat, e, &t).passed() {
                out.push((e.id.clone(), t));
            }
        }
    }
    for (k, l) in cat.links().iter().enumerate() {
        let Ok(from) = cat.get(&l.from) else { continue };
        for i in 0..l.map.len() {
            let t = Target::LinkMap(k, i);
            if !flippable_terms(&l.map[i], &[]).is_empty() && verify_link(cat, l).passed() {
                out.push((from.id.clone(), t));
            }
        }
    }
    out
}

/// Picks `n` passing identities with a seeded generator, flips one term in each and
/// reruns the corresponding check.
pub fn mutation_suite(cat: &Catalog, n: usize, seed: u64) -> Vec<Mutation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = passing_identities(cat);
    ids.shuffle(&mut rng);
    ids.truncate(n);
    let picks: Vec<(String, Target, usize)> = ids
        .into_iter()
        .map(|(id, t)| {
            let e = cat.get(&id).expect("identity from this catalog");
            let terms = flippable_terms(
                target_expr(cat, e, &t).expect("target exists"),
                &free_constants(e, &t),
            );
            let term = *terms.choose(&mut rng).expect("flippable term");
            (id, t, term)
        })
        .collect();
    picks
        .par_iter()
        .map(|(id, t, term)| {
            let e = cat.get(id).expect("identity from this catalog");
            let orig = target_expr(cat, e, t).expect("target exists");
            let new = orig.flip_numerator_term(*term);
            let (mcat, me) = with_mutation(cat, e, t, new.clone());
            let r = run_check(&mcat, &me, t);
            Mutation {
                id: id.clone(),
                target: t.clone(),
                check: r.check.clone(),
                term: *term,
                original: orig.to_text(),
                mutated: new.to_text(),
                verdict: r.verdict,
            }
        })
        .collect()
}
