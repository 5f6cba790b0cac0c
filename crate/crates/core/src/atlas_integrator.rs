//! Chart-switching integration of catalogued systems along complex time paths.
//!
//! Each chart of the atlas is compiled once; transitions between charts are composed
//! exactly and then evaluated in floating point. The base chart `U0` has id 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::numeric::Compiled;
use crate::expr::{parse, Bindings, ConstraintSet, Expr, ExprError, Scope, Symbol};
use crate::field::{invert, VectorField};
use crate::registry::EquationEntry;

type C = Complex64;

pub const R_OUT: f64 = 10.0;
pub const R_IN: f64 = 8.0;
pub const TAU_SWITCH: f64 = 1e-9;
/// Relative size below which a denominator counts as zero.
pub const DEN_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntegratorError {
    #[error("{0} has neither a system nor an equation")]
    NoSystem(String),
    #[error("no chart brings the state below {r_in} at t = {t} (chart {chart}, max |coordinate| {size:e})")]
    NoViableChart {
        t: C,
        chart: u32,
        size: f64,
        r_in: f64,
    },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: C, h: f64 },
    #[error("step limit {0} reached")]
    StepLimit(usize),
    #[error("denominator near zero in component {component} of the map {from} -> {to}")]
    DenominatorNearZero {
        from: u32,
        to: u32,
        component: usize,
    },
    #[error("unknown chart {0}")]
    UnknownChart(u32),
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value in the initial state")]
    NonFinite,
    #[error("chart {0} has no inverse")]
    NoInverse(u32),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// How a function symbol is evaluated along the path.
#[derive(Clone, Debug)]
pub enum FunctionRealization {
    /// A polynomial (or rational function) in `t`.
    Explicit(Expr),
    /// `base^(order) = rhs` integrated alongside the system; state is `base .. base^(order-1)`.
    Auxiliary { order: u8, rhs: Expr },
}

#[derive(Clone, Debug)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub r_out: f64,
    pub r_in: f64,
    pub tau_switch: f64,
    pub max_steps: usize,
    /// Switch back to `U0` as soon as its coordinates fall below `r_in`.
    pub return_home: bool,
    /// Parameter values; missing parameters are 1.
    pub params: BTreeMap<String, C>,
    /// Initial auxiliary state per base; default is value 1 and zero derivatives.
    pub aux_init: BTreeMap<String, Vec<C>>,
    /// Explicit realizations overriding the defaults.
    pub functions: BTreeMap<String, Expr>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: 1e-10,
            r_out: R_OUT,
            r_in: R_IN,
            tau_switch: TAU_SWITCH,
            max_steps: 2_000_000,
            return_home: true,
            params: BTreeMap::new(),
            aux_init: BTreeMap::new(),
            functions: BTreeMap::new(),
        }
    }
}

/// Default realization of an unconstrained function.
pub fn default_function(base: &str) -> Expr {
    let src = match base {
        "r" => "1 + t^2",
        _ => "t",
    };
    parse(src, &Scope::new()).expect("default realization parses")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericState {
    pub chart: u32,
    pub t: C,
    pub coords: Vec<C>,
    pub aux: Vec<C>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: C,
    pub chart: u32,
    pub coords: Vec<C>,
    pub event: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub t: C,
    pub from: u32,
    pub to: u32,
    pub before: Vec<C>,
    pub after: Vec<C>,
    /// Relative error of mapping `after` back to the old chart.
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub id: String,
    pub samples: Vec<Sample>,
    pub switches: Vec<SwitchEvent>,
    pub accepted: usize,
    pub rejected: usize,
    pub end: NumericState,
}

#[derive(Serialize)]
struct Record<'a> {
    t_re: f64,
    t_im: f64,
    chart: u32,
    coords: Vec<[f64; 2]>,
    event: Option<&'a str>,
}

impl Trajectory {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let r = Record {
                t_re: s.t.re,
                t_im: s.t.im,
                chart: s.chart,
                coords: s.coords.iter().map(|z| [z.re, z.im]).collect(),
                event: s.event.as_deref(),
            };
            out.push_str(&serde_json::to_string(&r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let dim = self
            .samples
            .iter()
            .map(|s| s.coords.len())
            .max()
            .unwrap_or(0);
        let mut out = String::from("t_re,t_im,chart");
        for i in 0..dim {
            let _ = write!(out, ",re{i},im{i}");
        }
        out.push_str(",event\n");
        for s in &self.samples {
            let _ = write!(out, "{:e},{:e},{}", s.t.re, s.t.im, s.chart);
            for z in &s.coords {
                let _ = write!(out, ",{:e},{:e}", z.re, z.im);
            }
            out.push_str(&",".repeat(2 * (dim - s.coords.len())));
            let _ = writeln!(out, ",{}", s.event.as_deref().unwrap_or(""));
        }
        out
    }
}

struct NumChart {
    id: u32,
    variant: String,
    vars: Vec<Symbol>,
    field: Vec<Compiled>,
}

enum Source {
    Time,
    Param(C),
    Aux(usize),
    Explicit(Compiled),
    Alg(Compiled),
}

/// An atlas compiled for floating-point work.
pub struct NumericAtlas {
    id: String,
    charts: Vec<NumChart>,
    // transitions[a][b]: chart a coordinates -> chart b coordinates
    transitions: Vec<Vec<Option<Vec<Compiled>>>>,
    env: Vec<Symbol>,
    sources: Vec<Source>,
    aux_rhs: Vec<Compiled>,
    // for each aux slot: Some(k) when its derivative is aux slot k, None when it is the rule
    aux_next: Vec<Option<usize>>,
    aux_rule: Vec<usize>,
    aux_default: Vec<C>,
    constraints: ConstraintSet,
    pub realizations: BTreeMap<String, FunctionRealization>,
}

fn sym_exprs(vars: &[Symbol]) -> Vec<Expr> {
    vars.iter().map(|s| Expr::symbol(s.clone())).collect()
}

/// Every symbol of the list that is not one of `vars`.
fn env_symbols(es: &[Expr], vars: &[Symbol], into: &mut Vec<Symbol>) {
    for e in es {
        for s in e.symbols() {
            if !vars.contains(&s) && !into.contains(&s) {
                into.push(s);
            }
        }
    }
}

impl NumericAtlas {
    pub fn new(
        entry: &EquationEntry,
        opts: &IntegratorOptions,
    ) -> Result<NumericAtlas, IntegratorError> {
        let sys = entry
            .system
            .clone()
            .or_else(|| entry.companion_system())
            .ok_or_else(|| IntegratorError::NoSystem(entry.id.clone()))?;
        let cons = &entry.constraints;
        let base = VectorField {
            rhs: sys
                .rhs
                .iter()
                .map(|e| cons.reduce(e))
                .collect::<Result<_, _>>()?,
            ..sys.clone()
        };

        // chart 0 is the base chart; other ids take their first polynomial variant
        let mut charts: Vec<(u32, String, Vec<Symbol>, Vec<Expr>, Vec<Expr>, Vec<Expr>)> = vec![(
            0,
            "base".into(),
            base.vars.clone(),
            base.rhs.clone(),
            sym_exprs(&base.vars),
            sym_exprs(&base.vars),
        )];
        for id in entry.chart_ids() {
            let mut chosen = None;
            for c in entry.atlas.iter().filter(|c| c.id == id) {
                let f = sys.change_coordinates(
                    &format!("chart {id}"),
                    &c.forward,
                    &c.vars,
                    c.inverse.as_deref(),
                    Some(cons),
                )?;
                let inv = match &c.inverse {
                    Some(i) => i.clone(),
                    None => {
                        let b = invert(&c.forward, &sys.vars, &c.vars)?;
                        sys.vars.iter().map(|v| b[v].clone()).collect()
                    }
                };
                let poly = f.is_polynomial();
                if chosen.is_none() || poly {
                    chosen = Some((
                        id,
                        c.variant.clone(),
                        c.vars.clone(),
                        f.rhs,
                        c.forward.clone(),
                        inv,
                    ));
                }
                if poly {
                    break;
                }
            }
            charts.extend(chosen);
        }

        let n = charts.len();
        let mut trans_exprs: Vec<Vec<Option<Vec<Expr>>>> = vec![vec![None; n]; n];
        for a in 0..n {
            let to_base: Bindings = sys
                .vars
                .iter()
                .cloned()
                .zip(charts[a].5.iter().cloned())
                .collect();
            for b in 0..n {
                let comps = if a == b {
                    sym_exprs(&charts[a].2)
                } else {
                    charts[b]
                        .4
                        .iter()
                        .map(|f| f.substitute(&to_base).and_then(|e| cons.reduce(&e)))
                        .collect::<Result<Vec<_>, _>>()?
                };
                trans_exprs[a][b] = Some(comps);
            }
        }

        // realizations
        let mut realizations = BTreeMap::new();
        for b in entry.scope.funcs() {
            let r = match cons.rule(b) {
                Some(rule) if rule.order > 0 => FunctionRealization::Auxiliary {
                    order: rule.order,
                    rhs: cons.reduce(&rule.rhs)?,
                },
                _ => FunctionRealization::Explicit(
                    opts.functions
                        .get(b)
                        .cloned()
                        .unwrap_or_else(|| default_function(b)),
                ),
            };
            realizations.insert(b.clone(), r);
        }

        // environment symbols, closed under auxiliary right-hand sides and radicand dependencies
        let mut env = vec![Symbol::Time];
        for (_, _, vars, rhs, _, _) in &charts {
            env_symbols(rhs, vars, &mut env);
        }
        for (a, row) in trans_exprs.iter().enumerate() {
            for comps in row.iter().flatten() {
                env_symbols(comps, &charts[a].2, &mut env);
            }
        }
        for (b, r) in &realizations {
            if let FunctionRealization::Auxiliary { order, rhs } = r {
                for k in 0..*order {
                    let s = Symbol::func(b, k);
                    if !env.contains(&s) {
                        env.push(s);
                    }
                }
                env_symbols(std::slice::from_ref(rhs), &[], &mut env);
            }
        }
        loop {
            let before = env.len();
            let algs: Vec<Expr> = env
                .iter()
                .filter_map(|s| match s {
                    Symbol::Alg(a) => Some(Expr::from_poly(a.square().clone())),
                    _ => None,
                })
                .collect();
            env_symbols(&algs, &[], &mut env);
            if env.len() == before {
                break;
            }
        }

        let mut aux_index: BTreeMap<(String, u8), usize> = BTreeMap::new();
        let mut aux_default = Vec::new();
        for (b, r) in &realizations {
            if let FunctionRealization::Auxiliary { order, .. } = r {
                let init = opts.aux_init.get(b);
                for k in 0..*order {
                    aux_index.insert((b.clone(), k), aux_default.len());
                    let d = init
                        .and_then(|v| v.get(k as usize).copied())
                        .unwrap_or(if k == 0 {
                            C::new(1.0, 0.0)
                        } else {
                            C::new(0.0, 0.0)
                        });
                    aux_default.push(d);
                }
            }
        }
        let mut sources = Vec::with_capacity(env.len());
        for s in &env {
            let src = match s {
                Symbol::Time => Source::Time,
                Symbol::Param(p) => {
                    Source::Param(opts.params.get(&**p).copied().unwrap_or(C::new(1.0, 0.0)))
                }
                Symbol::Func(b, k) => match aux_index.get(&(b.to_string(), *k)) {
                    Some(&i) => Source::Aux(i),
                    None => {
                        let mut e = match realizations.get(&**b) {
                            Some(FunctionRealization::Explicit(e)) => e.clone(),
                            _ => default_function(b),
                        };
                        for _ in 0..*k {
                            e = e.partial(&Symbol::Time);
                        }
                        Source::Explicit(Compiled::new(&e, &[Symbol::Time])?)
                    }
                },
                Symbol::Alg(a) => {
                    Source::Alg(Compiled::new(&Expr::from_poly(a.square().clone()), &env)?)
                }
                Symbol::Var(v) => return Err(ExprError::UndeclaredSymbol(v.to_string()).into()),
            };
            sources.push(src);
        }

        let mut aux_rhs = Vec::new();
        let mut aux_next = vec![None; aux_default.len()];
        let mut aux_rule = vec![usize::MAX; aux_default.len()];
        for (b, r) in &realizations {
            if let FunctionRealization::Auxiliary { order, rhs } = r {
                for k in 0..*order {
                    let i = aux_index[&(b.clone(), k)];
                    if k + 1 < *order {
                        aux_next[i] = Some(aux_index[&(b.clone(), k + 1)]);
                    } else {
                        aux_rule[i] = aux_rhs.len();
                        aux_rhs.push(Compiled::new(rhs, &env)?);
                    }
                }
            }
        }

        let slots = |vars: &[Symbol]| -> Vec<Symbol> {
            vars.iter().cloned().chain(env.iter().cloned()).collect()
        };
        let mut num_charts = Vec::with_capacity(n);
        for (id, variant, vars, rhs, _, _) in &charts {
            let sl = slots(vars);
            let field = rhs
                .iter()
                .map(|e| Compiled::new(e, &sl))
                .collect::<Result<_, _>>()?;
            num_charts.push(NumChart {
                id: *id,
                variant: variant.clone(),
                vars: vars.clone(),
                field,
            });
        }
        let mut transitions = Vec::with_capacity(n);
        for (a, row) in trans_exprs.iter().enumerate() {
            let sl = slots(&charts[a].2);
            let mut out = Vec::with_capacity(n);
            for comps in row {
                out.push(match comps {
                    Some(cs) => Some(
                        cs.iter()
                            .map(|e| Compiled::new(e, &sl))
                            .collect::<Result<Vec<_>, _>>()?,
                    ),
                    None => None,
                });
            }
            transitions.push(out);
        }

        Ok(NumericAtlas {
            id: entry.id.clone(),
            charts: num_charts,
            transitions,
            env,
            sources,
            aux_rhs,
            aux_next,
            aux_rule,
            aux_default,
            constraints: cons.clone(),
            realizations,
        })
    }

    pub fn chart_ids(&self) -> Vec<u32> {
        self.charts.iter().map(|c| c.id).collect()
    }

    /// Variant name and coordinate names of a chart.
    pub fn chart_info(&self, id: u32) -> Option<(&str, Vec<String>)> {
        let c = self.charts.iter().find(|c| c.id == id)?;
        Some((
            c.variant.as_str(),
            c.vars.iter().map(|s| s.to_string()).collect(),
        ))
    }

    pub fn env_symbols(&self) -> &[Symbol] {
        &self.env
    }

    fn index(&self, id: u32) -> Result<usize, IntegratorError> {
        self.charts
            .iter()
            .position(|c| c.id == id)
            .ok_or(IntegratorError::UnknownChart(id))
    }

    pub fn dim(&self) -> usize {
        self.charts[0].vars.len()
    }

    pub fn aux_len(&self) -> usize {
        self.aux_default.len()
    }

    /// State in `U0` at `t0` with the default auxiliary values.
    pub fn initial_state(&self, t0: C, coords: Vec<C>) -> NumericState {
        NumericState {
            chart: 0,
            t: t0,
            coords,
            aux: self.aux_default.clone(),
        }
    }

    fn env_values(&self, t: C, aux: &[C]) -> Vec<C> {
        let mut vals = vec![C::new(0.0, 0.0); self.env.len()];
        for (i, s) in self.sources.iter().enumerate() {
            vals[i] = match s {
                Source::Time => t,
                Source::Param(v) => *v,
                Source::Aux(k) => aux[*k],
                Source::Explicit(c) => c.eval(&[t]),
                Source::Alg(_) => continue,
            };
        }
        for (i, s) in self.sources.iter().enumerate() {
            if let Source::Alg(c) = s {
                vals[i] = c.eval(&vals).sqrt();
            }
        }
        vals
    }

    /// Environment values with explicit overrides, for sampling.
    fn env_from(&self, lookup: &BTreeMap<Symbol, C>) -> Vec<C> {
        let mut vals: Vec<C> = self
            .env
            .iter()
            .map(|s| lookup.get(s).copied().unwrap_or(C::new(0.0, 0.0)))
            .collect();
        for (i, s) in self.sources.iter().enumerate() {
            if let Source::Alg(c) = s {
                vals[i] = c.eval(&vals).sqrt();
            }
        }
        vals
    }

    fn map_with_env(
        &self,
        a: usize,
        b: usize,
        coords: &[C],
        env: &[C],
    ) -> Result<Vec<C>, IntegratorError> {
        let comps = self.transitions[a][b]
            .as_ref()
            .ok_or(IntegratorError::NoInverse(self.charts[a].id))?;
        let mut slots = coords.to_vec();
        slots.extend_from_slice(env);
        let mut out = Vec::with_capacity(comps.len());
        for (i, c) in comps.iter().enumerate() {
            let (num, den) = c.eval_parts(&slots);
            if den.norm() == 0.0 || den.norm() < DEN_GUARD * num.norm() {
                return Err(IntegratorError::DenominatorNearZero {
                    from: self.charts[a].id,
                    to: self.charts[b].id,
                    component: i,
                });
            }
            out.push(num / den);
        }
        Ok(out)
    }

    /// Coordinates in chart `to` of the point with coordinates `coords` in chart `from`.
    pub fn transition(
        &self,
        from: u32,
        to: u32,
        t: C,
        coords: &[C],
        aux: &[C],
    ) -> Result<Vec<C>, IntegratorError> {
        let (a, b) = (self.index(from)?, self.index(to)?);
        if coords.len() != self.charts[a].vars.len() {
            return Err(IntegratorError::Dimension {
                expected: self.charts[a].vars.len(),
                got: coords.len(),
            });
        }
        if a == b {
            return Ok(coords.to_vec());
        }
        self.map_with_env(a, b, coords, &self.env_values(t, aux))
    }

    /// The state expressed in `U0`.
    pub fn to_base(&self, s: &NumericState) -> Result<Vec<C>, IntegratorError> {
        self.transition(s.chart, 0, s.t, &s.coords, &s.aux)
    }

    /// Value of an expression in the base coordinates at the state `s`.
    pub fn evaluate(&self, e: &Expr, s: &NumericState) -> Result<C, IntegratorError> {
        let base = self.to_base(s)?;
        let e = self.constraints.reduce(e)?;
        let mut slots = self.charts[0].vars.clone();
        slots.extend(self.env.iter().cloned());
        let mut vals = base;
        vals.extend(self.env_values(s.t, &s.aux));
        Ok(Compiled::new(&e, &slots)?.eval(&vals))
    }

    fn rhs(&self, chart: usize, t: C, y: &[C], dir: C, out: &mut [C]) {
        let n = self.charts[chart].vars.len();
        let env = self.env_values(t, &y[n..]);
        let mut slots = y[..n].to_vec();
        slots.extend_from_slice(&env);
        for (i, f) in self.charts[chart].field.iter().enumerate() {
            out[i] = dir * f.eval(&slots);
        }
        for (k, next) in self.aux_next.iter().enumerate() {
            out[n + k] = dir
                * match next {
                    Some(j) => y[n + j],
                    None => self.aux_rhs[self.aux_rule[k]].eval(&env),
                };
        }
    }

    /// Relative round-trip error of a switch `a -> b` at `coords`.
    fn switch_candidate(
        &self,
        a: usize,
        b: usize,
        coords: &[C],
        env: &[C],
    ) -> Option<(Vec<C>, f64)> {
        let new = self.map_with_env(a, b, coords, env).ok()?;
        if new.iter().any(|z| !z.is_finite()) {
            return None;
        }
        let back = self.map_with_env(b, a, &new, env).ok()?;
        let scale = coords.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let err = back
            .iter()
            .zip(coords)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max)
            / scale;
        Some((new, err))
    }

    /// Integrates along the polyline `init.t -> path[0] -> path[1] -> ...`.
    pub fn integrate_path(
        &self,
        init: NumericState,
        path: &[C],
        opts: &IntegratorOptions,
    ) -> Result<Trajectory, IntegratorError> {
        let mut chart = self.index(init.chart)?;
        let n = self.charts[chart].vars.len();
        if init.coords.len() != n {
            return Err(IntegratorError::Dimension {
                expected: n,
                got: init.coords.len(),
            });
        }
        if init.aux.len() != self.aux_len() {
            return Err(IntegratorError::Dimension {
                expected: self.aux_len(),
                got: init.aux.len(),
            });
        }
        if init.coords.iter().chain(&init.aux).any(|z| !z.is_finite()) || !init.t.is_finite() {
            return Err(IntegratorError::NonFinite);
        }
        let mut y: Vec<C> = init.coords.iter().chain(&init.aux).copied().collect();
        let mut t = init.t;
        let mut traj = Trajectory {
            id: self.id.clone(),
            samples: vec![Sample {
                t,
                chart: init.chart,
                coords: init.coords.clone(),
                event: Some("start".into()),
            }],
            switches: Vec::new(),
            accepted: 0,
            rejected: 0,
            end: init.clone(),
        };
        let max_abs = |y: &[C]| y[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut k = vec![vec![C::new(0.0, 0.0); y.len()]; 7];
        let mut ytmp = vec![C::new(0.0, 0.0); y.len()];
        let mut y5 = vec![C::new(0.0, 0.0); y.len()];
        let mut h = 1e-2;
        let mut steps = 0usize;

        for &target in path {
            let len = (target - t).norm();
            if len == 0.0 {
                continue;
            }
            let dir = (target - t) / len;
            let t0 = t;
            let mut s = 0.0;
            self.rhs(chart, t, &y, dir, &mut k[0]);
            while s < len {
                steps += 1;
                if steps > opts.max_steps {
                    return Err(IntegratorError::StepLimit(opts.max_steps));
                }
                let last = s + h >= len;
                let hs = if last { len - s } else { h };
                if hs < 1e-14 * (1.0 + t.norm()) && !last {
                    return Err(IntegratorError::StepUnderflow { t, h: hs });
                }
                dopri_stage(self, chart, t0, dir, s, hs, &y, &mut k, &mut ytmp, &mut y5);
                let err = error_norm(&y, &y5, &ytmp, opts.tol);
                let finite = y5.iter().all(|z| z.is_finite());
                let too_big = finite
                    && self.charts.len() > 1
                    && max_abs(&y5) > 2.0 * opts.r_out
                    && hs > 1e-10;
                if !finite || err > 1.0 || too_big {
                    traj.rejected += 1;
                    let f = if finite && err.is_finite() && !too_big {
                        (0.9 * err.powf(-0.2)).clamp(0.1, 0.5)
                    } else {
                        0.25
                    };
                    h = hs * f;
                    if h < 1e-14 * (1.0 + t.norm()) {
                        return Err(IntegratorError::StepUnderflow { t, h });
                    }
                    continue;
                }
                traj.accepted += 1;
                s = if last { len } else { s + hs };
                t = if last { target } else { t0 + dir * s };
                std::mem::swap(&mut y, &mut y5);
                // FSAL: stage 7 is the derivative at the new point
                k.swap(0, 6);
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = hs * grow;

                let mut event = None;
                let size = max_abs(&y);
                if size > opts.r_out {
                    let env = self.env_values(t, &y[n..]);
                    let mut best: Option<(usize, Vec<C>, f64, f64)> = None;
                    for b in 0..self.charts.len() {
                        if b == chart {
                            continue;
                        }
                        let Some((new, mis)) = self.switch_candidate(chart, b, &y[..n], &env)
                        else {
                            continue;
                        };
                        if mis > opts.tau_switch {
                            continue;
                        }
                        let m = new.iter().map(|z| z.norm()).fold(0.0, f64::max);
                        // strict comparison keeps the lowest id on ties (charts are in id order)
                        if best.as_ref().map(|bst| m < bst.2).unwrap_or(true) {
                            best = Some((b, new, m, mis));
                        }
                    }
                    match best {
                        Some((b, new, m, mis)) if m < opts.r_in => {
                            event = Some(self.record_switch(
                                &mut traj,
                                t,
                                chart,
                                b,
                                &y[..n],
                                &new,
                                mis,
                            ));
                            y[..n].copy_from_slice(&new);
                            chart = b;
                        }
                        _ => {
                            return Err(IntegratorError::NoViableChart {
                                t,
                                chart: self.charts[chart].id,
                                size,
                                r_in: opts.r_in,
                            })
                        }
                    }
                } else if opts.return_home && chart != 0 {
                    let env = self.env_values(t, &y[n..]);
                    if let Some((new, mis)) = self.switch_candidate(chart, 0, &y[..n], &env) {
                        let m = new.iter().map(|z| z.norm()).fold(0.0, f64::max);
                        if m < opts.r_in && mis <= opts.tau_switch {
                            event = Some(self.record_switch(
                                &mut traj,
                                t,
                                chart,
                                0,
                                &y[..n],
                                &new,
                                mis,
                            ));
                            y[..n].copy_from_slice(&new);
                            chart = 0;
                        }
                    }
                }
                if event.is_some() {
                    self.rhs(chart, t, &y, dir, &mut k[0]);
                }
                traj.samples.push(Sample {
                    t,
                    chart: self.charts[chart].id,
                    coords: y[..n].to_vec(),
                    event,
                });
            }
        }
        if let Some(last) = traj.samples.last_mut() {
            if last.event.is_none() {
                last.event = Some("end".into());
            }
        }
        traj.end = NumericState {
            chart: self.charts[chart].id,
            t,
            coords: y[..n].to_vec(),
            aux: y[n..].to_vec(),
        };
        Ok(traj)
    }

    #[allow(clippy::too_many_arguments)]
    fn record_switch(
        &self,
        traj: &mut Trajectory,
        t: C,
        a: usize,
        b: usize,
        before: &[C],
        after: &[C],
        mis: f64,
    ) -> String {
        let (from, to) = (self.charts[a].id, self.charts[b].id);
        traj.switches.push(SwitchEvent {
            t,
            from,
            to,
            before: before.to_vec(),
            after: after.to_vec(),
            mismatch: mis,
        });
        format!("switch {from}->{to}")
    }

    /// Forward-then-inverse error over random base points in the annulus `0.1 <= |z| <= 10`.
    pub fn roundtrip(&self, samples: usize, seed: u64) -> Result<RoundtripReport, IntegratorError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| {
            let r = 10f64.powf(rng.gen_range(-1.0..=1.0));
            C::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
        };
        let mut max_error: f64 = 0.0;
        let mut evaluated = 0usize;
        let mut skipped = 0usize;
        let n = self.dim();
        for _ in 0..samples {
            let lookup: BTreeMap<Symbol, C> = self
                .env
                .iter()
                .map(|s| (s.clone(), draw(&mut rng)))
                .collect();
            let env = self.env_from(&lookup);
            let p: Vec<C> = (0..n).map(|_| draw(&mut rng)).collect();
            for b in 1..self.charts.len() {
                let Ok(q) = self.map_with_env(0, b, &p, &env) else {
                    skipped += 1;
                    continue;
                };
                let Ok(back) = self.map_with_env(b, 0, &q, &env) else {
                    skipped += 1;
                    continue;
                };
                let e = back
                    .iter()
                    .zip(&p)
                    .map(|(u, v)| (u - v).norm() / v.norm().max(1.0))
                    .fold(0.0, f64::max);
                max_error = max_error.max(e);
                evaluated += 1;
            }
        }
        Ok(RoundtripReport {
            id: self.id.clone(),
            samples,
            evaluated,
            skipped,
            max_error,
            vacuous: evaluated == 0,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub id: String,
    pub samples: usize,
    /// Chart evaluations performed (samples times charts, less skipped ones).
    pub evaluated: usize,
    pub skipped: usize,
    pub max_error: f64,
    /// No evaluation was made; the bound holds trivially.
    pub vacuous: bool,
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const CS: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One step of size `h` from arc length `s`; `k[0]` holds the derivative at the start.
/// Leaves the 5th-order solution in `y5` and the error estimate in `err`.
#[allow(clippy::too_many_arguments)]
fn dopri_stage(
    at: &NumericAtlas,
    chart: usize,
    t0: C,
    dir: C,
    s: f64,
    h: f64,
    y: &[C],
    k: &mut [Vec<C>],
    err: &mut [C],
    y5: &mut [C],
) {
    let m = y.len();
    let mut yi = vec![C::new(0.0, 0.0); m];
    for stage in 0..6 {
        for j in 0..m {
            let mut acc = C::new(0.0, 0.0);
            for (l, a) in A[stage].iter().enumerate().take(stage + 1) {
                acc += *a * k[l][j];
            }
            yi[j] = y[j] + h * acc;
        }
        let t = t0 + dir * (s + CS[stage] * h);
        at.rhs(chart, t, &yi, dir, &mut k[stage + 1]);
    }
    // stage 6 was evaluated at the 5th-order solution
    y5.copy_from_slice(&yi);
    for j in 0..m {
        let mut acc = C::new(0.0, 0.0);
        for (l, e) in E.iter().enumerate() {
            acc += *e * k[l][j];
        }
        err[j] = h * acc;
    }
}

fn error_norm(y: &[C], y5: &[C], err: &[C], tol: f64) -> f64 {
    y.iter()
        .zip(y5)
        .zip(err)
        .map(|((a, b), e)| e.norm() / (tol * (1.0 + a.norm().max(b.norm()))))
        .fold(0.0, f64::max)
}

/// Integrates an entry from `U0` coordinates at `t0` along `path`.
pub fn integrate_path(
    entry: &EquationEntry,
    t0: C,
    coords: &[C],
    path: &[C],
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegratorError> {
    let at = NumericAtlas::new(entry, opts)?;
    let init = at.initial_state(t0, coords.to_vec());
    at.integrate_path(init, path, opts)
}

/// Evaluates the catalogued map between two charts at time `t` with default realizations.
pub fn transition_point(
    entry: &EquationEntry,
    from: u32,
    to: u32,
    t: C,
    coords: &[C],
) -> Result<Vec<C>, IntegratorError> {
    let opts = IntegratorOptions::default();
    let at = NumericAtlas::new(entry, &opts)?;
    let aux = at.aux_default.clone();
    at.transition(from, to, t, coords, &aux)
}

/// Floating round trip `U0 -> chart -> U0` over every chart.
pub fn roundtrip_check(
    entry: &EquationEntry,
    samples: usize,
    seed: u64,
) -> Result<RoundtripReport, IntegratorError> {
    NumericAtlas::new(entry, &IntegratorOptions::default())?.roundtrip(samples, seed)
}

/// Exact round trip: each chart's inverse composed with its forward map is the identity.
pub fn roundtrip_exact(entry: &EquationEntry) -> Result<bool, IntegratorError> {
    let Some(sys) = &entry.system else {
        return Ok(true);
    };
    for c in &entry.atlas {
        let inv: Bindings = match &c.inverse {
            Some(i) => sys.vars.iter().cloned().zip(i.iter().cloned()).collect(),
            None => invert(&c.forward, &sys.vars, &c.vars)?,
        };
        for (f, v) in c.forward.iter().zip(&c.vars) {
            let back = entry.constraints.reduce(&f.substitute(&inv)?)?;
            if back != Expr::symbol(v.clone()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
