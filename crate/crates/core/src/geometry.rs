//! Projective charts, accessible singularities, local indices and scripted blow-ups.

use serde::Serialize;
use thiserror::Error;

use crate::expr::solve::{roots_in, solve_linear};
use crate::expr::{
    total_derivative, Bindings, ConstraintRule, ConstraintSet, Expr, ExprError, Symbol,
};
use crate::field::{invert, VectorField};
use crate::registry::{EquationEntry, IndexPoint, ResolutionScript, Step, StepKind};
use crate::verifier::{Verdict, VerificationReport};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("{0}: only planar systems are supported")]
    NotPlanar(String),
    #[error("{0}: field has no divisor variable")]
    NoDivisor(String),
    #[error("boundary equation does not split: {0}")]
    NonRationalRoot(String),
    #[error("no coordinate order makes the linear part lower triangular: {0}")]
    NotTriangularizable(String),
    #[error("divisor eigenvalue vanishes at {0}")]
    DegenerateIndex(String),
    #[error("step {step}: center {center} is not on the divisor")]
    CenterNotOnDivisor { step: usize, center: String },
    #[error("obstruction cannot be solved as a constraint: {0}")]
    ObstructionNotSolvable(String),
    #[error("{0}")]
    Script(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl GeometryError {
    fn from_roots(e: ExprError) -> GeometryError {
        match e {
            ExprError::NonRationalRoot(s) => GeometryError::NonRationalRoot(s),
            other => GeometryError::Expr(other),
        }
    }
}

fn sym(v: &Symbol) -> Expr {
    Expr::symbol(v.clone())
}

fn planar(f: &VectorField) -> Result<(), GeometryError> {
    if f.dim() != 2 {
        return Err(GeometryError::NotPlanar(f.chart.clone()));
    }
    Ok(())
}

/// Renames the coordinates of a field without changing the rates.
pub fn rename(f: &VectorField, vars: &[Symbol]) -> Result<VectorField, GeometryError> {
    let b: Bindings = f.vars.iter().cloned().zip(vars.iter().map(sym)).collect();
    let rhs = f
        .rhs
        .iter()
        .map(|e| e.substitute(&b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VectorField {
        chart: f.chart.clone(),
        vars: vars.to_vec(),
        rhs,
        divisor: f.divisor,
    })
}

/// The forward maps of the standard charts in terms of `(x, y)`.
pub fn p2_chart_map(chart: &str, x: &Symbol, y: &Symbol) -> Option<[Expr; 2]> {
    let (x, y) = (sym(x), sym(y));
    Some(match chart {
        "U0" => [x, y],
        "U1" => [x.inv().ok()?, y.div(&x).ok()?],
        "U2" => [x.div(&y).ok()?, y.inv().ok()?],
        _ => return None,
    })
}

/// The field in the three affine charts of the projective plane: `U0` (the input),
/// `U1 = (1/x, y/x)` with divisor `X1`, `U2 = (x/y, 1/y)` with divisor `Y2`.
pub fn extend_to_p2(
    f: &VectorField,
    constraints: Option<&ConstraintSet>,
) -> Result<Vec<VectorField>, GeometryError> {
    planar(f)?;
    let (x, y) = (&f.vars[0], &f.vars[1]);
    let mut out = vec![VectorField {
        chart: "U0".into(),
        divisor: None,
        ..f.clone()
    }];
    let (x1, y1) = (Symbol::var("X1"), Symbol::var("Y1"));
    let (x2, y2) = (Symbol::var("X2"), Symbol::var("Y2"));
    let inv1 = [sym(&x1).inv()?, sym(&y1).div(&sym(&x1))?];
    let inv2 = [sym(&x2).div(&sym(&y2))?, sym(&y2).inv()?];
    let m1 = p2_chart_map("U1", x, y).expect("standard chart");
    let m2 = p2_chart_map("U2", x, y).expect("standard chart");
    out.push(
        f.change_coordinates("U1", &m1, &[x1, y1], Some(&inv1), constraints)?
            .with_divisor(0),
    );
    out.push(
        f.change_coordinates("U2", &m2, &[x2, y2], Some(&inv2), constraints)?
            .with_divisor(1),
    );
    Ok(out)
}

/// Time rescaling `dt = d^s dτ` that makes the divisor rate holomorphic and the others
/// at most simple poles along `d = 0`; `None` when the field has no pole there.
fn rescaling(f: &VectorField) -> Result<Option<(usize, usize, i64)>, GeometryError> {
    planar(f)?;
    let d = f
        .divisor
        .ok_or_else(|| GeometryError::NoDivisor(f.chart.clone()))?;
    let o = 1 - d;
    let dv = &f.vars[d];
    let kd = f.rhs[d].pole_order(dv);
    let ko = f.rhs[o].pole_order(dv);
    if kd <= 0 && ko <= 0 {
        return Ok(None);
    }
    Ok(Some((d, o, kd.max(ko - 1))))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccessibleSingularity {
    pub chart: String,
    pub vars: Vec<String>,
    #[serde(serialize_with = "ser_exprs")]
    pub point: Vec<Expr>,
    pub multiplicity: u32,
    /// Restriction order divided by the curve multiplicity did not divide evenly.
    pub multiplicity_heuristic: bool,
}

fn ser_exprs<S: serde::Serializer>(v: &[Expr], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|e| e.to_text()))
}

/// Numerator of `d * rhs_o` after rescaling, the curve of accessible points.
fn accessibility_curve(f: &VectorField, d: usize, o: usize, s: i64) -> Expr {
    f.rhs[o].mul_pow(&f.vars[d], s + 1)
}

/// Lowest total degree in `vars` of the expansion of `g` at `point`.
fn multiplicity_at(g: &Expr, vars: &[Symbol], point: &[Expr]) -> Result<u32, ExprError> {
    let b: Bindings = vars
        .iter()
        .cloned()
        .zip(vars.iter().zip(point).map(|(v, p)| sym(v).add(p)))
        .collect();
    let h = Expr::from_poly(g.numer().clone()).substitute(&b)?;
    let p = h.numer();
    let idx: Vec<Option<usize>> = vars.iter().map(|v| p.var_index(v)).collect();
    Ok(p.terms()
        .map(|(e, _)| {
            idx.iter()
                .map(|i| i.map(|i| e[i]).unwrap_or(0))
                .sum::<u32>()
        })
        .min()
        .unwrap_or(0))
}

/// Accessible points on the divisor of each field that has one.
///
/// A divisor along which the rescaled field has no pole, or which is invariant, carries
/// no accessible point. In the chart `U2` only the origin is new (the rest is seen from `U1`).
pub fn find_accessible_singularities(
    fields: &[VectorField],
) -> Result<Vec<AccessibleSingularity>, GeometryError> {
    let mut out = Vec::new();
    for f in fields {
        if f.divisor.is_none() {
            continue;
        }
        out.extend(accessible_in_chart(f)?);
    }
    Ok(out)
}

pub fn accessible_in_chart(f: &VectorField) -> Result<Vec<AccessibleSingularity>, GeometryError> {
    let Some((d, o, s)) = rescaling(f)? else {
        return Ok(Vec::new());
    };
    let dv = &f.vars[d];
    let ov = &f.vars[o];
    let fd = f.rhs[d].mul_pow(dv, s);
    if fd.subs1(dv, &Expr::zero())?.is_zero() {
        return Ok(Vec::new());
    }
    let g = accessibility_curve(f, d, o, s);
    let g0 = g.subs1(dv, &Expr::zero())?;
    if g0.is_zero() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (root, ord) in roots_in(&g0, ov).map_err(GeometryError::from_roots)? {
        if f.chart == "U2" && !root.is_zero() {
            continue;
        }
        let mut point = vec![Expr::zero(); 2];
        point[o] = root;
        let m = multiplicity_at(&g, &f.vars, &point)?.max(1);
        out.push(AccessibleSingularity {
            chart: f.chart.clone(),
            vars: f.vars.iter().map(|v| v.to_string()).collect(),
            point,
            multiplicity: (ord / m).max(1),
            multiplicity_heuristic: ord % m != 0,
        });
    }
    Ok(out)
}

/// Certificate: the point is on the divisor and the accessibility curve
/// vanishes there.
pub fn certify(f: &VectorField, p: &AccessibleSingularity) -> Result<bool, GeometryError> {
    let Some((d, o, s)) = rescaling(f)? else {
        return Ok(false);
    };
    let g = accessibility_curve(f, d, o, s);
    let b: Bindings = f
        .vars
        .iter()
        .cloned()
        .zip(p.point.iter().cloned())
        .collect();
    Ok(p.point[d].is_zero() && g.substitute(&b)?.is_zero())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalIndex {
    #[serde(serialize_with = "ser_matrix")]
    pub matrix: Vec<Vec<Expr>>,
    /// Diagonal in chart order.
    #[serde(serialize_with = "ser_exprs")]
    pub eigenvalues: Vec<Expr>,
    /// `(1, a_oo / a_dd)`, normalized by the divisor eigenvalue.
    #[serde(serialize_with = "ser_exprs")]
    pub ratios: Vec<Expr>,
    pub integral: Vec<bool>,
    /// False when some ratio is not a rational number.
    pub numeric: bool,
    /// Coordinate order (chart indices) in which the matrix is lower triangular.
    pub order: Vec<usize>,
    pub divisor: usize,
}

fn ser_matrix<S: serde::Serializer>(m: &[Vec<Expr>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(
        m.iter()
            .map(|r| r.iter().map(|e| e.to_text()).collect::<Vec<_>>()),
    )
}

impl LocalIndex {
    pub fn divisor_eigenvalue(&self) -> &Expr {
        &self.eigenvalues[self.divisor]
    }

    /// The eigenvalue ratio other/divisor for a planar field.
    pub fn ratio(&self) -> &Expr {
        &self.ratios[1]
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in (0..n).rev() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Jacobian at `point` of `d * rhs` for the rescaled field, its diagonal and ratios.
pub fn local_index_at(f: &VectorField, point: &[Expr]) -> Result<LocalIndex, GeometryError> {
    let (d, _, s) = rescaling(f)?.ok_or_else(|| GeometryError::DegenerateIndex(f.chart.clone()))?;
    let dv = &f.vars[d];
    let n: Vec<Expr> = f.rhs.iter().map(|e| e.mul_pow(dv, s + 1)).collect();
    let at: Bindings = f.vars.iter().cloned().zip(point.iter().cloned()).collect();
    let mut a = vec![vec![Expr::zero(); f.dim()]; f.dim()];
    for (i, ni) in n.iter().enumerate() {
        for (j, v) in f.vars.iter().enumerate() {
            a[i][j] = ni.partial(v).substitute(&at)?;
        }
    }
    let order = permutations(f.dim())
        .into_iter()
        .find(|p| (0..p.len()).all(|i| (i + 1..p.len()).all(|j| a[p[i]][p[j]].is_zero())))
        .ok_or_else(|| {
            let rows: Vec<String> = a
                .iter()
                .map(|r| r.iter().map(|e| e.to_text()).collect::<Vec<_>>().join(", "))
                .collect();
            GeometryError::NotTriangularizable(format!("[{}]", rows.join("; ")))
        })?;
    let eig: Vec<Expr> = (0..f.dim()).map(|i| a[i][i].clone()).collect();
    if eig[d].is_zero() {
        return Err(GeometryError::DegenerateIndex(f.chart.clone()));
    }
    let mut ratios = vec![Expr::one()];
    for (i, e) in eig.iter().enumerate() {
        if i != d {
            ratios.push(e.div(&eig[d])?);
        }
    }
    let integral = ratios
        .iter()
        .map(|r| r.as_rational().map(|(_, q)| q == 1.into()).unwrap_or(false))
        .collect();
    let numeric = ratios.iter().all(|r| r.as_rational().is_some());
    Ok(LocalIndex {
        matrix: a,
        eigenvalues: eig,
        ratios,
        integral,
        numeric,
        order,
        divisor: d,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaTest {
    /// `dX/dT = A(t0) X / X_d`, coefficients frozen at `t = t0`.
    pub reduced: crate::field::FieldText,
    pub index: LocalIndex,
    /// `None` when some ratio is symbolic.
    pub single_valued: Option<bool>,
    pub reason: String,
}

/// Scaling `t = t0 + αT`, `x = αX` and the single-valuedness verdict of the limit system.
pub fn alpha_test(
    f: &VectorField,
    point: &[Expr],
    t0: &Symbol,
) -> Result<AlphaTest, GeometryError> {
    let index = local_index_at(f, point)?;
    let d = index.divisor;
    let xs: Vec<Symbol> = (0..f.dim())
        .map(|i| Symbol::var(&format!("X{}", i + 1)))
        .collect();
    let freeze: Bindings = [(Symbol::Time, sym(t0))].into_iter().collect();
    let mut rhs = Vec::new();
    for row in &index.matrix {
        let mut s = Expr::zero();
        for (a, x) in row.iter().zip(&xs) {
            s = s.add(&a.substitute(&freeze)?.mul(&sym(x)));
        }
        rhs.push(s.div(&sym(&xs[d]))?);
    }
    let reduced = VectorField::new("alpha", xs, rhs).with_divisor(d).to_text();
    let (single_valued, reason) = if !index.numeric {
        (None, "symbolic ratio".to_string())
    } else if let Some(i) = index.integral.iter().position(|b| !b) {
        (
            Some(false),
            format!("ratio {} is not an integer", index.ratios[i].to_text()),
        )
    } else {
        let n = f.dim();
        let mut log = None;
        for i in 0..n {
            for j in 0..n {
                if i != j
                    && index.eigenvalues[i] == index.eigenvalues[j]
                    && !index.matrix[i][j].is_zero()
                {
                    log = Some(format!(
                        "equal eigenvalues with a{}{} = {}",
                        i + 1,
                        j + 1,
                        index.matrix[i][j].to_text()
                    ));
                }
            }
        }
        match log {
            Some(r) => (Some(false), r),
            None => (Some(true), "integral ratios".into()),
        }
    };
    Ok(AlphaTest {
        reduced,
        index,
        single_valued,
        reason,
    })
}

/// `step.map` as functions of the new coordinates.
pub fn step_inverse(step: &Step, vars: &[Symbol]) -> Result<Vec<Expr>, GeometryError> {
    let tmp: Vec<Symbol> = (0..vars.len())
        .map(|i| Symbol::var(&format!("_s{i}")))
        .collect();
    let inv = invert(&step.map, vars, &tmp)?;
    let back: Bindings = tmp.iter().cloned().zip(vars.iter().map(sym)).collect();
    vars.iter().map(|v| Ok(inv[v].substitute(&back)?)).collect()
}

/// One blow-up or coordinate change; coordinates keep their names.
pub fn apply_step(
    f: &VectorField,
    step: &Step,
    index: usize,
) -> Result<VectorField, GeometryError> {
    if let (StepKind::Blowup, Some(c), Some(d)) = (step.kind, &step.center, f.divisor) {
        if !c[d].is_zero() {
            return Err(GeometryError::CenterNotOnDivisor {
                step: index,
                center: c[d].to_text(),
            });
        }
    }
    let chart = format!("step {index}");
    Ok(
        f.change_coordinates(&chart, &step.map, &f.vars, None, None)?
            .with_divisor(step.divisor),
    )
}

/// Undoes a step with its inverse map.
pub fn blow_down(
    f: &VectorField,
    step: &Step,
    divisor: Option<usize>,
) -> Result<VectorField, GeometryError> {
    let inv = step_inverse(step, &f.vars)?;
    let mut g = f.change_coordinates("blow-down", &inv, &f.vars, Some(&step.map), None)?;
    g.divisor = divisor;
    Ok(g)
}

/// The starting field of a script, in the entry's coordinate names.
pub fn script_start(
    entry: &EquationEntry,
    script: &ResolutionScript,
) -> Result<VectorField, GeometryError> {
    let sys = entry
        .system
        .as_ref()
        .ok_or_else(|| GeometryError::Script(format!("{} has no system", entry.id)))?;
    let charts = extend_to_p2(sys, None)?;
    let f = charts
        .into_iter()
        .find(|c| c.chart == script.start)
        .ok_or_else(|| GeometryError::Script(format!("unknown start chart {}", script.start)))?;
    rename(&f, &entry.vars)
}

/// Fields after each step; element 0 is the start.
pub fn script_stages(
    entry: &EquationEntry,
    script: &ResolutionScript,
    upto: usize,
) -> Result<Vec<VectorField>, GeometryError> {
    let mut v = vec![script_start(entry, script)?];
    for (k, st) in script.steps.iter().take(upto).enumerate() {
        let next = apply_step(v.last().expect("nonempty"), st, k + 1)?;
        v.push(next);
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstraint {
    pub lhs: Symbol,
    pub rhs: Expr,
    /// Number of integrations from the obstruction.
    pub integrations: u8,
}

#[derive(Clone, Debug)]
pub struct ResolutionResult {
    pub name: String,
    pub variant: String,
    pub stages: Vec<VectorField>,
    pub obstruction: Expr,
    pub constraint: Option<DerivedConstraint>,
    pub polynomial_with_constraint: bool,
    pub polynomial_without_constraint: bool,
    /// Catalogued chart variant equal to the composed map, when one is named.
    pub chart_agreement: Option<Result<String, String>>,
}

impl ResolutionResult {
    pub fn final_field(&self) -> &VectorField {
        self.stages.last().expect("nonempty")
    }

    pub fn resolved(&self) -> bool {
        self.polynomial_with_constraint
            && self
                .chart_agreement
                .as_ref()
                .map(|r| r.is_ok())
                .unwrap_or(true)
    }
}

/// Leading coefficient of the divisor pole of the first component that has one.
pub fn obstruction(f: &VectorField) -> Result<Expr, GeometryError> {
    let d = f
        .divisor
        .ok_or_else(|| GeometryError::NoDivisor(f.chart.clone()))?;
    let dv = &f.vars[d];
    for e in &f.rhs {
        let k = e.pole_order(dv);
        if k > 0 {
            return Ok(e.mul_pow(dv, k).subs1(dv, &Expr::zero())?);
        }
    }
    Ok(Expr::zero())
}

fn top_order(e: &Expr, base: &str) -> Option<u8> {
    e.symbols()
        .iter()
        .filter_map(|s| match s {
            Symbol::Func(b, k) if **b == *base => Some(*k),
            _ => None,
        })
        .max()
}

fn jet_derivative(e: &Expr) -> Result<Expr, ExprError> {
    total_derivative(e, &Default::default(), None)
}

/// Antiderivative of `e` in `s`, for `e` polynomial in `s`.
fn integrate_in(e: &Expr, s: &Symbol) -> Option<Expr> {
    let cs = e.poly_coefficients(s)?;
    let mut out = Expr::zero();
    for (k, c) in cs.iter().enumerate() {
        out = out.add(
            &c.mul(&sym(s).pow(k as i64 + 1).ok()?)
                .div(&Expr::int(k as i64 + 1))
                .ok()?,
        );
    }
    Some(out)
}

/// `P` with `dP/dt = e`, for `e` an exact differential polynomial in the jets of `base`
/// and `t`; constants of integration are left out.
pub fn integrate_exact(e: &Expr, base: &str) -> Result<Expr, GeometryError> {
    let fail = || {
        GeometryError::ObstructionNotSolvable(format!("{} is not a total derivative", e.to_text()))
    };
    if e.is_zero() {
        return Ok(Expr::zero());
    }
    match top_order(e, base) {
        None => {
            if e.symbols()
                .iter()
                .any(|s| matches!(s, Symbol::Func(..) | Symbol::Var(_)))
            {
                return Err(fail());
            }
            integrate_in(e, &Symbol::Time).ok_or_else(fail)
        }
        Some(0) => Err(fail()),
        Some(n) => {
            let top = Symbol::func(base, n);
            let cs = e.poly_coefficients(&top).ok_or_else(fail)?;
            if cs.len() != 2 {
                return Err(fail());
            }
            let p1 = integrate_in(&cs[1], &Symbol::func(base, n - 1)).ok_or_else(fail)?;
            let rest = e.sub(&jet_derivative(&p1)?);
            if top_order(&rest, base).map(|k| k >= n).unwrap_or(false) {
                return Err(fail());
            }
            Ok(p1.add(&integrate_exact(&rest, base)?))
        }
    }
}

/// Solves `obstruction = 0` for `target`, integrating first when `target` is a derivative
/// below the top order present; `kernel` supplies the constants of integration.
pub fn derive_constraint(
    obs: &Expr,
    target: &Symbol,
    kernel: Option<&Expr>,
) -> Result<DerivedConstraint, GeometryError> {
    let Symbol::Func(base, k) = target else {
        return Err(GeometryError::ObstructionNotSolvable(format!(
            "{target} is not a function symbol"
        )));
    };
    let top =
        top_order(obs, base).ok_or_else(|| GeometryError::ObstructionNotSolvable(obs.to_text()))?;
    if top < *k {
        return Err(GeometryError::ObstructionNotSolvable(format!(
            "{} does not involve {target}",
            obs.to_text()
        )));
    }
    let m = top - k;
    let mut p = obs.clone();
    if m > 0 {
        let cs = p
            .poly_coefficients(&Symbol::func(base, top))
            .ok_or_else(|| GeometryError::ObstructionNotSolvable(obs.to_text()))?;
        if cs.len() != 2 {
            return Err(GeometryError::ObstructionNotSolvable(obs.to_text()));
        }
        p = p.div(&cs[1])?;
        for _ in 0..m {
            p = integrate_exact(&p, base)?;
        }
        let kern = kernel.cloned().unwrap_or_else(Expr::zero);
        let mut dk = kern.clone();
        for _ in 0..m {
            dk = jet_derivative(&dk)?;
        }
        if !dk.is_zero() {
            return Err(GeometryError::ObstructionNotSolvable(format!(
                "kernel {} is not annihilated",
                kern.to_text()
            )));
        }
        p = p.sub(&kern);
    }
    let sol = solve_linear(&[p], std::slice::from_ref(target))
        .map_err(|_| GeometryError::ObstructionNotSolvable(obs.to_text()))?;
    Ok(DerivedConstraint {
        lhs: target.clone(),
        rhs: sol[target].clone(),
        integrations: m,
    })
}

/// Composes the start chart and the step maps into functions of the original coordinates.
pub fn composed_map(
    entry: &EquationEntry,
    script: &ResolutionScript,
    upto: usize,
) -> Result<Vec<Expr>, GeometryError> {
    let (x, y) = (&entry.vars[0], &entry.vars[1]);
    let mut cur: Vec<Expr> = p2_chart_map(&script.start, x, y)
        .ok_or_else(|| GeometryError::Script(format!("unknown start chart {}", script.start)))?
        .to_vec();
    for st in script.steps.iter().take(upto) {
        let b: Bindings = entry
            .vars
            .iter()
            .cloned()
            .zip(cur.iter().cloned())
            .collect();
        cur = st
            .map
            .iter()
            .map(|m| m.substitute(&b))
            .collect::<Result<_, _>>()?;
    }
    Ok(cur)
}

/// Runs a catalogued script and extracts, solves and checks the obstruction.
pub fn run_resolution(
    entry: &EquationEntry,
    script: &ResolutionScript,
) -> Result<ResolutionResult, GeometryError> {
    let stages = script_stages(entry, script, script.steps.len())?;
    let last = stages.last().expect("nonempty");
    let obs = obstruction(last)?;
    let constraint = match &script.solve_for {
        Some(t) if !obs.is_zero() => Some(derive_constraint(&obs, t, script.kernel.as_ref())?),
        _ => None,
    };
    let polynomial_without_constraint = last.is_polynomial();
    let polynomial_with_constraint = match &constraint {
        Some(c) => {
            let Symbol::Func(b, k) = &c.lhs else {
                unreachable!("checked in derive_constraint")
            };
            let set = ConstraintSet::new(vec![ConstraintRule::new(b, *k, c.rhs.clone())?])?;
            last.reduce(&set)?.is_polynomial()
        }
        None => polynomial_without_constraint,
    };
    let chart_agreement = match script.matches_chart {
        Some(id) => {
            let comp = composed_map(entry, script, script.steps.len())?;
            let comp: Vec<Expr> = comp
                .iter()
                .map(|e| entry.constraints.reduce(e))
                .collect::<Result<_, _>>()?;
            let mut hit = None;
            for c in entry.atlas.iter().filter(|c| c.id == id) {
                let mut fw: Vec<Expr> = c
                    .forward
                    .iter()
                    .map(|e| entry.constraints.reduce(e))
                    .collect::<Result<_, _>>()?;
                if script.swap {
                    fw.swap(0, 1);
                }
                if fw == comp {
                    hit = Some(c.variant.clone());
                    break;
                }
            }
            Some(hit.ok_or_else(|| {
                format!(
                    "composed map ({}) matches no variant of chart {id}",
                    comp.iter()
                        .map(|e| e.to_text())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            }))
        }
        None => None,
    };
    Ok(ResolutionResult {
        name: script.name.clone(),
        variant: script.variant.clone(),
        stages,
        obstruction: obs,
        constraint,
        polynomial_with_constraint,
        polynomial_without_constraint,
        chart_agreement,
    })
}

/// Local index at a catalogued point of a resolution.
pub fn index_at(entry: &EquationEntry, p: &IndexPoint) -> Result<LocalIndex, GeometryError> {
    let script = entry
        .resolution(&p.resolution, Some(&p.variant))
        .ok_or_else(|| {
            GeometryError::Script(format!("no resolution {} ({})", p.resolution, p.variant))
        })?;
    let stages = script_stages(entry, script, p.after_step)?;
    local_index_at(stages.last().expect("nonempty"), &p.point)
}

/// Next centers on the current divisor: roots of the leading pole coefficient.
pub fn suggest_centers(f: &VectorField) -> Result<Vec<Vec<Expr>>, GeometryError> {
    planar(f)?;
    let d = f
        .divisor
        .ok_or_else(|| GeometryError::NoDivisor(f.chart.clone()))?;
    let o = 1 - d;
    let obs = obstruction(f)?;
    if obs.is_zero() {
        return Ok(Vec::new());
    }
    let roots = roots_in(&obs, &f.vars[o]).map_err(GeometryError::from_roots)?;
    Ok(roots
        .into_iter()
        .map(|(r, _)| {
            let mut p = vec![Expr::zero(); 2];
            p[o] = r;
            p
        })
        .collect())
}

/// Every catalogued chart turns the system into a polynomial field (constraints applied).
/// A surface labelled `P2` passes when the projective plane has no accessible point.
pub fn check_atlas_polynomial(entry: &EquationEntry) -> VerificationReport {
    let start = std::time::Instant::now();
    let mut r = atlas_inner(entry);
    r.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    r
}

fn report(
    id: &str,
    verdict: Verdict,
    residual: Vec<Expr>,
    notes: Vec<String>,
) -> VerificationReport {
    VerificationReport {
        id: id.to_string(),
        check: "atlas".into(),
        verdict,
        residual,
        variant: None,
        notes,
        wall_time_ms: 0.0,
    }
}

fn atlas_inner(entry: &EquationEntry) -> VerificationReport {
    let Some(sys) = &entry.system else {
        return report(
            &entry.id,
            Verdict::Skipped,
            Vec::new(),
            vec!["no system".into()],
        );
    };
    if entry.surface.as_deref() == Some("P2") {
        return match extend_to_p2(sys, Some(&entry.constraints))
            .and_then(|f| find_accessible_singularities(&f))
        {
            Ok(pts) if pts.is_empty() => report(
                &entry.id,
                Verdict::Pass,
                vec![Expr::zero()],
                vec!["no accessible singular point on the line at infinity".into()],
            ),
            Ok(pts) => report(
                &entry.id,
                Verdict::Fail,
                vec![Expr::int(pts.len() as i64)],
                vec![format!("{} accessible points", pts.len())],
            ),
            Err(e) => report(&entry.id, Verdict::Fail, Vec::new(), vec![e.to_string()]),
        };
    }
    if entry.atlas.is_empty() {
        return report(
            &entry.id,
            Verdict::Skipped,
            Vec::new(),
            vec!["no charts".into()],
        );
    }
    let mut residual = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;
    for id in entry.chart_ids() {
        let mut passing = None;
        let mut first_bad = None;
        let mut failing = Vec::new();
        for c in entry.atlas.iter().filter(|c| c.id == id) {
            let f = sys.change_coordinates(
                &format!("chart {id}"),
                &c.forward,
                &c.vars,
                c.inverse.as_deref(),
                Some(&entry.constraints),
            );
            match f {
                Ok(f) if f.is_polynomial() => {
                    if passing.is_none() {
                        passing = Some(c.variant.clone());
                    }
                }
                Ok(f) => {
                    failing.push(c.variant.clone());
                    if first_bad.is_none() {
                        first_bad = f.rhs.iter().find(|e| !e.is_polynomial_in(&f.vars)).cloned();
                    }
                }
                Err(e) => {
                    failing.push(format!("{} ({e})", c.variant));
                    first_bad.get_or_insert(Expr::one());
                }
            }
        }
        match passing {
            Some(v) => {
                residual.push(Expr::zero());
                let mut n = format!("chart {id}: {v}");
                if !failing.is_empty() {
                    n.push_str(&format!(" (not polynomial: {})", failing.join(", ")));
                }
                notes.push(n);
            }
            None => {
                ok = false;
                residual.push(first_bad.unwrap_or_else(Expr::one));
                notes.push(format!("chart {id}: not polynomial"));
            }
        }
    }
    report(
        &entry.id,
        if ok { Verdict::Pass } else { Verdict::Fail },
        residual,
        notes,
    )
}

/// Name of the divisor variable.
pub fn divisor_name(f: &VectorField) -> Option<String> {
    f.divisor.map(|d| f.vars[d].to_string())
}
