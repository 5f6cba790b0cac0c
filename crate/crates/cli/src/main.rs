//! `ince`: verification, singularity analysis, resolution and integration from the shell.

use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ince_core::atlas_integrator::{IntegratorOptions, NumericAtlas, R_IN, R_OUT, TAU_SWITCH};
use ince_core::expr::{parse, Expr};
use ince_core::geometry::{
    alpha_test, certify, extend_to_p2, find_accessible_singularities, index_at, run_resolution,
    script_stages, GeometryError, ResolutionResult,
};
use ince_core::registry::{Catalog, EquationEntry};
use ince_core::verifier::mutation::mutation_suite;
use ince_core::verifier::{
    verify_catalog, verify_entry, verify_links, Verdict, VerificationReport,
};
use num_complex::Complex64;
use serde_json::{json, Value};

const OK: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;
const CATALOG: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ince",
    version,
    about = "Checks and integrates Painlevé-type equations from Ince's list"
)]
struct Cli {
    /// Catalog file; the bundled catalog when absent.
    #[arg(long, global = true, env = "INCE_CATALOG")]
    catalog: Option<PathBuf>,
    /// Output format; text on a terminal, json otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Report measured wall times (otherwise 0, so reports are reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// List entries and their status.
    Catalog,
    /// Run every applicable check.
    Verify {
        /// Entry id, e.g. Ince-XII.
        id: Option<String>,
        #[arg(long, conflicts_with = "id")]
        all: bool,
        /// Restrict the scalar equation to this variant.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Accessible singular points, local indices and the single-valuedness test.
    Singularities { id: String },
    /// Run the catalogued blow-up scripts and report the derived constraints.
    Resolve {
        id: String,
        /// Script name, e.g. P1.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        variant: Option<String>,
    },
    /// Integrate along a complex polyline, switching charts at incipient blow-up.
    Integrate(IntegrateArgs),
    /// Forward-then-inverse error of every chart at random points.
    Roundtrip {
        id: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Inject sign flips into passing identities and rerun the checks.
    Mutate {
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
}

#[derive(Args)]
struct IntegrateArgs {
    id: String,
    /// Initial base-chart coordinates, comma separated (`-1,1`, `0.5+2i,1`).
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    /// Path vertices after the start time, comma separated (`1+0.5i,2`).
    #[arg(long, allow_hyphen_values = true)]
    path: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    t0: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Parameter value, `name=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    /// Initial auxiliary state, `q=1,0`; repeatable.
    #[arg(long = "aux")]
    aux: Vec<String>,
    /// Explicit realization of a function, `r=1+t^2`; repeatable.
    #[arg(long = "func")]
    funcs: Vec<String>,
    #[arg(long, default_value_t = R_OUT)]
    r_out: f64,
    #[arg(long, default_value_t = R_IN)]
    r_in: f64,
    #[arg(long, default_value_t = TAU_SWITCH)]
    tau_switch: f64,
    /// Also write the trajectory as CSV.
    #[arg(long)]
    dump_csv: Option<PathBuf>,
}

struct Out {
    json: bool,
    buf: String,
}

impl Out {
    fn line(&mut self, s: impl AsRef<str>) {
        self.buf.push_str(s.as_ref());
        self.buf.push('\n');
    }

    fn value(&mut self, v: &Value) {
        self.buf
            .push_str(&serde_json::to_string_pretty(v).expect("json"));
        self.buf.push('\n');
    }
}

enum Failure {
    Usage(String),
    Catalog(String),
    Check(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let json = match cli.format {
        Some(f) => f == Format::Json,
        None => cli.output.is_some() || !std::io::stdout().is_terminal(),
    };
    let mut out = Out {
        json,
        buf: String::new(),
    };
    let code = match run(&cli, &mut out) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            USAGE
        }
        Err(Failure::Catalog(m)) => {
            eprintln!("catalog error: {m}");
            CATALOG
        }
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            FAILED
        }
    };
    let written = match &cli.output {
        Some(p) => std::fs::write(p, &out.buf).map_err(|e| e.to_string()),
        None => std::io::stdout()
            .write_all(out.buf.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(FAILED);
    }
    ExitCode::from(code)
}

fn load(cli: &Cli) -> Result<&'static Catalog, Failure> {
    match &cli.catalog {
        None => Catalog::bundled().map_err(|e| Failure::Catalog(e.to_string())),
        Some(p) => {
            let src = std::fs::read_to_string(p)
                .map_err(|e| Failure::Catalog(format!("{}: {e}", p.display())))?;
            let c = Catalog::load(&src).map_err(|e| Failure::Catalog(e.to_string()))?;
            Ok(Box::leak(Box::new(c)))
        }
    }
}

fn entry<'a>(cat: &'a Catalog, id: &str) -> Result<&'a EquationEntry, Failure> {
    cat.get(id).map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: &Cli, out: &mut Out) -> Result<u8, Failure> {
    let cat = load(cli)?;
    match &cli.cmd {
        Cmd::Catalog => catalog(cat, out),
        Cmd::Verify { id, all, variant } => {
            verify(cli, cat, id.as_deref(), *all, variant.as_deref(), out)
        }
        Cmd::Singularities { id } => singularities(entry(cat, id)?, out),
        Cmd::Resolve { id, name, variant } => {
            resolve(entry(cat, id)?, name.as_deref(), variant.as_deref(), out)
        }
        Cmd::Integrate(a) => integrate(entry(cat, &a.id)?, a, out),
        Cmd::Roundtrip { id, samples } => roundtrip(entry(cat, id)?, *samples, cli.seed, out),
        Cmd::Mutate { count } => mutate(cat, *count, cli.seed, out),
    }
}

fn catalog(cat: &Catalog, out: &mut Out) -> Result<u8, Failure> {
    let rows: Vec<Value> = cat
        .all()
        .map(|e| {
            json!({
                "id": e.id,
                "status": e.status.as_str(),
                "surface": e.surface,
                "vars": e.vars.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "charts": e.chart_ids(),
                "note": e.note,
            })
        })
        .collect();
    if out.json {
        out.value(&json!({ "entries": rows, "links": cat.links().len() }));
    } else {
        for e in cat.all() {
            let mut s = format!("{:<12} {:<9}", e.id, e.status.as_str());
            if let Some(sf) = &e.surface {
                s.push_str(&format!(" {sf}"));
            }
            if !e.atlas.is_empty() {
                s.push_str(&format!(" charts {:?}", e.chart_ids()));
            }
            if let Some(n) = &e.note {
                s.push_str(&format!("  ({n})"));
            }
            out.line(s);
        }
    }
    Ok(OK)
}

fn verify(
    cli: &Cli,
    cat: &Catalog,
    id: Option<&str>,
    all: bool,
    variant: Option<&str>,
    out: &mut Out,
) -> Result<u8, Failure> {
    let mut reports: Vec<VerificationReport> = match (id, all) {
        (Some(id), _) => {
            let e = entry(cat, id)?;
            match variant {
                Some(v) => {
                    if e.ode_variant(Some(v)).is_none() {
                        return Err(Failure::Usage(format!("{id} has no variant {v}")));
                    }
                    let mut e = e.clone();
                    e.ode.retain(|o| o.name == v);
                    verify_entry(&e)
                }
                None => {
                    let mut r = verify_entry(e);
                    // links that start or end here
                    r.extend(
                        verify_links(cat)
                            .into_iter()
                            .filter(|l| l.id.split("->").any(|p| p == id)),
                    );
                    r
                }
            }
        }
        (None, true) => verify_catalog(cat),
        (None, false) => return Err(Failure::Usage("give an entry id or --all".into())),
    };
    if !cli.timing {
        for r in &mut reports {
            r.wall_time_ms = 0.0;
        }
    }
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let (pass, fail, skipped) = (
        count(Verdict::Pass),
        count(Verdict::Fail),
        count(Verdict::Skipped),
    );
    if out.json {
        out.value(&json!({
            "reports": reports,
            "summary": { "pass": pass, "fail": fail, "skipped": skipped },
        }));
    } else {
        for r in &reports {
            out.line(r.to_text_line());
        }
        out.line(format!("{pass} passed, {fail} failed, {skipped} skipped"));
    }
    Ok(if fail > 0 { FAILED } else { OK })
}

fn texts(v: &[Expr]) -> Vec<String> {
    v.iter().map(|e| e.to_text()).collect()
}

fn tuple(v: &[Expr]) -> String {
    format!(
        "({})",
        v.iter()
            .map(|e| e.to_pretty())
            .collect::<Vec<_>>()
            .join(", ")
    )
}

fn geo(e: GeometryError) -> Failure {
    Failure::Check(e.to_string())
}

fn singularities(e: &EquationEntry, out: &mut Out) -> Result<u8, Failure> {
    let sys = e
        .system
        .as_ref()
        .ok_or_else(|| Failure::Check(format!("{} has no system", e.id)))?;
    let charts = extend_to_p2(sys, Some(&e.constraints)).map_err(geo)?;
    let pts = find_accessible_singularities(&charts).map_err(geo)?;
    let mut jpts = Vec::new();
    let mut lines = vec![format!(
        "{}: {} accessible singular point{}",
        e.id,
        pts.len(),
        if pts.len() == 1 { "" } else { "s" }
    )];
    for p in &pts {
        let f = charts
            .iter()
            .find(|c| c.chart == p.chart)
            .expect("point from these charts");
        let cert = certify(f, p).map_err(geo)?;
        let mut line = format!(
            "  {} ({}) = {}  multiplicity {}",
            p.chart,
            p.vars.join(", "),
            tuple(&p.point),
            p.multiplicity
        );
        if p.multiplicity_heuristic {
            line.push_str(" (heuristic)");
        }
        line.push_str(if cert {
            "  certified"
        } else {
            "  NOT certified"
        });
        lines.push(line);
        let (index, alpha) = match alpha_test(f, &p.point, &ince_core::expr::Symbol::Time) {
            Ok(a) => {
                lines.push(format!(
                    "    local index {}, ratio {}, single-valued: {}",
                    tuple(&a.index.eigenvalues),
                    a.index.ratio().to_pretty(),
                    verdict_word(a.single_valued)
                ));
                (
                    Some(
                        json!({ "eigenvalues": texts(&a.index.eigenvalues), "ratio": a.index.ratio().to_text() }),
                    ),
                    Some(json!({ "single_valued": a.single_valued, "reason": a.reason })),
                )
            }
            Err(err) => {
                lines.push(format!("    local index: {err}"));
                (None, None)
            }
        };
        jpts.push(json!({
            "chart": p.chart, "vars": p.vars, "point": texts(&p.point), "multiplicity": p.multiplicity,
            "multiplicity_heuristic": p.multiplicity_heuristic, "certified": cert, "index": index, "alpha": alpha,
        }));
    }
    let mut jidx = Vec::new();
    for ip in &e.index_points {
        let li = index_at(e, ip).map_err(geo)?;
        let script = e
            .resolution(&ip.resolution, Some(&ip.variant))
            .expect("index point script exists");
        let f = script_stages(e, script, ip.after_step)
            .map_err(geo)?
            .pop()
            .expect("nonempty");
        let a = alpha_test(&f, &ip.point, &ince_core::expr::Symbol::Time).map_err(geo)?;
        lines.push(format!(
            "  index point {} [{} {}, after step {}] at {}: local index {}, ratio {}, single-valued: {}",
            ip.label,
            ip.resolution,
            ip.variant,
            ip.after_step,
            tuple(&ip.point),
            tuple(&li.eigenvalues),
            li.ratio().to_pretty(),
            verdict_word(a.single_valued)
        ));
        jidx.push(json!({
            "label": ip.label, "resolution": ip.resolution, "variant": ip.variant, "after_step": ip.after_step,
            "point": texts(&ip.point), "eigenvalues": texts(&li.eigenvalues), "ratio": li.ratio().to_text(),
            "single_valued": a.single_valued, "reason": a.reason,
        }));
    }
    let ok = pts.iter().all(|p| {
        charts
            .iter()
            .find(|c| c.chart == p.chart)
            .map(|f| certify(f, p).unwrap_or(false))
            .unwrap_or(false)
    });
    if out.json {
        out.value(&json!({ "id": e.id, "points": jpts, "index_points": jidx }));
    } else {
        for l in lines {
            out.line(l);
        }
    }
    Ok(if ok { OK } else { FAILED })
}

fn verdict_word(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "yes",
        Some(false) => "no",
        None => "undecided",
    }
}

fn resolution_json(r: &ResolutionResult) -> Value {
    json!({
        "name": r.name,
        "variant": r.variant,
        "steps": r.stages.len() - 1,
        "final": r.final_field().to_text(),
        "obstruction": r.obstruction.to_text(),
        "constraint": r.constraint.as_ref().map(|c| json!({ "lhs": c.lhs.to_string(), "rhs": c.rhs.to_text(), "integrations": c.integrations })),
        "polynomial_with_constraint": r.polynomial_with_constraint,
        "polynomial_without_constraint": r.polynomial_without_constraint,
        "chart_agreement": r.chart_agreement.as_ref().map(|a| match a { Ok(v) => json!({ "matches": v }), Err(m) => json!({ "mismatch": m }) }),
        "resolved": r.resolved(),
    })
}

fn resolve(
    e: &EquationEntry,
    name: Option<&str>,
    variant: Option<&str>,
    out: &mut Out,
) -> Result<u8, Failure> {
    let mut names: Vec<&str> = Vec::new();
    for s in &e.resolutions {
        if name.map(|n| n == s.name).unwrap_or(true) && !names.contains(&s.name.as_str()) {
            names.push(&s.name);
        }
    }
    if name.is_some() && names.is_empty() {
        return Err(Failure::Usage(format!(
            "{} has no resolution {}",
            e.id,
            name.unwrap_or_default()
        )));
    }
    let mut groups = Vec::new();
    let mut ok = true;
    if names.is_empty() && !out.json {
        out.line(format!("{}: no resolution scripts", e.id));
    }
    for n in names {
        let mut results = Vec::new();
        for s in e
            .resolutions
            .iter()
            .filter(|s| s.name == n && variant.map(|v| v == s.variant).unwrap_or(true))
        {
            results.push((s.variant.clone(), run_resolution(e, s)));
        }
        if results.is_empty() {
            return Err(Failure::Usage(format!(
                "{} has no variant {} of {n}",
                e.id,
                variant.unwrap_or_default()
            )));
        }
        let best = results
            .iter()
            .position(|(_, r)| r.as_ref().map(|r| r.resolved()).unwrap_or(false));
        ok &= best.is_some();
        if !out.json {
            let (v, r) = &results[best.unwrap_or(0)];
            match r {
                Ok(r) => {
                    out.line(format!(
                        "{} {n} [{v}]: {}",
                        e.id,
                        if r.resolved() {
                            "resolved"
                        } else {
                            "NOT resolved"
                        }
                    ));
                    out.line(format!("  obstruction: {}", r.obstruction.to_pretty()));
                    if let Some(c) = &r.constraint {
                        out.line(format!("  constraint: {} = {}", c.lhs, c.rhs.to_pretty()));
                    }
                    out.line(format!(
                        "  polynomial with constraint: {}, without: {}",
                        r.polynomial_with_constraint, r.polynomial_without_constraint
                    ));
                    match &r.chart_agreement {
                        Some(Ok(m)) => {
                            out.line(format!("  final chart equals catalogued chart ({m})"))
                        }
                        Some(Err(m)) => out.line(format!("  {m}")),
                        None => {}
                    }
                    let f = r.final_field();
                    for (x, rhs) in f.vars.iter().zip(&f.rhs) {
                        out.line(format!("  {x}' = {}", rhs.to_pretty()));
                    }
                }
                Err(err) => out.line(format!("{} {n} [{v}]: {err}", e.id)),
            }
            for (i, (ov, r)) in results.iter().enumerate() {
                if Some(i) != best && best.is_some() {
                    let why = match r {
                        Ok(_) => "not resolved".to_string(),
                        Err(err) => err.to_string(),
                    };
                    out.line(format!("  variant {ov}: {why}"));
                }
            }
        }
        groups.push(json!({
            "name": n,
            "resolved": best.is_some(),
            "variant": best.map(|b| results[b].0.clone()),
            "variants": results.iter().map(|(v, r)| match r {
                Ok(r) => resolution_json(r),
                Err(err) => json!({ "variant": v, "error": err.to_string() }),
            }).collect::<Vec<_>>(),
        }));
    }
    if out.json {
        out.value(&json!({ "id": e.id, "resolutions": groups }));
    }
    Ok(if ok { OK } else { FAILED })
}

fn parse_complex(s: &str) -> Result<Complex64, Failure> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Failure::Usage(format!("not a complex number: {s}"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t
            .parse::<f64>()
            .map(|r| Complex64::new(r, 0.0))
            .map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn parse_list(s: &str) -> Result<Vec<Complex64>, Failure> {
    s.split(',').map(parse_complex).collect()
}

fn key_value(s: &str) -> Result<(&str, &str), Failure> {
    s.split_once('=')
        .ok_or_else(|| Failure::Usage(format!("expected name=value, got {s}")))
}

fn integrate(e: &EquationEntry, a: &IntegrateArgs, out: &mut Out) -> Result<u8, Failure> {
    let mut opts = IntegratorOptions {
        tol: a.tol,
        r_out: a.r_out,
        r_in: a.r_in,
        tau_switch: a.tau_switch,
        ..Default::default()
    };
    if !(a.tol > 0.0) || !(a.r_in > 0.0 && a.r_in < a.r_out) {
        return Err(Failure::Usage("need tol > 0 and 0 < r-in < r-out".into()));
    }
    let params: Vec<String> = e.scope.params().cloned().collect();
    for p in &a.params {
        let (k, v) = key_value(p)?;
        if !params.iter().any(|q| q == k) {
            return Err(Failure::Usage(format!("{} has no parameter {k}", e.id)));
        }
        opts.params.insert(k.to_string(), parse_complex(v)?);
    }
    for p in &a.aux {
        let (k, v) = key_value(p)?;
        opts.aux_init.insert(k.to_string(), parse_list(v)?);
    }
    for p in &a.funcs {
        let (k, v) = key_value(p)?;
        let ex = parse(v, &ince_core::expr::Scope::new())
            .map_err(|err| Failure::Usage(format!("{k}: {err}")))?;
        opts.functions.insert(k.to_string(), ex);
    }
    let at = NumericAtlas::new(e, &opts).map_err(|err| Failure::Check(err.to_string()))?;
    let from = parse_list(&a.from)?;
    if from.len() != at.dim() {
        return Err(Failure::Usage(format!(
            "{} needs {} initial coordinates",
            e.id,
            at.dim()
        )));
    }
    let path = parse_list(&a.path)?;
    let t0 = parse_complex(&a.t0)?;
    let init = at.initial_state(t0, from);
    let tr = match at.integrate_path(init, &path, &opts) {
        Ok(tr) => tr,
        Err(err) => return Err(Failure::Check(err.to_string())),
    };
    if let Some(p) = &a.dump_csv {
        std::fs::write(p, tr.to_csv()).map_err(|err| Failure::Check(err.to_string()))?;
    }
    if out.json {
        out.buf.push_str(&tr.to_json_lines());
    } else {
        let base = at.to_base(&tr.end).ok();
        out.line(format!(
            "{}: {} accepted, {} rejected steps, {} chart switches",
            e.id,
            tr.accepted,
            tr.rejected,
            tr.switches.len()
        ));
        for s in &tr.switches {
            out.line(format!(
                "  t = {} switch {} -> {} (round trip {:.1e})",
                fmt_c(s.t),
                s.from,
                s.to,
                s.mismatch
            ));
        }
        out.line(format!(
            "  end t = {} chart {} coordinates {}",
            fmt_c(tr.end.t),
            tr.end.chart,
            fmt_v(&tr.end.coords)
        ));
        if let Some(b) = base {
            out.line(format!("  in the base chart: {}", fmt_v(&b)));
        }
    }
    Ok(OK)
}

fn fmt_c(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.12}", z.re)
    } else {
        format!("{:.12}{:+.12}i", z.re, z.im)
    }
}

fn fmt_v(v: &[Complex64]) -> String {
    format!(
        "({})",
        v.iter().map(|z| fmt_c(*z)).collect::<Vec<_>>().join(", ")
    )
}

fn roundtrip(e: &EquationEntry, samples: usize, seed: u64, out: &mut Out) -> Result<u8, Failure> {
    let at = NumericAtlas::new(e, &IntegratorOptions::default())
        .map_err(|err| Failure::Check(err.to_string()))?;
    let r = at
        .roundtrip(samples, seed)
        .map_err(|err| Failure::Check(err.to_string()))?;
    let exact = ince_core::atlas_integrator::roundtrip_exact(e)
        .map_err(|err| Failure::Check(err.to_string()))?;
    let pass = exact && r.max_error <= 1e-9;
    if out.json {
        out.value(
            &json!({ "report": r, "exact": exact, "verdict": if pass { "PASS" } else { "FAIL" } }),
        );
    } else {
        out.line(format!(
            "{}: {} samples, {} evaluations, max relative error {:.2e}{}; exact composition {}",
            e.id,
            r.samples,
            r.evaluated,
            r.max_error,
            if r.vacuous { " (vacuous)" } else { "" },
            if exact { "identity" } else { "NOT identity" }
        ));
    }
    Ok(if pass { OK } else { FAILED })
}

fn mutate(cat: &Catalog, count: usize, seed: u64, out: &mut Out) -> Result<u8, Failure> {
    let ms = mutation_suite(cat, count, seed);
    let caught = ms.iter().filter(|m| m.caught()).count();
    if out.json {
        out.value(&json!({ "mutations": ms, "caught": caught, "total": ms.len() }));
    } else {
        for m in &ms {
            out.line(format!(
                "{:<12} {:<18} {:?}: {} -> {}  {}",
                m.id,
                m.check,
                m.target,
                m.original,
                m.mutated,
                m.verdict.as_str()
            ));
        }
        out.line(format!("{caught}/{} mutations caught", ms.len()));
    }
    Ok(if caught == ms.len() { OK } else { FAILED })
}
