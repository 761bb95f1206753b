//! The `pdl` command line: load system files, run a verb, emit a JSON report.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::example512::Example512System;
use crate::expansivity::{classify_points, minimally_expansive_at, verdict_at, Variant};
use crate::format::{self, parse_finite_point, SystemDef, SystemFile};
use crate::measures::{build_h_map, classify_mu_uniform, expansive_measure_check, verify_strong_mu_topological_stability, WeightedMeasure};
use crate::metric::{validate_metric, validate_with, PointSet};
use crate::rational::Rational;
use crate::shadowing::{shadowable_exact, shadowable_windowed, WINDOW_LIMIT};
use crate::shift::EpPoint;
use crate::stability::{build_conjugacy, default_eta, gh_distance_bounds, gh_stable_point_check, DEFAULT_BUDGET};
use crate::systems::{DynamicalSystem, FiniteSystem};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pdl", version, about = "Exact pointwise dynamics on small metric systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Human-readable rendering instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Include wall-clock timing (makes reports non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Args, Debug, Default, Clone)]
struct Scales {
    #[arg(long)]
    c: Option<Rational>,
    #[arg(long)]
    eps: Option<Rational>,
    #[arg(long)]
    delta: Option<Rational>,
    #[arg(long)]
    eta: Option<Rational>,
    /// Also run the windowed shadowing check at this half-width.
    #[arg(long)]
    window: Option<usize>,
    /// Search budget in nodes; defaults to PDL_BUDGET or the built-in limit.
    #[arg(long)]
    budget: Option<u64>,
    /// Restrict to these points (repeatable, whitespace-separated).
    #[arg(long)]
    probe: Vec<String>,
    /// The point under study.
    #[arg(long)]
    x: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the metric axioms and the bijection.
    Validate { file: PathBuf },
    /// Classify points as expansive, uniform, minimal, shadow or mu-uniform.
    Classify {
        file: PathBuf,
        #[arg(long)]
        variant: String,
        #[command(flatten)]
        scales: Scales,
    },
    /// Decide shadowability at one point (or every point).
    Shadow {
        file: PathBuf,
        #[command(flatten)]
        scales: Scales,
    },
    /// Build the semiconjugacy from the perturbed orbit of x.
    Conjugacy {
        f: PathBuf,
        g: PathBuf,
        #[command(flatten)]
        scales: Scales,
    },
    /// Build the set-valued map H and check its clauses.
    Hmap {
        f: PathBuf,
        g: PathBuf,
        #[command(flatten)]
        scales: Scales,
    },
    /// Bounds on the C0-Gromov-Hausdorff distance.
    Ghdist {
        f: PathBuf,
        g: PathBuf,
        #[command(flatten)]
        scales: Scales,
    },
    /// GH-stability of x against one or more candidate systems.
    Ghstable {
        f: PathBuf,
        #[arg(required = true)]
        candidates: Vec<PathBuf>,
        #[command(flatten)]
        scales: Scales,
    },
    /// Strong measure-theoretic stability clauses at x.
    Mustable {
        f: PathBuf,
        g: PathBuf,
        #[command(flatten)]
        scales: Scales,
    },
    /// Isolation and expansivity bounds for an example512 system.
    Example512 {
        file: PathBuf,
        #[command(flatten)]
        scales: Scales,
    },
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub system_digest: Vec<String>,
    pub command: Vec<String>,
    pub status: &'static str,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

/// What a run printed and how it exits.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Ctx {
    digests: Vec<String>,
}

impl Ctx {
    fn load(&mut self, path: &Path) -> Result<SystemFile> {
        let file = format::load_system_file(path)?;
        self.digests.push(file.digest.clone());
        Ok(file)
    }

    fn load_finite(&mut self, path: &Path) -> Result<(FiniteSystem, SystemFile)> {
        let file = self.load(path)?;
        Ok((file.system.as_finite()?.clone(), file))
    }
}

fn need(v: Option<Rational>, flag: &str) -> Result<Rational> {
    v.ok_or_else(|| Error::Precondition(format!("--{flag} is required")))
}

fn budget(scales: &Scales) -> Result<u64> {
    if let Some(b) = scales.budget {
        return Ok(b);
    }
    match std::env::var("PDL_BUDGET") {
        Ok(v) => v.trim().parse().map_err(|_| Error::Precondition(format!("PDL_BUDGET `{v}` is not a count"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn probe_words(scales: &Scales) -> Vec<String> {
    scales.probe.iter().flat_map(|p| p.split_whitespace().map(str::to_string)).collect()
}

fn finite_point(f: &FiniteSystem, scales: &Scales) -> Result<usize> {
    parse_finite_point(f, scales.x.as_deref().ok_or_else(|| Error::Precondition("--x is required".into()))?)
}

fn finite_probes(f: &FiniteSystem, file: &SystemFile, scales: &Scales) -> Result<Vec<usize>> {
    let words = probe_words(scales);
    if !words.is_empty() {
        return words.iter().map(|w| parse_finite_point(f, w)).collect();
    }
    Ok(file.probes.clone().unwrap_or_else(|| (0..f.len()).collect()))
}

fn labels(f: &FiniteSystem, pts: impl IntoIterator<Item = usize>) -> Vec<String> {
    pts.into_iter().map(|p| f.label(&p)).collect()
}

fn status(pass: bool) -> (i32, &'static str) {
    if pass {
        (EXIT_PASS, "pass")
    } else {
        (EXIT_FAIL, "fail")
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn cmd_validate(ctx: &mut Ctx, path: &Path) -> Result<(i32, &'static str, Value)> {
    let text = format::read_text(path)?;
    let file = format::parse_system_file_unchecked(&text)?;
    ctx.digests.push(file.digest.clone());
    let (kind, points, violations, exhaustive) = match &file.system {
        SystemDef::Finite(f) => (f.name().to_string(), f.len(), validate_metric(f.space()), true),
        SystemDef::Shift(s) => {
            let pts = s.probe_points();
            (format!("shift{}", s.alphabet()), pts.len(), validate_with(pts.len(), |a, b| s.distance(&pts[a], &pts[b])), false)
        }
        SystemDef::Example512(e) => {
            let pts = e.probe_points();
            ("example512".into(), pts.len(), validate_with(pts.len(), |a, b| e.distance(&pts[a], &pts[b])), false)
        }
    };
    // Finite maps are bijections by construction; the other backends are
    // checked on their probes.
    let bijective = match &file.system {
        SystemDef::Finite(_) => true,
        SystemDef::Shift(s) => s.probe_points().iter().all(|p| s.backward(&s.forward(p)) == *p),
        SystemDef::Example512(e) => e.probe_points().iter().all(|p| e.backward(&e.forward(p)) == *p),
    };
    let (code, st) = status(violations.is_empty() && bijective);
    Ok((
        code,
        st,
        json!({
            "system": kind,
            "points_checked": points,
            "exhaustive": exhaustive,
            "bijective": bijective,
            "violations": to_value(&violations),
        }),
    ))
}

fn classify_generic<S: DynamicalSystem>(sys: &S, probes: &[S::Point], variant: Variant, c: Rational) -> Value {
    let verdicts: Vec<_> = probes.iter().map(|x| verdict_at(sys, variant, x, c)).collect();
    let points: Vec<String> = verdicts.iter().filter(|v| v.holds).map(|v| sys.label(v.point.as_ref().unwrap())).collect();
    json!({
        "variant": to_value(&variant),
        "constant": c.to_string(),
        "points": points,
        "exhaustive": false,
        "verdicts": to_value(&verdicts),
    })
}

fn parse_eps(words: &[String]) -> Result<Vec<EpPoint>> {
    words.iter().map(|w| w.parse::<EpPoint>()).collect()
}

fn cmd_classify(ctx: &mut Ctx, path: &Path, variant: &str, scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let file = ctx.load(path)?;
    let words = probe_words(scales);
    let results = match (&file.system, variant) {
        (SystemDef::Finite(f), "shadow") => {
            let (eps, delta) = (need(scales.eps, "eps")?, need(scales.delta, "delta")?);
            let probes = finite_probes(f, &file, scales)?;
            let verdicts: Vec<_> = probes.iter().map(|&x| shadowable_exact(f, x, eps, delta)).collect::<Result<_>>()?;
            let points = labels(f, verdicts.iter().filter(|v| v.holds).map(|v| v.point));
            json!({"variant": "shadow", "eps": eps.to_string(), "delta": delta.to_string(), "points": points, "exhaustive": true, "verdicts": to_value(&verdicts)})
        }
        (SystemDef::Finite(f), "mu-uniform") => {
            let c = need(scales.c, "c")?;
            let mu = file.measure.clone().unwrap_or_else(|| WeightedMeasure::uniform(f.len()));
            let points = labels(f, classify_mu_uniform(f, &mu, c)?);
            json!({"variant": "mu-uniform", "constant": c.to_string(), "measure": to_value(&mu), "points": points, "exhaustive": true})
        }
        (SystemDef::Shift(s), "mu-uniform") => {
            let c = need(scales.c, "c")?;
            let mu = file.measure.clone().unwrap_or(WeightedMeasure::bernoulli(vec![Rational::new(1, s.alphabet() as i128); s.alphabet() as usize])?);
            let probes = if words.is_empty() { s.probe_points() } else { parse_eps(&words)? };
            let check = expansive_measure_check(s, &mu, c, &probes)?;
            let points: Vec<String> = classify_mu_uniform(s, &mu, c)?.iter().map(|p| p.to_string()).collect();
            json!({"variant": "mu-uniform", "constant": c.to_string(), "measure": to_value(&mu), "points": points, "measure_expansive": to_value(&check), "exhaustive": false})
        }
        (_, "shadow") | (_, "mu-uniform") => {
            return Err(Error::Unsupported(format!("`{variant}` classification needs a finite system")))
        }
        (system, v) => {
            let variant: Variant = v.parse()?;
            let c = need(scales.c, "c")?;
            match system {
                SystemDef::Finite(f) => {
                    let probes = finite_probes(f, &file, scales)?;
                    let verdicts: Vec<_> = probes.iter().map(|x| verdict_at(f, variant, x, c)).collect();
                    let points = if probes.len() == f.len() {
                        labels(f, classify_points(f, variant, c).points)
                    } else {
                        labels(f, verdicts.iter().filter(|v| v.holds).map(|v| v.point.unwrap()))
                    };
                    json!({"variant": to_value(&variant), "constant": c.to_string(), "points": points, "exhaustive": true, "verdicts": to_value(&verdicts)})
                }
                SystemDef::Shift(s) => {
                    let probes = if words.is_empty() { s.probe_points() } else { parse_eps(&words)? };
                    classify_generic(s, &probes, variant, c)
                }
                SystemDef::Example512(e) => {
                    let probes = if words.is_empty() {
                        e.probe_points()
                    } else {
                        words.iter().map(|w| format::parse_e512_point(w)).collect::<Result<_>>()?
                    };
                    classify_generic(e, &probes, variant, c)
                }
            }
        }
    };
    Ok((EXIT_PASS, "pass", results))
}

fn cmd_shadow(ctx: &mut Ctx, path: &Path, scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let (f, file) = ctx.load_finite(path)?;
    let (eps, delta) = (need(scales.eps, "eps")?, need(scales.delta, "delta")?);
    let points = match scales.x {
        Some(_) => vec![finite_point(&f, scales)?],
        None => finite_probes(&f, &file, scales)?,
    };
    let mut all = true;
    let mut out = Vec::new();
    for x in points {
        let exact = shadowable_exact(&f, x, eps, delta)?;
        all &= exact.holds;
        let windowed = match scales.window {
            Some(n) => Some(shadowable_windowed(&f, x, eps, delta, n, WINDOW_LIMIT)?),
            None => None,
        };
        out.push(json!({"point": f.label(&x), "exact": to_value(&exact), "windowed": windowed.map(|w| to_value(&w))}));
    }
    let (code, st) = status(all);
    Ok((code, st, json!({"eps": eps.to_string(), "delta": delta.to_string(), "holds": all, "points": out})))
}

fn cmd_conjugacy(ctx: &mut Ctx, fp: &Path, gp: &Path, scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let (f, _) = ctx.load_finite(fp)?;
    let (g, _) = ctx.load_finite(gp)?;
    let x = finite_point(&f, scales)?;
    let (eps, delta) = (need(scales.eps, "eps")?, need(scales.delta, "delta")?);
    let eta = scales.eta.unwrap_or_else(|| default_eta(eps, scales.c));
    let r = build_conjugacy(&f, &g, x, eps, delta, eta)?;
    let table: Vec<Value> = r.domain.iter().zip(&r.images).map(|(u, h)| json!([f.label(u), f.label(h)])).collect();
    let (code, st) = status(r.holds);
    Ok((code, st, json!({"point": f.label(&x), "eps": eps.to_string(), "delta": delta.to_string(), "table": table, "conjugacy": to_value(&r)})))
}

fn cmd_hmap(ctx: &mut Ctx, fp: &Path, gp: &Path, scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let (f, _) = ctx.load_finite(fp)?;
    let (g, _) = ctx.load_finite(gp)?;
    let x = finite_point(&f, scales)?;
    let eta = scales.eta.or(scales.eps).ok_or_else(|| Error::Precondition("--eta is required".into()))?;
    let h = build_h_map(&f, &g, x, eta)?;
    let mut within = true;
    let mut equivariant = true;
    for z in h.points.iter() {
        let img = h.image(z).expect("H is defined on its point set");
        within &= img.iter().all(|w| f.d(w, z) <= eta);
        if let Some(gz) = h.image(g.f(z)) {
            equivariant &= img.image(f.map()) == *gz;
        }
    }
    let (code, st) = status(within && equivariant);
    let clauses = json!([
        {"name": "close_to_identity", "holds": within},
        {"name": "equivariance", "holds": equivariant},
    ]);
    Ok((code, st, json!({"point": f.label(&x), "h": to_value(&h), "clauses": clauses})))
}

fn cmd_ghdist(ctx: &mut Ctx, fp: &Path, gp: &Path, scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let (f, _) = ctx.load_finite(fp)?;
    let (g, _) = ctx.load_finite(gp)?;
    let b = gh_distance_bounds(&f, &g, budget(scales)?);
    let (code, st) = if b.complete { (EXIT_PASS, "pass") } else { (EXIT_BUDGET, "budget") };
    Ok((code, st, to_value(&b)))
}

fn cmd_ghstable(ctx: &mut Ctx, fp: &Path, candidates: &[PathBuf], scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let (f, _) = ctx.load_finite(fp)?;
    let gs: Vec<FiniteSystem> = candidates.iter().map(|p| Ok(ctx.load_finite(p)?.0)).collect::<Result<_>>()?;
    let x = finite_point(&f, scales)?;
    let (eps, delta) = (need(scales.eps, "eps")?, need(scales.delta, "delta")?);
    let eta = scales.eta.unwrap_or_else(|| default_eta(eps, scales.c));
    let rep = gh_stable_point_check(&f, x, eps, delta, eta, &gs, budget(scales)?)?;
    let (code, st) = status(rep.holds);
    Ok((code, st, to_value(&rep)))
}

fn cmd_mustable(ctx: &mut Ctx, fp: &Path, gp: &Path, scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let (f, file) = ctx.load_finite(fp)?;
    let (g, _) = ctx.load_finite(gp)?;
    let x = finite_point(&f, scales)?;
    let (eps, delta) = (need(scales.eps, "eps")?, need(scales.delta, "delta")?);
    let mu = file.measure.clone().unwrap_or_else(|| WeightedMeasure::uniform(f.len()));
    let full: PointSet = finite_probes(&f, &file, scales)?.into_iter().collect();
    let rep = verify_strong_mu_topological_stability(&f, &mu, x, eps, delta, &g, &full, scales.eta)?;
    let (code, st) = status(rep.holds);
    Ok((code, st, json!({"point": f.label(&x), "measure": to_value(&mu), "report": to_value(&rep)})))
}

fn example512_claims(e: &Example512System, c: Rational) -> Value {
    let all = e.probe_points();
    let rows: Vec<Value> = all
        .iter()
        .map(|x| {
            let nearest = all.iter().filter(|y| *y != x).map(|y| e.distance(x, y)).min();
            let bound = e.minimal_expansivity_bound(x, c);
            let v = minimally_expansive_at(e, x, bound);
            json!({
                "point": x.to_string(),
                "nearest": nearest.map(|d| d.to_string()),
                "bound": bound.to_string(),
                "minimally_expansive": v.holds,
            })
        })
        .collect();
    json!(rows)
}

fn cmd_example512(ctx: &mut Ctx, path: &Path, scales: &Scales) -> Result<(i32, &'static str, Value)> {
    let file = ctx.load(path)?;
    let SystemDef::Example512(e) = &file.system else {
        return Err(Error::Unsupported("`example512` needs an example512 system file".into()));
    };
    let c = scales.c.unwrap_or(Rational::ONE);
    let rows = example512_claims(e, c);
    let isolated = rows.as_array().unwrap().iter().filter(|r| r["point"].as_str().unwrap().starts_with('q')).all(|r| {
        let k: u32 = r["point"].as_str().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        r["nearest"].as_str().unwrap().parse::<Rational>().unwrap() >= Rational::new(1, k as i128)
    });
    let expansive = rows.as_array().unwrap().iter().all(|r| r["minimally_expansive"].as_bool().unwrap());
    let (code, st) = status(isolated && expansive);
    Ok((code, st, json!({"K": e.k_max(), "t": e.t(), "p": e.p().to_string(), "c": c.to_string(), "isolated": isolated, "points": rows})))
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Budget { .. } => EXIT_BUDGET,
        _ => EXIT_USAGE,
    }
}

/// Runs one invocation; `args[0]` is the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            return if code == EXIT_PASS {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let started = Instant::now();
    let mut ctx = Ctx { digests: Vec::new() };
    let result = match &cli.command {
        Command::Validate { file } => cmd_validate(&mut ctx, file),
        Command::Classify { file, variant, scales } => cmd_classify(&mut ctx, file, variant, scales),
        Command::Shadow { file, scales } => cmd_shadow(&mut ctx, file, scales),
        Command::Conjugacy { f, g, scales } => cmd_conjugacy(&mut ctx, f, g, scales),
        Command::Hmap { f, g, scales } => cmd_hmap(&mut ctx, f, g, scales),
        Command::Ghdist { f, g, scales } => cmd_ghdist(&mut ctx, f, g, scales),
        Command::Ghstable { f, candidates, scales } => cmd_ghstable(&mut ctx, f, candidates, scales),
        Command::Mustable { f, g, scales } => cmd_mustable(&mut ctx, f, g, scales),
        Command::Example512 { file, scales } => cmd_example512(&mut ctx, file, scales),
    };
    let (code, status, results) = match result {
        Ok(r) => r,
        Err(e) => return Outcome { code: exit_for(&e), stdout: String::new(), stderr: format!("pdl: {e}\n") },
    };
    let report = Report {
        tool: "pdl",
        version: env!("CARGO_PKG_VERSION"),
        system_digest: ctx.digests,
        command: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        status,
        results,
        timing_ms: cli.timing.then(|| started.elapsed().as_millis()),
    };
    let stdout = if cli.pretty {
        let mut out = String::new();
        render(&to_value(&report), 0, &mut out);
        out
    } else {
        let mut s = serde_json::to_string(&report).expect("reports serialize");
        s.push('\n');
        s
    };
    Outcome { code, stdout, stderr: String::new() }
}

/// Indented `key: value` rendering of a report.
fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(m) if !m.is_empty() => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(v, indent + 1, out);
                    }
                    Value::Array(a) if a.iter().any(|e| e.is_object() || e.is_array()) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(v, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", scalar(v))),
                }
            }
        }
        Value::Array(a) => {
            for (i, e) in a.iter().enumerate() {
                out.push_str(&format!("{pad}[{i}]\n"));
                render(e, indent + 1, out);
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => format!("[{}]", a.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

/// Entry point for the `pdl` binary.
pub fn main_with_args() -> i32 {
    let out = run(std::env::args_os());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}
