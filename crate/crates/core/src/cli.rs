//! The `koblab` command line: one subcommand per experiment, JSON reports,
//! CSV point lists, golden-file comparison and per-command self tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::contraction::{
    degree_collapse_demo, iterate_to_fixed_point, quasi_random_starts, FixedPointOptions, TAIL_TOLERANCE,
};
use crate::distance::{LengthMetric, MetricKind};
use crate::error::{Error, Result};
use crate::estimator::{estimate_kob_royden, lemma_compare_bound, uniform_monotonicity_constant, OptimizerBudget};
use crate::geometry::{CPoint, Domain, SampledCurve, TVector, C64};
use crate::hausdorff::{flat_calibration, hausdorff_k_measure_with, MeasureBudget, MeasuredObject};
use crate::invariants::{
    default_tube_density, l1_annulus_general, lk_tube_upper, max_radial_deviation, tube_map_degree, Certificate,
    L1Budget,
};
use crate::mesh::SphereMeshMap;
use crate::metrics::{kob_royden_closed, MetricSource};
use crate::polymap::PolyMap;

#[derive(Parser, Debug)]
#[command(name = "koblab", version, about = "Kobayashi-metric experiments on bounded domains")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "KOBLAB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Compare the JSON report against a stored baseline; exit 1 on mismatch.
    #[arg(long, global = true)]
    pub golden: Option<PathBuf>,
    /// Run the command's example table instead of its arguments.
    #[arg(long, global = true)]
    pub selftest: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BudgetLevel {
    Light,
    Full,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// ℓ₁ of an annulus by minimizing the length of winding-one loops.
    L1Annulus(L1Args),
    /// Kobayashi-Royden length of a tangent vector: closed form and disc search.
    KobEval(KobEvalArgs),
    /// Comparison constants for nested domains.
    Monotonicity(MonotonicityArgs),
    /// Hausdorff k-measure of a curve or sphere mesh.
    Hausdorff(HausdorffArgs),
    /// Upper bounds on ℓ_k of tubes around the unit sphere over a radius grid.
    TubeLk(TubeLkArgs),
    /// Fixed point of a holomorphic self-map with relatively compact image.
    FixedPoint(FixedPointArgs),
    /// Degree of a map between circle tubes, optionally under iteration.
    TubeDegree(TubeDegreeArgs),
}

#[derive(Args, Debug)]
pub struct L1Args {
    /// Modulus of the canonical annulus 1/√R < |z| < √R.
    #[arg(long = "R")]
    pub big_r: Option<f64>,
    #[arg(long = "A", requires = "outer", conflicts_with = "big_r")]
    pub inner: Option<f64>,
    #[arg(long = "B", requires = "inner")]
    pub outer: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub scale: f64,
    #[arg(long)]
    pub knots: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Args, Debug)]
pub struct KobEvalArgs {
    /// Domain JSON file.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Comma-separated complex coordinates, e.g. 0.1+0.2i,0.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub v: Option<String>,
    #[arg(long, value_enum, default_value_t = BudgetLevel::Full)]
    pub budget: BudgetLevel,
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MonotonicityArgs {
    #[arg(long)]
    pub inner: Option<PathBuf>,
    #[arg(long)]
    pub outer: Option<PathBuf>,
    /// Base point for the pointwise comparison bound.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, default_value_t = 16)]
    pub probes: usize,
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = BudgetLevel::Light)]
    pub budget: BudgetLevel,
}

#[derive(Args, Debug)]
pub struct HausdorffArgs {
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// JSON file holding {"curve": …} or {"mesh": …}.
    #[arg(long)]
    pub object: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value = "kobayashi")]
    pub metric: String,
    /// Strictly decreasing ε values.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.1, 0.02])]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Args, Debug)]
pub struct TubeLkArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.15, 0.2, 0.25, 0.3])]
    pub radii: Vec<f64>,
    /// Segments for k=1, icosphere subdivisions for k=2.
    #[arg(long)]
    pub density: Option<usize>,
    /// Also try radially rescaled core spheres.
    #[arg(long)]
    pub shrink: bool,
}

#[derive(Args, Debug)]
pub struct FixedPointArgs {
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Explicit start point; repeatable.
    #[arg(long = "start")]
    pub starts: Vec<String>,
    /// Quasi-random interior starts used when none are given.
    #[arg(long, default_value_t = 16)]
    pub start_count: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

#[derive(Args, Debug)]
pub struct TubeDegreeArgs {
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub density: usize,
    /// Iterate the map this many times and check the degree collapse.
    #[arg(long)]
    pub collapse: Option<usize>,
}

/// What a command produces: the JSON report and, when it has one, a CSV
/// point list.
struct Output {
    report: Value,
    csv: Option<String>,
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.to_string(), pass, detail }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidInput(format!("missing --{flag}")))
}

fn read_domain(path: &Path) -> Result<Domain> {
    Domain::from_json(&std::fs::read_to_string(path)?)
}

fn read_map(path: &Path) -> Result<PolyMap> {
    PolyMap::from_json(&std::fs::read_to_string(path)?)
}

/// Parses comma-separated complex numbers such as `0.5,0.1-0.2i`.
pub fn parse_point(s: &str) -> Result<Vec<C64>> {
    s.split(',')
        .map(|t| {
            C64::from_str(t.trim()).map_err(|_| Error::InvalidInput(format!("cannot parse {t:?} as a complex number")))
        })
        .collect()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

fn budget_for(level: BudgetLevel, degree: Option<usize>, seed: u64) -> OptimizerBudget {
    let mut b = match level {
        BudgetLevel::Light => OptimizerBudget::light(),
        BudgetLevel::Full => OptimizerBudget::default(),
    };
    if let Some(d) = degree {
        b.max_degree = d;
    }
    b.seed = seed;
    b
}

fn points_csv(points: &[CPoint]) -> Result<String> {
    let curve = SampledCurve::new((0..points.len()).map(|i| i as f64).collect(), points.to_vec(), false)?;
    Certificate::Curve(curve).to_csv()
}

// ---------------------------------------------------------------- l1-annulus

fn l1_run(inner: f64, outer: f64, scale: f64, budget: &L1Budget) -> Result<Value> {
    let r = l1_annulus_general(inner, outer, scale, budget)?;
    let lower = r.lower_bound.expect("annulus reports carry the analytic value");
    let modulus = outer / inner;
    let deviation = match &r.certificate {
        Certificate::Curve(c) => max_radial_deviation(c, (inner * outer).sqrt()),
        Certificate::Mesh(_) => f64::NAN,
    };
    Ok(json!({
        "inner": inner,
        "outer": outer,
        "modulus": modulus,
        "scale": scale,
        "value": r.value,
        "lower_bound": lower,
        "relative_error": (r.value - lower) / lower,
        "max_radial_deviation": deviation,
        "deviation_limit": 0.05 * (modulus.sqrt() - 1.0 / modulus.sqrt()),
        "certificate": to_value(&r.certificate),
    }))
}

fn l1_budget(args: &L1Args, seed: u64) -> L1Budget {
    let mut b = L1Budget { seed, ..L1Budget::default() };
    if let Some(k) = args.knots {
        b.knots = k;
    }
    if let Some(m) = args.max_iters {
        b.max_iters = m;
    }
    b
}

fn cmd_l1_annulus(args: &L1Args, g: &GlobalOpts) -> Result<Output> {
    let (inner, outer) = match (args.big_r, args.inner, args.outer) {
        (Some(r), None, None) => {
            if !(r > 1.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!("R must exceed 1, got {r}")));
            }
            (1.0 / r.sqrt(), r.sqrt())
        }
        (None, Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidInput("give either --R or both --A and --B".into())),
    };
    let report = l1_run(inner, outer, args.scale, &l1_budget(args, g.seed))?;
    let csv = match serde_json::from_value::<Certificate>(report["certificate"].clone()) {
        Ok(c) => Some(c.to_csv()?),
        Err(_) => None,
    };
    Ok(Output { report, csv })
}

fn selftest_l1() -> Vec<Check> {
    let pi2 = std::f64::consts::PI.powi(2);
    let cases = [
        ("R=e", 1.0 / std::f64::consts::E.sqrt(), std::f64::consts::E.sqrt(), pi2),
        ("R=4", 0.5, 2.0, pi2 / 4f64.ln()),
        ("A=1,B=9", 1.0, 9.0, pi2 / 9f64.ln()),
    ];
    let mut out = Vec::new();
    for (name, a, b, want) in cases {
        match l1_run(a, b, 2.0, &L1Budget::default()) {
            Ok(r) => {
                let v = r["value"].as_f64().unwrap_or(f64::NAN);
                let dev = r["max_radial_deviation"].as_f64().unwrap_or(f64::NAN);
                let lim = r["deviation_limit"].as_f64().unwrap_or(0.0);
                let rel = (v - want).abs() / want;
                out.push(check(name, rel < 0.01 && dev < lim, format!("value {v:.6}, want {want:.6}, rel {rel:.2e}")));
            }
            Err(e) => out.push(check(name, false, e.to_string())),
        }
    }
    let bad = Cli::try_parse_from(["koblab", "l1-annulus", "--R", "1"])
        .map_err(|e| e.to_string())
        .and_then(|cli| match cli.command {
            Command::L1Annulus(a) => cmd_l1_annulus(&a, &cli.global).map(|_| ()).map_err(|e| e.to_string()),
            _ => Ok(()),
        });
    out.push(check("R=1 rejected", bad.is_err(), format!("{bad:?}")));
    out
}

// ---------------------------------------------------------------- kob-eval

fn kob_eval(d: &Domain, p: &[C64], v: &[C64], budget: &OptimizerBudget) -> Result<Value> {
    let p = CPoint::new(p.to_vec())?;
    let v = TVector::new(v.to_vec())?;
    let closed = match kob_royden_closed(d, &p, &v) {
        Ok(m) if m.source == MetricSource::ClosedForm => Some(m.value),
        Ok(_) | Err(Error::NoClosedForm(_)) => None,
        Err(e) => return Err(e),
    };
    let est = estimate_kob_royden(d, &p, &v, budget)?;
    Ok(json!({
        "domain": to_value(d),
        "p": to_value(&p),
        "v": to_value(&v.comps()),
        "closed_form": closed,
        "estimate": est.value,
        "ratio": closed.map(|c| est.value / c),
        "max_degree": budget.max_degree,
    }))
}

fn cmd_kob_eval(args: &KobEvalArgs, g: &GlobalOpts) -> Result<Output> {
    let d = read_domain(&need(args.domain.clone(), "domain")?)?;
    let p = parse_point(&need(args.p.clone(), "p")?)?;
    let v = parse_point(&need(args.v.clone(), "v")?)?;
    let report = kob_eval(&d, &p, &v, &budget_for(args.budget, args.degree, g.seed))?;
    Ok(Output { report, csv: None })
}

fn selftest_kob_eval() -> Vec<Check> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let budget = OptimizerBudget::default();
    let cases: Vec<(&str, Domain, Vec<C64>, Vec<C64>)> = vec![
        ("ball2 at origin", Domain::centered_ball(2, 1.0).unwrap(), vec![c(0.0, 0.0); 2], vec![c(1.0, 0.0), c(0.0, 0.0)]),
        ("disc off-center", Domain::unit_disc(), vec![c(0.5, 0.0)], vec![c(1.0, 0.0)]),
        (
            "polydisc",
            Domain::polydisc(vec![1.0, 2.0]).unwrap(),
            vec![c(0.3, 0.1), c(-0.5, 0.0)],
            vec![c(0.2, 0.0), c(0.0, 1.0)],
        ),
    ];
    cases
        .into_iter()
        .map(|(name, d, p, v)| match kob_eval(&d, &p, &v, &budget) {
            Ok(r) => {
                let cf = r["closed_form"].as_f64().unwrap_or(f64::NAN);
                let est = r["estimate"].as_f64().unwrap_or(f64::NAN);
                check(name, est >= cf - 1e-9 && est <= 1.02 * cf, format!("closed {cf:.9}, estimate {est:.9}"))
            }
            Err(e) => check(name, false, e.to_string()),
        })
        .collect()
}

// ---------------------------------------------------------------- monotonicity

fn monotonicity(inner: &Domain, outer: &Domain, p: Option<CPoint>, probes: usize, samples: usize, budget: &OptimizerBudget) -> Result<Value> {
    let lemma = match p {
        Some(p) => Some(to_value(&lemma_compare_bound(inner, outer, &p, probes, budget)?)),
        None => None,
    };
    let uniform = uniform_monotonicity_constant(inner, outer, samples, budget)?;
    Ok(json!({
        "inner": to_value(inner),
        "outer": to_value(outer),
        "pointwise": lemma,
        "uniform": to_value(&uniform),
    }))
}

fn cmd_monotonicity(args: &MonotonicityArgs, g: &GlobalOpts) -> Result<Output> {
    let inner = read_domain(&need(args.inner.clone(), "inner")?)?;
    let outer = read_domain(&need(args.outer.clone(), "outer")?)?;
    let p = args.p.as_deref().map(parse_point).transpose()?.map(CPoint::new).transpose()?;
    let budget = budget_for(args.budget, None, g.seed);
    let report = monotonicity(&inner, &outer, p, args.probes, args.samples, &budget)?;
    Ok(Output { report, csv: None })
}

fn selftest_monotonicity() -> Vec<Check> {
    let mut out = Vec::new();
    let d1 = Domain::unit_disc();
    let d2 = Domain::disc(C64::new(0.0, 0.0), 2.0).unwrap();
    let p = CPoint::origin(1);
    match lemma_compare_bound(&d1, &d2, &p, 8, &OptimizerBudget::light()) {
        Ok(r) => out.push(check(
            "disc pair bound is tight",
            (r.c_bound - r.observed_ratio).abs() < 1e-6,
            format!("bound {:.9}, ratio {:.9}", r.c_bound, r.observed_ratio),
        )),
        Err(e) => out.push(check("disc pair bound is tight", false, e.to_string())),
    }
    let pairs = [
        ("balls", Domain::centered_ball(2, 1.0).unwrap(), Domain::centered_ball(2, 1.5).unwrap()),
        ("tube spheres", Domain::tube_sphere(1, 0.2).unwrap(), Domain::tube_sphere(1, 0.4).unwrap()),
    ];
    for (name, u, v) in pairs {
        match uniform_monotonicity_constant(&u, &v, 4, &OptimizerBudget::light()) {
            Ok(r) => out.push(check(name, r.c < 1.0, format!("c = {:.6}", r.c))),
            Err(e) => out.push(check(name, false, e.to_string())),
        }
    }
    out
}

// ---------------------------------------------------------------- hausdorff

fn parse_metric(s: &str) -> Result<MetricKind> {
    match s {
        "kobayashi" => Ok(MetricKind::Kobayashi),
        "euclidean" => Ok(MetricKind::Euclidean),
        _ => Err(Error::InvalidInput(format!("unknown metric {s:?}; use kobayashi or euclidean"))),
    }
}

#[derive(serde::Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ObjectFile {
    Curve(SampledCurve),
    Mesh(SphereMeshMap),
}

fn hausdorff(d: &Domain, obj: &ObjectFile, k: usize, kind: MetricKind, eps: &[f64], scale: f64) -> Result<Value> {
    let metric = match kind {
        MetricKind::Kobayashi => LengthMetric::kobayashi(d),
        MetricKind::Euclidean => LengthMetric::euclidean(d),
    }
    .with_scale(scale)?;
    let (object, calibration) = match obj {
        ObjectFile::Curve(c) => (MeasuredObject::Curve(c), None),
        ObjectFile::Mesh(m) => (MeasuredObject::Mesh(m), if k == 2 { Some(flat_calibration(m)?) } else { None }),
    };
    let r = hausdorff_k_measure_with(&metric, object, k, eps, &MeasureBudget::default())?;
    let mut v = to_value(&r);
    v["flat_calibration"] = json!(calibration);
    v["calibrated_value"] = json!(calibration.map(|c| r.value / c));
    Ok(v)
}

fn cmd_hausdorff(args: &HausdorffArgs, _g: &GlobalOpts) -> Result<Output> {
    let d = read_domain(&need(args.domain.clone(), "domain")?)?;
    let obj: ObjectFile = serde_json::from_str(&std::fs::read_to_string(need(args.object.clone(), "object")?)?)?;
    let report = hausdorff(&d, &obj, args.k, parse_metric(&args.metric)?, &args.epsilons, args.scale)?;
    Ok(Output { report, csv: None })
}

fn selftest_hausdorff() -> Vec<Check> {
    let mut out = Vec::new();
    let pi2 = std::f64::consts::PI.powi(2);
    let m = Domain::annulus_m(std::f64::consts::E).unwrap();
    let circle = SampledCurve::circle(C64::new(0.0, 0.0), 1.0, 256, 1).unwrap();
    match hausdorff(&m, &ObjectFile::Curve(circle), 1, MetricKind::Kobayashi, &[0.5, 0.1, 0.02], 2.0) {
        Ok(r) => {
            let v = r["value"].as_f64().unwrap_or(f64::NAN);
            out.push(check("core circle of M", (v - pi2).abs() < 0.02 * pi2, format!("{v:.6} vs {pi2:.6}")));
        }
        Err(e) => out.push(check("core circle of M", false, e.to_string())),
    }
    let seg = SampledCurve::segment(&CPoint::origin(1), &CPoint::real(&[0.5]).unwrap(), 1).unwrap();
    let want = 0.5f64.atanh();
    match hausdorff(&Domain::unit_disc(), &ObjectFile::Curve(seg), 1, MetricKind::Kobayashi, &[0.1, 0.01], 1.0) {
        Ok(r) => {
            let v = r["value"].as_f64().unwrap_or(f64::NAN);
            out.push(check("segment in disc", (v - want).abs() < 0.02 * want, format!("{v:.9} vs {want:.9}")));
        }
        Err(e) => out.push(check("segment in disc", false, e.to_string())),
    }
    out
}

// ---------------------------------------------------------------- tube-lk

fn tube_lk(k: usize, radii: &[f64], density: usize, shrink: bool) -> Result<Value> {
    let mut rows = Vec::with_capacity(radii.len());
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let rep = lk_tube_upper(k, r, density, shrink)?;
        values.push(rep.value);
        rows.push(json!({ "r": r, "value": rep.value }));
    }
    let sorted = radii.windows(2).all(|w| w[1] > w[0]);
    let margins: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    Ok(json!({
        "k": k,
        "density": density,
        "shrink_search": shrink,
        "rows": rows,
        "margins": margins,
        "strictly_decreasing": sorted && margins.iter().all(|m| *m > 0.0),
    }))
}

fn tube_lk_csv(report: &Value) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "value"])?;
    for row in report["rows"].as_array().into_iter().flatten() {
        w.write_record([row["r"].to_string(), row["value"].to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_tube_lk(args: &TubeLkArgs, _g: &GlobalOpts) -> Result<Output> {
    let k = need(args.k, "k")?;
    let density = args.density.unwrap_or_else(|| default_tube_density(k));
    let report = tube_lk(k, &args.radii, density, args.shrink)?;
    let csv = Some(tube_lk_csv(&report)?);
    Ok(Output { report, csv })
}

fn selftest_tube_lk() -> Vec<Check> {
    match tube_lk(1, &[0.2, 0.3], default_tube_density(1), false) {
        Ok(r) => vec![check(
            "k=1, r=0.2 above r=0.3",
            r["strictly_decreasing"].as_bool() == Some(true),
            r["rows"].to_string(),
        )],
        Err(e) => vec![check("k=1, r=0.2 above r=0.3", false, e.to_string())],
    }
}

// ---------------------------------------------------------------- fixed-point

fn cmd_fixed_point(args: &FixedPointArgs, _g: &GlobalOpts) -> Result<Output> {
    let f = read_map(&need(args.map.clone(), "map")?)?;
    let u = read_domain(&need(args.domain.clone(), "domain")?)?;
    let starts: Vec<CPoint> = if args.starts.is_empty() {
        quasi_random_starts(&u, args.start_count)
    } else {
        args.starts.iter().map(|s| CPoint::new(parse_point(s)?)).collect::<Result<_>>()?
    };
    let opts = FixedPointOptions { tol: args.tol, max_iter: args.max_iter, ..FixedPointOptions::default() };
    let r = iterate_to_fixed_point(&f, &u, &starts, &opts)?;
    let csv = Some(points_csv(&r.iterates)?);
    Ok(Output { report: to_value(&r), csv })
}

/// The three reference contractions: name, map, domain, five starts and
/// the exact fixed point.
pub fn contraction_examples() -> Vec<(&'static str, PolyMap, Domain, Vec<CPoint>, Vec<C64>)> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let disc = Domain::unit_disc();
    let ball = Domain::centered_ball(2, 1.0).unwrap();
    let pad = |mut v: Vec<CPoint>, d: &Domain| {
        v.extend(quasi_random_starts(d, 5 - v.len()));
        v
    };
    vec![
        (
            "z/2",
            PolyMap::affine(&[vec![c(0.5, 0.0)]], &[c(0.0, 0.0)]).unwrap(),
            disc.clone(),
            pad(vec![CPoint::real(&[0.9]).unwrap()], &disc),
            vec![c(0.0, 0.0)],
        ),
        (
            "z/2+1/4",
            PolyMap::affine(&[vec![c(0.5, 0.0)]], &[c(0.25, 0.0)]).unwrap(),
            disc.clone(),
            pad(
                vec![CPoint::real(&[0.0]).unwrap(), CPoint::new(vec![c(0.0, 0.9)]).unwrap(), CPoint::real(&[-0.5]).unwrap()],
                &disc,
            ),
            vec![c(0.5, 0.0)],
        ),
        (
            "(z2/3+0.1, z1/3)",
            PolyMap::affine(
                &[vec![c(0.0, 0.0), c(1.0 / 3.0, 0.0)], vec![c(1.0 / 3.0, 0.0), c(0.0, 0.0)]],
                &[c(0.1, 0.0), c(0.0, 0.0)],
            )
            .unwrap(),
            ball.clone(),
            quasi_random_starts(&ball, 5),
            vec![c(0.1125, 0.0), c(0.0375, 0.0)],
        ),
    ]
}

fn selftest_fixed_point() -> Vec<Check> {
    contraction_examples()
        .into_iter()
        .map(|(name, f, u, starts, want)| match iterate_to_fixed_point(&f, &u, &starts, &FixedPointOptions::default()) {
            Ok(r) => {
                let err = r.z0.distance(&CPoint::new(want).unwrap());
                let pass = err < 1e-10 && r.distinct_starts_agreement <= 1e-8 && r.tail_excess() <= TAIL_TOLERANCE;
                check(name, pass, format!("|z0 - exact| {err:.1e}, spread {:.1e}, c {:.4}", r.distinct_starts_agreement, r.c_certified))
            }
            Err(e) => check(name, false, e.to_string()),
        })
        .collect()
}

// ---------------------------------------------------------------- tube-degree

fn cmd_tube_degree(args: &TubeDegreeArgs, _g: &GlobalOpts) -> Result<Output> {
    let f = read_map(&need(args.map.clone(), "map")?)?;
    let source = read_domain(&need(args.source.clone(), "source")?)?;
    let target = read_domain(&need(args.target.clone(), "target")?)?;
    let report = match args.collapse {
        Some(h) => to_value(&degree_collapse_demo(&f, &source, &target, h, args.density)?),
        None => json!({ "degree": tube_map_degree(&f, &source, &target, args.density)? }),
    };
    Ok(Output { report, csv: None })
}

fn selftest_tube_degree() -> Vec<Check> {
    let c = |re: f64| C64::new(re, 0.0);
    let term = |idx: Vec<u32>, coef: Vec<C64>| crate::polymap::Term { idx, coef };
    let t01 = Domain::tube_circle(2, 0.1).unwrap();
    let t02 = Domain::tube_circle(2, 0.2).unwrap();
    let t03 = Domain::tube_circle(2, 0.3).unwrap();
    let t04 = Domain::tube_circle(2, 0.4).unwrap();
    let t05 = Domain::tube_circle(2, 0.5).unwrap();
    let mut out = Vec::new();
    let deg = |name: &str, f: PolyMap, s: &Domain, t: &Domain, want: i64| match tube_map_degree(&f, s, t, 256) {
        Ok(d) => check(name, d == want, format!("degree {d}, want {want}")),
        Err(e) => check(name, false, e.to_string()),
    };
    out.push(deg("identity", PolyMap::identity(2).unwrap(), &t03, &t03, 1));
    out.push(deg("constant", PolyMap::constant(2, &[c(1.0), c(0.0)]).unwrap(), &t03, &t03, 0));
    out.push(deg(
        "z1 squared",
        PolyMap::new(2, 2, vec![term(vec![2, 0], vec![c(1.0), c(0.0)])]).unwrap(),
        &t01,
        &t05,
        2,
    ));
    let small = PolyMap::new(2, 2, vec![term(vec![0, 0], vec![c(1.0), c(0.0)]), term(vec![1, 0], vec![c(0.1), c(0.0)])]).unwrap();
    out.push(match degree_collapse_demo(&small, &t04, &t02, 8, 256) {
        Ok(r) => check("1 + 0.1 z1 collapses", r.degree == 0 && r.collapse_step.is_some(), format!("{:?}", r.collapse_step)),
        Err(e) => check("1 + 0.1 z1 collapses", false, e.to_string()),
    });
    let proj = PolyMap::new(2, 2, vec![term(vec![1, 0], vec![c(1.0), c(0.0)])]).unwrap();
    let rejected = matches!(degree_collapse_demo(&proj, &t04, &t04, 4, 256), Err(Error::ImageNotRelativelyCompact(_)));
    out.push(check("(z1, 0) rejected", rejected, String::new()));
    out
}

// ---------------------------------------------------------------- golden files

/// Relative tolerance applied when a golden file names none.
pub const GOLDEN_DEFAULT_RTOL: f64 = 1e-9;

/// Compares `got` against a golden file. The file is either a bare report
/// or `{"report": …, "tolerances": {"default": r, "<field>": r, …}}`, with
/// field tolerances keyed by the last path component.
pub fn golden_mismatches(got: &Value, golden: &Value) -> Vec<String> {
    let (want, tols) = match golden.get("report") {
        Some(r) => (r, golden.get("tolerances").cloned().unwrap_or(json!({}))),
        None => (golden, json!({})),
    };
    let default = tols.get("default").and_then(Value::as_f64).unwrap_or(GOLDEN_DEFAULT_RTOL);
    let mut out = Vec::new();
    compare(got, want, "", "", &tols, default, &mut out);
    out
}

fn compare(got: &Value, want: &Value, path: &str, field: &str, tols: &Value, default: f64, out: &mut Vec<String>) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            let tol = tols.get(field).and_then(Value::as_f64).unwrap_or(default);
            if !((a - b).abs() <= tol * b.abs().max(1e-300) || a == b) {
                out.push(format!("{path}: got {a}, golden {b}"));
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            for (k, wb) in b {
                let p = format!("{path}.{k}");
                match a.get(k) {
                    Some(ga) => compare(ga, wb, &p, k, tols, default, out),
                    None => out.push(format!("{p}: missing")),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                out.push(format!("{path}: length {} vs golden {}", a.len(), b.len()));
                return;
            }
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                compare(x, y, &format!("{path}[{i}]"), field, tols, default, out);
            }
        }
        (a, b) if a == b => {}
        (a, b) => out.push(format!("{path}: got {a}, golden {b}")),
    }
}

// ---------------------------------------------------------------- driver

fn dispatch(cmd: &Command, g: &GlobalOpts) -> Result<Output> {
    match cmd {
        Command::L1Annulus(a) => cmd_l1_annulus(a, g),
        Command::KobEval(a) => cmd_kob_eval(a, g),
        Command::Monotonicity(a) => cmd_monotonicity(a, g),
        Command::Hausdorff(a) => cmd_hausdorff(a, g),
        Command::TubeLk(a) => cmd_tube_lk(a, g),
        Command::FixedPoint(a) => cmd_fixed_point(a, g),
        Command::TubeDegree(a) => cmd_tube_degree(a, g),
    }
}

fn selftest(cmd: &Command) -> Vec<Check> {
    match cmd {
        Command::L1Annulus(_) => selftest_l1(),
        Command::KobEval(_) => selftest_kob_eval(),
        Command::Monotonicity(_) => selftest_monotonicity(),
        Command::Hausdorff(_) => selftest_hausdorff(),
        Command::TubeLk(_) => selftest_tube_lk(),
        Command::FixedPoint(_) => selftest_fixed_point(),
        Command::TubeDegree(_) => selftest_tube_degree(),
    }
}

fn emit(out: &Output, g: &GlobalOpts, stdout: &mut dyn Write) -> Result<()> {
    let text = match g.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.report)?;
            s.push('\n');
            s
        }
        Format::Csv => out
            .csv
            .clone()
            .ok_or_else(|| Error::InvalidInput("this command has no point list; use --format json".into()))?,
    };
    match &g.output {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 for a failed golden comparison or self test, 2 for bad
/// configuration, 3 for domain violations and 4 for exhausted budgets.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return e.exit_code();
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 {
            let _ = writeln!(stderr, "error: --threads must be positive");
            return 2;
        }
        // a pool may already exist when run is called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    if cli.global.selftest {
        let checks = selftest(&cli.command);
        let mut failed = 0;
        for c in &checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(stdout, "{tag} {}: {}", c.name, c.detail);
            failed += usize::from(!c.pass);
        }
        return i32::from(failed > 0);
    }

    let out = match dispatch(&cli.command, &cli.global) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    if let Some(rel) = out.report.get("relative_error").and_then(Value::as_f64) {
        let _ = writeln!(stderr, "relative error vs analytic value: {rel:.3e}");
    }
    if let Err(e) = emit(&out, &cli.global, stdout) {
        let _ = writeln!(stderr, "error: {e}");
        return e.exit_code();
    }
    if let Some(path) = &cli.global.golden {
        let golden: Value = match std::fs::read_to_string(path).map_err(Error::from).and_then(|s| Ok(serde_json::from_str(&s)?)) {
            Ok(v) => v,
            Err(e) => {
                let _ = writeln!(stderr, "error: golden file: {e}");
                return e.exit_code();
            }
        };
        let diffs = golden_mismatches(&out.report, &golden);
        if !diffs.is_empty() {
            for d in &diffs {
                let _ = writeln!(stderr, "golden mismatch {d}");
            }
            return 1;
        }
        let _ = writeln!(stderr, "golden comparison passed");
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_points() {
        let p = parse_point("0.5, 0.1-0.2i,3i").unwrap();
        assert_eq!(p, vec![C64::new(0.5, 0.0), C64::new(0.1, -0.2), C64::new(0.0, 3.0)]);
        assert!(parse_point("1,x").is_err());
    }

    #[test]
    fn golden_tolerances_by_field() {
        let got = json!({"value": 1.0005, "rows": [{"r": 0.1, "value": 2.0}], "k": 1});
        let golden = json!({"report": {"value": 1.0, "rows": [{"r": 0.1, "value": 2.0}], "k": 1},
                            "tolerances": {"value": 1e-3}});
        assert!(golden_mismatches(&got, &golden).is_empty());
        let strict = json!({"value": 1.0, "k": 1});
        assert_eq!(golden_mismatches(&got, &strict).len(), 1);
        assert_eq!(golden_mismatches(&json!({"k": 2}), &json!({"k": 1})).len(), 1);
    }

    #[test]
    fn usage_errors_exit_2() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        assert_eq!(run(["koblab", "l1-annulus", "--R", "1"], &mut o, &mut e), 2);
        assert_eq!(run(["koblab", "no-such-command"], &mut o, &mut e), 2);
        assert_eq!(run(["koblab", "kob-eval"], &mut o, &mut e), 2);
    }
}
