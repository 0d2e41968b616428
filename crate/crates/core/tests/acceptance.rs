//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::{E, PI};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use koblab::cli::{contraction_examples, golden_mismatches};
use koblab::contraction::{degree_collapse_demo, iterate_to_fixed_point, FixedPointOptions, TAIL_TOLERANCE};
use koblab::estimator::{lemma_compare_bound, uniform_monotonicity_constant, OptimizerBudget};
use koblab::invariants::{default_tube_density, l1_annulus_general, random_winding_polyline};
use koblab::{
    curve_length, estimate_kob_royden, hausdorff_k_measure, hausdorff_k_measure_with, kob_royden_closed,
    lk_tube_upper, tube_map_degree, CPoint, Domain, LengthMetric, LengthMode, MeasureBudget, MeasuredObject,
    MetricKind, PolyMap, SampledCurve, TVector, Term, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn l1_reproduction() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for r in [E, 2.0, 4.0, 10.0] {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_koblab"))
            .args(["l1-annulus", "--R", &format!("{r:.17}"), "--scale", "2"])
            .output()
            .map_err(|e| e.to_string())?;
        let took = secs(start.elapsed());
        if !out.status.success() {
            return Err(format!("R={r}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
        let rep: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let value = rep["value"].as_f64().unwrap_or(f64::NAN);
        let want = PI * PI / r.ln();
        let rel = (value - want).abs() / want;
        let dev = rep["max_radial_deviation"].as_f64().unwrap_or(f64::NAN);
        let limit = 0.05 * (r.sqrt() - 1.0 / r.sqrt());
        ok &= rel < 0.01 && dev < limit && took < 30.0;
        lines.push(format!("R={r:.4} rel {rel:.1e} dev {dev:.1e}<{limit:.3} {took:.1}s"));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn hadamard_invariance() -> Outcome {
    let budget = Default::default();
    let a = l1_annulus_general(1.0, 9.0, 2.0, &budget).map_err(|e| e.to_string())?.value;
    let b = l1_annulus_general(1.0 / 3.0, 3.0, 2.0, &budget).map_err(|e| e.to_string())?.value;
    let rel = (a - b).abs() / a.min(b);
    let msg = format!("A(1,9) {a:.6}, A(1/3,3) {b:.6}, rel diff {rel:.1e}");
    if rel < 0.01 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn winding_lower_bound() -> Outcome {
    let m = Domain::annulus_m(E).map_err(|e| e.to_string())?;
    let metric = LengthMetric::kobayashi(&m).with_scale(2.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for i in 0..500 {
        let w = 1 + (i % 3) as i32;
        let curve = random_winding_polyline(E, w, 400, &mut rng).map_err(|e| e.to_string())?;
        let len = curve_length(&metric, &curve, LengthMode::Integrated).map_err(|e| e.to_string())?;
        worst = worst.min(len / (w as f64 * PI * PI));
    }
    let msg = format!("500 polylines, min length/(w·π²) = {worst:.4}");
    if worst >= 0.99 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        if v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-4 {
            return v;
        }
    }
}

/// A point of the disc of radius `radius` about 0 with modulus at most
/// half the radius.
fn inner_point(radius: f64, rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(0.5 * radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI))
}

fn estimator_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let budget = OptimizerBudget::with_degree(6);
    let mut below = 0.0f64;
    let mut above = 0.0f64;
    for i in 0..200 {
        let (d, p) = match i % 3 {
            0 => (Domain::unit_disc(), vec![inner_point(1.0, &mut rng)]),
            1 => {
                let n = 2 + (i / 3) % 2;
                let mut p = Vec::new();
                // uniform direction, radius at most 1/2
                let dir = random_vector(n, &mut rng);
                let norm = dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let t = 0.5 * rng.gen::<f64>();
                p.extend(dir.iter().map(|z| z * (t / norm)));
                (Domain::centered_ball(n, 1.0).unwrap(), p)
            }
            _ => {
                let radii = vec![1.0, 0.5 + rng.gen::<f64>()];
                let p = radii.iter().map(|r| inner_point(*r, &mut rng)).collect();
                (Domain::polydisc(radii).unwrap(), p)
            }
        };
        let v = random_vector(d.dim(), &mut rng);
        let p = CPoint::new(p).unwrap();
        let v = TVector::new(v).unwrap();
        let exact = kob_royden_closed(&d, &p, &v).map_err(|e| e.to_string())?.value;
        let est = estimate_kob_royden(&d, &p, &v, &budget).map_err(|e| format!("sample {i}: {e}"))?.value;
        below = below.max(exact - est);
        above = above.max(est / exact);
    }
    let took = secs(start.elapsed());
    let msg = format!("200 samples, max (closed − estimate) {below:.1e}, max estimate/closed {above:.5}, {took:.0}s");
    if below <= 1e-9 && above <= 1.02 && took < 300.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lemma_compare_tightness() -> Outcome {
    let budget = OptimizerBudget::light();
    let pairs = [
        ("discs", Domain::unit_disc(), Domain::disc(c(0.0, 0.0), 2.0).unwrap(), CPoint::origin(1)),
        (
            "balls",
            Domain::centered_ball(2, 1.0).unwrap(),
            Domain::centered_ball(2, 2.0).unwrap(),
            CPoint::origin(2),
        ),
        (
            "balls in C^3",
            Domain::centered_ball(3, 1.0).unwrap(),
            Domain::centered_ball(3, 1.5).unwrap(),
            CPoint::origin(3),
        ),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, inner, outer, p) in pairs {
        let r = lemma_compare_bound(&inner, &outer, &p, 16, &budget).map_err(|e| e.to_string())?;
        let gap = (r.c_bound - r.observed_ratio).abs();
        ok &= gap < 1e-6;
        lines.push(format!("{name} bound {:.9} ratio {:.9}", r.c_bound, r.observed_ratio));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn uniform_constant() -> Outcome {
    let budget = OptimizerBudget::light();
    let pairs = [
        ("discs", Domain::disc(c(0.1, 0.0), 0.5).unwrap(), Domain::unit_disc()),
        ("polydiscs", Domain::polydisc(vec![0.5, 0.5]).unwrap(), Domain::polydisc(vec![1.0, 1.0]).unwrap()),
        ("tube spheres", Domain::tube_sphere(1, 0.2).unwrap(), Domain::tube_sphere(1, 0.4).unwrap()),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, u, v) in pairs {
        let r = uniform_monotonicity_constant(&u, &v, 8, &budget).map_err(|e| format!("{name}: {e}"))?;
        let max_ratio = r.samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        ok &= r.c < 1.0 && max_ratio < 1.0;
        lines.push(format!("{name} c {:.4}", r.c));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn hausdorff_length() -> Outcome {
    let m = Domain::annulus_m(E).map_err(|e| e.to_string())?;
    let metric = LengthMetric::kobayashi(&m).with_scale(2.0).map_err(|e| e.to_string())?;
    let circle = SampledCurve::circle(c(0.0, 0.0), 1.0, 256, 1).map_err(|e| e.to_string())?;
    let mu = hausdorff_k_measure_with(&metric, MeasuredObject::Curve(&circle), 1, &[0.5, 0.1, 0.02], &MeasureBudget::default())
        .map_err(|e| e.to_string())?
        .value;
    let pi2 = PI * PI;
    let disc = Domain::unit_disc();
    let a = CPoint::real(&[-0.3]).unwrap();
    let b = CPoint::new(vec![c(0.2, 0.5)]).unwrap();
    let seg = SampledCurve::segment(&a, &b, 8).map_err(|e| e.to_string())?;
    let seg_mu = hausdorff_k_measure(&disc, MeasuredObject::Curve(&seg), 1, MetricKind::Kobayashi, &[0.1, 0.01])
        .map_err(|e| e.to_string())?
        .value;
    // the chord is not a geodesic: compare with the integral of the density
    let oracle = {
        let n = 200_000;
        let (p, q) = (a.coords()[0], b.coords()[0]);
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                let z = p + (q - p) * t;
                (q - p).norm() / (1.0 - z.norm_sqr()) / n as f64
            })
            .sum::<f64>()
    };
    let e1 = (mu - pi2).abs() / pi2;
    let e2 = (seg_mu - oracle).abs() / oracle;
    let msg = format!("circle {mu:.5} vs π² (rel {e1:.1e}); segment {seg_mu:.6} vs {oracle:.6} (rel {e2:.1e})");
    if e1 < 0.02 && e2 < 0.02 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

const RADII: [f64; 5] = [0.1, 0.15, 0.2, 0.25, 0.3];

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/tube_lk.json")
}

fn tube_monotonicity() -> Outcome {
    let mut report = serde_json::Map::new();
    let mut lines = Vec::new();
    let mut ok = true;
    for k in [1usize, 2] {
        let start = Instant::now();
        let values: Vec<f64> = RADII
            .iter()
            .map(|&r| lk_tube_upper(k, r, default_tube_density(k), false).map(|rep| rep.value))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let margin = values.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        ok &= margin > 0.0;
        lines.push(format!("k={k} min margin {margin:.3} ({:.0}s)", secs(start.elapsed())));
        report.insert(format!("k{k}"), json!(values));
    }
    let report = Value::Object(report);
    let path = golden_path();
    match std::fs::read_to_string(&path) {
        Ok(text) => {
            let golden: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let diffs = golden_mismatches(&report, &golden);
            ok &= diffs.is_empty();
            lines.push(if diffs.is_empty() { "matches golden".into() } else { format!("golden: {}", diffs.join(", ")) });
        }
        Err(_) => {
            let frozen = json!({ "radii": RADII, "report": report, "tolerances": { "default": 1e-6 } });
            std::fs::create_dir_all(path.parent().expect("golden dir")).map_err(|e| e.to_string())?;
            std::fs::write(&path, serde_json::to_string_pretty(&frozen).unwrap() + "\n").map_err(|e| e.to_string())?;
            lines.push("golden baseline written".into());
        }
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fixed_points() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, f, u, starts, want) in contraction_examples() {
        let start = Instant::now();
        let r = iterate_to_fixed_point(&f, &u, &starts, &FixedPointOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        let took = secs(start.elapsed());
        let err = r.z0.distance(&CPoint::new(want).unwrap());
        ok &= starts.len() >= 5
            && err < 1e-10
            && r.distinct_starts_agreement <= 1e-8
            && !r.tail_ratios.is_empty()
            && r.tail_excess() <= TAIL_TOLERANCE
            && took < 10.0;
        lines.push(format!(
            "{name}: err {err:.0e}, spread {:.0e}, max tail ratio {:.3} ≤ c {:.3}+{TAIL_TOLERANCE}, {took:.2}s",
            r.distinct_starts_agreement,
            r.tail_ratios.iter().copied().fold(0.0, f64::max),
            r.c_certified
        ));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn poly(terms: &[(&[u32], [f64; 2])]) -> PolyMap {
    PolyMap::new(
        2,
        2,
        terms.iter().map(|(idx, co)| Term { idx: idx.to_vec(), coef: vec![c(co[0], 0.0), c(co[1], 0.0)] }).collect(),
    )
    .unwrap()
}

fn degree_collapse() -> Outcome {
    let t = |r: f64| Domain::tube_circle(2, r).unwrap();
    let maps = [
        ("constant", poly(&[(&[0, 0], [1.0, 0.0])]), t(0.4), t(0.2)),
        ("1 + 0.1 z1", poly(&[(&[0, 0], [1.0, 0.0]), (&[1, 0], [0.1, 0.0])]), t(0.4), t(0.2)),
        (
            "(0.92 + 0.04 z1², 0.1 z2)",
            poly(&[(&[0, 0], [0.92, 0.0]), (&[2, 0], [0.04, 0.0]), (&[0, 1], [0.0, 0.1])]),
            t(0.4),
            t(0.2),
        ),
        ("(1 - 0.05 z1 z2, 0.2 z2)", poly(&[(&[0, 0], [1.0, 0.0]), (&[1, 1], [-0.05, 0.0]), (&[0, 1], [0.0, 0.2])]), t(0.3), t(0.3)),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, f, s, tg) in maps {
        let r = degree_collapse_demo(&f, &s, &tg, 8, 256).map_err(|e| format!("{name}: {e}"))?;
        ok &= r.degree == 0 && r.collapse_step.is_some();
        lines.push(format!("{name}: deg {} collapse at {:?}", r.degree, r.collapse_step));
    }
    let square = poly(&[(&[2, 0], [1.0, 0.0])]);
    let d = tube_map_degree(&square, &t(0.1), &t(0.5), 256).map_err(|e| e.to_string())?;
    ok &= d == 2;
    lines.push(format!("z1² degree {d}"));
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 l1 reproduction", l1_reproduction),
        ("2 hadamard invariance", hadamard_invariance),
        ("3 winding lower bound", winding_lower_bound),
        ("4 estimator soundness", estimator_soundness),
        ("5 comparison bound tightness", lemma_compare_tightness),
        ("6 uniform comparison constant", uniform_constant),
        ("7 hausdorff 1-measure is length", hausdorff_length),
        ("8 tube strict monotonicity", tube_monotonicity),
        ("9 fixed points", fixed_points),
        ("10 degree collapse", degree_collapse),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(&format!("{o} "))) {
            continue;
        }
        match run() {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
