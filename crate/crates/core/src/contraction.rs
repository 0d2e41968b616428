//! Fixed points of holomorphic self-maps with relatively compact image,
//! and the collapse of degree under iteration of tube maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::kob_distance_graph;
use crate::error::{Error, Result};
use crate::estimator::{sample_points, uniform_monotonicity_constant, OptimizerBudget, RatioSource};
use crate::geometry::{dist, domain_separation, CPoint, Domain, DomainKind, SampledCurve, C64};
use crate::invariants::{tube_map_degree, winding_number};
use crate::metrics::kob_distance_closed;
use crate::polymap::PolyMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrictImage {
    /// {p ∈ U : dist(p, ∁U) > δ′/2}.
    #[serde(skip)]
    pub v: Option<Domain>,
    /// Smallest sampled dist(f(p), ∁U).
    pub delta: f64,
    pub samples: usize,
}

/// Points of `d`: seeded interior samples plus, for each, a point 99.99%
/// of the way to the boundary along a sample direction.
fn dense_samples(d: &Domain, count: usize) -> Vec<CPoint> {
    let interior = sample_points(d, count, 11);
    let dirs = sample_points(d, count, 13);
    let center = interior[0].clone();
    let mut out = interior.clone();
    for (p, q) in interior.iter().zip(dirs.iter().skip(1).chain(std::iter::once(&center))) {
        let w: Vec<C64> = q.coords().iter().zip(p.coords()).map(|(a, b)| a - b).collect();
        if w.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let t = d.ray_exit(p.coords(), &w);
        if t.is_finite() {
            let x: Vec<C64> = p.coords().iter().zip(&w).map(|(a, b)| a + b * (0.9999 * t)).collect();
            if d.contains_raw(&x) {
                out.push(CPoint::from_vec_unchecked(x));
            }
        }
    }
    out
}

/// Verifies on samples that f(U) stays a positive distance δ′ from the
/// complement of U, and returns V = {dist(·, ∁U) > δ′/2}.
pub fn check_strict_image(f: &PolyMap, u: &Domain, samples: usize) -> Result<StrictImage> {
    u.check_dim(f.n_in())?;
    u.check_dim(f.n_out())?;
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let pts = dense_samples(u, samples);
    let inradius = pts.iter().map(|p| u.sdf(p.coords())).fold(0.0, f64::max);
    let mut delta = f64::INFINITY;
    for p in &pts {
        let q = f.eval(p.coords());
        delta = delta.min(u.sdf(&q));
    }
    if !(delta > 0.01 * inradius) {
        return Err(Error::ImageNotRelativelyCompact(delta.max(0.0)));
    }
    let v = u.eroded(0.5 * delta)?;
    Ok(StrictImage { v: Some(v), delta, samples: pts.len() })
}

/// `count` interior points from a Halton sequence over the bounding box.
pub fn quasi_random_starts(d: &Domain, count: usize) -> Vec<CPoint> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let bbox = d.bbox();
    let dim = bbox.real_dim().min(PRIMES.len());
    let radical_inverse = |mut i: u64, b: u64| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count && i < 1_000_000 {
        let unit: Vec<f64> = (0..bbox.real_dim()).map(|j| radical_inverse(i, PRIMES[j % dim])).collect();
        let p = bbox.point_at(&unit);
        if d.contains_raw(&p) {
            out.push(CPoint::from_vec_unchecked(p));
        }
        i += 1;
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub z0: CPoint,
    /// Orbit of the first start.
    pub iterates: Vec<CPoint>,
    /// d_U(z0, fᵏ(p)) along that orbit.
    pub kob_rates: Vec<f64>,
    /// Ratios of consecutive rates over the checked tail.
    pub tail_ratios: Vec<f64>,
    pub c_certified: f64,
    pub ratio_source: RatioSource,
    pub converged: bool,
    pub distinct_starts_agreement: f64,
    pub margin: f64,
    pub steps: Vec<usize>,
}

/// Number of trailing rate ratios checked against c_certified.
pub const TAIL_STEPS: usize = 10;
/// Allowance on the tail ratios.
pub const TAIL_TOLERANCE: f64 = 0.05;
/// Rates below this are dominated by rounding and left out of the tail.
const RATE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Samples for the strict-image check.
    pub image_samples: usize,
    /// Sample points for the contraction constant.
    pub constant_samples: usize,
    /// Lattice spacing for d_U when no closed form exists.
    pub resolution: f64,
    pub budget: OptimizerBudget,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-12,
            max_iter: 10_000,
            image_samples: 2000,
            constant_samples: 16,
            resolution: 0.05,
            budget: OptimizerBudget::light(),
        }
    }
}

fn kob_distance(u: &Domain, a: &CPoint, b: &CPoint, resolution: f64) -> Result<f64> {
    match kob_distance_closed(u, a, b) {
        Err(Error::NoClosedForm(_)) => kob_distance_graph(u, a, b, resolution),
        other => other,
    }
}

fn orbit(f: &PolyMap, u: &Domain, start: &CPoint, tol: f64, max_iter: usize) -> Result<Vec<CPoint>> {
    let mut pts = vec![start.clone()];
    let mut z = start.coords().to_vec();
    for _ in 0..max_iter {
        let next = f.eval(&z);
        if !u.contains_raw(&next) {
            return Err(Error::NotInDomain);
        }
        let step = dist(&next, &z);
        z = next;
        pts.push(CPoint::from_vec_unchecked(z.clone()));
        if step < tol {
            return Ok(pts);
        }
    }
    Err(Error::DidNotConverge(max_iter))
}

/// Iterates f from each start to its limit, checks that the limits agree,
/// and compares the Kobayashi contraction along the first orbit with the
/// certified constant.
pub fn iterate_to_fixed_point(
    f: &PolyMap,
    u: &Domain,
    starts: &[CPoint],
    opts: &FixedPointOptions,
) -> Result<FixedPointReport> {
    if starts.is_empty() {
        return Err(Error::InvalidInput("need at least one start".into()));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidInput("tolerance and iteration budget must be positive".into()));
    }
    let image = check_strict_image(f, u, opts.image_samples)?;
    for s in starts {
        u.check_dim(s.dim())?;
        if !u.contains_raw(s.coords()) {
            return Err(Error::NotInDomain);
        }
    }
    let orbits: Vec<Vec<CPoint>> = starts
        .par_iter()
        .map(|s| orbit(f, u, s, opts.tol, opts.max_iter))
        .collect::<Result<_>>()?;
    let limits: Vec<&CPoint> = orbits.iter().map(|o| o.last().expect("nonempty orbit")).collect();
    let mut spread = 0.0f64;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            spread = spread.max(limits[i].distance(limits[j]));
        }
    }
    if spread > 10.0 * opts.tol {
        return Err(Error::UniquenessViolation(spread));
    }

    // polish the limit until the step stalls
    let mut z0 = limits[0].coords().to_vec();
    for _ in 0..200 {
        let next = f.eval(&z0);
        let step = dist(&next, &z0);
        z0 = next;
        if step < 1e-15 * (1.0 + z0.iter().map(|c| c.norm()).fold(0.0, f64::max)) {
            break;
        }
    }
    let z0 = CPoint::from_vec_unchecked(z0);

    let v = image.v.clone().expect("strict image carries V");
    let constant = uniform_monotonicity_constant(&v, u, opts.constant_samples, &opts.budget)?;
    let first = &orbits[0];
    let kob_rates: Vec<f64> = first
        .iter()
        .map(|p| kob_distance(u, &z0, p, opts.resolution))
        .collect::<Result<_>>()?;
    let usable: Vec<f64> = kob_rates.iter().copied().take_while(|r| *r > RATE_FLOOR).collect();
    let ratios: Vec<f64> = usable.windows(2).map(|w| w[1] / w[0]).collect();
    let tail_ratios = ratios[ratios.len().saturating_sub(TAIL_STEPS)..].to_vec();
    Ok(FixedPointReport {
        z0,
        iterates: first.clone(),
        kob_rates,
        tail_ratios,
        c_certified: constant.c,
        ratio_source: constant.ratio_source,
        converged: true,
        distinct_starts_agreement: spread,
        margin: image.delta,
        steps: orbits.iter().map(|o| o.len() - 1).collect(),
    })
}

impl FixedPointReport {
    /// Largest tail ratio minus c_certified; the contraction check passes
    /// when this is at most [`TAIL_TOLERANCE`].
    pub fn tail_excess(&self) -> f64 {
        self.tail_ratios.iter().map(|r| r - self.c_certified).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollapseReport {
    pub degree: i64,
    /// deg(fⁿ) for n = 1, 2, …
    pub iterate_degrees: Vec<i64>,
    /// Euclidean radius of fⁿ(samples) about their centroid.
    pub image_radii: Vec<f64>,
    /// First n for which fⁿ(samples) lies in a ball inside the target.
    pub collapse_step: Option<usize>,
    pub margin: f64,
}

fn tube_radius(d: &Domain) -> Result<(usize, f64)> {
    match d.kind() {
        DomainKind::TubeCircle { n, r } => Ok((*n, *r)),
        _ => Err(Error::InvalidInput("expected a circle tube".into())),
    }
}

/// Iterates a tube map f: T(r₁) → T(r₂) ⊂ T(r₁), records deg(fⁿ) and the
/// size of fⁿ(T(r₁)), and checks deg(fⁿ) = (deg f)ⁿ. Once the image sits
/// in a ball inside the target, fⁿ is null-homotopic and deg f must be 0.
pub fn degree_collapse_demo(
    f: &PolyMap,
    source: &Domain,
    target: &Domain,
    horizon: usize,
    mesh_density: usize,
) -> Result<CollapseReport> {
    let (n1, r1) = tube_radius(source)?;
    let (n2, r2) = tube_radius(target)?;
    if n1 != n2 || r2 > r1 {
        return Err(Error::InvalidInput("the target tube must be nested in the source".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let degree = tube_map_degree(f, source, target, mesh_density)?;
    let image = check_strict_image(f, source, 2000)?;

    let mut samples: Vec<Vec<C64>> = dense_samples(source, 500).into_iter().map(CPoint::into_coords).collect();
    let mut gamma: Vec<Vec<C64>> = (0..=mesh_density)
        .map(|i| {
            let mut z = vec![C64::new(0.0, 0.0); n1];
            z[0] = C64::from_polar(1.0, std::f64::consts::TAU * (i % mesh_density) as f64 / mesh_density as f64);
            z
        })
        .collect();
    let mut iterate_degrees = Vec::with_capacity(horizon);
    let mut image_radii = Vec::with_capacity(horizon);
    let mut collapse_step = None;
    for step in 1..=horizon {
        samples.iter_mut().for_each(|z| *z = f.eval(z));
        gamma.iter_mut().for_each(|z| *z = f.eval(z));
        let curve = SampledCurve::new(
            (0..gamma.len()).map(|i| i as f64).collect(),
            gamma.iter().map(|z| CPoint::new(z.clone())).collect::<Result<_>>()?,
            true,
        )?;
        let deg_n = winding_number(&curve, C64::new(0.0, 0.0), 0)?;
        let expected = degree.checked_pow(step as u32);
        if expected != Some(deg_n) {
            return Err(Error::InconsistentVerdict(format!(
                "deg(f^{step}) = {deg_n} but (deg f)^{step} = {expected:?}"
            )));
        }
        iterate_degrees.push(deg_n);
        let m = samples.len() as f64;
        let centroid: Vec<C64> =
            (0..n1).map(|i| samples.iter().map(|z| z[i]).sum::<C64>() / m).collect();
        let radius = samples.iter().map(|z| dist(z, &centroid)).fold(0.0, f64::max);
        image_radii.push(radius);
        if collapse_step.is_none() && target.contains_raw(&centroid) && radius < target.sdf(&centroid) {
            collapse_step = Some(step);
        }
    }
    if collapse_step.is_some() && degree != 0 {
        return Err(Error::InconsistentVerdict(format!(
            "iterates collapse into a ball but deg f = {degree}"
        )));
    }
    // a nested target is at positive distance from the source boundary
    let margin = if r2 < r1 { domain_separation(target, source).unwrap_or(image.delta) } else { image.delta };
    Ok(CollapseReport { degree, iterate_degrees, image_radii, collapse_step, margin })
}
