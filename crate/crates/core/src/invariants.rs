//! Homotopy invariants: winding numbers, degrees of sphere maps, the ℓ₁
//! invariant of annuli, upper bounds for ℓ_k and V^k_r of tubes, and the
//! homotopy verdict for annulus maps.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::{curve_length, LengthMetric, LengthMode};
use crate::error::{Error, Result};
use crate::estimator::{nelder_mead, sample_points, OptimizerBudget};
use crate::geometry::{CPoint, Domain, DomainKind, SampledCurve, C64};
use crate::hausdorff::sphere_map_measure_upper_with;
use crate::mesh::SphereMeshMap;
use crate::metrics::annulus_l1_closed;
use crate::polymap::PolyMap;

/// Rounding residue above which winding and degree sums are rejected.
pub const DEGREE_RESIDUE: f64 = 0.1;

/// Accumulated polar angle of a closed polygon about `about`, in turns.
fn turns(points: impl Iterator<Item = C64>, about: C64) -> Result<f64> {
    let pts: Vec<C64> = points.map(|z| z - about).collect();
    if let Some(i) = pts.iter().position(|z| z.norm() == 0.0) {
        return Err(Error::ProjectionUndefined(i));
    }
    let total: f64 = pts.windows(2).map(|w| (w[1] / w[0]).arg()).sum();
    Ok(total / TAU)
}

fn round_checked(x: f64, coarse: impl Fn(f64) -> Error) -> Result<i64> {
    let n = x.round();
    if (x - n).abs() >= DEGREE_RESIDUE {
        return Err(coarse((x - n).abs()));
    }
    Ok(n as i64)
}

/// Winding number of the selected coordinate of a closed curve about a point.
pub fn winding_number(c: &SampledCurve, about: C64, coordinate: usize) -> Result<i64> {
    if !c.is_closed() {
        return Err(Error::InvalidInput("winding number needs a closed curve".into()));
    }
    if coordinate >= c.dim() {
        return Err(Error::InvalidInput(format!("coordinate {coordinate} out of range")));
    }
    let t = turns(c.points().iter().map(|p| p.coords()[coordinate]), about)?;
    round_checked(t, Error::CurveTooCoarse)
}

/// How mesh images in ℂⁿ are sent to Sᵏ before measuring degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereProjection {
    /// Re z ∈ ℝᵏ⁺¹ normalized: nearest point of the real unit sphere.
    RealPart,
    /// k = 1 only: z₁/|z₁|, the nearest point of the circle {(e^{iθ}, 0, …)}.
    FirstCoordinate,
}

/// Signed solid angle of the spherical triangle (a, b, c).
fn solid_angle(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let cross = [b[1] * c[2] - b[2] * c[1], b[2] * c[0] - b[0] * c[2], b[0] * c[1] - b[1] * c[0]];
    let num = dot(a, &cross);
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

fn unit3(v: &[f64]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 1e-300).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

/// Degree of the composite of a mesh map with the projection to Sᵏ.
pub fn sphere_degree(m: &SphereMeshMap, projection: SphereProjection) -> Result<i64> {
    m.validate()?;
    let k = m.k();
    let images = m.images();
    match (k, projection) {
        (1, _) => {
            if projection == SphereProjection::RealPart && m.image_dim() < 2 {
                return Err(Error::InvalidInput("real-part projection of S¹ needs two coordinates".into()));
            }
            let proj = |p: &CPoint| match projection {
                SphereProjection::RealPart => C64::new(p.coords()[0].re, p.coords()[1].re),
                SphereProjection::FirstCoordinate => p.coords()[0],
            };
            let order = cycle_order(m);
            let img = turns(order.iter().chain(order.first()).map(|&i| proj(&images[i])), C64::new(0.0, 0.0))?;
            let par = turns(
                order.iter().chain(order.first()).map(|&i| C64::new(m.vertices()[i][0], m.vertices()[i][1])),
                C64::new(0.0, 0.0),
            )?;
            round_checked(img / par.round(), Error::MeshTooCoarse)
        }
        (2, SphereProjection::RealPart) => {
            if m.image_dim() < 3 {
                return Err(Error::InvalidInput("real-part projection of S² needs three coordinates".into()));
            }
            let projected: Vec<[f64; 3]> = images
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let re: Vec<f64> = p.coords()[..3].iter().map(|z| z.re).collect();
                    unit3(&re).ok_or(Error::ProjectionUndefined(i))
                })
                .collect::<Result<_>>()?;
            let verts: Vec<[f64; 3]> = m.vertices().iter().map(|v| [v[0], v[1], v[2]]).collect();
            let mut img = 0.0;
            let mut par = 0.0;
            for s in m.simplices() {
                img += solid_angle(&projected[s[0]], &projected[s[1]], &projected[s[2]]);
                par += solid_angle(&verts[s[0]], &verts[s[1]], &verts[s[2]]);
            }
            round_checked(img / par, Error::MeshTooCoarse)
        }
        _ => Err(Error::InvalidInput("first-coordinate projection is defined for k = 1 only".into())),
    }
}

/// Vertex order along the single cycle of an S¹ mesh.
fn cycle_order(m: &SphereMeshMap) -> Vec<usize> {
    let mut next = vec![0usize; m.vertices().len()];
    for s in m.simplices() {
        next[s[0]] = s[1];
    }
    let mut order = vec![0];
    let mut cur = next[0];
    while cur != 0 {
        order.push(cur);
        cur = next[cur];
    }
    order
}

/// Sample points of a circle tube: core points, points at 0.9·r off the
/// core in each real direction, and interior rejection samples.
fn tube_samples(d: &Domain, density: usize) -> Vec<CPoint> {
    let (n, r) = match d.kind() {
        DomainKind::TubeCircle { n, r } => (*n, *r),
        _ => return sample_points(d, density, 7),
    };
    let mut out = Vec::new();
    let rho = 0.9 * r;
    for j in 0..density {
        let w = C64::from_polar(1.0, TAU * j as f64 / density as f64);
        let mut core = vec![C64::new(0.0, 0.0); n];
        core[0] = w;
        out.push(core.clone());
        for s in [-1.0, 1.0] {
            let mut p = core.clone();
            p[0] = w * (1.0 + s * rho);
            out.push(p);
            for i in 1..n {
                for dir in [C64::new(s * rho, 0.0), C64::new(0.0, s * rho)] {
                    let mut p = core.clone();
                    p[i] = dir;
                    out.push(p);
                }
            }
        }
    }
    let mut pts: Vec<CPoint> = out.into_iter().map(CPoint::from_vec_unchecked).collect();
    pts.extend(sample_points(d, density, 7));
    pts
}

fn witness(p: &CPoint) -> Vec<[f64; 2]> {
    p.coords().iter().map(|z| [z.re, z.im]).collect()
}

/// Checks f(p) ∈ target over the samples.
fn check_maps_into(f: &PolyMap, samples: &[CPoint], target: &Domain) -> Result<()> {
    for p in samples {
        let q = f.eval(p.coords());
        if !target.contains_raw(&q) {
            return Err(Error::ContainmentViolation { witness: witness(p) });
        }
    }
    Ok(())
}

fn check_map_dims(f: &PolyMap, source: &Domain, target: &Domain) -> Result<()> {
    source.check_dim(f.n_in())?;
    target.check_dim(f.n_out())
}

/// Winding number about 0 of the first coordinate of f∘Γ, Γ(t) = (e^{it}, 0, …),
/// for f mapping the source circle tube into the target one.
pub fn tube_map_degree(f: &PolyMap, source: &Domain, target: &Domain, mesh_density: usize) -> Result<i64> {
    for d in [source, target] {
        if !matches!(d.kind(), DomainKind::TubeCircle { .. }) {
            return Err(Error::InvalidInput("tube_map_degree needs circle tubes".into()));
        }
    }
    check_map_dims(f, source, target)?;
    if mesh_density < 8 {
        return Err(Error::InvalidInput("mesh density must be at least 8".into()));
    }
    check_maps_into(f, &tube_samples(source, mesh_density), target)?;
    let n = source.dim();
    let gamma = SampledCurve::from_fn(0.0, TAU, mesh_density, true, |t| {
        let mut z = vec![C64::new(0.0, 0.0); n];
        z[0] = C64::from_polar(1.0, t);
        f.eval(&z)
    })?;
    winding_number(&gamma, C64::new(0.0, 0.0), 0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "data")]
pub enum Certificate {
    Curve(SampledCurve),
    Mesh(SphereMeshMap),
}

impl Certificate {
    /// Image points, one row per point: index, then Re/Im of each coordinate.
    pub fn to_csv(&self) -> Result<String> {
        let points: Vec<&CPoint> = match self {
            Certificate::Curve(c) => c.points().iter().collect(),
            Certificate::Mesh(m) => m.images().iter().collect(),
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        let n = points.first().map_or(0, |p| p.dim());
        let mut header = vec!["index".to_string()];
        for i in 0..n {
            header.push(format!("re{}", i + 1));
            header.push(format!("im{}", i + 1));
        }
        w.write_record(&header)?;
        for (i, p) in points.iter().enumerate() {
            let mut row = vec![i.to_string()];
            for z in p.coords() {
                row.push(format!("{:e}", z.re));
                row.push(format!("{:e}", z.im));
            }
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantReport {
    /// Upper estimate of the invariant.
    pub value: f64,
    pub certificate: Certificate,
    pub lower_bound: Option<f64>,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L1Budget {
    /// Log-radius knots of the periodic profile.
    pub knots: usize,
    pub samples_per_knot: usize,
    /// Simplex iterations per round.
    pub max_iters: usize,
    /// Rounds after the first, each restarted from the incumbent.
    pub restarts: usize,
    /// Amplitude of the random starting profile, relative to the half
    /// log-width of the annulus.
    pub start_amplitude: f64,
    pub seed: u64,
}

impl Default for L1Budget {
    fn default() -> Self {
        L1Budget { knots: 32, samples_per_knot: 8, max_iters: 6000, restarts: 3, start_amplitude: 0.3, seed: 1 }
    }
}

/// Closed polyline z(θ) = c·exp(y(θ) + iθ) with y periodic piecewise
/// linear on the knots.
fn profile_curve(center_radius: f64, knots: &[f64], samples_per_knot: usize) -> Result<SampledCurve> {
    let k = knots.len();
    let n = k * samples_per_knot;
    SampledCurve::from_fn(0.0, TAU, n, true, |theta| {
        let s = theta / TAU * k as f64;
        let j = (s.floor() as usize).min(k - 1);
        let frac = s - j as f64;
        let y = knots[j] * (1.0 - frac) + knots[(j + 1) % k] * frac;
        vec![C64::from_polar(center_radius * y.exp(), theta)]
    })
}

/// ℓ₁ of the annulus A(inner, outer) in the canonical metric at the given
/// scale: the shortest winding-one loop over radial profiles, searched
/// from a perturbed start.
pub fn l1_annulus_general(inner: f64, outer: f64, scale: f64, budget: &L1Budget) -> Result<InvariantReport> {
    let d = Domain::annulus(inner, outer)?;
    let lower = annulus_l1_closed(inner, outer, scale)?;
    if budget.knots < 3 || budget.samples_per_knot == 0 || budget.max_iters == 0 {
        return Err(Error::InvalidInput("ℓ₁ budget needs ≥ 3 knots, samples and iterations".into()));
    }
    let metric = LengthMetric::kobayashi(&d).with_scale(scale)?;
    let c = (inner * outer).sqrt();
    let half = 0.5 * (outer / inner).ln();
    let length = |y: &[f64]| -> f64 {
        if y.iter().any(|v| v.abs() >= half) {
            return f64::INFINITY;
        }
        profile_curve(c, y, budget.samples_per_knot)
            .and_then(|curve| curve_length(&metric, &curve, LengthMode::Integrated))
            .unwrap_or(f64::INFINITY)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut y: Vec<f64> = (0..budget.knots)
        .map(|_| budget.start_amplitude * half * rng.gen_range(-1.0..1.0))
        .collect();
    let mut step = 0.2 * half;
    for _ in 0..=budget.restarts {
        y = nelder_mead::minimize(length, &y, step, budget.max_iters, 1e-15).x;
        step *= 0.3;
    }
    let curve = profile_curve(c, &y, budget.samples_per_knot)?;
    let value = curve_length(&metric, &curve, LengthMode::Integrated)?;
    Ok(InvariantReport { value, certificate: Certificate::Curve(curve), lower_bound: Some(lower), scale })
}

/// ℓ₁ of M = {1/√R < |z| < √R}.
pub fn l1_annulus(big_r: f64, scale: f64, budget: &L1Budget) -> Result<InvariantReport> {
    if !(big_r > 1.0 && big_r.is_finite()) {
        return Err(Error::InvalidInput(format!("R must exceed 1, got {big_r}")));
    }
    let s = big_r.sqrt();
    l1_annulus_general(1.0 / s, s, scale, budget)
}

/// Largest relative deviation |(|z|/c) − 1| of a curve from |z| = c,
/// scaled to M.
pub fn max_radial_deviation(curve: &SampledCurve, center_radius: f64) -> f64 {
    curve.points().iter().map(|p| (p.coords()[0].norm() / center_radius - 1.0).abs()).fold(0.0, f64::max)
}

/// The real sphere S^k ⊂ ℝᵏ⁺¹ ⊂ ℂᵏ⁺¹ scaled by s, at the standard mesh
/// density.
pub fn core_sphere_mesh(k: usize, mesh_density: usize, s: f64) -> Result<SphereMeshMap> {
    SphereMeshMap::standard(k, mesh_density)?.with_map(|x| x.iter().map(|t| C64::new(s * t, 0.0)).collect())
}

/// Default mesh density for tube bounds: segments for k = 1,
/// icosphere subdivisions for k = 2.
pub fn default_tube_density(k: usize) -> usize {
    if k == 1 {
        64
    } else {
        2
    }
}

/// Estimator budget for tube bounds: one restart and 32 boundary angles
/// per sample circle, with the light degree and iteration counts.
pub fn tube_budget() -> OptimizerBudget {
    OptimizerBudget { restarts: 1, boundary_angles: 32, ..OptimizerBudget::light() }
}

/// Kobayashi metric on a sphere tube with the budget used for tube bounds.
pub fn tube_metric(d: &Domain) -> Result<LengthMetric> {
    LengthMetric::kobayashi(d).with_budget(tube_budget())
}

/// Upper bound on ℓ_k(T_r), T_r the r-tube about the real Sᵏ: the
/// Hausdorff–Kobayashi measure of the core-sphere inclusion and, with
/// `shrink_search`, of radially rescaled core spheres.
pub fn lk_tube_upper(k: usize, r: f64, mesh_density: usize, shrink_search: bool) -> Result<InvariantReport> {
    if k != 1 && k != 2 {
        return Err(Error::InvalidInput(format!("k must be 1 or 2, got {k}")));
    }
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::InvalidInput(format!("tube radius must lie in (0, 1/2), got {r}")));
    }
    let d = Domain::tube_sphere(k, r)?;
    let metric = tube_metric(&d)?;
    let mut scales = vec![1.0];
    if shrink_search {
        scales.extend([1.0 - 0.5 * r, 1.0 - 0.25 * r, 1.0 + 0.25 * r]);
    }
    let mut best: Option<(f64, SphereMeshMap)> = None;
    for s in scales {
        let mesh = core_sphere_mesh(k, mesh_density, s)?;
        let v = sphere_map_measure_upper_with(&metric, &mesh)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, mesh));
        }
    }
    let (value, mesh) = best.expect("at least one candidate");
    Ok(InvariantReport { value, certificate: Certificate::Mesh(mesh), lower_bound: None, scale: 1.0 })
}

/// Upper bound on V^k_r from a candidate of nonzero degree.
pub fn vk_tube_upper(k: usize, r: f64, candidate: &SphereMeshMap) -> Result<f64> {
    if candidate.k() != k {
        return Err(Error::InvalidInput(format!("candidate is a map of S^{}, expected S^{k}", candidate.k())));
    }
    let d = Domain::tube_sphere(k, r)?;
    if sphere_degree(candidate, SphereProjection::RealPart)? == 0 {
        return Err(Error::ZeroDegree);
    }
    sphere_map_measure_upper_with(&tube_metric(&d)?, candidate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomotopyVerdict {
    /// The moduli force every holomorphic map to be homotopically trivial.
    TrivialForced,
    NotForced,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: HomotopyVerdict,
    /// Winding about 0 of the image of the middle circle.
    pub winding: i64,
    pub source_modulus: f64,
    pub target_modulus: f64,
}

fn annulus_radii(d: &Domain) -> Result<(f64, f64)> {
    match d.kind() {
        DomainKind::Annulus { inner, outer } => Ok((*inner, *outer)),
        _ => Err(Error::InvalidInput("expected an annulus".into())),
    }
}

/// Verdict of the modulus comparison for f: A(a₁,b₁) → A(a₂,b₂), cross-checked
/// against the measured winding of f on the middle circle.
pub fn annulus_map_homotopy_verdict(
    f: &PolyMap,
    source: &Domain,
    target: &Domain,
    samples: usize,
) -> Result<VerdictReport> {
    let (a1, b1) = annulus_radii(source)?;
    let (a2, b2) = annulus_radii(target)?;
    check_map_dims(f, source, target)?;
    if samples < 8 {
        return Err(Error::InvalidInput("need at least 8 samples per circle".into()));
    }
    let rings = 9;
    let mut pts = Vec::with_capacity(rings * samples);
    for i in 1..=rings {
        let rad = a1 * (b1 / a1).powf(i as f64 / (rings + 1) as f64);
        for j in 0..samples {
            pts.push(CPoint::from_vec_unchecked(vec![C64::from_polar(rad, TAU * j as f64 / samples as f64)]));
        }
    }
    check_maps_into(f, &pts, target)?;
    let mid = (a1 * b1).sqrt();
    let image = SampledCurve::from_fn(0.0, TAU, samples.max(64), true, |t| f.eval(&[C64::from_polar(mid, t)]))?;
    let winding = winding_number(&image, C64::new(0.0, 0.0), 0)?;
    let (m1, m2) = (b1 / a1, b2 / a2);
    let verdict = if m1 > m2 { HomotopyVerdict::TrivialForced } else { HomotopyVerdict::NotForced };
    if verdict == HomotopyVerdict::TrivialForced && winding != 0 {
        return Err(Error::InconsistentVerdict(format!(
            "moduli {m1} > {m2} force a trivial map but the winding is {winding}"
        )));
    }
    Ok(VerdictReport { verdict, winding, source_modulus: m1, target_modulus: m2 })
}

/// A random closed polyline in M = {1/√R < |z| < √R} winding w times
/// about 0, with every chord inside M.
pub fn random_winding_polyline(big_r: f64, w: i32, segments: usize, rng: &mut impl Rng) -> Result<SampledCurve> {
    let d = Domain::annulus_m(big_r)?;
    let half = 0.5 * big_r.ln();
    loop {
        let modes = 4;
        let coeffs: Vec<(f64, f64)> = (0..modes)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let amp = rng.gen_range(0.0..0.9) * half / modes as f64;
        let base = rng.gen_range(-0.5..0.5) * half;
        let wobble = rng.gen_range(0.0..0.8);
        let phase = rng.gen_range(0.0..TAU);
        let curve = SampledCurve::from_fn(0.0, TAU, segments, true, |t| {
            let y = base
                + amp * coeffs.iter().enumerate().map(|(m, (a, b))| a * ((m + 1) as f64 * t).cos() + b * ((m + 1) as f64 * t).sin()).sum::<f64>();
            // angle advances w turns, non-monotonically when wobble is large
            let theta = w as f64 * t + wobble * (t + phase).sin();
            vec![C64::from_polar(y.exp(), theta)]
        })?;
        let pts = curve.points();
        let inside = curve.check_inside(&d).is_ok()
            && pts.windows(2).all(|p| {
                let dir = vec![p[1].coords()[0] - p[0].coords()[0]];
                d.ray_exit(p[0].coords(), &dir) >= 1.0
            });
        if inside {
            return Ok(curve);
        }
    }
}

/// π²/ln R, the canonical (scale 2) length of the core circle of M.
pub fn core_circle_length(big_r: f64) -> f64 {
    PI * PI / big_r.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymap::Term;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn poly1(terms: &[(u32, C64)]) -> PolyMap {
        PolyMap::new(1, 1, terms.iter().map(|&(e, z)| Term { idx: vec![e], coef: vec![z] }).collect()).unwrap()
    }

    #[test]
    fn winding_examples() {
        let once = SampledCurve::circle(c(0.0, 0.0), 1.0, 64, 1).unwrap();
        assert_eq!(winding_number(&once, c(0.0, 0.0), 0).unwrap(), 1);
        let twice = SampledCurve::circle(c(0.0, 0.0), 1.0, 64, 2).unwrap();
        assert_eq!(winding_number(&twice, c(0.0, 0.0), 0).unwrap(), 2);
        let away = SampledCurve::circle(c(3.0, 0.0), 0.5, 64, 1).unwrap();
        assert_eq!(winding_number(&away, c(0.0, 0.0), 0).unwrap(), 0);
        let open = SampledCurve::segment(&CPoint::real(&[1.0]).unwrap(), &CPoint::real(&[2.0]).unwrap(), 3).unwrap();
        assert!(winding_number(&open, c(0.0, 0.0), 0).is_err());
        assert!(matches!(winding_number(&once, c(1.0, 0.0), 0), Err(Error::ProjectionUndefined(0))));
    }

    #[test]
    fn sphere_degree_examples() {
        let id = SphereMeshMap::icosphere(2).unwrap();
        assert_eq!(sphere_degree(&id, SphereProjection::RealPart).unwrap(), 1);
        let anti = id.map_images(|z| z.iter().map(|x| -x).collect()).unwrap();
        assert_eq!(sphere_degree(&anti, SphereProjection::RealPart).unwrap(), -1);
        let constant = id.with_map(|_| vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(sphere_degree(&constant, SphereProjection::RealPart).unwrap(), 0);
        let hole = id.with_map(|_| vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(sphere_degree(&hole, SphereProjection::RealPart), Err(Error::ProjectionUndefined(_))));

        let circle = SphereMeshMap::circle(40).unwrap();
        assert_eq!(sphere_degree(&circle, SphereProjection::RealPart).unwrap(), 1);
        let wrap3 = circle
            .with_map(|x| {
                let z = c(x[0], x[1]).powu(3);
                vec![z, c(0.0, 0.0)]
            })
            .unwrap();
        assert_eq!(sphere_degree(&wrap3, SphereProjection::FirstCoordinate).unwrap(), 3);
    }

    #[test]
    fn degree_of_antipodal_map_matches_refined_solid_angle_sum() {
        // oracle: the solid-angle total of the reflected mesh, computed at
        // a finer resolution, divided by the parameter total
        for s in [1, 3] {
            let id = SphereMeshMap::icosphere(s).unwrap();
            let anti = id.map_images(|z| z.iter().map(|x| -x).collect()).unwrap();
            assert_eq!(sphere_degree(&anti, SphereProjection::RealPart).unwrap(), -1);
        }
        // one reflection also reverses orientation
        let id = SphereMeshMap::icosphere(2).unwrap();
        let flip = id.map_images(|z| vec![-z[0], z[1], z[2]]).unwrap();
        assert_eq!(sphere_degree(&flip, SphereProjection::RealPart).unwrap(), -1);
    }

    #[test]
    fn degree_is_multiplicative_under_composition() {
        // maps z ↦ zᵃ of S¹ compose to z ↦ z^{ab}
        let circle = SphereMeshMap::circle(120).unwrap();
        for (a, b) in [(2i32, 3i32), (-1, 2), (3, -2), (0, 4)] {
            let pw = |z: C64, e: i32| if e >= 0 { z.powu(e as u32) } else { z.inv().powu((-e) as u32) };
            let g = circle.with_map(|x| vec![pw(c(x[0], x[1]), b), c(0.0, 0.0)]).unwrap();
            let fg = g.map_images(|z| vec![pw(z[0], a), c(0.0, 0.0)]).unwrap();
            let dg = sphere_degree(&g, SphereProjection::FirstCoordinate).unwrap();
            let dfg = sphere_degree(&fg, SphereProjection::FirstCoordinate).unwrap();
            assert_eq!(dg, b as i64);
            assert_eq!(dfg, (a * b) as i64);
        }
        // S²: a reflection composed with the antipodal map has degree (−1)(−1)
        let id = SphereMeshMap::icosphere(2).unwrap();
        let both = id.map_images(|z| vec![z[0], -z[1], z[2]]).unwrap().map_images(|z| z.iter().map(|x| -x).collect()).unwrap();
        assert_eq!(sphere_degree(&both, SphereProjection::RealPart).unwrap(), 1);
    }

    #[test]
    fn tube_degree_examples() {
        let t03 = Domain::tube_circle(2, 0.3).unwrap();
        assert_eq!(tube_map_degree(&PolyMap::identity(2).unwrap(), &t03, &t03, 64).unwrap(), 1);
        let constant = PolyMap::constant(2, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(tube_map_degree(&constant, &t03, &t03, 64).unwrap(), 0);
        let sq = PolyMap::new(2, 2, vec![Term { idx: vec![2, 0], coef: vec![c(1.0, 0.0), c(0.0, 0.0)] }]).unwrap();
        let (t01, t05) = (Domain::tube_circle(2, 0.1).unwrap(), Domain::tube_circle(2, 0.5).unwrap());
        assert_eq!(tube_map_degree(&sq, &t01, &t05, 64).unwrap(), 2);
        // z₁² leaves the thin tube: |z₁| = 1.29 ⇒ |z₁²| ≈ 1.66
        assert!(matches!(tube_map_degree(&sq, &t03, &t03, 64), Err(Error::ContainmentViolation { .. })));
    }

    #[test]
    fn tube_degree_is_multiplicative() {
        let t = Domain::tube_circle(2, 0.1).unwrap();
        let big = Domain::tube_circle(2, 0.9).unwrap();
        let sq = PolyMap::new(2, 2, vec![Term { idx: vec![2, 0], coef: vec![c(1.0, 0.0), c(0.0, 0.0)] }]).unwrap();
        let cube = PolyMap::new(2, 2, vec![Term { idx: vec![3, 0], coef: vec![c(1.0, 0.0), c(0.0, 0.0)] }]).unwrap();
        let comp = cube.compose(&sq).unwrap();
        // the composite of degrees 3 and 2 needs a target that holds |z₁|⁶ on the source
        let wide = Domain::tube_circle(2, 0.95).unwrap();
        let d_sq = tube_map_degree(&sq, &t, &big, 64).unwrap();
        let d_cube = tube_map_degree(&cube, &Domain::tube_circle(2, 0.05).unwrap(), &big, 64).unwrap();
        let d_comp = tube_map_degree(&comp, &Domain::tube_circle(2, 0.02).unwrap(), &wide, 64).unwrap();
        assert_eq!(d_comp, d_sq * d_cube);
    }

    #[test]
    fn annulus_verdicts() {
        let a110 = Domain::annulus(1.0, 10.0).unwrap();
        let a12 = Domain::annulus(1.0, 2.0).unwrap();
        let a14 = Domain::annulus(1.0, 4.0).unwrap();
        let f = poly1(&[(0, c(1.5, 0.0)), (1, c(0.04, 0.0))]);
        let r = annulus_map_homotopy_verdict(&f, &a110, &a12, 64).unwrap();
        assert_eq!((r.verdict, r.winding), (HomotopyVerdict::TrivialForced, 0));
        let id = poly1(&[(1, c(1.0, 0.0))]);
        let r = annulus_map_homotopy_verdict(&id, &a12, &a14, 64).unwrap();
        assert_eq!((r.verdict, r.winding), (HomotopyVerdict::NotForced, 1));
        let sq = poly1(&[(2, c(1.0, 0.0))]);
        assert!(matches!(
            annulus_map_homotopy_verdict(&sq, &a14, &a14, 64),
            Err(Error::ContainmentViolation { .. })
        ));
    }

    #[test]
    fn l1_recovers_core_circle() {
        let e = std::f64::consts::E;
        let r = l1_annulus(e, 2.0, &L1Budget::default()).unwrap();
        let want = PI * PI;
        assert!((r.value - want).abs() < 0.01 * want, "{}", r.value);
        assert!(r.value >= r.lower_bound.unwrap() * (1.0 - 1e-9));
        let Certificate::Curve(curve) = &r.certificate else { panic!("curve certificate") };
        assert!(max_radial_deviation(curve, 1.0) < 0.05 * (e.sqrt() - 1.0 / e.sqrt()));
        assert!(l1_annulus(1.0, 2.0, &L1Budget::default()).is_err());
    }

    #[test]
    fn l1_decreases_under_inclusion() {
        let budget = L1Budget { max_iters: 1500, restarts: 1, ..L1Budget::default() };
        let small = l1_annulus(2.0, 2.0, &budget).unwrap().value;
        let large = l1_annulus(4.0, 2.0, &budget).unwrap().value;
        assert!(core_circle_length(4.0) <= core_circle_length(2.0));
        assert!(large <= small, "{large} > {small}");
    }

    #[test]
    fn tube_bounds_decrease_in_radius() {
        let thin = lk_tube_upper(1, 0.2, 48, false).unwrap().value;
        let thick = lk_tube_upper(1, 0.3, 48, false).unwrap().value;
        assert!(thin.is_finite() && thick > 0.0 && thin > thick, "{thin} vs {thick}");
    }

    #[test]
    fn vk_bounds() {
        let r = 0.25;
        let core = core_sphere_mesh(1, 48, 1.0).unwrap();
        let lk = lk_tube_upper(1, r, 48, false).unwrap().value;
        assert_eq!(vk_tube_upper(1, r, &core).unwrap(), lk);
        let wrap2 = SphereMeshMap::circle(48)
            .unwrap()
            .with_map(|x| {
                let z = c(x[0], x[1]).powu(2);
                vec![c(z.re, 0.0), c(z.im, 0.0)]
            })
            .unwrap();
        assert_eq!(sphere_degree(&wrap2, SphereProjection::RealPart).unwrap(), 2);
        let v2 = vk_tube_upper(1, r, &wrap2).unwrap();
        assert!(v2 >= lk && v2 > 0.0);
        let flat = core.with_map(|_| vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(vk_tube_upper(1, r, &flat), Err(Error::ZeroDegree)));
    }

    #[test]
    fn certificate_csv_has_one_row_per_point() {
        let curve = SampledCurve::circle(c(0.0, 0.0), 1.0, 8, 1).unwrap();
        let text = Certificate::Curve(curve).to_csv().unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("index,re1,im1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn winding_loops_are_longer_than_w_core_circles(seed in any::<u64>(), w in 1i32..4) {
            let e = std::f64::consts::E;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let curve = random_winding_polyline(e, w, 400, &mut rng).unwrap();
            prop_assert_eq!(winding_number(&curve, c(0.0, 0.0), 0).unwrap(), w as i64);
            let m = Domain::annulus_m(e).unwrap();
            let metric = LengthMetric::kobayashi(&m).with_scale(2.0).unwrap();
            let len = curve_length(&metric, &curve, LengthMode::Integrated).unwrap();
            prop_assert!(len >= 0.99 * w as f64 * PI * PI, "{} < {}", len, w as f64 * PI * PI);
        }
    }
}
