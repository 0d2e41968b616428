//! Points, tangent vectors, bounded domains and sampled curves in ℂⁿ.
//!
//! Every domain carries an exact (or, for user-supplied domains, a
//! conservative) signed distance: positive inside, equal to the Euclidean
//! distance to the complement there, and negative outside. Membership,
//! distance to the complement, ray exits and separations are all derived
//! from it.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    norm_sq(v).sqrt()
}

pub(crate) fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Hermitian inner product ⟨a, b⟩ = Σ aᵢ·conj(bᵢ).
pub(crate) fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// A point of ℂⁿ with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CPoint(Vec<C64>);

impl CPoint {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("a point needs at least one coordinate".into()));
        }
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("point coordinates must be finite".into()));
        }
        Ok(CPoint(coords))
    }

    /// Point with real coordinates.
    pub fn real(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn origin(n: usize) -> Self {
        CPoint(vec![C64::new(0.0, 0.0); n.max(1)])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<C64>) -> Self {
        CPoint(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &CPoint) -> f64 {
        dist(&self.0, &other.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Serialize for CPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<C64>::deserialize(d)?;
        CPoint::new(coords).map_err(serde::de::Error::custom)
    }
}

/// A tangent vector with its Euclidean norm cached.
#[derive(Clone, Debug, PartialEq)]
pub struct TVector {
    comps: Vec<C64>,
    euclid_norm: f64,
}

impl TVector {
    pub fn new(comps: Vec<C64>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::InvalidInput("a vector needs at least one component".into()));
        }
        if comps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("vector components must be finite".into()));
        }
        let euclid_norm = norm(&comps);
        Ok(TVector { comps, euclid_norm })
    }

    pub fn real(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[C64] {
        &self.comps
    }

    pub fn norm(&self) -> f64 {
        self.euclid_norm
    }

    pub fn scaled(&self, lambda: C64) -> TVector {
        let comps: Vec<C64> = self.comps.iter().map(|z| z * lambda).collect();
        let euclid_norm = norm(&comps);
        TVector { comps, euclid_norm }
    }
}

impl Serialize for TVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.comps.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let comps = Vec::<C64>::deserialize(d)?;
        TVector::new(comps).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned box in the real coordinates (re z₁, im z₁, re z₂, …).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    pub fn real_dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn point_at(&self, unit: &[f64]) -> Vec<C64> {
        let d = self.real_dim();
        (0..d / 2)
            .map(|i| {
                let re = self.lo[2 * i] + unit[2 * i] * (self.hi[2 * i] - self.lo[2 * i]);
                let im = self.lo[2 * i + 1] + unit[2 * i + 1] * (self.hi[2 * i + 1] - self.lo[2 * i + 1]);
                C64::new(re, im)
            })
            .collect()
    }
}

pub type SignedDistanceFn = Arc<dyn Fn(&[C64]) -> f64 + Send + Sync>;

/// A bounded domain given only through a signed distance field.
///
/// The field must be positive exactly on the domain, 1-Lipschitz, and its
/// positive part must not exceed the true distance to the complement.
#[derive(Clone)]
pub struct GenericDomain {
    pub n: usize,
    pub bbox: BBox,
    pub sdf: SignedDistanceFn,
}

impl fmt::Debug for GenericDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericDomain")
            .field("n", &self.n)
            .field("bbox", &self.bbox)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum DomainKind {
    Disc { center: C64, radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Ball { n: usize, center: CPoint, radius: f64 },
    Polydisc { radii: Vec<f64> },
    /// Euclidean tube of radius r about the circle {(e^{iθ}, 0, …, 0)} ⊂ ℂⁿ.
    TubeCircle { n: usize, r: f64 },
    /// Euclidean tube of radius r about the real unit sphere Sᵏ ⊂ ℝᵏ⁺¹ ⊂ ℂᵏ⁺¹.
    TubeSphere { k: usize, r: f64 },
    Generic(GenericDomain),
}

/// A validated bounded open set in ℂⁿ.
#[derive(Clone, Debug)]
pub struct Domain {
    kind: DomainKind,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("{name} must be positive and finite, got {x}")))
    }
}

impl Domain {
    pub fn disc(center: C64, radius: f64) -> Result<Self> {
        positive("disc radius", radius)?;
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::InvalidDomain("disc center must be finite".into()));
        }
        Ok(Domain { kind: DomainKind::Disc { center, radius } })
    }

    pub fn unit_disc() -> Self {
        Domain { kind: DomainKind::Disc { center: C64::new(0.0, 0.0), radius: 1.0 } }
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        positive("annulus inner radius", inner)?;
        positive("annulus outer radius", outer)?;
        if outer <= inner {
            return Err(Error::InvalidDomain(format!(
                "annulus needs outer > inner, got {inner} and {outer}"
            )));
        }
        Ok(Domain { kind: DomainKind::Annulus { inner, outer } })
    }

    /// The symmetric annulus M = {1/√R < |z| < √R}.
    pub fn annulus_m(big_r: f64) -> Result<Self> {
        if !(big_r.is_finite() && big_r > 1.0) {
            return Err(Error::InvalidDomain(format!("R must exceed 1, got {big_r}")));
        }
        let s = big_r.sqrt();
        Self::annulus(1.0 / s, s)
    }

    pub fn ball(center: CPoint, radius: f64) -> Result<Self> {
        positive("ball radius", radius)?;
        let n = center.dim();
        Ok(Domain { kind: DomainKind::Ball { n, center, radius } })
    }

    pub fn centered_ball(n: usize, radius: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDomain("ball dimension must be at least 1".into()));
        }
        Self::ball(CPoint::origin(n), radius)
    }

    pub fn polydisc(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidDomain("polydisc needs at least one radius".into()));
        }
        for &r in &radii {
            positive("polydisc radius", r)?;
        }
        Ok(Domain { kind: DomainKind::Polydisc { radii } })
    }

    pub fn tube_circle(n: usize, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDomain("tube dimension must be at least 1".into()));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidDomain(format!("circle tube radius must lie in (0,1), got {r}")));
        }
        Ok(Domain { kind: DomainKind::TubeCircle { n, r } })
    }

    pub fn tube_sphere(k: usize, r: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDomain("sphere tube needs k ≥ 1".into()));
        }
        if !(r > 0.0 && r < 0.5) {
            return Err(Error::InvalidDomain(format!("sphere tube radius must lie in (0,1/2), got {r}")));
        }
        Ok(Domain { kind: DomainKind::TubeSphere { k, r } })
    }

    pub fn generic(n: usize, bbox: BBox, sdf: SignedDistanceFn) -> Result<Self> {
        if n == 0 || bbox.lo.len() != 2 * n || bbox.hi.len() != 2 * n {
            return Err(Error::InvalidDomain("bounding box must have 2n real coordinates".into()));
        }
        if bbox.lo.iter().zip(&bbox.hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidDomain("bounding box must be nondegenerate".into()));
        }
        Ok(Domain { kind: DomainKind::Generic(GenericDomain { n, bbox, sdf }) })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DomainKind::Disc { .. } => "disc",
            DomainKind::Annulus { .. } => "annulus",
            DomainKind::Ball { .. } => "ball",
            DomainKind::Polydisc { .. } => "polydisc",
            DomainKind::TubeCircle { .. } => "tube_circle",
            DomainKind::TubeSphere { .. } => "tube_sphere",
            DomainKind::Generic(_) => "generic",
        }
    }

    /// Complex dimension of the ambient space.
    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Disc { .. } | DomainKind::Annulus { .. } => 1,
            DomainKind::Ball { n, .. } | DomainKind::TubeCircle { n, .. } => *n,
            DomainKind::Polydisc { radii } => radii.len(),
            DomainKind::TubeSphere { k, .. } => k + 1,
            DomainKind::Generic(g) => g.n,
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(
            self.kind,
            DomainKind::Disc { .. } | DomainKind::Ball { .. } | DomainKind::Polydisc { .. }
        )
    }

    pub fn check_dim(&self, got: usize) -> Result<()> {
        let expected = self.dim();
        if got == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }

    /// Signed Euclidean distance to the boundary (positive inside). The
    /// caller guarantees the dimension.
    pub(crate) fn sdf(&self, p: &[C64]) -> f64 {
        match &self.kind {
            DomainKind::Disc { center, radius } => radius - (p[0] - center).norm(),
            DomainKind::Annulus { inner, outer } => {
                let r = p[0].norm();
                (r - inner).min(outer - r)
            }
            DomainKind::Ball { center, radius, .. } => radius - dist(p, center.coords()),
            DomainKind::Polydisc { radii } => {
                let mut inside = f64::INFINITY;
                let mut outside = 0.0;
                for (z, r) in p.iter().zip(radii) {
                    let gap = r - z.norm();
                    inside = inside.min(gap);
                    if gap < 0.0 {
                        outside += gap * gap;
                    }
                }
                if inside > 0.0 {
                    inside
                } else if outside > 0.0 {
                    -outside.sqrt()
                } else {
                    0.0
                }
            }
            DomainKind::TubeCircle { r, .. } => r - circle_core_distance(p),
            DomainKind::TubeSphere { r, .. } => r - sphere_core_distance(p),
            DomainKind::Generic(g) => (g.sdf)(p),
        }
    }

    pub(crate) fn contains_raw(&self, p: &[C64]) -> bool {
        self.sdf(p) > 0.0
    }

    pub fn bbox(&self) -> BBox {
        match &self.kind {
            DomainKind::Disc { center, radius } => BBox {
                lo: vec![center.re - radius, center.im - radius],
                hi: vec![center.re + radius, center.im + radius],
            },
            DomainKind::Annulus { outer, .. } => BBox { lo: vec![-outer; 2], hi: vec![*outer; 2] },
            DomainKind::Ball { center, radius, .. } => {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for z in center.coords() {
                    lo.extend([z.re - radius, z.im - radius]);
                    hi.extend([z.re + radius, z.im + radius]);
                }
                BBox { lo, hi }
            }
            DomainKind::Polydisc { radii } => BBox {
                lo: radii.iter().flat_map(|r| [-r, -r]).collect(),
                hi: radii.iter().flat_map(|r| [*r, *r]).collect(),
            },
            DomainKind::TubeCircle { n, r } => {
                let mut lo = vec![-(1.0 + r); 2];
                let mut hi = vec![1.0 + r; 2];
                for _ in 1..*n {
                    lo.extend([-r, -r]);
                    hi.extend([*r, *r]);
                }
                BBox { lo, hi }
            }
            DomainKind::TubeSphere { k, r } => {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for _ in 0..=*k {
                    lo.extend([-(1.0 + r), -r]);
                    hi.extend([1.0 + r, *r]);
                }
                BBox { lo, hi }
            }
            DomainKind::Generic(g) => g.bbox.clone(),
        }
    }

    /// Shrinks the domain to {p : dist(p, complement) > delta}.
    pub fn eroded(&self, delta: f64) -> Result<Domain> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidInput(format!("erosion amount must be nonnegative, got {delta}")));
        }
        match &self.kind {
            DomainKind::Disc { center, radius } => Domain::disc(*center, radius - delta),
            DomainKind::Annulus { inner, outer } => Domain::annulus(inner + delta, outer - delta),
            DomainKind::Ball { center, radius, .. } => Domain::ball(center.clone(), radius - delta),
            DomainKind::Polydisc { radii } => Domain::polydisc(radii.iter().map(|r| r - delta).collect()),
            DomainKind::TubeCircle { n, r } => Domain::tube_circle(*n, r - delta),
            DomainKind::TubeSphere { k, r } => Domain::tube_sphere(*k, r - delta),
            DomainKind::Generic(g) => {
                let inner = g.sdf.clone();
                Domain::generic(g.n, g.bbox.clone(), Arc::new(move |p: &[C64]| inner(p) - delta))
            }
        }
    }

    /// The open delta-neighbourhood {p : dist(p, self) < delta}. Kinds
    /// not closed under this operation become Generic.
    pub fn inflated(&self, delta: f64) -> Result<Domain> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("inflation amount must be positive, got {delta}")));
        }
        let exact = match &self.kind {
            DomainKind::Disc { center, radius } => Domain::disc(*center, radius + delta).ok(),
            DomainKind::Annulus { inner, outer } if delta < *inner => {
                Domain::annulus(inner - delta, outer + delta).ok()
            }
            DomainKind::Annulus { outer, .. } => Domain::disc(C64::new(0.0, 0.0), outer + delta).ok(),
            DomainKind::Ball { center, radius, .. } => Domain::ball(center.clone(), radius + delta).ok(),
            DomainKind::TubeCircle { n, r } => Domain::tube_circle(*n, r + delta).ok(),
            DomainKind::TubeSphere { k, r } => Domain::tube_sphere(*k, r + delta).ok(),
            _ => None,
        };
        if let Some(d) = exact {
            return Ok(d);
        }
        // sdf + delta is exact outside and a lower bound inside
        let base = self.clone();
        let mut bbox = self.bbox();
        bbox.lo.iter_mut().for_each(|x| *x -= delta);
        bbox.hi.iter_mut().for_each(|x| *x += delta);
        Domain::generic(self.dim(), bbox, Arc::new(move |p: &[C64]| base.sdf(p) + delta))
    }

    /// First t > 0 at which p + t·w leaves the domain (p interior).
    /// Returns +∞ when w = 0.
    pub(crate) fn ray_exit(&self, p: &[C64], w: &[C64]) -> f64 {
        let ww = norm_sq(w);
        if ww == 0.0 {
            return f64::INFINITY;
        }
        match &self.kind {
            DomainKind::Disc { center, radius } => {
                circle_exit(p[0] - center, w[0], *radius)
            }
            DomainKind::Ball { center, radius, .. } => {
                let q: Vec<C64> = p.iter().zip(center.coords()).map(|(a, c)| a - c).collect();
                sphere_exit(&q, w, *radius)
            }
            DomainKind::Polydisc { radii } => p
                .iter()
                .zip(w)
                .zip(radii)
                .map(|((pi, wi), r)| {
                    if wi.norm_sqr() == 0.0 {
                        f64::INFINITY
                    } else {
                        circle_exit(*pi, *wi, *r)
                    }
                })
                .fold(f64::INFINITY, f64::min),
            DomainKind::Annulus { inner, outer } => {
                let out = circle_exit(p[0], w[0], *outer);
                // first entry into the closed inner disc
                let a = w[0].norm_sqr();
                let b = (p[0].conj() * w[0]).re;
                let c = p[0].norm_sqr() - inner * inner;
                let disc = b * b - a * c;
                let hole = if disc < 0.0 {
                    f64::INFINITY
                } else {
                    let t = (-b - disc.sqrt()) / a;
                    if t > 0.0 {
                        t
                    } else {
                        f64::INFINITY
                    }
                };
                out.min(hole)
            }
            _ => self.trace_exit(p, w, ww.sqrt()),
        }
    }

    /// Sphere tracing on the signed distance. When the steps stall (shallow
    /// incidence) a secant jump is tried, and a bracketed crossing is
    /// refined by Illinois regula falsi; the returned t is always inside.
    fn trace_exit(&self, p: &[C64], w: &[C64], wn: f64) -> f64 {
        let scale = self.bbox().diameter();
        let tol = 1e-12 * scale;
        let mut x = p.to_vec();
        let mut sdf_at = |t: f64| {
            for ((xi, pi), wi) in x.iter_mut().zip(p).zip(w) {
                *xi = pi + wi * t;
            }
            self.sdf(&x)
        };
        let (mut t, mut s) = (0.0, sdf_at(0.0));
        let mut prev: Option<(f64, f64)> = None;
        for _ in 0..400 {
            if s <= tol {
                return t;
            }
            if t * wn > 4.0 * scale {
                return t;
            }
            let step = s / wn;
            if let Some((tp, sp)) = prev {
                if sp > s && s > 0.3 * sp {
                    let jump = (s * (t - tp) / (sp - s)).min(64.0 * step);
                    if jump > step {
                        let sj = sdf_at(t + jump);
                        if sj < 0.0 {
                            return illinois(&mut sdf_at, t, s, t + jump, sj, tol / wn);
                        }
                        prev = Some((t, s));
                        t += jump;
                        s = sj;
                        continue;
                    }
                }
            }
            prev = Some((t, s));
            t += step;
            s = sdf_at(t);
        }
        t
    }
}

/// Shrinks a bracket [a, b] with f(a) > 0 > f(b) and returns its inner end.
fn illinois(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> f64 {
    let mut side = 0;
    for _ in 0..100 {
        if b - a <= tol {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let fc = f(c);
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    a
}

/// Positive root of |q + t w| = R for |q| < R.
fn circle_exit(q: C64, w: C64, radius: f64) -> f64 {
    let a = w.norm_sqr();
    let b = (q.conj() * w).re;
    let c = q.norm_sqr() - radius * radius;
    let disc = (b * b - a * c).max(0.0);
    if b >= 0.0 {
        // c < 0 for interior q; stable form avoids cancellation
        -c / (b + disc.sqrt())
    } else {
        (-b + disc.sqrt()) / a
    }
}

fn sphere_exit(q: &[C64], w: &[C64], radius: f64) -> f64 {
    let a = norm_sq(w);
    let b = hdot(w, q).re;
    let c = norm_sq(q) - radius * radius;
    let disc = (b * b - a * c).max(0.0);
    if b >= 0.0 {
        -c / (b + disc.sqrt())
    } else {
        (-b + disc.sqrt()) / a
    }
}

/// Euclidean distance from p ∈ ℂⁿ to the circle {(e^{iθ}, 0, …, 0)}.
pub(crate) fn circle_core_distance(p: &[C64]) -> f64 {
    let radial = p[0].norm() - 1.0;
    let rest: f64 = p[1..].iter().map(|z| z.norm_sqr()).sum();
    (radial * radial + rest).sqrt()
}

/// Euclidean distance from p ∈ ℂᵏ⁺¹ to the real unit sphere. Writing
/// p = a + ib, the nearest sphere point is a/|a|.
pub(crate) fn sphere_core_distance(p: &[C64]) -> f64 {
    let a: f64 = p.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let b: f64 = p.iter().map(|z| z.im * z.im).sum();
    ((a - 1.0).powi(2) + b).sqrt()
}

/// Nearest point of the real unit sphere, or None when Re p = 0.
pub fn sphere_projection(p: &[C64]) -> Option<Vec<f64>> {
    let a: f64 = p.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    if a < 1e-300 {
        None
    } else {
        Some(p.iter().map(|z| z.re / a).collect())
    }
}

pub fn membership(d: &Domain, p: &CPoint) -> Result<bool> {
    d.check_dim(p.dim())?;
    Ok(d.contains_raw(p.coords()))
}

pub fn dist_to_complement(d: &Domain, p: &CPoint) -> Result<f64> {
    d.check_dim(p.dim())?;
    let s = d.sdf(p.coords());
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::NotInDomain)
    }
}

/// Euclidean distance between cl(inner) and the complement of outer.
///
/// Exact for concentric pairs of the same closed-form kind. Otherwise a
/// conservative lattice estimate on the inner bounding box: every lattice
/// point within the covering radius ρ of cl(inner) contributes
/// sdf_outer − ρ, which bounds the true separation from below. The lattice
/// is refined until the estimate moves by less than 1%.
pub fn domain_separation(inner: &Domain, outer: &Domain) -> Result<f64> {
    if inner.dim() != outer.dim() {
        return Err(Error::DimensionMismatch { expected: outer.dim(), got: inner.dim() });
    }
    let exact = match (inner.kind(), outer.kind()) {
        (
            DomainKind::Disc { center: c1, radius: r1 },
            DomainKind::Disc { center: c2, radius: r2 },
        ) => Some(r2 - r1 - (c1 - c2).norm()),
        (
            DomainKind::Ball { center: c1, radius: r1, .. },
            DomainKind::Ball { center: c2, radius: r2, .. },
        ) => Some(r2 - r1 - c1.distance(c2)),
        (
            DomainKind::Annulus { inner: a1, outer: b1 },
            DomainKind::Annulus { inner: a2, outer: b2 },
        ) => Some((a1 - a2).min(b2 - b1)),
        (DomainKind::Polydisc { radii: r1 }, DomainKind::Polydisc { radii: r2 }) => {
            Some(r1.iter().zip(r2).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min))
        }
        (DomainKind::TubeCircle { n: n1, r: r1 }, DomainKind::TubeCircle { n: n2, r: r2 })
            if n1 == n2 =>
        {
            Some(r2 - r1)
        }
        (DomainKind::TubeSphere { k: k1, r: r1 }, DomainKind::TubeSphere { k: k2, r: r2 })
            if k1 == k2 =>
        {
            Some(r2 - r1)
        }
        _ => None,
    };
    let delta = match exact {
        Some(d) => d,
        None => lattice_separation(inner, outer),
    };
    if delta > 0.0 && delta.is_finite() {
        Ok(delta)
    } else {
        Err(Error::NotRelativelyCompact(delta))
    }
}

fn lattice_separation(inner: &Domain, outer: &Domain) -> f64 {
    let bbox = inner.bbox();
    let d = bbox.real_dim();
    let mut per_axis: usize = match d {
        0..=2 => 32,
        3..=4 => 10,
        _ => 5,
    };
    let mut prev: Option<f64> = None;
    let mut best = f64::NEG_INFINITY;
    for _round in 0..4 {
        let total = per_axis.pow(d as u32);
        if total > 3_000_000 {
            break;
        }
        let spacing: Vec<f64> = bbox
            .lo
            .iter()
            .zip(&bbox.hi)
            .map(|(l, h)| (h - l) / (per_axis - 1) as f64)
            .collect();
        let rho = spacing.iter().map(|s| s * s).sum::<f64>().sqrt() / 2.0;
        let mut est = f64::INFINITY;
        let mut idx = vec![0usize; d];
        let mut unit = vec![0.0; d];
        for _ in 0..total {
            for (u, &i) in unit.iter_mut().zip(&idx) {
                *u = i as f64 / (per_axis - 1) as f64;
            }
            let x = bbox.point_at(&unit);
            if inner.sdf(&x) >= -rho {
                est = est.min(outer.sdf(&x) - rho);
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < per_axis {
                    break;
                }
                *slot = 0;
            }
        }
        best = est;
        if let Some(p) = prev {
            if p > 0.0 && ((est - p) / p).abs() < 0.01 {
                break;
            }
        }
        prev = Some(est);
        per_axis = 2 * per_axis - 1;
    }
    best
}

/// JSON form of the closed-form domain kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disc {
        #[serde(default)]
        center: C64,
        radius: f64,
    },
    Annulus {
        inner: f64,
        outer: f64,
    },
    Ball {
        n: usize,
        #[serde(default)]
        center: Option<Vec<C64>>,
        radius: f64,
    },
    Polydisc {
        radii: Vec<f64>,
    },
    TubeCircle {
        n: usize,
        r: f64,
    },
    TubeSphere {
        k: usize,
        r: f64,
    },
}

impl TryFrom<DomainSpec> for Domain {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Domain> {
        match spec {
            DomainSpec::Disc { center, radius } => Domain::disc(center, radius),
            DomainSpec::Annulus { inner, outer } => Domain::annulus(inner, outer),
            DomainSpec::Ball { n, center, radius } => {
                let center = match center {
                    Some(c) => {
                        if c.len() != n {
                            return Err(Error::DimensionMismatch { expected: n, got: c.len() });
                        }
                        CPoint::new(c)?
                    }
                    None => CPoint::origin(n),
                };
                Domain::ball(center, radius)
            }
            DomainSpec::Polydisc { radii } => Domain::polydisc(radii),
            DomainSpec::TubeCircle { n, r } => Domain::tube_circle(n, r),
            DomainSpec::TubeSphere { k, r } => Domain::tube_sphere(k, r),
        }
    }
}

impl Domain {
    /// JSON-representable form, or None for generic domains.
    pub fn to_spec(&self) -> Option<DomainSpec> {
        Some(match &self.kind {
            DomainKind::Disc { center, radius } => DomainSpec::Disc { center: *center, radius: *radius },
            DomainKind::Annulus { inner, outer } => DomainSpec::Annulus { inner: *inner, outer: *outer },
            DomainKind::Ball { n, center, radius } => DomainSpec::Ball {
                n: *n,
                center: Some(center.coords().to_vec()),
                radius: *radius,
            },
            DomainKind::Polydisc { radii } => DomainSpec::Polydisc { radii: radii.clone() },
            DomainKind::TubeCircle { n, r } => DomainSpec::TubeCircle { n: *n, r: *r },
            DomainKind::TubeSphere { k, r } => DomainSpec::TubeSphere { k: *k, r: *r },
            DomainKind::Generic(_) => return None,
        })
    }

    pub fn from_json(text: &str) -> Result<Domain> {
        let spec: DomainSpec = serde_json::from_str(text)?;
        Domain::try_from(spec)
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_spec() {
            Some(spec) => spec.serialize(s),
            None => Err(serde::ser::Error::custom("generic domains have no JSON form")),
        }
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = DomainSpec::deserialize(d)?;
        Domain::try_from(spec).map_err(serde::de::Error::custom)
    }
}

/// A parametrized curve stored as ordered samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    params: Vec<f64>,
    points: Vec<CPoint>,
    closed: bool,
}

impl SampledCurve {
    pub fn new(params: Vec<f64>, points: Vec<CPoint>, closed: bool) -> Result<Self> {
        if points.len() < 2 || params.len() != points.len() {
            return Err(Error::InvalidInput(
                "a curve needs at least two samples and one parameter per sample".into(),
            ));
        }
        if params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("curve parameters must be strictly increasing".into()));
        }
        let n = points[0].dim();
        if points.iter().any(|p| p.dim() != n) {
            return Err(Error::InvalidInput("curve points must share one dimension".into()));
        }
        if closed && points[0].distance(&points[points.len() - 1]) > 1e-12 {
            return Err(Error::InvalidInput("closed curve must end where it starts".into()));
        }
        Ok(SampledCurve { params, points, closed })
    }

    /// Samples t ↦ f(t) at `segments + 1` equally spaced parameters.
    pub fn from_fn(
        a: f64,
        b: f64,
        segments: usize,
        closed: bool,
        mut f: impl FnMut(f64) -> Vec<C64>,
    ) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidInput("need at least one segment".into()));
        }
        let params: Vec<f64> = (0..=segments)
            .map(|i| a + (b - a) * i as f64 / segments as f64)
            .collect();
        let mut points = params
            .iter()
            .map(|&t| CPoint::new(f(t)))
            .collect::<Result<Vec<_>>>()?;
        if closed {
            points[segments] = points[0].clone();
        }
        Self::new(params, points, closed)
    }

    /// Circle of the given radius in ℂ traversed `turns` times.
    pub fn circle(center: C64, radius: f64, segments: usize, turns: i32) -> Result<Self> {
        let tau = std::f64::consts::TAU * turns as f64;
        Self::from_fn(0.0, 1.0, segments, true, |t| {
            vec![center + C64::from_polar(radius, tau * t)]
        })
    }

    pub fn segment(a: &CPoint, b: &CPoint, segments: usize) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
        }
        Self::from_fn(0.0, 1.0, segments, false, |t| {
            a.coords().iter().zip(b.coords()).map(|(x, y)| x + (y - x) * t).collect()
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[CPoint] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Number of segments N (there are N + 1 samples).
    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn check_inside(&self, d: &Domain) -> Result<()> {
        d.check_dim(self.dim())?;
        match self.points.iter().position(|p| !d.contains_raw(p.coords())) {
            Some(i) => Err(Error::CurveExitsDomain(i)),
            None => Ok(()),
        }
    }
}
