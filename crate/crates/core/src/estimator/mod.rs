//! Upper bounds on the Kobayashi–Royden metric from explicit polynomial
//! analytic discs f(z) = p + t·(u z + Σ_{j≥2} b_j zʲ).
//!
//! For a fixed shape b the largest admissible t is found exactly along
//! rays from p (every sampled point p + s·g(z) with s ≤ t stays inside), so
//! the search maximizes a minimum of exit times. Each incumbent is then
//! certified on the whole closed disc with a Lipschitz cushion before it
//! is reported, which makes every returned value a genuine upper bound.

mod certify;
mod compare;
pub(crate) mod nelder_mead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, CPoint, Domain, DomainKind, TVector, C64};
use crate::metrics::{MetricSource, MetricValue};

pub(crate) use compare::sample_points;
pub use compare::{
    lemma_compare_bound, uniform_monotonicity_constant, MonotonicityReport, RatioSource, UniformMonotonicity,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerBudget {
    pub max_degree: usize,
    /// Starting points per degree level.
    pub restarts: usize,
    /// Simplex iterations per restart and degree level.
    pub max_iters: usize,
    pub boundary_angles: usize,
    /// Relative safety margin on the disc radius.
    pub margin: f64,
    /// Sample circles |z| = ρ used during the search.
    pub sample_radii: Vec<f64>,
    pub seed: u64,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        OptimizerBudget {
            max_degree: 6,
            restarts: 8,
            max_iters: 2000,
            boundary_angles: 256,
            margin: 1e-3,
            sample_radii: vec![0.9, 0.99, 0.999],
            seed: 0,
        }
    }
}

impl OptimizerBudget {
    pub fn with_degree(max_degree: usize) -> Self {
        OptimizerBudget { max_degree, ..Self::default() }
    }

    /// A small budget for bulk evaluation (graph weights, quadrature).
    pub fn light() -> Self {
        OptimizerBudget {
            max_degree: 3,
            restarts: 2,
            max_iters: 300,
            boundary_angles: 64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(1..=16).contains(&self.max_degree) {
            return bad(format!("max_degree must be in 1..=16, got {}", self.max_degree));
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if self.boundary_angles < 8 {
            return bad(format!("boundary_angles must be at least 8, got {}", self.boundary_angles));
        }
        if !(self.margin > 0.0 && self.margin < 0.1) {
            return bad(format!("margin must be in (0, 0.1), got {}", self.margin));
        }
        if self.sample_radii.is_empty() || self.sample_radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("sample_radii must be nonempty and within (0, 1]".into());
        }
        Ok(())
    }
}

/// f(z) = Σ a_j zʲ with a₀ = p and a₁ parallel to v.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyDiscCandidate {
    pub degree: usize,
    pub coeffs: Vec<Vec<C64>>,
    pub boundary_samples: usize,
}

impl PolyDiscCandidate {
    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn center(&self) -> &[C64] {
        &self.coeffs[0]
    }

    pub fn derivative_at_zero(&self) -> &[C64] {
        &self.coeffs[1]
    }

    pub fn eval(&self, z: C64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        eval_into(&self.coeffs, z, &mut out);
        out
    }

    /// r with f′(0) = v/r.
    pub fn radius_for(&self, v: &TVector) -> f64 {
        v.norm() / norm(&self.coeffs[1])
    }

    /// Lipschitz constant of f on the closed unit disc.
    pub fn lipschitz(&self) -> f64 {
        lipschitz(&self.coeffs)
    }
}

pub(crate) fn eval_into(coeffs: &[Vec<C64>], z: C64, out: &mut [C64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for a in coeffs.iter().rev() {
            acc = acc * z + a[i];
        }
        *o = acc;
    }
}

fn lipschitz(coeffs: &[Vec<C64>]) -> f64 {
    coeffs.iter().enumerate().skip(1).map(|(j, a)| j as f64 * norm(a)).sum()
}

/// Result of a disc search: the bound and the disc attaining it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscEstimate {
    pub value: MetricValue,
    pub candidate: PolyDiscCandidate,
}

/// The disc f(z) = p + z·(v/‖v‖)·dist(p, ∂U)·(1 − margin).
pub fn seed_affine_disc(d: &Domain, p: &CPoint, v: &TVector, margin: f64) -> Result<PolyDiscCandidate> {
    check_inputs(d, p, v)?;
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidInput(format!("margin must be in (0, 1), got {margin}")));
    }
    let t = d.sdf(p.coords()) * (1.0 - margin) / v.norm();
    Ok(PolyDiscCandidate {
        degree: 1,
        coeffs: vec![p.coords().to_vec(), v.comps().iter().map(|c| c * t).collect()],
        boundary_samples: 0,
    })
}

/// The enlargement h̃(z) = h(z) + δ·z·â₁ of an admissible disc h of U,
/// with â₁ the unit direction of h′(0). It is admissible in any domain
/// containing the δ-neighbourhood of U.
pub fn enlarge_disc(h: &PolyDiscCandidate, delta: f64) -> PolyDiscCandidate {
    let a1 = &h.coeffs[1];
    let len = norm(a1);
    let mut out = h.clone();
    for (o, a) in out.coeffs[1].iter_mut().zip(a1) {
        *o = a * ((len + delta) / len);
    }
    out
}

fn check_inputs(d: &Domain, p: &CPoint, v: &TVector) -> Result<()> {
    d.check_dim(p.dim())?;
    d.check_dim(v.dim())?;
    if !d.contains_raw(p.coords()) {
        return Err(Error::NotInDomain);
    }
    if !(v.norm() > 0.0) {
        return Err(Error::InvalidInput("tangent vector must be nonzero".into()));
    }
    Ok(())
}

/// Upper bound on F^Kob_U(p, v) from the best certified polynomial disc.
pub fn estimate_kob_royden(d: &Domain, p: &CPoint, v: &TVector, budget: &OptimizerBudget) -> Result<MetricValue> {
    Ok(estimate_disc(d, p, v, budget, &[])?.value)
}

/// As [`estimate_kob_royden`], also starting from the given discs. Seeds
/// are re-certified in `d`; those that fail only serve as starting shapes.
pub fn estimate_disc(
    d: &Domain,
    p: &CPoint,
    v: &TVector,
    budget: &OptimizerBudget,
    seeds: &[PolyDiscCandidate],
) -> Result<DiscEstimate> {
    search(d, p, v, budget, seeds, &[])
}

/// Canonical search direction: unit, with its first dominant component
/// real positive, rounded so that v and λv give bit-identical results.
fn canonical_direction(v: &[C64]) -> Vec<C64> {
    let n = norm(v);
    let unit: Vec<C64> = v.iter().map(|c| c / n).collect();
    let big = unit.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lead = unit.iter().find(|c| c.norm() >= big * (1.0 - 1e-9)).copied().unwrap_or(C64::new(1.0, 0.0));
    let phase = lead.conj() / lead.norm();
    let q = (1u64 << 40) as f64;
    let rounded: Vec<C64> = unit
        .iter()
        .map(|c| {
            let z = c * phase;
            C64::new((z.re * q).round() / q, (z.im * q).round() / q)
        })
        .collect();
    let rn = norm(&rounded);
    rounded.iter().map(|c| c / rn).collect()
}

/// A disc p + t·g(z) with g(z) = u z + Σ b_j z^{j+2}.
#[derive(Clone, Debug)]
struct Shape {
    t: f64,
    b: Vec<f64>,
}

struct Problem<'a> {
    d: &'a Domain,
    p: Vec<C64>,
    u: Vec<C64>,
    n: usize,
    zs: Vec<C64>,
    t_ref: f64,
}

impl Problem<'_> {
    fn free_len(&self, degree: usize) -> usize {
        2 * self.n * degree.saturating_sub(1)
    }

    fn coeffs(&self, degree: usize, b: &[f64], t: f64) -> Vec<Vec<C64>> {
        let n = self.n;
        let mut out = Vec::with_capacity(degree + 1);
        out.push(self.p.clone());
        out.push(self.u.iter().map(|c| c * t).collect());
        for j in 0..degree.saturating_sub(1) {
            out.push((0..n).map(|i| C64::new(b[2 * (j * n + i)], b[2 * (j * n + i) + 1]) * t).collect());
        }
        out
    }

    /// Exit times of p + s·g(z) over the sample set.
    fn exits(&self, degree: usize, b: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let n = self.n;
        let mut w = vec![C64::new(0.0, 0.0); n];
        for &z in &self.zs {
            for (i, wi) in w.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for j in (0..degree.saturating_sub(1)).rev() {
                    acc = acc * z + C64::new(b[2 * (j * n + i)], b[2 * (j * n + i) + 1]);
                }
                *wi = (acc * z + self.u[i]) * z;
            }
            out.push(self.d.ray_exit(&self.p, &w));
        }
    }

    fn t_star(&self, degree: usize, b: &[f64], buf: &mut Vec<f64>) -> f64 {
        self.exits(degree, b, buf);
        buf.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Negated soft minimum of the exit times at inverse temperature beta
    /// (relative to t_ref); beta = ∞ is the hard minimum.
    fn objective(&self, degree: usize, b: &[f64], beta: f64, buf: &mut Vec<f64>) -> f64 {
        self.exits(degree, b, buf);
        let lo = buf.iter().copied().fold(f64::INFINITY, f64::min);
        if !lo.is_finite() {
            return f64::MAX;
        }
        if beta.is_infinite() {
            return -lo;
        }
        let k = beta / self.t_ref;
        let s: f64 = buf.iter().map(|&x| (-(x - lo) * k).exp()).sum();
        -(lo - s.ln() / k)
    }

    /// Search from one start at a fixed degree; returns the best shape.
    fn anneal(&self, degree: usize, start: &[f64], iters: usize) -> Shape {
        const STAGES: [(f64, f64); 4] = [(40.0, 0.25), (400.0, 0.05), (4000.0, 0.01), (f64::INFINITY, 0.002)];
        let mut x = start.to_vec();
        let mut buf = Vec::with_capacity(self.zs.len());
        if !x.is_empty() {
            let per = (iters / STAGES.len()).max(1);
            for (beta, step) in STAGES {
                let r = nelder_mead::minimize(|y| self.objective(degree, y, beta, &mut buf), &x, step, per, 1e-12);
                x = r.x;
            }
        }
        let t = self.t_star(degree, &x, &mut buf);
        Shape { t, b: x }
    }

    /// Largest certified t ≤ shape.t, backing off geometrically.
    fn certified(&self, degree: usize, shape: &Shape, margin: f64) -> Option<f64> {
        if !(shape.t.is_finite() && shape.t > 0.0) {
            return None;
        }
        let convex = self.d.is_convex();
        (0..12).find_map(|k| {
            let t = shape.t * (1.0 - margin * (1u32 << k) as f64 / 4.0);
            let coeffs = self.coeffs(degree, &shape.b, t);
            certify::admissible(self.d, &coeffs, convex).then_some(t)
        })
    }
}

/// Largest t with the affine disc p + t·u·Δ inside the domain, for
/// kinds where it is exact.
fn affine_exact_radius(d: &Domain, p: &[C64], u: &[C64]) -> Option<f64> {
    match d.kind() {
        DomainKind::Disc { center, radius } => Some(radius - (p[0] - center).norm()),
        DomainKind::Ball { center, radius, .. } => {
            let q: Vec<C64> = p.iter().zip(center.coords()).map(|(a, c)| a - c).collect();
            let along = crate::geometry::hdot(&q, u).norm();
            let slice = (radius * radius - crate::geometry::norm_sq(&q) + along * along).max(0.0).sqrt();
            Some(slice - along)
        }
        DomainKind::Polydisc { radii } => Some(
            p.iter()
                .zip(u)
                .zip(radii)
                .filter(|(_, r)| **r > 0.0)
                .filter(|((_, ui), _)| ui.norm() > 0.0)
                .map(|((pi, ui), r)| (r - pi.norm()) / ui.norm())
                .fold(f64::INFINITY, f64::min),
        ),
        _ => None,
    }
}

fn degree_ladder(m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..).map(|i| m - 2 * i).take_while(|&k| k >= 2).collect();
    out.reverse();
    out
}

fn to_shape(u: &[C64], c: &PolyDiscCandidate, degree: usize) -> Shape {
    let n = u.len();
    let t = norm(&c.coeffs[1]);
    let mut b = vec![0.0; 2 * n * degree.saturating_sub(1)];
    for (j, a) in c.coeffs.iter().enumerate().skip(2).take(degree.saturating_sub(1)) {
        for (i, z) in a.iter().enumerate() {
            b[2 * ((j - 2) * n + i)] = z.re / t;
            b[2 * ((j - 2) * n + i) + 1] = z.im / t;
        }
    }
    Shape { t, b }
}

/// Core search. `trusted` discs are admissible by construction and are
/// accepted without certification.
pub(crate) fn search(
    d: &Domain,
    p: &CPoint,
    v: &TVector,
    budget: &OptimizerBudget,
    seeds: &[PolyDiscCandidate],
    trusted: &[PolyDiscCandidate],
) -> Result<DiscEstimate> {
    check_inputs(d, p, v)?;
    budget.validate()?;
    let n = d.dim();
    let pc = p.coords().to_vec();
    let u = canonical_direction(v.comps());
    let m = budget.max_degree;

    let convex = d.is_convex();
    // the unit circle itself is always sampled so that the search and the
    // certificate agree on the closed disc; for convex targets the image
    // lies in the hull of f(S¹) and nothing else is needed
    let radii = if convex {
        vec![1.0]
    } else {
        let mut r = budget.sample_radii.clone();
        r.extend([0.25, 0.5, 0.75, 1.0]);
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    };
    let angles = budget.boundary_angles;
    let zs: Vec<C64> = radii
        .iter()
        .flat_map(|&r| (0..angles).map(move |k| C64::from_polar(r, std::f64::consts::TAU * k as f64 / angles as f64)))
        .collect();

    let dist = d.sdf(&pc);
    let problem = Problem { d, p: pc.clone(), u: u.clone(), n, zs, t_ref: dist };

    // (t, degree, shape); the affine seed is admissible by construction
    let mut best: (f64, usize, Vec<f64>) = (dist * (1.0 - budget.margin), 1, Vec::new());
    let consider = |t: f64, degree: usize, b: Vec<f64>, best: &mut (f64, usize, Vec<f64>)| {
        if t > best.0 {
            *best = (t, degree, b);
        }
    };
    if let Some(t) = affine_exact_radius(d, &pc, &u) {
        consider(t, 1, Vec::new(), &mut best);
    }

    let mut starts: Vec<Shape> = Vec::new();
    for c in trusted {
        let c = normalize_seed(c, &pc, &u)?;
        let s = to_shape(&u, &c, c.degree);
        consider(s.t, c.degree, s.b.clone(), &mut best);
        starts.push(s);
    }
    for c in seeds {
        let c = normalize_seed(c, &pc, &u)?;
        let s = to_shape(&u, &c, c.degree);
        if let Some(t) = problem.certified(c.degree, &s, budget.margin * 1e-3) {
            consider(t, c.degree, s.b.clone(), &mut best);
        }
        starts.push(s);
    }

    for degree in degree_ladder(m) {
        let len = problem.free_len(degree);
        let pad = |b: &[f64]| {
            let mut x = vec![0.0; len];
            let k = b.len().min(len);
            x[..k].copy_from_slice(&b[..k]);
            x
        };
        let mut inits: Vec<Vec<f64>> = vec![pad(&best.2)];
        if best.1 != 1 {
            inits.push(vec![0.0; len]);
        }
        inits.extend(starts.iter().map(|s| pad(&s.b)));
        inits.truncate(budget.restarts);
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ ((degree as u64) << 32));
        while inits.len() < budget.restarts {
            let mut x = vec![0.0; len];
            for (k, xi) in x.iter_mut().enumerate() {
                let j = k / (2 * n) + 2;
                *xi = rng.gen_range(-0.6..0.6) / j as f64;
            }
            inits.push(x);
        }

        let results: Vec<Option<(f64, Vec<f64>)>> = inits
            .par_iter()
            .map(|x0| {
                let shape = problem.anneal(degree, x0, budget.max_iters);
                problem.certified(degree, &shape, budget.margin).map(|t| (t, shape.b))
            })
            .collect();
        for (t, b) in results.into_iter().flatten() {
            consider(t, degree, b, &mut best);
        }
    }

    let (t, degree, b) = best;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NoAdmissibleCandidate);
    }
    let coeffs = problem.coeffs(degree, &b, t);
    let value = v.norm() / norm(&coeffs[1]);
    let boundary_samples = if degree == 1 && b.is_empty() { 0 } else { problem.zs.len() };
    Ok(DiscEstimate {
        value: MetricValue { value, scale: 1.0, source: MetricSource::EstimatedUpperBound },
        candidate: PolyDiscCandidate { degree, coeffs, boundary_samples },
    })
}

/// Validates a seed disc and rotates its parameter so that f′(0) is a
/// positive multiple of the canonical direction u.
fn normalize_seed(c: &PolyDiscCandidate, p: &[C64], u: &[C64]) -> Result<PolyDiscCandidate> {
    let bad = |msg: &str| Err(Error::InvalidInput(format!("seed disc: {msg}")));
    if c.coeffs.len() != c.degree + 1 || c.degree == 0 || c.coeffs.iter().any(|a| a.len() != p.len()) {
        return bad("malformed coefficients");
    }
    if crate::geometry::dist(&c.coeffs[0], p) > 1e-12 * (1.0 + norm(p)) {
        return bad("center differs from p");
    }
    let a1 = &c.coeffs[1];
    let lambda = crate::geometry::hdot(a1, u);
    let off: Vec<C64> = a1.iter().zip(u).map(|(a, b)| a - lambda * b).collect();
    if !(lambda.norm() > 0.0) || norm(&off) > 1e-9 * norm(a1) {
        return bad("derivative at 0 is not a multiple of v");
    }
    let w = lambda.conj() / lambda.norm();
    let mut out = c.clone();
    let mut wj = C64::new(1.0, 0.0);
    for a in out.coeffs.iter_mut().skip(1) {
        wj *= w;
        a.iter_mut().for_each(|z| *z *= wj);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
