//! Strict monotonicity of the metric under relatively compact inclusion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{domain_separation, CPoint, Domain, DomainKind, TVector, C64};
use crate::metrics::{closed_density, has_closed_metric, is_exact_kobayashi};

use super::{enlarge_disc, search, OptimizerBudget};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioSource {
    ClosedForm,
    Estimated,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub delta: f64,
    pub b_lower: f64,
    pub c_bound: f64,
    /// Largest F_outer/F_inner over the probe vectors.
    pub observed_ratio: f64,
    pub ratio_source: RatioSource,
    pub probe_ratios: Vec<f64>,
}

/// Certified lower bound on min over unit u of F^Kob_d(p, u).
pub(crate) fn unit_lower_bound(d: &Domain, p: &[C64]) -> f64 {
    match d.kind() {
        DomainKind::Disc { center, radius } => radius / (radius * radius - (p[0] - center).norm_sqr()),
        DomainKind::Ball { n, center, radius } => {
            let q2: f64 = p.iter().zip(center.coords()).map(|(a, c)| (a - c).norm_sqr()).sum::<f64>() / (radius * radius);
            if *n == 1 {
                1.0 / (radius * (1.0 - q2))
            } else {
                // attained by u orthogonal to p − c
                1.0 / (radius * (1.0 - q2).sqrt())
            }
        }
        DomainKind::Polydisc { radii } => {
            // minimize max cᵢ|uᵢ| over the unit sphere: equalize cᵢ|uᵢ|
            let s: f64 = p
                .iter()
                .zip(radii)
                .map(|(z, r)| {
                    let c = r / (r * r - z.norm_sqr());
                    1.0 / (c * c)
                })
                .sum();
            1.0 / s.sqrt()
        }
        _ if has_closed_metric(d) => closed_density(d, p, &[C64::new(1.0, 0.0)]).unwrap_or(0.0),
        // the domain lies in the ball of radius diam about p
        _ => 1.0 / d.bbox().diameter(),
    }
}

/// Deterministic unit probes: coordinate axes, then mixed pairs, then
/// seeded random directions.
pub(crate) fn probe_directions(n: usize, count: usize, seed: u64) -> Vec<TVector> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    let zero = C64::new(0.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let mut e = vec![zero; n];
        e[i] = C64::new(1.0, 0.0);
        out.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut e = vec![zero; n];
            e[i] = C64::new(h, 0.0);
            e[j] = C64::new(h, 0.0);
            out.push(e.clone());
            e[j] = C64::new(0.0, h);
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        out.push(random_unit(n, &mut rng));
    }
    out.truncate(count);
    out.into_iter().map(|c| TVector::new(c).expect("finite unit probe")).collect()
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let len = crate::geometry::norm(&v);
        if len > 1e-3 && len <= 1.0 {
            return v.iter().map(|c| c / len).collect();
        }
    }
}

fn exact_pair(a: &Domain, b: &Domain) -> bool {
    is_exact_kobayashi(a) && is_exact_kobayashi(b)
}

/// Bound F_outer(p, v) ≤ c·F_inner(p, v) with c = 1/(1 + δ·b) for
/// cl(inner) ⊂ outer, together with the ratio actually observed.
pub fn lemma_compare_bound(
    inner: &Domain,
    outer: &Domain,
    p: &CPoint,
    probe_vectors: usize,
    budget: &OptimizerBudget,
) -> Result<MonotonicityReport> {
    inner.check_dim(p.dim())?;
    if !inner.contains_raw(p.coords()) {
        return Err(Error::NotInDomain);
    }
    if probe_vectors == 0 {
        return Err(Error::InvalidInput("need at least one probe vector".into()));
    }
    let delta = domain_separation(inner, outer)?;
    let b_lower = unit_lower_bound(inner, p.coords());
    let c_bound = 1.0 / (1.0 + delta * b_lower);
    let probes = probe_directions(inner.dim(), probe_vectors, budget.seed);

    let exact = exact_pair(inner, outer);
    let ratios: Vec<f64> = probes
        .par_iter()
        .map(|u| -> Result<f64> {
            if exact {
                let fi = closed_density(inner, p.coords(), u.comps()).unwrap_or(f64::NAN);
                let fo = closed_density(outer, p.coords(), u.comps()).unwrap_or(f64::NAN);
                return Ok(fo / fi);
            }
            let est_in = search(inner, p, u, budget, &[], &[])?;
            let seed = enlarge_disc(&est_in.candidate, delta);
            let est_out = search(outer, p, u, budget, &[], &[seed])?;
            Ok(est_out.value.value / est_in.value.value)
        })
        .collect::<Result<_>>()?;
    let observed_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(MonotonicityReport {
        delta,
        b_lower,
        c_bound,
        observed_ratio,
        ratio_source: if exact { RatioSource::ClosedForm } else { RatioSource::Estimated },
        probe_ratios: ratios,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformSample {
    pub p: CPoint,
    pub v: TVector,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformMonotonicity {
    /// Largest sampled ratio F_V/F_U.
    pub c: f64,
    pub delta: f64,
    /// max over samples of 1/(1 + δ·b_U(p)), a certified bound on the
    /// ratio at the sampled points.
    pub lemma_bound: f64,
    pub ratio_source: RatioSource,
    pub samples: Vec<UniformSample>,
}

/// Sample points of `d`: its bounding-box center when interior, then
/// seeded rejection samples.
pub(crate) fn sample_points(d: &Domain, count: usize, seed: u64) -> Vec<CPoint> {
    let bbox = d.bbox();
    let mut out = Vec::with_capacity(count);
    let center = bbox.point_at(&vec![0.5; bbox.real_dim()]);
    if d.contains_raw(&center) {
        out.push(CPoint::from_vec_unchecked(center));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let unit: Vec<f64> = (0..bbox.real_dim()).map(|_| rng.gen()).collect();
        let q = bbox.point_at(&unit);
        if d.contains_raw(&q) {
            out.push(CPoint::from_vec_unchecked(q));
        }
    }
    out.truncate(count);
    out
}

/// Uniform constant c < 1 with F_V ≤ c·F_U over sampled (p, v), for
/// cl(U) ⊂ V. Estimates pass through W = (δ/2-neighbourhood of U), each
/// step seeded with the enlarged disc of the previous one.
pub fn uniform_monotonicity_constant(
    u_dom: &Domain,
    v_dom: &Domain,
    sample_points_count: usize,
    budget: &OptimizerBudget,
) -> Result<UniformMonotonicity> {
    if sample_points_count == 0 {
        return Err(Error::InvalidInput("need at least one sample point".into()));
    }
    let delta = domain_separation(u_dom, v_dom)?;
    let w_dom = u_dom.inflated(0.5 * delta)?;
    let n = u_dom.dim();
    let points = sample_points(u_dom, sample_points_count, budget.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ 0x9e37_79b9);
    let pairs: Vec<(CPoint, TVector)> = points
        .into_iter()
        .map(|p| (p, TVector::new(random_unit(n, &mut rng)).expect("finite unit vector")))
        .collect();

    let exact = exact_pair(u_dom, v_dom);
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|(p, v)| -> Result<f64> {
            if exact {
                let fu = closed_density(u_dom, p.coords(), v.comps()).unwrap_or(f64::NAN);
                let fv = closed_density(v_dom, p.coords(), v.comps()).unwrap_or(f64::NAN);
                return Ok(fv / fu);
            }
            let est_u = search(u_dom, p, v, budget, &[], &[])?;
            let est_w = search(&w_dom, p, v, budget, &[], &[enlarge_disc(&est_u.candidate, 0.5 * delta)])?;
            let est_v = search(v_dom, p, v, budget, &[], &[enlarge_disc(&est_w.candidate, 0.5 * delta)])?;
            Ok(est_v.value.value / est_u.value.value)
        })
        .collect::<Result<_>>()?;

    if let Some((sample, &ratio)) = ratios.iter().enumerate().find(|(_, r)| !(**r < 1.0)) {
        return Err(Error::MonotonicityViolated { ratio, sample });
    }
    let c = ratios.iter().copied().fold(0.0, f64::max);
    let lemma_bound = pairs
        .iter()
        .map(|(p, _)| 1.0 / (1.0 + delta * unit_lower_bound(u_dom, p.coords())))
        .fold(0.0, f64::max);
    Ok(UniformMonotonicity {
        c,
        delta,
        lemma_bound,
        ratio_source: if exact { RatioSource::ClosedForm } else { RatioSource::Estimated },
        samples: pairs.into_iter().zip(ratios).map(|((p, v), ratio)| UniformSample { p, v, ratio }).collect(),
    })
}
