//! Exact infinitesimal metrics and distances.
//!
//! Values are in Kobayashi normalization (the unit disc has density 1 at
//! its center) multiplied by an explicit `scale`; scale 2 is the
//! curvature −1 Poincaré normalization 4(1 − |z|²)⁻² |dz|².
//!
//! On annuli the canonical metric is taken in the convention where the
//! symmetric annulus M = {1/√R < |z| < √R} has density
//! (π / (2 ln R)) / (r cos(π ln r / (2 ln R))) at scale 2, so that the
//! core circle |z| = 1 has length π² / ln R. A general annulus A(a, b) is
//! rescaled by √(ab) onto M with R = b/a.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hdot, norm_sq, CPoint, Domain, DomainKind, TVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSource {
    ClosedForm,
    EstimatedUpperBound,
}

/// Length of a tangent vector in a hyperbolic metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub scale: f64,
    pub source: MetricSource,
}

impl MetricValue {
    pub fn closed(value: f64, scale: f64) -> Self {
        MetricValue { value, scale, source: MetricSource::ClosedForm }
    }

    /// Same quantity expressed at another scale.
    pub fn rescaled(self, scale: f64) -> Self {
        MetricValue { value: self.value * scale / self.scale, scale, ..self }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("scale must be positive, got {scale}")))
    }
}

/// Density of the Poincaré metric of the unit disc at p: scale/(1 − |p|²).
pub fn poincare_disc_density(p: C64, scale: f64) -> Result<MetricValue> {
    check_scale(scale)?;
    let r2 = p.norm_sqr();
    if !(r2 < 1.0) {
        return Err(Error::NotInDisc);
    }
    Ok(MetricValue::closed(scale / (1.0 - r2), scale))
}

/// Conformal density of the canonical metric of M = {1/√R < |z| < √R}.
pub fn annulus_canonical_density(p: C64, big_r: f64, scale: f64) -> Result<MetricValue> {
    check_scale(scale)?;
    if !(big_r.is_finite() && big_r > 1.0) {
        return Err(Error::InvalidInput(format!("R must exceed 1, got {big_r}")));
    }
    let r = p.norm();
    let half = big_r.sqrt();
    if !(r > 1.0 / half && r < half) {
        return Err(Error::NotInAnnulus);
    }
    Ok(MetricValue::closed(scale * annulus_density_unchecked(r, big_r.ln()), scale))
}

/// Scale-1 density at radius r of M with ln R = `log_r`.
fn annulus_density_unchecked(r: f64, log_r: f64) -> f64 {
    let k = PI / (2.0 * log_r);
    0.5 * k / (r * (k * r.ln()).cos())
}

/// Kobayashi–Royden length F(p, v) for domains with a closed form (scale 1).
pub fn kob_royden_closed(d: &Domain, p: &CPoint, v: &TVector) -> Result<MetricValue> {
    d.check_dim(p.dim())?;
    d.check_dim(v.dim())?;
    if !d.contains_raw(p.coords()) {
        return Err(Error::NotInDomain);
    }
    let value = closed_density(d, p.coords(), v.comps()).ok_or(Error::NoClosedForm(d.name()))?;
    Ok(MetricValue::closed(value, 1.0))
}

pub(crate) fn has_closed_metric(d: &Domain) -> bool {
    matches!(
        d.kind(),
        DomainKind::Disc { .. } | DomainKind::Ball { .. } | DomainKind::Polydisc { .. } | DomainKind::Annulus { .. }
    )
}

/// Kinds whose closed form is the Kobayashi–Royden metric itself; for
/// annuli the canonical density is only a lower bound for it.
pub(crate) fn is_exact_kobayashi(d: &Domain) -> bool {
    matches!(d.kind(), DomainKind::Disc { .. } | DomainKind::Ball { .. } | DomainKind::Polydisc { .. })
}

/// Unchecked scale-1 closed-form density; None for kinds without one.
pub(crate) fn closed_density(d: &Domain, p: &[C64], v: &[C64]) -> Option<f64> {
    match d.kind() {
        DomainKind::Disc { center, radius } => {
            let q = p[0] - center;
            Some(v[0].norm() * radius / (radius * radius - q.norm_sqr()))
        }
        DomainKind::Ball { center, radius, .. } => {
            let q: Vec<C64> = p.iter().zip(center.coords()).map(|(a, c)| (a - c) / radius).collect();
            let w: Vec<C64> = v.iter().map(|z| z / radius).collect();
            let gap = 1.0 - norm_sq(&q);
            let proj = hdot(&w, &q).norm_sqr();
            Some((norm_sq(&w) / gap + proj / (gap * gap)).sqrt())
        }
        DomainKind::Polydisc { radii } => Some(
            p.iter()
                .zip(v)
                .zip(radii)
                .map(|((pi, vi), r)| vi.norm() * r / (r * r - pi.norm_sqr()))
                .fold(0.0, f64::max),
        ),
        DomainKind::Annulus { inner, outer } => {
            let s = (inner * outer).sqrt();
            let r = p[0].norm() / s;
            Some(annulus_density_unchecked(r, (outer / inner).ln()) * v[0].norm() / s)
        }
        _ => None,
    }
}

/// Kobayashi distance for discs and balls (scale 1).
pub fn kob_distance_closed(d: &Domain, p: &CPoint, q: &CPoint) -> Result<f64> {
    d.check_dim(p.dim())?;
    d.check_dim(q.dim())?;
    if !d.contains_raw(p.coords()) || !d.contains_raw(q.coords()) {
        return Err(Error::NotInDomain);
    }
    closed_distance(d, p.coords(), q.coords()).ok_or(Error::NoClosedForm(d.name()))
}

pub(crate) fn has_closed_distance(d: &Domain) -> bool {
    matches!(d.kind(), DomainKind::Disc { .. } | DomainKind::Ball { .. })
}

pub(crate) fn closed_distance(d: &Domain, p: &[C64], q: &[C64]) -> Option<f64> {
    match d.kind() {
        DomainKind::Disc { center, radius } => {
            let a = (p[0] - center) / radius;
            let b = (q[0] - center) / radius;
            let den = (C64::new(1.0, 0.0) - a.conj() * b).norm_sqr();
            let rho = ((a - b).norm_sqr() / den).sqrt();
            Some(atanh_stable(rho, (1.0 - a.norm_sqr()) * (1.0 - b.norm_sqr()) / den))
        }
        DomainKind::Ball { center, radius, .. } => {
            let a: Vec<C64> = p.iter().zip(center.coords()).map(|(x, c)| (x - c) / radius).collect();
            let b: Vec<C64> = q.iter().zip(center.coords()).map(|(x, c)| (x - c) / radius).collect();
            let delta: Vec<C64> = b.iter().zip(&a).map(|(y, x)| y - x).collect();
            // |1 − ⟨a,b⟩|² − (1 − |a|²)(1 − |b|²) = |b − a|² − Σ_{i<j} |aᵢδⱼ − aⱼδᵢ|²
            let mut wedge = 0.0;
            for i in 0..a.len() {
                for j in i + 1..a.len() {
                    wedge += (a[i] * delta[j] - a[j] * delta[i]).norm_sqr();
                }
            }
            let num = (norm_sq(&delta) - wedge).max(0.0);
            let den = (C64::new(1.0, 0.0) - hdot(&a, &b)).norm_sqr();
            Some(atanh_stable((num / den).sqrt(), (1.0 - norm_sq(&a)) * (1.0 - norm_sq(&b)) / den))
        }
        _ => None,
    }
}

/// artanh ρ = ln((1 + ρ)/√(1 − ρ²)) with 1 − ρ² supplied directly, which
/// keeps precision as ρ → 1.
fn atanh_stable(rho: f64, one_minus_rho_sq: f64) -> f64 {
    let rho = rho.min(1.0);
    if rho < 0.5 {
        rho.atanh()
    } else {
        (1.0 + rho).ln() - 0.5 * one_minus_rho_sq.ln()
    }
}

/// ℓ₁ of the annulus A(a, b) in the canonical metric at the given scale:
/// (scale/2)·π²/ln(b/a).
pub fn annulus_l1_closed(inner: f64, outer: f64, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    if !(inner > 0.0 && outer > inner) {
        return Err(Error::InvalidDomain(format!("annulus needs 0 < inner < outer, got {inner}, {outer}")));
    }
    Ok(0.5 * scale * PI * PI / (outer / inner).ln())
}
