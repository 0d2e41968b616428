//! Lengths and distances in the Kobayashi metric: integration along
//! polylines, partition sums, and shortest paths on a lattice graph.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_kob_royden, OptimizerBudget};
use crate::geometry::{dist, hdot, norm, CPoint, Domain, DomainKind, SampledCurve, TVector, C64};
use crate::metrics::{closed_density, closed_distance, has_closed_distance, has_closed_metric};
use crate::quadrature::{adaptive, GaussLegendre};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    /// Σ ρ(α(t_{k−1}), α(t_k)) over the sample partition.
    PartitionSum,
    /// Σ over polyline segments of ∫ F(γ, γ′).
    Integrated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Kobayashi,
    Euclidean,
}

/// An infinitesimal metric on a domain, with quadrature settings and a
/// memo for estimated values.
pub struct LengthMetric {
    domain: Domain,
    kind: MetricKind,
    scale: f64,
    budget: OptimizerBudget,
    rel_tol: f64,
    rule: GaussLegendre,
    coarse: GaussLegendre,
    memo: RwLock<HashMap<Vec<i64>, f64>>,
}

impl std::fmt::Debug for LengthMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LengthMetric")
            .field("domain", &self.domain.name())
            .field("kind", &self.kind)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

const MEMO_QUANTUM: f64 = (1u64 << 32) as f64;

impl LengthMetric {
    /// Kobayashi metric at scale 1. Closed forms are used where they exist
    /// (the canonical metric on annuli); other kinds use the disc
    /// estimator with a light budget.
    pub fn kobayashi(d: &Domain) -> Self {
        let closed = has_closed_metric(d);
        LengthMetric {
            domain: d.clone(),
            kind: MetricKind::Kobayashi,
            scale: 1.0,
            budget: OptimizerBudget::light(),
            rel_tol: if closed { 1e-6 } else { 1e-3 },
            rule: GaussLegendre::new(8),
            coarse: GaussLegendre::new(2),
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn euclidean(d: &Domain) -> Self {
        LengthMetric { kind: MetricKind::Euclidean, rel_tol: 1e-6, ..Self::kobayashi(d) }
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn with_budget(mut self, budget: OptimizerBudget) -> Result<Self> {
        budget.validate()?;
        self.budget = budget;
        self.memo = RwLock::new(HashMap::new());
        Ok(self)
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::InvalidInput(format!("tolerance must be in (0, 1), got {rel_tol}")));
        }
        self.rel_tol = rel_tol;
        Ok(self)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// True when values come from closed forms rather than the estimator.
    pub fn is_closed_form(&self) -> bool {
        self.kind == MetricKind::Euclidean || has_closed_metric(&self.domain)
    }

    /// Number of memoized estimator values.
    pub fn memo_len(&self) -> usize {
        self.memo.read().map(|m| m.len()).unwrap_or(0)
    }

    /// Length of the tangent vector v at p (p interior; unchecked).
    pub fn density(&self, p: &[C64], v: &[C64]) -> Result<f64> {
        let vn = norm(v);
        if vn == 0.0 {
            return Ok(0.0);
        }
        if self.kind == MetricKind::Euclidean {
            return Ok(self.scale * vn);
        }
        if let Some(x) = closed_density(&self.domain, p, v) {
            return Ok(self.scale * x);
        }
        let u: Vec<C64> = v.iter().map(|c| c / vn).collect();
        let (pc, uc) = canonical_pair(&self.domain, p, &u);
        let key: Vec<i64> = pc
            .iter()
            .chain(&uc)
            .flat_map(|c| [(c.re * MEMO_QUANTUM).round() as i64, (c.im * MEMO_QUANTUM).round() as i64])
            .collect();
        if let Some(x) = self.memo.read().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(self.scale * vn * x);
        }
        let value = estimate_kob_royden(
            &self.domain,
            &CPoint::from_vec_unchecked(pc),
            &TVector::new(uc)?,
            &self.budget,
        )?
        .value;
        if let Ok(mut m) = self.memo.write() {
            m.insert(key, value);
        }
        Ok(self.scale * vn * value)
    }

    /// ∫₀¹ F(a + t(b − a), b − a) dt with adaptive Gauss–Legendre.
    pub fn segment_length(&self, a: &[C64], b: &[C64]) -> Result<f64> {
        if self.kind == MetricKind::Euclidean {
            return Ok(self.scale * dist(a, b));
        }
        let (a, b) = ordered(a, b);
        let dir: Vec<C64> = b.iter().zip(a).map(|(y, x)| y - x).collect();
        if norm(&dir) == 0.0 {
            return Ok(0.0);
        }
        let mut x = a.to_vec();
        adaptive(&self.rule, 0.0, 1.0, self.rel_tol, 24, &mut |t| {
            for ((xi, ai), di) in x.iter_mut().zip(a).zip(&dir) {
                *xi = ai + di * t;
            }
            self.density(&x, &dir)
        })
    }

    /// Fixed-order rule on one segment; used for short graph edges.
    fn edge_length(&self, a: &[C64], b: &[C64]) -> Result<f64> {
        if self.kind == MetricKind::Euclidean {
            return Ok(self.scale * dist(a, b));
        }
        let (a, b) = ordered(a, b);
        let dir: Vec<C64> = b.iter().zip(a).map(|(y, x)| y - x).collect();
        let mut x = a.to_vec();
        let mut s = 0.0;
        for (t, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            for ((xi, ai), di) in x.iter_mut().zip(a).zip(&dir) {
                *xi = ai + di * t;
            }
            s += w * self.density(&x, &dir)?;
        }
        Ok(s)
    }

    /// Distance across a short piece of a cover: exact where a closed
    /// form exists, the chord length otherwise, with a fixed two-point
    /// rule when densities come from the estimator.
    pub fn piece_distance(&self, a: &[C64], b: &[C64]) -> Result<f64> {
        if self.kind == MetricKind::Euclidean || has_closed_distance(&self.domain) || self.is_closed_form() {
            return self.pair_distance(a, b);
        }
        let (a, b) = ordered(a, b);
        let dir: Vec<C64> = b.iter().zip(a).map(|(y, x)| y - x).collect();
        let mut x = a.to_vec();
        let mut s = 0.0;
        for (t, w) in self.coarse.nodes.iter().zip(&self.coarse.weights) {
            for ((xi, ai), di) in x.iter_mut().zip(a).zip(&dir) {
                *xi = ai + di * t;
            }
            s += w * self.density(&x, &dir)?;
        }
        Ok(s)
    }

    /// Distance between interior points: exact where a closed form
    /// exists, otherwise the length of the chord (an upper bound).
    pub fn pair_distance(&self, a: &[C64], b: &[C64]) -> Result<f64> {
        match self.kind {
            MetricKind::Euclidean => Ok(self.scale * dist(a, b)),
            MetricKind::Kobayashi if has_closed_distance(&self.domain) => {
                let (a, b) = ordered(a, b);
                Ok(self.scale * closed_distance(&self.domain, a, b).unwrap_or(f64::NAN))
            }
            MetricKind::Kobayashi => self.segment_length(a, b),
        }
    }
}

fn ordered<'a>(a: &'a [C64], b: &'a [C64]) -> (&'a [C64], &'a [C64]) {
    let key = |x: &[C64]| x.iter().flat_map(|c| [c.re, c.im]).collect::<Vec<f64>>();
    let (ka, kb) = (key(a), key(b));
    let ord = ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal);
    if ord == Some(Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Moves (p, u) by a symmetry of the domain (and u by a phase) to a
/// canonical representative, so that congruent queries share estimates.
fn canonical_pair(d: &Domain, p: &[C64], u: &[C64]) -> (Vec<C64>, Vec<C64>) {
    match d.kind() {
        DomainKind::TubeSphere { .. } => canonical_real_orthogonal(p, u),
        DomainKind::TubeCircle { n, .. } => canonical_circle_tube(*n, p, u),
        _ => (p.to_vec(), u.to_vec()),
    }
}

fn unit_phase(z: C64) -> C64 {
    z.conj() / z.norm()
}

/// Invariants of O(k+1) acting on ℂᵏ⁺¹ = ℝᵏ⁺¹ ⊗ ℂ: Gram–Schmidt frame of
/// Re p, Im p, Re u, Im u, after fixing the phase of u by ⟨u, p⟩.
fn canonical_real_orthogonal(p: &[C64], u: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let dim = p.len();
    let mut u = u.to_vec();
    let along = hdot(&u, p);
    if along.norm() > 1e-9 * norm(p) {
        let w = unit_phase(along);
        u.iter_mut().for_each(|c| *c *= w);
    } else {
        let sq: C64 = u.iter().map(|c| c * c).sum();
        if sq.norm() > 1e-9 {
            let w = unit_phase(sq).sqrt();
            u.iter_mut().for_each(|c| *c *= w);
        }
    }
    let data: [Vec<f64>; 4] = [
        p.iter().map(|c| c.re).collect(),
        p.iter().map(|c| c.im).collect(),
        u.iter().map(|c| c.re).collect(),
        u.iter().map(|c| c.im).collect(),
    ];
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for v in &data {
        let mut r = v.clone();
        for e in &frame {
            let dot: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(e).for_each(|(a, b)| *a -= dot * b);
        }
        let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-9 && frame.len() < dim {
            frame.push(r.iter().map(|x| x / len).collect());
        }
    }
    let project = |z: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (o, e) in out.iter_mut().zip(&frame) {
            let re: f64 = z.iter().zip(e).map(|(c, x)| c.re * x).sum();
            let im: f64 = z.iter().zip(e).map(|(c, x)| c.im * x).sum();
            *o = C64::new(re, im);
        }
        out
    };
    (project(p), project(&u))
}

/// Rotations of z₁ and (for n = 2) of z₂, and the phase of u.
fn canonical_circle_tube(n: usize, p: &[C64], u: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let mut p = p.to_vec();
    let mut u = u.to_vec();
    let rotate = |i: usize, w: C64, p: &mut Vec<C64>, u: &mut Vec<C64>| {
        p[i] *= w;
        u[i] *= w;
    };
    if p[0].norm() > 0.0 {
        rotate(0, unit_phase(p[0]), &mut p, &mut u);
    }
    let free_second = n == 2 && p[1].norm() <= 1e-12;
    if n == 2 && !free_second {
        rotate(1, unit_phase(p[1]), &mut p, &mut u);
    }
    if free_second && u[1].norm() > 0.0 {
        rotate(1, unit_phase(u[1]), &mut p, &mut u);
    }
    let big = u.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if let Some(lead) = u.iter().find(|c| c.norm() >= big * (1.0 - 1e-9)).copied() {
        let w = unit_phase(lead);
        u.iter_mut().for_each(|c| *c *= w);
    }
    if free_second && u[1].norm() > 0.0 {
        rotate(1, unit_phase(u[1]), &mut p, &mut u);
    }
    (p, u)
}

/// Length of a sampled curve in the Kobayashi metric of `d` (scale 1).
pub fn curve_length_metric(d: &Domain, c: &SampledCurve, mode: LengthMode) -> Result<f64> {
    curve_length(&LengthMetric::kobayashi(d), c, mode)
}

/// Length of a sampled curve in the given metric.
pub fn curve_length(metric: &LengthMetric, c: &SampledCurve, mode: LengthMode) -> Result<f64> {
    let d = metric.domain();
    c.check_inside(d)?;
    let pts = c.points();
    // closed curves repeat their first sample at the end
    let pairs: Vec<(usize, usize)> = (1..pts.len()).map(|i| (i - 1, i)).collect();
    for &(i, j) in &pairs {
        if d.ray_exit(pts[i].coords(), &diff(pts[j].coords(), pts[i].coords())) < 1.0 {
            return Err(Error::CurveExitsDomain(i));
        }
    }
    let lens: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (pts[i].coords(), pts[j].coords());
            match mode {
                LengthMode::Integrated => metric.segment_length(a, b),
                LengthMode::PartitionSum => partition_distance(metric, a, b),
            }
        })
        .collect::<Result<_>>()?;
    Ok(lens.iter().sum())
}

fn partition_distance(metric: &LengthMetric, a: &[C64], b: &[C64]) -> Result<f64> {
    if metric.kind() == MetricKind::Euclidean || has_closed_distance(metric.domain()) {
        return metric.pair_distance(a, b);
    }
    let chord = metric.segment_length(a, b)?;
    let h = dist(a, b) / 4.0;
    if h == 0.0 {
        return Ok(0.0);
    }
    let (a, b) = ordered(a, b);
    match shortest_path(metric, a, b, h, 200_000) {
        Ok(g) => Ok(g.min(chord)),
        Err(Error::ResolutionTooCoarse) | Err(Error::DidNotConverge(_)) => Ok(chord),
        Err(e) => Err(e),
    }
}

fn diff(b: &[C64], a: &[C64]) -> Vec<C64> {
    b.iter().zip(a).map(|(x, y)| x - y).collect()
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// King-move offsets {−1, 0, 1}^dim without the zero vector.
fn king_offsets(dim: usize) -> Vec<Vec<i64>> {
    let total = 3usize.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let o = (k % 3) as i64 - 1;
                    k /= 3;
                    o
                })
                .collect::<Vec<i64>>()
        })
        .filter(|o| o.iter().any(|x| *x != 0))
        .collect()
}

fn lattice_index(p: &[C64], h: f64) -> Vec<i64> {
    p.iter().flat_map(|c| [(c.re / h).round() as i64, (c.im / h).round() as i64]).collect()
}

fn lattice_point(idx: &[i64], h: f64) -> Vec<C64> {
    idx.chunks(2).map(|c| C64::new(c[0] as f64 * h, c[1] as f64 * h)).collect()
}

fn king_adjacent(a: &[i64], b: &[i64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1)
}

fn segment_inside(d: &Domain, a: &[C64], b: &[C64]) -> bool {
    d.contains_raw(a) && d.contains_raw(b) && d.ray_exit(a, &diff(b, a)) > 1.0
}

/// Best chain of interior chords through the vertices of `path`, each
/// chord skipping at most `window` vertices, as (length, vertex indices).
/// Consecutive vertices keep their edge weights, so the length never
/// exceeds that of the path; longer chords remove the direction bias of
/// the lattice.
fn shortcut(metric: &LengthMetric, path: &[Vec<C64>], steps: &[f64], window: usize) -> Result<(f64, Vec<usize>)> {
    let d = metric.domain();
    let mut dp = vec![f64::INFINITY; path.len()];
    let mut from = vec![0usize; path.len()];
    dp[0] = 0.0;
    for j in 1..path.len() {
        let lo = j.saturating_sub(window);
        let chords: Vec<f64> = (lo..j - 1)
            .into_par_iter()
            .map(|i| {
                if !segment_inside(d, &path[i], &path[j]) {
                    return Ok(f64::INFINITY);
                }
                metric.segment_length(&path[i], &path[j])
            })
            .collect::<Result<_>>()?;
        dp[j] = dp[j - 1] + steps[j - 1];
        from[j] = j - 1;
        for (i, c) in (lo..j - 1).zip(chords) {
            if dp[i] + c < dp[j] {
                dp[j] = dp[i] + c;
                from[j] = i;
            }
        }
    }
    let mut chain = vec![path.len() - 1];
    while let Some(&j) = chain.last().filter(|&&j| j != 0) {
        chain.push(from[j]);
    }
    chain.reverse();
    Ok((dp[path.len() - 1], chain))
}

/// Sweep cap per refinement level of [`relax`].
const MAX_SWEEPS: usize = 60;

/// Curve shortening with fixed end points, coarse to fine: the polyline
/// is first thinned to a few interior chords, then repeatedly relaxed and
/// halved until no chord is longer than `spacing`. Relaxation moves one
/// vertex at a time by pattern search, keeping the chords through it
/// interior. Returns the final length.
fn relax(metric: &LengthMetric, verts: Vec<Vec<C64>>, spacing: f64) -> Result<f64> {
    let d = metric.domain();
    let link = |a: &[C64], b: &[C64]| -> Result<f64> {
        if !segment_inside(d, a, b) {
            return Ok(f64::INFINITY);
        }
        // the density is smooth on chords short against the boundary distance
        if dist(a, b) < 0.25 * d.sdf(a).min(d.sdf(b)) {
            metric.edge_length(a, b)
        } else {
            metric.segment_length(a, b)
        }
    };
    let total: f64 = verts.windows(2).map(|w| dist(&w[0], &w[1])).sum();
    let reach = (0.25 * total).max(spacing);
    let mut coarse = vec![verts[0].clone()];
    let mut i = 0;
    while i + 1 < verts.len() {
        let mut j = i + 1;
        while j + 1 < verts.len() && dist(&verts[i], &verts[j + 1]) <= reach && segment_inside(d, &verts[i], &verts[j + 1]) {
            j += 1;
        }
        coarse.push(verts[j].clone());
        i = j;
    }

    let mut verts = coarse;
    loop {
        let longest = verts.windows(2).map(|w| dist(&w[0], &w[1])).fold(0.0, f64::max);
        let mut seg: Vec<f64> = verts.windows(2).map(|w| link(&w[0], &w[1])).collect::<Result<_>>()?;
        let last = longest <= spacing;
        let real_dim = 2 * verts[0].len();
        let mut step = 0.25 * longest;
        let floor = longest * if last { 1e-3 } else { 3e-2 };
        let mut sweeps = 0;
        while step > floor && sweeps < MAX_SWEEPS {
            sweeps += 1;
            let mut moved = false;
            for i in 1..verts.len() - 1 {
                for axis in 0..real_dim {
                    for sign in [1.0, -1.0] {
                        let mut x = verts[i].clone();
                        x[axis / 2] += if axis % 2 == 0 { C64::new(sign * step, 0.0) } else { C64::new(0.0, sign * step) };
                        if !d.contains_raw(&x) {
                            continue;
                        }
                        let l = link(&verts[i - 1], &x)?;
                        let r = link(&x, &verts[i + 1])?;
                        if l + r < seg[i - 1] + seg[i] - 1e-15 * (l + r) {
                            verts[i] = x;
                            seg[i - 1] = l;
                            seg[i] = r;
                            moved = true;
                            break;
                        }
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        if last {
            return Ok(seg.iter().sum());
        }
        // vertices drift along the curve while relaxing, so the next level
        // is resampled at even arclength rather than split at midpoints
        let cum: Vec<f64> = std::iter::once(0.0)
            .chain(verts.windows(2).scan(0.0, |acc, w| {
                *acc += dist(&w[0], &w[1]);
                Some(*acc)
            }))
            .collect();
        let pieces = 2 * (verts.len() - 1);
        let total = cum[cum.len() - 1];
        let mut fine = Vec::with_capacity(pieces + 1);
        fine.push(verts[0].clone());
        let mut k = 0;
        for m in 1..pieces {
            let t = total * m as f64 / pieces as f64;
            while cum[k + 1] < t {
                k += 1;
            }
            let span = cum[k + 1] - cum[k];
            let s = if span > 0.0 { (t - cum[k]) / span } else { 0.0 };
            fine.push(verts[k].iter().zip(&verts[k + 1]).map(|(a, b)| a + (b - a) * s).collect());
        }
        fine.push(verts[verts.len() - 1].clone());
        verts = fine;
    }
}

/// Chord window for lattice spacing h: grows like h^(-1/2) so that both
/// the chord span and the direction quantization vanish as h → 0.
fn shortcut_window(h: f64) -> usize {
    ((2.0 / h.sqrt()).ceil() as usize).clamp(8, 64)
}

/// Shortest path from a to b in the lattice graph of spacing h, followed
/// by a chord shortcut pass along the path. Nodes are lattice points of
/// the domain plus a and b, edges join king-move neighbours whose segment
/// is interior, and a, b attach to the king block around their nearest
/// lattice point.
fn shortest_path(metric: &LengthMetric, a: &[C64], b: &[C64], h: f64, max_nodes: usize) -> Result<f64> {
    let d = metric.domain();
    let ia = lattice_index(a, h);
    let ib = lattice_index(b, h);
    let offsets = king_offsets(ia.len());

    let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut points: Vec<Vec<C64>> = vec![a.to_vec(), b.to_vec()];
    let mut keys: Vec<Option<Vec<i64>>> = vec![None, None];
    let mut best: Vec<f64> = vec![0.0, f64::INFINITY];
    let mut done: Vec<bool> = vec![false, false];
    let mut prev: Vec<usize> = vec![usize::MAX, usize::MAX];
    let mut heap = BinaryHeap::new();
    heap.push(Entry { cost: 0.0, node: 0 });

    while let Some(Entry { cost, node }) = heap.pop() {
        if done[node] || cost > best[node] {
            continue;
        }
        done[node] = true;
        if node == 1 {
            let mut chain = vec![1usize];
            while let Some(&n) = chain.last().filter(|&&n| n != 0) {
                chain.push(prev[n]);
            }
            chain.reverse();
            let path: Vec<Vec<C64>> = chain.iter().map(|&n| points[n].clone()).collect();
            let steps: Vec<f64> = chain.windows(2).map(|w| best[w[1]] - best[w[0]]).collect();
            let window = shortcut_window(h);
            let (short, chain) = shortcut(metric, &path, &steps, window)?;
            if !metric.is_closed_form() {
                return Ok(short.min(cost));
            }
            let verts: Vec<Vec<C64>> = chain.iter().map(|&i| path[i].clone()).collect();
            let relaxed = relax(metric, verts, h)?;
            return Ok(relaxed.min(short).min(cost));
        }
        if points.len() > max_nodes {
            return Err(Error::DidNotConverge(max_nodes));
        }
        let here = points[node].clone();
        let base = match &keys[node] {
            Some(k) => k.clone(),
            None => ia.clone(),
        };
        let mut targets: Vec<usize> = Vec::new();
        let block = std::iter::once(vec![0i64; base.len()]).chain(offsets.iter().cloned());
        for off in block {
            let idx: Vec<i64> = base.iter().zip(&off).map(|(x, o)| x + o).collect();
            if keys[node].as_ref() == Some(&idx) {
                continue;
            }
            let id = match ids.get(&idx) {
                Some(&id) => id,
                None => {
                    let pt = lattice_point(&idx, h);
                    if !d.contains_raw(&pt) {
                        continue;
                    }
                    let id = points.len();
                    points.push(pt);
                    keys.push(Some(idx.clone()));
                    best.push(f64::INFINITY);
                    done.push(false);
                    prev.push(usize::MAX);
                    ids.insert(idx, id);
                    id
                }
            };
            targets.push(id);
        }
        let reaches_b = match &keys[node] {
            Some(k) => king_adjacent(k, &ib),
            None => king_adjacent(&ia, &ib),
        };
        if reaches_b {
            targets.push(1);
        }
        let weights: Vec<Option<f64>> = targets
            .par_iter()
            .map(|&t| {
                if done[t] || !segment_inside(d, &here, &points[t]) {
                    return Ok(None);
                }
                metric.edge_length(&here, &points[t]).map(Some)
            })
            .collect::<Result<_>>()?;
        for (&t, w) in targets.iter().zip(weights) {
            if let Some(w) = w {
                let c = cost + w;
                if c < best[t] {
                    best[t] = c;
                    prev[t] = node;
                    heap.push(Entry { cost: c, node: t });
                }
            }
        }
    }
    Err(Error::ResolutionTooCoarse)
}

/// Kobayashi distance (scale 1) as a shortest path in the lattice graph
/// of spacing `resolution`; converges from above as the spacing shrinks.
pub fn kob_distance_graph(d: &Domain, p: &CPoint, q: &CPoint, resolution: f64) -> Result<f64> {
    graph_distance(&LengthMetric::kobayashi(d), p, q, resolution)
}

/// As [`kob_distance_graph`] for an arbitrary metric.
pub fn graph_distance(metric: &LengthMetric, p: &CPoint, q: &CPoint, resolution: f64) -> Result<f64> {
    let d = metric.domain();
    d.check_dim(p.dim())?;
    d.check_dim(q.dim())?;
    if !d.contains_raw(p.coords()) || !d.contains_raw(q.coords()) {
        return Err(Error::NotInDomain);
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidInput(format!("resolution must be positive, got {resolution}")));
    }
    if p.coords() == q.coords() {
        return Ok(0.0);
    }
    let (a, b) = ordered(p.coords(), q.coords());
    shortest_path(metric, a, b, resolution, 20_000_000)
}

/// An explicit lattice graph over a whole domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricGraph {
    pub nodes: Vec<CPoint>,
    pub edges: Vec<(usize, usize, f64)>,
    pub resolution: f64,
}

impl MetricGraph {
    /// All lattice points of spacing `resolution` inside the domain, with
    /// king-move edges along interior segments.
    pub fn build(metric: &LengthMetric, resolution: f64, max_nodes: usize) -> Result<MetricGraph> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidInput(format!("resolution must be positive, got {resolution}")));
        }
        let d = metric.domain();
        let bbox = d.bbox();
        let lo: Vec<i64> = bbox.lo.iter().map(|x| (x / resolution).floor() as i64).collect();
        let hi: Vec<i64> = bbox.hi.iter().map(|x| (x / resolution).ceil() as i64).collect();
        let count: f64 = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as f64).product();
        if count > 4.0 * max_nodes as f64 {
            return Err(Error::DidNotConverge(max_nodes));
        }
        let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut keys: Vec<Vec<i64>> = Vec::new();
        let mut idx = lo.clone();
        loop {
            if d.contains_raw(&lattice_point(&idx, resolution)) {
                if keys.len() >= max_nodes {
                    return Err(Error::DidNotConverge(max_nodes));
                }
                ids.insert(idx.clone(), keys.len());
                keys.push(idx.clone());
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] <= hi[k] {
                    break;
                }
                idx[k] = lo[k];
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
        let offsets = king_offsets(lo.len());
        // each unordered pair once: offsets whose first nonzero entry is positive
        let forward: Vec<&Vec<i64>> =
            offsets.iter().filter(|o| o.iter().find(|x| **x != 0).is_some_and(|x| *x > 0)).collect();
        let points: Vec<Vec<C64>> = keys.iter().map(|k| lattice_point(k, resolution)).collect();
        let edges: Vec<(usize, usize, f64)> = keys
            .par_iter()
            .enumerate()
            .map(|(i, k)| -> Result<Vec<(usize, usize, f64)>> {
                let mut out = Vec::new();
                for off in &forward {
                    let nb: Vec<i64> = k.iter().zip(off.iter()).map(|(a, b)| a + b).collect();
                    if let Some(&j) = ids.get(&nb) {
                        if segment_inside(d, &points[i], &points[j]) {
                            out.push((i, j, metric.edge_length(&points[i], &points[j])?));
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(MetricGraph {
            nodes: points.into_iter().map(CPoint::from_vec_unchecked).collect(),
            edges,
            resolution,
        })
    }

    /// Node nearest to p.
    pub fn nearest(&self, p: &CPoint) -> Option<usize> {
        (0..self.nodes.len()).min_by(|&a, &b| {
            self.nodes[a].distance(p).total_cmp(&self.nodes[b].distance(p)).then(a.cmp(&b))
        })
    }

    /// Dijkstra between two nodes.
    pub fn distance(&self, from: usize, to: usize) -> Result<f64> {
        let n = self.nodes.len();
        if from >= n || to >= n {
            return Err(Error::InvalidInput("node index out of range".into()));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in &self.edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        let mut best = vec![f64::INFINITY; n];
        best[from] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Entry { cost: 0.0, node: from });
        while let Some(Entry { cost, node }) = heap.pop() {
            if node == to {
                return Ok(cost);
            }
            if cost > best[node] {
                continue;
            }
            for &(t, w) in &adj[node] {
                if cost + w < best[t] {
                    best[t] = cost + w;
                    heap.push(Entry { cost: cost + w, node: t });
                }
            }
        }
        Err(Error::ResolutionTooCoarse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::kob_distance_closed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn integrated_segment_in_disc() {
        let seg = SampledCurve::segment(&CPoint::origin(1), &CPoint::real(&[0.5]).unwrap(), 1).unwrap();
        let l = curve_length_metric(&Domain::unit_disc(), &seg, LengthMode::Integrated).unwrap();
        assert!((l - 0.5f64.atanh()).abs() < 1e-9, "{l}");
    }

    #[test]
    fn unit_circle_in_annulus_has_length_pi_squared() {
        let m = Domain::annulus_m(std::f64::consts::E).unwrap();
        let metric = LengthMetric::kobayashi(&m).with_scale(2.0).unwrap();
        let circle = SampledCurve::circle(c(0.0, 0.0), 1.0, 2000, 1).unwrap();
        let l = curve_length(&metric, &circle, LengthMode::Integrated).unwrap();
        // the polyline is inscribed: chord/arc = sin(π/N)/(π/N)
        let n = 2000.0;
        let inscribed = PI * PI * (PI / n).sin() / (PI / n);
        assert!((l - inscribed).abs() < 1e-6 * l, "{l} vs {inscribed}");
    }

    #[test]
    fn constant_curve_has_zero_length() {
        let p = CPoint::real(&[0.2]).unwrap();
        let curve = SampledCurve::new(vec![0.0, 1.0], vec![p.clone(), p], false).unwrap();
        for mode in [LengthMode::Integrated, LengthMode::PartitionSum] {
            assert_eq!(curve_length_metric(&Domain::unit_disc(), &curve, mode).unwrap(), 0.0);
        }
    }

    #[test]
    fn curve_leaving_domain_is_rejected() {
        // both samples inside, but the chord crosses the hole
        let ann = Domain::annulus(1.0, 3.0).unwrap();
        let curve = SampledCurve::new(
            vec![0.0, 1.0],
            vec![CPoint::real(&[2.0]).unwrap(), CPoint::real(&[-2.0]).unwrap()],
            false,
        )
        .unwrap();
        assert!(matches!(
            curve_length_metric(&ann, &curve, LengthMode::Integrated),
            Err(Error::CurveExitsDomain(0))
        ));
    }

    #[test]
    fn partition_sums_grow_under_refinement() {
        let d = Domain::centered_ball(2, 1.0).unwrap();
        let f = |t: f64| vec![c(0.6 * t.cos(), 0.2 * t.sin()), c(0.3 * (2.0 * t).sin(), 0.1)];
        let mut prev = 0.0;
        for n in [4, 8, 16, 32, 64] {
            let curve = SampledCurve::from_fn(0.0, 2.0 * PI, n, true, f).unwrap();
            let s = curve_length_metric(&d, &curve, LengthMode::PartitionSum).unwrap();
            assert!(s >= prev - 1e-12, "{s} < {prev}");
            prev = s;
        }
        let fine = SampledCurve::from_fn(0.0, 2.0 * PI, 512, true, f).unwrap();
        let integ = curve_length_metric(&d, &fine, LengthMode::Integrated).unwrap();
        let part = curve_length_metric(&d, &fine, LengthMode::PartitionSum).unwrap();
        assert!(part <= integ + 1e-9 && (integ - part) < 1e-3 * integ);
    }

    #[test]
    fn graph_distance_examples() {
        let disc = Domain::unit_disc();
        let d = kob_distance_graph(&disc, &CPoint::origin(1), &CPoint::real(&[0.5]).unwrap(), 0.02).unwrap();
        let exact = 0.5f64.atanh();
        assert!(d >= exact - 1e-9 && d <= 1.02 * exact, "{d}");

        let ball = Domain::centered_ball(2, 1.0).unwrap();
        let d = kob_distance_graph(&ball, &CPoint::origin(2), &CPoint::real(&[0.5, 0.0]).unwrap(), 0.05).unwrap();
        assert!(d >= exact - 1e-9 && d <= 1.03 * exact, "{d}");

        let p = CPoint::real(&[0.3]).unwrap();
        assert_eq!(kob_distance_graph(&disc, &p, &p, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn graph_distance_is_symmetric_and_bounded_below() {
        let disc = Domain::disc(c(0.1, 0.0), 1.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let mut pick = || loop {
                let z = c(rng.gen_range(-1.0..1.2), rng.gen_range(-1.1..1.1));
                if disc.contains_raw(&[z]) && disc.sdf(&[z]) > 0.05 {
                    return CPoint::new(vec![z]).unwrap();
                }
            };
            let (p, q) = (pick(), pick());
            let pq = kob_distance_graph(&disc, &p, &q, 0.05).unwrap();
            let qp = kob_distance_graph(&disc, &q, &p, 0.05).unwrap();
            assert!((pq - qp).abs() <= 1e-12 * pq.max(1.0), "{pq} vs {qp}");
            let exact = kob_distance_closed(&disc, &p, &q).unwrap();
            assert!(pq >= exact - 1e-9, "{pq} < {exact}");
        }
    }

    #[test]
    fn refinement_does_not_increase_distance() {
        let disc = Domain::unit_disc();
        let p = CPoint::new(vec![c(-0.4, 0.3)]).unwrap();
        let q = CPoint::new(vec![c(0.5, -0.2)]).unwrap();
        let coarse = kob_distance_graph(&disc, &p, &q, 0.1).unwrap();
        let fine = kob_distance_graph(&disc, &p, &q, 0.05).unwrap();
        assert!(fine <= coarse + 1e-6, "{fine} > {coarse}");
    }

    #[test]
    fn lattice_distance_approaches_core_arc_from_above() {
        // the core circle of M is a closed geodesic, so the arc from 1 to
        // e^{2i} realizes the distance: 2·π/(2 ln R)·2 = π at R = e, scale 2
        let m = Domain::annulus_m(std::f64::consts::E).unwrap();
        let metric = LengthMetric::kobayashi(&m).with_scale(2.0).unwrap();
        let a = CPoint::real(&[1.0]).unwrap();
        let b = CPoint::new(vec![C64::from_polar(1.0, 2.0)]).unwrap();
        let pi = std::f64::consts::PI;
        let mut last = f64::INFINITY;
        for h in [0.2, 0.1, 0.05] {
            let g = graph_distance(&metric, &a, &b, h).unwrap();
            assert!(g >= pi - 1e-9 && g <= last, "h = {h}: {g}");
            last = g;
        }
        assert!(last < 1.002 * pi, "{last}");
    }

    #[test]
    fn explicit_graph_agrees_with_lazy_search() {
        let disc = Domain::unit_disc();
        let metric = LengthMetric::kobayashi(&disc);
        let g = MetricGraph::build(&metric, 0.1, 10_000).unwrap();
        assert!(g.edges.iter().all(|e| e.2 > 0.0 && e.2.is_finite()));
        let a = g.nearest(&CPoint::origin(1)).unwrap();
        let b = g.nearest(&CPoint::real(&[0.5]).unwrap()).unwrap();
        let explicit = g.distance(a, b).unwrap();
        let lazy = kob_distance_graph(&disc, &g.nodes[a], &g.nodes[b], 0.1).unwrap();
        assert!((explicit - lazy).abs() < 1e-12, "{explicit} vs {lazy}");
    }

    #[test]
    fn estimated_metric_shares_values_across_symmetric_points() {
        let tube = Domain::tube_sphere(1, 0.25).unwrap();
        let metric = LengthMetric::kobayashi(&tube);
        let mut vals = Vec::new();
        for k in 0..6 {
            let t = k as f64 * 0.7;
            let p = [c(t.cos(), 0.0), c(t.sin(), 0.0)];
            let v = [c(-t.sin(), 0.0), c(t.cos(), 0.0)];
            vals.push(metric.density(&p, &v).unwrap());
        }
        assert_eq!(metric.memo_len(), 1);
        assert!(vals.iter().all(|x| (x - vals[0]).abs() <= 1e-14 * vals[0]));

        let ring = Domain::tube_circle(2, 0.3).unwrap();
        let metric = LengthMetric::kobayashi(&ring);
        for k in 0..4 {
            let w = C64::from_polar(1.0, k as f64);
            metric.density(&[w * 1.05, c(0.0, 0.1)], &[w * c(0.0, 1.0), c(0.2, 0.0)]).unwrap();
        }
        assert_eq!(metric.memo_len(), 1);
    }

    #[test]
    fn king_offsets_count() {
        assert_eq!(king_offsets(2).len(), 8);
        assert_eq!(king_offsets(4).len(), 80);
    }
}
