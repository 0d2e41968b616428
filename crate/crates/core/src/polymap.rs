//! Polynomial maps ℂⁿ → ℂᵐ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CPoint, C64};

/// One monomial z^idx with a coefficient vector in ℂᵐ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub idx: Vec<u32>,
    pub coef: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolyMap")]
pub struct PolyMap {
    n_in: usize,
    n_out: usize,
    terms: Vec<Term>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolyMap {
    n_in: usize,
    n_out: usize,
    terms: Vec<Term>,
}

impl TryFrom<RawPolyMap> for PolyMap {
    type Error = Error;

    fn try_from(raw: RawPolyMap) -> Result<Self> {
        PolyMap::new(raw.n_in, raw.n_out, raw.terms)
    }
}

type Poly = BTreeMap<Vec<u32>, C64>;

impl PolyMap {
    /// Validates shapes and merges repeated monomials.
    pub fn new(n_in: usize, n_out: usize, terms: Vec<Term>) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::InvalidInput("polynomial map needs n_in, n_out ≥ 1".into()));
        }
        let mut merged: BTreeMap<Vec<u32>, Vec<C64>> = BTreeMap::new();
        for t in terms {
            if t.idx.len() != n_in {
                return Err(Error::InvalidInput(format!(
                    "multi-index {:?} has {} entries, expected {n_in}",
                    t.idx,
                    t.idx.len()
                )));
            }
            if t.coef.len() != n_out {
                return Err(Error::InvalidInput(format!(
                    "coefficient has {} entries, expected {n_out}",
                    t.coef.len()
                )));
            }
            if t.coef.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
            let slot = merged.entry(t.idx).or_insert_with(|| vec![C64::new(0.0, 0.0); n_out]);
            slot.iter_mut().zip(&t.coef).for_each(|(a, b)| *a += b);
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.iter().any(|z| *z != C64::new(0.0, 0.0)))
            .map(|(idx, coef)| Term { idx, coef })
            .collect();
        Ok(PolyMap { n_in, n_out, terms })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let terms = (0..n)
            .map(|i| {
                let mut idx = vec![0; n];
                idx[i] = 1;
                let mut coef = vec![C64::new(0.0, 0.0); n];
                coef[i] = C64::new(1.0, 0.0);
                Term { idx, coef }
            })
            .collect();
        Self::new(n, n, terms)
    }

    pub fn constant(n_in: usize, value: &[C64]) -> Result<Self> {
        Self::new(n_in, value.len(), vec![Term { idx: vec![0; n_in], coef: value.to_vec() }])
    }

    /// z ↦ A z + b with A given row by row.
    pub fn affine(a: &[Vec<C64>], b: &[C64]) -> Result<Self> {
        let n_out = b.len();
        if a.len() != n_out {
            return Err(Error::InvalidInput("matrix rows must match the offset".into()));
        }
        let n_in = a.first().map_or(0, |r| r.len());
        let mut terms = vec![Term { idx: vec![0; n_in], coef: b.to_vec() }];
        for j in 0..n_in {
            let mut idx = vec![0; n_in];
            idx[j] = 1;
            terms.push(Term { idx, coef: a.iter().map(|row| row[j]).collect() });
        }
        Self::new(n_in, n_out, terms)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Total degree (0 for constants and the zero map).
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.idx.iter().sum()).max().unwrap_or(0)
    }

    /// Unchecked evaluation; `z` must have n_in entries.
    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_out];
        for t in &self.terms {
            let m: C64 = t.idx.iter().zip(z).map(|(&e, zi)| zi.powu(e)).product();
            out.iter_mut().zip(&t.coef).for_each(|(o, c)| *o += c * m);
        }
        out
    }

    pub fn apply(&self, p: &CPoint) -> Result<CPoint> {
        if p.dim() != self.n_in {
            return Err(Error::DimensionMismatch { expected: self.n_in, got: p.dim() });
        }
        CPoint::new(self.eval(p.coords()))
    }

    /// Differential at z applied to v.
    pub fn differential(&self, z: &[C64], v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_out];
        for t in &self.terms {
            for (j, &e) in t.idx.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut m = C64::new(e as f64, 0.0) * v[j];
                for (i, (&ei, zi)) in t.idx.iter().zip(z).enumerate() {
                    m *= zi.powu(if i == j { ei - 1 } else { ei });
                }
                out.iter_mut().zip(&t.coef).for_each(|(o, c)| *o += c * m);
            }
        }
        out
    }

    fn components(&self) -> Vec<Poly> {
        (0..self.n_out)
            .map(|k| self.terms.iter().map(|t| (t.idx.clone(), t.coef[k])).collect())
            .collect()
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &PolyMap) -> Result<PolyMap> {
        if inner.n_out != self.n_in {
            return Err(Error::DimensionMismatch { expected: self.n_in, got: inner.n_out });
        }
        let m = inner.n_in;
        let comps = inner.components();
        let one: Poly = [(vec![0; m], C64::new(1.0, 0.0))].into_iter().collect();
        // powers[i][e] = (inner_i)^e, built on demand
        let mut powers: Vec<Vec<Poly>> = vec![vec![one.clone()]; self.n_in];
        let mut acc: Vec<Poly> = vec![Poly::new(); self.n_out];
        for t in &self.terms {
            let mut mono = one.clone();
            for (i, &e) in t.idx.iter().enumerate() {
                while powers[i].len() <= e as usize {
                    let next = poly_mul(powers[i].last().expect("nonempty"), &comps[i]);
                    powers[i].push(next);
                }
                mono = poly_mul(&mono, &powers[i][e as usize]);
            }
            for (k, c) in t.coef.iter().enumerate() {
                for (idx, v) in &mono {
                    *acc[k].entry(idx.clone()).or_insert(C64::new(0.0, 0.0)) += c * v;
                }
            }
        }
        let mut terms: BTreeMap<Vec<u32>, Vec<C64>> = BTreeMap::new();
        for (k, poly) in acc.into_iter().enumerate() {
            for (idx, v) in poly {
                terms.entry(idx).or_insert_with(|| vec![C64::new(0.0, 0.0); self.n_out])[k] = v;
            }
        }
        PolyMap::new(m, self.n_out, terms.into_iter().map(|(idx, coef)| Term { idx, coef }).collect())
    }

    /// The n-fold iterate (n ≥ 1) of a self-map.
    pub fn iterate(&self, n: usize) -> Result<PolyMap> {
        if self.n_in != self.n_out {
            return Err(Error::InvalidInput("only self-maps can be iterated".into()));
        }
        if n == 0 {
            return PolyMap::identity(self.n_in);
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<PolyMap> {
        Ok(serde_json::from_str(text)?)
    }
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ia, ca) in a {
        for (ib, cb) in b {
            let idx: Vec<u32> = ia.iter().zip(ib).map(|(x, y)| x + y).collect();
            *out.entry(idx).or_insert(C64::new(0.0, 0.0)) += ca * cb;
        }
    }
    out
}
