//! Admissibility certificate f(Δ̄) ⊂ U for polynomial discs.
//!
//! With L = Σ j‖a_j‖ the map f is L-Lipschitz on the closed disc, and the
//! signed distance of U is 1-Lipschitz, so sdf(f(z_c)) > L·r covers every
//! point of a cell of radius r about z_c. Cells failing the test are split
//! until they pass, hit the boundary, or exhaust the budget.

use std::f64::consts::TAU;

use crate::geometry::{Domain, C64};

use super::{eval_into, lipschitz};

const MAX_EVALS: usize = 2_000_000;
const MIN_CELL: f64 = 1e-9;

/// True when f maps the closed unit disc into `d`. For convex `d` the
/// boundary circle suffices (holomorphic images lie in the hull of f(S¹)).
pub(super) fn admissible(d: &Domain, coeffs: &[Vec<C64>], convex: bool) -> bool {
    let lip = lipschitz(coeffs);
    let mut w = vec![C64::new(0.0, 0.0); coeffs[0].len()];
    let mut evals = 0usize;
    let mut margin_at = |z: C64, evals: &mut usize| {
        *evals += 1;
        eval_into(coeffs, z, &mut w);
        d.sdf(&w)
    };

    if convex {
        let n0 = 256;
        let mut stack: Vec<(f64, f64)> = (0..n0)
            .map(|k| (TAU * k as f64 / n0 as f64, TAU * (k + 1) as f64 / n0 as f64))
            .collect();
        while let Some((a, b)) = stack.pop() {
            let half = 0.5 * (b - a);
            let s = margin_at(C64::from_polar(1.0, a + half), &mut evals);
            if s > lip * half {
                continue;
            }
            if s <= 0.0 || half < MIN_CELL || evals > MAX_EVALS {
                return false;
            }
            let mid = a + half;
            stack.push((a, mid));
            stack.push((mid, b));
        }
        return true;
    }

    // polar cells [r0, r1] × [a, b]; a path from the center to any cell
    // point has length at most Δr/2 + r1·Δθ/2
    let (nr, na) = (8, 64);
    let mut stack: Vec<[f64; 4]> = Vec::with_capacity(nr * na);
    for i in 0..nr {
        for k in 0..na {
            stack.push([
                i as f64 / nr as f64,
                (i + 1) as f64 / nr as f64,
                TAU * k as f64 / na as f64,
                TAU * (k + 1) as f64 / na as f64,
            ]);
        }
    }
    while let Some([r0, r1, a, b]) = stack.pop() {
        let (rc, ac) = (0.5 * (r0 + r1), 0.5 * (a + b));
        let radial = 0.5 * (r1 - r0);
        let angular = r1 * 0.5 * (b - a);
        let s = margin_at(C64::from_polar(rc, ac), &mut evals);
        if s > lip * (radial + angular) {
            continue;
        }
        if s <= 0.0 || radial + angular < MIN_CELL || evals > MAX_EVALS {
            return false;
        }
        if radial > angular {
            stack.push([r0, rc, a, b]);
            stack.push([rc, r1, a, b]);
        } else {
            stack.push([r0, r1, a, ac]);
            stack.push([r0, r1, ac, b]);
        }
    }
    true
}
