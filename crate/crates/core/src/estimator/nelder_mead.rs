//! Nelder–Mead simplex search with dimension-adaptive coefficients
//! (Gao & Han), used for the analytic-disc search.

pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub fx: f64,
}

/// Minimizes `f` starting from a right-angled simplex of edge `step` at
/// `x0`. Stops after `max_iters` iterations or once the spread of simplex
/// values falls below `ftol`.
pub(crate) fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    ftol: f64,
) -> SimplexResult {
    let d = x0.len();
    if d == 0 {
        let fx = f(x0);
        return SimplexResult { x: x0.to_vec(), fx };
    }
    let df = d as f64;
    let (alpha, gamma, rho, sigma) = if d > 1 {
        (1.0, 1.0 + 2.0 / df, 0.75 - 1.0 / (2.0 * df), 1.0 - 1.0 / df)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    pts.push(x0.to_vec());
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        pts.push(x);
    }
    let mut vals: Vec<f64> = pts.iter().map(|x| f(x)).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    let mut centroid = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut trial2 = vec![0.0; d];

    for _ in 0..max_iters {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[d];
        let second = order[d - 1];
        let spread = vals[worst] - vals[best];
        if spread.abs() <= ftol * (vals[best].abs() + 1e-300) {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..d] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / df;
            }
        }

        for j in 0..d {
            trial[j] = centroid[j] + alpha * (centroid[j] - pts[worst][j]);
        }
        let fr = f(&trial);

        if fr < vals[best] {
            for j in 0..d {
                trial2[j] = centroid[j] + gamma * (trial[j] - centroid[j]);
            }
            let fe = f(&trial2);
                if fe < fr {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = fr;
            continue;
        }

        // contraction, outside or inside
        let outside = fr < vals[worst];
        for j in 0..d {
            trial2[j] = if outside {
                centroid[j] + rho * (trial[j] - centroid[j])
            } else {
                centroid[j] - rho * (centroid[j] - pts[worst][j])
            };
        }
        let fc = f(&trial2);
        if (outside && fc <= fr) || (!outside && fc < vals[worst]) {
            pts[worst].copy_from_slice(&trial2);
            vals[worst] = fc;
            continue;
        }

        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + sigma * (*x - a);
            }
            vals[i] = f(&pts[i]);
            }
    }

    let best = (0..=d)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    SimplexResult { x: pts[best].clone(), fx: vals[best] }
}
