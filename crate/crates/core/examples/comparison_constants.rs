//! Comparison constants for nested domains: the pointwise bound at a base
//! point and the uniform constant over samples.

use koblab::{lemma_compare_bound, uniform_monotonicity_constant, CPoint, Domain, OptimizerBudget, C64};

fn main() -> koblab::Result<()> {
    let budget = OptimizerBudget::light();
    let inner = Domain::unit_disc();
    let outer = Domain::disc(C64::new(0.0, 0.0), 2.0)?;
    for x in [0.0, 0.3, 0.6] {
        let r = lemma_compare_bound(&inner, &outer, &CPoint::real(&[x])?, 8, &budget)?;
        println!("discs at {x}: bound {:.6}, observed ratio {:.6}", r.c_bound, r.observed_ratio);
    }

    let pairs = [
        (Domain::centered_ball(2, 1.0)?, Domain::centered_ball(2, 1.5)?),
        (Domain::tube_sphere(1, 0.2)?, Domain::tube_sphere(1, 0.4)?),
    ];
    for (u, v) in &pairs {
        let r = uniform_monotonicity_constant(u, v, 6, &budget)?;
        println!(
            "{} ⊂ {}: c = {:.6} over {} samples ({:?}), δ = {:.3}",
            u.name(),
            v.name(),
            r.c,
            r.samples.len(),
            r.ratio_source,
            r.delta
        );
    }
    Ok(())
}
