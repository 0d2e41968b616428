//! Upper bounds on the Kobayashi-Royden metric from polynomial disc search,
//! checked against the closed forms and then used on a tube.

use koblab::{estimate_disc, kob_royden_closed, CPoint, Domain, OptimizerBudget, TVector};

fn main() -> koblab::Result<()> {
    let budget = OptimizerBudget::with_degree(6);
    let cases = [
        (Domain::unit_disc(), CPoint::real(&[0.6])?, TVector::real(&[1.0])?),
        (Domain::centered_ball(2, 1.0)?, CPoint::real(&[0.2, 0.3])?, TVector::real(&[0.0, 1.0])?),
        (Domain::polydisc(vec![1.0, 0.5])?, CPoint::real(&[0.1, -0.2])?, TVector::real(&[1.0, 1.0])?),
    ];
    for (d, p, v) in &cases {
        let exact = kob_royden_closed(d, p, v)?.value;
        let est = estimate_disc(d, p, v, &budget, &[])?;
        println!(
            "{:<8} closed {exact:.6}  search {:.6}  (degree {} disc)",
            d.name(),
            est.value.value,
            est.candidate.degree
        );
    }

    // no closed form here: the search result is the only number available
    let tube = Domain::tube_sphere(1, 0.3)?;
    let p = CPoint::real(&[1.1, 0.0])?;
    for v in [TVector::real(&[1.0, 0.0])?, TVector::real(&[0.0, 1.0])?] {
        let est = estimate_disc(&tube, &p, &v, &OptimizerBudget::light(), &[])?;
        println!("tube sphere r=0.3 at (1.1, 0), v = {:?}: {:.6}", v.comps(), est.value.value);
    }
    Ok(())
}
