//! Curve lengths and lattice shortest paths in the canonical annulus.

use koblab::{curve_length, graph_distance, CPoint, Domain, LengthMetric, LengthMode, SampledCurve, C64};

fn main() -> koblab::Result<()> {
    let m = Domain::annulus_m(std::f64::consts::E)?;
    let metric = LengthMetric::kobayashi(&m).with_scale(2.0)?;

    for (radius, label) in [(1.0, "core circle"), (1.3, "circle |z| = 1.3"), (0.7, "circle |z| = 0.7")] {
        let c = SampledCurve::circle(C64::new(0.0, 0.0), radius, 256, 1)?;
        println!("{label:<18} length {:.6}", curve_length(&metric, &c, LengthMode::Integrated)?);
    }
    println!("π² = {:.6}", std::f64::consts::PI.powi(2));

    let a = CPoint::real(&[1.0])?;
    let b = CPoint::new(vec![C64::from_polar(1.0, 2.0)])?;
    let arc = SampledCurve::from_fn(0.0, 2.0, 200, false, |t| vec![C64::from_polar(1.0, t)])?;
    let along_arc = curve_length(&metric, &arc, LengthMode::Integrated)?;
    for h in [0.2, 0.1, 0.05] {
        println!("lattice h = {h:<5} d(1, e^2i) ≤ {:.6}", graph_distance(&metric, &a, &b, h)?);
    }
    println!("along the core arc      {along_arc:.6}");
    Ok(())
}
