//! Hausdorff k-measures from parameter-cell covers.

use koblab::{
    flat_calibration, hausdorff_k_measure, hausdorff_k_measure_with, Domain, LengthMetric, MeasureBudget,
    MeasuredObject, MetricKind, SampledCurve, SphereMeshMap, C64,
};

fn main() -> koblab::Result<()> {
    let m = Domain::annulus_m(std::f64::consts::E)?;
    let metric = LengthMetric::kobayashi(&m).with_scale(2.0)?;
    let circle = SampledCurve::circle(C64::new(0.0, 0.0), 1.0, 256, 1)?;
    let r = hausdorff_k_measure_with(&metric, MeasuredObject::Curve(&circle), 1, &[0.5, 0.1, 0.02], &MeasureBudget::default())?;
    for e in &r.schedule {
        println!("ε = {:<5} pieces {:>5}  Σδ = {:.6}", e.epsilon, e.pieces.len(), e.total);
    }
    println!("μ¹ of the core circle: {:.6} (π² = {:.6})", r.value, std::f64::consts::PI.powi(2));

    // a round sphere of radius 0.3 in the unit ball of C³, measured with Σδ²
    let ball = Domain::centered_ball(3, 1.0)?;
    let mesh = SphereMeshMap::icosphere(3)?.with_map(|x| x.iter().map(|t| C64::new(0.3 * t, 0.0)).collect())?;
    let cal = flat_calibration(&mesh)?;
    let eu = hausdorff_k_measure(&ball, MeasuredObject::Mesh(&mesh), 2, MetricKind::Euclidean, &[0.1, 0.05])?;
    println!(
        "Euclidean μ² {:.5}, divided by flat calibration {cal:.4}: {:.5}, area 4π·0.09 = {:.5}",
        eu.value,
        eu.value / cal,
        4.0 * std::f64::consts::PI * 0.09
    );
    let kob = hausdorff_k_measure(&ball, MeasuredObject::Mesh(&mesh), 2, MetricKind::Kobayashi, &[0.1, 0.05])?;
    println!("Kobayashi μ² {:.5} (calibrated {:.5})", kob.value, kob.value / cal);
    Ok(())
}
