//! Closed-form Kobayashi-Royden lengths and distances on the model domains.

use koblab::{
    annulus_canonical_density, kob_distance_closed, kob_royden_closed, poincare_disc_density, CPoint, Domain,
    TVector, C64,
};

fn main() -> koblab::Result<()> {
    for r in [0.0, 0.5, 0.9, 0.99] {
        let at2 = poincare_disc_density(C64::new(r, 0.0), 2.0)?.value;
        println!("disc density at |z| = {r:<5} scale 2: {at2:.6}");
    }

    // the canonical annulus 1/√R < |z| < √R is thinnest in the metric on |z| = 1
    let big_r = std::f64::consts::E;
    for x in [0.7, 1.0, 1.4] {
        let v = annulus_canonical_density(C64::new(x, 0.0), big_r, 2.0)?.value;
        println!("annulus R = e, density at {x}: {v:.6}");
    }

    let ball = Domain::centered_ball(2, 1.0)?;
    let poly = Domain::polydisc(vec![1.0, 2.0])?;
    let p = CPoint::real(&[0.3, 0.4])?;
    let v = TVector::real(&[1.0, -1.0])?;
    println!("ball     F(p, v) = {:.6}", kob_royden_closed(&ball, &p, &v)?.value);
    println!("polydisc F(p, v) = {:.6}", kob_royden_closed(&poly, &p, &v)?.value);

    let q = CPoint::real(&[-0.2, 0.1])?;
    println!("ball     d(p, q) = {:.6}", kob_distance_closed(&ball, &p, &q)?);
    let disc = Domain::unit_disc();
    let (a, b) = (CPoint::real(&[0.0])?, CPoint::real(&[0.5])?);
    println!("disc     d(0, 1/2) = {:.6} = artanh(1/2)", kob_distance_closed(&disc, &a, &b)?);
    Ok(())
}
