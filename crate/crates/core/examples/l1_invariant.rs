//! ℓ₁ of annuli by loop-length minimization, and the homotopy verdict for
//! maps between annuli of different moduli.

use koblab::invariants::max_radial_deviation;
use koblab::{
    annulus_map_homotopy_verdict, l1_annulus, l1_annulus_general, Certificate, Domain, L1Budget, PolyMap, C64,
};

fn main() -> koblab::Result<()> {
    let budget = L1Budget::default();
    for big_r in [std::f64::consts::E, 4.0] {
        let rep = l1_annulus(big_r, 2.0, &budget)?;
        let dev = match &rep.certificate {
            Certificate::Curve(c) => max_radial_deviation(c, 1.0),
            Certificate::Mesh(_) => f64::NAN,
        };
        println!(
            "R = {big_r:.4}: ℓ₁ ≈ {:.6}, π²/ln R = {:.6}, loop stays within {dev:.1e} of |z| = 1",
            rep.value,
            rep.lower_bound.unwrap_or(f64::NAN)
        );
    }
    // same modulus, same invariant
    let a = l1_annulus_general(1.0, 9.0, 2.0, &budget)?.value;
    let b = l1_annulus_general(1.0 / 3.0, 3.0, 2.0, &budget)?.value;
    println!("A(1, 9): {a:.6}   A(1/3, 3): {b:.6}");

    let c = |re: f64| C64::new(re, 0.0);
    let wide = Domain::annulus(1.0, 10.0)?;
    let narrow = Domain::annulus(1.0, 2.0)?;
    let f = PolyMap::affine(&[vec![c(0.04)]], &[c(1.5)])?;
    let v = annulus_map_homotopy_verdict(&f, &wide, &narrow, 256)?;
    println!("A(1,10) → A(1,2), 1.5 + 0.04z: {:?}, winding {}", v.verdict, v.winding);
    let v = annulus_map_homotopy_verdict(&PolyMap::identity(1)?, &narrow, &Domain::annulus(1.0, 4.0)?, 256)?;
    println!("A(1,2) → A(1,4), z: {:?}, winding {}", v.verdict, v.winding);
    Ok(())
}
