//! Upper bounds on ℓ_k of tubes around the unit circle and sphere, and
//! degrees of sphere maps.

use koblab::invariants::{core_sphere_mesh, default_tube_density};
use koblab::{lk_tube_upper, sphere_degree, vk_tube_upper, SphereMeshMap, SphereProjection, C64};

fn main() -> koblab::Result<()> {
    for r in [0.1, 0.2, 0.3] {
        let rep = lk_tube_upper(1, r, default_tube_density(1), false)?;
        println!("k = 1, r = {r}: ℓ₁ ≤ {:.4}", rep.value);
    }
    let rep = lk_tube_upper(2, 0.25, default_tube_density(2), false)?;
    println!("k = 2, r = 0.25: ℓ₂ ≤ {:.3}", rep.value);

    // wrapping the circle twice is admissible too, and costs more
    let once = core_sphere_mesh(1, 64, 1.0)?;
    let twice = SphereMeshMap::circle(128)?.with_map(|x| {
        let w = C64::new(x[0], x[1]).powu(2);
        vec![C64::new(w.re, 0.0), C64::new(w.im, 0.0)]
    })?;
    println!("degrees: {} and {}", sphere_degree(&once, SphereProjection::RealPart)?, sphere_degree(&twice, SphereProjection::RealPart)?);
    println!("V¹ bounds at r = 0.25: {:.4} and {:.4}", vk_tube_upper(1, 0.25, &once)?, vk_tube_upper(1, 0.25, &twice)?);

    let antipodal = SphereMeshMap::icosphere(2)?.with_map(|x| x.iter().map(|t| C64::new(-t, 0.0)).collect())?;
    println!("antipodal map of S²: degree {}", sphere_degree(&antipodal, SphereProjection::RealPart)?);
    Ok(())
}
