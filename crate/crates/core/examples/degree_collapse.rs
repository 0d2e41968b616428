//! Iterating a map between nested circle tubes: deg(fⁿ) = (deg f)ⁿ while
//! the image shrinks into a ball, so deg f = 0.

use koblab::{degree_collapse_demo, tube_map_degree, Domain, PolyMap, Term, C64};

fn main() -> koblab::Result<()> {
    let c = |re: f64| C64::new(re, 0.0);
    let source = Domain::tube_circle(2, 0.4)?;
    let target = Domain::tube_circle(2, 0.2)?;
    let f = PolyMap::new(
        2,
        2,
        vec![
            Term { idx: vec![0, 0], coef: vec![c(0.92), c(0.0)] },
            Term { idx: vec![2, 0], coef: vec![c(0.04), c(0.0)] },
            Term { idx: vec![0, 1], coef: vec![c(0.0), c(0.1)] },
        ],
    )?;
    let r = degree_collapse_demo(&f, &source, &target, 6, 256)?;
    println!("deg f = {}, deg fⁿ = {:?}", r.degree, r.iterate_degrees);
    let radii: Vec<String> = r.image_radii.iter().map(|x| format!("{x:.2e}")).collect();
    println!("image radii {}", radii.join(" "));
    println!("inside a ball in the target from step {:?}", r.collapse_step);

    // a map of degree 2 between tubes that are not nested the right way
    let square = PolyMap::new(2, 2, vec![Term { idx: vec![2, 0], coef: vec![c(1.0), c(0.0)] }])?;
    let thin = Domain::tube_circle(2, 0.1)?;
    let thick = Domain::tube_circle(2, 0.5)?;
    println!("z1² from T(0.1) to T(0.5): degree {}", tube_map_degree(&square, &thin, &thick, 256)?);
    match degree_collapse_demo(&PolyMap::identity(2)?, &source, &source, 4, 256) {
        Err(e) => println!("identity: {e}"),
        Ok(r) => println!("identity unexpectedly accepted: {r:?}"),
    }
    Ok(())
}
