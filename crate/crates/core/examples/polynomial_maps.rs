//! Polynomial maps: JSON form, composition and iteration.

use koblab::{PolyMap, C64};

fn main() -> koblab::Result<()> {
    let f = PolyMap::from_json(r#"{"n_in":1,"n_out":1,"terms":[{"idx":[1],"coef":[[0.5,0]]},{"idx":[0],"coef":[[0.25,0]]}]}"#)?;
    let g = PolyMap::from_json(r#"{"n_in":1,"n_out":1,"terms":[{"idx":[2],"coef":[[1,0]]}]}"#)?;
    let fg = f.compose(&g)?;
    println!("f∘g = {}", serde_json::to_string(&fg)?);
    println!("degree of f∘g∘g: {}", fg.compose(&g)?.degree());
    let f10 = f.iterate(10)?;
    println!("f¹⁰(0.9) = {:?}, fixed point 1/2", f10.eval(&[C64::new(0.9, 0.0)]));
    Ok(())
}
