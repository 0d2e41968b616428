//! Fixed points of holomorphic self-maps with relatively compact image.

use koblab::cli::contraction_examples;
use koblab::{check_strict_image, iterate_to_fixed_point, FixedPointOptions};

fn main() -> koblab::Result<()> {
    for (name, f, u, starts, _) in contraction_examples() {
        let image = check_strict_image(&f, &u, 2000)?;
        let r = iterate_to_fixed_point(&f, &u, &starts, &FixedPointOptions::default())?;
        println!("{name} on {}: margin {:.4}, z0 = {:?}", u.name(), image.delta, r.z0.coords());
        println!("  steps per start {:?}, limits agree to {:.1e}", r.steps, r.distinct_starts_agreement);
        let shown: Vec<String> = r.kob_rates.iter().take(8).map(|d| format!("{d:.2e}")).collect();
        println!("  d_U(z0, fᵏp): {}", shown.join(" "));
        println!("  tail ratios ≤ {:.4}, certified c = {:.4}", r.tail_ratios.iter().copied().fold(0.0, f64::max), r.c_certified);
    }
    Ok(())
}
