//! One coupling-filter step on a scalar linear-Gaussian problem, checked
//! against the closed-form conditional.

use transport_filter::experiment::{gaussian_conditioning_check, OracleCheckOptions};

fn main() -> transport_filter::Result<()> {
    for order in [1, 2] {
        let options = OracleCheckOptions {
            map_order: order,
            ..OracleCheckOptions::default()
        };
        let check = gaussian_conditioning_check(&options)?;
        println!("map order {order}: {}", if check.passed() { "PASS" } else { "FAIL" });
        for m in &check.measurements {
            println!("  {} = {:.4} (tolerance {})", m.label, m.value, m.tolerance);
        }
    }
    Ok(())
}
