//! Compares analytic gradients with central differences for every trained
//! component, then shows that a corrupted gradient is caught.

use darec::harness::gradcheck_suite;

fn main() -> anyhow::Result<()> {
    for corrupt in [None, Some("u-darec")] {
        println!("corrupted: {}", corrupt.unwrap_or("nothing"));
        for c in gradcheck_suite(0, 5, corrupt)? {
            println!(
                "  {:<14} {} max error {:.2e} (tolerance {:.0e})",
                c.component,
                if c.passed() { "ok  " } else { "FAIL" },
                c.max_error,
                c.tolerance
            );
        }
    }
    Ok(())
}
