//! Exhaustive checks on every small object: bijections, measures and
//! label counts. Prints one line per check.
//!
//!     cargo run --release --example verify -- 5

use bipmap::oracle::verify_suite;

fn main() -> bipmap::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);
    let checks = verify_suite(n)?;
    for c in &checks {
        println!("{:<40} {:>8} cases {:>4} violations", c.name, c.cases, c.violations);
    }
    let bad = checks.iter().filter(|c| !c.passed()).count();
    println!("{bad} failing");
    if bad > 0 {
        std::process::exit(1);
    }
    Ok(())
}
