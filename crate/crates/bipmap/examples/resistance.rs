//! Volume and effective resistance of `d#` balls in a limit map, with the
//! shorting comparison against the star tree.
//!
//!     cargo run --release --example resistance

use std::sync::Arc;

use bipmap::labels::BridgeMethod;
use bipmap::laws::offspring_laws;
use bipmap::limit::LimitMobile;
use bipmap::resistance::SharpBall;
use bipmap::rng::RngStream;
use bipmap::weights::FaceWeights;

fn main() -> bipmap::Result<()> {
    let set = Arc::new(offspring_laws(&FaceWeights::PowerLaw { c: 1.0, beta: 5.0 })?.sampler()?);
    let mut lm = LimitMobile::new(set, &RngStream::new(9, 0), BridgeMethod::StarsAndBars, 1 << 24)?;
    println!("{:>3} {:>8} {:>9} {:>9} {:>9} {:>9}", "R", "omega", "omega/R^2", "R_eff", "R_sharp", "R_star");
    for r in [2u32, 4, 8, 16] {
        let ball = SharpBall::build(&mut lm, r)?;
        let omega = ball.volume_profile().omega[r as usize];
        let sh = ball.shorting_check()?;
        let j = ball.j_lambda(20.0)?;
        println!(
            "{r:>3} {omega:>8} {:>9.3} {:>9.4} {:>9.4} {:>9.4}",
            omega as f64 / (r * r) as f64,
            j.reff_to_complement,
            sh.r_sharp,
            sh.r_star
        );
    }
    Ok(())
}
