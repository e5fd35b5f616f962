//! Certified balls of the local limit around the root edge, grown lazily
//! until every vertex within the radius has all its neighbours.
//!
//!     cargo run --release --example limit_ball -- 12

use std::sync::Arc;

use bipmap::laws::offspring_laws;
use bipmap::limit::sample_uiptree_ball;
use bipmap::rng::RngStream;
use bipmap::weights::FaceWeights;

fn main() -> bipmap::Result<()> {
    let r: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    for (name, faces) in [
        ("uniform weights", FaceWeights::uniform()),
        ("power law c=1 beta=5", FaceWeights::PowerLaw { c: 1.0, beta: 5.0 }),
    ] {
        let set = Arc::new(offspring_laws(&faces)?.sampler()?);
        println!("{name}, radius {r}");
        for k in 0..5 {
            let (lm, ball) = sample_uiptree_ball(set.clone(), &RngStream::new(5, k), r, 1 << 24)?;
            let mut shells = vec![0usize; r as usize + 1];
            for &(_, d) in &ball.members {
                shells[d as usize] += 1;
            }
            println!("  sample {k}: {} vertices, shells {shells:?}, {} stored nodes", ball.len(), lm.nodes());
        }
    }
    Ok(())
}
