//! Return probabilities of simple random walk on limit balls and the
//! fitted spectral dimension. The full-size run is the `spectral-run`
//! subcommand; this one is small enough to finish in seconds.
//!
//!     cargo run --release --example spectral_walk

use std::sync::Arc;

use bipmap::laws::offspring_laws;
use bipmap::rng::RngStream;
use bipmap::walk::spectral_ensemble;
use bipmap::weights::FaceWeights;

fn main() -> bipmap::Result<()> {
    let set = Arc::new(offspring_laws(&FaceWeights::PowerLaw { c: 1.0, beta: 5.0 })?.sampler()?);
    let rep = spectral_ensemble(set, &RngStream::new(7, 0), 8, 200, 1024, 2000, [32, 512], 1 << 24)?;
    for &(n, p, se) in rep.curve.iter().filter(|c| c.0.is_power_of_two()) {
        println!("p(2n) at n = {n:>4}: {p:.5} +- {se:.5}");
    }
    println!(
        "d_s = {:.3} +- {:.3} (jackknife), per map {:.3} sd {:.3}",
        rep.annealed.ds_estimate, rep.jackknife_stderr, rep.per_map_mean, rep.per_map_sd
    );
    Ok(())
}
