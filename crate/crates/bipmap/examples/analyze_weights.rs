//! Phase diagram of a few weight sequences: the tilted offspring law, its
//! mean `kappa`, and the derived laws used by the limit sampler.
//!
//!     cargo run --example analyze_weights

use bipmap::laws::offspring_laws;
use bipmap::numeric::rat;
use bipmap::weights::FaceWeights;

fn main() -> bipmap::Result<()> {
    let families = [
        ("uniform", FaceWeights::uniform()),
        ("quadrangulations, q = 1/12", FaceWeights::quadrangulation(rat(1, 12))),
        ("power law c=1 beta=5", FaceWeights::PowerLaw { c: 1.0, beta: 5.0 }),
        ("power law c=1/2 beta=4", FaceWeights::PowerLaw { c: 0.5, beta: 4.0 }),
        ("power law c=1 beta=3.5", FaceWeights::PowerLaw { c: 1.0, beta: 3.5 }),
    ];
    println!("{:<28} {:>10} {:>8} {:>8} {:>8}  phase", "family", "tau", "kappa", "kappa~", "pi0");
    for (name, faces) in families {
        let laws = offspring_laws(&faces)?;
        println!(
            "{:<28} {:>10.6} {:>8.4} {:>8.4} {:>8.4}  {:?}",
            name,
            laws.tau(),
            laws.kappa,
            laws.kappa_tilde,
            laws.pi0,
            laws.phase()
        );
    }

    let laws = offspring_laws(&FaceWeights::PowerLaw { c: 1.0, beta: 5.0 })?;
    println!("\npower law c=1 beta=5, first terms:");
    println!("{:>3} {:>10} {:>10} {:>10}", "i", "pi", "hat", "tilde");
    for i in 0..8 {
        println!("{i:>3} {:>10.6} {:>10.6} {:>10.6}", laws.pi(i), laws.hat(i), laws.tilde(i));
    }
    println!("mass of the hat law at infinity: {:.6}", laws.hat_black_infinite());
    Ok(())
}
