//! The two bijections on a small example: the tree transform that moves
//! outdegrees onto black vertices, and the BDG construction from a
//! labelled mobile to a pointed bipartite map.
//!
//!     cargo run --example bijections

use bipmap::bdg::{map_checks, phi_build};
use bipmap::finite::{sample_mobile_n, sample_sgt_n};
use bipmap::labels::BridgeMethod;
use bipmap::psi::{psi_forward, psi_inverse};
use bipmap::rng::RngStream;
use bipmap::weights::{derive_tree_weights, FaceWeights};

fn main() -> bipmap::Result<()> {
    let tw = derive_tree_weights(&FaceWeights::uniform())?;

    let t = sample_sgt_n(&tw, 6, &mut RngStream::new(3, 0))?;
    let (m, trace) = psi_forward(&t)?;
    println!("tree     {:?}", t.outdegrees());
    println!("image    {:?}", m.outdegrees());
    println!("leaf eta {:?}", trace.eta);
    assert!(psi_inverse(&m)?.same_shape(&t));
    println!("inverse recovers the tree");

    let mobile = sample_mobile_n(&tw, 5, &mut RngStream::new(3, 1), BridgeMethod::StarsAndBars)?;
    println!("\nmobile labels {:?}", mobile.labels);
    let (map, _) = phi_build(&mobile)?;
    println!("map: {} vertices, {} edges", map.num_vertices(), map.num_edges());
    println!("{:?}", map_checks(&mobile, &map));
    print!("{}", map.to_dot());
    Ok(())
}
