//! Exact samplers for objects with `n` edges: simply generated trees,
//! labelled mobiles, and the pointed maps they encode.
//!
//!     cargo run --release --example finite_samplers -- 2000

use bipmap::finite::{sample_map_n, sample_mobile_n, sample_sgt_n};
use bipmap::labels::BridgeMethod;
use bipmap::rng::RngStream;
use bipmap::weights::{derive_tree_weights, FaceWeights};

fn main() -> bipmap::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(500);
    let tw = derive_tree_weights(&FaceWeights::PowerLaw { c: 1.0, beta: 5.0 })?;

    let t = sample_sgt_n(&tw, n, &mut RngStream::new(1, 0))?;
    let max_out = t.preorder().iter().map(|&v| t.out(v)).max().unwrap_or(0);
    println!("tree: {} edges, height {}, largest outdegree {max_out}", t.edges(), t.height());

    let m = sample_mobile_n(&tw, n, &mut RngStream::new(1, 1), BridgeMethod::StarsAndBars)?;
    let (lo, hi) = (m.labels.iter().min().unwrap(), m.labels.iter().max().unwrap());
    println!("mobile: {} vertices, labels in [{lo}, {hi}], eps {}", m.tree.len(), m.eps);

    let (_, map) = sample_map_n(&tw, n, &mut RngStream::new(1, 2))?;
    let max_deg = (0..map.num_vertices() as u32).map(|v| map.degree(v)).max().unwrap_or(0);
    println!("map: {} vertices, {} edges, largest degree {max_deg}", map.num_vertices(), map.num_edges());
    Ok(())
}
