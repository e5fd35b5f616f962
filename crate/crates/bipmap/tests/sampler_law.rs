//! Finite samplers against exact laws computed by enumeration, by a
//! chi-square goodness-of-fit test at a fixed seed.

use std::collections::BTreeMap;

use bipmap::finite::{sample_mobile_n, sample_sgt_n};
use bipmap::labels::BridgeMethod;
use bipmap::oracle::exact_nu_pushforward;
use bipmap::rng::RngStream;
use bipmap::tree::all_trees;
use bipmap::weights::{derive_tree_weights, FaceWeights};
use num_traits::ToPrimitive;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SAMPLES: usize = 40_000;

fn chi_square_p<K: Ord>(expected: &BTreeMap<K, f64>, observed: &BTreeMap<K, usize>) -> f64 {
    assert!(observed.keys().all(|k| expected.contains_key(k)), "sample outside the support");
    let n = SAMPLES as f64;
    let stat: f64 = expected
        .iter()
        .map(|(k, p)| {
            let o = *observed.get(k).unwrap_or(&0) as f64;
            (o - n * p).powi(2) / (n * p)
        })
        .sum();
    1.0 - ChiSquared::new((expected.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn simply_generated_trees_follow_the_product_weights() {
    let faces = FaceWeights::PowerLaw { c: 1.0, beta: 3.0 };
    let tw = derive_tree_weights(&faces).unwrap();
    let n = 5;
    let mut expected = BTreeMap::new();
    for t in all_trees(n) {
        let w: f64 = t.preorder().iter().map(|&v| tw.w(t.out(v))).product();
        expected.insert(t.canonical().outdegrees(), w);
    }
    let z: f64 = expected.values().sum();
    expected.values_mut().for_each(|p| *p /= z);
    let mut observed = BTreeMap::new();
    for k in 0..SAMPLES as u64 {
        let t = sample_sgt_n(&tw, n, &mut RngStream::new(11, k)).unwrap();
        *observed.entry(t.canonical().outdegrees()).or_insert(0) += 1;
    }
    let p = chi_square_p(&expected, &observed);
    assert!(p > 1e-4, "p = {p}");
}

#[test]
fn mobile_shapes_follow_the_exact_mobile_law() {
    for faces in [FaceWeights::uniform(), FaceWeights::PowerLaw { c: 1.0, beta: 5.0 }] {
        let tw = derive_tree_weights(&faces).unwrap();
        let n = 4;
        let (_, target) = exact_nu_pushforward(&faces, n).unwrap();
        let expected: BTreeMap<_, f64> = target.into_iter().map(|(k, p)| (k, p.to_f64().unwrap())).collect();
        let mut observed = BTreeMap::new();
        for k in 0..SAMPLES as u64 {
            let m = sample_mobile_n(&tw, n, &mut RngStream::new(12, k), BridgeMethod::StarsAndBars).unwrap();
            *observed.entry(m.tree.canonical().encode()).or_insert(0) += 1;
        }
        let p = chi_square_p(&expected, &observed);
        assert!(p > 1e-4, "{faces:?}: p = {p}");
    }
}
