//! Exact samplers for trees, mobiles and maps with a fixed number of edges.
//!
//! The outdegree sequence of a simply generated tree with `n` edges is an
//! exchangeable sequence of `n + 1` weights conditioned on summing to `n`.
//! It is drawn by splitting the sequence in halves recursively and sampling
//! each half-sum from the convolution powers of a tilted, truncated law;
//! the cycle lemma then picks the unique rotation that encodes a tree.

use std::collections::HashMap;

use crate::bdg::phi_build;
use crate::error::{Error, Result};
use crate::labels::{random_labels, BridgeMethod, Mobile};
use crate::map::PlanarMap;
use crate::numeric::log_sum_exp;
use crate::psi::psi_forward;
use crate::rng::RngStream;
use crate::tree::PlaneTree;
use crate::weights::TreeWeights;

pub const MAX_EDGES: usize = 200_000;

/// Convolution powers of a law on `0..=n`, truncated at `n`.
struct Powers {
    n: usize,
    base: Vec<f64>,
    cache: HashMap<usize, Vec<f64>>,
}

fn convolve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    let la = a.iter().rposition(|&x| x > 0.0).map_or(0, |i| i + 1);
    let lb = b.iter().rposition(|&x| x > 0.0).map_or(0, |i| i + 1);
    for i in 0..la {
        let ai = a[i];
        if ai == 0.0 {
            continue;
        }
        let top = lb.min(n + 1 - i);
        for j in 0..top {
            out[i + j] += ai * b[j];
        }
    }
    out
}

impl Powers {
    fn get(&mut self, m: usize) -> Vec<f64> {
        if m == 1 {
            return self.base.clone();
        }
        if m == 0 {
            let mut v = vec![0.0; self.n + 1];
            v[0] = 1.0;
            return v;
        }
        if let Some(v) = self.cache.get(&m) {
            return v.clone();
        }
        let a = self.get(m / 2);
        let b = self.get(m - m / 2);
        let v = convolve(&a, &b, self.n);
        self.cache.insert(m, v.clone());
        v
    }

    /// Fill `out` with `m` values summing to `s`.
    fn split(&mut self, m: usize, s: usize, rng: &mut RngStream, out: &mut Vec<usize>) -> Result<()> {
        if m == 1 {
            out.push(s);
            return Ok(());
        }
        let (m1, m2) = (m / 2, m - m / 2);
        let a = self.get(m1);
        let b = self.get(m2);
        let w: Vec<f64> = (0..=s).map(|x| a[x] * b[s - x]).collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerics(format!("conditioning event has zero mass at ({m}, {s})")));
        }
        let mut u = rng.uniform() * total;
        let mut x = 0;
        while x < s && u >= w[x] {
            u -= w[x];
            x += 1;
        }
        while w[x] == 0.0 {
            x -= 1;
        }
        self.split(m1, x, rng, out)?;
        self.split(m2, s - x, rng, out)
    }
}

/// Tilt `t^d w_d` on `0..=n` with mean `n / (n+1)`, returned normalised.
fn tilted_law(tw: &TreeWeights, n: usize) -> Result<Vec<f64>> {
    let lw: Vec<f64> = (0..=n).map(|d| tw.ln_w(d)).collect();
    let target = n as f64 / (n as f64 + 1.0);
    let law = |lt: f64| -> Vec<f64> {
        let x: Vec<f64> = lw.iter().enumerate().map(|(d, &l)| l + d as f64 * lt).collect();
        let z = log_sum_exp(&x);
        x.iter().map(|v| (v - z).exp()).collect()
    };
    let mean = |p: &[f64]| p.iter().enumerate().map(|(d, &x)| d as f64 * x).sum::<f64>();
    let (mut lo, mut hi) = (-800.0f64, 800.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&law(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let p = law(0.5 * (lo + hi));
    if !(mean(&p) - target).abs().lt(&1e-6) {
        return Err(Error::Numerics("could not tilt the weights to the conditioning mean".into()));
    }
    Ok(p)
}

/// Rotate an outdegree sequence with sum `len - 1` so that it encodes a tree.
pub fn cycle_lemma(seq: &[usize]) -> Vec<usize> {
    let mut s = 0i64;
    let mut best = (0i64, 0usize);
    for (i, &d) in seq.iter().enumerate() {
        s += d as i64 - 1;
        if s < best.0 {
            best = (s, i + 1);
        }
    }
    let k = best.1 % seq.len();
    seq[k..].iter().chain(&seq[..k]).copied().collect()
}

/// A tree with `n` edges from the simply generated law `∝ prod_v w_{out(v)}`.
pub fn sample_sgt_n(tw: &TreeWeights, n: usize, rng: &mut RngStream) -> Result<PlaneTree> {
    if n > MAX_EDGES {
        return Err(Error::Capacity(format!("finite sampler capped at {MAX_EDGES} edges")));
    }
    if n == 0 {
        return Ok(PlaneTree::singleton());
    }
    let base = tilted_law(tw, n)?;
    let mut pw = Powers { n, base, cache: HashMap::new() };
    let mut seq = Vec::with_capacity(n + 1);
    pw.split(n + 1, n, rng, &mut seq)?;
    PlaneTree::from_outdegrees(&cycle_lemma(&seq))
}

/// A mobile with `n` edges from the law `∝ prod_{black} w_{deg}` with uniform
/// labels and sign.
pub fn sample_mobile_n(tw: &TreeWeights, n: usize, rng: &mut RngStream, method: BridgeMethod) -> Result<Mobile> {
    let t = sample_sgt_n(tw, n, rng)?;
    let (m, _) = psi_forward(&t)?;
    let labels = random_labels(&m, rng, method);
    let eps = if rng.coin() { 1 } else { -1 };
    Mobile::new(m, labels, eps)
}

/// A pointed rooted map with `n` edges from the Boltzmann law.
pub fn sample_map_n(tw: &TreeWeights, n: usize, rng: &mut RngStream) -> Result<(Mobile, PlanarMap)> {
    let mobile = sample_mobile_n(tw, n, rng, BridgeMethod::Rejection)?;
    let (map, _) = phi_build(&mobile)?;
    Ok((mobile, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{derive_tree_weights, FaceWeights};

    #[test]
    fn cycle_lemma_examples() {
        assert_eq!(cycle_lemma(&[0, 2, 0]), vec![2, 0, 0]);
        assert_eq!(cycle_lemma(&[0, 0, 1, 2]), vec![1, 2, 0, 0]);
        assert_eq!(cycle_lemma(&[0]), vec![0]);
    }

    #[test]
    fn sizes_and_support() {
        let tw = derive_tree_weights(&FaceWeights::quadrangulation(crate::numeric::rat(1, 12))).unwrap();
        let mut rng = RngStream::new(4, 0);
        for n in [2usize, 10, 100, 1000] {
            let t = sample_sgt_n(&tw, n, &mut rng).unwrap();
            assert_eq!(t.edges(), n);
            assert!(t.outdegrees().iter().all(|&d| d == 0 || d == 2));
        }
        assert!(sample_sgt_n(&tw, 3, &mut rng).is_err());
    }

    #[test]
    fn condensation_regime_has_a_large_vertex() {
        let tw = derive_tree_weights(&FaceWeights::PowerLaw { c: 1.0, beta: 5.0 }).unwrap();
        let mut rng = RngStream::new(8, 0);
        let t = sample_sgt_n(&tw, 4000, &mut rng).unwrap();
        let max = *t.outdegrees().iter().max().unwrap();
        // the giant vertex carries a positive fraction of the edges
        assert!(max > 1000, "max outdegree {max}");
    }
}
