//! Bridges, label increments and labelled mobiles.

use num_bigint::BigUint;
use num_traits::One;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::bridge_count;
use crate::rng::RngStream;
use crate::tree::{Colour, NodeId, PlaneTree};

pub const ENUMERATION_CAP: usize = 12;

/// All `x in {-1, 0, 1, ...}^r` with zero sum, lexicographically.
pub fn enumerate_bridges(r: usize) -> Result<Vec<Vec<i32>>> {
    if r > ENUMERATION_CAP {
        return Err(Error::Capacity(format!("bridge enumeration capped at r = {ENUMERATION_CAP}")));
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(cur: &mut Vec<i32>, r: usize, sum: i32, out: &mut Vec<Vec<i32>>) {
        let left = (r - cur.len()) as i32;
        if left == 0 {
            if sum == 0 {
                out.push(cur.clone());
            }
            return;
        }
        // remaining entries are >= -1 each, so sum must be reachable
        for x in -1..=(left - 1 - sum).max(-1) {
            if sum + x - (left - 1) > 0 {
                break;
            }
            cur.push(x);
            rec(cur, r, sum + x, out);
            cur.pop();
        }
    }
    if r > 0 {
        rec(&mut cur, r, 0, &mut out);
    } else {
        out.push(Vec::new());
    }
    Ok(out)
}

/// `P(X = k) = 2^{-k-2}` for `k >= -1`.
pub fn sample_increment(rng: &mut RngStream) -> i32 {
    rng.geometric(0.5) as i32 - 1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeMethod {
    /// i.i.d. increments conditioned on a zero sum.
    #[default]
    Rejection,
    /// Uniform weak composition of `r` into `r` parts, shifted by one.
    StarsAndBars,
}

pub fn sample_bridge(r: usize, rng: &mut RngStream, method: BridgeMethod) -> Vec<i32> {
    if r == 0 {
        return Vec::new();
    }
    match method {
        BridgeMethod::Rejection => {
            let mut x = vec![0i32; r];
            loop {
                let mut s = 0i64;
                for xi in x.iter_mut() {
                    *xi = sample_increment(rng);
                    s += *xi as i64;
                }
                if s == 0 {
                    return x;
                }
            }
        }
        BridgeMethod::StarsAndBars => {
            // r stars and r-1 bars in 2r-1 slots; choose the bar slots (Floyd)
            let slots = 2 * r - 1;
            let k = r - 1;
            let mut bars = std::collections::BTreeSet::new();
            for j in (slots - k)..slots {
                let t = rng.below(j as u64 + 1) as usize;
                if !bars.insert(t) {
                    bars.insert(j);
                }
            }
            let mut x = Vec::with_capacity(r);
            let mut prev = 0usize;
            for &b in &bars {
                x.push((b - prev) as i32 - 1);
                prev = b + 1;
            }
            x.push((slots - prev) as i32 - 1);
            x
        }
    }
}

/// A mobile: a plane tree whose even generations are white and carry labels.
/// Labels of black vertices are stored as zero and carry no meaning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mobile {
    pub tree: PlaneTree,
    pub labels: Vec<i32>,
    pub eps: i8,
}

fn black_vertices(tree: &PlaneTree) -> Vec<NodeId> {
    tree.preorder().into_iter().filter(|&v| tree.colour(v) == Colour::Black).collect()
}

/// Labels from one bridge per black vertex (black vertices in preorder),
/// starting from `root_label`.
pub fn assign_labels(tree: &PlaneTree, bridges: &[Vec<i32>], root_label: i32) -> Result<Vec<i32>> {
    let blacks = black_vertices(tree);
    if blacks.len() != bridges.len() {
        return Err(Error::Invalid(format!("{} black vertices but {} bridges", blacks.len(), bridges.len())));
    }
    let mut labels = vec![0i32; tree.len()];
    labels[tree.root() as usize] = root_label;
    for (&u, x) in blacks.iter().zip(bridges) {
        let kids = tree.children(u);
        if x.len() != kids.len() + 1 {
            return Err(Error::Invalid(format!("bridge of length {} at black vertex of degree {}", x.len(), kids.len() + 1)));
        }
        if x.iter().any(|&v| v < -1) || x.iter().map(|&v| v as i64).sum::<i64>() != 0 {
            return Err(Error::Invalid("not a bridge".into()));
        }
        let mut l = labels[tree.parent(u).unwrap() as usize];
        for (&c, &xi) in kids.iter().zip(x) {
            l = l.checked_add(xi).ok_or_else(|| Error::Numerics("label overflow".into()))?;
            labels[c as usize] = l;
        }
    }
    Ok(labels)
}

/// The bridge read around each black vertex (black vertices in preorder).
pub fn read_bridges(tree: &PlaneTree, labels: &[i32]) -> Vec<Vec<i32>> {
    black_vertices(tree)
        .into_iter()
        .map(|u| {
            let p = labels[tree.parent(u).unwrap() as usize];
            let mut seq = vec![p];
            seq.extend(tree.children(u).iter().map(|&c| labels[c as usize]));
            seq.push(p);
            seq.windows(2).map(|w| w[1] - w[0]).collect()
        })
        .collect()
}

/// Whether `labels` satisfies the step rule around every black vertex.
pub fn is_valid_labeling(tree: &PlaneTree, labels: &[i32]) -> bool {
    read_bridges(tree, labels).iter().all(|x| x.iter().all(|&d| d >= -1))
}

/// Number of labelings with the root label fixed: the product of
/// `C(2 deg(u) - 1, deg(u) - 1)` over black vertices.
pub fn count_labelings(tree: &PlaneTree) -> BigUint {
    black_vertices(tree).into_iter().fold(BigUint::one(), |acc, u| acc * bridge_count(tree.deg(u) as u64))
}

pub fn random_labels(tree: &PlaneTree, rng: &mut RngStream, method: BridgeMethod) -> Vec<i32> {
    let bridges: Vec<Vec<i32>> = black_vertices(tree).into_iter().map(|u| sample_bridge(tree.deg(u), rng, method)).collect();
    assign_labels(tree, &bridges, 0).expect("sampled bridges are valid")
}

impl Mobile {
    pub fn new(tree: PlaneTree, labels: Vec<i32>, eps: i8) -> Result<Self> {
        if labels.len() != tree.len() {
            return Err(Error::Invalid("label array length differs from tree size".into()));
        }
        if eps != 1 && eps != -1 {
            return Err(Error::Invalid("eps must be +1 or -1".into()));
        }
        if !is_valid_labeling(&tree, &labels) {
            return Err(Error::Invalid("labels violate the step rule".into()));
        }
        Ok(Mobile { tree, labels, eps })
    }

    pub fn label(&self, v: NodeId) -> i32 {
        self.labels[v as usize]
    }

    /// Restriction to the truncated tree.
    pub fn truncate(&self, r: usize) -> Mobile {
        let (t, image) = self.tree.truncate_map(r);
        let mut labels = vec![0; t.len()];
        for (v, &nv) in image.iter().enumerate() {
            if nv != crate::tree::NONE {
                labels[nv as usize] = self.labels[v];
            }
        }
        Mobile { tree: t, labels, eps: self.eps }
    }

    /// `{"tree": [...], "labels": [...], "eps": ±1}` with labels listed for
    /// white vertices in preorder.
    pub fn to_json(&self) -> Value {
        let labels: Vec<i32> =
            self.tree.preorder().into_iter().filter(|&v| self.tree.colour(v) == Colour::White).map(|v| self.label(v)).collect();
        json!({"tree": self.tree.to_json(), "labels": labels, "eps": self.eps})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Invalid("malformed mobile encoding".into());
        let tree = PlaneTree::from_json(v.get("tree").ok_or_else(bad)?)?;
        let white: Vec<i32> = v
            .get("labels")
            .and_then(|l| l.as_array())
            .ok_or_else(bad)?
            .iter()
            .map(|x| x.as_i64().map(|y| y as i32).ok_or_else(bad))
            .collect::<Result<_>>()?;
        let eps = v.get("eps").and_then(|e| e.as_i64()).ok_or_else(bad)? as i8;
        let mut labels = vec![0; tree.len()];
        let whites: Vec<NodeId> = tree.preorder().into_iter().filter(|&x| tree.colour(x) == Colour::White).collect();
        if whites.len() != white.len() {
            return Err(bad());
        }
        for (&w, &l) in whites.iter().zip(&white) {
            labels[w as usize] = l;
        }
        Mobile::new(tree, labels, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::all_trees;

    #[test]
    fn bridge_counts() {
        for r in 0..=8 {
            let n = enumerate_bridges(r).unwrap().len() as u64;
            let expected: u64 = bridge_count(r as u64).try_into().unwrap();
            assert_eq!(n, expected, "r = {r}");
        }
        assert!(enumerate_bridges(13).is_err());
    }

    #[test]
    fn bridges_are_bridges() {
        for x in enumerate_bridges(6).unwrap() {
            assert!(x.iter().all(|&v| v >= -1));
            assert_eq!(x.iter().sum::<i32>(), 0);
        }
    }

    #[test]
    fn both_samplers_hit_every_bridge_uniformly() {
        let r = 3;
        let all = enumerate_bridges(r).unwrap();
        for method in [BridgeMethod::Rejection, BridgeMethod::StarsAndBars] {
            let mut rng = RngStream::new(5, method as u64);
            let n = 100_000;
            let mut counts = vec![0usize; all.len()];
            for _ in 0..n {
                let x = sample_bridge(r, &mut rng, method);
                counts[all.iter().position(|b| *b == x).unwrap()] += 1;
            }
            let p = 1.0 / all.len() as f64;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            for c in counts {
                assert!((c as f64 / n as f64 - p).abs() < 4.0 * sd, "{method:?}");
            }
        }
    }

    #[test]
    fn increment_law() {
        let mut rng = RngStream::new(9, 0);
        let n = 200_000;
        let xs: Vec<i32> = (0..n).map(|_| sample_increment(&mut rng)).collect();
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * (2.0 / n as f64).sqrt());
        assert!((var - 2.0).abs() < 0.05);
        let p_minus = xs.iter().filter(|&&x| x == -1).count() as f64 / n as f64;
        assert!((p_minus - 0.5).abs() < 0.005);
    }

    #[test]
    fn labels_round_trip_through_bridges() {
        let mut rng = RngStream::new(1, 1);
        for t in all_trees(6) {
            let l = random_labels(&t, &mut rng, BridgeMethod::StarsAndBars);
            assert!(is_valid_labeling(&t, &l));
            let b = read_bridges(&t, &l);
            assert_eq!(assign_labels(&t, &b, 0).unwrap(), l);
            let m = Mobile::new(t, l, -1).unwrap();
            assert_eq!(Mobile::from_json(&m.to_json()).unwrap(), m);
        }
    }

    #[test]
    fn overflow_is_detected() {
        let t = PlaneTree::from_outdegrees(&[1, 2, 0, 0]).unwrap();
        assert!(assign_labels(&t, &[vec![2, -1, -1]], i32::MAX - 1).is_err());
    }
}
