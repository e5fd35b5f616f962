//! Exhaustive enumeration and exact laws for small sizes.
//!
//! Maps are enumerated directly as rotation systems, independently of the
//! mobile construction, so the two routes to the map law can be compared.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::bdg::phi_build;
use crate::error::{Error, Result};
use crate::labels::{assign_labels, enumerate_bridges, Mobile};
use crate::map::{HalfEdge, PlanarMap};
use crate::psi::psi_forward;
use crate::tree::{all_trees, Colour, NodeId, Outdeg, PlaneTree};
use crate::weights::{derive_tree_weights, FaceWeights, TreeWeights};

pub const TREE_CAP: usize = 7;
pub const MOBILE_CAP: usize = 5;
pub const MAP_CAP: usize = 5;

pub type Law<K> = BTreeMap<K, BigRational>;

pub fn enumerate_trees(n: usize) -> Result<Vec<PlaneTree>> {
    if n > TREE_CAP {
        return Err(Error::Capacity(format!("tree enumeration capped at n = {TREE_CAP}")));
    }
    Ok(all_trees(n))
}

/// All labelled mobiles with `n` edges and root label 0 (both values of `ε`).
pub fn enumerate_mobiles(n: usize) -> Result<Vec<Mobile>> {
    if n > MOBILE_CAP {
        return Err(Error::Capacity(format!("mobile enumeration capped at n = {MOBILE_CAP}")));
    }
    let mut out = Vec::new();
    for t in all_trees(n) {
        for bridges in labelings_of(&t)? {
            let labels = assign_labels(&t, &bridges, 0)?;
            for eps in [-1, 1] {
                out.push(Mobile { tree: t.clone(), labels: labels.clone(), eps });
            }
        }
    }
    Ok(out)
}

fn labelings_of(t: &PlaneTree) -> Result<Vec<Vec<Vec<i32>>>> {
    let blacks: Vec<NodeId> = t.preorder().into_iter().filter(|&v| t.colour(v) == Colour::Black).collect();
    let mut acc: Vec<Vec<Vec<i32>>> = vec![Vec::new()];
    for u in blacks {
        let choices = enumerate_bridges(t.deg(u))?;
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |b| {
                    let mut p = prefix.clone();
                    p.push(b.clone());
                    p
                })
            })
            .collect();
    }
    Ok(acc)
}

/// Count labelings by direct search over white labels, without the
/// product formula.
pub fn brute_force_label_count(t: &PlaneTree) -> u64 {
    let order: Vec<NodeId> = t.preorder().into_iter().filter(|&v| t.colour(v) == Colour::White && v != t.root()).collect();
    let mut labels = vec![0i32; t.len()];
    fn rec(t: &PlaneTree, order: &[NodeId], k: usize, labels: &mut Vec<i32>) -> u64 {
        if k == order.len() {
            return 1;
        }
        let v = order[k];
        let black = t.parent(v).unwrap();
        let anchor = labels[t.parent(black).unwrap() as usize];
        let r = t.deg(black) as i32;
        let mut total = 0;
        let kids = t.children(black);
        let j = kids.iter().position(|&c| c == v).unwrap();
        let prev = if j == 0 { anchor } else { labels[kids[j - 1] as usize] };
        let last = j + 1 == kids.len();
        for l in (anchor - r)..=(anchor + r) {
            // the cycle around `black` may drop by at most one per step
            if l - prev < -1 || (last && anchor - l < -1) {
                continue;
            }
            labels[v as usize] = l;
            total += rec(t, order, k + 1, labels);
        }
        total
    }
    rec(t, &order, 0, &mut labels)
}

/// Trees with alternating colours, at most `max_black` black vertices, each
/// of degree at most `max_black_deg`.
pub fn small_mobile_trees(max_black: usize, max_black_deg: usize) -> Vec<PlaneTree> {
    // outdegree sequences in preorder, colour by depth
    let mut out = Vec::new();
    fn rec(
        stack: &mut Vec<(usize, bool)>,
        seq: &mut Vec<usize>,
        blacks: usize,
        max_black: usize,
        max_out_black: usize,
        out: &mut Vec<PlaneTree>,
    ) {
        let Some(&(left, child_is_black)) = stack.last() else {
            out.push(PlaneTree::from_outdegrees(seq).unwrap());
            return;
        };
        if left == 0 {
            let top = stack.pop().unwrap();
            rec(stack, seq, blacks, max_black, max_out_black, out);
            stack.push(top);
            return;
        }
        stack.last_mut().unwrap().0 -= 1;
        if child_is_black {
            if blacks < max_black {
                for d in 0..=max_out_black {
                    seq.push(d);
                    stack.push((d, false));
                    rec(stack, seq, blacks + 1, max_black, max_out_black, out);
                    stack.pop();
                    seq.pop();
                }
            }
        } else {
            for d in 0..=(max_black - blacks) {
                seq.push(d);
                stack.push((d, true));
                rec(stack, seq, blacks, max_black, max_out_black, out);
                stack.pop();
                seq.pop();
            }
        }
        stack.last_mut().unwrap().0 += 1;
    }
    for d in 0..=max_black {
        let mut stack = vec![(d, true)];
        let mut seq = vec![d];
        rec(&mut stack, &mut seq, 0, max_black, max_black_deg - 1, &mut out);
    }
    out
}

fn tree_weight(tw: &TreeWeights, t: &PlaneTree) -> Result<BigRational> {
    let mut w = BigRational::one();
    for v in t.preorder() {
        w *= tw.w_exact(t.out(v))?;
    }
    Ok(w)
}

fn mobile_weight(tw: &TreeWeights, t: &PlaneTree) -> Result<BigRational> {
    let mut w = BigRational::one();
    for v in t.preorder() {
        if t.colour(v) == Colour::Black {
            w *= tw.w_exact(t.deg(v))?;
        }
    }
    Ok(w)
}

fn normalise<K: Ord + Clone>(law: Law<K>) -> Result<Law<K>> {
    let z: BigRational = law.values().cloned().fold(BigRational::zero(), |a, b| a + b);
    if z.is_zero() {
        // no configuration of this size has positive weight
        return Ok(Law::new());
    }
    Ok(law.into_iter().filter(|(_, v)| !v.is_zero()).map(|(k, v)| (k, v / z.clone())).collect())
}

pub type TreeCode = Vec<(Outdeg, Vec<i64>)>;

/// The simply generated law on trees with `n` edges, pushed through the
/// bijection, and the mobile law it should equal.
pub fn exact_nu_pushforward(faces: &FaceWeights, n: usize) -> Result<(Law<TreeCode>, Law<TreeCode>)> {
    let tw = derive_tree_weights(faces)?;
    let mut pushed = Law::new();
    let mut target = Law::new();
    for t in enumerate_trees(n)? {
        let (m, _) = psi_forward(&t)?;
        *pushed.entry(m.canonical().encode()).or_insert_with(BigRational::zero) += tree_weight(&tw, &t)?;
        *target.entry(t.encode()).or_insert_with(BigRational::zero) += mobile_weight(&tw, &t)?;
    }
    Ok((normalise(pushed)?, normalise(target)?))
}

/// Rooted pointed bipartite planar maps with `n` edges, by canonical code,
/// each with its face-degree multiset.
pub fn enumerate_pointed_maps(n: usize) -> Result<HashMap<Vec<u32>, Vec<usize>>> {
    if n == 0 || n > MAP_CAP {
        return Err(Error::Capacity(format!("map enumeration needs 1 <= n <= {MAP_CAP}")));
    }
    let nh = 2 * n;
    let mut perm: Vec<HalfEdge> = (0..nh as HalfEdge).collect();
    let mut seen_rot: HashSet<Vec<u32>> = HashSet::new();
    let mut out = HashMap::new();
    let mut c = vec![0usize; nh];
    let mut visit = |perm: &[HalfEdge]| {
        if let Some(m) = map_from_permutation(perm) {
            let mut rooted = m.clone();
            rooted.point = None;
            for r in 0..nh as HalfEdge {
                rooted.root = r;
                let code = rooted.canonical_code();
                if !seen_rot.insert(code) {
                    continue;
                }
                let faces: Vec<usize> = rooted.faces().iter().map(|f| f.len()).collect();
                for p in 0..rooted.num_vertices() as u32 {
                    let mut pm = rooted.clone();
                    pm.point = Some(p);
                    out.insert(pm.canonical_code(), faces.clone());
                }
            }
        }
    };
    // Heap's algorithm over all rotations (permutations of half-edges)
    visit(&perm);
    let mut i = 0;
    while i < nh {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(out)
}

/// `perm[h]` is the half-edge after `h` around its vertex. Returns the map
/// if it is connected, planar and bipartite.
fn map_from_permutation(perm: &[HalfEdge]) -> Option<PlanarMap> {
    let nh = perm.len();
    let mut seen = vec![false; nh];
    let mut rotations = Vec::new();
    for s in 0..nh {
        if seen[s] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut h = s;
        while !seen[h] {
            seen[h] = true;
            cyc.push(h as HalfEdge);
            h = perm[h] as usize;
        }
        rotations.push(cyc);
    }
    let m = PlanarMap::from_rotations(&rotations, 0).ok()?;
    let c = m.checks();
    (c.euler_ok && c.bipartite).then_some(m)
}

#[derive(Clone, Debug)]
pub struct MuComparison {
    pub direct: Law<Vec<u32>>,
    pub pipeline: Law<Vec<u32>>,
    pub maps: usize,
    pub mobiles: usize,
}

impl MuComparison {
    pub fn equal(&self) -> bool {
        self.direct == self.pipeline
    }
}

/// The map law with weight `prod_f q_{deg(f)/2}`, computed from the map
/// enumeration and as the image of the mobile law.
pub fn exact_mu_n(faces: &FaceWeights, n: usize) -> Result<MuComparison> {
    let tw = derive_tree_weights(faces)?;
    let maps = enumerate_pointed_maps(n)?;
    let mut direct = Law::new();
    for (code, fdeg) in &maps {
        let mut w = BigRational::one();
        for &d in fdeg {
            w *= faces.q_exact(d / 2)?;
        }
        direct.insert(code.clone(), w);
    }
    let mut pipeline = Law::new();
    let mut mobiles = 0;
    for t in enumerate_trees(n)? {
        let nu = mobile_weight(&tw, &t)?;
        let labelings = labelings_of(&t)?;
        let each = nu / BigRational::from_integer((2 * labelings.len()).into());
        for bridges in labelings {
            let labels = assign_labels(&t, &bridges, 0)?;
            for eps in [-1, 1] {
                let m = Mobile { tree: t.clone(), labels: labels.clone(), eps };
                let (map, _) = phi_build(&m)?;
                let mut map = map;
                map.labels = None;
                *pipeline.entry(map.canonical_code()).or_insert_with(BigRational::zero) += each.clone();
                mobiles += 1;
            }
        }
    }
    Ok(MuComparison { direct: normalise(direct)?, pipeline: normalise(pipeline)?, maps: maps.len(), mobiles })
}

/// JSON fixture of an exact law keyed by stringified codes.
pub fn law_fixture<K: std::fmt::Debug + Ord>(law: &Law<K>) -> Value {
    let entries: Vec<Value> = law.iter().map(|(k, v)| json!({"key": format!("{k:?}"), "p": v.to_string()})).collect();
    json!({ "entries": entries })
}

/// Outcome of one exhaustive check.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub cases: u64,
    pub violations: u64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.cases > 0
    }
}

/// The bijection, measure and counting checks on every size up to the caps.
///
/// `max_n` bounds the tree and mobile sizes (at most [`MOBILE_CAP`]); the
/// exact laws are compared up to `min(max_n, 4)` edges for `w ≡ 1` and for
/// quadrangulations with `q_2 = 1/12`.
pub fn verify_suite(max_n: usize) -> Result<Vec<Check>> {
    let max_n = max_n.min(MOBILE_CAP);
    let mut out = Vec::new();

    let mut psi = Check { name: "psi_bijection".into(), cases: 0, violations: 0 };
    for n in 1..=max_n {
        let trees = enumerate_trees(n)?;
        let mut images = HashSet::new();
        for t in &trees {
            psi.cases += 1;
            let (m, trace) = psi_forward(t)?;
            let back = crate::psi::psi_inverse(&m)?;
            let degrees_move = (0..t.len() as NodeId).all(|v| {
                let w = trace.image[v as usize];
                if t.out(v) > 0 {
                    m.colour(w) == Colour::Black && m.deg(w) == t.out(v)
                } else {
                    m.colour(w) == Colour::White
                }
            });
            if !back.same_shape(t) || !degrees_move || !images.insert(m.canonical().encode()) {
                psi.violations += 1;
            }
        }
    }
    out.push(psi);

    let mut phi = Check { name: "phi_map_invariants".into(), cases: 0, violations: 0 };
    for n in 1..=max_n {
        let mut codes = HashSet::new();
        for m in enumerate_mobiles(n)? {
            phi.cases += 1;
            let (map, _) = phi_build(&m)?;
            let ok = crate::bdg::map_checks(&m, &map).all() && map.num_edges() == n;
            if !ok || !codes.insert(map.canonical_code()) {
                phi.violations += 1;
            }
        }
    }
    out.push(phi);

    let families = [FaceWeights::uniform(), FaceWeights::quadrangulation(crate::numeric::rat(1, 12))];
    let mut mu = Check { name: "map_law_two_routes".into(), cases: 0, violations: 0 };
    let mut nu = Check { name: "mobile_law_pushforward".into(), cases: 0, violations: 0 };
    for fw in &families {
        for n in 1..=max_n.min(4) {
            mu.cases += 1;
            mu.violations += u64::from(!exact_mu_n(fw, n)?.equal());
            nu.cases += 1;
            let (a, b) = exact_nu_pushforward(fw, n)?;
            nu.violations += u64::from(a != b);
        }
    }
    out.push(mu);
    out.push(nu);

    let mut bridges = Check { name: "bridge_counts".into(), cases: 0, violations: 0 };
    for r in 1..=8 {
        bridges.cases += 1;
        let found = enumerate_bridges(r)?.len();
        bridges.violations += u64::from(num_bigint::BigUint::from(found) != crate::numeric::binomial(2 * r as u64 - 1, r as u64 - 1));
    }
    out.push(bridges);

    let mut labels = Check { name: "label_counts".into(), cases: 0, violations: 0 };
    for t in small_mobile_trees(5, 3) {
        labels.cases += 1;
        let formula = crate::labels::count_labelings(&t);
        labels.violations += u64::from(formula != brute_force_label_count(&t).into());
    }
    out.push(labels);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::count_labelings;

    #[test]
    fn rooted_bipartite_map_counts() {
        // rooted bipartite maps with n edges: 1, 3, 12, 56
        for (n, expected) in [(1, 1usize), (2, 3), (3, 12), (4, 56)] {
            let maps = enumerate_pointed_maps(n).unwrap();
            // forget the point: count distinct rooted maps via the code prefix
            let rooted: HashSet<Vec<u32>> = maps.keys().map(|c| c[..c.len() - 1].to_vec()).collect();
            assert_eq!(rooted.len(), expected, "n = {n}");
        }
    }

    #[test]
    fn label_counts_match_search() {
        for t in small_mobile_trees(3, 3) {
            let lambda: u64 = count_labelings(&t).try_into().unwrap();
            assert_eq!(lambda, brute_force_label_count(&t), "{:?}", t.outdegrees());
        }
    }

    #[test]
    fn pointed_maps_are_twice_the_mobiles() {
        for n in 1..=3 {
            assert_eq!(enumerate_pointed_maps(n).unwrap().len(), enumerate_mobiles(n).unwrap().len());
        }
    }
}

#[cfg(test)]
mod law_tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn map_law_two_routes_agree() {
        for fw in [FaceWeights::uniform(), FaceWeights::quadrangulation(rat(1, 12)), FaceWeights::explicit(&[(1, rat(2, 1)), (3, rat(1, 7))])] {
            for n in 1..=4 {
                let cmp = exact_mu_n(&fw, n).unwrap();
                assert!(cmp.equal(), "{fw:?} n = {n}");
            }
        }
    }

    #[test]
    fn tree_law_pushes_forward() {
        for fw in [FaceWeights::uniform(), FaceWeights::PowerLaw { c: 0.5, beta: 3.0 }, FaceWeights::quadrangulation(rat(1, 3))] {
            for n in 1..=6 {
                let (a, b) = exact_nu_pushforward(&fw, n).unwrap();
                assert_eq!(a, b, "{fw:?} n = {n}");
            }
        }
    }
}
