//! From labelled mobiles to pointed bipartite maps.
//!
//! Every white corner is joined to the next corner (in contour order) whose
//! label is one less; corners of minimal label are joined to an extra vertex
//! `ρ`. Arcs are placed without crossings: at a corner, arcs are ordered by
//! how far back along the contour their other end lies.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::labels::Mobile;
use crate::map::{HalfEdge, PlanarMap, VertexId};
use crate::tree::{NodeId, NONE};

/// Successors in a cyclic label sequence; `None` marks minimal labels.
pub fn successors_cyclic(labels: &[i32]) -> Vec<Option<usize>> {
    let n = labels.len();
    let mut next: HashMap<i32, usize> = HashMap::new();
    let mut out = vec![None; n];
    for j in (0..2 * n).rev() {
        let l = labels[j % n];
        if j < n {
            out[j] = next.get(&(l - 1)).map(|&k| k % n);
        }
        next.insert(l, j);
    }
    out
}

/// Successors in a finite window of a bi-infinite sequence; `None` means the
/// successor lies beyond the window.
pub fn successors_linear(labels: &[i32]) -> Vec<Option<usize>> {
    let mut next: HashMap<i32, usize> = HashMap::new();
    let mut out = vec![None; labels.len()];
    for j in (0..labels.len()).rev() {
        out[j] = next.get(&(labels[j] - 1)).copied();
        next.insert(labels[j], j);
    }
    out
}

/// The map of a finite mobile, and for every map vertex the mobile vertex it
/// comes from (`NONE` for `ρ`, which is the last vertex).
pub fn phi_build(mobile: &Mobile) -> Result<(PlanarMap, Vec<NodeId>)> {
    let t = &mobile.tree;
    if t.edges() == 0 {
        return Err(Error::Invalid("mobile without edges".into()));
    }
    let corners = t.white_contour();
    let n = corners.len();
    let lab: Vec<i32> = corners.iter().map(|c| mobile.label(c.vertex)).collect();
    let succ = successors_cyclic(&lab);
    let min = *lab.iter().min().unwrap();

    let mut vid: HashMap<NodeId, VertexId> = HashMap::new();
    let mut origin_node = Vec::new();
    for c in &corners {
        vid.entry(c.vertex).or_insert_with(|| {
            origin_node.push(c.vertex);
            (origin_node.len() - 1) as VertexId
        });
    }
    let rho = origin_node.len() as VertexId;
    origin_node.push(NONE);

    let mins: Vec<usize> = (0..n).filter(|&i| lab[i] == min).collect();
    let mut chords: Vec<Vec<(usize, HalfEdge)>> = vec![Vec::new(); n];
    for p in 0..n {
        match succ[p] {
            Some(q) => {
                chords[p].push(((p + n - q) % n, 2 * p as HalfEdge));
                chords[q].push(((q + n - p) % n, 2 * p as HalfEdge + 1));
            }
            None => {
                let k = mins.iter().position(|&m| m == p).unwrap();
                let prev = mins[(k + mins.len() - 1) % mins.len()];
                let key = (p + n - prev - 1) % n + 1;
                chords[p].push((key, 2 * p as HalfEdge));
            }
        }
    }
    let mut rotations: Vec<Vec<HalfEdge>> = vec![Vec::new(); origin_node.len()];
    for (p, c) in corners.iter().enumerate() {
        let mut ch = std::mem::take(&mut chords[p]);
        ch.sort_unstable();
        rotations[vid[&c.vertex] as usize].extend(ch.into_iter().map(|(_, h)| h));
    }
    rotations[rho as usize] = mins.iter().rev().map(|&m| 2 * m as HalfEdge + 1).collect();

    let root = if mobile.eps == 1 { 1 } else { 0 };
    let mut map = PlanarMap::from_rotations(&rotations, root)?;
    map.point = Some(rho);
    let mut labels: Vec<i32> = origin_node[..origin_node.len() - 1].iter().map(|&v| mobile.label(v)).collect();
    labels.push(min - 1);
    map.labels = Some(labels);
    Ok((map, origin_node))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiReport {
    pub euler_ok: bool,
    pub bipartite: bool,
    pub face_degrees_match: bool,
    pub distances_match: bool,
    pub counts_match: bool,
}

impl PhiReport {
    pub fn all(&self) -> bool {
        self.euler_ok && self.bipartite && self.face_degrees_match && self.distances_match && self.counts_match
    }
}

/// Invariants tying a mobile to its map: Euler's formula, bipartiteness,
/// faces of degree twice the black degrees, `d(v, ρ) = ℓ(v) - min ℓ + 1`,
/// and the vertex, edge and face counts.
pub fn map_checks(mobile: &Mobile, map: &PlanarMap) -> PhiReport {
    let t = &mobile.tree;
    let c = map.checks();
    let mut black_deg: Vec<usize> =
        t.preorder().into_iter().filter(|&v| t.depth(v) % 2 == 1).map(|v| 2 * t.deg(v)).collect();
    let mut faces = c.face_degrees.clone();
    black_deg.sort_unstable();
    faces.sort_unstable();
    let labels = map.labels.as_ref().unwrap();
    let rho = map.point.unwrap();
    let min = labels[rho as usize] + 1;
    let d = map.distances_from(rho);
    let distances_match = (0..map.num_vertices()).all(|v| v as VertexId == rho || d[v] as i64 == (labels[v] - min + 1) as i64);
    let whites = t.preorder().into_iter().filter(|&v| t.depth(v) % 2 == 0).count();
    let counts_match = c.vertices == whites + 1 && c.edges == t.edges() && c.faces == t.len() - whites;
    PhiReport { euler_ok: c.euler_ok, bipartite: c.bipartite, face_degrees_match: faces == black_deg, distances_match, counts_match }
}
