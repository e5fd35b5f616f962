//! Rooted planar maps stored as half-edge rotation systems.
//!
//! Half-edges `2e` and `2e + 1` form edge `e`. `next[h]` is the following
//! half-edge around the origin of `h`; faces are the orbits of
//! `h -> next[twin(h)]`.

use std::collections::{HashMap, VecDeque};

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type VertexId = u32;
pub type HalfEdge = u32;

#[inline]
pub fn twin(h: HalfEdge) -> HalfEdge {
    h ^ 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanarMap {
    pub origin: Vec<VertexId>,
    pub next: Vec<HalfEdge>,
    /// One half-edge per vertex (`u32::MAX` for an isolated vertex).
    pub first: Vec<HalfEdge>,
    pub root: HalfEdge,
    pub point: Option<VertexId>,
    pub labels: Option<Vec<i32>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapChecks {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_ok: bool,
    pub bipartite: bool,
    pub face_degrees: Vec<usize>,
}

impl PlanarMap {
    /// Build from per-vertex rotations (lists of half-edges around each vertex).
    pub fn from_rotations(rotations: &[Vec<HalfEdge>], root: HalfEdge) -> Result<Self> {
        let nh: usize = rotations.iter().map(|r| r.len()).sum();
        if nh % 2 != 0 {
            return Err(Error::Invalid("odd number of half-edges".into()));
        }
        let mut origin = vec![u32::MAX; nh];
        let mut next = vec![u32::MAX; nh];
        let mut first = vec![u32::MAX; rotations.len()];
        for (v, rot) in rotations.iter().enumerate() {
            for (i, &h) in rot.iter().enumerate() {
                let h = h as usize;
                if h >= nh || origin[h] != u32::MAX {
                    return Err(Error::Invalid(format!("half-edge {h} repeated or out of range")));
                }
                origin[h] = v as VertexId;
                next[h] = rot[(i + 1) % rot.len()];
            }
            if let Some(&h) = rot.first() {
                first[v] = h;
            }
        }
        if (root as usize) >= nh && nh > 0 {
            return Err(Error::Invalid("root half-edge out of range".into()));
        }
        Ok(PlanarMap { origin, next, first, root, point: None, labels: None })
    }

    pub fn num_vertices(&self) -> usize {
        self.first.len()
    }

    pub fn num_edges(&self) -> usize {
        self.origin.len() / 2
    }

    pub fn target(&self, h: HalfEdge) -> VertexId {
        self.origin[twin(h) as usize]
    }

    pub fn root_vertex(&self) -> VertexId {
        self.origin[self.root as usize]
    }

    /// Half-edges around `v` in rotation order.
    pub fn rotation(&self, v: VertexId) -> Vec<HalfEdge> {
        let f = self.first[v as usize];
        if f == u32::MAX {
            return Vec::new();
        }
        let mut out = vec![f];
        let mut h = self.next[f as usize];
        while h != f {
            out.push(h);
            h = self.next[h as usize];
        }
        out
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.rotation(v).len()
    }

    pub fn neighbours(&self, v: VertexId) -> Vec<VertexId> {
        self.rotation(v).into_iter().map(|h| self.target(h)).collect()
    }

    pub fn faces(&self) -> Vec<Vec<HalfEdge>> {
        let nh = self.origin.len();
        let mut seen = vec![false; nh];
        let mut faces = Vec::new();
        for s in 0..nh {
            if seen[s] {
                continue;
            }
            let mut f = Vec::new();
            let mut h = s as HalfEdge;
            while !seen[h as usize] {
                seen[h as usize] = true;
                f.push(h);
                h = self.next[twin(h) as usize];
            }
            faces.push(f);
        }
        faces
    }

    pub fn distances_from(&self, src: VertexId) -> Vec<u32> {
        let mut d = vec![u32::MAX; self.num_vertices()];
        d[src as usize] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(v) = q.pop_front() {
            for w in self.neighbours(v) {
                if d[w as usize] == u32::MAX {
                    d[w as usize] = d[v as usize] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    }

    pub fn checks(&self) -> MapChecks {
        let faces = self.faces();
        let v = self.num_vertices();
        let e = self.num_edges();
        let d = self.distances_from(self.root_vertex());
        let connected = d.iter().all(|&x| x != u32::MAX);
        let euler_ok = connected && v as i64 - e as i64 + faces.len() as i64 == 2;
        // bipartite: every edge joins distances of different parity
        let bipartite = connected
            && (0..self.origin.len()).all(|h| (d[self.origin[h] as usize] + d[self.target(h as HalfEdge) as usize]) % 2 == 1);
        MapChecks { vertices: v, edges: e, faces: faces.len(), euler_ok, bipartite, face_degrees: faces.iter().map(|f| f.len()).collect() }
    }

    /// Submap spanned by the vertices within distance `r` of the root vertex.
    /// Returns the ball and, for each of its vertices, the original id.
    pub fn ball(&self, r: u32) -> (PlanarMap, Vec<VertexId>) {
        let d = self.distances_from(self.root_vertex());
        let keep: Vec<VertexId> = (0..self.num_vertices() as VertexId).filter(|&v| d[v as usize] <= r).collect();
        self.induced(&keep)
    }

    /// Submap induced by `keep`, which must contain the root vertex.
    pub fn induced(&self, keep: &[VertexId]) -> (PlanarMap, Vec<VertexId>) {
        let mut new_v = vec![u32::MAX; self.num_vertices()];
        for (i, &v) in keep.iter().enumerate() {
            new_v[v as usize] = i as VertexId;
        }
        let mut new_e: HashMap<u32, u32> = HashMap::new();
        let mut rotations = vec![Vec::new(); keep.len()];
        for (i, &v) in keep.iter().enumerate() {
            for h in self.rotation(v) {
                if new_v[self.target(h) as usize] == u32::MAX {
                    continue;
                }
                let k = new_e.len() as u32;
                let e = *new_e.entry(h / 2).or_insert(k);
                rotations[i].push(2 * e + (h & 1));
            }
        }
        let root = new_e.get(&(self.root / 2)).map_or(u32::MAX, |&e| 2 * e + (self.root & 1));
        let mut m = PlanarMap::from_rotations(&rotations, root).expect("induced rotation system is valid");
        m.point = self.point.and_then(|p| (new_v[p as usize] != u32::MAX).then(|| new_v[p as usize]));
        m.labels = self.labels.as_ref().map(|l| keep.iter().map(|&v| l[v as usize]).collect());
        (m, keep.to_vec())
    }

    /// Canonical code of the rooted (and, if set, pointed) map: two maps
    /// have equal codes iff they are isomorphic as rooted maps.
    pub fn canonical_code(&self) -> Vec<u32> {
        let nh = self.origin.len();
        if nh == 0 {
            return vec![0];
        }
        let mut lab = vec![u32::MAX; nh];
        let mut order = Vec::with_capacity(nh);
        lab[self.root as usize] = 0;
        order.push(self.root);
        let mut i = 0;
        while i < order.len() {
            let h = order[i];
            for g in [self.next[h as usize], twin(h)] {
                if lab[g as usize] == u32::MAX {
                    lab[g as usize] = order.len() as u32;
                    order.push(g);
                }
            }
            i += 1;
        }
        let mut code = Vec::with_capacity(2 * nh + 1);
        for &h in &order {
            code.push(lab[self.next[h as usize] as usize]);
            code.push(lab[twin(h) as usize]);
        }
        if let Some(p) = self.point {
            let m = self.rotation(p).into_iter().map(|h| lab[h as usize]).min().unwrap_or(u32::MAX);
            code.push(m);
        }
        code
    }

    /// `{"vertices", "rotation", "root", "point", "labels"}`.
    pub fn to_json(&self) -> Value {
        let rot: Vec<Vec<HalfEdge>> = (0..self.num_vertices() as VertexId).map(|v| self.rotation(v)).collect();
        json!({
            "vertices": self.num_vertices(),
            "edges": self.num_edges(),
            "rotation": rot,
            "root": self.root,
            "point": self.point,
            "labels": self.labels,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Invalid("malformed map encoding".into());
        let rot: Vec<Vec<HalfEdge>> = serde_json::from_value(v.get("rotation").ok_or_else(bad)?.clone())?;
        let root = v.get("root").and_then(|x| x.as_u64()).ok_or_else(bad)? as HalfEdge;
        let mut m = PlanarMap::from_rotations(&rot, root)?;
        m.point = v.get("point").and_then(|x| x.as_u64()).map(|x| x as VertexId);
        m.labels = v.get("labels").and_then(|x| serde_json::from_value(x.clone()).ok());
        Ok(m)
    }

    /// Tab-separated edge list `edge\tu\tv`, root edge first.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::from("edge\tu\tv\n");
        let r = self.root / 2;
        let mut order: Vec<u32> = (0..self.num_edges() as u32).collect();
        order.sort_by_key(|&e| (e != r, e));
        for e in order {
            s.push_str(&format!("{e}\t{}\t{}\n", self.origin[2 * e as usize], self.origin[2 * e as usize + 1]));
        }
        s
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph map {\n");
        for v in 0..self.num_vertices() {
            let label = match &self.labels {
                Some(l) => format!("{v}:{}", l[v]),
                None => v.to_string(),
            };
            let shape = if Some(v as VertexId) == self.point { ",shape=box" } else { "" };
            s.push_str(&format!("  {v} [label=\"{label}\"{shape}];\n"));
        }
        for e in 0..self.num_edges() {
            let (a, b) = (self.origin[2 * e], self.origin[2 * e + 1]);
            let style = if e as u32 == self.root / 2 { " [penwidth=3]" } else { "" };
            s.push_str(&format!("  {a} -- {b}{style};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// `(1 + sup{r : B_r(a) ≅ B_r(b)})^{-1}`, or `None` if the maps are
/// isomorphic. Compared as rooted maps, ignoring the point.
pub fn map_distance(a: &PlanarMap, b: &PlanarMap) -> Option<(f64, u32)> {
    let strip = |m: &PlanarMap| {
        let mut m = m.clone();
        m.point = None;
        m.labels = None;
        m
    };
    let (a, b) = (strip(a), strip(b));
    if a.canonical_code() == b.canonical_code() {
        return None;
    }
    let bound = a.num_vertices().max(b.num_vertices()) as u32 + 1;
    for r in 0..=bound {
        if a.ball(r).0.canonical_code() != b.ball(r).0.canonical_code() {
            if r == 0 {
                return Some((1.0, 0));
            }
            let sup = r - 1;
            return Some((1.0 / (1.0 + sup as f64), sup));
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A path with `k` edges, rooted at one end.
    fn path(k: u32) -> PlanarMap {
        let mut rot = vec![Vec::new(); k as usize + 1];
        for e in 0..k {
            rot[e as usize].push(2 * e);
            rot[e as usize + 1].push(2 * e + 1);
        }
        PlanarMap::from_rotations(&rot, 0).unwrap()
    }

    #[test]
    fn path_checks() {
        let p = path(3);
        let c = p.checks();
        assert_eq!((c.vertices, c.edges, c.faces), (4, 3, 1));
        assert!(c.euler_ok && c.bipartite);
        assert_eq!(c.face_degrees, vec![6]);
    }

    #[test]
    fn square_is_planar_and_bipartite() {
        // 4-cycle 0-1-2-3-0; edges e0=(0,1), e1=(1,2), e2=(2,3), e3=(3,0)
        let rot = vec![vec![0, 7], vec![2, 1], vec![4, 3], vec![6, 5]];
        let m = PlanarMap::from_rotations(&rot, 0).unwrap();
        let c = m.checks();
        assert_eq!(c.faces, 2);
        assert!(c.euler_ok && c.bipartite);
        let mut d = c.face_degrees.clone();
        d.sort();
        assert_eq!(d, vec![4, 4]);
    }

    #[test]
    fn distance_of_paths() {
        // agree on balls of radius 0 and 1 only
        assert_eq!(map_distance(&path(1), &path(2)), Some((0.5, 1)));
        assert_eq!(map_distance(&path(3), &path(3)), None);
    }

    #[test]
    fn json_round_trip() {
        let mut m = path(2);
        m.point = Some(2);
        m.labels = Some(vec![1, 2, 3]);
        let back = PlanarMap::from_json(&m.to_json()).unwrap();
        assert_eq!(back.canonical_code(), m.canonical_code());
        assert_eq!(back.labels, m.labels);
        assert!(m.to_dot().contains("0 -- 1"));
    }
}
