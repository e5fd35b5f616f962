//! Plane trees with signed child indices.
//!
//! A vertex with `c` children numbers them `⌊-c/2⌋ < i <= ⌊c/2⌋`; read from
//! left to right they are `0, 1, ..., ⌊c/2⌋, ⌊-c/2⌋+1, ..., -1`. Vertices of
//! infinite outdegree carry a finite window of children: a run of
//! non-negative indices followed by a run of negative ones.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub type NodeId = u32;
pub const NONE: NodeId = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outdeg {
    Finite(usize),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Colour {
    White,
    Black,
}

/// Index of the child at left-to-right position `p` among `c` children.
pub fn signed_index(p: usize, c: usize) -> i64 {
    if p <= c / 2 {
        p as i64
    } else {
        p as i64 - c as i64
    }
}

/// Inverse of [`signed_index`].
pub fn position_of(i: i64, c: usize) -> Option<usize> {
    let lo = -(c as i64 / 2) - (c as i64 % 2) + 1; // ⌊-c/2⌋ + 1
    let hi = c as i64 / 2;
    if c == 0 || i < lo || i > hi {
        return None;
    }
    Some(if i >= 0 { i as usize } else { (i + c as i64) as usize })
}

fn floor_half_neg(r: usize) -> i64 {
    -((r as i64 + 1) / 2)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlaneTree {
    parent: Vec<NodeId>,
    children: Vec<Vec<NodeId>>,
    depth: Vec<u32>,
    pos: Vec<u32>,
    /// For infinite vertices: number of children with non-negative index.
    infinite: HashMap<NodeId, usize>,
}

/// A corner: `slot` k is the angular sector just before child `k` (for
/// `k == outdeg` the one before the edge to the parent).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Corner {
    pub vertex: NodeId,
    pub slot: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContourKind {
    Left,
    Right,
    TwoSided,
    WhiteOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreeDistance {
    Equal,
    /// Distance together with the largest radius at which the trees agree.
    Finite { distance: f64, agree_up_to: usize },
}

impl PlaneTree {
    pub fn singleton() -> Self {
        PlaneTree { parent: vec![NONE], children: vec![Vec::new()], depth: vec![0], pos: vec![0], infinite: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edges(&self) -> usize {
        self.len() - 1
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Append a child to the right of the existing children of `v`.
    pub fn push_child(&mut self, v: NodeId) -> NodeId {
        let id = self.parent.len() as NodeId;
        self.parent.push(v);
        self.children.push(Vec::new());
        self.depth.push(self.depth[v as usize] + 1);
        self.pos.push(self.children[v as usize].len() as u32);
        self.children[v as usize].push(id);
        id
    }

    /// Mark `v` as having infinitely many children; the first `nonneg` of its
    /// present children carry indices `0, 1, ...`, the rest `..., -2, -1`.
    pub fn set_infinite(&mut self, v: NodeId, nonneg: usize) {
        self.infinite.insert(v, nonneg);
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.parent[v as usize];
        (p != NONE).then_some(p)
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v as usize]
    }

    pub fn outdeg(&self, v: NodeId) -> Outdeg {
        if self.infinite.contains_key(&v) {
            Outdeg::Infinite
        } else {
            Outdeg::Finite(self.children[v as usize].len())
        }
    }

    pub fn out(&self, v: NodeId) -> usize {
        self.children[v as usize].len()
    }

    /// Degree in the plane sense: children plus the parent edge.
    pub fn deg(&self, v: NodeId) -> usize {
        self.out(v) + usize::from(v != self.root())
    }

    pub fn depth(&self, v: NodeId) -> u32 {
        self.depth[v as usize]
    }

    pub fn height(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn colour(&self, v: NodeId) -> Colour {
        if self.depth[v as usize] % 2 == 0 {
            Colour::White
        } else {
            Colour::Black
        }
    }

    /// Left-to-right position of `v` among its siblings.
    pub fn position(&self, v: NodeId) -> Option<usize> {
        self.parent(v)?;
        Some(self.pos[v as usize] as usize)
    }

    pub fn signed_index(&self, v: NodeId) -> Option<i64> {
        let p = self.parent(v)?;
        let pos = self.position(v)?;
        Some(self.child_index(p, pos))
    }

    fn child_index(&self, p: NodeId, pos: usize) -> i64 {
        let kids = &self.children[p as usize];
        match self.infinite.get(&p) {
            Some(&nonneg) => {
                if pos < nonneg {
                    pos as i64
                } else {
                    pos as i64 - kids.len() as i64
                }
            }
            None => signed_index(pos, kids.len()),
        }
    }

    pub fn indices(&self, v: NodeId) -> Vec<i64> {
        (0..self.children[v as usize].len()).map(|p| self.child_index(v, p)).collect()
    }

    pub fn child_with_index(&self, v: NodeId, i: i64) -> Option<NodeId> {
        let kids = &self.children[v as usize];
        (0..kids.len()).find(|&p| self.child_index(v, p) == i).map(|p| kids[p])
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.children[v as usize].iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Build from the preorder outdegree sequence (Łukasiewicz word).
    pub fn from_outdegrees(degs: &[usize]) -> Result<Self> {
        if degs.is_empty() {
            return Err(Error::Invalid("empty outdegree sequence".into()));
        }
        let mut t = PlaneTree::singleton();
        let mut stack: Vec<(NodeId, usize)> = vec![(0, degs[0])];
        for &d in &degs[1..] {
            loop {
                match stack.last_mut() {
                    None => return Err(Error::Invalid("outdegree sequence too long".into())),
                    Some((_, 0)) => {
                        stack.pop();
                    }
                    Some((v, left)) => {
                        *left -= 1;
                        let v = *v;
                        let c = t.push_child(v);
                        stack.push((c, d));
                        break;
                    }
                }
            }
        }
        if stack.iter().any(|&(_, left)| left > 0) {
            return Err(Error::Invalid("outdegree sequence too short".into()));
        }
        Ok(t)
    }

    pub fn outdegrees(&self) -> Vec<usize> {
        self.preorder().into_iter().map(|v| self.out(v)).collect()
    }

    /// Relabel so that vertex ids follow preorder.
    pub fn canonical(&self) -> PlaneTree {
        let order = self.preorder();
        let mut new_id = vec![NONE; self.len()];
        for (i, &v) in order.iter().enumerate() {
            new_id[v as usize] = i as NodeId;
        }
        let mut t = PlaneTree {
            parent: vec![NONE; self.len()],
            children: vec![Vec::new(); self.len()],
            depth: vec![0; self.len()],
            pos: vec![0; self.len()],
            infinite: HashMap::new(),
        };
        for &v in &order {
            let nv = new_id[v as usize];
            t.parent[nv as usize] = self.parent(v).map_or(NONE, |p| new_id[p as usize]);
            t.depth[nv as usize] = self.depth[v as usize];
            t.pos[nv as usize] = self.pos[v as usize];
            t.children[nv as usize] = self.children[v as usize].iter().map(|&c| new_id[c as usize]).collect();
            if let Some(&k) = self.infinite.get(&v) {
                t.infinite.insert(nv, k);
            }
        }
        t
    }

    /// Left contour `c_0, ..., c_{2n-1}` as corners.
    pub fn left_contour(&self) -> Vec<Corner> {
        assert!(self.infinite.is_empty(), "contour of a window needs the limit module");
        let n = self.edges();
        let mut out = Vec::with_capacity(2 * n.max(1));
        let (mut v, mut slot) = (self.root(), 0u32);
        for _ in 0..(2 * n).max(1) {
            out.push(Corner { vertex: v, slot });
            if (slot as usize) < self.out(v) {
                v = self.children[v as usize][slot as usize];
                slot = 0;
            } else {
                let p = self.parent[v as usize];
                slot = self.position(v).unwrap() as u32 + 1;
                v = p;
            }
        }
        out
    }

    /// Right contour: `c^(R)_i = c^(L)_{2n-i}`.
    pub fn right_contour(&self) -> Vec<Corner> {
        let left = self.left_contour();
        let m = left.len();
        (0..m).map(|i| left[(m - i) % m]).collect()
    }

    /// Two-sided contour `c_{-k}, ..., c_k`.
    pub fn two_sided_contour(&self, k: usize) -> Vec<Corner> {
        let left = self.left_contour();
        let m = left.len() as i64;
        (-(k as i64)..=k as i64).map(|i| left[i.rem_euclid(m) as usize]).collect()
    }

    /// White contour `c°_i = c_{2i}`, `0 <= i < n`.
    pub fn white_contour(&self) -> Vec<Corner> {
        self.left_contour().into_iter().step_by(2).collect()
    }

    pub fn contour(&self, kind: ContourKind) -> Vec<Corner> {
        match kind {
            ContourKind::Left => self.left_contour(),
            ContourKind::Right => self.right_contour(),
            ContourKind::TwoSided => self.two_sided_contour(self.edges()),
            ContourKind::WhiteOnly => self.white_contour(),
        }
    }

    /// Vertices kept by the truncation at radius `r`, with their images.
    pub fn truncate_map(&self, r: usize) -> (PlaneTree, Vec<NodeId>) {
        let lo = floor_half_neg(r);
        let hi = (r / 2) as i64;
        let mut t = PlaneTree::singleton();
        let mut image = vec![NONE; self.len()];
        image[0] = 0;
        for v in self.preorder() {
            let nv = image[v as usize];
            if nv == NONE || self.depth(v) as usize >= r {
                continue;
            }
            let kids = &self.children[v as usize];
            let keep: Vec<(usize, i64)> =
                (0..kids.len()).map(|p| (p, self.child_index(v, p))).filter(|&(_, i)| lo < i && i <= hi).collect();
            let nonneg = keep.iter().filter(|&&(_, i)| i >= 0).count();
            for (p, _) in keep {
                image[kids[p] as usize] = t.push_child(nv);
            }
            if self.infinite.contains_key(&v) {
                t.set_infinite(nv, nonneg);
                if t.out(nv) == r {
                    // window complete at this radius: it is an ordinary vertex of outdegree r
                    t.infinite.remove(&nv);
                }
            }
        }
        (t, image)
    }

    pub fn truncate(&self, r: usize) -> PlaneTree {
        self.truncate_map(r).0
    }

    /// Structural equality (independent of vertex numbering).
    pub fn same_shape(&self, other: &PlaneTree) -> bool {
        self.encode() == other.encode()
    }

    pub fn encode(&self) -> Vec<(Outdeg, Vec<i64>)> {
        self.preorder().into_iter().map(|v| (self.outdeg(v), self.indices(v))).collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.encode()
                .into_iter()
                .map(|(d, ix)| {
                    let d = match d {
                        Outdeg::Finite(k) => Value::from(k),
                        Outdeg::Infinite => Value::from("inf"),
                    };
                    Value::Array(vec![d, Value::from(ix)])
                })
                .collect(),
        )
    }

    pub fn to_ndjson_line(&self) -> String {
        serde_json::to_string(&self.to_json()).unwrap()
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Invalid("malformed tree encoding".into());
        let rows = v.as_array().ok_or_else(bad)?;
        let mut degs = Vec::with_capacity(rows.len());
        let mut windows = Vec::new();
        for row in rows {
            let row = row.as_array().ok_or_else(bad)?;
            let ix: Vec<i64> = row.get(1).and_then(|x| x.as_array()).ok_or_else(bad)?.iter().map(|x| x.as_i64().ok_or_else(bad)).collect::<Result<_>>()?;
            match &row[0] {
                Value::String(s) if s == "inf" => {
                    windows.push(Some(ix.iter().filter(|&&i| i >= 0).count()));
                }
                d => {
                    let d = d.as_u64().ok_or_else(bad)? as usize;
                    if ix.len() != d || ix.iter().enumerate().any(|(p, &i)| signed_index(p, d) != i) {
                        return Err(Error::Invalid("index list does not match outdegree".into()));
                    }
                    windows.push(None);
                }
            }
            degs.push(ix.len());
        }
        let mut t = PlaneTree::from_outdegrees(&degs)?;
        for (v, w) in t.preorder().into_iter().zip(windows) {
            if let Some(k) = w {
                t.set_infinite(v, k);
            }
        }
        Ok(t)
    }

    pub fn from_ndjson_line(line: &str) -> Result<Self> {
        PlaneTree::from_json(&serde_json::from_str(line)?)
    }

    fn max_out(&self) -> usize {
        self.children.iter().map(|c| c.len()).max().unwrap_or(0)
    }
}

/// `(1 + sup{R : T1^[R] = T2^[R]})^{-1}` for finite trees.
pub fn tree_distance(a: &PlaneTree, b: &PlaneTree) -> TreeDistance {
    if !a.infinite.is_empty() || !b.infinite.is_empty() {
        panic!("tree_distance is defined here for finite trees only");
    }
    if a.same_shape(b) {
        return TreeDistance::Equal;
    }
    let bound = (a.height().max(b.height()) as usize).max(a.max_out()).max(b.max_out()) + 1;
    for r in 1..=bound {
        if !a.truncate(r).same_shape(&b.truncate(r)) {
            let sup = r - 1;
            return TreeDistance::Finite { distance: 1.0 / (1.0 + sup as f64), agree_up_to: sup };
        }
    }
    unreachable!("distinct finite trees differ at some radius")
}

/// All plane trees with `n` edges, in lexicographic order of their
/// outdegree sequences.
pub fn all_trees(n: usize) -> Vec<PlaneTree> {
    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(n + 1);
    fn rec(seq: &mut Vec<usize>, need: usize, left: usize, n: usize, out: &mut Vec<PlaneTree>) {
        // need: open child slots; left: vertices still to place
        if left == 0 {
            if need == 0 {
                out.push(PlaneTree::from_outdegrees(seq).unwrap());
            }
            return;
        }
        if need == 0 {
            return;
        }
        for d in 0..=n {
            let open = need - 1 + d;
            if open > left - 1 {
                break;
            }
            seq.push(d);
            rec(seq, open, left - 1, n, out);
            seq.pop();
        }
    }
    rec(&mut seq, 1, n + 1, n, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalan(n: u64) -> u64 {
        let b: u64 = crate::numeric::binomial(2 * n, n).try_into().unwrap();
        b / (n + 1)
    }

    #[test]
    fn index_rule() {
        assert_eq!((0..5).map(|p| signed_index(p, 5)).collect::<Vec<_>>(), vec![0, 1, 2, -2, -1]);
        assert_eq!((0..4).map(|p| signed_index(p, 4)).collect::<Vec<_>>(), vec![0, 1, 2, -1]);
        assert_eq!((0..1).map(|p| signed_index(p, 1)).collect::<Vec<_>>(), vec![0]);
        for c in 1..20 {
            for p in 0..c {
                assert_eq!(position_of(signed_index(p, c), c), Some(p));
            }
            let lo = -((c as i64 + 1) / 2);
            assert_eq!(position_of(lo, c), None);
            assert_eq!(position_of(c as i64 / 2 + 1, c), None);
        }
    }

    #[test]
    fn enumeration_counts_are_catalan() {
        for n in 0..=8 {
            assert_eq!(all_trees(n).len() as u64, catalan(n as u64), "n = {n}");
        }
    }

    #[test]
    fn contour_properties() {
        for n in 1..=6 {
            for t in all_trees(n) {
                let c = t.left_contour();
                assert_eq!(c.len(), 2 * n);
                // each vertex appears deg(v) times
                for v in 0..t.len() as NodeId {
                    let k = c.iter().filter(|x| x.vertex == v).count();
                    assert_eq!(k, t.deg(v));
                }
                // consecutive corners are adjacent
                for i in 0..c.len() {
                    let (a, b) = (c[i].vertex, c[(i + 1) % c.len()].vertex);
                    assert!(t.parent(a) == Some(b) || t.parent(b) == Some(a));
                }
                let r = t.right_contour();
                assert_eq!(r[0], c[0]);
                assert_eq!(r[1].vertex, *t.children(0).last().unwrap());
                assert!(t.white_contour().iter().all(|x| t.depth(x.vertex) % 2 == 0));
                let two = t.two_sided_contour(n);
                assert_eq!(two[n], c[0]);
                assert_eq!(two[n - 1], r[1]);
            }
        }
    }

    #[test]
    fn truncation_keeps_index_window() {
        // root with five children, the middle one with three
        let t = PlaneTree::from_outdegrees(&[5, 0, 0, 3, 0, 0, 0, 0, 0]).unwrap();
        let t1 = t.truncate(1);
        assert_eq!(t1.outdegrees(), vec![1, 0]);
        let t2 = t.truncate(2);
        assert_eq!(t2.outdegrees(), vec![2, 0, 0]);
        let t3 = t.truncate(3);
        // indices {-1, 0, 1} at the root; the child at index 2 is dropped
        assert_eq!(t3.outdegrees(), vec![3, 0, 0, 0]);
        assert_eq!(t.truncate(100).outdegrees(), t.outdegrees());
    }

    #[test]
    fn distance_examples() {
        let a = PlaneTree::from_outdegrees(&[1, 0]).unwrap();
        let b = PlaneTree::from_outdegrees(&[0]).unwrap();
        // agree only at radius 0
        assert_eq!(tree_distance(&a, &b), TreeDistance::Finite { distance: 1.0, agree_up_to: 0 });
        let c = PlaneTree::from_outdegrees(&[1, 1, 0]).unwrap();
        assert_eq!(tree_distance(&a, &c), TreeDistance::Finite { distance: 0.5, agree_up_to: 1 });
        assert_eq!(tree_distance(&c, &c.clone()), TreeDistance::Equal);
    }

    #[test]
    fn ndjson_round_trip() {
        for t in all_trees(5) {
            let line = t.to_ndjson_line();
            let back = PlaneTree::from_ndjson_line(&line).unwrap();
            assert!(back.same_shape(&t));
        }
        let mut w = PlaneTree::singleton();
        for _ in 0..3 {
            w.push_child(0);
        }
        w.set_infinite(0, 2);
        let back = PlaneTree::from_ndjson_line(&w.to_ndjson_line()).unwrap();
        assert_eq!(back.indices(0), vec![0, 1, -1]);
        assert_eq!(back.outdeg(0), Outdeg::Infinite);
    }

    #[test]
    fn truncating_an_infinite_window() {
        let mut w = PlaneTree::singleton();
        for _ in 0..6 {
            w.push_child(0);
        }
        w.set_infinite(0, 3); // indices 0,1,2,-3,-2,-1
        assert_eq!(w.truncate(4).indices(0), vec![0, 1, 2, -1]);
        assert_eq!(w.truncate(4).outdeg(0), Outdeg::Finite(4));
    }
}
