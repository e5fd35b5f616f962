//! The infinite limit mobile and certified balls of its map.
//!
//! The mobile is grown lazily. Its spine of special vertices starts at the
//! root and either runs forever (`kappa = 1`) or ends at a black vertex `s`
//! of infinite degree whose neighbours `s_i, i ∈ Z` carry a random walk of
//! labels. Everything hanging off the spine or off an `s_i` is a finite
//! two-type Galton-Watson tree, generated in one piece from its own random
//! stream, so the window can be enlarged in any order with the same result.
//!
//! A window is a finite part of the two-sided white contour in which every
//! white vertex has all of its corners. Map edges are drawn from each corner
//! to its successor inside the window. A vertex is certified when the
//! window shows labels low enough on both sides of every corner that no arc
//! at the vertex can reach outside.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::bdg::successors_linear;
use crate::error::{Error, Result};
use crate::labels::{sample_bridge, sample_increment, BridgeMethod};
use crate::laws::LawSet;
use crate::map::{HalfEdge, PlanarMap, VertexId};
use crate::rng::RngStream;
use crate::tree::{NodeId, PlaneTree, NONE};

pub const DEFAULT_NODE_CAP: usize = 20_000_000;

const TAG_SPINE: u64 = 1;
const TAG_DEC_POS: u64 = 2;
const TAG_DEC_NEG: u64 = 3;
const TAG_INC: u64 = 4;
const TAG_EPS: u64 = 5;
const TAG_SHAPE: u64 = 6;

#[derive(Clone, Debug)]
struct Arena {
    parent: Vec<NodeId>,
    first: Vec<NodeId>,
    nkids: Vec<u32>,
    depth: Vec<u32>,
    label: Vec<i32>,
    /// Decoration index of white vertices (`0` off the `s_i` subtrees).
    dec: Vec<i64>,
}

impl Arena {
    fn push(&mut self, parent: NodeId, label: i32, dec: i64) -> NodeId {
        let id = self.parent.len() as NodeId;
        let depth = if parent == NONE { 0 } else { self.depth[parent as usize] + 1 };
        self.parent.push(parent);
        self.first.push(NONE);
        self.nkids.push(0);
        self.depth.push(depth);
        self.label.push(label);
        self.dec.push(dec);
        id
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn kids(&self, v: NodeId) -> std::ops::Range<NodeId> {
        let f = self.first[v as usize];
        if f == NONE {
            0..0
        } else {
            f..f + self.nkids[v as usize]
        }
    }

    fn white(&self, v: NodeId) -> bool {
        self.depth[v as usize] % 2 == 0
    }
}
impl Arena {
    fn truncate(&mut self, n: usize) {
        self.parent.truncate(n);
        self.first.truncate(n);
        self.nkids.truncate(n);
        self.depth.truncate(n);
        self.label.truncate(n);
        self.dec.truncate(n);
    }
}

#[derive(Clone, Debug)]
struct SpineStep {
    white: NodeId,
    /// special child index of the white vertex and of its special black child
    special_white_kid: u32,
    black: NodeId,
    special_black_kid: Option<u32>,
}

/// The neighbours `s_i` on one side of the infinite vertex.
///
/// Label steps and decoration shapes are read in order from two sequential
/// streams; labels inside a decoration come from a stream of its own.
#[derive(Clone, Debug)]
struct Side {
    /// number of `s_i` generated
    count: u64,
    /// label of the last `s_i` generated
    label: i32,
    /// materialised decorations `(i, s_i)`, increasing in `i`
    kept: Vec<(u64, NodeId)>,
    steps: RngStream,
    shapes: RngStream,
    labels: RngStream,
}

impl Side {
    fn new(rng: &RngStream, positive: bool) -> Side {
        let k = positive as u64;
        Side {
            count: 0,
            label: 0,
            kept: Vec::new(),
            steps: rng.derive(TAG_INC).derive(k),
            shapes: rng.derive(TAG_SHAPE).derive(k),
            labels: rng.derive(if positive { TAG_DEC_POS } else { TAG_DEC_NEG }),
        }
    }

    /// Rewind both sequential streams to the first `s_i`.
    fn rewind(&mut self, rng: &RngStream, positive: bool) {
        let fresh = Side::new(rng, positive);
        self.steps = fresh.steps;
        self.shapes = fresh.shapes;
    }
}

#[derive(Clone)]
pub struct LimitMobile {
    laws: Arc<LawSet>,
    method: BridgeMethod,
    cap: usize,
    base: RngStream,
    spine_rng: RngStream,
    arena: Arena,
    shape: Vec<u64>,
    steps: Vec<SpineStep>,
    frontier: Option<NodeId>,
    s: Option<NodeId>,
    pos: Side,
    neg: Side,
    /// decorations whose labels all reach this value are not stored
    threshold: Option<i32>,
    left: Vec<NodeId>,
    right: Vec<NodeId>,
    pub eps: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Decoration {
    pub size: u64,
    pub delta_l: u32,
    pub min_label: i32,
}

/// The two-sided white contour of a window: `vertex[k]` is the corner at
/// contour position `k - zero`.
#[derive(Clone, Debug)]
pub struct WhiteContour {
    pub vertex: Vec<NodeId>,
    pub label: Vec<i32>,
    pub zero: usize,
}

impl LimitMobile {
    pub fn new(laws: Arc<LawSet>, rng: &RngStream, method: BridgeMethod, cap: usize) -> Result<Self> {
        let arena = Arena { parent: vec![], first: vec![], nkids: vec![], depth: vec![], label: vec![], dec: vec![] };
        let eps = if rng.derive(TAG_EPS).coin() { 1 } else { -1 };
        let mut me = LimitMobile {
            laws,
            method,
            cap,
            base: rng.clone(),
            spine_rng: rng.derive(TAG_SPINE),
            arena,
            shape: Vec::new(),
            steps: Vec::new(),
            frontier: None,
            s: None,
            pos: Side::new(rng, true),
            neg: Side::new(rng, false),
            threshold: None,
            left: Vec::new(),
            right: Vec::new(),
            eps,
        };
        let root = me.arena.push(NONE, 0, 0);
        me.frontier = Some(root);
        me.grow_spine()?;
        Ok(me)
    }

    pub fn laws(&self) -> &LawSet {
        &self.laws
    }

    /// Vertices stored in the window.
    pub fn nodes(&self) -> usize {
        self.arena.len()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn label(&self, v: NodeId) -> i32 {
        self.arena.label[v as usize]
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.arena.parent[v as usize];
        (p != NONE).then_some(p)
    }

    pub fn depth(&self, v: NodeId) -> u32 {
        self.arena.depth[v as usize]
    }

    pub fn decoration(&self, v: NodeId) -> i64 {
        self.arena.dec[v as usize]
    }

    /// The vertex of infinite degree, once the spine has reached it.
    pub fn s(&self) -> Option<NodeId> {
        self.s
    }

    /// Number of spine edges from the root to `s`, if `s` has been found.
    pub fn spine_length(&self) -> Option<usize> {
        self.s.map(|s| self.depth(s) as usize)
    }

    /// `s_i` for `i` in the window (`i = 0` is the parent of `s`); `None`
    /// also for a decoration that was pruned.
    pub fn s_vertex(&self, i: i64) -> Option<NodeId> {
        let s = self.s?;
        if i == 0 {
            return self.parent(s);
        }
        let side = if i > 0 { &self.pos } else { &self.neg };
        let i = i.unsigned_abs();
        side.kept.binary_search_by_key(&i, |&(j, _)| j).ok().map(|k| side.kept[k].1)
    }

    /// Window of `s_i` indices: `(a, b)` means `s_{-a}..=s_b` have been generated.
    pub fn s_window(&self) -> (usize, usize) {
        (self.neg.count as usize, self.pos.count as usize)
    }

    /// Prune decorations whose white labels are all at least `t`.
    ///
    /// Arcs between vertices of label below `t - 1` are unaffected, so a
    /// ball around the root only needs `t` above its largest label plus
    /// one. Takes effect on a window with no `s_i` yet, or one that already
    /// prunes, where it can only raise the threshold.
    pub fn prune_above(&mut self, t: i32) -> Result<()> {
        match self.threshold {
            None if self.pos.count + self.neg.count > 0 => Ok(()),
            None => {
                self.threshold = Some(t);
                Ok(())
            }
            Some(old) if t <= old => Ok(()),
            Some(_) => {
                self.threshold = Some(t);
                self.rematerialise(true)?;
                self.rematerialise(false)
            }
        }
    }

    pub fn threshold(&self) -> Option<i32> {
        self.threshold
    }

    pub fn is_pruned(&self) -> bool {
        self.threshold.is_some()
    }

    fn check_cap(&self) -> Result<()> {
        if self.arena.len() > self.cap {
            return Err(Error::Capacity(format!(
                "limit mobile window exceeded {} vertices; rerun with a larger cap to continue from the same seed",
                self.cap
            )));
        }
        Ok(())
    }

    /// Children of a black vertex `b` with `m` white children: labels from a
    /// uniform bridge relative to the parent of `b`.
    fn black_children(&mut self, b: NodeId, m: usize, rng: &mut RngStream, dec: i64) -> Result<()> {
        let base = self.arena.label[self.arena.parent[b as usize] as usize];
        let x = sample_bridge(m + 1, rng, self.method);
        let first = self.arena.len() as NodeId;
        let mut l = base;
        for xi in x.iter().take(m) {
            l = l.checked_add(*xi).ok_or_else(|| Error::Numerics("label overflow".into()))?;
            self.arena.push(b, l, dec);
        }
        self.arena.first[b as usize] = first;
        self.arena.nkids[b as usize] = m as u32;
        Ok(())
    }

    fn white_children(&mut self, w: NodeId, k: usize, dec: i64) {
        let first = self.arena.len() as NodeId;
        for _ in 0..k {
            self.arena.push(w, 0, dec);
        }
        self.arena.first[w as usize] = first;
        self.arena.nkids[w as usize] = k as u32;
    }

    /// Grow the finite two-type tree below `v` (normal vertices only).
    fn outgrowth(&mut self, v: NodeId, rng: &mut RngStream, dec: i64) -> Result<()> {
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            if self.arena.white(x) {
                let k = self.laws.white(rng) as usize;
                self.white_children(x, k, dec);
            } else {
                let m = self.laws.black(rng) as usize;
                self.black_children(x, m, rng, dec)?;
            }
            queue.extend(self.arena.kids(x));
            self.check_cap()?;
        }
        Ok(())
    }

    /// Expand one special white vertex and its special black child.
    fn grow_spine(&mut self) -> Result<()> {
        let Some(w) = self.frontier.take() else { return Ok(()) };
        let mut rng = self.spine_rng.derive(self.steps.len() as u64);
        let k = self.laws.hat_white(&mut rng) as usize;
        let u = rng.below(k as u64) as u32;
        self.white_children(w, k, 0);
        let kids: Vec<NodeId> = self.arena.kids(w).collect();
        for (j, &b) in kids.iter().enumerate() {
            if j as u32 != u {
                self.outgrowth(b, &mut rng, 0)?;
            }
        }
        let b = kids[u as usize];
        let step = match self.laws.hat_black(&mut rng) {
            Some(m) => {
                let m = m as usize;
                let u2 = rng.below(m as u64) as u32;
                self.black_children(b, m, &mut rng, 0)?;
                let bk: Vec<NodeId> = self.arena.kids(b).collect();
                for (j, &y) in bk.iter().enumerate() {
                    if j as u32 != u2 {
                        self.outgrowth(y, &mut rng, 0)?;
                    }
                }
                self.frontier = Some(bk[u2 as usize]);
                SpineStep { white: w, special_white_kid: u, black: b, special_black_kid: Some(u2) }
            }
            None => {
                self.s = Some(b);
                let l = self.arena.label[w as usize];
                self.pos.label = l;
                self.neg.label = l;
                SpineStep { white: w, special_white_kid: u, black: b, special_black_kid: None }
            }
        };
        self.emit_step(&step);
        self.steps.push(step);
        self.check_cap()
    }

    fn emit_subtree(&self, v: NodeId, mirror: bool, out: &mut Vec<NodeId>) {
        let a = &self.arena;
        let mut stack: Vec<(NodeId, u32)> = vec![(v, 0)];
        if a.white(v) {
            out.push(v);
        }
        while let Some(&mut (x, ref mut i)) = stack.last_mut() {
            let n = a.nkids[x as usize];
            if *i < n {
                let idx = if mirror { n - 1 - *i } else { *i };
                *i += 1;
                let c = a.first[x as usize] + idx;
                if a.white(c) {
                    out.push(c);
                }
                stack.push((c, 0));
            } else {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    if a.white(p) {
                        out.push(p);
                    }
                }
            }
        }
    }

    fn emit_step(&mut self, st: &SpineStep) {
        let a = &self.arena;
        let w = st.white;
        let k = a.nkids[w as usize];
        let is_root = w == 0;
        let mut left = Vec::new();
        let mut right = Vec::new();
        left.push(w);
        for j in 0..st.special_white_kid {
            let b = a.first[w as usize] + j;
            for y in a.kids(b) {
                self.emit_subtree(y, false, &mut left);
            }
            left.push(w);
        }
        if !is_root {
            right.push(w);
        }
        for j in (st.special_white_kid + 1..k).rev() {
            let b = a.first[w as usize] + j;
            for y in a.kids(b).rev() {
                self.emit_subtree(y, true, &mut right);
            }
            right.push(w);
        }
        if let Some(u2) = st.special_black_kid {
            let b = st.black;
            let m = a.nkids[b as usize];
            for j in 0..u2 {
                self.emit_subtree(a.first[b as usize] + j, false, &mut left);
            }
            for j in (u2 + 1..m).rev() {
                self.emit_subtree(a.first[b as usize] + j, true, &mut right);
            }
        }
        self.left.extend(left);
        self.right.extend(right);
    }

    /// Offspring counts of a decoration in breadth-first order, read from
    /// the shape stream of one side; returns the number of white vertices.
    fn sample_shape(&mut self, positive: bool) -> Result<u64> {
        let side = if positive { &mut self.pos } else { &mut self.neg };
        self.shape.clear();
        let (mut level, mut white, mut whites) = (1u64, true, 0u64);
        while level > 0 {
            let mut next = 0u64;
            for _ in 0..level {
                let c = if white { self.laws.white(&mut side.shapes) } else { self.laws.black(&mut side.shapes) };
                self.shape.push(c);
                next += c;
            }
            if white {
                whites += level;
            }
            if self.shape.len() as u64 + next > self.cap as u64 {
                return Err(Error::Capacity(format!(
                    "decoration larger than {} vertices; rerun with a larger cap to continue from the same seed",
                    self.cap
                )));
            }
            level = next;
            white = !white;
        }
        Ok(whites)
    }

    /// Generate the decoration of `s_{±i}` with the given label; returns its
    /// root unless it was pruned.
    fn grow_decoration(&mut self, positive: bool, i: u64, label: i32) -> Result<Option<NodeId>> {
        let whites = self.sample_shape(positive)?;
        // crossing a black vertex with m white children lowers labels by at most m
        if self.threshold.is_some_and(|t| label as i64 - (whites as i64 - 1) >= t as i64) {
            return Ok(None);
        }
        let s = self.s.expect("decorations hang off s");
        let start = self.arena.len();
        let dec = if positive { i as i64 } else { -(i as i64) };
        let v = self.arena.push(s, label, dec);
        let mut rng = (if positive { &self.pos } else { &self.neg }).labels.derive(i);
        let shape = std::mem::take(&mut self.shape);
        for (j, &c) in shape.iter().enumerate() {
            let x = (start + j) as NodeId;
            if self.arena.white(x) {
                self.white_children(x, c as usize, dec);
            } else {
                self.black_children(x, c as usize, &mut rng, dec)?;
            }
        }
        self.shape = shape;
        self.check_cap()?;
        if let Some(t) = self.threshold {
            let a = &self.arena;
            if (start..a.len()).all(|x| !a.white(x as NodeId) || a.label[x] >= t) {
                self.arena.truncate(start);
                return Ok(None);
            }
        }
        Ok(Some(v))
    }

    fn add_s_child(&mut self, positive: bool) -> Result<()> {
        let side = if positive { &mut self.pos } else { &mut self.neg };
        let x = sample_increment(&mut side.steps);
        let i = side.count + 1;
        let label = if positive { side.label + x } else { side.label - x };
        let v = self.grow_decoration(positive, i, label)?;
        let side = if positive { &mut self.pos } else { &mut self.neg };
        side.count = i;
        side.label = label;
        if let Some(v) = v {
            side.kept.push((i, v));
        }
        if side.count > 64 * self.cap as u64 {
            return Err(Error::Capacity(format!(
                "more than {} neighbours of s on one side; rerun with a larger cap to continue from the same seed",
                64 * self.cap as u64
            )));
        }
        Ok(())
    }

    /// Regenerate the pruned decorations of one side after the threshold rose.
    fn rematerialise(&mut self, positive: bool) -> Result<()> {
        let Some(s0) = self.s.and_then(|s| self.parent(s)) else { return Ok(()) };
        let base = self.base.clone();
        let side = if positive { &mut self.pos } else { &mut self.neg };
        side.rewind(&base, positive);
        let old = std::mem::take(&mut side.kept);
        let count = side.count;
        let mut kept = Vec::with_capacity(old.len());
        let mut old = old.into_iter().peekable();
        let mut label = self.label(s0);
        for i in 1..=count {
            let side = if positive { &mut self.pos } else { &mut self.neg };
            let x = sample_increment(&mut side.steps);
            label = if positive { label + x } else { label - x };
            if let Some(&(j, v)) = old.peek() {
                if j == i {
                    self.sample_shape(positive)?;
                    kept.push((j, v));
                    old.next();
                    continue;
                }
            }
            if let Some(v) = self.grow_decoration(positive, i, label)? {
                kept.push((i, v));
            }
        }
        let side = if positive { &mut self.pos } else { &mut self.neg };
        side.kept = kept;
        Ok(())
    }

    /// Enlarge the window: more spine steps, or twice as many neighbours of
    /// `s` on the chosen sides (`pos` for `i > 0`).
    pub fn extend(&mut self, pos: bool, neg: bool) -> Result<()> {
        if self.s.is_none() {
            let n = self.steps.len().max(1);
            for _ in 0..n {
                self.grow_spine()?;
                if self.s.is_some() {
                    break;
                }
            }
            return Ok(());
        }
        for (positive, on) in [(true, pos), (false, neg)] {
            if on {
                let side = if positive { &self.pos } else { &self.neg };
                for _ in 0..side.count.max(4) {
                    self.add_s_child(positive)?;
                }
            }
        }
        Ok(())
    }

    /// Add neighbours of `s` on one side, at least one, until the label of
    /// the last `s_i` is at most `target` (no-op before `s`).
    pub fn extend_until(&mut self, positive: bool, target: i32) -> Result<()> {
        if self.s.is_none() {
            return Ok(());
        }
        loop {
            self.add_s_child(positive)?;
            if (if positive { &self.pos } else { &self.neg }).label <= target {
                return Ok(());
            }
        }
    }

    /// Ensure at least `k` neighbours of `s` on each side (no-op before `s`).
    pub fn ensure_s_window(&mut self, k: usize) -> Result<()> {
        if self.s.is_none() {
            return Ok(());
        }
        while self.pos.count < k as u64 {
            self.add_s_child(true)?;
        }
        while self.neg.count < k as u64 {
            self.add_s_child(false)?;
        }
        Ok(())
    }

    /// Grow the spine until `s` is found or its depth exceeds `depth`.
    pub fn ensure_spine_depth(&mut self, depth: u32) -> Result<()> {
        while self.s.is_none() && self.frontier.map_or(false, |f| self.depth(f) <= depth) {
            self.grow_spine()?;
        }
        Ok(())
    }

    pub fn is_white(&self, v: NodeId) -> bool {
        self.arena.white(v)
    }

    pub fn outdegree(&self, v: NodeId) -> usize {
        self.arena.nkids[v as usize] as usize
    }

    /// Label of `s_i`, if present.
    pub fn s_label(&self, i: i64) -> Option<i32> {
        self.s_vertex(i).map(|v| self.label(v))
    }

    /// Size (all vertices) and label displacement of every stored
    /// decoration, keyed by index.
    pub fn decorations(&self) -> std::collections::BTreeMap<i64, Decoration> {
        let mut out: std::collections::BTreeMap<i64, Decoration> = Default::default();
        if self.s.is_none() {
            return out;
        }
        let s = self.s.unwrap();
        for v in 0..self.arena.len() as NodeId {
            if v == s {
                continue;
            }
            let i = self.arena.dec[v as usize];
            let root = self.label(self.s_vertex(i).expect("decoration root"));
            let e = out.entry(i).or_insert(Decoration { size: 0, delta_l: 0, min_label: i32::MAX });
            e.size += 1;
            if self.arena.white(v) {
                let l = self.label(v);
                e.delta_l = e.delta_l.max((l - root).unsigned_abs());
                e.min_label = e.min_label.min(l);
            }
        }
        out
    }

    pub fn contour(&self) -> WhiteContour {
        let mut right = self.right.clone();
        for &(_, v) in &self.neg.kept {
            self.emit_subtree(v, true, &mut right);
        }
        let mut vertex: Vec<NodeId> = right.into_iter().rev().collect();
        let zero = vertex.len();
        vertex.extend_from_slice(&self.left);
        for &(_, v) in &self.pos.kept {
            self.emit_subtree(v, false, &mut vertex);
        }
        let label = vertex.iter().map(|&v| self.label(v)).collect();
        WhiteContour { vertex, label, zero }
    }

    /// Labels of `s_{-a}, ..., s_b` for the current window, which must not
    /// be pruned.
    pub fn s_labels(&self) -> Vec<i32> {
        assert!(!self.is_pruned(), "s labels of a pruned window");
        let mut out: Vec<i32> = self.neg.kept.iter().rev().map(|&(_, v)| self.label(v)).collect();
        if let Some(s0) = self.s.and_then(|s| self.parent(s)) {
            out.push(self.label(s0));
        }
        out.extend(self.pos.kept.iter().map(|&(_, v)| self.label(v)));
        out
    }

    /// The truncation at radius `r` as a plane tree with signed indices,
    /// growing the window as needed.
    pub fn truncated_tree(&mut self, r: usize) -> Result<PlaneTree> {
        if self.is_pruned() {
            return Err(Error::Invalid("truncation of a pruned window".into()));
        }
        self.ensure_spine_depth(r as u32)?;
        self.ensure_s_window(r / 2 + 1)?;
        let mut t = PlaneTree::singleton();
        let mut stack = vec![(0 as NodeId, 0 as NodeId)];
        let lo = -((r as i64 + 1) / 2);
        let hi = (r / 2) as i64;
        while let Some((v, nv)) = stack.pop() {
            if self.depth(v) as usize >= r {
                continue;
            }
            let kids: Vec<(i64, NodeId)> = if Some(v) == self.s {
                let mut k: Vec<(i64, NodeId)> = self.pos.kept.iter().enumerate().map(|(i, &(_, c))| (i as i64, c)).collect();
                k.extend(self.neg.kept.iter().enumerate().rev().map(|(i, &(_, c))| (-(i as i64) - 1, c)));
                k
            } else if self.arena.first[v as usize] == NONE && self.frontier == Some(v) {
                return Err(Error::Capacity("spine frontier inside the truncation".into()));
            } else {
                let n = self.arena.nkids[v as usize] as usize;
                self.arena.kids(v).enumerate().map(|(p, c)| (crate::tree::signed_index(p, n), c)).collect()
            };
            let keep: Vec<(i64, NodeId)> = kids.into_iter().filter(|&(i, _)| lo < i && i <= hi).collect();
            let nonneg = keep.iter().filter(|&&(i, _)| i >= 0).count();
            let mut pushed = Vec::new();
            for &(_, c) in &keep {
                pushed.push((c, t.push_child(nv)));
            }
            if Some(v) == self.s && keep.len() < r {
                t.set_infinite(nv, nonneg);
            }
            for p in pushed.into_iter().rev() {
                stack.push(p);
            }
        }
        Ok(t.canonical())
    }
}

/// Why a vertex of a window is not certified.
pub const SHORT_POS: u8 = 1;
pub const SHORT_NEG: u8 = 2;
pub const SHORT_PRUNED: u8 = 4;

/// Map built on a window: every arc whose both ends lie in the window, and
/// the set of certified vertices.
#[derive(Clone, Debug)]
pub struct WindowMap {
    pub map: PlanarMap,
    /// mobile vertex of each map vertex
    pub node: Vec<NodeId>,
    /// map vertex of each mobile vertex (`NONE` if absent)
    pub vertex_of: Vec<VertexId>,
    pub certified: Vec<bool>,
    /// `SHORT_*` flags of each uncertified vertex
    pub shortfall: Vec<u8>,
    pub label: Vec<i32>,
    pub root: Option<VertexId>,
    /// label of the corner at `s_0` where the root edge starts
    pub zero_label: Option<i32>,
}

impl WindowMap {
    pub fn build(lm: &LimitMobile) -> WindowMap {
        let c = lm.contour();
        let n = c.vertex.len();
        let succ = successors_linear(&c.label);
        let mut vid = vec![NONE; lm.nodes()];
        let mut node = Vec::new();
        for &v in &c.vertex {
            if vid[v as usize] == NONE {
                vid[v as usize] = node.len() as VertexId;
                node.push(v);
            }
        }
        let nv = node.len();
        // prefix minimum strictly before each corner, suffix minimum strictly after
        let mut pre = vec![i32::MAX; n];
        let mut m = i32::MAX;
        for k in 0..n {
            pre[k] = m;
            m = m.min(c.label[k]);
        }
        let mut suf = vec![i32::MAX; n];
        m = i32::MAX;
        for k in (0..n).rev() {
            suf[k] = m;
            m = m.min(c.label[k]);
        }
        let mut shortfall = vec![0u8; nv];
        let top = lm.threshold().map_or(i32::MAX, |t| t.saturating_sub(2));
        for k in 0..n {
            let v = vid[c.vertex[k] as usize] as usize;
            let l = c.label[k];
            if suf[k] > l - 1 {
                shortfall[v] |= SHORT_POS;
            }
            if pre[k] > l {
                shortfall[v] |= SHORT_NEG;
            }
            if l > top {
                shortfall[v] |= SHORT_PRUNED;
            }
        }
        let certified = shortfall.iter().map(|&f| f == 0).collect();
        let mut edge_of = vec![u32::MAX; n];
        let mut ne = 0u32;
        for k in 0..n {
            if succ[k].is_some() {
                edge_of[k] = ne;
                ne += 1;
            }
        }
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
        for k in 0..n {
            if let Some(t) = succ[k] {
                incoming[t].push(k);
            }
        }
        let mut rotations: Vec<Vec<HalfEdge>> = vec![Vec::new(); nv];
        for k in 0..n {
            let v = vid[c.vertex[k] as usize] as usize;
            // incoming arcs, nearest first, then the outgoing arc
            for &q in incoming[k].iter().rev() {
                rotations[v].push(2 * edge_of[q] + 1);
            }
            if succ[k].is_some() {
                rotations[v].push(2 * edge_of[k]);
            }
        }
        let root_edge = edge_of[c.zero];
        let (root_he, root) = if root_edge == u32::MAX {
            (0, None)
        } else if lm.eps == 1 {
            (2 * root_edge + 1, Some(vid[c.vertex[succ[c.zero].unwrap()] as usize]))
        } else {
            (2 * root_edge, Some(vid[c.vertex[c.zero] as usize]))
        };
        let mut map = PlanarMap::from_rotations(&rotations, root_he).expect("window rotation system");
        let label: Vec<i32> = node.iter().map(|&v| lm.label(v)).collect();
        map.labels = Some(label.clone());
        let zero_label = c.label.get(c.zero).copied();
        WindowMap { map, node, vertex_of: vid, certified, shortfall, label, root, zero_label }
    }

    /// Breadth-first distances from `src`, stopping at distance `r`; `Err`
    /// carries the first uncertified vertex met within the radius.
    pub fn certified_distances(&self, src: VertexId, r: u32) -> std::result::Result<Vec<(VertexId, u32)>, VertexId> {
        let mut dist = std::collections::HashMap::new();
        let mut order = vec![(src, 0)];
        dist.insert(src, 0u32);
        let mut i = 0;
        while i < order.len() {
            let (v, d) = order[i];
            i += 1;
            if !self.certified[v as usize] {
                return Err(v);
            }
            if d == r {
                continue;
            }
            for w in self.map.neighbours(v) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(d + 1);
                    order.push((w, d + 1));
                }
            }
        }
        Ok(order)
    }

    /// Grow `lm` so that `v` has a chance of being certified next time.
    pub fn extend_for(&self, lm: &mut LimitMobile, v: VertexId) -> Result<()> {
        let l = self.label[v as usize];
        let f = self.shortfall[v as usize];
        if lm.s().is_none() {
            return lm.extend(true, true);
        }
        if f & SHORT_PRUNED != 0 {
            let t = lm.threshold().unwrap_or(i32::MAX);
            lm.prune_above((l + 2).max(t.saturating_add(t.abs() / 2 + 1)))?;
        }
        if f & SHORT_POS != 0 {
            lm.extend_until(true, l - 1)?;
        }
        if f & SHORT_NEG != 0 {
            lm.extend_until(false, l)?;
        }
        Ok(())
    }
}

/// A ball of the limit map whose vertices all have their full neighbourhood.
#[derive(Clone, Debug)]
pub struct CertifiedBall {
    pub window: WindowMap,
    pub radius: u32,
    pub root: VertexId,
    /// `(vertex, distance)` for every vertex of the ball, in BFS order.
    pub members: Vec<(VertexId, u32)>,
}

impl CertifiedBall {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The ball as a rooted planar map (induced submap).
    pub fn submap(&self) -> PlanarMap {
        let keep: Vec<VertexId> = self.members.iter().map(|&(v, _)| v).collect();
        let mut m = self.window.map.clone();
        m.root = self.window.map.root;
        m.induced(&keep).0
    }
}

/// Grow `lm` until the ball of radius `r` around the root is certified.
/// A pruned window has its threshold raised to fit the ball.
pub fn certify_ball(lm: &mut LimitMobile, r: u32) -> Result<CertifiedBall> {
    if lm.is_pruned() {
        lm.prune_above(r as i32 + 2)?;
    }
    loop {
        let wm = WindowMap::build(lm);
        match wm.root {
            Some(root) => match wm.certified_distances(root, r) {
                Ok(members) => return Ok(CertifiedBall { window: wm, radius: r, root, members }),
                Err(v) => wm.extend_for(lm, v)?,
            },
            None => match (lm.s(), wm.zero_label) {
                (Some(_), Some(l)) => lm.extend_until(true, l - 1)?,
                _ => lm.extend(true, true)?,
            },
        }
    }
}

/// Sample a limit mobile and certify the ball of radius `r`, on a window
/// that prunes decorations out of reach of the ball.
pub fn sample_uiptree_ball(laws: Arc<LawSet>, rng: &RngStream, r: u32, cap: usize) -> Result<(LimitMobile, CertifiedBall)> {
    let mut lm = LimitMobile::new(laws, rng, BridgeMethod::StarsAndBars, cap)?;
    lm.prune_above(r as i32 + 2)?;
    let ball = certify_ball(&mut lm, r)?;
    Ok((lm, ball))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::offspring_laws;
    use crate::weights::FaceWeights;

    fn laws(fw: FaceWeights) -> Arc<LawSet> {
        Arc::new(offspring_laws(&fw).unwrap().sampler().unwrap())
    }

    #[test]
    fn contour_labels_step_rule() {
        for fw in [FaceWeights::uniform(), FaceWeights::PowerLaw { c: 1.0, beta: 5.0 }, FaceWeights::Superexponential { c: 1.0 }] {
            let l = laws(fw);
            for seed in 0..20 {
                let mut lm = LimitMobile::new(l.clone(), &RngStream::new(seed, 0), BridgeMethod::StarsAndBars, 1 << 22).unwrap();
                for _ in 0..3 {
                    lm.extend(true, true).unwrap();
                }
                let c = lm.contour();
                assert!(c.label.windows(2).all(|w| w[1] - w[0] >= -1), "seed {seed}");
                assert_eq!(c.vertex[c.zero], 0);
            }
        }
    }

    #[test]
    fn corners_per_vertex_equal_degree() {
        let l = laws(FaceWeights::PowerLaw { c: 1.0, beta: 4.0 });
        let mut lm = LimitMobile::new(l, &RngStream::new(3, 1), BridgeMethod::StarsAndBars, 1 << 22).unwrap();
        lm.ensure_s_window(50).unwrap();
        let c = lm.contour();
        let mut count = std::collections::HashMap::new();
        for &v in &c.vertex {
            *count.entry(v).or_insert(0usize) += 1;
        }
        for (&v, &k) in &count {
            let deg = lm.arena.nkids[v as usize] as usize + usize::from(v != 0);
            assert_eq!(k, deg, "vertex {v}");
        }
    }

    #[test]
    fn balls_are_certified_and_reproducible() {
        let l = laws(FaceWeights::PowerLaw { c: 1.0, beta: 5.0 });
        let rng = RngStream::new(42, 7);
        let (_, b1) = sample_uiptree_ball(l.clone(), &rng, 6, 1 << 22).unwrap();
        let (_, b2) = sample_uiptree_ball(l, &rng, 6, 1 << 22).unwrap();
        assert_eq!(b1.submap().canonical_code(), b2.submap().canonical_code());
        let sub = b1.submap();
        assert!(sub.checks().bipartite);
        let d = sub.distances_from(sub.root_vertex());
        assert!(d.iter().all(|&x| x <= 6));
    }

    #[test]
    fn pruning_keeps_the_ball() {
        let l = laws(FaceWeights::PowerLaw { c: 1.0, beta: 5.0 });
        for seed in 0..8 {
            let rng = RngStream::new(seed, 3);
            let (lm, pruned) = sample_uiptree_ball(l.clone(), &rng, 8, 1 << 22).unwrap();
            assert!(lm.is_pruned());
            let mut full = LimitMobile::new(l.clone(), &rng, BridgeMethod::StarsAndBars, 1 << 22).unwrap();
            while full.steps.len() < lm.steps.len() {
                full.grow_spine().unwrap();
            }
            let (a, b) = lm.s_window();
            full.ensure_s_window(a.max(b)).unwrap();
            let wm = WindowMap::build(&full);
            let members = wm.certified_distances(wm.root.unwrap(), 8).unwrap();
            let ball = CertifiedBall { window: wm, radius: 8, root: members[0].0, members };
            assert_eq!(ball.submap().canonical_code(), pruned.submap().canonical_code(), "seed {seed}");
            // raising the threshold brings pruned decorations back in order
            let mut lm = lm;
            lm.prune_above(40).unwrap();
            let ball = certify_ball(&mut lm, 8).unwrap();
            assert_eq!(ball.submap().canonical_code(), pruned.submap().canonical_code(), "seed {seed}");
        }
    }

    #[test]
    fn degenerate_case_is_uiptree() {
        let l = laws(FaceWeights::Superexponential { c: 1.0 });
        let mut lm = LimitMobile::new(l, &RngStream::new(1, 0), BridgeMethod::StarsAndBars, 1 << 20).unwrap();
        assert_eq!(lm.spine_length(), Some(1));
        lm.ensure_s_window(10).unwrap();
        // every white vertex is the root or a leaf child of s
        assert_eq!(lm.nodes(), 2 + 20);
        let t = lm.truncated_tree(4).unwrap();
        assert_eq!(t.outdegrees(), vec![1, 4, 0, 0, 0, 0]);
    }
}
