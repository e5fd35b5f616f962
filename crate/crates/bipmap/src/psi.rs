//! Bijection from plane trees to mobiles that turns outdegrees of internal
//! vertices into degrees of black vertices.
//!
//! Leaves of the input become white vertices, internal vertices black ones.
//! Every leaf `v` owns the run of up-steps that follows it in the cyclic left
//! contour; the vertices on that run, read from the top, form its block
//! `b_1(v), ..., b_η(v)`. In the output, `v` is joined to each vertex of its
//! block.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{NodeId, PlaneTree, NONE};

#[derive(Clone, Debug, Serialize)]
pub struct PsiTrace {
    /// `(leaf, η)` for each leaf of the input, in preorder.
    pub eta: Vec<(NodeId, usize)>,
    /// `(leaf, [b_1, ..., b_η])`, ids of the input tree.
    pub ancestry_blocks: Vec<(NodeId, Vec<NodeId>)>,
    /// Image of every input vertex in the output tree.
    pub image: Vec<NodeId>,
}

impl PsiTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap()
    }
}

fn is_last_child(t: &PlaneTree, v: NodeId) -> bool {
    let p = t.parent(v).unwrap();
    *t.children(p).last().unwrap() == v
}

/// Block of a leaf: ancestors along the up-run, highest first.
fn block(t: &PlaneTree, leaf: NodeId) -> Vec<NodeId> {
    let mut run = Vec::new();
    let mut x = leaf;
    while let Some(p) = t.parent(x) {
        run.push(p);
        if !is_last_child(t, x) {
            break;
        }
        x = p;
    }
    run.reverse();
    run
}

/// Rightmost leaf of the subtree of `v`.
fn last_leaf(t: &PlaneTree, mut v: NodeId) -> NodeId {
    while let Some(&c) = t.children(v).last() {
        v = c;
    }
    v
}

fn build(n: usize, root: NodeId, kids: &[Vec<NodeId>]) -> (PlaneTree, Vec<NodeId>) {
    let mut out = PlaneTree::singleton();
    let mut image = vec![NONE; n];
    image[root as usize] = 0;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        let nv = image[v as usize];
        for &c in &kids[v as usize] {
            image[c as usize] = out.push_child(nv);
        }
        for &c in kids[v as usize].iter().rev() {
            stack.push(c);
        }
    }
    (out, image)
}

pub fn psi_forward(t: &PlaneTree) -> Result<(PlaneTree, PsiTrace)> {
    let n = t.len();
    if n < 2 {
        return Err(Error::Invalid("the bijection needs at least one edge".into()));
    }
    let leaves: Vec<NodeId> = t.preorder().into_iter().filter(|&v| t.out(v) == 0).collect();
    let mut kids: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut blocks = Vec::with_capacity(leaves.len());
    let root_leaf = last_leaf(t, t.root());
    for &v in &leaves {
        let b = block(t, v);
        kids[v as usize] = if v == root_leaf { b.clone() } else { b[1..].to_vec() };
        blocks.push((v, b));
    }
    for v in t.preorder() {
        let c = t.children(v);
        if !c.is_empty() {
            kids[v as usize] = c[..c.len() - 1].iter().map(|&x| last_leaf(t, x)).collect();
        }
    }
    let (out, image) = build(n, root_leaf, &kids);
    if out.len() != n {
        return Err(Error::Numerics("bijection produced a disconnected image".into()));
    }
    let eta = blocks.iter().map(|(v, b)| (*v, b.len())).collect();
    Ok((out, PsiTrace { eta, ancestry_blocks: blocks, image }))
}

pub fn psi_inverse(m: &PlaneTree) -> Result<PlaneTree> {
    let n = m.len();
    if n < 2 {
        return Err(Error::Invalid("the bijection needs at least one edge".into()));
    }
    let r = m.root();
    let troot = m.children(r)[0];
    let mut kids: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    // the block of a white vertex: its parent (unless root) then its children
    let blk = |w: NodeId| -> Vec<NodeId> {
        let mut b: Vec<NodeId> = m.parent(w).into_iter().collect();
        b.extend_from_slice(m.children(w));
        b
    };
    for x in m.preorder() {
        if m.depth(x) % 2 == 0 {
            continue;
        }
        let mut c: Vec<NodeId> = m.children(x).iter().map(|&w| m.children(w).first().copied().unwrap_or(w)).collect();
        let u = m.parent(x).unwrap();
        let b = blk(u);
        let k = b.iter().position(|&y| y == x).unwrap();
        c.push(if k + 1 < b.len() { b[k + 1] } else { u });
        kids[x as usize] = c;
    }
    let (out, _) = build(n, troot, &kids);
    if out.len() != n {
        return Err(Error::Invalid("input is not in the image of the bijection".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::all_trees;

    #[test]
    fn single_edge() {
        let t = PlaneTree::from_outdegrees(&[1, 0]).unwrap();
        let (m, trace) = psi_forward(&t).unwrap();
        assert_eq!(m.outdegrees(), vec![1, 0]);
        assert_eq!(trace.eta, vec![(1, 1)]);
        assert!(psi_inverse(&m).unwrap().same_shape(&t));
    }

    #[test]
    fn round_trip_and_degree_transfer() {
        for n in 1..=7 {
            for t in all_trees(n) {
                let (m, trace) = psi_forward(&t).unwrap();
                assert!(psi_inverse(&m).unwrap().same_shape(&t));
                for v in 0..t.len() as NodeId {
                    let w = trace.image[v as usize];
                    if t.out(v) > 0 {
                        assert_eq!(m.depth(w) % 2, 1);
                        assert_eq!(m.deg(w), t.out(v));
                    } else {
                        assert_eq!(m.depth(w) % 2, 0);
                    }
                }
                assert_eq!(trace.eta.iter().map(|e| e.1).sum::<usize>(), n);
            }
        }
    }
}
