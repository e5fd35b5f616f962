//! Resistor networks, the star map `M*`, the metric `d#`, projected
//! conductances, volume profiles and the `J(lambda)` diagnostic.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bdg::successors_linear;
use crate::error::{Error, Result};
use crate::limit::{LimitMobile, WindowMap, SHORT_NEG, SHORT_POS};
use crate::map::VertexId;

/// Number of interior nodes below which [`Solver::Auto`] uses a dense solve.
pub const DENSE_LIMIT: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Auto,
    Dense,
    ConjugateGradient,
}

/// Undirected network with conductances in `(0, inf]`.
#[derive(Clone, Debug, Default)]
pub struct ResistorNetwork {
    pub nodes: usize,
    pub edges: Vec<(u32, u32, f64)>,
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n as u32).collect())
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut r = x;
        while self.0[r as usize] != r {
            r = self.0[r as usize];
        }
        let mut y = x;
        while self.0[y as usize] != r {
            let n = self.0[y as usize];
            self.0[y as usize] = r;
            y = n;
        }
        r
    }

    fn union(&mut self, a: u32, b: u32) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b) as usize] = a.min(b);
        }
    }
}

/// Compact network after contraction: node 0 is the source set, node 1 the
/// sink set; parallel edges merged.
struct Reduced {
    n: usize,
    adj: Vec<BTreeMap<u32, f64>>,
}

impl ResistorNetwork {
    pub fn new(nodes: usize) -> Self {
        ResistorNetwork { nodes, edges: Vec::new() }
    }

    pub fn add(&mut self, u: u32, v: u32, c: f64) {
        assert!(c > 0.0, "conductance must be positive");
        self.edges.push((u, v, c));
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("u\tv\tconductance\n");
        for &(u, v, c) in &self.edges {
            s.push_str(&format!("{u}\t{v}\t{c}\n"));
        }
        s
    }

    /// Contract infinite edges and the two terminal sets; keep the
    /// component of the source. `None` when the sets touch.
    fn reduce(&self, a: &[u32], b: &[u32]) -> Result<Option<Reduced>> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Invalid("terminal sets must be non-empty".into()));
        }
        let mut uf = UnionFind::new(self.nodes);
        for &(u, v, c) in &self.edges {
            if c.is_infinite() {
                uf.union(u, v);
            }
        }
        for w in a.windows(2) {
            uf.union(w[0], w[1]);
        }
        for w in b.windows(2) {
            uf.union(w[0], w[1]);
        }
        let (ra, rb) = (uf.find(a[0]), uf.find(b[0]));
        if ra == rb {
            return Ok(None);
        }
        let mut id = vec![u32::MAX; self.nodes];
        id[ra as usize] = 0;
        id[rb as usize] = 1;
        let mut n = 2u32;
        let mut adj: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(), BTreeMap::new()];
        for &(u, v, c) in &self.edges {
            if c.is_infinite() {
                continue;
            }
            let (ru, rv) = (uf.find(u), uf.find(v));
            if ru == rv {
                continue;
            }
            for r in [ru, rv] {
                if id[r as usize] == u32::MAX {
                    id[r as usize] = n;
                    n += 1;
                    adj.push(BTreeMap::new());
                }
            }
            let (x, y) = (id[ru as usize], id[rv as usize]);
            *adj[x as usize].entry(y).or_insert(0.0) += c;
            *adj[y as usize].entry(x).or_insert(0.0) += c;
        }
        // restrict to the component of the source
        let mut seen = vec![false; n as usize];
        seen[0] = true;
        let mut q = VecDeque::from([0u32]);
        while let Some(x) = q.pop_front() {
            for &y in adj[x as usize].keys() {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    q.push_back(y);
                }
            }
        }
        if !seen[1] {
            return Ok(Some(Reduced { n: 0, adj: Vec::new() }));
        }
        let mut new_id = vec![u32::MAX; n as usize];
        let mut m = 0u32;
        for x in 0..n as usize {
            if seen[x] {
                new_id[x] = m;
                m += 1;
            }
        }
        let mut out = vec![BTreeMap::new(); m as usize];
        for x in 0..n as usize {
            if !seen[x] {
                continue;
            }
            for (&y, &c) in &adj[x] {
                out[new_id[x] as usize].insert(new_id[y as usize], c);
            }
        }
        Ok(Some(Reduced { n: m as usize, adj: out }))
    }

    /// Effective resistance between node sets `a` and `b`; infinite when
    /// they are disconnected.
    pub fn effective_resistance(&self, a: &[u32], b: &[u32], solver: Solver) -> Result<f64> {
        let red = match self.reduce(a, b)? {
            None => return Ok(0.0),
            Some(r) if r.n == 0 => return Ok(f64::INFINITY),
            Some(r) => r,
        };
        let interior = red.n - 2;
        let phi = if interior == 0 {
            Vec::new()
        } else {
            let use_dense = match solver {
                Solver::Dense => true,
                Solver::ConjugateGradient => false,
                Solver::Auto => interior < DENSE_LIMIT,
            };
            if use_dense {
                dense_potentials(&red)?
            } else {
                cg_potentials(&red)?
            }
        };
        let pot = |x: u32| match x {
            0 => 1.0,
            1 => 0.0,
            x => phi[x as usize - 2],
        };
        let current: f64 = red.adj[0].iter().map(|(&y, &c)| c * (1.0 - pot(y))).sum();
        if current <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(1.0 / current)
    }

    /// Series and parallel reductions only; `None` if the network does not
    /// reduce to a single edge between the terminals.
    pub fn series_parallel(&self, a: &[u32], b: &[u32]) -> Result<Option<f64>> {
        let mut red = match self.reduce(a, b)? {
            None => return Ok(Some(0.0)),
            Some(r) if r.n == 0 => return Ok(Some(f64::INFINITY)),
            Some(r) => r,
        };
        let mut alive = vec![true; red.n];
        let mut stack: Vec<u32> = (2..red.n as u32).collect();
        while let Some(x) = stack.pop() {
            if !alive[x as usize] {
                continue;
            }
            let deg = red.adj[x as usize].len();
            if deg == 1 || deg == 0 {
                let nb: Vec<u32> = red.adj[x as usize].keys().copied().collect();
                for y in nb {
                    red.adj[y as usize].remove(&x);
                    if y >= 2 {
                        stack.push(y);
                    }
                }
                red.adj[x as usize].clear();
                alive[x as usize] = false;
            } else if deg == 2 {
                let nb: Vec<(u32, f64)> = red.adj[x as usize].iter().map(|(&y, &c)| (y, c)).collect();
                let ((y, c1), (z, c2)) = (nb[0], nb[1]);
                let c = c1 * c2 / (c1 + c2);
                red.adj[y as usize].remove(&x);
                red.adj[z as usize].remove(&x);
                *red.adj[y as usize].entry(z).or_insert(0.0) += c;
                *red.adj[z as usize].entry(y).or_insert(0.0) += c;
                red.adj[x as usize].clear();
                alive[x as usize] = false;
                for w in [y, z] {
                    if w >= 2 {
                        stack.push(w);
                    }
                }
            }
        }
        if (2..red.n).any(|x| alive[x]) {
            return Ok(None);
        }
        Ok(Some(red.adj[0].get(&1).map_or(f64::INFINITY, |c| 1.0 / c)))
    }
}

fn dense_potentials(red: &Reduced) -> Result<Vec<f64>> {
    let m = red.n - 2;
    let mut l = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for x in 2..red.n {
        let i = x - 2;
        for (&y, &c) in &red.adj[x] {
            l[(i, i)] += c;
            match y {
                0 => rhs[i] += c,
                1 => {}
                y => l[(i, y as usize - 2)] -= c,
            }
        }
    }
    let ch = l.cholesky().ok_or_else(|| Error::Numerics("Laplacian block not positive definite".into()))?;
    Ok(ch.solve(&rhs).iter().copied().collect())
}

fn cg_potentials(red: &Reduced) -> Result<Vec<f64>> {
    let m = red.n - 2;
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for x in 2..red.n {
        let i = x - 2;
        for (&y, &c) in &red.adj[x] {
            diag[i] += c;
            match y {
                0 => rhs[i] += c,
                1 => {}
                y => rows[i].push((y as usize - 2, c)),
            }
        }
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..m {
            let mut s = diag[i] * v[i];
            for &(j, c) in &rows[i] {
                s -= c * v[j];
            }
            out[i] = s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; m];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz = dot(&r, &z);
    let bnorm = dot(&rhs, &rhs).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let tol = 1e-13 * bnorm;
    for _ in 0..(20 * m + 1000) {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol {
            return Ok(x);
        }
        for i in 0..m {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numerics("conjugate gradient did not reach tolerance".into()))
}

/// The star map `M*`: the tree of successors over the labels of `s_i`.
#[derive(Clone, Debug)]
pub struct StarMap {
    /// index of the first star vertex (`s_lo`)
    pub lo: i64,
    pub labels: Vec<i32>,
    pub succ: Vec<Option<usize>>,
    pub certified: Vec<bool>,
    /// position of the root `rho`
    pub root: usize,
    /// `d*(rho, .)` where reachable inside the window
    pub dist: Vec<Option<u32>>,
}

impl StarMap {
    pub fn build(lm: &LimitMobile) -> Result<StarMap> {
        if lm.s().is_none() {
            return Err(Error::Invalid("star map needs a vertex of infinite degree (kappa < 1)".into()));
        }
        if lm.is_pruned() {
            return Err(Error::Invalid("star map of a pruned window".into()));
        }
        let labels = lm.s_labels();
        let (a, _) = lm.s_window();
        let n = labels.len();
        let succ = successors_linear(&labels);
        let mut certified = vec![false; n];
        let mut pre = i32::MAX;
        let mut suf = vec![i32::MAX; n];
        for k in (0..n - 1).rev() {
            suf[k] = suf[k + 1].min(labels[k + 1]);
        }
        for k in 0..n {
            certified[k] = pre <= labels[k] && suf[k] < labels[k];
            pre = pre.min(labels[k]);
        }
        let s0 = a;
        let root = if lm.eps == -1 {
            s0
        } else {
            succ[s0].ok_or_else(|| Error::Certification("successor of s_0 outside the window".into()))?
        };
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, s) in succ.iter().enumerate() {
            if let Some(p) = s {
                children[*p].push(k);
            }
        }
        let mut dist = vec![None; n];
        dist[root] = Some(0);
        let mut q = VecDeque::from([root]);
        while let Some(x) = q.pop_front() {
            let d = dist[x].unwrap();
            let nb = children[x].iter().copied().chain(succ[x]);
            for y in nb {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    q.push_back(y);
                }
            }
        }
        Ok(StarMap { lo: -(a as i64), labels, succ, certified, root, dist })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, i: i64) -> Option<usize> {
        let p = i - self.lo;
        (p >= 0 && (p as usize) < self.len()).then_some(p as usize)
    }

    pub fn index(&self, p: usize) -> i64 {
        p as i64 + self.lo
    }

    /// Lowest common ancestor in the successor tree and `d*`.
    pub fn meet(&self, p: usize, q: usize) -> Option<(usize, u32)> {
        let (mut x, mut y) = (p, q);
        let mut d = 0;
        while self.labels[x] > self.labels[y] {
            x = self.succ[x]?;
            d += 1;
        }
        while self.labels[y] > self.labels[x] {
            y = self.succ[y]?;
            d += 1;
        }
        while x != y {
            x = self.succ[x]?;
            y = self.succ[y]?;
            d += 2;
        }
        Some((x, d))
    }

    /// Star edges (named by their lower end `k`, the edge `k - succ(k)`)
    /// on the path between `p` and `q`.
    fn path_edges(&self, p: usize, q: usize, out: &mut Vec<usize>) -> Option<()> {
        let (m, _) = self.meet(p, q)?;
        for mut x in [p, q] {
            while x != m {
                out.push(x);
                x = self.succ[x]?;
            }
        }
        Some(())
    }

    /// Labels the walk must reach on each side (`pos`, `neg`) so that the
    /// uncertified star vertices within `d* <= r` become certified.
    fn needs(&self, r: u32) -> (Option<i32>, Option<i32>) {
        let (mut pos, mut neg) = (None::<i32>, None::<i32>);
        let mut pre = i32::MAX;
        let mut suf = vec![i32::MAX; self.len()];
        for k in (0..self.len().saturating_sub(1)).rev() {
            suf[k] = suf[k + 1].min(self.labels[k + 1]);
        }
        for k in 0..self.len() {
            let l = self.labels[k];
            if self.dist[k].map_or(false, |d| d <= r) {
                if suf[k] >= l {
                    pos = Some(pos.map_or(l - 1, |p| p.min(l - 1)));
                }
                if pre > l {
                    neg = Some(neg.map_or(l, |p| p.min(l)));
                }
            }
            pre = pre.min(l);
        }
        (pos, neg)
    }

    /// Whether every star vertex within `d* <= r` of the root is certified.
    pub fn ball_certified(&self, r: u32) -> bool {
        self.dist.iter().zip(&self.certified).all(|(d, &c)| d.map_or(true, |d| d > r || c))
            && self.ball_complete(r)
    }

    /// No uncertified vertex can hide a missing neighbour at `d* < r`:
    /// every vertex with `d* < r` is certified and hence has all neighbours.
    fn ball_complete(&self, r: u32) -> bool {
        self.dist.iter().zip(&self.certified).all(|(d, &c)| d.map_or(true, |d| d >= r || c))
    }
}

/// A ball in the metric `d#` around `rho`, with everything needed to
/// compute volumes and resistances exactly.
#[derive(Clone, Debug)]
pub struct SharpBall {
    pub radius: u32,
    pub star: StarMap,
    pub window: WindowMap,
    /// star position of every map vertex
    pub star_of: Vec<usize>,
    pub is_star: Vec<bool>,
    /// `d#(rho, v)` for every map vertex whose star is reachable
    pub dsharp: Vec<Option<u32>>,
    /// map vertex of `rho`
    pub rho: VertexId,
    /// vertices with `d#(rho, v) < radius`
    pub members: Vec<VertexId>,
}

impl SharpBall {
    /// The ball, or the labels each side of the walk must still reach.
    fn try_build(lm: &LimitMobile, r: u32) -> Result<std::result::Result<SharpBall, (Option<i32>, Option<i32>)>> {
        let star = match StarMap::build(lm) {
            Ok(s) => s,
            Err(Error::Certification(_)) => {
                let (a, _) = lm.s_window();
                return Ok(Err((Some(lm.s_labels()[a] - 1), None)));
            }
            Err(e) => return Err(e),
        };
        if !star.ball_certified(r) {
            return Ok(Err(star.needs(r)));
        }
        let window = WindowMap::build(lm);
        let nv = window.node.len();
        let mut star_of = vec![0usize; nv];
        let mut is_star = vec![false; nv];
        let mut dsharp = vec![None; nv];
        for v in 0..nv {
            let node = window.node[v];
            let i = lm.decoration(node);
            let p = star.position(i).expect("decoration index inside the star window");
            star_of[v] = p;
            is_star[v] = lm.s_vertex(i) == Some(node);
            dsharp[v] = star.dist[p].map(|d| d + u32::from(!is_star[v]));
        }
        let rho_node = lm.s_vertex(star.index(star.root)).unwrap();
        let rho = window.vertex_of[rho_node as usize];
        let members: Vec<VertexId> = (0..nv as VertexId).filter(|&v| dsharp[v as usize].map_or(false, |d| d < r)).collect();
        let (mut pos, mut neg) = (None::<i32>, None::<i32>);
        for &v in &members {
            let (l, f) = (window.label[v as usize], window.shortfall[v as usize]);
            if f & SHORT_POS != 0 {
                pos = Some(pos.map_or(l - 1, |p| p.min(l - 1)));
            }
            if f & SHORT_NEG != 0 {
                neg = Some(neg.map_or(l, |p| p.min(l)));
            }
        }
        if pos.is_some() || neg.is_some() {
            return Ok(Err((pos, neg)));
        }
        Ok(Ok(SharpBall { radius: r, star, window, star_of, is_star, dsharp, rho, members }))
    }

    /// Grow the window until the `d#` ball of radius `r` is exact.
    pub fn build(lm: &mut LimitMobile, r: u32) -> Result<SharpBall> {
        if lm.laws().laws.hat_black_infinite() <= 0.0 {
            return Err(Error::Invalid("star map needs a vertex of infinite degree (kappa < 1)".into()));
        }
        while lm.s().is_none() {
            lm.extend(true, true)?;
        }
        lm.ensure_s_window((r as usize).pow(2).max(8))?;
        loop {
            match Self::try_build(lm, r)? {
                Ok(b) => return Ok(b),
                Err((None, None)) => lm.extend(true, true)?,
                Err((pos, neg)) => {
                    if let Some(t) = pos {
                        lm.extend_until(true, t)?;
                    }
                    if let Some(t) = neg {
                        lm.extend_until(false, t)?;
                    }
                }
            }
        }
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.window.map.degree(v)
    }

    /// `d#(u, v)` for map vertices; `None` if the star path leaves the window.
    pub fn dsharp_between(&self, u: VertexId, v: VertexId) -> Option<u32> {
        if u == v {
            return Some(0);
        }
        let (_, d) = self.star.meet(self.star_of[u as usize], self.star_of[v as usize])?;
        Some(d + u32::from(!self.is_star[u as usize]) + u32::from(!self.is_star[v as usize]))
    }

    /// `d*` of the projections of two map vertices.
    pub fn dstar_between(&self, u: VertexId, v: VertexId) -> Option<u32> {
        self.star.meet(self.star_of[u as usize], self.star_of[v as usize]).map(|x| x.1)
    }

    fn member_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.window.node.len()];
        for &v in &self.members {
            f[v as usize] = true;
        }
        f
    }

    /// `R_eff` in `M` between `rho` and the complement of the ball. Exact:
    /// the complement is shorted to a single node and every edge incident
    /// to the ball is known.
    pub fn reff_to_complement(&self) -> Result<f64> {
        let inb = self.member_flags();
        let sink = self.window.node.len() as u32;
        let mut net = ResistorNetwork::new(sink as usize + 1);
        for &v in &self.members {
            for w in self.window.map.neighbours(v) {
                if inb[w as usize] {
                    if v < w {
                        net.add(v, w, 1.0);
                    }
                } else {
                    net.add(v, sink, 1.0);
                }
            }
        }
        // each in-ball edge was seen from both ends; loops do not occur
        net.effective_resistance(&[self.rho], &[sink], Solver::Auto)
    }

    /// Projected network check: returns `(R_M, R_{M#,c}, R_{M*,c})` where
    /// the last two use the conductances obtained by routing the edges of
    /// a finite subgraph `G ⊇ ball ∪ ∂ball` along star geodesics.
    pub fn shorting_check(&self) -> Result<ShortingReport> {
        let nv = self.window.node.len();
        let inb = self.member_flags();
        // G: all map vertices whose star index lies in the range spanned by the ball and its neighbours
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        for &v in &self.members {
            for w in std::iter::once(v).chain(self.window.map.neighbours(v)) {
                lo = lo.min(self.star_of[w as usize]);
                hi = hi.max(self.star_of[w as usize]);
            }
        }
        let in_g: Vec<bool> = (0..nv).map(|v| (lo..=hi).contains(&self.star_of[v])).collect();
        // M side
        let r_m = self.reff_to_complement()?;
        // route edges of G
        let ns = self.star.len();
        let mut cond = vec![0.0f64; ns];
        let mut conserved_total = 0.0;
        let mut path = Vec::new();
        for v in 0..nv as VertexId {
            if !in_g[v as usize] {
                continue;
            }
            for w in self.window.map.neighbours(v) {
                if w <= v || !in_g[w as usize] {
                    continue;
                }
                let (p, q) = (self.star_of[v as usize], self.star_of[w as usize]);
                if p == q {
                    continue;
                }
                path.clear();
                self.star.path_edges(p, q, &mut path).ok_or_else(|| Error::Certification("star path leaves the window".into()))?;
                let len = path.len() as f64;
                conserved_total += len * len;
                for &k in &path {
                    cond[k] += len;
                }
            }
        }
        // (M#, c): star nodes 0..ns, non-star vertices of G attached by infinite edges
        let mut net = ResistorNetwork::new(ns + nv);
        for k in 0..ns {
            if cond[k] > 0.0 {
                net.add(k as u32, self.star.succ[k].unwrap() as u32, cond[k]);
            }
        }
        let node_of = |v: usize| if self.is_star[v] { self.star_of[v] } else { ns + v };
        let mut sink = Vec::new();
        for v in 0..nv {
            if !in_g[v] {
                continue;
            }
            if !self.is_star[v] {
                net.add(self.star_of[v] as u32, (ns + v) as u32, f64::INFINITY);
            }
            if !inb[v] {
                sink.push(node_of(v) as u32);
            }
        }
        let src = [self.star.root as u32];
        let r_sharp = net.effective_resistance(&src, &sink, Solver::Auto)?;
        // (M*, c) with sink {d* >= R - 1}
        let mut star_net = ResistorNetwork::new(ns);
        for k in 0..ns {
            if cond[k] > 0.0 {
                star_net.add(k as u32, self.star.succ[k].unwrap() as u32, cond[k]);
            }
        }
        let r1 = self.radius.saturating_sub(1);
        let star_sink: Vec<u32> = (0..ns).filter(|&k| self.star.dist[k].map_or(false, |d| d >= r1)).map(|k| k as u32).collect();
        let r_star = if star_sink.is_empty() {
            f64::INFINITY
        } else {
            star_net.effective_resistance(&src, &star_sink, Solver::Auto)?
        };
        let routed: f64 = cond.iter().sum();
        Ok(ShortingReport { r_map: r_m, r_sharp, r_star, conductance_total: routed, length_total: conserved_total })
    }

    /// `omega(R)` and `|B(R; d*)|` for every `R <= radius`.
    pub fn volume_profile(&self) -> VolumeProfile {
        let mut omega = vec![0u64; self.radius as usize + 1];
        for &v in &self.members {
            let d = self.dsharp[v as usize].unwrap() as usize;
            for x in omega.iter_mut().skip(d + 1) {
                *x += self.degree(v) as u64;
            }
        }
        let mut star = vec![0u64; self.radius as usize + 1];
        for d in self.star.dist.iter().flatten() {
            for x in star.iter_mut().skip(*d as usize + 1) {
                *x += 1;
            }
        }
        VolumeProfile { omega, star_ball: star }
    }

    /// The four clauses of `J(lambda)` at the ball's radius.
    pub fn j_lambda(&self, lambda: f64) -> Result<JLambdaReport> {
        let r = self.radius as f64;
        let omega = self.volume_profile().omega[self.radius as usize] as f64;
        let reff = self.reff_to_complement()?;
        // R_eff(rho, y) <= d(rho, y): graph distance certifies most vertices
        let dist = self.window.map.distances_from(self.rho);
        let inb = self.member_flags();
        let mut undecided = Vec::new();
        for &y in &self.members {
            let ds = self.dsharp[y as usize].unwrap() as f64;
            if (dist[y as usize] as f64) > lambda * ds {
                undecided.push(y);
            }
        }
        let mut worst_ratio: f64 = 0.0;
        let mut pointwise = true;
        if !undecided.is_empty() {
            // resistance inside the ball and its boundary bounds R_eff in M from above
            let mut net = ResistorNetwork::new(self.window.node.len());
            for &v in &self.members {
                for w in self.window.map.neighbours(v) {
                    if !inb[w as usize] || v < w {
                        net.add(v, w, 1.0);
                    }
                }
            }
            for &y in &undecided {
                let ry = net.effective_resistance(&[self.rho], &[y], Solver::Auto)?;
                let ds = self.dsharp[y as usize].unwrap() as f64;
                worst_ratio = worst_ratio.max(ry / ds);
                if ry > lambda * ds {
                    pointwise = false;
                }
            }
        }
        Ok(JLambdaReport {
            radius: self.radius,
            lambda,
            omega,
            reff_to_complement: reff,
            volume_lower: omega >= r * r / lambda,
            volume_upper: omega <= lambda * r * r,
            resistance_lower: reff >= r / lambda,
            resistance_pointwise: pointwise,
            undecided_by_distance: undecided.len(),
            worst_resistance_ratio: worst_ratio,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShortingReport {
    pub r_map: f64,
    pub r_sharp: f64,
    pub r_star: f64,
    /// sum of projected conductances
    pub conductance_total: f64,
    /// `sum |e|_*^2` over the routed edges; equals `conductance_total`
    pub length_total: f64,
}

impl ShortingReport {
    pub fn holds(&self) -> bool {
        let tol = 1e-9;
        self.r_map >= self.r_sharp * (1.0 - tol) && self.r_sharp >= self.r_star * (1.0 - tol)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeProfile {
    /// `omega[R]`: degree measure of `B(R; d#)`
    pub omega: Vec<u64>,
    /// `star_ball[R] = |B(R; d*)|`
    pub star_ball: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JLambdaReport {
    pub radius: u32,
    pub lambda: f64,
    pub omega: f64,
    pub reff_to_complement: f64,
    pub volume_lower: bool,
    pub volume_upper: bool,
    pub resistance_lower: bool,
    pub resistance_pointwise: bool,
    pub undecided_by_distance: usize,
    pub worst_resistance_ratio: f64,
}

impl JLambdaReport {
    pub fn in_j(&self) -> bool {
        self.volume_lower && self.volume_upper && self.resistance_lower && self.resistance_pointwise
    }
}

/// Hitting indices and label statistics along the neighbours of `s`.
#[derive(Clone, Debug, Serialize)]
pub struct DecorationStats {
    pub sizes: BTreeMap<i64, u64>,
    pub delta_l: BTreeMap<i64, u32>,
    /// `(R, i+(R), i-(R), m(R), N(R))`
    pub hitting: Vec<(u32, u64, u64, i64, i64)>,
}

/// Decoration statistics with labels measured from `l(s_0) = 0`; the
/// window grows until every requested `R` is resolved.
pub fn decoration_statistics(lm: &mut LimitMobile, radii: &[u32]) -> Result<DecorationStats> {
    if lm.s().is_none() {
        return Err(Error::Invalid("decorations need kappa < 1".into()));
    }
    let rmax = radii.iter().copied().max().unwrap_or(1);
    loop {
        let base = lm.s_label(0).unwrap();
        let hit_pos = |target: i32| (0..).map_while(|i| lm.s_label(i)).position(|l| l - base == target).map(|i| i as u64);
        let hit_neg = |target: i32| (0..).map_while(|i| lm.s_label(-i)).position(|l| l - base <= target).map(|i| i as u64);
        let ok = hit_pos(-(rmax as i32)).is_some() && hit_neg(-(rmax as i32)).is_some();
        if !ok {
            lm.extend(true, true)?;
            continue;
        }
        let decs = lm.decorations();
        let mut hitting = Vec::new();
        for &r in radii {
            let ip = hit_pos(-(r as i32)).unwrap();
            let im = if r == 0 { 0 } else { hit_neg(-(r as i32 - 1)).unwrap() };
            let lo = -(im as i64) + 1;
            let m = (lo..=ip as i64)
                .filter_map(|i| decs.get(&i))
                .map(|d| (d.min_label - base) as i64)
                .min()
                .unwrap_or(0);
            let n_r = ip as i64 + im as i64 - 1;
            hitting.push((r, ip, im, m, n_r));
        }
        return Ok(DecorationStats {
            sizes: decs.iter().map(|(&i, d)| (i, d.size)).collect(),
            delta_l: decs.iter().map(|(&i, d)| (i, d.delta_l)).collect(),
            hitting,
        });
    }
}

/// Check `d(v, w) <= d*(v*, w*) + 20 max Δl + 8` on pairs inside a
/// certified map ball. Returns `(pairs checked, violations)`.
pub fn geodesic_bound_check(
    lm: &mut LimitMobile,
    radius: u32,
    pairs: usize,
    rng: &mut crate::rng::RngStream,
) -> Result<(usize, usize)> {
    let big = crate::limit::certify_ball(lm, 3 * radius)?;
    let sharp = loop {
        let b = SharpBall::build(lm, 1)?;
        // every star index in the certified map ball must have its successor chain in the window
        if b.window.node.len() >= big.window.node.len() {
            break b;
        }
        lm.extend(true, true)?;
    };
    let wm = &sharp.window;
    let decs = lm.decorations();
    let near: Vec<VertexId> = big
        .members
        .iter()
        .filter(|&&(_, d)| d <= radius)
        .map(|&(v, _)| wm.vertex_of[big.window.node[v as usize] as usize])
        .collect();
    let mut checked = 0;
    let mut bad = 0;
    let mut attempts = 0;
    while checked < pairs {
        attempts += 1;
        if attempts > 100 * pairs {
            return Err(Error::Certification("star geodesics leave the window too often".into()));
        }
        let v = near[rng.below(near.len() as u64) as usize];
        let w = near[rng.below(near.len() as u64) as usize];
        let (p, q) = (sharp.star_of[v as usize], sharp.star_of[w as usize]);
        let Some((m, dstar)) = sharp.star.meet(p, q) else {
            lm.extend(true, true)?;
            return geodesic_bound_check(lm, radius, pairs, rng);
        };
        let lo = p.min(q).min(m);
        let hi = p.max(q).max(m);
        let max_dl = (lo..=hi).map(|k| decs.get(&sharp.star.index(k)).map_or(0, |d| d.delta_l)).max().unwrap_or(0);
        let d = bfs_distance(wm, v, w, 2 * radius);
        if d > dstar + 20 * max_dl + 8 {
            bad += 1;
        }
        checked += 1;
    }
    Ok((checked, bad))
}

fn bfs_distance(wm: &WindowMap, a: VertexId, b: VertexId, limit: u32) -> u32 {
    if a == b {
        return 0;
    }
    let mut dist: HashMap<VertexId, u32> = HashMap::from([(a, 0)]);
    let mut q = VecDeque::from([a]);
    while let Some(x) = q.pop_front() {
        let d = dist[&x];
        if d >= limit {
            continue;
        }
        for y in wm.map.neighbours(x) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                if y == b {
                    return d + 1;
                }
                e.insert(d + 1);
                q.push_back(y);
            }
        }
    }
    u32::MAX
}
