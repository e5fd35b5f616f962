//! Simple random walk on maps, return probabilities, spectral-dimension
//! fits, and the root-degree domination law.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::labels::BridgeMethod;
use crate::laws::{LawSet, OffspringLaws};
use crate::limit::{certify_ball, LimitMobile};
use crate::map::{PlanarMap, VertexId};
use crate::rng::RngStream;

/// Neighbour lists with multiplicity, in rotation order.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offs: Vec<usize>,
    nbr: Vec<VertexId>,
}

impl Adjacency {
    pub fn new(map: &PlanarMap) -> Self {
        let n = map.num_vertices();
        let mut offs = Vec::with_capacity(n + 1);
        let mut nbr = Vec::with_capacity(2 * map.num_edges());
        offs.push(0);
        for v in 0..n as VertexId {
            nbr.extend(map.neighbours(v));
            offs.push(nbr.len());
        }
        Adjacency { offs, nbr }
    }

    pub fn len(&self) -> usize {
        self.offs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbours(&self, v: VertexId) -> &[VertexId] {
        &self.nbr[self.offs[v as usize]..self.offs[v as usize + 1]]
    }
}

/// Return counts: `returns[n]` walkers at the origin at time `2n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct WalkStats {
    pub returns: Vec<u64>,
    pub odd_returns: u64,
    pub walkers: u64,
    pub steps: u64,
    pub origin: VertexId,
}

impl WalkStats {
    pub fn merge(&mut self, other: &WalkStats) {
        if self.returns.len() < other.returns.len() {
            self.returns.resize(other.returns.len(), 0);
        }
        for (a, b) in self.returns.iter_mut().zip(&other.returns) {
            *a += b;
        }
        self.odd_returns += other.odd_returns;
        self.walkers += other.walkers;
        self.steps = self.steps.max(other.steps);
    }

    /// `(n, p_hat(2n), stderr)` for `n ≥ 1`.
    pub fn curve(&self) -> Vec<(u64, f64, f64)> {
        let w = self.walkers as f64;
        self.returns
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &c)| {
                let p = c as f64 / w;
                (n as u64, p, (p * (1.0 - p) / w).sqrt())
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,p_hat,stderr\n");
        for (n, p, e) in self.curve() {
            s.push_str(&format!("{n},{p:.10e},{e:.10e}\n"));
        }
        s
    }
}

/// A walker left the region where the map is known.
#[derive(Clone, Debug)]
pub struct WalkExit {
    pub walker: u64,
    pub step: u64,
}

/// Run `walkers` independent simple random walks of `steps` steps from
/// `origin`. Walker `k` uses stream `rng.derive(k)`. `inside` marks the
/// vertices a walker may visit; leaving it is an error.
pub fn run_srw(
    adj: &Adjacency,
    origin: VertexId,
    inside: Option<&[bool]>,
    steps: u64,
    walkers: u64,
    rng: &RngStream,
) -> std::result::Result<WalkStats, WalkExit> {
    let half = (steps / 2) as usize;
    let chunk = 64u64;
    let parts: Vec<std::result::Result<WalkStats, WalkExit>> = (0..walkers.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut st = WalkStats { returns: vec![0; half + 1], walkers: 0, steps, origin, odd_returns: 0 };
            for k in c * chunk..((c + 1) * chunk).min(walkers) {
                let mut r = rng.derive(k);
                let mut v = origin;
                st.returns[0] += 1;
                for t in 1..=steps {
                    let nb = adj.neighbours(v);
                    if nb.is_empty() {
                        break;
                    }
                    v = nb[r.below(nb.len() as u64) as usize];
                    if let Some(ins) = inside {
                        if !ins[v as usize] {
                            return Err(WalkExit { walker: k, step: t });
                        }
                    }
                    if v == origin {
                        if t % 2 == 0 {
                            st.returns[(t / 2) as usize] += 1;
                        } else {
                            st.odd_returns += 1;
                        }
                    }
                }
                st.walkers += 1;
            }
            Ok(st)
        })
        .collect();
    let mut out = WalkStats { returns: vec![0; half + 1], walkers: 0, steps, origin, odd_returns: 0 };
    for p in parts {
        out.merge(&p?);
    }
    Ok(out)
}

/// Exact `p(n)` (probability of being at `origin` after `n` steps) by
/// propagating the distribution; maps of at most 12 vertices.
pub fn exact_return_prob(map: &PlanarMap, origin: VertexId, n: usize) -> Result<BigRational> {
    let nv = map.num_vertices();
    if nv > 12 {
        return Err(Error::Invalid(format!("exact return probability capped at 12 vertices, got {nv}")));
    }
    let adj = Adjacency::new(map);
    let mut dist = vec![BigRational::zero(); nv];
    dist[origin as usize] = BigRational::one();
    for _ in 0..n {
        let mut nd = vec![BigRational::zero(); nv];
        for v in 0..nv {
            if dist[v].is_zero() {
                continue;
            }
            let nb = adj.neighbours(v as VertexId);
            let share = &dist[v] / BigRational::from_integer(BigInt::from(nb.len()));
            for &w in nb {
                nd[w as usize] += &share;
            }
        }
        dist = nd;
    }
    Ok(dist[origin as usize].clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Binning {
    /// one point per `n`
    PerStep,
    /// mean of `p(2n)` over dyadic blocks `[2^k, 2^{k+1})`, placed at the
    /// block's geometric centre
    Dyadic,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralFit {
    pub ds_estimate: f64,
    pub stderr: f64,
    pub fit_window: [u64; 2],
    pub points: usize,
    pub warning: Option<String>,
}

/// Least squares fit of `log p(2n)` against `log n` over `window`;
/// `d_s = -2 * slope`. Zero bins are dropped with a warning.
pub fn fit_spectral_dimension(curve: &[(u64, f64)], window: [u64; 2], binning: Binning) -> Result<SpectralFit> {
    let inwin: Vec<(u64, f64)> = curve.iter().copied().filter(|&(n, _)| n >= window[0] && n <= window[1]).collect();
    let pts: Vec<(f64, f64)> = match binning {
        Binning::PerStep => inwin.iter().map(|&(n, p)| (n as f64, p)).collect(),
        Binning::Dyadic => {
            let mut bins: std::collections::BTreeMap<u32, (f64, u64, u64, u64)> = Default::default();
            for &(n, p) in &inwin {
                let k = 63 - n.leading_zeros();
                let e = bins.entry(k).or_insert((0.0, 0, u64::MAX, 0));
                e.0 += p;
                e.1 += 1;
                e.2 = e.2.min(n);
                e.3 = e.3.max(n);
            }
            bins.values().map(|&(s, c, lo, hi)| (((lo as f64) * (hi as f64)).sqrt(), s / c as f64)).collect()
        }
    };
    let total = pts.len();
    let good: Vec<(f64, f64)> = pts.into_iter().filter(|&(_, p)| p > 0.0).map(|(n, p)| (n.ln(), p.ln())).collect();
    let warning = (good.len() < total).then(|| format!("{} empty bins dropped from the fit window", total - good.len()));
    if good.len() < 3 {
        return Err(Error::Statistical(format!("only {} usable points in fit window", good.len())));
    }
    let m = good.len() as f64;
    let mx = good.iter().map(|p| p.0).sum::<f64>() / m;
    let my = good.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = good.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = good.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = good.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let se = if good.len() > 2 { (rss / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(SpectralFit { ds_estimate: -2.0 * slope, stderr: 2.0 * se, fit_window: window, points: good.len(), warning })
}

/// The law bounding the degree of the root vertex:
/// `zeta' + sum_{j=1}^{2 + xi°_1 + xi°_2} (1 + zeta_j)`.
#[derive(Clone, Debug, Serialize)]
pub struct DegreeBoundLaw {
    pub p: f64,
    pub p_prime: f64,
    pub pi0: f64,
    /// bound on the mass neglected when summing over outdegrees
    pub truncation_error: f64,
}

/// `P(X_{r+1} ≥ 1)` for a uniform bridge of length `r + 1`.
pub fn bridge_last_at_least_one(r: u64) -> f64 {
    let m = (r + 1) as f64;
    m / (2.0 * (2.0 * m - 1.0))
}

/// `P(X_1 = -1)` for a uniform bridge of length `r + 1`.
pub fn bridge_first_minus_one(r: u64) -> f64 {
    let m = (r + 1) as f64;
    (m - 1.0) / (2.0 * m - 1.0)
}

pub fn degree_bound_law(laws: &OffspringLaws) -> Result<DegreeBoundLaw> {
    let pi0 = laws.pi0;
    if pi0 >= 1.0 {
        return Err(Error::Invalid("degree bound needs pi_0 < 1 (kappa > 0)".into()));
    }
    let (mut p, mut pp, mut mass) = (0.0, 0.0, laws.black(0));
    let mut r = 1u64;
    let mut comp = 0.0f64;
    loop {
        let b = laws.black(r as usize);
        p += b * bridge_last_at_least_one(r);
        pp += b * bridge_first_minus_one(r);
        // Kahan summation of the mass so the tail estimate stays meaningful
        let y = b - comp;
        let t = mass + y;
        comp = (t - mass) - y;
        mass = t;
        let tail = (1.0 - mass).max(0.0);
        if tail < 1e-13 || r >= 50_000_000 {
            let tail = tail.max(f64::EPSILON * r as f64);
            return Ok(DegreeBoundLaw {
                p: (1.0 - pi0) * p,
                p_prime: (1.0 - pi0) * pp,
                pi0,
                truncation_error: (1.0 - pi0) * tail,
            });
        }
        r += 1;
    }
}

impl DegreeBoundLaw {
    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        let n = 2 + rng.geometric(self.pi0) + rng.geometric(self.pi0);
        let mut s = 1 + rng.geometric(self.p_prime);
        for _ in 0..n {
            s += 2 + rng.geometric(self.p);
        }
        s
    }

    pub fn mean(&self) -> f64 {
        let en = 2.0 + 2.0 * (1.0 - self.pi0) / self.pi0;
        1.0 / self.p_prime + en * (1.0 + 1.0 / self.p)
    }

    /// `P(bound ≥ k)` for `k = 0..len`.
    pub fn survival(&self, len: usize) -> Vec<f64> {
        // shift-s geometric convolution: c[k] = p a[k-s] + (1-p) c[k-1]
        let geo = |a: &[f64], p: f64, s: usize| {
            let mut c = vec![0.0; len];
            for k in 0..len {
                let prev = if k > 0 { c[k - 1] } else { 0.0 };
                let from = if k >= s { a[k - s] } else { 0.0 };
                c[k] = p * from + (1.0 - p) * prev;
            }
            c
        };
        // compound geometric: h = pi0 δ_0 + (1 - pi0) (y * h), y = 1 + zeta
        let mut h = vec![0.0; len];
        let mut u = 0.0;
        for k in 0..len {
            let from = if k >= 2 { h[k - 2] } else { 0.0 };
            u = self.p * from + (1.0 - self.p) * u;
            h[k] = if k == 0 { self.pi0 } else { 0.0 } + (1.0 - self.pi0) * u;
        }
        let mut hh = vec![0.0; len];
        for (i, &x) in h.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in h.iter().enumerate().take(len - i) {
                hh[i + j] += x * y;
            }
        }
        let pmf = geo(&geo(&geo(&hh, self.p, 2), self.p, 2), self.p_prime, 1);
        let mut surv = vec![0.0; len];
        let mut acc = 1.0f64;
        for k in 0..len {
            surv[k] = acc.max(0.0);
            acc -= pmf[k];
        }
        surv
    }
}

/// Degrees of the root vertex `e_-` of independent limit maps; sample `k`
/// uses stream `rng.derive(k)`. A sample whose certification outgrows `cap`
/// is `None` (right-censored).
pub fn root_degree_samples(laws: Arc<LawSet>, n: u64, rng: &RngStream, cap: usize) -> Result<Vec<Option<u64>>> {
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut lm = LimitMobile::new(laws.clone(), &rng.derive(k), BridgeMethod::StarsAndBars, cap)?;
            lm.prune_above(2)?;
            match certify_ball(&mut lm, 0) {
                Ok(ball) => Ok(Some(ball.window.map.degree(ball.root) as u64)),
                Err(Error::Capacity(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceReport {
    pub samples: usize,
    pub alpha: f64,
    pub dkw_band: f64,
    /// `max_k (S_emp(k) - S_bound(k))`
    pub max_excess: f64,
    pub at: u64,
    pub pass: bool,
}

/// One-sided test that the empirical survival function of `samples` lies
/// below `bound_survival` up to the DKW band at level `alpha`. `censored`
/// extra samples count as larger than every value.
pub fn dominance_test(samples: &[u64], censored: usize, bound_survival: &[f64], alpha: f64) -> DominanceReport {
    let n = samples.len() + censored;
    let eps = ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let (mut worst, mut at) = (f64::NEG_INFINITY, 0);
    for k in 0..bound_survival.len() as u64 {
        let below = sorted.partition_point(|&x| x < k);
        let s = (n - below) as f64 / n as f64;
        let d = s - bound_survival[k as usize];
        if d > worst {
            worst = d;
            at = k;
        }
    }
    let beyond = sorted.last().map_or(false, |&m| m as usize >= bound_survival.len());
    DominanceReport { samples: n, alpha, dkw_band: eps, max_excess: worst, at, pass: worst <= eps && !beyond }
}

/// Slope of `log S(k)` against `k` over values with at least `min_count`
/// samples in the tail; `censored` samples are in every tail.
pub fn log_survival_slope(samples: &[u64], censored: usize, min_count: usize) -> Option<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() + censored;
    let max = *sorted.last()?;
    let mut pts = Vec::new();
    for k in 1..=max {
        let tail = n - sorted.partition_point(|&x| x < k);
        if tail < min_count {
            break;
        }
        pts.push((k as f64, (tail as f64 / n as f64).ln()));
    }
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}


const TAG_MOBILE: u64 = 100;
const TAG_WALKERS: u64 = 200;

/// Walks on one certified ball of the limit map.
#[derive(Clone, Debug, Serialize)]
pub struct BallWalk {
    pub stats: WalkStats,
    pub radius: u32,
    pub vertices: usize,
    pub regenerations: u32,
}

/// Certify a ball of at least `min_vertices` vertices around the root and
/// run the walkers; if a walker exits, enlarge the radius and rerun (the
/// walker streams are fixed, so the result does not depend on the retries).
pub fn walk_limit_ball(
    laws: Arc<LawSet>,
    rng: &RngStream,
    walkers: u64,
    steps: u64,
    min_vertices: usize,
    cap: usize,
) -> Result<BallWalk> {
    let mut lm = LimitMobile::new(laws, &rng.derive(TAG_MOBILE), BridgeMethod::StarsAndBars, cap)?;
    lm.prune_above(18)?;
    let wrng = rng.derive(TAG_WALKERS);
    let mut r = 16u32;
    let mut regenerations = 0;
    loop {
        let ball = certify_ball(&mut lm, r)?;
        if ball.len() < min_vertices {
            r *= 2;
            continue;
        }
        let adj = Adjacency::new(&ball.window.map);
        let mut inside = vec![false; adj.len()];
        for &(v, _) in &ball.members {
            inside[v as usize] = true;
        }
        match run_srw(&adj, ball.root, Some(&inside), steps, walkers, &wrng) {
            Ok(stats) => return Ok(BallWalk { stats, radius: r, vertices: ball.len(), regenerations }),
            Err(_) => {
                regenerations += 1;
                r = r * 3 / 2;
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub maps: usize,
    pub walkers_per_map: u64,
    pub steps: u64,
    /// fit of the map-averaged curve
    pub annealed: SpectralFit,
    /// leave-one-map-out jackknife standard error of the annealed estimate
    pub jackknife_stderr: f64,
    /// per-map fits on dyadic bins
    pub per_map: Vec<f64>,
    pub per_map_mean: f64,
    pub per_map_sd: f64,
    pub radii: Vec<u32>,
    pub vertices: Vec<usize>,
    /// map-averaged `(n, p_hat(2n), stderr)`
    pub curve: Vec<(u64, f64, f64)>,
}

fn jackknife(runs: &[BallWalk], half: usize, window: [u64; 2]) -> Result<f64> {
    let m = runs.len();
    if m < 2 {
        return Ok(f64::NAN);
    }
    let p: Vec<Vec<f64>> = runs.iter().map(|r| (1..=half).map(|n| r.stats.returns[n] as f64 / r.stats.walkers as f64).collect()).collect();
    let total: Vec<f64> = (0..half).map(|n| p.iter().map(|q| q[n]).sum()).collect();
    let mut est = Vec::with_capacity(m);
    for q in &p {
        let pts: Vec<(u64, f64)> = (0..half).map(|n| (n as u64 + 1, (total[n] - q[n]) / (m - 1) as f64)).collect();
        est.push(fit_spectral_dimension(&pts, window, Binning::PerStep)?.ds_estimate);
    }
    let mean = est.iter().sum::<f64>() / m as f64;
    Ok(((m - 1) as f64 / m as f64 * est.iter().map(|e| (e - mean).powi(2)).sum::<f64>()).sqrt())
}

/// Ensemble of `maps` balls, map `k` on stream `rng.derive(k)`.
#[allow(clippy::too_many_arguments)]
pub fn spectral_ensemble(
    laws: Arc<LawSet>,
    rng: &RngStream,
    maps: u64,
    walkers: u64,
    steps: u64,
    min_vertices: usize,
    window: [u64; 2],
    cap: usize,
) -> Result<SpectralReport> {
    let runs: Vec<BallWalk> = (0..maps)
        .into_par_iter()
        .map(|k| walk_limit_ball(laws.clone(), &rng.derive(k), walkers, steps, min_vertices, cap))
        .collect::<Result<_>>()?;
    let half = (steps / 2) as usize;
    // annealed curve: mean over maps of per-map p_hat, stderr from the spread across maps
    let mut curve = Vec::with_capacity(half);
    for n in 1..=half {
        let ps: Vec<f64> = runs.iter().map(|r| r.stats.returns[n] as f64 / r.stats.walkers as f64).collect();
        let m = ps.iter().sum::<f64>() / ps.len() as f64;
        let var = ps.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (ps.len().max(2) - 1) as f64;
        curve.push((n as u64, m, (var / ps.len() as f64).sqrt()));
    }
    let pts: Vec<(u64, f64)> = curve.iter().map(|&(n, p, _)| (n, p)).collect();
    let annealed = fit_spectral_dimension(&pts, window, Binning::PerStep)?;
    let jackknife_stderr = jackknife(&runs, half, window)?;
    let mut per_map = Vec::new();
    for r in &runs {
        let c: Vec<(u64, f64)> = r.stats.curve().iter().map(|&(n, p, _)| (n, p)).collect();
        if let Ok(f) = fit_spectral_dimension(&c, window, Binning::Dyadic) {
            per_map.push(f.ds_estimate);
        }
    }
    let pm = per_map.iter().sum::<f64>() / per_map.len().max(1) as f64;
    let sd = (per_map.iter().map(|x| (x - pm).powi(2)).sum::<f64>() / (per_map.len().max(2) - 1) as f64).sqrt();
    Ok(SpectralReport {
        maps: maps as usize,
        walkers_per_map: walkers,
        steps,
        annealed,
        jackknife_stderr,
        per_map,
        per_map_mean: pm,
        per_map_sd: sd,
        radii: runs.iter().map(|r| r.radius).collect(),
        vertices: runs.iter().map(|r| r.vertices).collect(),
        curve,
    })
}
