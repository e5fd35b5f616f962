//! Offspring laws derived from the tilted weights and the laws of the
//! limit trees built from them.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::weights::{analyze, derive_tree_weights, ln_pi, Decay, FaceWeights, GenFnAnalysis, Phase, TreeWeights};

/// Mass below which a head table is considered complete.
const HEAD_EPS: f64 = 1e-17;
const HEAD_CAP: usize = 20_000_000;
const POWER_HEAD: usize = 4096;

/// A law on `{0, 1, ...} ∪ {∞}`, sampled by table inversion with an
/// optional power-law tail drawn by rejection.
#[derive(Clone)]
pub struct DiscreteLaw {
    cdf: Vec<f64>,
    head_mass: f64,
    tail: Option<Tail>,
    atom_inf: f64,
}

#[derive(Clone)]
struct Tail {
    start: usize,
    alpha: f64,
    k: f64,
    mass: f64,
    pmf: std::sync::Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for DiscreteLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteLaw")
            .field("head_len", &self.cdf.len())
            .field("head_mass", &self.head_mass)
            .field("tail_mass", &self.tail.as_ref().map(|t| t.mass))
            .field("atom_inf", &self.atom_inf)
            .finish()
    }
}

impl DiscreteLaw {
    /// `pmf` must sum to `1 - atom_inf`. With `power = Some((alpha, k))` the
    /// caller guarantees `pmf(j) <= k j^{-alpha}` for large `j`.
    pub fn new(
        pmf: impl Fn(usize) -> f64 + Send + Sync + 'static,
        atom_inf: f64,
        power: Option<(f64, f64)>,
        finite_max: Option<usize>,
    ) -> Result<Self> {
        let total = 1.0 - atom_inf;
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let head_len = match (power, finite_max) {
            (_, Some(m)) => m + 1,
            (Some(_), None) => POWER_HEAD,
            (None, None) => HEAD_CAP,
        };
        let open_ended = power.is_none() && finite_max.is_none();
        let mut prev = f64::INFINITY;
        let mut done = !open_ended;
        for i in 0..head_len {
            let p = pmf(i);
            acc += p;
            cdf.push(acc);
            if open_ended && i > 16 && (total - acc < HEAD_EPS || (p < 1e-20 && p <= prev)) {
                done = true;
                break;
            }
            prev = p;
        }
        if !done {
            return Err(Error::Capacity(format!("law head table exceeded {HEAD_CAP} entries")));
        }
        if open_ended && (total - acc).abs() > 1e-9 {
            return Err(Error::Numerics(format!("law mass {acc} differs from {total}")));
        }
        let tail = match power {
            Some((alpha, k)) if finite_max.is_none() => {
                if alpha <= 1.0 {
                    return Err(Error::Numerics(format!("tail exponent {alpha} <= 1")));
                }
                Some(Tail { start: cdf.len(), alpha, k, mass: (total - acc).max(0.0), pmf: std::sync::Arc::new(pmf) })
            }
            _ => None,
        };
        Ok(DiscreteLaw { cdf, head_mass: acc, tail, atom_inf })
    }

    pub fn atom_at_infinity(&self) -> f64 {
        self.atom_inf
    }

    pub fn pmf(&self, i: usize) -> f64 {
        if i < self.cdf.len() {
            self.cdf[i] - if i == 0 { 0.0 } else { self.cdf[i - 1] }
        } else if let Some(t) = &self.tail {
            (t.pmf)(i)
        } else {
            0.0
        }
    }

    /// `None` stands for an infinite value.
    pub fn sample_ext(&self, rng: &mut RngStream) -> Option<u64> {
        let tail_mass = self.tail.as_ref().map_or(0.0, |t| t.mass);
        let total = self.head_mass + tail_mass + self.atom_inf;
        let u = rng.uniform() * total;
        if u < self.head_mass {
            let i = self.cdf.partition_point(|&c| c <= u);
            return Some(i.min(self.cdf.len() - 1) as u64);
        }
        if u < self.head_mass + tail_mass {
            return Some(self.sample_tail(rng));
        }
        if self.atom_inf > 0.0 {
            return None;
        }
        Some((self.cdf.len() - 1) as u64)
    }

    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        self.sample_ext(rng).expect("law has an atom at infinity")
    }

    fn sample_tail(&self, rng: &mut RngStream) -> u64 {
        let t = self.tail.as_ref().unwrap();
        let n = (t.start - 1) as f64;
        let e = t.alpha - 1.0;
        loop {
            let y = n * rng.unit_open().powf(-1.0 / e);
            let j = y.ceil().max(n + 1.0);
            if j > 1e18 {
                continue;
            }
            let j = j as usize;
            let env = ((j as f64 - 1.0).powf(-e) - (j as f64).powf(-e)) / e;
            let acc = (t.pmf)(j) / (t.k * env);
            if rng.uniform() < acc {
                return j as u64;
            }
        }
    }
}

/// Tilted offspring law `pi` and the laws derived from it.
#[derive(Clone, Debug)]
pub struct OffspringLaws {
    pub weights: TreeWeights,
    pub analysis: GenFnAnalysis,
    pub pi0: f64,
    pub kappa: f64,
    pub kappa_tilde: f64,
    decay: Decay,
}

pub fn offspring_laws(faces: &FaceWeights) -> Result<OffspringLaws> {
    let tw = derive_tree_weights(faces)?;
    let an = analyze(&tw)?;
    OffspringLaws::new(tw, an)
}

impl OffspringLaws {
    pub fn new(weights: TreeWeights, analysis: GenFnAnalysis) -> Result<Self> {
        let decay = analysis.decay(&weights);
        let pi0 = ln_pi(&weights, &analysis, 0).exp();
        let kappa = analysis.kappa;
        let kappa_tilde = if pi0 > 0.0 { (kappa + pi0 - 1.0) / pi0 } else { 0.0 };
        Ok(OffspringLaws { weights, analysis, pi0, kappa, kappa_tilde, decay })
    }

    pub fn tau(&self) -> f64 {
        self.analysis.tau
    }

    pub fn phase(&self) -> Phase {
        self.analysis.phase
    }

    pub fn pi(&self, i: usize) -> f64 {
        ln_pi(&self.weights, &self.analysis, i).exp()
    }

    /// `P(xi° = i)`, geometric.
    pub fn white(&self, i: usize) -> f64 {
        self.pi0 * (1.0 - self.pi0).powi(i as i32)
    }

    /// `P(xi• = i) = pi_{i+1} / (1 - pi_0)`
    pub fn black(&self, i: usize) -> f64 {
        self.pi(i + 1) / (1.0 - self.pi0)
    }

    /// `P(hat xi° = i) = pi_0^2 i (1-pi_0)^{i-1}`
    pub fn hat_white(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.pi0 * self.pi0 * i as f64 * (1.0 - self.pi0).powi(i as i32 - 1)
    }

    /// `P(hat xi• = i) = i pi_{i+1} / pi_0` for finite `i`.
    pub fn hat_black(&self, i: usize) -> f64 {
        i as f64 * self.pi(i + 1) / self.pi0
    }

    pub fn hat_black_infinite(&self) -> f64 {
        (1.0 - self.kappa) / self.pi0
    }

    /// Size-biased law `P(hat xi = k) = k pi_k`, with mass `1 - kappa` at infinity.
    pub fn hat(&self, k: usize) -> f64 {
        k as f64 * self.pi(k)
    }

    /// `P(tilde xi = k) = (k+1) pi_{k+1} / kappa`
    pub fn tilde(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.pi(k + 1) / self.kappa
    }

    fn power(&self, shift: f64) -> Option<(f64, f64)> {
        match self.decay {
            Decay::Power { alpha, k } => Some((alpha - shift, k)),
            _ => None,
        }
    }

    fn finite(&self, shift: isize) -> Option<usize> {
        match self.decay {
            Decay::Finite(m) => Some((m as isize + shift).max(0) as usize),
            Decay::Point => Some(0),
            _ => None,
        }
    }

    pub fn sampler(&self) -> Result<LawSet> {
        let me = self.clone();
        let xi = {
            let m = me.clone();
            DiscreteLaw::new(move |i| m.pi(i), 0.0, self.power(0.0), self.finite(0))?
        };
        let (black, hat_black, hat, tilde) = if self.pi0 < 1.0 {
            let m = me.clone();
            let black = DiscreteLaw::new(move |i| m.black(i), 0.0, self.power(0.0).map(|(a, k)| (a, k / (1.0 - self.pi0))), self.finite(-1))?;
            let m = me.clone();
            let hat_black = DiscreteLaw::new(
                move |i| m.hat_black(i),
                self.hat_black_infinite(),
                self.power(1.0).map(|(a, k)| (a, k / self.pi0)),
                self.finite(-1),
            )?;
            let m = me.clone();
            let hat = DiscreteLaw::new(move |i| m.hat(i), 1.0 - self.kappa, self.power(1.0), self.finite(0))?;
            let m = me.clone();
            let tilde = DiscreteLaw::new(
                move |i| m.tilde(i),
                0.0,
                self.power(1.0).map(|(a, k)| (a, 2.0 * k / self.kappa)),
                self.finite(-1),
            )?;
            (Some(black), Some(hat_black), Some(hat), Some(tilde))
        } else {
            (None, None, None, None)
        };
        Ok(LawSet { laws: self.clone(), xi, black, hat_black, hat, tilde })
    }
}

/// Samplers for the laws attached to an [`OffspringLaws`].
#[derive(Clone, Debug)]
pub struct LawSet {
    pub laws: OffspringLaws,
    pub xi: DiscreteLaw,
    black: Option<DiscreteLaw>,
    hat_black: Option<DiscreteLaw>,
    hat: Option<DiscreteLaw>,
    tilde: Option<DiscreteLaw>,
}

impl LawSet {
    pub fn xi(&self, rng: &mut RngStream) -> u64 {
        self.xi.sample(rng)
    }

    pub fn white(&self, rng: &mut RngStream) -> u64 {
        rng.geometric(self.laws.pi0)
    }

    pub fn hat_white(&self, rng: &mut RngStream) -> u64 {
        1 + rng.geometric(self.laws.pi0) + rng.geometric(self.laws.pi0)
    }

    pub fn black(&self, rng: &mut RngStream) -> u64 {
        self.black.as_ref().expect("black law undefined when pi_0 = 1").sample(rng)
    }

    pub fn hat_black(&self, rng: &mut RngStream) -> Option<u64> {
        match &self.hat_black {
            Some(l) => l.sample_ext(rng),
            None => None,
        }
    }

    pub fn hat(&self, rng: &mut RngStream) -> Option<u64> {
        match &self.hat {
            Some(l) => l.sample_ext(rng),
            None => None,
        }
    }

    pub fn tilde(&self, rng: &mut RngStream) -> u64 {
        self.tilde.as_ref().expect("tilde law undefined when kappa = 0").sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn uniform() -> OffspringLaws {
        offspring_laws(&FaceWeights::uniform()).unwrap()
    }

    #[test]
    fn uniform_weights_give_half_geometric() {
        let l = uniform();
        assert!((l.tau() - 0.5).abs() < 1e-12);
        for i in 0..30 {
            assert!((l.pi(i) - 0.5f64.powi(i as i32 + 1)).abs() < 1e-12);
        }
        assert!((l.kappa - 1.0).abs() < 1e-15);
        assert!((l.kappa_tilde - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrangulations_are_bimodal() {
        // w_2 = 3 q; tau = w_2^{-1/2}, pi_0 = pi_2 = 1/2
        for q in [rat(1, 12), rat(1, 3), rat(5, 2)] {
            let l = offspring_laws(&FaceWeights::quadrangulation(q.clone())).unwrap();
            let w2 = 3.0 * crate::numeric::rat_to_f64(&q);
            assert!((l.tau() - w2.powf(-0.5)).abs() < 1e-11);
            assert!((l.pi(0) - 0.5).abs() < 1e-11);
            assert!((l.pi(2) - 0.5).abs() < 1e-11);
            assert!(l.pi(1) == 0.0);
        }
    }

    #[test]
    fn limit_laws_normalise() {
        for fw in [
            FaceWeights::uniform(),
            FaceWeights::PowerLaw { c: 1.0, beta: 5.0 },
            FaceWeights::PowerLaw { c: 0.3, beta: 3.0 },
            FaceWeights::Geometric { a: 2.0, b: 0.5 },
        ] {
            let l = offspring_laws(&fw).unwrap();
            let set = l.sampler().unwrap();
            let n = 200_000usize;
            let s = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>();
            let tail = 5e-4;
            assert!((s(&|i| l.pi(i)) - 1.0).abs() < tail);
            assert!((s(&|i| l.black(i)) - 1.0).abs() < tail);
            assert!((s(&|i| l.hat_white(i)) - 1.0).abs() < 1e-9);
            assert!((s(&|i| l.hat_black(i)) + l.hat_black_infinite() - 1.0).abs() < tail);
            assert!((s(&|i| l.hat(i)) + 1.0 - l.kappa - 1.0).abs() < tail);
            let mean_white = (1.0 - l.pi0) / l.pi0;
            let mean_black: f64 = s(&|i| i as f64 * l.black(i));
            assert!((mean_white * mean_black - l.kappa_tilde).abs() < 5e-3, "{fw:?}");
            assert!(set.xi.atom_at_infinity() == 0.0);
        }
    }

    #[test]
    fn power_tail_sampler_matches_pmf() {
        let l = offspring_laws(&FaceWeights::PowerLaw { c: 0.1, beta: 2.2 }).unwrap();
        assert_eq!(l.phase(), Phase::Condensation);
        let set = l.sampler().unwrap();
        let tail = set.xi.tail.as_ref().unwrap();
        let start = tail.start;
        let mut rng = RngStream::new(3, 0);
        let n = 200_000;
        let cut = 2 * start;
        let hits = (0..n).filter(|_| set.xi.sample_tail(&mut rng) >= cut as u64).count();
        let hz = crate::numeric::hurwitz_zeta;
        let expected = hz(2.2, cut as f64) / hz(2.2, start as f64);
        let p = hits as f64 / n as f64;
        let sd = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((p - expected).abs() < 4.0 * sd, "{p} vs {expected}");
        // head mass plus tail mass is the full law
        let head: f64 = (0..start).map(|i| l.pi(i)).sum();
        assert!((head + tail.mass - 1.0).abs() < 1e-12);
    }
}
