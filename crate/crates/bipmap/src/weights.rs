//! Face weights, the tree weights they induce, and the analysis of the
//! generating function `g(z) = sum_i w_i z^i`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bridge_count, decimal_rational, parse_rational, polylog, rat_to_f64, zeta};

/// Largest index for which exact tree weights are produced.
pub const EXACT_INDEX_CAP: usize = 4096;

/// A number in a config: either a JSON number or a string such as `"1/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            Num::Float(x) => decimal_rational(*x),
            Num::Text(s) => parse_rational(s),
        }
    }
}

/// Face weights `q_i` (the weight of a face of degree `2i`).
///
/// `Explicit` lists finitely many `q_i`. The other families are given by the
/// induced tree weights `w_i = C(2i-1, i-1) q_i`, for which the radius of
/// convergence of `g` is known in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FaceWeights {
    #[serde(alias = "finite_support")]
    Explicit { q: BTreeMap<String, Num> },
    /// `w_i = c i^{-beta}`
    PowerLaw { c: f64, beta: f64 },
    /// `w_i = a b^i`
    Geometric { a: f64, b: f64 },
    /// `w_i = c i!`, radius zero.
    Superexponential { c: f64 },
}

impl FaceWeights {
    pub fn explicit(pairs: &[(usize, BigRational)]) -> Self {
        let q = pairs
            .iter()
            .map(|(i, v)| (i.to_string(), Num::Text(format!("{}/{}", v.numer(), v.denom()))))
            .collect();
        FaceWeights::Explicit { q }
    }

    /// `w_i = 1` for all `i`: uniform trees and the UIPTree regime.
    pub fn uniform() -> Self {
        FaceWeights::Geometric { a: 1.0, b: 1.0 }
    }

    /// Only faces of degree 4, `q_2 = q`.
    pub fn quadrangulation(q: BigRational) -> Self {
        FaceWeights::explicit(&[(2, q)])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fw: FaceWeights = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        fw.validate()?;
        Ok(fw)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            FaceWeights::Explicit { q } => {
                if q.is_empty() {
                    return bad("explicit family needs at least one q_i".into());
                }
                let mut positive = false;
                for (k, v) in q {
                    let i: usize = k.parse().map_err(|_| Error::Config(format!("bad face index {k}")))?;
                    if i == 0 {
                        return bad("face indices start at 1".into());
                    }
                    if i > EXACT_INDEX_CAP {
                        return bad(format!("face index {i} above cap {EXACT_INDEX_CAP}"));
                    }
                    let r = v.to_rational()?;
                    if r.is_negative() {
                        return bad(format!("negative weight q_{i}"));
                    }
                    positive |= r.is_positive();
                }
                if !positive {
                    return bad("all face weights are zero".into());
                }
            }
            FaceWeights::PowerLaw { c, beta } => {
                if !(*c > 0.0 && c.is_finite() && beta.is_finite()) {
                    return bad(format!("power law needs c > 0 and finite beta, got c={c} beta={beta}"));
                }
            }
            FaceWeights::Geometric { a, b } => {
                if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) {
                    return bad(format!("geometric family needs a, b > 0, got a={a} b={b}"));
                }
            }
            FaceWeights::Superexponential { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return bad(format!("superexponential family needs c > 0, got {c}"));
                }
            }
        }
        Ok(())
    }

    /// Radius of convergence of `g`, declared by the family.
    pub fn declared_radius(&self) -> f64 {
        match self {
            FaceWeights::Explicit { .. } => f64::INFINITY,
            FaceWeights::PowerLaw { .. } => 1.0,
            FaceWeights::Geometric { b, .. } => 1.0 / b,
            FaceWeights::Superexponential { .. } => 0.0,
        }
    }

    /// Exact `q_i`.
    pub fn q_exact(&self, i: usize) -> Result<BigRational> {
        let w = derive_tree_weights(self)?.w_exact(i)?;
        Ok(w / BigRational::from_integer(bridge_count(i as u64).into()))
    }
}

/// Tree weights `w_0 = 1`, `w_i = C(2i-1, i-1) q_i`.
#[derive(Clone, Debug)]
pub struct TreeWeights {
    faces: FaceWeights,
    explicit: Vec<BigRational>,
    explicit_f64: Vec<f64>,
    c_rat: Option<BigRational>,
    b_rat: Option<BigRational>,
}

pub fn derive_tree_weights(faces: &FaceWeights) -> Result<TreeWeights> {
    faces.validate()?;
    let mut tw = TreeWeights {
        faces: faces.clone(),
        explicit: Vec::new(),
        explicit_f64: Vec::new(),
        c_rat: None,
        b_rat: None,
    };
    match faces {
        FaceWeights::Explicit { q } => {
            let max = q.keys().map(|k| k.parse::<usize>().unwrap()).max().unwrap();
            tw.explicit = vec![BigRational::zero(); max + 1];
            tw.explicit[0] = BigRational::one();
            for (k, v) in q {
                let i: usize = k.parse().unwrap();
                let c = BigRational::from_integer(BigInt::from(bridge_count(i as u64)));
                tw.explicit[i] = c * v.to_rational()?;
            }
            while tw.explicit.len() > 1 && tw.explicit.last().unwrap().is_zero() {
                tw.explicit.pop();
            }
            tw.explicit_f64 = tw.explicit.iter().map(rat_to_f64).collect();
        }
        FaceWeights::PowerLaw { c, .. } | FaceWeights::Superexponential { c } => {
            tw.c_rat = Some(decimal_rational(*c)?);
        }
        FaceWeights::Geometric { a, b } => {
            tw.c_rat = Some(decimal_rational(*a)?);
            tw.b_rat = Some(decimal_rational(*b)?);
        }
    }
    Ok(tw)
}

impl TreeWeights {
    pub fn faces(&self) -> &FaceWeights {
        &self.faces
    }

    /// Largest index with `w_i > 0`, if the support is finite.
    pub fn max_index(&self) -> Option<usize> {
        match self.faces {
            FaceWeights::Explicit { .. } => Some(self.explicit.len() - 1),
            _ => None,
        }
    }

    pub fn w_exact(&self, i: usize) -> Result<BigRational> {
        if i == 0 {
            return Ok(BigRational::one());
        }
        if i > EXACT_INDEX_CAP {
            return Err(Error::Capacity(format!("exact weight index {i} above cap {EXACT_INDEX_CAP}")));
        }
        Ok(match &self.faces {
            FaceWeights::Explicit { .. } => self.explicit.get(i).cloned().unwrap_or_else(BigRational::zero),
            FaceWeights::PowerLaw { beta, .. } => {
                let c = self.c_rat.clone().unwrap();
                if beta.fract() == 0.0 && beta.abs() < 64.0 {
                    let p = num_traits::pow(BigInt::from(i), beta.abs() as usize);
                    let p = BigRational::from_integer(p);
                    if *beta >= 0.0 {
                        c / p
                    } else {
                        c * p
                    }
                } else {
                    BigRational::from_float(self.w(i)).ok_or_else(|| Error::Numerics("weight not finite".into()))?
                }
            }
            FaceWeights::Geometric { .. } => {
                let a = self.c_rat.clone().unwrap();
                let b = self.b_rat.clone().unwrap();
                a * num_traits::pow(b, i)
            }
            FaceWeights::Superexponential { .. } => {
                let c = self.c_rat.clone().unwrap();
                let f: BigInt = (1..=i as u64).map(BigInt::from).product();
                c * BigRational::from_integer(f)
            }
        })
    }

    pub fn ln_w(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        match &self.faces {
            FaceWeights::Explicit { .. } => self.explicit_f64.get(i).map(|x| x.ln()).unwrap_or(f64::NEG_INFINITY),
            FaceWeights::PowerLaw { c, beta } => c.ln() - beta * (i as f64).ln(),
            FaceWeights::Geometric { a, b } => a.ln() + i as f64 * b.ln(),
            FaceWeights::Superexponential { c } => c.ln() + statrs::function::gamma::ln_gamma(i as f64 + 1.0),
        }
    }

    pub fn w(&self, i: usize) -> f64 {
        self.ln_w(i).exp()
    }

    /// `(g(t), t g'(t))`.
    pub fn gen_fn(&self, t: f64) -> Result<(f64, f64)> {
        if t == 0.0 {
            return Ok((1.0, 0.0));
        }
        match &self.faces {
            FaceWeights::Explicit { .. } => {
                let (mut g, mut dg) = (0.0, 0.0);
                let mut tp = 1.0;
                for (i, w) in self.explicit_f64.iter().enumerate() {
                    g += w * tp;
                    dg += i as f64 * w * tp;
                    tp *= t;
                }
                Ok((g, dg))
            }
            FaceWeights::PowerLaw { c, beta } => {
                let g = 1.0 + c * polylog(*beta, t)?;
                let dg = c * polylog(beta - 1.0, t)?;
                Ok((g, dg))
            }
            FaceWeights::Geometric { a, b } => {
                let u = b * t;
                if u >= 1.0 {
                    return Ok((f64::INFINITY, f64::INFINITY));
                }
                Ok((1.0 + a * u / (1.0 - u), a * u / ((1.0 - u) * (1.0 - u))))
            }
            FaceWeights::Superexponential { .. } => Ok((f64::INFINITY, f64::INFINITY)),
        }
    }
}

/// Regime of the offspring law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// `gamma >= 1`: the tilted law is critical.
    Generic,
    /// `0 < gamma < 1`: subcritical law, condensation.
    Condensation,
    /// `R = 0`: the law is a point mass at zero.
    Degenerate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenFnAnalysis {
    pub radius: f64,
    pub gamma: f64,
    pub tau: f64,
    pub g_tau: f64,
    pub kappa: f64,
    pub phase: Phase,
    pub iterations: u32,
}

pub const TAU_TOL: f64 = 1e-12;

fn ratio(tw: &TreeWeights, t: f64) -> Result<f64> {
    let (g, dg) = tw.gen_fn(t)?;
    if g.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(dg / g)
}

pub fn analyze(tw: &TreeWeights) -> Result<GenFnAnalysis> {
    let radius = tw.faces.declared_radius();
    let gamma = match &tw.faces {
        FaceWeights::Explicit { .. } => tw.max_index().unwrap() as f64,
        FaceWeights::PowerLaw { c, beta } => {
            if *beta <= 2.0 {
                f64::INFINITY
            } else {
                c * zeta(beta - 1.0) / (1.0 + c * zeta(*beta))
            }
        }
        FaceWeights::Geometric { .. } => f64::INFINITY,
        FaceWeights::Superexponential { .. } => 0.0,
    };
    if radius == 0.0 {
        return Ok(GenFnAnalysis { radius, gamma: 0.0, tau: 0.0, g_tau: 1.0, kappa: 0.0, phase: Phase::Degenerate, iterations: 0 });
    }
    let mut iterations = 0;
    let tau = if gamma < 1.0 {
        radius
    } else if gamma == 1.0 && radius.is_finite() {
        radius
    } else {
        let mut lo = 0.0;
        let mut hi = if radius.is_finite() { radius } else { 1.0 };
        if radius.is_infinite() {
            while ratio(tw, hi)? < 1.0 {
                hi *= 2.0;
                iterations += 1;
                if iterations > 200 {
                    return Err(Error::Numerics("could not bracket tau".into()));
                }
            }
        }
        while hi - lo > TAU_TOL {
            let mid = 0.5 * (lo + hi);
            if ratio(tw, mid)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
            if iterations > 200 {
                return Err(Error::Numerics("tau bisection did not converge".into()));
            }
        }
        0.5 * (lo + hi)
    };
    let (g_tau, _) = tw.gen_fn(tau)?;
    if !g_tau.is_finite() {
        return Err(Error::Numerics(format!("g(tau) diverges at tau = {tau}")));
    }
    let kappa = gamma.min(1.0);
    let phase = if gamma >= 1.0 { Phase::Generic } else { Phase::Condensation };
    Ok(GenFnAnalysis { radius, gamma, tau, g_tau, kappa, phase, iterations })
}

/// Per-index decay of the tilted weights, used to pick samplers.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Decay {
    Finite(usize),
    /// `pi_i <= k i^{-alpha}`
    Power { alpha: f64, k: f64 },
    Exponential,
    Point,
}

impl GenFnAnalysis {
    pub(crate) fn decay(&self, tw: &TreeWeights) -> Decay {
        match &tw.faces {
            _ if self.phase == Phase::Degenerate => Decay::Point,
            FaceWeights::Explicit { .. } => Decay::Finite(tw.max_index().unwrap()),
            FaceWeights::PowerLaw { c, beta } if self.tau >= 1.0 => Decay::Power { alpha: *beta, k: c / self.g_tau },
            _ => Decay::Exponential,
        }
    }
}

pub(crate) fn ln_pi(tw: &TreeWeights, an: &GenFnAnalysis, i: usize) -> f64 {
    if an.phase == Phase::Degenerate {
        return if i == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if i == 0 {
        return -an.g_tau.ln();
    }
    i as f64 * an.tau.ln() + tw.ln_w(i) - an.g_tau.ln()
}

/// `E(xi^r)` for each requested `r`, `None` where the moment is infinite.
pub fn moment_report(tw: &TreeWeights, an: &GenFnAnalysis, orders: &[f64]) -> Result<Vec<Option<f64>>> {
    orders
        .iter()
        .map(|&r| {
            if an.phase == Phase::Degenerate {
                return Ok(Some(if r == 0.0 { 1.0 } else { 0.0 }));
            }
            match (&tw.faces, an.decay(tw)) {
                (FaceWeights::PowerLaw { c, beta }, Decay::Power { .. }) => {
                    if beta - r > 1.0 {
                        Ok(Some(c * zeta(beta - r) / an.g_tau))
                    } else {
                        Ok(None)
                    }
                }
                _ => {
                    let mut sum = 0.0;
                    let mut i = 0usize;
                    loop {
                        let p = ln_pi(tw, an, i).exp();
                        let term = if i == 0 { if r == 0.0 { p } else { 0.0 } } else { (i as f64).powf(r) * p };
                        sum += term;
                        if let Some(m) = tw.max_index() {
                            if i >= m {
                                break;
                            }
                        } else if i > 20 && term < 1e-18 * sum.max(1e-300) {
                            break;
                        }
                        i += 1;
                        if i > 100_000_000 {
                            return Err(Error::Numerics("moment series did not converge".into()));
                        }
                    }
                    Ok(Some(sum))
                }
            }
        })
        .collect()
}
