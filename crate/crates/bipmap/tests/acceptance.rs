//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N ...: PASS|FAIL` line with the measured quantities.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the lines; the spectral criterion alone takes several minutes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use bipmap::bdg::{map_checks, phi_build};
use bipmap::labels::{count_labelings, enumerate_bridges, sample_bridge, BridgeMethod};
use bipmap::laws::{offspring_laws, LawSet};
use bipmap::limit::LimitMobile;
use bipmap::numeric::rat;
use bipmap::oracle::{
    brute_force_label_count, enumerate_mobiles, enumerate_trees, exact_mu_n, exact_nu_pushforward, small_mobile_trees,
};
use bipmap::psi::{psi_forward, psi_inverse};
use bipmap::resistance::{geodesic_bound_check, ResistorNetwork, SharpBall, Solver};
use bipmap::rng::RngStream;
use bipmap::spine::{sample_lr, sample_yn};
use bipmap::tree::{Colour, NodeId};
use bipmap::walk::{degree_bound_law, dominance_test, log_survival_slope, root_degree_samples, spectral_ensemble};
use bipmap::weights::FaceWeights;
use num_bigint::BigUint;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

const CAP: usize = 20_000_000;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} {name} failed: {detail}");
}

fn laws_of(faces: &FaceWeights) -> Arc<LawSet> {
    Arc::new(offspring_laws(faces).unwrap().sampler().unwrap())
}

fn power_law(c: f64, beta: f64) -> FaceWeights {
    FaceWeights::PowerLaw { c, beta }
}

/// Two-sided `z` threshold for `cells` simultaneous comparisons at the
/// family-wise level of a single 3 sigma test.
fn family_z(cells: usize) -> f64 {
    let alpha = 2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(3.0));
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - alpha / (2.0 * cells as f64))
}

/// Largest standardised deviation of a histogram from `expected`
/// (probabilities, merged into a tail cell below 5 expected counts), and
/// the threshold it must stay under.
fn histogram_z(expected: &BTreeMap<i64, f64>, observed: &BTreeMap<i64, u64>, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut tail_p, mut tail_o) = (0.0, 0.0);
    let mut covered = 0.0;
    for (k, &p) in expected {
        let o = *observed.get(k).unwrap_or(&0) as f64;
        covered += o;
        if nf * p >= 5.0 {
            cells.push((p, o));
        } else {
            tail_p += p;
            tail_o += o;
        }
    }
    // samples outside the listed support go to the tail
    tail_o += nf - covered;
    tail_p = (1.0 - cells.iter().map(|c| c.0).sum::<f64>()).max(tail_p);
    if tail_p * nf >= 1.0 || tail_o > 0.0 {
        cells.push((tail_p.max(1.0 / nf), tail_o));
    }
    let worst = cells.iter().map(|&(p, o)| (o - nf * p).abs() / (nf * p * (1.0 - p)).sqrt().max(1e-300)).fold(0.0, f64::max);
    (worst, family_z(cells.len()))
}

#[test]
fn criterion_1_bijections() {
    let start = Instant::now();
    let (mut cases, mut bad) = (0u64, 0u64);
    for n in 1..=5 {
        let mut images = std::collections::HashSet::new();
        for t in enumerate_trees(n).unwrap() {
            cases += 1;
            let (m, trace) = psi_forward(&t).unwrap();
            let back = psi_inverse(&m).unwrap();
            let degrees = (0..t.len() as NodeId).all(|v| {
                t.out(v) == 0 || {
                    let w = trace.image[v as usize];
                    m.colour(w) == Colour::Black && m.deg(w) == t.out(v)
                }
            });
            if !back.same_shape(&t) || !degrees || m.edges() != n || !images.insert(m.canonical().encode()) {
                bad += 1;
            }
        }
        for mob in enumerate_mobiles(n).unwrap() {
            cases += 1;
            let (map, _) = phi_build(&mob).unwrap();
            let rep = map_checks(&mob, &map);
            let blacks = (0..mob.tree.len() as NodeId).filter(|&v| mob.tree.colour(v) == Colour::Black).count();
            if !rep.all() || map.num_edges() != n || map.faces().len() != blacks {
                bad += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(1, "bijection suite n <= 5", bad == 0 && secs < 60.0, format!("{cases} cases, {bad} violations, {secs:.1} s"));
}

#[test]
fn criterion_2_measure_oracle() {
    let families = [("w = 1", FaceWeights::uniform()), ("q_2 only", FaceWeights::quadrangulation(rat(1, 12)))];
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, faces) in &families {
        for n in 1..=4 {
            let mu = exact_mu_n(faces, n).unwrap();
            let (pushed, target) = exact_nu_pushforward(faces, n).unwrap();
            ok &= mu.equal() && pushed == target;
            detail.push(format!("{name} n={n}: {} maps, mu {} nu {}", mu.maps, mu.equal(), pushed == target));
        }
    }
    report(2, "exact measure oracle", ok, detail.join("; "));
}

#[test]
fn criterion_3_counting() {
    let mut ok = true;
    let mut bridges = Vec::new();
    for r in 1..=8u64 {
        let count = enumerate_bridges(r as usize).unwrap().len() as u64;
        let expect = num_integer::binomial(2 * r - 1, r - 1);
        ok &= count == expect;
        bridges.push(count.to_string());
    }
    let trees = small_mobile_trees(5, 3);
    let bad = trees.iter().filter(|t| count_labelings(t) != BigUint::from(brute_force_label_count(t))).count();
    ok &= bad == 0 && !trees.is_empty();
    report(
        3,
        "counting identities",
        ok,
        format!("|E_r| r=1..8: {}; {} trees, {bad} label count mismatches", bridges.join(","), trees.len()),
    );
}

const LAW_SAMPLES: u64 = 100_000;
/// Window cap for root degrees; samples beyond it count as infinite degree.
const DEGREE_CAP: usize = 1 << 18;

#[test]
fn criterion_4_laws() {
    let mut lines = Vec::new();
    let mut ok = true;

    // tilted law for w = 1
    let uni = offspring_laws(&FaceWeights::uniform()).unwrap();
    let err = (0..60).map(|i| (uni.pi(i) - 0.5f64.powi(i as i32 + 1)).abs()).fold(0.0, f64::max);
    ok &= err <= 1e-12;
    lines.push(format!("pi_i max err {err:.1e}"));

    // spine length: P(L = 2n + 1) = (1 - k)k^n
    let faces = power_law(1.0, 3.5);
    let set = laws_of(&faces);
    let kt = set.laws.kappa_tilde;
    let lens: Vec<i64> = (0..LAW_SAMPLES)
        .into_par_iter()
        .map(|k| {
            let mut lm = LimitMobile::new(set.clone(), &RngStream::new(41, k), BridgeMethod::StarsAndBars, CAP).unwrap();
            while lm.s().is_none() {
                lm.extend(false, false).unwrap();
            }
            lm.spine_length().unwrap() as i64
        })
        .collect();
    let mut obs = BTreeMap::new();
    for &l in &lens {
        *obs.entry(l).or_insert(0) += 1;
    }
    let exp: BTreeMap<i64, f64> = (0..40).map(|n| (2 * n + 1, (1.0 - kt) * kt.powi(n as i32))).collect();
    let (z, zmax) = histogram_z(&exp, &obs, LAW_SAMPLES);
    ok &= z <= zmax;
    lines.push(format!("spine length z {z:.2} <= {zmax:.2}"));

    // Y_n extinction
    for n in [1u32, 2, 5, 10] {
        let zeros = (0..LAW_SAMPLES).filter(|&k| sample_yn(n, &mut RngStream::new(42 + n as u64, k)) == 0).count() as f64;
        let p = (n as f64 / (n as f64 + 1.0)).powi(2);
        let z = (zeros - LAW_SAMPLES as f64 * p).abs() / (LAW_SAMPLES as f64 * p * (1.0 - p)).sqrt();
        ok &= z <= 3.0;
        lines.push(format!("P(Y_{n}=0) z {z:.2}"));
    }

    // L_R at R = 10
    let r = 10i64;
    let half = r / 2;
    let mut exp = BTreeMap::new();
    for k in 0..half {
        exp.insert(k, (2 * r - 2 * k + 1) as f64 / ((r + 1) * (r + 1)) as f64);
    }
    exp.insert(half, (((r - half + 1) as f64) / (r + 1) as f64).powi(2));
    let mut obs = BTreeMap::new();
    for k in 0..LAW_SAMPLES {
        *obs.entry(sample_lr(r as u32, &mut RngStream::new(50, k)) as i64).or_insert(0) += 1;
    }
    let (z, zmax) = histogram_z(&exp, &obs, LAW_SAMPLES);
    ok &= z <= zmax;
    lines.push(format!("L_10 z {z:.2} <= {zmax:.2}"));

    // bridge prefixes: exact finite-r law, and its distance to the i.i.d. limit
    let prefix = 2usize;
    let code = |a: &[i32]| -> i64 { a.iter().fold(0i64, |acc, &x| acc * 16 + (x as i64 + 1).min(15)) };
    let mut tv = Vec::new();
    for r in [50usize, 200] {
        let total = num_integer::binomial(BigUint::from(2 * r - 1), BigUint::from(r - 1));
        let mut exp = BTreeMap::new();
        let mut limit = BTreeMap::new();
        for a in 0..8i32 {
            for b in 0..8i32 {
                let (x, y) = (a - 1, b - 1);
                let rest = r - prefix;
                let need = rest as i64 - (x + y) as i64;
                let p = if need < 0 {
                    0.0
                } else {
                    let ways = num_integer::binomial(BigUint::from(need as u64 + rest as u64 - 1), BigUint::from(rest as u64 - 1));
                    ratio(&ways, &total)
                };
                exp.insert(code(&[x, y]), p);
                limit.insert(code(&[x, y]), 0.5f64.powi(x + 2) * 0.5f64.powi(y + 2));
            }
        }
        let mut obs = BTreeMap::new();
        for k in 0..LAW_SAMPLES {
            let x = sample_bridge(r, &mut RngStream::new(60 + r as u64, k), BridgeMethod::Rejection);
            *obs.entry(code(&x[..prefix])).or_insert(0) += 1;
        }
        let (z, zmax) = histogram_z(&exp, &obs, LAW_SAMPLES);
        ok &= z <= zmax;
        let d: f64 = exp.iter().map(|(k, p)| (p - limit[k]).abs()).sum::<f64>() / 2.0;
        tv.push(d);
        lines.push(format!("bridge prefix r={r} z {z:.2} <= {zmax:.2}, exact TV to limit {d:.2e}"));
    }
    ok &= tv[1] < tv[0];
    report(4, "law checks", ok, lines.join("; "));
}

fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    let shift = b.bits().saturating_sub(60);
    let (a, b) = (a >> shift, b >> shift);
    num_traits::ToPrimitive::to_f64(&a).unwrap() / num_traits::ToPrimitive::to_f64(&b).unwrap()
}

#[test]
fn criterion_5_degree_domination() {
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, faces) in [("c=1 beta=5", power_law(1.0, 5.0)), ("c=1/2 beta=4", power_law(0.5, 4.0))] {
        let laws = offspring_laws(&faces).unwrap();
        let set = Arc::new(laws.sampler().unwrap());
        let raw = root_degree_samples(set, LAW_SAMPLES, &RngStream::new(70, 0), DEGREE_CAP).unwrap();
        let samples: Vec<u64> = raw.iter().flatten().copied().collect();
        let censored = raw.len() - samples.len();
        let bound = degree_bound_law(&laws).unwrap();
        let max = *samples.iter().max().unwrap() as usize;
        let surv = bound.survival(max.max(64) * 2);
        let dom = dominance_test(&samples, censored, &surv, 0.01);
        let slope = log_survival_slope(&samples, censored, 100);
        ok &= dom.pass && slope.map_or(false, |s| s < 0.0);
        lines.push(format!(
            "{name}: {censored} censored, max excess {:.4} vs DKW {:.4} at k={}, log-survival slope {:.3}",
            dom.max_excess,
            dom.dkw_band,
            dom.at,
            slope.unwrap_or(f64::NAN)
        ));
    }
    report(5, "root degree domination", ok, lines.join("; "));
}

/// A random series-parallel network on terminals `(a, b)` with its exact
/// resistance, built by composition.
fn series_parallel_net(rng: &mut RngStream, depth: u32, net: &mut ResistorNetwork, next: &mut u32, a: u32, b: u32) -> f64 {
    if depth == 0 || rng.below(4) == 0 {
        let c = 0.5 + rng.uniform() * 4.0;
        net.add(a, b, c);
        return 1.0 / c;
    }
    if rng.coin() {
        let m = *next;
        *next += 1;
        series_parallel_net(rng, depth - 1, net, next, a, m) + series_parallel_net(rng, depth - 1, net, next, m, b)
    } else {
        let r1 = series_parallel_net(rng, depth - 1, net, next, a, b);
        let r2 = series_parallel_net(rng, depth - 1, net, next, a, b);
        1.0 / (1.0 / r1 + 1.0 / r2)
    }
}

#[test]
fn criterion_6_resistance() {
    let mut ok = true;
    let mut lines = Vec::new();

    let mut worst = 0.0f64;
    for k in 0..200 {
        let mut rng = RngStream::new(80, k);
        let mut net = ResistorNetwork::new(4096);
        let mut next = 2;
        let exact = series_parallel_net(&mut rng, 7, &mut net, &mut next, 0, 1);
        let sp = net.series_parallel(&[0], &[1]).unwrap().expect("series-parallel network reduces");
        worst = worst.max((sp - exact).abs() / exact);
    }
    ok &= worst <= 1e-12;
    lines.push(format!("series/parallel rel err {worst:.1e}"));

    let mut worst = 0.0f64;
    for k in 0..100 {
        let mut rng = RngStream::new(81, k);
        let mut net = ResistorNetwork::new(50);
        for v in 1..50u32 {
            net.add(rng.below(v as u64) as u32, v, 0.1 + rng.uniform() * 10.0);
        }
        for _ in 0..100 {
            let (u, v) = (rng.below(50) as u32, rng.below(50) as u32);
            if u != v {
                net.add(u, v, 0.1 + rng.uniform() * 10.0);
            }
        }
        let d = net.effective_resistance(&[0], &[49], Solver::Dense).unwrap();
        let cg = net.effective_resistance(&[0], &[49], Solver::ConjugateGradient).unwrap();
        worst = worst.max((d - cg).abs() / d);
    }
    ok &= worst <= 1e-9;
    lines.push(format!("dense vs CG rel diff {worst:.1e}"));

    let set = laws_of(&power_law(1.0, 5.0));
    let shorting: Vec<bool> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let mut lm = LimitMobile::new(set.clone(), &RngStream::new(82, k), BridgeMethod::StarsAndBars, CAP).unwrap();
            SharpBall::build(&mut lm, 8).unwrap().shorting_check().unwrap().holds()
        })
        .collect();
    let bad = shorting.iter().filter(|&&h| !h).count();
    ok &= bad == 0;
    lines.push(format!("shorting {bad}/100 violations"));

    let geo: Vec<(usize, usize)> = (0..10u64)
        .into_par_iter()
        .map(|k| {
            let mut lm = LimitMobile::new(set.clone(), &RngStream::new(83, k), BridgeMethod::StarsAndBars, CAP).unwrap();
            geodesic_bound_check(&mut lm, 6, 1000, &mut RngStream::new(84, k)).unwrap()
        })
        .collect();
    let pairs: usize = geo.iter().map(|g| g.0).sum();
    let bad: usize = geo.iter().map(|g| g.1).sum();
    ok &= bad == 0 && pairs >= 10_000;
    lines.push(format!("geodesic bound {bad}/{pairs} violations"));
    report(6, "resistance toolkit", ok, lines.join("; "));
}

#[test]
fn criterion_7_spectral_dimension() {
    let start = Instant::now();
    let set = laws_of(&power_law(1.0, 5.0));
    let rep = spectral_ensemble(set, &RngStream::new(90, 0), 100, 1000, 8192, 10_000, [128, 4096], CAP).unwrap();
    let ds = rep.annealed.ds_estimate;
    let ok = (ds - 4.0 / 3.0).abs() <= 0.25 && rep.vertices.iter().all(|&v| v >= 10_000);
    report(
        7,
        "spectral dimension",
        ok,
        format!(
            "d_s {ds:.3} (fit stderr {:.3}, jackknife {:.3}), per-map mean {:.3} sd {:.3} over {} fits, smallest ball {} vertices, {:.0} s",
            rep.annealed.stderr,
            rep.jackknife_stderr,
            rep.per_map_mean,
            rep.per_map_sd,
            rep.per_map.len(),
            rep.vertices.iter().min().unwrap(),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_8_volume_growth() {
    let radii = [8u32, 16, 32];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, faces) in [("UIPTree", FaceWeights::Superexponential { c: 1.0 }), ("condensation", power_law(1.0, 5.0))] {
        let set = laws_of(&faces);
        let ratios: Vec<Vec<Option<f64>>> = (0..100u64)
            .into_par_iter()
            .map(|k| {
                let mut lm = LimitMobile::new(set.clone(), &RngStream::new(95, k), BridgeMethod::StarsAndBars, CAP).unwrap();
                let mut out = Vec::new();
                for &r in &radii {
                    match SharpBall::build(&mut lm, r) {
                        Ok(ball) => out.push(Some(ball.volume_profile().omega[r as usize] as f64 / (r * r) as f64)),
                        Err(bipmap::Error::Capacity(_)) => break,
                        Err(e) => panic!("{e}"),
                    }
                }
                out.resize(radii.len(), None);
                out
            })
            .collect();
        for (j, r) in radii.iter().enumerate() {
            // censored balls bracket the median: once as 0, once as infinity
            let median = |fill: f64| {
                let mut col: Vec<f64> = ratios.iter().map(|x| x[j].unwrap_or(fill)).collect();
                col.sort_by(|a, b| a.total_cmp(b));
                (col[49] + col[50]) / 2.0
            };
            let (lo, hi) = (median(0.0), median(f64::INFINITY));
            let censored = ratios.iter().filter(|x| x[j].is_none()).count();
            ok &= lo >= 1.0 / 20.0 && hi <= 20.0;
            lines.push(format!("{name} R={r} median in [{lo:.2}, {hi:.2}], {censored} censored"));
        }
    }
    report(8, "volume growth", ok, lines.join("; "));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn criterion_9_reproducibility() {
    let bin = env!("CARGO_BIN_EXE_bipmap");
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("in.json");
    std::fs::write(
        &cfg,
        r#"{"weights": {"family": "power_law", "c": 1.0, "beta": 5.0}, "n": 200, "count": 4, "radius": 8, "radii": [4, 8],
            "walkers": 100, "steps": 1024, "maps": 3, "min_vertices": 2000, "window": [16, 256]}"#,
    )
    .unwrap();
    let mut same = Vec::new();
    for cmd in ["sample-tree", "sample-mobile", "sample-map", "limit-ball", "walk", "spectral-run", "resistance-run"] {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        let st = std::process::Command::new(bin)
            .args([cmd, "--config", cfg.to_str().unwrap(), "--seed", "3", "--format", "tsv", "--out", a.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        let st = std::process::Command::new(bin)
            .args([cmd, "--config", a.join("config.json").to_str().unwrap(), "--out", b.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        same.push((cmd, files(&a) == files(&b)));
    }
    let ok = same.iter().all(|s| s.1);
    let detail = same.iter().map(|(c, s)| format!("{c} {}", if *s { "identical" } else { "differs" })).collect::<Vec<_>>();
    report(9, "reproducibility", ok, detail.join(", "));
}
