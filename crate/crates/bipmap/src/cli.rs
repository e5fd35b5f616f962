//! Batch front end: run one command of a [`RunConfig`] and write its data
//! files plus `config.json` and `report.json` into an output directory.
//!
//! Sample `k` of a run always uses stream `k` derived from the seed, so
//! rerunning the emitted `config.json` rewrites the same bytes.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, Format, RunConfig};
use crate::error::{Error, Result};
use crate::finite::{sample_map_n, sample_mobile_n, sample_sgt_n};
use crate::laws::{offspring_laws, LawSet, OffspringLaws};
use crate::limit::{sample_uiptree_ball, LimitMobile};
use crate::map::PlanarMap;
use crate::oracle::verify_suite;
use crate::resistance::SharpBall;
use crate::rng::RngStream;
use crate::walk::{spectral_ensemble, walk_limit_ball};
use crate::weights::moment_report;

/// What a run wrote and how it went.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    /// data files, relative to the output directory
    pub files: Vec<String>,
    pub summary: Value,
    /// a verification check found violations
    pub failed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed {
            4
        } else {
            0
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn unsupported(cmd: Command, format: Format) -> Error {
    Error::Config(format!("/format: {} cannot write {format:?}", cmd.name()).to_lowercase())
}

fn sampler(cfg: &RunConfig) -> Result<(OffspringLaws, Arc<LawSet>)> {
    let laws = offspring_laws(&cfg.weights)?;
    let set = Arc::new(laws.sampler()?);
    Ok((laws, set))
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Execute `cfg` (its `command` must be set) and write into `out`, which is
/// created if needed.
pub fn dispatch(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let command = cfg.command.ok_or_else(|| Error::Config("/command: missing".into()))?;
    std::fs::create_dir_all(out)?;
    let mut w = Writer { dir: out, files: Vec::new() };
    let base = RngStream::new(cfg.seed, 0);
    let mut failed = false;
    let summary = match command {
        Command::AnalyzeWeights => analyze_weights(cfg, &mut w)?,
        Command::SampleTree => sample_trees(cfg, &base, &mut w)?,
        Command::SampleMobile => sample_mobiles(cfg, &base, &mut w)?,
        Command::SampleMap => sample_maps(cfg, &base, &mut w)?,
        Command::LimitBall => limit_balls(cfg, &base, &mut w)?,
        Command::Walk => walks(cfg, &base, &mut w)?,
        Command::SpectralRun => spectral(cfg, &base, &mut w)?,
        Command::ResistanceRun => resistance(cfg, &base, &mut w)?,
        Command::Verify => {
            let (s, ok) = verify(cfg, &mut w)?;
            failed = !ok;
            s
        }
        Command::ExportDot => export_dot(cfg, &base, &mut w)?,
    };
    let resolved = RunConfig { command: Some(command), ..cfg.clone() };
    std::fs::write(out.join("config.json"), resolved.to_json())?;
    let report = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "config": resolved,
        "files": w.files,
        "summary": summary,
        "failed": failed,
    });
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(Outcome { command, files: w.files, summary, failed })
}

fn analyze_weights(cfg: &RunConfig, w: &mut Writer) -> Result<Value> {
    let laws = offspring_laws(&cfg.weights)?;
    let an = &laws.analysis;
    let orders = [1.0, 2.0, 3.0];
    let moments = moment_report(&laws.weights, an, &orders)?;
    let rows: Vec<Value> = (0..cfg.terms)
        .map(|i| {
            json!({
                "i": i,
                "w": laws.weights.w(i),
                "pi": laws.pi(i),
                "white": laws.white(i),
                "black": laws.black(i),
                "hat_white": laws.hat_white(i),
                "hat_black": laws.hat_black(i),
                "hat": laws.hat(i),
                "tilde": laws.tilde(i),
            })
        })
        .collect();
    match cfg.format {
        Format::Json => w.put("laws.json", &(serde_json::to_string_pretty(&rows)? + "\n"))?,
        Format::Tsv => {
            let mut s = String::from("i\tw\tpi\twhite\tblack\that_white\that_black\that\ttilde\n");
            for i in 0..cfg.terms {
                let _ = writeln!(
                    s,
                    "{i}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}",
                    laws.weights.w(i),
                    laws.pi(i),
                    laws.white(i),
                    laws.black(i),
                    laws.hat_white(i),
                    laws.hat_black(i),
                    laws.hat(i),
                    laws.tilde(i)
                );
            }
            w.put("laws.tsv", &s)?;
        }
        Format::Dot => return Err(unsupported(Command::AnalyzeWeights, cfg.format)),
    }
    Ok(json!({
        "radius": an.radius,
        "gamma": an.gamma,
        "tau": an.tau,
        "g_tau": an.g_tau,
        "kappa": laws.kappa,
        "kappa_tilde": laws.kappa_tilde,
        "pi0": laws.pi0,
        "phase": an.phase,
        "hat_black_infinite": laws.hat_black_infinite(),
        "moments": orders.iter().zip(&moments).map(|(r, m)| json!({"order": r, "value": m})).collect::<Vec<_>>(),
    }))
}

fn sample_trees(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    let tw = crate::weights::derive_tree_weights(&cfg.weights)?;
    let trees = (0..cfg.count)
        .into_par_iter()
        .map(|k| sample_sgt_n(&tw, cfg.n, &mut base.derive(k)))
        .collect::<Result<Vec<_>>>()?;
    match cfg.format {
        Format::Json => w.put("trees.ndjson", &trees.iter().map(|t| t.to_ndjson_line() + "\n").collect::<String>())?,
        Format::Tsv => {
            let mut s = String::from("sample\tedges\theight\toutdegrees\n");
            for (k, t) in trees.iter().enumerate() {
                let degs: Vec<String> = t.outdegrees().iter().map(|d| d.to_string()).collect();
                let _ = writeln!(s, "{k}\t{}\t{}\t{}", t.edges(), t.height(), degs.join(","));
            }
            w.put("trees.tsv", &s)?;
        }
        Format::Dot => return Err(unsupported(Command::SampleTree, cfg.format)),
    }
    let heights: Vec<f64> = trees.iter().map(|t| t.height() as f64).collect();
    Ok(json!({"samples": trees.len(), "edges": cfg.n, "mean_height": heights.iter().sum::<f64>() / heights.len() as f64}))
}

fn sample_mobiles(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    let tw = crate::weights::derive_tree_weights(&cfg.weights)?;
    let mobiles = (0..cfg.count)
        .into_par_iter()
        .map(|k| sample_mobile_n(&tw, cfg.n, &mut base.derive(k), cfg.bridge))
        .collect::<Result<Vec<_>>>()?;
    match cfg.format {
        Format::Json => {
            let mut s = String::new();
            for m in &mobiles {
                s.push_str(&serde_json::to_string(&m.to_json())?);
                s.push('\n');
            }
            w.put("mobiles.ndjson", &s)?;
        }
        Format::Tsv => {
            let mut s = String::from("sample\tnode\tparent\tcolour\tlabel\n");
            for (k, m) in mobiles.iter().enumerate() {
                for v in m.tree.preorder() {
                    let parent = m.tree.parent(v).map_or("-".to_string(), |p| p.to_string());
                    let colour = format!("{:?}", m.tree.colour(v)).to_lowercase();
                    let _ = writeln!(s, "{k}\t{v}\t{parent}\t{colour}\t{}", m.labels[v as usize]);
                }
            }
            w.put("mobiles.tsv", &s)?;
        }
        Format::Dot => return Err(unsupported(Command::SampleMobile, cfg.format)),
    }
    let min_label: Vec<i32> = mobiles.iter().map(|m| m.labels.iter().copied().min().unwrap_or(0)).collect();
    Ok(json!({"samples": mobiles.len(), "edges": cfg.n, "min_labels": min_label}))
}

fn write_maps(maps: &[PlanarMap], stem: &str, format: Format, w: &mut Writer) -> Result<()> {
    match format {
        Format::Json => {
            let mut s = String::new();
            for m in maps {
                s.push_str(&serde_json::to_string(&m.to_json())?);
                s.push('\n');
            }
            w.put(&format!("{stem}.ndjson"), &s)
        }
        Format::Tsv => {
            let mut s = String::from("sample\tedge\tu\tv\n");
            for (k, m) in maps.iter().enumerate() {
                for line in m.to_edge_list().lines().skip(1) {
                    let _ = writeln!(s, "{k}\t{line}");
                }
            }
            w.put(&format!("{stem}.tsv"), &s)
        }
        Format::Dot => w.put(&format!("{stem}.dot"), &maps.iter().map(|m| m.to_dot()).collect::<String>()),
    }
}

fn sample_maps(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    let tw = crate::weights::derive_tree_weights(&cfg.weights)?;
    let maps = (0..cfg.count)
        .into_par_iter()
        .map(|k| sample_map_n(&tw, cfg.n, &mut base.derive(k)).map(|(_, m)| m))
        .collect::<Result<Vec<_>>>()?;
    write_maps(&maps, "maps", cfg.format, w)?;
    let verts: Vec<usize> = maps.iter().map(|m| m.num_vertices()).collect();
    Ok(json!({"samples": maps.len(), "edges": cfg.n, "vertices": verts}))
}

fn limit_balls(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    let (_, set) = sampler(cfg)?;
    let balls = (0..cfg.count)
        .into_par_iter()
        .map(|k| {
            let (lm, ball) = sample_uiptree_ball(set.clone(), &base.derive(k), cfg.radius, cfg.cap)?;
            let sub = ball.submap();
            Ok((lm.nodes(), ball.len(), sub))
        })
        .collect::<Result<Vec<_>>>()?;
    let maps: Vec<PlanarMap> = balls.iter().map(|b| b.2.clone()).collect();
    write_maps(&maps, "balls", cfg.format, w)?;
    let mut s = String::from("sample\tradius\tvertices\tedges\twindow_nodes\n");
    for (k, (nodes, len, sub)) in balls.iter().enumerate() {
        let _ = writeln!(s, "{k}\t{}\t{len}\t{}\t{nodes}", cfg.radius, sub.num_edges());
    }
    w.put("balls_summary.tsv", &s)?;
    let sizes: Vec<usize> = balls.iter().map(|b| b.1).collect();
    Ok(json!({"samples": balls.len(), "radius": cfg.radius, "vertices": sizes}))
}

fn walks(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    let (_, set) = sampler(cfg)?;
    let runs = (0..cfg.count)
        .into_par_iter()
        .map(|k| walk_limit_ball(set.clone(), &base.derive(k), cfg.walkers, cfg.steps, cfg.min_vertices, cfg.cap))
        .collect::<Result<Vec<_>>>()?;
    match cfg.format {
        Format::Json => {
            let mut s = String::new();
            for r in &runs {
                s.push_str(&serde_json::to_string(r)?);
                s.push('\n');
            }
            w.put("walks.ndjson", &s)?;
        }
        Format::Tsv => {
            let mut s = String::from("map\tn\treturns\twalkers\tp_hat\n");
            for (k, r) in runs.iter().enumerate() {
                for (n, &c) in r.stats.returns.iter().enumerate().skip(1) {
                    let _ = writeln!(s, "{k}\t{n}\t{c}\t{}\t{:e}", r.stats.walkers, c as f64 / r.stats.walkers as f64);
                }
            }
            w.put("returns.tsv", &s)?;
        }
        Format::Dot => return Err(unsupported(Command::Walk, cfg.format)),
    }
    Ok(json!({
        "maps": runs.len(),
        "radii": runs.iter().map(|r| r.radius).collect::<Vec<_>>(),
        "vertices": runs.iter().map(|r| r.vertices).collect::<Vec<_>>(),
        "regenerations": runs.iter().map(|r| r.regenerations).collect::<Vec<_>>(),
    }))
}

fn spectral(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    if cfg.format == Format::Dot {
        return Err(unsupported(Command::SpectralRun, cfg.format));
    }
    let (_, set) = sampler(cfg)?;
    let rep = spectral_ensemble(set, base, cfg.maps, cfg.walkers, cfg.steps, cfg.min_vertices, cfg.window, cfg.cap)?;
    let mut curve = String::from("n\tp_hat\tstderr\n");
    for &(n, p, e) in &rep.curve {
        let _ = writeln!(curve, "{n}\t{p:e}\t{e:e}");
    }
    w.put("curve.tsv", &curve)?;
    let mut per_map = String::from("map\tradius\tvertices\n");
    for (k, (r, v)) in rep.radii.iter().zip(&rep.vertices).enumerate() {
        let _ = writeln!(per_map, "{k}\t{r}\t{v}");
    }
    w.put("maps.tsv", &per_map)?;
    let mut fits = String::from("fit\tds\n");
    for (k, d) in rep.per_map.iter().enumerate() {
        let _ = writeln!(fits, "{k}\t{d}");
    }
    w.put("per_map.tsv", &fits)?;
    Ok(json!({
        "ds": rep.annealed.ds_estimate,
        "fit": rep.annealed,
        "jackknife_stderr": rep.jackknife_stderr,
        "per_map_mean": rep.per_map_mean,
        "per_map_sd": rep.per_map_sd,
        "per_map_fits": rep.per_map.len(),
        "maps": rep.maps,
        "walkers_per_map": rep.walkers_per_map,
        "steps": rep.steps,
        "min_vertices": rep.vertices.iter().min(),
    }))
}

struct ResistanceRow {
    sample: u64,
    radius: u32,
    vertices: usize,
    omega: f64,
    reff: f64,
    r_sharp: f64,
    r_star: f64,
    shorting: bool,
    in_j: bool,
}

fn resistance(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    let (_, set) = sampler(cfg)?;
    let mut radii = cfg.radii.clone();
    radii.sort_unstable();
    radii.dedup();
    let rows = (0..cfg.count)
        .into_par_iter()
        .map(|k| {
            let mut lm = LimitMobile::new(set.clone(), &base.derive(k), cfg.bridge, cfg.cap)?;
            let mut out = Vec::new();
            for &r in &radii {
                let ball = SharpBall::build(&mut lm, r)?;
                let sh = ball.shorting_check()?;
                let j = ball.j_lambda(cfg.lambda)?;
                out.push(ResistanceRow {
                    sample: k,
                    radius: r,
                    vertices: ball.members.len(),
                    omega: j.omega,
                    reff: j.reff_to_complement,
                    r_sharp: sh.r_sharp,
                    r_star: sh.r_star,
                    shorting: sh.holds(),
                    in_j: j.in_j(),
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let header = "sample\tradius\tvertices\tomega\tomega_over_r2\treff\tr_sharp\tr_star\tshorting_holds\tin_j";
    match cfg.format {
        Format::Json => {
            let mut s = String::new();
            for r in &rows {
                let v = json!({
                    "sample": r.sample, "radius": r.radius, "vertices": r.vertices, "omega": r.omega,
                    "omega_over_r2": r.omega / (r.radius as f64).powi(2), "reff": r.reff,
                    "r_sharp": r.r_sharp, "r_star": r.r_star, "shorting_holds": r.shorting, "in_j": r.in_j,
                });
                s.push_str(&serde_json::to_string(&v)?);
                s.push('\n');
            }
            w.put("resistance.ndjson", &s)?;
        }
        Format::Tsv => {
            let mut s = format!("{header}\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.sample,
                    r.radius,
                    r.vertices,
                    r.omega,
                    r.omega / (r.radius as f64).powi(2),
                    r.reff,
                    r.r_sharp,
                    r.r_star,
                    r.shorting,
                    r.in_j
                );
            }
            w.put("resistance.tsv", &s)?;
        }
        Format::Dot => return Err(unsupported(Command::ResistanceRun, cfg.format)),
    }
    let per_radius: Vec<Value> = radii
        .iter()
        .map(|&r| {
            let sel: Vec<&ResistanceRow> = rows.iter().filter(|x| x.radius == r).collect();
            let mut ratio: Vec<f64> = sel.iter().map(|x| x.omega / (r as f64).powi(2)).collect();
            let mut reff: Vec<f64> = sel.iter().map(|x| x.reff).collect();
            json!({
                "radius": r,
                "median_omega_over_r2": median(&mut ratio),
                "median_reff": median(&mut reff),
                "shorting_violations": sel.iter().filter(|x| !x.shorting).count(),
                "in_j_fraction": sel.iter().filter(|x| x.in_j).count() as f64 / sel.len() as f64,
            })
        })
        .collect();
    Ok(json!({"samples": cfg.count, "lambda": cfg.lambda, "radii": per_radius}))
}

fn verify(cfg: &RunConfig, w: &mut Writer) -> Result<(Value, bool)> {
    let checks = verify_suite(cfg.n)?;
    let ok = checks.iter().all(|c| c.passed());
    match cfg.format {
        Format::Json => w.put("checks.json", &(serde_json::to_string_pretty(&checks)? + "\n"))?,
        Format::Tsv => {
            let mut s = String::from("check\tcases\tviolations\n");
            for c in &checks {
                let _ = writeln!(s, "{}\t{}\t{}", c.name, c.cases, c.violations);
            }
            w.put("checks.tsv", &s)?;
        }
        Format::Dot => return Err(unsupported(Command::Verify, cfg.format)),
    }
    let failing: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    Ok((json!({"checks": checks.len(), "failing": failing}), ok))
}

fn export_dot(cfg: &RunConfig, base: &RngStream, w: &mut Writer) -> Result<Value> {
    let maps = match &cfg.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| PlanarMap::from_json(&serde_json::from_str(l)?))
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let tw = crate::weights::derive_tree_weights(&cfg.weights)?;
            vec![sample_map_n(&tw, cfg.n, &mut base.derive(0))?.1]
        }
    };
    w.put("maps.dot", &maps.iter().map(|m| m.to_dot()).collect::<String>())?;
    Ok(json!({"maps": maps.len(), "from_input": cfg.input.is_some()}))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cfg: RunConfig) -> (tempfile::TempDir, Outcome) {
        let dir = tempfile::tempdir().unwrap();
        let o = dispatch(&cfg, dir.path()).unwrap();
        (dir, o)
    }

    #[test]
    fn analyze_uniform_has_kappa_one_and_halving_pi() {
        let (d, o) = run(RunConfig { command: Some(Command::AnalyzeWeights), ..Default::default() });
        assert!((o.summary["kappa"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        let rows: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(d.path().join("laws.json")).unwrap()).unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert!((row["pi"].as_f64().unwrap() - 0.5f64.powi(i as i32 + 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_map_writes_one_map_per_line() {
        let cfg = RunConfig { command: Some(Command::SampleMap), n: 50, count: 3, ..Default::default() };
        let (d, o) = run(cfg);
        assert_eq!(o.files, vec!["maps.ndjson"]);
        let text = std::fs::read_to_string(d.path().join("maps.ndjson")).unwrap();
        assert_eq!(text.lines().count(), 3);
        for line in text.lines() {
            let m = PlanarMap::from_json(&serde_json::from_str(line).unwrap()).unwrap();
            assert_eq!(m.num_edges(), 50);
        }
    }

    #[test]
    fn dot_is_rejected_for_tables() {
        let cfg = RunConfig { command: Some(Command::AnalyzeWeights), format: Format::Dot, ..Default::default() };
        let e = dispatch(&cfg, tempfile::tempdir().unwrap().path()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("/format"));
    }

    #[test]
    fn missing_command_is_a_config_error() {
        let e = dispatch(&RunConfig::default(), tempfile::tempdir().unwrap().path()).unwrap_err();
        assert!(e.to_string().contains("/command"));
    }
}
