//! Run configuration read by the command line tool and embedded in every
//! report it writes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::BridgeMethod;
use crate::limit::DEFAULT_NODE_CAP;
use crate::weights::FaceWeights;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    AnalyzeWeights,
    SampleTree,
    SampleMobile,
    SampleMap,
    LimitBall,
    Walk,
    SpectralRun,
    ResistanceRun,
    Verify,
    ExportDot,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::AnalyzeWeights,
        Command::SampleTree,
        Command::SampleMobile,
        Command::SampleMap,
        Command::LimitBall,
        Command::Walk,
        Command::SpectralRun,
        Command::ResistanceRun,
        Command::Verify,
        Command::ExportDot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::AnalyzeWeights => "analyze-weights",
            Command::SampleTree => "sample-tree",
            Command::SampleMobile => "sample-mobile",
            Command::SampleMap => "sample-map",
            Command::LimitBall => "limit-ball",
            Command::Walk => "walk",
            Command::SpectralRun => "spectral-run",
            Command::ResistanceRun => "resistance-run",
            Command::Verify => "verify",
            Command::ExportDot => "export-dot",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Tsv,
    Dot,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "tsv" => Ok(Format::Tsv),
            "dot" => Ok(Format::Dot),
            _ => Err(Error::Config(format!("/format: expected json, tsv or dot, got {s:?}"))),
        }
    }
}

/// Everything a run depends on. Missing fields take their defaults; unknown
/// fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub weights: FaceWeights,
    pub seed: u64,
    /// edges of finite samples; largest size for `verify`
    pub n: usize,
    /// number of samples or balls
    pub count: u64,
    pub radius: u32,
    pub radii: Vec<u32>,
    pub walkers: u64,
    pub steps: u64,
    pub maps: u64,
    pub min_vertices: usize,
    /// fit window `[n_lo, n_hi]` on `p(2n)`
    pub window: [u64; 2],
    pub lambda: f64,
    /// rows of the `analyze-weights` table
    pub terms: usize,
    pub bridge: BridgeMethod,
    /// vertex cap of a limit window
    pub cap: usize,
    pub format: Format,
    /// map file (one JSON map per line) for `export-dot`
    pub input: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            weights: FaceWeights::uniform(),
            seed: 0,
            n: 10,
            count: 10,
            radius: 8,
            radii: vec![8, 16, 32],
            walkers: 1000,
            steps: 8192,
            maps: 100,
            min_vertices: 10_000,
            window: [128, 4096],
            lambda: 4.0,
            terms: 12,
            bridge: BridgeMethod::Rejection,
            cap: DEFAULT_NODE_CAP,
            format: Format::Json,
            input: None,
        }
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl RunConfig {
    /// Parse and validate; errors name the offending field by JSON pointer.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config(format!("{}: {}", pointer(e.path()), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("/{field}: {msg}")));
        if let Err(e) = self.weights.validate() {
            return bad("weights", e.to_string());
        }
        if self.n == 0 {
            return bad("n", "must be positive".into());
        }
        for (field, v) in [("count", self.count), ("walkers", self.walkers), ("steps", self.steps), ("maps", self.maps)] {
            if v == 0 {
                return bad(field, "must be positive".into());
            }
        }
        if self.radii.is_empty() || self.radii.contains(&0) {
            return bad("radii", "needs at least one positive radius".into());
        }
        let [lo, hi] = self.window;
        if lo == 0 || lo >= hi {
            return bad("window", format!("needs 0 < lo < hi, got [{lo}, {hi}]"));
        }
        if hi > self.steps / 2 {
            return bad("window", format!("upper end {hi} is beyond steps / 2 = {}", self.steps / 2));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return bad("lambda", format!("needs lambda > 1, got {}", self.lambda));
        }
        if self.cap == 0 {
            return bad("cap", "must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig { command: Some(Command::Walk), ..Default::default() };
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn errors_point_at_the_field() {
        let e = RunConfig::from_json(r#"{"walkers": "many"}"#).unwrap_err().to_string();
        assert!(e.contains("/walkers"), "{e}");
        let e = RunConfig::from_json(r#"{"weights": {"family": "power_law", "c": 1.0, "beta": "x"}}"#).unwrap_err().to_string();
        assert!(e.contains("/weights"), "{e}");
        let e = RunConfig::from_json(r#"{"window": [64, 32]}"#).unwrap_err().to_string();
        assert!(e.contains("/window"), "{e}");
        let e = RunConfig::from_json(r#"{"colour": 1}"#).unwrap_err().to_string();
        assert!(e.starts_with("config error"), "{e}");
    }

    #[test]
    fn command_names_match_serde() {
        for c in Command::ALL {
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
    }
}
