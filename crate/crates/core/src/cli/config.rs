use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contrastive::CriticKind;
use crate::error::{Error, Result};
use crate::eval::RetrievalConfig;
use crate::maze::MazeConfig;

/// Everything one CLI run needs. The top-level `seed` is copied into
/// `retrieval.seed` and `maze.seed` before the run, so the resolved config
/// always shows the seeds actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: String,
    pub seed: u64,
    pub output: PathBuf,
    pub retrieval: RetrievalConfig,
    pub train_run: TrainRun,
    pub law: LawSection,
    pub gaussian: GaussianSection,
    pub ablation: AblationSection,
    pub uniformity: UniformitySection,
    pub scaling: ScalingSection,
    pub embed: EmbedSection,
    pub dump: DumpSection,
    pub maze: MazeConfig,
    pub maze_run: MazeRun,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: "default".into(),
            seed: 0,
            output: PathBuf::from("out"),
            retrieval: RetrievalConfig::default(),
            train_run: TrainRun::default(),
            law: LawSection::default(),
            gaussian: GaussianSection::default(),
            ablation: AblationSection::default(),
            uniformity: UniformitySection::default(),
            scaling: ScalingSection::default(),
            embed: EmbedSection::default(),
            dump: DumpSection::default(),
            maze: MazeConfig::default(),
            maze_run: MazeRun::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainRun {
    /// Train `A–B` and `B–C` as two unrelated models instead of one chain
    /// with a shared `B` encoder.
    pub independent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LawSection {
    pub dims: Vec<usize>,
    pub pairs: usize,
    pub samples: usize,
}

impl Default for LawSection {
    fn default() -> Self {
        Self {
            dims: vec![3, 8],
            pairs: 20,
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianSection {
    pub dims: Vec<usize>,
    pub scales: Vec<f64>,
    /// Overrides `δ = 2/(c+1)` when set.
    pub delta: Option<f64>,
    /// Standard deviation of the `φ_A`, `φ_C` test points.
    pub spread: f64,
    pub pairs: usize,
    pub samples: usize,
}

impl Default for GaussianSection {
    fn default() -> Self {
        Self {
            dims: vec![1, 2],
            scales: vec![0.5, 1.0, 2.0],
            delta: None,
            spread: 0.7,
            pairs: 20,
            samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationSection {
    pub shifts: Vec<f64>,
}

impl Default for AblationSection {
    fn default() -> Self {
        Self {
            shifts: vec![0.0, 1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniformitySection {
    /// Embedding file to test; rows are L2-normalized first. Without it a
    /// synthetic sample is drawn (uniform for `kappa = 0`, vMF otherwise).
    pub input: Option<PathBuf>,
    pub samples: usize,
    pub dim: usize,
    pub kappa: f64,
    pub directions: usize,
    pub reference_size: usize,
    pub level: f64,
}

impl Default for UniformitySection {
    fn default() -> Self {
        Self {
            input: None,
            samples: 2000,
            dim: 8,
            kappa: 0.0,
            directions: 16,
            reference_size: 2000,
            level: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSection {
    pub ms: Vec<usize>,
    pub subsamples: usize,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            ms: vec![1, 10, 100, 1000, 3000, 10000],
            subsamples: 20,
        }
    }
}

/// External embeddings (`.uclb` containers or `dim=<d>` CSV files).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedSection {
    /// Bridge items encoded by the `A–B` model.
    pub bank_first: Option<PathBuf>,
    /// The same items, in the same order, encoded by the `B–C` model.
    pub bank_second: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    /// Row `q` is the match of query `q`.
    pub pool: Option<PathBuf>,
    /// Renames both banks, asserting they list the same items.
    pub items: Option<String>,
    pub critic_first: CriticKind,
    pub critic_second: CriticKind,
    pub candidates: usize,
    pub k: usize,
}

impl Default for EmbedSection {
    fn default() -> Self {
        Self {
            bank_first: None,
            bank_second: None,
            queries: None,
            pool: None,
            items: None,
            critic_first: CriticKind::L2Half,
            critic_second: CriticKind::L2Half,
            candidates: 32,
            k: 1,
        }
    }
}

impl EmbedSection {
    pub fn is_set(&self) -> bool {
        self.bank_first.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DumpSection {
    pub critics: Vec<CriticKind>,
    /// Evaluation rows encoded per modality.
    pub rows: usize,
}

impl Default for DumpSection {
    fn default() -> Self {
        Self {
            critics: vec![
                CriticKind::L2Half,
                CriticKind::Dot,
                CriticKind::Cosine { temperature: 1.0 },
            ],
            rows: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MazeRun {
    /// `fork`, `open:<w>x<h>`, or a path to an ASCII wall map.
    pub layout: String,
    /// Model directory written by `maze-train`; `maze-eval` trains a fresh
    /// model when unset.
    pub model: Option<PathBuf>,
    /// Start state and label text for the first-action report.
    pub start: [f64; 2],
    pub label: String,
    pub heatmap_samples: usize,
}

impl Default for MazeRun {
    fn default() -> Self {
        Self {
            layout: "fork".into(),
            model: None,
            start: [2.5, 6.5],
            label: "the first column".into(),
            heatmap_samples: 16,
        }
    }
}

impl RunConfig {
    /// Builds the config from an optional TOML file plus `key = value`
    /// overrides (dotted keys), later overrides winning.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<Self> {
        let mut doc = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            set_path(&mut doc, key, value.clone())?;
        }
        let mut cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.retrieval.seed = cfg.seed;
        cfg.maze.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the resolved TOML text with `output` cleared, so the
    /// same experiment written to two directories hashes the same.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let digest = Sha256::digest(c.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Sets `a.b.c = value`, creating intermediate tables.
pub fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.trim().is_empty()) {
        return Err(Error::Config(format!("bad key {key:?}")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.trim().to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(Error::Config(format!("{key:?}: {part:?} is not a table"))),
        };
    }
    table.insert(parts[parts.len() - 1].trim().to_string(), value);
    Ok(())
}

/// Parses `key=value`; the value is read as a TOML literal and falls back
/// to a bare string (so `critic=l2` works unquoted).
pub fn parse_override(raw: &str) -> Result<(String, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {raw:?} is not key=value")))?;
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.trim().to_string(), parsed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_apply_in_order() {
        let sets = vec![
            parse_override("retrieval.train.critic=dot").unwrap(),
            parse_override("law.samples = 10").unwrap(),
            parse_override("law.samples=20").unwrap(),
            parse_override("seed=7").unwrap(),
            parse_override("law.dims=[4]").unwrap(),
        ];
        let cfg = RunConfig::resolve(None, &sets).unwrap();
        assert_eq!(cfg.retrieval.train.critic, CriticKind::Dot);
        assert_eq!(cfg.law.samples, 20);
        assert_eq!(cfg.law.dims, vec![4]);
        assert_eq!(cfg.retrieval.seed, 7);
        assert_eq!(cfg.maze.seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::resolve(None, &[parse_override("law.sampels=3").unwrap()]);
        assert!(matches!(err, Err(Error::Config(_))));
        assert!(RunConfig::resolve(None, &[parse_override("bogus=1").unwrap()]).is_err());
        assert!(parse_override("novalue").is_err());
        let mut t = toml::Table::new();
        set_path(&mut t, "a", toml::Value::Integer(1)).unwrap();
        assert!(set_path(&mut t, "a.b", toml::Value::Integer(1)).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.output = PathBuf::from("elsewhere");
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.law.pairs += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
