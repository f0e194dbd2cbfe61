//! The `mbridge` command line: one subcommand per experiment, a TOML
//! [`RunConfig`] with dotted `--set` overrides, and reproducible result
//! files tagged with the seed and config hash.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use commands::maze_env;
pub use config::{
    parse_override, set_path, AblationSection, DumpSection, EmbedSection, GaussianSection,
    LawSection, MazeRun, RunConfig, ScalingSection, TrainRun, UniformitySection,
};
pub use output::{Output, SCHEMA_VERSION};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "mbridge",
    version,
    about = "Contrastive encoders and bridging estimators for unpaired modalities",
    after_help = "Every run writes resolved_config.toml, its result files and meta.json to the \
                  output directory. Any config key can be overridden with --set section.key=value."
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (config key `output`).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dotted config override, e.g. `retrieval.train.epochs=5`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the synthetic A–B–C splits and write them as containers.
    SynthGen,
    /// Train encoders on synthetic data and export embeddings for bridging.
    Train(TrainArgs),
    /// Multi-trial retrieval curves for ground truth, direct and Monte Carlo.
    EvalRetrieval(RetrievalArgs),
    /// Hypersphere closed form against uniform-sphere Monte Carlo.
    LawCheck(LawArgs),
    /// Gaussian closed form against Gaussian Monte Carlo.
    GaussianLawCheck(GaussianArgs),
    /// Retrieval as the A ⟂ C | B violation grows.
    AblateCi(AblateArgs),
    /// KS-based uniformity test of unit-norm embeddings.
    Uniformity(UniformityArgs),
    /// Bridge externally produced embeddings through a shared item bank.
    EmbedBridge(EmbedArgs),
    /// Monte Carlo recall against bank size.
    ScalingSweep(ScalingArgs),
    /// Collect maze trajectories.
    MazeCollect(MazeArgs),
    /// Train the maze encoders.
    MazeTrain(MazeArgs),
    /// Compare direct and LSE policies in the maze.
    MazeEval(MazeEvalArgs),
    /// Train 2-D encoders and dump their representations.
    #[command(name = "dump-2d")]
    Dump2d(DumpArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SynthGen => "synth-gen",
            Command::Train(_) => "train",
            Command::EvalRetrieval(_) => "eval-retrieval",
            Command::LawCheck(_) => "law-check",
            Command::GaussianLawCheck(_) => "gaussian-law-check",
            Command::AblateCi(_) => "ablate-ci",
            Command::Uniformity(_) => "uniformity",
            Command::EmbedBridge(_) => "embed-bridge",
            Command::ScalingSweep(_) => "scaling-sweep",
            Command::MazeCollect(_) => "maze-collect",
            Command::MazeTrain(_) => "maze-train",
            Command::MazeEval(_) => "maze-eval",
            Command::Dump2d(_) => "dump-2d",
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct RetrievalArgs {
    /// `l2`, `dot`, `cosine` or `cosine:<τ>`.
    #[arg(long)]
    pub critic: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    /// Train the two pairs separately, each with its own B encoder.
    #[arg(long)]
    pub independent: bool,
}

#[derive(Debug, Args)]
pub struct LawArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GaussianArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// Representation variance `c`.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    /// Comma-separated shift strengths.
    #[arg(long, value_delimiter = ',')]
    pub shifts: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct UniformityArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub bank_first: Option<PathBuf>,
    #[arg(long)]
    pub bank_second: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Critic for both sides.
    #[arg(long)]
    pub critic: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub embed: EmbedArgs,
    /// Comma-separated bank sizes.
    #[arg(long, value_delimiter = ',')]
    pub ms: Vec<usize>,
    #[arg(long)]
    pub subsamples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MazeArgs {
    /// `fork`, `open:<w>x<h>` or an ASCII map file.
    #[arg(long)]
    pub layout: Option<String>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MazeEvalArgs {
    #[command(flatten)]
    pub maze: MazeArgs,
    /// Model directory from `maze-train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub eval_episodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

type Overrides = Vec<(String, toml::Value)>;

fn put<T: Into<toml::Value>>(o: &mut Overrides, key: &str, v: Option<T>) {
    if let Some(v) = v {
        o.push((key.to_string(), v.into()));
    }
}

fn put_count(o: &mut Overrides, key: &str, v: Option<usize>) {
    put(o, key, v.map(|n| n as i64));
}

fn put_path(o: &mut Overrides, key: &str, v: &Option<PathBuf>) {
    put(o, key, v.as_ref().map(|p| p.display().to_string()));
}

impl RetrievalArgs {
    fn overrides(&self, o: &mut Overrides) {
        put(o, "retrieval.train.critic", self.critic.clone());
        put_count(o, "retrieval.trials", self.trials);
        put_count(o, "retrieval.train.epochs", self.epochs);
    }
}

impl EmbedArgs {
    fn overrides(&self, o: &mut Overrides) {
        put_path(o, "embed.bank_first", &self.bank_first);
        put_path(o, "embed.bank_second", &self.bank_second);
        put_path(o, "embed.queries", &self.queries);
        put_path(o, "embed.pool", &self.pool);
        put(o, "embed.critic_first", self.critic.clone());
        put(o, "embed.critic_second", self.critic.clone());
        put_count(o, "embed.k", self.k);
    }
}

impl MazeArgs {
    fn overrides(&self, o: &mut Overrides) {
        put(o, "maze_run.layout", self.layout.clone());
        put_count(o, "maze.episodes", self.episodes);
        put_count(o, "maze.train.epochs", self.epochs);
    }
}

impl Command {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides::new();
        match self {
            Command::SynthGen => {}
            Command::Train(a) => {
                a.retrieval.overrides(&mut o);
                if a.independent {
                    put(&mut o, "train_run.independent", Some(true));
                }
            }
            Command::EvalRetrieval(a) => a.overrides(&mut o),
            Command::LawCheck(a) => {
                put(&mut o, "law.dims", a.dim.map(|d| vec![d as i64]));
                put_count(&mut o, "law.samples", a.samples);
                put_count(&mut o, "law.pairs", a.pairs);
            }
            Command::GaussianLawCheck(a) => {
                put(&mut o, "gaussian.dims", a.dim.map(|d| vec![d as i64]));
                put(&mut o, "gaussian.scales", a.scale.map(|c| vec![c]));
                put(&mut o, "gaussian.delta", a.delta);
                put_count(&mut o, "gaussian.samples", a.samples);
            }
            Command::AblateCi(a) => {
                a.retrieval.overrides(&mut o);
                if !a.shifts.is_empty() {
                    put(&mut o, "ablation.shifts", Some(a.shifts.clone()));
                }
            }
            Command::Uniformity(a) => {
                put_path(&mut o, "uniformity.input", &a.input);
                put(&mut o, "uniformity.kappa", a.kappa);
                put_count(&mut o, "uniformity.dim", a.dim);
                put_count(&mut o, "uniformity.samples", a.samples);
            }
            Command::EmbedBridge(a) => a.overrides(&mut o),
            Command::ScalingSweep(a) => {
                a.embed.overrides(&mut o);
                if !a.ms.is_empty() {
                    let ms: Vec<i64> = a.ms.iter().map(|&m| m as i64).collect();
                    put(&mut o, "scaling.ms", Some(ms));
                }
                put_count(&mut o, "scaling.subsamples", a.subsamples);
            }
            Command::MazeCollect(a) | Command::MazeTrain(a) => a.overrides(&mut o),
            Command::MazeEval(a) => {
                a.maze.overrides(&mut o);
                put_path(&mut o, "maze_run.model", &a.model);
                put_count(&mut o, "maze.eval_episodes", a.eval_episodes);
            }
            Command::Dump2d(a) => {
                put_count(&mut o, "dump.rows", a.rows);
                put_count(&mut o, "retrieval.train.epochs", a.epochs);
            }
        }
        o
    }
}

/// Config precedence: file, then `--set` overrides, then subcommand
/// flags, then `--output` and `--seed`.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut o = cli
        .common
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Overrides>>()?;
    o.extend(cli.command.overrides());
    put_path(&mut o, "output", &cli.common.output);
    put(&mut o, "seed", cli.common.seed.map(|s| s as i64));
    RunConfig::resolve(cli.common.config.as_deref(), &o)
}

pub fn execute(cli: &Cli) -> Result<RunConfig> {
    let cfg = resolve(cli)?;
    let mut out = Output::create(&cfg.output, cfg.seed, cfg.hash()?)?;
    out.write_raw("resolved_config.toml", cfg.to_toml()?.as_bytes())?;
    match &cli.command {
        Command::SynthGen => commands::synth_gen(&cfg, &mut out)?,
        Command::Train(_) => commands::train(&cfg, &mut out)?,
        Command::EvalRetrieval(_) => commands::eval_retrieval(&cfg, &mut out)?,
        Command::LawCheck(_) => commands::law_check(&cfg, &mut out)?,
        Command::GaussianLawCheck(_) => commands::gaussian_law_check_cmd(&cfg, &mut out)?,
        Command::AblateCi(_) => commands::ablate(&cfg, &mut out)?,
        Command::Uniformity(_) => commands::uniformity(&cfg, &mut out)?,
        Command::EmbedBridge(_) => commands::embed_bridge(&cfg, &mut out)?,
        Command::ScalingSweep(_) => commands::scaling(&cfg, &mut out)?,
        Command::MazeCollect(_) => commands::maze_collect(&cfg, &mut out)?,
        Command::MazeTrain(_) => commands::maze_train(&cfg, &mut out)?,
        Command::MazeEval(_) => commands::maze_eval(&cfg, &mut out)?,
        Command::Dump2d(_) => commands::dump_2d(&cfg, &mut out)?,
    }
    println!("results in {}", out.dir().display());
    out.finish(cli.command.name())?;
    Ok(cfg)
}

/// `{"kind": …, "message": …}` on one line.
pub fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Parses `args`, runs the subcommand and returns the process exit code:
/// 0 on success, 1 on a run error, 2 on a usage error. Errors are printed
/// to stderr as JSON.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mbridge").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_set_and_file() {
        let c = cli(&[
            "--set",
            "law.samples=5",
            "law-check",
            "--dim",
            "4",
            "--samples",
            "9",
            "--seed",
            "3",
        ]);
        let cfg = resolve(&c).unwrap();
        assert_eq!(cfg.law.dims, vec![4]);
        assert_eq!(cfg.law.samples, 9);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn retrieval_flags_map_to_config() {
        let c = cli(&["eval-retrieval", "--critic", "cosine:0.5", "--trials", "2"]);
        let cfg = resolve(&c).unwrap();
        assert_eq!(cfg.retrieval.trials, 2);
        assert_eq!(cfg.retrieval.train.critic.to_string(), "cosine:0.5");
        let c = cli(&["ablate-ci", "--shifts", "0,2"]);
        assert_eq!(resolve(&c).unwrap().ablation.shifts, vec![0.0, 2.0]);
    }

    #[test]
    fn bad_critic_is_a_config_error() {
        let c = cli(&["eval-retrieval", "--critic", "manhattan"]);
        assert_eq!(resolve(&c).unwrap_err().kind(), "config");
    }

    #[test]
    fn error_json_is_machine_readable() {
        let v: serde_json::Value =
            serde_json::from_str(&error_json("shape", "bad \"dims\"")).unwrap();
        assert_eq!(v["error"]["kind"], "shape");
        assert_eq!(v["error"]["message"], "bad \"dims\"");
        assert_eq!(run(["mbridge", "no-such-command"]), 2);
    }
}
