use std::io::Write;
use std::path::Path;

use ndarray::{s, Array1, Axis};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::output::Output;
use crate::bridge::{gaussian_law_check, sphere_law_check, GaussianLawCheck, SphereLawCheck};
use crate::contrastive::{train_chain, train_pair, LossHistory};
use crate::embed_io::{
    bridge_external, scaling_sweep, write_scaling_csv, AlignedBank, Dtype, EmbeddingContainer,
};
use crate::encoders::save_checkpoint;
use crate::error::{Error, Result};
use crate::eval::{
    ablate_ci, dump_representations_2d, run_trials, scaling_experiment, uniformity_test,
    write_points_csv, CandidateSets, Method, TrialData,
};
use crate::maze::{
    collect, column_and_row_labels, find_label, fork_episodes, label_heatmap, rollout_eval,
    train_maze, write_heatmap_csv, MazeEnv, MazeModel, PolicyKind, Selection, ACTION_NAMES,
};
use crate::numerics::{sample_uniform_sphere, sample_vmf, Matrix, SeedRng};
use crate::synthdata::{Split, SplitSizes};

fn container(name: &str, m: Matrix) -> Result<EmbeddingContainer> {
    EmbeddingContainer::with_dtype(name, m, Dtype::F64)
}

fn save(out: &mut Output, file: &str, name: &str, m: Matrix) -> Result<()> {
    container(name, m)?.save(out.path(file))
}

fn loss_csv(out: &mut Output, file: &str, h: &LossHistory) -> Result<()> {
    out.write_csv(file, |w| h.write_csv(w))
}

fn trial_zero(cfg: &RunConfig) -> Result<(SeedRng, TrialData)> {
    let r = &cfg.retrieval;
    r.validate()?;
    let rng = SeedRng::new(r.seed).substream("trial", 0);
    let data = TrialData::generate(
        &rng,
        &r.synth,
        SplitSizes {
            privileged: 0,
            ..r.split
        },
        r.standardize,
        r.candidates,
        r.bank_size,
    )?;
    Ok((rng, data))
}

/// Writes the trial-0 synthetic splits as containers.
pub fn synth_gen(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let (_, data) = trial_zero(cfg)?;
    let s = &data.splits;
    let files = [
        ("ab_a.uclb", "ab", &s.ab.left),
        ("ab_b.uclb", "ab", &s.ab.right),
        ("bc_b.uclb", "bc", &s.bc.left),
        ("bc_c.uclb", "bc", &s.bc.right),
        ("eval_a.uclb", "eval", &s.eval.a),
        ("eval_b.uclb", "eval", &s.eval.b),
        ("eval_c.uclb", "eval", &s.eval.c),
    ];
    for (file, name, m) in files {
        save(out, file, name, m.clone())?;
    }
    out.write_json(
        "synth.json",
        &json!({
            "n_a": cfg.retrieval.synth.n_a,
            "n_b": cfg.retrieval.synth.n_b,
            "n_c": cfg.retrieval.synth.n_c,
            "train_pairs": s.ab.len(),
            "eval_triples": s.eval.len(),
            "standardized": cfg.retrieval.standardize,
        }),
    )?;
    println!(
        "wrote {} training pairs per side, {} evaluation triples",
        s.ab.len(),
        s.eval.len()
    );
    Ok(())
}

/// Trains on the trial-0 data and exports encoders plus the query, pool
/// and bank embeddings that `embed-bridge` consumes.
pub fn train(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let (rng, data) = trial_zero(cfg)?;
    let t = &cfg.retrieval.train;
    let s = &data.splits;
    let items = data.intermediate_rows();
    let (ab_val, bc_val) = (s.eval.ab(Split::Validation)?, s.eval.bc(Split::Validation)?);
    let (queries, pool, first, second) = if cfg.train_run.independent {
        let ab = train_pair(&rng.substream("train-ab", 0), t, &s.ab, &ab_val)?;
        let bc = train_pair(&rng.substream("train-bc", 0), t, &s.bc, &bc_val)?;
        save_checkpoint(&ab.left, out.path("encoder_a.ucln"))?;
        save_checkpoint(&ab.right, out.path("encoder_b_first.ucln"))?;
        save_checkpoint(&bc.left, out.path("encoder_b_second.ucln"))?;
        save_checkpoint(&bc.right, out.path("encoder_c.ucln"))?;
        loss_csv(out, "loss_ab.csv", &ab.history)?;
        loss_csv(out, "loss_bc.csv", &bc.history)?;
        (
            ab.left.forward(s.eval.a.view())?,
            bc.right.forward(s.eval.c.view())?,
            ab.right.forward(items.view())?,
            bc.left.forward(items.view())?,
        )
    } else {
        let chain = train_chain(
            &rng.substream("train-chain", 0),
            t,
            &s.ab,
            &s.bc,
            &ab_val,
            &bc_val,
        )?;
        save_checkpoint(&chain.a, out.path("encoder_a.ucln"))?;
        save_checkpoint(&chain.b, out.path("encoder_b.ucln"))?;
        save_checkpoint(&chain.c, out.path("encoder_c.ucln"))?;
        loss_csv(out, "loss_ab.csv", &chain.history_ab)?;
        loss_csv(out, "loss_bc.csv", &chain.history_bc)?;
        let bank = chain.b.forward(items.view())?;
        (
            chain.a.forward(s.eval.a.view())?,
            chain.c.forward(s.eval.c.view())?,
            bank.clone(),
            bank,
        )
    };
    let queries = container("eval_a", queries)?;
    let pool = container("eval_c", pool)?;
    let bank = AlignedBank::new(
        container("bank_items", first)?,
        container("bank_items", second)?,
    )?;
    queries.save(out.path("queries.uclb"))?;
    pool.save(out.path("pool.uclb"))?;
    bank.via_first().save(out.path("bank_first.uclb"))?;
    bank.via_second().save(out.path("bank_second.uclb"))?;
    let report = bridge_external(
        &bank,
        (t.critic, t.critic),
        &queries,
        &pool,
        &data.candidates,
        cfg.retrieval.k,
    )?;
    out.write_json("train.json", &report)?;
    println!(
        "recall@{}: direct {:.3}, monte carlo {:.3} (chance {:.3})",
        report.k,
        report.direct.unwrap_or(f64::NAN),
        report.monte_carlo,
        report.chance
    );
    Ok(())
}

pub fn eval_retrieval(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let report = run_trials(&cfg.retrieval)?;
    out.write_csv("retrieval.csv", |w| report.write_csv(w))?;
    out.write_json("retrieval.json", &report)?;
    for c in &report.curves {
        let (m, sd) = c.final_stats();
        println!("{:<12} {m:.3} ± {sd:.3}", c.method.tag());
    }
    Ok(())
}

pub fn law_check(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let l = &cfg.law;
    let root = SeedRng::new(cfg.seed);
    let checks = l
        .dims
        .iter()
        .map(|&d| {
            sphere_law_check(
                &mut root.substream("sphere-law", d as u64),
                d,
                l.pairs,
                l.samples,
            )
        })
        .collect::<Result<Vec<SphereLawCheck>>>()?;
    let worst = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    out.write_json(
        "law_check.json",
        &json!({ "max_rel_error": worst, "checks": checks }),
    )?;
    for c in &checks {
        println!(
            "dim {:>3}: max relative error {:.2e}",
            c.dim, c.max_rel_error
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct GaussianCase {
    dim: usize,
    scale: f64,
    check: GaussianLawCheck,
    /// Same draws scored with `δ = 1/(c+1)`.
    half_delta: GaussianLawCheck,
}

pub fn gaussian_law_check_cmd(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let g = &cfg.gaussian;
    let root = SeedRng::new(cfg.seed);
    let mut grid = Vec::new();
    for (di, &d) in g.dims.iter().enumerate() {
        for (ci, &c) in g.scales.iter().enumerate() {
            grid.push(((di * g.scales.len() + ci) as u64, d, c));
        }
    }
    let cases = grid
        .par_iter()
        .map(|&(i, dim, scale)| {
            let rng = root.substream("gaussian-law", i);
            let run = |delta| {
                gaussian_law_check(
                    &mut rng.clone(),
                    dim,
                    scale,
                    delta,
                    g.spread,
                    g.pairs,
                    g.samples,
                )
            };
            Ok(GaussianCase {
                dim,
                scale,
                check: run(g.delta)?,
                half_delta: run(Some(1.0 / (scale + 1.0)))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = cases
        .iter()
        .map(|c| c.check.max_rel_error)
        .fold(0.0, f64::max);
    out.write_json(
        "gaussian_law_check.json",
        &json!({ "max_rel_error": worst, "cases": cases }),
    )?;
    for c in &cases {
        println!(
            "dim {} c {}: max relative error {:.2e} (δ=1/(c+1): {:.2e})",
            c.dim, c.scale, c.check.max_rel_error, c.half_delta.max_rel_error
        );
    }
    Ok(())
}

pub fn ablate(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let results = ablate_ci(&cfg.retrieval, &cfg.ablation.shifts)?;
    out.write_csv("ablation.csv", |w| {
        writeln!(w, "shift,method,mean,std,trials")?;
        for (shift, report) in &results {
            for c in &report.curves {
                let (m, sd) = c.final_stats();
                writeln!(
                    w,
                    "{shift},{},{m},{sd},{}",
                    c.method,
                    c.values.last().map_or(0, Vec::len)
                )?;
            }
        }
        Ok(())
    })?;
    for (shift, r) in &results {
        let show = |m: Method| r.final_mean(m).map_or("-".into(), |v| format!("{v:.3}"));
        println!(
            "shift {shift}: ground truth {}, direct {}, monte carlo {}",
            show(Method::GroundTruth),
            show(Method::Direct),
            show(Method::MonteCarlo)
        );
    }
    Ok(())
}

fn normalize_rows(mut m: Matrix) -> Result<Matrix> {
    for (i, mut r) in m.axis_iter_mut(Axis(0)).enumerate() {
        let n = r.dot(&r).sqrt();
        if !(n > 0.0) {
            return Err(Error::Domain(format!("row {i} has zero norm")));
        }
        r /= n;
    }
    Ok(m)
}

pub fn uniformity(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let u = &cfg.uniformity;
    let root = SeedRng::new(cfg.seed);
    let (source, reps) = match &u.input {
        Some(p) => (
            p.display().to_string(),
            normalize_rows(load_embeddings(p)?.into_matrix())?,
        ),
        None if u.kappa == 0.0 => (
            "uniform".to_string(),
            sample_uniform_sphere(&mut root.substream("sample", 0), u.dim, u.samples)?.points,
        ),
        None => {
            let mut mean = Array1::zeros(u.dim);
            mean[0] = 1.0;
            (
                format!("vmf(kappa={})", u.kappa),
                sample_vmf(
                    &mut root.substream("sample", 0),
                    mean.view(),
                    u.kappa,
                    u.samples,
                )?,
            )
        }
    };
    let report = uniformity_test(
        &mut root.substream("test", 0),
        reps.view(),
        u.directions,
        u.reference_size,
    )?;
    let rejects = report.rejects(u.level);
    out.write_json(
        "uniformity.json",
        &json!({ "source": source, "level": u.level, "rejects": rejects, "report": report }),
    )?;
    println!(
        "{source}: statistic {:.4}, p-value {:.4} ({} at level {})",
        report.statistic,
        report.p_value,
        if rejects { "rejected" } else { "not rejected" },
        u.level
    );
    Ok(())
}

/// `.csv` files use the `dim=<d>` text import, anything else the binary
/// container.
fn load_embeddings(path: &Path) -> Result<EmbeddingContainer> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        EmbeddingContainer::from_csv_text(stem, &std::fs::read_to_string(path)?)
    } else {
        EmbeddingContainer::load(path)
    }
}

struct External {
    bank: AlignedBank,
    queries: EmbeddingContainer,
    pool: EmbeddingContainer,
    candidates: CandidateSets,
}

fn load_external(cfg: &RunConfig) -> Result<External> {
    let e = &cfg.embed;
    let need = |p: &Option<std::path::PathBuf>, key: &str| {
        p.clone()
            .ok_or_else(|| Error::Config(format!("embed.{key} is required")))
    };
    let mut first = load_embeddings(&need(&e.bank_first, "bank_first")?)?;
    let mut second = load_embeddings(&need(&e.bank_second, "bank_second")?)?;
    if let Some(items) = &e.items {
        first =
            EmbeddingContainer::with_dtype(items.clone(), first.matrix().clone(), first.dtype())?;
        second =
            EmbeddingContainer::with_dtype(items.clone(), second.matrix().clone(), second.dtype())?;
    }
    let queries = load_embeddings(&need(&e.queries, "queries")?)?;
    let pool = load_embeddings(&need(&e.pool, "pool")?)?;
    let candidates = CandidateSets::sample(
        &mut SeedRng::new(cfg.seed).substream("candidates", 0),
        queries.rows(),
        pool.rows(),
        e.candidates,
    )?;
    Ok(External {
        bank: AlignedBank::new(first, second)?,
        queries,
        pool,
        candidates,
    })
}

pub fn embed_bridge(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let e = &cfg.embed;
    let x = load_external(cfg)?;
    let report = bridge_external(
        &x.bank,
        (e.critic_first, e.critic_second),
        &x.queries,
        &x.pool,
        &x.candidates,
        e.k,
    )?;
    out.write_json("embed_bridge.json", &report)?;
    println!(
        "recall@{} over {} bank items: monte carlo {:.3}, direct {}, chance {:.3}",
        report.k,
        report.bank_size,
        report.monte_carlo,
        report.direct.map_or("n/a".into(), |d| format!("{d:.3}")),
        report.chance
    );
    Ok(())
}

/// Sweeps the bank size over external embeddings when `embed.bank_first`
/// is set, otherwise over a freshly trained synthetic chain.
pub fn scaling(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let sc = &cfg.scaling;
    let (points, direct) = if cfg.embed.is_set() {
        let e = &cfg.embed;
        let x = load_external(cfg)?;
        let bank = x.bank.phi_bank(e.critic_first, e.critic_second)?;
        let points = scaling_sweep(
            &SeedRng::new(cfg.seed).substream("sweep", 0),
            &bank,
            x.queries.matrix(),
            x.pool.matrix(),
            &x.candidates,
            e.k,
            &sc.ms,
            sc.subsamples,
        )?;
        (points, None)
    } else {
        let r = scaling_experiment(&cfg.retrieval, &sc.ms, sc.subsamples)?;
        (r.points, Some(r.direct))
    };
    out.write_csv("scaling.csv", |w| write_scaling_csv(&points, w))?;
    out.write_json(
        "scaling.json",
        &json!({ "direct": direct, "points": points }),
    )?;
    for p in &points {
        println!("M = {:>6}: {:.3} ± {:.3}", p.m, p.mean, p.ci95);
    }
    if let Some(d) = direct {
        println!("direct: {d:.3}");
    }
    Ok(())
}

/// Trains one chain per critic with a 2-D latent and dumps the
/// evaluation representations of all three modalities.
pub fn dump_2d(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let (rng, data) = trial_zero(cfg)?;
    let s = &data.splits;
    let rows = cfg.dump.rows.min(s.eval.len());
    let (ab_val, bc_val) = (s.eval.ab(Split::Validation)?, s.eval.bc(Split::Validation)?);
    let per_critic = cfg
        .dump
        .critics
        .par_iter()
        .enumerate()
        .map(|(i, &critic)| {
            let mut t = cfg.retrieval.train.clone();
            t.critic = critic;
            t.latent_dim = 2;
            let chain = train_chain(
                &rng.substream("train-2d", i as u64),
                &t,
                &s.ab,
                &s.bc,
                &ab_val,
                &bc_val,
            )?;
            let sl = s![..rows, ..];
            dump_representations_2d(
                &[
                    ("A", &chain.a, s.eval.a.slice(sl)),
                    ("B", &chain.b, s.eval.b.slice(sl)),
                    ("C", &chain.c, s.eval.c.slice(sl)),
                ],
                &critic.to_string(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<_> = per_critic.into_iter().flatten().collect();
    out.write_csv("representations_2d.csv", |w| write_points_csv(&points, w))?;
    println!(
        "{} points for {} critics",
        points.len(),
        cfg.dump.critics.len()
    );
    Ok(())
}

pub fn maze_env(cfg: &RunConfig) -> Result<MazeEnv> {
    let layout = cfg.maze_run.layout.trim();
    let step = cfg.maze.step;
    if layout == "fork" {
        return MazeEnv::fork(step);
    }
    if let Some(size) = layout.strip_prefix("open:") {
        let (w, h) = size
            .split_once('x')
            .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
            .ok_or_else(|| {
                Error::Config(format!("bad open layout {layout:?}, expected open:<w>x<h>"))
            })?;
        return MazeEnv::open(w, h, step);
    }
    MazeEnv::from_ascii(&std::fs::read_to_string(layout)?, step)
}

pub fn maze_collect(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let env = maze_env(cfg)?;
    let m = &cfg.maze;
    let trajs = collect(
        &mut SeedRng::new(m.seed).substream("collect", 0),
        &env,
        m.episodes,
        m.horizon,
        m.collect,
    )?;
    out.write_raw("layout.txt", env.to_ascii().as_bytes())?;
    out.write_csv("trajectories.csv", |w| {
        writeln!(w, "episode,t,x,y,action")?;
        for (e, tr) in trajs.iter().enumerate() {
            for (t, st) in tr.states.iter().enumerate() {
                let a = tr.actions.get(t).map_or(String::new(), |a| a.to_string());
                writeln!(w, "{e},{t},{},{},{a}", st[0], st[1])?;
            }
        }
        Ok(())
    })?;
    let steps: usize = trajs.iter().map(|t| t.len()).sum();
    println!("{} episodes, {steps} transitions", trajs.len());
    Ok(())
}

pub fn maze_train(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let env = maze_env(cfg)?;
    let labels = column_and_row_labels(&env);
    let model = train_maze(&cfg.maze, &env, &labels)?;
    let dir = out.path("model");
    model.save(&dir)?;
    loss_csv(out, "loss_crl.csv", &model.history_crl)?;
    loss_csv(out, "loss_lang.csv", &model.history_lang)?;
    if let (Some(a), Some(b)) = (model.history_crl.last(), model.history_lang.last()) {
        println!(
            "validation loss: trajectory pair {:.3}, language pair {:.3}",
            a.validation, b.validation
        );
    }
    Ok(())
}

pub fn maze_eval(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let env = maze_env(cfg)?;
    let labels = column_and_row_labels(&env);
    let m = &cfg.maze;
    let model = match &cfg.maze_run.model {
        Some(dir) => MazeModel::load(dir, &env)?,
        None => train_maze(m, &env, &labels)?,
    };
    let label = find_label(&labels, &cfg.maze_run.label)?;
    let start = cfg.maze_run.start;
    let episodes = fork_episodes(
        &mut SeedRng::new(m.seed).substream("eval", 0),
        &env,
        &labels,
        m.eval_episodes,
    )?;
    let selection = Selection::Softmax {
        temperature: m.temperature,
    };
    let mut rows = Vec::new();
    for kind in [PolicyKind::Direct, PolicyKind::Lse] {
        let q = model.q_values(kind, start, label)?;
        let best = (0..q.len()).fold(0, |b, a| if q[a] > q[b] { a } else { b });
        let report = rollout_eval(
            &env,
            &model,
            &labels,
            kind,
            &episodes,
            m.max_steps,
            selection,
        )?;
        rows.push(json!({
            "policy": kind.tag(),
            "first_action": ACTION_NAMES[best],
            "q_values": q,
            "success_rate": report.success_rate,
            "episodes": report.episodes,
        }));
        println!(
            "{:<6} first action {:<10} success {:.3} over {} episodes",
            kind.tag(),
            ACTION_NAMES[best],
            report.success_rate,
            report.episodes
        );
    }
    out.write_csv("success.csv", |w| {
        writeln!(w, "policy,first_action,success_rate,episodes")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{}",
                r["policy"].as_str().unwrap_or(""),
                r["first_action"].as_str().unwrap_or(""),
                r["success_rate"],
                r["episodes"]
            )?;
        }
        Ok(())
    })?;
    let heat = label_heatmap(
        &mut SeedRng::new(m.seed).substream("heatmap", 0),
        &env,
        &model,
        label,
        cfg.maze_run.heatmap_samples,
    )?;
    out.write_csv("label_heatmap.csv", |w| write_heatmap_csv(&env, &heat, w))?;
    out.write_json(
        "maze_eval.json",
        &json!({ "start": start, "label": cfg.maze_run.label, "policies": rows }),
    )?;
    Ok(())
}
