//! Experiment orchestration: parallel discovery trials, trajectory
//! analysis, noise sweeps, Pareto fronts and report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{Backend, Certainty, GraphCode, VERIFY_BUDGET};
use crate::error::{Error, Result};
use crate::game::{
    evaluate_graph, replay_graphs, run_game, EquilibriumVerdict, GameConfig, GameTrajectory, Init, LoopDistance, Mode,
    Player, PlayerConfig,
};
use crate::graph::{Graph, Scope};
use crate::noise::{self, build_decoder_table, estimate_logical_error_rate, CheckMatrix, NoiseResult};
use crate::objectives::{CodeMetrics, ConstraintConfig, Constants, Registry};
use crate::phases::Phase;

fn default_backend() -> Backend {
    Backend::InputOutput
}
fn default_mode() -> Mode {
    Mode::SinglePlayer
}
fn default_t0() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.95
}
fn default_iterations() -> usize {
    40
}
fn default_proposals() -> usize {
    32
}
fn default_eps() -> f64 {
    1e-6
}
fn default_init() -> Init {
    Init::Random { edge_prob: 0.2 }
}
fn one() -> usize {
    1
}

/// Experiment description, read from JSON. Either `objective` (with
/// optional `constants` and `constraints`) or a `players` list is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub constraints: ConstraintConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub players: Vec<PlayerConfig>,
    pub n_out: usize,
    pub n_in: usize,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default)]
    pub auto_t0: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_proposals")]
    pub proposals: usize,
    #[serde(default = "default_eps")]
    pub eps_eq: f64,
    #[serde(default = "default_init")]
    pub init: Init,
    #[serde(default)]
    pub loop_distance: LoopDistance,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Single-objective config with every other field at its default.
    pub fn new(objective: &str, n_out: usize, n_in: usize) -> Self {
        RunConfig {
            objective: Some(objective.to_string()),
            constants: Constants::default(),
            constraints: ConstraintConfig::default(),
            players: Vec::new(),
            n_out,
            n_in,
            backend: default_backend(),
            mode: default_mode(),
            t0: default_t0(),
            auto_t0: false,
            alpha: default_alpha(),
            max_iterations: default_iterations(),
            proposals: default_proposals(),
            eps_eq: default_eps(),
            init: default_init(),
            loop_distance: LoopDistance::Heuristic,
            trials: 1,
            workers: 1,
            master_seed: 0,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn player_configs(&self) -> Result<Vec<PlayerConfig>> {
        match (&self.objective, self.players.is_empty()) {
            (Some(_), false) => Err(Error::Config("give either `objective` or `players`, not both".into())),
            (None, true) => Err(Error::Config("no objective or players given".into())),
            (None, false) => Ok(self.players.clone()),
            (Some(name), true) => Ok(vec![PlayerConfig {
                objective: name.clone(),
                constants: self.constants,
                constraints: self.constraints.clone(),
            }]),
        }
    }

    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.game_config(registry, 0)?.validate()
    }

    pub fn game_config(&self, registry: &Registry, seed: u64) -> Result<GameConfig> {
        let players = self
            .player_configs()?
            .iter()
            .map(|p| {
                Ok(Player {
                    objective: registry.resolve(&p.objective, p.constants)?,
                    constraints: p.constraints.resolve(self.n_in, self.n_out)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = GameConfig::new(self.n_out, self.n_in, players);
        cfg.mode = self.mode;
        cfg.t0 = self.t0;
        cfg.auto_t0 = self.auto_t0;
        cfg.alpha = self.alpha;
        cfg.max_iterations = self.max_iterations;
        cfg.proposals = self.proposals;
        cfg.eps_eq = self.eps_eq;
        cfg.seed = seed;
        cfg.backend = self.backend;
        cfg.loop_distance = self.loop_distance;
        cfg.init = self.init;
        Ok(cfg)
    }

    /// The fields that determine results; `workers` and `out` are dropped.
    fn result_echo(&self) -> RunConfig {
        RunConfig {
            workers: 1,
            out: None,
            ..self.clone()
        }
    }
}

/// Seed of trial `index`: first output of stream `index` of a ChaCha8
/// generator seeded with `master`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub d_certainty: Certainty,
    pub backend: Backend,
    pub reward: f64,
    pub rewards: Vec<f64>,
    pub max_degree: usize,
    pub avg_degree: f64,
    pub edge_count: usize,
    /// Record index after which this graph was current; `None` for the
    /// initial graph.
    pub iteration: Option<usize>,
    pub graph: Graph,
}

impl CodeReport {
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

/// Re-derives the code of `g` at the strongest affordable certainty and
/// scores it with the players of `cfg`.
pub fn verified_report(cfg: &GameConfig, g: &Graph, iteration: Option<usize>) -> Result<CodeReport> {
    let code = GraphCode::build(g, cfg.backend)?.verified(VERIFY_BUDGET)?;
    let metrics = CodeMetrics::new(&code, g);
    let rewards: Vec<f64> = cfg.players.iter().map(|p| p.objective.evaluate(&metrics)).collect();
    Ok(CodeReport {
        n: code.n,
        k: code.k,
        d: code.d,
        d_certainty: code.certainty,
        backend: code.backend,
        reward: rewards.iter().sum(),
        rewards,
        max_degree: metrics.graph.max_degree,
        avg_degree: metrics.graph.avg_degree,
        edge_count: metrics.graph.edge_count,
        iteration,
        graph: g.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    /// Best visited graph: the higher verified reward of the in-loop reward
    /// maximum and the final graph.
    pub best: CodeReport,
    pub final_code: CodeReport,
    pub iterations: usize,
    pub accepted: usize,
    pub equilibrium: EquilibriumVerdict,
    pub phases: Vec<Phase>,
}

pub fn summarize_trial(cfg: &GameConfig, trial: usize, traj: &GameTrajectory) -> Result<TrialSummary> {
    let graphs = replay_graphs(&traj.initial_graph, &traj.records)?;
    let mut arg: Option<usize> = None;
    let mut top = traj.initial.total_reward;
    for (i, r) in traj.records.iter().enumerate() {
        if r.total_reward > top {
            top = r.total_reward;
            arg = Some(i);
        }
    }
    let peak_graph = arg.map_or(&traj.initial_graph, |i| &graphs[i]);
    let peak = verified_report(cfg, peak_graph, arg)?;
    let final_code = verified_report(cfg, &traj.final_graph, traj.records.len().checked_sub(1))?;
    let best = if final_code.reward > peak.reward {
        final_code.clone()
    } else {
        peak
    };
    Ok(TrialSummary {
        trial,
        seed: cfg.seed,
        best,
        final_code,
        iterations: traj.records.len(),
        accepted: traj.records.iter().filter(|r| r.accepted).count(),
        equilibrium: traj.equilibrium,
        phases: traj.phases.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumStats {
    pub verified: usize,
    pub trials: usize,
    pub mean_max_unilateral_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub rate: f64,
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub source: String,
}

/// Nondominated points over (rate up, d up), sorted by rate then d.
/// Duplicates keep their first occurrence.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let dominated = |p: &ParetoPoint| {
        points
            .iter()
            .any(|q| q.rate >= p.rate && q.d >= p.d && (q.rate > p.rate || q.d > p.d))
    };
    let mut front: Vec<ParetoPoint> = Vec::new();
    for p in points {
        if !dominated(p) && !front.iter().any(|q| q.rate == p.rate && q.d == p.d) {
            front.push(p.clone());
        }
    }
    front.sort_by(|a, b| a.rate.total_cmp(&b.rate).then(a.d.cmp(&b.d)));
    front
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub trials: Vec<TrialSummary>,
    pub best_trial: usize,
    pub best: CodeReport,
    pub equilibrium: EquilibriumStats,
    pub pareto: Vec<ParetoPoint>,
}

impl RunSummary {
    pub fn pareto_points(&self) -> Vec<ParetoPoint> {
        self.trials
            .iter()
            .map(|t| ParetoPoint {
                rate: t.best.rate(),
                d: t.best.d,
                n: t.best.n,
                k: t.best.k,
                source: format!("trial {}", t.trial),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub trial_seconds: Vec<f64>,
}

pub struct DiscoverOutput {
    pub summary: RunSummary,
    pub trajectories: Vec<GameTrajectory>,
    pub timing: Timing,
}

pub fn certainty_label(c: Certainty) -> String {
    match c {
        Certainty::Exact => "exact".into(),
        Certainty::LowerBoundedBy(w) => format!(">={w}"),
        Certainty::Heuristic => "heuristic".into(),
    }
}

/// Runs `cfg.trials` independent games on `cfg.workers` threads. Results
/// depend only on the config and `master_seed`.
pub fn discover(cfg: &RunConfig, registry: &Registry) -> Result<DiscoverOutput> {
    cfg.validate(registry)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<(TrialSummary, GameTrajectory, f64)>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let t = Instant::now();
                let game = cfg.game_config(registry, trial_seed(cfg.master_seed, i))?;
                let traj = run_game(&game)?;
                let summary = summarize_trial(&game, i, &traj)?;
                Ok((summary, traj, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut trajectories = Vec::with_capacity(cfg.trials);
    let mut trial_seconds = Vec::with_capacity(cfg.trials);
    for r in results {
        let (s, t, secs) = r?;
        trials.push(s);
        trajectories.push(t);
        trial_seconds.push(secs);
    }
    let mut best_trial = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.best.reward > trials[best_trial].best.reward {
            best_trial = i;
        }
    }
    let verified = trials.iter().filter(|t| t.equilibrium.verified).count();
    let mean_gain = trials.iter().map(|t| t.equilibrium.max_unilateral_gain).sum::<f64>() / trials.len() as f64;
    let mut summary = RunSummary {
        config: cfg.result_echo(),
        best: trials[best_trial].best.clone(),
        best_trial,
        equilibrium: EquilibriumStats {
            verified,
            trials: trials.len(),
            mean_max_unilateral_gain: mean_gain,
        },
        trials,
        pareto: Vec::new(),
    };
    summary.pareto = pareto_front(&summary.pareto_points());
    Ok(DiscoverOutput {
        summary,
        trajectories,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            trial_seconds,
        },
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn csv_string(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w).expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

pub fn summary_csv(summary: &RunSummary) -> String {
    csv_string(|w| {
        w.write_record([
            "trial",
            "seed",
            "n",
            "k",
            "d",
            "d_certainty",
            "reward",
            "max_degree",
            "avg_degree",
            "edges",
            "best_iteration",
            "final_d",
            "final_reward",
            "iterations",
            "equilibrium_verified",
            "max_unilateral_gain",
        ])?;
        for t in &summary.trials {
            let b = &t.best;
            w.write_record([
                t.trial.to_string(),
                t.seed.to_string(),
                b.n.to_string(),
                b.k.to_string(),
                b.d.to_string(),
                certainty_label(b.d_certainty),
                b.reward.to_string(),
                b.max_degree.to_string(),
                b.avg_degree.to_string(),
                b.edge_count.to_string(),
                b.iteration.map_or("initial".into(), |i| i.to_string()),
                t.final_code.d.to_string(),
                t.final_code.reward.to_string(),
                t.iterations.to_string(),
                t.equilibrium.verified.to_string(),
                t.equilibrium.max_unilateral_gain.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn pareto_csv(points: &[ParetoPoint]) -> String {
    csv_string(|w| {
        for p in points {
            w.serialize(p)?;
        }
        if points.is_empty() {
            w.write_record(["rate", "d", "n", "k", "source"])?;
        }
        Ok(())
    })
}

/// Writes `run.json`, `trial_<idx>.jsonl`, `summary.csv`, `summary.json`,
/// `pareto.csv` and `timing.json` into `dir`.
pub fn write_discover(dir: &Path, cfg: &RunConfig, out: &DiscoverOutput) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("run.json"), to_json(cfg))?;
    for (i, t) in out.trajectories.iter().enumerate() {
        write(&dir.join(format!("trial_{i}.jsonl")), t.to_jsonl())?;
    }
    write(&dir.join("summary.csv"), summary_csv(&out.summary))?;
    write(&dir.join("summary.json"), to_json(&out.summary))?;
    write(&dir.join("pareto.csv"), pareto_csv(&out.summary.pareto))?;
    write(&dir.join("timing.json"), to_json(&out.timing))
}

pub fn load_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Pareto front over the per-trial best codes of several runs.
pub fn pareto_from_summaries(paths: &[PathBuf]) -> Result<Vec<ParetoPoint>> {
    if paths.is_empty() {
        return Err(Error::Config("at least one summary file is required".into()));
    }
    let mut points = Vec::new();
    for p in paths {
        let s = load_summary(p)?;
        let tag = s.config.objective.clone().unwrap_or_else(|| "players".into());
        points.extend(s.pareto_points().into_iter().map(|mut pt| {
            pt.source = format!("{}:{tag}:{}", p.display(), pt.source);
            pt
        }));
    }
    Ok(pareto_front(&points))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: usize,
    pub d: usize,
    pub total_reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub iterations: usize,
    pub phases: Vec<Phase>,
    pub equilibrium: EquilibriumVerdict,
    pub final_code: crate::code::CodeParams,
    /// Whether re-evaluating every replayed graph reproduces the logged
    /// rewards and code parameters; `None` when an objective is not in the
    /// registry.
    pub replay_consistent: Option<bool>,
    pub series: Vec<SeriesPoint>,
}

pub fn analyze(traj: &GameTrajectory, registry: &Registry) -> Result<Analysis> {
    let replay_consistent = match traj.config.resolve(registry) {
        Ok(cfg) => {
            let graphs = replay_graphs(&traj.initial_graph, &traj.records)?;
            let mut ok = evaluate_graph(&cfg, &traj.initial_graph)? == traj.initial;
            for (g, r) in graphs.iter().zip(&traj.records) {
                let snap = evaluate_graph(&cfg, g)?;
                ok &= snap.rewards == r.per_player_rewards && snap.code == r.code;
            }
            ok &= graphs.last().unwrap_or(&traj.initial_graph) == &traj.final_graph;
            Some(ok)
        }
        Err(Error::Config(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Analysis {
        iterations: traj.records.len(),
        phases: traj.phases.clone(),
        equilibrium: traj.equilibrium,
        final_code: traj.final_state.code,
        replay_consistent,
        series: traj
            .records
            .iter()
            .map(|r| SeriesPoint {
                t: r.t,
                d: r.code.d,
                total_reward: r.total_reward,
            })
            .collect(),
    })
}

pub fn load_trajectory(path: &Path) -> Result<GameTrajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GameTrajectory::from_jsonl(&text)
}

pub fn series_csv(a: &Analysis) -> String {
    csv_string(|w| {
        w.write_record(["t", "d", "total_reward"])?;
        for p in &a.series {
            w.serialize((p.t, p.d, p.total_reward))?;
        }
        Ok(())
    })
}

pub fn write_analysis(dir: &Path, a: &Analysis) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("analysis.json"), to_json(a))?;
    write(&dir.join("series.csv"), series_csv(a))
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Graph::from_edge_list(&text)
}

/// Check matrix of a graph code or a named fixture.
pub fn check_matrix_from(graph: Option<&Graph>, backend: Backend, fixture: Option<&str>) -> Result<CheckMatrix> {
    match (graph, fixture) {
        (Some(g), None) => CheckMatrix::from_code(&GraphCode::build(g, backend)?),
        (None, Some(name)) => noise::fixture(name),
        _ => Err(Error::Config("give exactly one of a graph or a fixture".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    pub n: usize,
    pub k: usize,
    pub results: Vec<NoiseResult>,
    /// Least-squares slope of `ln eps_L` against `ln p`, when at least three
    /// points have failures.
    pub slope: Option<f64>,
}

/// Logical error rate at each `p`, point `i` seeded with
/// `trial_seed(seed, i)`.
pub fn simulate(cm: &CheckMatrix, p_grid: &[f64], trials: u64, seed: u64) -> Result<NoiseSweep> {
    let table = build_decoder_table(cm)?;
    let results = p_grid
        .iter()
        .enumerate()
        .map(|(i, &p)| estimate_logical_error_rate(&table, p, trials, trial_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let slope = noise::fit_threshold_slope(&results).ok();
    Ok(NoiseSweep {
        n: cm.n(),
        k: cm.k(),
        results,
        slope,
    })
}

pub fn noise_csv(results: &[NoiseResult]) -> String {
    csv_string(|w| {
        for r in results {
            w.serialize(r)?;
        }
        Ok(())
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub backend: Backend,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub d_certainty: Certainty,
    pub heuristic_d: usize,
    pub max_degree: usize,
}

pub fn distance_report(g: &Graph, backend: Backend, budget: u64) -> Result<DistanceReport> {
    let code = GraphCode::build(g, backend)?;
    let verified = code.verified(budget)?;
    Ok(DistanceReport {
        backend,
        n: verified.n,
        k: verified.k,
        d: verified.d,
        d_certainty: verified.certainty,
        heuristic_d: code.heuristic_distance(),
        max_degree: g.metrics(Scope::OutputsOnly).max_degree,
    })
}
