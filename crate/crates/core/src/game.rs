//! Multi-player annealed best-response game over graphs.
//!
//! Each iteration one player samples a handful of legal graph edits, keeps
//! the one that helps its own objective most, and the edit is accepted by a
//! Metropolis test at temperature `T0 * alpha^t`. The run stops early once no
//! acting player can improve its reward by more than `eps_eq` with any
//! single legal edit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code::{Backend, CodeParams, GraphCode, VERIFY_BUDGET};
use crate::error::{Error, Result};
use crate::graph::{random_graph_with, Graph, GraphAction};
use crate::objectives::{check_constraints, CodeMetrics, ConstraintConfig, ConstraintSet, Constants, Objective, Registry};
use crate::phases::{detect_phases, Phase};

/// Graphs up to this many vertices get an exhaustive equilibrium check.
pub const EXHAUSTIVE_CHECK_MAX_VERTICES: usize = 30;
/// Sampled equilibrium checks draw `proposals * SAMPLED_CHECK_FACTOR` actions.
pub const SAMPLED_CHECK_FACTOR: usize = 16;

#[derive(Clone, Debug)]
pub struct Player {
    pub objective: Objective,
    pub constraints: ConstraintSet,
}

impl Player {
    pub fn new(objective: Objective) -> Self {
        Self {
            objective,
            constraints: ConstraintSet::default(),
        }
    }

    pub fn with_constraints(mut self, constraints: ConstraintSet) -> Self {
        self.constraints = constraints;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Player 0 acts every turn; acceptance uses its own reward change.
    SinglePlayer,
    /// Players take turns; acceptance uses the change in total reward.
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Edgeless,
    Random { edge_prob: f64 },
}

/// How codes are scored inside the game loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopDistance {
    /// The backend's degree-based estimate.
    #[default]
    Heuristic,
    /// [`GraphCode::verified`] with [`VERIFY_BUDGET`].
    Verified,
}

#[derive(Clone, Debug)]
pub struct GameConfig {
    pub n_out: usize,
    pub n_in: usize,
    pub players: Vec<Player>,
    pub mode: Mode,
    pub t0: f64,
    /// Replace `t0` by `0.1 * |initial reward| + 1`.
    pub auto_t0: bool,
    pub alpha: f64,
    pub max_iterations: usize,
    pub proposals: usize,
    pub eps_eq: f64,
    pub seed: u64,
    pub backend: Backend,
    pub loop_distance: LoopDistance,
    pub init: Init,
    /// Start from this graph instead of sampling one from `init`.
    pub initial_graph: Option<Graph>,
}

impl GameConfig {
    pub fn new(n_out: usize, n_in: usize, players: Vec<Player>) -> Self {
        Self {
            n_out,
            n_in,
            players,
            mode: Mode::SinglePlayer,
            t0: 1.0,
            auto_t0: false,
            alpha: 0.95,
            max_iterations: 40,
            proposals: 32,
            eps_eq: 1e-6,
            seed: 0,
            backend: Backend::InputOutput,
            loop_distance: LoopDistance::Heuristic,
            init: Init::Random { edge_prob: 0.2 },
            initial_graph: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.players.is_empty() {
            return bad("at least one player is required");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.proposals == 0 {
            return bad("proposals must be at least 1");
        }
        if self.eps_eq.is_nan() || self.eps_eq <= 0.0 {
            return bad("eps_eq must be positive");
        }
        if self.t0.is_nan() || self.t0 < 0.0 {
            return bad("t0 must be nonnegative");
        }
        if self.n_out == 0 {
            return Err(Error::NoOutputs);
        }
        if self.backend == Backend::InputOutput && self.n_in == 0 {
            return Err(Error::NoInputs);
        }
        if let Init::Random { edge_prob } = self.init {
            if !(0.0..=1.0).contains(&edge_prob) {
                return bad("edge_prob must lie in [0, 1]");
            }
        }
        if let Some(g) = &self.initial_graph {
            if g.n_inputs() != self.n_in || g.n_outputs() != self.n_out {
                return bad("initial graph does not match n_in / n_out");
            }
        }
        Ok(())
    }

    fn acting_players(&self) -> std::ops::Range<usize> {
        match self.mode {
            Mode::SinglePlayer => 0..1,
            Mode::RoundRobin => 0..self.players.len(),
        }
    }

    fn feasible(&self, g: &Graph) -> bool {
        self.players.iter().all(|p| check_constraints(&p.constraints, g))
    }

    pub fn echo(&self) -> GameConfigEcho {
        GameConfigEcho {
            n_out: self.n_out,
            n_in: self.n_in,
            players: self
                .players
                .iter()
                .map(|p| PlayerConfig {
                    objective: p.objective.name().to_string(),
                    constants: p.objective.constants().unwrap_or_default(),
                    constraints: ConstraintConfig::from(&p.constraints),
                })
                .collect(),
            mode: self.mode,
            t0: self.t0,
            auto_t0: self.auto_t0,
            alpha: self.alpha,
            max_iterations: self.max_iterations,
            proposals: self.proposals,
            eps_eq: self.eps_eq,
            seed: self.seed,
            backend: self.backend,
            loop_distance: self.loop_distance,
            init: self.init,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerConfig {
    pub objective: String,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub constraints: ConstraintConfig,
}

/// Serializable echo of a [`GameConfig`]; objectives are stored by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfigEcho {
    pub n_out: usize,
    pub n_in: usize,
    pub players: Vec<PlayerConfig>,
    pub mode: Mode,
    pub t0: f64,
    pub auto_t0: bool,
    pub alpha: f64,
    pub max_iterations: usize,
    pub proposals: usize,
    pub eps_eq: f64,
    pub seed: u64,
    pub backend: Backend,
    #[serde(default)]
    pub loop_distance: LoopDistance,
    pub init: Init,
}

impl GameConfigEcho {
    pub fn resolve(&self, registry: &Registry) -> Result<GameConfig> {
        let players = self
            .players
            .iter()
            .map(|p| {
                Ok(Player {
                    objective: registry.resolve(&p.objective, p.constants)?,
                    constraints: p.constraints.resolve(self.n_in, self.n_out)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GameConfig {
            n_out: self.n_out,
            n_in: self.n_in,
            players,
            mode: self.mode,
            t0: self.t0,
            auto_t0: self.auto_t0,
            alpha: self.alpha,
            max_iterations: self.max_iterations,
            proposals: self.proposals,
            eps_eq: self.eps_eq,
            seed: self.seed,
            backend: self.backend,
            loop_distance: self.loop_distance,
            init: self.init,
            initial_graph: None,
        })
    }
}

/// Rewards and code parameters of one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub rewards: Vec<f64>,
    pub total_reward: f64,
    pub code: CodeParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub acting_player: usize,
    pub action: GraphAction,
    /// The acting player's own reward change for the proposed action.
    pub proposal_gain: f64,
    pub accepted: bool,
    /// Rewards after the accept/reject decision.
    pub per_player_rewards: Vec<f64>,
    pub total_reward: f64,
    pub code: CodeParams,
    pub temperature: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumVerdict {
    pub verified: bool,
    /// Largest own-reward gain any acting player can get from one legal
    /// action; 0 when no legal action exists.
    pub max_unilateral_gain: f64,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameTrajectory {
    pub config: GameConfigEcho,
    /// Temperature at `t = 0` after any auto-scaling.
    pub effective_t0: f64,
    pub initial_graph: Graph,
    pub initial: Snapshot,
    pub records: Vec<IterationRecord>,
    pub final_graph: Graph,
    pub final_state: Snapshot,
    pub equilibrium: EquilibriumVerdict,
    pub phases: Vec<Phase>,
}

/// `T0 * alpha^t`.
pub fn temperature(t0: f64, alpha: f64, t: usize) -> f64 {
    t0 * alpha.powi(t as i32)
}

/// Accept improvements always; otherwise accept with `exp(delta / T)`.
/// At `T = 0` nonpositive changes are rejected.
pub fn metropolis_accept<R: Rng>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta > 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < (delta / temperature).exp()
}

fn sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// Shared per-run machinery: candidate universe and state evaluation.
struct Arena<'a> {
    cfg: &'a GameConfig,
    pairs: Vec<(usize, usize)>,
    connectivity: bool,
}

#[derive(Clone)]
struct State {
    graph: Graph,
    snapshot: Snapshot,
}

impl<'a> Arena<'a> {
    fn new(cfg: &'a GameConfig) -> Self {
        let n = cfg.n_in + cfg.n_out;
        let pairs = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| v >= cfg.n_in || u >= cfg.n_in)
            .collect();
        let connectivity = cfg.players.iter().any(|p| p.objective.needs_connectivity());
        Self {
            cfg,
            pairs,
            connectivity,
        }
    }

    fn universe(&self) -> usize {
        self.pairs.len() + self.cfg.n_in + self.cfg.n_out
    }

    fn action_at(&self, idx: usize) -> GraphAction {
        match self.pairs.get(idx) {
            Some(&(u, v)) => GraphAction::ToggleEdge(u, v),
            None => GraphAction::LocalComplement(idx - self.pairs.len()),
        }
    }

    fn is_legal(&self, g: &Graph, action: GraphAction) -> bool {
        match action {
            GraphAction::ToggleEdge(u, v) => {
                g.has_edge(u, v)
                    || self
                        .cfg
                        .players
                        .iter()
                        .all(|p| p.constraints.allows_addition(g, u, v))
            }
            GraphAction::LocalComplement(v) => {
                if g.local_complement_pairs(v).is_empty() {
                    return false;
                }
                if self.cfg.players.iter().all(|p| p.constraints.is_unconstrained()) {
                    return true;
                }
                g.apply(action).is_ok_and(|h| self.cfg.feasible(&h))
            }
        }
    }

    fn legal_actions(&self, g: &Graph) -> Vec<GraphAction> {
        (0..self.universe())
            .map(|i| self.action_at(i))
            .filter(|&a| self.is_legal(g, a))
            .collect()
    }

    /// `count` legal actions drawn uniformly with replacement, by rejection
    /// from the full candidate universe; falls back to enumeration when
    /// legal actions are rare.
    fn sample_legal<R: Rng>(&self, g: &Graph, count: usize, rng: &mut R) -> Result<Vec<GraphAction>> {
        let universe = self.universe();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < 64 * count {
            attempts += 1;
            let a = self.action_at(rng.gen_range(0..universe));
            if self.is_legal(g, a) {
                out.push(a);
            }
        }
        if out.len() < count {
            let legal = self.legal_actions(g);
            if legal.is_empty() {
                return Err(Error::NoLegalAction);
            }
            while out.len() < count {
                out.push(legal[rng.gen_range(0..legal.len())]);
            }
        }
        Ok(out)
    }

    fn evaluate(&self, graph: Graph) -> Result<State> {
        let mut code = GraphCode::build(&graph, self.cfg.backend)?;
        if self.cfg.loop_distance == LoopDistance::Verified {
            code = code.verified(VERIFY_BUDGET)?;
        }
        let metrics = CodeMetrics::with_connectivity(&code, &graph, self.connectivity);
        let rewards: Vec<f64> = self
            .cfg
            .players
            .iter()
            .map(|p| p.objective.evaluate(&metrics))
            .collect();
        Ok(State {
            graph,
            snapshot: Snapshot {
                total_reward: sum(&rewards),
                rewards,
                code: code.params(),
            },
        })
    }

    fn initial_graph(&self, rng: &mut ChaCha8Rng) -> Result<Graph> {
        let cfg = self.cfg;
        if let Some(g) = &cfg.initial_graph {
            if !cfg.feasible(g) {
                return Err(Error::Config("initial graph violates the constraints".into()));
            }
            return Ok(g.clone());
        }
        match cfg.init {
            Init::Edgeless => Graph::new(cfg.n_out, cfg.n_in),
            Init::Random { edge_prob } => random_graph_with(cfg.n_out, cfg.n_in, edge_prob, rng, |g, u, v| {
                cfg.players.iter().all(|p| p.constraints.allows_addition(g, u, v))
            }),
        }
    }

    /// Best own-reward candidate among sampled legal actions; ties go to the
    /// first sampled.
    fn propose<R: Rng>(&self, current: &State, player: usize, rng: &mut R) -> Result<(GraphAction, State, f64)> {
        let actions = self.sample_legal(&current.graph, self.cfg.proposals, rng)?;
        let base = current.snapshot.rewards[player];
        let mut best: Option<(GraphAction, State, f64)> = None;
        for a in actions {
            let cand = self.evaluate(current.graph.apply(a)?)?;
            let gain = cand.snapshot.rewards[player] - base;
            if best.as_ref().is_none_or(|(_, _, g)| gain > *g) {
                best = Some((a, cand, gain));
            }
        }
        Ok(best.expect("at least one proposal"))
    }

    fn equilibrium<R: Rng>(&self, current: &State, exhaustive: bool, rng: &mut R) -> Result<EquilibriumVerdict> {
        let actions = if exhaustive {
            self.legal_actions(&current.graph)
        } else {
            match self.sample_legal(&current.graph, self.cfg.proposals * SAMPLED_CHECK_FACTOR, rng) {
                Ok(a) => a,
                Err(Error::NoLegalAction) => Vec::new(),
                Err(e) => return Err(e),
            }
        };
        let mut max_gain: Option<f64> = None;
        for a in actions {
            let cand = self.evaluate(current.graph.apply(a)?)?;
            for p in self.cfg.acting_players() {
                let gain = cand.snapshot.rewards[p] - current.snapshot.rewards[p];
                max_gain = Some(max_gain.map_or(gain, |m| m.max(gain)));
            }
        }
        let max_unilateral_gain = max_gain.unwrap_or(0.0);
        Ok(EquilibriumVerdict {
            verified: max_unilateral_gain < self.cfg.eps_eq,
            max_unilateral_gain,
            exhaustive,
        })
    }
}

/// Checks whether any acting player of `cfg` can gain at least `eps_eq` by a
/// single legal action on `g`. Exhaustive mode enumerates every legal
/// action; sampled mode draws `proposals * 16` of them using `seed`.
pub fn is_nash_equilibrium(cfg: &GameConfig, g: &Graph, exhaustive: bool, seed: u64) -> Result<EquilibriumVerdict> {
    cfg.validate()?;
    let arena = Arena::new(cfg);
    let state = arena.evaluate(g.clone())?;
    arena.equilibrium(&state, exhaustive, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Legal actions on `g` for the players of `cfg`, in canonical order
/// (toggles by pair, then local complementations by vertex).
pub fn legal_actions(cfg: &GameConfig, g: &Graph) -> Vec<GraphAction> {
    Arena::new(cfg).legal_actions(g)
}

/// Best-of-sample proposal for `player` on `g`: returns the action and the
/// player's reward change.
pub fn propose_action<R: Rng>(cfg: &GameConfig, g: &Graph, player: usize, rng: &mut R) -> Result<(GraphAction, f64)> {
    let arena = Arena::new(cfg);
    let state = arena.evaluate(g.clone())?;
    let (a, _, gain) = arena.propose(&state, player, rng)?;
    Ok((a, gain))
}

/// Re-evaluates `g` under the players of `cfg`.
pub fn evaluate_graph(cfg: &GameConfig, g: &Graph) -> Result<Snapshot> {
    Ok(Arena::new(cfg).evaluate(g.clone())?.snapshot)
}

pub fn run_game(cfg: &GameConfig) -> Result<GameTrajectory> {
    cfg.validate()?;
    let arena = Arena::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial_graph = arena.initial_graph(&mut rng)?;
    let mut state = arena.evaluate(initial_graph.clone())?;
    let initial = state.snapshot.clone();

    let currency = |s: &Snapshot| match cfg.mode {
        Mode::SinglePlayer => s.rewards[0],
        Mode::RoundRobin => s.total_reward,
    };
    let t0 = if cfg.auto_t0 {
        0.1 * currency(&initial).abs() + 1.0
    } else {
        cfg.t0
    };
    let exhaustive = cfg.n_in + cfg.n_out <= EXHAUSTIVE_CHECK_MAX_VERTICES;

    let mut records = Vec::new();
    let mut verdict = None;
    for t in 0..cfg.max_iterations {
        let player = match cfg.mode {
            Mode::SinglePlayer => 0,
            Mode::RoundRobin => t % cfg.players.len(),
        };
        let temp = temperature(t0, cfg.alpha, t);
        let (action, cand, gain) = match arena.propose(&state, player, &mut rng) {
            Ok(p) => p,
            Err(Error::NoLegalAction) => break,
            Err(e) => return Err(e),
        };
        let delta = currency(&cand.snapshot) - currency(&state.snapshot);
        let accepted = metropolis_accept(delta, temp, &mut rng);
        if accepted {
            state = cand;
        }
        records.push(IterationRecord {
            t,
            acting_player: player,
            action,
            proposal_gain: gain,
            accepted,
            per_player_rewards: state.snapshot.rewards.clone(),
            total_reward: state.snapshot.total_reward,
            code: state.snapshot.code,
            temperature: temp,
        });
        if gain < cfg.eps_eq {
            let v = arena.equilibrium(&state, exhaustive, &mut rng)?;
            if v.verified {
                verdict = Some(v);
                break;
            }
        }
    }
    let equilibrium = match verdict {
        Some(v) => v,
        None => arena.equilibrium(&state, exhaustive, &mut rng)?,
    };
    let series: Vec<f64> = records.iter().map(|r| r.total_reward).collect();
    let phases = detect_phases(&series).unwrap_or_default();
    Ok(GameTrajectory {
        config: cfg.echo(),
        effective_t0: t0,
        initial_graph,
        initial,
        records,
        final_graph: state.graph,
        final_state: state.snapshot,
        equilibrium,
        phases,
    })
}

/// Graph after each record, replaying accepted actions from the start.
pub fn replay_graphs(initial: &Graph, records: &[IterationRecord]) -> Result<Vec<Graph>> {
    let mut g = initial.clone();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if r.accepted {
            g = g.apply(r.action)?;
        }
        out.push(g.clone());
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Start {
        config: GameConfigEcho,
        effective_t0: f64,
        initial_graph: Graph,
        initial: Snapshot,
    },
    Iteration(IterationRecord),
    Summary {
        final_graph: Graph,
        final_state: Snapshot,
        equilibrium: EquilibriumVerdict,
        phases: Vec<Phase>,
    },
}

impl GameTrajectory {
    /// One JSON object per line: a `start` header, one `iteration` line per
    /// record, and a closing `summary`.
    pub fn to_jsonl(&self) -> String {
        let mut lines = Vec::with_capacity(self.records.len() + 2);
        lines.push(Line::Start {
            config: self.config.clone(),
            effective_t0: self.effective_t0,
            initial_graph: self.initial_graph.clone(),
            initial: self.initial.clone(),
        });
        lines.extend(self.records.iter().cloned().map(Line::Iteration));
        lines.push(Line::Summary {
            final_graph: self.final_graph.clone(),
            final_state: self.final_state.clone(),
            equilibrium: self.equilibrium,
            phases: self.phases.clone(),
        });
        let mut out = String::new();
        for l in &lines {
            out.push_str(&serde_json::to_string(l).expect("trajectory serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<GameTrajectory> {
        let corrupt = |m: String| Error::Trajectory(m);
        let mut start = None;
        let mut records = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: Line = serde_json::from_str(line).map_err(|e| corrupt(format!("line {}: {e}", i + 1)))?;
            match parsed {
                Line::Start { .. } if start.is_some() => return Err(corrupt("duplicate start line".into())),
                Line::Start {
                    config,
                    effective_t0,
                    initial_graph,
                    initial,
                } => start = Some((config, effective_t0, initial_graph, initial)),
                Line::Iteration(r) => {
                    if start.is_none() || summary.is_some() {
                        return Err(corrupt(format!("line {}: iteration outside the run", i + 1)));
                    }
                    if records.last().is_some_and(|p: &IterationRecord| p.t >= r.t) {
                        return Err(corrupt(format!("line {}: records out of order", i + 1)));
                    }
                    records.push(r);
                }
                Line::Summary {
                    final_graph,
                    final_state,
                    equilibrium,
                    phases,
                } => summary = Some((final_graph, final_state, equilibrium, phases)),
            }
        }
        let (config, effective_t0, initial_graph, initial) = start.ok_or_else(|| corrupt("missing start line".into()))?;
        let (final_graph, final_state, equilibrium, phases) = summary.ok_or_else(|| corrupt("missing summary line".into()))?;
        Ok(GameTrajectory {
            config,
            effective_t0,
            initial_graph,
            initial,
            records,
            final_graph,
            final_state,
            equilibrium,
            phases,
        })
    }
}
