//! Reward formulas and strategy-space constraints.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::code::GraphCode;
use crate::error::{Error, Result};
use crate::f2::BitMatrix;
use crate::graph::{Graph, GraphMetrics, Scope};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Distance,
    Hardware,
    RateDistance,
    Cluster,
    SurfaceLike,
    Connectivity,
}

impl ObjectiveName {
    pub const ALL: [ObjectiveName; 6] = [
        ObjectiveName::Distance,
        ObjectiveName::Hardware,
        ObjectiveName::RateDistance,
        ObjectiveName::Cluster,
        ObjectiveName::SurfaceLike,
        ObjectiveName::Connectivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveName::Distance => "distance",
            ObjectiveName::Hardware => "hardware",
            ObjectiveName::RateDistance => "rate_distance",
            ObjectiveName::Cluster => "cluster",
            ObjectiveName::SurfaceLike => "surface_like",
            ObjectiveName::Connectivity => "connectivity",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.as_str() == name)
    }
}

/// Overridable constants of the distance objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    /// Bonus factor for a connected output graph.
    pub alpha_conn: f64,
    /// Edge-density penalty weight.
    pub beta: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            alpha_conn: 1.3,
            beta: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: ObjectiveName,
    #[serde(default)]
    pub constants: Constants,
}

impl ObjectiveSpec {
    pub fn new(name: ObjectiveName) -> Self {
        Self {
            name,
            constants: Constants::default(),
        }
    }
}

/// Inputs of every reward formula: code parameters plus statistics of the
/// output graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeMetrics {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub graph: GraphMetrics,
}

impl CodeMetrics {
    pub fn new(code: &GraphCode, graph: &Graph) -> Self {
        Self::with_connectivity(code, graph, true)
    }

    /// Skips the max-flow connectivity fields (left at 0) when
    /// `connectivity` is false.
    pub fn with_connectivity(code: &GraphCode, graph: &Graph, connectivity: bool) -> Self {
        Self {
            n: code.n,
            k: code.k,
            d: code.d,
            graph: graph.metrics_with(Scope::OutputsOnly, connectivity),
        }
    }
}

pub fn evaluate(spec: &ObjectiveSpec, m: &CodeMetrics) -> f64 {
    let d = m.d as f64;
    let n = m.n as f64;
    let rate = m.k as f64 / n;
    let g = &m.graph;
    match spec.name {
        ObjectiveName::Distance => {
            let alpha = if g.connected { spec.constants.alpha_conn } else { 1.0 };
            d.powi(3) * (1.0 + rate) * alpha - spec.constants.beta * g.edge_count as f64 / (n * n)
        }
        ObjectiveName::Hardware => {
            d.powf(2.5) * (1.0 + 0.5 * rate) - 5.0 * g.max_degree as f64 - 2.0 * g.avg_degree
        }
        ObjectiveName::RateDistance => {
            let band = if (0.2..=0.5).contains(&rate) { 1.5 } else { 1.0 };
            10.0 * m.k as f64 * d * band
        }
        ObjectiveName::Cluster => d.powi(2) * (1.0 + rate) * (-g.degree_variance / 4.0).exp(),
        ObjectiveName::SurfaceLike => {
            d.powf(2.5) * (1.0 + 0.3 * rate) - 3.0 * (g.avg_degree - 4.0).abs()
        }
        ObjectiveName::Connectivity => {
            30.0 * (g.vertex_connectivity + g.edge_connectivity) as f64 + d.powf(2.5)
        }
    }
}

pub type RewardFn = Arc<dyn Fn(&CodeMetrics) -> f64 + Send + Sync>;

/// A player's reward: one of the built-in formulas or a registered closure.
#[derive(Clone)]
pub enum Objective {
    Builtin(ObjectiveSpec),
    Custom { name: String, reward: RewardFn },
}

impl Objective {
    pub fn builtin(name: ObjectiveName) -> Self {
        Objective::Builtin(ObjectiveSpec::new(name))
    }

    pub fn custom(name: impl Into<String>, reward: impl Fn(&CodeMetrics) -> f64 + Send + Sync + 'static) -> Self {
        Objective::Custom {
            name: name.into(),
            reward: Arc::new(reward),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Objective::Builtin(spec) => spec.name.as_str(),
            Objective::Custom { name, .. } => name,
        }
    }

    pub fn constants(&self) -> Option<Constants> {
        match self {
            Objective::Builtin(spec) => Some(spec.constants),
            Objective::Custom { .. } => None,
        }
    }

    /// Whether the reward may read vertex or edge connectivity. Custom
    /// closures are assumed to.
    pub fn needs_connectivity(&self) -> bool {
        match self {
            Objective::Builtin(spec) => spec.name == ObjectiveName::Connectivity,
            Objective::Custom { .. } => true,
        }
    }

    pub fn evaluate(&self, m: &CodeMetrics) -> f64 {
        match self {
            Objective::Builtin(spec) => evaluate(spec, m),
            Objective::Custom { reward, .. } => reward(m),
        }
    }
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Builtin(spec) => write!(f, "{spec:?}"),
            Objective::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Name-to-objective lookup. Holds the six built-ins plus any closures
/// registered at runtime; `edge_count` (reward = number of output edges) is
/// pre-registered as a toy objective.
#[derive(Clone)]
pub struct Registry {
    custom: BTreeMap<String, RewardFn>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry {
            custom: BTreeMap::new(),
        };
        r.register("edge_count", |m| m.graph.edge_count as f64);
        r
    }
}

impl Registry {
    pub fn register(&mut self, name: impl Into<String>, reward: impl Fn(&CodeMetrics) -> f64 + Send + Sync + 'static) {
        self.custom.insert(name.into(), Arc::new(reward));
    }

    pub fn resolve(&self, name: &str, constants: Constants) -> Result<Objective> {
        if let Some(builtin) = ObjectiveName::parse(name) {
            return Ok(Objective::Builtin(ObjectiveSpec {
                name: builtin,
                constants,
            }));
        }
        self.custom
            .get(name)
            .map(|reward| Objective::Custom {
                name: name.to_string(),
                reward: reward.clone(),
            })
            .ok_or_else(|| Error::Config(format!("unknown objective {name:?}")))
    }

    pub fn names(&self) -> Vec<String> {
        ObjectiveName::ALL
            .iter()
            .map(|o| o.as_str().to_string())
            .chain(self.custom.keys().cloned())
            .collect()
    }
}

/// Symmetric mask of vertex pairs that may carry an edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMask(BitMatrix);

impl EdgeMask {
    pub fn from_pairs(n_vertices: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = BitMatrix::zeros(n_vertices, n_vertices);
        for (u, v) in pairs {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::VertexOutOfRange(u.max(v)));
            }
            m.set(u, v, true);
            m.set(v, u, true);
        }
        Ok(Self(m))
    }

    /// Outputs laid out row-major on a `rows x cols` grid with
    /// nearest-neighbour couplings; every input-output pair stays allowed.
    pub fn output_grid(n_in: usize, rows: usize, cols: usize) -> Self {
        let n = n_in + rows * cols;
        let mut m = BitMatrix::zeros(n, n);
        let mut allow = |u: usize, v: usize| {
            m.set(u, v, true);
            m.set(v, u, true);
        };
        for r in 0..rows {
            for c in 0..cols {
                let v = n_in + r * cols + c;
                if c + 1 < cols {
                    allow(v, v + 1);
                }
                if r + 1 < rows {
                    allow(v, v + cols);
                }
                for i in 0..n_in {
                    allow(i, v);
                }
            }
        }
        Self(m)
    }

    pub fn allows(&self, u: usize, v: usize) -> bool {
        u < self.0.n_rows() && v < self.0.n_rows() && self.0.get(u, v)
    }

    pub fn n_vertices(&self) -> usize {
        self.0.n_rows()
    }

    /// Allowed pairs `(u, v)` with `u < v`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n_vertices())
            .flat_map(|u| self.0.row(u).ones().filter(move |&v| v > u).map(move |v| (u, v)))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    /// Cap on the maximum degree of the output graph.
    pub max_degree: Option<usize>,
    pub allowed_edges: Option<EdgeMask>,
}

impl ConstraintSet {
    pub fn is_unconstrained(&self) -> bool {
        self.max_degree.is_none() && self.allowed_edges.is_none()
    }

    /// Whether adding edge `(u, v)` to `g` keeps it inside the constraints,
    /// assuming `g` already is.
    pub fn allows_addition(&self, g: &Graph, u: usize, v: usize) -> bool {
        if let Some(mask) = &self.allowed_edges {
            if !mask.allows(u, v) {
                return false;
            }
        }
        if let Some(cap) = self.max_degree {
            let both_outputs = !g.is_input(u) && !g.is_input(v);
            if both_outputs && (g.output_degree(u) >= cap || g.output_degree(v) >= cap) {
                return false;
            }
        }
        true
    }
}

/// Serializable form of a [`ConstraintSet`].
///
/// `allowed_edges` lists permitted vertex pairs; `output_grid: [rows, cols]`
/// instead permits nearest-neighbour pairs of outputs on a grid plus every
/// input-output pair. At most one of the two may be set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allowed_edges: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_grid: Option<(usize, usize)>,
}

impl ConstraintConfig {
    pub fn resolve(&self, n_in: usize, n_out: usize) -> Result<ConstraintSet> {
        let n = n_in + n_out;
        let allowed_edges = match (&self.allowed_edges, self.output_grid) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "allowed_edges and output_grid are mutually exclusive".into(),
                ))
            }
            (Some(pairs), None) => Some(EdgeMask::from_pairs(n, pairs.iter().copied())?),
            (None, Some((rows, cols))) => {
                if rows * cols != n_out {
                    return Err(Error::Config(format!(
                        "output grid {rows}x{cols} does not hold {n_out} outputs"
                    )));
                }
                Some(EdgeMask::output_grid(n_in, rows, cols))
            }
            (None, None) => None,
        };
        Ok(ConstraintSet {
            max_degree: self.max_degree,
            allowed_edges,
        })
    }
}

impl From<&ConstraintSet> for ConstraintConfig {
    fn from(cs: &ConstraintSet) -> Self {
        ConstraintConfig {
            max_degree: cs.max_degree,
            allowed_edges: cs.allowed_edges.as_ref().map(EdgeMask::pairs),
            output_grid: None,
        }
    }
}

pub fn check_constraints(cs: &ConstraintSet, g: &Graph) -> bool {
    if let Some(cap) = cs.max_degree {
        if g.outputs().any(|v| g.output_degree(v) > cap) {
            return false;
        }
    }
    if let Some(mask) = &cs.allowed_edges {
        if g.edges().into_iter().any(|(u, v)| !mask.allows(u, v)) {
            return false;
        }
    }
    true
}
