//! Undirected graphs over F2 with an input/output vertex partition.
//!
//! Vertices `0..n_in` are inputs (logical seeds), `n_in..n_in + n_out` are
//! outputs (physical qubits). Input-input edges are never present.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connectivity;
use crate::error::{Error, Result};
use crate::f2::{BitMatrix, BitVec};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n_in: usize,
    n_out: usize,
    adj: BitMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphAction {
    ToggleEdge(usize, usize),
    LocalComplement(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    AllVertices,
    OutputsOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub max_degree: usize,
    pub min_degree: usize,
    pub avg_degree: f64,
    /// Population variance of the degree sequence.
    pub degree_variance: f64,
    pub edge_count: usize,
    pub connected: bool,
    pub vertex_connectivity: usize,
    pub edge_connectivity: usize,
}

impl Graph {
    /// Edgeless graph with `n_out` outputs and `n_in` inputs.
    pub fn new(n_out: usize, n_in: usize) -> Result<Self> {
        if n_out == 0 {
            return Err(Error::NoOutputs);
        }
        let n = n_in + n_out;
        Ok(Self {
            n_in,
            n_out,
            adj: BitMatrix::zeros(n, n),
        })
    }

    pub fn with_edges(
        n_out: usize,
        n_in: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut g = Self::new(n_out, n_in)?;
        for (u, v) in edges {
            g.check_pair(u, v)?;
            if g.has_edge(u, v) {
                return Err(Error::InvalidAction(format!("duplicate edge ({u}, {v})")));
            }
            g.toggle(u, v);
        }
        Ok(g)
    }

    #[inline]
    pub fn n_inputs(&self) -> usize {
        self.n_in
    }

    #[inline]
    pub fn n_outputs(&self) -> usize {
        self.n_out
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.n_in + self.n_out
    }

    #[inline]
    pub fn is_input(&self, v: usize) -> bool {
        v < self.n_in
    }

    pub fn outputs(&self) -> std::ops::Range<usize> {
        self.n_in..self.n_vertices()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj.get(u, v)
    }

    pub fn adjacency(&self) -> &BitMatrix {
        &self.adj
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj.row(v).ones()
    }

    pub fn neighborhood(&self, v: usize) -> &BitVec {
        self.adj.row(v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj.row(v).count_ones()
    }

    /// Degree counting output neighbours only.
    pub fn output_degree(&self, v: usize) -> usize {
        self.neighbors(v).filter(|&u| u >= self.n_in).count()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.rows().iter().map(BitVec::count_ones).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_vertices())
            .flat_map(|u| self.neighbors(u).filter(move |&v| v > u).map(move |v| (u, v)))
            .collect()
    }

    /// Whether an edge between `u` and `v` is structurally allowed.
    pub fn pair_allowed(&self, u: usize, v: usize) -> bool {
        let n = self.n_vertices();
        u < n && v < n && u != v && !(self.is_input(u) && self.is_input(v))
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        let n = self.n_vertices();
        if u >= n {
            return Err(Error::VertexOutOfRange(u));
        }
        if v >= n {
            return Err(Error::VertexOutOfRange(v));
        }
        if u == v {
            return Err(Error::InvalidAction(format!("self-loop at {u}")));
        }
        if self.is_input(u) && self.is_input(v) {
            return Err(Error::InvalidAction(format!("input-input pair ({u}, {v})")));
        }
        Ok(())
    }

    #[inline]
    fn toggle(&mut self, u: usize, v: usize) {
        self.adj.flip(u, v);
        self.adj.flip(v, u);
    }

    /// Edges that `LocalComplement(v)` would flip, in canonical order.
    pub fn local_complement_pairs(&self, v: usize) -> Vec<(usize, usize)> {
        let nb: Vec<usize> = self.neighbors(v).collect();
        let mut pairs = Vec::new();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !(self.is_input(a) && self.is_input(b)) {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    pub fn validate_action(&self, action: GraphAction) -> Result<()> {
        match action {
            GraphAction::ToggleEdge(u, v) => self.check_pair(u, v),
            GraphAction::LocalComplement(v) if v >= self.n_vertices() => {
                Err(Error::VertexOutOfRange(v))
            }
            GraphAction::LocalComplement(_) => Ok(()),
        }
    }

    /// Returns the graph with `action` applied.
    pub fn apply(&self, action: GraphAction) -> Result<Graph> {
        let mut g = self.clone();
        g.apply_in_place(action)?;
        Ok(g)
    }

    pub(crate) fn apply_in_place(&mut self, action: GraphAction) -> Result<()> {
        self.validate_action(action)?;
        match action {
            GraphAction::ToggleEdge(u, v) => self.toggle(u, v),
            GraphAction::LocalComplement(v) => {
                for (a, b) in self.local_complement_pairs(v) {
                    self.toggle(a, b);
                }
            }
        }
        Ok(())
    }

    /// Output-by-input adjacency block (rows: outputs, columns: inputs).
    pub fn input_output_block(&self) -> BitMatrix {
        let mut b = BitMatrix::zeros(self.n_out, self.n_in);
        for (r, o) in self.outputs().enumerate() {
            for i in self.neighbors(o).take_while(|&u| u < self.n_in) {
                b.set(r, i, true);
            }
        }
        b
    }

    /// Adjacency matrix of the subgraph induced on the outputs.
    pub fn output_adjacency(&self) -> BitMatrix {
        let rows = self
            .outputs()
            .map(|o| {
                BitVec::from_indices(
                    self.n_out,
                    self.neighbors(o).filter(|&u| u >= self.n_in).map(|u| u - self.n_in),
                )
            })
            .collect();
        BitMatrix::from_rows(self.n_out, rows)
    }

    /// Induced graph on the outputs, with no inputs.
    pub fn output_graph(&self) -> Graph {
        Graph {
            n_in: 0,
            n_out: self.n_out,
            adj: self.output_adjacency(),
        }
    }

    fn scoped_adjacency_lists(&self, scope: Scope) -> Vec<Vec<usize>> {
        let lo = match scope {
            Scope::AllVertices => 0,
            Scope::OutputsOnly => self.n_in,
        };
        (lo..self.n_vertices())
            .map(|v| self.neighbors(v).filter(|&u| u >= lo).map(|u| u - lo).collect())
            .collect()
    }

    pub fn metrics(&self, scope: Scope) -> GraphMetrics {
        self.metrics_with(scope, true)
    }

    /// Like [`Graph::metrics`]; with `connectivity` false the two max-flow
    /// connectivity fields are left at 0.
    pub fn metrics_with(&self, scope: Scope, connectivity: bool) -> GraphMetrics {
        let lists = self.scoped_adjacency_lists(scope);
        let n = lists.len();
        let degrees: Vec<usize> = lists.iter().map(Vec::len).collect();
        let edge_count = degrees.iter().sum::<usize>() / 2;
        let max_degree = degrees.iter().copied().max().unwrap_or(0);
        let min_degree = degrees.iter().copied().min().unwrap_or(0);
        let (avg_degree, degree_variance) = if n == 0 {
            (0.0, 0.0)
        } else {
            let mean = degrees.iter().sum::<usize>() as f64 / n as f64;
            let var = degrees
                .iter()
                .map(|&d| (d as f64 - mean).powi(2))
                .sum::<f64>()
                / n as f64;
            (mean, var)
        };
        let connected = connectivity::is_connected(&lists);
        let (edge_connectivity, vertex_connectivity) = if connectivity && connected {
            (
                connectivity::edge_connectivity(&lists),
                connectivity::vertex_connectivity(&lists),
            )
        } else {
            (0, 0)
        };
        GraphMetrics {
            max_degree,
            min_degree,
            avg_degree,
            degree_variance,
            edge_count,
            connected,
            vertex_connectivity,
            edge_connectivity,
        }
    }

    /// Canonical edge-list text: header `n_in n_out`, then sorted `u v` lines.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n_in, self.n_out);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let (n_in, n_out) = parse_pair(hline, header)?;
        let mut g = Graph::new(n_out, n_in).map_err(|e| Error::Parse {
            line: hline,
            msg: e.to_string(),
        })?;
        for (line, l) in lines {
            let (u, v) = parse_pair(line, l)?;
            let bad = |msg: String| Error::Parse { line, msg };
            g.check_pair(u, v).map_err(|e| bad(e.to_string()))?;
            if g.has_edge(u, v) {
                return Err(bad(format!("duplicate edge ({u}, {v})")));
            }
            g.toggle(u, v);
        }
        Ok(g)
    }
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize)> {
    let bad = |msg: &str| Error::Parse {
        line,
        msg: format!("{msg}: {text:?}"),
    };
    let mut it = text.split_whitespace();
    let a = it.next().ok_or_else(|| bad("expected two integers"))?;
    let b = it.next().ok_or_else(|| bad("expected two integers"))?;
    if it.next().is_some() {
        return Err(bad("trailing tokens"));
    }
    let a = a.parse().map_err(|_| bad("not a vertex index"))?;
    let b = b.parse().map_err(|_| bad("not a vertex index"))?;
    Ok((a, b))
}

/// Graphs serialize as their canonical edge-list text.
impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_edge_list())
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Graph::from_edge_list(&text).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Graph(n_in={}, n_out={}, edges={:?})",
            self.n_in,
            self.n_out,
            self.edges()
        )
    }
}

/// Samples each structurally allowed pair independently with `edge_prob`.
pub fn random_graph(n_out: usize, n_in: usize, edge_prob: f64, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_graph_with(n_out, n_in, edge_prob, &mut rng, |_, _, _| true)
}

/// Like [`random_graph`], drawing from `rng`. Every allowed pair consumes
/// exactly one draw; a sampled edge is kept only if `keep(graph, u, v)`
/// holds for the graph built so far.
pub fn random_graph_with<R: Rng>(
    n_out: usize,
    n_in: usize,
    edge_prob: f64,
    rng: &mut R,
    mut keep: impl FnMut(&Graph, usize, usize) -> bool,
) -> Result<Graph> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::Config(format!("edge probability {edge_prob} outside [0, 1]")));
    }
    let mut g = Graph::new(n_out, n_in)?;
    let n = g.n_vertices();
    for u in 0..n {
        for v in (u + 1)..n {
            if !g.pair_allowed(u, v) {
                continue;
            }
            if rng.gen_bool(edge_prob) && keep(&g, u, v) {
                g.toggle(u, v);
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn cycle(n: usize) -> Graph {
        Graph::with_edges(n, 0, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn new_graph_examples() {
        let g = Graph::new(5, 1).unwrap();
        assert_eq!(g.n_vertices(), 6);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(Graph::new(15, 7).unwrap().n_vertices(), 22);
        assert!(matches!(Graph::new(0, 1), Err(Error::NoOutputs)));
    }

    #[test]
    fn toggle_is_involution() {
        let g = Graph::new(4, 0).unwrap();
        let a = GraphAction::ToggleEdge(1, 3);
        let once = g.apply(a).unwrap();
        assert!(once.has_edge(1, 3) && once.has_edge(3, 1));
        assert_eq!(once.apply(a).unwrap(), g);
    }

    #[test]
    fn local_complement_path_to_triangle() {
        let path = Graph::with_edges(3, 0, [(0, 1), (1, 2)]).unwrap();
        let tri = path.apply(GraphAction::LocalComplement(1)).unwrap();
        assert_eq!(tri.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(tri.apply(GraphAction::LocalComplement(1)).unwrap(), path);
    }

    #[test]
    fn local_complement_skips_input_pairs() {
        // inputs 0, 1; output 2 adjacent to both inputs and to output 3
        let g = Graph::with_edges(2, 2, [(0, 2), (1, 2), (2, 3)]).unwrap();
        let h = g.apply(GraphAction::LocalComplement(2)).unwrap();
        assert!(!h.has_edge(0, 1));
        assert!(h.has_edge(0, 3) && h.has_edge(1, 3));
    }

    #[test]
    fn invalid_actions_rejected() {
        let g = Graph::new(3, 2).unwrap();
        assert!(g.apply(GraphAction::ToggleEdge(2, 2)).is_err());
        assert!(g.apply(GraphAction::ToggleEdge(0, 1)).is_err());
        assert!(g.apply(GraphAction::ToggleEdge(0, 9)).is_err());
        assert!(g.apply(GraphAction::LocalComplement(5)).is_err());
    }

    #[test]
    fn metrics_c5() {
        let m = cycle(5).metrics(Scope::AllVertices);
        assert_eq!(m.max_degree, 2);
        assert_eq!(m.min_degree, 2);
        assert_eq!(m.avg_degree, 2.0);
        assert_eq!(m.degree_variance, 0.0);
        assert_eq!(m.edge_count, 5);
        assert!(m.connected);
        assert_eq!(m.vertex_connectivity, 2);
        assert_eq!(m.edge_connectivity, 2);
    }

    #[test]
    fn metrics_edgeless_and_complete() {
        let m = Graph::new(3, 0).unwrap().metrics(Scope::AllVertices);
        assert_eq!(m.max_degree, 0);
        assert_eq!(m.vertex_connectivity, 0);
        assert!(!m.connected);

        let k4 = Graph::with_edges(4, 0, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let m = k4.metrics(Scope::AllVertices);
        assert_eq!((m.vertex_connectivity, m.edge_connectivity), (3, 3));
    }

    #[test]
    fn metrics_scope_outputs_only() {
        // input 0 joined to every output of a 4-path
        let g = Graph::with_edges(4, 1, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (2, 3), (3, 4)])
            .unwrap();
        let all = g.metrics(Scope::AllVertices);
        let out = g.metrics(Scope::OutputsOnly);
        assert_eq!(all.edge_count, 7);
        assert_eq!(out.edge_count, 3);
        assert_eq!(out.max_degree, 2);
        assert_eq!(out.vertex_connectivity, 1);
        assert_eq!(all.vertex_connectivity, 2);
    }

    #[test]
    fn random_graph_extremes_and_determinism() {
        assert_eq!(random_graph(6, 2, 0.0, 1).unwrap().edge_count(), 0);
        let full = random_graph(6, 2, 1.0, 1).unwrap();
        // C(8,2) pairs minus the single input-input pair
        assert_eq!(full.edge_count(), 27);
        assert!(!full.has_edge(0, 1));
        assert_eq!(random_graph(9, 3, 0.3, 42).unwrap(), random_graph(9, 3, 0.3, 42).unwrap());
        assert!(random_graph(3, 0, 1.5, 0).is_err());
    }

    #[test]
    fn edge_list_examples() {
        let g = Graph::from_edge_list("1 5\n0 1\n2 1\n0 5\n").unwrap();
        assert_eq!(g.to_edge_list(), "1 5\n0 1\n0 5\n1 2\n");
        assert!(Graph::from_edge_list("0 4\n3 3\n").is_err());
        assert!(Graph::from_edge_list("2 3\n0 1\n").is_err());
        assert!(Graph::from_edge_list("0 4\n1 2\n2 1\n").is_err());
        assert!(Graph::from_edge_list("0 4\n1 9\n").is_err());
        assert!(Graph::from_edge_list("0 4\n1 x\n").is_err());
        assert!(Graph::from_edge_list("").is_err());
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (1..=max_n, 0..=3usize, 0.0..=1.0f64, any::<u64>())
            .prop_map(|(n_out, n_in, p, seed)| random_graph(n_out, n_in, p, seed).unwrap())
    }

    fn arb_action(g: &Graph) -> impl Strategy<Value = GraphAction> {
        let n = g.n_vertices();
        let n_in = g.n_inputs();
        prop_oneof![
            (0..n).prop_map(GraphAction::LocalComplement),
            (0..n, 0..n)
                .prop_filter("allowed pair", move |&(u, v)| u != v && !(u < n_in && v < n_in))
                .prop_map(|(u, v)| GraphAction::ToggleEdge(u, v)),
        ]
    }

    proptest! {
        #[test]
        fn actions_are_involutions(
            (g, a) in arb_graph(12).prop_filter("has an allowed pair", |g| g.n_outputs() >= 2)
                .prop_flat_map(|g| { let s = arb_action(&g); (Just(g), s) })
        ) {
            let once = g.apply(a).unwrap();
            let m = once.adjacency();
            for u in 0..once.n_vertices() {
                prop_assert!(!m.get(u, u));
                for v in 0..once.n_vertices() {
                    prop_assert_eq!(m.get(u, v), m.get(v, u));
                    if u < once.n_inputs() && v < once.n_inputs() {
                        prop_assert!(!m.get(u, v));
                    }
                }
            }
            prop_assert_eq!(once.apply(a).unwrap(), g);
        }

        #[test]
        fn edge_list_round_trip(g in arb_graph(150)) {
            prop_assert_eq!(Graph::from_edge_list(&g.to_edge_list()).unwrap(), g);
        }
    }

    #[test]
    fn metric_identities_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n_out = rng.gen_range(1..=14);
            let n_in = rng.gen_range(0..=3);
            let p = rng.gen_range(0.0..1.0);
            let g = random_graph_with(n_out, n_in, p, &mut rng, |_, _, _| true).unwrap();
            let degree_sum: usize = (0..g.n_vertices()).map(|v| g.degree(v)).sum();
            assert_eq!(degree_sum, 2 * g.edge_count());
            for scope in [Scope::AllVertices, Scope::OutputsOnly] {
                let m = g.metrics(scope);
                assert!(m.vertex_connectivity <= m.edge_connectivity, "{g:?}");
                assert!(m.edge_connectivity <= m.min_degree, "{g:?}");
                assert!(m.min_degree as f64 <= m.avg_degree + 1e-12);
                assert!(m.avg_degree <= m.max_degree as f64 + 1e-12);
                let n = match scope {
                    Scope::AllVertices => g.n_vertices(),
                    Scope::OutputsOnly => g.n_outputs(),
                };
                if n >= 2 {
                    assert_eq!(m.connected, m.vertex_connectivity >= 1, "{g:?}");
                }
            }
        }
    }
}
