//! Graph-state preparation and stabilizer-measurement circuits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    Cz(usize, usize),
    /// Control, target.
    Cx(usize, usize),
    Measure(usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::Measure(q) => vec![q],
            Gate::Cz(a, b) | Gate::Cx(a, b) => vec![a, b],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    /// Sorted by (layer, gate).
    gates: Vec<(usize, Gate)>,
}

impl Circuit {
    /// Builds a circuit from explicitly layered gates, checking qubit ranges
    /// and that no layer touches a qubit twice.
    pub fn from_layered(n_qubits: usize, mut gates: Vec<(usize, Gate)>) -> Result<Circuit> {
        gates.sort_unstable();
        let mut last_layer = vec![usize::MAX; n_qubits];
        for &(layer, gate) in &gates {
            let qs = gate.qubits();
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(Error::InvalidAction(format!("{gate:?} acts twice on one qubit")));
            }
            for q in qs {
                if q >= n_qubits {
                    return Err(Error::VertexOutOfRange(q));
                }
                if last_layer[q] == layer {
                    return Err(Error::InvalidAction(format!("qubit {q} used twice in layer {layer}")));
                }
                last_layer[q] = layer;
            }
        }
        Ok(Circuit { n_qubits, gates })
    }

    /// Schedules `gates` in order, each in the earliest layer after every
    /// earlier gate on its qubits.
    pub fn asap(n_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Circuit> {
        let mut next = vec![0usize; n_qubits];
        let mut layered = Vec::new();
        for gate in gates {
            let qs = gate.qubits();
            if let Some(&q) = qs.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::VertexOutOfRange(q));
            }
            let layer = qs.iter().map(|&q| next[q]).max().unwrap_or(0);
            for q in qs {
                next[q] = layer + 1;
            }
            layered.push((layer, gate));
        }
        Circuit::from_layered(n_qubits, layered)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> impl Iterator<Item = Gate> + '_ {
        self.gates.iter().map(|&(_, g)| g)
    }

    pub fn layered_gates(&self) -> &[(usize, Gate)] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&Gate) -> bool) -> usize {
        self.gates().filter(|g| pred(g)).count()
    }

    pub fn cz_count(&self) -> usize {
        self.count(|g| matches!(g, Gate::Cz(..)))
    }

    /// Number of non-empty layers.
    pub fn depth(&self) -> usize {
        let mut layers: Vec<usize> = self.gates.iter().map(|&(l, _)| l).collect();
        layers.dedup();
        layers.len()
    }

    /// Number of distinct layers holding at least one CZ.
    pub fn cz_depth(&self) -> usize {
        let mut layers: Vec<usize> = self
            .gates
            .iter()
            .filter(|(_, g)| matches!(g, Gate::Cz(..)))
            .map(|&(l, _)| l)
            .collect();
        layers.dedup();
        layers.len()
    }
}

pub fn circuit_depth(c: &Circuit) -> usize {
    c.depth()
}

/// Greedy proper edge coloring in sorted edge order: each edge gets the
/// smallest color unused at both endpoints.
pub fn greedy_edge_coloring(g: &Graph) -> Vec<((usize, usize), usize)> {
    let n = g.n_vertices();
    let mut used: Vec<Vec<bool>> = vec![Vec::new(); n];
    let mut out = Vec::with_capacity(g.edge_count());
    for (u, v) in g.edges() {
        let free = |c: usize, used: &Vec<Vec<bool>>| !used[u].get(c).copied().unwrap_or(false) && !used[v].get(c).copied().unwrap_or(false);
        let color = (0..).find(|&c| free(c, &used)).expect("a free color exists");
        for w in [u, v] {
            if used[w].len() <= color {
                used[w].resize(color + 1, false);
            }
            used[w][color] = true;
        }
        out.push(((u, v), color));
    }
    out
}

/// `H` on every vertex, then one CZ per edge, CZ layers from
/// [`greedy_edge_coloring`].
pub fn preparation_circuit(g: &Graph) -> Circuit {
    let n = g.n_vertices();
    let mut gates: Vec<(usize, Gate)> = (0..n).map(|q| (0, Gate::H(q))).collect();
    gates.extend(
        greedy_edge_coloring(g)
            .into_iter()
            .map(|((u, v), c)| (c + 1, Gate::Cz(u, v))),
    );
    Circuit::from_layered(n, gates).expect("coloring is proper")
}

fn check_gates(g: &Graph, v: usize, ancilla: usize) -> Vec<Gate> {
    let mut gates = vec![Gate::H(ancilla), Gate::Cx(ancilla, v)];
    gates.extend(g.neighbors(v).map(|u| Gate::Cz(ancilla, u)));
    gates.extend([Gate::H(ancilla), Gate::Measure(ancilla)]);
    gates
}

/// Measures `K_v = X_v prod_{u in N(v)} Z_u` into one ancilla (qubit index
/// `n_vertices`), which acts as the control of the CX.
pub fn syndrome_circuit(g: &Graph, v: usize) -> Result<Circuit> {
    if v >= g.n_vertices() {
        return Err(Error::VertexOutOfRange(v));
    }
    let anc = g.n_vertices();
    Circuit::asap(anc + 1, check_gates(g, v, anc))
}

/// One ancilla per listed check vertex, ancilla `n_vertices + i` for
/// `checks[i]`, scheduled ASAP.
pub fn syndrome_pass(g: &Graph, checks: &[usize]) -> Result<Circuit> {
    let n = g.n_vertices();
    if let Some(&v) = checks.iter().find(|&&v| v >= n) {
        return Err(Error::VertexOutOfRange(v));
    }
    let gates: Vec<Gate> = checks
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| check_gates(g, v, n + i))
        .collect();
    Circuit::asap(n + checks.len(), gates)
}

/// `qubits N` header, then one gate per line, each layer opened by a
/// `# layer L` comment.
pub fn emit_circuit_text(c: &Circuit) -> String {
    let mut out = format!("qubits {}\n", c.n_qubits);
    let mut current = None;
    for &(layer, gate) in &c.gates {
        if current != Some(layer) {
            let _ = writeln!(out, "# layer {layer}");
            current = Some(layer);
        }
        let _ = match gate {
            Gate::H(q) => writeln!(out, "H {q}"),
            Gate::Cz(a, b) => writeln!(out, "CZ {a} {b}"),
            Gate::Cx(c, t) => writeln!(out, "CX {c} {t}"),
            Gate::Measure(q) => writeln!(out, "M {q}"),
        };
    }
    out
}

/// Parses [`emit_circuit_text`] output. Without `# layer` comments the
/// gates are scheduled ASAP in file order.
pub fn parse_circuit_text(text: &str) -> Result<Circuit> {
    let err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut n_qubits = None;
    let mut layered = Vec::new();
    let mut plain = Vec::new();
    let mut layer: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("layer") {
                let l = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err(lineno, "bad layer comment"))?;
                layer = Some(l);
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let nums: Vec<usize> = toks[1..]
            .iter()
            .map(|t| t.parse().map_err(|_| err(lineno, "bad qubit index")))
            .collect::<Result<_>>()?;
        if toks[0] == "qubits" {
            if n_qubits.is_some() || nums.len() != 1 {
                return Err(err(lineno, "bad header"));
            }
            n_qubits = Some(nums[0]);
            continue;
        }
        if n_qubits.is_none() {
            return Err(err(lineno, "missing `qubits` header"));
        }
        let gate = match (toks[0], nums.as_slice()) {
            ("H", &[q]) => Gate::H(q),
            ("M", &[q]) => Gate::Measure(q),
            ("CZ", &[a, b]) => Gate::Cz(a, b),
            ("CX", &[a, b]) => Gate::Cx(a, b),
            _ => return Err(err(lineno, "unknown gate")),
        };
        match layer {
            Some(l) => layered.push((l, gate)),
            None => plain.push(gate),
        }
    }
    let n = n_qubits.ok_or_else(|| err(0, "missing `qubits` header"))?;
    match (layered.is_empty(), plain.is_empty()) {
        (_, true) => Circuit::from_layered(n, layered),
        (true, false) => Circuit::asap(n, plain),
        (false, false) => Err(err(0, "mix of layered and unlayered gates")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_graph;

    fn cycle(n: usize) -> Graph {
        Graph::with_edges(n, 0, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    /// Real state-vector simulator; every gate used here keeps amplitudes real.
    struct Sim {
        amp: Vec<f64>,
    }

    impl Sim {
        fn zero(n: usize) -> Self {
            let mut amp = vec![0.0; 1 << n];
            amp[0] = 1.0;
            Sim { amp }
        }

        fn h(&mut self, q: usize) {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..self.amp.len() {
                if i >> q & 1 == 0 {
                    let j = i | 1 << q;
                    let (a, b) = (self.amp[i], self.amp[j]);
                    self.amp[i] = s * (a + b);
                    self.amp[j] = s * (a - b);
                }
            }
        }

        fn cz(&mut self, a: usize, b: usize) {
            for i in 0..self.amp.len() {
                if i >> a & 1 == 1 && i >> b & 1 == 1 {
                    self.amp[i] = -self.amp[i];
                }
            }
        }

        fn cx(&mut self, c: usize, t: usize) {
            for i in 0..self.amp.len() {
                if i >> c & 1 == 1 && i >> t & 1 == 0 {
                    self.amp.swap(i, i | 1 << t);
                }
            }
        }

        fn run(&mut self, c: &Circuit) {
            for g in c.gates() {
                match g {
                    Gate::H(q) => self.h(q),
                    Gate::Cz(a, b) => self.cz(a, b),
                    Gate::Cx(a, b) => self.cx(a, b),
                    Gate::Measure(_) => {}
                }
            }
        }

        /// `<psi| X_x Z_z |psi>` with masks over basis bits.
        fn expect_xz(&self, x: usize, z: usize) -> f64 {
            (0..self.amp.len())
                .map(|i| {
                    let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    self.amp[i ^ x] * sign * self.amp[i]
                })
                .sum()
        }

        fn prob_one(&self, q: usize) -> f64 {
            (0..self.amp.len()).filter(|i| i >> q & 1 == 1).map(|i| self.amp[i].powi(2)).sum()
        }
    }

    #[test]
    fn pentagon_preparation() {
        let c = preparation_circuit(&cycle(5));
        assert_eq!(c.count(|g| matches!(g, Gate::H(_))), 5);
        assert_eq!(c.cz_count(), 5);
        assert_eq!(c.cz_depth(), 3);
        assert_eq!(c.depth(), 4);
        let text = emit_circuit_text(&c);
        assert_eq!(text.lines().filter(|l| l.starts_with("H ")).count(), 5);
        assert_eq!(text.lines().filter(|l| l.starts_with("CZ ")).count(), 5);
    }

    #[test]
    fn depth_examples() {
        let star = Graph::with_edges(5, 0, (1..5).map(|v| (0, v))).unwrap();
        assert_eq!(preparation_circuit(&star).cz_depth(), 4);
        let edge = Graph::with_edges(2, 0, [(0, 1)]).unwrap();
        assert_eq!(circuit_depth(&preparation_circuit(&edge)), 2);
        let empty = Graph::new(4, 0).unwrap();
        let c = preparation_circuit(&empty);
        assert_eq!(c.depth(), 1);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn fifteen_vertex_gate_counts() {
        // 15-cycle plus 6 chords: 21 edges
        let mut edges: Vec<(usize, usize)> = (0..15).map(|i| (i, (i + 1) % 15)).collect();
        edges.extend([(0, 5), (1, 8), (2, 10), (3, 12), (4, 9), (6, 13)]);
        let g = Graph::with_edges(15, 0, edges).unwrap();
        let c = preparation_circuit(&g);
        assert_eq!(c.count(|g| matches!(g, Gate::H(_))), 15);
        assert_eq!(c.cz_count(), 21);
    }

    #[test]
    fn random_graph_schedules() {
        for seed in 0..1000 {
            let g = random_graph(3 + (seed as usize % 12), (seed as usize) % 3, 0.35, seed).unwrap();
            let c = preparation_circuit(&g);
            assert_eq!(c.cz_count(), g.edge_count());
            let delta = (0..g.n_vertices()).map(|v| g.degree(v)).max().unwrap_or(0);
            if delta > 0 {
                assert!(c.cz_depth() >= delta && c.cz_depth() <= 2 * delta - 1);
            }
            // revalidates layer disjointness
            Circuit::from_layered(c.n_qubits(), c.layered_gates().to_vec()).unwrap();
        }
    }

    #[test]
    fn prepared_state_is_stabilized() {
        for seed in 0..60 {
            let n = 2 + seed as usize % 9;
            let g = random_graph(n, 0, 0.5, seed).unwrap();
            let mut sim = Sim::zero(n);
            sim.run(&preparation_circuit(&g));
            for v in 0..n {
                let z: usize = g.neighbors(v).map(|u| 1 << u).sum();
                let e = sim.expect_xz(1 << v, z);
                assert!((e - 1.0).abs() < 1e-12, "K_{v} expectation {e}");
            }
        }
    }

    #[test]
    fn syndrome_counts() {
        let g = cycle(5).apply(crate::graph::GraphAction::ToggleEdge(0, 2)).unwrap();
        assert_eq!(g.degree(0), 3);
        let c = syndrome_circuit(&g, 0).unwrap();
        assert_eq!(c.count(|g| matches!(g, Gate::H(_))), 2);
        assert_eq!(c.count(|g| matches!(g, Gate::Cx(..))), 1);
        assert_eq!(c.cz_count(), 3);
        assert_eq!(c.count(|g| matches!(g, Gate::Measure(_))), 1);
        assert!(c.gates().any(|g| g == Gate::Cx(5, 0)));

        let iso = Graph::with_edges(3, 0, [(1, 2)]).unwrap();
        let c = syndrome_circuit(&iso, 0).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.cz_count(), 0);
        assert!(syndrome_circuit(&iso, 3).is_err());

        let pass = syndrome_pass(&g, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(pass.n_qubits(), 10);
        assert_eq!(pass.count(|g| matches!(g, Gate::Measure(_))), 5);
    }

    #[test]
    fn syndrome_circuit_reads_stabilizer() {
        let g = cycle(4).apply(crate::graph::GraphAction::ToggleEdge(0, 2)).unwrap();
        let n = g.n_vertices();
        for v in 0..n {
            let mut sim = Sim::zero(n + 1);
            sim.run(&preparation_circuit(&g));
            sim.run(&syndrome_circuit(&g, v).unwrap());
            assert!(sim.prob_one(n) < 1e-12);

            // a Z error on v anticommutes with K_v only
            for w in 0..n {
                let mut sim = Sim::zero(n + 1);
                sim.run(&preparation_circuit(&g));
                let amp: Vec<f64> = (0..sim.amp.len())
                    .map(|i| if i >> w & 1 == 1 { -sim.amp[i] } else { sim.amp[i] })
                    .collect();
                sim.amp = amp;
                sim.run(&syndrome_circuit(&g, v).unwrap());
                let expected = if w == v { 1.0 } else { 0.0 };
                assert!((sim.prob_one(n) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let g = random_graph(8, 2, 0.4, 3).unwrap();
        for c in [
            preparation_circuit(&g),
            syndrome_circuit(&g, 4).unwrap(),
            syndrome_pass(&g, &[2, 3, 7]).unwrap(),
            Circuit::from_layered(3, vec![]).unwrap(),
        ] {
            let text = emit_circuit_text(&c);
            assert_eq!(parse_circuit_text(&text).unwrap(), c);
        }
        assert_eq!(emit_circuit_text(&Circuit::from_layered(3, vec![]).unwrap()), "qubits 3\n");
        let unlayered = parse_circuit_text("qubits 2\nH 0\nH 1\nCZ 0 1\n").unwrap();
        assert_eq!(unlayered.depth(), 2);
        assert!(parse_circuit_text("H 0\n").is_err());
        assert!(parse_circuit_text("qubits 2\nCZ 0 2\n").is_err());
        assert!(parse_circuit_text("qubits 2\nFOO 1\n").is_err());
        assert!(parse_circuit_text("qubits 2\n# layer 0\nH 0\nH 0\n").is_err());
    }
}
