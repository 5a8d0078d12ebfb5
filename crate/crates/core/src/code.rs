//! From graphs to quantum codes: parameters `[[n, k, d]]`, distance
//! oracles, and logical operators.
//!
//! The input-output backend treats the outputs as physical qubits in the
//! graph state of the output subgraph `A` and uses the column space `C` of
//! the output-by-input adjacency block as a classical word code. Codewords
//! are `Z^c |G_A>` for `c` in `C`. A Pauli `X^x Z^z` maps the graph state to
//! `Z^(z + A x) |G_A>` up to phase, so it is an undetectable logical error
//! exactly when `z + A x` lies in `C` and it does not act as the identity on
//! every codeword.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2::{orthogonal_complement, BitVec};
use crate::graph::Graph;
use crate::pauli::PauliVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Inputs seed a classical word code; `k` is the rank of the
    /// input-output adjacency block.
    InputOutput,
    /// `k = n - rank(A)` on the output adjacency; heuristic distance only.
    PaperRank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Exact,
    LowerBoundedBy(usize),
    Heuristic,
}

/// Parameter summary as serialized in trajectories and reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub backend: Backend,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub d_certainty: Certainty,
}

#[derive(Clone, Debug)]
pub struct GraphCode {
    pub backend: Backend,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub certainty: Certainty,
    output_graph: Graph,
    word_generators: Vec<BitVec>,
    word_pivots: Vec<usize>,
}

/// Graph-state stabilizers `K_v = X_v Z_{N(v)}` for every vertex of `g`.
pub fn graph_stabilizers(g: &Graph) -> Vec<PauliVec> {
    let n = g.n_vertices();
    (0..n)
        .map(|v| PauliVec {
            x: BitVec::unit(n, v),
            z: g.neighborhood(v).clone(),
        })
        .collect()
}

/// `max(1, min(delta_min + 1, floor((n + 2 - k) / 2)))`.
pub fn heuristic_distance_from(min_degree: usize, n: usize, k: usize) -> usize {
    let singleton = (n + 2).saturating_sub(k) / 2;
    (min_degree + 1).min(singleton).max(1)
}

/// Largest weight at most `floor((n + 2 - k) / 2)` whose cumulative Pauli
/// enumeration count `sum_{w'<=w} C(n, w') 3^w'` stays within `budget`.
/// Never below 1.
pub fn affordable_weight(n: usize, k: usize, budget: u64) -> usize {
    let cap = ((n + 2).saturating_sub(k) / 2).clamp(1, n.max(1));
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    let mut pow3: u128 = 1;
    let mut best = 1;
    for w in 1..=cap {
        binom = binom * (n + 1 - w) as u128 / w as u128;
        pow3 *= 3;
        total += binom * pow3;
        if total > budget as u128 {
            break;
        }
        best = w;
    }
    best
}

/// Enumeration budget used when re-verifying reported distances.
pub const VERIFY_BUDGET: u64 = 500_000_000;

impl GraphCode {
    pub fn build(g: &Graph, backend: Backend) -> Result<GraphCode> {
        let output_graph = g.output_graph();
        let n = g.n_outputs();
        let (k, word_generators, word_pivots) = match backend {
            Backend::InputOutput => {
                if g.n_inputs() == 0 {
                    return Err(Error::NoInputs);
                }
                let (basis, pivots) = g.input_output_block().transpose().row_space_basis();
                (basis.len(), basis, pivots)
            }
            Backend::PaperRank => (n - output_graph.adjacency().rank(), Vec::new(), Vec::new()),
        };
        let mut code = GraphCode {
            backend,
            n,
            k,
            d: 0,
            certainty: Certainty::Heuristic,
            output_graph,
            word_generators,
            word_pivots,
        };
        code.d = if k == 0 { 0 } else { code.heuristic_distance() };
        Ok(code)
    }

    pub fn params(&self) -> CodeParams {
        CodeParams {
            backend: self.backend,
            n: self.n,
            k: self.k,
            d: self.d,
            d_certainty: self.certainty,
        }
    }

    pub fn output_graph(&self) -> &Graph {
        &self.output_graph
    }

    /// RREF basis of the classical word code.
    pub fn word_generators(&self) -> &[BitVec] {
        &self.word_generators
    }

    pub fn heuristic_distance(&self) -> usize {
        let min_degree = (0..self.n)
            .map(|v| self.output_graph.degree(v))
            .min()
            .unwrap_or(0);
        heuristic_distance_from(min_degree, self.n, self.k)
    }

    fn require_words(&self) -> Result<()> {
        if self.backend != Backend::InputOutput {
            return Err(Error::Config(
                "operation needs the input-output backend".into(),
            ));
        }
        if self.k == 0 {
            return Err(Error::NoLogicalQubits);
        }
        Ok(())
    }

    /// Parity checks of the word code: basis of `C^perp`.
    fn word_checks(&self) -> Vec<BitVec> {
        orthogonal_complement(self.n, &self.word_generators, &self.word_pivots)
    }

    /// `X^a Z^(A a)`, the product of graph stabilizers over the support of `a`.
    fn stabilizer_product(&self, a: &BitVec) -> PauliVec {
        PauliVec {
            x: a.clone(),
            z: self.output_graph.adjacency().mul_vec(a),
        }
    }

    /// Independent stabilizer generators of the code: `K^h` for `h` in a
    /// basis of `C^perp`. There are `n - k` of them.
    pub fn check_generators(&self) -> Result<Vec<PauliVec>> {
        self.require_words()?;
        Ok(self.word_checks().iter().map(|h| self.stabilizer_product(h)).collect())
    }

    /// Logical operators in conjugate pairs `[Z^g_1, P_1, Z^g_2, P_2, ...]`.
    /// `Z^g_j` shifts between codewords; its partner `P_j = K_{p_j}` (with
    /// `p_j` the RREF pivot of `g_j`) applies the phase `(-1)^{c_{p_j}}`, so
    /// `P_j` anticommutes with `Z^g_j` only.
    pub fn logical_word_operators(&self) -> Result<Vec<PauliVec>> {
        self.require_words()?;
        let mut ops = Vec::with_capacity(2 * self.k);
        for (g, &p) in self.word_generators.iter().zip(&self.word_pivots) {
            ops.push(PauliVec::z_type(g.clone()));
            ops.push(self.stabilizer_product(&BitVec::unit(self.n, p)));
        }
        Ok(ops)
    }

    /// Minimum weight of a nontrivial undetectable Pauli, searching weights
    /// `1..=w_max`. Returns `(d, Exact)` for the first weight with a logical
    /// error, else `(w_max + 1, LowerBoundedBy(w_max + 1))`.
    pub fn exact_distance(&self, w_max: usize) -> Result<(usize, Certainty)> {
        self.require_words()?;
        let search = LogicalSearch::new(self);
        for w in 1..=w_max.min(self.n) {
            if search.find(w).is_some() {
                let d = w;
                assert!(
                    self.k + 2 * d <= self.n + 2,
                    "quantum Singleton bound violated: [[{}, {}, {}]]",
                    self.n,
                    self.k,
                    d
                );
                return Ok((d, Certainty::Exact));
            }
        }
        let bound = w_max.min(self.n) + 1;
        Ok((bound, Certainty::LowerBoundedBy(bound)))
    }

    /// A minimum-weight nontrivial logical Pauli, if one exists with weight
    /// at most `w_max`.
    pub fn minimum_weight_logical(&self, w_max: usize) -> Result<Option<PauliVec>> {
        self.require_words()?;
        let search = LogicalSearch::new(self);
        Ok((1..=w_max.min(self.n)).find_map(|w| search.find(w)))
    }

    /// Copy with the distance re-derived at the strongest affordable
    /// certainty: exhaustive up to the Singleton cap when the enumeration fits
    /// `budget`, otherwise bounded. Heuristic backends are returned as is.
    pub fn verified(&self, budget: u64) -> Result<GraphCode> {
        let mut code = self.clone();
        if self.backend == Backend::InputOutput && self.k > 0 {
            let (d, certainty) = self.exact_distance(affordable_weight(self.n, self.k, budget))?;
            code.d = d;
            code.certainty = certainty;
        }
        Ok(code)
    }
}

/// Depth-first enumeration of Paulis by support, with every single-qubit
/// Pauli precomputed as a packed bit vector
/// `[syndrome (n-k) | word coordinates (k) | phase signature (k)]`.
/// An error is a nontrivial logical iff its syndrome part is zero and the
/// rest is not: coordinates say which codeword shift `z + A x` is, the
/// phase signature records `x . g_j`.
struct LogicalSearch {
    n: usize,
    words: usize,
    syndrome_mask: Vec<u64>,
    logical_mask: Vec<u64>,
    /// `3 n` packed entries, ordered (qubit, X/Y/Z).
    table: Vec<u64>,
}

const SINGLE_OPS: [char; 3] = ['X', 'Y', 'Z'];

impl LogicalSearch {
    fn new(code: &GraphCode) -> Self {
        let n = code.n;
        let k = code.k;
        let bits = n + k;
        let words = bits.div_ceil(64);
        let checks = code.word_checks();
        let adj = code.output_graph.adjacency();
        let mut syndrome_mask = vec![0u64; words];
        let mut logical_mask = vec![0u64; words];
        for b in 0..bits {
            let m = if b < n - k { &mut syndrome_mask } else { &mut logical_mask };
            m[b / 64] |= 1 << (b % 64);
        }
        let mut table = vec![0u64; 3 * n * words];
        for q in 0..n {
            for (o, op) in SINGLE_OPS.iter().enumerate() {
                let (has_x, has_z) = match op {
                    'X' => (true, false),
                    'Y' => (true, true),
                    _ => (false, true),
                };
                let mut image = if has_x { adj.row(q).clone() } else { BitVec::zeros(n) };
                if has_z {
                    image.flip(q);
                }
                let entry = &mut table[(3 * q + o) * words..(3 * q + o + 1) * words];
                let mut put = |b: usize| entry[b / 64] |= 1 << (b % 64);
                for (i, h) in checks.iter().enumerate() {
                    if h.dot(&image) {
                        put(i);
                    }
                }
                for (j, &p) in code.word_pivots.iter().enumerate() {
                    if image.get(p) {
                        put(n - k + j);
                    }
                }
                if has_x {
                    for (j, g) in code.word_generators.iter().enumerate() {
                        if g.get(q) {
                            put(n + j);
                        }
                    }
                }
            }
        }
        Self {
            n,
            words,
            syndrome_mask,
            logical_mask,
            table,
        }
    }

    fn is_logical(&self, acc: &[u64]) -> bool {
        let mut syndrome = 0;
        let mut logical = 0;
        for ((a, s), l) in acc.iter().zip(&self.syndrome_mask).zip(&self.logical_mask) {
            syndrome |= a & s;
            logical |= a & l;
        }
        syndrome == 0 && logical != 0
    }

    /// First logical of exactly weight `w` in enumeration order.
    fn find(&self, w: usize) -> Option<PauliVec> {
        if w == 0 || w > self.n {
            return None;
        }
        let mut acc = vec![0u64; (w + 1) * self.words];
        let mut path = vec![(0usize, 0usize); w];
        if self.descend(0, 0, w, &mut acc, &mut path) {
            let mut p = PauliVec::identity(self.n);
            for &(q, o) in &path {
                p.mul_assign(&PauliVec::single(self.n, q, SINGLE_OPS[o]));
            }
            Some(p)
        } else {
            None
        }
    }

    fn descend(
        &self,
        level: usize,
        start: usize,
        w: usize,
        acc: &mut [u64],
        path: &mut [(usize, usize)],
    ) -> bool {
        let words = self.words;
        let remaining = w - level;
        for q in start..=(self.n - remaining) {
            for o in 0..3 {
                let entry = &self.table[(3 * q + o) * words..(3 * q + o + 1) * words];
                let (prev, next) = acc.split_at_mut((level + 1) * words);
                let prev = &prev[level * words..];
                let next = &mut next[..words];
                for i in 0..words {
                    next[i] = prev[i] ^ entry[i];
                }
                path[level] = (q, o);
                if remaining == 1 {
                    if self.is_logical(next) {
                        return true;
                    }
                } else if self.descend(level + 1, q + 1, w, acc, path) {
                    return true;
                }
            }
        }
        false
    }
}
