//! Code-capacity depolarizing noise with an exact minimum-weight table
//! decoder.
//!
//! Syndromes are perfect and one noise draw is one cycle. A trial fails when
//! the residual after correction acts nontrivially on any logical qubit of
//! the block.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::GraphCode;
use crate::error::{Error, Result};
use crate::f2::{BitMatrix, BitVec};
use crate::graph::Graph;
use crate::pauli::PauliVec;

/// Largest check count the table decoder accepts.
pub const MAX_TABLE_CHECKS: usize = 24;
/// Monte Carlo trials per independently seeded chunk.
pub const CHUNK_TRIALS: u64 = 4096;

const OPS: [char; 3] = ['X', 'Y', 'Z'];

#[derive(Clone, Debug, PartialEq)]
pub struct CheckMatrix {
    n: usize,
    checks: Vec<PauliVec>,
    /// Conjugate pairs `[L_1, M_1, L_2, M_2, ...]`.
    logicals: Vec<PauliVec>,
}

impl CheckMatrix {
    /// Validates commutation, canonical logical pairing and check
    /// independence.
    pub fn new(checks: Vec<PauliVec>, logicals: Vec<PauliVec>) -> Result<CheckMatrix> {
        let bad = |m: String| Err(Error::InvalidCheckMatrix(m));
        let n = checks.first().or(logicals.first()).map_or(0, PauliVec::len);
        if let Some(p) = checks.iter().chain(&logicals).find(|p| p.len() != n) {
            return Err(Error::LengthMismatch(n, p.len()));
        }
        if logicals.len() % 2 == 1 {
            return bad("logical operators must come in pairs".into());
        }
        for (i, a) in checks.iter().enumerate() {
            for (j, b) in checks.iter().enumerate().skip(i + 1) {
                if !a.commutes_with(b) {
                    return bad(format!("checks {i} and {j} anticommute"));
                }
            }
            for (j, l) in logicals.iter().enumerate() {
                if !a.commutes_with(l) {
                    return bad(format!("check {i} anticommutes with logical {j}"));
                }
            }
        }
        for (i, a) in logicals.iter().enumerate() {
            for (j, b) in logicals.iter().enumerate().skip(i + 1) {
                let paired = i % 2 == 0 && j == i + 1;
                if a.commutes_with(b) == paired {
                    return bad(format!("logicals {i} and {j} are not canonically paired"));
                }
            }
        }
        let rows: Vec<BitVec> = checks
            .iter()
            .map(|p| BitVec::from_indices(2 * n, p.x.ones().chain(p.z.ones().map(|q| q + n))))
            .collect();
        if BitMatrix::from_rows(2 * n, rows).rank() != checks.len() {
            return bad("checks are not independent".into());
        }
        Ok(CheckMatrix { n, checks, logicals })
    }

    pub fn from_code(code: &GraphCode) -> Result<CheckMatrix> {
        CheckMatrix::new(code.check_generators()?, code.logical_word_operators()?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn k(&self) -> usize {
        self.logicals.len() / 2
    }

    pub fn checks(&self) -> &[PauliVec] {
        &self.checks
    }

    pub fn logicals(&self) -> &[PauliVec] {
        &self.logicals
    }
}

/// Bit `i` is the symplectic product of check `i` with `e`.
pub fn syndrome_of(cm: &CheckMatrix, e: &PauliVec) -> Result<BitVec> {
    let mut s = BitVec::zeros(cm.checks.len());
    for (i, c) in cm.checks.iter().enumerate() {
        if c.symplectic_product(e)? {
            s.set(i, true);
        }
    }
    Ok(s)
}

/// Whether a zero-syndrome residual acts nontrivially on the code space.
pub fn is_logical_failure(cm: &CheckMatrix, residual: &PauliVec) -> Result<bool> {
    if !syndrome_of(cm, residual)?.is_zero() {
        return Err(Error::NonzeroSyndrome);
    }
    Ok(cm.logicals.iter().any(|l| !l.commutes_with(residual)))
}

/// Each qubit independently: `I` with probability `1 - p`, else `X`, `Y` or
/// `Z` with probability `p / 3` each.
pub fn sample_depolarizing<R: Rng>(n: usize, p: f64, rng: &mut R) -> PauliVec {
    let mut e = PauliVec::identity(n);
    for q in 0..n {
        if let Some(op) = draw_op(p, rng) {
            e = e.mul(&PauliVec::single(n, q, OPS[op]));
        }
    }
    e
}

fn draw_op<R: Rng>(p: f64, rng: &mut R) -> Option<usize> {
    let u: f64 = rng.gen();
    (u < p).then(|| ((u / p * 3.0) as usize).min(2))
}

/// Per single-qubit Pauli: its syndrome and which logicals it anticommutes
/// with.
struct Signatures {
    lw: usize,
    syn: Vec<u32>,
    logical: Vec<u64>,
}

impl Signatures {
    fn new(cm: &CheckMatrix) -> Self {
        let lw = cm.logicals.len().div_ceil(64).max(1);
        let mut syn = Vec::with_capacity(3 * cm.n);
        let mut logical = vec![0u64; 3 * cm.n * lw];
        for q in 0..cm.n {
            for (o, &op) in OPS.iter().enumerate() {
                let p = PauliVec::single(cm.n, q, op);
                let idx = 3 * q + o;
                syn.push(
                    cm.checks
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !c.commutes_with(&p))
                        .fold(0u32, |s, (i, _)| s | 1 << i),
                );
                for (i, l) in cm.logicals.iter().enumerate() {
                    if !l.commutes_with(&p) {
                        logical[idx * lw + i / 64] |= 1 << (i % 64);
                    }
                }
            }
        }
        Signatures { lw, syn, logical }
    }

    fn logical_of(&self, idx: usize) -> &[u64] {
        &self.logical[idx * self.lw..(idx + 1) * self.lw]
    }
}

const UNSET: u32 = u32::MAX;

/// Minimum-weight correction for every syndrome.
pub struct DecoderTable {
    cm: CheckMatrix,
    sig: Signatures,
    /// Per syndrome: offset into `ops` (or `UNSET`) and length.
    start: Vec<u32>,
    len: Vec<u8>,
    /// Encoded `3 * qubit + op`.
    ops: Vec<u32>,
    /// Per syndrome: logical signature of the correction.
    logical: Vec<u64>,
}

/// Fills the table with errors of increasing weight; within one weight,
/// supports and then operators (X < Y < Z) are visited lexicographically and
/// the first error reaching a syndrome keeps it.
pub fn build_decoder_table(cm: &CheckMatrix) -> Result<DecoderTable> {
    let r = cm.checks.len();
    if r > MAX_TABLE_CHECKS {
        return Err(Error::TooManyChecks(r));
    }
    let sig = Signatures::new(cm);
    let size = 1usize << r;
    let lw = sig.lw;
    let mut t = DecoderTable {
        cm: cm.clone(),
        start: vec![UNSET; size],
        len: vec![0; size],
        ops: Vec::new(),
        logical: vec![0; size * lw],
        sig,
    };
    t.start[0] = 0;
    let mut filled = 1;
    let mut w = 0;
    let mut stack = Vec::new();
    let mut lsig = vec![0u64; lw];
    while filled < size {
        w += 1;
        if w > cm.n {
            return Err(Error::InvalidCheckMatrix("syndrome map is not onto".into()));
        }
        t.fill(0, w, 0, &mut lsig, &mut stack, &mut filled);
    }
    Ok(t)
}

impl DecoderTable {
    fn fill(&mut self, from: usize, remaining: usize, syn: u32, lsig: &mut [u64], stack: &mut Vec<u32>, filled: &mut usize) {
        if remaining == 0 {
            let s = syn as usize;
            if self.start[s] == UNSET {
                self.start[s] = self.ops.len() as u32;
                self.len[s] = stack.len() as u8;
                self.ops.extend_from_slice(stack);
                self.logical[s * self.sig.lw..(s + 1) * self.sig.lw].copy_from_slice(lsig);
                *filled += 1;
            }
            return;
        }
        let size = self.start.len();
        for q in from..=(self.cm.n - remaining) {
            for o in 0..3 {
                if *filled == size {
                    return;
                }
                let idx = 3 * q + o;
                let s = syn ^ self.sig.syn[idx];
                xor_into(lsig, self.sig.logical_of(idx));
                stack.push(idx as u32);
                self.fill(q + 1, remaining - 1, s, lsig, stack, filled);
                stack.pop();
                let sig = &self.sig;
                xor_into(lsig, sig.logical_of(idx));
            }
        }
    }

    /// Number of entries, `2^r`.
    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    pub fn check_matrix(&self) -> &CheckMatrix {
        &self.cm
    }

    fn index(&self, syndrome: &BitVec) -> Result<usize> {
        if syndrome.len() != self.cm.checks.len() {
            return Err(Error::LengthMismatch(self.cm.checks.len(), syndrome.len()));
        }
        Ok(syndrome.ones().fold(0usize, |s, i| s | 1 << i))
    }

    pub fn correction(&self, syndrome: &BitVec) -> Result<PauliVec> {
        let s = self.index(syndrome)?;
        let n = self.cm.n;
        let (start, len) = (self.start[s] as usize, self.len[s] as usize);
        let mut p = PauliVec::identity(n);
        for &idx in &self.ops[start..start + len] {
            let idx = idx as usize;
            p = p.mul(&PauliVec::single(n, idx / 3, OPS[idx % 3]));
        }
        Ok(p)
    }

    /// Syndrome, correction, residual, failure test.
    pub fn decode_fails(&self, e: &PauliVec) -> Result<bool> {
        let s = syndrome_of(&self.cm, e)?;
        let residual = e.mul(&self.correction(&s)?);
        is_logical_failure(&self.cm, &residual)
    }

    fn trial<R: Rng>(&self, p: f64, rng: &mut R, lsig: &mut [u64]) -> bool {
        lsig.fill(0);
        let mut syn = 0u32;
        for q in 0..self.cm.n {
            if let Some(o) = draw_op(p, rng) {
                let idx = 3 * q + o;
                syn ^= self.sig.syn[idx];
                xor_into(lsig, self.sig.logical_of(idx));
            }
        }
        let lw = self.sig.lw;
        let s = syn as usize;
        lsig.iter().zip(&self.logical[s * lw..(s + 1) * lw]).any(|(a, b)| a != b)
    }
}

fn xor_into(acc: &mut [u64], other: &[u64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a ^= b;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseResult {
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    #[serde(rename = "eps_L")]
    pub eps_l: f64,
    pub std_err: f64,
}

impl NoiseResult {
    pub fn new(p: f64, trials: u64, failures: u64) -> Self {
        let eps_l = if trials == 0 { 0.0 } else { failures as f64 / trials as f64 };
        let std_err = if trials == 0 { 0.0 } else { (eps_l * (1.0 - eps_l) / trials as f64).sqrt() };
        NoiseResult {
            p,
            trials,
            failures,
            eps_l,
            std_err,
        }
    }
}

/// Monte Carlo estimate. Trials are split into chunks of
/// [`CHUNK_TRIALS`], chunk `i` drawing from stream `i` of `seed`, so the
/// result does not depend on the thread count.
pub fn estimate_logical_error_rate(table: &DecoderTable, p: f64, trials: u64, seed: u64) -> Result<NoiseResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("physical error rate {p} outside [0, 1]")));
    }
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let failures: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS);
            let mut lsig = vec![0u64; table.sig.lw];
            (0..count).filter(|_| table.trial(p, &mut rng, &mut lsig)).count() as u64
        })
        .sum();
    Ok(NoiseResult::new(p, trials, failures))
}

/// Least-squares slope of `ln eps_L` against `ln p` over points with
/// `eps_L > 0`.
pub fn fit_threshold_slope(results: &[NoiseResult]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.eps_l > 0.0 && r.p > 0.0)
        .map(|r| (r.p.ln(), r.eps_l.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints(pts.len()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints(1));
    }
    Ok(sxy / sxx)
}

/// Graph with input 0 joined to every output of the 5-cycle on 1..=5;
/// encodes one qubit with distance 3.
pub fn pentagon_graph() -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..=5).map(|v| (0, v)).collect();
    edges.extend((0..5).map(|i| (1 + i, 1 + (i + 1) % 5)));
    Graph::with_edges(5, 1, edges).expect("valid pentagon graph")
}

pub fn pentagon_fixture() -> CheckMatrix {
    let code = GraphCode::build(&pentagon_graph(), crate::code::Backend::InputOutput).expect("pentagon code builds");
    CheckMatrix::from_code(&code).expect("pentagon checks are valid")
}

/// Rotated distance-3 surface code on a 3x3 grid, qubit `3 * row + col`.
pub fn surface_d3_fixture() -> CheckMatrix {
    let typed = |op: char, qs: &[usize]| {
        let mut p = PauliVec::identity(9);
        for &q in qs {
            p = p.mul(&PauliVec::single(9, q, op));
        }
        p
    };
    let checks = vec![
        typed('X', &[1, 2, 4, 5]),
        typed('X', &[3, 4, 6, 7]),
        typed('X', &[0, 1]),
        typed('X', &[7, 8]),
        typed('Z', &[0, 1, 3, 4]),
        typed('Z', &[4, 5, 7, 8]),
        typed('Z', &[2, 5]),
        typed('Z', &[3, 6]),
    ];
    let logicals = vec![typed('Z', &[0, 1, 2]), typed('X', &[0, 3, 6])];
    CheckMatrix::new(checks, logicals).expect("surface code checks are valid")
}

/// Fixture by name: `pentagon` or `surface3`.
pub fn fixture(name: &str) -> Result<CheckMatrix> {
    match name {
        "pentagon" => Ok(pentagon_fixture()),
        "surface3" => Ok(surface_d3_fixture()),
        other => Err(Error::Config(format!("unknown fixture `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(s: &str) -> PauliVec {
        s.parse().unwrap()
    }

    fn all_paulis(n: usize) -> impl Iterator<Item = (PauliVec, usize)> {
        (0..4usize.pow(n as u32)).map(move |mut code| {
            let mut p = PauliVec::identity(n);
            for q in 0..n {
                match code % 4 {
                    1 => p.x.set(q, true),
                    2 => {
                        p.x.set(q, true);
                        p.z.set(q, true)
                    }
                    3 => p.z.set(q, true),
                    _ => {}
                }
                code /= 4;
            }
            let w = p.weight();
            (p, w)
        })
    }

    fn exact_rate(table: &DecoderTable, p: f64) -> f64 {
        let n = table.check_matrix().n();
        all_paulis(n)
            .filter(|(e, _)| table.decode_fails(e).unwrap())
            .map(|(_, w)| (p / 3.0).powi(w as i32) * (1.0 - p).powi((n - w) as i32))
            .sum()
    }

    #[test]
    fn depolarizing_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_depolarizing(20, 0.0, &mut rng).is_identity());
        let e = sample_depolarizing(20, 1.0, &mut rng);
        assert_eq!(e.weight(), 20);
    }

    #[test]
    fn depolarizing_x_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let xs = (0..draws)
            .filter(|_| sample_depolarizing(1, 0.3, &mut rng).op_at(0) == 'X')
            .count() as f64;
        let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
        assert!((xs - 0.1 * draws as f64).abs() < 3.0 * sigma, "{xs}");
    }

    #[test]
    fn fixtures_have_expected_shape() {
        let pent = pentagon_fixture();
        assert_eq!((pent.n(), pent.k(), pent.n_checks()), (5, 1, 4));
        let surf = surface_d3_fixture();
        assert_eq!((surf.n(), surf.k(), surf.n_checks()), (9, 1, 8));
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn check_matrix_validation() {
        let xx = pv("XX");
        let zi = pv("ZI");
        assert!(CheckMatrix::new(vec![xx.clone(), zi.clone()], vec![]).is_err());
        assert!(CheckMatrix::new(vec![xx.clone(), xx.clone()], vec![]).is_err());
        assert!(CheckMatrix::new(vec![xx.clone()], vec![zi.clone(), pv("XI")]).is_err());
        assert!(CheckMatrix::new(vec![xx.clone()], vec![pv("ZZ")]).is_err());
        let ok = CheckMatrix::new(vec![xx], vec![pv("XI"), pv("ZZ")]).unwrap();
        assert_eq!(ok.k(), 1);
    }

    #[test]
    fn syndrome_examples() {
        let cm = pentagon_fixture();
        let n = cm.n();
        assert!(syndrome_of(&cm, &PauliVec::identity(n)).unwrap().is_zero());
        for c in cm.checks() {
            assert!(syndrome_of(&cm, c).unwrap().is_zero());
        }
        let l = &cm.logicals()[1];
        assert!(syndrome_of(&cm, l).unwrap().is_zero());
        assert!(!l.commutes_with(&cm.logicals()[0]));
        assert!(syndrome_of(&cm, &PauliVec::identity(n + 1)).is_err());
    }

    #[test]
    fn failure_examples() {
        let cm = pentagon_fixture();
        assert!(!is_logical_failure(&cm, &PauliVec::identity(5)).unwrap());
        assert!(!is_logical_failure(&cm, &cm.checks()[2]).unwrap());
        assert!(is_logical_failure(&cm, &cm.logicals()[0]).unwrap());
        assert!(matches!(
            is_logical_failure(&cm, &PauliVec::single(5, 0, 'X')),
            Err(Error::NonzeroSyndrome)
        ));
    }

    #[test]
    fn pentagon_table_is_optimal() {
        let cm = pentagon_fixture();
        let table = build_decoder_table(&cm).unwrap();
        assert_eq!(table.len(), 16);
        assert!(table.correction(&BitVec::zeros(4)).unwrap().is_identity());
        let mut best = vec![usize::MAX; 16];
        for (e, w) in all_paulis(5) {
            let s = table.index(&syndrome_of(&cm, &e).unwrap()).unwrap();
            best[s] = best[s].min(w);
        }
        for s in 0..16 {
            let bits = BitVec::from_indices(4, (0..4).filter(|i| s >> i & 1 == 1));
            let c = table.correction(&bits).unwrap();
            assert_eq!(syndrome_of(&cm, &c).unwrap(), bits);
            assert_eq!(c.weight(), best[s]);
        }
        for q in 0..5 {
            for op in OPS {
                let e = PauliVec::single(5, q, op);
                let c = table.correction(&syndrome_of(&cm, &e).unwrap()).unwrap();
                assert_eq!(c.weight(), 1);
                assert!(!table.decode_fails(&e).unwrap());
            }
        }
    }

    #[test]
    fn correctable_errors_never_fail() {
        for cm in [pentagon_fixture(), surface_d3_fixture()] {
            let table = build_decoder_table(&cm).unwrap();
            for (e, w) in all_paulis(cm.n()) {
                if w <= 1 {
                    assert!(!table.decode_fails(&e).unwrap());
                }
            }
        }
    }

    #[test]
    fn too_many_checks() {
        let n = 26;
        let checks: Vec<PauliVec> = (0..25).map(|q| PauliVec::single(n, q, 'Z')).collect();
        let cm = CheckMatrix::new(checks, vec![]).unwrap();
        assert!(matches!(build_decoder_table(&cm), Err(Error::TooManyChecks(25))));
    }

    #[test]
    fn monte_carlo_matches_enumeration() {
        for cm in [pentagon_fixture(), surface_d3_fixture()] {
            let table = build_decoder_table(&cm).unwrap();
            for p in [0.01, 0.05] {
                let exact = exact_rate(&table, p);
                let r = estimate_logical_error_rate(&table, p, 40_000, 5).unwrap();
                let se = (exact * (1.0 - exact) / r.trials as f64).sqrt();
                assert!((r.eps_l - exact).abs() < 3.0 * se, "p={p}: {} vs {exact}", r.eps_l);
            }
        }
    }

    #[test]
    fn monte_carlo_properties() {
        let table = build_decoder_table(&surface_d3_fixture()).unwrap();
        assert_eq!(estimate_logical_error_rate(&table, 0.0, 10_000, 1).unwrap().failures, 0);
        let a = estimate_logical_error_rate(&table, 0.02, 10_000, 9).unwrap();
        assert_eq!(a, estimate_logical_error_rate(&table, 0.02, 10_000, 9).unwrap());
        let lo = estimate_logical_error_rate(&table, 0.01, 50_000, 3).unwrap();
        let hi = estimate_logical_error_rate(&table, 0.05, 50_000, 3).unwrap();
        assert!(hi.eps_l + 3.0 * hi.std_err >= lo.eps_l);
        assert!(hi.eps_l > lo.eps_l);
        assert!(estimate_logical_error_rate(&table, 1.5, 10, 0).is_err());
    }

    #[test]
    fn pentagon_near_ten_p_squared() {
        let table = build_decoder_table(&pentagon_fixture()).unwrap();
        let eps = exact_rate(&table, 1e-2);
        assert!(eps > 5e-4 && eps < 2e-3, "{eps}");
    }

    #[test]
    fn slope_fits() {
        let synth: Vec<NoiseResult> = [1e-3, 3e-3, 1e-2, 3e-2]
            .iter()
            .map(|&p| NoiseResult {
                eps_l: 7.0 * p * p,
                ..NoiseResult::new(p, 1, 0)
            })
            .collect();
        assert!((fit_threshold_slope(&synth).unwrap() - 2.0).abs() < 1e-6);
        let flat: Vec<NoiseResult> = synth.iter().map(|r| NoiseResult { eps_l: 0.01, ..*r }).collect();
        assert!(fit_threshold_slope(&flat).unwrap().abs() < 1e-12);
        assert!(matches!(fit_threshold_slope(&synth[..2]), Err(Error::InsufficientPoints(2))));
    }

    #[test]
    fn std_err_formula() {
        let r = NoiseResult::new(0.1, 400, 100);
        assert_eq!(r.eps_l, 0.25);
        assert!((r.std_err - (0.25f64 * 0.75 / 400.0).sqrt()).abs() < 1e-15);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"eps_L\""));
    }
}
