//! Dense bit vectors and matrices over F2.
//!
//! Rows are packed into `u64` words, lowest column in the lowest bit of the
//! first word. All sizes used by the engine are at most a few hundred
//! columns, so plain `Vec<u64>` storage is enough.

use std::fmt;

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in ones {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// In-place `self ^= other`.
    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn and_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn or(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        BitVec {
            len: self.len,
            words,
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product over F2.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let tz = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.ones().next()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Row-major bit matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from explicit rows; every row must have `cols` bits.
    pub fn from_rows(cols: usize, rows: Vec<BitVec>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { cols, rows }
    }

    pub fn from_bools(rows: &[Vec<bool>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows(cols, rows.iter().map(|r| BitVec::from_bools(r)).collect())
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value)
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.rows[r].flip(c)
    }

    pub fn row(&self, r: usize) -> &BitVec {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn column(&self, c: usize) -> BitVec {
        BitVec::from_indices(
            self.n_rows(),
            (0..self.n_rows()).filter(|&r| self.get(r, c)),
        )
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.n_rows());
        for (r, row) in self.rows.iter().enumerate() {
            for c in row.ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        BitVec::from_indices(
            self.n_rows(),
            self.rows
                .iter()
                .enumerate()
                .filter(|(_, row)| row.dot(v))
                .map(|(r, _)| r),
        )
    }

    /// Rank over F2. The matrix is left untouched.
    pub fn rank(&self) -> usize {
        self.clone().row_reduce().len()
    }

    /// Reduces `self` in place to reduced row echelon form and returns the
    /// pivot columns, one per nonzero row. Pivots are chosen lowest column
    /// first, so the result is deterministic. Zero rows end up at the bottom.
    pub fn row_reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..self.cols {
            if next == self.rows.len() {
                break;
            }
            let Some(found) = (next..self.rows.len()).find(|&r| self.rows[r].get(col)) else {
                continue;
            };
            self.rows.swap(next, found);
            let pivot_row = self.rows[next].clone();
            for (r, row) in self.rows.iter_mut().enumerate() {
                if r != next && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
        }
        pivots
    }

    /// Basis of the row space in reduced row echelon form, with its pivots.
    pub fn row_space_basis(&self) -> (Vec<BitVec>, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.row_reduce();
        let mut rows = m.rows;
        rows.truncate(pivots.len());
        (rows, pivots)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.n_rows(), self.cols)?;
        for row in &self.rows {
            writeln!(f, "{row:?}")?;
        }
        Ok(())
    }
}

/// Basis of the orthogonal complement of the span of an RREF basis.
///
/// `basis` must be in reduced row echelon form with the given pivots (as
/// returned by [`BitMatrix::row_space_basis`]). One vector is produced per
/// non-pivot column `c`: `e_c + sum_j basis[j][c] * e_{pivot_j}`.
pub fn orthogonal_complement(len: usize, basis: &[BitVec], pivots: &[usize]) -> Vec<BitVec> {
    let mut is_pivot = vec![false; len];
    for &p in pivots {
        is_pivot[p] = true;
    }
    (0..len)
        .filter(|&c| !is_pivot[c])
        .map(|c| {
            let mut h = BitVec::unit(len, c);
            for (row, &p) in basis.iter().zip(pivots) {
                if row.get(c) {
                    h.set(p, true);
                }
            }
            h
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_adjacency(n: usize) -> BitMatrix {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            m.set(i, j, true);
            m.set(j, i, true);
        }
        m
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BitMatrix::identity(3).rank(), 3);
        assert_eq!(BitMatrix::zeros(4, 7).rank(), 0);
        // C5 adjacency: rows sum to zero (each column has two ones), and any
        // four rows are independent.
        assert_eq!(cycle_adjacency(5).rank(), 4);
        assert_eq!(cycle_adjacency(4).rank(), 2);
    }

    #[test]
    fn rank_leaves_input_untouched() {
        let m = cycle_adjacency(6);
        let before = m.clone();
        let _ = m.rank();
        assert_eq!(m, before);
    }

    #[test]
    fn rref_pivots_lowest_first() {
        let mut m = BitMatrix::from_bools(&[
            vec![false, true, true],
            vec![true, true, false],
            vec![true, false, true],
        ]);
        let pivots = m.row_reduce();
        assert_eq!(pivots, vec![0, 1]);
        assert_eq!(m.row(0), &BitVec::from_bools(&[true, false, true]));
        assert_eq!(m.row(1), &BitVec::from_bools(&[false, true, true]));
        assert!(m.row(2).is_zero());
    }

    #[test]
    fn complement_is_orthogonal_and_full() {
        let m = BitMatrix::from_bools(&[
            vec![true, true, false, true, false],
            vec![false, true, true, false, true],
        ]);
        let (basis, pivots) = m.row_space_basis();
        let comp = orthogonal_complement(5, &basis, &pivots);
        assert_eq!(comp.len(), 3);
        for h in &comp {
            for g in &basis {
                assert!(!h.dot(g));
            }
        }
        assert_eq!(BitMatrix::from_rows(5, comp).rank(), 3);
    }

    #[test]
    fn ones_iterates_across_words() {
        let v = BitVec::from_indices(200, [0, 63, 64, 130, 199]);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![0, 63, 64, 130, 199]);
        assert_eq!(v.count_ones(), 5);
    }
}
