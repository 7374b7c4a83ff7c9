//! Bit-packed dense linear algebra over GF(2).
//!
//! Rows are packed into 64-bit words, least significant bit first. Every
//! operation keeps the padding bits past `cols` in the last word of a row
//! cleared, so word-level comparisons and popcounts are exact.

use std::fmt;

use thiserror::Error;

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("row space of the subtracted matrix is not contained in the row space of the base matrix")]
    NotASubspace,
}

/// A packed vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
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

    pub fn from_ones(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in ones {
            v.toggle(i);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_ones(bits.len(), bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i))
    }

    pub fn from_words(len: usize, words: &[u64]) -> Self {
        assert!(words.len() >= words_for(len));
        let mut v = Self {
            len,
            words: words[..words_for(len)].to_vec(),
        };
        v.mask_tail();
        v
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
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
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        xor_words(&mut self.words, &other.words);
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        parity_and(&self.words, &other.words)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        iter_ones(&self.words)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "BitVec[{s}]")
    }
}

#[inline]
pub(crate) fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

#[inline]
pub(crate) fn parity_and(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum::<u32>() & 1 == 1
}

pub(crate) fn iter_ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + b)
            }
        })
    })
}

/// Dense row-major bit matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from the column indices of the ones in each row.
    pub fn from_row_ones(cols: usize, rows: &[Vec<usize>]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, ones) in rows.iter().enumerate() {
            for &c in ones {
                m.toggle(r, c);
            }
        }
        m
    }

    pub fn from_dense(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged dense matrix");
            for (c, &b) in row.iter().enumerate() {
                if b != 0 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[BitVec]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, v) in rows.iter().enumerate() {
            assert_eq!(v.len(), cols);
            m.row_mut(r).copy_from_slice(v.words());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, r: usize, c: usize) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.stride + c / WORD] ^= 1u64 << (c % WORD);
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_vec(&self, r: usize) -> BitVec {
        BitVec {
            len: self.cols,
            words: self.row(r).to_vec(),
        }
    }

    pub fn row_ones(&self, r: usize) -> Vec<usize> {
        iter_ones(self.row(r)).collect()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_ones(&self, c: usize) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `row[dst] ^= row[src]`.
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s] as &[u64], &mut lo[dst * s..(dst + 1) * s])
        };
        xor_words(b, a);
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in iter_ones(self.row(r)) {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let stride = out.stride;
            for k in iter_ones(self.row(r)) {
                let src = other.row(k);
                xor_words(&mut out.data[r * stride..(r + 1) * stride], src);
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self · v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if parity_and(self.row(r), v.words()) {
                out.set(r, true);
            }
        }
        out
    }

    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for r in 0..self.rows {
            for c in iter_ones(self.row(r)) {
                for rr in 0..other.rows {
                    for cc in iter_ones(other.row(rr)) {
                        out.set(r * other.rows + rr, c * other.cols + cc, true);
                    }
                }
            }
        }
        out
    }

    pub fn hstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut out = BitMatrix::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in iter_ones(self.row(r)) {
                out.set(r, c, true);
            }
            for c in iter_ones(other.row(r)) {
                out.set(r, self.cols + c, true);
            }
        }
        out
    }

    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        BitMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            stride: self.stride,
            data,
        }
    }

    pub fn add(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        xor_words(&mut out.data, &other.data);
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows.len(), self.cols);
        for (i, &r) in rows.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(r));
        }
        out
    }

    pub fn select_cols(&self, cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (i, &c) in cols.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, i, true);
                }
            }
        }
        out
    }

    /// Reduced row echelon form with lowest-index pivot choice. Returns the
    /// reduced matrix (zero rows last) and the pivot column of each nonzero row.
    pub fn rref(&self) -> (BitMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    pub(crate) fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..self.cols {
            if lead == self.rows {
                break;
            }
            let Some(p) = (lead..self.rows).find(|&r| self.get(r, c)) else {
                continue;
            };
            self.swap_rows(lead, p);
            for r in 0..self.rows {
                if r != lead && self.get(r, c) {
                    self.xor_row_into(lead, r);
                }
            }
            pivots.push(c);
            lead += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(rank, p);
            for r in rank + 1..m.rows {
                if m.get(r, c) {
                    m.xor_row_into(rank, r);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Basis of `{v : self · v = 0}`, one vector per row.
    pub fn nullspace(&self) -> BitMatrix {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut out = BitMatrix::zeros(free.len(), self.cols);
        for (i, &f) in free.iter().enumerate() {
            out.set(i, f, true);
            for (row, &p) in pivots.iter().enumerate() {
                if r.get(row, f) {
                    out.set(i, p, true);
                }
            }
        }
        out
    }

    /// Inverse of a square matrix, if it exists.
    pub fn inverse(&self) -> Option<BitMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = self.hstack(&BitMatrix::identity(n));
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(aug.select_cols(&(n..2 * n).collect::<Vec<_>>()))
    }

    /// Rows of `self` (in order) that extend the row space of `base` to the
    /// row space of `self`.
    ///
    /// Requires rowspace(`base`) ⊆ rowspace(`self`); the result has
    /// `rank(self) - rank(base)` rows.
    pub fn quotient_basis(&self, base: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != base.cols {
            return Err(Gf2Error::Dimension(format!("{} vs {} columns", self.cols, base.cols)));
        }
        if self.vstack(base).rank() != self.rank() {
            return Err(Gf2Error::NotASubspace);
        }
        let mut basis = XorBasis::new(self.cols);
        for r in 0..base.rows {
            basis.insert(base.row(r).to_vec());
        }
        let mut chosen = Vec::new();
        for r in 0..self.rows {
            if basis.insert(self.row(r).to_vec()) {
                chosen.push(r);
            }
        }
        Ok(self.select_rows(&chosen))
    }

    /// True when `v` lies in the row space of `self`.
    pub fn row_space_contains(&self, v: &BitVec) -> bool {
        let mut basis = XorBasis::new(self.cols);
        for r in 0..self.rows {
            basis.insert(self.row(r).to_vec());
        }
        basis.reduce(v.words().to_vec()).iter().all(|&w| w == 0)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let s: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '.' }).collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Incremental echelon basis used for membership tests and quotient spaces.
#[derive(Clone, Debug)]
pub struct XorBasis {
    cols: usize,
    // (pivot column, vector); each vector has its pivot as lowest set bit and
    // no other basis vector has that bit set.
    rows: Vec<(usize, Vec<u64>)>,
}

impl XorBasis {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    pub fn from_matrix(m: &BitMatrix) -> Self {
        let mut b = Self::new(m.cols());
        for r in 0..m.rows() {
            b.insert(m.row(r).to_vec());
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn reduce(&self, mut v: Vec<u64>) -> Vec<u64> {
        debug_assert_eq!(v.len(), words_for(self.cols));
        for (p, row) in &self.rows {
            if (v[p / WORD] >> (p % WORD)) & 1 == 1 {
                xor_words(&mut v, row);
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v.to_vec()).iter().all(|&w| w == 0)
    }

    /// Adds `v` to the span; returns false when it was already dependent.
    pub fn insert(&mut self, v: Vec<u64>) -> bool {
        let v = self.reduce(v);
        let Some(p) = iter_ones(&v).next() else {
            return false;
        };
        for (_, row) in &mut self.rows {
            if (row[p / WORD] >> (p % WORD)) & 1 == 1 {
                xor_words(row, &v);
            }
        }
        self.rows.push((p, v));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_matrix(rows: usize, cols: usize, bits: &[bool]) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if bits[(r * cols + c) % bits.len()] {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(BitMatrix::identity(3).rank(), 3);
        assert_eq!(BitMatrix::zeros(4, 5).rank(), 0);
        assert_eq!(BitMatrix::zeros(0, 0).rank(), 0);
    }

    #[test]
    fn nullspace_trivial_cases() {
        assert_eq!(BitMatrix::identity(4).nullspace().rows(), 0);
        let z = BitMatrix::zeros(2, 3).nullspace();
        assert_eq!(z.rows(), 3);
        assert_eq!(z.rank(), 3);
    }

    #[test]
    fn quotient_of_identity_by_first_row() {
        let n = BitMatrix::identity(2);
        let r = BitMatrix::from_dense(&[&[1, 0]]);
        let q = n.quotient_basis(&r).unwrap();
        assert_eq!(q.rows(), 1);
        // (0,1) up to the coset of (1,0)
        assert!(q.get(0, 1));
    }

    #[test]
    fn quotient_rejects_non_subspace() {
        let n = BitMatrix::from_dense(&[&[1, 0, 0]]);
        let r = BitMatrix::from_dense(&[&[0, 1, 0]]);
        assert_eq!(n.quotient_basis(&r), Err(Gf2Error::NotASubspace));
    }

    #[test]
    fn padding_bits_stay_clear() {
        let mut m = BitMatrix::zeros(3, 70);
        m.set(0, 69, true);
        m.set(1, 0, true);
        m.xor_row_into(0, 2);
        let t = m.transpose().transpose();
        assert_eq!(t, m);
        assert_eq!(m.row(2)[1] >> 6, 0);
    }

    #[test]
    fn inverse_round_trip() {
        let m = BitMatrix::from_dense(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), BitMatrix::identity(3));
        let singular = BitMatrix::from_dense(&[&[1, 1], &[1, 1]]);
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn kron_of_permutations() {
        let a = BitMatrix::from_dense(&[&[0, 1], &[1, 0]]);
        let k = a.kron(&BitMatrix::identity(2));
        assert_eq!(k.rows(), 4);
        assert!(k.get(0, 2) && k.get(1, 3) && k.get(2, 0) && k.get(3, 1));
        assert_eq!(k.count_ones(), 4);
    }

    proptest! {
        #[test]
        fn rank_equals_rank_of_transpose(rows in 1usize..20, cols in 1usize..90,
                                         bits in prop::collection::vec(any::<bool>(), 1..400)) {
            let m = random_matrix(rows, cols, &bits);
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn nullspace_rows_are_annihilated(rows in 1usize..16, cols in 1usize..80,
                                          bits in prop::collection::vec(any::<bool>(), 1..300)) {
            let m = random_matrix(rows, cols, &bits);
            let ns = m.nullspace();
            prop_assert_eq!(ns.rows(), cols - m.rank());
            prop_assert_eq!(ns.rank(), ns.rows());
            for r in 0..ns.rows() {
                prop_assert!(m.mul_vec(&ns.row_vec(r)).is_zero());
            }
        }

        #[test]
        fn rref_is_idempotent(rows in 1usize..16, cols in 1usize..80,
                              bits in prop::collection::vec(any::<bool>(), 1..300)) {
            let m = random_matrix(rows, cols, &bits);
            let (r1, p1) = m.rref();
            let (r2, p2) = r1.rref();
            prop_assert_eq!(r1.rank(), m.rank());
            prop_assert_eq!(&r1, &r2);
            prop_assert_eq!(p1, p2);
        }
    }
}
