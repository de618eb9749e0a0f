//! Bit-packed linear algebra over GF(2).
//!
//! Vectors and matrix rows are stored as `u64` words; addition is XOR.
//! All indices in this module are 0-based.

use std::fmt;

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A vector over GF(2) of fixed length.
///
/// Bits at positions `>= len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    /// Standard basis vector `e_i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    /// Indicator vector of `indices`.
    pub fn indicator(len: usize, indices: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in indices {
            v.set(i, true);
        }
        v
    }

    /// Builds a vector from 0/1 entries; any nonzero entry counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector of length `len <= 64` from the low bits of `mask`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= WORD, "from_mask supports at most 64 coordinates");
        let mut v = Self::zeros(len);
        if len > 0 {
            let keep = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = mask & keep;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "coordinate {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "coordinate {i} out of range for length {}", self.len);
        let bit = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= bit;
        } else {
            self.words[i / WORD] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "coordinate {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        let ones: u32 = self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum();
        ones % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Lowest set coordinate, if any.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD + w.trailing_zeros() as usize)
    }

    /// Set coordinates in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    /// True iff every set coordinate lies in `allowed` (sorted or not).
    pub fn support_within(&self, allowed: &[usize]) -> bool {
        self.ones().all(|i| allowed.contains(&i))
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.len {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

/// A dense binary matrix stored row by row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { cols, rows: vec![BitVector::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        Self { cols: n, rows: (0..n).map(|i| BitVector::unit(n, i)).collect() }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let all: Vec<usize> = (0..cols).collect();
        Self { cols, rows: vec![BitVector::indicator(cols, &all); rows] }
    }

    /// Panics if the rows do not share `cols`.
    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "row length must equal column count");
        Self { cols, rows }
    }

    /// Builds a matrix from nested 0/1 entries.
    pub fn from_bits(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(cols, rows.iter().map(|r| BitVector::from_bits(r)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVector::is_zero)
    }

    /// Submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> BitMatrix {
        let out = rows
            .iter()
            .map(|&r| {
                let mut v = BitVector::zeros(cols.len());
                for (j, &c) in cols.iter().enumerate() {
                    if self.get(r, c) {
                        v.set(j, true);
                    }
                }
                v
            })
            .collect();
        BitMatrix::from_rows(cols.len(), out)
    }

    pub fn rank(&self) -> usize {
        let mut basis = EchelonBasis::new(self.cols);
        self.rows.iter().filter(|r| basis.insert(r)).count()
    }

    /// Indices of a spanning subset of rows, chosen greedily in ascending
    /// row order: a row is kept iff it is independent of the rows kept so far.
    pub fn spanning_rows(&self) -> Vec<usize> {
        let mut basis = EchelonBasis::new(self.cols);
        (0..self.rows.len()).filter(|&i| basis.insert(&self.rows[i])).collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

/// Row-echelon basis keyed by the lowest set coordinate of each stored vector.
struct EchelonBasis {
    pivots: Vec<Option<BitVector>>,
}

impl EchelonBasis {
    fn new(dim: usize) -> Self {
        Self { pivots: vec![None; dim] }
    }

    fn reduce(&self, v: &mut BitVector) {
        while let Some(p) = v.first_one() {
            match &self.pivots[p] {
                Some(b) => v.xor_assign(b),
                None => return,
            }
        }
    }

    /// Returns true iff `v` was independent and has been added.
    fn insert(&mut self, v: &BitVector) -> bool {
        let mut w = v.clone();
        self.reduce(&mut w);
        match w.first_one() {
            Some(p) => {
                self.pivots[p] = Some(w);
                true
            }
            None => false,
        }
    }
}

/// Finds `lambda` with `XOR_{j : lambda_j = 1} basis[j] == v`.
///
/// `basis` need not be independent. Elimination runs over `basis` in the
/// given order, so the returned combination is deterministic. Returns `None`
/// when `v` is outside the span.
pub fn express_in_span(v: &BitVector, basis: &[BitVector]) -> Option<BitVector> {
    let dim = v.len();
    // pivot slot -> (reduced vector, combination of basis vectors producing it)
    let mut pivots: Vec<Option<(BitVector, BitVector)>> = vec![None; dim];
    let reduce = |pivots: &[Option<(BitVector, BitVector)>], vec: &mut BitVector, combo: &mut BitVector| {
        while let Some(p) = vec.first_one() {
            match &pivots[p] {
                Some((b, c)) => {
                    vec.xor_assign(b);
                    combo.xor_assign(c);
                }
                None => return,
            }
        }
    };

    for (j, b) in basis.iter().enumerate() {
        assert_eq!(b.len(), dim, "basis vector {j} has the wrong length");
        let mut vec = b.clone();
        let mut combo = BitVector::unit(basis.len(), j);
        reduce(&pivots, &mut vec, &mut combo);
        if let Some(p) = vec.first_one() {
            pivots[p] = Some((vec, combo));
        }
    }

    let mut rest = v.clone();
    let mut combo = BitVector::zeros(basis.len());
    reduce(&pivots, &mut rest, &mut combo);
    rest.is_zero().then_some(combo)
}

/// True iff `target` lies in the span of `code_rows` together with the unit
/// vectors `e_j` for `j` in `side_idx`.
pub fn in_span_with_side_info(target: &BitVector, code_rows: &[BitVector], side_idx: &[usize]) -> bool {
    let dim = target.len();
    let mut basis = EchelonBasis::new(dim);
    for r in code_rows {
        basis.insert(r);
    }
    for &j in side_idx {
        basis.insert(&BitVector::unit(dim, j));
    }
    let mut t = target.clone();
    basis.reduce(&mut t);
    t.is_zero()
}

/// Incremental rank tracker over packed rows of `words` u64 each.
///
/// Rows are reduced against stored pivots from the highest coordinate down;
/// a newly independent row occupies the slot of its highest set coordinate.
/// Stored slots are never modified again, so [`XorBasis::remove_slot`] undoes
/// an insertion exactly. Used by the exhaustive search hot loop.
#[derive(Clone, Debug)]
pub struct XorBasis {
    words: usize,
    slots: Vec<u64>,
    occupied: Vec<bool>,
    rank: usize,
    scratch: Vec<u64>,
}

impl XorBasis {
    pub fn new(dim: usize) -> Self {
        let words = words_for(dim).max(1);
        Self {
            words,
            slots: vec![0; dim * words],
            occupied: vec![false; dim],
            rank: 0,
            scratch: vec![0; words],
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn highest_bit(row: &[u64]) -> Option<usize> {
        row.iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * WORD + (WORD - 1 - w.leading_zeros() as usize))
    }

    /// Inserts `row`; returns the slot it occupies if it was independent.
    pub fn insert(&mut self, row: &[u64]) -> Option<usize> {
        debug_assert_eq!(row.len(), self.words);
        self.scratch.copy_from_slice(row);
        while let Some(h) = Self::highest_bit(&self.scratch) {
            if !self.occupied[h] {
                let w = self.words;
                self.slots[h * w..(h + 1) * w].copy_from_slice(&self.scratch);
                self.occupied[h] = true;
                self.rank += 1;
                return Some(h);
            }
            let w = self.words;
            for (s, b) in self.scratch.iter_mut().zip(&self.slots[h * w..(h + 1) * w]) {
                *s ^= b;
            }
        }
        None
    }

    pub fn remove_slot(&mut self, slot: usize) {
        assert!(self.occupied[slot], "slot {slot} is empty");
        self.occupied[slot] = false;
        self.rank -= 1;
    }
}
