//! Dense linear algebra over GF(2).
//!
//! Bit `0` of a vector is its most significant position for lexicographic
//! comparisons, matching the eigenvector column order.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{invalid, Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(WORD)] }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Parses `"0110"`-style strings; whitespace is ignored.
    pub fn from_bits_str(s: &str) -> Result<Self> {
        let bits: Result<Vec<bool>> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid(format!("not a bit: {other:?}"))),
            })
            .collect();
        Ok(Self::from_bools(&bits?))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &BitVector) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Lowest set index (the most significant bit), if any.
    pub fn leading_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn to_u8s(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Restriction to the given coordinates, in order.
    pub fn select(&self, coords: &[usize]) -> BitVector {
        BitVector::from_bools(&coords.iter().map(|&c| self.get(c)).collect::<Vec<_>>())
    }

    /// Zero-padded embedding: bit `i` of `self` lands on coordinate `coords[i]`.
    pub fn embed(&self, coords: &[usize], len: usize) -> BitVector {
        debug_assert_eq!(coords.len(), self.len);
        let mut out = BitVector::zeros(len);
        for (i, &c) in coords.iter().enumerate() {
            if self.get(i) {
                out.set(c, true);
            }
        }
        out
    }
}

impl Ord for BitVector {
    /// Lexicographic with bit 0 most significant and `0 < 1`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            for (a, b) in self.words.iter().zip(&other.words) {
                if a != b {
                    let lowest = (a ^ b).trailing_zeros();
                    return if (a >> lowest) & 1 == 1 { Ordering::Greater } else { Ordering::Less };
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Row-major dense bit matrix with a fixed column count.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { cols, rows: vec![BitVector::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        Self { cols: n, rows: (0..n).map(|i| BitVector::unit(n, i)).collect() }
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(invalid(format!("row of length {} in a {cols}-column matrix", r.len())));
        }
        Ok(Self { cols, rows })
    }

    /// Rows given as 0/1 strings, e.g. `["110", "011"]`.
    pub fn from_strs(cols: usize, rows: &[&str]) -> Result<Self> {
        let rows = rows.iter().map(|s| BitVector::from_bits_str(s)).collect::<Result<Vec<_>>>()?;
        Self::from_rows(cols, rows)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn push_row(&mut self, row: BitVector) -> Result<()> {
        if row.len() != self.cols {
            return Err(invalid(format!(
                "cannot append a length-{} row to a {}-column matrix",
                row.len(),
                self.cols
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// `M v` over GF(2).
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(invalid(format!("vector length {} != {} columns", v.len(), self.cols)));
        }
        Ok(BitVector::from_bools(&self.rows.iter().map(|r| r.dot(v)).collect::<Vec<_>>()))
    }

    pub fn rank(&self) -> usize {
        row_reduce(self).rank
    }

    /// Text grid of `0`/`1`, one row per line.
    pub fn to_grid(&self) -> String {
        self.rows.iter().map(|r| format!("{r}\n")).collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.nrows(), self.cols)?;
        f.write_str(&self.to_grid())
    }
}

/// Reduced row-echelon form together with its rank and pivot columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduced {
    /// Nonzero rows only, pivots strictly increasing.
    pub matrix: BitMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

pub fn row_reduce(m: &BitMatrix) -> Reduced {
    let mut rows = m.rows.clone();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..m.cols {
        let Some(found) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(rank, found);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    Reduced { matrix: BitMatrix { cols: m.cols, rows }, rank, pivots }
}

impl Reduced {
    /// Reduces `v` against the echelon rows; zero iff `v` is in the row space.
    pub fn reduce(&self, v: &BitVector) -> BitVector {
        let mut out = v.clone();
        for (row, &p) in self.matrix.rows.iter().zip(&self.pivots) {
            if out.get(p) {
                out.xor_assign(row);
            }
        }
        out
    }
}

pub fn in_rowspace(m: &BitMatrix, v: &BitVector) -> Result<bool> {
    if v.len() != m.cols {
        return Err(invalid(format!("vector length {} != {} columns", v.len(), m.cols)));
    }
    Ok(row_reduce(m).reduce(v).is_zero())
}

/// Basis of `{x : M x = 0}` read off the free columns of an echelon form.
fn nullspace(reduced: &Reduced) -> BitMatrix {
    let cols = reduced.matrix.cols;
    let mut is_pivot = vec![false; cols];
    for &p in &reduced.pivots {
        is_pivot[p] = true;
    }
    let mut out = BitMatrix::new(cols);
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = BitVector::unit(cols, free);
        for (row, &p) in reduced.matrix.rows.iter().zip(&reduced.pivots) {
            if row.get(free) {
                v.set(p, true);
            }
        }
        out.rows.push(v);
    }
    out
}

/// A matrix `T` whose kernel is exactly the row space of `basis`.
///
/// Depends only on the subspace, not on the chosen spanning rows: it is
/// derived from the (unique) reduced row-echelon form.
pub fn parity_check(basis: &BitMatrix) -> BitMatrix {
    nullspace(&row_reduce(basis))
}

/// Solution of `E s = f`: a particular solution and a basis of `ker(E)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub particular: BitVector,
    pub kernel: BitMatrix,
}

pub fn solve(e: &BitMatrix, f: &BitVector) -> Result<Solution> {
    if f.len() != e.nrows() {
        return Err(invalid(format!(
            "right-hand side has length {}, system has {} rows",
            f.len(),
            e.nrows()
        )));
    }
    let k = e.cols;
    // Augmented column k carries f.
    let augmented = BitMatrix {
        cols: k + 1,
        rows: e
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut a = BitVector::zeros(k + 1);
                for c in r.ones() {
                    a.set(c, true);
                }
                a.set(k, f.get(i));
                a
            })
            .collect(),
    };
    let reduced = row_reduce(&augmented);
    if reduced.pivots.last() == Some(&k) {
        return Err(Error::Internal("inconsistent GF(2) system".into()));
    }
    let mut particular = BitVector::zeros(k);
    for (row, &p) in reduced.matrix.rows.iter().zip(&reduced.pivots) {
        if row.get(k) {
            particular.set(p, true);
        }
    }
    let coefficients = Reduced {
        matrix: BitMatrix {
            cols: k,
            rows: reduced.matrix.rows.iter().map(|r| r.select(&(0..k).collect::<Vec<_>>())).collect(),
        },
        rank: reduced.rank,
        pivots: reduced.pivots,
    };
    Ok(Solution { particular, kernel: nullspace(&coefficients) })
}

/// Lexicographically smallest element of `s0 + span(kernel)`.
pub fn lexmin_coset(s0: &BitVector, kernel: &BitMatrix) -> Result<BitVector> {
    if kernel.cols != s0.len() {
        return Err(invalid("kernel and coset representative have different lengths"));
    }
    let reduced = row_reduce(kernel);
    // Clearing every pivot bit gives the minimum: pivots are the most significant
    // positions each basis row can touch, and echelon rows do not disturb
    // each other's pivots.
    Ok(reduced.reduce(s0))
}

/// Incrementally built echelon basis, used to test independence of rows one at a time.
#[derive(Debug, Clone)]
pub(crate) struct EchelonBuilder {
    rows: Vec<(usize, BitVector)>,
    len: usize,
}

impl EchelonBuilder {
    pub(crate) fn new(len: usize) -> Self {
        Self { rows: Vec::new(), len }
    }

    /// Adds `v` if it is independent of the rows seen so far.
    pub(crate) fn insert(&mut self, v: &BitVector) -> bool {
        debug_assert_eq!(v.len(), self.len);
        let mut r = v.clone();
        for (p, row) in &self.rows {
            if r.get(*p) {
                r.xor_assign(row);
            }
        }
        match r.leading_one() {
            Some(p) => {
                self.rows.push((p, r));
                true
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(cols: usize, rows: &[&str]) -> BitMatrix {
        BitMatrix::from_strs(cols, rows).unwrap()
    }

    fn v(s: &str) -> BitVector {
        BitVector::from_bits_str(s).unwrap()
    }

    #[test]
    fn row_reduce_examples() {
        let r = row_reduce(&BitMatrix::identity(3));
        assert_eq!((r.rank, r.pivots), (3, vec![0, 1, 2]));

        let r = row_reduce(&BitMatrix::zeros(2, 4));
        assert_eq!((r.rank, r.pivots.len()), (0, 0));

        let r = row_reduce(&m(3, &["110", "011", "101"]));
        assert_eq!(r.rank, 2);
        assert_eq!(r.matrix, m(3, &["101", "011"]));
    }

    #[test]
    fn rowspace_membership() {
        let a = m(3, &["110", "011"]);
        assert!(in_rowspace(&a, &v("000")).unwrap());
        assert!(in_rowspace(&a, &v("101")).unwrap());
        assert!(!in_rowspace(&a, &v("100")).unwrap());
        assert!(!in_rowspace(&BitMatrix::new(3), &v("010")).unwrap());
        assert!(in_rowspace(&a, &v("10")).is_err());
    }

    #[test]
    fn parity_check_examples() {
        assert_eq!(parity_check(&BitMatrix::identity(3)).nrows(), 0);
        assert_eq!(parity_check(&BitMatrix::new(2)), BitMatrix::identity(2));
        assert_eq!(parity_check(&m(2, &["11"])), m(2, &["11"]));
    }

    #[test]
    fn solve_examples() {
        let s = solve(&BitMatrix::identity(3), &v("101")).unwrap();
        assert_eq!(s.particular, v("101"));
        assert_eq!(s.kernel.nrows(), 0);

        let s = solve(&BitMatrix::new(4), &BitVector::zeros(0)).unwrap();
        assert!(s.particular.is_zero());
        assert_eq!(s.kernel, BitMatrix::identity(4));

        let s = solve(&m(4, &["1100"]), &v("1")).unwrap();
        assert_eq!(s.particular, v("1000"));
        assert_eq!(s.kernel.nrows(), 3);

        let err = solve(&m(2, &["11", "11"]), &v("10")).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }

    #[test]
    fn lexmin_examples() {
        assert_eq!(lexmin_coset(&v("101"), &BitMatrix::new(3)).unwrap(), v("101"));
        assert_eq!(lexmin_coset(&v("10"), &m(2, &["10"])).unwrap(), v("00"));
        assert_eq!(lexmin_coset(&v("110"), &m(3, &["011"])).unwrap(), v("101"));
    }

    #[test]
    fn ordering_reads_bit_zero_first() {
        assert!(v("011") < v("100"));
        assert!(v("000") < v("001"));
        let long_a = BitVector::unit(130, 129);
        let long_b = BitVector::unit(130, 70);
        assert!(long_a < long_b);
    }

    #[test]
    fn builder_tracks_independence() {
        let mut b = EchelonBuilder::new(3);
        assert!(b.insert(&v("110")));
        assert!(b.insert(&v("011")));
        assert!(!b.insert(&v("101")));
        assert!(!b.insert(&v("000")));
        assert!(b.insert(&v("001")));
    }

    #[test]
    fn embed_and_select() {
        let x = v("11");
        let e = x.embed(&[1, 3], 5);
        assert_eq!(e, v("01010"));
        assert_eq!(e.select(&[1, 3]), x);
        assert_eq!(e.leading_one(), Some(1));
    }
}
