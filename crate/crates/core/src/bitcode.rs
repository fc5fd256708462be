//! Bit-packed ±1 code matrices and Hamming-space kernels.
//!
//! A [`PackedBitMatrix`] stores a K×N matrix of ±1 values column-major, one
//! bit per entry (bit set ⇔ +1). Each column occupies `ceil(K / 64)` words
//! and the padding bits past row K are kept at zero, so XOR + popcount over
//! whole words gives exact Hamming distances.

use crate::numeric::DenseMatrix;
use thiserror::Error;

pub type Word = u64;
pub const WORD_BITS: usize = Word::BITS as usize;
pub const WORD_BYTES: usize = std::mem::size_of::<Word>();

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BitcodeError {
    #[error("entry ({row}, {col}) is {value}, expected -1 or +1")]
    NotSign { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {0} vs {1} bits")]
    Dimension(usize, usize),
    #[error("bit weight {index} is {value}; weights must be finite and non-negative")]
    BadWeight { index: usize, value: f64 },
    #[error("centroid matrix has no columns")]
    EmptyCentroids,
}

#[inline]
fn words_for(rows: usize) -> usize {
    rows.div_ceil(WORD_BITS)
}

/// K×N matrix of ±1 values, bit-packed column-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PackedBitMatrix {
    rows: usize,
    cols: usize,
    words_per_col: usize,
    words: Vec<Word>,
}

/// Borrowed view of one packed column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitColumn<'a> {
    rows: usize,
    words: &'a [Word],
}

impl<'a> BitColumn<'a> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn words(&self) -> &'a [Word] {
        self.words
    }

    /// Logical value of bit `k` as ±1.
    #[inline]
    pub fn sign(&self, k: usize) -> i8 {
        if (self.words[k / WORD_BITS] >> (k % WORD_BITS)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.rows).map(|k| self.sign(k)).collect()
    }
}

impl PackedBitMatrix {
    /// All entries −1.
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_col = words_for(rows);
        Self {
            rows,
            cols,
            words_per_col,
            words: vec![0; words_per_col * cols],
        }
    }

    /// Builds the matrix from a predicate; `true` encodes +1.
    pub fn from_fn(rows: usize, cols: usize, mut positive: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::new(rows, cols);
        for c in 0..cols {
            let base = c * m.words_per_col;
            for r in 0..rows {
                if positive(r, c) {
                    m.words[base + r / WORD_BITS] |= 1 << (r % WORD_BITS);
                }
            }
        }
        m
    }

    /// Packs the sign of every entry of `m`, with `sgn(0) = +1`.
    pub fn from_signs_of(m: &DenseMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut out = Self::new(rows, cols);
        for r in 0..rows {
            let word = r / WORD_BITS;
            let bit: Word = 1 << (r % WORD_BITS);
            for (c, &v) in m.row(r).iter().enumerate() {
                if v >= 0.0 {
                    out.words[c * out.words_per_col + word] |= bit;
                }
            }
        }
        out
    }

    /// Packs a dense ±1 matrix. Any other entry is rejected.
    pub fn pack(dense: &DenseMatrix) -> Result<Self, BitcodeError> {
        let rows = dense.rows();
        for r in 0..rows {
            for (c, &v) in dense.row(r).iter().enumerate() {
                if v != 1.0 && v != -1.0 {
                    return Err(BitcodeError::NotSign {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
            }
        }
        Ok(Self::from_signs_of(dense))
    }

    pub fn unpack(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |r, c| f64::from(self.get(r, c)))
    }

    /// Reassembles a matrix from raw words, clearing any padding bits.
    pub fn from_words(rows: usize, cols: usize, mut words: Vec<Word>) -> Result<Self, BitcodeError> {
        let words_per_col = words_for(rows);
        if words.len() != words_per_col * cols {
            return Err(BitcodeError::Dimension(words.len(), words_per_col * cols));
        }
        let mut m = Self {
            rows,
            cols,
            words_per_col,
            words: std::mem::take(&mut words),
        };
        m.clear_padding();
        Ok(m)
    }

    fn clear_padding(&mut self) {
        let rem = self.rows % WORD_BITS;
        if rem == 0 || self.words_per_col == 0 {
            return;
        }
        let mask: Word = (1 << rem) - 1;
        for c in 0..self.cols {
            self.words[c * self.words_per_col + self.words_per_col - 1] &= mask;
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_col(&self) -> usize {
        self.words_per_col
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// Structural storage in bytes: `cols · ceil(rows / 64) · 8`.
    pub fn memory_bytes(&self) -> usize {
        self.words.len() * WORD_BYTES
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.column(c).sign(r)
    }

    pub fn set(&mut self, r: usize, c: usize, v: i8) {
        let idx = c * self.words_per_col + r / WORD_BITS;
        let bit: Word = 1 << (r % WORD_BITS);
        if v > 0 {
            self.words[idx] |= bit;
        } else {
            self.words[idx] &= !bit;
        }
    }

    #[inline]
    pub fn column(&self, c: usize) -> BitColumn<'_> {
        let start = c * self.words_per_col;
        BitColumn {
            rows: self.rows,
            words: &self.words[start..start + self.words_per_col],
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = BitColumn<'_>> + '_ {
        (0..self.cols).map(move |c| self.column(c))
    }

    /// Overwrites column `dst` with `src`, which must have the same row count.
    pub fn set_column(&mut self, dst: usize, src: BitColumn<'_>) {
        assert_eq!(src.rows, self.rows, "column height mismatch");
        let start = dst * self.words_per_col;
        self.words[start..start + self.words_per_col].copy_from_slice(src.words);
    }

    /// Single-column matrix holding a copy of `col`.
    pub fn from_column(col: BitColumn<'_>) -> Self {
        Self {
            rows: col.rows,
            cols: 1,
            words_per_col: col.words.len(),
            words: col.words.to_vec(),
        }
    }
}

/// Per-bit non-negative weights (the diagonal of the ℓ21 reweighting matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct BitRowWeights(Vec<f64>);

impl BitRowWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, BitcodeError> {
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(BitcodeError::BadWeight { index, value });
        }
        Ok(Self(weights))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Number of positions where `a` and `b` differ (XOR + popcount per word).
pub fn hamming(a: BitColumn<'_>, b: BitColumn<'_>) -> Result<u32, BitcodeError> {
    if a.rows != b.rows {
        return Err(BitcodeError::Dimension(a.rows, b.rows));
    }
    Ok(hamming_unchecked(a.words, b.words))
}

#[inline]
pub(crate) fn hamming_unchecked(a: &[Word], b: &[Word]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Sum of `w_k` over the bits where `a` and `b` differ.
pub fn weighted_hamming(a: BitColumn<'_>, b: BitColumn<'_>, w: &BitRowWeights) -> Result<f64, BitcodeError> {
    if a.rows != b.rows {
        return Err(BitcodeError::Dimension(a.rows, b.rows));
    }
    if w.len() != a.rows {
        return Err(BitcodeError::Dimension(a.rows, w.len()));
    }
    Ok(weighted_hamming_unchecked(a.words, b.words, &w.0))
}

#[inline]
pub(crate) fn weighted_hamming_unchecked(a: &[Word], b: &[Word], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (wi, (x, y)) in a.iter().zip(b).enumerate() {
        let mut diff = x ^ y;
        let base = wi * WORD_BITS;
        while diff != 0 {
            let bit = diff.trailing_zeros() as usize;
            total += w[base + bit];
            diff &= diff - 1;
        }
    }
    total
}

/// Index of the weighted-Hamming nearest column of `centroids`; ties go to
/// the lowest index.
pub fn nearest_centroid(
    b: BitColumn<'_>,
    centroids: &PackedBitMatrix,
    w: &BitRowWeights,
) -> Result<usize, BitcodeError> {
    if centroids.cols == 0 {
        return Err(BitcodeError::EmptyCentroids);
    }
    if b.rows != centroids.rows {
        return Err(BitcodeError::Dimension(b.rows, centroids.rows));
    }
    if w.len() != b.rows {
        return Err(BitcodeError::Dimension(b.rows, w.len()));
    }
    Ok(nearest_weighted_unchecked(b.words, centroids, &w.0).0)
}

/// Plain Hamming nearest column; ties go to the lowest index.
pub fn nearest_centroid_hamming(b: BitColumn<'_>, centroids: &PackedBitMatrix) -> Result<usize, BitcodeError> {
    if centroids.cols == 0 {
        return Err(BitcodeError::EmptyCentroids);
    }
    if b.rows != centroids.rows {
        return Err(BitcodeError::Dimension(b.rows, centroids.rows));
    }
    Ok(nearest_hamming_unchecked(b.words, centroids).0)
}

pub(crate) fn nearest_weighted_unchecked(b: &[Word], centroids: &PackedBitMatrix, w: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..centroids.cols {
        let d = weighted_hamming_unchecked(b, centroids.column(j).words, w);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub(crate) fn nearest_hamming_unchecked(b: &[Word], centroids: &PackedBitMatrix) -> (usize, u32) {
    let mut best = (0, u32::MAX);
    for j in 0..centroids.cols {
        let d = hamming_unchecked(b, centroids.column(j).words);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn signs(rows: &[&[i8]]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), rows[0].len(), |r, c| f64::from(rows[r][c]))
    }

    fn random_signs(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
    }

    #[test]
    fn pack_single_bit() {
        let p = PackedBitMatrix::pack(&signs(&[&[1]])).unwrap();
        assert_eq!(p.words(), &[1]);
    }

    #[test]
    fn pack_column_words() {
        let p = PackedBitMatrix::pack(&signs(&[&[1, -1], &[-1, 1], &[1, 1]])).unwrap();
        assert_eq!(p.words(), &[0b101, 0b110]);
    }

    #[test]
    fn pack_rejects_non_sign() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            PackedBitMatrix::pack(&m),
            Err(BitcodeError::NotSign {
                row: 0,
                col: 1,
                value: 0.0
            })
        );
    }

    #[test]
    fn random_round_trip_and_padding() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dense = random_signs(64, 100, &mut rng);
        let p = PackedBitMatrix::pack(&dense).unwrap();
        assert_eq!(p.unpack(), dense);

        let dense = random_signs(70, 5, &mut rng);
        let p = PackedBitMatrix::pack(&dense).unwrap();
        assert_eq!(p.unpack(), dense);
        for c in 0..5 {
            assert_eq!(p.column(c).words()[1] >> 6, 0, "padding bits must stay clear");
        }
    }

    #[test]
    fn memory_is_structural() {
        for (rows, cols) in [(1, 1), (64, 10), (65, 10), (128, 37), (200, 3)] {
            let p = PackedBitMatrix::new(rows, cols);
            assert_eq!(p.memory_bytes(), cols * rows.div_ceil(64) * 8);
        }
        assert_eq!(PackedBitMatrix::new(128, 1000).memory_bytes(), 16 * 1000);
    }

    #[test]
    fn from_words_clears_padding() {
        let p = PackedBitMatrix::from_words(3, 1, vec![Word::MAX]).unwrap();
        assert_eq!(p.words(), &[0b111]);
    }

    #[test]
    fn hamming_hand_cases() {
        let m = PackedBitMatrix::pack(&signs(&[&[1, -1], &[1, 1], &[-1, -1], &[-1, 1]])).unwrap();
        assert_eq!(hamming(m.column(0), m.column(0)).unwrap(), 0);
        assert_eq!(hamming(m.column(0), m.column(1)).unwrap(), 2);
    }

    #[test]
    fn hamming_dimension_mismatch() {
        let a = PackedBitMatrix::new(3, 1);
        let b = PackedBitMatrix::new(4, 1);
        assert_eq!(hamming(a.column(0), b.column(0)), Err(BitcodeError::Dimension(3, 4)));
        let w = BitRowWeights::uniform(4);
        assert!(weighted_hamming(a.column(0), a.column(0), &w).is_err());
    }

    #[test]
    fn weighted_hand_case() {
        let m = PackedBitMatrix::pack(&signs(&[&[1, -1], &[-1, -1], &[1, -1]])).unwrap();
        let w = BitRowWeights::new(vec![0.5, 1.0, 2.0]).unwrap();
        assert_eq!(weighted_hamming(m.column(0), m.column(1), &w).unwrap(), 2.5);
    }

    #[test]
    fn weights_validated() {
        assert!(BitRowWeights::new(vec![1.0, -0.1]).is_err());
        assert!(BitRowWeights::new(vec![f64::NAN]).is_err());
        assert!(BitRowWeights::new(vec![0.0, 3.0]).is_ok());
    }

    #[test]
    fn nearest_centroid_cases() {
        let q = PackedBitMatrix::pack(&signs(&[&[1, -1, 1], &[1, 1, -1], &[-1, -1, 1]])).unwrap();
        let w = BitRowWeights::uniform(3);
        for j in 0..3 {
            assert_eq!(nearest_centroid(q.column(j), &q, &w).unwrap(), j);
        }
        // distances {3.0, 1.5}
        let b = PackedBitMatrix::pack(&signs(&[&[1], &[1], &[1]])).unwrap();
        let cents = PackedBitMatrix::pack(&signs(&[&[-1, -1], &[-1, 1], &[-1, 1]])).unwrap();
        let w = BitRowWeights::new(vec![1.5, 0.75, 0.75]).unwrap();
        assert_eq!(weighted_hamming(b.column(0), cents.column(0), &w).unwrap(), 3.0);
        assert_eq!(weighted_hamming(b.column(0), cents.column(1), &w).unwrap(), 1.5);
        assert_eq!(nearest_centroid(b.column(0), &cents, &w).unwrap(), 1);
    }

    #[test]
    fn nearest_centroid_ties_and_empty() {
        let q = PackedBitMatrix::new(4, 3);
        let b = PackedBitMatrix::new(4, 1);
        assert_eq!(nearest_centroid_hamming(b.column(0), &q).unwrap(), 0);
        let empty = PackedBitMatrix::new(4, 0);
        assert_eq!(
            nearest_centroid(b.column(0), &empty, &BitRowWeights::uniform(4)),
            Err(BitcodeError::EmptyCentroids)
        );
    }

    #[test]
    fn nearest_centroid_matches_dense_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let q = random_signs(16, 8, &mut rng);
            let b = random_signs(16, 1, &mut rng);
            let w: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..3.0)).collect();
            let mut best = (0, f64::INFINITY);
            for j in 0..8 {
                let cost: f64 = (0..16).map(|k| 0.25 * w[k] * (b.get(k, 0) - q.get(k, j)).powi(2)).sum();
                if cost < best.1 {
                    best = (j, cost);
                }
            }
            let pq = PackedBitMatrix::pack(&q).unwrap();
            let pb = PackedBitMatrix::pack(&b).unwrap();
            let w = BitRowWeights::new(w).unwrap();
            assert_eq!(nearest_centroid(pb.column(0), &pq, &w).unwrap(), best.0);
        }
    }

    fn column_strategy(bits: usize) -> impl Strategy<Value = Vec<bool>> {
        proptest::collection::vec(any::<bool>(), bits)
    }

    fn pack_bools(cols: &[&Vec<bool>]) -> PackedBitMatrix {
        PackedBitMatrix::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r])
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric(a in column_strategy(150), b in column_strategy(150), c in column_strategy(150)) {
            let m = pack_bools(&[&a, &b, &c]);
            let (x, y, z) = (m.column(0), m.column(1), m.column(2));
            let naive = a.iter().zip(&b).filter(|(p, q)| p != q).count() as u32;
            prop_assert_eq!(hamming(x, y).unwrap(), naive);
            prop_assert_eq!(hamming(x, y).unwrap(), hamming(y, x).unwrap());
            prop_assert_eq!(hamming(x, y).unwrap() == 0, a == b);
            prop_assert!(hamming(x, z).unwrap() <= hamming(x, y).unwrap() + hamming(y, z).unwrap());
        }

        #[test]
        fn weighted_equals_dense_surrogate(
            a in column_strategy(100),
            b in column_strategy(100),
            w in proptest::collection::vec(0.0f64..10.0, 100),
        ) {
            let m = pack_bools(&[&a, &b]);
            let weights = BitRowWeights::new(w.clone()).unwrap();
            let dense: f64 = (0..100)
                .map(|k| {
                    let (x, y) = (if a[k] { 1.0 } else { -1.0 }, if b[k] { 1.0 } else { -1.0 });
                    0.25 * w[k] * (x - y) * (x - y)
                })
                .sum();
            prop_assert_eq!(weighted_hamming(m.column(0), m.column(1), &weights).unwrap(), dense);
            let uniform = BitRowWeights::uniform(100);
            prop_assert_eq!(
                weighted_hamming(m.column(0), m.column(1), &uniform).unwrap(),
                f64::from(hamming(m.column(0), m.column(1)).unwrap())
            );
        }

        #[test]
        fn uniform_scaling_keeps_argmin(
            cols in proptest::collection::vec(column_strategy(40), 2..8),
            query in column_strategy(40),
            scale in 0.001f64..1000.0,
        ) {
            let refs: Vec<&Vec<bool>> = cols.iter().collect();
            let q = pack_bools(&refs);
            let b = pack_bools(&[&query]);
            let one = BitRowWeights::uniform(40);
            let scaled = BitRowWeights::new(vec![scale; 40]).unwrap();
            prop_assert_eq!(
                nearest_centroid(b.column(0), &q, &one).unwrap(),
                nearest_centroid(b.column(0), &q, &scaled).unwrap()
            );
        }
    }
}
