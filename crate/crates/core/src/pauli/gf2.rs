//! Dense GF(2) matrices with word-packed rows.

use super::bits::BitVector;
use super::PauliError;

/// Row-major GF(2) matrix. Each row is a packed [`BitVector`] of length `cols`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVector>,
}

/// One particular solution of `M x = b` plus a basis of `ker M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub particular: BitVector,
    pub null_space: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].set(i, true);
        }
        m
    }

    /// Stacks rows; all rows must share one length. An empty row list
    /// yields a `0 x cols` matrix.
    pub fn from_rows(rows: Vec<BitVector>, cols: usize) -> Result<Self, PauliError> {
        for r in &rows {
            if r.len() != cols {
                return Err(PauliError::DimensionMismatch {
                    left: cols,
                    right: r.len(),
                });
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.data[i]
    }

    pub fn row_vectors(&self) -> &[BitVector] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        self.data[r].set(c, bit);
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.iter_ones() {
                t.data[c].set(r, true);
            }
        }
        t
    }

    /// `M x` over GF(2).
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector, PauliError> {
        if x.len() != self.cols {
            return Err(PauliError::DimensionMismatch {
                left: self.cols,
                right: x.len(),
            });
        }
        Ok(BitVector::from_bools(self.data.iter().map(|r| r.dot(x))))
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        reduce(&mut rows, self.cols, None).len()
    }

    /// Solves `M x = b`. Returns `None` when the system is inconsistent.
    /// The particular solution sets every free variable to zero.
    pub fn solve(&self, b: &BitVector) -> Result<Option<Solution>, PauliError> {
        if b.len() != self.rows {
            return Err(PauliError::DimensionMismatch {
                left: self.rows,
                right: b.len(),
            });
        }
        let mut rows = self.data.clone();
        let mut rhs = b.clone();
        let pivots = reduce(&mut rows, self.cols, Some(&mut rhs));
        // Rows past the pivot count are zero; a set rhs bit there means 0 = 1.
        if (pivots.len()..self.rows).any(|r| rhs.get(r)) {
            return Ok(None);
        }
        let mut particular = BitVector::zeros(self.cols);
        for (r, &c) in pivots.iter().enumerate() {
            if rhs.get(r) {
                particular.set(c, true);
            }
        }
        let null_space = kernel_from_rref(&rows, &pivots, self.cols);
        Ok(Some(Solution {
            particular,
            null_space,
        }))
    }

    /// Basis of `{x : M x = 0}`.
    pub fn null_space(&self) -> Vec<BitVector> {
        let mut rows = self.data.clone();
        let pivots = reduce(&mut rows, self.cols, None);
        kernel_from_rref(&rows, &pivots, self.cols)
    }
}

/// Brings `rows` to reduced row echelon form in place and returns the pivot
/// column of each leading row. Optional `rhs` is permuted and combined along
/// with the rows.
pub(crate) fn reduce(
    rows: &mut [BitVector],
    cols: usize,
    mut rhs: Option<&mut BitVector>,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut next = 0;
    for c in 0..cols {
        if next == rows.len() {
            break;
        }
        let Some(p) = (next..rows.len()).find(|&r| rows[r].get(c)) else {
            continue;
        };
        rows.swap(next, p);
        if let Some(b) = rhs.as_deref_mut() {
            let (bp, bn) = (b.get(p), b.get(next));
            b.set(p, bn);
            b.set(next, bp);
        }
        let (head, tail) = rows.split_at_mut(next);
        let (pivot_row, rest) = tail.split_first_mut().expect("pivot row exists");
        let pivot_rhs = rhs.as_deref().map(|b| b.get(next)).unwrap_or(false);
        for (r, row) in head.iter_mut().enumerate() {
            if row.get(c) {
                row.xor_assign_from(pivot_row, c);
                if pivot_rhs {
                    rhs.as_deref_mut().unwrap().flip(r);
                }
            }
        }
        for (k, row) in rest.iter_mut().enumerate() {
            if row.get(c) {
                row.xor_assign_from(pivot_row, c);
                if pivot_rhs {
                    rhs.as_deref_mut().unwrap().flip(next + 1 + k);
                }
            }
        }
        pivots.push(c);
        next += 1;
    }
    pivots
}

fn kernel_from_rref(rows: &[BitVector], pivots: &[usize], cols: usize) -> Vec<BitVector> {
    let mut is_pivot = vec![false; cols];
    for &c in pivots {
        is_pivot[c] = true;
    }
    (0..cols)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = BitVector::zeros(cols);
            v.set(f, true);
            for (r, &c) in pivots.iter().enumerate() {
                if rows[r].get(f) {
                    v.set(c, true);
                }
            }
            v
        })
        .collect()
}

/// Incremental span tracker: keeps a reduced basis keyed by leading bit so
/// that membership and insertion are a single sweep.
#[derive(Clone, Debug, Default)]
pub struct XorBasis {
    basis: Vec<(usize, BitVector)>,
}

impl XorBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn reduce_vec(&self, v: &mut BitVector) {
        for (lead, b) in &self.basis {
            if v.get(*lead) {
                v.xor_assign(b);
            }
        }
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        let mut w = v.clone();
        self.reduce_vec(&mut w);
        w.is_zero()
    }

    /// Inserts `v`; returns `false` when it was already in the span.
    pub fn insert(&mut self, v: &BitVector) -> bool {
        let mut w = v.clone();
        self.reduce_vec(&mut w);
        let Some(lead) = w.first_one_from(0) else {
            return false;
        };
        for (_, b) in self.basis.iter_mut() {
            if b.get(lead) {
                b.xor_assign(&w);
            }
        }
        self.basis.push((lead, w));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bv(s: &str) -> BitVector {
        BitVector::parse(s).unwrap()
    }

    #[test]
    fn identity_system() {
        let m = BitMatrix::identity(4);
        let sol = m.solve(&bv("1010")).unwrap().unwrap();
        assert_eq!(sol.particular, bv("1010"));
        assert!(sol.null_space.is_empty());
        assert_eq!(m.rank(), 4);
    }

    #[test]
    fn inconsistent_zero_row() {
        let m = BitMatrix::from_rows(vec![bv("110"), bv("000")], 3).unwrap();
        assert_eq!(m.solve(&bv("01")).unwrap(), None);
        assert!(m.solve(&bv("10")).unwrap().is_some());
    }

    #[test]
    fn dimension_errors() {
        let m = BitMatrix::identity(3);
        assert!(m.solve(&bv("10")).is_err());
        assert!(m.mul_vec(&bv("10")).is_err());
        assert!(BitMatrix::from_rows(vec![bv("10"), bv("1")], 2).is_err());
    }

    #[test]
    fn random_full_row_rank_system_substitutes_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut done = 0;
        while done < 20 {
            let rows: Vec<BitVector> = (0..20)
                .map(|_| BitVector::from_bools((0..40).map(|_| rng.gen::<bool>())))
                .collect();
            let m = BitMatrix::from_rows(rows, 40).unwrap();
            if m.rank() != 20 {
                continue;
            }
            let b = BitVector::from_bools((0..20).map(|_| rng.gen::<bool>()));
            let sol = m.solve(&b).unwrap().expect("full row rank is consistent");
            assert_eq!(m.mul_vec(&sol.particular).unwrap(), b);
            assert_eq!(sol.null_space.len(), 20);
            for k in &sol.null_space {
                assert!(m.mul_vec(k).unwrap().is_zero());
            }
            done += 1;
        }
    }

    #[test]
    fn solution_count_matches_enumeration() {
        // 4x6 system: enumerate all 64 candidates and compare with 2^(cols - rank).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let rows: Vec<BitVector> = (0..4)
                .map(|_| BitVector::from_bools((0..6).map(|_| rng.gen_bool(0.4))))
                .collect();
            let m = BitMatrix::from_rows(rows, 6).unwrap();
            let b = BitVector::from_bools((0..4).map(|_| rng.gen::<bool>()));
            let count = (0u64..64)
                .filter(|&x| m.mul_vec(&BitVector::from_u64(x, 6)).unwrap() == b)
                .count();
            match m.solve(&b).unwrap() {
                None => assert_eq!(count, 0),
                Some(sol) => {
                    assert_eq!(count, 1 << (6 - m.rank()));
                    assert_eq!(sol.null_space.len(), 6 - m.rank());
                }
            }
        }
    }

    #[test]
    fn xor_basis_tracks_span() {
        let mut basis = XorBasis::new();
        assert!(basis.insert(&bv("1100")));
        assert!(basis.insert(&bv("0110")));
        assert!(!basis.insert(&bv("1010")));
        assert!(basis.contains(&bv("1010")));
        assert!(!basis.contains(&bv("0001")));
        assert_eq!(basis.rank(), 2);
    }
}
