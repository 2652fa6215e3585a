use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::space::StateSpace;
use crate::error::{Error, Result};

/// Rows whose sum is this close to 1 are rescaled on construction; anything
/// further off is rejected.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A row-stochastic matrix on a finite state space.
///
/// Entries are non-negative and every stored row sums to 1 up to rounding of
/// the final division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelDoc", into = "KernelDoc")]
pub struct Kernel {
    space: StateSpace,
    matrix: DMatrix<f64>,
}

/// JSON shape: `{"space": {"labels": [...]}, "matrix": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelDoc {
    pub space: StateSpace,
    pub matrix: Vec<Vec<f64>>,
}

impl TryFrom<KernelDoc> for Kernel {
    type Error = Error;

    fn try_from(doc: KernelDoc) -> Result<Self> {
        let n = doc.space.size();
        if doc.matrix.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: doc.matrix.len() });
        }
        for row in &doc.matrix {
            if row.len() != n {
                return Err(Error::NotSquare { rows: n, cols: row.len() });
            }
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| doc.matrix[i][j]);
        Kernel::new(doc.space, matrix)
    }
}

impl From<Kernel> for KernelDoc {
    fn from(k: Kernel) -> Self {
        let n = k.size();
        let matrix = (0..n).map(|i| (0..n).map(|j| k.matrix[(i, j)]).collect()).collect();
        KernelDoc { space: k.space, matrix }
    }
}

impl Kernel {
    pub fn new(space: StateSpace, mut matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        space.check_same(&StateSpace::new(rows)?)?;
        for i in 0..rows {
            let mut sum = 0.0;
            for j in 0..cols {
                let v = matrix[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidEntry { row: i, col: j, value: v });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row: i, sum });
            }
            for j in 0..cols {
                matrix[(i, j)] /= sum;
            }
        }
        Ok(Self { space, matrix })
    }

    /// Kernel on states `0..n` from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let space = StateSpace::new(n)?;
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare { rows: n, cols: row.len() });
            }
        }
        Self::new(space, DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(space: StateSpace) -> Self {
        let n = space.size();
        Self { space, matrix: DMatrix::identity(n, n) }
    }

    /// Wraps the result of a product of kernels, dividing each row by its sum.
    /// Returns the kernel and the largest `|row sum - 1|` seen before rescaling.
    pub(crate) fn renormalized(space: StateSpace, mut matrix: DMatrix<f64>) -> (Self, f64) {
        let n = matrix.nrows();
        let mut drift: f64 = 0.0;
        for i in 0..n {
            let sum: f64 = matrix.row(i).iter().sum();
            drift = drift.max((sum - 1.0).abs());
            if sum > 0.0 {
                for j in 0..n {
                    matrix[(i, j)] /= sum;
                }
            }
        }
        (Self { space, matrix }, drift)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)]
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        self.matrix.row(x).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size()).map(|x| self.row(x)).collect()
    }

    /// Conjugation by a relabelling: the result maps `x -> y` as the original
    /// maps `perm[x] -> perm[y]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.size();
        check_permutation(perm, n)?;
        let matrix = DMatrix::from_fn(n, n, |i, j| self.matrix[(perm[i], perm[j])]);
        let labels = perm.iter().map(|&p| self.space.label(p).to_string()).collect();
        Ok(Self { space: StateSpace::with_labels(labels)?, matrix })
    }

    /// 0/1 support pattern of the kernel.
    pub fn support(&self) -> Vec<Vec<bool>> {
        let n = self.size();
        (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)] > 0.0).collect()).collect()
    }

    pub fn min_positive_entry(&self) -> f64 {
        self.matrix.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.size()).map(|x| self.matrix[(x, x)]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        (&self.matrix - &other.matrix).amax()
    }

    pub fn to_doc(&self) -> KernelDoc {
        self.clone().into()
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: perm.len() });
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renormalizes_small_drift_and_rejects_large() {
        let k = Kernel::from_rows(&[vec![0.5, 0.5 + 5e-10], vec![1.0, 0.0]]).unwrap();
        assert!((k.get(0, 0) + k.get(0, 1) - 1.0).abs() < 1e-15);
        assert!(matches!(
            Kernel::from_rows(&[vec![0.5, 0.6], vec![1.0, 0.0]]),
            Err(Error::RowSum { row: 0, .. })
        ));
        assert!(matches!(
            Kernel::from_rows(&[vec![1.5, -0.5], vec![1.0, 0.0]]),
            Err(Error::InvalidEntry { .. })
        ));
        assert!(Kernel::from_rows(&[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn json_round_trip_keeps_labels() {
        let json = r#"{"space": {"labels": ["a", "b"]}, "matrix": [[0.25, 0.75], [1, 0]]}"#;
        let k: Kernel = serde_json::from_str(json).unwrap();
        assert_eq!(k.space().label(1), "b");
        let back: Kernel = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn permutation_conjugates() {
        let k = Kernel::from_rows(&[vec![0.1, 0.9, 0.0], vec![0.0, 0.2, 0.8], vec![0.7, 0.0, 0.3]])
            .unwrap();
        let p = k.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(0, 0), k.get(2, 2));
        assert_eq!(p.get(1, 2), k.get(0, 1));
        assert!(k.permuted(&[0, 0, 1]).is_err());
    }
}
