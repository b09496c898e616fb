//! Thin wrapper over faer's sparse LU.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Square sparse matrix assembled from `(row, col, value)` entries;
/// duplicates are summed.
#[derive(Debug, Default, Clone)]
pub(crate) struct Assembly {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl Assembly {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(8 * n),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.entries.push(Triplet::new(row, col, val));
    }

    pub fn factor(&self) -> Result<Factored> {
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::Linear(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::Linear(format!("{e:?}")))?;
        Ok(Factored { n: self.n, lu })
    }
}

#[derive(Debug)]
pub(crate) struct Factored {
    n: usize,
    lu: Lu<usize, f64>,
}

impl Factored {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.n);
        let b = Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&b);
        (0..self.n).map(|i| x[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_with_duplicates() {
        let n = 50;
        let mut a = Assembly::new(n);
        for i in 0..n {
            a.push(i, i, 1.0);
            a.push(i, i, 1.0);
            if i > 0 {
                a.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.push(i, i + 1, -1.0);
            }
        }
        let x = a.factor().unwrap().solve(&vec![1.0; n]);
        // −x'' = 1 with unit spacing: x_i = (i+1)(n−i)/2
        for (i, xi) in x.iter().enumerate() {
            let exact = (i as f64 + 1.0) * (n - i) as f64 / 2.0;
            assert!((xi - exact).abs() < 1e-8 * exact);
        }
    }
}
