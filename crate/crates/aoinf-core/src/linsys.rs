//! Thin wrapper over a sparse LU factorization, with defensive residual
//! checks so singular or badly conditioned systems surface as errors
//! instead of garbage averages.

use faer::prelude::*;
use faer::sparse::SparseColMat;

use crate::error::{CoreError, Result};

pub(crate) struct SparseLu {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    /// Factorizes the `n` by `n` matrix given as (row, col, value) triplets;
    /// duplicate coordinates are summed.
    pub fn new(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        triplets.sort_unstable_by_key(|&(r, c, _)| (c, r));
        triplets.dedup_by(|next, kept| {
            if next.0 == kept.0 && next.1 == kept.1 {
                kept.2 += next.2;
                true
            } else {
                false
            }
        });
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| CoreError::SingularSystem(format!("bad sparse structure: {e:?}")))?;
        // The factorization panics on an exactly zero pivot instead of
        // returning an error; contain that so callers get a diagnostic.
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| matrix.sp_lu()))
            .map_err(|_| {
                CoreError::SingularSystem("LU factorization hit a zero pivot".into())
            })?
            .map_err(|e| CoreError::SingularSystem(format!("LU factorization failed: {e:?}")))?;
        Ok(SparseLu { n, triplets, lu })
    }

    /// Solves for one right-hand side and verifies the residual.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.n);
        let b = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        let solution = self.lu.solve(&b);
        let x: Vec<f64> = (0..self.n).map(|i| solution[(i, 0)]).collect();

        let mut residual = rhs.to_vec();
        for &(r, c, v) in &self.triplets {
            residual[r] -= v * x[c];
        }
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if !worst.is_finite() || worst > 1e-8 * scale {
            return Err(CoreError::SingularSystem(format!(
                "residual {worst:.3e} exceeds {:.3e} (n = {})",
                1e-8 * scale,
                self.n
            )));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system_with_duplicate_triplets() {
        // [[2, 1], [1, 3]] x = [5, 10], with the 2 split across duplicates.
        let lu = SparseLu::new(
            2,
            vec![
                (0, 0, 1.0),
                (0, 0, 1.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
            ],
        )
        .unwrap();
        let x = lu.solve(&[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        let result = SparseLu::new(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
            .and_then(|lu| lu.solve(&[1.0, 2.0]));
        assert!(matches!(result, Err(CoreError::SingularSystem(_))));
    }
}
