use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::truncated_svd;

/// Relative singular-value cutoff used for every snapshot SVD.
pub const SVD_CUTOFF: f64 = 1e-12;

/// Orthonormal basis `B` of a snapshot matrix `S = B diag(sigma) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    pub b: DMatrix<f64>,
    /// Singular values, descending and positive.
    pub sigma: DVector<f64>,
    /// Right factor, `snapshot_count x r`.
    pub v: DMatrix<f64>,
}

impl ReducedBasis {
    pub fn from_snapshots(snapshots: &DMatrix<f64>) -> Result<Self> {
        let (b, sigma, v) = truncated_svd(snapshots, SVD_CUTOFF)?;
        Ok(Self { b, sigma, v })
    }

    /// Wraps columns that are already orthonormal (unit singular values).
    pub fn from_orthonormal(b: DMatrix<f64>) -> Result<Self> {
        let r = b.ncols();
        if r == 0 {
            return Err(Error::DegenerateBasis("basis has no columns".into()));
        }
        let gram = b.transpose() * &b;
        if (gram - DMatrix::identity(r, r)).amax() > 1e-10 {
            return Err(Error::DegenerateBasis("columns are not orthonormal".into()));
        }
        Ok(Self {
            b,
            sigma: DVector::from_element(r, 1.0),
            v: DMatrix::identity(r, r),
        })
    }

    pub fn rank(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_dof(&self) -> usize {
        self.b.nrows()
    }

    pub fn snapshot_count(&self) -> usize {
        self.v.nrows()
    }

    pub fn project(&self, x: &[f64]) -> DVector<f64> {
        self.b.tr_mul(&DVector::from_column_slice(x))
    }

    pub fn expand(&self, c: &DVector<f64>) -> Vec<f64> {
        (&self.b * c).as_slice().to_vec()
    }

    /// `|| V diag(sigma)^-1 c ||_1`, the size of `B c` in snapshot coordinates.
    pub fn l1_indicator(&self, c: &[f64]) -> f64 {
        let scaled: Vec<f64> = c
            .iter()
            .zip(self.sigma.iter())
            .map(|(x, s)| x / s)
            .collect();
        let mut total = 0.0;
        for i in 0..self.v.nrows() {
            let mut acc = 0.0;
            for (j, s) in scaled.iter().enumerate() {
                acc += self.v[(i, j)] * s;
            }
            total += acc.abs();
        }
        total
    }

    /// Smallest retained singular value over the sum of all retained ones.
    pub fn tail_ratio(&self) -> f64 {
        self.sigma[self.sigma.len() - 1] / self.sigma.sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pseudo_inverse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factors_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = DMatrix::from_fn(30, 7, |_, _| rng.random_range(-1.0..1.0));
        let basis = ReducedBasis::from_snapshots(&s).unwrap();
        let r = basis.rank();
        assert_eq!(r, 7);
        assert!((basis.b.tr_mul(&basis.b) - DMatrix::identity(r, r)).amax() < 1e-10);
        assert!((basis.v.tr_mul(&basis.v) - DMatrix::identity(r, r)).amax() < 1e-10);
        assert!(basis
            .sigma
            .iter()
            .zip(basis.sigma.iter().skip(1))
            .all(|(a, b)| a >= b));
    }

    #[test]
    fn snapshot_column_has_unit_indicator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = DMatrix::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
        let basis = ReducedBasis::from_snapshots(&s).unwrap();
        for k in 0..4 {
            let c = basis.project(s.column(k).as_slice());
            assert!((basis.l1_indicator(c.as_slice()) - 1.0).abs() < 1e-10);
        }
        assert_eq!(basis.l1_indicator(&[0.0; 4]), 0.0);
    }

    #[test]
    fn indicator_matches_pseudo_inverse_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.random_range(5..25);
            let m = rng.random_range(1..5);
            let s = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
            let basis = ReducedBasis::from_snapshots(&s).unwrap();
            let c = DVector::from_fn(basis.rank(), |_, _| rng.random_range(-2.0..2.0));
            let (pinv, _) = pseudo_inverse(&s, SVD_CUTOFF).unwrap();
            let direct = (pinv * (&basis.b * &c)).lp_norm(1);
            assert!((basis.l1_indicator(c.as_slice()) - direct).abs() < 1e-10 * direct.max(1.0));
        }
    }

    #[test]
    fn non_orthonormal_columns_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            ReducedBasis::from_orthonormal(b),
            Err(Error::DegenerateBasis(_))
        ));
    }
}
