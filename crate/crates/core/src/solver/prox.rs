use nalgebra::DMatrix;

use crate::error::{ReidError, Result};
use crate::metric::symmetrize_in_place;

/// Proximal map of `tau * ||X||_{2,1}`: each row is shrunk toward zero by
/// `tau` in Euclidean norm, rows with norm `<= tau` vanish.
pub fn prox_l21(w: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(ReidError::InvalidArgument(format!(
            "shrinkage threshold must be non-negative, got {tau}"
        )));
    }
    let mut out = w.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row *= (1.0 - tau / norm).max(0.0);
        }
    }
    Ok(out)
}

/// Frobenius-nearest symmetric negative semi-definite matrix: symmetrize,
/// then clip positive eigenvalues to zero.
pub fn project_nsd(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !w.is_square() {
        return Err(ReidError::DimensionMismatch(format!(
            "projection needs a square matrix, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let sym = (w + w.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l <= 0.0) {
        return Ok(sym);
    }
    let q = &eig.eigenvectors;
    let clipped = eig.eigenvalues.map(|l| l.min(0.0));
    let mut out = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    symmetrize_in_place(&mut out);
    Ok(out)
}

/// Largest eigenvalue of the symmetric part of `w`.
pub fn max_eigenvalue(w: &DMatrix<f64>) -> f64 {
    let sym = (w + w.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::l21_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn prox_cases() {
        let w = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.1, -0.2]);
        assert_eq!(prox_l21(&w, 0.0).unwrap(), w);
        let p = prox_l21(&w, 1.0).unwrap();
        assert!((p[(0, 0)] - 2.4).abs() < 1e-15 && (p[(0, 1)] - 3.2).abs() < 1e-15);
        assert_eq!(p.row(1).norm(), 0.0);
        assert!(prox_l21(&w, -1e-3).is_err());
        let zero = DMatrix::zeros(3, 2);
        assert_eq!(prox_l21(&zero, 2.0).unwrap(), zero);
    }

    #[test]
    fn prox_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let w = random(&mut rng, 4, 3);
            let tau = rng.random_range(0.0..2.0);
            let p = prox_l21(&w, tau).unwrap();
            let obj = |x: &DMatrix<f64>| 0.5 * (x - &w).norm_squared() + tau * l21_norm(x);
            let best = obj(&p);
            for _ in 0..200 {
                let x = &p + random(&mut rng, 4, 3) * rng.random_range(1e-4..1.0);
                assert!(best <= obj(&x) + 1e-12);
            }
        }
    }

    #[test]
    fn nsd_diagonal_clip() {
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -3.0]));
        let p = project_nsd(&w).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -3.0]));
        assert!((p - expected).amax() < 1e-14);
    }

    #[test]
    fn nsd_fixed_point_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let a = random(&mut rng, 5, 5);
            let nsd = -(&a * a.transpose());
            assert!((project_nsd(&nsd).unwrap() - &nsd).amax() < 1e-10);
            let w = random(&mut rng, 5, 5);
            let p = project_nsd(&w).unwrap();
            assert!(max_eigenvalue(&p) <= 1e-9);
            assert!((&p - p.transpose()).amax() <= 1e-10);
            assert!((project_nsd(&p).unwrap() - &p).amax() < 1e-10);
        }
    }

    #[test]
    fn nsd_is_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random(&mut rng, 5, 5);
        let w = (&a + a.transpose()) * 0.5;
        let p = project_nsd(&w).unwrap();
        let dist = (&w - &p).norm();
        for _ in 0..100 {
            let b = random(&mut rng, 5, 5) * rng.random_range(0.01..2.0);
            let x = -(&b * b.transpose());
            assert!(dist <= (&w - x).norm() + 1e-12);
        }
    }

    #[test]
    fn nsd_rejects_rectangular() {
        assert!(project_nsd(&DMatrix::zeros(2, 3)).is_err());
    }
}
