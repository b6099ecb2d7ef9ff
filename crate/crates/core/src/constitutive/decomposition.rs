use nalgebra::{Matrix3, Vector3};

use super::{check_finite, ConstitutiveError};
use crate::Real;

/// Sign-corrected singular value decomposition `F = U diag(sigma) Vᵀ` with proper rotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition3<T: Real> {
    pub u: Matrix3<T>,
    /// Descending; only the last entry may be negative, and only when `det(F) < 0`.
    pub sigma: Vector3<T>,
    pub v: Matrix3<T>,
}

impl<T: Real> Decomposition3<T> {
    pub fn rotation(&self) -> Matrix3<T> {
        self.u * self.v.transpose()
    }

    pub fn recompose(&self) -> Matrix3<T> {
        self.recompose_with(&self.sigma)
    }

    /// `U diag(sigma) Vᵀ` with replacement singular values.
    pub fn recompose_with(&self, sigma: &Vector3<T>) -> Matrix3<T> {
        let mut us = self.u;
        for c in 0..3 {
            us.column_mut(c).scale_mut(sigma[c]);
        }
        us * self.v.transpose()
    }
}

/// SVD of a 3×3 matrix with `det(U) = det(V) = +1`.
///
/// Singular values are sorted descending (stable, so ties keep their column order). A
/// reflection is absorbed by negating the last column of `U` or `V` together with the
/// smallest singular value.
pub fn polar_svd3<T: Real>(f: &Matrix3<T>) -> Result<Decomposition3<T>, ConstitutiveError> {
    check_finite(f)?;
    let svd = f.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(ConstitutiveError::NonFinite);
    };
    let s = svd.singular_values;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));

    let v = v_t.transpose();
    let mut out = Decomposition3 {
        u: Matrix3::from_columns(&order.map(|i| u.column(i).into_owned())),
        sigma: Vector3::from(order.map(|i| s[i])),
        v: Matrix3::from_columns(&order.map(|i| v.column(i).into_owned())),
    };

    if out.u.determinant() < T::zero() {
        out.u.column_mut(2).neg_mut();
        out.sigma[2] = -out.sigma[2];
    }
    if out.v.determinant() < T::zero() {
        out.v.column_mut(2).neg_mut();
        out.sigma[2] = -out.sigma[2];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn is_rotation(m: &Matrix3<f64>) -> bool {
        (m.transpose() * m - Matrix3::identity()).amax() < 1e-12 && (m.determinant() - 1.0).abs() < 1e-12
    }

    #[test]
    fn identity() {
        let d = polar_svd3(&Matrix3::<f64>::identity()).unwrap();
        assert_eq!(d.sigma, Vector3::repeat(1.0));
        assert!((d.u - Matrix3::identity()).amax() < 1e-15);
        assert!((d.v - Matrix3::identity()).amax() < 1e-15);
    }

    #[test]
    fn rotation_is_its_own_polar_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let r = Rotation3::new(axis).into_inner();
            let d = polar_svd3(&r).unwrap();
            assert!((d.sigma - Vector3::repeat(1.0)).amax() < 1e-12);
            assert!((d.rotation() - r).amax() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_and_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let f = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            let d = polar_svd3(&f).unwrap();
            assert!(is_rotation(&d.u) && is_rotation(&d.v));
            let err = (d.recompose() - f).norm() / f.norm();
            assert!(err <= 1e-8, "reconstruction error {err}");
            assert!(d.sigma[0] >= d.sigma[1] && d.sigma[1] >= d.sigma[2].abs());
            assert_eq!(d.sigma[2] < 0.0, f.determinant() < 0.0);
        }
    }

    #[test]
    fn reflection_goes_to_last_value() {
        let f = Matrix3::from_diagonal(&Vector3::new(3.0, -2.0, 1.0));
        let d = polar_svd3(&f).unwrap();
        assert!((d.sigma - Vector3::new(3.0, 2.0, -1.0)).amax() < 1e-12);
        assert!((d.recompose() - f).amax() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let mut f = Matrix3::<f64>::identity();
        f[(1, 2)] = f64::NAN;
        assert_eq!(polar_svd3(&f), Err(ConstitutiveError::NonFinite));
    }
}
