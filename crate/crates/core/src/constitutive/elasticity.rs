use nalgebra::{Matrix3, Vector3};

use super::{polar_svd3, ConstitutiveError, Decomposition3, ElasticityModel, MaterialParams};
use crate::Real;

/// Kirchhoff stress `τ = (∂Ψ/∂F) Fᵀ`, symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KirchhoffStress<T: Real> {
    pub tau: Matrix3<T>,
}

impl<T: Real> KirchhoffStress<T> {
    pub fn zero() -> Self {
        Self { tau: Matrix3::zeros() }
    }
}

/// Fixed corotated law: `τ = 2μ (F − R) Fᵀ + λ (J − 1) J I`.
pub fn kirchhoff_fixed_corotated<T: Real>(
    f: &Matrix3<T>,
    mu: T,
    lambda: T,
) -> Result<KirchhoffStress<T>, ConstitutiveError> {
    let d = polar_svd3(f)?;
    fixed_corotated_from(f, &d, mu, lambda)
}

fn fixed_corotated_from<T: Real>(
    f: &Matrix3<T>,
    d: &Decomposition3<T>,
    mu: T,
    lambda: T,
) -> Result<KirchhoffStress<T>, ConstitutiveError> {
    let j = f.determinant();
    if !(j > T::zero()) {
        return Err(ConstitutiveError::Inverted { det: j.as_f64() });
    }
    let r = d.rotation();
    let tau = (f - r) * f.transpose() * (T::lit(2.0) * mu)
        + Matrix3::from_diagonal_element(lambda * (j - T::one()) * j);
    Ok(KirchhoffStress { tau: symmetrize(tau) })
}

/// Hencky-strain St. Venant-Kirchhoff law: `τ = U (2μ ε + λ tr(ε) I) Uᵀ`, `ε = log Σ`.
pub fn kirchhoff_stvk<T: Real>(
    f: &Matrix3<T>,
    mu: T,
    lambda: T,
) -> Result<KirchhoffStress<T>, ConstitutiveError> {
    let d = polar_svd3(f)?;
    stvk_from(&d, mu, lambda)
}

fn stvk_from<T: Real>(
    d: &Decomposition3<T>,
    mu: T,
    lambda: T,
) -> Result<KirchhoffStress<T>, ConstitutiveError> {
    if let Some(bad) = d.sigma.iter().find(|s| !(**s > T::zero())) {
        return Err(ConstitutiveError::Degenerate { sigma: bad.as_f64() });
    }
    let eps = d.sigma.map(|s| s.ln());
    let trace = eps.sum();
    let principal = eps * (T::lit(2.0) * mu) + Vector3::repeat(lambda * trace);
    let mut us = d.u;
    for c in 0..3 {
        us.column_mut(c).scale_mut(principal[c]);
    }
    Ok(KirchhoffStress { tau: symmetrize(us * d.u.transpose()) })
}

/// Stress for a material, honoring its optional stretch clamp.
pub fn kirchhoff_stress<T: Real>(
    f: &Matrix3<T>,
    params: &MaterialParams<T>,
) -> Result<KirchhoffStress<T>, ConstitutiveError> {
    let mu = params.shear_modulus();
    let lambda = params.lame_modulus();
    let mut d = polar_svd3(f)?;
    let clamped;
    let f = match params.stretch_limits {
        Some((lo, hi)) => {
            d.sigma = d.sigma.map(|s| s.clamp(lo, hi));
            clamped = d.recompose();
            &clamped
        }
        None => f,
    };
    match params.elasticity {
        ElasticityModel::FixedCorotated => fixed_corotated_from(f, &d, mu, lambda),
        ElasticityModel::StVenantKirchhoff => stvk_from(&d, mu, lambda),
    }
}

fn symmetrize<T: Real>(m: Matrix3<T>) -> Matrix3<T> {
    (m + m.transpose()) * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::PlasticityModel;
    use nalgebra::Rotation3;

    #[test]
    fn rest_state_is_stress_free() {
        let i = Matrix3::<f64>::identity();
        assert_eq!(kirchhoff_fixed_corotated(&i, 3.0, 2.0).unwrap().tau.amax(), 0.0);
        assert_eq!(kirchhoff_stvk(&i, 3.0, 2.0).unwrap().tau.amax(), 0.0);
    }

    #[test]
    fn rotations_are_stress_free() {
        for axis in [Vector3::new(0.3, -1.2, 0.5), Vector3::new(2.0, 0.1, 0.0)] {
            let r = Rotation3::new(axis).into_inner();
            assert!(kirchhoff_fixed_corotated(&r, 5.0, 7.0).unwrap().tau.amax() < 1e-12);
            assert!(kirchhoff_stvk(&r, 5.0, 7.0).unwrap().tau.amax() < 1e-12);
        }
    }

    #[test]
    fn uniform_stretch_stvk() {
        let f = Matrix3::from_diagonal_element(std::f64::consts::E);
        let (mu, lambda) = (3.0, 2.0);
        let tau = kirchhoff_stvk(&f, mu, lambda).unwrap().tau;
        assert!((tau - Matrix3::from_diagonal_element(2.0 * mu + 3.0 * lambda)).amax() < 1e-12);
    }

    #[test]
    fn inverted_and_degenerate_inputs() {
        let f = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(kirchhoff_fixed_corotated(&f, 1.0, 1.0), Err(ConstitutiveError::Inverted { .. })));
        assert!(matches!(kirchhoff_stvk(&f, 1.0, 1.0), Err(ConstitutiveError::Degenerate { .. })));
        let f = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
        assert!(kirchhoff_stvk(&f, 1.0, 1.0).is_err());
    }

    #[test]
    fn stretch_limits_cap_the_stress() {
        let p = MaterialParams::new(1e3, 0.3, 1.0, ElasticityModel::StVenantKirchhoff, PlasticityModel::None)
            .unwrap()
            .with_stretch_limits(0.5, 2.0)
            .unwrap();
        let capped = kirchhoff_stress(&Matrix3::from_diagonal_element(2.0), &p).unwrap();
        let far = kirchhoff_stress(&Matrix3::from_diagonal_element(9.0), &p).unwrap();
        assert!((capped.tau - far.tau).amax() < 1e-9);
    }
}
