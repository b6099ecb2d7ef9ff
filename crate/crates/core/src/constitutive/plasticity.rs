use nalgebra::{Matrix3, Vector3};

use super::{polar_svd3, ConstitutiveError, Decomposition3, MaterialParams, PlasticityModel};
use crate::Real;

/// Hencky strain of a decomposition, rejecting non-positive singular values.
fn log_strain<T: Real>(d: &Decomposition3<T>) -> Result<Vector3<T>, ConstitutiveError> {
    if let Some(bad) = d.sigma.iter().find(|s| !(**s > T::zero())) {
        return Err(ConstitutiveError::Degenerate { sigma: bad.as_f64() });
    }
    Ok(d.sigma.map(|s| s.ln()))
}

fn deviator<T: Real>(eps: &Vector3<T>) -> Vector3<T> {
    eps.add_scalar(-eps.sum() / T::lit(3.0))
}

/// Cone slope `sqrt(2/3) · 2 sin φ / (3 − sin φ)` for a friction angle in degrees.
pub fn drucker_prager_alpha<T: Real>(friction_angle_deg: T) -> T {
    let s = (friction_angle_deg * T::pi() / T::lit(180.0)).sin();
    (T::lit(2.0) / T::lit(3.0)).sqrt() * T::lit(2.0) * s / (T::lit(3.0) - s)
}

/// Yield amount `δγ = ‖dev ε‖ + α (3λ + 2μ) tr(ε) / (2μ)` for principal log strains `eps`.
pub fn drucker_prager_yield<T: Real>(eps: &Vector3<T>, alpha: T, mu: T, lambda: T) -> T {
    let dim = T::lit(3.0);
    let two_mu = T::lit(2.0) * mu;
    deviator(eps).norm() + alpha * (dim * lambda + two_mu) * eps.sum() / two_mu
}

/// Drucker-Prager projection of `F_E`.
///
/// Expansion (`tr ε > 0`) collapses the stretch to a pure rotation; states inside the cone
/// are returned unchanged; otherwise the deviatoric strain is shortened by `δγ`.
pub fn return_map_drucker_prager<T: Real>(
    f: &Matrix3<T>,
    params: &MaterialParams<T>,
    friction_angle_deg: T,
) -> Result<Matrix3<T>, ConstitutiveError> {
    let d = polar_svd3(f)?;
    let eps = log_strain(&d)?;
    let trace = eps.sum();
    if trace > T::zero() {
        return Ok(d.rotation());
    }
    let alpha = drucker_prager_alpha(friction_angle_deg);
    let dgamma = drucker_prager_yield(&eps, alpha, params.shear_modulus(), params.lame_modulus());
    if dgamma <= T::zero() {
        return Ok(*f);
    }
    let dev = deviator(&eps);
    let dev_norm = dev.norm();
    if dev_norm == T::zero() {
        // unreachable for tr ε <= 0, kept for direction safety
        return Ok(*f);
    }
    let projected = eps - dev * (dgamma / dev_norm);
    Ok(d.recompose_with(&projected.map(|e| e.exp())))
}

/// von Mises projection of `F_E` onto `‖dev ε‖ ≤ KY / (2μ)`.
pub fn return_map_von_mises<T: Real>(
    f: &Matrix3<T>,
    params: &MaterialParams<T>,
    yield_stress: T,
) -> Result<Matrix3<T>, ConstitutiveError> {
    let d = polar_svd3(f)?;
    let eps = log_strain(&d)?;
    let dev = deviator(&eps);
    let dev_norm = dev.norm();
    let dgamma = dev_norm - yield_stress / (T::lit(2.0) * params.shear_modulus());
    if dgamma <= T::zero() || dev_norm == T::zero() {
        return Ok(*f);
    }
    let projected = eps - dev * (dgamma / dev_norm);
    Ok(d.recompose_with(&projected.map(|e| e.exp())))
}

/// Applies the material's plastic projection; identity when it has none.
pub fn return_map<T: Real>(
    f: &Matrix3<T>,
    params: &MaterialParams<T>,
) -> Result<Matrix3<T>, ConstitutiveError> {
    match params.plasticity {
        PlasticityModel::None => Ok(*f),
        PlasticityModel::DruckerPrager { friction_angle_deg } => {
            return_map_drucker_prager(f, params, friction_angle_deg)
        }
        PlasticityModel::VonMises { yield_stress } => return_map_von_mises(f, params, yield_stress),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ElasticityModel;

    fn sand() -> MaterialParams<f64> {
        MaterialParams::new(
            1e5,
            0.3,
            1000.0,
            ElasticityModel::StVenantKirchhoff,
            PlasticityModel::DruckerPrager { friction_angle_deg: 30.0 },
        )
        .unwrap()
    }

    fn metal(ky: f64) -> MaterialParams<f64> {
        MaterialParams::new(
            5e5,
            0.3,
            1000.0,
            ElasticityModel::FixedCorotated,
            PlasticityModel::VonMises { yield_stress: ky },
        )
        .unwrap()
    }

    #[test]
    fn alpha_at_thirty_degrees() {
        let want = (2.0f64 / 3.0).sqrt() * 1.0 / 2.5;
        assert!((drucker_prager_alpha(30.0f64) - want).abs() < 1e-15);
        assert!((want - 0.326_598_632_371_090_4).abs() < 1e-15);
    }

    #[test]
    fn expansion_collapses_to_rotation() {
        let f = Matrix3::from_diagonal_element(0.1f64.exp());
        let out = return_map(&f, &sand()).unwrap();
        assert!((out - Matrix3::identity()).amax() < 1e-12);
    }

    #[test]
    fn mild_compression_is_elastic() {
        let f = Matrix3::from_diagonal_element((-0.05f64).exp());
        assert_eq!(return_map(&f, &sand()).unwrap(), f);
    }

    #[test]
    fn von_mises_below_yield_and_volumetric() {
        let f = Matrix3::from_diagonal(&Vector3::new(1.001, 1.0, 0.999));
        assert_eq!(return_map(&f, &metal(1e4)).unwrap(), f);
        let f = Matrix3::from_diagonal_element(1.3);
        assert_eq!(return_map(&f, &metal(1.0)).unwrap(), f);
    }

    #[test]
    fn von_mises_zero_yield_removes_deviator() {
        let f = Matrix3::new(1.2, 0.3, 0.0, 0.0, 0.9, 0.1, 0.0, 0.0, 1.05);
        let out = return_map(&f, &metal(0.0)).unwrap();
        let eps = polar_svd3(&out).unwrap().sigma.map(f64::ln);
        assert!(deviator(&eps).norm() <= 1e-10);
        assert!((out.determinant() - f.determinant()).abs() < 1e-12);
    }

    #[test]
    fn plasticity_none_is_identity() {
        let p = MaterialParams::new(1.0, 0.2, 1.0, ElasticityModel::FixedCorotated, PlasticityModel::None).unwrap();
        let f = Matrix3::new(1.2, 0.3, 0.0, 0.0, 0.9, 0.1, 0.0, 0.0, 1.05);
        assert_eq!(return_map(&f, &p).unwrap(), f);
    }
}
