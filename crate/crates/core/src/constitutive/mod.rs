//! Material parameters, Kirchhoff stress laws and plastic return mappings.
//!
//! All functions here are pure and operate on the elastic part `F_E` of the
//! deformation gradient.

mod decomposition;
mod elasticity;
mod plasticity;

pub use decomposition::{polar_svd3, Decomposition3};
pub use elasticity::{kirchhoff_fixed_corotated, kirchhoff_stress, kirchhoff_stvk, KirchhoffStress};
pub use plasticity::{
    drucker_prager_alpha, drucker_prager_yield, return_map, return_map_drucker_prager,
    return_map_von_mises,
};

use nalgebra::Matrix3;
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("material parameter `{name}` = {value} is out of range ({expected})")]
    Parameter { name: &'static str, value: f64, expected: &'static str },
    #[error("deformation gradient has non-finite entries")]
    NonFinite,
    #[error("inverted element: det(F) = {det}")]
    Inverted { det: f64 },
    #[error("degenerate deformation: singular value {sigma} is not positive")]
    Degenerate { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElasticityModel {
    FixedCorotated,
    /// Hencky (logarithmic strain) St. Venant-Kirchhoff.
    StVenantKirchhoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlasticityModel<T: Real> {
    None,
    /// Granular yield; friction angle in degrees.
    DruckerPrager { friction_angle_deg: T },
    /// Deviatoric yield with yield stress `KY` in Pa.
    VonMises { yield_stress: T },
}

/// Shear and Lamé moduli from Young's modulus and Poisson ratio, returned as `(μ, λ)`.
pub fn lame_from_young_poisson<T: Real>(youngs: T, poisson: T) -> Result<(T, T), ConstitutiveError> {
    if !(youngs > T::zero()) || !youngs.is_finite_value() {
        return Err(ConstitutiveError::Parameter {
            name: "youngs_modulus",
            value: youngs.as_f64(),
            expected: "> 0",
        });
    }
    // ν = 0 is admitted: λ = 0 is a well defined degenerate case.
    if !(poisson >= T::zero() && poisson < T::lit(0.5)) {
        return Err(ConstitutiveError::Parameter {
            name: "poisson_ratio",
            value: poisson.as_f64(),
            expected: "[0, 0.5)",
        });
    }
    let one = T::one();
    let two = T::lit(2.0);
    let mu = youngs / (two * (one + poisson));
    let lambda = youngs * poisson / ((one + poisson) * (one - two * poisson));
    Ok((mu, lambda))
}

/// Elastic and plastic description of one material.
///
/// The moduli are derived once in [`MaterialParams::new`] and kept private so that
/// `μ` and `λ` always agree with `E` and `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams<T: Real> {
    youngs_modulus: T,
    poisson_ratio: T,
    shear_modulus: T,
    lame_modulus: T,
    density: T,
    pub elasticity: ElasticityModel,
    pub plasticity: PlasticityModel<T>,
    /// Optional clamp on singular values of `F_E` applied before the stress law.
    pub stretch_limits: Option<(T, T)>,
}

impl<T: Real> MaterialParams<T> {
    pub fn new(
        youngs_modulus: T,
        poisson_ratio: T,
        density: T,
        elasticity: ElasticityModel,
        plasticity: PlasticityModel<T>,
    ) -> Result<Self, ConstitutiveError> {
        let (shear_modulus, lame_modulus) = lame_from_young_poisson(youngs_modulus, poisson_ratio)?;
        if !(density > T::zero()) || !density.is_finite_value() {
            return Err(ConstitutiveError::Parameter {
                name: "density",
                value: density.as_f64(),
                expected: "> 0",
            });
        }
        match plasticity {
            PlasticityModel::DruckerPrager { friction_angle_deg: phi }
                if !(phi >= T::zero() && phi < T::lit(90.0)) =>
            {
                return Err(ConstitutiveError::Parameter {
                    name: "friction_angle",
                    value: phi.as_f64(),
                    expected: "[0, 90) degrees",
                });
            }
            PlasticityModel::VonMises { yield_stress } if !(yield_stress >= T::zero()) => {
                return Err(ConstitutiveError::Parameter {
                    name: "yield_stress",
                    value: yield_stress.as_f64(),
                    expected: ">= 0",
                });
            }
            _ => {}
        }
        Ok(Self {
            youngs_modulus,
            poisson_ratio,
            shear_modulus,
            lame_modulus,
            density,
            elasticity,
            plasticity,
            stretch_limits: None,
        })
    }

    pub fn with_stretch_limits(mut self, lo: T, hi: T) -> Result<Self, ConstitutiveError> {
        if !(lo > T::zero() && lo <= T::one() && hi >= T::one()) {
            return Err(ConstitutiveError::Parameter {
                name: "stretch_limits",
                value: lo.as_f64(),
                expected: "0 < lo <= 1 <= hi",
            });
        }
        self.stretch_limits = Some((lo, hi));
        Ok(self)
    }

    pub fn youngs_modulus(&self) -> T {
        self.youngs_modulus
    }

    pub fn poisson_ratio(&self) -> T {
        self.poisson_ratio
    }

    /// μ
    pub fn shear_modulus(&self) -> T {
        self.shear_modulus
    }

    /// λ
    pub fn lame_modulus(&self) -> T {
        self.lame_modulus
    }

    pub fn density(&self) -> T {
        self.density
    }

    /// Dilatational wave speed `sqrt((λ + 2μ) / ρ)`, used for time step sizing.
    pub fn wave_speed(&self) -> T {
        ((self.lame_modulus + T::lit(2.0) * self.shear_modulus) / self.density).sqrt()
    }
}

pub(crate) fn check_finite<T: Real>(f: &Matrix3<T>) -> Result<(), ConstitutiveError> {
    if f.iter().all(|v| v.is_finite_value()) {
        Ok(())
    } else {
        Err(ConstitutiveError::NonFinite)
    }
}
