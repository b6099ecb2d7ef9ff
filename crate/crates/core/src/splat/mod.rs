//! Gaussian splat domain types.
//!
//! A [`GaussianCloud`] is the renderable asset consumed by the simulator: every splat
//! carries a mean, an orientation and per-axis extent (together forming its covariance),
//! an opacity and spherical-harmonic color coefficients.

mod ply;
mod sh;

pub use ply::{load_ply, save_ply, PlyError};
pub use sh::{sh_coefficient_count, SH_C0, SH_C1, SH_C2, SH_C3};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::Real;

/// Highest spherical harmonic degree supported by loader and evaluator.
pub const MAX_SH_DEGREE: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum SplatError {
    #[error("splat {index}: scale component {axis} is not positive ({value})")]
    NonPositiveScale { index: usize, axis: usize, value: f64 },
    #[error("splat {index}: opacity {value} is not strictly inside (0, 1)")]
    OpacityOutOfRange { index: usize, value: f64 },
    #[error("splat {index}: quaternion has zero or non-finite norm")]
    DegenerateRotation { index: usize },
    #[error("splat {index}: expected {expected} SH coefficients per channel, found {found}")]
    ShCount { index: usize, expected: usize, found: usize },
    #[error("sh degree {0} is not supported (max {MAX_SH_DEGREE})")]
    ShDegree(usize),
    #[error("splat {index}: non-finite value in {field}")]
    NonFinite { index: usize, field: &'static str },
}

/// One anisotropic 3D Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSplat<T: Real> {
    pub position: Vector3<T>,
    /// Unit quaternion, stored (w, x, y, z) in files.
    pub rotation: UnitQuaternion<T>,
    /// Per-axis standard deviations in scene units.
    pub scale: Vector3<T>,
    pub opacity: T,
    /// SH coefficients, coefficient-major: `sh[k]` holds the RGB triple of basis function `k`.
    pub sh: Vec<[T; 3]>,
}

impl<T: Real> GaussianSplat<T> {
    /// Builds a splat from a possibly unnormalized (w, x, y, z) quaternion.
    pub fn new(
        position: Vector3<T>,
        quat_wxyz: [T; 4],
        scale: Vector3<T>,
        opacity: T,
        sh: Vec<[T; 3]>,
    ) -> Result<Self, SplatError> {
        let q = Quaternion::new(quat_wxyz[0], quat_wxyz[1], quat_wxyz[2], quat_wxyz[3]);
        let norm = q.norm();
        if !(norm > T::zero()) || !norm.is_finite_value() {
            return Err(SplatError::DegenerateRotation { index: 0 });
        }
        let splat = Self {
            position,
            rotation: UnitQuaternion::new_normalize(q),
            scale,
            opacity,
            sh,
        };
        splat.validate(0)?;
        Ok(splat)
    }

    /// Checks the per-splat invariants; `index` is only used for error reporting.
    pub fn validate(&self, index: usize) -> Result<(), SplatError> {
        if self.position.iter().any(|v| !v.is_finite_value()) {
            return Err(SplatError::NonFinite { index, field: "position" });
        }
        for (axis, s) in self.scale.iter().enumerate() {
            if !(*s > T::zero()) || !s.is_finite_value() {
                return Err(SplatError::NonPositiveScale { index, axis, value: s.as_f64() });
            }
        }
        if !(self.opacity > T::zero() && self.opacity < T::one()) {
            return Err(SplatError::OpacityOutOfRange { index, value: self.opacity.as_f64() });
        }
        if self.sh.iter().flatten().any(|v| !v.is_finite_value()) {
            return Err(SplatError::NonFinite { index, field: "sh" });
        }
        Ok(())
    }

    /// Degree implied by the number of SH coefficients, if it is a valid square.
    pub fn sh_degree(&self) -> Option<usize> {
        (0..=MAX_SH_DEGREE).find(|d| sh_coefficient_count(*d) == self.sh.len())
    }

    /// World-space covariance `R diag(scale²) Rᵀ`.
    pub fn covariance(&self) -> Matrix3<T> {
        let r = self.rotation.to_rotation_matrix().into_inner();
        let s2 = self.scale.component_mul(&self.scale);
        let m = r * Matrix3::from_diagonal(&s2) * r.transpose();
        // exact symmetry for downstream eigen/cholesky users
        (m + m.transpose()) * T::lit(0.5)
    }

    /// View-dependent color, not yet restricted to [0, 1].
    pub fn sh_to_rgb(&self, view_dir: &Vector3<T>) -> Vector3<T> {
        sh::eval_sh(&self.sh, view_dir)
    }
}

/// Ordered collection of splats sharing one SH degree.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCloud<T: Real> {
    pub splats: Vec<GaussianSplat<T>>,
    pub sh_degree: usize,
}

impl<T: Real> GaussianCloud<T> {
    pub fn new(splats: Vec<GaussianSplat<T>>, sh_degree: usize) -> Result<Self, SplatError> {
        if sh_degree > MAX_SH_DEGREE {
            return Err(SplatError::ShDegree(sh_degree));
        }
        let expected = sh_coefficient_count(sh_degree);
        for (index, splat) in splats.iter().enumerate() {
            if splat.sh.len() != expected {
                return Err(SplatError::ShCount { index, expected, found: splat.sh.len() });
            }
            splat.validate(index)?;
        }
        Ok(Self { splats, sh_degree })
    }

    pub fn empty(sh_degree: usize) -> Self {
        Self { splats: Vec::new(), sh_degree }
    }

    pub fn count(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    /// Axis-aligned bounds of splat centers, `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vector3<T>, Vector3<T>)> {
        let first = self.splats.first()?.position;
        Some(self.splats.iter().fold((first, first), |(lo, hi), s| {
            (lo.inf(&s.position), hi.sup(&s.position))
        }))
    }
}
