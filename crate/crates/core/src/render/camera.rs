use nalgebra::{Matrix3, Vector3};

use crate::Real;

/// Pinhole camera. Camera space is x right, y down, z forward; pixel `(0, 0)` is the
/// top-left corner and pixel centers sit at half-integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    /// World-to-camera rotation.
    pub rotation: Matrix3<T>,
    /// World-to-camera translation.
    pub translation: Vector3<T>,
    pub width: usize,
    pub height: usize,
    pub near: T,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("focal lengths must be positive")]
    Focal,
    #[error("rotation block is not orthonormal")]
    Rotation,
    #[error("image must have non-zero width and height")]
    EmptyImage,
    #[error("camera eye and target coincide or up is parallel to view")]
    Degenerate,
}

impl<T: Real> Camera<T> {
    /// Camera at `eye` looking at `target` with a vertical field of view in degrees.
    pub fn look_at(
        eye: Vector3<T>,
        target: Vector3<T>,
        up: Vector3<T>,
        fov_y_deg: T,
        width: usize,
        height: usize,
    ) -> Result<Self, CameraError> {
        let forward = (target - eye).try_normalize(T::lit(1e-12)).ok_or(CameraError::Degenerate)?;
        let right = forward.cross(&up).try_normalize(T::lit(1e-12)).ok_or(CameraError::Degenerate)?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let half = fov_y_deg * T::pi() / T::lit(360.0);
        let f = T::lit(height as f64) / (T::lit(2.0) * half.tan());
        let cam = Self {
            fx: f,
            fy: f,
            cx: T::lit(width as f64 / 2.0),
            cy: T::lit(height as f64 / 2.0),
            rotation,
            translation: -(rotation * eye),
            width,
            height,
            near: T::lit(0.01),
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(CameraError::Focal);
        }
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::EmptyImage);
        }
        let err = (self.rotation * self.rotation.transpose() - Matrix3::identity()).amax();
        if !(err <= T::lit(1e-8)) {
            return Err(CameraError::Rotation);
        }
        Ok(())
    }

    pub fn to_camera(&self, x: &Vector3<T>) -> Vector3<T> {
        self.rotation * x + self.translation
    }

    /// Eye position in world space.
    pub fn center(&self) -> Vector3<T> {
        -(self.rotation.transpose() * self.translation)
    }
}
