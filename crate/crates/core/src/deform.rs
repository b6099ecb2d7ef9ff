//! Maps simulated particles back onto renderable Gaussians.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::mpm::Particle;
use crate::splat::GaussianCloud;
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeformError {
    #[error("color tensor contains a non-finite value at splat {index}")]
    NonFinite { index: usize },
    #[error("color tensor is empty")]
    Empty,
    #[error("particle/splat mismatch: {0}")]
    Consistency(String),
}

/// Renderable state of the deformed cloud, indexed like the source cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformedSnapshot<T: Real> {
    pub positions: Vec<Vector3<T>>,
    pub covariances: Vec<Matrix3<T>>,
    pub opacities: Vec<T>,
    pub colors: Vec<Vector3<T>>,
}

impl<T: Real> DeformedSnapshot<T> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Direction used to evaluate view-dependent color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViewDirection<T: Real> {
    /// Same unit direction for every splat.
    Fixed(Vector3<T>),
    /// From this eye position towards each splat's current center.
    FromEye(Vector3<T>),
}

/// `F Σ Fᵀ`, symmetrized.
pub fn deform_covariance<T: Real>(sigma: &Matrix3<T>, f: &Matrix3<T>) -> Matrix3<T> {
    let m = f * sigma * f.transpose();
    (m + m.transpose()) * T::lit(0.5)
}

/// Rescales all channels of all splats by the global min/max when anything falls outside
/// [0, 1], then clamps to [0, 1]. In-range tensors are returned unchanged.
pub fn regularize_colors<T: Real>(colors: &[Vector3<T>]) -> Result<Vec<Vector3<T>>, DeformError> {
    let mut out = colors.to_vec();
    regularize_colors_in_place(&mut out)?;
    Ok(out)
}

pub fn regularize_colors_in_place<T: Real>(colors: &mut [Vector3<T>]) -> Result<(), DeformError> {
    if colors.is_empty() {
        return Err(DeformError::Empty);
    }
    let mut lo = colors[0].x;
    let mut hi = colors[0].x;
    for (index, c) in colors.iter().enumerate() {
        for v in c.iter() {
            if !v.is_finite_value() {
                return Err(DeformError::NonFinite { index });
            }
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    let (zero, one) = (T::zero(), T::one());
    let rescale = (hi > one || lo < zero) && hi > lo;
    let range = hi - lo;
    for c in colors.iter_mut() {
        for v in c.iter_mut() {
            let s = if rescale { (*v - lo) / range } else { *v };
            *v = s.max(zero).min(one);
        }
    }
    Ok(())
}

/// Builds the renderable state from particles and their source splats.
///
/// Kernels are deformed by each particle's elastic deformation gradient; SH coefficients
/// are evaluated unrotated.
pub fn snapshot<T: Real>(
    particles: &[Particle<T>],
    cloud: &GaussianCloud<T>,
    view: ViewDirection<T>,
) -> Result<DeformedSnapshot<T>, DeformError> {
    let n = cloud.count();
    if particles.len() != n {
        return Err(DeformError::Consistency(format!("{} particles for {} splats", particles.len(), n)));
    }
    let mut seen = vec![false; n];
    let mut positions = vec![Vector3::zeros(); n];
    let mut covariances = vec![Matrix3::zeros(); n];
    let mut opacities = vec![T::zero(); n];
    let mut colors = vec![Vector3::zeros(); n];
    for (pi, p) in particles.iter().enumerate() {
        let si = p.splat_index;
        if si >= n || seen[si] {
            return Err(DeformError::Consistency(format!("particle {pi} maps to splat {si} twice or out of range")));
        }
        seen[si] = true;
        let splat = &cloud.splats[si];
        positions[si] = p.position;
        covariances[si] = deform_covariance(&splat.covariance(), &p.elastic_deformation);
        opacities[si] = splat.opacity;
        let dir = match view {
            ViewDirection::Fixed(d) => d,
            ViewDirection::FromEye(eye) => {
                let d = p.position - eye;
                let norm = d.norm();
                if norm > T::zero() { d / norm } else { Vector3::z() }
            }
        };
        colors[si] = splat.sh_to_rgb(&dir);
    }
    if n > 0 {
        regularize_colors_in_place(&mut colors)?;
    }
    Ok(DeformedSnapshot { positions, covariances, opacities, colors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::GaussianSplat;

    #[test]
    fn identity_and_scaling() {
        let sigma = Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5);
        assert_eq!(deform_covariance(&sigma, &Matrix3::identity()), sigma);
        assert_eq!(deform_covariance(&sigma, &(Matrix3::identity() * 2.0)), sigma * 4.0);
    }

    #[test]
    fn regularize_examples() {
        let s = vec![Vector3::new(-0.5, 0.5, 1.5)];
        assert_eq!(regularize_colors(&s).unwrap(), vec![Vector3::new(0.0, 0.5, 1.0)]);
        let s = vec![Vector3::new(0.1, 0.5, 0.9), Vector3::new(0.0, 1.0, 0.3)];
        assert_eq!(regularize_colors(&s).unwrap(), s);
        let s = vec![Vector3::repeat(2.0)];
        assert_eq!(regularize_colors(&s).unwrap(), vec![Vector3::repeat(1.0)]);
    }

    #[test]
    fn regularize_errors() {
        assert_eq!(regularize_colors::<f64>(&[]), Err(DeformError::Empty));
        let s = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.0, f64::INFINITY, 0.0)];
        assert_eq!(regularize_colors(&s), Err(DeformError::NonFinite { index: 1 }));
    }

    fn cloud() -> GaussianCloud<f64> {
        let splats = (0..3)
            .map(|i| {
                GaussianSplat::new(
                    Vector3::new(i as f64, 0.0, 0.0),
                    [1.0, 0.2 * i as f64, 0.0, 0.1],
                    Vector3::new(0.1, 0.2, 0.3),
                    0.7,
                    vec![[0.3, -0.2, 1.5]],
                )
                .unwrap()
            })
            .collect();
        GaussianCloud::new(splats, 0).unwrap()
    }

    #[test]
    fn rest_snapshot_matches_cloud() {
        let c = cloud();
        let particles: Vec<_> = c
            .splats
            .iter()
            .enumerate()
            .rev()
            .map(|(i, s)| Particle::at_rest(s.position, 1.0, 1.0, i))
            .collect();
        let snap = snapshot(&particles, &c, ViewDirection::Fixed(Vector3::z())).unwrap();
        for (i, s) in c.splats.iter().enumerate() {
            assert_eq!(snap.positions[i], s.position);
            assert!((snap.covariances[i] - s.covariance()).amax() <= 1e-12);
            assert_eq!(snap.opacities[i], 0.7);
        }
        assert!(snap.colors.iter().flat_map(|c| c.iter()).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn misaligned_particles() {
        let c = cloud();
        let mut particles: Vec<_> = (0..3).map(|i| Particle::at_rest(Vector3::zeros(), 1.0, 1.0, i)).collect();
        particles[2].splat_index = 0;
        assert!(matches!(snapshot(&particles, &c, ViewDirection::Fixed(Vector3::z())), Err(DeformError::Consistency(_))));
        assert!(snapshot(&particles[..2], &c, ViewDirection::Fixed(Vector3::z())).is_err());
    }
}
