//! Tile-based Gaussian splatting rasterizer.

mod camera;
mod raster;

pub use camera::{Camera, CameraError};
pub use raster::{
    project, project_covariance, rasterize, rasterize_naive, Splat2D, COV2D_FLOOR, MIN_ALPHA, TILE_SIZE,
    TRANSMITTANCE_CUTOFF,
};

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("camera: {0}")]
    Camera(#[from] CameraError),
    #[error("unsupported image extension {0:?} (expected png or ppm)")]
    Format(String),
    #[error("image encoding failed: {0}")]
    Encode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Linear RGB image, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T: Real> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Vector3<T>>,
}

impl<T: Real> Image<T> {
    pub fn filled(width: usize, height: usize, color: Vector3<T>) -> Self {
        Self { width, height, pixels: vec![color; width * height] }
    }

    pub fn pixel(&self, x: usize, y: usize) -> Vector3<T> {
        self.pixels[y * self.width + x]
    }

    /// Clamps to [0, 1] and quantizes with rounding. Non-finite values map to 0.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 3);
        for p in &self.pixels {
            for c in p.iter() {
                let v = c.as_f64();
                let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
                out.push((v * 255.0).round() as u8);
            }
        }
        out
    }

    /// Writes PNG or binary PPM, chosen by extension.
    pub fn save(&self, path: &Path) -> Result<(), RenderError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let bytes = self.to_rgb8();
        match ext.as_str() {
            "png" => image::save_buffer_with_format(
                path,
                &bytes,
                self.width as u32,
                self.height as u32,
                image::ExtendedColorType::Rgb8,
                image::ImageFormat::Png,
            )
            .map_err(|e| RenderError::Encode(e.to_string())),
            "ppm" => {
                let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                write_ppm(&mut f, self.width, self.height, &bytes)?;
                f.flush()?;
                Ok(())
            }
            other => Err(RenderError::Format(other.to_string())),
        }
    }
}

/// Binary P6 with maxval 255.
pub fn write_ppm<W: Write>(w: &mut W, width: usize, height: usize, rgb: &[u8]) -> std::io::Result<()> {
    write!(w, "P6\n{width} {height}\n255\n")?;
    w.write_all(rgb)
}

/// Projects and rasterizes a snapshot in one call.
pub fn render<T: Real>(
    snapshot: &crate::deform::DeformedSnapshot<T>,
    camera: &Camera<T>,
    background: Vector3<T>,
) -> Result<Image<T>, RenderError> {
    camera.validate()?;
    let splats = project(snapshot, camera);
    Ok(rasterize(&splats, camera, background))
}
