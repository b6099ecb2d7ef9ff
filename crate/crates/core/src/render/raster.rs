use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};
use rayon::prelude::*;

use super::{Camera, Image};
use crate::deform::DeformedSnapshot;
use crate::Real;

/// Screen-space diagonal added to every projected covariance, in px².
pub const COV2D_FLOOR: f64 = 0.3;
/// Blending stops once transmittance falls below this value.
pub const TRANSMITTANCE_CUTOFF: f64 = 1e-4;
/// Per-pixel alphas below this are skipped; it bounds each splat's screen footprint.
pub const MIN_ALPHA: f64 = 1.0 / 255.0;
pub const TILE_SIZE: usize = 16;

/// Screen-space Gaussian ready for compositing.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D<T: Real> {
    pub mean: Vector2<T>,
    /// Includes the [`COV2D_FLOOR`] diagonal.
    pub cov2d: Matrix2<T>,
    pub depth: T,
    pub color: Vector3<T>,
    pub opacity: T,
    /// Index of the source splat, used to break depth ties.
    pub index: usize,
}

/// EWA linearization `J W Σ Wᵀ Jᵀ` at camera-space point `t`, without the floor.
pub fn project_covariance<T: Real>(sigma: &nalgebra::Matrix3<T>, t: &Vector3<T>, camera: &Camera<T>) -> Matrix2<T> {
    let z = t.z;
    let z2 = z * z;
    let j = Matrix2x3::new(
        camera.fx / z,
        T::zero(),
        -camera.fx * t.x / z2,
        T::zero(),
        camera.fy / z,
        -camera.fy * t.y / z2,
    );
    let jw = j * camera.rotation;
    let m = jw * sigma * jw.transpose();
    (m + m.transpose()) * T::lit(0.5)
}

/// Projects every splat in front of the near plane; others are culled.
pub fn project<T: Real>(snapshot: &DeformedSnapshot<T>, camera: &Camera<T>) -> Vec<Splat2D<T>> {
    let floor = Matrix2::from_diagonal_element(T::lit(COV2D_FLOOR));
    (0..snapshot.len())
        .filter_map(|i| {
            let t = camera.to_camera(&snapshot.positions[i]);
            if !(t.z > camera.near) {
                return None;
            }
            let mean = Vector2::new(camera.fx * t.x / t.z + camera.cx, camera.fy * t.y / t.z + camera.cy);
            Some(Splat2D {
                mean,
                cov2d: project_covariance(&snapshot.covariances[i], &t, camera) + floor,
                depth: t.z,
                color: snapshot.colors[i],
                opacity: snapshot.opacities[i],
                index: i,
            })
        })
        .collect()
}

/// Per-splat data used in the inner loop.
struct Prepared<T: Real> {
    mean: Vector2<T>,
    conic: Matrix2<T>,
    color: Vector3<T>,
    opacity: T,
    /// Inclusive pixel bounds of the footprint, already clipped to the image.
    bbox: Option<[usize; 4]>,
}

fn sort_front_to_back<T: Real>(splats: &[Splat2D<T>]) -> Vec<&Splat2D<T>> {
    let mut sorted: Vec<&Splat2D<T>> = splats.iter().collect();
    sorted.sort_by(|a, b| {
        a.depth
            .partial_cmp(&b.depth)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.index.cmp(&b.index))
    });
    sorted
}

fn prepare<T: Real>(s: &Splat2D<T>, width: usize, height: usize) -> Option<Prepared<T>> {
    let conic = s.cov2d.try_inverse()?;
    let min_alpha = T::lit(MIN_ALPHA);
    let bbox = if s.opacity >= min_alpha {
        // α ≥ MIN_ALPHA  ⇔  dᵀ Σ⁻¹ d ≤ 2 ln(opacity / MIN_ALPHA)
        let q = T::lit(2.0) * (s.opacity / min_alpha).ln();
        let rx = (q * s.cov2d[(0, 0)]).sqrt();
        let ry = (q * s.cov2d[(1, 1)]).sqrt();
        let half = T::lit(0.5);
        // one pixel of slack on each side absorbs rounding in the bound
        let x0 = (s.mean.x - rx - half).floor() - T::one();
        let x1 = (s.mean.x + rx - half).ceil() + T::one();
        let y0 = (s.mean.y - ry - half).floor() - T::one();
        let y1 = (s.mean.y + ry - half).ceil() + T::one();
        let (w, h) = (T::lit(width as f64 - 1.0), T::lit(height as f64 - 1.0));
        if x1 < T::zero() || y1 < T::zero() || x0 > w || y0 > h || !x0.is_finite_value() || !y0.is_finite_value() {
            None
        } else {
            let clip = |v: T, hi: T| v.max(T::zero()).min(hi).to_usize().unwrap_or(0);
            Some([clip(x0, w), clip(y0, h), clip(x1, w), clip(y1, h)])
        }
    } else {
        None
    };
    Some(Prepared { mean: s.mean, conic, color: s.color, opacity: s.opacity, bbox })
}

/// Composites `splats` (front to back) at one pixel; `order` lists indices into `prepared`.
#[inline]
fn shade_pixel<T: Real>(
    px: usize,
    py: usize,
    prepared: &[Prepared<T>],
    order: impl Iterator<Item = usize>,
    background: &Vector3<T>,
) -> Vector3<T> {
    let half = T::lit(0.5);
    let p = Vector2::new(T::lit(px as f64) + half, T::lit(py as f64) + half);
    let min_alpha = T::lit(MIN_ALPHA);
    let cutoff = T::lit(TRANSMITTANCE_CUTOFF);
    let mut color = Vector3::zeros();
    let mut transmittance = T::one();
    for i in order {
        let s = &prepared[i];
        let d = p - s.mean;
        let power = d.x * d.x * s.conic[(0, 0)] + (d.x * d.y) * (s.conic[(0, 1)] + s.conic[(1, 0)])
            + d.y * d.y * s.conic[(1, 1)];
        let alpha = s.opacity * (-half * power).exp();
        if alpha < min_alpha {
            continue;
        }
        color += s.color * (alpha * transmittance);
        transmittance *= T::one() - alpha;
        if transmittance < cutoff {
            break;
        }
    }
    color + background * transmittance
}

fn prepare_all<T: Real>(splats: &[Splat2D<T>], camera: &Camera<T>) -> Vec<Prepared<T>> {
    sort_front_to_back(splats).into_iter().filter_map(|s| prepare(s, camera.width, camera.height)).collect()
}

/// Reference compositor: every pixel walks the full depth-sorted list.
pub fn rasterize_naive<T: Real>(splats: &[Splat2D<T>], camera: &Camera<T>, background: Vector3<T>) -> Image<T> {
    let prepared = prepare_all(splats, camera);
    let (w, h) = (camera.width, camera.height);
    let pixels = (0..w * h)
        .map(|k| shade_pixel(k % w, k / w, &prepared, 0..prepared.len(), &background))
        .collect();
    Image { width: w, height: h, pixels }
}

/// Tiled front-to-back compositor. Produces exactly the same pixels as
/// [`rasterize_naive`]: each tile visits the depth-sorted subset of splats whose
/// footprint can reach it, and footprints are conservative.
pub fn rasterize<T: Real>(splats: &[Splat2D<T>], camera: &Camera<T>, background: Vector3<T>) -> Image<T> {
    let prepared = prepare_all(splats, camera);
    let (w, h) = (camera.width, camera.height);
    let tiles_x = w.div_ceil(TILE_SIZE);
    let tiles_y = h.div_ceil(TILE_SIZE);

    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); tiles_x * tiles_y];
    for (i, s) in prepared.iter().enumerate() {
        if let Some([x0, y0, x1, y1]) = s.bbox {
            for ty in y0 / TILE_SIZE..=y1 / TILE_SIZE {
                for tx in x0 / TILE_SIZE..=x1 / TILE_SIZE {
                    bins[ty * tiles_x + tx].push(i);
                }
            }
        }
    }

    let tiles: Vec<Vec<Vector3<T>>> = bins
        .par_iter()
        .enumerate()
        .map(|(t, list)| {
            let (tx, ty) = (t % tiles_x, t / tiles_x);
            let xs = tx * TILE_SIZE..((tx + 1) * TILE_SIZE).min(w);
            let ys = ty * TILE_SIZE..((ty + 1) * TILE_SIZE).min(h);
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for py in ys {
                for px in xs.clone() {
                    out.push(shade_pixel(px, py, &prepared, list.iter().copied(), &background));
                }
            }
            out
        })
        .collect();

    let mut pixels = vec![Vector3::zeros(); w * h];
    for (t, block) in tiles.into_iter().enumerate() {
        let (tx, ty) = (t % tiles_x, t / tiles_x);
        let x0 = tx * TILE_SIZE;
        let tw = ((tx + 1) * TILE_SIZE).min(w) - x0;
        for (k, c) in block.into_iter().enumerate() {
            let (px, py) = (x0 + k % tw, ty * TILE_SIZE + k / tw);
            pixels[py * w + px] = c;
        }
    }
    Image { width: w, height: h, pixels }
}
