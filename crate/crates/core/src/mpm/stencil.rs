//! Quadratic B-spline interpolation stencils.

use nalgebra::Vector3;

use super::{Grid, SimError};
use crate::Real;

/// Degree of the B-spline transfer kernel.
pub const BSPLINE_DEGREE: usize = 2;

/// APIC affine prefactor `12 / (Δx² (b + 1))`, which is `4 / Δx²` for quadratic splines.
pub fn affine_prefactor<T: Real>(spacing: T) -> T {
    T::lit(12.0) / (spacing * spacing * T::lit((BSPLINE_DEGREE + 1) as f64))
}

/// One node of a particle's 3×3×3 support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilEntry<T: Real> {
    pub node: usize,
    pub weight: T,
    /// Spatial gradient of the weight, in 1/m.
    pub grad: Vector3<T>,
    /// `x_node − x_particle`.
    pub offset: Vector3<T>,
}

/// Per-axis quadratic kernel `N(u)` at signed distance `u` (in cells).
pub fn quadratic_kernel<T: Real>(u: T) -> T {
    let a = u.abs();
    if a < T::lit(0.5) {
        T::lit(0.75) - a * a
    } else if a < T::lit(1.5) {
        let b = T::lit(1.5) - a;
        T::lit(0.5) * b * b
    } else {
        T::zero()
    }
}

/// The 27 weighted nodes around `x`. Nodes are ordered with the z offset varying fastest.
pub fn bspline_stencil<T: Real>(x: &Vector3<T>, grid: &Grid<T>) -> Result<[StencilEntry<T>; 27], SimError> {
    let inv_dx = T::one() / grid.spacing;
    let u = (x - grid.origin) * inv_dx;

    let mut base = [0usize; 3];
    let mut w = [[T::zero(); 3]; 3];
    let mut dw = [[T::zero(); 3]; 3];
    let mut frac = [T::zero(); 3];
    for a in 0..3 {
        let b = (u[a] - T::lit(0.5)).floor();
        let limit = T::lit(grid.dims[a] as f64 - 3.0);
        if !(b >= T::zero() && b <= limit) {
            return Err(SimError::Stencil { position: [x.x.as_f64(), x.y.as_f64(), x.z.as_f64()] });
        }
        base[a] = b.to_usize().unwrap_or(0);
        let fx = u[a] - b;
        frac[a] = fx;
        let d0 = T::lit(1.5) - fx;
        let d1 = fx - T::one();
        let d2 = fx - T::lit(0.5);
        w[a] = [T::lit(0.5) * d0 * d0, T::lit(0.75) - d1 * d1, T::lit(0.5) * d2 * d2];
        dw[a] = [-d0 * inv_dx, -T::lit(2.0) * d1 * inv_dx, d2 * inv_dx];
    }

    let zero = StencilEntry { node: 0, weight: T::zero(), grad: Vector3::zeros(), offset: Vector3::zeros() };
    let mut out = [zero; 27];
    let mut n = 0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let node = grid.index(base[0] + i, base[1] + j, base[2] + k);
                let offset = Vector3::new(
                    T::lit(i as f64) - frac[0],
                    T::lit(j as f64) - frac[1],
                    T::lit(k as f64) - frac[2],
                ) * grid.spacing;
                out[n] = StencilEntry {
                    node,
                    weight: w[0][i] * w[1][j] * w[2][k],
                    grad: Vector3::new(
                        dw[0][i] * w[1][j] * w[2][k],
                        w[0][i] * dw[1][j] * w[2][k],
                        w[0][i] * w[1][j] * dw[2][k],
                    ),
                    offset,
                };
                n += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::new(Vector3::new(-1.0, 0.0, 2.0), 0.25, [12, 12, 12])
    }

    #[test]
    fn prefactor_is_four_over_dx_squared() {
        for dx in [0.1f64, 0.25, 1.0, 3.0] {
            assert!((affine_prefactor(dx) - 4.0 / (dx * dx)).abs() <= 1e-12 * affine_prefactor(dx));
        }
    }

    #[test]
    fn kernel_closed_form() {
        assert_eq!(quadratic_kernel(0.0f64), 0.75);
        assert_eq!(quadratic_kernel(1.0f64), 0.125);
        assert_eq!(quadratic_kernel(-1.0f64), 0.125);
        assert_eq!(quadratic_kernel(1.5f64), 0.0);
        assert_eq!(quadratic_kernel(0.5f64), 0.5);
    }

    #[test]
    fn weights_at_a_node() {
        let g = grid();
        let x = g.node_position(g.index(5, 6, 7));
        let s = bspline_stencil(&x, &g).unwrap();
        let per_axis = [0.125, 0.75, 0.125];
        for (n, e) in s.iter().enumerate() {
            let (i, j, k) = (n / 9, (n / 3) % 3, n % 3);
            assert!((e.weight - per_axis[i] * per_axis[j] * per_axis[k]).abs() < 1e-15);
        }
        assert_eq!(s[13].node, g.index(5, 6, 7));
    }

    #[test]
    fn weights_match_kernel() {
        let g = grid();
        let x = Vector3::new(0.13, 1.31, 3.07);
        for e in bspline_stencil(&x, &g).unwrap() {
            let u = -e.offset / g.spacing;
            let want = quadratic_kernel(u.x) * quadratic_kernel(u.y) * quadratic_kernel(u.z);
            assert!((e.weight - want).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let g = grid();
        let x = Vector3::new(0.13, 1.31, 3.07);
        let h = 1e-6;
        let s = bspline_stencil(&x, &g).unwrap();
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let (sp, sm) = (bspline_stencil(&xp, &g).unwrap(), bspline_stencil(&xm, &g).unwrap());
            for n in 0..27 {
                let fd = (sp[n].weight - sm[n].weight) / (2.0 * h);
                assert!((fd - s[n].grad[a]).abs() < 1e-6, "axis {a} node {n}");
            }
        }
    }

    #[test]
    fn edge_particles_are_rejected() {
        let g = grid();
        assert!(bspline_stencil(&Vector3::new(-1.0, 1.0, 3.0), &g).is_err());
        let hi = g.extent_max();
        assert!(bspline_stencil(&(hi - Vector3::repeat(0.1)), &g).is_err());
        assert!(bspline_stencil(&(hi - Vector3::repeat(0.38)), &g).is_ok());
        assert!(bspline_stencil(&Vector3::new(f64::NAN, 1.0, 3.0), &g).is_err());
    }
}
