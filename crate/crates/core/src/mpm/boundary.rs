use nalgebra::Vector3;

use super::Grid;
use crate::Real;

/// Grid-level collision constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition<T: Real> {
    /// Zeroes velocity of nodes behind the plane or within `thickness` cells in front of it.
    StickyPlane { point: Vector3<T>, normal: Vector3<T>, thickness: T },
    /// Removes the approaching normal velocity component in the same region.
    SlipPlane { point: Vector3<T>, normal: Vector3<T>, thickness: T },
    /// Slip planes on all six faces of the lattice.
    DomainWalls { thickness: T },
}

impl<T: Real> BoundaryCondition<T> {
    pub fn sticky(point: Vector3<T>, normal: Vector3<T>, thickness: T) -> Self {
        Self::StickyPlane { point, normal: normal.normalize(), thickness }
    }

    pub fn slip(point: Vector3<T>, normal: Vector3<T>, thickness: T) -> Self {
        Self::SlipPlane { point, normal: normal.normalize(), thickness }
    }

    pub fn is_normalized(&self) -> bool {
        match self {
            Self::StickyPlane { normal, .. } | Self::SlipPlane { normal, .. } => {
                (normal.norm() - T::one()).abs() <= T::lit(1e-8)
            }
            Self::DomainWalls { .. } => true,
        }
    }
}

fn slip<T: Real>(v: &mut Vector3<T>, n: &Vector3<T>) {
    let vn = v.dot(n);
    if vn < T::zero() {
        *v -= n * vn;
    }
}

/// Applies every condition, in order, to the active nodes.
pub fn apply_boundary<T: Real>(grid: &mut Grid<T>, conditions: &[BoundaryCondition<T>]) {
    if conditions.is_empty() {
        return;
    }
    let dx = grid.spacing;
    let hi = grid.extent_max();
    let lo = grid.origin;
    for idx in 0..grid.node_count() {
        if !(grid.node_mass[idx] > T::zero()) {
            continue;
        }
        let x = grid.node_position(idx);
        let v = &mut grid.node_velocity[idx];
        for bc in conditions {
            match bc {
                BoundaryCondition::StickyPlane { point, normal, thickness } => {
                    if (x - point).dot(normal) < *thickness * dx {
                        *v = Vector3::zeros();
                    }
                }
                BoundaryCondition::SlipPlane { point, normal, thickness } => {
                    if (x - point).dot(normal) < *thickness * dx {
                        slip(v, normal);
                    }
                }
                BoundaryCondition::DomainWalls { thickness } => {
                    let band = *thickness * dx;
                    for a in 0..3 {
                        let mut n = Vector3::zeros();
                        if x[a] - lo[a] < band {
                            n[a] = T::one();
                            slip(v, &n);
                        } else if hi[a] - x[a] < band {
                            n[a] = -T::one();
                            slip(v, &n);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_with(v: Vector3<f64>) -> (Grid<f64>, usize) {
        let mut g = Grid::new(Vector3::repeat(-1.0), 0.25, [9, 9, 9]);
        let idx = g.index(4, 2, 4); // y = -0.5
        g.node_mass[idx] = 1.0;
        g.node_velocity[idx] = v;
        (g, idx)
    }

    #[test]
    fn sticky_ground() {
        let (mut g, idx) = grid_with(Vector3::new(1.0, -2.0, 0.0));
        apply_boundary(&mut g, &[BoundaryCondition::sticky(Vector3::zeros(), Vector3::y(), 0.0)]);
        assert_eq!(g.node_velocity[idx], Vector3::zeros());
    }

    #[test]
    fn slip_ground_removes_normal() {
        let (mut g, idx) = grid_with(Vector3::new(1.0, -2.0, 0.0));
        apply_boundary(&mut g, &[BoundaryCondition::slip(Vector3::zeros(), Vector3::y(), 0.0)]);
        assert_eq!(g.node_velocity[idx], Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn slip_allows_separation() {
        let (mut g, idx) = grid_with(Vector3::new(1.0, 2.0, 0.0));
        apply_boundary(&mut g, &[BoundaryCondition::slip(Vector3::zeros(), Vector3::y(), 0.0)]);
        assert_eq!(g.node_velocity[idx], Vector3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn sticky_thickness_band() {
        // node at y = -0.5 is 2 cells above a plane at y = -1
        let (mut g, idx) = grid_with(Vector3::new(0.0, -1.0, 0.0));
        let far = BoundaryCondition::sticky(Vector3::new(0.0, -1.0, 0.0), Vector3::y(), 1.5);
        apply_boundary(&mut g, &[far]);
        assert_eq!(g.node_velocity[idx], Vector3::new(0.0, -1.0, 0.0));
        let near = BoundaryCondition::sticky(Vector3::new(0.0, -1.0, 0.0), Vector3::y(), 2.5);
        apply_boundary(&mut g, &[near]);
        assert_eq!(g.node_velocity[idx], Vector3::zeros());
    }

    #[test]
    fn domain_walls_slip_every_face() {
        let mut g = Grid::new(Vector3::zeros(), 1.0, [9, 9, 9]);
        let lo = g.index(1, 4, 4);
        let hi = g.index(4, 4, 7);
        for idx in [lo, hi] {
            g.node_mass[idx] = 1.0;
            g.node_velocity[idx] = Vector3::new(-1.0, 0.5, 1.0);
        }
        apply_boundary(&mut g, &[BoundaryCondition::DomainWalls { thickness: 3.0 }]);
        assert_eq!(g.node_velocity[lo], Vector3::new(0.0, 0.5, 1.0));
        assert_eq!(g.node_velocity[hi], Vector3::new(-1.0, 0.5, 0.0));
    }

    #[test]
    fn inactive_nodes_untouched() {
        let (mut g, idx) = grid_with(Vector3::new(1.0, -2.0, 0.0));
        g.node_mass[idx] = 0.0;
        apply_boundary(&mut g, &[BoundaryCondition::sticky(Vector3::zeros(), Vector3::y(), 0.0)]);
        assert_eq!(g.node_velocity[idx], Vector3::new(1.0, -2.0, 0.0));
    }
}
