use nalgebra::Vector3;

use crate::Real;

/// Uniform cubic background lattice. Node `(i, j, k)` sits at `origin + spacing · (i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Real> {
    pub dims: [usize; 3],
    pub spacing: T,
    pub origin: Vector3<T>,
    pub node_mass: Vec<T>,
    /// Momentum during particle-to-grid accumulation, velocity afterwards.
    pub node_velocity: Vec<Vector3<T>>,
    /// Internal force scratch used by the grid update.
    pub node_force: Vec<Vector3<T>>,
}

impl<T: Real> Grid<T> {
    pub fn new(origin: Vector3<T>, spacing: T, dims: [usize; 3]) -> Self {
        assert!(spacing > T::zero(), "grid spacing must be positive");
        assert!(dims.iter().all(|d| *d >= 3), "grid needs at least 3 nodes per axis");
        let n = dims[0] * dims[1] * dims[2];
        Self {
            dims,
            spacing,
            origin,
            node_mass: vec![T::zero(); n],
            node_velocity: vec![Vector3::zeros(); n],
            node_force: vec![Vector3::zeros(); n],
        }
    }

    /// Lattice covering `[lo, hi]` with `resolution` cells along the longest axis plus
    /// `margin` cells on every side.
    pub fn from_bounds(lo: Vector3<T>, hi: Vector3<T>, resolution: usize, margin: usize) -> Self {
        let extent = hi - lo;
        let longest = extent.max();
        let spacing = if longest > T::zero() { longest / T::lit(resolution as f64) } else { T::one() };
        let dims = [0, 1, 2].map(|a| {
            let cells = (extent[a] / spacing).ceil().to_usize().unwrap_or(0).max(1);
            cells + 2 * margin + 1
        });
        let origin = lo - Vector3::repeat(spacing * T::lit(margin as f64));
        Self::new(origin, spacing, dims)
    }

    pub fn node_count(&self) -> usize {
        self.node_mass.len()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let k = index % self.dims[2];
        let j = (index / self.dims[2]) % self.dims[1];
        let i = index / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    pub fn node_position(&self, index: usize) -> Vector3<T> {
        let [i, j, k] = self.coords(index);
        self.origin + Vector3::new(T::lit(i as f64), T::lit(j as f64), T::lit(k as f64)) * self.spacing
    }

    /// Upper corner of the lattice.
    pub fn extent_max(&self) -> Vector3<T> {
        self.origin
            + Vector3::new(
                T::lit((self.dims[0] - 1) as f64),
                T::lit((self.dims[1] - 1) as f64),
                T::lit((self.dims[2] - 1) as f64),
            ) * self.spacing
    }

    /// Cell containing `x`, if inside the lattice.
    pub fn cell_of(&self, x: &Vector3<T>) -> Option<[usize; 3]> {
        let u = (x - self.origin) / self.spacing;
        let mut cell = [0usize; 3];
        for a in 0..3 {
            let c = u[a].floor();
            if !(c >= T::zero()) || c >= T::lit((self.dims[a] - 1) as f64) {
                return None;
            }
            cell[a] = c.to_usize()?;
        }
        Some(cell)
    }

    pub fn clear(&mut self) {
        self.node_mass.fill(T::zero());
        self.node_velocity.fill(Vector3::zeros());
        self.node_force.fill(Vector3::zeros());
    }

    pub fn total_mass(&self) -> T {
        self.node_mass.iter().fold(T::zero(), |a, m| a + *m)
    }

    /// Σ m_j v_j over active nodes.
    pub fn total_momentum(&self) -> Vector3<T> {
        self.node_mass
            .iter()
            .zip(&self.node_velocity)
            .filter(|(m, _)| **m > T::zero())
            .fold(Vector3::zeros(), |acc, (m, v)| acc + v * *m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::<f64>::new(Vector3::zeros(), 0.5, [4, 5, 6]);
        for idx in 0..g.node_count() {
            let [i, j, k] = g.coords(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.node_position(g.index(1, 2, 3)), Vector3::new(0.5, 1.0, 1.5));
    }

    #[test]
    fn bounds_sizing() {
        let g = Grid::<f64>::from_bounds(Vector3::zeros(), Vector3::new(2.0, 1.0, 0.5), 64, 4);
        assert_eq!(g.spacing, 2.0 / 64.0);
        assert_eq!(g.dims, [64 + 9, 32 + 9, 16 + 9]);
        assert_eq!(g.origin, Vector3::repeat(-4.0 * 2.0 / 64.0));
        assert!(g.cell_of(&Vector3::new(2.0, 1.0, 0.5)).is_some());
        assert!(g.cell_of(&Vector3::new(-1.0, 0.0, 0.0)).is_none());
    }
}
