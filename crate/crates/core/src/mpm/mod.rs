//! Explicit MPM with APIC transfers and quadratic B-spline weights.
//!
//! One substep is: clear grid, particle-to-grid, grid update (stress and body forces),
//! boundary conditions, grid-to-particle (velocity, position, affine matrix, velocity
//! gradient, deformation gradient plus plastic projection).

mod boundary;
mod engine;
mod grid;
mod stencil;

pub use boundary::{apply_boundary, BoundaryCondition};
pub use engine::{
    grid_to_particle, grid_update, particle_to_grid, seed_particles, Accumulation, CflPolicy, Particle,
    SimConfig, Simulation,
};
pub use grid::Grid;
pub use stencil::{affine_prefactor, bspline_stencil, quadratic_kernel, StencilEntry, BSPLINE_DEGREE};

use thiserror::Error;

use crate::constitutive::ConstitutiveError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("splat {index} at {position:?} lies outside the simulation domain")]
    Domain { index: usize, position: [f64; 3] },
    #[error("stencil at {position:?} reaches past the grid boundary")]
    Stencil { position: [f64; 3] },
    #[error("particle {index} left the grid: {position:?}")]
    ParticleEscaped { index: usize, position: [f64; 3] },
    #[error("substep {substep}: NaN in grid velocity at node {node}")]
    NumericFault { substep: u64, node: usize },
    #[error("substep {substep}: particle {index} inverted (det F = {det})")]
    Inverted { substep: u64, index: usize, det: f64 },
    #[error("substep {substep}: particle {index}: {source}")]
    Material { substep: u64, index: usize, source: ConstitutiveError },
    #[error("substep {substep}: CFL violated, dt {dt} · max speed {max_speed} >= dx {dx}")]
    Cfl { substep: u64, dt: f64, max_speed: f64, dx: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("material index {index} has no entry in the material table")]
    MissingMaterial { index: usize },
}
