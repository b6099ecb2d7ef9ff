use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::stencil::{affine_prefactor, bspline_stencil, StencilEntry};
use super::{apply_boundary, BoundaryCondition, Grid, SimError};
use crate::constitutive::{kirchhoff_stress, return_map, MaterialParams};
use crate::splat::GaussianCloud;
use crate::Real;

/// Particles per parallel batch in deterministic scatter.
const SCATTER_CHUNK: usize = 4096;

/// Lagrangian material sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle<T: Real> {
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    pub mass: T,
    pub initial_volume: T,
    pub elastic_deformation: Matrix3<T>,
    /// APIC affine velocity matrix, 1/s.
    pub affine: Matrix3<T>,
    pub material_id: usize,
    pub splat_index: usize,
}

impl<T: Real> Particle<T> {
    pub fn at_rest(position: Vector3<T>, mass: T, initial_volume: T, splat_index: usize) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            mass,
            initial_volume,
            elastic_deformation: Matrix3::identity(),
            affine: Matrix3::zeros(),
            material_id: 0,
            splat_index,
        }
    }
}

/// How particle contributions are summed onto grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// Contributions computed in parallel, summed in particle-index order. Bit-identical
    /// for any thread count.
    #[default]
    Deterministic,
    /// Per-worker dense buffers combined in work-stealing order. Faster on large clouds,
    /// last-bit results may vary between runs.
    Unordered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CflPolicy {
    /// Fail the substep when `dt · max|v| >= Δx`.
    #[default]
    Abort,
    /// Split the offending substep into halves until the bound holds.
    ClampDt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T: Real> {
    pub dt: T,
    pub gravity: Vector3<T>,
    pub substeps_per_frame: usize,
    pub boundary: Vec<BoundaryCondition<T>>,
    pub accumulation: Accumulation,
    pub cfl: CflPolicy,
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > T::zero()) || !self.dt.is_finite_value() {
            return Err(SimError::Config(format!("dt must be positive, got {}", self.dt.as_f64())));
        }
        if self.substeps_per_frame == 0 {
            return Err(SimError::Config("substeps_per_frame must be >= 1".into()));
        }
        if let Some(bad) = self.boundary.iter().position(|b| !b.is_normalized()) {
            return Err(SimError::Config(format!("boundary {bad}: plane normal is not unit length")));
        }
        Ok(())
    }
}

/// One particle per splat; volume is the cell volume shared among the particles in that cell.
pub fn seed_particles<T: Real>(
    cloud: &GaussianCloud<T>,
    material: &MaterialParams<T>,
    grid: &Grid<T>,
) -> Result<Vec<Particle<T>>, SimError> {
    let mut cells = Vec::with_capacity(cloud.count());
    let mut occupancy: HashMap<[usize; 3], usize> = HashMap::new();
    for (index, splat) in cloud.splats.iter().enumerate() {
        let x = splat.position;
        let domain_err = || SimError::Domain { index, position: [x.x.as_f64(), x.y.as_f64(), x.z.as_f64()] };
        bspline_stencil(&x, grid).map_err(|_| domain_err())?;
        let cell = grid.cell_of(&x).ok_or_else(domain_err)?;
        *occupancy.entry(cell).or_default() += 1;
        cells.push(cell);
    }
    let cell_volume = grid.spacing * grid.spacing * grid.spacing;
    Ok(cloud
        .splats
        .iter()
        .zip(&cells)
        .enumerate()
        .map(|(index, (splat, cell))| {
            let volume = cell_volume / T::lit(occupancy[cell] as f64);
            Particle::at_rest(splat.position, material.density() * volume, volume, index)
        })
        .collect())
}

type Contribution<T> = [(usize, T, Vector3<T>); 27];

fn escaped<T: Real>(index: usize, x: &Vector3<T>) -> SimError {
    SimError::ParticleEscaped { index, position: [x.x.as_f64(), x.y.as_f64(), x.z.as_f64()] }
}

fn stencil_for<T: Real>(index: usize, p: &Particle<T>, grid: &Grid<T>) -> Result<[StencilEntry<T>; 27], SimError> {
    bspline_stencil(&p.position, grid).map_err(|_| escaped(index, &p.position))
}

/// Sums per-particle node contributions into `mass` / `vector` (both indexed by node).
///
/// The grid is only read for its geometry; the caller moves the target arrays out of it.
fn scatter<T, F>(
    particles: &[Particle<T>],
    grid: &Grid<T>,
    mode: Accumulation,
    contribution: F,
    mass: &mut [T],
    vector: &mut [Vector3<T>],
) -> Result<(), SimError>
where
    T: Real,
    F: Fn(usize, &Particle<T>, &Grid<T>) -> Result<Contribution<T>, SimError> + Sync,
{
    match mode {
        Accumulation::Deterministic => {
            let mut buffer: Vec<Result<Contribution<T>, SimError>> = Vec::with_capacity(SCATTER_CHUNK);
            for (chunk_id, chunk) in particles.chunks(SCATTER_CHUNK).enumerate() {
                let offset = chunk_id * SCATTER_CHUNK;
                chunk
                    .par_iter()
                    .enumerate()
                    .map(|(i, p)| contribution(offset + i, p, grid))
                    .collect_into_vec(&mut buffer);
                for item in buffer.drain(..) {
                    for (node, s, v) in item? {
                        mass[node] += s;
                        vector[node] += v;
                    }
                }
            }
            Ok(())
        }
        Accumulation::Unordered => {
            let n = mass.len();
            let (m, v) = particles
                .par_iter()
                .enumerate()
                .with_min_len(SCATTER_CHUNK)
                .try_fold(
                    || (vec![T::zero(); n], vec![Vector3::zeros(); n]),
                    |(mut m, mut v), (i, p)| {
                        for (node, s, x) in contribution(i, p, grid)? {
                            m[node] += s;
                            v[node] += x;
                        }
                        Ok::<_, SimError>((m, v))
                    },
                )
                .try_reduce(
                    || (vec![T::zero(); n], vec![Vector3::zeros(); n]),
                    |(mut ma, mut va), (mb, vb)| {
                        for k in 0..n {
                            ma[k] += mb[k];
                            va[k] += vb[k];
                        }
                        Ok((ma, va))
                    },
                )?;
            for k in 0..n {
                mass[k] += m[k];
                vector[k] += v[k];
            }
            Ok(())
        }
    }
}

/// APIC particle-to-grid: `m_j = Σ w m_p`, `m_j v_j = Σ w m_p (v_p + A_p (x_j − x_p))`.
///
/// Expects a cleared grid; leaves node velocities (not momenta) behind.
pub fn particle_to_grid<T: Real>(
    particles: &[Particle<T>],
    grid: &mut Grid<T>,
    mode: Accumulation,
) -> Result<(), SimError> {
    let mut mass = std::mem::take(&mut grid.node_mass);
    let mut momentum = std::mem::take(&mut grid.node_velocity);
    let result = scatter(
        particles,
        grid,
        mode,
        |i, p, g| {
            let stencil = stencil_for(i, p, g)?;
            Ok(stencil.map(|e| {
                let wm = e.weight * p.mass;
                (e.node, wm, (p.velocity + p.affine * e.offset) * wm)
            }))
        },
        &mut mass,
        &mut momentum,
    );
    for (m, v) in mass.iter().zip(momentum.iter_mut()) {
        if *m > T::zero() {
            *v /= *m;
        }
    }
    grid.node_mass = mass;
    grid.node_velocity = momentum;
    result
}

/// Internal stress and body force: `v_j += −(Δt/m_j) Σ τ_p ∇w V_p⁰ + Δt g`.
///
/// Nodes without mass are skipped.
pub fn grid_update<T: Real>(
    grid: &mut Grid<T>,
    particles: &[Particle<T>],
    materials: &[MaterialParams<T>],
    dt: T,
    gravity: &Vector3<T>,
    mode: Accumulation,
    substep: u64,
) -> Result<(), SimError> {
    let mut force = std::mem::take(&mut grid.node_force);
    // mass slot of the scatter is unused here; contributions carry zero
    let mut unused = std::mem::take(&mut grid.node_mass);
    let result = scatter(
        particles,
        grid,
        mode,
        |i, p, g| {
            let material = materials.get(p.material_id).ok_or(SimError::MissingMaterial { index: p.material_id })?;
            let tau = kirchhoff_stress(&p.elastic_deformation, material)
                .map_err(|source| SimError::Material { substep, index: i, source })?
                .tau;
            let stencil = stencil_for(i, p, g)?;
            let scaled = tau * p.initial_volume;
            Ok(stencil.map(|e| (e.node, T::zero(), -(scaled * e.grad))))
        },
        &mut unused,
        &mut force,
    );
    grid.node_mass = unused;
    grid.node_force = force;
    result?;

    let g = gravity * dt;
    for (node, ((m, v), f)) in grid
        .node_mass
        .iter()
        .zip(grid.node_velocity.iter_mut())
        .zip(&grid.node_force)
        .enumerate()
    {
        if *m > T::zero() {
            *v += f * (dt / *m) + g;
            if v.iter().any(|c| !c.is_finite_value()) {
                return Err(SimError::NumericFault { substep, node });
            }
        }
    }
    Ok(())
}

/// Grid-to-particle gather, then position, affine matrix and deformation gradient updates
/// followed by the material's plastic projection.
pub fn grid_to_particle<T: Real>(
    particles: &mut [Particle<T>],
    grid: &Grid<T>,
    materials: &[MaterialParams<T>],
    dt: T,
    substep: u64,
) -> Result<(), SimError> {
    let prefactor = affine_prefactor(grid.spacing);
    let first_error = particles
        .par_iter_mut()
        .enumerate()
        .filter_map(|(i, p)| {
            let mut update = || -> Result<(), SimError> {
                let stencil = stencil_for(i, p, grid)?;
                let mut v = Vector3::zeros();
                let mut b = Matrix3::zeros();
                let mut grad_v = Matrix3::zeros();
                for e in &stencil {
                    let vj = grid.node_velocity[e.node];
                    v += vj * e.weight;
                    b += (vj * e.weight) * e.offset.transpose();
                    grad_v += vj * e.grad.transpose();
                }
                let trial = (Matrix3::identity() + grad_v * dt) * p.elastic_deformation;
                let det = trial.determinant();
                if !(det > T::zero()) || !det.is_finite_value() {
                    return Err(SimError::Inverted { substep, index: i, det: det.as_f64() });
                }
                let material =
                    materials.get(p.material_id).ok_or(SimError::MissingMaterial { index: p.material_id })?;
                let projected = return_map(&trial, material)
                    .map_err(|source| SimError::Material { substep, index: i, source })?;

                p.velocity = v;
                p.position += v * dt;
                p.affine = b * prefactor;
                p.elastic_deformation = projected;
                Ok(())
            };
            update().err()
        })
        .min_by_key(particle_of);
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn particle_of(e: &SimError) -> usize {
    match e {
        SimError::Inverted { index, .. }
        | SimError::Material { index, .. }
        | SimError::ParticleEscaped { index, .. } => *index,
        _ => usize::MAX,
    }
}

/// Particles, grid, material table and stepping configuration.
#[derive(Debug, Clone)]
pub struct Simulation<T: Real> {
    pub particles: Vec<Particle<T>>,
    pub grid: Grid<T>,
    pub materials: Vec<MaterialParams<T>>,
    pub config: SimConfig<T>,
    /// Extra uniform acceleration added to gravity, e.g. a timed external force.
    pub body_acceleration: Vector3<T>,
    substep: u64,
}

impl<T: Real> Simulation<T> {
    pub fn new(
        particles: Vec<Particle<T>>,
        grid: Grid<T>,
        materials: Vec<MaterialParams<T>>,
        config: SimConfig<T>,
    ) -> Result<Self, SimError> {
        config.validate()?;
        if let Some(p) = particles.iter().find(|p| p.material_id >= materials.len()) {
            return Err(SimError::MissingMaterial { index: p.material_id });
        }
        Ok(Self { particles, grid, materials, config, body_acceleration: Vector3::zeros(), substep: 0 })
    }

    /// Number of substeps completed so far.
    pub fn substeps_taken(&self) -> u64 {
        self.substep
    }

    pub fn max_speed(&self) -> T {
        self.particles.iter().fold(T::zero(), |m, p| m.max(p.velocity.norm()))
    }

    pub fn total_mass(&self) -> T {
        self.particles.iter().fold(T::zero(), |a, p| a + p.mass)
    }

    pub fn total_momentum(&self) -> Vector3<T> {
        self.particles.iter().fold(Vector3::zeros(), |a, p| a + p.velocity * p.mass)
    }

    /// One substep of length `config.dt`, subject to the CFL policy.
    pub fn step(&mut self) -> Result<(), SimError> {
        let dt = self.config.dt;
        let dx = self.grid.spacing;
        let speed = self.max_speed();
        if dt * speed < dx {
            return self.substep_with(dt);
        }
        match self.config.cfl {
            CflPolicy::Abort => Err(SimError::Cfl {
                substep: self.substep,
                dt: dt.as_f64(),
                max_speed: speed.as_f64(),
                dx: dx.as_f64(),
            }),
            CflPolicy::ClampDt => {
                let mut pieces = 2u32;
                while dt / T::lit(pieces as f64) * speed >= dx {
                    pieces *= 2;
                    if pieces > 1 << 16 {
                        return Err(SimError::Cfl {
                            substep: self.substep,
                            dt: dt.as_f64(),
                            max_speed: speed.as_f64(),
                            dx: dx.as_f64(),
                        });
                    }
                }
                log::warn!("substep {}: CFL bound exceeded, splitting dt into {pieces} pieces", self.substep);
                let sub = dt / T::lit(pieces as f64);
                for _ in 0..pieces {
                    self.substep_with(sub)?;
                }
                Ok(())
            }
        }
    }

    fn substep_with(&mut self, dt: T) -> Result<(), SimError> {
        let mode = self.config.accumulation;
        let gravity = self.config.gravity + self.body_acceleration;
        self.grid.clear();
        particle_to_grid(&self.particles, &mut self.grid, mode)?;
        grid_update(&mut self.grid, &self.particles, &self.materials, dt, &gravity, mode, self.substep)?;
        apply_boundary(&mut self.grid, &self.config.boundary);
        grid_to_particle(&mut self.particles, &self.grid, &self.materials, dt, self.substep)?;
        self.substep += 1;
        Ok(())
    }

    /// Runs `substeps_per_frame` substeps.
    pub fn advance_frame(&mut self) -> Result<(), SimError> {
        for _ in 0..self.config.substeps_per_frame {
            self.step()?;
        }
        Ok(())
    }
}
