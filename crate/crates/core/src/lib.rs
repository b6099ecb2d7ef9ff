//! Physics-driven deformation of 3D Gaussian splat clouds.
//!
//! The pipeline: load a [`GaussianCloud`], seed one MPM particle per splat, advance the
//! particles with an explicit APIC/MPM stepper and a per-material elastoplastic law,
//! deform every Gaussian kernel by its particle's deformation gradient, then render the
//! result with depth-sorted, tiled alpha blending.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases at the crate
//! root pick a concrete precision.

pub mod constitutive;
pub mod deform;
pub mod mpm;
pub mod render;
pub mod scalar;
pub mod splat;

pub use constitutive::{ElasticityModel, MaterialParams, PlasticityModel};
pub use deform::{snapshot, DeformError, DeformedSnapshot, ViewDirection};
pub use mpm::{BoundaryCondition, Grid, Particle, SimConfig, SimError, Simulation};
pub use render::{render, Camera, Image, RenderError};
pub use scalar::Real;
pub use splat::{load_ply, save_ply, GaussianCloud, GaussianSplat, PlyError, SplatError};

pub type GaussianCloud64 = GaussianCloud<f64>;
pub type GaussianCloud32 = GaussianCloud<f32>;

pub type Simulation64 = Simulation<f64>;
pub type Simulation32 = Simulation<f32>;
pub type MaterialParams64 = MaterialParams<f64>;
pub type MaterialParams32 = MaterialParams<f32>;
pub type Camera64 = Camera<f64>;
pub type Camera32 = Camera<f32>;
