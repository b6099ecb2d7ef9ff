//! Runs a scene: load, seed, step, snapshot, render, write frames and a run report.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;
use splatmpm_core::deform::{snapshot, DeformError, ViewDirection};
use splatmpm_core::mpm::{seed_particles, Accumulation, CflPolicy, Grid, SimConfig, SimError, Simulation};
use splatmpm_core::render::{render, Camera, RenderError};
use splatmpm_core::{load_ply, GaussianCloud, PlyError};
use thiserror::Error;

use crate::config::{camera_from, ConfigError, SceneConfig, DEFAULT_FOV_Y, DEFAULT_IMAGE_SIZE};

pub const REPORT_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Input { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Ply { path: PathBuf, source: PlyError },
    #[error("input cloud is empty")]
    EmptyCloud,
    #[error("frame {frame}: {source}")]
    Sim { frame: usize, source: SimError },
    #[error("frame {frame}: non-finite particle state")]
    NonFinite { frame: usize, substep: u64 },
    #[error("frame {frame}: {source}")]
    Deform { frame: usize, source: DeformError },
    #[error("frame {frame}: {source}")]
    Render { frame: usize, source: RenderError },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl RunError {
    fn frame(&self) -> Option<usize> {
        match self {
            Self::Sim { frame, .. }
            | Self::NonFinite { frame, .. }
            | Self::Deform { frame, .. }
            | Self::Render { frame, .. } => Some(*frame),
            _ => None,
        }
    }

    fn substep(&self) -> Option<u64> {
        match self {
            Self::NonFinite { substep, .. } => Some(*substep),
            Self::Sim { source, .. } => match source {
                SimError::NumericFault { substep, .. }
                | SimError::Inverted { substep, .. }
                | SimError::Material { substep, .. }
                | SimError::Cfl { substep, .. } => Some(*substep),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Driver switches that are not part of the scene file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub deterministic: bool,
    pub clamp_dt: bool,
    /// Replaces `output.directory` when set.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { deterministic: true, clamp_dt: false, output_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame: usize,
    pub file: String,
    pub wall_time_s: f64,
    pub particle_count: usize,
    pub substeps: u64,
    pub max_velocity: f64,
    pub nan_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub message: String,
    pub frame: Option<usize>,
    pub substep: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: u32,
    pub status: &'static str,
    pub input: String,
    pub material: String,
    pub particle_count: usize,
    pub frame_count: usize,
    pub substeps_per_frame: usize,
    pub dt: f64,
    pub grid_dims: [usize; 3],
    pub grid_spacing: f64,
    pub deterministic: bool,
    pub nan_free: bool,
    pub total_wall_time_s: f64,
    pub frames: Vec<FrameReport>,
    pub error: Option<ErrorReport>,
}

pub fn load_cloud(path: &Path) -> Result<GaussianCloud<f64>, RunError> {
    let file = fs::File::open(path).map_err(|source| RunError::Input { path: path.to_path_buf(), source })?;
    load_ply(BufReader::new(file)).map_err(|source| RunError::Ply { path: path.to_path_buf(), source })
}

/// Frames the cloud from the +z side, slightly above, with the whole bounding sphere in view.
pub fn auto_camera(lo: Vector3<f64>, hi: Vector3<f64>) -> Camera<f64> {
    let center = (lo + hi) * 0.5;
    let radius = ((hi - lo).norm() * 0.5).max(1e-3);
    let half_fov = (DEFAULT_FOV_Y * 0.5).to_radians();
    let distance = radius / half_fov.sin() * 1.1;
    let dir = Vector3::new(0.0, 0.3, 1.0).normalize();
    Camera::look_at(center + dir * distance, center, Vector3::y(), DEFAULT_FOV_Y, DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE)
        .expect("automatic camera is well formed")
}

pub fn frame_file_name(frame: usize, extension: &str) -> String {
    format!("frame_{frame:05}.{extension}")
}

/// Builds the simulation described by `config` from an already loaded cloud.
pub fn build_simulation(
    config: &SceneConfig,
    cloud: &GaussianCloud<f64>,
    options: &RunOptions,
) -> Result<Simulation<f64>, RunError> {
    let (lo, hi) = cloud.bounds().ok_or(RunError::EmptyCloud)?;
    let (glo, ghi) = match &config.grid.bounds {
        Some(b) => (Vector3::from(b.min), Vector3::from(b.max)),
        None => (lo, hi),
    };
    let grid = Grid::from_bounds(glo, ghi, config.grid.resolution, config.grid.margin);
    let material = config.material.to_params()?;
    let mut particles =
        seed_particles(cloud, &material, &grid).map_err(|source| RunError::Sim { frame: 0, source })?;
    if let Some(v) = &config.initial_velocity {
        let pivot = v.pivot.map(Vector3::from).unwrap_or((lo + hi) * 0.5);
        let (linear, angular) = (Vector3::from(v.linear), Vector3::from(v.angular));
        for p in &mut particles {
            p.velocity = linear + angular.cross(&(p.position - pivot));
            // rigid motion carries its own affine field
            p.affine = angular.cross_matrix();
        }
    }
    let sim_config = SimConfig {
        dt: config.sim.dt,
        gravity: Vector3::from(config.sim.gravity),
        substeps_per_frame: config.sim.substeps_per_frame,
        boundary: config.boundary.iter().map(|b| b.to_condition()).collect(),
        accumulation: if options.deterministic { Accumulation::Deterministic } else { Accumulation::Unordered },
        cfl: if options.clamp_dt { CflPolicy::ClampDt } else { CflPolicy::Abort },
    };
    Simulation::new(particles, grid, vec![material], sim_config).map_err(|source| RunError::Sim { frame: 0, source })
}

fn write_report(dir: &Path, report: &RunReport) -> Result<(), RunError> {
    let path = dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&path, text).map_err(|source| RunError::Output { path, source })
}

/// Runs the whole scene, writing `frame_%05d.<ext>` files (1-based) and `report.json` into
/// the output directory. On failure the report is still written, with `status = "error"`.
pub fn run_simulation(config: &SceneConfig, options: &RunOptions) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let out_dir = options.output_dir.clone().unwrap_or_else(|| config.output.directory.clone());
    fs::create_dir_all(&out_dir).map_err(|source| RunError::Output { path: out_dir.clone(), source })?;

    let cloud = load_cloud(&config.input_ply)?;
    let mut sim = build_simulation(config, &cloud, options)?;
    let camera = match &config.camera {
        Some(c) => camera_from(c).map_err(|e| ConfigError::Invalid { path: "camera".into(), message: e.to_string() })?,
        None => {
            let (lo, hi) = cloud.bounds().ok_or(RunError::EmptyCloud)?;
            auto_camera(lo, hi)
        }
    };
    let eye = camera.center();
    let background = Vector3::from(config.output.background);
    let extension = config.output.format.extension();

    let mut report = RunReport {
        version: REPORT_VERSION,
        status: "ok",
        input: config.input_ply.display().to_string(),
        material: config.material.preset.clone().unwrap_or_else(|| "inline".into()),
        particle_count: sim.particles.len(),
        frame_count: config.sim.frame_count,
        substeps_per_frame: config.sim.substeps_per_frame,
        dt: config.sim.dt,
        grid_dims: sim.grid.dims,
        grid_spacing: sim.grid.spacing,
        deterministic: options.deterministic,
        nan_free: true,
        total_wall_time_s: 0.0,
        frames: Vec::with_capacity(config.sim.frame_count),
        error: None,
    };
    log::info!(
        "{} particles, grid {:?} at dx = {:.4}, {} frames x {} substeps",
        report.particle_count,
        report.grid_dims,
        report.grid_spacing,
        report.frame_count,
        report.substeps_per_frame
    );

    for frame in 1..=config.sim.frame_count {
        let result = run_frame(config, &mut sim, &cloud, &camera, eye, background, frame, &out_dir, extension);
        match result {
            Ok(fr) => {
                log::info!("frame {frame}: max |v| = {:.4} m/s, {:.3} s", fr.max_velocity, fr.wall_time_s);
                report.frames.push(fr);
            }
            Err(e) => {
                report.status = "error";
                report.nan_free = !matches!(
                    e,
                    RunError::NonFinite { .. } | RunError::Sim { source: SimError::NumericFault { .. }, .. }
                );
                report.error = Some(ErrorReport { message: e.to_string(), frame: e.frame(), substep: e.substep() });
                report.total_wall_time_s = start.elapsed().as_secs_f64();
                write_report(&out_dir, &report)?;
                return Err(e);
            }
        }
    }
    report.total_wall_time_s = start.elapsed().as_secs_f64();
    write_report(&out_dir, &report)?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn run_frame(
    config: &SceneConfig,
    sim: &mut Simulation<f64>,
    cloud: &GaussianCloud<f64>,
    camera: &Camera<f64>,
    eye: Vector3<f64>,
    background: Vector3<f64>,
    frame: usize,
    out_dir: &Path,
    extension: &str,
) -> Result<FrameReport, RunError> {
    let t0 = Instant::now();
    sim.body_acceleration = match &config.external_force {
        Some(f) if (f.start_frame..f.end_frame).contains(&frame) => Vector3::from(f.acceleration),
        _ => Vector3::zeros(),
    };
    sim.advance_frame().map_err(|source| RunError::Sim { frame, source })?;
    let finite = sim.particles.iter().all(|p| {
        p.position.iter().chain(p.velocity.iter()).all(|c| c.is_finite())
            && p.elastic_deformation.iter().all(|c| c.is_finite())
    });
    if !finite {
        return Err(RunError::NonFinite { frame, substep: sim.substeps_taken() });
    }
    let snap = snapshot(&sim.particles, cloud, ViewDirection::FromEye(eye))
        .map_err(|source| RunError::Deform { frame, source })?;
    let image = render(&snap, camera, background).map_err(|source| RunError::Render { frame, source })?;
    let file = frame_file_name(frame, extension);
    let path = out_dir.join(&file);
    image.save(&path).map_err(|source| match source {
        RenderError::Io(source) => RunError::Output { path: path.clone(), source },
        other => RunError::Render { frame, source: other },
    })?;
    Ok(FrameReport {
        frame,
        file,
        wall_time_s: t0.elapsed().as_secs_f64(),
        particle_count: sim.particles.len(),
        substeps: sim.substeps_taken(),
        max_velocity: sim.max_speed(),
        nan_free: true,
    })
}

/// Renders the undeformed cloud once.
pub fn render_static(
    cloud: &GaussianCloud<f64>,
    camera: &Camera<f64>,
    background: Vector3<f64>,
) -> Result<splatmpm_core::Image<f64>, RunError> {
    let particles = cloud
        .splats
        .iter()
        .enumerate()
        .map(|(i, s)| splatmpm_core::Particle::at_rest(s.position, 1.0, 1.0, i))
        .collect::<Vec<_>>();
    let snap = snapshot(&particles, cloud, ViewDirection::FromEye(camera.center()))
        .map_err(|source| RunError::Deform { frame: 0, source })?;
    render(&snap, camera, background).map_err(|source| RunError::Render { frame: 0, source })
}
