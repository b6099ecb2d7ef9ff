//! Scene configuration: TOML parsing, preset expansion, defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use splatmpm_core::constitutive::{ElasticityModel, MaterialParams, PlasticityModel};
use splatmpm_core::mpm::BoundaryCondition;
use thiserror::Error;

pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_MARGIN: usize = 4;
pub const DEFAULT_SUBSTEPS: usize = 20;
pub const DEFAULT_FRAMES: usize = 60;
pub const DEFAULT_GRAVITY: [f64; 3] = [0.0, -9.8, 0.0];
pub const DEFAULT_WALL_THICKNESS: f64 = 3.0;
pub const DEFAULT_IMAGE_SIZE: usize = 256;
pub const DEFAULT_FOV_Y: f64 = 45.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unknown material preset {name:?} (known: elastic, jelly, metal, sand, fracture)")]
    UnknownPreset { name: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elasticity {
    FixedCorotated,
    Stvk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plasticity {
    None,
    DruckerPrager,
    VonMises,
}

/// Fully resolved material description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// Preset this material was expanded from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub elasticity: Elasticity,
    pub plasticity: Plasticity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yield_stress: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stretch_limits: Option<[f64; 2]>,
}

impl MaterialConfig {
    pub fn to_params(&self) -> Result<MaterialParams<f64>, ConfigError> {
        let plasticity = match self.plasticity {
            Plasticity::None => PlasticityModel::None,
            Plasticity::DruckerPrager => PlasticityModel::DruckerPrager {
                friction_angle_deg: self
                    .friction_angle
                    .ok_or_else(|| invalid("material.friction_angle", "required for drucker_prager"))?,
            },
            Plasticity::VonMises => PlasticityModel::VonMises {
                yield_stress: self.yield_stress.ok_or_else(|| invalid("material.yield_stress", "required for von_mises"))?,
            },
        };
        let elasticity = match self.elasticity {
            Elasticity::FixedCorotated => ElasticityModel::FixedCorotated,
            Elasticity::Stvk => ElasticityModel::StVenantKirchhoff,
        };
        let params = MaterialParams::new(self.youngs_modulus, self.poisson_ratio, self.density, elasticity, plasticity)
            .map_err(|e| material_error(&e))?;
        match self.stretch_limits {
            Some([lo, hi]) => params.with_stretch_limits(lo, hi).map_err(|e| material_error(&e)),
            None => Ok(params),
        }
    }
}

fn material_error(e: &splatmpm_core::constitutive::ConstitutiveError) -> ConfigError {
    use splatmpm_core::constitutive::ConstitutiveError as E;
    match e {
        E::Parameter { name, value, expected } => invalid(&format!("material.{name}"), format!("{value} is outside {expected}")),
        other => invalid("material", other.to_string()),
    }
}

/// A named material preset with its default time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialPreset {
    pub name: &'static str,
    pub material: MaterialConfig,
    pub dt: f64,
}

pub const PRESET_NAMES: [&str; 5] = ["elastic", "jelly", "metal", "sand", "fracture"];

/// Engine defaults; these constants are tunable and not measured material data.
pub fn preset(name: &str) -> Option<MaterialPreset> {
    let base = |e: f64, nu: f64, elasticity, plasticity| MaterialConfig {
        preset: Some(name.to_string()),
        youngs_modulus: e,
        poisson_ratio: nu,
        density: 1000.0,
        elasticity,
        plasticity,
        friction_angle: None,
        yield_stress: None,
        stretch_limits: None,
    };
    let (material, dt) = match name {
        "elastic" => (base(2e5, 0.35, Elasticity::FixedCorotated, Plasticity::None), 2e-4),
        "jelly" => (base(1e4, 0.45, Elasticity::FixedCorotated, Plasticity::None), 5e-4),
        "metal" => {
            (MaterialConfig { yield_stress: Some(1e4), ..base(5e5, 0.3, Elasticity::FixedCorotated, Plasticity::VonMises) }, 1e-4)
        }
        "sand" => (
            MaterialConfig { friction_angle: Some(35.0), ..base(1e5, 0.3, Elasticity::Stvk, Plasticity::DruckerPrager) },
            2e-4,
        ),
        "fracture" => (
            MaterialConfig { stretch_limits: Some([0.5, 2.0]), ..base(2e5, 0.35, Elasticity::Stvk, Plasticity::None) },
            2e-4,
        ),
        _ => return None,
    };
    let name = PRESET_NAMES.iter().find(|n| **n == name)?;
    Some(MaterialPreset { name, material, dt })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub resolution: usize,
    pub margin: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub substeps_per_frame: usize,
    pub frame_count: usize,
    pub gravity: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Sticky,
    Slip,
    Walls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub kind: BoundaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 3]>,
    /// In grid cells.
    pub thickness: f64,
}

impl BoundaryConfig {
    pub fn to_condition(&self) -> BoundaryCondition<f64> {
        let v = |a: Option<[f64; 3]>| nalgebra::Vector3::from(a.unwrap_or_default());
        match self.kind {
            BoundaryKind::Sticky => BoundaryCondition::sticky(v(self.point), v(self.normal), self.thickness),
            BoundaryKind::Slip => BoundaryCondition::slip(v(self.point), v(self.normal), self.thickness),
            BoundaryKind::Walls => BoundaryCondition::DomainWalls { thickness: self.thickness },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub eye: [f64; 3],
    pub target: [f64; 3],
    pub up: [f64; 3],
    pub fov_y: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialVelocity {
    pub linear: [f64; 3],
    pub angular: [f64; 3],
    /// Rotation center; the cloud's bounding-box center when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<[f64; 3]>,
}

/// Uniform acceleration applied during frames `start_frame..end_frame` (1-based, end exclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalForce {
    pub acceleration: [f64; 3],
    pub start_frame: usize,
    pub end_frame: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Png => "png",
            Self::Ppm => "ppm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub format: ImageFormat,
    pub background: [f64; 3],
}

/// Fully resolved scene. Serializing it and parsing the result gives back an equal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub input_ply: PathBuf,
    pub material: MaterialConfig,
    pub grid: GridConfig,
    pub sim: SimSection,
    pub boundary: Vec<BoundaryConfig>,
    /// Automatic framing of the initial cloud when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_velocity: Option<InitialVelocity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_force: Option<ExternalForce>,
    pub output: OutputConfig,
}

// Raw, partially specified forms as written by users.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    input_ply: PathBuf,
    material: toml::Value,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    sim: RawSim,
    boundary: Option<Vec<RawBoundary>>,
    camera: Option<RawCamera>,
    initial_velocity: Option<RawInitialVelocity>,
    external_force: Option<ExternalForce>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    preset: Option<String>,
    youngs_modulus: Option<f64>,
    poisson_ratio: Option<f64>,
    density: Option<f64>,
    elasticity: Option<Elasticity>,
    plasticity: Option<Plasticity>,
    friction_angle: Option<f64>,
    yield_stress: Option<f64>,
    stretch_limits: Option<[f64; 2]>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    resolution: Option<usize>,
    margin: Option<usize>,
    bounds: Option<Bounds>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    substeps_per_frame: Option<usize>,
    frame_count: Option<usize>,
    gravity: Option<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    kind: BoundaryKind,
    point: Option<[f64; 3]>,
    normal: Option<[f64; 3]>,
    thickness: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCamera {
    eye: [f64; 3],
    target: [f64; 3],
    up: Option<[f64; 3]>,
    fov_y: Option<f64>,
    width: Option<usize>,
    height: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitialVelocity {
    linear: Option<[f64; 3]>,
    angular: Option<[f64; 3]>,
    pivot: Option<[f64; 3]>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    format: Option<ImageFormat>,
    background: Option<[f64; 3]>,
}

fn location(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

fn parse_error(text: &str, e: &toml::de::Error, prefix: &str) -> ConfigError {
    let (line, column) = e.span().map_or((0, 0), |s| location(text, s.start));
    ConfigError::Parse { line, column, message: format!("{prefix}{}", e.message().trim()) }
}

fn resolve_material(value: toml::Value) -> Result<(MaterialConfig, Option<f64>), ConfigError> {
    let raw = match value {
        toml::Value::String(name) => RawMaterial {
            preset: Some(name),
            youngs_modulus: None,
            poisson_ratio: None,
            density: None,
            elasticity: None,
            plasticity: None,
            friction_angle: None,
            yield_stress: None,
            stretch_limits: None,
        },
        toml::Value::Table(t) => RawMaterial::deserialize(t)
            .map_err(|e| ConfigError::Parse { line: 0, column: 0, message: format!("material: {}", e.message().trim()) })?,
        _ => return Err(invalid("material", "expected a preset name or a table")),
    };
    let (mut m, dt) = match &raw.preset {
        Some(name) => {
            let p = preset(name).ok_or_else(|| ConfigError::UnknownPreset { name: name.clone() })?;
            (p.material, Some(p.dt))
        }
        None => {
            let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(&format!("material.{key}"), "required without a preset"));
            (
                MaterialConfig {
                    preset: None,
                    youngs_modulus: need(raw.youngs_modulus, "youngs_modulus")?,
                    poisson_ratio: need(raw.poisson_ratio, "poisson_ratio")?,
                    density: need(raw.density, "density")?,
                    elasticity: raw.elasticity.unwrap_or(Elasticity::FixedCorotated),
                    plasticity: raw.plasticity.unwrap_or(Plasticity::None),
                    friction_angle: None,
                    yield_stress: None,
                    stretch_limits: None,
                },
                None,
            )
        }
    };
    if let Some(v) = raw.youngs_modulus {
        m.youngs_modulus = v;
    }
    if let Some(v) = raw.poisson_ratio {
        m.poisson_ratio = v;
    }
    if let Some(v) = raw.density {
        m.density = v;
    }
    if let Some(v) = raw.elasticity {
        m.elasticity = v;
    }
    if let Some(v) = raw.plasticity {
        m.plasticity = v;
    }
    m.friction_angle = raw.friction_angle.or(m.friction_angle);
    m.yield_stress = raw.yield_stress.or(m.yield_stress);
    m.stretch_limits = raw.stretch_limits.or(m.stretch_limits);
    // parameters that do not apply to the chosen model are dropped
    if m.plasticity != Plasticity::DruckerPrager {
        m.friction_angle = None;
    }
    if m.plasticity != Plasticity::VonMises {
        m.yield_stress = None;
    }
    Ok((m, dt))
}

/// Parses scene text, expands presets and fills defaults, then validates.
pub fn parse_config(text: &str) -> Result<SceneConfig, ConfigError> {
    let raw: RawScene = toml::from_str(text).map_err(|e| parse_error(text, &e, ""))?;
    let (material, preset_dt) = resolve_material(raw.material)?;
    let dt = match (raw.sim.dt, preset_dt) {
        (Some(dt), _) | (None, Some(dt)) => dt,
        (None, None) => return Err(invalid("sim.dt", "required when the material has no preset")),
    };
    let boundary = match raw.boundary {
        Some(list) => list
            .into_iter()
            .map(|b| BoundaryConfig {
                kind: b.kind,
                point: b.point,
                normal: b.normal,
                thickness: b.thickness.unwrap_or(match b.kind {
                    BoundaryKind::Walls => DEFAULT_WALL_THICKNESS,
                    _ => 0.0,
                }),
            })
            .collect(),
        None => vec![BoundaryConfig { kind: BoundaryKind::Walls, point: None, normal: None, thickness: DEFAULT_WALL_THICKNESS }],
    };
    let config = SceneConfig {
        input_ply: raw.input_ply,
        material,
        grid: GridConfig {
            resolution: raw.grid.resolution.unwrap_or(DEFAULT_RESOLUTION),
            margin: raw.grid.margin.unwrap_or(DEFAULT_MARGIN),
            bounds: raw.grid.bounds,
        },
        sim: SimSection {
            dt,
            substeps_per_frame: raw.sim.substeps_per_frame.unwrap_or(DEFAULT_SUBSTEPS),
            frame_count: raw.sim.frame_count.unwrap_or(DEFAULT_FRAMES),
            gravity: raw.sim.gravity.unwrap_or(DEFAULT_GRAVITY),
        },
        boundary,
        camera: raw.camera.map(|c| CameraConfig {
            eye: c.eye,
            target: c.target,
            up: c.up.unwrap_or([0.0, 1.0, 0.0]),
            fov_y: c.fov_y.unwrap_or(DEFAULT_FOV_Y),
            width: c.width.unwrap_or(DEFAULT_IMAGE_SIZE),
            height: c.height.unwrap_or(DEFAULT_IMAGE_SIZE),
        }),
        initial_velocity: raw.initial_velocity.map(|v| InitialVelocity {
            linear: v.linear.unwrap_or_default(),
            angular: v.angular.unwrap_or_default(),
            pivot: v.pivot,
        }),
        external_force: raw.external_force,
        output: OutputConfig {
            directory: raw.output.directory.unwrap_or_else(|| PathBuf::from("output")),
            format: raw.output.format.unwrap_or(ImageFormat::Png),
            background: raw.output.background.unwrap_or([1.0, 1.0, 1.0]),
        },
    };
    config.validate()?;
    Ok(config)
}

/// Reads and parses a config file; relative `input_ply` and `output.directory` paths are
/// taken relative to the file.
pub fn load_config(path: &Path) -> Result<SceneConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    let mut config = parse_config(&text).map_err(|source| LoadError::Config { path: path.to_path_buf(), source })?;
    if let Some(dir) = path.parent() {
        if config.input_ply.is_relative() {
            config.input_ply = dir.join(&config.input_ply);
        }
        if config.output.directory.is_relative() {
            config.output.directory = dir.join(&config.output.directory);
        }
    }
    Ok(config)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
}

fn finite3(path: &str, v: &[f64; 3]) -> Result<(), ConfigError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(invalid(path, "components must be finite"))
    }
}

fn unit_normal(path: &str, n: Option<[f64; 3]>) -> Result<(), ConfigError> {
    let n = n.ok_or_else(|| invalid(path, "required for plane boundaries"))?;
    finite3(path, &n)?;
    if n.iter().map(|c| c * c).sum::<f64>() < 1e-24 {
        return Err(invalid(path, "must be non-zero"));
    }
    Ok(())
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.material.to_params()?;
        if self.grid.resolution < 4 {
            return Err(invalid("grid.resolution", format!("must be at least 4, got {}", self.grid.resolution)));
        }
        if self.grid.margin < 2 {
            return Err(invalid("grid.margin", format!("must be at least 2 cells, got {}", self.grid.margin)));
        }
        if let Some(b) = &self.grid.bounds {
            finite3("grid.bounds.min", &b.min)?;
            finite3("grid.bounds.max", &b.max)?;
            if (0..3).any(|a| b.max[a] < b.min[a]) || (0..3).all(|a| b.max[a] == b.min[a]) {
                return Err(invalid("grid.bounds", "max must be >= min on every axis with a non-empty extent"));
            }
        }
        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(invalid("sim.dt", format!("must be positive, got {}", s.dt)));
        }
        if s.substeps_per_frame == 0 {
            return Err(invalid("sim.substeps_per_frame", "must be at least 1"));
        }
        if s.frame_count == 0 {
            return Err(invalid("sim.frame_count", "must be at least 1"));
        }
        finite3("sim.gravity", &s.gravity)?;
        for (i, b) in self.boundary.iter().enumerate() {
            let path = format!("boundary[{i}]");
            if !(b.thickness >= 0.0 && b.thickness.is_finite()) {
                return Err(invalid(&format!("{path}.thickness"), "must be a non-negative number of cells"));
            }
            if b.kind != BoundaryKind::Walls {
                let point = b.point.ok_or_else(|| invalid(&format!("{path}.point"), "required for plane boundaries"))?;
                finite3(&format!("{path}.point"), &point)?;
                unit_normal(&format!("{path}.normal"), b.normal)?;
            }
        }
        if let Some(c) = &self.camera {
            finite3("camera.eye", &c.eye)?;
            finite3("camera.target", &c.target)?;
            finite3("camera.up", &c.up)?;
            if !(c.fov_y > 0.0 && c.fov_y < 180.0) {
                return Err(invalid("camera.fov_y", format!("must lie in (0, 180) degrees, got {}", c.fov_y)));
            }
            if c.width == 0 || c.height == 0 {
                return Err(invalid("camera", "width and height must be positive"));
            }
            camera_from(c).map_err(|e| invalid("camera", e.to_string()))?;
        }
        if let Some(v) = &self.initial_velocity {
            finite3("initial_velocity.linear", &v.linear)?;
            finite3("initial_velocity.angular", &v.angular)?;
        }
        if let Some(f) = &self.external_force {
            finite3("external_force.acceleration", &f.acceleration)?;
            if f.start_frame == 0 || f.end_frame < f.start_frame {
                return Err(invalid("external_force", "need 1 <= start_frame <= end_frame"));
            }
        }
        let bg = &self.output.background;
        if !bg.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(invalid("output.background", "components must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Canonical TOML text; [`parse_config`] on it returns an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene config always serializes")
    }
}

pub fn camera_from(c: &CameraConfig) -> Result<splatmpm_core::Camera<f64>, splatmpm_core::render::CameraError> {
    use nalgebra::Vector3;
    splatmpm_core::Camera::look_at(
        Vector3::from(c.eye),
        Vector3::from(c.target),
        Vector3::from(c.up),
        c.fov_y,
        c.width,
        c.height,
    )
}

/// Camera-only file used by the `render` subcommand.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    camera: RawCameraOwned,
    #[serde(default)]
    pub background: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCameraOwned {
    eye: [f64; 3],
    target: [f64; 3],
    up: Option<[f64; 3]>,
    fov_y: Option<f64>,
    width: Option<usize>,
    height: Option<usize>,
}

impl CameraFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| parse_error(text, &e, ""))
    }

    pub fn camera(&self) -> CameraConfig {
        let c = &self.camera;
        CameraConfig {
            eye: c.eye,
            target: c.target,
            up: c.up.unwrap_or([0.0, 1.0, 0.0]),
            fov_y: c.fov_y.unwrap_or(DEFAULT_FOV_Y),
            width: c.width.unwrap_or(DEFAULT_IMAGE_SIZE),
            height: c.height.unwrap_or(DEFAULT_IMAGE_SIZE),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("input_ply = \"cube.ply\"\nmaterial = \"jelly\"\n").unwrap();
        assert_eq!(c.grid.resolution, 64);
        assert_eq!(c.grid.margin, 4);
        assert_eq!(c.sim.dt, 5e-4);
        assert_eq!(c.sim.gravity, [0.0, -9.8, 0.0]);
        assert_eq!(c.material.youngs_modulus, 1e4);
        assert_eq!(c.boundary.len(), 1);
        assert_eq!(c.output.format, ImageFormat::Png);
    }

    #[test]
    fn unknown_preset_is_named() {
        let e = parse_config("input_ply = \"a.ply\"\nmaterial = \"granite\"\n").unwrap_err();
        assert_eq!(e, ConfigError::UnknownPreset { name: "granite".into() });
        assert!(e.to_string().contains("granite"));
    }

    #[test]
    fn syntax_error_has_location() {
        let e = parse_config("input_ply = \"a.ply\"\nmaterial = = \"jelly\"\n").unwrap_err();
        match e {
            ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (2, 12)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config("input_ply = \"a.ply\"\nmaterial = \"jelly\"\n[sim]\nfps = 3\n").unwrap_err();
        match e {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("fps"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let e = parse_config("input_ply = \"a.ply\"\n[material]\npreset = \"jelly\"\ncolour = 1\n").unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
    }

    #[test]
    fn constraint_violation_names_key_path() {
        let e = parse_config("input_ply = \"a.ply\"\nmaterial = \"jelly\"\n[sim]\ndt = -1.0\n").unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { path, .. } if path == "sim.dt"), "{e}");
        let e = parse_config("input_ply = \"a.ply\"\n[material]\npreset = \"jelly\"\npoisson_ratio = 0.7\n").unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { path, .. } if path == "material.poisson_ratio"), "{e}");
        let text = "input_ply = \"a.ply\"\nmaterial = \"sand\"\n[[boundary]]\nkind = \"sticky\"\npoint = [0,0,0]\n";
        let e = parse_config(text).unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { path, .. } if path == "boundary[0].normal"), "{e}");
    }

    #[test]
    fn presets_are_consistent() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            let params = p.material.to_params().unwrap();
            let expect = match name {
                "elastic" | "jelly" | "fracture" => Plasticity::None,
                "metal" => Plasticity::VonMises,
                _ => Plasticity::DruckerPrager,
            };
            assert_eq!(p.material.plasticity, expect, "{name}");
            assert_eq!(params.density(), 1000.0);
            assert!(p.dt > 0.0);
        }
        assert_eq!(preset("fracture").unwrap().material.stretch_limits, Some([0.5, 2.0]));
        assert!(preset("granite").is_none());
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
input_ply = "scene/cube.ply"

[material]
preset = "metal"
yield_stress = 2e4

[grid]
resolution = 48
bounds = { min = [-1, 0, -1], max = [1, 2, 1] }

[sim]
substeps_per_frame = 10
frame_count = 5
gravity = [0, -3, 0]

[[boundary]]
kind = "sticky"
point = [0, 0.1, 0]
normal = [0, 1, 0]

[[boundary]]
kind = "walls"

[camera]
eye = [0, 1, 4]
target = [0, 1, 0]
width = 64
height = 48

[initial_velocity]
angular = [0, 2, 0]

[external_force]
acceleration = [1, 0, 0]
start_frame = 1
end_frame = 3

[output]
directory = "frames"
format = "ppm"
background = [0, 0, 0]
"#;
        let a = parse_config(text).unwrap();
        assert_eq!(a.material.yield_stress, Some(2e4));
        assert_eq!(a.sim.dt, 1e-4);
        let b = parse_config(&a.to_toml()).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_toml(), a.to_toml());
    }

    #[test]
    fn inline_material_needs_dt() {
        let text = "input_ply = \"a.ply\"\n[material]\nyoungs_modulus = 1e5\npoisson_ratio = 0.2\ndensity = 500\n";
        let e = parse_config(text).unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { path, .. } if path == "sim.dt"));
        let c = parse_config(&format!("{text}[sim]\ndt = 1e-4\n")).unwrap();
        assert_eq!(c.material.preset, None);
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }
}
