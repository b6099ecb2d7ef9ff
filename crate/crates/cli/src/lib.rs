//! Scene configuration, material presets and the simulation driver behind the
//! `splatmpm` command-line tool.

pub mod config;
pub mod driver;

pub use config::{load_config, parse_config, preset, ConfigError, MaterialPreset, SceneConfig, PRESET_NAMES};
pub use driver::{run_simulation, RunError, RunOptions, RunReport};
