use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Parser, Subcommand};
use nalgebra::Vector3;

use splatmpm_cli::config::{camera_from, load_config, CameraFile};
use splatmpm_cli::driver::{load_cloud, render_static, run_simulation, RunOptions};
use splatmpm_refine::{Refiner, RefinerConfig};

/// Physics-driven deformation and rendering of Gaussian splat clouds.
#[derive(Parser, Debug)]
#[command(name = "splatmpm", version, about)]
struct Cli {
    /// Worker threads for simulation and rendering (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Bit-reproducible accumulation; `--deterministic false` selects the faster unordered mode.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set, num_args = 0..=1,
          default_missing_value = "true", value_name = "BOOL")]
    deterministic: bool,
    /// Overrides the scene's output directory.
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Split substeps that violate the CFL bound instead of aborting.
    #[arg(long, global = true)]
    clamp_dt: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scene and write frames plus report.json.
    Simulate { config: PathBuf },
    /// Render a splat file once from the camera in a camera file.
    Render {
        ply: PathBuf,
        camera: PathBuf,
        /// Output image (.png or .ppm); defaults to render.png in the output directory.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Parse and check a scene file without running it.
    Validate { config: PathBuf },
    /// Print splat count, SH degree and bounds of a PLY file.
    Info { ply: PathBuf },
    /// Refine a text prompt through a chat-completion endpoint.
    Refine {
        prompt: String,
        /// Return the prompt unchanged without contacting any service.
        #[arg(long)]
        offline: bool,
        #[arg(long, env = "SPLATMPM_REFINE_ENDPOINT")]
        endpoint: Option<String>,
        #[arg(long, env = "SPLATMPM_REFINE_MODEL")]
        model: Option<String>,
        /// Environment variable holding the bearer token.
        #[arg(long, default_value = "SPLATMPM_REFINE_TOKEN")]
        token_env: String,
        /// Request timeout in seconds.
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
        /// Fail instead of falling back to the original prompt.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let options = RunOptions { deterministic: cli.deterministic, clamp_dt: cli.clamp_dt, output_dir: cli.output_dir.clone() };
    match &cli.command {
        Command::Simulate { config } => {
            let scene = load_config(config)?;
            let report = run_simulation(&scene, &options)?;
            let dir = options.output_dir.as_ref().unwrap_or(&scene.output.directory);
            if !cli.quiet {
                println!(
                    "wrote {} frames for {} particles to {} in {:.2} s",
                    report.frames.len(),
                    report.particle_count,
                    dir.display(),
                    report.total_wall_time_s
                );
            }
        }
        Command::Render { ply, camera, out } => {
            let text = std::fs::read_to_string(camera).with_context(|| format!("cannot read {}", camera.display()))?;
            let file = CameraFile::parse(&text).with_context(|| camera.display().to_string())?;
            let cam = camera_from(&file.camera()).with_context(|| format!("{}: camera", camera.display()))?;
            let background = Vector3::from(file.background.unwrap_or([1.0, 1.0, 1.0]));
            let cloud = load_cloud(ply)?;
            let image = render_static(&cloud, &cam, background)?;
            let path = match out {
                Some(p) => p.clone(),
                None => {
                    let dir = cli.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
                    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
                    dir.join("render.png")
                }
            };
            image.save(&path).with_context(|| format!("cannot write {}", path.display()))?;
            if !cli.quiet {
                println!("wrote {}", path.display());
            }
        }
        Command::Validate { config } => {
            let scene = load_config(config)?;
            let m = &scene.material;
            println!("config: {}", config.display());
            println!("input: {} ({})", scene.input_ply.display(), if scene.input_ply.exists() { "found" } else { "missing" });
            println!(
                "material: {} (E = {}, nu = {}, rho = {}, {:?}, {:?})",
                m.preset.as_deref().unwrap_or("inline"),
                m.youngs_modulus,
                m.poisson_ratio,
                m.density,
                m.elasticity,
                m.plasticity
            );
            println!("grid: {} cells on the longest axis, margin {}", scene.grid.resolution, scene.grid.margin);
            println!(
                "time: dt = {}, {} substeps x {} frames",
                scene.sim.dt, scene.sim.substeps_per_frame, scene.sim.frame_count
            );
            println!("boundaries: {}", scene.boundary.len());
            println!("ok");
        }
        Command::Info { ply } => info(ply)?,
        Command::Refine { prompt, offline, endpoint, model, token_env, timeout, strict } => {
            let config = if *offline {
                RefinerConfig::offline()
            } else {
                let Some(endpoint) = endpoint else {
                    bail!("no endpoint given; pass --endpoint, set SPLATMPM_REFINE_ENDPOINT or use --offline");
                };
                let Some(model) = model else {
                    bail!("no model given; pass --model or set SPLATMPM_REFINE_MODEL");
                };
                if !(*timeout > 0.0 && timeout.is_finite()) {
                    bail!("--timeout must be positive");
                }
                let mut c = RefinerConfig::online(endpoint.clone(), model.clone());
                c.token_env = std::env::var_os(token_env).map(|_| token_env.clone());
                c.timeout = Duration::from_secs_f64(*timeout);
                c.fallback = !strict;
                c
            };
            let out = Refiner::new(config)?.refine(prompt)?;
            if !out.refined && !offline {
                log::warn!("prompt was not refined");
            }
            println!("{}", out.text);
        }
    }
    Ok(())
}

fn info(path: &Path) -> Result<()> {
    let cloud = load_cloud(path)?;
    println!("file: {}", path.display());
    println!("count: {}", cloud.count());
    println!("sh_degree: {}", cloud.sh_degree);
    match cloud.bounds() {
        Some((lo, hi)) => {
            println!("bounds_min: [{}, {}, {}]", lo.x, lo.y, lo.z);
            println!("bounds_max: [{}, {}, {}]", hi.x, hi.y, hi.z);
        }
        None => println!("bounds: none"),
    }
    Ok(())
}
