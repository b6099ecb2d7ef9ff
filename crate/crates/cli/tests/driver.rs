mod common;

use std::path::Path;

use nalgebra::Vector3;
use splatmpm_cli::config::{camera_from, load_config};
use splatmpm_cli::driver::{frame_file_name, load_cloud, render_static, run_simulation, RunOptions, RunReport};

fn run(config: &Path) -> RunReport {
    let scene = load_config(config).unwrap();
    run_simulation(&scene, &RunOptions::default()).unwrap()
}

fn quiet_scene(dir: &Path, n: usize, substeps: usize, frames: usize, extra: &str) -> std::path::PathBuf {
    let side = 0.1;
    let cloud = common::cube_cloud(n, Vector3::new(0.2, 0.2, 0.2), side);
    common::write_cloud(&cloud, &dir.join("cube.ply"));
    let text = format!(
        r#"input_ply = "cube.ply"
material = "jelly"

[grid]
resolution = 32
bounds = {{ min = [0, 0, 0], max = [0.5, 0.5, 0.5] }}

[sim]
substeps_per_frame = {substeps}
frame_count = {frames}
gravity = [0, 0, 0]

[camera]
eye = [0.25, 0.25, 1.0]
target = [0.25, 0.25, 0.25]
fov_y = 35
width = 64
height = 64

[output]
directory = "frames"
{extra}
"#
    );
    let path = dir.join("scene.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn jelly_drop_rises_then_settles() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&common::jelly_scene(dir.path(), 12, 60, 20));
    assert_eq!(report.status, "ok");
    assert!(report.nan_free);
    assert_eq!(report.frames.len(), 60);
    for (i, f) in report.frames.iter().enumerate() {
        assert_eq!(f.frame, i + 1);
        assert!(f.nan_free);
        assert!(dir.path().join("frames").join(&f.file).is_file());
    }
    let v: Vec<f64> = report.frames.iter().map(|f| f.max_velocity).collect();
    // free fall phase
    for w in v[..15].windows(2) {
        assert!(w[1] > w[0], "{v:?}");
    }
    let (peak_at, peak) = v.iter().enumerate().fold((0, 0.0), |a, (i, &x)| if x > a.1 { (i, x) } else { a });
    assert!(peak_at > 15 && peak_at < 59, "{v:?}");
    assert!(*v.last().unwrap() < peak);
}

#[test]
fn deterministic_runs_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run(&common::jelly_scene(a.path(), 8, 6, 20));
    let rb = run(&common::jelly_scene(b.path(), 8, 6, 20));
    for (fa, fb) in ra.frames.iter().zip(&rb.frames) {
        assert_eq!(fa.max_velocity.to_bits(), fb.max_velocity.to_bits());
        let ia = std::fs::read(a.path().join("frames").join(&fa.file)).unwrap();
        let ib = std::fs::read(b.path().join("frames").join(&fb.file)).unwrap();
        assert!(ia == ib, "frame {} differs", fa.frame);
    }
}

#[test]
fn undisturbed_first_frame_matches_static_render() {
    let dir = tempfile::tempdir().unwrap();
    let config = quiet_scene(dir.path(), 6, 1, 1, "");
    let scene = load_config(&config).unwrap();
    let report = run_simulation(&scene, &RunOptions::default()).unwrap();
    assert_eq!(report.frames[0].max_velocity, 0.0);
    let cloud = load_cloud(&scene.input_ply).unwrap();
    let camera = camera_from(scene.camera.as_ref().unwrap()).unwrap();
    let expected = render_static(&cloud, &camera, Vector3::from(scene.output.background)).unwrap().to_rgb8();
    let written = image::open(dir.path().join("frames").join(frame_file_name(1, "png"))).unwrap().to_rgb8();
    assert_eq!(written.as_raw(), &expected);
}

#[test]
fn report_schema() {
    let dir = tempfile::tempdir().unwrap();
    run(&quiet_scene(dir.path(), 4, 2, 3, ""));
    let text = std::fs::read_to_string(dir.path().join("frames/report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["material"], "jelly");
    assert_eq!(v["particle_count"], 64);
    assert_eq!(v["frame_count"], 3);
    assert_eq!(v["substeps_per_frame"], 2);
    assert_eq!(v["deterministic"], true);
    assert_eq!(v["nan_free"], true);
    assert!(v["grid_dims"].as_array().unwrap().len() == 3);
    assert!(v["error"].is_null());
    let frames = v["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 3);
    assert_eq!(frames[0]["file"], "frame_00001.png");
    assert_eq!(frames[2]["substeps"], 6);
    for f in frames {
        assert!(f["wall_time_s"].as_f64().unwrap() >= 0.0);
        assert_eq!(f["particle_count"], 64);
    }
}

#[test]
fn initial_linear_velocity_carries_over() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&quiet_scene(dir.path(), 4, 5, 2, "\n[initial_velocity]\nlinear = [0.5, 0, 0]\n"));
    for f in &r.frames {
        assert!((f.max_velocity - 0.5).abs() < 1e-9, "{}", f.max_velocity);
    }
}

#[test]
fn initial_spin_sets_tangential_speed() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&quiet_scene(dir.path(), 4, 1, 1, "\n[initial_velocity]\nangular = [0, 2, 0]\n"));
    // outermost lattice sites sit at (3/8) side from the center in x and z
    let expected = 2.0 * (2.0f64).sqrt() * 0.0375;
    let got = r.frames[0].max_velocity;
    assert!((got - expected).abs() < 0.02 * expected, "{got} vs {expected}");
}

#[test]
fn external_force_window_is_one_based_and_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let extra = "\n[external_force]\nacceleration = [0, 0, 2]\nstart_frame = 2\nend_frame = 4\n";
    let scene = load_config(&quiet_scene(dir.path(), 4, 10, 5, extra)).unwrap();
    let per_frame = 2.0 * scene.sim.dt * 10.0;
    let r = run_simulation(&scene, &RunOptions::default()).unwrap();
    let v: Vec<f64> = r.frames.iter().map(|f| f.max_velocity).collect();
    let expected = [0.0, per_frame, 2.0 * per_frame, 2.0 * per_frame, 2.0 * per_frame];
    for (got, want) in v.iter().zip(expected) {
        assert!((got - want).abs() < 1e-9, "{v:?} vs {expected:?}");
    }
}
