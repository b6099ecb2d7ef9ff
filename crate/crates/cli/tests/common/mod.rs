#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use splatmpm_core::{save_ply, GaussianCloud, GaussianSplat};

/// `n³` splats on a regular lattice of side `side` whose lowest corner is `corner`.
pub fn cube_cloud(n: usize, corner: Vector3<f64>, side: f64) -> GaussianCloud<f64> {
    let h = side / n as f64;
    let mut splats = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = corner + Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h;
                let t = (i + j + k) as f64 / (3 * n) as f64;
                // warm gradient: DC terms chosen so the rendered color stays in range
                let dc = [(0.4 + 0.4 * t) / 0.282_094_791_773_878_14 - 1.0, 0.3, -0.6 * t];
                splats.push(GaussianSplat::new(x, [1.0, 0.0, 0.0, 0.0], Vector3::repeat(h * 0.6), 0.8, vec![dc]).unwrap());
            }
        }
    }
    GaussianCloud::new(splats, 0).unwrap()
}

pub fn write_cloud(cloud: &GaussianCloud<f64>, path: &Path) {
    save_ply(cloud, std::fs::File::create(path).unwrap()).unwrap();
}

/// Jelly cube of `n³` splats over a sticky floor in a 0.5 m box.
pub fn jelly_scene(dir: &Path, n: usize, frames: usize, substeps: usize) -> PathBuf {
    let dx = 0.5 / 64.0;
    let side = n as f64 * dx / 2.0;
    let cloud = cube_cloud(n, Vector3::new(0.25 - side / 2.0, 0.25, 0.25 - side / 2.0), side);
    write_cloud(&cloud, &dir.join("cube.ply"));
    let text = format!(
        r#"input_ply = "cube.ply"
material = "jelly"

[grid]
resolution = 64
bounds = {{ min = [0, 0, 0], max = [0.5, 0.5, 0.5] }}

[sim]
substeps_per_frame = {substeps}
frame_count = {frames}

[[boundary]]
kind = "sticky"
point = [0, 0.05, 0]
normal = [0, 1, 0]

[[boundary]]
kind = "walls"

[camera]
eye = [0.25, 0.3, 0.9]
target = [0.25, 0.2, 0.25]
fov_y = 40
width = 96
height = 96

[output]
directory = "frames"
"#
    );
    let path = dir.join("scene.toml");
    std::fs::write(&path, text).unwrap();
    path
}
