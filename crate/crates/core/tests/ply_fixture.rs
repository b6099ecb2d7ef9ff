use std::path::PathBuf;

use splatmpm_core::splat::{load_ply, save_ply, sh_coefficient_count};
use splatmpm_core::GaussianCloud;

fn fixture() -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/three_splats.ply");
    std::fs::read(path).unwrap()
}

#[test]
fn fixture_round_trips_byte_for_byte() {
    let bytes = fixture();
    let cloud: GaussianCloud<f64> = load_ply(bytes.as_slice()).unwrap();
    let mut out = Vec::new();
    save_ply(&cloud, &mut out).unwrap();
    assert_eq!(out, bytes);
}

#[test]
fn fixture_activations() {
    let cloud: GaussianCloud<f32> = load_ply(fixture().as_slice()).unwrap();
    assert_eq!(cloud.count(), 3);
    assert_eq!(cloud.sh_degree, 1);
    let s = &cloud.splats[0];
    assert_eq!(s.opacity, 0.5);
    assert!((s.scale.x - (-2.0f32).exp()).abs() < 1e-7);
    assert_eq!(s.sh.len(), sh_coefficient_count(1));
    assert_eq!(s.sh[0], [0.5, -0.25, 1.0]);
    for splat in &cloud.splats {
        assert!((splat.rotation.quaternion().norm() - 1.0).abs() < 1e-6);
    }
    // f_rest is channel-major on disk: red coefficients 1..=3 come first
    let s = &cloud.splats[2];
    assert_eq!([s.sh[1][0], s.sh[2][0], s.sh[3][0], s.sh[1][1]], [0.0, 0.03125, 0.0625, 0.09375]);
}

#[test]
fn reloaded_fields_match() {
    let a: GaussianCloud<f64> = load_ply(fixture().as_slice()).unwrap();
    let mut out = Vec::new();
    save_ply(&a, &mut out).unwrap();
    let b: GaussianCloud<f64> = load_ply(out.as_slice()).unwrap();
    for (x, y) in a.splats.iter().zip(&b.splats) {
        assert!((x.position - y.position).amax() < 1e-6);
        assert!((x.opacity - y.opacity).abs() < 1e-6);
        assert!((x.scale - y.scale).amax() < 1e-6);
        assert_eq!(x.sh, y.sh);
    }
}
