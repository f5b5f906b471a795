#![allow(dead_code)]

use std::path::PathBuf;

use flag_pingpong::config::Config;
use flag_pingpong::flags::{Flag, FlagType};
use flag_pingpong::linalg::{GroupElement, Matrix};
use flag_pingpong::pingpong::PingPongSystem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn example_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

pub fn example_config(name: &str) -> Config {
    Config::load(&example_path(name)).expect("bundled example parses")
}

pub fn example_system(name: &str) -> PingPongSystem {
    example_config(name).system().expect("bundled example builds")
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    Matrix::from_row_major(d, d, (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// A random unimodular element, rejecting nearly singular draws.
pub fn random_element(rng: &mut ChaCha8Rng, d: usize) -> GroupElement {
    loop {
        let m = random_matrix(rng, d);
        if m.determinant().abs() > 1e-2 {
            if let Ok(g) = GroupElement::new(m) {
                return g;
            }
        }
    }
}

pub fn random_flag(rng: &mut ChaCha8Rng, t: &FlagType) -> Flag {
    loop {
        if let Ok(f) = Flag::from_spanning(t.clone(), &random_matrix(rng, t.dim())) {
            return f;
        }
    }
}

/// Angle of a line in ℝ², in [0, π).
pub fn line_angle(v: &[f64]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(std::f64::consts::PI)
}

/// Distance between lines at angles a and b.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}
