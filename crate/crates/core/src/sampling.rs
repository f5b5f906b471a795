//! Deterministic sampling of metric balls on flag manifolds.
//!
//! All randomness derives from one 64-bit seed. A counter-based SplitMix64
//! hash turns `(seed, stream, counter)` into independent words, which offset
//! a Kronecker (additive recurrence) low-discrepancy sequence. Identical
//! inputs therefore give bit-identical sample sets on every run and platform.

use crate::error::Result;
use crate::flags::{flag_distance, Flag};
use crate::linalg::{orthonormalize, spectral_norm, Matrix};

/// One SplitMix64 output for the given state.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniform draws: `uniform(seed, stream, k)` is a pure function.
pub fn uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    let h = splitmix64(splitmix64(seed ^ splitmix64(stream)).wrapping_add(counter));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Additive-recurrence sequence x_k = frac(offset + k·α) in [0,1)^m, with α
/// built from the generalized golden ratio of dimension m.
#[derive(Debug, Clone)]
pub struct Kronecker {
    alphas: Vec<f64>,
    offset: Vec<f64>,
}

impl Kronecker {
    pub fn new(dim: usize, seed: u64, stream: u64) -> Self {
        // unique positive root of x^(m+1) = x + 1
        let mut phi = 2.0f64;
        for _ in 0..64 {
            let f = phi.powi(dim as i32 + 1) - phi - 1.0;
            let df = (dim as f64 + 1.0) * phi.powi(dim as i32) - 1.0;
            phi -= f / df;
        }
        let alphas = (1..=dim).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
        let offset = (0..dim as u64).map(|j| uniform(seed, stream, j)).collect();
        Self { alphas, offset }
    }

    pub fn point(&self, k: u64) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.offset)
            .map(|(a, o)| (o + k as f64 * a).fract())
            .collect()
    }
}

/// Positions (row, col) of the free entries of the big-cell chart: below the
/// block diagonal determined by the flag type.
fn chart_entries(center: &Flag) -> Vec<(usize, usize)> {
    let t = center.flag_type();
    let d = t.dim();
    let block = |x: usize| t.dims().iter().filter(|&&i| i <= x).count();
    let mut out = Vec::new();
    for c in 0..d {
        for r in 0..d {
            if block(r) > block(c) {
                out.push((r, c));
            }
        }
    }
    out
}

fn chart_flag(center: &Flag, entries: &[(usize, usize)], coords: &[f64], scale: f64) -> Flag {
    let d = center.dim();
    let mut m = Matrix::identity(d);
    for (&(r, c), &z) in entries.iter().zip(coords) {
        m[(r, c)] = z * scale;
    }
    let cols = orthonormalize((0..d).map(|j| m.column(j)).collect(), &[]);
    let local = Matrix::from_columns(&cols);
    center.with_frame(center.frame().mul(&local))
}

/// Tangent-scale of the chart coordinates: max over i ∈ Θ of ‖Z[i:, :i]‖.
fn chart_norm(center: &Flag, entries: &[(usize, usize)], coords: &[f64]) -> f64 {
    let d = center.dim();
    let mut m = Matrix::zeros(d, d);
    for (&(r, c), &z) in entries.iter().zip(coords) {
        m[(r, c)] = z;
    }
    center
        .flag_type()
        .dims()
        .iter()
        .map(|&i| {
            let mut block = Matrix::zeros(d - i, i);
            for r in i..d {
                for c in 0..i {
                    block[(r - i, c)] = m[(r, c)];
                }
            }
            spectral_norm(&block)
        })
        .fold(0.0, f64::max)
}

/// `count` flags inside the closed ball of the given radius, the first one
/// being the center itself. Points are spread by a low-discrepancy sequence
/// in chart coordinates with radial weight u^(1/m).
pub fn sample_ball(center: &Flag, radius: f64, count: usize, seed: u64, stream: u64) -> Result<Vec<Flag>> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(center.clone());
    let entries = chart_entries(center);
    let m = entries.len();
    let seq = Kronecker::new(m + 1, seed, stream);
    let mut k = 0u64;
    while out.len() < count {
        k += 1;
        let u = seq.point(k);
        let coords: Vec<f64> = u[..m].iter().map(|x| 2.0 * x - 1.0).collect();
        let mu = chart_norm(center, &entries, &coords);
        if mu < 1e-12 {
            continue;
        }
        let rho = radius * u[m].powf(1.0 / m as f64);
        let mut scale = rho.tan() / mu;
        let mut f = chart_flag(center, &entries, &coords, scale);
        // nested blocks make the chart only approximately isometric; shrink
        // until the point is inside the ball
        for _ in 0..50 {
            let dist = flag_distance(center, &f)?;
            if dist <= radius {
                break;
            }
            scale *= (radius / dist) * 0.999;
            f = chart_flag(center, &entries, &coords, scale);
        }
        if flag_distance(center, &f)? <= radius {
            out.push(f);
        }
    }
    Ok(out)
}

/// Empirical covering radius of `samples` within the ball: 1.25 times the
/// largest distance from an independent probe set to its nearest sample.
pub fn covering_radius(center: &Flag, radius: f64, samples: &[Flag], seed: u64, stream: u64) -> Result<f64> {
    let probes = sample_ball(center, radius, 4 * samples.len().max(1), seed ^ 0x5EED_C0FE, stream)?;
    let mut worst = 0.0f64;
    for p in &probes {
        let mut nearest = f64::INFINITY;
        for s in samples {
            nearest = nearest.min(flag_distance(p, s)?);
            if nearest <= worst {
                break;
            }
        }
        worst = worst.max(nearest);
    }
    Ok((1.25 * worst).min(radius))
}
