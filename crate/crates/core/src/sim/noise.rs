//! Seeded Wiener increments.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` derived from `base`.
pub fn realization_seed(base: u64, index: usize) -> u64 {
    splitmix64(base ^ splitmix64(index as u64 ^ 0xA076_1D64_78BD_642F))
}

/// `n` i.i.d. `Normal(0, dt)` samples, deterministic per seed.
pub fn wiener_increments(n: usize, dt: f64, seed: u64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one increment".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = dt.sqrt();
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        })
        .collect())
}

/// Source of increments for an integrator.
#[derive(Debug, Clone)]
pub enum NoiseStream {
    /// Fresh draws from a seeded generator.
    Seeded(u64),
    /// Pre-computed increments, step-major (`step * dim + coord`). `dz` holds
    /// `∫(W_s − W_{t_n}) ds` over each step and may be empty for schemes that
    /// do not use it.
    Explicit { dw: Vec<f64>, dz: Vec<f64> },
}

/// Draws `(ΔW, ΔZ)` pairs per coordinate and step.
pub(crate) enum Draw<'a> {
    Rng(ChaCha8Rng),
    Fixed { dw: &'a [f64], dz: &'a [f64], pos: usize },
}

impl<'a> Draw<'a> {
    pub(crate) fn new(noise: &'a NoiseStream, dim: usize, n_steps: usize, need_dz: bool) -> Result<Self> {
        match noise {
            NoiseStream::Seeded(seed) => Ok(Draw::Rng(ChaCha8Rng::seed_from_u64(*seed))),
            NoiseStream::Explicit { dw, dz } => {
                let need = dim * n_steps.saturating_sub(1);
                if dw.len() < need || (need_dz && dz.len() < need) {
                    return Err(Error::InvalidArgument(format!(
                        "explicit noise too short: need {need} increments per stream"
                    )));
                }
                Ok(Draw::Fixed { dw, dz, pos: 0 })
            }
        }
    }

    /// Fills `dw` (and `dz` when non-empty) for one step.
    pub(crate) fn step(&mut self, dt: f64, dw: &mut [f64], dz: &mut [f64]) {
        match self {
            Draw::Rng(rng) => {
                let s = dt.sqrt();
                let want_dz = !dz.is_empty();
                for k in 0..dw.len() {
                    let z1: f64 = StandardNormal.sample(rng);
                    dw[k] = s * z1;
                    if want_dz {
                        let z2: f64 = StandardNormal.sample(rng);
                        dz[k] = 0.5 * dt * (dw[k] + s * z2 / 3f64.sqrt());
                    }
                }
            }
            Draw::Fixed { dw: w, dz: z, pos } => {
                let n = dw.len();
                dw.copy_from_slice(&w[*pos..*pos + n]);
                if !dz.is_empty() {
                    dz.copy_from_slice(&z[*pos..*pos + n]);
                }
                *pos += n;
            }
        }
    }
}
