//! Seeded random tensors that belong to a requested class by construction.
//!
//! The stream comes from ChaCha8 (`rand_chacha`) seeded through
//! `seed_from_u64`. Off-diagonal magnitudes are drawn on the dyadic grid
//! `k / 2^20`, `k ∈ [1, 2^20]`, so row shifts such as `t - r⁺` are exact.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{self, nekrasov_profile, row_excess};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const GRID: u32 = 1 << 20;
const MAX_ATTEMPTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetClass {
    NekrasovZ,
    SddZ,
    ZOnly,
    Nonnegative,
    Arbitrary,
}

impl TargetClass {
    pub const ALL: [TargetClass; 5] = [
        TargetClass::NekrasovZ,
        TargetClass::SddZ,
        TargetClass::ZOnly,
        TargetClass::Nonnegative,
        TargetClass::Arbitrary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetClass::NekrasovZ => "nekrasov_z",
            TargetClass::SddZ => "sdd_z",
            TargetClass::ZOnly => "z_only",
            TargetClass::Nonnegative => "nonnegative",
            TargetClass::Arbitrary => "arbitrary",
        }
    }

    fn holds(self, t: &Tensor) -> bool {
        match self {
            TargetClass::NekrasovZ => classify::classify(t).is_nekrasov_z,
            TargetClass::SddZ => classify::is_z(t) && classify::is_diag_dominant(t, true),
            TargetClass::ZOnly => classify::is_z(t),
            TargetClass::Nonnegative => t.values().iter().all(|v| *v >= 0.0),
            TargetClass::Arbitrary => true,
        }
    }
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TargetClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown class `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub order: usize,
    pub dim: usize,
    pub class: TargetClass,
    pub seed: u64,
    /// Probability that an off-diagonal slot is nonzero, in (0, 1].
    pub density: f64,
}

impl GeneratorSpec {
    pub fn new(order: usize, dim: usize, class: TargetClass, seed: u64) -> Self {
        GeneratorSpec {
            order,
            dim,
            class,
            seed,
            density: 0.5,
        }
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    /// Comment line recorded at the top of generated tensor files.
    pub fn header(&self) -> String {
        format!(
            "# generated class={} order={} dim={} seed={} density={} rng=chacha8",
            self.class, self.order, self.dim, self.seed, self.density
        )
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 || self.dim < 1 {
            return Err(Error::InvalidShape {
                order: self.order,
                dim: self.dim,
            });
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density {} outside (0, 1]",
                self.density
            )));
        }
        Ok(())
    }
}

fn magnitude(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(1..=GRID) as f64 / GRID as f64
}

/// Draws a tensor of the requested class; deterministic in `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Tensor> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_ATTEMPTS {
        let t = draw(spec, &mut rng)?;
        if spec.class.holds(&t) {
            return Ok(t);
        }
    }
    Err(Error::Generation {
        class: spec.class.to_string(),
        attempts: MAX_ATTEMPTS,
    })
}

fn draw(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    let mut t = Tensor::zeros(spec.order, spec.dim)?;
    let diagonal: Vec<usize> = (0..spec.dim).map(|i| t.diagonal_offset(i)).collect();
    let mut values = t.values().to_vec();
    for (k, v) in values.iter_mut().enumerate() {
        if diagonal.contains(&k) {
            continue;
        }
        if rng.random_bool(spec.density) {
            let mag = magnitude(rng);
            *v = match spec.class {
                TargetClass::NekrasovZ | TargetClass::SddZ | TargetClass::ZOnly => -mag,
                TargetClass::Nonnegative => mag,
                TargetClass::Arbitrary => {
                    if rng.random_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                }
            };
        }
    }
    t = Tensor::from_values(spec.order, spec.dim, values)?;
    match spec.class {
        TargetClass::NekrasovZ => {
            for &offset in &diagonal {
                t.set(&t.index_of(offset), 1.0)?;
            }
            // Λ_i only reads diagonals of earlier rows
            for (i, &offset) in diagonal.iter().enumerate() {
                let lambda = nekrasov_profile(&t)?.lambda[i];
                let d = if lambda > 0.0 {
                    lambda * rng.random_range(1.05..2.0)
                } else {
                    1.0
                };
                t.set(&t.index_of(offset), d)?;
            }
        }
        TargetClass::SddZ => {
            let excess = row_excess(&t);
            for (&offset, &r) in diagonal.iter().zip(&excess) {
                let d = if r > 0.0 { r * rng.random_range(1.05..2.0) } else { 1.0 };
                t.set(&t.index_of(offset), d)?;
            }
        }
        TargetClass::ZOnly | TargetClass::Arbitrary => {
            for &d in &diagonal {
                let v = magnitude(rng) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                t.set(&t.index_of(d), v)?;
            }
        }
        TargetClass::Nonnegative => {
            for &d in &diagonal {
                let v = if rng.random_bool(spec.density) {
                    magnitude(rng)
                } else {
                    0.0
                };
                t.set(&t.index_of(d), v)?;
            }
        }
    }
    Ok(t)
}
