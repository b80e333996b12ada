//! Reproducible Brownian increments with exact coarse/fine coupling.
//!
//! Each path draws from its own ChaCha8 stream: the key is the experiment seed and
//! the stream id is the path index, so increment `i` of path `p` is a fixed function
//! of `(seed, p, i)` no matter which worker generates it or in what order. Standard
//! normals come from the ziggurat sampler of `rand_distr::StandardNormal`.
//!
//! Coarser increments are built by repeated left-to-right pairwise summation of the
//! finest increments, so every level is the exact pairwise sum of the next finer one.

use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const DEFAULT_REFERENCE_EXPONENT: u32 = 14;

/// Largest supported reference exponent (2^24 increments per path).
pub const MAX_REFERENCE_EXPONENT: u32 = 24;

/// Step sizes `T * 2^-e` for each level exponent `e`, plus the finest exponent the
/// lattice is generated at.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    pub levels: Vec<u32>,
    pub reference_exponent: u32,
}

impl GridSpec {
    pub fn new(horizon: f64, levels: Vec<u32>, reference_exponent: u32) -> Result<Self> {
        let grid = GridSpec {
            horizon,
            levels,
            reference_exponent,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::usage(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.reference_exponent > MAX_REFERENCE_EXPONENT {
            return Err(Error::usage(format!(
                "reference exponent {} exceeds the supported maximum {MAX_REFERENCE_EXPONENT}",
                self.reference_exponent
            )));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("level exponents must be strictly increasing"));
        }
        if let Some(&e) = self.levels.iter().find(|&&e| e > self.reference_exponent) {
            return Err(Error::usage(format!(
                "level exponent {e} exceeds the reference exponent {}",
                self.reference_exponent
            )));
        }
        Ok(())
    }

    pub fn step(&self, exponent: u32) -> f64 {
        self.horizon * 0.5f64.powi(exponent as i32)
    }
}

/// `n` i.i.d. `N(0, dt)` draws from the stream keyed by `(seed, stream)`.
pub fn gaussian_increments(seed: u64, stream: u64, n: usize, dt: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let scale = dt.sqrt();
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Finest-grid Brownian increments of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    pub seed: u64,
    pub path_index: u64,
    pub horizon: f64,
    pub reference_exponent: u32,
    pub fine_increments: Vec<f64>,
}

pub fn generate_lattice(seed: u64, path_index: u64, grid: &GridSpec) -> BrownianLattice {
    let n = 1usize << grid.reference_exponent;
    let dt = grid.step(grid.reference_exponent);
    BrownianLattice {
        seed,
        path_index,
        horizon: grid.horizon,
        reference_exponent: grid.reference_exponent,
        fine_increments: gaussian_increments(seed, path_index, n, dt),
    }
}

fn halve(increments: &[f64]) -> Vec<f64> {
    increments.chunks_exact(2).map(|p| p[0] + p[1]).collect()
}

/// Increments at step `T * 2^-level_exponent`, each the pairwise-tree sum of the fine
/// increments it spans.
pub fn coarsen(lattice: &BrownianLattice, level_exponent: u32) -> Result<Vec<f64>> {
    if level_exponent > lattice.reference_exponent {
        return Err(Error::usage(format!(
            "level exponent {level_exponent} exceeds the lattice reference exponent {}",
            lattice.reference_exponent
        )));
    }
    let mut current = lattice.fine_increments.clone();
    for _ in level_exponent..lattice.reference_exponent {
        current = halve(&current);
    }
    Ok(current)
}

impl BrownianLattice {
    /// Every level from the reference exponent down to 0: entry `e` holds `2^e` increments.
    pub fn pyramid(&self) -> Vec<Vec<f64>> {
        let mut levels = Vec::with_capacity(self.reference_exponent as usize + 1);
        levels.push(self.fine_increments.clone());
        for _ in 0..self.reference_exponent {
            let next = halve(levels.last().expect("nonempty"));
            levels.push(next);
        }
        levels.reverse();
        levels
    }

    /// `W_T` under the fixed pairwise summation order.
    pub fn terminal(&self) -> f64 {
        let mut current = self.fine_increments.clone();
        while current.len() > 1 {
            current = halve(&current);
        }
        current[0]
    }

    const MAGIC: &'static [u8; 8] = b"BRLAT001";

    /// Binary dump, all fields little-endian:
    ///
    /// ```text
    /// magic "BRLAT001" | seed u64 | path_index u64 | horizon f64
    /// | reference_exponent u32 | reserved u32 (0) | count u64 | count x f64
    /// ```
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.path_index.to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        w.write_all(&self.reference_exponent.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&(self.fine_increments.len() as u64).to_le_bytes())?;
        for v in &self.fine_increments {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> io::Result<Self> {
        fn take<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
            let mut buf = [0u8; N];
            r.read_exact(&mut buf)?;
            Ok(buf)
        }
        let invalid = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
        if &take::<8>(&mut r)? != Self::MAGIC {
            return Err(invalid("not a lattice dump (bad magic)"));
        }
        let seed = u64::from_le_bytes(take(&mut r)?);
        let path_index = u64::from_le_bytes(take(&mut r)?);
        let horizon = f64::from_le_bytes(take(&mut r)?);
        let reference_exponent = u32::from_le_bytes(take(&mut r)?);
        let _reserved = u32::from_le_bytes(take(&mut r)?);
        let count = u64::from_le_bytes(take(&mut r)?);
        if reference_exponent > MAX_REFERENCE_EXPONENT || count != 1u64 << reference_exponent {
            return Err(invalid(
                "increment count does not match the reference exponent",
            ));
        }
        let fine_increments = (0..count)
            .map(|_| take(&mut r).map(f64::from_le_bytes))
            .collect::<io::Result<Vec<_>>>()?;
        Ok(BrownianLattice {
            seed,
            path_index,
            horizon,
            reference_exponent,
            fine_increments,
        })
    }
}
