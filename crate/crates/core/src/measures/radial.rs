//! Radial laws `h -> c / ((1 + |h|)^d phi(1 + |h|))` on subgroups with explicit shells.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::JumpProfile;
use crate::group::l1_sphere_count;
use crate::numeric::integrate_log;

/// Radii above this are never sampled; the measure is rejected if they carry real mass.
pub const RADIUS_CEILING: u64 = 1 << 62;
const CEILING_MASS_TOL: f64 = 1e-9;

/// Shell structure of the subgroup carrying a radial law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ShellShape {
    /// `Z^m` with the l1 length.
    Lattice(usize),
    /// Infinite dihedral group with two elements on every nonzero shell.
    Line,
}

impl ShellShape {
    pub(crate) fn count(&self, r: f64) -> f64 {
        match *self {
            ShellShape::Lattice(m) => l1_sphere_count(m, r),
            ShellShape::Line => {
                if r == 0.0 {
                    1.0
                } else {
                    2.0
                }
            }
        }
    }

    fn degree(&self) -> i32 {
        match *self {
            ShellShape::Lattice(m) => m as i32,
            ShellShape::Line => 1,
        }
    }
}

/// A dyadic block `[lo, hi)` of radii beyond the table, with its mass.
#[derive(Debug, Clone)]
struct TailBlock {
    lo: u64,
    hi: u64,
    mass: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct RadialLaw {
    shape: ShellShape,
    profile: JumpProfile,
    cap: u64,
    /// Unnormalized mass of one element at radius `r`.
    z: f64,
    /// `prefix[r]`: unnormalized mass of shells `0..=r`.
    prefix: Vec<f64>,
    /// `suffix[r]`: unnormalized mass of shells `>= r`, including everything beyond the table.
    suffix: Vec<f64>,
    blocks: Vec<TailBlock>,
    /// Mass of the blocks, i.e. of the radii `cap < r < RADIUS_CEILING`.
    block_total: f64,
}

impl RadialLaw {
    pub(crate) fn new(shape: ShellShape, profile: JumpProfile, cap: u64) -> Result<Self> {
        profile.validate()?;
        if cap < 1 {
            return Err(Error::Config("shell cap must be at least 1".into()));
        }
        let d = shape.degree();
        let point = |r: f64| 1.0 / ((1.0 + r).powi(d) * profile.mass_factor(r));
        let shell = |r: f64| shape.count(r) * point(r);

        let mut prefix = Vec::with_capacity(cap as usize + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for r in 0..=cap {
            // Kahan summation of the table
            let y = shell(r as f64) - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            prefix.push(sum);
        }

        let mut blocks = Vec::new();
        let mut lo = cap + 1;
        while lo < RADIUS_CEILING {
            let hi = lo.saturating_mul(2).min(RADIUS_CEILING);
            let mass = integrate_log(shell, lo as f64 - 0.5, hi as f64 - 0.5);
            blocks.push(TailBlock { lo, hi, mass });
            lo = hi;
        }
        let mut by_size: Vec<f64> = blocks.iter().map(|b| b.mass).collect();
        by_size.sort_by(f64::total_cmp);
        let block_total: f64 = by_size.iter().sum();
        let beyond = integrate_log(shell, RADIUS_CEILING as f64 - 0.5, 1e300);
        let z = sum + block_total + beyond;
        if beyond > CEILING_MASS_TOL * z {
            return Err(Error::Config(format!(
                "profile {profile:?} leaves mass {:.3e} beyond radius 2^62; the tail is too heavy to sample",
                beyond / z
            )));
        }

        let mut suffix = vec![0.0; cap as usize + 1];
        let mut acc = block_total + beyond;
        let mut comp = 0.0;
        for r in (0..=cap as usize).rev() {
            let y = shell(r as f64) - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            suffix[r] = acc;
        }
        Ok(RadialLaw {
            shape,
            profile,
            cap,
            z,
            prefix,
            suffix,
            blocks,
            block_total,
        })
    }

    pub(crate) fn normalization(&self) -> f64 {
        self.z
    }

    pub(crate) fn cap(&self) -> u64 {
        self.cap
    }

    pub(crate) fn shape(&self) -> ShellShape {
        self.shape
    }

    /// Probability of one element at word length `r`.
    pub(crate) fn point_mass(&self, r: u128) -> f64 {
        let r = r as f64;
        1.0 / ((1.0 + r).powi(self.shape.degree()) * self.profile.mass_factor(r) * self.z)
    }

    /// Probability of the whole shell at radius `r`.
    pub(crate) fn shell_mass(&self, r: u64) -> f64 {
        self.shape.count(r as f64) * self.point_mass(r as u128)
    }

    /// `P(|h| >= r)`.
    pub(crate) fn tail(&self, r: u64) -> f64 {
        if r as usize <= self.cap as usize {
            return self.suffix[r as usize] / self.z;
        }
        let d = self.shape.degree();
        let shape = self.shape;
        let profile = self.profile;
        let shell = move |x: f64| shape.count(x) / ((1.0 + x).powi(d) * profile.mass_factor(x));
        (integrate_log(shell, r as f64 - 0.5, 1e300) / self.z).min(self.suffix[self.cap as usize] / self.z)
    }

    /// Draws a radius.
    pub(crate) fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let table_total = self.prefix[self.cap as usize];
        let u = rng.gen::<f64>() * (table_total + self.block_total);
        if u < table_total {
            // first r with prefix[r] > u
            let r = self.prefix.partition_point(|&p| p <= u);
            return (r as u64).min(self.cap);
        }
        let mut v = u - table_total;
        let block = self
            .blocks
            .iter()
            .find(|b| {
                if v < b.mass {
                    true
                } else {
                    v -= b.mass;
                    false
                }
            })
            .or(self.blocks.last())
            .expect("at least one block beyond the table");
        let d = self.shape.degree();
        let weight = |r: u64| 1.0 / ((1.0 + r as f64).powi(d) * self.profile.mass_factor(r as f64));
        let envelope = self.shape.count(block.hi as f64) * weight(block.lo);
        loop {
            let r = rng.gen_range(block.lo..block.hi);
            let accept = self.shape.count(r as f64) * weight(r) / envelope;
            if rng.gen::<f64>() < accept {
                return r;
            }
        }
    }
}
