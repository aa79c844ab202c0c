//! Samplers for the Gaussian free field (box and torus), the branching random
//! walk and the modified branching random walk.

mod brw;
mod gff;
mod mbrw;
mod tgff;

pub use brw::{sample_brw, BrwSampler};
pub use gff::{sample_gff, GffMethod, GffSampler};
pub use mbrw::{mbrw_scale_path, sample_mbrw, MbrwSampler, NoiseBank, ScaleLayers, ScalePath};
pub use tgff::{sample_tgff, TgffSampler};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{GridPoint, GridSpec};
use crate::rng::{stream, SimRng};

/// Default cap on the side of fields and kernels built through [`FieldSpec`].
pub const DEFAULT_MAX_SIDE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Gff,
    Tgff,
    Brw,
    Mbrw,
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Gff => "gff",
            FieldKind::Tgff => "tgff",
            FieldKind::Brw => "brw",
            FieldKind::Mbrw => "mbrw",
        }
    }
}

impl std::fmt::Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gff" => Ok(FieldKind::Gff),
            "tgff" => Ok(FieldKind::Tgff),
            "brw" => Ok(FieldKind::Brw),
            "mbrw" => Ok(FieldKind::Mbrw),
            other => Err(invalid(format!("unknown field kind {other:?}"))),
        }
    }
}

/// Inclusive range of scales `k_lo..=k_hi` kept in a hierarchical field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub k_lo: u32,
    pub k_hi: u32,
}

impl ScaleWindow {
    pub fn new(k_lo: u32, k_hi: u32, n: u32) -> Result<Self> {
        if k_lo > k_hi || k_hi > n {
            return Err(invalid(format!(
                "scale window {k_lo}..={k_hi} invalid for n = {n}"
            )));
        }
        Ok(Self { k_lo, k_hi })
    }

    pub fn full(n: u32) -> Self {
        Self { k_lo: 0, k_hi: n }
    }

    /// Truncated field `S^{N,k0}`: scales `k0..=n`.
    pub fn truncated(k0: u32, n: u32) -> Result<Self> {
        Self::new(k0, n, n)
    }

    pub fn len(&self) -> u32 {
        self.k_hi - self.k_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: u32) -> bool {
        (self.k_lo..=self.k_hi).contains(&k)
    }
}

/// One realization of a field on `V_N`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSample {
    pub kind: FieldKind,
    pub side: usize,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn get(&self, p: GridPoint) -> f64 {
        self.values[p.index(self.side)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_over(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.values[i]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A prepared Gaussian field sampler. Implementations are immutable after
/// construction and may be shared across threads.
pub trait FieldSampler: Send + Sync {
    fn kind(&self) -> FieldKind;

    fn side(&self) -> usize;

    /// Overwrites `out` (length `side²`) with a fresh realization.
    fn fill(&self, rng: &mut SimRng, out: &mut [f64]);

    fn sample(&self, rng: &mut SimRng) -> FieldSample {
        let mut values = vec![0.0; self.side() * self.side()];
        self.fill(rng, &mut values);
        FieldSample {
            kind: self.kind(),
            side: self.side(),
            values,
        }
    }

    /// Replicate `rep` of the run seeded with `seed`.
    fn sample_seeded(&self, seed: u64, rep: u64) -> FieldSample {
        self.sample(&mut stream(seed, rep))
    }
}

/// Complete description of a field to sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Gff { side: usize },
    Tgff { side: usize, killing: f64 },
    Brw { n: u32 },
    Mbrw { n: u32, window: ScaleWindow },
}

impl FieldSpec {
    pub fn kind(&self) -> FieldKind {
        match self {
            FieldSpec::Gff { .. } => FieldKind::Gff,
            FieldSpec::Tgff { .. } => FieldKind::Tgff,
            FieldSpec::Brw { .. } => FieldKind::Brw,
            FieldSpec::Mbrw { .. } => FieldKind::Mbrw,
        }
    }

    pub fn side(&self) -> usize {
        match *self {
            FieldSpec::Gff { side } | FieldSpec::Tgff { side, .. } => side,
            FieldSpec::Brw { n } | FieldSpec::Mbrw { n, .. } => 1 << n,
        }
    }

    /// Builds a sampler with the [`DEFAULT_MAX_SIDE`] cap.
    pub fn sampler(&self) -> Result<Box<dyn FieldSampler>> {
        self.sampler_capped(DEFAULT_MAX_SIDE)
    }

    /// Builds a sampler. GFF and TGFF sides are checked against `max_side`;
    /// the hierarchical fields have linear cost and are allowed twice that.
    pub fn sampler_capped(&self, max_side: usize) -> Result<Box<dyn FieldSampler>> {
        let side = self.side();
        let cap = match self.kind() {
            FieldKind::Gff | FieldKind::Tgff => max_side,
            FieldKind::Brw | FieldKind::Mbrw => 2 * max_side,
        };
        if side > cap {
            return Err(Error::ResourceCap {
                what: "field sampler",
                side,
                cap,
            });
        }
        Ok(match *self {
            FieldSpec::Gff { side } => Box::new(GffSampler::new(side, GffMethod::Auto)?),
            FieldSpec::Tgff { side, killing } => Box::new(TgffSampler::new(side, killing)?),
            FieldSpec::Brw { n } => Box::new(BrwSampler::new(GridSpec::new(n)?)),
            FieldSpec::Mbrw { n, window } => {
                let grid = GridSpec::new(n)?;
                ScaleWindow::new(window.k_lo, window.k_hi, n)?;
                Box::new(MbrwSampler::new(grid, window))
            }
        })
    }
}

#[inline]
pub(crate) fn fill_normal(rng: &mut SimRng, out: &mut [f64], scale: f64) {
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = scale * z;
    }
}
