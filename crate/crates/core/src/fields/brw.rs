use crate::error::Result;
use crate::lattice::GridSpec;
use crate::rng::{stream, SimRng};

use super::{fill_normal, FieldKind, FieldSample, FieldSampler};

/// Branching random walk: one standard normal per aligned dyadic box of every
/// scale `0..=n`, summed over the ancestors of each site.
pub struct BrwSampler {
    grid: GridSpec,
}

impl BrwSampler {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid }
    }
}

impl FieldSampler for BrwSampler {
    fn kind(&self) -> FieldKind {
        FieldKind::Brw
    }

    fn side(&self) -> usize {
        self.grid.side()
    }

    fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        let side = self.grid.side();
        out.fill(0.0);
        let mut a = Vec::new();
        for k in 0..=self.grid.n() {
            let blocks = side >> k;
            a.resize(blocks * blocks, 0.0);
            fill_normal(rng, &mut a, 1.0);
            for (x1, row) in out.chunks_mut(side).enumerate() {
                let arow = &a[(x1 >> k) * blocks..(x1 >> k) * blocks + blocks];
                for (x2, v) in row.iter_mut().enumerate() {
                    *v += arow[x2 >> k];
                }
            }
        }
    }
}

/// One BRW sample (replicate 0 of `seed`).
pub fn sample_brw(grid: GridSpec, seed: u64) -> Result<FieldSample> {
    Ok(BrwSampler::new(grid).sample(&mut stream(seed, 0)))
}
