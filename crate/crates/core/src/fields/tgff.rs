use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::green::{torus_green, TorusGreen};
use crate::linalg::Fft2;
use crate::rng::{stream, SimRng};

use super::{FieldKind, FieldSample, FieldSampler};

/// Spectral sampler of the torus GFF with covariance `Ḡ_N`.
///
/// Complex white noise is scaled by `sqrt(spectrum / N²)` and transformed;
/// the real part of the result has covariance exactly `Ḡ_N`.
pub struct TgffSampler {
    green: TorusGreen,
    amp: Vec<f64>,
    fft: Fft2,
}

impl TgffSampler {
    pub fn new(side: usize, killing: f64) -> Result<Self> {
        let green = torus_green(side, killing)?;
        let norm = 1.0 / (side * side) as f64;
        let amp = green.spectrum().iter().map(|s| (s * norm).sqrt()).collect();
        Ok(Self {
            green,
            amp,
            fft: Fft2::new(side, false),
        })
    }

    pub fn green(&self) -> &TorusGreen {
        &self.green
    }
}

impl FieldSampler for TgffSampler {
    fn kind(&self) -> FieldKind {
        FieldKind::Tgff
    }

    fn side(&self) -> usize {
        self.green.side()
    }

    fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        let mut buf: Vec<Complex64> = self
            .amp
            .iter()
            .map(|&a| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(a * re, a * im)
            })
            .collect();
        self.fft.process(&mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re;
        }
    }
}

/// One torus GFF sample (replicate 0 of `seed`).
pub fn sample_tgff(side: usize, killing: f64, seed: u64) -> Result<FieldSample> {
    Ok(TgffSampler::new(side, killing)?.sample(&mut stream(seed, 0)))
}
