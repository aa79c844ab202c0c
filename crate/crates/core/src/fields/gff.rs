use crate::error::{invalid, Result};
use crate::green::{DirichletOperator, DirichletSpectral};
use crate::rng::{stream, SimRng};

use super::{fill_normal, FieldKind, FieldSample, FieldSampler};

/// How exact GFF samples are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GffMethod {
    /// Band Cholesky `I - P = L Lᵀ`; a sample solves `Lᵀ X = Z`.
    Factor,
    /// Sine-basis expansion `X = Σ φ_jk Z_jk / sqrt(λ_jk)`.
    Spectral,
    /// `Factor` up to [`GffSampler::FACTOR_MAX_SIDE`], `Spectral` above.
    Auto,
}

enum Backend {
    Factor(DirichletOperator),
    Spectral(DirichletSpectral, Vec<f64>),
}

/// Exact sampler of the Dirichlet GFF on `V_N`, covariance `G_N`.
pub struct GffSampler {
    side: usize,
    backend: Backend,
}

impl GffSampler {
    pub const FACTOR_MAX_SIDE: usize = 128;

    pub fn new(side: usize, method: GffMethod) -> Result<Self> {
        if side < 3 {
            return Err(invalid(format!("GFF needs side >= 3, got {side}")));
        }
        let method = match method {
            GffMethod::Auto if side <= Self::FACTOR_MAX_SIDE => GffMethod::Factor,
            GffMethod::Auto => GffMethod::Spectral,
            m => m,
        };
        let backend = match method {
            GffMethod::Factor => Backend::Factor(DirichletOperator::new(side)?),
            _ => {
                let sp = DirichletSpectral::new(side)?;
                let inv_sqrt = sp.eigenvalues().iter().map(|l| 1.0 / l.sqrt()).collect();
                Backend::Spectral(sp, inv_sqrt)
            }
        };
        Ok(Self { side, backend })
    }
}

impl FieldSampler for GffSampler {
    fn kind(&self) -> FieldKind {
        FieldKind::Gff
    }

    fn side(&self) -> usize {
        self.side
    }

    fn fill(&self, rng: &mut SimRng, out: &mut [f64]) {
        let n = self.side;
        let m = n - 2;
        let mut z = vec![0.0; m * m];
        fill_normal(rng, &mut z, 1.0);
        match &self.backend {
            Backend::Factor(op) => {
                if let Some(chol) = op.factor() {
                    chol.solve_upper(&mut z);
                }
            }
            Backend::Spectral(sp, inv_sqrt) => {
                for (v, s) in z.iter_mut().zip(inv_sqrt) {
                    *v *= s;
                }
                sp.dst().transform2(&mut z);
            }
        }
        out.fill(0.0);
        for a in 0..m {
            out[(a + 1) * n + 1..(a + 1) * n + 1 + m].copy_from_slice(&z[a * m..(a + 1) * m]);
        }
    }
}

/// One exact GFF sample on `V_N` (replicate 0 of `seed`).
pub fn sample_gff(side: usize, seed: u64) -> Result<FieldSample> {
    Ok(GffSampler::new(side, GffMethod::Auto)?.sample(&mut stream(seed, 0)))
}
