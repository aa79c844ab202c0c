use rand_distr::StandardNormal;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::{replicate_fold, SimRng};
use crate::stats;

use super::barrier::barrier_curve;

/// Upper barrier for the discrete bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BridgeBarrier {
    /// `1 - L_n(s)` with amplitude `c5`.
    Tent { c5: f64 },
    Constant { c: f64 },
}

impl BridgeBarrier {
    pub fn values(&self, n: u32) -> Vec<f64> {
        match *self {
            BridgeBarrier::Tent { c5 } => barrier_curve(n, c5).iter().map(|l| 1.0 - l).collect(),
            BridgeBarrier::Constant { c } => vec![c; n as usize + 1],
        }
    }

    /// Continuous-time non-crossing probability where a closed form exists.
    pub fn continuum_reference(&self, n: u32) -> Option<f64> {
        match *self {
            BridgeBarrier::Constant { c } if c > 0.0 => Some(1.0 - (-2.0 * c * c / n as f64).exp()),
            BridgeBarrier::Constant { .. } => Some(0.0),
            BridgeBarrier::Tent { .. } => None,
        }
    }
}

/// Probability that the bridge stays strictly below the barrier at `s = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeEstimate {
    pub n: u32,
    pub barrier: BridgeBarrier,
    pub reps: usize,
    pub p: f64,
    pub se: f64,
    pub reference: Option<f64>,
}

/// `z(s) = W(s) - (s/n) W(n)` for a standard Gaussian walk `W`; `z(0) = z(n) = 0`.
pub fn sample_bridge(n: u32, rng: &mut SimRng, out: &mut Vec<f64>) {
    out.clear();
    out.push(0.0);
    let mut w = 0.0;
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        w += z;
        out.push(w);
    }
    let nf = n as f64;
    for (s, v) in out.iter_mut().enumerate() {
        *v -= s as f64 / nf * w;
    }
    out[n as usize] = 0.0;
}

pub fn bridge_barrier_prob(n: u32, barrier: BridgeBarrier, reps: usize, seed: u64) -> Result<BridgeEstimate> {
    if n < 2 {
        return Err(invalid("bridge needs n >= 2"));
    }
    if reps < 2 {
        return Err(invalid("need at least two replicates"));
    }
    let b = barrier.values(n);
    let hits = replicate_fold(
        reps,
        seed,
        || (0usize, Vec::with_capacity(n as usize + 1)),
        |acc, rng, _| {
            sample_bridge(n, rng, &mut acc.1);
            if acc.1.iter().zip(&b).all(|(z, c)| z < c) {
                acc.0 += 1;
            }
        },
        |a, p| a.0 += p.0,
    )
    .0;
    let p = hits as f64 / reps as f64;
    Ok(BridgeEstimate {
        n,
        barrier,
        reps,
        p,
        se: (p * (1.0 - p) / reps as f64).sqrt(),
        reference: barrier.continuum_reference(n),
    })
}

/// Estimates over a range of `n` and the slope of `log P̂` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeDecay {
    pub estimates: Vec<BridgeEstimate>,
    /// `None` when fewer than two estimates are positive.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Number of points used in the fit.
    pub fitted_points: usize,
}

/// Each `n` uses the stream family `seed + n`.
pub fn bridge_decay(ns: &[u32], barrier: BridgeBarrier, reps: usize, seed: u64) -> Result<BridgeDecay> {
    let estimates = ns
        .iter()
        .map(|&n| bridge_barrier_prob(n, barrier, reps, seed.wrapping_add(n as u64)))
        .collect::<Result<Vec<_>>>()?;
    let (x, y): (Vec<f64>, Vec<f64>) = estimates
        .iter()
        .filter(|e| e.p > 0.0)
        .map(|e| ((e.n as f64).ln(), e.p.ln()))
        .unzip();
    let (slope, intercept) = if x.len() >= 2 {
        let (s, i) = stats::linear_fit(&x, &y);
        (Some(s), Some(i))
    } else {
        (None, None)
    };
    Ok(BridgeDecay {
        fitted_points: x.len(),
        estimates,
        slope,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn bridge_moments() {
        let n = 10;
        let reps = 20_000;
        let mut buf = Vec::new();
        let mut cols = vec![Vec::with_capacity(reps); n as usize + 1];
        for r in 0..reps {
            sample_bridge(n, &mut stream(5, r as u64), &mut buf);
            assert_eq!(buf[0], 0.0);
            assert_eq!(buf[n as usize], 0.0);
            for (c, v) in cols.iter_mut().zip(&buf) {
                c.push(*v);
            }
        }
        for (s, col) in cols.iter().enumerate().take(n as usize).skip(1) {
            let m = stats::mean(col);
            assert!(m.abs() < 3.0 * stats::std_err(col));
            let v = stats::variance(col);
            let target = (s * (n as usize - s)) as f64 / n as f64;
            // Var of the sample variance of normals: 2σ⁴/(r-1).
            let se = target * (2.0 / (reps as f64 - 1.0)).sqrt();
            assert!((v - target).abs() < 3.0 * se, "s={s}: {v} vs {target}");
        }
    }

    #[test]
    fn nonpositive_constant_barrier() {
        for c in [0.0, -1.0] {
            let e = bridge_barrier_prob(16, BridgeBarrier::Constant { c }, 500, 1).unwrap();
            assert_eq!(e.p, 0.0);
            assert_eq!(e.reference, Some(0.0));
        }
    }

    #[test]
    fn constant_barrier_below_continuum() {
        // Monitoring at integer times can only raise the non-crossing probability.
        let e = bridge_barrier_prob(32, BridgeBarrier::Constant { c: 2.0 }, 20_000, 3).unwrap();
        let r = e.reference.unwrap();
        assert!((r - (1.0 - (-8.0f64 / 32.0).exp())).abs() < 1e-15);
        assert!(e.p >= r - 3.0 * e.se);
        assert!((0.0..=1.0).contains(&e.p));
    }

    #[test]
    fn tent_with_zero_amplitude_is_constant_one() {
        let a = bridge_barrier_prob(16, BridgeBarrier::Tent { c5: 0.0 }, 2000, 4).unwrap();
        let b = bridge_barrier_prob(16, BridgeBarrier::Constant { c: 1.0 }, 2000, 4).unwrap();
        assert_eq!(a.p, b.p);
    }

    #[test]
    fn decay_reports_slope() {
        let d = bridge_decay(&[8, 16, 32], BridgeBarrier::Constant { c: 2.0 }, 4000, 2).unwrap();
        assert_eq!(d.fitted_points, 3);
        assert!(d.slope.unwrap() < 0.0);
    }
}
