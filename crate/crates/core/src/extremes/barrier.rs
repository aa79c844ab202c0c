use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fields::{MbrwSampler, NoiseBank, ScaleWindow};
use crate::lattice::{ceil_log2, torus_distances, GridPoint, GridSpec, Subgrid};
use crate::rng::{replicate_map, stream};
use crate::stats;

/// Target level `A_n = 2 sqrt(log 2) n - (3 / (4 sqrt(log 2))) log n`.
pub fn a_n(n: u32) -> f64 {
    let l = std::f64::consts::LN_2.sqrt();
    let nf = n as f64;
    2.0 * l * nf - 0.75 / l * nf.ln()
}

/// `L_n(j)` for `j = 0..=n`: `c5 log j` up to `floor(n/2)`, `c5 log(n - j)`
/// beyond, and zero at both ends.
pub fn barrier_curve(n: u32, c5: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            if j == 0 || j == n {
                0.0
            } else if j <= n / 2 {
                c5 * (j as f64).ln()
            } else {
                c5 * ((n - j) as f64).ln()
            }
        })
        .collect()
}

/// Barrier parameters for the event `C_z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierSpec {
    pub n: u32,
    pub c5: f64,
    pub a_n: f64,
    pub curve: Vec<f64>,
}

impl BarrierSpec {
    pub fn new(n: u32, c5: f64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("barrier needs n >= 1"));
        }
        if !c5.is_finite() {
            return Err(invalid("c5 must be finite"));
        }
        Ok(Self {
            n,
            c5,
            a_n: a_n(n),
            curve: barrier_curve(n, c5),
        })
    }

    /// Upper barrier `(j/n)(A_n + 1) - L_n(j) + 1`.
    pub fn upper(&self, j: u32) -> f64 {
        j as f64 / self.n as f64 * (self.a_n + 1.0) - self.curve[j as usize] + 1.0
    }

    /// `C_z` for a scale path `S_z(0..=n)`. Inequalities are weak.
    pub fn admits(&self, path: &[f64]) -> bool {
        let end = path[self.n as usize];
        end >= self.a_n
            && end <= self.a_n + 1.0
            && path.iter().enumerate().all(|(j, &s)| s <= self.upper(j as u32))
    }
}

/// `(r, u)` with `u = ceil(log2(d∞ + 1))` and `r = n - u`.
pub fn pair_overlap(z: GridPoint, w: GridPoint, grid: GridSpec) -> (u32, u32) {
    let d = torus_distances(z, w, grid.side()).d_inf as u64;
    let u = ceil_log2(d + 1);
    (grid.n() - u, u)
}

/// Outcome of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateEvents {
    /// Number of `z ∈ V_N'` with `C_z`.
    pub h: u64,
    /// `max_{z ∈ V_N'} S_z`.
    pub s_max: f64,
}

/// Noise bank of replicate `rep` in [`count_barrier_events`].
pub fn barrier_replicate_bank(n: u32, seed: u64, rep: usize) -> Result<NoiseBank> {
    let grid = GridSpec::new(n)?;
    Ok(MbrwSampler::new(grid, ScaleWindow::full(n)).bank(&mut stream(seed, rep as u64)))
}

/// Evaluates `C_z` at every site of `V_N'` for one noise bank.
pub fn barrier_events_in_bank(bank: &NoiseBank, spec: &BarrierSpec) -> ReplicateEvents {
    let grid = bank.grid();
    let layers = bank.layers();
    let mut path = vec![0.0; grid.n() as usize + 1];
    let mut h = 0;
    let mut s_max = f64::NEG_INFINITY;
    for i in Subgrid::Inner.indices(grid.side()) {
        layers.path_into(i, &mut path);
        s_max = s_max.max(path[grid.n() as usize]);
        if spec.admits(&path) {
            h += 1;
        }
    }
    ReplicateEvents { h, s_max }
}

/// Barrier-event tallies and the second-moment chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventCounts {
    pub spec: BarrierSpec,
    pub reps: usize,
    pub h: Vec<u64>,
    pub s_max: Vec<f64>,
    pub mean_h: f64,
    pub mean_h_se: f64,
    pub mean_h2: f64,
    pub mean_h2_se: f64,
    pub p_h_pos: f64,
    pub p_h_pos_se: f64,
    /// `(Êh)² / Êh²`, zero when no event was seen.
    pub second_moment_bound: f64,
    pub second_moment_bound_se: f64,
    /// `Êh² / (Êh)²`, infinite when no event was seen.
    pub moment_ratio: f64,
    /// `P̂(S̃* >= A_n)`.
    pub p_reach: f64,
    pub p_reach_se: f64,
    /// Replicates with `h >= 1` but `S̃* < A_n`.
    pub implication_violations: usize,
}

impl EventCounts {
    /// `bound <= P̂(h>=1) <= P̂(S̃*>=A_n)`, each within three combined SEs.
    pub fn chain_holds(&self) -> bool {
        let tol1 = 3.0 * self.second_moment_bound_se.hypot(self.p_h_pos_se);
        let tol2 = 3.0 * self.p_h_pos_se.hypot(self.p_reach_se);
        self.second_moment_bound <= self.p_h_pos + tol1 && self.p_h_pos <= self.p_reach + tol2
    }
}

fn proportion(hits: usize, reps: usize) -> (f64, f64) {
    let p = hits as f64 / reps as f64;
    (p, (p * (1.0 - p) / reps as f64).sqrt())
}

/// Samples `reps` MBRW realizations on `V_N`, `N = 2^n`, and counts the sites
/// of `V_N'` whose scale path satisfies `C_z`.
pub fn count_barrier_events(n: u32, c5: f64, reps: usize, seed: u64) -> Result<EventCounts> {
    if n < 2 {
        return Err(invalid("barrier events need n >= 2"));
    }
    if reps < 2 {
        return Err(invalid("need at least two replicates"));
    }
    let spec = BarrierSpec::new(n, c5)?;
    GridSpec::new(n)?;
    let per: Vec<ReplicateEvents> = replicate_map(reps, seed, |rng, _| {
        let bank = MbrwSampler::new(GridSpec::new(n).expect("validated"), ScaleWindow::full(n)).bank(rng);
        barrier_events_in_bank(&bank, &spec)
    });
    let h: Vec<u64> = per.iter().map(|e| e.h).collect();
    let s_max: Vec<f64> = per.iter().map(|e| e.s_max).collect();
    let hf: Vec<f64> = h.iter().map(|&x| x as f64).collect();
    let h2: Vec<f64> = hf.iter().map(|x| x * x).collect();
    let mean_h = stats::mean(&hf);
    let mean_h2 = stats::mean(&h2);
    let mean_h_se = stats::std_err(&hf);
    let mean_h2_se = stats::std_err(&h2);
    let (p_h_pos, p_h_pos_se) = proportion(h.iter().filter(|&&x| x >= 1).count(), reps);
    let (p_reach, p_reach_se) = proportion(s_max.iter().filter(|&&s| s >= spec.a_n).count(), reps);
    let (bound, bound_se) = if mean_h2 > 0.0 {
        let b = mean_h * mean_h / mean_h2;
        // Delta method on (mean h, mean h²) with their sample covariance.
        let r = reps as f64;
        let mh3 = hf.iter().map(|x| x * x * x).sum::<f64>() / r;
        let cov = (mh3 - mean_h * mean_h2) / (r - 1.0);
        let g1 = 2.0 * mean_h / mean_h2;
        let g2 = -mean_h * mean_h / (mean_h2 * mean_h2);
        let var = g1 * g1 * mean_h_se.powi(2) + g2 * g2 * mean_h2_se.powi(2) + 2.0 * g1 * g2 * cov;
        (b, var.max(0.0).sqrt())
    } else {
        (0.0, 0.0)
    };
    let implication_violations = per.iter().filter(|e| e.h >= 1 && e.s_max < spec.a_n).count();
    Ok(EventCounts {
        moment_ratio: if mean_h > 0.0 { mean_h2 / (mean_h * mean_h) } else { f64::INFINITY },
        spec,
        reps,
        h,
        s_max,
        mean_h,
        mean_h_se,
        mean_h2,
        mean_h2_se,
        p_h_pos,
        p_h_pos_se,
        second_moment_bound: bound,
        second_moment_bound_se: bound_se,
        p_reach,
        p_reach_se,
        implication_violations,
    })
}

/// One row of the left-tail table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeftTailRow {
    pub alpha: f64,
    pub level: f64,
    /// `P̂(S̃* <= A_n - α)`.
    pub p: f64,
    pub se: f64,
}

/// Empirical left tail of `S̃*_N` below `A_n` on a grid of offsets `α`.
pub fn lefttail_decay(n: u32, reps: usize, alphas: &[f64], seed: u64) -> Result<Vec<LeftTailRow>> {
    if alphas.is_empty() {
        return Err(invalid("empty alpha grid"));
    }
    if alphas[0] < 0.0 || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("alpha grid must be nonnegative and increasing"));
    }
    if reps < 2 {
        return Err(invalid("need at least two replicates"));
    }
    let grid = GridSpec::new(n)?;
    if grid.side() < 4 {
        return Err(invalid("left tail needs n >= 2"));
    }
    let inner = Subgrid::Inner.indices(grid.side());
    let sampler = MbrwSampler::new(grid, ScaleWindow::full(n));
    let smax = replicate_map(reps, seed, |rng, _| {
        let field = sampler.bank(rng).layers().field();
        inner.iter().map(|&i| field[i]).fold(f64::NEG_INFINITY, f64::max)
    });
    let a = a_n(n);
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let level = a - alpha;
            let (p, se) = proportion(smax.iter().filter(|&&s| s <= level).count(), reps);
            LeftTailRow { alpha, level, p, se }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::points;

    #[test]
    fn curve_examples() {
        let c = barrier_curve(8, 10.0);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[8], 0.0);
        assert_eq!(c[1], 0.0);
        assert!((c[4] - 13.862_943_611_198_906).abs() < 1e-12);
        assert_eq!(c[3], c[5]);
        let odd = barrier_curve(7, 2.0);
        assert_eq!(odd[3], 2.0 * 3f64.ln());
        assert_eq!(odd[4], 2.0 * 3f64.ln());
    }

    #[test]
    fn a_n_value() {
        let l = std::f64::consts::LN_2.sqrt();
        assert!((a_n(8) - (16.0 * l - 0.75 / l * 8f64.ln())).abs() < 1e-12);
        assert_eq!(a_n(1), 2.0 * l);
    }

    #[test]
    fn overlap_examples() {
        let g = GridSpec::new(4).unwrap();
        let z = GridPoint::new(0, 0);
        assert_eq!(pair_overlap(z, z, g), (4, 0));
        assert_eq!(pair_overlap(z, GridPoint::new(1, 1), g), (3, 1));
        assert_eq!(pair_overlap(z, GridPoint::new(5, 0), g), (1, 3));
        assert_eq!(pair_overlap(z, GridPoint::new(15, 0), g), (3, 1));
    }

    /// `S_z(j)` from the noise bank by listing the corners of every box
    /// containing `z` at each scale.
    fn path_by_enumeration(bank: &NoiseBank, z: GridPoint) -> Vec<f64> {
        let n = bank.grid().n();
        let side = bank.grid().side() as i64;
        let mut out = Vec::new();
        let mut s = 0.0;
        for j in 0..=n {
            let k = n - j;
            let len = 1i64 << k;
            for a in 0..len {
                for b in 0..len {
                    let c = GridPoint::new((z.x1 - a).rem_euclid(side), (z.x2 - b).rem_euclid(side));
                    s += bank.noise(k, c);
                }
            }
            out.push(s);
        }
        out
    }

    fn h_by_enumeration(bank: &NoiseBank, spec: &BarrierSpec) -> u64 {
        let side = bank.grid().side();
        points(side)
            .filter(|&z| Subgrid::Inner.contains(z, side))
            .filter(|&z| spec.admits(&path_by_enumeration(bank, z)))
            .count() as u64
    }

    #[test]
    fn h_matches_enumeration_at_n4() {
        for c5 in [10.0, 1.0, 0.0] {
            let counts = count_barrier_events(4, c5, 60, 17).unwrap();
            let spec = BarrierSpec::new(4, c5).unwrap();
            for rep in 0..60 {
                let bank = barrier_replicate_bank(4, 17, rep).unwrap();
                assert_eq!(counts.h[rep], h_by_enumeration(&bank, &spec), "c5 {c5} rep {rep}");
            }
        }
    }

    #[test]
    fn events_imply_reaching_level() {
        let c = count_barrier_events(5, 0.0, 300, 4).unwrap();
        assert!(c.h.iter().any(|&h| h > 0));
        assert_eq!(c.implication_violations, 0);
        for (h, s) in c.h.iter().zip(&c.s_max) {
            if *h >= 1 {
                assert!(*s >= c.spec.a_n);
            }
        }
        assert!(c.chain_holds());
    }

    #[test]
    fn weak_inequality_at_the_window_edges() {
        let spec = BarrierSpec::new(2, 0.0).unwrap();
        let a = spec.a_n;
        assert!(spec.admits(&[0.5, 0.5 * (a + 1.0) + 1.0, a]));
        assert!(spec.admits(&[1.0, 0.0, a + 1.0]));
        assert!(!spec.admits(&[1.0 + 1e-9, 0.0, a]));
        assert!(!spec.admits(&[0.0, 0.0, a - 1e-9]));
    }

    #[test]
    fn left_tail_monotone() {
        let rows = lefttail_decay(4, 400, &[0.0, 1.0, 2.0, 4.0, 40.0], 9).unwrap();
        assert!(rows.windows(2).all(|w| w[1].p <= w[0].p));
        assert_eq!(rows.last().unwrap().p, 0.0);
        assert!(lefttail_decay(4, 10, &[1.0, 0.5], 1).is_err());
        assert!(lefttail_decay(4, 10, &[-1.0], 1).is_err());
    }
}
