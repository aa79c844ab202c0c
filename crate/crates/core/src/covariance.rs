//! Closed-form covariance kernels, the log-distance estimates they satisfy,
//! truncated increment variances, and the Sudakov-Fernique comparison harness.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fields::{fill_normal, FieldSampler, GffMethod, GffSampler, MbrwSampler, ScaleWindow};
use crate::green::{torus_green, DirichletOperator, DirichletSpectral};
use crate::lattice::{points, t_components, torus_distances, GridPoint, GridSpec, Subgrid};
use crate::rng::{replicate_fold, replicate_map, SimRng};
use crate::stats;

/// `2 log 2 / π`, the GFF variance per scale.
pub const GFF_SCALE_VARIANCE: f64 = 2.0 * LN_2 / PI;

/// Where a kernel's values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactFormula,
    ExactSolve,
    Empirical,
}

/// A covariance kernel on a finite index set, stored densely.
#[derive(Debug, Clone)]
pub struct KernelOracle {
    pub provenance: Provenance,
    pub points: Vec<GridPoint>,
    values: Vec<f64>,
}

impl KernelOracle {
    pub fn from_fn(
        points: Vec<GridPoint>,
        provenance: Provenance,
        f: impl Fn(GridPoint, GridPoint) -> f64 + Sync,
    ) -> Self {
        let m = points.len();
        let values = (0..m * m)
            .into_par_iter()
            .map(|t| f(points[t / m], points[t % m]))
            .collect();
        Self {
            provenance,
            points,
            values,
        }
    }

    pub fn from_values(points: Vec<GridPoint>, provenance: Provenance, values: Vec<f64>) -> Result<Self> {
        if values.len() != points.len() * points.len() {
            return Err(Error::IndexMismatch {
                left: values.len(),
                right: points.len() * points.len(),
            });
        }
        Ok(Self {
            provenance,
            points,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.points.len() + j]
    }

    /// `E(G_i - G_j)²`.
    #[inline]
    pub fn increment_variance(&self, i: usize, j: usize) -> f64 {
        self.cov(i, i) + self.cov(j, j) - 2.0 * self.cov(i, j)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `scale² · (K + c² I)`: the kernel of `scale · (G + c g)` with `g` white noise.
    pub fn with_white_noise(&self, c: f64, scale: f64) -> Self {
        let m = self.len();
        let mut values: Vec<f64> = self.values.iter().map(|v| v * scale * scale).collect();
        for i in 0..m {
            values[i * m + i] += c * c * scale * scale;
        }
        Self {
            provenance: self.provenance,
            points: self.points.clone(),
            values,
        }
    }
}

/// Number of corners (mod `N`) of a cyclic interval of length `len` that
/// cover two points at cyclic distance `t`.
#[inline]
fn cyclic_overlap(t: i64, len: i64, side: i64) -> i64 {
    (len - t).max(0) + (len - side + t).max(0)
}

/// Scale-`k` contribution to `E(S_x S_y)`.
#[inline]
fn mbrw_scale_cov(t1: i64, t2: i64, k: u32, side: i64) -> f64 {
    let len = 1i64 << k;
    let c = cyclic_overlap(t1, len, side) * cyclic_overlap(t2, len, side);
    c as f64 / (len * len) as f64
}

/// Exact MBRW covariance over a scale window.
///
/// For scales `k < n` this is `2^{-2k}(2^k - t1)₊(2^k - t2)₊`; at `k = n` every
/// box wraps the whole torus and the layer is common to all sites, giving 1.
pub fn mbrw_cov_window(x: GridPoint, y: GridPoint, grid: GridSpec, window: ScaleWindow) -> f64 {
    let side = grid.side() as i64;
    let (t1, t2) = t_components(x, y, grid.side());
    (window.k_lo..=window.k_hi)
        .map(|k| mbrw_scale_cov(t1, t2, k, side))
        .sum()
}

/// `E(S_x S_y)` of the full MBRW.
pub fn mbrw_cov_exact(x: GridPoint, y: GridPoint, grid: GridSpec) -> f64 {
    mbrw_cov_window(x, y, grid, ScaleWindow::full(grid.n()))
}

/// `ρ_{N,k0}(x,y) = E(S^{N,k0}_x - S^{N,k0}_y)²` for the field truncated to
/// scales `k0..=n`.
pub fn rho_trunc(x: GridPoint, y: GridPoint, grid: GridSpec, k0: u32) -> Result<f64> {
    if k0 > grid.n() {
        return Err(Error::ScaleOutOfRange { k: k0, n: grid.n() });
    }
    let (t1, t2) = t_components(x, y, grid.side());
    Ok(rho_profile(t1, t2, grid)[k0 as usize])
}

/// `ρ_{N,k0}` for every `k0 = 0..=n` at torus offsets `(t1, t2)`.
pub fn rho_profile(t1: i64, t2: i64, grid: GridSpec) -> Vec<f64> {
    let n = grid.n();
    let side = grid.side() as i64;
    let mut out = vec![0.0; n as usize + 1];
    let mut acc = 0.0;
    for k in (0..=n).rev() {
        acc += 2.0 - 2.0 * mbrw_scale_cov(t1, t2, k, side);
        out[k as usize] = acc;
    }
    out
}

/// `E(R_x R_y)` of the BRW: the number of scales at which `x` and `y` share
/// their aligned dyadic box.
pub fn brw_cov_exact(x: GridPoint, y: GridPoint, grid: GridSpec) -> f64 {
    (0..=grid.n())
        .filter(|&k| x.x1 >> k == y.x1 >> k && x.x2 >> k == y.x2 >> k)
        .count() as f64
}

/// A pair at which a comparison failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub x: GridPoint,
    pub y: GridPoint,
    pub lhs: f64,
    pub rhs: f64,
}

/// Monte Carlo expected maxima of the two compared fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmaxPair {
    pub mean_a: f64,
    pub se_a: f64,
    pub mean_b: f64,
    pub se_b: f64,
    /// Set when `mean_a < mean_b` by more than three combined standard errors.
    pub ordering_contradicted: bool,
}

/// Result of a kernel estimate or comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub estimate_name: String,
    #[serde(rename = "N")]
    pub side: usize,
    pub sup_deviation: f64,
    pub argmax_pair: Option<(GridPoint, GridPoint)>,
    /// Deviation at `x = y`, reported apart from the sup.
    pub diagonal_deviation: Option<f64>,
    /// Sup over pairs with `‖x - y‖ <= 1` (GFF estimate only).
    pub near_diagonal_sup: Option<f64>,
    pub pairs_checked: usize,
    pub violations: Vec<Violation>,
    pub emax: Option<EmaxPair>,
}

impl ComparisonReport {
    fn new(name: &str, side: usize) -> Self {
        Self {
            estimate_name: name.to_string(),
            side,
            sup_deviation: 0.0,
            argmax_pair: None,
            diagonal_deviation: None,
            near_diagonal_sup: None,
            pairs_checked: 0,
            violations: Vec::new(),
            emax: None,
        }
    }

    fn offer(&mut self, dev: f64, x: GridPoint, y: GridPoint) {
        self.pairs_checked += 1;
        if dev > self.sup_deviation || self.argmax_pair.is_none() {
            self.sup_deviation = dev;
            self.argmax_pair = Some((x, y));
        }
    }
}

/// Sup over `x ≠ y` of `|R_S(x,y) - (n - log₂ d^N(x,y))|`. By stationarity it
/// suffices to scan offsets from the origin.
pub fn mbrw_log_deviation(grid: GridSpec) -> ComparisonReport {
    let side = grid.side();
    let n = grid.n() as f64;
    let o = GridPoint::new(0, 0);
    let mut rep = ComparisonReport::new("mbrw-log-distance", side);
    for y in points(side) {
        if y == o {
            continue;
        }
        let d = torus_distances(o, y, side).d;
        let dev = (mbrw_cov_exact(o, y, grid) - (n - d.log2())).abs();
        rep.offer(dev, o, y);
    }
    rep.diagonal_deviation = Some((mbrw_cov_exact(o, o, grid) - n).abs());
    rep
}

/// Slack constants of the `(d + 1)` bounds on the MBRW covariance:
/// `max R_S - (n - log₂(d^N + 1))` and `max (n - log₂(d^N + 1)) - R_S`
/// over all pairs including the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MbrwBoundSlack {
    pub upper: f64,
    pub lower: f64,
}

pub fn mbrw_bound_slack(grid: GridSpec) -> MbrwBoundSlack {
    let side = grid.side();
    let n = grid.n() as f64;
    let o = GridPoint::new(0, 0);
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for y in points(side) {
        let d = torus_distances(o, y, side).d;
        let r = mbrw_cov_exact(o, y, grid);
        let reference = n - (d + 1.0).log2();
        upper = upper.max(r - reference);
        lower = lower.max(reference - r);
    }
    MbrwBoundSlack { upper, lower }
}

/// Sup over `x ≠ y` of `|Ḡ_N(x,y) - (2 log 2/π)(n - log₂ d^N(x,y))|`.
pub fn tgff_log_deviation(grid: GridSpec, killing: f64) -> Result<ComparisonReport> {
    let side = grid.side();
    let n = grid.n() as f64;
    let g = torus_green(side, killing)?;
    let o = GridPoint::new(0, 0);
    let mut rep = ComparisonReport::new("tgff-log-distance", side);
    for y in points(side) {
        if y == o {
            continue;
        }
        let d = torus_distances(o, y, side).d;
        let dev = (g.get(o, y) - GFF_SCALE_VARIANCE * (n - d.log2())).abs();
        rep.offer(dev, o, y);
    }
    rep.diagonal_deviation = Some((g.diagonal() - GFF_SCALE_VARIANCE * n).abs());
    Ok(rep)
}

/// Target columns of the `V_N + (2N, 2N)` block used by [`gff_log_deviation`]:
/// every point when `N <= 16`, otherwise a lattice of stride `N/16` that
/// includes the block corners.
pub fn gff_block_columns(side: usize) -> Vec<GridPoint> {
    let off = 2 * side as i64;
    let stride = (side / 16).max(1) as i64;
    let mut coords: Vec<i64> = (0..side as i64).step_by(stride as usize).collect();
    if *coords.last().unwrap() != side as i64 - 1 {
        coords.push(side as i64 - 1);
    }
    coords
        .iter()
        .flat_map(|&a| coords.iter().map(move |&b| GridPoint::new(off + a, off + b)))
        .collect()
}

/// Sup of `|G_{4N}(x,y) - (2 log 2/π)(n - (log₂‖x-y‖)₊)|` for `x` ranging over
/// the whole block `V_N + (2N, 2N)` and `y` over [`gff_block_columns`].
/// Pairs with `‖x - y‖ <= 1` are also summarized in `near_diagonal_sup`.
pub fn gff_log_deviation(grid: GridSpec) -> Result<ComparisonReport> {
    let side = grid.side();
    let host = 4 * side;
    let n = grid.n() as f64;
    let sp = DirichletSpectral::new(host)?;
    let block = Subgrid::Shifted.points(side);
    let cols = gff_block_columns(side);
    let per_col: Vec<ComparisonReport> = cols
        .par_iter()
        .map(|&y| -> Result<ComparisonReport> {
            let col = sp.column(y)?;
            let mut rep = ComparisonReport::new("", side);
            let mut near = 0.0f64;
            for &x in &block {
                let e = ((x.x1 - y.x1).pow(2) + (x.x2 - y.x2).pow(2)) as f64;
                let dist = e.sqrt();
                let reference = GFF_SCALE_VARIANCE * (n - dist.log2().max(0.0));
                let dev = (col[x.index(host)] - reference).abs();
                if dist <= 1.0 {
                    near = near.max(dev);
                }
                rep.offer(dev, x, y);
            }
            rep.near_diagonal_sup = Some(near);
            Ok(rep)
        })
        .collect::<Result<_>>()?;
    let mut rep = ComparisonReport::new("gff-4n-log-distance", side);
    let mut near = 0.0f64;
    for r in per_col {
        near = near.max(r.near_diagonal_sup.unwrap_or(0.0));
        if r.sup_deviation > rep.sup_deviation || rep.argmax_pair.is_none() {
            rep.sup_deviation = r.sup_deviation;
            rep.argmax_pair = r.argmax_pair;
        }
        rep.pairs_checked += r.pairs_checked;
    }
    rep.near_diagonal_sup = Some(near);
    Ok(rep)
}

/// The three log-distance estimates for one `N = 2^n`: TGFF (default
/// killing), MBRW and the `4N`-box GFF on its shifted block.
pub fn log_distance_check(grid: GridSpec) -> Result<Vec<ComparisonReport>> {
    Ok(vec![
        tgff_log_deviation(grid, crate::green::default_killing(grid.side()))?,
        mbrw_log_deviation(grid),
        gff_log_deviation(grid)?,
    ])
}

/// Outcome of the exhaustive truncation scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    #[serde(rename = "N")]
    pub side: usize,
    pub k0_max: u32,
    pub pairs_checked: usize,
    /// Pairs where `ρ_{N,k0+1} > ρ_{N,k0}` for some `k0`.
    pub monotone_violations: usize,
    /// `(pair, k0)` combinations with `log₂ d∞ >= √k0 - 1` but
    /// `ρ_{N,0} - ρ_{N,k0} < √k0 - 1`.
    pub gap_violations: usize,
    /// Smallest slack `ρ_{N,0} - ρ_{N,k0} - (√k0 - 1)` seen on qualifying pairs.
    pub min_gap_slack: f64,
}

/// Scans every ordered pair of `V_N` for the monotonicity and gap properties
/// of `ρ_{N,k0}`, `k0 = 0..=k0_max`.
pub fn truncation_scan(grid: GridSpec, k0_max: u32) -> Result<TruncationReport> {
    if k0_max > grid.n() {
        return Err(Error::ScaleOutOfRange { k: k0_max, n: grid.n() });
    }
    let side = grid.side();
    let s2 = side * side;
    let parts: Vec<(usize, usize, usize, f64)> = (0..s2)
        .into_par_iter()
        .map(|i| {
            let x = GridPoint::from_index(i, side);
            let mut mono = 0;
            let mut gap = 0;
            let mut pairs = 0;
            let mut slack = f64::INFINITY;
            for y in points(side) {
                pairs += 1;
                let (t1, t2) = t_components(x, y, side);
                let rho = rho_profile(t1, t2, grid);
                if (0..k0_max as usize).any(|k| rho[k + 1] > rho[k] + 1e-12) {
                    mono += 1;
                }
                if x == y {
                    continue;
                }
                let ld = (t1.max(t2) as f64).log2();
                for k0 in 0..=k0_max {
                    let thr = (k0 as f64).sqrt() - 1.0;
                    if ld >= thr {
                        let s = rho[0] - rho[k0 as usize] - thr;
                        slack = slack.min(s);
                        if s < -1e-12 {
                            gap += 1;
                        }
                    }
                }
            }
            (mono, gap, pairs, slack)
        })
        .collect();
    let mut rep = TruncationReport {
        side,
        k0_max,
        pairs_checked: 0,
        monotone_violations: 0,
        gap_violations: 0,
        min_gap_slack: f64::INFINITY,
    };
    for (m, g, p, s) in parts {
        rep.monotone_violations += m;
        rep.gap_violations += g;
        rep.pairs_checked += p;
        rep.min_gap_slack = rep.min_gap_slack.min(s);
    }
    Ok(rep)
}

/// Exact MBRW kernel on `V_N`.
pub fn mbrw_kernel(grid: GridSpec, window: ScaleWindow) -> KernelOracle {
    KernelOracle::from_fn(points(grid.side()).collect(), Provenance::ExactFormula, |x, y| {
        mbrw_cov_window(x, y, grid, window)
    })
}

/// Exact BRW kernel on `V_N`.
pub fn brw_kernel(grid: GridSpec) -> KernelOracle {
    KernelOracle::from_fn(points(grid.side()).collect(), Provenance::ExactFormula, |x, y| {
        brw_cov_exact(x, y, grid)
    })
}

/// `G_{4N}` restricted to `V_N + (2N, 2N)`, by band solves.
pub fn gff_block_kernel(side: usize) -> Result<KernelOracle> {
    let host = 4 * side;
    let op = DirichletOperator::new(host)?;
    let block = Subgrid::Shifted.points(side);
    let m = block.len();
    let cols: Vec<Vec<f64>> = block
        .par_iter()
        .map(|&y| op.column(y).map(|c| block.iter().map(|x| c[x.index(host)]).collect()))
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; m * m];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * m + j] = *v;
        }
    }
    KernelOracle::from_values(block, Provenance::ExactSolve, values)
}

/// Sample mean and standard error of `E[X_i X_j]` over replicates.
#[derive(Debug, Clone)]
pub struct EmpiricalKernel {
    pub m: usize,
    pub reps: usize,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

struct CovAcc {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    buf: Vec<f64>,
}

/// Empirical second moments of a centered field sampled on `m` sites.
pub fn empirical_kernel<F>(m: usize, reps: usize, seed: u64, sample: F) -> EmpiricalKernel
where
    F: Fn(&mut SimRng, &mut [f64]) + Sync + Send,
{
    let acc = replicate_fold(
        reps,
        seed,
        || CovAcc {
            sum: vec![0.0; m * m],
            sumsq: vec![0.0; m * m],
            buf: vec![0.0; m],
        },
        |acc, rng, _| {
            sample(rng, &mut acc.buf);
            for i in 0..m {
                let xi = acc.buf[i];
                let row = &mut acc.sum[i * m..(i + 1) * m];
                let rowsq = &mut acc.sumsq[i * m..(i + 1) * m];
                for ((s, q), &xj) in row.iter_mut().zip(rowsq.iter_mut()).zip(&acc.buf) {
                    let p = xi * xj;
                    *s += p;
                    *q += p * p;
                }
            }
        },
        |a, b| {
            for (x, y) in a.sum.iter_mut().zip(&b.sum) {
                *x += y;
            }
            for (x, y) in a.sumsq.iter_mut().zip(&b.sumsq) {
                *x += y;
            }
        },
    );
    let r = reps as f64;
    let mean: Vec<f64> = acc.sum.iter().map(|s| s / r).collect();
    let se = acc
        .sumsq
        .iter()
        .zip(&mean)
        .map(|(q, mu)| {
            let var = ((q - r * mu * mu) / (r - 1.0)).max(0.0);
            (var / r).sqrt()
        })
        .collect();
    EmpiricalKernel { m, reps, mean, se }
}

/// Agreement of an empirical kernel with an exact one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelAgreement {
    pub entries: usize,
    pub within: usize,
    pub fraction_within: f64,
    pub max_abs_error: f64,
    /// Largest `|empirical - exact| / SE` among entries with positive SE.
    pub max_z: f64,
}

/// Counts entries with `|empirical - exact| <= nsigma · SE`.
pub fn kernel_agreement(exact: &KernelOracle, emp: &EmpiricalKernel, nsigma: f64) -> Result<KernelAgreement> {
    if exact.len() != emp.m {
        return Err(Error::IndexMismatch {
            left: exact.len(),
            right: emp.m,
        });
    }
    let mut within = 0;
    let mut max_abs: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for (t, (&e, &se)) in emp.mean.iter().zip(&emp.se).enumerate() {
        let err = (e - exact.values()[t]).abs();
        max_abs = max_abs.max(err);
        if se > 0.0 {
            max_z = max_z.max(err / se);
        }
        if err <= nsigma * se + 1e-12 {
            within += 1;
        }
    }
    let entries = emp.mean.len();
    Ok(KernelAgreement {
        entries,
        within,
        fraction_within: within as f64 / entries as f64,
        max_abs_error: max_abs,
        max_z,
    })
}

/// A sampler producing one realization on a kernel's index set.
pub type IndexedSampler<'a> = &'a (dyn Fn(&mut SimRng) -> Vec<f64> + Sync);

/// Checks `E(A_x - A_y)² >= E(B_x - B_y)²` at every pair and estimates
/// `E max A`, `E max B` by Monte Carlo.
pub fn sudakov_fernique_compare(
    kernel_a: &KernelOracle,
    kernel_b: &KernelOracle,
    sampler_a: IndexedSampler<'_>,
    sampler_b: IndexedSampler<'_>,
    reps: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    if kernel_a.len() != kernel_b.len() {
        return Err(Error::IndexMismatch {
            left: kernel_a.len(),
            right: kernel_b.len(),
        });
    }
    if reps < 2 {
        return Err(invalid("need at least two replicates"));
    }
    let m = kernel_a.len();
    let mut rep = ComparisonReport::new("sudakov-fernique", 0);
    let viols: Vec<Vec<(usize, usize, f64, f64)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut v = Vec::new();
            for j in i + 1..m {
                let a = kernel_a.increment_variance(i, j);
                let b = kernel_b.increment_variance(i, j);
                if a < b - 1e-10 * (1.0 + b.abs()) {
                    v.push((i, j, a, b));
                }
            }
            v
        })
        .collect();
    let mut worst = 0.0f64;
    for (i, j, a, b) in viols.into_iter().flatten() {
        if b - a > worst {
            worst = b - a;
            rep.argmax_pair = Some((kernel_a.points[i], kernel_a.points[j]));
        }
        rep.violations.push(Violation {
            x: kernel_a.points[i],
            y: kernel_a.points[j],
            lhs: a,
            rhs: b,
        });
    }
    rep.sup_deviation = worst;
    rep.pairs_checked = m * (m - 1) / 2;
    let maxima = |s: IndexedSampler<'_>, tag: u64| {
        replicate_map(reps, seed ^ tag, |rng, _| {
            s(rng).into_iter().fold(f64::NEG_INFINITY, f64::max)
        })
    };
    let ma = maxima(sampler_a, 0xA);
    let mb = maxima(sampler_b, 0xB);
    let (mean_a, se_a) = (stats::mean(&ma), stats::std_err(&ma));
    let (mean_b, se_b) = (stats::mean(&mb), stats::std_err(&mb));
    rep.emax = Some(EmaxPair {
        mean_a,
        se_a,
        mean_b,
        se_b,
        ordering_contradicted: mean_a < mean_b - 3.0 * se_a.hypot(se_b),
    });
    Ok(rep)
}

/// Smallest integer `C1 >= 0` such that
/// `(2 log 2/π)(E(S_x - S_y)² + 2 C1²) >= E(γ_{x_N} - γ_{y_N})²` for all
/// `x ≠ y`, where `γ` is the `4N`-box GFF on `V_N + (2N, 2N)`.
pub fn search_c1(mbrw: &KernelOracle, gff_block: &KernelOracle) -> Result<u32> {
    if mbrw.len() != gff_block.len() {
        return Err(Error::IndexMismatch {
            left: mbrw.len(),
            right: gff_block.len(),
        });
    }
    let m = mbrw.len();
    let need = (0..m)
        .into_par_iter()
        .map(|i| {
            (i + 1..m)
                .map(|j| {
                    (gff_block.increment_variance(i, j) / GFF_SCALE_VARIANCE
                        - mbrw.increment_variance(i, j))
                        / 2.0
                })
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let mut c = need.max(0.0).sqrt().ceil() as u32;
    // Guard against rounding at an exact integer boundary.
    while c > 0 && dominates(mbrw, gff_block, c - 1) {
        c -= 1;
    }
    while !dominates(mbrw, gff_block, c) {
        c += 1;
    }
    Ok(c)
}

/// Outcome of [`sudakov_fernique_run`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SudakovFerniqueReport {
    #[serde(rename = "N")]
    pub side: usize,
    pub c1: u32,
    pub comparison: ComparisonReport,
}

/// Compares `A = sqrt(2 log 2/π)(S + C1 g)` on `V_N` with the `4N`-box GFF on
/// `V_N + (2N, 2N)`, using the smallest integer `C1` giving exact increment
/// domination.
pub fn sudakov_fernique_run(grid: GridSpec, reps: usize, seed: u64) -> Result<SudakovFerniqueReport> {
    let side = grid.side();
    if side < 2 {
        return Err(invalid("comparison needs N >= 2"));
    }
    let mk = mbrw_kernel(grid, ScaleWindow::full(grid.n()));
    let gk = gff_block_kernel(side)?;
    let c1 = search_c1(&mk, &gk)?;
    let scale = GFF_SCALE_VARIANCE.sqrt();
    let a_kernel = mk.with_white_noise(c1 as f64, scale);
    let mbrw = MbrwSampler::new(grid, ScaleWindow::full(grid.n()));
    let gff = GffSampler::new(4 * side, GffMethod::Auto)?;
    let block = Subgrid::Shifted.indices(side);
    let sample_a = |rng: &mut SimRng| {
        let mut v = vec![0.0; side * side];
        mbrw.fill(rng, &mut v);
        let mut g = vec![0.0; side * side];
        fill_normal(rng, &mut g, c1 as f64);
        v.iter().zip(&g).map(|(s, e)| scale * (s + e)).collect()
    };
    let sample_b = |rng: &mut SimRng| {
        let mut v = vec![0.0; 16 * side * side];
        gff.fill(rng, &mut v);
        block.iter().map(|&i| v[i]).collect()
    };
    let mut comparison = sudakov_fernique_compare(&a_kernel, &gk, &sample_a, &sample_b, reps, seed)?;
    comparison.side = side;
    Ok(SudakovFerniqueReport {
        side,
        c1,
        comparison,
    })
}

fn dominates(mbrw: &KernelOracle, gff_block: &KernelOracle, c1: u32) -> bool {
    let a = mbrw.with_white_noise(c1 as f64, GFF_SCALE_VARIANCE.sqrt());
    let m = a.len();
    (0..m).into_par_iter().all(|i| {
        (i + 1..m).all(|j| {
            let b = gff_block.increment_variance(i, j);
            a.increment_variance(i, j) >= b - 1e-10 * (1.0 + b)
        })
    })
}
