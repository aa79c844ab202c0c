use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{FieldKind, FieldSpec};
use crate::lattice::Subgrid;
use crate::rng::replicate_map;
use crate::stats;

/// Replicate counts below this are accepted but flagged unreliable.
pub const MIN_RELIABLE_REPS: usize = 100;

const QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Set over which the maximum is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    /// `V_N`.
    Full,
    /// `V_N' = V_{N/2} + (N/4, N/4)`.
    Inner,
}

impl Restriction {
    pub fn name(&self) -> &'static str {
        match self {
            Restriction::Full => "full",
            Restriction::Inner => "inner",
        }
    }

    pub fn subgrid(&self) -> Subgrid {
        match self {
            Restriction::Full => Subgrid::Full,
            Restriction::Inner => Subgrid::Inner,
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Restriction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Restriction::Full),
            "inner" => Ok(Restriction::Inner),
            _ => Err(invalid(format!("unknown restriction '{s}'"))),
        }
    }
}

/// Monte Carlo summary of the field maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxStats {
    pub kind: FieldKind,
    #[serde(rename = "N")]
    pub side: usize,
    pub restriction: Restriction,
    pub reps: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// Levels 5, 25, 50, 75 and 95%.
    pub quantile_levels: [f64; 5],
    pub quantiles: [f64; 5],
    pub quantile_se: [f64; 5],
    pub unreliable: bool,
}

/// One maximum per replicate, in replicate order.
pub fn sample_maxima(
    spec: &FieldSpec,
    restriction: Restriction,
    reps: usize,
    seed: u64,
    max_side: usize,
) -> Result<Vec<f64>> {
    let sampler = spec.sampler_capped(max_side)?;
    let side = spec.side();
    let idx = match restriction {
        Restriction::Full => None,
        Restriction::Inner => {
            if side < 4 {
                return Err(invalid("inner restriction needs N >= 4"));
            }
            Some(Subgrid::Inner.indices(side))
        }
    };
    Ok(replicate_map(reps, seed, |rng, _| {
        let mut buf = vec![0.0; side * side];
        sampler.fill(rng, &mut buf);
        match &idx {
            None => buf.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Some(ix) => ix.iter().map(|&i| buf[i]).fold(f64::NEG_INFINITY, f64::max),
        }
    }))
}

/// Order-statistic standard error of the `p`-quantile: half the spread of the
/// quantiles at `p ± sqrt(p(1-p)/r)`.
fn quantile_se(sorted: &[f64], p: f64) -> f64 {
    let r = sorted.len() as f64;
    let h = (p * (1.0 - p) / r).sqrt();
    let lo = stats::quantile_sorted(sorted, (p - h).max(0.0));
    let hi = stats::quantile_sorted(sorted, (p + h).min(1.0));
    0.5 * (hi - lo)
}

/// Summary statistics of a vector of maxima.
pub fn summarize_maxima(
    kind: FieldKind,
    side: usize,
    restriction: Restriction,
    maxima: &[f64],
) -> MaxStats {
    let r = maxima.len();
    let s = stats::sorted(maxima);
    let var = stats::variance(maxima);
    let mut quantiles = [0.0; 5];
    let mut qse = [0.0; 5];
    for (i, &p) in QUANTILES.iter().enumerate() {
        quantiles[i] = stats::quantile_sorted(&s, p);
        qse[i] = quantile_se(&s, p);
    }
    MaxStats {
        kind,
        side,
        restriction,
        reps: r,
        mean: stats::mean(maxima),
        mean_se: stats::std_err(maxima),
        variance: var,
        variance_se: if r > 1 { var * (2.0 / (r as f64 - 1.0)).sqrt() } else { f64::NAN },
        quantile_levels: QUANTILES,
        quantiles,
        quantile_se: qse,
        unreliable: r < MIN_RELIABLE_REPS,
    }
}

/// Monte Carlo summary of `max` over the restriction. Requires `reps >= 100`.
pub fn max_stats(
    spec: &FieldSpec,
    restriction: Restriction,
    reps: usize,
    seed: u64,
    max_side: usize,
) -> Result<MaxStats> {
    if reps < MIN_RELIABLE_REPS {
        return Err(invalid(format!(
            "max-stats needs at least {MIN_RELIABLE_REPS} replicates, got {reps}"
        )));
    }
    let m = sample_maxima(spec, restriction, reps, seed, max_side)?;
    Ok(summarize_maxima(spec.kind(), spec.side(), restriction, &m))
}

/// Spread of the recentered maximum at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessRow {
    #[serde(rename = "N")]
    pub side: usize,
    pub reps: usize,
    pub mean: f64,
    pub iqr: f64,
    pub width_90: f64,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub kind: FieldKind,
    pub rows: Vec<TightnessRow>,
    /// Largest over smallest 5-95% width.
    pub width_ratio: f64,
    pub iqr_ratio: f64,
}

/// Quantile widths of `M_N = max - mean(max)` for each field spec. Each spec
/// uses its own replicate streams, derived from `seed` and its position.
pub fn tightness_report(
    specs: &[FieldSpec],
    restriction: Restriction,
    reps: usize,
    seed: u64,
    max_side: usize,
) -> Result<TightnessReport> {
    if specs.len() < 3 {
        return Err(invalid("tightness needs at least three values of N"));
    }
    if reps < 2 {
        return Err(invalid("tightness needs at least two replicates"));
    }
    let kind = specs[0].kind();
    let mut rows = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let m = sample_maxima(spec, restriction, reps, seed.wrapping_add(i as u64), max_side)?;
        let mu = stats::mean(&m);
        let centered: Vec<f64> = m.iter().map(|x| x - mu).collect();
        let s = stats::sorted(&centered);
        let q = |p| stats::quantile_sorted(&s, p);
        rows.push(TightnessRow {
            side: spec.side(),
            reps,
            mean: mu,
            iqr: q(0.75) - q(0.25),
            width_90: q(0.95) - q(0.05),
            unreliable: reps < MIN_RELIABLE_REPS,
        });
    }
    let ratio = |f: fn(&TightnessRow) -> f64| {
        let hi = rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let lo = rows.iter().map(f).fold(f64::INFINITY, f64::min);
        hi / lo
    };
    let width_ratio = ratio(|r| r.width_90);
    let iqr_ratio = ratio(|r| r.iqr);
    Ok(TightnessReport {
        kind,
        rows,
        width_ratio,
        iqr_ratio,
    })
}
