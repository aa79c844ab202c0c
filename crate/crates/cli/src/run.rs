use std::fmt;

use anyhow::{bail, Result};
use logfield_core::covariance::{
    brw_kernel, empirical_kernel, gff_log_deviation, kernel_agreement, mbrw_bound_slack,
    mbrw_kernel, mbrw_log_deviation, sudakov_fernique_run, tgff_log_deviation, truncation_scan,
    ComparisonReport, KernelOracle, Provenance,
};
use logfield_core::export::{
    write_field, write_kernel_offsets, write_kernel_pairs, write_results_csv, FieldMeta, ResultRow,
};
use logfield_core::extremes::{
    bridge_decay, count_barrier_events, fit_expected_max, lefttail_decay, max_stats,
    tightness_report, BridgeBarrier, Restriction,
};
use logfield_core::green::{default_killing, dirichlet_green_capped, torus_green, DENSE_GREEN_MAX_SIDE};
use logfield_core::lattice::points;
use logfield_core::{Error, FieldKind, FieldSpec, GridSpec, ScaleWindow};
use serde::Serialize;

use crate::args::*;

/// A parameter problem detected before any work starts.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// One output file.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| config("--seed is required for stochastic commands"))
}

fn require_reps(reps: usize, min: usize) -> Result<()> {
    if reps < min {
        return Err(config(format!("--reps must be at least {min}")));
    }
    Ok(())
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn table(name: &str, format: Format, rows: &[ResultRow], full: &impl Serialize) -> Result<Vec<Artifact>> {
    Ok(match format {
        Format::Csv => {
            let mut b = Vec::new();
            write_results_csv(&mut b, rows)?;
            vec![Artifact::new(format!("{name}.csv"), b)]
        }
        Format::Json => vec![Artifact::new(format!("{name}.json"), json(full)?)],
    })
}

fn window(n: u32, k_lo: Option<u32>, k_hi: Option<u32>) -> Result<ScaleWindow> {
    Ok(ScaleWindow::new(k_lo.unwrap_or(0), k_hi.unwrap_or(n), n)?)
}

fn n_from_side(side: usize) -> Result<u32> {
    Ok(GridSpec::from_side(side)?.n())
}

/// Resolves a field selection to a spec.
fn field_spec(sel: &FieldSel) -> Result<FieldSpec> {
    let side = match (sel.n, sel.side) {
        (Some(_), Some(_)) => return Err(config("give only one of --n and --N")),
        (Some(n), None) => {
            GridSpec::new(n)?;
            1usize << n
        }
        (None, Some(s)) => s,
        (None, None) => return Err(config("one of --n or --N is required")),
    };
    if sel.field != FieldArg::Mbrw && (sel.k_lo.is_some() || sel.k_hi.is_some()) {
        return Err(config("--k-lo/--k-hi apply to mbrw only"));
    }
    if sel.field != FieldArg::Tgff && sel.killing_q.is_some() {
        return Err(config("--killing-q applies to tgff only"));
    }
    Ok(match sel.field {
        FieldArg::Gff => FieldSpec::Gff { side },
        FieldArg::Tgff => FieldSpec::Tgff {
            side,
            killing: sel.killing_q.unwrap_or_else(|| default_killing(side)),
        },
        FieldArg::Brw => FieldSpec::Brw { n: n_from_side(side)? },
        FieldArg::Mbrw => {
            let n = n_from_side(side)?;
            FieldSpec::Mbrw {
                n,
                window: window(n, sel.k_lo, sel.k_hi)?,
            }
        }
    })
}

fn n_range(lo: Option<u32>, hi: Option<u32>, single: Option<u32>, default: (u32, u32)) -> Result<Vec<u32>> {
    let (a, b) = match (single, lo, hi) {
        (Some(n), None, None) => (n, n),
        (Some(_), _, _) => return Err(config("give either --n or --n-min/--n-max")),
        (None, lo, hi) => (lo.unwrap_or(default.0), hi.unwrap_or(default.1)),
    };
    if a > b {
        return Err(config(format!("--n-min {a} exceeds --n-max {b}")));
    }
    if b > GridSpec::MAX_SCALES {
        return Err(config(format!("n = {b} exceeds {}", GridSpec::MAX_SCALES)));
    }
    Ok((a..=b).collect())
}

fn check_side(side: usize, cap: usize) -> Result<()> {
    if side > cap {
        return Err(Error::ResourceCap {
            what: "requested grid",
            side,
            cap,
        }
        .into());
    }
    Ok(())
}

pub fn run(cmd: &Command) -> Result<Vec<Artifact>> {
    match cmd {
        Command::Green(a) => green(a),
        Command::Sample(a) => sample(a),
        Command::CovVerify(a) => cov_verify(a),
        Command::MaxStats(a) => max_stats_cmd(a),
        Command::Fit(a) => fit(a),
        Command::Tightness(a) => tightness(a),
        Command::Barrier(a) => barrier(a),
        Command::Bridge(a) => bridge(a),
        Command::LeftTail(a) => left_tail(a),
        Command::Replay(_) => bail!("replay must be resolved before dispatch"),
    }
}

fn green(a: &GreenArgs) -> Result<Vec<Artifact>> {
    let side = a.side;
    match a.kind {
        GreenKind::Dirichlet => {
            if a.killing_q.is_some() {
                return Err(config("--killing-q applies to the torus kernel only"));
            }
            let g = dirichlet_green_capped(side, DENSE_GREEN_MAX_SIDE.min(a.common.max_side))?;
            match a.common.format {
                Format::Csv => {
                    let mut b = Vec::new();
                    write_kernel_pairs(
                        &mut b,
                        points(side).flat_map(|x| points(side).map(move |y| (x, y))).map(|(x, y)| (x, y, g.get(x, y))),
                    )?;
                    Ok(vec![Artifact::new("green.csv", b)])
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        kind: &'static str,
                        #[serde(rename = "N")]
                        side: usize,
                        values: &'a [f64],
                    }
                    Ok(vec![Artifact::new(
                        "green.json",
                        json(&Out {
                            kind: "dirichlet",
                            side,
                            values: g.values(),
                        })?,
                    )])
                }
            }
        }
        GreenKind::Torus => {
            check_side(side, a.common.max_side)?;
            let q = a.killing_q.unwrap_or_else(|| default_killing(side));
            let g = torus_green(side, q)?;
            let s = side as i64;
            match a.common.format {
                Format::Csv => {
                    let mut b = Vec::new();
                    write_kernel_offsets(
                        &mut b,
                        (0..s).flat_map(|dx| (0..s).map(move |dy| (dx, dy))).map(|(dx, dy)| (dx, dy, g.at_offset(dx, dy))),
                    )?;
                    Ok(vec![Artifact::new("green.csv", b)])
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        kind: &'static str,
                        #[serde(rename = "N")]
                        side: usize,
                        killing: f64,
                        kernel: &'a [f64],
                    }
                    Ok(vec![Artifact::new(
                        "green.json",
                        json(&Out {
                            kind: "torus",
                            side,
                            killing: q,
                            kernel: g.kernel(),
                        })?,
                    )])
                }
            }
        }
    }
}

fn sample(a: &SampleArgs) -> Result<Vec<Artifact>> {
    let seed = require_seed(a.seed)?;
    let spec = field_spec(&a.field)?;
    let sampler = spec.sampler_capped(a.common.max_side)?;
    let s = sampler.sample_seeded(seed, 0);
    let meta = FieldMeta {
        kind: spec.kind().name().to_string(),
        n: match spec {
            FieldSpec::Brw { n } | FieldSpec::Mbrw { n, .. } => Some(n),
            _ => GridSpec::from_side(spec.side()).ok().map(|g| g.n()),
        },
        side: spec.side(),
        window: match spec {
            FieldSpec::Mbrw { window, .. } => Some(window),
            _ => None,
        },
        seed,
        killing: match spec {
            FieldSpec::Tgff { killing, .. } => Some(killing),
            _ => None,
        },
    };
    Ok(match a.common.format {
        Format::Csv => {
            let mut b = Vec::new();
            write_field(&mut b, &s)?;
            vec![Artifact::new("field.csv", b), Artifact::new("field.json", json(&meta)?)]
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                meta: &'a FieldMeta,
                values: &'a [f64],
            }
            vec![Artifact::new(
                "field.json",
                json(&Out {
                    meta: &meta,
                    values: &s.values,
                })?,
            )]
        }
    })
}

fn report_rows(rows: &mut Vec<ResultRow>, n: u32, r: &ComparisonReport) {
    let base = |stat: &str, v: f64| ResultRow::new(r.estimate_name.clone(), stat, v).n(n).side(r.side);
    rows.push(base("sup_deviation", r.sup_deviation));
    if let Some(d) = r.diagonal_deviation {
        rows.push(base("diagonal_deviation", d));
    }
    if let Some(d) = r.near_diagonal_sup {
        rows.push(base("near_diagonal_sup", d));
    }
    rows.push(base("pairs_checked", r.pairs_checked as f64));
}

fn cov_verify(a: &CovArgs) -> Result<Vec<Artifact>> {
    let cap = a.common.max_side;
    match a.report {
        Report::LogDistance => {
            let ns = n_range(a.n_min, a.n_max, a.n, (3, 6))?;
            let only = a.field;
            if matches!(only, Some(FieldArg::Brw)) {
                return Err(config("the log-distance report covers gff, tgff and mbrw"));
            }
            let want = |f: FieldArg| only.is_none() || only == Some(f);
            let mut rows = Vec::new();
            let mut reports = Vec::new();
            for n in ns {
                let grid = GridSpec::new(n)?;
                if want(FieldArg::Tgff) {
                    check_side(grid.side(), cap)?;
                    let q = a.killing_q.unwrap_or_else(|| default_killing(grid.side()));
                    let r = tgff_log_deviation(grid, q)?;
                    report_rows(&mut rows, n, &r);
                    reports.push(r);
                }
                if want(FieldArg::Mbrw) {
                    check_side(grid.side(), 2 * cap)?;
                    let r = mbrw_log_deviation(grid);
                    report_rows(&mut rows, n, &r);
                    let slack = mbrw_bound_slack(grid);
                    rows.push(ResultRow::new("mbrw-log-distance", "upper_slack", slack.upper).n(n).side(grid.side()));
                    rows.push(ResultRow::new("mbrw-log-distance", "lower_slack", slack.lower).n(n).side(grid.side()));
                    reports.push(r);
                }
                if want(FieldArg::Gff) {
                    check_side(grid.side(), cap)?;
                    let r = gff_log_deviation(grid)?;
                    report_rows(&mut rows, n, &r);
                    reports.push(r);
                }
            }
            table("log_distance", a.common.format, &rows, &reports)
        }
        Report::Empirical => {
            let seed = require_seed(a.seed)?;
            require_reps(a.reps, 2)?;
            let field = a.field.ok_or_else(|| config("--field is required for the empirical report"))?;
            let sel = FieldSel {
                field,
                n: a.n,
                side: a.side,
                k_lo: None,
                k_hi: None,
                killing_q: a.killing_q,
            };
            let spec = field_spec(&sel)?;
            let side = spec.side();
            check_side(side, DENSE_GREEN_MAX_SIDE.min(cap))?;
            let pts: Vec<_> = points(side).collect();
            let exact = match spec {
                FieldSpec::Gff { side } => {
                    let g = dirichlet_green_capped(side, DENSE_GREEN_MAX_SIDE)?;
                    KernelOracle::from_values(pts, Provenance::ExactSolve, g.values().to_vec())?
                }
                FieldSpec::Tgff { side, killing } => {
                    let g = torus_green(side, killing)?;
                    KernelOracle::from_fn(pts, Provenance::ExactSolve, |x, y| g.get(x, y))
                }
                FieldSpec::Brw { n } => brw_kernel(GridSpec::new(n)?),
                FieldSpec::Mbrw { n, window } => mbrw_kernel(GridSpec::new(n)?, window),
            };
            let sampler = spec.sampler_capped(cap)?;
            let emp = empirical_kernel(side * side, a.reps, seed, |rng, out| sampler.fill(rng, out));
            let agree = kernel_agreement(&exact, &emp, 3.0)?;
            let kind = spec.kind().name();
            let n = GridSpec::from_side(side).ok().map(|g| g.n());
            let row = |stat: &str, v: f64| {
                let r = ResultRow::new(kind, stat, v).side(side);
                match n {
                    Some(n) => r.n(n),
                    None => r,
                }
            };
            let rows = vec![
                row("entries", agree.entries as f64),
                row("fraction_within_3se", agree.fraction_within),
                row("max_abs_error", agree.max_abs_error),
                row("max_z", agree.max_z),
            ];
            table("empirical", a.common.format, &rows, &agree)
        }
        Report::SudakovFernique => {
            let seed = require_seed(a.seed)?;
            require_reps(a.reps, 2)?;
            let n = match (a.n, a.side) {
                (Some(n), None) => n,
                (None, Some(s)) => n_from_side(s)?,
                _ => return Err(config("give exactly one of --n or --N")),
            };
            let grid = GridSpec::new(n)?;
            check_side(4 * grid.side(), cap)?;
            let r = sudakov_fernique_run(grid, a.reps, seed)?;
            let e = r.comparison.emax.clone().expect("comparison estimates maxima");
            let row = |stat: &str, v: f64| ResultRow::new("sudakov-fernique", stat, v).n(n).side(grid.side());
            let rows = vec![
                row("c1", r.c1 as f64),
                row("pairs_checked", r.comparison.pairs_checked as f64),
                row("violations", r.comparison.violations.len() as f64),
                row("emax_a", e.mean_a).se(e.se_a),
                row("emax_b", e.mean_b).se(e.se_b),
                row("ordering_contradicted", e.ordering_contradicted as u8 as f64),
            ];
            table("sudakov_fernique", a.common.format, &rows, &r)
        }
        Report::Truncation => {
            let n = a.n.unwrap_or(6);
            let grid = GridSpec::new(n)?;
            check_side(grid.side(), cap)?;
            let r = truncation_scan(grid, a.k0_max.unwrap_or(6.min(n)))?;
            let row = |stat: &str, v: f64| ResultRow::new("mbrw-truncation", stat, v).n(n).side(grid.side());
            let rows = vec![
                row("k0_max", r.k0_max as f64),
                row("pairs_checked", r.pairs_checked as f64),
                row("monotone_violations", r.monotone_violations as f64),
                row("gap_violations", r.gap_violations as f64),
                row("min_gap_slack", r.min_gap_slack),
            ];
            table("truncation", a.common.format, &rows, &r)
        }
    }
}

fn restriction(r: RestrictArg) -> Restriction {
    match r {
        RestrictArg::Full => Restriction::Full,
        RestrictArg::Inner => Restriction::Inner,
    }
}

fn max_stats_cmd(a: &MaxStatsArgs) -> Result<Vec<Artifact>> {
    let seed = require_seed(a.seed)?;
    require_reps(a.reps, 100)?;
    let spec = field_spec(&a.field)?;
    let r = restriction(a.restrict);
    let s = max_stats(&spec, r, a.reps, seed, a.common.max_side)?;
    let n = GridSpec::from_side(s.side).ok().map(|g| g.n());
    let row = |stat: String, v: f64, se: f64| {
        let row = ResultRow::new(s.kind.name(), stat, v).side(s.side).restriction(r.name()).se(se);
        match n {
            Some(n) => row.n(n),
            None => row,
        }
    };
    let mut rows = vec![
        row("mean_max".into(), s.mean, s.mean_se),
        row("var_max".into(), s.variance, s.variance_se),
    ];
    for i in 0..5 {
        let pct = (s.quantile_levels[i] * 100.0).round() as u32;
        rows.push(row(format!("q{pct:02}"), s.quantiles[i], s.quantile_se[i]));
    }
    table("max_stats", a.common.format, &rows, &s)
}

fn fit(a: &FitArgs) -> Result<Vec<Artifact>> {
    let seed = require_seed(a.seed)?;
    require_reps(a.reps, 100)?;
    if a.n_min == 0 || a.n_min > a.n_max {
        return Err(config("need 1 <= --n-min <= --n-max"));
    }
    let ns: Vec<u32> = (a.n_min..=a.n_max).collect();
    if ns.len() < 4 {
        return Err(config("the fit needs at least four values of n"));
    }
    let kind: FieldKind = a.field.into();
    let f = fit_expected_max(kind, &ns, a.reps, seed, a.common.max_side)?;
    let mut rows = Vec::new();
    for (i, &n) in f.ns.iter().enumerate() {
        rows.push(ResultRow::new(kind.name(), "mean_max", f.means[i]).n(n).side(1 << n).restriction("full").se(f.ses[i]));
        rows.push(ResultRow::new(kind.name(), "residual", f.residuals[i]).n(n).side(1 << n).restriction("full"));
    }
    rows.push(ResultRow::new(kind.name(), "c1", f.c1).se(f.c1_half_width / 1.96));
    rows.push(ResultRow::new(kind.name(), "c2", f.c2).se(f.c2_half_width / 1.96));
    rows.push(ResultRow::new(kind.name(), "c0", f.c0));
    table("fit", a.common.format, &rows, &f)
}

fn tightness(a: &TightnessArgs) -> Result<Vec<Artifact>> {
    let seed = require_seed(a.seed)?;
    require_reps(a.reps, 2)?;
    if a.sides.len() < 3 {
        return Err(config("--N-list needs at least three values"));
    }
    let specs = a
        .sides
        .iter()
        .map(|&side| {
            field_spec(&FieldSel {
                field: a.field,
                n: None,
                side: Some(side),
                k_lo: a.k_lo,
                k_hi: a.k_hi,
                killing_q: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let r = restriction(a.restrict);
    let t = tightness_report(&specs, r, a.reps, seed, a.common.max_side)?;
    let kind = t.kind.name();
    let mut rows = Vec::new();
    for row in &t.rows {
        let n = GridSpec::from_side(row.side).ok().map(|g| g.n());
        for (stat, v) in [("mean_max", row.mean), ("iqr", row.iqr), ("width_90", row.width_90)] {
            let mut rr = ResultRow::new(kind, stat, v).side(row.side).restriction(r.name());
            if let Some(n) = n {
                rr = rr.n(n);
            }
            rows.push(rr);
        }
    }
    rows.push(ResultRow::new(kind, "width_ratio", t.width_ratio).restriction(r.name()));
    rows.push(ResultRow::new(kind, "iqr_ratio", t.iqr_ratio).restriction(r.name()));
    table("tightness", a.common.format, &rows, &t)
}

fn barrier(a: &BarrierArgs) -> Result<Vec<Artifact>> {
    let seed = require_seed(a.seed)?;
    require_reps(a.reps, 2)?;
    let ns = n_range(a.n_min, a.n_max, a.n, (5, 8))?;
    if ns[0] < 2 {
        return Err(config("barrier events need n >= 2"));
    }
    if !a.c5.is_finite() {
        return Err(config("--c5 must be finite"));
    }
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for n in ns {
        check_side(1 << n, 2 * a.common.max_side)?;
        let c = count_barrier_events(n, a.c5, a.reps, seed.wrapping_add(n as u64))?;
        let row = |stat: &str, v: f64| ResultRow::new("mbrw", stat, v).n(n).side(1 << n).restriction("inner");
        rows.extend([
            row("a_n", c.spec.a_n),
            row("mean_h", c.mean_h).se(c.mean_h_se),
            row("mean_h2", c.mean_h2).se(c.mean_h2_se),
            row("p_h_pos", c.p_h_pos).se(c.p_h_pos_se),
            row("second_moment_bound", c.second_moment_bound).se(c.second_moment_bound_se),
            row("moment_ratio", c.moment_ratio),
            row("p_reach", c.p_reach).se(c.p_reach_se),
            row("implication_violations", c.implication_violations as f64),
            row("chain_holds", c.chain_holds() as u8 as f64),
        ]);
        all.push(c);
    }
    table("barrier", a.common.format, &rows, &all)
}

fn bridge(a: &BridgeArgs) -> Result<Vec<Artifact>> {
    let seed = require_seed(a.seed)?;
    require_reps(a.reps, 2)?;
    if a.ns.is_empty() || a.ns.iter().any(|&n| n < 2) {
        return Err(config("--n-list entries must be at least 2"));
    }
    let b = match a.barrier {
        BarrierShape::Tent => BridgeBarrier::Tent { c5: a.c5 },
        BarrierShape::Constant => BridgeBarrier::Constant { c: a.c },
    };
    let d = bridge_decay(&a.ns, b, a.reps, seed)?;
    let kind = match a.barrier {
        BarrierShape::Tent => "bridge-tent",
        BarrierShape::Constant => "bridge-constant",
    };
    let mut rows = Vec::new();
    for e in &d.estimates {
        rows.push(ResultRow::new(kind, "p_below", e.p).n(e.n).se(e.se));
        if let Some(r) = e.reference {
            rows.push(ResultRow::new(kind, "continuum_reference", r).n(e.n));
        }
    }
    rows.push(ResultRow::new(kind, "decay_slope", d.slope.unwrap_or(f64::NAN)));
    rows.push(ResultRow::new(kind, "fitted_points", d.fitted_points as f64));
    table("bridge", a.common.format, &rows, &d)
}

fn left_tail(a: &LeftTailArgs) -> Result<Vec<Artifact>> {
    let seed = require_seed(a.seed)?;
    require_reps(a.reps, 2)?;
    if a.n < 2 {
        return Err(config("left tail needs n >= 2"));
    }
    check_side(1 << a.n, 2 * a.common.max_side)?;
    let rows_core = lefttail_decay(a.n, a.reps, &a.alphas, seed)?;
    let rows: Vec<ResultRow> = rows_core
        .iter()
        .map(|r| {
            ResultRow::new("mbrw", format!("p_le_an_minus_{}", r.alpha), r.p)
                .n(a.n)
                .side(1 << a.n)
                .restriction("inner")
                .se(r.se)
        })
        .collect();
    table("left_tail", a.common.format, &rows, &rows_core)
}
