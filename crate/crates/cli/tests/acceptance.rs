//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use logfield_core::covariance::{
    brw_kernel, empirical_kernel, gff_log_deviation, kernel_agreement, mbrw_bound_slack,
    mbrw_kernel, mbrw_log_deviation, sudakov_fernique_run, tgff_log_deviation, truncation_scan,
    KernelOracle, Provenance,
};
use logfield_core::extremes::{
    bridge_barrier_prob, bridge_decay, count_barrier_events, fit_expected_max, tightness_report,
    BridgeBarrier, Restriction,
};
use logfield_core::green::{default_killing, dirichlet_green, torus_green};
use logfield_core::lattice::points;
use logfield_core::stats::linear_fit;
use logfield_core::{FieldKind, FieldSpec, GridPoint, GridSpec, ScaleWindow, DEFAULT_MAX_SIDE};
use nalgebra::DMatrix;

type Criterion = fn(&mut Suite);

struct Suite {
    failed: usize,
    passed: usize,
}

impl Suite {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{} {id:<4} {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, detail: String) {
        println!("INFO {id:<4} {detail}");
    }
}

/// `(I - P)^{-1}` on the interior of `V_N` by dense inversion.
fn dense_dirichlet_inverse(side: usize) -> (Vec<GridPoint>, DMatrix<f64>) {
    let interior: Vec<GridPoint> = points(side).filter(|p| p.is_interior(side)).collect();
    let m = interior.len();
    let pos = |p: GridPoint| interior.iter().position(|q| *q == p);
    let mut a = DMatrix::<f64>::identity(m, m);
    for (i, &x) in interior.iter().enumerate() {
        for (d1, d2) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if let Some(j) = pos(x.offset(d1, d2)) {
                a[(i, j)] -= 0.25;
            }
        }
    }
    (interior, a.try_inverse().expect("I - P is invertible"))
}

fn criterion_1(s: &mut Suite) {
    let g3 = dirichlet_green(3).unwrap();
    let c = g3.get(GridPoint::new(1, 1), GridPoint::new(1, 1));
    s.check("1a", c == 1.0, format!("G_3((1,1),(1,1)) = {c}"));
    let mut worst: f64 = 0.0;
    for side in 4..=8 {
        let g = dirichlet_green(side).unwrap();
        let (pts, inv) = dense_dirichlet_inverse(side);
        for (i, &x) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                let e = inv[(i, j)];
                worst = worst.max((g.get(x, y) - e).abs() / e.abs());
            }
        }
    }
    s.check("1b", worst <= 1e-10, format!("N=4..8 max relative error vs dense inverse {worst:.3e} (<= 1e-10)"));
}

fn criterion_2(s: &mut Suite) {
    let sides = [16usize, 32, 64, 128, 256];
    let x: Vec<f64> = sides.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = sides
        .iter()
        .map(|&n| torus_green(n, default_killing(n)).unwrap().diagonal())
        .collect();
    let (slope, _) = linear_fit(&x, &y);
    let target = 2.0 / std::f64::consts::PI;
    s.check(
        "2",
        (slope - target).abs() <= 0.1 * target,
        format!("slope of torus diagonal vs log N = {slope:.5}, target {target:.5} +/- 10%"),
    );
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn criterion_3(s: &mut Suite) {
    let mut m = Vec::new();
    let mut slack_ok = true;
    let mut worst_slack = f64::NEG_INFINITY;
    for n in 3..=8 {
        let g = GridSpec::new(n).unwrap();
        m.push(mbrw_log_deviation(g).sup_deviation);
        let sl = mbrw_bound_slack(g);
        worst_slack = worst_slack.max(sl.upper);
        slack_ok &= sl.upper <= 3.0;
    }
    let r = rel_change(m[m.len() - 2], m[m.len() - 1]);
    s.check("3a", r < 0.25, format!("MBRW sup deviation N=8..256 {m:.4?}; change between N=128,256 {:.1}% (< 25%)", 100.0 * r));
    s.check("3b", slack_ok, format!("MBRW upper-bound slack max over pairs and N=8..256 = {worst_slack:.4} (<= 3)"));
    let mut t = Vec::new();
    for n in 3..=7 {
        let g = GridSpec::new(n).unwrap();
        t.push(tgff_log_deviation(g, default_killing(g.side())).unwrap().sup_deviation);
    }
    let r = rel_change(t[t.len() - 2], t[t.len() - 1]);
    s.check("3c", r < 0.25, format!("TGFF sup deviation N=8..128 {t:.4?}; change between N=64,128 {:.1}% (< 25%)", 100.0 * r));
    let mut gf = Vec::new();
    let mut near = Vec::new();
    for n in 3..=8 {
        let rep = gff_log_deviation(GridSpec::new(n).unwrap()).unwrap();
        gf.push(rep.sup_deviation);
        near.push(rep.near_diagonal_sup.unwrap());
    }
    let r = rel_change(gf[gf.len() - 2], gf[gf.len() - 1]);
    s.check("3d", r < 0.25, format!("4N-box GFF sup deviation N=8..256 {gf:.4?}; change between N=128,256 {:.1}% (< 25%)", 100.0 * r));
    s.info("3d", format!("4N-box GFF sup over |x-y| <= 1: {near:.4?}"));
}

fn criterion_4(s: &mut Suite) {
    let side = 16;
    let grid = GridSpec::from_side(side).unwrap();
    let reps = 10_000;
    let pts: Vec<GridPoint> = points(side).collect();
    let cases: Vec<(FieldSpec, KernelOracle)> = vec![
        (FieldSpec::Gff { side }, {
            let g = dirichlet_green(side).unwrap();
            KernelOracle::from_values(pts.clone(), Provenance::ExactSolve, g.values().to_vec()).unwrap()
        }),
        (
            FieldSpec::Tgff {
                side,
                killing: default_killing(side),
            },
            {
                let g = torus_green(side, default_killing(side)).unwrap();
                KernelOracle::from_fn(pts.clone(), Provenance::ExactSolve, |x, y| g.get(x, y))
            },
        ),
        (FieldSpec::Brw { n: grid.n() }, brw_kernel(grid)),
        (
            FieldSpec::Mbrw {
                n: grid.n(),
                window: ScaleWindow::full(grid.n()),
            },
            mbrw_kernel(grid, ScaleWindow::full(grid.n())),
        ),
    ];
    for (i, (spec, exact)) in cases.iter().enumerate() {
        let sampler = spec.sampler().unwrap();
        let emp = empirical_kernel(side * side, reps, 400 + i as u64, |rng, out| sampler.fill(rng, out));
        let a = kernel_agreement(exact, &emp, 3.0).unwrap();
        s.check(
            &format!("4{}", ['a', 'b', 'c', 'd'][i]),
            a.fraction_within >= 0.99,
            format!(
                "{} N={side} reps={reps}: {:.4} of {} entries within 3 SE (>= 0.99), max |z| {:.2}",
                spec.kind(),
                a.fraction_within,
                a.entries,
                a.max_z
            ),
        );
    }
}

fn criterion_5(s: &mut Suite) {
    let r = truncation_scan(GridSpec::new(6).unwrap(), 6).unwrap();
    s.check(
        "5",
        r.monotone_violations == 0 && r.gap_violations == 0,
        format!(
            "N=64 k0=0..6 over {} pairs: {} monotonicity and {} gap violations (0 allowed), min gap slack {:.4}",
            r.pairs_checked, r.monotone_violations, r.gap_violations, r.min_gap_slack
        ),
    );
}

fn criterion_6(s: &mut Suite) {
    let ns: Vec<u32> = (4..=9).collect();
    let f = fit_expected_max(FieldKind::Gff, &ns, 2000, 600, DEFAULT_MAX_SIDE).unwrap();
    let t = 1.10607;
    s.check(
        "6a",
        (f.c1 - t).abs() <= 0.1 * t && f.c2 > 0.0,
        format!("GFF n=4..9 reps=2000: c1 = {:.4} +/- {:.4} (target {t} +/- 10%), c2 = {:.4} (> 0)", f.c1, f.c1_half_width, f.c2),
    );
    let ns: Vec<u32> = (4..=10).collect();
    let f = fit_expected_max(FieldKind::Brw, &ns, 2000, 610, DEFAULT_MAX_SIDE).unwrap();
    let t = 1.66511;
    s.check(
        "6b",
        (f.c1 - t).abs() <= 0.1 * t && f.c2 > 0.0,
        format!("BRW n=4..10 reps=2000: c1 = {:.4} +/- {:.4} (target {t} +/- 10%), c2 = {:.4} (> 0)", f.c1, f.c1_half_width, f.c2),
    );
}

fn criterion_7(s: &mut Suite) {
    let sides = [32usize, 64, 128, 256];
    let reps = 2000;
    let gff: Vec<FieldSpec> = sides.iter().map(|&side| FieldSpec::Gff { side }).collect();
    let t = tightness_report(&gff, Restriction::Full, reps, 700, DEFAULT_MAX_SIDE).unwrap();
    let w: Vec<f64> = t.rows.iter().map(|r| r.width_90).collect();
    s.check("7a", t.width_ratio <= 1.5, format!("GFF N=32..256 5-95% widths {w:.3?}, ratio {:.3} (<= 1.5)", t.width_ratio));
    let iid: Vec<FieldSpec> = sides
        .iter()
        .map(|&side| {
            let n = side.trailing_zeros();
            FieldSpec::Mbrw {
                n,
                window: ScaleWindow::new(0, 0, n).unwrap(),
            }
        })
        .collect();
    let t = tightness_report(&iid, Restriction::Full, reps, 710, DEFAULT_MAX_SIDE).unwrap();
    let w: Vec<f64> = t.rows.iter().map(|r| r.width_90).collect();
    s.check("7b", t.width_ratio > 1.5, format!("i.i.d. control N=32..256 5-95% widths {w:.3?}, ratio {:.3} (> 1.5)", t.width_ratio));
}

fn criterion_8(s: &mut Suite) {
    for (tag, n) in [("8a", 4u32), ("8b", 5)] {
        let r = sudakov_fernique_run(GridSpec::new(n).unwrap(), 4000, 800 + n as u64).unwrap();
        let e = r.comparison.emax.as_ref().unwrap();
        s.check(
            tag,
            r.comparison.violations.is_empty() && !e.ordering_contradicted,
            format!(
                "N={}: C1 = {}, {} increment violations over {} pairs, E max A = {:.3} +/- {:.3} vs E max B = {:.3} +/- {:.3}",
                r.side,
                r.c1,
                r.comparison.violations.len(),
                r.comparison.pairs_checked,
                e.mean_a,
                e.se_a,
                e.mean_b,
                e.se_b
            ),
        );
    }
}

fn criterion_9(s: &mut Suite) {
    let reps = 1000;
    let mut mean_ok = true;
    let mut ratio_ok = true;
    let mut chain_ok = true;
    let mut viol = 0;
    let mut lines = Vec::new();
    for n in 5..=8 {
        let c = count_barrier_events(n, 10.0, reps, 900 + n as u64).unwrap();
        mean_ok &= c.mean_h >= 0.05;
        ratio_ok &= c.moment_ratio <= 50.0;
        chain_ok &= c.p_reach >= c.second_moment_bound - 3.0 * c.second_moment_bound_se.hypot(c.p_reach_se);
        viol += c.implication_violations;
        lines.push(format!(
            "n={n}: Eh={:.4} Eh2={:.4} ratio={:.3} P(h>=1)={:.4} bound={:.4} P(S*>=A_n)={:.4}",
            c.mean_h, c.mean_h2, c.moment_ratio, c.p_h_pos, c.second_moment_bound, c.p_reach
        ));
    }
    for l in &lines {
        s.info("9", format!("c5=10 {l}"));
    }
    s.check("9a", mean_ok, "c5=10 n=5..8 reps=1000: Eh >= 0.05 for every n".into());
    s.check("9b", ratio_ok, "c5=10 n=5..8: Eh2/(Eh)^2 <= 50 for every n".into());
    s.check("9c", chain_ok, "c5=10 n=5..8: P(S* >= A_n) >= (Eh)^2/Eh2 - 3 SE".into());
    s.check("9d", viol == 0, format!("c5=10 n=5..8: {viol} replicates with h >= 1 but S* < A_n (0 allowed)"));
    for c5 in [5.0, 20.0] {
        for n in [5u32, 8] {
            let c = count_barrier_events(n, c5, reps, 950 + n as u64).unwrap();
            s.info(
                "9",
                format!(
                    "c5={c5} n={n}: Eh={:.4} ratio={:.3} P(h>=1)={:.4} P(S*>=A_n)={:.4}",
                    c.mean_h, c.moment_ratio, c.p_h_pos, c.p_reach
                ),
            );
        }
    }
}

fn criterion_10(s: &mut Suite) {
    for (tag, n) in [("10a", 64u32), ("10b", 256)] {
        let e = bridge_barrier_prob(n, BridgeBarrier::Constant { c: 2.0 }, 20_000, 1000 + n as u64).unwrap();
        let r = 1.0 - (-8.0 / n as f64).exp();
        let tol = 3.0 * e.se + 0.02;
        s.check(
            tag,
            (e.p - r).abs() <= tol,
            format!("constant barrier c=2 n={n}: P = {:.4} +/- {:.4}, closed form {r:.4}, |diff| {:.4} (<= {tol:.4})", e.p, e.se, (e.p - r).abs()),
        );
    }
    let ns = [8u32, 16, 32, 64, 128];
    let d = bridge_decay(&ns, BridgeBarrier::Tent { c5: 10.0 }, 20_000, 1100).unwrap();
    let ps: Vec<f64> = d.estimates.iter().map(|e| e.p).collect();
    let pass = matches!(d.slope, Some(sl) if (sl + 1.0).abs() <= 0.15);
    s.check(
        "10c",
        pass,
        format!("tent barrier c5=10 n=8..128: P = {ps:.4?}, slope {:?} over {} positive points (target -1 +/- 0.15)", d.slope, d.fitted_points),
    );
}

fn cli(args: &[&str], out: &Path, workers: usize) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_logfield"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .output()
        .expect("running the CLI")
}

fn criterion_11(s: &mut Suite) {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str], &str); 3] = [
        ("11a", &["barrier", "--n", "4", "--c5", "10", "--reps", "500", "--seed", "1"], "barrier.csv"),
        ("11b", &["max-stats", "--field", "mbrw", "--n", "5", "--reps", "300", "--seed", "5"], "max_stats.csv"),
        ("11c", &["sample", "--field", "tgff", "--n", "5", "--seed", "9"], "field.csv"),
    ];
    for (tag, args, file) in runs {
        let first = dir.path().join(format!("{tag}-w1"));
        let second = dir.path().join(format!("{tag}-w8"));
        let o1 = cli(args, &first, 1);
        let manifest = first.join("manifest.json");
        let o2 = cli(&["replay", "--manifest", manifest.to_str().unwrap()], &second, 8);
        let ok_run = o1.status.success() && o2.status.success();
        let a = std::fs::read(first.join(file)).unwrap_or_default();
        let b = std::fs::read(second.join(file)).unwrap_or_else(|_| vec![1]);
        s.check(
            tag,
            ok_run && !a.is_empty() && a == b,
            format!("`{}` with 1 worker vs manifest replay with 8 workers: {file} byte-identical", args.join(" ")),
        );
    }
}

fn main() {
    let mut suite = Suite { failed: 0, passed: 0 };
    let all: [(&str, Criterion); 11] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
        ("11", criterion_11),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    for (id, f) in all {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let t = Instant::now();
        f(&mut suite);
        println!("TIME {id:<4} {:.1}s", t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {} failed", suite.passed, suite.failed);
    if suite.failed > 0 {
        std::process::exit(1);
    }
}
