//! Green functions of the simple random walk: killed on the boundary of a
//! box (Dirichlet) and on the torus with geometric killing.

use rand::Rng;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::GridPoint;
use crate::linalg::{fourier_cosines, BandedCholesky, Dst1, Fft2};
use crate::rng::replicate_fold;

/// Largest side for which the full `N² × N²` Dirichlet kernel is materialized.
pub const DENSE_GREEN_MAX_SIDE: usize = 64;

/// Factorization of `I - P` restricted to the interior of `V_N`, where `P` is
/// the transition matrix of the simple random walk.
///
/// Interior points are numbered row-major, so the operator is a band matrix
/// of half-bandwidth `N - 2`.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    side: usize,
    chol: Option<BandedCholesky>,
}

impl DirichletOperator {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(invalid(format!("Dirichlet box needs side >= 2, got {side}")));
        }
        let m = side - 2;
        let chol = if m == 0 {
            None
        } else {
            Some(BandedCholesky::factor(m * m, m, |i, j| {
                if i == j {
                    1.0
                } else if (i - j == 1 && i % m != 0) || i - j == m {
                    -0.25
                } else {
                    0.0
                }
            })?)
        };
        Ok(Self { side, chol })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of interior points, `(N-2)²`.
    pub fn interior_len(&self) -> usize {
        let m = self.side - 2;
        m * m
    }

    pub fn factor(&self) -> Option<&BandedCholesky> {
        self.chol.as_ref()
    }

    pub fn interior_index(&self, p: GridPoint) -> Option<usize> {
        p.is_interior(self.side)
            .then(|| (p.x1 as usize - 1) * (self.side - 2) + p.x2 as usize - 1)
    }

    /// Spreads an interior vector onto `V_N`, zero on the boundary.
    pub fn embed(&self, interior: &[f64]) -> Vec<f64> {
        let n = self.side;
        let m = n - 2;
        let mut out = vec![0.0; n * n];
        for a in 0..m {
            out[(a + 1) * n + 1..(a + 1) * n + 1 + m].copy_from_slice(&interior[a * m..(a + 1) * m]);
        }
        out
    }

    /// The column `G_N(·, y)` on `V_N` (row-major). Zero when `y` is on the boundary.
    pub fn column(&self, y: GridPoint) -> Result<Vec<f64>> {
        if !y.in_box(self.side) {
            return Err(invalid(format!("point {y:?} outside V_{}", self.side)));
        }
        let (Some(chol), Some(j)) = (&self.chol, self.interior_index(y)) else {
            return Ok(vec![0.0; self.side * self.side]);
        };
        let mut rhs = vec![0.0; chol.dim()];
        rhs[j] = 1.0;
        chol.solve(&mut rhs);
        Ok(self.embed(&rhs))
    }
}

/// The full Dirichlet Green kernel `G_N` on `V_N × V_N`.
#[derive(Debug, Clone, Serialize)]
pub struct DirichletGreen {
    side: usize,
    values: Vec<f64>,
}

impl DirichletGreen {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, x: GridPoint, y: GridPoint) -> f64 {
        let s = self.side * self.side;
        self.values[x.index(self.side) * s + y.index(self.side)]
    }

    /// Entry by row-major site indices.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.side * self.side + j]
    }

    /// Row-major `N² × N²` matrix.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Exact `G_N` via the band factorization, subject to [`DENSE_GREEN_MAX_SIDE`].
pub fn dirichlet_green(side: usize) -> Result<DirichletGreen> {
    dirichlet_green_capped(side, DENSE_GREEN_MAX_SIDE)
}

pub fn dirichlet_green_capped(side: usize, cap: usize) -> Result<DirichletGreen> {
    if side > cap {
        return Err(Error::ResourceCap {
            what: "dense Dirichlet Green kernel",
            side,
            cap,
        });
    }
    let op = DirichletOperator::new(side)?;
    let s = side * side;
    let mut values = vec![0.0; s * s];
    for y in crate::lattice::points(side) {
        if !y.is_interior(side) {
            continue;
        }
        let col = op.column(y)?;
        let j = y.index(side);
        for (i, v) in col.into_iter().enumerate() {
            values[i * s + j] = v;
        }
    }
    Ok(DirichletGreen { side, values })
}

/// Spectral representation of the Dirichlet Green function on `V_N`:
/// `G(x,y) = Σ φ_jk(x) φ_jk(y) / (1 - (cos(πj/(N-1)) + cos(πk/(N-1)))/2)`
/// with the orthonormal sine basis of the interior.
pub struct DirichletSpectral {
    side: usize,
    dst: Dst1,
    eig: Vec<f64>,
}

impl DirichletSpectral {
    pub fn new(side: usize) -> Result<Self> {
        if side < 3 {
            return Err(invalid(format!("spectral Dirichlet needs side >= 3, got {side}")));
        }
        let m = side - 2;
        let big = (side - 1) as f64;
        let c: Vec<f64> = (1..=m)
            .map(|j| (std::f64::consts::PI * j as f64 / big).cos())
            .collect();
        let mut eig = Vec::with_capacity(m * m);
        for a in &c {
            for b in &c {
                eig.push(1.0 - 0.5 * (a + b));
            }
        }
        Ok(Self {
            side,
            dst: Dst1::new(m),
            eig,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Eigenvalues of `I - P` on the interior, row-major in the mode indices.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    pub fn dst(&self) -> &Dst1 {
        &self.dst
    }

    /// The column `G_N(·, y)` on `V_N` (row-major).
    pub fn column(&self, y: GridPoint) -> Result<Vec<f64>> {
        let n = self.side;
        if !y.in_box(n) {
            return Err(invalid(format!("point {y:?} outside V_{n}")));
        }
        if !y.is_interior(n) {
            return Ok(vec![0.0; n * n]);
        }
        let m = n - 2;
        let py: Vec<f64> = (1..=m).map(|j| self.dst.basis(j, y.x1 as usize)).collect();
        let qy: Vec<f64> = (1..=m).map(|k| self.dst.basis(k, y.x2 as usize)).collect();
        let mut c = vec![0.0; m * m];
        for j in 0..m {
            for k in 0..m {
                c[j * m + k] = py[j] * qy[k] / self.eig[j * m + k];
            }
        }
        self.dst.transform2(&mut c);
        let mut out = vec![0.0; n * n];
        for a in 0..m {
            out[(a + 1) * n + 1..(a + 1) * n + 1 + m].copy_from_slice(&c[a * m..(a + 1) * m]);
        }
        Ok(out)
    }
}

/// Default per-step survival probability `q = N²/(N²+1)`, i.e. a geometric
/// number of steps with mean `N²`.
pub fn default_killing(side: usize) -> f64 {
    let s2 = (side * side) as f64;
    s2 / (s2 + 1.0)
}

/// Green function of the simple random walk on the torus of side `N`, killed
/// after a geometric number of steps with survival probability `q` per step.
#[derive(Debug, Clone, Serialize)]
pub struct TorusGreen {
    side: usize,
    killing: f64,
    /// Kernel by offset `(dx, dy)`, row-major over `[0, N)²`.
    kernel: Vec<f64>,
    /// `1 / (1 - q λ(θ))` at the Fourier frequencies, row-major.
    spectrum: Vec<f64>,
}

impl TorusGreen {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn killing(&self) -> f64 {
        self.killing
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Kernel at offset `(dx, dy)` taken modulo `N`.
    pub fn at_offset(&self, dx: i64, dy: i64) -> f64 {
        let s = self.side as i64;
        self.kernel[(dx.rem_euclid(s) * s + dy.rem_euclid(s)) as usize]
    }

    pub fn get(&self, x: GridPoint, y: GridPoint) -> f64 {
        self.at_offset(x.x1 - y.x1, x.x2 - y.x2)
    }

    /// `Ḡ(x, x)`, the same at every site.
    pub fn diagonal(&self) -> f64 {
        self.kernel[0]
    }
}

pub fn torus_green(side: usize, killing: f64) -> Result<TorusGreen> {
    if side < 1 {
        return Err(invalid("torus side must be positive"));
    }
    if !(killing > 0.0 && killing < 1.0) {
        return Err(invalid(format!("killing survival q = {killing} outside (0, 1)")));
    }
    let n = side;
    let c = fourier_cosines(n);
    let mut spectrum = Vec::with_capacity(n * n);
    for a in &c {
        for b in &c {
            spectrum.push(1.0 / (1.0 - killing * 0.5 * (a + b)));
        }
    }
    let mut buf: Vec<Complex64> = spectrum.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    Fft2::new(n, true).process(&mut buf);
    let norm = 1.0 / (n * n) as f64;
    let kernel = buf.iter().map(|z| z.re * norm).collect();
    Ok(TorusGreen {
        side,
        killing,
        kernel,
        spectrum,
    })
}

/// Probability that the walk from `x` hits `y` before leaving the interior of
/// `V_M`: `G_M(x, y) / G_M(y, y)`.
pub fn hitting_prob(x: GridPoint, y: GridPoint, side: usize) -> Result<f64> {
    hitting_prob_with(&DirichletOperator::new(side)?, x, y)
}

pub fn hitting_prob_with(op: &DirichletOperator, x: GridPoint, y: GridPoint) -> Result<f64> {
    let side = op.side();
    if !x.in_box(side) || !y.in_box(side) {
        return Err(invalid("points must lie in V_M"));
    }
    if !y.is_interior(side) {
        return Err(Error::BoundaryTarget(y.x1, y.x2));
    }
    let col = op.column(y)?;
    Ok(col[x.index(side)] / col[y.index(side)])
}

/// Where the oracle walk lives and how it is killed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WalkDomain {
    /// Killed on reaching `∂V_N`; visits to the boundary are not counted.
    Box { side: usize },
    /// Torus of side `N`, surviving each step with probability `q`.
    Torus { side: usize, killing: f64 },
}

impl WalkDomain {
    pub fn side(&self) -> usize {
        match *self {
            WalkDomain::Box { side } | WalkDomain::Torus { side, .. } => side,
        }
    }
}

/// Empirical visit counts of a Monte Carlo walk.
#[derive(Debug, Clone, Serialize)]
pub struct WalkOracleResult {
    pub side: usize,
    pub reps: usize,
    /// Mean visits per site, row-major.
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    /// Mean and standard error of the total number of visits.
    pub total_mean: f64,
    pub total_se: f64,
}

struct WalkAcc {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    tot: f64,
    totsq: f64,
    counts: Vec<u32>,
    touched: Vec<usize>,
}

/// Monte Carlo estimate of the Green function `E^start(Σ_m 1{w_m = y})`.
pub fn mc_walk_oracle(
    start: GridPoint,
    domain: WalkDomain,
    reps: usize,
    seed: u64,
) -> Result<WalkOracleResult> {
    if reps == 0 {
        return Err(invalid("reps must be >= 1"));
    }
    let side = domain.side();
    if !start.in_box(side) {
        return Err(invalid("start outside the domain"));
    }
    if let WalkDomain::Torus { killing, .. } = domain {
        if !(killing > 0.0 && killing < 1.0) {
            return Err(invalid("killing survival q outside (0, 1)"));
        }
    }
    let s2 = side * side;
    const STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let acc = replicate_fold(
        reps,
        seed,
        || WalkAcc {
            sum: vec![0.0; s2],
            sumsq: vec![0.0; s2],
            tot: 0.0,
            totsq: 0.0,
            counts: vec![0; s2],
            touched: Vec::new(),
        },
        |acc, rng, _| {
            let visit = |acc: &mut WalkAcc, p: GridPoint| {
                let i = p.index(side);
                if acc.counts[i] == 0 {
                    acc.touched.push(i);
                }
                acc.counts[i] += 1;
            };
            let mut pos = start;
            match domain {
                WalkDomain::Box { .. } => {
                    while pos.is_interior(side) {
                        visit(acc, pos);
                        let (a, b) = STEPS[rng.random_range(0..4)];
                        pos = pos.offset(a, b);
                    }
                }
                WalkDomain::Torus { killing, .. } => loop {
                    visit(acc, pos);
                    if !rng.random_bool(killing) {
                        break;
                    }
                    let (a, b) = STEPS[rng.random_range(0..4)];
                    pos = pos.offset(a, b).wrapped(side);
                },
            }
            let mut total = 0.0;
            for &i in &acc.touched {
                let c = acc.counts[i] as f64;
                acc.sum[i] += c;
                acc.sumsq[i] += c * c;
                total += c;
                acc.counts[i] = 0;
            }
            acc.touched.clear();
            acc.tot += total;
            acc.totsq += total * total;
        },
        |a, b| {
            for i in 0..s2 {
                a.sum[i] += b.sum[i];
                a.sumsq[i] += b.sumsq[i];
            }
            a.tot += b.tot;
            a.totsq += b.totsq;
        },
    );
    let r = reps as f64;
    let se_of = |sum: f64, sumsq: f64| {
        if reps < 2 {
            return 0.0;
        }
        let m = sum / r;
        let var = ((sumsq - r * m * m) / (r - 1.0)).max(0.0);
        (var / r).sqrt()
    };
    Ok(WalkOracleResult {
        side,
        reps,
        mean: acc.sum.iter().map(|s| s / r).collect(),
        se: acc.sum.iter().zip(&acc.sumsq).map(|(&s, &q)| se_of(s, q)).collect(),
        total_mean: acc.tot / r,
        total_se: se_of(acc.tot, acc.totsq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::points;

    fn p(a: i64, b: i64) -> GridPoint {
        GridPoint::new(a, b)
    }

    #[test]
    fn n3_single_visit() {
        let g = dirichlet_green(3).unwrap();
        assert_eq!(g.get(p(1, 1), p(1, 1)), 1.0);
    }

    #[test]
    fn boundary_columns_vanish() {
        let g = dirichlet_green(6).unwrap();
        for x in points(6) {
            for y in points(6) {
                if y.on_boundary(6) || x.on_boundary(6) {
                    assert_eq!(g.get(x, y), 0.0);
                }
            }
        }
    }

    #[test]
    fn symmetric_and_diagonal_at_least_one() {
        let g = dirichlet_green(7).unwrap();
        for x in points(7) {
            for y in points(7) {
                assert!((g.get(x, y) - g.get(y, x)).abs() < 1e-12);
            }
            if x.is_interior(7) {
                assert!(g.get(x, x) >= 1.0);
            }
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        assert!(matches!(
            dirichlet_green_capped(20, 16),
            Err(Error::ResourceCap { side: 20, cap: 16, .. })
        ));
    }

    #[test]
    fn diagonal_monotone_in_box_size() {
        let x = p(2, 2);
        let mut prev = 0.0;
        for side in 5..14 {
            let v = DirichletOperator::new(side).unwrap().column(x).unwrap()[x.index(side)];
            assert!(v >= prev - 1e-12, "side {side}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn spectral_matches_band_solve() {
        for side in [3usize, 6, 11, 17] {
            let op = DirichletOperator::new(side).unwrap();
            let sp = DirichletSpectral::new(side).unwrap();
            for y in [p(1, 1), p((side / 2) as i64, (side / 3) as i64), p(0, 2)] {
                let a = op.column(y).unwrap();
                let b = sp.column(y).unwrap();
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()));
                }
            }
        }
    }

    #[test]
    fn torus_rowsum_and_symmetry() {
        let g = torus_green(8, default_killing(8)).unwrap();
        let total: f64 = g.kernel().iter().sum();
        assert!((total - 65.0).abs() < 1e-9);
        for dx in 0..8 {
            for dy in 0..8 {
                let v = g.at_offset(dx, dy);
                assert!((v - g.at_offset(-dx, -dy)).abs() < 1e-12);
                assert!((v - g.at_offset(dy, dx)).abs() < 1e-12);
                assert!(v > 0.0);
            }
        }
        assert!(g.spectrum().iter().all(|&s| s > 0.0));
        assert_eq!(g.get(p(3, 1), p(3, 1)), g.get(p(0, 7), p(0, 7)));
    }

    #[test]
    fn torus_killing_validated() {
        assert!(torus_green(8, 1.0).is_err());
        assert!(torus_green(8, 0.0).is_err());
    }

    #[test]
    fn hitting_prob_edges() {
        assert!((hitting_prob(p(2, 3), p(2, 3), 6).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(hitting_prob(p(0, 3), p(2, 3), 6).unwrap(), 0.0);
        assert!(matches!(hitting_prob(p(2, 2), p(0, 3), 6), Err(Error::BoundaryTarget(0, 3))));
        let op = DirichletOperator::new(9).unwrap();
        for x in points(9) {
            let h = hitting_prob_with(&op, x, p(4, 4)).unwrap();
            assert!((0.0..=1.0).contains(&h));
            if x != p(4, 4) {
                assert!(h < 1.0);
            }
        }
    }

    #[test]
    fn walk_oracle_n3_is_deterministic_count() {
        let r = mc_walk_oracle(p(1, 1), WalkDomain::Box { side: 3 }, 200, 5).unwrap();
        assert_eq!(r.mean[p(1, 1).index(3)], 1.0);
        assert_eq!(r.se[p(1, 1).index(3)], 0.0);
        assert_eq!(r.total_mean, 1.0);
    }

    #[test]
    fn walk_oracle_torus_total() {
        let r = mc_walk_oracle(
            p(0, 0),
            WalkDomain::Torus { side: 8, killing: default_killing(8) },
            20_000,
            9,
        )
        .unwrap();
        assert!((r.total_mean - 65.0).abs() < 3.0 * r.total_se, "{} ± {}", r.total_mean, r.total_se);
    }

    #[test]
    fn walk_oracle_matches_exact_box() {
        let g = dirichlet_green(5).unwrap();
        let start = p(1, 2);
        let r = mc_walk_oracle(start, WalkDomain::Box { side: 5 }, 40_000, 21).unwrap();
        let mut bad = 0;
        for y in points(5) {
            let i = y.index(5);
            let exact = g.get(start, y);
            if (r.mean[i] - exact).abs() > 3.0 * r.se[i] + 1e-12 {
                bad += 1;
            }
        }
        // 9 interior targets; one 3-SE miss is within chance.
        assert!(bad <= 1, "{bad} entries outside 3 SE");
    }

    #[test]
    fn hitting_prob_matches_walk() {
        let x = p(1, 1);
        let y = p(2, 2);
        let h = hitting_prob(x, y, 5).unwrap();
        let hits = crate::rng::replicate_map(100_000, 4, |rng, _| {
            let mut pos = x;
            while pos.is_interior(5) {
                if pos == y {
                    return 1.0;
                }
                let (a, b) = [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.random_range(0..4)];
                pos = pos.offset(a, b);
            }
            0.0
        });
        let m = crate::stats::mean(&hits);
        let se = crate::stats::std_err(&hits);
        assert!((m - h).abs() < 3.0 * se, "{m} vs {h} (se {se})");
    }
}
