//! Grid geometry: boxes `V_N`, torus identification and metrics, dyadic boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dyadic square grid of side `N = 2^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: u32,
    side: usize,
}

impl GridSpec {
    /// Largest supported number of scales (side 2^20).
    pub const MAX_SCALES: u32 = 20;

    pub fn new(n: u32) -> Result<Self> {
        if n > Self::MAX_SCALES {
            return Err(Error::InvalidParameter(format!(
                "n = {n} exceeds {}",
                Self::MAX_SCALES
            )));
        }
        Ok(Self { n, side: 1 << n })
    }

    /// Builds the spec from a side length, which must be a power of two.
    pub fn from_side(side: usize) -> Result<Self> {
        if side == 0 || !side.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "side {side} is not a power of two"
            )));
        }
        Self::new(side.trailing_zeros())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A lattice site. Coordinates are signed so that box corners outside `V_N`
/// can be represented before torus canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub x1: i64,
    pub x2: i64,
}

impl GridPoint {
    pub const fn new(x1: i64, x2: i64) -> Self {
        Self { x1, x2 }
    }

    /// Row-major index of the point in a grid of the given side.
    #[inline]
    pub fn index(&self, side: usize) -> usize {
        self.x1 as usize * side + self.x2 as usize
    }

    #[inline]
    pub fn from_index(idx: usize, side: usize) -> Self {
        Self::new((idx / side) as i64, (idx % side) as i64)
    }

    pub fn in_box(&self, side: usize) -> bool {
        let s = side as i64;
        (0..s).contains(&self.x1) && (0..s).contains(&self.x2)
    }

    /// Interior of `V_N`, i.e. `((0, N-1) ∩ Z)^2`.
    pub fn is_interior(&self, side: usize) -> bool {
        let s = side as i64;
        self.x1 > 0 && self.x1 < s - 1 && self.x2 > 0 && self.x2 < s - 1
    }

    pub fn on_boundary(&self, side: usize) -> bool {
        self.in_box(side) && !self.is_interior(side)
    }

    pub fn wrapped(&self, side: usize) -> Self {
        let s = side as i64;
        Self::new(self.x1.rem_euclid(s), self.x2.rem_euclid(s))
    }

    pub fn offset(&self, d1: i64, d2: i64) -> Self {
        Self::new(self.x1 + d1, self.x2 + d2)
    }
}

/// Iterates all points of `V_side` in row-major order.
pub fn points(side: usize) -> impl Iterator<Item = GridPoint> {
    (0..side * side).map(move |i| GridPoint::from_index(i, side))
}

/// Torus distances `d^N` (Euclidean) and `d^N_∞` (sup norm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusDistance {
    pub d: f64,
    pub d_inf: i64,
}

/// Per-coordinate torus distances `t_i = min(|x_i-y_i|, |x_i-y_i-N|, |x_i-y_i+N|)`.
#[inline]
pub fn t_components(x: GridPoint, y: GridPoint, side: usize) -> (i64, i64) {
    (axis_dist(x.x1 - y.x1, side), axis_dist(x.x2 - y.x2, side))
}

#[inline]
pub(crate) fn axis_dist(delta: i64, side: usize) -> i64 {
    let a = delta.rem_euclid(side as i64);
    a.min(side as i64 - a)
}

pub fn torus_distances(x: GridPoint, y: GridPoint, side: usize) -> TorusDistance {
    let (t1, t2) = t_components(x, y, side);
    TorusDistance {
        d: ((t1 * t1 + t2 * t2) as f64).sqrt(),
        d_inf: t1.max(t2),
    }
}

/// `⌈log₂ m⌉` for `m ≥ 1`.
#[inline]
pub fn ceil_log2(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// A square of side `2^k` with the given lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicBox {
    pub k: u32,
    pub corner: GridPoint,
}

impl DyadicBox {
    pub fn side(&self) -> i64 {
        1 << self.k
    }

    /// Plain (non-torus) membership.
    pub fn contains(&self, p: GridPoint) -> bool {
        let s = self.side();
        (self.corner.x1..self.corner.x1 + s).contains(&p.x1)
            && (self.corner.x2..self.corner.x2 + s).contains(&p.x2)
    }

    /// Membership after identifying points modulo `side` on both axes.
    pub fn contains_mod(&self, p: GridPoint, side: usize) -> bool {
        let s = self.side();
        let a = (p.x1 - self.corner.x1).rem_euclid(side as i64);
        let b = (p.x2 - self.corner.x2).rem_euclid(side as i64);
        a < s && b < s
    }
}

/// Which family of boxes of side `2^k` to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxCollection {
    /// The partition `BD_k`: corners divisible by `2^k`.
    Aligned,
    /// All boxes `B_k(z)` containing the point, canonicalized on the torus.
    All,
}

/// Boxes of scale `k` containing `z`.
///
/// In [`BoxCollection::All`] mode the `2^{2k}` corners range over
/// `[z1-2^k+1, z1] × [z2-2^k+1, z2]` and are then reduced to their canonical
/// torus representatives.
pub fn boxes_containing(
    z: GridPoint,
    k: u32,
    collection: BoxCollection,
    grid: GridSpec,
) -> Result<Vec<DyadicBox>> {
    if k > grid.n() {
        return Err(Error::ScaleOutOfRange { k, n: grid.n() });
    }
    let s = 1i64 << k;
    match collection {
        BoxCollection::Aligned => Ok(vec![DyadicBox {
            k,
            corner: GridPoint::new(z.x1.div_euclid(s) * s, z.x2.div_euclid(s) * s),
        }]),
        BoxCollection::All => {
            let mut out = Vec::with_capacity((s * s) as usize);
            for a in 0..s {
                for b in 0..s {
                    let b = DyadicBox {
                        k,
                        corner: GridPoint::new(z.x1 - a, z.x2 - b),
                    };
                    out.push(canonical_rep(b, grid.side()));
                }
            }
            Ok(out)
        }
    }
}

/// The representative of the `∼_N` class of `b` whose corner lies in `V_N`.
pub fn canonical_rep(b: DyadicBox, side: usize) -> DyadicBox {
    DyadicBox {
        k: b.k,
        corner: b.corner.wrapped(side),
    }
}

/// Index sets on which fields are observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subgrid {
    /// All of `V_N`.
    Full,
    /// `V_N' = V_{N/2} + (N/4, N/4)`.
    Inner,
    /// `V_N + (2N, 2N)`, a copy of `V_N` inside `V_{4N}`.
    Shifted,
}

impl Subgrid {
    /// Membership for a point given in the coordinates of the host box
    /// (`V_N` for `Full`/`Inner`, `V_{4N}` for `Shifted`).
    pub fn contains(&self, p: GridPoint, side: usize) -> bool {
        let s = side as i64;
        match self {
            Subgrid::Full => p.in_box(side),
            Subgrid::Inner => {
                let lo = s / 4;
                let hi = lo + s / 2;
                (lo..hi).contains(&p.x1) && (lo..hi).contains(&p.x2)
            }
            Subgrid::Shifted => {
                (2 * s..3 * s).contains(&p.x1) && (2 * s..3 * s).contains(&p.x2)
            }
        }
    }

    /// Side of the host box the points live in.
    pub fn host_side(&self, side: usize) -> usize {
        match self {
            Subgrid::Shifted => 4 * side,
            _ => side,
        }
    }

    /// Host-coordinate points of the subgrid in row-major order.
    pub fn points(&self, side: usize) -> Vec<GridPoint> {
        match self {
            Subgrid::Full => points(side).collect(),
            Subgrid::Inner => {
                let lo = (side / 4) as i64;
                let w = (side / 2) as i64;
                (0..w)
                    .flat_map(|a| (0..w).map(move |b| GridPoint::new(lo + a, lo + b)))
                    .collect()
            }
            Subgrid::Shifted => {
                let off = 2 * side as i64;
                points(side).map(|p| p.offset(off, off)).collect()
            }
        }
    }

    /// Row-major host indices of the subgrid.
    pub fn indices(&self, side: usize) -> Vec<usize> {
        let host = self.host_side(side);
        self.points(side).iter().map(|p| p.index(host)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn p(a: i64, b: i64) -> GridPoint {
        GridPoint::new(a, b)
    }

    #[test]
    fn distance_examples() {
        let zero = torus_distances(p(3, 5), p(3, 5), 8);
        assert_eq!((zero.d, zero.d_inf), (0.0, 0));
        let w = torus_distances(p(0, 0), p(7, 0), 8);
        assert_eq!((w.d, w.d_inf), (1.0, 1));
        let c = torus_distances(p(0, 0), p(4, 4), 8);
        assert_eq!(c.d_inf, 4);
        assert!((c.d - 32f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn t_component_examples() {
        assert_eq!(t_components(p(2, 2), p(2, 2), 8), (0, 0));
        assert_eq!(t_components(p(0, 0), p(7, 3), 8), (1, 3));
        assert_eq!(t_components(p(1, 2), p(3, 0), 4), (2, 2));
    }

    #[test]
    fn box_examples() {
        let g = GridSpec::new(3).unwrap();
        for mode in [BoxCollection::Aligned, BoxCollection::All] {
            let b = boxes_containing(p(5, 2), 0, mode, g).unwrap();
            assert_eq!(b, vec![DyadicBox { k: 0, corner: p(5, 2) }]);
        }
        let all: HashSet<_> = boxes_containing(p(0, 0), 1, BoxCollection::All, g)
            .unwrap()
            .into_iter()
            .map(|b| b.corner)
            .collect();
        let want: HashSet<_> = [p(0, 0), p(7, 0), p(0, 7), p(7, 7)].into_iter().collect();
        assert_eq!(all, want);
        let a = boxes_containing(p(5, 6), 2, BoxCollection::Aligned, g).unwrap();
        assert_eq!(a[0].corner, p(4, 4));
        assert!(matches!(
            boxes_containing(p(0, 0), 4, BoxCollection::All, g),
            Err(Error::ScaleOutOfRange { k: 4, n: 3 })
        ));
    }

    #[test]
    fn canonical_examples() {
        let c = |a, b| canonical_rep(DyadicBox { k: 1, corner: p(a, b) }, 8).corner;
        assert_eq!(c(2, 3), p(2, 3));
        assert_eq!(c(-1, 0), p(7, 0));
        assert_eq!(c(9, -7), p(1, 1));
    }

    #[test]
    fn all_boxes_count_and_membership() {
        let g = GridSpec::new(4).unwrap();
        for k in 0..=4 {
            let z = p(3, 14);
            let bs = boxes_containing(z, k, BoxCollection::All, g).unwrap();
            assert_eq!(bs.len(), 1 << (2 * k));
            let uniq: HashSet<_> = bs.iter().collect();
            assert_eq!(uniq.len(), bs.len());
            assert!(bs.iter().all(|b| b.contains_mod(z, 16)));
        }
    }

    #[test]
    fn aligned_boxes_partition() {
        let g = GridSpec::new(3).unwrap();
        for k in 0..=3 {
            let mut cover = vec![0u32; 64];
            let corners: HashSet<_> = points(8)
                .map(|z| boxes_containing(z, k, BoxCollection::Aligned, g).unwrap()[0])
                .collect();
            for b in &corners {
                for z in points(8) {
                    if b.contains(z) {
                        cover[z.index(8)] += 1;
                    }
                }
            }
            assert!(cover.iter().all(|&c| c == 1));
            assert_eq!(corners.len(), 1 << (2 * (3 - k)));
        }
    }

    #[test]
    fn subgrids() {
        assert_eq!(Subgrid::Inner.points(8).len(), 16);
        assert!(Subgrid::Inner.contains(p(2, 5), 8));
        assert!(!Subgrid::Inner.contains(p(6, 5), 8));
        let s = Subgrid::Shifted.points(4);
        assert_eq!(s.len(), 16);
        assert!(s.iter().all(|q| Subgrid::Shifted.contains(*q, 4)));
        assert!(Subgrid::Inner
            .points(16)
            .iter()
            .all(|q| Subgrid::Full.contains(*q, 16)));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(6), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }

    proptest! {
        #[test]
        fn torus_metrics(n in 1u32..7, a in any::<[u16; 6]>()) {
            let side = 1usize << n;
            let s = side as u16;
            let x = p((a[0] % s) as i64, (a[1] % s) as i64);
            let y = p((a[2] % s) as i64, (a[3] % s) as i64);
            let z = p((a[4] % s) as i64, (a[5] % s) as i64);
            let dxy = torus_distances(x, y, side);
            let dyx = torus_distances(y, x, side);
            prop_assert_eq!(dxy, dyx);
            let (t1, t2) = t_components(x, y, side);
            prop_assert_eq!(dxy.d_inf, t1.max(t2));
            prop_assert!(dxy.d_inf as f64 <= dxy.d + 1e-12);
            prop_assert!(dxy.d <= 2f64.sqrt() * dxy.d_inf as f64 + 1e-12);
            let dxz = torus_distances(x, z, side);
            let dzy = torus_distances(z, y, side);
            prop_assert!(dxy.d <= dxz.d + dzy.d + 1e-12);
            prop_assert!(dxy.d_inf <= dxz.d_inf + dzy.d_inf);
        }

        #[test]
        fn canonical_idempotent(c1 in -100i64..100, c2 in -100i64..100, i in -3i64..3, j in -3i64..3) {
            let b = DyadicBox { k: 2, corner: p(c1, c2) };
            let r = canonical_rep(b, 16);
            prop_assert_eq!(canonical_rep(r, 16), r);
            let shifted = DyadicBox { k: 2, corner: p(c1 + 16 * i, c2 + 16 * j) };
            prop_assert_eq!(canonical_rep(shifted, 16), r);
            prop_assert!(r.corner.in_box(16));
        }
    }
}
