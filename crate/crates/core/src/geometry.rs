//! Dyadic grids on the real line, Carleson boxes and their α-measures.
//!
//! Endpoints of a grid interval are kept as an integer numerator `N` with the
//! real value `N · 2^j / 3`, so every membership test against a float is exact.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shift {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1/3")]
    Third,
}

impl Shift {
    pub const ALL: [Shift; 2] = [Shift::Zero, Shift::Third];

    pub fn value(self) -> f64 {
        match self {
            Shift::Zero => 0.0,
            Shift::Third => 1.0 / 3.0,
        }
    }

    /// `(-1)^j · 3β`, the integer offset of the left numerator at scale `j`.
    fn offset(self, scale: i32) -> i128 {
        match self {
            Shift::Zero => 0,
            Shift::Third => {
                if scale.rem_euclid(2) == 0 {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

impl std::fmt::Display for Shift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shift::Zero => write!(f, "0"),
            Shift::Third => write!(f, "1/3"),
        }
    }
}

/// Exact `2^j` for the normal range of `f64`.
pub fn pow2(j: i32) -> f64 {
    if (-1022..=1023).contains(&j) {
        f64::from_bits(((j + 1023) as u64) << 52)
    } else {
        2f64.powi(j)
    }
}

/// `x = mant · 2^exp` exactly.
fn decode(x: f64) -> (i128, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign: i128 = if bits >> 63 == 0 { 1 } else { -1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    if exp_bits == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i128 << 52)), exp_bits - 1075)
    }
}

/// Exact comparison of `x` with the rational `n · 2^j / 3`.
pub(crate) fn cmp_third(x: f64, n: i128, j: i32) -> Ordering {
    let (mant, e) = decode(x);
    let lhs = 3 * mant;
    if lhs == 0 {
        return 0.cmp(&n);
    }
    let k = e - j;
    if k >= 0 {
        if k > 60 {
            return if lhs > 0 { Ordering::Greater } else { Ordering::Less };
        }
        (lhs << k).cmp(&n)
    } else {
        if n == 0 {
            return lhs.cmp(&0);
        }
        if -k > 60 {
            return if n > 0 { Ordering::Less } else { Ordering::Greater };
        }
        lhs.cmp(&(n << (-k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Half-open real interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo < hi, "empty interval [{lo}, {hi})");
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn carleson_box(&self) -> Rect {
        Rect::new(self.lo, self.hi, 0.0, self.len())
    }

    pub fn top_half(&self) -> Rect {
        Rect::new(self.lo, self.hi, 0.5 * self.len(), self.len())
    }
}

/// Axis-parallel rectangle `[x0, x1) × (y0, y1)` in the closed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn is_empty(&self) -> bool {
        !(self.x0 < self.x1 && self.y0 < self.y1)
    }

    pub fn intersect(&self, o: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.x0.max(o.x0),
            self.x1.min(o.x1),
            self.y0.max(o.y0),
            self.y1.min(o.y1),
        );
        (!r.is_empty()).then_some(r)
    }

    pub fn contains(&self, z: Point) -> bool {
        self.x0 <= z.x && z.x < self.x1 && self.y0 < z.y && z.y < self.y1
    }

    /// Lebesgue area of the rectangle under `y^α dx dy`.
    pub fn measure_alpha(&self, alpha: f64) -> f64 {
        let a1 = 1.0 + alpha;
        self.width() * (self.y1.powf(a1) - self.y0.powf(a1)) / a1
    }
}

/// A member of the grid `D^β`: length `2^scale`, left endpoint
/// `2^scale · (translation + (-1)^scale · β)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub scale: i32,
    pub translation: i64,
    pub shift: Shift,
}

impl DyadicInterval {
    pub fn new(scale: i32, translation: i64, shift: Shift) -> Self {
        DyadicInterval { scale, translation, shift }
    }

    /// Numerator `N` of the left endpoint `N · 2^scale / 3`.
    pub fn left_numer(&self) -> i128 {
        3 * self.translation as i128 + self.shift.offset(self.scale)
    }

    pub fn left(&self) -> f64 {
        self.left_numer() as f64 * pow2(self.scale) / 3.0
    }

    pub fn right(&self) -> f64 {
        (self.left_numer() + 3) as f64 * pow2(self.scale) / 3.0
    }

    pub fn len(&self) -> f64 {
        pow2(self.scale)
    }

    pub fn interval(&self) -> Interval {
        Interval { lo: self.left(), hi: self.right() }
    }

    pub fn carleson_box(&self) -> Rect {
        Rect::new(self.left(), self.right(), 0.0, self.len())
    }

    pub fn top_half(&self) -> Rect {
        let l = self.len();
        Rect::new(self.left(), self.right(), 0.5 * l, l)
    }

    pub fn parent(&self) -> DyadicInterval {
        let t = self.shift.offset(self.scale + 1) as i64;
        DyadicInterval::new(self.scale + 1, (self.translation - t).div_euclid(2), self.shift)
    }

    pub fn children(&self) -> [DyadicInterval; 2] {
        let t = self.shift.offset(self.scale) as i64;
        let m = 2 * self.translation + t;
        [
            DyadicInterval::new(self.scale - 1, m, self.shift),
            DyadicInterval::new(self.scale - 1, m + 1, self.shift),
        ]
    }

    pub fn ancestor(&self, scale: i32) -> DyadicInterval {
        let mut a = *self;
        while a.scale < scale {
            a = a.parent();
        }
        a
    }

    /// Exact test `left <= x < right`.
    pub fn contains_point(&self, x: f64) -> bool {
        let n = self.left_numer();
        cmp_third(x, n, self.scale) != Ordering::Less
            && cmp_third(x, n + 3, self.scale) == Ordering::Less
    }

    /// Exact test `z ∈ Q_I`, i.e. `x ∈ I` and `0 < y < |I|`.
    pub fn box_contains(&self, z: Point) -> bool {
        z.y > 0.0 && z.y < self.len() && self.contains_point(z.x)
    }

    /// Same-grid containment `other ⊆ self`.
    pub fn contains_interval(&self, other: &DyadicInterval) -> bool {
        debug_assert_eq!(self.shift, other.shift);
        other.scale <= self.scale && other.ancestor(self.scale) == *self
    }

    /// Exact test that the real interval `[lo, hi)` lies inside this one.
    pub fn covers(&self, iv: &Interval) -> bool {
        let n = self.left_numer();
        cmp_third(iv.lo, n, self.scale) != Ordering::Less
            && cmp_third(iv.hi, n + 3, self.scale) != Ordering::Greater
    }

    /// The unique interval of `D^β` at `scale` that contains `x`.
    pub fn containing(x: f64, scale: i32, shift: Shift) -> DyadicInterval {
        let t = shift.offset(scale) as f64;
        let guess = ((3.0 * x / pow2(scale) - t) / 3.0).floor();
        let mut d = DyadicInterval::new(scale, guess as i64, shift);
        loop {
            let n = d.left_numer();
            if cmp_third(x, n, scale) == Ordering::Less {
                d.translation -= 1;
            } else if cmp_third(x, n + 3, scale) != Ordering::Less {
                d.translation += 1;
            } else {
                return d;
            }
        }
    }

    pub fn intersects(&self, iv: &Interval) -> bool {
        self.left() < iv.hi && iv.lo < self.right()
    }
}

impl std::fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}) (j={}, m={}, β={})", self.left(), self.right(), self.scale, self.translation, self.shift)
    }
}

/// `[2^j(m + (-1)^j β), 2^j(m + (-1)^j β) + 2^j)`.
pub fn interval_endpoints(j: i32, m: i64, shift: Shift) -> (f64, f64) {
    let d = DyadicInterval::new(j, m, shift);
    (d.left(), d.right())
}

/// Covering lemma: a grid interval `J ⊇ I` with `|J| <= 6|I|`.
/// Tie-break prefers `β = 0`, then the smaller `|J|`.
pub fn containing_dyadic(iv: &Interval) -> Option<(Shift, DyadicInterval)> {
    let len = iv.len();
    if !(len > 0.0 && len.is_finite()) {
        return None;
    }
    let j_lo = len.log2().floor() as i32 - 1;
    let j_hi = (6.0 * len).log2().ceil() as i32 + 1;
    for shift in Shift::ALL {
        for j in j_lo..=j_hi {
            let l = pow2(j);
            if l < len || l > 6.0 * len {
                continue;
            }
            let d = DyadicInterval::containing(iv.lo, j, shift);
            if d.covers(iv) {
                return Some((shift, d));
            }
        }
    }
    None
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > -1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must exceed -1, got {alpha}")))
    }
}

/// `|Q_I|_α = L^{2+α}/(1+α)`.
pub fn box_measure_alpha(len: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(len.powf(2.0 + alpha) / (1.0 + alpha))
}

/// `|T_I|_α = L^{2+α}(1 - 2^{-(1+α)})/(1+α)`.
pub fn top_half_measure_alpha(len: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(len.powf(2.0 + alpha) * (1.0 - 2f64.powf(-(1.0 + alpha))) / (1.0 + alpha))
}

/// Finite truncation of a dyadic family: scales `j_min..=j_max`, intervals
/// meeting `[x_lo, x_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub j_min: i32,
    pub j_max: i32,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl ScaleWindow {
    pub fn new(j_min: i32, j_max: i32, x_lo: f64, x_hi: f64) -> Result<Self> {
        let w = ScaleWindow { j_min, j_max, x_lo, x_hi };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_min > self.j_max || !(self.x_lo < self.x_hi) {
            return Err(Error::InvalidInput(format!("bad window {self:?}")));
        }
        Ok(())
    }

    pub fn range(&self) -> Interval {
        Interval { lo: self.x_lo, hi: self.x_hi }
    }

    /// One more scale at each end and twice the horizontal extent.
    pub fn grow(&self) -> ScaleWindow {
        let w = self.x_hi - self.x_lo;
        ScaleWindow {
            j_min: self.j_min - 1,
            j_max: self.j_max + 1,
            x_lo: self.x_lo - 0.5 * w,
            x_hi: self.x_hi + 0.5 * w,
        }
    }

    pub fn deepen(&self, k: i32) -> ScaleWindow {
        ScaleWindow { j_min: self.j_min - k, ..*self }
    }

    pub fn raise(&self, k: i32) -> ScaleWindow {
        ScaleWindow { j_max: self.j_max + k, ..*self }
    }

    pub fn contains(&self, d: &DyadicInterval) -> bool {
        d.scale >= self.j_min && d.scale <= self.j_max && d.intersects(&self.range())
    }

    /// Grid intervals at one scale meeting the horizontal range, left to right.
    pub fn intervals_at(&self, scale: i32, shift: Shift) -> Vec<DyadicInterval> {
        let mut out = Vec::new();
        let mut d = DyadicInterval::containing(self.x_lo, scale, shift);
        while d.left() < self.x_hi {
            out.push(d);
            d.translation += 1;
        }
        out
    }

    /// Every interval of the window, coarse scales first.
    pub fn intervals(&self, shift: Shift) -> Vec<DyadicInterval> {
        (self.j_min..=self.j_max)
            .rev()
            .flat_map(|j| self.intervals_at(j, shift))
            .collect()
    }

    pub fn roots(&self, shift: Shift) -> Vec<DyadicInterval> {
        self.intervals_at(self.j_max, shift)
    }

    pub fn count(&self, shift: Shift) -> usize {
        (self.j_min..=self.j_max)
            .map(|j| self.intervals_at(j, shift).len())
            .sum()
    }
}

/// Index `j` with `2^{j-1} <= y < 2^j`: the scale of the tile holding height `y`.
pub fn tile_scale(y: f64) -> i32 {
    let (mant, e) = decode(y);
    debug_assert!(mant > 0);
    // y = mant·2^e with mant < 2^53; bit length gives the binade.
    let bits = 128 - mant.leading_zeros() as i32;
    e + bits
}

/// The chain of grid intervals `I ∈ W` with `x ∈ I` and `y < |I|`, finest first.
pub fn boxes_containing(z: Point, shift: Shift, w: &ScaleWindow) -> Vec<DyadicInterval> {
    if !(z.y > 0.0) {
        return Vec::new();
    }
    let start = tile_scale(z.y).max(w.j_min);
    if start > w.j_max {
        return Vec::new();
    }
    let range = w.range();
    let mut out = Vec::with_capacity((w.j_max - start + 1) as usize);
    let mut d = DyadicInterval::containing(z.x, start, shift);
    loop {
        if d.intersects(&range) {
            out.push(d);
        }
        if d.scale >= w.j_max {
            break;
        }
        d = d.parent();
    }
    out
}

/// Top halves `T_I` of all window intervals; they tile the window's strip
/// `2^{j_min-1} <= y < 2^{j_max}`.
pub fn whitney_cells(w: &ScaleWindow, shift: Shift) -> Vec<DyadicInterval> {
    w.intervals(shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        assert_eq!(interval_endpoints(0, 0, Shift::Zero), (0.0, 1.0));
        assert_eq!(interval_endpoints(0, 0, Shift::Third), (1.0 / 3.0, 4.0 / 3.0));
        let (l, r) = interval_endpoints(1, 0, Shift::Third);
        assert!((l + 2.0 / 3.0).abs() < 1e-15 && (r - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn covering_examples() {
        let (b, j) = containing_dyadic(&Interval::new(0.4, 0.6)).unwrap();
        assert_eq!((b, j.left(), j.right()), (Shift::Zero, 0.0, 1.0));
        let (b, j) = containing_dyadic(&Interval::new(0.0, 1.0)).unwrap();
        assert_eq!((b, j.left(), j.right()), (Shift::Zero, 0.0, 1.0));
        // Smallest admissible third-shifted interval, per the tie-break rule.
        let (b, j) = containing_dyadic(&Interval::new(0.9, 1.1)).unwrap();
        assert_eq!(b, Shift::Third);
        assert_eq!((j.scale, j.translation), (-1, 2));
        assert!((j.left() - 5.0 / 6.0).abs() < 1e-15 && (j.right() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exact_membership_at_third_endpoints() {
        let d = DyadicInterval::new(0, 0, Shift::Third);
        // The double nearest 1/3 lies just below it, so it belongs to the left neighbour.
        assert!(!d.contains_point(1.0 / 3.0));
        assert_eq!(DyadicInterval::containing(1.0 / 3.0, 0, Shift::Third).translation, -1);
        assert!(d.contains_point(0.5));
        assert!(d.contains_point(4.0 / 3.0 - 1e-12));
        assert!(!d.contains_point(4.0 / 3.0 + 1e-15));
    }

    #[test]
    fn measures() {
        assert_eq!(box_measure_alpha(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(box_measure_alpha(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(box_measure_alpha(2.0, 0.0).unwrap(), 4.0);
        assert_eq!(top_half_measure_alpha(1.0, 0.0).unwrap(), 0.5);
        assert_eq!(top_half_measure_alpha(1.0, 1.0).unwrap(), 0.375);
        assert!(box_measure_alpha(1.0, -1.0).is_err());
    }

    #[test]
    fn chain_example() {
        let w = ScaleWindow::new(-3, 2, -8.0, 8.0).unwrap();
        let c = boxes_containing(Point::new(0.5, 0.25), Shift::Zero, &w);
        let got: Vec<_> = c.iter().map(|d| (d.left(), d.right())).collect();
        assert_eq!(got, vec![(0.5, 1.0), (0.0, 1.0), (0.0, 2.0), (0.0, 4.0)]);
        assert!(boxes_containing(Point::new(0.5, 4.0), Shift::Zero, &w).is_empty());
    }

    #[test]
    fn whitney_example() {
        let w = ScaleWindow::new(-1, 0, 0.0, 1.0).unwrap();
        let cells: Vec<_> = whitney_cells(&w, Shift::Zero)
            .iter()
            .map(|d| (d.left(), d.right()))
            .collect();
        assert_eq!(cells, vec![(0.0, 1.0), (0.0, 0.5), (0.5, 1.0)]);
    }

    #[test]
    fn whitney_additivity() {
        let w = ScaleWindow::new(-5, 0, 0.0, 1.0).unwrap();
        for alpha in [-0.5, 0.0, 1.5] {
            let s: f64 = whitney_cells(&w, Shift::Zero)
                .iter()
                .map(|d| top_half_measure_alpha(d.len(), alpha).unwrap())
                .sum();
            let strip = Rect::new(0.0, 1.0, 0.0, pow2(-6)).measure_alpha(alpha);
            let q = box_measure_alpha(1.0, alpha).unwrap();
            assert!((s - (q - strip)).abs() < 1e-13);
        }
    }

    #[test]
    fn tile_scale_binades() {
        assert_eq!(tile_scale(0.25), -1);
        assert_eq!(tile_scale(0.3), -1);
        assert_eq!(tile_scale(0.5), 0);
        assert_eq!(tile_scale(1.0), 1);
        assert_eq!(tile_scale(0.99), 0);
    }

    fn shift_strategy() -> impl Strategy<Value = Shift> {
        prop_oneof![Just(Shift::Zero), Just(Shift::Third)]
    }

    proptest! {
        #[test]
        fn parent_child_roundtrip(j in -40i32..40, m in -1_000_000i64..1_000_000, s in shift_strategy()) {
            let d = DyadicInterval::new(j, m, s);
            let [a, b] = d.children();
            prop_assert_eq!(a.parent(), d);
            prop_assert_eq!(b.parent(), d);
            prop_assert_eq!(a.left_numer() * 1, 2 * d.left_numer());
            prop_assert_eq!(b.left_numer(), a.left_numer() + 3);
            prop_assert_eq!(b.left_numer() + 3, 2 * (d.left_numer() + 3));
        }

        #[test]
        fn same_grid_nested_or_disjoint(j1 in -10i32..10, j2 in -10i32..10,
                                        m1 in -50i64..50, m2 in -50i64..50, s in shift_strategy()) {
            let a = DyadicInterval::new(j1, m1, s);
            let b = DyadicInterval::new(j2, m2, s);
            let (la, ra) = (a.left_numer() << (j1 - j1.min(j2)), (a.left_numer() + 3) << (j1 - j1.min(j2)));
            let (lb, rb) = (b.left_numer() << (j2 - j1.min(j2)), (b.left_numer() + 3) << (j2 - j1.min(j2)));
            let disjoint = ra <= lb || rb <= la;
            let nested = (la <= lb && rb <= ra) || (lb <= la && ra <= rb);
            prop_assert!(disjoint || nested);
            if nested && j1 >= j2 { prop_assert!(a.contains_interval(&b)); }
        }

        #[test]
        fn containing_is_exact(x in -1e6f64..1e6, j in -30i32..20, s in shift_strategy()) {
            let d = DyadicInterval::containing(x, j, s);
            prop_assert!(d.contains_point(x));
        }

        #[test]
        fn chain_grows_with_window(x in -4f64..4.0, y in 1e-3f64..8.0, s in shift_strategy()) {
            let w = ScaleWindow::new(-6, 2, -4.0, 4.0).unwrap();
            let c1 = boxes_containing(Point::new(x, y), s, &w);
            let c2 = boxes_containing(Point::new(x, y), s, &w.grow());
            for k in 1..c1.len() {
                prop_assert!(c1[k].contains_interval(&c1[k - 1]));
            }
            for d in &c1 {
                prop_assert!(c2.contains(d));
                prop_assert!(d.box_contains(Point::new(x, y)));
            }
        }

        #[test]
        fn covering_lemma(lo in -100f64..100.0, log_len in -12f64..6.0) {
            let len = 2f64.powf(log_len);
            let iv = Interval::new(lo, lo + len);
            let (_, j) = containing_dyadic(&iv).unwrap();
            prop_assert!(j.covers(&iv));
            prop_assert!(j.len() <= 6.0 * iv.len());
        }
    }
}
