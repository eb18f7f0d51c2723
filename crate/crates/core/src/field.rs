//! Nonnegative fields on the upper half-plane.
//!
//! Fields built from constants, powers of `|z|` and `y`, box and half-disk
//! indicators are kept in a sum-of-monomials normal form that integrates
//! exactly over rectangles. Anything else falls back to a callable evaluated
//! by the numeric engine.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{DyadicInterval, Interval, Point, Rect};

/// `coeff · |z|^abs_exp · y^y_exp`, restricted to `rect` and to `|z| <= disk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub abs_exp: f64,
    pub y_exp: f64,
    pub rect: Option<Rect>,
    pub disk: Option<f64>,
}

impl Monomial {
    fn constant(c: f64) -> Self {
        Monomial { coeff: c, abs_exp: 0.0, y_exp: 0.0, rect: None, disk: None }
    }

    pub fn eval(&self, z: Point) -> f64 {
        if let Some(r) = &self.rect {
            if !r.contains(z) {
                return 0.0;
            }
        }
        let r2 = z.x * z.x + z.y * z.y;
        if let Some(rad) = self.disk {
            if r2 > rad * rad {
                return 0.0;
            }
        }
        let mut v = self.coeff;
        if self.abs_exp != 0.0 {
            v *= r2.powf(0.5 * self.abs_exp);
        }
        if self.y_exp != 0.0 {
            v *= z.y.powf(self.y_exp);
        }
        v
    }

    fn is_piecewise_constant(&self) -> bool {
        self.abs_exp == 0.0 && self.y_exp == 0.0 && self.disk.is_none()
    }

    fn product(&self, o: &Monomial) -> Option<Monomial> {
        let rect = match (self.rect, o.rect) {
            (Some(a), Some(b)) => Some(a.intersect(&b)?),
            (a, b) => a.or(b),
        };
        let disk = match (self.disk, o.disk) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Some(Monomial {
            coeff: self.coeff * o.coeff,
            abs_exp: self.abs_exp + o.abs_exp,
            y_exp: self.y_exp + o.y_exp,
            rect,
            disk,
        })
    }

    /// Upper bound of the monomial over `r` (may be `+∞`).
    fn sup_on(&self, r: &Rect) -> f64 {
        let r = match &self.rect {
            Some(own) => match own.intersect(r) {
                Some(c) => c,
                None => return 0.0,
            },
            None => *r,
        };
        let mut v = self.coeff;
        if self.y_exp > 0.0 {
            v *= r.y1.powf(self.y_exp);
        } else if self.y_exp < 0.0 {
            v *= r.y0.powf(self.y_exp);
        }
        if self.abs_exp != 0.0 {
            let far = r.x0.abs().max(r.x1.abs()).hypot(r.y1);
            let dx = if r.x0 > 0.0 { r.x0 } else if r.x1 < 0.0 { -r.x1 } else { 0.0 };
            let near = dx.hypot(r.y0);
            let far = self.disk.map_or(far, |d| far.min(d));
            v *= if self.abs_exp > 0.0 { far.powf(self.abs_exp) } else { near.powf(self.abs_exp) };
        }
        v
    }
}

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Repr {
    Terms { terms: Vec<Monomial>, disjoint: bool },
    Callable { f: PointFn, support: Option<Rect>, sup: Option<f64> },
    Map { inner: ScalarField, g: ValueFn, preserves_zero: bool },
    Product(ScalarField, ScalarField),
    Sum(ScalarField, ScalarField),
}

/// Kind tag of a field, following the constructor that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Constant,
    PowerAbs,
    PowerY,
    BoxIndicator,
    HalfDisk,
    Product,
    Sum,
    Scaled,
    Callable,
}

#[derive(Clone)]
pub struct ScalarField {
    pub(crate) repr: Arc<Repr>,
    kind: FieldKind,
    label: Arc<str>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl ScalarField {
    fn terms(terms: Vec<Monomial>, disjoint: bool, kind: FieldKind, label: String) -> Self {
        let disjoint = disjoint || terms.len() <= 1;
        ScalarField { repr: Arc::new(Repr::Terms { terms, disjoint }), kind, label: label.into() }
    }

    pub fn constant(c: f64) -> Self {
        assert!(c >= 0.0, "fields are nonnegative");
        Self::terms(vec![Monomial::constant(c)], true, FieldKind::Constant, format!("{c}"))
    }

    pub fn zero() -> Self {
        Self::terms(Vec::new(), true, FieldKind::Constant, "0".into())
    }

    /// `|z|^s`.
    pub fn power_abs(s: f64) -> Self {
        let m = Monomial { abs_exp: s, ..Monomial::constant(1.0) };
        Self::terms(vec![m], true, FieldKind::PowerAbs, format!("power_abs {s}"))
    }

    /// `y^t`.
    pub fn power_y(t: f64) -> Self {
        let m = Monomial { y_exp: t, ..Monomial::constant(1.0) };
        Self::terms(vec![m], true, FieldKind::PowerY, format!("power_y {t}"))
    }

    pub fn rect_indicator(r: Rect) -> Self {
        let m = Monomial { rect: Some(r), ..Monomial::constant(1.0) };
        Self::terms(
            vec![m],
            true,
            FieldKind::BoxIndicator,
            format!("rect {} {} {} {}", r.x0, r.x1, r.y0, r.y1),
        )
    }

    /// `χ_{Q_I}`.
    pub fn box_indicator(iv: Interval) -> Self {
        let mut f = Self::rect_indicator(iv.carleson_box());
        f.label = format!("box {} {}", iv.lo, iv.hi).into();
        f
    }

    pub fn dyadic_box_indicator(d: &DyadicInterval) -> Self {
        Self::box_indicator(d.interval())
    }

    /// Indicator of `{|z| <= R} ∩ ℋ`.
    pub fn half_disk(radius: f64) -> Self {
        let m = Monomial { disk: Some(radius), ..Monomial::constant(1.0) };
        Self::terms(vec![m], true, FieldKind::HalfDisk, format!("half_disk {radius}"))
    }

    /// `Σ c_k χ_{Q_{I_k}}`, stored on the disjoint cells of the box arrangement.
    pub fn box_sum(boxes: &[(Interval, f64)]) -> Self {
        let rects: Vec<(Rect, f64)> = boxes.iter().map(|(iv, c)| (iv.carleson_box(), *c)).collect();
        let mut f = Self::rect_sum(&rects);
        f.label = boxes
            .iter()
            .map(|(iv, c)| format!("{c} * box {} {}", iv.lo, iv.hi))
            .collect::<Vec<_>>()
            .join(" + ")
            .into();
        if boxes.is_empty() {
            f.label = "0".into();
        }
        f
    }

    pub fn rect_sum(rects: &[(Rect, f64)]) -> Self {
        let mut xs: Vec<f64> = rects.iter().flat_map(|(r, _)| [r.x0, r.x1]).collect();
        let mut ys: Vec<f64> = rects.iter().flat_map(|(r, _)| [r.y0, r.y1]).collect();
        for v in [&mut xs, &mut ys] {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
        }
        let mut terms = Vec::new();
        for yw in ys.windows(2) {
            let ym = 0.5 * (yw[0] + yw[1]);
            // merge equal-valued runs along x
            let mut run: Option<(f64, f64, f64)> = None;
            for xw in xs.windows(2) {
                let xm = 0.5 * (xw[0] + xw[1]);
                let c: f64 = rects
                    .iter()
                    .filter(|(r, _)| r.x0 <= xm && xm < r.x1 && r.y0 < ym && ym < r.y1)
                    .map(|(_, c)| *c)
                    .sum();
                run = match run {
                    Some((a, _, v)) if v == c => Some((a, xw[1], v)),
                    Some((a, b, v)) => {
                        if v != 0.0 {
                            terms.push(Monomial { rect: Some(Rect::new(a, b, yw[0], yw[1])), ..Monomial::constant(v) });
                        }
                        Some((xw[0], xw[1], c))
                    }
                    None => Some((xw[0], xw[1], c)),
                };
            }
            if let Some((a, b, v)) = run {
                if v != 0.0 {
                    terms.push(Monomial { rect: Some(Rect::new(a, b, yw[0], yw[1])), ..Monomial::constant(v) });
                }
            }
        }
        Self::terms(terms, true, FieldKind::Sum, "rect_sum".into())
    }

    /// Arbitrary nonnegative callable, integrated numerically.
    pub fn callable<F>(label: &str, f: F) -> Self
    where
        F: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            repr: Arc::new(Repr::Callable { f: Arc::new(f), support: None, sup: None }),
            kind: FieldKind::Callable,
            label: label.into(),
        }
    }

    /// Callable with a known bounding support rectangle and an optional sup bound.
    pub fn callable_with<F>(label: &str, support: Option<Rect>, sup: Option<f64>, f: F) -> Self
    where
        F: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            repr: Arc::new(Repr::Callable { f: Arc::new(f), support, sup }),
            kind: FieldKind::Callable,
            label: label.into(),
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    pub(crate) fn as_terms(&self) -> Option<(&[Monomial], bool)> {
        match &*self.repr {
            Repr::Terms { terms, disjoint } => Some((terms, *disjoint)),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.as_terms(), Some((t, _)) if t.iter().all(|m| m.coeff == 0.0))
    }

    pub fn eval(&self, z: Point) -> f64 {
        match &*self.repr {
            Repr::Terms { terms, .. } => terms.iter().map(|m| m.eval(z)).sum(),
            Repr::Callable { f, .. } => f(z),
            Repr::Map { inner, g, .. } => g(inner.eval(z)),
            Repr::Product(a, b) => {
                let va = a.eval(z);
                if va == 0.0 {
                    0.0
                } else {
                    va * b.eval(z)
                }
            }
            Repr::Sum(a, b) => a.eval(z) + b.eval(z),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0);
        match &*self.repr {
            Repr::Terms { terms, disjoint } => {
                let t = terms.iter().map(|m| Monomial { coeff: m.coeff * c, ..*m }).collect();
                Self::terms(t, *disjoint, FieldKind::Scaled, format!("{c} * ({})", self.label))
            }
            _ => self.mul(&ScalarField::constant(c)),
        }
    }

    pub fn mul(&self, o: &ScalarField) -> Self {
        let label = format!("({}) * ({})", self.label, o.label);
        if let (Some((a, da)), Some((b, db))) = (self.as_terms(), o.as_terms()) {
            if a.len() * b.len() <= 4096 {
                let t = a.iter().flat_map(|x| b.iter().filter_map(move |y| x.product(y))).collect();
                return Self::terms(t, da && db, FieldKind::Product, label);
            }
        }
        ScalarField {
            repr: Arc::new(Repr::Product(self.clone(), o.clone())),
            kind: FieldKind::Product,
            label: label.into(),
        }
    }

    pub fn add(&self, o: &ScalarField) -> Self {
        let label = format!("{} + {}", self.label, o.label);
        if let (Some((a, _)), Some((b, _))) = (self.as_terms(), o.as_terms()) {
            let t: Vec<Monomial> = a.iter().chain(b.iter()).copied().collect();
            let (da, db) = (self.as_terms().unwrap().1, o.as_terms().unwrap().1);
            let disjoint = (a.is_empty() && db) || (b.is_empty() && da);
            return Self::terms(t, disjoint, FieldKind::Sum, label);
        }
        ScalarField { repr: Arc::new(Repr::Sum(self.clone(), o.clone())), kind: FieldKind::Sum, label: label.into() }
    }

    /// `f^e`, symbolic when the terms have disjoint supports.
    pub fn powf(&self, e: f64) -> Self {
        let label = format!("({})^{e}", self.label);
        if e == 1.0 {
            return self.clone();
        }
        if let Some((terms, disjoint)) = self.as_terms() {
            let bounded = terms.iter().any(|m| m.rect.is_some() || m.disk.is_some());
            if disjoint && (e > 0.0 || !bounded) {
                let t = terms
                    .iter()
                    .map(|m| Monomial {
                        coeff: m.coeff.powf(e),
                        abs_exp: m.abs_exp * e,
                        y_exp: m.y_exp * e,
                        ..*m
                    })
                    .collect();
                return Self::terms(t, true, self.kind, label);
            }
        }
        self.map(&label, e > 0.0, move |v| v.powf(e))
    }

    /// Pointwise `g(f)`. When `preserves_zero` holds (`g(0) = 0`) piecewise
    /// constant fields stay exactly integrable.
    pub fn map<G>(&self, label: &str, preserves_zero: bool, g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if preserves_zero {
            if let Some((terms, true)) = self.as_terms() {
                if terms.iter().all(|m| m.is_piecewise_constant() && m.rect.is_some()) {
                    let t = terms.iter().map(|m| Monomial { coeff: g(m.coeff), ..*m }).collect();
                    return Self::terms(t, true, self.kind, label.to_string());
                }
            }
        }
        ScalarField {
            repr: Arc::new(Repr::Map { inner: self.clone(), g: Arc::new(g), preserves_zero }),
            kind: FieldKind::Callable,
            label: label.into(),
        }
    }

    /// Bounding rectangle outside which the field vanishes, when known.
    pub fn support(&self) -> Option<Rect> {
        match &*self.repr {
            Repr::Terms { terms, .. } => {
                let mut acc: Option<Rect> = None;
                for m in terms {
                    let r = match (m.rect, m.disk) {
                        (Some(r), Some(d)) => r.intersect(&Rect::new(-d, d, 0.0, d))?,
                        (Some(r), None) => r,
                        (None, Some(d)) => Rect::new(-d, d, 0.0, d),
                        (None, None) => return None,
                    };
                    acc = Some(match acc {
                        None => r,
                        Some(a) => Rect::new(a.x0.min(r.x0), a.x1.max(r.x1), a.y0.min(r.y0), a.y1.max(r.y1)),
                    });
                }
                Some(acc.unwrap_or(Rect::new(0.0, 0.0, 0.0, 0.0)))
            }
            Repr::Callable { support, .. } => *support,
            Repr::Map { inner, preserves_zero, .. } => if *preserves_zero { inner.support() } else { None },
            Repr::Product(a, b) => match (a.support(), b.support()) {
                (Some(x), Some(y)) => Some(x.intersect(&y).unwrap_or(Rect::new(0.0, 0.0, 0.0, 0.0))),
                (x, y) => x.or(y),
            },
            Repr::Sum(a, b) => {
                let (x, y) = (a.support()?, b.support()?);
                Some(Rect::new(x.x0.min(y.x0), x.x1.max(y.x1), x.y0.min(y.y0), x.y1.max(y.y1)))
            }
        }
    }

    /// An upper bound of the field on `r`, when one is available.
    pub fn sup_bound(&self, r: &Rect) -> Option<f64> {
        match &*self.repr {
            Repr::Terms { terms, disjoint } => {
                let it = terms.iter().map(|m| m.sup_on(r));
                let v = if *disjoint { it.fold(0.0, f64::max) } else { it.sum() };
                v.is_finite().then_some(v)
            }
            Repr::Callable { sup, .. } => *sup,
            Repr::Map { .. } => None,
            Repr::Product(a, b) => Some(a.sup_bound(r)? * b.sup_bound(r)?),
            Repr::Sum(a, b) => Some(a.sup_bound(r)? + b.sup_bound(r)?),
        }
    }

    /// Coordinates where the field may be non-smooth, for the numeric engine.
    pub fn breakpoints(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        self.collect_breaks(&mut xs, &mut ys);
        for v in [&mut xs, &mut ys] {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
        }
        (xs, ys)
    }

    fn collect_breaks(&self, xs: &mut Vec<f64>, ys: &mut Vec<f64>) {
        match &*self.repr {
            Repr::Terms { terms, .. } => {
                for m in terms {
                    if let Some(r) = m.rect {
                        xs.extend([r.x0, r.x1]);
                        ys.extend([r.y0, r.y1]);
                    }
                    if let Some(d) = m.disk {
                        xs.extend([-d, 0.0, d]);
                        ys.push(d);
                    }
                    if m.abs_exp != 0.0 {
                        xs.push(0.0);
                    }
                }
            }
            Repr::Callable { support, .. } => {
                if let Some(r) = support {
                    xs.extend([r.x0, r.x1]);
                    ys.extend([r.y0, r.y1]);
                }
            }
            Repr::Map { inner, .. } => inner.collect_breaks(xs, ys),
            Repr::Product(a, b) | Repr::Sum(a, b) => {
                a.collect_breaks(xs, ys);
                b.collect_breaks(xs, ys);
            }
        }
    }

    /// Piecewise-constant cells `(rect, value)` when the field is a disjoint box sum.
    pub fn constant_cells(&self) -> Option<Vec<(Rect, f64)>> {
        let (terms, disjoint) = self.as_terms()?;
        if !disjoint || !terms.iter().all(|m| m.is_piecewise_constant() && m.rect.is_some()) {
            return None;
        }
        Some(terms.iter().map(|m| (m.rect.unwrap(), m.coeff)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_sum_is_disjoint_and_evaluates() {
        let f = ScalarField::box_sum(&[(Interval::new(0.0, 1.0), 1.0), (Interval::new(0.5, 1.0), 2.0)]);
        let (terms, disjoint) = f.as_terms().unwrap();
        assert!(disjoint);
        assert!(terms.len() >= 2);
        assert_eq!(f.eval(Point::new(0.75, 0.25)), 3.0);
        assert_eq!(f.eval(Point::new(0.75, 0.75)), 1.0);
        assert_eq!(f.eval(Point::new(0.25, 0.25)), 1.0);
        assert_eq!(f.eval(Point::new(1.5, 0.25)), 0.0);
        let g = f.powf(2.0);
        assert_eq!(g.eval(Point::new(0.75, 0.25)), 9.0);
        assert!(g.as_terms().is_some());
    }

    #[test]
    fn product_of_powers_is_symbolic() {
        let f = ScalarField::power_abs(-1.0).mul(&ScalarField::half_disk(1.0)).mul(&ScalarField::power_y(0.5));
        let (terms, _) = f.as_terms().unwrap();
        assert_eq!(terms.len(), 1);
        let z = Point::new(0.3, 0.4);
        assert!((f.eval(z) - 0.4f64.sqrt() / 0.5).abs() < 1e-14);
        assert_eq!(f.eval(Point::new(1.0, 1.0)), 0.0);
    }

    #[test]
    fn sup_bounds_dominate_samples() {
        let f = ScalarField::power_y(-0.5).mul(&ScalarField::box_indicator(Interval::new(0.0, 2.0)));
        let r = Rect::new(0.0, 1.0, 0.25, 1.0);
        let b = f.sup_bound(&r).unwrap();
        for k in 1..50 {
            let z = Point::new(k as f64 / 50.0, 0.25 + 0.75 * k as f64 / 50.0);
            assert!(f.eval(z) <= b + 1e-15);
        }
    }
}
