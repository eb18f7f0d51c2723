//! Maximal operators, positive operators and stopping-time decompositions.
//!
//! Every dyadic operator here is a functional of box integrals `∫_{Q_I} f dV_α`,
//! which are memoised in a [`Moments`] cache shared across threads.

use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{
    box_measure_alpha, boxes_containing, pow2, tile_scale, DyadicInterval, Interval, Point, Rect, ScaleWindow, Shift,
};
use crate::orlicz::{conj, luxembourg_norm, YoungFunction};
use crate::quadrature::{integrate_numeric, integrate_rect, BorelMeasure, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Params {
    pub fn new(p: f64, q: f64, alpha: f64, gamma: f64) -> Result<Self> {
        let pr = Params { p, q, alpha, gamma };
        pr.validate()?;
        Ok(pr)
    }

    /// `q` from `1/q = 1/p - γ/(2+α)`.
    pub fn critical(p: f64, alpha: f64, gamma: f64) -> Result<Self> {
        let inv = 1.0 / p - gamma / (2.0 + alpha);
        if !(inv > 0.0) {
            return Err(Error::InvalidInput(format!("no finite critical q for p={p}, α={alpha}, γ={gamma}")));
        }
        Self::new(p, 1.0 / inv, alpha, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > -1.0) {
            return Err(Error::Domain(format!("alpha must exceed -1, got {}", self.alpha)));
        }
        if !(self.p >= 1.0 && self.q >= self.p) {
            return Err(Error::InvalidInput(format!("need 1 <= p <= q, got p={}, q={}", self.p, self.q)));
        }
        if !(self.gamma >= 0.0 && self.gamma < 2.0 + self.alpha) {
            return Err(Error::InvalidInput(format!("need 0 <= γ < 2+α, got γ={}", self.gamma)));
        }
        Ok(())
    }

    pub fn is_critical(&self) -> bool {
        (1.0 / self.q - (1.0 / self.p - self.gamma / (2.0 + self.alpha))).abs() < 1e-12
    }

    /// `d = 2 + α - γ`.
    pub fn d(&self) -> f64 {
        2.0 + self.alpha - self.gamma
    }

    pub fn p_conj(&self) -> f64 {
        conj(self.p)
    }

    /// `1 - γ/(2+α)`.
    pub fn frac_exponent(&self) -> f64 {
        1.0 - self.gamma / (2.0 + self.alpha)
    }

    /// `C_{α,γ} = 2^{d}(1 + 2^{2d})` of the level-set embedding.
    pub fn level_set_constant(&self) -> f64 {
        let d = self.d();
        2f64.powf(d) * (1.0 + 2f64.powf(2.0 * d))
    }

    /// `((1 + p'/q) C_{α,γ})^{1 - γ/(2+α)}`.
    pub fn strong_constant(&self) -> f64 {
        ((1.0 + self.p_conj() / self.q) * self.level_set_constant()).powf(self.frac_exponent())
    }
}

fn rect_key(r: &Rect) -> [u64; 4] {
    [r.x0.to_bits(), r.x1.to_bits(), r.y0.to_bits(), r.y1.to_bits()]
}

/// Memoised rectangle integrals of one field against `dV_α`.
pub struct Moments {
    field: ScalarField,
    alpha: f64,
    spec: QuadratureSpec,
    cache: DashMap<[u64; 4], f64>,
}

impl std::fmt::Debug for Moments {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Moments({}, α={}, cached={})", self.field, self.alpha, self.cache.len())
    }
}

impl Moments {
    pub fn new(field: ScalarField, alpha: f64, spec: QuadratureSpec) -> Arc<Self> {
        Arc::new(Moments { field, alpha, spec, cache: DashMap::new() })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn rect(&self, r: &Rect) -> Result<f64> {
        let k = rect_key(r);
        if let Some(v) = self.cache.get(&k) {
            return Ok(*v);
        }
        let v = integrate_rect(&self.field, r, self.alpha, &self.spec)?.value;
        self.cache.insert(k, v);
        Ok(v)
    }

    pub fn interval(&self, iv: &Interval) -> Result<f64> {
        self.rect(&iv.carleson_box())
    }

    pub fn dyadic(&self, d: &DyadicInterval) -> Result<f64> {
        self.rect(&d.carleson_box())
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

/// How a fractional average is normalised.
#[derive(Debug, Clone)]
pub enum Normalization {
    /// `|I|^{2+α-γ}`
    SideLength,
    /// `|Q_I|_α^{1-γ/(2+α)}`
    AlphaMeasure,
    /// `|Q_I|_{σ,α}^{1-γ/(2+α)}` with the σ-moments given
    Weighted(Arc<Moments>),
}

/// `I ↦ normaliser(I)^{-1} ∫_{Q_I} g dV_α` with `g = f` or `g = fσ`.
#[derive(Debug, Clone)]
pub struct FractionalAverage {
    numerator: Arc<Moments>,
    bound_field: ScalarField,
    norm: Normalization,
    alpha: f64,
    gamma: f64,
}

impl FractionalAverage {
    pub fn new(f: &ScalarField, params: &Params, norm: Normalization, spec: &QuadratureSpec) -> Self {
        let numerator = match &norm {
            Normalization::Weighted(sigma) => Moments::new(f.mul(sigma.field()), params.alpha, *spec),
            _ => Moments::new(f.clone(), params.alpha, *spec),
        };
        FractionalAverage { numerator, bound_field: f.clone(), norm, alpha: params.alpha, gamma: params.gamma }
    }

    /// `|I|^{-(2+α-γ)} ∫_{Q_I} f dV_α`.
    pub fn side_length(f: &ScalarField, params: &Params, spec: &QuadratureSpec) -> Self {
        Self::new(f, params, Normalization::SideLength, spec)
    }

    pub fn alpha_measure(f: &ScalarField, params: &Params, spec: &QuadratureSpec) -> Self {
        Self::new(f, params, Normalization::AlphaMeasure, spec)
    }

    pub fn weighted(f: &ScalarField, sigma: &ScalarField, params: &Params, spec: &QuadratureSpec) -> Self {
        let sm = Moments::new(sigma.clone(), params.alpha, *spec);
        Self::new(f, params, Normalization::Weighted(sm), spec)
    }

    /// Reuse numerator moments already computed elsewhere.
    pub fn from_moments(numerator: Arc<Moments>, bound_field: ScalarField, norm: Normalization, gamma: f64) -> Self {
        let alpha = numerator.alpha();
        FractionalAverage { numerator, bound_field, norm, alpha, gamma }
    }

    pub fn numerator(&self) -> &Arc<Moments> {
        &self.numerator
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn exponent(&self) -> f64 {
        1.0 - self.gamma / (2.0 + self.alpha)
    }

    pub fn denominator_rect(&self, r: &Rect) -> Result<f64> {
        let len = r.width();
        Ok(match &self.norm {
            Normalization::SideLength => len.powf(2.0 + self.alpha - self.gamma),
            Normalization::AlphaMeasure => box_measure_alpha(len, self.alpha)?.powf(self.exponent()),
            Normalization::Weighted(s) => s.rect(r)?.powf(self.exponent()),
        })
    }

    /// The fractional average over the Carleson box with base `r.x0..r.x1`.
    pub fn value_rect(&self, r: &Rect) -> Result<f64> {
        let num = self.numerator.rect(r)?;
        if num == 0.0 {
            return Ok(0.0);
        }
        let den = self.denominator_rect(r)?;
        if den == 0.0 {
            return Err(Error::DegenerateBox(format!("{r:?}")));
        }
        Ok(num / den)
    }

    pub fn value(&self, d: &DyadicInterval) -> Result<f64> {
        self.value_rect(&d.carleson_box())
    }

    pub fn value_interval(&self, iv: &Interval) -> Result<f64> {
        self.value_rect(&iv.carleson_box())
    }

    /// Upper bound of the average over every sub-box `J ⊆ I`, when available.
    pub fn subtree_bound(&self, d: &DyadicInterval) -> Result<Option<f64>> {
        let r = d.carleson_box();
        if self.numerator.rect(&r)? == 0.0 {
            return Ok(Some(0.0));
        }
        let Some(sup) = self.bound_field.sup_bound(&r) else { return Ok(None) };
        let e = self.gamma / (2.0 + self.alpha);
        Ok(Some(match &self.norm {
            Normalization::SideLength => sup * d.len().powf(self.gamma) / (1.0 + self.alpha),
            Normalization::AlphaMeasure => sup * box_measure_alpha(d.len(), self.alpha)?.powf(e),
            Normalization::Weighted(s) => sup * s.rect(&r)?.powf(e),
        }))
    }
}

/// `max_{I ∈ chain(z)} avg(I)` over one grid.
pub fn dyadic_maximal(avg: &FractionalAverage, shift: Shift, z: Point, w: &ScaleWindow) -> Result<f64> {
    let mut m = 0.0f64;
    for d in boxes_containing(z, shift, w) {
        m = m.max(avg.value(&d)?);
    }
    Ok(m)
}

/// `M^{d,β}_{α,γ} f(z)` with the `|I|^{2+α-γ}` normalisation.
pub fn dyadic_fractional_maximal(
    f: &ScalarField,
    params: &Params,
    shift: Shift,
    z: Point,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<f64> {
    dyadic_maximal(&FractionalAverage::side_length(f, params, spec), shift, z, w)
}

/// `M^{d,β}_{σ,α,γ} f(z)`, normalised by `|Q_I|_{σ,α}^{1-γ/(2+α)}`.
pub fn weighted_fractional_maximal(
    f: &ScalarField,
    sigma: &ScalarField,
    params: &Params,
    shift: Shift,
    z: Point,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<f64> {
    dyadic_maximal(&FractionalAverage::weighted(f, sigma, params, spec), shift, z, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

/// Lattice intervals of length `2^j` with left endpoints on `2^{j-density}ℤ` containing `x`.
fn lattice_containing(x: f64, j: i32, density: u32) -> impl Iterator<Item = Rect> {
    let len = pow2(j);
    let s = pow2(j - density as i32);
    let k_hi = (x / s).floor() as i64;
    let k_lo = k_hi - (1i64 << density) + 1;
    (k_lo..=k_hi).filter_map(move |k| {
        let a = k as f64 * s;
        (a <= x && x < a + len).then(|| Rect::new(a, a + len, 0.0, len))
    })
}

/// Two-sided bracket of the full fractional maximal function at `z`:
/// lower from a non-dyadic lattice search over the window scales, upper from
/// `6^{2+α-γ} Σ_β M^{d,β}` over the window raised by three scales.
pub fn fractional_maximal_bracket(
    f: &Moments,
    params: &Params,
    z: Point,
    w: &ScaleWindow,
    density: u32,
) -> Result<Bracket> {
    let d = params.d();
    let start = tile_scale(z.y).max(w.j_min);
    let mut lower = 0.0f64;
    for j in start..=w.j_max {
        for r in lattice_containing(z.x, j, density) {
            if z.y < r.y1 {
                let v = f.rect(&r)?;
                lower = lower.max(v / r.width().powf(d));
            }
        }
    }
    let wide = w.raise(3);
    let mut sum = 0.0;
    for shift in Shift::ALL {
        let mut m = 0.0f64;
        for b in boxes_containing(z, shift, &wide) {
            m = m.max(f.dyadic(&b)? / b.len().powf(d));
        }
        sum += m;
    }
    Ok(Bracket { lower, upper: 6f64.powf(d) * sum })
}

/// `max_{chain} exp(|Q_I|_α^{-1} ∫_{Q_I} log f dV_α)`.
pub fn exp_maximal(
    f: &ScalarField,
    alpha: f64,
    shift: Shift,
    z: Point,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut m = 0.0f64;
    for d in boxes_containing(z, shift, w) {
        match log_box_integral(f, &d.carleson_box(), alpha, spec) {
            Ok(v) => m = m.max((v / box_measure_alpha(d.len(), alpha)?).exp()),
            Err(Error::LogSingular(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(m)
}

/// `∫_R log f dV_α`; `LogSingular` when it diverges to `-∞`.
pub fn log_box_integral(f: &ScalarField, r: &Rect, alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    let area = r.measure_alpha(alpha);
    if let Some((terms, _)) = f.as_terms() {
        if let [m] = terms {
            if m.abs_exp == 0.0 && m.disk.is_none() && m.coeff > 0.0 {
                let covered = m.rect.map_or(true, |c| c.intersect(r).map_or(false, |i| i == *r));
                if !covered {
                    return Err(Error::LogSingular(format!("{r:?}")));
                }
                // ∫ y^α ln y dy = y^{α+1}(ln y/(α+1) - 1/(α+1)²)
                let a1 = alpha + 1.0;
                let prim = |y: f64| if y == 0.0 { 0.0 } else { y.powf(a1) * (y.ln() / a1 - 1.0 / (a1 * a1)) };
                let logy = r.width() * (prim(r.y1) - prim(r.y0));
                return Ok(m.coeff.ln() * area + m.y_exp * logy);
            }
        }
    }
    if let Some(cells) = f.constant_cells() {
        let mut covered = 0.0;
        let mut acc = 0.0;
        for (c, v) in cells {
            if let Some(i) = c.intersect(r) {
                let m = i.measure_alpha(alpha);
                if v <= 0.0 && m > 0.0 {
                    return Err(Error::LogSingular(format!("{r:?}")));
                }
                covered += m;
                acc += v.ln() * m;
            }
        }
        if covered < area * (1.0 - 1e-12) {
            return Err(Error::LogSingular(format!("{r:?}")));
        }
        return Ok(acc);
    }
    let (bx, by) = f.breakpoints();
    let g = |z: Point| f.eval(z).ln();
    match integrate_numeric(&g, r, alpha, &bx, &by, spec) {
        Ok(e) if e.value.is_finite() => Ok(e.value),
        Ok(_) | Err(Error::NonIntegrable(_)) => Err(Error::LogSingular(format!("{r:?}"))),
        Err(e) => Err(e),
    }
}

/// `max_{chain} ‖f‖_{Q_I,Φ,α}`.
pub fn orlicz_maximal(
    f: &ScalarField,
    phi: &YoungFunction,
    alpha: f64,
    shift: Shift,
    z: Point,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut m = 0.0f64;
    for d in boxes_containing(z, shift, w) {
        m = m.max(luxembourg_norm(f, &d.interval(), phi, alpha, spec)?);
    }
    Ok(m)
}

/// `T_{α,γ} f(z) = ∫ f(w) |z - w̄|^{-(2+α-γ)} dV_α(w)`; `f` must have bounded
/// support (or is clipped to the window strip).
pub fn bergman_positive(
    f: &ScalarField,
    params: &Params,
    z: Point,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let d = params.d();
    let kernel = move |u: Point| {
        let dx = z.x - u.x;
        let dy = z.y + u.y;
        (dx * dx + dy * dy).powf(-0.5 * d)
    };
    if let Some(cells) = f.constant_cells() {
        let mut acc = 0.0;
        for (c, v) in cells {
            acc += v * integrate_numeric(&kernel, &c, params.alpha, &[], &[], spec)?.value;
        }
        return Ok(acc);
    }
    let strip = Rect::new(w.x_lo, w.x_hi, 0.0, pow2(w.j_max));
    let support = f.support().unwrap_or(strip);
    let (bx, by) = f.breakpoints();
    let g = |u: Point| {
        let v = f.eval(u);
        if v == 0.0 {
            0.0
        } else {
            v * kernel(u)
        }
    };
    Ok(integrate_numeric(&g, &support, params.alpha, &bx, &by, spec)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveSum {
    pub value: f64,
    pub tail_flag: bool,
}

/// `Q^β_{α,γ} f(z) = Σ_{I ∈ chain(z)} |I|^{-(2+α-γ)} ∫_{Q_I} f dV_α`.
pub fn dyadic_positive_operator(
    f: &Moments,
    params: &Params,
    shift: Shift,
    z: Point,
    w: &ScaleWindow,
) -> Result<PositiveSum> {
    let d = params.d();
    let mut sum = 0.0;
    let mut last = 0.0;
    for b in boxes_containing(z, shift, w) {
        last = f.dyadic(&b)? / b.len().powf(d);
        sum += last;
    }
    let tail_flag = sum > 0.0 && last > f.spec().tail_tol * sum;
    Ok(PositiveSum { value: sum, tail_flag })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingFamily {
    pub shift: Shift,
    pub lambda: f64,
    /// generation parameter `a` of the level sweep that produced this family
    pub generation: f64,
    pub members: Vec<(DyadicInterval, f64)>,
}

/// Maximal window intervals whose fractional average exceeds `λ`, found by a
/// coarse-to-fine sweep that stops at the first hit on each branch.
pub fn stopping_intervals(
    avg: &FractionalAverage,
    shift: Shift,
    lambda: f64,
    w: &ScaleWindow,
) -> Result<StoppingFamily> {
    let roots = w.roots(shift);
    for r in &roots {
        let v = avg.value(r)?;
        if v > lambda {
            return Err(Error::WindowTooSmall { top: v, lambda });
        }
    }
    let range = w.range();
    let mut members = Vec::new();
    let mut stack: Vec<DyadicInterval> = roots.into_iter().rev().collect();
    while let Some(d) = stack.pop() {
        if let Some(b) = avg.subtree_bound(&d)? {
            if b <= lambda {
                continue;
            }
        }
        let v = avg.value(&d)?;
        if v > lambda {
            members.push((d, v));
            continue;
        }
        if d.scale > w.j_min {
            let [a, b] = d.children();
            for c in [b, a] {
                if c.intersects(&range) {
                    stack.push(c);
                }
            }
        }
    }
    Ok(StoppingFamily { shift, lambda, generation: f64::NAN, members })
}

/// Stopping families at thresholds `a^k`, `k ∈ ks`; default `a = 2^{2+α-γ}`.
pub fn level_set_sweep(
    avg: &FractionalAverage,
    shift: Shift,
    w: &ScaleWindow,
    a: f64,
    ks: std::ops::RangeInclusive<i32>,
) -> Result<Vec<(i32, StoppingFamily)>> {
    let mut out = Vec::new();
    for k in ks {
        match stopping_intervals(avg, shift, a.powi(k), w) {
            Ok(mut fam) => {
                fam.generation = a;
                out.push((k, fam));
            }
            Err(Error::WindowTooSmall { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `μ(∪ Q_{I_j})` over the stopping family at `λ` (disjoint boxes).
pub fn superlevel_measure(
    avg: &FractionalAverage,
    shift: Shift,
    lambda: f64,
    mu: &BorelMeasure,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let fam = stopping_intervals(avg, shift, lambda, w)?;
    let mut s = 0.0;
    for (d, _) in &fam.members {
        s += mu.of_rect(&d.carleson_box(), spec)?;
    }
    Ok(s)
}

/// Largest fractional average over the window, by branch and bound.
pub fn window_max_average(avg: &FractionalAverage, shift: Shift, w: &ScaleWindow) -> Result<(f64, Option<DyadicInterval>)> {
    let range = w.range();
    let mut best = 0.0f64;
    let mut arg = None;
    let mut stack: Vec<DyadicInterval> = w.roots(shift).into_iter().rev().collect();
    while let Some(d) = stack.pop() {
        if let Some(b) = avg.subtree_bound(&d)? {
            if b <= best {
                continue;
            }
        }
        let v = avg.value(&d)?;
        if v > best {
            best = v;
            arg = Some(d);
        }
        if d.scale > w.j_min {
            let [a, b] = d.children();
            for c in [b, a] {
                if c.intersects(&range) {
                    stack.push(c);
                }
            }
        }
    }
    Ok((best, arg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerCake {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub levels: usize,
    pub tail_flag: bool,
}

/// `‖M^{d,β} f‖_{L^q(μ)}` by the layer-cake formula on a geometric λ grid of
/// the given ratio, each level from a stopping family.
pub fn lq_norm_layer_cake(
    avg: &FractionalAverage,
    shift: Shift,
    mu: &BorelMeasure,
    q: f64,
    w: &ScaleWindow,
    ratio: f64,
    spec: &QuadratureSpec,
) -> Result<LayerCake> {
    let (top, _) = window_max_average(avg, shift, w)?;
    if top == 0.0 {
        return Ok(LayerCake { value: 0.0, lower: 0.0, upper: 0.0, levels: 0, tail_flag: false });
    }
    let mut floor = 0.0f64;
    for r in w.roots(shift) {
        floor = floor.max(avg.value(&r)?);
    }
    let floor = floor.max(top * 1e-300);
    let mut lam = top;
    let mut m_prev = 0.0; // μ{M > top} = 0
    let (mut lo, mut hi, mut mid) = (0.0, 0.0, 0.0);
    let mut levels = 0;
    loop {
        let next = lam / ratio;
        if next <= floor {
            break;
        }
        let m = superlevel_measure(avg, shift, next, mu, w, spec)?;
        let slab = lam.powf(q) - next.powf(q);
        lo += slab * m_prev;
        hi += slab * m;
        mid += slab * 0.5 * (m_prev + m);
        m_prev = m;
        lam = next;
        levels += 1;
    }
    let tail = lam.powf(q) * m_prev;
    lo += tail;
    hi += tail;
    mid += tail;
    let tail_flag = tail > spec.tail_tol * mid;
    Ok(LayerCake { value: mid.powf(1.0 / q), lower: lo.powf(1.0 / q), upper: hi.powf(1.0 / q), levels, tail_flag })
}

/// Regions on which `M^{d,β}` (window-truncated) is constant, with its value:
/// top halves of window intervals, whole boxes at the finest scale or where
/// the average can no longer grow.
pub fn tile_values(avg: &FractionalAverage, shift: Shift, w: &ScaleWindow) -> Result<Vec<(Rect, f64)>> {
    let range = w.range();
    let mut out = Vec::new();
    let mut stack: Vec<(DyadicInterval, f64)> = w.roots(shift).into_iter().rev().map(|d| (d, 0.0)).collect();
    while let Some((d, above)) = stack.pop() {
        if let Some(b) = avg.subtree_bound(&d)? {
            if b <= above {
                out.push((d.carleson_box(), above));
                continue;
            }
        }
        let m = above.max(avg.value(&d)?);
        if d.scale == w.j_min {
            out.push((d.carleson_box(), m));
            continue;
        }
        out.push((d.top_half(), m));
        let [a, b] = d.children();
        for c in [b, a] {
            if c.intersects(&range) {
                stack.push((c, m));
            } else {
                // outside the horizontal range the chain stops growing
                out.push((c.carleson_box(), m));
            }
        }
    }
    Ok(out)
}

/// `‖M^{d,β} f‖_{L^q(μ)}` exactly, summing over the regions of [`tile_values`].
pub fn lq_norm_tiles(
    avg: &FractionalAverage,
    shift: Shift,
    mu: &BorelMeasure,
    q: f64,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut s = 0.0;
    for (r, v) in tile_values(avg, shift, w)? {
        if v > 0.0 {
            s += v.powf(q) * mu.of_rect(&r, spec)?;
        }
    }
    Ok(s.powf(1.0 / q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongBound {
    /// `‖M^{d,0} f‖_{q,α}` over the window (exact tile sum), a lower bound for `‖M f‖`
    pub lower: f64,
    /// certified upper bound for `‖M_{α,γ} f‖_{q,α}` over all of ℋ
    pub upper: f64,
    /// part of `upper^q` contributed by the analytic outer tail
    pub tail_share: f64,
}

/// Certified upper bound for `‖M_{α,γ} f‖_{q,α}` (supremum over all intervals,
/// `|I|^{2+α-γ}` normalisation) for `f` supported inside the window strip.
///
/// Any interval `I` with `|I| = L` lies in a lattice interval `J` of length
/// `2^j` with left endpoint on `2^{j-k}ℤ` and `|J| < ρL`, `ρ = 2/(1 - 2^{-k})`.
/// On each Whitney cell this bounds `M f` by `ρ^d` times the largest lattice
/// average meeting the cell; beyond the window `M f(z) <= ‖f‖_1 / max(y, dist)^d`
/// is integrated in closed form.
pub fn strong_norm_bounds(f: &Arc<Moments>, params: &Params, w: &ScaleWindow, density: u32) -> Result<StrongBound> {
    let (alpha, q, d) = (params.alpha, params.q, params.d());
    let supp = f
        .field()
        .support()
        .ok_or_else(|| Error::InvalidInput("strong bound needs a boundedly supported f".into()))?;
    let top = pow2(w.j_max);
    if !(supp.x0 > w.x_lo && supp.x1 < w.x_hi && supp.y1 <= top) {
        return Err(Error::InvalidInput(format!("support {supp:?} not inside window {w:?}")));
    }
    let l1 = f.rect(&supp)?;
    if l1 == 0.0 {
        return Ok(StrongBound { lower: 0.0, upper: 0.0, tail_share: 0.0 });
    }
    let shrink = 1.0 - pow2(-(density as i32));
    let rho_d = (2.0 / shrink).powf(d);
    let j_top = w.j_max + 2;
    let big = l1 / (pow2(j_top) * shrink).powf(d);
    // lattice average lookups, memoised through the moments cache
    let lattice_max = |x0: f64, x1: f64, y0: f64| -> Result<f64> {
        let mut m = 0.0f64;
        let j_start = if y0 > 0.0 { y0.log2().floor() as i32 } else { w.j_min - 1 };
        for j in j_start..=j_top {
            let len = pow2(j);
            if len <= y0 {
                continue;
            }
            let s = pow2(j - density as i32);
            // J = [ks, ks+len) meets [x0, x1) and the support's x-range
            let lo_k = ((x0 - len) / s).floor() as i64 + 1;
            let hi_k = (x1 / s).ceil() as i64 - 1;
            let lo_k = lo_k.max(((supp.x0 - len) / s).floor() as i64 + 1);
            let hi_k = hi_k.min((supp.x1 / s).ceil() as i64 - 1);
            for k in lo_k..=hi_k {
                let l = k as f64 * s;
                let r = Rect::new(l, l + len, 0.0, len);
                let v = f.rect(&r)?;
                if v > 0.0 {
                    m = m.max(v / len.powf(d));
                }
            }
        }
        Ok(m)
    };
    // small intervals at the bottom of the mesh: avg <= sup f · L^γ/(1+α)
    let bottom = pow2(w.j_min - 1);
    let mut sum_q = 0.0;
    let tiles = w.intervals(Shift::Zero);
    let contributions: Vec<Result<f64>> = {
        use rayon::prelude::*;
        tiles
            .par_iter()
            .map(|t| -> Result<f64> {
                let (x0, x1) = (t.left(), t.right());
                let mut c = {
                    let r = t.top_half();
                    let u = (rho_d * lattice_max(x0, x1, r.y0)?).max(big);
                    u.powf(q) * r.measure_alpha(alpha)
                };
                if t.scale == w.j_min {
                    let r = Rect::new(x0, x1, 0.0, bottom);
                    let near = Rect::new(x0 - bottom, x1 + bottom, 0.0, bottom);
                    let small = match f.field().sup_bound(&near) {
                        Some(s) => s * bottom.powf(params.gamma) / (1.0 + alpha),
                        None => f64::INFINITY,
                    };
                    let u = (rho_d * lattice_max(x0, x1, 0.0)?).max(big).max(small);
                    c += u.powf(q) * r.measure_alpha(alpha);
                }
                Ok(c)
            })
            .collect()
    };
    for c in contributions {
        sum_q += c?;
    }
    // the mesh covers [x_lo', x_hi') × (0, top) where the primes are the outer tile edges
    let dq = d * q;
    let width = supp.x1 - supp.x0;
    let top_part = width * top.powf(alpha - dq + 1.0) / (dq - alpha - 1.0)
        + 2.0 * top.powf(2.0 + alpha - dq) / (dq - alpha - 2.0)
        + 2.0 / (dq - 1.0) * top.powf(2.0 + alpha - dq) / (dq - 2.0 - alpha);
    let d0 = (supp.x0 - w.x_lo).min(w.x_hi - supp.x1);
    let side_part = 2.0 * d0.powf(1.0 - dq) / (dq - 1.0) * top.powf(1.0 + alpha) / (1.0 + alpha);
    let tail = l1.powf(q) * (top_part + side_part);
    let upper = (sum_q + tail).powf(1.0 / q);
    let avg = FractionalAverage::from_moments(f.clone(), f.field().clone(), Normalization::SideLength, params.gamma);
    let lower = lq_norm_tiles(&avg, Shift::Zero, &BorelMeasure::lebesgue(alpha), q, w, f.spec())?;
    Ok(StrongBound { lower, upper, tail_share: tail / (sum_q + tail) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn unit_box() -> ScalarField {
        ScalarField::box_indicator(Interval::new(0.0, 1.0))
    }

    #[test]
    fn constants() {
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(p.level_set_constant(), 68.0);
        assert_relative_eq!(p.strong_constant(), 136.0, max_relative = 1e-14);
        let c = Params::critical(2.0, 0.0, 0.5).unwrap();
        assert_relative_eq!(c.q, 4.0, max_relative = 1e-14);
        let want = (1.5 * 2f64.powf(1.5) * 9.0f64).powf(0.75);
        let k = 2f64.powf(1.5) * (1.0 + 2f64.powf(3.0));
        assert_relative_eq!(c.level_set_constant(), k, max_relative = 1e-14);
        assert_relative_eq!(c.strong_constant(), want, max_relative = 1e-14);
    }

    #[test]
    fn dyadic_maximal_examples() {
        let w = ScaleWindow::new(-6, 6, -64.0, 64.0).unwrap();
        let z = Point::new(0.5, 0.25);
        let p0 = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let v = dyadic_fractional_maximal(&unit_box(), &p0, Shift::Zero, z, &w, &spec()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        let p1 = Params::new(2.0, 2.0, 0.0, 1.0).unwrap();
        let v = dyadic_fractional_maximal(&unit_box(), &p1, Shift::Zero, z, &w, &spec()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        let half = FractionalAverage::side_length(&unit_box(), &p1, &spec());
        assert_relative_eq!(half.value(&DyadicInterval::new(-1, 1, Shift::Zero)).unwrap(), 0.5);
        assert_eq!(dyadic_fractional_maximal(&ScalarField::zero(), &p0, Shift::Zero, z, &w, &spec()).unwrap(), 0.0);
    }

    #[test]
    fn weighted_with_unit_weight_is_rescaled_hl() {
        let w = ScaleWindow::new(-6, 4, -16.0, 16.0).unwrap();
        let z = Point::new(0.5, 0.25);
        let f = ScalarField::box_sum(&[(Interval::new(0.0, 1.0), 1.0), (Interval::new(0.25, 0.5), 2.0)]);
        for alpha in [0.0, 1.0] {
            let p = Params::new(2.0, 2.0, alpha, 0.0).unwrap();
            let a = weighted_fractional_maximal(&f, &ScalarField::constant(1.0), &p, Shift::Zero, z, &w, &spec()).unwrap();
            let b = dyadic_fractional_maximal(&f, &p, Shift::Zero, z, &w, &spec()).unwrap();
            assert_relative_eq!(a, (1.0 + alpha) * b, max_relative = 1e-13);
        }
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let v = weighted_fractional_maximal(&unit_box(), &ScalarField::constant(1.0), &p, Shift::Zero, z, &w, &spec()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn bracket_examples() {
        let w = ScaleWindow::new(-6, 4, -16.0, 16.0).unwrap();
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let m = Moments::new(unit_box(), 0.0, spec());
        let b = fractional_maximal_bracket(&m, &p, Point::new(0.5, 0.25), &w, 3).unwrap();
        assert!(b.lower >= 1.0 - 1e-14);
        assert!(b.upper >= b.lower);
        let z = Moments::new(ScalarField::zero(), 0.0, spec());
        let b = fractional_maximal_bracket(&z, &p, Point::new(0.5, 0.25), &w, 3).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
    }

    #[test]
    fn exp_maximal_examples() {
        let w = ScaleWindow::new(-4, 0, 0.0, 1.0).unwrap();
        let c = exp_maximal(&ScalarField::constant(2.5), 0.0, Shift::Zero, Point::new(0.3, 0.1), &w, &spec()).unwrap();
        assert_relative_eq!(c, 2.5, max_relative = 1e-12);
        let w0 = ScaleWindow::new(0, 0, 0.0, 1.0).unwrap();
        let v = exp_maximal(&ScalarField::power_y(1.0), 0.0, Shift::Zero, Point::new(0.3, 0.9), &w0, &spec()).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-7);
    }

    #[test]
    fn orlicz_maximal_examples() {
        let w = ScaleWindow::new(-4, 3, -8.0, 8.0).unwrap();
        let phi = YoungFunction::power(2.0).unwrap();
        let v = orlicz_maximal(&unit_box(), &phi, 0.0, Shift::Zero, Point::new(0.5, 0.25), &w, &spec()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
        let v = orlicz_maximal(&ScalarField::constant(3.0), &phi, 0.0, Shift::Zero, Point::new(0.5, 0.25), &w, &spec()).unwrap();
        assert_relative_eq!(v, 3.0, max_relative = 1e-9);
    }

    #[test]
    fn positive_operator_example() {
        let w = ScaleWindow::new(-6, 8, -256.0, 256.0).unwrap();
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let m = Moments::new(unit_box(), 0.0, spec());
        let s = dyadic_positive_operator(&m, &p, Shift::Zero, Point::new(0.5, 0.25), &w).unwrap();
        let want = 2.0 + (1..=8).map(|k| 4f64.powi(-k)).sum::<f64>();
        assert_relative_eq!(s.value, want, max_relative = 1e-14);
        assert!(!s.tail_flag);
    }

    /// Independent oracle: tensor Simpson rule on a fine grid for the kernel
    /// integral at `0.5 + 0.5i` over `Q_[0,1)`.
    #[test]
    fn bergman_against_simpson_oracle() {
        let n = 400;
        let h = 1.0 / n as f64;
        let wgt = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let mut s = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let (x, y) = (i as f64 * h, j as f64 * h);
                s += wgt(i) * wgt(j) / ((0.5 - x).powi(2) + (0.5 + y).powi(2));
            }
        }
        let oracle = s * h * h / 9.0;
        let w = ScaleWindow::new(-4, 2, -4.0, 4.0).unwrap();
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let v = bergman_positive(&unit_box(), &p, Point::new(0.5, 0.5), &w, &spec()).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-8);
        assert_eq!(bergman_positive(&ScalarField::zero(), &p, Point::new(0.5, 0.5), &w, &spec()).unwrap(), 0.0);
    }

    #[test]
    fn stopping_examples() {
        let w = ScaleWindow::new(-6, 6, -64.0, 64.0).unwrap();
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let avg = FractionalAverage::side_length(&unit_box(), &p, &spec());
        let fam = stopping_intervals(&avg, Shift::Zero, 0.5, &w).unwrap();
        assert_eq!(fam.members.len(), 1);
        assert_eq!(fam.members[0].0, DyadicInterval::new(0, 0, Shift::Zero));
        assert!(stopping_intervals(&avg, Shift::Zero, 2.0, &w).unwrap().members.is_empty());
        assert!(matches!(stopping_intervals(&avg, Shift::Zero, 1e-9, &w), Err(Error::WindowTooSmall { .. })));
        let mu = BorelMeasure::lebesgue(0.0);
        assert_relative_eq!(superlevel_measure(&avg, Shift::Zero, 0.5, &mu, &w, &spec()).unwrap(), 1.0);
        assert_eq!(superlevel_measure(&avg, Shift::Zero, 2.0, &mu, &w, &spec()).unwrap(), 0.0);
    }

    #[test]
    fn layer_cake_matches_tile_sum() {
        let w = ScaleWindow::new(-7, 5, -32.0, 32.0).unwrap();
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let f = ScalarField::box_sum(&[(Interval::new(0.0, 1.0), 1.0), (Interval::new(0.25, 0.375), 3.0)]);
        let avg = FractionalAverage::alpha_measure(&f, &p, &spec());
        let mu = BorelMeasure::lebesgue(0.0);
        let exact = lq_norm_tiles(&avg, Shift::Zero, &mu, 2.0, &w, &spec()).unwrap();
        let lc = lq_norm_layer_cake(&avg, Shift::Zero, &mu, 2.0, &w, 2f64.powf(0.125), &spec()).unwrap();
        assert!(lc.lower <= exact * (1.0 + 1e-12) && exact <= lc.upper * (1.0 + 1e-12));
        assert_relative_eq!(lc.value, exact, max_relative = 2e-2);
        // box indicator: ‖M χ_Q‖² = |Q|·(1 + Σ 4^{-k}·...) computed directly on the mesh
        let one = FractionalAverage::alpha_measure(&unit_box(), &p, &spec());
        let v = lq_norm_tiles(&one, Shift::Zero, &mu, 2.0, &w, &spec()).unwrap();
        let direct: f64 = 1.0 + (1..=5).map(|k| 4f64.powi(-2 * k) * (4f64.powi(k) - 4f64.powi(k - 1))).sum::<f64>();
        assert_relative_eq!(v * v, direct, max_relative = 1e-12);
    }

    #[test]
    fn strong_bound_brackets_the_tile_norm() {
        let w = ScaleWindow::new(-6, 3, -4.0, 4.0).unwrap();
        let p = Params::critical(2.0, 0.0, 0.5).unwrap();
        let m = Moments::new(unit_box(), 0.0, spec());
        let b = strong_norm_bounds(&m, &p, &w, 3).unwrap();
        assert!(b.lower <= b.upper);
        assert!(b.upper < 10.0 * b.lower, "{b:?}");
    }
}
