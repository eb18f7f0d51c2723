//! Integration of fields against `dV_α = y^α dx dy`.
//!
//! Monomial fields are integrated exactly: separable terms through closed-form
//! `y`-moments, terms carrying `|z|^s` or a half-disk through a polar reduction
//! whose radial integral is closed-form and whose angular integral is done by
//! adaptive Gauss–Kronrod. Everything else goes through a tensor
//! Gauss–Legendre rule on geometric strips toward `y = 0`, with the bottom
//! strip mapped by `y = h·u^{1/(1+α)}` so the weight is absorbed exactly.

use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Monomial, Repr, ScalarField};
use crate::geometry::{whitney_cells, Interval, Point, Rect, ScaleWindow, Shift};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub nodes_per_axis: usize,
    /// Fraction of a windowed total above which the outermost shell raises the tail flag.
    pub tail_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-14, max_depth: 12, nodes_per_axis: 8, tail_tol: 1e-3 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) || self.nodes_per_axis < 2 {
            return Err(Error::InvalidInput(format!("bad quadrature spec {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, err: self.err + o.err }
    }
}

// 21-point Kronrod nodes on [-1, 1] (non-negative half) and weights, with the
// embedded 10-point Gauss weights at the odd-indexed nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208814791355,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for i in 0..10 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Estimate { value: k * h, err: ((k - g) * h).abs() }
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.est.err == o.est.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.est.err.total_cmp(&o.est.err)
    }
}

/// Globally adaptive 21-point Gauss–Kronrod over `[a, b]` with initial breaks.
pub fn adaptive_1d<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut total = Estimate::default();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let est = gk21(f, w[0], w[1]);
            total = total + est;
            heap.push(Panel { a: w[0], b: w[1], est });
        }
    }
    let mut panels = heap.len();
    loop {
        let tol = abs_tol.max(rel_tol * total.value.abs());
        if total.err <= tol {
            break;
        }
        if !total.value.is_finite() {
            return Err(Error::NonIntegrable("non-finite integrand value".into()));
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if panels >= max_panels || !(p.a < m && m < p.b) {
            heap.push(p);
            // Accept a tiny residual well below the requested tolerance scale.
            if total.err <= 1e3 * tol {
                break;
            }
            return Err(Error::NonConvergent { err: total.err, tol, context: format!("1-D panel [{a}, {b}]", a = breaks[0], b = breaks[breaks.len() - 1]) });
        }
        let l = gk21(f, p.a, m);
        let r = gk21(f, m, p.b);
        total.value += l.value + r.value - p.est.value;
        total.err += l.err + r.err - p.est.err;
        heap.push(Panel { a: p.a, b: m, est: l });
        heap.push(Panel { a: m, b: p.b, est: r });
        panels += 1;
    }
    // Re-sum to shed accumulated cancellation in the running total.
    let mut v: Vec<_> = heap.into_vec();
    v.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = v.iter().map(|p| p.est.value).sum();
    let err = v.iter().map(|p| p.est.err).sum();
    Ok(Estimate { value, err })
}

/// `∫_a^b y^k dy`, exact.
pub fn y_moment(a: f64, b: f64, k: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    if k == -1.0 {
        if a <= 0.0 {
            return Err(Error::NonIntegrable("y^-1 at y = 0".into()));
        }
        return Ok((b / a).ln());
    }
    if a <= 0.0 && k < -1.0 {
        return Err(Error::NonIntegrable(format!("y^{k} at y = 0")));
    }
    let e = k + 1.0;
    Ok((b.powf(e) - if a > 0.0 { a.powf(e) } else { 0.0 }) / e)
}

/// `∫_0^π sin^β θ dθ` by adaptive quadrature with the endpoint substitution.
pub fn sine_moment(beta: f64) -> Result<f64> {
    if beta <= -1.0 {
        return Err(Error::NonIntegrable(format!("sin^{beta} at the axis")));
    }
    // symmetric: twice the integral over [0, π/2]
    let h = 0.5 * PI;
    let g = move |u: f64| {
        let t = h * u.powf(1.0 / (1.0 + beta));
        if t == 0.0 {
            1.0
        } else {
            (t.sin() / t).powf(beta)
        }
    };
    let e = adaptive_1d(&g, &[0.0, 0.5, 1.0], 1e-14, 1e-300, 2000)?;
    Ok(2.0 * e.value * h.powf(1.0 + beta) / (1.0 + beta))
}

/// `∫_θa^θb sin^β θ · G(θ) dθ` with an exact treatment of `θ^β` at 0 or π.
fn angular<F: Fn(f64) -> f64>(g: &F, beta: f64, a: f64, b: f64, rel: f64, abs: f64) -> Result<Estimate> {
    let singular = beta != beta.round() || beta < 0.0;
    let sb = |t: f64| t.sin().powf(beta);
    if singular && a == 0.0 {
        let h = b;
        let e = 1.0 / (1.0 + beta);
        let f = |u: f64| {
            let t = h * u.powf(e);
            if t <= 0.0 {
                return 0.0;
            }
            (t.sin() / t).powf(beta) * g(t)
        };
        let r = adaptive_1d(&f, &[0.0, 0.5, 1.0], rel, abs, 4000)?;
        let s = h.powf(1.0 + beta) / (1.0 + beta);
        return Ok(Estimate { value: r.value * s, err: r.err * s });
    }
    if singular && b == PI {
        let h = PI - a;
        let e = 1.0 / (1.0 + beta);
        let f = |u: f64| {
            let p = h * u.powf(e);
            if p <= 0.0 {
                return 0.0;
            }
            (p.sin() / p).powf(beta) * g(PI - p)
        };
        let r = adaptive_1d(&f, &[0.0, 0.5, 1.0], rel, abs, 4000)?;
        let s = h.powf(1.0 + beta) / (1.0 + beta);
        return Ok(Estimate { value: r.value * s, err: r.err * s });
    }
    let f = |t: f64| sb(t) * g(t);
    adaptive_1d(&f, &[a, b], rel, abs, 4000)
}

/// Radial extent `[r_lo, r_hi]` of the ray at angle `θ` inside `rect ∩ {|z| <= radius}`.
fn ray_extent(r: &Rect, radius: f64, theta: f64) -> Option<(f64, f64)> {
    let (s, c) = theta.sin_cos();
    let mut lo: f64 = 0.0;
    let mut hi = radius;
    if s > 0.0 {
        lo = lo.max(r.y0 / s);
        hi = hi.min(r.y1 / s);
    }
    if c > 1e-300 {
        lo = lo.max(r.x0 / c);
        hi = hi.min(r.x1 / c);
    } else if c < -1e-300 {
        lo = lo.max(r.x1 / c);
        hi = hi.min(r.x0 / c);
    } else if !(r.x0 <= 0.0 && 0.0 <= r.x1) {
        return None;
    }
    (hi > lo).then_some((lo, hi))
}

/// Exact-in-r, adaptive-in-θ integral of one monomial over a rectangle.
fn polar_monomial(m: &Monomial, r: &Rect, alpha: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let beta = m.y_exp + alpha;
    if beta <= -1.0 && r.y0 <= 0.0 {
        return Err(Error::NonIntegrable(format!("y^{beta} at the axis")));
    }
    let radius = m.disk.unwrap_or(f64::INFINITY);
    let k1 = m.abs_exp + beta + 2.0; // exponent after the radial antiderivative
    let corners = [(r.x0, r.y0), (r.x1, r.y0), (r.x0, r.y1), (r.x1, r.y1)];
    let mut angles: Vec<f64> = corners
        .iter()
        .filter(|(x, y)| !(*x == 0.0 && *y == 0.0))
        .map(|(x, y)| y.atan2(*x))
        .collect();
    let origin_in = r.y0 <= 0.0 && r.x0 <= 0.0 && 0.0 <= r.x1;
    if origin_in && k1 <= 0.0 {
        return Err(Error::NonIntegrable(format!("|z|-power {k1} at the origin")));
    }
    let (ta, tb) = angles.iter().fold((PI, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if radius.is_finite() {
        for xe in [r.x0, r.x1] {
            if xe.abs() < radius {
                let y = (radius * radius - xe * xe).sqrt();
                if r.y0 < y && y < r.y1 {
                    angles.push(y.atan2(xe));
                }
            }
        }
        for ye in [r.y0, r.y1] {
            if ye < radius {
                let x = (radius * radius - ye * ye).sqrt();
                for xx in [-x, x] {
                    if r.x0 < xx && xx < r.x1 {
                        angles.push(ye.atan2(xx));
                    }
                }
            }
        }
    }
    angles.push(0.5 * PI);
    angles.retain(|t| *t >= ta && *t <= tb);
    angles.sort_by(|a, b| a.total_cmp(b));
    angles.dedup();
    let radial = |t: f64| -> f64 {
        match ray_extent(r, radius, t) {
            None => 0.0,
            Some((lo, hi)) => {
                if k1 == 0.0 {
                    (hi / lo).ln()
                } else {
                    let l = if lo > 0.0 { lo.powf(k1) } else { 0.0 };
                    (hi.powf(k1) - l) / k1
                }
            }
        }
    };
    let mut total = Estimate::default();
    for w in angles.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        total = total + angular(&radial, beta, w[0], w[1], 0.1 * spec.rel_tol, 1e-300)?;
    }
    Ok(Estimate { value: m.coeff * total.value, err: m.coeff * total.err })
}

fn monomial_rect(m: &Monomial, r: &Rect, alpha: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = match &m.rect {
        Some(own) => match own.intersect(r) {
            Some(c) => c,
            None => return Ok(Estimate::default()),
        },
        None => *r,
    };
    if m.coeff == 0.0 {
        return Ok(Estimate::default());
    }
    if let Some(d) = m.disk {
        // rectangle entirely inside the disk: drop the disk
        let far = r.x0.abs().max(r.x1.abs()).hypot(r.y1);
        if far <= d {
            let m2 = Monomial { disk: None, ..*m };
            return monomial_rect(&m2, &r, alpha, spec);
        }
        let dx = if r.x0 > 0.0 { r.x0 } else if r.x1 < 0.0 { -r.x1 } else { 0.0 };
        if dx.hypot(r.y0) >= d {
            return Ok(Estimate::default());
        }
        return polar_monomial(m, &r, alpha, spec);
    }
    if m.abs_exp != 0.0 {
        return polar_monomial(m, &r, alpha, spec);
    }
    let v = m.coeff * r.width() * y_moment(r.y0, r.y1, m.y_exp + alpha)?;
    Ok(Estimate { value: v, err: 0.0 })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > -1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must exceed -1, got {alpha}")))
    }
}

/// `∫_R f dV_α` over a rectangle `[x0, x1) × (y0, y1)`, `y0 >= 0`.
pub fn integrate_rect(f: &ScalarField, r: &Rect, alpha: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_alpha(alpha)?;
    if r.is_empty() {
        return Ok(Estimate::default());
    }
    match &*f.repr {
        Repr::Terms { terms, .. } => {
            let mut acc = Estimate::default();
            for m in terms {
                acc = acc + monomial_rect(m, r, alpha, spec)?;
            }
            Ok(acc)
        }
        Repr::Sum(a, b) => Ok(integrate_rect(a, r, alpha, spec)? + integrate_rect(b, r, alpha, spec)?),
        _ => {
            let r = match f.support() {
                Some(s) => match s.intersect(r) {
                    Some(c) => c,
                    None => return Ok(Estimate::default()),
                },
                None => *r,
            };
            let (bx, by) = f.breakpoints();
            integrate_numeric(&|z| f.eval(z), &r, alpha, &bx, &by, spec)
        }
    }
}

/// `∫_{Q_I} f dV_α`.
pub fn integrate_box(f: &ScalarField, iv: &Interval, alpha: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate_rect(f, &iv.carleson_box(), alpha, spec)
}

struct GlRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`), cached.
fn gauss_legendre(n: usize) -> Arc<GlRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    let rule = Arc::new(GlRule { x, w });
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

#[derive(Clone, Copy)]
enum YMap {
    /// integrand includes `y^α` directly
    Plain,
    /// `y = h·u^{1/(1+α)}`, `u ∈ [0, 1]`; `dV_α = h^{1+α}/(1+α) du dx`
    Bottom(f64),
}

fn tensor<G: Fn(Point) -> f64>(g: &G, alpha: f64, map: YMap, c: &Rect, rule: &GlRule) -> f64 {
    let (cx, hx) = (0.5 * (c.x0 + c.x1), 0.5 * (c.x1 - c.x0));
    let (cy, hy) = (0.5 * (c.y0 + c.y1), 0.5 * (c.y1 - c.y0));
    let mut s = 0.0;
    for (xi, wi) in rule.x.iter().zip(&rule.w) {
        let x = cx + hx * xi;
        let mut col = 0.0;
        for (yj, wj) in rule.x.iter().zip(&rule.w) {
            let v = cy + hy * yj;
            let val = match map {
                YMap::Plain => g(Point::new(x, v)) * v.powf(alpha),
                YMap::Bottom(h) => g(Point::new(x, h * v.powf(1.0 / (1.0 + alpha)))),
            };
            col += wj * val;
        }
        s += wi * col;
    }
    s * hx * hy
}

fn adaptive_cell<G: Fn(Point) -> f64>(
    g: &G,
    alpha: f64,
    map: YMap,
    c: &Rect,
    depth: u32,
    tol_density: f64,
    spec: &QuadratureSpec,
    out: &mut Estimate,
) {
    let n = spec.nodes_per_axis;
    let q1 = tensor(g, alpha, map, c, &gauss_legendre(n));
    let q2 = tensor(g, alpha, map, c, &gauss_legendre(2 * n));
    let err = (q2 - q1).abs();
    let area = c.width() * (c.y1 - c.y0);
    let local = (tol_density * area).max(spec.rel_tol * q2.abs());
    if err <= local || depth >= spec.max_depth {
        out.value += q2;
        out.err += err;
        return;
    }
    let xm = 0.5 * (c.x0 + c.x1);
    let ym = 0.5 * (c.y0 + c.y1);
    for sub in [
        Rect::new(c.x0, xm, c.y0, ym),
        Rect::new(xm, c.x1, c.y0, ym),
        Rect::new(c.x0, xm, ym, c.y1),
        Rect::new(xm, c.x1, ym, c.y1),
    ] {
        adaptive_cell(g, alpha, map, &sub, depth + 1, tol_density, spec, out);
    }
}

const STRIPS: i32 = 6;

/// Numeric `∫_R g dV_α` for a generic integrand: breakpoint panels, geometric
/// strips toward `y = 0`, adaptive tensor Gauss–Legendre per cell.
pub fn integrate_numeric<G: Fn(Point) -> f64>(
    g: &G,
    r: &Rect,
    alpha: f64,
    breaks_x: &[f64],
    breaks_y: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    check_alpha(alpha)?;
    spec.validate()?;
    if r.is_empty() {
        return Ok(Estimate::default());
    }
    let mut xs = vec![r.x0];
    xs.extend(breaks_x.iter().copied().filter(|x| *x > r.x0 && *x < r.x1));
    xs.push(r.x1);
    let mut ys = vec![r.y0];
    ys.extend(breaks_y.iter().copied().filter(|y| *y > r.y0 && *y < r.y1));
    ys.push(r.y1);
    // rough scale for the absolute tolerance density
    let probe = g(Point::new(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1))).abs();
    let area = r.measure_alpha(alpha).max(1e-300);
    let tol_density = (spec.abs_tol / (r.width() * (r.y1 - r.y0))).max(spec.rel_tol * probe * area / (r.width() * (r.y1 - r.y0)) * 1e-2);
    let mut out = Estimate::default();
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let (y0, y1) = (yw[0], yw[1]);
            if y0 > 0.0 {
                adaptive_cell(g, alpha, YMap::Plain, &Rect::new(xw[0], xw[1], y0, y1), 0, tol_density, spec, &mut out);
                continue;
            }
            let mut top = y1;
            for _ in 0..STRIPS {
                let lo = 0.5 * top;
                adaptive_cell(g, alpha, YMap::Plain, &Rect::new(xw[0], xw[1], lo, top), 0, tol_density, spec, &mut out);
                top = lo;
            }
            let mut bottom = Estimate::default();
            let s = top.powf(1.0 + alpha) / (1.0 + alpha);
            adaptive_cell(g, alpha, YMap::Bottom(top), &Rect::new(xw[0], xw[1], 0.0, 1.0), 0, tol_density / s.max(1e-300), spec, &mut bottom);
            out.value += bottom.value * s;
            out.err += bottom.err * s;
        }
    }
    let tol = spec.abs_tol.max(spec.rel_tol * out.value.abs());
    if !out.value.is_finite() {
        return Err(Error::NonIntegrable(format!("non-finite integral over {r:?}")));
    }
    if out.err > 100.0 * tol {
        return Err(Error::NonConvergent { err: out.err, tol, context: format!("rect {r:?}") });
    }
    Ok(out)
}

/// A positive Borel measure on ℋ: `density · dV_α` or finitely many atoms.
#[derive(Debug, Clone)]
pub enum BorelMeasure {
    Density { density: ScalarField, alpha: f64 },
    Atoms(Vec<(Point, f64)>),
}

impl BorelMeasure {
    pub fn lebesgue(alpha: f64) -> Self {
        BorelMeasure::Density { density: ScalarField::constant(1.0), alpha }
    }

    pub fn atoms(atoms: Vec<(Point, f64)>) -> Result<Self> {
        for (p, m) in &atoms {
            if !(p.y > 0.0) || !(*m > 0.0) {
                return Err(Error::InvalidInput(format!("atom {p:?} with mass {m}")));
            }
        }
        Ok(BorelMeasure::Atoms(atoms))
    }

    pub fn of_rect(&self, r: &Rect, spec: &QuadratureSpec) -> Result<f64> {
        match self {
            BorelMeasure::Density { density, alpha } => Ok(integrate_rect(density, r, *alpha, spec)?.value),
            BorelMeasure::Atoms(a) => Ok(a.iter().filter(|(p, _)| r.contains(*p)).map(|(_, m)| m).sum()),
        }
    }
}

/// `μ(Q_I)`.
pub fn measure_of_box(mu: &BorelMeasure, iv: &Interval, spec: &QuadratureSpec) -> Result<f64> {
    mu.of_rect(&iv.carleson_box(), spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    /// share of `‖·‖^p` coming from the outermost shell of the window
    pub tail_fraction: f64,
    pub tail_flag: bool,
}

/// `(Σ_{T_I ∈ W} ∫_{T_I} f^p ω dV_α)^{1/p}` with a truncation-tail flag. Cells
/// of the finest scale are taken as whole boxes, so the mesh covers the strip
/// `[x_lo, x_hi) × (0, 2^{j_max})`.
pub fn lp_norm(
    f: &ScalarField,
    omega: &ScalarField,
    p: f64,
    alpha: f64,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<NormReport> {
    if p < 1.0 {
        return Err(Error::InvalidInput(format!("p = {p} < 1")));
    }
    let g = f.powf(p).mul(omega);
    let cells = whitney_cells(w, Shift::Zero);
    let mut total = 0.0;
    let mut shell = 0.0;
    let range = w.range();
    for d in &cells {
        // the finest layer takes its whole box so the mesh reaches down to y = 0
        let cell = if d.scale == w.j_min { d.carleson_box() } else { d.top_half() };
        let v = integrate_rect(&g, &cell, alpha, spec)?.value;
        total += v;
        let outer = d.scale == w.j_min || d.scale == w.j_max || d.left() < range.lo || d.right() > range.hi;
        if outer {
            shell += v;
        }
    }
    let frac = if total > 0.0 { shell / total } else { 0.0 };
    Ok(NormReport { value: total.powf(1.0 / p), tail_fraction: frac, tail_flag: frac > spec.tail_tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let r = gauss_legendre(8);
        let s: f64 = r.x.iter().zip(&r.w).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(s, 2.0 / 15.0, max_relative = 1e-13);
    }

    #[test]
    fn spec_examples() {
        let iv = Interval::new(0.0, 1.0);
        let one = integrate_box(&ScalarField::constant(1.0), &iv, 0.0, &spec()).unwrap();
        assert_relative_eq!(one.value, 1.0, max_relative = 1e-15);
        let y = integrate_box(&ScalarField::power_y(1.0), &iv, 0.0, &spec()).unwrap();
        assert_relative_eq!(y.value, 0.5, max_relative = 1e-15);
        assert!(integrate_box(&ScalarField::constant(1.0), &iv, -1.0, &spec()).is_err());
    }

    /// Independent oracle for `∫_{Q_[0,1)} |z|^{-1} dx dy`: iterated 1-D quadrature
    /// in Cartesian form, `∫_0^1 asinh(1/y) dy`.
    #[test]
    fn inverse_modulus_against_cartesian_oracle() {
        let oracle = adaptive_1d(&|y: f64| (1.0 / y).asinh(), &[0.0, 0.25, 1.0], 1e-14, 1e-300, 4000).unwrap();
        let v = integrate_box(&ScalarField::power_abs(-1.0), &Interval::new(0.0, 1.0), 0.0, &spec()).unwrap();
        assert_relative_eq!(v.value, oracle.value, max_relative = 1e-10);
        // closed form: 2 asinh(1) ... ∫∫ = ln(1+√2) + ... checked via the oracle only
    }

    #[test]
    fn half_disk_moment_oracle() {
        // ∫_{|z|<=R} |z|^s y^α = S_α · R^{2+α+s} / (2+α+s)
        for (s, alpha, rad) in [(-1.0, 0.0, 1.0), (-1.8, 0.5, 2.0), (0.7, -0.5, 0.5), (-1.975, 0.0, 1.0), (-2.4, 1.0, 1.0)] {
            let f = ScalarField::power_abs(s).mul(&ScalarField::half_disk(rad));
            let r = Rect::new(-rad, rad, 0.0, rad);
            let got = integrate_rect(&f, &r, alpha, &spec()).unwrap().value;
            let want = sine_moment(alpha).unwrap() * rad.powf(2.0 + alpha + s) / (2.0 + alpha + s);
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn sine_moment_closed_forms() {
        assert_relative_eq!(sine_moment(0.0).unwrap(), PI, max_relative = 1e-13);
        assert_relative_eq!(sine_moment(1.0).unwrap(), 2.0, max_relative = 1e-13);
        assert_relative_eq!(sine_moment(2.0).unwrap(), 0.5 * PI, max_relative = 1e-13);
        // Γ(1/4)²/√(2π)... β = -1/2: √π Γ(1/4)/Γ(3/4) = 5.244115108584...
        assert_relative_eq!(sine_moment(-0.5).unwrap(), 5.244115108584239, max_relative = 1e-11);
    }

    #[test]
    fn numeric_path_matches_exact_path() {
        for alpha in [-0.9, -0.5, 0.0, 1.0, 2.5] {
            for f in [ScalarField::power_y(0.5), ScalarField::power_abs(1.3), ScalarField::constant(2.0)] {
                let r = Rect::new(-0.3, 0.7, 0.0, 1.0);
                let exact = integrate_rect(&f, &r, alpha, &spec()).unwrap().value;
                let g = f.clone();
                let numeric = integrate_numeric(&move |z| g.eval(z), &r, alpha, &[0.0], &[], &spec()).unwrap().value;
                assert_relative_eq!(exact, numeric, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn polar_path_matches_separable_when_modulus_exponent_vanishes() {
        for alpha in [-0.5, 0.0, 1.5] {
            let f = ScalarField::power_y(0.25);
            let r = Rect::new(-0.5, 2.0, 0.0, 1.5);
            let exact = integrate_rect(&f, &r, alpha, &spec()).unwrap().value;
            let m = Monomial { coeff: 1.0, abs_exp: 0.0, y_exp: 0.25, rect: None, disk: Some(100.0) };
            let polar = polar_monomial(&m, &r, alpha, &spec()).unwrap().value;
            assert_relative_eq!(exact, polar, max_relative = 1e-10);
        }
    }

    #[test]
    fn additivity_over_children_and_strip() {
        let f = ScalarField::power_abs(-0.7).mul(&ScalarField::power_y(0.3));
        let iv = Interval::new(-0.25, 0.75);
        for alpha in [-0.5, 0.0, 1.0] {
            let whole = integrate_box(&f, &iv, alpha, &spec()).unwrap().value;
            let top = integrate_rect(&f, &iv.top_half(), alpha, &spec()).unwrap().value;
            let a = integrate_box(&f, &Interval::new(-0.25, 0.25), alpha, &spec()).unwrap().value;
            let b = integrate_box(&f, &Interval::new(0.25, 0.75), alpha, &spec()).unwrap().value;
            assert_relative_eq!(whole, top + a + b, max_relative = 1e-8);
        }
    }

    #[test]
    fn measure_examples() {
        let s = spec();
        assert_eq!(measure_of_box(&BorelMeasure::lebesgue(0.0), &Interval::new(0.0, 1.0), &s).unwrap(), 1.0);
        let atoms = BorelMeasure::atoms(vec![(Point::new(0.5, 0.5), 3.0)]).unwrap();
        assert_eq!(measure_of_box(&atoms, &Interval::new(0.0, 1.0), &s).unwrap(), 3.0);
        let mu = BorelMeasure::Density { density: ScalarField::power_y(1.0), alpha: 0.0 };
        assert_relative_eq!(measure_of_box(&mu, &Interval::new(0.0, 2.0), &s).unwrap(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn lp_norm_examples() {
        let s = spec();
        let w = ScaleWindow::new(-12, 0, 0.0, 1.0).unwrap();
        let f = ScalarField::box_indicator(Interval::new(0.0, 1.0));
        let n = lp_norm(&f, &ScalarField::constant(1.0), 2.0, 0.0, &w, &s).unwrap();
        assert_relative_eq!(n.value, 1.0, max_relative = 1e-12);

        let eps = 0.3;
        let f = ScalarField::power_abs(eps - 2.0).mul(&ScalarField::half_disk(1.0));
        let om = ScalarField::power_abs(2.0 - eps);
        let w = ScaleWindow::new(-12, 1, -1.0, 1.0).unwrap();
        let n = lp_norm(&f, &om, 1.0, 0.0, &w, &s).unwrap();
        assert_relative_eq!(n.value, 0.5 * PI, max_relative = 1e-8);
        assert!(!n.tail_flag);
    }
}
