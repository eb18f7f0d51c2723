//! Weight-class characteristics and testing constants as suprema over the
//! two dyadic grids of a window.
//!
//! Every report is a certified lower bound for the true supremum over all
//! intervals; where the class quantity is monotone in the box integrals, the
//! covering lemma also gives an upper bound, reported as `covering_upper`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{box_measure_alpha, DyadicInterval, Point, Rect, ScaleWindow, Shift};
use crate::operators::{lq_norm_layer_cake, FractionalAverage, Moments, Params};
use crate::orlicz::{conj, luxembourg_norm, YoungFunction};
use crate::quadrature::{BorelMeasure, QuadratureSpec};

/// Layer-cake grid ratio for `L^q(μ)` norms of dyadic maximal images.
pub const LAYER_RATIO: f64 = 1.090_507_732_665_257_7; // 2^{1/8}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstantName {
    #[serde(rename = "B_p_alpha")]
    BpAlpha,
    #[serde(rename = "B_inf_alpha")]
    BinfAlpha,
    #[serde(rename = "A_pq")]
    Apq,
    #[serde(rename = "C_pq")]
    Cpq,
    #[serde(rename = "S_pq")]
    Spq,
    #[serde(rename = "B_pq_joint")]
    BpqJoint,
    #[serde(rename = "sawyer_testing")]
    SawyerTesting,
    #[serde(rename = "strong_class")]
    StrongClass,
    #[serde(rename = "weak_class")]
    WeakClass,
    #[serde(rename = "bump_single")]
    BumpSingle,
    #[serde(rename = "bump_double")]
    BumpDouble,
    #[serde(rename = "carleson_seq")]
    CarlesonSeq,
}

impl std::fmt::Display for ConstantName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub name: ConstantName,
    pub value: f64,
    pub argmax: Option<DyadicInterval>,
    pub window: ScaleWindow,
    /// relative change against the window one growth step smaller
    pub refinement_delta: f64,
    /// covering-lemma upper bound for the supremum over all intervals
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covering_upper: Option<f64>,
    /// the purely dyadic variant, where the definition allows two readings
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyadic_value: Option<f64>,
}

impl ConstantReport {
    pub fn is_stable(&self, tol: f64) -> bool {
        self.refinement_delta <= tol
    }
}

/// The window `w` came from by one `grow`, if any.
fn shrunk(w: &ScaleWindow) -> Option<ScaleWindow> {
    let q = 0.25 * (w.x_hi - w.x_lo);
    ScaleWindow::new(w.j_min + 1, w.j_max - 1, w.x_lo + q, w.x_hi - q).ok()
}

/// Both grids' intervals in `w`, `D^0` first, coarse scales first.
pub fn window_boxes(w: &ScaleWindow) -> Vec<DyadicInterval> {
    Shift::ALL.iter().flat_map(|&s| w.intervals(s)).collect()
}

struct Sup {
    value: f64,
    argmax: Option<DyadicInterval>,
    delta: f64,
}

/// `sup_I per_box(I)` over `boxes`, with the same supremum over the members
/// of `inner` for the refinement delta. `None` entries (empty boxes) are skipped.
fn supremum<F>(boxes: &[DyadicInterval], inner: Option<&ScaleWindow>, per_box: F) -> Result<Sup>
where
    F: Fn(&DyadicInterval) -> Result<Option<f64>> + Sync,
{
    let vals: Vec<Result<Option<f64>>> = boxes.par_iter().map(&per_box).collect();
    let mut best = 0.0f64;
    let mut arg = None;
    let mut best_inner = 0.0f64;
    for (d, v) in boxes.iter().zip(vals) {
        let Some(v) = v? else { continue };
        if v.is_nan() {
            return Err(Error::NonIntegrable(format!("NaN box value on {d}")));
        }
        if arg.is_none() || v > best {
            best = v;
            arg = Some(*d);
        }
        if inner.map_or(false, |iw| iw.contains(d)) {
            best_inner = best_inner.max(v);
        }
    }
    let delta = if best > 0.0 { ((best - best_inner) / best).max(0.0) } else { 0.0 };
    Ok(Sup { value: best, argmax: arg, delta })
}

fn report(name: ConstantName, w: &ScaleWindow, s: Sup) -> ConstantReport {
    ConstantReport {
        name,
        value: s.value,
        argmax: s.argmax,
        window: *w,
        refinement_delta: s.delta,
        covering_upper: None,
        dyadic_value: None,
    }
}

fn avg(m: &Moments, d: &DyadicInterval) -> Result<f64> {
    Ok(m.dyadic(d)? / box_measure_alpha(d.len(), m.alpha())?)
}

/// `(avg ω)(avg ω^{1-p'})^{p-1}` on one box.
pub fn bp_box(omega: &Moments, dual: &Moments, p: f64, d: &DyadicInterval) -> Result<f64> {
    Ok(avg(omega, d)? * avg(dual, d)?.powf(p - 1.0))
}

/// `[ω]_{B_{p,α}}`.
pub fn bekolle_bonami(
    omega: &ScalarField,
    p: f64,
    alpha: f64,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<ConstantReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidInput(format!("B_p needs p > 1, got {p}")));
    }
    let om = Moments::new(omega.clone(), alpha, *spec);
    let dual = Moments::new(omega.powf(1.0 - conj(p)), alpha, *spec);
    let s = supremum(&window_boxes(w), shrunk(w).as_ref(), |d| Ok(Some(bp_box(&om, &dual, p, d)?)))?;
    let mut r = report(ConstantName::BpAlpha, w, s);
    r.covering_upper = Some(r.value * 6f64.powf((2.0 + alpha) * p));
    Ok(r)
}

/// `∫_{Q_I} M^{d,β}_α(ωχ_{Q_I}) dV_α` for the Hardy–Littlewood dyadic
/// maximal function of grid `shift`, truncated below at scale `j_min`.
///
/// Boxes of the other grid straddle `Q_I`; their averages use `∫_{Q_J ∩ Q_I} ω`.
pub fn maximal_box_integral(
    omega: &Moments,
    i: &DyadicInterval,
    shift: Shift,
    j_min: i32,
) -> Result<f64> {
    let alpha = omega.alpha();
    let qi = i.carleson_box();
    let j_min = j_min.min(i.scale);
    // averages over boxes that contain Q_I can only shrink further up
    let j_top = i.scale + 3;
    let cover = ScaleWindow::new(j_top, j_top, qi.x0, qi.x1)?;
    let mut stack: Vec<(DyadicInterval, f64)> = cover.intervals_at(j_top, shift).into_iter().map(|d| (d, 0.0)).collect();
    let mut total = 0.0;
    while let Some((d, above)) = stack.pop() {
        let Some(part) = d.carleson_box().intersect(&qi) else { continue };
        let whole = part.measure_alpha(alpha);
        if whole == 0.0 {
            continue;
        }
        if let Some(sup) = omega.field().sup_bound(&part) {
            if sup <= above {
                total += above * whole;
                continue;
            }
        }
        let v = omega.rect(&part)? / box_measure_alpha(d.len(), alpha)?;
        let m = above.max(v);
        if d.scale <= j_min {
            total += m * whole;
            continue;
        }
        if let Some(t) = d.top_half().intersect(&qi) {
            total += m * t.measure_alpha(alpha);
        }
        for c in d.children() {
            stack.push((c, m));
        }
    }
    Ok(total)
}

/// `[ω]_{B_{∞,α}}`: the value uses `M_α <= 6^{2+α} Σ_β M^{d,β}_α` inside each
/// box; `dyadic_value` uses the box's own grid only.
pub fn bekolle_infinity(omega: &ScalarField, alpha: f64, w: &ScaleWindow, spec: &QuadratureSpec) -> Result<ConstantReport> {
    let om = Moments::new(omega.clone(), alpha, *spec);
    let boxes = window_boxes(w);
    let inner = shrunk(w);
    let pairs: Vec<Result<Option<(f64, f64)>>> = boxes
        .par_iter()
        .map(|d| {
            let mass = om.dyadic(d)?;
            if mass == 0.0 {
                return Ok(None);
            }
            let own = maximal_box_integral(&om, d, d.shift, w.j_min)?;
            let other_shift = if d.shift == Shift::Zero { Shift::Third } else { Shift::Zero };
            let other = maximal_box_integral(&om, d, other_shift, w.j_min)?;
            Ok(Some((own / mass, 6f64.powf(2.0 + alpha) * (own + other) / mass)))
        })
        .collect();
    let mut dyadic = Vec::with_capacity(boxes.len());
    let mut upper = Vec::with_capacity(boxes.len());
    for r in pairs {
        let r = r?;
        dyadic.push(r.map(|x| x.0));
        upper.push(r.map(|x| x.1));
    }
    let idx: HashMap<DyadicInterval, usize> = boxes.iter().enumerate().map(|(k, d)| (*d, k)).collect();
    let s = supremum(&boxes, inner.as_ref(), |d| Ok(upper[idx[d]]))?;
    let sd = supremum(&boxes, inner.as_ref(), |d| Ok(dyadic[idx[d]]))?;
    let mut r = report(ConstantName::BinfAlpha, w, s);
    r.dyadic_value = Some(sd.value);
    Ok(r)
}

/// The two-weight and one-weight class conditions, each with its inputs.
#[derive(Debug, Clone)]
pub enum ClassCondition {
    /// `|Q|_ω^{p/q} |Q|_σ^{p/p'} / |Q|_α^{p(1-γ/(2+α))}`
    Apq { sigma: ScalarField, omega: ScalarField },
    /// `|Q|_α^{γ/(2+α)-1} (∫ω)^{1/q} (∫σ^{-p'})^{1/p'}`
    Cpq { sigma: ScalarField, omega: ScalarField },
    /// `|Q|_ω^{p/q} |Q|_σ^p / |Q|_α^{p(1-γ/(2+α))+1} · exp(avg log σ^{-1})`
    Spq { sigma: ScalarField, omega: ScalarField },
    /// `(avg ω^q)(avg ω^{-p'})^{q/p'}`
    BpqJoint { omega: ScalarField },
    /// `[σ,μ] = |Q|_α^{-q(1-γ/(2+α))} μ(Q) |Q|_σ^{q/p'}`
    StrongClass { sigma: ScalarField, mu: BorelMeasure },
    /// `|Q|_α^{q(γ/(2+α)-1/p)} (avg ω^{1-p'})^{q/p'} μ(Q)`
    WeakClass { omega: ScalarField, mu: BorelMeasure },
    /// `|Q|_α^{q(γ/(2+α)-1/p)} ‖ω^{-1}‖_{Q,Ψ}^q μ(Q)`
    BumpSingle { omega: ScalarField, mu: BorelMeasure, psi: YoungFunction },
    /// `|Q|_α^{γ/(2+α)+1/q-1/p} ‖ω‖_{Q,Ψ} ‖σ^{-1}‖_{Q,Φ}`
    BumpDouble { omega: ScalarField, sigma: ScalarField, phi: YoungFunction, psi: YoungFunction },
}

impl ClassCondition {
    pub fn name(&self) -> ConstantName {
        match self {
            ClassCondition::Apq { .. } => ConstantName::Apq,
            ClassCondition::Cpq { .. } => ConstantName::Cpq,
            ClassCondition::Spq { .. } => ConstantName::Spq,
            ClassCondition::BpqJoint { .. } => ConstantName::BpqJoint,
            ClassCondition::StrongClass { .. } => ConstantName::StrongClass,
            ClassCondition::WeakClass { .. } => ConstantName::WeakClass,
            ClassCondition::BumpSingle { .. } => ConstantName::BumpSingle,
            ClassCondition::BumpDouble { .. } => ConstantName::BumpDouble,
        }
    }

    /// Total exponent of `|Q_I|_α` once every box integral is written as
    /// `|Q|·avg`, when all other factors grow with the box.
    fn box_exponent(&self, p: &Params) -> Option<f64> {
        let g = p.gamma / (2.0 + p.alpha);
        let pc = p.p_conj();
        Some(match self {
            ClassCondition::Apq { .. } => -p.p * (1.0 - g),
            ClassCondition::Cpq { .. } => g - 1.0,
            ClassCondition::Spq { .. } => return None,
            ClassCondition::BpqJoint { .. } => -1.0 - p.q / pc,
            ClassCondition::StrongClass { .. } => -p.q * (1.0 - g),
            ClassCondition::WeakClass { .. } => p.q * (g - 1.0 / p.p) - p.q / pc,
            ClassCondition::BumpSingle { .. } => p.q * (g - 1.0 / p.p) - p.q,
            ClassCondition::BumpDouble { .. } => g + 1.0 / p.q - 1.0 / p.p - 2.0,
        })
    }
}

/// Moments and measures a condition needs, built once and shared by all boxes.
struct ClassInputs {
    m: Vec<Arc<Moments>>,
    mu: Option<BorelMeasure>,
    log_sigma: Option<ScalarField>,
}

pub fn apq_box(sigma: &Moments, omega: &Moments, p: &Params, d: &DyadicInterval) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    Ok(omega.dyadic(d)?.powf(p.p / p.q) * sigma.dyadic(d)?.powf(p.p / p.p_conj()) / q.powf(p.p * p.frac_exponent()))
}

pub fn cpq_box(omega: &Moments, sigma_neg: &Moments, p: &Params, d: &DyadicInterval) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    Ok(q.powf(p.gamma / (2.0 + p.alpha) - 1.0) * omega.dyadic(d)?.powf(1.0 / p.q) * sigma_neg.dyadic(d)?.powf(1.0 / p.p_conj()))
}

/// Returns `LogSingular` when `∫ log σ^{-1}` diverges on the box.
pub fn spq_box(
    sigma: &Moments,
    omega: &Moments,
    p: &Params,
    d: &DyadicInterval,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    let log_sigma = crate::operators::log_box_integral(sigma.field(), &d.carleson_box(), p.alpha, spec)?;
    let geo = (-log_sigma / q).exp();
    Ok(omega.dyadic(d)?.powf(p.p / p.q) * sigma.dyadic(d)?.powf(p.p) / q.powf(p.p * p.frac_exponent() + 1.0) * geo)
}

/// The `S_pq` box value with the geometric mean of `σ^{-1}` replaced by its average.
pub fn spq_box_arithmetic(sigma: &Moments, omega: &Moments, sigma_inv: &Moments, p: &Params, d: &DyadicInterval) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    Ok(omega.dyadic(d)?.powf(p.p / p.q) * sigma.dyadic(d)?.powf(p.p) / q.powf(p.p * p.frac_exponent() + 1.0) * avg(sigma_inv, d)?)
}

pub fn bpq_joint_box(omega_q: &Moments, omega_neg: &Moments, p: &Params, d: &DyadicInterval) -> Result<f64> {
    Ok(avg(omega_q, d)? * avg(omega_neg, d)?.powf(p.q / p.p_conj()))
}

pub fn strong_class_box(sigma: &Moments, mu_q: f64, p: &Params, d: &DyadicInterval) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    Ok(q.powf(-p.q * p.frac_exponent()) * mu_q * sigma.dyadic(d)?.powf(p.q / p.p_conj()))
}

/// For `p = 1` the dual average is read as `(ess inf_{Q_I} ω)^{-1}` over a midpoint mesh.
pub fn weak_class_box(omega: &ScalarField, dual: Option<&Moments>, mu_q: f64, p: &Params, d: &DyadicInterval) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    let g = p.gamma / (2.0 + p.alpha);
    let dual_part = match dual {
        Some(m) if p.p > 1.0 => avg(m, d)?.powf(p.q / p.p_conj()),
        _ => {
            let n = 16;
            let r = d.carleson_box();
            let mut inf = f64::INFINITY;
            for a in 0..n {
                for b in 0..n {
                    let z = Point::new(
                        r.x0 + (a as f64 + 0.5) / n as f64 * r.width(),
                        r.y0 + (b as f64 + 0.5) / n as f64 * (r.y1 - r.y0),
                    );
                    inf = inf.min(omega.eval(z));
                }
            }
            inf.powf(-p.q)
        }
    };
    Ok(q.powf(p.q * (g - 1.0 / p.p)) * dual_part * mu_q)
}

#[allow(clippy::too_many_arguments)]
pub fn bump_single_box(
    omega_inv: &ScalarField,
    psi: &YoungFunction,
    mu_q: f64,
    p: &Params,
    d: &DyadicInterval,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    let g = p.gamma / (2.0 + p.alpha);
    let n = luxembourg_norm(omega_inv, &d.interval(), psi, p.alpha, spec)?;
    Ok(q.powf(p.q * (g - 1.0 / p.p)) * n.powf(p.q) * mu_q)
}

#[allow(clippy::too_many_arguments)]
pub fn bump_double_box(
    omega: &ScalarField,
    sigma_inv: &ScalarField,
    phi: &YoungFunction,
    psi: &YoungFunction,
    p: &Params,
    d: &DyadicInterval,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let q = box_measure_alpha(d.len(), p.alpha)?;
    let g = p.gamma / (2.0 + p.alpha);
    let a = luxembourg_norm(omega, &d.interval(), psi, p.alpha, spec)?;
    let b = luxembourg_norm(sigma_inv, &d.interval(), phi, p.alpha, spec)?;
    Ok(q.powf(g + 1.0 / p.q - 1.0 / p.p) * a * b)
}

/// Supremum of one class condition over the window.
pub fn class_constant(
    cond: &ClassCondition,
    params: &Params,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<ConstantReport> {
    params.validate()?;
    let a = params.alpha;
    let mk = |f: ScalarField| Moments::new(f, a, *spec);
    let pc = params.p_conj();
    let inputs = match cond {
        ClassCondition::Apq { sigma, omega } | ClassCondition::Spq { sigma, omega } => {
            ClassInputs { m: vec![mk(sigma.clone()), mk(omega.clone()), mk(sigma.powf(-1.0))], mu: None, log_sigma: Some(sigma.clone()) }
        }
        ClassCondition::Cpq { sigma, omega } => ClassInputs { m: vec![mk(omega.clone()), mk(sigma.powf(-pc))], mu: None, log_sigma: None },
        ClassCondition::BpqJoint { omega } => {
            ClassInputs { m: vec![mk(omega.powf(params.q)), mk(omega.powf(-pc))], mu: None, log_sigma: None }
        }
        ClassCondition::StrongClass { sigma, mu } => ClassInputs { m: vec![mk(sigma.clone())], mu: Some(mu.clone()), log_sigma: None },
        ClassCondition::WeakClass { omega, mu } => {
            let m = if params.p > 1.0 { vec![mk(omega.powf(1.0 - pc))] } else { vec![] };
            ClassInputs { m, mu: Some(mu.clone()), log_sigma: None }
        }
        ClassCondition::BumpSingle { mu, .. } => ClassInputs { m: vec![], mu: Some(mu.clone()), log_sigma: None },
        ClassCondition::BumpDouble { .. } => ClassInputs { m: vec![], mu: None, log_sigma: None },
    };
    let omega_inv = match cond {
        ClassCondition::BumpSingle { omega, .. } => Some(omega.powf(-1.0)),
        ClassCondition::BumpDouble { sigma, .. } => Some(sigma.powf(-1.0)),
        _ => None,
    };
    let mu_of = |d: &DyadicInterval| -> Result<f64> {
        match &inputs.mu {
            Some(mu) => mu.of_rect(&d.carleson_box(), spec),
            None => Ok(0.0),
        }
    };
    let per_box = |d: &DyadicInterval| -> Result<Option<f64>> {
        let v = match cond {
            ClassCondition::Apq { .. } => apq_box(&inputs.m[0], &inputs.m[1], params, d)?,
            ClassCondition::Spq { .. } => {
                let _ = &inputs.log_sigma;
                spq_box(&inputs.m[0], &inputs.m[1], params, d, spec)?
            }
            ClassCondition::Cpq { .. } => cpq_box(&inputs.m[0], &inputs.m[1], params, d)?,
            ClassCondition::BpqJoint { .. } => bpq_joint_box(&inputs.m[0], &inputs.m[1], params, d)?,
            ClassCondition::StrongClass { .. } => strong_class_box(&inputs.m[0], mu_of(d)?, params, d)?,
            ClassCondition::WeakClass { omega, .. } => weak_class_box(omega, inputs.m.first().map(|m| &**m), mu_of(d)?, params, d)?,
            ClassCondition::BumpSingle { psi, .. } => {
                let mq = mu_of(d)?;
                if mq == 0.0 {
                    0.0
                } else {
                    bump_single_box(omega_inv.as_ref().unwrap(), psi, mq, params, d, spec)?
                }
            }
            ClassCondition::BumpDouble { omega, phi, psi, .. } => {
                bump_double_box(omega, omega_inv.as_ref().unwrap(), phi, psi, params, d, spec)?
            }
        };
        Ok(Some(v))
    };
    let s = supremum(&window_boxes(w), shrunk(w).as_ref(), per_box)?;
    let mut r = report(cond.name(), w, s);
    r.covering_upper = cond.box_exponent(params).map(|b| r.value * 6f64.powf((2.0 + a) * (-b).max(0.0)));
    Ok(r)
}

/// Test boxes for the Sawyer constant: window intervals at least `gap` scales
/// below the top, so the maximal image decays inside the window.
pub const SAWYER_GAP: i32 = 4;

/// `‖M^{d,β}_{α,γ}(χ_{Q_I}σ)‖_{L^q(μ)} / |Q_I|_{σ,α}^{1/p}` for one test box.
pub fn sawyer_ratio(
    sigma: &ScalarField,
    mu: &BorelMeasure,
    params: &Params,
    shift: Shift,
    i: &DyadicInterval,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<Option<(f64, bool)>> {
    let sm = Moments::new(sigma.clone(), params.alpha, *spec);
    let mass = sm.dyadic(i)?;
    if mass == 0.0 {
        return Ok(None);
    }
    let g = ScalarField::dyadic_box_indicator(i).mul(sigma);
    let avg = FractionalAverage::side_length(&g, params, spec);
    let lc = lq_norm_layer_cake(&avg, shift, mu, params.q, w, LAYER_RATIO, spec)?;
    Ok(Some((lc.value / mass.powf(1.0 / params.p), lc.tail_flag)))
}

/// Sawyer testing constant over test boxes of grid `shift`.
pub fn sawyer_testing(
    sigma: &ScalarField,
    mu: &BorelMeasure,
    params: &Params,
    shift: Shift,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<ConstantReport> {
    let tests = sawyer_test_boxes(w, shift);
    let inner = shrunk(w);
    let s = supremum(&tests, inner.as_ref(), |d| {
        Ok(sawyer_ratio(sigma, mu, params, shift, d, w, spec)?.map(|x| x.0))
    })?;
    Ok(report(ConstantName::SawyerTesting, w, s))
}

pub fn sawyer_test_boxes(w: &ScaleWindow, shift: Shift) -> Vec<DyadicInterval> {
    let top = (w.j_max - SAWYER_GAP).max(w.j_min);
    let x_mid = 0.5 * (w.x_lo + w.x_hi);
    let half = 0.25 * (w.x_hi - w.x_lo);
    let inner = ScaleWindow { j_min: w.j_min, j_max: top, x_lo: x_mid - half, x_hi: x_mid + half };
    inner.intervals(shift)
}

/// `λ_I = |Q_I|_{ω,α}` for every window interval of one grid.
pub fn measure_sequence(
    omega: &ScalarField,
    alpha: f64,
    shift: Shift,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<HashMap<DyadicInterval, f64>> {
    let m = Moments::new(omega.clone(), alpha, *spec);
    let ivs = w.intervals(shift);
    let vals: Vec<Result<f64>> = ivs.par_iter().map(|d| m.dyadic(d)).collect();
    ivs.into_iter().zip(vals).map(|(d, v)| Ok((d, v?))).collect()
}

/// `sup_J Σ_{I ⊆ J} λ_I / |Q_J|_{ω,α}^δ` by bottom-up subtree sums, per grid.
pub fn carleson_sequence_constant(
    lambda: &HashMap<DyadicInterval, f64>,
    omega: &ScalarField,
    alpha: f64,
    delta: f64,
    w: &ScaleWindow,
    spec: &QuadratureSpec,
) -> Result<ConstantReport> {
    if !(delta >= 1.0) {
        return Err(Error::InvalidInput(format!("Carleson exponent must be >= 1, got {delta}")));
    }
    let m = Moments::new(omega.clone(), alpha, *spec);
    let mut sums: HashMap<DyadicInterval, f64> = HashMap::new();
    let mut boxes = Vec::new();
    for shift in Shift::ALL {
        let mut ivs = w.intervals(shift);
        ivs.reverse(); // fine scales first
        for d in &ivs {
            let own = lambda.get(d).copied().unwrap_or(0.0);
            let s = sums.get(d).copied().unwrap_or(0.0) + own;
            sums.insert(*d, s);
            if d.scale < w.j_max {
                *sums.entry(d.parent()).or_insert(0.0) += s;
            }
        }
        boxes.extend(ivs.into_iter().rev());
    }
    let s = supremum(&boxes, shrunk(w).as_ref(), |d| {
        let s = sums[d];
        if s == 0.0 {
            return Ok(None);
        }
        let den = m.dyadic(d)?;
        if den == 0.0 {
            return Err(Error::DegenerateBox(format!("{d} has zero weighted measure")));
        }
        Ok(Some(s / den.powf(delta)))
    })?;
    Ok(report(ConstantName::CarlesonSeq, w, s))
}

/// `|Q_I|_α / |T_I|_α = 1/(1 - 2^{-(1+α)})`.
pub fn box_to_top_ratio(alpha: f64) -> f64 {
    1.0 / (1.0 - 2f64.powf(-(1.0 + alpha)))
}

/// Rectangle helper for oracles: `Q_I ∩ {y < h}`.
pub fn lower_part(d: &DyadicInterval, h: f64) -> Rect {
    Rect::new(d.left(), d.right(), 0.0, h.min(d.len()))
}
