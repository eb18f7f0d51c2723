//! One check per theorem tag. Left-hand sides come from the operators, right-hand
//! constants from the weight-constant module and norms from quadrature.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::family::box_sum_family;
use super::scenario::Scenario;
use super::sharpness::{sharpness_sweep, SweepOptions};
use super::{CheckKind, TheoremTag, TrialRow, VerificationResult};
use crate::constants::{bekolle_bonami, bekolle_infinity, carleson_sequence_constant, class_constant, measure_sequence};
use crate::constants::{sawyer_testing, ClassCondition, ConstantReport, LAYER_RATIO};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{pow2, DyadicInterval, Interval, Point, Rect, ScaleWindow, Shift};
use crate::operators::{
    bergman_positive, dyadic_maximal, dyadic_positive_operator, exp_maximal, fractional_maximal_bracket, log_box_integral,
    lq_norm_layer_cake, lq_norm_tiles, strong_norm_bounds, superlevel_measure, window_max_average, FractionalAverage, Moments,
    Params,
};
use crate::orlicz::{check_bp, complementary, ProbeGrid};
use crate::quadrature::{integrate_rect, BorelMeasure, QuadratureSpec};

/// Allowed drift of the kernel-domination constant under window doubling.
const KERNEL_DRIFT: f64 = 0.05;

type Member = (ScalarField, Vec<(Interval, f64)>);

fn members(sc: &Scenario) -> Result<Vec<Member>> {
    box_sum_family(&sc.family)
}

/// `(∫ f^p w dV_α)^{1/p}` over the support of `f`.
fn norm(f: &ScalarField, w: Option<&ScalarField>, p: f64, alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    let Some(supp) = f.support() else {
        return Err(Error::InvalidInput(format!("{f} has no bounded support")));
    };
    if supp.is_empty() || f.is_zero() {
        return Ok(0.0);
    }
    let mut g = f.powf(p);
    if let Some(w) = w {
        g = g.mul(w);
    }
    Ok(integrate_rect(&g, &supp, alpha, spec)?.value.powf(1.0 / p))
}

fn density(w: &ScalarField, alpha: f64) -> BorelMeasure {
    BorelMeasure::Density { density: w.clone(), alpha }
}

/// Run `per` over the family in parallel, keeping member order.
fn rows_over<F>(fam: &[Member], per: F) -> Result<Vec<TrialRow>>
where
    F: Fn(usize, &ScalarField) -> Result<Vec<TrialRow>> + Sync,
{
    let out: Vec<Result<Vec<TrialRow>>> = fam.par_iter().enumerate().map(|(i, (f, _))| per(i, f)).collect();
    let mut rows = Vec::new();
    for r in out {
        rows.extend(r?);
    }
    for (k, r) in rows.iter_mut().enumerate() {
        r.trial = k;
    }
    Ok(rows)
}

/// Largest average over the window and the largest root average: thresholds
/// strictly between them have certifiably maximal stopping families.
fn threshold_grid(avg: &FractionalAverage, shift: Shift, w: &ScaleWindow, n: usize) -> Result<Vec<f64>> {
    let (top, _) = window_max_average(avg, shift, w)?;
    let mut floor = 0.0f64;
    for r in w.roots(shift) {
        floor = floor.max(avg.value(&r)?);
    }
    if !(top > floor && floor > 0.0) {
        return Ok(Vec::new());
    }
    Ok((0..n).map(|i| floor * (top / floor).powf((i as f64 + 0.5) / n as f64)).collect())
}

fn sample_points(rng: &mut ChaCha8Rng, n: usize, x: (f64, f64), y: (f64, f64)) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let px = rng.gen_range(x.0..x.1);
            let py = (rng.gen_range(y.0.ln()..y.1.ln())).exp();
            Point::new(px, py)
        })
        .collect()
}

fn family_span(sc: &Scenario) -> (f64, f64) {
    (sc.family.x_lo, sc.family.x_hi)
}

fn half(sc: &Scenario, per_member: usize) -> usize {
    per_member * sc.family.count.div_ceil(2)
}

/// Dispatch on the scenario's tag and time the run.
pub fn verify(sc: &Scenario) -> Result<VerificationResult> {
    let t0 = Instant::now();
    let mut r = match sc.tag {
        TheoremTag::WeakType => verify_weak_type(sc)?,
        TheoremTag::SupBound => verify_sup_bound(sc)?,
        TheoremTag::StrongExplicit => {
            VerificationResult::merge(sc.tag, vec![verify_strong_explicit(sc)?, verify_level_sets(sc)?])
        }
        TheoremTag::Weak | TheoremTag::WeakMeasure => verify_weak(sc)?,
        TheoremTag::Sawyer => verify_sawyer(sc)?,
        TheoremTag::StrongClass => verify_strong_class(sc)?,
        TheoremTag::BumpMaximal => verify_bump_maximal(sc)?,
        TheoremTag::BumpBergman => {
            VerificationResult::merge(sc.tag, vec![verify_bump_bergman(sc)?, verify_kernel_domination(sc)?])
        }
        TheoremTag::Norms => verify_norms(sc)?,
        TheoremTag::CpqImproved => verify_cpq_improved(sc)?,
        TheoremTag::SharpPair => verify_sharp_pair(sc)?,
        TheoremTag::SharpExponent => verify_sharp_exponent(sc)?,
        TheoremTag::Diagonal => verify_diagonal(sc)?,
        TheoremTag::Equivalence => verify_equivalence(sc)?,
        TheoremTag::Embedding => verify_carleson_embedding(sc)?,
        TheoremTag::Sharpness => verify_sharpness(sc)?,
    };
    r.tag = sc.tag;
    r.runtime = t0.elapsed();
    Ok(r)
}

/// `|{M^{d,β}_{σ,α,γ} f > λ}|_{σ,α} <= (λ^{-1} ∫ fσ dV_α)^{(2+α)/(2+α-γ)}`,
/// constant 1, over a threshold sweep per member and grid.
pub fn verify_weak_type(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let mu = density(&sc.sigma, p.alpha);
    let expo = (2.0 + p.alpha) / p.d();
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let mass = norm(&f.mul(&sc.sigma), None, 1.0, p.alpha, spec)?;
        if mass == 0.0 {
            return Ok(vec![TrialRow::new(0, format!("f{i} zero"), 0.0, 0.0)]);
        }
        let avg = FractionalAverage::weighted(f, &sc.sigma, &p, spec);
        let mut rows = Vec::new();
        for &shift in &sc.shifts {
            for lam in threshold_grid(&avg, shift, w, sc.lambdas)? {
                let lhs = superlevel_measure(&avg, shift, lam, &mu, w, spec)?;
                rows.push(TrialRow::new(0, format!("f{i} β={shift} λ={lam:.6e}"), lhs, (mass / lam).powf(expo)));
            }
        }
        Ok(rows)
    })?;
    Ok(VerificationResult::inequality(TheoremTag::WeakType, rows, sc.tolerance))
}

/// `sup M^{d,β} f <= ‖f‖_{(2+α)/γ, α}` with `|Q_I|_α` normalisation.
pub fn verify_sup_bound(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    if !(p.gamma > 0.0) {
        return Err(Error::InvalidInput("the sup bound needs γ > 0".into()));
    }
    let r = (2.0 + p.alpha) / p.gamma;
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let n = norm(f, None, r, p.alpha, &sc.spec)?;
        let avg = FractionalAverage::alpha_measure(f, &p, &sc.spec);
        let mut rows = Vec::new();
        for &shift in &sc.shifts {
            let (top, _) = window_max_average(&avg, shift, &sc.window)?;
            rows.push(TrialRow::new(0, format!("f{i} β={shift}"), top, n));
        }
        Ok(rows)
    })?;
    Ok(VerificationResult::inequality(TheoremTag::SupBound, rows, sc.tolerance)
        .note(format!("norm exponent (2+α)/γ = {r}")))
}

/// Certified upper bound of `‖M_{α,γ} f‖_{q,α}` against
/// `((1+p'/q) C_{α,γ})^{1-γ/(2+α)} ‖f‖_{p,α}`.
pub fn verify_strong_explicit(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let c = p.strong_constant();
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let n = norm(f, None, p.p, p.alpha, &sc.spec)?;
        if n == 0.0 {
            return Ok(vec![TrialRow::new(0, format!("f{i} zero"), 0.0, 0.0)]);
        }
        let m = Moments::new(f.clone(), p.alpha, sc.spec);
        let b = strong_norm_bounds(&m, &p, &sc.window, sc.density)?;
        Ok(vec![TrialRow::new(0, format!("f{i} lower={:.6e} tail={:.2e}", b.lower, b.tail_share), b.upper, c * n)])
    })?;
    Ok(VerificationResult::inequality(TheoremTag::StrongExplicit, rows, sc.tolerance)
        .note(format!("explicit constant {c:.6}, C_(α,γ) = {:.6}", p.level_set_constant())))
}

/// Level-set embedding: `lower(z) > λ ⇒ max_β M^{d,β} f(z) > λ/C_{α,γ}`.
/// Each row is `λ` against `C·max_β M^{d,β}`; two thresholds per point,
/// one just under the lower bracket and one uniform below it.
pub fn verify_level_sets(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let c = p.level_set_constant();
    let w = &sc.window;
    let fam = members(sc)?;
    let per = (sc.samples / fam.len().max(1)).max(1);
    let span = family_span(sc);
    let y_range = (pow2(w.j_min + 1), pow2(w.j_max - 2).max(pow2(w.j_min + 2)));
    let hits: Vec<Result<(Vec<TrialRow>, [usize; 2])>> = fam
        .par_iter()
        .enumerate()
        .map(|(i, (f, _))| {
            let mut rng = ChaCha8Rng::seed_from_u64(sc.family.seed ^ 0x5eed);
            rng.set_stream(i as u64);
            let m = Moments::new(f.clone(), p.alpha, sc.spec);
            let avg = FractionalAverage::from_moments(m.clone(), f.clone(), crate::operators::Normalization::SideLength, p.gamma);
            let mut rows = Vec::new();
            let mut per_beta = [0usize; 2];
            for z in sample_points(&mut rng, per, span, y_range) {
                let lower = fractional_maximal_bracket(&m, &p, z, w, sc.density)?.lower;
                if lower == 0.0 {
                    continue;
                }
                let dy = [dyadic_maximal(&avg, Shift::Zero, z, w)?, dyadic_maximal(&avg, Shift::Third, z, w)?];
                let best = dy[0].max(dy[1]);
                for lam in [lower * (1.0 - 1e-12), lower * rng.gen_range(0.0..1.0)] {
                    for (k, v) in dy.iter().enumerate() {
                        if *v > lam / c {
                            per_beta[k] += 1;
                        }
                    }
                    rows.push(TrialRow::new(0, format!("f{i} z=({:.4},{:.4e})", z.x, z.y), lam, c * best));
                }
            }
            Ok((rows, per_beta))
        })
        .collect();
    let mut rows = Vec::new();
    let mut per_beta = [0usize; 2];
    for h in hits {
        let (r, b) = h?;
        rows.extend(r);
        per_beta[0] += b[0];
        per_beta[1] += b[1];
    }
    for (k, r) in rows.iter_mut().enumerate() {
        r.trial = k;
    }
    let n = rows.len();
    Ok(VerificationResult::inequality(TheoremTag::StrongExplicit, rows, 0.0).note(format!(
        "level sets: {n} (z, λ) pairs; single-grid implication held for β=0 in {} and β=1/3 in {}",
        per_beta[0], per_beta[1]
    )))
}

/// Two-weight weak type: `μ{M^{d,β} f > λ} <= C λ^{-q} ‖f‖_{p,ω,α}^q` with `C`
/// the weak-class constant (exact for the dyadic operator with `|Q_I|_α`
/// normalisation), and the converse on the extremal function of the argmax box.
pub fn verify_weak(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let wc = class_constant(&ClassCondition::WeakClass { omega: sc.omega.clone(), mu: sc.mu.clone() }, &p, w, spec)?;
    let c = wc.value;
    let fam = members(sc)?;
    let mut rows = rows_over(&fam, |i, f| {
        let n = norm(f, Some(&sc.omega), p.p, p.alpha, spec)?;
        if n == 0.0 {
            return Ok(vec![TrialRow::new(0, format!("f{i} zero"), 0.0, 0.0)]);
        }
        let avg = FractionalAverage::alpha_measure(f, &p, spec);
        let mut rows = Vec::new();
        for &shift in &sc.shifts {
            for lam in threshold_grid(&avg, shift, w, sc.lambdas)? {
                let lhs = superlevel_measure(&avg, shift, lam, &sc.mu, w, spec)?;
                rows.push(TrialRow::new(0, format!("f{i} β={shift} λ={lam:.6e}"), lhs, c * (n / lam).powf(p.q)));
            }
        }
        Ok(rows)
    })?;
    let mut notes = vec![
        format!("weak-class constant {c:.6e} (argmax {:?})", wc.argmax.map(|d| d.to_string())),
        format!("non-dyadic reading multiplies C by C_(α,γ)^q = {:.6e}", p.level_set_constant().powf(p.q)),
    ];
    match (wc.argmax, p.p > 1.0) {
        (Some(i), true) => {
            let observed = extremal_weak_constant(sc, &i)?;
            rows.push(TrialRow::new(rows.len(), format!("converse at {i}: class vs observed"), c, observed));
            notes.push(format!("converse: extremal function on {i} realises C = {observed:.6e}"));
        }
        (_, false) => notes.push("converse skipped: p = 1 has no dual-power extremal".into()),
        (None, _) => notes.push("converse skipped: zero weak-class constant".into()),
    }
    let mut r = VerificationResult::inequality(sc.tag, rows, sc.tolerance);
    r.notes.extend(notes);
    Ok(r)
}

/// Observed weak constant of `g = ω^{1-p'} χ_{Q_I}` at `λ` just below its
/// average on `Q_I`.
fn extremal_weak_constant(sc: &Scenario, i: &DyadicInterval) -> Result<f64> {
    let p = sc.params;
    let spec = &sc.spec;
    let g = sc.omega.powf(1.0 - p.p_conj()).mul(&ScalarField::dyadic_box_indicator(i));
    let avg = FractionalAverage::alpha_measure(&g, &p, spec);
    let lam = avg.value(i)? * (1.0 - 1e-9);
    let mut w = sc.window;
    while i.scale >= w.j_max {
        w = w.raise(1);
    }
    let level = superlevel_measure(&avg, i.shift, lam, &sc.mu, &w, spec)?;
    let n = norm(&g, Some(&sc.omega), p.p, p.alpha, spec)?;
    Ok(level * (lam / n).powf(p.q))
}

/// Sawyer two-sidedness: the testing constant is attained by its own test
/// function, and `‖M^{d,β}(σf)‖_{L^q(μ)} <= K · testing · ‖f‖_{p,σ,α}` with
/// `K` fitted over the family.
pub fn verify_sawyer(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let shift = sc.shifts[0];
    let t = sawyer_testing(&sc.sigma, &sc.mu, &p, shift, w, spec)?;
    if t.value == 0.0 {
        return Ok(VerificationResult::inequality(TheoremTag::Sawyer, vec![TrialRow::new(0, "zero testing", 0.0, 0.0)], sc.tolerance)
            .note("σ vanishes on every test box"));
    }
    let fam = members(sc)?;
    let tails = std::sync::atomic::AtomicUsize::new(0);
    let fam_rows = rows_over(&fam, |i, f| {
        let n = norm(f, Some(&sc.sigma), p.p, p.alpha, spec)?;
        if n == 0.0 {
            return Ok(vec![TrialRow::new(0, format!("f{i} zero"), 0.0, 0.0)]);
        }
        let avg = FractionalAverage::side_length(&f.mul(&sc.sigma), &p, spec);
        let lc = lq_norm_layer_cake(&avg, shift, &sc.mu, p.q, w, LAYER_RATIO, spec)?;
        if lc.tail_flag {
            tails.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok(vec![TrialRow::new(0, format!("f{i}"), lc.value, t.value * n)])
    })?;
    // the test function of the argmax box, run through the same operator as the family
    let mut rows = Vec::new();
    if let Some(i) = t.argmax {
        let f = ScalarField::dyadic_box_indicator(&i);
        let n = norm(&f, Some(&sc.sigma), p.p, p.alpha, spec)?;
        let avg = FractionalAverage::side_length(&f.mul(&sc.sigma), &p, spec);
        let lc = lq_norm_layer_cake(&avg, shift, &sc.mu, p.q, w, LAYER_RATIO, spec)?;
        rows.push(TrialRow::new(0, format!("test function of {i}"), lc.value, t.value * n));
    }
    let offset = rows.len();
    rows.extend(fam_rows.into_iter().map(|mut r| {
        r.trial += offset;
        r
    }));
    let observed = rows.iter().map(|r| r.ratio).fold(0.0, f64::max) * t.value;
    let mut r = VerificationResult::fitted(TheoremTag::Sawyer, rows, offset + half(sc, 1), sc.stability, sc.k_max);
    let lower_ok = t.value <= observed * (1.0 + sc.tolerance);
    r.pass &= lower_ok;
    r.notes.push(format!(
        "testing constant {:.6e} (refinement delta {:.3e}); best observed ratio {observed:.6e}",
        t.value, t.refinement_delta
    ));
    let n_tail = tails.into_inner();
    if n_tail > 0 {
        r.notes.push(format!("{n_tail} layer-cake norms carried a truncation tail flag"));
    }
    Ok(r)
}

fn binf(w: &ScalarField, sc: &Scenario) -> Result<ConstantReport> {
    bekolle_infinity(w, sc.params.alpha, &sc.window, &sc.spec)
}

/// `‖M^{d,β}(σf)‖_{L^q(μ)} <= [σ,μ]^{1/q} [σ]_{B_∞}^{1/p} ‖f‖_{p,σ,α}`.
pub fn verify_strong_class(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let sm = class_constant(&ClassCondition::StrongClass { sigma: sc.sigma.clone(), mu: sc.mu.clone() }, &p, w, spec)?;
    let b = binf(&sc.sigma, sc)?;
    let k = sm.value.powf(1.0 / p.q) * b.value.powf(1.0 / p.p);
    let k_dyadic = sm.value.powf(1.0 / p.q) * b.dyadic_value.unwrap_or(b.value).powf(1.0 / p.p);
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let n = norm(f, Some(&sc.sigma), p.p, p.alpha, spec)?;
        let avg = FractionalAverage::alpha_measure(&f.mul(&sc.sigma), &p, spec);
        let mut rows = Vec::new();
        for &shift in &sc.shifts {
            let lhs = lq_norm_tiles(&avg, shift, &sc.mu, p.q, w, spec)?;
            rows.push(TrialRow::new(0, format!("f{i} β={shift}"), lhs, k * n));
        }
        Ok(rows)
    })?;
    let worst_dyadic = rows.iter().map(|r| r.ratio * k / k_dyadic).fold(0.0, f64::max);
    Ok(VerificationResult::inequality(TheoremTag::StrongClass, rows, sc.tolerance).note(format!(
        "[σ,μ] = {:.6e}, [σ]_B∞ = {:.6e} (dyadic variant {:.6e}); worst ratio with the dyadic variant {worst_dyadic:.4}",
        sm.value, b.value, b.dyadic_value.unwrap_or(f64::NAN)
    )))
}

fn require_bp(phi: &crate::orlicz::YoungFunction, p: f64, what: &str) -> Result<()> {
    let rep = check_bp(phi, p, 1.0, 1e6)?;
    if !rep.in_bp {
        return Err(Error::BpViolation(format!("{what} = {} is not in B_{p} (tail exponent {})", phi.label(), rep.tail_exponent)));
    }
    Ok(())
}

/// Single-bump sufficient condition: `‖M^{d,β} f‖_{L^q(μ)} <= K ‖fω‖_{p,α}`
/// with `K` fitted against the bump constant.
pub fn verify_bump_maximal(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let phi = sc.phi.as_ref().ok_or_else(|| Error::Config { path: "phi".into(), msg: "bump check needs phi".into() })?;
    require_bp(phi, p.p, "Φ")?;
    let psi = complementary(phi, &ProbeGrid::default())?;
    let bump = class_constant(&ClassCondition::BumpSingle { omega: sc.omega.clone(), mu: sc.mu.clone(), psi }, &p, w, spec)?;
    let scale = bump.value.powf(1.0 / p.q);
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let n = norm(&f.mul(&sc.omega), None, p.p, p.alpha, spec)?;
        if n == 0.0 {
            return Ok(vec![TrialRow::new(0, format!("f{i} zero"), 0.0, 0.0)]);
        }
        let avg = FractionalAverage::side_length(f, &p, spec);
        let mut lhs = 0.0f64;
        for &shift in &sc.shifts {
            lhs = lhs.max(lq_norm_tiles(&avg, shift, &sc.mu, p.q, w, spec)?);
        }
        Ok(vec![TrialRow::new(0, format!("f{i}"), lhs, scale * n)])
    })?;
    Ok(VerificationResult::fitted(TheoremTag::BumpMaximal, rows, half(sc, 1), sc.stability, sc.k_max)
        .note(format!("bump constant {:.6e} with Φ = {}", bump.value, phi.label())))
}

/// `‖ω^{1/q}·Σ_β Q^β f‖_{L^q}` style norm: `(∫ (Σ_β Q^β f)^q ω_q dV_α)^{1/q}`
/// over the window strip, on the common refinement of both grids' tiles.
fn positive_operator_norm(f: &Arc<Moments>, wq: &Arc<Moments>, params: &Params, w: &ScaleWindow) -> Result<f64> {
    let mut acc = 0.0;
    for j in w.j_min..=w.j_max {
        let (y0, y1) = if j == w.j_min { (0.0, pow2(j)) } else { (pow2(j - 1), pow2(j)) };
        let ym = if j == w.j_min { 0.5 * pow2(j) } else { 0.75 * pow2(j) };
        let mut xs = vec![w.x_lo, w.x_hi];
        for shift in Shift::ALL {
            let mut d = DyadicInterval::containing(w.x_lo, j, shift);
            while d.left() < w.x_hi {
                if d.left() > w.x_lo {
                    xs.push(d.left());
                }
                d = DyadicInterval::new(j, d.translation + 1, shift);
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for s in xs.windows(2) {
            let z = Point::new(0.5 * (s[0] + s[1]), ym);
            let mut v = 0.0;
            for shift in Shift::ALL {
                v += dyadic_positive_operator(f, params, shift, z, w)?.value;
            }
            if v > 0.0 {
                acc += v.powf(params.q) * wq.rect(&Rect::new(s[0], s[1], y0, y1))?;
            }
        }
    }
    Ok(acc.powf(1.0 / params.q))
}

/// Double-bump condition for the Bergman operator through its dyadic
/// majorant: `‖ω Σ_β Q^β f‖_{q,α} <= K ‖fσ‖_{p,α}`.
pub fn verify_bump_bergman(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let cfg = |k: &str| Error::Config { path: k.into(), msg: "double-bump check needs phi and psi".into() };
    let phi = sc.phi.as_ref().ok_or_else(|| cfg("phi"))?;
    let psi = sc.psi.as_ref().ok_or_else(|| cfg("psi"))?;
    let grid = ProbeGrid::default();
    require_bp(&complementary(phi, &grid)?, p.p, "complement of Φ")?;
    require_bp(&complementary(psi, &grid)?, crate::orlicz::conj(p.q), "complement of Ψ")?;
    let bump = class_constant(
        &ClassCondition::BumpDouble { omega: sc.omega.clone(), sigma: sc.sigma.clone(), phi: phi.clone(), psi: psi.clone() },
        &p,
        w,
        spec,
    )?;
    let wq = Moments::new(sc.omega.powf(p.q), p.alpha, *spec);
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let n = norm(&f.mul(&sc.sigma), None, p.p, p.alpha, spec)?;
        if n == 0.0 {
            return Ok(vec![TrialRow::new(0, format!("f{i} zero"), 0.0, 0.0)]);
        }
        let m = Moments::new(f.clone(), p.alpha, *spec);
        let lhs = positive_operator_norm(&m, &wq, &p, w)?;
        Ok(vec![TrialRow::new(0, format!("f{i}"), lhs, bump.value * n)])
    })?;
    Ok(VerificationResult::fitted(TheoremTag::BumpBergman, rows, half(sc, 1), sc.stability, sc.k_max)
        .note(format!("double-bump constant {:.6e}", bump.value)))
}

/// `T_{α,γ} f(z) <= C Σ_β Q^β f(z)`: `C` is the largest observed ratio, and
/// must move by less than 5% when the window is doubled.
pub fn verify_kernel_domination(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let wide = w.grow();
    let fam = members(sc)?;
    let fam = &fam[..fam.len().min(5)];
    let per = (sc.samples / fam.len().max(1)).max(1);
    let out: Vec<Result<Vec<(TrialRow, f64)>>> = fam
        .par_iter()
        .enumerate()
        .map(|(i, (f, boxes))| {
            let mut rng = ChaCha8Rng::seed_from_u64(sc.family.seed ^ 0xbe76);
            rng.set_stream(i as u64);
            let m = Moments::new(f.clone(), p.alpha, *spec);
            let lo = boxes.iter().map(|b| b.0.lo).fold(f64::INFINITY, f64::min);
            let hi = boxes.iter().map(|b| b.0.hi).fold(f64::NEG_INFINITY, f64::max);
            let pad = 0.25 * (hi - lo);
            let pts = sample_points(&mut rng, per, (lo - pad, hi + pad), (pow2(w.j_min + 2), 2.0 * (hi - lo)));
            let mut rows = Vec::new();
            for z in pts {
                let t = bergman_positive(f, &p, z, w, spec)?;
                let mut q = 0.0;
                let mut qw = 0.0;
                for shift in Shift::ALL {
                    q += dyadic_positive_operator(&m, &p, shift, z, w)?.value;
                    qw += dyadic_positive_operator(&m, &p, shift, z, &wide)?.value;
                }
                if q > 0.0 {
                    rows.push((TrialRow::new(0, format!("f{i} z=({:.4},{:.4e})", z.x, z.y), t, q), t / qw));
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    let mut c_wide = 0.0f64;
    for o in out {
        for (r, cw) in o? {
            c_wide = c_wide.max(cw);
            rows.push(r);
        }
    }
    for (k, r) in rows.iter_mut().enumerate() {
        r.trial = k;
    }
    let c = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let drift = if c > 0.0 { (c - c_wide).abs() / c } else { 0.0 };
    Ok(VerificationResult {
        tag: TheoremTag::BumpBergman,
        kind: CheckKind::Fitted,
        trials: rows.len(),
        worst_ratio: c,
        pass: c.is_finite() && drift < KERNEL_DRIFT,
        inconclusive: c.is_finite() && drift >= KERNEL_DRIFT,
        tolerance: KERNEL_DRIFT,
        fitted: Some(c),
        stabilization: Some(drift),
        notes: vec![format!(
            "kernel domination: C = {c:.6} on the window, {c_wide:.6} on the doubled window; geometric bound (2√2)^d = {:.4}",
            (2.0 * 2f64.sqrt()).powf(p.d())
        )],
        rows,
        runtime: Default::default(),
    })
}

/// Exp-log maximal image as tiles, the value of a box being
/// `exp(avg log f)` or 0 when the log-average diverges.
fn exp_maximal_norm(f: &ScalarField, alpha: f64, p: f64, shift: Shift, w: &ScaleWindow, spec: &QuadratureSpec) -> Result<f64> {
    let range = w.range();
    let mut acc = 0.0;
    let mut stack: Vec<(DyadicInterval, f64)> = w.roots(shift).into_iter().rev().map(|d| (d, 0.0)).collect();
    while let Some((d, above)) = stack.pop() {
        let q = d.carleson_box();
        let v = match log_box_integral(f, &q, alpha, spec) {
            Ok(l) => (l / q.measure_alpha(alpha)).exp(),
            Err(Error::LogSingular(_)) => 0.0,
            Err(e) => return Err(e),
        };
        let m = above.max(v);
        if d.scale == w.j_min {
            acc += m.powf(p) * q.measure_alpha(alpha);
            continue;
        }
        acc += m.powf(p) * d.top_half().measure_alpha(alpha);
        for c in d.children() {
            if c.intersects(&range) {
                stack.push((c, m));
            } else {
                acc += m.powf(p) * c.carleson_box().measure_alpha(alpha);
            }
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// The three class inequalities (`A_pq`, `C_pq`, `S_pq`) with fitted constants,
/// plus the exp-log maximal function: pointwise Jensen against `M_α` and
/// `‖M^exp f‖_{p,α} <= K ‖f‖_{p,α}`.
pub fn verify_norms(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let (sigma, omega) = (&sc.sigma, &sc.omega);
    let pair = |c: ClassCondition| class_constant(&c, &p, w, spec);
    let a = pair(ClassCondition::Apq { sigma: sigma.clone(), omega: omega.clone() })?;
    let cc = pair(ClassCondition::Cpq { sigma: sigma.clone(), omega: omega.clone() })?;
    let s = pair(ClassCondition::Spq { sigma: sigma.clone(), omega: omega.clone() })?;
    let b_sigma = binf(sigma, sc)?;
    let u = sigma.powf(-p.p_conj());
    let b_u = binf(&u, sc)?;
    let mu = density(omega, p.alpha);
    let fam = members(sc)?;
    let norms_of = |f: &ScalarField| -> Result<(f64, f64, f64, f64)> {
        let sf = FractionalAverage::side_length(&f.mul(sigma), &p, spec);
        let pf = FractionalAverage::side_length(f, &p, spec);
        let (mut l_sf, mut l_f) = (0.0f64, 0.0f64);
        for &shift in &sc.shifts {
            l_sf = l_sf.max(lq_norm_tiles(&sf, shift, &mu, p.q, w, spec)?);
            l_f = l_f.max(lq_norm_tiles(&pf, shift, &mu, p.q, w, spec)?);
        }
        Ok((l_sf, l_f, norm(f, Some(sigma), p.p, p.alpha, spec)?, norm(&f.mul(sigma), None, p.p, p.alpha, spec)?))
    };
    let all: Vec<Result<(f64, f64, f64, f64)>> = fam.par_iter().map(|(f, _)| norms_of(f)).collect();
    let all: Vec<(f64, f64, f64, f64)> = all.into_iter().collect::<Result<_>>()?;
    let mk = |k: f64, lhs: &dyn Fn(&(f64, f64, f64, f64)) -> (f64, f64), name: &str| {
        let rows = all
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let (l, n) = lhs(x);
                TrialRow::new(i, format!("{name} f{i}"), l, k * n)
            })
            .collect();
        VerificationResult::fitted(TheoremTag::Norms, rows, half(sc, 1), sc.stability, sc.k_max)
    };
    let ka = (a.value * b_sigma.value).powf(1.0 / p.p);
    let kc = cc.value * b_u.value.powf(1.0 / p.p);
    let ks = s.value.powf(1.0 / p.p);
    let ra = mk(ka, &|x| (x.0, x.2), "A_pq").note(format!("[σ,ω]_A = {:.6e}, [σ]_B∞ = {:.6e}", a.value, b_sigma.value));
    let rc = mk(kc, &|x| (x.1, x.3), "C_pq").note(format!("[σ,ω]_C = {:.6e}, [σ^(-p')]_B∞ = {:.6e}", cc.value, b_u.value));
    let rs = mk(ks, &|x| (x.0, x.2), "S_pq").note(format!("[σ,ω]_S = {:.6e}", s.value));
    let (re, rj) = exp_checks(sc, &fam)?;
    Ok(VerificationResult::merge(TheoremTag::Norms, vec![ra, rc, rs, re, rj]))
}

/// Members lifted by a pedestal on the family span so that `log f` is finite there.
fn exp_checks(sc: &Scenario, fam: &[Member]) -> Result<(VerificationResult, VerificationResult)> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let hl = Params::new(p.p, p.p, p.alpha, 0.0)?;
    let (lo, hi) = family_span(sc);
    let per = (sc.samples / fam.len().max(1)).max(1);
    let out: Vec<Result<(TrialRow, Vec<TrialRow>)>> = fam
        .par_iter()
        .enumerate()
        .map(|(i, (_, boxes))| {
            let mut cells: Vec<(Interval, f64)> = boxes.clone();
            cells.push((Interval::new(lo, hi), 0.05));
            let g = ScalarField::box_sum(&cells);
            let n = norm(&g, None, p.p, p.alpha, spec)?;
            let mut l = 0.0f64;
            for &shift in &sc.shifts {
                l = l.max(exp_maximal_norm(&g, p.alpha, p.p, shift, w, spec)?);
            }
            let norm_row = TrialRow::new(i, format!("exp f{i}"), l, n);
            let mut rng = ChaCha8Rng::seed_from_u64(sc.family.seed ^ 0xe4b);
            rng.set_stream(i as u64);
            let avg = FractionalAverage::alpha_measure(&g, &hl, spec);
            let mut pts = Vec::new();
            for z in sample_points(&mut rng, per, (lo, hi), (pow2(w.j_min + 1), hi - lo)) {
                let shift = sc.shifts[0];
                let e = exp_maximal(&g, p.alpha, shift, z, w, spec)?;
                let m = dyadic_maximal(&avg, shift, z, w)?;
                pts.push(TrialRow::new(0, format!("Jensen f{i} z=({:.4},{:.4e})", z.x, z.y), e, m));
            }
            Ok((norm_row, pts))
        })
        .collect();
    let mut norm_rows = Vec::new();
    let mut jensen = Vec::new();
    for o in out {
        let (a, b) = o?;
        norm_rows.push(a);
        jensen.extend(b);
    }
    for (k, r) in jensen.iter_mut().enumerate() {
        r.trial = k;
    }
    let re = VerificationResult::fitted(TheoremTag::Norms, norm_rows, half(sc, 1), sc.stability, sc.k_max)
        .note("exp-log maximal: tested ‖M^exp f‖ <= C^(1/p) ‖f‖, the inequality the proof establishes");
    let rj = VerificationResult::inequality(TheoremTag::Norms, jensen, 1e-12).note("pointwise M^exp f <= M_α f (Jensen)");
    Ok((re, rj))
}

/// `‖M f‖_{q,ω,α} ≲ [σ,ω]_C [σ^{-p'}]_{B_∞}^{1/q} ‖σf‖_{p,α}`.
pub fn verify_cpq_improved(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let cc = class_constant(&ClassCondition::Cpq { sigma: sc.sigma.clone(), omega: sc.omega.clone() }, &p, w, spec)?;
    let b_u = binf(&sc.sigma.powf(-p.p_conj()), sc)?;
    let k = cc.value * b_u.value.powf(1.0 / p.q);
    let mu = density(&sc.omega, p.alpha);
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let avg = FractionalAverage::side_length(f, &p, spec);
        let mut l = 0.0f64;
        for &shift in &sc.shifts {
            l = l.max(lq_norm_tiles(&avg, shift, &mu, p.q, w, spec)?);
        }
        Ok(vec![TrialRow::new(0, format!("f{i}"), l, k * norm(&f.mul(&sc.sigma), None, p.p, p.alpha, spec)?)])
    })?;
    Ok(VerificationResult::fitted(TheoremTag::CpqImproved, rows, half(sc, 1), sc.stability, sc.k_max)
        .note(format!("[σ,ω]_C = {:.6e}, [σ^(-p')]_B∞ = {:.6e}", cc.value, b_u.value)))
}

/// `‖ω M f‖_{q,α}` for each member together with `‖ωf‖_{p,α}`.
fn weighted_pairs(sc: &Scenario) -> Result<Vec<(f64, f64)>> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let mu = density(&sc.omega.powf(p.q), p.alpha);
    let fam = members(sc)?;
    let out: Vec<Result<(f64, f64)>> = fam
        .par_iter()
        .map(|(f, _)| {
            let avg = FractionalAverage::side_length(f, &p, spec);
            let mut l = 0.0f64;
            for &shift in &sc.shifts {
                l = l.max(lq_norm_tiles(&avg, shift, &mu, p.q, w, spec)?);
            }
            Ok((l, norm(&f.mul(&sc.omega), None, p.p, p.alpha, spec)?))
        })
        .collect();
    out.into_iter().collect()
}

fn bpq(sc: &Scenario) -> Result<ConstantReport> {
    class_constant(&ClassCondition::BpqJoint { omega: sc.omega.clone() }, &sc.params, &sc.window, &sc.spec)
}

fn require_critical(p: &Params) -> Result<()> {
    if p.is_critical() {
        Ok(())
    } else {
        Err(Error::Config { path: "params.q".into(), msg: "this check needs 1/q = 1/p - γ/(2+α)".into() })
    }
}

/// `‖ω M f‖_{q,α} ≲ [ω]_{B_pq}^{1/q} [ω^{-p'}]_{B_∞}^{1/q} ‖ωf‖_{p,α}`.
pub fn verify_sharp_pair(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    require_critical(&p)?;
    let b = bpq(sc)?;
    let bu = binf(&sc.omega.powf(-p.p_conj()), sc)?;
    let k = (b.value * bu.value).powf(1.0 / p.q);
    let rows = weighted_pairs(sc)?
        .into_iter()
        .enumerate()
        .map(|(i, (l, n))| TrialRow::new(i, format!("f{i}"), l, k * n))
        .collect();
    Ok(VerificationResult::fitted(TheoremTag::SharpPair, rows, half(sc, 1), sc.stability, sc.k_max)
        .note(format!("[ω]_Bpq = {:.6e}, [ω^(-p')]_B∞ = {:.6e}", b.value, bu.value)))
}

/// `‖ω M f‖_{q,α} <= [ω]_{B_pq}^{(p'/q)(1-γ/(2+α))} ‖ωf‖_{p,α}`; the constant
/// is fitted and the share of trials above the constant-1 reading is reported.
pub fn verify_sharp_exponent(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    require_critical(&p)?;
    let b = bpq(sc)?;
    let e = p.p_conj() / p.q * p.frac_exponent();
    let k = b.value.powf(e);
    let rows: Vec<TrialRow> = weighted_pairs(sc)?
        .into_iter()
        .enumerate()
        .map(|(i, (l, n))| TrialRow::new(i, format!("f{i}"), l, k * n))
        .collect();
    let above = rows.iter().filter(|r| r.ratio > 1.0).count();
    let n = rows.len();
    Ok(VerificationResult::fitted(TheoremTag::SharpExponent, rows, half(sc, 1), sc.stability, sc.k_max).note(format!(
        "[ω]_Bpq = {:.6e}, exponent {e:.6}; {above} of {n} trials exceed the constant-1 reading",
        b.value
    )))
}

/// `p = q`, `γ = 0`: `‖M_α f‖_{p,σ,α} <= K [σ]_{B_p}^{p'/p} ‖f‖_{p,σ,α}`, the
/// specialisation of the sharp-exponent bound with `ω = σ^{1/p}`.
pub fn verify_diagonal(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    if !(p.q == p.p && p.gamma == 0.0) {
        return Err(Error::Config { path: "params".into(), msg: "the diagonal check needs q = p and γ = 0".into() });
    }
    let (w, spec) = (&sc.window, &sc.spec);
    let bp = bekolle_bonami(&sc.sigma, p.p, p.alpha, w, spec)?;
    let e = p.p_conj() / p.p;
    let k = bp.value.powf(e);
    let mu = density(&sc.sigma, p.alpha);
    let fam = members(sc)?;
    let rows = rows_over(&fam, |i, f| {
        let avg = FractionalAverage::alpha_measure(f, &p, spec);
        let mut l = 0.0f64;
        for &shift in &sc.shifts {
            l = l.max(lq_norm_tiles(&avg, shift, &mu, p.p, w, spec)?);
        }
        Ok(vec![TrialRow::new(0, format!("f{i}"), l, k * norm(f, Some(&sc.sigma), p.p, p.alpha, spec)?)])
    })?;
    let alt = bp.value.powf(p.p / p.p_conj());
    let worst_alt = rows.iter().map(|r| r.ratio * k / alt).fold(0.0, f64::max);
    Ok(VerificationResult::fitted(TheoremTag::Diagonal, rows, half(sc, 1), sc.stability, sc.k_max).note(format!(
        "[σ]_Bp = {:.6e}; exponent p'/p = {e:.4}; with exponent p/p' the worst ratio is {worst_alt:.4}",
        bp.value
    )))
}

/// Box-wise equivalence: Hölder gives condition (ii) with `C_2 = C_1`, and the
/// extremal `ω^{1-p'} χ_{Q_I}` gives back `C_1`.
pub fn verify_equivalence(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let wc = class_constant(&ClassCondition::WeakClass { omega: sc.omega.clone(), mu: sc.mu.clone() }, &p, w, spec)?;
    let c1 = wc.value;
    let boxes: Vec<DyadicInterval> = sc.shifts.iter().flat_map(|&s| w.intervals(s)).collect();
    let g = p.gamma / (2.0 + p.alpha);
    let fam = members(sc)?;
    let side = |f: &ScalarField, d: &DyadicInterval| -> Result<Option<(f64, f64)>> {
        let q = d.carleson_box();
        let num = integrate_rect(f, &q, p.alpha, spec)?.value;
        if num == 0.0 {
            return Ok(None);
        }
        let qa = q.measure_alpha(p.alpha);
        let lhs = (num / qa.powf(1.0 - g)).powf(p.q) * sc.mu.of_rect(&q, spec)?;
        let rhs = integrate_rect(&f.powf(p.p).mul(&sc.omega), &q, p.alpha, spec)?.value.powf(p.q / p.p);
        Ok(Some((lhs, rhs)))
    };
    let mut rows = rows_over(&fam, |i, f| {
        let supp = f.support().unwrap_or(Rect::new(0.0, 0.0, 0.0, 0.0));
        let mut worst: Option<TrialRow> = None;
        for d in &boxes {
            if d.right() <= supp.x0 || d.left() >= supp.x1 {
                continue;
            }
            if let Some((l, r)) = side(f, d)? {
                let row = TrialRow::new(0, format!("f{i} worst box {d}"), l, c1 * r);
                if worst.as_ref().map_or(true, |x| row.ratio > x.ratio) {
                    worst = Some(row);
                }
            }
        }
        Ok(worst.into_iter().collect())
    })?;
    let mut notes = vec![format!("C1 = {c1:.6e}; rows keep the worst box of each member")];
    match (wc.argmax, p.p > 1.0) {
        (Some(i), true) => {
            let ext = sc.omega.powf(1.0 - p.p_conj()).mul(&ScalarField::dyadic_box_indicator(&i));
            if let Some((l, r)) = side(&ext, &i)? {
                rows.push(TrialRow::new(rows.len(), format!("extremal on {i}: C1 vs realised"), c1, l / r));
                notes.push(format!("extremal function realises {:.6e}", l / r));
            }
        }
        _ => notes.push("extremal converse skipped (p = 1 or zero constant)".into()),
    }
    let mut r = VerificationResult::inequality(TheoremTag::Equivalence, rows, sc.tolerance);
    r.notes.extend(notes);
    Ok(r)
}

/// Carleson embedding with `λ_I = |Q_I|_{σ,α}^s`: the weighted fractional
/// averages raised to `ps` summed against `λ` are at most
/// `K A ‖M^{d,β}_{σ,α,γ} f‖_{p,σ,α}^{ps}`, `K` fitted.
pub fn verify_carleson_embedding(sc: &Scenario) -> Result<VerificationResult> {
    let p = sc.params;
    let (w, spec) = (&sc.window, &sc.spec);
    let mu = density(&sc.sigma, p.alpha);
    let fam = members(sc)?;
    let mut parts = Vec::new();
    for &shift in &sc.shifts {
        let lam: std::collections::HashMap<DyadicInterval, f64> =
            measure_sequence(&sc.sigma, p.alpha, shift, w, spec)?.into_iter().map(|(d, v)| (d, v.powf(sc.s))).collect();
        let a = carleson_sequence_constant(&lam, &sc.sigma, p.alpha, sc.s, w, spec)?.value;
        let ps = p.p * sc.s;
        let rows = rows_over(&fam, |i, f| {
            let avg = FractionalAverage::weighted(f, &sc.sigma, &p, spec);
            let mut lhs = 0.0;
            for (d, l) in &lam {
                let v = avg.value(d)?;
                if v > 0.0 {
                    lhs += l * v.powf(ps);
                }
            }
            let m = lq_norm_tiles(&avg, shift, &mu, p.p, w, spec)?;
            Ok(vec![TrialRow::new(0, format!("f{i} β={shift}"), lhs, a * m.powf(ps))])
        })?;
        parts.push(
            VerificationResult::fitted(TheoremTag::Embedding, rows, half(sc, 1), sc.stability, sc.k_max)
                .note(format!("β={shift}: Carleson constant A = {a:.6e}, s = {}, γ = {}", sc.s, p.gamma)),
        );
    }
    Ok(VerificationResult::merge(TheoremTag::Embedding, parts))
}

/// `{|Q_I|_{ω,α}}` is `(ω,α,1)`-Carleson with constant at most `[ω]_{B_∞}`.
pub fn verify_carleson_binf(omega: &ScalarField, alpha: f64, w: &ScaleWindow, spec: &QuadratureSpec, tol: f64) -> Result<VerificationResult> {
    let mut lam = measure_sequence(omega, alpha, Shift::Zero, w, spec)?;
    lam.extend(measure_sequence(omega, alpha, Shift::Third, w, spec)?);
    let c = carleson_sequence_constant(&lam, omega, alpha, 1.0, w, spec)?;
    let b = bekolle_infinity(omega, alpha, w, spec)?;
    let row = TrialRow::new(0, format!("ω = {omega}"), c.value, b.value);
    Ok(VerificationResult::inequality(TheoremTag::Embedding, vec![row], tol).note(format!(
        "Carleson constant {:.6} vs B∞ {:.6} (dyadic variant {:.6})",
        c.value,
        b.value,
        b.dyadic_value.unwrap_or(f64::NAN)
    )))
}

fn verify_sharpness(sc: &Scenario) -> Result<VerificationResult> {
    let opts = SweepOptions { depth: sc.depth, spec: sc.spec, ..SweepOptions::default() };
    let rep = match sharpness_sweep(&sc.params, &sc.eps, &opts) {
        Ok(r) => r,
        Err(Error::TailDominated(msg)) => {
            return Ok(VerificationResult {
                tag: TheoremTag::Sharpness,
                kind: CheckKind::Rate,
                trials: sc.eps.len(),
                worst_ratio: f64::NAN,
                pass: false,
                inconclusive: true,
                tolerance: 0.15,
                fitted: None,
                stabilization: None,
                notes: vec![format!("tail dominated: {msg}")],
                rows: Vec::new(),
                runtime: Default::default(),
            })
        }
        Err(e) => return Err(e),
    };
    let mut rows: Vec<TrialRow> = rep
        .fits
        .iter()
        .enumerate()
        .map(|(i, f)| TrialRow { trial: i, label: format!("slope {}", f.name), lhs: f.slope, rhs: f.target, ratio: f.slope / f.target })
        .collect();
    for r in &rep.rows {
        rows.push(TrialRow {
            trial: rows.len(),
            label: format!("ε={} bpq={:.6e} ‖ωf‖={:.6e}", r.eps, r.bpq, r.norm_wf),
            lhs: r.norm_wmf,
            rhs: r.norm_wf,
            ratio: r.ratio,
        });
    }
    let worst = rep.fits.iter().map(|f| f.rel_err).fold(0.0, f64::max);
    Ok(VerificationResult {
        tag: TheoremTag::Sharpness,
        kind: CheckKind::Rate,
        trials: rep.rows.len(),
        worst_ratio: worst,
        pass: rep.pass,
        inconclusive: false,
        tolerance: 0.15,
        fitted: None,
        stabilization: None,
        notes: vec!["rate rows: lhs = fitted slope, rhs = target; worst_ratio is the largest relative slope error".into()],
        rows,
        runtime: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::FamilySpec;

    fn scenario(tag: TheoremTag, p: Params, w: ScaleWindow) -> Scenario {
        Scenario::basic(tag, p, w).unwrap()
    }

    fn small(sc: Scenario, count: usize) -> Scenario {
        sc.with_config(|c| c.family = FamilySpec { count, ..c.family }).unwrap()
    }

    #[test]
    fn weak_type_constant_one_unweighted() {
        let p = Params::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let sc = small(scenario(TheoremTag::WeakType, p, ScaleWindow::new(-5, 3, -4.0, 4.0).unwrap()), 4);
        let r = verify(&sc).unwrap();
        assert!(r.pass, "worst {}", r.worst_ratio);
        assert!(r.trials > 100);
    }

    #[test]
    fn weak_two_weight_is_exact_with_converse() {
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let sc = scenario(TheoremTag::Weak, p, ScaleWindow::new(-5, 3, -4.0, 4.0).unwrap())
            .with_config(|c| {
                c.omega = "power_y 0.5".into();
                c.family.count = 3;
                c.lambdas = 8;
            })
            .unwrap();
        let r = verify(&sc).unwrap();
        assert!(r.pass, "worst {} notes {:?}", r.worst_ratio, r.notes);
        let conv = r.rows.last().unwrap();
        assert!((conv.ratio - 1.0).abs() < 1e-6, "converse ratio {}", conv.ratio);
    }

    #[test]
    fn sup_bound_holds() {
        let p = Params::critical(2.0, 0.0, 0.5).unwrap();
        let sc = small(scenario(TheoremTag::SupBound, p, ScaleWindow::new(-6, 3, -4.0, 4.0).unwrap()), 5);
        let r = verify(&sc).unwrap();
        assert!(r.pass && r.worst_ratio > 0.1, "{}", r.worst_ratio);
    }

    #[test]
    fn equivalence_constant_is_attained() {
        let p = Params::new(2.0, 3.0, 0.0, 0.25).unwrap();
        let sc = scenario(TheoremTag::Equivalence, p, ScaleWindow::new(-4, 2, -2.0, 2.0).unwrap())
            .with_config(|c| {
                c.omega = "power_y 0.3".into();
                c.family.count = 3;
            })
            .unwrap();
        let r = verify(&sc).unwrap();
        assert!(r.pass, "{} {:?}", r.worst_ratio, r.notes);
        assert!((r.rows.last().unwrap().ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn positive_operator_norm_matches_pointwise_sum() {
        // a single box: check the refinement against a direct midpoint sum
        let p = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let w = ScaleWindow::new(-2, 1, -2.0, 2.0).unwrap();
        let spec = QuadratureSpec::default();
        let f = ScalarField::box_indicator(Interval::new(0.0, 1.0));
        let m = Moments::new(f, 0.0, spec);
        let one = Moments::new(ScalarField::constant(1.0), 0.0, spec);
        let got = positive_operator_norm(&m, &one, &p, &w).unwrap();
        let n = 384;
        let mut acc = 0.0;
        for j in w.j_min..=w.j_max {
            let (y0, y1) = if j == w.j_min { (0.0, pow2(j)) } else { (pow2(j - 1), pow2(j)) };
            for a in 0..n {
                let x = w.x_lo + (a as f64 + 0.5) / n as f64 * (w.x_hi - w.x_lo);
                let z = Point::new(x, 0.5 * (y0 + y1));
                let v: f64 = Shift::ALL.iter().map(|&s| dyadic_positive_operator(&m, &p, s, z, &w).unwrap().value).sum();
                acc += v * v * (w.x_hi - w.x_lo) / n as f64 * (y1 - y0);
            }
        }
        // x-cells of width 1/96 align with every breakpoint at these scales
        assert!((got - acc.sqrt()).abs() < 1e-12 * got, "{got} vs {}", acc.sqrt());
    }
}
