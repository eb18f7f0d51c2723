//! Theorem-level verification harness: scenarios, box-sum test families,
//! inequality and fitted-constant checks, and the ε-sweep for sharpness rates.

pub mod expr;
mod family;
mod scenario;
mod sharpness;
mod verify;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use family::{box_sum_family, FamilySpec};
pub use scenario::{Scenario, ScenarioConfig};
pub use sharpness::{sharpness_sweep, RateFit, SharpnessReport, SharpnessRow, SweepOptions};
pub use verify::{
    verify, verify_bump_bergman, verify_bump_maximal, verify_carleson_binf, verify_carleson_embedding, verify_cpq_improved,
    verify_diagonal, verify_equivalence, verify_kernel_domination, verify_level_sets, verify_norms, verify_sawyer,
    verify_sharp_exponent, verify_sharp_pair, verify_strong_class, verify_strong_explicit, verify_sup_bound, verify_weak,
    verify_weak_type,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremTag {
    #[serde(rename = "T2.1a")]
    WeakType,
    #[serde(rename = "T2.1b")]
    SupBound,
    #[serde(rename = "C2.1")]
    StrongExplicit,
    #[serde(rename = "T2.2")]
    Weak,
    #[serde(rename = "T2.3")]
    WeakMeasure,
    #[serde(rename = "T2.4")]
    Sawyer,
    #[serde(rename = "T2.5")]
    StrongClass,
    #[serde(rename = "T2.6")]
    BumpMaximal,
    #[serde(rename = "T2.7")]
    BumpBergman,
    #[serde(rename = "T2.8")]
    Norms,
    #[serde(rename = "T2.9")]
    CpqImproved,
    #[serde(rename = "P2.1")]
    SharpPair,
    #[serde(rename = "T2.10")]
    SharpExponent,
    #[serde(rename = "C2.2")]
    Diagonal,
    #[serde(rename = "L3.2")]
    Equivalence,
    #[serde(rename = "T3.1")]
    Embedding,
    #[serde(rename = "S5")]
    Sharpness,
}

impl TheoremTag {
    pub const ALL: [TheoremTag; 17] = [
        TheoremTag::WeakType,
        TheoremTag::SupBound,
        TheoremTag::StrongExplicit,
        TheoremTag::Weak,
        TheoremTag::WeakMeasure,
        TheoremTag::Sawyer,
        TheoremTag::StrongClass,
        TheoremTag::BumpMaximal,
        TheoremTag::BumpBergman,
        TheoremTag::Norms,
        TheoremTag::CpqImproved,
        TheoremTag::SharpPair,
        TheoremTag::SharpExponent,
        TheoremTag::Diagonal,
        TheoremTag::Equivalence,
        TheoremTag::Embedding,
        TheoremTag::Sharpness,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TheoremTag::WeakType => "T2.1a",
            TheoremTag::SupBound => "T2.1b",
            TheoremTag::StrongExplicit => "C2.1",
            TheoremTag::Weak => "T2.2",
            TheoremTag::WeakMeasure => "T2.3",
            TheoremTag::Sawyer => "T2.4",
            TheoremTag::StrongClass => "T2.5",
            TheoremTag::BumpMaximal => "T2.6",
            TheoremTag::BumpBergman => "T2.7",
            TheoremTag::Norms => "T2.8",
            TheoremTag::CpqImproved => "T2.9",
            TheoremTag::SharpPair => "P2.1",
            TheoremTag::SharpExponent => "T2.10",
            TheoremTag::Diagonal => "C2.2",
            TheoremTag::Equivalence => "L3.2",
            TheoremTag::Embedding => "T3.1",
            TheoremTag::Sharpness => "S5",
        }
    }
}

impl fmt::Display for TheoremTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TheoremTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = if t == "§5" { "S5" } else { t };
        TheoremTag::ALL
            .iter()
            .copied()
            .find(|x| x.code().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Config { path: "tag".into(), msg: format!("unknown theorem tag `{s}`") })
    }
}

/// How `pass` is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `worst_ratio <= 1 + tolerance`
    Inequality,
    /// a constant `K` is fitted; pass when it is finite and stable
    Fitted,
    /// fitted log-log slopes against targets
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl TrialRow {
    pub fn new(trial: usize, label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        TrialRow { trial, label: label.into(), lhs, rhs, ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub tag: TheoremTag,
    pub kind: CheckKind,
    pub trials: usize,
    pub worst_ratio: f64,
    pub pass: bool,
    pub inconclusive: bool,
    pub tolerance: f64,
    /// fitted constant, for [`CheckKind::Fitted`]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted: Option<f64>,
    /// relative change of the fitted constant under family growth
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilization: Option<f64>,
    pub notes: Vec<String>,
    pub rows: Vec<TrialRow>,
    /// wall time; not serialised so reports are reproducible
    #[serde(skip)]
    pub runtime: Duration,
}

impl VerificationResult {
    /// Inequality check: pass iff every ratio is at most `1 + tol`.
    pub fn inequality(tag: TheoremTag, rows: Vec<TrialRow>, tol: f64) -> Self {
        let worst = worst(&rows);
        VerificationResult {
            tag,
            kind: CheckKind::Inequality,
            trials: rows.len(),
            worst_ratio: worst,
            pass: worst <= 1.0 + tol,
            inconclusive: false,
            tolerance: tol,
            fitted: None,
            stabilization: None,
            notes: Vec::new(),
            rows,
            runtime: Duration::ZERO,
        }
    }

    /// Fitted-constant check. `K` is the largest ratio; its stabilisation is
    /// the relative gain from the first `half` rows to all rows. A finite `K`
    /// that has not settled is inconclusive rather than failing.
    pub fn fitted(tag: TheoremTag, rows: Vec<TrialRow>, half: usize, stability: f64, k_max: f64) -> Self {
        let k = worst(&rows);
        let k_half = worst(&rows[..half.min(rows.len())]);
        let delta = if k > 0.0 { (k - k_half) / k } else { 0.0 };
        let stable = delta <= stability;
        let finite = k.is_finite() && k <= k_max;
        VerificationResult {
            tag,
            kind: CheckKind::Fitted,
            trials: rows.len(),
            worst_ratio: k,
            pass: finite && stable,
            inconclusive: finite && !stable,
            tolerance: stability,
            fitted: Some(k),
            stabilization: Some(delta),
            notes: Vec::new(),
            rows,
            runtime: Duration::ZERO,
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    /// Combine sub-checks under one tag: passes when all parts pass.
    pub fn merge(tag: TheoremTag, parts: Vec<VerificationResult>) -> Self {
        let mut it = parts.into_iter();
        let mut out = it.next().expect("at least one part");
        out.tag = tag;
        for p in it {
            let offset = out.rows.len();
            out.trials += p.trials;
            out.pass &= p.pass;
            out.inconclusive |= p.inconclusive;
            out.notes.push(format!("sub-check ({:?}): worst ratio {:.6e}, pass {}", p.kind, p.worst_ratio, p.pass));
            out.notes.extend(p.notes);
            out.rows.extend(p.rows.into_iter().map(|mut r| {
                r.trial += offset;
                r
            }));
            if out.kind == p.kind {
                out.worst_ratio = out.worst_ratio.max(p.worst_ratio);
            }
        }
        if out.pass {
            out.inconclusive = false;
        }
        out
    }

    /// Process exit code: 0 pass, 1 fail, 2 inconclusive.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else if self.inconclusive {
            2
        } else {
            1
        }
    }
}

fn worst(rows: &[TrialRow]) -> f64 {
    rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

/// Ordinary least squares slope and intercept of `ys` against `xs`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidInput(format!("regression needs >= 2 paired points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
