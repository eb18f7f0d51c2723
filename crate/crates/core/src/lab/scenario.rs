use serde::{Deserialize, Serialize};

use super::expr::{parse_field, parse_measure, parse_young};
use super::family::FamilySpec;
use super::TheoremTag;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{ScaleWindow, Shift};
use crate::operators::Params;
use crate::orlicz::YoungFunction;
use crate::quadrature::{BorelMeasure, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub p: f64,
    /// omitted: the critical exponent `1/q = 1/p - γ/(2+α)`
    #[serde(default)]
    pub q: Option<f64>,
    pub alpha: f64,
    #[serde(default)]
    pub gamma: f64,
}

fn one() -> String {
    "const 1".into()
}
fn lebesgue() -> String {
    "lebesgue".into()
}
fn lambdas() -> usize {
    32
}
fn eps() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn tolerance() -> f64 {
    1e-6
}
fn stability() -> f64 {
    0.2
}
fn k_max() -> f64 {
    1e3
}
fn density() -> u32 {
    3
}
fn samples() -> usize {
    100
}
fn exponent_s() -> f64 {
    1.0
}
fn depth() -> i32 {
    10
}
fn shifts() -> Vec<Shift> {
    Shift::ALL.to_vec()
}

/// The JSON form of a scenario. Field, measure and Young-function entries use
/// the grammar of [`super::expr`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub tag: TheoremTag,
    pub params: ParamsConfig,
    pub window: ScaleWindow,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "one")]
    pub sigma: String,
    #[serde(default = "one")]
    pub omega: String,
    #[serde(default = "lebesgue")]
    pub mu: String,
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub psi: Option<String>,
    #[serde(default)]
    pub family: FamilySpec,
    /// thresholds per member in level-set sweeps
    #[serde(default = "lambdas")]
    pub lambdas: usize,
    #[serde(default = "eps")]
    pub eps: Vec<f64>,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
    /// allowed relative drift of a fitted constant
    #[serde(default = "stability")]
    pub stability: f64,
    /// a fitted constant above this counts as unbounded
    #[serde(default = "k_max")]
    pub k_max: f64,
    /// lattice density for non-dyadic searches
    #[serde(default = "density")]
    pub density: u32,
    /// sampled points for pointwise checks
    #[serde(default = "samples")]
    pub samples: usize,
    /// Carleson exponent `s`
    #[serde(default = "exponent_s")]
    pub s: f64,
    /// relative depth of the annuli in the sharpness sweep
    #[serde(default = "depth")]
    pub depth: i32,
    #[serde(default = "shifts")]
    pub shifts: Vec<Shift>,
}

/// A resolved scenario: every object constructed and validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub tag: TheoremTag,
    pub params: Params,
    pub window: ScaleWindow,
    pub spec: QuadratureSpec,
    pub sigma: ScalarField,
    pub omega: ScalarField,
    pub mu: BorelMeasure,
    pub phi: Option<YoungFunction>,
    pub psi: Option<YoungFunction>,
    pub family: FamilySpec,
    pub lambdas: usize,
    pub eps: Vec<f64>,
    pub tolerance: f64,
    pub stability: f64,
    pub k_max: f64,
    pub density: u32,
    pub samples: usize,
    pub s: f64,
    pub depth: i32,
    pub shifts: Vec<Shift>,
    pub config: ScenarioConfig,
}

fn cfg_err(path: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => Error::Config { path: path.into(), msg: other.to_string() },
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config { path: format!("line {} column {}", e.line(), e.column()), msg: e.to_string() })?;
        Self::from_config(cfg)
    }

    pub fn from_config(cfg: ScenarioConfig) -> Result<Self> {
        let pc = cfg.params;
        let params = match pc.q {
            Some(q) => Params::new(pc.p, q, pc.alpha, pc.gamma),
            None => Params::critical(pc.p, pc.alpha, pc.gamma),
        }
        .map_err(|e| cfg_err("params", e))?;
        cfg.window.validate().map_err(|e| cfg_err("window", e))?;
        cfg.quadrature.validate().map_err(|e| cfg_err("quadrature", e))?;
        cfg.family.validate()?;
        let alpha = params.alpha;
        let young = |path: &str, v: &Option<String>| v.as_deref().map(|t| parse_young(path, t)).transpose();
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config { path: path.into(), msg: format!("must be positive and finite, got {v}") })
            }
        };
        positive("tolerance", cfg.tolerance)?;
        positive("stability", cfg.stability)?;
        positive("k_max", cfg.k_max)?;
        if !(cfg.s >= 1.0) {
            return Err(Error::Config { path: "s".into(), msg: format!("Carleson exponent must be >= 1, got {}", cfg.s) });
        }
        if cfg.lambdas == 0 || cfg.samples == 0 || cfg.depth < 1 {
            return Err(Error::Config { path: "lambdas/samples/depth".into(), msg: "must be positive".into() });
        }
        if cfg.shifts.is_empty() {
            return Err(Error::Config { path: "shifts".into(), msg: "need at least one grid".into() });
        }
        if let Some((i, e)) = cfg.eps.iter().enumerate().find(|(_, e)| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Config { path: format!("eps[{i}]"), msg: format!("{e} is not in (0, 1)") });
        }
        Ok(Scenario {
            name: cfg.name.clone().unwrap_or_else(|| cfg.tag.code().to_string()),
            tag: cfg.tag,
            params,
            window: cfg.window,
            spec: cfg.quadrature,
            sigma: parse_field("sigma", &cfg.sigma)?,
            omega: parse_field("omega", &cfg.omega)?,
            mu: parse_measure("mu", &cfg.mu, alpha)?,
            phi: young("phi", &cfg.phi)?,
            psi: young("psi", &cfg.psi)?,
            family: cfg.family,
            lambdas: cfg.lambdas,
            eps: cfg.eps.clone(),
            tolerance: cfg.tolerance,
            stability: cfg.stability,
            k_max: cfg.k_max,
            density: cfg.density,
            samples: cfg.samples,
            s: cfg.s,
            depth: cfg.depth,
            shifts: cfg.shifts.clone(),
            config: cfg,
        })
    }

    /// A minimal scenario for `tag` with default weights, for programmatic use.
    pub fn basic(tag: TheoremTag, params: Params, window: ScaleWindow) -> Result<Self> {
        let cfg = ScenarioConfig {
            name: None,
            tag,
            params: ParamsConfig { p: params.p, q: Some(params.q), alpha: params.alpha, gamma: params.gamma },
            window,
            quadrature: QuadratureSpec::default(),
            sigma: one(),
            omega: one(),
            mu: lebesgue(),
            phi: None,
            psi: None,
            family: FamilySpec::default(),
            lambdas: lambdas(),
            eps: eps(),
            tolerance: tolerance(),
            stability: stability(),
            k_max: k_max(),
            density: density(),
            samples: samples(),
            s: exponent_s(),
            depth: depth(),
            shifts: shifts(),
        };
        Self::from_config(cfg)
    }

    /// Rebuild after editing the config.
    pub fn with_config(&self, f: impl FnOnce(&mut ScenarioConfig)) -> Result<Self> {
        let mut c = self.config.clone();
        f(&mut c);
        Self::from_config(c)
    }

    pub fn mu_field(&self) -> Option<&ScalarField> {
        match &self.mu {
            BorelMeasure::Density { density, .. } => Some(density),
            BorelMeasure::Atoms(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults_and_critical_q() {
        let s = Scenario::from_json(
            r#"{"tag": "C2.1", "params": {"p": 2, "alpha": 0, "gamma": 0.5},
                "window": {"j_min": -5, "j_max": 3, "x_lo": -4, "x_hi": 4},
                "sigma": "power_y 0.5"}"#,
        )
        .unwrap();
        assert_eq!(s.tag, TheoremTag::StrongExplicit);
        assert!((s.params.q - 4.0).abs() < 1e-12);
        assert_eq!(s.lambdas, 32);
        assert_eq!(s.shifts.len(), 2);
        assert_eq!(s.name, "C2.1");
    }

    #[test]
    fn schema_errors_name_the_path() {
        let bad = r#"{"tag": "T2.2", "params": {"p": 2, "alpha": 0}, "window": {"j_min": -5, "j_max": 3, "x_lo": -4, "x_hi": 4},
                      "omega": "power_y"}"#;
        match Scenario::from_json(bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "omega"),
            other => panic!("{other:?}"),
        }
        let unknown = r#"{"tag": "T2.2", "params": {"p": 2, "alpha": 0}, "window": {"j_min": -5, "j_max": 3, "x_lo": -4, "x_hi": 4},
                          "colour": 3}"#;
        assert!(matches!(Scenario::from_json(unknown), Err(Error::Config { .. })));
        let eps = r#"{"tag": "S5", "params": {"p": 2, "alpha": 0, "gamma": 0.5}, "window": {"j_min": -5, "j_max": 3, "x_lo": -4, "x_hi": 4},
                      "eps": [0.1, 1.5]}"#;
        match Scenario::from_json(eps) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "eps[1]"),
            other => panic!("{other:?}"),
        }
    }
}
