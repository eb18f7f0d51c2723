//! Text forms of fields, measures and Young functions used by configs and the CLI.
//!
//! Fields are sums of products: terms are separated by `+`, factors by `*`.
//! A factor is a nonnegative number or one of
//!
//! ```text
//! const c | zero | power_y t | power_abs s | box a b | rect x0 x1 y0 y1 | half_disk r
//! ```
//!
//! so `2 * power_y 0.5 * box 0 1 + 0.5 * half_disk 1` is a valid field.
//! Measures are `lebesgue`, `weighted <field>` or `atoms x y m; x y m; ...`.
//! Young functions are `power p`, `power_conjugate_bump p r`, `power_log p k`,
//! `exp` or `table t:v t:v ...`.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{Interval, Point, Rect};
use crate::orlicz::YoungFunction;
use crate::quadrature::BorelMeasure;

fn err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), msg: msg.into() }
}

fn numbers(path: &str, words: &[&str], n: usize, what: &str) -> Result<Vec<f64>> {
    if words.len() != n {
        return Err(err(path, format!("`{what}` takes {n} number(s), got {}", words.len())));
    }
    words
        .iter()
        .map(|w| w.parse::<f64>().map_err(|_| err(path, format!("`{w}` is not a number in `{what}`"))))
        .collect()
}

fn factor(path: &str, text: &str) -> Result<ScalarField> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let Some((&head, rest)) = words.split_first() else {
        return Err(err(path, "empty factor"));
    };
    if let Ok(c) = head.parse::<f64>() {
        if !rest.is_empty() {
            return Err(err(path, format!("unexpected `{}` after number", rest.join(" "))));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(err(path, format!("coefficient {c} must be finite and nonnegative")));
        }
        return Ok(ScalarField::constant(c));
    }
    Ok(match head {
        "zero" => {
            numbers(path, rest, 0, head)?;
            ScalarField::zero()
        }
        "const" => {
            let v = numbers(path, rest, 1, head)?;
            if !(v[0] >= 0.0) {
                return Err(err(path, "const needs a nonnegative value"));
            }
            ScalarField::constant(v[0])
        }
        "power_y" => ScalarField::power_y(numbers(path, rest, 1, head)?[0]),
        "power_abs" => ScalarField::power_abs(numbers(path, rest, 1, head)?[0]),
        "box" => {
            let v = numbers(path, rest, 2, head)?;
            if !(v[1] > v[0]) {
                return Err(err(path, format!("box needs a < b, got {} {}", v[0], v[1])));
            }
            ScalarField::box_indicator(Interval::new(v[0], v[1]))
        }
        "rect" => {
            let v = numbers(path, rest, 4, head)?;
            if !(v[1] > v[0] && v[3] > v[2] && v[2] >= 0.0) {
                return Err(err(path, format!("rect needs x0 < x1 and 0 <= y0 < y1, got {v:?}")));
            }
            ScalarField::rect_indicator(Rect::new(v[0], v[1], v[2], v[3]))
        }
        "half_disk" => {
            let v = numbers(path, rest, 1, head)?;
            if !(v[0] > 0.0) {
                return Err(err(path, "half_disk needs a positive radius"));
            }
            ScalarField::half_disk(v[0])
        }
        other => return Err(err(path, format!("unknown field atom `{other}`"))),
    })
}

/// Parse a field expression; `path` names the config location for errors.
pub fn parse_field(path: &str, text: &str) -> Result<ScalarField> {
    let mut total: Option<ScalarField> = None;
    for term in text.split('+') {
        let mut prod: Option<ScalarField> = None;
        for f in term.split('*') {
            let g = factor(path, f)?;
            prod = Some(match prod {
                None => g,
                Some(p) => p.mul(&g),
            });
        }
        let prod = prod.ok_or_else(|| err(path, "empty term"))?;
        total = Some(match total {
            None => prod,
            Some(t) => t.add(&prod),
        });
    }
    let f = total.ok_or_else(|| err(path, "empty field"))?;
    Ok(f.with_label(text.trim()))
}

/// Parse a measure expression over `dV_α`.
pub fn parse_measure(path: &str, text: &str, alpha: f64) -> Result<BorelMeasure> {
    let t = text.trim();
    if t == "lebesgue" {
        return Ok(BorelMeasure::lebesgue(alpha));
    }
    if let Some(rest) = t.strip_prefix("weighted ") {
        return Ok(BorelMeasure::Density { density: parse_field(path, rest)?, alpha });
    }
    if let Some(rest) = t.strip_prefix("atoms ") {
        let mut atoms = Vec::new();
        for a in rest.split(';').filter(|s| !s.trim().is_empty()) {
            let words: Vec<&str> = a.split_whitespace().collect();
            let v = numbers(path, &words, 3, "atoms")?;
            atoms.push((Point::new(v[0], v[1]), v[2]));
        }
        return BorelMeasure::atoms(atoms).map_err(|e| err(path, e.to_string()));
    }
    Err(err(path, format!("unknown measure `{t}` (expected lebesgue, weighted <field> or atoms ...)")))
}

/// Parse a Young function.
pub fn parse_young(path: &str, text: &str) -> Result<YoungFunction> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let Some((&head, rest)) = words.split_first() else {
        return Err(err(path, "empty Young function"));
    };
    let wrap = |r: Result<YoungFunction>| r.map_err(|e| err(path, e.to_string()));
    match head {
        "power" => wrap(YoungFunction::power(numbers(path, rest, 1, head)?[0])),
        "power_conjugate_bump" => {
            let v = numbers(path, rest, 2, head)?;
            wrap(YoungFunction::power_conjugate_bump(v[0], v[1]))
        }
        "power_log" => {
            let v = numbers(path, rest, 2, head)?;
            wrap(YoungFunction::power_log(v[0], v[1]))
        }
        "exp" => {
            numbers(path, rest, 0, head)?;
            Ok(YoungFunction::exponential())
        }
        "table" => {
            let mut pairs = Vec::new();
            for w in rest {
                let (a, b) = w.split_once(':').ok_or_else(|| err(path, format!("table entry `{w}` is not t:v")))?;
                let v = numbers(path, &[a, b], 2, "table")?;
                pairs.push((v[0], v[1]));
            }
            wrap(YoungFunction::tabulated(&pairs))
        }
        other => Err(err(path, format!("unknown Young function `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_rect, QuadratureSpec};

    #[test]
    fn sums_of_products() {
        let f = parse_field("f", "2 * power_y 0.5 * box 0 1 + 0.5 * half_disk 1").unwrap();
        let z = Point::new(0.5, 0.25);
        let want = 2.0 * 0.5 + 0.5;
        assert!((f.eval(z) - want).abs() < 1e-15);
        assert_eq!(f.eval(Point::new(1.5, 0.25)), 0.0);
        let v = integrate_rect(&parse_field("g", "box 0 1").unwrap(), &Rect::new(-1.0, 2.0, 0.0, 2.0), 0.0, &QuadratureSpec::default())
            .unwrap()
            .value;
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn errors_carry_the_path() {
        match parse_field("sigma", "power_y") {
            Err(Error::Config { path, .. }) => assert_eq!(path, "sigma"),
            other => panic!("{other:?}"),
        }
        assert!(parse_field("f", "box 1 0").is_err());
        assert!(parse_field("f", "wobble 3").is_err());
        assert!(parse_field("f", "-1").is_err());
        assert!(parse_measure("mu", "atoms 0 -1 1", 0.0).is_err());
    }

    #[test]
    fn measures_and_young_functions() {
        let spec = QuadratureSpec::default();
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        let m = parse_measure("mu", "atoms 0.5 0.5 2; 3 1 1", 0.0).unwrap();
        assert_eq!(m.of_rect(&r, &spec).unwrap(), 2.0);
        let w = parse_measure("mu", "weighted power_y 1", 0.0).unwrap();
        assert!((w.of_rect(&r, &spec).unwrap() - 0.5).abs() < 1e-14);
        let phi = parse_young("phi", "power_conjugate_bump 2 2").unwrap();
        assert!((phi.power_exponent().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!(parse_young("phi", "table 1:1 2:4 4:16").is_ok());
        assert!(parse_young("phi", "power").is_err());
    }
}
