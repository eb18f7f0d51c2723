use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Interval;

/// Random sums of box indicators `Σ c_k χ_{Q_{I_k}}` with log-uniform lengths
/// and coefficients in `(0, 1]`, all bases inside `[x_lo, x_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySpec {
    pub count: usize,
    pub max_boxes: usize,
    pub log2_min: f64,
    pub log2_max: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub seed: u64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec { count: 20, max_boxes: 8, log2_min: -4.0, log2_max: -1.0, x_lo: -1.0, x_hi: 1.0, seed: 1 }
    }
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config { path: "family".into(), msg });
        if self.max_boxes == 0 {
            return bad("max_boxes must be positive".into());
        }
        if !(self.log2_min <= self.log2_max) {
            return bad(format!("log2_min {} > log2_max {}", self.log2_min, self.log2_max));
        }
        if !(self.x_hi - self.x_lo >= 2f64.powf(self.log2_max)) {
            return bad(format!("x span [{}, {}) cannot hold boxes of length 2^{}", self.x_lo, self.x_hi, self.log2_max));
        }
        Ok(())
    }

    /// The same draw with `count` replaced; the first members agree.
    pub fn with_count(&self, count: usize) -> Self {
        FamilySpec { count, ..*self }
    }
}

/// Members of the family, each with its box list. Member `k` depends only on
/// `(seed, k)`, so growing `count` keeps earlier members.
pub fn box_sum_family(spec: &FamilySpec) -> Result<Vec<(ScalarField, Vec<(Interval, f64)>)>> {
    spec.validate()?;
    Ok((0..spec.count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(k as u64);
            let n = rng.gen_range(1..=spec.max_boxes);
            let boxes: Vec<(Interval, f64)> = (0..n)
                .map(|_| {
                    let len = 2f64.powf(rng.gen_range(spec.log2_min..=spec.log2_max));
                    let lo = rng.gen_range(spec.x_lo..=spec.x_hi - len);
                    // (0, 1]: reflect the half-open [0, 1) draw
                    let c = 1.0 - rng.gen::<f64>();
                    (Interval::new(lo, lo + len), c)
                })
                .collect();
            (ScalarField::box_sum(&boxes), boxes)
        })
        .collect())
}
