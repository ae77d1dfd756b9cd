use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_grf, GrfSpec};
use crate::field::{Field, Grid};
use crate::{Error, Result};

/// Two-valued pushforward of a Gaussian field through a sign threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSpec {
    pub a_plus: f64,
    pub a_minus: f64,
    pub underlying: GrfSpec,
}

impl LevelSetSpec {
    pub fn new(a_plus: f64, a_minus: f64, underlying: GrfSpec) -> Result<Self> {
        let spec = Self {
            a_plus,
            a_minus,
            underlying,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_minus > 0.0 && self.a_minus <= self.a_plus && self.a_plus.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < a_minus <= a_plus, got a_minus = {}, a_plus = {}",
                self.a_minus, self.a_plus
            )));
        }
        self.underlying.validate()
    }
}

/// `a_plus` where `g > 0`, `a_minus` elsewhere (including `g = 0`).
pub fn pushforward_levelset(spec: &LevelSetSpec, g: &Field) -> Field {
    let values = g
        .values()
        .iter()
        .map(|&v| if v > 0.0 { spec.a_plus } else { spec.a_minus })
        .collect();
    Field::from_raw(*g.grid(), values)
}

pub fn sample_levelset<R: Rng + ?Sized>(spec: &LevelSetSpec, grid: &Grid, rng: &mut R) -> Result<Field> {
    spec.validate()?;
    Ok(pushforward_levelset(spec, &sample_grf(&spec.underlying, grid, rng)?))
}
