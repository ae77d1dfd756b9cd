use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::{Error, Result};

/// Explicit heat flow `a_t = eta Lap a` with zero-flux boundary, used to
/// turn a piecewise constant coefficient into a smooth one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatSmoothing {
    pub eta: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Default for HeatSmoothing {
    /// `eta = 1e-4`, `dt = 0.03`, 34 steps.
    fn default() -> Self {
        Self {
            eta: 1e-4,
            dt: 0.03,
            steps: 34,
        }
    }
}

impl HeatSmoothing {
    pub fn apply(&self, a: &Field) -> Result<Field> {
        smooth_coefficient_heat(a, self.eta, self.dt, self.steps)
    }
}

/// Runs `steps` explicit Euler steps of the 5-point heat equation. Ghost
/// values mirror the first interior node, so the trapezoid mean is kept.
pub fn smooth_coefficient_heat(a: &Field, eta: f64, dt: f64, steps: usize) -> Result<Field> {
    let grid = *a.grid();
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid(format!("expected a 2D grid, got {grid}")));
    }
    if !(eta >= 0.0 && dt >= 0.0 && eta.is_finite() && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need eta, dt >= 0, got {eta}, {dt}"
        )));
    }
    let h = grid.spacing();
    let ratio = eta * dt / (h * h);
    if ratio > 0.25 {
        return Err(Error::Unstable { ratio });
    }
    let r = grid.points();
    let mut u = a.values().to_vec();
    let mut next = vec![0.0; u.len()];
    let nb = |i: usize, d: isize| -> usize {
        let k = i as isize + d;
        if k < 0 {
            1
        } else if k as usize >= r {
            r - 2
        } else {
            k as usize
        }
    };
    for _ in 0..steps {
        for j in 0..r {
            let (jm, jp) = (nb(j, -1), nb(j, 1));
            for i in 0..r {
                let (im, ip) = (nb(i, -1), nb(i, 1));
                let c = u[j * r + i];
                let lap = u[j * r + im] + u[j * r + ip] + u[jm * r + i] + u[jp * r + i] - 4.0 * c;
                next[j * r + i] = c + ratio * lap;
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    Field::new(grid, u)
}
