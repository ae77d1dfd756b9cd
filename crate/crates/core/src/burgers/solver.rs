use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::transforms::{forward_plan, inverse_plan, irfft_into};
use crate::field::{norm_l2, Field, Grid};
use crate::{Error, Result};

/// Viscous Burgers' equation `u_t + (u^2/2)_x = eps u_xx` on the periodic
/// unit interval with zero forcing, integrated to `final_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersProblem {
    pub viscosity: f64,
    pub final_time: f64,
}

impl BurgersProblem {
    pub fn new(viscosity: f64, final_time: f64) -> Result<Self> {
        let p = Self {
            viscosity,
            final_time,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity.is_finite() && self.viscosity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "viscosity must be positive, got {}",
                self.viscosity
            )));
        }
        if !(self.final_time.is_finite() && self.final_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        Ok(())
    }
}

/// Default step `min(0.5/K, 2 / (2 pi k_max max|a|))`, where `k_max` is the
/// largest wavenumber kept by dealiasing. The caller rounds to whole steps.
pub fn default_time_step(grid: &Grid, a: &Field) -> f64 {
    let base = 0.5 / grid.points() as f64;
    let kmax = (grid.axis_len() / 3).max(1) as f64;
    let amp = a.max_abs();
    if amp > 0.0 {
        base.min(2.0 / (2.0 * PI * kmax * amp))
    } else {
        base
    }
}

/// Solution `u(T, .)` by integrating-factor RK4 with 2/3-rule dealiasing.
///
/// The step is shrunk so that a whole number of steps reaches `T`.
pub fn burgers_solve(prob: &BurgersProblem, a: &Field, dt: f64) -> Result<Field> {
    Ok(burgers_snapshots(prob, a, dt, 1)?.pop().unwrap())
}

/// Solutions at `T, 2T, .., count T`.
pub fn burgers_snapshots(prob: &BurgersProblem, a: &Field, dt: f64, count: usize) -> Result<Vec<Field>> {
    prob.validate()?;
    let grid = *a.grid();
    if !grid.is_periodic() {
        return Err(Error::NotPeriodic(grid.to_string()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let n = grid.len();
    let mean = a.values().iter().sum::<f64>() / n as f64;
    if mean.abs() > 1e-10 * (1.0 + a.max_abs()) {
        return Err(Error::InvalidParameter(format!(
            "initial condition must have zero mean, got {mean:e}"
        )));
    }
    let steps = (prob.final_time / dt - 1e-9).ceil().max(1.0) as usize;
    let mut stepper = Stepper::new(n, prob.viscosity, prob.final_time / steps as f64);
    let mut u_hat = stepper.forward(a.values());
    let mut out = Vec::with_capacity(count);
    let mut t = 0.0;
    for _ in 0..count {
        for _ in 0..steps {
            stepper.step(&mut u_hat);
            t += stepper.dt;
            if u_hat.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::BlowUp { time: t });
            }
        }
        let values = stepper.inverse(&u_hat);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: t });
        }
        out.push(Field::from_raw(grid, values));
    }
    Ok(out)
}

/// Observed temporal order `log2(|u_dt - u_dt/2| / |u_dt/2 - u_dt/4|)` in L2.
pub fn time_convergence_order(prob: &BurgersProblem, a: &Field, dt: f64) -> Result<f64> {
    let u1 = burgers_solve(prob, a, dt)?;
    let u2 = burgers_solve(prob, a, dt / 2.0)?;
    let u4 = burgers_solve(prob, a, dt / 4.0)?;
    let e1 = norm_l2(&u1.add_scaled(-1.0, &u2)?);
    let e2 = norm_l2(&u2.add_scaled(-1.0, &u4)?);
    Ok((e1 / e2).log2())
}

/// Integrating-factor RK4 on the mean-normalized half spectrum.
struct Stepper {
    n: usize,
    cutoff: usize,
    dt: f64,
    /// `exp(L dt/2)` and `exp(L dt)` with `L_k = -eps (2 pi k)^2`.
    e_half: Vec<f64>,
    e_full: Vec<f64>,
    /// `-i pi k` on retained wavenumbers, zero beyond the 2/3 cutoff.
    deriv: Vec<Complex64>,
    fwd: std::sync::Arc<dyn realfft::RealToComplex<f64>>,
    inv: std::sync::Arc<dyn realfft::ComplexToReal<f64>>,
    real: Vec<f64>,
    spec: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    d: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Stepper {
    fn new(n: usize, eps: f64, dt: f64) -> Self {
        let half = n / 2 + 1;
        let cutoff = n / 3;
        let mut e_half = Vec::with_capacity(half);
        let mut e_full = Vec::with_capacity(half);
        let mut deriv = Vec::with_capacity(half);
        for k in 0..half {
            let kk = 2.0 * PI * k as f64;
            let l = -eps * kk * kk;
            e_half.push((0.5 * l * dt).exp());
            e_full.push((l * dt).exp());
            deriv.push(if k <= cutoff {
                Complex64::new(0.0, -PI * k as f64)
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
        let zeros = vec![Complex64::new(0.0, 0.0); half];
        Self {
            n,
            cutoff,
            dt,
            e_half,
            e_full,
            deriv,
            fwd: forward_plan(n),
            inv: inverse_plan(n),
            real: vec![0.0; n],
            spec: zeros.clone(),
            a: zeros.clone(),
            b: zeros.clone(),
            c: zeros.clone(),
            d: zeros.clone(),
            tmp: zeros,
        }
    }

    fn forward(&mut self, u: &[f64]) -> Vec<Complex64> {
        self.real.copy_from_slice(u);
        let mut out = vec![Complex64::new(0.0, 0.0); self.n / 2 + 1];
        self.fwd.process(&mut self.real, &mut out).expect("fft length");
        let s = 1.0 / self.n as f64;
        for c in &mut out {
            *c *= s;
        }
        out
    }

    fn inverse(&mut self, u_hat: &[Complex64]) -> Vec<f64> {
        self.spec.copy_from_slice(u_hat);
        let mut out = vec![0.0; self.n];
        irfft_into(&self.inv, &mut self.spec, &mut out);
        out
    }

    /// `out = -(i 2 pi k / 2) P[(P u)^2]^` with `P` the dealiasing projection.
    fn nonlinear(&mut self, u_hat: &[Complex64], out_sel: Slot) {
        for (k, (s, u)) in self.spec.iter_mut().zip(u_hat).enumerate() {
            *s = if k <= self.cutoff { *u } else { Complex64::new(0.0, 0.0) };
        }
        irfft_into(&self.inv, &mut self.spec, &mut self.real);
        for v in &mut self.real {
            *v *= *v;
        }
        let out = match out_sel {
            Slot::A => &mut self.a,
            Slot::B => &mut self.b,
            Slot::C => &mut self.c,
            Slot::D => &mut self.d,
        };
        self.fwd.process(&mut self.real, out).expect("fft length");
        let s = 1.0 / self.n as f64;
        for (o, d) in out.iter_mut().zip(&self.deriv) {
            *o *= d * s;
        }
    }

    fn step(&mut self, u: &mut [Complex64]) {
        let h = self.dt;
        let len = u.len();
        self.nonlinear(u, Slot::A);
        let mut tmp = std::mem::take(&mut self.tmp);
        for k in 0..len {
            tmp[k] = self.e_half[k] * (u[k] + 0.5 * h * self.a[k]);
        }
        self.nonlinear(&tmp, Slot::B);
        for k in 0..len {
            tmp[k] = self.e_half[k] * u[k] + 0.5 * h * self.b[k];
        }
        self.nonlinear(&tmp, Slot::C);
        for k in 0..len {
            tmp[k] = self.e_full[k] * u[k] + h * self.e_half[k] * self.c[k];
        }
        self.nonlinear(&tmp, Slot::D);
        self.tmp = tmp;
        for k in 0..len {
            u[k] = self.e_full[k] * u[k]
                + h / 6.0
                    * (self.e_full[k] * self.a[k]
                        + 2.0 * self.e_half[k] * (self.b[k] + self.c[k])
                        + self.d[k]);
        }
    }
}

#[derive(Clone, Copy)]
enum Slot {
    A,
    B,
    C,
    D,
}
