//! Cached real FFT plans and the sine / cosine transforms built on them.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

thread_local! {
    static PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
    static SINE: RefCell<HashMap<usize, SineTransform>> = RefCell::new(HashMap::new());
    static COSINE: RefCell<HashMap<usize, CosineSynthesis>> = RefCell::new(HashMap::new());
}

pub(crate) fn forward_plan(n: usize) -> Arc<dyn RealToComplex<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn inverse_plan(n: usize) -> Arc<dyn ComplexToReal<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Half spectrum `c_k = (1/n) sum_j u_j exp(-2 pi i k j / n)` for `k = 0..=n/2`.
pub(crate) fn rfft_mean_normalized(u: &[f64]) -> Vec<Complex64> {
    let n = u.len();
    let plan = forward_plan(n);
    let mut input = u.to_vec();
    let mut out = plan.make_output_vec();
    plan.process(&mut input, &mut out).expect("fft length");
    let s = 1.0 / n as f64;
    for c in &mut out {
        *c *= s;
    }
    out
}

/// Real signal `u_j = sum_k c_k exp(2 pi i k j / n)` from a half spectrum.
///
/// The imaginary parts of the zero and Nyquist bins are discarded. `c` is
/// used as scratch.
pub(crate) fn irfft(c: &mut [Complex64], n: usize) -> Vec<f64> {
    let plan = inverse_plan(n);
    let mut out = plan.make_output_vec();
    irfft_into(&plan, c, &mut out);
    out
}

pub(crate) fn irfft_into(plan: &Arc<dyn ComplexToReal<f64>>, c: &mut [Complex64], out: &mut [f64]) {
    let n = out.len();
    c[0].im = 0.0;
    if n % 2 == 0 {
        c[n / 2].im = 0.0;
    }
    plan.process(c, out).expect("fft length");
}

/// Type-I discrete sine transform `S_k = sum_{j=1..n} v_j sin(pi j k / (n+1))`.
///
/// Self-inverse up to the factor `2/(n+1)`.
pub(crate) struct SineTransform {
    n: usize,
    plan: Arc<dyn RealToComplex<f64>>,
    ext: Vec<f64>,
    spec: Vec<Complex64>,
    col: Vec<f64>,
}

impl SineTransform {
    fn new(n: usize) -> Self {
        let plan = forward_plan(2 * (n + 1));
        let ext = plan.make_input_vec();
        let spec = plan.make_output_vec();
        Self {
            n,
            plan,
            ext,
            spec,
            col: vec![0.0; n],
        }
    }

    pub(crate) fn apply(&mut self, data: &mut [f64]) {
        let n = self.n;
        let len = 2 * (n + 1);
        self.ext[0] = 0.0;
        self.ext[n + 1] = 0.0;
        for (j, &v) in data.iter().enumerate() {
            self.ext[j + 1] = v;
            self.ext[len - j - 1] = -v;
        }
        self.plan
            .process(&mut self.ext, &mut self.spec)
            .expect("fft length");
        for (k, d) in data.iter_mut().enumerate() {
            *d = -0.5 * self.spec[k + 1].im;
        }
    }

    /// Transforms an `n x n` row-major array along both axes.
    pub(crate) fn apply_2d(&mut self, data: &mut [f64]) {
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            self.apply(row);
        }
        let mut col = std::mem::take(&mut self.col);
        for i in 0..n {
            for j in 0..n {
                col[j] = data[j * n + i];
            }
            self.apply(&mut col);
            for j in 0..n {
                data[j * n + i] = col[j];
            }
        }
        self.col = col;
    }
}

pub(crate) fn with_sine_transform<R>(n: usize, f: impl FnOnce(&mut SineTransform) -> R) -> R {
    SINE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let t = cache.entry(n).or_insert_with(|| SineTransform::new(n));
        f(t)
    })
}

/// Type-I cosine synthesis `v_i = sum_{k=0..n} c_k cos(pi k i / n)` for `i = 0..=n`.
pub(crate) struct CosineSynthesis {
    n: usize,
    plan: Arc<dyn RealToComplex<f64>>,
    ext: Vec<f64>,
    spec: Vec<Complex64>,
    col: Vec<f64>,
}

impl CosineSynthesis {
    fn new(n: usize) -> Self {
        let plan = forward_plan(2 * n);
        let ext = plan.make_input_vec();
        let spec = plan.make_output_vec();
        Self {
            n,
            plan,
            ext,
            spec,
            col: vec![0.0; n + 1],
        }
    }

    pub(crate) fn apply(&mut self, data: &mut [f64]) {
        let n = self.n;
        for k in 0..=n {
            self.ext[k] = data[k];
        }
        for k in 1..n {
            self.ext[2 * n - k] = data[k];
        }
        let (c0, cn) = (data[0], data[n]);
        self.plan
            .process(&mut self.ext, &mut self.spec)
            .expect("fft length");
        for (i, d) in data.iter_mut().enumerate() {
            let alt = if i % 2 == 0 { cn } else { -cn };
            *d = 0.5 * (self.spec[i].re + c0 + alt);
        }
    }

    /// Synthesises an `(n+1) x (n+1)` row-major array along both axes.
    pub(crate) fn apply_2d(&mut self, data: &mut [f64]) {
        let m = self.n + 1;
        for row in data.chunks_exact_mut(m) {
            self.apply(row);
        }
        let mut col = std::mem::take(&mut self.col);
        for i in 0..m {
            for j in 0..m {
                col[j] = data[j * m + i];
            }
            self.apply(&mut col);
            for j in 0..m {
                data[j * m + i] = col[j];
            }
        }
        self.col = col;
    }
}

pub(crate) fn with_cosine_synthesis<R>(n: usize, f: impl FnOnce(&mut CosineSynthesis) -> R) -> R {
    COSINE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let t = cache.entry(n).or_insert_with(|| CosineSynthesis::new(n));
        f(t)
    })
}
