//! Self-checks of the kernel machinery on the Brownian bridge instance.

use anyhow::Result;
use rfm_core::engine::{train, Dataset, FeatureFamily};
use rfm_core::field::{Boundary, Grid};
use rfm_core::kernel_lab::{kernel_ridge_oracle, loglog_slope, BrownianBridgeFeatures, EmpiricalKernel};
use rfm_core::rng::stream;

use crate::run::Check;

/// Random feature training against the kernel ridge oracle built from the
/// same features, and Monte Carlo convergence of the empirical kernel.
pub fn kernel_lab_checks(modes: usize) -> Result<Vec<Check>> {
    Ok(vec![ridge_equivalence(modes)?, kernel_rate(modes)?])
}

fn ridge_equivalence(modes: usize) -> Result<Check> {
    let g = Grid::line(65, Boundary::Dirichlet)?;
    let fam = FeatureFamily::new(BrownianBridgeFeatures::sample(8, modes, &mut stream(7, 0))?);
    let ek = EmpiricalKernel::new(&fam, &g)?;
    let inputs = crate::run::bridge_inputs(&g, 7, 24)?;
    let outputs = inputs.iter().map(crate::run::bridge_target).collect::<rfm_core::Result<Vec<_>>>()?;
    let data = Dataset::new(inputs[..16].to_vec(), outputs[..16].to_vec())?;
    let mut gap = 0.0f64;
    for lambda in [0.0, 1e-3] {
        let model = train(&fam, &data, lambda)?;
        let kr = kernel_ridge_oracle(&ek, &data, lambda)?;
        for a in &inputs {
            let (p, q) = (model.predict(a)?, kr.predict(a)?);
            for (x, y) in p.values().iter().zip(q.values()) {
                gap = gap.max((x - y).abs());
            }
        }
    }
    Ok(Check {
        name: "kernel ridge equivalence".into(),
        pass: gap <= 1e-8,
        detail: format!("max prediction gap {gap:.2e} (bound 1e-8)"),
    })
}

fn kernel_rate(modes: usize) -> Result<Check> {
    let points: Vec<f64> = (0..16).map(|p| (p as f64 + 0.5) / 16.0).collect();
    let ms = [100.0, 1000.0, 10000.0];
    let reps = 8;
    let mut dev = Vec::new();
    for &m in &ms {
        let mut acc = 0.0;
        for r in 0..reps {
            acc += BrownianBridgeFeatures::sample(m as usize, modes, &mut stream(8 + m as u64, r))?
                .kernel_sup_deviation(&points)?;
        }
        dev.push(acc / reps as f64);
    }
    let slope = loglog_slope(&ms, &dev);
    Ok(Check {
        name: "empirical kernel rate".into(),
        pass: (slope + 0.5).abs() <= 0.15,
        detail: format!("log-log slope {slope:.3} (band -0.5 +- 0.15)"),
    })
}
