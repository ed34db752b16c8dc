//! Orchestration: simulate, estimate, calibrate, fit, and assemble a
//! [`Report`]; plus the standalone kernel certification suite.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::functionals::{norm_holder, norm_v};
use crate::kernels::{
    check_integrability, qv_integral, stable_density, verify_density_bound, verify_derivative_bound, BoundGrid,
    Integrability, StableIndex, WeightAxioms,
};
use crate::processes::replicate_rng;
use crate::rates::{
    bound_prop21, bound_thm1, bound_thm2, calibrate, check_holder_moment, fit_rate, kohatsu_reference_exponent,
    prop21_constant, simulate_discrepancies, strong_estimates, weak_estimates,
};
use crate::report::{
    Calibration, ConfigEcho, Fits, KernelConstants, Norms, Report, RungRecord, Theory, Timing, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// worker count; `None` defers to `FUNCRATE_THREADS`, then the global pool
    pub threads: Option<usize>,
}

/// Grid-certified `C_T` and the weak-bound constant for processes with a
/// closed-form or quadrature transition density.
pub fn kernel_constants(cfg: &ExperimentConfig) -> Result<Option<KernelConstants>> {
    let Some(td) = cfg.process.transition_density() else {
        return Ok(None);
    };
    let alpha = cfg.process.index();
    let grid = BoundGrid::standard(cfg.horizon, alpha);
    let density_constant = verify_density_bound(&td, &cfg.majorant, alpha, cfg.horizon, &grid)?;
    let derivative_constant = verify_derivative_bound(&td, &cfg.majorant, alpha, cfg.horizon, &grid)?;
    let c_t = density_constant.max(derivative_constant);
    let qv = qv_integral(&cfg.majorant, &cfg.weight, cfg.horizon, alpha, 1.0)?;
    let c_tqv = prop21_constant(cfg.horizon, &cfg.majorant, &cfg.weight, alpha, c_t)?;
    Ok(Some(KernelConstants {
        density_constant,
        derivative_constant,
        c_t,
        qv_integral: qv,
        c_tqv,
    }))
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Report> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    let start = Instant::now();
    let alpha = cfg.process.index();

    let d = simulate_discrepancies(cfg, opts.threads)?;
    let strong = strong_estimates(&d, cfg.p);
    let weak = weak_estimates(&d);

    let nv = norm_v(&cfg.h, &cfg.weight)?;
    let v_x0 = cfg.weight.eval(cfg.x0.abs());
    let holder = norm_holder(&cfg.h).ok();
    let kernel = kernel_constants(cfg)?;

    let mut shape1 = Vec::with_capacity(cfg.n_ladder.len());
    let mut shape2 = Vec::with_capacity(cfg.n_ladder.len());
    let mut prop21 = Vec::with_capacity(cfg.n_ladder.len());
    let thm2_applies = holder
        .filter(|h| check_holder_moment(&cfg.majorant, h.gamma, cfg.p).accepted)
        .filter(|h| h.value > 0.0 || nv > 0.0);
    for &n in &cfg.n_ladder {
        shape1.push(bound_thm1(n, cfg.p, nv, v_x0, 1.0)?);
        shape2.push(match thm2_applies {
            Some(hn) => Some(bound_thm2(n, cfg.p, hn.gamma, alpha.get(), hn.value, nv, v_x0, 1.0)?),
            None => None,
        });
        prop21.push(match &kernel {
            Some(k) => Some(bound_prop21(
                n,
                cfg.horizon,
                &cfg.majorant,
                &cfg.weight,
                alpha,
                k.c_t,
                nv,
                cfg.x0,
            )?),
            None => None,
        });
    }

    let measured: Vec<f64> = cfg.n_ladder.iter().map(|n| strong[n].value).collect();
    let c1 = calibrate(measured.iter().copied().zip(shape1.iter().copied()));
    let c2 = thm2_applies.map(|_| calibrate(measured.iter().copied().zip(shape2.iter().map(|s| s.unwrap_or(0.0)))));
    let prop21_ratio = kernel.as_ref().map(|_| {
        cfg.n_ladder
            .iter()
            .zip(&prop21)
            .map(|(n, b)| weak[n].value / b.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    });

    let reference = holder.and_then(|h| kohatsu_reference_exponent(h.gamma, cfg.p).ok());
    let first = cfg.n_ladder[0] as f64;
    let anchor = measured[0];

    let rows: Vec<RungRecord> = cfg
        .n_ladder
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let s = &strong[&n];
            let w = &weak[&n];
            let nf = n as f64;
            RungRecord {
                n,
                weak_err: w.value,
                weak_se: w.std_error,
                strong_err_p: s.value,
                strong_se: s.std_error,
                strong_lp_root: s.lp_root.unwrap_or(0.0),
                bound_prop21: prop21[i],
                bound_thm1: c1 * shape1[i],
                bound_thm2: c2.zip(shape2[i]).map(|(c, sh)| c * sh),
                reference_overlay: reference
                    .map(|r| anchor * (nf / first).powf(r.exponent) * (nf.ln() / first.ln()).powf(r.log_power)),
            }
        })
        .collect();

    let strong_points: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.strong_lp_root)).collect();
    let weak_points: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.weak_err)).collect();
    let fits = Fits {
        strong: fit_rate(&strong_points, cfg.abscissa_mode).ok(),
        weak: fit_rate(&weak_points, cfg.abscissa_mode).ok(),
    };

    let wall = start.elapsed().as_secs_f64();
    let report = Report {
        schema_version: SCHEMA_VERSION.to_owned(),
        config: ConfigEcho::from(cfg),
        rows,
        norms: Norms {
            norm_v: nv,
            v_at_x0: v_x0,
            holder,
        },
        kernel,
        calibration: Calibration {
            thm1: c1,
            thm2: c2,
            prop21_ratio,
        },
        fits,
        theory: Theory {
            thm1_root_slope: -0.5,
            thm2_extra_decay: thm2_applies.map(|h| h.gamma / (2.0 * alpha.get())),
            reference,
        },
        timing: Timing {
            wall_seconds: wall,
            replicates_per_second: if wall > 0.0 { cfg.replicates as f64 / wall } else { 0.0 },
        },
    };
    report.check_finite()?;
    Ok(report)
}

/// Results of the kernel bound suite for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSuite {
    pub process: String,
    pub majorant: String,
    pub weight: String,
    pub majorant_mass: f64,
    pub density_constant: Option<f64>,
    pub derivative_constant: Option<f64>,
    /// max deviation of the stable density from the Cauchy and Gaussian
    /// closed forms on the standard grid
    pub closed_form_error: f64,
    pub weight_axioms: WeightAxioms,
    pub integrability: Integrability,
}

impl KernelSuite {
    pub fn passed(&self) -> bool {
        (self.majorant_mass - 1.0).abs() <= 1e-6
            && self.density_constant.is_none_or(f64::is_finite)
            && self.derivative_constant.is_none_or(f64::is_finite)
            && self.closed_form_error <= 1e-6
            && self.weight_axioms.submultiplicative_ratio <= 1.0 + 1e-12
            && self.weight_axioms.monotonicity_failures == 0
            && self.weight_axioms.min_value >= 1.0
            && self.integrability.accepted
    }
}

/// Max of `|stable_density - closed form|` for `α = 1` (Cauchy) and `α = 2`
/// (Gaussian with variance `2t`) on the standard grid at horizon `T`.
pub fn closed_form_error(horizon: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for a in [1.0, 2.0] {
        let alpha = StableIndex::new(a)?;
        for &(t, z) in &BoundGrid::standard(horizon, alpha).points {
            let exact = if a == 1.0 {
                t / (std::f64::consts::PI * (t * t + z * z))
            } else {
                (-z * z / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
            };
            worst = worst.max((stable_density(alpha, t, z)? - exact).abs());
        }
    }
    Ok(worst)
}

/// Random `(r, s)` pairs in `[0, 50]²` for the weight axioms.
pub fn weight_test_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = replicate_rng(seed, 0);
    (0..count)
        .map(|_| (rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)))
        .collect()
}

pub fn verify_kernels(cfg: &ExperimentConfig) -> Result<KernelSuite> {
    let (density_constant, derivative_constant) = match kernel_constants(cfg)? {
        Some(k) => (Some(k.density_constant), Some(k.derivative_constant)),
        None => (None, None),
    };
    Ok(KernelSuite {
        process: cfg.process.describe(),
        majorant: cfg.majorant.describe(),
        weight: cfg.weight.describe(),
        majorant_mass: cfg.majorant.mass(),
        density_constant,
        derivative_constant,
        closed_form_error: closed_form_error(cfg.horizon)?,
        weight_axioms: cfg.weight.check_axioms(&weight_test_pairs(10_000, cfg.seed)),
        integrability: check_integrability(&cfg.majorant, &cfg.weight, cfg.p, cfg.horizon, cfg.process.index()),
    })
}
