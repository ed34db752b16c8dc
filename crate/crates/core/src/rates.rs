//! Monte Carlo strong and weak errors over a ladder of `n`, log-log rate
//! fits, and the explicit and shape-only error bounds.
//!
//! Replicates run in parallel, but each one owns its RNG stream and the
//! per-replicate scalars are reduced in replicate order. Results are
//! therefore identical for any worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{invalid, Error, Result};
use crate::functionals::{discrepancies_from_values, eval_h};
use crate::kernels::{check_integrability, qv_integral, Integrability, MajorantQ, StableIndex, WeightV};
use crate::numerics::{exact_sum, ExactSum};
use crate::processes::{cms_standard, replicate_rng, PathGrid, Process};

pub const THREADS_ENV: &str = "FUNCRATE_THREADS";

/// Monte Carlo mean with its CLT standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    /// sample standard deviation / √M
    pub std_error: f64,
    pub replicates: usize,
    /// moment order for strong errors; `None` for weak errors
    pub p: Option<f64>,
    /// `value^{1/p}` for strong errors
    pub lp_root: Option<f64>,
}

/// Per-replicate discrepancies `J_{T,n}` for every rung of the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancies {
    pub ladder: Vec<usize>,
    /// `values[rung][replicate]`
    pub values: Vec<Vec<f64>>,
}

fn env_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(invalid("FUNCRATE_THREADS", format!("expected a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a pool of `threads` workers, or `FUNCRATE_THREADS`, or the
/// global pool.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let threads = match threads {
        Some(0) => return Err(invalid("threads", "must be positive")),
        Some(k) => Some(k),
        None => env_threads()?,
    };
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

struct Worker {
    path: Vec<f64>,
    h_values: Vec<f64>,
    fine: ExactSum,
    scratch: ExactSum,
}

/// Simulates `M` coupled paths and returns `J_{T,n}` per rung and replicate.
///
/// Only divisibility of the ladder is required here; the stricter
/// configuration rules are enforced by [`ExperimentConfig::validate`].
pub fn simulate_discrepancies(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Discrepancies> {
    let grid = PathGrid::new(cfg.horizon, cfg.n_fine)?;
    let strides = cfg
        .n_ladder
        .iter()
        .map(|&n| grid.stride(n))
        .collect::<Result<Vec<_>>>()?;
    if cfg.replicates < 2 {
        return Err(invalid("replicates_M", "need at least two replicates"));
    }
    let rungs = cfg.n_ladder.len();
    let per_replicate: Vec<Vec<f64>> = with_threads(threads, || {
        (0..cfg.replicates as u64)
            .into_par_iter()
            .map_init(
                || Worker {
                    path: vec![0.0; cfg.n_fine + 1],
                    h_values: vec![0.0; cfg.n_fine],
                    fine: ExactSum::new(),
                    scratch: ExactSum::new(),
                },
                |w, r| {
                    let mut rng = replicate_rng(cfg.seed, r);
                    cfg.process
                        .fill_path(cfg.x0, &grid, &mut rng, &mut w.path)
                        .map_err(|e| Error::Replicate {
                            replicate: r,
                            source: Box::new(e),
                        })?;
                    for (hv, &x) in w.h_values.iter_mut().zip(&w.path) {
                        *hv = eval_h(&cfg.h, x);
                    }
                    let mut out = vec![0.0; rungs];
                    discrepancies_from_values(
                        &w.h_values,
                        cfg.horizon,
                        &cfg.n_ladder,
                        &strides,
                        &mut w.fine,
                        &mut w.scratch,
                        &mut out,
                    );
                    Ok(out)
                },
            )
            .collect::<Result<Vec<_>>>()
    })??;
    let values = (0..rungs)
        .map(|i| per_replicate.iter().map(|row| row[i]).collect())
        .collect();
    Ok(Discrepancies {
        ladder: cfg.n_ladder.clone(),
        values,
    })
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    let mean = exact_sum(samples.iter().copied()) / m;
    let ss = exact_sum(samples.iter().map(|&x| (x - mean) * (x - mean)));
    let sd = (ss / (m - 1.0)).sqrt();
    (mean, sd / m.sqrt())
}

/// `E|J|^p` per rung.
pub fn strong_estimates(d: &Discrepancies, p: f64) -> BTreeMap<usize, McEstimate> {
    d.ladder
        .iter()
        .zip(&d.values)
        .map(|(&n, js)| {
            let powers: Vec<f64> = js.iter().map(|j| j.abs().powf(p)).collect();
            let (value, std_error) = mean_and_se(&powers);
            let est = McEstimate {
                value,
                std_error,
                replicates: js.len(),
                p: Some(p),
                lp_root: Some(value.powf(1.0 / p)),
            };
            (n, est)
        })
        .collect()
}

/// `|E J|` per rung.
pub fn weak_estimates(d: &Discrepancies) -> BTreeMap<usize, McEstimate> {
    d.ladder
        .iter()
        .zip(&d.values)
        .map(|(&n, js)| {
            let (mean, std_error) = mean_and_se(js);
            let est = McEstimate {
                value: mean.abs(),
                std_error,
                replicates: js.len(),
                p: None,
                lp_root: None,
            };
            (n, est)
        })
        .collect()
}

fn require_integrable(cfg: &ExperimentConfig, p: f64) -> Result<()> {
    let verdict = check_integrability(&cfg.majorant, &cfg.weight, p, cfg.horizon, cfg.process.index());
    if verdict.accepted {
        Ok(())
    } else {
        Err(Error::Integrability(verdict.reason))
    }
}

/// Strong `L_p` error `E|I_T(h) - I_{T,n}(h)|^p` for each rung.
pub fn strong_error_lp(cfg: &ExperimentConfig) -> Result<BTreeMap<usize, McEstimate>> {
    require_integrable(cfg, cfg.p)?;
    Ok(strong_estimates(&simulate_discrepancies(cfg, None)?, cfg.p))
}

/// Weak error `|E I_T(h) - E I_{T,n}(h)|` for each rung.
pub fn weak_error(cfg: &ExperimentConfig) -> Result<BTreeMap<usize, McEstimate>> {
    require_integrable(cfg, 1.0)?;
    Ok(weak_estimates(&simulate_discrepancies(cfg, None)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScaling {
    /// max over pairs of `E|X_s - X_r|^q / (s - r)^{q/α}`
    pub worst: f64,
    /// `(r, s, constant)` per pair
    pub per_pair: Vec<(f64, f64, f64)>,
}

/// Estimates `E|X_s - X_r|^q / (s - r)^{q/α}` by Monte Carlo for each pair.
pub fn moment_scaling_check(
    process: &Process,
    x0: f64,
    exponent: f64,
    pairs: &[(f64, f64)],
    replicates: usize,
    seed: u64,
) -> Result<MomentScaling> {
    let alpha = process.index().get();
    if exponent.is_nan() || exponent <= 0.0 {
        return Err(invalid("exponent", format!("must be positive, got {exponent}")));
    }
    if alpha < 2.0 && exponent >= alpha {
        return Err(Error::Divergent(format!(
            "E|X|^{exponent} is infinite for a stable law of index {alpha}"
        )));
    }
    if replicates == 0 {
        return Err(invalid("replicates", "must be positive"));
    }
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (i, &(r, s)) in pairs.iter().enumerate() {
        if !(r >= 0.0 && s > r) {
            return Err(invalid("pairs", format!("need 0 ≤ r < s, got ({r}, {s})")));
        }
        let mut rng = replicate_rng(seed, i as u64);
        let lag = s - r;
        let mut acc = ExactSum::new();
        for _ in 0..replicates {
            let inc = match *process {
                Process::Brownian => {
                    let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                    lag.sqrt() * z
                }
                Process::Stable { alpha } => lag.powf(1.0 / alpha.get()) * cms_standard(alpha.get(), &mut rng)?,
                Process::Diffusion { preset } => {
                    let h = lag / 64.0;
                    let pre = (r / h).ceil() as usize;
                    let mut x = x0;
                    let advance = |x: &mut f64, dt: f64, rng: &mut rand_chacha::ChaCha8Rng| {
                        let z: f64 = rand::Rng::sample(rng, rand_distr::StandardNormal);
                        *x += preset.drift(*x) * dt + preset.sigma(*x) * dt.sqrt() * z;
                    };
                    if pre > 0 {
                        let dt = r / pre as f64;
                        for _ in 0..pre {
                            advance(&mut x, dt, &mut rng);
                        }
                    }
                    let start = x;
                    for _ in 0..64 {
                        advance(&mut x, h, &mut rng);
                    }
                    x - start
                }
            };
            acc.add(inc.abs().powf(exponent));
        }
        let estimate = acc.value() / replicates as f64;
        per_pair.push((r, s, estimate / lag.powf(exponent / alpha)));
    }
    let worst = per_pair.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(MomentScaling { worst, per_pair })
}

fn check_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", format!("bounds need n ≥ 2 (log n > 0), got {n}")));
    }
    Ok(n as f64)
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(invalid("p", format!("strong bounds hold for p ≥ 2, got {p}")));
    }
    Ok(())
}

/// `C_{T,Q,V} = T max{ C_T ∫ Q(y) V(T^{1/α}|y|) dy, 1 }`.
pub fn prop21_constant(horizon: f64, q: &MajorantQ, v: &WeightV, alpha: StableIndex, c_t: f64) -> Result<f64> {
    let integral = qv_integral(q, v, horizon, alpha, 1.0)?;
    Ok(horizon * (c_t * integral).max(1.0))
}

/// Explicit weak-error bound `(log n / n) C_{T,Q,V} ‖h‖_V V(|x0|)`.
#[allow(clippy::too_many_arguments)]
pub fn bound_prop21(
    n: usize,
    horizon: f64,
    q: &MajorantQ,
    v: &WeightV,
    alpha: StableIndex,
    c_t: f64,
    norm_v_h: f64,
    x0: f64,
) -> Result<f64> {
    let nf = check_n(n)?;
    let c = prop21_constant(horizon, q, v, alpha, c_t)?;
    Ok(nf.ln() / nf * c * norm_v_h * v.eval(x0.abs()))
}

/// `C (log n / n)^{p/2} ‖h‖_V^p V^p(|x0|)`.
pub fn bound_thm1(n: usize, p: f64, norm_v_h: f64, v_at_x0: f64, c: f64) -> Result<f64> {
    let nf = check_n(n)?;
    check_p(p)?;
    if c.is_nan() || c <= 0.0 {
        return Err(invalid("C", "calibration constant must be positive"));
    }
    Ok(c * (nf.ln() / nf).powf(p / 2.0) * norm_v_h.powf(p) * v_at_x0.powf(p))
}

/// `C (log n / n)^{p/2} n^{-γp/(2α)} ‖h‖_γ^{p/2} (‖h‖_γ^{p/2} + ‖h‖_V^{p/2} V^{p/2}(|x0|))`.
#[allow(clippy::too_many_arguments)]
pub fn bound_thm2(
    n: usize,
    p: f64,
    gamma: f64,
    alpha: f64,
    norm_gamma_h: f64,
    norm_v_h: f64,
    v_at_x0: f64,
    c: f64,
) -> Result<f64> {
    let nf = check_n(n)?;
    check_p(p)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("Hölder index {gamma} outside (0, 1]")));
    }
    StableIndex::new(alpha)?;
    if c.is_nan() || c <= 0.0 {
        return Err(invalid("C", "calibration constant must be positive"));
    }
    let half = p / 2.0;
    Ok(c * (nf.ln() / nf).powf(half)
        * nf.powf(-gamma * p / (2.0 * alpha))
        * norm_gamma_h.powf(half)
        * (norm_gamma_h.powf(half) + norm_v_h.powf(half) * v_at_x0.powf(half)))
}

/// Finiteness of `∫ |x|^{γp} Q(x) dx`, the extra moment condition for the
/// Hölder bound.
pub fn check_holder_moment(q: &MajorantQ, gamma: f64, p: f64) -> Integrability {
    let gp = gamma * p;
    match *q {
        MajorantQ::Gaussian { .. } => Integrability {
            accepted: true,
            reason: "gaussian majorant has all moments".into(),
        },
        MajorantQ::PolynomialTail { alpha, .. } => Integrability {
            accepted: gp < alpha.get(),
            reason: format!(
                "γ·p = {gp} {} α = {}",
                if gp < alpha.get() { "<" } else { "≥" },
                alpha.get()
            ),
        },
    }
}

/// Smallest `C` with `measured(n) ≤ C shape(n)` at every rung. Points where
/// both vanish are skipped.
pub fn calibrate<I>(points: I) -> f64
where
    I: IntoIterator<Item = (f64, f64)>,
{
    points
        .into_iter()
        .filter(|&(measured, shape)| !(measured == 0.0 && shape == 0.0))
        .map(|(measured, shape)| measured / shape)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaMode {
    /// regress against `log n`
    LogN,
    /// regress against `log(n / log n)`
    LogNOverLog,
}

impl AbscissaMode {
    pub fn abscissa(self, n: usize) -> Result<f64> {
        let nf = n as f64;
        match self {
            AbscissaMode::LogN if n >= 1 => Ok(nf.ln()),
            AbscissaMode::LogNOverLog if n >= 2 => Ok((nf / nf.ln()).ln()),
            _ => Err(Error::Fit(format!("n = {n} has no abscissa in mode {}", self.name()))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AbscissaMode::LogN => "log_n",
            AbscissaMode::LogNOverLog => "log_n_over_log",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log_n" => Some(AbscissaMode::LogN),
            "log_n_over_log" => Some(AbscissaMode::LogNOverLog),
            _ => None,
        }
    }
}

/// Least-squares line through `(abscissa(n), log error)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub abscissa_mode: AbscissaMode,
    pub points: Vec<(usize, f64)>,
    pub residuals: Vec<f64>,
}

pub fn fit_rate(points: &[(usize, f64)], mode: AbscissaMode) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(n, e)) = points.iter().find(|&&(_, e)| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Fit(format!("error at n = {n} is {e}; log undefined")));
    }
    let xs = points
        .iter()
        .map(|&(n, _)| mode.abscissa(n))
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        abscissa_mode: mode,
        points: points.to_vec(),
        residuals,
    })
}

/// Comparison exponent `-p(1+γ)/2` for diffusions with Hölder `h`; the
/// `γ = 1` case carries an extra `(log n)^p` factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceExponent {
    pub exponent: f64,
    /// power of `log n` multiplying the rate (0 when absent)
    pub log_power: f64,
}

pub fn kohatsu_reference_exponent(gamma: f64, p: f64) -> Result<ReferenceExponent> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("Hölder index {gamma} outside (0, 1]")));
    }
    check_p(p)?;
    Ok(ReferenceExponent {
        exponent: -p * (1.0 + gamma) / 2.0,
        log_power: if gamma == 1.0 { p } else { 0.0 },
    })
}
