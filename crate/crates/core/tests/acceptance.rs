//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use statrs::distribution::{ContinuousCDF, Normal};

use funcrate::config::parse_config;
use funcrate::experiment::{closed_form_error, run_experiment, weight_test_pairs, RunOptions};
use funcrate::functionals::{riemann_sum, TestFunction};
use funcrate::kernels::{
    make_q_gaussian, make_q_polynomial, make_v_exponential, make_v_polynomial, verify_density_bound,
    verify_derivative_bound, BoundGrid, StableIndex, TransitionDensity,
};
use funcrate::processes::{cms_standard, replicate_rng, subsample, PathGrid, Process};
use funcrate::rates::{moment_scaling_check, simulate_discrepancies, strong_error_lp, strong_estimates};
use funcrate::report::{render_csv, render_json, Report};
use funcrate::stats::{ks_critical_value, ks_statistic};
use funcrate::{Error, ExperimentConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn brownian(h: TestFunction) -> ExperimentConfig {
    ExperimentConfig::new(Process::Brownian, h).unwrap()
}

fn idx(a: f64) -> StableIndex {
    StableIndex::new(a).unwrap()
}

fn indicator() -> TestFunction {
    TestFunction::indicator(0.0, 1.0).unwrap()
}

const OCCUPATION_LADDER: [usize; 5] = [8, 16, 32, 64, 128];

fn run(cfg: &ExperimentConfig) -> Report {
    run_experiment(cfg, RunOptions::default()).unwrap()
}

fn strong_errors_decrease(r: &Report) -> bool {
    r.rows.windows(2).all(|w| w[1].strong_lp_root < w[0].strong_lp_root)
}

fn dominated(r: &Report) -> bool {
    r.rows.iter().all(|row| row.strong_err_p <= row.bound_thm1)
}

fn within_factor_two(a: f64, b: f64) -> bool {
    a > 0.0 && b > 0.0 && (a / b).max(b / a) <= 2.0
}

fn criterion_1() -> Outcome {
    let mut cfg = brownian(TestFunction::Linear);
    cfg.weight = make_v_exponential(1.0).unwrap();
    cfg.n_fine = 1 << 12;
    cfg.n_ladder = vec![4, 16, 64];
    cfg.replicates = 100_000;
    cfg.seed = 1;
    let est = strong_error_lp(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (&n, e) in &est {
        let exact = 1.0 / (3.0 * (n * n) as f64);
        let z = (e.value - exact) / e.std_error;
        pass &= z.abs() <= 3.0;
        parts.push(format!("n={n}: {:.5e} vs {:.5e} ({z:+.2} SE)", e.value, exact));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let mut cfg = brownian(TestFunction::Quadratic);
    cfg.weight = make_v_exponential(1.0).unwrap();
    cfg.n_fine = 1 << 12;
    cfg.n_ladder = vec![4, 16, 64];
    cfg.replicates = 100_000;
    cfg.seed = 2;
    let r = run(&cfg);
    let mut pass = true;
    let mut parts = Vec::new();
    for row in &r.rows {
        let exact = 1.0 / (2.0 * row.n as f64);
        let z = (row.weak_err - exact) / row.weak_se;
        let bound = row.bound_prop21.unwrap_or(f64::NAN);
        pass &= z.abs() <= 3.0 && row.weak_err <= bound;
        parts.push(format!(
            "n={}: {:.5e} vs {:.5e} ({z:+.2} SE), prop21 bound {:.3e}",
            row.n, row.weak_err, exact, bound
        ));
    }
    let k = r.kernel.as_ref().unwrap();
    parts.push(format!(
        "C_T={:.4}, ratio weak/bound={:.4}",
        k.c_t,
        r.calibration.prop21_ratio.unwrap_or(f64::NAN)
    ));
    Outcome::new(pass, parts.join("; "))
}

fn occupation(m: usize) -> Report {
    let mut cfg = brownian(indicator());
    cfg.n_fine = 1 << 14;
    cfg.n_ladder = OCCUPATION_LADDER.to_vec();
    cfg.replicates = m;
    cfg.seed = 3;
    run(&cfg)
}

fn criterion_3(base: &Report) -> Outcome {
    let doubled = occupation(2 * base.config.replicates_m);
    let slope = base.fits.strong.as_ref().map_or(f64::NAN, |f| f.slope);
    let decreasing = strong_errors_decrease(base);
    let dom = dominated(base) && dominated(&doubled);
    let stable = within_factor_two(base.calibration.thm1, doubled.calibration.thm1);
    let pass = (-0.90..=-0.45).contains(&slope) && decreasing && dom && stable;
    Outcome::new(
        pass,
        format!(
            "slope {slope:.4} (log_n_over_log, want [-0.90, -0.45]); decreasing {decreasing}; dominated {dom}; \
             C(M)={:.4e}, C(2M)={:.4e}",
            base.calibration.thm1, doubled.calibration.thm1
        ),
    )
}

fn criterion_4(indicator_run: &Report) -> Outcome {
    let mut cfg = brownian(TestFunction::Linear);
    cfg.weight = make_v_exponential(1.0).unwrap();
    cfg.n_fine = 1 << 14;
    cfg.n_ladder = OCCUPATION_LADDER.to_vec();
    cfg.replicates = 10_000;
    cfg.seed = 4;
    let r = run(&cfg);
    let lin = r.fits.strong.as_ref().map_or(f64::NAN, |f| f.slope);
    let ind = indicator_run.fits.strong.as_ref().map_or(f64::NAN, |f| f.slope);
    let pass = lin <= -0.90 && lin <= ind - 0.2;
    Outcome::new(pass, format!("slope(linear) {lin:.4}, slope(indicator) {ind:.4}"))
}

fn criterion_5() -> Outcome {
    let stable = |m: usize| {
        let mut cfg = ExperimentConfig::new(Process::Stable { alpha: idx(1.0) }, indicator()).unwrap();
        cfg.weight = make_v_polynomial(0.4, idx(1.0)).unwrap();
        cfg.n_fine = 1 << 14;
        cfg.n_ladder = OCCUPATION_LADDER.to_vec();
        cfg.replicates = m;
        cfg.seed = 5;
        run(&cfg)
    };
    let a = stable(10_000);
    let b = stable(20_000);
    let slope = a.fits.strong.as_ref().map_or(f64::NAN, |f| f.slope);
    let dom = dominated(&a) && dominated(&b);
    let calib = within_factor_two(a.calibration.thm1, b.calibration.thm1);
    let rejected = matches!(
        parse_config(
            "process = \"stable 1.5\"\nh = \"indicator 0 1\"\nweight_V = \"poly 0.5\"\nhorizon_T = 1\n\
             moment_p = 4\nn_ladder = [8, 16, 32]\nn_fine = 1024\nreplicates_M = 100\nseed = 1\n"
        ),
        Err(Error::Config(ref v)) if v.iter().any(|v| v.reason.contains("β·p = 2 ≥ α = 1.5"))
    );
    let pass = slope <= -0.45 && dom && calib && rejected;
    Outcome::new(
        pass,
        format!(
            "slope {slope:.4}; dominated {dom}; C(M)={:.4e}, C(2M)={:.4e}; βp ≥ α rejected {rejected}",
            a.calibration.thm1, b.calibration.thm1
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut worst_mass = 0.0_f64;
    for a in [0.5, 1.0, 1.5] {
        let q = make_q_polynomial(idx(a)).unwrap();
        worst_mass = worst_mass.max((q.mass() - 1.0).abs());
    }
    for c2 in [0.125, 0.25, 1.0] {
        worst_mass = worst_mass.max((make_q_gaussian(c2).unwrap().mass() - 1.0).abs());
    }
    let closed = closed_form_error(1.0).unwrap();

    let cert = |td: TransitionDensity, q, alpha| {
        let grid = BoundGrid::standard(1.0, alpha);
        let d = verify_density_bound(&td, &q, alpha, 1.0, &grid).unwrap();
        let dt = verify_derivative_bound(&td, &q, alpha, 1.0, &grid).unwrap();
        (d, dt)
    };
    let (bd, bdt) = cert(TransitionDensity::Brownian, make_q_gaussian(0.25).unwrap(), StableIndex::BROWNIAN);
    let (sd, sdt) = cert(
        TransitionDensity::SymmetricStable { alpha: idx(1.0) },
        make_q_polynomial(idx(1.0)).unwrap(),
        idx(1.0),
    );
    let finite = [bd, bdt, sd, sdt].iter().all(|c| c.is_finite() && *c > 0.0);

    let pairs = weight_test_pairs(10_000, 6);
    let mut sub = 0.0_f64;
    for v in [make_v_exponential(1.0).unwrap(), make_v_polynomial(0.5, idx(1.0)).unwrap()] {
        let ax = v.check_axioms(&pairs);
        sub = sub.max(ax.submultiplicative_ratio);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_mass <= 1e-6 && closed <= 1e-6 && finite && sub <= 1.0 + 1e-12 && secs <= 60.0;
    Outcome::new(
        pass,
        format!(
            "max |∫Q-1| {worst_mass:.2e}; closed-form error {closed:.2e}; brownian C {bd:.4}/{bdt:.4}; \
             cauchy C {sd:.4}/{sdt:.4}; max V ratio {sub:.6}; {secs:.1}s"
        ),
    )
}

fn criterion_7() -> Outcome {
    const DRAWS: usize = 100_000;
    let critical = ks_critical_value(0.001).unwrap();
    let draws = |alpha: f64, seed: u64| -> Vec<f64> {
        let mut rng = replicate_rng(seed, 0);
        (0..DRAWS).map(|_| cms_standard(alpha, &mut rng).unwrap()).collect()
    };
    let scale = (DRAWS as f64).sqrt();
    let cauchy = scale * ks_statistic(&draws(1.0, 71), |x| 0.5 + x.atan() / PI).unwrap();
    let normal = Normal::new(0.0, 2f64.sqrt()).unwrap();
    let gauss = scale * ks_statistic(&draws(2.0, 72), |x| normal.cdf(x)).unwrap();
    let pairs = [(0.0, 0.5), (0.25, 1.0), (0.1, 0.2), (0.6, 0.65)];
    let scaling = moment_scaling_check(&Process::Brownian, 0.0, 2.0, &pairs, 50_000, 73).unwrap();
    let dev = scaling
        .per_pair
        .iter()
        .map(|p| (p.2 - 1.0).abs())
        .fold(0.0, f64::max);
    let pass = cauchy < critical && gauss < critical && dev <= 0.05;
    Outcome::new(
        pass,
        format!(
            "√n·D cauchy {cauchy:.3}, gaussian {gauss:.3} (critical {critical:.3}); moment constant max |c-1| {dev:.4}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut cfg = ExperimentConfig::new(Process::Stable { alpha: idx(1.5) }, indicator()).unwrap();
    cfg.n_fine = 1024;
    cfg.n_ladder = vec![8, 16, 32];
    cfg.replicates = 2000;
    cfg.seed = 8;
    let render = |threads| {
        let r = run_experiment(&cfg, RunOptions { threads: Some(threads) })
            .unwrap()
            .without_timing();
        (render_csv(&r), render_json(&r).unwrap())
    };
    let one = render(1);
    let identical = [2, 8].into_iter().all(|k| render(k) == one);

    let grid = PathGrid::new(1.0, 1024).unwrap();
    let path = Process::Brownian.sample(0.0, &grid, &mut replicate_rng(8, 0)).unwrap();
    let h = indicator();
    let mut coupled = true;
    for n in [1, 2, 16, 256, 1024] {
        let coarse = subsample(&path, n).unwrap();
        let stride = 1024 / n;
        coupled &= coarse.iter().enumerate().all(|(k, x)| x.to_bits() == path.values[k * stride].to_bits());
        let direct = riemann_sum(&h, &path, n).unwrap();
        let by_hand = (1.0 / n as f64)
            * coarse[..n]
                .iter()
                .filter(|x| (0.0..1.0).contains(*x))
                .count() as f64;
        coupled &= direct == by_hand;
    }

    let mut full = cfg.clone();
    full.n_ladder = vec![8, 1024];
    let d = simulate_discrepancies(&full, None).unwrap();
    let est = strong_estimates(&d, 2.0);
    let zero = d.values[1].iter().all(|&j| j == 0.0) && est[&1024].value == 0.0 && est[&1024].std_error == 0.0;

    Outcome::new(
        identical && coupled && zero,
        format!("threads 1/2/8 identical {identical}; subsample coupling exact {coupled}; n = N_fine gives 0 {zero}"),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |id, name, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "{} [{id}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((id, name, o));
    };
    record(1, "exact strong-error oracle", &criterion_1);
    record(2, "exact weak-error oracle", &criterion_2);
    let occupation_run = occupation(10_000);
    record(3, "occupation-time rate", &|| criterion_3(&occupation_run));
    record(4, "Hölder improvement", &|| criterion_4(&occupation_run));
    record(5, "stable process run", &criterion_5);
    record(6, "kernel certification", &criterion_6);
    record(7, "sampler distributions", &criterion_7);
    record(8, "determinism and coupling", &criterion_8);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
