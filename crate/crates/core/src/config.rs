//! Experiment configuration: a flat TOML document of key/value pairs.
//!
//! ```toml
//! # occupation time of [0, 1) by a Brownian path
//! process      = "brownian"          # brownian | stable <α> | diffusion <ou|elliptic>
//! h            = "indicator 0 1"     # indicator a b | linear | quadratic | holder γ | table <path>
//! weight_V     = "const"             # const | exp C | poly β
//! majorant_Q   = "gaussian 0.25"     # optional: gaussian c2 | polynomial α
//! horizon_T    = 1.0
//! x0           = 0.0
//! moment_p     = 2
//! n_ladder     = [8, 16, 32, 64]
//! n_fine       = 4096
//! replicates_M = 1000
//! seed         = 42
//! ```
//!
//! Parsing reports every violation it finds, not just the first.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::functionals::{norm_v, Table, TestFunction};
use crate::kernels::{
    check_integrability, make_q_gaussian, make_q_polynomial, make_v_exponential, make_v_polynomial, MajorantQ,
    StableIndex, WeightV,
};
use crate::processes::{DiffusionPreset, Process};
use crate::rates::AbscissaMode;

const KNOWN_KEYS: &[&str] = &[
    "process",
    "h",
    "weight_V",
    "majorant_Q",
    "horizon_T",
    "x0",
    "moment_p",
    "n_ladder",
    "n_fine",
    "replicates_M",
    "seed",
    "abscissa_mode",
    "out_csv",
    "out_json",
    "out_svg",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            csv: "report.csv".into(),
            json: "report.json".into(),
            svg: "report.svg".into(),
        }
    }
}

impl OutputPaths {
    /// Keeps the file names but places them under `dir`.
    pub fn relocate(&self, dir: &Path) -> Self {
        let name = |p: &Path, fallback: &str| dir.join(p.file_name().map_or_else(|| fallback.into(), PathBuf::from));
        Self {
            csv: name(&self.csv, "report.csv"),
            json: name(&self.json, "report.json"),
            svg: name(&self.svg, "report.svg"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub process: Process,
    pub h: TestFunction,
    pub weight: WeightV,
    pub majorant: MajorantQ,
    pub horizon: f64,
    pub x0: f64,
    pub p: f64,
    pub n_ladder: Vec<usize>,
    pub n_fine: usize,
    pub replicates: usize,
    pub seed: u64,
    pub abscissa_mode: AbscissaMode,
    pub outputs: OutputPaths,
}

/// Majorant used when the configuration names none.
pub fn default_majorant(process: &Process) -> Result<MajorantQ> {
    match *process {
        Process::Brownian | Process::Diffusion { .. } => make_q_gaussian(0.25),
        // variance 2t under e^{-t|ξ|²}
        Process::Stable { alpha } if alpha.get() == 2.0 => make_q_gaussian(0.125),
        Process::Stable { alpha } => make_q_polynomial(alpha),
    }
}

impl ExperimentConfig {
    /// Defaults: `V ≡ 1`, default majorant, `T = 1`, `x0 = 0`, `p = 2`,
    /// ladder `[8, 16, 32, 64]`, `N_fine = 4096`, `M = 1000`, seed 42.
    pub fn new(process: Process, h: TestFunction) -> Result<Self> {
        Ok(Self {
            majorant: default_majorant(&process)?,
            process,
            h,
            weight: WeightV::Exponential { c: 0.0 },
            horizon: 1.0,
            x0: 0.0,
            p: 2.0,
            n_ladder: vec![8, 16, 32, 64],
            n_fine: 4096,
            replicates: 1000,
            seed: 42,
            abscissa_mode: AbscissaMode::LogNOverLog,
            outputs: OutputPaths::default(),
        })
    }

    /// All rule violations; empty when the configuration is runnable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(Violation::new("horizon_T", format!("must be positive and finite, got {}", self.horizon)));
        }
        if !self.x0.is_finite() {
            out.push(Violation::new("x0", "must be finite"));
        }
        let fine_ok = self.n_fine >= 2 && self.n_fine.is_power_of_two();
        if !fine_ok {
            out.push(Violation::new("n_fine", format!("{} is not a power of two ≥ 2", self.n_fine)));
        }
        let ladder = &self.n_ladder;
        if ladder.len() < 3 {
            out.push(Violation::new("n_ladder", format!("needs at least 3 rungs, got {}", ladder.len())));
        }
        if ladder.windows(2).any(|w| w[0] >= w[1]) {
            out.push(Violation::new("n_ladder", "must be strictly increasing"));
        }
        for &n in ladder {
            if n < 2 {
                out.push(Violation::new("n_ladder", format!("{n} < 2 (bounds need log n > 0)")));
            } else if fine_ok && !self.n_fine.is_multiple_of(n) {
                out.push(Violation::new("n_ladder", format!("{n} does not divide {}", self.n_fine)));
            }
        }
        if let Some(&max) = ladder.iter().max() {
            if max.checked_mul(max).is_none_or(|sq| sq > self.n_fine) {
                out.push(Violation::new(
                    "n_ladder",
                    format!("max rung {max} squared exceeds n_fine = {}", self.n_fine),
                ));
            }
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            out.push(Violation::new("moment_p", format!("strong errors need p ≥ 2, got {}", self.p)));
        }
        if self.replicates < 2 {
            out.push(Violation::new("replicates_M", "need at least 2 replicates"));
        }
        if let WeightV::Polynomial { beta } = self.weight {
            let alpha = self.process.index().get();
            if !(beta > 0.0 && beta < alpha) {
                out.push(Violation::new("weight_V", format!("β = {beta} must lie in (0, α) = (0, {alpha})")));
            }
        }
        let verdict = check_integrability(&self.majorant, &self.weight, self.p, self.horizon, self.process.index());
        if !verdict.accepted {
            out.push(Violation::new("weight_V", format!("integrability rejected: {}", verdict.reason)));
        }
        if let Err(e) = norm_v(&self.h, &self.weight) {
            out.push(Violation::new("h", e.to_string()));
        }
        out
    }
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn number(key: &str, s: &str) -> std::result::Result<f64, Violation> {
    s.parse::<f64>()
        .map_err(|_| Violation::new(key, format!("`{s}` is not a number")))
}

pub fn parse_process(s: &str) -> std::result::Result<Process, Violation> {
    let key = "process";
    match words(s).as_slice() {
        ["brownian"] => Ok(Process::Brownian),
        ["stable", a] => {
            let alpha = StableIndex::new(number(key, a)?).map_err(|e| Violation::new(key, e.to_string()))?;
            Ok(Process::Stable { alpha })
        }
        ["diffusion", "ou"] => Ok(Process::Diffusion {
            preset: DiffusionPreset::OrnsteinUhlenbeck,
        }),
        ["diffusion", "elliptic"] => Ok(Process::Diffusion {
            preset: DiffusionPreset::Elliptic,
        }),
        _ => Err(Violation::new(
            key,
            format!("`{s}`: expected `brownian`, `stable <α>` or `diffusion <ou|elliptic>`"),
        )),
    }
}

pub fn parse_test_function(s: &str, base_dir: Option<&Path>) -> std::result::Result<TestFunction, Violation> {
    let key = "h";
    let wrap = |e: Error| Violation::new(key, e.to_string());
    match words(s).as_slice() {
        ["indicator", a, b] => TestFunction::indicator(number(key, a)?, number(key, b)?).map_err(wrap),
        ["linear"] => Ok(TestFunction::Linear),
        ["quadratic"] => Ok(TestFunction::Quadratic),
        ["holder", g] => TestFunction::holder_power(number(key, g)?).map_err(wrap),
        ["table", path] => {
            let path = match base_dir {
                Some(dir) => dir.join(path),
                None => PathBuf::from(path),
            };
            let table = Table::load(&path).map_err(|e| Violation::new(key, format!("{}: {e}", path.display())))?;
            Ok(TestFunction::CustomTable { table })
        }
        _ => Err(Violation::new(
            key,
            format!("`{s}`: expected `indicator a b`, `linear`, `quadratic`, `holder γ` or `table <path>`"),
        )),
    }
}

pub fn parse_weight(s: &str, alpha: StableIndex) -> std::result::Result<WeightV, Violation> {
    let key = "weight_V";
    let wrap = |e: Error| Violation::new(key, e.to_string());
    match words(s).as_slice() {
        ["const"] => Ok(WeightV::Exponential { c: 0.0 }),
        ["exp", c] => make_v_exponential(number(key, c)?).map_err(wrap),
        ["poly", b] => make_v_polynomial(number(key, b)?, alpha).map_err(wrap),
        _ => Err(Violation::new(key, format!("`{s}`: expected `const`, `exp C` or `poly β`"))),
    }
}

pub fn parse_majorant(s: &str) -> std::result::Result<MajorantQ, Violation> {
    let key = "majorant_Q";
    let wrap = |e: Error| Violation::new(key, e.to_string());
    match words(s).as_slice() {
        ["gaussian", c2] => make_q_gaussian(number(key, c2)?).map_err(wrap),
        ["polynomial", a] => {
            let alpha = StableIndex::new(number(key, a)?).map_err(wrap)?;
            make_q_polynomial(alpha).map_err(wrap)
        }
        _ => Err(Violation::new(key, format!("`{s}`: expected `gaussian c2` or `polynomial α`"))),
    }
}

struct Reader<'a> {
    table: &'a toml::Table,
    violations: Vec<Violation>,
}

impl Reader<'_> {
    fn missing(&mut self, key: &str) {
        self.violations.push(Violation::new(key, "required key is missing"));
    }

    fn string(&mut self, key: &str, required: bool) -> Option<String> {
        match self.table.get(key) {
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.violations
                    .push(Violation::new(key, format!("expected a string, got {}", other.type_str())));
                None
            }
            None => {
                if required {
                    self.missing(key);
                }
                None
            }
        }
    }

    fn float(&mut self, key: &str, required: bool) -> Option<f64> {
        match self.table.get(key) {
            Some(toml::Value::Float(f)) => Some(*f),
            Some(toml::Value::Integer(i)) => Some(*i as f64),
            Some(other) => {
                self.violations
                    .push(Violation::new(key, format!("expected a number, got {}", other.type_str())));
                None
            }
            None => {
                if required {
                    self.missing(key);
                }
                None
            }
        }
    }

    fn count(&mut self, key: &str, value: &toml::Value) -> Option<usize> {
        match value {
            toml::Value::Integer(i) if *i >= 0 => Some(*i as usize),
            other => {
                self.violations
                    .push(Violation::new(key, format!("expected a nonnegative integer, got {other}")));
                None
            }
        }
    }

    fn integer(&mut self, key: &str) -> Option<usize> {
        match self.table.get(key) {
            Some(v) => self.count(key, &v.clone()),
            None => {
                self.missing(key);
                None
            }
        }
    }

    fn seed(&mut self) -> Option<u64> {
        match self.table.get("seed") {
            Some(toml::Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(toml::Value::String(s)) => match s.trim().parse::<u64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    self.violations
                        .push(Violation::new("seed", format!("`{s}` is not a 64-bit unsigned integer")));
                    None
                }
            },
            Some(other) => {
                self.violations
                    .push(Violation::new("seed", format!("expected a nonnegative integer, got {other}")));
                None
            }
            None => {
                self.violations
                    .push(Violation::new("seed", "required key is missing (seeds are mandatory)"));
                None
            }
        }
    }

    fn ladder(&mut self) -> Option<Vec<usize>> {
        match self.table.get("n_ladder") {
            Some(toml::Value::Array(items)) => {
                let items = items.clone();
                let parsed: Vec<Option<usize>> = items.iter().map(|v| self.count("n_ladder", v)).collect();
                parsed.into_iter().collect()
            }
            Some(other) => {
                self.violations
                    .push(Violation::new("n_ladder", format!("expected a list, got {}", other.type_str())));
                None
            }
            None => {
                self.missing("n_ladder");
                None
            }
        }
    }
}

/// Parses and validates a configuration document. Relative table paths are
/// resolved against `base_dir` when given.
pub fn parse_config_in(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![Violation::new("<document>", e.message().to_owned())])
    })?;
    let mut r = Reader {
        table: &table,
        violations: Vec::new(),
    };
    for (key, value) in &table {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            r.violations.push(Violation::new(key.as_str(), "unknown key"));
        } else if value.is_table() {
            r.violations.push(Violation::new(key.as_str(), "nested tables are not allowed"));
        }
    }

    let process = r.string("process", true).and_then(|s| match parse_process(&s) {
        Ok(p) => Some(p),
        Err(v) => {
            r.violations.push(v);
            None
        }
    });
    let alpha = process.map_or(StableIndex::BROWNIAN, |p| p.index());
    let h = r.string("h", true).and_then(|s| match parse_test_function(&s, base_dir) {
        Ok(h) => Some(h),
        Err(v) => {
            r.violations.push(v);
            None
        }
    });
    let weight = r.string("weight_V", true).and_then(|s| match parse_weight(&s, alpha) {
        Ok(w) => Some(w),
        Err(v) => {
            r.violations.push(v);
            None
        }
    });
    let majorant = match r.string("majorant_Q", false) {
        Some(s) => match parse_majorant(&s) {
            Ok(q) => Some(q),
            Err(v) => {
                r.violations.push(v);
                None
            }
        },
        None => process.and_then(|p| default_majorant(&p).ok()),
    };
    let horizon = r.float("horizon_T", true);
    let x0 = r.float("x0", false).unwrap_or(0.0);
    let p = r.float("moment_p", true);
    let n_ladder = r.ladder();
    let n_fine = r.integer("n_fine");
    let replicates = r.integer("replicates_M");
    let seed = r.seed();
    let abscissa_mode = match r.string("abscissa_mode", false) {
        None => Some(AbscissaMode::LogNOverLog),
        Some(s) => {
            let m = AbscissaMode::parse(&s);
            if m.is_none() {
                r.violations.push(Violation::new(
                    "abscissa_mode",
                    format!("`{s}`: expected `log_n` or `log_n_over_log`"),
                ));
            }
            m
        }
    };
    let mut outputs = OutputPaths::default();
    if let Some(s) = r.string("out_csv", false) {
        outputs.csv = s.into();
    }
    if let Some(s) = r.string("out_json", false) {
        outputs.json = s.into();
    }
    if let Some(s) = r.string("out_svg", false) {
        outputs.svg = s.into();
    }

    let mut violations = r.violations;
    let (
        Some(process),
        Some(h),
        Some(weight),
        Some(majorant),
        Some(horizon),
        Some(p),
        Some(n_ladder),
        Some(n_fine),
        Some(replicates),
        Some(seed),
        Some(abscissa_mode),
    ) = (process, h, weight, majorant, horizon, p, n_ladder, n_fine, replicates, seed, abscissa_mode)
    else {
        return Err(Error::Config(violations));
    };
    let cfg = ExperimentConfig {
        process,
        h,
        weight,
        majorant,
        horizon,
        x0,
        p,
        n_ladder,
        n_fine,
        replicates,
        seed,
        abscissa_mode,
        outputs,
    };
    violations.extend(cfg.validate());
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(violations))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_in(text, None)
}

/// Reads a configuration file; table paths resolve relative to its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_in(&text, path.parent())
}
