//! Integrands `h`, the reference integral, integral sums, and the
//! discrepancy `J_{T,n}(h) = I_T(h) - I_{T,n}(h)` on a coupled path.
//!
//! The reference integral is the left-endpoint sum at the fine resolution,
//! so `n = N_fine` reproduces it exactly. Sums go through [`ExactSum`]; the
//! discrepancy is the single rounding of an exact real number, so computing
//! it as a difference of sums or as a sum of `Δ_n` terms gives the same bits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::WeightV;
use crate::numerics::ExactSum;
use crate::processes::SamplePath;

/// Piecewise-linear function through strictly increasing knots, constant
/// outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(invalid("table", "needs matching, non-empty columns"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("table", "entries must be finite"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("table", "abscissae must be strictly increasing"));
        }
        Ok(Self { xs, ys })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            xs: vec![0.0],
            ys: vec![value],
        }
    }

    /// Two whitespace-separated columns; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| invalid("table", format!("line {}: `{s}` is not a number", lineno + 1)))
            };
            match cols.as_slice() {
                [x, y] => {
                    xs.push(parse(x)?);
                    ys.push(parse(y)?);
                }
                _ => return Err(invalid("table", format!("line {}: expected two columns", lineno + 1))),
            }
        }
        Self::new(xs, ys)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (xs, ys) = (&self.xs, &self.ys);
        let last = xs.len() - 1;
        if x <= xs[0] {
            return ys[0];
        }
        if x >= xs[last] {
            return ys[last];
        }
        let i = xs.partition_point(|&k| k <= x) - 1;
        let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        ys[i] + w * (ys[i + 1] - ys[i])
    }

    fn max_slope(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max)
    }

    /// Points where `|h(x)| / V(|x|)` is sampled: the knots, 64 subdivisions
    /// per segment, and the origin.
    fn probe_points(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        pts.extend_from_slice(&self.xs);
        for w in self.xs.windows(2) {
            pts.extend((1..64).map(|k| w[0] + (w[1] - w[0]) * k as f64 / 64.0));
        }
        pts
    }
}

/// An integrand with its regularity metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `1_{[a, b)}`
    Indicator { a: f64, b: f64 },
    Linear,
    Quadratic,
    /// `|x|^γ`
    HolderPower { gamma: f64 },
    CustomTable { table: Table },
    /// `factor · inner`
    Scaled { factor: f64, inner: Box<TestFunction> },
}

impl TestFunction {
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(invalid("h", format!("indicator needs a < b, got [{a}, {b})")));
        }
        Ok(TestFunction::Indicator { a, b })
    }

    pub fn holder_power(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid("h", format!("Hölder index {gamma} outside (0, 1]")));
        }
        Ok(TestFunction::HolderPower { gamma })
    }

    pub fn constant(value: f64) -> Self {
        TestFunction::CustomTable {
            table: Table::constant(value),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TestFunction::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    /// Short textual form, matching the configuration grammar where possible.
    pub fn describe(&self) -> String {
        match self {
            TestFunction::Indicator { a, b } => format!("indicator {a} {b}"),
            TestFunction::Linear => "linear".into(),
            TestFunction::Quadratic => "quadratic".into(),
            TestFunction::HolderPower { gamma } => format!("holder {gamma}"),
            TestFunction::CustomTable { .. } => "table".into(),
            TestFunction::Scaled { factor, inner } => format!("{factor} * ({})", inner.describe()),
        }
    }

    /// `true` when `h` takes a single value everywhere.
    pub fn is_constant(&self) -> bool {
        match self {
            TestFunction::CustomTable { table } => table.ys.windows(2).all(|w| w[0] == w[1]),
            TestFunction::Scaled { factor, inner } => *factor == 0.0 || inner.is_constant(),
            _ => false,
        }
    }
}

pub fn eval_h(h: &TestFunction, x: f64) -> f64 {
    match h {
        TestFunction::Indicator { a, b } => {
            if *a <= x && x < *b {
                1.0
            } else {
                0.0
            }
        }
        TestFunction::Linear => x,
        TestFunction::Quadratic => x * x,
        TestFunction::HolderPower { gamma } => x.abs().powf(*gamma),
        TestFunction::CustomTable { table } => table.eval(x),
        TestFunction::Scaled { factor, inner } => factor * eval_h(inner, x),
    }
}

fn check_path(path: &SamplePath) -> Result<()> {
    if path.values.len() != path.grid.n_fine() + 1 {
        return Err(invalid("path", "length does not match its grid"));
    }
    Ok(())
}

/// `I_{T,n}(h) = (T/n) Σ_{k<n} h(X_{kT/n})`.
pub fn riemann_sum(h: &TestFunction, path: &SamplePath, n: usize) -> Result<f64> {
    check_path(path)?;
    let stride = path.grid.stride(n)?;
    let mut acc = ExactSum::new();
    for k in 0..n {
        acc.add(eval_h(h, path.values[k * stride]));
    }
    Ok(path.grid.horizon() / n as f64 * acc.value())
}

/// Left-endpoint sum at the fine resolution.
pub fn reference_integral(h: &TestFunction, path: &SamplePath) -> Result<f64> {
    riemann_sum(h, path, path.grid.n_fine())
}

/// Discrepancy for several rungs from precomputed `h(X_{t_j})`, `j < N_fine`.
///
/// For each `n`, this rounds the exact value of `Σ_j h_j - (N/n) Σ_k h_{k N/n}`
/// once and scales by `T/N`. `N/n` is a power of two, so the scaling of the
/// coarse terms is exact.
pub(crate) fn discrepancies_from_values(
    h_values: &[f64],
    horizon: f64,
    ladder: &[usize],
    strides: &[usize],
    fine: &mut ExactSum,
    scratch: &mut ExactSum,
    out: &mut [f64],
) {
    let n_fine = h_values.len();
    let dt = horizon / n_fine as f64;
    fine.clear();
    for &v in h_values {
        fine.add(v);
    }
    for ((slot, &n), &stride) in out.iter_mut().zip(ladder).zip(strides) {
        scratch.clone_from(fine);
        let weight = stride as f64;
        for k in 0..n {
            scratch.add(-weight * h_values[k * stride]);
        }
        *slot = dt * scratch.value();
    }
}

/// `J_{T,n}(h) = I_T(h) - I_{T,n}(h)` on the coupled path.
pub fn discrepancy(h: &TestFunction, path: &SamplePath, n: usize) -> Result<f64> {
    check_path(path)?;
    let stride = path.grid.stride(n)?;
    let n_fine = path.grid.n_fine();
    let values: Vec<f64> = path.values[..n_fine].iter().map(|&x| eval_h(h, x)).collect();
    let mut out = [0.0];
    discrepancies_from_values(
        &values,
        path.grid.horizon(),
        &[n],
        &[stride],
        &mut ExactSum::new(),
        &mut ExactSum::new(),
        &mut out,
    );
    Ok(out[0])
}

/// The same discrepancy written as `(T/N) Σ_j Δ_n(t_j)` with
/// `Δ_n(s) = h(X_s) - h(X_{η_n(s)})` and `η_n(s)` the left coarse node.
pub fn discrepancy_by_increments(h: &TestFunction, path: &SamplePath, n: usize) -> Result<f64> {
    check_path(path)?;
    let stride = path.grid.stride(n)?;
    let n_fine = path.grid.n_fine();
    let mut acc = ExactSum::new();
    for j in 0..n_fine {
        let eta = (j / stride) * stride;
        // Δ_n(t_j) enters as its two exact terms.
        acc.add(eval_h(h, path.values[j]));
        acc.add(-eval_h(h, path.values[eta]));
    }
    Ok(path.grid.step() * acc.value())
}

/// `sup_{r ≥ 0} r^k / V(r)`, or `None` when it is infinite.
fn sup_power_over_weight(k: f64, v: &WeightV) -> Option<f64> {
    match *v {
        WeightV::Exponential { c: 0.0 } => None,
        WeightV::Exponential { c } => {
            let r = k / c;
            Some(r.powf(k) * (-k).exp())
        }
        WeightV::Polynomial { beta } => {
            if beta < k {
                None
            } else if beta == k {
                Some(1.0)
            } else {
                let r = k / (beta - k);
                Some(r.powf(k) / (1.0 + r).powf(beta))
            }
        }
    }
}

/// `‖h‖_V = sup_x |h(x)| / V(|x|)`.
///
/// Built-in integrands get their analytic value. Tables get a grid
/// supremum, which is a lower bound of the true value.
pub fn norm_v(h: &TestFunction, v: &WeightV) -> Result<f64> {
    let diverges = || Error::Divergent(format!("‖{}‖_V is infinite for V = {}", h.describe(), v.describe()));
    match h {
        TestFunction::Indicator { a, b } => {
            let dist = if *a <= 0.0 && 0.0 < *b {
                0.0
            } else if *a > 0.0 {
                *a
            } else {
                b.abs()
            };
            Ok(1.0 / v.eval(dist))
        }
        TestFunction::Linear => sup_power_over_weight(1.0, v).ok_or_else(diverges),
        TestFunction::Quadratic => sup_power_over_weight(2.0, v).ok_or_else(diverges),
        TestFunction::HolderPower { gamma } => sup_power_over_weight(*gamma, v).ok_or_else(diverges),
        TestFunction::CustomTable { table } => Ok(table
            .probe_points()
            .into_iter()
            .map(|x| table.eval(x).abs() / v.eval(x.abs()))
            .fold(0.0, f64::max)),
        TestFunction::Scaled { factor, inner } => {
            if *factor == 0.0 {
                Ok(0.0)
            } else {
                Ok(factor.abs() * norm_v(inner, v)?)
            }
        }
    }
}

/// Hölder index and seminorm `‖h‖_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderNorm {
    pub gamma: f64,
    pub value: f64,
}

pub fn norm_holder(h: &TestFunction) -> Result<HolderNorm> {
    match h {
        TestFunction::Linear => Ok(HolderNorm { gamma: 1.0, value: 1.0 }),
        TestFunction::HolderPower { gamma } => Ok(HolderNorm {
            gamma: *gamma,
            value: 1.0,
        }),
        TestFunction::CustomTable { table } => Ok(HolderNorm {
            gamma: 1.0,
            value: table.max_slope(),
        }),
        TestFunction::Scaled { factor, inner } => {
            let n = norm_holder(inner)?;
            Ok(HolderNorm {
                gamma: n.gamma,
                value: factor.abs() * n.value,
            })
        }
        TestFunction::Indicator { .. } => Err(Error::NotHolder("indicator functions jump".into())),
        TestFunction::Quadratic => Err(Error::NotHolder("x² has unbounded increments".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_v_exponential, make_v_polynomial, StableIndex};
    use crate::processes::PathGrid;

    fn linear_path(n_fine: usize) -> SamplePath {
        let grid = PathGrid::new(1.0, n_fine).unwrap();
        let values = (0..=n_fine).map(|j| grid.time(j)).collect();
        SamplePath::from_values(grid, values).unwrap()
    }

    #[test]
    fn eval_examples() {
        let ind = TestFunction::indicator(0.0, 1.0).unwrap();
        assert_eq!(eval_h(&ind, 0.5), 1.0);
        assert_eq!(eval_h(&ind, 2.0), 0.0);
        assert_eq!(eval_h(&ind, 0.0), 1.0);
        assert_eq!(eval_h(&ind, 1.0), 0.0);
        assert_eq!(eval_h(&TestFunction::Linear, 3.0), 3.0);
        assert_eq!(eval_h(&TestFunction::holder_power(0.5).unwrap(), 4.0), 2.0);
        assert!(TestFunction::indicator(1.0, 1.0).is_err());
        assert!(TestFunction::holder_power(0.0).is_err());
    }

    #[test]
    fn table_interpolation() {
        let t = Table::parse("# x y\n0 0\n1 2\n3 2 # flat\n").unwrap();
        assert_eq!(t.eval(-5.0), 0.0);
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 2.0);
        assert_eq!(t.eval(10.0), 2.0);
        assert!(Table::parse("0 0\n0 1\n").is_err());
        assert!(Table::parse("0 0 0\n").is_err());
        assert!(Table::parse("").is_err());
    }

    #[test]
    fn riemann_sum_on_identity_path() {
        let path = linear_path(1 << 12);
        assert_eq!(riemann_sum(&TestFunction::Linear, &path, 4).unwrap(), 0.375);
        let n = (1u32 << 12) as f64;
        let reference = reference_integral(&TestFunction::Linear, &path).unwrap();
        assert!((reference - (n - 1.0) / (2.0 * n)).abs() < 1e-15);
        let j = discrepancy(&TestFunction::Linear, &path, 4).unwrap();
        assert!((j - ((n - 1.0) / (2.0 * n) - 0.375)).abs() < 1e-15);
        assert!((j - 0.124_877_9).abs() < 1e-7);
    }

    #[test]
    fn constant_integrand() {
        let path = linear_path(64);
        let one = TestFunction::constant(1.0);
        for n in [1, 2, 8, 64] {
            assert_eq!(riemann_sum(&one, &path, n).unwrap(), 1.0);
            assert_eq!(discrepancy(&one, &path, n).unwrap(), 0.0);
        }
        assert_eq!(reference_integral(&TestFunction::constant(0.0), &path).unwrap(), 0.0);
    }

    #[test]
    fn fine_rung_is_the_reference() {
        let path = linear_path(256);
        let h = TestFunction::Quadratic;
        assert_eq!(
            riemann_sum(&h, &path, 256).unwrap().to_bits(),
            reference_integral(&h, &path).unwrap().to_bits()
        );
        assert_eq!(discrepancy(&h, &path, 256).unwrap(), 0.0);
        assert!(matches!(discrepancy(&h, &path, 3), Err(Error::Divisibility { .. })));
    }

    #[test]
    fn monotone_refinement_halves() {
        // X_t = t, h = x: J = (1/2n - 1/2N) with the fine reference.
        let n_fine = 1 << 12;
        let path = linear_path(n_fine);
        let tail = 1.0 / (2.0 * n_fine as f64);
        for n in [4usize, 8, 16, 32] {
            let a = discrepancy(&TestFunction::Linear, &path, n).unwrap() + tail;
            let b = discrepancy(&TestFunction::Linear, &path, 2 * n).unwrap() + tail;
            assert!((a / b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norms() {
        let exp1 = make_v_exponential(1.0).unwrap();
        let one = make_v_exponential(0.0).unwrap();
        let ind = TestFunction::indicator(0.0, 1.0).unwrap();
        assert_eq!(norm_v(&ind, &exp1).unwrap(), 1.0);
        assert_eq!(norm_v(&TestFunction::indicator(2.0, 3.0).unwrap(), &exp1).unwrap(), (-2.0f64).exp());
        let q = norm_v(&TestFunction::Quadratic, &exp1).unwrap();
        assert!((q - 4.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(norm_v(&TestFunction::constant(0.0), &exp1).unwrap(), 0.0);
        let poly = make_v_polynomial(0.5, StableIndex::new(1.0).unwrap()).unwrap();
        assert!(matches!(norm_v(&TestFunction::Linear, &poly), Err(Error::Divergent(_))));
        assert!(norm_v(&TestFunction::Linear, &one).is_err());
        let lin = norm_v(&TestFunction::Linear, &exp1).unwrap();
        assert!((lin - (-1.0f64).exp()).abs() < 1e-15);
        let t = TestFunction::CustomTable {
            table: Table::new(vec![-1.0, 0.0, 2.0], vec![-3.0, 1.0, 0.5]).unwrap(),
        };
        assert_eq!(norm_v(&t, &one).unwrap(), 3.0);
    }

    #[test]
    fn norm_scaling() {
        let exp1 = make_v_exponential(1.0).unwrap();
        for h in [TestFunction::Quadratic, TestFunction::indicator(-1.0, 1.0).unwrap()] {
            let base = norm_v(&h, &exp1).unwrap();
            for c in [0.0, 2.0, -3.0] {
                let scaled = norm_v(&h.clone().scaled(c), &exp1).unwrap();
                assert!((scaled - c.abs() * base).abs() <= 1e-15 * base);
            }
        }
    }

    #[test]
    fn holder_norms() {
        assert_eq!(norm_holder(&TestFunction::Linear).unwrap(), HolderNorm { gamma: 1.0, value: 1.0 });
        let hp = norm_holder(&TestFunction::holder_power(0.5).unwrap()).unwrap();
        assert_eq!((hp.gamma, hp.value), (0.5, 1.0));
        assert!(matches!(
            norm_holder(&TestFunction::indicator(0.0, 1.0).unwrap()),
            Err(Error::NotHolder(_))
        ));
        assert!(norm_holder(&TestFunction::Quadratic).is_err());
    }

    #[test]
    fn sqrt_holder_seminorm_is_one_on_samples() {
        // |√|x| - √|y|| ≤ √|x - y|, with equality at y = 0.
        let mut worst = 0.0_f64;
        for i in 0..200 {
            for j in 0..200 {
                let (x, y) = (i as f64 * 0.37 - 30.0, j as f64 * 0.29 - 25.0);
                if x != y {
                    let r = (x.abs().sqrt() - y.abs().sqrt()).abs() / (x - y).abs().sqrt();
                    worst = worst.max(r);
                }
            }
        }
        assert!(worst <= 1.0 + 1e-12 && worst > 0.95, "{worst}");
        assert_eq!((4f64.sqrt() - 0f64.sqrt()) / 4f64.sqrt(), 1.0);
    }
}
