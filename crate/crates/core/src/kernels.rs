//! Transition densities, majorant densities `Q`, weight functions `V`, and
//! grid certification of the density and time-derivative bounds
//!
//! ```text
//! p_t(x, y)        <= C_T t^{-1/α}   Q(t^{-1/α} (x - y))
//! |∂_t p_t(x, y)|  <= C_T t^{-1-1/α} Q(t^{-1/α} (x - y)),   t <= T
//! ```
//!
//! All built-in processes are one-dimensional. Symmetric stable laws use the
//! characteristic function `E e^{iξX_t} = e^{-t|ξ|^α}`, so the `α = 2` member
//! of the stable family has variance `2t`, while [`TransitionDensity::Brownian`]
//! is the standard (variance `t`) Brownian motion.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{integrate, integrate_half_line, Tolerance};

/// Stability index `α ∈ (0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StableIndex(f64);

impl StableIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 2.0 {
            Ok(Self(alpha))
        } else {
            Err(invalid("alpha", format!("stability index {alpha} outside (0, 2]")))
        }
    }

    pub const BROWNIAN: StableIndex = StableIndex(2.0);

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StableIndex {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StableIndex> for f64 {
    fn from(a: StableIndex) -> f64 {
        a.0
    }
}

/// Normalized majorant density on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MajorantQ {
    /// `Q(x) = c1 e^{-c2 x^2}`
    Gaussian { c1: f64, c2: f64 },
    /// `Q(x) = c / (1 + |x|^{1+α})`
    PolynomialTail { alpha: StableIndex, c: f64 },
}

pub fn make_q_gaussian(c2: f64) -> Result<MajorantQ> {
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(invalid("c2", format!("must be positive and finite, got {c2}")));
    }
    Ok(MajorantQ::Gaussian {
        c1: (c2 / PI).sqrt(),
        c2,
    })
}

pub fn make_q_polynomial(alpha: StableIndex) -> Result<MajorantQ> {
    let a = alpha.get();
    if a >= 2.0 {
        return Err(invalid(
            "alpha",
            "polynomial-tail majorant needs α < 2; use the gaussian family for α = 2",
        ));
    }
    let s = 1.0 + a;
    let half = integrate_half_line(|x| 1.0 / (1.0 + x.powf(s)), 0.0, Tolerance::new(1e-14, 1e-12));
    if !half.converged {
        return Err(Error::Quadrature(format!(
            "normalization of the α = {a} majorant (estimate {:e})",
            half.error
        )));
    }
    Ok(MajorantQ::PolynomialTail {
        alpha,
        c: 1.0 / (2.0 * half.value),
    })
}

impl MajorantQ {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MajorantQ::Gaussian { c1, c2 } => c1 * (-c2 * x * x).exp(),
            MajorantQ::PolynomialTail { alpha, c } => c / (1.0 + x.abs().powf(1.0 + alpha.get())),
        }
    }

    /// Scaling index implied by the family: `α` for polynomial tails, 2 for gaussian.
    pub fn index(&self) -> StableIndex {
        match *self {
            MajorantQ::Gaussian { .. } => StableIndex::BROWNIAN,
            MajorantQ::PolynomialTail { alpha, .. } => alpha,
        }
    }

    /// `∫ Q` by quadrature.
    pub fn mass(&self) -> f64 {
        let q = *self;
        2.0 * integrate_half_line(move |x| q.eval(x), 0.0, Tolerance::new(1e-14, 1e-12)).value
    }

    pub fn describe(&self) -> String {
        match *self {
            MajorantQ::Gaussian { c2, .. } => format!("gaussian {c2}"),
            MajorantQ::PolynomialTail { alpha, .. } => format!("polynomial {}", alpha.get()),
        }
    }
}

/// Submultiplicative weight `V: R+ -> [1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightV {
    /// `V(r) = e^{C r}`; `C = 0` gives `V ≡ 1`.
    Exponential { c: f64 },
    /// `V(r) = (1 + r)^β`
    Polynomial { beta: f64 },
}

pub fn make_v_exponential(c: f64) -> Result<WeightV> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(invalid("C", format!("must be finite and nonnegative, got {c}")));
    }
    Ok(WeightV::Exponential { c })
}

pub fn make_v_polynomial(beta: f64, alpha: StableIndex) -> Result<WeightV> {
    if !(beta > 0.0 && beta < alpha.get()) {
        return Err(invalid(
            "beta",
            format!("β = {beta} must lie in (0, α) = (0, {})", alpha.get()),
        ));
    }
    Ok(WeightV::Polynomial { beta })
}

/// Largest observed violation of the weight axioms over a sample of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightAxioms {
    /// max of `V(r1 + r2) / (V(r1) V(r2))`; at most 1 for a valid weight
    pub submultiplicative_ratio: f64,
    /// number of ordered pairs with `V(lo) > V(hi)`
    pub monotonicity_failures: usize,
    pub min_value: f64,
}

impl WeightV {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            WeightV::Exponential { c } => (c * r).exp(),
            WeightV::Polynomial { beta } => (1.0 + r).powf(beta),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(*self, WeightV::Exponential { c } if c == 0.0)
    }

    pub fn describe(&self) -> String {
        match *self {
            WeightV::Exponential { c: 0.0 } => "const".to_owned(),
            WeightV::Exponential { c } => format!("exp {c}"),
            WeightV::Polynomial { beta } => format!("poly {beta}"),
        }
    }

    pub fn check_axioms(&self, pairs: &[(f64, f64)]) -> WeightAxioms {
        let mut ratio = 0.0_f64;
        let mut failures = 0;
        let mut min_value = f64::INFINITY;
        for &(r1, r2) in pairs {
            let (v1, v2) = (self.eval(r1), self.eval(r2));
            ratio = ratio.max(self.eval(r1 + r2) / (v1 * v2));
            let (lo, hi) = if r1 <= r2 { (v1, v2) } else { (v2, v1) };
            if lo > hi {
                failures += 1;
            }
            min_value = min_value.min(v1).min(v2);
        }
        WeightAxioms {
            submultiplicative_ratio: ratio,
            monotonicity_failures: failures,
            min_value,
        }
    }
}

/// Outcome of the analytic tail-exponent rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integrability {
    pub accepted: bool,
    pub reason: String,
}

/// Decides whether `∫ V^p(T^{1/α}|x|) Q(x) dx` is finite by comparing tail
/// exponents; never by running a quadrature.
pub fn check_integrability(
    q: &MajorantQ,
    v: &WeightV,
    p: f64,
    _horizon: f64,
    _alpha: StableIndex,
) -> Integrability {
    let verdict = |accepted, reason: String| Integrability { accepted, reason };
    if v.is_constant() {
        return verdict(true, "V ≡ 1".into());
    }
    match (*q, *v) {
        (MajorantQ::Gaussian { .. }, WeightV::Exponential { .. }) => {
            verdict(true, "gaussian tail dominates exponential weight".into())
        }
        (MajorantQ::Gaussian { .. }, WeightV::Polynomial { .. }) => {
            verdict(true, "gaussian tail dominates polynomial weight".into())
        }
        (MajorantQ::PolynomialTail { alpha, .. }, WeightV::Polynomial { beta }) => {
            let bp = beta * p;
            let a = alpha.get();
            if bp < a {
                verdict(true, format!("β·p = {bp} < α = {a}"))
            } else {
                verdict(false, format!("β·p = {bp} ≥ α = {a}"))
            }
        }
        (MajorantQ::PolynomialTail { alpha, .. }, WeightV::Exponential { c }) => verdict(
            false,
            format!(
                "exponential weight e^({c} r) against polynomial tail of index {}",
                alpha.get()
            ),
        ),
    }
}

/// `∫ Q(y) V^power(T^{1/α} |y|) dy`.
pub fn qv_integral(
    q: &MajorantQ,
    v: &WeightV,
    horizon: f64,
    alpha: StableIndex,
    power: f64,
) -> Result<f64> {
    if power.is_nan() || power <= 0.0 {
        return Err(invalid("power", format!("must be positive, got {power}")));
    }
    let verdict = check_integrability(q, v, power, horizon, alpha);
    if !verdict.accepted {
        return Err(Error::Divergent(verdict.reason));
    }
    if v.is_constant() {
        return Ok(q.mass());
    }
    let scale = horizon.powf(1.0 / alpha.get());
    let (q, v) = (*q, *v);
    let half = integrate_half_line(
        move |y| q.eval(y) * v.eval(scale * y).powf(power),
        0.0,
        Tolerance::new(1e-15, 1e-10),
    );
    if !half.converged {
        return Err(Error::Quadrature(format!(
            "∫ Q V^{power}: error estimate {:e} on value {:e}",
            half.error, half.value
        )));
    }
    Ok(2.0 * half.value)
}

// e^{-36} ≈ 2.3e-16 cuts the characteristic function.
const CF_LOG_CUTOFF: f64 = 36.0;
const DENSITY_TOL: Tolerance = Tolerance {
    abs: 1e-17,
    rel: 1e-12,
    max_intervals: 5000,
};

/// Density at `z` of the unit-time symmetric stable law.
fn unit_stable_density(alpha: f64, z: f64) -> f64 {
    let z = z.abs();
    let xi_max = CF_LOG_CUTOFF.powf(1.0 / alpha);
    // Cosine inversion while the integrand has few oscillations; beyond that
    // rotate the contour into the upper half plane, where e^{izξ} decays.
    if z * xi_max <= 40.0 * PI {
        let f = |xi: f64| (xi * z).cos() * (-xi.powf(alpha)).exp();
        if z == 0.0 {
            return integrate(f, 0.0, xi_max, DENSITY_TOL).value / PI;
        }
        let half_period = PI / z;
        let mut total = 0.0;
        let mut a = 0.0;
        while a < xi_max {
            let b = (a + half_period).min(xi_max);
            total += integrate(f, a, b, DENSITY_TOL).value;
            a = b;
        }
        return total / PI;
    }
    // Along ξ = r e^{iθ} the bare e^{izξ} term integrates to exactly zero,
    // so only e^{-ξ^α} - 1 is integrated; otherwise the O(1) integrand
    // cancels down to the O(z^{-1-α}) density.
    let theta = FRAC_PI_2.min(FRAC_PI_2 / alpha);
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_at, cos_at) = (alpha * theta).sin_cos();
    let f = |r: f64| {
        let ra = r.powf(alpha);
        let (a, b) = (-ra * cos_at, -ra * sin_at);
        let half = (0.5 * b).sin();
        let re = a.exp_m1() * b.cos() - 2.0 * half * half;
        let im = a.exp() * b.sin();
        let phase = z * r * cos_t + theta;
        (-z * r * sin_t).exp() * (re * phase.cos() - im * phase.sin())
    };
    let reach = 40.0 / (z * sin_t);
    integrate(f, 0.0, reach, DENSITY_TOL).value / PI
}

/// `g_t^{(α)}(z)`, the density at `z` of the symmetric stable law with
/// characteristic function `e^{-t|ξ|^α}`.
pub fn stable_density(alpha: StableIndex, t: f64, z: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("time must be positive, got {t}")));
    }
    let a = alpha.get();
    let scale = t.powf(1.0 / a);
    Ok((unit_stable_density(a, z / scale) / scale).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum TransitionDensity {
    Brownian,
    SymmetricStable { alpha: StableIndex },
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid("t", format!("time must be positive, got {t}")))
    }
}

impl TransitionDensity {
    /// `α` in the scaling `t^{-1/α}` of the kernel.
    pub fn index(&self) -> StableIndex {
        match *self {
            TransitionDensity::Brownian => StableIndex::BROWNIAN,
            TransitionDensity::SymmetricStable { alpha } => alpha,
        }
    }

    pub fn density(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        check_time(t)?;
        let z = x - y;
        match *self {
            TransitionDensity::Brownian => Ok((-z * z / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()),
            TransitionDensity::SymmetricStable { alpha } => stable_density(alpha, t, z),
        }
    }

    /// `∂_t p_t(x, y)`: closed form for Brownian motion and the Cauchy
    /// process, central differences with step `t·1e-4` otherwise.
    pub fn time_derivative(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        check_time(t)?;
        let z = x - y;
        match *self {
            TransitionDensity::Brownian => {
                let p = self.density(t, x, y)?;
                Ok(p * (z * z / (2.0 * t * t) - 0.5 / t))
            }
            TransitionDensity::SymmetricStable { alpha } if alpha.get() == 1.0 => {
                let d = t * t + z * z;
                Ok((z * z - t * t) / (PI * d * d))
            }
            TransitionDensity::SymmetricStable { .. } => self.time_derivative_fd(t, x, y),
        }
    }

    pub fn time_derivative_fd(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        check_time(t)?;
        let h = t * 1e-4;
        Ok((self.density(t + h, x, y)? - self.density(t - h, x, y)?) / (2.0 * h))
    }

    pub fn describe(&self) -> String {
        match *self {
            TransitionDensity::Brownian => "brownian".into(),
            TransitionDensity::SymmetricStable { alpha } => format!("stable {}", alpha.get()),
        }
    }
}

/// `(t, z)` evaluation points for bound certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundGrid {
    pub points: Vec<(f64, f64)>,
}

impl BoundGrid {
    /// 20 log-spaced times in `[T/100, T]` times 201 offsets in
    /// `[-5 T^{1/α}, 5 T^{1/α}]`.
    pub fn standard(horizon: f64, alpha: StableIndex) -> Self {
        Self::product(horizon / 100.0, horizon, 20, 5.0 * horizon.powf(1.0 / alpha.get()), 201)
    }

    pub fn product(t_min: f64, t_max: f64, nt: usize, z_max: f64, nz: usize) -> Self {
        let times: Vec<f64> = if nt == 1 {
            vec![t_max]
        } else {
            let (l0, l1) = (t_min.ln(), t_max.ln());
            (0..nt)
                .map(|i| (l0 + (l1 - l0) * i as f64 / (nt - 1) as f64).exp())
                .collect()
        };
        let offsets: Vec<f64> = if nz == 1 {
            vec![0.0]
        } else {
            (0..nz)
                .map(|j| -z_max + 2.0 * z_max * j as f64 / (nz - 1) as f64)
                .collect()
        };
        let points = times
            .iter()
            .flat_map(|&t| offsets.iter().map(move |&z| (t, z)))
            .collect();
        Self { points }
    }
}

fn certify<F>(q: &MajorantQ, horizon: f64, grid: &BoundGrid, alpha: StableIndex, mut ratio: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let inv = 1.0 / alpha.get();
    let mut sup = 0.0_f64;
    for &(t, z) in &grid.points {
        if !(t > 0.0 && t <= horizon * (1.0 + 1e-12)) {
            return Err(invalid("grid", format!("time {t} outside (0, {horizon}]")));
        }
        let arg = z * t.powf(-inv);
        let qv = q.eval(arg);
        if qv <= 0.0 || !qv.is_finite() {
            return Err(Error::MajorantVanishes(arg));
        }
        sup = sup.max(ratio(t, z)? / qv);
    }
    Ok(sup)
}

/// Grid supremum of `p_t(0, z) t^{1/α} / Q(t^{-1/α} z)`: the smallest `C_T`
/// that makes the density bound hold on `grid`.
pub fn verify_density_bound(
    td: &TransitionDensity,
    q: &MajorantQ,
    alpha: StableIndex,
    horizon: f64,
    grid: &BoundGrid,
) -> Result<f64> {
    let inv = 1.0 / alpha.get();
    certify(q, horizon, grid, alpha, |t, z| Ok(td.density(t, 0.0, z)? * t.powf(inv)))
}

/// Grid supremum of `|∂_t p_t(0, z)| t^{1+1/α} / Q(t^{-1/α} z)`.
pub fn verify_derivative_bound(
    td: &TransitionDensity,
    q: &MajorantQ,
    alpha: StableIndex,
    horizon: f64,
    grid: &BoundGrid,
) -> Result<f64> {
    let inv = 1.0 / alpha.get();
    certify(q, horizon, grid, alpha, |t, z| {
        Ok(td.time_derivative(t, 0.0, z)?.abs() * t.powf(1.0 + inv))
    })
}
