//! Path samplers on a dyadic fine grid.
//!
//! Coarse observations are exact subsamples of the fine path, so the
//! integral sum and the reference integral are always computed on the same
//! realization. Each replicate draws from its own ChaCha stream keyed by
//! `(seed, replicate)`, which makes paths independent of scheduling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{StableIndex, TransitionDensity};

/// Uniform time grid `t_j = j T / N_fine`, `j = 0..=N_fine`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    horizon: f64,
    n_fine: usize,
}

impl PathGrid {
    pub fn new(horizon: f64, n_fine: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon_T", format!("must be positive, got {horizon}")));
        }
        if n_fine < 2 || !n_fine.is_power_of_two() {
            return Err(invalid("n_fine", format!("must be a power of two ≥ 2, got {n_fine}")));
        }
        Ok(Self { horizon, n_fine })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_fine as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.horizon * j as f64 / self.n_fine as f64
    }

    /// Fine-grid stride of the coarse grid with `n` intervals.
    pub fn stride(&self, n: usize) -> Result<usize> {
        if n == 0 || !self.n_fine.is_multiple_of(n) {
            return Err(Error::Divisibility {
                n,
                n_fine: self.n_fine,
            });
        }
        Ok(self.n_fine / n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: PathGrid,
    pub x0: f64,
    pub values: Vec<f64>,
}

impl SamplePath {
    /// Wraps precomputed values; `values` must hold `N_fine + 1` points
    /// starting at `x0`.
    pub fn from_values(grid: PathGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_fine() + 1 {
            return Err(invalid(
                "values",
                format!("expected {} points, got {}", grid.n_fine() + 1, values.len()),
            ));
        }
        Ok(Self {
            grid,
            x0: values[0],
            values,
        })
    }
}

/// Exact coarse observation `output[k] = X_{kT/n}`.
pub fn subsample(path: &SamplePath, n: usize) -> Result<Vec<f64>> {
    let stride = path.grid.stride(n)?;
    Ok(path.values.iter().step_by(stride).copied().collect())
}

/// The per-replicate random stream.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// One draw from the symmetric stable law with characteristic function
/// `e^{-|ξ|^α}` (Chambers–Mallows–Stuck).
pub fn cms_standard<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid("alpha", format!("stability index {alpha} outside (0, 2]")));
    }
    Ok(cms_draw(alpha, rng))
}

#[inline]
fn cms_draw<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let z: f64 = rng.sample(StandardNormal);
        return std::f64::consts::SQRT_2 * z;
    }
    let u: f64 = rng.sample(Open01);
    let u = PI * (u - 0.5);
    if alpha == 1.0 {
        return u.tan();
    }
    let e: f64 = rng.sample(Exp1);
    let (sin_au, cos_u) = ((alpha * u).sin(), u.cos());
    sin_au / cos_u.powf(1.0 / alpha) * (((1.0 - alpha) * u).cos() / e).powf((1.0 - alpha) / alpha)
}

/// Named time-homogeneous diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionPreset {
    /// `dX = -X dt + dW`
    OrnsteinUhlenbeck,
    /// `dX = sin(X) dt + (1 + cos(X)/2) dW`, uniformly elliptic and smooth.
    Elliptic,
}

impl DiffusionPreset {
    pub fn drift(self, x: f64) -> f64 {
        match self {
            DiffusionPreset::OrnsteinUhlenbeck => -x,
            DiffusionPreset::Elliptic => x.sin(),
        }
    }

    pub fn sigma(self, x: f64) -> f64 {
        match self {
            DiffusionPreset::OrnsteinUhlenbeck => 1.0,
            DiffusionPreset::Elliptic => 1.0 + 0.5 * x.cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DiffusionPreset::OrnsteinUhlenbeck => "ou",
            DiffusionPreset::Elliptic => "elliptic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Process {
    Brownian,
    Stable { alpha: StableIndex },
    Diffusion { preset: DiffusionPreset },
}

impl Process {
    /// Scaling index of the process (2 for Brownian motion and diffusions).
    pub fn index(&self) -> StableIndex {
        match *self {
            Process::Stable { alpha } => alpha,
            _ => StableIndex::BROWNIAN,
        }
    }

    /// Closed-form transition density, when one is built in.
    pub fn transition_density(&self) -> Option<TransitionDensity> {
        match *self {
            Process::Brownian => Some(TransitionDensity::Brownian),
            Process::Stable { alpha } => Some(TransitionDensity::SymmetricStable { alpha }),
            Process::Diffusion { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Process::Brownian => "brownian".into(),
            Process::Stable { alpha } => format!("stable {}", alpha.get()),
            Process::Diffusion { preset } => format!("diffusion {}", preset.name()),
        }
    }

    /// Writes a path into `out` (length `N_fine + 1`) without allocating.
    pub fn fill_path<R: Rng + ?Sized>(&self, x0: f64, grid: &PathGrid, rng: &mut R, out: &mut [f64]) -> Result<()> {
        match *self {
            Process::Brownian => {
                fill_brownian(x0, grid, rng, out);
                Ok(())
            }
            Process::Stable { alpha } => {
                fill_stable(alpha, x0, grid, rng, out);
                Ok(())
            }
            Process::Diffusion { preset } => {
                fill_euler(|x| preset.drift(x), |x| preset.sigma(x), x0, grid, rng, out)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x0: f64, grid: &PathGrid, rng: &mut R) -> Result<SamplePath> {
        let mut values = vec![0.0; grid.n_fine() + 1];
        self.fill_path(x0, grid, rng, &mut values)?;
        Ok(SamplePath {
            grid: *grid,
            x0,
            values,
        })
    }
}

fn fill_brownian<R: Rng + ?Sized>(x0: f64, grid: &PathGrid, rng: &mut R, out: &mut [f64]) {
    let sd = grid.step().sqrt();
    let mut x = x0;
    out[0] = x0;
    for slot in &mut out[1..] {
        let z: f64 = rng.sample(StandardNormal);
        x += sd * z;
        *slot = x;
    }
}

fn fill_stable<R: Rng + ?Sized>(alpha: StableIndex, x0: f64, grid: &PathGrid, rng: &mut R, out: &mut [f64]) {
    let a = alpha.get();
    let scale = grid.step().powf(1.0 / a);
    let mut x = x0;
    out[0] = x0;
    for slot in &mut out[1..] {
        x += scale * cms_draw(a, rng);
        *slot = x;
    }
}

fn fill_euler<R, D, S>(drift: D, sigma: S, x0: f64, grid: &PathGrid, rng: &mut R, out: &mut [f64]) -> Result<()>
where
    R: Rng + ?Sized,
    D: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let dt = grid.step();
    let sd = dt.sqrt();
    let mut x = x0;
    out[0] = x0;
    for (j, slot) in out[1..].iter_mut().enumerate() {
        let (b, s) = (drift(x), sigma(x));
        if !b.is_finite() || !s.is_finite() {
            return Err(Error::Simulation {
                step: j,
                reason: format!("non-finite coefficient (drift {b}, sigma {s}) at x = {x}"),
            });
        }
        let z: f64 = rng.sample(StandardNormal);
        x += b * dt + s * sd * z;
        if !x.is_finite() {
            return Err(Error::Simulation {
                step: j + 1,
                reason: "state left the finite range".into(),
            });
        }
        *slot = x;
    }
    Ok(())
}

/// Standard Brownian motion started at `x0`.
pub fn sample_brownian<R: Rng + ?Sized>(x0: f64, grid: &PathGrid, rng: &mut R) -> SamplePath {
    let mut values = vec![0.0; grid.n_fine() + 1];
    fill_brownian(x0, grid, rng, &mut values);
    SamplePath {
        grid: *grid,
        x0,
        values,
    }
}

/// Symmetric `α`-stable process; increments are `Δt^{1/α}` times exact
/// unit-time draws.
pub fn sample_stable<R: Rng + ?Sized>(alpha: StableIndex, x0: f64, grid: &PathGrid, rng: &mut R) -> SamplePath {
    let mut values = vec![0.0; grid.n_fine() + 1];
    fill_stable(alpha, x0, grid, rng, &mut values);
    SamplePath {
        grid: *grid,
        x0,
        values,
    }
}

/// Euler–Maruyama chain for `dX = drift(X) dt + sigma(X) dW` on the fine
/// grid. The caller keeps `sigma` away from zero on the visited range.
pub fn sample_diffusion_euler<R, D, S>(drift: D, sigma: S, x0: f64, grid: &PathGrid, rng: &mut R) -> Result<SamplePath>
where
    R: Rng + ?Sized,
    D: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let mut values = vec![0.0; grid.n_fine() + 1];
    fill_euler(drift, sigma, x0, grid, rng, &mut values)?;
    Ok(SamplePath {
        grid: *grid,
        x0,
        values,
    })
}
