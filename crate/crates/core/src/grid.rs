//! Uniform periodic grid, spectral transforms, and norms.
//!
//! All fields live on a centered box `[-L/2, L/2)` sampled at `n` points,
//! with `n` a power of two. Fourier frequencies follow the standard FFT
//! layout `xi_k = 2*pi*k/L`, `k = 0, 1, ..., n/2-1, -n/2, ..., -1`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_in_place(samples: &mut [Complex64], forward: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = if forward {
            planner.plan_fft_forward(samples.len())
        } else {
            planner.plan_fft_inverse(samples.len())
        };
        fft.process(samples);
    });
}

/// Uniform periodic spatial grid.
#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    xi: Arc<[f64]>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Build a grid with `n` samples (power of two, >= 8) on a box of the
    /// given length.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::GridLength(length));
        }
        let xi: Vec<f64> = (0..n)
            .map(|k| {
                let ks = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
                2.0 * std::f64::consts::PI * ks as f64 / length
            })
            .collect();
        Ok(Grid { n, length, xi: xi.into() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Sample spacing `dx = L/n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Position of the j-th sample, `x_j = -L/2 + j*dx`.
    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    /// Frequencies in FFT layout.
    pub fn frequencies(&self) -> &[f64] {
        &self.xi
    }

    /// Index of the Nyquist mode.
    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Grid with the same spacing and `factor` times the extent; the original
    /// box sits centered inside the new one.
    pub fn zero_padded(&self, factor: usize) -> Result<Grid> {
        Grid::new(self.n * factor, self.length * factor as f64)
    }
}

/// Complex field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::GridMismatch(samples.len(), grid.n()));
        }
        if !samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFiniteField);
        }
        Ok(SpectralField { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n();
        SpectralField { grid, samples: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Sample a function of position onto the grid.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        SpectralField { grid, samples }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, c: Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    /// `self + c * other`; both fields must share a grid.
    pub fn axpy(&self, c: Complex64, other: &SpectralField) -> Result<SpectralField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.n(), other.grid.n()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(SpectralField { grid: self.grid.clone(), samples })
    }

    /// `dx * sum |f_j|^2`.
    pub fn mass(&self) -> f64 {
        let dx = self.grid.spacing();
        dx * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Largest boundary magnitude relative to the peak; detects fields that
    /// are not well contained in the periodic box.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.samples.len();
        let edge = self.samples[..2]
            .iter()
            .chain(&self.samples[n - 2..])
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        edge / peak
    }

    /// Translate by a whole number of grid cells (exact permutation).
    pub fn shifted_cells(&self, cells: i64) -> SpectralField {
        let n = self.samples.len() as i64;
        let samples = (0..n)
            .map(|j| self.samples[(j - cells).rem_euclid(n) as usize])
            .collect();
        SpectralField { grid: self.grid.clone(), samples }
    }

    /// Multiply by the plane wave `exp(i*xi*x)`; `xi` should be a grid
    /// frequency for the modulation to be exactly representable.
    pub fn modulated(&self, xi: f64) -> SpectralField {
        let grid = self.grid.clone();
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, z)| z * Complex64::from_polar(1.0, xi * grid.x(j)))
            .collect();
        SpectralField { grid, samples }
    }

    /// Embed into a grid `factor` times wider, padding with zeros.
    pub fn zero_padded(&self, factor: usize) -> Result<SpectralField> {
        let grid = self.grid.zero_padded(factor)?;
        let big_n = grid.n();
        let offset = (big_n - self.grid.n()) / 2;
        let mut samples = vec![Complex64::new(0.0, 0.0); big_n];
        samples[offset..offset + self.grid.n()].copy_from_slice(&self.samples);
        Ok(SpectralField { grid, samples })
    }
}

/// Complex inner product `dx * sum conj(f_j) g_j`.
pub fn inner(f: &SpectralField, g: &SpectralField) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch(f.grid.n(), g.grid.n()));
    }
    let dx = f.grid.spacing();
    Ok(dx
        * f.samples
            .iter()
            .zip(&g.samples)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>())
}

/// Real inner product of the underlying real Hilbert space.
pub fn inner_re(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    Ok(inner(f, g)?.re)
}

/// Unitary forward transform; preserves the l2 norm exactly.
pub fn transform(f: &SpectralField) -> SpectralField {
    let mut samples = f.samples.clone();
    fft_in_place(&mut samples, true);
    let s = 1.0 / (samples.len() as f64).sqrt();
    for z in &mut samples {
        *z *= s;
    }
    SpectralField { grid: f.grid.clone(), samples }
}

/// Inverse of [`transform`].
pub fn inverse_transform(f: &SpectralField) -> SpectralField {
    let mut samples = f.samples.clone();
    fft_in_place(&mut samples, false);
    let s = 1.0 / (samples.len() as f64).sqrt();
    for z in &mut samples {
        *z *= s;
    }
    SpectralField { grid: f.grid.clone(), samples }
}

/// Apply a frequency multiplier `m(xi)`; the Nyquist mode is zeroed when
/// `zero_nyquist` is set (derivative hygiene for real fields).
pub(crate) fn apply_multiplier(
    f: &SpectralField,
    zero_nyquist: bool,
    m: impl Fn(f64) -> Complex64,
) -> SpectralField {
    let mut samples = f.samples.clone();
    fft_in_place(&mut samples, true);
    for (k, z) in samples.iter_mut().enumerate() {
        *z *= m(f.grid.xi[k]);
    }
    if zero_nyquist {
        samples[f.grid.nyquist_index()] = Complex64::new(0.0, 0.0);
    }
    fft_in_place(&mut samples, false);
    let s = 1.0 / f.grid.n() as f64;
    for z in &mut samples {
        *z *= s;
    }
    SpectralField { grid: f.grid.clone(), samples }
}

/// Spectral derivative `f'`.
pub fn derivative(f: &SpectralField) -> SpectralField {
    apply_multiplier(f, true, |xi| Complex64::new(0.0, xi))
}

/// Spectral second derivative `f''`. The `-xi^2` multiplier is real and
/// even, so the Nyquist mode poses no reality hazard and is kept; this makes
/// the pair (`H1SemiSq`, `second_derivative`) an exact gradient pair.
pub fn second_derivative(f: &SpectralField) -> SpectralField {
    apply_multiplier(f, false, |xi| Complex64::new(-xi * xi, 0.0))
}

/// Norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    L2Sq,
    Lp(f64),
    LInf,
    /// `||f'||_2^2`, computed spectrally.
    H1SemiSq,
}

pub fn norm(f: &SpectralField, kind: NormKind) -> Result<f64> {
    let dx = f.grid.spacing();
    match kind {
        NormKind::L2 => Ok(f.mass().sqrt()),
        NormKind::L2Sq => Ok(f.mass()),
        NormKind::Lp(p) => {
            if !(p >= 1.0) {
                return Err(Error::NormOrder(p));
            }
            let s: f64 = f.samples.iter().map(|z| z.norm().powf(p)).sum();
            Ok((dx * s).powf(1.0 / p))
        }
        NormKind::LInf => Ok(f.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)),
        NormKind::H1SemiSq => {
            let hat = transform(f);
            Ok(dx
                * hat
                    .samples
                    .iter()
                    .zip(f.grid.frequencies())
                    .map(|(z, xi)| xi * xi * z.norm_sqr())
                    .sum::<f64>())
        }
    }
}

/// Check the one-dimensional Sobolev bound `||f||_inf^2 <= ||f||_2 ||f'||_2`.
///
/// The bound is a whole-line statement; constant (non-decaying) fields on the
/// periodic box may legitimately fail it and are the caller's responsibility.
pub fn sobolev_linf_check(f: &SpectralField) -> Result<bool> {
    if f.mass() == 0.0 {
        return Err(Error::ZeroField);
    }
    let linf = norm(f, NormKind::LInf)?;
    let l2 = norm(f, NormKind::L2)?;
    let h1 = norm(f, NormKind::H1SemiSq)?.sqrt();
    Ok(linf * linf <= l2 * h1 * (1.0 + 1e-9))
}

/// Numerically stable pairwise summation; the reduction tree is a pure
/// function of the slice length, making accumulation order deterministic.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
