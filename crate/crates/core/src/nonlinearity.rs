//! The averaged nonlocal functional `N`, its gradient, the energy `H`, and
//! the residual quantities driving the solvers.
//!
//! ```text
//! N(f)      = integral V(|T_r f(x)|) dx psi(r) dr
//! grad N(f) = integral T_r^{-1}[ V'(|T_r f|) T_r f / |T_r f| ] psi(r) dr
//! H(f)      = (d_av/2) ||f'||_2^2 - N(f)
//! grad H(f) = -d_av f'' - grad N(f)
//! ```
//!
//! All r-integrals run over the measure's quadrature nodes. The forward
//! transform of `f` is computed once and shared across nodes; per-node work
//! is a diagonal multiplier, an inverse transform, and the pointwise
//! nonlinearity. Reductions use a fixed pairwise tree so results are
//! bit-stable run to run.

use num_complex::Complex64;

use crate::averaging::{AveragingMeasure, QuadratureNode};
use crate::error::{Error, Result};
use crate::grid::{
    fft_in_place, inner_re, norm, pairwise_sum, second_derivative, Grid, NormKind, SpectralField,
};
use crate::potentials::{validate_assumptions, AssumptionReport, Potential};

/// Magnitudes below this are treated as exact zeros in `V'(|z|) z / |z|`;
/// valid because `gamma1 >= 2` keeps `V'(a)/a` bounded near zero.
const ZERO_MAGNITUDE_GUARD: f64 = 1e-300;

/// A fully specified variational problem on a grid.
#[derive(Debug, Clone)]
pub struct Problem {
    lambda: f64,
    d_av: f64,
    potential: Potential,
    measure: AveragingMeasure,
    grid: Grid,
}

impl Problem {
    /// Validates the structural assumptions for the requested dispersion
    /// branch before accepting the problem.
    pub fn new(
        lambda: f64,
        d_av: f64,
        potential: Potential,
        measure: AveragingMeasure,
        grid: Grid,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Problem(format!("mass lambda must be positive, got {lambda}")));
        }
        if !(d_av >= 0.0) || !d_av.is_finite() {
            return Err(Error::Problem(format!("average dispersion must be nonnegative, got {d_av}")));
        }
        let report = validate_assumptions(&potential, d_av);
        if !report.core_passed() {
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed && c.name != "a4-threshold")
                .map(|c| c.name)
                .collect();
            return Err(Error::Problem(format!(
                "potential fails assumptions {:?} for d_av = {d_av}",
                failed
            )));
        }
        Ok(Problem { lambda, d_av, potential, measure, grid })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d_av(&self) -> f64 {
        self.d_av
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn measure(&self) -> &AveragingMeasure {
        &self.measure
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[QuadratureNode] {
        self.measure.nodes()
    }

    pub fn assumption_report(&self) -> AssumptionReport {
        validate_assumptions(&self.potential, self.d_av)
    }

    /// Same problem at a different mass.
    pub fn with_lambda(&self, lambda: f64) -> Result<Problem> {
        Problem::new(lambda, self.d_av, self.potential.clone(), self.measure.clone(), self.grid.clone())
    }
}

/// Unnormalized forward spectrum of `f`, shared by the per-node loops.
fn forward_raw(f: &SpectralField) -> Vec<Complex64> {
    let mut hat = f.samples().to_vec();
    fft_in_place(&mut hat, true);
    hat
}

/// Evolved samples `T_r f` reconstructed from the shared spectrum.
fn evolved_from_raw(grid: &Grid, hat: &[Complex64], r: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = hat
        .iter()
        .zip(grid.frequencies())
        .map(|(z, xi)| z * Complex64::from_polar(1.0, -r * xi * xi))
        .collect();
    fft_in_place(&mut out, false);
    let s = 1.0 / grid.n() as f64;
    for z in &mut out {
        *z *= s;
    }
    out
}

fn pairwise_sum_spectra(mut items: Vec<Vec<Complex64>>) -> Vec<Complex64> {
    assert!(!items.is_empty());
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut iter = items.into_iter();
        while let Some(mut a) = iter.next() {
            if let Some(b) = iter.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        items = next;
    }
    items.pop().unwrap()
}

/// `N(f)`: quadrature over the measure of `dx`-sums of `V(|T_r f|)`.
pub fn n_value(f: &SpectralField, prob: &Problem) -> Result<f64> {
    let grid = f.grid();
    let dx = grid.spacing();
    let hat = forward_raw(f);
    let mut per_node = Vec::with_capacity(prob.nodes().len());
    for node in prob.nodes() {
        let u = evolved_from_raw(grid, &hat, node.r);
        let vals: Vec<f64> = u
            .iter()
            .map(|z| prob.potential().v(z.norm()))
            .collect::<Result<_>>()?;
        per_node.push(node.weight * dx * pairwise_sum(&vals));
    }
    let total = pairwise_sum(&per_node);
    if !total.is_finite() {
        return Err(Error::NonFiniteField);
    }
    Ok(total)
}

fn pointwise_nonlinearity(p: &Potential, u: &[Complex64]) -> Result<Vec<Complex64>> {
    u.iter()
        .map(|z| {
            let a = z.norm();
            if a < ZERO_MAGNITUDE_GUARD {
                Ok(Complex64::new(0.0, 0.0))
            } else {
                Ok(z * (p.v_prime(a)? / a))
            }
        })
        .collect()
}

/// Riesz representative of the directional derivative of `N` at `f`.
pub fn n_gradient(f: &SpectralField, prob: &Problem) -> Result<SpectralField> {
    let grid = f.grid();
    let hat = forward_raw(f);
    let mut node_spectra = Vec::with_capacity(prob.nodes().len());
    for node in prob.nodes() {
        let u = evolved_from_raw(grid, &hat, node.r);
        let mut p = pointwise_nonlinearity(prob.potential(), &u)?;
        fft_in_place(&mut p, true);
        // back-evolve and weight while still in frequency space
        for (z, xi) in p.iter_mut().zip(grid.frequencies()) {
            *z *= node.weight * Complex64::from_polar(1.0, node.r * xi * xi);
        }
        node_spectra.push(p);
    }
    let mut acc = pairwise_sum_spectra(node_spectra);
    fft_in_place(&mut acc, false);
    let s = 1.0 / grid.n() as f64;
    for z in &mut acc {
        *z *= s;
    }
    SpectralField::new(grid.clone(), acc)
}

/// Directional derivative `D_h N(f)`, evaluated from its defining formula
/// (no back-evolution); real-linear in `h`.
pub fn directional_derivative(f: &SpectralField, h: &SpectralField, prob: &Problem) -> Result<f64> {
    if f.grid() != h.grid() {
        return Err(Error::GridMismatch(f.grid().n(), h.grid().n()));
    }
    let grid = f.grid();
    let dx = grid.spacing();
    let fhat = forward_raw(f);
    let hhat = forward_raw(h);
    let mut per_node = Vec::with_capacity(prob.nodes().len());
    for node in prob.nodes() {
        let u = evolved_from_raw(grid, &fhat, node.r);
        let th = evolved_from_raw(grid, &hhat, node.r);
        let p = pointwise_nonlinearity(prob.potential(), &u)?;
        let terms: Vec<f64> = p
            .iter()
            .zip(&th)
            .map(|(a, b)| (a.conj() * b).re)
            .collect();
        per_node.push(node.weight * dx * pairwise_sum(&terms));
    }
    Ok(pairwise_sum(&per_node))
}

/// The energy `H(f) = (d_av/2) ||f'||_2^2 - N(f)`.
pub fn hamiltonian(f: &SpectralField, prob: &Problem) -> Result<f64> {
    let kinetic = if prob.d_av() > 0.0 {
        0.5 * prob.d_av() * norm(f, NormKind::H1SemiSq)?
    } else {
        0.0
    };
    Ok(kinetic - n_value(f, prob)?)
}

/// `grad H(f) = -d_av f'' - grad N(f)`.
pub fn h_gradient(f: &SpectralField, prob: &Problem) -> Result<SpectralField> {
    let grad_n = n_gradient(f, prob)?;
    if prob.d_av() == 0.0 {
        return Ok(grad_n.scaled(Complex64::new(-1.0, 0.0)));
    }
    let fpp = second_derivative(f);
    fpp.scaled(Complex64::new(-prob.d_av(), 0.0))
        .axpy(Complex64::new(-1.0, 0.0), &grad_n)
}

/// Project `g` onto the tangent space of the mass sphere at `f`.
pub fn project_tangent(g: &SpectralField, f: &SpectralField) -> Result<SpectralField> {
    let m = f.mass();
    if m == 0.0 {
        return Err(Error::ZeroField);
    }
    let coeff = inner_re(g, f)? / m;
    g.axpy(Complex64::new(-coeff, 0.0), f)
}

/// l2 norm of the tangential part of `grad H` at `f`; the approximate
/// criticality certificate used as the solver stopping rule.
pub fn tangential_residual(f: &SpectralField, prob: &Problem) -> Result<f64> {
    let g = h_gradient(f, prob)?;
    norm(&project_tangent(&g, f)?, NormKind::L2)
}

/// Lagrange multiplier estimate `omega = Re<grad H(f), f> / ||f||_2^2`.
pub fn multiplier_estimate(f: &SpectralField, prob: &Problem) -> Result<f64> {
    let m = f.mass();
    if m == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(inner_re(&h_gradient(f, prob)?, f)? / m)
}

/// `sup` over quadrature nodes of `||T_r f||_inf`; the amplitude cap fed to
/// `kappa_star` in the sub-additivity machinery.
pub fn linf_cap(f: &SpectralField, prob: &Problem) -> f64 {
    let grid = f.grid();
    let hat = forward_raw(f);
    prob.nodes()
        .iter()
        .map(|node| {
            evolved_from_raw(grid, &hat, node.r)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}
