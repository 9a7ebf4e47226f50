//! The averaging measure `psi(r) dr`: construction from periodic dispersion
//! profiles, Lp norms, and quadrature for the nonlocal r-integral.
//!
//! Only piecewise-constant dispersion profiles are supported, so every
//! density here is piecewise constant with compact support. The pushforward
//! of normalized time under the accumulated dispersion `D(t)` assigns each
//! linear piece of `D` the weight `1/(L |slope|)` on its range.

use crate::error::{Error, Result};

/// Gauss-Legendre rule on [-1, 1] via Newton iteration on the Legendre
/// recurrence.
pub(crate) fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_m(x) and P_m'(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// One quadrature node of the r-integral; the weight already includes the
/// density value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureNode {
    pub r: f64,
    pub weight: f64,
}

/// A maximal interval on which the density is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    UniformInterval,
    FromProfile,
    Tabulated,
}

/// Piecewise-constant periodic dispersion profile `d_0`.
#[derive(Debug, Clone)]
pub struct DispersionProfile {
    pieces: Vec<(f64, f64)>,
}

impl DispersionProfile {
    /// `pieces` is a list of `(value, duration)` pairs covering one period.
    /// The profile must have mean zero and no vanishing piece.
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Measure("dispersion profile needs at least one piece".into()));
        }
        let mut mean = 0.0;
        let mut scale = 0.0;
        for &(v, t) in &pieces {
            if !(t > 0.0) || !t.is_finite() || !v.is_finite() {
                return Err(Error::Measure(format!("bad profile piece (value {v}, duration {t})")));
            }
            if v == 0.0 {
                return Err(Error::Measure(
                    "profile pieces with d0 = 0 produce a singular density and are not supported".into(),
                ));
            }
            mean += v * t;
            scale += v.abs() * t;
        }
        if mean.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::Measure(format!("profile is not mean-zero: integral = {mean}")));
        }
        Ok(DispersionProfile { pieces })
    }

    pub fn period(&self) -> f64 {
        self.pieces.iter().map(|p| p.1).sum()
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    /// Accumulated dispersion `D` at the piece boundaries, starting at 0.
    pub fn accumulated(&self) -> Vec<f64> {
        let mut d = vec![0.0];
        for &(v, t) in &self.pieces {
            d.push(d.last().unwrap() + v * t);
        }
        d
    }
}

/// Compactly supported piecewise-constant averaging density.
#[derive(Debug, Clone)]
pub struct AveragingMeasure {
    kind: MeasureKind,
    pieces: Vec<DensityPiece>,
    total: f64,
    nodes_per_piece: usize,
    nodes: Vec<QuadratureNode>,
}

pub const DEFAULT_NODES_PER_PIECE: usize = 32;

impl AveragingMeasure {
    fn build(kind: MeasureKind, pieces: Vec<DensityPiece>, nodes_per_piece: usize) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Measure("density has no pieces".into()));
        }
        for p in &pieces {
            if !(p.lo < p.hi) || !(p.value >= 0.0) || !p.value.is_finite() {
                return Err(Error::Measure(format!("bad density piece {p:?}")));
            }
        }
        if pieces.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(Error::Measure("density pieces overlap".into()));
        }
        if nodes_per_piece < 2 {
            return Err(Error::Measure(format!("need at least 2 quadrature nodes per piece, got {nodes_per_piece}")));
        }
        let total = pieces.iter().map(|p| p.value * (p.hi - p.lo)).sum();
        let (gl_x, gl_w) = gauss_legendre(nodes_per_piece);
        let mut nodes = Vec::with_capacity(pieces.len() * nodes_per_piece);
        for p in &pieces {
            let mid = 0.5 * (p.lo + p.hi);
            let half = 0.5 * (p.hi - p.lo);
            for (x, w) in gl_x.iter().zip(&gl_w) {
                nodes.push(QuadratureNode { r: mid + half * x, weight: w * half * p.value });
            }
        }
        Ok(AveragingMeasure { kind, pieces, total, nodes_per_piece, nodes })
    }

    /// Normalized indicator density on `[r0, r1]`.
    pub fn uniform(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 < r1) || !r0.is_finite() || !r1.is_finite() {
            return Err(Error::Measure(format!("need r0 < r1, got [{r0}, {r1}]")));
        }
        let value = 1.0 / (r1 - r0);
        Self::build(
            MeasureKind::UniformInterval,
            vec![DensityPiece { lo: r0, hi: r1, value }],
            DEFAULT_NODES_PER_PIECE,
        )
    }

    /// Pushforward of normalized time under the accumulated dispersion of a
    /// piecewise-constant profile.
    pub fn from_profile(profile: &DispersionProfile) -> Result<Self> {
        let period = profile.period();
        let d = profile.accumulated();
        // each linear piece of D deposits 1/(L |slope|) on its range
        let mut cuts: Vec<f64> = d.clone();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (a.abs() + b.abs()).max(1e-14));
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let mut value = 0.0;
            for (i, &(slope, _)) in profile.pieces().iter().enumerate() {
                let (a, b) = (d[i].min(d[i + 1]), d[i].max(d[i + 1]));
                if a < mid && mid < b {
                    value += 1.0 / (period * slope.abs());
                }
            }
            if value > 0.0 {
                pieces.push(DensityPiece { lo, hi, value });
            }
        }
        // merge adjacent pieces with equal density
        let mut merged: Vec<DensityPiece> = Vec::new();
        for p in pieces {
            match merged.last_mut() {
                Some(last)
                    if (last.value - p.value).abs() <= 1e-12 * last.value.max(1e-300)
                        && (last.hi - p.lo).abs() <= 1e-12 =>
                {
                    last.hi = p.hi;
                }
                _ => merged.push(p),
            }
        }
        Self::build(MeasureKind::FromProfile, merged, DEFAULT_NODES_PER_PIECE)
    }

    /// Explicit piecewise-constant density table.
    pub fn tabulated(pieces: Vec<DensityPiece>) -> Result<Self> {
        Self::build(MeasureKind::Tabulated, pieces, DEFAULT_NODES_PER_PIECE)
    }

    /// Rebuild with a different quadrature resolution.
    pub fn with_nodes_per_piece(&self, m: usize) -> Result<Self> {
        Self::build(self.kind, self.pieces.clone(), m)
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn nodes_per_piece(&self) -> usize {
        self.nodes_per_piece
    }

    /// Quadrature nodes, weights including the density.
    pub fn nodes(&self) -> &[QuadratureNode] {
        &self.nodes
    }

    /// `integral psi dr`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Whether the measure is normalized to a probability measure (1e-10).
    pub fn is_probability(&self) -> bool {
        (self.total - 1.0).abs() <= 1e-10
    }

    pub fn support(&self) -> (f64, f64) {
        (self.pieces.first().unwrap().lo, self.pieces.last().unwrap().hi)
    }

    /// Point evaluation of the density.
    pub fn psi(&self, r: f64) -> f64 {
        for p in &self.pieces {
            if p.lo <= r && r < p.hi {
                return p.value;
            }
        }
        // closed right endpoint of the support
        if let Some(last) = self.pieces.last() {
            if r == last.hi {
                return last.value;
            }
        }
        0.0
    }

    /// `(integral psi^p dr)^{1/p}`; exact for the piecewise-constant class.
    pub fn density_lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::NormOrder(p));
        }
        let s: f64 = self.pieces.iter().map(|q| q.value.powf(p) * (q.hi - q.lo)).sum();
        Ok(s.powf(1.0 / p))
    }

    /// Integrate a function against the measure with the stored rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().map(|n| n.weight * f(n.r)).collect();
        crate::grid::pairwise_sum(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_model_case() {
        let m = AveragingMeasure::uniform(0.0, 1.0).unwrap();
        assert_eq!(m.psi(0.5), 1.0);
        assert_eq!(m.psi(1.2), 0.0);
        assert!((m.total() - 1.0).abs() < 1e-15);
        assert!(m.is_probability());
        let m2 = AveragingMeasure::uniform(0.0, 2.0).unwrap();
        assert_eq!(m2.psi(1.5), 0.5);
        assert!(AveragingMeasure::uniform(1.0, 0.0).is_err());
    }

    #[test]
    fn quadrature_weights_and_moments() {
        let m = AveragingMeasure::uniform(0.0, 1.0).unwrap();
        let wsum: f64 = m.nodes().iter().map(|n| n.weight).sum();
        assert!((wsum - m.total()).abs() < 1e-10);
        assert!((m.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!((m.integrate(|r| r) - 0.5).abs() < 1e-14);
        let m2 = AveragingMeasure::uniform(0.0, 2.0).unwrap();
        // second moment of the uniform density on [0,2]: 0.5 * 8/3
        assert!((m2.integrate(|r| r * r) - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn quadrature_polynomial_exactness() {
        // degree 2k-1 exactness per piece
        let m = AveragingMeasure::uniform(0.0, 1.0).unwrap().with_nodes_per_piece(8).unwrap();
        for k in 0..=15u32 {
            let val = m.integrate(|r| r.powi(k as i32));
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((val - exact).abs() < 1e-12, "k={k}: {val} vs {exact}");
        }
    }

    #[test]
    fn pushforward_model_profile() {
        // d0 = +1 on [0,1), -1 on [1,2) gives psi = 1 on [0,1]
        let prof = DispersionProfile::new(vec![(1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let m = AveragingMeasure::from_profile(&prof).unwrap();
        assert_eq!(m.pieces().len(), 1);
        assert!((m.psi(0.3) - 1.0).abs() < 1e-14);
        assert_eq!(m.support(), (0.0, 1.0));
        assert!(m.is_probability());
    }

    #[test]
    fn pushforward_scaled_profile() {
        // d0 = +-2: D sweeps [0,2] at slope 2, psi = 0.5 there
        let prof = DispersionProfile::new(vec![(2.0, 1.0), (-2.0, 1.0)]).unwrap();
        let m = AveragingMeasure::from_profile(&prof).unwrap();
        assert!((m.psi(1.0) - 0.5).abs() < 1e-14);
        assert_eq!(m.support(), (0.0, 2.0));
    }

    #[test]
    fn pushforward_asymmetric_profile() {
        // +1 for 2 units, -2 for 1 unit: psi = (1/3)(1 + 1/2) = 0.5 on [0,2]
        let prof = DispersionProfile::new(vec![(1.0, 2.0), (-2.0, 1.0)]).unwrap();
        let m = AveragingMeasure::from_profile(&prof).unwrap();
        assert_eq!(m.pieces().len(), 1);
        assert!((m.psi(1.0) - 0.5).abs() < 1e-14);
        assert_eq!(m.support(), (0.0, 2.0));
        assert!(m.is_probability());
    }

    #[test]
    fn profile_validation() {
        assert!(DispersionProfile::new(vec![(1.0, 1.0)]).is_err()); // not mean zero
        assert!(DispersionProfile::new(vec![(0.0, 1.0), (0.0, 1.0)]).is_err()); // singular
        assert!(DispersionProfile::new(vec![(1.0, -1.0), (-1.0, 1.0)]).is_err());
        assert!(DispersionProfile::new(vec![]).is_err());
    }

    #[test]
    fn lp_norms() {
        let m = AveragingMeasure::uniform(0.0, 1.0).unwrap();
        for p in [1.0, 2.0, 4.0, 7.5] {
            assert!((m.density_lp_norm(p).unwrap() - 1.0).abs() < 1e-14);
        }
        let m2 = AveragingMeasure::uniform(0.0, 2.0).unwrap();
        assert!((m2.density_lp_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        let prof = DispersionProfile::new(vec![(1.0, 2.0), (-2.0, 1.0)]).unwrap();
        let mp = AveragingMeasure::from_profile(&prof).unwrap();
        let expect = (2.0 * 0.5f64.powi(4)).powf(0.25);
        assert!((mp.density_lp_norm(4.0).unwrap() - expect).abs() < 1e-14);
        assert!(m.density_lp_norm(0.5).is_err());
    }

    #[test]
    fn pushforward_consistency_with_time_average() {
        // integral of phi(D(t)) dt / L == integral phi(r) psi(r) dr
        let prof = DispersionProfile::new(vec![(1.5, 1.0), (-0.5, 2.0), (-1.0, 0.5)]).unwrap();
        let m = AveragingMeasure::from_profile(&prof).unwrap().with_nodes_per_piece(48).unwrap();
        let phi = |r: f64| (1.3 * r).cos() + 0.25 * r * r;
        let rhs = m.integrate(phi);
        // time side: D is linear on each piece, integrate with a fine rule
        let (gl_x, gl_w) = super::gauss_legendre(48);
        let d = prof.accumulated();
        let mut t_integral = 0.0;
        for (i, &(slope, dur)) in prof.pieces().iter().enumerate() {
            for (x, w) in gl_x.iter().zip(&gl_w) {
                let tau = 0.5 * dur * (x + 1.0);
                t_integral += w * 0.5 * dur * phi(d[i] + slope * tau);
            }
        }
        let lhs = t_integral / prof.period();
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn tabulated_non_probability_is_allowed() {
        let m = AveragingMeasure::tabulated(vec![
            DensityPiece { lo: 0.0, hi: 1.0, value: 2.0 },
            DensityPiece { lo: 1.5, hi: 2.0, value: 1.0 },
        ])
        .unwrap();
        assert!((m.total() - 2.5).abs() < 1e-14);
        assert!(!m.is_probability());
        assert_eq!(m.psi(1.2), 0.0); // gap
        assert!(AveragingMeasure::tabulated(vec![
            DensityPiece { lo: 0.0, hi: 1.0, value: -1.0 },
        ])
        .is_err());
    }

    #[test]
    fn gauss_legendre_rule_sanity() {
        let (x, w) = super::gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        // integrate x^8 on [-1,1]: rule of 5 is exact to degree 9
        let val: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((val - 2.0 / 9.0).abs() < 1e-14);
    }
}
