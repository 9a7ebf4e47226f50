//! Nonlinearity potentials `V` and their structural quantities.
//!
//! Every potential here satisfies `V(0) = 0`, `V >= 0`, and the
//! super-quadraticity condition `V'(a) a >= kappa(a) V(a)` with
//! `kappa(a) = V'(a) a / V(a)` implemented as the sharp ratio, so the
//! condition holds by construction wherever `V > 0`. Saturation means
//! `kappa(a) -> 2` as `a -> infinity`; `kappa_star(C) = inf_{0<a<=C} kappa(a)`
//! stays strictly above 2 on bounded amplitude ranges, which is what the
//! sub-additivity machinery feeds on.

use crate::error::{Error, Result};

/// Sum the series for `u - log(1+u)` when `u` is small; the direct
/// expression loses half the mantissa below `u ~ 1e-8`.
fn u_minus_log1p(u: f64) -> f64 {
    if u > 1e-2 {
        return u - u.ln_1p();
    }
    // u^2/2 - u^3/3 + u^4/4 - ...
    let mut sum = 0.0;
    let mut p = u * u;
    let mut sign = 1.0;
    let mut m = 2.0;
    loop {
        let t = sign * p / m;
        sum += t;
        if t.abs() < 1e-22 * sum.abs().max(1e-300) || m > 60.0 {
            break;
        }
        p *= u;
        sign = -sign;
        m += 1.0;
    }
    sum
}

/// Piecewise cubic Hermite table for user-supplied potentials. Slopes are
/// limited Fritsch-Carlson style so the interpolant is monotone wherever the
/// data are.
#[derive(Debug, Clone)]
pub struct TabulatedPotential {
    a: Vec<f64>,
    v: Vec<f64>,
    vp: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(a: Vec<f64>, v: Vec<f64>, vp: Vec<f64>) -> Result<Self> {
        if a.len() < 2 || a.len() != v.len() || a.len() != vp.len() {
            return Err(Error::Potential("tabulated potential needs matching a/V/V' arrays of length >= 2".into()));
        }
        if a[0] != 0.0 || v[0] != 0.0 {
            return Err(Error::Potential("tabulated potential must start at a = 0 with V(0) = 0".into()));
        }
        if a.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Potential("tabulated abscissae must be strictly increasing".into()));
        }
        let mut vp = vp;
        // monotonicity limiter per interval
        for i in 0..a.len() - 1 {
            let h = a[i + 1] - a[i];
            let delta = (v[i + 1] - v[i]) / h;
            if delta == 0.0 {
                vp[i] = 0.0;
                vp[i + 1] = 0.0;
            } else {
                for s in [i, i + 1] {
                    if vp[s] / delta < 0.0 {
                        vp[s] = 0.0;
                    } else if (vp[s] / delta).abs() > 3.0 {
                        vp[s] = 3.0 * delta;
                    }
                }
            }
        }
        Ok(TabulatedPotential { a, v, vp })
    }

    pub fn max_a(&self) -> f64 {
        *self.a.last().unwrap()
    }

    fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=self.max_a()).contains(&x) {
            return Err(Error::Potential(format!(
                "tabulated potential evaluated outside range [0, {}]: {x}",
                self.max_a()
            )));
        }
        let i = self.a.partition_point(|&t| t <= x);
        Ok(i.saturating_sub(1).min(self.a.len() - 2))
    }

    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let i = self.locate(x)?;
        let h = self.a[i + 1] - self.a[i];
        let t = (x - self.a[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        let v = h00 * self.v[i] + h * h10 * self.vp[i] + h01 * self.v[i + 1] + h * h11 * self.vp[i + 1];
        let (d00, d10, d01, d11) = (
            6.0 * t * t - 6.0 * t,
            3.0 * t * t - 4.0 * t + 1.0,
            6.0 * t - 6.0 * t * t,
            3.0 * t * t - 2.0 * t,
        );
        let vp = (d00 * self.v[i] + h * d10 * self.vp[i] + d01 * self.v[i + 1] + h * d11 * self.vp[i + 1]) / h;
        Ok((v, vp))
    }
}

/// The potential family.
#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// `V(a) = a^gamma / gamma`.
    Power { gamma: f64 },
    /// `V(a) = a^2/(2 sigma) - log(1 + sigma a^2)/(2 sigma^2)`, the
    /// refractive-index saturation law with `V'(a) = a^3/(1 + sigma a^2)`.
    SaturatedLog { sigma: f64 },
    /// `V(a) = a^4/(1 + sigma a^2)`.
    SaturatedRational { sigma: f64 },
    /// User-supplied table.
    Tabulated(TabulatedPotential),
}

/// A nonlinearity potential with its growth/threshold metadata.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    gamma1: f64,
    gamma2: f64,
    gamma0: f64,
    a_star: f64,
}

impl Potential {
    pub fn power(gamma: f64) -> Result<Self> {
        if !(gamma >= 2.0) || !gamma.is_finite() {
            return Err(Error::Potential(format!("power exponent must satisfy gamma >= 2, got {gamma}")));
        }
        Ok(Potential { kind: PotentialKind::Power { gamma }, gamma1: gamma, gamma2: gamma, gamma0: gamma, a_star: 1.0 })
    }

    pub fn saturated_log(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Potential(format!("saturation parameter must be positive, got {sigma}")));
        }
        // V ~ a^4/4 near zero, V ~ a^2/(2 sigma) at infinity; |V'| <= a^3
        Ok(Potential { kind: PotentialKind::SaturatedLog { sigma }, gamma1: 4.0, gamma2: 4.0, gamma0: 4.0, a_star: 1.0 })
    }

    pub fn saturated_rational(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Potential(format!("saturation parameter must be positive, got {sigma}")));
        }
        Ok(Potential { kind: PotentialKind::SaturatedRational { sigma }, gamma1: 4.0, gamma2: 4.0, gamma0: 4.0, a_star: 1.0 })
    }

    pub fn tabulated(table: TabulatedPotential, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(2.0 <= gamma1 && gamma1 <= gamma2) || !gamma2.is_finite() {
            return Err(Error::Potential(format!("growth exponents must satisfy 2 <= gamma1 <= gamma2, got {gamma1}, {gamma2}")));
        }
        let a_star = table.max_a() / 2.0;
        Ok(Potential { kind: PotentialKind::Tabulated(table), gamma1, gamma2, gamma0: gamma1, a_star })
    }

    pub fn with_a_star(mut self, a_star: f64) -> Result<Self> {
        if !(a_star > 0.0) {
            return Err(Error::Potential(format!("a_star must be positive, got {a_star}")));
        }
        self.a_star = a_star;
        Ok(self)
    }

    pub fn with_gamma0(mut self, gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0) {
            return Err(Error::Potential(format!("gamma0 must be positive, got {gamma0}")));
        }
        self.gamma0 = gamma0;
        Ok(self)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn a_star(&self) -> f64 {
        self.a_star
    }

    /// Evaluate `V(a)`, `a >= 0`.
    pub fn v(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Potential(format!("amplitude must be nonnegative, got {a}")));
        }
        Ok(match &self.kind {
            PotentialKind::Power { gamma } => a.powf(*gamma) / gamma,
            PotentialKind::SaturatedLog { sigma } => u_minus_log1p(sigma * a * a) / (2.0 * sigma * sigma),
            PotentialKind::SaturatedRational { sigma } => a.powi(4) / (1.0 + sigma * a * a),
            PotentialKind::Tabulated(t) => t.eval(a)?.0,
        })
    }

    /// Evaluate `V'(a)`, `a >= 0`.
    pub fn v_prime(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Potential(format!("amplitude must be nonnegative, got {a}")));
        }
        Ok(match &self.kind {
            PotentialKind::Power { gamma } => a.powf(gamma - 1.0),
            PotentialKind::SaturatedLog { sigma } => a.powi(3) / (1.0 + sigma * a * a),
            PotentialKind::SaturatedRational { sigma } => {
                let d = 1.0 + sigma * a * a;
                a.powi(3) * (4.0 + 2.0 * sigma * a * a) / (d * d)
            }
            PotentialKind::Tabulated(t) => t.eval(a)?.1,
        })
    }

    /// The sharp super-quadraticity ratio `kappa(a) = V'(a) a / V(a)`.
    /// Undefined where `V(a) = 0`.
    pub fn kappa(&self, a: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(Error::Potential(format!("kappa needs a > 0, got {a}")));
        }
        let v = self.v(a)?;
        if v <= 0.0 {
            return Err(Error::Potential(format!("kappa undefined at a = {a}: V(a) = {v}")));
        }
        Ok(self.v_prime(a)? * a / v)
    }

    /// Analytic `a -> 0` limit of `kappa`, where known.
    pub fn kappa_zero_limit(&self) -> Option<f64> {
        match &self.kind {
            PotentialKind::Power { gamma } => Some(*gamma),
            PotentialKind::SaturatedLog { .. } | PotentialKind::SaturatedRational { .. } => Some(4.0),
            PotentialKind::Tabulated(_) => None,
        }
    }

    /// `kappa_star(C) = inf_{0 < a <= C} kappa(a)`, evaluated on a log grid
    /// of 512 points over `[1e-8 C, C]` together with the analytic zero
    /// limit for the built-in kinds.
    pub fn kappa_star(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Potential(format!("kappa_star needs C > 0, got {c}")));
        }
        let mut inf = self.kappa_zero_limit().unwrap_or(f64::INFINITY);
        let lo: f64 = 1e-8 * c;
        let m = 512;
        for i in 0..m {
            let a = lo * (c / lo).powf(i as f64 / (m - 1) as f64);
            // skip points where V vanishes (tabulated adversarial cases)
            if let Ok(k) = self.kappa(a) {
                inf = inf.min(k);
            }
        }
        if inf.is_finite() {
            Ok(inf)
        } else {
            Err(Error::Potential("kappa undefined on the whole sample".into()))
        }
    }

    /// Check the scaling inequality `V(s a) <= s^{kappa_star(A)} V(a)` for
    /// `0 < s <= 1`, `0 < a <= A`.
    pub fn scaling_inequality_check(&self, s: f64, a: f64, a_cap: f64) -> Result<bool> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Potential(format!("scaling factor must lie in (0, 1], got {s}")));
        }
        if !(a > 0.0 && a <= a_cap) {
            return Err(Error::Potential(format!("need 0 < a <= A, got a = {a}, A = {a_cap}")));
        }
        let lhs = self.v(s * a)?;
        let rhs = s.powf(self.kappa_star(a_cap)?) * self.v(a)?;
        Ok(lhs <= rhs * (1.0 + 1e-9) + 1e-300)
    }

    /// Check the quadratic lower bound
    /// `V(a) >= (a/a_star)^2 V(a_star)` for `a >= a_star` (trivial below).
    pub fn lower_bound_check(&self, a: f64) -> Result<bool> {
        if !(a > 0.0) {
            return Err(Error::Potential(format!("lower bound check needs a > 0, got {a}")));
        }
        let rhs = if a >= self.a_star {
            (a / self.a_star).powi(2) * self.v(self.a_star)?
        } else {
            0.0
        };
        Ok(self.v(a)? >= rhs * (1.0 - 1e-9) - 1e-300)
    }
}

/// One assumption check inside an [`AssumptionReport`].
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Empirical validation of the structural assumptions for a given average
/// dispersion branch.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub d_av_positive: bool,
    pub checks: Vec<AssumptionCheck>,
    /// Exponent `p` such that `psi in L^{p + delta}` is required by the
    /// matching existence theorem (delta -> 0 baseline).
    pub required_psi_exponent: f64,
    /// Largest observed `|V'(a)| / (a^{gamma1 - 1} + a^{gamma2 - 1})`.
    pub a1_empirical_constant: f64,
}

impl AssumptionReport {
    /// A1 growth, exponent ranges, A2, and A3 all hold.
    pub fn core_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.name != "a4-threshold").all(|c| c.passed)
    }

    /// The zero-threshold assumption A4 holds as well.
    pub fn a4_passed(&self) -> bool {
        self.checks.iter().find(|c| c.name == "a4-threshold").map(|c| c.passed).unwrap_or(false)
    }
}

fn log_grid(lo: f64, hi: f64, m: usize) -> impl Iterator<Item = f64> {
    let ratio = hi / lo;
    (0..m).map(move |i| lo * ratio.powf(i as f64 / (m - 1) as f64))
}

/// Validate A1-A4 empirically for the requested dispersion branch and report
/// the psi-integrability exponent demanded by the corresponding theorem.
pub fn validate_assumptions(p: &Potential, d_av: f64) -> AssumptionReport {
    let positive = d_av > 0.0;
    let mut checks = Vec::new();
    let (g1, g2) = (p.gamma1(), p.gamma2());

    let range_ok = if positive {
        (2.0..10.0).contains(&g1) && g1 <= g2 && g2 < 10.0
    } else {
        (3.0..5.0).contains(&g1) && g1 <= g2 && g2 < 5.0
    };
    checks.push(AssumptionCheck {
        name: "exponent-range",
        passed: range_ok,
        detail: if positive {
            format!("need 2 <= {g1} <= {g2} < 10")
        } else {
            format!("need 3 <= {g1} <= {g2} < 5")
        },
    });

    let sample_hi = match p.kind() {
        PotentialKind::Tabulated(t) => t.max_a(),
        _ => 1e6,
    };
    let mut a1_const: f64 = 0.0;
    let mut a1_ok = true;
    for a in log_grid(1e-6, sample_hi, 241) {
        match p.v_prime(a) {
            Ok(vp) => {
                let ratio = vp.abs() / (a.powf(g1 - 1.0) + a.powf(g2 - 1.0));
                if !ratio.is_finite() {
                    a1_ok = false;
                }
                a1_const = a1_const.max(ratio);
            }
            Err(_) => a1_ok = false,
        }
    }
    checks.push(AssumptionCheck {
        name: "a1-growth",
        passed: a1_ok && a1_const.is_finite(),
        detail: format!("empirical constant {a1_const:.6e} (reported, not thresholded)"),
    });

    let mut kappa_min = f64::INFINITY;
    let mut a2_defined = false;
    for a in log_grid(1e-6, sample_hi, 241) {
        if let Ok(k) = p.kappa(a) {
            kappa_min = kappa_min.min(k);
            a2_defined = true;
        }
    }
    let a2_ok = a2_defined && kappa_min > 2.0;
    checks.push(AssumptionCheck {
        name: "a2-superquadratic",
        passed: a2_ok,
        detail: format!("min sampled kappa = {kappa_min:.12}"),
    });

    let a3_ok = p.v(p.a_star()).map(|v| v > 0.0).unwrap_or(false);
    checks.push(AssumptionCheck {
        name: "a3-positivity",
        passed: a3_ok,
        detail: format!("V(a_star = {}) > 0", p.a_star()),
    });

    let a4 = if positive {
        let g0 = p.gamma0();
        let range = 2.0 < g0 && g0 < 6.0;
        let mut cmin = f64::INFINITY;
        for a in log_grid(1e-6, 1e-2, 65) {
            match p.v(a) {
                Ok(v) => cmin = cmin.min(v / a.powf(g0)),
                Err(_) => cmin = 0.0,
            }
        }
        AssumptionCheck {
            name: "a4-threshold",
            passed: range && cmin > 0.0,
            detail: format!("gamma0 = {g0} in (2,6): {range}; inf V(a)/a^gamma0 near 0 = {cmin:.3e}"),
        }
    } else {
        let mut positive_near_zero = true;
        for a in log_grid(1e-6, 1e-2, 65) {
            if p.v(a).map(|v| v <= 0.0).unwrap_or(true) {
                positive_near_zero = false;
            }
        }
        AssumptionCheck {
            name: "a4-threshold",
            passed: positive_near_zero,
            detail: "V > 0 on (0, 1e-2] sampled".into(),
        }
    };
    checks.push(a4);

    let required_psi_exponent = if positive {
        (4.0 / (10.0 - g2)).max(1.0)
    } else if g2 < 5.0 {
        4.0 / (5.0 - g2)
    } else {
        f64::INFINITY
    };

    AssumptionReport { d_av_positive: positive, checks, required_psi_exponent, a1_empirical_constant: a1_const }
}
