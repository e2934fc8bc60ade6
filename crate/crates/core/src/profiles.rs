//! Goal-time distributions of anytime processes.
//!
//! A [`Profile`] couples a distribution family `F` (conditioned on eventual
//! success) with a success probability `p`. All survival arithmetic uses the
//! scaled form `S(t) = 1 - p F(t)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{domain, Error, Result};
use crate::numeric::first_true;

/// Default failure-probability threshold used to derive horizons.
pub const EPS_FAIL: f64 = 1e-6;
/// Absolute tolerance for numerically integrated survival areas.
pub const EPS_INT: f64 = 1e-10;
/// Maximum number of knots kept by [`fit_empirical`].
pub const MAX_KNOTS: usize = 4096;

const MASS_TOL: f64 = 1e-12;

fn std_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn std_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// `psi(z) = z Phi(z) + phi(z)`, an antiderivative of the standard normal CDF.
fn psi(z: f64) -> f64 {
    z * std_cdf(z) + std_pdf(z)
}

/// Piecewise-linear CDF through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Pwl {
    t: Vec<f64>,
    f: Vec<f64>,
    // Integral of (1 - F) from 0 to each knot.
    cum_tail: Vec<f64>,
}

impl Pwl {
    pub fn new(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.is_empty() {
            return Err(domain("piecewise-linear CDF needs at least one knot"));
        }
        let t: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let f: Vec<f64> = knots.iter().map(|k| k.1).collect();
        if t[0] < 0.0 || t.iter().any(|x| !x.is_finite()) {
            return Err(domain("knot times must be finite and non-negative"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("knot times must be strictly increasing"));
        }
        if f.iter().any(|v| !(0.0..=1.0).contains(v)) || f.windows(2).any(|w| w[1] < w[0]) {
            return Err(domain("knot CDF values must be non-decreasing in [0, 1]"));
        }
        if (f[f.len() - 1] - 1.0).abs() > MASS_TOL {
            return Err(domain("last knot must have CDF 1"));
        }
        let mut cum_tail = Vec::with_capacity(t.len());
        let mut acc = t[0];
        cum_tail.push(acc);
        for i in 1..t.len() {
            acc += (t[i] - t[i - 1]) * (1.0 - 0.5 * (f[i] + f[i - 1]));
            cum_tail.push(acc);
        }
        Ok(Pwl { t, f, cum_tail })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.f.iter().copied())
    }

    // Index of the last knot <= x, if any.
    fn seg(&self, x: f64) -> Option<usize> {
        let i = self.t.partition_point(|&k| k <= x);
        i.checked_sub(1)
    }

    fn cdf(&self, x: f64) -> f64 {
        match self.seg(x) {
            None => 0.0,
            Some(i) if i + 1 == self.t.len() => 1.0,
            Some(i) => {
                let w = (x - self.t[i]) / (self.t[i + 1] - self.t[i]);
                self.f[i] + w * (self.f[i + 1] - self.f[i])
            }
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        match self.seg(x) {
            Some(i) if i + 1 < self.t.len() => {
                (self.f[i + 1] - self.f[i]) / (self.t[i + 1] - self.t[i])
            }
            _ => 0.0,
        }
    }

    fn tail_from_zero(&self, x: f64) -> f64 {
        match self.seg(x) {
            None => x,
            Some(i) if i + 1 == self.t.len() => self.cum_tail[i],
            Some(i) => {
                let fx = self.cdf(x);
                self.cum_tail[i] + (x - self.t[i]) * (1.0 - 0.5 * (self.f[i] + fx))
            }
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        if u <= self.f[0] {
            return self.t[0];
        }
        let i = self.f.partition_point(|&v| v < u).min(self.t.len() - 1);
        let (f0, f1) = (self.f[i - 1], self.f[i]);
        if f1 <= f0 {
            return self.t[i];
        }
        self.t[i - 1] + (u - f0) / (f1 - f0) * (self.t[i] - self.t[i - 1])
    }
}

/// Discrete goal-time law; the CDF is right-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms {
    points: Vec<f64>,
    masses: Vec<f64>,
    cum: Vec<f64>,
}

impl Atoms {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != masses.len() {
            return Err(domain("atom list needs matching, non-empty points and masses"));
        }
        if points[0] < 0.0 || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("atom points must be non-negative and strictly increasing"));
        }
        if masses.iter().any(|m| *m <= 0.0) {
            return Err(domain("atom masses must be positive"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(domain(format!("atom masses sum to {total}, expected 1")));
        }
        let mut cum = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for m in &masses {
            acc += m;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(Atoms { points, masses, cum })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    fn cdf(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|&p| p <= x);
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    fn tail(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|&p| p <= x);
        if i == 0 {
            1.0
        } else {
            self.masses[i..].iter().sum()
        }
    }

    fn tail_from_zero(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut prev = 0.0;
        let mut remaining = 1.0;
        for (p, m) in self.points.iter().zip(&self.masses) {
            if *p >= x {
                break;
            }
            acc += (p - prev) * remaining;
            remaining -= m;
            prev = *p;
        }
        acc + (x - prev) * remaining.max(0.0)
    }

    fn mass_at(&self, x: f64) -> f64 {
        match self.points.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => self.masses[i],
            Err(_) => 0.0,
        }
    }
}

/// Distribution family of a process's goal time (conditioned on success).
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64, shift: f64 },
    /// Normal law truncated to `t >= 0`, with the exact renormalisation.
    TruncatedNormal { mean: f64, sd: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Mixture { weights: Vec<f64>, components: Vec<Family> },
    Atoms(Atoms),
    PiecewiseLinear(Pwl),
    /// `k` unit-length peaks of density `1/k`, centred evenly on `[0, span]`.
    Peaks { k: usize, span: f64 },
}

impl Family {
    pub fn atoms(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        Ok(Family::Atoms(Atoms::new(points, masses)?))
    }

    pub fn piecewise_linear(knots: &[(f64, f64)]) -> Result<Self> {
        Ok(Family::PiecewiseLinear(Pwl::new(knots)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(domain("uniform needs 0 <= lo < hi"));
                }
            }
            Family::Exponential { rate, shift } => {
                if !(*rate > 0.0 && *shift >= 0.0 && rate.is_finite() && shift.is_finite()) {
                    return Err(domain("exponential needs rate > 0 and shift >= 0"));
                }
            }
            Family::TruncatedNormal { mean, sd } => {
                if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) {
                    return Err(domain("truncated normal needs finite mean and sd > 0"));
                }
                if std_cdf(mean / sd) <= 0.0 {
                    return Err(domain("truncated normal has no mass on t >= 0"));
                }
            }
            Family::Lognormal { mu, sigma } => {
                if !(mu.is_finite() && *sigma > 0.0 && sigma.is_finite()) {
                    return Err(domain("lognormal needs finite mu and sigma > 0"));
                }
            }
            Family::Mixture { weights, components } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return Err(domain("mixture needs matching, non-empty weights and components"));
                }
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(domain("mixture weights must be non-negative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(domain(format!("mixture weights sum to {total}, expected 1")));
                }
                for c in components {
                    c.validate()?;
                }
            }
            Family::Atoms(_) | Family::PiecewiseLinear(_) => {}
            Family::Peaks { k, span } => {
                if *k == 0 || *span < *k as f64 {
                    return Err(domain("peaks need k >= 1 and span >= k"));
                }
            }
        }
        Ok(())
    }

    fn peak_start(k: usize, span: f64, i: usize) -> f64 {
        span * (i as f64 + 0.5) / k as f64 - 0.5
    }

    /// Distribution function `F(t)` (right-continuous).
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Family::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Exponential { rate, shift } => {
                if t <= *shift {
                    0.0
                } else {
                    -(-rate * (t - shift)).exp_m1()
                }
            }
            Family::TruncatedNormal { mean, sd } => {
                if t <= 0.0 {
                    return 0.0;
                }
                let z0 = -mean / sd;
                let norm = std_cdf(-z0);
                ((std_cdf((t - mean) / sd) - std_cdf(z0)) / norm).clamp(0.0, 1.0)
            }
            Family::Lognormal { mu, sigma } => {
                if t <= 0.0 {
                    0.0
                } else {
                    std_cdf((t.ln() - mu) / sigma)
                }
            }
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(t))
                .sum(),
            Family::Atoms(a) => a.cdf(t),
            Family::PiecewiseLinear(p) => p.cdf(t),
            Family::Peaks { k, span } => (0..*k)
                .map(|i| (t - Self::peak_start(*k, *span, i)).clamp(0.0, 1.0))
                .sum::<f64>()
                / *k as f64,
        }
    }

    /// `1 - F(t)`, computed without cancellation in the upper tail.
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            Family::Exponential { rate, shift } => {
                if t <= *shift {
                    1.0
                } else {
                    (-rate * (t - shift)).exp()
                }
            }
            Family::TruncatedNormal { mean, sd } => {
                if t <= 0.0 {
                    return 1.0;
                }
                let norm = std_cdf(mean / sd);
                (std_cdf((mean - t) / sd) / norm).clamp(0.0, 1.0)
            }
            Family::Lognormal { mu, sigma } => {
                if t <= 0.0 {
                    1.0
                } else {
                    std_cdf(-(t.ln() - mu) / sigma)
                }
            }
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.tail(t))
                .sum(),
            Family::Atoms(a) => a.tail(t),
            _ => 1.0 - self.cdf(t),
        }
    }

    /// Density (right derivative at kinks; 0 for atom lists).
    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            Family::Uniform { lo, hi } => {
                if t >= *lo && t < *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Exponential { rate, shift } => {
                if t < *shift {
                    0.0
                } else {
                    rate * (-rate * (t - shift)).exp()
                }
            }
            Family::TruncatedNormal { mean, sd } => {
                if t < 0.0 {
                    return 0.0;
                }
                std_pdf((t - mean) / sd) / (sd * std_cdf(mean / sd))
            }
            Family::Lognormal { mu, sigma } => {
                if t <= 0.0 {
                    0.0
                } else {
                    std_pdf((t.ln() - mu) / sigma) / (t * sigma)
                }
            }
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.pdf(t))
                .sum(),
            Family::Atoms(_) => 0.0,
            Family::PiecewiseLinear(p) => p.pdf(t),
            Family::Peaks { k, span } => {
                let inside = (0..*k).any(|i| {
                    let s = Self::peak_start(*k, *span, i);
                    t >= s && t < s + 1.0
                });
                if inside {
                    1.0 / *k as f64
                } else {
                    0.0
                }
            }
        }
    }

    /// `\int_0^x (1 - F)`.
    fn tail_from_zero(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Family::Uniform { lo, hi } => {
                let w = hi - lo;
                if x <= *lo {
                    x
                } else if x < *hi {
                    x - (x - lo) * (x - lo) / (2.0 * w)
                } else {
                    lo + 0.5 * w
                }
            }
            Family::Exponential { rate, shift } => {
                if x <= *shift {
                    x
                } else {
                    shift - (-rate * (x - shift)).exp_m1() / rate
                }
            }
            Family::TruncatedNormal { mean, sd } => {
                // \int_0^x Phi((m - y)/s) dy = s (psi(m/s) - psi((m - x)/s))
                let norm = std_cdf(mean / sd);
                sd * (psi(mean / sd) - psi((mean - x) / sd)) / norm
            }
            Family::Lognormal { .. } => self.tail_beyond(0.0) - self.tail_beyond(x),
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.tail_from_zero(x))
                .sum(),
            Family::Atoms(a) => a.tail_from_zero(x),
            Family::PiecewiseLinear(p) => p.tail_from_zero(x),
            Family::Peaks { k, span } => {
                let ramp = |s: f64| {
                    if x <= s {
                        0.0
                    } else if x < s + 1.0 {
                        0.5 * (x - s) * (x - s)
                    } else {
                        x - s - 0.5
                    }
                };
                let cdf_area: f64 =
                    (0..*k).map(|i| ramp(Self::peak_start(*k, *span, i))).sum::<f64>() / *k as f64;
                x - cdf_area
            }
        }
    }

    // Lognormal only: \int_x^\infty (1 - F).
    fn tail_beyond(&self, x: f64) -> f64 {
        let Family::Lognormal { mu, sigma } = self else {
            unreachable!("tail_beyond is lognormal-specific")
        };
        let mean = (mu + 0.5 * sigma * sigma).exp();
        if x <= 0.0 {
            return mean;
        }
        let z = (x.ln() - mu) / sigma;
        (mean * std_cdf(sigma - z) - x * std_cdf(-z)).max(0.0)
    }

    /// `\int_a^b (1 - F)` for `0 <= a <= b`.
    pub fn tail_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Family::Lognormal { .. } => self.tail_beyond(a) - self.tail_beyond(b),
            Family::TruncatedNormal { mean, sd } => {
                let norm = std_cdf(mean / sd);
                let (a, b) = (a.max(0.0), b.max(0.0));
                sd * (psi((mean - a) / sd) - psi((mean - b) / sd)) / norm
            }
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.tail_integral(a, b))
                .sum(),
            _ => self.tail_from_zero(b) - self.tail_from_zero(a),
        }
    }

    /// Smallest `t` with `F(t) > 0`.
    pub fn support_start(&self) -> f64 {
        match self {
            Family::Uniform { lo, .. } => *lo,
            Family::Exponential { shift, .. } => *shift,
            Family::TruncatedNormal { .. } | Family::Lognormal { .. } => 0.0,
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .filter(|(w, _)| **w > 0.0)
                .map(|(_, c)| c.support_start())
                .fold(f64::INFINITY, f64::min),
            Family::Atoms(a) => a.points[0],
            Family::PiecewiseLinear(p) => {
                if p.f[0] > 0.0 {
                    p.t[0]
                } else {
                    let i = p.f.partition_point(|&v| v <= 0.0);
                    p.t[i.saturating_sub(1)]
                }
            }
            Family::Peaks { k, span } => Self::peak_start(*k, *span, 0),
        }
    }

    /// End of a bounded support, if the family has one.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            Family::Uniform { hi, .. } => Some(*hi),
            Family::Atoms(a) => a.points.last().copied(),
            Family::PiecewiseLinear(p) => {
                let i = p.f.partition_point(|&v| v < 1.0);
                Some(p.t[i.min(p.t.len() - 1)])
            }
            Family::Peaks { k, span } => Some(Self::peak_start(*k, *span, k - 1) + 1.0),
            Family::Mixture { weights, components } => {
                let mut end: f64 = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    if *w > 0.0 {
                        end = end.max(c.support_end()?);
                    }
                }
                Some(end)
            }
            _ => None,
        }
    }

    /// Points where the density or CDF has a kink or jump, inside `(a, b)`.
    pub fn breakpoints(&self, a: f64, b: f64, out: &mut Vec<f64>) {
        if let Family::Mixture { components, .. } = self {
            components.iter().for_each(|c| c.breakpoints(a, b, out));
            return;
        }
        let mut push = |x: f64| {
            if x > a && x < b {
                out.push(x)
            }
        };
        match self {
            Family::Uniform { lo, hi } => {
                push(*lo);
                push(*hi);
            }
            Family::Exponential { shift, .. } => push(*shift),
            Family::Atoms(at) => at.points.iter().for_each(|p| push(*p)),
            Family::PiecewiseLinear(p) => {
                let lo = p.t.partition_point(|&t| t <= a);
                let hi = p.t.partition_point(|&t| t < b);
                p.t[lo..hi].iter().for_each(|t| push(*t));
            }
            Family::Peaks { k, span } => (0..*k).for_each(|i| {
                let s = Self::peak_start(*k, *span, i);
                push(s);
                push(s + 1.0);
            }),
            Family::Mixture { .. } | Family::TruncatedNormal { .. } | Family::Lognormal { .. } => {}
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Family::Atoms(_))
    }

    /// Draws a goal time from the family.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            Family::Uniform { lo, hi } => lo + u * (hi - lo),
            Family::Exponential { rate, shift } => shift - (-u).ln_1p() / rate,
            Family::TruncatedNormal { mean, sd } => {
                // Invert through the upper tail for accuracy.
                let norm = std_cdf(mean / sd);
                let v = (1.0 - u) * norm;
                mean - sd * std_quantile(v.max(f64::MIN_POSITIVE))
            }
            Family::Lognormal { mu, sigma } => {
                (mu + sigma * std_quantile(u.max(f64::MIN_POSITIVE))).exp()
            }
            Family::Mixture { weights, components } => {
                let mut acc = 0.0;
                for (w, c) in weights.iter().zip(components) {
                    acc += w;
                    if u < acc {
                        return c.sample(rng);
                    }
                }
                components.last().unwrap().sample(rng)
            }
            Family::Atoms(a) => {
                let i = a.cum.partition_point(|&c| c <= u).min(a.points.len() - 1);
                a.points[i]
            }
            Family::PiecewiseLinear(p) => p.quantile(u),
            Family::Peaks { k, span } => {
                let i = ((u * *k as f64) as usize).min(k - 1);
                Self::peak_start(*k, *span, i) + rng.random::<f64>()
            }
        }
    }
}

/// Pointwise evaluation of a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub cdf: f64,
    pub density: f64,
    pub survival: f64,
    /// `None` where `1 - p F(t) = 0`.
    pub hazard: Option<f64>,
    /// Probability mass sitting exactly at `t` (atom lists only).
    pub atom_mass: f64,
}

/// Goal-time distribution with success probability and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    family: Family,
    p: f64,
    horizon: f64,
}

impl Profile {
    pub fn new(family: Family, p: f64) -> Result<Self> {
        Self::with_eps_fail(family, p, EPS_FAIL)
    }

    pub fn with_eps_fail(family: Family, p: f64, eps_fail: f64) -> Result<Self> {
        family.validate()?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(domain(format!("success probability {p} outside (0, 1]")));
        }
        if !(eps_fail > 0.0 && eps_fail < 1.0) {
            return Err(domain("eps_fail must lie in (0, 1)"));
        }
        let horizon = compute_horizon(&family, p, eps_fail);
        Ok(Profile { family, p, horizon })
    }

    /// Builds a profile with an explicit horizon (e.g. a step cap).
    pub fn with_horizon(family: Family, p: f64, horizon: f64) -> Result<Self> {
        let mut prof = Self::new(family, p)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(domain("horizon must be positive and finite"));
        }
        prof.horizon = horizon;
        Ok(prof)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Same distribution with `p = 1` (used by restart analysis).
    pub fn unscaled(&self) -> Profile {
        let mut q = self.clone();
        q.p = 1.0;
        q.horizon = compute_horizon(&q.family, 1.0, EPS_FAIL);
        q
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.family.cdf(t)
    }

    /// `S(t) = 1 - p F(t)`.
    pub fn survival(&self, t: f64) -> f64 {
        (1.0 - self.p) + self.p * self.family.tail(t)
    }

    /// `p f(t) / S(t)`, or `None` when `S(t) = 0`.
    pub fn hazard(&self, t: f64) -> Option<f64> {
        let s = self.survival(t);
        if s <= 0.0 {
            None
        } else {
            Some(self.p * self.family.pdf(t) / s)
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<Evaluation> {
        if !(t >= 0.0) {
            return Err(domain(format!("time {t} must be non-negative")));
        }
        let atom_mass = match &self.family {
            Family::Atoms(a) => a.mass_at(t),
            _ => 0.0,
        };
        Ok(Evaluation {
            cdf: self.family.cdf(t),
            density: self.family.pdf(t),
            survival: self.survival(t),
            hazard: self.hazard(t),
            atom_mass,
        })
    }

    /// `\int_{lo}^{hi} (1 - p F(x)) dx`.
    pub fn integrate_survival(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo >= 0.0) || !(hi >= lo) {
            return Err(domain(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(self.survival_area(lo, hi))
    }

    /// Unchecked survival area; `lo > hi` yields 0.
    pub(crate) fn survival_area(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        (1.0 - self.p) * (hi - lo) + self.p * self.family.tail_integral(lo, hi)
    }

    /// Draws a goal time; `f64::INFINITY` means the run never succeeds.
    pub fn sample_goal_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.p < 1.0 && rng.random::<f64>() >= self.p {
            f64::INFINITY
        } else {
            self.family.sample(rng)
        }
    }

    /// Range worth tabulating: support start to support end (or horizon).
    pub fn display_range(&self) -> (f64, f64) {
        (0.0, self.family.support_end().unwrap_or(self.horizon))
    }
}

fn compute_horizon(family: &Family, p: f64, eps: f64) -> f64 {
    let done = |t: f64| p * family.tail(t) <= eps;
    let lo = 0.0;
    let mut hi = family
        .support_end()
        .unwrap_or_else(|| family.support_start().max(0.0) + 1.0);
    while !done(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::MAX;
        }
    }
    first_true(done, lo, hi)
}

/// One solver run: number of steps consumed and whether it succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub steps: u64,
    pub solved: bool,
}

/// Fits an empirical profile: `p` is the solved fraction, `F` interpolates the
/// empirical CDF of solved step counts linearly between distinct values (starting one
/// step below the smallest), and the horizon is the cutoff.
pub fn fit_empirical(samples: &[Sample], cutoff: u64) -> Result<Profile> {
    if samples.is_empty() {
        return Err(domain("no samples"));
    }
    let mut solved: Vec<u64> = samples.iter().filter(|s| s.solved).map(|s| s.steps).collect();
    if let Some(bad) = solved.iter().find(|&&s| s > cutoff) {
        return Err(domain(format!("solved sample with {bad} steps exceeds cutoff {cutoff}")));
    }
    if solved.is_empty() {
        return Err(Error::DegenerateProfile(
            "no solved samples; p = 0 cannot be scheduled".into(),
        ));
    }
    solved.sort_unstable();
    let total = solved.len() as f64;
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for (i, &s) in solved.iter().enumerate() {
        let f = (i + 1) as f64 / total;
        match distinct.last_mut() {
            Some(last) if last.0 == s as f64 => last.1 = f,
            _ => distinct.push((s as f64, f)),
        }
    }
    let mut knots = Vec::with_capacity(distinct.len() + 1);
    // Step counts are integers: the mass of the smallest value is spread over
    // the step that leads to it.
    if distinct[0].0 > 0.0 {
        knots.push((distinct[0].0 - 1.0, 0.0));
    }
    knots.extend(distinct);
    if knots.len() > MAX_KNOTS {
        let m = knots.len();
        let thinned: Vec<(f64, f64)> = (0..MAX_KNOTS)
            .map(|j| knots[(j as f64 * (m - 1) as f64 / (MAX_KNOTS - 1) as f64).round() as usize])
            .collect();
        knots = thinned;
        knots.dedup_by(|a, b| a.0 == b.0);
    }
    let p = solved.len() as f64 / samples.len() as f64;
    Profile::with_horizon(Family::piecewise_linear(&knots)?, p, cutoff.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform01(p: f64) -> Profile {
        Profile::new(Family::Uniform { lo: 0.0, hi: 1.0 }, p).unwrap()
    }

    #[test]
    fn uniform_hazard_values() {
        let h = uniform01(1.0).evaluate(0.5).unwrap().hazard.unwrap();
        assert!((h - 2.0).abs() < 1e-12);
        let h = uniform01(0.5).evaluate(0.5).unwrap().hazard.unwrap();
        assert!((h - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_hazard_is_rate() {
        let prof = Profile::new(Family::Exponential { rate: 1.0, shift: 0.0 }, 1.0).unwrap();
        for t in [0.0, 0.3, 2.0, 10.0, 13.0] {
            let h = prof.evaluate(t).unwrap().hazard.unwrap();
            assert!((h - 1.0).abs() < 1e-12, "t={t} h={h}");
        }
    }

    #[test]
    fn negative_time_rejected() {
        assert!(uniform01(1.0).evaluate(-1.0).is_err());
        assert!(uniform01(1.0).integrate_survival(0.5, 0.2).is_err());
    }

    #[test]
    fn atom_survival_area_matches_expectation() {
        let fam = Family::atoms(vec![10.0, 40.0, 160.0], vec![0.5, 0.25, 0.25]).unwrap();
        let prof = Profile::new(fam, 1.0).unwrap();
        assert_eq!(prof.integrate_survival(0.0, 160.0).unwrap(), 55.0);
        assert_eq!(prof.horizon(), 160.0);
        assert_eq!(prof.cdf(10.0), 0.5);
        assert_eq!(prof.evaluate(40.0).unwrap().atom_mass, 0.25);
    }

    #[test]
    fn exponential_mean_via_horizon() {
        let prof = Profile::new(Family::Exponential { rate: 2.5, shift: 0.0 }, 1.0).unwrap();
        let area = prof.integrate_survival(0.0, prof.horizon()).unwrap();
        assert!((area - 0.4).abs() < 1e-6);
        assert!(prof.p() * prof.family().tail(prof.horizon()) <= EPS_FAIL);
    }

    #[test]
    fn zero_length_interval() {
        assert_eq!(uniform01(0.7).integrate_survival(0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn empirical_fit_example() {
        let s = |steps, solved| Sample { steps, solved };
        let prof = fit_empirical(&[s(2, true), s(4, true), s(4, true), s(10, false)], 10).unwrap();
        assert!((prof.p() - 0.75).abs() < 1e-15);
        assert!((prof.cdf(4.0) - 1.0).abs() < 1e-15);
        assert!((prof.cdf(2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(prof.horizon(), 10.0);
    }

    #[test]
    fn empirical_fit_point_mass_and_failures() {
        let all: Vec<Sample> = (0..20).map(|_| Sample { steps: 5, solved: true }).collect();
        let prof = fit_empirical(&all, 10).unwrap();
        assert_eq!(prof.p(), 1.0);
        assert_eq!(prof.evaluate(5.0).unwrap().cdf, 1.0);
        let none: Vec<Sample> = (0..100).map(|_| Sample { steps: 9, solved: false }).collect();
        assert!(matches!(fit_empirical(&none, 10), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn knot_thinning_caps_size() {
        let samples: Vec<Sample> = (1..=10_000).map(|i| Sample { steps: i, solved: true }).collect();
        let prof = fit_empirical(&samples, 10_000).unwrap();
        let Family::PiecewiseLinear(p) = prof.family() else { panic!() };
        assert!(p.knots().count() <= MAX_KNOTS);
        assert_eq!(prof.cdf(10_000.0), 1.0);
    }

    #[test]
    fn peaks_layout() {
        let fam = Family::Peaks { k: 4, span: 100.0 };
        fam.validate().unwrap();
        assert!((fam.cdf(13.0) - 0.25).abs() < 1e-15);
        assert!((fam.pdf(12.5) - 0.25).abs() < 1e-15);
        assert_eq!(fam.pdf(20.0), 0.0);
        assert_eq!(fam.support_end(), Some(88.0));
    }
}
