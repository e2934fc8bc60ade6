//! Hazard-based policy hints, restart arithmetic and the conversion of
//! independent-resource schedules into shared-resource ones.

use std::fmt::Write as _;

use crate::cost::{Schedule, Segment, Share};
use crate::error::{domain, Error, Result};
use crate::numeric::{golden_section, integrate};
use crate::profiles::{Family, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HazardShape {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Sequential,
    Simultaneous,
    Indifferent,
    RunOptimizer,
}

impl HazardShape {
    pub fn policy(self) -> Policy {
        match self {
            HazardShape::Increasing => Policy::Sequential,
            HazardShape::Decreasing => Policy::Simultaneous,
            HazardShape::Constant => Policy::Indifferent,
            HazardShape::Mixed => Policy::RunOptimizer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyClass {
    pub shape: HazardShape,
    pub policy: Policy,
    /// Grid points where the hazard was defined and evaluated.
    pub grid: Vec<f64>,
}

/// Classifies the hazard by the signs of its successive differences on a
/// uniform grid over the interior of the support.
pub fn classify_hazard(profile: &Profile, grid_size: usize) -> Result<PolicyClass> {
    if grid_size < 64 {
        return Err(domain("classification grid needs at least 64 points"));
    }
    let lo = profile.family().support_start();
    let hi = profile.family().support_end().unwrap_or_else(|| profile.horizon());
    let mut grid = Vec::with_capacity(grid_size);
    let mut values = Vec::with_capacity(grid_size);
    for k in 1..=grid_size {
        let t = lo + (hi - lo) * k as f64 / (grid_size + 1) as f64;
        if let Some(h) = profile.hazard(t) {
            grid.push(t);
            values.push(h);
        }
    }
    if values.len() < 2 {
        return Err(Error::DegenerateProfile("hazard is undefined on the support".into()));
    }
    let scale = values.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    let tol = 1e-9 * scale;
    let (mut up, mut down) = (false, false);
    for w in values.windows(2) {
        let d = w[1] - w[0];
        up |= d > tol;
        down |= d < -tol;
    }
    let shape = match (up, down) {
        (false, false) => HazardShape::Constant,
        (true, false) => HazardShape::Increasing,
        (false, true) => HazardShape::Decreasing,
        (true, true) => HazardShape::Mixed,
    };
    Ok(PolicyClass { shape, policy: shape.policy(), grid })
}

// Restarts presume that some run eventually succeeds.
fn restart_cdf(profile: &Profile) -> Result<Profile> {
    if profile.p() < 1.0 {
        return Err(Error::Unsupported("restart analysis needs a profile with p = 1".into()));
    }
    Ok(profile.unscaled())
}

fn restart_terms(profile: &Profile, t: f64) -> Result<(f64, f64)> {
    let prof = restart_cdf(profile)?;
    let f = prof.cdf(t);
    if !(f > 0.0) {
        return Err(domain(format!("no chance of success by the restart point {t}")));
    }
    Ok((f, prof.integrate_survival(0.0, t)?))
}

/// Expected time of restarting a run every `t_star` time units.
pub fn restart_expected(profile: &Profile, t_star: f64) -> Result<f64> {
    let (f, area) = restart_terms(profile, t_star)?;
    Ok(area / f)
}

/// Expected cost of restarts at `t_dstar` when every restart costs `c`.
pub fn restart_expected_with_cost(profile: &Profile, t_dstar: f64, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(domain("restart cost must be non-negative"));
    }
    let (f, area) = restart_terms(profile, t_dstar)?;
    Ok(area / f + c * (1.0 - f) / (f * f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartPoint {
    pub t: f64,
    pub value: f64,
}

const RESTART_GRID: usize = 1024;

/// Minimises the restart objective over the support. On flat stretches the
/// largest point wins, which means the fewest restarts.
pub fn optimal_restart_point(profile: &Profile, with_cost: Option<f64>) -> Result<RestartPoint> {
    let prof = restart_cdf(profile)?;
    let c = with_cost.unwrap_or(0.0);
    let objective = |t: f64| restart_expected_with_cost(&prof, t, c).unwrap_or(f64::INFINITY);
    let lo = prof.family().support_start();
    let hi = prof.family().support_end().unwrap_or_else(|| prof.horizon());
    let mut cands: Vec<f64> = (1..=RESTART_GRID).map(|k| lo + (hi - lo) * k as f64 / RESTART_GRID as f64).collect();
    if let Family::Atoms(a) = prof.family() {
        cands.extend(a.points().iter().copied());
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let scored: Vec<(f64, f64)> = cands.iter().map(|&t| (t, objective(t))).collect();
    let min = scored.iter().fold(f64::INFINITY, |m, s| m.min(s.1));
    if !min.is_finite() {
        return Err(Error::DegenerateProfile("restart objective is undefined on the support".into()));
    }
    let near = |v: f64| v <= min + 1e-9 * min.abs().max(1e-300);
    let (mut t, mut value) = *scored.iter().rev().find(|s| near(s.1)).expect("minimum exists");
    if !prof.family().is_atomic() {
        let step = (hi - lo) / RESTART_GRID as f64;
        let (x, fx) = golden_section(objective, (t - step).max(lo), (t + step).min(hi), 1e-12 * (hi - lo));
        if fx < value - 1e-9 * value.abs() {
            t = x;
            value = fx;
        }
    }
    Ok(RestartPoint { t, value })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartComparison {
    pub t_star: f64,
    pub t_dstar: f64,
    /// Restarting both runs at `t_dstar`, over two restart periods.
    pub e_simple: f64,
    /// Interleaving at `t_star` before continuing to `t_dstar`.
    pub e_sched: f64,
    /// `e_simple - e_sched` from the closed identity.
    pub difference: f64,
    /// The same difference from direct quadrature of both expressions.
    pub difference_direct: f64,
}

impl RestartComparison {
    pub fn benefits(&self) -> bool {
        self.difference > 0.0
    }

    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "t_star={}", self.t_star);
        let _ = writeln!(out, "t_dstar={}", self.t_dstar);
        let _ = writeln!(out, "e_simple={}", self.e_simple);
        let _ = writeln!(out, "e_sched={}", self.e_sched);
        let _ = writeln!(out, "difference={}", self.difference);
        let _ = writeln!(out, "difference_direct={}", self.difference_direct);
        out
    }
}

/// Pure restarts at the costed optimum versus interleaving two runs at the
/// cost-free optimum.
pub fn compare_restart_vs_interleave(profile: &Profile, c: f64) -> Result<RestartComparison> {
    if !(c >= 0.0) {
        return Err(domain("restart cost must be non-negative"));
    }
    let prof = restart_cdf(profile)?;
    let mut t_star = optimal_restart_point(&prof, None)?.t;
    let t_dstar = optimal_restart_point(&prof, Some(c))?.t;
    // Keep t_star a true minimiser among the two points found.
    if restart_expected(&prof, t_dstar)? < restart_expected(&prof, t_star)? {
        t_star = t_dstar;
    }
    let f1 = prof.cdf(t_star);
    let f2 = prof.cdf(t_dstar);
    let i1 = prof.integrate_survival(0.0, t_star)?;
    let i2 = prof.integrate_survival(0.0, t_dstar)?;
    let e_simple = (2.0 - f2) * i2;
    let e_sched = f2 * i1 + (2.0 - f1 - f2) * i2;
    let difference = f1 * f2 * (restart_expected(&prof, t_dstar)? - restart_expected(&prof, t_star)?);

    // Direct evaluation of the four-term expression by quadrature.
    let surv = |t: f64| 1.0 - prof.cdf(t);
    let q = |a: f64, b: f64| {
        let mut pts = vec![a];
        prof.family().breakpoints(a, b, &mut pts);
        pts.push(b);
        pts.windows(2).map(|w| integrate(surv, w[0], w[1], 1e-14)).sum::<f64>()
    };
    let q1 = q(0.0, t_star);
    let q12 = q(t_star, t_dstar);
    let direct_sched = q1 + (1.0 - f1) * q1 + (1.0 - f1) * q12 + (1.0 - f2) * q12;
    let direct_simple = (2.0 - f2) * (q1 + q12);
    Ok(RestartComparison {
        t_star,
        t_dstar,
        e_simple,
        e_sched,
        difference,
        difference_direct: direct_simple - direct_sched,
    })
}

/// Turns a schedule for independent resources (several processes may be
/// active at full speed at once) into a shared-resource schedule: a stretch
/// with `k` active processes is stretched `k` times and each runs at `1/k`.
pub fn intensity_from_independent(independent: &Schedule) -> Result<Schedule> {
    let mut out = Vec::with_capacity(independent.segments().len());
    for seg in independent.segments() {
        if seg.shares.iter().any(|s| s.intensity != 1.0) {
            return Err(domain("independent schedules run every active process at intensity 1"));
        }
        let k = seg.shares.len();
        if k <= 1 {
            out.push(seg.clone());
            continue;
        }
        let rate = 1.0 / k as f64;
        let shares = seg.shares.iter().map(|s| Share { process: s.process, intensity: rate }).collect();
        out.push(Segment::shared(seg.duration * k as f64, shares));
    }
    Schedule::new(independent.n_processes(), out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Largest relative hazard gap between co-active processes.
    pub max_gap: f64,
    /// Segments (by index) whose gap exceeds the tolerance.
    pub violations: Vec<usize>,
}

/// Checks that processes sharing the resource have equal hazards, as an
/// interior optimum requires. Each shared segment is probed at its midpoint.
pub fn check_hazard_equilibrium(schedule: &Schedule, profiles: &[Profile], tol: f64) -> Result<EquilibriumReport> {
    if profiles.len() != schedule.n_processes() {
        return Err(domain("one profile per process is required"));
    }
    let mut clock = 0.0;
    let mut max_gap = 0.0f64;
    let mut violations = Vec::new();
    for (k, seg) in schedule.segments().iter().enumerate() {
        if seg.shares.len() >= 2 {
            let sigma = schedule.sigma_at(clock + 0.5 * seg.duration);
            let hs: Vec<f64> = seg
                .shares
                .iter()
                .map(|s| profiles[s.process].hazard(sigma[s.process]).unwrap_or(f64::INFINITY))
                .collect();
            let hi = hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = hs.iter().cloned().fold(f64::INFINITY, f64::min);
            let gap = if hi == lo { 0.0 } else { (hi - lo) / hi.abs().max(1e-300) };
            max_gap = max_gap.max(gap);
            if gap > tol {
                violations.push(k);
            }
        }
        clock += seg.duration;
    }
    Ok(EquilibriumReport { max_gap, violations })
}
