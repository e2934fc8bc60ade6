//! Schedules, cost models and expected-cost evaluation.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::numeric::integrate;
use crate::profiles::{Profile, EPS_FAIL};

/// Default upper limit on accumulated expected cost.
pub const COST_CAP: f64 = 1e9;

/// A differentiable cost `u(t, sigma_1, ..., sigma_n)` supplied through its
/// partial derivatives.
pub trait CostFunction: Send + Sync + fmt::Debug {
    fn value(&self, t: f64, sigma: &[f64]) -> f64;
    fn d_t(&self, t: f64, sigma: &[f64]) -> f64;
    fn d_sigma(&self, i: usize, t: f64, sigma: &[f64]) -> f64;
}

#[derive(Debug, Clone)]
pub enum CostModel {
    /// `u = a t + b sum(sigma_i)`.
    Linear { a: f64, b: f64 },
    General(Arc<dyn CostFunction>),
}

impl CostModel {
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0 && (a + b).is_finite()) {
            return Err(domain("linear cost needs a, b >= 0 and a + b > 0"));
        }
        Ok(CostModel::Linear { a, b })
    }

    /// Pure elapsed time, `u = t`.
    pub fn time() -> Self {
        CostModel::Linear { a: 1.0, b: 0.0 }
    }

    /// Normalised resource weight `c = b / (a + b)` of a linear cost.
    pub fn resource_weight(&self) -> Option<f64> {
        match self {
            CostModel::Linear { a, b } => Some(b / (a + b)),
            CostModel::General(_) => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, CostModel::Linear { .. })
    }

    pub fn value(&self, t: f64, sigma: &[f64]) -> f64 {
        match self {
            CostModel::Linear { a, b } => a * t + b * sigma.iter().sum::<f64>(),
            CostModel::General(u) => u.value(t, sigma),
        }
    }

    /// `u'_t + sum(rate_i u'_{sigma_i})` at `(t, sigma)`.
    fn rate(&self, t: f64, sigma: &[f64], rates: &[(usize, f64)]) -> f64 {
        match self {
            CostModel::Linear { a, b } => a + b * rates.iter().map(|r| r.1).sum::<f64>(),
            CostModel::General(u) => {
                u.d_t(t, sigma) + rates.iter().map(|&(i, r)| r * u.d_sigma(i, t, sigma)).sum::<f64>()
            }
        }
    }

    /// Two-process weight `v_active(sigma_1, sigma_2)`.
    pub(crate) fn turn_weight(&self, active: usize, s: [f64; 2]) -> f64 {
        match self {
            CostModel::Linear { a, b } => a + b,
            CostModel::General(u) => {
                let t = s[0] + s[1];
                u.d_t(t, &s) + u.d_sigma(active, t, &s)
            }
        }
    }

    /// Partial derivative of `v_active` with respect to the idle process's
    /// subjective time, by central differences.
    pub(crate) fn turn_weight_cross(&self, active: usize, s: [f64; 2]) -> f64 {
        match self {
            CostModel::Linear { .. } => 0.0,
            CostModel::General(_) => {
                let other = 1 - active;
                let h = 1e-6 * s[other].abs().max(1.0);
                let lo = (s[other] - h).max(0.0);
                let hi = s[other] + h;
                let mut a = s;
                let mut b = s;
                a[other] = lo;
                b[other] = hi;
                (self.turn_weight(active, b) - self.turn_weight(active, a)) / (hi - lo)
            }
        }
    }
}

/// One process's rate within a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Share {
    pub process: usize,
    pub intensity: f64,
}

/// A stretch of objective time during which the listed processes run at
/// fixed intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub shares: Vec<Share>,
}

impl Segment {
    pub fn solo(process: usize, duration: f64) -> Self {
        Segment { duration, shares: vec![Share { process, intensity: 1.0 }] }
    }

    pub fn shared(duration: f64, shares: Vec<Share>) -> Self {
        Segment { duration, shares }
    }

    pub fn total_intensity(&self) -> f64 {
        self.shares.iter().map(|s| s.intensity).sum()
    }

    fn rates(&self) -> Vec<(usize, f64)> {
        self.shares.iter().map(|s| (s.process, s.intensity)).collect()
    }
}

/// Executable schedule: consecutive segments in objective time.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    n_processes: usize,
    segments: Vec<Segment>,
}

impl Schedule {
    /// Builds a schedule. Co-active intensities may sum above 1 here (the
    /// independent-resources form); [`Schedule::is_shared`] checks the shared
    /// constraint.
    pub fn new(n_processes: usize, segments: Vec<Segment>) -> Result<Self> {
        if n_processes == 0 {
            return Err(domain("schedule needs at least one process"));
        }
        for (k, seg) in segments.iter().enumerate() {
            if !(seg.duration > 0.0 && seg.duration.is_finite()) {
                return Err(domain(format!("segment {k}: duration must be positive and finite")));
            }
            if seg.shares.is_empty() {
                return Err(domain(format!("segment {k}: no active process")));
            }
            for (i, sh) in seg.shares.iter().enumerate() {
                if sh.process >= n_processes {
                    return Err(domain(format!("segment {k}: process {} out of range", sh.process)));
                }
                if !(sh.intensity > 0.0 && sh.intensity <= 1.0) {
                    return Err(domain(format!("segment {k}: intensity outside (0, 1]")));
                }
                if seg.shares[..i].iter().any(|o| o.process == sh.process) {
                    return Err(domain(format!("segment {k}: process listed twice")));
                }
            }
        }
        Ok(Schedule { n_processes, segments })
    }

    /// Suspend-resume schedule from `(process, duration)` turns. Zero-length
    /// turns are dropped and adjacent turns of the same process merged.
    pub fn suspend_resume(n_processes: usize, turns: &[(usize, f64)]) -> Result<Self> {
        let mut segs: Vec<Segment> = Vec::new();
        for &(p, d) in turns {
            if d < 0.0 {
                return Err(domain("negative turn duration"));
            }
            if d == 0.0 {
                continue;
            }
            match segs.last_mut() {
                Some(last) if last.shares.len() == 1 && last.shares[0].process == p => {
                    last.duration += d
                }
                _ => segs.push(Segment::solo(p, d)),
            }
        }
        Schedule::new(n_processes, segs)
    }

    pub fn n_processes(&self) -> usize {
        self.n_processes
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_suspend_resume(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.shares.len() == 1 && s.shares[0].intensity == 1.0)
    }

    /// True when co-active intensities never exceed 1.
    pub fn is_shared(&self) -> bool {
        self.segments.iter().all(|s| s.total_intensity() <= 1.0 + 1e-12)
    }

    pub fn switch_count(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    /// Subjective times of all processes at objective time `t`.
    pub fn sigma_at(&self, t: f64) -> Vec<f64> {
        let mut sigma = vec![0.0; self.n_processes];
        let mut clock = 0.0;
        for seg in &self.segments {
            let d = seg.duration.min((t - clock).max(0.0));
            for sh in &seg.shares {
                sigma[sh.process] += sh.intensity * d;
            }
            clock += seg.duration;
            if clock >= t {
                break;
            }
        }
        sigma
    }

    pub fn final_sigma(&self) -> Vec<f64> {
        self.sigma_at(f64::INFINITY)
    }
}

/// Cumulative subjective switch times, read round-robin over the processes.
/// Entry `j` (0-based) belongs to process `j % n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaSequence {
    n_processes: usize,
    zetas: Vec<f64>,
}

impl ZetaSequence {
    pub fn new(n_processes: usize, zetas: Vec<f64>) -> Result<Self> {
        if n_processes == 0 {
            return Err(Error::InvalidZeta("zero processes".into()));
        }
        check_zetas(n_processes, &zetas)?;
        Ok(ZetaSequence { n_processes, zetas })
    }

    pub fn n_processes(&self) -> usize {
        self.n_processes
    }

    pub fn values(&self) -> &[f64] {
        &self.zetas
    }

    pub fn len(&self) -> usize {
        self.zetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zetas.is_empty()
    }

    /// Latest subjective time of every process.
    pub fn latest(&self) -> Vec<f64> {
        latest_of(self.n_processes, &self.zetas)
    }

    /// Turn durations in order (including zero-length turns).
    pub fn turn_durations(&self) -> Vec<f64> {
        (0..self.zetas.len())
            .map(|j| self.zetas[j] - prev_same(&self.zetas, self.n_processes, j))
            .collect()
    }

    pub fn to_schedule(&self) -> Schedule {
        zeta_to_schedule(self)
    }
}

pub(crate) fn check_zetas(n: usize, zetas: &[f64]) -> Result<()> {
    for (j, &z) in zetas.iter().enumerate() {
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::InvalidZeta(format!("entry {j} = {z} is not a finite non-negative time")));
        }
        if z < prev_same(zetas, n, j) {
            return Err(Error::InvalidZeta(format!(
                "entry {j} = {z} decreases the subjective time of process {}",
                j % n
            )));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn prev_same(zetas: &[f64], n: usize, j: usize) -> f64 {
    if j >= n {
        zetas[j - n]
    } else {
        0.0
    }
}

pub(crate) fn latest_of(n: usize, zetas: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (j, &z) in zetas.iter().enumerate() {
        out[j % n] = z;
    }
    out
}

/// Converts a zeta sequence into its suspend-resume schedule.
pub fn zeta_to_schedule(z: &ZetaSequence) -> Schedule {
    let n = z.n_processes;
    let turns: Vec<(usize, f64)> = z
        .turn_durations()
        .into_iter()
        .enumerate()
        .map(|(j, d)| (j % n, d))
        .collect();
    Schedule::suspend_resume(n, &turns).expect("validated zeta sequence yields a valid schedule")
}

fn check_profiles(n: usize, profiles: &[Profile]) -> Result<()> {
    if profiles.len() != n {
        return Err(domain(format!("{} profiles given for {n} processes", profiles.len())));
    }
    Ok(())
}

/// Goal-time distribution of the whole system at objective time `t`.
pub fn goal_time_cdf(schedule: &Schedule, profiles: &[Profile], t: f64) -> Result<f64> {
    check_profiles(schedule.n_processes, profiles)?;
    if !(t >= 0.0) {
        return Err(domain("time must be non-negative"));
    }
    let sigma = schedule.sigma_at(t);
    let fail: f64 = profiles.iter().zip(&sigma).map(|(p, s)| p.survival(*s)).product();
    Ok(1.0 - fail)
}

/// Stopping limits for expected-cost evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalLimits {
    pub cost_cap: f64,
    pub eps_fail: f64,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits { cost_cap: COST_CAP, eps_fail: EPS_FAIL }
    }
}

/// Expected cost of a schedule; with `t_limit` the integral stops at that
/// deadline.
pub fn expected_cost(
    schedule: &Schedule,
    profiles: &[Profile],
    cost: &CostModel,
    t_limit: Option<f64>,
) -> Result<f64> {
    expected_cost_with(schedule, profiles, cost, t_limit, &EvalLimits::default())
}

pub fn expected_cost_with(
    schedule: &Schedule,
    profiles: &[Profile],
    cost: &CostModel,
    t_limit: Option<f64>,
    limits: &EvalLimits,
) -> Result<f64> {
    let n = schedule.n_processes;
    check_profiles(n, profiles)?;
    let end = t_limit.unwrap_or(f64::INFINITY);
    if !(end >= 0.0) {
        return Err(domain("deadline must be non-negative"));
    }
    let floor: f64 = profiles.iter().map(|p| 1.0 - p.p()).product();
    let mut sigma = vec![0.0; n];
    let mut clock = 0.0;
    let mut total = 0.0;
    for seg in &schedule.segments {
        let d = seg.duration.min(end - clock);
        if d <= 0.0 {
            break;
        }
        total += segment_cost(seg, d, clock, &sigma, profiles, cost);
        for sh in &seg.shares {
            sigma[sh.process] += sh.intensity * d;
        }
        clock += d;
        if total >= limits.cost_cap {
            let surv: f64 = profiles.iter().zip(&sigma).map(|(p, s)| p.survival(*s)).product();
            if surv - floor > limits.eps_fail {
                return Err(Error::Divergent { partial: total });
            }
        }
    }
    Ok(total)
}

fn segment_cost(
    seg: &Segment,
    d: f64,
    clock: f64,
    sigma: &[f64],
    profiles: &[Profile],
    cost: &CostModel,
) -> f64 {
    if let (CostModel::Linear { a, b }, [share]) = (cost, seg.shares.as_slice()) {
        let others: f64 = (0..sigma.len())
            .filter(|&i| i != share.process)
            .map(|i| profiles[i].survival(sigma[i]))
            .product();
        if others == 0.0 {
            return 0.0;
        }
        let p = share.process;
        let r = share.intensity;
        let area = profiles[p].survival_area(sigma[p], sigma[p] + r * d) / r;
        return (a + b * r) * others * area;
    }
    let rates = seg.rates();
    let integrand = |s: f64| {
        let mut cur = sigma.to_vec();
        for &(i, r) in &rates {
            cur[i] += r * s;
        }
        let surv: f64 = profiles.iter().zip(&cur).map(|(p, x)| p.survival(*x)).product();
        if surv == 0.0 {
            return 0.0;
        }
        cost.rate(clock + s, &cur, &rates) * surv
    };
    integrate(integrand, 0.0, d, 1e-14 * d.max(1.0))
}

/// Expected cost of turn `j` of a zeta prefix: the increment added when
/// `zetas[j]` is appended.
pub(crate) fn zeta_turn_cost(zetas: &[f64], n: usize, j: usize, profiles: &[Profile], cost: &CostModel) -> f64 {
    let proc = j % n;
    let lo = prev_same(zetas, n, j);
    let hi = zetas[j];
    if hi <= lo {
        return 0.0;
    }
    match cost {
        CostModel::Linear { a, b } => {
            let mut others = 1.0;
            for i in (j + 1).saturating_sub(n)..j {
                others *= profiles[i % n].survival(zetas[i]);
            }
            // Processes that have not run yet sit at subjective time 0.
            for q in (j + 1)..n {
                others *= profiles[q].survival(0.0);
            }
            if others == 0.0 {
                return 0.0;
            }
            (a + b) * others * profiles[proc].survival_area(lo, hi)
        }
        CostModel::General(_) => {
            let other = 1 - proc;
            let q = if j >= 1 { zetas[j - 1] } else { 0.0 };
            let sq = profiles[other].survival(q);
            if sq == 0.0 {
                return 0.0;
            }
            let f = |x: f64| {
                let mut s = [0.0; 2];
                s[proc] = x;
                s[other] = q;
                cost.turn_weight(proc, s) * profiles[proc].survival(x)
            };
            sq * integrate(f, lo, hi, 1e-14 * (hi - lo).max(1.0))
        }
    }
}

/// Expected cost computed directly from the zeta form.
pub fn expected_cost_zeta(z: &ZetaSequence, profiles: &[Profile], cost: &CostModel) -> Result<f64> {
    let n = z.n_processes;
    check_profiles(n, profiles)?;
    if !cost.is_linear() && n != 2 {
        return Err(Error::Unsupported(
            "general cost models are supported for two processes only".into(),
        ));
    }
    Ok((0..z.zetas.len())
        .map(|j| zeta_turn_cost(&z.zetas, n, j, profiles, cost))
        .sum())
}
