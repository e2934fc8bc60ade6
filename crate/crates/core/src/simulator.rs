//! Baseline strategies, Monte Carlo evaluation and strategy reports.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cost::{expected_cost, CostModel, Schedule, Segment};
use crate::error::{domain, Error, Result};
use crate::numeric::golden_section;
use crate::profiles::{Family, Profile, EPS_FAIL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    /// Each process to its horizon, one after another, in the cheapest order.
    Sequential,
    /// Round-robin turns of a fixed quantum; `None` picks a default quantum.
    Simultaneous { quantum: Option<f64> },
    /// One process up to a switch point, the others to their horizons, then
    /// the first resumes.
    SingleSwitch,
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Sequential => "sequential",
            Baseline::Simultaneous { .. } => "simultaneous",
            Baseline::SingleSwitch => "single-switch",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub eps_fail: f64,
    pub deadline: Option<f64>,
    pub horizons: Option<Vec<f64>>,
    /// Grid points for the switch-point search.
    pub grid: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { eps_fail: EPS_FAIL, deadline: None, horizons: None, grid: 64 }
    }
}

/// One step for step-count profiles (atoms or integer knots), otherwise a
/// ten-thousandth of the shortest horizon.
pub fn default_quantum(profiles: &[Profile]) -> f64 {
    let discrete = profiles.iter().all(|p| match p.family() {
        Family::Atoms(_) => true,
        Family::PiecewiseLinear(pwl) => pwl.knots().all(|(t, _)| t.fract() == 0.0),
        _ => false,
    });
    if discrete {
        1.0
    } else {
        profiles.iter().map(Profile::horizon).fold(f64::INFINITY, f64::min) / 1e4
    }
}

// Appends suspend-resume turns while tracking subjective times, and stops
// adding work once nothing is left to gain.
struct Builder<'a> {
    profiles: &'a [Profile],
    horizons: Vec<f64>,
    deadline: Option<f64>,
    eps_fail: f64,
    floor: f64,
    sigma: Vec<f64>,
    elapsed: f64,
    turns: Vec<(usize, f64)>,
}

impl<'a> Builder<'a> {
    fn new(profiles: &'a [Profile], cfg: &BaselineConfig) -> Result<Self> {
        let horizons = match &cfg.horizons {
            Some(h) if h.len() != profiles.len() => return Err(domain("one horizon per process is required")),
            Some(h) => h.clone(),
            None => profiles.iter().map(Profile::horizon).collect(),
        };
        Ok(Builder {
            profiles,
            horizons,
            deadline: cfg.deadline,
            eps_fail: cfg.eps_fail,
            floor: profiles.iter().map(|p| 1.0 - p.p()).product(),
            sigma: vec![0.0; profiles.len()],
            elapsed: 0.0,
            turns: Vec::new(),
        })
    }

    fn done(&self) -> bool {
        let surv: f64 = self.profiles.iter().zip(&self.sigma).map(|(p, s)| p.survival(*s)).product();
        surv - self.floor <= self.eps_fail || self.deadline.is_some_and(|t| self.elapsed >= t)
    }

    fn at_horizon(&self, i: usize) -> bool {
        self.sigma[i] >= self.horizons[i]
    }

    // Runs process `i` up to subjective time `target` (clipped to its horizon
    // and the deadline).
    fn run_to(&mut self, i: usize, target: f64) {
        if self.done() {
            return;
        }
        let mut d = target.min(self.horizons[i]) - self.sigma[i];
        if let Some(t) = self.deadline {
            d = d.min(t - self.elapsed);
        }
        if d > 0.0 {
            self.sigma[i] += d;
            self.elapsed += d;
            self.turns.push((i, d));
        }
    }

    fn finish(self) -> Result<Schedule> {
        Schedule::suspend_resume(self.profiles.len(), &self.turns)
    }
}

fn sequential_in(profiles: &[Profile], order: &[usize], cfg: &BaselineConfig) -> Result<Schedule> {
    let mut b = Builder::new(profiles, cfg)?;
    for &i in order {
        b.run_to(i, f64::INFINITY);
    }
    b.finish()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn cheapest(candidates: Vec<Schedule>, profiles: &[Profile], cost: &CostModel, cfg: &BaselineConfig) -> Result<Schedule> {
    let mut best: Option<(f64, Schedule)> = None;
    for s in candidates {
        let c = expected_cost(&s, profiles, cost, cfg.deadline)?;
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, s));
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::NoSchedule("no candidate schedule".into()))
}

fn simultaneous(profiles: &[Profile], quantum: f64, cfg: &BaselineConfig) -> Result<Schedule> {
    let n = profiles.len();
    let mut b = Builder::new(profiles, cfg)?;
    while !b.done() && (0..n).any(|i| !b.at_horizon(i)) {
        for i in 0..n {
            if !b.at_horizon(i) {
                let target = b.sigma[i] + quantum;
                b.run_to(i, target);
            }
        }
    }
    b.finish()
}

fn single_switch_at(profiles: &[Profile], first: usize, at: f64, cfg: &BaselineConfig) -> Result<Schedule> {
    let mut b = Builder::new(profiles, cfg)?;
    b.run_to(first, at);
    for i in (0..profiles.len()).filter(|i| *i != first) {
        b.run_to(i, f64::INFINITY);
    }
    b.run_to(first, f64::INFINITY);
    b.finish()
}

fn single_switch(profiles: &[Profile], cost: &CostModel, cfg: &BaselineConfig) -> Result<Schedule> {
    let mut best: Option<(f64, Schedule)> = None;
    let grid = cfg.grid.max(8);
    for first in 0..profiles.len() {
        let h = cfg.horizons.as_ref().map_or(profiles[first].horizon(), |v| v[first]);
        let eval = |s: f64| -> f64 {
            single_switch_at(profiles, first, s, cfg)
                .and_then(|sch| expected_cost(&sch, profiles, cost, cfg.deadline))
                .unwrap_or(f64::INFINITY)
        };
        let mut cands: Vec<f64> = (1..=grid).map(|k| h * k as f64 / grid as f64).collect();
        let mut knots = Vec::new();
        profiles[first].family().breakpoints(0.0, h, &mut knots);
        if let Family::Atoms(a) = profiles[first].family() {
            knots.extend(a.points().iter().copied().filter(|x| *x < h));
        }
        cands.extend(knots.iter().copied().filter(|x| *x > 0.0 && *x < h));
        let mut scored: Vec<(f64, f64)> = cands.iter().map(|&s| (eval(s), s)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (mut bc, mut bs) = scored[0];
        if !profiles[first].family().is_atomic() {
            let step = h / grid as f64;
            let (x, fx) = golden_section(eval, (bs - step).max(0.0), (bs + step).min(h), 1e-9 * h);
            if fx < bc {
                bc = fx;
                bs = x;
            }
        }
        let sch = single_switch_at(profiles, first, bs, cfg)?;
        if best.as_ref().is_none_or(|(c, _)| bc < *c) {
            best = Some((bc, sch));
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::NoSchedule("no switch point".into()))
}

/// Builds a baseline schedule.
pub fn baseline(kind: Baseline, profiles: &[Profile], cost: &CostModel, cfg: &BaselineConfig) -> Result<Schedule> {
    if profiles.is_empty() {
        return Err(domain("at least one process is required"));
    }
    match kind {
        Baseline::Sequential => {
            let n = profiles.len();
            let orders = if n <= 6 {
                permutations(n)
            } else {
                vec![(0..n).collect()]
            };
            let cands = orders.iter().map(|o| sequential_in(profiles, o, cfg)).collect::<Result<Vec<_>>>()?;
            cheapest(cands, profiles, cost, cfg)
        }
        Baseline::Simultaneous { quantum } => {
            let q = quantum.unwrap_or_else(|| default_quantum(profiles));
            if !(q > 0.0 && q.is_finite()) {
                return Err(domain("quantum must be positive"));
            }
            simultaneous(profiles, q, cfg)
        }
        Baseline::SingleSwitch => single_switch(profiles, cost, cfg),
    }
}

/// Replays a schedule against known goal times.
#[derive(Debug, Clone)]
pub struct Timeline {
    starts: Vec<f64>,
    // Subjective times at each segment start, one row per segment.
    sigma: Vec<Vec<f64>>,
    segments: Vec<Segment>,
    end: f64,
    final_sigma: Vec<f64>,
    // Per process: (subjective start, objective start, rate) of every active stretch.
    stretches: Vec<Vec<(f64, f64, f64)>>,
}

impl Timeline {
    pub fn new(schedule: &Schedule) -> Self {
        let n = schedule.n_processes();
        let mut t = 0.0;
        let mut s = vec![0.0; n];
        let mut starts = Vec::new();
        let mut sigma = Vec::new();
        let mut stretches = vec![Vec::new(); n];
        for seg in schedule.segments() {
            starts.push(t);
            sigma.push(s.clone());
            for sh in &seg.shares {
                stretches[sh.process].push((s[sh.process], t, sh.intensity));
                s[sh.process] += sh.intensity * seg.duration;
            }
            t += seg.duration;
        }
        Timeline { starts, sigma, segments: schedule.segments().to_vec(), end: t, final_sigma: s, stretches }
    }

    /// Objective time at which process `i` has consumed `target`, if ever.
    pub fn reach_time(&self, i: usize, target: f64) -> Option<f64> {
        if target > self.final_sigma[i] {
            return None;
        }
        let st = &self.stretches[i];
        let k = st.partition_point(|(s0, _, _)| *s0 < target);
        // The stretch that contains `target` starts at or before it.
        let k = k.saturating_sub(1).min(st.len().checked_sub(1)?);
        let (s0, t0, r) = st[k];
        Some(t0 + (target - s0).max(0.0) / r)
    }

    pub fn sigma_at(&self, t: f64) -> Vec<f64> {
        let k = self.starts.partition_point(|s| *s <= t).saturating_sub(1);
        let mut out = self.sigma[k].clone();
        let dt = t - self.starts[k];
        for sh in &self.segments[k].shares {
            out[sh.process] += sh.intensity * dt;
        }
        out
    }

    /// Cost when process `i` would succeed after `goals[i]` of its own time
    /// (infinite for never); a run with no success costs the whole schedule.
    pub fn finish_cost(&self, goals: &[f64], cost: &CostModel) -> f64 {
        let finish = goals
            .iter()
            .enumerate()
            .filter_map(|(i, g)| self.reach_time(i, *g))
            .fold(f64::INFINITY, f64::min);
        if finish.is_finite() {
            cost.value(finish, &self.sigma_at(finish))
        } else {
            cost.value(self.end, &self.final_sigma)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

const MC_CHUNK: u64 = 4096;

/// Monte Carlo estimate of the expected cost. Trial `k` draws from stream `k`
/// of a generator seeded with `seed`, so results do not depend on threading.
pub fn monte_carlo_cost(
    schedule: &Schedule,
    profiles: &[Profile],
    cost: &CostModel,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(domain("at least one trial is required"));
    }
    if profiles.len() != schedule.n_processes() {
        return Err(domain("one profile per process is required"));
    }
    if schedule.segments().is_empty() {
        return Ok(McEstimate { mean: 0.0, stderr: 0.0 });
    }
    let tl = Timeline::new(schedule);
    let trial_cost = |k: u64| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let goals: Vec<f64> = profiles.iter().map(|p| p.sample_goal_time(&mut rng)).collect();
        tl.finish_cost(&goals, cost)
    };
    let chunks = trials.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * MC_CHUNK;
            let hi = (lo + MC_CHUNK).min(trials);
            (lo..hi).fold((0.0, 0.0), |(s, s2), k| {
                let x = trial_cost(k);
                (s + x, s2 + x * x)
            })
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = trials as f64;
    let mean = s / m;
    let var = if trials > 1 { ((s2 - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate { mean, stderr: (var / m).sqrt() })
}

/// Improvement over a reference: positive when `cost` is cheaper.
pub fn relative_quality(cost: f64, cost_ref: f64) -> Result<f64> {
    if !(cost_ref > 0.0) {
        return Err(domain("reference cost must be positive"));
    }
    Ok(1.0 - cost / cost_ref)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityBasis {
    Analytic,
    Simulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRow {
    pub name: String,
    pub expected_cost: f64,
    pub mc: Option<McEstimate>,
    pub relative_quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport {
    pub reference: String,
    pub basis: QualityBasis,
    pub rows: Vec<StrategyRow>,
}

impl StrategyReport {
    /// Computes relative qualities against `reference`, which must be one of
    /// the entries.
    pub fn new(reference: &str, basis: QualityBasis, entries: Vec<(String, f64, Option<McEstimate>)>) -> Result<Self> {
        let pick = |c: f64, mc: Option<McEstimate>| match basis {
            QualityBasis::Analytic => Ok(c),
            QualityBasis::Simulated => mc.map(|m| m.mean).ok_or_else(|| domain("simulated basis needs estimates")),
        };
        let (_, rc, rmc) = entries
            .iter()
            .find(|e| e.0 == reference)
            .ok_or_else(|| domain(format!("unknown reference strategy {reference}")))?;
        let ref_cost = pick(*rc, *rmc)?;
        let rows = entries
            .into_iter()
            .map(|(name, c, mc)| {
                let q = relative_quality(pick(c, mc)?, ref_cost)?;
                Ok(StrategyRow { name, expected_cost: c, mc, relative_quality: q })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StrategyReport { reference: reference.to_string(), basis, rows })
    }

    pub fn row(&self, name: &str) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,analytic_cost,mc_cost,mc_stderr,relative_quality\n");
        for r in &self.rows {
            let (m, e) = r.mc.map_or((String::new(), String::new()), |m| (m.mean.to_string(), m.stderr.to_string()));
            let _ = writeln!(out, "{},{},{},{},{}", r.name, r.expected_cost, m, e, r.relative_quality);
        }
        out
    }
}
