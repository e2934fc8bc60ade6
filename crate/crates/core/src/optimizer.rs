//! Optimal suspend-resume schedules by depth-first branch and bound over the
//! roots of the chain equations, wrapped in an outer search over the free
//! leading switch points.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::chain::{chain_next_n_with, chain_next_two_with, deadline_completion, ChainSettings};
use crate::cost::{expected_cost_zeta, latest_of, prev_same, zeta_turn_cost, CostModel, ZetaSequence, COST_CAP};
use crate::error::{domain, Error, Result};
use crate::numeric::golden_section;
use crate::profiles::{Family, Profile, EPS_FAIL};

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Stop once the residual chance of an undiscovered success drops below this.
    pub eps_fail: f64,
    pub cost_cap: f64,
    /// Hard limit for iterative deepening.
    pub max_depth: usize,
    /// First depth tried by iterative deepening.
    pub start_depth: usize,
    /// Global deadline on objective time.
    pub deadline: Option<f64>,
    /// Overrides the horizons stored in the profiles.
    pub horizons: Option<Vec<f64>>,
    /// Grid points per free variable in the outer search.
    pub outer_grid: usize,
    /// Upper bound on grid points over all free variables together; per-axis
    /// resolution shrinks when there are several.
    pub outer_budget: usize,
    /// Golden-section tolerance, as a fraction of the search interval.
    pub outer_refine_tol: f64,
    /// Expanded-node budget per tree search.
    pub node_budget: usize,
    /// Disable to run the tree without threshold pruning.
    pub cutoffs: bool,
    /// Restrict candidate switch points to atom locations. Chosen automatically
    /// when every profile is purely atomic.
    pub atom_support: Option<bool>,
    pub chain: ChainSettings,
    /// Record the expanded nodes of the winning tree.
    pub trace: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            eps_fail: EPS_FAIL,
            cost_cap: COST_CAP,
            max_depth: 64,
            start_depth: 16,
            deadline: None,
            horizons: None,
            outer_grid: 32,
            outer_budget: 4096,
            outer_refine_tol: 1e-8,
            node_budget: 20_000,
            cutoffs: true,
            atom_support: None,
            chain: ChainSettings::default(),
            trace: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_fail > 0.0 && self.eps_fail < 1.0) {
            return Err(domain("eps_fail must lie in (0, 1)"));
        }
        if !(self.cost_cap > 0.0) {
            return Err(domain("cost cap must be positive"));
        }
        if self.max_depth < 1 || self.start_depth < 1 {
            return Err(domain("depth limits must be at least 1"));
        }
        if self.outer_grid < 8 {
            return Err(domain("outer grid needs at least 8 points"));
        }
        if let Some(t) = self.deadline {
            if !(t > 0.0) {
                return Err(domain("deadline must be positive"));
            }
        }
        if !(self.outer_refine_tol > 0.0) {
            return Err(domain("refinement tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub expanded: usize,
    pub cutoffs: usize,
    pub skips: usize,
    pub leaves: usize,
}

impl NodeStats {
    fn absorb(&mut self, other: &NodeStats) {
        self.expanded += other.expanded;
        self.cutoffs += other.cutoffs;
        self.skips += other.skips;
        self.leaves += other.leaves;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeDecision {
    Expand,
    Leaf,
    Cutoff,
    Skip,
    DepthLimit,
}

impl NodeDecision {
    pub fn label(self) -> &'static str {
        match self {
            NodeDecision::Expand => "expand",
            NodeDecision::Leaf => "leaf",
            NodeDecision::Cutoff => "cutoff",
            NodeDecision::Skip => "skip",
            NodeDecision::DepthLimit => "depth-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub depth: usize,
    pub zetas: Vec<f64>,
    pub partial_cost: f64,
    pub decision: NodeDecision,
}

#[derive(Debug, Clone)]
pub struct OptimalScheduleResult {
    pub zetas: ZetaSequence,
    pub expected_cost: f64,
    pub first_process: usize,
    pub node_stats: NodeStats,
    /// Some branch was closed by the depth limit or node budget.
    pub approximate: bool,
    pub trace: Vec<TraceLine>,
}

/// Outcome of a single tree search below a fixed prefix.
#[derive(Debug, Clone)]
pub struct BranchOutcome {
    /// Cheapest completion cost, or infinity when every branch was cut.
    pub cost: f64,
    pub best: Option<ZetaSequence>,
    pub stats: NodeStats,
    pub approximate: bool,
}

fn effective_horizons(profiles: &[Profile], cfg: &OptimizerConfig) -> Result<Vec<f64>> {
    match &cfg.horizons {
        Some(h) if h.len() != profiles.len() => Err(domain("one horizon per process is required")),
        Some(h) if h.iter().any(|x| !(*x > 0.0 && x.is_finite())) => {
            Err(domain("horizons must be positive and finite"))
        }
        Some(h) => Ok(h.clone()),
        None => Ok(profiles.iter().map(Profile::horizon).collect()),
    }
}

fn uses_atoms(profiles: &[Profile], cfg: &OptimizerConfig) -> bool {
    cfg.atom_support.unwrap_or_else(|| profiles.iter().all(|p| p.family().is_atomic()))
}

fn atom_points(profile: &Profile) -> Vec<f64> {
    match profile.family() {
        Family::Atoms(a) => a.points().to_vec(),
        other => {
            let mut out = Vec::new();
            if let Some(end) = other.support_end() {
                other.breakpoints(0.0, end, &mut out);
            }
            out
        }
    }
}

/// Whether a prefix needs no further turns.
pub fn task_accomplished(
    prefix: &ZetaSequence,
    cfg: &OptimizerConfig,
    profiles: &[Profile],
    accumulated_cost: f64,
) -> Result<bool> {
    let horizons = effective_horizons(profiles, cfg)?;
    let floor: f64 = profiles.iter().map(|p| 1.0 - p.p()).product();
    Ok(accomplished(prefix.values(), profiles, &horizons, floor, cfg, accumulated_cost))
}

fn accomplished(
    z: &[f64],
    profiles: &[Profile],
    horizons: &[f64],
    floor: f64,
    cfg: &OptimizerConfig,
    accumulated_cost: f64,
) -> bool {
    let n = profiles.len();
    let latest = latest_of(n, z);
    let surv: f64 = profiles.iter().zip(&latest).map(|(p, x)| p.survival(*x)).product();
    if surv - floor <= cfg.eps_fail {
        return true;
    }
    if let Some(t) = cfg.deadline {
        if latest.iter().sum::<f64>() >= t * (1.0 - 1e-12) {
            return true;
        }
    }
    if latest.iter().zip(horizons).all(|(x, h)| *x >= h * (1.0 - 1e-12)) {
        return true;
    }
    accumulated_cost >= cfg.cost_cap
}

// Equal-cost schedules are ordered by segment count, then by their
// (process, duration) lists.
fn compare_found(ca: f64, za: &[f64], cb: f64, zb: &[f64], n: usize) -> Ordering {
    let tol = 1e-12 * ca.abs().max(cb.abs()).max(1.0);
    if ca < cb - tol {
        return Ordering::Less;
    }
    if cb < ca - tol {
        return Ordering::Greater;
    }
    let sa = segments_of(za, n);
    let sb = segments_of(zb, n);
    sa.len().cmp(&sb.len()).then_with(|| {
        for (x, y) in sa.iter().zip(&sb) {
            let o = x.0.cmp(&y.0).then(x.1.total_cmp(&y.1));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

fn segments_of(z: &[f64], n: usize) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for j in 0..z.len() {
        let d = z[j] - prev_same(z, n, j);
        if d <= 0.0 {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.0 == j % n => last.1 += d,
            _ => out.push((j % n, d)),
        }
    }
    out
}

fn trim_trailing_skips(z: &mut Vec<f64>, n: usize) {
    while let Some(&last) = z.last() {
        let j = z.len() - 1;
        if last <= prev_same(z, n, j) {
            z.pop();
        } else {
            break;
        }
    }
}

struct Search<'a> {
    profiles: &'a [Profile],
    cost: &'a CostModel,
    cfg: &'a OptimizerConfig,
    n: usize,
    horizons: Vec<f64>,
    atoms: Option<Vec<Vec<f64>>>,
    floor: f64,
    depth_limit: usize,
    thresh: f64,
    best: Option<(f64, Vec<f64>)>,
    stats: NodeStats,
    hit_limit: bool,
    trace: Option<Vec<TraceLine>>,
}

impl<'a> Search<'a> {
    fn new(profiles: &'a [Profile], cost: &'a CostModel, cfg: &'a OptimizerConfig, horizons: Vec<f64>) -> Self {
        let atoms = uses_atoms(profiles, cfg).then(|| profiles.iter().map(atom_points).collect());
        Search {
            profiles,
            cost,
            cfg,
            n: profiles.len(),
            horizons,
            atoms,
            floor: profiles.iter().map(|p| 1.0 - p.p()).product(),
            depth_limit: cfg.start_depth.min(cfg.max_depth),
            thresh: f64::INFINITY,
            best: None,
            stats: NodeStats::default(),
            hit_limit: false,
            trace: None,
        }
    }

    fn reset(&mut self, thresh: f64) {
        self.thresh = thresh;
        self.best = None;
        self.hit_limit = false;
    }

    fn note(&mut self, depth: usize, z: &[f64], cost: f64, decision: NodeDecision) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceLine { depth, zetas: z.to_vec(), partial_cost: cost, decision });
        }
    }

    fn is_done(&self, z: &[f64], cost: f64) -> bool {
        accomplished(z, self.profiles, &self.horizons, self.floor, self.cfg, cost)
    }

    fn bounds(&self, z: &[f64]) -> (f64, f64) {
        let j = z.len();
        let q = j % self.n;
        let lower = prev_same(z, self.n, j);
        let mut upper = self.horizons[q];
        if let Some(t) = self.cfg.deadline {
            let latest = latest_of(self.n, z);
            let others: Vec<f64> =
                latest.iter().enumerate().filter(|(i, _)| *i != q).map(|(_, v)| *v).collect();
            upper = upper.min(deadline_completion(&others, t));
        }
        (lower, upper.max(lower))
    }

    fn turn(&self, z: &[f64]) -> f64 {
        zeta_turn_cost(z, self.n, z.len() - 1, self.profiles, self.cost)
    }

    fn record(&mut self, cost: f64, z: &[f64]) {
        let better = match &self.best {
            None => true,
            Some((bc, bz)) => compare_found(cost, z, *bc, bz, self.n) == Ordering::Less,
        };
        if better {
            self.best = Some((cost, z.to_vec()));
            if self.cfg.cutoffs {
                self.thresh = self.thresh.min(cost);
            }
        }
    }

    fn over(&self, cost: f64) -> bool {
        self.cfg.cutoffs && cost > self.thresh * (1.0 + 1e-12)
    }

    // Candidate values for the next entry, ascending; the flag marks a skip.
    fn children(&self, z: &[f64], nskip: usize) -> Vec<(f64, bool)> {
        let n = self.n;
        let (lower, upper) = self.bounds(z);
        let mut out = Vec::new();
        if n >= 3 && nskip < n - 1 {
            out.push((lower, true));
        }
        if upper <= lower {
            if out.is_empty() {
                // The process cannot advance; pass the turn without counting a skip.
                out.push((lower, false));
            }
            return out;
        }
        let values = if let Some(atoms) = &self.atoms {
            let mut v: Vec<f64> =
                atoms[z.len() % n].iter().copied().filter(|x| *x > lower && *x < upper).collect();
            v.push(upper);
            v
        } else {
            self.chain_values(z, upper)
        };
        out.extend(values.into_iter().map(|x| (x, false)));
        out
    }

    fn chain_values(&self, z: &[f64], upper: f64) -> Vec<f64> {
        let n = self.n;
        let k = z.len();
        let result = if n == 2 {
            let pivot = (k - 1) % 2;
            chain_next_two_with(prev_same(z, 2, k), z[k - 1], pivot, self.profiles, self.cost, upper, &self.cfg.chain)
        } else {
            let start = k as isize - (2 * n - 2) as isize;
            let window: Vec<f64> =
                (start..k as isize).map(|i| if i < 0 { 0.0 } else { z[i as usize] }).collect();
            let first = start.rem_euclid(n as isize) as usize;
            chain_next_n_with(&window, first, self.profiles, upper, &self.cfg.chain)
        };
        match result {
            Ok(r) if r.degenerate => vec![upper],
            Ok(r) => r.next_values(),
            Err(_) => vec![upper],
        }
    }

    // Runs every process in turn to its limit; used where the tree is cut short.
    fn complete_sequentially(&mut self, z: &mut Vec<f64>, mut cost: f64) {
        let start = z.len();
        for _ in 0..2 * self.n + 2 {
            if self.is_done(z, cost) {
                break;
            }
            let (_, upper) = self.bounds(z);
            z.push(upper);
            cost += self.turn(z);
        }
        self.record(cost, z);
        z.truncate(start);
        self.hit_limit = true;
    }

    fn node(&mut self, z: &mut Vec<f64>, cost: f64, nskip: usize, depth: usize) {
        if depth >= self.depth_limit || self.stats.expanded >= self.cfg.node_budget {
            self.note(depth, z, cost, NodeDecision::DepthLimit);
            self.complete_sequentially(z, cost);
            return;
        }
        self.stats.expanded += 1;
        self.note(depth, z, cost, NodeDecision::Expand);
        for (x, skip) in self.children(z, nskip) {
            z.push(x);
            let c = cost + self.turn(z);
            if self.over(c) {
                self.stats.cutoffs += 1;
                self.note(depth + 1, z, c, NodeDecision::Cutoff);
                z.pop();
                // Later candidates are larger and only cost more.
                if skip {
                    continue;
                }
                break;
            }
            if self.is_done(z, c) {
                self.stats.leaves += 1;
                self.note(depth + 1, z, c, NodeDecision::Leaf);
                self.record(c, z);
                z.pop();
                if skip {
                    continue;
                }
                break;
            }
            if skip {
                self.stats.skips += 1;
                self.note(depth + 1, z, c, NodeDecision::Skip);
            }
            self.node(z, c, if skip { nskip + 1 } else { 0 }, depth + 1);
            z.pop();
        }
    }

    // Iteratively deepened search below `prefix`.
    fn run(&mut self, prefix: &[f64], prefix_cost: f64, nskip: usize, thresh: f64) {
        let mut limit = self.cfg.start_depth.min(self.cfg.max_depth);
        loop {
            self.depth_limit = limit;
            self.reset(thresh);
            if let Some(t) = self.trace.as_mut() {
                t.clear();
            }
            let mut z = prefix.to_vec();
            if self.over(prefix_cost) {
                self.stats.cutoffs += 1;
                self.note(0, &z, prefix_cost, NodeDecision::Cutoff);
            } else if self.is_done(&z, prefix_cost) {
                self.stats.leaves += 1;
                self.note(0, &z, prefix_cost, NodeDecision::Leaf);
                self.record(prefix_cost, &z);
            } else {
                self.node(&mut z, prefix_cost, nskip, 0);
            }
            if !self.hit_limit || limit >= self.cfg.max_depth {
                return;
            }
            limit = (limit * 2).min(self.cfg.max_depth);
        }
    }
}

fn prefix_cost(z: &[f64], profiles: &[Profile], cost: &CostModel) -> f64 {
    (0..z.len()).map(|j| zeta_turn_cost(z, profiles.len(), j, profiles, cost)).sum()
}

fn check_inputs(profiles: &[Profile], cost: &CostModel, cfg: &OptimizerConfig) -> Result<()> {
    cfg.validate()?;
    if profiles.is_empty() {
        return Err(domain("at least one process is required"));
    }
    if profiles.len() != 2 && !cost.is_linear() {
        return Err(Error::Unsupported("general cost models are supported for two processes only".into()));
    }
    Ok(())
}

/// Branch and bound below a fixed prefix. `curr_cost` is the expected cost of
/// the prefix and `thresh` the best cost known so far; `nskip` counts the
/// consecutive zero-length turns that end the prefix.
pub fn dfsbnb(
    prefix: &ZetaSequence,
    curr_cost: f64,
    thresh: f64,
    nskip: usize,
    cfg: &OptimizerConfig,
    profiles: &[Profile],
    cost: &CostModel,
) -> Result<BranchOutcome> {
    check_inputs(profiles, cost, cfg)?;
    if prefix.n_processes() != profiles.len() {
        return Err(domain("prefix and profiles disagree on the number of processes"));
    }
    let horizons = effective_horizons(profiles, cfg)?;
    let mut s = Search::new(profiles, cost, cfg, horizons);
    if thresh <= 0.0 {
        s.stats.cutoffs += 1;
        return Ok(BranchOutcome { cost: f64::INFINITY, best: None, stats: s.stats, approximate: false });
    }
    s.run(prefix.values(), curr_cost, nskip, thresh);
    let best = match s.best {
        Some((c, mut z)) => {
            trim_trailing_skips(&mut z, profiles.len());
            Some((c, ZetaSequence::new(profiles.len(), z)?))
        }
        None => None,
    };
    Ok(BranchOutcome {
        cost: best.as_ref().map_or(f64::INFINITY, |b| b.0),
        best: best.map(|b| b.1),
        stats: s.stats,
        approximate: s.hit_limit,
    })
}

#[derive(Debug, Clone)]
struct Found {
    cost: f64,
    zetas: Vec<f64>,
    approximate: bool,
    stats: NodeStats,
}

struct Outer<'a> {
    profiles: &'a [Profile],
    cost: &'a CostModel,
    cfg: &'a OptimizerConfig,
    horizons: Vec<f64>,
    n: usize,
}

impl Outer<'_> {
    fn search(&self) -> Search<'_> {
        Search::new(self.profiles, self.cost, self.cfg, self.horizons.clone())
    }

    // Builds the prefix for starting process `start` from free values given as
    // fractions of each entry's feasible range.
    fn prefix(&self, start: usize, fractions: &[f64]) -> Vec<f64> {
        let s = self.search();
        let mut z = vec![0.0; start];
        for &u in fractions {
            let (lo, hi) = s.bounds(&z);
            z.push(if u >= 1.0 { hi } else { lo + u * (hi - lo) });
        }
        z
    }

    fn evaluate(&self, z: &[f64], trace: bool) -> Option<(Found, Vec<TraceLine>)> {
        let mut s = self.search();
        if trace {
            s.trace = Some(Vec::new());
        }
        let pc = prefix_cost(z, self.profiles, self.cost);
        let nskip = z.iter().rev().enumerate().take_while(|(i, v)| {
            let j = z.len() - 1 - i;
            **v <= prev_same(z, self.n, j)
        }).count();
        s.run(z, pc, nskip.min(self.n.saturating_sub(2)), f64::INFINITY);
        let (cost, zetas) = s.best?;
        Some((Found { cost, zetas, approximate: s.hit_limit, stats: s.stats }, s.trace.unwrap_or_default()))
    }

    fn evaluate_fractions(&self, start: usize, u: &[f64]) -> Option<Found> {
        self.evaluate(&self.prefix(start, u), false).map(|r| r.0)
    }
}

fn pick(best: &mut Option<Found>, cand: Found, n: usize) {
    let replace = match best {
        None => true,
        Some(b) => compare_found(cand.cost, &cand.zetas, b.cost, &b.zetas, n) == Ordering::Less,
    };
    let mut stats = cand.stats;
    if let Some(b) = best.as_ref() {
        stats.absorb(&b.stats);
    }
    if replace {
        *best = Some(Found { stats, ..cand });
    } else if let Some(b) = best.as_mut() {
        b.stats = stats;
        b.approximate |= cand.approximate;
    }
}

/// Cheapest suspend-resume schedule over every starting process.
pub fn optimize(profiles: &[Profile], cost: &CostModel, cfg: &OptimizerConfig) -> Result<OptimalScheduleResult> {
    check_inputs(profiles, cost, cfg)?;
    let n = profiles.len();
    let outer = Outer { profiles, cost, cfg, horizons: effective_horizons(profiles, cfg)?, n };

    let mut best: Option<Found> = None;
    if n == 1 {
        let z = vec![outer.search().bounds(&[]).1];
        let c = prefix_cost(&z, profiles, cost);
        best = Some(Found { cost: c, zetas: z, approximate: false, stats: NodeStats::default() });
    } else {
        let dims = 2 * n - 3;
        for start in 0..n {
            let found = if uses_atoms(profiles, cfg) {
                optimize_atomic(&outer, start, dims)
            } else {
                optimize_continuous(&outer, start, dims)
            };
            if let Some(f) = found {
                pick(&mut best, f, n);
            }
        }
    }

    let found = best.ok_or_else(|| Error::NoSchedule("no branch produced a complete schedule".into()))?;
    let mut zetas = found.zetas.clone();
    let mut trace = Vec::new();
    if cfg.trace && n > 1 {
        let start = zetas.iter().take_while(|v| **v == 0.0).count().min(n - 1);
        let free = (start + 2 * n - 3).min(zetas.len());
        if let Some((_, t)) = outer.evaluate(&zetas[..free], true) {
            trace = t;
        }
    }
    trim_trailing_skips(&mut zetas, n);
    let first_process = zetas.iter().position(|v| *v > 0.0).map_or(0, |j| j % n);
    let seq = ZetaSequence::new(n, zetas)?;
    let expected_cost = expected_cost_zeta(&seq, profiles, cost)?;
    Ok(OptimalScheduleResult {
        zetas: seq,
        expected_cost,
        first_process,
        node_stats: found.stats,
        approximate: found.approximate,
        trace,
    })
}

// Exhaustive enumeration of the free entries over atom locations.
fn optimize_atomic(outer: &Outer, start: usize, dims: usize) -> Option<Found> {
    let s = outer.search();
    let mut prefixes = vec![vec![0.0; start]];
    for _ in 0..dims {
        let mut next = Vec::new();
        for z in &prefixes {
            let (lo, hi) = s.bounds(z);
            let q = z.len() % outer.n;
            let mut vals: Vec<f64> = atom_points(&outer.profiles[q])
                .into_iter()
                .filter(|x| *x > lo && *x < hi)
                .collect();
            vals.push(hi);
            if outer.n >= 3 {
                vals.insert(0, lo);
            }
            vals.dedup();
            for v in vals {
                let mut c = z.clone();
                c.push(v);
                next.push(c);
            }
        }
        prefixes = next;
    }
    let results: Vec<Option<Found>> =
        prefixes.par_iter().map(|z| outer.evaluate(z, false).map(|r| r.0)).collect();
    let mut best = None;
    for f in results.into_iter().flatten() {
        pick(&mut best, f, outer.n);
    }
    best
}

const MAX_KINK_SEEDS: usize = 16;

fn optimize_continuous(outer: &Outer, start: usize, dims: usize) -> Option<Found> {
    let cfg = outer.cfg;
    let per_axis = if dims == 1 {
        cfg.outer_grid
    } else {
        let cap = (cfg.outer_budget as f64).powf(1.0 / dims as f64).floor() as usize;
        cfg.outer_grid.min(cap.max(8))
    };
    // A zero fraction is a skip; for two processes that case is the other start.
    let first = if outer.n >= 3 { 0 } else { 1 };
    let axis: Vec<f64> = (first..=per_axis).map(|k| k as f64 / per_axis as f64).collect();

    // Kinks of the first run's profile are likely optima the grid can step over.
    let mut lead = axis.clone();
    let mut kinks = Vec::new();
    let (lo, hi) = outer.search().bounds(&vec![0.0; start]);
    if hi > lo {
        outer.profiles[start].family().breakpoints(lo, hi, &mut kinks);
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        kinks.iter_mut().for_each(|k| *k = (*k - lo) / (hi - lo));
        let stride = kinks.len().div_ceil(MAX_KINK_SEEDS).max(1);
        lead.extend(kinks.iter().step_by(stride));
    }

    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for d in 0..dims {
        let values = if d == 0 { &lead } else { &axis };
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |u| {
                    let mut q = p.clone();
                    q.push(*u);
                    q
                })
            })
            .collect();
    }
    let results: Vec<Option<Found>> =
        points.par_iter().map(|u| outer.evaluate_fractions(start, u)).collect();

    let mut best: Option<Found> = None;
    let mut best_u: Option<Vec<f64>> = None;
    for (u, f) in points.iter().zip(results) {
        if let Some(f) = f {
            let before = best.as_ref().map(|b| (b.cost, b.zetas.clone()));
            pick(&mut best, f, outer.n);
            if best.as_ref().map(|b| (b.cost, b.zetas.clone())) != before {
                best_u = Some(u.clone());
            }
        }
    }
    let mut u = best_u?;

    // Coordinate-wise golden refinement around the best grid point.
    let step = 1.0 / per_axis as f64;
    for _round in 0..3 {
        let mut improved = false;
        for d in 0..dims {
            let lo = (u[d] - step).max(0.0);
            let hi = (u[d] + step).min(1.0);
            let mut local_best: Option<(f64, Found)> = None;
            golden_section(
                |x| {
                    let mut v = u.clone();
                    v[d] = x;
                    match outer.evaluate_fractions(start, &v) {
                        Some(f) => {
                            let c = f.cost;
                            let keep = match &local_best {
                                None => true,
                                Some((_, b)) => compare_found(c, &f.zetas, b.cost, &b.zetas, outer.n) == Ordering::Less,
                            };
                            if keep {
                                local_best = Some((x, f));
                            }
                            c
                        }
                        None => f64::INFINITY,
                    }
                },
                lo,
                hi,
                cfg.outer_refine_tol,
            );
            // Golden section only gets within tolerance of a kink; try the kinks exactly.
            if d == 0 {
                for &k in kinks.iter().filter(|k| (lo..=hi).contains(*k)) {
                    let mut v = u.clone();
                    v[0] = k;
                    if let Some(f) = outer.evaluate_fractions(start, &v) {
                        let keep = match &local_best {
                            None => true,
                            Some((_, b)) => compare_found(f.cost, &f.zetas, b.cost, &b.zetas, outer.n) == Ordering::Less,
                        };
                        if keep {
                            local_best = Some((k, f));
                        }
                    }
                }
            }
            if let Some((x, f)) = local_best {
                let b = best.as_ref().expect("grid produced a candidate");
                if compare_found(f.cost, &f.zetas, b.cost, &b.zetas, outer.n) == Ordering::Less {
                    improved = true;
                    u[d] = x;
                }
                pick(&mut best, f, outer.n);
            }
        }
        if !improved || dims == 1 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms_pair() -> Vec<Profile> {
        let fam = Family::atoms(vec![10.0, 40.0, 160.0], vec![0.5, 0.25, 0.25]).unwrap();
        let p = Profile::new(fam, 1.0).unwrap();
        vec![p.clone(), p]
    }

    #[test]
    fn tie_break_prefers_fewer_segments_then_first_process() {
        assert_eq!(compare_found(1.0, &[1.0, 1.0], 1.0, &[2.0], 2), Ordering::Greater);
        assert_eq!(compare_found(1.0, &[2.0], 1.0, &[0.0, 2.0], 2), Ordering::Less);
        assert_eq!(compare_found(0.9, &[1.0, 1.0], 1.0, &[2.0], 2), Ordering::Less);
    }

    #[test]
    fn zero_threshold_cuts_immediately() {
        let profs = atoms_pair();
        let z = ZetaSequence::new(2, vec![10.0]).unwrap();
        let out = dfsbnb(&z, 5.0, 0.0, 0, &OptimizerConfig::default(), &profs, &CostModel::time()).unwrap();
        assert!(out.cost.is_infinite());
        assert!(out.best.is_none());
    }

    #[test]
    fn accomplished_conditions() {
        let profs = atoms_pair();
        let cfg = OptimizerConfig::default();
        let fresh = ZetaSequence::new(2, vec![0.0]).unwrap();
        assert!(!task_accomplished(&fresh, &cfg, &profs, 0.0).unwrap());
        let done = ZetaSequence::new(2, vec![160.0, 160.0]).unwrap();
        assert!(task_accomplished(&done, &cfg, &profs, 0.0).unwrap());
        assert!(task_accomplished(&fresh, &cfg, &profs, 2e9).unwrap());
        let cfg_t = OptimizerConfig { deadline: Some(20.0), ..OptimizerConfig::default() };
        let z = ZetaSequence::new(2, vec![10.0, 10.0]).unwrap();
        assert!(task_accomplished(&z, &cfg_t, &profs, 0.0).unwrap());
    }

    #[test]
    fn single_process_runs_to_horizon() {
        let p = Profile::new(Family::Uniform { lo: 0.0, hi: 1.0 }, 1.0).unwrap();
        let r = optimize(&[p.clone()], &CostModel::time(), &OptimizerConfig::default()).unwrap();
        assert_eq!(r.zetas.values(), &[p.horizon()]);
        assert!((r.expected_cost - p.integrate_survival(0.0, p.horizon()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn general_cost_rejected_for_three() {
        #[derive(Debug)]
        struct Quad;
        impl crate::cost::CostFunction for Quad {
            fn value(&self, t: f64, _s: &[f64]) -> f64 {
                t * t
            }
            fn d_t(&self, t: f64, _s: &[f64]) -> f64 {
                2.0 * t
            }
            fn d_sigma(&self, _i: usize, _t: f64, _s: &[f64]) -> f64 {
                0.0
            }
        }
        let p = Profile::new(Family::Uniform { lo: 0.0, hi: 1.0 }, 1.0).unwrap();
        let cost = CostModel::General(std::sync::Arc::new(Quad));
        let r = optimize(&[p.clone(), p.clone(), p], &cost, &OptimizerConfig::default());
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }
}
