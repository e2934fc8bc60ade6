//! Partially filled Latin squares: generation, a First-Fail depth-first
//! solver that counts search steps, and profile building from solver runs.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cost::{expected_cost, CostModel, Schedule};
use crate::error::{domain, Error, Result};
use crate::profiles::{fit_empirical, Profile, Sample};
use crate::simulator::{McEstimate, QualityBasis, StrategyReport, Timeline};

/// Largest supported order; domains are bit sets in a `u64`.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatinInstance {
    n: usize,
    // Row-major, 0 for empty, otherwise a symbol in 1..=n.
    cells: Vec<u8>,
    seed: u64,
}

impl LatinInstance {
    /// Wraps a grid, rejecting symbols out of range and repeated symbols in a
    /// row or column.
    pub fn new(n: usize, cells: Vec<u8>) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(domain(format!("order must lie in 1..={MAX_ORDER}")));
        }
        if cells.len() != n * n {
            return Err(domain(format!("expected {} cells, got {}", n * n, cells.len())));
        }
        let mut rows = vec![0u64; n];
        let mut cols = vec![0u64; n];
        for (k, &v) in cells.iter().enumerate() {
            if v == 0 {
                continue;
            }
            if v as usize > n {
                return Err(domain(format!("symbol {v} out of range 1..={n}")));
            }
            let bit = 1u64 << (v - 1);
            let (r, c) = (k / n, k % n);
            if rows[r] & bit != 0 || cols[c] & bit != 0 {
                return Err(domain(format!("symbol {v} repeats at row {r}, column {c}")));
            }
            rows[r] |= bit;
            cols[c] |= bit;
        }
        Ok(LatinInstance { n, cells, seed: 0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.n + col]
    }

    pub fn filled(&self) -> usize {
        self.cells.iter().filter(|v| **v != 0).count()
    }

    /// Every row and column is a permutation of 1..=n.
    pub fn is_complete(&self) -> bool {
        let full = full_mask(self.n);
        (0..self.n).all(|i| {
            let row = (0..self.n).fold(0u64, |m, j| m | bit_of(self.get(i, j)));
            let col = (0..self.n).fold(0u64, |m, j| m | bit_of(self.get(j, i)));
            row == full && col == full
        })
    }
}

impl fmt::Display for LatinInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for r in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn bit_of(v: u8) -> u64 {
    if v == 0 {
        0
    } else {
        1u64 << (v - 1)
    }
}

/// Places `round(fill_fraction * n^2)` symbols at random cells, each chosen
/// among the symbols still allowed there.
pub fn generate_instance(n: usize, fill_fraction: f64, seed: u64) -> Result<LatinInstance> {
    if !(2..=MAX_ORDER).contains(&n) {
        return Err(domain(format!("order must lie in 2..={MAX_ORDER}")));
    }
    if !(0.0..1.0).contains(&fill_fraction) {
        return Err(domain("fill fraction must lie in [0, 1)"));
    }
    let target = (fill_fraction * (n * n) as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n * n).collect();
    order.shuffle(&mut rng);
    let mut cells = vec![0u8; n * n];
    let mut rows = vec![0u64; n];
    let mut cols = vec![0u64; n];
    let full = full_mask(n);
    let mut placed = 0;
    for k in order {
        if placed == target {
            break;
        }
        let (r, c) = (k / n, k % n);
        let allowed = full & !(rows[r] | cols[c]);
        if allowed == 0 {
            continue;
        }
        let pick = rng.random_range(0..allowed.count_ones());
        let mut m = allowed;
        for _ in 0..pick {
            m &= m - 1;
        }
        let bit = m & m.wrapping_neg();
        cells[k] = bit.trailing_zeros() as u8 + 1;
        rows[r] |= bit;
        cols[c] |= bit;
        placed += 1;
    }
    if placed < target {
        return Err(Error::Generation(format!("placed {placed} of {target} symbols")));
    }
    Ok(LatinInstance { n, cells, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    Unsatisfiable,
    CutOff,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Assignments attempted.
    pub steps: u64,
    pub solution: Option<LatinInstance>,
}

struct Solver {
    n: usize,
    cells: Vec<u8>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    full: u64,
    steps: u64,
    cap: u64,
}

enum Search {
    Found,
    Exhausted,
    CutOff,
}

impl Solver {
    fn domain(&self, k: usize) -> u64 {
        self.full & !(self.rows[k / self.n] | self.cols[k % self.n])
    }

    // Empty cell with the fewest values (first in row-major order on ties);
    // `Err` on a wipe-out, `Ok(None)` when the grid is full.
    fn select(&self) -> std::result::Result<Option<(usize, u64)>, ()> {
        let mut best: Option<(usize, u64, u32)> = None;
        for k in 0..self.cells.len() {
            if self.cells[k] != 0 {
                continue;
            }
            let d = self.domain(k);
            let size = d.count_ones();
            if size == 0 {
                return Err(());
            }
            if best.is_none_or(|b| size < b.2) {
                best = Some((k, d, size));
                if size == 1 {
                    break;
                }
            }
        }
        Ok(best.map(|b| (b.0, b.1)))
    }

    // Forward check: no empty cell in the row or column of `k` is left without values.
    fn consistent_after(&self, k: usize) -> bool {
        let (r, c) = (k / self.n, k % self.n);
        (0..self.n).all(|j| {
            let a = r * self.n + j;
            let b = j * self.n + c;
            (self.cells[a] != 0 || self.domain(a) != 0) && (self.cells[b] != 0 || self.domain(b) != 0)
        })
    }

    fn search(&mut self) -> Search {
        let (k, mut dom) = match self.select() {
            Err(()) => return Search::Exhausted,
            Ok(None) => return Search::Found,
            Ok(Some(x)) => x,
        };
        let (r, c) = (k / self.n, k % self.n);
        while dom != 0 {
            let bit = dom & dom.wrapping_neg();
            dom &= dom - 1;
            if self.steps >= self.cap {
                return Search::CutOff;
            }
            self.steps += 1;
            self.cells[k] = bit.trailing_zeros() as u8 + 1;
            self.rows[r] |= bit;
            self.cols[c] |= bit;
            if self.consistent_after(k) {
                match self.search() {
                    Search::Exhausted => {}
                    other => return other,
                }
            }
            self.cells[k] = 0;
            self.rows[r] &= !bit;
            self.cols[c] &= !bit;
        }
        Search::Exhausted
    }
}

/// Depth-first search with the First-Fail variable order, ascending values
/// and forward checking. Gives up after `step_cap` assignments.
pub fn solve_first_fail(inst: &LatinInstance, step_cap: u64) -> SolveOutcome {
    let n = inst.n;
    let mut rows = vec![0u64; n];
    let mut cols = vec![0u64; n];
    for (k, &v) in inst.cells.iter().enumerate() {
        rows[k / n] |= bit_of(v);
        cols[k % n] |= bit_of(v);
    }
    let mut s = Solver { n, cells: inst.cells.clone(), rows, cols, full: full_mask(n), steps: 0, cap: step_cap.max(1) };
    let status = match s.search() {
        Search::Found => SolveStatus::Solved,
        Search::Exhausted => SolveStatus::Unsatisfiable,
        Search::CutOff => SolveStatus::CutOff,
    };
    let solution = (status == SolveStatus::Solved).then(|| LatinInstance { n, cells: s.cells, seed: inst.seed });
    SolveOutcome { status, steps: s.steps, solution }
}

/// Instance parameters shared by profile building and pair evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workload {
    pub n: usize,
    pub fill: f64,
    pub step_cap: u64,
}

fn instance_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

// Instances whose generation fails are redrawn with the next sub-seed.
fn instance_at(w: &Workload, seed: u64, index: u64) -> Result<LatinInstance> {
    let mut s = instance_seed(seed, index);
    for _ in 0..64 {
        match generate_instance(w.n, w.fill, s) {
            Ok(inst) => return Ok(inst),
            Err(Error::Generation(_)) => s = s.wrapping_add(0x9e37_79b9_7f4a_7c15),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation("could not generate an instance".into()))
}

/// Solves `n_samples` fresh instances and returns one sample per instance;
/// unsatisfiable and cut-off runs both count as unsolved.
pub fn collect_samples(w: &Workload, n_samples: usize, seed: u64) -> Result<Vec<Sample>> {
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let inst = instance_at(w, seed, i)?;
            let out = solve_first_fail(&inst, w.step_cap);
            Ok(Sample { steps: out.steps, solved: out.status == SolveStatus::Solved })
        })
        .collect()
}

pub fn build_profile(w: &Workload, n_samples: usize, seed: u64) -> Result<Profile> {
    if n_samples < 100 {
        return Err(domain("at least 100 samples are required"));
    }
    let samples = collect_samples(w, n_samples, seed)?;
    fit_empirical(&samples, w.step_cap)
}

#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub report: StrategyReport,
    /// Per strategy, the cost observed on every pair.
    pub costs: Vec<Vec<f64>>,
}

impl PairEvaluation {
    fn index(&self, name: &str) -> Option<usize> {
        self.report.rows.iter().position(|r| r.name == name)
    }

    /// Standard error of the mean per-pair difference between two strategies.
    pub fn paired_stderr(&self, a: &str, b: &str) -> Option<f64> {
        let (xa, xb) = (&self.costs[self.index(a)?], &self.costs[self.index(b)?]);
        let d: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x - y).collect();
        Some(mean_stderr(&d).stderr)
    }
}

fn mean_stderr(xs: &[f64]) -> McEstimate {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    McEstimate { mean, stderr: (var / m).sqrt() }
}

/// Runs every schedule on freshly drawn instance pairs, using each pair's
/// actual solve lengths as goal times.
pub fn evaluate_pairs(
    profile: &Profile,
    strategies: &[(String, Schedule)],
    w: &Workload,
    n_pairs: usize,
    seed: u64,
    reference: &str,
) -> Result<PairEvaluation> {
    if n_pairs == 0 {
        return Err(domain("at least one pair is required"));
    }
    if strategies.iter().any(|(_, s)| s.n_processes() != 2) {
        return Err(domain("pair strategies schedule two processes"));
    }
    let goals: Vec<[f64; 2]> = (0..n_pairs as u64)
        .into_par_iter()
        .map(|i| {
            let g = |k: u64| -> Result<f64> {
                let inst = instance_at(w, seed, 2 * i + k)?;
                let out = solve_first_fail(&inst, w.step_cap);
                Ok(if out.status == SolveStatus::Solved { out.steps as f64 } else { f64::INFINITY })
            };
            Ok([g(0)?, g(1)?])
        })
        .collect::<Result<_>>()?;
    let time = CostModel::time();
    let profiles = [profile.clone(), profile.clone()];
    let mut entries = Vec::new();
    let mut costs = Vec::new();
    for (name, sch) in strategies {
        let tl = Timeline::new(sch);
        let c: Vec<f64> = goals.iter().map(|g| tl.finish_cost(g, &time)).collect();
        let analytic = expected_cost(sch, &profiles, &time, None)?;
        entries.push((name.clone(), analytic, Some(mean_stderr(&c))));
        costs.push(c);
    }
    let report = StrategyReport::new(reference, QualityBasis::Simulated, entries)?;
    Ok(PairEvaluation { report, costs })
}
