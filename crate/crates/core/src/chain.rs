//! Chain equations: stationarity conditions that determine the next switch
//! point from the preceding ones.

use crate::cost::CostModel;
use crate::error::{domain, Error, Result};
use crate::numeric::{bisect, integrate};
use crate::profiles::Profile;

#[derive(Debug, Clone, Copy)]
pub struct ChainSettings {
    /// Sign-change scan resolution over the search interval.
    pub grid: usize,
    /// Bisection tolerance relative to the upper limit.
    pub eps_root: f64,
    /// A residual whose grid maximum stays below this fraction of its terms
    /// is treated as identically zero.
    pub eps_degenerate: f64,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings { grid: 512, eps_root: 1e-10, eps_degenerate: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    /// Roots in `(lower, upper]`, ascending.
    pub roots: Vec<f64>,
    /// The residual vanishes over the whole range: every point is stationary.
    pub degenerate: bool,
    pub upper: f64,
}

impl ChainResult {
    /// Values visited by the search: every root, then the upper limit (the
    /// fallback when no further root exists).
    pub fn next_values(&self) -> Vec<f64> {
        let mut out = self.roots.clone();
        if out.last().is_none_or(|r| *r < self.upper) {
            out.push(self.upper);
        }
        out
    }
}

fn scan_roots<G>(
    g: G,
    lower: f64,
    upper: f64,
    mut extra: Vec<f64>,
    settings: &ChainSettings,
) -> (Vec<f64>, bool)
where
    G: Fn(f64) -> (f64, f64),
{
    if !(upper > lower) {
        return (Vec::new(), false);
    }
    let n = settings.grid.max(2);
    let width = upper - lower;
    let mut pts: Vec<f64> = (1..=n).map(|k| lower + width * k as f64 / n as f64).collect();
    let on_grid = pts.len();
    extra.retain(|x| *x > lower && *x < upper);
    pts.extend(extra);
    let vals: Vec<(f64, f64)> = pts.iter().map(|&x| g(x)).collect();

    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in (1..on_grid).step_by(2) {
        worst = worst.max(vals[k].0.abs());
        scale = scale.max(vals[k].1);
    }
    if worst <= settings.eps_degenerate * scale || (worst == 0.0 && scale == 0.0) {
        return (Vec::new(), true);
    }

    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].total_cmp(&pts[b]));
    order.dedup_by(|a, b| pts[*a] == pts[*b]);

    let tol = settings.eps_root * upper.abs().max(f64::MIN_POSITIVE);
    let mut roots = Vec::new();
    for w in order.windows(2) {
        let (xa, (ga, _)) = (pts[w[0]], vals[w[0]]);
        let (xb, (gb, _)) = (pts[w[1]], vals[w[1]]);
        if gb == 0.0 {
            if ga != 0.0 {
                roots.push(xb);
            }
        } else if ga != 0.0 && (ga < 0.0) != (gb < 0.0) {
            let r = bisect(|x| g(x).0, xa, xb, ga, tol);
            // Reject sign flips caused by jumps rather than zeros.
            if g(r).0.abs() <= 1e-3 * ga.abs().max(gb.abs()) {
                roots.push(r);
            }
        }
    }
    if let Some(&(g0, _)) = order.first().map(|&i| &vals[i]) {
        if g0 == 0.0 && pts[order[0]] > lower && roots.first() != Some(&pts[order[0]]) {
            roots.insert(0, pts[order[0]]);
        }
    }
    (roots, false)
}

fn pivot_hazard(profiles: &[Profile], proc: usize, at: f64) -> Result<f64> {
    profiles[proc].hazard(at).ok_or(Error::Saturated(proc))
}

/// Both sides of the two-process condition for candidate `x`: the pivot's
/// hazard and the ratio it must equal.
pub fn chain_sides_two(
    z_prev: f64,
    z_cur: f64,
    pivot: usize,
    x: f64,
    profiles: &[Profile],
    cost: &CostModel,
) -> Result<(f64, f64)> {
    let h = pivot_hazard(profiles, pivot, z_cur)?;
    let (num, den) = two_terms(z_prev, z_cur, pivot, x, profiles, cost);
    Ok((h, num / den))
}

// Numerator and denominator of the two-process condition.
fn two_terms(
    a: f64,
    zc: f64,
    pivot: usize,
    x: f64,
    profiles: &[Profile],
    cost: &CostModel,
) -> (f64, f64) {
    let other = 1 - pivot;
    let q = &profiles[other];
    let at = |sq: f64| {
        let mut s = [0.0; 2];
        s[pivot] = zc;
        s[other] = sq;
        s
    };
    match cost {
        CostModel::Linear { a: ca, b: cb } => {
            let w = ca + cb;
            (w * (q.survival(a) - q.survival(x)), w * q.survival_area(a, x))
        }
        CostModel::General(_) => {
            let tol = 1e-13 * (x - a).abs().max(1.0);
            let den = integrate(|y| cost.turn_weight(other, at(y)) * q.survival(y), a, x, tol);
            let cross =
                integrate(|y| cost.turn_weight_cross(other, at(y)) * q.survival(y), a, x, tol);
            let num = cost.turn_weight(pivot, at(a)) * q.survival(a)
                - cost.turn_weight(pivot, at(x)) * q.survival(x)
                + cross;
            (num, den)
        }
    }
}

/// Next switch point of the non-pivot process of a pair.
///
/// `pivot` owns `z_cur`; the other process last stopped at `z_prev` and the
/// roots are its candidate next stops in `(z_prev, upper]`.
pub fn chain_next_two(
    z_prev: f64,
    z_cur: f64,
    pivot: usize,
    profiles: &[Profile],
    cost: &CostModel,
    upper: f64,
) -> Result<ChainResult> {
    chain_next_two_with(z_prev, z_cur, pivot, profiles, cost, upper, &ChainSettings::default())
}

pub fn chain_next_two_with(
    z_prev: f64,
    z_cur: f64,
    pivot: usize,
    profiles: &[Profile],
    cost: &CostModel,
    upper: f64,
    settings: &ChainSettings,
) -> Result<ChainResult> {
    if profiles.len() != 2 || pivot > 1 {
        return Err(domain("two-process chain needs two profiles and pivot 0 or 1"));
    }
    if !(z_prev >= 0.0 && z_cur >= 0.0) {
        return Err(domain("switch points must be non-negative"));
    }
    let h = pivot_hazard(profiles, pivot, z_cur)?;
    let other = 1 - pivot;
    let mut extra = Vec::new();
    profiles[other].family().breakpoints(z_prev, upper, &mut extra);
    let (roots, degenerate) = scan_roots(
        |x| {
            let (num, den) = two_terms(z_prev, z_cur, pivot, x, profiles, cost);
            (h * den - num, (h * den).abs().max(num.abs()))
        },
        z_prev,
        upper,
        extra,
        settings,
    );
    Ok(ChainResult { roots, degenerate, upper })
}

// Window bookkeeping for the n-process condition. `z` holds the 2n-2 known
// values followed by the unknown; entry i belongs to process (first + i) % n.
struct NWindow<'a> {
    n: usize,
    first: usize,
    profiles: &'a [Profile],
    hazard: f64,
    // Constant parts of the condition, and the factors multiplying the terms
    // that depend on the unknown.
    before: f64,
    after_fixed: f64,
    den_fixed: f64,
    den_factor: f64,
    lower: f64,
}

impl<'a> NWindow<'a> {
    fn new(window: &[f64], first: usize, profiles: &'a [Profile]) -> Result<Self> {
        let n = profiles.len();
        if n < 2 {
            return Err(domain("chain needs at least two processes"));
        }
        if window.len() != 2 * n - 2 || first >= n {
            return Err(domain(format!("window must hold {} values", 2 * n - 2)));
        }
        let proc = |i: usize| (first + i) % n;
        let surv = |i: usize| profiles[proc(i)].survival(window[i]);
        let pivot = n - 1;
        let hazard = pivot_hazard(profiles, proc(pivot), window[pivot])?;
        let before: f64 = (0..n - 1).map(surv).product();
        let after_fixed: f64 = (n..2 * n - 2).map(surv).product();
        let mut den_fixed = 0.0;
        for r in n..2 * n - 2 {
            let coef: f64 = (r + 1 - n..r).filter(|&i| i != pivot).map(surv).product();
            den_fixed += coef * profiles[proc(r)].survival_area(window[r - n], window[r]);
        }
        let last = 2 * n - 2;
        let den_factor: f64 = (last + 1 - n..last).filter(|&i| i != pivot).map(surv).product();
        Ok(NWindow {
            n,
            first,
            profiles,
            hazard,
            before,
            after_fixed,
            den_fixed,
            den_factor,
            lower: window[n - 2],
        })
    }

    fn unknown_profile(&self) -> &Profile {
        &self.profiles[(self.first + 2 * self.n - 2) % self.n]
    }

    fn terms(&self, x: f64) -> (f64, f64) {
        let prof = self.unknown_profile();
        let num = self.before - self.after_fixed * prof.survival(x);
        let den = self.den_fixed + self.den_factor * prof.survival_area(self.lower, x);
        (num, den)
    }
}

/// Both sides of the n-process condition for candidate `x`.
pub fn chain_sides_n(window: &[f64], first_process: usize, x: f64, profiles: &[Profile]) -> Result<(f64, f64)> {
    let w = NWindow::new(window, first_process, profiles)?;
    let (num, den) = w.terms(x);
    Ok((w.hazard, num / den))
}

/// Candidate values for the entry following a window of the previous `2n - 2`
/// switch points (linear cost). The unknown belongs to the same process as
/// `window[n - 2]` and is searched in `(window[n - 2], upper]`.
pub fn chain_next_n(window: &[f64], first_process: usize, profiles: &[Profile], upper: f64) -> Result<ChainResult> {
    chain_next_n_with(window, first_process, profiles, upper, &ChainSettings::default())
}

pub fn chain_next_n_with(
    window: &[f64],
    first_process: usize,
    profiles: &[Profile],
    upper: f64,
    settings: &ChainSettings,
) -> Result<ChainResult> {
    let w = NWindow::new(window, first_process, profiles)?;
    let mut extra = Vec::new();
    w.unknown_profile().family().breakpoints(w.lower, upper, &mut extra);
    let (roots, degenerate) = scan_roots(
        |x| {
            let (num, den) = w.terms(x);
            (w.hazard * den - num, (w.hazard * den).abs().max(num.abs()))
        },
        w.lower,
        upper,
        extra,
        settings,
    );
    Ok(ChainResult { roots, degenerate, upper })
}

/// Switch point that exhausts a global deadline `t` given the latest
/// subjective times of the other `n - 1` processes. May be infeasible
/// (below the process's previous value); the caller decides.
pub fn deadline_completion(others: &[f64], t: f64) -> f64 {
    t - others.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Family;

    fn uniform_pair() -> Vec<Profile> {
        let p = Profile::new(Family::Uniform { lo: 0.0, hi: 1.0 }, 1.0).unwrap();
        vec![p.clone(), p]
    }

    #[test]
    fn uniform_pair_root() {
        let profs = uniform_pair();
        let up = profs[0].horizon();
        let r = chain_next_two(0.0, 0.2, 1, &profs, &CostModel::time(), up).unwrap();
        assert!(!r.degenerate);
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - 0.4).abs() < 1e-9, "{:?}", r.roots);
    }

    #[test]
    fn exponential_pair_is_degenerate() {
        let p = Profile::new(Family::Exponential { rate: 1.0, shift: 0.0 }, 1.0).unwrap();
        let profs = vec![p.clone(), p];
        let r = chain_next_two(0.3, 0.7, 0, &profs, &CostModel::time(), profs[1].horizon()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.next_values(), vec![profs[1].horizon()]);
    }

    #[test]
    fn deadline_arithmetic() {
        assert_eq!(deadline_completion(&[3.0], 10.0), 7.0);
        assert_eq!(deadline_completion(&[2.0, 3.0], 5.0), 0.0);
        assert_eq!(deadline_completion(&[9.0], 5.0), -4.0);
    }

    #[test]
    fn window_length_checked() {
        let profs = uniform_pair();
        assert!(chain_next_n(&[0.1], 0, &profs, 1.0).is_err());
    }
}
