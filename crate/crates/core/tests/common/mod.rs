//! Independent reference computations shared by the integration tests. They
//! use only pointwise CDF evaluation, never the library's integrators.
#![allow(dead_code)]

use anysched::{Family, Profile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn survival(p: &Profile, t: f64) -> f64 {
    1.0 - p.p() * p.cdf(t)
}

/// Composite Simpson on `m` panels per piece, split at the profile's kinks.
pub fn survival_area(p: &Profile, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut xs = vec![a];
    p.family().breakpoints(a, b, &mut xs);
    xs.push(b);
    xs.sort_by(f64::total_cmp);
    let linear = matches!(p.family(), Family::PiecewiseLinear(_) | Family::Uniform { .. } | Family::Atoms(_));
    let m = if linear { 1 } else { 2000 };
    xs.windows(2)
        .map(|w| {
            let h = (w[1] - w[0]) / m as f64;
            (0..m)
                .map(|k| {
                    let x = w[0] + k as f64 * h;
                    if linear {
                        // Survival is linear or constant between kinks: trapezoid is exact,
                        // taking the right-continuous value at the left end.
                        0.5 * h * (survival(p, x) + survival(p, (x + h).next_down()))
                    } else {
                        h / 6.0 * (survival(p, x) + 4.0 * survival(p, x + 0.5 * h) + survival(p, x + h))
                    }
                })
                .sum::<f64>()
        })
        .sum()
}

/// Expected elapsed time of a suspend-resume schedule given as turns.
pub fn turns_time_cost(turns: &[(usize, f64)], profiles: &[Profile]) -> f64 {
    let mut sigma = vec![0.0; profiles.len()];
    let mut total = 0.0;
    for &(i, d) in turns {
        if d <= 0.0 {
            continue;
        }
        let others: f64 = (0..profiles.len()).filter(|&j| j != i).map(|j| survival(&profiles[j], sigma[j])).product();
        total += others * survival_area(&profiles[i], sigma[i], sigma[i] + d);
        sigma[i] += d;
    }
    total
}

/// Turns of a zeta sequence whose entry `j` belongs to process `j % n`.
pub fn zeta_turns(n: usize, zetas: &[f64]) -> Vec<(usize, f64)> {
    (0..zetas.len())
        .map(|j| (j % n, zetas[j] - if j >= n { zetas[j - n] } else { 0.0 }))
        .collect()
}

/// Random CDF through 2 to 4 knots, reaching 1 at the last.
pub fn random_pwl(rng: &mut ChaCha8Rng) -> Profile {
    let k = rng.random_range(2..=4);
    let mut t = rng.random_range(0.0..2.0);
    let mut f = 0.0;
    let mut knots = vec![(t, 0.0)];
    for i in 1..k {
        t += rng.random_range(0.2..5.0);
        f = if i == k - 1 { 1.0 } else { f + (1.0 - f) * rng.random_range(0.05..0.95) };
        knots.push((t, f));
    }
    Profile::new(Family::piecewise_linear(&knots).unwrap(), 1.0).unwrap()
}

/// Random smooth or piecewise-smooth continuous law.
pub fn random_continuous(rng: &mut ChaCha8Rng) -> Family {
    match rng.random_range(0..4) {
        0 => {
            let lo = rng.random_range(0.0..2.0);
            Family::Uniform { lo, hi: lo + rng.random_range(0.5..4.0) }
        }
        1 => Family::Exponential { rate: rng.random_range(0.2..3.0), shift: rng.random_range(0.0..1.0) },
        2 => Family::TruncatedNormal { mean: rng.random_range(0.5..5.0), sd: rng.random_range(0.3..2.0) },
        _ => Family::Lognormal { mu: rng.random_range(-0.5..1.5), sigma: rng.random_range(0.3..1.5) },
    }
}
