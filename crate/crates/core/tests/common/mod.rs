#![allow(dead_code)]

use qoe_sim::slotsolver::{Allocation, SlotProblem, UserEntry};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sum of hinge weights whose level is above `q` (`strict`) or at/above it.
fn active_weight(u: &UserEntry, q: f64, strict: bool, tol: f64) -> f64 {
    u.hinges
        .iter()
        .filter(|h| if strict { h.level > q + tol } else { h.level >= q - tol })
        .map(|h| h.weight)
        .sum()
}

/// Checks feasibility, box membership, complementary slackness and
/// per-user stationarity of a non-overloaded allocation. Returns the first
/// violation found.
pub fn kkt_violation(p: &SlotProblem, a: &Allocation) -> Option<String> {
    if a.overloaded {
        return None;
    }
    let load = p.load(&a.rates);
    if load > p.budget + 1e-9 {
        return Some(format!("load {load} exceeds budget {}", p.budget));
    }
    if a.dual < 0.0 {
        return Some(format!("negative price {}", a.dual));
    }
    let cs = a.dual * (p.budget - load);
    if cs.abs() > 1e-8 {
        return Some(format!("complementary slackness {cs:e}"));
    }
    for (u, &r) in p.users.iter().zip(&a.rates) {
        if !(r >= u.min_rate && r <= u.max_rate) {
            return Some(format!("user {} rate {r} outside [{}, {}]", u.id, u.min_rate, u.max_rate));
        }
        let q = u.params.quality(r);
        // breakpoint tolerance in quality units
        let tol = 1e-9 * q.abs().max(1.0);
        let price = a.dual / u.peak;
        // subdifferential of phi(r) + price*r is [price - hi, price - lo]
        let hi = u.params.alpha * active_weight(u, q, false, tol) / r;
        let lo = u.params.alpha * active_weight(u, q, true, tol) / r;
        let slack = 1e-6 * price.max(hi).max(1e-12);
        let at_min = r <= u.min_rate * (1.0 + 1e-12);
        let at_max = r >= u.max_rate * (1.0 - 1e-12);
        let ok = match (at_min, at_max) {
            (true, true) => true,
            // can only move up: right derivative must be >= 0
            (true, false) => price >= lo - slack,
            // can only move down: left derivative must be <= 0
            (false, true) => price <= hi + slack,
            (false, false) => price >= lo - slack && price <= hi + slack,
        };
        if !ok {
            return Some(format!(
                "user {} stationarity: price/P {price:e} not in [{lo:e}, {hi:e}] at r={r}",
                u.id
            ));
        }
    }
    None
}

/// Mean and lower/upper end of the two-sided 95% t interval of `diffs`.
pub fn paired_interval(diffs: &[f64]) -> (f64, f64, f64) {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    if diffs.len() < 2 {
        return (mean, mean, mean);
    }
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("df > 0").inverse_cdf(0.975);
    let half = t * (var / n).sqrt();
    (mean, mean - half, mean + half)
}
