//! Brute-force reference for the slot solver.
//!
//! The first `n - 1` rates are gridded in log space and the last user takes
//! whatever share is left (its penalty is non-increasing, so that is its
//! best response). The grid is then repeatedly re-centred on the incumbent
//! with a window a quarter as wide (in log rate) as the previous one; a
//! gentle shrink keeps the search from locking onto a coarse cell when the
//! optimum sits on a kink shared by several users. Nothing here calls into [`crate::slotsolver`]'s internals.

use rand::Rng;

use crate::channel::PeakLaw;
use crate::metrics::ConstraintSet;
use crate::ratequality::{RateQualityParams, SyntheticSpec};
use crate::rng::StreamRng;
use crate::slotsolver::{self, Hinge, SlotProblem, UserEntry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Grid levels per gridded user.
    pub levels: usize,
    /// Refinement rounds after the first full-box pass, each shrinking the
    /// window by [`ZOOM_SHRINK`].
    pub zoom_rounds: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            levels: 200,
            zoom_rounds: 12,
        }
    }
}

pub const ZOOM_SHRINK: f64 = 4.0;

/// Absolute slack for objectives that are zero up to rounding.
pub const ABS_SLACK: f64 = 1e-12;

fn penalty(u: &UserEntry, rate: f64) -> f64 {
    let q = u.params.alpha * rate.ln() + u.params.beta;
    u.hinges.iter().map(|h| h.weight * (h.level - q).max(0.0)).sum()
}

fn objective(users: &[UserEntry], rates: &[f64]) -> f64 {
    users.iter().zip(rates).map(|(u, &r)| penalty(u, r)).sum()
}

/// Best completion of the gridded prefix, or `None` if infeasible.
fn complete(problem: &SlotProblem, prefix: &[f64]) -> Option<(f64, Vec<f64>)> {
    let users = &problem.users;
    let last = &users[users.len() - 1];
    let used: f64 = prefix.iter().zip(users).map(|(r, u)| r / u.peak).sum();
    let room = (problem.budget - used) * last.peak;
    if room < last.min_rate {
        return None;
    }
    let mut rates = prefix.to_vec();
    rates.push(room.min(last.max_rate));
    Some((objective(users, &rates), rates))
}

fn log_grid(lo: f64, hi: f64, levels: usize) -> Vec<f64> {
    if levels < 2 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..levels)
        .map(|k| (a + (b - a) * k as f64 / (levels - 1) as f64).exp())
        .collect()
}

/// Searches the gridded boxes exhaustively.
fn search(problem: &SlotProblem, boxes: &[(f64, f64)], levels: usize) -> Option<(f64, Vec<f64>)> {
    let grids: Vec<Vec<f64>> = boxes.iter().map(|&(lo, hi)| log_grid(lo, hi, levels)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx = vec![0usize; grids.len()];
    let mut prefix = vec![0.0; grids.len()];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            prefix[k] = grids[k][i];
        }
        if let Some(c) = complete(problem, &prefix) {
            if best.as_ref().is_none_or(|b| c.0 < b.0) {
                best = Some(c);
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < grids[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Minimum objective over the grid search, with the minimizing rates.
/// Returns `None` for overloaded problems and problems without users.
pub fn grid_minimum(problem: &SlotProblem, cfg: &OracleConfig) -> Option<(f64, Vec<f64>)> {
    let users = &problem.users;
    if users.is_empty() {
        return None;
    }
    let min_load: f64 = users.iter().map(|u| u.min_rate / u.peak).sum();
    if min_load > problem.budget {
        return None;
    }
    let head = &users[..users.len() - 1];
    let mut boxes: Vec<(f64, f64)> = head.iter().map(|u| (u.min_rate, u.max_rate)).collect();
    let mut best = search(problem, &boxes, cfg.levels)?;
    let mut half: Vec<f64> = head.iter().map(|u| 0.5 * (u.max_rate / u.min_rate).ln()).collect();
    for _ in 0..cfg.zoom_rounds {
        for (k, u) in head.iter().enumerate() {
            half[k] /= ZOOM_SHRINK;
            let r = best.1[k].ln();
            boxes[k] = ((r - half[k]).exp().max(u.min_rate), (r + half[k]).exp().min(u.max_rate));
        }
        if let Some(c) = search(problem, &boxes, cfg.levels) {
            if c.0 <= best.0 {
                best = c;
            }
        }
    }
    Some(best)
}

/// Random problem with synthetic parameters, peaks from `law`, weights on
/// the constraint levels of `constraints` and queue-like weight magnitudes.
pub fn random_problem(rng: &mut StreamRng, users: usize, law: &PeakLaw, constraints: &ConstraintSet) -> SlotProblem {
    let spec = SyntheticSpec::default();
    let levels: Vec<f64> = constraints.report_levels();
    let entries = (0..users)
        .map(|id| {
            let q_lo = rng.random_range(spec.low_quality[0]..spec.low_quality[1]);
            let q_hi = rng.random_range(spec.high_quality[0]..spec.high_quality[1]);
            let params: RateQualityParams = spec.params_from_endpoints(q_lo, q_hi);
            let p_avg = law.draw_avg(rng);
            let peak = p_avg * law.draw_multiplier(rng);
            let horizon: f64 = rng.random_range(40.0..400.0);
            let hinges = levels
                .iter()
                .map(|&level| Hinge {
                    level,
                    weight: if rng.random::<f64>() < 0.2 {
                        0.0
                    } else {
                        rng.random_range(0.0..50.0) / horizon
                    },
                })
                .collect();
            UserEntry {
                id: id as u64,
                hinges,
                params,
                min_rate: spec.min_rate,
                max_rate: spec.max_rate,
                peak,
                horizon_weight: 1.0 / horizon,
            }
        })
        .collect();
    let budget = rng.random_range(0.25..1.0);
    SlotProblem { users: entries, budget }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub users: usize,
    pub solver: f64,
    pub oracle: f64,
    pub overloaded: bool,
}

impl OracleCase {
    /// Solver excess over the oracle, relative; negative when the solver
    /// beats the grid. Differences within rounding of zero count as zero.
    pub fn relative_gap(&self) -> f64 {
        let diff = self.solver - self.oracle;
        if diff.abs() <= ABS_SLACK {
            0.0
        } else {
            diff / self.oracle.abs().max(ABS_SLACK)
        }
    }

    /// Two-sided agreement within `rel_tol`, plus [`ABS_SLACK`].
    pub fn agrees(&self, rel_tol: f64) -> bool {
        self.overloaded || (self.solver - self.oracle).abs() <= rel_tol * self.oracle.abs() + ABS_SLACK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cases: Vec<OracleCase>,
    pub rel_tol: f64,
}

impl OracleReport {
    pub fn compared(&self) -> usize {
        self.cases.iter().filter(|c| !c.overloaded).count()
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.agrees(self.rel_tol)).count()
    }

    pub fn worst_gap(&self) -> f64 {
        self.cases
            .iter()
            .filter(|c| !c.overloaded)
            .map(OracleCase::relative_gap)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

/// Compares [`slotsolver::solve_slot`] with the grid oracle on `instances`
/// random problems of 2 or 3 users. Overloaded draws are redrawn.
pub fn run_suite(seed: u64, instances: usize, gamma: f64, cfg: &OracleConfig, rel_tol: f64) -> OracleReport {
    use rand::SeedableRng;
    let mut rng = StreamRng::seed_from_u64(seed);
    let law = PeakLaw::with_gamma(gamma);
    let constraints = ConstraintSet::reference_grid();
    let mut cases = Vec::with_capacity(instances);
    while cases.len() < instances {
        let n = if cases.len() % 2 == 0 { 2 } else { 3 };
        let problem = random_problem(&mut rng, n, &law, &constraints);
        let Some((oracle, _)) = grid_minimum(&problem, cfg) else {
            continue;
        };
        let alloc = slotsolver::solve_slot(&problem);
        cases.push(OracleCase {
            users: n,
            solver: objective(&problem.users, &alloc.rates),
            oracle,
            overloaded: alloc.overloaded,
        });
    }
    OracleReport { cases, rel_tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_finds_single_breakpoint_optimum() {
        // one user's hinge is worth much more; the oracle should push it to
        // its breakpoint and give the rest to the other
        let mk = |id, level, weight, beta| UserEntry {
            id,
            hinges: vec![Hinge { level, weight }],
            params: RateQualityParams { alpha: 10.0, beta },
            min_rate: 302.0,
            max_rate: 6412.0,
            peak: 6000.0,
            horizon_weight: 0.01,
        };
        let p = SlotProblem {
            users: vec![mk(0, 60.0, 1.0, -20.0), mk(1, 70.0, 0.01, -20.0)],
            budget: 1.0,
        };
        let (obj, rates) = grid_minimum(&p, &OracleConfig::default()).unwrap();
        let b = 8f64.exp();
        assert!((rates[0] - b).abs() < 1e-3 * b, "{rates:?}");
        let exact = 0.01 * (70.0 - 10.0 * (6000.0 - b).ln() + 20.0);
        assert!((obj - exact).abs() < 1e-6, "{obj} vs {exact}");
    }

    #[test]
    fn overloaded_has_no_oracle() {
        let u = UserEntry {
            id: 0,
            hinges: vec![],
            params: RateQualityParams { alpha: 10.0, beta: 0.0 },
            min_rate: 302.0,
            max_rate: 6412.0,
            peak: 100.0,
            horizon_weight: 0.01,
        };
        let p = SlotProblem {
            users: vec![u.clone(), u],
            budget: 1.0,
        };
        assert!(grid_minimum(&p, &OracleConfig::default()).is_none());
    }

    #[test]
    fn small_suite_agrees() {
        let cfg = OracleConfig {
            levels: 120,
            zoom_rounds: 12,
        };
        let report = run_suite(3, 10, 6.0, &cfg, 1e-4);
        assert!(report.passed(), "worst {}", report.worst_gap());
    }
}
