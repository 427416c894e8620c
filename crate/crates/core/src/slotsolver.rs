//! Per-slot rate allocation over the TDMA halfspace intersected with rate
//! boxes.
//!
//! Each user contributes a convex penalty
//! `phi_u(r) = sum_i w_i * max(x_i - alpha ln r - beta, 0)` and the solver
//! minimizes `sum_u phi_u(r_u)` subject to `sum_u r_u / P_u <= budget` and
//! `r_u in [min_u, max_u]`. The coupling constraint is dualized: for a
//! price `lambda` every user solves a 1-D problem in closed form and the
//! price is found by bisection on the total slot share.

use crate::ratequality::RateQualityParams;

const MAX_BISECTIONS: usize = 200;
const SLACK_TOL: f64 = 1e-12;
const PRICE_REL_TOL: f64 = 1e-15;

/// One hinge `w * max(level - q, 0)` of a user's penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hinge {
    pub level: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEntry {
    pub id: u64,
    /// Penalty hinges; weights are non-negative.
    pub hinges: Vec<Hinge>,
    pub params: RateQualityParams,
    pub min_rate: f64,
    pub max_rate: f64,
    /// Peak rate in kbps, or `1 / E[1/P]` for averaged problems.
    pub peak: f64,
    /// `1 / T_u`, the user's weight in the average-quality objective.
    pub horizon_weight: f64,
}

impl UserEntry {
    /// Penalty `phi_u(rate)`.
    pub fn penalty(&self, rate: f64) -> f64 {
        let q = self.params.quality(rate);
        self.hinges.iter().map(|h| h.weight * (h.level - q).max(0.0)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotProblem {
    pub users: Vec<UserEntry>,
    /// Slot share available to video users, `1 - hp_load`.
    pub budget: f64,
}

impl SlotProblem {
    pub fn objective(&self, rates: &[f64]) -> f64 {
        self.users.iter().zip(rates).map(|(u, &r)| u.penalty(r)).sum()
    }

    pub fn load(&self, rates: &[f64]) -> f64 {
        self.users.iter().zip(rates).map(|(u, &r)| r / u.peak).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Rate in kbps for each entry of `SlotProblem::users`, in order.
    pub rates: Vec<f64>,
    /// Price of the slot-share constraint.
    pub dual: f64,
    /// Minimum rates did not fit; rates were scaled down proportionally.
    pub overloaded: bool,
}

impl Allocation {
    pub fn rate_of(&self, problem: &SlotProblem, id: u64) -> Option<f64> {
        problem
            .users
            .iter()
            .position(|u| u.id == id)
            .map(|k| self.rates[k])
    }
}

/// A user's breakpoints, sorted by rate, with suffix sums of the weights.
struct Prepared {
    alpha: f64,
    peak: f64,
    min_rate: f64,
    max_rate: f64,
    /// `(breakpoint rate, weight of hinges at this and later breakpoints)`
    pieces: Vec<(f64, f64)>,
}

impl Prepared {
    fn new(u: &UserEntry) -> Self {
        let mut bps: Vec<(f64, f64)> = u
            .hinges
            .iter()
            .filter(|h| h.weight > 0.0)
            .map(|h| (u.params.rate_for_quality(h.level), h.weight))
            .collect();
        bps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for p in bps.iter_mut().rev() {
            acc += p.1;
            p.1 = acc;
        }
        Self {
            alpha: u.params.alpha,
            peak: u.peak,
            min_rate: u.min_rate,
            max_rate: u.max_rate,
            pieces: bps,
        }
    }

    fn rate(&self, price: f64) -> f64 {
        if price <= 0.0 {
            return self.max_rate;
        }
        let mut lower = 0.0;
        for &(b, active) in &self.pieces {
            // hinges with breakpoint above r are active on (lower, b]
            let cand = self.alpha * active * self.peak / price;
            if cand <= b {
                return cand.max(lower).clamp(self.min_rate, self.max_rate);
            }
            lower = b;
        }
        lower.clamp(self.min_rate, self.max_rate)
    }

    /// Limit of `rate(price)` as `price -> 0+`: the smallest minimizer of
    /// the penalty alone.
    fn flat_floor(&self) -> f64 {
        let last = self.pieces.last().map_or(0.0, |p| p.0);
        last.clamp(self.min_rate, self.max_rate)
    }
}

/// `argmin_{r in box} phi_u(r) + price * r / P`. With `price == 0` the
/// penalty is non-increasing and the largest rate is returned.
pub fn user_rate_given_dual(user: &UserEntry, price: f64) -> f64 {
    Prepared::new(user).rate(price)
}

fn min_load(problem: &SlotProblem) -> f64 {
    problem.users.iter().map(|u| u.min_rate / u.peak).sum()
}

fn overloaded(problem: &SlotProblem) -> Option<Allocation> {
    let need = min_load(problem);
    if need <= problem.budget {
        return None;
    }
    let scale = problem.budget.max(0.0) / need;
    Some(Allocation {
        rates: problem.users.iter().map(|u| u.min_rate * scale).collect(),
        dual: 0.0,
        overloaded: true,
    })
}

fn max_allocation(problem: &SlotProblem) -> Option<Allocation> {
    let rates: Vec<f64> = problem.users.iter().map(|u| u.max_rate).collect();
    (problem.load(&rates) <= problem.budget).then_some(Allocation {
        rates,
        dual: 0.0,
        overloaded: false,
    })
}

/// Finds the smallest price at which `load(price) <= budget` to within
/// bisection precision. `load` must be non-increasing and exceed the
/// budget as the price goes to zero.
fn find_price(budget: f64, load: impl Fn(f64) -> f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while load(hi) > budget {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= PRICE_REL_TOL * hi || budget - load(hi) <= SLACK_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if load(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Maximizes `sum_u (alpha_u / T_u) ln r_u` over `[lower_u, max_u]` and the
/// slot share. Requires `sum lower / P <= budget`.
fn log_utility(problem: &SlotProblem, lower: &[f64]) -> Allocation {
    let users = &problem.users;
    let rate = |k: usize, price: f64| -> f64 {
        let u = &users[k];
        if price <= 0.0 {
            return u.max_rate;
        }
        let r = u.params.alpha * u.horizon_weight * u.peak / price;
        r.min(u.max_rate).max(lower[k])
    };
    let load = |price: f64| -> f64 { (0..users.len()).map(|k| rate(k, price) / users[k].peak).sum() };
    if load(0.0) <= problem.budget {
        return Allocation {
            rates: users.iter().map(|u| u.max_rate).collect(),
            dual: 0.0,
            overloaded: false,
        };
    }
    let price = find_price(problem.budget, load);
    Allocation {
        rates: (0..users.len()).map(|k| rate(k, price)).collect(),
        dual: price,
        overloaded: false,
    }
}

/// Solves one slot's penalty-minimizing allocation.
///
/// When several allocations minimize the penalty (flat regions above every
/// user's last breakpoint), the spare share goes to the allocation that
/// maximizes average quality among them. If the minimum rates do not fit
/// in the budget the allocation is flagged `overloaded` and minimum rates
/// are scaled down proportionally (to zero when the budget is `<= 0`).
pub fn solve_slot(problem: &SlotProblem) -> Allocation {
    if let Some(a) = overloaded(problem) {
        return a;
    }
    if let Some(a) = max_allocation(problem) {
        return a;
    }
    let prepared: Vec<Prepared> = problem.users.iter().map(Prepared::new).collect();
    let floors: Vec<f64> = prepared.iter().map(Prepared::flat_floor).collect();
    if problem.load(&floors) <= problem.budget {
        // zero price: every rate in [floor, max] is penalty-optimal
        let mut a = log_utility(problem, &floors);
        a.dual = 0.0;
        return a;
    }
    let load = |price: f64| -> f64 { prepared.iter().map(|p| p.rate(price) / p.peak).sum() };
    let price = find_price(problem.budget, load);
    Allocation {
        rates: prepared.iter().map(|p| p.rate(price)).collect(),
        dual: price,
        overloaded: false,
    }
}

/// Solves the averaged problem used to estimate a newcomer's long-run
/// quality. Callers pass sojourn-mean parameters and boxes, `1 / E[1/P]`
/// as peak and the expected budget; the algorithm is that of
/// [`solve_slot`].
pub fn solve_static(problem: &SlotProblem) -> Allocation {
    solve_slot(problem)
}

/// Allocation maximizing `sum_u q_u / T_u`, ignoring hinges.
pub fn solve_average_quality(problem: &SlotProblem) -> Allocation {
    if let Some(a) = overloaded(problem) {
        return a;
    }
    let lower: Vec<f64> = problem.users.iter().map(|u| u.min_rate).collect();
    log_utility(problem, &lower)
}
