//! Online rate adaptation: the virtual-queue-driven policy (grid and typed
//! constraints) and the average-quality baseline.
//!
//! Each admitted stream keeps one virtual queue per constraint it must
//! meet. In every slot the queue-driven policy minimizes
//! `sum_u sum_i v_{u,i}(t-1) / T_u * max(x_i - q_u(t), 0)` over the slot's
//! rate region, then feeds the realized quality back into the queues via
//! `v <- max(v + s, 0)` with `s = (max(x_i - q, 0) - h_i) / T_u`.

use serde::{Deserialize, Serialize};

use crate::channel::SlotChannel;
use crate::metrics::clamp_quality;
use crate::ratequality::RateQualityParams;
use crate::slotsolver::{self, Hinge, SlotProblem, UserEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Virtual queues on every point of a constraint grid.
    QueueDrivenCaseI,
    /// One virtual queue per user on its own type's constraint.
    #[serde(rename = "queue_driven_case_ii")]
    QueueDrivenCaseII,
    /// Maximize `sum_u q_u(t) / T_u` in every slot; no queues.
    AvgQualityMax,
}

impl PolicyKind {
    pub fn is_queue_driven(self) -> bool {
        !matches!(self, PolicyKind::AvgQualityMax)
    }

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::QueueDrivenCaseI => "queue_driven_case_i",
            PolicyKind::QueueDrivenCaseII => "queue_driven_case_ii",
            PolicyKind::AvgQualityMax => "avg_quality_max",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "queue_driven_case_i" | "case_i" => Ok(PolicyKind::QueueDrivenCaseI),
            "queue_driven_case_ii" | "case_ii" => Ok(PolicyKind::QueueDrivenCaseII),
            "avg_quality_max" | "baseline" => Ok(PolicyKind::AvgQualityMax),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

/// Virtual queues of one stream, one entry per constraint it must meet.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VirtualQueueState {
    pub values: Vec<f64>,
}

impl VirtualQueueState {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-slot violation terms `s_i = (max(x_i - q, 0) - h_i) / T_u` for the
/// `(level, bound)` targets; all zero when the stream is not in its
/// sojourn.
pub fn violation_terms(targets: &[(f64, f64)], quality: f64, sojourn: u64, in_sojourn: bool) -> Vec<f64> {
    if !in_sojourn {
        return vec![0.0; targets.len()];
    }
    let inv_t = 1.0 / sojourn as f64;
    targets
        .iter()
        .map(|&(level, bound)| ((level - quality).max(0.0) - bound) * inv_t)
        .collect()
}

/// `v <- max(v + s, 0)` componentwise.
pub fn update_queues(state: &mut VirtualQueueState, terms: &[f64]) {
    debug_assert_eq!(state.values.len(), terms.len());
    for (v, s) in state.values.iter_mut().zip(terms) {
        *v = (*v + s).max(0.0);
    }
}

/// Discrete rate ladder used when rounding relaxed rates up.
#[derive(Debug, Clone, PartialEq)]
pub struct RateLadder {
    levels: Vec<f64>,
}

impl RateLadder {
    /// `n` log-spaced levels from `min` to `max` inclusive.
    pub fn log_spaced(min: f64, max: f64, n: usize) -> Self {
        assert!(n >= 2 && min > 0.0 && max > min);
        let step = (max / min).ln() / (n - 1) as f64;
        let mut levels: Vec<f64> = (0..n).map(|k| min * (step * k as f64).exp()).collect();
        levels[0] = min;
        levels[n - 1] = max;
        Self { levels }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Smallest level at or above `rate`; rates below the lowest level are
    /// left alone (overload) and rates above the top are capped.
    pub fn round_up(&self, rate: f64) -> f64 {
        if rate < self.levels[0] {
            return rate;
        }
        let k = self.levels.partition_point(|&l| l < rate);
        self.levels[k.min(self.levels.len() - 1)]
    }
}

/// An admitted (or candidate) video stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveStream {
    pub id: u64,
    pub user_type: Option<usize>,
    pub arrival: u64,
    /// `T_u` in slots.
    pub sojourn: u64,
    /// Rate-quality parameters for every slot of the sojourn.
    pub params: Vec<RateQualityParams>,
    pub min_rate: f64,
    pub max_rate: f64,
    pub p_avg: f64,
    /// `(level, bound)` constraints the stream must meet.
    pub targets: Vec<(f64, f64)>,
    pub queue: VirtualQueueState,
    /// Clamped delivered quality per elapsed slot.
    pub trace: Vec<f64>,
    /// Running sum of observed `1 / P(t)`.
    pub inverse_peak_sum: f64,
}

impl ActiveStream {
    pub fn departure(&self) -> u64 {
        self.arrival + self.sojourn - 1
    }

    pub fn params_at(&self, slot: u64) -> RateQualityParams {
        self.params[(slot - self.arrival) as usize]
    }

    fn entry(&self, slot: u64, peak: f64, weighted: bool) -> UserEntry {
        let inv_t = 1.0 / self.sojourn as f64;
        let hinges = if weighted {
            self.targets
                .iter()
                .zip(&self.queue.values)
                .map(|(&(level, _), &v)| Hinge {
                    level,
                    weight: v * inv_t,
                })
                .collect()
        } else {
            Vec::new()
        };
        UserEntry {
            id: self.id,
            hinges,
            params: self.params_at(slot),
            min_rate: self.min_rate,
            max_rate: self.max_rate,
            peak,
            horizon_weight: inv_t,
        }
    }
}

/// Quality delivered at `rate`, clamped to the quality scale. A stream
/// that receives nothing sits at the floor.
pub fn realized_quality(params: &RateQualityParams, rate: f64) -> f64 {
    if rate > 0.0 {
        clamp_quality(params.quality(rate))
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    /// `(stream id, rate kbps, delivered quality)` in stream order.
    pub allocations: Vec<(u64, f64, f64)>,
    pub dual: f64,
    pub overloaded: bool,
    /// `sum r / P + hp_load` after any ladder rounding.
    pub utilization: f64,
}

/// Allocates one slot to `streams` (all active in `slot`), appends the
/// delivered quality to each trace and, for queue-driven policies, updates
/// the virtual queues with it.
pub fn adapt_slot(
    policy: PolicyKind,
    streams: &mut [ActiveStream],
    slot: u64,
    channel: &SlotChannel,
    ladder: Option<&RateLadder>,
) -> SlotOutcome {
    let weighted = policy.is_queue_driven();
    let users = streams
        .iter()
        .map(|s| {
            let peak = channel.peaks[&s.id];
            s.entry(slot, peak, weighted)
        })
        .collect();
    let problem = SlotProblem {
        users,
        budget: channel.budget(),
    };
    let alloc = if weighted {
        slotsolver::solve_slot(&problem)
    } else {
        slotsolver::solve_average_quality(&problem)
    };

    let mut allocations = Vec::with_capacity(streams.len());
    let mut utilization = channel.hp_load;
    for ((stream, user), &relaxed) in streams.iter_mut().zip(&problem.users).zip(&alloc.rates) {
        let rate = ladder.map_or(relaxed, |l| l.round_up(relaxed));
        let q = realized_quality(&user.params, rate);
        stream.trace.push(q);
        stream.inverse_peak_sum += 1.0 / user.peak;
        if weighted {
            let terms = violation_terms(&stream.targets, q, stream.sojourn, true);
            update_queues(&mut stream.queue, &terms);
        }
        utilization += rate / user.peak;
        allocations.push((stream.id, rate, q));
    }
    SlotOutcome {
        allocations,
        dual: alloc.dual,
        overloaded: alloc.overloaded,
        utilization,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn policy_names_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct Wrap {
            policy: PolicyKind,
        }
        for p in [PolicyKind::QueueDrivenCaseI, PolicyKind::QueueDrivenCaseII, PolicyKind::AvgQualityMax] {
            let text = toml::to_string(&Wrap { policy: p }).unwrap();
            assert_eq!(text.trim(), format!("policy = \"{}\"", p.label()));
            assert_eq!(toml::from_str::<Wrap>(&text).unwrap().policy, p);
            assert_eq!(p.label().parse::<PolicyKind>().unwrap(), p);
        }
    }

    #[test]
    fn violation_term_examples() {
        let t = violation_terms(&[(40.0, 1.0)], 45.0, 100, true);
        assert_eq!(t, vec![-0.01]);
        let t = violation_terms(&[(40.0, 1.0)], 30.0, 100, true);
        assert!((t[0] - 0.09).abs() < 1e-15);
        assert_eq!(violation_terms(&[(40.0, 1.0), (50.0, 2.0)], 30.0, 100, false), vec![0.0, 0.0]);
    }

    #[test]
    fn queue_update_examples() {
        let mut q = VirtualQueueState { values: vec![0.0] };
        update_queues(&mut q, &[-0.01]);
        assert_eq!(q.values, vec![0.0]);
        let mut q = VirtualQueueState { values: vec![0.5] };
        update_queues(&mut q, &[0.09]);
        assert!((q.values[0] - 0.59).abs() < 1e-15);
    }

    #[test]
    fn ladder_rounds_up() {
        let l = RateLadder::log_spaced(302.0, 6412.0, 50);
        assert_eq!(l.levels().len(), 50);
        assert_eq!(l.round_up(302.0), 302.0);
        assert_eq!(l.round_up(6412.0), 6412.0);
        assert_eq!(l.round_up(7000.0), 6412.0);
        assert_eq!(l.round_up(100.0), 100.0);
        let r = l.round_up(1000.0);
        assert!(r >= 1000.0);
        let k = l.levels().iter().position(|&x| x == r).unwrap();
        assert!(l.levels()[k - 1] < 1000.0);
    }

    fn stream(id: u64, alpha: f64, beta: f64, sojourn: u64) -> ActiveStream {
        ActiveStream {
            id,
            user_type: None,
            arrival: 0,
            sojourn,
            params: vec![RateQualityParams { alpha, beta }; sojourn as usize],
            min_rate: 302.0,
            max_rate: 6412.0,
            p_avg: 8000.0,
            targets: vec![(30.0, 0.7), (40.0, 1.0), (50.0, 3.0), (60.0, 7.0), (70.0, 15.0)],
            queue: VirtualQueueState::zeros(5),
            trace: Vec::new(),
            inverse_peak_sum: 0.0,
        }
    }

    #[test]
    fn uncontended_user_gets_max_rate() {
        for policy in [PolicyKind::QueueDrivenCaseI, PolicyKind::AvgQualityMax] {
            let mut s = [stream(0, 10.0, -10.0, 5)];
            for t in 0..5 {
                let ch = SlotChannel {
                    peaks: BTreeMap::from([(0, 20_000.0)]),
                    hp_load: 0.1,
                };
                let out = adapt_slot(policy, &mut s, t, &ch, None);
                assert_eq!(out.allocations[0].1, 6412.0);
            }
            let q = 10.0 * 6412f64.ln() - 10.0;
            assert!(s[0].trace.iter().all(|&x| x == q));
            // q ~ 77.6 clears every grid point
            assert!(s[0].queue.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn baseline_leaves_queues_untouched() {
        let mut s = [stream(0, 10.0, -30.0, 50), stream(1, 5.0, 0.0, 50)];
        s[0].queue.values = vec![0.3; 5];
        let before: Vec<_> = s.iter().map(|x| x.queue.clone()).collect();
        let ch = SlotChannel {
            peaks: BTreeMap::from([(0, 3000.0), (1, 3000.0)]),
            hp_load: 0.0,
        };
        adapt_slot(PolicyKind::AvgQualityMax, &mut s, 0, &ch, None);
        let after: Vec<_> = s.iter().map(|x| x.queue.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn baseline_rates_follow_alpha() {
        let mut s = [stream(0, 12.0, -30.0, 80), stream(1, 8.0, -30.0, 80)];
        let ch = SlotChannel {
            peaks: BTreeMap::from([(0, 4000.0), (1, 4000.0)]),
            hp_load: 0.0,
        };
        let out = adapt_slot(PolicyKind::AvgQualityMax, &mut s, 0, &ch, None);
        assert!(out.allocations[0].1 > out.allocations[1].1);
        assert!((out.utilization - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_queues_match_baseline() {
        let make = || [stream(0, 12.0, -30.0, 80), stream(1, 7.0, 5.0, 120)];
        let ch = SlotChannel {
            peaks: BTreeMap::from([(0, 4000.0), (1, 6000.0)]),
            hp_load: 0.2,
        };
        let a = adapt_slot(PolicyKind::QueueDrivenCaseI, &mut make(), 0, &ch, None);
        let b = adapt_slot(PolicyKind::AvgQualityMax, &mut make(), 0, &ch, None);
        let ra: Vec<f64> = a.allocations.iter().map(|x| x.1).collect();
        let rb: Vec<f64> = b.allocations.iter().map(|x| x.1).collect();
        assert_eq!(ra, rb);
    }

    #[test]
    fn zero_rate_delivers_floor_quality() {
        let p = RateQualityParams {
            alpha: 10.0,
            beta: 5.0,
        };
        assert_eq!(realized_quality(&p, 0.0), 0.0);
        assert_eq!(realized_quality(&p, 1e9), 100.0);
    }
}
