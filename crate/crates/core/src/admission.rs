//! Quality-estimating admission control.
//!
//! A newcomer is evaluated as if already admitted: every stream is replaced
//! by its sojourn-averaged view, the newcomer's queues are seeded with the
//! mean of the existing streams' queues, and the averaged problem is solved
//! once. The newcomer's quality at its static rate is compared with a
//! threshold.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::adaptation::ActiveStream;
use crate::channel::{PeakLaw, PeakRateProcess};
use crate::slotsolver::{self, Hinge, SlotProblem, UserEntry};

/// How `E[1 / P_u]` is estimated for streams already in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversePeakMode {
    /// From the stream's known `p_avg` and the multiplier law.
    #[default]
    Analytic,
    /// Trailing mean of the stream's observed `1 / P(t)`; the newcomer and
    /// streams without observations fall back to the analytic value.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedView {
    pub alpha: f64,
    pub beta: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    pub inverse_peak: f64,
}

pub fn averaged_user_view(stream: &ActiveStream, law: &PeakLaw, mode: InversePeakMode) -> AveragedView {
    let n = stream.params.len() as f64;
    let alpha = stream.params.iter().map(|p| p.alpha).sum::<f64>() / n;
    let beta = stream.params.iter().map(|p| p.beta).sum::<f64>() / n;
    let observed = stream.trace.len();
    let inverse_peak = match mode {
        InversePeakMode::Observed if observed > 0 => stream.inverse_peak_sum / observed as f64,
        _ => PeakRateProcess { p_avg: stream.p_avg }.mean_inverse_peak(law),
    };
    AveragedView {
        alpha,
        beta,
        min_rate: stream.min_rate,
        max_rate: stream.max_rate,
        inverse_peak,
    }
}

/// Trailing-window mean of the observed high-priority load.
#[derive(Debug, Clone, PartialEq)]
pub struct HpLoadEstimator {
    window: usize,
    samples: VecDeque<f64>,
    sum: f64,
    prior: f64,
}

impl HpLoadEstimator {
    /// `prior` is returned until the first observation.
    pub fn new(window: usize, prior: f64) -> Self {
        Self {
            window: window.max(1),
            samples: VecDeque::with_capacity(window.max(1)),
            sum: 0.0,
            prior,
        }
    }

    pub fn observe(&mut self, load: f64) {
        if self.samples.len() == self.window {
            if let Some(old) = self.samples.pop_front() {
                self.sum -= old;
            }
        }
        self.samples.push_back(load);
        self.sum += load;
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            self.prior
        } else {
            // recompute to shed drift from the running sum
            if self.samples.len() == self.window {
                self.samples.iter().sum::<f64>() / self.window as f64
            } else {
                self.sum / self.samples.len() as f64
            }
        }
    }

    pub fn expected_budget(&self) -> f64 {
        1.0 - self.mean()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionEstimate {
    /// Estimated long-run quality of the newcomer.
    pub quality: f64,
    /// Static allocation: existing streams in order, newcomer last.
    pub rates: Vec<f64>,
    pub admitted: bool,
    pub threshold: f64,
}

/// Mean of the existing streams' queues, componentwise; zeros when there
/// are none.
pub fn seed_queue(existing: &[ActiveStream], len: usize) -> Vec<f64> {
    let mut seed = vec![0.0; len];
    if existing.is_empty() {
        return seed;
    }
    for s in existing {
        for (acc, v) in seed.iter_mut().zip(&s.queue.values) {
            *acc += v;
        }
    }
    let n = existing.len() as f64;
    seed.iter_mut().for_each(|v| *v /= n);
    seed
}

fn static_entry(stream: &ActiveStream, queue: &[f64], view: &AveragedView) -> UserEntry {
    let inv_t = 1.0 / stream.sojourn as f64;
    UserEntry {
        id: stream.id,
        hinges: stream
            .targets
            .iter()
            .zip(queue)
            .map(|(&(level, _), &v)| Hinge {
                level,
                weight: v * inv_t,
            })
            .collect(),
        params: crate::ratequality::RateQualityParams {
            alpha: view.alpha,
            beta: view.beta,
        },
        min_rate: view.min_rate,
        max_rate: view.max_rate,
        peak: 1.0 / view.inverse_peak,
        horizon_weight: inv_t,
    }
}

/// Builds the averaged problem for `candidate` joining `existing`.
pub fn static_problem(
    candidate: &ActiveStream,
    existing: &[ActiveStream],
    expected_budget: f64,
    law: &PeakLaw,
    mode: InversePeakMode,
) -> SlotProblem {
    let mut users: Vec<UserEntry> = existing
        .iter()
        .map(|s| static_entry(s, &s.queue.values, &averaged_user_view(s, law, mode)))
        .collect();
    let seed = seed_queue(existing, candidate.targets.len());
    let view = averaged_user_view(candidate, law, InversePeakMode::Analytic);
    users.push(static_entry(candidate, &seed, &view));
    SlotProblem {
        users,
        budget: expected_budget,
    }
}

/// Estimates the candidate's quality and admits it iff the estimate is
/// strictly above `threshold`. Existing streams are only read.
pub fn estimate_and_decide(
    candidate: &ActiveStream,
    existing: &[ActiveStream],
    threshold: f64,
    expected_budget: f64,
    law: &PeakLaw,
    mode: InversePeakMode,
) -> AdmissionEstimate {
    let problem = static_problem(candidate, existing, expected_budget, law, mode);
    let alloc = slotsolver::solve_static(&problem);
    let view = &problem.users[problem.users.len() - 1];
    let rate = alloc.rates[alloc.rates.len() - 1];
    // ln(0) = -inf: a candidate that gets nothing is never admitted
    let quality = view.params.alpha * rate.ln() + view.params.beta;
    AdmissionEstimate {
        quality,
        rates: alloc.rates,
        admitted: quality > threshold,
        threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::VirtualQueueState;
    use crate::ratequality::RateQualityParams;

    fn stream(id: u64, params: Vec<RateQualityParams>, p_avg: f64) -> ActiveStream {
        ActiveStream {
            id,
            user_type: None,
            arrival: 0,
            sojourn: params.len() as u64,
            params,
            min_rate: 302.0,
            max_rate: 6412.0,
            p_avg,
            targets: vec![(30.0, 0.7), (40.0, 1.0), (50.0, 3.0), (60.0, 7.0), (70.0, 15.0)],
            queue: VirtualQueueState::zeros(5),
            trace: Vec::new(),
            inverse_peak_sum: 0.0,
        }
    }

    fn p(alpha: f64, beta: f64) -> RateQualityParams {
        RateQualityParams { alpha, beta }
    }

    #[test]
    fn constant_params_average_to_themselves() {
        let law = PeakLaw::with_gamma(6.0);
        let v = averaged_user_view(&stream(0, vec![p(9.0, -4.0); 40], 9000.0), &law, InversePeakMode::Analytic);
        assert_eq!((v.alpha, v.beta), (9.0, -4.0));
        assert!((v.inverse_peak - 3f64.ln() / 9000.0).abs() < 1e-18);

        let v = averaged_user_view(&stream(0, vec![p(8.0, 0.0), p(12.0, 0.0)], 9000.0), &law, InversePeakMode::Analytic);
        assert_eq!(v.alpha, 10.0);
    }

    #[test]
    fn lone_candidate_gets_max_rate() {
        let law = PeakLaw::with_gamma(6.0);
        let c = stream(0, vec![p(10.0, -10.0); 50], 9000.0);
        let est = estimate_and_decide(&c, &[], 50.0, 1.0, &law, InversePeakMode::Analytic);
        let expected = 10.0 * 6412f64.ln() - 10.0;
        assert!((est.quality - expected).abs() < 1e-12);
        assert!(est.admitted);
        assert!(!estimate_and_decide(&c, &[], expected, 1.0, &law, InversePeakMode::Analytic).admitted);
    }

    #[test]
    fn lone_candidate_rate_is_budget_limited() {
        let law = PeakLaw::with_gamma(1.0);
        let c = stream(0, vec![p(10.0, -10.0); 50], 2000.0);
        let inv = 3f64.ln() / 2000.0;
        let mut last = f64::INFINITY;
        for budget in [1.0, 0.8, 0.5, 0.2] {
            let est = estimate_and_decide(&c, &[], 0.0, budget, &law, InversePeakMode::Analytic);
            let r = est.rates[0];
            assert!((r - (budget / inv).min(6412.0)).abs() < 1e-6 * r);
            assert!(est.quality <= last);
            last = est.quality;
        }
    }

    #[test]
    fn threshold_comparison_is_strict_and_monotone() {
        let law = PeakLaw::with_gamma(6.0);
        let c = stream(0, vec![p(10.0, -10.0); 50], 9000.0);
        let q = estimate_and_decide(&c, &[], 0.0, 1.0, &law, InversePeakMode::Analytic).quality;
        assert!(q > 0.0);
        let admitted_at = |theta| estimate_and_decide(&c, &[], theta, 1.0, &law, InversePeakMode::Analytic).admitted;
        assert!(admitted_at(0.0));
        assert!(!admitted_at(q));
        assert!(!admitted_at(100.0));
    }

    #[test]
    fn estimate_does_not_touch_existing_queues() {
        let law = PeakLaw::with_gamma(2.0);
        let mut existing: Vec<ActiveStream> = (0..4)
            .map(|i| stream(i, vec![p(8.0 + i as f64, -5.0); 100], 4000.0))
            .collect();
        for (i, s) in existing.iter_mut().enumerate() {
            s.queue.values = vec![0.01 * i as f64; 5];
        }
        let snapshot = existing.clone();
        let c = stream(9, vec![p(10.0, -10.0); 60], 3000.0);
        let est = estimate_and_decide(&c, &existing, 40.0, 0.7, &law, InversePeakMode::Analytic);
        assert_eq!(existing, snapshot);
        assert_eq!(est.rates.len(), 5);
        assert_eq!(seed_queue(&existing, 5), vec![0.015; 5]);
    }

    #[test]
    fn hp_estimator_window() {
        let mut e = HpLoadEstimator::new(3, 0.25);
        assert_eq!(e.mean(), 0.25);
        e.observe(0.1);
        assert!((e.mean() - 0.1).abs() < 1e-15);
        for x in [0.2, 0.3, 0.4] {
            e.observe(x);
        }
        assert!((e.mean() - 0.3).abs() < 1e-15);
        assert!((e.expected_budget() - 0.7).abs() < 1e-15);
    }
}
