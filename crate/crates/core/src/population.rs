//! Arrival and sojourn processes for video and high-priority users.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::QualityTrace;

/// Slot duration in seconds.
pub const SLOT_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SojournSpec {
    /// Poisson arrival rate in users per second.
    pub arrival_rate: f64,
    /// Mean of the exponential holding time in seconds.
    pub mean_holding: f64,
    /// Minimum sojourn in seconds.
    #[serde(default)]
    pub floor: f64,
}

impl SojournSpec {
    pub fn video_default() -> Self {
        Self {
            arrival_rate: 1.0 / 20.0,
            mean_holding: 200.0,
            floor: 40.0,
        }
    }

    pub fn hp_default() -> Self {
        Self {
            arrival_rate: 1.0 / 20.0,
            mean_holding: 200.0,
            floor: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_rate > 0.0 && self.arrival_rate.is_finite()) {
            return Err(Error::config("arrival rate must be positive"));
        }
        if !(self.mean_holding > 0.0 && self.mean_holding.is_finite()) {
            return Err(Error::config("mean holding time must be positive"));
        }
        if !(self.floor >= 0.0 && self.floor.is_finite()) {
            return Err(Error::config("sojourn floor must be >= 0"));
        }
        Ok(())
    }

    /// Sojourn floor in whole slots (at least one).
    fn floor_slots(&self) -> u64 {
        ((self.floor / SLOT_SECONDS).ceil() as u64).max(1)
    }

    /// Mean sojourn in slots under ceiling discretisation:
    /// `f + exp(-f/m) * E[ceil(Exp(m))]` for an integer floor `f`.
    pub fn mean_sojourn_slots(&self) -> f64 {
        let m = self.mean_holding / SLOT_SECONDS;
        let f = self.floor_slots() as f64;
        let mean_ceil = 1.0 / (1.0 - (-1.0 / m).exp());
        if f <= 1.0 {
            mean_ceil
        } else {
            f + (-f / m).exp() * mean_ceil
        }
    }
}

/// Number of users arriving in one slot, `Poisson(rate * slot)`.
pub fn sample_arrivals<R: Rng>(spec: &SojournSpec, rng: &mut R) -> u64 {
    let mean = spec.arrival_rate * SLOT_SECONDS;
    match Poisson::new(mean) {
        Ok(p) => {
            let n: f64 = p.sample(rng);
            n as u64
        }
        // mean too small to represent
        Err(_) => 0,
    }
}

/// Sojourn in slots: `max(ceil(Exp(mean)), floor)`, at least one slot.
pub fn sample_sojourn<R: Rng>(spec: &SojournSpec, rng: &mut R) -> u64 {
    let exp = Exp::new(SLOT_SECONDS / spec.mean_holding).expect("validated mean holding");
    let t: f64 = exp.sample(rng);
    (t.ceil() as u64).max(spec.floor_slots())
}

/// Categorical type assignment for Case-II users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeMix {
    pub weights: Vec<f64>,
}

impl TypeMix {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty()
            || self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || self.weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::config("type mix needs non-negative weights with positive sum"));
        }
        Ok(())
    }

    /// Position of the drawn type.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total: f64 = self.weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, w) in self.weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        self.weights.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserKind {
    Video,
    HighPriority,
}

/// Lifecycle of one video user as reported after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    /// Arrival-ordered id, shared with high-priority users.
    pub id: u64,
    pub kind: UserKind,
    /// Case-II type id.
    pub user_type: Option<usize>,
    pub arrival: u64,
    pub sojourn: u64,
    pub p_avg: f64,
    pub admitted: bool,
    /// Estimated long-run quality at admission, when admission control ran.
    pub estimate: Option<f64>,
    /// Admission threshold in force at arrival, when one was applied.
    pub threshold: Option<f64>,
    pub trace: Option<QualityTrace>,
    pub satisfied: bool,
}

impl UserRecord {
    /// Last slot of the sojourn.
    pub fn departure(&self) -> u64 {
        self.arrival + self.sojourn - 1
    }

    /// Slot after which the user no longer takes part: departure if
    /// admitted, arrival if blocked.
    pub fn finish_slot(&self) -> u64 {
        if self.admitted {
            self.departure()
        } else {
            self.arrival
        }
    }

    pub fn mean_quality(&self) -> Option<f64> {
        self.trace.as_ref().map(QualityTrace::mean)
    }
}
