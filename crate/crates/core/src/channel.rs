//! TDMA rate region, peak-rate processes and high-priority background load.
//!
//! In one slot of length 1 s a user served at peak rate `P` needs `r / P`
//! of the slot to receive `r` kbps, so a rate vector is feasible iff
//! `sum r_u / P_u + hp_load <= 1`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeedTree, StreamKind};

/// Law of the per-user peak rate `P(t) = p_avg * m(t)`, where `p_avg` is
/// uniform on `gamma * avg_range` and `m(t)` is i.i.d. uniform on
/// `multiplier`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakLaw {
    pub gamma: f64,
    pub avg_range: [f64; 2],
    pub multiplier: [f64; 2],
}

impl Default for PeakLaw {
    fn default() -> Self {
        Self::with_gamma(6.0)
    }
}

impl PeakLaw {
    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            gamma,
            avg_range: [1250.0, 3750.0],
            multiplier: [0.5, 1.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.avg_range;
        let [m0, m1] = self.multiplier;
        if !(self.gamma > 0.0 && a > 0.0 && b >= a && m0 > 0.0 && m1 >= m0) {
            return Err(Error::config(format!("peak law is not positive and ordered: {self:?}")));
        }
        Ok(())
    }

    /// Range of `p_avg` in kbps.
    pub fn avg_bounds(&self) -> [f64; 2] {
        [self.gamma * self.avg_range[0], self.gamma * self.avg_range[1]]
    }

    pub fn draw_avg<R: Rng>(&self, rng: &mut R) -> f64 {
        let [lo, hi] = self.avg_bounds();
        lo + (hi - lo) * rng.random::<f64>()
    }

    pub fn draw_multiplier<R: Rng>(&self, rng: &mut R) -> f64 {
        let [lo, hi] = self.multiplier;
        lo + (hi - lo) * rng.random::<f64>()
    }

    /// `E[1 / m]` for the uniform multiplier.
    pub fn mean_inverse_multiplier(&self) -> f64 {
        let [lo, hi] = self.multiplier;
        if hi == lo {
            1.0 / lo
        } else {
            (hi / lo).ln() / (hi - lo)
        }
    }

    /// `E[1 / p_avg]` over the user population.
    pub fn mean_inverse_avg(&self) -> f64 {
        let [lo, hi] = self.avg_bounds();
        if hi == lo {
            1.0 / lo
        } else {
            (hi / lo).ln() / (hi - lo)
        }
    }
}

/// One user's peak-rate process; `p_avg` is fixed for the sojourn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakRateProcess {
    pub p_avg: f64,
}

impl PeakRateProcess {
    /// Realized peak in `slot`, deterministic in `(seed, user, slot)`.
    pub fn realize(&self, law: &PeakLaw, seeds: &SeedTree, user: u64, slot: u64) -> f64 {
        let mut rng = seeds.stream(StreamKind::Multiplier, user, slot);
        self.p_avg * law.draw_multiplier(&mut rng)
    }

    /// `E[1 / P(t)]` given the known `p_avg`.
    pub fn mean_inverse_peak(&self, law: &PeakLaw) -> f64 {
        law.mean_inverse_multiplier() / self.p_avg
    }
}

/// A background user with constant demand `rate` kbps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpUser {
    pub id: u64,
    pub rate: f64,
    pub peak: PeakRateProcess,
    pub arrival: u64,
    pub sojourn: u64,
}

impl HpUser {
    pub fn departure(&self) -> u64 {
        self.arrival + self.sojourn - 1
    }

    pub fn is_active(&self, slot: u64) -> bool {
        slot >= self.arrival && slot <= self.departure()
    }
}

/// Channel state of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotChannel {
    /// Realized peak (kbps) of every active video user.
    pub peaks: BTreeMap<u64, f64>,
    /// Fraction of the slot consumed by high-priority users.
    pub hp_load: f64,
}

impl SlotChannel {
    /// Slot fraction left for video; may be `<= 0` under overload.
    pub fn budget(&self) -> f64 {
        1.0 - self.hp_load
    }
}

/// `sum R / P` over active high-priority users given as `(rate, peak)`.
pub fn hp_load(users: &[(f64, f64)]) -> f64 {
    users.iter().map(|&(rate, peak)| rate / peak).sum()
}

/// `sum r_u / P_u + hp_load`; a rate vector is feasible iff this is `<= 1`.
pub fn utilization(rates: &BTreeMap<u64, f64>, slot: &SlotChannel) -> Result<f64> {
    let mut total = slot.hp_load;
    for (id, &r) in rates {
        let peak = slot
            .peaks
            .get(id)
            .ok_or_else(|| Error::usage(format!("no peak rate for user {id}")))?;
        total += r / peak;
    }
    Ok(total)
}

/// Samples the slot's channel for the given active users.
///
/// `video` holds `(id, process)` of active video users and `hp` the active
/// high-priority users.
pub fn sample_slot(
    law: &PeakLaw,
    hp_law: &PeakLaw,
    video: &[(u64, PeakRateProcess)],
    hp: &[HpUser],
    seeds: &SeedTree,
    slot: u64,
) -> SlotChannel {
    let peaks = video
        .iter()
        .map(|&(id, proc_)| (id, proc_.realize(law, seeds, id, slot)))
        .collect();
    let loads: Vec<(f64, f64)> = hp
        .iter()
        .map(|u| (u.rate, u.peak.realize(hp_law, seeds, u.id, slot)))
        .collect();
    SlotChannel {
        peaks,
        hp_load: hp_load(&loads),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hp_load_examples() {
        assert_eq!(hp_load(&[]), 0.0);
        assert!((hp_load(&[(200.0, 2000.0)]) - 0.1).abs() < 1e-15);
        assert!((hp_load(&[(300.0, 1000.0), (600.0, 2000.0)]) - 0.6).abs() < 1e-15);
    }

    fn channel(peaks: &[(u64, f64)], hp_load: f64) -> SlotChannel {
        SlotChannel {
            peaks: peaks.iter().copied().collect(),
            hp_load,
        }
    }

    #[test]
    fn utilization_examples() {
        let ch = channel(&[(0, 1500.0)], 0.0);
        let rates = BTreeMap::from([(0, 1500.0)]);
        assert_eq!(utilization(&rates, &ch).unwrap(), 1.0);

        let ch = channel(&[(0, 2000.0), (1, 4000.0)], 0.25);
        let rates = BTreeMap::from([(0, 1000.0), (1, 1000.0)]);
        assert_eq!(utilization(&rates, &ch).unwrap(), 1.0);

        assert_eq!(utilization(&BTreeMap::new(), &ch).unwrap(), 0.25);

        let missing = BTreeMap::from([(9, 1.0)]);
        assert!(matches!(utilization(&missing, &ch), Err(Error::Usage(_))));
    }

    #[test]
    fn overload_budget_is_representable() {
        assert!(channel(&[], 1.4).budget() < 0.0);
    }

    #[test]
    fn avg_bounds_scale_with_gamma() {
        assert_eq!(PeakLaw::with_gamma(6.0).avg_bounds(), [7500.0, 22500.0]);
    }

    #[test]
    fn realized_peaks_stay_in_multiplier_support() {
        let law = PeakLaw::with_gamma(6.0);
        let seeds = SeedTree::new(1);
        let mut rng = seeds.stream(StreamKind::PeakAvg, 0, 0);
        for user in 0..50 {
            let p = PeakRateProcess {
                p_avg: law.draw_avg(&mut rng),
            };
            let [lo, hi] = law.avg_bounds();
            assert!((lo..=hi).contains(&p.p_avg));
            for slot in 0..200 {
                let peak = p.realize(&law, &seeds, user, slot);
                assert!(peak >= 0.5 * p.p_avg && peak <= 1.5 * p.p_avg);
            }
        }
    }

    #[test]
    fn multiplier_mean_is_one() {
        let law = PeakLaw::with_gamma(1.0);
        let seeds = SeedTree::new(5);
        let p = PeakRateProcess { p_avg: 1.0 };
        let n = 100_000;
        let mean: f64 = (0..n).map(|t| p.realize(&law, &seeds, 3, t)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn mean_inverse_multiplier_is_ln3() {
        let law = PeakLaw::default();
        assert!((law.mean_inverse_multiplier() - 3f64.ln()).abs() < 1e-15);
        // Monte Carlo cross-check
        let seeds = SeedTree::new(11);
        let n = 200_000u64;
        let mc: f64 = (0..n)
            .map(|t| 1.0 / law.draw_multiplier(&mut seeds.stream(StreamKind::Multiplier, 0, t)))
            .sum::<f64>()
            / n as f64;
        assert!((mc - 3f64.ln()).abs() < 1e-3, "{mc}");
    }

    #[test]
    fn sample_slot_sums_hp_shares() {
        let law = PeakLaw::with_gamma(6.0);
        let seeds = SeedTree::new(2);
        let hp = [HpUser {
            id: 4,
            rate: 200.0,
            peak: PeakRateProcess { p_avg: 10_000.0 },
            arrival: 0,
            sojourn: 10,
        }];
        let video = [(1, PeakRateProcess { p_avg: 9000.0 })];
        let ch = sample_slot(&law, &law, &video, &hp, &seeds, 3);
        let expected = 200.0 / hp[0].peak.realize(&law, &seeds, 4, 3);
        assert_eq!(ch.hp_load, expected);
        assert_eq!(ch.peaks.len(), 1);
    }
}
