//! Sign-driven stochastic approximation of the admission threshold.
//!
//! After every batch of `L` observed admitted users the threshold moves up
//! by `eps` if anyone in the batch violated its constraints and down
//! otherwise, with `eps = eps0 / m` where `m` counts direction changes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerConfig {
    /// Admitted users per batch (`L`).
    pub batch: usize,
    pub initial_threshold: f64,
    pub initial_step: f64,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            batch: 100,
            initial_threshold: 0.0,
            initial_step: 10.0,
        }
    }
}

/// One threshold component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub theta: f64,
    pub step0: f64,
    /// Direction-change counter, starts at 1.
    pub m: u32,
    pub last_y: Option<i8>,
    pub updates: u64,
    batch_seen: usize,
    batch_violated: bool,
}

impl Component {
    pub fn new(theta: f64, step0: f64) -> Self {
        Self {
            theta,
            step0,
            m: 1,
            last_y: None,
            updates: 0,
            batch_seen: 0,
            batch_violated: false,
        }
    }

    pub fn step(&self) -> f64 {
        self.step0 / self.m as f64
    }

    /// Applies direction `y` (`+1` or `-1`). The first update has nothing
    /// to compare with and leaves `m` alone.
    pub fn update(&mut self, y: i8) {
        debug_assert!(y == 1 || y == -1);
        if self.last_y.is_some_and(|prev| prev != y) {
            self.m += 1;
        }
        self.last_y = Some(y);
        self.theta = (self.theta + self.step() * y as f64).max(0.0);
        self.updates += 1;
    }
}

/// One threshold move, for the trajectory report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    /// Update number of this component, from 1.
    pub n: u64,
    pub component: usize,
    /// Threshold after the update.
    pub theta: f64,
    pub y: i8,
    pub m: u32,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    pub components: Vec<Component>,
    pub batch: usize,
    per_type: bool,
}

impl ThresholdState {
    /// One threshold shared by all users.
    pub fn scalar(cfg: &TunerConfig) -> Self {
        Self {
            components: vec![Component::new(cfg.initial_threshold, cfg.initial_step)],
            batch: cfg.batch.max(1),
            per_type: false,
        }
    }

    /// One threshold per user type, each batching its own type's users.
    pub fn per_type(cfg: &TunerConfig, types: usize) -> Self {
        Self {
            components: (0..types)
                .map(|_| Component::new(cfg.initial_threshold, cfg.initial_step))
                .collect(),
            batch: cfg.batch.max(1),
            per_type: true,
        }
    }

    /// Threshold applied to a user of type position `type_index`.
    pub fn threshold(&self, type_index: Option<usize>) -> f64 {
        self.components[self.component_of(type_index)].theta
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.theta).collect()
    }

    fn component_of(&self, type_index: Option<usize>) -> usize {
        if self.per_type {
            type_index.expect("per-type thresholds need the user's type")
        } else {
            0
        }
    }

    /// Records the verdict of an admitted user at departure. Returns the
    /// update it completed, if any.
    pub fn observe(&mut self, satisfied: bool, type_index: Option<usize>) -> Option<UpdateEvent> {
        let batch = self.batch;
        let k = self.component_of(type_index);
        let c = &mut self.components[k];
        c.batch_seen += 1;
        c.batch_violated |= !satisfied;
        if c.batch_seen < batch {
            return None;
        }
        let y = if c.batch_violated { 1 } else { -1 };
        c.batch_seen = 0;
        c.batch_violated = false;
        c.update(y);
        Some(UpdateEvent {
            n: c.updates,
            component: k,
            theta: c.theta,
            y,
            m: c.m,
            step: c.step(),
        })
    }

    pub fn min_updates(&self) -> u64 {
        self.components.iter().map(|c| c.updates).min().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_completes_at_l() {
        let mut s = ThresholdState::scalar(&TunerConfig::default());
        for _ in 0..99 {
            assert!(s.observe(true, None).is_none());
        }
        let ev = s.observe(true, None).unwrap();
        assert_eq!(ev.y, -1);
        assert_eq!(ev.theta, 0.0);
    }

    #[test]
    fn any_violation_raises() {
        let mut s = ThresholdState::scalar(&TunerConfig::default());
        s.observe(false, None);
        for _ in 0..98 {
            s.observe(true, None);
        }
        let ev = s.observe(true, None).unwrap();
        assert_eq!(ev.y, 1);
        assert_eq!(ev.theta, 10.0);
        assert_eq!(ev.m, 1);
    }

    #[test]
    fn step_recursion() {
        let mut c = Component::new(0.0, 10.0);
        let mut trail = vec![];
        for y in [1, 1, -1] {
            c.update(y);
            trail.push((c.m, c.theta));
        }
        assert_eq!(trail, vec![(1, 10.0), (1, 20.0), (2, 15.0)]);
    }

    #[test]
    fn clamps_at_zero() {
        let mut c = Component::new(5.0, 10.0);
        for _ in 0..10 {
            c.update(-1);
        }
        assert_eq!(c.theta, 0.0);
        assert_eq!(c.m, 1);
    }

    #[test]
    fn step_is_non_increasing() {
        let mut c = Component::new(30.0, 10.0);
        let mut last_step = c.step();
        for k in 0..200u32 {
            let y = if (k * 7 + 3) % 5 < 2 { 1 } else { -1 };
            let before = c.theta;
            c.update(y);
            let step = c.step();
            assert!(step <= last_step);
            if c.theta > 0.0 && before > 0.0 {
                assert!(((c.theta - before).abs() - step).abs() < 1e-12);
            }
            last_step = step;
        }
    }

    #[test]
    fn per_type_components_batch_independently() {
        let cfg = TunerConfig {
            batch: 3,
            ..TunerConfig::default()
        };
        let mut s = ThresholdState::per_type(&cfg, 2);
        assert!(s.observe(false, Some(0)).is_none());
        assert!(s.observe(true, Some(1)).is_none());
        assert!(s.observe(true, Some(0)).is_none());
        assert!(s.observe(true, Some(1)).is_none());
        let ev = s.observe(true, Some(0)).unwrap();
        assert_eq!((ev.component, ev.y), (0, 1));
        let ev = s.observe(true, Some(1)).unwrap();
        assert_eq!((ev.component, ev.y), (1, -1));
        assert_eq!(s.thetas(), vec![10.0, 0.0]);
    }
}
