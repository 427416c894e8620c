//! Log rate-quality model `q = alpha * ln(r) + beta` and the per-slot
//! parameter sources that feed it.

// negated comparisons below are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeedTree, StreamKind};

/// Lowest and highest available video rate in kbps.
pub const REFERENCE_MIN_RATE: f64 = 302.0;
pub const REFERENCE_MAX_RATE: f64 = 6412.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateQualityParams {
    /// Quality units per unit of `ln(kbps)`.
    pub alpha: f64,
    pub beta: f64,
}

impl RateQualityParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !beta.is_finite() {
            return Err(Error::usage(format!(
                "rate-quality params need finite alpha > 0 (got alpha={alpha}, beta={beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Quality at `rate` kbps. `rate` must be positive.
    #[inline]
    pub fn quality(&self, rate: f64) -> f64 {
        self.alpha * rate.ln() + self.beta
    }

    /// Rate in kbps that delivers quality `q`.
    #[inline]
    pub fn rate_for_quality(&self, q: f64) -> f64 {
        ((q - self.beta) / self.alpha).exp()
    }
}

pub fn quality(params: &RateQualityParams, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::usage(format!("rate must be positive, got {rate}")));
    }
    Ok(params.quality(rate))
}

pub fn rate_for_quality(params: &RateQualityParams, q: f64) -> f64 {
    params.rate_for_quality(q)
}

/// Synthetic parameter law: per slot, draw the quality at `min_rate` and at
/// `max_rate` uniformly from the given ranges and fit the log model through
/// the two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub min_rate: f64,
    pub max_rate: f64,
    pub low_quality: [f64; 2],
    pub high_quality: [f64; 2],
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            min_rate: REFERENCE_MIN_RATE,
            max_rate: REFERENCE_MAX_RATE,
            low_quality: [25.0, 55.0],
            high_quality: [65.0, 95.0],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let [lo_a, lo_b] = self.low_quality;
        let [hi_a, hi_b] = self.high_quality;
        if !(self.min_rate > 0.0 && self.max_rate > self.min_rate) {
            return Err(Error::config("synthetic law needs 0 < min_rate < max_rate"));
        }
        if !(lo_a <= lo_b && hi_a <= hi_b) {
            return Err(Error::config("synthetic quality ranges must be ordered [lo, hi]"));
        }
        // alpha > 0 for every draw
        if !(hi_a > lo_b) {
            return Err(Error::config(
                "synthetic high_quality range must lie strictly above low_quality",
            ));
        }
        Ok(())
    }

    pub fn params_from_endpoints(&self, q_low: f64, q_high: f64) -> RateQualityParams {
        let alpha = (q_high - q_low) / (self.max_rate / self.min_rate).ln();
        let beta = q_low - alpha * self.min_rate.ln();
        RateQualityParams { alpha, beta }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> RateQualityParams {
        let q_low = uniform(rng, self.low_quality);
        let q_high = uniform(rng, self.high_quality);
        self.params_from_endpoints(q_low, q_high)
    }
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Per-video parameter sequences loaded from a CSV with header
/// `video_id,slot,alpha,beta`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceDb {
    videos: BTreeMap<u64, Vec<RateQualityParams>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    video_id: u64,
    slot: u64,
    alpha: f64,
    beta: f64,
}

impl TraceDb {
    pub fn from_sequences(videos: BTreeMap<u64, Vec<RateQualityParams>>) -> Result<Self> {
        if videos.is_empty() || videos.values().any(Vec::is_empty) {
            return Err(Error::config("trace database needs at least one non-empty video"));
        }
        Ok(Self { videos })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["video_id", "slot", "alpha", "beta"] {
            return Err(Error::TraceRow {
                path: path.into(),
                row: 1,
                msg: "header must be video_id,slot,alpha,beta".into(),
            });
        }
        let mut videos: BTreeMap<u64, Vec<RateQualityParams>> = BTreeMap::new();
        for (i, rec) in reader.deserialize::<TraceRow>().enumerate() {
            // header is row 1
            let row = i + 2;
            let bad = |msg: String| Error::TraceRow {
                path: path.into(),
                row,
                msg,
            };
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let params = RateQualityParams::new(rec.alpha, rec.beta).map_err(|e| bad(e.to_string()))?;
            let seq = videos.entry(rec.video_id).or_default();
            if rec.slot != seq.len() as u64 {
                return Err(bad(format!(
                    "video {} expects slot {} next, found {}",
                    rec.video_id,
                    seq.len(),
                    rec.slot
                )));
            }
            seq.push(params);
        }
        if videos.is_empty() {
            return Err(Error::TraceRow {
                path: path.into(),
                row: 1,
                msg: "no data rows".into(),
            });
        }
        Ok(Self { videos })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for (&video_id, seq) in &self.videos {
            for (slot, p) in seq.iter().enumerate() {
                w.serialize(TraceRow {
                    video_id,
                    slot: slot as u64,
                    alpha: p.alpha,
                    beta: p.beta,
                })
                .map_err(|e| Error::csv(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn video_ids(&self) -> Vec<u64> {
        self.videos.keys().copied().collect()
    }

    pub fn sequence(&self, video_id: u64) -> Option<&[RateQualityParams]> {
        self.videos.get(&video_id).map(Vec::as_slice)
    }

    /// Row for `slot`, cycling when the video outlives the trace.
    pub fn row(&self, video_id: u64, slot: u64) -> Option<RateQualityParams> {
        let seq = self.videos.get(&video_id)?;
        Some(seq[(slot % seq.len() as u64) as usize])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RqSource {
    Synthetic(SyntheticSpec),
    TraceFile(TraceDb),
}

impl Default for RqSource {
    fn default() -> Self {
        RqSource::Synthetic(SyntheticSpec::default())
    }
}

impl RqSource {
    /// Picks the video a new user streams. Synthetic sources give every
    /// user its own video; trace databases pick one uniformly.
    pub fn pick_video<R: Rng>(&self, user_id: u64, rng: &mut R) -> u64 {
        match self {
            RqSource::Synthetic(_) => user_id,
            RqSource::TraceFile(db) => {
                let ids = &db.videos;
                let k = rng.random_range(0..ids.len());
                *ids.keys().nth(k).expect("index in range")
            }
        }
    }
}

/// Parameters of `video_id` in (0-based) sojourn slot `slot`. Deterministic
/// in `(seed, video_id, slot)`.
pub fn sample_slot_params(
    source: &RqSource,
    seeds: &SeedTree,
    video_id: u64,
    slot: u64,
) -> Result<RateQualityParams> {
    match source {
        RqSource::Synthetic(spec) => {
            let mut rng = seeds.stream(StreamKind::RateQuality, video_id, slot);
            Ok(spec.sample(&mut rng))
        }
        RqSource::TraceFile(db) => db
            .row(video_id, slot)
            .ok_or_else(|| Error::usage(format!("video {video_id} is not in the trace database"))),
    }
}
