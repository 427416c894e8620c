//! Estimating a newcomer's quality before admitting it.
//!
//!     cargo run --example admission_estimate

use qoe_sim::adaptation::{ActiveStream, VirtualQueueState};
use qoe_sim::admission::{self, InversePeakMode};
use qoe_sim::channel::PeakLaw;
use qoe_sim::ratequality::RateQualityParams;

fn stream(id: u64, alpha: f64, beta: f64, p_avg: f64, sojourn: u64, queue: f64) -> ActiveStream {
    ActiveStream {
        id,
        user_type: None,
        arrival: 0,
        sojourn,
        params: vec![RateQualityParams { alpha, beta }; sojourn as usize],
        min_rate: 302.0,
        max_rate: 6412.0,
        p_avg,
        targets: vec![(30.0, 0.7), (40.0, 1.0), (50.0, 3.0), (60.0, 7.0), (70.0, 15.0)],
        queue: VirtualQueueState { values: vec![queue; 5] },
        trace: Vec::new(),
        inverse_peak_sum: 0.0,
    }
}

fn main() {
    let law = PeakLaw::with_gamma(6.0);
    let candidate = stream(100, 13.0, -35.0, 12_000.0, 220, 0.0);
    let mut existing = Vec::new();
    println!("existing  estimate  admit@60");
    for k in 0..14u64 {
        let est = admission::estimate_and_decide(&candidate, &existing, 60.0, 0.85, &law, InversePeakMode::Analytic);
        println!("{:>8}  {:>8.2}  {}", existing.len(), est.quality, est.admitted);
        existing.push(stream(k, 11.0 + (k % 3) as f64, -30.0, 9_000.0 + 1_500.0 * (k % 5) as f64, 150 + 10 * k, 0.2));
    }
}
