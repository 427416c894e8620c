//! One slot's rate allocation, checked against the brute-force oracle.
//!
//!     cargo run --release --example slot_solver

use qoe_sim::oracle::{self, OracleConfig};
use qoe_sim::ratequality::RateQualityParams;
use qoe_sim::slotsolver::{self, Hinge, SlotProblem, UserEntry};

fn user(id: u64, queues: [f64; 5], alpha: f64, beta: f64, peak: f64, sojourn: f64) -> UserEntry {
    let levels = [30.0, 40.0, 50.0, 60.0, 70.0];
    UserEntry {
        id,
        hinges: levels
            .iter()
            .zip(queues)
            .map(|(&level, v)| Hinge {
                level,
                weight: v / sojourn,
            })
            .collect(),
        params: RateQualityParams::new(alpha, beta).expect("alpha > 0"),
        min_rate: 302.0,
        max_rate: 6412.0,
        peak,
        horizon_weight: 1.0 / sojourn,
    }
}

fn main() {
    let problem = SlotProblem {
        users: vec![
            user(0, [0.0, 0.0, 0.2, 1.5, 3.0], 13.1, -34.8, 14_000.0, 180.0),
            user(1, [0.0, 0.0, 0.0, 0.3, 0.9], 9.8, -8.1, 22_000.0, 260.0),
            user(2, [0.4, 0.8, 1.1, 2.0, 2.5], 11.0, -40.0, 9_000.0, 90.0),
        ],
        budget: 0.7,
    };
    let alloc = slotsolver::solve_slot(&problem);
    println!("price {:.4e}, overloaded {}", alloc.dual, alloc.overloaded);
    for (u, r) in problem.users.iter().zip(&alloc.rates) {
        println!(
            "user {}: {:>7.1} kbps, share {:.3}, quality {:.1}",
            u.id,
            r,
            r / u.peak,
            u.params.quality(*r)
        );
    }
    println!("share used {:.6} of {}", problem.load(&alloc.rates), problem.budget);

    let (best, rates) = oracle::grid_minimum(&problem, &OracleConfig::default()).expect("not overloaded");
    println!(
        "objective: solver {:.8}, grid {:.8} at {:?}",
        problem.objective(&alloc.rates),
        best,
        rates.iter().map(|r| r.round()).collect::<Vec<_>>()
    );

    let baseline = slotsolver::solve_average_quality(&problem);
    println!("average-quality allocation: {:?}", baseline.rates.iter().map(|r| r.round()).collect::<Vec<_>>());
}
