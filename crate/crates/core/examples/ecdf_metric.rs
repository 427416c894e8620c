//! Second-order eCDF of a quality trace and the grid constraint check.
//!
//!     cargo run --example ecdf_metric

use qoe_sim::metrics::{self, ConstraintSet, GridPoint, QualityTrace};

fn main() -> qoe_sim::Result<()> {
    // a stream that dips twice before recovering
    let mut values = vec![68.0; 120];
    values[20..35].fill(38.0);
    values[70..80].fill(27.0);
    let trace = QualityTrace::new(values)?;

    let grid = ConstraintSet::reference_grid();
    let verdict = metrics::satisfies(&trace, &grid, None)?;
    println!("level  ecdf2   bound  slack");
    for m in &verdict.margins {
        println!("{:>5}  {:>6.3}  {:>5}  {:+.3}", m.level, m.value, m.bound, m.slack());
    }
    println!("satisfied: {}", verdict.satisfied);

    let stats = metrics::pooled_stats(&trace);
    println!("mean {:.2}  min {:.1}  variance {:.1}", stats.mean, stats.min, stats.variance);

    // a non-convex grid and the convex bound it implies between points
    let raw = vec![
        GridPoint { x: 30.0, h: 0.5 },
        GridPoint { x: 40.0, h: 4.0 },
        GridPoint { x: 50.0, h: 5.0 },
    ];
    let hull = metrics::convex_envelope(&raw);
    for x in [30.0, 35.0, 40.0, 45.0, 50.0] {
        println!(
            "x={x}: hull bound {:.3}, trace ecdf2 {:.3}",
            metrics::interpolate(&hull, x),
            metrics::ecdf2(&trace, x)
        );
    }
    Ok(())
}
