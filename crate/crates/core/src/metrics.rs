//! Second-order empirical CDF of a quality trace and QoE constraint checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest and highest value on the RDMOS quality scale.
pub const QUALITY_FLOOR: f64 = 0.0;
pub const QUALITY_CEIL: f64 = 100.0;

/// Per-slot delivered quality of one user over its sojourn.
///
/// Values are clamped into `[0, 100]` on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityTrace {
    values: Vec<f64>,
}

impl QualityTrace {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("quality trace must hold at least one slot"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::usage(format!("quality trace value at slot {pos} is not finite")));
        }
        Ok(Self {
            values: values.into_iter().map(clamp_quality).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sojourn length in slots.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub fn clamp_quality(q: f64) -> f64 {
    q.clamp(QUALITY_FLOOR, QUALITY_CEIL)
}

/// `(1/T) * sum_t max(x - q(t), 0)`: how long and how far the trace sits
/// below `x`, averaged over the trace.
pub fn ecdf2(trace: &QualityTrace, x: f64) -> f64 {
    ecdf2_values(trace.values(), x)
}

pub(crate) fn ecdf2_values(values: &[f64], x: f64) -> f64 {
    let total: f64 = values.iter().map(|&q| (x - q).max(0.0)).sum();
    total / values.len() as f64
}

/// One point of a Case-I constraint grid: `ecdf2(x) <= h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub h: f64,
}

/// Case-II constraint for users whose quality expectation is `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeConstraint {
    pub id: usize,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case", try_from = "RawConstraintSet")]
pub enum ConstraintSet {
    /// Expectation unknown: every user must meet every grid point.
    Grid { grid: Vec<GridPoint> },
    /// Expectation known: a user of type `j` must meet only `(g_j, h_j)`.
    Typed { types: Vec<TypeConstraint> },
}

#[derive(Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
enum RawConstraintSet {
    Grid { grid: Vec<GridPoint> },
    Typed { types: Vec<TypeConstraint> },
}

impl TryFrom<RawConstraintSet> for ConstraintSet {
    type Error = Error;

    fn try_from(raw: RawConstraintSet) -> Result<Self> {
        match raw {
            RawConstraintSet::Grid { grid } => ConstraintSet::grid(grid),
            RawConstraintSet::Typed { types } => ConstraintSet::typed(types),
        }
    }
}

impl ConstraintSet {
    pub fn grid(grid: Vec<GridPoint>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::config("constraint grid is empty"));
        }
        for p in &grid {
            if !p.x.is_finite() || !p.h.is_finite() || p.h < 0.0 {
                return Err(Error::config(format!(
                    "grid point ({}, {}) needs finite x and h >= 0",
                    p.x, p.h
                )));
            }
        }
        for w in grid.windows(2) {
            if w[1].x <= w[0].x {
                return Err(Error::config("constraint grid must be strictly increasing in x"));
            }
            if w[1].h < w[0].h {
                return Err(Error::config(format!(
                    "bound at x={} is tighter than at x={}",
                    w[1].x, w[0].x
                )));
            }
        }
        Ok(ConstraintSet::Grid { grid })
    }

    pub fn typed(types: Vec<TypeConstraint>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::config("typed constraint set is empty"));
        }
        for (i, t) in types.iter().enumerate() {
            if !t.g.is_finite() || !t.h.is_finite() || t.h < 0.0 {
                return Err(Error::config(format!("type {} needs finite g and h >= 0", t.id)));
            }
            if types[..i].iter().any(|o| o.id == t.id) {
                return Err(Error::config(format!("duplicate type id {}", t.id)));
            }
        }
        Ok(ConstraintSet::Typed { types })
    }

    /// The grid used in the reference Case-I study.
    pub fn reference_grid() -> Self {
        let grid = [(30.0, 0.7), (40.0, 1.0), (50.0, 3.0), (60.0, 7.0), (70.0, 15.0)]
            .into_iter()
            .map(|(x, h)| GridPoint { x, h })
            .collect();
        ConstraintSet::Grid { grid }
    }

    /// Two user types with expectations 40 and 60 and bound 1 each.
    pub fn reference_types() -> Self {
        ConstraintSet::Typed {
            types: vec![
                TypeConstraint { id: 0, g: 40.0, h: 1.0 },
                TypeConstraint { id: 1, g: 60.0, h: 1.0 },
            ],
        }
    }

    pub fn is_typed(&self) -> bool {
        matches!(self, ConstraintSet::Typed { .. })
    }

    /// Number of Case-II types, or 0 for a grid.
    pub fn type_count(&self) -> usize {
        match self {
            ConstraintSet::Grid { .. } => 0,
            ConstraintSet::Typed { types } => types.len(),
        }
    }

    /// Position of type `id` in the type list.
    pub fn type_index(&self, id: usize) -> Option<usize> {
        match self {
            ConstraintSet::Grid { .. } => None,
            ConstraintSet::Typed { types } => types.iter().position(|t| t.id == id),
        }
    }

    /// `(level, bound)` pairs that apply to a user. For Case II this is the
    /// user's own type only; `user_type` is the type id.
    pub fn applicable(&self, user_type: Option<usize>) -> Result<Vec<(f64, f64)>> {
        match self {
            ConstraintSet::Grid { grid } => Ok(grid.iter().map(|p| (p.x, p.h)).collect()),
            ConstraintSet::Typed { types } => {
                let id = user_type
                    .ok_or_else(|| Error::usage("typed constraints need the user's type"))?;
                let t = types
                    .iter()
                    .find(|t| t.id == id)
                    .ok_or_else(|| Error::usage(format!("unknown user type {id}")))?;
                Ok(vec![(t.g, t.h)])
            }
        }
    }

    /// Every level at which a report column is emitted.
    pub fn report_levels(&self) -> Vec<f64> {
        match self {
            ConstraintSet::Grid { grid } => grid.iter().map(|p| p.x).collect(),
            ConstraintSet::Typed { types } => types.iter().map(|t| t.g).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub level: f64,
    pub bound: f64,
    pub value: f64,
}

impl Margin {
    /// `bound - ecdf2(level)`; negative when violated.
    pub fn slack(&self) -> f64 {
        self.bound - self.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Satisfaction {
    pub satisfied: bool,
    pub margins: Vec<Margin>,
}

pub fn satisfies(
    trace: &QualityTrace,
    constraints: &ConstraintSet,
    user_type: Option<usize>,
) -> Result<Satisfaction> {
    let margins: Vec<Margin> = constraints
        .applicable(user_type)?
        .into_iter()
        .map(|(level, bound)| Margin {
            level,
            bound,
            value: ecdf2(trace, level),
        })
        .collect();
    let satisfied = margins.iter().all(|m| m.value <= m.bound);
    Ok(Satisfaction { satisfied, margins })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledStats {
    pub mean: f64,
    pub min: f64,
    /// Population variance (divides by `T`).
    pub variance: f64,
}

pub fn pooled_stats(trace: &QualityTrace) -> PooledStats {
    let n = trace.len() as f64;
    let mean = trace.mean();
    let min = trace.values().iter().copied().fold(f64::INFINITY, f64::min);
    let variance = trace.values().iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n;
    PooledStats {
        mean,
        min,
        variance,
    }
}

/// Lower convex envelope of a constraint grid (the points whose
/// piecewise-linear interpolant is the largest convex minorant).
pub fn convex_envelope(grid: &[GridPoint]) -> Vec<GridPoint> {
    let mut hull: Vec<GridPoint> = Vec::with_capacity(grid.len());
    for &p in grid {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or above the chord a -> p
            let cross = (b.x - a.x) * (p.h - a.h) - (b.h - a.h) * (p.x - a.x);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Piecewise-linear interpolant through `points` (sorted by `x`), held
/// constant outside the grid.
pub fn interpolate(points: &[GridPoint], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first.x {
        return first.h;
    }
    if x >= last.x {
        return last.h;
    }
    let k = points.partition_point(|p| p.x <= x);
    let (a, b) = (points[k - 1], points[k]);
    let t = (x - a.x) / (b.x - a.x);
    a.h + t * (b.h - a.h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(v: &[f64]) -> QualityTrace {
        QualityTrace::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ecdf2_examples() {
        assert_eq!(ecdf2(&trace(&[50.0; 4]), 45.0), 0.0);
        assert_eq!(ecdf2(&trace(&[30.0, 50.0]), 40.0), 5.0);
        for c in [0.0, 12.5, 50.0, 99.0] {
            for x in [0.0, 10.0, 50.0, 100.0] {
                assert_eq!(ecdf2(&trace(&[c; 7]), x), (x - c).max(0.0));
            }
        }
    }

    #[test]
    fn empty_trace_is_rejected() {
        assert!(matches!(QualityTrace::new(vec![]), Err(Error::Usage(_))));
        assert!(QualityTrace::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn trace_values_are_clamped() {
        let t = trace(&[-5.0, 50.0, 130.0]);
        assert_eq!(t.values(), &[0.0, 50.0, 100.0]);
    }

    #[test]
    fn reference_grid_verdicts() {
        let grid = ConstraintSet::reference_grid();
        let ok = satisfies(&trace(&[70.0; 10]), &grid, None).unwrap();
        assert!(ok.satisfied);

        let bad = satisfies(&trace(&[29.0; 10]), &grid, None).unwrap();
        assert!(!bad.satisfied);
        let first = bad.margins[0];
        assert_eq!(first.level, 30.0);
        assert_eq!(first.value, 1.0);
        assert!(first.slack() < 0.0);
    }

    #[test]
    fn typed_checks_only_own_type() {
        let types = ConstraintSet::typed(vec![
            TypeConstraint { id: 0, g: 40.0, h: 1.0 },
            TypeConstraint { id: 1, g: 60.0, h: 1.0 },
        ])
        .unwrap();
        let s = satisfies(&trace(&[60.0; 5]), &types, Some(1)).unwrap();
        assert!(s.satisfied);
        assert_eq!(s.margins.len(), 1);
        assert_eq!(s.margins[0].slack(), 1.0);

        // 45 passes type 0 (g=40) but fails type 1 (g=60)
        let t = trace(&[45.0; 5]);
        assert!(satisfies(&t, &types, Some(0)).unwrap().satisfied);
        assert!(!satisfies(&t, &types, Some(1)).unwrap().satisfied);
    }

    #[test]
    fn typed_needs_known_type() {
        let types = ConstraintSet::reference_types();
        let t = trace(&[60.0]);
        assert!(matches!(satisfies(&t, &types, None), Err(Error::Usage(_))));
        assert!(matches!(satisfies(&t, &types, Some(7)), Err(Error::Usage(_))));
    }

    #[test]
    fn constraint_validation() {
        let p = |x, h| GridPoint { x, h };
        assert!(ConstraintSet::grid(vec![p(30.0, 1.0), p(30.0, 2.0)]).is_err());
        assert!(ConstraintSet::grid(vec![p(30.0, 2.0), p(40.0, 1.0)]).is_err());
        assert!(ConstraintSet::grid(vec![p(30.0, -1.0)]).is_err());
        assert!(ConstraintSet::grid(vec![]).is_err());
        let dup = vec![
            TypeConstraint { id: 3, g: 40.0, h: 1.0 },
            TypeConstraint { id: 3, g: 60.0, h: 1.0 },
        ];
        assert!(ConstraintSet::typed(dup).is_err());
    }

    #[test]
    fn constraint_set_from_toml() {
        let src = r#"
            case = "grid"
            grid = [{ x = 30.0, h = 0.7 }, { x = 40.0, h = 1.0 }]
        "#;
        let c: ConstraintSet = toml::from_str(src).unwrap();
        assert_eq!(c.report_levels(), vec![30.0, 40.0]);

        let bad = r#"
            case = "grid"
            grid = [{ x = 40.0, h = 0.7 }, { x = 30.0, h = 1.0 }]
        "#;
        assert!(toml::from_str::<ConstraintSet>(bad).is_err());
    }

    #[test]
    fn pooled_stats_examples() {
        let s = pooled_stats(&trace(&[40.0, 60.0]));
        assert_eq!((s.mean, s.min, s.variance), (50.0, 40.0, 100.0));
        assert_eq!(pooled_stats(&trace(&[33.0; 6])).variance, 0.0);
        let one = pooled_stats(&trace(&[12.0]));
        assert_eq!((one.mean, one.min), (12.0, 12.0));
    }

    #[test]
    fn envelope_of_convex_grid_is_itself() {
        let ConstraintSet::Grid { grid } = ConstraintSet::reference_grid() else {
            unreachable!()
        };
        assert_eq!(convex_envelope(&grid), grid);
        assert_eq!(interpolate(&grid, 45.0), 2.0);
        assert_eq!(interpolate(&grid, 10.0), 0.7);
    }

    #[test]
    fn envelope_drops_points_above_chord() {
        let p = |x, h| GridPoint { x, h };
        let grid = [p(0.0, 0.0), p(1.0, 5.0), p(2.0, 6.0)];
        assert_eq!(convex_envelope(&grid), vec![p(0.0, 0.0), p(2.0, 6.0)]);
    }
}
