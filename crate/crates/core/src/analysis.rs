//! Post-hoc evaluation of placements: coverage grids, GDOP exceedance,
//! jammer impact and front summaries.

use serde::{Deserialize, Serialize};

use crate::error::{OspError, Result};
use crate::fitness::{self, NormalizationBounds, ObjectiveScores};
use crate::gdop::GdopValue;
use crate::geo::GeodeticPosition;
use crate::nsga2::ParetoFront;
use crate::scenario::PlacementProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageCell {
    pub point: GeodeticPosition,
    /// Selected receivers in line of sight.
    pub k: usize,
    pub best_gdop: GdopValue,
    pub second_nearest_range_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub cells: Vec<CoverageCell>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JamEntry {
    pub position: GeodeticPosition,
    pub affected_sensor_count: usize,
    pub min_distance_to_sensor_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JamReport {
    pub entries: Vec<JamEntry>,
    pub max_affected: usize,
    pub mean_affected: f64,
    /// `histogram[c]` is the number of jammers affecting exactly `c` receivers.
    pub histogram: Vec<usize>,
}

/// Scores and diagnostics for one chromosome.
pub fn evaluate_placement(
    problem: &PlacementProblem,
    genes: &[bool],
    bounds: &NormalizationBounds,
) -> Result<(ObjectiveScores, CoverageGrid, JamReport)> {
    if genes.len() != problem.n_candidates() {
        return Err(OspError::input(format!(
            "chromosome has {} genes for {} candidates",
            genes.len(),
            problem.n_candidates()
        )));
    }
    let selected = fitness::selection_of(genes);
    let eval = fitness::evaluate_selection(problem, &selected)?;
    let scores = ObjectiveScores::new(&eval.raw, bounds, &problem.of3_weights);

    let cells = problem
        .grid
        .points
        .iter()
        .zip(&eval.points)
        .map(|(p, a)| CoverageCell {
            point: *p,
            k: a.visible,
            best_gdop: a.gdop,
            second_nearest_range_km: a.range2_km,
        })
        .collect();

    let entries: Vec<JamEntry> = problem
        .jammers
        .iter()
        .zip(&eval.jammers)
        .map(|(j, i)| JamEntry {
            position: j.position,
            affected_sensor_count: i.affected,
            min_distance_to_sensor_km: i.min_distance_km,
        })
        .collect();
    let max_affected = entries.iter().map(|e| e.affected_sensor_count).max().unwrap_or(0);
    let mean_affected = if entries.is_empty() {
        0.0
    } else {
        entries.iter().map(|e| e.affected_sensor_count as f64).sum::<f64>() / entries.len() as f64
    };
    let mut histogram = vec![0; max_affected + 1];
    for e in &entries {
        histogram[e.affected_sensor_count] += 1;
    }
    Ok((
        scores,
        CoverageGrid { cells },
        JamReport {
            entries,
            max_affected,
            mean_affected,
            histogram,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdopDistribution {
    pub thresholds: Vec<f64>,
    /// Fraction of all points above each threshold.
    pub pooled: Vec<f64>,
    /// `(altitude_m, fractions)` per sampled altitude, ascending.
    pub per_altitude: Vec<(f64, Vec<f64>)>,
}

fn exceedance(cells: &[&CoverageCell], thresholds: &[f64]) -> Vec<f64> {
    thresholds
        .iter()
        .map(|&t| {
            if cells.is_empty() {
                return 0.0;
            }
            let above = cells.iter().filter(|c| c.best_gdop.value() > t).count();
            above as f64 / cells.len() as f64
        })
        .collect()
}

/// Fraction of points whose GDOP exceeds each threshold. Infinite GDOP
/// exceeds every threshold.
pub fn gdop_distribution(grid: &CoverageGrid, thresholds: &[f64]) -> GdopDistribution {
    let all: Vec<&CoverageCell> = grid.cells.iter().collect();
    let mut altitudes: Vec<f64> = grid.cells.iter().map(|c| c.point.altitude_m).collect();
    altitudes.sort_by(f64::total_cmp);
    altitudes.dedup();
    let per_altitude = altitudes
        .into_iter()
        .map(|alt| {
            let level: Vec<&CoverageCell> =
                grid.cells.iter().filter(|c| c.point.altitude_m == alt).collect();
            (alt, exceedance(&level, thresholds))
        })
        .collect();
    GdopDistribution {
        thresholds: thresholds.to_vec(),
        pooled: exceedance(&all, thresholds),
        per_altitude,
    }
}

/// One row of a front summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: usize,
    pub n_sensors: usize,
    pub of1: f64,
    pub of2: f64,
    pub of3: f64,
    pub of3_components: [f64; 3],
    pub normalized: [f64; 3],
    pub penalty: f64,
}

impl SummaryRow {
    pub fn from_scores(id: usize, s: &ObjectiveScores) -> Self {
        Self {
            id,
            n_sensors: s.n_sensors,
            of1: s.of1,
            of2: s.of2,
            of3: s.of3,
            of3_components: s.of3_components,
            normalized: s.normalized,
            penalty: s.penalty,
        }
    }
}

/// One row per front member.
pub fn pareto_summary(front: &ParetoFront) -> Vec<SummaryRow> {
    front
        .members
        .iter()
        .map(|m| SummaryRow::from_scores(m.id, &m.scores))
        .collect()
}

/// Member with at most `budget_cap` sensors minimizing the weighted sum of
/// normalized objectives; ties go to fewer sensors, then the lower id.
pub fn select_solution(rows: &[SummaryRow], budget_cap: Option<usize>, weights: [f64; 3]) -> Result<usize> {
    crate::objectives::check_weights(&weights)?;
    let cost = |r: &SummaryRow| -> f64 { r.normalized.iter().zip(&weights).map(|(v, w)| v * w).sum() };
    rows.iter()
        .filter(|r| budget_cap.is_none_or(|cap| r.n_sensors <= cap))
        .min_by(|a, b| {
            cost(a)
                .total_cmp(&cost(b))
                .then(a.n_sensors.cmp(&b.n_sensors))
                .then(a.id.cmp(&b.id))
        })
        .map(|r| r.id)
        .ok_or_else(|| {
            OspError::NoFeasibleSolution(match budget_cap {
                Some(cap) => format!("no front member uses {cap} or fewer sensors"),
                None => "the front is empty".into(),
            })
        })
}
