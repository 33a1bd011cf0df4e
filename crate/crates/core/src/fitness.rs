//! Evaluation of a selection against a precomputed problem.
//!
//! This is the only place objective values are computed for the optimizer,
//! the analysis reports and the CLI, so all of them agree bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{OspError, Result};
use crate::gdop::{GdopTable, GdopValue};
use crate::objectives::{self, gdop_term, range_term};
use crate::scenario::PlacementProblem;

/// One of the three optimized objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Of1,
    Of2,
    Of3,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Of1, Objective::Of2, Objective::Of3];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Scores that do not depend on normalization bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScores {
    pub of1: f64,
    pub of2: f64,
    /// OF3 directions 1 to 3 before normalization.
    pub directions: [f64; 3],
    pub penalty: f64,
    pub n_sensors: usize,
}

impl RawScores {
    /// `[of1, of2, d1, d2, d3]`, the quantities that get normalized.
    pub fn components(&self) -> [f64; 5] {
        [
            self.of1,
            self.of2,
            self.directions[0],
            self.directions[1],
            self.directions[2],
        ]
    }
}

/// Per-point coverage achieved by a selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointAchievement {
    /// Selected receivers in line of sight.
    pub visible: usize,
    pub gdop: GdopValue,
    /// Distance to the second-nearest visible receiver; infinite below two.
    pub range2_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammerImpact {
    /// Selected receivers the jammer affects under its rule.
    pub affected: usize,
    /// Selected receivers in the jammer's line of sight.
    pub in_los: usize,
    /// Distance to the nearest selected receiver; infinite for no selection.
    pub min_distance_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub raw: RawScores,
    pub points: Vec<PointAchievement>,
    pub jammers: Vec<JammerImpact>,
}

/// Running per-component minimum and maximum of raw scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub min: [f64; 5],
    pub max: [f64; 5],
}

impl Default for NormalizationBounds {
    fn default() -> Self {
        Self::empty()
    }
}

impl NormalizationBounds {
    pub fn empty() -> Self {
        Self {
            min: [f64::INFINITY; 5],
            max: [f64::NEG_INFINITY; 5],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.iter().zip(&self.max).any(|(lo, hi)| lo > hi)
    }

    pub fn include(&mut self, raw: &RawScores) {
        for (k, v) in raw.components().into_iter().enumerate() {
            self.min[k] = self.min[k].min(v);
            self.max[k] = self.max[k].max(v);
        }
    }

    pub fn merge(&mut self, other: &NormalizationBounds) {
        for k in 0..5 {
            self.min[k] = self.min[k].min(other.min[k]);
            self.max[k] = self.max[k].max(other.max[k]);
        }
    }

    /// Bounds from zero to the worst value each component can take, used
    /// when no optimizer run supplies observed bounds.
    pub fn reference(problem: &PlacementProblem) -> Self {
        let req = &problem.requirements;
        let grid = &problem.grid;
        let m = grid.len().max(1) as f64;
        let of1 = grid
            .required_gdop
            .iter()
            .map(|&g| {
                let worst = req.deviation.deviation(g, req.gdop_cap).max(req.deviation.deviation(g, 0.0));
                worst * worst
            })
            .sum::<f64>()
            / m;
        let of2 = grid
            .required_range_km
            .iter()
            .map(|&r| {
                let worst = req
                    .deviation
                    .deviation(r, problem.range_cap_km)
                    .max(req.deviation.deviation(r, 0.0));
                worst * worst
            })
            .sum::<f64>()
            / m;
        let d1 = req.required_min_sensor_spacing_km.powi(2);
        let d2 = req.required_min_jammer_distance_km.powi(2);
        let excess = problem
            .n_candidates()
            .saturating_sub(req.required_max_sensors_in_jammer_los as usize) as f64;
        Self {
            min: [0.0; 5],
            max: [of1, of2, d1, d2, excess * excess],
        }
    }

    pub fn normalize(&self, raw: &RawScores) -> [f64; 5] {
        let c = raw.components();
        std::array::from_fn(|k| objectives::normalize_score(c[k], self.min[k], self.max[k]))
    }
}

/// Raw scores plus their normalized forms under a set of bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveScores {
    pub of1: f64,
    pub of2: f64,
    /// Weighted sum of the normalized directions.
    pub of3: f64,
    pub of3_components: [f64; 3],
    pub penalty: f64,
    pub n_sensors: usize,
    /// Normalized `[of1, of2, of3]`; of3 is already normalized.
    pub normalized: [f64; 3],
    pub normalized_components: [f64; 3],
}

impl ObjectiveScores {
    pub fn new(raw: &RawScores, bounds: &NormalizationBounds, weights: &[f64; 3]) -> Self {
        let n = bounds.normalize(raw);
        let directions = [n[2], n[3], n[4]];
        let of3: f64 = directions.iter().zip(weights).map(|(d, w)| d * w).sum();
        Self {
            of1: raw.of1,
            of2: raw.of2,
            of3,
            of3_components: raw.directions,
            penalty: raw.penalty,
            n_sensors: raw.n_sensors,
            normalized: [n[0], n[1], of3],
            normalized_components: directions,
        }
    }

    /// Minimized vector: each active normalized objective blended with the
    /// penalty.
    pub fn objective_vector(&self, active: &[Objective], pareto_weight: f64) -> Vec<f64> {
        active
            .iter()
            .map(|o| objectives::weighted_fitness(self.normalized[o.index()], self.penalty, pareto_weight))
            .collect()
    }
}

fn check_selection(problem: &PlacementProblem, selected: &[usize]) -> Result<()> {
    let n = problem.n_candidates();
    for w in selected.windows(2) {
        if w[0] >= w[1] {
            return Err(OspError::input("selection must be strictly increasing"));
        }
    }
    if let Some(&last) = selected.last() {
        if last >= n {
            return Err(OspError::input(format!(
                "site index {last} out of range for {n} candidates"
            )));
        }
    }
    Ok(())
}

/// Indices of the set genes.
pub fn selection_of(genes: &[bool]) -> Vec<usize> {
    genes
        .iter()
        .enumerate()
        .filter_map(|(i, &g)| g.then_some(i))
        .collect()
}

/// Full evaluation of `selected` (strictly increasing site indices).
pub fn evaluate_selection(problem: &PlacementProblem, selected: &[usize]) -> Result<Evaluation> {
    check_selection(problem, selected)?;
    Ok(evaluate_unchecked(problem, selected))
}

/// Raw scores of `selected`.
pub fn raw_scores(problem: &PlacementProblem, selected: &[usize]) -> Result<RawScores> {
    Ok(evaluate_selection(problem, selected)?.raw)
}

pub(crate) fn evaluate_unchecked(problem: &PlacementProblem, selected: &[usize]) -> Evaluation {
    let g = &problem.geometry;
    let req = &problem.requirements;
    let grid = &problem.grid;
    let cap = problem.strategy.cap();

    let mut table = GdopTable::default();
    let mut near: Vec<(f64, usize)> = Vec::with_capacity(selected.len());
    let mut dirs: Vec<[f64; 3]> = Vec::with_capacity(selected.len());
    let mut points = Vec::with_capacity(grid.len());
    let (mut of1, mut of2) = (0.0, 0.0);
    for j in 0..grid.len() {
        let los = g.point_los.row(j);
        let dist = g.point_distance_km.row(j);
        near.clear();
        near.extend(selected.iter().filter(|&&i| los[i]).map(|&i| (dist[i], i)));
        near.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let visible = near.len();
        let range2_km = near.get(1).map_or(f64::INFINITY, |x| x.0);
        if let Some(cap) = cap {
            near.truncate(cap);
        }
        dirs.clear();
        dirs.extend(near.iter().map(|&(_, i)| g.point_cosines[[j, i]]));
        let gdop = table.best(&dirs);
        of1 += gdop_term(grid.required_gdop[j], gdop.value(), req.gdop_cap, req.deviation);
        of2 += range_term(
            grid.required_range_km[j],
            range2_km,
            problem.range_cap_km,
            req.deviation,
        );
        points.push(PointAchievement {
            visible,
            gdop,
            range2_km,
        });
    }
    let m = grid.len().max(1) as f64;

    let d1 = if selected.len() < 2 {
        0.0
    } else {
        let nearest: Vec<f64> = selected
            .iter()
            .map(|&a| {
                let row = g.sensor_distance_km.row(a);
                selected
                    .iter()
                    .filter(|&&b| b != a)
                    .map(|&b| row[b])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        objectives::spacing_msd(&nearest, req.required_min_sensor_spacing_km)
    };

    let mut jammers = Vec::with_capacity(problem.jammers.len());
    let mut nearest = Vec::with_capacity(problem.jammers.len());
    let mut counts = Vec::with_capacity(problem.jammers.len());
    for (l, jam) in problem.jammers.iter().enumerate() {
        let los = g.jammer_los.row(l);
        let dist = g.jammer_distance_km.row(l);
        let mut affected = 0;
        let mut in_los = 0;
        let mut min_distance_km = f64::INFINITY;
        for &i in selected {
            min_distance_km = min_distance_km.min(dist[i]);
            if los[i] {
                in_los += 1;
            }
            if jam.affects(los[i], dist[i]) {
                affected += 1;
            }
        }
        nearest.push((in_los > 0).then_some(min_distance_km));
        counts.push(affected as u32);
        jammers.push(JammerImpact {
            affected,
            in_los,
            min_distance_km,
        });
    }
    let d2 = objectives::jammer_distance_msd(&nearest, req.required_min_jammer_distance_km);
    let d3 = objectives::jammer_count_msd(&counts, req.required_max_sensors_in_jammer_los);

    let n = problem.n_candidates();
    let share = selected.len() as f64 / n as f64;
    let raw = RawScores {
        of1: of1 / m,
        of2: of2 / m,
        directions: [d1, d2, d3],
        penalty: 0.5 * share * share,
        n_sensors: selected.len(),
    };
    Evaluation {
        raw,
        points,
        jammers,
    }
}
