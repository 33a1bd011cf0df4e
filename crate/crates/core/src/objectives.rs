//! Security objectives, the knapsack penalty and score normalization.
//!
//! Every objective is a mean squared deviation between an achieved and a
//! required quantity, minimized by the optimizer:
//!
//! * OF1: best four-receiver GDOP at each airspace sample.
//! * OF2: range to the second-nearest receiver in line of sight, the
//!   precondition for a two-receiver location check.
//! * OF3: anti-jamming topology, a weighted sum of three normalized
//!   directions (receiver spacing, jammer distance, receivers a jammer hits).
//!
//! The functions here take plain positions and are the reference route.
//! [`crate::fitness`] evaluates the same quantities against a precomputed
//! [`crate::scenario::PlacementProblem`] and reuses the reducers below.

use serde::{Deserialize, Serialize};

use crate::error::{OspError, Result};
use crate::gdop::{self, SubsetStrategy};
use crate::geo::{self, EcefPosition, GeodeticPosition, PropagationParams};
use crate::scenario::AirspaceGrid;

/// How achieved values are compared with required ones in OF1 and OF2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMode {
    /// Only values worse than required count (`achieved > required`).
    #[default]
    Excess,
    /// Any difference counts.
    Symmetric,
}

impl DeviationMode {
    #[inline]
    pub fn deviation(self, required: f64, achieved: f64) -> f64 {
        match self {
            DeviationMode::Excess => (achieved - required).max(0.0),
            DeviationMode::Symmetric => (achieved - required).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveRequirements {
    pub required_gdop: f64,
    pub required_range_km: f64,
    pub required_min_sensor_spacing_km: f64,
    pub required_min_jammer_distance_km: f64,
    pub required_max_sensors_in_jammer_los: u32,
    /// Acceptance tolerance on |achieved - required| GDOP.
    pub gdop_tolerance: f64,
    pub range_tolerance_km: f64,
    pub spacing_tolerance_km: f64,
    pub jammer_distance_tolerance_km: f64,
    pub los_tolerance: f64,
    /// Stand-in for an infinite achieved GDOP.
    pub gdop_cap: f64,
    /// Stand-in for an infinite achieved range; `None` means the area diagonal.
    pub range_cap_km: Option<f64>,
    pub deviation: DeviationMode,
}

impl Default for ObjectiveRequirements {
    fn default() -> Self {
        Self {
            required_gdop: 10.0,
            required_range_km: 150.0,
            required_min_sensor_spacing_km: 80.0,
            required_min_jammer_distance_km: 80.0,
            required_max_sensors_in_jammer_los: 0,
            gdop_tolerance: 1.0,
            range_tolerance_km: 10.0,
            spacing_tolerance_km: 10.0,
            jammer_distance_tolerance_km: 10.0,
            los_tolerance: 1.0,
            gdop_cap: 100.0,
            range_cap_km: None,
            deviation: DeviationMode::Excess,
        }
    }
}

impl ObjectiveRequirements {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("required_gdop", self.required_gdop),
            ("required_range_km", self.required_range_km),
            ("required_min_sensor_spacing_km", self.required_min_sensor_spacing_km),
            ("required_min_jammer_distance_km", self.required_min_jammer_distance_km),
            ("gdop_tolerance", self.gdop_tolerance),
            ("range_tolerance_km", self.range_tolerance_km),
            ("spacing_tolerance_km", self.spacing_tolerance_km),
            ("jammer_distance_tolerance_km", self.jammer_distance_tolerance_km),
            ("los_tolerance", self.los_tolerance),
            ("gdop_cap", self.gdop_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OspError::config(
                    format!("requirements.{name}"),
                    "must be positive and finite",
                ));
            }
        }
        if self.gdop_cap <= self.required_gdop {
            return Err(OspError::config(
                "requirements.gdop_cap",
                "must exceed required_gdop",
            ));
        }
        if let Some(cap) = self.range_cap_km {
            if !(cap > self.required_range_km && cap.is_finite()) {
                return Err(OspError::config(
                    "requirements.range_cap_km",
                    "must be finite and exceed required_range_km",
                ));
            }
        }
        Ok(())
    }
}

/// When a receiver counts as affected by a jammer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AffectRule {
    /// Any receiver in the jammer's line of sight.
    #[default]
    Los,
    /// In line of sight and JSR at or above `threshold`, with the legitimate
    /// transmitter `reference_range_km` from the receiver.
    LosAndJsr {
        threshold: f64,
        reference_range_km: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JammerModel {
    pub position: GeodeticPosition,
    pub power_w: f64,
    pub antenna_gain: f64,
    pub transmitter_power_w: f64,
    pub transmitter_gain: f64,
    pub affect_rule: AffectRule,
}

impl JammerModel {
    /// LOS-only jammer with equal jammer and transmitter power and gain.
    pub fn at(position: GeodeticPosition) -> Self {
        Self {
            position,
            power_w: 1.0,
            antenna_gain: 1.0,
            transmitter_power_w: 1.0,
            transmitter_gain: 1.0,
            affect_rule: AffectRule::Los,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("power_w", self.power_w),
            ("antenna_gain", self.antenna_gain),
            ("transmitter_power_w", self.transmitter_power_w),
            ("transmitter_gain", self.transmitter_gain),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OspError::config(
                    format!("jammers.{name}"),
                    "must be strictly positive",
                ));
            }
        }
        if let AffectRule::LosAndJsr {
            threshold,
            reference_range_km,
        } = self.affect_rule
        {
            if !(threshold > 0.0 && reference_range_km > 0.0) {
                return Err(OspError::config(
                    "jammers.affect_rule",
                    "threshold and reference_range_km must be positive",
                ));
            }
        }
        Ok(())
    }

    /// JSR given the two distances (any common unit).
    pub fn jsr_at(&self, transmitter_to_sensor: f64, jammer_to_sensor: f64) -> f64 {
        if jammer_to_sensor == 0.0 {
            return f64::INFINITY;
        }
        (self.power_w * self.antenna_gain * transmitter_to_sensor * transmitter_to_sensor)
            / (self.transmitter_power_w
                * self.transmitter_gain
                * jammer_to_sensor
                * jammer_to_sensor)
    }

    /// Whether a receiver in line of sight at `distance_km` is affected.
    pub fn affects(&self, in_los: bool, distance_km: f64) -> bool {
        match self.affect_rule {
            AffectRule::Los => in_los,
            AffectRule::LosAndJsr {
                threshold,
                reference_range_km,
            } => in_los && self.jsr_at(reference_range_km, distance_km) >= threshold,
        }
    }
}

/// Jamming-to-signal ratio at `sensor`.
pub fn jsr(jammer: &JammerModel, sensor: &EcefPosition, transmitter: &EcefPosition) -> f64 {
    let d_ts = geo::euclidean_distance(transmitter, sensor);
    let d_js = geo::euclidean_distance(&jammer.position.to_ecef(), sensor);
    jammer.jsr_at(d_ts, d_js)
}

// Reducers shared by the reference functions and the precomputed evaluator.

/// Squared deviation of one OF1 sample, saturating at `cap`.
#[inline]
pub fn gdop_term(required: f64, achieved: f64, cap: f64, mode: DeviationMode) -> f64 {
    let d = mode.deviation(required, achieved.min(cap));
    d * d
}

/// Squared deviation of one OF2 sample, saturating at `cap`.
#[inline]
pub fn range_term(required_km: f64, achieved_km: f64, cap_km: f64, mode: DeviationMode) -> f64 {
    let d = mode.deviation(required_km, achieved_km.min(cap_km));
    d * d
}

/// Mean squared spacing shortfall over each receiver's nearest neighbour.
pub fn spacing_msd(nearest_km: &[f64], target_km: f64) -> f64 {
    if nearest_km.is_empty() {
        return 0.0;
    }
    let sum: f64 = nearest_km
        .iter()
        .map(|&d| {
            let s = (d - target_km).min(0.0);
            s * s
        })
        .sum();
    sum / nearest_km.len() as f64
}

/// Mean squared shortfall of each jammer's nearest-receiver distance.
/// `None` marks a jammer with no receiver in range, which contributes 0.
pub fn jammer_distance_msd(nearest_km: &[Option<f64>], target_km: f64) -> f64 {
    if nearest_km.is_empty() {
        return 0.0;
    }
    let sum: f64 = nearest_km
        .iter()
        .map(|d| match d {
            Some(d) => {
                let s = (d - target_km).min(0.0);
                s * s
            }
            None => 0.0,
        })
        .sum();
    sum / nearest_km.len() as f64
}

/// Mean squared excess of affected receivers per jammer over `allowed`.
pub fn jammer_count_msd(affected: &[u32], allowed: u32) -> f64 {
    if affected.is_empty() {
        return 0.0;
    }
    let sum: f64 = affected
        .iter()
        .map(|&c| {
            let e = c.saturating_sub(allowed) as f64;
            e * e
        })
        .sum();
    sum / affected.len() as f64
}

fn check_grid(grid: &AirspaceGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(OspError::input("airspace grid is empty"));
    }
    Ok(())
}

/// OF1: mean squared GDOP deviation over the airspace samples.
pub fn of1_gdop_msd(
    grid: &AirspaceGrid,
    placement: &[GeodeticPosition],
    req: &ObjectiveRequirements,
    params: &PropagationParams,
    strategy: SubsetStrategy,
) -> Result<f64> {
    check_grid(grid)?;
    let ecef: Vec<EcefPosition> = placement.iter().map(|s| s.to_ecef()).collect();
    let mut sum = 0.0;
    for (j, point) in grid.points.iter().enumerate() {
        let visible: Vec<EcefPosition> = placement
            .iter()
            .zip(&ecef)
            .filter(|(s, _)| geo::is_visible(point, s, params))
            .map(|(_, e)| *e)
            .collect();
        let achieved = gdop::best_gdop_at(point, &visible, strategy)?;
        sum += gdop_term(grid.required_gdop[j], achieved.value(), req.gdop_cap, req.deviation);
    }
    Ok(sum / grid.len() as f64)
}

/// OF2: mean squared deviation of the second-nearest visible receiver range.
pub fn of2_range_msd(
    grid: &AirspaceGrid,
    placement: &[GeodeticPosition],
    req: &ObjectiveRequirements,
    params: &PropagationParams,
    range_cap_km: f64,
) -> Result<f64> {
    check_grid(grid)?;
    let ecef: Vec<EcefPosition> = placement.iter().map(|s| s.to_ecef()).collect();
    let mut sum = 0.0;
    for (j, point) in grid.points.iter().enumerate() {
        let p = point.to_ecef();
        let mut ranges: Vec<f64> = placement
            .iter()
            .zip(&ecef)
            .filter(|(s, _)| geo::is_visible(point, s, params))
            .map(|(_, e)| geo::euclidean_distance(&p, e) / 1000.0)
            .collect();
        ranges.sort_by(f64::total_cmp);
        let achieved = ranges.get(1).copied().unwrap_or(f64::INFINITY);
        sum += range_term(grid.required_range_km[j], achieved, range_cap_km, req.deviation);
    }
    Ok(sum / grid.len() as f64)
}

/// OF3 direction 1: receiver spacing shortfall.
pub fn of3_direction1_spacing(placement: &[EcefPosition], target_km: f64) -> Result<f64> {
    if placement.len() < 2 {
        return Err(OspError::input("spacing needs at least two receivers"));
    }
    let nearest: Vec<f64> = placement
        .iter()
        .enumerate()
        .map(|(i, a)| {
            placement
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, b)| geo::euclidean_distance(a, b) / 1000.0)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(spacing_msd(&nearest, target_km))
}

fn check_sets(placement: &[GeodeticPosition], jammers: &[JammerModel]) -> Result<()> {
    if placement.is_empty() {
        return Err(OspError::input("no receivers selected"));
    }
    if jammers.is_empty() {
        return Err(OspError::input("no jammers given"));
    }
    Ok(())
}

/// OF3 direction 2: shortfall of each jammer's distance to its nearest receiver.
pub fn of3_direction2_jammer_distance(
    placement: &[GeodeticPosition],
    jammers: &[JammerModel],
    req: &ObjectiveRequirements,
    params: &PropagationParams,
) -> Result<f64> {
    check_sets(placement, jammers)?;
    let nearest: Vec<Option<f64>> = jammers
        .iter()
        .map(|jam| {
            let any_in_range = placement
                .iter()
                .any(|s| geo::is_visible(&jam.position, s, params));
            any_in_range.then(|| {
                let j = jam.position.to_ecef();
                placement
                    .iter()
                    .map(|s| geo::euclidean_distance(&j, &s.to_ecef()) / 1000.0)
                    .fold(f64::INFINITY, f64::min)
            })
        })
        .collect();
    Ok(jammer_distance_msd(
        &nearest,
        req.required_min_jammer_distance_km,
    ))
}

/// OF3 direction 3: receivers affected per jammer beyond the allowed count.
pub fn of3_direction3_sensors_in_range(
    placement: &[GeodeticPosition],
    jammers: &[JammerModel],
    req: &ObjectiveRequirements,
    params: &PropagationParams,
) -> Result<f64> {
    check_sets(placement, jammers)?;
    let counts: Vec<u32> = jammers
        .iter()
        .map(|jam| {
            let j = jam.position.to_ecef();
            placement
                .iter()
                .filter(|s| {
                    let d = geo::euclidean_distance(&j, &s.to_ecef()) / 1000.0;
                    jam.affects(geo::is_visible(&jam.position, s, params), d)
                })
                .count() as u32
        })
        .collect();
    Ok(jammer_count_msd(
        &counts,
        req.required_max_sensors_in_jammer_los,
    ))
}

/// Validates OF3 direction weights: non-negative and summing to one.
pub fn check_weights(weights: &[f64; 3]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(OspError::config("of3_weights", "weights must be >= 0"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(OspError::config(
            "of3_weights",
            format!("weights must sum to 1, got {sum}"),
        ));
    }
    Ok(())
}

/// Weighted sum of the three normalized OF3 directions.
pub fn of3_combined(directions: [f64; 3], weights: [f64; 3]) -> Result<f64> {
    check_weights(&weights)?;
    Ok(directions
        .iter()
        .zip(&weights)
        .map(|(d, w)| d * w)
        .sum())
}

/// `0.5 * (selected / cells)^2`.
pub fn knapsack_penalty(selected: usize, cells: usize) -> Result<f64> {
    if cells == 0 {
        return Err(OspError::config("candidates", "penalty needs at least one cell"));
    }
    if selected > cells {
        return Err(OspError::input(format!(
            "{selected} selected out of {cells} cells"
        )));
    }
    let share = selected as f64 / cells as f64;
    Ok(0.5 * share * share)
}

/// `(1 - a) * objective + a * penalty`.
#[inline]
pub fn weighted_fitness(objective: f64, penalty: f64, pareto_weight: f64) -> f64 {
    (1.0 - pareto_weight) * objective + pareto_weight * penalty
}

/// Min-max normalization clamped to [0, 1]; a zero-width range maps to 0.
#[inline]
pub fn normalize_score(score: f64, min: f64, max: f64) -> f64 {
    if !(max > min) {
        return 0.0;
    }
    ((score - min) / (max - min)).clamp(0.0, 1.0)
}
