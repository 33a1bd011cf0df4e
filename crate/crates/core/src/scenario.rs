//! Problem construction: airspace sampling, candidate and jammer sites,
//! deployed-sensor merging and the precomputed geometry matrices.

use std::collections::HashSet;

use log::warn;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{OspError, Result};
use crate::gdop::SubsetStrategy;
use crate::geo::{self, GeodeticPosition, PropagationParams};
use crate::objectives::{self, JammerModel, ObjectiveRequirements};

/// Tolerance in degrees under which two sites count as the same place.
pub const SITE_MATCH_DEG: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaBounds {
    pub lat_low_deg: f64,
    pub lat_up_deg: f64,
    pub lon_low_deg: f64,
    pub lon_up_deg: f64,
    /// Aircraft sampling altitudes, strictly increasing.
    pub altitude_levels_m: Vec<f64>,
}

impl Default for AreaBounds {
    fn default() -> Self {
        Self {
            lat_low_deg: 47.4,
            lat_up_deg: 51.4,
            lon_low_deg: 5.71,
            lon_up_deg: 9.71,
            altitude_levels_m: vec![3000.0, 6000.0, 10000.0],
        }
    }
}

impl AreaBounds {
    pub fn validate(&self) -> Result<()> {
        let lat_ok = (-90.0..=90.0).contains(&self.lat_low_deg)
            && (-90.0..=90.0).contains(&self.lat_up_deg)
            && self.lat_low_deg < self.lat_up_deg;
        if !lat_ok {
            return Err(OspError::config(
                "area.lat_low_deg",
                "need -90 <= lat_low_deg < lat_up_deg <= 90",
            ));
        }
        let lon_ok = (-180.0..=180.0).contains(&self.lon_low_deg)
            && (-180.0..=180.0).contains(&self.lon_up_deg)
            && self.lon_low_deg < self.lon_up_deg;
        if !lon_ok {
            return Err(OspError::config(
                "area.lon_low_deg",
                "need -180 <= lon_low_deg < lon_up_deg <= 180",
            ));
        }
        if self.altitude_levels_m.is_empty() {
            return Err(OspError::config("area.altitude_levels_m", "must not be empty"));
        }
        let mut prev = 0.0;
        for &h in &self.altitude_levels_m {
            if !(h > prev && h.is_finite()) {
                return Err(OspError::config(
                    "area.altitude_levels_m",
                    "altitudes must be positive and strictly increasing",
                ));
            }
            prev = h;
        }
        Ok(())
    }

    pub fn contains(&self, p: &GeodeticPosition) -> bool {
        (self.lat_low_deg..=self.lat_up_deg).contains(&p.latitude_deg)
            && (self.lon_low_deg..=self.lon_up_deg).contains(&p.longitude_deg)
    }

    /// Ground distance between opposite corners, km.
    pub fn diagonal_km(&self) -> f64 {
        let sw = GeodeticPosition {
            latitude_deg: self.lat_low_deg,
            longitude_deg: self.lon_low_deg,
            altitude_m: 0.0,
        };
        let ne = GeodeticPosition {
            latitude_deg: self.lat_up_deg,
            longitude_deg: self.lon_up_deg,
            altitude_m: 0.0,
        };
        geo::great_circle_km(&sw, &ne)
    }
}

/// Airspace samples with their per-point requirements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AirspaceGrid {
    pub points: Vec<GeodeticPosition>,
    pub required_gdop: Vec<f64>,
    pub required_range_km: Vec<f64>,
}

impl AirspaceGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Layout of generated sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SitePattern {
    /// Centres of a rows x cols split of the area.
    #[default]
    Lattice,
    SeededUniform,
}

/// A named ground site.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: String,
    pub position: GeodeticPosition,
}

fn by_lon_lat_alt(a: &GeodeticPosition, b: &GeodeticPosition) -> std::cmp::Ordering {
    a.longitude_deg
        .total_cmp(&b.longitude_deg)
        .then(a.latitude_deg.total_cmp(&b.latitude_deg))
        .then(a.altitude_m.total_cmp(&b.altitude_m))
}

/// Corner-spanning lat x lon lattice at every altitude level, ordered by
/// longitude, then latitude, then altitude.
pub fn sample_grid(
    bounds: &AreaBounds,
    lat_count: usize,
    lon_count: usize,
    req: &ObjectiveRequirements,
) -> Result<AirspaceGrid> {
    bounds.validate()?;
    if lat_count < 2 || lon_count < 2 {
        return Err(OspError::config("grid", "lat_count and lon_count must be >= 2"));
    }
    let step = |low: f64, up: f64, count: usize, i: usize| {
        if i + 1 == count {
            up
        } else {
            low + (up - low) * i as f64 / (count - 1) as f64
        }
    };
    let mut points = Vec::with_capacity(lat_count * lon_count * bounds.altitude_levels_m.len());
    for ilon in 0..lon_count {
        let lon = step(bounds.lon_low_deg, bounds.lon_up_deg, lon_count, ilon);
        for ilat in 0..lat_count {
            let lat = step(bounds.lat_low_deg, bounds.lat_up_deg, lat_count, ilat);
            for &alt in &bounds.altitude_levels_m {
                points.push(GeodeticPosition::new(lat, lon, alt)?);
            }
        }
    }
    let m = points.len();
    Ok(AirspaceGrid {
        points,
        required_gdop: vec![req.required_gdop; m],
        required_range_km: vec![req.required_range_km; m],
    })
}

/// `(rows, cols)` with `rows * cols == count`, as close to square as possible.
pub fn lattice_dims(count: usize) -> (usize, usize) {
    let mut rows = (count as f64).sqrt() as usize;
    while rows > 1 && !count.is_multiple_of(rows) {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, count / rows)
}

fn lattice_centres(bounds: &AreaBounds, count: usize, alt: f64) -> Result<Vec<GeodeticPosition>> {
    let (rows, cols) = lattice_dims(count);
    let dlat = (bounds.lat_up_deg - bounds.lat_low_deg) / rows as f64;
    let dlon = (bounds.lon_up_deg - bounds.lon_low_deg) / cols as f64;
    let mut out = Vec::with_capacity(count);
    for c in 0..cols {
        for r in 0..rows {
            out.push(GeodeticPosition::new(
                bounds.lat_low_deg + (r as f64 + 0.5) * dlat,
                bounds.lon_low_deg + (c as f64 + 0.5) * dlon,
                alt,
            )?);
        }
    }
    Ok(out)
}

fn uniform_sites(
    bounds: &AreaBounds,
    count: usize,
    alts: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<GeodeticPosition>> {
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let lat = rng.random_range(bounds.lat_low_deg..=bounds.lat_up_deg);
        let lon = rng.random_range(bounds.lon_low_deg..=bounds.lon_up_deg);
        let alt = alts[out.len() % alts.len()];
        if seen.insert((lat.to_bits(), lon.to_bits(), alt.to_bits())) {
            out.push(GeodeticPosition::new(lat, lon, alt)?);
        }
    }
    Ok(out)
}

/// Candidate ground sites at the receiver antenna height.
pub fn generate_candidates(
    bounds: &AreaBounds,
    count: usize,
    pattern: SitePattern,
    seed: u64,
    antenna_height_m: f64,
) -> Result<Vec<Site>> {
    bounds.validate()?;
    if count == 0 {
        return Err(OspError::config("candidates.count", "must be >= 1"));
    }
    if !(antenna_height_m >= 0.0 && antenna_height_m.is_finite()) {
        return Err(OspError::config(
            "candidates.antenna_height_m",
            "must be >= 0",
        ));
    }
    let mut sites = match pattern {
        SitePattern::Lattice => lattice_centres(bounds, count, antenna_height_m)?,
        SitePattern::SeededUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            uniform_sites(bounds, count, &[antenna_height_m], &mut rng)?
        }
    };
    sites.sort_by(by_lon_lat_alt);
    Ok(sites
        .into_iter()
        .enumerate()
        .map(|(i, position)| Site {
            id: format!("c{i:04}"),
            position,
        })
        .collect())
}

/// Jammer positions spread over the area at each height level.
pub fn generate_jammers(
    bounds: &AreaBounds,
    count: usize,
    heights_m: &[f64],
    pattern: SitePattern,
    seed: u64,
) -> Result<Vec<GeodeticPosition>> {
    bounds.validate()?;
    if heights_m.is_empty() || heights_m.iter().any(|h| !(*h >= 0.0 && h.is_finite())) {
        return Err(OspError::config(
            "jammers.heights_m",
            "need at least one non-negative height",
        ));
    }
    match pattern {
        SitePattern::Lattice => {
            if !count.is_multiple_of(heights_m.len()) {
                return Err(OspError::config(
                    "jammers.count",
                    format!(
                        "{count} jammers cannot be split evenly over {} heights",
                        heights_m.len()
                    ),
                ));
            }
            let per_level = count / heights_m.len();
            let mut out = Vec::with_capacity(count);
            for &h in heights_m {
                if per_level > 0 {
                    out.extend(lattice_centres(bounds, per_level, h)?);
                }
            }
            Ok(out)
        }
        SitePattern::SeededUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            uniform_sites(bounds, count, heights_m, &mut rng)
        }
    }
}

fn same_site(a: &GeodeticPosition, b: &GeodeticPosition, tol_deg: f64) -> bool {
    (a.latitude_deg - b.latitude_deg).abs() <= tol_deg
        && (a.longitude_deg - b.longitude_deg).abs() <= tol_deg
        && (a.altitude_m - b.altitude_m).abs() <= 1e-6
}

/// Index of the first site within `tol_deg` of `p`.
pub fn find_site(sites: &[Site], p: &GeodeticPosition, tol_deg: f64) -> Option<usize> {
    sites.iter().position(|s| same_site(&s.position, p, tol_deg))
}

/// Precomputed node-to-node geometry. Rows index airspace points or
/// jammers, columns index candidate sites. Distances are in km.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub point_distance_km: Array2<f64>,
    pub point_cosines: Array2<[f64; 3]>,
    pub point_los: Array2<bool>,
    pub jammer_distance_km: Array2<f64>,
    /// Zero where a jammer and a site coincide.
    pub jammer_cosines: Array2<[f64; 3]>,
    pub jammer_los: Array2<bool>,
    pub sensor_distance_km: Array2<f64>,
}

/// Everything needed before the geometry matrices are filled.
#[derive(Debug, Clone)]
pub struct ProblemInputs {
    pub bounds: AreaBounds,
    pub grid: AirspaceGrid,
    pub candidates: Vec<Site>,
    pub forced: Vec<bool>,
    pub jammers: Vec<JammerModel>,
    pub requirements: ObjectiveRequirements,
    pub of3_weights: [f64; 3],
    pub propagation: PropagationParams,
    pub strategy: SubsetStrategy,
}

/// An immutable placement problem shared by every evaluation.
#[derive(Debug, Clone)]
pub struct PlacementProblem {
    pub bounds: AreaBounds,
    pub grid: AirspaceGrid,
    pub candidates: Vec<Site>,
    /// Deployed sites that every solution must keep.
    pub forced: Vec<bool>,
    pub jammers: Vec<JammerModel>,
    pub requirements: ObjectiveRequirements,
    /// Resolved OF2 saturation range.
    pub range_cap_km: f64,
    pub of3_weights: [f64; 3],
    pub propagation: PropagationParams,
    pub strategy: SubsetStrategy,
    pub geometry: Geometry,
}

impl PlacementProblem {
    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn forced_count(&self) -> usize {
        self.forced.iter().filter(|&&f| f).count()
    }

    pub fn forced_indices(&self) -> Vec<usize> {
        (0..self.forced.len()).filter(|&i| self.forced[i]).collect()
    }
}

/// Fills the geometry matrices.
pub fn precompute(inputs: ProblemInputs) -> Result<PlacementProblem> {
    let ProblemInputs {
        bounds,
        grid,
        candidates,
        forced,
        jammers,
        requirements,
        of3_weights,
        propagation,
        strategy,
    } = inputs;
    requirements.validate()?;
    propagation.validate()?;
    objectives::check_weights(&of3_weights)?;
    for j in &jammers {
        j.validate()?;
    }
    if grid.is_empty() {
        return Err(OspError::input("airspace grid is empty"));
    }
    if candidates.is_empty() {
        return Err(OspError::config("candidates.count", "no candidate sites"));
    }
    if forced.len() != candidates.len() {
        return Err(OspError::input("forced mask length differs from candidates"));
    }
    if let Some(cap) = strategy.cap() {
        if cap < 4 {
            return Err(OspError::config("gdop_subsets.cap", "must be >= 4"));
        }
    }
    let range_cap_km = requirements
        .range_cap_km
        .unwrap_or_else(|| bounds.diagonal_km());
    let max_required = grid.required_range_km.iter().cloned().fold(0.0, f64::max);
    if !(range_cap_km > max_required) {
        return Err(OspError::config(
            "requirements.range_cap_km",
            format!("range cap {range_cap_km} km must exceed the required range {max_required} km"),
        ));
    }

    let m = grid.len();
    let n = candidates.len();
    let k = jammers.len();
    let k_e = propagation.effective_earth_radius_factor;
    let cand_ecef: Vec<_> = candidates.iter().map(|s| s.position.to_ecef()).collect();

    let mut point_distance_km = Array2::zeros((m, n));
    let mut point_cosines = Array2::from_elem((m, n), [0.0; 3]);
    let mut point_los = Array2::from_elem((m, n), false);
    for (j, p) in grid.points.iter().enumerate() {
        let rotation = geo::ned_rotation(p);
        let origin = p.to_ecef();
        for (i, s) in candidates.iter().enumerate() {
            let v = geo::ned_vector_with(&rotation, &origin, &cand_ecef[i]);
            point_distance_km[[j, i]] = geo::euclidean_distance(&origin, &cand_ecef[i]) / 1000.0;
            point_cosines[[j, i]] = geo::unit(v).map_err(|_| {
                OspError::DegenerateGeometry(format!(
                    "candidate {} coincides with airspace point {j}",
                    s.id
                ))
            })?;
            point_los[[j, i]] = geo::is_visible_at(
                p.altitude_m,
                s.position.altitude_m,
                geo::great_circle_km(p, &s.position),
                k_e,
            );
        }
    }

    let mut jammer_distance_km = Array2::zeros((k, n));
    let mut jammer_cosines = Array2::from_elem((k, n), [0.0; 3]);
    let mut jammer_los = Array2::from_elem((k, n), false);
    for (l, jam) in jammers.iter().enumerate() {
        let p = &jam.position;
        let rotation = geo::ned_rotation(p);
        let origin = p.to_ecef();
        for (i, s) in candidates.iter().enumerate() {
            let v = geo::ned_vector_with(&rotation, &origin, &cand_ecef[i]);
            jammer_distance_km[[l, i]] = geo::euclidean_distance(&origin, &cand_ecef[i]) / 1000.0;
            jammer_cosines[[l, i]] = geo::unit(v).unwrap_or([0.0; 3]);
            jammer_los[[l, i]] = geo::is_visible_at(
                p.altitude_m,
                s.position.altitude_m,
                geo::great_circle_km(p, &s.position),
                k_e,
            );
        }
    }

    let mut sensor_distance_km = Array2::zeros((n, n));
    for a in 0..n {
        for b in a + 1..n {
            let d = geo::euclidean_distance(&cand_ecef[a], &cand_ecef[b]) / 1000.0;
            sensor_distance_km[[a, b]] = d;
            sensor_distance_km[[b, a]] = d;
        }
    }

    Ok(PlacementProblem {
        bounds,
        grid,
        candidates,
        forced,
        jammers,
        requirements,
        range_cap_km,
        of3_weights,
        propagation,
        strategy,
        geometry: Geometry {
            point_distance_km,
            point_cosines,
            point_los,
            jammer_distance_km,
            jammer_cosines,
            jammer_los,
            sensor_distance_km,
        },
    })
}

fn base_inputs(config: &RunConfig) -> Result<ProblemInputs> {
    config.validate()?;
    let grid = sample_grid(
        &config.area,
        config.grid.lat_count,
        config.grid.lon_count,
        &config.requirements,
    )?;
    let c = &config.candidates;
    let candidates = generate_candidates(&config.area, c.count, c.pattern, c.seed, c.antenna_height_m)?;
    let j = &config.jammers;
    let jammers = generate_jammers(&config.area, j.count, &j.heights_m, j.pattern, j.seed)?
        .into_iter()
        .map(|position| j.model_at(position))
        .collect();
    let forced = vec![false; candidates.len()];
    Ok(ProblemInputs {
        bounds: config.area.clone(),
        grid,
        candidates,
        forced,
        jammers,
        requirements: config.requirements.clone(),
        of3_weights: config.of3_weights,
        propagation: config.propagation,
        strategy: config.gdop_subsets,
    })
}

/// Greenfield problem: no deployed sensors.
pub fn build_scenario1(config: &RunConfig) -> Result<PlacementProblem> {
    precompute(base_inputs(config)?)
}

/// Appends `extra` sites to the candidate list, optionally marking them forced.
///
/// A site that matches an existing candidate reuses that index; repeated
/// sites collapse with a warning. Returns the index of each input site.
pub fn merge_sites(
    inputs: &mut ProblemInputs,
    extra: &[Site],
    forced: bool,
    tol_deg: f64,
) -> Vec<usize> {
    let mut indices = Vec::with_capacity(extra.len());
    let base = inputs.candidates.len();
    for site in extra {
        if !inputs.bounds.contains(&site.position) {
            warn!(
                "site {} at ({}, {}) lies outside the area; keeping it",
                site.id, site.position.latitude_deg, site.position.longitude_deg
            );
        }
        let idx = match find_site(&inputs.candidates, &site.position, tol_deg) {
            Some(i) => {
                if i >= base {
                    warn!("site {} duplicates site {}; ignoring it", site.id, inputs.candidates[i].id);
                }
                i
            }
            None => {
                inputs.candidates.push(site.clone());
                inputs.forced.push(false);
                inputs.candidates.len() - 1
            }
        };
        if forced {
            inputs.forced[idx] = true;
        }
        indices.push(idx);
    }
    indices
}

/// Augmentation problem: `deployed` sites become forced candidates.
pub fn build_scenario2(config: &RunConfig, deployed: &[Site]) -> Result<PlacementProblem> {
    let mut inputs = base_inputs(config)?;
    merge_sites(&mut inputs, deployed, true, SITE_MATCH_DEG);
    precompute(inputs)
}

/// A synthetic deployment of 21 receivers clustered in the south-east of
/// the default area, used as a baseline.
pub const CLUSTERED21_CSV: &str = include_str!("../fixtures/clustered21.csv");

pub fn clustered21_sites() -> Vec<Site> {
    crate::io::parse_sites("clustered21.csv", CLUSTERED21_CSV)
        .expect("bundled fixture parses")
        .1
        .into_iter()
        .map(|r| r.site)
        .collect()
}

/// Base inputs for a config, exposed for callers that add their own sites.
pub fn inputs_for(config: &RunConfig) -> Result<ProblemInputs> {
    base_inputs(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_bounds() -> AreaBounds {
        AreaBounds {
            lat_low_deg: 47.0,
            lat_up_deg: 48.0,
            lon_low_deg: 8.0,
            lon_up_deg: 9.0,
            altitude_levels_m: vec![5000.0],
        }
    }

    #[test]
    fn two_by_two_grid_spans_corners() {
        let g = sample_grid(&small_bounds(), 2, 2, &ObjectiveRequirements::default()).unwrap();
        let corners: Vec<(f64, f64)> = g
            .points
            .iter()
            .map(|p| (p.longitude_deg, p.latitude_deg))
            .collect();
        assert_eq!(corners, vec![(8.0, 47.0), (8.0, 48.0), (9.0, 47.0), (9.0, 48.0)]);
        assert_eq!(g.required_gdop, vec![10.0; 4]);
    }

    #[test]
    fn grid_is_ordered_and_bounded() {
        let b = AreaBounds::default();
        let g = sample_grid(&b, 7, 5, &ObjectiveRequirements::default()).unwrap();
        assert_eq!(g.len(), 7 * 5 * 3);
        for w in g.points.windows(2) {
            let (a, c) = (&w[0], &w[1]);
            assert!(a.longitude_deg <= c.longitude_deg);
            if a.longitude_deg == c.longitude_deg {
                assert!(a.latitude_deg <= c.latitude_deg);
            }
        }
        assert!(g.points.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn degenerate_bounds_rejected() {
        let mut b = small_bounds();
        b.lat_up_deg = b.lat_low_deg;
        assert!(sample_grid(&b, 2, 2, &Default::default()).is_err());
        assert!(sample_grid(&small_bounds(), 1, 2, &Default::default()).is_err());
        let mut b = small_bounds();
        b.altitude_levels_m = vec![3000.0, 3000.0];
        assert!(b.validate().is_err());
    }

    #[test]
    fn lattice_shapes() {
        assert_eq!(lattice_dims(400), (20, 20));
        assert_eq!(lattice_dims(25), (5, 5));
        assert_eq!(lattice_dims(12), (3, 4));
        assert_eq!(lattice_dims(7), (1, 7));
        assert_eq!(lattice_dims(1), (1, 1));
    }

    #[test]
    fn candidates_lattice_and_uniform() {
        let b = AreaBounds::default();
        let c = generate_candidates(&b, 400, SitePattern::Lattice, 0, 0.0).unwrap();
        assert_eq!(c.len(), 400);
        let lats: HashSet<u64> = c.iter().map(|s| s.position.latitude_deg.to_bits()).collect();
        let lons: HashSet<u64> = c.iter().map(|s| s.position.longitude_deg.to_bits()).collect();
        assert_eq!((lats.len(), lons.len()), (20, 20));
        let distinct: HashSet<(u64, u64)> = c
            .iter()
            .map(|s| (s.position.latitude_deg.to_bits(), s.position.longitude_deg.to_bits()))
            .collect();
        assert_eq!(distinct.len(), 400);
        assert!(c.iter().all(|s| b.contains(&s.position)));

        let u1 = generate_candidates(&b, 50, SitePattern::SeededUniform, 9, 10.0).unwrap();
        let u2 = generate_candidates(&b, 50, SitePattern::SeededUniform, 9, 10.0).unwrap();
        assert_eq!(u1, u2);
        assert!(u1.iter().all(|s| b.contains(&s.position) && s.position.altitude_m == 10.0));
        assert!(generate_candidates(&b, 0, SitePattern::Lattice, 0, 0.0).is_err());
    }

    #[test]
    fn jammers_per_level() {
        let b = AreaBounds::default();
        let heights = [3000.0, 6000.0, 10000.0];
        let j = generate_jammers(&b, 75, &heights, SitePattern::Lattice, 0).unwrap();
        assert_eq!(j.len(), 75);
        for h in heights {
            assert_eq!(j.iter().filter(|p| p.altitude_m == h).count(), 25);
        }
        assert!(j.iter().all(|p| b.contains(p)));
        assert!(generate_jammers(&b, 74, &heights, SitePattern::Lattice, 0).is_err());
        let u1 = generate_jammers(&b, 30, &heights, SitePattern::SeededUniform, 4).unwrap();
        let u2 = generate_jammers(&b, 30, &heights, SitePattern::SeededUniform, 4).unwrap();
        assert_eq!(u1, u2);
        assert!(u1.iter().all(|p| b.contains(p)));
    }

    fn toy_inputs() -> ProblemInputs {
        let bounds = small_bounds();
        let req = ObjectiveRequirements {
            range_cap_km: Some(400.0),
            ..Default::default()
        };
        let grid = sample_grid(&bounds, 3, 3, &req).unwrap();
        let candidates = generate_candidates(&bounds, 9, SitePattern::Lattice, 0, 0.0).unwrap();
        let jammers = generate_jammers(&bounds, 2, &[3000.0, 8000.0], SitePattern::Lattice, 0)
            .unwrap()
            .into_iter()
            .map(JammerModel::at)
            .collect();
        ProblemInputs {
            forced: vec![false; candidates.len()],
            bounds,
            grid,
            candidates,
            jammers,
            requirements: req,
            of3_weights: [1.0 / 3.0; 3],
            propagation: PropagationParams::default(),
            strategy: SubsetStrategy::default(),
        }
    }

    #[test]
    fn precompute_matches_pairwise() {
        let p = precompute(toy_inputs()).unwrap();
        let g = &p.geometry;
        let n = p.n_candidates();
        assert_eq!(g.point_distance_km.dim(), (p.grid.len(), n));
        assert_eq!(g.jammer_los.dim(), (2, n));
        for a in 0..n {
            assert_eq!(g.sensor_distance_km[[a, a]], 0.0);
            for b in 0..n {
                assert_eq!(g.sensor_distance_km[[a, b]], g.sensor_distance_km[[b, a]]);
            }
        }
        for (j, pt) in p.grid.points.iter().enumerate() {
            for (i, s) in p.candidates.iter().enumerate() {
                let d = geo::euclidean_distance(&pt.to_ecef(), &s.position.to_ecef()) / 1000.0;
                assert_eq!(g.point_distance_km[[j, i]], d);
                assert_eq!(g.point_los[[j, i]], geo::is_visible(pt, &s.position, &p.propagation));
                let dc = geo::direction_cosines(pt, &s.position.to_ecef()).unwrap();
                assert_eq!(g.point_cosines[[j, i]], dc);
            }
        }
        for (l, jam) in p.jammers.iter().enumerate() {
            for (i, s) in p.candidates.iter().enumerate() {
                assert_eq!(
                    g.jammer_los[[l, i]],
                    geo::is_visible(&jam.position, &s.position, &p.propagation)
                );
            }
        }
    }

    #[test]
    fn los_mask_matches_horizon_at_ten_km() {
        let bounds = AreaBounds {
            altitude_levels_m: vec![10000.0],
            ..AreaBounds::default()
        };
        let mut inputs = toy_inputs();
        inputs.grid = sample_grid(&bounds, 2, 2, &inputs.requirements).unwrap();
        // Sites far enough apart that some fall beyond the 10 km horizon.
        inputs.candidates = (0..12)
            .map(|i| Site {
                id: format!("s{i}"),
                position: GeodeticPosition::new(47.4, 5.71 + i as f64, 0.0).unwrap(),
            })
            .collect();
        inputs.forced = vec![false; 12];
        inputs.bounds = AreaBounds {
            lon_up_deg: 17.0,
            ..bounds
        };
        let p = precompute(inputs).unwrap();
        let k_e: f64 = 4.0 / 3.0;
        let mut seen = (false, false);
        for (j, pt) in p.grid.points.iter().enumerate() {
            for (i, s) in p.candidates.iter().enumerate() {
                let d = geo::great_circle_km(pt, &s.position);
                let expected = 10000.0 >= 0.0785 * d * d / k_e;
                assert_eq!(p.geometry.point_los[[j, i]], expected);
                if expected {
                    seen.0 = true;
                } else {
                    seen.1 = true;
                }
            }
        }
        assert!(seen.0 && seen.1);
    }

    #[test]
    fn merge_marks_forced_and_dedupes() {
        let mut inputs = toy_inputs();
        let n = inputs.candidates.len();
        let existing = inputs.candidates[3].position;
        let new_site = GeodeticPosition::new(47.123, 8.456, 0.0).unwrap();
        let outside = GeodeticPosition::new(10.0, 8.5, 0.0).unwrap();
        let deployed = vec![
            Site { id: "a".into(), position: new_site },
            Site { id: "b".into(), position: existing },
            Site { id: "c".into(), position: new_site },
            Site { id: "d".into(), position: outside },
        ];
        let idx = merge_sites(&mut inputs, &deployed, true, SITE_MATCH_DEG);
        assert_eq!(idx, vec![n, 3, n, n + 1]);
        assert_eq!(inputs.candidates.len(), n + 2);
        assert_eq!(inputs.forced.iter().filter(|&&f| f).count(), 3);
        let p = precompute(inputs).unwrap();
        assert_eq!(p.forced_indices(), vec![3, n, n + 1]);
    }
}
