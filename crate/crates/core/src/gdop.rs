//! Geometric dilution of precision for four-receiver subsets.
//!
//! For unit directions `u_i` the geometry matrix is `B = [u_i, 1]` (4x4) and
//! `GDOP^2 = tr((B^T B)^-1) = ||B^-1||_F^2 = ||adj B||_F^2 / det(B)^2`.
//! Dropping row `i` leaves three rows `(u_j, u_k, u_l)` whose cofactors are
//! the triple product `t = u_j . (u_k x u_l)` and the components of
//! `w = u_j x u_k + u_k x u_l + u_l x u_j`, so every four-subset only needs
//! four tabulated `|w|^2 + t^2` values and four signed triple products.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geo::{self, EcefPosition, GeodeticPosition};

/// Condition-number bound above which `B^T B` counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Achieved or required GDOP. Infinite means "cannot be evaluated".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct GdopValue(pub f64);

impl GdopValue {
    pub const INFINITE: GdopValue = GdopValue(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

/// Which four-subsets of the visible receivers are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubsetStrategy {
    /// Every four-subset of the visible set.
    Exhaustive,
    /// Only subsets of the `cap` nearest visible receivers.
    Nearest { cap: usize },
}

impl Default for SubsetStrategy {
    fn default() -> Self {
        SubsetStrategy::Nearest { cap: 12 }
    }
}

impl SubsetStrategy {
    pub fn cap(&self) -> Option<usize> {
        match *self {
            SubsetStrategy::Exhaustive => None,
            SubsetStrategy::Nearest { cap } => Some(cap),
        }
    }
}

/// GDOP from the squared value, applying the singularity rule.
///
/// `tr(B^T B) = 8` for unit rows, so `8 * GDOP^2` bounds the 2-norm
/// condition number of `B^T B` from above (within a factor of 16).
fn finish(gdop_sq: f64) -> f64 {
    if !gdop_sq.is_finite() || 8.0 * gdop_sq > SINGULAR_CONDITION {
        f64::INFINITY
    } else {
        gdop_sq.sqrt()
    }
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// GDOP of four unit direction vectors.
pub fn gdop_from_directions(u: &[[f64; 3]; 4]) -> GdopValue {
    let mut table = GdopTable::default();
    table.load(u);
    GdopValue(finish(table.subset_gdop_sq(0, 1, 2, 3)))
}

/// GDOP at `aircraft` for exactly four receivers.
pub fn gdop_of_four(aircraft: &GeodeticPosition, sensors: &[EcefPosition; 4]) -> Result<GdopValue> {
    let rotation = geo::ned_rotation(aircraft);
    let origin = aircraft.to_ecef();
    let mut dirs = [[0.0; 3]; 4];
    for (d, s) in dirs.iter_mut().zip(sensors) {
        *d = geo::unit(geo::ned_vector_with(&rotation, &origin, s))?;
    }
    Ok(gdop_from_directions(&dirs))
}

/// Best (minimum) GDOP over four-subsets of the visible receivers.
///
/// Returns infinity with fewer than four receivers. `visible` is expected to
/// be pre-filtered by line of sight.
pub fn best_gdop_at(
    aircraft: &GeodeticPosition,
    visible: &[EcefPosition],
    strategy: SubsetStrategy,
) -> Result<GdopValue> {
    if visible.len() < 4 {
        return Ok(GdopValue::INFINITE);
    }
    let rotation = geo::ned_rotation(aircraft);
    let origin = aircraft.to_ecef();
    let mut ranked = Vec::with_capacity(visible.len());
    for s in visible {
        let v = geo::ned_vector_with(&rotation, &origin, s);
        ranked.push((v.norm(), geo::unit(v)?));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(cap) = strategy.cap() {
        ranked.truncate(cap.max(4));
    }
    let dirs: Vec<[f64; 3]> = ranked.into_iter().map(|(_, d)| d).collect();
    Ok(GdopTable::default().best(&dirs))
}

/// Reusable scratch space for best-GDOP searches over many points.
#[derive(Debug, Default, Clone)]
pub struct GdopTable {
    n: usize,
    cross: Vec<[f64; 3]>,
    triple: Vec<f64>,
    weight: Vec<f64>,
    binom2: Vec<usize>,
    binom3: Vec<usize>,
}

impl GdopTable {
    fn load(&mut self, dirs: &[[f64; 3]]) {
        let n = dirs.len();
        self.n = n;
        self.binom2.clear();
        self.binom3.clear();
        for i in 0..=n {
            self.binom2.push(i * i.saturating_sub(1) / 2);
            self.binom3.push(i * i.saturating_sub(1) * i.saturating_sub(2) / 6);
        }

        self.cross.clear();
        self.cross.resize(n * n, [0.0; 3]);
        for i in 0..n {
            for j in i + 1..n {
                self.cross[i * n + j] = cross(&dirs[i], &dirs[j]);
            }
        }

        let count = self.binom3[n];
        self.triple.clear();
        self.triple.resize(count, 0.0);
        self.weight.clear();
        self.weight.resize(count, 0.0);
        for l in 2..n {
            for j in 1..l {
                let c_jl = self.cross[j * n + l];
                for i in 0..j {
                    let c_ij = self.cross[i * n + j];
                    let c_il = self.cross[i * n + l];
                    let t = dot(&dirs[i], &c_jl);
                    let w = [
                        c_ij[0] + c_jl[0] - c_il[0],
                        c_ij[1] + c_jl[1] - c_il[1],
                        c_ij[2] + c_jl[2] - c_il[2],
                    ];
                    let k = self.index3(i, j, l);
                    self.triple[k] = t;
                    self.weight[k] = dot(&w, &w) + t * t;
                }
            }
        }
    }

    #[inline]
    fn index3(&self, i: usize, j: usize, l: usize) -> usize {
        self.binom3[l] + self.binom2[j] + i
    }

    /// Squared GDOP of the subset `a < b < c < d` of the loaded directions.
    #[inline]
    fn subset_gdop_sq(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let bcd = self.index3(b, c, d);
        let acd = self.index3(a, c, d);
        let abd = self.index3(a, b, d);
        let abc = self.index3(a, b, c);
        let det = -self.triple[bcd] + self.triple[acd] - self.triple[abd] + self.triple[abc];
        let adj = self.weight[bcd] + self.weight[acd] + self.weight[abd] + self.weight[abc];
        if det == 0.0 {
            f64::INFINITY
        } else {
            adj / (det * det)
        }
    }

    /// Minimum GDOP over every four-subset of `dirs`.
    pub fn best(&mut self, dirs: &[[f64; 3]]) -> GdopValue {
        if dirs.len() < 4 {
            return GdopValue::INFINITE;
        }
        self.load(dirs);
        let n = self.n;
        let mut best = f64::INFINITY;
        for d in 3..n {
            for c in 2..d {
                for b in 1..c {
                    for a in 0..b {
                        let g = self.subset_gdop_sq(a, b, c, d);
                        if g < best {
                            best = g;
                        }
                    }
                }
            }
        }
        GdopValue(finish(best))
    }
}
