//! C ABI over `adsb_osp`.
//!
//! Every entry point returns an [`OspStatus`]; on failure the message is
//! available from [`osp_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use adsb_osp::analysis;
use adsb_osp::config::RunConfig;
use adsb_osp::fitness::{NormalizationBounds, ObjectiveScores};
use adsb_osp::gdop;
use adsb_osp::geo::{self, EcefPosition, GeodeticPosition};
use adsb_osp::nsga2::{self, GaConfig, ParetoFront};
use adsb_osp::objectives;
use adsb_osp::scenario::{self, PlacementProblem, Site};
use adsb_osp::OspError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfig = 3,
    Io = 4,
    NoFeasibleSolution = 5,
    DegenerateGeometry = 6,
    Panic = 7,
}

/// Scores of one placement. `normalized` holds the normalized OF1, OF2 and
/// the weighted OF3.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OspScores {
    pub of1: f64,
    pub of2: f64,
    pub of3: f64,
    pub of3_components: [f64; 3],
    pub normalized: [f64; 3],
    pub penalty: f64,
    pub n_sensors: usize,
}

impl From<&ObjectiveScores> for OspScores {
    fn from(s: &ObjectiveScores) -> Self {
        Self {
            of1: s.of1,
            of2: s.of2,
            of3: s.of3,
            of3_components: s.of3_components,
            normalized: s.normalized,
            penalty: s.penalty,
            n_sensors: s.n_sensors,
        }
    }
}

/// A placement problem with the optimizer settings of its config.
pub struct OspProblem {
    problem: PlacementProblem,
    ga: GaConfig,
}

/// The front returned by [`osp_optimize`].
pub struct OspFront {
    front: ParetoFront,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &OspError) -> OspStatus {
    match e {
        OspError::InvalidInput(_) | OspError::Input { .. } | OspError::Csv(_) => OspStatus::InvalidInput,
        OspError::InvalidConfig { .. } | OspError::Json(_) => OspStatus::InvalidConfig,
        OspError::Io(_) => OspStatus::Io,
        OspError::NoFeasibleSolution(_) => OspStatus::NoFeasibleSolution,
        OspError::DegenerateGeometry(_) => OspStatus::DegenerateGeometry,
    }
}

enum Failure {
    Null(&'static str),
    Osp(OspError),
}

impl From<OspError> for Failure {
    fn from(e: OspError) -> Self {
        Failure::Osp(e)
    }
}

fn guard<F>(f: F) -> OspStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OspStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            OspStatus::NullPointer
        }
        Ok(Err(Failure::Osp(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            OspStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn osp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a problem from a JSON run config. `deployed_lla` holds
/// `n_deployed` latitude, longitude, altitude triples (degrees, metres) of
/// sites every solution must keep; it may be null when `n_deployed` is 0.
///
/// # Safety
/// `config_json` must be a nul-terminated string, `deployed_lla` must point
/// to `3 * n_deployed` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osp_problem_new(
    config_json: *const c_char,
    deployed_lla: *const f64,
    n_deployed: usize,
    out: *mut *mut OspProblem,
) -> OspStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let json = deref(config_json, "config_json")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| OspError::input(format!("config is not UTF-8: {e}")))?;
        let config: RunConfig = serde_json::from_str(text).map_err(OspError::from)?;
        config.validate()?;
        let lla = slice(deployed_lla, n_deployed.saturating_mul(3), "deployed_lla")?;
        let deployed = lla
            .chunks_exact(3)
            .enumerate()
            .map(|(i, c)| {
                Ok(Site {
                    id: format!("d{i:03}"),
                    position: GeodeticPosition::new(c[0], c[1], c[2])?,
                })
            })
            .collect::<Result<Vec<_>, OspError>>()?;
        let problem = scenario::build_scenario2(&config, &deployed)?;
        let mut ga = config.ga;
        ga.n_max = ga.n_max.map(|n| n + problem.forced_count());
        *out = Box::into_raw(Box::new(OspProblem { problem, ga }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`osp_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn osp_problem_free(problem: *mut OspProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of candidate sites, deployed ones included. Zero for null.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn osp_problem_candidate_count(problem: *const OspProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.problem.n_candidates())
}

/// Writes candidate `index` as latitude, longitude, altitude into `lla`
/// and whether it is forced into `forced`.
///
/// # Safety
/// `problem` must be a live handle, `lla` must hold 3 doubles and `forced`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn osp_problem_candidate(
    problem: *const OspProblem,
    index: usize,
    lla: *mut f64,
    forced: *mut bool,
) -> OspStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.problem;
        let site = p
            .candidates
            .get(index)
            .ok_or_else(|| OspError::input(format!("candidate {index} out of range")))?;
        let lla = std::slice::from_raw_parts_mut(deref_mut(lla, "lla")?, 3);
        lla.copy_from_slice(&[
            site.position.latitude_deg,
            site.position.longitude_deg,
            site.position.altitude_m,
        ]);
        *deref_mut(forced, "forced")? = p.forced[index];
        Ok(())
    })
}

/// Scores a selection given as one byte per candidate (non-zero selects),
/// normalized against reference bounds of the problem.
///
/// # Safety
/// `genes` must point to `n_genes` bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osp_evaluate(
    problem: *const OspProblem,
    genes: *const u8,
    n_genes: usize,
    out: *mut OspScores,
) -> OspStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.problem;
        let genes: Vec<bool> = slice(genes, n_genes, "genes")?.iter().map(|&g| g != 0).collect();
        let out = deref_mut(out, "out")?;
        let bounds = NormalizationBounds::reference(p);
        let (scores, _, _) = analysis::evaluate_placement(p, &genes, &bounds)?;
        *out = OspScores::from(&scores);
        Ok(())
    })
}

/// Runs the optimizer with the GA settings of the config, optionally
/// replacing the seed.
///
/// # Safety
/// `problem` must be a live handle, `seed` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osp_optimize(
    problem: *const OspProblem,
    seed: *const u64,
    out: *mut *mut OspFront,
) -> OspStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let p = deref(problem, "problem")?;
        let mut ga = p.ga.clone();
        if let Some(&s) = seed.as_ref() {
            ga.seed = s;
        }
        let front = nsga2::evolve(&p.problem, &ga)?;
        *out = Box::into_raw(Box::new(OspFront { front }));
        Ok(())
    })
}

/// # Safety
/// `front` must come from [`osp_optimize`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn osp_front_free(front: *mut OspFront) {
    if !front.is_null() {
        drop(Box::from_raw(front));
    }
}

/// Number of front members. Zero for null.
///
/// # Safety
/// `front` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn osp_front_len(front: *const OspFront) -> usize {
    front.as_ref().map_or(0, |f| f.front.members.len())
}

/// # Safety
/// `front` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osp_front_scores(front: *const OspFront, index: usize, out: *mut OspScores) -> OspStatus {
    guard(|| {
        let f = deref(front, "front")?;
        let m = f
            .front
            .members
            .get(index)
            .ok_or_else(|| OspError::input(format!("member {index} out of range")))?;
        *deref_mut(out, "out")? = OspScores::from(&m.scores);
        Ok(())
    })
}

/// Copies the selected candidate indices of member `index`, ascending, into
/// `buf` and stores their count in `len`. When `capacity` is too small only
/// `len` is written and the call fails with `InvalidInput`.
///
/// # Safety
/// `front` must be a live handle, `buf` must hold `capacity` entries and
/// `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osp_front_selection(
    front: *const OspFront,
    index: usize,
    buf: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> OspStatus {
    guard(|| {
        let f = deref(front, "front")?;
        let m = f
            .front
            .members
            .get(index)
            .ok_or_else(|| OspError::input(format!("member {index} out of range")))?;
        *deref_mut(len, "len")? = m.selected.len();
        if capacity < m.selected.len() {
            return Err(OspError::input(format!("buffer holds {capacity}, need {}", m.selected.len())).into());
        }
        if !m.selected.is_empty() {
            let buf = std::slice::from_raw_parts_mut(deref_mut(buf, "buf")?, m.selected.len());
            buf.copy_from_slice(&m.selected);
        }
        Ok(())
    })
}

/// Picks the member minimizing the weighted normalized objectives among
/// those with at most `*budget_cap` sensors (no cap when null).
///
/// # Safety
/// `front` must be a live handle, `weights` must hold 3 doubles,
/// `budget_cap` null or readable and `out_index` writable.
#[no_mangle]
pub unsafe extern "C" fn osp_front_select(
    front: *const OspFront,
    budget_cap: *const usize,
    weights: *const f64,
    out_index: *mut usize,
) -> OspStatus {
    guard(|| {
        let f = deref(front, "front")?;
        let w = slice(weights, 3, "weights")?;
        let rows = analysis::pareto_summary(&f.front);
        let id = analysis::select_solution(&rows, budget_cap.as_ref().copied(), [w[0], w[1], w[2]])?;
        *deref_mut(out_index, "out_index")? = id;
        Ok(())
    })
}

/// WGS-84 geodetic (degrees, metres) to ECEF metres.
///
/// # Safety
/// `xyz` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn osp_geodetic_to_ecef(lat_deg: f64, lon_deg: f64, alt_m: f64, xyz: *mut f64) -> OspStatus {
    guard(|| {
        let p = GeodeticPosition::new(lat_deg, lon_deg, alt_m)?;
        let e = geo::geodetic_to_ecef(&p);
        let xyz = std::slice::from_raw_parts_mut(deref_mut(xyz, "xyz")?, 3);
        xyz.copy_from_slice(&[e.x, e.y, e.z]);
        Ok(())
    })
}

/// GDOP of four receivers (12 ECEF coordinates, metres) for an aircraft
/// at the given geodetic position; infinity for a singular geometry.
///
/// # Safety
/// `sensors_xyz` must hold 12 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osp_gdop_of_four(
    lat_deg: f64,
    lon_deg: f64,
    alt_m: f64,
    sensors_xyz: *const f64,
    out: *mut f64,
) -> OspStatus {
    guard(|| {
        let aircraft = GeodeticPosition::new(lat_deg, lon_deg, alt_m)?;
        let s = slice(sensors_xyz, 12, "sensors_xyz")?;
        let sensors: [EcefPosition; 4] = std::array::from_fn(|i| EcefPosition {
            x: s[3 * i],
            y: s[3 * i + 1],
            z: s[3 * i + 2],
        });
        let value = gdop::gdop_of_four(&aircraft, &sensors)?;
        *deref_mut(out, "out")? = value.value();
        Ok(())
    })
}

/// Knapsack penalty of selecting `selected` out of `cells` sites.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osp_knapsack_penalty(selected: usize, cells: usize, out: *mut f64) -> OspStatus {
    guard(|| {
        let v = objectives::knapsack_penalty(selected, cells)?;
        *deref_mut(out, "out")? = v;
        Ok(())
    })
}

/// Selects every forced site and nothing else; helper for callers that
/// build selections on top of a deployment.
///
/// # Safety
/// `problem` must be a live handle and `genes` must hold `n_genes` bytes.
#[no_mangle]
pub unsafe extern "C" fn osp_problem_forced_genes(problem: *const OspProblem, genes: *mut u8, n_genes: usize) -> OspStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.problem;
        if n_genes != p.n_candidates() {
            return Err(OspError::input(format!("{n_genes} genes for {} candidates", p.n_candidates())).into());
        }
        let genes = std::slice::from_raw_parts_mut(deref_mut(genes, "genes")?, n_genes);
        for (g, &f) in genes.iter_mut().zip(&p.forced) {
            *g = u8::from(f);
        }
        Ok(())
    })
}

