//! File formats: site CSVs, front and solution files, evaluation reports.
//!
//! Every CSV starts with `# key: value` metadata lines followed by a
//! mandatory header row. Scores are written with 9 significant digits;
//! coordinates and normalization bounds keep full precision so files can be
//! re-evaluated exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{CoverageGrid, GdopDistribution, JamReport, SummaryRow};
use crate::error::{OspError, Result};
use crate::fitness::{NormalizationBounds, ObjectiveScores};
use crate::geo::GeodeticPosition;
use crate::scenario::Site;

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// A score as written to files.
pub fn fmt_score(x: f64) -> String {
    if x.is_finite() {
        format!("{}", round9(x))
    } else if x > 0.0 {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Metadata carried in `#` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileMeta {
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub solution_id: Option<usize>,
    pub bounds: Option<NormalizationBounds>,
}

impl FileMeta {
    fn lines(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.config_hash {
            out.push_str(&format!("# config_hash: {h}\n"));
        }
        if let Some(s) = self.seed {
            out.push_str(&format!("# seed: {s}\n"));
        }
        if let Some(id) = self.solution_id {
            out.push_str(&format!("# solution_id: {id}\n"));
        }
        if let Some(b) = &self.bounds {
            let join = |v: &[f64; 5]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
            out.push_str(&format!("# bounds_min: {}\n", join(&b.min)));
            out.push_str(&format!("# bounds_max: {}\n", join(&b.max)));
        }
        out
    }
}

fn input_error(path: &Path, line: u64, message: impl Into<String>) -> OspError {
    OspError::Input {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input_error(path, 0, e.to_string()))
}

fn parse_meta(path: &Path, text: &str) -> Result<FileMeta> {
    let mut meta = FileMeta::default();
    let (mut min, mut max) = (None, None);
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let Some(body) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let Some((key, value)) = body.split_once(':') else {
            continue;
        };
        let value = value.trim();
        let bad = |what: &str| input_error(path, line_no, format!("malformed {what}: {value}"));
        match key.trim() {
            "config_hash" => meta.config_hash = Some(value.to_string()),
            "seed" => meta.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "solution_id" => meta.solution_id = Some(value.parse().map_err(|_| bad("solution id"))?),
            k @ ("bounds_min" | "bounds_max") => {
                let parsed: Vec<f64> = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bounds"))?;
                let arr: [f64; 5] = parsed.try_into().map_err(|_| bad("bounds"))?;
                if k == "bounds_min" {
                    min = Some(arr);
                } else {
                    max = Some(arr);
                }
            }
            _ => {}
        }
    }
    if let (Some(min), Some(max)) = (min, max) {
        meta.bounds = Some(NormalizationBounds { min, max });
    }
    Ok(meta)
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// A site row with its optional forced flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRow {
    pub site: Site,
    pub forced: bool,
}

/// Sites CSV: header `id,lat_deg,lon_deg,alt_m`, optional `forced` column.
pub fn read_sites(path: &Path) -> Result<(FileMeta, Vec<SiteRow>)> {
    let text = read_text(path)?;
    sites_from_text(path, &text)
}

/// Parses sites from in-memory CSV text; `label` names it in errors.
pub fn parse_sites(label: &str, text: &str) -> Result<(FileMeta, Vec<SiteRow>)> {
    sites_from_text(Path::new(label), text)
}

fn sites_from_text(path: &Path, text: &str) -> Result<(FileMeta, Vec<SiteRow>)> {
    let meta = parse_meta(path, text)?;
    if text.lines().all(|l| l.trim().is_empty() || l.trim_start().starts_with('#')) {
        return Ok((meta, Vec::new()));
    }
    let mut rdr = reader(text);
    let headers = rdr
        .headers()
        .map_err(|e| input_error(path, 1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id), Some(lat), Some(lon), Some(alt)) =
        (col("id"), col("lat_deg"), col("lon_deg"), col("alt_m"))
    else {
        return Err(input_error(
            path,
            1,
            "header must contain id,lat_deg,lon_deg,alt_m",
        ));
    };
    let forced = col("forced");
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            input_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| input_error(path, line, format!("{name}: not a number: {raw:?}")))
        };
        let position = GeodeticPosition::new(num(lat, "lat_deg")?, num(lon, "lon_deg")?, num(alt, "alt_m")?)
            .map_err(|e| input_error(path, line, e.to_string()))?;
        if position.altitude_m < 0.0 {
            return Err(input_error(path, line, "alt_m must be >= 0"));
        }
        let forced = match forced.and_then(|i| record.get(i)) {
            None | Some("") => false,
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" => true,
                "0" | "false" | "no" => false,
                _ => return Err(input_error(path, line, format!("forced: expected true/false, got {v:?}"))),
            },
        };
        let id = record.get(id).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(input_error(path, line, "empty id"));
        }
        rows.push(SiteRow {
            site: Site { id, position },
            forced,
        });
    }
    Ok((meta, rows))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Writes a sites CSV with a forced column.
pub fn write_sites(path: &Path, meta: &FileMeta, rows: &[SiteRow]) -> Result<()> {
    let mut out = meta.lines();
    out.push_str("id,lat_deg,lon_deg,alt_m,forced\n");
    for r in rows {
        let p = &r.site.position;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.site.id, p.latitude_deg, p.longitude_deg, p.altitude_m, r.forced
        ));
    }
    write_file(path, &out)
}

pub const PARETO_HEADER: &str =
    "id,n_sensors,of1,of2,of3,of3_d1,of3_d2,of3_d3,of1_norm,of2_norm,of3_norm,penalty";

fn summary_line(r: &SummaryRow) -> String {
    let vals = [
        r.of1,
        r.of2,
        r.of3,
        r.of3_components[0],
        r.of3_components[1],
        r.of3_components[2],
        r.normalized[0],
        r.normalized[1],
        r.normalized[2],
        r.penalty,
    ];
    let mut line = format!("{},{}", r.id, r.n_sensors);
    for v in vals {
        line.push(',');
        line.push_str(&fmt_score(v));
    }
    line
}

pub fn write_pareto(path: &Path, meta: &FileMeta, rows: &[SummaryRow]) -> Result<()> {
    let mut out = meta.lines();
    out.push_str(PARETO_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&summary_line(r));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn read_pareto(path: &Path) -> Result<(FileMeta, Vec<SummaryRow>)> {
    let text = read_text(path)?;
    let meta = parse_meta(path, &text)?;
    let mut rdr = reader(&text);
    let headers = rdr
        .headers()
        .map_err(|e| input_error(path, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>().join(",") != PARETO_HEADER {
        return Err(input_error(path, 1, format!("expected header {PARETO_HEADER}")));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| input_error(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let int = |i: usize| -> Result<usize> {
            field(i)
                .parse()
                .map_err(|_| input_error(path, line, format!("column {i}: expected an integer")))
        };
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| input_error(path, line, format!("column {i}: expected a number")))
        };
        rows.push(SummaryRow {
            id: int(0)?,
            n_sensors: int(1)?,
            of1: num(2)?,
            of2: num(3)?,
            of3: num(4)?,
            of3_components: [num(5)?, num(6)?, num(7)?],
            normalized: [num(8)?, num(9)?, num(10)?],
            penalty: num(11)?,
        });
    }
    Ok((meta, rows))
}

#[derive(Serialize)]
struct ScoresDoc<'a> {
    config_hash: Option<&'a str>,
    seed: Option<u64>,
    solution_id: Option<usize>,
    bounds_source: &'a str,
    n_sensors: usize,
    of1: f64,
    of2: f64,
    of3: f64,
    of3_components: [f64; 3],
    normalized: [f64; 3],
    normalized_components: [f64; 3],
    penalty: f64,
    max_jammer_affected: usize,
    gdop_exceedance: GdopDoc,
}

#[derive(Serialize)]
struct GdopDoc {
    thresholds: Vec<f64>,
    pooled: Vec<f64>,
    per_altitude: Vec<AltitudeDoc>,
}

#[derive(Serialize)]
struct AltitudeDoc {
    altitude_m: f64,
    fractions: Vec<f64>,
}

/// Writes `scores.json`.
pub fn write_scores(
    path: &Path,
    meta: &FileMeta,
    bounds_source: &str,
    scores: &ObjectiveScores,
    jam: &JamReport,
    distribution: &GdopDistribution,
) -> Result<()> {
    let r3 = |v: [f64; 3]| v.map(round9);
    let r = |v: &[f64]| v.iter().map(|&x| round9(x)).collect::<Vec<_>>();
    let doc = ScoresDoc {
        config_hash: meta.config_hash.as_deref(),
        seed: meta.seed,
        solution_id: meta.solution_id,
        bounds_source,
        n_sensors: scores.n_sensors,
        of1: round9(scores.of1),
        of2: round9(scores.of2),
        of3: round9(scores.of3),
        of3_components: r3(scores.of3_components),
        normalized: r3(scores.normalized),
        normalized_components: r3(scores.normalized_components),
        penalty: round9(scores.penalty),
        max_jammer_affected: jam.max_affected,
        gdop_exceedance: GdopDoc {
            thresholds: distribution.thresholds.clone(),
            pooled: r(&distribution.pooled),
            per_altitude: distribution
                .per_altitude
                .iter()
                .map(|(a, f)| AltitudeDoc {
                    altitude_m: *a,
                    fractions: r(f),
                })
                .collect(),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_file(path, &text)
}

pub fn write_coverage(path: &Path, meta: &FileMeta, grid: &CoverageGrid) -> Result<()> {
    let mut out = meta.lines();
    out.push_str("lat_deg,lon_deg,alt_m,k,gdop,range2_km\n");
    for c in &grid.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.point.latitude_deg,
            c.point.longitude_deg,
            c.point.altitude_m,
            c.k,
            fmt_score(c.best_gdop.value()),
            fmt_score(c.second_nearest_range_km)
        ));
    }
    write_file(path, &out)
}

pub fn write_jam_report(path: &Path, meta: &FileMeta, report: &JamReport) -> Result<()> {
    let mut out = meta.lines();
    out.push_str("jammer_id,lat_deg,lon_deg,alt_m,affected,min_dist_km\n");
    for (i, e) in report.entries.iter().enumerate() {
        out.push_str(&format!(
            "j{i:03},{},{},{},{},{}\n",
            e.position.latitude_deg,
            e.position.longitude_deg,
            e.position.altitude_m,
            e.affected_sensor_count,
            fmt_score(e.min_distance_to_sensor_km)
        ));
    }
    write_file(path, &out)
}
