//! The workflows behind the `osp` commands, usable without the binary.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::analysis::{self, SummaryRow};
use crate::config::RunConfig;
use crate::error::{OspError, Result};
use crate::fitness::NormalizationBounds;
use crate::io::{self, FileMeta, SiteRow};
use crate::nsga2::{self, GenerationRecord, ParetoFront};
use crate::scenario::{self, PlacementProblem, Site};

/// GDOP thresholds reported in `scores.json`.
pub const GDOP_THRESHOLDS: [f64; 5] = [5.0, 10.0, 20.0, 60.0, 100.0];

pub const PARETO_FILE: &str = "pareto.csv";

pub fn solution_file(id: usize) -> String {
    format!("solution_{id}.csv")
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub front: ParetoFront,
    pub rows: Vec<SummaryRow>,
    pub config_hash: String,
    pub files: Vec<PathBuf>,
}

/// Runs the optimizer and writes `pareto.csv` plus one `solution_<id>.csv`
/// per front member into `out`. With a non-empty `deployed` list the run
/// augments that deployment and `ga.n_max` counts new sites only.
pub fn optimize<F>(config: &RunConfig, deployed: &[Site], out: &Path, observer: F) -> Result<RunOutput>
where
    F: FnMut(&GenerationRecord),
{
    config.validate()?;
    let problem = if deployed.is_empty() {
        scenario::build_scenario1(config)?
    } else {
        scenario::build_scenario2(config, deployed)?
    };
    let mut ga = config.ga.clone();
    ga.n_max = ga.n_max.map(|n| n + problem.forced_count());
    info!(
        "{} candidates ({} forced), {} grid points, {} jammers",
        problem.n_candidates(),
        problem.forced_count(),
        problem.grid.len(),
        problem.jammers.len()
    );
    let front = nsga2::evolve_with(&problem, &ga, observer)?;
    let config_hash = config.hash(deployed);
    let files = write_front(&problem, &front, &config_hash, out)?;
    Ok(RunOutput {
        rows: analysis::pareto_summary(&front),
        front,
        config_hash,
        files,
    })
}

fn write_front(problem: &PlacementProblem, front: &ParetoFront, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    remove_stale_solutions(out)?;
    let meta = FileMeta {
        config_hash: Some(hash.to_string()),
        seed: Some(front.seed),
        solution_id: None,
        bounds: Some(front.bounds),
    };
    let mut files = Vec::with_capacity(front.members.len() + 1);
    let pareto = out.join(PARETO_FILE);
    io::write_pareto(&pareto, &meta, &analysis::pareto_summary(front))?;
    files.push(pareto);
    for m in &front.members {
        let rows: Vec<SiteRow> = m
            .selected
            .iter()
            .map(|&i| SiteRow {
                site: problem.candidates[i].clone(),
                forced: problem.forced[i],
            })
            .collect();
        let path = out.join(solution_file(m.id));
        let meta = FileMeta {
            solution_id: Some(m.id),
            ..meta.clone()
        };
        io::write_sites(&path, &meta, &rows)?;
        files.push(path);
    }
    Ok(files)
}

fn is_solution_file(name: &str) -> bool {
    name.strip_prefix("solution_")
        .and_then(|s| s.strip_suffix(".csv"))
        .is_some_and(|id| !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit()))
}

fn solution_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(is_solution_file) {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}

fn remove_stale_solutions(dir: &Path) -> Result<()> {
    for path in solution_files(dir)? {
        info!("removing stale {}", path.display());
        fs::remove_file(path)?;
    }
    Ok(())
}

/// Result of evaluating a sensors file.
#[derive(Debug, Clone)]
pub struct EvaluateOutput {
    pub scores: crate::fitness::ObjectiveScores,
    pub coverage: analysis::CoverageGrid,
    pub jam: analysis::JamReport,
    pub distribution: analysis::GdopDistribution,
    /// `"run"` when the file carried the bounds of the run that produced it.
    pub bounds_source: &'static str,
}

/// Scores the sites in `sensors` and writes `scores.json`, `coverage.csv`
/// and `jam_report.csv` into `out`.
///
/// Rows flagged forced are merged before the others, which rebuilds the
/// candidate list of the run that wrote the file.
pub fn evaluate(config: &RunConfig, sensors: &Path, out: &Path) -> Result<EvaluateOutput> {
    config.validate()?;
    let (file_meta, rows) = io::read_sites(sensors)?;
    let (forced, free): (Vec<&SiteRow>, Vec<&SiteRow>) = rows.iter().partition(|r| r.forced);
    let forced: Vec<Site> = forced.into_iter().map(|r| r.site.clone()).collect();
    let free: Vec<Site> = free.into_iter().map(|r| r.site.clone()).collect();

    let mut inputs = scenario::inputs_for(config)?;
    let mut selected = scenario::merge_sites(&mut inputs, &forced, true, scenario::SITE_MATCH_DEG);
    selected.extend(scenario::merge_sites(&mut inputs, &free, false, scenario::SITE_MATCH_DEG));
    let problem = scenario::precompute(inputs)?;
    let mut genes = vec![false; problem.n_candidates()];
    for i in selected {
        genes[i] = true;
    }

    let config_hash = config.hash(&forced);
    if let Some(h) = &file_meta.config_hash {
        if *h != config_hash {
            warn!(
                "{} was written under config {h}, evaluating under {config_hash}",
                sensors.display()
            );
        }
    }
    let (bounds, bounds_source) = match file_meta.bounds {
        Some(b) => (b, "run"),
        None => (NormalizationBounds::reference(&problem), "reference"),
    };
    let (scores, coverage, jam) = analysis::evaluate_placement(&problem, &genes, &bounds)?;
    let distribution = analysis::gdop_distribution(&coverage, &GDOP_THRESHOLDS);

    let meta = FileMeta {
        config_hash: Some(config_hash),
        seed: file_meta.seed.or(Some(config.ga.seed)),
        solution_id: file_meta.solution_id,
        bounds: Some(bounds),
    };
    fs::create_dir_all(out)?;
    io::write_scores(&out.join("scores.json"), &meta, bounds_source, &scores, &jam, &distribution)?;
    io::write_coverage(&out.join("coverage.csv"), &meta, &coverage)?;
    io::write_jam_report(&out.join("jam_report.csv"), &meta, &jam)?;
    Ok(EvaluateOutput {
        scores,
        coverage,
        jam,
        distribution,
        bounds_source,
    })
}

/// Front summary plus the preferred member.
#[derive(Debug)]
pub struct ReportOutput {
    pub meta: FileMeta,
    pub rows: Vec<SummaryRow>,
    pub solution_files: usize,
    pub selected: Result<usize>,
}

/// Reads a front directory and picks a member. A missing or malformed
/// `pareto.csv` is an error; an empty feasible set is reported in
/// `selected`.
pub fn report(dir: &Path, budget_cap: Option<usize>, weights: [f64; 3]) -> Result<ReportOutput> {
    crate::objectives::check_weights(&weights)?;
    let (meta, rows) = io::read_pareto(&dir.join(PARETO_FILE))?;
    let solution_files = solution_files(dir)?.len();
    if solution_files != rows.len() {
        warn!(
            "{} lists {} members but {} solution files exist",
            dir.join(PARETO_FILE).display(),
            rows.len(),
            solution_files
        );
    }
    let selected = analysis::select_solution(&rows, budget_cap, weights);
    Ok(ReportOutput {
        meta,
        rows,
        solution_files,
        selected,
    })
}

/// Fixed-width table of a front summary.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:>4} {:>5} {:>12} {:>12} {:>12} {:>9} {:>9} {:>9} {:>10}\n",
        "id", "n", "of1", "of2", "of3", "of1_norm", "of2_norm", "of3_norm", "penalty"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>4} {:>5} {:>12.4} {:>12.4} {:>12.6} {:>9.4} {:>9.4} {:>9.4} {:>10.6}\n",
            r.id, r.n_sensors, r.of1, r.of2, r.of3, r.normalized[0], r.normalized[1], r.normalized[2], r.penalty
        ));
    }
    out
}

/// Reads a deployed-sites file for augmentation; every row becomes forced.
pub fn read_deployed(path: &Path) -> Result<Vec<Site>> {
    let (_, rows) = io::read_sites(path)?;
    Ok(rows.into_iter().map(|r| r.site).collect())
}

/// Rejects an unusable output directory before a long run starts.
pub fn check_out_dir(out: &Path) -> Result<()> {
    if out.exists() && !out.is_dir() {
        return Err(OspError::input(format!("{} is not a directory", out.display())));
    }
    Ok(())
}
