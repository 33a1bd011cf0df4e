use std::collections::HashMap;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{self, Chromosome};
use super::sort::{crowding_distance, non_dominated_sort};
use crate::error::{OspError, Result};
use crate::fitness::{self, NormalizationBounds, Objective, ObjectiveScores, RawScores};
use crate::scenario::PlacementProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means `1 / N`.
    pub mutation_rate: Option<f64>,
    pub tournament_size: usize,
    pub seed: u64,
    /// Cap on selected sites. In augmentation runs this counts new sites only.
    pub n_max: Option<usize>,
    /// Weight `a` of the knapsack penalty.
    pub pareto_weight: f64,
    /// Objectives used for dominance.
    pub objectives: Vec<Objective>,
    /// Stop after this many generations without a better ideal point.
    pub stagnation_generations: Option<usize>,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 200,
            crossover_rate: 0.9,
            mutation_rate: None,
            tournament_size: 2,
            seed: 0,
            n_max: None,
            pareto_weight: 0.1,
            objectives: Objective::ALL.to_vec(),
            stagnation_generations: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return Err(OspError::config(
                "ga.population_size",
                "must be even and at least 4",
            ));
        }
        for (name, v) in [
            ("ga.crossover_rate", Some(self.crossover_rate)),
            ("ga.mutation_rate", self.mutation_rate),
            ("ga.pareto_weight", Some(self.pareto_weight)),
        ] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(OspError::config(name, "must lie in [0, 1]"));
                }
            }
        }
        if self.tournament_size == 0 {
            return Err(OspError::config("ga.tournament_size", "must be >= 1"));
        }
        if self.objectives.is_empty() {
            return Err(OspError::config("ga.objectives", "need at least one objective"));
        }
        let mut sorted = self.objectives.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.objectives.len() {
            return Err(OspError::config("ga.objectives", "objectives repeat"));
        }
        if self.stagnation_generations == Some(0) {
            return Err(OspError::config("ga.stagnation_generations", "must be >= 1"));
        }
        Ok(())
    }
}

/// One population member.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub raw: RawScores,
    pub scores: ObjectiveScores,
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontMember {
    pub id: usize,
    /// Selected site indices, ascending.
    pub selected: Vec<usize>,
    pub raw: RawScores,
    pub scores: ObjectiveScores,
    pub objectives: Vec<f64>,
}

/// Final non-dominated set with the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub members: Vec<FrontMember>,
    /// Normalization bounds frozen at the end of the run.
    pub bounds: NormalizationBounds,
    pub seed: u64,
    pub generations_run: usize,
    pub objectives: Vec<Objective>,
    pub pareto_weight: f64,
}

/// Progress record emitted after each generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub gen: usize,
    pub front_size: usize,
    /// Per active objective, the best value in the current front.
    pub best: Vec<f64>,
    pub bounds: NormalizationBounds,
    /// Raw scores of the current rank-0 members.
    pub front: Vec<RawScores>,
}

struct Evaluator<'a> {
    problem: &'a PlacementProblem,
    cache: HashMap<Vec<bool>, RawScores>,
    bounds: NormalizationBounds,
}

impl<'a> Evaluator<'a> {
    fn raw_for(&mut self, chromosomes: &[Chromosome]) -> Vec<RawScores> {
        let mut pending: Vec<&Vec<bool>> = Vec::new();
        for c in chromosomes {
            if !self.cache.contains_key(&c.genes) && !pending.contains(&&c.genes) {
                pending.push(&c.genes);
            }
        }
        let problem = self.problem;
        let fresh: Vec<RawScores> = pending
            .par_iter()
            .map(|genes| fitness::evaluate_unchecked(problem, &fitness::selection_of(genes)).raw)
            .collect();
        for (genes, raw) in pending.into_iter().zip(fresh) {
            self.bounds.include(&raw);
            self.cache.insert(genes.clone(), raw);
        }
        chromosomes.iter().map(|c| self.cache[&c.genes]).collect()
    }
}

fn score(pop: &mut [Individual], bounds: &NormalizationBounds, weights: &[f64; 3], config: &GaConfig) {
    for ind in pop.iter_mut() {
        ind.scores = ObjectiveScores::new(&ind.raw, bounds, weights);
        ind.objectives = ind.scores.objective_vector(&config.objectives, config.pareto_weight);
    }
}

fn rank_and_crowd(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let vectors: Vec<&[f64]> = pop.iter().map(|i| i.objectives.as_slice()).collect();
    let fronts = non_dominated_sort(&vectors);
    let mut crowd = vec![0.0; pop.len()];
    for front in &fronts {
        for (pos, d) in crowding_distance(&vectors, front).into_iter().enumerate() {
            crowd[front[pos]] = d;
        }
    }
    for (r, front) in fronts.iter().enumerate() {
        for &i in front {
            pop[i].rank = r;
            pop[i].crowding = crowd[i];
        }
    }
    fronts
}

fn record(gen: usize, pop: &[Individual], bounds: &NormalizationBounds) -> GenerationRecord {
    let front: Vec<&Individual> = pop.iter().filter(|i| i.rank == 0).collect();
    let m = front.first().map_or(0, |i| i.objectives.len());
    let best = (0..m)
        .map(|k| front.iter().map(|i| i.objectives[k]).fold(f64::INFINITY, f64::min))
        .collect();
    GenerationRecord {
        gen,
        front_size: front.len(),
        best,
        bounds: *bounds,
        front: front.iter().map(|i| i.raw).collect(),
    }
}

/// Component-wise minimum of the raw scores of the current front.
fn ideal_point(pop: &[Individual]) -> [f64; 5] {
    let mut ideal = [f64::INFINITY; 5];
    for ind in pop.iter().filter(|i| i.rank == 0) {
        for (k, v) in ind.raw.components().into_iter().enumerate() {
            ideal[k] = ideal[k].min(v);
        }
    }
    ideal
}

/// Runs NSGA-II and returns the final front.
pub fn evolve(problem: &PlacementProblem, config: &GaConfig) -> Result<ParetoFront> {
    evolve_with(problem, config, |_| {})
}

/// [`evolve`], calling `observer` after the initial population and after
/// every generation.
pub fn evolve_with<F>(problem: &PlacementProblem, config: &GaConfig, mut observer: F) -> Result<ParetoFront>
where
    F: FnMut(&GenerationRecord),
{
    config.validate()?;
    let n = problem.n_candidates();
    let forced_count = problem.forced_count();
    if let Some(n_max) = config.n_max {
        if n_max < forced_count {
            return Err(OspError::config(
                "ga.n_max",
                format!("{n_max} is below the {forced_count} forced sites"),
            ));
        }
    }
    let mutation_rate = config.mutation_rate.unwrap_or(1.0 / n as f64);
    let weights = problem.of3_weights;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = Evaluator {
        problem,
        cache: HashMap::new(),
        bounds: NormalizationBounds::empty(),
    };

    let initial: Vec<Chromosome> = (0..config.population_size)
        .map(|_| Chromosome::random(problem.forced.clone(), config.n_max, &mut rng))
        .collect();
    let raws = eval.raw_for(&initial);
    let mut pop: Vec<Individual> = initial
        .into_iter()
        .zip(raws)
        .map(|(chromosome, raw)| Individual {
            chromosome,
            raw,
            scores: ObjectiveScores::new(&raw, &NormalizationBounds::empty(), &weights),
            objectives: Vec::new(),
            rank: 0,
            crowding: 0.0,
        })
        .collect();
    score(&mut pop, &eval.bounds, &weights, config);
    rank_and_crowd(&mut pop);
    observer(&record(0, &pop, &eval.bounds));

    let mut ideal = ideal_point(&pop);
    let mut stale = 0;
    let mut generations_run = 0;
    for gen in 1..=config.generations {
        let ranks: Vec<usize> = pop.iter().map(|i| i.rank).collect();
        let crowd: Vec<f64> = pop.iter().map(|i| i.crowding).collect();
        let mut children = Vec::with_capacity(config.population_size);
        while children.len() < config.population_size {
            let a = operators::tournament_select(&ranks, &crowd, config.tournament_size, &mut rng);
            let b = operators::tournament_select(&ranks, &crowd, config.tournament_size, &mut rng);
            let (c1, c2) = operators::crossover(
                &pop[a].chromosome,
                &pop[b].chromosome,
                config.crossover_rate,
                &mut rng,
            )?;
            children.push(operators::mutate(&c1, mutation_rate, config.n_max, &mut rng));
            children.push(operators::mutate(&c2, mutation_rate, config.n_max, &mut rng));
        }
        let raws = eval.raw_for(&children);
        let placeholder = pop[0].scores;
        pop.extend(children.into_iter().zip(raws).map(|(chromosome, raw)| Individual {
            chromosome,
            raw,
            scores: placeholder,
            objectives: Vec::new(),
            rank: 0,
            crowding: 0.0,
        }));

        score(&mut pop, &eval.bounds, &weights, config);
        let fronts = rank_and_crowd(&mut pop);
        let mut keep: Vec<usize> = Vec::with_capacity(config.population_size);
        for front in fronts {
            if keep.len() + front.len() <= config.population_size {
                keep.extend(front);
                if keep.len() == config.population_size {
                    break;
                }
            } else {
                let mut last = front;
                last.sort_by(|&a, &b| pop[b].crowding.total_cmp(&pop[a].crowding).then(a.cmp(&b)));
                last.truncate(config.population_size - keep.len());
                keep.extend(last);
                break;
            }
        }
        keep.sort_unstable();
        let mut merged: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
        pop = keep.into_iter().map(|i| merged[i].take().expect("kept once")).collect();
        rank_and_crowd(&mut pop);
        generations_run = gen;
        let rec = record(gen, &pop, &eval.bounds);
        debug!("generation {gen}: front size {}", rec.front_size);
        observer(&rec);

        if let Some(window) = config.stagnation_generations {
            let next = ideal_point(&pop);
            if next.iter().zip(&ideal).any(|(a, b)| a < b) {
                stale = 0;
            } else {
                stale += 1;
            }
            ideal = next;
            if stale >= window {
                debug!("stopping after {gen} generations without improvement");
                break;
            }
        }
    }

    Ok(collect_front(&pop, &eval.bounds, config, generations_run))
}

fn collect_front(
    pop: &[Individual],
    bounds: &NormalizationBounds,
    config: &GaConfig,
    generations_run: usize,
) -> ParetoFront {
    let mut members: Vec<&Individual> = pop.iter().filter(|i| i.rank == 0).collect();
    members.sort_by(|a, b| {
        a.raw
            .n_sensors
            .cmp(&b.raw.n_sensors)
            .then(a.scores.of1.total_cmp(&b.scores.of1))
            .then(a.scores.of2.total_cmp(&b.scores.of2))
            .then(a.scores.of3.total_cmp(&b.scores.of3))
            .then(a.chromosome.genes.cmp(&b.chromosome.genes))
    });
    members.dedup_by(|a, b| a.chromosome.genes == b.chromosome.genes);
    ParetoFront {
        members: members
            .into_iter()
            .enumerate()
            .map(|(id, ind)| FrontMember {
                id,
                selected: ind.chromosome.selection(),
                raw: ind.raw,
                scores: ind.scores,
                objectives: ind.objectives.clone(),
            })
            .collect(),
        bounds: *bounds,
        seed: config.seed,
        generations_run,
        objectives: config.objectives.clone(),
        pareto_weight: config.pareto_weight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdop::SubsetStrategy;
    use crate::geo::PropagationParams;
    use crate::nsga2::sort::dominates_unchecked;
    use crate::objectives::{JammerModel, ObjectiveRequirements};
    use crate::scenario::{self, AreaBounds, ProblemInputs, SitePattern};

    pub(crate) fn toy_problem(n: usize, forced: &[usize]) -> PlacementProblem {
        let bounds = AreaBounds {
            lat_low_deg: 47.0,
            lat_up_deg: 48.0,
            lon_low_deg: 8.0,
            lon_up_deg: 9.5,
            altitude_levels_m: vec![4000.0],
        };
        let req = ObjectiveRequirements {
            required_gdop: 4.0,
            required_range_km: 40.0,
            required_min_sensor_spacing_km: 30.0,
            required_min_jammer_distance_km: 30.0,
            ..Default::default()
        };
        let grid = scenario::sample_grid(&bounds, 3, 3, &req).unwrap();
        let candidates =
            scenario::generate_candidates(&bounds, n, SitePattern::SeededUniform, 11, 0.0).unwrap();
        let jammers = scenario::generate_jammers(&bounds, 2, &[2000.0], SitePattern::Lattice, 0)
            .unwrap()
            .into_iter()
            .map(JammerModel::at)
            .collect();
        let mut mask = vec![false; n];
        for &f in forced {
            mask[f] = true;
        }
        scenario::precompute(ProblemInputs {
            forced: mask,
            bounds,
            grid,
            candidates,
            jammers,
            requirements: req,
            of3_weights: [1.0 / 3.0; 3],
            propagation: PropagationParams::default(),
            strategy: SubsetStrategy::Exhaustive,
        })
        .unwrap()
    }

    fn small_config(seed: u64) -> GaConfig {
        GaConfig {
            population_size: 16,
            generations: 12,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let p = toy_problem(14, &[]);
        let a = evolve(&p, &small_config(5)).unwrap();
        let b = evolve(&p, &small_config(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_generations_returns_initial_front() {
        let p = toy_problem(12, &[]);
        let cfg = GaConfig {
            generations: 0,
            ..small_config(1)
        };
        let mut records = Vec::new();
        let front = evolve_with(&p, &cfg, |r| records.push(r.clone())).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(front.generations_run, 0);
        assert!(!front.members.is_empty());
        for m in &front.members {
            assert!(records[0].front.contains(&m.raw));
        }
    }

    #[test]
    fn front_is_mutually_non_dominated() {
        let p = toy_problem(14, &[]);
        let front = evolve(&p, &small_config(9)).unwrap();
        for a in &front.members {
            for b in &front.members {
                assert!(!dominates_unchecked(&a.objectives, &b.objectives));
            }
        }
        let ids: Vec<usize> = front.members.iter().map(|m| m.id).collect();
        assert_eq!(ids, (0..front.members.len()).collect::<Vec<_>>());
    }

    #[test]
    fn forced_sites_always_present() {
        let forced = [1, 6, 9];
        let p = toy_problem(14, &forced);
        let cfg = GaConfig {
            n_max: Some(7),
            ..small_config(3)
        };
        let front = evolve(&p, &cfg).unwrap();
        for m in &front.members {
            assert!(forced.iter().all(|f| m.selected.contains(f)));
            assert!(m.selected.len() <= 7);
        }
        let bad = GaConfig {
            n_max: Some(2),
            ..small_config(3)
        };
        assert!(matches!(evolve(&p, &bad), Err(OspError::InvalidConfig { .. })));
    }

    #[test]
    fn no_variation_keeps_initial_chromosomes() {
        let p = toy_problem(12, &[]);
        let cfg = GaConfig {
            crossover_rate: 0.0,
            mutation_rate: Some(0.0),
            generations: 6,
            ..small_config(8)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let initial: Vec<Vec<usize>> = (0..cfg.population_size)
            .map(|_| Chromosome::random(p.forced.clone(), cfg.n_max, &mut rng).selection())
            .collect();
        let front = evolve(&p, &cfg).unwrap();
        for m in &front.members {
            assert!(initial.contains(&m.selected));
        }
    }

    #[test]
    fn config_validation() {
        let ok = GaConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            GaConfig { population_size: 3, ..ok.clone() },
            GaConfig { population_size: 7, ..ok.clone() },
            GaConfig { crossover_rate: 1.5, ..ok.clone() },
            GaConfig { mutation_rate: Some(-0.1), ..ok.clone() },
            GaConfig { objectives: vec![], ..ok.clone() },
            GaConfig { objectives: vec![Objective::Of1, Objective::Of1], ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn stagnation_stops_early() {
        let p = toy_problem(10, &[]);
        let cfg = GaConfig {
            generations: 500,
            stagnation_generations: Some(5),
            ..small_config(2)
        };
        let front = evolve(&p, &cfg).unwrap();
        assert!(front.generations_run < 500);
    }
}
