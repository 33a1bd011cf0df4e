//! NSGA-II over binary site-selection chromosomes.

mod evolve;
mod operators;
mod sort;

pub use evolve::{
    evolve, evolve_with, FrontMember, GaConfig, GenerationRecord, Individual, ParetoFront,
};
pub use operators::{better, crossover, mutate, tournament_select, Chromosome};
pub use sort::{crowding_distance, dominates, non_dominated_sort};
