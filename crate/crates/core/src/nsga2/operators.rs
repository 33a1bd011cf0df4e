use rand::seq::index;
use rand::Rng;

use crate::error::{OspError, Result};

/// Binary site selection. Forced genes are always set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    pub genes: Vec<bool>,
    pub forced_mask: Vec<bool>,
}

impl Chromosome {
    /// All-zero chromosome with the forced genes set.
    pub fn empty(forced_mask: Vec<bool>) -> Self {
        Self {
            genes: forced_mask.clone(),
            forced_mask,
        }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn count(&self) -> usize {
        self.genes.iter().filter(|&&g| g).count()
    }

    pub fn forced_count(&self) -> usize {
        self.forced_mask.iter().filter(|&&g| g).count()
    }

    /// Indices of the selected sites, ascending.
    pub fn selection(&self) -> Vec<usize> {
        crate::fitness::selection_of(&self.genes)
    }

    fn enforce_mask(&mut self) {
        for (g, &f) in self.genes.iter_mut().zip(&self.forced_mask) {
            *g |= f;
        }
    }

    /// Clears random non-forced genes until at most `n_max` remain set.
    pub fn repair<R: Rng + ?Sized>(&mut self, n_max: Option<usize>, rng: &mut R) {
        let Some(n_max) = n_max else { return };
        let count = self.count();
        if count <= n_max {
            return;
        }
        let free: Vec<usize> = (0..self.genes.len())
            .filter(|&i| self.genes[i] && !self.forced_mask[i])
            .collect();
        let drop = (count - n_max).min(free.len());
        for k in index::sample(rng, free.len(), drop) {
            self.genes[free[k]] = false;
        }
    }

    /// Random chromosome whose popcount is uniform on
    /// `[forced, min(n_max, N)]`, with free genes placed uniformly.
    pub fn random<R: Rng + ?Sized>(forced_mask: Vec<bool>, n_max: Option<usize>, rng: &mut R) -> Self {
        let mut c = Self::empty(forced_mask);
        let forced = c.forced_count();
        let hi = n_max.unwrap_or(c.len()).min(c.len()).max(forced);
        let target = rng.random_range(forced..=hi);
        let free: Vec<usize> = (0..c.len()).filter(|&i| !c.forced_mask[i]).collect();
        for k in index::sample(rng, free.len(), target - forced) {
            c.genes[free[k]] = true;
        }
        c
    }
}

/// Index of the tournament winner among `size` uniform draws: lower rank,
/// then larger crowding distance, then lower index.
pub fn tournament_select<R: Rng + ?Sized>(
    ranks: &[usize],
    crowding: &[f64],
    size: usize,
    rng: &mut R,
) -> usize {
    let n = ranks.len();
    let mut best = rng.random_range(0..n);
    for _ in 1..size.max(1) {
        let c = rng.random_range(0..n);
        if better(c, best, ranks, crowding) {
            best = c;
        }
    }
    best
}

/// Tournament ordering between two individuals.
pub fn better(a: usize, b: usize, ranks: &[usize], crowding: &[f64]) -> bool {
    ranks[a]
        .cmp(&ranks[b])
        .then(crowding[b].total_cmp(&crowding[a]))
        .then(a.cmp(&b))
        .is_lt()
}

/// Uniform crossover applied with probability `rate`; otherwise clones.
pub fn crossover<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    rate: f64,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    if p1.len() != p2.len() || p1.forced_mask != p2.forced_mask {
        return Err(OspError::input("parents differ in length or forced mask"));
    }
    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    if rng.random::<f64>() < rate {
        for i in 0..c1.len() {
            if rng.random::<bool>() {
                std::mem::swap(&mut c1.genes[i], &mut c2.genes[i]);
            }
        }
    }
    c1.enforce_mask();
    c2.enforce_mask();
    Ok((c1, c2))
}

/// Flips each non-forced gene with probability `rate`, then repairs to `n_max`.
pub fn mutate<R: Rng + ?Sized>(
    c: &Chromosome,
    rate: f64,
    n_max: Option<usize>,
    rng: &mut R,
) -> Chromosome {
    let mut out = c.clone();
    for i in 0..out.len() {
        if !out.forced_mask[i] && rng.random::<f64>() < rate {
            out.genes[i] = !out.genes[i];
        }
    }
    out.enforce_mask();
    out.repair(n_max, rng);
    out
}
