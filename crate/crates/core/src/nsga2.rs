//! NSGA-II over the integer split index.
//!
//! The genome is `l1` itself; `l2` is derived so the layer-sum constraint holds
//! by construction. Parents are picked by binary tournament (rank, then crowding
//! distance, then a fair coin), recombined by rounding the midpoint of the two
//! parents and mutated by a step in `{-2, -1, +1, +2}` clamped to `[1, L - 1]`.
//! Survival is elitist over parents plus offspring. Distinct split indices are
//! preferred over repeated ones so the population keeps as many distinct points
//! of the (tiny) search space as it can hold.
//!
//! The initial population is a Latin hypercube sample of the split range, so a
//! population at least as large as the range starts out covering all of it.
//!
//! Infeasible individuals are ranked like any other; filtering by the
//! constraints happens at selection time in [`crate::topsis`].
//!
//! The random source is ChaCha8 seeded with `ChaCha8Rng::seed_from_u64`, which
//! is portable across platforms, so a seed reproduces a run exactly.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{self, ObjectiveVector, ProblemInstance, SplitCandidate};

/// `a` dominates `b` when it is no worse everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Fast non-dominated sort. Returns fronts of indices into `points`, best first;
/// indices within a front are ascending.
pub fn non_dominated_sort<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];

    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates(a, b) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if dominates(b, a) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (indices into `points`), in the
/// same order as `front`.
///
/// Boundary members of every non-constant objective get `+inf`; interior
/// members accumulate `(next - prev) / (max - min)`. Objectives that are
/// constant over the front are skipped. Fronts of one or two members are all
/// boundary.
pub fn crowding_distance<P: AsRef<[f64]>>(points: &[P], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    let objectives = points[front[0]].as_ref().len();
    let mut distance = vec![0.0; len];
    let mut order: Vec<usize> = (0..len).collect();

    for m in 0..objectives {
        let value = |pos: usize| points[front[pos]].as_ref()[m];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let (lo, hi) = (value(order[0]), value(order[len - 1]));
        let spread = hi - lo;
        if !(spread > 0.0) {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[len - 1]] = f64::INFINITY;
        for k in 1..len - 1 {
            distance[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / spread;
        }
    }
    distance
}

/// GA hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 40,
            generations: 50,
            mutation_rate: 0.3,
            crossover_rate: 0.9,
            seed: 42,
        }
    }
}

impl GaConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population size must be even and >= 4, got {}",
                self.population_size
            )));
        }
        if self.generations < 1 {
            return Err(Error::InvalidConfig("generations must be >= 1".into()));
        }
        for (name, rate) in [("mutation", self.mutation_rate), ("crossover", self.crossover_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!(
                    "{name} rate must be in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// An evaluated split with its NSGA-II bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub candidate: SplitCandidate,
    pub objectives: ObjectiveVector,
    /// Front index, 0 is non-dominated.
    pub rank: usize,
    #[serde(with = "crowding_serde")]
    pub crowding: f64,
    pub feasible: bool,
}

// JSON has no infinity; boundary crowding is written as null.
mod crowding_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Individual {
    pub fn evaluate(instance: &ProblemInstance, l1: usize) -> Result<Self> {
        let candidate = SplitCandidate::at(l1, instance.total_layers());
        Ok(Self {
            candidate,
            objectives: problem::evaluate(instance, candidate)?,
            rank: 0,
            crowding: 0.0,
            feasible: problem::feasible(instance, candidate).is_feasible(),
        })
    }

    pub fn l1(&self) -> usize {
        self.candidate.l1
    }
}

/// Assigns rank and crowding distance to every individual in place and returns
/// the fronts as index lists.
pub fn rank_population(population: &mut [Individual]) -> Vec<Vec<usize>> {
    let points: Vec<[f64; 3]> = population.iter().map(|i| i.objectives.as_array()).collect();
    let fronts = non_dominated_sort(&points);
    for (rank, front) in fronts.iter().enumerate() {
        let crowding = crowding_distance(&points, front);
        for (&idx, c) in front.iter().zip(crowding) {
            population[idx].rank = rank;
            population[idx].crowding = c;
        }
    }
    fronts
}

/// Non-dominated individuals, one per split index, ordered by `l1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSet {
    pub members: Vec<Individual>,
}

impl ParetoSet {
    /// Keeps the first individual for each `l1` and sorts by `l1`.
    pub fn from_members(members: impl IntoIterator<Item = Individual>) -> Self {
        let mut seen = HashSet::new();
        let mut members: Vec<Individual> =
            members.into_iter().filter(|m| seen.insert(m.l1())).collect();
        members.sort_by_key(|m| m.l1());
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn split_indices(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.l1()).collect()
    }

    pub fn feasible_split_indices(&self) -> Vec<usize> {
        self.members.iter().filter(|m| m.feasible).map(|m| m.l1()).collect()
    }
}

/// A single NSGA-II run over one problem instance.
pub struct Nsga2<'a> {
    instance: &'a ProblemInstance,
    config: GaConfig,
    rng: ChaCha8Rng,
    population: Vec<Individual>,
    generation: usize,
}

impl<'a> Nsga2<'a> {
    /// Validates the inputs and draws the initial population.
    pub fn new(instance: &'a ProblemInstance, config: GaConfig) -> Result<Self> {
        instance.validate()?;
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut population = latin_hypercube(&mut rng, config.population_size, instance.total_layers() - 1)
            .into_iter()
            .map(|l1| Individual::evaluate(instance, l1))
            .collect::<Result<Vec<_>>>()?;
        rank_population(&mut population);
        Ok(Self { instance, config, rng, population, generation: 0 })
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Runs one generation: mating, variation and survival.
    pub fn step(&mut self) -> Result<()> {
        let n = self.config.population_size;
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = self.tournament();
            let b = self.tournament();
            let (c1, c2) = self.crossover(a, b);
            for child in [c1, c2] {
                let child = self.mutate(child);
                offspring.push(Individual::evaluate(self.instance, child)?);
            }
        }

        let mut merged = std::mem::take(&mut self.population);
        merged.extend(offspring);
        self.population = survive(merged, n);
        rank_population(&mut self.population);
        self.generation += 1;
        Ok(())
    }

    /// Runs all configured generations and returns the final non-dominated set.
    pub fn run(mut self) -> Result<ParetoSet> {
        for _ in 0..self.config.generations {
            self.step()?;
        }
        Ok(self.pareto_set())
    }

    pub fn pareto_set(&self) -> ParetoSet {
        ParetoSet::from_members(self.population.iter().filter(|i| i.rank == 0).cloned())
    }

    fn tournament(&mut self) -> usize {
        let n = self.population.len();
        let i = self.rng.gen_range(0..n);
        let j = self.rng.gen_range(0..n);
        let (a, b) = (&self.population[i], &self.population[j]);
        let winner = match crowded_order(a, b) {
            Ordering::Less => i,
            Ordering::Greater => j,
            Ordering::Equal => {
                if self.rng.gen_bool(0.5) {
                    i
                } else {
                    j
                }
            }
        };
        self.population[winner].l1()
    }

    fn crossover(&mut self, a: usize, b: usize) -> (usize, usize) {
        if self.rng.gen_bool(self.config.crossover_rate) {
            ((a + b) / 2, (a + b).div_ceil(2))
        } else {
            (a, b)
        }
    }

    fn mutate(&mut self, l1: usize) -> usize {
        if !self.rng.gen_bool(self.config.mutation_rate) {
            return l1;
        }
        const STEPS: [i64; 4] = [-2, -1, 1, 2];
        let step = STEPS[self.rng.gen_range(0..STEPS.len())];
        let upper = (self.instance.total_layers() - 1) as i64;
        (l1 as i64 + step).clamp(1, upper) as usize
    }
}

/// `count` split indices in `[1, upper]` drawn one per integer stratum, in
/// shuffled order. Stratum `i` is `[i*upper/count, (i+1)*upper/count)`; when
/// `count >= upper` the strata are single indices or empty, so every index
/// appears at least once.
fn latin_hypercube(rng: &mut ChaCha8Rng, count: usize, upper: usize) -> Vec<usize> {
    let mut draws: Vec<usize> = (0..count)
        .map(|i| {
            let lo = i * upper / count;
            let hi = (i + 1) * upper / count;
            let x = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            x + 1
        })
        .collect();
    draws.shuffle(rng);
    draws
}

/// Lower rank first, then larger crowding distance.
fn crowded_order(a: &Individual, b: &Individual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
}

/// Elitist truncation of `merged` to `size` individuals. Distinct split indices
/// are ranked and truncated by rank then crowding; repeats only fill the slots
/// left over.
fn survive(merged: Vec<Individual>, size: usize) -> Vec<Individual> {
    let mut seen = HashSet::new();
    let (mut distinct, mut repeats): (Vec<_>, Vec<_>) =
        merged.into_iter().partition(|i| seen.insert(i.l1()));

    rank_population(&mut distinct);
    let mut order: Vec<usize> = (0..distinct.len()).collect();
    order.sort_by(|&x, &y| crowded_order(&distinct[x], &distinct[y]).then(x.cmp(&y)));

    let mut survivors: Vec<Individual> = order
        .iter()
        .take(size)
        .map(|&i| distinct[i].clone())
        .collect();

    if survivors.len() < size {
        let rank_of = |l1: usize| {
            distinct
                .iter()
                .find(|d| d.l1() == l1)
                .map_or(usize::MAX, |d| d.rank)
        };
        for r in repeats.iter_mut() {
            r.rank = rank_of(r.l1());
        }
        // stable: equal ranks keep arrival order
        repeats.sort_by_key(|r| r.rank);
        let missing = size - survivors.len();
        survivors.extend(repeats.into_iter().take(missing));
    }
    survivors
}

/// Runs NSGA-II on `instance` and returns the final non-dominated set.
pub fn evolve(instance: &ProblemInstance, config: &GaConfig) -> Result<ParetoSet> {
    Nsga2::new(instance, config.clone())?.run()
}
