//! Generational GP: ramped half-and-half initialisation, tournament
//! selection, subtree crossover (standard or direction-matched) and
//! reproduction. No mutation, no elitism.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::program::{
    random_tree, EvalOptions, FunctionSet, Individual, InitMethod, Representation, RunResult,
    TreeRole,
};
use crate::rng::{stream, StreamRng};
use crate::schema::{default_schema, schema_count, subtree_direction, Composition, Direction};
use crate::world::TrailMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrossoverKind {
    Standard,
    Phenotypic,
}

impl CrossoverKind {
    pub fn name(self) -> &'static str {
        match self {
            CrossoverKind::Standard => "standard",
            CrossoverKind::Phenotypic => "phenotypic",
        }
    }
}

impl std::str::FromStr for CrossoverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(CrossoverKind::Standard),
            "phenotypic" => Ok(CrossoverKind::Phenotypic),
            other => Err(format!("unknown crossover {other:?} (standard|phenotypic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("crossover_rate + reproduction_rate must equal 1 (got {0})")]
    RatesDoNotSum(f64),
    #[error("{name} must lie in [0, 1] (got {value})")]
    RateOutOfRange { name: &'static str, value: f64 },
    #[error("{0} must be at least 1")]
    NotPositive(&'static str),
    #[error("init depth ramp {min}..{max} is invalid for max depth {max_depth}")]
    DepthRamp {
        min: usize,
        max: usize,
        max_depth: usize,
    },
}

/// Run parameters. Defaults follow the classic Koza settings used for the
/// Santa Fe benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub population_size: usize,
    /// Generations evaluated, counting the initial one.
    pub generations: usize,
    pub crossover_rate: f64,
    pub reproduction_rate: f64,
    pub tournament_size: usize,
    pub max_depth: usize,
    pub init_depth_min: usize,
    pub init_depth_max: usize,
    pub energy: u32,
    pub success_fitness: u32,
    pub representation: Representation,
    pub crossover_kind: CrossoverKind,
    pub seed: u64,
    /// Stream selector under `seed`; replicates differ here.
    pub stream: u64,
    /// Probability of choosing an internal node as crossover point.
    pub internal_node_bias: f64,
    pub phenotypic_attempts: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            generations: 50,
            crossover_rate: 0.9,
            reproduction_rate: 0.1,
            tournament_size: 7,
            max_depth: 17,
            init_depth_min: 2,
            init_depth_max: 6,
            energy: 600,
            success_fitness: 89,
            representation: Representation::Standard,
            crossover_kind: CrossoverKind::Standard,
            seed: 0,
            stream: 0,
            internal_node_bias: 0.9,
            phenotypic_attempts: 50,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("crossover_rate", self.crossover_rate),
            ("reproduction_rate", self.reproduction_rate),
            ("internal_node_bias", self.internal_node_bias),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::RateOutOfRange { name, value });
            }
        }
        let sum = self.crossover_rate + self.reproduction_rate;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::RatesDoNotSum(sum));
        }
        for (name, v) in [
            ("population_size", self.population_size),
            ("generations", self.generations),
            ("tournament_size", self.tournament_size),
            ("phenotypic_attempts", self.phenotypic_attempts),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.energy == 0 {
            return Err(ConfigError::NotPositive("energy"));
        }
        if self.init_depth_min < 1
            || self.init_depth_min > self.init_depth_max
            || self.init_depth_max > self.max_depth
        {
            return Err(ConfigError::DepthRamp {
                min: self.init_depth_min,
                max: self.init_depth_max,
                max_depth: self.max_depth,
            });
        }
        Ok(())
    }
}

/// A measured individual with its cached default-schema data.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedIndividual {
    pub individual: Individual,
    pub fitness: u32,
    pub default_body: String,
    pub composition: Composition,
    pub direction: Direction,
    pub cells_visited: u32,
    pub schema_count: usize,
}

impl EvaluatedIndividual {
    pub fn measure(individual: Individual, trail: &TrailMap, energy: u32) -> Self {
        let run = RunResult::with_options(&individual, trail, EvalOptions::new(energy));
        let schema = default_schema(&individual);
        Self {
            fitness: run.fitness,
            default_body: schema.body_string(),
            composition: schema.composition,
            direction: schema.direction,
            cells_visited: run.cells_visited(),
            schema_count: schema_count(&run),
            individual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessSummary {
    pub min: u32,
    pub max: u32,
    pub mean: f64,
}

impl FitnessSummary {
    pub fn of(fitness: &[u32]) -> Self {
        let sum: u64 = fitness.iter().map(|&f| u64::from(f)).sum();
        Self {
            min: fitness.iter().copied().min().unwrap_or(0),
            max: fitness.iter().copied().max().unwrap_or(0),
            mean: sum as f64 / fitness.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: EvaluatedIndividual,
    pub summary: FitnessSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub records: Vec<GenerationRecord>,
    pub solved: bool,
    pub solved_generation: Option<usize>,
    pub solution: Option<Individual>,
    pub seed: u64,
    pub stream: u64,
}

/// Ramped half-and-half: depths cycle over the ramp in pairs, one Grow and
/// one Full tree per pair.
pub fn init_population<R: Rng + ?Sized>(config: &GpConfig, rng: &mut R) -> Vec<Individual> {
    let ramp = config.init_depth_max - config.init_depth_min + 1;
    (0..config.population_size)
        .map(|i| {
            let depth = config.init_depth_min + (i / 2) % ramp;
            let method = if i % 2 == 0 {
                InitMethod::Grow
            } else {
                InitMethod::Full
            };
            random_individual(config.representation, method, depth, rng)
        })
        .collect()
}

pub fn random_individual<R: Rng + ?Sized>(
    representation: Representation,
    method: InitMethod,
    depth: usize,
    rng: &mut R,
) -> Individual {
    match representation {
        Representation::Standard => {
            Individual::standard(random_tree(method, depth, FunctionSet::Standard, rng))
                .expect("generated from the standard set")
        }
        Representation::Extended => {
            let main = random_tree(method, depth, FunctionSet::ExtendedMain, rng);
            let adf = random_tree(method, depth, FunctionSet::ExtendedAdf, rng);
            Individual::extended(main, adf).expect("generated from the extended sets")
        }
    }
}

/// Index of the tournament winner. Entrants are drawn with replacement; ties
/// on fitness are broken uniformly among the tied entrants.
pub fn tournament_select<R: Rng + ?Sized>(fitness: &[u32], size: usize, rng: &mut R) -> usize {
    assert!(!fitness.is_empty(), "tournament over an empty population");
    let mut best = rng.random_range(0..fitness.len());
    let mut ties = 1u32;
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
            ties = 1;
        } else if fitness[c] == fitness[best] {
            // Reservoir sampling over the tied entrants.
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = c;
            }
        }
    }
    best
}

/// A crossover point: tree role plus node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossoverPoint {
    pub role: TreeRole,
    pub index: usize,
}

fn choose_role<R: Rng + ?Sized>(a: &Individual, b: &Individual, rng: &mut R) -> TreeRole {
    match (a.adf(), b.adf()) {
        (Some(adf_a), Some(adf_b)) => {
            let main = a.main().size() + b.main().size();
            let adf = adf_a.size() + adf_b.size();
            if rng.random_range(0..main + adf) < main {
                TreeRole::Main
            } else {
                TreeRole::Adf
            }
        }
        _ => TreeRole::Main,
    }
}

/// Picks a node of `role`: an internal node with probability `internal_bias`
/// (when one exists), otherwise a leaf.
pub fn choose_node<R: Rng + ?Sized>(
    individual: &Individual,
    role: TreeRole,
    internal_bias: f64,
    rng: &mut R,
) -> usize {
    let tree = individual.tree(role);
    let internal = tree.nodes().iter().filter(|k| !k.is_leaf()).count();
    let leaves = tree.size() - internal;
    let want_internal = internal > 0 && rng.random_bool(internal_bias);
    let (count, pick_leaf) = if want_internal {
        (internal, false)
    } else {
        (leaves, true)
    };
    let target = rng.random_range(0..count);
    tree.nodes()
        .iter()
        .enumerate()
        .filter(|(_, k)| k.is_leaf() == pick_leaf)
        .nth(target)
        .map(|(i, _)| i)
        .expect("target within count")
}

fn choose_points<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    internal_bias: f64,
    rng: &mut R,
) -> (CrossoverPoint, CrossoverPoint) {
    let role = choose_role(a, b, rng);
    let ia = choose_node(a, role, internal_bias, rng);
    let ib = choose_node(b, role, internal_bias, rng);
    (
        CrossoverPoint { role, index: ia },
        CrossoverPoint { role, index: ib },
    )
}

/// Swaps the subtrees at the given points. A child deeper than `max_depth`
/// is replaced by a copy of the parent it was built from.
pub fn swap_subtrees(
    a: &Individual,
    pa: CrossoverPoint,
    b: &Individual,
    pb: CrossoverPoint,
    max_depth: usize,
) -> (Individual, Individual) {
    assert_eq!(pa.role, pb.role, "crossover points must share a tree role");
    let role = pa.role;
    let ta = a.tree(role);
    let tb = b.tree(role);
    let sub_a = ta.subtree(pa.index);
    let sub_b = tb.subtree(pb.index);
    let new_a = ta.replace_subtree(pa.index, &sub_b);
    let new_b = tb.replace_subtree(pb.index, &sub_a);
    let child_a = if new_a.depth() <= max_depth {
        a.with_tree(role, new_a)
    } else {
        a.clone()
    };
    let child_b = if new_b.depth() <= max_depth {
        b.with_tree(role, new_b)
    } else {
        b.clone()
    };
    (child_a, child_b)
}

pub fn standard_crossover<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    max_depth: usize,
    rng: &mut R,
) -> (Individual, Individual) {
    standard_crossover_biased(a, b, max_depth, 0.9, rng)
}

pub fn standard_crossover_biased<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    max_depth: usize,
    internal_bias: f64,
    rng: &mut R,
) -> (Individual, Individual) {
    let (pa, pb) = choose_points(a, b, internal_bias, rng);
    swap_subtrees(a, pa, b, pb, max_depth)
}

/// What a direction-matched crossover did.
#[derive(Debug, Clone, PartialEq)]
pub struct PhenotypicOutcome {
    pub children: (Individual, Individual),
    pub target: Direction,
    /// Accepted points, or `None` when every attempt failed and the parents
    /// were copied.
    pub accepted: Option<(CrossoverPoint, CrossoverPoint)>,
    pub attempts: usize,
}

/// Direction-matched crossover: draw a target direction uniformly, then
/// retry point selection until both subtrees' default schemas have that
/// direction. Falls back to copying the parents.
pub fn phenotypic_crossover<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    max_depth: usize,
    rng: &mut R,
) -> (Individual, Individual) {
    let target = Direction::from_value(rng.random_range(0..4));
    phenotypic_crossover_toward(a, b, target, max_depth, 0.9, 50, rng).children
}

pub fn phenotypic_crossover_toward<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    target: Direction,
    max_depth: usize,
    internal_bias: f64,
    max_attempts: usize,
    rng: &mut R,
) -> PhenotypicOutcome {
    for attempt in 1..=max_attempts {
        let (pa, pb) = choose_points(a, b, internal_bias, rng);
        if subtree_direction(a, pa.role, pa.index) == target
            && subtree_direction(b, pb.role, pb.index) == target
        {
            return PhenotypicOutcome {
                children: swap_subtrees(a, pa, b, pb, max_depth),
                target,
                accepted: Some((pa, pb)),
                attempts: attempt,
            };
        }
    }
    PhenotypicOutcome {
        children: (a.clone(), b.clone()),
        target,
        accepted: None,
        attempts: max_attempts,
    }
}

fn breed(
    population: &[Individual],
    fitness: &[u32],
    config: &GpConfig,
    rng: &mut StreamRng,
) -> Vec<Individual> {
    let n = population.len();
    let reproductions = (n as f64 * config.reproduction_rate).round() as usize;
    let crossovers = n - reproductions.min(n);
    let mut next = Vec::with_capacity(n);
    while next.len() < crossovers {
        let a = &population[tournament_select(fitness, config.tournament_size, rng)];
        let b = &population[tournament_select(fitness, config.tournament_size, rng)];
        let (ca, cb) = match config.crossover_kind {
            CrossoverKind::Standard => {
                standard_crossover_biased(a, b, config.max_depth, config.internal_node_bias, rng)
            }
            CrossoverKind::Phenotypic => {
                let target = Direction::from_value(rng.random_range(0..4));
                phenotypic_crossover_toward(
                    a,
                    b,
                    target,
                    config.max_depth,
                    config.internal_node_bias,
                    config.phenotypic_attempts,
                    rng,
                )
                .children
            }
        };
        next.push(ca);
        if next.len() < crossovers {
            next.push(cb);
        }
    }
    while next.len() < n {
        let w = tournament_select(fitness, config.tournament_size, rng);
        next.push(population[w].clone());
    }
    next
}

/// Fitness of every individual. Evaluation uses no randomness, so running it
/// in parallel cannot disturb the breeding stream.
pub fn evaluate_population(population: &[Individual], trail: &TrailMap, energy: u32) -> Vec<u32> {
    population
        .par_iter()
        .map(|ind| RunResult::with_options(ind, trail, EvalOptions::fast(energy)).fitness)
        .collect()
}

/// Runs GP from a fresh population until success or the generation limit.
pub fn run_gp(config: &GpConfig, trail: &TrailMap) -> RunLog {
    let mut rng = stream(config.seed, config.stream);
    let population = init_population(config, &mut rng);
    run_gp_from(config, trail, population, &mut rng)
}

/// Runs GP from a given initial population.
pub fn run_gp_from(
    config: &GpConfig,
    trail: &TrailMap,
    mut population: Vec<Individual>,
    rng: &mut StreamRng,
) -> RunLog {
    config.validate().expect("invalid GP configuration");
    let mut log = RunLog {
        records: Vec::with_capacity(config.generations),
        solved: false,
        solved_generation: None,
        solution: None,
        seed: config.seed,
        stream: config.stream,
    };
    for generation in 0..config.generations {
        let fitness = evaluate_population(&population, trail, config.energy);
        let mut best = 0;
        for (i, &f) in fitness.iter().enumerate() {
            if f > fitness[best] {
                best = i;
            }
        }
        let evaluated =
            EvaluatedIndividual::measure(population[best].clone(), trail, config.energy);
        debug_assert_eq!(evaluated.fitness, fitness[best]);
        log.records.push(GenerationRecord {
            generation,
            best: evaluated,
            summary: FitnessSummary::of(&fitness),
        });
        if fitness[best] >= config.success_fitness {
            log.solved = true;
            log.solved_generation = Some(generation);
            log.solution = Some(population[best].clone());
            break;
        }
        if generation + 1 < config.generations {
            population = breed(&population, &fitness, config, rng);
        }
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;
    use crate::world::BundledTrail;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_config_is_valid() {
        GpConfig::default().validate().unwrap();
        let bad = GpConfig {
            crossover_rate: 0.8,
            ..GpConfig::default()
        };
        assert!(matches!(bad.validate(), Err(ConfigError::RatesDoNotSum(_))));
        let bad = GpConfig {
            tournament_size: 0,
            ..GpConfig::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::NotPositive("tournament_size")));
    }

    #[test]
    fn ramped_population_splits_evenly() {
        let config = GpConfig {
            population_size: 10,
            ..GpConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pop = init_population(&config, &mut rng);
        assert_eq!(pop.len(), 10);
        for (i, ind) in pop.iter().enumerate() {
            let depth = 2 + (i / 2) % 5;
            if i % 2 == 1 {
                // Full trees reach the target depth exactly.
                assert_eq!(ind.main().depth(), depth);
            } else {
                assert!(ind.main().depth() <= depth);
            }
        }
        let mut again = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(pop, init_population(&config, &mut again));
    }

    #[test]
    fn extended_population_has_both_trees() {
        let config = GpConfig {
            population_size: 20,
            representation: Representation::Extended,
            ..GpConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for ind in init_population(&config, &mut rng) {
            assert!(ind.main().uses_only(FunctionSet::ExtendedMain));
            assert!(ind.adf().unwrap().uses_only(FunctionSet::ExtendedAdf));
        }
    }

    #[test]
    fn tournament_picks_unique_best_when_present() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fitness = [1, 9, 3];
        for _ in 0..200 {
            let w = tournament_select(&fitness, 50, &mut rng);
            assert_eq!(w, 1);
        }
    }

    #[test]
    fn tournament_is_uniform_on_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fitness = [4; 5];
        let mut counts = [0usize; 5];
        let n = 50_000;
        for _ in 0..n {
            counts[tournament_select(&fitness, 7, &mut rng)] += 1;
        }
        let p: f64 = 0.2;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn root_swap_exchanges_parents() {
        let a = parse_program("(prog2 move left)").unwrap();
        let b = parse_program("(if move right)").unwrap();
        let root = CrossoverPoint {
            role: TreeRole::Main,
            index: 0,
        };
        let (ca, cb) = swap_subtrees(&a, root, &b, root, 17);
        assert_eq!((ca, cb), (b.clone(), a.clone()));
        let p = CrossoverPoint {
            role: TreeRole::Main,
            index: 1,
        };
        let (ca, cb) = swap_subtrees(&a, p, &a, p, 17);
        assert_eq!((ca, cb), (a.clone(), a));
    }

    #[test]
    fn overdeep_child_reverts_to_parent() {
        let a = parse_program("(prog2 move (prog2 move move))").unwrap();
        let b = parse_program("(prog2 (prog2 (prog2 move move) move) left)").unwrap();
        let pa = CrossoverPoint {
            role: TreeRole::Main,
            index: 3,
        };
        let pb = CrossoverPoint {
            role: TreeRole::Main,
            index: 1,
        };
        let (ca, cb) = swap_subtrees(&a, pa, &b, pb, 3);
        assert_eq!(ca, a);
        assert_eq!(cb.to_string(), "(prog2 move left)");
    }

    #[test]
    fn phenotypic_swap_requires_target_direction() {
        // Only moves here, so every subtree has direction Same.
        let a = parse_program("(prog2 move move)").unwrap();
        let b = parse_program("(prog3 move move move)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = phenotypic_crossover_toward(&a, &b, Direction::Backward, 17, 0.9, 50, &mut rng);
        assert!(out.accepted.is_none());
        assert_eq!(out.attempts, 50);
        assert_eq!(out.children, (a.clone(), b.clone()));

        let out = phenotypic_crossover_toward(&a, &b, Direction::Same, 17, 0.9, 50, &mut rng);
        assert!(out.accepted.is_some());
        assert_eq!(out.attempts, 1);
    }

    #[test]
    fn solved_at_generation_zero_for_seeded_population() {
        let trail = BundledTrail::SantaFe.load().unwrap();
        let koza = parse_program(
            "(if move (prog3 left (prog2 (if move right) (prog2 right (prog2 left right))) (prog2 (if move left) move)))",
        )
        .unwrap();
        let config = GpConfig {
            population_size: 8,
            ..GpConfig::default()
        };
        let mut rng = stream(1, 0);
        let log = run_gp_from(&config, &trail, vec![koza.clone(); 8], &mut rng);
        assert!(log.solved);
        assert_eq!(log.solved_generation, Some(0));
        assert_eq!(log.solution, Some(koza));

        let config = GpConfig {
            population_size: 20,
            success_fitness: 0,
            ..GpConfig::default()
        };
        let log = run_gp(&config, &trail);
        assert_eq!(log.solved_generation, Some(0));
        assert_eq!(log.records.len(), 1);
    }

    #[test]
    fn run_gp_is_reproducible() {
        let trail = BundledTrail::SantaFe.load().unwrap();
        let config = GpConfig {
            population_size: 60,
            generations: 6,
            seed: 42,
            crossover_kind: CrossoverKind::Phenotypic,
            ..GpConfig::default()
        };
        let a = run_gp(&config, &trail);
        let b = run_gp(&config, &trail);
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 6);
    }
}
