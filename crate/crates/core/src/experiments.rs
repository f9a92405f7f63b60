//! Studies: random programs, random walks, GP replicate campaigns, and their
//! analyses (improvement transitions, computational effort).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::evolve::{run_gp, CrossoverKind, GpConfig, RunLog};
use crate::evolve::random_individual;
use crate::program::{EvalOptions, Individual, InitMethod, Representation, RunResult};
use crate::rng::{family_stream, stream};
use crate::schema::{
    default_schema, pyramid_layer, schema_count, Composition, Direction, PyramidLayer,
    FIT_THRESHOLD,
};
use crate::world::{Terminal, TrailMap, WorldState};

/// Stream families, so the studies never share random streams.
const FAMILY_PROGRAMS: u32 = 0;
const FAMILY_WALKS: u32 = 1;
const FAMILY_REPLICATES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn programs(self) -> usize {
        match self {
            Scale::Desk => 10_000,
            Scale::Paper => 90_000,
        }
    }

    pub fn walks(self) -> usize {
        match self {
            Scale::Desk => 2_000,
            Scale::Paper => 10_000,
        }
    }

    pub fn replicates(self) -> usize {
        match self {
            Scale::Desk => 100,
            Scale::Paper => 6_000,
        }
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(format!("unknown scale {other:?} (desk|paper)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Study {
    RandomPopulation,
    RandomWalk,
    Replicates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub which: Study,
    /// Programs, walks or replicates depending on `which`.
    pub count: usize,
    pub base: GpConfig,
    pub trail: String,
    pub seed: u64,
    pub out: std::path::PathBuf,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.count == 0 {
            return Err("study count must be at least 1".into());
        }
        self.base.validate().map_err(|e| e.to_string())
    }
}

/// The four GP configurations compared in the campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    StandardGp,
    Phenotypic,
    Extended,
    Both,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::StandardGp,
        Variant::Phenotypic,
        Variant::Extended,
        Variant::Both,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::StandardGp => "standard",
            Variant::Phenotypic => "phenotypic",
            Variant::Extended => "extended",
            Variant::Both => "both",
        }
    }

    pub fn of(representation: Representation, crossover: CrossoverKind) -> Variant {
        match (representation, crossover) {
            (Representation::Standard, CrossoverKind::Standard) => Variant::StandardGp,
            (Representation::Standard, CrossoverKind::Phenotypic) => Variant::Phenotypic,
            (Representation::Extended, CrossoverKind::Standard) => Variant::Extended,
            (Representation::Extended, CrossoverKind::Phenotypic) => Variant::Both,
        }
    }

    pub fn representation(self) -> Representation {
        match self {
            Variant::StandardGp | Variant::Phenotypic => Representation::Standard,
            Variant::Extended | Variant::Both => Representation::Extended,
        }
    }

    pub fn crossover(self) -> CrossoverKind {
        match self {
            Variant::StandardGp | Variant::Extended => CrossoverKind::Standard,
            Variant::Phenotypic | Variant::Both => CrossoverKind::Phenotypic,
        }
    }

    pub fn apply(self, base: &GpConfig) -> GpConfig {
        GpConfig {
            representation: self.representation(),
            crossover_kind: self.crossover(),
            ..base.clone()
        }
    }

    fn index(self) -> u32 {
        self as u32
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?} (standard|phenotypic|extended|both)"))
    }
}

// ---------------------------------------------------------------- programs

/// Measurements of one program on one trail.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramRecord {
    pub index: usize,
    pub program: Individual,
    pub fitness: u32,
    pub cells_visited: u32,
    pub iterations: u32,
    pub default_body: String,
    pub composition: Composition,
    pub direction: Direction,
    pub schema_count: usize,
}

pub fn measure_program(index: usize, program: Individual, trail: &TrailMap, energy: u32) -> ProgramRecord {
    let run = RunResult::with_options(&program, trail, EvalOptions::new(energy));
    let schema = default_schema(&program);
    ProgramRecord {
        index,
        fitness: run.fitness,
        cells_visited: run.cells_visited(),
        iterations: run.iterations,
        default_body: schema.body_string(),
        composition: schema.composition,
        direction: schema.direction,
        schema_count: schema_count(&run),
        program,
    }
}

/// Program `index` of a ramped half-and-half corpus. Each program has its
/// own stream, so any subset can be regenerated independently.
pub fn random_program(seed: u64, index: usize, representation: Representation) -> Individual {
    let mut rng = stream(seed, family_stream(FAMILY_PROGRAMS, index as u32));
    let depth = 2 + (index / 2) % 5;
    let method = if index % 2 == 0 {
        InitMethod::Grow
    } else {
        InitMethod::Full
    };
    random_individual(representation, method, depth, &mut rng)
}

pub fn random_population_records(
    trail: &TrailMap,
    programs: usize,
    energy: u32,
    seed: u64,
) -> Vec<ProgramRecord> {
    (0..programs)
        .into_par_iter()
        .map(|i| {
            let program = random_program(seed, i, Representation::Standard);
            measure_program(i, program, trail, energy)
        })
        .collect()
}

/// Mean of some measure within one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMean {
    pub key: u32,
    pub count: usize,
    pub mean: f64,
}

fn group_means(pairs: impl Iterator<Item = (u32, u32)>) -> Vec<GroupMean> {
    let mut acc: BTreeMap<u32, (usize, u64)> = BTreeMap::new();
    for (k, v) in pairs {
        let e = acc.entry(k).or_default();
        e.0 += 1;
        e.1 += u64::from(v);
    }
    acc.into_iter()
        .map(|(key, (count, sum))| GroupMean {
            key,
            count,
            mean: sum as f64 / count as f64,
        })
        .collect()
}

/// Counts per default-schema direction, overall and among fit programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionCounts {
    pub size: u32,
    pub all: [usize; 4],
    pub fit: [usize; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationAggregates {
    pub programs: usize,
    pub fit_threshold: u32,
    pub fit_count: usize,
    pub mean_fitness: f64,
    pub mean_cells: f64,
    pub cells_bin_width: u32,
    /// Keyed by the lower bound of the cells-visited bin.
    pub fitness_by_cells: Vec<GroupMean>,
    pub cells_by_schema_size: Vec<GroupMean>,
    pub fitness_by_schema_size: Vec<GroupMean>,
    pub fitness_by_schema_count: Vec<GroupMean>,
    pub directions_by_size: Vec<DirectionCounts>,
    pub pyramids: Vec<PyramidLayer>,
}

impl PopulationAggregates {
    pub fn fit_fraction(&self) -> f64 {
        self.fit_count as f64 / self.programs.max(1) as f64
    }
}

pub const CELLS_BIN_WIDTH: u32 = 10;
pub const PYRAMID_SIZES: std::ops::RangeInclusive<u32> = 3..=8;

pub fn aggregate_population(records: &[ProgramRecord], fit_threshold: u32) -> PopulationAggregates {
    let n = records.len().max(1) as f64;
    let w = CELLS_BIN_WIDTH;
    let mut directions: BTreeMap<u32, DirectionCounts> = BTreeMap::new();
    for r in records {
        let size = r.composition.size();
        let d = directions.entry(size).or_insert(DirectionCounts {
            size,
            all: [0; 4],
            fit: [0; 4],
        });
        let k = r.direction.value() as usize;
        d.all[k] += 1;
        if r.fitness >= fit_threshold {
            d.fit[k] += 1;
        }
    }
    let pairs: Vec<(Composition, u32)> = records.iter().map(|r| (r.composition, r.fitness)).collect();
    PopulationAggregates {
        programs: records.len(),
        fit_threshold,
        fit_count: records.iter().filter(|r| r.fitness >= fit_threshold).count(),
        mean_fitness: records.iter().map(|r| f64::from(r.fitness)).sum::<f64>() / n,
        mean_cells: records.iter().map(|r| f64::from(r.cells_visited)).sum::<f64>() / n,
        cells_bin_width: w,
        fitness_by_cells: group_means(records.iter().map(|r| (r.cells_visited / w * w, r.fitness))),
        cells_by_schema_size: group_means(
            records.iter().map(|r| (r.composition.size(), r.cells_visited)),
        ),
        fitness_by_schema_size: group_means(
            records.iter().map(|r| (r.composition.size(), r.fitness)),
        ),
        fitness_by_schema_count: group_means(
            records.iter().map(|r| (r.schema_count as u32, r.fitness)),
        ),
        directions_by_size: directions.into_values().collect(),
        pyramids: PYRAMID_SIZES
            .map(|size| pyramid_layer(&pairs, size, fit_threshold))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomPopulationStudy {
    pub records: Vec<ProgramRecord>,
    pub aggregates: PopulationAggregates,
}

pub fn run_random_population_study(
    trail: &TrailMap,
    programs: usize,
    energy: u32,
    seed: u64,
) -> RandomPopulationStudy {
    let records = random_population_records(trail, programs, energy, seed);
    let aggregates = aggregate_population(&records, FIT_THRESHOLD);
    RandomPopulationStudy {
        records,
        aggregates,
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut out = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let r = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                out[k] = r;
            }
            i = j + 1;
        }
        out
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

// ------------------------------------------------------------------- walks

#[derive(Debug, Clone, PartialEq)]
pub struct WalkStudy {
    pub steps: u32,
    pub cells: Vec<u32>,
    pub fitness: Vec<u32>,
}

impl WalkStudy {
    pub fn mean_cells(&self) -> f64 {
        mean(&self.cells)
    }

    pub fn mean_fitness(&self) -> f64 {
        mean(&self.fitness)
    }
}

fn mean(v: &[u32]) -> f64 {
    v.iter().map(|&x| f64::from(x)).sum::<f64>() / v.len().max(1) as f64
}

/// One random walk: `steps` uniformly drawn terminals from the start state.
/// Cells include the start cell.
pub fn random_walk(trail: &TrailMap, steps: u32, seed: u64, index: usize) -> (u32, u32) {
    let mut rng = stream(seed, family_stream(FAMILY_WALKS, index as u32));
    let mut state = WorldState::new(trail, steps);
    for _ in 0..steps {
        let t = *Terminal::ALL.choose(&mut rng).expect("nonempty");
        if state.apply_terminal(t).is_err() {
            break;
        }
    }
    (state.cells_visited(), state.food_eaten())
}

pub fn run_random_walk_study(trail: &TrailMap, walks: usize, steps: u32, seed: u64) -> WalkStudy {
    let (cells, fitness) = (0..walks)
        .into_par_iter()
        .map(|i| random_walk(trail, steps, seed, i))
        .unzip();
    WalkStudy {
        steps,
        cells,
        fitness,
    }
}

// ------------------------------------------------------------------ effort

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EffortError {
    #[error("no replicate succeeded, effort is undefined")]
    NoSuccesses,
    #[error("z must lie strictly between 0 and 1 (got {0})")]
    InvalidZ(f64),
    #[error("need at least one replicate and one generation")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffortRow {
    pub generation: usize,
    pub successes: usize,
    /// Cumulative success probability by this generation.
    pub probability: f64,
    /// Runs needed; `None` while no run has succeeded.
    pub runs_needed: Option<u64>,
    pub individuals: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffortTable {
    pub population: usize,
    pub z: f64,
    pub replicates: usize,
    pub rows: Vec<EffortRow>,
    pub effort: u64,
    pub effort_generation: usize,
}

/// Independent runs needed to see a success with confidence `z`.
pub fn runs_needed(p: f64, z: f64) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let r = (1.0 - z).ln() / (1.0 - p).ln();
    // Guard against ratios that are integers up to rounding.
    (r - 1e-9).ceil().max(1.0) as u64
}

/// Koza's effort from each replicate's solving generation (`None` if
/// unsolved) over `generations` generations of population `population`.
pub fn computational_effort(
    solved_generation: &[Option<usize>],
    generations: usize,
    population: usize,
    z: f64,
) -> Result<EffortTable, EffortError> {
    if !(z > 0.0 && z < 1.0) {
        return Err(EffortError::InvalidZ(z));
    }
    if solved_generation.is_empty() || generations == 0 {
        return Err(EffortError::Empty);
    }
    let n = solved_generation.len();
    let mut rows = Vec::with_capacity(generations);
    let mut best: Option<(u64, usize)> = None;
    for g in 0..generations {
        let successes = solved_generation
            .iter()
            .filter(|s| matches!(s, Some(x) if *x <= g))
            .count();
        let p = successes as f64 / n as f64;
        let (runs, individuals) = if successes > 0 {
            let r = runs_needed(p, z);
            let i = population as u64 * (g as u64 + 1) * r;
            if best.is_none_or(|(e, _)| i < e) {
                best = Some((i, g));
            }
            (Some(r), Some(i))
        } else {
            (None, None)
        };
        rows.push(EffortRow {
            generation: g,
            successes,
            probability: p,
            runs_needed: runs,
            individuals,
        });
    }
    let (effort, effort_generation) = best.ok_or(EffortError::NoSuccesses)?;
    Ok(EffortTable {
        population,
        z,
        replicates: n,
        rows,
        effort,
        effort_generation,
    })
}

// ------------------------------------------------------------- transitions

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionMatrix {
    pub counts: BTreeMap<(Composition, Composition), usize>,
}

/// Outgoing and incoming totals of one composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Marginal {
    pub composition: Composition,
    pub outgoing: usize,
    pub incoming: usize,
}

impl TransitionMatrix {
    pub fn add(&mut self, from: Composition, to: Composition) {
        *self.counts.entry((from, to)).or_default() += 1;
    }

    pub fn merge(&mut self, other: &TransitionMatrix) {
        for (&k, &v) in &other.counts {
            *self.counts.entry(k).or_default() += v;
        }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn marginals(&self) -> Vec<Marginal> {
        let mut m: BTreeMap<Composition, (usize, usize)> = BTreeMap::new();
        for (&(from, to), &c) in &self.counts {
            m.entry(from).or_default().0 += c;
            m.entry(to).or_default().1 += c;
        }
        m.into_iter()
            .map(|(composition, (outgoing, incoming))| Marginal {
                composition,
                outgoing,
                incoming,
            })
            .collect()
    }

    /// Fraction of events whose destination has direction `d`.
    pub fn destination_share(&self, d: Direction) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let hit: usize = self
            .counts
            .iter()
            .filter(|((_, to), _)| to.direction() == d)
            .map(|(_, c)| c)
            .sum();
        hit as f64 / total as f64
    }
}

/// Default-schema changes of the best program at each strict improvement
/// of best-so-far fitness. Unchanged compositions are skipped.
pub fn improvement_transitions(logs: &[RunLog]) -> TransitionMatrix {
    let mut m = TransitionMatrix::default();
    for log in logs {
        let mut records = log.records.iter();
        let Some(first) = records.next() else {
            continue;
        };
        let mut holder = &first.best;
        for r in records {
            if r.best.fitness > holder.fitness {
                if r.best.composition != holder.composition {
                    m.add(holder.composition, r.best.composition);
                }
                holder = &r.best;
            }
        }
    }
    m
}

// -------------------------------------------------------------- replicates

/// Per-generation means across runs. Runs that stopped early keep their
/// last record for later generations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub generation: usize,
    pub solved_runs: usize,
    pub solved_mean_cells: f64,
    pub unsolved_runs: usize,
    pub unsolved_mean_cells: f64,
    pub unsolved_mean_schema_count: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchivedSolution {
    pub replicate: usize,
    pub generation: usize,
    pub program: Individual,
    pub default_body: String,
    pub composition: Composition,
    pub direction: Direction,
    pub cells_visited: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantResult {
    pub variant: Variant,
    pub config: GpConfig,
    pub logs: Vec<RunLog>,
    pub success_rate: f64,
    pub effort: Result<EffortTable, EffortError>,
    pub transitions: TransitionMatrix,
    pub trajectory: Vec<TrajectoryPoint>,
    pub solutions: Vec<ArchivedSolution>,
    /// Solutions' default-schema compositions by size.
    pub solution_pyramids: Vec<PyramidLayer>,
}

impl VariantResult {
    pub fn solved(&self) -> usize {
        self.logs.iter().filter(|l| l.solved).count()
    }

    /// Mean over solved runs of the solution's cells visited.
    pub fn solved_final_mean_cells(&self) -> Option<f64> {
        if self.solutions.is_empty() {
            return None;
        }
        let s: f64 = self.solutions.iter().map(|s| f64::from(s.cells_visited)).sum();
        Some(s / self.solutions.len() as f64)
    }
}

/// Config of replicate `r` of `variant`.
pub fn replicate_config(base: &GpConfig, variant: Variant, seed: u64, r: usize) -> GpConfig {
    GpConfig {
        seed,
        stream: family_stream(FAMILY_REPLICATES + variant.index(), r as u32),
        ..variant.apply(base)
    }
}

pub fn run_replicates(
    trail: &TrailMap,
    base: &GpConfig,
    variant: Variant,
    replicates: usize,
    seed: u64,
    z: f64,
) -> VariantResult {
    let logs: Vec<RunLog> = (0..replicates)
        .into_par_iter()
        .map(|r| run_gp(&replicate_config(base, variant, seed, r), trail))
        .collect();
    summarize_replicates(variant, variant.apply(base), logs, z)
}

pub fn summarize_replicates(variant: Variant, config: GpConfig, logs: Vec<RunLog>, z: f64) -> VariantResult {
    let solved_generation: Vec<Option<usize>> = logs.iter().map(|l| l.solved_generation).collect();
    let solved = solved_generation.iter().filter(|s| s.is_some()).count();
    let solutions: Vec<ArchivedSolution> = logs
        .iter()
        .enumerate()
        .filter(|(_, l)| l.solved)
        .map(|(replicate, l)| {
            let last = l.records.last().expect("solved runs have records");
            ArchivedSolution {
                replicate,
                generation: last.generation,
                program: last.best.individual.clone(),
                default_body: last.best.default_body.clone(),
                composition: last.best.composition,
                direction: last.best.direction,
                cells_visited: last.best.cells_visited,
            }
        })
        .collect();
    let pairs: Vec<(Composition, u32)> = solutions
        .iter()
        .map(|s| (s.composition, config.success_fitness))
        .collect();
    let mut sizes: Vec<u32> = pairs.iter().map(|(c, _)| c.size()).filter(|&n| n > 0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    VariantResult {
        variant,
        success_rate: solved as f64 / logs.len().max(1) as f64,
        effort: computational_effort(&solved_generation, config.generations, config.population_size, z),
        transitions: improvement_transitions(&logs),
        trajectory: trajectory(&logs, config.generations),
        solution_pyramids: sizes
            .into_iter()
            .map(|n| pyramid_layer(&pairs, n, FIT_THRESHOLD))
            .collect(),
        solutions,
        config,
        logs,
    }
}

fn trajectory(logs: &[RunLog], generations: usize) -> Vec<TrajectoryPoint> {
    (0..generations)
        .map(|g| {
            let mut solved = (0usize, 0f64);
            let mut unsolved = (0usize, 0f64, 0f64);
            for log in logs {
                let Some(rec) = log.records.get(g).or(log.records.last()) else {
                    continue;
                };
                if log.solved {
                    solved.0 += 1;
                    solved.1 += f64::from(rec.best.cells_visited);
                } else {
                    unsolved.0 += 1;
                    unsolved.1 += f64::from(rec.best.cells_visited);
                    unsolved.2 += rec.best.schema_count as f64;
                }
            }
            let avg = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
            TrajectoryPoint {
                generation: g,
                solved_runs: solved.0,
                solved_mean_cells: avg(solved.1, solved.0),
                unsolved_runs: unsolved.0,
                unsolved_mean_cells: avg(unsolved.1, unsolved.0),
                unsolved_mean_schema_count: avg(unsolved.2, unsolved.0),
            }
        })
        .collect()
}
