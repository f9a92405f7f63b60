//! Executed-instruction schemas and the landscape analytics built on them.
//!
//! A schema is the sequence of terminals one root iteration executes under a
//! given sequence of sensor outcomes (its key). The default schema is the
//! all-false key: what the ant does when it never sees food. Code that never
//! runs under any observed key (introns) belongs to no schema.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::program::{
    EvalOptions, Individual, Interpreter, NodeKind, RunResult, TreeRole,
};
use crate::world::{BundledTrail, Heading, Terminal, TrailMap};

/// Move/left/right counts of a body, shown as `M-L-R`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    pub moves: u32,
    pub lefts: u32,
    pub rights: u32,
}

impl Composition {
    pub fn new(moves: u32, lefts: u32, rights: u32) -> Self {
        Self {
            moves,
            lefts,
            rights,
        }
    }

    pub fn of(body: &[Terminal]) -> Self {
        let mut c = Composition::default();
        for t in body {
            match t {
                Terminal::Move => c.moves += 1,
                Terminal::Left => c.lefts += 1,
                Terminal::Right => c.rights += 1,
            }
        }
        c
    }

    pub fn size(&self) -> u32 {
        self.moves + self.lefts + self.rights
    }

    pub fn direction(&self) -> Direction {
        direction(*self)
    }

    /// Manhattan distance between count vectors. Two same-size compositions
    /// one substitution apart are at distance 2.
    pub fn l1_distance(&self, other: &Composition) -> u32 {
        self.moves.abs_diff(other.moves)
            + self.lefts.abs_diff(other.lefts)
            + self.rights.abs_diff(other.rights)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.moves, self.lefts, self.rights)
    }
}

impl std::str::FromStr for Composition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('-').collect();
        let [m, l, r] = parts.as_slice() else {
            return Err(format!("expected M-L-R, got {s:?}"));
        };
        let num = |p: &str| p.parse::<u32>().map_err(|e| format!("{s:?}: {e}"));
        Ok(Composition::new(num(m)?, num(l)?, num(r)?))
    }
}

/// Net heading change of a schema body relative to its starting heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Same = 0,
    Left = 1,
    Backward = 2,
    Right = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Same,
        Direction::Left,
        Direction::Backward,
        Direction::Right,
    ];

    pub fn from_value(v: u32) -> Direction {
        Direction::ALL[(v % 4) as usize]
    }

    pub fn value(self) -> u32 {
        self as u32
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Same => "same",
            Direction::Left => "left",
            Direction::Backward => "backward",
            Direction::Right => "right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(lefts - rights) mod 4`.
pub fn direction(c: Composition) -> Direction {
    let v = (i64::from(c.lefts) - i64::from(c.rights)).rem_euclid(4);
    Direction::from_value(v as u32)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    pub key: Vec<bool>,
    pub body: Vec<Terminal>,
    pub composition: Composition,
    pub direction: Direction,
}

impl Schema {
    pub fn new(key: Vec<bool>, body: Vec<Terminal>) -> Self {
        let composition = Composition::of(&body);
        Self {
            key,
            body,
            composition,
            direction: composition.direction(),
        }
    }

    pub fn body_string(&self) -> String {
        crate::world::body_string(&self.body)
    }
}

fn default_walk(
    individual: &Individual,
    role: TreeRole,
    idx: usize,
    key: &mut Vec<bool>,
    body: &mut Vec<Terminal>,
) {
    let tree = individual.tree(role);
    let kind = tree.kind(idx);
    if let Some(t) = kind.terminal() {
        body.push(t);
        return;
    }
    match kind {
        NodeKind::IfFoodAhead | NodeKind::IfFoodAheadC => {
            key.push(false);
            let second = tree.subtree_end(idx + 1);
            default_walk(individual, role, second, key, body);
        }
        NodeKind::IfcAdf => {
            key.push(false);
            default_walk(individual, role, idx + 1, key, body);
        }
        NodeKind::Prog2 | NodeKind::Prog3 => {
            for c in tree.children(idx) {
                default_walk(individual, role, c, key, body);
            }
        }
        NodeKind::AdfCall => default_walk(individual, TreeRole::Adf, 0, key, body),
        NodeKind::Move | NodeKind::Left | NodeKind::Right => unreachable!(),
    }
}

/// Terminals executed by the subtree at `idx` of `role` when every sensor
/// reads false. ADF calls expand to the ADF's own false path.
pub fn default_body_of(individual: &Individual, role: TreeRole, idx: usize) -> Vec<Terminal> {
    let mut key = Vec::new();
    let mut body = Vec::new();
    default_walk(individual, role, idx, &mut key, &mut body);
    body
}

/// Static all-false traversal of the main tree.
pub fn default_schema(individual: &Individual) -> Schema {
    let mut key = Vec::new();
    let mut body = Vec::new();
    default_walk(individual, TreeRole::Main, 0, &mut key, &mut body);
    Schema::new(key, body)
}

/// Direction of the default schema of one subtree.
pub fn subtree_direction(individual: &Individual, role: TreeRole, idx: usize) -> Direction {
    Composition::of(&default_body_of(individual, role, idx)).direction()
}

/// Distinct cells entered by Move while repeating `body` on an empty 32x32
/// torus from `(0, 0)` facing East, until an iteration boundary repeats.
pub fn cells_before_cycle(body: &[Terminal]) -> usize {
    cells_before_cycle_on(body, 32, 32)
}

pub fn cells_before_cycle_on(body: &[Terminal], width: usize, height: usize) -> usize {
    if !body.contains(&Terminal::Move) {
        return 0;
    }
    let grid = TrailMap::empty("cycle", width, height);
    let mut pos = (0, 0);
    let mut heading = Heading::East;
    let mut boundaries = HashSet::new();
    let mut entered = HashSet::new();
    while boundaries.insert((pos, heading)) {
        for t in body {
            match t {
                Terminal::Move => {
                    pos = grid.step(pos, heading);
                    entered.insert(pos);
                }
                Terminal::Left => heading = heading.turn_left(),
                Terminal::Right => heading = heading.turn_right(),
            }
        }
    }
    entered.len()
}

/// `k` right rotations: `x0 .. xn -> xn x0 .. x(n-1)` applied `k` times.
pub fn rotate(body: &[Terminal], k: usize) -> Vec<Terminal> {
    let mut out = body.to_vec();
    if !out.is_empty() {
        let k = k % out.len();
        out.rotate_right(k);
    }
    out
}

/// The four minimal gap-following sequences, as `(l|r)*m` strings.
pub const TRAIL_GAP_SEQUENCES: [&str; 4] = ["llllm", "lrrlm", "rrrrm", "rllrm"];

/// All rotations of the four minimal gap-following sequences (20 bodies).
pub fn trail_gap_closure() -> Vec<Vec<Terminal>> {
    let mut out = Vec::new();
    for s in TRAIL_GAP_SEQUENCES {
        let body = crate::world::parse_body(s).expect("valid body");
        for k in 0..body.len() {
            out.push(rotate(&body, k));
        }
    }
    out
}

pub fn is_trail_gap_schema(body: &[Terminal]) -> bool {
    if body.len() != 5 {
        return false;
    }
    TRAIL_GAP_SEQUENCES.iter().any(|s| {
        let base = crate::world::parse_body(s).expect("valid body");
        (0..base.len()).any(|k| rotate(&base, k) == body)
    })
}

/// One schema per distinct sensor key among the run's complete iterations.
/// Iterations cut short by the end of the run carry partial bodies and are
/// skipped. Schemas are returned in order of first appearance.
pub fn enumerate_schemas(result: &RunResult<'_>) -> Vec<Schema> {
    let mut seen: HashSet<&[bool]> = HashSet::new();
    let mut out = Vec::new();
    for it in result.trace.iter().filter(|it| !it.halted) {
        if seen.insert(it.sensor_key.as_slice()) {
            out.push(Schema::new(it.sensor_key.clone(), it.body.clone()));
        }
    }
    out
}

/// Number of distinct schemas a run exhibits.
pub fn schema_count(result: &RunResult<'_>) -> usize {
    let keys: HashSet<&[bool]> = result
        .trace
        .iter()
        .filter(|it| !it.halted)
        .map(|it| it.sensor_key.as_slice())
        .collect();
    keys.len()
}

/// Heading at an iteration boundary relative to the local trail direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Forward,
    Left,
    Backward,
    Right,
}

impl Orientation {
    pub fn relative(heading: Heading, trail_direction: Heading) -> Orientation {
        match heading.right_turns_from(trail_direction) {
            0 => Orientation::Forward,
            1 => Orientation::Right,
            2 => Orientation::Backward,
            _ => Orientation::Left,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Forward => "forward",
            Orientation::Left => "left",
            Orientation::Backward => "backward",
            Orientation::Right => "right",
        }
    }
}

/// One orientation probe: a small trail and the direction it ends in.
#[derive(Debug, Clone)]
pub struct Probe {
    pub trail: TrailMap,
    pub trail_direction: Heading,
    /// Also require a move onto an empty cell after the last food.
    pub require_empty_cell: bool,
}

#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub straight: Probe,
    pub left_turn: Probe,
    pub right_turn: Probe,
    pub energy: u32,
}

impl Default for ProbeSet {
    fn default() -> Self {
        let load = |t: BundledTrail| t.load().expect("bundled probe trail");
        Self {
            straight: Probe {
                trail: load(BundledTrail::ProbeStraight),
                trail_direction: Heading::East,
                require_empty_cell: true,
            },
            left_turn: Probe {
                trail: load(BundledTrail::ProbeLeft),
                trail_direction: Heading::North,
                require_empty_cell: false,
            },
            right_turn: Probe {
                trail: load(BundledTrail::ProbeRight),
                trail_direction: Heading::South,
                require_empty_cell: false,
            },
            energy: 600,
        }
    }
}

/// Orientation per probe; `None` means undetermined (energy ran out first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrientationProfile {
    pub straight: Option<Orientation>,
    pub left_turn: Option<Orientation>,
    pub right_turn: Option<Orientation>,
}

impl OrientationProfile {
    /// All three probes determined and equal.
    pub fn is_uniform(&self) -> bool {
        self.straight.is_some()
            && self.straight == self.left_turn
            && self.straight == self.right_turn
    }
}

/// Runs one probe and samples the heading at the first iteration boundary
/// after the consumption condition holds.
pub fn probe_orientation(individual: &Individual, probe: &Probe, energy: u32) -> Option<Orientation> {
    let options = EvalOptions {
        energy,
        halt_on_clear: false,
        record_trace: false,
    };
    let mut interp = Interpreter::new(individual, &probe.trail, options);
    let done = |s: &crate::world::WorldState<'_>| {
        s.all_food_eaten() && (!probe.require_empty_cell || s.moves_since_food() >= 1)
    };
    while interp.run_iteration() {
        if interp.halted() {
            return None;
        }
        let state = interp.state();
        if done(state) {
            return Some(Orientation::relative(state.heading(), probe.trail_direction));
        }
    }
    None
}

pub fn orientation_profile(individual: &Individual, probes: &ProbeSet) -> OrientationProfile {
    OrientationProfile {
        straight: probe_orientation(individual, &probes.straight, probes.energy),
        left_turn: probe_orientation(individual, &probes.left_turn, probes.energy),
        right_turn: probe_orientation(individual, &probes.right_turn, probes.energy),
    }
}

/// Aggregate statistics of one composition cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyramidCell {
    pub composition: Composition,
    pub population: u64,
    pub max_fitness: u32,
    pub fit_count: u64,
    pub mean_fitness: f64,
}

/// All compositions of one size, `(n+1)(n+2)/2` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLayer {
    pub size: u32,
    pub cells: Vec<PyramidCell>,
}

/// Compositions of size `n`, ordered by moves descending then lefts descending.
pub fn compositions_of_size(n: u32) -> Vec<Composition> {
    let mut out = Vec::with_capacity(((n + 1) * (n + 2) / 2) as usize);
    for m in (0..=n).rev() {
        for l in (0..=n - m).rev() {
            out.push(Composition::new(m, l, n - m - l));
        }
    }
    out
}

pub const FIT_THRESHOLD: u32 = 25;

/// Aggregates `(composition, fitness)` records of size `n` into a layer.
pub fn pyramid_layer(records: &[(Composition, u32)], n: u32, fit_threshold: u32) -> PyramidLayer {
    assert!(n >= 1, "layer size must be at least 1");
    #[derive(Default)]
    struct Acc {
        population: u64,
        max: u32,
        fit: u64,
        sum: u64,
    }
    let mut acc: HashMap<Composition, Acc> = HashMap::new();
    for &(c, fitness) in records.iter().filter(|(c, _)| c.size() == n) {
        let a = acc.entry(c).or_default();
        a.population += 1;
        a.max = a.max.max(fitness);
        a.sum += u64::from(fitness);
        if fitness >= fit_threshold {
            a.fit += 1;
        }
    }
    let cells = compositions_of_size(n)
        .into_iter()
        .map(|c| match acc.get(&c) {
            Some(a) => PyramidCell {
                composition: c,
                population: a.population,
                max_fitness: a.max,
                fit_count: a.fit,
                mean_fitness: a.sum as f64 / a.population as f64,
            },
            None => PyramidCell {
                composition: c,
                population: 0,
                max_fitness: 0,
                fit_count: 0,
                mean_fitness: 0.0,
            },
        })
        .collect();
    PyramidLayer { size: n, cells }
}
