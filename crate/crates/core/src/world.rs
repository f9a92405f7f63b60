//! Toroidal grid world: trail maps, headings and the ant's mutable state.
//!
//! Coordinates follow the row-major trail text: `x` grows East (column),
//! `y` grows South (row). The ant starts at `(0, 0)` facing East.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;


/// Ant heading. Right turns cycle East, South, West, North.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    East = 0,
    South = 1,
    West = 2,
    North = 3,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::East, Heading::South, Heading::West, Heading::North];

    /// Clockwise quarter turns from East.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Heading {
        Heading::ALL[(i % 4) as usize]
    }

    pub fn turn_right(self) -> Heading {
        Heading::from_index(self.index() + 1)
    }

    pub fn turn_left(self) -> Heading {
        Heading::from_index(self.index() + 3)
    }

    /// Number of right quarter turns taking `from` onto `self`.
    pub fn right_turns_from(self, from: Heading) -> u8 {
        (self.index() + 4 - from.index()) % 4
    }
}

/// A grid cell `(x, y)`.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrailError {
    #[error("trail text is empty")]
    EmptyGrid,
    #[error("ragged grid: line {line} has {found} cells, expected {expected}")]
    RaggedGrid {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("illegal character {ch:?} at line {line}, column {column}")]
    IllegalCharacter { ch: char, line: usize, column: usize },
    #[error("more than one start marker (second at line {line}, column {column})")]
    DuplicateStart { line: usize, column: usize },
    #[error("food cell ({x}, {y}) lies outside a {width}x{height} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("duplicate food cell ({x}, {y})")]
    DuplicateFood { x: usize, y: usize },
    #[error("trail {name} has {found} food cells, expected {expected}")]
    FoodCount {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown bundled trail {0:?}")]
    UnknownTrail(String),
}

/// Immutable toroidal grid with food cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailMap {
    name: String,
    width: usize,
    height: usize,
    food: Vec<Cell>,
    food_grid: Vec<bool>,
}

impl TrailMap {
    /// Builds a trail from explicit food coordinates.
    pub fn from_food(
        name: impl Into<String>,
        width: usize,
        height: usize,
        food: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, TrailError> {
        if width == 0 || height == 0 {
            return Err(TrailError::EmptyGrid);
        }
        let mut food_grid = vec![false; width * height];
        let mut cells = Vec::new();
        for (x, y) in food {
            if x >= width || y >= height {
                return Err(TrailError::OutOfBounds {
                    x,
                    y,
                    width,
                    height,
                });
            }
            let idx = y * width + x;
            if food_grid[idx] {
                return Err(TrailError::DuplicateFood { x, y });
            }
            food_grid[idx] = true;
            cells.push((x, y));
        }
        cells.sort_by_key(|&(x, y)| (y, x));
        Ok(Self {
            name: name.into(),
            width,
            height,
            food: cells,
            food_grid,
        })
    }

    /// A trail with no food at all.
    pub fn empty(name: impl Into<String>, width: usize, height: usize) -> Self {
        Self::from_food(name, width, height, std::iter::empty()).expect("non-zero dimensions")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Food cells in row-major order.
    pub fn food(&self) -> &[Cell] {
        &self.food
    }

    pub fn food_count(&self) -> usize {
        self.food.len()
    }

    #[inline]
    pub fn index(&self, (x, y): Cell) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn has_food(&self, cell: Cell) -> bool {
        self.food_grid[self.index(cell)]
    }

    /// The neighbouring cell one step along `heading`, wrapping at the edges.
    #[inline]
    pub fn step(&self, (x, y): Cell, heading: Heading) -> Cell {
        match heading {
            Heading::East => ((x + 1) % self.width, y),
            Heading::South => (x, (y + 1) % self.height),
            Heading::West => ((x + self.width - 1) % self.width, y),
            Heading::North => (x, (y + self.height - 1) % self.height),
        }
    }

    /// Fails unless the trail holds exactly `expected` food cells.
    pub fn check_food_count(&self, expected: usize) -> Result<(), TrailError> {
        if self.food.len() == expected {
            Ok(())
        } else {
            Err(TrailError::FoodCount {
                name: self.name.clone(),
                expected,
                found: self.food.len(),
            })
        }
    }

    /// Renders the trail back to its text form (no start marker).
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.has_food((x, y)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

/// Parses trail text: one row per line, `#` food, `.` empty, at most one `S`
/// start marker (treated as empty). A trailing newline is optional.
pub fn parse_trail(name: &str, text: &str) -> Result<TrailMap, TrailError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(TrailError::EmptyGrid);
    }
    let mut width = None;
    let mut food = Vec::new();
    let mut seen_start = false;
    let mut height = 0;
    for (line_no, line) in body.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let count = line.chars().count();
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(TrailError::RaggedGrid {
                    line: line_no + 1,
                    expected: w,
                    found: count,
                })
            }
            _ => {}
        }
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '#' => food.push((col, line_no)),
                '.' => {}
                'S' if !seen_start => seen_start = true,
                'S' => {
                    return Err(TrailError::DuplicateStart {
                        line: line_no + 1,
                        column: col + 1,
                    })
                }
                other => {
                    return Err(TrailError::IllegalCharacter {
                        ch: other,
                        line: line_no + 1,
                        column: col + 1,
                    })
                }
            }
        }
        height += 1;
    }
    let width = width.unwrap_or(0);
    if width == 0 {
        return Err(TrailError::EmptyGrid);
    }
    TrailMap::from_food(name, width, height, food)
}

const SANTA_FE_TEXT: &str = include_str!("../data/santa_fe.trail");
const LOS_ALTOS_TEXT: &str = include_str!("../data/los_altos.trail");
const PROBE_STRAIGHT_TEXT: &str = include_str!("../data/probe_straight.trail");
const PROBE_LEFT_TEXT: &str = include_str!("../data/probe_left.trail");
const PROBE_RIGHT_TEXT: &str = include_str!("../data/probe_right.trail");

pub const SANTA_FE_FOOD: usize = 89;
pub const LOS_ALTOS_FOOD: usize = 157;

/// Trails shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BundledTrail {
    SantaFe,
    LosAltos,
    ProbeStraight,
    ProbeLeft,
    ProbeRight,
}

impl BundledTrail {
    pub const ALL: [BundledTrail; 5] = [
        BundledTrail::SantaFe,
        BundledTrail::LosAltos,
        BundledTrail::ProbeStraight,
        BundledTrail::ProbeLeft,
        BundledTrail::ProbeRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BundledTrail::SantaFe => "santa_fe",
            BundledTrail::LosAltos => "los_altos",
            BundledTrail::ProbeStraight => "probe_straight",
            BundledTrail::ProbeLeft => "probe_left",
            BundledTrail::ProbeRight => "probe_right",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            BundledTrail::SantaFe => SANTA_FE_TEXT,
            BundledTrail::LosAltos => LOS_ALTOS_TEXT,
            BundledTrail::ProbeStraight => PROBE_STRAIGHT_TEXT,
            BundledTrail::ProbeLeft => PROBE_LEFT_TEXT,
            BundledTrail::ProbeRight => PROBE_RIGHT_TEXT,
        }
    }

    fn expected_food(self) -> usize {
        match self {
            BundledTrail::SantaFe => SANTA_FE_FOOD,
            BundledTrail::LosAltos => LOS_ALTOS_FOOD,
            BundledTrail::ProbeStraight => 3,
            BundledTrail::ProbeLeft | BundledTrail::ProbeRight => 5,
        }
    }

    /// Parses the bundled text and checks its documented food count.
    pub fn load(self) -> Result<TrailMap, TrailError> {
        let trail = parse_trail(self.name(), self.text())?;
        trail.check_food_count(self.expected_food())?;
        Ok(trail)
    }
}

impl FromStr for BundledTrail {
    type Err = TrailError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let key = key.strip_suffix(".trail").unwrap_or(&key);
        BundledTrail::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| TrailError::UnknownTrail(s.to_string()))
    }
}

impl fmt::Display for BundledTrail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three terminal instructions. Each costs one unit of energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    Move,
    Left,
    Right,
}

impl Terminal {
    pub const ALL: [Terminal; 3] = [Terminal::Move, Terminal::Left, Terminal::Right];

    pub fn symbol(self) -> char {
        match self {
            Terminal::Move => 'm',
            Terminal::Left => 'l',
            Terminal::Right => 'r',
        }
    }

    pub fn from_symbol(c: char) -> Option<Terminal> {
        match c {
            'm' | 'M' => Some(Terminal::Move),
            'l' | 'L' => Some(Terminal::Left),
            'r' | 'R' => Some(Terminal::Right),
            _ => None,
        }
    }
}

/// Parses a compact body string such as `"lmlmm"`.
pub fn parse_body(s: &str) -> Option<Vec<Terminal>> {
    s.chars().map(Terminal::from_symbol).collect()
}

/// Formats a body as its compact string form.
pub fn body_string(body: &[Terminal]) -> String {
    body.iter().map(|t| t.symbol()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("out of energy")]
pub struct OutOfEnergy;

/// Mutable ant state on one trail. One per evaluation.
#[derive(Debug, Clone)]
pub struct WorldState<'t> {
    trail: &'t TrailMap,
    position: Cell,
    heading: Heading,
    energy_left: u32,
    food_eaten: u32,
    steps_taken: u32,
    eaten: Vec<bool>,
    visited: Vec<bool>,
    visited_count: u32,
    moves_onto_food: u32,
    moves_since_food: u32,
}

impl<'t> WorldState<'t> {
    /// Fresh state at `(0, 0)` facing East with the given budget.
    pub fn new(trail: &'t TrailMap, energy: u32) -> Self {
        let cells = trail.width() * trail.height();
        let mut state = Self {
            trail,
            position: (0, 0),
            heading: Heading::East,
            energy_left: energy,
            food_eaten: 0,
            steps_taken: 0,
            eaten: vec![false; cells],
            visited: vec![false; cells],
            visited_count: 0,
            moves_onto_food: 0,
            moves_since_food: 0,
        };
        state.mark_visited((0, 0));
        state
    }

    pub fn trail(&self) -> &'t TrailMap {
        self.trail
    }

    pub fn position(&self) -> Cell {
        self.position
    }

    pub fn heading(&self) -> Heading {
        self.heading
    }

    pub fn energy_left(&self) -> u32 {
        self.energy_left
    }

    pub fn food_eaten(&self) -> u32 {
        self.food_eaten
    }

    pub fn steps_taken(&self) -> u32 {
        self.steps_taken
    }

    /// Distinct cells occupied so far, including the start cell.
    pub fn cells_visited(&self) -> u32 {
        self.visited_count
    }

    /// True once every food cell is eaten. Always false on a foodless trail.
    pub fn all_food_eaten(&self) -> bool {
        self.food_eaten > 0 && self.food_eaten as usize == self.trail.food_count()
    }

    pub fn is_visited(&self, cell: Cell) -> bool {
        self.visited[self.trail.index(cell)]
    }

    pub fn is_eaten(&self, cell: Cell) -> bool {
        self.eaten[self.trail.index(cell)]
    }

    /// Visited cells in row-major order.
    pub fn visited_cells(&self) -> Vec<Cell> {
        self.collect_cells(&self.visited)
    }

    /// Eaten food cells in row-major order.
    pub fn eaten_cells(&self) -> Vec<Cell> {
        self.collect_cells(&self.eaten)
    }

    fn collect_cells(&self, grid: &[bool]) -> Vec<Cell> {
        let w = self.trail.width();
        grid.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % w, i / w))
            .collect()
    }

    /// Moves that landed on uneaten food. Always equals `food_eaten`.
    pub fn moves_onto_food(&self) -> u32 {
        self.moves_onto_food
    }

    /// Moves made since food was last eaten (or since the start).
    pub fn moves_since_food(&self) -> u32 {
        self.moves_since_food
    }

    fn mark_visited(&mut self, cell: Cell) {
        let idx = self.trail.index(cell);
        if !self.visited[idx] {
            self.visited[idx] = true;
            self.visited_count += 1;
        }
    }

    /// True iff the cell ahead holds food that has not been eaten. Free.
    #[inline]
    pub fn sense_food_ahead(&self) -> bool {
        let ahead = self.trail.step(self.position, self.heading);
        let idx = self.trail.index(ahead);
        self.trail.food_grid[idx] && !self.eaten[idx]
    }

    /// Executes one terminal, spending one unit of energy.
    pub fn apply_terminal(&mut self, instruction: Terminal) -> Result<(), OutOfEnergy> {
        if self.energy_left == 0 {
            return Err(OutOfEnergy);
        }
        self.energy_left -= 1;
        self.steps_taken += 1;
        match instruction {
            Terminal::Left => self.heading = self.heading.turn_left(),
            Terminal::Right => self.heading = self.heading.turn_right(),
            Terminal::Move => {
                let next = self.trail.step(self.position, self.heading);
                self.position = next;
                self.mark_visited(next);
                let idx = self.trail.index(next);
                if self.trail.food_grid[idx] && !self.eaten[idx] {
                    self.eaten[idx] = true;
                    self.food_eaten += 1;
                    self.moves_onto_food += 1;
                    self.moves_since_food = 0;
                } else {
                    self.moves_since_food += 1;
                }
            }
        }
        Ok(())
    }
}

/// Pure-world equality: same position, heading, counters and cell sets.
impl PartialEq for WorldState<'_> {
    fn eq(&self, other: &Self) -> bool {
        (std::ptr::eq(self.trail, other.trail) || self.trail == other.trail)
            && self.position == other.position
            && self.heading == other.heading
            && self.energy_left == other.energy_left
            && self.food_eaten == other.food_eaten
            && self.steps_taken == other.steps_taken
            && self.eaten == other.eaten
            && self.visited == other.visited
    }
}

impl Eq for WorldState<'_> {}

/// Convenience constructor mirroring the world's start condition.
pub fn initial_state(trail: &TrailMap, energy: u32) -> WorldState<'_> {
    assert!(energy > 0, "energy budget must be positive");
    WorldState::new(trail, energy)
}
