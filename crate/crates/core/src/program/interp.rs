//! Tree interpreter with implicit repetition.
//!
//! The main tree is executed from its root over and over. A run ends when a
//! terminal is due but no energy is left, or (optionally) as soon as the last
//! food cell is eaten. Continue-style nodes abort the current root iteration
//! and restart at the root with the world state untouched.

use super::{Individual, NodeKind, TreeRole};
use crate::world::{Terminal, TrailMap, WorldState};

/// One root iteration of a run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IterationRecord {
    /// Sensor outcomes in the order they were evaluated.
    pub sensor_key: Vec<bool>,
    /// Terminals executed, in order.
    pub body: Vec<Terminal>,
    /// Ended early by a continue-style node.
    pub truncated_by_continue: bool,
    /// The run stopped inside this iteration (energy or food exhausted).
    pub halted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub energy: u32,
    /// Stop the moment the last food cell is eaten.
    pub halt_on_clear: bool,
    pub record_trace: bool,
}

impl EvalOptions {
    pub fn new(energy: u32) -> Self {
        Self {
            energy,
            halt_on_clear: true,
            record_trace: true,
        }
    }

    /// Fitness-only evaluation: no per-iteration trace.
    pub fn fast(energy: u32) -> Self {
        Self {
            record_trace: false,
            ..Self::new(energy)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult<'t> {
    pub fitness: u32,
    pub state: WorldState<'t>,
    /// Root iterations begun, including a final partial one.
    pub iterations: u32,
    /// Empty unless the run was traced.
    pub trace: Vec<IterationRecord>,
}

impl RunResult<'_> {
    pub fn cells_visited(&self) -> u32 {
        self.state.cells_visited()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Normal,
    Continue,
    Halt,
}

/// Step-wise interpreter; `run_iteration` executes one root iteration.
pub struct Interpreter<'a, 't> {
    individual: &'a Individual,
    state: WorldState<'t>,
    options: EvalOptions,
    iterations: u32,
    halted: bool,
    current: IterationRecord,
    trace: Vec<IterationRecord>,
    coverage: Option<[Vec<bool>; 2]>,
}

impl<'a, 't> Interpreter<'a, 't> {
    pub fn new(individual: &'a Individual, trail: &'t TrailMap, options: EvalOptions) -> Self {
        assert!(options.energy > 0, "energy budget must be positive");
        Self {
            individual,
            state: WorldState::new(trail, options.energy),
            options,
            iterations: 0,
            halted: false,
            current: IterationRecord {
                sensor_key: Vec::new(),
                body: Vec::new(),
                truncated_by_continue: false,
                halted: false,
            },
            trace: Vec::new(),
            coverage: None,
        }
    }

    /// Records which nodes of each tree execute at least once.
    pub fn track_coverage(mut self) -> Self {
        let adf = self.individual.adf().map_or(0, |t| t.size());
        self.coverage = Some([vec![false; self.individual.main().size()], vec![false; adf]]);
        self
    }

    pub fn state(&self) -> &WorldState<'t> {
        &self.state
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn trace(&self) -> &[IterationRecord] {
        &self.trace
    }

    /// Nodes executed so far, per tree (main, adf), when tracking.
    pub fn coverage(&self) -> Option<&[Vec<bool>; 2]> {
        self.coverage.as_ref()
    }

    /// The run stopped in the middle of an iteration.
    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn is_finished(&self) -> bool {
        self.halted
            || self.state.energy_left() == 0
            || (self.options.halt_on_clear && self.state.all_food_eaten())
    }

    /// Runs one root iteration. Returns false if the run had already ended.
    pub fn run_iteration(&mut self) -> bool {
        if self.is_finished() {
            return false;
        }
        self.iterations += 1;
        let flow = self.exec(TreeRole::Main, 0);
        if flow == Flow::Halt {
            self.halted = true;
        }
        if self.options.record_trace {
            let rec = IterationRecord {
                truncated_by_continue: flow == Flow::Continue,
                halted: flow == Flow::Halt,
                ..std::mem::replace(
                    &mut self.current,
                    IterationRecord {
                        sensor_key: Vec::new(),
                        body: Vec::new(),
                        truncated_by_continue: false,
                        halted: false,
                    },
                )
            };
            self.trace.push(rec);
        }
        true
    }

    pub fn run_to_end(mut self) -> RunResult<'t> {
        while self.run_iteration() {}
        self.finish()
    }

    pub fn finish(self) -> RunResult<'t> {
        RunResult {
            fitness: self.state.food_eaten(),
            iterations: self.iterations,
            trace: self.trace,
            state: self.state,
        }
    }

    fn sense(&mut self) -> bool {
        let food = self.state.sense_food_ahead();
        if self.options.record_trace {
            self.current.sensor_key.push(food);
        }
        food
    }

    fn terminal(&mut self, t: Terminal) -> Flow {
        if self.state.apply_terminal(t).is_err() {
            return Flow::Halt;
        }
        if self.options.record_trace {
            self.current.body.push(t);
        }
        if self.options.halt_on_clear && t == Terminal::Move && self.state.all_food_eaten() {
            return Flow::Halt;
        }
        Flow::Normal
    }

    fn exec(&mut self, role: TreeRole, idx: usize) -> Flow {
        let tree = self.individual.tree(role);
        if let Some(cov) = self.coverage.as_mut() {
            cov[role as usize][idx] = true;
        }
        match tree.kind(idx) {
            NodeKind::Move => self.terminal(Terminal::Move),
            NodeKind::Left => self.terminal(Terminal::Left),
            NodeKind::Right => self.terminal(Terminal::Right),
            NodeKind::IfFoodAhead => {
                let first = idx + 1;
                let next = if self.sense() {
                    first
                } else {
                    tree.subtree_end(first)
                };
                self.exec(role, next)
            }
            NodeKind::Prog2 | NodeKind::Prog3 => {
                let mut child = idx + 1;
                for _ in 0..tree.kind(idx).arity() {
                    let flow = self.exec(role, child);
                    if flow != Flow::Normal {
                        return flow;
                    }
                    child = tree.subtree_end(child);
                }
                Flow::Normal
            }
            NodeKind::IfFoodAheadC => {
                let first = idx + 1;
                if self.sense() {
                    match self.exec(role, first) {
                        Flow::Normal => Flow::Continue,
                        other => other,
                    }
                } else {
                    self.exec(role, tree.subtree_end(first))
                }
            }
            NodeKind::IfcAdf => {
                if self.sense() {
                    match self.exec(TreeRole::Adf, 0) {
                        Flow::Normal => Flow::Continue,
                        other => other,
                    }
                } else {
                    self.exec(role, idx + 1)
                }
            }
            NodeKind::AdfCall => self.exec(TreeRole::Adf, 0),
        }
    }
}

/// Traced evaluation that stops when energy runs out or all food is eaten.
pub fn evaluate<'t>(individual: &Individual, trail: &'t TrailMap, energy: u32) -> RunResult<'t> {
    Interpreter::new(individual, trail, EvalOptions::new(energy)).run_to_end()
}

impl<'t> RunResult<'t> {
    /// Runs with explicit options.
    pub fn with_options(
        individual: &Individual,
        trail: &'t TrailMap,
        options: EvalOptions,
    ) -> RunResult<'t> {
        Interpreter::new(individual, trail, options).run_to_end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;
    use crate::world::{BundledTrail, Heading};

    fn line_food() -> TrailMap {
        TrailMap::from_food("line", 8, 8, [(1, 0), (2, 0), (3, 0)]).unwrap()
    }

    #[test]
    fn single_move_program_eats_line() {
        let ind = parse_program("move").unwrap();
        let t = line_food();
        let r = evaluate(&ind, &t, 3);
        assert_eq!((r.fitness, r.iterations), (3, 3));
        assert!(r.trace.iter().all(|it| it.body == vec![Terminal::Move]));
    }

    #[test]
    fn spinning_ant_turns_every_iteration() {
        let ind = parse_program("left").unwrap();
        let sf = BundledTrail::SantaFe.load().unwrap();
        let r = evaluate(&ind, &sf, 600);
        assert_eq!((r.fitness, r.iterations), (0, 600));
        assert_eq!(r.cells_visited(), 1);
        assert_eq!(r.state.heading(), Heading::East);
    }

    #[test]
    fn halts_mid_iteration_on_exhaustion() {
        let ind = parse_program("(prog3 move move move)").unwrap();
        let empty = TrailMap::empty("e", 8, 8);
        let r = evaluate(&ind, &empty, 4);
        assert_eq!(r.iterations, 2);
        assert_eq!(r.trace[1].body.len(), 1);
        assert!(r.trace[1].halted);
        assert!(!r.trace[0].halted);
        // An iteration that spends exactly the last unit is complete.
        let empty = TrailMap::empty("e", 8, 8);
        let r = evaluate(&ind, &empty, 3);
        assert_eq!(r.iterations, 1);
        assert!(!r.trace[0].halted);
    }

    #[test]
    fn branch_follows_sensor() {
        // Food only at (1,0): first iteration moves onto it, then no food ahead.
        let t = TrailMap::from_food("t", 8, 8, [(1, 0)]).unwrap();
        let ind = parse_program("(prog2 (if move left) right)").unwrap();
        let opts = EvalOptions {
            halt_on_clear: false,
            ..EvalOptions::new(6)
        };
        let r = RunResult::with_options(&ind, &t, opts);
        assert_eq!(r.trace[0].sensor_key, vec![true]);
        assert_eq!(r.trace[0].body, vec![Terminal::Move, Terminal::Right]);
        assert_eq!(r.trace[1].sensor_key, vec![false]);
        assert_eq!(r.trace[1].body, vec![Terminal::Left, Terminal::Right]);
    }

    #[test]
    fn ifc_adf_restarts_from_root() {
        let t = line_food();
        let ind = parse_program("main: (prog2 (ifc-adf left) right) adf: move").unwrap();
        let opts = EvalOptions {
            halt_on_clear: false,
            ..EvalOptions::new(5)
        };
        let r = RunResult::with_options(&ind, &t, opts);
        // Food ahead three times: adf moves, the trailing right is skipped.
        for it in &r.trace[..3] {
            assert_eq!(it.body, vec![Terminal::Move]);
            assert!(it.truncated_by_continue);
        }
        assert_eq!(r.trace[3].body, vec![Terminal::Left, Terminal::Right]);
        assert!(!r.trace[3].truncated_by_continue);
        assert_eq!(r.fitness, 3);
    }

    #[test]
    fn ifc_inside_adf_continues_after_left_branch() {
        let t = line_food();
        let ind = parse_program("main: (prog2 adf left) adf: (ifc move right)").unwrap();
        let opts = EvalOptions {
            halt_on_clear: false,
            ..EvalOptions::new(4)
        };
        let r = RunResult::with_options(&ind, &t, opts);
        assert_eq!(r.trace[0].body, vec![Terminal::Move]);
        assert!(r.trace[0].truncated_by_continue);
        assert_eq!(r.iterations, 4);
        assert_eq!(r.fitness, 3);
        assert_eq!(r.trace[3].body, vec![Terminal::Right]);
        assert!(r.trace[3].halted);
    }

    #[test]
    fn adf_sensors_share_the_iteration_key() {
        let t = line_food();
        let ind = parse_program("main: (ifc-adf (prog2 adf move)) adf: (ifc move left)").unwrap();
        let empty = TrailMap::empty("e", 8, 8);
        let r = evaluate(&ind, &empty, 2);
        assert_eq!(r.trace[0].sensor_key, vec![false, false]);
        assert_eq!(r.trace[0].body, vec![Terminal::Left, Terminal::Move]);
        let r = evaluate(&ind, &t, 1);
        assert_eq!(r.trace[0].sensor_key, vec![true, true]);
    }

    #[test]
    fn stops_as_soon_as_trail_is_cleared() {
        let t = TrailMap::from_food("t", 8, 8, [(1, 0)]).unwrap();
        let ind = parse_program("(prog3 move left left)").unwrap();
        let r = evaluate(&ind, &t, 100);
        assert_eq!(r.state.steps_taken(), 1);
        assert!(r.trace[0].halted);
    }

    #[test]
    fn coverage_marks_executed_nodes() {
        let ind = parse_program("(if move left)").unwrap();
        let empty = TrailMap::empty("e", 4, 4);
        let it = Interpreter::new(&ind, &empty, EvalOptions::new(3))
            .track_coverage();
        let mut it = it;
        while it.run_iteration() {}
        assert_eq!(it.coverage().unwrap()[0], vec![true, false, true]);
    }
}
