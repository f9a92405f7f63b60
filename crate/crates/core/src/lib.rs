//! Artificial-ant genetic programming workbench.
//!
//! The Santa Fe and Los Altos trail problems with an interpreter for the
//! standard and the ADF/"continue" function sets, executed-instruction schema
//! analytics, a generational GP engine with standard and direction-matched
//! crossover, and the experiment drivers built on top of them.

pub mod evolve;
pub mod experiments;
pub mod output;
pub mod program;
pub mod rng;
pub mod schema;
pub mod world;

pub use program::{
    evaluate, format_program, parse_program, tree_metrics, FunctionSet, Individual, NodeKind,
    ProgramError, Representation, RunResult, Tree, TreeRole,
};
pub use schema::{Composition, Direction, Orientation, Schema};
pub use world::{parse_trail, BundledTrail, Heading, Terminal, TrailError, TrailMap, WorldState};
