//! Instruction trees for the standard and the ADF/"continue" function sets.
//!
//! Trees are stored in prefix order with a precomputed subtree-end table, so
//! a subtree is always a contiguous slice. Depth uses the lone-leaf-is-0
//! convention: a single node has depth 0 and every nesting level adds one.
//! Koza counts the lone leaf as depth 1, so `max_depth = 17` here admits
//! trees one level deeper than the same number would under his convention.

mod interp;
mod parse;
mod random;

pub use interp::{evaluate, EvalOptions, Interpreter, IterationRecord, RunResult};
pub use parse::{format_program, format_tree, parse_program};
pub use random::{random_tree, InitMethod};

use std::fmt;

use thiserror::Error;

use crate::world::Terminal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Move,
    Left,
    Right,
    IfFoodAhead,
    Prog2,
    Prog3,
    /// "If food ahead, continue": runs its first child then restarts from the root.
    IfFoodAheadC,
    /// Unary: calls the ADF and restarts from the root on food, else runs its child.
    IfcAdf,
    /// Calls the ADF tree.
    AdfCall,
}

impl NodeKind {
    pub fn arity(self) -> usize {
        match self {
            NodeKind::Move | NodeKind::Left | NodeKind::Right | NodeKind::AdfCall => 0,
            NodeKind::IfcAdf => 1,
            NodeKind::IfFoodAhead | NodeKind::Prog2 | NodeKind::IfFoodAheadC => 2,
            NodeKind::Prog3 => 3,
        }
    }

    pub fn is_leaf(self) -> bool {
        self.arity() == 0
    }

    pub fn terminal(self) -> Option<Terminal> {
        match self {
            NodeKind::Move => Some(Terminal::Move),
            NodeKind::Left => Some(Terminal::Left),
            NodeKind::Right => Some(Terminal::Right),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            NodeKind::Move => "move",
            NodeKind::Left => "left",
            NodeKind::Right => "right",
            NodeKind::IfFoodAhead => "if",
            NodeKind::Prog2 => "prog2",
            NodeKind::Prog3 => "prog3",
            NodeKind::IfFoodAheadC => "ifc",
            NodeKind::IfcAdf => "ifc-adf",
            NodeKind::AdfCall => "adf",
        }
    }

    pub fn from_token(token: &str) -> Option<NodeKind> {
        Some(match token {
            "move" => NodeKind::Move,
            "left" => NodeKind::Left,
            "right" => NodeKind::Right,
            "if" => NodeKind::IfFoodAhead,
            "prog2" => NodeKind::Prog2,
            "prog3" => NodeKind::Prog3,
            "ifc" => NodeKind::IfFoodAheadC,
            "ifc-adf" => NodeKind::IfcAdf,
            "adf" => NodeKind::AdfCall,
            _ => return None,
        })
    }
}

impl From<Terminal> for NodeKind {
    fn from(t: Terminal) -> Self {
        match t {
            Terminal::Move => NodeKind::Move,
            Terminal::Left => NodeKind::Left,
            Terminal::Right => NodeKind::Right,
        }
    }
}

/// Primitive sets: the standard set, and the two halves of the extended
/// representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionSet {
    Standard,
    ExtendedMain,
    ExtendedAdf,
}

impl FunctionSet {
    pub fn nonterminals(self) -> &'static [NodeKind] {
        match self {
            FunctionSet::Standard => &[NodeKind::IfFoodAhead, NodeKind::Prog2, NodeKind::Prog3],
            FunctionSet::ExtendedMain => &[NodeKind::IfcAdf, NodeKind::Prog2, NodeKind::Prog3],
            FunctionSet::ExtendedAdf => &[NodeKind::IfFoodAheadC, NodeKind::Prog2, NodeKind::Prog3],
        }
    }

    pub fn terminals(self) -> &'static [NodeKind] {
        match self {
            FunctionSet::Standard | FunctionSet::ExtendedAdf => {
                &[NodeKind::Move, NodeKind::Left, NodeKind::Right]
            }
            FunctionSet::ExtendedMain => &[
                NodeKind::Move,
                NodeKind::Left,
                NodeKind::Right,
                NodeKind::AdfCall,
            ],
        }
    }

    pub fn contains(self, kind: NodeKind) -> bool {
        self.nonterminals().contains(&kind) || self.terminals().contains(&kind)
    }
}

impl fmt::Display for FunctionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionSet::Standard => "standard",
            FunctionSet::ExtendedMain => "extended main",
            FunctionSet::ExtendedAdf => "extended adf",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("arity error at byte {pos}: {op} takes {expected} argument(s), found {found}")]
    Arity {
        pos: usize,
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{kind} is not part of the {set} function set")]
    MixedFunctionSet { kind: &'static str, set: FunctionSet },
    #[error("malformed prefix tree")]
    Malformed,
}

/// An immutable instruction tree in prefix order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    nodes: Vec<NodeKind>,
    ends: Vec<u32>,
}

impl Tree {
    /// Validates a prefix sequence and builds the subtree-end table.
    pub fn from_prefix(nodes: Vec<NodeKind>) -> Result<Tree, ProgramError> {
        if nodes.is_empty() {
            return Err(ProgramError::Malformed);
        }
        let mut ends = vec![0u32; nodes.len()];
        // Walk backwards: each node's end is the end of its last child.
        let mut stack: Vec<u32> = Vec::with_capacity(nodes.len());
        for i in (0..nodes.len()).rev() {
            let arity = nodes[i].arity();
            if arity == 0 {
                ends[i] = i as u32 + 1;
            } else {
                if stack.len() < arity {
                    return Err(ProgramError::Malformed);
                }
                let mut last = 0;
                for _ in 0..arity {
                    last = stack.pop().expect("checked length");
                }
                ends[i] = ends[last as usize];
            }
            stack.push(i as u32);
        }
        if stack.len() != 1 {
            return Err(ProgramError::Malformed);
        }
        Ok(Tree { nodes, ends })
    }

    pub fn leaf(kind: NodeKind) -> Tree {
        assert!(kind.is_leaf());
        Tree {
            nodes: vec![kind],
            ends: vec![1],
        }
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    #[inline]
    pub fn kind(&self, idx: usize) -> NodeKind {
        self.nodes[idx]
    }

    /// One past the last node of the subtree rooted at `idx`.
    #[inline]
    pub fn subtree_end(&self, idx: usize) -> usize {
        self.ends[idx] as usize
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Indices of the direct children of `idx`.
    pub fn children(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let mut next = idx + 1;
        (0..self.nodes[idx].arity()).map(move |_| {
            let c = next;
            next = self.subtree_end(c);
            c
        })
    }

    /// Depth of every node, in prefix order.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = vec![0; self.nodes.len()];
        for i in 0..self.nodes.len() {
            for c in self.children(i) {
                depths[c] = depths[i] + 1;
            }
        }
        depths
    }

    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    /// Depth of the subtree rooted at `idx`, measured from that node.
    pub fn subtree_depth(&self, idx: usize) -> usize {
        let end = self.subtree_end(idx);
        let mut depths = vec![0; end - idx];
        let mut max = 0;
        for i in idx..end {
            let d = depths[i - idx];
            max = max.max(d);
            for c in self.children(i) {
                depths[c - idx] = d + 1;
            }
        }
        max
    }

    pub fn subtree(&self, idx: usize) -> Tree {
        let end = self.subtree_end(idx);
        Tree::from_prefix(self.nodes[idx..end].to_vec()).expect("subtree of a valid tree")
    }

    /// Returns a copy with the subtree at `idx` replaced by `donor`.
    pub fn replace_subtree(&self, idx: usize, donor: &Tree) -> Tree {
        let end = self.subtree_end(idx);
        let mut nodes = Vec::with_capacity(self.size() - (end - idx) + donor.size());
        nodes.extend_from_slice(&self.nodes[..idx]);
        nodes.extend_from_slice(&donor.nodes);
        nodes.extend_from_slice(&self.nodes[end..]);
        Tree::from_prefix(nodes).expect("splice of valid trees")
    }

    pub fn metrics(&self) -> TreeMetrics {
        TreeMetrics {
            size: self.size(),
            depth: self.depth(),
        }
    }

    /// True iff every node belongs to `set`.
    pub fn uses_only(&self, set: FunctionSet) -> bool {
        self.nodes.iter().all(|&k| set.contains(k))
    }

    fn check_set(&self, set: FunctionSet) -> Result<(), ProgramError> {
        match self.nodes.iter().find(|&&k| !set.contains(k)) {
            Some(k) => Err(ProgramError::MixedFunctionSet {
                kind: k.token(),
                set,
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tree({})", format_tree(self))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_tree(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeMetrics {
    pub size: usize,
    pub depth: usize,
}

pub fn tree_metrics(tree: &Tree) -> TreeMetrics {
    tree.metrics()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Standard,
    Extended,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Standard => "standard",
            Representation::Extended => "extended",
        }
    }
}

impl std::str::FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Representation::Standard),
            "extended" => Ok(Representation::Extended),
            other => Err(format!("unknown representation {other:?} (standard|extended)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeRole {
    Main,
    Adf,
}

/// The evolvable genotype: a main tree plus, in the extended
/// representation, one ADF body.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Individual {
    main: Tree,
    adf: Option<Tree>,
}

impl Individual {
    pub fn standard(main: Tree) -> Result<Individual, ProgramError> {
        main.check_set(FunctionSet::Standard)?;
        Ok(Individual { main, adf: None })
    }

    pub fn extended(main: Tree, adf: Tree) -> Result<Individual, ProgramError> {
        main.check_set(FunctionSet::ExtendedMain)?;
        adf.check_set(FunctionSet::ExtendedAdf)?;
        Ok(Individual {
            main,
            adf: Some(adf),
        })
    }

    pub fn representation(&self) -> Representation {
        if self.adf.is_some() {
            Representation::Extended
        } else {
            Representation::Standard
        }
    }

    pub fn main(&self) -> &Tree {
        &self.main
    }

    pub fn adf(&self) -> Option<&Tree> {
        self.adf.as_ref()
    }

    /// Panics when asking a standard individual for its ADF.
    pub fn tree(&self, role: TreeRole) -> &Tree {
        match role {
            TreeRole::Main => &self.main,
            TreeRole::Adf => self.adf.as_ref().expect("standard individual has no adf"),
        }
    }

    pub fn function_set(&self, role: TreeRole) -> FunctionSet {
        match (self.representation(), role) {
            (Representation::Standard, _) => FunctionSet::Standard,
            (Representation::Extended, TreeRole::Main) => FunctionSet::ExtendedMain,
            (Representation::Extended, TreeRole::Adf) => FunctionSet::ExtendedAdf,
        }
    }

    /// Total node count over both trees.
    pub fn size(&self) -> usize {
        self.main.size() + self.adf.as_ref().map_or(0, Tree::size)
    }

    /// Maximum depth over both trees.
    pub fn depth(&self) -> usize {
        self.main
            .depth()
            .max(self.adf.as_ref().map_or(0, Tree::depth))
    }

    /// Replaces one tree, keeping the other. The new tree must come from the
    /// same role's function set.
    pub fn with_tree(&self, role: TreeRole, tree: Tree) -> Individual {
        let mut out = self.clone();
        match role {
            TreeRole::Main => out.main = tree,
            TreeRole::Adf => out.adf = Some(tree),
        }
        out
    }
}

impl fmt::Debug for Individual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Individual({})", format_program(self))
    }
}

impl fmt::Display for Individual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_program(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_of_small_trees() {
        let leaf = parse_program("move").unwrap();
        assert_eq!(tree_metrics(leaf.main()), TreeMetrics { size: 1, depth: 0 });
        let t = parse_program("(if move (prog2 right move))").unwrap();
        assert_eq!(tree_metrics(t.main()), TreeMetrics { size: 5, depth: 2 });
    }

    #[test]
    fn prefix_validation() {
        use NodeKind::*;
        assert!(Tree::from_prefix(vec![Prog2, Move]).is_err());
        assert!(Tree::from_prefix(vec![Move, Move]).is_err());
        assert!(Tree::from_prefix(vec![]).is_err());
        let t = Tree::from_prefix(vec![Prog3, Left, IfFoodAhead, Move, Right, Move]).unwrap();
        assert_eq!(t.subtree_end(2), 5);
        assert_eq!(t.children(0).collect::<Vec<_>>(), vec![1, 2, 5]);
        assert_eq!(t.subtree_depth(2), 1);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn splice_replaces_contiguous_slice() {
        let t = parse_program("(prog2 (if move left) right)").unwrap();
        let donor = parse_program("(prog3 move move move)").unwrap();
        let out = t.main().replace_subtree(1, donor.main());
        assert_eq!(out.to_string(), "(prog2 (prog3 move move move) right)");
        assert_eq!(t.main().subtree(1).to_string(), "(if move left)");
    }

    #[test]
    fn function_set_membership() {
        let main = parse_program("(prog2 move left)").unwrap().main().clone();
        assert!(Individual::standard(main.clone()).is_ok());
        let bad = Tree::from_prefix(vec![NodeKind::IfFoodAheadC, NodeKind::Move, NodeKind::Left])
            .unwrap();
        assert!(matches!(
            Individual::standard(bad.clone()),
            Err(ProgramError::MixedFunctionSet { kind: "ifc", .. })
        ));
        assert!(Individual::extended(main, bad).is_ok());
    }
}
