use rand::seq::IndexedRandom;
use rand::Rng;

use super::{FunctionSet, NodeKind, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMethod {
    /// Every leaf sits at exactly `max_depth`.
    Full,
    /// Root is a nonterminal; below it any primitive, terminals forced at `max_depth`.
    Grow,
}

/// Generates a random tree over `set`.
pub fn random_tree<R: Rng + ?Sized>(
    method: InitMethod,
    max_depth: usize,
    set: FunctionSet,
    rng: &mut R,
) -> Tree {
    assert!(max_depth >= 1, "max_depth must be at least 1");
    let mut nodes = Vec::new();
    grow_node(method, 0, max_depth, set, rng, &mut nodes);
    Tree::from_prefix(nodes).expect("generated tree is well formed")
}

fn grow_node<R: Rng + ?Sized>(
    method: InitMethod,
    depth: usize,
    max_depth: usize,
    set: FunctionSet,
    rng: &mut R,
    out: &mut Vec<NodeKind>,
) {
    let kind = if depth >= max_depth {
        *set.terminals().choose(rng).expect("terminal set is nonempty")
    } else if depth == 0 || method == InitMethod::Full {
        *set.nonterminals().choose(rng).expect("nonterminal set is nonempty")
    } else {
        let nt = set.nonterminals();
        let t = set.terminals();
        let pick = rng.random_range(0..nt.len() + t.len());
        if pick < nt.len() {
            nt[pick]
        } else {
            t[pick - nt.len()]
        }
    };
    out.push(kind);
    for _ in 0..kind.arity() {
        grow_node(method, depth + 1, max_depth, set, rng, out);
    }
}
