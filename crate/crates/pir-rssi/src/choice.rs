//! Randomness as an explicit finite choice tree.
//!
//! Every randomized procedure in this crate (config sampling, the partition
//! query builder) draws its decisions through a [`Chooser`]. In sampling mode
//! the chooser is an RNG; in audit mode the same procedure is replayed over
//! every path of the tree, yielding each outcome with its exact probability.
//! One code path serves both, so the audited distribution is the shipped one.

use num::BigInt;
use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Supplies one of `arity` equally likely alternatives.
pub trait Chooser {
    /// Returns a value in `0..arity`. `arity` must be at least 1.
    fn pick(&mut self, arity: usize) -> usize;
}

/// Sampling chooser backed by any RNG.
pub struct RngChooser<R: Rng>(pub R);

impl<R: Rng> Chooser for RngChooser<R> {
    fn pick(&mut self, arity: usize) -> usize {
        assert!(arity >= 1, "chooser arity must be positive");
        self.0.random_range(0..arity)
    }
}

/// Replay chooser used by the enumerator: follows a recorded prefix, then
/// extends the path with first alternatives.
struct ReplayChooser {
    path: Vec<(usize, usize)>, // (chosen, arity)
    depth: usize,
}

impl Chooser for ReplayChooser {
    fn pick(&mut self, arity: usize) -> usize {
        assert!(arity >= 1, "chooser arity must be positive");
        if self.depth < self.path.len() {
            let (chosen, recorded) = self.path[self.depth];
            assert_eq!(recorded, arity, "choice tree changed between replays");
            self.depth += 1;
            chosen
        } else {
            self.path.push((0, arity));
            self.depth += 1;
            0
        }
    }
}

/// Shared cap on choice-tree nodes, so one audit can spread a single budget
/// over many per-config enumerations.
#[derive(Clone, Debug)]
pub struct NodeBudget {
    limit: u64,
    used: u64,
}

impl NodeBudget {
    pub fn new(limit: u64) -> Self {
        NodeBudget { limit, used: 0 }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn charge(&mut self, nodes: u64) -> Result<()> {
        self.used += nodes;
        if self.used > self.limit {
            return Err(Error::BudgetExceeded { visited: self.used, budget: self.limit });
        }
        Ok(())
    }
}

/// Exhaustively runs `f` over every path of its choice tree and returns each
/// leaf value with its exact probability (the product of 1/arity along the
/// path). Probabilities over all leaves sum to exactly 1.
///
/// `budget` caps the total number of choice nodes visited; exceeding it
/// aborts with [`Error::BudgetExceeded`].
pub fn enumerate_tree<T>(
    budget: u64,
    f: impl FnMut(&mut dyn Chooser) -> T,
) -> Result<Vec<(T, Rational)>> {
    enumerate_tree_within(&mut NodeBudget::new(budget), f)
}

/// [`enumerate_tree`] charging an existing budget.
pub fn enumerate_tree_within<T>(
    budget: &mut NodeBudget,
    mut f: impl FnMut(&mut dyn Chooser) -> T,
) -> Result<Vec<(T, Rational)>> {
    let mut out = Vec::new();
    let mut path: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut chooser = ReplayChooser { path, depth: 0 };
        let value = f(&mut chooser);
        debug_assert_eq!(chooser.depth, chooser.path.len(), "stale replay suffix");
        budget.charge(chooser.path.len() as u64)?;
        out.push((value, path_probability(&chooser.path)));
        path = chooser.path;
        // odometer step: advance the deepest non-exhausted choice
        while let Some((chosen, arity)) = path.pop() {
            if chosen + 1 < arity {
                path.push((chosen + 1, arity));
                break;
            }
        }
        if path.is_empty() {
            break;
        }
    }
    Ok(out)
}

fn path_probability(path: &[(usize, usize)]) -> Rational {
    let mut denom = BigInt::from(1u32);
    for &(_, arity) in path {
        denom *= BigInt::from(arity);
    }
    Rational::new(BigInt::from(1u32), denom)
}

/// Lexicographically `rank`-th `m`-subset of `items` (items assumed sorted).
pub fn combination_at(items: &[usize], m: usize, rank: usize) -> Vec<usize> {
    use itertools::Itertools;
    items
        .iter()
        .copied()
        .combinations(m)
        .nth(rank)
        .expect("combination rank out of range")
}
