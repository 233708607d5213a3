//! Exact reference solvers for small instances.
//!
//! [`solve_exact`] and [`solve_restricted`] run iterative deepening on the
//! relocation count with the LB4 value as heuristic and retrieve eagerly.
//! [`min_moves_of_type`] searches without eager retrieval.

use std::cell::Cell;
use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{lb4_with, BoundOptions};
use crate::config::{Block, Configuration};
use crate::heuristics::{best_heuristic, greedy_min_max};
use crate::moves::{classify_relocation, Move, MoveSequence, MoveType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub max_blocks: usize,
    pub max_depth: usize,
    pub node_budget: u64,
    pub time_budget: Option<Duration>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_blocks: 24,
            max_depth: 200,
            node_budget: 20_000_000,
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalResult {
    pub optimum: usize,
    pub witness: MoveSequence,
    pub nodes: u64,
    pub proven: bool,
    /// Largest depth threshold fully refuted; equals `optimum` when proven.
    pub lower_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {blocks} blocks, above the search limit {limit}")]
    TooLarge { blocks: usize, limit: usize },
    #[error("no complete retrieval exists under the height limit")]
    Infeasible,
    #[error("search budget exhausted before any solution was found (lower bound {lower_bound})")]
    Budget { lower_bound: usize },
}

thread_local! {
    static RESTRICTED_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`solve_restricted`] calls made on this thread so far.
pub fn restricted_call_count() -> u64 {
    RESTRICTED_CALLS.with(Cell::get)
}

fn canonical(c: &Configuration) -> Vec<Vec<Block>> {
    let mut s = c.stacks().to_vec();
    s.sort_unstable();
    s
}

fn heuristic(c: &Configuration) -> usize {
    lb4_with(
        c,
        &BoundOptions {
            keep_retrievable: true,
            continue_after_miss: false,
        },
    )
    .value
}

enum Outcome {
    Found,
    NotFound,
    OutOfBudget,
}

struct Ida {
    forced_only: bool,
    limits: SearchLimits,
    start: Instant,
    nodes: u64,
    /// Canonical state to the largest remaining depth already searched from it.
    seen: HashMap<Vec<Vec<Block>>, usize>,
    /// Set when some node was cut by the threshold in the current pass.
    cut: bool,
    path: Vec<Move>,
}

impl Ida {
    fn over_budget(&self) -> bool {
        if self.nodes >= self.limits.node_budget {
            return true;
        }
        match self.limits.time_budget {
            Some(t) if self.nodes.is_multiple_of(256) => self.start.elapsed() >= t,
            _ => false,
        }
    }

    fn children(&self, c: &Configuration, last: Option<Block>) -> Vec<(Move, Configuration, Vec<Move>)> {
        let n = c.num_stacks();
        let sources: Vec<usize> = if self.forced_only {
            let t = c.target_block().unwrap();
            vec![c.position(t).unwrap().0]
        } else {
            (0..n).filter(|&s| !c.stack(s).is_empty()).collect()
        };
        let mut out = Vec::new();
        for from in sources {
            let block = c.top(from).unwrap();
            if Some(block) == last {
                continue;
            }
            let mut empty_tried = false;
            for to in 0..n {
                if to == from || !c.has_room(to) {
                    continue;
                }
                if c.stack(to).is_empty() {
                    // Empty stacks are interchangeable, and a lone block
                    // gains nothing from moving to one.
                    if empty_tried || c.stack(from).len() == 1 {
                        continue;
                    }
                    empty_tried = true;
                }
                let m = Move::Relocate { block, from, to };
                let mut next = c.apply_move(&m).unwrap();
                let retrieved = next.auto_retrieve_in_place();
                out.push((m, next, retrieved));
            }
        }
        out
    }

    fn dfs(&mut self, c: &Configuration, h: usize, g: usize, threshold: usize, last: Option<Block>) -> Outcome {
        if c.is_empty() {
            return Outcome::Found;
        }
        if g + h > threshold {
            self.cut = true;
            return Outcome::NotFound;
        }
        let remaining = threshold - g;
        let key = canonical(c);
        if self.seen.get(&key).is_some_and(|&r| r >= remaining) {
            return Outcome::NotFound;
        }
        self.seen.insert(key, remaining);
        self.nodes += 1;
        if self.over_budget() {
            return Outcome::OutOfBudget;
        }
        let mut kids: Vec<_> = self
            .children(c, last)
            .into_iter()
            .map(|(m, next, r)| {
                let h = heuristic(&next);
                (h, m, next, r)
            })
            .collect();
        kids.sort_by_key(|k| k.0);
        for (h, m, next, retrieved) in kids {
            let last = retrieved.is_empty().then_some(m.block());
            self.path.push(m);
            self.path.extend(retrieved.iter().copied());
            match self.dfs(&next, h, g + 1, threshold, last) {
                Outcome::Found => return Outcome::Found,
                Outcome::OutOfBudget => return Outcome::OutOfBudget,
                Outcome::NotFound => {
                    self.path.truncate(self.path.len() - 1 - retrieved.len());
                }
            }
        }
        Outcome::NotFound
    }
}

fn search(
    c: &Configuration,
    limits: &SearchLimits,
    forced_only: bool,
    incumbent: Option<MoveSequence>,
) -> Result<OptimalResult, OracleError> {
    if c.num_blocks() > limits.max_blocks {
        return Err(OracleError::TooLarge {
            blocks: c.num_blocks(),
            limit: limits.max_blocks,
        });
    }
    let (root, prefix) = c.auto_retrieve();
    let mut ida = Ida {
        forced_only,
        limits: *limits,
        start: Instant::now(),
        nodes: 0,
        seen: HashMap::new(),
        cut: false,
        path: prefix.clone(),
    };
    let ub = incumbent.as_ref().map(MoveSequence::relocation_count);
    let h0 = heuristic(&root);
    let mut threshold = h0;
    loop {
        if let (Some(ub), Some(seq)) = (ub, incumbent.as_ref()) {
            if threshold >= ub {
                return Ok(OptimalResult {
                    optimum: ub,
                    witness: seq.clone(),
                    nodes: ida.nodes,
                    proven: true,
                    lower_bound: ub,
                });
            }
        }
        if threshold > limits.max_depth {
            return fallback(incumbent, ida.nodes, threshold);
        }
        ida.seen.clear();
        ida.cut = false;
        ida.path.truncate(prefix.len());
        match ida.dfs(&root, h0, 0, threshold, None) {
            Outcome::Found => {
                let witness = MoveSequence::new(std::mem::take(&mut ida.path));
                return Ok(OptimalResult {
                    optimum: witness.relocation_count(),
                    witness,
                    nodes: ida.nodes,
                    proven: true,
                    lower_bound: threshold,
                });
            }
            Outcome::OutOfBudget => return fallback(incumbent, ida.nodes, threshold),
            Outcome::NotFound if !ida.cut => return Err(OracleError::Infeasible),
            Outcome::NotFound => threshold += 1,
        }
    }
}

fn fallback(
    incumbent: Option<MoveSequence>,
    nodes: u64,
    lower_bound: usize,
) -> Result<OptimalResult, OracleError> {
    match incumbent {
        Some(witness) => Ok(OptimalResult {
            optimum: witness.relocation_count(),
            witness,
            nodes,
            proven: false,
            lower_bound,
        }),
        None => Err(OracleError::Budget { lower_bound }),
    }
}

/// Minimum number of relocations under the layout's height limit.
///
/// On budget exhaustion the best heuristic solution is returned with
/// `proven == false`.
pub fn solve_exact(c: &Configuration, limits: &SearchLimits) -> Result<OptimalResult, OracleError> {
    let incumbent = best_heuristic(c).map(|h| h.sequence);
    search(c, limits, false, incumbent)
}

/// Optimum of the restricted problem, where only blocks above the current
/// target may be relocated.
pub fn solve_restricted(c: &Configuration, limits: &SearchLimits) -> Result<OptimalResult, OracleError> {
    RESTRICTED_CALLS.with(|n| n.set(n.get() + 1));
    let incumbent = greedy_min_max(c).ok().map(|h| h.sequence);
    search(c, limits, true, incumbent)
}

/// Fewest relocations whose type is in `types`, over all complete retrieval
/// sequences. Retrievals are explicit search steps here.
pub fn min_moves_of_type(
    c: &Configuration,
    types: &[MoveType],
    limits: &SearchLimits,
) -> Result<usize, OracleError> {
    if c.num_blocks() > limits.max_blocks {
        return Err(OracleError::TooLarge {
            blocks: c.num_blocks(),
            limit: limits.max_blocks,
        });
    }
    let start = Instant::now();
    let mut dist: HashMap<Vec<Vec<Block>>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(canonical(c), 0);
    queue.push_back((c.clone(), 0usize));
    let mut expanded = 0u64;
    while let Some((cur, d)) = queue.pop_front() {
        if dist.get(&canonical(&cur)).is_some_and(|&best| best < d) {
            continue;
        }
        if cur.is_empty() {
            return Ok(d);
        }
        expanded += 1;
        if expanded >= limits.node_budget
            || limits.time_budget.is_some_and(|t| start.elapsed() >= t)
        {
            return Err(OracleError::Budget { lower_bound: d });
        }
        let mut push = |next: Configuration, cost: usize, queue: &mut VecDeque<(Configuration, usize)>| {
            let nd = d + cost;
            let key = canonical(&next);
            if dist.get(&key).is_none_or(|&old| nd < old) {
                dist.insert(key, nd);
                if cost == 0 {
                    queue.push_front((next, nd));
                } else {
                    queue.push_back((next, nd));
                }
            }
        };
        let target = cur.target_block().unwrap();
        for from in 0..cur.num_stacks() {
            let Some(block) = cur.top(from) else { continue };
            if block == target {
                let m = Move::Retrieve { block, from };
                push(cur.apply_move(&m).unwrap(), 0, &mut queue);
            }
            for to in 0..cur.num_stacks() {
                if to == from || !cur.has_room(to) {
                    continue;
                }
                if cur.stack(to).is_empty() && cur.stack(from).len() == 1 {
                    continue;
                }
                let m = Move::Relocate { block, from, to };
                let ty = classify_relocation(&cur, &m).unwrap();
                push(cur.apply_move(&m).unwrap(), types.contains(&ty) as usize, &mut queue);
            }
        }
    }
    Err(OracleError::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure_a, figure_a_right_pair};

    fn solve(stacks: &[Vec<Block>]) -> OptimalResult {
        solve_exact(&Configuration::from_stacks(stacks), &SearchLimits::default()).unwrap()
    }

    #[test]
    fn one_forced_relocation() {
        let r = solve(&[vec![1, 2], vec![]]);
        assert_eq!(r.optimum, 1);
        assert!(r.proven);
        assert_eq!(r.witness.validate(&Configuration::from_stacks(&[vec![1, 2], vec![]])), Ok(1));
    }

    #[test]
    fn well_placed_stack_needs_nothing() {
        assert_eq!(solve(&[vec![3, 2], vec![1]]).optimum, 0);
    }

    #[test]
    fn figure_a_meets_its_bound() {
        let c = figure_a();
        let r = solve_exact(&c, &SearchLimits::default()).unwrap();
        assert!(r.proven);
        assert!(r.optimum >= 3);
        assert_eq!(r.witness.validate(&c), Ok(r.optimum));
    }

    #[test]
    fn single_stack_with_blockage_is_infeasible() {
        let c = Configuration::from_stacks(&[[1, 2]]);
        assert_eq!(
            solve_exact(&c, &SearchLimits::default()),
            Err(OracleError::Infeasible)
        );
    }

    #[test]
    fn restricted_examples() {
        let lim = SearchLimits::default();
        let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
        assert_eq!(solve_restricted(&c, &lim).unwrap().optimum, 1);
        let c = Configuration::from_stacks(&[vec![4, 3], vec![2, 1]]);
        assert_eq!(solve_restricted(&c, &lim).unwrap().optimum, 0);
    }

    #[test]
    fn restricted_calls_are_counted() {
        let before = restricted_call_count();
        let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
        solve_restricted(&c, &SearchLimits::default()).unwrap();
        assert_eq!(restricted_call_count(), before + 1);
    }

    #[test]
    fn move_type_counts() {
        let lim = SearchLimits::default();
        let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
        assert_eq!(min_moves_of_type(&c, &[MoveType::BG], &lim), Ok(1));
        let c = Configuration::from_stacks(&[vec![3, 1], vec![2]]);
        assert_eq!(min_moves_of_type(&c, &[MoveType::BG], &lim), Ok(0));
    }

    #[test]
    fn right_pair_framework_inequality() {
        let c = figure_a_right_pair();
        let lim = SearchLimits::default();
        let f = solve_exact(&c, &lim).unwrap().optimum;
        let bg = min_moves_of_type(&c, &[MoveType::BG], &lim).unwrap();
        let non_bg = min_moves_of_type(&c, &[MoveType::BB, MoveType::GB, MoveType::GG], &lim).unwrap();
        assert!(f >= bg + non_bg, "{f} < {bg} + {non_bg}");
    }

    #[test]
    fn budget_falls_back_to_heuristic() {
        let lim = SearchLimits {
            node_budget: 1,
            ..SearchLimits::default()
        };
        let c = crate::fixtures::figure_b().with_height_limit(None).unwrap();
        let r = solve_exact(&c, &lim).unwrap();
        assert!(!r.proven);
        assert!(r.lower_bound <= r.optimum);
        assert_eq!(r.witness.validate(&c), Ok(r.optimum));
    }

    #[test]
    fn budget_without_incumbent_is_an_error() {
        let lim = SearchLimits {
            node_budget: 1,
            ..SearchLimits::default()
        };
        // Every forced move overflows, so no heuristic incumbent exists.
        let c = Configuration::from_stacks(&[vec![1, 5, 6], vec![2, 3, 4]])
            .with_height_limit(Some(3))
            .unwrap();
        assert!(greedy_min_max(&c).is_err());
        assert!(matches!(solve_exact(&c, &lim), Err(OracleError::Budget { .. }) | Err(OracleError::Infeasible)));
    }
}
