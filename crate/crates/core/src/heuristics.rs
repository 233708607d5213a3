//! Fast feasible solutions and height-limit repair.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Block, Configuration};
use crate::moves::{Move, MoveSequence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeuristicError {
    #[error("no feasible destination for block {block} (every other stack is full)")]
    NoFeasibleDestination { block: Block },
    #[error("the initial layout already exceeds height limit {limit}")]
    LayoutTooTall { limit: usize },
    #[error("a stack has no room below height limit {limit}")]
    Unreparable { limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicSolution {
    pub sequence: MoveSequence,
    pub relocations: usize,
    pub respects_height: bool,
}

/// Destination rule: the tightest stack keeping `b` well placed, else the
/// stack with the numerically largest priority. Ties go to the leftmost stack.
pub fn min_max_destination(c: &Configuration, from: usize, b: Block) -> Option<usize> {
    let open: Vec<usize> = (0..c.num_stacks())
        .filter(|&s| s != from && c.has_room(s))
        .collect();
    let good = open
        .iter()
        .copied()
        .filter(|&s| c.stack_priority(s) > b)
        .min_by_key(|&s| (c.stack_priority(s), s));
    good.or_else(|| {
        open.iter()
            .copied()
            .max_by_key(|&s| (c.stack_priority(s), std::cmp::Reverse(s)))
    })
}

/// Stack holding the current target and the block resting on it, if any.
fn forced_block(c: &Configuration) -> Option<(usize, Block)> {
    let t = c.target_block()?;
    let (s, _) = c.position(t).unwrap();
    let top = c.top(s).unwrap();
    (top != t).then_some((s, top))
}

fn run_forced<F>(c: &Configuration, mut choose: F) -> Result<HeuristicSolution, HeuristicError>
where
    F: FnMut(&Configuration, usize, Block) -> Option<usize>,
{
    let mut cur = c.clone();
    let mut seq = MoveSequence::default();
    seq.extend(cur.auto_retrieve_in_place());
    while let Some((from, block)) = forced_block(&cur) {
        let to = choose(&cur, from, block).ok_or(HeuristicError::NoFeasibleDestination { block })?;
        let m = Move::Relocate { block, from, to };
        cur.apply_in_place(&m).expect("destination has room");
        seq.push(m);
        seq.extend(cur.auto_retrieve_in_place());
    }
    let relocations = seq.relocation_count();
    Ok(HeuristicSolution {
        sequence: seq,
        relocations,
        respects_height: true,
    })
}

/// Moves only blocks above the target, each to [`min_max_destination`].
/// Honours the layout's height limit.
pub fn greedy_min_max(c: &Configuration) -> Result<HeuristicSolution, HeuristicError> {
    run_forced(c, min_max_destination)
}

/// Blocks above the target that would find no well placed destination if
/// relocated top-down with best fit after `b` lands on `to`.
fn stranded_after(c: &Configuration, from: usize, to: usize, b: Block) -> usize {
    let mut prio: Vec<Block> = (0..c.num_stacks())
        .filter(|&s| s != from)
        .map(|s| if s == to { b.min(c.stack_priority(s)) } else { c.stack_priority(s) })
        .collect();
    let t = c.target_block().unwrap();
    let (_, d) = c.position(t).unwrap();
    let rest = &c.stack(from)[d + 1..c.stack(from).len() - 1];
    let mut stranded = 0;
    for &x in rest.iter().rev() {
        match prio.iter_mut().filter(|p| **p > x).min_by_key(|p| **p) {
            Some(p) => *p = x,
            None => stranded += 1,
        }
    }
    stranded
}

/// Like [`greedy_min_max`] but scores each destination by the blockage it
/// creates plus the blocks it would strand for the next forced moves.
pub fn greedy_lookahead(c: &Configuration) -> Result<HeuristicSolution, HeuristicError> {
    run_forced(c, |cur, from, b| {
        let default = min_max_destination(cur, from, b)?;
        (0..cur.num_stacks())
            .filter(|&s| s != from && cur.has_room(s))
            .min_by_key(|&s| {
                let bad = (cur.stack_priority(s) < b) as usize;
                (bad + stranded_after(cur, from, s, b), s != default, s)
            })
    })
}

/// Best of the fast heuristics; `None` when both fail.
pub fn best_heuristic(c: &Configuration) -> Option<HeuristicSolution> {
    [greedy_min_max(c), greedy_lookahead(c)]
        .into_iter()
        .flatten()
        .min_by_key(|h| h.relocations)
}

/// Replays `seq` (feasible without a height limit) under limit `h`.
///
/// Relocations are replayed by block identity. A relocation whose destination
/// is full goes to the greedy destination instead; one whose block is no
/// longer on top, or whose destination is its current stack, is skipped.
/// Whatever remains is finished with [`greedy_min_max`].
pub fn repair_height(
    c: &Configuration,
    seq: &MoveSequence,
    h: usize,
) -> Result<MoveSequence, HeuristicError> {
    let mut cur = c
        .clone()
        .with_height_limit(Some(h))
        .map_err(|_| HeuristicError::LayoutTooTall { limit: h })?;
    if seq.validate(&cur).is_ok() {
        return Ok(seq.clone());
    }
    let mut out = MoveSequence::default();
    out.extend(cur.auto_retrieve_in_place());
    for m in seq.moves() {
        let Move::Relocate { block, to, .. } = *m else {
            continue;
        };
        let Some((from, _)) = cur.position(block) else {
            continue;
        };
        if cur.top(from) != Some(block) || from == to {
            continue;
        }
        let to = if cur.has_room(to) {
            to
        } else {
            min_max_destination(&cur, from, block).ok_or(HeuristicError::Unreparable { limit: h })?
        };
        let mv = Move::Relocate { block, from, to };
        cur.apply_in_place(&mv).expect("checked destination");
        out.push(mv);
        out.extend(cur.auto_retrieve_in_place());
    }
    let tail = greedy_min_max(&cur).map_err(|_| HeuristicError::Unreparable { limit: h })?;
    out.extend(tail.sequence.moves().iter().copied());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::lb4;
    use crate::fixtures::figure_b;

    #[test]
    fn single_forced_move() {
        let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
        let h = greedy_min_max(&c).unwrap();
        assert_eq!(h.relocations, 1);
        assert_eq!(h.sequence.validate(&c), Ok(1));
    }

    #[test]
    fn no_bp_blocks_needs_nothing() {
        let c = Configuration::from_stacks(&[vec![3, 1], vec![4, 2]]);
        assert_eq!(greedy_min_max(&c).unwrap().relocations, 0);
        assert_eq!(greedy_lookahead(&c).unwrap().relocations, 0);
    }

    #[test]
    fn figure_b_respects_the_bound() {
        let c = figure_b().with_height_limit(None).unwrap();
        for h in [greedy_min_max(&c).unwrap(), greedy_lookahead(&c).unwrap()] {
            assert!(h.relocations >= lb4(&c).value);
            assert_eq!(h.sequence.validate(&c), Ok(h.relocations));
        }
    }

    #[test]
    fn full_bay_has_no_destination() {
        let c = Configuration::from_stacks(&[vec![1, 4], vec![2, 3]])
            .with_height_limit(Some(2))
            .unwrap();
        assert_eq!(
            greedy_min_max(&c),
            Err(HeuristicError::NoFeasibleDestination { block: 4 })
        );
    }

    #[test]
    fn repair_keeps_feasible_sequences() {
        let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
        let seq = greedy_min_max(&c).unwrap().sequence;
        assert_eq!(repair_height(&c, &seq, 2).unwrap(), seq);
    }

    #[test]
    fn repair_rejects_tall_layouts() {
        let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
        let seq = greedy_min_max(&c).unwrap().sequence;
        assert_eq!(
            repair_height(&c, &seq, 1),
            Err(HeuristicError::LayoutTooTall { limit: 1 })
        );
    }

    #[test]
    fn repair_redirects_an_overflowing_move() {
        // Unlimited: put 4 and 3 on stack 2, giving it four blocks.
        let c = Configuration::from_stacks(&[vec![1, 3, 4], vec![6, 5], vec![2]]);
        let seq = MoveSequence::new(vec![
            Move::Relocate { block: 4, from: 0, to: 1 },
            Move::Relocate { block: 3, from: 0, to: 1 },
            Move::Retrieve { block: 1, from: 0 },
            Move::Retrieve { block: 2, from: 2 },
            Move::Retrieve { block: 3, from: 1 },
            Move::Retrieve { block: 4, from: 1 },
            Move::Retrieve { block: 5, from: 1 },
            Move::Retrieve { block: 6, from: 1 },
        ]);
        assert_eq!(seq.validate(&c), Ok(2));
        let limited = c.clone().with_height_limit(Some(3)).unwrap();
        assert!(seq.validate(&limited).is_err());
        let fixed = repair_height(&c, &seq, 3).unwrap();
        let n = fixed.validate(&limited).unwrap();
        assert!(n >= 2);
    }
}
