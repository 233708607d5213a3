//! Crane moves, move classification, and sequence replay.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Block, ConfigError, Configuration};

/// One crane operation. Stack indices are zero-based in memory and printed
/// one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Relocate { block: Block, from: usize, to: usize },
    Retrieve { block: Block, from: usize },
}

impl Move {
    pub fn block(&self) -> Block {
        match *self {
            Move::Relocate { block, .. } | Move::Retrieve { block, .. } => block,
        }
    }

    pub fn is_relocation(&self) -> bool {
        matches!(self, Move::Relocate { .. })
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Move::Relocate { block, from, to } => write!(f, "R {block} {} {}", from + 1, to + 1),
            Move::Retrieve { block, from } => write!(f, "T {block} {}", from + 1),
        }
    }
}

/// Placement status of the relocated block before and after a relocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveType {
    BB,
    BG,
    GB,
    GG,
}

impl MoveType {
    pub const ALL: [MoveType; 4] = [MoveType::BB, MoveType::BG, MoveType::GB, MoveType::GG];

    pub fn from_status(bad_before: bool, bad_after: bool) -> Self {
        match (bad_before, bad_after) {
            (true, true) => MoveType::BB,
            (true, false) => MoveType::BG,
            (false, true) => MoveType::GB,
            (false, false) => MoveType::GG,
        }
    }
}

impl fmt::Display for MoveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MoveType::BB => "BB",
            MoveType::BG => "BG",
            MoveType::GB => "GB",
            MoveType::GG => "GG",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("stack {} does not exist", .0 + 1)]
    InvalidStack(usize),
    #[error("block {block} is not in stack {}", .stack + 1)]
    WrongStack { block: Block, stack: usize },
    #[error("block {block} is not on top of stack {}", .stack + 1)]
    NotTopmost { block: Block, stack: usize },
    #[error("relocation of block {0} must change stacks")]
    SameStack(Block),
    #[error("stack {} is full (height limit {limit})", .stack + 1)]
    StackFull { stack: usize, limit: usize },
    #[error("block {block} is not the target (target is {target})")]
    NotTarget { block: Block, target: Block },
    #[error("block {blocker} blocks target {target}")]
    BlockedTarget { target: Block, blocker: Block },
    #[error("the bay is empty")]
    EmptyBay,
    #[error("only relocations have a move type")]
    NotRelocation,
}

impl Configuration {
    /// Applies `m` in place after checking its preconditions.
    pub fn apply_in_place(&mut self, m: &Move) -> Result<(), MoveError> {
        let n = self.num_stacks();
        match *m {
            Move::Relocate { block, from, to } => {
                if from >= n {
                    return Err(MoveError::InvalidStack(from));
                }
                if to >= n {
                    return Err(MoveError::InvalidStack(to));
                }
                self.check_topmost(block, from)?;
                if from == to {
                    return Err(MoveError::SameStack(block));
                }
                if let Some(limit) = self.height_limit() {
                    if self.stack(to).len() >= limit {
                        return Err(MoveError::StackFull { stack: to, limit });
                    }
                }
                let stacks = self.stacks_mut();
                stacks[from].pop();
                stacks[to].push(block);
            }
            Move::Retrieve { block, from } => {
                if from >= n {
                    return Err(MoveError::InvalidStack(from));
                }
                let target = self.target_block().ok_or(MoveError::EmptyBay)?;
                if block != target {
                    return Err(MoveError::NotTarget { block, target });
                }
                if !self.stack(from).contains(&block) {
                    return Err(MoveError::WrongStack { block, stack: from });
                }
                let top = self.top(from).unwrap();
                if top != block {
                    return Err(MoveError::BlockedTarget {
                        target: block,
                        blocker: top,
                    });
                }
                self.stacks_mut()[from].pop();
                self.set_retrieved_up_to(block);
            }
        }
        Ok(())
    }

    pub fn apply_move(&self, m: &Move) -> Result<Configuration, MoveError> {
        let mut next = self.clone();
        next.apply_in_place(m)?;
        Ok(next)
    }

    /// Retrieves targets for as long as one sits on top of its stack.
    pub fn auto_retrieve_in_place(&mut self) -> Vec<Move> {
        let mut done = Vec::new();
        while let Some(t) = self.target_block() {
            let Some(s) = (0..self.num_stacks()).find(|&s| self.top(s) == Some(t)) else {
                break;
            };
            self.stacks_mut()[s].pop();
            self.set_retrieved_up_to(t);
            done.push(Move::Retrieve { block: t, from: s });
        }
        done
    }

    pub fn auto_retrieve(&self) -> (Configuration, Vec<Move>) {
        let mut next = self.clone();
        let done = next.auto_retrieve_in_place();
        (next, done)
    }

    fn check_topmost(&self, block: Block, stack: usize) -> Result<(), MoveError> {
        match self.top(stack) {
            Some(top) if top == block => Ok(()),
            _ if self.stack(stack).contains(&block) => Err(MoveError::NotTopmost { block, stack }),
            _ => Err(MoveError::WrongStack { block, stack }),
        }
    }
}

/// BB/BG/GB/GG type of a legal relocation.
pub fn classify_relocation(c: &Configuration, m: &Move) -> Result<MoveType, MoveError> {
    let Move::Relocate { block, from, to } = *m else {
        return Err(MoveError::NotRelocation);
    };
    // Legality check, including the height limit.
    c.apply_move(m)?;
    let bad_before = c.stack(from)[..c.stack(from).len() - 1]
        .iter()
        .any(|&x| x < block);
    let bad_after = c.stack(to).iter().any(|&x| x < block);
    Ok(MoveType::from_status(bad_before, bad_after))
}

/// Ordered list of moves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveSequence {
    moves: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("move {index} ({mv}) is illegal: {source}")]
    Illegal {
        index: usize,
        mv: Move,
        #[source]
        source: MoveError,
    },
    #[error("sequence ends with {remaining} block(s) still in the bay")]
    Incomplete { remaining: usize },
    #[error("initial layout rejected: {0}")]
    Layout(#[from] ConfigError),
}

impl MoveSequence {
    pub fn new(moves: Vec<Move>) -> Self {
        Self { moves }
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn push(&mut self, m: Move) {
        self.moves.push(m);
    }

    pub fn extend<I: IntoIterator<Item = Move>>(&mut self, moves: I) {
        self.moves.extend(moves);
    }

    pub fn relocation_count(&self) -> usize {
        self.moves.iter().filter(|m| m.is_relocation()).count()
    }

    /// Indices where each relocation turn begins. A turn is one relocation
    /// plus the retrievals that follow it.
    pub fn turn_starts(&self) -> Vec<usize> {
        self.moves
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_relocation())
            .map(|(i, _)| i)
            .collect()
    }

    /// Replays from `c0`, returning the final layout.
    pub fn replay(&self, c0: &Configuration) -> Result<Configuration, SequenceError> {
        let mut c = c0.clone();
        for (index, m) in self.moves.iter().enumerate() {
            c.apply_in_place(m).map_err(|source| SequenceError::Illegal {
                index,
                mv: *m,
                source,
            })?;
        }
        Ok(c)
    }

    /// Replays from `c0` under its own height limit and requires that every
    /// block is retrieved. Returns the number of relocations.
    pub fn validate(&self, c0: &Configuration) -> Result<usize, SequenceError> {
        let end = self.replay(c0)?;
        if !end.is_empty() {
            return Err(SequenceError::Incomplete {
                remaining: end.num_blocks(),
            });
        }
        Ok(self.relocation_count())
    }

    /// The first `n` relocations together with the retrievals that follow them
    /// up to the next relocation.
    pub fn truncate_relocations(&self, n: usize) -> MoveSequence {
        let mut seen = 0;
        let mut out = Vec::new();
        for m in &self.moves {
            if m.is_relocation() {
                if seen == n {
                    break;
                }
                seen += 1;
            }
            out.push(*m);
        }
        MoveSequence::new(out)
    }
}

impl FromIterator<Move> for MoveSequence {
    fn from_iter<I: IntoIterator<Item = Move>>(iter: I) -> Self {
        MoveSequence::new(iter.into_iter().collect())
    }
}

/// Checks `seq` from `c0` with `height` as the limit, overriding any limit
/// stored on `c0`.
pub fn validate_sequence(
    c0: &Configuration,
    seq: &MoveSequence,
    height: Option<usize>,
) -> Result<usize, SequenceError> {
    let c = c0.clone().with_height_limit(height)?;
    seq.validate(&c)
}
