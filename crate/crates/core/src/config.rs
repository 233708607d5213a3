//! Bay layouts: stacks of blocks with distinct retrieval priorities.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A block is identified by its retrieval priority; smaller numbers leave first.
pub type Block = u32;

/// Priority reported for an empty stack. Compares larger than every real block.
pub const EMPTY_STACK_PRIORITY: Block = Block::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("priority {0} appears more than once")]
    DuplicatePriority(Block),
    #[error("priority 0 is not allowed; priorities start at 1")]
    ZeroPriority,
    #[error("stack {stack} holds {height} blocks, above the height limit {limit}")]
    HeightExceeded {
        stack: usize,
        height: usize,
        limit: usize,
    },
    #[error("height limit must be positive")]
    ZeroHeightLimit,
    #[error("block {0} is not in the bay")]
    UnknownBlock(Block),
    #[error("stack index {0} is out of range")]
    InvalidStack(usize),
}

/// Layout of one bay.
///
/// Stacks are listed left to right and each stack is ordered bottom to top.
/// `retrieved_up_to` is the largest priority already taken out of the bay.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    stacks: Vec<Vec<Block>>,
    height_limit: Option<usize>,
    retrieved_up_to: Block,
}

impl Configuration {
    pub fn new(stacks: Vec<Vec<Block>>) -> Result<Self, ConfigError> {
        let mut seen = HashSet::new();
        for &b in stacks.iter().flatten() {
            if b == 0 {
                return Err(ConfigError::ZeroPriority);
            }
            if !seen.insert(b) {
                return Err(ConfigError::DuplicatePriority(b));
            }
        }
        Ok(Self {
            stacks,
            height_limit: None,
            retrieved_up_to: 0,
        })
    }

    /// Builds a layout from a literal; panics on invalid input. Meant for tests
    /// and fixtures.
    pub fn from_stacks<S: AsRef<[Block]>>(stacks: &[S]) -> Self {
        Self::new(stacks.iter().map(|s| s.as_ref().to_vec()).collect())
            .expect("invalid configuration literal")
    }

    pub fn with_height_limit(mut self, limit: Option<usize>) -> Result<Self, ConfigError> {
        if let Some(h) = limit {
            if h == 0 {
                return Err(ConfigError::ZeroHeightLimit);
            }
            if let Some((stack, s)) = self.stacks.iter().enumerate().find(|(_, s)| s.len() > h) {
                return Err(ConfigError::HeightExceeded {
                    stack,
                    height: s.len(),
                    limit: h,
                });
            }
        }
        self.height_limit = limit;
        Ok(self)
    }

    pub fn stacks(&self) -> &[Vec<Block>] {
        &self.stacks
    }

    pub fn stack(&self, s: usize) -> &[Block] {
        &self.stacks[s]
    }

    pub fn num_stacks(&self) -> usize {
        self.stacks.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.stacks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.stacks.iter().all(Vec::is_empty)
    }

    pub fn height_limit(&self) -> Option<usize> {
        self.height_limit
    }

    pub fn retrieved_up_to(&self) -> Block {
        self.retrieved_up_to
    }

    /// Tallest stack in the current layout.
    pub fn max_height(&self) -> usize {
        self.stacks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Present blocks in increasing priority order.
    pub fn blocks(&self) -> Vec<Block> {
        let mut all: Vec<Block> = self.stacks.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// `(stack, depth_from_bottom)` of a block.
    pub fn position(&self, b: Block) -> Option<(usize, usize)> {
        self.stacks
            .iter()
            .enumerate()
            .find_map(|(s, st)| st.iter().position(|&x| x == b).map(|d| (s, d)))
    }

    pub fn top(&self, s: usize) -> Option<Block> {
        self.stacks[s].last().copied()
    }

    pub fn has_room(&self, s: usize) -> bool {
        self.height_limit.is_none_or(|h| self.stacks[s].len() < h)
    }

    /// The highest-priority block still in the bay.
    pub fn target_block(&self) -> Option<Block> {
        self.stacks.iter().flatten().copied().min()
    }

    /// Smallest priority number in stack `s`, or [`EMPTY_STACK_PRIORITY`].
    pub fn stack_priority(&self, s: usize) -> Block {
        self.stacks[s]
            .iter()
            .copied()
            .min()
            .unwrap_or(EMPTY_STACK_PRIORITY)
    }

    pub fn is_badly_placed(&self, b: Block) -> Result<bool, ConfigError> {
        let (s, d) = self.position(b).ok_or(ConfigError::UnknownBlock(b))?;
        Ok(self.stacks[s][..d].iter().any(|&x| x < b))
    }

    /// All badly placed blocks, sorted.
    pub fn bp_set(&self) -> Vec<Block> {
        let mut out = Vec::new();
        for st in &self.stacks {
            let mut min_below = EMPTY_STACK_PRIORITY;
            for &b in st {
                if b > min_below {
                    out.push(b);
                }
                min_below = min_below.min(b);
            }
        }
        out.sort_unstable();
        out
    }

    /// Number of blocks resting directly on a block with a smaller priority number.
    pub fn direct_blockages(&self) -> usize {
        self.stacks
            .iter()
            .map(|st| st.windows(2).filter(|w| w[1] > w[0]).count())
            .sum()
    }

    /// True when the present priorities are exactly
    /// `retrieved_up_to + 1 ..= retrieved_up_to + num_blocks`.
    pub fn is_canonical(&self) -> bool {
        let blocks = self.blocks();
        blocks
            .iter()
            .enumerate()
            .all(|(k, &b)| b == self.retrieved_up_to + 1 + k as Block)
    }

    /// Relabels the present blocks as `1..=B`, preserving their order, and
    /// resets the retrieval counter.
    pub fn renumbered(&self) -> Self {
        let order = self.blocks();
        let rank = |b: Block| order.binary_search(&b).unwrap() as Block + 1;
        Self {
            stacks: self
                .stacks
                .iter()
                .map(|st| st.iter().map(|&b| rank(b)).collect())
                .collect(),
            height_limit: self.height_limit,
            retrieved_up_to: 0,
        }
    }

    /// Same blocks with the stacks reordered: stack `k` of the result is stack
    /// `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.stacks.len());
        Self {
            stacks: perm.iter().map(|&p| self.stacks[p].clone()).collect(),
            height_limit: self.height_limit,
            retrieved_up_to: self.retrieved_up_to,
        }
    }

    pub(crate) fn stacks_mut(&mut self) -> &mut Vec<Vec<Block>> {
        &mut self.stacks
    }

    pub(crate) fn set_retrieved_up_to(&mut self, b: Block) {
        self.retrieved_up_to = b;
    }

    /// Drops `b` and everything above it from its stack.
    pub fn remove_from(&mut self, b: Block) -> Result<Vec<Block>, ConfigError> {
        let (s, d) = self.position(b).ok_or(ConfigError::UnknownBlock(b))?;
        Ok(self.stacks[s].split_off(d))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, st) in self.stacks.iter().enumerate() {
            write!(f, "{}:", s + 1)?;
            for b in st {
                write!(f, " {b}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// How the stack height limit is derived for a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HeightMode {
    #[default]
    Unlimited,
    /// Tallest initial stack plus two.
    PlusTwo,
    Explicit(usize),
}

impl HeightMode {
    pub fn limit_for(&self, c: &Configuration) -> Option<usize> {
        match *self {
            HeightMode::Unlimited => None,
            HeightMode::PlusTwo => Some(c.max_height() + 2),
            HeightMode::Explicit(h) => Some(h),
        }
    }

    pub fn apply(&self, c: Configuration) -> Result<Configuration, ConfigError> {
        let limit = self.limit_for(&c);
        c.with_height_limit(limit)
    }
}

impl FromStr for HeightMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(HeightMode::Unlimited),
            "plus2" => Ok(HeightMode::PlusTwo),
            other => other
                .parse::<usize>()
                .ok()
                .filter(|&h| h > 0)
                .map(HeightMode::Explicit)
                .ok_or_else(|| format!("expected none, plus2 or a positive integer, got {other:?}")),
        }
    }
}

impl fmt::Display for HeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeightMode::Unlimited => f.write_str("none"),
            HeightMode::PlusTwo => f.write_str("plus2"),
            HeightMode::Explicit(h) => write!(f, "{h}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bp_set_of_fixtures() {
        assert_eq!(fixtures::figure_a().bp_set(), vec![5, 6]);
        assert_eq!(
            fixtures::figure_b().bp_set(),
            vec![6, 10, 12, 14, 16, 17, 18, 19]
        );
    }

    #[test]
    fn increasing_stack_is_all_badly_placed_above_bottom() {
        let c = Configuration::from_stacks(&[[1, 2, 3]]);
        assert_eq!(c.bp_set(), vec![2, 3]);
        assert!(!c.is_badly_placed(1).unwrap());
        assert_eq!(c.is_badly_placed(9), Err(ConfigError::UnknownBlock(9)));
    }

    #[test]
    fn stack_priorities() {
        let a = fixtures::figure_a();
        let p: Vec<_> = (0..4).map(|s| a.stack_priority(s)).collect();
        assert_eq!(p, vec![7, 2, 3, 1]);

        let b = fixtures::figure_b();
        let p: Vec<_> = (0..4).map(|s| b.stack_priority(s)).collect();
        assert_eq!(p, vec![2, 1, 5, 4]);

        let empty = Configuration::from_stacks(&[vec![1], vec![]]);
        assert_eq!(empty.stack_priority(1), EMPTY_STACK_PRIORITY);
        const { assert!(EMPTY_STACK_PRIORITY > 1_000_000) };
    }

    #[test]
    fn duplicate_and_zero_priorities_rejected() {
        assert_eq!(
            Configuration::new(vec![vec![1, 2], vec![2]]),
            Err(ConfigError::DuplicatePriority(2))
        );
        assert_eq!(
            Configuration::new(vec![vec![0]]),
            Err(ConfigError::ZeroPriority)
        );
    }

    #[test]
    fn height_limit_checked() {
        let c = Configuration::from_stacks(&[vec![1, 2, 3], vec![]]);
        assert!(matches!(
            c.clone().with_height_limit(Some(2)),
            Err(ConfigError::HeightExceeded { stack: 0, .. })
        ));
        assert_eq!(
            HeightMode::PlusTwo.apply(c).unwrap().height_limit(),
            Some(5)
        );
    }

    #[test]
    fn renumbering_preserves_order() {
        let c = Configuration::from_stacks(&[vec![30, 10], vec![20]]);
        assert!(!c.is_canonical());
        let r = c.renumbered();
        assert_eq!(r.stacks(), &[vec![3, 1], vec![2]]);
        assert!(r.is_canonical());
    }

    #[test]
    fn direct_blockages_count_adjacent_pairs_only() {
        // 6 on 1 is a direct blockage, 5 on 6 is not.
        let c = Configuration::from_stacks(&[[1, 6, 5]]);
        assert_eq!(c.direct_blockages(), 1);
    }

    #[test]
    fn height_mode_parsing() {
        assert_eq!("none".parse::<HeightMode>(), Ok(HeightMode::Unlimited));
        assert_eq!("plus2".parse::<HeightMode>(), Ok(HeightMode::PlusTwo));
        assert_eq!("6".parse::<HeightMode>(), Ok(HeightMode::Explicit(6)));
        assert!("0".parse::<HeightMode>().is_err());
        assert!("tall".parse::<HeightMode>().is_err());
    }
}
