//! Move sequences to variable values and back.

use std::collections::BTreeMap;

use thiserror::Error;

use super::model::{u_name, x_name, ym_name, yp_name, z_name, Model, Variant};
use crate::config::{Block, Configuration};
use crate::moves::{Move, MoveError, MoveSequence};

/// Variable name to value.
pub type Assignment = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("move {index} is illegal: {source}")]
    Illegal {
        index: usize,
        #[source]
        source: MoveError,
    },
    #[error("the sequence does not start by retrieving every exposed target")]
    PrefixMismatch,
    #[error("{relocations} relocations do not fit the horizon (L={l}, T={t})")]
    Horizon { relocations: usize, l: usize, t: usize },
    #[error("block {0} moves from the floor to the floor")]
    FloorToFloor(Block),
    #[error("turn {turn}: {msg}")]
    Inconsistent { turn: usize, msg: String },
    #[error("{0} block(s) are never retrieved")]
    Incomplete(usize),
}

struct Turn {
    relocation: Move,
    retrievals: Vec<Move>,
}

fn below(c: &Configuration, b: Block, floor: usize, idx: impl Fn(Block) -> usize) -> usize {
    let (s, d) = c.position(b).expect("present block");
    if d == 0 {
        floor
    } else {
        idx(c.stack(s)[d - 1])
    }
}

/// Values of every model variable for `seq`, which starts from the model's
/// source layout. Turns after the last relocation are empty.
pub fn encode_sequence(m: &Model, seq: &MoveSequence) -> Result<Assignment, CodecError> {
    let meta = &m.meta;
    let idx = |b: Block| meta.index_of(b);
    let fl = meta.floor();

    // Leading retrievals must reach the turn-0 layout.
    let mut cur = meta.source.clone();
    let moves = seq.moves();
    let mut k = 0;
    while k < moves.len() && !moves[k].is_relocation() {
        cur.apply_in_place(&moves[k])
            .map_err(|source| CodecError::Illegal { index: k, source })?;
        k += 1;
    }
    if cur != meta.initial {
        return Err(CodecError::PrefixMismatch);
    }

    let mut turns: Vec<Turn> = Vec::new();
    for mv in &moves[k..] {
        if mv.is_relocation() {
            turns.push(Turn {
                relocation: *mv,
                retrievals: Vec::new(),
            });
        } else {
            turns.last_mut().unwrap().retrievals.push(*mv);
        }
    }
    let r = turns.len();
    match meta.variant {
        Variant::M3 if r > meta.t => {
            return Err(CodecError::Horizon {
                relocations: r,
                l: meta.l,
                t: meta.t,
            })
        }
        Variant::M3R if r < meta.l => {
            return Err(CodecError::Horizon {
                relocations: r,
                l: meta.l,
                t: meta.t,
            })
        }
        _ => {}
    }
    turns.truncate(meta.t);

    let mut a = Assignment::new();
    for v in &m.program.variables {
        a.insert(v.name.clone(), 0.0);
    }
    let mut index = k;
    for t in 1..=meta.t {
        if let Some(turn) = turns.get(t - 1) {
            let Move::Relocate { block, from, to } = turn.relocation else {
                unreachable!("turns start with a relocation")
            };
            let i = idx(block);
            let j = below(&cur, block, fl, idx);
            let dest = cur.top(to).map_or(fl, idx);
            if j == fl && dest == fl {
                return Err(CodecError::FloorToFloor(block));
            }
            cur.apply_in_place(&Move::Relocate { block, from, to })
                .map_err(|source| CodecError::Illegal { index, source })?;
            index += 1;
            a.insert(ym_name(i, j, t), 1.0);
            a.insert(yp_name(i, dest, t), 1.0);
            for mv in &turn.retrievals {
                let b = mv.block();
                let j = below(&cur, b, fl, idx);
                cur.apply_in_place(mv)
                    .map_err(|source| CodecError::Illegal { index, source })?;
                index += 1;
                a.insert(z_name(idx(b), j, t), 1.0);
            }
        }
        for st in cur.stacks() {
            for (d, &b) in st.iter().enumerate() {
                let j = if d == 0 { fl } else { idx(st[d - 1]) };
                a.insert(x_name(idx(b), j, t), 1.0);
                if meta.height.is_some() {
                    a.insert(u_name(idx(b), t), d as f64);
                }
            }
        }
    }
    Ok(a)
}

fn on(a: &Assignment, name: &str) -> bool {
    a.get(name).is_some_and(|&v| v > 0.5)
}

/// Reads the turn-by-turn moves out of `a`. Lift-downs onto the floor use
/// the leftmost empty stack; retrievals within a turn run in priority order.
pub fn decode_assignment(m: &Model, a: &Assignment) -> Result<MoveSequence, CodecError> {
    let meta = &m.meta;
    let n = meta.blocks;
    let fl = meta.floor();
    let mut seq = MoveSequence::new(meta.prefix.clone());
    let mut cur = meta.initial.clone();
    let bad = |turn: usize, msg: String| CodecError::Inconsistent { turn, msg };
    for t in 1..=meta.t {
        let mut lifts = Vec::new();
        for i in 1..=n {
            for j in (1..=fl).filter(|&j| j != i) {
                if on(a, &ym_name(i, j, t)) {
                    lifts.push((i, j));
                }
            }
        }
        if lifts.len() > 1 {
            return Err(bad(t, format!("{} lift-ups", lifts.len())));
        }
        if let Some(&(i, _)) = lifts.first() {
            let dests: Vec<usize> = (1..=fl)
                .filter(|&k| k != i && on(a, &yp_name(i, k, t)))
                .collect();
            let [k] = dests[..] else {
                return Err(bad(t, format!("block index {i} has {} lift-downs", dests.len())));
            };
            let block = meta.block_of(i);
            let (from, _) = cur
                .position(block)
                .ok_or_else(|| bad(t, format!("block {block} is not in the bay")))?;
            let to = if k == fl {
                (0..cur.num_stacks())
                    .find(|&s| cur.stack(s).is_empty())
                    .ok_or_else(|| bad(t, "no empty stack for a floor lift-down".into()))?
            } else {
                let onto = meta.block_of(k);
                let (s, _) = cur
                    .position(onto)
                    .ok_or_else(|| bad(t, format!("block {onto} is not in the bay")))?;
                if cur.top(s) != Some(onto) {
                    return Err(bad(t, format!("block {onto} is not on top")));
                }
                s
            };
            let mv = Move::Relocate { block, from, to };
            cur.apply_in_place(&mv)
                .map_err(|e| bad(t, e.to_string()))?;
            seq.push(mv);
        }
        let mut taken: Vec<usize> = (1..=n)
            .filter(|&i| (i + 1..=fl).any(|j| on(a, &z_name(i, j, t))))
            .collect();
        taken.sort_unstable();
        for i in taken {
            let block = meta.block_of(i);
            let (from, _) = cur
                .position(block)
                .ok_or_else(|| bad(t, format!("block {block} retrieved twice")))?;
            let mv = Move::Retrieve { block, from };
            cur.apply_in_place(&mv)
                .map_err(|e| bad(t, e.to_string()))?;
            seq.push(mv);
        }
    }
    if meta.variant == Variant::M3 && !cur.is_empty() {
        return Err(CodecError::Incomplete(cur.num_blocks()));
    }
    Ok(seq)
}
