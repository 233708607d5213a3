//! Test-only reference code, kept independent of the library's search.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use brp_core::bench::generate_instance;
use brp_core::{Block, Configuration, HeightMode};
use proptest::prelude::*;

/// Fewest relocations to empty the bay, by 0-1 breadth-first search over raw
/// layouts. Retrieving the lowest present block from a stack top costs 0 and
/// is optional; relocating any top block to any other stack with room costs 1.
/// No symmetry reduction and no pruning.
pub fn brute_force(c: &Configuration) -> Option<usize> {
    let limit = c.height_limit().unwrap_or(usize::MAX);
    let start: Vec<Vec<Block>> = c.stacks().to_vec();
    let mut dist: HashMap<Vec<Vec<Block>>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(start.clone(), 0);
    queue.push_back((start, 0usize));
    while let Some((st, d)) = queue.pop_front() {
        if dist[&st] < d {
            continue;
        }
        let Some(&target) = st.iter().flatten().min() else {
            return Some(d);
        };
        let mut relax = |next: Vec<Vec<Block>>, cost: usize, q: &mut VecDeque<(Vec<Vec<Block>>, usize)>| {
            let nd = d + cost;
            if dist.get(&next).is_none_or(|&old| nd < old) {
                dist.insert(next.clone(), nd);
                if cost == 0 {
                    q.push_front((next, nd));
                } else {
                    q.push_back((next, nd));
                }
            }
        };
        for s in 0..st.len() {
            let Some(&top) = st[s].last() else { continue };
            if top == target {
                let mut next = st.clone();
                next[s].pop();
                relax(next, 0, &mut queue);
            }
            for t in 0..st.len() {
                if t != s && st[t].len() < limit {
                    let mut next = st.clone();
                    next[s].pop();
                    next[t].push(top);
                    relax(next, 1, &mut queue);
                }
            }
        }
    }
    None
}

/// Blocks `1..=n` shuffled and dealt to stacks at random; stacks may differ in
/// height and may be empty.
pub fn irregular(max_blocks: usize) -> impl Strategy<Value = Configuration> {
    (1..=max_blocks, 2..=4usize)
        .prop_flat_map(|(n, s)| {
            let perm = Just((1..=n as Block).collect::<Vec<_>>()).prop_shuffle();
            (perm, proptest::collection::vec(0..s, n), Just(s))
        })
        .prop_map(|(perm, assign, s)| {
            let mut stacks = vec![Vec::new(); s];
            for (b, k) in perm.into_iter().zip(assign) {
                stacks[k].push(b);
            }
            Configuration::from_stacks(&stacks)
        })
}

/// As `irregular`, with no height limit or the tallest stack plus two.
pub fn irregular_with_height(max_blocks: usize) -> impl Strategy<Value = Configuration> {
    (irregular(max_blocks), any::<bool>()).prop_map(|(c, limited)| {
        let mode = if limited { HeightMode::PlusTwo } else { HeightMode::Unlimited };
        mode.apply(c).unwrap()
    })
}

/// The fixed 200-instance family of at most ten blocks: shapes cycle through
/// tiers x stacks of 2x2, 2x3, 3x2, 2x4, 3x3 and 2x5; odd indices carry the
/// tallest-plus-two height limit.
pub fn small_family() -> Vec<Configuration> {
    const SHAPES: [(usize, usize); 6] = [(2, 2), (2, 3), (3, 2), (2, 4), (3, 3), (2, 5)];
    (0..200u64)
        .map(|k| {
            let (h, w) = SHAPES[k as usize % SHAPES.len()];
            let c = generate_instance(10_000 + k, h, w);
            let mode = if k % 2 == 1 { HeightMode::PlusTwo } else { HeightMode::Unlimited };
            mode.apply(c).unwrap()
        })
        .collect()
}
