//! Lower bounds on the number of relocations.
//!
//! Every bound is computed on the layout left after all currently possible
//! retrievals, unless [`BoundOptions::keep_retrievable`] is set.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{Block, Configuration, EMPTY_STACK_PRIORITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    Lb1,
    Lb2,
    Lb3,
    LbN,
    Lb4,
}

impl BoundKind {
    pub const ALL: [BoundKind; 5] = [
        BoundKind::Lb1,
        BoundKind::Lb2,
        BoundKind::Lb3,
        BoundKind::LbN,
        BoundKind::Lb4,
    ];
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Lb1 => "LB1",
            BoundKind::Lb2 => "LB2",
            BoundKind::Lb3 => "LB3",
            BoundKind::LbN => "LB-N",
            BoundKind::Lb4 => "LB4",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoundOptions {
    /// Compute on the layout as given, without retrieving exposed targets first.
    pub keep_retrievable: bool,
    /// When collecting overlapped layers, keep trying later shared-block
    /// candidates after one fails instead of stopping.
    pub continue_after_miss: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pick {
    pub stack: usize,
    /// Index from the bottom of the stack.
    pub depth: usize,
    pub block: Block,
}

/// One block picked from every stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualLayer {
    /// Ordered by stack.
    pub picks: Vec<Pick>,
}

impl VirtualLayer {
    pub fn blocks(&self) -> Vec<Block> {
        self.picks.iter().map(|p| p.block).collect()
    }
}

/// Two virtual layers, one above the other, sharing exactly one well placed block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlappedLayers {
    pub upper: VirtualLayer,
    pub lower: VirtualLayer,
    pub shared: Block,
}

impl OverlappedLayers {
    /// The `2S - 1` distinct blocks of both layers.
    pub fn blocks(&self) -> Vec<Block> {
        let mut out: Vec<Block> = self
            .upper
            .blocks()
            .into_iter()
            .chain(self.lower.blocks())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: usize,
    pub bp_set: Vec<Block>,
    /// Number of top layers certified by LB3.
    pub top_layers: usize,
    pub overlapped: Vec<OverlappedLayers>,
    pub layers: Vec<VirtualLayer>,
    /// Blocks above the examined target plus the highest-priority block of
    /// every other non-empty stack, when the relocation experiment fails.
    pub blocking_set: Option<Vec<Block>>,
}

impl BoundReport {
    fn plain(kind: BoundKind, value: usize, bp_set: Vec<Block>) -> Self {
        Self {
            kind,
            value,
            bp_set,
            top_layers: 0,
            overlapped: Vec::new(),
            layers: Vec::new(),
            blocking_set: None,
        }
    }
}

/// All five bound values for one layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub lb1: usize,
    pub lb2: usize,
    pub lb3: usize,
    pub lbn: usize,
    pub lb4: usize,
}

impl Bounds {
    pub fn get(&self, kind: BoundKind) -> usize {
        match kind {
            BoundKind::Lb1 => self.lb1,
            BoundKind::Lb2 => self.lb2,
            BoundKind::Lb3 => self.lb3,
            BoundKind::LbN => self.lbn,
            BoundKind::Lb4 => self.lb4,
        }
    }
}

fn prepared(c: &Configuration, opts: &BoundOptions) -> Configuration {
    if opts.keep_retrievable {
        c.clone()
    } else {
        c.auto_retrieve().0
    }
}

fn stack_min(s: &[Block]) -> Block {
    s.iter().copied().min().unwrap_or(EMPTY_STACK_PRIORITY)
}

fn max_stack_priority(c: &Configuration) -> Block {
    (0..c.num_stacks())
        .map(|s| c.stack_priority(s))
        .max()
        .unwrap_or(EMPTY_STACK_PRIORITY)
}

pub fn lb1(c: &Configuration) -> BoundReport {
    lb1_with(c, &BoundOptions::default())
}

pub fn lb1_with(c: &Configuration, opts: &BoundOptions) -> BoundReport {
    let c = prepared(c, opts);
    let bp = c.bp_set();
    BoundReport::plain(BoundKind::Lb1, bp.len(), bp)
}

pub fn lb2(c: &Configuration) -> BoundReport {
    lb2_with(c, &BoundOptions::default())
}

pub fn lb2_with(c: &Configuration, opts: &BoundOptions) -> BoundReport {
    let c = prepared(c, opts);
    let bp = c.bp_set();
    let tops: Option<Vec<Block>> = (0..c.num_stacks()).map(|s| c.top(s)).collect();
    let holds = match tops {
        Some(tops) if !tops.is_empty() => {
            tops.iter().copied().min().unwrap() > max_stack_priority(&c)
        }
        _ => false,
    };
    BoundReport::plain(BoundKind::Lb2, bp.len() + holds as usize, bp)
}

/// Largest `k` whose top `k` layers satisfy the LB3 conditions.
fn top_layer_count(c: &Configuration) -> usize {
    let Some(target) = c.target_block() else {
        return 0;
    };
    let (ts, td) = c.position(target).unwrap();
    let shortest = c.stacks().iter().map(Vec::len).min().unwrap_or(0);
    let mut min_bp = EMPTY_STACK_PRIORITY;
    let mut k = 0;
    while k < shortest {
        let next = k + 1;
        // The target must stay strictly below the top `next` layers.
        if td + next >= c.stack(ts).len() {
            break;
        }
        for st in c.stacks() {
            let b = st[st.len() - next];
            if st[..st.len() - next].iter().any(|&x| x < b) {
                min_bp = min_bp.min(b);
            }
        }
        let rhs = c
            .stacks()
            .iter()
            .map(|st| stack_min(&st[..st.len() - k]))
            .max()
            .unwrap();
        if min_bp == EMPTY_STACK_PRIORITY || min_bp <= rhs {
            break;
        }
        k = next;
    }
    k
}

pub fn lb3(c: &Configuration) -> BoundReport {
    lb3_with(c, &BoundOptions::default())
}

pub fn lb3_with(c: &Configuration, opts: &BoundOptions) -> BoundReport {
    let c = prepared(c, opts);
    let bp = c.bp_set();
    let k = top_layer_count(&c);
    let mut r = BoundReport::plain(BoundKind::Lb3, bp.len() + k, bp);
    r.top_layers = k;
    r
}

/// Runs the relocation experiment target by target. Returns the blocking set
/// of the first target whose overlying blocks cannot all be made well placed
/// with one relocation each.
pub fn relocation_experiment(c: &Configuration) -> Option<Vec<Block>> {
    let mut cur = c.clone();
    while let Some(target) = cur.target_block() {
        let (ts, td) = cur.position(target).unwrap();
        let above: Vec<Block> = cur.stack(ts)[td + 1..].iter().rev().copied().collect();
        let mut prio: Vec<(usize, Block)> = (0..cur.num_stacks())
            .filter(|&s| s != ts)
            .map(|s| (s, cur.stack_priority(s)))
            .collect();
        for &b in &above {
            // Best fit: the tightest stack that keeps `b` well placed.
            let slot = prio
                .iter_mut()
                .filter(|(_, p)| *p > b)
                .min_by_key(|(_, p)| *p);
            match slot {
                Some((_, p)) => *p = b,
                None => {
                    let mut set = above.clone();
                    set.extend(
                        (0..cur.num_stacks())
                            .filter(|&s| s != ts && !cur.stack(s).is_empty())
                            .map(|s| cur.stack_priority(s)),
                    );
                    return Some(set);
                }
            }
        }
        cur.remove_from(target).unwrap();
    }
    None
}

pub fn lb_n(c: &Configuration) -> BoundReport {
    lb_n_with(c, &BoundOptions::default())
}

pub fn lb_n_with(c: &Configuration, opts: &BoundOptions) -> BoundReport {
    let c = prepared(c, opts);
    let bp = c.bp_set();
    let set = relocation_experiment(&c);
    let mut r = BoundReport::plain(BoundKind::LbN, bp.len() + set.is_some() as usize, bp);
    r.blocking_set = set;
    r
}

/// Layer search state: the picked index in every stack.
struct LayerSearch<'a> {
    c: &'a Configuration,
    excluded: &'a BTreeSet<Block>,
    /// A stack whose pick may not move.
    fixed: Option<usize>,
}

impl LayerSearch<'_> {
    /// Highest index at or below `from` holding a non-excluded block.
    fn available_at_or_below(&self, s: usize, from: usize) -> Option<usize> {
        let st = self.c.stack(s);
        (0..=from.min(st.len().checked_sub(1)?))
            .rev()
            .find(|&d| !self.excluded.contains(&st[d]))
    }

    fn is_wp(&self, s: usize, d: usize) -> bool {
        let st = self.c.stack(s);
        st[..d].iter().all(|&x| x > st[d])
    }

    /// Replaces failing picks by the next available block below until every
    /// pick passes, restarting the scan after each replacement.
    fn run(&self, mut picks: Vec<usize>) -> Option<VirtualLayer> {
        let c = self.c;
        loop {
            let min_below = (0..c.num_stacks())
                .map(|s| stack_min(&c.stack(s)[..picks[s]]))
                .min()
                .unwrap_or(EMPTY_STACK_PRIORITY);
            let max_min = (0..c.num_stacks())
                .map(|s| stack_min(&c.stack(s)[..=picks[s]]))
                .max()
                .unwrap_or(EMPTY_STACK_PRIORITY);
            let failing = (0..c.num_stacks()).find(|&s| {
                let b = c.stack(s)[picks[s]];
                if self.is_wp(s, picks[s]) {
                    b <= min_below
                } else {
                    b <= max_min
                }
            });
            let Some(s) = failing else {
                return Some(VirtualLayer {
                    picks: picks
                        .iter()
                        .enumerate()
                        .map(|(s, &d)| Pick {
                            stack: s,
                            depth: d,
                            block: c.stack(s)[d],
                        })
                        .collect(),
                });
            };
            if self.fixed == Some(s) || picks[s] == 0 {
                return None;
            }
            picks[s] = self.available_at_or_below(s, picks[s] - 1)?;
        }
    }

    /// Starting picks: the highest available block at or below `start[s]`.
    fn start(&self, start: &[Option<usize>]) -> Option<Vec<usize>> {
        start
            .iter()
            .enumerate()
            .map(|(s, &from)| self.available_at_or_below(s, from?))
            .collect()
    }
}

/// Searches for a virtual layer satisfying the layer property, using only
/// blocks outside `excluded`.
pub fn find_virtual_layer(c: &Configuration, excluded: &BTreeSet<Block>) -> Option<VirtualLayer> {
    if c.num_stacks() == 0 {
        return None;
    }
    let search = LayerSearch {
        c,
        excluded,
        fixed: None,
    };
    let start: Vec<Option<usize>> = c.stacks().iter().map(|st| st.len().checked_sub(1)).collect();
    search.run(search.start(&start)?)
}

/// Searches for two overlapped virtual layers around the well placed block
/// `shared`, using only blocks outside `excluded`.
pub fn find_overlapped_layers(
    c: &Configuration,
    shared: Block,
    excluded: &BTreeSet<Block>,
) -> Option<OverlappedLayers> {
    if c.num_stacks() < 2 || excluded.contains(&shared) {
        return None;
    }
    let (ss, sd) = c.position(shared)?;
    let mut search = LayerSearch {
        c,
        excluded,
        fixed: Some(ss),
    };
    if !search.is_wp(ss, sd) {
        return None;
    }

    let start: Vec<Option<usize>> = (0..c.num_stacks())
        .map(|s| {
            if s == ss {
                Some(sd)
            } else {
                c.stack(s).len().checked_sub(1)
            }
        })
        .collect();
    let upper = search.run(search.start(&start)?)?;

    let max_min = upper
        .picks
        .iter()
        .map(|p| stack_min(&c.stack(p.stack)[..=p.depth]))
        .max()
        .unwrap();
    if max_min != shared {
        return None;
    }

    let start: Vec<Option<usize>> = upper
        .picks
        .iter()
        .map(|p| if p.stack == ss { Some(sd) } else { p.depth.checked_sub(1) })
        .collect();
    search.fixed = Some(ss);
    let lower = search.run(search.start(&start)?)?;
    Some(OverlappedLayers {
        upper,
        lower,
        shared,
    })
}

/// Well placed blocks whose priority number exceeds every other stack's
/// priority, in increasing order.
fn shared_candidates(c: &Configuration) -> Vec<Block> {
    let n = c.num_stacks();
    let prio: Vec<Block> = (0..n).map(|s| c.stack_priority(s)).collect();
    let mut out = Vec::new();
    for s in 0..n {
        let others = (0..n).filter(|&t| t != s).map(|t| prio[t]).max();
        let Some(others) = others else { continue };
        let mut min_below = EMPTY_STACK_PRIORITY;
        for &b in c.stack(s) {
            if b < min_below && b > others {
                out.push(b);
            }
            min_below = min_below.min(b);
        }
    }
    out.sort_unstable();
    out
}

pub fn lb4(c: &Configuration) -> BoundReport {
    lb4_with(c, &BoundOptions::default())
}

pub fn lb4_with(c: &Configuration, opts: &BoundOptions) -> BoundReport {
    let c = prepared(c, opts);
    let bp = c.bp_set();
    let mut excluded = BTreeSet::new();

    let mut overlapped = Vec::new();
    for w in shared_candidates(&c) {
        match find_overlapped_layers(&c, w, &excluded) {
            Some(ov) => {
                excluded.extend(ov.blocks());
                overlapped.push(ov);
            }
            None if opts.continue_after_miss => continue,
            None => break,
        }
    }

    let mut layers = Vec::new();
    while let Some(layer) = find_virtual_layer(&c, &excluded) {
        excluded.extend(layer.blocks());
        layers.push(layer);
    }

    let mut residue = c.clone();
    for &b in &excluded {
        if residue.position(b).is_some() {
            residue.remove_from(b).unwrap();
        }
    }
    let blocking_set = relocation_experiment(&residue);

    let value = bp.len() + 2 * overlapped.len() + layers.len() + blocking_set.is_some() as usize;
    BoundReport {
        kind: BoundKind::Lb4,
        value,
        bp_set: bp,
        top_layers: 0,
        overlapped,
        layers,
        blocking_set,
    }
}

pub fn bound(c: &Configuration, kind: BoundKind) -> BoundReport {
    bound_with(c, kind, &BoundOptions::default())
}

pub fn bound_with(c: &Configuration, kind: BoundKind, opts: &BoundOptions) -> BoundReport {
    match kind {
        BoundKind::Lb1 => lb1_with(c, opts),
        BoundKind::Lb2 => lb2_with(c, opts),
        BoundKind::Lb3 => lb3_with(c, opts),
        BoundKind::LbN => lb_n_with(c, opts),
        BoundKind::Lb4 => lb4_with(c, opts),
    }
}

pub fn all_bounds(c: &Configuration) -> Bounds {
    all_bounds_with(c, &BoundOptions::default())
}

pub fn all_bounds_with(c: &Configuration, opts: &BoundOptions) -> Bounds {
    let c = prepared(c, opts);
    let inner = BoundOptions {
        keep_retrievable: true,
        ..*opts
    };
    Bounds {
        lb1: lb1_with(&c, &inner).value,
        lb2: lb2_with(&c, &inner).value,
        lb3: lb3_with(&c, &inner).value,
        lbn: lb_n_with(&c, &inner).value,
        lb4: lb4_with(&c, &inner).value,
    }
}

/// Checks the layer property in its set form: some block below the layer
/// outranks every layer block, and every badly placed layer block ranks below
/// the lowest stack priority once the blocks above the layer are removed.
pub fn satisfies_layer_property(c: &Configuration, layer: &VirtualLayer) -> bool {
    if layer.picks.len() != c.num_stacks() {
        return false;
    }
    for (s, p) in layer.picks.iter().enumerate() {
        if p.stack != s || c.stack(s).get(p.depth) != Some(&p.block) {
            return false;
        }
    }
    let blocks = layer.blocks();
    let best_in_layer = *blocks.iter().min().unwrap();
    let below_outranks = layer
        .picks
        .iter()
        .flat_map(|p| c.stack(p.stack)[..p.depth].iter())
        .any(|&x| x < best_in_layer);
    let cut_priority = layer
        .picks
        .iter()
        .map(|p| stack_min(&c.stack(p.stack)[..=p.depth]))
        .max()
        .unwrap();
    let bp_ok = layer
        .picks
        .iter()
        .filter(|p| c.stack(p.stack)[..p.depth].iter().any(|&x| x < p.block))
        .all(|p| p.block > cut_priority);
    below_outranks && bp_ok
}

/// Checks the overlapped-layers property in set form.
pub fn satisfies_overlap_property(c: &Configuration, ov: &OverlappedLayers) -> bool {
    if !satisfies_layer_property(c, &ov.upper) || !satisfies_layer_property(c, &ov.lower) {
        return false;
    }
    let mut shared_count = 0;
    for (u, l) in ov.upper.picks.iter().zip(&ov.lower.picks) {
        if u.block == l.block {
            shared_count += 1;
            if u.block != ov.shared {
                return false;
            }
        } else if l.depth >= u.depth {
            return false;
        }
    }
    let Some((s, d)) = c.position(ov.shared) else {
        return false;
    };
    let shared_wp = c.stack(s)[..d].iter().all(|&x| x > ov.shared);
    let cut_priority = ov
        .upper
        .picks
        .iter()
        .map(|p| stack_min(&c.stack(p.stack)[..=p.depth]))
        .max()
        .unwrap();
    shared_count == 1 && shared_wp && cut_priority == ov.shared
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure_a, figure_b};

    fn values(c: &Configuration) -> (usize, usize, usize, usize, usize) {
        let b = all_bounds(c);
        (b.lb1, b.lb2, b.lb3, b.lbn, b.lb4)
    }

    #[test]
    fn figure_a_bounds() {
        assert_eq!(values(&figure_a()), (2, 2, 2, 3, 3));
    }

    #[test]
    fn figure_b_bounds() {
        assert_eq!(values(&figure_b()), (8, 9, 10, 9, 12));
        assert_eq!(lb3(&figure_b()).top_layers, 2);
    }

    #[test]
    fn figure_b_certificate() {
        let c = figure_b();
        let r = lb4(&c);
        assert_eq!(r.overlapped.len(), 1);
        let ov = &r.overlapped[0];
        assert_eq!(ov.shared, 5);
        assert_eq!(ov.upper.blocks(), vec![16, 17, 5, 19]);
        assert_eq!(ov.lower.blocks(), vec![6, 14, 5, 4]);
        let layers: Vec<_> = r.layers.iter().map(VirtualLayer::blocks).collect();
        assert_eq!(layers, vec![vec![2, 12, 18, 8], vec![3, 10, 7, 9]]);
        assert!(r.blocking_set.is_none());
        assert!(satisfies_overlap_property(&c, ov));
        assert!(r.layers.iter().all(|l| satisfies_layer_property(&c, l)));
    }

    #[test]
    fn figure_a_has_no_layers() {
        let c = figure_a();
        assert!(find_virtual_layer(&c, &BTreeSet::new()).is_none());
        for w in c.blocks() {
            assert!(find_overlapped_layers(&c, w, &BTreeSet::new()).is_none());
        }
        let r = lb4(&c);
        assert!(r.overlapped.is_empty() && r.layers.is_empty());
        assert_eq!(r.blocking_set, Some(vec![5, 6, 7, 2, 3]));
    }

    #[test]
    fn figure_b_layer_after_excluding_the_overlap() {
        let c = figure_b();
        let excluded: BTreeSet<Block> = [16, 17, 5, 19, 6, 14, 4].into();
        let l = find_virtual_layer(&c, &excluded).unwrap();
        assert_eq!(l.blocks(), vec![2, 12, 18, 8]);
    }

    #[test]
    fn figure_b_experiment_blocks_on_17() {
        let set = relocation_experiment(&figure_b()).unwrap();
        assert_eq!(set, vec![17, 14, 12, 10, 2, 5, 4]);
    }

    #[test]
    fn no_bp_blocks_gives_zero_everywhere() {
        let c = Configuration::from_stacks(&[vec![3, 2], vec![4, 1]]);
        assert_eq!(values(&c), (0, 0, 0, 0, 0));
    }

    #[test]
    fn exposed_target_gives_no_top_layers() {
        let c = Configuration::from_stacks(&[vec![3, 1], vec![2, 4]]);
        let opts = BoundOptions {
            keep_retrievable: true,
            ..Default::default()
        };
        assert_eq!(lb3_with(&c, &opts).top_layers, 0);
    }

    #[test]
    fn single_stack_top_is_its_own_minimum() {
        let c = Configuration::from_stacks(&[[2, 1]]);
        let opts = BoundOptions {
            keep_retrievable: true,
            ..Default::default()
        };
        assert_eq!(lb2_with(&c, &opts).value, lb1_with(&c, &opts).value);
        assert_eq!(lb2_with(&c, &opts).value, 0);
    }

    #[test]
    fn empty_stack_defeats_layer_conditions() {
        let c = Configuration::from_stacks(&[vec![1, 3, 2], vec![]]);
        assert_eq!(lb2(&c).value, lb1(&c).value);
        assert_eq!(lb3(&c).value, lb1(&c).value);
    }

    #[test]
    fn one_block_stacks_have_no_overlap() {
        let c = Configuration::from_stacks(&[vec![2], vec![1], vec![3]]);
        for w in c.blocks() {
            assert!(find_overlapped_layers(&c, w, &BTreeSet::new()).is_none());
        }
    }

    #[test]
    fn bound_kind_names() {
        let names: Vec<String> = BoundKind::ALL.iter().map(|k| k.to_string()).collect();
        assert_eq!(names, ["LB1", "LB2", "LB3", "LB-N", "LB4"]);
    }
}
