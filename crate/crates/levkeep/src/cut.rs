//! Cut enumeration over a depth-bounded window below a root node.
//!
//! A cut of `root` is a set of leaf nodes such that every path from the
//! root to an input crosses a leaf; the logic strictly between them is the
//! cut's cone. Cuts carry the cone's function as a truth table over the
//! sorted leaf list, computed while cuts are merged bottom-up.
//!
//! Enumeration never leaves a window below the root — nodes more than
//! `depth_window` levels down or beyond the `max_cone` budget become
//! frontier leaves — which keeps the per-root cost independent of graph
//! size.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::aig::{AigGraph, NodeId};
use crate::level::LevelMap;

/// Variable masks for truth tables of up to six inputs: `VAR[i]` is the
/// function "input i" over 64 minterm bits.
pub const VAR: [u64; 6] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];

/// All-ones table over `nvars` inputs.
pub fn tt_mask(nvars: usize) -> u64 {
    debug_assert!(nvars <= 6);
    if nvars == 6 {
        u64::MAX
    } else {
        (1u64 << (1usize << nvars)) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    /// Sorted by id; at most six entries so the table fits one word.
    pub leaves: Vec<NodeId>,
    /// Function of the root node (plain polarity) over the leaves, stored
    /// in the low `2^leaves.len()` bits.
    pub tt: u64,
}

impl Cut {
    pub fn trivial(n: NodeId) -> Cut {
        Cut { leaves: vec![n], tt: VAR[0] & tt_mask(1) }
    }

    pub fn is_trivial_for(&self, root: NodeId) -> bool {
        self.leaves.len() == 1 && self.leaves[0] == root
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CutParams {
    /// Maximum leaves per cut, clamped to 2..=6.
    pub max_leaves: usize,
    /// Cuts kept per node after pruning.
    pub max_cuts: usize,
    /// Levels below the root the window may reach.
    pub depth_window: u32,
    /// Node budget for the window.
    pub max_cone: usize,
}

impl Default for CutParams {
    fn default() -> CutParams {
        CutParams { max_leaves: 6, max_cuts: 8, depth_window: 10, max_cone: 64 }
    }
}

impl CutParams {
    pub fn with_max_leaves(k: usize) -> CutParams {
        CutParams { max_leaves: k.clamp(2, 6), ..CutParams::default() }
    }
}

/// Rewrite `tt` over `old` leaves as a table over `new` leaves, where
/// `old` is a subset of `new`.
fn expand(tt: u64, old: &[NodeId], new: &[NodeId]) -> u64 {
    if old.len() == new.len() {
        return tt;
    }
    let mut pos = [0usize; 6];
    for (i, l) in old.iter().enumerate() {
        pos[i] = new.binary_search(l).expect("old leaves are kept");
    }
    let mut out = 0u64;
    for m in 0..1u32 << new.len() {
        let mut idx = 0usize;
        for (i, p) in pos.iter().enumerate().take(old.len()) {
            idx |= ((m as usize >> p) & 1) << i;
        }
        out |= ((tt >> idx) & 1) << m;
    }
    out
}

/// Union of two sorted leaf lists, or None when it exceeds `max`.
fn merge_leaves(a: &[NodeId], b: &[NodeId], max: usize) -> Option<Vec<NodeId>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            if j < b.len() && a[i] == b[j] {
                j += 1;
            }
            let v = a[i];
            i += 1;
            v
        } else {
            let v = b[j];
            j += 1;
            v
        };
        if out.len() == max {
            return None;
        }
        out.push(next);
    }
    Some(out)
}

/// Enumerate the cuts of `root`, trivial cut included. `lv` supplies the
/// levels that define the window; inside the bounded flow the root's whole
/// fan-in cone is already settled, so those entries are exact.
pub fn enumerate_cuts(g: &AigGraph, root: NodeId, lv: &LevelMap, p: &CutParams) -> Vec<Cut> {
    if !g.is_and(root) {
        return vec![Cut::trivial(root)];
    }
    let k = p.max_leaves.clamp(2, 6);
    let root_level = lv.get(root);

    // Window collection: breadth-first over fanins, frontier at the depth
    // window, the node budget, and non-AND nodes.
    let mut in_cone: HashSet<NodeId> = HashSet::new();
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    in_cone.insert(root);
    queue.push_back(root);
    while let Some(n) = queue.pop_front() {
        let (f0, f1) = g.fanins(n).expect("cone nodes are ANDs");
        for e in [f0, f1] {
            let f = e.target;
            if in_cone.contains(&f)
                || !g.is_and(f)
                || root_level.saturating_sub(lv.get(f)) >= p.depth_window
                || in_cone.len() >= p.max_cone
            {
                continue;
            }
            in_cone.insert(f);
            queue.push_back(f);
        }
    }

    // Local topological order over the window, fanins first.
    let mut order: Vec<NodeId> = Vec::with_capacity(in_cone.len());
    let mut done: HashSet<NodeId> = HashSet::new();
    let mut stack: Vec<(NodeId, bool)> = vec![(root, false)];
    while let Some((n, expanded)) = stack.pop() {
        if expanded {
            order.push(n);
            continue;
        }
        if done.contains(&n) {
            continue;
        }
        done.insert(n);
        stack.push((n, true));
        let (f0, f1) = g.fanins(n).expect("cone nodes are ANDs");
        for e in [f0, f1] {
            if in_cone.contains(&e.target) && !done.contains(&e.target) {
                stack.push((e.target, false));
            }
        }
    }

    let mut cuts: HashMap<NodeId, Vec<Cut>> = HashMap::new();
    for &n in &order {
        let (f0, f1) = g.fanins(n).expect("cone nodes are ANDs");
        let side = |e: crate::aig::Edge, cuts: &HashMap<NodeId, Vec<Cut>>| -> Vec<Cut> {
            match cuts.get(&e.target) {
                Some(cs) if in_cone.contains(&e.target) => cs.clone(),
                _ => vec![Cut::trivial(e.target)],
            }
        };
        let c0s = side(f0, &cuts);
        let c1s = side(f1, &cuts);
        let mut cand: Vec<Cut> = vec![Cut::trivial(n)];
        for c0 in &c0s {
            for c1 in &c1s {
                let Some(leaves) = merge_leaves(&c0.leaves, &c1.leaves, k) else {
                    continue;
                };
                let mut t0 = expand(c0.tt, &c0.leaves, &leaves);
                let mut t1 = expand(c1.tt, &c1.leaves, &leaves);
                let mask = tt_mask(leaves.len());
                if f0.complemented {
                    t0 = !t0 & mask;
                }
                if f1.complemented {
                    t1 = !t1 & mask;
                }
                cand.push(Cut { leaves, tt: t0 & t1 & mask });
            }
        }
        cand.sort_by(|a, b| a.leaves.len().cmp(&b.leaves.len()).then_with(|| a.leaves.cmp(&b.leaves)));
        cand.dedup_by(|a, b| a.leaves == b.leaves);
        // Dominance: drop any cut whose leaves contain a kept cut's leaves.
        let mut kept: Vec<Cut> = Vec::with_capacity(p.max_cuts);
        'next: for c in cand {
            for kc in &kept {
                if kc.leaves.iter().all(|l| c.leaves.binary_search(l).is_ok()) {
                    continue 'next;
                }
            }
            kept.push(c);
            if kept.len() == p.max_cuts {
                break;
            }
        }
        cuts.insert(n, kept);
    }
    cuts.remove(&root).expect("root is processed")
}

/// The nodes strictly inside the cut (root included, leaves excluded), in
/// topological order. Empty for the trivial cut of the root itself.
pub fn cut_cone(g: &AigGraph, root: NodeId, cut: &Cut) -> Vec<NodeId> {
    if cut.is_trivial_for(root) {
        return Vec::new();
    }
    let leaf: HashSet<NodeId> = cut.leaves.iter().copied().collect();
    let mut cone = Vec::new();
    let mut done: HashSet<NodeId> = HashSet::new();
    let mut stack: Vec<(NodeId, bool)> = vec![(root, false)];
    while let Some((n, expanded)) = stack.pop() {
        if expanded {
            cone.push(n);
            continue;
        }
        if done.contains(&n) {
            continue;
        }
        done.insert(n);
        stack.push((n, true));
        let (f0, f1) = g.fanins(n).expect("cone nodes are ANDs");
        for e in [f0, f1] {
            if !leaf.contains(&e.target) && !done.contains(&e.target) {
                debug_assert!(g.is_and(e.target), "cut does not separate the root");
                stack.push((e.target, false));
            }
        }
    }
    cone
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::Edge;
    use crate::level::compute_levels_full;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Evaluate the node function under an assignment of the cut leaves.
    fn eval_cone(g: &AigGraph, n: NodeId, cut: &Cut, minterm: u32) -> bool {
        if let Ok(i) = cut.leaves.binary_search(&n) {
            return (minterm >> i) & 1 == 1;
        }
        let (f0, f1) = g.fanins(n).expect("inside the cone");
        let v0 = eval_cone(g, f0.target, cut, minterm) ^ f0.complemented;
        let v1 = eval_cone(g, f1.target, cut, minterm) ^ f1.complemented;
        v0 && v1
    }

    fn check_cut_invariants(g: &AigGraph, root: NodeId, cuts: &[Cut], p: &CutParams) {
        assert!(!cuts.is_empty());
        assert!(cuts.len() <= p.max_cuts);
        for c in cuts {
            assert!(!c.leaves.is_empty() && c.leaves.len() <= p.max_leaves);
            assert!(c.leaves.windows(2).all(|w| w[0] < w[1]), "sorted unique");
            // Separation: walking fanins from the root only ends at leaves.
            if !c.is_trivial_for(root) {
                let cone = cut_cone(g, root, c);
                assert!(cone.contains(&root));
                // Truth table against direct evaluation.
                for m in 0..1u32 << c.leaves.len() {
                    let want = eval_cone(g, root, c, m);
                    assert_eq!((c.tt >> m) & 1 == 1, want, "minterm {m} of {c:?}");
                }
            }
            // No kept cut dominates another.
            for d in cuts {
                if std::ptr::eq(c, d) {
                    continue;
                }
                assert!(
                    !c.leaves.iter().all(|l| d.leaves.binary_search(l).is_ok()),
                    "{c:?} dominates kept {d:?}"
                );
            }
        }
    }

    #[test]
    fn cuts_of_a_two_level_cone() {
        let mut g = AigGraph::new(4);
        let e: Vec<Edge> = (0..4).map(|i| Edge::new(g.input(i), false)).collect();
        let ab = g.add_and(e[0], e[1]);
        let cd = g.add_and(e[2], e[3]);
        let root = g.add_and(ab, cd.complement());
        g.add_po(root);
        let lv = compute_levels_full(&g);
        let p = CutParams::default();
        let cuts = enumerate_cuts(&g, root.target, &lv, &p);
        let leaf_sets: Vec<Vec<NodeId>> = cuts.iter().map(|c| c.leaves.clone()).collect();
        assert!(leaf_sets.contains(&vec![root.target]));
        assert!(leaf_sets.contains(&vec![ab.target, cd.target]));
        assert!(leaf_sets.contains(&vec![g.input(0), g.input(1), g.input(2), g.input(3)]));
        check_cut_invariants(&g, root.target, &cuts, &p);

        // ab & !cd over the four inputs, bits in input order.
        let full = cuts
            .iter()
            .find(|c| c.leaves == vec![g.input(0), g.input(1), g.input(2), g.input(3)])
            .unwrap();
        let want = VAR[0] & VAR[1] & !(VAR[2] & VAR[3]) & tt_mask(4);
        assert_eq!(full.tt, want);
    }

    #[test]
    fn truth_tables_match_simulation_on_random_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..12 {
            let mut g = AigGraph::new(5);
            let mut pool: Vec<Edge> = g.inputs().map(|n| Edge::new(n, false)).collect();
            for _ in 0..30 {
                let a = pool[rng.gen_range(0..pool.len())];
                let b = pool[rng.gen_range(0..pool.len())];
                let e = g.add_and(
                    Edge::new(a.target, rng.gen_bool(0.5)),
                    Edge::new(b.target, rng.gen_bool(0.5)),
                );
                pool.push(e);
            }
            let lv = compute_levels_full(&g);
            let p = CutParams::default();
            for root in g.and_ids().collect::<Vec<_>>() {
                let cuts = enumerate_cuts(&g, root, &lv, &p);
                check_cut_invariants(&g, root, &cuts, &p);
            }
        }
    }

    #[test]
    fn window_bounds_cone_depth_and_size() {
        // A 30-deep chain: with a 10-level window no cone node sits more
        // than 9 levels below the root, whatever the cut.
        let mut g = AigGraph::new(2);
        let a = Edge::new(g.input(0), false);
        let b = Edge::new(g.input(1), false);
        let mut cur = g.add_and(a, b);
        for i in 0..30 {
            let side = if i % 2 == 0 { a } else { b };
            cur = g.add_and(cur, if i % 3 == 0 { side.complement() } else { side });
        }
        g.add_po(cur);
        let lv = compute_levels_full(&g);
        let p = CutParams { depth_window: 10, max_cone: 1000, ..CutParams::default() };
        let root = cur.target;
        let cuts = enumerate_cuts(&g, root, &lv, &p);
        for c in &cuts {
            for n in cut_cone(&g, root, c) {
                assert!(lv.get(root) - lv.get(n) < p.depth_window);
            }
        }

        let tight = CutParams { max_cone: 4, ..CutParams::default() };
        for c in enumerate_cuts(&g, root, &lv, &tight) {
            assert!(cut_cone(&g, root, &c).len() <= 4);
        }
    }

    #[test]
    fn expand_keeps_minterms_aligned() {
        let old = vec![NodeId(3), NodeId(9)];
        let new = vec![NodeId(3), NodeId(5), NodeId(9)];
        // f = old0 & !old1 over two vars.
        let tt = VAR[0] & !VAR[1] & tt_mask(2);
        let wide = expand(tt, &old, &new);
        assert_eq!(wide, VAR[0] & !VAR[2] & tt_mask(3));
    }
}
