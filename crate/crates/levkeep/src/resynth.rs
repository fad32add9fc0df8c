//! Resynthesis of cut functions: sum-of-products extraction, algebraic
//! factoring, and construction of the replacement cone.
//!
//! A candidate is built inside a transaction so a losing probe can be
//! rolled back wholesale. Construction may reuse pre-existing nodes
//! through structural hashing, but only handled ones: a handled node was
//! popped before the current site, so its fan-in cone cannot contain the
//! site and the replacement can never close a cycle. The builder refuses
//! anything else.

use std::collections::{HashMap, HashSet};

use crate::aig::{AigGraph, Edge, NodeId};
use crate::cut::{tt_mask, VAR};
use crate::level::LevelMap;
use crate::order::HandleMap;

/// One product term over the cut leaves: bit `i` of `pos`/`neg` selects
/// the plain/complemented literal of leaf `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cube {
    pub pos: u8,
    pub neg: u8,
}

impl Cube {
    pub fn tautology() -> Cube {
        Cube { pos: 0, neg: 0 }
    }

    pub fn num_literals(self) -> u32 {
        (self.pos | self.neg).count_ones()
    }

    pub fn tt(self, nvars: usize) -> u64 {
        let mut t = tt_mask(nvars);
        for i in 0..nvars {
            if self.pos >> i & 1 == 1 {
                t &= VAR[i];
            }
            if self.neg >> i & 1 == 1 {
                t &= !VAR[i];
            }
        }
        t & tt_mask(nvars)
    }
}

pub fn cover_tt(cubes: &[Cube], nvars: usize) -> u64 {
    cubes.iter().fold(0, |acc, c| acc | c.tt(nvars))
}

fn cofactors(t: u64, i: usize) -> (u64, u64) {
    let shift = 1u32 << i;
    let lo = t & !VAR[i];
    let hi = t & VAR[i];
    (lo | (lo << shift), hi | (hi >> shift))
}

/// Irredundant sum-of-products of `tt` over `nvars` leaves, by recursive
/// cofactoring. The result covers `tt` exactly and no cube is removable.
pub fn isop(tt: u64, nvars: usize) -> Vec<Cube> {
    debug_assert!(nvars <= 6);
    let mask = tt_mask(nvars);
    let (cubes, built) = isop_rec(tt & mask, tt & mask, nvars);
    debug_assert_eq!(built, tt & mask);
    cubes
}

/// Minimal cover `c` with `lower <= c <= upper`; returns it with its table.
fn isop_rec(lower: u64, upper: u64, nvars: usize) -> (Vec<Cube>, u64) {
    debug_assert_eq!(lower & !upper, 0);
    if lower == 0 {
        return (Vec::new(), 0);
    }
    let mask = tt_mask(nvars);
    if upper == mask {
        return (vec![Cube::tautology()], mask);
    }
    // Split on the top variable either bound depends on.
    let mut var = None;
    for i in (0..nvars).rev() {
        let (l0, l1) = cofactors(lower, i);
        let (u0, u1) = cofactors(upper, i);
        if l0 != l1 || u0 != u1 {
            var = Some(i);
            break;
        }
    }
    let i = var.expect("non-constant bounds depend on a variable");
    let (l0, l1) = cofactors(lower, i);
    let (u0, u1) = cofactors(upper, i);

    // Minterms only coverable with the negative / positive literal.
    let (mut c0, t0) = isop_rec(l0 & !u1 & mask, u0 & mask, nvars);
    let (mut c1, t1) = isop_rec(l1 & !u0 & mask, u1 & mask, nvars);
    let rest = (l0 & !t0) | (l1 & !t1);
    let (cd, td) = isop_rec(rest & mask, u0 & u1 & mask, nvars);

    for c in &mut c0 {
        c.neg |= 1 << i;
    }
    for c in &mut c1 {
        c.pos |= 1 << i;
    }
    let table = (t0 & !VAR[i]) | (t1 & VAR[i]) | td;
    let mut cubes = c0;
    cubes.extend(c1);
    cubes.extend(cd);
    (cubes, table & mask)
}

/// How a factored form is mapped onto AND gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildStyle {
    /// Pair the two shallowest operands first; minimizes depth.
    Balanced,
    /// Fold strictly left to right; re-associates the same function into a
    /// different (usually deeper) shape.
    LeftChain,
}

/// Result of constructing a replacement cone.
#[derive(Debug, Clone, Copy)]
pub struct Built {
    pub root: Edge,
    /// Level of the root computed from the leaf levels during the build;
    /// exact, including for reused nodes.
    pub level: u32,
    /// AND nodes newly created for this cone.
    pub created: usize,
}

struct Builder<'a> {
    g: &'a mut AigGraph,
    site: NodeId,
    handled: &'a HandleMap,
    floor: u32,
    levels: HashMap<NodeId, u32>,
}

impl<'a> Builder<'a> {
    fn level(&self, e: Edge) -> u32 {
        self.levels.get(&e.target).copied().unwrap_or(0)
    }

    /// AND of two edges; `None` when structural hashing resolved to a node
    /// whose reuse could close a cycle (the site itself, or any
    /// pre-existing unhandled node).
    fn and(&mut self, a: Edge, b: Edge) -> Option<Edge> {
        let lvl = 1 + self.level(a).max(self.level(b));
        let e = self.g.add_and(a, b);
        let t = e.target;
        if t == self.site {
            return None;
        }
        if t.0 < self.floor && self.g.is_and(t) && !self.handled.is_handled(t) {
            return None;
        }
        // A fold resolves to an operand (already mapped) or the constant;
        // anything else — fresh or reused — sits one above its operands.
        if t != NodeId::CONST {
            self.levels.entry(t).or_insert(lvl);
        }
        Some(e)
    }

    /// Combine operands into one edge according to the style.
    fn reduce(&mut self, mut ops: Vec<Edge>, or: bool, style: BuildStyle) -> Option<Edge> {
        debug_assert!(!ops.is_empty());
        while ops.len() > 1 {
            let (i, j) = match style {
                BuildStyle::LeftChain => (0, 1),
                BuildStyle::Balanced => {
                    // Two shallowest operands, stable on ties.
                    let mut idx: Vec<usize> = (0..ops.len()).collect();
                    idx.sort_by_key(|&k| (self.level(ops[k]), k));
                    (idx[0].min(idx[1]), idx[0].max(idx[1]))
                }
            };
            let b = ops.remove(j);
            let a = ops.remove(i);
            let combined = if or {
                self.and(a.complement(), b.complement())?.complement()
            } else {
                self.and(a, b)?
            };
            ops.insert(i, combined);
        }
        Some(ops.pop().expect("one operand left"))
    }

    fn cube_ops(&self, c: Cube, leaves: &[NodeId]) -> Vec<Edge> {
        let mut ops = Vec::with_capacity(c.num_literals() as usize);
        for (i, &l) in leaves.iter().enumerate() {
            if c.pos >> i & 1 == 1 {
                ops.push(Edge::new(l, false));
            }
            if c.neg >> i & 1 == 1 {
                ops.push(Edge::new(l, true));
            }
        }
        ops
    }

    fn build_cube(&mut self, c: Cube, leaves: &[NodeId], style: BuildStyle) -> Option<Edge> {
        if c.num_literals() == 0 {
            return Some(Edge::constant(true));
        }
        let ops = self.cube_ops(c, leaves);
        self.reduce(ops, false, style)
    }

    /// Algebraic factoring by the most frequent literal.
    fn build_factored(
        &mut self,
        cubes: &[Cube],
        leaves: &[NodeId],
        style: BuildStyle,
    ) -> Option<Edge> {
        if cubes.is_empty() {
            return Some(Edge::constant(false));
        }
        if cubes.iter().any(|c| c.num_literals() == 0) {
            return Some(Edge::constant(true));
        }
        if cubes.len() == 1 {
            return self.build_cube(cubes[0], leaves, style);
        }
        // Most frequent literal; ties go to the lowest variable, plain
        // polarity first.
        let mut best = (0usize, 0usize, false); // (count, var, neg)
        for i in 0..leaves.len() {
            for neg in [false, true] {
                let count = cubes
                    .iter()
                    .filter(|c| (if neg { c.neg } else { c.pos }) >> i & 1 == 1)
                    .count();
                if count > best.0 {
                    best = (count, i, neg);
                }
            }
        }
        if best.0 <= 1 {
            // Nothing to share: a plain sum of products.
            let mut terms = Vec::with_capacity(cubes.len());
            for &c in cubes {
                terms.push(self.build_cube(c, leaves, style)?);
            }
            return self.reduce(terms, true, style);
        }
        let (_, var, neg) = best;
        let bit = 1u8 << var;
        let mut quotient = Vec::new();
        let mut remainder = Vec::new();
        for &c in cubes {
            let has = if neg { c.neg & bit != 0 } else { c.pos & bit != 0 };
            if has {
                let mut q = c;
                if neg {
                    q.neg &= !bit;
                } else {
                    q.pos &= !bit;
                }
                quotient.push(q);
            } else {
                remainder.push(c);
            }
        }
        let lit = Edge::new(leaves[var], neg);
        let q = self.build_factored(&quotient, leaves, style)?;
        let shared = self.and(lit, q)?;
        if remainder.is_empty() {
            return Some(shared);
        }
        let r = self.build_factored(&remainder, leaves, style)?;
        self.reduce(vec![shared, r], true, style)
    }
}

/// Build the cover over `leaves` as a factored cone rooted at the returned
/// edge. Requires an open transaction. Returns `None` when construction
/// would reuse the site or an unhandled pre-existing node.
pub fn build_cover(
    g: &mut AigGraph,
    site: NodeId,
    handled: &HandleMap,
    leaves: &[NodeId],
    lv: &LevelMap,
    cubes: &[Cube],
    style: BuildStyle,
) -> Option<Built> {
    debug_assert!(g.in_transaction());
    let floor = g.node_count() as u32;
    let mut b = Builder {
        g,
        site,
        handled,
        floor,
        levels: leaves.iter().map(|&l| (l, lv.get(l))).collect(),
    };
    let root = b.build_factored(cubes, leaves, style)?;
    let level = b.level(root);
    let created = b.g.node_count() - floor as usize;
    Some(Built { root, level, created })
}

/// Number of nodes that die when `root` loses every fanout and PO
/// reference: `root` itself plus its transitively exclusive fan-in cone.
/// Fanout edges from tentative nodes of the open transaction keep their
/// targets alive, so a probe that reuses logic is credited for it.
pub fn simulate_deaths(g: &AigGraph, root: NodeId) -> usize {
    if !g.is_and(root) {
        return 0;
    }
    let mut lost: HashMap<NodeId, usize> = HashMap::new();
    let mut dying: HashSet<NodeId> = HashSet::new();
    let mut stack = vec![root];
    dying.insert(root);
    while let Some(n) = stack.pop() {
        let (f0, f1) = g.fanins(n).expect("dying nodes are ANDs");
        for e in [f0, f1] {
            let f = e.target;
            if !g.is_and(f) || dying.contains(&f) {
                continue;
            }
            let l = lost.entry(f).or_insert(0);
            *l += 1;
            if *l == g.fanouts(f).len() && g.po_refs(f) == 0 {
                dying.insert(f);
                stack.push(f);
            }
        }
    }
    dying.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut::{enumerate_cuts, CutParams};
    use crate::level::compute_levels_full;
    use crate::verify::equivalent;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isop_covers_exactly_and_irredundantly() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for nvars in 1..=5usize {
            for _ in 0..200 {
                let tt = rng.gen::<u64>() & tt_mask(nvars);
                let cubes = isop(tt, nvars);
                assert_eq!(cover_tt(&cubes, nvars), tt, "cover of {tt:#x}");
                for skip in 0..cubes.len() {
                    let rest: Vec<Cube> = cubes
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &c)| c)
                        .collect();
                    assert_ne!(cover_tt(&rest, nvars), tt, "cube {skip} redundant");
                }
            }
        }
    }

    #[test]
    fn isop_handles_constants() {
        assert!(isop(0, 3).is_empty());
        let taut = isop(tt_mask(3), 3);
        assert_eq!(taut, vec![Cube::tautology()]);
    }

    /// The inclusive majority cone: ab + ac + bc + abc as a linear OR
    /// chain, 7 AND nodes deep 4. Returns (graph, root edge).
    fn redundant_majority() -> (AigGraph, Edge) {
        let mut g = AigGraph::new(3);
        let a = Edge::new(g.input(0), false);
        let b = Edge::new(g.input(1), false);
        let c = Edge::new(g.input(2), false);
        let ab = g.add_and(a, b);
        let ac = g.add_and(a, c);
        let bc = g.add_and(b, c);
        let abc = g.add_and(ab, c);
        let o1 = g.add_and(ab.complement(), ac.complement()).complement();
        let o2 = g.add_and(o1.complement(), bc.complement()).complement();
        let o3 = g.add_and(o2.complement(), abc.complement()).complement();
        g.add_po(o3);
        (g, o3)
    }

    #[test]
    fn majority_refactors_to_four_nodes_with_gain_three() {
        let (mut g, root) = redundant_majority();
        assert_eq!(g.alive_count(), 7);
        let lv = compute_levels_full(&g);
        assert_eq!(lv.get(root.target), 4);

        // The whole fan-in cone of the site counts as handled, as it would
        // be when the site is popped from a valid order.
        let mut handled = HandleMap::new(&g);
        for n in g.and_ids().collect::<Vec<_>>() {
            handled.mark(n);
        }

        let cuts = enumerate_cuts(&g, root.target, &lv, &CutParams::default());
        let cut = cuts
            .iter()
            .find(|c| c.leaves == vec![g.input(0), g.input(1), g.input(2)])
            .expect("PI cut");
        // The root node computes the complement of the OR chain, so the
        // cover is minority: the three pairwise complemented cubes.
        let cubes = isop(cut.tt, 3);
        assert_eq!(cubes.len(), 3);
        assert!(cubes.iter().all(|c| c.num_literals() == 2 && c.pos == 0));

        let before = g.clone();
        g.begin_update().unwrap();
        let built = build_cover(
            &mut g,
            root.target,
            &handled,
            &cut.leaves,
            &lv,
            &cubes,
            BuildStyle::Balanced,
        )
        .expect("constructible");
        // a(b+c) + bc: three fresh nodes, bc reused from the old cone.
        assert_eq!(built.created, 3);
        assert_eq!(built.level, 3);
        let deaths = simulate_deaths(&g, root.target);
        assert_eq!(deaths, 6); // bc survives through the tentative reference
        assert_eq!(deaths as i64 - built.created as i64, 3);

        g.replace_fanouts(root.target, built.root).unwrap();
        g.delete_dangling(root.target).unwrap();
        g.commit_update().unwrap();
        g.check_invariants().unwrap();
        assert_eq!(g.alive_count(), 4);
        assert!(equivalent(&before, &g, 64, 7).unwrap());
        let lv2 = compute_levels_full(&g);
        assert_eq!(lv2.get(built.root.target), 3);
    }

    #[test]
    fn builder_rejects_unhandled_reuse_and_the_site() {
        let mut g = AigGraph::new(3);
        let a = Edge::new(g.input(0), false);
        let b = Edge::new(g.input(1), false);
        let c = Edge::new(g.input(2), false);
        let ab = g.add_and(a, b);
        let site = g.add_and(ab, c);
        g.add_po(site);
        let lv = compute_levels_full(&g);

        // Nothing handled: rebuilding ab & c must refuse to reuse ab.
        let empty = HandleMap::new(&g);
        let leaves = vec![g.input(0), g.input(1), g.input(2)];
        let cubes = vec![Cube { pos: 0b111, neg: 0 }];
        g.begin_update().unwrap();
        assert!(build_cover(
            &mut g,
            site.target,
            &empty,
            &leaves,
            &lv,
            &cubes,
            BuildStyle::LeftChain,
        )
        .is_none());
        g.rollback_update().unwrap();

        // With ab handled the same build succeeds and reuses it — but the
        // root then hashes to the site itself, which is refused too.
        let mut handled = HandleMap::new(&g);
        handled.mark(ab.target);
        handled.mark(site.target);
        g.begin_update().unwrap();
        assert!(build_cover(
            &mut g,
            site.target,
            &handled,
            &leaves,
            &lv,
            &cubes,
            BuildStyle::LeftChain,
        )
        .is_none());
        g.rollback_update().unwrap();
    }

    #[test]
    fn styles_preserve_function_and_change_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..50 {
            let nvars = rng.gen_range(3..=5usize);
            let tt = rng.gen::<u64>() & tt_mask(nvars);
            if tt == 0 || tt == tt_mask(nvars) {
                continue;
            }
            let cubes = isop(tt, nvars);
            let mut g = AigGraph::new(nvars as u32);
            let leaves: Vec<NodeId> = g.inputs().collect();
            let lv = compute_levels_full(&g);
            let mut roots = Vec::new();
            for style in [BuildStyle::Balanced, BuildStyle::LeftChain] {
                // The second build may reuse the first cone; mark all of it
                // handled, as a settled fan-in region would be.
                let mut handled = HandleMap::new(&g);
                for n in g.and_ids().collect::<Vec<_>>() {
                    handled.mark(n);
                }
                g.begin_update().unwrap();
                let built = build_cover(
                    &mut g,
                    NodeId(u32::MAX),
                    &handled,
                    &leaves,
                    &lv,
                    &cubes,
                    style,
                )
                .expect("fresh build");
                let sets = g.commit_update().unwrap();
                assert_eq!(sets.inserted.len(), built.created);
                roots.push(built.root);
            }
            for &r in &roots {
                g.add_po(r);
            }
            // Both POs compute tt: compare against a direct rebuild.
            let mut h = AigGraph::new(nvars as u32);
            let hl: Vec<NodeId> = h.inputs().collect();
            let hlv = compute_levels_full(&h);
            let hh = HandleMap::new(&h);
            h.begin_update().unwrap();
            let hb = build_cover(
                &mut h,
                NodeId(u32::MAX),
                &hh,
                &hl,
                &hlv,
                &cubes,
                BuildStyle::Balanced,
            )
            .unwrap();
            h.commit_update().unwrap();
            h.add_po(hb.root);
            h.add_po(hb.root);
            assert!(equivalent(&g, &h, 64, 13).unwrap());
        }
    }

    #[test]
    fn balanced_is_never_deeper_than_left_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..40 {
            let nvars = rng.gen_range(3..=6usize);
            let tt = rng.gen::<u64>() & tt_mask(nvars);
            let cubes = isop(tt, nvars);
            let mut depths = Vec::new();
            for style in [BuildStyle::Balanced, BuildStyle::LeftChain] {
                let mut g = AigGraph::new(nvars as u32);
                let leaves: Vec<NodeId> = g.inputs().collect();
                let lv = compute_levels_full(&g);
                let handled = HandleMap::new(&g);
                g.begin_update().unwrap();
                let built = build_cover(
                    &mut g,
                    NodeId(u32::MAX),
                    &handled,
                    &leaves,
                    &lv,
                    &cubes,
                    style,
                )
                .unwrap();
                g.commit_update().unwrap();
                let full = compute_levels_full(&g);
                assert_eq!(built.level, full.get(built.root.target), "build levels exact");
                depths.push(built.level);
            }
            assert!(depths[0] <= depths[1]);
        }
    }
}
