//! Reference oracles and simulation-based equivalence checking.
//!
//! Everything here recomputes from scratch. The incremental engines are
//! validated against these functions, never the other way round.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aig::{AigGraph, Edge, NodeId};
use crate::error::{Error, Result};

/// Alive AND nodes with every fanin before its fanouts. Deterministic:
/// roots are visited in ascending id order.
pub fn topo_order(g: &AigGraph) -> Vec<NodeId> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(g.alive_count());
    for root in g.and_ids() {
        if seen[root.index()] {
            continue;
        }
        // Two-phase iterative DFS over fanins.
        let mut stack: Vec<(NodeId, bool)> = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
                continue;
            }
            if seen[v.index()] {
                continue;
            }
            seen[v.index()] = true;
            stack.push((v, true));
            let (f0, f1) = g.fanins(v).expect("and node");
            for e in [f1, f0] {
                if g.is_and(e.target) && !seen[e.target.index()] {
                    stack.push((e.target, false));
                }
            }
        }
    }
    order
}

/// Full recomputation of levels: constants and inputs sit at 0, an AND at
/// one more than its deepest fanin. Dead slots read 0.
pub fn oracle_levels(g: &AigGraph) -> Vec<u32> {
    let mut lev = vec![0u32; g.node_count()];
    for n in topo_order(g) {
        let (f0, f1) = g.fanins(n).expect("and node");
        lev[n.index()] = 1 + lev[f0.target.index()].max(lev[f1.target.index()]);
    }
    lev
}

/// Full recomputation of reverse levels: nodes without alive fanouts sit at
/// 0 (primary outputs do not contribute), otherwise one more than the
/// deepest fanout.
pub fn oracle_reverse(g: &AigGraph) -> Vec<u32> {
    let mut rev = vec![0u32; g.node_count()];
    let assign = |rev: &mut Vec<u32>, n: NodeId, g: &AigGraph| {
        let mut r = 0;
        for &f in g.fanouts(n) {
            r = r.max(1 + rev[f.index()]);
        }
        rev[n.index()] = r;
    };
    for n in topo_order(g).into_iter().rev() {
        assign(&mut rev, n, g);
    }
    // Constant and inputs read their (AND) fanouts' settled values.
    assign(&mut rev, NodeId::CONST, g);
    for pi in g.inputs() {
        assign(&mut rev, pi, g);
    }
    rev
}

/// Maximum level over the nodes driving primary outputs.
pub fn max_level(g: &AigGraph) -> u32 {
    let lev = oracle_levels(g);
    g.outputs().iter().map(|e| lev[e.target.index()]).max().unwrap_or(0)
}

/// Nodes common to both snapshots whose level (respectively reverse level)
/// differs, i.e. the exact regions an incremental engine must have
/// rewritten. Nodes created after `before` was taken are excluded.
pub fn affected_region_oracle(
    before: &AigGraph,
    after: &AigGraph,
) -> (Vec<NodeId>, Vec<NodeId>) {
    let (lb, la) = (oracle_levels(before), oracle_levels(after));
    let (rb, ra) = (oracle_reverse(before), oracle_reverse(after));
    let common = before.node_count().min(after.node_count());
    let mut a_l = Vec::new();
    let mut a_r = Vec::new();
    for i in 0..common {
        let id = NodeId(i as u32);
        if !(before.is_alive(id) && after.is_alive(id)) {
            continue;
        }
        if lb[i] != la[i] {
            a_l.push(id);
        }
        if rb[i] != ra[i] {
            a_r.push(id);
        }
    }
    (a_l, a_r)
}

/// Brute-force affected sets from two snapshots of the same graph around
/// one committed replacement, independent of the transaction journal.
/// Returned as (inserted, redirected, deprived); as in the journal, the
/// latter two may overlap when one survivor both had a fanin retargeted
/// and lost a fanout to a deleted node.
pub fn affected_sets_oracle(
    before: &AigGraph,
    after: &AigGraph,
) -> (Vec<NodeId>, Vec<NodeId>, Vec<NodeId>) {
    let mut inserted = Vec::new();
    for i in before.node_count()..after.node_count() {
        let id = NodeId(i as u32);
        if after.is_alive(id) {
            inserted.push(id);
        }
    }
    let mut redirected = Vec::new();
    let mut deprived = Vec::new();
    for i in 0..before.node_count() {
        let id = NodeId(i as u32);
        if !(before.is_alive(id) && after.is_alive(id)) {
            continue;
        }
        if let (Some(pb), Some(pa)) = (before.fanins(id), after.fanins(id)) {
            if pb != pa {
                redirected.push(id);
            }
        }
        if before.fanouts(id).iter().any(|&f| !after.is_alive(f)) {
            deprived.push(id);
        }
    }
    (inserted, redirected, deprived)
}

const WORD: usize = 64;

fn input_words(g: &AigGraph, num_patterns: usize, seed: u64) -> (Vec<Vec<u64>>, usize) {
    let words = num_patterns / WORD;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigs = (0..g.num_inputs())
        .map(|_| (0..words).map(|_| rng.next_u64()).collect())
        .collect();
    (sigs, words)
}

fn exhaustive_input_words(g: &AigGraph) -> (Vec<Vec<u64>>, usize) {
    let pis = g.num_inputs() as usize;
    debug_assert!(pis <= 16);
    let patterns = 1usize << pis;
    let words = patterns.div_ceil(WORD);
    let mut sigs = vec![vec![0u64; words]; pis];
    for p in 0..patterns {
        for (i, sig) in sigs.iter_mut().enumerate() {
            if (p >> i) & 1 == 1 {
                sig[p / WORD] |= 1u64 << (p % WORD);
            }
        }
    }
    (sigs, words)
}

fn simulate(g: &AigGraph, pi_words: &[Vec<u64>], words: usize) -> Vec<Vec<u64>> {
    let mut node_sig = vec![vec![0u64; words]; g.node_count()];
    for (i, sig) in pi_words.iter().enumerate() {
        node_sig[g.input(i as u32).index()] = sig.clone();
    }
    let edge_word = |sig: &[u64], e: Edge, w: usize| -> u64 {
        if e.complemented {
            !sig[w]
        } else {
            sig[w]
        }
    };
    for n in topo_order(g) {
        let (f0, f1) = g.fanins(n).expect("and node");
        let mut out = vec![0u64; words];
        for (w, slot) in out.iter_mut().enumerate() {
            *slot = edge_word(&node_sig[f0.target.index()], f0, w)
                & edge_word(&node_sig[f1.target.index()], f1, w);
        }
        node_sig[n.index()] = out;
    }
    g.outputs()
        .iter()
        .map(|e| {
            (0..words).map(|w| edge_word(&node_sig[e.target.index()], *e, w)).collect()
        })
        .collect()
}

/// Word-parallel random simulation signatures, one vector per primary
/// output. `num_patterns` must be a positive multiple of 64.
pub fn sim_signatures(g: &AigGraph, num_patterns: usize, seed: u64) -> Vec<Vec<u64>> {
    assert!(num_patterns > 0 && num_patterns % WORD == 0, "patterns must be a multiple of 64");
    let (pi, words) = input_words(g, num_patterns, seed);
    simulate(g, &pi, words)
}

/// Functional equivalence of two graphs with matching interfaces.
/// Exhaustive for up to 16 inputs, sampled otherwise; sampling can only
/// err towards reporting equivalence.
pub fn equivalent(a: &AigGraph, b: &AigGraph, num_patterns: usize, seed: u64) -> Result<bool> {
    if a.num_inputs() != b.num_inputs() {
        return Err(Error::Invalid(format!(
            "input counts differ: {} vs {}",
            a.num_inputs(),
            b.num_inputs()
        )));
    }
    if a.outputs().len() != b.outputs().len() {
        return Err(Error::Invalid(format!(
            "output counts differ: {} vs {}",
            a.outputs().len(),
            b.outputs().len()
        )));
    }
    let (sa, sb) = if a.num_inputs() <= 16 {
        let (pi, words) = exhaustive_input_words(a);
        let mut sa = simulate(a, &pi, words);
        let mut sb = simulate(b, &pi, words);
        // Mask the unused tail of the last word.
        let patterns = 1usize << a.num_inputs();
        if patterns % WORD != 0 {
            let mask = (1u64 << (patterns % WORD)) - 1;
            for sig in sa.iter_mut().chain(sb.iter_mut()) {
                if let Some(last) = sig.last_mut() {
                    *last &= mask;
                }
            }
        }
        (sa, sb)
    } else {
        let num = num_patterns.max(WORD).next_multiple_of(WORD);
        (sim_signatures(a, num, seed), sim_signatures(b, num, seed))
    };
    Ok(sa == sb)
}

/// Evaluates all primary outputs under one concrete input assignment.
pub fn evaluate(g: &AigGraph, assignment: &[bool]) -> Vec<bool> {
    assert_eq!(assignment.len(), g.num_inputs() as usize, "assignment width");
    let mut val = vec![false; g.node_count()];
    for (i, &v) in assignment.iter().enumerate() {
        val[g.input(i as u32).index()] = v;
    }
    let edge_val = |val: &[bool], e: Edge| val[e.target.index()] ^ e.complemented;
    for n in topo_order(g) {
        let (f0, f1) = g.fanins(n).expect("and node");
        val[n.index()] = edge_val(&val, f0) && edge_val(&val, f1);
    }
    g.outputs().iter().map(|e| edge_val(&val, *e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{AigGraph, Edge};

    fn full_adder() -> AigGraph {
        // sum = a ^ b ^ cin, cout = majority(a, b, cin)
        let mut g = AigGraph::new(3);
        let a = Edge::new(g.input(0), false);
        let b = Edge::new(g.input(1), false);
        let c = Edge::new(g.input(2), false);
        let axb = xor(&mut g, a, b);
        let sum = xor(&mut g, axb, c);
        let ab = g.add_and(a, b);
        let cx = g.add_and(c, axb);
        let cout = g.add_and(ab.complement(), cx.complement()).complement();
        g.add_po(sum);
        g.add_po(cout);
        g
    }

    fn xor(g: &mut AigGraph, a: Edge, b: Edge) -> Edge {
        let n1 = g.add_and(a, b.complement());
        let n2 = g.add_and(a.complement(), b);
        g.add_and(n1.complement(), n2.complement()).complement()
    }

    #[test]
    fn levels_on_hand_built_chain() {
        // ((a b) c) d: levels 1, 2, 3.
        let mut g = AigGraph::new(4);
        let e: Vec<Edge> = (0..4).map(|i| Edge::new(g.input(i), false)).collect();
        let n1 = g.add_and(e[0], e[1]);
        let n2 = g.add_and(n1, e[2]);
        let n3 = g.add_and(n2, e[3]);
        g.add_po(n3);
        let lev = oracle_levels(&g);
        assert_eq!(lev[n1.target.index()], 1);
        assert_eq!(lev[n2.target.index()], 2);
        assert_eq!(lev[n3.target.index()], 3);
        assert_eq!(max_level(&g), 3);
        let rev = oracle_reverse(&g);
        assert_eq!(rev[n3.target.index()], 0);
        assert_eq!(rev[n2.target.index()], 1);
        assert_eq!(rev[n1.target.index()], 2);
        assert_eq!(rev[g.input(0).index()], 3);
        assert_eq!(rev[g.input(3).index()], 1);
    }

    #[test]
    fn reverse_levels_ignore_po_references() {
        // n1 drives a PO and n2; only the structural fanout counts.
        let mut g = AigGraph::new(2);
        let a = Edge::new(g.input(0), false);
        let b = Edge::new(g.input(1), false);
        let n1 = g.add_and(a, b);
        let n2 = g.add_and(n1, b.complement());
        g.add_po(n1);
        g.add_po(n2);
        let rev = oracle_reverse(&g);
        assert_eq!(rev[n2.target.index()], 0);
        assert_eq!(rev[n1.target.index()], 1);
    }

    #[test]
    fn full_adder_truth_table_exhaustive() {
        let g = full_adder();
        let (pi, words) = exhaustive_input_words(&g);
        let sigs = simulate(&g, &pi, words);
        let mask = (1u64 << 8) - 1;
        // Patterns indexed by (cin, b, a) bits: sum = parity, cout = majority.
        let mut sum = 0u64;
        let mut cout = 0u64;
        for p in 0..8u64 {
            let ones = (p & 1) + ((p >> 1) & 1) + ((p >> 2) & 1);
            if ones % 2 == 1 {
                sum |= 1 << p;
            }
            if ones >= 2 {
                cout |= 1 << p;
            }
        }
        assert_eq!(sigs[0][0] & mask, sum);
        assert_eq!(sigs[1][0] & mask, cout);
    }

    #[test]
    fn equivalence_detects_a_flip() {
        let g = full_adder();
        let h = full_adder();
        assert!(equivalent(&g, &h, 256, 7).unwrap());
        let mut h2 = AigGraph::new(3);
        let a = Edge::new(h2.input(0), false);
        let b = Edge::new(h2.input(1), false);
        let c = Edge::new(h2.input(2), false);
        let axb = xor(&mut h2, a, b);
        let sum = xor(&mut h2, axb, c);
        let ab = h2.add_and(a, b);
        let cx = h2.add_and(c, axb);
        let cout = h2.add_and(ab.complement(), cx.complement()).complement();
        h2.add_po(sum);
        h2.add_po(cout.complement()); // single inverted output
        assert!(!equivalent(&g, &h2, 256, 7).unwrap());
    }

    #[test]
    fn affected_sets_oracle_sees_a_replacement() {
        let mut g = AigGraph::new(3);
        let a = Edge::new(g.input(0), false);
        let b = Edge::new(g.input(1), false);
        let c = Edge::new(g.input(2), false);
        let x = g.add_and(a, b);
        let f = g.add_and(x, c);
        g.add_po(f);
        let before = g.clone();
        g.begin_update().unwrap();
        let xp = g.add_and(a, c);
        g.replace_fanouts(x.target, xp).unwrap();
        g.delete_dangling(x.target).unwrap();
        let sets = g.commit_update().unwrap();
        let (i, p, d) = affected_sets_oracle(&before, &g);
        assert_eq!(i, sets.inserted);
        assert_eq!(p, sets.redirected);
        assert_eq!(d, sets.deprived);
    }

    #[test]
    fn region_oracle_flags_exact_changes() {
        // Chain a b c d; replacing the depth-2 node by a depth-1 node moves
        // levels above and reverse levels below.
        let mut g = AigGraph::new(4);
        let e: Vec<Edge> = (0..4).map(|i| Edge::new(g.input(i), false)).collect();
        let n1 = g.add_and(e[0], e[1]);
        let n2 = g.add_and(n1, e[2]);
        let n3 = g.add_and(n2, e[3]);
        g.add_po(n3);
        g.add_po(n1); // external reference keeps n1 alive after the cut
        let before = g.clone();
        g.begin_update().unwrap();
        let xp = g.add_and(e[2], e[3]); // shallower substitute for n2
        g.replace_fanouts(n2.target, xp).unwrap();
        g.delete_dangling(n2.target).unwrap();
        g.commit_update().unwrap();
        let (a_l, a_r) = affected_region_oracle(&before, &g);
        assert_eq!(a_l, vec![n3.target]); // level 3 -> 2
        // n1 lost its fanout chain: reverse level 2 -> 0; inputs below follow.
        assert!(a_r.contains(&n1.target));
        assert!(a_r.contains(&g.input(0)));
        assert!(!a_l.contains(&n1.target));
    }
}
