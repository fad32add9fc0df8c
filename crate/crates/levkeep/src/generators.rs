//! Parameterized circuit generators.
//!
//! These exist for benchmarking and for tests that need circuits with a
//! known function and a known amount of removable redundancy.  The
//! multiplier builds its carry logic as the *inclusive* majority
//! sum-of-products `ab + ac + bc + abc` realized as a linear OR chain —
//! seven AND nodes where four suffice — so a refactoring pass has a dense
//! supply of sites with strictly positive gain.  The adder and sorter are
//! lean by construction and serve as hard-to-improve controls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aig::{AigGraph, Edge};

fn or2(g: &mut AigGraph, a: Edge, b: Edge) -> Edge {
    g.add_and(a.complement(), b.complement()).complement()
}

/// Three-AND exclusive or: `or(a & !b, !a & b)`.
fn xor2(g: &mut AigGraph, a: Edge, b: Edge) -> Edge {
    let p = g.add_and(a, b.complement());
    let q = g.add_and(a.complement(), b);
    or2(g, p, q)
}

/// Compact majority: `or(ab, c(a xor b))` when the xor is already at hand.
fn carry_compact(g: &mut AigGraph, a: Edge, b: Edge, c: Edge, axb: Edge) -> Edge {
    let ab = g.add_and(a, b);
    let cx = g.add_and(c, axb);
    or2(g, ab, cx)
}

/// Redundant majority: the inclusive cover `ab + ac + bc + abc` as an OR
/// chain.  Functionally identical to the compact carry, structurally three
/// nodes heavier and one level deeper.
fn carry_redundant(g: &mut AigGraph, a: Edge, b: Edge, c: Edge) -> Edge {
    let ab = g.add_and(a, b);
    let ac = g.add_and(a, c);
    let bc = g.add_and(b, c);
    let abc = g.add_and(ab, c);
    let o1 = or2(g, ab, ac);
    let o2 = or2(g, o1, bc);
    or2(g, o2, abc)
}

/// Ripple-carry adder: `bits` + `bits` inputs (operand a first), `bits + 1`
/// outputs, least significant first.  Lean full adders that share the
/// half-sum between sum and carry.
pub fn gen_adder(bits: u32) -> AigGraph {
    assert!(bits >= 1);
    let mut g = AigGraph::new(2 * bits);
    let a: Vec<Edge> = (0..bits).map(|i| Edge::new(g.input(i), false)).collect();
    let b: Vec<Edge> = (0..bits).map(|i| Edge::new(g.input(bits + i), false)).collect();
    let mut carry = Edge::constant(false);
    let mut sums = Vec::with_capacity(bits as usize);
    for i in 0..bits as usize {
        let axb = xor2(&mut g, a[i], b[i]);
        let s = xor2(&mut g, axb, carry);
        carry = carry_compact(&mut g, a[i], b[i], carry, axb);
        sums.push(s);
    }
    for s in sums {
        g.add_po(s);
    }
    g.add_po(carry);
    g
}

/// Schoolbook array multiplier: `bits` + `bits` inputs (operand a first),
/// `2 * bits` product outputs, least significant first.  Every full-adder
/// carry uses the redundant majority cover, so roughly one third of the
/// graph is removable by refactoring.
pub fn gen_multiplier(bits: u32) -> AigGraph {
    assert!(bits >= 1);
    let mut g = AigGraph::new(2 * bits);
    let a: Vec<Edge> = (0..bits).map(|i| Edge::new(g.input(i), false)).collect();
    let b: Vec<Edge> = (0..bits).map(|i| Edge::new(g.input(bits + i), false)).collect();

    let width = 2 * bits as usize;
    let mut acc: Vec<Edge> = vec![Edge::constant(false); width];
    for (i, &ai) in a.iter().enumerate() {
        // Add the partial-product row a_i * b, shifted by i, into acc.
        let mut carry = Edge::constant(false);
        for (j, &bj) in b.iter().enumerate() {
            let pp = g.add_and(ai, bj);
            let axb = xor2(&mut g, acc[i + j], pp);
            let s = xor2(&mut g, axb, carry);
            let c = carry_redundant(&mut g, acc[i + j], pp, carry);
            acc[i + j] = s;
            carry = c;
        }
        // Ripple the row's carry-out through the remaining columns.
        let mut k = i + b.len();
        while k < width {
            let s = xor2(&mut g, acc[k], carry);
            carry = g.add_and(acc[k], carry);
            acc[k] = s;
            k += 1;
        }
    }
    for p in acc {
        g.add_po(p);
    }
    g
}

/// Batcher odd-even mergesort on `width` single-bit keys; `width` must be a
/// power of two.  Outputs are the inputs in descending order, i.e. a
/// thermometer code of the population count.
pub fn gen_sorter(width: u32) -> AigGraph {
    assert!(width.is_power_of_two(), "sorter width must be a power of two");
    let mut g = AigGraph::new(width);
    let mut wires: Vec<Edge> = (0..width).map(|i| Edge::new(g.input(i), false)).collect();

    // Compare-exchange: larger value to the lower index.
    fn cmp(g: &mut AigGraph, w: &mut [Edge], i: usize, j: usize) {
        let (x, y) = (w[i], w[j]);
        w[i] = or2(g, x, y);
        w[j] = g.add_and(x, y);
    }
    fn merge(g: &mut AigGraph, w: &mut [Edge], lo: usize, n: usize, r: usize) {
        let step = 2 * r;
        if step < n {
            merge(g, w, lo, n, step);
            merge(g, w, lo + r, n, step);
            let mut i = lo + r;
            while i + r < lo + n {
                cmp(g, w, i, i + r);
                i += step;
            }
        } else {
            cmp(g, w, lo, lo + r);
        }
    }
    fn sort(g: &mut AigGraph, w: &mut [Edge], lo: usize, n: usize) {
        if n > 1 {
            sort(g, w, lo, n / 2);
            sort(g, w, lo + n / 2, n / 2);
            merge(g, w, lo, n, 1);
        }
    }
    let n = width as usize;
    sort(&mut g, &mut wires, 0, n);
    for wire in wires {
        g.add_po(wire);
    }
    g
}

/// Random combinational graph: complemented fanin pairs drawn from the pool
/// of existing signals.  Structural hashing means the alive count can fall
/// short of `ands` when duplicates are drawn; every fanout-free node gets a
/// primary output so nothing is dangling.
pub fn gen_random(inputs: u32, ands: u32, seed: u64) -> AigGraph {
    assert!(inputs >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = AigGraph::new(inputs);
    let mut pool: Vec<Edge> = g.inputs().map(|n| Edge::new(n, false)).collect();
    let mut attempts = 0u32;
    while g.alive_count() < ands as usize && attempts < 20 * ands {
        attempts += 1;
        let pick = |rng: &mut ChaCha8Rng, pool: &[Edge]| {
            let e = pool[rng.gen_range(0..pool.len())];
            if rng.gen_bool(0.5) {
                e.complement()
            } else {
                e
            }
        };
        let a = pick(&mut rng, &pool);
        let b = pick(&mut rng, &pool);
        let e = g.add_and(a, b);
        if e.target.index() + 1 == g.node_count() {
            pool.push(e);
        }
    }
    let sinks: Vec<Edge> = g
        .and_ids()
        .filter(|&n| g.fanouts(n).is_empty())
        .map(|n| Edge::new(n, false))
        .collect();
    for s in sinks {
        g.add_po(s);
    }
    g
}
