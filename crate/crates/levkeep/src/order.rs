//! Partial topological order over the unhandled nodes, maintained
//! dynamically while replacements rewrite the graph.
//!
//! The order is a doubly linked list. Popping a node leaves a ghost cursor
//! at its old position; nodes that must move to keep the order valid are
//! spliced right after that cursor, preserving their relative order.

use std::time::Instant;

use crate::aig::{AigGraph, NodeId};
use crate::error::{Error, Result};
use crate::level::MaintStats;
use crate::verify::topo_order;

const NIL: u32 = u32::MAX;

/// Handled flags. Constants and primary inputs count as always handled;
/// they never enter the order.
pub struct HandleMap {
    handled: Vec<bool>,
    num_special: usize,
}

impl HandleMap {
    pub fn new(g: &AigGraph) -> HandleMap {
        HandleMap {
            handled: vec![false; g.node_count()],
            num_special: g.num_inputs() as usize + 1,
        }
    }

    pub fn is_handled(&self, n: NodeId) -> bool {
        n.index() < self.num_special
            || self.handled.get(n.index()).copied().unwrap_or(false)
    }

    pub fn mark(&mut self, n: NodeId) {
        if n.index() >= self.handled.len() {
            self.handled.resize(n.index() + 1, false);
        }
        self.handled[n.index()] = true;
    }
}

/// Epoch-stamped visit marks, reset in O(1) per epoch.
pub struct VisitMap {
    stamp: Vec<u32>,
    epoch: u32,
}

impl VisitMap {
    pub fn new() -> VisitMap {
        VisitMap { stamp: Vec::new(), epoch: 0 }
    }

    pub fn next_epoch(&mut self) {
        if self.epoch == u32::MAX {
            self.stamp.clear();
            self.epoch = 0;
        }
        self.epoch += 1;
    }

    fn is_visited(&self, n: NodeId) -> bool {
        self.stamp.get(n.index()).copied() == Some(self.epoch)
    }

    fn mark(&mut self, n: NodeId) {
        if n.index() >= self.stamp.len() {
            self.stamp.resize(n.index() + 1, 0);
        }
        self.stamp[n.index()] = self.epoch;
    }
}

impl Default for VisitMap {
    fn default() -> Self {
        VisitMap::new()
    }
}

pub struct OrderList {
    next: Vec<u32>,
    prev: Vec<u32>,
    present: Vec<bool>,
    head: u32,
    tail: u32,
    /// The most recently popped node, left linked as a position marker and
    /// unlinked at the next pop.
    ghost: u32,
    /// Splice point: starts at the ghost and rolls onto each spliced node.
    cursor: u32,
    len: usize,
}

impl OrderList {
    /// Build the order over all alive AND nodes, fanins first.
    pub fn init_from_topo(g: &AigGraph) -> OrderList {
        let cap = g.node_count();
        let mut t = OrderList {
            next: vec![NIL; cap],
            prev: vec![NIL; cap],
            present: vec![false; cap],
            head: NIL,
            tail: NIL,
            ghost: NIL,
            cursor: NIL,
            len: 0,
        };
        for n in topo_order(g) {
            t.push_back(n);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.present.get(n.index()).copied().unwrap_or(false)
    }

    fn grow(&mut self, idx: usize) {
        if idx >= self.next.len() {
            self.next.resize(idx + 1, NIL);
            self.prev.resize(idx + 1, NIL);
            self.present.resize(idx + 1, false);
        }
    }

    fn push_back(&mut self, n: NodeId) {
        let i = n.index();
        self.grow(i);
        debug_assert!(!self.present[i]);
        self.prev[i] = self.tail;
        self.next[i] = NIL;
        if self.tail != NIL {
            self.next[self.tail as usize] = n.0;
        } else {
            self.head = n.0;
        }
        self.tail = n.0;
        self.present[i] = true;
        self.len += 1;
    }

    fn unlink(&mut self, i: usize) {
        let (p, nx) = (self.prev[i], self.next[i]);
        if p != NIL {
            self.next[p as usize] = nx;
        } else if self.head == i as u32 {
            self.head = nx;
        }
        if nx != NIL {
            self.prev[nx as usize] = p;
        } else if self.tail == i as u32 {
            self.tail = p;
        }
        self.next[i] = NIL;
        self.prev[i] = NIL;
    }

    /// Pop the first unhandled node, mark it handled and leave its ghost as
    /// the splice cursor for this iteration.
    pub fn pop_front(&mut self, handled: &mut HandleMap) -> Option<NodeId> {
        if self.ghost != NIL {
            debug_assert!(!self.present[self.ghost as usize]);
            self.unlink(self.ghost as usize);
            self.ghost = NIL;
            self.cursor = NIL;
        }
        if self.head == NIL {
            return None;
        }
        let x = NodeId(self.head);
        debug_assert!(self.present[x.index()]);
        self.present[x.index()] = false;
        self.len -= 1;
        self.ghost = x.0;
        self.cursor = x.0;
        handled.mark(x);
        Some(x)
    }

    /// Drop a deleted node from the order. No-op when absent.
    pub fn remove(&mut self, n: NodeId) {
        if self.contains(n) {
            if self.cursor == n.0 {
                // Splice point degrades to the predecessor (maybe the ghost).
                self.cursor = self.prev[n.index()];
            }
            self.present[n.index()] = false;
            self.len -= 1;
            self.unlink(n.index());
        }
    }

    /// Splice the nodes of `inv`, in the given order, directly after the
    /// cursor. Nodes already in the list are moved; new nodes are inserted.
    pub fn reord_inv(&mut self, inv: &[NodeId]) -> Result<()> {
        if inv.is_empty() {
            return Ok(());
        }
        if self.cursor == NIL {
            return Err(Error::Invalid("reord_inv without a cursor".into()));
        }
        for &n in inv {
            let i = n.index();
            self.grow(i);
            if n.0 == self.ghost {
                return Err(Error::NotOrderable(n));
            }
            if n.0 == self.cursor {
                continue; // already at the splice point
            }
            if self.present[i] {
                self.unlink(i);
                self.len -= 1;
            }
            // Link n after the cursor and roll the cursor onto it.
            let c = self.cursor as usize;
            let nx = self.next[c];
            self.next[c] = n.0;
            self.prev[i] = self.cursor;
            self.next[i] = nx;
            if nx != NIL {
                self.prev[nx as usize] = n.0;
            } else if self.tail == c as u32 {
                self.tail = n.0;
            }
            self.present[i] = true;
            self.len += 1;
            self.cursor = n.0;
        }
        Ok(())
    }

    /// Nodes in list order; test and diagnostic use. The ghost, the only
    /// non-present link, is skipped.
    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        let mut cur = self.head;
        std::iter::from_fn(move || {
            while cur != NIL {
                let id = NodeId(cur);
                cur = self.next[cur as usize];
                if self.present[id.index()] {
                    return Some(id);
                }
            }
            None
        })
    }

    /// Structural validity: the list holds exactly the alive unhandled AND
    /// nodes, and every present edge source precedes its target.
    pub fn check_valid(&self, g: &AigGraph, handled: &HandleMap) -> std::result::Result<(), String> {
        let mut pos = vec![usize::MAX; g.node_count()];
        let mut count = 0usize;
        for (k, n) in self.iter().enumerate() {
            if !g.is_alive(n) {
                return Err(format!("{n:?} in order but dead"));
            }
            if handled.is_handled(n) {
                return Err(format!("{n:?} in order but handled"));
            }
            pos[n.index()] = k;
            count += 1;
        }
        if count != self.len {
            return Err(format!("length {} != walked {count}", self.len));
        }
        for n in g.and_ids() {
            if !handled.is_handled(n) && pos[n.index()] == usize::MAX {
                return Err(format!("unhandled {n:?} missing from order"));
            }
        }
        for v in g.and_ids() {
            if pos[v.index()] == usize::MAX {
                continue;
            }
            let (f0, f1) = g.fanins(v).expect("and node");
            for e in [f0, f1] {
                let u = e.target;
                if pos.get(u.index()).copied().unwrap_or(usize::MAX) != usize::MAX
                    && pos[u.index()] >= pos[v.index()]
                {
                    return Err(format!("{u:?} does not precede fanout {v:?}"));
                }
            }
        }
        Ok(())
    }
}

/// Unhandled nodes in the fanin cone of `root` (truncated at handled
/// nodes), in topological order with `root` last. Uses the caller's current
/// visit epoch so repeated calls within one repair share their marks.
pub fn find_inv(
    g: &AigGraph,
    root: NodeId,
    handled: &HandleMap,
    vis: &mut VisitMap,
) -> Vec<NodeId> {
    let mut inv = Vec::new();
    if handled.is_handled(root) || !g.is_alive(root) || vis.is_visited(root) {
        return inv;
    }
    vis.mark(root);
    let mut stack: Vec<(NodeId, bool)> = vec![(root, false)];
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            inv.push(v);
            continue;
        }
        stack.push((v, true));
        let (f0, f1) = g.fanins(v).expect("unhandled nodes are ANDs");
        for e in [f1, f0] {
            let u = e.target;
            if !handled.is_handled(u) && g.is_alive(u) && !vis.is_visited(u) {
                vis.mark(u);
                stack.push((u, false));
            }
        }
    }
    inv
}

/// Repair the order after `xp` replaced the popped node: every unhandled
/// node in `xp`'s cone is spliced after the popped node's old position.
/// Counts the moved nodes and self-times into the maintenance clock.
pub fn dyn_to(
    g: &AigGraph,
    t: &mut OrderList,
    handled: &HandleMap,
    xp: NodeId,
    vis: &mut VisitMap,
    stats: &mut MaintStats,
) -> Result<()> {
    let start = Instant::now();
    if g.is_alive(xp) && !handled.is_handled(xp) {
        let inv = find_inv(g, xp, handled, vis);
        stats.ipto += inv.len() as u64;
        t.reord_inv(&inv)?;
    }
    stats.level_maint_nanos += start.elapsed().as_nanos() as u64;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::Edge;

    fn chain4() -> (AigGraph, Vec<Edge>) {
        let mut g = AigGraph::new(4);
        let e: Vec<Edge> = (0..4).map(|i| Edge::new(g.input(i), false)).collect();
        let n1 = g.add_and(e[0], e[1]);
        let n2 = g.add_and(n1, e[2]);
        let n3 = g.add_and(n2, e[3]);
        g.add_po(n3);
        (g, vec![n1, n2, n3])
    }

    #[test]
    fn init_and_pop_in_topo_order() {
        let (g, ns) = chain4();
        let mut handled = HandleMap::new(&g);
        let mut t = OrderList::init_from_topo(&g);
        t.check_valid(&g, &handled).unwrap();
        assert_eq!(t.len(), 3);
        let popped: Vec<NodeId> = std::iter::from_fn(|| t.pop_front(&mut handled)).collect();
        assert_eq!(popped, ns.iter().map(|e| e.target).collect::<Vec<_>>());
        assert!(handled.is_handled(ns[0].target));
    }

    #[test]
    fn find_inv_truncates_at_handled() {
        let (g, ns) = chain4();
        let mut handled = HandleMap::new(&g);
        let mut vis = VisitMap::new();
        vis.next_epoch();
        let inv = find_inv(&g, ns[2].target, &handled, &mut vis);
        assert_eq!(inv, vec![ns[0].target, ns[1].target, ns[2].target]);
        handled.mark(ns[1].target);
        vis.next_epoch();
        let inv = find_inv(&g, ns[2].target, &handled, &mut vis);
        assert_eq!(inv, vec![ns[2].target]);
        handled.mark(ns[2].target);
        vis.next_epoch();
        assert!(find_inv(&g, ns[2].target, &handled, &mut vis).is_empty());
    }

    #[test]
    fn splice_after_popped_position() {
        // Pop n1, then pretend a replacement made n3 depend on a fresh node:
        // the fresh node and n3 move right after n1's old slot, before n2.
        let mut g = AigGraph::new(4);
        let e: Vec<Edge> = (0..4).map(|i| Edge::new(g.input(i), false)).collect();
        let n1 = g.add_and(e[0], e[1]);
        let n2 = g.add_and(n1, e[2]);
        let n3 = g.add_and(n2, e[3]);
        g.add_po(n3);
        let mut handled = HandleMap::new(&g);
        let mut t = OrderList::init_from_topo(&g);
        let x = t.pop_front(&mut handled).unwrap();
        assert_eq!(x, n1.target);
        let w = g.add_and(e[1], e[3]); // new unhandled node
        t.reord_inv(&[w.target, n3.target]).unwrap();
        let order: Vec<NodeId> = t.iter().collect();
        assert_eq!(order, vec![w.target, n3.target, n2.target]);
        // n3 precedes n2 now, which is only valid because this test did not
        // actually rewire n3; check_valid still sees the real edges.
        assert!(t.check_valid(&g, &handled).is_err());
    }

    #[test]
    fn dyn_to_repairs_after_replacement() {
        // Replace n2 by xp = e2 e3 while n2 is the popped node; n3 keeps its
        // position but xp must be ordered before it.
        let (mut g, ns) = chain4();
        let mut handled = HandleMap::new(&g);
        let mut t = OrderList::init_from_topo(&g);
        let mut vis = VisitMap::new();
        let mut stats = MaintStats::default();

        let x1 = t.pop_front(&mut handled).unwrap();
        assert_eq!(x1, ns[0].target);
        let x2 = t.pop_front(&mut handled).unwrap();
        assert_eq!(x2, ns[1].target);

        g.begin_update().unwrap();
        let e2 = Edge::new(g.input(2), false);
        let e3 = Edge::new(g.input(3), false);
        let xp = g.add_and(e2, e3);
        g.replace_fanouts(x2, xp).unwrap();
        g.delete_dangling(x2).unwrap();
        let sets = g.commit_update().unwrap();
        for &d in &sets.deleted {
            t.remove(d);
        }
        vis.next_epoch();
        dyn_to(&g, &mut t, &handled, xp.target, &mut vis, &mut stats).unwrap();
        assert_eq!(stats.ipto, 1);
        t.check_valid(&g, &handled).unwrap();
        let order: Vec<NodeId> = t.iter().collect();
        assert_eq!(order, vec![xp.target, ns[2].target]);
    }

    #[test]
    fn removing_nodes_keeps_list_consistent() {
        let (g, ns) = chain4();
        let mut handled = HandleMap::new(&g);
        let mut t = OrderList::init_from_topo(&g);
        t.remove(ns[1].target);
        assert_eq!(t.len(), 2);
        t.remove(ns[1].target); // double remove is a no-op
        assert_eq!(t.len(), 2);
        let popped: Vec<NodeId> = std::iter::from_fn(|| t.pop_front(&mut handled)).collect();
        assert_eq!(popped, vec![ns[0].target, ns[2].target]);
    }

    #[test]
    fn pop_after_splice_visits_moved_nodes_first() {
        let (g, ns) = chain4();
        let mut handled = HandleMap::new(&g);
        let mut t = OrderList::init_from_topo(&g);
        let _ = t.pop_front(&mut handled).unwrap(); // n1, ghost at front
        t.remove(ns[1].target); // pretend n2 was consumed by a rewrite
        t.reord_inv(&[ns[1].target]).unwrap(); // and reinserted after the ghost
        assert_eq!(t.pop_front(&mut handled), Some(ns[1].target));
        assert_eq!(t.pop_front(&mut handled), Some(ns[2].target));
        assert_eq!(t.pop_front(&mut handled), None);
    }
}
