//! And-Inverter Graph with structural hashing, fanout lists and transactional
//! local replacement.
//!
//! Node indices are dense and never reused within a run: deleted slots are
//! tombstoned so that any map indexed by `NodeId` stays valid across edits.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Dense index of a node. `NodeId(0)` is the constant-false node.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const CONST: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Directed reference to a node, optionally complemented.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Edge {
    pub target: NodeId,
    pub complemented: bool,
}

impl Edge {
    #[inline]
    pub fn new(target: NodeId, complemented: bool) -> Edge {
        Edge { target, complemented }
    }

    /// Constant edge: `false` is the plain edge to the constant node.
    #[inline]
    pub fn constant(value: bool) -> Edge {
        Edge::new(NodeId::CONST, value)
    }

    #[inline]
    pub fn complement(self) -> Edge {
        Edge::new(self.target, !self.complemented)
    }

    /// Total order key; also the AIGER literal of the edge under the
    /// identity variable numbering.
    #[inline]
    pub fn raw(self) -> u32 {
        (self.target.0 << 1) | self.complemented as u32
    }

    /// Rebase an edge whose target is being replaced by `repl`.
    #[inline]
    fn compose(self, repl: Edge) -> Edge {
        Edge::new(repl.target, self.complemented ^ repl.complemented)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Const,
    Input,
    And { fanin0: Edge, fanin1: Edge },
}

#[derive(Clone, Debug)]
pub struct AigNode {
    pub kind: NodeKind,
    /// Alive nodes referencing this node, once per referencing fanin slot.
    pub fanouts: Vec<NodeId>,
    pub alive: bool,
}

impl AigNode {
    pub fn is_and(&self) -> bool {
        matches!(self.kind, NodeKind::And { .. })
    }
}

/// Change summary of one committed update transaction.
///
/// `inserted` (I) lists nodes created in the transaction and alive at commit,
/// in creation order. `redirected` (P) lists surviving nodes that had a fanin
/// retargeted, including survivors of strash-merge cascades. `deprived` (D)
/// lists surviving nodes that lost at least one fanout edge to a deleted
/// node. Inserted nodes are excluded from P and D, but P and D can overlap:
/// one survivor may have a fanin retargeted and lose a fanout in the same
/// commit, and reverse-level repair must see it among its seeds.
///
/// `merge_targets` lists pre-existing nodes that absorbed a colliding fanout
/// during rehashing, and `deleted` lists every node tombstoned by the
/// transaction; both exist so order and depth maintenance can repair state
/// after cascades.
#[derive(Clone, Debug, Default)]
pub struct AffectedSets {
    pub inserted: Vec<NodeId>,
    pub redirected: Vec<NodeId>,
    pub deprived: Vec<NodeId>,
    pub merge_targets: Vec<NodeId>,
    pub deleted: Vec<NodeId>,
}

#[derive(Clone, Debug, Default)]
struct Journal {
    created: Vec<NodeId>,
    redirected: Vec<NodeId>,
    lost_fanout: Vec<NodeId>,
    merge_targets: Vec<NodeId>,
    deleted: Vec<NodeId>,
    /// Set once replace/delete ran; such a transaction can no longer roll back.
    mutated: bool,
}

enum Folded {
    /// The AND collapses to an existing edge.
    Edge(Edge),
    /// Canonically ordered fanin pair of a genuine 2-input AND.
    Pair(Edge, Edge),
}

#[derive(Clone, Debug)]
pub struct AigGraph {
    nodes: Vec<AigNode>,
    outputs: Vec<Edge>,
    po_refs: Vec<u32>,
    strash: HashMap<(u32, u32), NodeId>,
    num_inputs: u32,
    alive_ands: usize,
    txn: Option<Journal>,
}

impl AigGraph {
    /// Fresh graph holding the constant node and `num_inputs` primary inputs.
    pub fn new(num_inputs: u32) -> AigGraph {
        let mut nodes = Vec::with_capacity(num_inputs as usize + 1);
        nodes.push(AigNode { kind: NodeKind::Const, fanouts: Vec::new(), alive: true });
        for _ in 0..num_inputs {
            nodes.push(AigNode { kind: NodeKind::Input, fanouts: Vec::new(), alive: true });
        }
        let po_refs = vec![0; nodes.len()];
        AigGraph {
            nodes,
            outputs: Vec::new(),
            po_refs,
            strash: HashMap::new(),
            num_inputs,
            alive_ands: 0,
            txn: None,
        }
    }

    pub fn num_inputs(&self) -> u32 {
        self.num_inputs
    }

    /// The `i`-th primary input, `i` in `0..num_inputs`.
    pub fn input(&self, i: u32) -> NodeId {
        assert!(i < self.num_inputs, "input index out of range");
        NodeId(i + 1)
    }

    pub fn inputs(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..=self.num_inputs).map(NodeId)
    }

    /// Total slot count including tombstones; exclusive upper bound of ids.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of alive AND nodes.
    pub fn alive_count(&self) -> usize {
        self.alive_ands
    }

    pub fn node(&self, n: NodeId) -> &AigNode {
        &self.nodes[n.index()]
    }

    pub fn is_alive(&self, n: NodeId) -> bool {
        n.index() < self.nodes.len() && self.nodes[n.index()].alive
    }

    pub fn is_and(&self, n: NodeId) -> bool {
        self.nodes[n.index()].is_and()
    }

    /// Fanin pair of an alive AND node.
    pub fn fanins(&self, n: NodeId) -> Option<(Edge, Edge)> {
        match self.nodes[n.index()].kind {
            NodeKind::And { fanin0, fanin1 } => Some((fanin0, fanin1)),
            _ => None,
        }
    }

    pub fn fanouts(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n.index()].fanouts
    }

    pub fn outputs(&self) -> &[Edge] {
        &self.outputs
    }

    /// Number of primary outputs referencing `n`.
    pub fn po_refs(&self, n: NodeId) -> u32 {
        self.po_refs[n.index()]
    }

    /// Alive AND nodes in ascending id order.
    pub fn and_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, nd)| nd.alive && nd.is_and())
            .map(|(i, _)| NodeId(i as u32))
    }

    fn fold(&self, a: Edge, b: Edge) -> Folded {
        if a.target == NodeId::CONST {
            return if a.complemented { Folded::Edge(b) } else { Folded::Edge(Edge::constant(false)) };
        }
        if b.target == NodeId::CONST {
            return if b.complemented { Folded::Edge(a) } else { Folded::Edge(Edge::constant(false)) };
        }
        if a.target == b.target {
            return if a.complemented == b.complemented {
                Folded::Edge(a)
            } else {
                Folded::Edge(Edge::constant(false))
            };
        }
        if a.raw() <= b.raw() {
            Folded::Pair(a, b)
        } else {
            Folded::Pair(b, a)
        }
    }

    /// Strashed AND of two edges. Constant and duplicate fanins fold to an
    /// existing edge; otherwise the canonical pair is looked up or a node is
    /// created. Inside a transaction the creation is journaled.
    pub fn add_and(&mut self, a: Edge, b: Edge) -> Edge {
        assert!(self.is_alive(a.target), "dead fanin {:?}", a.target);
        assert!(self.is_alive(b.target), "dead fanin {:?}", b.target);
        let (f0, f1) = match self.fold(a, b) {
            Folded::Edge(e) => return e,
            Folded::Pair(x, y) => (x, y),
        };
        let key = (f0.raw(), f1.raw());
        if let Some(&hit) = self.strash.get(&key) {
            return Edge::new(hit, false);
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(AigNode {
            kind: NodeKind::And { fanin0: f0, fanin1: f1 },
            fanouts: Vec::new(),
            alive: true,
        });
        self.po_refs.push(0);
        self.nodes[f0.target.index()].fanouts.push(id);
        self.nodes[f1.target.index()].fanouts.push(id);
        self.strash.insert(key, id);
        self.alive_ands += 1;
        if let Some(j) = self.txn.as_mut() {
            j.created.push(id);
        }
        Edge::new(id, false)
    }

    /// Register a primary output.
    pub fn add_po(&mut self, e: Edge) {
        assert!(self.is_alive(e.target), "dead output target {:?}", e.target);
        self.po_refs[e.target.index()] += 1;
        self.outputs.push(e);
    }

    pub fn begin_update(&mut self) -> Result<()> {
        if self.txn.is_some() {
            return Err(Error::NestedTransaction);
        }
        self.txn = Some(Journal::default());
        Ok(())
    }

    /// Undo every node created since `begin_update`, restoring the graph
    /// bit-identically. Fails after replace/delete ran in this transaction.
    pub fn rollback_update(&mut self) -> Result<()> {
        let j = self.txn.take().ok_or(Error::NoTransaction)?;
        if j.mutated {
            self.txn = Some(j);
            return Err(Error::Irreversible);
        }
        for &id in j.created.iter().rev() {
            debug_assert_eq!(id.index(), self.nodes.len() - 1);
            let node = self.nodes.pop().expect("journaled node exists");
            self.po_refs.pop();
            if let NodeKind::And { fanin0, fanin1 } = node.kind {
                self.strash.remove(&(fanin0.raw(), fanin1.raw()));
                for t in [fanin0.target, fanin1.target] {
                    let list = &mut self.nodes[t.index()].fanouts;
                    debug_assert_eq!(list.last(), Some(&id));
                    list.pop();
                }
                self.alive_ands -= 1;
            }
        }
        Ok(())
    }

    /// Close the transaction and report the affected sets.
    pub fn commit_update(&mut self) -> Result<AffectedSets> {
        let j = self.txn.take().ok_or(Error::NoTransaction)?;
        let inserted: Vec<NodeId> =
            j.created.iter().copied().filter(|&n| self.is_alive(n)).collect();
        let in_inserted = |n: &NodeId| inserted.contains(n);

        let mut redirected: Vec<NodeId> = j
            .redirected
            .iter()
            .copied()
            .filter(|&n| self.is_alive(n) && !in_inserted(&n))
            .collect();
        redirected.sort_unstable();
        redirected.dedup();

        let mut deprived: Vec<NodeId> = j
            .lost_fanout
            .iter()
            .copied()
            .filter(|&n| self.is_alive(n) && !in_inserted(&n))
            .collect();
        deprived.sort_unstable();
        deprived.dedup();

        let mut merge_targets: Vec<NodeId> =
            j.merge_targets.iter().copied().filter(|&n| self.is_alive(n)).collect();
        merge_targets.sort_unstable();
        merge_targets.dedup();

        Ok(AffectedSets {
            inserted,
            redirected,
            deprived,
            merge_targets,
            deleted: j.deleted,
        })
    }

    pub fn in_transaction(&self) -> bool {
        self.txn.is_some()
    }

    /// Redirect every fanout edge and PO reference of `x` to `xp`,
    /// rehashing the retargeted fanouts. A fanout whose new fanin pair
    /// folds or collides with an existing node is merged away and its own
    /// fanouts are redirected in cascade.
    pub fn replace_fanouts(&mut self, x: NodeId, xp: Edge) -> Result<()> {
        if self.txn.is_none() {
            return Err(Error::NoTransaction);
        }
        if !self.is_alive(x) {
            return Err(Error::DeadNode(x));
        }
        if !self.is_alive(xp.target) {
            return Err(Error::DeadNode(xp.target));
        }
        if x == xp.target {
            return Err(Error::SelfReplace(x));
        }
        self.txn.as_mut().expect("checked").mutated = true;

        // (source, replacement, tombstone source after redirect)
        let mut work: Vec<(NodeId, Edge, bool)> = vec![(x, xp, false)];
        let mut orphans: Vec<NodeId> = Vec::new();
        // Replacement edges are captured when queued; their target may merge
        // away before the entry pops, so resolve through the forwarding
        // chain first. Each hop reaches a strictly later queue entry.
        let mut forward: HashMap<NodeId, Edge> = HashMap::new();
        while let Some((s, mut e, tomb)) = work.pop() {
            while let Some(&fw) = forward.get(&e.target) {
                e = e.compose(fw);
            }
            debug_assert!(self.is_alive(e.target));
            self.redirect_one(s, e, &mut work, &mut orphans, &mut forward);
            if tomb {
                debug_assert!(self.nodes[s.index()].fanouts.is_empty());
                debug_assert_eq!(self.po_refs[s.index()], 0);
                self.tombstone(s);
            }
        }
        // Fanins detached by merge collapses may have lost their last
        // reference; sweep them so no dangling logic survives the replace.
        for o in orphans {
            if self.is_deletable(o) {
                self.delete_cascade(o);
            }
        }
        Ok(())
    }

    fn is_deletable(&self, n: NodeId) -> bool {
        self.is_alive(n)
            && self.nodes[n.index()].is_and()
            && self.nodes[n.index()].fanouts.is_empty()
            && self.po_refs[n.index()] == 0
    }

    fn redirect_one(
        &mut self,
        s: NodeId,
        e: Edge,
        work: &mut Vec<(NodeId, Edge, bool)>,
        orphans: &mut Vec<NodeId>,
        forward: &mut HashMap<NodeId, Edge>,
    ) {
        // Primary outputs through s follow the replacement edge.
        if self.po_refs[s.index()] > 0 {
            let moved = self.po_refs[s.index()];
            for out in self.outputs.iter_mut() {
                if out.target == s {
                    *out = out.compose(e);
                }
            }
            self.po_refs[s.index()] = 0;
            self.po_refs[e.target.index()] += moved;
        }

        let fouts = std::mem::take(&mut self.nodes[s.index()].fanouts);
        for f in fouts {
            debug_assert!(self.is_alive(f), "stale fanout entry {f:?}");
            let (old0, old1) = self.fanins(f).expect("fanout is an AND");
            self.strash.remove(&(old0.raw(), old1.raw()));
            // Exactly one slot references s: canonical pairs have distinct targets.
            let (hit, other) = if old0.target == s { (old0, old1) } else { (old1, old0) };
            debug_assert_eq!(hit.target, s);
            let retargeted = hit.compose(e);

            match self.fold(retargeted, other) {
                Folded::Edge(equiv) => {
                    // f collapses; detach its surviving fanin and cascade.
                    self.remove_fanout_once(other.target, f);
                    self.journal().lost_fanout.push(other.target);
                    self.journal().redirected.push(f);
                    orphans.push(other.target);
                    forward.insert(f, equiv);
                    work.push((f, equiv, true));
                }
                Folded::Pair(n0, n1) => {
                    let key = (n0.raw(), n1.raw());
                    if let Some(&g) = self.strash.get(&key) {
                        debug_assert_ne!(g, f);
                        self.remove_fanout_once(other.target, f);
                        self.journal().lost_fanout.push(other.target);
                        self.journal().redirected.push(f);
                        self.journal().merge_targets.push(g);
                        orphans.push(other.target);
                        forward.insert(f, Edge::new(g, false));
                        work.push((f, Edge::new(g, false), true));
                    } else {
                        self.strash.insert(key, f);
                        self.nodes[f.index()].kind = NodeKind::And { fanin0: n0, fanin1: n1 };
                        self.nodes[e.target.index()].fanouts.push(f);
                        self.journal().redirected.push(f);
                    }
                }
            }
        }
    }

    fn journal(&mut self) -> &mut Journal {
        self.txn.as_mut().expect("transaction open")
    }

    fn remove_fanout_once(&mut self, target: NodeId, f: NodeId) {
        let list = &mut self.nodes[target.index()].fanouts;
        let pos = list.iter().position(|&n| n == f).expect("fanout entry present");
        list.remove(pos);
    }

    fn tombstone(&mut self, n: NodeId) {
        debug_assert!(self.nodes[n.index()].alive);
        self.nodes[n.index()].alive = false;
        self.alive_ands -= 1;
        self.journal().deleted.push(n);
    }

    /// Delete the fanout-free node `n` and recursively every fanin that
    /// thereby loses its last reference. Surviving fanins of deleted nodes
    /// are recorded as the deprived set of the transaction.
    pub fn delete_dangling(&mut self, n: NodeId) -> Result<()> {
        if self.txn.is_none() {
            return Err(Error::NoTransaction);
        }
        if !self.is_alive(n) {
            return Err(Error::DeadNode(n));
        }
        if !self.is_and(n) {
            return Err(Error::CannotDelete { node: n, reason: "not an AND node" });
        }
        if !self.nodes[n.index()].fanouts.is_empty() {
            return Err(Error::CannotDelete { node: n, reason: "still has fanouts" });
        }
        if self.po_refs[n.index()] > 0 {
            return Err(Error::CannotDelete { node: n, reason: "referenced by a primary output" });
        }
        self.txn.as_mut().expect("checked").mutated = true;
        self.delete_cascade(n);
        Ok(())
    }

    fn delete_cascade(&mut self, n: NodeId) {
        let mut stack = vec![n];
        while let Some(y) = stack.pop() {
            if !self.is_alive(y) {
                continue;
            }
            let (f0, f1) = self.fanins(y).expect("only ANDs are deletable");
            self.strash.remove(&(f0.raw(), f1.raw()));
            self.tombstone(y);
            for m in [f0.target, f1.target] {
                self.remove_fanout_once(m, y);
                self.journal().lost_fanout.push(m);
                if self.is_deletable(m) {
                    stack.push(m);
                }
            }
        }
    }

    /// Order-insensitive digest of the full structural state.
    pub fn state_fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.num_inputs.hash(&mut h);
        self.nodes.len().hash(&mut h);
        self.alive_ands.hash(&mut h);
        for (i, nd) in self.nodes.iter().enumerate() {
            i.hash(&mut h);
            nd.alive.hash(&mut h);
            match nd.kind {
                NodeKind::Const => 0u8.hash(&mut h),
                NodeKind::Input => 1u8.hash(&mut h),
                NodeKind::And { fanin0, fanin1 } => {
                    2u8.hash(&mut h);
                    fanin0.raw().hash(&mut h);
                    fanin1.raw().hash(&mut h);
                }
            }
            nd.fanouts.hash(&mut h);
            self.po_refs[i].hash(&mut h);
        }
        for out in &self.outputs {
            out.raw().hash(&mut h);
        }
        h.finish()
    }

    /// Exhaustive structural self-check; used by tests after every mutation
    /// pattern. Returns a description of the first violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut alive_ands = 0usize;
        for (i, nd) in self.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            if !nd.alive {
                continue;
            }
            if let NodeKind::And { fanin0, fanin1 } = nd.kind {
                alive_ands += 1;
                if fanin0.raw() > fanin1.raw() {
                    return Err(format!("{id:?}: fanins not canonical"));
                }
                if fanin0.target == fanin1.target {
                    return Err(format!("{id:?}: duplicate fanin target"));
                }
                if fanin0.target == NodeId::CONST || fanin1.target == NodeId::CONST {
                    return Err(format!("{id:?}: unfolded constant fanin"));
                }
                for e in [fanin0, fanin1] {
                    if !self.is_alive(e.target) {
                        return Err(format!("{id:?}: dead fanin {:?}", e.target));
                    }
                    let cnt =
                        self.nodes[e.target.index()].fanouts.iter().filter(|&&f| f == id).count();
                    if cnt != 1 {
                        return Err(format!(
                            "{id:?}: fanin {:?} lists it {cnt} times",
                            e.target
                        ));
                    }
                }
                match self.strash.get(&(fanin0.raw(), fanin1.raw())) {
                    Some(&hit) if hit == id => {}
                    other => return Err(format!("{id:?}: strash maps pair to {other:?}")),
                }
            }
            for &f in &nd.fanouts {
                if !self.is_alive(f) {
                    return Err(format!("{id:?}: dead fanout {f:?}"));
                }
                let (f0, f1) = match self.fanins(f) {
                    Some(p) => p,
                    None => return Err(format!("{id:?}: fanout {f:?} is not an AND")),
                };
                if f0.target != id && f1.target != id {
                    return Err(format!("{id:?}: fanout {f:?} does not reference it"));
                }
            }
        }
        if alive_ands != self.alive_ands {
            return Err(format!(
                "alive count {} != recount {alive_ands}",
                self.alive_ands
            ));
        }
        if self.strash.len() != alive_ands {
            return Err(format!(
                "strash size {} != alive ANDs {alive_ands}",
                self.strash.len()
            ));
        }
        let mut po_refs = vec![0u32; self.nodes.len()];
        for out in &self.outputs {
            if !self.is_alive(out.target) {
                return Err(format!("output targets dead {:?}", out.target));
            }
            po_refs[out.target.index()] += 1;
        }
        if po_refs != self.po_refs {
            return Err("po_refs out of sync".to_string());
        }
        // Acyclicity over alive nodes.
        let mut state = vec![0u8; self.nodes.len()]; // 0 unseen, 1 on stack, 2 done
        for start in 0..self.nodes.len() {
            if !self.nodes[start].alive || state[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, u8)> = vec![(start, 0)];
            while let Some(&mut (v, ref mut phase)) = stack.last_mut() {
                if *phase == 0 {
                    *phase = 1;
                    state[v] = 1;
                    if let NodeKind::And { fanin0, fanin1 } = self.nodes[v].kind {
                        for e in [fanin0, fanin1] {
                            match state[e.target.index()] {
                                0 => stack.push((e.target.index(), 0)),
                                1 => return Err(format!("cycle through {:?}", e.target)),
                                _ => {}
                            }
                        }
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }
}
