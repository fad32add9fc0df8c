//! Optimization flows.
//!
//! A flow walks the AND nodes of a graph, and at each *site* tries to replace
//! the logic cone above one of the site's cuts with a resynthesized version.
//! Every candidate is probed inside a transaction and rolled back; only the
//! best survivor is rebuilt for real and committed.  After each commit the
//! flow repairs whatever auxiliary state its engine maintains:
//!
//! * [`EngineKind::BoundLm`] keeps a dynamic topological order plus node
//!   levels and reverse levels, repaired locally ([`dyn_to`], [`dyn_lev`],
//!   [`dyn_rl`]) under a hard level budget.  Sites are popped from the order
//!   list, so freshly created nodes become sites of the same pass.
//! * [`EngineKind::IncLm`] and [`EngineKind::PqLm`] iterate a frozen snapshot
//!   of the initial topological order and keep levels and reverse levels
//!   globally exact with bucket-sweep resp. priority-queue propagation.
//!
//! Two operators are available.  `Refactor` collapses a cut into its
//! irredundant sum-of-products, factors it, and accepts the rebuild when it
//! deletes more nodes than it creates (`--zero-gain` also admits equal-size
//! rebuilds that strictly reduce the site's level, which keeps the pass
//! terminating).  `Perturb` re-associates a randomly chosen cut with a
//! randomly chosen build style regardless of gain; it only fires on nodes of
//! the original graph, so it is a single diversification sweep.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aig::{AffectedSets, AigGraph, Edge, NodeId};
use crate::cut::{enumerate_cuts, CutParams};
use crate::error::Result;
use crate::level::{
    compute_levels_full, compute_reverse_full, dyn_lev, dyn_rl, inclm_update_levels,
    inclm_update_reverse, level_from_fanins, max_output_level, pqlm_update_levels,
    pqlm_update_reverse, LevelBudget, LevelMap, MaintStats, ReverseMap,
};
use crate::order::{dyn_to, HandleMap, OrderList, VisitMap};
use crate::resynth::{build_cover, isop, simulate_deaths, BuildStyle, Cube};

/// Which level-maintenance engine drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    /// Bucket-sweep incremental maintenance over a frozen site order.
    IncLm,
    /// Priority-queue incremental maintenance over a frozen site order.
    PqLm,
    /// Bounded dynamic maintenance: dynamic order, local level repair,
    /// replacements constrained by a level budget.
    BoundLm,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::IncLm => "inclm",
            EngineKind::PqLm => "pqlm",
            EngineKind::BoundLm => "boundlm",
        })
    }
}

/// Which local replacement operator runs at each site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Collapse-and-refactor; accepts only shrinking rebuilds.
    Refactor,
    /// Random re-association; accepts any level-feasible rebuild.
    Perturb,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::Refactor => "refactor",
            OperatorKind::Perturb => "perturb",
        })
    }
}

/// Tunable parameters of a flow run.
#[derive(Debug, Clone)]
pub struct FlowParams {
    pub engine: EngineKind,
    pub operator: OperatorKind,
    pub cut: CutParams,
    /// Also accept zero-gain refactors when they strictly lower the site's
    /// level.  The strict-decrease condition is what guarantees termination.
    pub zero_gain: bool,
    /// Hard bound on output levels; `None` freezes the initial depth.
    pub lmax: Option<u32>,
    /// Seed for the perturb operator's per-site choices.
    pub seed: u64,
}

impl FlowParams {
    pub fn new(engine: EngineKind, operator: OperatorKind) -> Self {
        FlowParams {
            engine,
            operator,
            cut: CutParams::default(),
            zero_gain: false,
            lmax: None,
            seed: 1,
        }
    }
}

/// Summary of one flow run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub engine: EngineKind,
    pub operator: OperatorKind,
    /// AND nodes before / after the run.
    pub initial_ands: usize,
    pub final_ands: usize,
    /// Maximum output level before / after the run.
    pub initial_level: u32,
    pub final_level: u32,
    /// The level budget that was enforced.
    pub lmax: u32,
    /// Sites visited (nodes at which candidates were probed).
    pub sites: usize,
    /// Replacements committed.
    pub accepted: usize,
    /// Candidates discarded because they violated the level budget.
    pub rejected_level: usize,
    /// Maintenance-counter totals for the whole run.
    pub stats: MaintStats,
    /// Largest extended affected set over all committed updates
    /// (inserted + redirected + deprived + merge targets + deleted).
    pub max_extended: usize,
    /// Wall-clock time of the whole run.
    pub total_nanos: u64,
}

impl RunReport {
    fn new(engine: EngineKind, operator: OperatorKind) -> Self {
        RunReport {
            engine,
            operator,
            initial_ands: 0,
            final_ands: 0,
            initial_level: 0,
            final_level: 0,
            lmax: 0,
            sites: 0,
            accepted: 0,
            rejected_level: 0,
            stats: MaintStats::default(),
            max_extended: 0,
            total_nanos: 0,
        }
    }
}

/// Read-only view of the engine's auxiliary state, handed to observers.
/// The order list is only present for the dynamic engine.
pub struct EngineState<'a> {
    pub lv: &'a LevelMap,
    pub rl: &'a ReverseMap,
    pub order: Option<(&'a OrderList, &'a HandleMap)>,
}

/// Callbacks into a flow run, for tests and instrumentation.  `delta` in
/// [`FlowObserver::after_update`] holds exactly the maintenance counters the
/// committed update cost (order, level and reverse-level repair); per-site
/// bookkeeping between updates is excluded.
pub trait FlowObserver {
    /// Called at every site visit with the engine's view of the site's level
    /// and reverse level (for the dynamic engine, right after its pop-time
    /// level refresh).
    fn on_pop(&mut self, _g: &AigGraph, _x: NodeId, _level: u32, _rlevel: u32) {}
    /// Called inside the probe transaction for every candidate that built
    /// successfully, with the tentative graph still containing the candidate
    /// and the level the builder computed for its root.
    fn on_candidate(&mut self, _g: &AigGraph, _site: NodeId, _root: Edge, _level: u32) {}
    /// Called just before the chosen candidate is rebuilt, with the graph
    /// still in its pre-update state.
    fn before_update(&mut self, _g: &AigGraph) {}
    /// Called after the update has been committed and all maintenance ran.
    fn after_update(
        &mut self,
        _g: &AigGraph,
        _sets: &AffectedSets,
        _delta: MaintStats,
        _state: EngineState<'_>,
    ) {
    }
}

/// Observer that does nothing.
pub struct NoObserver;

impl FlowObserver for NoObserver {}

/// Size of the extended affected set of one update.
pub fn extended_size(sets: &AffectedSets) -> usize {
    sets.inserted.len()
        + sets.redirected.len()
        + sets.deprived.len()
        + sets.merge_targets.len()
        + sets.deleted.len()
}

/// A candidate selected by the probe phase, ready to be rebuilt for real.
struct Candidate {
    leaves: Vec<NodeId>,
    cubes: Vec<Cube>,
    style: BuildStyle,
}

fn site_rng(seed: u64, x: NodeId) -> ChaCha8Rng {
    let mixed = seed
        .rotate_left(17)
        .wrapping_add((x.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Probes every cut of `x` inside throwaway transactions and returns the
/// candidate the operator wants committed, if any.
///
/// `site_level` must be the exact current level of `x` and `site_rlevel` its
/// exact reverse level; the budget check `L(x') + R(x) <= lmax` uses the
/// level computed by the builder, which is exact because cut leaves are
/// handled and handled levels never go stale.
#[allow(clippy::too_many_arguments)]
fn probe_site(
    g: &mut AigGraph,
    x: NodeId,
    handled: &HandleMap,
    lv: &LevelMap,
    budget: LevelBudget,
    site_level: u32,
    site_rlevel: u32,
    params: &FlowParams,
    original_nodes: usize,
    report: &mut RunReport,
    obs: &mut dyn FlowObserver,
) -> Option<Candidate> {
    let cuts = enumerate_cuts(g, x, lv, &params.cut);

    match params.operator {
        OperatorKind::Refactor => {
            // Rank: highest gain, then fewest created nodes, then lowest
            // level, then earliest cut.  All components are deterministic.
            let mut best: Option<(i64, usize, u32, Candidate)> = None;
            for cut in &cuts {
                if cut.leaves.len() < 2 {
                    continue;
                }
                let cubes = isop(cut.tt, cut.leaves.len());
                g.begin_update().expect("no update may be open while probing");
                let mut verdict = None;
                if let Some(built) =
                    build_cover(g, x, handled, &cut.leaves, lv, &cubes, BuildStyle::Balanced)
                {
                    obs.on_candidate(g, x, built.root, built.level);
                    if budget.allows(built.level, site_rlevel) {
                        let deaths = simulate_deaths(g, x) as i64;
                        let gain = deaths - built.created as i64;
                        let zero_ok =
                            params.zero_gain && gain == 0 && built.level < site_level;
                        if gain > 0 || zero_ok {
                            verdict = Some((gain, built.created, built.level));
                        }
                    } else {
                        report.rejected_level += 1;
                    }
                }
                g.rollback_update().expect("probes only create nodes");
                if let Some((gain, created, level)) = verdict {
                    let wins = match &best {
                        None => true,
                        Some((bg, bc, bl, _)) => {
                            (-gain, created, level) < (-*bg, *bc, *bl)
                        }
                    };
                    if wins {
                        best = Some((
                            gain,
                            created,
                            level,
                            Candidate {
                                leaves: cut.leaves.clone(),
                                cubes,
                                style: BuildStyle::Balanced,
                            },
                        ));
                    }
                }
            }
            best.map(|(_, _, _, c)| c)
        }
        OperatorKind::Perturb => {
            // One diversification sweep: only nodes of the original graph
            // are perturbed, which bounds the number of accepted updates.
            if x.0 as usize >= original_nodes {
                return None;
            }
            let mut rng = site_rng(params.seed, x);
            let mut order: Vec<usize> = (0..cuts.len())
                .filter(|&i| cuts[i].leaves.len() >= 2)
                .collect();
            order.shuffle(&mut rng);
            for idx in order {
                let cut = &cuts[idx];
                let cubes = isop(cut.tt, cut.leaves.len());
                let style = if rng.gen_bool(0.5) {
                    BuildStyle::LeftChain
                } else {
                    BuildStyle::Balanced
                };
                g.begin_update().expect("no update may be open while probing");
                let mut ok = false;
                if let Some(built) =
                    build_cover(g, x, handled, &cut.leaves, lv, &cubes, style)
                {
                    obs.on_candidate(g, x, built.root, built.level);
                    if budget.allows(built.level, site_rlevel) {
                        ok = true;
                    } else {
                        report.rejected_level += 1;
                    }
                }
                g.rollback_update().expect("probes only create nodes");
                if ok {
                    return Some(Candidate {
                        leaves: cut.leaves.clone(),
                        cubes,
                        style,
                    });
                }
            }
            None
        }
    }
}

/// Rebuilds `cand` at `x` for real, swings fanouts over, deletes the old
/// cone and commits.  Returns the affected sets and the new root.
fn apply_candidate(
    g: &mut AigGraph,
    x: NodeId,
    handled: &HandleMap,
    lv: &LevelMap,
    cand: &Candidate,
) -> Result<(AffectedSets, NodeId)> {
    g.begin_update()?;
    let built = build_cover(g, x, handled, &cand.leaves, lv, &cand.cubes, cand.style)
        .expect("rebuild of a probed candidate cannot fail");
    let xp = built.root;
    g.replace_fanouts(x, xp)?;
    // The cascade may have re-pointed survivors at `x` itself (when `x` is
    // the canonical node for a retargeted pair), in which case it must stay.
    if g.fanouts(x).is_empty() && g.po_refs(x) == 0 {
        g.delete_dangling(x)?;
    }
    let sets = g.commit_update()?;
    Ok((sets, xp.target))
}

/// Runs the configured flow over `g` and returns a run report.
pub fn optimize(g: &mut AigGraph, params: &FlowParams) -> Result<RunReport> {
    optimize_with(g, params, &mut NoObserver)
}

/// Like [`optimize`], with observer callbacks around every committed update.
pub fn optimize_with(
    g: &mut AigGraph,
    params: &FlowParams,
    obs: &mut dyn FlowObserver,
) -> Result<RunReport> {
    match params.engine {
        EngineKind::BoundLm => run_boundlm(g, params, obs),
        EngineKind::IncLm | EngineKind::PqLm => run_baseline(g, params, obs),
    }
}

fn run_boundlm(
    g: &mut AigGraph,
    params: &FlowParams,
    obs: &mut dyn FlowObserver,
) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(EngineKind::BoundLm, params.operator);
    report.initial_ands = g.alive_count();

    let mut lv = compute_levels_full(g);
    let mut rl = compute_reverse_full(g);
    report.initial_level = max_output_level(g, &lv);
    report.lmax = params.lmax.unwrap_or(report.initial_level);
    let budget = LevelBudget::new(report.lmax);

    let original_nodes = g.node_count();
    let mut handled = HandleMap::new(g);
    let mut t = OrderList::init_from_topo(g);
    let mut vis = VisitMap::new();
    let mut stats = MaintStats::default();

    while let Some(x) = t.pop_front(&mut handled) {
        if !g.is_alive(x) {
            continue;
        }
        report.sites += 1;

        // Refresh the site's level from its (handled, hence exact) fanins.
        // Everything popped earlier keeps its refreshed level forever because
        // redirected nodes are always unhandled.
        let t0 = Instant::now();
        let xl = level_from_fanins(g, &lv, x);
        lv.set(x, xl);
        stats.ntl += 1;
        stats.level_maint_nanos += t0.elapsed().as_nanos() as u64;

        let rx = rl.get(x);
        obs.on_pop(g, x, xl, rx);
        let Some(cand) = probe_site(
            g,
            x,
            &handled,
            &lv,
            budget,
            xl,
            rx,
            params,
            original_nodes,
            &mut report,
            obs,
        ) else {
            continue;
        };

        obs.before_update(g);
        let snap = stats;
        let (sets, new_root) = apply_candidate(g, x, &handled, &lv, &cand)?;
        report.accepted += 1;
        report.max_extended = report.max_extended.max(extended_size(&sets));

        for &d in &sets.deleted {
            t.remove(d);
        }
        vis.next_epoch();
        dyn_to(g, &mut t, &handled, new_root, &mut vis, &mut stats)?;
        for &m in &sets.merge_targets {
            dyn_to(g, &mut t, &handled, m, &mut vis, &mut stats)?;
        }
        dyn_lev(g, &mut lv, &sets, &mut stats);
        dyn_rl(g, &mut rl, &sets, &[new_root], &handled, &mut stats);

        let delta = stats - snap;
        obs.after_update(
            g,
            &sets,
            delta,
            EngineState { lv: &lv, rl: &rl, order: Some((&t, &handled)) },
        );
    }

    report.final_ands = g.alive_count();
    let final_lv = compute_levels_full(g);
    report.final_level = max_output_level(g, &final_lv);
    report.stats = stats;
    report.total_nanos = start.elapsed().as_nanos() as u64;
    Ok(report)
}

fn run_baseline(
    g: &mut AigGraph,
    params: &FlowParams,
    obs: &mut dyn FlowObserver,
) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(params.engine, params.operator);
    report.initial_ands = g.alive_count();

    let mut lv = compute_levels_full(g);
    let mut rl = compute_reverse_full(g);
    report.initial_level = max_output_level(g, &lv);
    report.lmax = params.lmax.unwrap_or(report.initial_level);
    let budget = LevelBudget::new(report.lmax);

    // The site order is frozen up front; nodes created by replacements are
    // not revisited.  `processed` plays the role the handled map plays for
    // the dynamic engine: once a node is processed its fanins are never
    // retargeted again (replacements happen at the node being processed,
    // and redirected nodes are fanouts, which come strictly later in the
    // frozen order), so processed nodes are safe to reuse in rebuilds.
    let frozen = crate::verify::topo_order(g);
    let original_nodes = g.node_count();
    let mut processed = HandleMap::new(g);
    let mut stats = MaintStats::default();

    for x in frozen {
        if !g.is_alive(x) {
            continue;
        }
        processed.mark(x);
        report.sites += 1;

        // Baseline maps are globally exact, so no per-site refresh is needed.
        let xl = lv.get(x);
        let rx = rl.get(x);
        obs.on_pop(g, x, xl, rx);
        let Some(cand) = probe_site(
            g,
            x,
            &processed,
            &lv,
            budget,
            xl,
            rx,
            params,
            original_nodes,
            &mut report,
            obs,
        ) else {
            continue;
        };

        obs.before_update(g);
        let snap = stats;
        let (sets, new_root) = apply_candidate(g, x, &processed, &lv, &cand)?;
        report.accepted += 1;
        report.max_extended = report.max_extended.max(extended_size(&sets));

        match params.engine {
            EngineKind::IncLm => {
                inclm_update_levels(g, &mut lv, &sets, &mut stats);
                inclm_update_reverse(g, &mut rl, &sets, &[new_root], &mut stats);
            }
            EngineKind::PqLm => {
                pqlm_update_levels(g, &mut lv, &sets, &mut stats);
                pqlm_update_reverse(g, &mut rl, &sets, &[new_root], &mut stats);
            }
            EngineKind::BoundLm => unreachable!("handled by run_boundlm"),
        }

        let delta = stats - snap;
        obs.after_update(g, &sets, delta, EngineState { lv: &lv, rl: &rl, order: None });
    }

    report.final_ands = g.alive_count();
    let final_lv = compute_levels_full(g);
    report.final_level = max_output_level(g, &final_lv);
    report.stats = stats;
    report.total_nanos = start.elapsed().as_nanos() as u64;
    Ok(report)
}
