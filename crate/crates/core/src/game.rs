//! The non-cooperative cost-sharing game: action sets, MC/SV/ES cost rules,
//! best-response dynamics, equilibrium certification and potential-function
//! machinery.
//!
//! A child node picks a connected, non-descendant neighbor as its parent and
//! pays a share of that parent's power. Marginal contribution charges the
//! extra power the child imposes; the Shapley value averages marginal
//! contributions over join orders (prefix-sum form for the max rule); equal
//! share splits the parent power evenly. The optional fixed-power mode
//! replaces the max-rule transmit power with a constant, and the cost can
//! exclude the circuitry term for benchmarks that only see transmit power.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{self, NetworkInstance, NodeId, RandomInstanceConfig};
use crate::tree::{self, ActionProfile, BroadcastTree};

/// Deviations must beat the current cost by more than this relative margin
/// to count, which keeps floating-point noise from causing livelock.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

/// Default best-response round cap.
pub const DEFAULT_ROUND_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    MarginalContribution,
    ShapleyValue,
    EqualShare,
}

impl SchemeKind {
    pub fn short_name(self) -> &'static str {
        match self {
            SchemeKind::MarginalContribution => "mc",
            SchemeKind::ShapleyValue => "sv",
            SchemeKind::EqualShare => "es",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeKind> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Some(SchemeKind::MarginalContribution),
            "sv" => Some(SchemeKind::ShapleyValue),
            "es" => Some(SchemeKind::EqualShare),
            _ => None,
        }
    }
}

/// Cost rule selector.
///
/// `fixed_power` switches the game to the fixed-transmit-power problem: every
/// transmitter's emission power is that constant, overriding per-node power
/// control (and per-node `p_max`, which equal-power hardware is assumed to
/// satisfy). `circuitry_in_cost` is disabled by benchmarks that share only
/// the transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostScheme {
    pub kind: SchemeKind,
    pub fixed_power: Option<f64>,
    pub circuitry_in_cost: bool,
}

impl CostScheme {
    pub fn marginal_contribution() -> CostScheme {
        CostScheme {
            kind: SchemeKind::MarginalContribution,
            fixed_power: None,
            circuitry_in_cost: true,
        }
    }

    pub fn shapley_value() -> CostScheme {
        CostScheme {
            kind: SchemeKind::ShapleyValue,
            fixed_power: None,
            circuitry_in_cost: true,
        }
    }

    pub fn equal_share() -> CostScheme {
        CostScheme {
            kind: SchemeKind::EqualShare,
            fixed_power: None,
            circuitry_in_cost: true,
        }
    }

    pub fn with_fixed_power(mut self, watts: f64) -> CostScheme {
        self.fixed_power = Some(watts);
        self
    }

    pub fn without_circuitry(mut self) -> CostScheme {
        self.circuitry_in_cost = false;
        self
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if let Some(p) = self.fixed_power {
            if !(p > 0.0) || !p.is_finite() {
                return Err(GameError::InvalidScheme(format!(
                    "fixed power must be positive and finite, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// The power model matching this scheme, for reporting network power of
    /// trees the scheme produced.
    pub fn power_model(&self) -> netmodel::PowerModel {
        match self.fixed_power {
            Some(p) => netmodel::PowerModel::Fixed(p),
            None => netmodel::PowerModel::Adaptive,
        }
    }

    /// Per-child total unicast power as seen by the cost rule.
    fn child_total_power(&self, m: NodeId, j: NodeId, inst: &NetworkInstance) -> f64 {
        let circuitry = if self.circuitry_in_cost {
            inst.node(j).p_c
        } else {
            0.0
        };
        let tx = match self.fixed_power {
            Some(p) => p,
            None => inst.unicast_power(m, j),
        };
        circuitry + tx
    }

    /// Group power of transmitter `j` serving `members` under the cost
    /// rule's power view (max rule, or the fixed constant).
    fn group_power(&self, members: &[NodeId], j: NodeId, inst: &NetworkInstance) -> f64 {
        members
            .iter()
            .map(|&m| self.child_total_power(m, j, inst))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("node {node} is not a member of the given child set")]
    NotAChild { node: NodeId },
    #[error("node {node} has an empty action set")]
    EmptyActionSet { node: NodeId },
    #[error("transmitter {node} serves no children")]
    NoChildren { node: NodeId },
    #[error("parent {parent} is not in the action set of node {node}")]
    NotInActionSet { node: NodeId, parent: NodeId },
    #[error("invalid cost scheme: {0}")]
    InvalidScheme(String),
}

/// Nodes that `i` may pick as its parent right now: connected neighbors that
/// are not descendants of `i`.
pub fn action_set(i: NodeId, tree: &BroadcastTree, inst: &NetworkInstance) -> Vec<NodeId> {
    inst.neighbors(i)
        .iter()
        .copied()
        .filter(|&j| tree.is_connected(j) && !tree.route(j).contains(&i))
        .collect()
}

/// Cost charged to member `i` of transmitter `j`'s multicast group
/// `members` (which must contain `i`).
pub fn cost(
    scheme: &CostScheme,
    i: NodeId,
    j: NodeId,
    members: &[NodeId],
    inst: &NetworkInstance,
) -> Result<f64, GameError> {
    if !members.contains(&i) {
        return Err(GameError::NotAChild { node: i });
    }
    Ok(match scheme.kind {
        SchemeKind::MarginalContribution => {
            let with = scheme.group_power(members, j, inst);
            let without: Vec<NodeId> = members.iter().copied().filter(|&m| m != i).collect();
            with - scheme.group_power(&without, j, inst)
        }
        SchemeKind::ShapleyValue => {
            let mut powers: Vec<(f64, NodeId)> = members
                .iter()
                .map(|&m| (scheme.child_total_power(m, j, inst), m))
                .collect();
            powers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let m = powers.len();
            let mut share = 0.0;
            let mut prev = 0.0;
            for (rank, &(p, member)) in powers.iter().enumerate() {
                share += (p - prev) / (m - rank) as f64;
                prev = p;
                if member == i {
                    break;
                }
            }
            share
        }
        SchemeKind::EqualShare => {
            scheme.group_power(members, j, inst) / members.len() as f64
        }
    })
}

/// Best response of node `i`: the action-set parent minimizing its cost.
/// Returns a change only on strict improvement over the current cost; ties
/// keep the current parent, then prefer the lowest node id.
pub fn best_response(
    i: NodeId,
    tree: &BroadcastTree,
    scheme: &CostScheme,
    inst: &NetworkInstance,
) -> Result<Option<(NodeId, f64)>, GameError> {
    let actions = action_set(i, tree, inst);
    if actions.is_empty() {
        return Err(GameError::EmptyActionSet { node: i });
    }
    let current = tree
        .parent(i)
        .ok_or(GameError::EmptyActionSet { node: i })?;
    let current_cost = cost(scheme, i, current, tree.children(current), inst)?;

    let mut best: Option<(f64, NodeId)> = None;
    for j in actions {
        if j == current {
            continue;
        }
        let mut members = tree.children(j).to_vec();
        members.push(i);
        let c = cost(scheme, i, j, &members, inst)?;
        if best.map_or(true, |(bc, _)| c < bc) {
            best = Some((c, j));
        }
    }
    match best {
        Some((c, j)) if current_cost - c > IMPROVEMENT_TOL * current_cost.abs().max(1.0) => {
            Ok(Some((j, c)))
        }
        _ => Ok(None),
    }
}

/// The exact potential of the marginal-contribution game: the network power
/// (sum of per-node powers) of the tree.
pub fn potential(tree: &BroadcastTree, inst: &NetworkInstance) -> Result<f64, netmodel::NetModelError> {
    netmodel::network_power(tree, inst)
}

fn harmonic(k: usize) -> f64 {
    (1..=k).map(|t| 1.0 / t as f64).sum()
}

/// Potential function recorded in traces, chosen per scheme so that MC and
/// SV runs are provably monotone: MC uses the summed group powers of its own
/// cost view; SV (and the fixed-power equal share, which coincides with SV)
/// uses the prefix/harmonic potential whose per-player difference equals the
/// Shapley share. Adaptive equal share has no potential; its traces record
/// the group-power sum for inspection only.
pub fn scheme_potential(tree: &BroadcastTree, scheme: &CostScheme, inst: &NetworkInstance) -> f64 {
    let shapley_like = matches!(scheme.kind, SchemeKind::ShapleyValue)
        || (matches!(scheme.kind, SchemeKind::EqualShare) && scheme.fixed_power.is_some());
    let mut total = 0.0;
    for j in inst.node_ids() {
        let members = tree.children(j);
        if members.is_empty() {
            continue;
        }
        if shapley_like {
            let mut powers: Vec<f64> = members
                .iter()
                .map(|&m| scheme.child_total_power(m, j, inst))
                .collect();
            powers.sort_by(f64::total_cmp);
            let m = powers.len();
            let mut prev = 0.0;
            for (rank, &p) in powers.iter().enumerate() {
                total += (p - prev) * harmonic(m - rank);
                prev = p;
            }
        } else {
            total += scheme.group_power(members, j, inst);
        }
    }
    total
}

/// Evaluate the deviation `i -> j` without committing it: the change in
/// `i`'s cost and the change in network power (the exact-potential pair for
/// the marginal-contribution scheme).
pub fn check_exact_potential(
    tree: &BroadcastTree,
    i: NodeId,
    j: NodeId,
    scheme: &CostScheme,
    inst: &NetworkInstance,
) -> Result<(f64, f64), GameError> {
    let current = tree.parent(i).ok_or(GameError::EmptyActionSet { node: i })?;
    if !action_set(i, tree, inst).contains(&j) {
        return Err(GameError::NotInActionSet { node: i, parent: j });
    }
    if j == current {
        return Ok((0.0, 0.0));
    }
    let cost_before = cost(scheme, i, current, tree.children(current), inst)?;
    let mut new_members = tree.children(j).to_vec();
    new_members.push(i);
    let cost_after = cost(scheme, i, j, &new_members, inst)?;

    // Only the two affected transmitters change their node power.
    let true_power = |members: &[NodeId], t: NodeId| -> f64 {
        if members.is_empty() {
            0.0
        } else {
            inst.node(t).p_c
                + members
                    .iter()
                    .map(|&m| inst.unicast_power(m, t))
                    .fold(0.0, f64::max)
        }
    };
    let old_members: Vec<NodeId> = tree
        .children(current)
        .iter()
        .copied()
        .filter(|&m| m != i)
        .collect();
    let d_phi = true_power(&new_members, j) - true_power(tree.children(j), j)
        + true_power(&old_members, current)
        - true_power(tree.children(current), current);
    Ok((cost_after - cost_before, d_phi))
}

/// Cost-sum minus group power at transmitter `j`; zero for budget-balanced
/// schemes, generally negative for marginal contribution.
pub fn budget_balance_residual(
    j: NodeId,
    tree: &BroadcastTree,
    scheme: &CostScheme,
    inst: &NetworkInstance,
) -> Result<f64, GameError> {
    let members = tree.children(j);
    if members.is_empty() {
        return Err(GameError::NoChildren { node: j });
    }
    let mut paid = 0.0;
    for &i in members {
        paid += cost(scheme, i, j, members, inst)?;
    }
    Ok(paid - scheme.group_power(members, j, inst))
}

/// True iff no node has a strictly improving unilateral deviation; on false
/// the witness is the first improving (node, new parent) pair in node order.
pub fn is_nash_equilibrium(
    tree: &BroadcastTree,
    scheme: &CostScheme,
    inst: &NetworkInstance,
) -> Result<(bool, Option<(NodeId, NodeId)>), GameError> {
    for i in inst.receivers() {
        if let Some((j, _)) = best_response(i, tree, scheme, inst)? {
            return Ok((false, Some((i, j))));
        }
    }
    Ok((true, None))
}

/// Update order used by the best-response dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// A fresh random permutation of the receivers each round (default).
    RandomPermutation { seed: u64 },
    /// Fixed ascending node order each round.
    RoundRobin,
    /// Uniformly random single picks, `N` per round.
    RandomSingle { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based committed-change index.
    pub iteration: usize,
    pub round: usize,
    pub node: NodeId,
    pub old_parent: NodeId,
    pub new_parent: NodeId,
    pub cost_before: f64,
    pub cost_after: f64,
    pub potential_before: f64,
    pub potential_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// A full round made no change and no improving deviation exists.
    ConvergedNe,
    /// A previously seen action profile recurred; the witness holds the
    /// profile sequence from its first occurrence back to itself.
    CycleDetected(Vec<ActionProfile>),
    /// The round cap was reached without convergence.
    CapExceeded,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::ConvergedNe => "converged_ne",
            Outcome::CycleDetected(_) => "cycle_detected",
            Outcome::CapExceeded => "cap_exceeded",
        }
    }
}

/// Step-by-step record of one best-response run.
#[derive(Debug, Clone)]
pub struct GameTrace {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub rounds: usize,
    pub final_tree: BroadcastTree,
}

impl GameTrace {
    pub fn converged(&self) -> bool {
        matches!(self.outcome, Outcome::ConvergedNe)
    }

    /// Committed action changes, the iterations-to-converge metric.
    pub fn committed_changes(&self) -> usize {
        self.steps.len()
    }
}

/// Run best-response dynamics until a full round changes nothing
/// (convergence), an action profile recurs (a best-response cycle, possible
/// only without a potential function), or the round cap is hit.
pub fn run_brd(
    mut tree: BroadcastTree,
    scheme: &CostScheme,
    inst: &NetworkInstance,
    schedule: Schedule,
    round_cap: usize,
) -> Result<GameTrace, GameError> {
    scheme.validate()?;
    debug_assert!(tree.is_complete(), "BRD needs a complete starting tree");

    let receivers: Vec<NodeId> = inst.receivers().collect();
    let mut rng = match schedule {
        Schedule::RandomPermutation { seed } | Schedule::RandomSingle { seed } => {
            Some(ChaCha8Rng::seed_from_u64(seed))
        }
        Schedule::RoundRobin => None,
    };

    let mut steps = Vec::new();
    let mut seen: HashMap<ActionProfile, usize> = HashMap::new();
    let mut history: Vec<ActionProfile> = Vec::new();
    let initial = tree.profile().expect("complete tree has a full profile");
    seen.insert(initial.clone(), 0);
    history.push(initial);

    let mut committed = 0usize;
    for round in 1..=round_cap {
        let order: Vec<NodeId> = match schedule {
            Schedule::RoundRobin => receivers.clone(),
            Schedule::RandomPermutation { .. } => {
                let mut order = receivers.clone();
                order.shuffle(rng.as_mut().expect("seeded schedule has an rng"));
                order
            }
            Schedule::RandomSingle { .. } => {
                let rng = rng.as_mut().expect("seeded schedule has an rng");
                (0..receivers.len())
                    .map(|_| receivers[rng.gen_range(0..receivers.len())])
                    .collect()
            }
        };

        let mut round_changed = false;
        for i in order {
            let Some((j, cost_after)) = best_response(i, &tree, scheme, inst)? else {
                continue;
            };
            let old_parent = tree.parent(i).expect("mover is connected");
            let cost_before = cost(scheme, i, old_parent, tree.children(old_parent), inst)?;
            let potential_before = scheme_potential(&tree, scheme, inst);
            tree.apply_action(i, j, inst)
                .expect("best response stays within the action set");
            let potential_after = scheme_potential(&tree, scheme, inst);
            committed += 1;
            steps.push(Step {
                iteration: committed,
                round,
                node: i,
                old_parent,
                new_parent: j,
                cost_before,
                cost_after,
                potential_before,
                potential_after,
            });
            round_changed = true;

            let profile = tree.profile().expect("tree stays complete");
            if let Some(&first) = seen.get(&profile) {
                let mut witness = history[first..].to_vec();
                witness.push(profile);
                return Ok(GameTrace {
                    steps,
                    outcome: Outcome::CycleDetected(witness),
                    rounds: round,
                    final_tree: tree,
                });
            }
            seen.insert(profile.clone(), committed);
            history.push(profile);
        }

        if !round_changed {
            // Under random single picks a quiet round does not cover every
            // node, so certify before declaring convergence.
            let certified = match schedule {
                Schedule::RandomSingle { .. } => is_nash_equilibrium(&tree, scheme, inst)?.0,
                _ => true,
            };
            if certified {
                return Ok(GameTrace {
                    steps,
                    outcome: Outcome::ConvergedNe,
                    rounds: round,
                    final_tree: tree,
                });
            }
        }
    }
    Ok(GameTrace {
        steps,
        outcome: Outcome::CapExceeded,
        rounds: round_cap,
        final_tree: tree,
    })
}

/// Replay a cycle witness against the instance: the profile sequence must
/// start and end at the same profile and every hop must be a strictly
/// improving unilateral deviation.
pub fn verify_cycle_witness(
    witness: &[ActionProfile],
    scheme: &CostScheme,
    inst: &NetworkInstance,
) -> bool {
    if witness.len() < 2 || witness.first() != witness.last() {
        return false;
    }
    let receivers: Vec<NodeId> = inst.receivers().collect();
    for pair in witness.windows(2) {
        let (before, after) = (&pair[0], &pair[1]);
        let movers: Vec<usize> = (0..receivers.len())
            .filter(|&k| before.0[k] != after.0[k])
            .collect();
        let [moved] = movers.as_slice() else {
            return false;
        };
        let i = receivers[*moved];
        let mut parents: Vec<Option<NodeId>> = vec![None; inst.len()];
        for (k, &r) in receivers.iter().enumerate() {
            parents[r.0] = Some(before.0[k]);
        }
        parents[inst.source().0] = None;
        let tree = BroadcastTree::from_parents(inst, &parents);
        if !tree::validate(&tree, inst).is_valid() {
            return false;
        }
        let j = after.0[*moved];
        if !action_set(i, &tree, inst).contains(&j) {
            return false;
        }
        let old = before.0[*moved];
        let before_cost = match cost(scheme, i, old, tree.children(old), inst) {
            Ok(c) => c,
            Err(_) => return false,
        };
        let mut members = tree.children(j).to_vec();
        members.push(i);
        let after_cost = match cost(scheme, i, j, &members, inst) {
            Ok(c) => c,
            Err(_) => return false,
        };
        if !(before_cost - after_cost > IMPROVEMENT_TOL * before_cost.abs().max(1.0)) {
            return false;
        }
    }
    true
}

/// Randomized search for an instance on which adaptive equal-share dynamics
/// cycle. Candidates are random instances of `base` with the node count
/// rotating over `counts`; returns the first hit together with its trace.
pub fn find_es_cycle_instance(
    base: &RandomInstanceConfig,
    counts: &[usize],
    seed: u64,
    max_candidates: usize,
) -> Option<(NetworkInstance, GameTrace, usize)> {
    let scheme = CostScheme::equal_share();
    for k in 0..max_candidates {
        let mut cfg = base.clone();
        cfg.node_count = counts[k % counts.len()];
        let Ok(inst) = netmodel::generate_random_instance(&cfg, seed.wrapping_add(k as u64))
        else {
            continue;
        };
        if !inst.is_connected() {
            continue;
        }
        let Ok(start) = tree::initialize(&inst, tree::InitPolicy::GreedyJoin, &scheme) else {
            continue;
        };
        let Ok(trace) = run_brd(start, &scheme, &inst, Schedule::RoundRobin, 200) else {
            continue;
        };
        if matches!(trace.outcome, Outcome::CycleDetected(_)) {
            return Some((inst, trace, k));
        }
    }
    None
}

// --- trace export ---------------------------------------------------------

#[derive(Serialize)]
struct StepRecord {
    iteration: usize,
    round: usize,
    node: u64,
    old_parent: u64,
    new_parent: u64,
    cost_before: f64,
    cost_after: f64,
    potential_before: f64,
    potential_after: f64,
}

/// One JSON object per committed step.
pub fn trace_to_jsonl(trace: &GameTrace, inst: &NetworkInstance) -> String {
    let mut out = String::new();
    for s in &trace.steps {
        let record = StepRecord {
            iteration: s.iteration,
            round: s.round,
            node: inst.node(s.node).id,
            old_parent: inst.node(s.old_parent).id,
            new_parent: inst.node(s.new_parent).id,
            cost_before: s.cost_before,
            cost_after: s.cost_after,
            potential_before: s.potential_before,
            potential_after: s.potential_after,
        };
        out.push_str(&serde_json::to_string(&record).expect("step serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Summary record for a finished run.
pub fn trace_summary_json(
    trace: &GameTrace,
    inst: &NetworkInstance,
    model: netmodel::PowerModel,
) -> String {
    let power = netmodel::network_power_with(&trace.final_tree, inst, model).unwrap_or(f64::NAN);
    serde_json::json!({
        "outcome": trace.outcome.label(),
        "rounds": trace.rounds,
        "committed_changes": trace.committed_changes(),
        "final_network_power_w": power,
        "transmitter_count": trace.final_tree.transmitter_count(),
    })
    .to_string()
}
