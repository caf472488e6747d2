//! Reference construction algorithms the game is benchmarked against:
//! broadcast incremental power (BIP), its sweeping pass (BIPSW), broadcast
//! decremental power (BDP) and the fixed-power group-based algorithm (GBBTC).
//!
//! Following the usual benchmark protocol these heuristics ignore circuitry
//! power while building the tree; circuitry is added afterwards when the
//! resulting network power is reported. Circuitry-aware variants exist
//! behind an explicit flag for ablations.

use thiserror::Error;

use crate::game::{self, CostScheme, GameTrace, Schedule};
use crate::netmodel::{NetworkInstance, NodeId};
use crate::tree::{self, BroadcastTree, InitPolicy, TreeError};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("receiver {0} cannot be reached from the source")]
    Disconnected(NodeId),
    #[error("receiver {0} cannot be reached at the fixed transmit power")]
    DisconnectedAtFixedPower(NodeId),
    #[error("dynamics failed: {0}")]
    Dynamics(#[from] game::GameError),
}

/// Greedy broadcast-incremental-power construction: repeatedly attach the
/// uncovered node whose incremental transmit power at some already-connected
/// transmitter is minimal; ties broken by lowest (transmitter, node) pair.
pub fn bip(inst: &NetworkInstance) -> Result<BroadcastTree, BaselineError> {
    bip_with(inst, false)
}

/// [`bip`] with an optional circuitry-aware incremental cost: a transmitter
/// that is not yet transmitting adds its circuitry power to the increment.
pub fn bip_with(inst: &NetworkInstance, circuitry_aware: bool) -> Result<BroadcastTree, BaselineError> {
    let mut covered = vec![false; inst.len()];
    covered[inst.source().0] = true;
    let mut tx_power = vec![0.0f64; inst.len()];
    let mut tree = BroadcastTree::empty(inst);
    let mut remaining = inst.receiver_count();

    while remaining > 0 {
        let mut best: Option<(f64, NodeId, NodeId)> = None;
        for j in inst.node_ids().filter(|&j| covered[j.0]) {
            for &i in inst.reachable(j) {
                if covered[i.0] {
                    continue;
                }
                let mut incr = (inst.unicast_power(i, j) - tx_power[j.0]).max(0.0);
                if circuitry_aware && tx_power[j.0] == 0.0 {
                    incr += inst.node(j).p_c;
                }
                let candidate = (incr, j, i);
                if best.map_or(true, |(c, bj, bi)| candidate < (c, bj, bi)) {
                    best = Some(candidate);
                }
            }
        }
        let Some((_, j, i)) = best else {
            let victim = inst
                .node_ids()
                .find(|i| !covered[i.0])
                .unwrap_or(inst.source());
            return Err(BaselineError::Disconnected(victim));
        };
        tree.apply_action(i, j, inst)
            .expect("BIP attaches covered transmitters to uncovered neighbors");
        covered[i.0] = true;
        tx_power[j.0] = tx_power[j.0].max(inst.unicast_power(i, j));
        remaining -= 1;
    }
    Ok(tree)
}

/// Sweeping pass over a complete tree: walk transmitters in decreasing
/// transmit-power order and move any child that (a) sits inside another
/// transmitter's existing emission radius and (b) whose removal strictly
/// lowers its current transmitter's emission. Repeats until fixpoint, so the
/// network power never increases and the result is sweep-stable.
pub fn sweep(tree: &BroadcastTree, inst: &NetworkInstance) -> BroadcastTree {
    let (swept, _) = sweep_counted(tree, inst);
    swept
}

/// [`sweep`] also reporting the number of reassignments it made.
pub fn sweep_counted(tree: &BroadcastTree, inst: &NetworkInstance) -> (BroadcastTree, usize) {
    let mut tree = tree.clone();
    let mut moves = 0usize;
    loop {
        let tx_power = |t: &BroadcastTree, j: NodeId| -> f64 {
            t.children(j)
                .iter()
                .map(|&c| inst.unicast_power(c, j))
                .fold(0.0, f64::max)
        };
        let mut transmitters: Vec<NodeId> = tree.transmitters().collect();
        transmitters.sort_by(|&a, &b| {
            tx_power(&tree, b)
                .total_cmp(&tx_power(&tree, a))
                .then(a.cmp(&b))
        });

        let mut changed = false;
        for t in transmitters {
            let children: Vec<NodeId> = tree.children(t).to_vec();
            for i in children {
                if tree.parent(i) != Some(t) {
                    continue;
                }
                let current = tx_power(&tree, t);
                let rest = tree
                    .children(t)
                    .iter()
                    .filter(|&&c| c != i)
                    .map(|&c| inst.unicast_power(c, t))
                    .fold(0.0, f64::max);
                // Only prune links whose removal actually shrinks the emission.
                if !(rest < current && inst.unicast_power(i, t) >= current) {
                    continue;
                }
                let target = inst
                    .neighbors(i)
                    .iter()
                    .copied()
                    .find(|&u| {
                        u != t
                            && tree.is_connected(u)
                            && !tree.route(u).contains(&i)
                            && tx_power(&tree, u) >= inst.unicast_power(i, u)
                    });
                if let Some(u) = target {
                    tree.apply_action(i, u, inst)
                        .expect("sweep target passed the action checks");
                    moves += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return (tree, moves);
        }
    }
}

/// Broadcast decremental power: initialize with the minimum-power
/// (Bellman-Ford) route tree, then let nodes switch parents while the switch
/// strictly lowers the incremental transmit power they impose. The
/// improvement rule is the marginal-contribution cost restricted to transmit
/// power, which is the interpretation adopted here for the under-specified
/// decremental phase.
pub fn bdp(inst: &NetworkInstance) -> Result<BroadcastTree, BaselineError> {
    Ok(bdp_with_trace(inst)?.final_tree)
}

pub fn bdp_with_trace(inst: &NetworkInstance) -> Result<GameTrace, BaselineError> {
    let scheme = CostScheme::marginal_contribution().without_circuitry();
    let start = tree::initialize(inst, InitPolicy::MinPowerPath, &scheme)
        .map_err(tree_error_to_baseline)?;
    let trace = game::run_brd(
        start,
        &scheme,
        inst,
        Schedule::RoundRobin,
        game::DEFAULT_ROUND_CAP,
    )?;
    Ok(trace)
}

/// Group-based fixed-power construction: equal-share dynamics on the
/// fixed-radius graph, sharing only the transmit power (no circuitry term in
/// the cost). Converges because equal share with a fixed group power is the
/// Shapley value of that group.
pub fn gbbtc(inst: &NetworkInstance, p_fixed: f64) -> Result<BroadcastTree, BaselineError> {
    Ok(gbbtc_with_trace(inst, p_fixed)?.1.final_tree)
}

/// [`gbbtc`] returning the restricted instance and the full trace.
pub fn gbbtc_with_trace(
    inst: &NetworkInstance,
    p_fixed: f64,
) -> Result<(NetworkInstance, GameTrace), BaselineError> {
    let restricted = inst.with_uniform_p_max(p_fixed);
    if !restricted.is_connected() {
        let victim = first_unreachable(&restricted);
        return Err(BaselineError::DisconnectedAtFixedPower(victim));
    }
    let scheme = CostScheme::equal_share()
        .with_fixed_power(p_fixed)
        .without_circuitry();
    let start = tree::initialize(&restricted, InitPolicy::GreedyJoin, &scheme)
        .map_err(tree_error_to_baseline)?;
    let trace = game::run_brd(
        start,
        &scheme,
        &restricted,
        Schedule::RoundRobin,
        game::DEFAULT_ROUND_CAP,
    )?;
    Ok((restricted, trace))
}

fn tree_error_to_baseline(err: TreeError) -> BaselineError {
    match err {
        TreeError::Disconnected(i) => BaselineError::Disconnected(i),
        other => panic!("unexpected initialization failure: {other}"),
    }
}

fn first_unreachable(inst: &NetworkInstance) -> NodeId {
    let mut seen = vec![false; inst.len()];
    seen[inst.source().0] = true;
    let mut stack = vec![inst.source()];
    while let Some(j) = stack.pop() {
        for &i in inst.reachable(j) {
            if !seen[i.0] {
                seen[i.0] = true;
                stack.push(i);
            }
        }
    }
    inst.node_ids()
        .find(|i| !seen[i.0])
        .unwrap_or(inst.source())
}
