//! Theory-side checks: price-of-anarchy machinery, line-topology bounds and
//! the budget-balance misalignment certificate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::game::{self, CostScheme, SchemeKind};
use crate::netmodel::{self, NetworkInstance, NodeId};
use crate::tree::BroadcastTree;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("scheme {0:?} is not budget-balanced")]
    SchemeNotBudgetBalanced(SchemeKind),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Game(#[from] game::GameError),
    #[error(transparent)]
    Exact(#[from] exact::ExactError),
    #[error(transparent)]
    NetModel(#[from] netmodel::NetModelError),
}

/// Ratio of an equilibrium tree's network power to the optimum tree's.
pub fn poa_ratio(
    ne_tree: &BroadcastTree,
    opt_tree: &BroadcastTree,
    inst: &NetworkInstance,
) -> Result<f64, AnalysisError> {
    let ne = netmodel::network_power(ne_tree, inst)?;
    let opt = netmodel::network_power(opt_tree, inst)?;
    Ok(ne / opt)
}

/// Closed-form price-of-anarchy ratio of the line construction: the
/// single-broadcast profile against the all-unicast chain,
/// `(1 + p_c) / (N (1/N^alpha + p_c))`.
pub fn line_poa_formula(n: usize, alpha: f64, p_c: f64) -> f64 {
    (1.0 + p_c) / (n as f64 * ((n as f64).powf(-alpha) + p_c))
}

/// Circuitry-power threshold below which the all-unicast chain on the
/// normalized line beats the alternatives considered by the bound argument:
/// `1 - 1/2^(alpha-1)` for two receivers, `(1 - 1/N^(alpha-1)) / (N - 2)`
/// otherwise.
pub fn line_pc_threshold(n: usize, alpha: f64) -> f64 {
    assert!(n >= 2, "the line threshold needs at least two receivers");
    if n == 2 {
        1.0 - 0.5f64.powf(alpha - 1.0)
    } else {
        (1.0 - (n as f64).powf(-(alpha - 1.0))) / (n as f64 - 2.0)
    }
}

/// Report produced by [`verify_line_instance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineReport {
    pub n: usize,
    pub alpha: f64,
    pub p_c: f64,
    /// Network power of the all-unicast chain.
    pub chain_power: f64,
    /// Network power of the single source broadcast.
    pub bcast_power: f64,
    /// The closed-form ratio of the two profiles above.
    pub poa_formula: f64,
    /// Optimum network power, when the instance is small enough to solve.
    pub opt_power: Option<f64>,
    /// Whether the chain attains the optimum (None when unsolved).
    pub chain_is_optimal: Option<bool>,
    /// Whether the broadcast profile is a marginal-contribution equilibrium.
    /// Reported, not asserted: it generally is not at zero perturbation.
    pub bcast_is_ne: bool,
    /// An improving deviation from the broadcast profile, if one exists
    /// (node label, new parent label).
    pub bcast_improving: Option<(u64, u64)>,
}

/// Build the normalized line, evaluate the chain and broadcast profiles,
/// solve for the optimum when feasible and report whether the broadcast
/// profile is an equilibrium under marginal contribution.
pub fn verify_line_instance(
    n: usize,
    alpha: f64,
    p_c: f64,
    epsilon: f64,
    exact_limit: usize,
) -> Result<LineReport, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::PreconditionViolated(
            "line analysis needs at least two receivers".into(),
        ));
    }
    let threshold = line_pc_threshold(n, alpha);
    if p_c > threshold {
        return Err(AnalysisError::PreconditionViolated(format!(
            "p_c = {p_c} exceeds the line threshold {threshold}"
        )));
    }
    let inst = netmodel::line_instance_compressed(n, alpha, p_c, epsilon)?;

    // All-unicast chain: each node relays to the next.
    let mut chain = BroadcastTree::empty(&inst);
    for i in 1..=n {
        chain
            .apply_action(NodeId(i), NodeId(i - 1), &inst)
            .expect("adjacent line hops are feasible");
    }
    let chain_power = netmodel::network_power(&chain, &inst)?;

    // Single broadcast straight from the source.
    let bcast = BroadcastTree::star(&inst)
        .expect("the farthest receiver sits exactly at the power budget");
    let bcast_power = netmodel::network_power(&bcast, &inst)?;

    let (opt_power, chain_is_optimal) = if n <= exact_limit {
        let opt = exact::solve_exact(&inst, exact_limit)?;
        let p = netmodel::network_power(&opt, &inst)?;
        (Some(p), Some(chain_power <= p + 1e-9 * p.max(1.0)))
    } else {
        (None, None)
    };

    let scheme = CostScheme::marginal_contribution();
    let (is_ne, witness) = game::is_nash_equilibrium(&bcast, &scheme, &inst)?;
    Ok(LineReport {
        n,
        alpha,
        p_c,
        chain_power,
        bcast_power,
        poa_formula: line_poa_formula(n, alpha, p_c),
        opt_power,
        chain_is_optimal,
        bcast_is_ne: is_ne,
        bcast_improving: witness
            .map(|(i, j)| (inst.node(i).id, inst.node(j).id)),
    })
}

/// Budget-balance misalignment certificate: for a strictly improving
/// deviation `i: j -> k` under a budget-balanced scheme, returns true iff
/// the other affected children's summed cost increase exceeds `i`'s saving,
/// which is exactly the condition under which the deviation raised the
/// network power. Non-improving deviations are vacuously false.
pub fn bb_misalignment_check(
    tree: &BroadcastTree,
    i: NodeId,
    k: NodeId,
    scheme: &CostScheme,
    inst: &NetworkInstance,
) -> Result<bool, AnalysisError> {
    if scheme.kind == SchemeKind::MarginalContribution {
        return Err(AnalysisError::SchemeNotBudgetBalanced(scheme.kind));
    }
    let j = tree
        .parent(i)
        .ok_or_else(|| AnalysisError::PreconditionViolated(format!("node {i} is unconnected")))?;
    if !game::action_set(i, tree, inst).contains(&k) || k == j {
        return Ok(false);
    }
    let affected: Vec<NodeId> = tree
        .children(j)
        .iter()
        .chain(tree.children(k))
        .copied()
        .filter(|&m| m != i)
        .collect();

    let cost_of = |members_j: &[NodeId], members_k: &[NodeId], m: NodeId| {
        if members_j.contains(&m) {
            game::cost(scheme, m, j, members_j, inst)
        } else {
            game::cost(scheme, m, k, members_k, inst)
        }
    };

    let before_j: Vec<NodeId> = tree.children(j).to_vec();
    let before_k: Vec<NodeId> = tree.children(k).to_vec();
    let mut after_j = before_j.clone();
    after_j.retain(|&m| m != i);
    let mut after_k = before_k.clone();
    after_k.push(i);

    let cost_i_before = game::cost(scheme, i, j, &before_j, inst)?;
    let cost_i_after = game::cost(scheme, i, k, &after_k, inst)?;
    let delta_i = cost_i_after - cost_i_before;
    if delta_i >= 0.0 {
        return Ok(false);
    }
    let mut delta_others = 0.0;
    for &m in &affected {
        let before = cost_of(&before_j, &before_k, m)?;
        let after = cost_of(&after_j, &after_k, m)?;
        delta_others += after - before;
    }
    Ok(delta_others > -delta_i)
}
