//! Ground truth: the mixed-integer model of the broadcast problem,
//! reachability machinery, tree reconstruction from a solved assignment,
//! LP-file export/ingestion and two internal optimum solvers.

pub mod lp;

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use thiserror::Error;

use crate::baselines;
use crate::netmodel::{self, NetworkInstance, NodeId};
use crate::tree::BroadcastTree;

pub use lp::{LpConstraint, LpFile, LpOp};

/// Binary variables ingested from external solvers tolerate this much
/// rounding noise; constraint checks use the same slack.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Default receiver-count cap for the branch-and-bound solver.
pub const DEFAULT_EXACT_LIMIT: usize = 10;

/// Receiver-count cap for the pruning-free enumeration oracle.
pub const BRUTE_FORCE_LIMIT: usize = 7;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("instance has {actual} receivers, above the solver limit {limit}")]
    LimitExceeded { limit: usize, actual: usize },
    #[error("receiver {0} cannot be reached from the source")]
    Disconnected(NodeId),
    #[error("solution does not describe a complete tree: {0}")]
    InfeasibleSolution(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Reachability matrix of transmitter `j` over the receiver set: entry
/// `(i, l)` is 1 when serving `i` (feasibly) also covers `l`, i.e.
/// `p_uni(l,j) <= p_uni(i,j) <= p_max(j)`. Rows of out-of-coverage receivers
/// are zero, as are the row and column of `j` itself.
pub fn reachability_matrix(inst: &NetworkInstance, j: NodeId) -> Vec<Vec<u8>> {
    let receivers: Vec<NodeId> = inst.receivers().collect();
    let n = receivers.len();
    let mut matrix = vec![vec![0u8; n]; n];
    for (row, &i) in receivers.iter().enumerate() {
        if i == j || !inst.link_feasible(i, j) {
            continue;
        }
        let p_i = inst.unicast_power(i, j);
        for (col, &l) in receivers.iter().enumerate() {
            if l == j {
                continue;
            }
            if inst.unicast_power(l, j) <= p_i {
                matrix[row][col] = 1;
            }
        }
    }
    matrix
}

/// The integer model: binary transmission choices `t[i][j]` (receiver `i` is
/// the farthest child of transmitter `j`), continuous downstream values
/// `d[i][j]`, per-transmitter reachability matrices and the objective
/// coefficients `p_c(j) + p_uni(i,j)` over feasible pairs.
#[derive(Debug, Clone)]
pub struct MilpModel {
    source: NodeId,
    receivers: Vec<NodeId>,
    /// node -> slot in `receivers`, None for the source.
    slot: Vec<Option<usize>>,
    /// `reach[j.0][row][col]`, rows/cols in receiver-slot space.
    reach: Vec<Vec<Vec<u8>>>,
    /// `objective[slot][j.0]`: coefficient of `t[i][j]`, None when the pair
    /// is infeasible (the variable is constrained to zero).
    objective: Vec<Vec<Option<f64>>>,
    labels: Vec<u64>,
}

impl MilpModel {
    pub fn receiver_count(&self) -> usize {
        self.receivers.len()
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn receivers(&self) -> &[NodeId] {
        &self.receivers
    }

    pub fn reach(&self, j: NodeId) -> &Vec<Vec<u8>> {
        &self.reach[j.0]
    }

    pub fn objective_coefficient(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.slot[i.0].and_then(|s| self.objective[s][j.0])
    }

    /// All binary transmission variables, i.e. every ordered (receiver,
    /// transmitter) pair without self pairs: exactly `N^2` of them.
    pub fn t_variable_count(&self) -> usize {
        let n = self.receivers.len();
        let nodes = n + 1;
        n * nodes - n
    }

    fn node_count(&self) -> usize {
        self.receivers.len() + 1
    }

    fn var_t(&self, i: NodeId, j: NodeId) -> String {
        format!("t_{}_{}", self.labels[i.0], self.labels[j.0])
    }

    fn var_d(&self, i: NodeId, j: NodeId) -> String {
        format!("d_{}_{}", self.labels[i.0], self.labels[j.0])
    }

    fn var_y(&self, i: NodeId, j: NodeId) -> String {
        format!("y_{}_{}", self.labels[i.0], self.labels[j.0])
    }

    /// Coverage indicator implied by a transmission assignment: `y(i,j)` is 1
    /// when `j` transmits to some farthest child whose emission also covers
    /// `i`.
    pub fn coverage(&self, t: &BTreeMap<(NodeId, NodeId), f64>, i: NodeId, j: NodeId) -> f64 {
        let Some(col) = self.slot[i.0] else {
            return 0.0;
        };
        let mut y = 0.0;
        for (row, &l) in self.receivers.iter().enumerate() {
            if self.reach[j.0][row][col] == 1 {
                y += t.get(&(l, j)).copied().unwrap_or(0.0);
            }
        }
        y
    }
}

/// Solved (or externally provided) assignment of the model variables.
#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub t: BTreeMap<(NodeId, NodeId), f64>,
    pub d: BTreeMap<(NodeId, NodeId), f64>,
    pub objective_value: f64,
}

/// Assemble the model for a connected instance.
pub fn build_milp(inst: &NetworkInstance) -> Result<MilpModel, ExactError> {
    if !inst.is_connected() {
        let victim = inst
            .node_ids()
            .find(|&i| i != inst.source() && inst.neighbors(i).is_empty())
            .unwrap_or(inst.source());
        return Err(ExactError::Disconnected(victim));
    }
    let receivers: Vec<NodeId> = inst.receivers().collect();
    let mut slot = vec![None; inst.len()];
    for (s, &i) in receivers.iter().enumerate() {
        slot[i.0] = Some(s);
    }
    let reach: Vec<Vec<Vec<u8>>> = inst
        .node_ids()
        .map(|j| reachability_matrix(inst, j))
        .collect();
    let mut objective = vec![vec![None; inst.len()]; receivers.len()];
    for (s, &i) in receivers.iter().enumerate() {
        for j in inst.node_ids() {
            if inst.link_feasible(i, j) {
                objective[s][j.0] = Some(inst.node(j).p_c + inst.unicast_power(i, j));
            }
        }
    }
    Ok(MilpModel {
        source: inst.source(),
        receivers,
        slot,
        reach,
        objective,
        labels: inst.node_ids().map(|i| inst.node(i).id).collect(),
    })
}

/// Lower the model to the LP text structure: objective over feasible pairs,
/// transmitter-count block, downstream flow balance, coverage definitions,
/// downstream/coverage coupling and the zero-fixings of infeasible pairs.
pub fn to_lp(model: &MilpModel) -> LpFile {
    let n = model.receiver_count();
    let nodes: Vec<NodeId> = (0..model.node_count()).map(NodeId).collect();
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    let mut binaries = Vec::new();

    for &j in &nodes {
        for &i in model.receivers() {
            if i == j {
                continue;
            }
            binaries.push(model.var_t(i, j));
            if let Some(c) = model.objective_coefficient(i, j) {
                objective.push((c, model.var_t(i, j)));
            } else {
                constraints.push(LpConstraint {
                    name: format!("tzero_{}_{}", model.labels[i.0], model.labels[j.0]),
                    terms: vec![(1.0, model.var_t(i, j))],
                    op: LpOp::Eq,
                    rhs: 0.0,
                });
            }
        }
    }

    // One transmission choice at the source, at most one elsewhere.
    for &j in &nodes {
        let terms: Vec<(f64, String)> = model
            .receivers()
            .iter()
            .filter(|&&i| i != j)
            .map(|&i| (1.0, model.var_t(i, j)))
            .collect();
        let is_source = j == model.source;
        constraints.push(LpConstraint {
            name: format!("tx_{}", model.labels[j.0]),
            terms,
            op: if is_source { LpOp::Eq } else { LpOp::Le },
            rhs: 1.0,
        });
    }

    // Downstream balance: outgoing minus incoming is N at the source and -1
    // at every receiver.
    for &j in &nodes {
        let mut terms = Vec::new();
        for &i in model.receivers() {
            if i != j {
                terms.push((1.0, model.var_d(i, j)));
            }
        }
        if model.slot[j.0].is_some() {
            for &k in &nodes {
                if k != j {
                    terms.push((-1.0, model.var_d(j, k)));
                }
            }
        }
        let is_source = j == model.source;
        constraints.push(LpConstraint {
            name: format!("flow_{}", model.labels[j.0]),
            terms,
            op: LpOp::Eq,
            rhs: if is_source { n as f64 } else { -1.0 },
        });
    }

    // Coverage definition y(i,j) = sum_l reach[l][i] * t(l,j), and the
    // downstream coupling d(i,j) <= N * y(i,j).
    for &j in &nodes {
        for &i in model.receivers() {
            if i == j {
                continue;
            }
            let col = model.slot[i.0].expect("receivers have slots");
            let mut terms = vec![(1.0, model.var_y(i, j))];
            for (row, &l) in model.receivers().iter().enumerate() {
                if model.reach[j.0][row][col] == 1 {
                    terms.push((-1.0, model.var_t(l, j)));
                }
            }
            constraints.push(LpConstraint {
                name: format!("ydef_{}_{}", model.labels[i.0], model.labels[j.0]),
                terms,
                op: LpOp::Eq,
                rhs: 0.0,
            });
            constraints.push(LpConstraint {
                name: format!("dy_{}_{}", model.labels[i.0], model.labels[j.0]),
                terms: vec![(1.0, model.var_d(i, j)), (-(n as f64), model.var_y(i, j))],
                op: LpOp::Le,
                rhs: 0.0,
            });
        }
    }

    LpFile {
        name: format!("broadcast tree model, {} nodes", model.node_count()),
        objective,
        constraints,
        binaries,
    }
}

/// Write the model in LP text format. Variable naming is stable:
/// `t_<i>_<j>`, `d_<i>_<j>`, `y_<i>_<j>` with the external node labels.
pub fn export_lp(model: &MilpModel, path: &Path) -> Result<(), ExactError> {
    if path.as_os_str().is_empty() {
        return Err(ExactError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty output path",
        )));
    }
    std::fs::write(path, lp::render(&to_lp(model)))?;
    Ok(())
}

/// Parse a solver solution given as `name = value` lines (`#` comments and
/// unknown variables are ignored; binaries must be integral within the
/// feasibility tolerance).
pub fn solution_from_text(model: &MilpModel, text: &str) -> Result<MilpSolution, ExactError> {
    let mut by_label: BTreeMap<(u64, u64), (NodeId, NodeId)> = BTreeMap::new();
    for j in (0..model.node_count()).map(NodeId) {
        for &i in model.receivers() {
            if i != j {
                by_label.insert((model.labels[i.0], model.labels[j.0]), (i, j));
            }
        }
    }
    let mut t = BTreeMap::new();
    let mut d = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once('=').ok_or_else(|| {
            ExactError::Parse(format!("line {}: expected name=value", lineno + 1))
        })?;
        let name = name.trim();
        let value: f64 = value.trim().parse().map_err(|_| {
            ExactError::Parse(format!("line {}: bad numeric value", lineno + 1))
        })?;
        let mut parts = name.split('_');
        let kind = parts.next().unwrap_or("");
        if !matches!(kind, "t" | "d") {
            continue;
        }
        let (Some(i), Some(j), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(ExactError::Parse(format!("line {}: bad variable {name}", lineno + 1)));
        };
        let key = (
            i.parse::<u64>()
                .map_err(|_| ExactError::Parse(format!("bad node label in {name}")))?,
            j.parse::<u64>()
                .map_err(|_| ExactError::Parse(format!("bad node label in {name}")))?,
        );
        let &(i, j) = by_label
            .get(&key)
            .ok_or_else(|| ExactError::Parse(format!("unknown variable {name}")))?;
        if kind == "t" {
            if (value - value.round()).abs() > FEASIBILITY_TOL {
                return Err(ExactError::Parse(format!(
                    "binary variable {name} has fractional value {value}"
                )));
            }
            t.insert((i, j), value.round());
        } else {
            d.insert((i, j), value);
        }
    }
    let objective_value = objective_of(model, &t)?;
    Ok(MilpSolution {
        t,
        d,
        objective_value,
    })
}

fn objective_of(
    model: &MilpModel,
    t: &BTreeMap<(NodeId, NodeId), f64>,
) -> Result<f64, ExactError> {
    let mut total = 0.0;
    for (&(i, j), &v) in t {
        if v > 0.5 {
            let c = model.objective_coefficient(i, j).ok_or_else(|| {
                ExactError::InfeasibleSolution(format!(
                    "transmission {} -> {} is outside the power budget",
                    model.labels[j.0], model.labels[i.0]
                ))
            })?;
            total += c;
        }
    }
    Ok(total)
}

/// Check a solution against every constraint block; returns the list of
/// violated constraints (empty means feasible within the tolerance).
pub fn check_feasibility(model: &MilpModel, sol: &MilpSolution) -> Vec<String> {
    let mut violations = Vec::new();
    let n = model.receiver_count() as f64;
    let nodes: Vec<NodeId> = (0..model.node_count()).map(NodeId).collect();

    for (&(i, j), &v) in &sol.t {
        if (v - v.round()).abs() > FEASIBILITY_TOL {
            violations.push(format!("t({i},{j}) = {v} is not binary"));
        }
        if v > 0.5 && model.objective_coefficient(i, j).is_none() {
            violations.push(format!("t({i},{j}) selects an infeasible link"));
        }
    }
    for (&(i, j), &v) in &sol.d {
        if v < -FEASIBILITY_TOL {
            violations.push(format!("d({i},{j}) = {v} is negative"));
        }
    }
    for &j in &nodes {
        let t_sum: f64 = model
            .receivers()
            .iter()
            .filter(|&&i| i != j)
            .map(|&i| sol.t.get(&(i, j)).copied().unwrap_or(0.0))
            .sum();
        if j == model.source {
            if (t_sum - 1.0).abs() > FEASIBILITY_TOL {
                violations.push(format!("source transmission count is {t_sum}, not 1"));
            }
        } else if t_sum > 1.0 + FEASIBILITY_TOL {
            violations.push(format!("node {j} has {t_sum} transmission choices"));
        }
    }
    for &j in &nodes {
        let outgoing: f64 = model
            .receivers()
            .iter()
            .filter(|&&i| i != j)
            .map(|&i| sol.d.get(&(i, j)).copied().unwrap_or(0.0))
            .sum();
        let incoming: f64 = if model.slot[j.0].is_some() {
            nodes
                .iter()
                .filter(|&&k| k != j)
                .map(|&k| sol.d.get(&(j, k)).copied().unwrap_or(0.0))
                .sum()
        } else {
            0.0
        };
        let expected = if j == model.source { n } else { -1.0 };
        if (outgoing - incoming - expected).abs() > FEASIBILITY_TOL {
            violations.push(format!(
                "downstream balance at node {j} is {}, expected {expected}",
                outgoing - incoming
            ));
        }
    }
    for &j in &nodes {
        for &i in model.receivers() {
            if i == j {
                continue;
            }
            let y = model.coverage(&sol.t, i, j);
            let d = sol.d.get(&(i, j)).copied().unwrap_or(0.0);
            if d > n * y + FEASIBILITY_TOL {
                violations.push(format!(
                    "d({i},{j}) = {d} exceeds coverage bound {}",
                    n * y
                ));
            }
        }
    }
    violations
}

/// Translate a broadcast tree into model variables: each transmitter's `t`
/// picks its farthest child (lowest id on ties) and each tree edge carries
/// `1 + |descendants|` downstream.
pub fn solution_from_tree(
    model: &MilpModel,
    tree: &BroadcastTree,
    inst: &NetworkInstance,
) -> MilpSolution {
    let mut t = BTreeMap::new();
    let mut d = BTreeMap::new();
    for j in inst.node_ids() {
        let members = tree.children(j);
        if members.is_empty() {
            continue;
        }
        let farthest = members
            .iter()
            .copied()
            .max_by(|&a, &b| {
                inst.unicast_power(a, j)
                    .total_cmp(&inst.unicast_power(b, j))
                    .then(b.cmp(&a))
            })
            .expect("nonempty child set");
        t.insert((farthest, j), 1.0);
        for &i in members {
            d.insert((i, j), 1.0 + tree.descendants(i).len() as f64);
        }
    }
    let objective_value = objective_of(model, &t).expect("tree edges are feasible");
    MilpSolution {
        t,
        d,
        objective_value,
    }
}

/// Reconstruct the broadcast tree a solved assignment describes: breadth
/// first from the source, every visited transmitter adopts the still
/// uncovered receivers inside its coverage.
pub fn tree_from_milp_solution(
    inst: &NetworkInstance,
    sol: &MilpSolution,
) -> Result<BroadcastTree, ExactError> {
    let model = build_milp(inst)?;
    let mut tree = BroadcastTree::empty(inst);
    let mut covered = vec![false; inst.len()];
    covered[inst.source().0] = true;
    let mut queue = VecDeque::from([inst.source()]);
    let mut remaining = inst.receiver_count();

    while let Some(j) = queue.pop_front() {
        for &i in model.receivers() {
            if i == j || covered[i.0] {
                continue;
            }
            if model.coverage(&sol.t, i, j) > 0.5 {
                tree.apply_action(i, j, inst).map_err(|e| {
                    ExactError::InfeasibleSolution(format!("cannot attach {i} under {j}: {e}"))
                })?;
                covered[i.0] = true;
                remaining -= 1;
                queue.push_back(i);
            }
        }
    }
    if remaining > 0 {
        let victim = inst
            .node_ids()
            .find(|i| !covered[i.0])
            .expect("some node is uncovered");
        return Err(ExactError::InfeasibleSolution(format!(
            "node {victim} is never covered by a transmission"
        )));
    }
    Ok(tree)
}

/// Provably optimal tree by depth-first branch and bound over parent
/// assignments: receivers choose parents in node order, partial assignments
/// are pruned when their accumulated power (which only grows as children are
/// added) reaches the incumbent, and parent cycles are cut as soon as they
/// close.
pub fn solve_exact(inst: &NetworkInstance, node_limit: usize) -> Result<BroadcastTree, ExactError> {
    let n_recv = inst.receiver_count();
    if n_recv > node_limit {
        return Err(ExactError::LimitExceeded {
            limit: node_limit,
            actual: n_recv,
        });
    }
    let incumbent_tree = baselines::bip(inst).map_err(|e| match e {
        baselines::BaselineError::Disconnected(i) => ExactError::Disconnected(i),
        other => ExactError::InfeasibleSolution(other.to_string()),
    })?;
    let mut incumbent =
        netmodel::network_power(&incumbent_tree, inst).expect("BIP trees are feasible");
    let receivers: Vec<NodeId> = inst.receivers().collect();
    // Candidate parents sorted cheapest-first for better early incumbents.
    let candidates: Vec<Vec<NodeId>> = receivers
        .iter()
        .map(|&i| {
            let mut c = inst.neighbors(i).to_vec();
            c.sort_by(|&a, &b| {
                inst.unicast_power(i, a)
                    .total_cmp(&inst.unicast_power(i, b))
                    .then(a.cmp(&b))
            });
            c
        })
        .collect();

    struct Search<'a> {
        inst: &'a NetworkInstance,
        receivers: &'a [NodeId],
        candidates: &'a [Vec<NodeId>],
        parent: Vec<Option<NodeId>>,
        // Current max child power and child count per transmitter.
        max_uni: Vec<f64>,
        n_children: Vec<usize>,
        total: f64,
        best_power: f64,
        best_parent: Vec<Option<NodeId>>,
    }

    impl Search<'_> {
        fn closes_cycle(&self, i: NodeId, p: NodeId) -> bool {
            let mut cur = p;
            loop {
                if cur == i {
                    return true;
                }
                match self.parent[cur.0] {
                    Some(next) => cur = next,
                    None => return false,
                }
            }
        }

        fn group_power(&self, j: NodeId) -> f64 {
            if self.n_children[j.0] == 0 {
                0.0
            } else {
                self.inst.node(j).p_c + self.max_uni[j.0]
            }
        }

        fn dfs(&mut self, depth: usize) {
            if depth == self.receivers.len() {
                if self.total < self.best_power {
                    self.best_power = self.total;
                    self.best_parent = self.parent.clone();
                }
                return;
            }
            let i = self.receivers[depth];
            for idx in 0..self.candidates[depth].len() {
                let p = self.candidates[depth][idx];
                if self.closes_cycle(i, p) {
                    continue;
                }
                let before_group = self.group_power(p);
                let saved_max = self.max_uni[p.0];
                self.parent[i.0] = Some(p);
                self.n_children[p.0] += 1;
                self.max_uni[p.0] = saved_max.max(self.inst.unicast_power(i, p));
                let delta = self.group_power(p) - before_group;
                self.total += delta;
                // Admissible bound: powers only grow as children are added.
                if self.total < self.best_power {
                    self.dfs(depth + 1);
                }
                self.total -= delta;
                self.max_uni[p.0] = saved_max;
                self.n_children[p.0] -= 1;
                self.parent[i.0] = None;
            }
        }
    }

    let mut search = Search {
        inst,
        receivers: &receivers,
        candidates: &candidates,
        parent: vec![None; inst.len()],
        max_uni: vec![0.0; inst.len()],
        n_children: vec![0; inst.len()],
        total: 0.0,
        best_power: f64::INFINITY,
        best_parent: Vec::new(),
    };
    search.best_power = incumbent + 1e-12;
    search.dfs(0);
    if search.best_parent.is_empty() {
        // Nothing beat the heuristic incumbent.
        return Ok(incumbent_tree);
    }
    incumbent = search.best_power;
    let tree = BroadcastTree::from_parents(inst, &search.best_parent);
    debug_assert!(
        (netmodel::network_power(&tree, inst).unwrap() - incumbent).abs()
            <= 1e-9 * incumbent.max(1.0)
    );
    Ok(tree)
}

/// Deliberately simple optimum oracle: enumerate every parent vector, keep
/// the valid trees, return the cheapest. No pruning.
pub fn brute_force_optimum(inst: &NetworkInstance) -> Result<BroadcastTree, ExactError> {
    let n_recv = inst.receiver_count();
    if n_recv > BRUTE_FORCE_LIMIT {
        return Err(ExactError::LimitExceeded {
            limit: BRUTE_FORCE_LIMIT,
            actual: n_recv,
        });
    }
    let receivers: Vec<NodeId> = inst.receivers().collect();
    for &i in &receivers {
        if inst.neighbors(i).is_empty() {
            return Err(ExactError::Disconnected(i));
        }
    }
    let candidates: Vec<&[NodeId]> = receivers.iter().map(|&i| inst.neighbors(i)).collect();
    let n = inst.len();
    let source = inst.source();

    let mut choice = vec![0usize; receivers.len()];
    let mut best: Option<(f64, Vec<Option<NodeId>>)> = None;
    loop {
        // Assemble the parent vector for the current odometer state.
        let mut parent: Vec<Option<NodeId>> = vec![None; n];
        for (k, &i) in receivers.iter().enumerate() {
            parent[i.0] = Some(candidates[k][choice[k]]);
        }
        // Valid iff every chain terminates at the source without repeats.
        let mut valid = true;
        'outer: for &i in &receivers {
            let mut cur = i;
            let mut steps = 0;
            loop {
                match parent[cur.0] {
                    None => {
                        if cur != source {
                            valid = false;
                            break 'outer;
                        }
                        break;
                    }
                    Some(p) => {
                        cur = p;
                        steps += 1;
                        if steps > n {
                            valid = false;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if valid {
            let mut max_uni = vec![0.0f64; n];
            let mut has_children = vec![false; n];
            for &i in &receivers {
                let p = parent[i.0].expect("receiver has a parent");
                has_children[p.0] = true;
                max_uni[p.0] = max_uni[p.0].max(inst.unicast_power(i, p));
            }
            let power: f64 = (0..n)
                .filter(|&j| has_children[j])
                .map(|j| inst.node(NodeId(j)).p_c + max_uni[j])
                .sum();
            if best.as_ref().map_or(true, |(b, _)| power < *b) {
                best = Some((power, parent));
            }
        }
        // Advance the odometer.
        let mut k = 0;
        loop {
            if k == receivers.len() {
                let (_, parent) = best.ok_or_else(|| {
                    ExactError::Disconnected(receivers.first().copied().unwrap_or(source))
                })?;
                return Ok(BroadcastTree::from_parents(inst, &parent));
            }
            choice[k] += 1;
            if choice[k] < candidates[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}
