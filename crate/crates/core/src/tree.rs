//! Broadcast-tree state machine: parent assignments, routes, cycle
//! prevention and validation.
//!
//! A [`BroadcastTree`] is the mutable action-profile state one game run owns.
//! Every mutation goes through [`BroadcastTree::apply_action`], which keeps
//! parent/children/route views consistent and refuses moves that would break
//! the rooted-tree structure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{self, CostScheme};
use crate::netmodel::{self, NetworkInstance, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("node {child} cannot reach proposed parent {parent} (not a neighbor)")]
    NotNeighbor { child: NodeId, parent: NodeId },
    #[error("proposed parent {parent} is not connected to the source")]
    ParentDisconnected { parent: NodeId },
    #[error("attaching {child} under {parent} would close a cycle")]
    CycleWouldForm { child: NodeId, parent: NodeId },
    #[error("the source has no parent action")]
    SourceImmovable,
    #[error("receiver {0} cannot be reached from the source over feasible links")]
    Disconnected(NodeId),
}

/// Parent-assignment state of a broadcast tree rooted at the instance source.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastTree {
    source: NodeId,
    parent: Vec<Option<NodeId>>,
    /// Sorted child sets, kept consistent with `parent`.
    children: Vec<Vec<NodeId>>,
    /// Source-first route per node, self included; empty while disconnected.
    route: Vec<Vec<NodeId>>,
}

/// Complete parent vector of all receivers, in ascending node order. Used as
/// the hashable state for cycle detection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionProfile(pub Vec<NodeId>);

impl BroadcastTree {
    /// Tree with every receiver still unconnected.
    pub fn empty(inst: &NetworkInstance) -> BroadcastTree {
        let n = inst.len();
        let source = inst.source();
        let mut route = vec![Vec::new(); n];
        route[source.0] = vec![source];
        BroadcastTree {
            source,
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            route,
        }
    }

    /// Single-hop tree: every receiver attached directly to the source.
    pub fn star(inst: &NetworkInstance) -> Result<BroadcastTree, TreeError> {
        let mut tree = BroadcastTree::empty(inst);
        for i in inst.receivers() {
            tree.apply_action(i, inst.source(), inst)?;
        }
        Ok(tree)
    }

    /// Build from a raw parent vector without feasibility checks. Routes are
    /// computed where well defined; nodes on broken or cyclic chains stay
    /// disconnected so [`validate`] can report them.
    pub fn from_parents(inst: &NetworkInstance, parents: &[Option<NodeId>]) -> BroadcastTree {
        let n = inst.len();
        assert_eq!(parents.len(), n, "parent vector length mismatch");
        let source = inst.source();
        let mut tree = BroadcastTree {
            source,
            parent: parents.to_vec(),
            children: vec![Vec::new(); n],
            route: vec![Vec::new(); n],
        };
        tree.parent[source.0] = None;
        for i in 0..n {
            if let Some(p) = tree.parent[i] {
                tree.children[p.0].push(NodeId(i));
            }
        }
        for c in &mut tree.children {
            c.sort_unstable();
        }
        tree.route[source.0] = vec![source];
        // Walk every parent chain; only chains that reach the source without
        // repeating a node produce a route.
        for i in 0..n {
            let start = NodeId(i);
            if !tree.route[i].is_empty() || start == source {
                continue;
            }
            let mut chain = vec![start];
            let mut cur = start;
            let route = loop {
                match tree.parent[cur.0] {
                    None if cur == source => break Some(Vec::new()),
                    None => break None,
                    Some(p) => {
                        if !tree.route[p.0].is_empty() {
                            break Some(tree.route[p.0].clone());
                        }
                        if chain.contains(&p) {
                            break None;
                        }
                        chain.push(p);
                        cur = p;
                    }
                }
            };
            if let Some(mut prefix) = route {
                if prefix.is_empty() {
                    prefix = vec![source];
                }
                while let Some(node) = chain.pop() {
                    let mut r = prefix.clone();
                    r.push(node);
                    tree.route[node.0] = r.clone();
                    prefix = r;
                }
            }
        }
        tree
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, i: NodeId) -> Option<NodeId> {
        self.parent[i.0]
    }

    pub fn children(&self, j: NodeId) -> &[NodeId] {
        &self.children[j.0]
    }

    /// Source-first route of `i`, itself included; empty while disconnected.
    pub fn route(&self, i: NodeId) -> &[NodeId] {
        &self.route[i.0]
    }

    pub fn is_connected(&self, i: NodeId) -> bool {
        !self.route[i.0].is_empty()
    }

    /// All receivers connected to the source.
    pub fn is_complete(&self) -> bool {
        self.route.iter().all(|r| !r.is_empty())
    }

    pub fn transmitters(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(j, _)| NodeId(j))
    }

    pub fn transmitter_count(&self) -> usize {
        self.children.iter().filter(|c| !c.is_empty()).count()
    }

    /// Nodes whose route passes through `i`, excluding `i` itself.
    pub fn descendants(&self, i: NodeId) -> Vec<NodeId> {
        (0..self.parent.len())
            .map(NodeId)
            .filter(|&k| k != i && self.route[k.0].contains(&i))
            .collect()
    }

    /// The complete parent vector, or `None` while some receiver is
    /// unconnected.
    pub fn profile(&self) -> Option<ActionProfile> {
        let mut out = Vec::with_capacity(self.parent.len().saturating_sub(1));
        for (i, p) in self.parent.iter().enumerate() {
            if NodeId(i) == self.source {
                continue;
            }
            out.push((*p)?);
        }
        Some(ActionProfile(out))
    }

    /// Reassign `i`'s parent to `j`, recomputing the routes of `i` and its
    /// whole subtree. Only `i`'s subtree plus the child sets of the old and
    /// new parents are touched.
    pub fn apply_action(
        &mut self,
        i: NodeId,
        j: NodeId,
        inst: &NetworkInstance,
    ) -> Result<(), TreeError> {
        if i == self.source {
            return Err(TreeError::SourceImmovable);
        }
        if !inst.neighbors(i).contains(&j) {
            return Err(TreeError::NotNeighbor { child: i, parent: j });
        }
        if self.route[j.0].is_empty() {
            return Err(TreeError::ParentDisconnected { parent: j });
        }
        if self.route[j.0].contains(&i) {
            return Err(TreeError::CycleWouldForm { child: i, parent: j });
        }
        if self.parent[i.0] == Some(j) {
            return Ok(());
        }
        if let Some(old) = self.parent[i.0] {
            self.children[old.0].retain(|&c| c != i);
        }
        self.parent[i.0] = Some(j);
        match self.children[j.0].binary_search(&i) {
            Ok(_) => {}
            Err(pos) => self.children[j.0].insert(pos, i),
        }
        // Route of i and of every node below it.
        let mut stack = vec![i];
        while let Some(node) = stack.pop() {
            let p = self.parent[node.0].expect("connected non-source node has a parent");
            let mut r = self.route[p.0].clone();
            r.push(node);
            self.route[node.0] = r;
            stack.extend_from_slice(&self.children[node.0]);
        }
        Ok(())
    }
}

/// Validation verdict; `violations` lists everything wrong with the tree.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub complete: bool,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.complete && self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Unconnected(NodeId),
    CycleAt(NodeId),
    InfeasibleEdge { child: NodeId, parent: NodeId },
    RouteMismatch(NodeId),
    ChildSetMismatch(NodeId),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Unconnected(i) => write!(f, "node {i} is not connected to the source"),
            Violation::CycleAt(i) => write!(f, "node {i} sits on a parent cycle"),
            Violation::InfeasibleEdge { child, parent } => {
                write!(f, "edge {parent} -> {child} exceeds the transmit power budget")
            }
            Violation::RouteMismatch(i) => write!(f, "stored route of node {i} is inconsistent"),
            Violation::ChildSetMismatch(j) => {
                write!(f, "child set of node {j} disagrees with the parent map")
            }
        }
    }
}

/// Check completeness, acyclicity, per-edge feasibility and the consistency
/// of the parent/children/route views.
pub fn validate(tree: &BroadcastTree, inst: &NetworkInstance) -> Verdict {
    let n = tree.len();
    let source = tree.source();
    let mut violations = Vec::new();
    let mut complete = true;

    for i in (0..n).map(NodeId) {
        if i == source {
            if tree.parent(i).is_some() {
                violations.push(Violation::RouteMismatch(i));
            }
            continue;
        }
        // Walk the parent chain independently of the stored routes.
        let mut seen = vec![i];
        let mut cur = i;
        let reached_source = loop {
            match tree.parent(cur) {
                None => break cur == source,
                Some(p) => {
                    if seen.contains(&p) {
                        violations.push(Violation::CycleAt(i));
                        break false;
                    }
                    if p == source {
                        break true;
                    }
                    seen.push(p);
                    cur = p;
                }
            }
        };
        if !reached_source {
            complete = false;
            if !tree.is_connected(i) {
                violations.push(Violation::Unconnected(i));
            }
            continue;
        }
        if let Some(p) = tree.parent(i) {
            if !inst.link_feasible(i, p) {
                violations.push(Violation::InfeasibleEdge { child: i, parent: p });
            }
            if !tree.children(p).contains(&i) {
                violations.push(Violation::ChildSetMismatch(p));
            }
            // Route must equal the reversed parent-chain walk.
            let mut expected = vec![i];
            let mut cur = i;
            while let Some(q) = tree.parent(cur) {
                expected.push(q);
                cur = q;
            }
            expected.reverse();
            if tree.route(i) != expected.as_slice() {
                violations.push(Violation::RouteMismatch(i));
            }
        }
    }
    for j in (0..n).map(NodeId) {
        for &c in tree.children(j) {
            if tree.parent(c) != Some(j) {
                violations.push(Violation::ChildSetMismatch(j));
            }
        }
    }
    Verdict { complete, violations }
}

/// Starting-tree construction policy for the game and the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// Repeatedly connect the globally cheapest (cost, node, parent) pair
    /// under the active cost scheme.
    GreedyJoin,
    /// Start from the broadcast-incremental-power heuristic's output.
    BipInit,
    /// Bellman-Ford shortest-path tree under summed unicast link powers.
    MinPowerPath,
}

/// Build a complete feasible tree, or report the first unreachable receiver.
pub fn initialize(
    inst: &NetworkInstance,
    policy: InitPolicy,
    scheme: &CostScheme,
) -> Result<BroadcastTree, TreeError> {
    match policy {
        InitPolicy::GreedyJoin => greedy_join(inst, scheme),
        InitPolicy::BipInit => {
            crate::baselines::bip(inst).map_err(|_| first_unreachable(inst))
        }
        InitPolicy::MinPowerPath => min_power_path(inst),
    }
}

fn first_unreachable(inst: &NetworkInstance) -> TreeError {
    let n = inst.len();
    let mut seen = vec![false; n];
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
    let victim = (0..n)
        .map(NodeId)
        .find(|i| !seen[i.0])
        .unwrap_or(inst.source());
    TreeError::Disconnected(victim)
}

fn greedy_join(inst: &NetworkInstance, scheme: &CostScheme) -> Result<BroadcastTree, TreeError> {
    let mut tree = BroadcastTree::empty(inst);
    let mut remaining: Vec<NodeId> = inst.receivers().collect();
    while !remaining.is_empty() {
        let mut best: Option<(f64, NodeId, NodeId)> = None;
        for &i in &remaining {
            for &j in inst.neighbors(i) {
                if !tree.is_connected(j) {
                    continue;
                }
                let mut members: Vec<NodeId> = tree.children(j).to_vec();
                members.push(i);
                let cost = game::cost(scheme, i, j, &members, inst)
                    .expect("candidate member list contains the joining node");
                let better = match best {
                    None => true,
                    Some((c, bi, bj)) => {
                        (cost, i, j) < (c, bi, bj)
                    }
                };
                if better {
                    best = Some((cost, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                tree.apply_action(i, j, inst)
                    .expect("greedy candidate passed the action checks");
                remaining.retain(|&r| r != i);
            }
            None => return Err(first_unreachable(inst)),
        }
    }
    Ok(tree)
}

/// Shortest-path tree from the source under edge weight `p_uni`, path cost
/// the sum of link powers. Deterministic: relaxations scan ordered pairs and
/// only strict improvements update the parent.
fn min_power_path(inst: &NetworkInstance) -> Result<BroadcastTree, TreeError> {
    let n = inst.len();
    let src = inst.source();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    dist[src.0] = 0.0;
    for _ in 0..n.saturating_sub(1) {
        let mut changed = false;
        for j in (0..n).map(NodeId) {
            if !dist[j.0].is_finite() {
                continue;
            }
            for &i in inst.reachable(j) {
                let cand = dist[j.0] + inst.unicast_power(i, j);
                if cand < dist[i.0] {
                    dist[i.0] = cand;
                    parent[i.0] = Some(j);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if let Some(i) = (0..n).map(NodeId).find(|i| !dist[i.0].is_finite()) {
        return Err(TreeError::Disconnected(i));
    }
    // Attach in increasing distance so parents are connected first.
    let mut order: Vec<NodeId> = inst.receivers().collect();
    order.sort_by(|a, b| dist[a.0].total_cmp(&dist[b.0]).then(a.cmp(b)));
    let mut tree = BroadcastTree::empty(inst);
    for i in order {
        let p = parent[i.0].expect("finite distance implies a parent");
        tree.apply_action(i, p, inst)
            .expect("shortest-path edges satisfy the action checks");
    }
    Ok(tree)
}

// --- serialization --------------------------------------------------------

/// Serialized tree document: the parent map in external node labels plus
/// derived metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDocument {
    pub source: u64,
    /// child label -> parent label, every connected receiver present.
    pub parent: BTreeMap<u64, u64>,
    pub network_power_w: f64,
    pub transmitter_count: usize,
    /// node label -> total node power in watts (transmitters only).
    pub node_power_w: BTreeMap<u64, f64>,
}

impl TreeDocument {
    pub fn from_tree(
        tree: &BroadcastTree,
        inst: &NetworkInstance,
        model: netmodel::PowerModel,
    ) -> TreeDocument {
        let mut parent = BTreeMap::new();
        for i in inst.node_ids() {
            if let Some(p) = tree.parent(i) {
                parent.insert(inst.node(i).id, inst.node(p).id);
            }
        }
        let mut node_power_w = BTreeMap::new();
        let mut total = 0.0;
        for j in inst.node_ids() {
            let p = netmodel::node_power_with(j, tree.children(j), inst, model)
                .unwrap_or(f64::NAN);
            if !tree.children(j).is_empty() {
                node_power_w.insert(inst.node(j).id, p);
            }
            total += p;
        }
        TreeDocument {
            source: inst.node(tree.source()).id,
            parent,
            network_power_w: total,
            transmitter_count: tree.transmitter_count(),
            node_power_w,
        }
    }

    /// Rebuild the parent assignment against `inst` (labels resolved back to
    /// dense indices). Metrics in the document are not trusted.
    pub fn into_tree(&self, inst: &NetworkInstance) -> Result<BroadcastTree, TreeError> {
        let by_label: BTreeMap<u64, NodeId> = inst
            .node_ids()
            .map(|i| (inst.node(i).id, i))
            .collect();
        let mut parents: Vec<Option<NodeId>> = vec![None; inst.len()];
        for (child, parent) in &self.parent {
            let (Some(&c), Some(&p)) = (by_label.get(child), by_label.get(parent)) else {
                return Err(TreeError::Disconnected(inst.source()));
            };
            parents[c.0] = Some(p);
        }
        Ok(BroadcastTree::from_parents(inst, &parents))
    }
}

pub fn tree_to_json(tree: &BroadcastTree, inst: &NetworkInstance) -> String {
    serde_json::to_string_pretty(&TreeDocument::from_tree(
        tree,
        inst,
        netmodel::PowerModel::Adaptive,
    ))
    .expect("tree serialization cannot fail")
}

/// DOT digraph for rendering; edges labeled with link powers in milliwatts.
pub fn tree_to_dot(tree: &BroadcastTree, inst: &NetworkInstance) -> String {
    let mut out = String::from("digraph broadcast_tree {\n  rankdir=TB;\n");
    for i in inst.node_ids() {
        let label = inst.node(i).id;
        let shape = if i == tree.source() { "doublecircle" } else { "circle" };
        out.push_str(&format!("  n{label} [shape={shape}, label=\"{label}\"];\n"));
    }
    for i in inst.node_ids() {
        if let Some(p) = tree.parent(i) {
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{:.3} mW\"];\n",
                inst.node(p).id,
                inst.node(i).id,
                inst.unicast_power(i, p) * 1e3,
            ));
        }
    }
    out.push_str("}\n");
    out
}
