//! Geometry, channel and power primitives.
//!
//! Everything from node placement to per-node and network power lives here:
//! the path-loss channel model, unicast power requirements, neighbor sets and
//! the immutable [`NetworkInstance`] every other module operates on. All
//! powers are in watts internally; dB/dBm conversion happens only at the
//! configuration boundary.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::BroadcastTree;

/// Dense node index within one instance. The source and the receivers share
/// the same index space; external labels are kept in [`NodeParams::id`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-node hardware parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    /// External label, unique within an instance. Internal computation uses
    /// dense indices in input order.
    pub id: u64,
    /// Position in meters.
    pub position: (f64, f64),
    /// Maximum transmit power in watts.
    pub p_max: f64,
    /// Circuitry power paid whenever the node transmits, in watts.
    pub p_c: f64,
    /// Power amplifier efficiency, dimensionless in (0, 1).
    pub eta: f64,
}

impl NodeParams {
    fn validate(&self) -> Result<(), NetModelError> {
        if !(self.p_max > 0.0) {
            return Err(NetModelError::InvalidParameter(format!(
                "node {}: p_max must be positive, got {}",
                self.id, self.p_max
            )));
        }
        if !(self.p_c >= 0.0) {
            return Err(NetModelError::InvalidParameter(format!(
                "node {}: p_c must be nonnegative, got {}",
                self.id, self.p_c
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(NetModelError::InvalidParameter(format!(
                "node {}: eta must lie in (0,1), got {}",
                self.id, self.eta
            )));
        }
        Ok(())
    }
}

/// Channel model parameters. `gamma_th` and `sigma2` are stored on linear
/// scale (dimensionless SNR, watts); conversion from dB/dBm happens on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Wavelength in meters.
    pub lambda: f64,
    /// Reference distance in meters.
    pub l0: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Required SNR for successful reception, linear scale.
    pub gamma_th: f64,
    /// Noise-plus-interference power at the receiver, watts.
    pub sigma2: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), NetModelError> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("l0", self.l0),
            ("alpha", self.alpha),
            ("gamma_th", self.gamma_th),
            ("sigma2", self.sigma2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(NetModelError::InvalidParameter(format!(
                    "channel: {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

#[derive(Debug, Error)]
pub enum NetModelError {
    #[error("duplicate node id {0}")]
    DuplicateNodeId(u64),
    #[error("source id {0} not present in the node set")]
    SourceMissing(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("child {child} is not feasibly served by transmitter {parent}")]
    InfeasibleChild { child: NodeId, parent: NodeId },
    #[error("instance needs at least two nodes, got {0}")]
    TooFewNodes(usize),
}

/// How a transmitter's emission power is determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerModel {
    /// Power control: a transmitter emits at the power its farthest child
    /// requires (the max rule).
    Adaptive,
    /// Every transmitter emits at this constant, regardless of child
    /// distances (the fixed-power / equal-transmit-power problem variants).
    Fixed(f64),
}

/// Immutable node set with positions, power budgets, channel gains, derived
/// unicast powers and neighbor sets. Safe to share across parallel workers.
#[derive(Debug, Clone)]
pub struct NetworkInstance {
    nodes: Vec<NodeParams>,
    source: NodeId,
    channel: ChannelParams,
    /// `gain[i*n + j]`: channel power gain between receiver i and transmitter j.
    gain: Vec<f64>,
    /// `p_uni[i*n + j]`: transmit power node j needs to reach node i alone,
    /// `f64::INFINITY` where no link exists (self pairs, prescribed gaps).
    p_uni: Vec<f64>,
    /// `neighbors[i]`: sorted candidate parents of node i (`p_req <= p_max`
    /// of the transmitter).
    neighbors: Vec<Vec<NodeId>>,
    /// `reachable[j]`: sorted receivers transmitter j can feasibly serve.
    reachable: Vec<Vec<NodeId>>,
    /// True when `p_uni` was prescribed directly instead of derived from
    /// positions (toy and normalized-line instances).
    abstract_powers: bool,
}

/// Power gain of the path-loss channel over `dist` meters. Distances below
/// the reference distance are clamped to it so the gain stays finite.
pub fn channel_gain(dist: f64, channel: &ChannelParams) -> f64 {
    let d = dist.max(channel.l0);
    (channel.lambda / (4.0 * std::f64::consts::PI * channel.l0)).powi(2)
        * (channel.l0 / d).powf(channel.alpha)
}

/// Minimum transmit power node `j` needs so that node `i` decodes, i.e.
/// `gamma_th * sigma2 / (eta_j * g_ij)`. Feasibility against `p_max` is the
/// caller's job via the neighbor sets.
pub fn required_unicast_power(i: NodeId, j: NodeId, inst: &NetworkInstance) -> f64 {
    debug_assert_ne!(i, j);
    let g = inst.gain[i.0 * inst.len() + j.0];
    if g <= 0.0 {
        return f64::INFINITY;
    }
    inst.channel.gamma_th * inst.channel.sigma2 / (inst.nodes[j.0].eta * g)
}

/// Total power required at node `j` to serve `children`: zero when idle,
/// otherwise circuitry plus the largest per-child unicast power (one
/// multicast emission covers every nearer child for free).
pub fn node_power(
    j: NodeId,
    children: &[NodeId],
    inst: &NetworkInstance,
) -> Result<f64, NetModelError> {
    node_power_with(j, children, inst, PowerModel::Adaptive)
}

/// [`node_power`] under an explicit power model.
pub fn node_power_with(
    j: NodeId,
    children: &[NodeId],
    inst: &NetworkInstance,
    model: PowerModel,
) -> Result<f64, NetModelError> {
    if children.is_empty() {
        return Ok(0.0);
    }
    let mut max_uni = 0.0f64;
    for &c in children {
        let p = inst.unicast_power(c, j);
        if matches!(model, PowerModel::Adaptive) && !(p <= inst.nodes[j.0].p_max) {
            return Err(NetModelError::InfeasibleChild { child: c, parent: j });
        }
        max_uni = max_uni.max(p);
    }
    let tx = match model {
        PowerModel::Adaptive => max_uni,
        PowerModel::Fixed(p) => p,
    };
    Ok(inst.nodes[j.0].p_c + tx)
}

/// Network power of a tree: the sum of per-node powers over all nodes.
pub fn network_power(tree: &BroadcastTree, inst: &NetworkInstance) -> Result<f64, NetModelError> {
    network_power_with(tree, inst, PowerModel::Adaptive)
}

pub fn network_power_with(
    tree: &BroadcastTree,
    inst: &NetworkInstance,
    model: PowerModel,
) -> Result<f64, NetModelError> {
    let mut total = 0.0;
    for j in inst.node_ids() {
        total += node_power_with(j, tree.children(j), inst, model)?;
    }
    Ok(total)
}

impl NetworkInstance {
    /// Number of nodes including the source.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn node(&self, id: NodeId) -> &NodeParams {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[NodeParams] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Receivers, i.e. every node except the source, ascending.
    pub fn receivers(&self) -> impl Iterator<Item = NodeId> + '_ {
        let src = self.source;
        (0..self.nodes.len()).map(NodeId).filter(move |&i| i != src)
    }

    pub fn receiver_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn gain(&self, i: NodeId, j: NodeId) -> f64 {
        self.gain[i.0 * self.len() + j.0]
    }

    /// Unicast power transmitter `j` needs to reach `i`; infinite when no
    /// link exists.
    pub fn unicast_power(&self, i: NodeId, j: NodeId) -> f64 {
        self.p_uni[i.0 * self.len() + j.0]
    }

    /// Candidate parents of node `i`: all `j` with `p_req(i,j) <= p_max(j)`.
    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.neighbors[i.0]
    }

    /// Receivers transmitter `j` can feasibly serve.
    pub fn reachable(&self, j: NodeId) -> &[NodeId] {
        &self.reachable[j.0]
    }

    /// Whether the link j -> i respects j's transmit power budget.
    pub fn link_feasible(&self, i: NodeId, j: NodeId) -> bool {
        i != j && self.unicast_power(i, j) <= self.nodes[j.0].p_max
    }

    pub fn has_prescribed_powers(&self) -> bool {
        self.abstract_powers
    }

    pub fn distance(&self, i: NodeId, j: NodeId) -> f64 {
        let (xi, yi) = self.nodes[i.0].position;
        let (xj, yj) = self.nodes[j.0].position;
        ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()
    }

    /// Empirical mean of `p_c + p_max` over the instance's nodes; the
    /// normalization constant for reported network powers.
    pub fn mean_power_budget(&self) -> f64 {
        self.nodes.iter().map(|n| n.p_c + n.p_max).sum::<f64>() / self.nodes.len() as f64
    }

    /// True when every receiver can be reached from the source through
    /// feasible links.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![self.source];
        seen[self.source.0] = true;
        let mut count = 1;
        while let Some(j) = stack.pop() {
            for &i in &self.reachable[j.0] {
                if !seen[i.0] {
                    seen[i.0] = true;
                    count += 1;
                    stack.push(i);
                }
            }
        }
        count == n
    }

    /// Derived copy whose per-node `p_max` is replaced by `p_fixed`, which
    /// shrinks (or widens) the neighbor sets to the fixed-radius graph.
    pub fn with_uniform_p_max(&self, p_fixed: f64) -> NetworkInstance {
        let mut nodes = self.nodes.clone();
        for node in &mut nodes {
            node.p_max = p_fixed;
        }
        let mut inst = NetworkInstance {
            nodes,
            source: self.source,
            channel: self.channel,
            gain: self.gain.clone(),
            p_uni: self.p_uni.clone(),
            neighbors: Vec::new(),
            reachable: Vec::new(),
            abstract_powers: self.abstract_powers,
        };
        inst.rebuild_adjacency();
        inst
    }

    fn rebuild_adjacency(&mut self) {
        let n = self.len();
        let mut neighbors = vec![Vec::new(); n];
        let mut reachable = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && self.p_uni[i * n + j] <= self.nodes[j].p_max {
                    neighbors[i].push(NodeId(j));
                    reachable[j].push(NodeId(i));
                }
            }
        }
        self.neighbors = neighbors;
        self.reachable = reachable;
    }
}

/// Materialize gains, unicast powers and neighbor sets from node positions
/// and the channel model.
pub fn build_instance(
    nodes: Vec<NodeParams>,
    source: u64,
    channel: ChannelParams,
) -> Result<NetworkInstance, NetModelError> {
    if nodes.len() < 2 {
        return Err(NetModelError::TooFewNodes(nodes.len()));
    }
    channel.validate()?;
    let mut seen = HashMap::new();
    for (idx, node) in nodes.iter().enumerate() {
        node.validate()?;
        if seen.insert(node.id, idx).is_some() {
            return Err(NetModelError::DuplicateNodeId(node.id));
        }
    }
    let source = NodeId(
        *seen
            .get(&source)
            .ok_or(NetModelError::SourceMissing(source))?,
    );

    let n = nodes.len();
    let mut inst = NetworkInstance {
        nodes,
        source,
        channel,
        gain: vec![0.0; n * n],
        p_uni: vec![f64::INFINITY; n * n],
        neighbors: Vec::new(),
        reachable: Vec::new(),
        abstract_powers: false,
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = inst.distance(NodeId(i), NodeId(j));
            inst.gain[i * n + j] = channel_gain(d, &channel);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                inst.p_uni[i * n + j] = required_unicast_power(NodeId(i), NodeId(j), &inst);
            }
        }
    }
    inst.rebuild_adjacency();
    Ok(inst)
}

/// Build an instance from a prescribed unicast power matrix instead of
/// geometry. `p_uni[i][j]` is the power transmitter `j` needs to serve `i`;
/// `None` marks a missing link. Gains are back-derived so the instance stays
/// consistent with the SNR relation.
pub fn build_instance_from_powers(
    nodes: Vec<NodeParams>,
    source: u64,
    channel: ChannelParams,
    p_uni: &[Vec<Option<f64>>],
) -> Result<NetworkInstance, NetModelError> {
    let mut inst = build_instance(nodes, source, channel)?;
    let n = inst.len();
    if p_uni.len() != n || p_uni.iter().any(|row| row.len() != n) {
        return Err(NetModelError::InvalidParameter(format!(
            "unicast power matrix must be {n}x{n}"
        )));
    }
    for i in 0..n {
        for j in 0..n {
            let p = if i == j {
                f64::INFINITY
            } else {
                p_uni[i][j].unwrap_or(f64::INFINITY)
            };
            if p <= 0.0 {
                return Err(NetModelError::InvalidParameter(format!(
                    "unicast power for link {j} -> {i} must be positive"
                )));
            }
            inst.p_uni[i * n + j] = p;
            inst.gain[i * n + j] = if p.is_finite() {
                inst.channel.gamma_th * inst.channel.sigma2 / (inst.nodes[j].eta * p)
            } else {
                0.0
            };
        }
    }
    inst.abstract_powers = true;
    inst.rebuild_adjacency();
    Ok(inst)
}

/// Parameters for random instance generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomInstanceConfig {
    /// Total number of nodes including the source.
    pub node_count: usize,
    /// Side of the square deployment area in meters.
    pub area_side: f64,
    /// Uniform range for per-node maximum transmit power, watts.
    pub p_max_range: (f64, f64),
    /// Uniform range for per-node circuitry power, watts.
    pub p_c_range: (f64, f64),
    /// Amplifier efficiency, shared by all nodes.
    pub eta: f64,
    pub channel: ChannelParams,
}

impl Default for RandomInstanceConfig {
    fn default() -> Self {
        RandomInstanceConfig {
            node_count: 20,
            area_side: 250.0,
            p_max_range: (0.15, 0.25),
            p_c_range: (0.05, 0.10),
            eta: 0.3,
            channel: ChannelParams {
                lambda: 0.125,
                l0: 1.0,
                alpha: 3.0,
                gamma_th: 10.0,
                sigma2: 1e-12,
            },
        }
    }
}

impl RandomInstanceConfig {
    pub fn validate(&self) -> Result<(), NetModelError> {
        if self.node_count < 2 {
            return Err(NetModelError::TooFewNodes(self.node_count));
        }
        if !(self.area_side > 0.0) {
            return Err(NetModelError::InvalidParameter(
                "area_side must be positive".into(),
            ));
        }
        if !(self.p_max_range.0 > 0.0 && self.p_max_range.1 >= self.p_max_range.0) {
            return Err(NetModelError::InvalidParameter(format!(
                "p_max range {:?} is invalid",
                self.p_max_range
            )));
        }
        if !(self.p_c_range.0 >= 0.0 && self.p_c_range.1 >= self.p_c_range.0) {
            return Err(NetModelError::InvalidParameter(format!(
                "p_c range {:?} is invalid",
                self.p_c_range
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(NetModelError::InvalidParameter(
                "eta must lie in (0,1)".into(),
            ));
        }
        self.channel.validate()
    }
}

fn sample_range(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

/// Draw a random instance: positions uniform i.i.d. in the square, power
/// budgets uniform in their ranges, the source chosen uniformly among the
/// nodes. Deterministic given the seed (fixed draw order: positions, p_max,
/// p_c, source).
pub fn generate_random_instance(
    cfg: &RandomInstanceConfig,
    seed: u64,
) -> Result<NetworkInstance, NetModelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.node_count;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.gen_range(0.0..cfg.area_side);
        let y = rng.gen_range(0.0..cfg.area_side);
        positions.push((x, y));
    }
    let p_max: Vec<f64> = (0..n)
        .map(|_| sample_range(&mut rng, cfg.p_max_range))
        .collect();
    let p_c: Vec<f64> = (0..n)
        .map(|_| sample_range(&mut rng, cfg.p_c_range))
        .collect();
    let source = rng.gen_range(0..n) as u64;

    let nodes = (0..n)
        .map(|i| NodeParams {
            id: i as u64,
            position: positions[i],
            p_max: p_max[i],
            p_c: p_c[i],
            eta: cfg.eta,
        })
        .collect();
    build_instance(nodes, source, cfg.channel)
}

/// Normalized line topology: the source at 0 and `n` receivers evenly spaced
/// by `1/n` up to distance 1. Unicast power between nodes at distance `d` is
/// `d^alpha`, the maximum transmit power is 1 and every node pays the same
/// normalized circuitry power.
pub fn line_instance(n: usize, alpha: f64, p_c: f64) -> Result<NetworkInstance, NetModelError> {
    line_instance_compressed(n, alpha, p_c, 0.0)
}

/// [`line_instance`] with the receiver spacing shrunk by `(1 - epsilon)`;
/// `epsilon = 0` is the evenly-spread layout.
pub fn line_instance_compressed(
    n: usize,
    alpha: f64,
    p_c: f64,
    epsilon: f64,
) -> Result<NetworkInstance, NetModelError> {
    if n < 1 {
        return Err(NetModelError::TooFewNodes(n + 1));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(NetModelError::InvalidParameter(
            "epsilon must lie in [0,1)".into(),
        ));
    }
    let spacing = (1.0 - epsilon) / n as f64;
    let total = n + 1;
    let nodes: Vec<NodeParams> = (0..total)
        .map(|i| NodeParams {
            id: i as u64,
            position: (i as f64 * spacing, 0.0),
            p_max: 1.0,
            p_c,
            eta: 0.5,
        })
        .collect();
    // Sentinel channel, only used to back-derive consistent gains.
    let channel = ChannelParams {
        lambda: 4.0 * std::f64::consts::PI,
        l0: 1.0,
        alpha,
        gamma_th: 1.0,
        sigma2: 0.5,
    };
    let mut p_uni = vec![vec![None; total]; total];
    for (i, row) in p_uni.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                let d = (i as f64 - j as f64).abs() * spacing;
                *cell = Some(d.powf(alpha));
            }
        }
    }
    build_instance_from_powers(nodes, 0, channel, &p_uni)
}

// --- JSON schema ---------------------------------------------------------

/// Serialized instance document. `gamma_th` travels in dB and `sigma2` in
/// dBm; the optional `p_uni` block carries prescribed unicast powers for
/// non-geometric instances (`null` entries mark missing links).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub channel: ChannelDocument,
    pub source: u64,
    pub nodes: Vec<NodeDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_uni: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub lambda_m: f64,
    pub l0_m: f64,
    pub alpha: f64,
    pub gamma_th_db: f64,
    pub sigma2_dbm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub p_max: f64,
    pub p_c: f64,
    pub eta: f64,
}

impl InstanceDocument {
    pub fn from_instance(inst: &NetworkInstance) -> InstanceDocument {
        let ch = inst.channel();
        let n = inst.len();
        let p_uni = if inst.has_prescribed_powers() {
            let mut rows = vec![vec![None; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let p = inst.unicast_power(NodeId(i), NodeId(j));
                    if i != j && p.is_finite() {
                        rows[i][j] = Some(p);
                    }
                }
            }
            Some(rows)
        } else {
            None
        };
        InstanceDocument {
            channel: ChannelDocument {
                lambda_m: ch.lambda,
                l0_m: ch.l0,
                alpha: ch.alpha,
                gamma_th_db: linear_to_db(ch.gamma_th),
                sigma2_dbm: watts_to_dbm(ch.sigma2),
            },
            source: inst.node(inst.source()).id,
            nodes: inst
                .nodes()
                .iter()
                .map(|p| NodeDocument {
                    id: p.id,
                    x: p.position.0,
                    y: p.position.1,
                    p_max: p.p_max,
                    p_c: p.p_c,
                    eta: p.eta,
                })
                .collect(),
            p_uni,
        }
    }

    pub fn into_instance(self) -> Result<NetworkInstance, NetModelError> {
        let channel = ChannelParams {
            lambda: self.channel.lambda_m,
            l0: self.channel.l0_m,
            alpha: self.channel.alpha,
            gamma_th: db_to_linear(self.channel.gamma_th_db),
            sigma2: dbm_to_watts(self.channel.sigma2_dbm),
        };
        let nodes: Vec<NodeParams> = self
            .nodes
            .into_iter()
            .map(|d| NodeParams {
                id: d.id,
                position: (d.x, d.y),
                p_max: d.p_max,
                p_c: d.p_c,
                eta: d.eta,
            })
            .collect();
        match self.p_uni {
            Some(matrix) => build_instance_from_powers(nodes, self.source, channel, &matrix),
            None => build_instance(nodes, self.source, channel),
        }
    }
}

pub fn instance_to_json(inst: &NetworkInstance) -> String {
    serde_json::to_string_pretty(&InstanceDocument::from_instance(inst))
        .expect("instance serialization cannot fail")
}

pub fn instance_from_json(text: &str) -> Result<NetworkInstance, NetModelError> {
    let doc: InstanceDocument = serde_json::from_str(text)
        .map_err(|e| NetModelError::InvalidParameter(format!("instance JSON: {e}")))?;
    doc.into_instance()
}
