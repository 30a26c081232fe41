//! Finite event-tree markets, their gains space, and contingent claims.
//!
//! All prices are discounted, so the numeraire is the constant 1 and a
//! self-financing strategy started from zero capital produces the terminal
//! wealth `Σ θ·ΔS` summed along the path to each leaf.

mod countable;
mod random;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use countable::{power_law_constant, CountableModel, Sequence, SequenceConfig};
pub use random::{random_claim, random_market, RandomMarketOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("tree is empty")]
    EmptyTree,
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("node `{node}`: unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("tree has no root")]
    NoRoot,
    #[error("tree has more than one root: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("node `{0}` is not reachable from the root")]
    Unreachable(String),
    #[error("node `{0}`: conditional probability must be strictly positive and finite")]
    NonPositiveProbability(String),
    #[error("children of node `{node}` have probabilities summing to {sum}, expected 1")]
    ProbabilitySum { node: String, sum: f64 },
    #[error("node `{node}`: expected {expected} prices, found {found}")]
    PriceDimension {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("node `{0}`: non-finite price")]
    NonFinitePrice(String),
    #[error("leaves have different time indices ({0} and {1})")]
    UnevenLeaves(usize, usize),
    #[error("unsupported schema_version {0}, expected 1")]
    SchemaVersion(u32),
    #[error("claim has {found} entries, market has {expected} terminal states")]
    Dimension { expected: usize, found: usize },
    #[error("claim spec: {0}")]
    ClaimSpec(String),
    #[error("countable model: {0}")]
    Countable(String),
}

/// Node identifier as written in market files; strings and integers are
/// both accepted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeId {
    Int(i64),
    Str(String),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Int(i) => write!(f, "{i}"),
            NodeId::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: NodeId,
    #[serde(default)]
    pub parent: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub prices: Vec<f64>,
}

/// On-disk market description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub assets: usize,
    pub tree: Vec<NodeConfig>,
}

impl MarketConfig {
    /// One-period market with a single asset.
    pub fn one_period(s0: f64, terminal: &[f64], probabilities: &[f64]) -> Self {
        let mut tree = vec![NodeConfig {
            id: NodeId::Str("root".into()),
            parent: None,
            p: None,
            prices: vec![s0],
        }];
        for (i, (s, p)) in terminal.iter().zip(probabilities).enumerate() {
            tree.push(NodeConfig {
                id: NodeId::Str(format!("w{}", i + 1)),
                parent: Some(NodeId::Str("root".into())),
                p: Some(*p),
                prices: vec![*s],
            });
        }
        Self {
            schema_version: Some(1),
            assets: 1,
            tree,
        }
    }

    /// The trinomial example market: S0 = 1, S1 = (2, 1, 0.5), P uniform.
    pub fn trinomial() -> Self {
        Self::one_period(1.0, &[2.0, 1.0, 0.5], &[1.0 / 3.0; 3])
    }
}

#[derive(Debug, Clone)]
pub struct Node<S> {
    pub id: String,
    pub parent: Option<usize>,
    pub conditional_probability: S,
    pub prices: Vec<S>,
    pub time: usize,
    pub children: Vec<usize>,
}

/// A validated finite event tree with full-support reference measure.
#[derive(Debug, Clone)]
pub struct MarketModel<S> {
    assets: usize,
    nodes: Vec<Node<S>>,
    root: usize,
    terminal_states: Vec<usize>,
    reference_probabilities: Vec<S>,
    /// node indices from the root down to each leaf
    paths: Vec<Vec<usize>>,
}

impl<S: Scalar> MarketModel<S> {
    pub fn build(config: &MarketConfig) -> Result<Self, MarketError> {
        if let Some(v) = config.schema_version {
            if v != 1 {
                return Err(MarketError::SchemaVersion(v));
            }
        }
        if config.tree.is_empty() {
            return Err(MarketError::EmptyTree);
        }
        let mut index = HashMap::new();
        for (i, n) in config.tree.iter().enumerate() {
            let key = n.id.to_string();
            if index.insert(key.clone(), i).is_some() {
                return Err(MarketError::DuplicateId(key));
            }
        }
        let mut root: Option<usize> = None;
        let mut parents = Vec::with_capacity(config.tree.len());
        for n in &config.tree {
            let id = n.id.to_string();
            if n.prices.len() != config.assets {
                return Err(MarketError::PriceDimension {
                    node: id,
                    expected: config.assets,
                    found: n.prices.len(),
                });
            }
            if n.prices.iter().any(|p| !p.is_finite()) {
                return Err(MarketError::NonFinitePrice(id));
            }
            match &n.parent {
                None => {
                    if let Some(r) = root {
                        return Err(MarketError::MultipleRoots(
                            config.tree[r].id.to_string(),
                            id.clone(),
                        ));
                    }
                    root = Some(index[&id]);
                    parents.push(None);
                }
                Some(pid) => {
                    let p = index.get(&pid.to_string()).copied().ok_or_else(|| {
                        MarketError::UnknownParent {
                            node: id.clone(),
                            parent: pid.to_string(),
                        }
                    })?;
                    match n.p {
                        Some(prob) if prob > 0.0 && prob.is_finite() => {}
                        _ => return Err(MarketError::NonPositiveProbability(id)),
                    }
                    parents.push(Some(p));
                }
            }
        }
        let root = root.ok_or(MarketError::NoRoot)?;

        let mut children = vec![Vec::new(); config.tree.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }

        // depth-first from the root; children keep file order
        let mut time = vec![usize::MAX; config.tree.len()];
        let mut order = Vec::with_capacity(config.tree.len());
        let mut stack = vec![root];
        time[root] = 0;
        while let Some(n) = stack.pop() {
            order.push(n);
            for &c in children[n].iter().rev() {
                if time[c] != usize::MAX {
                    return Err(MarketError::Unreachable(config.tree[c].id.to_string()));
                }
                time[c] = time[n] + 1;
                stack.push(c);
            }
        }
        if let Some(i) = time.iter().position(|&t| t == usize::MAX) {
            return Err(MarketError::Unreachable(config.tree[i].id.to_string()));
        }

        let mut conditional = vec![S::one(); config.tree.len()];
        for (n, kids) in children.iter().enumerate() {
            if kids.is_empty() {
                continue;
            }
            let sum: f64 = kids.iter().map(|&c| config.tree[c].p.unwrap()).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(MarketError::ProbabilitySum {
                    node: config.tree[n].id.to_string(),
                    sum,
                });
            }
            let raw: Vec<S> = kids
                .iter()
                .map(|&c| S::from_f64_lossy(config.tree[c].p.unwrap()))
                .collect();
            let total = raw.iter().cloned().fold(S::zero(), |a, b| a + b);
            for (&c, r) in kids.iter().zip(raw) {
                conditional[c] = r / total.clone();
            }
        }

        let nodes: Vec<Node<S>> = config
            .tree
            .iter()
            .enumerate()
            .map(|(i, n)| Node {
                id: n.id.to_string(),
                parent: parents[i],
                conditional_probability: conditional[i].clone(),
                prices: n.prices.iter().map(|&x| S::from_f64_lossy(x)).collect(),
                time: time[i],
                children: children[i].clone(),
            })
            .collect();

        let terminal_states: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&n| nodes[n].children.is_empty())
            .collect();
        let horizon = nodes[terminal_states[0]].time;
        for &l in &terminal_states {
            if nodes[l].time != horizon {
                return Err(MarketError::UnevenLeaves(horizon, nodes[l].time));
            }
        }
        let paths: Vec<Vec<usize>> = terminal_states
            .iter()
            .map(|&l| {
                let mut path = vec![l];
                let mut cur = l;
                while let Some(p) = nodes[cur].parent {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                path
            })
            .collect();
        let reference_probabilities = paths
            .iter()
            .map(|path| {
                path[1..]
                    .iter()
                    .fold(S::one(), |acc, &n| acc * nodes[n].conditional_probability.clone())
            })
            .collect();

        Ok(Self {
            assets: config.assets,
            nodes,
            root,
            terminal_states,
            reference_probabilities,
            paths,
        })
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn nodes(&self) -> &[Node<S>] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn horizon(&self) -> usize {
        self.nodes[self.terminal_states[0]].time
    }

    /// Leaf node indices in depth-first order.
    pub fn terminal_states(&self) -> &[usize] {
        &self.terminal_states
    }

    pub fn num_states(&self) -> usize {
        self.terminal_states.len()
    }

    /// P-weight of each terminal state.
    pub fn reference_probabilities(&self) -> &[S] {
        &self.reference_probabilities
    }

    /// Root-to-leaf node indices for terminal state `state`.
    pub fn path(&self, state: usize) -> &[usize] {
        &self.paths[state]
    }

    /// Price of `asset` at each terminal state.
    pub fn terminal_prices(&self, asset: usize) -> Vec<S> {
        self.terminal_states
            .iter()
            .map(|&l| self.nodes[l].prices[asset].clone())
            .collect()
    }

    pub fn non_terminal_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.nodes.len())
            .filter(|&n| !self.nodes[n].children.is_empty())
            .collect();
        v.sort_by_key(|&n| (self.nodes[n].time, n));
        v
    }

    /// Generators of the linear space K of zero-cost terminal wealths: one
    /// per (non-terminal node, asset), holding one unit of the asset over the
    /// single step out of that node.
    pub fn gains_space(&self) -> GainsSpace<S> {
        let n = self.num_states();
        let mut generators = Vec::new();
        let mut sources = Vec::new();
        for node in self.non_terminal_nodes() {
            for asset in 0..self.assets {
                let here = self.nodes[node].prices[asset].clone();
                let g: Vec<S> = (0..n)
                    .map(|s| {
                        let path = &self.paths[s];
                        match path.iter().position(|&x| x == node) {
                            Some(t) if t + 1 < path.len() => {
                                self.nodes[path[t + 1]].prices[asset].clone() - here.clone()
                            }
                            _ => S::zero(),
                        }
                    })
                    .collect();
                generators.push(g);
                sources.push((node, asset));
            }
        }
        GainsSpace {
            generators,
            sources,
        }
    }

    pub fn make_claim(&self, spec: &ClaimSpec) -> Result<Claim<S>, MarketError> {
        if let Some(v) = spec.schema_version {
            if v != 1 {
                return Err(MarketError::SchemaVersion(v));
            }
        }
        let asset = spec.asset.unwrap_or(0);
        let need_asset = || {
            if asset >= self.assets {
                Err(MarketError::ClaimSpec(format!(
                    "asset index {asset} out of range for {} assets",
                    self.assets
                )))
            } else {
                Ok(())
            }
        };
        let strike = || {
            spec.strike
                .filter(|k| k.is_finite())
                .map(S::from_f64_lossy)
                .ok_or_else(|| MarketError::ClaimSpec("missing or non-finite strike".into()))
        };
        let payoff = match spec.kind {
            ClaimKind::Call => {
                need_asset()?;
                let k = strike()?;
                self.terminal_prices(asset)
                    .into_iter()
                    .map(|s| positive_part(s - k.clone()))
                    .collect()
            }
            ClaimKind::Put => {
                need_asset()?;
                let k = strike()?;
                self.terminal_prices(asset)
                    .into_iter()
                    .map(|s| positive_part(k.clone() - s))
                    .collect()
            }
            ClaimKind::Vector => {
                let values = spec
                    .values
                    .as_ref()
                    .ok_or_else(|| MarketError::ClaimSpec("vector claim needs `values`".into()))?;
                if values.len() != self.num_states() {
                    return Err(MarketError::Dimension {
                        expected: self.num_states(),
                        found: values.len(),
                    });
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(MarketError::ClaimSpec("non-finite payoff".into()));
                }
                values.iter().map(|&v| S::from_f64_lossy(v)).collect()
            }
        };
        Ok(Claim { payoff })
    }

    /// Wraps an explicit payoff vector, checking its length.
    pub fn claim(&self, payoff: Vec<S>) -> Result<Claim<S>, MarketError> {
        if payoff.len() != self.num_states() {
            return Err(MarketError::Dimension {
                expected: self.num_states(),
                found: payoff.len(),
            });
        }
        Ok(Claim { payoff })
    }
}

fn positive_part<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

/// Spanning set of the gains space. Every generator is a linear direction:
/// both signs belong to K.
#[derive(Debug, Clone)]
pub struct GainsSpace<S> {
    pub generators: Vec<Vec<S>>,
    /// (node, asset) that produced each generator
    pub sources: Vec<(usize, usize)>,
}

impl<S: Scalar> GainsSpace<S> {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Terminal wealth `Σ θ_g g` of the strategy with coefficients `theta`.
    pub fn wealth(&self, theta: &[S], num_states: usize) -> Vec<S> {
        let mut w = vec![S::zero(); num_states];
        for (g, t) in self.generators.iter().zip(theta) {
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi = wi.clone() + t.clone() * gi.clone();
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimKind {
    Call,
    Put,
    Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(rename = "type")]
    pub kind: ClaimKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<usize>,
}

impl ClaimSpec {
    pub fn call(strike: f64) -> Self {
        Self {
            schema_version: Some(1),
            kind: ClaimKind::Call,
            strike: Some(strike),
            values: None,
            asset: None,
        }
    }

    pub fn put(strike: f64) -> Self {
        Self {
            kind: ClaimKind::Put,
            ..Self::call(strike)
        }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Self {
            schema_version: Some(1),
            kind: ClaimKind::Vector,
            strike: None,
            values: Some(values),
            asset: None,
        }
    }
}

/// Payoff per terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim<S> {
    pub payoff: Vec<S>,
}

impl<S: Scalar> Claim<S> {
    pub fn len(&self) -> usize {
        self.payoff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoff.is_empty()
    }

    pub fn shifted(&self, c: &S) -> Self {
        Claim {
            payoff: self.payoff.iter().map(|x| x.clone() + c.clone()).collect(),
        }
    }

    pub fn scaled(&self, c: &S) -> Self {
        Claim {
            payoff: self.payoff.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }
}
