//! Instances, arborescence topologies, derived flows and network cost.
//!
//! Vertices are addressed by a flat index: sources occupy `0..n`, the sink is
//! `n`, and Steiner vertices follow from `n + 1`. A [`Topology`] stores one
//! parent link per vertex; every edge is directed from child to parent,
//! i.e. towards the sink.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::norms::{NormError, NormSpace};
use crate::weights::{WeightError, WeightFunction};

/// Largest source count accepted by default by [`enumerate_full_topologies`].
pub const DEFAULT_ENUMERATION_CAP: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("an instance needs at least one source")]
    NoSources,
    #[error("source {index} has non-positive tonnage {value}")]
    NonPositiveTonnage { index: usize, value: f64 },
    #[error("{what} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("{what} contains a non-finite coordinate")]
    NonFinite { what: String },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("topology has {got} sources, instance has {expected}")]
    SourceCountMismatch { expected: usize, got: usize },
    #[error("topology has {expected} Steiner vertices but {got} positions were given")]
    SteinerCountMismatch { expected: usize, got: usize },
    #[error("flow conservation violated at node {node}: imbalance {imbalance:e}")]
    ConservationViolated { node: usize, imbalance: f64 },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("{n} sources exceeds the enumeration cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub point: Vec<f64>,
    pub tonnage: f64,
}

/// `n` sources with tonnages, one sink, a norm and a weight function.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    sources: Vec<Source>,
    sink: Vec<f64>,
    space: NormSpace,
    weight: WeightFunction,
}

fn check_point(what: impl Fn() -> String, p: &[f64], dim: usize) -> Result<(), ModelError> {
    if p.len() != dim {
        return Err(ModelError::DimensionMismatch {
            what: what(),
            expected: dim,
            got: p.len(),
        });
    }
    if p.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::NonFinite { what: what() });
    }
    Ok(())
}

impl Instance {
    pub fn new(
        sources: Vec<Source>,
        sink: Vec<f64>,
        space: NormSpace,
        weight: WeightFunction,
    ) -> Result<Self, ModelError> {
        if sources.is_empty() {
            return Err(ModelError::NoSources);
        }
        let dim = space.dim();
        for (i, s) in sources.iter().enumerate() {
            check_point(|| format!("source {}", i + 1), &s.point, dim)?;
            if !(s.tonnage.is_finite() && s.tonnage > 0.0) {
                return Err(ModelError::NonPositiveTonnage {
                    index: i,
                    value: s.tonnage,
                });
            }
        }
        check_point(|| "sink".to_string(), &sink, dim)?;
        Ok(Self {
            sources,
            sink,
            space,
            weight,
        })
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn sink(&self) -> &[f64] {
        &self.sink
    }

    pub fn space(&self) -> &NormSpace {
        &self.space
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn tonnages(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.tonnage).collect()
    }

    pub fn total_tonnage(&self) -> f64 {
        self.sources.iter().map(|s| s.tonnage).sum()
    }

    /// Position of terminal `v` (`v < n` a source, `v == n` the sink).
    pub fn terminal(&self, v: usize) -> &[f64] {
        if v < self.sources.len() {
            &self.sources[v].point
        } else {
            assert_eq!(v, self.sources.len(), "vertex {v} is not a terminal");
            &self.sink
        }
    }

    pub fn terminals(&self) -> impl Iterator<Item = &[f64]> {
        self.sources
            .iter()
            .map(|s| s.point.as_slice())
            .chain(std::iter::once(self.sink.as_slice()))
    }

    /// Largest pairwise terminal distance in the instance norm.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<&[f64]> = self.terminals().collect();
        let mut best = 0.0_f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(self.space.norm_unchecked(&crate::norms::sub(pts[i], pts[j])));
            }
        }
        best
    }

    /// Pairs of terminals sitting at the same point. Allowed, but callers
    /// usually want to warn about them.
    pub fn duplicate_terminals(&self) -> Vec<(usize, usize)> {
        let pts: Vec<&[f64]> = self.terminals().collect();
        let mut dups = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i] == pts[j] {
                    dups.push((i, j));
                }
            }
        }
        dups
    }

    /// Human-readable vertex label: `p1..pn`, `q`, `s1..`.
    pub fn vertex_label(&self, v: usize) -> String {
        vertex_label(self.n_sources(), v)
    }
}

pub(crate) fn vertex_label(n: usize, v: usize) -> String {
    match v.cmp(&n) {
        std::cmp::Ordering::Less => format!("p{}", v + 1),
        std::cmp::Ordering::Equal => "q".to_string(),
        std::cmp::Ordering::Greater => format!("s{}", v - n),
    }
}

/// A tree over the terminals and Steiner vertices, rooted at the sink.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology {
    n_sources: usize,
    parent: Vec<Option<usize>>,
}

impl Topology {
    /// Builds a topology from parent links. `parent[n]` (the sink) must be
    /// `None`; every other vertex must reach the sink without cycles, and
    /// every Steiner vertex needs at least one child.
    pub fn new(n_sources: usize, parent: Vec<Option<usize>>) -> Result<Self, ModelError> {
        let invalid = |m: String| Err(ModelError::InvalidTopology(m));
        if n_sources == 0 {
            return Err(ModelError::NoSources);
        }
        let len = parent.len();
        if len < n_sources + 1 {
            return invalid(format!("{len} vertices cannot hold {n_sources} sources and a sink"));
        }
        if parent[n_sources].is_some() {
            return invalid("the sink must not have a parent".into());
        }
        for (v, p) in parent.iter().enumerate() {
            if v == n_sources {
                continue;
            }
            match p {
                None => return invalid(format!("vertex {} has no parent", vertex_label(n_sources, v))),
                Some(p) if *p >= len => return invalid(format!("vertex {v} points at missing vertex {p}")),
                Some(p) if *p == v => return invalid(format!("vertex {v} is its own parent")),
                _ => {}
            }
        }
        // every vertex reaches the sink within len steps
        for start in 0..len {
            let mut v = start;
            let mut steps = 0;
            while let Some(p) = parent[v] {
                v = p;
                steps += 1;
                if steps > len {
                    return invalid(format!("cycle through vertex {start}"));
                }
            }
        }
        let mut has_child = vec![false; len];
        for p in parent.iter().flatten() {
            has_child[*p] = true;
        }
        if let Some(v) = (n_sources + 1..len).find(|&v| !has_child[v]) {
            return invalid(format!("Steiner vertex {} is a leaf", vertex_label(n_sources, v)));
        }
        Ok(Self { n_sources, parent })
    }

    /// Every source joined directly to the sink.
    pub fn direct(n_sources: usize) -> Self {
        let mut parent = vec![Some(n_sources); n_sources + 1];
        parent[n_sources] = None;
        Self { n_sources, parent }
    }

    /// One Steiner vertex collecting every source and feeding the sink.
    pub fn star(n_sources: usize) -> Self {
        let s = n_sources + 1;
        let mut parent = vec![Some(s); n_sources + 2];
        parent[n_sources] = None;
        parent[s] = Some(n_sources);
        Self { n_sources, parent }
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn sink(&self) -> usize {
        self.n_sources
    }

    pub fn n_vertices(&self) -> usize {
        self.parent.len()
    }

    pub fn n_steiner(&self) -> usize {
        self.parent.len() - self.n_sources - 1
    }

    pub fn is_steiner(&self, v: usize) -> bool {
        v > self.n_sources
    }

    pub fn steiner_vertices(&self) -> std::ops::Range<usize> {
        self.n_sources + 1..self.parent.len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&c| self.parent[c] == Some(v))
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children(v).len() + usize::from(self.parent[v].is_some())
    }

    /// Edges as `(child, parent)` pairs, in child order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
    }

    /// Every terminal is a leaf, every Steiner vertex has degree 3, and
    /// there are exactly `n - 1` Steiner vertices.
    pub fn is_full(&self) -> bool {
        let n = self.n_sources;
        if self.n_steiner() + 1 != n {
            return false;
        }
        (0..=n).all(|v| self.degree(v) == 1) && self.steiner_vertices().all(|v| self.degree(v) == 3)
    }

    /// For each vertex, the set of sources in its subtree (inclusive).
    pub fn clusters(&self) -> Vec<BTreeSet<usize>> {
        let mut out = vec![BTreeSet::new(); self.parent.len()];
        for i in 0..self.n_sources {
            let mut v = i;
            loop {
                out[v].insert(i);
                match self.parent[v] {
                    Some(p) => v = p,
                    None => break,
                }
            }
        }
        out
    }

    /// Labeling-independent encoding: the sorted list of `(cluster, label)`
    /// pairs over non-sink vertices, where `label` is the terminal index or
    /// `usize::MAX` for Steiner vertices. Two topologies share a key iff they
    /// are equal up to renaming Steiner vertices.
    pub fn canonical_key(&self) -> Vec<(Vec<usize>, usize)> {
        let clusters = self.clusters();
        let mut key: Vec<(Vec<usize>, usize)> = (0..self.parent.len())
            .filter(|&v| v != self.n_sources)
            .map(|v| {
                let label = if self.is_steiner(v) { usize::MAX } else { v };
                (clusters[v].iter().copied().collect(), label)
            })
            .collect();
        key.sort();
        key
    }

    /// Flow on every edge, indexed by the edge's child vertex (the sink's
    /// entry is 0). Each source's tonnage is pushed along its path to the
    /// sink, in source order.
    pub fn derive_flows(&self, tonnages: &[f64]) -> Result<Vec<f64>, ModelError> {
        if tonnages.len() != self.n_sources {
            return Err(ModelError::SourceCountMismatch {
                expected: self.n_sources,
                got: tonnages.len(),
            });
        }
        let mut flow = vec![0.0; self.parent.len()];
        for (i, &t) in tonnages.iter().enumerate() {
            let mut v = i;
            let mut steps = 0;
            while let Some(p) = self.parent[v] {
                flow[v] += t;
                v = p;
                steps += 1;
                if steps > self.parent.len() {
                    return Err(ModelError::InvalidTopology("cycle".into()));
                }
            }
        }
        Ok(flow)
    }
}

/// Cached per-edge quantities of an embedding. The edge runs from `child`
/// to `parent`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeData {
    pub child: usize,
    pub parent: usize,
    pub flow: f64,
    pub weight: f64,
    pub length: f64,
}

impl EdgeData {
    pub fn cost(&self) -> f64 {
        self.weight * self.length
    }
}

/// A topology with coordinates for every vertex, plus derived edge data
/// and total cost `Σ w(flow_e) · length_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    topology: Topology,
    positions: Vec<Vec<f64>>,
    edges: Vec<EdgeData>,
    cost: f64,
}

impl Embedding {
    /// Places the Steiner vertices of `topology` at `steiner_positions`;
    /// terminal positions are copied from `inst`.
    pub fn new(
        inst: &Instance,
        topology: Topology,
        steiner_positions: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        if topology.n_sources() != inst.n_sources() {
            return Err(ModelError::SourceCountMismatch {
                expected: inst.n_sources(),
                got: topology.n_sources(),
            });
        }
        if steiner_positions.len() != topology.n_steiner() {
            return Err(ModelError::SteinerCountMismatch {
                expected: topology.n_steiner(),
                got: steiner_positions.len(),
            });
        }
        let dim = inst.space().dim();
        for (k, p) in steiner_positions.iter().enumerate() {
            check_point(|| format!("Steiner vertex s{}", k + 1), p, dim)?;
        }
        let mut positions: Vec<Vec<f64>> = inst.terminals().map(|p| p.to_vec()).collect();
        positions.extend(steiner_positions);

        let flows = topology.derive_flows(&inst.tonnages())?;
        let w = inst.weight();
        let space = inst.space();
        let edges: Vec<EdgeData> = topology
            .edges()
            .map(|(c, p)| EdgeData {
                child: c,
                parent: p,
                flow: flows[c],
                weight: w.eval_unchecked(flows[c]),
                length: space.norm_unchecked(&crate::norms::sub(&positions[c], &positions[p])),
            })
            .collect();
        let cost = edges.iter().map(EdgeData::cost).sum();
        Ok(Self {
            topology,
            positions,
            edges,
            cost,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> &[f64] {
        &self.positions[v]
    }

    pub fn steiner_positions(&self) -> &[Vec<f64>] {
        &self.positions[self.topology.n_sources() + 1..]
    }

    pub fn edges(&self) -> &[EdgeData] {
        &self.edges
    }

    /// The edge leaving `child` towards the sink.
    pub fn edge_from(&self, child: usize) -> Option<&EdgeData> {
        self.edges.iter().find(|e| e.child == child)
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }
}

/// `Σ_e w(flow_e) · ‖x_child − x_parent‖` for a topology with the given
/// Steiner coordinates.
pub fn network_cost(
    inst: &Instance,
    topology: &Topology,
    steiner_positions: &[Vec<f64>],
) -> Result<f64, ModelError> {
    Ok(Embedding::new(inst, topology.clone(), steiner_positions.to_vec())?.cost())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeRole {
    Source { tonnage: f64 },
    Sink,
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkNode {
    pub point: Vec<f64>,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub flow: f64,
}

/// A flow network with explicit per-edge flows; cycles and split routing
/// are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralNetwork {
    pub nodes: Vec<NetworkNode>,
    pub edges: Vec<FlowEdge>,
}

impl GeneralNetwork {
    /// Checks that each source emits its tonnage, the sink absorbs the total
    /// and every junction is balanced, within `1e-9` relative to the total
    /// tonnage.
    pub fn check_conservation(&self) -> Result<(), ModelError> {
        let mut net_out = vec![0.0; self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            if e.from >= self.nodes.len() || e.to >= self.nodes.len() {
                return Err(ModelError::InvalidNetwork(format!("edge {k} references a missing node")));
            }
            if !(e.flow.is_finite() && e.flow >= 0.0) {
                return Err(ModelError::InvalidNetwork(format!("edge {k} has invalid flow {}", e.flow)));
            }
            net_out[e.from] += e.flow;
            net_out[e.to] -= e.flow;
        }
        let total: f64 = self
            .nodes
            .iter()
            .map(|n| match n.role {
                NodeRole::Source { tonnage } => tonnage,
                _ => 0.0,
            })
            .sum();
        let sinks = self.nodes.iter().filter(|n| n.role == NodeRole::Sink).count();
        if sinks != 1 {
            return Err(ModelError::InvalidNetwork(format!("expected one sink, found {sinks}")));
        }
        let tol = 1e-9 * total.max(1.0);
        for (i, node) in self.nodes.iter().enumerate() {
            let expected = match node.role {
                NodeRole::Source { tonnage } => tonnage,
                NodeRole::Sink => -total,
                NodeRole::Junction => 0.0,
            };
            let imbalance = net_out[i] - expected;
            if imbalance.abs() > tol {
                return Err(ModelError::ConservationViolated { node: i, imbalance });
            }
        }
        Ok(())
    }
}

/// Cost of an arbitrary flow network, `Σ_e w(flow_e) · length_e`. The
/// network must conserve flow.
pub fn general_network_cost(
    net: &GeneralNetwork,
    w: &WeightFunction,
    space: &NormSpace,
) -> Result<f64, ModelError> {
    for (i, n) in net.nodes.iter().enumerate() {
        check_point(|| format!("node {i}"), &n.point, space.dim())?;
    }
    net.check_conservation()?;
    let mut total = 0.0;
    for e in &net.edges {
        let len = space.distance(&net.nodes[e.from].point, &net.nodes[e.to].point)?;
        total += w.eval(e.flow)? * len;
    }
    Ok(total)
}

/// All full Steiner topologies on `n` sources plus the sink, sorted by
/// [`Topology::canonical_key`]. For `n ≥ 2` there are `(2k − 5)!!` of them
/// with `k = n + 1`; `n = 1` yields the single direct edge.
///
/// Built by inserting sources one at a time: each new source subdivides an
/// existing edge with a fresh Steiner vertex.
pub fn enumerate_full_topologies(n: usize, cap: usize) -> Result<Vec<Topology>, ModelError> {
    if n == 0 {
        return Err(ModelError::NoSources);
    }
    if n > cap {
        return Err(ModelError::EnumerationCap { n, cap });
    }
    if n == 1 {
        return Ok(vec![Topology::direct(1)]);
    }
    let sink = n;
    let first = n + 1;
    // unrooted edge lists; Steiner vertices numbered from n + 1 upwards
    let mut trees: Vec<Vec<(usize, usize)>> = vec![vec![(0, first), (1, first), (sink, first)]];
    for src in 2..n {
        let steiner = n + src;
        let mut next = Vec::with_capacity(trees.len() * (2 * src + 1));
        for edges in &trees {
            for k in 0..edges.len() {
                let (a, b) = edges[k];
                let mut e = edges.clone();
                e[k] = (a, steiner);
                e.push((steiner, b));
                e.push((src, steiner));
                next.push(e);
            }
        }
        trees = next;
    }
    let mut out: Vec<Topology> = trees
        .into_iter()
        .map(|edges| root_at_sink(n, 2 * n, &edges))
        .collect();
    out.sort_by_cached_key(Topology::canonical_key);
    Ok(out)
}

fn root_at_sink(n: usize, n_vertices: usize, edges: &[(usize, usize)]) -> Topology {
    let mut adj = vec![Vec::new(); n_vertices];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![None; n_vertices];
    let mut seen = vec![false; n_vertices];
    let mut queue = VecDeque::from([n]);
    seen[n] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                parent[u] = Some(v);
                queue.push_back(u);
            }
        }
    }
    Topology { n_sources: n, parent }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid_instance(points: &[[f64; 2]], tonnages: &[f64], sink: [f64; 2], w: WeightFunction) -> Instance {
        let sources = points
            .iter()
            .zip(tonnages)
            .map(|(p, &t)| Source {
                point: p.to_vec(),
                tonnage: t,
            })
            .collect();
        Instance::new(sources, sink.to_vec(), NormSpace::euclidean(2).unwrap(), w).unwrap()
    }

    #[test]
    fn instance_validation() {
        let space = NormSpace::euclidean(2).unwrap();
        let w = WeightFunction::constant(1.0).unwrap();
        assert_eq!(
            Instance::new(vec![], vec![0.0, 0.0], space.clone(), w),
            Err(ModelError::NoSources)
        );
        let bad_t = vec![Source { point: vec![1.0, 0.0], tonnage: 0.0 }];
        assert!(matches!(
            Instance::new(bad_t, vec![0.0, 0.0], space.clone(), w),
            Err(ModelError::NonPositiveTonnage { index: 0, .. })
        ));
        let bad_dim = vec![Source { point: vec![1.0], tonnage: 1.0 }];
        assert!(matches!(
            Instance::new(bad_dim, vec![0.0, 0.0], space.clone(), w),
            Err(ModelError::DimensionMismatch { .. })
        ));
        let nan = vec![Source { point: vec![f64::NAN, 0.0], tonnage: 1.0 }];
        assert!(matches!(
            Instance::new(nan, vec![0.0, 0.0], space, w),
            Err(ModelError::NonFinite { .. })
        ));
    }

    #[test]
    fn duplicates_are_reported_not_rejected() {
        let inst = euclid_instance(
            &[[1.0, 1.0], [1.0, 1.0]],
            &[1.0, 2.0],
            [0.0, 0.0],
            WeightFunction::constant(1.0).unwrap(),
        );
        assert_eq!(inst.duplicate_terminals(), vec![(0, 1)]);
    }

    #[test]
    fn topology_validation() {
        assert!(Topology::new(2, vec![Some(2), Some(2), None]).is_ok());
        // cycle between the two sources
        assert!(Topology::new(2, vec![Some(1), Some(0), None]).is_err());
        // sink with a parent
        assert!(Topology::new(1, vec![Some(1), Some(0)]).is_err());
        // Steiner leaf
        assert!(Topology::new(1, vec![Some(1), None, Some(1)]).is_err());
        // dangling parent
        assert!(Topology::new(1, vec![Some(7), None]).is_err());
    }

    #[test]
    fn flows_on_star_and_steiner() {
        let direct = Topology::direct(2);
        let f = direct.derive_flows(&[2.0, 4.0]).unwrap();
        assert_eq!((f[0], f[1]), (2.0, 4.0));

        let star = Topology::star(2);
        let f = star.derive_flows(&[2.0, 4.0]).unwrap();
        assert_eq!((f[0], f[1], f[3]), (2.0, 4.0, 6.0));
        assert!(star.is_full());

        // p2 routed through p1
        let chain = Topology::new(2, vec![Some(2), Some(0), None]).unwrap();
        let f = chain.derive_flows(&[2.0, 4.0]).unwrap();
        assert_eq!((f[0], f[1]), (6.0, 4.0));
        assert_eq!(chain.degree(0), 2);
        assert!(star.derive_flows(&[1.0]).is_err());
    }

    #[test]
    fn cost_of_direct_edge_and_coincident_points() {
        let inst = euclid_instance(&[[2.0, 0.0]], &[5.0], [0.0, 0.0], WeightFunction::affine(1.0, 1.0).unwrap());
        let emb = Embedding::new(&inst, Topology::direct(1), vec![]).unwrap();
        assert_eq!(emb.cost(), 12.0);

        let inst = euclid_instance(
            &[[1.0, 1.0], [1.0, 1.0]],
            &[1.0, 3.0],
            [1.0, 1.0],
            WeightFunction::affine(1.0, 1.0).unwrap(),
        );
        assert_eq!(network_cost(&inst, &Topology::star(2), &[vec![1.0, 1.0]]).unwrap(), 0.0);
    }

    #[test]
    fn embedding_checks_steiner_count() {
        let inst = euclid_instance(&[[2.0, 0.0], [0.0, 2.0]], &[1.0, 1.0], [0.0, 0.0], WeightFunction::constant(1.0).unwrap());
        assert!(matches!(
            Embedding::new(&inst, Topology::star(2), vec![]),
            Err(ModelError::SteinerCountMismatch { expected: 1, got: 0 })
        ));
    }

    fn triangle_network(flows: &[(usize, usize, f64)]) -> GeneralNetwork {
        let h = 99.75f64.sqrt();
        GeneralNetwork {
            nodes: vec![
                NetworkNode { point: vec![0.0, 0.0], role: NodeRole::Source { tonnage: 2.0 } },
                NetworkNode { point: vec![1.0, 0.0], role: NodeRole::Source { tonnage: 4.0 } },
                NetworkNode { point: vec![0.5, h], role: NodeRole::Sink },
            ],
            edges: flows.iter().map(|&(from, to, flow)| FlowEdge { from, to, flow }).collect(),
        }
    }

    #[test]
    fn split_routing_costs() {
        let w = WeightFunction::rounded_affine(3.0, 1.0, 2.0).unwrap();
        let space = NormSpace::euclidean(2).unwrap();
        let split = triangle_network(&[(1, 0, 1.0), (0, 2, 3.0), (1, 2, 3.0)]);
        assert!((general_network_cost(&split, &w, &space).unwrap() - 102.0).abs() <= 1e-9);
        let direct = triangle_network(&[(0, 2, 2.0), (1, 2, 4.0)]);
        assert!((general_network_cost(&direct, &w, &space).unwrap() - 110.0).abs() <= 1e-9);
    }

    #[test]
    fn zero_flow_network_is_steiner_length() {
        let space = NormSpace::euclidean(2).unwrap();
        let net = GeneralNetwork {
            nodes: vec![
                NetworkNode { point: vec![0.0, 0.0], role: NodeRole::Junction },
                NetworkNode { point: vec![3.0, 4.0], role: NodeRole::Sink },
                NetworkNode { point: vec![3.0, 0.0], role: NodeRole::Junction },
            ],
            edges: vec![
                FlowEdge { from: 0, to: 1, flow: 0.0 },
                FlowEdge { from: 0, to: 2, flow: 0.0 },
            ],
        };
        let cost = general_network_cost(&net, &WeightFunction::constant(1.0).unwrap(), &space).unwrap();
        assert_eq!(cost, 8.0);
    }

    #[test]
    fn conservation_violation_names_node() {
        let w = WeightFunction::rounded_affine(3.0, 1.0, 2.0).unwrap();
        let space = NormSpace::euclidean(2).unwrap();
        let bad = triangle_network(&[(1, 0, 1.0), (0, 2, 2.0), (1, 2, 3.0)]);
        match general_network_cost(&bad, &w, &space) {
            Err(ModelError::ConservationViolated { node, imbalance }) => {
                assert_eq!(node, 0);
                assert!((imbalance + 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_enumeration_counts() {
        assert_eq!(enumerate_full_topologies(1, 7).unwrap(), vec![Topology::direct(1)]);
        let two = enumerate_full_topologies(2, 7).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].canonical_key(), Topology::star(2).canonical_key());
        assert_eq!(enumerate_full_topologies(3, 7).unwrap().len(), 3);
        assert_eq!(enumerate_full_topologies(4, 7).unwrap().len(), 15);
        assert_eq!(
            enumerate_full_topologies(8, 7),
            Err(ModelError::EnumerationCap { n: 8, cap: 7 })
        );
        assert_eq!(enumerate_full_topologies(0, 7), Err(ModelError::NoSources));
    }

    #[test]
    fn canonical_key_ignores_steiner_labels() {
        // two Steiner vertices, labels swapped
        let a = Topology::new(3, vec![Some(4), Some(4), Some(5), None, Some(5), Some(3)]).unwrap();
        let b = Topology::new(3, vec![Some(5), Some(5), Some(4), None, Some(3), Some(4)]).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.canonical_key(), b.canonical_key());
        let c = Topology::new(3, vec![Some(4), Some(5), Some(4), None, Some(5), Some(3)]).unwrap();
        assert_ne!(a.canonical_key(), c.canonical_key());
    }
}
