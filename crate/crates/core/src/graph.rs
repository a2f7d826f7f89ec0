//! Undirected weighted graphs whose nodes carry geographic coordinates.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::GeoPoint;

/// Dense internal node index, `0..n`.
pub type NodeId = usize;

/// An undirected weighted graph with a location per node.
///
/// Adjacency is stored in both directions with neighbors sorted ascending. A
/// self-loop `(i, i, w)` is stored once and contributes `w` to `k_i`, so that
/// `two_m` is always the sum of every adjacency entry. Loaded graphs never have
/// self-loops; aggregated graphs use them to carry internal community weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoGraph {
    external_ids: Vec<u64>,
    locations: Vec<GeoPoint>,
    adjacency: Vec<Vec<(NodeId, f64)>>,
    degrees: Vec<f64>,
    two_m: f64,
}

impl GeoGraph {
    /// Builds a graph over dense indices. Duplicate edges are merged by summing
    /// their weights; external ids default to the dense indices.
    pub fn from_edges<I>(locations: Vec<GeoPoint>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let n = locations.len();
        for p in &locations {
            if !p.is_valid() {
                return Err(Error::InvalidCoordinate {
                    lat: p.lat,
                    lon: p.lon,
                });
            }
        }
        let mut merged: Vec<BTreeMap<NodeId, f64>> = vec![BTreeMap::new(); n];
        for (u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { index: x, len: n });
                }
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight {
                    u: u as u64,
                    v: v as u64,
                    weight: w,
                });
            }
            *merged[u].entry(v).or_insert(0.0) += w;
            if u != v {
                *merged[v].entry(u).or_insert(0.0) += w;
            }
        }
        let adjacency: Vec<Vec<(NodeId, f64)>> = merged
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();
        Ok(Self::from_adjacency(
            (0..n as u64).collect(),
            locations,
            adjacency,
        ))
    }

    /// Builds a graph from an already symmetric adjacency, computing degrees.
    pub(crate) fn from_adjacency(
        external_ids: Vec<u64>,
        locations: Vec<GeoPoint>,
        adjacency: Vec<Vec<(NodeId, f64)>>,
    ) -> Self {
        let degrees: Vec<f64> = adjacency
            .iter()
            .map(|nbrs| nbrs.iter().map(|&(_, w)| w).sum())
            .collect();
        let two_m = degrees.iter().sum();
        GeoGraph {
            external_ids,
            locations,
            adjacency,
            degrees,
            two_m,
        }
    }

    /// Assembles a graph from its parts without any checking. Use
    /// [`validate_graph`] to inspect the result.
    pub fn from_raw_parts(
        external_ids: Vec<u64>,
        locations: Vec<GeoPoint>,
        adjacency: Vec<Vec<(NodeId, f64)>>,
        degrees: Vec<f64>,
        two_m: f64,
    ) -> Self {
        GeoGraph {
            external_ids,
            locations,
            adjacency,
            degrees,
            two_m,
        }
    }

    /// Replaces the external ids. They must be strictly ascending, one per node.
    pub fn with_external_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.node_count() {
            return Err(Error::Config(format!(
                "{} external ids for {} nodes",
                ids.len(),
                self.node_count()
            )));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "external ids must be strictly ascending".into(),
            ));
        }
        self.external_ids = ids;
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.locations.len()
    }

    /// Number of undirected edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Sum of `w_ij` over ordered pairs.
    pub fn two_m(&self) -> f64 {
        self.two_m
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    #[inline]
    pub fn degree(&self, i: NodeId) -> f64 {
        self.degrees[i]
    }

    #[inline]
    pub fn neighbors(&self, i: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[i]
    }

    #[inline]
    pub fn location(&self, i: NodeId) -> GeoPoint {
        self.locations[i]
    }

    pub fn locations(&self) -> &[GeoPoint] {
        &self.locations
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.external_ids
    }

    pub fn external_id(&self, i: NodeId) -> u64 {
        self.external_ids[i]
    }

    /// Internal index of an external id.
    pub fn index_of(&self, external: u64) -> Option<NodeId> {
        self.external_ids.binary_search(&external).ok()
    }

    /// Weight of the self-loop on `i`, zero when absent.
    pub fn self_loop(&self, i: NodeId) -> f64 {
        self.adjacency[i]
            .binary_search_by_key(&i, |&(j, _)| j)
            .map(|pos| self.adjacency[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Each undirected edge once, as `(u, v, w)` with `u <= v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, nbrs)| {
            nbrs.iter()
                .filter(move |&&(v, _)| u <= v)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    /// The subgraph induced by `nodes`, which must be strictly ascending.
    /// External ids and coordinates are carried over.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> GeoGraph {
        let mut new_index = vec![usize::MAX; self.node_count()];
        for (k, &v) in nodes.iter().enumerate() {
            new_index[v] = k;
        }
        let adjacency = nodes
            .iter()
            .map(|&v| {
                self.adjacency[v]
                    .iter()
                    .filter(|&&(u, _)| new_index[u] != usize::MAX)
                    .map(|&(u, w)| (new_index[u], w))
                    .collect()
            })
            .collect();
        GeoGraph::from_adjacency(
            nodes.iter().map(|&v| self.external_ids[v]).collect(),
            nodes.iter().map(|&v| self.locations[v]).collect(),
            adjacency,
        )
    }
}

/// Sum of the weights incident to `i`.
pub fn weighted_degree(g: &GeoGraph, i: NodeId) -> Result<f64> {
    if i >= g.node_count() {
        return Err(Error::NodeOutOfRange {
            index: i,
            len: g.node_count(),
        });
    }
    Ok(g.neighbors(i).iter().map(|&(_, w)| w).sum())
}

/// A broken [`GeoGraph`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Asymmetric {
        from: NodeId,
        to: NodeId,
    },
    NeighborOutOfRange {
        node: NodeId,
        neighbor: NodeId,
    },
    UnsortedNeighbors {
        node: NodeId,
    },
    NonPositiveWeight {
        from: NodeId,
        to: NodeId,
        weight: f64,
    },
    InvalidCoordinate {
        node: NodeId,
    },
    DegreeMismatch {
        node: NodeId,
        stored: f64,
        actual: f64,
    },
    TotalWeightMismatch {
        stored: f64,
        degree_sum: f64,
        entry_sum: f64,
    },
    ExternalIdsNotAscending,
    LengthMismatch,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Asymmetric { from, to } => {
                write!(f, "edge {from}->{to} has no matching reverse entry")
            }
            Violation::NeighborOutOfRange { node, neighbor } => {
                write!(f, "node {node} lists out-of-range neighbor {neighbor}")
            }
            Violation::UnsortedNeighbors { node } => {
                write!(f, "neighbors of node {node} are not strictly ascending")
            }
            Violation::NonPositiveWeight { from, to, weight } => {
                write!(f, "edge {from}->{to} has weight {weight}")
            }
            Violation::InvalidCoordinate { node } => {
                write!(f, "node {node} has an invalid coordinate")
            }
            Violation::DegreeMismatch {
                node,
                stored,
                actual,
            } => write!(
                f,
                "node {node} degree {stored} but incident weight {actual}"
            ),
            Violation::TotalWeightMismatch {
                stored,
                degree_sum,
                entry_sum,
            } => write!(
                f,
                "two_m {stored} disagrees with degree sum {degree_sum} / entry sum {entry_sum}"
            ),
            Violation::ExternalIdsNotAscending => write!(f, "external ids not strictly ascending"),
            Violation::LengthMismatch => write!(f, "per-node arrays differ in length"),
        }
    }
}

/// Result of [`validate_graph`]; empty when every invariant holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Checks symmetry, positive weights, coordinates and degree bookkeeping.
pub fn validate_graph(g: &GeoGraph) -> ValidationReport {
    let mut violations = Vec::new();
    let n = g.locations.len();
    if g.adjacency.len() != n || g.degrees.len() != n || g.external_ids.len() != n {
        violations.push(Violation::LengthMismatch);
        return ValidationReport { violations };
    }
    if g.external_ids.windows(2).any(|w| w[0] >= w[1]) {
        violations.push(Violation::ExternalIdsNotAscending);
    }
    let mut entry_sum = 0.0;
    for (i, nbrs) in g.adjacency.iter().enumerate() {
        if !g.locations[i].is_valid() {
            violations.push(Violation::InvalidCoordinate { node: i });
        }
        if nbrs.windows(2).any(|w| w[0].0 >= w[1].0) {
            violations.push(Violation::UnsortedNeighbors { node: i });
        }
        let mut actual = 0.0;
        for &(j, w) in nbrs {
            actual += w;
            if j >= n {
                violations.push(Violation::NeighborOutOfRange {
                    node: i,
                    neighbor: j,
                });
                continue;
            }
            if !(w.is_finite() && w > 0.0) {
                violations.push(Violation::NonPositiveWeight {
                    from: i,
                    to: j,
                    weight: w,
                });
            }
            let reverse = g.adjacency[j].iter().find(|&&(k, _)| k == i);
            if !matches!(reverse, Some(&(_, rw)) if rw == w) {
                violations.push(Violation::Asymmetric { from: i, to: j });
            }
        }
        entry_sum += actual;
        if !close(g.degrees[i], actual) {
            violations.push(Violation::DegreeMismatch {
                node: i,
                stored: g.degrees[i],
                actual,
            });
        }
    }
    let degree_sum: f64 = g.degrees.iter().sum();
    if !close(g.two_m, degree_sum) || !close(g.two_m, entry_sum) {
        violations.push(Violation::TotalWeightMismatch {
            stored: g.two_m,
            degree_sum,
            entry_sum,
        });
    }
    ValidationReport { violations }
}
