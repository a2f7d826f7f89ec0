//! Two-phase Louvain optimization for NG- or SN-modularity.
//!
//! Each level runs local moves until no node can improve the objective, then
//! collapses every community into a meta-node. A meta-node keeps the
//! community's internal weight as a self-loop and sits at the community's
//! center, so at aggregated levels the SN dispersion is measured between
//! meta-node locations only. Scores reported to callers are always recomputed
//! on the original graph.
//!
//! Unlike plain Louvain, a node may also leave its community for a fresh
//! singleton: with SN-modularity, isolating a far-away node can raise the
//! score by shrinking a community's dispersion.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{GeoPoint, Metric};
use crate::graph::{GeoGraph, NodeId};
use crate::metrics::{self, community_numerator, SnParams};
use crate::partition::Partition;

/// The quantity a run maximizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Ng,
    Sn(SnParams),
}

impl Objective {
    /// Metric used for meta-node placement and join constraints.
    pub fn metric(&self) -> Metric {
        match self {
            Objective::Ng => Metric::Haversine,
            Objective::Sn(params) => params.metric,
        }
    }

    /// Objective value of `p` on `g`.
    pub fn evaluate(&self, g: &GeoGraph, p: &Partition) -> Result<f64> {
        match self {
            Objective::Ng => metrics::ng_modularity(g, p),
            Objective::Sn(params) => metrics::sn_modularity(g, p, params),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Objective::Ng => Ok(()),
            Objective::Sn(params) => params.validate(),
        }
    }
}

/// Order in which local moves visit nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeOrder {
    #[default]
    Ascending,
    /// A ChaCha8 permutation seeded from `seed` and the level number.
    Shuffled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// A node may join a community only if it lies within this distance of
    /// every member. `None` means unbounded.
    pub join_constraint_km: Option<f64>,
    /// Moves must improve the objective by more than this.
    pub min_gain: f64,
    pub node_order: NodeOrder,
    pub max_levels: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            join_constraint_km: None,
            min_gain: 1e-12,
            node_order: NodeOrder::Ascending,
            max_levels: 50,
        }
    }
}

impl EngineConfig {
    fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if self.min_gain.is_nan() || self.min_gain < 0.0 {
            return Err(Error::Config(format!("min_gain {} < 0", self.min_gain)));
        }
        if self.max_levels == 0 {
            return Err(Error::Config("max_levels must be positive".into()));
        }
        if let Some(c) = self.join_constraint_km {
            if c.is_nan() || c < 0.0 {
                return Err(Error::Config(format!("join constraint {c} < 0")));
            }
        }
        Ok(())
    }
}

/// A coarsened graph plus the original nodes behind each meta-node.
#[derive(Debug, Clone)]
pub struct MetaGraph {
    pub graph: GeoGraph,
    pub provenance: Vec<Vec<NodeId>>,
}

impl MetaGraph {
    /// The trivial coarsening of `g`: one meta-node per node.
    pub fn identity(g: &GeoGraph) -> Self {
        MetaGraph {
            graph: g.clone(),
            provenance: (0..g.node_count()).map(|v| vec![v]).collect(),
        }
    }

    /// Collapses the communities of `p` (a partition of this graph's nodes),
    /// composing provenance so it still refers to the original nodes.
    pub fn aggregate(&self, p: &Partition, metric: Metric) -> Result<MetaGraph> {
        let graph = aggregate_graph(&self.graph, p, metric)?.graph;
        let provenance = p
            .communities()
            .iter()
            .map(|members| {
                let mut nodes: Vec<NodeId> = members
                    .iter()
                    .flat_map(|&m| self.provenance[m].iter().copied())
                    .collect();
                nodes.sort_unstable();
                nodes
            })
            .collect();
        Ok(MetaGraph { graph, provenance })
    }
}

/// Builds the graph whose nodes are the communities of `p`.
///
/// Edge weight between two meta-nodes is the total weight between their
/// communities; each meta-node's self-loop is its community's internal weight
/// over ordered pairs. Meta-node locations are the community centers.
pub fn aggregate_graph(g: &GeoGraph, p: &Partition, metric: Metric) -> Result<MetaGraph> {
    metrics::check_partition(g, p)?;
    let k = p.num_communities();
    let mut adjacency: Vec<Vec<(NodeId, f64)>> = Vec::with_capacity(k);
    let mut scratch = vec![0.0f64; k];
    let mut touched: Vec<usize> = Vec::new();
    let mut locations = Vec::with_capacity(k);
    for members in p.communities() {
        for &i in members {
            for &(j, w) in g.neighbors(i) {
                let cj = p.community_of(j);
                if scratch[cj] == 0.0 {
                    touched.push(cj);
                }
                scratch[cj] += w;
            }
        }
        touched.sort_unstable();
        adjacency.push(touched.iter().map(|&c| (c, scratch[c])).collect());
        for &c in &touched {
            scratch[c] = 0.0;
        }
        touched.clear();
        locations.push(metric.centroid(members.iter().map(|&i| g.location(i)))?);
    }
    Ok(MetaGraph {
        graph: GeoGraph::from_adjacency((0..k as u64).collect(), locations, adjacency),
        provenance: p.communities().to_vec(),
    })
}

/// Mutable state of one level's local-move phase.
///
/// Every community keeps its member list (ascending), internal weight over
/// ordered pairs, degree sum, and cached objective value. Empty labels are
/// recycled smallest first when a node is isolated.
pub struct LocalMoves<'g> {
    graph: &'g GeoGraph,
    objective: Objective,
    community: Vec<usize>,
    members: Vec<Vec<NodeId>>,
    sum_in: Vec<f64>,
    sum_deg: Vec<f64>,
    quality: Vec<f64>,
    free: BTreeSet<usize>,
    // per-call scratch
    link: Vec<f64>,
    touched: Vec<usize>,
    buffer: Vec<GeoPoint>,
}

impl<'g> LocalMoves<'g> {
    /// Singleton partition over `graph`.
    pub fn new(graph: &'g GeoGraph, objective: Objective) -> Self {
        let n = graph.node_count();
        let mut state = LocalMoves {
            graph,
            objective,
            community: (0..n).collect(),
            members: (0..n).map(|v| vec![v]).collect(),
            sum_in: (0..n).map(|v| graph.self_loop(v)).collect(),
            sum_deg: graph.degrees().to_vec(),
            quality: vec![0.0; n],
            free: BTreeSet::new(),
            link: vec![0.0; n],
            touched: Vec::new(),
            buffer: Vec::new(),
        };
        for c in 0..n {
            state.quality[c] = state.community_value(c, None);
        }
        state
    }

    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.community)
    }

    /// Sum of the cached community values; the objective on this level's graph.
    pub fn objective_value(&self) -> f64 {
        self.quality.iter().sum()
    }

    pub fn community_of(&self, i: NodeId) -> usize {
        self.community[i]
    }

    fn two_m(&self) -> f64 {
        self.graph.two_m()
    }

    fn value_of(&self, sum_in: f64, sum_deg: f64, dispersion: f64) -> f64 {
        let two_m = self.two_m();
        if two_m == 0.0 {
            return 0.0;
        }
        let numerator = community_numerator(sum_in, sum_deg, two_m);
        match self.objective {
            Objective::Ng => numerator / two_m,
            Objective::Sn(_) => numerator / (1.0 + dispersion) / two_m,
        }
    }

    /// Dispersion of the member list of `c`, optionally with one node added
    /// (`Some((i, true))`) or removed (`Some((i, false))`).
    fn dispersion(&mut self, c: usize, change: Option<(NodeId, bool)>) -> f64 {
        let Objective::Sn(params) = self.objective else {
            return 0.0;
        };
        let g = self.graph;
        self.buffer.clear();
        match change {
            None => self
                .buffer
                .extend(self.members[c].iter().map(|&v| g.location(v))),
            Some((i, true)) => {
                let pos = self.members[c].partition_point(|&v| v < i);
                let (lo, hi) = self.members[c].split_at(pos);
                self.buffer.extend(lo.iter().map(|&v| g.location(v)));
                self.buffer.push(g.location(i));
                self.buffer.extend(hi.iter().map(|&v| g.location(v)));
            }
            Some((i, false)) => self.buffer.extend(
                self.members[c]
                    .iter()
                    .filter(|&&v| v != i)
                    .map(|&v| g.location(v)),
            ),
        }
        if self.buffer.is_empty() {
            return 0.0;
        }
        params
            .center_and_dispersion(self.buffer.iter().copied())
            .map(|(_, d)| d)
            .expect("nonempty point set")
    }

    fn community_value(&mut self, c: usize, change: Option<(NodeId, bool)>) -> f64 {
        if self.members[c].is_empty() {
            return 0.0;
        }
        let d = self.dispersion(c, change);
        self.value_of(self.sum_in[c], self.sum_deg[c], d)
    }

    /// Weight from `i` to each neighboring community, excluding its self-loop.
    /// Fills `link`/`touched`; the caller must call `clear_links`.
    fn collect_links(&mut self, i: NodeId) {
        for &(j, w) in self.graph.neighbors(i) {
            if j == i {
                continue;
            }
            let c = self.community[j];
            if self.link[c] == 0.0 {
                self.touched.push(c);
            }
            self.link[c] += w;
        }
        self.touched.sort_unstable();
    }

    fn clear_links(&mut self) {
        for &c in &self.touched {
            self.link[c] = 0.0;
        }
        self.touched.clear();
    }

    /// `Q(A \ {i}) - Q(A)` for the current community `A` of `i`.
    fn removal_delta(&mut self, i: NodeId, link_to_own: f64) -> f64 {
        let a = self.community[i];
        if self.members[a].len() == 1 {
            return -self.quality[a];
        }
        let sum_in = self.sum_in[a] - 2.0 * link_to_own - self.graph.self_loop(i);
        let sum_deg = self.sum_deg[a] - self.graph.degree(i);
        let d = self.dispersion(a, Some((i, false)));
        self.value_of(sum_in, sum_deg, d) - self.quality[a]
    }

    /// `Q(B ∪ {i}) - Q(B)` for a community `B` not containing `i`, or for a
    /// fresh singleton when `target` is empty.
    fn insertion_delta(&mut self, i: NodeId, target: usize, link_to_target: f64) -> f64 {
        let sum_in = self.sum_in_after_insert(i, target, link_to_target);
        let sum_deg = self.sum_deg_of(target) + self.graph.degree(i);
        let d = if self.members_of(target).is_empty() {
            0.0
        } else {
            self.dispersion(target, Some((i, true)))
        };
        self.value_of(sum_in, sum_deg, d) - self.quality_of(target)
    }

    fn members_of(&self, c: usize) -> &[NodeId] {
        self.members.get(c).map(Vec::as_slice).unwrap_or(&[])
    }

    fn sum_deg_of(&self, c: usize) -> f64 {
        self.sum_deg.get(c).copied().unwrap_or(0.0)
    }

    fn quality_of(&self, c: usize) -> f64 {
        self.quality.get(c).copied().unwrap_or(0.0)
    }

    fn sum_in_after_insert(&self, i: NodeId, target: usize, link: f64) -> f64 {
        self.sum_in.get(target).copied().unwrap_or(0.0) + 2.0 * link + self.graph.self_loop(i)
    }

    /// Whether `i` lies within the join constraint of every member of `c`.
    fn within_constraint(&self, i: NodeId, c: usize, limit: Option<f64>) -> bool {
        let Some(limit) = limit else {
            return true;
        };
        let metric = self.objective.metric();
        let here = self.graph.location(i);
        self.members[c]
            .iter()
            .all(|&v| metric.distance(here, self.graph.location(v)) <= limit)
    }

    /// Label a fresh singleton would get: the smallest empty label.
    fn fresh_label(&self) -> usize {
        self.free.first().copied().unwrap_or(self.members.len())
    }

    /// Objective change from moving `i` out of its community into `target`,
    /// which may be an empty label (isolation). Zero when `target` is the
    /// current community.
    pub fn move_gain(&mut self, i: NodeId, target: usize) -> f64 {
        let a = self.community[i];
        if target == a {
            return 0.0;
        }
        self.collect_links(i);
        let own = self.link[a];
        let to_target = self.link.get(target).copied().unwrap_or(0.0);
        self.clear_links();
        self.removal_delta(i, own) + self.insertion_delta(i, target, to_target)
    }

    /// Best move for `i`: `(target, gain)`, or `None` if staying is best.
    fn best_move(&mut self, i: NodeId, min_gain: f64, limit: Option<f64>) -> Option<(usize, f64)> {
        let a = self.community[i];
        self.collect_links(i);
        let own = self.link[a];
        let removal = self.removal_delta(i, own);

        let mut best: Option<(usize, f64)> = None;
        let candidates: Vec<(usize, f64)> = self
            .touched
            .iter()
            .filter(|&&c| c != a)
            .map(|&c| (c, self.link[c]))
            .collect();
        self.clear_links();

        let consider = |target: usize, gain: f64, best: &mut Option<(usize, f64)>| {
            if gain <= min_gain {
                return;
            }
            match *best {
                Some((label, g)) if g > gain || (g == gain && label < target) => {}
                _ => *best = Some((target, gain)),
            }
        };

        for (c, link) in candidates {
            if !self.within_constraint(i, c, limit) {
                continue;
            }
            let gain = removal + self.insertion_delta(i, c, link);
            consider(c, gain, &mut best);
        }
        if self.members[a].len() > 1 {
            let fresh = self.fresh_label();
            let gain = removal + self.insertion_delta(i, fresh, 0.0);
            consider(fresh, gain, &mut best);
        }
        best
    }

    fn apply_move(&mut self, i: NodeId, target: usize) {
        let a = self.community[i];
        self.collect_links(i);
        let own = self.link[a];
        let to_target = self.link.get(target).copied().unwrap_or(0.0);
        self.clear_links();

        let self_loop = self.graph.self_loop(i);
        let k_i = self.graph.degree(i);
        self.sum_in[a] -= 2.0 * own + self_loop;
        self.sum_deg[a] -= k_i;
        let pos = self.members[a]
            .binary_search(&i)
            .expect("member of own community");
        self.members[a].remove(pos);
        if self.members[a].is_empty() {
            self.sum_in[a] = 0.0;
            self.sum_deg[a] = 0.0;
            self.free.insert(a);
        }

        if target == self.members.len() {
            self.members.push(Vec::new());
            self.sum_in.push(0.0);
            self.sum_deg.push(0.0);
            self.quality.push(0.0);
            self.link.push(0.0);
        }
        self.free.remove(&target);
        self.sum_in[target] += 2.0 * to_target + self_loop;
        self.sum_deg[target] += k_i;
        let pos = self.members[target].partition_point(|&v| v < i);
        self.members[target].insert(pos, i);
        self.community[i] = target;

        self.quality[a] = self.community_value(a, None);
        self.quality[target] = self.community_value(target, None);
    }

    /// Sweeps the nodes in `order` until a full sweep moves nothing.
    /// Returns the number of moves made.
    pub fn run(&mut self, order: &[NodeId], cfg: &EngineConfig) -> usize {
        let mut moved = 0;
        loop {
            let mut moved_this_sweep = 0;
            for &i in order {
                if let Some((target, _)) = self.best_move(i, cfg.min_gain, cfg.join_constraint_km) {
                    self.apply_move(i, target);
                    moved_this_sweep += 1;
                }
            }
            moved += moved_this_sweep;
            if moved_this_sweep == 0 {
                return moved;
            }
        }
    }
}

/// One local-move phase from the singleton partition of `g`.
/// Returns the number of moves and the resulting partition.
pub fn local_move_pass(
    g: &GeoGraph,
    objective: Objective,
    cfg: &EngineConfig,
    level: usize,
) -> (usize, Partition) {
    let mut state = LocalMoves::new(g, objective);
    let moved = state.run(&visit_order(g.node_count(), cfg.node_order, level), cfg);
    (moved, state.partition())
}

fn visit_order(n: usize, order: NodeOrder, level: usize) -> Vec<NodeId> {
    let mut nodes: Vec<NodeId> = (0..n).collect();
    if let NodeOrder::Shuffled(seed) = order {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(level as u64));
        nodes.shuffle(&mut rng);
    }
    nodes
}

/// Result of [`run_louvain`].
#[derive(Debug, Clone)]
pub struct LouvainOutcome {
    /// Partition of the original nodes.
    pub partition: Partition,
    /// Objective value on the original graph.
    pub score: f64,
    /// Number of levels that made at least one move.
    pub levels: usize,
    /// Working objective at the end of each level, on that level's graph.
    pub level_scores: Vec<f64>,
}

/// Runs Louvain from the singleton partition until a level makes no move or
/// `max_levels` is reached.
pub fn run_louvain(
    g: &GeoGraph,
    objective: Objective,
    cfg: &EngineConfig,
) -> Result<LouvainOutcome> {
    objective.validate()?;
    cfg.validate()?;
    let metric = objective.metric();
    let mut meta = MetaGraph::identity(g);
    // original node -> meta-node at the current level
    let mut assignment: Vec<usize> = (0..g.node_count()).collect();
    let mut levels = 0;
    let mut level_scores = Vec::new();

    for level in 0..cfg.max_levels {
        let mut state = LocalMoves::new(&meta.graph, objective);
        let order = visit_order(meta.graph.node_count(), cfg.node_order, level);
        let moved = state.run(&order, cfg);
        if moved == 0 {
            break;
        }
        levels += 1;
        level_scores.push(state.objective_value());
        let p = state.partition();
        for a in assignment.iter_mut() {
            *a = p.community_of(*a);
        }
        meta = meta.aggregate(&p, metric)?;
    }

    let partition = Partition::from_labels(&assignment);
    let score = objective.evaluate(g, &partition)?;
    Ok(LouvainOutcome {
        partition,
        score,
        levels,
        level_scores,
    })
}
