//! Planted geographic cluster graphs.
//!
//! Cluster centers sit on a grid whose neighboring centers are exactly
//! `spacing_km` apart along the great circle, starting at `origin`. Members of
//! a cluster are scattered around its center with an isotropic Gaussian of
//! standard deviation `spread_km` (zero means co-located). Pairs inside a
//! cluster are joined with probability `p_in`, pairs across clusters with
//! `p_out`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeoPoint, EARTH_RADIUS_KM};
use crate::graph::GeoGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub clusters: usize,
    pub nodes_per_cluster: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub spacing_km: f64,
    pub spread_km: f64,
    pub origin: GeoPoint,
    pub seed: u64,
}

impl Default for PlantedSpec {
    /// Ten clusters of 100 nodes, 500 km apart, with roughly two edges per
    /// node: about the size and density of a 1000-node Brightkite sample.
    fn default() -> Self {
        PlantedSpec {
            clusters: 10,
            nodes_per_cluster: 100,
            p_in: 0.035,
            p_out: 0.0004,
            spacing_km: 500.0,
            spread_km: 100.0,
            origin: GeoPoint {
                lat: 30.0,
                lon: -100.0,
            },
            seed: 0,
        }
    }
}

impl PlantedSpec {
    /// The same layout with enough clusters for at least `n` nodes, keeping
    /// the cluster size.
    pub fn with_nodes(mut self, n: usize) -> Self {
        self.clusters = n.div_ceil(self.nodes_per_cluster).max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.clusters == 0 || self.nodes_per_cluster == 0 {
            return Err(Error::Config("empty synthetic graph".into()));
        }
        if !prob(self.p_in) || !prob(self.p_out) {
            return Err(Error::Config(
                "edge probabilities must lie in [0, 1]".into(),
            ));
        }
        let negative = |d: f64| d.is_nan() || d < 0.0;
        if negative(self.spacing_km) || negative(self.spread_km) {
            return Err(Error::Config("distances must be non-negative".into()));
        }
        Ok(())
    }
}

/// A generated graph with its planted cluster of every node.
#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: GeoGraph,
    pub clusters: Vec<usize>,
    pub centers: Vec<GeoPoint>,
}

/// Moves `from` by `north_km` along its meridian and `east_km` along the
/// resulting parallel's great circle.
fn offset(from: GeoPoint, north_km: f64, east_km: f64) -> GeoPoint {
    let lat = (from.lat + (north_km / EARTH_RADIUS_KM).to_degrees()).clamp(-89.0, 89.0);
    // same-latitude points dlon apart are 2R·asin(cos(lat)·sin(dlon/2)) apart
    let half = (east_km.abs() / (2.0 * EARTH_RADIUS_KM)).sin() / lat.to_radians().cos();
    let dlon = 2.0 * half.clamp(-1.0, 1.0).asin().to_degrees() * east_km.signum();
    let mut lon = from.lon + dlon;
    if lon > 180.0 {
        lon -= 360.0;
    } else if lon <= -180.0 {
        lon += 360.0;
    }
    GeoPoint { lat, lon }
}

fn grid_centers(spec: &PlantedSpec) -> Vec<GeoPoint> {
    let cols = (spec.clusters as f64).sqrt().ceil() as usize;
    (0..spec.clusters)
        .map(|c| {
            let (row, col) = (c / cols, c % cols);
            let row_start = offset(spec.origin, row as f64 * spec.spacing_km, 0.0);
            // march east one spacing at a time so neighbors are exactly spacing apart
            (0..col).fold(row_start, |p, _| offset(p, 0.0, spec.spacing_km))
        })
        .collect()
}

pub fn planted_geo_graph(spec: &PlantedSpec) -> Result<PlantedGraph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = grid_centers(spec);
    let n = spec.clusters * spec.nodes_per_cluster;
    let clusters: Vec<usize> = (0..n).map(|v| v / spec.nodes_per_cluster).collect();

    let locations: Vec<GeoPoint> = if spec.spread_km == 0.0 {
        clusters.iter().map(|&c| centers[c]).collect()
    } else {
        let normal = Normal::new(0.0, spec.spread_km).expect("finite spread");
        clusters
            .iter()
            .map(|&c| {
                let (north, east) = (normal.sample(&mut rng), normal.sample(&mut rng));
                offset(centers[c], north, east)
            })
            .collect()
    };

    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if clusters[u] == clusters[v] {
                spec.p_in
            } else {
                spec.p_out
            };
            if rng.gen_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    Ok(PlantedGraph {
        graph: GeoGraph::from_edges(locations, edges)?,
        clusters,
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::haversine_km;
    use crate::graph::validate_graph;

    #[test]
    fn centers_respect_spacing() {
        let spec = PlantedSpec::default();
        let centers = grid_centers(&spec);
        assert_eq!(centers.len(), 10);
        for (i, a) in centers.iter().enumerate() {
            for b in &centers[i + 1..] {
                assert!(haversine_km(*a, *b) >= spec.spacing_km - 1e-6);
            }
        }
        assert!((haversine_km(centers[0], centers[1]) - 500.0).abs() < 1e-6);
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let spec = PlantedSpec {
            clusters: 3,
            nodes_per_cluster: 20,
            p_in: 0.3,
            ..Default::default()
        };
        let a = planted_geo_graph(&spec).unwrap();
        let b = planted_geo_graph(&spec).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.graph.node_count(), 60);
        assert!(validate_graph(&a.graph).is_ok());
        let intra = a
            .graph
            .edges()
            .filter(|&(u, v, _)| a.clusters[u] == a.clusters[v])
            .count();
        assert!(intra > a.graph.edge_count() / 2);
    }

    #[test]
    fn zero_spread_co_locates_clusters() {
        let spec = PlantedSpec {
            clusters: 2,
            nodes_per_cluster: 5,
            spread_km: 0.0,
            ..Default::default()
        };
        let g = planted_geo_graph(&spec).unwrap();
        assert!((0..5).all(|v| g.graph.location(v) == g.centers[0]));
        assert!((5..10).all(|v| g.graph.location(v) == g.centers[1]));
    }

    #[test]
    fn with_nodes_scales_cluster_count() {
        assert_eq!(PlantedSpec::default().with_nodes(250).clusters, 3);
        assert_eq!(PlantedSpec::default().with_nodes(2000).clusters, 20);
    }
}
