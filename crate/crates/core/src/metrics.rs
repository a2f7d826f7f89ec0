//! Newman-Girvan and spatially-near modularity.
//!
//! For a community `c` with internal weight `sum_in` (ordered pairs), degree
//! sum `sum_deg` and total weight `2m`, the NG contribution is
//!
//! ```text
//! (sum_in - sum_deg² / 2m) / 2m
//! ```
//!
//! The SN contribution divides that by `1 + dispersion`, where dispersion
//! aggregates `(d(i, x_c) / σ)²` over members with `max` or `sum`, and `x_c` is
//! the community center under the chosen [`Metric`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeoPoint, Metric};
use crate::graph::{GeoGraph, NodeId};
use crate::partition::Partition;

/// Aggregation of the members' squared normalized center distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Sum,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "sum" => Ok(Aggregation::Sum),
            other => Err(Error::Config(format!("unknown aggregation '{other}'"))),
        }
    }
}

/// Parameters of SN-modularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnParams {
    /// Distance scale, in the metric's units (km for haversine).
    pub sigma: f64,
    pub agg: Aggregation,
    pub metric: Metric,
}

impl SnParams {
    pub fn new(sigma: f64) -> Result<Self> {
        let params = SnParams {
            sigma,
            agg: Aggregation::Max,
            metric: Metric::Haversine,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_agg(mut self, agg: Aggregation) -> Self {
        self.agg = agg;
        self
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_finite() && self.sigma > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSigma(self.sigma))
        }
    }

    /// Center and dispersion of a nonempty point set.
    pub fn center_and_dispersion<I>(&self, points: I) -> Result<(GeoPoint, f64)>
    where
        I: IntoIterator<Item = GeoPoint>,
        I::IntoIter: Clone,
    {
        let points = points.into_iter();
        let center = self.metric.centroid(points.clone())?;
        let dispersion = self.dispersion_around(center, points);
        Ok((center, dispersion))
    }

    pub(crate) fn dispersion_around<I>(&self, center: GeoPoint, points: I) -> f64
    where
        I: IntoIterator<Item = GeoPoint>,
    {
        let scaled = points.into_iter().map(|p| {
            let r = self.metric.distance(p, center) / self.sigma;
            r * r
        });
        match self.agg {
            Aggregation::Max => scaled.fold(0.0, f64::max),
            Aggregation::Sum => scaled.sum(),
        }
    }
}

/// Cached numerator and denominator pieces of one community.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommunityStats {
    /// Internal weight over ordered pairs.
    pub sum_in: f64,
    /// Sum of member degrees.
    pub sum_deg: f64,
    pub centroid: GeoPoint,
    pub dispersion: f64,
}

impl CommunityStats {
    /// `sum_in - sum_deg² / 2m`, the community's modularity numerator times `2m`.
    pub fn numerator(&self, two_m: f64) -> f64 {
        community_numerator(self.sum_in, self.sum_deg, two_m)
    }

    pub fn ng_value(&self, two_m: f64) -> f64 {
        if two_m == 0.0 {
            return 0.0;
        }
        self.numerator(two_m) / two_m
    }

    pub fn sn_value(&self, two_m: f64) -> f64 {
        if two_m == 0.0 {
            return 0.0;
        }
        self.numerator(two_m) / (1.0 + self.dispersion) / two_m
    }
}

#[inline]
pub(crate) fn community_numerator(sum_in: f64, sum_deg: f64, two_m: f64) -> f64 {
    if two_m == 0.0 {
        0.0
    } else {
        sum_in - sum_deg * sum_deg / two_m
    }
}

/// Internal weight (ordered pairs) and degree sum of a member set.
/// `in_community` must be true exactly for the members.
fn weight_sums(
    g: &GeoGraph,
    members: &[NodeId],
    in_community: impl Fn(NodeId) -> bool,
) -> (f64, f64) {
    let mut sum_in = 0.0;
    let mut sum_deg = 0.0;
    for &i in members {
        sum_deg += g.degree(i);
        for &(j, w) in g.neighbors(i) {
            if in_community(j) {
                sum_in += w;
            }
        }
    }
    (sum_in, sum_deg)
}

fn check_members(g: &GeoGraph, members: &[NodeId]) -> Result<()> {
    if members.is_empty() {
        return Err(Error::EmptyCommunity);
    }
    for &v in members {
        if v >= g.node_count() {
            return Err(Error::NodeOutOfRange {
                index: v,
                len: g.node_count(),
            });
        }
    }
    Ok(())
}

/// Stats for an arbitrary member set.
pub fn community_stats(
    g: &GeoGraph,
    members: &[NodeId],
    params: &SnParams,
) -> Result<CommunityStats> {
    check_members(g, members)?;
    params.validate()?;
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let (sum_in, sum_deg) = weight_sums(g, &sorted, |j| sorted.binary_search(&j).is_ok());
    let (centroid, dispersion) =
        params.center_and_dispersion(sorted.iter().map(|&i| g.location(i)))?;
    Ok(CommunityStats {
        sum_in,
        sum_deg,
        centroid,
        dispersion,
    })
}

/// Stats for every community of `p`, in label order.
pub fn partition_stats(
    g: &GeoGraph,
    p: &Partition,
    params: &SnParams,
) -> Result<Vec<CommunityStats>> {
    check_partition(g, p)?;
    params.validate()?;
    p.communities()
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let (sum_in, sum_deg) = weight_sums(g, members, |j| p.community_of(j) == c);
            let (centroid, dispersion) =
                params.center_and_dispersion(members.iter().map(|&i| g.location(i)))?;
            Ok(CommunityStats {
                sum_in,
                sum_deg,
                centroid,
                dispersion,
            })
        })
        .collect()
}

pub(crate) fn check_partition(g: &GeoGraph, p: &Partition) -> Result<()> {
    if p.len() != g.node_count() {
        return Err(Error::PartitionMismatch {
            partition: p.len(),
            graph: g.node_count(),
        });
    }
    Ok(())
}

/// Newman-Girvan modularity. Zero for a graph without edges.
pub fn ng_modularity(g: &GeoGraph, p: &Partition) -> Result<f64> {
    check_partition(g, p)?;
    let two_m = g.two_m();
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (c, members) in p.communities().iter().enumerate() {
        let (sum_in, sum_deg) = weight_sums(g, members, |j| p.community_of(j) == c);
        total += community_numerator(sum_in, sum_deg, two_m) / two_m;
    }
    Ok(total)
}

/// Spatially-near modularity: each community's NG term divided by `1 + dispersion`.
pub fn sn_modularity(g: &GeoGraph, p: &Partition, params: &SnParams) -> Result<f64> {
    Ok(partition_stats(g, p, params)?
        .iter()
        .map(|s| s.sn_value(g.two_m()))
        .sum())
}

/// The SN term of a single community; summing over a partition gives
/// [`sn_modularity`].
pub fn community_quality(g: &GeoGraph, members: &[NodeId], params: &SnParams) -> Result<f64> {
    Ok(community_stats(g, members, params)?.sn_value(g.two_m()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeoPoint;
    use approx::assert_abs_diff_eq;

    const ORIGIN: GeoPoint = GeoPoint { lat: 0.0, lon: 0.0 };

    fn triangle() -> GeoGraph {
        GeoGraph::from_edges(vec![ORIGIN; 3], [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn bridged(locations: Vec<GeoPoint>) -> GeoGraph {
        GeoGraph::from_edges(
            locations,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap()
    }

    fn by_triangle() -> Partition {
        Partition::from_labels(&[0, 0, 0, 1, 1, 1])
    }

    #[test]
    fn ng_examples() {
        let g = triangle();
        assert_eq!(ng_modularity(&g, &Partition::whole(3)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            ng_modularity(&g, &Partition::singletons(3)).unwrap(),
            -1.0 / 3.0,
            epsilon = 1e-15
        );
        let g = bridged(vec![ORIGIN; 6]);
        assert_abs_diff_eq!(
            ng_modularity(&g, &by_triangle()).unwrap(),
            5.0 / 14.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn sn_examples() {
        let params = SnParams::new(1.0).unwrap();
        let g = bridged(vec![ORIGIN; 6]);
        for p in [Partition::singletons(6), by_triangle(), Partition::whole(6)] {
            assert_eq!(
                sn_modularity(&g, &p, &params).unwrap(),
                ng_modularity(&g, &p).unwrap()
            );
        }

        // triangle B co-located about 100 km east of triangle A
        let b = GeoPoint {
            lat: 0.0,
            lon: 0.8993,
        };
        let g = bridged(vec![ORIGIN, ORIGIN, ORIGIN, b, b, b]);
        assert_abs_diff_eq!(
            sn_modularity(&g, &by_triangle(), &params).unwrap(),
            5.0 / 14.0,
            epsilon = 1e-15
        );

        // community A on a planar layout with max distance to its center = σ
        let locs = vec![
            GeoPoint {
                lat: 0.0,
                lon: -1.0,
            },
            GeoPoint { lat: 0.0, lon: 1.0 },
            GeoPoint { lat: 0.0, lon: 0.0 },
            GeoPoint {
                lat: 50.0,
                lon: 50.0,
            },
            GeoPoint {
                lat: 50.0,
                lon: 50.0,
            },
            GeoPoint {
                lat: 50.0,
                lon: 50.0,
            },
        ];
        let g = bridged(locs);
        let planar = params.with_metric(Metric::Planar);
        assert_abs_diff_eq!(
            sn_modularity(&g, &by_triangle(), &planar).unwrap(),
            (2.5 / 2.0 + 2.5) / 14.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            sn_modularity(&g, &by_triangle(), &planar).unwrap(),
            0.267857,
            epsilon = 1e-6
        );
    }

    #[test]
    fn community_quality_examples() {
        let params = SnParams::new(5.0).unwrap();
        let g = bridged(vec![ORIGIN; 6]);
        let k2 = g.degree(2);
        assert_abs_diff_eq!(
            community_quality(&g, &[2], &params).unwrap(),
            -k2 * k2 / (14.0 * 14.0),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            community_quality(&g, &[0, 1, 2], &params).unwrap(),
            2.5 / 14.0,
            epsilon = 1e-15
        );
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(
            community_quality(&g, &all, &params).unwrap(),
            sn_modularity(&g, &Partition::whole(6), &params).unwrap()
        );
        assert!(matches!(
            community_quality(&g, &[], &params),
            Err(Error::EmptyCommunity)
        ));
    }

    #[test]
    fn sum_aggregation_adds_every_member() {
        let locs = vec![
            GeoPoint {
                lat: 0.0,
                lon: -1.0,
            },
            GeoPoint { lat: 0.0, lon: 1.0 },
            GeoPoint { lat: 0.0, lon: 0.0 },
        ];
        let g = GeoGraph::from_edges(locs, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let params = SnParams::new(1.0)
            .unwrap()
            .with_metric(Metric::Planar)
            .with_agg(Aggregation::Sum);
        let stats = community_stats(&g, &[0, 1, 2], &params).unwrap();
        assert_eq!(stats.dispersion, 2.0);
        assert_eq!(stats.sum_in, 6.0);
        assert_eq!(stats.sum_deg, 6.0);
    }

    #[test]
    fn mismatched_partition_errors() {
        let g = triangle();
        assert!(matches!(
            ng_modularity(&g, &Partition::singletons(4)),
            Err(Error::PartitionMismatch { .. })
        ));
        assert!(SnParams::new(0.0).is_err());
        assert!(SnParams::new(f64::INFINITY).is_err());
    }

    #[test]
    fn no_edges_scores_zero() {
        let g = GeoGraph::from_edges(vec![ORIGIN; 3], []).unwrap();
        assert_eq!(ng_modularity(&g, &Partition::singletons(3)).unwrap(), 0.0);
    }
}
