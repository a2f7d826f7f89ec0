//! Exhaustive search over all set partitions of a small graph.
//!
//! Partitions are enumerated as restricted growth strings: `a[0] = 0` and
//! `a[i] <= 1 + max(a[..i])`. Each set partition has exactly one such string,
//! and lexicographic order over the strings is the tie-breaking order.

use crate::error::{Error, Result};
use crate::graph::GeoGraph;
use crate::louvain::Objective;
use crate::partition::Partition;

/// Largest `n` the oracle accepts; B(12) = 4,213,597 partitions.
pub const MAX_ORACLE_NODES: usize = 12;

/// Lexicographic stream of restricted growth strings of length `n`.
#[derive(Debug, Clone)]
pub struct PartitionIterator {
    labels: Vec<usize>,
    // prefix_max[i] = max(labels[..i]), with prefix_max[0] unused
    prefix_max: Vec<usize>,
    started: bool,
    done: bool,
}

impl PartitionIterator {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ORACLE_NODES {
            return Err(Error::OracleRange {
                n,
                max: MAX_ORACLE_NODES,
            });
        }
        Ok(PartitionIterator {
            labels: vec![0; n],
            prefix_max: vec![0; n],
            started: false,
            done: false,
        })
    }

    /// Advances and returns the next string without allocating.
    pub fn next_labels(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.labels);
        }
        let n = self.labels.len();
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.labels[i] <= self.prefix_max[i] {
                self.labels[i] += 1;
                let max_here = self.prefix_max[i].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = max_here;
                }
                return Some(&self.labels);
            }
        }
        self.done = true;
        None
    }
}

impl Iterator for PartitionIterator {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        self.next_labels().map(Partition::from_labels)
    }
}

/// Every set partition of `0..n`, once each. `1 <= n <= 12`.
pub fn enumerate_partitions(n: usize) -> Result<PartitionIterator> {
    PartitionIterator::new(n)
}

/// An optimal partition and its value. Ties go to the first partition in
/// enumeration order.
pub fn oracle_best(g: &GeoGraph, objective: &Objective) -> Result<(Partition, f64)> {
    let mut iter = PartitionIterator::new(g.node_count())?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    while let Some(labels) = iter.next_labels() {
        let p = Partition::from_labels(labels);
        let value = objective.evaluate(g, &p)?;
        if best.as_ref().is_none_or(|&(_, b)| value > b) {
            best = Some((labels.to_vec(), value));
        }
    }
    let (labels, value) = best.expect("at least one partition");
    Ok((Partition::from_labels(&labels), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeoPoint;
    use crate::metrics::SnParams;
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    const BELL: [usize; 9] = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
    const ORIGIN: GeoPoint = GeoPoint { lat: 0.0, lon: 0.0 };

    #[test]
    fn counts_match_bell_numbers() {
        for (n, &bell) in BELL.iter().enumerate().skip(1) {
            assert_eq!(enumerate_partitions(n).unwrap().count(), bell, "n = {n}");
        }
    }

    #[test]
    fn partitions_are_distinct() {
        let all: HashSet<Partition> = enumerate_partitions(6).unwrap().collect();
        assert_eq!(all.len(), 203);
    }

    #[test]
    fn order_is_lexicographic() {
        let mut iter = enumerate_partitions(3).unwrap();
        let mut seen = Vec::new();
        while let Some(l) = iter.next_labels() {
            seen.push(l.to_vec());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
                vec![0, 1, 2]
            ]
        );
    }

    #[test]
    fn range_is_checked() {
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(13).is_err());
        assert_eq!(enumerate_partitions(1).unwrap().count(), 1);
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

    #[test]
    fn triangle_optimum_is_whole_graph() {
        let g =
            GeoGraph::from_edges(vec![ORIGIN; 3], [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let (p, value) = oracle_best(&g, &Objective::Ng).unwrap();
        assert_eq!(p, Partition::whole(3));
        assert_eq!(value, 0.0);
    }

    #[test]
    fn bridged_triangles_optimum() {
        let by_triangle = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let g = bridged(vec![ORIGIN; 6]);
        let (p, value) = oracle_best(&g, &Objective::Ng).unwrap();
        assert_eq!(p, by_triangle);
        assert_abs_diff_eq!(value, 5.0 / 14.0, epsilon = 1e-15);

        let b = GeoPoint {
            lat: 0.0,
            lon: 0.8993,
        };
        let g = bridged(vec![ORIGIN, ORIGIN, ORIGIN, b, b, b]);
        let sn = Objective::Sn(SnParams::new(1.0).unwrap());
        let (p, value) = oracle_best(&g, &sn).unwrap();
        assert_eq!(p, by_triangle);
        assert_abs_diff_eq!(value, 5.0 / 14.0, epsilon = 1e-15);
    }

    #[test]
    fn too_large_graph_errors() {
        let g = GeoGraph::from_edges(vec![ORIGIN; 13], []).unwrap();
        assert!(matches!(
            oracle_best(&g, &Objective::Ng),
            Err(Error::OracleRange { n: 13, .. })
        ));
    }
}
