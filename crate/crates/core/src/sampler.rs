//! Snowball sampling of node-induced subgraphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GeoGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    pub target_size: usize,
    pub seed: u64,
}

/// Nodes chosen by snowball sampling, ascending.
///
/// Repeatedly picks a not-yet-included node uniformly at random (ChaCha8,
/// seeded), adds it, then adds its neighbors in ascending order. The last
/// neighborhood is cut off as soon as `target_size` nodes are included.
pub fn snowball_nodes(g: &GeoGraph, spec: SampleSpec) -> Vec<NodeId> {
    let n = g.node_count();
    let target = spec.target_size.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut included = vec![false; n];
    let mut count = 0;
    // candidates not yet included, with each node's position for O(1) removal
    let mut pool: Vec<NodeId> = (0..n).collect();
    let mut position: Vec<usize> = (0..n).collect();

    let mut include = |v: NodeId, included: &mut Vec<bool>, pool: &mut Vec<NodeId>| {
        included[v] = true;
        let pos = position[v];
        let last = *pool.last().expect("pool holds v");
        pool.swap_remove(pos);
        if last != v {
            position[last] = pos;
        }
    };

    while count < target {
        let seed = pool[rng.gen_range(0..pool.len())];
        include(seed, &mut included, &mut pool);
        count += 1;
        for &(u, _) in g.neighbors(seed) {
            if count == target {
                break;
            }
            if !included[u] {
                include(u, &mut included, &mut pool);
                count += 1;
            }
        }
    }
    (0..n).filter(|&v| included[v]).collect()
}

/// Node-induced subgraph grown by snowball sampling. Returns `g` itself when
/// it has no more than `target_size` nodes.
pub fn snowball_sample(g: &GeoGraph, spec: SampleSpec) -> GeoGraph {
    if spec.target_size >= g.node_count() {
        return g.clone();
    }
    g.induced_subgraph(&snowball_nodes(g, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeoPoint;
    use crate::graph::validate_graph;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest, Strategy};

    const ORIGIN: GeoPoint = GeoPoint { lat: 0.0, lon: 0.0 };

    fn star(leaves: usize) -> GeoGraph {
        GeoGraph::from_edges(vec![ORIGIN; leaves + 1], (1..=leaves).map(|v| (0, v, 1.0))).unwrap()
    }

    #[test]
    fn whole_graph_when_target_is_large() {
        let g = star(5);
        assert_eq!(
            snowball_sample(
                &g,
                SampleSpec {
                    target_size: 6,
                    seed: 1
                }
            ),
            g
        );
        assert_eq!(
            snowball_sample(
                &g,
                SampleSpec {
                    target_size: 60,
                    seed: 1
                }
            ),
            g
        );
    }

    #[test]
    fn center_pick_takes_every_leaf() {
        let g = star(5);
        // find a seed whose first pick is the center
        let seed = (0..1000u64)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                Rng::gen_range(&mut rng, 0..6usize) == 0
            })
            .unwrap();
        let nodes = snowball_nodes(
            &g,
            SampleSpec {
                target_size: 6,
                seed,
            },
        );
        assert_eq!(nodes, vec![0, 1, 2, 3, 4, 5]);
        // with a cap, the neighborhood is cut in ascending order
        let nodes = snowball_nodes(
            &g,
            SampleSpec {
                target_size: 3,
                seed,
            },
        );
        assert_eq!(nodes, vec![0, 1, 2]);
    }

    #[test]
    fn same_seed_same_sample() {
        let g = star(20);
        let spec = SampleSpec {
            target_size: 7,
            seed: 99,
        };
        assert_eq!(snowball_sample(&g, spec), snowball_sample(&g, spec));
    }

    fn random_graph() -> impl Strategy<Value = GeoGraph> {
        (2usize..40).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
                GeoGraph::from_edges(
                    vec![ORIGIN; n],
                    pairs
                        .into_iter()
                        .filter(|(u, v)| u != v)
                        .map(|(u, v)| (u, v, 1.0)),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn sample_is_induced_subgraph(g in random_graph(), target in 1usize..50, seed in any::<u64>()) {
            let spec = SampleSpec { target_size: target, seed };
            let nodes = snowball_nodes(&g, spec);
            let sub = snowball_sample(&g, spec);
            prop_assert_eq!(sub.node_count(), target.min(g.node_count()));
            prop_assert!(validate_graph(&sub).is_ok());
            // every edge between sampled nodes survives, and nothing else
            let expected: usize = g
                .edges()
                .filter(|(u, v, _)| nodes.binary_search(u).is_ok() && nodes.binary_search(v).is_ok())
                .count();
            prop_assert_eq!(sub.edge_count(), expected);
            for (u, v, w) in sub.edges() {
                let (ou, ov) = (g.index_of(sub.external_id(u)).unwrap(), g.index_of(sub.external_id(v)).unwrap());
                prop_assert!(g.neighbors(ou).contains(&(ov, w)));
            }
        }
    }
}
