use crate::error::{Error, Result};
use crate::graph::NodeId;

/// A partition of `0..n` into communities.
///
/// Labels are canonical: communities are numbered `0, 1, ...` in order of
/// their smallest member, so two partitions with the same blocks compare equal
/// whatever labels they were built from. Members are stored ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    communities: Vec<Vec<NodeId>>,
}

impl Partition {
    /// Builds a partition from arbitrary per-node labels.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Self {
        let mut relabel = std::collections::HashMap::new();
        let mut communities: Vec<Vec<NodeId>> = Vec::new();
        let assignment = labels
            .iter()
            .enumerate()
            .map(|(node, label)| {
                let c = *relabel.entry(*label).or_insert_with(|| {
                    communities.push(Vec::new());
                    communities.len() - 1
                });
                communities[c].push(node);
                c
            })
            .collect();
        Partition {
            assignment,
            communities,
        }
    }

    /// Builds a partition from member lists, which must cover `0..n` exactly once.
    pub fn from_communities(n: usize, communities: &[Vec<NodeId>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in communities.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::EmptyCommunity);
            }
            for &v in members {
                if v >= n {
                    return Err(Error::NodeOutOfRange { index: v, len: n });
                }
                if labels[v] != usize::MAX {
                    return Err(Error::Config(format!("node {v} in two communities")));
                }
                labels[v] = c;
            }
        }
        if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Unassigned(v as u64));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            communities: (0..n).map(|v| vec![v]).collect(),
        }
    }

    /// All nodes in one community.
    pub fn whole(n: usize) -> Self {
        Self::from_labels(&vec![0u8; n])
    }

    /// Number of nodes covered.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_communities(&self) -> usize {
        self.communities.len()
    }

    #[inline]
    pub fn community_of(&self, v: NodeId) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn communities(&self) -> &[Vec<NodeId>] {
        &self.communities
    }

    /// Maps a partition of meta-nodes back onto the nodes they contain.
    /// `self` assigns each original node to a meta-node.
    pub fn compose(&self, upper: &Partition) -> Partition {
        let labels: Vec<usize> = self
            .assignment
            .iter()
            .map(|&meta| upper.community_of(meta))
            .collect();
        Self::from_labels(&labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_labels() {
        let a = Partition::from_labels(&[7, 7, 3, 9, 3]);
        let b = Partition::from_labels(&["x", "x", "y", "z", "y"]);
        assert_eq!(a, b);
        assert_eq!(a.assignment(), &[0, 0, 1, 2, 1]);
        assert_eq!(a.communities(), &[vec![0, 1], vec![2, 4], vec![3]]);
    }

    #[test]
    fn from_communities_checks_cover() {
        assert!(Partition::from_communities(3, &[vec![0, 1], vec![2]]).is_ok());
        assert!(Partition::from_communities(3, &[vec![0, 1]]).is_err());
        assert!(Partition::from_communities(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::from_communities(3, &[vec![0, 1, 2], vec![]]).is_err());
    }

    #[test]
    fn compose_projects_levels() {
        let lower = Partition::from_labels(&[0, 0, 1, 2, 2, 3]);
        let upper = Partition::from_labels(&[0, 0, 1, 1]);
        assert_eq!(
            lower.compose(&upper),
            Partition::from_labels(&[0, 0, 0, 1, 1, 1])
        );
    }

    #[test]
    fn trivial_partitions() {
        assert_eq!(Partition::singletons(3).num_communities(), 3);
        assert_eq!(Partition::whole(3).num_communities(), 1);
        assert_eq!(Partition::whole(0).num_communities(), 0);
    }
}
