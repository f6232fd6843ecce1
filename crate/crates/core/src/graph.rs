//! Hop-count measures over small undirected trees and forests keyed by peer id.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::overlay::PeerId;

pub(crate) type Adjacency = BTreeMap<PeerId, BTreeSet<PeerId>>;

/// Undirected adjacency of a child -> parent map, including isolated `nodes`.
pub(crate) fn adjacency_from_parents<'a>(
    nodes: impl IntoIterator<Item = PeerId>,
    parents: impl IntoIterator<Item = (&'a PeerId, &'a PeerId)>,
) -> Adjacency {
    let mut adj: Adjacency = nodes.into_iter().map(|n| (n, BTreeSet::new())).collect();
    for (&child, &parent) in parents {
        adj.entry(child).or_default().insert(parent);
        adj.entry(parent).or_default().insert(child);
    }
    adj
}

/// Hop distances from `src` to everything reachable.
pub(crate) fn hops_from(adj: &Adjacency, src: PeerId) -> BTreeMap<PeerId, usize> {
    let mut dist = BTreeMap::new();
    dist.insert(src, 0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        for &v in adj.get(&u).into_iter().flatten() {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Connected components, each sorted, in order of their smallest id.
pub(crate) fn components(adj: &Adjacency) -> Vec<Vec<PeerId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &n in adj.keys() {
        if seen.contains(&n) {
            continue;
        }
        let comp: Vec<PeerId> = hops_from(adj, n).into_keys().collect();
        seen.extend(comp.iter().copied());
        out.push(comp);
    }
    out
}

/// Largest hop diameter over the components of an acyclic graph (double sweep).
pub(crate) fn forest_diameter(adj: &Adjacency) -> usize {
    components(adj)
        .into_iter()
        .map(|comp| {
            let first = hops_from(adj, comp[0]);
            // Farthest node; ties resolve to the smallest id for determinism.
            let far = first.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&n, _)| n).unwrap_or(comp[0]);
            hops_from(adj, far).into_values().max().unwrap_or(0)
        })
        .max()
        .unwrap_or(0)
}

pub(crate) fn max_degree(adj: &Adjacency) -> usize {
    adj.values().map(BTreeSet::len).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: u32) -> PeerId {
        PeerId(i)
    }

    #[test]
    fn path_and_star() {
        let parents: BTreeMap<PeerId, PeerId> = [(p(1), p(0)), (p(2), p(1))].into_iter().collect();
        let adj = adjacency_from_parents([p(0)], &parents);
        assert_eq!(forest_diameter(&adj), 2);
        assert_eq!(max_degree(&adj), 2);

        let star: BTreeMap<PeerId, PeerId> = (1..=4).map(|i| (p(i), p(0))).collect();
        let adj = adjacency_from_parents([], &star);
        assert_eq!(forest_diameter(&adj), 2);
        assert_eq!(max_degree(&adj), 4);
    }

    #[test]
    fn forest_reports_largest_component() {
        let parents: BTreeMap<PeerId, PeerId> =
            [(p(1), p(0)), (p(3), p(2)), (p(4), p(3)), (p(5), p(4))].into_iter().collect();
        let adj = adjacency_from_parents([p(9)], &parents);
        assert_eq!(components(&adj).len(), 3);
        assert_eq!(forest_diameter(&adj), 3);
    }
}
