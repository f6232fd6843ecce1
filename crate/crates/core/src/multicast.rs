//! Multicast tree construction by recursive responsibility-zone splitting.
//!
//! The initiator owns the whole space. A peer that receives zone `Z` looks at
//! its overlay neighbours inside `Z`, groups them by orthant, forwards to the
//! median-distance neighbour of each non-empty orthant, and hands that child
//! `Z` intersected with the orthant's open half-space box. Child zones are
//! disjoint and exclude the sender, so with a complete enough overlay every
//! peer gets exactly one message.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, GeometryError, Result};
use crate::geometry::{contains, intersect, l1_distance, orthant_of, orthant_rect, HyperRect, MAX_DIMS};
use crate::graph;
use crate::overlay::{Peer, PeerId, Topology};

/// Responsibility zone: an open axes-aligned box, possibly unbounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Zone(HyperRect);

impl Zone {
    pub fn new(rect: HyperRect) -> Self {
        Self(rect)
    }

    pub fn all_space(dims: usize) -> Self {
        Self(HyperRect::all_space(dims))
    }

    pub fn rect(&self) -> &HyperRect {
        &self.0
    }

    pub fn holds(&self, peer: &Peer) -> bool {
        contains(&self.0, &peer.coord).unwrap_or(false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub from: PeerId,
    pub to: PeerId,
    pub zone: Zone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticastTree {
    pub root: PeerId,
    /// Parent of every reached non-root peer.
    pub parent: BTreeMap<PeerId, PeerId>,
    /// Children of every reached peer (possibly empty), sorted by id.
    pub children: BTreeMap<PeerId, Vec<PeerId>>,
    /// Zone each reached peer was handed; the root's is the whole space.
    pub zone_trace: BTreeMap<PeerId, Zone>,
    /// Every message in send order.
    pub messages: Vec<Message>,
    pub messages_sent: usize,
    pub duplicates: usize,
    pub unreached: BTreeSet<PeerId>,
    /// Whether the overlay was at a fixed point when the tree was built.
    pub topology_converged: bool,
}

impl MulticastTree {
    pub fn reached(&self) -> impl Iterator<Item = PeerId> + '_ {
        self.zone_trace.keys().copied()
    }

    pub fn reached_count(&self) -> usize {
        self.zone_trace.len()
    }

    pub fn max_children(&self) -> usize {
        self.children.values().map(Vec::len).max().unwrap_or(0)
    }
}

/// The children `p` forwards to when handed `zone`, with their zones, in orthant order.
pub fn plan_children(topology: &Topology, p: PeerId, zone: &Zone) -> Result<Vec<(PeerId, Zone)>> {
    let i = topology.index_of(p).ok_or(Error::UnknownRoot(p))?;
    plan_at(topology, i, zone)
}

fn plan_at(topology: &Topology, i: usize, zone: &Zone) -> Result<Vec<(PeerId, Zone)>> {
    let me = topology.peer_at(i);
    let origin = me.coord.as_slice();
    let sides = zone.rect().sides();
    if origin.len() > MAX_DIMS {
        return Err(GeometryError::InvalidSpace(format!("at most {MAX_DIMS} dimensions")).into());
    }
    if sides.len() != origin.len() {
        return Err(GeometryError::DimensionMismatch { left: sides.len(), right: origin.len() }.into());
    }
    // Orthant as a bitmask with dimension 0 most significant, so mask order is RegionId order.
    let mut members: Vec<(u64, f64, PeerId)> = Vec::new();
    for &j in topology.out_indices(i) {
        let q = topology.peer_at(j);
        let xs = q.coord.as_slice();
        if xs.len() != origin.len() {
            return Err(GeometryError::DimensionMismatch { left: origin.len(), right: xs.len() }.into());
        }
        if !sides.iter().zip(xs).all(|(s, &v)| s.contains(v)) {
            continue;
        }
        let mut mask = 0u64;
        for (dim, (&o, &x)) in origin.iter().zip(xs).enumerate() {
            if x == o {
                return Err(GeometryError::NotDistinct { dim }.into());
            }
            mask = (mask << 1) | u64::from(x > o);
        }
        members.push((mask, l1_distance(&me.coord, &q.coord)?, q.id));
    }
    members.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = Vec::new();
    for group in members.chunk_by(|a, b| a.0 == b.0) {
        // Lower median: index ceil(m/2) - 1.
        let (_, _, chosen) = group[group.len().div_ceil(2) - 1];
        let region = orthant_of(&me.coord, &topology.peer(chosen).expect("neighbour exists").coord)?;
        let child_zone =
            intersect(zone.rect(), &orthant_rect(&me.coord, &region)?)?.ok_or(GeometryError::EmptySide { dim: 0 })?;
        out.push((chosen, Zone(child_zone)));
    }
    Ok(out)
}

/// Simulates propagation of the construction request from `root`.
pub fn build_tree(topology: &Topology, root: PeerId) -> Result<MulticastTree> {
    let root_idx = topology.index_of(root).ok_or(Error::UnknownRoot(root))?;
    let dims = topology.peer_at(root_idx).coord.dims();

    let mut tree = MulticastTree {
        root,
        parent: BTreeMap::new(),
        children: BTreeMap::new(),
        zone_trace: BTreeMap::new(),
        messages: Vec::new(),
        messages_sent: 0,
        duplicates: 0,
        unreached: BTreeSet::new(),
        topology_converged: topology.is_converged(),
    };

    let mut queue: VecDeque<(Option<PeerId>, PeerId, Zone)> = VecDeque::new();
    queue.push_back((None, root, Zone::all_space(dims)));
    while let Some((from, to, zone)) = queue.pop_front() {
        if tree.zone_trace.contains_key(&to) {
            tree.duplicates += 1;
            continue;
        }
        if let Some(f) = from {
            tree.parent.insert(to, f);
            tree.children.entry(f).or_default().push(to);
        }
        tree.children.entry(to).or_default();
        let idx = topology.index_of(to).ok_or(Error::UnknownRoot(to))?;
        for (child, child_zone) in plan_at(topology, idx, &zone)? {
            tree.messages.push(Message { from: to, to: child, zone: child_zone.clone() });
            queue.push_back((Some(to), child, child_zone));
        }
        tree.zone_trace.insert(to, zone);
    }
    for kids in tree.children.values_mut() {
        kids.sort();
    }
    tree.messages_sent = tree.messages.len();
    tree.unreached = topology.peers().iter().map(|p| p.id).filter(|id| !tree.zone_trace.contains_key(id)).collect();
    Ok(tree)
}

/// Outcome of checking one forwarding step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub peer: Option<PeerId>,
    /// Pairs of children whose zones overlap.
    pub overlapping: Vec<(PeerId, PeerId)>,
    /// Children whose zone contains the sender.
    pub sender_inside: Vec<PeerId>,
    /// Children not inside their own zone.
    pub child_outside_own_zone: Vec<PeerId>,
    /// Children whose zone is not within the sender's zone.
    pub not_nested: Vec<PeerId>,
    /// Peers in the sender's zone that no child zone claims.
    pub coverage_gaps: Vec<PeerId>,
    /// Peers claimed by more than one child zone.
    pub multiply_claimed: Vec<PeerId>,
    pub children: usize,
}

impl StepReport {
    pub fn passed(&self) -> bool {
        self.overlapping.is_empty()
            && self.sender_inside.is_empty()
            && self.child_outside_own_zone.is_empty()
            && self.not_nested.is_empty()
            && self.coverage_gaps.is_empty()
            && self.multiply_claimed.is_empty()
    }

    /// Passed apart from coverage gaps.
    pub fn structurally_sound(&self) -> bool {
        self.overlapping.is_empty()
            && self.sender_inside.is_empty()
            && self.child_outside_own_zone.is_empty()
            && self.not_nested.is_empty()
            && self.multiply_claimed.is_empty()
    }
}

/// Checks that child zones split the sender's zone: disjoint, sender excluded,
/// each child inside its own zone, and every other peer of the zone claimed
/// exactly once (or reported as a coverage gap).
pub fn verify_step_partition(p: &Peer, zone: &Zone, children: &[(&Peer, &Zone)], all_peers: &[Peer]) -> StepReport {
    let mut report = StepReport { peer: Some(p.id), children: children.len(), ..StepReport::default() };
    for (a, (pa, za)) in children.iter().enumerate() {
        for (pb, zb) in &children[a + 1..] {
            if !matches!(intersect(za.rect(), zb.rect()), Ok(None)) {
                report.overlapping.push((pa.id, pb.id));
            }
        }
        if za.holds(p) {
            report.sender_inside.push(pa.id);
        }
        if !za.holds(pa) {
            report.child_outside_own_zone.push(pa.id);
        }
        if !za.rect().is_subset_of(zone.rect()) {
            report.not_nested.push(pa.id);
        }
    }
    for q in all_peers {
        if q.id == p.id || !zone.holds(q) {
            continue;
        }
        match children.iter().filter(|(_, z)| z.holds(q)).count() {
            0 => report.coverage_gaps.push(q.id),
            1 => {}
            _ => report.multiply_claimed.push(q.id),
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeMetrics {
    /// Tree edges incident to a peer (parent plus children), maximised.
    pub max_tree_degree: usize,
    /// Largest number of children of any peer.
    pub children_max: usize,
    pub longest_root_leaf_hops: usize,
    pub diameter_hops: usize,
}

pub fn tree_metrics(tree: &MulticastTree) -> TreeMetrics {
    let adj = graph::adjacency_from_parents(tree.reached(), &tree.parent);
    let depth = graph::hops_from(&adj, tree.root).into_values().max().unwrap_or(0);
    TreeMetrics {
        max_tree_degree: graph::max_degree(&adj),
        children_max: tree.max_children(),
        longest_root_leaf_hops: depth,
        diameter_hops: graph::forest_diameter(&adj),
    }
}
