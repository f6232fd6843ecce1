//! Lifetime-ordered trees.
//!
//! Each peer's departure time is written into one coordinate. Every peer then
//! links to the overlay neighbour that stays longest, provided that neighbour
//! outlives it. Edges always point to a later departure, so the links are
//! acyclic and the next peer to leave is always a leaf.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::StabilityError;
use crate::geometry::SpaceSpec;
use crate::graph;
use crate::overlay::{Peer, PeerId, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityConfig {
    /// 1-based index of the coordinate that carries the lifetime.
    pub time_coord_index: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { time_coord_index: 1 }
    }
}

fn lifetime_of(p: &Peer) -> Result<f64, StabilityError> {
    p.lifetime.ok_or(StabilityError::MissingLifetime(p.id))
}

/// Replaces coordinate `time_coord_index` of every peer with its lifetime mapped affinely onto `[0, vmax]`.
pub fn embed_lifetimes(peers: &[Peer], cfg: StabilityConfig, spec: SpaceSpec) -> Result<Vec<Peer>, StabilityError> {
    let dims = spec.dims();
    if cfg.time_coord_index == 0 || cfg.time_coord_index > dims {
        return Err(StabilityError::BadCoordIndex { index: cfg.time_coord_index, dims });
    }
    let dim = cfg.time_coord_index - 1;
    let mut by_time = peers.iter().map(|p| Ok((lifetime_of(p)?, p.id))).collect::<Result<Vec<_>, StabilityError>>()?;
    by_time.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if let Some(w) = by_time.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(StabilityError::DuplicateLifetime(w[0].1, w[1].1));
    }
    let (lo, hi) = match (by_time.first(), by_time.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Ok(Vec::new()),
    };
    let scale = |t: f64| if hi > lo { (t - lo) / (hi - lo) * spec.vmax() } else { spec.vmax() / 2.0 };
    let out: Vec<Peer> = peers
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.coord.set(dim, scale(p.lifetime.unwrap_or(lo)));
            q
        })
        .collect();
    let mut embedded: Vec<u64> = out.iter().map(|p| p.coord.get(dim).to_bits()).collect();
    embedded.sort_unstable();
    embedded.dedup();
    if embedded.len() != out.len() {
        return Err(StabilityError::EmbeddingCollision);
    }
    Ok(out)
}

/// The neighbour with the largest lifetime, if it outlives `p`. Ties go to the smaller id.
pub fn preferred_neighbor<'a>(p: &Peer, neighbours: &[&'a Peer]) -> Option<&'a Peer> {
    let own = p.lifetime?;
    neighbours
        .iter()
        .filter_map(|q| q.lifetime.map(|t| (t, *q)))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.id.cmp(&a.1.id)))
        .filter(|(t, _)| *t > own)
        .map(|(_, q)| q)
}

/// Preferred-neighbour links over a whole overlay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityTree {
    /// Preferred neighbour of every peer; `None` for root candidates.
    pub preferred: BTreeMap<PeerId, Option<PeerId>>,
    pub root_candidates: Vec<PeerId>,
    pub is_single_tree: bool,
    /// Sizes of the connected components, largest first.
    pub component_sizes: Vec<usize>,
    pub lifetimes: BTreeMap<PeerId, f64>,
}

impl StabilityTree {
    /// Child -> parent map (edges of the preferred links).
    pub fn parents(&self) -> BTreeMap<PeerId, PeerId> {
        self.preferred.iter().filter_map(|(&c, p)| p.map(|p| (c, p))).collect()
    }

    pub fn children(&self) -> BTreeMap<PeerId, Vec<PeerId>> {
        let mut out: BTreeMap<PeerId, Vec<PeerId>> = self.preferred.keys().map(|&k| (k, Vec::new())).collect();
        for (c, p) in self.parents() {
            out.entry(p).or_default().push(c);
        }
        out
    }

    /// Links `child` to `parent` regardless of lifetimes. Used to build corrupted trees for negative tests.
    pub fn set_parent(&mut self, child: PeerId, parent: Option<PeerId>) {
        self.preferred.insert(child, parent);
    }
}

/// Computes every peer's preferred link among its undirected overlay neighbours.
pub fn build_stability_tree(topology: &Topology) -> Result<StabilityTree, StabilityError> {
    let adj = topology.undirected_adjacency();
    let mut preferred = BTreeMap::new();
    let mut lifetimes = BTreeMap::new();
    for (i, p) in topology.peers().iter().enumerate() {
        lifetimes.insert(p.id, lifetime_of(p)?);
        let nbrs: Vec<&Peer> = adj[i].iter().map(|&j| topology.peer_at(j)).collect();
        for q in &nbrs {
            lifetime_of(q)?;
        }
        preferred.insert(p.id, preferred_neighbor(p, &nbrs).map(|q| q.id));
    }
    let root_candidates: Vec<PeerId> = preferred.iter().filter(|(_, v)| v.is_none()).map(|(&k, _)| k).collect();
    let parents: BTreeMap<PeerId, PeerId> = preferred.iter().filter_map(|(&c, p)| p.map(|p| (c, p))).collect();
    let tree_adj = graph::adjacency_from_parents(preferred.keys().copied(), &parents);
    let mut component_sizes: Vec<usize> = graph::components(&tree_adj).iter().map(Vec::len).collect();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let is_single_tree = root_candidates.len() == 1 && component_sizes.len() == 1;
    Ok(StabilityTree { preferred, root_candidates, is_single_tree, component_sizes, lifetimes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    /// Edges (child, parent) where the parent does not outlive the child.
    pub violations: Vec<(PeerId, PeerId)>,
    /// Peers whose parent chain never ends at a root (a cycle).
    pub cyclic: Vec<PeerId>,
    pub max_degree: usize,
    pub diameter: usize,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.cyclic.is_empty()
    }
}

/// Checks that lifetimes strictly decrease from every root towards the leaves, and reports degree and diameter.
pub fn verify_monotone(tree: &StabilityTree) -> MonotoneReport {
    let parents = tree.parents();
    let life = |id: &PeerId| tree.lifetimes.get(id).copied().unwrap_or(f64::NAN);
    let violations = parents
        .iter()
        .filter(|(c, p)| life(p).partial_cmp(&life(c)) != Some(std::cmp::Ordering::Greater))
        .map(|(&c, &p)| (c, p))
        .collect();
    let mut cyclic = Vec::new();
    for &start in parents.keys() {
        let mut seen = BTreeSet::from([start]);
        let mut cur = start;
        while let Some(&next) = parents.get(&cur) {
            if !seen.insert(next) {
                cyclic.push(start);
                break;
            }
            cur = next;
        }
    }
    let adj = graph::adjacency_from_parents(tree.preferred.keys().copied(), &parents);
    let diameter = if cyclic.is_empty() { graph::forest_diameter(&adj) } else { 0 };
    MonotoneReport { violations, cyclic, max_degree: graph::max_degree(&adj), diameter }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepartureReport {
    /// Departure order (increasing lifetime).
    pub order: Vec<PeerId>,
    /// Peers that still had children when they left.
    pub non_leaf_departures: Vec<PeerId>,
    /// Departures that split the remaining peers of the departing peer's tree.
    pub disconnections: usize,
}

impl DepartureReport {
    pub fn passed(&self) -> bool {
        self.non_leaf_departures.is_empty() && self.disconnections == 0
    }
}

/// Removes peers in increasing lifetime order, checking each is a leaf of what remains.
pub fn simulate_departures(tree: &StabilityTree) -> DepartureReport {
    let mut order: Vec<(f64, PeerId)> = tree.lifetimes.iter().map(|(&id, &t)| (t, id)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut remaining_children: BTreeMap<PeerId, usize> =
        tree.children().into_iter().map(|(k, v)| (k, v.len())).collect();
    let parents = tree.parents();
    let mut non_leaf = Vec::new();
    let mut disconnections = 0;
    let mut departed = BTreeSet::new();
    for &(_, id) in &order {
        let kids = remaining_children.remove(&id).unwrap_or(0);
        if kids > 0 {
            non_leaf.push(id);
            // Removing an internal node leaves its children cut off from its parent side.
            let splits = kids + usize::from(parents.get(&id).is_some_and(|p| !departed.contains(p)));
            if splits > 1 {
                disconnections += 1;
            }
        }
        if let Some(p) = parents.get(&id) {
            if let Some(c) = remaining_children.get_mut(p) {
                *c = c.saturating_sub(1);
            }
        }
        departed.insert(id);
    }
    DepartureReport {
        order: order.into_iter().map(|(_, id)| id).collect(),
        non_leaf_departures: non_leaf,
        disconnections,
    }
}
