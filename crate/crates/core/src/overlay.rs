//! Peer population, gossip knowledge sets, neighbour selection and convergence.
//!
//! A [`Topology`] holds every peer, the directed neighbour sets chosen by the
//! selection strategy, and (in gossip mode) when each peer last heard an
//! existence announcement from every other peer. Gossip runs in synchronous
//! rounds over the undirected closure of the selection edges.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, OverlayError};
use crate::geometry::{
    hyperplane_region, l1_distance, l2_distance, orthant_of, Coord, HyperplaneSet, RegionId, SpaceSpec,
};

/// Upper end of the generated lifetime range, in simulated seconds.
pub const LIFETIME_SPAN: f64 = 1.0e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeerId(pub u32);

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peer {
    pub id: PeerId,
    pub coord: Coord,
    /// Opaque stand-in for a public address and port.
    pub addr: u64,
    /// Departure time in simulated seconds, when known.
    pub lifetime: Option<f64>,
}

impl Peer {
    pub fn new(id: PeerId, coord: Coord) -> Self {
        Self { id, coord, addr: u64::from(id.0), lifetime: None }
    }

    pub fn with_lifetime(mut self, lifetime: f64) -> Self {
        self.lifetime = Some(lifetime);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateOrder {
    /// Every peer reselects from the previous round's state.
    #[default]
    Synchronous,
    /// Peers reselect one after another in id order, seeing earlier updates.
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GossipConfig {
    /// Announcement radius in overlay hops.
    pub br: usize,
    /// How many rounds an announcement stays in a knowledge set.
    pub freshness_rounds: usize,
    pub order: UpdateOrder,
}

impl GossipConfig {
    pub fn new(br: usize, freshness_rounds: usize) -> Result<Self, OverlayError> {
        let cfg = Self { br, freshness_rounds, order: UpdateOrder::Synchronous };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), OverlayError> {
        if self.br < 2 {
            return Err(OverlayError::InvalidParameter(format!("br must be >= 2, got {}", self.br)));
        }
        if self.freshness_rounds < 1 {
            return Err(OverlayError::InvalidParameter("freshness_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for GossipConfig {
    fn default() -> Self {
        Self { br: 2, freshness_rounds: 2, order: UpdateOrder::Synchronous }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    L1,
    L2,
}

impl Distance {
    pub fn between(self, a: &Coord, b: &Coord) -> Result<f64, GeometryError> {
        match self {
            Distance::L1 => l1_distance(a, b),
            Distance::L2 => l2_distance(a, b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SelectionStrategy {
    /// Keep Q when the closed box spanned by P and Q holds no other candidate.
    EmptyRect,
    /// K closest per orthant around P.
    OrthogonalHyperplanes { k: usize, distance: Distance },
    /// K closest per region cut out by an arbitrary plane set through P.
    GeneralHyperplanes { planes: HyperplaneSet, k: usize, distance: Distance },
    /// K closest overall.
    KClosest { k: usize, distance: Distance },
}

impl SelectionStrategy {
    pub fn validate(&self, dims: usize) -> Result<(), OverlayError> {
        match self {
            SelectionStrategy::EmptyRect => Ok(()),
            SelectionStrategy::OrthogonalHyperplanes { k, .. } | SelectionStrategy::KClosest { k, .. } => check_k(*k),
            SelectionStrategy::GeneralHyperplanes { planes, k, .. } => {
                if planes.dims() != dims {
                    return Err(GeometryError::DimensionMismatch { left: planes.dims(), right: dims }.into());
                }
                check_k(*k)
            }
        }
    }

    /// Largest number of neighbours the strategy can select, if bounded.
    pub fn max_selected(&self, dims: usize) -> Option<usize> {
        match self {
            SelectionStrategy::EmptyRect => None,
            SelectionStrategy::OrthogonalHyperplanes { k, .. } => Some(k << dims),
            SelectionStrategy::GeneralHyperplanes { planes, k, .. } => {
                Some(k.saturating_mul(1usize.checked_shl(planes.len() as u32).unwrap_or(usize::MAX)))
            }
            SelectionStrategy::KClosest { k, .. } => Some(*k),
        }
    }
}

fn check_k(k: usize) -> Result<(), OverlayError> {
    if k == 0 {
        Err(OverlayError::InvalidParameter("k must be >= 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeMode {
    /// Knowledge sets come from BR-hop announcements.
    Gossip,
    /// Every peer knows every other peer.
    #[default]
    Full,
}

/// Generates `n` peers with uniform coordinates in `[0, vmax]^D`, distinct per dimension.
///
/// Colliding components are redrawn. Lifetimes, when requested, are uniform in
/// `[0, LIFETIME_SPAN)` and pairwise distinct. The output is a pure function of `seed`.
pub fn generate_peers(n: usize, spec: SpaceSpec, seed: u64, with_lifetimes: bool) -> Result<Vec<Peer>, OverlayError> {
    if n == 0 {
        return Err(OverlayError::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 1000 * n as u64 + 1000;
    let mut attempts = 0u64;
    let mut seen: Vec<HashSet<u64>> = vec![HashSet::with_capacity(n); spec.dims()];
    let mut seen_lifetimes = HashSet::with_capacity(if with_lifetimes { n } else { 0 });
    let mut draw = |rng: &mut ChaCha8Rng, seen: &mut HashSet<u64>, hi: f64, inclusive: bool| loop {
        attempts += 1;
        if attempts > max_attempts {
            return Err(OverlayError::Generation { attempts });
        }
        let v: f64 = if inclusive { rng.gen_range(0.0..=hi) } else { rng.gen_range(0.0..hi) };
        if seen.insert(v.to_bits()) {
            return Ok(v);
        }
    };

    let mut peers = Vec::with_capacity(n);
    for i in 0..n {
        let coord = (0..spec.dims())
            .map(|dim| draw(&mut rng, &mut seen[dim], spec.vmax(), true))
            .collect::<Result<Vec<_>, _>>()?;
        let addr = rng.gen::<u64>();
        let lifetime =
            if with_lifetimes { Some(draw(&mut rng, &mut seen_lifetimes, LIFETIME_SPAN, false)?) } else { None };
        peers.push(Peer { id: PeerId(i as u32), coord: Coord::new(coord), addr, lifetime });
    }
    Ok(peers)
}

/// Closed-box membership of `r` in the box spanned by `p` and `q`.
fn in_box(p: &[f64], q: &[f64], r: &[f64]) -> bool {
    p.iter().zip(q).zip(r).all(|((&a, &b), &x)| x >= a.min(b) && x <= a.max(b))
}

/// Picks neighbours of `p` among `candidates`; returns positions into `candidates`, sorted by peer id.
fn select_positions(p: &Peer, candidates: &[&Peer], strategy: &SelectionStrategy) -> Result<Vec<usize>, GeometryError> {
    let mut chosen = match strategy {
        SelectionStrategy::EmptyRect => {
            // A candidate inside box(P, Q) is strictly closer to P in L1, so
            // scanning by distance lets Q be checked only against already
            // accepted neighbours of its own orthant.
            let mut order = candidates
                .iter()
                .enumerate()
                .map(|(pos, q)| Ok((l1_distance(&p.coord, &q.coord)?, q.id, pos)))
                .collect::<Result<Vec<_>, GeometryError>>()?;
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut accepted: HashMap<RegionId, Vec<usize>> = HashMap::new();
            let mut out = Vec::new();
            for (_, _, pos) in order {
                let q = candidates[pos];
                let bucket = accepted.entry(orthant_of(&p.coord, &q.coord)?).or_default();
                let blocked = bucket
                    .iter()
                    .any(|&a| in_box(p.coord.as_slice(), q.coord.as_slice(), candidates[a].coord.as_slice()));
                if !blocked {
                    bucket.push(pos);
                    out.push(pos);
                }
            }
            out
        }
        SelectionStrategy::OrthogonalHyperplanes { k, distance } => {
            let mut regions: BTreeMap<RegionId, Vec<(f64, PeerId, usize)>> = BTreeMap::new();
            for (pos, q) in candidates.iter().enumerate() {
                let region = orthant_of(&p.coord, &q.coord)?;
                regions.entry(region).or_default().push((distance.between(&p.coord, &q.coord)?, q.id, pos));
            }
            k_closest_per_region(regions, *k)
        }
        SelectionStrategy::GeneralHyperplanes { planes, k, distance } => {
            let mut regions: BTreeMap<RegionId, Vec<(f64, PeerId, usize)>> = BTreeMap::new();
            for (pos, q) in candidates.iter().enumerate() {
                let region = hyperplane_region(planes, &q.coord.offset_from(&p.coord)?)?;
                regions.entry(region).or_default().push((distance.between(&p.coord, &q.coord)?, q.id, pos));
            }
            k_closest_per_region(regions, *k)
        }
        SelectionStrategy::KClosest { k, distance } => {
            let mut all = BTreeMap::new();
            all.insert(
                RegionId::new(Vec::new()),
                candidates
                    .iter()
                    .enumerate()
                    .map(|(pos, q)| Ok((distance.between(&p.coord, &q.coord)?, q.id, pos)))
                    .collect::<Result<Vec<_>, GeometryError>>()?,
            );
            k_closest_per_region(all, *k)
        }
    };
    chosen.sort_by_key(|&pos| candidates[pos].id);
    Ok(chosen)
}

fn k_closest_per_region(regions: BTreeMap<RegionId, Vec<(f64, PeerId, usize)>>, k: usize) -> Vec<usize> {
    regions
        .into_values()
        .flat_map(|mut members| {
            members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            members.into_iter().take(k).map(|m| m.2)
        })
        .collect()
}

/// Selects `p`'s overlay neighbours from `candidates`; the result is sorted by id.
pub fn select_neighbors(
    p: &Peer,
    candidates: &[&Peer],
    strategy: &SelectionStrategy,
) -> Result<Vec<PeerId>, GeometryError> {
    Ok(select_positions(p, candidates, strategy)?.into_iter().map(|pos| candidates[pos].id).collect())
}

/// The overlay: peers, directed neighbour sets, and knowledge state.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    peers: Vec<Peer>,
    index: HashMap<PeerId, usize>,
    /// Selected neighbours as peer indices, sorted by peer id.
    out: Vec<Vec<usize>>,
    mode: KnowledgeMode,
    /// Gossip mode only: peer index -> round it was last heard from.
    heard: Vec<BTreeMap<usize, u64>>,
    round: u64,
    converged: bool,
}

impl Topology {
    pub fn new(mode: KnowledgeMode) -> Self {
        Self {
            peers: Vec::new(),
            index: HashMap::new(),
            out: Vec::new(),
            mode,
            heard: Vec::new(),
            round: 0,
            converged: true,
        }
    }

    /// All peers, no edges. Useful for full-knowledge runs where the first round selects everything.
    pub fn from_peers(peers: Vec<Peer>, mode: KnowledgeMode) -> Result<Self, OverlayError> {
        let mut t = Self::new(mode);
        for p in peers {
            t.add_peer(p, &[])?;
        }
        t.converged = t.peers.len() <= 1;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.peers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }

    pub fn mode(&self) -> KnowledgeMode {
        self.mode
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer(&self, id: PeerId) -> Option<&Peer> {
        self.index.get(&id).map(|&i| &self.peers[i])
    }

    pub fn contains(&self, id: PeerId) -> bool {
        self.index.contains_key(&id)
    }

    /// True when the last `converge` reached a fixed point and nothing changed since.
    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Gossip rounds run so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn out_neighbors(&self, id: PeerId) -> Option<Vec<PeerId>> {
        self.index.get(&id).map(|&i| self.out[i].iter().map(|&j| self.peers[j].id).collect())
    }

    /// Union of in- and out-neighbours, sorted by id.
    pub fn undirected_neighbors(&self, id: PeerId) -> Option<Vec<PeerId>> {
        let i = *self.index.get(&id)?;
        let adj = self.undirected_adjacency();
        Some(adj[i].iter().map(|&j| self.peers[j].id).collect())
    }

    /// Current knowledge set `I(P)`, sorted by id.
    pub fn knowledge(&self, id: PeerId) -> Option<Vec<PeerId>> {
        let i = *self.index.get(&id)?;
        let mut ids: Vec<PeerId> = self.knowledge_indices(i).into_iter().map(|j| self.peers[j].id).collect();
        ids.sort();
        Some(ids)
    }

    pub(crate) fn index_of(&self, id: PeerId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub(crate) fn out_indices(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub(crate) fn peer_at(&self, i: usize) -> &Peer {
        &self.peers[i]
    }

    fn knowledge_indices(&self, i: usize) -> Vec<usize> {
        match self.mode {
            KnowledgeMode::Full => (0..self.peers.len()).filter(|&j| j != i).collect(),
            KnowledgeMode::Gossip => self.heard[i].keys().copied().collect(),
        }
    }

    /// Undirected closure of the selection edges, each list sorted by peer id.
    pub(crate) fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<BTreeSet<(PeerId, usize)>> = vec![BTreeSet::new(); self.peers.len()];
        for (i, outs) in self.out.iter().enumerate() {
            for &j in outs {
                adj[i].insert((self.peers[j].id, j));
                adj[j].insert((self.peers[i].id, i));
            }
        }
        adj.into_iter().map(|s| s.into_iter().map(|(_, j)| j).collect()).collect()
    }

    fn add_peer(&mut self, peer: Peer, bootstrap: &[PeerId]) -> Result<(), OverlayError> {
        if self.index.contains_key(&peer.id) {
            return Err(OverlayError::DuplicatePeer(peer.id));
        }
        if let Some(first) = self.peers.first() {
            if first.coord.dims() != peer.coord.dims() {
                return Err(
                    GeometryError::DimensionMismatch { left: first.coord.dims(), right: peer.coord.dims() }.into()
                );
            }
            for other in &self.peers {
                if let Some(dim) = (0..peer.coord.dims()).find(|&d| other.coord.get(d) == peer.coord.get(d)) {
                    return Err(GeometryError::NotDistinct { dim }.into());
                }
            }
        }
        let mut boot = bootstrap
            .iter()
            .map(|b| self.index.get(b).copied().ok_or(OverlayError::UnknownPeer(*b)))
            .collect::<Result<Vec<_>, _>>()?;
        boot.sort_by_key(|&j| self.peers[j].id);
        boot.dedup();
        let i = self.peers.len();
        self.index.insert(peer.id, i);
        self.peers.push(peer);
        let heard = boot.iter().map(|&j| (j, self.round)).collect();
        self.out.push(boot);
        self.heard.push(if self.mode == KnowledgeMode::Gossip { heard } else { BTreeMap::new() });
        Ok(())
    }

    /// Adds a peer whose initial neighbours are `bootstrap`. Only the first peer may have an empty bootstrap set.
    pub fn insert_peer(&mut self, peer: Peer, bootstrap: &[PeerId]) -> Result<(), OverlayError> {
        if bootstrap.is_empty() && !self.peers.is_empty() {
            return Err(OverlayError::EmptyBootstrap);
        }
        self.add_peer(peer, bootstrap)?;
        self.converged = self.peers.len() == 1;
        Ok(())
    }

    /// Drops one selection edge. Used to inject faults when testing the checkers.
    pub fn remove_edge(&mut self, from: PeerId, to: PeerId) -> Result<bool, OverlayError> {
        let i = self.index_of(from).ok_or(OverlayError::UnknownPeer(from))?;
        let j = self.index_of(to).ok_or(OverlayError::UnknownPeer(to))?;
        let before = self.out[i].len();
        self.out[i].retain(|&x| x != j);
        let removed = self.out[i].len() != before;
        if removed {
            self.converged = false;
        }
        Ok(removed)
    }

    /// Peers within `br` undirected hops of each peer, excluding itself.
    fn reach_sets(&self, br: usize) -> Vec<Vec<usize>> {
        let adj = self.undirected_adjacency();
        (0..self.peers.len()).into_par_iter().map(|src| bounded_bfs(&adj, src, br)).collect()
    }

    fn select_for(&self, i: usize, strategy: &SelectionStrategy) -> Result<Vec<usize>, GeometryError> {
        let known = self.knowledge_indices(i);
        let cands: Vec<&Peer> = known.iter().map(|&j| &self.peers[j]).collect();
        Ok(select_positions(&self.peers[i], &cands, strategy)?.into_iter().map(|pos| known[pos]).collect())
    }

    /// Folds fresh announcements in and expires stale ones. Returns whether any knowledge set changed.
    fn absorb(&mut self, fresh: &[Vec<usize>], freshness: usize) -> bool {
        let round = self.round;
        let mut changed = false;
        for (heard, reach) in self.heard.iter_mut().zip(fresh) {
            let before: Vec<usize> = heard.keys().copied().collect();
            for &j in reach {
                heard.insert(j, round);
            }
            heard.retain(|_, last| *last + freshness as u64 > round);
            changed |= !heard.keys().copied().eq(before.iter().copied());
        }
        changed
    }
}

pub(crate) fn bounded_bfs(adj: &[Vec<usize>], src: usize, limit: usize) -> Vec<usize> {
    let mut dist = HashMap::new();
    dist.insert(src, 0usize);
    let mut queue = VecDeque::from([src]);
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == limit {
            continue;
        }
        for &v in &adj[u] {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(d + 1);
                out.push(v);
                queue.push_back(v);
            }
        }
    }
    out.sort_unstable();
    out
}

/// One gossip round: every peer announces itself `br` hops away over the undirected overlay.
///
/// Updates the knowledge sets (in gossip mode) and returns the announcements
/// each peer received this round.
pub fn knowledge_round(topology: &mut Topology, cfg: &GossipConfig) -> BTreeMap<PeerId, BTreeSet<PeerId>> {
    topology.round += 1;
    let fresh = topology.reach_sets(cfg.br);
    if topology.mode == KnowledgeMode::Gossip {
        topology.absorb(&fresh, cfg.freshness_rounds);
    }
    fresh
        .iter()
        .enumerate()
        .map(|(i, reach)| (topology.peers[i].id, reach.iter().map(|&j| topology.peers[j].id).collect()))
        .collect()
}

/// Repeats gossip and reselection until a round changes nothing; returns the rounds used.
///
/// In gossip mode a fixed point also requires every knowledge entry to have
/// been refreshed in the last round, so that one more round is guaranteed to
/// be a no-op.
pub fn converge(
    topology: &mut Topology,
    cfg: &GossipConfig,
    strategy: &SelectionStrategy,
    max_rounds: usize,
) -> Result<usize, OverlayError> {
    if max_rounds == 0 {
        return Err(OverlayError::InvalidParameter("max_rounds must be >= 1".into()));
    }
    if let Some(p) = topology.peers.first() {
        strategy.validate(p.coord.dims())?;
    }
    let gossip = topology.mode == KnowledgeMode::Gossip;
    if gossip {
        cfg.validate()?;
    }
    let mut previous = topology.clone();
    for round in 1..=max_rounds {
        let mut changed = false;
        let mut stale = false;
        if gossip {
            topology.round += 1;
            let fresh = topology.reach_sets(cfg.br);
            changed |= topology.absorb(&fresh, cfg.freshness_rounds);
            stale = topology.heard.iter().zip(&fresh).any(|(h, f)| h.len() != f.len());
        }
        match cfg.order {
            UpdateOrder::Synchronous => {
                let next = (0..topology.peers.len())
                    .into_par_iter()
                    .map(|i| topology.select_for(i, strategy))
                    .collect::<Result<Vec<_>, _>>()?;
                changed |= next != topology.out;
                topology.out = next;
            }
            UpdateOrder::Sequential => {
                for i in 0..topology.peers.len() {
                    let sel = topology.select_for(i, strategy)?;
                    if sel != topology.out[i] {
                        changed = true;
                        topology.out[i] = sel;
                    }
                }
            }
        }
        if !changed && !stale {
            topology.converged = true;
            return Ok(round);
        }
        if round < max_rounds {
            previous = topology.clone();
        }
    }
    topology.converged = false;
    Err(OverlayError::NonConvergence {
        rounds: max_rounds,
        previous: Box::new(previous),
        last: Box::new(topology.clone()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyMetrics {
    pub max_degree: usize,
    pub avg_degree: f64,
}

/// Degree over the undirected neighbour sets.
pub fn topology_metrics(topology: &Topology) -> TopologyMetrics {
    if topology.is_empty() {
        return TopologyMetrics { max_degree: 0, avg_degree: 0.0 };
    }
    let adj = topology.undirected_adjacency();
    let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
    let total: usize = adj.iter().map(Vec::len).sum();
    TopologyMetrics { max_degree, avg_degree: total as f64 / adj.len() as f64 }
}

/// Mean per-peer Jaccard similarity of out-neighbour sets between two topologies over the same peers.
/// Two empty sets count as identical.
pub fn neighbor_jaccard(a: &Topology, b: &Topology) -> Result<f64, OverlayError> {
    if a.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for p in &a.peers {
        let sa: BTreeSet<PeerId> = a.out_neighbors(p.id).unwrap_or_default().into_iter().collect();
        let sb: BTreeSet<PeerId> = b.out_neighbors(p.id).ok_or(OverlayError::UnknownPeer(p.id))?.into_iter().collect();
        let union = sa.union(&sb).count();
        total += if union == 0 { 1.0 } else { sa.intersection(&sb).count() as f64 / union as f64 };
    }
    Ok(total / a.len() as f64)
}
