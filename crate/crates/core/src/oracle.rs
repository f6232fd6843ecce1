//! Brute-force reference checks for small instances.
//!
//! Nothing here calls into the overlay selection or tree construction code it
//! validates: only geometry primitives, public accessors, and plain loops.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{contains, hyperplane_region, orthant_of, rect_between, HyperRect, RegionId};
use crate::multicast::MulticastTree;
use crate::overlay::{Peer, PeerId, SelectionStrategy, Topology};

/// Largest instance the harness hands to the oracles.
pub const ORACLE_MAX_N: usize = 500;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub peer: PeerId,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub subject: String,
    pub n: usize,
    pub d: usize,
    pub mismatches: Vec<Mismatch>,
}

impl OracleReport {
    fn new(subject: &str, n: usize, d: usize) -> Self {
        Self { subject: subject.to_string(), n, d, mismatches: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn flag(&mut self, peer: PeerId, expected: impl Into<String>, actual: impl Into<String>) {
        self.mismatches.push(Mismatch { peer, expected: expected.into(), actual: actual.into() });
    }
}

pub type UndirectedGraph = BTreeMap<PeerId, BTreeSet<PeerId>>;

/// Undirected closure of a topology's selection edges, read through its public accessors.
pub fn undirected_graph(topology: &Topology) -> UndirectedGraph {
    let mut g: UndirectedGraph = topology.peers().iter().map(|p| (p.id, BTreeSet::new())).collect();
    for p in topology.peers() {
        for q in topology.out_neighbors(p.id).unwrap_or_default() {
            g.entry(p.id).or_default().insert(q);
            g.entry(q).or_default().insert(p.id);
        }
    }
    g
}

/// Every node at hop distance 1..=limit from `src`, by level-by-level expansion.
pub fn bfs_hops(graph: &UndirectedGraph, src: PeerId, limit: usize) -> Result<BTreeSet<PeerId>> {
    if !graph.contains_key(&src) {
        return Err(Error::UnknownRoot(src));
    }
    let mut visited = BTreeSet::from([src]);
    let mut frontier = vec![src];
    for _ in 0..limit {
        let mut next = Vec::new();
        for u in frontier {
            for &v in &graph[&u] {
                if visited.insert(v) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    visited.remove(&src);
    Ok(visited)
}

/// Q is kept when no third candidate lies in the closed box spanned by P and Q. Quadratic per peer.
pub fn brute_empty_rect(p: &Peer, candidates: &[&Peer]) -> Result<BTreeSet<PeerId>> {
    let mut out = BTreeSet::new();
    for q in candidates {
        let rect = rect_between(&p.coord, &q.coord)?;
        let mut empty = true;
        for r in candidates {
            if r.id != q.id && contains(&rect, &r.coord)? {
                empty = false;
                break;
            }
        }
        if empty {
            out.insert(q.id);
        }
    }
    Ok(out)
}

/// Per-region K-closest by rank counting: Q is kept when fewer than K same-region
/// candidates beat it on (distance, id).
fn brute_k_closest(p: &Peer, candidates: &[&Peer], strategy: &SelectionStrategy) -> Result<BTreeSet<PeerId>> {
    let (k, distance) = match strategy {
        SelectionStrategy::OrthogonalHyperplanes { k, distance }
        | SelectionStrategy::GeneralHyperplanes { k, distance, .. }
        | SelectionStrategy::KClosest { k, distance } => (*k, *distance),
        SelectionStrategy::EmptyRect => return brute_empty_rect(p, candidates),
    };
    let region = |q: &Peer| -> Result<RegionId> {
        Ok(match strategy {
            SelectionStrategy::GeneralHyperplanes { planes, .. } => {
                hyperplane_region(planes, &q.coord.offset_from(&p.coord)?)?
            }
            SelectionStrategy::OrthogonalHyperplanes { .. } => orthant_of(&p.coord, &q.coord)?,
            _ => RegionId::new(Vec::new()),
        })
    };
    let keyed = candidates
        .iter()
        .map(|q| Ok((region(q)?, distance.between(&p.coord, &q.coord)?, q.id)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = BTreeSet::new();
    for (r, dq, idq) in &keyed {
        let better = keyed.iter().filter(|(r2, d2, id2)| r2 == r && (d2 < dq || (d2 == dq && id2 < idq))).count();
        if better < k {
            out.insert(*idq);
        }
    }
    Ok(out)
}

/// Recomputes every peer's neighbour set against all other peers and reports differences.
pub fn check_full_knowledge_equilibrium(topology: &Topology, strategy: &SelectionStrategy) -> Result<OracleReport> {
    let peers = topology.peers();
    let d = peers.first().map_or(0, |p| p.coord.dims());
    let mut report = OracleReport::new("full_knowledge_equilibrium", peers.len(), d);
    for p in peers {
        let others: Vec<&Peer> = peers.iter().filter(|q| q.id != p.id).collect();
        let expected = brute_k_closest(p, &others, strategy)?;
        let actual: BTreeSet<PeerId> = topology.out_neighbors(p.id).unwrap_or_default().into_iter().collect();
        if expected != actual {
            report.flag(p.id, format!("{expected:?}"), format!("{actual:?}"));
        }
    }
    Ok(report)
}

fn subset(a: &HyperRect, b: &HyperRect) -> bool {
    a.sides().iter().zip(b.sides()).all(|(x, y)| {
        let lo = x.lo > y.lo || (x.lo == y.lo && (x.lo_open || !y.lo_open));
        let hi = x.hi < y.hi || (x.hi == y.hi && (x.hi_open || !y.hi_open));
        lo && hi
    })
}

/// Re-derives delivery from the message log and checks it against the tree's claims.
pub fn check_delivery(tree: &MulticastTree, peers: &[Peer]) -> Result<OracleReport> {
    let d = peers.first().map_or(0, |p| p.coord.dims());
    let mut report = OracleReport::new("delivery", peers.len(), d);
    let by_id: BTreeMap<PeerId, &Peer> = peers.iter().map(|p| (p.id, p)).collect();
    let all: BTreeSet<PeerId> = by_id.keys().copied().collect();
    let reached: BTreeSet<PeerId> = tree.zone_trace.keys().copied().collect();

    for id in reached.intersection(&tree.unreached) {
        report.flag(*id, "reached xor unreached", "both");
    }
    for id in all.iter().filter(|id| !reached.contains(id) && !tree.unreached.contains(id)) {
        report.flag(*id, "reached or unreached", "neither");
    }
    for id in reached.union(&tree.unreached).filter(|id| !all.contains(id)) {
        report.flag(*id, "known peer", "unknown id");
    }
    if !reached.contains(&tree.root) {
        report.flag(tree.root, "root reached", "root missing");
    }

    // First message to each destination is its delivery; later ones are duplicates.
    let mut first: BTreeMap<PeerId, usize> = BTreeMap::new();
    for (i, m) in tree.messages.iter().enumerate() {
        first.entry(m.to).or_insert(i);
    }
    let expected_dups = tree.messages.len() - first.len();
    if tree.duplicates != expected_dups || tree.messages_sent != tree.messages.len() {
        report.flag(
            tree.root,
            format!("sent={} duplicates={}", tree.messages.len(), expected_dups),
            format!("sent={} duplicates={}", tree.messages_sent, tree.duplicates),
        );
    }
    if first.contains_key(&tree.root) {
        report.flag(tree.root, "root receives no message", "root was messaged");
    }

    for &id in &reached {
        let Some(zone) = tree.zone_trace.get(&id) else { continue };
        if let Some(p) = by_id.get(&id) {
            if !contains(zone.rect(), &p.coord)? {
                report.flag(id, "inside received zone", format!("outside {}", zone.rect()));
            }
        }
        if id == tree.root {
            if !zone.rect().is_all_space() {
                report.flag(id, "root zone is all space", format!("{}", zone.rect()));
            }
            continue;
        }
        // Walk to the root; every hop must be backed by a logged message.
        let mut cur = id;
        let mut hops = 0usize;
        while cur != tree.root {
            let Some(&idx) = first.get(&cur) else {
                report.flag(id, "delivery path to root", format!("no message reaches {cur}"));
                break;
            };
            let m = &tree.messages[idx];
            if tree.parent.get(&cur) != Some(&m.from) {
                report.flag(id, format!("parent of {cur} = {}", m.from), format!("{:?}", tree.parent.get(&cur)));
                break;
            }
            if cur == id {
                if tree.zone_trace.get(&cur) != Some(&m.zone) {
                    report.flag(id, "zone as sent", "zone differs from message");
                }
                if let Some(pz) = tree.zone_trace.get(&m.from) {
                    if !subset(m.zone.rect(), pz.rect()) {
                        report.flag(id, "zone within parent's zone", "not nested");
                    }
                }
            }
            cur = m.from;
            hops += 1;
            if hops > tree.messages.len() {
                report.flag(id, "acyclic delivery", "cycle");
                break;
            }
        }
    }
    Ok(report)
}
