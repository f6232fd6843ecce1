use std::collections::BTreeSet;

use geocast::geometry::{contains, orthant_of, RegionId};
use geocast::multicast::{build_tree, tree_metrics};
use geocast::oracle::{check_delivery, check_full_knowledge_equilibrium};
use geocast::overlay::{converge, generate_peers, select_neighbors, Distance, GossipConfig};
use geocast::stability::{build_stability_tree, embed_lifetimes, simulate_departures, verify_monotone};
use geocast::{HyperplaneSet, KnowledgeMode, Peer, PeerId, SelectionStrategy, SpaceSpec, StabilityConfig, Topology};
use proptest::prelude::*;

fn full(n: usize, d: usize, seed: u64, strategy: &SelectionStrategy, lifetimes: bool) -> Topology {
    let spec = SpaceSpec::new(d, 1000.0).unwrap();
    let mut peers = generate_peers(n, spec, seed, lifetimes).unwrap();
    if lifetimes {
        peers = embed_lifetimes(&peers, StabilityConfig::default(), spec).unwrap();
    }
    let mut t = Topology::from_peers(peers, KnowledgeMode::Full).unwrap();
    converge(&mut t, &GossipConfig::default(), strategy, 10 * n.max(1)).unwrap();
    t
}

fn strategy_for(choice: u8, k: usize, d: usize) -> SelectionStrategy {
    match choice % 4 {
        0 => SelectionStrategy::EmptyRect,
        1 => SelectionStrategy::OrthogonalHyperplanes { k, distance: Distance::L1 },
        2 => SelectionStrategy::GeneralHyperplanes { planes: HyperplaneSet::all_ternary(d), k, distance: Distance::L2 },
        _ => SelectionStrategy::KClosest { k, distance: Distance::L1 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn empty_rect_is_symmetric_under_full_knowledge(n in 2usize..60, d in 1usize..5, seed in any::<u64>()) {
        let peers = generate_peers(n, SpaceSpec::new(d, 1000.0).unwrap(), seed, false).unwrap();
        let sel: Vec<BTreeSet<PeerId>> = peers
            .iter()
            .map(|p| {
                let others: Vec<&Peer> = peers.iter().filter(|q| q.id != p.id).collect();
                select_neighbors(p, &others, &SelectionStrategy::EmptyRect).unwrap().into_iter().collect()
            })
            .collect();
        for (i, p) in peers.iter().enumerate() {
            for q in &sel[i] {
                prop_assert!(sel[q.0 as usize].contains(&p.id), "{} -> {} not mirrored", p.id, q);
            }
        }
    }

    #[test]
    fn selection_is_bounded_deterministic_and_from_candidates(
        n in 1usize..80, d in 1usize..4, k in 1usize..5, choice in any::<u8>(), seed in any::<u64>(), pick in any::<usize>()
    ) {
        let peers = generate_peers(n, SpaceSpec::new(d, 1000.0).unwrap(), seed, false).unwrap();
        let strategy = strategy_for(choice, k, d);
        let p = &peers[pick % n];
        let others: Vec<&Peer> = peers.iter().filter(|q| q.id != p.id).step_by(1 + pick % 3).collect();
        let a = select_neighbors(p, &others, &strategy).unwrap();
        let b = select_neighbors(p, &others, &strategy).unwrap();
        prop_assert_eq!(&a, &b);
        let ids: BTreeSet<PeerId> = others.iter().map(|q| q.id).collect();
        prop_assert!(a.iter().all(|q| ids.contains(q)));
        if let Some(max) = strategy.max_selected(d) {
            prop_assert!(a.len() <= max);
        }
        if let SelectionStrategy::OrthogonalHyperplanes { k, .. } = strategy {
            prop_assert!(a.len() <= k << d);
        }
    }

    #[test]
    fn converged_gossip_overlay_is_a_fixed_point(n in 1usize..60, d in 1usize..4, seed in any::<u64>(), choice in any::<u8>()) {
        let peers = generate_peers(n, SpaceSpec::new(d, 1000.0).unwrap(), seed, false).unwrap();
        let strategy = strategy_for(choice, 2, d);
        let mut t = Topology::new(KnowledgeMode::Gossip);
        for (i, p) in peers.into_iter().enumerate() {
            let boot = if i == 0 { vec![] } else { vec![PeerId((seed % i as u64) as u32)] };
            t.insert_peer(p, &boot).unwrap();
        }
        let cfg = GossipConfig::default();
        converge(&mut t, &cfg, &strategy, 10 * n).unwrap();
        let before: Vec<_> = t.peers().iter().map(|p| (t.out_neighbors(p.id), t.knowledge(p.id))).collect();
        prop_assert_eq!(converge(&mut t, &cfg, &strategy, 1).unwrap(), 1);
        let after: Vec<_> = t.peers().iter().map(|p| (t.out_neighbors(p.id), t.knowledge(p.id))).collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn multicast_trees_respect_zone_invariants(n in 1usize..120, d in 1usize..5, seed in any::<u64>(), root in any::<usize>(), gossip in any::<bool>()) {
        let strategy = SelectionStrategy::EmptyRect;
        let t = if gossip {
            let peers = generate_peers(n, SpaceSpec::new(d, 1000.0).unwrap(), seed, false).unwrap();
            let mut t = Topology::new(KnowledgeMode::Gossip);
            for (i, p) in peers.into_iter().enumerate() {
                let boot = if i == 0 { vec![] } else { vec![PeerId(i as u32 - 1)] };
                t.insert_peer(p, &boot).unwrap();
            }
            converge(&mut t, &GossipConfig::default(), &strategy, 10 * n).unwrap();
            t
        } else {
            full(n, d, seed, &strategy, false)
        };
        let tree = build_tree(&t, PeerId((root % n) as u32)).unwrap();
        prop_assert_eq!(tree.duplicates, 0);
        prop_assert_eq!(tree.messages_sent, n - 1 - tree.unreached.len());
        prop_assert!(tree_metrics(&tree).children_max <= 1 << d);
        for (id, zone) in &tree.zone_trace {
            prop_assert!(contains(zone.rect(), &t.peer(*id).unwrap().coord).unwrap());
            if let Some(parent) = tree.parent.get(id) {
                prop_assert!(zone.rect().is_subset_of(tree.zone_trace[parent].rect()));
            }
        }
        prop_assert!(check_delivery(&tree, t.peers()).unwrap().passed());
        if !gossip {
            prop_assert!(tree.unreached.is_empty());
        }
    }

    #[test]
    fn stability_trees_are_monotone_and_leaf_departing(n in 1usize..120, d in 2usize..5, k in 1usize..4, seed in any::<u64>()) {
        let t = full(n, d, seed, &SelectionStrategy::OrthogonalHyperplanes { k, distance: Distance::L1 }, true);
        let tree = build_stability_tree(&t).unwrap();
        prop_assert!(verify_monotone(&tree).passed());
        prop_assert_eq!(tree.root_candidates.len(), 1);
        prop_assert!(tree.is_single_tree);
        let dep = simulate_departures(&tree);
        prop_assert_eq!(dep.disconnections, 0);
        prop_assert!(dep.non_leaf_departures.is_empty());
    }
}

#[test]
fn every_occupied_orthant_has_a_neighbour_under_full_empty_rect() {
    for (d, seed) in [(2, 1), (3, 2), (4, 3)] {
        let t = full(300, d, seed, &SelectionStrategy::EmptyRect, false);
        for p in t.peers() {
            let occupied: BTreeSet<RegionId> =
                t.peers().iter().filter(|q| q.id != p.id).map(|q| orthant_of(&p.coord, &q.coord).unwrap()).collect();
            let covered: BTreeSet<RegionId> = t
                .out_neighbors(p.id)
                .unwrap()
                .into_iter()
                .map(|q| orthant_of(&p.coord, &t.peer(q).unwrap().coord).unwrap())
                .collect();
            assert_eq!(occupied, covered, "peer {} d={d}", p.id);
        }
    }
}

#[test]
fn at_most_one_stability_root_at_n300() {
    for d in [2, 3, 5] {
        for k in [1, 3] {
            let t = full(
                300,
                d,
                40 + d as u64,
                &SelectionStrategy::OrthogonalHyperplanes { k, distance: Distance::L1 },
                true,
            );
            let tree = build_stability_tree(&t).unwrap();
            assert_eq!(tree.root_candidates.len(), 1, "d={d} k={k}");
        }
    }
}

#[test]
fn full_knowledge_trees_from_every_root_at_n300() {
    let t = full(300, 3, 11, &SelectionStrategy::EmptyRect, false);
    for p in t.peers() {
        let tree = build_tree(&t, p.id).unwrap();
        assert_eq!(tree.messages_sent, 299);
        assert!(tree.unreached.is_empty());
        assert!(check_delivery(&tree, t.peers()).unwrap().passed());
    }
    assert!(check_full_knowledge_equilibrium(&t, &SelectionStrategy::EmptyRect).unwrap().passed());
}
