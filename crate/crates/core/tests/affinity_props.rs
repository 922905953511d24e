use std::collections::BTreeMap;

use chppi_core::affinity::{
    propagate_affinity, tally_antenna_tuples, HomeAssignment, SeedAffinity, SelfInclusion, SocialGraph,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Toy {
    n: usize,
    adjacency: Vec<Vec<bool>>,
    home: Vec<Option<usize>>,
    seed: Vec<u8>,
}

fn toy() -> impl Strategy<Value = Toy> {
    (2usize..=12, 1usize..=5).prop_flat_map(|(n, antennas)| {
        (
            proptest::collection::vec(any::<bool>(), n * n),
            proptest::collection::vec(proptest::option::weighted(0.85, 0..antennas), n),
            proptest::collection::vec(0u8..=4, antennas),
        )
            .prop_map(move |(bits, home, seed)| {
                let mut adjacency = vec![vec![false; n]; n];
                for i in 0..n {
                    for j in i + 1..n {
                        let e = bits[i * n + j];
                        adjacency[i][j] = e;
                        adjacency[j][i] = e;
                    }
                }
                Toy { n, adjacency, home, seed }
            })
    })
}

fn build(t: &Toy) -> (SocialGraph, HomeAssignment, SeedAffinity) {
    let mut edges = Vec::new();
    for i in 0..t.n {
        for j in i + 1..t.n {
            if t.adjacency[i][j] {
                edges.push(((format!("u{i}"), format!("u{j}")), 1 + (i + j) as u32 % 3));
            }
        }
    }
    let homes = HomeAssignment::from_pairs(
        t.home.iter().enumerate().filter_map(|(i, h)| h.map(|a| (format!("u{i}"), format!("a{a}")))),
    );
    let seeds = t.seed.iter().enumerate().map(|(a, &s)| (format!("a{a}"), s)).collect();
    (SocialGraph::from_edges(edges), homes, seeds)
}

/// Per-node maximum straight from the adjacency matrix.
fn oracle(t: &Toy, policy: SelfInclusion) -> BTreeMap<String, u8> {
    let mut out = BTreeMap::new();
    for u in 0..t.n {
        let Some(h) = t.home[u] else { continue };
        let own = t.seed[h];
        let mut best: Option<u8> = None;
        for v in 0..t.n {
            if t.adjacency[u][v] {
                if let Some(hv) = t.home[v] {
                    best = Some(best.map_or(t.seed[hv], |b| b.max(t.seed[hv])));
                }
            }
        }
        let s = match policy {
            SelfInclusion::Always => Some(best.map_or(own, |b| b.max(own))),
            SelfInclusion::Fallback => Some(best.unwrap_or(own)),
            SelfInclusion::Never => best,
        };
        if let Some(s) = s {
            out.insert(format!("u{u}"), s);
        }
    }
    out
}

proptest! {
    #[test]
    fn propagation_matches_exhaustive_max(t in toy()) {
        let (g, h, s) = build(&t);
        for policy in [SelfInclusion::Never, SelfInclusion::Fallback, SelfInclusion::Always] {
            let p = propagate_affinity(&g, &h, &s, policy);
            prop_assert_eq!(&p.scores, &oracle(&t, policy));
        }
    }

    #[test]
    fn raising_a_seed_never_lowers_a_score(t in toy(), which in 0usize..5, bump in 1u8..=4) {
        let (g, h, s) = build(&t);
        let a = which % t.seed.len();
        let mut raised = s.clone();
        let key = format!("a{a}");
        let v = raised[&key];
        raised.insert(key, (v + bump).min(4));
        for policy in [SelfInclusion::Never, SelfInclusion::Fallback, SelfInclusion::Always] {
            let before = propagate_affinity(&g, &h, &s, policy).scores;
            let after = propagate_affinity(&g, &h, &raised, policy).scores;
            for (u, sb) in &before {
                prop_assert!(after[u] >= *sb, "{} dropped under {:?}", u, policy);
            }
        }
    }

    #[test]
    fn tallies_conserve_scored_users(t in toy()) {
        let (g, h, s) = build(&t);
        let p = propagate_affinity(&g, &h, &s, SelfInclusion::Fallback);
        let ids: Vec<String> = s.keys().cloned().collect();
        let tuples = tally_antenna_tuples(&ids, &h, &p.scores);
        prop_assert_eq!(tuples.len(), ids.len());
        prop_assert_eq!(tuples.iter().map(|t| t.total()).sum::<u64>(), p.scores.len() as u64);
        for tuple in &tuples {
            let residents = p.scores.keys().filter(|u| h.get(u) == Some(tuple.antenna.as_str())).count();
            prop_assert_eq!(tuple.total(), residents as u64);
        }
    }
}
