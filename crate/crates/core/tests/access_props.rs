use chppi_core::access::{block_travel_times, AccessParams, HealthProvider, ProviderCategory, StreetGraph};
use chppi_core::geo::{sample_points, Point, Polygon};
use chppi_core::seed::keyed_seed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(seed: u64, n: usize, extra: usize) -> (Vec<(String, Point<f64>)>, Vec<(String, String, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<(String, Point<f64>)> =
        (0..n).map(|i| (format!("v{i}"), Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))).collect();
    let mut edges = Vec::new();
    // A random spanning-ish chain plus extra chords; some nodes may stay
    // disconnected when `extra` edges land elsewhere.
    for i in 1..n {
        if rng.gen_bool(0.85) {
            let j = rng.gen_range(0..i);
            edges.push((format!("v{i}"), format!("v{j}"), rng.gen_range(1.0..500.0)));
        }
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        edges.push((format!("v{a}"), format!("v{b}"), rng.gen_range(1.0..500.0)));
    }
    (nodes, edges)
}

/// All-pairs distances by Bellman-Ford relaxation over the raw edge list.
fn bellman_ford(n: usize, edges: &[(usize, usize, f64)], src: usize) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    d[src] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for &(a, b, w) in edges {
            if d[a] + w < d[b] {
                d[b] = d[a] + w;
                changed = true;
            }
            if d[b] + w < d[a] {
                d[a] = d[b] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

#[test]
fn twenty_node_graph_matches_bellman_ford() {
    for seed in 0..10 {
        let (nodes, edges) = random_graph(seed, 20, 12);
        let idx = |s: &str| s[1..].parse::<usize>().unwrap();
        let raw: Vec<(usize, usize, f64)> =
            edges.iter().filter(|(a, b, _)| a != b).map(|(a, b, w)| (idx(a), idx(b), *w)).collect();
        let (g, _) = StreetGraph::new(nodes.clone(), edges.clone()).unwrap();
        let speed = 5.0;
        for s in 0..20 {
            let oracle = bellman_ford(20, &raw, s);
            for t in 0..20 {
                let minutes = g.shortest_path_time(&nodes[s].1, &nodes[t].1, speed).unwrap();
                let expected = oracle[t] / (speed * 1000.0 / 60.0);
                if expected.is_infinite() {
                    assert!(minutes.is_infinite());
                } else {
                    assert!((minutes - expected).abs() < 1e-9, "seed {seed} {s}->{t}: {minutes} vs {expected}");
                }
            }
        }
    }
}

struct City {
    graph: StreetGraph<f64>,
    blocks: Vec<(String, Polygon<f64>)>,
}

/// Square street grid with `step` metre spacing and rectangular blocks
/// between the streets.
fn city(n: usize, step: f64, drop_seed: Option<u64>) -> City {
    let mut rng = drop_seed.map(ChaCha8Rng::seed_from_u64);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            nodes.push((format!("n{i}_{j}"), Point::new(i as f64 * step, j as f64 * step)));
            for (di, dj) in [(1, 0), (0, 1)] {
                if i + di < n && j + dj < n {
                    if let Some(r) = rng.as_mut() {
                        if r.gen_bool(0.15) {
                            continue;
                        }
                    }
                    edges.push((format!("n{i}_{j}"), format!("n{}_{}", i + di, j + dj), step));
                }
            }
        }
    }
    let graph = StreetGraph::new(nodes, edges).unwrap().0;
    let mut blocks = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let (x, y) = (i as f64 * step, j as f64 * step);
            let poly = Polygon::rectangle(Point::new(x + 10.0, y + 10.0), Point::new(x + step - 10.0, y + step - 10.0)).unwrap();
            blocks.push((format!("b{i}_{j}"), poly));
        }
    }
    City { graph, blocks }
}

fn scatter(seed: u64, count: usize, extent: f64) -> Vec<HealthProvider<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| HealthProvider {
            id: format!("p{i:03}"),
            location: Point::new(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)),
            category: ProviderCategory::ALL[i % 3],
        })
        .collect()
}

/// Median over sample points of the time to the closest provider of any
/// category, routing to every provider.
fn exhaustive_delta(c: &City, providers: &[HealthProvider<f64>], params: &AccessParams<f64>, block: usize) -> f64 {
    let (id, poly) = &c.blocks[block];
    let pts = sample_points(poly, params.samples, keyed_seed(params.seed, id)).unwrap().points;
    let mut minima: Vec<f64> = pts
        .iter()
        .map(|p| {
            providers
                .iter()
                .map(|q| c.graph.shortest_path_time(p, &q.location, params.speed_kmh).unwrap())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    minima.sort_by(|a, b| a.partial_cmp(b).unwrap());
    minima[minima.len() / 2]
}

#[test]
fn toy_city_matches_exhaustive_routing() {
    let c = city(5, 200.0, None);
    let providers = vec![
        HealthProvider { id: "h".into(), location: Point::new(0.0, 0.0), category: ProviderCategory::Hospital },
        HealthProvider { id: "c".into(), location: Point::new(800.0, 400.0), category: ProviderCategory::HealthCenter },
        HealthProvider { id: "s".into(), location: Point::new(420.0, 780.0), category: ProviderCategory::SanitaryPost },
    ];
    let blocks = vec![c.blocks[0].clone(), c.blocks[5].clone(), c.blocks[10].clone(), c.blocks[15].clone()];
    let toy = City { graph: c.graph.clone(), blocks };
    let params = AccessParams { seed: 11, ..AccessParams::default() };
    let out = block_travel_times(&toy.blocks, &providers, &toy.graph, &params).unwrap();
    assert_eq!(out.len(), 4);
    for (b, acc) in out.iter().enumerate() {
        let oracle = exhaustive_delta(&toy, &providers, &params, b);
        assert!((acc.delta - oracle).abs() < 1e-9, "{} vs {oracle}", acc.delta);
        assert!(!acc.unreachable);
    }
}

#[test]
fn knn_shortcut_has_no_pruning_misses_on_fixture() {
    let c = city(9, 250.0, Some(4));
    let providers = scatter(8, 45, 2000.0);
    let pruned = AccessParams { seed: 3, ..AccessParams::default() };
    let full = AccessParams { k: usize::MAX, ..pruned };
    let a = block_travel_times(&c.blocks, &providers, &c.graph, &pruned).unwrap();
    let b = block_travel_times(&c.blocks, &providers, &c.graph, &full).unwrap();
    let misses = a.iter().zip(&b).filter(|(x, y)| x.delta != y.delta || x.mean_times != y.mean_times).count();
    assert_eq!(misses, 0);
    for (i, acc) in b.iter().enumerate().step_by(7) {
        let oracle = exhaustive_delta(&c, &providers, &full, i);
        if oracle.is_finite() {
            assert!((acc.delta - oracle).abs() < 1e-9);
        } else {
            assert!(acc.delta.is_infinite() && acc.unreachable);
        }
    }
}

#[test]
fn results_ignore_provider_order_and_thread_count() {
    let c = city(7, 300.0, Some(9));
    let providers = scatter(2, 20, 1800.0);
    let params = AccessParams { seed: 5, ..AccessParams::default() };
    let base = block_travel_times(&c.blocks, &providers, &c.graph, &params).unwrap();
    let mut reversed = providers.clone();
    reversed.reverse();
    assert_eq!(block_travel_times(&c.blocks, &reversed, &c.graph, &params).unwrap(), base);
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = pool.install(|| block_travel_times(&c.blocks, &providers, &c.graph, &params).unwrap());
        assert_eq!(out, base);
    }
}

#[test]
fn lone_provider_fills_only_its_category() {
    let c = city(4, 200.0, None);
    let providers = vec![HealthProvider { id: "only".into(), location: Point::new(300.0, 300.0), category: ProviderCategory::HealthCenter }];
    let out = block_travel_times(&c.blocks, &providers, &c.graph, &AccessParams::default()).unwrap();
    for acc in &out {
        assert!(acc.mean_time(ProviderCategory::Hospital).is_none());
        assert!(acc.mean_time(ProviderCategory::SanitaryPost).is_none());
        assert_eq!(acc.nearest[1].as_deref(), Some("only"));
        assert!(acc.delta.is_finite() && acc.delta >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adding_a_provider_never_raises_delta(seed in any::<u64>(), x in 0.0f64..1500.0, y in 0.0f64..1500.0, cat in 0usize..3) {
        let c = city(6, 300.0, Some(seed));
        let providers = scatter(seed ^ 0x55, 6, 1500.0);
        let params = AccessParams { k: usize::MAX, seed, ..AccessParams::default() };
        let before = block_travel_times(&c.blocks, &providers, &c.graph, &params).unwrap();
        let mut more = providers.clone();
        more.push(HealthProvider { id: "extra".into(), location: Point::new(x, y), category: ProviderCategory::ALL[cat] });
        let after = block_travel_times(&c.blocks, &more, &c.graph, &params).unwrap();
        for (a, b) in before.iter().zip(&after) {
            prop_assert!(b.delta <= a.delta);
        }
    }
}
