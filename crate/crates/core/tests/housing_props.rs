use std::collections::BTreeMap;

use chppi_core::geo::{Point, Polygon, VoronoiDiagram};
use chppi_core::housing::{
    aggregate_to_antennas, fit_mca, quartile_partition, score_blocks, BlockHousing, Ceiling, Floor, HousingRecord,
    McaModel, Profile, Roof, Variable,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rec(block: &str, p: Profile, h: u32) -> HousingRecord {
    HousingRecord { block: block.into(), profile: p, households: h }
}

fn six_profiles() -> Vec<HousingRecord> {
    use Ceiling::*;
    use Floor::*;
    use Roof::*;
    vec![
        rec("b0", Profile::new(CeramicWood, TileSlab, Yes), 9),
        rec("b1", Profile::new(CementFixedBrick, MetalSheet, Yes), 7),
        rec("b2", Profile::new(CementFixedBrick, MetalSheet, No), 5),
        rec("b3", Profile::new(SoilLooseBrick, MetalSheet, No), 4),
        rec("b4", Profile::new(SoilLooseBrick, ReedStraw, No), 6),
        rec("b5", Profile::new(CeramicWood, ReedStraw, Yes), 2),
    ]
}

/// Leading principal row coordinates from a dense SVD of the residual matrix
/// built over one indicator row per household.
fn svd_oracle(records: &[HousingRecord]) -> (Vec<f64>, f64) {
    let mut cols: Vec<(Variable, u8)> = Vec::new();
    for v in Variable::ALL {
        let mut codes: Vec<u8> = records.iter().map(|r| r.profile.code(v)).collect();
        codes.sort();
        codes.dedup();
        cols.extend(codes.into_iter().map(|c| (v, c)));
    }
    let mut z: Vec<Vec<f64>> = Vec::new();
    let mut owner = Vec::new();
    for (k, r) in records.iter().enumerate() {
        for _ in 0..r.households {
            z.push(cols.iter().map(|&(v, c)| if r.profile.code(v) == c { 1.0 } else { 0.0 }).collect());
            owner.push(k);
        }
    }
    let (n, j) = (z.len(), cols.len());
    let grand: f64 = z.iter().flatten().sum();
    let p = DMatrix::from_fn(n, j, |a, b| z[a][b] / grand);
    let r: Vec<f64> = (0..n).map(|a| p.row(a).sum()).collect();
    let c: Vec<f64> = (0..j).map(|b| p.column(b).sum()).collect();
    let s = DMatrix::from_fn(n, j, |a, b| (p[(a, b)] - r[a] * c[b]) / (r[a] * c[b]).sqrt());
    let svd = s.svd(true, false);
    let (k, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let u = svd.u.unwrap();
    let mut per_record = vec![0.0; records.len()];
    for (row, &k_rec) in owner.iter().enumerate() {
        per_record[k_rec] = u[(row, k)] * sigma / r[row].sqrt();
    }
    (per_record, sigma)
}

#[test]
fn six_profile_scores_match_dense_svd() {
    let recs = six_profiles();
    let m: McaModel<f64> = fit_mca(&recs).unwrap();
    let (oracle, sigma) = svd_oracle(&recs);
    assert!((m.singular_values()[0] - sigma).abs() < 1e-8);
    let ours: Vec<f64> = recs.iter().map(|r| m.score(&r.profile).unwrap()).collect();
    let sign = if ours[0] * oracle[0] < 0.0 { -1.0 } else { 1.0 };
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - sign * b).abs() < 1e-8, "{a} vs {b}");
    }
    assert!(m.score(&Profile::FAVOURABLE).unwrap() > 0.0);
}

#[test]
fn single_precision_agrees_with_double() {
    let recs = six_profiles();
    let m64: McaModel<f64> = fit_mca(&recs).unwrap();
    let m32: McaModel<f32> = fit_mca(&recs).unwrap();
    for r in &recs {
        let (a, b) = (m64.score(&r.profile).unwrap(), m32.score(&r.profile).unwrap() as f64);
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn ten_block_means_by_direct_recomputation() {
    let base = six_profiles();
    let m: McaModel<f64> = fit_mca(&base).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut recs = Vec::new();
    for b in 0..10 {
        for _ in 0..rng.gen_range(1..4) {
            let p = base[rng.gen_range(0..base.len())].profile;
            recs.push(rec(&format!("blk{b}"), p, rng.gen_range(1..20)));
        }
    }
    let scores = score_blocks(&m, &recs);
    assert_eq!(scores.blocks.len(), 10);
    for b in 0..10 {
        let id = format!("blk{b}");
        let mine: Vec<&HousingRecord> = recs.iter().filter(|r| r.block == id).collect();
        let w: f64 = mine.iter().map(|r| r.households as f64).sum();
        let s: f64 = mine.iter().map(|r| r.households as f64 * m.score(&r.profile).unwrap()).sum();
        assert!((scores.blocks[&id].score - s / w).abs() < 1e-12);
    }
}

/// Households from a one-dimensional latent risk: each variable picks a
/// category along an ordered ladder that ends in the favourable one.
fn latent_records(seed: u64, blocks: usize) -> Vec<HousingRecord> {
    let floors = [Floor::CeramicWood, Floor::CementFixedBrick, Floor::SoilLooseBrick];
    let roofs = [Roof::TileSlab, Roof::MetalSheet, Roof::Cardboard, Roof::ReedStraw];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for b in 0..blocks {
        let centre: f64 = rng.gen();
        for _ in 0..rng.gen_range(10..30) {
            let z = (centre + 0.15 * (rng.gen::<f64>() - 0.5)).clamp(0.0, 0.999);
            let f = floors[(z * floors.len() as f64) as usize];
            let r = roofs[(z * roofs.len() as f64) as usize];
            let c = if z > 0.55 { Ceiling::No } else { Ceiling::Yes };
            out.push(rec(&format!("b{b}"), Profile::new(f, r, c), 1));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fit_ignores_record_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let recs = latent_records(seed, 12);
        let mut permuted = recs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for i in (1..permuted.len()).rev() {
            permuted.swap(i, rng.gen_range(0..=i));
        }
        let a: McaModel<f64> = fit_mca(&recs).unwrap();
        let b: McaModel<f64> = fit_mca(&permuted).unwrap();
        for r in &recs {
            let (x, y) = (a.score(&r.profile).unwrap(), b.score(&r.profile).unwrap());
            prop_assert!((x.abs() - y.abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn swapping_towards_a_favourable_category_never_lowers_a_block(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let recs = latent_records(seed, 15);
        let m: McaModel<f64> = fit_mca(&recs).unwrap();
        let before = score_blocks(&m, &recs);
        let i = pick.index(recs.len());
        for &v in m.active_variables() {
            let fav = v.favourable();
            if m.coordinate(v, fav).is_none() {
                continue;
            }
            let mut swapped = recs.clone();
            swapped[i].profile = swapped[i].profile.with_code(v, fav).unwrap();
            let after = score_blocks(&m, &swapped);
            let b = &recs[i].block;
            prop_assert!(after.blocks[b].score >= before.blocks[b].score - 1e-12);
        }
    }

    #[test]
    fn quartiles_match_sort_oracle(values in proptest::collection::vec(0u32..40, 100)) {
        let antennas: Vec<(String, Point<f64>)> =
            (0..100).map(|i| (format!("a{i:03}"), Point::new(i as f64, 0.0))).collect();
        let map: BTreeMap<String, f64> =
            antennas.iter().zip(&values).map(|((id, _), v)| (id.clone(), *v as f64)).collect();
        let endemic = Polygon::rectangle(Point::new(-1.0, -1.0), Point::new(100.0, 1.0)).unwrap();
        let q = quartile_partition(&map, &antennas, &endemic).unwrap();
        let mut sorted: Vec<f64> = values.iter().map(|v| *v as f64).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (id, v) in &map {
            let first = sorted.iter().position(|s| s == v).unwrap();
            let expected = if first < 25 { 1 } else if first < 50 { 2 } else if first < 75 { 3 } else { 4 };
            prop_assert_eq!(q[id], expected);
        }
        let mut sizes = [0usize; 4];
        let distinct = { let mut d = sorted.clone(); d.dedup(); d.len() == sorted.len() };
        for v in q.values() { sizes[*v as usize - 1] += 1; }
        if distinct {
            prop_assert!(sizes.iter().all(|&s| s == 25));
        }
    }

    #[test]
    fn households_are_conserved(
        sites in proptest::collection::btree_set((1u32..99, 1u32..59), 1..12),
        rects in proptest::collection::vec((0.0f64..90.0, 0.0f64..50.0, 0.5f64..10.0, 0.5f64..10.0, 1u32..50), 1..15),
    ) {
        let clip = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(100.0, 60.0)).unwrap();
        let sites: Vec<(String, Point<f64>)> =
            sites.iter().map(|&(x, y)| (format!("s{x}_{y}"), Point::new(x as f64, y as f64))).collect();
        let d = VoronoiDiagram::build(&sites, clip).unwrap();
        let mut blocks = Vec::new();
        let mut scores = BTreeMap::new();
        let mut total = 0.0;
        for (k, &(x, y, w, h, hh)) in rects.iter().enumerate() {
            let id = format!("b{k}");
            blocks.push((id.clone(), Polygon::rectangle(Point::new(x, y), Point::new(x + w, y + h)).unwrap()));
            scores.insert(id, BlockHousing { score: k as f64, households: hh as f64 });
            total += hh as f64;
        }
        let out = aggregate_to_antennas(&scores, &d, &blocks);
        let apportioned: f64 = out.households.values().sum();
        prop_assert!((apportioned - total).abs() <= 1e-6 * total);
    }
}

#[test]
fn three_antennas_five_blocks_by_strip_apportionment() {
    // Sites on a horizontal line: cells are vertical strips split at the
    // midpoints, so shares of axis-aligned blocks are interval overlaps.
    let xs = [2.0, 6.0, 14.0];
    let cuts = [0.0, 4.0, 10.0, 20.0];
    let clip = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(20.0, 10.0)).unwrap();
    let sites: Vec<(String, Point<f64>)> = xs.iter().enumerate().map(|(i, &x)| (format!("a{i}"), Point::new(x, 5.0))).collect();
    let d = VoronoiDiagram::build(&sites, clip).unwrap();
    let spec = [(1.0, 3.0, 0.2, 10.0), (3.0, 7.0, 0.9, 4.0), (2.0, 16.0, 0.5, 30.0), (11.0, 19.0, 0.1, 8.0), (9.0, 11.0, 0.7, 6.0)];
    let mut blocks = Vec::new();
    let mut scores = BTreeMap::new();
    for (k, &(x0, x1, s, h)) in spec.iter().enumerate() {
        let id = format!("b{k}");
        blocks.push((id.clone(), Polygon::rectangle(Point::new(x0, 2.0), Point::new(x1, 7.0)).unwrap()));
        scores.insert(id, BlockHousing { score: s, households: h });
    }
    let out = aggregate_to_antennas(&scores, &d, &blocks);
    for i in 0..3 {
        let (lo, hi) = (cuts[i], cuts[i + 1]);
        let mut num = 0.0;
        let mut den = 0.0;
        for &(x0, x1, s, h) in &spec {
            let share = ((x1 as f64).min(hi) - (x0 as f64).max(lo)).max(0.0) / (x1 - x0);
            num += s * h * share;
            den += h * share;
        }
        let id = format!("a{i}");
        assert!((out.households[&id] - den).abs() < 1e-9);
        assert!((out.values[&id] - num / den).abs() < 1e-12);
    }
}
