//! Synthetic world with planted structure and its ground truth.
//!
//! Blocks are 200 m squares on a 250 m pitch whose gaps are streets.
//! Antennas sit on a 750 m lattice so every Voronoi cell boundary lies on a
//! street line and each block belongs to exactly one cell. The left part of
//! the map is the endemic region. Outside it, users in the lower half of the
//! antenna rows call endemic users with a configured probability; users in
//! the upper half never do.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use chppi_core::Point;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Inputs, PipelineConfig};
use crate::error::{CliError, Result};
use crate::io::{self, fmt_f64, write_csv};
use crate::projection::Projection;

const PITCH: f64 = 250.0;
const INSET: f64 = 25.0;
const ANTENNA_PITCH: f64 = 750.0;
const LOCALITY_TILE: usize = 5;
/// Ordinal levels of the household variables.
pub const SEI_LEVELS: [usize; 11] = [3, 3, 3, 3, 4, 3, 5, 4, 3, 3, 5];
pub const TRUTH_DIR: &str = "truth";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub blocks: usize,
    pub users: usize,
    pub providers: usize,
}

impl Default for Scale {
    fn default() -> Self {
        Scale { blocks: 500, users: 10_000, providers: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub scale: Scale,
    /// Chance that a call by a contact-population user goes to an endemic user.
    pub contact_prob: f64,
    pub households_per_block: usize,
    pub centre: (f64, f64),
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 1,
            scale: Scale::default(),
            contact_prob: 0.3,
            households_per_block: 8,
            centre: (-60.0, -27.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Endemic,
    Contact,
    Null,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Endemic => "endemic",
            Group::Contact => "contact",
            Group::Null => "null",
        }
    }
}

/// Row counts of every generated file, keyed like the manifest inputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorldSummary {
    pub blocks: usize,
    pub antennas: usize,
    pub endemic_antennas: usize,
    pub users: usize,
    pub calls: usize,
    pub self_call_records: usize,
    pub unknown_tower_records: usize,
    pub housing_records: usize,
    pub providers: usize,
    pub discard_providers: usize,
    pub street_nodes: usize,
    pub street_edges: usize,
    pub duplicate_edges: usize,
    pub self_loop_edges: usize,
    pub households: usize,
    pub orphan_households: usize,
}

struct Layout {
    cols: usize,
    rows: usize,
    n_blocks: usize,
    ax: usize,
    ay: usize,
    endemic_x: f64,
}

impl Layout {
    fn new(blocks: usize) -> Result<Self> {
        let rows = ((blocks as f64 * 0.8).sqrt().round() as usize).max(2);
        let cols = blocks.div_ceil(rows);
        let ax = ((cols as f64 * PITCH - ANTENNA_PITCH / 2.0) / ANTENNA_PITCH).floor() as usize + 1;
        let ay = ((rows as f64 * PITCH - ANTENNA_PITCH / 2.0) / ANTENNA_PITCH).floor() as usize + 1;
        let endemic_cols = ((cols as f64 / 6.0).round() as usize).max(1);
        let layout = Layout { cols, rows, n_blocks: blocks, ax, ay, endemic_x: endemic_cols as f64 * ANTENNA_PITCH };
        if blocks < 10 || endemic_cols * ay < 4 || ax <= endemic_cols || ay < 2 {
            return Err(scale_too_small(format!(
                "{blocks} blocks give {} endemic antennas and {} antenna columns; need at least 4 endemic antennas, one \
                 non-endemic column and two rows",
                endemic_cols * ay,
                ax
            )));
        }
        Ok(layout)
    }

    fn block_origin(&self, b: usize) -> (f64, f64) {
        ((b % self.cols) as f64 * PITCH, (b / self.cols) as f64 * PITCH)
    }

    fn block_antenna(&self, b: usize) -> (usize, usize) {
        let (x, y) = self.block_origin(b);
        let c = |v: f64, n: usize| (((v + PITCH / 2.0) / ANTENNA_PITCH).floor() as usize).min(n - 1);
        (c(x, self.ax), c(y, self.ay))
    }

    fn antenna_point(&self, i: usize, j: usize) -> Point {
        Point::new(ANTENNA_PITCH / 2.0 + ANTENNA_PITCH * i as f64, ANTENNA_PITCH / 2.0 + ANTENNA_PITCH * j as f64)
    }

    fn antenna_endemic(&self, i: usize) -> bool {
        self.antenna_point(i, 0).x < self.endemic_x
    }

    fn group(&self, (i, j): (usize, usize)) -> Group {
        if self.antenna_endemic(i) {
            Group::Endemic
        } else if j < self.ay.div_ceil(2) {
            Group::Contact
        } else {
            Group::Null
        }
    }
}

fn scale_too_small(msg: String) -> CliError {
    CliError::Validation(format!("ScaleTooSmall: {msg}"))
}

fn antenna_id(i: usize, j: usize) -> String {
    format!("A{i:02}_{j:02}")
}

fn block_id(b: usize) -> String {
    format!("B{b:04}")
}

fn node_id(i: usize, j: usize) -> String {
    format!("N{i:03}_{j:03}")
}

struct Writer<'a> {
    proj: &'a Projection,
}

impl Writer<'_> {
    fn lonlat(&self, p: Point) -> [String; 2] {
        let (lon, lat) = self.proj.inverse(&p);
        [fmt_f64(lon), fmt_f64(lat)]
    }
}

struct User {
    id: String,
    antenna: usize,
    group: Group,
}

fn ts(base: NaiveDateTime, day: i64, hour: i64, minute: i64) -> String {
    (base + Duration::days(day) + Duration::hours(hour) + Duration::minutes(minute)).format("%Y-%m-%d %H:%M:%S").to_string()
}

/// Writes the world into `dir` together with `config.toml` and the
/// ground truth, and returns the row counts.
pub fn generate(dir: &Path, params: &SynthParams) -> Result<WorldSummary> {
    let scale = params.scale;
    let layout = Layout::new(scale.blocks)?;
    if scale.users < 20 {
        return Err(scale_too_small(format!("{} users; need at least 20", scale.users)));
    }
    if scale.providers < 3 {
        return Err(scale_too_small(format!("{} providers; need at least 3", scale.providers)));
    }
    if !(0.0..=1.0).contains(&params.contact_prob) {
        return Err(CliError::Validation(format!("contact probability {} outside [0, 1]", params.contact_prob)));
    }
    let io_err = |p: &Path, e: std::io::Error| CliError::Validation(format!("cannot write {}: {e}", p.display()));
    let truth = dir.join(TRUTH_DIR);
    std::fs::create_dir_all(&truth).map_err(|e| io_err(&truth, e))?;

    let proj = Projection::new(params.centre.0, params.centre.1);
    let w = Writer { proj: &proj };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut sum = WorldSummary::default();
    let (width, height) = (layout.cols as f64 * PITCH, layout.rows as f64 * PITCH);

    // Blocks.
    let pop_dist = LogNormal::new(600f64.ln(), 0.5).expect("valid lognormal");
    let populations: Vec<f64> = (0..layout.n_blocks).map(|_| pop_dist.sample(&mut rng).round().max(1.0)).collect();
    let tiles_x = layout.cols.div_ceil(LOCALITY_TILE);
    let mut features = Vec::with_capacity(layout.n_blocks);
    let mut block_rows = Vec::with_capacity(layout.n_blocks);
    for b in 0..layout.n_blocks {
        let (x0, y0) = layout.block_origin(b);
        let poly = chppi_core::Polygon::rectangle(
            Point::new(x0 + INSET, y0 + INSET),
            Point::new(x0 + PITCH - INSET, y0 + PITCH - INSET),
        )
        .expect("non-degenerate block");
        let (tx, ty) = ((b % layout.cols) / LOCALITY_TILE, (b / layout.cols) / LOCALITY_TILE);
        let locality = format!("L{:03}", ty * tiles_x + tx);
        let province = format!("P{ty:02}");
        let mut props = serde_json::Map::new();
        props.insert("block_id".into(), json!(block_id(b)));
        props.insert("locality_id".into(), json!(locality));
        props.insert("province_id".into(), json!(province));
        props.insert("population".into(), json!(populations[b]));
        features.push(io::polygon_feature(&poly, &proj, props));
        let (i, j) = layout.block_antenna(b);
        block_rows.push(vec![
            block_id(b),
            antenna_id(i, j),
            layout.group((i, j)).as_str().to_string(),
            fmt_f64(populations[b]),
        ]);
    }
    sum.blocks = io::write_geojson(&dir.join("blocks.geojson"), features)?;
    write_csv(&truth.join("blocks.csv"), &["block_id", "antenna_id", "group", "population"], block_rows)?;

    let region = chppi_core::Polygon::rectangle(Point::new(-1000.0, -1000.0), Point::new(layout.endemic_x, height + 1000.0))
        .expect("non-degenerate region");
    let mut props = serde_json::Map::new();
    props.insert("name".into(), json!("endemic"));
    io::write_geojson(&dir.join("endemic_region.geojson"), vec![io::polygon_feature(&region, &proj, props)])?;

    // Antennas.
    let mut antenna_rows = Vec::new();
    for j in 0..layout.ay {
        for i in 0..layout.ax {
            let [lon, lat] = w.lonlat(layout.antenna_point(i, j));
            antenna_rows.push(vec![antenna_id(i, j), lon, lat]);
            sum.endemic_antennas += layout.antenna_endemic(i) as usize;
        }
    }
    sum.antennas = write_csv(&dir.join("antennas.csv"), &["antenna_id", "lon", "lat"], antenna_rows)?;
    let n_antennas = layout.ax * layout.ay;
    let antenna_index = |(i, j): (usize, usize)| j * layout.ax + i;
    let antenna_name = |a: usize| antenna_id(a % layout.ax, a / layout.ax);

    // Users, placed in blocks in proportion to population.
    let by_pop = WeightedIndex::new(&populations).expect("positive populations");
    let users: Vec<User> = (0..scale.users)
        .map(|u| {
            let cell = layout.block_antenna(by_pop.sample(&mut rng));
            User { id: format!("U{u:06}"), antenna: antenna_index(cell), group: layout.group(cell) }
        })
        .collect();
    let endemic: Vec<usize> = (0..users.len()).filter(|&u| users[u].group == Group::Endemic).collect();
    let outside: Vec<usize> = (0..users.len()).filter(|&u| users[u].group != Group::Endemic).collect();
    if endemic.len() < 2 || outside.len() < 2 {
        return Err(scale_too_small("need at least two users inside and outside the endemic region".into()));
    }
    write_csv(
        &truth.join("homes.csv"),
        &["user_id", "antenna_id", "group"],
        users.iter().map(|u| vec![u.id.clone(), antenna_name(u.antenna), u.group.as_str().to_string()]),
    )?;

    // Calls. Every call yields an outgoing record on the caller's tower and
    // an incoming record on the callee's.
    let base = NaiveDate::from_ymd_opt(2024, 3, 4).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let mut calls: Vec<[String; 6]> = Vec::new();
    let record = |calls: &mut Vec<[String; 6]>, u: &User, v: &User, when: String, dur: u32, tu: String, tv: String| {
        calls.push([u.id.clone(), v.id.clone(), "outgoing".into(), when.clone(), dur.to_string(), tu]);
        calls.push([u.id.clone(), v.id.clone(), "incoming".into(), when, dur.to_string(), tv]);
    };
    for u in 0..users.len() {
        let me = &users[u];
        let partner = |rng: &mut ChaCha8Rng| loop {
            let pool = match me.group {
                Group::Endemic => &endemic,
                Group::Contact if rng.gen_bool(params.contact_prob) => &endemic,
                _ => &outside,
            };
            let v = pool[rng.gen_range(0..pool.len())];
            if v != u {
                return v;
            }
        };
        let night = |rng: &mut ChaCha8Rng| {
            let week = rng.gen_range(0..2) * 7;
            if rng.gen_bool(0.5) {
                ts(base, week + rng.gen_range(0..4), rng.gen_range(20..24), rng.gen_range(0..60))
            } else {
                ts(base, week + rng.gen_range(1..5), rng.gen_range(0..6), rng.gen_range(0..60))
            }
        };
        for _ in 0..rng.gen_range(5..=8) {
            let v = partner(&mut rng);
            let when = night(&mut rng);
            let dur = rng.gen_range(10..600);
            record(&mut calls, me, &users[v], when, dur, antenna_name(me.antenna), antenna_name(users[v].antenna));
        }
        if rng.gen_bool(0.5) {
            let v = partner(&mut rng);
            let away = (me.antenna + rng.gen_range(1..n_antennas)) % n_antennas;
            let when = night(&mut rng);
            let dur = rng.gen_range(10..600);
            record(&mut calls, me, &users[v], when, dur, antenna_name(away), antenna_name(users[v].antenna));
        }
        for _ in 0..rng.gen_range(2..=4) {
            let v = partner(&mut rng);
            let when = ts(base, rng.gen_range(0..12), rng.gen_range(9..18), rng.gen_range(0..60));
            let (ta, tb) = (rng.gen_range(0..n_antennas), rng.gen_range(0..n_antennas));
            let dur = rng.gen_range(10..600);
            record(&mut calls, me, &users[v], when, dur, antenna_name(ta), antenna_name(tb));
        }
        if rng.gen_bool(0.2) {
            // Saturday night, outside the weeknight window.
            let v = partner(&mut rng);
            let when = ts(base, 5, 22, rng.gen_range(0..60));
            let dur = rng.gen_range(10..600);
            let ta = rng.gen_range(0..n_antennas);
            record(&mut calls, me, &users[v], when, dur, antenna_name(ta), antenna_name(users[v].antenna));
        }
    }
    let n_noise = (users.len() / 500).max(1);
    for k in 0..n_noise {
        let u = &users[k];
        calls.push([u.id.clone(), u.id.clone(), "outgoing".into(), ts(base, 1, 21, 0), "5".into(), antenna_name(u.antenna)]);
        sum.self_call_records += 1;
        let v = &users[k + 1];
        calls.push([u.id.clone(), v.id.clone(), "outgoing".into(), ts(base, 2, 11, 0), "5".into(), "A_UNKNOWN".into()]);
        sum.unknown_tower_records += 1;
    }
    sum.users = users.len();
    sum.calls = write_csv(
        &dir.join("calls.csv"),
        &["originator", "destinatary", "direction", "timestamp", "duration", "tower"],
        calls.into_iter().map(Vec::from),
    )?;

    // Housing profiles from a per-block latent risk; endemic blocks run higher.
    let mut housing: BTreeMap<(usize, &str, &str, &str), u32> = BTreeMap::new();
    const FLOORS: [&str; 4] = ["ceramic_wood", "cement_brick", "soil_loose_brick", "other"];
    const ROOFS: [&str; 8] = [
        "asphalt_membrane",
        "tile_slab",
        "slate_tile",
        "metal_sheet",
        "fiber_cement_plastic",
        "cardboard",
        "reed_straw",
        "other",
    ];
    for b in 0..layout.n_blocks {
        let (i, _) = layout.block_antenna(b);
        let z: f64 = rng.sample::<f64, _>(StandardNormal) + if layout.antenna_endemic(i) { 0.5 } else { -0.3 };
        for _ in 0..rng.gen_range(15..30) {
            let h = z + 0.6 * rng.sample::<f64, _>(StandardNormal);
            let noisy = rng.gen_bool(0.05);
            let floor = if noisy {
                FLOORS[rng.gen_range(0..4)]
            } else if h > 0.8 {
                "soil_loose_brick"
            } else if h > -0.6 {
                "cement_brick"
            } else {
                "ceramic_wood"
            };
            let roof = if noisy {
                ROOFS[rng.gen_range(0..8)]
            } else if h > 1.0 {
                "reed_straw"
            } else if h > 0.4 {
                "cardboard"
            } else if h > -0.3 {
                "metal_sheet"
            } else if h > -0.9 {
                "fiber_cement_plastic"
            } else {
                "tile_slab"
            };
            let ceiling = if (h > 0.3) != (noisy && rng.gen_bool(0.5)) { "no" } else { "yes" };
            *housing.entry((b, floor, roof, ceiling)).or_default() += 1;
        }
    }
    sum.housing_records = write_csv(
        &dir.join("housing.csv"),
        &["block_id", "floor", "roof", "ceiling", "households"],
        housing.iter().map(|((b, f, r, c), n)| vec![block_id(*b), f.to_string(), r.to_string(), c.to_string(), n.to_string()]),
    )?;

    // Street grid on the block gaps, plus one duplicate edge and one self-loop.
    let (nx, ny) = (layout.cols + 1, layout.rows + 1);
    let mut node_rows = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let [lon, lat] = w.lonlat(Point::new(i as f64 * PITCH, j as f64 * PITCH));
            node_rows.push(vec![node_id(i, j), lon, lat]);
        }
    }
    sum.street_nodes = write_csv(&dir.join("street_nodes.csv"), &["node_id", "lon", "lat"], node_rows)?;
    let len = fmt_f64(PITCH);
    let mut edges = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                edges.push(vec![node_id(i, j), node_id(i + 1, j), len.clone()]);
            }
            if j + 1 < ny {
                edges.push(vec![node_id(i, j), node_id(i, j + 1), len.clone()]);
            }
        }
    }
    edges.push(vec![node_id(1, 0), node_id(0, 0), len.clone()]);
    edges.push(vec![node_id(0, 0), node_id(0, 0), "0".into()]);
    sum.duplicate_edges = 1;
    sum.self_loop_edges = 1;
    sum.street_edges = write_csv(&dir.join("street_edges.csv"), &["from", "to", "length_m"], edges)?;

    // Providers on street nodes in the lower 60% of the map, so the top rows
    // are remote. One in ten is a non-clinical facility.
    let kinds = ["Hospital Regional", "Centro de Salud", "Puesto Sanitario"];
    let max_j = ((ny as f64) * 0.6).floor().max(1.0) as usize;
    let mut provider_rows = Vec::with_capacity(scale.providers);
    for k in 0..scale.providers {
        let (i, j) = (rng.gen_range(0..nx), rng.gen_range(0..max_j));
        let p = Point::new(i as f64 * PITCH, j as f64 * PITCH);
        let label = if k >= 3 && k % 10 == 9 {
            sum.discard_providers += 1;
            format!("Hogar Geriatrico {k}")
        } else {
            format!("{} {k}", kinds[k % 3])
        };
        let [lon, lat] = w.lonlat(p);
        provider_rows.push(vec![format!("H{k:04}"), lon, lat, label]);
    }
    sum.providers = write_csv(&dir.join("providers.csv"), &["provider_id", "lon", "lat", "label"], provider_rows)?;

    // Households from a one-factor ordinal model; block means vary.
    write_csv(
        &dir.join("sei_schema.csv"),
        &["variable", "levels"],
        SEI_LEVELS.iter().enumerate().map(|(i, k)| vec![format!("v{:02}", i + 1), k.to_string()]),
    )?;
    let mut header = vec!["household_id".to_string(), "block_id".to_string()];
    header.extend((1..=SEI_LEVELS.len()).map(|i| format!("v{i:02}")));
    let mut hh_rows = Vec::new();
    let mut latent_rows = Vec::new();
    for b in 0..layout.n_blocks {
        let mean: f64 = 0.6 * rng.sample::<f64, _>(StandardNormal);
        for k in 0..params.households_per_block {
            let z = mean + 0.8 * rng.sample::<f64, _>(StandardNormal);
            let id = format!("{}H{k:02}", block_id(b));
            let mut row = vec![id.clone(), block_id(b)];
            for (i, &levels) in SEI_LEVELS.iter().enumerate() {
                let v = if rng.gen_bool(0.05) {
                    rng.gen_range(1..=levels)
                } else {
                    let shift = 0.15 * (i as f64 - 5.0) / 5.0;
                    1 + (1..levels).filter(|&t| z + shift > -1.2 + 2.4 * t as f64 / levels as f64).count()
                };
                row.push(v.to_string());
            }
            hh_rows.push(row);
            latent_rows.push(vec![id, block_id(b), fmt_f64(z)]);
        }
    }
    // Households pointing at a block that does not exist.
    for k in 0..2 {
        let mut row = vec![format!("ORPHAN{k}"), "B_MISSING".to_string()];
        row.extend(SEI_LEVELS.iter().map(|_| "1".to_string()));
        hh_rows.push(row);
        sum.orphan_households += 1;
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    sum.households = write_csv(&dir.join("households.csv"), &header, hh_rows)?;
    write_csv(&truth.join("latent.csv"), &["household_id", "block_id", "latent"], latent_rows)?;

    let config = PipelineConfig {
        seed: params.seed,
        output_dir: PathBuf::from("out"),
        inputs: Inputs {
            blocks: "blocks.geojson".into(),
            endemic_region: "endemic_region.geojson".into(),
            antennas: "antennas.csv".into(),
            calls: "calls.csv".into(),
            housing: "housing.csv".into(),
            providers: "providers.csv".into(),
            street_nodes: "street_nodes.csv".into(),
            street_edges: "street_edges.csv".into(),
            households: "households.csv".into(),
            sei_schema: "sei_schema.csv".into(),
            provider_labels: None,
        },
        projection: proj,
        affinity: Default::default(),
        access: Default::default(),
        sei: Default::default(),
        index: Default::default(),
        selection: Default::default(),
        emit: Default::default(),
    };
    let cfg_path = dir.join(CONFIG_FILE);
    std::fs::write(&cfg_path, config.to_toml()).map_err(|e| io_err(&cfg_path, e))?;
    let mut text = serde_json::to_string_pretty(&json!({ "params": params, "counts": sum, "width_m": width, "height_m": height }))
        .expect("summary serializes");
    text.push('\n');
    let p = truth.join("summary.json");
    std::fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    Ok(sum)
}
