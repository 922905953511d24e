//! Pipeline stages. Each reads raw inputs or earlier stage outputs from
//! disk and persists its own tables, so any stage can be rerun alone.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chppi_core::access::{
    block_travel_times, classify_providers, AccessParams, LabelMap, ProviderCategory, StreetGraph,
};
use chppi_core::affinity::{
    assign_seed_affinity, antenna_scalar, block_affinity_index, propagate_affinity, tally_antenna_tuples, HomeAntenna,
    HomeAssignment, HomeCounter, SocialGraph,
};
use chppi_core::housing::{aggregate_to_antennas, fit_mca, quartile_partition, score_blocks};
use chppi_core::index::{chppi, density_scale, health_vulnerability, select_localities, IndexError, LocalityBlock};
use chppi_core::sei::{
    encode_thermometer, evaluate_model, score_households, train_autoencoder, trimean_blocks, MetricWeighting,
};
use chppi_core::{Point, Polygon, VoronoiDiagram};
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::io::{self, fmt_f64, fmt_opt, write_csv, BlockInput, Table};
use crate::manifest::StageReport;

pub const HOMES: &str = "homes.csv";
pub const HOUSING_BLOCKS: &str = "housing_blocks.csv";
pub const ANTENNA_HOUSING: &str = "antenna_housing.csv";
pub const ANTENNA_CELLS: &str = "antenna_cells.geojson";
pub const USER_AFFINITY: &str = "user_affinity.csv";
pub const ANTENNA_AFFINITY: &str = "antenna_affinity.csv";
pub const BLOCK_AFFINITY: &str = "block_affinity.csv";
pub const PROVIDERS: &str = "providers_classified.csv";
pub const BLOCK_ACCESS: &str = "block_access.csv";
pub const HOUSEHOLD_SEI: &str = "household_sei.csv";
pub const BLOCK_SEI: &str = "block_sei.csv";
pub const BLOCK_HV: &str = "block_hv.csv";
pub const BLOCK_INDICES: &str = "block_indices.csv";
pub const LOCALITIES: &str = "localities.csv";
pub const LAYERS_DIR: &str = "layers";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Housing,
    Affinity,
    Access,
    Sei,
    Vulnerability,
    Index,
    Select,
    Emit,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Housing,
        Stage::Affinity,
        Stage::Access,
        Stage::Sei,
        Stage::Vulnerability,
        Stage::Index,
        Stage::Select,
        Stage::Emit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Housing => "housing",
            Stage::Affinity => "affinity",
            Stage::Access => "access",
            Stage::Sei => "sei",
            Stage::Vulnerability => "vulnerability",
            Stage::Index => "index",
            Stage::Select => "select",
            Stage::Emit => "emit",
        }
    }

    pub fn run(self, cfg: &PipelineConfig) -> Result<StageReport> {
        std::fs::create_dir_all(cfg.output_dir.join(LAYERS_DIR))
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
        let ctx = Ctx { cfg, stage: self };
        match self {
            Stage::Ingest => ingest(&ctx),
            Stage::Housing => housing(&ctx),
            Stage::Affinity => affinity(&ctx),
            Stage::Access => access(&ctx),
            Stage::Sei => sei(&ctx),
            Stage::Vulnerability => vulnerability(&ctx),
            Stage::Index => index(&ctx),
            Stage::Select => select(&ctx),
            Stage::Emit => emit(&ctx),
        }
    }
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    stage: Stage,
}

impl Ctx<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn fail(&self, e: impl std::fmt::Display) -> CliError {
        CliError::stage(self.stage.name(), e)
    }

    /// An earlier stage's table; its absence is a stage failure.
    fn table(&self, name: &str, required: &[&str]) -> Result<Table> {
        let p = self.out(name);
        if !p.is_file() {
            return Err(self.fail(format!("{} is missing; run the stage that produces it first", p.display())));
        }
        Table::read(&p, required).map_err(|e| self.fail(e))
    }

    fn blocks(&self) -> Result<Vec<BlockInput>> {
        io::read_blocks(&self.cfg.inputs.blocks, &self.cfg.projection)
    }

    fn antennas(&self) -> Result<Vec<(String, Point)>> {
        io::read_points(&self.cfg.inputs.antennas, "antenna_id", &self.cfg.projection)
    }

    fn endemic(&self) -> Result<Polygon> {
        io::read_region(&self.cfg.inputs.endemic_region, &self.cfg.projection)
    }

    /// Voronoi cells of the antennas clipped to a box around every block and
    /// antenna.
    fn diagram(&self, blocks: &[BlockInput], antennas: &[(String, Point)]) -> Result<VoronoiDiagram> {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        let pts = blocks.iter().flat_map(|b| b.polygon.exterior().iter().copied()).chain(antennas.iter().map(|a| a.1));
        for p in pts {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let pad = 1.0 + 0.01 * (hi.x - lo.x).max(hi.y - lo.y);
        let clip = Polygon::rectangle(Point::new(lo.x - pad, lo.y - pad), Point::new(hi.x + pad, hi.y + pad))
            .map_err(|e| self.fail(e))?;
        VoronoiDiagram::build(antennas, clip).map_err(|e| self.fail(e))
    }
}

fn block_polygons(blocks: &[BlockInput]) -> Vec<(String, Polygon)> {
    blocks.iter().map(|b| (b.id.clone(), b.polygon.clone())).collect()
}

fn bool_str(b: bool) -> String {
    if b { "1".into() } else { "0".into() }
}

fn ingest(ctx: &Ctx) -> Result<StageReport> {
    let cfg = ctx.cfg;
    let antennas = ctx.antennas()?;
    let known: BTreeSet<&str> = antennas.iter().map(|a| a.0.as_str()).collect();
    let calls = io::read_calls(&cfg.inputs.calls)?;
    let window = cfg.affinity.night_window().expect("validated night window");
    let mut counter = HomeCounter::new(window);
    for r in &calls {
        counter.add(r, |t| known.contains(t));
    }
    let homes = counter.finish(cfg.seed);
    let n = write_csv(
        &ctx.out(HOMES),
        &["user_id", "antenna_id", "night_calls", "home_calls"],
        homes.homes.iter().map(|(u, h)| vec![u.clone(), h.antenna.clone(), h.night_calls.to_string(), h.home_calls.to_string()]),
    )?;
    let users: BTreeSet<&str> = calls.iter().flat_map(|r| [r.originator.as_str(), r.destinatary.as_str()]).collect();
    let mut rep = StageReport::default();
    rep.input("calls", calls.len())
        .input("antennas", antennas.len())
        .output(HOMES, n)
        .drop("records_unknown_tower", homes.stats.unknown_tower as usize)
        .drop("records_self_call", homes.stats.self_calls as usize)
        .drop("users_without_night_calls", users.len() - n)
        .metric("night_events", homes.stats.night_events as f64);
    Ok(rep)
}

fn housing(ctx: &Ctx) -> Result<StageReport> {
    let blocks = ctx.blocks()?;
    let antennas = ctx.antennas()?;
    let endemic = ctx.endemic()?;
    let records = io::read_housing(&ctx.cfg.inputs.housing)?;
    let model = fit_mca::<f64>(&records).map_err(|e| ctx.fail(e))?;
    let scores = score_blocks(&model, &records);
    let n_blocks = write_csv(
        &ctx.out(HOUSING_BLOCKS),
        &["block_id", "score", "households"],
        scores.blocks.iter().map(|(id, b)| vec![id.clone(), fmt_f64(b.score), fmt_f64(b.households)]),
    )?;
    let diagram = ctx.diagram(&blocks, &antennas)?;
    let agg = aggregate_to_antennas(&scores.blocks, &diagram, &block_polygons(&blocks));
    let quartiles = quartile_partition(&agg.values, &antennas, &endemic).map_err(|e| ctx.fail(e))?;
    let row = |id: &String, p: &Point| {
        vec![
            id.clone(),
            bool_str(endemic.contains(p)),
            fmt_opt(agg.values.get(id).copied()),
            fmt_opt(agg.households.get(id).copied()),
            quartiles.get(id).map(|q| q.to_string()).unwrap_or_default(),
        ]
    };
    let n_ant = write_csv(
        &ctx.out(ANTENNA_HOUSING),
        &["antenna_id", "in_endemic", "value", "households", "quartile"],
        antennas.iter().map(|(id, p)| row(id, p)),
    )?;
    let features = diagram
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let mut props = serde_json::Map::new();
            props.insert("antenna_id".into(), json!(id));
            props.insert("housing".into(), json!(agg.values.get(id)));
            props.insert("quartile".into(), json!(quartiles.get(id)));
            io::polygon_feature(diagram.cell(i), &ctx.cfg.projection, props)
        })
        .collect();
    io::write_geojson(&ctx.out(ANTENNA_CELLS), features)?;

    let sv = model.singular_values();
    let inertia: f64 = sv.iter().map(|s| s * s).sum();
    let mut rep = StageReport::default();
    rep.input("housing_records", records.len())
        .input("blocks", blocks.len())
        .input("antennas", antennas.len())
        .output(HOUSING_BLOCKS, n_blocks)
        .output(ANTENNA_HOUSING, n_ant)
        .output(ANTENNA_CELLS, diagram.len())
        .drop("records_unseen_category", scores.skipped_records)
        .drop("antenna_cells_without_households", agg.empty_cells.len())
        .drop("constant_variables", model.dropped_variables().len())
        .metric("first_axis_inertia_share", if inertia > 0.0 { sv[0] * sv[0] / inertia } else { 0.0 })
        .metric("orientation_flipped", if model.flipped() { 1.0 } else { 0.0 });
    Ok(rep)
}

fn read_homes(ctx: &Ctx) -> Result<HomeAssignment> {
    let t = ctx.table(HOMES, &["user_id", "antenna_id", "night_calls", "home_calls"])?;
    let mut homes = BTreeMap::new();
    for r in 0..t.len() {
        homes.insert(
            t.str(r, "user_id").to_string(),
            HomeAntenna {
                antenna: t.str(r, "antenna_id").to_string(),
                night_calls: t.parse(r, "night_calls").map_err(|e| ctx.fail(e))?,
                home_calls: t.parse(r, "home_calls").map_err(|e| ctx.fail(e))?,
            },
        );
    }
    Ok(HomeAssignment { homes, stats: Default::default() })
}

fn affinity(ctx: &Ctx) -> Result<StageReport> {
    let cfg = ctx.cfg;
    let blocks = ctx.blocks()?;
    let antennas = ctx.antennas()?;
    let endemic = ctx.endemic()?;
    let calls = io::read_calls(&cfg.inputs.calls)?;
    let homes = read_homes(ctx)?;
    let t = ctx.table(ANTENNA_HOUSING, &["antenna_id", "quartile"])?;
    let mut quartiles = BTreeMap::new();
    for r in 0..t.len() {
        if !t.str(r, "quartile").is_empty() {
            quartiles.insert(t.str(r, "antenna_id").to_string(), t.parse::<u8>(r, "quartile").map_err(|e| ctx.fail(e))?);
        }
    }
    let seeds = assign_seed_affinity(&antennas, &endemic, &quartiles).map_err(|e| ctx.fail(e))?;
    let known: BTreeSet<&str> = antennas.iter().map(|a| a.0.as_str()).collect();
    let graph = SocialGraph::from_records(&calls, cfg.affinity.min_edge_calls, |r| known.contains(r.tower.as_str()));
    let policy = cfg.affinity.policy().expect("validated policy");
    let prop = propagate_affinity(&graph, &homes, &seeds, policy);
    let n_users = write_csv(
        &ctx.out(USER_AFFINITY),
        &["user_id", "antenna_id", "score"],
        prop.scores.iter().map(|(u, s)| vec![u.clone(), homes.get(u).unwrap_or("").to_string(), s.to_string()]),
    )?;
    let ids: Vec<&str> = antennas.iter().map(|a| a.0.as_str()).collect();
    let tuples = tally_antenna_tuples(&ids, &homes, &prop.scores);
    let n_ant = write_csv(
        &ctx.out(ANTENNA_AFFINITY),
        &["antenna_id", "c0", "c1", "c2", "c3", "c4", "alpha"],
        tuples.iter().map(|t| {
            let mut row = vec![t.antenna.clone()];
            row.extend(t.counts.iter().map(u64::to_string));
            row.push(fmt_f64(antenna_scalar(t)));
            row
        }),
    )?;
    let diagram = ctx.diagram(&blocks, &antennas)?;
    let ai = block_affinity_index(&tuples, &diagram, &block_polygons(&blocks));
    let uncovered = ai.iter().filter(|b| b.uncovered).count();
    let n_blocks = write_csv(
        &ctx.out(BLOCK_AFFINITY),
        &["block_id", "ai", "coverage", "uncovered"],
        ai.iter().map(|b| vec![b.block.clone(), fmt_f64(b.ai), fmt_f64(b.coverage), bool_str(b.uncovered)]),
    )?;
    let mut rep = StageReport::default();
    rep.input("calls", calls.len())
        .input("homes", homes.len())
        .output(USER_AFFINITY, n_users)
        .output(ANTENNA_AFFINITY, n_ant)
        .output(BLOCK_AFFINITY, n_blocks)
        .drop("graph_users_without_home", prop.users_without_home)
        .drop("users_home_without_seed", prop.users_without_seed)
        .drop("users_unscored", prop.users_unscored)
        .metric("graph_nodes", graph.node_count() as f64)
        .metric("graph_edges", graph.edge_count() as f64)
        .metric("blocks_partly_uncovered", uncovered as f64);
    Ok(rep)
}

fn access(ctx: &Ctx) -> Result<StageReport> {
    let cfg = ctx.cfg;
    let blocks = ctx.blocks()?;
    let raw = io::read_providers(&cfg.inputs.providers, &cfg.projection)?;
    let map = match &cfg.inputs.provider_labels {
        Some(p) => io::read_label_map(p)?,
        None => LabelMap::default(),
    };
    let classified = classify_providers(&raw, &map);
    let labels: BTreeMap<&str, &str> = raw.iter().map(|(id, _, l)| (id.as_str(), l.as_str())).collect();
    let n_prov = write_csv(
        &ctx.out(PROVIDERS),
        &["provider_id", "category", "label"],
        classified.providers.iter().map(|p| vec![p.id.clone(), p.category.as_str().to_string(), labels[p.id.as_str()].to_string()]),
    )?;
    let nodes = io::read_points(&cfg.inputs.street_nodes, "node_id", &cfg.projection)?;
    let edges = io::read_street_edges(&cfg.inputs.street_edges)?;
    let n_nodes = nodes.len();
    let n_edges = edges.len();
    let (graph, ingest) = StreetGraph::new(nodes, edges).map_err(|e| ctx.fail(e))?;
    let params = AccessParams {
        speed_kmh: cfg.access.speed_kmh,
        k: if cfg.access.k == 0 { usize::MAX } else { cfg.access.k },
        samples: cfg.access.samples,
        seed: cfg.seed,
    };
    let out = block_travel_times(&block_polygons(&blocks), &classified.providers, &graph, &params).map_err(|e| ctx.fail(e))?;
    let header = [
        "block_id",
        "t_hospital",
        "t_health_center",
        "t_sanitary_post",
        "nearest_hospital",
        "nearest_health_center",
        "nearest_sanitary_post",
        "delta",
        "unreachable",
        "degenerate",
    ];
    let n = write_csv(
        &ctx.out(BLOCK_ACCESS),
        &header,
        out.iter().map(|b| {
            let mut row = vec![b.block.clone()];
            row.extend(ProviderCategory::ALL.iter().map(|c| fmt_opt(b.mean_time(*c))));
            row.extend(b.nearest.iter().map(|n| n.clone().unwrap_or_default()));
            row.extend([fmt_f64(b.delta), bool_str(b.unreachable), bool_str(b.degenerate)]);
            row
        }),
    )?;
    let mut rep = StageReport::default();
    rep.input("providers", raw.len())
        .input("street_nodes", n_nodes)
        .input("street_edges", n_edges)
        .input("blocks", blocks.len())
        .output(PROVIDERS, n_prov)
        .output(BLOCK_ACCESS, n)
        .drop("providers_discarded_by_label", classified.discarded)
        .drop("edges_duplicate", ingest.duplicate_edges)
        .drop("edges_self_loop", ingest.self_loops)
        .drop("edges_invalid_length", ingest.invalid_lengths)
        .drop("edges_unknown_node", ingest.unknown_nodes)
        .metric("blocks_unreachable", out.iter().filter(|b| b.unreachable).count() as f64)
        .metric("blocks_degenerate", out.iter().filter(|b| b.degenerate).count() as f64);
    Ok(rep)
}

fn sei(ctx: &Ctx) -> Result<StageReport> {
    let cfg = ctx.cfg;
    let blocks = ctx.blocks()?;
    let known: BTreeSet<&str> = blocks.iter().map(|b| b.id.as_str()).collect();
    let schema = io::read_schema(&cfg.inputs.sei_schema)?;
    let rows = io::read_households(&cfg.inputs.households, &schema)?;
    let keep: Vec<usize> = (0..rows.ids.len()).filter(|&i| known.contains(rows.blocks[i].as_str())).collect();
    let values: Vec<Vec<u32>> = keep.iter().map(|&i| rows.values[i].clone()).collect();
    let x = encode_thermometer::<f64>(&schema, &values).map_err(|e| CliError::Validation(e.to_string()))?;
    let (model, report) = train_autoencoder(&x, &cfg.sei.autoencoder(cfg.seed)).map_err(|e| ctx.fail(e))?;
    let orient = match &cfg.sei.orient_by {
        Some(name) => schema.index_of(name).ok_or_else(|| CliError::Validation(format!("sei.orient_by: unknown variable {name}")))?,
        None => schema.len() - 1,
    };
    let scores = score_households(&model, &schema, &x, orient).map_err(|e| ctx.fail(e))?;
    let e_norm = evaluate_model(&model, &schema, &x, MetricWeighting::Normalized).map_err(|e| ctx.fail(e))?;
    let e_lit = evaluate_model(&model, &schema, &x, MetricWeighting::Literal).map_err(|e| ctx.fail(e))?;
    let n_hh = write_csv(
        &ctx.out(HOUSEHOLD_SEI),
        &["household_id", "block_id", "s"],
        keep.iter().zip(&scores.scores).map(|(&i, s)| vec![rows.ids[i].clone(), rows.blocks[i].clone(), fmt_f64(*s)]),
    )?;
    let block_of: Vec<&str> = keep.iter().map(|&i| rows.blocks[i].as_str()).collect();
    let eta = trimean_blocks(&scores.scores, &block_of);
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for b in &block_of {
        *sizes.entry(b).or_default() += 1;
    }
    let n_blocks = write_csv(
        &ctx.out(BLOCK_SEI),
        &["block_id", "eta", "households"],
        eta.iter().map(|(b, v)| vec![b.to_string(), fmt_f64(*v), sizes[b].to_string()]),
    )?;
    let mut rep = StageReport::default();
    rep.input("households", rows.ids.len())
        .output(HOUSEHOLD_SEI, n_hh)
        .output(BLOCK_SEI, n_blocks)
        .drop("households_unknown_block", rows.ids.len() - keep.len())
        .drop("blocks_without_households", blocks.len() - n_blocks)
        .metric("reconstruction_e", e_norm)
        .metric("reconstruction_e_literal", e_lit)
        .metric("final_eval_loss", report.eval_loss.last().copied().unwrap_or(f64::NAN))
        .metric("orientation_flipped", if scores.flipped { 1.0 } else { 0.0 });
    Ok(rep)
}

fn vulnerability(ctx: &Ctx) -> Result<StageReport> {
    let acc = ctx.table(BLOCK_ACCESS, &["block_id", "delta"])?;
    let sei = ctx.table(BLOCK_SEI, &["block_id", "eta"])?;
    let mut eta: BTreeMap<String, f64> = BTreeMap::new();
    for r in 0..sei.len() {
        eta.insert(sei.str(r, "block_id").to_string(), sei.parse(r, "eta").map_err(|e| ctx.fail(e))?);
    }
    let (mut ids, mut d, mut e) = (Vec::new(), Vec::new(), Vec::new());
    for r in 0..acc.len() {
        let id = acc.str(r, "block_id");
        if let Some(v) = eta.get(id) {
            ids.push(id.to_string());
            d.push(acc.parse::<f64>(r, "delta").map_err(|e| ctx.fail(e))?);
            e.push(*v);
        }
    }
    let hv = health_vulnerability(&d, &e).map_err(|e| ctx.fail(e))?;
    let n = write_csv(
        &ctx.out(BLOCK_HV),
        &["block_id", "delta", "eta", "hv", "delta_imputed"],
        (0..ids.len()).map(|i| vec![ids[i].clone(), fmt_f64(d[i]), fmt_f64(e[i]), fmt_f64(hv.hv[i]), bool_str(hv.imputed[i])]),
    )?;
    let mut rep = StageReport::default();
    rep.input(BLOCK_ACCESS, acc.len())
        .input(BLOCK_SEI, sei.len())
        .output(BLOCK_HV, n)
        .drop("blocks_without_sei", acc.len() - n)
        .metric("first_component_share", hv.explained)
        .metric("blocks_delta_imputed", hv.imputed.iter().filter(|b| **b).count() as f64);
    Ok(rep)
}

struct HvRow {
    delta: f64,
    eta: f64,
    hv: f64,
    imputed: bool,
}

fn index(ctx: &Ctx) -> Result<StageReport> {
    let cfg = ctx.cfg;
    let blocks = ctx.blocks()?;
    let endemic = ctx.endemic()?;
    let aff = ctx.table(BLOCK_AFFINITY, &["block_id", "ai", "uncovered"])?;
    let hvt = ctx.table(BLOCK_HV, &["block_id", "delta", "eta", "hv", "delta_imputed"])?;
    let mut ai: BTreeMap<String, (f64, bool)> = BTreeMap::new();
    for r in 0..aff.len() {
        let v: f64 = aff.parse(r, "ai").map_err(|e| ctx.fail(e))?;
        ai.insert(aff.str(r, "block_id").to_string(), (v, aff.str(r, "uncovered") == "1"));
    }
    let mut hv: BTreeMap<String, HvRow> = BTreeMap::new();
    for r in 0..hvt.len() {
        let p = |c: &str| hvt.parse::<f64>(r, c).map_err(|e| ctx.fail(e));
        hv.insert(
            hvt.str(r, "block_id").to_string(),
            HvRow { delta: p("delta")?, eta: p("eta")?, hv: p("hv")?, imputed: hvt.str(r, "delta_imputed") == "1" },
        );
    }
    let pop: Vec<f64> = blocks.iter().map(|b| b.population).collect();
    let area_km2: Vec<f64> = blocks.iter().map(|b| b.polygon.area() / 1e6).collect();
    let dens = density_scale(&pop, &area_km2).map_err(|e| ctx.fail(e))?;
    let in_endemic: Vec<bool> = blocks.iter().map(|b| endemic.contains(&b.polygon.centroid())).collect();

    let complete: Vec<usize> = (0..blocks.len())
        .filter(|&i| dens.d[i].is_some() && hv.contains_key(&blocks[i].id) && ai.contains_key(&blocks[i].id))
        .collect();
    let included: Vec<bool> = complete.iter().map(|&i| cfg.index.denominator_includes_endemic || !in_endemic[i]).collect();
    let values = chppi(
        &complete.iter().map(|&i| hv[&blocks[i].id].hv).collect::<Vec<_>>(),
        &complete.iter().map(|&i| dens.d[i].unwrap()).collect::<Vec<_>>(),
        &complete.iter().map(|&i| ai[&blocks[i].id].0).collect::<Vec<_>>(),
        &included,
        cfg.index.alpha,
        cfg.index.beta,
    );
    // With no affinity anywhere in the normalization set the index is 0/0;
    // the table is still written, with the index left empty and flagged.
    let undefined = matches!(values, Err(IndexError::AllZeroAffinity));
    let values = if undefined {
        log::warn!("every block in the normalization set has zero affinity; the index is undefined");
        Vec::new()
    } else {
        values.map_err(|e| ctx.fail(e))?
    };
    let mut value_of: BTreeMap<usize, (f64, bool)> = BTreeMap::new();
    for (k, &i) in complete.iter().enumerate().filter(|_| !undefined) {
        value_of.insert(i, (values[k], included[k]));
    }

    let header = [
        "block_id",
        "locality_id",
        "province_id",
        "in_endemic",
        "population",
        "area_km2",
        "AI",
        "delta",
        "eta",
        "HV",
        "d",
        "ChPPI",
        "flags",
    ];
    let rows = blocks.iter().enumerate().map(|(i, b)| {
        let a = ai.get(&b.id);
        let h = hv.get(&b.id);
        let mut flags = Vec::new();
        if a.is_some_and(|a| a.1) {
            flags.push("uncovered");
        }
        if h.is_some_and(|h| h.imputed) {
            flags.push("delta_imputed");
        }
        if h.is_none() {
            flags.push("no_sei");
        }
        if dens.d[i].is_none() {
            flags.push("zero_area");
        }
        if undefined && complete.binary_search(&i).is_ok() {
            flags.push("undefined_index");
        }
        if value_of.get(&i).is_some_and(|v| !v.1) {
            flags.push("outside_normalization");
        }
        vec![
            b.id.clone(),
            b.locality.clone(),
            b.province.clone(),
            bool_str(in_endemic[i]),
            fmt_f64(b.population),
            fmt_f64(area_km2[i]),
            fmt_opt(a.map(|a| a.0)),
            fmt_opt(h.map(|h| h.delta)),
            fmt_opt(h.map(|h| h.eta)),
            fmt_opt(h.map(|h| h.hv)),
            fmt_opt(dens.d[i]),
            fmt_opt(value_of.get(&i).map(|v| v.0)),
            flags.join(";"),
        ]
    });
    let n = write_csv(&ctx.out(BLOCK_INDICES), &header, rows)?;
    let mut rep = StageReport::default();
    rep.input("blocks", blocks.len())
        .input(BLOCK_AFFINITY, aff.len())
        .input(BLOCK_HV, hvt.len())
        .output(BLOCK_INDICES, n)
        .drop("blocks_without_index", blocks.len() - value_of.len())
        .metric("alpha", cfg.index.alpha)
        .metric("beta", cfg.index.beta)
        .metric("normalization_blocks", included.iter().filter(|b| **b).count() as f64);
    Ok(rep)
}

fn select(ctx: &Ctx) -> Result<StageReport> {
    let t = ctx.table(BLOCK_INDICES, &["block_id", "locality_id", "province_id", "in_endemic", "population", "area_km2", "AI"])?;
    let mut input = Vec::with_capacity(t.len());
    let mut missing = 0;
    for r in 0..t.len() {
        let Some(ai) = t.opt_f64(r, "AI").map_err(|e| ctx.fail(e))? else {
            missing += 1;
            continue;
        };
        input.push(LocalityBlock {
            block: t.str(r, "block_id").to_string(),
            locality: t.str(r, "locality_id").to_string(),
            province: t.str(r, "province_id").to_string(),
            population: t.parse(r, "population").map_err(|e| ctx.fail(e))?,
            area_km2: t.parse(r, "area_km2").map_err(|e| ctx.fail(e))?,
            ai,
            endemic: t.str(r, "in_endemic") == "1",
        });
    }
    let sel = select_localities(&input, &ctx.cfg.selection.params()).map_err(|e| ctx.fail(e))?;
    let n = write_csv(
        &ctx.out(LOCALITIES),
        &["locality_id", "province_id", "metric1", "metric2", "type", "selected", "surviving_blocks"],
        sel.reports.iter().map(|r| {
            vec![
                r.locality.clone(),
                r.province.clone(),
                fmt_f64(r.metric1),
                fmt_opt(r.metric2),
                r.kind.map(|k| k.as_str().to_string()).unwrap_or_default(),
                bool_str(r.selected),
                r.surviving_blocks.to_string(),
            ]
        }),
    )?;
    let mut rep = StageReport::default();
    rep.input(BLOCK_INDICES, t.len())
        .output(LOCALITIES, n)
        .drop("blocks_without_affinity", missing)
        .drop("provinces_without_localities", sel.empty_provinces.len())
        .metric("extreme_threshold", sel.extreme_threshold)
        .metric("selected", sel.reports.iter().filter(|r| r.selected).count() as f64);
    Ok(rep)
}

/// Layer name and the column of the block table it carries.
pub const LAYERS: [(&str, &str); 3] = [("ai", "AI"), ("hv", "HV"), ("chppi", "ChPPI")];

fn emit(ctx: &Ctx) -> Result<StageReport> {
    let blocks = ctx.blocks()?;
    let t = ctx.table(BLOCK_INDICES, &["block_id", "AI", "HV", "ChPPI", "flags", "locality_id"])?;
    let loc = ctx.table(LOCALITIES, &["locality_id", "type", "selected"])?;
    let row_of: BTreeMap<&str, usize> = (0..t.len()).map(|r| (t.str(r, "block_id"), r)).collect();
    let kind_of: BTreeMap<&str, (&str, bool)> =
        (0..loc.len()).map(|r| (loc.str(r, "locality_id"), (loc.str(r, "type"), loc.str(r, "selected") == "1"))).collect();
    let mut rep = StageReport::default();
    rep.input("blocks", blocks.len()).input(BLOCK_INDICES, t.len());
    let value = |r: Option<usize>, col: &str| -> Result<Option<f64>> {
        match r {
            Some(r) => t.opt_f64(r, col).map_err(|e| ctx.fail(e)),
            None => Ok(None),
        }
    };
    for (layer, col) in LAYERS {
        let mut features = Vec::with_capacity(blocks.len());
        for b in &blocks {
            let r = row_of.get(b.id.as_str()).copied();
            let mut props = serde_json::Map::new();
            props.insert("block_id".into(), json!(b.id));
            props.insert("value".into(), json!(value(r, col)?));
            props.insert("flags".into(), json!(r.map(|r| t.str(r, "flags")).unwrap_or("missing")));
            features.push(io::polygon_feature(&b.polygon, &ctx.cfg.projection, props));
        }
        let name = format!("{LAYERS_DIR}/{layer}.geojson");
        rep.output(&name, io::write_geojson(&ctx.out(&name), features)?);
    }
    let mut features = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let (kind, selected) = kind_of.get(b.locality.as_str()).copied().unwrap_or(("", false));
        let mut props = serde_json::Map::new();
        props.insert("block_id".into(), json!(b.id));
        props.insert("locality_id".into(), json!(b.locality));
        props.insert("type".into(), if kind.is_empty() { json!(null) } else { json!(kind) });
        props.insert("selected".into(), json!(selected));
        features.push(io::polygon_feature(&b.polygon, &ctx.cfg.projection, props));
    }
    let name = format!("{LAYERS_DIR}/selection.geojson");
    rep.output(&name, io::write_geojson(&ctx.out(&name), features)?);

    if ctx.cfg.emit.locality_layers {
        let mut members: BTreeMap<&str, Vec<&BlockInput>> = BTreeMap::new();
        for b in &blocks {
            members.entry(b.locality.as_str()).or_default().push(b);
        }
        for (layer, col) in LAYERS {
            let mut features = Vec::with_capacity(members.len());
            for (loc, bs) in &members {
                let (mut num, mut den) = (0.0, 0.0);
                for b in bs {
                    if let Some(v) = value(row_of.get(b.id.as_str()).copied(), col)? {
                        num += b.population * v;
                        den += b.population;
                    }
                }
                let mut props = serde_json::Map::new();
                props.insert("locality_id".into(), json!(loc));
                props.insert("value".into(), json!((den > 0.0).then(|| num / den)));
                props.insert("blocks".into(), json!(bs.len()));
                let polys: Vec<&Polygon> = bs.iter().map(|b| &b.polygon).collect();
                features.push(io::multipolygon_feature(&polys, &ctx.cfg.projection, props));
            }
            let name = format!("{LAYERS_DIR}/{layer}_by_locality.geojson");
            rep.output(&name, io::write_geojson(&ctx.out(&name), features)?);
        }
    }
    Ok(rep)
}
