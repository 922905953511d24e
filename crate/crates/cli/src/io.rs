//! Delimited text and GeoJSON readers and writers.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chppi_core::access::{LabelMap, LabelRule, ProviderCategory};
use chppi_core::affinity::{parse_timestamp, CallRecord, Direction};
use chppi_core::geo::GeoError;
use chppi_core::housing::HousingRecord;
use chppi_core::sei::OrdinalSchema;
use chppi_core::{Point, Polygon};
use geojson::{Feature, FeatureCollection, GeoJson, Geometry, GeometryValue, JsonObject, JsonValue};

use crate::error::{CliError, Result};
use crate::projection::Projection;

fn invalid(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {msg}", path.display()))
}

/// A header-addressed CSV file held in memory.
pub struct Table {
    path: String,
    columns: BTreeMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path, required: &[&str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| invalid(path, e))?;
        let header = rdr.headers().map_err(|e| invalid(path, e))?.clone();
        let columns: BTreeMap<String, usize> = header.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        if let Some(missing) = required.iter().find(|c| !columns.contains_key(**c)) {
            return Err(invalid(path, format!("missing column {missing}")));
        }
        let rows = rdr
            .records()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| invalid(path, format!("line {}: {e}", i + 2))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Table { path: path.display().to_string(), columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has(&self, column: &str) -> bool {
        self.columns.contains_key(column)
    }

    pub fn str(&self, row: usize, column: &str) -> &str {
        self.columns.get(column).and_then(|&c| self.rows[row].get(c)).unwrap_or("")
    }

    fn err(&self, row: usize, msg: impl std::fmt::Display) -> CliError {
        CliError::Validation(format!("{}: line {}: {msg}", self.path, row + 2))
    }

    pub fn parse<T: std::str::FromStr>(&self, row: usize, column: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.str(row, column);
        s.parse().map_err(|e| self.err(row, format!("{column} = {s:?}: {e}")))
    }

    /// Empty cells read as `None`; `inf` as infinity.
    pub fn opt_f64(&self, row: usize, column: &str) -> Result<Option<f64>> {
        match self.str(row, column) {
            "" => Ok(None),
            _ => self.parse(row, column).map(Some),
        }
    }
}

/// Shortest round-trip decimal; `inf` for infinity.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes a CSV file and returns the number of data rows.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<usize>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let fail = |e: &dyn std::fmt::Display| CliError::Validation(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().from_path(path).map_err(|e| fail(&e))?;
    w.write_record(header).map_err(|e| fail(&e))?;
    let mut n = 0;
    for r in rows {
        w.write_record(&r).map_err(|e| fail(&e))?;
        n += 1;
    }
    w.flush().map_err(|e| fail(&e))?;
    Ok(n)
}

#[derive(Debug, Clone)]
pub struct BlockInput {
    pub id: String,
    pub locality: String,
    pub province: String,
    pub population: f64,
    pub polygon: Polygon,
}

fn prop_str(props: &JsonObject, key: &str) -> Option<String> {
    match props.get(key)? {
        JsonValue::String(s) => Some(s.clone()),
        JsonValue::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn prop_f64(props: &JsonObject, key: &str) -> Option<f64> {
    match props.get(key)? {
        JsonValue::Number(n) => n.as_f64(),
        JsonValue::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn ring_points(ring: &[geojson::Position], proj: &Projection) -> Vec<Point> {
    ring.iter().map(|p| proj.forward(p[0], p[1])).collect()
}

/// Projects a Polygon, or a MultiPolygon with one part. Zero-area rings are
/// kept unvalidated so that slivers still reach the pipeline.
fn polygon_from(geom: &Geometry, proj: &Projection) -> std::result::Result<Polygon, String> {
    let rings = match &geom.value {
        GeometryValue::Polygon { coordinates } => coordinates,
        GeometryValue::MultiPolygon { coordinates } if coordinates.len() == 1 => &coordinates[0],
        GeometryValue::MultiPolygon { coordinates } => {
            return Err(format!("multipolygon with {} parts is not supported", coordinates.len()))
        }
        other => return Err(format!("expected a polygon, found {}", other.type_name())),
    };
    let Some((outer, holes)) = rings.split_first() else {
        return Err("polygon without rings".into());
    };
    let ext = ring_points(outer, proj);
    let holes: Vec<Vec<Point>> = holes.iter().map(|h| ring_points(h, proj)).collect();
    match Polygon::new(ext.clone(), holes.clone()) {
        Ok(p) => Ok(p),
        Err(GeoError::DegeneratePolygon) => Ok(Polygon::new_unchecked(ext, holes)),
        Err(e) => Err(e.to_string()),
    }
}

fn read_features(path: &Path) -> Result<Vec<Feature>> {
    let file = File::open(path).map_err(|e| invalid(path, e))?;
    let gj: GeoJson = serde_json::from_reader(BufReader::new(file)).map_err(|e| invalid(path, e))?;
    Ok(match gj {
        GeoJson::FeatureCollection(fc) => fc.features,
        GeoJson::Feature(f) => vec![f],
        GeoJson::Geometry(g) => vec![Feature { geometry: Some(g), ..Feature::default() }],
    })
}

/// Blocks sorted by id.
pub fn read_blocks(path: &Path, proj: &Projection) -> Result<Vec<BlockInput>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, f) in read_features(path)?.into_iter().enumerate() {
        let props = f.properties.unwrap_or_default();
        let field = |k: &str| prop_str(&props, k).ok_or_else(|| invalid(path, format!("feature {i}: missing {k}")));
        let id = field("block_id")?;
        if !seen.insert(id.clone()) {
            return Err(invalid(path, format!("duplicate block_id {id}")));
        }
        let population = prop_f64(&props, "population")
            .filter(|p| *p >= 0.0 && p.is_finite())
            .ok_or_else(|| invalid(path, format!("block {id}: population must be a non-negative number")))?;
        let geom = f.geometry.ok_or_else(|| invalid(path, format!("block {id}: no geometry")))?;
        let polygon = polygon_from(&geom, proj).map_err(|e| invalid(path, format!("block {id}: {e}")))?;
        out.push(BlockInput { id, locality: field("locality_id")?, province: field("province_id")?, population, polygon });
    }
    if out.is_empty() {
        return Err(invalid(path, "no blocks"));
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn read_region(path: &Path, proj: &Projection) -> Result<Polygon> {
    let features = read_features(path)?;
    if features.len() != 1 {
        return Err(invalid(path, format!("expected one feature, found {}", features.len())));
    }
    let geom = features[0].geometry.as_ref().ok_or_else(|| invalid(path, "no geometry"))?;
    polygon_from(geom, proj).map_err(|e| invalid(path, e))
}

fn unique_ids(path: &Path, ids: impl Iterator<Item = String>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.clone()) {
            return Err(invalid(path, format!("duplicate id {id}")));
        }
    }
    Ok(())
}

/// `(id, point)` sorted by id.
pub fn read_points(path: &Path, id_column: &str, proj: &Projection) -> Result<Vec<(String, Point)>> {
    let t = Table::read(path, &[id_column, "lon", "lat"])?;
    let mut out = Vec::with_capacity(t.len());
    for r in 0..t.len() {
        let (lon, lat): (f64, f64) = (t.parse(r, "lon")?, t.parse(r, "lat")?);
        out.push((t.str(r, id_column).to_string(), proj.forward(lon, lat)));
    }
    unique_ids(path, out.iter().map(|(id, _)| id.clone()))?;
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub fn read_calls(path: &Path) -> Result<Vec<CallRecord>> {
    let t = Table::read(path, &["originator", "destinatary", "direction", "timestamp", "duration", "tower"])?;
    (0..t.len())
        .map(|r| {
            let direction: Direction = t.parse(r, "direction")?;
            let timestamp = parse_timestamp(t.str(r, "timestamp")).map_err(|e| t.err(r, e))?;
            Ok(CallRecord {
                originator: t.str(r, "originator").to_string(),
                destinatary: t.str(r, "destinatary").to_string(),
                direction,
                timestamp,
                duration: t.parse(r, "duration")?,
                tower: t.str(r, "tower").to_string(),
            })
        })
        .collect()
}

pub fn read_housing(path: &Path) -> Result<Vec<HousingRecord>> {
    let t = Table::read(path, &["block_id", "floor", "roof", "ceiling", "households"])?;
    (0..t.len())
        .map(|r| {
            let households: u32 = t.parse(r, "households")?;
            HousingRecord::parse(t.str(r, "block_id"), t.str(r, "floor"), t.str(r, "roof"), t.str(r, "ceiling"), households)
                .map_err(|e| t.err(r, e))
        })
        .collect()
}

/// `(id, point, label)` sorted by id.
pub fn read_providers(path: &Path, proj: &Projection) -> Result<Vec<(String, Point, String)>> {
    let t = Table::read(path, &["provider_id", "lon", "lat", "label"])?;
    let mut out = Vec::with_capacity(t.len());
    for r in 0..t.len() {
        let p = proj.forward(t.parse(r, "lon")?, t.parse(r, "lat")?);
        out.push((t.str(r, "provider_id").to_string(), p, t.str(r, "label").to_string()));
    }
    unique_ids(path, out.iter().map(|(id, _, _)| id.clone()))?;
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let t = Table::read(path, &["pattern", "category"])?;
    let rules = (0..t.len())
        .map(|r| {
            let category = match t.str(r, "category") {
                "" | "discard" => None,
                _ => Some(t.parse::<ProviderCategory>(r, "category")?),
            };
            Ok(LabelRule { pattern: t.str(r, "pattern").to_string(), category })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelMap::new(rules))
}

pub fn read_street_edges(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let t = Table::read(path, &["from", "to", "length_m"])?;
    (0..t.len())
        .map(|r| Ok((t.str(r, "from").to_string(), t.str(r, "to").to_string(), t.parse(r, "length_m")?)))
        .collect()
}

pub fn read_schema(path: &Path) -> Result<OrdinalSchema> {
    let t = Table::read(path, &["variable", "levels"])?;
    let vars = (0..t.len())
        .map(|r| Ok((t.str(r, "variable").to_string(), t.parse::<usize>(r, "levels")?)))
        .collect::<Result<Vec<_>>>()?;
    OrdinalSchema::new(vars).map_err(|e| invalid(path, e))
}

pub struct HouseholdRows {
    pub ids: Vec<String>,
    pub blocks: Vec<String>,
    pub values: Vec<Vec<u32>>,
}

/// Ordinal columns are taken by schema variable name.
pub fn read_households(path: &Path, schema: &OrdinalSchema) -> Result<HouseholdRows> {
    let mut required = vec!["household_id", "block_id"];
    required.extend(schema.variables().iter().map(|(n, _)| n.as_str()));
    let t = Table::read(path, &required)?;
    let mut out = HouseholdRows { ids: Vec::new(), blocks: Vec::new(), values: Vec::new() };
    for r in 0..t.len() {
        out.ids.push(t.str(r, "household_id").to_string());
        out.blocks.push(t.str(r, "block_id").to_string());
        out.values.push(schema.variables().iter().map(|(n, _)| t.parse(r, n)).collect::<Result<Vec<u32>>>()?);
    }
    unique_ids(path, out.ids.iter().cloned())?;
    Ok(out)
}

/// One polygon feature in lon/lat.
pub fn polygon_feature(poly: &Polygon, proj: &Projection, properties: JsonObject) -> Feature {
    let ring = |pts: &[Point]| -> Vec<geojson::Position> {
        pts.iter()
            .map(|p| {
                let (lon, lat) = proj.inverse(p);
                geojson::Position::from([lon, lat])
            })
            .collect()
    };
    let mut rings = vec![ring(poly.exterior())];
    rings.extend(poly.holes().iter().map(|h| ring(h)));
    Feature {
        geometry: Some(Geometry::new(GeometryValue::Polygon { coordinates: rings })),
        properties: Some(properties),
        ..Feature::default()
    }
}

/// Several polygons as one MultiPolygon feature in lon/lat.
pub fn multipolygon_feature(polys: &[&Polygon], proj: &Projection, properties: JsonObject) -> Feature {
    let ring = |pts: &[Point]| -> Vec<geojson::Position> {
        pts.iter()
            .map(|p| {
                let (lon, lat) = proj.inverse(p);
                geojson::Position::from([lon, lat])
            })
            .collect()
    };
    let coordinates = polys
        .iter()
        .map(|poly| std::iter::once(ring(poly.exterior())).chain(poly.holes().iter().map(|h| ring(h))).collect())
        .collect();
    Feature {
        geometry: Some(Geometry::new(GeometryValue::MultiPolygon { coordinates })),
        properties: Some(properties),
        ..Feature::default()
    }
}

pub fn write_geojson(path: &Path, features: Vec<Feature>) -> Result<usize> {
    let n = features.len();
    let fc = FeatureCollection { bbox: None, features, foreign_members: None };
    let file = File::create(path).map_err(|e| invalid(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &GeoJson::FeatureCollection(fc)).map_err(|e| invalid(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| invalid(path, e))?;
    Ok(n)
}

/// Parses a FeatureCollection back into per-feature property maps.
pub fn read_feature_properties(path: &Path) -> Result<Vec<JsonObject>> {
    Ok(read_features(path)?.into_iter().map(|f| f.properties.unwrap_or_default()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 12345.678, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn table_reports_row_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "antenna_id,lon,lat\na,1,2\nb,x,3\n").unwrap();
        let err = read_points(&p, "antenna_id", &Projection::new(0.0, 0.0)).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("lon"), "{err}");
        std::fs::write(&p, "antenna_id,lon\na,1\n").unwrap();
        assert!(read_points(&p, "antenna_id", &Projection::new(0.0, 0.0)).is_err());
    }
}
