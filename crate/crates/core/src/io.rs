//! Reading node/edge tables and writing result layers as CSV or GeoJSON.
//!
//! Coordinates are written exactly as read, in the planar CRS of the input.
//! GeoJSON consumers expecting WGS84 longitude/latitude will misplace them;
//! every feature carries a `crs_note` property saying so.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
#[cfg(test)]
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hotspot::{CellSurface, Confidence, GridSpec, OverlapReport};
use crate::model::{hex, EdgeRecord, NodeRecord, SpatialSocialNetwork};
use crate::null_model::SignificanceReport;
use crate::scan::ScanResult;
use crate::sensitivity::{NodeVariance, SpecSummary, SweepCurve};

pub const CRS_NOTE: &str =
    "coordinates are in the input's projected CRS (meters), not WGS84 longitude/latitude";

/// Ordered key/value pairs describing how an output was produced.
pub type Provenance = Vec<(String, String)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    GeoJson,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geojson" | "json" => Ok(Format::GeoJson),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown output format `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::GeoJson => "geojson",
            Format::Csv => "csv",
        })
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => parse_err(path, line, format!("{kind:?}")),
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| parse_err(path, 1, format!("missing `{name}` column")))
}

fn parse_coord(text: &str, what: &str, path: &Path, line: u64) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(
            path,
            line,
            format!("`{text}` is not a finite {what} coordinate"),
        )),
    }
}

/// Node table with columns `id, x, y` and an optional `label`.
pub fn read_nodes(path: &Path) -> Result<Vec<NodeRecord>> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(parse_err(path, 1, "missing header row"));
    }
    let id_col = column(&headers, "id", path)?;
    let x_col = column(&headers, "x", path)?;
    let y_col = column(&headers, "y", path)?;
    let label_col = headers.iter().position(|h| h.eq_ignore_ascii_case("label"));

    let mut nodes = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let id = field(id_col);
        if id.is_empty() {
            return Err(parse_err(path, line, "empty node id"));
        }
        if let Some(first) = seen.insert(id.to_string(), line) {
            return Err(parse_err(
                path,
                line,
                format!("duplicate node id `{id}` (first on line {first})"),
            ));
        }
        let mut node = NodeRecord::new(
            id,
            parse_coord(field(x_col), "x", path, line)?,
            parse_coord(field(y_col), "y", path, line)?,
        );
        node.label = label_col
            .map(field)
            .filter(|l| !l.is_empty())
            .map(str::to_string);
        nodes.push(node);
    }
    Ok(nodes)
}

/// Edge table with columns `source, target`; each edge comes with its line.
pub fn read_edges(path: &Path) -> Result<Vec<(EdgeRecord, u64)>> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let a_col = column(&headers, "source", path)?;
    let b_col = column(&headers, "target", path)?;
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let a = record.get(a_col).unwrap_or("");
        let b = record.get(b_col).unwrap_or("");
        if a.is_empty() || b.is_empty() {
            return Err(parse_err(path, line, "edge needs both source and target"));
        }
        edges.push((EdgeRecord::new(a, b), line));
    }
    Ok(edges)
}

pub fn load_network(node_path: &Path, edge_path: &Path) -> Result<SpatialSocialNetwork> {
    let nodes = read_nodes(node_path)?;
    let edges = read_edges(edge_path)?;
    let ids: HashSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
    for (edge, line) in &edges {
        for id in [&edge.a, &edge.b] {
            if !ids.contains(id.as_str()) {
                return Err(Error::DanglingEdgeAt {
                    path: edge_path.to_path_buf(),
                    line: *line,
                    id: id.clone(),
                });
            }
        }
        if edge.a == edge.b {
            return Err(Error::SelfLoopAt {
                path: edge_path.to_path_buf(),
                line: *line,
                id: edge.a.clone(),
            });
        }
    }
    let edges: Vec<EdgeRecord> = edges.into_iter().map(|(e, _)| e).collect();
    SpatialSocialNetwork::build(nodes, &edges)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut out: BufWriter<File>) -> Result<()> {
    out.flush().map_err(|e| Error::io(path, e))
}

fn csv_write_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::io(path, std::io::Error::other(format!("{kind:?}"))),
    }
}

/// Writes a network back out as node and edge tables.
pub fn write_network(net: &SpatialSocialNetwork, node_path: &Path, edge_path: &Path) -> Result<()> {
    let (nodes, edges) = net.to_records();
    let mut w = csv::Writer::from_writer(create(node_path)?);
    let werr = |e| csv_write_err(node_path, e);
    w.write_record(["id", "x", "y", "label"]).map_err(werr)?;
    for n in &nodes {
        w.write_record([
            n.id.as_str(),
            &num(n.x),
            &num(n.y),
            n.label.as_deref().unwrap_or(""),
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(|e| Error::io(node_path, e))?;

    let mut w = csv::Writer::from_writer(create(edge_path)?);
    let werr = |e| csv_write_err(edge_path, e);
    w.write_record(["source", "target"]).map_err(werr)?;
    for e in &edges {
        w.write_record([&e.a, &e.b]).map_err(werr)?;
    }
    w.flush().map_err(|e| Error::io(edge_path, e))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One node of one result layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub spec: String,
    pub m: usize,
    pub edge_count: u64,
    pub density: f64,
    pub triads: Option<u64>,
    pub transitivity: Option<f64>,
    pub variance: Option<f64>,
    pub null_mean: Option<f64>,
    pub null_sd: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultLayer {
    pub rows: Vec<ResultRow>,
}

impl ResultLayer {
    pub fn from_scan(net: &SpatialSocialNetwork, result: &ScanResult) -> Self {
        let spec = result.spec.to_string();
        let rows = result
            .values
            .iter()
            .map(|v| {
                let node = net.node(v.focal);
                ResultRow {
                    id: node.id.clone(),
                    x: node.x,
                    y: node.y,
                    spec: spec.clone(),
                    m: v.m,
                    edge_count: v.edge_count,
                    density: v.density,
                    triads: v.triads,
                    transitivity: v.transitivity,
                    variance: None,
                    null_mean: None,
                    null_sd: None,
                    p_value: None,
                }
            })
            .collect();
        ResultLayer { rows }
    }

    /// Attaches each node's across-spec variance.
    pub fn with_variance(mut self, variance: &[NodeVariance]) -> Self {
        for v in variance {
            if let Some(row) = self.rows.get_mut(v.node) {
                row.variance = Some(v.variance);
            }
        }
        self
    }

    pub fn with_significance(mut self, report: &SignificanceReport) -> Self {
        for s in &report.nodes {
            if let Some(row) = self.rows.get_mut(s.node) {
                row.null_mean = Some(s.null_mean);
                row.null_sd = Some(s.null_sd);
                row.p_value = Some(s.p_value);
            }
        }
        self
    }
}

const RESULT_COLUMNS: [&str; 13] = [
    "id",
    "x",
    "y",
    "spec",
    "m",
    "edge_count",
    "density",
    "triads",
    "transitivity",
    "variance",
    "null_mean",
    "null_sd",
    "p_value",
];

fn write_comments(out: &mut impl Write, provenance: &Provenance, path: &Path) -> Result<()> {
    for (k, v) in provenance {
        writeln!(out, "# {k}: {v}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn provenance_json(provenance: &Provenance) -> Value {
    Value::Array(
        provenance
            .iter()
            .map(|(k, v)| json!({ "key": k, "value": v }))
            .collect(),
    )
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    finish(path, out)
}

fn f64_json(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Writes every row of every layer. CSV output starts with `# key: value`
/// provenance comments; GeoJSON output is a FeatureCollection of points with
/// a top-level `provenance` member.
pub fn write_results(
    layers: &[ResultLayer],
    path: &Path,
    format: Format,
    provenance: &Provenance,
) -> Result<()> {
    let rows = layers.iter().flat_map(|l| l.rows.iter());
    match format {
        Format::Csv => {
            let mut out = create(path)?;
            write_comments(&mut out, provenance, path)?;
            let mut w = csv::Writer::from_writer(out);
            let werr = |e| csv_write_err(path, e);
            w.write_record(RESULT_COLUMNS).map_err(werr)?;
            for r in rows {
                w.write_record([
                    r.id.clone(),
                    num(r.x),
                    num(r.y),
                    r.spec.clone(),
                    r.m.to_string(),
                    r.edge_count.to_string(),
                    num(r.density),
                    opt(r.triads),
                    opt_num(r.transitivity),
                    opt_num(r.variance),
                    opt_num(r.null_mean),
                    opt_num(r.null_sd),
                    opt_num(r.p_value),
                ])
                .map_err(werr)?;
            }
            let out = w
                .into_inner()
                .map_err(|e| Error::io(path, e.into_error()))?;
            finish(path, out)
        }
        Format::GeoJson => {
            let features: Vec<Value> = rows
                .map(|r| {
                    let mut props = Map::new();
                    props.insert("id".into(), json!(r.id));
                    props.insert("spec".into(), json!(r.spec));
                    props.insert("m".into(), json!(r.m));
                    props.insert("edge_count".into(), json!(r.edge_count));
                    props.insert("density".into(), f64_json(r.density));
                    props.insert("triads".into(), json!(r.triads));
                    props.insert("transitivity".into(), r.transitivity.map_or(Value::Null, f64_json));
                    props.insert("variance".into(), r.variance.map_or(Value::Null, f64_json));
                    props.insert("null_mean".into(), r.null_mean.map_or(Value::Null, f64_json));
                    props.insert("null_sd".into(), r.null_sd.map_or(Value::Null, f64_json));
                    props.insert("p_value".into(), r.p_value.map_or(Value::Null, f64_json));
                    props.insert("crs_note".into(), json!(CRS_NOTE));
                    json!({
                        "type": "Feature",
                        "geometry": { "type": "Point", "coordinates": [f64_json(r.x), f64_json(r.y)] },
                        "properties": props,
                    })
                })
                .collect();
            let doc = json!({
                "type": "FeatureCollection",
                "provenance": provenance_json(provenance),
                "features": features,
            });
            write_json(path, &doc)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_provenance_json(doc: &Value) -> Provenance {
    doc.get("provenance")
        .and_then(Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(|i| {
                    Some((
                        i.get("key")?.as_str()?.to_string(),
                        i.get("value")?.as_str()?.to_string(),
                    ))
                })
                .collect()
        })
        .unwrap_or_default()
}

fn read_provenance_csv(text: &str) -> Provenance {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.trim_start_matches('#').trim_start().split_once(": ")?;
            Some((k.to_string(), v.to_string()))
        })
        .collect()
}

/// Reads a file written by [`write_results`], in either format.
pub fn read_results(path: &Path) -> Result<(Vec<ResultRow>, Provenance)> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        read_results_geojson(path, &text)
    } else {
        read_results_csv(path, &text)
    }
}

fn read_results_geojson(path: &Path, text: &str) -> Result<(Vec<ResultRow>, Provenance)> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(path, 1, "not a FeatureCollection"))?;
    let bad = |i: usize, what: &str| parse_err(path, 0, format!("feature {i}: bad `{what}`"));
    let mut rows = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let coords = f
            .pointer("/geometry/coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(i, "geometry"))?;
        let p = f.get("properties").ok_or_else(|| bad(i, "properties"))?;
        let float = |k: &str| p.get(k).and_then(Value::as_f64);
        let int = |k: &str| p.get(k).and_then(Value::as_u64);
        rows.push(ResultRow {
            id: p
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| bad(i, "id"))?
                .to_string(),
            x: coords
                .first()
                .and_then(Value::as_f64)
                .ok_or_else(|| bad(i, "x"))?,
            y: coords
                .get(1)
                .and_then(Value::as_f64)
                .ok_or_else(|| bad(i, "y"))?,
            spec: p
                .get("spec")
                .and_then(Value::as_str)
                .ok_or_else(|| bad(i, "spec"))?
                .to_string(),
            m: int("m").ok_or_else(|| bad(i, "m"))? as usize,
            edge_count: int("edge_count").ok_or_else(|| bad(i, "edge_count"))?,
            density: float("density").ok_or_else(|| bad(i, "density"))?,
            triads: int("triads"),
            transitivity: float("transitivity"),
            variance: float("variance"),
            null_mean: float("null_mean"),
            null_sd: float("null_sd"),
            p_value: float("p_value"),
        });
    }
    Ok((rows, read_provenance_json(&doc)))
}

fn read_results_csv(path: &Path, text: &str) -> Result<(Vec<ResultRow>, Provenance)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols: Vec<usize> = RESULT_COLUMNS
        .iter()
        .map(|c| column(&headers, c, path))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| record.get(cols[i]).unwrap_or("");
        fn req<T: FromStr>(s: &str, name: &str, path: &Path, line: u64) -> Result<T> {
            s.parse()
                .map_err(|_| parse_err(path, line, format!("bad `{name}` value `{s}`")))
        }
        fn optional<T: FromStr>(s: &str, name: &str, path: &Path, line: u64) -> Result<Option<T>> {
            if s.is_empty() {
                Ok(None)
            } else {
                req(s, name, path, line).map(Some)
            }
        }
        rows.push(ResultRow {
            id: get(0).to_string(),
            x: req(get(1), "x", path, line)?,
            y: req(get(2), "y", path, line)?,
            spec: get(3).to_string(),
            m: req(get(4), "m", path, line)?,
            edge_count: req(get(5), "edge_count", path, line)?,
            density: req(get(6), "density", path, line)?,
            triads: optional(get(7), "triads", path, line)?,
            transitivity: optional(get(8), "transitivity", path, line)?,
            variance: optional(get(9), "variance", path, line)?,
            null_mean: optional(get(10), "null_mean", path, line)?,
            null_sd: optional(get(11), "null_sd", path, line)?,
            p_value: optional(get(12), "p_value", path, line)?,
        });
    }
    Ok((rows, read_provenance_csv(text)))
}

fn write_table<I, R>(path: &Path, provenance: &Provenance, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = create(path)?;
    write_comments(&mut out, provenance, path)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(|e| csv_write_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_write_err(path, e))?;
    }
    let out = w
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    finish(path, out)
}

/// One row per (spec, statistic): mean, st_dev, zero count and share.
pub fn write_summary_csv(
    path: &Path,
    summaries: &[SpecSummary],
    provenance: &Provenance,
) -> Result<()> {
    write_table(
        path,
        provenance,
        &[
            "spec",
            "statistic",
            "mean",
            "st_dev",
            "zero_count",
            "zero_fraction",
        ],
        summaries.iter().map(|s| {
            vec![
                s.spec.to_string(),
                s.statistic.to_string(),
                num(s.mean),
                num(s.st_dev),
                s.zero_count.to_string(),
                num(s.zero_fraction),
            ]
        }),
    )
}

/// One row per node: id, coordinates, variance, then the value under each spec.
pub fn write_variance_csv(
    path: &Path,
    net: &SpatialSocialNetwork,
    specs: &[String],
    variance: &[NodeVariance],
    provenance: &Provenance,
) -> Result<()> {
    let mut header = vec!["id", "x", "y", "statistic", "variance"];
    header.extend(specs.iter().map(String::as_str));
    write_table(
        path,
        provenance,
        &header,
        variance.iter().map(|v| {
            let node = net.node(v.node);
            let mut row = vec![
                node.id.clone(),
                num(node.x),
                num(node.y),
                v.statistic.to_string(),
                num(v.variance),
            ];
            row.extend(v.values.iter().map(|&x| num(x)));
            row
        }),
    )
}

pub fn write_sweep_csv(path: &Path, curves: &[SweepCurve], provenance: &Provenance) -> Result<()> {
    write_table(
        path,
        provenance,
        &["kind", "statistic", "param", "mean", "st_dev"],
        curves.iter().flat_map(|c| {
            c.points.iter().map(move |p| {
                vec![
                    c.kind.to_string(),
                    c.statistic.to_string(),
                    num(p.param),
                    num(p.mean),
                    num(p.st_dev),
                ]
            })
        }),
    )
}

pub fn write_overlap_csv(
    path: &Path,
    report: &OverlapReport,
    provenance: &Provenance,
) -> Result<()> {
    write_table(
        path,
        provenance,
        &[
            "confidence",
            "a_only",
            "b_only",
            "both",
            "neither",
            "overlap",
        ],
        report.levels.iter().map(|l| {
            vec![
                l.level.percent().to_string(),
                l.a_only.to_string(),
                l.b_only.to_string(),
                l.both.to_string(),
                l.neither.to_string(),
                num(l.overlap()),
            ]
        }),
    )
}

/// Gi* cell surface as a FeatureCollection of square polygons. The grid
/// geometry is stored in a top-level `grid` member so the surface can be
/// read back with [`read_cell_surface`].
pub fn write_cell_surface(
    path: &Path,
    surface: &CellSurface,
    provenance: &Provenance,
) -> Result<()> {
    let grid = &surface.grid;
    let features: Vec<Value> = surface
        .z
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let (col, row) = grid.cell_position(i);
            let ring: Vec<Value> = grid
                .cell_ring(i)
                .iter()
                .map(|p| json!([f64_json(p[0]), f64_json(p[1])]))
                .collect();
            json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": [ring] },
                "properties": {
                    "col": col,
                    "row": row,
                    "z": z.map_or(Value::Null, f64_json),
                    "confidence": z.map_or(0, |z| Confidence::from_z(z).percent()),
                    "hot": z.is_some_and(|z| z > 0.0 && Confidence::from_z(z) != Confidence::None),
                    "crs_note": CRS_NOTE,
                },
            })
        })
        .collect();
    let doc = json!({
        "type": "FeatureCollection",
        "provenance": provenance_json(provenance),
        "grid": {
            "origin": [f64_json(grid.origin[0]), f64_json(grid.origin[1])],
            "cell_size": f64_json(grid.cell_size),
            "cols": grid.cols,
            "rows": grid.rows,
        },
        "radius": f64_json(surface.radius),
        "features": features,
    });
    write_json(path, &doc)
}

pub fn read_cell_surface(path: &Path) -> Result<CellSurface> {
    let text = read_text(path)?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))?;
    let bad = |what: &str| parse_err(path, 0, format!("missing or bad `{what}`"));
    let g = doc.get("grid").ok_or_else(|| bad("grid"))?;
    let origin = g
        .get("origin")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("grid.origin"))?;
    let grid = GridSpec::new(
        [
            origin
                .first()
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("grid.origin"))?,
            origin
                .get(1)
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("grid.origin"))?,
        ],
        g.get("cell_size")
            .and_then(Value::as_f64)
            .ok_or_else(|| bad("grid.cell_size"))?,
        g.get("cols")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("grid.cols"))? as usize,
        g.get("rows")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("grid.rows"))? as usize,
    )?;
    let radius = doc
        .get("radius")
        .and_then(Value::as_f64)
        .ok_or_else(|| bad("radius"))?;
    let mut z = vec![None; grid.cell_count()];
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("features"))?;
    for f in features {
        let p = f.get("properties").ok_or_else(|| bad("properties"))?;
        let col = p
            .get("col")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("col"))? as usize;
        let row = p
            .get("row")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("row"))? as usize;
        if col >= grid.cols || row >= grid.rows {
            return Err(bad("col/row"));
        }
        z[grid.cell_index(col, row)] = p.get("z").and_then(Value::as_f64);
    }
    Ok(CellSurface { grid, radius, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{Backend, PointIndex};
    use crate::neighborhood::NeighborhoodSpec;
    use crate::scan::triad_scan;
    use std::fs;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loads_small_files() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", "id,x,y\na,0,0\nb,1,0\nc,0,1\n");
        let e = write(dir.path(), "e.csv", "source,target\na,b\nb,c\n");
        let net = load_network(&n, &e).unwrap();
        assert_eq!((net.node_count(), net.edge_count()), (3, 2));
    }

    #[test]
    fn dangling_edge_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", "id,x,y\na,0,0\nb,1,0\n");
        let e = write(dir.path(), "e.csv", "source,target\na,b\nb,zz\n");
        match load_network(&n, &e).unwrap_err() {
            Error::DanglingEdgeAt { line, id, .. } => assert_eq!((line, id.as_str()), (3, "zz")),
            other => panic!("{other}"),
        }
        let e = write(dir.path(), "e2.csv", "source,target\na,a\n");
        assert!(matches!(
            load_network(&n, &e),
            Err(Error::SelfLoopAt { line: 2, .. })
        ));
    }

    #[test]
    fn repeated_header_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", "id,x,y\nid,x,y\n");
        match read_nodes(&n).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
        let n = write(dir.path(), "n2.csv", "id,x,y\na,1,NaN\n");
        assert!(matches!(read_nodes(&n), Err(Error::Parse { line: 2, .. })));
        let n = write(dir.path(), "n3.csv", "id,x,y\na,1,2\na,3,4\n");
        assert!(matches!(read_nodes(&n), Err(Error::Parse { line: 3, .. })));
        let n = write(dir.path(), "n4.csv", "name,x,y\na,1,2\n");
        assert!(matches!(read_nodes(&n), Err(Error::Parse { .. })));
        assert!(read_nodes(&dir.path().join("missing.csv"))
            .unwrap_err()
            .is_io());
    }

    #[test]
    fn labels_are_optional() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "n.csv", "id,x,y,label\na,0,0,boss\nb,1,0,\n");
        let nodes = read_nodes(&n).unwrap();
        assert_eq!(nodes[0].label.as_deref(), Some("boss"));
        assert_eq!(nodes[1].label, None);
    }

    fn five() -> SpatialSocialNetwork {
        let nodes = vec![
            NodeRecord::new("A", 0.0, 0.0),
            NodeRecord::new("B", 300.0, 0.0),
            NodeRecord::new("C", 0.0, 400.0),
            NodeRecord::new("D", 2000.0, 0.0),
            NodeRecord::new("E", 300.0, 300.0),
        ];
        let edges = [("A", "B"), ("A", "C"), ("B", "C"), ("A", "D"), ("D", "E")]
            .map(|(a, b)| EdgeRecord::new(a, b));
        SpatialSocialNetwork::build(nodes, &edges).unwrap()
    }

    #[test]
    fn results_round_trip_both_formats() {
        let net = five();
        let index = PointIndex::build(&net, Backend::Grid);
        let spec = NeighborhoodSpec::euclidean(500.0).unwrap();
        let result = triad_scan(&net, &index, &spec).unwrap();
        let mut layer = ResultLayer::from_scan(&net, &result);
        layer.rows[2].variance = Some(1.0 / 3.0);
        let prov = vec![("command".to_string(), "scan".to_string())];
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("r.csv");
        let json_path = dir.path().join("r.geojson");
        write_results(&[layer.clone()], &csv_path, Format::Csv, &prov).unwrap();
        write_results(&[layer.clone()], &json_path, Format::GeoJson, &prov).unwrap();
        let (a, pa) = read_results(&csv_path).unwrap();
        let (b, pb) = read_results(&json_path).unwrap();
        assert_eq!(a, layer.rows);
        assert_eq!(b, layer.rows);
        assert_eq!(pa, prov);
        assert_eq!(pb, prov);
        assert_eq!(a.len(), 5);
        assert_eq!(a[0].density, 0.5);
    }

    #[test]
    fn empty_layer_is_valid_collection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.geojson");
        write_results(&[], &path, Format::GeoJson, &vec![]).unwrap();
        let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(doc["type"], "FeatureCollection");
        assert_eq!(doc["features"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn awkward_floats_round_trip() {
        for v in [
            0.1 + 0.2,
            1e-300,
            1e300,
            -0.0,
            2.0f64.sqrt(),
            5e-324,
            123456789.12345679,
        ] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn network_round_trip() {
        let mut net = five();
        let (mut nodes, edges) = net.to_records();
        nodes[1].label = Some("x,y".into());
        net = SpatialSocialNetwork::build(nodes, &edges).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = (dir.path().join("n.csv"), dir.path().join("e.csv"));
        write_network(&net, &n, &e).unwrap();
        let back = load_network(&n, &e).unwrap();
        assert_eq!(back.fingerprint(), net.fingerprint());
        assert_eq!(back.node(1).label.as_deref(), Some("x,y"));
        assert_eq!(file_sha256(&n).unwrap().len(), 64);
    }
}
