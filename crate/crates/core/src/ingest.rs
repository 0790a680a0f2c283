//! Trajectory, road network and ground-truth route readers and writers.
//!
//! Native formats:
//!
//! * trajectory CSV, header `timestamp,lat,lon`; timestamps are epoch seconds
//!   (integer or fractional) or ISO-8601, detected from the first data row
//! * network CSV, header `edge_id,node_from,node_to,wkt`; geometry is a
//!   quoted WKT `LINESTRING` in lon-lat order
//! * edge lists (ground truth, matched sequences), one edge id per line
//!
//! Lines starting with `#` are ignored everywhere. The `SeattleBenchmark`
//! presets read the tab-separated layout of the public Seattle map-matching
//! benchmark; see the README for the column mapping.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};

use crate::error::{Error, Result};
use crate::geo::{
    haversine_distance, GeoPoint, Polyline, Projection, SpatialIndex, DEFAULT_CELL_SIZE_M,
};

/// One GPS fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    /// Seconds; epoch or any monotonic offset.
    pub timestamp: f64,
    pub position: GeoPoint,
    /// Ordinal of the data row in the source file.
    pub source_index: usize,
}

/// Time-ordered sequence of GPS fixes.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: String,
    records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    /// Validates non-emptiness, coordinates, and non-decreasing timestamps.
    pub fn new(id: impl Into<String>, records: Vec<TrajectoryRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::TrajectoryTooShort { len: 0, needed: 1 });
        }
        for (i, r) in records.iter().enumerate() {
            r.position.validate()?;
            if !r.timestamp.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "record {i} has a non-finite timestamp"
                )));
            }
            if i > 0 && r.timestamp < records[i - 1].timestamp {
                return Err(Error::InvalidParameter(format!(
                    "record {i}: timestamp {} precedes {}",
                    r.timestamp,
                    records[i - 1].timestamp
                )));
            }
        }
        Ok(Trajectory {
            id: id.into(),
            records,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = &GeoPoint> {
        self.records.iter().map(|r| &r.position)
    }
}

/// How timestamps are laid out in a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeColumns {
    /// One column holding epoch seconds or ISO-8601 text.
    Single(String),
    /// Separate UTC date and time columns with chrono format strings.
    Split {
        date: String,
        time: String,
        date_format: String,
        time_format: String,
    },
}

/// Column layout of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFormat {
    pub delimiter: u8,
    pub time: TimeColumns,
    pub lat: String,
    pub lon: String,
}

impl TrajectoryFormat {
    pub fn native() -> Self {
        TrajectoryFormat {
            delimiter: b',',
            time: TimeColumns::Single("timestamp".into()),
            lat: "lat".into(),
            lon: "lon".into(),
        }
    }

    pub fn seattle_benchmark() -> Self {
        TrajectoryFormat {
            delimiter: b'\t',
            time: TimeColumns::Split {
                date: "Date (UTC)".into(),
                time: "Time (UTC)".into(),
                date_format: "%d-%b-%Y".into(),
                time_format: "%H:%M:%S".into(),
            },
            lat: "Latitude".into(),
            lon: "Longitude".into(),
        }
    }
}

/// Road network file layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkFormat {
    Native,
    SeattleBenchmark,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn open_csv(path: &Path, delimiter: u8) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| parse_err(path, 1, format!("missing column {name:?}")))
}

fn csv_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn field<'r>(rec: &'r csv::StringRecord, i: usize, path: &Path) -> Result<&'r str> {
    rec.get(i)
        .ok_or_else(|| parse_err(path, csv_line(rec), format!("missing field {}", i + 1)))
}

fn parse_f64(s: &str, what: &str, path: &Path, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("bad {what} {s:?}")))
}

/// Parses ISO-8601 text as UTC seconds. Offsets are honored; naive values are
/// taken as UTC.
pub fn parse_iso8601(s: &str) -> Option<f64> {
    let to_secs = |dt: NaiveDateTime| {
        let utc = dt.and_utc();
        utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) / 1e9
    };
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(to_secs(dt.naive_utc()));
    }
    let trimmed = s.strip_suffix('Z').unwrap_or(s);
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(trimmed, f).ok())
        .map(to_secs)
}

enum TimeParser {
    Epoch(usize),
    Iso(usize),
    Split {
        date: usize,
        time: usize,
        date_format: String,
        time_format: String,
    },
}

impl TimeParser {
    fn parse(&self, rec: &csv::StringRecord, path: &Path, line: usize) -> Result<f64> {
        match self {
            TimeParser::Epoch(i) => parse_f64(field(rec, *i, path)?, "timestamp", path, line),
            TimeParser::Iso(i) => {
                let s = field(rec, *i, path)?;
                parse_iso8601(s)
                    .ok_or_else(|| parse_err(path, line, format!("bad timestamp {s:?}")))
            }
            TimeParser::Split {
                date,
                time,
                date_format,
                time_format,
            } => {
                let (ds, ts) = (field(rec, *date, path)?, field(rec, *time, path)?);
                let d = NaiveDate::parse_from_str(ds, date_format)
                    .map_err(|_| parse_err(path, line, format!("bad date {ds:?}")))?;
                let t = NaiveTime::parse_from_str(ts, time_format)
                    .map_err(|_| parse_err(path, line, format!("bad time {ts:?}")))?;
                let utc = d.and_time(t).and_utc();
                Ok(utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) / 1e9)
            }
        }
    }
}

/// Reads a trajectory, preserving file order.
pub fn parse_trajectory(path: impl AsRef<Path>, format: &TrajectoryFormat) -> Result<Trajectory> {
    let path = path.as_ref();
    let mut rdr = open_csv(path, format.delimiter)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let lat_col = column(&headers, &format.lat, path)?;
    let lon_col = column(&headers, &format.lon, path)?;

    let mut time: Option<TimeParser> = None;
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    for row in rdr.records() {
        let rec = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = csv_line(&rec);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if time.is_none() {
            time = Some(match &format.time {
                TimeColumns::Single(name) => {
                    let i = column(&headers, name, path)?;
                    // detected once per file from the first data row
                    if field(&rec, i, path)?.parse::<f64>().is_ok() {
                        TimeParser::Epoch(i)
                    } else {
                        TimeParser::Iso(i)
                    }
                }
                TimeColumns::Split {
                    date,
                    time,
                    date_format,
                    time_format,
                } => TimeParser::Split {
                    date: column(&headers, date, path)?,
                    time: column(&headers, time, path)?,
                    date_format: date_format.clone(),
                    time_format: time_format.clone(),
                },
            });
        }
        let timestamp = time.as_ref().unwrap().parse(&rec, path, line)?;
        if !timestamp.is_finite() {
            return Err(parse_err(path, line, "non-finite timestamp"));
        }
        let lat = parse_f64(field(&rec, lat_col, path)?, "latitude", path, line)?;
        let lon = parse_f64(field(&rec, lon_col, path)?, "longitude", path, line)?;
        let position = GeoPoint::new(lat, lon).map_err(|e| parse_err(path, line, e.to_string()))?;
        if let Some(prev) = records.last() {
            if timestamp < prev.timestamp {
                return Err(Error::NonMonotonicTime {
                    path: path.to_path_buf(),
                    line,
                    prev: prev.timestamp,
                    got: timestamp,
                });
            }
        }
        records.push(TrajectoryRecord {
            timestamp,
            position,
            source_index: records.len(),
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    let id = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Trajectory::new(id, records)
}

/// Writes the native trajectory CSV. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_trajectory_csv<W: Write>(records: &[TrajectoryRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "timestamp,lat,lon")?;
    for r in records {
        writeln!(w, "{},{},{}", r.timestamp, r.position.lat, r.position.lon)?;
    }
    w.flush()
}

pub fn save_trajectory(records: &[TrajectoryRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory_csv(records, io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

/// Parses `LINESTRING(x y, x y, ...)` into lon-lat points.
pub fn parse_wkt_linestring(s: &str) -> std::result::Result<Vec<GeoPoint>, String> {
    let s = s.trim();
    let head = s.get(..10).unwrap_or("");
    if !head.eq_ignore_ascii_case("LINESTRING") {
        return Err(format!(
            "expected LINESTRING, got {:?}",
            s.chars().take(20).collect::<String>()
        ));
    }
    let body = s[10..].trim();
    let inner = body
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or_else(|| "unbalanced parentheses in LINESTRING".to_string())?;
    let mut out = Vec::new();
    for tuple in inner.split(',') {
        let mut nums = tuple.split_whitespace();
        let (Some(xs), Some(ys)) = (nums.next(), nums.next()) else {
            return Err(format!("bad coordinate tuple {:?}", tuple.trim()));
        };
        let lon: f64 = xs.parse().map_err(|_| format!("bad longitude {xs:?}"))?;
        let lat: f64 = ys.parse().map_err(|_| format!("bad latitude {ys:?}"))?;
        out.push(GeoPoint::new(lat, lon).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Edge as read from a file, before projection.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEdge {
    pub edge_id: String,
    pub node_from: String,
    pub node_to: String,
    pub vertices: Vec<GeoPoint>,
}

/// A road arc between two nodes.
#[derive(Debug, Clone)]
pub struct RoadEdge {
    pub edge_id: String,
    pub node_from: String,
    pub node_to: String,
    /// Node positions in [`RoadNetwork::node_id`] order.
    pub from_node: usize,
    pub to_node: usize,
    pub geometry: Polyline,
    /// Source vertices, with consecutive duplicates dropped.
    pub geo_vertices: Vec<GeoPoint>,
    /// Planar length in meters.
    pub length: f64,
}

impl RoadEdge {
    pub fn touches(&self, node: usize) -> bool {
        self.from_node == node || self.to_node == node
    }

    pub fn shares_node(&self, other: &RoadEdge) -> bool {
        self.touches(other.from_node) || self.touches(other.to_node)
    }
}

/// Max distance between two edge endpoints that claim the same node id.
pub const NODE_TOLERANCE_M: f64 = 1.0;

/// Road graph with a spatial index over edge geometry.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    edges: Vec<RoadEdge>,
    by_id: HashMap<String, usize>,
    nodes: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    projection: Projection,
    index: SpatialIndex,
}

impl RoadNetwork {
    pub fn from_edges(raw: Vec<RawEdge>) -> Result<Self> {
        RoadNetwork::with_cell_size(raw, DEFAULT_CELL_SIZE_M)
    }

    pub fn with_cell_size(raw: Vec<RawEdge>, cell_size: f64) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(raw.len());
        let mut cleaned = Vec::with_capacity(raw.len());
        for (i, mut e) in raw.into_iter().enumerate() {
            if by_id.insert(e.edge_id.clone(), i).is_some() {
                return Err(Error::DuplicateEdgeId(e.edge_id));
            }
            e.vertices.dedup();
            if e.vertices.len() < 2 {
                return Err(Error::TooFewVertices(e.edge_id));
            }
            for n in [&e.node_from, &e.node_to] {
                if n.is_empty() {
                    return Err(Error::DanglingNode {
                        node: n.clone(),
                        edge_id: e.edge_id.clone(),
                        reason: "empty node id".into(),
                    });
                }
            }
            cleaned.push(e);
        }
        let projection = if cleaned.is_empty() {
            Projection::new(GeoPoint { lat: 0.0, lon: 0.0 })?
        } else {
            Projection::centered_on(cleaned.iter().flat_map(|e| e.vertices.iter()))?
        };

        let mut node_ids: HashMap<String, usize> = HashMap::new();
        let mut nodes: Vec<String> = Vec::new();
        let mut node_pos: Vec<GeoPoint> = Vec::new();
        let mut adjacency: Vec<Vec<usize>> = Vec::new();
        let mut edges = Vec::with_capacity(cleaned.len());
        for (ei, e) in cleaned.into_iter().enumerate() {
            let ends = [
                (&e.node_from, e.vertices[0]),
                (&e.node_to, *e.vertices.last().unwrap()),
            ];
            let mut idx = [0usize; 2];
            for (k, (name, at)) in ends.into_iter().enumerate() {
                let ni = match node_ids.get(name.as_str()) {
                    Some(&ni) => {
                        if haversine_distance(&node_pos[ni], &at) > NODE_TOLERANCE_M {
                            return Err(Error::DanglingNode {
                                node: name.clone(),
                                edge_id: e.edge_id.clone(),
                                reason: "edge endpoint does not coincide with the node".into(),
                            });
                        }
                        ni
                    }
                    None => {
                        let ni = nodes.len();
                        node_ids.insert(name.clone(), ni);
                        nodes.push(name.clone());
                        node_pos.push(at);
                        adjacency.push(Vec::new());
                        ni
                    }
                };
                idx[k] = ni;
                if adjacency[ni].last() != Some(&ei) {
                    adjacency[ni].push(ei);
                }
            }
            let planar = e
                .vertices
                .iter()
                .map(|v| projection.project(v))
                .collect::<Result<Vec<_>>>()?;
            let geometry =
                Polyline::new(planar).map_err(|_| Error::TooFewVertices(e.edge_id.clone()))?;
            edges.push(RoadEdge {
                length: geometry.length(),
                edge_id: e.edge_id,
                node_from: e.node_from,
                node_to: e.node_to,
                from_node: idx[0],
                to_node: idx[1],
                geometry,
                geo_vertices: e.vertices,
            });
        }
        let index = SpatialIndex::build(
            edges.iter().enumerate().map(|(i, e)| (i, &e.geometry)),
            cell_size,
        )?;
        Ok(RoadNetwork {
            edges,
            by_id,
            nodes,
            adjacency,
            projection,
            index,
        })
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &RoadEdge {
        &self.edges[i]
    }

    pub fn edge_index(&self, edge_id: &str) -> Option<usize> {
        self.by_id.get(edge_id).copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_id(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    /// Edges incident to `node`, in input order.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    /// Rebuilds the network as raw edges, in input order.
    pub fn to_raw_edges(&self) -> Vec<RawEdge> {
        self.edges
            .iter()
            .map(|e| RawEdge {
                edge_id: e.edge_id.clone(),
                node_from: e.node_from.clone(),
                node_to: e.node_to.clone(),
                vertices: e.geo_vertices.clone(),
            })
            .collect()
    }
}

fn wkt_of(vertices: &[GeoPoint]) -> String {
    let coords: Vec<String> = vertices
        .iter()
        .map(|v| format!("{} {}", v.lon, v.lat))
        .collect();
    format!("LINESTRING({})", coords.join(", "))
}

pub fn write_network_csv<W: Write>(edges: &[RawEdge], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io_err = |e: csv::Error| Error::io("<network>", io::Error::other(e));
    wtr.write_record(["edge_id", "node_from", "node_to", "wkt"])
        .map_err(io_err)?;
    for e in edges {
        wtr.write_record([&e.edge_id, &e.node_from, &e.node_to, &wkt_of(&e.vertices)])
            .map_err(io_err)?;
    }
    wtr.flush().map_err(|e| Error::io("<network>", e))
}

pub fn save_network(edges: &[RawEdge], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_network_csv(edges, io::BufWriter::new(f)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

fn read_raw_edges(path: &Path, format: NetworkFormat) -> Result<Vec<RawEdge>> {
    let (delim, id_name, from_name, to_name) = match format {
        NetworkFormat::Native => (b',', "edge_id", "node_from", "node_to"),
        NetworkFormat::SeattleBenchmark => (b'\t', "Edge ID", "From Node ID", "To Node ID"),
    };
    let mut rdr = open_csv(path, delim)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let id_col = column(&headers, id_name, path)?;
    let from_col = column(&headers, from_name, path)?;
    let to_col = column(&headers, to_name, path)?;
    let geom_col = match format {
        NetworkFormat::Native => column(&headers, "wkt", path)?,
        NetworkFormat::SeattleBenchmark => headers
            .iter()
            .position(|h| h.to_ascii_uppercase().starts_with("LINESTRING"))
            .unwrap_or(headers.len().saturating_sub(1)),
    };

    let mut out = Vec::new();
    for row in rdr.records() {
        let rec = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = csv_line(&rec);
        let vertices = parse_wkt_linestring(field(&rec, geom_col, path)?)
            .map_err(|m| parse_err(path, line, m))?;
        out.push(RawEdge {
            edge_id: field(&rec, id_col, path)?.to_string(),
            node_from: field(&rec, from_col, path)?.to_string(),
            node_to: field(&rec, to_col, path)?.to_string(),
            vertices,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    Ok(out)
}

/// Reads a road network and builds its adjacency and spatial index. The
/// projection origin is the centroid of all vertices.
pub fn parse_road_network(path: impl AsRef<Path>, format: NetworkFormat) -> Result<RoadNetwork> {
    RoadNetwork::from_edges(read_raw_edges(path.as_ref(), format)?)
}

/// Ordered edge ids of the true route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthRoute {
    pub edge_ids: Vec<String>,
}

impl GroundTruthRoute {
    pub fn len(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_ids.is_empty()
    }
}

/// Reads one edge id per row; the id is the first tab- or comma-separated
/// field. A leading `edge_id`/`Edge ID` header row is skipped.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    let mut seen_row = false;
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let id = t.split(['\t', ',']).next().unwrap_or("").trim();
        if !seen_row {
            seen_row = true;
            let norm: String = id
                .chars()
                .filter(|c| c.is_alphanumeric())
                .collect::<String>()
                .to_ascii_lowercase();
            if norm == "edgeid" {
                continue;
            }
        }
        ids.push(id.to_string());
    }
    if ids.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    Ok(ids)
}

pub fn parse_ground_truth(
    path: impl AsRef<Path>,
    network: &RoadNetwork,
) -> Result<GroundTruthRoute> {
    let edge_ids = read_edge_list(path)?;
    if let Some(bad) = edge_ids.iter().find(|id| network.edge_index(id).is_none()) {
        return Err(Error::UnknownEdge(bad.clone()));
    }
    Ok(GroundTruthRoute { edge_ids })
}

pub fn write_edge_list<W: Write>(ids: &[String], mut w: W) -> io::Result<()> {
    for id in ids {
        writeln!(w, "{id}")?;
    }
    w.flush()
}

pub fn save_edge_list(ids: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_edge_list(ids, io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
}
