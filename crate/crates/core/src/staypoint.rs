//! Stay-point detection and trajectory reduction.
//!
//! Dense dwell regions are found with DBSCAN over the raw fixes, each cluster
//! is summarized by the mean of its members' coordinates plus arrival and
//! leave times, and the reduced trajectory keeps noise fixes untouched while
//! replacing every cluster by a single representative. A consecutive-distance
//! / dwell-time detector is provided as a baseline, and the sorted k-NN
//! distance curve supports picking `eps` by eye.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GridIndex, PlanarPoint, Projection};
use crate::ingest::{Trajectory, TrajectoryRecord};

/// Space in which DBSCAN and k-NN distances are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricSpace {
    /// Euclidean distance over raw (lon, lat) degrees.
    #[default]
    DegreeEuclidean,
    /// Euclidean distance in meters in a local plane centered on the trajectory.
    MeterPlanar,
}

impl fmt::Display for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricSpace::DegreeEuclidean => "degree-euclidean",
            MetricSpace::MeterPlanar => "meter-planar",
        })
    }
}

impl FromStr for MetricSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree-euclidean" | "degrees" => Ok(MetricSpace::DegreeEuclidean),
            "meter-planar" | "meters" => Ok(MetricSpace::MeterPlanar),
            _ => Err(Error::InvalidParameter(format!(
                "unknown metric space {s:?}"
            ))),
        }
    }
}

/// Maps fixes into the chosen metric space.
pub fn metric_coordinates(traj: &Trajectory, metric: MetricSpace) -> Result<Vec<PlanarPoint>> {
    match metric {
        MetricSpace::DegreeEuclidean => Ok(traj
            .positions()
            .map(|p| PlanarPoint::new(p.lon, p.lat))
            .collect()),
        MetricSpace::MeterPlanar => {
            let proj = Projection::centered_on(traj.positions())?;
            traj.positions().map(|p| proj.project(p)).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    /// Neighborhood radius, in the units of `metric`.
    pub eps: f64,
    pub min_pts: usize,
    pub metric: MetricSpace,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize, metric: MetricSpace) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {eps}"
            )));
        }
        if min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be at least 1".into()));
        }
        Ok(DbscanParams {
            eps,
            min_pts,
            metric,
        })
    }
}

/// Per-record DBSCAN outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<Option<usize>>,
    core: Vec<bool>,
    cluster_count: usize,
}

impl ClusterLabels {
    /// Cluster ordinal of record `i`, `None` for noise.
    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn is_core(&self, i: usize) -> bool {
        self.core[i]
    }

    pub fn core_flags(&self) -> &[bool] {
        &self.core
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// All-noise labeling for `n` records.
    pub fn all_noise(n: usize) -> Self {
        ClusterLabels {
            labels: vec![None; n],
            core: vec![false; n],
            cluster_count: 0,
        }
    }

    /// `source_index,label,core` with noise written as -1.
    pub fn write_csv<W: Write>(&self, traj: &Trajectory, mut w: W) -> io::Result<()> {
        writeln!(w, "source_index,label,core")?;
        for (r, (l, c)) in traj
            .records()
            .iter()
            .zip(self.labels.iter().zip(&self.core))
        {
            let l = l.map_or(-1, |l| l as i64);
            writeln!(w, "{},{},{}", r.source_index, l, u8::from(*c))?;
        }
        w.flush()
    }
}

struct RegionQuery<'a> {
    points: &'a [PlanarPoint],
    grid: GridIndex<usize>,
    eps: f64,
}

impl<'a> RegionQuery<'a> {
    fn new(points: &'a [PlanarPoint], eps: f64) -> Result<Self> {
        let mut grid = GridIndex::new(2.0 * eps)?;
        for (i, p) in points.iter().enumerate() {
            grid.insert_point(i, p);
        }
        Ok(RegionQuery { points, grid, eps })
    }

    /// Indices within `eps` of point `i`, itself included, ascending.
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let p = &self.points[i];
        let mut out = self.grid.query(p, self.eps);
        out.retain(|&j| p.distance(&self.points[j]) <= self.eps);
        out
    }
}

/// DBSCAN over the trajectory fixes.
///
/// A record is core when at least `min_pts` records (itself included) lie
/// within `eps`. Records are scanned in source order; a border record that
/// two clusters can reach belongs to the one discovered first.
pub fn dbscan(traj: &Trajectory, params: &DbscanParams) -> Result<ClusterLabels> {
    let points = metric_coordinates(traj, params.metric)?;
    dbscan_points(&points, params.eps, params.min_pts)
}

/// DBSCAN over arbitrary planar points; see [`dbscan`].
pub fn dbscan_points(points: &[PlanarPoint], eps: f64, min_pts: usize) -> Result<ClusterLabels> {
    DbscanParams::new(eps, min_pts, MetricSpace::MeterPlanar)?;
    let n = points.len();
    let rq = RegionQuery::new(points, eps)?;
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut core = vec![false; n];
    let mut visited = vec![false; n];
    let mut cluster_count = 0;
    let mut queue = VecDeque::new();

    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seeds = rq.neighbors(i);
        if seeds.len() < min_pts {
            continue;
        }
        let c = cluster_count;
        cluster_count += 1;
        labels[i] = Some(c);
        core[i] = true;
        queue.extend(seeds);
        while let Some(j) = queue.pop_front() {
            if labels[j].is_none() {
                labels[j] = Some(c);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nb = rq.neighbors(j);
            if nb.len() >= min_pts {
                core[j] = true;
                queue.extend(nb);
            }
        }
    }
    Ok(ClusterLabels {
        labels,
        core,
        cluster_count,
    })
}

/// Summary of one dwell region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StayPoint {
    pub cluster_id: usize,
    /// Mean member longitude.
    pub lon: f64,
    /// Mean member latitude.
    pub lat: f64,
    /// Timestamp of the earliest member.
    pub t_arrive: f64,
    /// Timestamp of the latest member.
    pub t_leave: f64,
    pub member_count: usize,
}

impl StayPoint {
    fn from_members(cluster_id: usize, members: &[&TrajectoryRecord]) -> StayPoint {
        let n = members.len() as f64;
        let (mut slat, mut slon) = (0.0, 0.0);
        let (mut lat_lo, mut lat_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lon_lo, mut lon_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut t_a, mut t_l) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in members {
            let p = r.position;
            slat += p.lat;
            slon += p.lon;
            lat_lo = lat_lo.min(p.lat);
            lat_hi = lat_hi.max(p.lat);
            lon_lo = lon_lo.min(p.lon);
            lon_hi = lon_hi.max(p.lon);
            t_a = t_a.min(r.timestamp);
            t_l = t_l.max(r.timestamp);
        }
        StayPoint {
            cluster_id,
            // rounding can push a mean of equal values one ulp outside the box
            lat: (slat / n).clamp(lat_lo, lat_hi),
            lon: (slon / n).clamp(lon_lo, lon_hi),
            t_arrive: t_a,
            t_leave: t_l,
            member_count: members.len(),
        }
    }
}

/// One stay point per cluster, ordered by cluster id.
pub fn summarize_clusters(traj: &Trajectory, labels: &ClusterLabels) -> Vec<StayPoint> {
    let mut members: Vec<Vec<&TrajectoryRecord>> = vec![Vec::new(); labels.cluster_count()];
    for (r, l) in traj.records().iter().zip(labels.labels()) {
        if let Some(c) = l {
            members[*c].push(r);
        }
    }
    members
        .iter()
        .enumerate()
        .map(|(c, m)| StayPoint::from_members(c, m))
        .collect()
}

pub fn write_stay_points_csv<W: Write>(stays: &[StayPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "cluster_id,lat,lon,t_arrive,t_leave,count")?;
    for s in stays {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.cluster_id, s.lat, s.lon, s.t_arrive, s.t_leave, s.member_count
        )?;
    }
    w.flush()
}

/// Origin of a record in a reduced trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Original,
    Representative(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub records: Vec<TrajectoryRecord>,
    pub provenance: Vec<Provenance>,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_trajectory(self, id: impl Into<String>) -> Result<Trajectory> {
        Trajectory::new(id, self.records)
    }
}

/// Keeps noise records and replaces each cluster by one record at its stay
/// point, stamped with the arrival time and carrying the source index of the
/// cluster's earliest member.
pub fn reduce_trajectory(
    traj: &Trajectory,
    labels: &ClusterLabels,
    stay_points: &[StayPoint],
) -> ReducedTrajectory {
    let mut first_member: Vec<Option<&TrajectoryRecord>> = vec![None; labels.cluster_count()];
    let mut out: Vec<(TrajectoryRecord, Provenance)> = Vec::new();
    for (r, l) in traj.records().iter().zip(labels.labels()) {
        match l {
            None => out.push((*r, Provenance::Original)),
            Some(c) => {
                let slot = &mut first_member[*c];
                if slot.is_none_or(|f| r.timestamp < f.timestamp) {
                    *slot = Some(r);
                }
            }
        }
    }
    for s in stay_points {
        let Some(first) = first_member.get(s.cluster_id).copied().flatten() else {
            continue;
        };
        let rec = TrajectoryRecord {
            timestamp: s.t_arrive,
            position: crate::geo::GeoPoint {
                lat: s.lat,
                lon: s.lon,
            },
            source_index: first.source_index,
        };
        out.push((rec, Provenance::Representative(s.cluster_id)));
    }
    out.sort_by(|a, b| {
        a.0.timestamp
            .total_cmp(&b.0.timestamp)
            .then(a.0.source_index.cmp(&b.0.source_index))
    });
    let (records, provenance) = out.into_iter().unzip();
    ReducedTrajectory {
        records,
        provenance,
    }
}

/// Window `[first, last]` accepted by the threshold detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StayWindow {
    pub first: usize,
    pub last: usize,
    pub stay: StayPoint,
}

/// Baseline detector: maximal runs whose consecutive fixes are closer than
/// `delta` meters and whose span exceeds `tau` seconds.
pub fn detect_stay_windows(traj: &Trajectory, delta: f64, tau: f64) -> Result<Vec<StayWindow>> {
    if !(delta.is_finite() && delta > 0.0) || !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta and tau must be positive, got {delta} and {tau}"
        )));
    }
    let recs = traj.records();
    let mut out = Vec::new();
    let mut i = 0;
    while i < recs.len() {
        let mut j = i;
        while j + 1 < recs.len()
            && haversine_distance(&recs[j].position, &recs[j + 1].position) < delta
        {
            j += 1;
        }
        if recs[j].timestamp - recs[i].timestamp > tau {
            let members: Vec<&TrajectoryRecord> = recs[i..=j].iter().collect();
            out.push(StayWindow {
                first: i,
                last: j,
                stay: StayPoint::from_members(out.len(), &members),
            });
        }
        // any later start inside [i, j] ends at j too and spans less time
        i = j + 1;
    }
    Ok(out)
}

pub fn threshold_staypoint_detect(
    traj: &Trajectory,
    delta: f64,
    tau: f64,
) -> Result<Vec<StayPoint>> {
    Ok(detect_stay_windows(traj, delta, tau)?
        .into_iter()
        .map(|w| w.stay)
        .collect())
}

/// Distances to the k-th nearest other point, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnCurve {
    pub k: usize,
    pub distances: Vec<f64>,
}

impl KnnCurve {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// `rank,distance`, rank starting at 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "rank,distance")?;
        for (i, d) in self.distances.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, d)?;
        }
        w.flush()
    }
}

pub fn knn_distance_curve(traj: &Trajectory, k: usize, metric: MetricSpace) -> Result<KnnCurve> {
    let points = metric_coordinates(traj, metric)?;
    knn_distances(&points, k).map(|mut distances| {
        distances.sort_by(f64::total_cmp);
        KnnCurve { k, distances }
    })
}

/// Unsorted k-th nearest neighbor distance for every point, via an expanding
/// ring search over a uniform grid.
pub fn knn_distances(points: &[PlanarPoint], k: usize) -> Result<Vec<f64>> {
    let n = points.len();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, len: n });
    }
    let bbox = crate::geo::BBox::around(points);
    let (w, h) = (bbox.max.x - bbox.min.x, bbox.max.y - bbox.min.y);
    let area = (w * h).max(w.max(h).powi(2) * 1e-6);
    let mut cell = (area / n as f64).sqrt() * 2.0;
    if !(cell.is_finite() && cell > 0.0) {
        cell = 1.0;
    }
    let mut grid = GridIndex::new(cell)?;
    for (i, p) in points.iter().enumerate() {
        grid.insert_point(i, p);
    }
    let (lo, hi) = (grid.cell_key(&bbox.min), grid.cell_key(&bbox.max));
    let max_ring = (hi.0 - lo.0).max(hi.1 - lo.1) + 1;

    let mut out = Vec::with_capacity(n);
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (i, p) in points.iter().enumerate() {
        best.clear();
        let (cx, cy) = grid.cell_key(p);
        let mut ring = 0i64;
        loop {
            for (x, y) in ring_cells(cx, cy, ring) {
                for &j in grid.cell_items((x, y)) {
                    if j == i {
                        continue;
                    }
                    let d = p.distance(&points[j]);
                    if best.len() < k || d < best[k - 1] {
                        let at = best.partition_point(|&b| b <= d);
                        best.insert(at, d);
                        best.truncate(k);
                    }
                }
            }
            // anything outside the searched block is at least ring * cell away
            if (best.len() == k && best[k - 1] <= ring as f64 * cell) || ring > max_ring {
                break;
            }
            ring += 1;
        }
        out.push(best[k - 1]);
    }
    Ok(out)
}

fn ring_cells(cx: i64, cy: i64, r: i64) -> Vec<(i64, i64)> {
    if r == 0 {
        return vec![(cx, cy)];
    }
    let mut v = Vec::with_capacity((8 * r) as usize);
    for x in cx - r..=cx + r {
        v.push((x, cy - r));
        v.push((x, cy + r));
    }
    for y in cy - r + 1..cy + r {
        v.push((cx - r, y));
        v.push((cx + r, y));
    }
    v
}

/// Knee candidate on a k-NN curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElbowCandidate {
    pub index: usize,
    pub distance: f64,
    /// Discrete curvature of the normalized curve at `index`.
    pub score: f64,
}

/// Up to `n` points of highest discrete curvature, best first.
///
/// The curve is rescaled to the unit square before taking central
/// differences; the endpoints score 0. Ties rank by lower index.
pub fn elbow_candidates(curve: &KnnCurve, n: usize) -> Result<Vec<ElbowCandidate>> {
    let d = &curve.distances;
    let m = d.len();
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "elbow detection needs at least 3 curve points, got {m}"
        )));
    }
    let (lo, hi) = (d[0], d[m - 1]);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y: Vec<f64> = d.iter().map(|v| (v - lo) / span).collect();
    let dx = 1.0 / (m - 1) as f64;
    let mut cands: Vec<ElbowCandidate> = (0..m)
        .map(|i| {
            let score = if i == 0 || i == m - 1 {
                0.0
            } else {
                let d1 = (y[i + 1] - y[i - 1]) / (2.0 * dx);
                let d2 = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dx * dx);
                d2.abs() / (1.0 + d1 * d1).powf(1.5)
            };
            ElbowCandidate {
                index: i,
                distance: d[i],
                score,
            }
        })
        .collect();
    cands.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    cands.truncate(n);
    Ok(cands)
}
