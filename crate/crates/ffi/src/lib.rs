//! C ABI over the staymatch library.
//!
//! Objects cross the boundary as opaque handles that the caller owns and
//! releases with the matching `*_free` function. Every fallible call returns
//! an [`SmStatus`]; on failure a human-readable message is available from
//! [`sm_last_error_message`] on the same thread. Strings returned by
//! accessor functions are borrowed from their handle and stay valid until
//! the handle is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use staymatch::eval::correct_link_count;
use staymatch::fuzzy::{MatchResult, Matcher, MatcherSettings, Phase};
use staymatch::geo::GeoPoint;
use staymatch::ingest::{
    parse_road_network, parse_trajectory, NetworkFormat, RoadNetwork, Trajectory, TrajectoryFormat,
    TrajectoryRecord,
};
use staymatch::staypoint::{
    dbscan, reduce_trajectory, summarize_clusters, DbscanParams, MetricSpace,
};
use staymatch::{Error, ErrorClass};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    /// Invalid parameter value.
    Usage = 1,
    /// Unreadable or malformed input.
    Input = 2,
    /// Input violates a precondition of the operation.
    Domain = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    OutOfRange = 6,
    /// A bug inside the library; the handle involved should be discarded.
    Panic = 7,
}

/// Input file layout.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmFormat {
    Native = 0,
    Seattle = 1,
}

/// Distance used for clustering.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmMetric {
    DegreeEuclidean = 0,
    MeterPlanar = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmPhase {
    Imp = 0,
    SmpAlong = 1,
    SmpJunction = 2,
}

/// One matched fix. The edge id is fetched separately with
/// [`sm_match_result_edge_id`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmMatchedPoint {
    pub source_index: usize,
    pub offset_m: f64,
    pub snapped_lat: f64,
    pub snapped_lon: f64,
    pub likelihood: f64,
    pub phase: SmPhase,
    pub confident: bool,
}

/// Road network handle.
pub struct SmNetwork {
    inner: RoadNetwork,
}

/// Trajectory handle.
pub struct SmTrajectory {
    inner: Trajectory,
}

/// Matching output handle.
pub struct SmMatchResult {
    inner: MatchResult,
    point_edge_ids: Vec<CString>,
    sequence: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: SmStatus, msg: impl Into<Vec<u8>>) -> SmStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> SmStatus {
    let status = match e.class() {
        ErrorClass::Usage => SmStatus::Usage,
        ErrorClass::Input => SmStatus::Input,
        ErrorClass::Domain => SmStatus::Domain,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into `SmStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), SmStatus>) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SmStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(SmStatus::Panic, "internal panic"),
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, SmStatus> {
    if p.is_null() {
        return Err(fail(SmStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(SmStatus::InvalidUtf8, "path is not valid UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, SmStatus> {
    p.as_ref()
        .ok_or_else(|| fail(SmStatus::NullPointer, format!("{what} handle is null")))
}

fn out_ptr<T>(out: *mut *mut T) -> Result<(), SmStatus> {
    if out.is_null() {
        Err(fail(SmStatus::NullPointer, "output pointer is null"))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn sm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a road network file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_network_load(
    path: *const c_char,
    format: SmFormat,
    out: *mut *mut SmNetwork,
) -> SmStatus {
    guard(|| {
        out_ptr(out)?;
        let path = path_arg(path)?;
        let fmt = match format {
            SmFormat::Native => NetworkFormat::Native,
            SmFormat::Seattle => NetworkFormat::SeattleBenchmark,
        };
        let inner = parse_road_network(&path, fmt).map_err(from_error)?;
        *out = Box::into_raw(Box::new(SmNetwork { inner }));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a live handle from [`sm_network_load`].
#[no_mangle]
pub unsafe extern "C" fn sm_network_edge_count(net: *const SmNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.inner.len())
}

/// # Safety
/// `net` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sm_network_free(net: *mut SmNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Loads a trajectory file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_trajectory_load(
    path: *const c_char,
    format: SmFormat,
    out: *mut *mut SmTrajectory,
) -> SmStatus {
    guard(|| {
        out_ptr(out)?;
        let path = path_arg(path)?;
        let fmt = match format {
            SmFormat::Native => TrajectoryFormat::native(),
            SmFormat::Seattle => TrajectoryFormat::seattle_benchmark(),
        };
        let inner = parse_trajectory(&path, &fmt).map_err(from_error)?;
        *out = Box::into_raw(Box::new(SmTrajectory { inner }));
        Ok(())
    })
}

/// Builds a trajectory from parallel arrays of length `len`. Timestamps are
/// seconds and must not decrease.
///
/// # Safety
/// The three arrays must each hold `len` readable values.
#[no_mangle]
pub unsafe extern "C" fn sm_trajectory_from_arrays(
    timestamps: *const f64,
    lats: *const f64,
    lons: *const f64,
    len: usize,
    out: *mut *mut SmTrajectory,
) -> SmStatus {
    guard(|| {
        out_ptr(out)?;
        if len > 0 && (timestamps.is_null() || lats.is_null() || lons.is_null()) {
            return Err(fail(SmStatus::NullPointer, "array is null"));
        }
        let (t, la, lo) = if len == 0 {
            (&[][..], &[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(timestamps, len),
                std::slice::from_raw_parts(lats, len),
                std::slice::from_raw_parts(lons, len),
            )
        };
        let records = (0..len)
            .map(|i| TrajectoryRecord {
                timestamp: t[i],
                position: GeoPoint {
                    lat: la[i],
                    lon: lo[i],
                },
                source_index: i,
            })
            .collect();
        let inner = Trajectory::new("ffi", records).map_err(from_error)?;
        *out = Box::into_raw(Box::new(SmTrajectory { inner }));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_trajectory_len(traj: *const SmTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.len())
}

/// Copies record `index` into the out parameters.
///
/// # Safety
/// `traj` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_trajectory_record(
    traj: *const SmTrajectory,
    index: usize,
    timestamp: *mut f64,
    lat: *mut f64,
    lon: *mut f64,
) -> SmStatus {
    guard(|| {
        let t = handle(traj, "trajectory")?;
        if timestamp.is_null() || lat.is_null() || lon.is_null() {
            return Err(fail(SmStatus::NullPointer, "output pointer is null"));
        }
        let r =
            t.inner.records().get(index).ok_or_else(|| {
                fail(SmStatus::OutOfRange, format!("record {index} out of range"))
            })?;
        *timestamp = r.timestamp;
        *lat = r.position.lat;
        *lon = r.position.lon;
        Ok(())
    })
}

/// Clusters `traj` with DBSCAN and writes the reduced trajectory to `out`.
/// `cluster_count` may be null.
///
/// # Safety
/// `traj` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_trajectory_reduce(
    traj: *const SmTrajectory,
    eps: f64,
    min_pts: usize,
    metric: SmMetric,
    out: *mut *mut SmTrajectory,
    cluster_count: *mut usize,
) -> SmStatus {
    guard(|| {
        out_ptr(out)?;
        let t = handle(traj, "trajectory")?;
        let metric = match metric {
            SmMetric::DegreeEuclidean => MetricSpace::DegreeEuclidean,
            SmMetric::MeterPlanar => MetricSpace::MeterPlanar,
        };
        let params = DbscanParams::new(eps, min_pts, metric).map_err(from_error)?;
        let labels = dbscan(&t.inner, &params).map_err(from_error)?;
        let stays = summarize_clusters(&t.inner, &labels);
        let reduced = reduce_trajectory(&t.inner, &labels, &stays)
            .into_trajectory(t.inner.id())
            .map_err(from_error)?;
        if !cluster_count.is_null() {
            *cluster_count = labels.cluster_count();
        }
        *out = Box::into_raw(Box::new(SmTrajectory { inner: reduced }));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sm_trajectory_free(traj: *mut SmTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Map-matches `traj` onto `net`. `config_path` may be null for the
/// built-in thresholds and rule base.
///
/// # Safety
/// Handles must be live; `config_path` null or NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sm_match(
    net: *const SmNetwork,
    traj: *const SmTrajectory,
    config_path: *const c_char,
    out: *mut *mut SmMatchResult,
) -> SmStatus {
    guard(|| {
        out_ptr(out)?;
        let n = handle(net, "network")?;
        let t = handle(traj, "trajectory")?;
        let settings = if config_path.is_null() {
            MatcherSettings::default()
        } else {
            MatcherSettings::load(path_arg(config_path)?).map_err(from_error)?
        };
        let rules = settings.rule_base().map_err(from_error)?;
        let inner = Matcher::new(&n.inner, &rules, settings.matcher)
            .and_then(|m| m.match_trajectory(&t.inner))
            .map_err(from_error)?;
        let cstr = |s: &str| CString::new(s).unwrap_or_default();
        let point_edge_ids = inner.matched.iter().map(|m| cstr(&m.edge_id)).collect();
        let sequence = inner.edge_sequence.iter().map(|s| cstr(s)).collect();
        *out = Box::into_raw(Box::new(SmMatchResult {
            inner,
            point_edge_ids,
            sequence,
        }));
        Ok(())
    })
}

/// Number of matched points.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_len(res: *const SmMatchResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.matched.len())
}

/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_point(
    res: *const SmMatchResult,
    index: usize,
    out: *mut SmMatchedPoint,
) -> SmStatus {
    guard(|| {
        let r = handle(res, "match result")?;
        if out.is_null() {
            return Err(fail(SmStatus::NullPointer, "output pointer is null"));
        }
        let m = r
            .inner
            .matched
            .get(index)
            .ok_or_else(|| fail(SmStatus::OutOfRange, format!("point {index} out of range")))?;
        *out = SmMatchedPoint {
            source_index: m.source_index,
            offset_m: m.offset_m,
            snapped_lat: m.snapped.lat,
            snapped_lon: m.snapped.lon,
            likelihood: m.likelihood,
            phase: match m.phase {
                Phase::Imp => SmPhase::Imp,
                Phase::SmpAlong => SmPhase::SmpAlong,
                Phase::SmpJunction => SmPhase::SmpJunction,
            },
            confident: m.confident,
        };
        Ok(())
    })
}

/// Edge id of matched point `index`, or null when out of range.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_edge_id(
    res: *const SmMatchResult,
    index: usize,
) -> *const c_char {
    res.as_ref()
        .and_then(|r| r.point_edge_ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Length of the collapsed edge sequence.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_sequence_len(res: *const SmMatchResult) -> usize {
    res.as_ref().map_or(0, |r| r.sequence.len())
}

/// Entry `index` of the collapsed edge sequence, or null when out of range.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_sequence_edge(
    res: *const SmMatchResult,
    index: usize,
) -> *const c_char {
    res.as_ref()
        .and_then(|r| r.sequence.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Seconds spent in the matching loop.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_wall_time_s(res: *const SmMatchResult) -> f64 {
    res.as_ref()
        .map_or(0.0, |r| r.inner.wall_time.as_secs_f64())
}

/// Counts edges of the matched sequence that appear, in order, in the
/// `truth_len` ids of `truth`.
///
/// # Safety
/// `res` must be a live handle; `truth` must hold `truth_len` NUL-terminated
/// strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_correct_links(
    res: *const SmMatchResult,
    truth: *const *const c_char,
    truth_len: usize,
    out: *mut usize,
) -> SmStatus {
    guard(|| {
        let r = handle(res, "match result")?;
        if out.is_null() || (truth_len > 0 && truth.is_null()) {
            return Err(fail(SmStatus::NullPointer, "pointer argument is null"));
        }
        let mut ids = Vec::with_capacity(truth_len);
        for i in 0..truth_len {
            let p = *truth.add(i);
            if p.is_null() {
                return Err(fail(SmStatus::NullPointer, format!("truth id {i} is null")));
            }
            let s = CStr::from_ptr(p).to_str().map_err(|_| {
                fail(
                    SmStatus::InvalidUtf8,
                    format!("truth id {i} is not valid UTF-8"),
                )
            })?;
            ids.push(s);
        }
        *out = correct_link_count(&r.inner.edge_sequence, &ids);
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sm_match_result_free(res: *mut SmMatchResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
