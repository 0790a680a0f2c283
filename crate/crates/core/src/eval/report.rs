//! Report files for a pipeline run.
//!
//! `report.toml` holds every metric; all wall-clock derived values live in
//! its `[timing]` table so that the rest of the file is reproducible. The
//! CSV series are `eps_sweep.csv`, `volume.csv`, `timing.csv` and
//! `speed.csv`; the last two are timing-derived as well.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{ComparisonReport, RunMetrics};
use super::pipeline::{EpsSweepRow, PipelineRun};
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.toml";
pub const EPS_SWEEP_FILE: &str = "eps_sweep.csv";
pub const VOLUME_FILE: &str = "volume.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SPEED_FILE: &str = "speed.csv";
/// Output files whose contents depend on wall-clock measurements.
pub const TIMING_DEPENDENT_FILES: [&str; 2] = [TIMING_FILE, SPEED_FILE];

/// Flat summary of a pipeline run, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub eps: f64,
    pub min_pts: usize,
    pub metric: String,
    pub repetitions: usize,
    pub cluster_count: usize,
    pub noise_count: usize,
    pub dbscan_time_s: f64,
    pub report: ComparisonReport,
}

impl PipelineSummary {
    pub fn from_run(run: &PipelineRun) -> Self {
        PipelineSummary {
            eps: run.params.dbscan.eps,
            min_pts: run.params.dbscan.min_pts,
            metric: run.params.dbscan.metric.to_string(),
            repetitions: run.params.repetitions,
            cluster_count: run.labels.cluster_count(),
            noise_count: run.labels.noise_count(),
            dbscan_time_s: run.dbscan_time.as_secs_f64(),
            report: run.report,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsTable {
    eps: f64,
    min_pts: usize,
    metric: String,
    repetitions: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusteringTable {
    cluster_count: usize,
    noise_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunTable {
    correct_links: usize,
    total_truth_links: usize,
    input_points: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComparisonTable {
    volume_reduction_pct: f64,
    accuracy_delta: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimingTable {
    dbscan_time_s: f64,
    raw_matching_wall_time_s: f64,
    raw_per_point_time_us: f64,
    reduced_matching_wall_time_s: f64,
    reduced_per_point_time_us: f64,
    time_reduction_pct: f64,
    speed_gain_pct: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    params: ParamsTable,
    clustering: ClusteringTable,
    raw: RunTable,
    reduced: RunTable,
    comparison: ComparisonTable,
    timing: TimingTable,
}

fn run_table(m: &RunMetrics) -> RunTable {
    RunTable {
        correct_links: m.correct_links,
        total_truth_links: m.total_truth_links,
        input_points: m.input_points,
    }
}

fn run_metrics(t: &RunTable, wall: f64, per_point: f64) -> RunMetrics {
    RunMetrics {
        correct_links: t.correct_links,
        total_truth_links: t.total_truth_links,
        input_points: t.input_points,
        matching_wall_time: wall,
        per_point_time: per_point,
    }
}

pub fn report_to_toml(s: &PipelineSummary) -> String {
    let r = &s.report;
    let file = ReportFile {
        params: ParamsTable {
            eps: s.eps,
            min_pts: s.min_pts,
            metric: s.metric.clone(),
            repetitions: s.repetitions,
        },
        clustering: ClusteringTable {
            cluster_count: s.cluster_count,
            noise_count: s.noise_count,
        },
        raw: run_table(&r.raw),
        reduced: run_table(&r.reduced),
        comparison: ComparisonTable {
            volume_reduction_pct: r.volume_reduction_pct,
            accuracy_delta: r.accuracy_delta,
        },
        timing: TimingTable {
            dbscan_time_s: s.dbscan_time_s,
            raw_matching_wall_time_s: r.raw.matching_wall_time,
            raw_per_point_time_us: r.raw.per_point_time,
            reduced_matching_wall_time_s: r.reduced.matching_wall_time,
            reduced_per_point_time_us: r.reduced.per_point_time,
            time_reduction_pct: r.time_reduction_pct,
            speed_gain_pct: r.speed_gain_pct,
        },
    };
    toml::to_string(&file).expect("report serializes to TOML")
}

pub fn report_from_toml(text: &str) -> Result<PipelineSummary> {
    let f: ReportFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let t = &f.timing;
    Ok(PipelineSummary {
        eps: f.params.eps,
        min_pts: f.params.min_pts,
        metric: f.params.metric,
        repetitions: f.params.repetitions,
        cluster_count: f.clustering.cluster_count,
        noise_count: f.clustering.noise_count,
        dbscan_time_s: t.dbscan_time_s,
        report: ComparisonReport {
            raw: run_metrics(&f.raw, t.raw_matching_wall_time_s, t.raw_per_point_time_us),
            reduced: run_metrics(
                &f.reduced,
                t.reduced_matching_wall_time_s,
                t.reduced_per_point_time_us,
            ),
            volume_reduction_pct: f.comparison.volume_reduction_pct,
            time_reduction_pct: t.time_reduction_pct,
            speed_gain_pct: t.speed_gain_pct,
            accuracy_delta: f.comparison.accuracy_delta,
        },
    })
}

/// `report.toml` with its `[timing]` table removed.
pub fn strip_timing(text: &str) -> Result<String> {
    let mut v: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    v.remove("timing");
    Ok(toml::to_string(&v).expect("table serializes"))
}

fn write(path: PathBuf, body: String) -> Result<()> {
    fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

pub fn eps_sweep_csv(rows: &[EpsSweepRow]) -> String {
    let mut s = String::from("eps,cluster_count,clustered_points,noise_points,reduced_points\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.eps, r.cluster_count, r.clustered_points, r.noise_points, r.reduced_points
        ));
    }
    s
}

/// Writes the report and the CSV series into `dir`, which is created if
/// needed. Returns the paths written.
pub fn export_report(
    summary: &PipelineSummary,
    sweep: &[EpsSweepRow],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let r = &summary.report;
    let pair = |header: &str, raw: String, reduced: String| {
        format!("run,{header}\nraw,{raw}\nreduced,{reduced}\n")
    };
    let files = [
        (REPORT_FILE, report_to_toml(summary)),
        (EPS_SWEEP_FILE, eps_sweep_csv(sweep)),
        (
            VOLUME_FILE,
            pair(
                "input_points",
                r.raw.input_points.to_string(),
                r.reduced.input_points.to_string(),
            ),
        ),
        (
            TIMING_FILE,
            pair(
                "matching_wall_time_s",
                r.raw.matching_wall_time.to_string(),
                r.reduced.matching_wall_time.to_string(),
            ),
        ),
        (
            SPEED_FILE,
            pair(
                "per_point_time_us",
                r.raw.per_point_time.to_string(),
                r.reduced.per_point_time.to_string(),
            ),
        ),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        write(path.clone(), body)?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<PipelineSummary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    report_from_toml(&text)
}
