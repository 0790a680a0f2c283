use std::time::{Duration, Instant};

use super::metrics::{correct_link_count, ComparisonReport, RunMetrics};
use crate::error::{Error, Result};
use crate::fuzzy::{MatchResult, Matcher, MatcherConfig, RuleBase};
use crate::ingest::{GroundTruthRoute, RoadNetwork, Trajectory};
use crate::staypoint::{
    dbscan, reduce_trajectory, summarize_clusters, ClusterLabels, DbscanParams, StayPoint,
};

/// Timing repetitions per run; the median is reported.
pub const DEFAULT_REPETITIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub dbscan: DbscanParams,
    pub repetitions: usize,
}

impl PipelineParams {
    pub fn new(dbscan: DbscanParams) -> Self {
        PipelineParams {
            dbscan,
            repetitions: DEFAULT_REPETITIONS,
        }
    }
}

/// Everything produced by one raw-versus-reduced comparison.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub params: PipelineParams,
    pub labels: ClusterLabels,
    pub stay_points: Vec<StayPoint>,
    pub reduced_trajectory: Trajectory,
    pub raw: MatchResult,
    pub reduced: MatchResult,
    pub dbscan_time: Duration,
    pub report: ComparisonReport,
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

/// Clusters, reduces, and matches both the raw and the reduced trajectory
/// with the same rule base and thresholds.
///
/// Matching is repeated `params.repetitions` times, alternating raw and
/// reduced runs, and the median matching-loop time of each is reported.
/// Parsing and clustering are not part of the matching time.
pub fn run_pipeline(
    network: &RoadNetwork,
    traj: &Trajectory,
    truth: &GroundTruthRoute,
    params: &PipelineParams,
    rules: &RuleBase,
    config: &MatcherConfig,
) -> Result<PipelineRun> {
    if params.repetitions == 0 {
        return Err(Error::InvalidParameter(
            "repetitions must be at least 1".into(),
        ));
    }
    let t0 = Instant::now();
    let labels = dbscan(traj, &params.dbscan)?;
    let dbscan_time = t0.elapsed();
    let stay_points = summarize_clusters(traj, &labels);
    let reduced_trajectory =
        reduce_trajectory(traj, &labels, &stay_points).into_trajectory(traj.id())?;

    let matcher = Matcher::new(network, rules, *config)?;
    let mut raw_times = Vec::with_capacity(params.repetitions);
    let mut red_times = Vec::with_capacity(params.repetitions);
    let mut raw: Option<MatchResult> = None;
    let mut reduced: Option<MatchResult> = None;
    for _ in 0..params.repetitions {
        let r = matcher.match_trajectory(traj)?;
        raw_times.push(r.wall_time);
        raw.get_or_insert(r);
        let r = matcher.match_trajectory(&reduced_trajectory)?;
        red_times.push(r.wall_time);
        reduced.get_or_insert(r);
    }
    let (mut raw, mut reduced) = (raw.unwrap(), reduced.unwrap());
    raw.wall_time = median(raw_times);
    reduced.wall_time = median(red_times);

    let metrics = |m: &MatchResult| {
        RunMetrics::new(
            correct_link_count(&m.edge_sequence, &truth.edge_ids),
            truth.len(),
            m.total_points,
            m.wall_time.as_secs_f64(),
        )
    };
    let report = ComparisonReport::new(metrics(&raw), metrics(&reduced));
    Ok(PipelineRun {
        params: *params,
        labels,
        stay_points,
        reduced_trajectory,
        raw,
        reduced,
        dbscan_time,
        report,
    })
}

/// One row of the clustered/unclustered breakdown for a given `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSweepRow {
    pub eps: f64,
    pub cluster_count: usize,
    pub clustered_points: usize,
    pub noise_points: usize,
    pub reduced_points: usize,
}

/// Default sweep around a chosen `eps`.
pub fn default_eps_values(eps: f64) -> Vec<f64> {
    vec![eps / 2.0, eps, eps * 2.0, eps * 4.0]
}

pub fn eps_sweep(
    traj: &Trajectory,
    base: &DbscanParams,
    eps_values: &[f64],
) -> Result<Vec<EpsSweepRow>> {
    eps_values
        .iter()
        .map(|&eps| {
            let params = DbscanParams::new(eps, base.min_pts, base.metric)?;
            let labels = dbscan(traj, &params)?;
            let noise = labels.noise_count();
            Ok(EpsSweepRow {
                eps,
                cluster_count: labels.cluster_count(),
                clustered_points: traj.len() - noise,
                noise_points: noise,
                reduced_points: noise + labels.cluster_count(),
            })
        })
        .collect()
}
