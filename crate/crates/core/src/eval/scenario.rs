//! Seeded synthetic scenarios: a grid road network, a staircase route across
//! it, and a 1 Hz noisy trace along the route with optional dwells.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, PlanarPoint, Projection};
use crate::ingest::{
    save_edge_list, save_network, save_trajectory, GroundTruthRoute, RawEdge, RoadNetwork,
    Trajectory, TrajectoryRecord,
};

/// A stop along the route: starting `start_s` seconds into the drive, the
/// vehicle stays put for `duration_s` extra fixes, each jittered by
/// `sigma_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellSpec {
    pub start_s: u32,
    pub duration_s: u32,
    pub sigma_m: f64,
}

impl DwellSpec {
    pub fn new(start_s: u32, duration_s: u32, sigma_m: f64) -> Self {
        DwellSpec {
            start_s,
            duration_s,
            sigma_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub seed: u64,
    /// Roads per direction; the grid has `road_count²` nodes.
    pub road_count: usize,
    pub block_m: f64,
    pub speed_mps: f64,
    /// Jitter while moving.
    pub sigma_m: f64,
    pub dwells: Vec<DwellSpec>,
    /// Southwest corner of the grid.
    pub origin: GeoPoint,
    pub start_time: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            seed: 0,
            road_count: 8,
            block_m: 200.0,
            speed_mps: 20.0,
            sigma_m: 1.0,
            dwells: Vec::new(),
            origin: GeoPoint {
                lat: 47.6,
                lon: -122.3,
            },
            start_time: 1_231_547_944.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScenario {
    pub network: RoadNetwork,
    pub trajectory: Trajectory,
    pub truth: GroundTruthRoute,
    pub dwells: Vec<DwellSpec>,
    /// Noise-free position behind each fix.
    pub true_positions: Vec<GeoPoint>,
    /// Where each dwell took place, aligned with `dwells`.
    pub dwell_centers: Vec<GeoPoint>,
    /// Largest jitter applied to any fix, in meters.
    pub max_jitter_m: f64,
}

impl SyntheticScenario {
    /// Writes `network.csv`, `trajectory.csv` and `truth.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_network(&self.network.to_raw_edges(), dir.join("network.csv"))?;
        save_trajectory(self.trajectory.records(), dir.join("trajectory.csv"))?;
        save_edge_list(&self.truth.edge_ids, dir.join("truth.csv"))
    }
}

fn node_id(r: usize, c: usize) -> String {
    format!("n{r}_{c}")
}

/// Scenario with default motion settings.
pub fn generate_scenario(
    seed: u64,
    road_count: usize,
    dwells: &[DwellSpec],
) -> Result<SyntheticScenario> {
    generate_scenario_with(&ScenarioParams {
        seed,
        road_count,
        dwells: dwells.to_vec(),
        ..ScenarioParams::default()
    })
}

pub fn generate_scenario_with(p: &ScenarioParams) -> Result<SyntheticScenario> {
    if p.road_count < 2 {
        return Err(Error::InvalidParameter(
            "road_count must be at least 2".into(),
        ));
    }
    for (name, v) in [("block_m", p.block_m), ("speed_mps", p.speed_mps)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let sigmas = std::iter::once(p.sigma_m).chain(p.dwells.iter().map(|d| d.sigma_m));
    for s in sigmas {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "jitter sigma must be non-negative, got {s}"
            )));
        }
    }
    let n = p.road_count;
    let proj = Projection::new(p.origin)?;
    let at = |r: usize, c: usize| PlanarPoint::new(c as f64 * p.block_m, r as f64 * p.block_m);

    let mut edges = Vec::with_capacity(2 * n * (n - 1));
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                edges.push(RawEdge {
                    edge_id: format!("h{r}_{c}"),
                    node_from: node_id(r, c),
                    node_to: node_id(r, c + 1),
                    vertices: vec![proj.unproject(&at(r, c)), proj.unproject(&at(r, c + 1))],
                });
            }
            if r + 1 < n {
                edges.push(RawEdge {
                    edge_id: format!("v{r}_{c}"),
                    node_from: node_id(r, c),
                    node_to: node_id(r + 1, c),
                    vertices: vec![proj.unproject(&at(r, c)), proj.unproject(&at(r + 1, c))],
                });
            }
        }
    }
    let network = RoadNetwork::from_edges(edges)?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut moves: Vec<bool> = std::iter::repeat_n(true, n - 1)
        .chain(std::iter::repeat_n(false, n - 1))
        .collect();
    moves.shuffle(&mut rng);
    let (mut r, mut c) = (0, 0);
    let mut route = vec![at(0, 0)];
    let mut truth = Vec::with_capacity(moves.len());
    for east in moves {
        if east {
            truth.push(format!("h{r}_{c}"));
            c += 1;
        } else {
            truth.push(format!("v{r}_{c}"));
            r += 1;
        }
        route.push(at(r, c));
    }
    let route_len = p.block_m * (route.len() - 1) as f64;
    let along = |s: f64| {
        let k = ((s / p.block_m).floor() as usize).min(route.len() - 2);
        let t = (s - k as f64 * p.block_m) / p.block_m;
        let (a, b) = (route[k], route[k + 1]);
        PlanarPoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    };

    let drive_s = (route_len / p.speed_mps).ceil() as u32;
    let mut dwells = p.dwells.clone();
    dwells.sort_by_key(|d| d.start_s);
    if let Some(d) = dwells.iter().find(|d| d.start_s > drive_s) {
        return Err(Error::InvalidParameter(format!(
            "dwell at {} s starts after the {drive_s} s drive ends",
            d.start_s
        )));
    }

    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let jitter = |rng: &mut ChaCha8Rng, sigma: f64| {
        let (dx, dy) = (unit.sample(rng) * sigma, unit.sample(rng) * sigma);
        let norm = dx.hypot(dy);
        let cap = 3.0 * sigma;
        if norm > cap {
            (dx * cap / norm, dy * cap / norm)
        } else {
            (dx, dy)
        }
    };

    let mut records = Vec::new();
    let mut true_positions = Vec::new();
    let mut dwell_centers = Vec::with_capacity(dwells.len());
    let mut max_jitter_m: f64 = 0.0;
    let mut emit = |truth_p: PlanarPoint, sigma: f64, rng: &mut ChaCha8Rng| {
        let (dx, dy) = jitter(rng, sigma);
        max_jitter_m = max_jitter_m.max(dx.hypot(dy));
        let i = records.len();
        records.push(TrajectoryRecord {
            timestamp: p.start_time + i as f64,
            position: proj.unproject(&truth_p.translate(dx, dy)),
            source_index: i,
        });
        true_positions.push(proj.unproject(&truth_p));
    };
    let mut next_dwell = 0;
    for t in 0..=drive_s {
        let s = (t as f64 * p.speed_mps).min(route_len);
        let here = along(s);
        emit(here, p.sigma_m, &mut rng);
        while next_dwell < dwells.len() && dwells[next_dwell].start_s == t {
            let d = dwells[next_dwell];
            dwell_centers.push(proj.unproject(&here));
            for _ in 0..d.duration_s {
                emit(here, d.sigma_m, &mut rng);
            }
            next_dwell += 1;
        }
    }

    Ok(SyntheticScenario {
        network,
        trajectory: Trajectory::new(format!("synthetic-{}", p.seed), records)?,
        truth: GroundTruthRoute { edge_ids: truth },
        dwells,
        true_positions,
        dwell_centers,
        max_jitter_m,
    })
}
