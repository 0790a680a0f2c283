//! Fuzzy-logic map-matching state machine.
//!
//! Each fix is scored against candidate links by perpendicular distance (PD)
//! and heading error (HE). The first confident fix picks the initial link;
//! after that the vehicle is tracked along its link and the choice is
//! revisited only near a node or when it drifts too far from the link.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use super::config::{MatcherConfig, HE, PD};
use super::engine::RuleBase;
use crate::error::{Error, Result};
use crate::geo::{bearing, heading_error, GeoPoint, PlanarPoint, PolylineProjection};
use crate::ingest::{RoadNetwork, Trajectory};

/// Which step of the matcher produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Initial link selection (also used after re-initialization).
    Imp,
    /// Tracking along the current link.
    SmpAlong,
    /// Re-evaluation at a junction or after drifting off the link.
    SmpJunction,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Imp => "IMP",
            Phase::SmpAlong => "SMP_ALONG",
            Phase::SmpJunction => "SMP_JUNCTION",
        })
    }
}

/// Direction of travel relative to the link's vertex order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TravelDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    Uninitialized,
    OnLink {
        edge: usize,
        direction: TravelDirection,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchState {
    pub link: LinkState,
    pub last_heading: Option<f64>,
    pub consecutive_low_confidence: u32,
}

impl Default for MatchState {
    fn default() -> Self {
        MatchState {
            link: LinkState::Uninitialized,
            last_heading: None,
            consecutive_low_confidence: 0,
        }
    }
}

/// A scored link for one fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCandidate {
    pub edge: usize,
    pub pd: f64,
    pub he: f64,
    pub likelihood: f64,
    pub projection: PolylineProjection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPoint {
    pub source_index: usize,
    pub edge: usize,
    pub edge_id: String,
    /// Arc length from the first vertex of the edge to the snapped point.
    pub offset_m: f64,
    pub snapped: GeoPoint,
    pub snapped_planar: PlanarPoint,
    pub likelihood: f64,
    pub phase: Phase,
    /// False when no candidate reached the likelihood threshold and the
    /// best available link was emitted instead.
    pub confident: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub matched: Vec<MatchedPoint>,
    /// Matched edge ids with consecutive repeats collapsed.
    pub edge_sequence: Vec<String>,
    pub total_points: usize,
    /// Wall-clock time of the matching loop alone.
    pub wall_time: Duration,
}

impl MatchResult {
    /// `source_index,edge_id,offset_m,snapped_lat,snapped_lon,likelihood,phase`
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let to_io = |e: csv::Error| io::Error::other(e);
        wtr.write_record([
            "source_index",
            "edge_id",
            "offset_m",
            "snapped_lat",
            "snapped_lon",
            "likelihood",
            "phase",
        ])
        .map_err(to_io)?;
        for m in &self.matched {
            wtr.write_record([
                m.source_index.to_string(),
                m.edge_id.clone(),
                m.offset_m.to_string(),
                m.snapped.lat.to_string(),
                m.snapped.lon.to_string(),
                m.likelihood.to_string(),
                m.phase.to_string(),
            ])
            .map_err(to_io)?;
        }
        wtr.flush()
    }
}

/// Collapses consecutive repeats.
pub fn edge_sequence(matched: &[MatchedPoint]) -> Vec<String> {
    let mut seq: Vec<String> = Vec::new();
    for m in matched {
        if seq.last() != Some(&m.edge_id) {
            seq.push(m.edge_id.clone());
        }
    }
    seq
}

/// Edges whose geometry lies within `radius` of `p`, nearest first (ties by
/// edge id).
pub fn candidate_links(
    network: &RoadNetwork,
    p: &PlanarPoint,
    radius: f64,
) -> Vec<(usize, PolylineProjection)> {
    let mut out: Vec<(usize, PolylineProjection)> = network
        .index()
        .query(p, radius)
        .into_iter()
        .map(|e| (e, network.edge(e).geometry.project(p)))
        .filter(|(_, pr)| pr.distance <= radius)
        .collect();
    out.sort_by(|a, b| {
        a.1.distance
            .total_cmp(&b.1.distance)
            .then_with(|| network.edge(a.0).edge_id.cmp(&network.edge(b.0).edge_id))
    });
    out
}

/// Matcher bound to a network and rule base. Cheap to construct; holds no
/// per-trajectory state, so one instance can serve several threads.
#[derive(Debug, Clone)]
pub struct Matcher<'a> {
    network: &'a RoadNetwork,
    rules: &'a RuleBase,
    config: MatcherConfig,
    pd_input: usize,
    he_input: usize,
}

impl<'a> Matcher<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        rules: &'a RuleBase,
        config: MatcherConfig,
    ) -> Result<Self> {
        config.validate()?;
        let find = |name: &str| {
            rules
                .input_index(name)
                .ok_or_else(|| Error::Config(format!("rule base has no input {name:?}")))
        };
        if rules.inputs().len() != 2 {
            return Err(Error::Config(
                "matcher rule base takes exactly two inputs".into(),
            ));
        }
        Ok(Matcher {
            network,
            rules,
            pd_input: find(PD)?,
            he_input: find(HE)?,
            config,
        })
    }

    pub fn config(&self) -> &MatcherConfig {
        &self.config
    }

    pub fn network(&self) -> &RoadNetwork {
        self.network
    }

    /// Fuzzy likelihood for a crisp (PD, HE) pair.
    pub fn likelihood(&self, pd: f64, he: f64) -> f64 {
        let mut crisp = [0.0; 2];
        crisp[self.pd_input] = pd;
        crisp[self.he_input] = he;
        self.rules.evaluate(&crisp)
    }

    /// Scores one link. Links carry no one-way information, so the heading
    /// is compared against both directions of the segment under the foot
    /// point; without a heading HE is 0.
    pub fn score_link(&self, edge: usize, p: &PlanarPoint, heading: Option<f64>) -> LinkCandidate {
        let geom = &self.network.edge(edge).geometry;
        let projection = geom.project(p);
        self.score_projected(edge, projection, heading)
    }

    fn score_projected(
        &self,
        edge: usize,
        projection: PolylineProjection,
        heading: Option<f64>,
    ) -> LinkCandidate {
        let he = match heading {
            Some(h) => {
                let b = self
                    .network
                    .edge(edge)
                    .geometry
                    .segment(projection.segment_index)
                    .bearing();
                heading_error(h, b).min(heading_error(h, b + 180.0))
            }
            None => 0.0,
        };
        LinkCandidate {
            edge,
            pd: projection.distance,
            he,
            likelihood: self.likelihood(projection.distance, he),
            projection,
        }
    }

    fn better(&self, a: &LinkCandidate, b: &LinkCandidate) -> Ordering {
        // Greater = a preferred
        a.likelihood
            .total_cmp(&b.likelihood)
            .then_with(|| b.pd.total_cmp(&a.pd))
            .then_with(|| {
                self.network
                    .edge(b.edge)
                    .edge_id
                    .cmp(&self.network.edge(a.edge).edge_id)
            })
    }

    fn best_of(&self, cands: impl IntoIterator<Item = LinkCandidate>) -> Option<LinkCandidate> {
        cands.into_iter().max_by(|a, b| self.better(a, b))
    }

    fn confident(&self, c: &LinkCandidate) -> bool {
        c.likelihood >= self.config.min_likelihood
    }

    /// Initial link selection. Returns the best candidate within the search
    /// radius together with whether it is confident; `None` when no link is
    /// in range.
    pub fn imp(&self, p: &PlanarPoint, heading: Option<f64>) -> Option<(LinkCandidate, bool)> {
        let best = self.best_of(
            candidate_links(self.network, p, self.config.candidate_radius_m)
                .into_iter()
                .map(|(e, pr)| self.score_projected(e, pr, heading)),
        )?;
        let ok = self.confident(&best);
        Some((best, ok))
    }

    /// Nearest link regardless of distance, for fixes with nothing in range.
    fn nearest_link(&self, p: &PlanarPoint, heading: Option<f64>) -> LinkCandidate {
        let mut radius = self.config.candidate_radius_m;
        for _ in 0..24 {
            radius *= 2.0;
            let c = candidate_links(self.network, p, radius);
            if let Some(&(e, pr)) = c.first() {
                return self.score_projected(e, pr, heading);
            }
        }
        let (e, pr) = (0..self.network.len())
            .map(|e| (e, self.network.edge(e).geometry.project(p)))
            .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance))
            .expect("network is not empty");
        self.score_projected(e, pr, heading)
    }

    fn direction_of(&self, c: &LinkCandidate, heading: Option<f64>) -> TravelDirection {
        match heading {
            Some(h) => {
                let b = self
                    .network
                    .edge(c.edge)
                    .geometry
                    .segment(c.projection.segment_index)
                    .bearing();
                if heading_error(h, b) <= 90.0 {
                    TravelDirection::Forward
                } else {
                    TravelDirection::Backward
                }
            }
            None => TravelDirection::Forward,
        }
    }

    fn emit(
        &self,
        source_index: usize,
        c: &LinkCandidate,
        phase: Phase,
        confident: bool,
    ) -> MatchedPoint {
        let e = self.network.edge(c.edge);
        MatchedPoint {
            source_index,
            edge: c.edge,
            edge_id: e.edge_id.clone(),
            offset_m: c.projection.arc_offset,
            snapped: self.network.projection().unproject(&c.projection.foot),
            snapped_planar: c.projection.foot,
            likelihood: c.likelihood,
            phase,
            confident,
        }
    }

    /// IMP for an uninitialized state; always yields a point.
    fn initialize(
        &self,
        state: MatchState,
        source_index: usize,
        p: &PlanarPoint,
        heading: Option<f64>,
    ) -> (MatchState, MatchedPoint) {
        match self.imp(p, heading) {
            Some((best, true)) => {
                let next = MatchState {
                    link: LinkState::OnLink {
                        edge: best.edge,
                        direction: self.direction_of(&best, heading),
                    },
                    last_heading: state.last_heading,
                    consecutive_low_confidence: 0,
                };
                (next, self.emit(source_index, &best, Phase::Imp, true))
            }
            Some((best, false)) => (
                MatchState {
                    link: LinkState::Uninitialized,
                    ..state
                },
                self.emit(source_index, &best, Phase::Imp, false),
            ),
            None => {
                let best = self.nearest_link(p, heading);
                (
                    MatchState {
                        link: LinkState::Uninitialized,
                        ..state
                    },
                    self.emit(source_index, &best, Phase::Imp, false),
                )
            }
        }
    }

    /// One tracking step from an on-link state.
    ///
    /// Away from both end nodes and close to the link, the fix is snapped to
    /// the current link. Otherwise the current link and every link at its
    /// nearer end node are scored (only those within the candidate radius
    /// count). A confident winner becomes the new link; a low-confidence step
    /// keeps the current link, and after `reinit_after` such steps in a row the
    /// state resets and IMP runs on the same fix.
    pub fn smp_step(
        &self,
        state: MatchState,
        source_index: usize,
        p: &PlanarPoint,
        heading: Option<f64>,
    ) -> (MatchState, MatchedPoint) {
        let LinkState::OnLink { edge, direction } = state.link else {
            return self.initialize(state, source_index, p, heading);
        };
        let road = self.network.edge(edge);
        let current = self.score_link(edge, p, heading);
        let offset = current.projection.arc_offset;
        let to_end = road.length - offset;
        let jr = self.config.junction_radius_m;
        if offset > jr && to_end > jr && current.pd <= self.config.pd_escape_m {
            let next = MatchState {
                consecutive_low_confidence: 0,
                ..state
            };
            return (
                next,
                self.emit(source_index, &current, Phase::SmpAlong, true),
            );
        }

        let node = if offset <= to_end {
            road.from_node
        } else {
            road.to_node
        };
        let radius = self.config.candidate_radius_m;
        let mut cands: Vec<LinkCandidate> = Vec::with_capacity(4);
        if current.pd <= radius {
            cands.push(current);
        }
        for &e in self.network.incident(node) {
            if e != edge {
                let c = self.score_link(e, p, heading);
                if c.pd <= radius {
                    cands.push(c);
                }
            }
        }
        match self.best_of(cands) {
            Some(best) if self.confident(&best) => {
                let direction = if best.edge == edge {
                    direction
                } else {
                    self.direction_of(&best, heading)
                };
                let next = MatchState {
                    link: LinkState::OnLink {
                        edge: best.edge,
                        direction,
                    },
                    last_heading: state.last_heading,
                    consecutive_low_confidence: 0,
                };
                (
                    next,
                    self.emit(source_index, &best, Phase::SmpJunction, true),
                )
            }
            _ => {
                let low = state.consecutive_low_confidence + 1;
                if low >= self.config.reinit_after {
                    let reset = MatchState {
                        link: LinkState::Uninitialized,
                        last_heading: state.last_heading,
                        consecutive_low_confidence: 0,
                    };
                    self.initialize(reset, source_index, p, heading)
                } else {
                    let next = MatchState {
                        consecutive_low_confidence: low,
                        ..state
                    };
                    (
                        next,
                        self.emit(source_index, &current, Phase::SmpJunction, false),
                    )
                }
            }
        }
    }

    /// Matches every fix of `traj`, in order.
    pub fn match_trajectory(&self, traj: &Trajectory) -> Result<MatchResult> {
        if traj.len() < 2 {
            return Err(Error::TrajectoryTooShort {
                len: traj.len(),
                needed: 2,
            });
        }
        if self.network.is_empty() {
            return Err(Error::InvalidParameter("road network has no edges".into()));
        }
        let proj = self.network.projection();
        let planar = traj
            .positions()
            .map(|p| proj.project(p))
            .collect::<Result<Vec<_>>>()?;

        let start = Instant::now();
        let mut state = MatchState::default();
        let mut matched = Vec::with_capacity(planar.len());
        for (k, p) in planar.iter().enumerate() {
            if k > 0 && planar[k - 1].distance(p) >= self.config.min_heading_separation_m {
                state.last_heading = bearing(&planar[k - 1], p).ok();
            }
            let heading = state.last_heading;
            let source_index = traj.records()[k].source_index;
            let (next, point) = match state.link {
                LinkState::Uninitialized => self.initialize(state, source_index, p, heading),
                LinkState::OnLink { .. } => self.smp_step(state, source_index, p, heading),
            };
            state = next;
            matched.push(point);
        }
        let wall_time = start.elapsed();

        Ok(MatchResult {
            edge_sequence: edge_sequence(&matched),
            total_points: matched.len(),
            matched,
            wall_time,
        })
    }
}

/// Convenience wrapper around [`Matcher::match_trajectory`].
pub fn match_trajectory(
    network: &RoadNetwork,
    traj: &Trajectory,
    rules: &RuleBase,
    config: &MatcherConfig,
) -> Result<MatchResult> {
    Matcher::new(network, rules, *config)?.match_trajectory(traj)
}
