//! Independent reference implementations shared by the integration tests.
//!
//! These are deliberately naive: quadratic neighborhoods, dense sampling and
//! plain union-find, with no code shared with the library beyond its data
//! types.

#![allow(dead_code)]

use std::path::PathBuf;

use staymatch::geo::PlanarPoint;

/// Frozen values for `fixtures/mini_benchmark`, computed with
/// [`dbscan_oracle`] at eps 0.00002 degrees and min_pts 3.
pub mod mini {
    pub const EPS: f64 = 0.00002;
    pub const MIN_PTS: usize = 3;
    pub const POINTS: usize = 2061;
    pub const CLUSTERS: usize = 8;
    pub const NOISE: usize = 1493;
    pub const REDUCED: usize = 1501;
    pub const TRUTH_LINKS: usize = 60;
    /// 100 * (POINTS - REDUCED) / POINTS
    pub const VOLUME_REDUCTION_PCT: f64 = 27.171_276_079_573_023;
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_benchmark")
}

pub struct OracleClustering {
    pub core: Vec<bool>,
    /// Connected component of each core point, numbered in order of the
    /// lowest member index.
    pub component: Vec<Option<usize>>,
    /// Non-core points with no core point within eps.
    pub noise: Vec<bool>,
    pub cluster_count: usize,
    /// For every point, the core points within eps.
    pub core_neighbors: Vec<Vec<usize>>,
}

impl OracleClustering {
    pub fn noise_count(&self) -> usize {
        self.noise.iter().filter(|&&n| n).count()
    }

    /// Size of the reduced trajectory: noise plus one record per cluster.
    pub fn reduced_size(&self) -> usize {
        self.noise_count() + self.cluster_count
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Density-connectivity by definition: a point's neighborhood is every point
/// (itself included) within `eps`; cores have at least `min_pts` neighbors;
/// cores within `eps` of each other share a cluster.
pub fn dbscan_oracle(points: &[PlanarPoint], eps: f64, min_pts: usize) -> OracleClustering {
    let n = points.len();
    let dist = |i: usize, j: usize| (points[i].x - points[j].x).hypot(points[i].y - points[j].y);
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist(i, j) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        if !core[i] {
            continue;
        }
        for &j in &neighbors[i] {
            if core[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_to_id = std::collections::HashMap::new();
    let mut component = vec![None; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let next = root_to_id.len();
            component[i] = Some(*root_to_id.entry(r).or_insert(next));
        }
    }
    let core_neighbors: Vec<Vec<usize>> = neighbors
        .iter()
        .map(|nb| nb.iter().copied().filter(|&j| core[j]).collect())
        .collect();
    let noise = (0..n)
        .map(|i| !core[i] && core_neighbors[i].is_empty())
        .collect();
    OracleClustering {
        cluster_count: root_to_id.len(),
        core,
        component,
        noise,
        core_neighbors,
    }
}

/// Checks library labels against the oracle. Returns a description of the
/// first disagreement.
pub fn compare_with_oracle(
    labels: &[Option<usize>],
    core: &[bool],
    cluster_count: usize,
    oracle: &OracleClustering,
) -> Result<(), String> {
    if core != oracle.core.as_slice() {
        return Err("core sets differ".into());
    }
    if cluster_count != oracle.cluster_count {
        return Err(format!(
            "cluster count {cluster_count} vs oracle {}",
            oracle.cluster_count
        ));
    }
    // the core partition must match up to renaming
    let mut lib_to_oracle = vec![None; cluster_count];
    let mut oracle_to_lib = vec![None; oracle.cluster_count];
    for i in 0..labels.len() {
        let Some(oc) = oracle.component[i] else {
            continue;
        };
        let Some(lc) = labels[i] else {
            return Err(format!("core point {i} unlabeled"));
        };
        if *lib_to_oracle[lc].get_or_insert(oc) != oc || *oracle_to_lib[oc].get_or_insert(lc) != lc
        {
            return Err(format!("core partition differs at point {i}"));
        }
    }
    for i in 0..labels.len() {
        if oracle.core[i] {
            continue;
        }
        match labels[i] {
            None if oracle.noise[i] => {}
            None => return Err(format!("border point {i} labeled noise")),
            Some(_) if oracle.noise[i] => return Err(format!("noise point {i} labeled")),
            Some(l) => {
                if !oracle.core_neighbors[i]
                    .iter()
                    .any(|&j| labels[j] == Some(l))
                {
                    return Err(format!(
                        "border point {i} joined a cluster with no core in reach"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Distance from `p` to segment `ab` by repeated dense sampling, zooming in
/// on the best sample until the window is negligibly small.
pub fn sampled_segment_distance(p: &PlanarPoint, a: &PlanarPoint, b: &PlanarPoint) -> f64 {
    let at = |t: f64| {
        let x = a.x + t * (b.x - a.x);
        let y = a.y + t * (b.y - a.y);
        (p.x - x).hypot(p.y - y)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = at(0.0).min(at(1.0));
    for _ in 0..12 {
        let step = (hi - lo) / 1000.0;
        let mut best_t = lo;
        let mut best_d = f64::INFINITY;
        for k in 0..=1000 {
            let t = lo + k as f64 * step;
            let d = at(t);
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        best = best.min(best_d);
        lo = (best_t - step).max(0.0);
        hi = (best_t + step).min(1.0);
    }
    best
}

/// Centroid of `mu` over `[lo, hi]` with the trapezoid rule on `samples`
/// points.
pub fn centroid_oracle(mu: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    let h = (hi - lo) / (samples - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..samples {
        let x = lo + k as f64 * h;
        let w = if k == 0 || k == samples - 1 { 0.5 } else { 1.0 };
        let m = mu(x);
        num += w * x * m;
        den += w * m;
    }
    if den > 0.0 {
        num / den
    } else {
        (lo + hi) / 2.0
    }
}
