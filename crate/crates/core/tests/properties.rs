mod common;

use proptest::prelude::*;

use common::{centroid_oracle, compare_with_oracle, dbscan_oracle, sampled_segment_distance};
use staymatch::eval::correct_link_count;
use staymatch::fuzzy::{default_rule_base, Aggregate, MembershipFunction};
use staymatch::geo::{
    heading_error, point_segment_distance, GeoPoint, GridIndex, PlanarPoint, Polyline, Projection,
    Segment,
};
use staymatch::ingest::{
    parse_trajectory, save_trajectory, Trajectory, TrajectoryFormat, TrajectoryRecord,
};
use staymatch::staypoint::{dbscan_points, reduce_trajectory, summarize_clusters, ClusterLabels};

fn planar(range: f64) -> impl Strategy<Value = PlanarPoint> {
    (-range..range, -range..range).prop_map(|(x, y)| PlanarPoint::new(x, y))
}

fn polyline(range: f64) -> impl Strategy<Value = Polyline> {
    prop::collection::vec(planar(range), 2..8)
        .prop_filter_map("degenerate", |v| Polyline::new(v).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn segment_distance_matches_sampling(p in planar(500.0), a in planar(500.0), b in planar(500.0)) {
        prop_assume!(a.distance(&b) > 1e-3);
        let s = Segment::new(a, b).unwrap();
        let got = point_segment_distance(&p, &s);
        let oracle = sampled_segment_distance(&p, &a, &b);
        prop_assert!((got.distance - oracle).abs() <= 1e-6, "{} vs {}", got.distance, oracle);
        prop_assert!((0.0..=1.0).contains(&got.t));
        prop_assert!((got.foot.distance(&p) - got.distance).abs() <= 1e-9 * (1.0 + got.distance));
    }

    #[test]
    fn polyline_projection_is_the_nearest_segment(p in planar(300.0), pl in polyline(300.0)) {
        let got = pl.project(&p);
        let per_seg: Vec<f64> = pl.segments().map(|s| point_segment_distance(&p, &s).distance).collect();
        let best = per_seg.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(got.distance, best);
        let first = per_seg.iter().position(|&d| d == best).unwrap();
        prop_assert_eq!(got.segment_index, first);
        prop_assert!(got.arc_offset >= 0.0 && got.arc_offset <= pl.length() + 1e-9);
    }

    #[test]
    fn projection_roundtrip(lat0 in -60.0f64..60.0, lon0 in -170.0f64..170.0, dlat in -1.0f64..1.0, dlon in -1.0f64..1.0) {
        let origin = GeoPoint::new(lat0, lon0).unwrap();
        let p = GeoPoint::new(lat0 + dlat, lon0 + dlon).unwrap();
        let proj = Projection::new(origin).unwrap();
        let back = proj.unproject(&proj.project(&p).unwrap());
        prop_assert!((back.lat - p.lat).abs() <= 1e-9);
        prop_assert!((back.lon - p.lon).abs() <= 1e-9);
    }

    #[test]
    fn heading_error_symmetric_and_periodic(a in -720.0f64..720.0, b in -720.0f64..720.0, k in -3i32..3) {
        let e = heading_error(a, b);
        prop_assert!((0.0..=180.0).contains(&e));
        prop_assert!((e - heading_error(b, a)).abs() <= 1e-9);
        prop_assert!((e - heading_error(a + 360.0 * k as f64, b)).abs() <= 1e-9);
    }

    #[test]
    fn grid_index_never_misses(
        lines in prop::collection::vec(polyline(1000.0), 1..30),
        q in planar(1100.0),
        radius in 0.0f64..400.0,
        cell in 20.0f64..300.0,
    ) {
        let idx = GridIndex::build(lines.iter().enumerate(), cell).unwrap();
        let hits = idx.query(&q, radius);
        for (i, pl) in lines.iter().enumerate() {
            if pl.project(&q).distance <= radius {
                prop_assert!(hits.contains(&i), "missed line {i}");
            }
        }
    }

    #[test]
    fn dbscan_agrees_with_oracle(
        pts in prop::collection::vec(planar(20.0), 1..80),
        eps in 0.5f64..6.0,
        min_pts in 1usize..6,
    ) {
        let labels = dbscan_points(&pts, eps, min_pts).unwrap();
        let oracle = dbscan_oracle(&pts, eps, min_pts);
        let cmp = compare_with_oracle(labels.labels(), labels.core_flags(), labels.cluster_count(), &oracle);
        prop_assert!(cmp.is_ok(), "{:?}", cmp);
    }

    #[test]
    fn reduction_keeps_noise_and_one_per_cluster(
        pts in prop::collection::vec((0.0f64..0.0004, 0.0f64..0.0004), 2..60),
        eps in 0.00001f64..0.0001,
        min_pts in 2usize..5,
    ) {
        let records: Vec<TrajectoryRecord> = pts.iter().enumerate().map(|(i, &(dlat, dlon))| TrajectoryRecord {
            timestamp: i as f64,
            position: GeoPoint { lat: 47.6 + dlat, lon: -122.3 + dlon },
            source_index: i,
        }).collect();
        let traj = Trajectory::new("p", records).unwrap();
        let planar: Vec<PlanarPoint> = traj.positions().map(|p| PlanarPoint::new(p.lon, p.lat)).collect();
        let labels = dbscan_points(&planar, eps, min_pts).unwrap();
        let stays = summarize_clusters(&traj, &labels);
        let reduced = reduce_trajectory(&traj, &labels, &stays);
        prop_assert_eq!(reduced.len(), labels.noise_count() + labels.cluster_count());
        prop_assert!(reduced.records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        for s in &stays {
            let members: Vec<&TrajectoryRecord> = traj.records().iter().zip(labels.labels())
                .filter(|(_, l)| **l == Some(s.cluster_id)).map(|(r, _)| r).collect();
            let lo = members.iter().map(|r| r.position.lat).fold(f64::INFINITY, f64::min);
            let hi = members.iter().map(|r| r.position.lat).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= s.lat && s.lat <= hi);
            prop_assert!(s.t_arrive <= s.t_leave);
        }
        let all_noise = ClusterLabels::all_noise(traj.len());
        let same = reduce_trajectory(&traj, &all_noise, &[]);
        prop_assert_eq!(same.records, traj.records().to_vec());
    }

    #[test]
    fn trajectory_file_roundtrip(
        pts in prop::collection::vec((-89.0f64..89.0, -179.0f64..179.0, 0.0f64..10.0), 1..40),
    ) {
        let mut t = 1_000_000_000.0;
        let records: Vec<TrajectoryRecord> = pts.iter().enumerate().map(|(i, &(lat, lon, dt))| {
            t += dt;
            TrajectoryRecord { timestamp: t, position: GeoPoint { lat, lon }, source_index: i }
        }).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        save_trajectory(&records, &path).unwrap();
        let back = parse_trajectory(&path, &TrajectoryFormat::native()).unwrap();
        prop_assert_eq!(back.records(), records.as_slice());
    }

    #[test]
    fn memberships_stay_in_unit_interval(
        a in -50.0f64..50.0, w1 in 0.0f64..30.0, w2 in 0.0f64..30.0, w3 in 0.0f64..30.0, x in -100.0f64..150.0,
    ) {
        let (b, c, d) = (a + w1, a + w1 + w2, a + w1 + w2 + w3);
        let mut mfs = vec![
            MembershipFunction::triangular(a, b, c).unwrap(),
            MembershipFunction::trapezoidal(a, b, c, d).unwrap(),
        ];
        if b > a {
            mfs.push(MembershipFunction::z_shaped(a, b).unwrap());
            mfs.push(MembershipFunction::s_shaped(a, b).unwrap());
        }
        for mf in mfs {
            let m = mf.eval(x);
            prop_assert!((0.0..=1.0).contains(&m), "{mf:?} at {x} = {m}");
        }
    }

    #[test]
    fn centroid_close_to_fine_integration(levels in prop::collection::vec(0.0f64..1.0, 3)) {
        let rules = default_rule_base();
        let agg = Aggregate { levels };
        let out = rules.output();
        let (lo, hi) = out.universe();
        let got = rules.defuzzify(&agg);
        let oracle = centroid_oracle(|x| agg.eval(out, x), lo, hi, 100_001);
        prop_assert!((got - oracle).abs() <= 0.1, "{got} vs {oracle}");
    }

    #[test]
    fn lcs_bounds(
        a in prop::collection::vec(0u8..5, 0..30),
        b in prop::collection::vec(0u8..5, 0..30),
    ) {
        let a: Vec<String> = a.iter().map(|c| c.to_string()).collect();
        let b: Vec<String> = b.iter().map(|c| c.to_string()).collect();
        let n = correct_link_count(&a, &b);
        prop_assert!(n <= a.len().min(b.len()));
        prop_assert_eq!(n, correct_link_count(&b, &a));
        prop_assert_eq!(correct_link_count(&a, &a), a.len());
    }
}
