use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use staymatch::eval::{generate_scenario, DwellSpec};
use staymatch_ffi::*;

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn scenario_files(dir: &Path) -> (PathBuf, PathBuf, Vec<String>) {
    let sc = generate_scenario(21, 6, &[DwellSpec::new(30, 40, 1.0)]).unwrap();
    sc.save(dir).unwrap();
    (
        dir.join("network.csv"),
        dir.join("trajectory.csv"),
        sc.truth.edge_ids,
    )
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sm_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn load_match_and_free() {
    let dir = tempfile::tempdir().unwrap();
    let (net_path, traj_path, truth) = scenario_files(dir.path());
    unsafe {
        let mut net: *mut SmNetwork = ptr::null_mut();
        assert_eq!(
            sm_network_load(cpath(&net_path).as_ptr(), SmFormat::Native, &mut net),
            SmStatus::Ok
        );
        assert_eq!(sm_network_edge_count(net), 60);

        let mut traj: *mut SmTrajectory = ptr::null_mut();
        assert_eq!(
            sm_trajectory_load(cpath(&traj_path).as_ptr(), SmFormat::Native, &mut traj),
            SmStatus::Ok
        );
        let n = sm_trajectory_len(traj);
        assert!(n > 40);

        let mut res: *mut SmMatchResult = ptr::null_mut();
        assert_eq!(sm_match(net, traj, ptr::null(), &mut res), SmStatus::Ok);
        assert_eq!(sm_match_result_len(res), n);
        let mut p = std::mem::zeroed::<SmMatchedPoint>();
        assert_eq!(sm_match_result_point(res, 0, &mut p), SmStatus::Ok);
        assert_eq!(p.phase, SmPhase::Imp);
        assert_eq!(sm_match_result_point(res, n, &mut p), SmStatus::OutOfRange);
        assert!(sm_match_result_edge_id(res, n).is_null());
        assert!(!sm_match_result_edge_id(res, 0).is_null());
        assert!(sm_match_result_wall_time_s(res) >= 0.0);

        let ids: Vec<CString> = truth
            .iter()
            .map(|s| CString::new(s.as_str()).unwrap())
            .collect();
        let ptrs: Vec<*const std::ffi::c_char> = ids.iter().map(|s| s.as_ptr()).collect();
        let mut correct = 0usize;
        assert_eq!(
            sm_match_result_correct_links(res, ptrs.as_ptr(), ptrs.len(), &mut correct),
            SmStatus::Ok
        );
        assert_eq!(correct, truth.len());
        assert!(sm_match_result_sequence_len(res) >= truth.len());

        let mut reduced: *mut SmTrajectory = ptr::null_mut();
        let mut clusters = 0usize;
        assert_eq!(
            sm_trajectory_reduce(
                traj,
                0.00002,
                3,
                SmMetric::DegreeEuclidean,
                &mut reduced,
                &mut clusters
            ),
            SmStatus::Ok
        );
        assert!(clusters >= 1);
        assert!(sm_trajectory_len(reduced) < n);

        sm_trajectory_free(reduced);
        sm_match_result_free(res);
        sm_trajectory_free(traj);
        sm_network_free(net);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut traj: *mut SmTrajectory = ptr::null_mut();
        let missing = CString::new("/nonexistent/dir/t.csv").unwrap();
        assert_eq!(
            sm_trajectory_load(missing.as_ptr(), SmFormat::Native, &mut traj),
            SmStatus::Input
        );
        assert!(last_error().contains("/nonexistent/dir/t.csv"));
        assert!(traj.is_null());

        assert_eq!(
            sm_trajectory_load(ptr::null(), SmFormat::Native, &mut traj),
            SmStatus::NullPointer
        );

        let t = [0.0, 1.0];
        let lat = [47.6, 47.6001];
        let lon = [-122.3, -122.3];
        assert_eq!(
            sm_trajectory_from_arrays(t.as_ptr(), lat.as_ptr(), lon.as_ptr(), 2, &mut traj),
            SmStatus::Ok
        );
        assert_eq!(last_error(), "");
        let mut out: *mut SmTrajectory = ptr::null_mut();
        assert_eq!(
            sm_trajectory_reduce(
                traj,
                0.0,
                3,
                SmMetric::DegreeEuclidean,
                &mut out,
                ptr::null_mut()
            ),
            SmStatus::Usage
        );
        let (mut ts, mut la, mut lo) = (0.0, 0.0, 0.0);
        assert_eq!(
            sm_trajectory_record(traj, 1, &mut ts, &mut la, &mut lo),
            SmStatus::Ok
        );
        assert_eq!((ts, la, lo), (1.0, 47.6001, -122.3));
        sm_trajectory_free(traj);

        let bad_lat = [47.6, 95.0];
        assert_eq!(
            sm_trajectory_from_arrays(t.as_ptr(), bad_lat.as_ptr(), lon.as_ptr(), 2, &mut traj),
            SmStatus::Domain
        );

        let mut net: *mut SmNetwork = ptr::null_mut();
        let mut res: *mut SmMatchResult = ptr::null_mut();
        assert_eq!(
            sm_match(net, traj, ptr::null(), &mut res),
            SmStatus::NullPointer
        );
        sm_network_free(net);
        net = ptr::null_mut();
        sm_network_free(net);
    }
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/staymatch.h"))
            .unwrap();
    for name in [
        "sm_network_load",
        "sm_trajectory_load",
        "sm_trajectory_from_arrays",
        "sm_trajectory_reduce",
        "sm_match",
        "sm_match_result_point",
        "sm_match_result_correct_links",
        "sm_match_result_free",
        "sm_last_error_message",
        "typedef struct SmNetwork SmNetwork",
        "SM_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles a small C program against the header and static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test-binary>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libstaymatch_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let (net, traj, truth) = scenario_files(dir.path());
    let out = Command::new(&exe).arg(&net).arg(&traj).output().unwrap();
    assert!(
        out.status.success(),
        "smoke exited with {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    let seq: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(
        staymatch::eval::correct_link_count(&seq, &truth),
        truth.len()
    );
}

fn which_cc() -> Result<String, ()> {
    for cand in ["cc", "gcc", "clang"] {
        if Command::new(cand)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cand.to_string());
        }
    }
    Err(())
}
