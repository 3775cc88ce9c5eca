use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use nirisk_ffi::*;

const CHAIN_MODEL: &str = include_str!("../../core/tests/fixtures/chain_model.json");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> Option<String> {
    let p = nirisk_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string())
}

fn chain_model() -> *mut NiriskModel {
    let mut model = ptr::null_mut();
    let text = c(CHAIN_MODEL);
    assert_eq!(unsafe { nirisk_model_from_json(text.as_ptr(), &mut model) }, NiriskStatus::Ok);
    assert!(!model.is_null());
    model
}

// forward recursion by hand for the two-state chain: prior 0.2, stays yes
// 0.7, turns yes 0.1, P(pos | yes) = 0.9, P(pos | no) = 0.2
fn chain_oracle(pos_days: usize) -> Vec<f64> {
    let mut p_yes = 0.2;
    let mut out = Vec::new();
    for day in 0..pos_days {
        if day > 0 {
            p_yes = 0.7 * p_yes + 0.1 * (1.0 - p_yes);
        }
        let (a, b) = (0.9 * p_yes, 0.2 * (1.0 - p_yes));
        p_yes = a / (a + b);
        out.push(p_yes);
    }
    out
}

#[test]
fn tracker_follows_the_forward_recursion() {
    let model = chain_model();
    let mut tracker = ptr::null_mut();
    unsafe {
        assert_eq!(nirisk_tracker_new(model, ptr::null(), &mut tracker), NiriskStatus::Ok);
        // the tracker keeps the model alive
        nirisk_model_free(model);
        let mut p = 0.0;
        assert_eq!(nirisk_tracker_baseline(tracker, &mut p), NiriskStatus::Ok);
        assert!((p - 0.2).abs() < 1e-12);
        let obs = c(r#"{"O": "pos"}"#);
        let expected = chain_oracle(2);
        let mut peeked = 0.0;
        assert_eq!(nirisk_tracker_peek(tracker, obs.as_ptr(), &mut peeked), NiriskStatus::Ok);
        assert_eq!(nirisk_tracker_advance(tracker, obs.as_ptr(), &mut p), NiriskStatus::Ok);
        assert_eq!(p, peeked);
        assert!((p - expected[0]).abs() < 1e-12);
        assert_eq!(nirisk_tracker_advance(tracker, obs.as_ptr(), &mut p), NiriskStatus::Ok);
        assert!((p - expected[1]).abs() < 1e-12);
        let mut day = 0usize;
        assert_eq!(nirisk_tracker_day(tracker, &mut day), NiriskStatus::Ok);
        assert_eq!(day, 2);
        nirisk_tracker_free(tracker);
    }
}

#[test]
fn bad_evidence_is_reported_and_leaves_the_tracker_alone() {
    let model = chain_model();
    let mut tracker = ptr::null_mut();
    unsafe {
        assert_eq!(nirisk_tracker_new(model, ptr::null(), &mut tracker), NiriskStatus::Ok);
        let mut p = -1.0;
        let bad_state = c(r#"{"O": "maybe"}"#);
        assert_eq!(nirisk_tracker_advance(tracker, bad_state.as_ptr(), &mut p), NiriskStatus::InvalidEvidence);
        assert!(last_error().unwrap().contains("maybe"));
        assert_eq!(p, -1.0);
        let observed_result = c(r#"{"result": "yes"}"#);
        assert_eq!(
            nirisk_tracker_advance(tracker, observed_result.as_ptr(), &mut p),
            NiriskStatus::InvalidEvidence
        );
        let not_json = c("{");
        assert_eq!(nirisk_tracker_advance(tracker, not_json.as_ptr(), &mut p), NiriskStatus::InvalidArgument);
        let mut day = 9usize;
        assert_eq!(nirisk_tracker_day(tracker, &mut day), NiriskStatus::Ok);
        assert_eq!(day, 0);
        assert_eq!(last_error(), None);
        nirisk_tracker_free(tracker);
        nirisk_model_free(model);
    }
}

#[test]
fn null_pointers_and_bad_models_are_rejected() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(nirisk_model_from_json(ptr::null(), &mut model), NiriskStatus::NullPointer);
        assert_eq!(nirisk_model_default(ptr::null_mut()), NiriskStatus::NullPointer);
        let junk = c(r#"{"static_slice": 3}"#);
        assert_eq!(nirisk_model_from_json(junk.as_ptr(), &mut model), NiriskStatus::InvalidModel);
        assert!(model.is_null());
        let mut p = 0.0;
        assert_eq!(nirisk_tracker_baseline(ptr::null(), &mut p), NiriskStatus::NullPointer);
        assert!(last_error().unwrap().contains("tracker"));
        nirisk_model_free(ptr::null_mut());
        nirisk_tracker_free(ptr::null_mut());
        nirisk_string_free(ptr::null_mut());
    }
}

#[test]
fn predict_json_and_model_round_trip() {
    let model = chain_model();
    unsafe {
        let timeline = c(r#"{"static": {}, "days": [{"O": "pos"}, {}]}"#);
        let mut out = ptr::null_mut();
        assert_eq!(nirisk_predict_json(model, timeline.as_ptr(), &mut out), NiriskStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        nirisk_string_free(out);
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.len(), 3);
        let p1 = chain_oracle(1)[0];
        assert!((points[1]["probability"].as_f64().unwrap() - p1).abs() < 1e-12);
        // an unobserved day only propagates
        let p2 = 0.7 * p1 + 0.1 * (1.0 - p1);
        assert!((points[2]["probability"].as_f64().unwrap() - p2).abs() < 1e-12);

        let mut json = ptr::null_mut();
        assert_eq!(nirisk_model_to_json(model, &mut json), NiriskStatus::Ok);
        assert_eq!(CStr::from_ptr(json).to_str().unwrap(), CHAIN_MODEL);
        nirisk_string_free(json);
        nirisk_model_free(model);
    }
}

#[test]
fn default_model_baseline_is_a_probability() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(nirisk_model_default(&mut model), NiriskStatus::Ok);
        let mut tracker = ptr::null_mut();
        let adm = c(r#"{"sex": "F", "age1": "66+"}"#);
        assert_eq!(nirisk_tracker_new(model, adm.as_ptr(), &mut tracker), NiriskStatus::Ok);
        let mut p = -1.0;
        assert_eq!(nirisk_tracker_baseline(tracker, &mut p), NiriskStatus::Ok);
        assert!((0.0..=1.0).contains(&p));
        nirisk_tracker_free(tracker);
        nirisk_model_free(model);
    }
}

#[test]
fn metrics_of_the_fifty_eight_case_matrix() {
    let mut m = NiriskMetrics {
        accuracy: 0.0,
        ppv: 0.0,
        npv: 0.0,
        has_ppv: false,
        has_npv: false,
    };
    unsafe {
        assert_eq!(nirisk_metrics(34, 7, 8, 9, &mut m), NiriskStatus::Ok);
        assert!((m.accuracy - 43.0 / 58.0).abs() < 1e-12);
        assert_eq!((m.ppv, m.has_ppv), (9.0 / 16.0, true));
        assert!((m.npv - 34.0 / 42.0).abs() < 1e-12);
        assert_eq!(nirisk_metrics(5, 0, 0, 0, &mut m), NiriskStatus::Ok);
        assert!(!m.has_ppv && m.ppv.is_nan() && m.has_npv);
        assert_eq!(nirisk_metrics(0, 0, 0, 0, &mut m), NiriskStatus::InvalidArgument);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nirisk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("nirisk.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "nirisk_version",
        "nirisk_last_error",
        "nirisk_model_from_json",
        "nirisk_model_default",
        "nirisk_model_free",
        "nirisk_model_to_json",
        "nirisk_string_free",
        "nirisk_tracker_new",
        "nirisk_tracker_free",
        "nirisk_tracker_baseline",
        "nirisk_tracker_advance",
        "nirisk_tracker_peek",
        "nirisk_tracker_day",
        "nirisk_predict_json",
        "nirisk_metrics",
        "NIRISK_STATUS_IMPOSSIBLE_EVIDENCE",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "nirisk.h"

int main(void) {
    NiriskModel *model = NULL;
    NiriskTracker *tracker = NULL;
    double p = 0.0;
    if (nirisk_model_default(&model) != NIRISK_STATUS_OK) return 1;
    if (nirisk_tracker_new(model, "{\"sex\": \"M\"}", &tracker) != NIRISK_STATUS_OK) return 2;
    nirisk_model_free(model);
    if (nirisk_tracker_advance(tracker, "{\"act_1\": \"yes\"}", &p) != NIRISK_STATUS_OK) return 3;
    if (!(p >= 0.0 && p <= 1.0)) return 4;
    if (nirisk_tracker_advance(tracker, "{\"act_1\": \"perhaps\"}", &p) != NIRISK_STATUS_INVALID_EVIDENCE) return 5;
    if (strstr(nirisk_last_error(), "perhaps") == NULL) return 6;
    nirisk_tracker_free(tracker);
    printf("%.6f\n", p);
    return 0;
}
"#;

/// Compiles and runs a C client against the static library when a C
/// compiler and the archive are available next to this test binary.
#[test]
fn c_client_links_against_the_static_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let archive = profile_dir.join("libnirisk_ffi.a");
    let has_cc = Command::new("cc").arg("--version").output().is_ok();
    if !archive.is_file() || !has_cc {
        eprintln!("skipping C link check: archive present {}, cc present {has_cc}", archive.is_file());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status.code());
    let p: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
}
