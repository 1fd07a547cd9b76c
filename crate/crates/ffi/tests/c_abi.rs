use std::ffi::{CStr, CString};
use std::ptr;

use slotcast::predictor::{save_bundle, train, TrainConfig};
use slotcast::synth::{generate, WorkloadConfig};
use slotcast_ffi::*;

fn fixture_bundle(dir: &tempfile::TempDir) -> CString {
    let records = generate(&WorkloadConfig {
        n_queries: 300,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let mut config = TrainConfig::default();
    config.booster.iterations = 20;
    let bundle = train(&records, &config).unwrap();
    let path = dir.path().join("m.bundle");
    save_bundle(&bundle, &path).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = slotcast_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn load_predict_free() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture_bundle(&dir);
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(slotcast_bundle_load(path.as_ptr(), &mut handle), SlotcastStatus::Ok);
        assert!(!handle.is_null());

        let sql = CString::new("SELECT a FROM t JOIN u ON t.id = u.id").unwrap();
        let mut p = std::mem::zeroed::<SlotcastPrediction>();
        assert_eq!(slotcast_predict_sql(handle, sql.as_ptr(), &mut p), SlotcastStatus::Ok);
        assert!(p.slot_min >= 0.0 && p.slot_min.is_finite());
        assert_eq!(p.complexity_score, 3);
        assert_eq!(p.route, SlotcastRoute::Simple);

        let json = CString::new(r#"{"query_text":"SELECT 1","total_bytes_processed":1000}"#).unwrap();
        assert_eq!(slotcast_predict_record_json(handle, json.as_ptr(), &mut p), SlotcastStatus::Ok);
        assert!(p.slot_min >= 0.0);

        let bad = CString::new("{not json").unwrap();
        assert_eq!(slotcast_predict_record_json(handle, bad.as_ptr(), &mut p), SlotcastStatus::InvalidRecord);
        assert!(last_error().starts_with("record"));

        assert_eq!(slotcast_predict_sql(handle, ptr::null(), &mut p), SlotcastStatus::NullArgument);
        slotcast_bundle_free(handle);
        slotcast_bundle_free(ptr::null_mut());
    }
}

#[test]
fn load_failures_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut handle = ptr::null_mut();
    let missing = CString::new(dir.path().join("nope").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(slotcast_bundle_load(missing.as_ptr(), &mut handle), SlotcastStatus::Io);
        assert!(handle.is_null());

        let junk = dir.path().join("junk");
        std::fs::write(&junk, b"not a bundle").unwrap();
        let junk = CString::new(junk.to_str().unwrap()).unwrap();
        assert_eq!(slotcast_bundle_load(junk.as_ptr(), &mut handle), SlotcastStatus::CorruptBundle);

        let path = fixture_bundle(&dir);
        let mut bytes = std::fs::read(path.to_str().unwrap()).unwrap();
        bytes[17] = b'2';
        std::fs::write(path.to_str().unwrap(), &bytes).unwrap();
        assert_eq!(slotcast_bundle_load(path.as_ptr(), &mut handle), SlotcastStatus::VersionMismatch);
        assert!(last_error().contains('2'));

        assert_eq!(slotcast_bundle_load(path.as_ptr(), ptr::null_mut()), SlotcastStatus::NullArgument);
    }
}

#[test]
fn complexity_and_version() {
    let sql = CString::new("SELECT DISTINCT a FROM t GROUP BY a UNION ALL SELECT DISTINCT b FROM u GROUP BY b")
        .unwrap();
    let mut score = 0u64;
    unsafe {
        assert_eq!(slotcast_complexity_score(sql.as_ptr(), &mut score), SlotcastStatus::Ok);
        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(
            slotcast_complexity_score(invalid.as_ptr().cast(), &mut score),
            SlotcastStatus::InvalidUtf8
        );
    }
    assert_eq!(score, 8);
    let v = unsafe { CStr::from_ptr(slotcast_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/slotcast.h")).unwrap();
    for name in [
        "slotcast_bundle_load",
        "slotcast_bundle_free",
        "slotcast_predict_sql",
        "slotcast_predict_record_json",
        "slotcast_complexity_score",
        "slotcast_last_error_message",
        "slotcast_version",
        "SLOTCAST_STATUS_VERSION_MISMATCH",
        "typedef struct SlotcastBundle SlotcastBundle",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
