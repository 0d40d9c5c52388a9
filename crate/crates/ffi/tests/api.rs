use std::ffi::{CStr, CString};
use std::ptr;

use qhmetric_ffi::*;

fn domain(json: &str) -> *mut QhDomain {
    let s = CString::new(json).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(
        unsafe { qh_domain_from_json(s.as_ptr(), &mut d) },
        QhStatus::Ok
    );
    d
}

fn last_error() -> String {
    let p = qh_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn half_plane_distances() {
    let d = domain(r#"{"variant":"half_plane","normal":[0,1],"offset":0}"#);
    let (x, y) = (
        QhPoint { x: 0.0, y: 1.0 },
        QhPoint {
            x: 0.0,
            y: std::f64::consts::E,
        },
    );
    let mut j = 0.0;
    assert_eq!(unsafe { qh_j_distance(d, x, y, &mut j) }, QhStatus::Ok);
    assert!((j - (std::f64::consts::E).ln()).abs() < 1e-12, "{j}");
    let mut k = QhBracket {
        lower: 0.0,
        upper: 0.0,
        refinement_level: 0,
        exact: false,
    };
    assert_eq!(unsafe { qh_k_distance(d, x, y, &mut k) }, QhStatus::Ok);
    assert!(k.exact);
    assert!((k.upper - 1.0).abs() < 1e-12);
    let mut inside = false;
    assert_eq!(
        unsafe { qh_domain_contains(d, QhPoint { x: 3.0, y: -1.0 }, &mut inside) },
        QhStatus::Ok
    );
    assert!(!inside);
    let mut dist = 0.0;
    assert_eq!(
        unsafe { qh_domain_boundary_distance(d, x, &mut dist) },
        QhStatus::Ok
    );
    assert_eq!(dist, 1.0);
    unsafe { qh_domain_free(d) };
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new(r#"{"variant":"disk","center":[0,0],"radius":-1}"#).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(
        unsafe { qh_domain_from_json(bad.as_ptr(), &mut d) },
        QhStatus::InvalidDomain
    );
    assert!(d.is_null());
    assert!(last_error().contains("radius"));

    let junk = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { qh_domain_from_json(junk.as_ptr(), &mut d) },
        QhStatus::Parse
    );
    assert_eq!(
        unsafe { qh_domain_from_json(ptr::null(), &mut d) },
        QhStatus::NullPointer
    );

    let disk = domain(r#"{"variant":"disk","center":[0,0],"radius":1}"#);
    let mut j = 0.0;
    let outside = QhPoint { x: 2.0, y: 0.0 };
    assert_eq!(
        unsafe { qh_j_distance(disk, outside, outside, &mut j) },
        QhStatus::OutsideDomain
    );
    assert_eq!(
        unsafe { qh_j_distance(disk, outside, outside, ptr::null_mut()) },
        QhStatus::NullPointer
    );
    assert_eq!(
        unsafe { qh_j_distance(ptr::null(), outside, outside, &mut j) },
        QhStatus::NullPointer
    );
    // success clears the message
    let o = QhPoint { x: 0.0, y: 0.0 };
    assert_eq!(unsafe { qh_j_distance(disk, o, o, &mut j) }, QhStatus::Ok);
    assert!(qh_last_error_message().is_null());
    unsafe { qh_domain_free(disk) };
    unsafe { qh_domain_free(ptr::null_mut()) };
}

#[test]
fn slit_chain_round_trip() {
    let s = CString::new(r#"{"variant":"conformal_slit_chain","direction":[1,0]}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { qh_map_from_json(s.as_ptr(), &mut m) },
        QhStatus::Ok
    );
    let mut z = QhPoint { x: 0.0, y: 0.0 };
    assert_eq!(
        unsafe { qh_map_apply_inverse(m, QhPoint { x: -0.25, y: 0.0 }, &mut z) },
        QhStatus::Ok
    );
    assert!((z.x + 1.0 / 7.0).abs() < 1e-14 && z.y.abs() < 1e-14);
    let mut w = QhPoint { x: 0.0, y: 0.0 };
    assert_eq!(unsafe { qh_map_apply(m, z, &mut w) }, QhStatus::Ok);
    assert!((w.x + 0.25).abs() < 1e-14);
    assert_eq!(
        unsafe { qh_map_apply_inverse(m, QhPoint { x: 0.5, y: 0.0 }, &mut z) },
        QhStatus::OutsideDomain
    );
    unsafe { qh_map_free(m) };
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qhmetric.h"))
            .unwrap();
    for name in [
        "qh_domain_from_json",
        "qh_domain_free",
        "qh_k_distance",
        "qh_map_apply_inverse",
        "qh_last_error_message",
        "typedef struct QhDomain QhDomain",
        "QH_STATUS_OUTSIDE_DOMAIN",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
