use std::ffi::{CStr, CString};
use std::ptr;

use trof_ffi::*;

fn last_error() -> String {
    let p = trof_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn two_level(w: usize, h: usize) -> Vec<f64> {
    (0..w * h)
        .map(|i| if (i % w) >= w / 2 { 0.8 } else { 0.2 })
        .collect()
}

#[test]
fn segment_roundtrip_through_handles() {
    unsafe {
        let (w, h) = (12, 10);
        let data = two_level(w, h);
        let mut img = ptr::null_mut();
        assert_eq!(trof_image_new(w, h, data.as_ptr(), &mut img), TrofStatus::Ok);
        assert_eq!((trof_image_width(img), trof_image_height(img)), (w, h));

        let mut cfg = ptr::null_mut();
        assert_eq!(trof_config_new(2, 20.0, &mut cfg), TrofStatus::Ok);
        assert_eq!(trof_config_set_tolerances(cfg, 1e-6, 1e-6), TrofStatus::Ok);
        assert_eq!(trof_config_set_tv(cfg, TrofTv::Anisotropic), TrofStatus::Ok);

        let mut res = ptr::null_mut();
        assert_eq!(trof_segment(img, cfg, &mut res), TrofStatus::Ok);
        assert_eq!(trof_result_phases(res), 2);
        assert!(trof_result_converged(res));

        let mut labels = vec![9u32; w * h];
        assert_eq!(trof_result_labels(res, labels.as_mut_ptr(), labels.len()), TrofStatus::Ok);
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(l, u32::from(i % w >= w / 2));
        }
        let mut means = [0.0; 2];
        assert_eq!(trof_result_means(res, means.as_mut_ptr(), 2), TrofStatus::Ok);
        assert!((means[0] - 0.2).abs() < 1e-12 && (means[1] - 0.8).abs() < 1e-12);
        let mut tau = [0.0; 1];
        assert_eq!(trof_result_thresholds(res, tau.as_mut_ptr(), 1), TrofStatus::Ok);

        let mut json = ptr::null_mut();
        assert_eq!(trof_result_report_json(res, cfg, &mut json), TrofStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        trof_string_free(json);
        let report = trof::report::RunReport::from_json(&text).unwrap();
        assert_eq!(report.result.phases, 2);

        trof_result_free(res);
        trof_config_free(cfg);
        trof_image_free(img);
    }
}

#[test]
fn explicit_thresholds_and_small_buffers() {
    unsafe {
        let (w, h) = (8, 8);
        let data = two_level(w, h);
        let mut img = ptr::null_mut();
        assert_eq!(trof_image_new(w, h, data.as_ptr(), &mut img), TrofStatus::Ok);
        let mut cfg = ptr::null_mut();
        assert_eq!(trof_config_new(2, 8.0, &mut cfg), TrofStatus::Ok);
        let tau = [1.0 / 3.0, 2.0 / 3.0];
        assert_eq!(trof_config_set_tau(cfg, tau.as_ptr(), 2), TrofStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(trof_segment(img, cfg, &mut res), TrofStatus::Ok);
        // the empty middle phase is dropped
        assert_eq!(trof_result_phases(res), 2);
        let mut small = [0u32; 3];
        assert_eq!(trof_result_labels(res, small.as_mut_ptr(), 3), TrofStatus::BufferTooSmall);
        assert!(last_error().contains("64"));
        trof_result_free(res);
        trof_config_free(cfg);
        trof_image_free(img);
    }
}

#[test]
fn invalid_inputs_report_codes() {
    unsafe {
        let mut img = ptr::null_mut();
        assert_eq!(trof_image_new(2, 2, ptr::null(), &mut img), TrofStatus::NullPointer);
        assert!(img.is_null());
        let bad = [0.0, 2.0, 0.0, 0.0];
        assert_eq!(trof_image_new(2, 2, bad.as_ptr(), &mut img), TrofStatus::InvalidArgument);
        assert!(last_error().contains("outside"));

        let mut cfg = ptr::null_mut();
        assert_eq!(trof_config_new(1, 8.0, &mut cfg), TrofStatus::InvalidArgument);
        assert_eq!(trof_config_new(2, -1.0, &mut cfg), TrofStatus::InvalidArgument);
        assert_eq!(trof_config_new(2, 8.0, ptr::null_mut()), TrofStatus::NullPointer);
        assert_eq!(trof_config_new(2, 8.0, &mut cfg), TrofStatus::Ok);
        assert_eq!(trof_config_set_init(cfg, TrofInit::Explicit, false), TrofStatus::InvalidArgument);
        let unsorted = [0.6, 0.4];
        assert_eq!(trof_config_set_tau(cfg, unsorted.as_ptr(), 2), TrofStatus::InvalidArgument);
        assert_eq!(trof_config_set_tolerances(cfg, 0.0, 1e-5), TrofStatus::InvalidArgument);
        trof_config_free(cfg);

        let name = CString::new("example9").unwrap();
        let mut syn = ptr::null_mut();
        assert_eq!(trof_synth(name.as_ptr(), 16, 0, &mut syn), TrofStatus::UnknownPreset);
        let path = CString::new("/nonexistent/x.pgm").unwrap();
        assert_eq!(trof_image_read(path.as_ptr(), &mut img), TrofStatus::Io);

        trof_image_free(ptr::null_mut());
        trof_result_free(ptr::null_mut());
        assert_eq!(trof_result_phases(ptr::null()), 0);
    }
}

#[test]
fn synthetic_preset_and_rof() {
    unsafe {
        let name = CString::new("example7").unwrap();
        let mut syn = ptr::null_mut();
        assert_eq!(trof_synth(name.as_ptr(), 32, 1, &mut syn), TrofStatus::Ok);
        assert_eq!(trof_synthetic_phases(syn), 4);
        let mut img = ptr::null_mut();
        assert_eq!(trof_synthetic_image(syn, &mut img), TrofStatus::Ok);
        let mut truth = vec![0u32; 32 * 32];
        assert_eq!(trof_synthetic_truth(syn, 0, truth.as_mut_ptr(), truth.len()), TrofStatus::Ok);
        assert!(truth.iter().all(|&l| l < 4));

        let mut u = ptr::null_mut();
        let mut iters = 0usize;
        assert_eq!(trof_rof(img, 4.0, TrofTv::Isotropic, &mut u, &mut iters), TrofStatus::Ok);
        assert!(iters > 0);
        let mut ud = vec![0.0; 32 * 32];
        assert_eq!(trof_image_data(u, ud.as_mut_ptr(), ud.len()), TrofStatus::Ok);
        assert!(ud.iter().all(|v| (0.0..=1.0).contains(v)));

        let mut cfg = ptr::null_mut();
        assert_eq!(trof_config_for_preset(name.as_ptr(), &mut cfg), TrofStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(trof_segment(img, cfg, &mut res), TrofStatus::Ok);
        assert!(trof_result_phases(res) >= 2);

        trof_result_free(res);
        trof_config_free(cfg);
        trof_image_free(u);
        trof_image_free(img);
        trof_synthetic_free(syn);
    }
}

#[test]
fn version_matches_core() {
    let v = unsafe { CStr::from_ptr(trof_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
