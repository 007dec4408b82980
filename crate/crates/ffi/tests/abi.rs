use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use os2e::nn::{Checkpoint, NetworkConfig};
use os2e_ffi::*;

fn last_error() -> String {
    let p = os2e_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn entropy_of_uniform_row_is_log2_events() {
    let row = [0.25; 4];
    let mut bits = 0.0;
    let st = unsafe { os2e_conditional_entropy(row.as_ptr(), 4, &mut bits) };
    assert_eq!(st, Os2eStatus::Ok);
    assert!((bits - 2.0).abs() < 1e-12);
}

#[test]
fn entropy_rejects_off_simplex_row() {
    let row = [0.5, 0.6];
    let mut bits = 0.0;
    let st = unsafe { os2e_conditional_entropy(row.as_ptr(), 2, &mut bits) };
    assert_eq!(st, Os2eStatus::InvalidArgument);
    assert!(last_error().contains("sums to"));
}

#[test]
fn null_output_is_reported() {
    let row = [1.0];
    let st = unsafe { os2e_conditional_entropy(row.as_ptr(), 1, ptr::null_mut()) };
    assert_eq!(st, Os2eStatus::NullPointer);
    assert!(last_error().contains("out_bits"));
}

#[test]
fn select_matches_core() {
    let cond = [0.5, 0.0, 0.0, 0.5, 0.5, 0.5];
    let counts = [1usize, 1];
    let mut picked = [usize::MAX; 2];
    let mut energy = f64::NAN;
    let st = unsafe {
        os2e_select_classes(cond.as_ptr(), 3, 2, counts.as_ptr(), 0.5, 2, picked.as_mut_ptr(), &mut energy)
    };
    assert_eq!(st, Os2eStatus::Ok);
    assert_eq!(picked, [0, 1]);
    assert_eq!(energy, 0.0);

    let mut too_many = [0usize; 4];
    let st = unsafe {
        os2e_select_classes(cond.as_ptr(), 3, 2, counts.as_ptr(), 0.5, 4, too_many.as_mut_ptr(), &mut energy)
    };
    assert_eq!(st, Os2eStatus::InvalidArgument);
}

#[test]
fn default_crop_config_has_54_regions() {
    let mut c = std::mem::MaybeUninit::<Os2eCropConfig>::uninit();
    assert_eq!(unsafe { os2e_crop_config_default(c.as_mut_ptr()) }, Os2eStatus::Ok);
    let c = unsafe { c.assume_init() };
    let mut n = 0;
    assert_eq!(unsafe { os2e_region_count(&c, &mut n) }, Os2eStatus::Ok);
    assert_eq!(n, 54);

    let bad = Os2eCropConfig { n_scale_factors: OS2E_MAX_SCALES + 1, ..c };
    assert_eq!(unsafe { os2e_region_count(&bad, &mut n) }, Os2eStatus::InvalidArgument);
}

#[test]
fn model_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let ckpt = Checkpoint::init(NetworkConfig::new(16, vec![4], vec![3]), 5).unwrap();
    os2e::io::write_json(&path, &ckpt).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let mut model = ptr::null_mut();
    assert_eq!(unsafe { os2e_model_load(cpath.as_ptr(), &mut model) }, Os2eStatus::Ok);
    let (mut d, mut m) = (0, 0);
    assert_eq!(unsafe { os2e_model_dims(model, &mut d, &mut m) }, Os2eStatus::Ok);
    assert_eq!((d, m), (16, 3));

    let x: Vec<f64> = (0..32).map(|i| i as f64 / 32.0).collect();
    let mut probs = [0.0; 6];
    assert_eq!(unsafe { os2e_model_predict(model, x.as_ptr(), 2, 16, probs.as_mut_ptr()) }, Os2eStatus::Ok);
    for row in probs.chunks(3) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert_eq!(
        unsafe { os2e_model_predict(model, x.as_ptr(), 4, 8, probs.as_mut_ptr()) },
        Os2eStatus::DimensionMismatch
    );

    // 4x4 crops of a 6x6 image at scale 1 only: 2 modes x 2x2 cells
    let config = Os2eCropConfig {
        base_side: 5,
        crop_side: 4,
        grid: 2,
        n_scale_factors: 1,
        scale_factors: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        aspect_preserving: true,
        square: true,
    };
    let pixels: Vec<f64> = (0..36).map(|i| (i % 5) as f64 / 5.0).collect();
    let mut scores = [0.0; 3];
    let st = unsafe {
        os2e_infer_image(model, model, pixels.as_ptr(), 6, 6, 1, &config, 0.5, 0.5, 0.5, scores.as_mut_ptr())
    };
    assert_eq!(st, Os2eStatus::Ok, "{}", last_error());
    assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    unsafe { os2e_model_free(model) };
    unsafe { os2e_model_free(ptr::null_mut()) };
}

#[test]
fn missing_model_file_is_io_error() {
    let path = CString::new("/nonexistent/model.json").unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { os2e_model_load(path.as_ptr(), &mut model) }, Os2eStatus::Io);
    assert!(model.is_null());
    assert!(last_error().contains("/nonexistent/model.json"));
}

#[test]
fn evaluate_perfect_scores() {
    let scores = [0.9, 0.1, 0.2, 0.8, 0.7, 0.3];
    let labels = [0usize, 1, 0];
    let (mut acc, mut map) = (0.0, 0.0);
    let st = unsafe { os2e_evaluate(scores.as_ptr(), 3, 2, labels.as_ptr(), &mut acc, &mut map) };
    assert_eq!(st, Os2eStatus::Ok);
    assert_eq!(acc, 1.0);
    assert_eq!(map, 1.0);
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/os2e.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["os2e_select_classes", "os2e_model_free", "os2e_infer_image", "OS2E_STATUS_OK"] {
        assert!(text.contains(name), "{name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"os2e.h\"\nint main(void) { Os2eCropConfig c; return os2e_crop_config_default(&c); }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
}
