use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use stable_sde_ffi::*;

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { ssde_string_free(p) };
    s
}

fn last_error() -> String {
    let p = ssde_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn parse(src: &str) -> *mut SsdeFunction {
    let src = CString::new(src).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { ssde_function_parse(src.as_ptr(), &mut f) }, SsdeStatus::Ok);
    f
}

#[test]
fn function_handles() {
    let f = parse("power:|x|^1.5");
    let mut v = 0.0;
    assert_eq!(unsafe { ssde_function_eval(f, 4.0, &mut v) }, SsdeStatus::Ok);
    assert_eq!(v, 8.0);
    unsafe { ssde_function_free(f) };
    unsafe { ssde_function_free(ptr::null_mut()) };

    let bad = CString::new("power:nonsense").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { ssde_function_parse(bad.as_ptr(), &mut f) },
        SsdeStatus::Validation
    );
    assert!(f.is_null());
    assert!(last_error().starts_with("malformed_function"));
    assert_eq!(
        unsafe { ssde_function_parse(ptr::null(), &mut f) },
        SsdeStatus::InvalidArgument
    );
}

#[test]
fn path_handles_and_integral() {
    let mut path = ptr::null_mut();
    assert_eq!(
        unsafe { ssde_path_sample(0.5, 0.0, 1.0, 0.1, 42, 0, &mut path) },
        SsdeStatus::Ok
    );
    let n = unsafe { ssde_path_len(path) };
    assert_eq!(n, 11);
    let mut times = vec![0.0; n];
    let mut values = vec![0.0; n];
    assert_eq!(
        unsafe { ssde_path_copy(path, times.as_mut_ptr(), values.as_mut_ptr(), n) },
        n
    );
    assert_eq!(times[0], 0.0);
    assert_eq!(values[0], 0.0);
    assert!((times[10] - 1.0).abs() < 1e-12);

    let one = parse("const:1");
    let mut v = 0.0;
    assert_eq!(unsafe { ssde_path_integral(path, one, 0.7, &mut v) }, SsdeStatus::Ok);
    assert!((v - 0.7).abs() < 1e-12);
    assert_eq!(
        unsafe { ssde_path_integral(path, one, 2.0, &mut v) },
        SsdeStatus::Validation
    );
    assert_eq!(
        unsafe { ssde_path_integral(ptr::null(), one, 0.5, &mut v) },
        SsdeStatus::InvalidArgument
    );
    unsafe {
        ssde_function_free(one);
        ssde_path_free(path);
    }
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { ssde_path_sample(3.0, 0.0, 1.0, 0.1, 0, 0, &mut bad) },
        SsdeStatus::Validation
    );
}

#[test]
fn json_entry_points() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ssde_power_law_test_json(0.5, 0.5, &mut out) }, SsdeStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(v["finiteness"], "finite");
    assert_eq!(v["value"], 8.0);

    let sigma = parse("power:|x|^1.5");
    assert_eq!(unsafe { ssde_classify_json(0.5, sigma, &mut out) }, SsdeStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(v["unique_all"], true);
    assert_eq!(
        unsafe { ssde_classify_json(1.5, sigma, &mut out) },
        SsdeStatus::Validation
    );

    let mut csv = ptr::null_mut();
    assert_eq!(
        unsafe { ssde_solve_csv(0.5, sigma, 0.0, 1.0, 0.1, 1, &mut csv) },
        SsdeStatus::Ok
    );
    assert_eq!(take_string(csv), "s,phi,z_value\n0,0,0\n# status=frozen\n");
    unsafe { ssde_function_free(sigma) };

    let one = parse("const:1");
    let domain = CString::new("[-1,1)").unwrap();
    assert_eq!(
        unsafe { ssde_kernel_integral_json(0.5, 0.0, one, domain.as_ptr(), 1e-10, &mut out) },
        SsdeStatus::Ok
    );
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(
        unsafe { ssde_kernel_integral_json(0.5, 0.0, one, ptr::null(), 1e-10, &mut out) },
        SsdeStatus::Ok
    );
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(v["finiteness"], "infinite");
    unsafe { ssde_function_free(one) };

    assert_eq!(unsafe { ssde_wiener_example_json(0.5, 200, &mut out) }, SsdeStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(v["verdict"], "convergent");

    let mut c = 0.0;
    assert_eq!(unsafe { ssde_unit_ball_capacity(0.5, &mut c) }, SsdeStatus::Ok);
    assert!((c - 0.539_352_601_188_379).abs() < 1e-12);
}

#[test]
fn experiment_is_thread_count_invariant() {
    let cfg = CString::new(
        r#"{"alpha":0.5,"sigma":"power:|x|^0.5","z":[0,1],"replicates":40,"horizon":1,"step":0.05,
            "estimator":"freeze_prob","seed":9}"#,
    )
    .unwrap();
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    assert_eq!(
        unsafe { ssde_run_experiment_csv(cfg.as_ptr(), 1, &mut a) },
        SsdeStatus::Ok
    );
    assert_eq!(
        unsafe { ssde_run_experiment_csv(cfg.as_ptr(), 3, &mut b) },
        SsdeStatus::Ok
    );
    let (a, b) = (take_string(a), take_string(b));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
    let bad = CString::new("{}").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { ssde_run_experiment_csv(bad.as_ptr(), 1, &mut c) },
        SsdeStatus::Validation
    );
    assert!(c.is_null());
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/stable_sde.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "ssde_last_error",
        "ssde_string_free",
        "ssde_function_parse",
        "ssde_path_sample",
        "ssde_classify_json",
        "ssde_run_experiment_csv",
        "typedef struct SsdePath SsdePath",
        "SSDE_STATUS_VALIDATION = 2",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = std::env::temp_dir().join(format!("ssde-header-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("check.c");
    std::fs::write(
        &src,
        "#include \"stable_sde.h\"\nint main(void) { SsdeFunction *f = 0; return ssde_function_parse(\"const:1\", &f) == SSDE_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler available; skipped compiling the header"),
    }
}
