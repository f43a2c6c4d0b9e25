use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use opfdp_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(opfdp_last_error()) }.to_string_lossy().into_owned()
}

fn fixture(name: &str, n: usize) -> *mut OpfdpCase {
    let name = CString::new(name).unwrap();
    let mut case = ptr::null_mut();
    let status = unsafe { opfdp_case_fixture(name.as_ptr(), n, &mut case) };
    assert_eq!(status, OpfdpStatus::Ok, "{}", last_error());
    case
}

#[test]
fn solve_matches_the_library() {
    let case = fixture("case9", 0);
    let (mut nb, mut ng, mut nl, mut nr) = (0, 0, 0, 0);
    unsafe {
        assert_eq!(opfdp_case_dims(case, &mut nb, &mut ng, &mut nl, &mut nr), OpfdpStatus::Ok);
    }
    assert_eq!((nb, ng, nl, nr), (9, 3, 6, 2));

    let lib = opfdp::cli::fixtures::case9().load().unwrap();
    let expect = opfdp::opf::opf_operator(&lib.instance, &lib.load).unwrap();
    let mut gen = [0.0; 3];
    let mut len = 0;
    unsafe {
        assert_eq!(opfdp_case_solve(case, ptr::null(), 0, gen.as_mut_ptr(), 3, &mut len), OpfdpStatus::Ok);
    }
    assert_eq!(len, 3);
    assert_eq!(gen.to_vec(), expect);

    let mut small = [0.0; 2];
    let status = unsafe { opfdp_case_solve(case, ptr::null(), 0, small.as_mut_ptr(), 2, &mut len) };
    assert_eq!(status, OpfdpStatus::BufferTooSmall);
    assert_eq!(len, 3);
    assert!(last_error().contains("3 needed"));

    let heavy = [500.0; 6];
    let status = unsafe { opfdp_case_solve(case, heavy.as_ptr(), 6, gen.as_mut_ptr(), 3, &mut len) };
    assert_eq!(status, OpfdpStatus::Infeasible);
    let short = [50.0; 2];
    let status = unsafe { opfdp_case_solve(case, short.as_ptr(), 2, gen.as_mut_ptr(), 3, &mut len) };
    assert_eq!(status, OpfdpStatus::InvalidInput);
    unsafe { opfdp_case_free(case) };
}

#[test]
fn monotonicity_and_scales() {
    let case = fixture("ring", 10);
    let (mut eps, mut ratio) = (0.0, 0.0);
    unsafe {
        assert_eq!(opfdp_case_monotonicity(case, 20.0, &mut eps, &mut ratio), OpfdpStatus::Ok);
        opfdp_case_free(case);
    }
    assert!((ratio - 6.0).abs() < 1e-4, "{ratio}");
    assert!((eps - 120.0).abs() < 1e-3);

    let mut b = 0.0;
    unsafe {
        assert_eq!(opfdp_aggregation_scale(20.0, 40.2, 0.5, &mut b), OpfdpStatus::Ok);
        assert_eq!(b, 2.0 * 60.2 / 0.5);
        assert_eq!(opfdp_general_scale(1.5, 2, 20.0, 0.0, 0.5, &mut b), OpfdpStatus::Ok);
        assert_eq!(b, 240.0);
        assert_eq!(opfdp_aggregation_scale(20.0, 0.0, 0.0, &mut b), OpfdpStatus::InvalidInput);
        assert_eq!(opfdp_aggregation_scale(20.0, 0.0, 0.5, ptr::null_mut()), OpfdpStatus::NullPointer);
    }
}

#[test]
fn release_is_seeded() {
    let case = fixture("radial", 0);
    let run = |seed: u64| {
        let mut out = [0.0; 4];
        let (mut len, mut scale) = (0, 0.0);
        let status = unsafe {
            opfdp_case_release(case, 20.0, 0.5, -1.0, seed, out.as_mut_ptr(), 4, &mut len, &mut scale)
        };
        assert_eq!(status, OpfdpStatus::Ok, "{}", last_error());
        assert_eq!((len, scale), (4, 80.0));
        out
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
    unsafe { opfdp_case_free(case) };
}

#[test]
fn json_and_file_constructors() {
    let text = opfdp::cli::fixtures::radial().to_json_string();
    let json = CString::new(text.clone()).unwrap();
    let mut case = ptr::null_mut();
    unsafe {
        assert_eq!(opfdp_case_from_json(json.as_ptr(), &mut case), OpfdpStatus::Ok);
        opfdp_case_free(case);
    }
    let dir = std::env::temp_dir().join(format!("opfdp-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("radial.json");
    std::fs::write(&path, text).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let missing = CString::new(dir.join("none.json").to_str().unwrap()).unwrap();
    let broken = CString::new("{\"schema_version\": 1").unwrap();
    unsafe {
        assert_eq!(opfdp_case_from_file(cpath.as_ptr(), &mut case), OpfdpStatus::Ok);
        opfdp_case_free(case);
        assert_eq!(opfdp_case_from_file(missing.as_ptr(), &mut case), OpfdpStatus::Io);
        assert_eq!(opfdp_case_from_json(broken.as_ptr(), &mut case), OpfdpStatus::InvalidInput);
        assert_eq!(opfdp_case_from_json(ptr::null(), &mut case), OpfdpStatus::NullPointer);
        assert_eq!(opfdp_case_dims(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()),
            OpfdpStatus::NullPointer);
        opfdp_case_free(ptr::null_mut());
    }
    std::fs::remove_dir_all(dir).unwrap();
}

fn shared_library(target: &Path) -> Option<PathBuf> {
    ["debug", "release"]
        .iter()
        .flat_map(|p| [target.join(p).join("libopfdp_ffi.so"), target.join(p).join("deps/libopfdp_ffi.so")])
        .find(|p| p.exists())
}

#[test]
fn c_program_links_against_the_header() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let tmp = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let Some(lib) = shared_library(tmp.parent().unwrap()) else {
        eprintln!("skipping: shared library not built in this configuration");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let exe = tmp.join("opfdp_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe)
        .env("LD_LIBRARY_PATH", lib.parent().unwrap())
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let line = String::from_utf8(run.stdout).unwrap();
    let gens: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
    let lib_case = opfdp::cli::fixtures::radial().load().unwrap();
    let expect = opfdp::opf::opf_operator(&lib_case.instance, &lib_case.load).unwrap();
    for (a, b) in gens.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-5);
    }
}
