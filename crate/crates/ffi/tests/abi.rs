use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use invscheme_ffi::*;

fn exact_params() -> InvSchemeParams {
    InvSchemeParams { c: 2.0, eps: 0.01, theta: inv_theta_exact(2.0, 0.01), k: 4.0 }
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(inv_cross_ratio_same(1.0, 0.5, 1.0 / 3.0, 0.25, &mut v), InvStatus::Ok);
        assert!((v - 4.0).abs() < 1e-12);
        assert_eq!(inv_winternitz_step(1.0, 0.5, 1.0 / 3.0, 4.0, &mut v), InvStatus::Ok);
        assert!((v - 0.25).abs() < 1e-12);
        assert_eq!(inv_schwarzian(2.0, 4.0, 12.0, &mut v), InvStatus::Ok);
        assert!(v.abs() < 1e-12);
        assert_eq!(inv_schwarzian(0.0, 1.0, 1.0, &mut v), InvStatus::Domain);
        assert_eq!(inv_cross_ratio_mixed(0.0, 1.0, 2.0, 3.0, ptr::null_mut()), InvStatus::NullPointer);
        let msg = CStr::from_ptr(inv_last_error_message()).to_str().unwrap();
        assert!(msg.contains("null"), "{msg}");
    }
    assert_eq!(inv_k_from_c(-2.0, 0.1), 4.0);
}

#[test]
fn trajectory_handles() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(inv_trajectory_ode2_exact(1.0, 2.0, 2.0, 0.01, 15.0, 0, 10, &mut h), InvStatus::Ok);
        assert_eq!(inv_trajectory_len(h), 11);
        let (mut n, mut x, mut u) = (0i64, 0.0, 0.0);
        assert_eq!(inv_trajectory_get(h, 10, &mut n, &mut x, &mut u), InvStatus::Ok);
        assert_eq!(n, 10);
        assert_eq!(inv_trajectory_get(h, 11, &mut n, &mut x, &mut u), InvStatus::Index);

        let p = exact_params();
        let (mut mean, mut drift) = (0.0, 0.0);
        assert_eq!(inv_integral_report(h, InvIntegral::J3, &p, &mut mean, &mut drift), InvStatus::Ok);
        assert!((mean - 0.01).abs() < 1e-12 && drift < 1e-12);

        // two seeds stepped forward reproduce the closed form
        let (mut x0, mut u0, mut x1, mut u1) = (0.0, 0.0, 0.0, 0.0);
        inv_trajectory_get(h, 0, &mut n, &mut x0, &mut u0);
        inv_trajectory_get(h, 1, &mut n, &mut x1, &mut u1);
        let mut seed = ptr::null_mut();
        assert_eq!(inv_trajectory_new(0, [x0, x1].as_ptr(), [u0, u1].as_ptr(), 2, &mut seed), InvStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(inv_ode2_solve(seed, 9, &p, &mut run), InvStatus::Ok);
        assert_eq!(inv_trajectory_len(run), 11);
        let (mut xr, mut ur) = (0.0, 0.0);
        inv_trajectory_get(run, 10, &mut n, &mut xr, &mut ur);
        inv_trajectory_get(h, 10, &mut n, &mut x, &mut u);
        assert!((xr - x).abs() < 1e-10 && (ur - u).abs() < 1e-10);

        let (mut xs, mut us) = (0.0, 0.0);
        assert_eq!(inv_ode2_step(x0, u0, x1, u1, &p, &mut xs, &mut us), InvStatus::Ok);
        inv_trajectory_get(h, 2, &mut n, &mut x, &mut u);
        assert!((xs - x).abs() < 1e-10);

        for t in [h, seed, run] {
            inv_trajectory_free(t);
        }
        inv_trajectory_free(ptr::null_mut());
        assert_eq!(inv_trajectory_len(ptr::null()), 0);
    }
}

#[test]
fn winternitz_handles_and_errors() {
    unsafe {
        let c = [1.0, 1.0, 0.0, 1.0, 2.0, 0.0];
        let mut h = ptr::null_mut();
        assert_eq!(inv_trajectory_winternitz_exact(c.as_ptr(), 0, 8, &mut h), InvStatus::Ok);
        assert_eq!(inv_trajectory_is_ty(h), 1);
        let mut r = 1.0;
        assert_eq!(inv_winternitz_max_residual(h, 4.0, &mut r), InvStatus::Ok);
        assert!(r < 1e-12);
        inv_trajectory_free(h);

        let bad = [0.0, 1.0, 0.0, 1.0, 2.0, 0.0];
        assert_eq!(inv_trajectory_winternitz_exact(bad.as_ptr(), 0, 8, &mut h), InvStatus::DegenerateStencil);
        assert_eq!(inv_trajectory_ode2_exact(1.0, 2.0, 3.0, 0.01, 15.0, 0, 8, &mut h), InvStatus::InvalidParameter);
        let x = [1.0, 1.0];
        assert_eq!(inv_trajectory_new(0, x.as_ptr(), x.as_ptr(), 2, &mut h), InvStatus::ZeroStep);
        assert_eq!(inv_trajectory_new(0, ptr::null(), x.as_ptr(), 2, &mut h), InvStatus::NullPointer);
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libinvscheme_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("roundtrip");
    let cc = Command::new("cc")
        .arg(manifest.join("tests/c/roundtrip.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output();
    let Ok(cc) = cc else {
        eprintln!("skipping: no C compiler");
        return;
    };
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
