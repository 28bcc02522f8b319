use std::ffi::{CStr, CString};
use std::ptr;

use fracgame_ffi::*;

const SCENARIO: &str = r#"{
    "game": {"N": 1, "r": 0.0, "C": 1.0, "T": 1.0, "H": 0.75, "x": 1.0, "gamma_prime": 0.5},
    "players": [{"alpha": {"constant": 1.0}, "beta": {"constant": 1.0}, "c": 1.0, "b": 1.0, "gamma": 0.5, "running": false}],
    "numerics": {"grid": 16, "paths": 2000, "seed": 5, "endpoint_paths": 20, "argmax_pairs": 10}
}"#;

fn last_error() -> String {
    let p = fg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solves_reference_game() {
    let json = CString::new(SCENARIO).unwrap();
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(fg_solve_scenario_json(json.as_ptr(), &mut sol), FgStatus::Ok);
        let mut m = 0.0;
        assert_eq!(fg_solution_m_star(sol, &mut m), FgStatus::Ok);
        assert!((m - 1.6628).abs() < 1e-4);
        let mut b = 0.0;
        assert_eq!(fg_solution_budget(sol, m, &mut b), FgStatus::Ok);
        assert!((b - 1.0).abs() < 1e-10);
        assert_eq!(fg_solution_budget(sol, -1.0, &mut b), FgStatus::InputError);
        let mut s = ptr::null_mut();
        assert_eq!(fg_solution_summary_json(sol, &mut s), FgStatus::Ok);
        assert!(CStr::from_ptr(s).to_str().unwrap().contains("\"m_star\""));
        fg_string_free(s);
        fg_solution_free(sol);
    }
}

#[test]
fn invalid_scenario_reports_the_key() {
    let json = CString::new(SCENARIO.replace("0.75", "0.4")).unwrap();
    let mut sol = ptr::null_mut();
    let status = unsafe { fg_solve_scenario_json(json.as_ptr(), &mut sol) };
    assert_eq!(status, FgStatus::InputError);
    assert!(sol.is_null());
    let msg = last_error();
    assert!(msg.contains("game.H") && msg.contains("class=input"), "{msg}");
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(
            fg_solve_scenario_json(ptr::null(), &mut ptr::null_mut()),
            FgStatus::NullPointer
        );
        assert_eq!(fg_solution_m_star(ptr::null(), &mut 0.0), FgStatus::NullPointer);
        assert_eq!(fg_autocov(0.5, 1.0, 0.75, ptr::null_mut()), FgStatus::NullPointer);
        fg_solution_free(ptr::null_mut());
        fg_sampler_free(ptr::null_mut());
        fg_string_free(ptr::null_mut());
    }
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(fg_autocov(1.0, 1.0, 0.75, &mut v), FgStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(fg_autocov(1.0, 1.0, 0.5, &mut v), FgStatus::InputError);
        assert_eq!(fg_phi(0.0, 1.0, 0.75, &mut v), FgStatus::Ok);
        assert!((v - 0.375).abs() < 1e-15);
        assert_eq!(fg_kernel_k(0.0, 1.0, 0.75, 0.5, &mut v), FgStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(fg_kernel_k(1.0, 1.0, 0.75, 0.0, &mut v), FgStatus::InputError);
    }
}

#[test]
fn sampler_is_deterministic() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(
            fg_sampler_new(1.0, 8, 0.7, FgMethod::Circulant, 3, &mut s),
            FgStatus::Ok
        );
        let (mut a, mut b) = ([0.0; 9], [0.0; 9]);
        assert_eq!(fg_sampler_path(s, 4, a.as_mut_ptr(), 9), FgStatus::Ok);
        assert_eq!(fg_sampler_path(s, 4, b.as_mut_ptr(), 9), FgStatus::Ok);
        assert_eq!(a, b);
        assert_eq!(a[0], 0.0);
        assert_eq!(fg_sampler_path(s, 4, a.as_mut_ptr(), 8), FgStatus::InputError);
        fg_sampler_free(s);
    }
}

#[test]
fn verify_returns_jsonl() {
    let json = CString::new(SCENARIO).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(fg_verify_scenario_json(json.as_ptr(), &mut out), FgStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        fg_string_free(out);
        assert!(text.lines().count() > 20);
        assert!(text.lines().all(|l| l.contains("\"pass\":true")));
    }
}
