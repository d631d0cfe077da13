use std::ffi::CStr;
use std::ptr;

use gridot_ffi::*;

fn grid_points(n: usize, offset: f64) -> Vec<f64> {
    (0..n * n)
        .flat_map(|k| {
            let (a, b) = (k / n, k % n);
            [
                offset + (a as f64 + 0.5) / n as f64,
                (b as f64 + 0.5) / n as f64,
            ]
        })
        .collect()
}

unsafe fn samples(coords: &[f64], dim: usize) -> *mut GridotSamples {
    let mut out = ptr::null_mut();
    let status = gridot_samples_new(coords.as_ptr(), coords.len() / dim, dim, &mut out);
    assert_eq!(status, GridotStatus::Ok);
    out
}

unsafe fn last_error() -> String {
    let p = gridot_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn solve_translate_and_push() {
    unsafe {
        let a = samples(&grid_points(30, 0.0), 2);
        let b = samples(&grid_points(30, 2.0), 2);
        assert_eq!(gridot_samples_len(a), 900);
        assert_eq!(gridot_samples_dim(a), 2);

        let mut sol = ptr::null_mut();
        assert_eq!(gridot_solve(a, b, ptr::null(), &mut sol), GridotStatus::Ok);
        assert!(gridot_solution_levels(sol) >= 2);
        let mut w = 0.0;
        assert_eq!(gridot_solution_wasserstein(sol, &mut w), GridotStatus::Ok);
        assert!((w - 2.0).abs() < 0.02, "{w}");
        let mut obj = 0.0;
        assert_eq!(
            gridot_solution_objective(sol, 0, &mut obj),
            GridotStatus::Ok
        );
        assert_eq!(
            gridot_solution_objective(sol, 99, &mut obj),
            GridotStatus::InvalidArgument
        );

        let x = [0.5 / 30.0, 0.5 / 30.0];
        let mut y = [0.0; 2];
        assert_eq!(
            gridot_solution_evaluate(sol, x.as_ptr(), 2, y.as_mut_ptr()),
            GridotStatus::Ok
        );
        assert!((y[0] - x[0] - 2.0).abs() < 0.1 && (y[1] - x[1]).abs() < 0.1);

        let far = [10.0, 10.0];
        let s = gridot_solution_evaluate(sol, far.as_ptr(), 2, y.as_mut_ptr());
        assert_eq!(s, GridotStatus::OutOfSupport);
        assert!(last_error().contains("outside"));

        let mut pushed = ptr::null_mut();
        assert_eq!(gridot_solution_push(sol, a, &mut pushed), GridotStatus::Ok);
        let mut buf = vec![0.0; 1800];
        assert_eq!(
            gridot_samples_copy(pushed, buf.as_mut_ptr(), buf.len()),
            GridotStatus::Ok
        );
        let mean_x: f64 = buf.iter().step_by(2).sum::<f64>() / 900.0;
        assert!((mean_x - 2.5).abs() < 0.01);
        assert_eq!(
            gridot_samples_copy(pushed, buf.as_mut_ptr(), 10),
            GridotStatus::InvalidArgument
        );

        gridot_samples_free(pushed);
        gridot_solution_free(sol);
        gridot_samples_free(a);
        gridot_samples_free(b);
    }
}

#[test]
fn errors_and_nulls() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            gridot_samples_new(ptr::null(), 3, 2, &mut out),
            GridotStatus::NullPointer
        );
        let empty: [f64; 0] = [];
        assert_eq!(
            gridot_samples_new(empty.as_ptr(), 0, 2, &mut out),
            GridotStatus::InvalidArgument
        );
        let nan = [f64::NAN, 1.0];
        assert_eq!(
            gridot_samples_new(nan.as_ptr(), 1, 2, &mut out),
            GridotStatus::InvalidArgument
        );

        let a = samples(&[0.0, 1.0, 2.0], 1);
        let b = samples(&[0.0, 1.0, 2.0, 3.0], 2);
        let mut sol = ptr::null_mut();
        assert_eq!(
            gridot_solve(a, b, ptr::null(), &mut sol),
            GridotStatus::DimensionMismatch
        );
        assert!(last_error().contains("dimension"));
        assert_eq!(
            gridot_solve(a, ptr::null(), ptr::null(), &mut sol),
            GridotStatus::NullPointer
        );

        let mut cfg = gridot_solve_config_default();
        cfg.policy = 7;
        assert_eq!(
            gridot_solve(a, a, &cfg, &mut sol),
            GridotStatus::InvalidArgument
        );
        cfg = gridot_solve_config_default();
        cfg.max_levels = 0;
        assert_eq!(
            gridot_solve(a, a, &cfg, &mut sol),
            GridotStatus::InvalidArgument
        );

        assert_eq!(gridot_samples_len(ptr::null()), 0);
        gridot_samples_free(ptr::null_mut());
        gridot_solution_free(ptr::null_mut());
        gridot_samples_free(a);
        gridot_samples_free(b);
    }
}

#[test]
fn barycenter_and_interpolation() {
    unsafe {
        let a = samples(&grid_points(20, 0.0), 2);
        let b = samples(&grid_points(20, 2.0), 2);
        let marginals = [a as *const GridotSamples, b as *const GridotSamples];
        let weights = [0.5, 0.5];
        let mut cfg = gridot_solve_config_default();
        cfg.policy = GridotPolicy::LongestAxis as u32;
        let mut out = ptr::null_mut();
        let s = gridot_barycenter(
            marginals.as_ptr(),
            weights.as_ptr(),
            2,
            &cfg,
            3,
            1e-3,
            &mut out,
        );
        assert_eq!(s, GridotStatus::Ok);
        let mut buf = vec![0.0; 800];
        assert_eq!(
            gridot_samples_copy(out, buf.as_mut_ptr(), buf.len()),
            GridotStatus::Ok
        );
        let mean_x: f64 = buf.iter().step_by(2).sum::<f64>() / 400.0;
        assert!((mean_x - 1.5).abs() < 0.05, "{mean_x}");
        gridot_samples_free(out);

        let bad = [0.5, 0.6];
        let s = gridot_barycenter(
            marginals.as_ptr(),
            bad.as_ptr(),
            2,
            ptr::null(),
            3,
            1e-3,
            &mut out,
        );
        assert_eq!(s, GridotStatus::InvalidArgument);

        let s = gridot_interpolate(a, b, 0.25, ptr::null(), 3, 1e-3, &mut out);
        assert_eq!(s, GridotStatus::Ok);
        assert_eq!(gridot_samples_len(out), 400);
        gridot_samples_free(out);
        let s = gridot_interpolate(a, b, 1.5, ptr::null(), 3, 1e-3, &mut out);
        assert_eq!(s, GridotStatus::InvalidArgument);

        gridot_samples_free(a);
        gridot_samples_free(b);
    }
}
