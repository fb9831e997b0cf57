//! C ABI for the covep library.
//!
//! All functions return a `CovepStatus` code (0 on success) and report details
//! through `covep_last_error_message`, which is thread-local. Group models are
//! opaque handles created with `covep_group_new*` and released with
//! `covep_group_free`. Group elements cross the boundary in their payload
//! representation: `k` reals for the abelian groups, 9 row-major matrix
//! entries for SO(3), 4 quaternion components (w, x, y, z) for SU(2).
//!
//! The generated header lives at `include/covep.h`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use covep::solvers::{classical_ep_step, RigidBodyState};
use covep::{Error, GroupModel};

/// Result codes mirroring the process exit codes of the covep binary.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CovepStatus {
    /// success
    CovepOk = 0,
    /// numeric failure (non-flat input, divergence, solver stall)
    CovepNumericError = 1,
    /// invalid input (config, CSV, unknown group, log outside its domain)
    CovepInputError = 2,
    /// a required pointer argument was null
    CovepNullPointer = 3,
    /// an internal invariant was violated
    CovepPanic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> CovepStatus {
    match err.exit_code() {
        1 => CovepStatus::CovepNumericError,
        _ => CovepStatus::CovepInputError,
    }
}

fn guard<F: FnOnce() -> CovepStatus>(f: F) -> CovepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&msg);
            CovepStatus::CovepPanic
        }
    }
}

/// Message for the most recent error on this thread. The pointer stays valid
/// until the next failing covep call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn covep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque handle to a structure group model (group + algebra metric).
pub struct CovepGroup {
    model: GroupModel,
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Create a group model by name: "abelian_r:k", "so3" or "su2", with the
/// identity algebra metric. On success writes the handle to `out`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn covep_group_new(
    name: *const c_char,
    out: *mut *mut CovepGroup,
) -> CovepStatus {
    covep_group_new_with_metric(name, std::ptr::null(), 0, out)
}

/// Create a group model with an explicit algebra metric `h`: a dense
/// row-major `m x m` matrix (symmetric positive definite). Pass a null
/// pointer and `m = 0` for the identity metric.
///
/// # Safety
/// `name` must be a NUL-terminated string, `h` null or a valid array of
/// `m * m` doubles, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn covep_group_new_with_metric(
    name: *const c_char,
    h: *const f64,
    m: usize,
    out: *mut *mut CovepGroup,
) -> CovepStatus {
    if out.is_null() {
        set_error("out is null");
        return CovepStatus::CovepNullPointer;
    }
    let Some(name) = cstr(name) else {
        set_error("name is null or not valid UTF-8");
        return CovepStatus::CovepNullPointer;
    };
    let metric = if h.is_null() {
        None
    } else {
        let data = std::slice::from_raw_parts(h, m * m);
        Some(nalgebra::DMatrix::from_fn(m, m, |i, j| data[i * m + j]))
    };
    guard(|| match GroupModel::from_config_name(name, metric) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(CovepGroup { model }));
            CovepStatus::CovepOk
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    })
}

/// Release a group handle. Null is a no-op.
///
/// # Safety
/// `group` must come from `covep_group_new*` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn covep_group_free(group: *mut CovepGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

/// Dimension of the Lie algebra (k, 3, 3).
///
/// # Safety
/// `group` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn covep_group_algebra_dim(group: *const CovepGroup) -> usize {
    if group.is_null() {
        return 0;
    }
    (*group).model.m
}

/// Number of doubles in one group-element payload (k, 9, 4).
///
/// # Safety
/// `group` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn covep_group_payload_len(group: *const CovepGroup) -> usize {
    if group.is_null() {
        return 0;
    }
    (*group).model.payload_len()
}

macro_rules! need {
    ($ptr:expr, $name:literal) => {
        if $ptr.is_null() {
            set_error(concat!($name, " is null"));
            return CovepStatus::CovepNullPointer;
        }
    };
}

/// Identity element, written to `out` (payload_len doubles).
///
/// # Safety
/// Pointers must be valid with the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn covep_group_identity(
    group: *const CovepGroup,
    out: *mut f64,
) -> CovepStatus {
    need!(group, "group");
    need!(out, "out");
    let model = &(*group).model;
    let payload = model.payload(&model.identity());
    std::slice::from_raw_parts_mut(out, payload.len()).copy_from_slice(&payload);
    CovepStatus::CovepOk
}

/// Group exponential of the algebra vector `xi` (algebra_dim doubles),
/// written to `out` (payload_len doubles).
///
/// # Safety
/// Pointers must be valid with the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn covep_group_exp(
    group: *const CovepGroup,
    xi: *const f64,
    out: *mut f64,
) -> CovepStatus {
    need!(group, "group");
    need!(xi, "xi");
    need!(out, "out");
    let model = &(*group).model;
    let xi = std::slice::from_raw_parts(xi, model.m);
    guard(|| {
        let payload = model.payload(&model.exp(xi));
        std::slice::from_raw_parts_mut(out, payload.len()).copy_from_slice(&payload);
        CovepStatus::CovepOk
    })
}

fn element_from(
    model: &GroupModel,
    payload: &[f64],
) -> Result<covep::GroupElement, CovepStatus> {
    model.element_from_payload(payload).map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

/// Principal logarithm of a group element, written to `out`
/// (algebra_dim doubles). Fails with a numeric error outside the log domain.
///
/// # Safety
/// Pointers must be valid with the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn covep_group_log(
    group: *const CovepGroup,
    g: *const f64,
    out: *mut f64,
) -> CovepStatus {
    need!(group, "group");
    need!(g, "g");
    need!(out, "out");
    let model = &(*group).model;
    let g = std::slice::from_raw_parts(g, model.payload_len());
    guard(|| {
        let elem = match element_from(model, g) {
            Ok(e) => e,
            Err(status) => return status,
        };
        match model.log(&elem) {
            Ok(xi) => {
                std::slice::from_raw_parts_mut(out, xi.len()).copy_from_slice(&xi);
                CovepStatus::CovepOk
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Group product `a * b`, written to `out` (payload_len doubles).
///
/// # Safety
/// Pointers must be valid with the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn covep_group_mul(
    group: *const CovepGroup,
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> CovepStatus {
    need!(group, "group");
    need!(a, "a");
    need!(b, "b");
    need!(out, "out");
    let model = &(*group).model;
    let plen = model.payload_len();
    let a = std::slice::from_raw_parts(a, plen);
    let b = std::slice::from_raw_parts(b, plen);
    guard(|| {
        let (ea, eb) = match (element_from(model, a), element_from(model, b)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let payload = model.payload(&model.mul(&ea, &eb));
        std::slice::from_raw_parts_mut(out, plen).copy_from_slice(&payload);
        CovepStatus::CovepOk
    })
}

/// Group inverse, written to `out` (payload_len doubles).
///
/// # Safety
/// Pointers must be valid with the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn covep_group_inv(
    group: *const CovepGroup,
    g: *const f64,
    out: *mut f64,
) -> CovepStatus {
    need!(group, "group");
    need!(g, "g");
    need!(out, "out");
    let model = &(*group).model;
    let plen = model.payload_len();
    let g = std::slice::from_raw_parts(g, plen);
    guard(|| {
        let elem = match element_from(model, g) {
            Ok(e) => e,
            Err(status) => return status,
        };
        let payload = model.payload(&model.inv(&elem));
        std::slice::from_raw_parts_mut(out, plen).copy_from_slice(&payload);
        CovepStatus::CovepOk
    })
}

/// One classical Euler-Poincare RK4 step: advances the momentum `mu`
/// (algebra_dim doubles, updated in place) by `dt` under the group's algebra
/// metric as inertia tensor.
///
/// # Safety
/// Pointers must be valid with the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn covep_rigid_body_step(
    group: *const CovepGroup,
    mu: *mut f64,
    dt: f64,
) -> CovepStatus {
    need!(group, "group");
    need!(mu, "mu");
    let model = &(*group).model;
    let slice = std::slice::from_raw_parts_mut(mu, model.m);
    guard(|| {
        let state = RigidBodyState::new(slice.to_vec());
        let next = classical_ep_step(model, &state, dt);
        slice.copy_from_slice(&next.mu);
        CovepStatus::CovepOk
    })
}

/// Run one covep command against a JSON config, exactly like the binary:
/// `command` is "reduce", "verify", "rigid-body" or "harmonic"; artifacts are
/// written under `out_dir`. On success, `exit_code` receives the process
/// exit code the binary would have returned (verify may report failed checks
/// through a nonzero exit code while this function still returns CovepOk).
///
/// # Safety
/// All strings must be NUL-terminated; `exit_code` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn covep_run(
    command: *const c_char,
    config_path: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut c_int,
) -> CovepStatus {
    need!(exit_code, "exit_code");
    let (Some(command), Some(config), Some(out)) =
        (cstr(command), cstr(config_path), cstr(out_dir))
    else {
        set_error("command, config_path and out_dir must be valid strings");
        return CovepStatus::CovepNullPointer;
    };
    guard(|| {
        use clap::Parser;
        let cli = match covep::cli::Cli::try_parse_from([
            "covep", command, "--config", config, "--out", out,
        ]) {
            Ok(cli) => cli,
            Err(e) => {
                set_error(&e.to_string());
                return CovepStatus::CovepInputError;
            }
        };
        match covep::cli::run(cli) {
            Ok(code) => {
                *exit_code = code as c_int;
                CovepStatus::CovepOk
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    unsafe fn su2() -> *mut CovepGroup {
        let name = CString::new("su2").unwrap();
        let mut handle = ptr::null_mut();
        assert_eq!(covep_group_new(name.as_ptr(), &mut handle), CovepStatus::CovepOk);
        handle
    }

    #[test]
    fn exp_log_roundtrip_through_the_abi() {
        unsafe {
            let g = su2();
            assert_eq!(covep_group_algebra_dim(g), 3);
            assert_eq!(covep_group_payload_len(g), 4);
            let xi = [0.3, -0.2, 0.5];
            let mut q = [0.0; 4];
            assert_eq!(covep_group_exp(g, xi.as_ptr(), q.as_mut_ptr()), CovepStatus::CovepOk);
            let mut back = [0.0; 3];
            assert_eq!(covep_group_log(g, q.as_ptr(), back.as_mut_ptr()), CovepStatus::CovepOk);
            for (a, b) in xi.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
            covep_group_free(g);
        }
    }

    #[test]
    fn mul_inv_gives_identity() {
        unsafe {
            let g = su2();
            let mut q = [0.0; 4];
            covep_group_exp(g, [0.7, 0.1, -0.4].as_ptr(), q.as_mut_ptr());
            let mut qi = [0.0; 4];
            assert_eq!(covep_group_inv(g, q.as_ptr(), qi.as_mut_ptr()), CovepStatus::CovepOk);
            let mut e = [0.0; 4];
            assert_eq!(
                covep_group_mul(g, q.as_ptr(), qi.as_ptr(), e.as_mut_ptr()),
                CovepStatus::CovepOk
            );
            let mut id = [0.0; 4];
            covep_group_identity(g, id.as_mut_ptr());
            for (a, b) in e.iter().zip(&id) {
                assert!((a - b).abs() < 1e-12);
            }
            covep_group_free(g);
        }
    }

    #[test]
    fn bad_group_name_sets_input_error_and_message() {
        unsafe {
            let name = CString::new("e8").unwrap();
            let mut handle = ptr::null_mut();
            let status = covep_group_new(name.as_ptr(), &mut handle);
            assert_eq!(status, CovepStatus::CovepInputError);
            let msg = CStr::from_ptr(covep_last_error_message()).to_str().unwrap();
            assert!(msg.contains("e8"), "{msg}");
        }
    }

    #[test]
    fn null_pointer_is_reported_not_crashed() {
        unsafe {
            let status = covep_group_exp(ptr::null(), ptr::null(), ptr::null_mut());
            assert_eq!(status, CovepStatus::CovepNullPointer);
        }
    }

    #[test]
    fn log_of_minus_identity_is_rejected() {
        unsafe {
            let g = su2();
            let q = [-1.0, 0.0, 0.0, 0.0];
            let mut xi = [0.0; 3];
            let status = covep_group_log(g, q.as_ptr(), xi.as_mut_ptr());
            // outside the injectivity radius: classified with the other
            // invalid-input conditions, matching the binary's exit code 2
            assert_eq!(status, CovepStatus::CovepInputError);
            covep_group_free(g);
        }
    }

    #[test]
    fn rigid_body_step_conserves_casimir() {
        unsafe {
            let name = CString::new("so3").unwrap();
            let h = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0];
            let mut g = ptr::null_mut();
            assert_eq!(
                covep_group_new_with_metric(name.as_ptr(), h.as_ptr(), 3, &mut g),
                CovepStatus::CovepOk
            );
            let mut mu = [1.0, 1.0, 1.0];
            for _ in 0..1000 {
                assert_eq!(covep_rigid_body_step(g, mu.as_mut_ptr(), 1e-3), CovepStatus::CovepOk);
            }
            let c: f64 = mu.iter().map(|v| v * v).sum();
            assert!((c - 3.0).abs() < 1e-10, "casimir drifted to {c}");
            covep_group_free(g);
        }
    }

    #[test]
    fn covep_run_drives_the_verify_command() {
        unsafe {
            let dir = tempfile::tempdir().unwrap();
            let config = dir.path().join("cfg.json");
            std::fs::write(
                &config,
                r#"{
  "seed": 5,
  "group": { "name": "su2" },
  "grid": { "dims": 2, "shape": [12, 12], "extent": [1.0, 1.0], "boundary": "periodic" },
  "verify": { "trials": 2, "ladder": [8, 16] }
}
"#,
            )
            .unwrap();
            let cmd = CString::new("verify").unwrap();
            let cfg = CString::new(config.to_str().unwrap()).unwrap();
            let out = CString::new(dir.path().to_str().unwrap()).unwrap();
            let mut code = -1;
            let status = covep_run(cmd.as_ptr(), cfg.as_ptr(), out.as_ptr(), &mut code);
            assert_eq!(status, CovepStatus::CovepOk);
            assert_eq!(code, 0);
            assert!(dir.path().join("summary.json").exists());
        }
    }

    #[test]
    fn covep_run_reports_config_errors() {
        unsafe {
            let cmd = CString::new("verify").unwrap();
            let cfg = CString::new("/nonexistent/cfg.json").unwrap();
            let out = CString::new("/tmp").unwrap();
            let mut code = -1;
            let status = covep_run(cmd.as_ptr(), cfg.as_ptr(), out.as_ptr(), &mut code);
            assert_eq!(status, CovepStatus::CovepInputError);
            let msg = CStr::from_ptr(covep_last_error_message()).to_str().unwrap();
            assert!(msg.contains("cfg.json"), "{msg}");
        }
    }
}
