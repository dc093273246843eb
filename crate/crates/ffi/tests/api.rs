use std::ffi::{CStr, CString};
use std::ptr;

use fockflow_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { ff_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn amplitudes(s: *const FfState) -> (Vec<f64>, Vec<f64>) {
    let n = unsafe { ff_state_len(s) };
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(
        unsafe { ff_state_amplitudes(s, re.as_mut_ptr(), im.as_mut_ptr(), n) },
        FfStatus::Ok
    );
    (re, im)
}

fn vacuum(modes: usize, cutoff: usize) -> *mut FfState {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ff_state_new_vacuum(modes, cutoff, &mut s) }, FfStatus::Ok);
    s
}

#[test]
fn coherent_state_through_c_api() {
    let vac = vacuum(1, 10);
    let gate = FfGate {
        modes: 1,
        gamma_re: [1.0, 0.0],
        ..Default::default()
    };
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ff_evolve(&gate, vac, &mut out) }, FfStatus::Ok);
    assert_eq!(
        unsafe { (ff_state_modes(out), ff_state_cutoff(out), ff_state_len(out)) },
        (1, 10, 10)
    );
    let (re, im) = amplitudes(out);
    let mut fact = 1.0;
    for (m, (a, b)) in re.iter().zip(&im).enumerate() {
        if m > 0 {
            fact *= m as f64;
        }
        assert!((a - (-0.5f64).exp() / fact.sqrt()).abs() < 1e-12);
        assert!(b.abs() < 1e-12);
    }
    unsafe {
        ff_state_free(out);
        ff_state_free(vac);
    }
}

#[test]
fn kerr_and_large_r() {
    let photons = [3usize];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { ff_state_new_fock(1, 8, photons.as_ptr(), &mut s) },
        FfStatus::Ok
    );
    let kappa = [std::f64::consts::PI];
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { ff_apply_kerr(kappa.as_ptr(), 1, s, &mut k) }, FfStatus::Ok);
    let (re, _) = amplitudes(k);
    assert!((re[3] + 1.0).abs() < 1e-12);

    let gate = FfGate {
        modes: 1,
        r: [3.0, 0.0],
        ..Default::default()
    };
    let vac = vacuum(1, 30);
    let mut big = ptr::null_mut();
    assert_eq!(unsafe { ff_evolve_large_r(&gate, vac, &mut big) }, FfStatus::Ok);
    let mut norm = 0.0;
    assert_eq!(unsafe { ff_state_norm_sqr(big, &mut norm) }, FfStatus::Ok);
    assert!(norm > 0.0 && norm.is_finite());
    unsafe {
        for p in [s, k, vac, big] {
            ff_state_free(p);
        }
    }
}

#[test]
fn errors_are_reported() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ff_state_new_vacuum(3, 4, &mut s) }, FfStatus::ShapeMismatch);
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(
        unsafe { ff_state_new_vacuum(1, 4, ptr::null_mut()) },
        FfStatus::NullPointer
    );

    let vac = vacuum(1, 4);
    let gate = FfGate {
        modes: 1,
        r: [-1.0, 0.0],
        ..Default::default()
    };
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ff_evolve(&gate, vac, &mut out) }, FfStatus::InvalidArgument);
    assert_eq!(unsafe { ff_evolve(ptr::null(), vac, &mut out) }, FfStatus::NullPointer);

    let (mut re, mut im) = (vec![0.0; 3], vec![0.0; 3]);
    assert_eq!(
        unsafe { ff_state_amplitudes(vac, re.as_mut_ptr(), im.as_mut_ptr(), 3) },
        FfStatus::ShapeMismatch
    );
    assert!(last_error().contains("expected 4"));

    let photons = [4usize];
    assert_eq!(
        unsafe { ff_state_new_fock(1, 4, photons.as_ptr(), &mut out) },
        FfStatus::InvalidArgument
    );
    assert_eq!(unsafe { ff_state_len(ptr::null()) }, 0);
    unsafe {
        ff_state_free(vac);
        ff_state_free(ptr::null_mut());
    }
}

#[test]
fn state_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.state").to_str().unwrap()).unwrap();
    let re = [0.6, 0.0, 0.0, 0.0];
    let im = [0.0, 0.0, 0.0, 0.8];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { ff_state_new_from_amplitudes(2, 2, re.as_ptr(), im.as_ptr(), 4, &mut s) },
        FfStatus::Ok
    );
    assert_eq!(unsafe { ff_state_write_file(s, path.as_ptr()) }, FfStatus::Ok);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ff_state_read_file(path.as_ptr(), &mut t) }, FfStatus::Ok);
    assert_eq!(amplitudes(t), (re.to_vec(), im.to_vec()));

    let missing = CString::new(dir.path().join("nope").to_str().unwrap()).unwrap();
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { ff_state_read_file(missing.as_ptr(), &mut u) }, FfStatus::Io);
    unsafe {
        ff_state_free(s);
        ff_state_free(t);
    }
}

#[test]
fn circuit_loss_and_gradient() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { ff_circuit_new(1, 8, 2, &mut c) }, FfStatus::Ok);
    let n = unsafe { ff_circuit_num_params(c) };
    assert_eq!(n, 10);
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(
        unsafe { ff_circuit_get_params(c, re.as_mut_ptr(), im.as_mut_ptr(), n) },
        FfStatus::Ok
    );
    assert!(re.iter().chain(&im).all(|&x| x == 0.0));
    re[0] = 0.3;
    assert_eq!(
        unsafe { ff_circuit_set_params(c, re.as_ptr(), im.as_ptr(), n) },
        FfStatus::Ok
    );

    let vac = vacuum(1, 8);
    let photons = [1usize];
    let mut target = ptr::null_mut();
    assert_eq!(
        unsafe { ff_state_new_fock(1, 8, photons.as_ptr(), &mut target) },
        FfStatus::Ok
    );
    let mut loss = 0.0;
    let (mut gre, mut gim) = (vec![0.0; n], vec![0.0; n]);
    let st = unsafe { ff_circuit_fidelity_loss(c, vac, target, &mut loss, gre.as_mut_ptr(), gim.as_mut_ptr(), n) };
    assert_eq!(st, FfStatus::Ok);
    // coherent amplitude 0.3: fidelity 0.09 exp(-0.09)
    assert!((loss - (1.0 - 0.09 * (-0.09f64).exp())).abs() < 1e-12);
    assert!(gre[0] < 0.0);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ff_circuit_apply(c, vac, &mut out) }, FfStatus::Ok);
    let (a, _) = amplitudes(out);
    assert!((a[1] - 0.3 * (-0.045f64).exp()).abs() < 1e-12);

    re[1] = -1.0;
    assert_eq!(
        unsafe { ff_circuit_set_params(c, re.as_ptr(), im.as_ptr(), n) },
        FfStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { ff_circuit_get_params(c, re.as_mut_ptr(), im.as_mut_ptr(), n) },
        FfStatus::Ok
    );
    assert_eq!(re[1], 0.0, "rejected parameters must leave the circuit unchanged");
    unsafe {
        for p in [vac, target, out] {
            ff_state_free(p);
        }
        ff_circuit_free(c);
    }
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fockflow.h")).unwrap();
    for name in [
        "ff_last_error_message",
        "ff_version",
        "ff_state_new_vacuum",
        "ff_state_new_fock",
        "ff_state_new_from_amplitudes",
        "ff_state_free",
        "ff_state_amplitudes",
        "ff_evolve",
        "ff_evolve_large_r",
        "ff_apply_kerr",
        "ff_circuit_new",
        "ff_circuit_fidelity_loss",
        "typedef struct FfGate",
        "FF_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
    let v = unsafe { CStr::from_ptr(ff_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
