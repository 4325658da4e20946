use std::ffi::{CStr, CString};
use std::ptr;

use tnfeat_ffi::*;

fn stack(shape: &[usize]) -> *mut TnfTensor {
    let len: usize = shape.iter().product();
    let data: Vec<f64> = (0..len).map(|i| ((i * 7919) % 31) as f64 / 31.0 - 0.4).collect();
    let mut t = ptr::null_mut();
    let st = unsafe { tnf_tensor_new(shape.as_ptr(), shape.len(), data.as_ptr(), len, &mut t) };
    assert_eq!(st, TnfStatus::Ok);
    t
}

fn data(t: *const TnfTensor) -> Vec<f64> {
    let mut len = 0;
    unsafe {
        let mut buf = vec![0.0; tnf_tensor_len(t)];
        assert_eq!(tnf_tensor_data(t, buf.as_mut_ptr(), buf.len(), &mut len), TnfStatus::Ok);
        assert_eq!(len, buf.len());
        buf
    }
}

fn last_error() -> String {
    let p = tnf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn tensor_round_trip_and_errors() {
    let t = stack(&[2, 3]);
    unsafe {
        assert_eq!(tnf_tensor_order(t), 2);
        let mut shape = [0usize; 1];
        let mut len = 0;
        assert_eq!(tnf_tensor_shape(t, shape.as_mut_ptr(), 1, &mut len), TnfStatus::BufferTooSmall);
        assert_eq!(len, 2);
        assert!(last_error().contains("need 2"));

        let mut bad = ptr::null_mut();
        let d = [1.0, 2.0];
        let s = [2usize, 2];
        assert_eq!(tnf_tensor_new(s.as_ptr(), 2, d.as_ptr(), 2, &mut bad), TnfStatus::ShapeMismatch);
        assert!(bad.is_null());
        assert_eq!(tnf_tensor_new(ptr::null(), 2, d.as_ptr(), 2, &mut bad), TnfStatus::NullPointer);
        tnf_clear_error();
        assert!(tnf_last_error().is_null());

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("t.dtf").to_str().unwrap()).unwrap();
        assert_eq!(tnf_tensor_save(t, path.as_ptr()), TnfStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(tnf_tensor_load(path.as_ptr(), &mut back), TnfStatus::Ok);
        assert_eq!(data(back), data(t));
        let missing = CString::new(dir.path().join("nope.dtf").to_str().unwrap()).unwrap();
        assert_eq!(tnf_tensor_load(missing.as_ptr(), &mut back), TnfStatus::Io);
        tnf_tensor_free(back);
        tnf_tensor_free(t);
        tnf_tensor_free(ptr::null_mut());
    }
}

#[test]
fn mps_decompose_project_save_load() {
    let x = stack(&[3, 4, 2, 5]);
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(tnf_mps_decompose(x, 1.0, 0, &mut m), TnfStatus::Ok);
        let mut bonds = [0usize; 8];
        let mut nb = 0;
        assert_eq!(tnf_mps_bond_dims(m, bonds.as_mut_ptr(), 8, &mut nb), TnfStatus::Ok);
        assert_eq!(nb, 5);
        assert_eq!((bonds[0], bonds[4]), (1, 1));

        let mut core = ptr::null_mut();
        let mut proj = ptr::null_mut();
        assert_eq!(tnf_mps_core(m, &mut core), TnfStatus::Ok);
        assert_eq!(tnf_mps_project(m, x, &mut proj), TnfStatus::Ok);
        let (a, b) = (data(core), data(proj));
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9));
        assert_eq!(tnf_mps_n_features(m) * 5, a.len());

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.mps").to_str().unwrap()).unwrap();
        assert_eq!(tnf_mps_save(m, path.as_ptr()), TnfStatus::Ok);
        let mut m2 = ptr::null_mut();
        assert_eq!(tnf_mps_load(path.as_ptr(), &mut m2), TnfStatus::Ok);
        let mut core2 = ptr::null_mut();
        assert_eq!(tnf_mps_core(m2, &mut core2), TnfStatus::Ok);
        assert_eq!(data(core2), a);

        let mut bad = ptr::null_mut();
        assert_eq!(tnf_mps_decompose(x, 1.5, 0, &mut bad), TnfStatus::InvalidArgument);
        assert!(bad.is_null());
        let wrong = stack(&[3, 3, 2, 5]);
        let mut none = ptr::null_mut();
        assert_eq!(tnf_mps_project(m, wrong, &mut none), TnfStatus::ShapeMismatch);
        assert!(last_error().contains("does not match"));
        let tkr = CString::new(dir.path().join("x.tkr").to_str().unwrap()).unwrap();
        assert_eq!(tnf_tensor_save(x, tkr.as_ptr()), TnfStatus::Ok);
        assert_eq!(tnf_mps_load(tkr.as_ptr(), &mut bad), TnfStatus::Format);

        for t in [core, proj, core2, wrong, x] {
            tnf_tensor_free(t);
        }
        tnf_mps_free(m);
        tnf_mps_free(m2);
    }
}

#[test]
fn tucker_decompose_and_trace() {
    let x = stack(&[4, 3, 3, 6]);
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(tnf_tucker_decompose(x, 0.8, 0, 0.0, &mut m), TnfStatus::Ok);
        let mut ranks = [0usize; 3];
        let mut n = 0;
        assert_eq!(tnf_tucker_ranks(m, ranks.as_mut_ptr(), 3, &mut n), TnfStatus::Ok);
        assert_eq!(n, 3);
        let mut trace = vec![0.0; 64];
        assert_eq!(tnf_tucker_objective_trace(m, trace.as_mut_ptr(), 64, &mut n), TnfStatus::Ok);
        assert!(trace[..n].windows(2).all(|w| w[1] >= w[0] - 1e-12));

        let mut core = ptr::null_mut();
        let mut proj = ptr::null_mut();
        assert_eq!(tnf_tucker_core(m, &mut core), TnfStatus::Ok);
        assert_eq!(tnf_tucker_project(m, x, &mut proj), TnfStatus::Ok);
        let (a, b) = (data(core), data(proj));
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9));

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.tkr").to_str().unwrap()).unwrap();
        assert_eq!(tnf_tucker_save(m, path.as_ptr()), TnfStatus::Ok);
        let mut m2 = ptr::null_mut();
        assert_eq!(tnf_tucker_load(path.as_ptr(), &mut m2), TnfStatus::Ok);
        assert_eq!(tnf_tucker_ranks(m2, ptr::null_mut(), 0, &mut n), TnfStatus::BufferTooSmall);
        assert_eq!(n, 3);
        assert_eq!(tnf_tucker_ranks(ptr::null(), ranks.as_mut_ptr(), 3, &mut n), TnfStatus::NullPointer);

        tnf_tensor_free(core);
        tnf_tensor_free(proj);
        tnf_tensor_free(x);
        tnf_tucker_free(m);
        tnf_tucker_free(m2);
    }
}
