use std::ffi::{c_char, CStr, CString};
use std::ptr;

use gal_ffi::*;

fn last_error() -> String {
    let len = unsafe { gal_last_error(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; len + 1];
    unsafe { gal_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn small_graph(seed: u64) -> *mut GalGraph {
    let cfg = CString::new("nodes_per_block = 40\np_in = 0.1\np_out = 0.01\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { gal_graph_generate_sbm(cfg.as_ptr(), seed, &mut g) },
        GalStatus::Ok
    );
    assert!(!g.is_null());
    g
}

#[test]
fn graph_handle_round_trip() {
    let g = small_graph(3);
    let (mut n, mut e) = (0usize, 0usize);
    unsafe {
        assert_eq!(gal_graph_node_count(g, &mut n), GalStatus::Ok);
        assert_eq!(gal_graph_edge_count(g, &mut e), GalStatus::Ok);
    }
    assert_eq!(n, 80);
    assert!(e > 0);
    for v in 0..n {
        let mut w = 0i64;
        assert_eq!(
            unsafe { gal_graph_nhop_sample(g, v, 2, 7, &mut w) },
            GalStatus::Ok
        );
        if w >= 0 {
            let mut d = 0i64;
            assert_eq!(
                unsafe { gal_graph_bfs_distance(g, v, w as usize, &mut d) },
                GalStatus::Ok
            );
            assert!((1..=2).contains(&d));
            let mut again = 0i64;
            unsafe { gal_graph_nhop_sample(g, v, 2, 7, &mut again) };
            assert_eq!(again, w);
        }
    }
    unsafe { gal_graph_free(g) };
}

#[test]
fn errors_are_reported_per_thread() {
    let mut out = 0usize;
    assert_eq!(
        unsafe { gal_graph_node_count(ptr::null(), &mut out) },
        GalStatus::NullPointer
    );
    assert!(last_error().contains("graph"));

    let bad = CString::new("p_in = 3\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { gal_graph_generate_sbm(bad.as_ptr(), 0, &mut g) },
        GalStatus::Contract
    );
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let missing = CString::new("/nonexistent/graph").unwrap();
    assert_eq!(
        unsafe { gal_graph_load(missing.as_ptr(), &mut g) },
        GalStatus::Io
    );

    std::thread::spawn(|| assert_eq!(last_error(), ""))
        .join()
        .unwrap();

    let g = small_graph(1);
    let mut d = 0i64;
    assert_eq!(
        unsafe { gal_graph_bfs_distance(g, 0, 10_000, &mut d) },
        GalStatus::Contract
    );
    assert_eq!(
        unsafe { gal_graph_bfs_distance(g, 0, 0, &mut d) },
        GalStatus::Ok
    );
    assert_eq!(d, 0);
    assert_eq!(last_error(), "");
    unsafe { gal_graph_free(g) };
    unsafe { gal_graph_free(ptr::null_mut()) };
}

#[test]
fn train_and_read_embeddings() {
    let g = small_graph(2);
    let cfg = CString::new(
        "iterations = 30\nlayers = 1\nembedding_dim = 5\ntask_hidden = 8\nadversary_hidden = 8\n",
    )
    .unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { gal_model_train(g, cfg.as_ptr(), &mut m) },
        GalStatus::Ok,
        "{}",
        last_error()
    );
    let mut d = 0usize;
    assert_eq!(unsafe { gal_model_embedding_dim(m, &mut d) }, GalStatus::Ok);
    assert_eq!(d, 5);
    let mut buf = vec![f64::NAN; 80 * d];
    assert_eq!(
        unsafe { gal_model_embeddings(m, g, buf.as_mut_ptr(), buf.len()) },
        GalStatus::Ok
    );
    assert!(buf.iter().all(|v| v.is_finite()));
    assert_eq!(
        unsafe { gal_model_embeddings(m, g, buf.as_mut_ptr(), 3) },
        GalStatus::Contract
    );

    let typo = CString::new("iteratons = 3\n").unwrap();
    let mut m2 = ptr::null_mut();
    assert_eq!(
        unsafe { gal_model_train(g, typo.as_ptr(), &mut m2) },
        GalStatus::Contract
    );
    assert!(m2.is_null());
    unsafe {
        gal_model_free(m);
        gal_graph_free(g);
    }
}

#[test]
fn metrics_match_hand_values() {
    let mut out = 0.0;
    let (p, q) = ([0.5, 0.5, 0.0], [0.0, 0.5, 0.5]);
    assert_eq!(
        unsafe { gal_tv_distance(p.as_ptr(), q.as_ptr(), 3, &mut out) },
        GalStatus::Ok
    );
    assert!((out - 0.5).abs() < 1e-12);

    let xs = [0.0, 1.0, 3.0];
    assert_eq!(
        unsafe { gal_w1_discrete(xs.as_ptr(), p.as_ptr(), q.as_ptr(), 3, &mut out) },
        GalStatus::Ok
    );
    // move 1/2 from 0 to 3 (or 0 to 1 and 1 to 3)
    assert!((out - 1.5).abs() < 1e-12);

    let (a, b) = ([0.0, 2.0], [1.0, 5.0]);
    assert_eq!(
        unsafe { gal_w1_samples(a.as_ptr(), b.as_ptr(), 2, &mut out) },
        GalStatus::Ok
    );
    assert!((out - 2.0).abs() < 1e-12);

    let (pred, truth) = ([0usize, 1, 1, 0], [0usize, 1, 0, 0]);
    assert_eq!(
        unsafe { gal_macro_f1(pred.as_ptr(), truth.as_ptr(), 4, 2, &mut out) },
        GalStatus::Ok
    );
    // class 0: P 1, R 2/3 -> 0.8; class 1: P 1/2, R 1 -> 2/3
    assert!((out - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-12);

    let (scores, labels) = ([0.1, 0.4, 0.35, 0.8], [0u8, 0, 1, 1]);
    assert_eq!(
        unsafe { gal_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut out) },
        GalStatus::Ok
    );
    assert!((out - 0.75).abs() < 1e-12);
    let ones = [1u8; 4];
    assert_eq!(
        unsafe { gal_auc(scores.as_ptr(), ones.as_ptr(), 4, &mut out) },
        GalStatus::Contract
    );
    assert_eq!(
        unsafe { gal_tv_distance(ptr::null(), q.as_ptr(), 3, &mut out) },
        GalStatus::NullPointer
    );
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(gal_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
