//! C ABI for graph generation, n-hop sampling, adversarial training and the
//! scalar metrics of `gal-core`.
//!
//! Every fallible function returns a [`GalStatus`]; on failure the message is
//! kept per thread and read with [`gal_last_error`]. Handles are opaque and
//! released with their `*_free` function. Out-pointers are written only on
//! success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gal_core::config::apply;
use gal_core::eval::{auc, macro_f1, EvalError};
use gal_core::graph::{
    bfs_distance, generate_sbm, load_graph_dir, nhop_sample, Graph, GraphError, SbmConfig,
};
use gal_core::models::{encode_values, ModelParams};
use gal_core::rng::{stream, Stream};
use gal_core::theory::{
    euclidean, tv_distance, w1_discrete, w1_sorted_1d, DiscreteDist, TheoryError,
};
use gal_core::train::{train, TaskSplit, TrainError, TrainingConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GalStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Invalid argument, configuration or input data.
    Contract = 2,
    /// Training or evaluation hit a non-finite value.
    Numeric = 3,
    /// File system failure.
    Io = 4,
    /// A string argument was not valid UTF-8.
    Utf8 = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Opaque graph handle.
pub struct GalGraph(Graph);

/// Opaque trained-model handle: parameters plus the config that produced them.
pub struct GalModel {
    params: ModelParams,
    cfg: TrainingConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

struct Failure(GalStatus, String);

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        let status = if matches!(e, GraphError::Io { .. }) {
            GalStatus::Io
        } else {
            GalStatus::Contract
        };
        Failure(status, e.to_string())
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Numeric(_) | TrainError::Aborted { .. } => {
                Failure(GalStatus::Numeric, e.to_string())
            }
            TrainError::Graph(g) => g.into(),
            other => Failure(GalStatus::Contract, other.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Numeric(_) => Failure(GalStatus::Numeric, e.to_string()),
            EvalError::Train(t) => t.into(),
            other => Failure(GalStatus::Contract, other.to_string()),
        }
    }
}

impl From<TheoryError> for Failure {
    fn from(e: TheoryError) -> Self {
        Failure(GalStatus::Contract, e.to_string())
    }
}

fn contract(msg: impl Into<String>) -> Failure {
    Failure(GalStatus::Contract, msg.into())
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

/// Runs `f`, records any failure and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GalStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            GalStatus::Panic
        }
    }
}

fn not_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(GalStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn text<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    not_null(s, name)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(GalStatus::Utf8, format!("{name} is not UTF-8")))
}

/// # Safety
/// `p` must be null (only when `len == 0`) or point to `len` readable values.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    not_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies the calling thread's last error message (NUL-terminated, truncated
/// to fit) into `buf` and returns the full message length without the NUL.
/// Passing a null `buf` or `len == 0` only queries the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gal_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples a block-model graph from `key = value` generator settings
/// (null or empty text for the defaults); `seed` overrides any seed key.
///
/// # Safety
/// `config` must be null or a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_graph_generate_sbm(
    config: *const c_char,
    seed: u64,
    out: *mut *mut GalGraph,
) -> GalStatus {
    guard(|| {
        not_null(out, "out")?;
        let mut cfg = SbmConfig::default();
        if !config.is_null() {
            apply(text(config, "config")?, &mut [&mut cfg]).map_err(|e| contract(e.to_string()))?;
        }
        cfg.seed = seed;
        let g = generate_sbm(&cfg)?;
        *out = Box::into_raw(Box::new(GalGraph(g)));
        Ok(())
    })
}

/// Loads `nodes.csv` and `edges.csv` from directory `dir`.
///
/// # Safety
/// `dir` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_graph_load(dir: *const c_char, out: *mut *mut GalGraph) -> GalStatus {
    guard(|| {
        not_null(out, "out")?;
        let g = load_graph_dir(Path::new(text(dir, "dir")?))?;
        *out = Box::into_raw(Box::new(GalGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gal_graph_free(g: *mut GalGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_graph_node_count(g: *const GalGraph, out: *mut usize) -> GalStatus {
    guard(|| {
        not_null(g, "graph")?;
        not_null(out, "out")?;
        *out = (*g).0.node_count();
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_graph_edge_count(g: *const GalGraph, out: *mut usize) -> GalStatus {
    guard(|| {
        not_null(g, "graph")?;
        not_null(out, "out")?;
        *out = (*g).0.edge_count();
        Ok(())
    })
}

/// Endpoint of a self-avoiding `hops`-step walk from `v`, or -1 when the
/// walk gets stuck. The walk is a pure function of `(graph, v, hops, seed)`.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_graph_nhop_sample(
    g: *const GalGraph,
    v: usize,
    hops: usize,
    seed: u64,
    out: *mut i64,
) -> GalStatus {
    guard(|| {
        not_null(g, "graph")?;
        not_null(out, "out")?;
        let mut rng = stream(seed, Stream::Sampler);
        *out = nhop_sample(&(*g).0, v, hops, &mut rng)?.map_or(-1, |w| w as i64);
        Ok(())
    })
}

/// Hop distance between `v` and `w`, or -1 when they are disconnected.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_graph_bfs_distance(
    g: *const GalGraph,
    v: usize,
    w: usize,
    out: *mut i64,
) -> GalStatus {
    guard(|| {
        not_null(g, "graph")?;
        not_null(out, "out")?;
        let n = (*g).0.node_count();
        if v >= n || w >= n {
            return Err(contract(format!("node out of range 0..{n}")));
        }
        *out = bfs_distance(&(*g).0, v, w).map_or(-1, |d| d as i64);
        Ok(())
    })
}

/// Trains an encoder on `g` with `key = value` training settings (null or
/// empty text for the defaults).
///
/// # Safety
/// `g` must be a live graph handle, `config` null or a valid C string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gal_model_train(
    g: *const GalGraph,
    config: *const c_char,
    out: *mut *mut GalModel,
) -> GalStatus {
    guard(|| {
        not_null(g, "graph")?;
        not_null(out, "out")?;
        let cfg = if config.is_null() {
            TrainingConfig::default()
        } else {
            TrainingConfig::from_text(text(config, "config")?)?
        };
        let graph = &(*g).0;
        let split = TaskSplit::prepare(graph, &cfg)?;
        let outcome = train(graph, &split, &cfg)?;
        *out = Box::into_raw(Box::new(GalModel {
            params: outcome.params,
            cfg,
        }));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gal_model_free(m: *mut GalModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_model_embedding_dim(m: *const GalModel, out: *mut usize) -> GalStatus {
    guard(|| {
        not_null(m, "model")?;
        not_null(out, "out")?;
        *out = (*m).cfg.encoder.embedding_dim;
        Ok(())
    })
}

/// Writes the row-major `node_count x embedding_dim` embeddings of `g` into
/// `buf`, which must hold exactly that many doubles (`len`).
///
/// # Safety
/// `m` and `g` must be live handles; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gal_model_embeddings(
    m: *const GalModel,
    g: *const GalGraph,
    buf: *mut f64,
    len: usize,
) -> GalStatus {
    guard(|| {
        not_null(m, "model")?;
        not_null(g, "graph")?;
        not_null(buf, "buf")?;
        let model = &*m;
        let z = encode_values(&(*g).0, &model.params, &model.cfg.encoder)
            .map_err(|e| contract(e.to_string()))?;
        let data = z.tensor().data();
        if data.len() != len {
            return Err(contract(format!(
                "buffer holds {len} values, embeddings need {}",
                data.len()
            )));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, len);
        Ok(())
    })
}

/// Total variation distance between two distributions over the same `n`
/// outcomes, given as probability vectors.
///
/// # Safety
/// `p` and `q` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_tv_distance(
    p: *const f64,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> GalStatus {
    guard(|| {
        not_null(out, "out")?;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let p = DiscreteDist::on_line(&xs, slice(p, n, "p")?.to_vec())?;
        let q = DiscreteDist::on_line(&xs, slice(q, n, "q")?.to_vec())?;
        *out = tv_distance(&p, &q)?;
        Ok(())
    })
}

/// Exact W1 between `p` and `q` over the shared real-line support `xs`.
///
/// # Safety
/// `xs`, `p` and `q` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_w1_discrete(
    xs: *const f64,
    p: *const f64,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> GalStatus {
    guard(|| {
        not_null(out, "out")?;
        let xs = slice(xs, n, "xs")?;
        let p = DiscreteDist::on_line(xs, slice(p, n, "p")?.to_vec())?;
        let q = DiscreteDist::on_line(xs, slice(q, n, "q")?.to_vec())?;
        *out = w1_discrete(&p, &q, euclidean)?;
        Ok(())
    })
}

/// Empirical W1 between two samples of `n` points each on the real line.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_w1_samples(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut f64,
) -> GalStatus {
    guard(|| {
        not_null(out, "out")?;
        *out = w1_sorted_1d(slice(a, n, "a")?, slice(b, n, "b")?)?;
        Ok(())
    })
}

/// Unweighted mean of per-class F1 over `classes` labels.
///
/// # Safety
/// `pred` and `truth` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_macro_f1(
    pred: *const usize,
    truth: *const usize,
    n: usize,
    classes: usize,
    out: *mut f64,
) -> GalStatus {
    guard(|| {
        not_null(out, "out")?;
        *out = macro_f1(slice(pred, n, "pred")?, slice(truth, n, "truth")?, classes)?;
        Ok(())
    })
}

/// ROC AUC of `scores` against 0/1 `labels`; a contract error unless both
/// labels occur.
///
/// # Safety
/// `scores` and `labels` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gal_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> GalStatus {
    guard(|| {
        not_null(out, "out")?;
        let labels = slice(labels, n, "labels")?;
        if labels.iter().any(|&l| l > 1) {
            return Err(contract("labels must be 0 or 1"));
        }
        let labels: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        *out = auc(slice(scores, n, "scores")?, &labels)?
            .ok_or_else(|| contract("AUC needs both labels"))?;
        Ok(())
    })
}
