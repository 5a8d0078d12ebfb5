//! C ABI over `nashqec`.
//!
//! Every fallible function returns an [`NqecStatus`]; on failure the message
//! is available from [`nqec_last_error_message`] on the same thread. Handles
//! are opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Strings handed out by the library are released with
//! [`nqec_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nashqec::circuits::{emit_circuit_text, preparation_circuit};
use nashqec::code::{Backend, Certainty, GraphCode};
use nashqec::error::Error;
use nashqec::graph::{Graph, GraphAction};
use nashqec::noise::{build_decoder_table, estimate_logical_error_rate, fixture, CheckMatrix};
use nashqec::objectives::Registry;
use nashqec::runner::{discover, write_discover, DiscoverOutput, RunConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NqecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Io = 4,
    Parse = 5,
    Invalid = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NqecBackend {
    InputOutput = 0,
    PaperRank = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NqecCertainty {
    #[default]
    Exact = 0,
    /// `d` is a lower bound: no logical below it exists.
    LowerBound = 1,
    Heuristic = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NqecCodeParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub certainty: NqecCertainty,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NqecNoiseResult {
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    pub eps_l: f64,
    pub std_err: f64,
}

/// Graph with inputs first, then outputs.
pub struct NqecGraph(Graph);

/// Result of a discovery run.
pub struct NqecRun(DiscoverOutput);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(NqecStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => NqecStatus::Config,
            Error::Io { .. } => NqecStatus::Io,
            Error::Parse { .. } | Error::Trajectory(_) => NqecStatus::Parse,
            _ => NqecStatus::Invalid,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NqecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NqecStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            NqecStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NqecStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NqecStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

fn backend(b: NqecBackend) -> Backend {
    match b {
        NqecBackend::InputOutput => Backend::InputOutput,
        NqecBackend::PaperRank => Backend::PaperRank,
    }
}

fn certainty(c: Certainty) -> NqecCertainty {
    match c {
        Certainty::Exact => NqecCertainty::Exact,
        Certainty::LowerBoundedBy(_) => NqecCertainty::LowerBound,
        Certainty::Heuristic => NqecCertainty::Heuristic,
    }
}

fn params(code: &GraphCode) -> NqecCodeParams {
    NqecCodeParams {
        n: code.n,
        k: code.k,
        d: code.d,
        certainty: certainty(code.certainty),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn nqec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nqec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn nqec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Edgeless graph with `n_out` outputs and `n_in` inputs.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_graph_new(n_out: usize, n_in: usize, out: *mut *mut NqecGraph) -> NqecStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(NqecGraph(Graph::new(n_out, n_in)?)));
        Ok(())
    })
}

/// Parses the edge-list format: header `n_in n_out`, then one `u v` per line.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_graph_from_edge_list(text: *const c_char, out: *mut *mut NqecGraph) -> NqecStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(NqecGraph(Graph::from_edge_list(text)?)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn nqec_graph_free(g: *mut NqecGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a valid graph handle.
#[no_mangle]
pub unsafe extern "C" fn nqec_graph_toggle_edge(g: *mut NqecGraph, u: usize, v: usize) -> NqecStatus {
    guard(|| {
        let g = out_arg(g, "graph")?;
        g.0 = g.0.apply(GraphAction::ToggleEdge(u, v))?;
        Ok(())
    })
}

/// # Safety
/// `g` must be a valid graph handle.
#[no_mangle]
pub unsafe extern "C" fn nqec_graph_local_complement(g: *mut NqecGraph, v: usize) -> NqecStatus {
    guard(|| {
        let g = out_arg(g, "graph")?;
        g.0 = g.0.apply(GraphAction::LocalComplement(v))?;
        Ok(())
    })
}

/// # Safety
/// `g` must be a valid graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_graph_edge_count(g: *const NqecGraph, out: *mut usize) -> NqecStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(g, "graph")?.0.edge_count();
        Ok(())
    })
}

/// Edge-list text of `g`; release with `nqec_string_free`.
///
/// # Safety
/// `g` must be a valid graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_graph_to_edge_list(g: *const NqecGraph, out: *mut *mut c_char) -> NqecStatus {
    guard(|| {
        let text = ref_arg(g, "graph")?.0.to_edge_list();
        *out_arg(out, "out")? = into_c_string(text);
        Ok(())
    })
}

/// Code parameters of `g`, with the distance verified by enumerating at most
/// `budget` Paulis. A budget of 0 returns the heuristic distance.
///
/// # Safety
/// `g` must be a valid graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_code_params(
    g: *const NqecGraph,
    backend_kind: NqecBackend,
    budget: u64,
    out: *mut NqecCodeParams,
) -> NqecStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        let out = out_arg(out, "out")?;
        let mut code = GraphCode::build(&g.0, backend(backend_kind))?;
        if budget > 0 && code.k > 0 {
            code = code.verified(budget)?;
        }
        *out = params(&code);
        Ok(())
    })
}

/// Preparation circuit of `g` in the text circuit format; release with
/// `nqec_string_free`.
///
/// # Safety
/// `g` must be a valid graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_preparation_circuit(g: *const NqecGraph, out: *mut *mut c_char) -> NqecStatus {
    guard(|| {
        let text = emit_circuit_text(&preparation_circuit(&ref_arg(g, "graph")?.0));
        *out_arg(out, "out")? = into_c_string(text);
        Ok(())
    })
}

/// Monte Carlo logical error rate under depolarizing noise. Exactly one of
/// `g` (input-output code) and `fixture_name` must be non-null.
///
/// # Safety
/// Pointers must be null or valid; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nqec_logical_error_rate(
    g: *const NqecGraph,
    fixture_name: *const c_char,
    p: f64,
    trials: u64,
    seed: u64,
    out: *mut NqecNoiseResult,
) -> NqecStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cm = match (g.as_ref(), fixture_name.is_null()) {
            (Some(g), true) => CheckMatrix::from_code(&GraphCode::build(&g.0, Backend::InputOutput)?)?,
            (None, false) => fixture(str_arg(fixture_name, "fixture_name")?)?,
            _ => {
                return Err(Failure(
                    NqecStatus::Config,
                    "give exactly one of a graph or a fixture name".into(),
                ))
            }
        };
        let r = estimate_logical_error_rate(&build_decoder_table(&cm)?, p, trials, seed)?;
        *out = NqecNoiseResult {
            p: r.p,
            trials: r.trials,
            failures: r.failures,
            eps_l: r.eps_l,
            std_err: r.std_err,
        };
        Ok(())
    })
}

/// Runs discovery trials described by a JSON run configuration.
///
/// # Safety
/// `config_json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_discover(config_json: *const c_char, out: *mut *mut NqecRun) -> NqecStatus {
    guard(|| {
        let cfg = RunConfig::from_json(str_arg(config_json, "config_json")?)?;
        let out = out_arg(out, "out")?;
        let run = discover(&cfg, &Registry::default())?;
        *out = Box::into_raw(Box::new(NqecRun(run)));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn nqec_run_free(run: *mut NqecRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Parameters of the best code over all trials.
///
/// # Safety
/// `run` must be a valid run handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_run_best(run: *const NqecRun, out: *mut NqecCodeParams) -> NqecStatus {
    guard(|| {
        let b = &ref_arg(run, "run")?.0.summary.best;
        *out_arg(out, "out")? = NqecCodeParams {
            n: b.n,
            k: b.k,
            d: b.d,
            certainty: certainty(b.d_certainty),
        };
        Ok(())
    })
}

/// Best graph over all trials as a new handle.
///
/// # Safety
/// `run` must be a valid run handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_run_best_graph(run: *const NqecRun, out: *mut *mut NqecGraph) -> NqecStatus {
    guard(|| {
        let g = ref_arg(run, "run")?.0.summary.best.graph.clone();
        *out_arg(out, "out")? = Box::into_raw(Box::new(NqecGraph(g)));
        Ok(())
    })
}

/// Run summary as JSON; release with `nqec_string_free`.
///
/// # Safety
/// `run` must be a valid run handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqec_run_summary_json(run: *const NqecRun, out: *mut *mut c_char) -> NqecStatus {
    guard(|| {
        let json = serde_json::to_string(&ref_arg(run, "run")?.0.summary)
            .map_err(|e| Failure(NqecStatus::Invalid, e.to_string()))?;
        *out_arg(out, "out")? = into_c_string(json);
        Ok(())
    })
}

/// Writes the run's report files into `dir`, which is created if needed.
///
/// # Safety
/// `run` must be a valid run handle and `dir` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nqec_run_write(run: *const NqecRun, dir: *const c_char) -> NqecStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let dir = str_arg(dir, "dir")?;
        write_discover(Path::new(dir), &run.0.summary.config, &run.0)?;
        Ok(())
    })
}
