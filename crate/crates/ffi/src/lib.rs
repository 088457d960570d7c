//! C ABI over the `fearover` library.
//!
//! Handles are opaque and owned by the caller once returned; release each with
//! its `_free` function. Every fallible call returns an [`FoStatus`]; on
//! failure [`fo_last_error`] describes the most recent error on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::path::Path;
use std::ptr;

use fearover::crsite::TimingPreset;
use fearover::export;
use fearover::pdfa::{step, MobilitySymbol, PdfaConfig, PdfaState};
use fearover::route::{haversine_m, GeoPoint};
use fearover::scenario::{Scenario, ScenarioError};
use fearover::sim::{replay_reference, RunLog, Simulation};
use fearover::{FearInputs, FearIntensity, FearModel, ProviderId, RouteDb};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Simulation = 5,
    NotFound = 6,
}

/// Appraisal inputs; `distance_to_bssp_m` may be `INFINITY`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FoFearInputs {
    pub distance_to_bssp_m: f64,
    pub signal_dbm: f64,
    pub comm_importance: f64,
    pub sor: f64,
    pub vtp: f64,
    pub prospect: bool,
    pub desirability: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FoAppraisal {
    pub likelihood: f64,
    pub undesirability: f64,
    pub ig: f64,
    pub potential: f64,
    pub intensity: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FoBsspHit {
    pub index: usize,
    pub distance_m: f64,
    pub signal_dbm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FoReplayTotals {
    pub worst: u32,
    pub average: u32,
    pub best: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FoRunSummary {
    pub ticks: usize,
    pub attempts: usize,
    pub handovers: usize,
    pub episodes: usize,
    pub invariants_pass: bool,
}

pub struct FoFearModel(FearModel);
pub struct FoRouteDb(RouteDb);
pub struct FoRunLog(RunLog);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: FoStatus, message: impl Into<String>) -> FoStatus {
    let msg = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

/// Message of the last failed call on this thread, valid until the next
/// failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn fo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FoStatus> {
    if p.is_null() {
        return Err(fail(FoStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FoStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

macro_rules! out_ptr {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(r) => r,
            None => return fail(FoStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Fear model with the built-in rule bases and parameters.
#[no_mangle]
pub extern "C" fn fo_fear_model_new() -> *mut FoFearModel {
    Box::into_raw(Box::new(FoFearModel(FearModel::default())))
}

/// # Safety
/// `model` must come from [`fo_fear_model_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fo_fear_model_free(model: *mut FoFearModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `inputs` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fo_fear_appraise(
    model: *const FoFearModel,
    inputs: *const FoFearInputs,
    out: *mut FoAppraisal,
) -> FoStatus {
    let Some(model) = model.as_ref() else {
        return fail(FoStatus::NullPointer, "model is null");
    };
    let Some(i) = inputs.as_ref() else {
        return fail(FoStatus::NullPointer, "inputs is null");
    };
    let out = out_ptr!(out);
    let inputs = FearInputs {
        distance_to_bssp_m: i.distance_to_bssp_m,
        signal_dbm: i.signal_dbm,
        comm_importance: i.comm_importance,
        sor: i.sor,
        vtp: i.vtp,
        prospect: i.prospect,
        desirability: i.desirability,
    };
    match model.0.appraise(&inputs) {
        Ok(a) => {
            *out = FoAppraisal {
                likelihood: a.likelihood,
                undesirability: a.undesirability,
                ig: a.ig,
                potential: a.potential,
                intensity: a.intensity.value(),
            };
            FoStatus::Ok
        }
        Err(e) => fail(FoStatus::InvalidArgument, e.to_string()),
    }
}

/// Great-circle distance in meters between two latitude/longitude pairs.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_haversine_m(
    lat1: f64,
    lon1: f64,
    lat2: f64,
    lon2: f64,
    out: *mut f64,
) -> FoStatus {
    let out = out_ptr!(out);
    match (GeoPoint::new(lat1, lon1), GeoPoint::new(lat2, lon2)) {
        (Some(a), Some(b)) => {
            *out = haversine_m(a, b);
            FoStatus::Ok
        }
        _ => fail(FoStatus::InvalidArgument, "coordinate out of range"),
    }
}

/// Loads a route database CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_route_db_load(
    path: *const c_char,
    bad_threshold_dbm: f64,
    out: *mut *mut FoRouteDb,
) -> FoStatus {
    let out = out_ptr!(out);
    *out = ptr::null_mut();
    let path = try_status!(str_arg(path, "path"));
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) => return fail(FoStatus::Io, format!("{path}: {e}")),
    };
    match RouteDb::load_csv(file) {
        Ok(db) => {
            *out = Box::into_raw(Box::new(FoRouteDb(
                db.with_bad_threshold(bad_threshold_dbm),
            )));
            FoStatus::Ok
        }
        Err(e) => fail(FoStatus::Parse, format!("{path}: {e}")),
    }
}

/// # Safety
/// `db` must come from [`fo_route_db_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fo_route_db_free(db: *mut FoRouteDb) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `db` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fo_route_db_len(db: *const FoRouteDb) -> usize {
    db.as_ref().map_or(0, |d| d.0.points().len())
}

/// # Safety
/// `db` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fo_route_db_length_m(db: *const FoRouteDb) -> f64 {
    db.as_ref().map_or(0.0, |d| d.0.length_m())
}

/// Next bad-signal point strictly ahead of `position_m` for `provider`.
/// Returns [`FoStatus::NotFound`] when none lies ahead.
///
/// # Safety
/// `db` must be a live handle, `provider` a NUL-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_route_db_next_bssp(
    db: *const FoRouteDb,
    position_m: f64,
    provider: *const c_char,
    out: *mut FoBsspHit,
) -> FoStatus {
    let Some(db) = db.as_ref() else {
        return fail(FoStatus::NullPointer, "db is null");
    };
    let provider = ProviderId::new(try_status!(str_arg(provider, "provider")));
    let out = out_ptr!(out);
    let k = match db.0.provider_index(&provider) {
        Ok(k) => k,
        Err(e) => return fail(FoStatus::InvalidArgument, e.to_string()),
    };
    match db.0.next_bssp(position_m, &provider) {
        Ok(Some(h)) => {
            *out = FoBsspHit {
                index: h.index,
                distance_m: h.distance_m,
                signal_dbm: h.record.signals[k],
            };
            FoStatus::Ok
        }
        Ok(None) => fail(FoStatus::NotFound, "no bad-signal point ahead"),
        Err(e) => fail(FoStatus::InvalidArgument, e.to_string()),
    }
}

fn state_code(s: PdfaState) -> u8 {
    (s.slot.get() - 1) * 3
        + match s.alert {
            fearover::pdfa::AlertLevel::Base => 0,
            fearover::pdfa::AlertLevel::A => 1,
            fearover::pdfa::AlertLevel::B => 2,
        }
}

/// One automaton step with the default thresholds. States are coded
/// `0..=8` for `1, 1a, 1b, 2, 2a, 2b, 3, 3a, 3b`; the symbol is written as
/// one of the ASCII letters `S`, `M`, `I`, `C`.
///
/// # Safety
/// `next_state` and `symbol` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fo_pdfa_step(
    state: u8,
    fear: f64,
    next_state: *mut u8,
    symbol: *mut c_char,
) -> FoStatus {
    let next_state = out_ptr!(next_state);
    let symbol = out_ptr!(symbol);
    let Some(current) = PdfaState::all().nth(state as usize) else {
        return fail(
            FoStatus::InvalidArgument,
            format!("state code {state} out of range 0..=8"),
        );
    };
    let (n, s) = step(current, FearIntensity::new(fear), &PdfaConfig::default());
    *next_state = state_code(n);
    *symbol = match s {
        MobilitySymbol::S => b'S',
        MobilitySymbol::M => b'M',
        MobilitySymbol::I => b'I',
        MobilitySymbol::C => b'C',
    } as c_char;
    FoStatus::Ok
}

/// Successful reference attempts under the worst, average and best presets.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_replay_tables(out: *mut FoReplayTotals) -> FoStatus {
    let out = out_ptr!(out);
    let ok = |p| {
        replay_reference(p)
            .iter()
            .filter(|r| r.attempt.success)
            .count() as u32
    };
    *out = FoReplayTotals {
        worst: ok(TimingPreset::Worst),
        average: ok(TimingPreset::Average),
        best: ok(TimingPreset::Best),
    };
    FoStatus::Ok
}

/// Loads and runs a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_run_scenario(path: *const c_char, out: *mut *mut FoRunLog) -> FoStatus {
    let out = out_ptr!(out);
    *out = ptr::null_mut();
    let path = try_status!(str_arg(path, "path"));
    let scenario = match Scenario::load(Path::new(path)) {
        Ok(s) => s,
        Err(e @ ScenarioError::Io { .. }) => return fail(FoStatus::Io, e.to_string()),
        Err(e) => return fail(FoStatus::Parse, e.to_string()),
    };
    let log = Simulation::with_fear_model(scenario.config, &scenario.db, scenario.model)
        .and_then(Simulation::run);
    match log {
        Ok(l) => {
            *out = Box::into_raw(Box::new(FoRunLog(l)));
            FoStatus::Ok
        }
        Err(e) => fail(FoStatus::Simulation, e.to_string()),
    }
}

/// # Safety
/// `log` must come from [`fo_run_scenario`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fo_run_log_free(log: *mut FoRunLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// # Safety
/// `log` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_run_log_summary(
    log: *const FoRunLog,
    out: *mut FoRunSummary,
) -> FoStatus {
    let Some(log) = log.as_ref() else {
        return fail(FoStatus::NullPointer, "log is null");
    };
    let out = out_ptr!(out);
    *out = FoRunSummary {
        ticks: log.0.events.len(),
        attempts: log.0.attempts().count(),
        handovers: log.0.handover_count(),
        episodes: log.0.episodes.len(),
        invariants_pass: log.0.all_invariants_hold(),
    };
    FoStatus::Ok
}

/// Writes `runlog.csv` and the text reports into `dir`.
///
/// # Safety
/// `log` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fo_run_log_write(log: *const FoRunLog, dir: *const c_char) -> FoStatus {
    let Some(log) = log.as_ref() else {
        return fail(FoStatus::NullPointer, "log is null");
    };
    let dir = try_status!(str_arg(dir, "dir"));
    match export::write_outputs(&log.0, Path::new(dir)) {
        Ok(_) => FoStatus::Ok,
        Err(e) => fail(FoStatus::Io, e.to_string()),
    }
}
