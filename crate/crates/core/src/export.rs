//! Run-log CSV and text reports.
//!
//! `runlog.csv` has one row per tick with the columns of [`LogRow`], in that
//! order. Empty cells mean "not applicable". The `pool` cell lists
//! `provider:current/future` entries separated by `;`.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crsite::{CsmAction, HandoverAttempt, WhiteSpacePool};
use crate::fear::FearIntensity;
use crate::pdfa::{FearBand, MobilitySymbol, PdfaState};
use crate::route::ProviderId;
use crate::sim::{EpisodeOutcome, RunLog, TickEvent};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub tick: usize,
    pub time_s: f64,
    pub position_m: f64,
    pub provider: String,
    pub bssp: Option<String>,
    pub distance_m: Option<f64>,
    pub bssp_signal_dbm: Option<f64>,
    pub signal_now_dbm: f64,
    pub signal_future_dbm: f64,
    pub fear: f64,
    pub band: FearBand,
    pub state: String,
    pub symbol: MobilitySymbol,
    pub next_state: String,
    pub action: CsmAction,
    pub pool: String,
    pub selection: Option<String>,
    pub attempt_to: Option<String>,
    pub required_s: Option<f64>,
    pub time_left_s: Option<f64>,
    pub success: Option<bool>,
    pub closed_bssp: Option<String>,
    pub outcome: Option<EpisodeOutcome>,
    pub remapped: bool,
    pub reset: bool,
}

impl From<&TickEvent> for LogRow {
    fn from(e: &TickEvent) -> Self {
        Self {
            tick: e.tick,
            time_s: e.time_s,
            position_m: e.position_m,
            provider: e.provider.to_string(),
            bssp: e.bssp.clone(),
            distance_m: e.distance_to_bssp_m,
            bssp_signal_dbm: e.bssp_signal_dbm,
            signal_now_dbm: e.signal_now_dbm,
            signal_future_dbm: e.signal_future_dbm,
            fear: e.fear.value(),
            band: e.band,
            state: e.state.to_string(),
            symbol: e.symbol,
            next_state: e.next_state.to_string(),
            action: e.action,
            pool: e
                .pool
                .as_ref()
                .map(WhiteSpacePool::encode)
                .unwrap_or_default(),
            selection: e.selection.as_ref().map(ToString::to_string),
            attempt_to: e.handover.as_ref().map(|h| h.to.to_string()),
            required_s: e.handover.as_ref().map(|h| h.required_s),
            time_left_s: e.handover.as_ref().map(|h| h.time_left_s),
            success: e.handover.as_ref().map(|h| h.success),
            closed_bssp: e.closed.as_ref().map(|c| c.0.clone()),
            outcome: e.closed.as_ref().map(|c| c.1),
            remapped: e.remapped,
            reset: e.reset,
        }
    }
}

impl LogRow {
    fn into_event(self, row: usize) -> Result<TickEvent, ExportError> {
        let bad = |reason: String| ExportError::BadRow { row, reason };
        let state: PdfaState = self.state.parse().map_err(|e| bad(format!("state: {e}")))?;
        let next_state: PdfaState = self
            .next_state
            .parse()
            .map_err(|e| bad(format!("next_state: {e}")))?;
        let pool = if self.pool.is_empty() {
            None
        } else {
            Some(WhiteSpacePool::decode(&self.pool).map_err(bad)?)
        };
        let provider = ProviderId::new(self.provider);
        let handover = match (
            self.attempt_to,
            self.required_s,
            self.time_left_s,
            self.success,
        ) {
            (Some(to), Some(required_s), Some(time_left_s), Some(success)) => {
                Some(HandoverAttempt {
                    from: provider.clone(),
                    to: ProviderId::new(to),
                    required_s,
                    time_left_s,
                    success,
                })
            }
            (None, None, None, None) => None,
            _ => return Err(bad("incomplete attempt columns".into())),
        };
        let closed = match (self.closed_bssp, self.outcome) {
            (Some(b), Some(o)) => Some((b, o)),
            (None, None) => None,
            _ => return Err(bad("incomplete episode columns".into())),
        };
        Ok(TickEvent {
            tick: self.tick,
            time_s: self.time_s,
            position_m: self.position_m,
            provider,
            bssp: self.bssp,
            distance_to_bssp_m: self.distance_m,
            bssp_signal_dbm: self.bssp_signal_dbm,
            signal_now_dbm: self.signal_now_dbm,
            signal_future_dbm: self.signal_future_dbm,
            fear: FearIntensity::new(self.fear),
            band: self.band,
            state,
            symbol: self.symbol,
            next_state,
            action: self.action,
            pool,
            selection: self.selection.map(ProviderId::new),
            handover,
            closed,
            remapped: self.remapped,
            reset: self.reset,
        })
    }
}

pub fn write_runlog<W: Write>(events: &[TickEvent], sink: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(sink);
    for e in events {
        w.serialize(LogRow::from(e))?;
    }
    w.flush().map_err(|source| ExportError::Io {
        path: PathBuf::from("<runlog>"),
        source,
    })?;
    Ok(())
}

pub fn read_runlog<R: Read>(source: R) -> Result<Vec<TickEvent>, ExportError> {
    let mut r = csv::Reader::from_reader(source);
    let mut events = Vec::new();
    for (i, row) in r.deserialize::<LogRow>().enumerate() {
        events.push(row?.into_event(i + 1)?);
    }
    Ok(events)
}

pub fn runlog_string(events: &[TickEvent]) -> Result<String, ExportError> {
    let mut buf = Vec::new();
    write_runlog(events, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn summary_text(log: &RunLog) -> String {
    let c = &log.config;
    let mut s = String::new();
    let _ = writeln!(s, "ticks: {}", log.events.len());
    let _ = writeln!(
        s,
        "route: {:.3} m -> {:.3} m at {} m/s, tick {} s",
        c.start_m, c.stop_m, c.speed_mps, c.tick_s
    );
    let _ = writeln!(s, "initial provider: {}", c.initial_provider);
    let _ = writeln!(
        s,
        "timing: crst {} s, megaot {} s, hot {} s",
        c.timing.crst_s, c.timing.megaot_s, c.timing.hot_s
    );
    let attempts: Vec<_> = log.attempts().collect();
    let ok = attempts.iter().filter(|(_, h)| h.success).count();
    let _ = writeln!(
        s,
        "handover attempts: {} (success {}, failure {})",
        attempts.len(),
        ok,
        attempts.len() - ok
    );
    let losses = log.episodes.iter().filter(|e| e.outcome.is_loss()).count();
    let _ = writeln!(
        s,
        "episodes: {} (communication loss {})",
        log.episodes.len(),
        losses
    );
    for ep in &log.episodes {
        let _ = write!(
            s,
            "  tick {:>4} {} @ {}: {}",
            ep.closed_tick, ep.provider, ep.bssp, ep.outcome
        );
        if let Some((now, fut)) = ep.decision_dbm {
            let _ = write!(s, " ({now} -> {fut} dBm)");
        }
        s.push('\n');
    }
    for (tick, h) in &attempts {
        let _ = writeln!(
            s,
            "  attempt tick {:>4} {} -> {} time_left {} s required {} s {}",
            tick,
            h.from,
            h.to,
            h.time_left_s,
            h.required_s,
            if h.success { "ok" } else { "failed" }
        );
    }
    let remaps = log.events.iter().filter(|e| e.remapped).count();
    if remaps > 0 {
        let _ = writeln!(s, "slot remaps: {remaps}");
    }
    let _ = writeln!(
        s,
        "invariants: {}",
        if log.all_invariants_hold() {
            "all pass"
        } else {
            "FAILED"
        }
    );
    s
}

pub fn invariants_text(log: &RunLog) -> String {
    let mut s = String::new();
    for r in &log.invariants {
        let _ = writeln!(s, "{r}");
    }
    s
}

/// `tick,provider,bssp,distance_m,distance_patches,fear` for every tick with a
/// target ahead.
pub fn fear_vs_distance_csv(log: &RunLog) -> String {
    let mut s = String::from("tick,provider,bssp,distance_m,distance_patches,fear\n");
    for e in &log.events {
        if let (Some(b), Some(d)) = (&e.bssp, e.distance_to_bssp_m) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                e.tick,
                e.provider,
                b,
                d,
                d / log.config.patch_m,
                e.fear.value()
            );
        }
    }
    s
}

pub fn attempts_csv(log: &RunLog) -> String {
    let mut s = String::from("tick,from,to,distance_patches,time_left_s,required_s,success\n");
    for e in &log.events {
        if let Some(h) = &e.handover {
            let d = e.distance_to_bssp_m.unwrap_or(0.0) / log.config.patch_m;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                e.tick, h.from, h.to, d, h.time_left_s, h.required_s, h.success
            );
        }
    }
    s
}

pub const OUTPUT_FILES: [&str; 5] = [
    "runlog.csv",
    "summary.txt",
    "invariants.txt",
    "fear_vs_distance.csv",
    "attempts.csv",
];

/// Writes every report into `dir`, creating it when missing.
pub fn write_outputs(log: &RunLog, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExportError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let contents = [
        runlog_string(&log.events)?,
        summary_text(log),
        invariants_text(log),
        fear_vs_distance_csv(log),
        attempts_csv(log),
    ];
    let mut written = Vec::new();
    for (name, body) in OUTPUT_FILES.iter().zip(contents) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
