//! Tick-driven vehicle simulation along a surveyed route.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crsite::{
    csm_dispatch, execute_handover, required_mobility_time, select_whitespace, sense, CrSiteError,
    CsmAction, HandoverAttempt, TimingModel, TimingPreset, WhiteSpacePool,
};
use crate::fear::{FearError, FearInputs, FearIntensity, FearModel, FearParams};
use crate::invariants::{self, InvariantReport};
use crate::pdfa::{
    classify, complete_handover, step, FearBand, MobilitySymbol, PdfaConfig, PdfaError, PdfaState,
    SlotMap,
};
use crate::route::{ProviderId, RouteDb, RouteError};

pub const DEFAULT_TICK_S: f64 = 0.5;
pub const DEFAULT_SPEED_MPS: f64 = 4.0;
pub const PATCH_M: f64 = 5.0;

const POSITION_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("vehicle already at the stop position")]
    RouteExhausted,
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Fear(#[from] FearError),
    #[error(transparent)]
    CrSite(#[from] CrSiteError),
    #[error(transparent)]
    Pdfa(#[from] PdfaError),
}

/// Appraisal constants held for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioInputs {
    pub prospect: bool,
    pub desirability: f64,
    pub comm_importance: f64,
    pub sor: f64,
    pub vtp: f64,
}

impl Default for ScenarioInputs {
    fn default() -> Self {
        Self {
            prospect: true,
            desirability: -1.0,
            comm_importance: 1.0,
            sor: 1.0,
            vtp: 1.0,
        }
    }
}

/// Deliberate defects used to exercise the invariant checkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Hand over to the weakest alternative instead of the selected one.
    WeakerTarget,
    /// Invert the feasibility verdict of every attempt.
    FlipSuccess,
    /// Drop fear by 0.3 once, on the second tick at or above the middle band.
    FearDip,
}

impl FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weaker_target" => Ok(Fault::WeakerTarget),
            "flip_success" => Ok(Fault::FlipSuccess),
            "fear_dip" => Ok(Fault::FearDip),
            other => Err(format!(
                "unknown fault `{other}` (expected weaker_target, flip_success or fear_dip)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub tick_s: f64,
    pub speed_mps: f64,
    pub patch_m: f64,
    pub start_m: f64,
    pub stop_m: f64,
    /// When set, the start is drawn uniformly from `[start_m, stop_m)`.
    pub start_seed: Option<u64>,
    pub initial_provider: ProviderId,
    pub fear: FearParams,
    pub pdfa: PdfaConfig,
    pub timing: TimingModel,
    pub inputs: ScenarioInputs,
    pub fault: Option<Fault>,
}

impl SimConfig {
    /// Whole route on `initial_provider`, default kinematics and average timing.
    pub fn for_route(db: &RouteDb, initial_provider: ProviderId) -> Self {
        Self {
            tick_s: DEFAULT_TICK_S,
            speed_mps: DEFAULT_SPEED_MPS,
            patch_m: PATCH_M,
            start_m: 0.0,
            stop_m: db.length_m(),
            start_seed: None,
            initial_provider,
            fear: FearParams::default(),
            pdfa: PdfaConfig::default(),
            timing: TimingPreset::Average.timing(),
            inputs: ScenarioInputs::default(),
            fault: None,
        }
    }

    pub fn validate(&self, db: &RouteDb) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.tick_s > 0.0 && self.tick_s.is_finite()) {
            return bad(format!("tick_s {} must be positive", self.tick_s));
        }
        if !(self.speed_mps > 0.0 && self.speed_mps.is_finite()) {
            return bad(format!("speed_mps {} must be positive", self.speed_mps));
        }
        if !(self.patch_m > 0.0 && self.patch_m.is_finite()) {
            return bad(format!("patch_m {} must be positive", self.patch_m));
        }
        let len = db.length_m();
        if !(0.0 <= self.start_m && self.start_m < self.stop_m && self.stop_m <= len + POSITION_EPS)
        {
            return bad(format!(
                "need 0 <= start_m < stop_m <= {len}, got start_m {} stop_m {}",
                self.start_m, self.stop_m
            ));
        }
        db.provider_index(&self.initial_provider)?;
        self.fear.validate()?;
        self.pdfa.validate()?;
        self.timing.validate()?;
        let inputs = FearInputs {
            distance_to_bssp_m: 0.0,
            signal_dbm: 0.0,
            comm_importance: self.inputs.comm_importance,
            sor: self.inputs.sor,
            vtp: self.inputs.vtp,
            prospect: self.inputs.prospect,
            desirability: self.inputs.desirability,
        };
        inputs.validate()?;
        Ok(())
    }
}

pub fn time_left(distance_m: f64, speed_mps: f64) -> f64 {
    distance_m / speed_mps
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub position_m: f64,
    pub provider: ProviderId,
    pub pdfa_state: PdfaState,
}

/// How an approach to one bad-signal point ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpisodeOutcome {
    HandedOver,
    /// Selection kept the in-use provider.
    Stayed,
    /// An attempt was made and judged infeasible.
    Failed,
    /// Passed without reaching a decision.
    Unattended,
}

impl EpisodeOutcome {
    pub fn is_loss(self) -> bool {
        matches!(self, EpisodeOutcome::Failed | EpisodeOutcome::Unattended)
    }
}

impl fmt::Display for EpisodeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub provider: ProviderId,
    pub bssp: String,
    pub closed_tick: usize,
    pub outcome: EpisodeOutcome,
    /// In-use signal at the decision point and at the point ahead, when a
    /// selection was made.
    pub decision_dbm: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickEvent {
    pub tick: usize,
    pub time_s: f64,
    pub position_m: f64,
    /// In-use provider when the tick began.
    pub provider: ProviderId,
    pub bssp: Option<String>,
    pub distance_to_bssp_m: Option<f64>,
    pub bssp_signal_dbm: Option<f64>,
    pub signal_now_dbm: f64,
    pub signal_future_dbm: f64,
    pub fear: FearIntensity,
    pub band: FearBand,
    pub state: PdfaState,
    pub symbol: MobilitySymbol,
    pub next_state: PdfaState,
    pub action: CsmAction,
    pub pool: Option<WhiteSpacePool>,
    pub selection: Option<ProviderId>,
    pub handover: Option<HandoverAttempt>,
    /// Episode closed during this tick.
    pub closed: Option<(String, EpisodeOutcome)>,
    pub remapped: bool,
    /// Automaton restarted at base before stepping.
    pub reset: bool,
}

impl TickEvent {
    pub fn handed_over(&self) -> bool {
        self.handover.as_ref().is_some_and(|h| h.success)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config: SimConfig,
    pub events: Vec<TickEvent>,
    pub episodes: Vec<EpisodeRecord>,
    pub invariants: Vec<InvariantReport>,
}

impl RunLog {
    pub fn attempts(&self) -> impl Iterator<Item = (usize, &HandoverAttempt)> {
        self.events
            .iter()
            .filter_map(|e| e.handover.as_ref().map(|h| (e.tick, h)))
    }

    pub fn handover_count(&self) -> usize {
        self.attempts().filter(|(_, h)| h.success).count()
    }

    pub fn all_invariants_hold(&self) -> bool {
        self.invariants.iter().all(InvariantReport::passed)
    }
}

#[derive(Debug, Clone)]
struct Episode {
    provider: ProviderId,
    index: usize,
    label: String,
    position_m: f64,
    resolution: Option<EpisodeOutcome>,
    last_selection: Option<ProviderId>,
    decision_dbm: Option<(f64, f64)>,
}

pub struct Simulation<'a> {
    cfg: SimConfig,
    db: &'a RouteDb,
    model: FearModel,
    slots: SlotMap,
    vehicle: VehicleState,
    tick: usize,
    episode: Option<Episode>,
    episodes: Vec<EpisodeRecord>,
    mid_ticks: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: SimConfig, db: &'a RouteDb) -> Result<Self, SimError> {
        let model = FearModel::new(cfg.fear)?;
        Self::with_fear_model(cfg, db, model)
    }

    pub fn with_fear_model(
        mut cfg: SimConfig,
        db: &'a RouteDb,
        model: FearModel,
    ) -> Result<Self, SimError> {
        cfg.validate(db)?;
        if let Some(seed) = cfg.start_seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            cfg.start_m = rng.random_range(cfg.start_m..cfg.stop_m);
        }
        let slots = SlotMap::from_providers(db.providers());
        let pdfa_state = slots.initial_state(&cfg.initial_provider)?;
        let vehicle = VehicleState {
            position_m: cfg.start_m,
            provider: cfg.initial_provider.clone(),
            pdfa_state,
        };
        Ok(Self {
            cfg,
            db,
            model,
            slots,
            vehicle,
            tick: 0,
            episode: None,
            episodes: Vec::new(),
            mid_ticks: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn vehicle(&self) -> &VehicleState {
        &self.vehicle
    }

    pub fn finished(&self) -> bool {
        self.vehicle.position_m >= self.cfg.stop_m - POSITION_EPS
    }

    fn close_episode(&mut self, outcome: EpisodeOutcome) -> Option<(String, EpisodeOutcome)> {
        let ep = self.episode.take()?;
        self.episodes.push(EpisodeRecord {
            provider: ep.provider,
            bssp: ep.label.clone(),
            closed_tick: self.tick,
            outcome,
            decision_dbm: ep.decision_dbm,
        });
        Some((ep.label, outcome))
    }

    fn appraise(
        &mut self,
        distance: Option<f64>,
        signal_dbm: f64,
    ) -> Result<FearIntensity, SimError> {
        let s = self.cfg.inputs;
        let fear = self.model.fear(&FearInputs {
            distance_to_bssp_m: distance.unwrap_or(f64::INFINITY),
            signal_dbm,
            comm_importance: s.comm_importance,
            sor: s.sor,
            vtp: s.vtp,
            prospect: s.prospect,
            desirability: s.desirability,
        })?;
        if self.cfg.fault == Some(Fault::FearDip) && fear.value() >= self.cfg.pdfa.th_mid {
            self.mid_ticks += 1;
            if self.mid_ticks == 2 {
                return Ok(FearIntensity::new(fear.value() - 0.3));
            }
        }
        Ok(fear)
    }

    fn weakest_alternative(pool: &WhiteSpacePool, in_use: &ProviderId) -> Option<ProviderId> {
        pool.entries()
            .iter()
            .filter(|(p, _)| p != in_use)
            .min_by(|a, b| a.1.future_dbm.total_cmp(&b.1.future_dbm))
            .map(|(p, _)| p.clone())
    }

    pub fn tick(&mut self) -> Result<TickEvent, SimError> {
        if self.finished() {
            return Err(SimError::RouteExhausted);
        }
        let step_m = self.cfg.speed_mps * self.cfg.tick_s;
        let pos = (self.vehicle.position_m + step_m).min(self.cfg.stop_m);
        self.vehicle.position_m = pos;
        let provider = self.vehicle.provider.clone();

        let mut closed = None;
        let mut reset = false;
        if self.episode.as_ref().is_some_and(|ep| ep.position_m <= pos) {
            let ep = self.episode.as_ref().expect("checked above");
            let outcome = ep.resolution.unwrap_or(match &ep.last_selection {
                Some(sel) if *sel == provider => EpisodeOutcome::Stayed,
                _ => EpisodeOutcome::Unattended,
            });
            closed = self.close_episode(outcome);
            let slot = self.vehicle.pdfa_state.slot;
            self.vehicle.pdfa_state = complete_handover(self.vehicle.pdfa_state, slot);
            reset = true;
        }

        let hit = self.db.next_bssp(pos, &provider)?;
        let (bssp, distance, bssp_signal) = match hit {
            Some(h) => {
                let signal = h.record.signals[self.db.provider_index(&provider)?];
                let same = self
                    .episode
                    .as_ref()
                    .is_some_and(|ep| ep.index == h.index && ep.provider == provider);
                if !same {
                    self.episode = Some(Episode {
                        provider: provider.clone(),
                        index: h.index,
                        label: h.record.label.clone(),
                        position_m: self.db.cumulative_m()[h.index],
                        resolution: None,
                        last_selection: None,
                        decision_dbm: None,
                    });
                }
                (
                    Some(h.record.label.clone()),
                    Some(h.distance_m),
                    Some(signal),
                )
            }
            None => (None, None, None),
        };

        let signal_now = self.db.current_signal(pos, &provider)?;
        let signal_future = self.db.future_signal(pos, &provider)?;
        let fear = self.appraise(distance, bssp_signal.unwrap_or(signal_now))?;
        let band = classify(fear, &self.cfg.pdfa);
        let state = self.vehicle.pdfa_state;
        let (mut next_state, symbol) = step(state, fear, &self.cfg.pdfa);
        let action = csm_dispatch(band);

        let pool = match action {
            CsmAction::KeepCurrent => None,
            _ => Some(sense(self.db, pos, self.db.providers())?),
        };
        let selection = match (&pool, action) {
            (Some(p), CsmAction::InitiateOptimizer | CsmAction::InitiateHandover) => {
                Some(select_whitespace(p, &provider)?)
            }
            _ => None,
        };
        if let (Some(ep), Some(sel), Some(p)) = (self.episode.as_mut(), &selection, &pool) {
            ep.last_selection = Some(sel.clone());
            ep.decision_dbm = p.get(&provider).map(|e| (e.current_dbm, e.future_dbm));
        }

        let mut handover = None;
        let mut remapped = false;
        let unresolved = self
            .episode
            .as_ref()
            .is_some_and(|ep| ep.resolution.is_none());
        if symbol == MobilitySymbol::C && unresolved {
            let pool = pool.as_ref().expect("B3 always senses");
            let sel = selection.clone().expect("B3 always selects");
            if sel != provider {
                let target = match self.cfg.fault {
                    Some(Fault::WeakerTarget) => {
                        Self::weakest_alternative(pool, &provider).unwrap_or(sel)
                    }
                    _ => sel,
                };
                let d = distance.expect("episode implies a target point");
                let mut attempt = execute_handover(
                    &provider,
                    &target,
                    time_left(d, self.cfg.speed_mps),
                    &self.cfg.timing,
                );
                if self.cfg.fault == Some(Fault::FlipSuccess) {
                    attempt.success = !attempt.success;
                }
                if attempt.success {
                    let (slot, remap) = self.slots.adopt(&provider, &target)?;
                    remapped = remap;
                    next_state = complete_handover(next_state, slot);
                    self.vehicle.provider = target;
                    closed = self.close_episode(EpisodeOutcome::HandedOver);
                } else {
                    self.episode
                        .as_mut()
                        .expect("unresolved episode")
                        .resolution = Some(EpisodeOutcome::Failed);
                }
                log::debug!(
                    "tick {}: {} -> {} time_left {:.3}s required {:.9}s success {}",
                    self.tick,
                    attempt.from,
                    attempt.to,
                    attempt.time_left_s,
                    attempt.required_s,
                    attempt.success
                );
                handover = Some(attempt);
            }
        }
        self.vehicle.pdfa_state = next_state;

        let event = TickEvent {
            tick: self.tick,
            time_s: (self.tick + 1) as f64 * self.cfg.tick_s,
            position_m: pos,
            provider,
            bssp,
            distance_to_bssp_m: distance,
            bssp_signal_dbm: bssp_signal,
            signal_now_dbm: signal_now,
            signal_future_dbm: signal_future,
            fear,
            band,
            state,
            symbol,
            next_state,
            action,
            pool,
            selection,
            handover,
            closed,
            remapped,
            reset,
        };
        self.tick += 1;
        Ok(event)
    }

    pub fn run(mut self) -> Result<RunLog, SimError> {
        let mut events = Vec::new();
        while !self.finished() {
            events.push(self.tick()?);
        }
        let invariants = invariants::check_all(&events);
        Ok(RunLog {
            config: self.cfg,
            events,
            episodes: self.episodes,
            invariants,
        })
    }
}

pub fn run(cfg: SimConfig, db: &RouteDb) -> Result<RunLog, SimError> {
    Simulation::new(cfg, db)?.run()
}

/// Distances, in patches, of the ten reference handover attempts.
pub const REFERENCE_DISTANCES_PATCHES: [f64; 10] =
    [1.0, 9.0, 13.0, 3.0, 2.0, 5.0, 3.0, 2.0, 10.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub distance_patches: f64,
    pub attempt: HandoverAttempt,
}

/// Feasibility of each reference attempt under one timing preset.
pub fn replay_reference(preset: TimingPreset) -> Vec<ReplayRow> {
    let timing = preset.timing();
    let (from, to) = (ProviderId::from("in-use"), ProviderId::from("target"));
    REFERENCE_DISTANCES_PATCHES
        .iter()
        .map(|&p| ReplayRow {
            distance_patches: p,
            attempt: execute_handover(
                &from,
                &to,
                time_left(p * PATCH_M, DEFAULT_SPEED_MPS),
                &timing,
            ),
        })
        .collect()
}

pub fn required_for(preset: TimingPreset) -> f64 {
    required_mobility_time(&preset.timing())
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_POINTS: &str = "label,lat,lon,P,Q\n\
        A,33.144552,73.745719,-60,-60\n\
        B,33.144449,73.745606,-90,-50\n\
        C,33.144377,73.745550,-60,-60\n";

    fn db() -> RouteDb {
        RouteDb::load_csv(THREE_POINTS.as_bytes()).unwrap()
    }

    #[test]
    fn time_left_examples() {
        assert_eq!(time_left(5.0, 4.0), 1.25);
        assert_eq!(time_left(45.0, 4.0), 11.25);
        assert_eq!(time_left(0.0, 7.0), 0.0);
    }

    #[test]
    fn reference_replay_counts() {
        let ok = |p| {
            replay_reference(p)
                .iter()
                .filter(|r| r.attempt.success)
                .count()
        };
        assert_eq!(ok(TimingPreset::Worst), 4);
        assert_eq!(ok(TimingPreset::Average), 9);
        assert_eq!(ok(TimingPreset::Best), 10);
    }

    #[test]
    fn tick_after_stop_is_exhausted() {
        let db = db();
        let mut cfg = SimConfig::for_route(&db, "P".into());
        cfg.start_m = cfg.stop_m - 0.5;
        let mut sim = Simulation::new(cfg, &db).unwrap();
        sim.tick().unwrap();
        assert!(matches!(sim.tick(), Err(SimError::RouteExhausted)));
    }

    #[test]
    fn one_tick_run() {
        let db = db();
        let mut cfg = SimConfig::for_route(&db, "P".into());
        cfg.start_m = cfg.stop_m - 1e-3;
        assert_eq!(run(cfg, &db).unwrap().events.len(), 1);
    }

    #[test]
    fn config_validation() {
        let db = db();
        let base = SimConfig::for_route(&db, "P".into());
        let mut c = base.clone();
        c.tick_s = 0.0;
        assert!(c.validate(&db).is_err());
        let mut c = base.clone();
        c.start_m = c.stop_m;
        assert!(c.validate(&db).is_err());
        let mut c = base.clone();
        c.initial_provider = "X".into();
        assert!(c.validate(&db).is_err());
        let mut c = base;
        c.inputs.sor = 2.0;
        assert!(c.validate(&db).is_err());
    }

    #[test]
    fn seeded_start_is_reproducible() {
        let db = db();
        let mut cfg = SimConfig::for_route(&db, "P".into());
        cfg.start_seed = Some(7);
        let a = Simulation::new(cfg.clone(), &db)
            .unwrap()
            .vehicle()
            .position_m;
        let b = Simulation::new(cfg.clone(), &db)
            .unwrap()
            .vehicle()
            .position_m;
        assert_eq!(a, b);
        assert!((0.0..cfg.stop_m).contains(&a));
    }

    #[test]
    fn far_from_bad_point_is_calm() {
        let db = db();
        let mut cfg = SimConfig::for_route(&db, "Q".into());
        cfg.start_m = 0.0;
        // Q has no bad point at all
        let log = run(cfg, &db).unwrap();
        for e in &log.events {
            assert_eq!(e.band, FearBand::B0);
            assert_eq!(e.action, CsmAction::KeepCurrent);
            assert_eq!(e.symbol, MobilitySymbol::S);
            assert!(e.fear.value() < 0.05);
        }
    }
}
