//! Nine-state mobility automaton driven by fear bands.
//!
//! States are a provider slot (1..=3) crossed with an alert level
//! (base, `a`, `b`). Each step moves the alert level at most one notch toward
//! the level the fear band asks for and emits one of `S`, `M`, `I`, `C`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fear::FearIntensity;
use crate::route::ProviderId;

pub const SLOT_COUNT: u8 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdfaError {
    #[error("provider `{0}` is not mapped to an automaton slot")]
    UnmappedProvider(String),
    #[error("invalid thresholds: need 0 < th_low < th_mid < th_high < 1, got {0}, {1}, {2}")]
    InvalidThresholds(f64, f64, f64),
    #[error("slot {0} out of range 1..=3")]
    InvalidSlot(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot(u8);

impl Slot {
    pub fn new(n: u8) -> Result<Self, PdfaError> {
        if (1..=SLOT_COUNT).contains(&n) {
            Ok(Self(n))
        } else {
            Err(PdfaError::InvalidSlot(n))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlertLevel {
    Base,
    A,
    B,
}

impl AlertLevel {
    fn rank(self) -> u8 {
        match self {
            AlertLevel::Base => 0,
            AlertLevel::A => 1,
            AlertLevel::B => 2,
        }
    }

    fn from_rank(r: u8) -> Self {
        match r {
            0 => AlertLevel::Base,
            1 => AlertLevel::A,
            _ => AlertLevel::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PdfaState {
    pub slot: Slot,
    pub alert: AlertLevel,
}

impl PdfaState {
    pub fn new(slot: Slot, alert: AlertLevel) -> Self {
        Self { slot, alert }
    }

    pub fn base(slot: Slot) -> Self {
        Self::new(slot, AlertLevel::Base)
    }

    /// All nine states in `1, 1a, 1b, 2, ...` order.
    pub fn all() -> impl Iterator<Item = PdfaState> {
        (1..=SLOT_COUNT).flat_map(|s| {
            [AlertLevel::Base, AlertLevel::A, AlertLevel::B]
                .into_iter()
                .map(move |a| PdfaState::new(Slot(s), a))
        })
    }
}

impl fmt::Display for PdfaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.alert {
            AlertLevel::Base => "",
            AlertLevel::A => "a",
            AlertLevel::B => "b",
        };
        write!(f, "{}{}", self.slot.0, suffix)
    }
}

impl std::str::FromStr for PdfaState {
    type Err = PdfaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let digit = chars
            .next()
            .and_then(|c| c.to_digit(10))
            .ok_or(PdfaError::InvalidSlot(0))? as u8;
        let alert = match chars.as_str() {
            "" => AlertLevel::Base,
            "a" => AlertLevel::A,
            "b" => AlertLevel::B,
            _ => return Err(PdfaError::InvalidSlot(digit)),
        };
        Ok(PdfaState::new(Slot::new(digit)?, alert))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MobilitySymbol {
    /// Stay in the same state.
    S,
    /// Move between base and `a`, or from `b` back to `a`.
    M,
    /// Initiate optimisation (`a` to `b`).
    I,
    /// Spectrum handover.
    C,
}

impl fmt::Display for MobilitySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MobilitySymbol::S => "S",
            MobilitySymbol::M => "M",
            MobilitySymbol::I => "I",
            MobilitySymbol::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FearBand {
    B0,
    B1,
    B2,
    B3,
}

impl FearBand {
    fn target_alert(self) -> AlertLevel {
        match self {
            FearBand::B0 => AlertLevel::Base,
            FearBand::B1 => AlertLevel::A,
            FearBand::B2 | FearBand::B3 => AlertLevel::B,
        }
    }
}

impl fmt::Display for FearBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdfaConfig {
    pub th_low: f64,
    pub th_mid: f64,
    pub th_high: f64,
}

impl Default for PdfaConfig {
    fn default() -> Self {
        Self {
            th_low: 0.4,
            th_mid: 0.6,
            th_high: 0.8,
        }
    }
}

impl PdfaConfig {
    pub fn new(th_low: f64, th_mid: f64, th_high: f64) -> Result<Self, PdfaError> {
        let cfg = Self {
            th_low,
            th_mid,
            th_high,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PdfaError> {
        let Self {
            th_low,
            th_mid,
            th_high,
        } = *self;
        if 0.0 < th_low && th_low < th_mid && th_mid < th_high && th_high < 1.0 {
            Ok(())
        } else {
            Err(PdfaError::InvalidThresholds(th_low, th_mid, th_high))
        }
    }
}

/// `B0 = [0, low)`, `B1 = [low, mid)`, `B2 = [mid, high]`, `B3 = (high, 1]`.
pub fn classify(f: FearIntensity, cfg: &PdfaConfig) -> FearBand {
    let f = f.value();
    if f < cfg.th_low {
        FearBand::B0
    } else if f < cfg.th_mid {
        FearBand::B1
    } else if f <= cfg.th_high {
        FearBand::B2
    } else {
        FearBand::B3
    }
}

pub fn step(state: PdfaState, f: FearIntensity, cfg: &PdfaConfig) -> (PdfaState, MobilitySymbol) {
    let band = classify(f, cfg);
    if band == FearBand::B3 && state.alert == AlertLevel::B {
        return (state, MobilitySymbol::C);
    }
    let from = state.alert.rank();
    let target = band.target_alert().rank();
    let to = match target.cmp(&from) {
        std::cmp::Ordering::Greater => from + 1,
        std::cmp::Ordering::Less => from - 1,
        std::cmp::Ordering::Equal => from,
    };
    let next = PdfaState::new(state.slot, AlertLevel::from_rank(to));
    let symbol = match (from, to) {
        (a, b) if a == b => MobilitySymbol::S,
        (1, 2) => MobilitySymbol::I,
        _ => MobilitySymbol::M,
    };
    (next, symbol)
}

/// Base state of the slot the handover landed on.
pub fn complete_handover(_state: PdfaState, new_slot: Slot) -> PdfaState {
    PdfaState::base(new_slot)
}

/// Assignment of providers to the three automaton slots.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotMap {
    slots: BTreeMap<ProviderId, Slot>,
}

impl SlotMap {
    /// Maps the first three providers onto slots 1, 2, 3 in order.
    pub fn from_providers(providers: &[ProviderId]) -> Self {
        let slots = providers
            .iter()
            .take(SLOT_COUNT as usize)
            .enumerate()
            .map(|(i, p)| (p.clone(), Slot(i as u8 + 1)))
            .collect();
        Self { slots }
    }

    pub fn insert(&mut self, provider: ProviderId, slot: Slot) {
        self.slots.retain(|_, s| *s != slot);
        self.slots.insert(provider, slot);
    }

    pub fn slot_of(&self, provider: &ProviderId) -> Option<Slot> {
        self.slots.get(provider).copied()
    }

    pub fn provider_in(&self, slot: Slot) -> Option<&ProviderId> {
        self.slots.iter().find(|(_, s)| **s == slot).map(|(p, _)| p)
    }

    /// Slot for a handover `from -> to`. An unmapped target takes over the
    /// slot being vacated; the returned flag reports that remap.
    pub fn adopt(&mut self, from: &ProviderId, to: &ProviderId) -> Result<(Slot, bool), PdfaError> {
        if let Some(slot) = self.slot_of(to) {
            return Ok((slot, false));
        }
        let vacated = self
            .slot_of(from)
            .ok_or_else(|| PdfaError::UnmappedProvider(from.to_string()))?;
        self.insert(to.clone(), vacated);
        Ok((vacated, true))
    }

    pub fn initial_state(&self, provider: &ProviderId) -> Result<PdfaState, PdfaError> {
        self.slot_of(provider)
            .map(PdfaState::base)
            .ok_or_else(|| PdfaError::UnmappedProvider(provider.to_string()))
    }
}

pub fn initial_state(provider: &ProviderId, slot_map: &SlotMap) -> Result<PdfaState, PdfaError> {
    slot_map.initial_state(provider)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(s: &str) -> PdfaState {
        s.parse().unwrap()
    }

    fn go(s: &str, f: f64) -> (String, MobilitySymbol) {
        let (n, sym) = step(st(s), FearIntensity::new(f), &PdfaConfig::default());
        (n.to_string(), sym)
    }

    #[test]
    fn classify_bands() {
        let c = PdfaConfig::default();
        let b = |f| classify(FearIntensity::new(f), &c);
        assert_eq!(b(0.25), FearBand::B0);
        assert_eq!(b(0.35), FearBand::B0);
        assert_eq!(b(0.4), FearBand::B1);
        assert_eq!(b(0.6), FearBand::B2);
        assert_eq!(b(0.8), FearBand::B2);
        assert_eq!(b(0.85), FearBand::B3);
        assert_eq!(b(0.0), FearBand::B0);
        assert_eq!(b(1.0), FearBand::B3);
    }

    #[test]
    fn table_rows() {
        use MobilitySymbol::*;
        assert_eq!(go("1", 0.5), ("1a".into(), M));
        assert_eq!(go("1a", 0.7), ("1b".into(), I));
        assert_eq!(go("1b", 0.9), ("1b".into(), C));
        assert_eq!(go("2b", 0.5), ("2a".into(), M));
        assert_eq!(go("3", 0.25), ("3".into(), S));
        assert_eq!(go("1a", 0.25), ("1".into(), M));
    }

    #[test]
    fn escalation_is_one_notch() {
        use MobilitySymbol::*;
        assert_eq!(go("1", 0.9), ("1a".into(), M));
        assert_eq!(go("1a", 0.9), ("1b".into(), I));
        assert_eq!(go("2", 0.7), ("2a".into(), M));
        assert_eq!(go("3b", 0.1), ("3a".into(), M));
    }

    #[test]
    fn state_display_roundtrip() {
        let names: Vec<String> = PdfaState::all().map(|s| s.to_string()).collect();
        assert_eq!(names, ["1", "1a", "1b", "2", "2a", "2b", "3", "3a", "3b"]);
        for n in &names {
            assert_eq!(&st(n).to_string(), n);
        }
        assert!("4".parse::<PdfaState>().is_err());
        assert!("1c".parse::<PdfaState>().is_err());
    }

    #[test]
    fn initial_states_follow_slot_map() {
        let providers: Vec<ProviderId> =
            ["SP1", "SP2", "SP3", "SP4"].map(ProviderId::from).to_vec();
        let map = SlotMap::from_providers(&providers);
        assert_eq!(initial_state(&providers[0], &map).unwrap().to_string(), "1");
        assert_eq!(initial_state(&providers[2], &map).unwrap().to_string(), "3");
        assert!(matches!(
            initial_state(&providers[3], &map),
            Err(PdfaError::UnmappedProvider(_))
        ));
    }

    #[test]
    fn handover_lands_on_base_state() {
        assert_eq!(
            complete_handover(st("1b"), Slot::new(2).unwrap()).to_string(),
            "2"
        );
        assert_eq!(
            complete_handover(st("2b"), Slot::new(3).unwrap()).to_string(),
            "3"
        );
        assert_eq!(
            complete_handover(st("2b"), Slot::new(2).unwrap()).to_string(),
            "2"
        );
    }

    #[test]
    fn unmapped_target_takes_vacated_slot() {
        let providers: Vec<ProviderId> = ["T", "U", "M", "Z"].map(ProviderId::from).to_vec();
        let mut map = SlotMap::from_providers(&providers);
        let (slot, remapped) = map.adopt(&providers[0], &providers[3]).unwrap();
        assert_eq!((slot.get(), remapped), (1, true));
        assert_eq!(map.slot_of(&providers[0]), None);
        assert_eq!(map.provider_in(slot), Some(&providers[3]));
        let (slot, remapped) = map.adopt(&providers[3], &providers[1]).unwrap();
        assert_eq!((slot.get(), remapped), (2, false));
    }

    #[test]
    fn thresholds_must_be_ordered() {
        assert!(PdfaConfig::new(0.4, 0.6, 0.8).is_ok());
        assert!(PdfaConfig::new(0.6, 0.4, 0.8).is_err());
        assert!(PdfaConfig::new(0.0, 0.4, 0.8).is_err());
        assert!(PdfaConfig::new(0.2, 0.4, 1.0).is_err());
    }
}
