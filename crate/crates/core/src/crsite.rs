//! CR-Site facade: timing constants, CSM dispatch, white-space sensing and
//! selection, and handover feasibility.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pdfa::FearBand;
use crate::route::{ProviderId, RouteDb, RouteError};

pub const MEGAOT_S: f64 = 0.527e-6;

#[derive(Debug, Error)]
pub enum CrSiteError {
    #[error("white-space pool is empty")]
    EmptyPool,
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
    #[error("unknown timing preset `{0}` (expected worst, average or best)")]
    UnknownPreset(String),
    #[error(transparent)]
    Route(#[from] RouteError),
}

/// Latencies of one spectrum-mobility task, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingModel {
    pub crst_s: f64,
    pub megaot_s: f64,
    pub hot_s: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingPreset::Average.timing()
    }
}

impl TimingModel {
    pub fn new(crst_s: f64, megaot_s: f64, hot_s: f64) -> Result<Self, CrSiteError> {
        let t = Self {
            crst_s,
            megaot_s,
            hot_s,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), CrSiteError> {
        for (name, v) in [
            ("crst_s", self.crst_s),
            ("megaot_s", self.megaot_s),
            ("hot_s", self.hot_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CrSiteError::InvalidTiming(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingPreset {
    Worst,
    Average,
    Best,
}

impl TimingPreset {
    pub const ALL: [TimingPreset; 3] = [
        TimingPreset::Worst,
        TimingPreset::Average,
        TimingPreset::Best,
    ];

    pub fn timing(self) -> TimingModel {
        let (crst_s, hot_s) = match self {
            TimingPreset::Worst => (0.2, 5.0),
            TimingPreset::Average => (0.1, 2.0),
            TimingPreset::Best => (0.05, 1.0),
        };
        TimingModel {
            crst_s,
            megaot_s: MEGAOT_S,
            hot_s,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimingPreset::Worst => "worst",
            TimingPreset::Average => "average",
            TimingPreset::Best => "best",
        }
    }
}

impl fmt::Display for TimingPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimingPreset {
    type Err = CrSiteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "worst" => Ok(TimingPreset::Worst),
            "average" => Ok(TimingPreset::Average),
            "best" => Ok(TimingPreset::Best),
            other => Err(CrSiteError::UnknownPreset(other.to_string())),
        }
    }
}

pub fn required_mobility_time(t: &TimingModel) -> f64 {
    t.crst_s + t.megaot_s + t.hot_s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CsmAction {
    KeepCurrent,
    InitiateSensing,
    InitiateOptimizer,
    InitiateHandover,
}

impl fmt::Display for CsmAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for CsmAction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "KeepCurrent" => Ok(CsmAction::KeepCurrent),
            "InitiateSensing" => Ok(CsmAction::InitiateSensing),
            "InitiateOptimizer" => Ok(CsmAction::InitiateOptimizer),
            "InitiateHandover" => Ok(CsmAction::InitiateHandover),
            other => Err(format!("unknown action `{other}`")),
        }
    }
}

pub fn csm_dispatch(band: FearBand) -> CsmAction {
    match band {
        FearBand::B0 => CsmAction::KeepCurrent,
        FearBand::B1 => CsmAction::InitiateSensing,
        FearBand::B2 => CsmAction::InitiateOptimizer,
        FearBand::B3 => CsmAction::InitiateHandover,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolEntry {
    pub current_dbm: f64,
    pub future_dbm: f64,
}

/// White spaces seen at one position, in database provider order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WhiteSpacePool {
    entries: Vec<(ProviderId, PoolEntry)>,
}

impl WhiteSpacePool {
    pub fn new(entries: Vec<(ProviderId, PoolEntry)>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[(ProviderId, PoolEntry)] {
        &self.entries
    }

    pub fn get(&self, provider: &ProviderId) -> Option<PoolEntry> {
        self.entries
            .iter()
            .find(|(p, _)| p == provider)
            .map(|(_, e)| *e)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_future_dbm(&self) -> Option<f64> {
        self.entries
            .iter()
            .map(|(_, e)| e.future_dbm)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    /// `P:cur/fut;...` form used in run logs.
    pub fn encode(&self) -> String {
        self.entries
            .iter()
            .map(|(p, e)| format!("{p}:{}/{}", e.current_dbm, e.future_dbm))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn decode(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            return Ok(Self::default());
        }
        let mut entries = Vec::new();
        for part in s.split(';') {
            let (name, vals) = part
                .rsplit_once(':')
                .ok_or_else(|| format!("bad pool entry `{part}`"))?;
            let (cur, fut) = vals
                .split_once('/')
                .ok_or_else(|| format!("bad pool entry `{part}`"))?;
            let num = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
            entries.push((
                ProviderId::from(name),
                PoolEntry {
                    current_dbm: num(cur)?,
                    future_dbm: num(fut)?,
                },
            ));
        }
        Ok(Self { entries })
    }
}

/// Current signal at the last passed point and future signal at the next
/// point ahead, for every provider. Past the final point future equals current.
pub fn sense(
    db: &RouteDb,
    position_m: f64,
    providers: &[ProviderId],
) -> Result<WhiteSpacePool, CrSiteError> {
    let mut entries = Vec::with_capacity(providers.len());
    for p in providers {
        entries.push((
            p.clone(),
            PoolEntry {
                current_dbm: db.current_signal(position_m, p)?,
                future_dbm: db.future_signal(position_m, p)?,
            },
        ));
    }
    Ok(WhiteSpacePool::new(entries))
}

/// Chooses a white space from a sensed pool.
pub trait WhiteSpaceOptimizer {
    fn select(&self, pool: &WhiteSpacePool, in_use: &ProviderId)
        -> Result<ProviderId, CrSiteError>;
}

/// Strongest future signal wins; ties and non-improvements keep `in_use`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxFutureSignal;

impl WhiteSpaceOptimizer for MaxFutureSignal {
    fn select(
        &self,
        pool: &WhiteSpacePool,
        in_use: &ProviderId,
    ) -> Result<ProviderId, CrSiteError> {
        let mut best: Option<(&ProviderId, f64)> = None;
        for (p, e) in pool.entries() {
            if best.is_none_or(|(_, b)| e.future_dbm > b) {
                best = Some((p, e.future_dbm));
            }
        }
        let (best_p, best_f) = best.ok_or(CrSiteError::EmptyPool)?;
        match pool.get(in_use) {
            Some(cur) if cur.future_dbm >= best_f => Ok(in_use.clone()),
            _ => Ok(best_p.clone()),
        }
    }
}

pub fn select_whitespace(
    pool: &WhiteSpacePool,
    in_use: &ProviderId,
) -> Result<ProviderId, CrSiteError> {
    MaxFutureSignal.select(pool, in_use)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoverAttempt {
    pub from: ProviderId,
    pub to: ProviderId,
    pub required_s: f64,
    pub time_left_s: f64,
    pub success: bool,
}

pub fn execute_handover(
    from: &ProviderId,
    to: &ProviderId,
    time_left_s: f64,
    t: &TimingModel,
) -> HandoverAttempt {
    if from == to {
        return HandoverAttempt {
            from: from.clone(),
            to: to.clone(),
            required_s: 0.0,
            time_left_s,
            success: true,
        };
    }
    let required_s = required_mobility_time(t);
    HandoverAttempt {
        from: from.clone(),
        to: to.clone(),
        required_s,
        time_left_s,
        success: time_left_s > required_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SURVEY_HEAD: &str = "label,lat,lon,SP1,SP2,SP3\n\
        A,33.144552,73.745719,-100,-90,-80\n\
        B,33.144449,73.745606,-60,-70,-50\n\
        C,33.144377,73.745550,-50,-60,-50\n";

    fn pid(s: &str) -> ProviderId {
        ProviderId::from(s)
    }

    fn pool(items: &[(&str, f64)]) -> WhiteSpacePool {
        WhiteSpacePool::new(
            items
                .iter()
                .map(|&(p, f)| {
                    (
                        pid(p),
                        PoolEntry {
                            current_dbm: f,
                            future_dbm: f,
                        },
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn preset_required_times() {
        let r = |p: TimingPreset| required_mobility_time(&p.timing());
        assert!((r(TimingPreset::Worst) - 5.200000527).abs() < 1e-12);
        assert!((r(TimingPreset::Average) - 2.100000527).abs() < 1e-12);
        assert!((r(TimingPreset::Best) - 1.050000527).abs() < 1e-12);
        assert_eq!(
            "Worst".parse::<TimingPreset>().unwrap(),
            TimingPreset::Worst
        );
        assert!("custom".parse::<TimingPreset>().is_err());
    }

    #[test]
    fn negative_timing_rejected() {
        assert!(TimingModel::new(-0.1, 0.0, 1.0).is_err());
        assert!(TimingModel::new(0.1, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn dispatch_rules() {
        assert_eq!(csm_dispatch(FearBand::B0), CsmAction::KeepCurrent);
        assert_eq!(csm_dispatch(FearBand::B1), CsmAction::InitiateSensing);
        assert_eq!(csm_dispatch(FearBand::B2), CsmAction::InitiateOptimizer);
        assert_eq!(csm_dispatch(FearBand::B3), CsmAction::InitiateHandover);
    }

    #[test]
    fn sense_at_first_point() {
        let db = RouteDb::load_csv(SURVEY_HEAD.as_bytes()).unwrap();
        let p = sense(&db, 0.0, db.providers()).unwrap();
        let got: Vec<(f64, f64)> = p
            .entries()
            .iter()
            .map(|(_, e)| (e.current_dbm, e.future_dbm))
            .collect();
        assert_eq!(got, [(-100.0, -60.0), (-90.0, -70.0), (-80.0, -50.0)]);
        let end = sense(&db, db.length_m(), db.providers()).unwrap();
        for (_, e) in end.entries() {
            assert_eq!(e.current_dbm, e.future_dbm);
        }
    }

    #[test]
    fn selection_rules() {
        let t = pid("Telenor");
        assert_eq!(
            select_whitespace(&pool(&[("Telenor", -70.0), ("Zong", -50.0)]), &t).unwrap(),
            pid("Zong")
        );
        let u = pid("Ufone");
        let p = pool(&[
            ("Telenor", -88.0),
            ("Ufone", -65.0),
            ("Mobilink", -80.0),
            ("Zong", -90.0),
        ]);
        assert_eq!(select_whitespace(&p, &u).unwrap(), u);
        let eq = pool(&[("A", -60.0), ("B", -60.0), ("C", -60.0)]);
        assert_eq!(select_whitespace(&eq, &pid("B")).unwrap(), pid("B"));
        assert!(matches!(
            select_whitespace(&WhiteSpacePool::default(), &t),
            Err(CrSiteError::EmptyPool)
        ));
    }

    #[test]
    fn handover_feasibility() {
        let (a, b) = (pid("a"), pid("b"));
        let worst = TimingPreset::Worst.timing();
        assert!(!execute_handover(&a, &b, 1.25, &worst).success);
        assert!(execute_handover(&a, &b, 11.25, &worst).success);
        assert!(execute_handover(&a, &b, 11.25, &TimingPreset::Best.timing()).success);
        let stay = execute_handover(&a, &a, 0.0, &worst);
        assert!(stay.success);
        assert_eq!(stay.required_s, 0.0);
    }

    #[test]
    fn pool_encoding_roundtrip() {
        let p = pool(&[("SP1", -60.5), ("SP2", -70.0)]);
        assert_eq!(WhiteSpacePool::decode(&p.encode()).unwrap(), p);
        assert!(WhiteSpacePool::decode("").unwrap().is_empty());
    }
}
