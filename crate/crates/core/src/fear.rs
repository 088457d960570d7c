//! Prospect-based fear appraisal.
//!
//! Three two-input fuzzy subsystems produce likelihood, undesirability and
//! global intensity. Their combination is the fear potential; subtracting the
//! fear threshold yields the fear intensity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{
    monotone_grid_rules, Conjunction, Defuzzifier, FuzzyError, FuzzySystem, Implication,
    InputPolicy, LinguisticVariable, RuleBase,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FearError {
    #[error("invalid fear parameters: {0}")]
    InvalidParams(String),
    #[error("invalid appraisal inputs: {0}")]
    InvalidInputs(String),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    #[default]
    Mean,
    Min,
    Product,
}

impl Combiner {
    pub fn combine(self, undesirability: f64, likelihood: f64, ig: f64) -> f64 {
        match self {
            Combiner::Mean => (undesirability + likelihood + ig) / 3.0,
            Combiner::Min => undesirability.min(likelihood).min(ig),
            Combiner::Product => undesirability * likelihood * ig,
        }
    }
}

impl std::str::FromStr for Combiner {
    type Err = FearError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Combiner::Mean),
            "min" => Ok(Combiner::Min),
            "product" => Ok(Combiner::Product),
            other => Err(FearError::InvalidParams(format!(
                "unknown combiner `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FearParams {
    pub fear_threshold: f64,
    pub combiner: Combiner,
    /// Distance at which a bad-signal point stops being perceived.
    #[serde(rename = "distance_horizon_m")]
    pub distance_horizon: f64,
    pub signal_floor_dbm: f64,
    pub signal_ceiling_dbm: f64,
}

impl Default for FearParams {
    fn default() -> Self {
        Self {
            fear_threshold: 0.0,
            combiner: Combiner::Mean,
            distance_horizon: 75.0,
            signal_floor_dbm: -100.0,
            signal_ceiling_dbm: -30.0,
        }
    }
}

impl FearParams {
    pub fn validate(&self) -> Result<(), FearError> {
        if !(0.0..=1.0).contains(&self.fear_threshold) {
            return Err(FearError::InvalidParams(format!(
                "fear_threshold {} not in [0, 1]",
                self.fear_threshold
            )));
        }
        if !(self.distance_horizon > 0.0 && self.distance_horizon.is_finite()) {
            return Err(FearError::InvalidParams(format!(
                "distance_horizon_m {} must be positive",
                self.distance_horizon
            )));
        }
        if self.signal_floor_dbm.partial_cmp(&self.signal_ceiling_dbm)
            != Some(std::cmp::Ordering::Less)
        {
            return Err(FearError::InvalidParams(format!(
                "signal_floor_dbm {} must be below signal_ceiling_dbm {}",
                self.signal_floor_dbm, self.signal_ceiling_dbm
            )));
        }
        Ok(())
    }
}

/// Appraisal state for one agent, event and tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FearInputs {
    /// Distance to the bad-signal point ahead, meters. `f64::INFINITY` when
    /// none lies ahead.
    pub distance_to_bssp_m: f64,
    /// In-use provider's signal at that bad-signal point, dBm.
    pub signal_dbm: f64,
    pub comm_importance: f64,
    pub sor: f64,
    pub vtp: f64,
    pub prospect: bool,
    pub desirability: f64,
}

impl FearInputs {
    pub fn validate(&self) -> Result<(), FearError> {
        for (name, v) in [
            ("comm_importance", self.comm_importance),
            ("sor", self.sor),
            ("vtp", self.vtp),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(FearError::InvalidInputs(format!(
                    "{name} {v} not in [0, 1]"
                )));
            }
        }
        if !(-1.0..=1.0).contains(&self.desirability) {
            return Err(FearError::InvalidInputs(format!(
                "desirability {} not in [-1, 1]",
                self.desirability
            )));
        }
        if self.distance_to_bssp_m.is_nan() || self.distance_to_bssp_m < 0.0 {
            return Err(FearError::InvalidInputs(format!(
                "distance {} must be >= 0",
                self.distance_to_bssp_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct FearIntensity(f64);

impl FearIntensity {
    pub fn new(value: f64) -> Self {
        Self(if value.is_nan() {
            0.0
        } else {
            value.clamp(0.0, 1.0)
        })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Every intermediate quantity of one appraisal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Appraisal {
    pub distance_norm: f64,
    pub signal_norm: f64,
    pub likelihood: f64,
    pub undesirability: f64,
    pub ig: f64,
    pub potential: f64,
    pub intensity: FearIntensity,
}

/// `0` at the floor (Absent), `1` at the ceiling (Excellent).
pub fn normalize_signal(dbm: f64, params: &FearParams) -> f64 {
    let span = params.signal_ceiling_dbm - params.signal_floor_dbm;
    ((dbm - params.signal_floor_dbm) / span).clamp(0.0, 1.0)
}

pub fn normalize_distance(d: f64, params: &FearParams) -> f64 {
    (d / params.distance_horizon).clamp(0.0, 1.0)
}

const LEVELS: [&str; 5] = ["VL", "L", "M", "H", "VH"];

fn larsen_system(
    inputs: [LinguisticVariable; 2],
    output: LinguisticVariable,
    increasing: [bool; 2],
) -> FuzzySystem {
    let rules = RuleBase::new(
        monotone_grid_rules(increasing),
        Conjunction::Product,
        Implication::Product,
    );
    FuzzySystem::new(inputs.into(), output, rules).expect("default rule grid is valid")
}

/// Distance · SignalStrength → Likelihood. Nearer and weaker raise it.
pub fn default_likelihood_system() -> FuzzySystem {
    larsen_system(
        [
            LinguisticVariable::five_level(
                "distance",
                ["V-Near", "Near", "Medium", "V-Far", "Too-Far"],
            ),
            LinguisticVariable::five_level(
                "signal",
                ["Absent", "Bad", "Good", "V-Good", "Excellent"],
            ),
        ],
        LinguisticVariable::five_level("likelihood", ["VLL", "LL", "ML", "HL", "VHL"]),
        [false, false],
    )
}

/// CommImportance · SignalStrength → Undesirability.
pub fn default_undesirability_system() -> FuzzySystem {
    larsen_system(
        [
            LinguisticVariable::five_level("comm_importance", LEVELS),
            LinguisticVariable::five_level(
                "signal",
                ["Absent", "Bad", "Good", "V-Good", "Excellent"],
            ),
        ],
        LinguisticVariable::five_level("undesirability", ["VLD", "LD", "MD", "HD", "VHD"]),
        [true, false],
    )
}

/// SenseOfReality · VirtualTimeProximity → Ig.
pub fn default_ig_system() -> FuzzySystem {
    larsen_system(
        [
            LinguisticVariable::five_level("sor", LEVELS),
            LinguisticVariable::five_level("vtp", LEVELS),
        ],
        LinguisticVariable::five_level("ig", ["VLIg", "LIg", "MIg", "HIg", "VIG"]),
        [true, true],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FearModel {
    params: FearParams,
    likelihood: FuzzySystem,
    undesirability: FuzzySystem,
    ig: FuzzySystem,
}

impl Default for FearModel {
    fn default() -> Self {
        Self::new(FearParams::default()).expect("default parameters are valid")
    }
}

impl FearModel {
    pub fn new(params: FearParams) -> Result<Self, FearError> {
        Self::with_systems(
            params,
            default_likelihood_system(),
            default_undesirability_system(),
            default_ig_system(),
        )
    }

    pub fn with_systems(
        params: FearParams,
        likelihood: FuzzySystem,
        undesirability: FuzzySystem,
        ig: FuzzySystem,
    ) -> Result<Self, FearError> {
        params.validate()?;
        for (name, sys) in [
            ("likelihood", &likelihood),
            ("undesirability", &undesirability),
            ("ig", &ig),
        ] {
            if sys.inputs().len() != 2 {
                return Err(FearError::InvalidParams(format!(
                    "{name} system must have two inputs"
                )));
            }
        }
        Ok(Self {
            params,
            likelihood,
            undesirability,
            ig,
        })
    }

    /// Applies one grid resolution and input policy to all three subsystems.
    pub fn with_engine_settings(
        self,
        grid_resolution: usize,
        policy: InputPolicy,
    ) -> Result<Self, FearError> {
        let tune = |s: FuzzySystem| -> Result<FuzzySystem, FearError> {
            Ok(s.with_grid_resolution(grid_resolution)?
                .with_input_policy(policy))
        };
        Ok(Self {
            params: self.params,
            likelihood: tune(self.likelihood)?,
            undesirability: tune(self.undesirability)?,
            ig: tune(self.ig)?,
        })
    }

    pub fn with_defuzzifier(self, defuzzifier: Defuzzifier) -> Self {
        Self {
            params: self.params,
            likelihood: self.likelihood.with_defuzzifier(defuzzifier),
            undesirability: self.undesirability.with_defuzzifier(defuzzifier),
            ig: self.ig.with_defuzzifier(defuzzifier),
        }
    }

    pub fn params(&self) -> &FearParams {
        &self.params
    }

    pub fn likelihood_system(&self) -> &FuzzySystem {
        &self.likelihood
    }

    pub fn undesirability_system(&self) -> &FuzzySystem {
        &self.undesirability
    }

    pub fn ig_system(&self) -> &FuzzySystem {
        &self.ig
    }

    pub fn compute_likelihood(
        &self,
        distance_norm: f64,
        signal_norm: f64,
    ) -> Result<f64, FearError> {
        run_subsystem(&self.likelihood, distance_norm, signal_norm)
    }

    pub fn compute_undesirability(
        &self,
        comm_importance: f64,
        signal_norm: f64,
    ) -> Result<f64, FearError> {
        run_subsystem(&self.undesirability, comm_importance, signal_norm)
    }

    pub fn compute_ig(&self, sor: f64, vtp: f64) -> Result<f64, FearError> {
        run_subsystem(&self.ig, sor, vtp)
    }

    /// Zero unless an undesirable prospect is perceived, i.e. `prospect` holds,
    /// desirability is negative and the bad-signal point lies inside the
    /// distance horizon.
    pub fn fear_potential(
        &self,
        inputs: &FearInputs,
        likelihood: f64,
        ig: f64,
        undesirability: f64,
    ) -> f64 {
        let perceived = inputs.distance_to_bssp_m < self.params.distance_horizon;
        if !(inputs.prospect && inputs.desirability < 0.0 && perceived) {
            return 0.0;
        }
        self.params
            .combiner
            .combine(undesirability, likelihood, ig)
            .clamp(0.0, 1.0)
    }

    pub fn fear_intensity(&self, potential: f64) -> FearIntensity {
        fear_intensity(potential, &self.params)
    }

    pub fn appraise(&self, inputs: &FearInputs) -> Result<Appraisal, FearError> {
        inputs.validate()?;
        let distance_norm = normalize_distance(inputs.distance_to_bssp_m, &self.params);
        let signal_norm = normalize_signal(inputs.signal_dbm, &self.params);
        let likelihood = self.compute_likelihood(distance_norm, signal_norm)?;
        let undesirability = self.compute_undesirability(inputs.comm_importance, signal_norm)?;
        let ig = self.compute_ig(inputs.sor, inputs.vtp)?;
        let potential = self.fear_potential(inputs, likelihood, ig, undesirability);
        Ok(Appraisal {
            distance_norm,
            signal_norm,
            likelihood,
            undesirability,
            ig,
            potential,
            intensity: self.fear_intensity(potential),
        })
    }

    pub fn fear(&self, inputs: &FearInputs) -> Result<FearIntensity, FearError> {
        Ok(self.appraise(inputs)?.intensity)
    }
}

fn run_subsystem(sys: &FuzzySystem, a: f64, b: f64) -> Result<f64, FearError> {
    match sys.infer(&[a, b]) {
        Ok(v) => Ok(v),
        // nothing fired: no evidence for the quantity at all
        Err(FuzzyError::AllZeroMembership) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

pub fn fear_intensity(potential: f64, params: &FearParams) -> FearIntensity {
    if potential > params.fear_threshold {
        FearIntensity::new(potential - params.fear_threshold)
    } else {
        FearIntensity::new(0.0)
    }
}
