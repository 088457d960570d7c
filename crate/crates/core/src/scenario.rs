//! Scenario files: TOML documents describing one simulation run.
//!
//! ```toml
//! [route]
//! db = "survey.csv"          # relative to the scenario file
//! bad_threshold_dbm = -80
//!
//! [vehicle]
//! provider = "SP1"
//! speed_mps = 4.0
//! tick_s = 0.5
//! start = "A"                # point label, or start_m = 0.0
//! stop = "K"                 # point label, or stop_m = 107.0
//! seed = 7                   # optional random start in [start, stop)
//!
//! [appraisal]                # prospect, desirability, comm_importance, sor, vtp
//! [fear]                     # fear_threshold, combiner, distance_horizon_m, ...
//! [pdfa]                     # th_low, th_mid, th_high
//!
//! [timing]
//! preset = "average"         # worst | average | best | custom
//! # crst_s / megaot_s / hot_s override the preset, and are required for custom
//!
//! [fuzzy]
//! grid_resolution = 1001
//! defuzzifier = "exact"      # or "grid"
//! strict = false
//! [fuzzy.likelihood]         # also undesirability, ig
//! conjunction = "product"
//! implication = "product"
//! inputs = [[[0, 0, 0.1, 0.24], ...], [...]]
//! output = [[0, 0, 0.1, 0.24], ...]
//! rules = [[0, 0, 4], ...]
//!
//! [output]
//! dir = "out"
//!
//! [fault]
//! inject = "weaker_target"   # flip_success, fear_dip
//! ```

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::crsite::{TimingModel, TimingPreset};
use crate::fear::{
    default_ig_system, default_likelihood_system, default_undesirability_system, FearModel,
    FearParams,
};
use crate::fuzzy::{
    Conjunction, Defuzzifier, FuzzySystem, Implication, InputPolicy, LinguisticVariable,
    MembershipFunction, Rule, RuleBase, DEFAULT_GRID_RESOLUTION,
};
use crate::pdfa::PdfaConfig;
use crate::route::{ProviderId, RouteDb, DEFAULT_BAD_THRESHOLD_DBM};
use crate::sim::{Fault, ScenarioInputs, SimConfig, DEFAULT_SPEED_MPS, DEFAULT_TICK_S, PATCH_M};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{}:{line}:{column}: {message}", path.display())]
    At {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    route: RawRoute,
    #[serde(default)]
    vehicle: RawVehicle,
    #[serde(default)]
    appraisal: ScenarioInputs,
    #[serde(default)]
    fear: FearParams,
    #[serde(default)]
    pdfa: PdfaConfig,
    #[serde(default)]
    timing: Option<Spanned<RawTiming>>,
    #[serde(default)]
    fuzzy: RawFuzzy,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    fault: Option<RawFault>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoute {
    db: Spanned<String>,
    bad_threshold_dbm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    provider: Option<Spanned<String>>,
    speed_mps: Option<f64>,
    tick_s: Option<f64>,
    start: Option<Spanned<String>>,
    stop: Option<Spanned<String>>,
    start_m: Option<f64>,
    stop_m: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTiming {
    preset: Option<Spanned<String>>,
    crst_s: Option<f64>,
    megaot_s: Option<f64>,
    hot_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFuzzy {
    grid_resolution: Option<usize>,
    #[serde(default)]
    defuzzifier: Defuzzifier,
    #[serde(default)]
    strict: bool,
    likelihood: Option<Spanned<RawSystem>>,
    undesirability: Option<Spanned<RawSystem>>,
    ig: Option<Spanned<RawSystem>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    conjunction: Option<Conjunction>,
    implication: Option<Implication>,
    inputs: Option<Vec<Vec<[f64; 4]>>>,
    output: Option<Vec<[f64; 4]>>,
    rules: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFault {
    inject: Spanned<String>,
}

/// A resolved scenario: database, run configuration and fear model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub path: PathBuf,
    pub db_path: PathBuf,
    pub db: RouteDb,
    pub config: SimConfig,
    pub model: FearModel,
    pub preset: Option<TimingPreset>,
    pub output_dir: Option<PathBuf>,
}

struct Ctx<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Ctx<'_> {
    fn at(&self, span: Range<usize>, message: impl Into<String>) -> ScenarioError {
        let (line, column) = line_col(self.text, span.start);
        ScenarioError::At {
            path: self.path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }

    fn invalid(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid {
            path: self.path.to_path_buf(),
            message: message.into(),
        }
    }
}

/// One-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }

    /// Parses scenario text; relative paths resolve against `path`'s directory.
    pub fn parse(path: &Path, text: &str) -> Result<Self, ScenarioError> {
        let cx = Ctx { path, text };
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let span = e.span().unwrap_or(0..0);
            cx.at(span, e.message().trim().to_string())
        })?;
        let base = path.parent().unwrap_or(Path::new("."));

        let route = &raw.route;
        let db_path = base.join(route.db.get_ref());
        let file = fs::File::open(&db_path).map_err(|e| {
            cx.at(
                route.db.span(),
                format!("cannot open route database {}: {e}", db_path.display()),
            )
        })?;
        let db = RouteDb::load_csv(file)
            .map_err(|e| cx.at(route.db.span(), format!("{}: {e}", db_path.display())))?
            .with_bad_threshold(route.bad_threshold_dbm.unwrap_or(DEFAULT_BAD_THRESHOLD_DBM));

        let v = &raw.vehicle;
        let provider = match &v.provider {
            Some(p) => {
                let id = ProviderId::new(p.get_ref().as_str());
                db.provider_index(&id)
                    .map_err(|e| cx.at(p.span(), e.to_string()))?;
                id
            }
            None => db.providers()[0].clone(),
        };
        let position = |label: &Option<Spanned<String>>, meters: Option<f64>, default: f64| match (
            label, meters,
        ) {
            (Some(_), Some(_)) => {
                Err(cx.invalid("give a point label or a position in meters, not both"))
            }
            (Some(l), None) => db
                .position_of(l.get_ref())
                .map_err(|e| cx.at(l.span(), e.to_string())),
            (None, Some(m)) => Ok(m),
            (None, None) => Ok(default),
        };
        let start_m = position(&v.start, v.start_m, 0.0)?;
        let stop_m = position(&v.stop, v.stop_m, db.length_m())?;

        let (timing, preset) = resolve_timing(&cx, raw.timing.as_ref())?;
        let fault = match &raw.fault {
            Some(f) => Some(
                f.inject
                    .get_ref()
                    .parse::<Fault>()
                    .map_err(|e| cx.at(f.inject.span(), e))?,
            ),
            None => None,
        };

        let config = SimConfig {
            tick_s: v.tick_s.unwrap_or(DEFAULT_TICK_S),
            speed_mps: v.speed_mps.unwrap_or(DEFAULT_SPEED_MPS),
            patch_m: PATCH_M,
            start_m,
            stop_m,
            start_seed: v.seed,
            initial_provider: provider,
            fear: raw.fear,
            pdfa: raw.pdfa,
            timing,
            inputs: raw.appraisal,
            fault,
        };
        config
            .validate(&db)
            .map_err(|e| cx.invalid(e.to_string()))?;

        let model = build_model(&cx, &raw.fuzzy, raw.fear)?;
        let output_dir = raw.output.dir.map(|d| base.join(d));
        Ok(Self {
            path: path.to_path_buf(),
            db_path,
            db,
            config,
            model,
            preset,
            output_dir,
        })
    }

    /// Replaces the timing model with a named preset.
    pub fn with_preset(mut self, preset: TimingPreset) -> Self {
        self.config.timing = preset.timing();
        self.preset = Some(preset);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.start_seed = Some(seed);
        self
    }
}

fn resolve_timing(
    cx: &Ctx<'_>,
    raw: Option<&Spanned<RawTiming>>,
) -> Result<(TimingModel, Option<TimingPreset>), ScenarioError> {
    let Some(raw) = raw else {
        return Ok((TimingPreset::Average.timing(), Some(TimingPreset::Average)));
    };
    let t = raw.get_ref();
    let preset = match &t.preset {
        Some(p) if p.get_ref() == "custom" => None,
        Some(p) => Some(
            p.get_ref()
                .parse::<TimingPreset>()
                .map_err(|e| cx.at(p.span(), e.to_string()))?,
        ),
        None => Some(TimingPreset::Average),
    };
    let base = match preset {
        Some(p) => p.timing(),
        None => match (t.crst_s, t.megaot_s, t.hot_s) {
            (Some(_), Some(_), Some(_)) => TimingModel::default(),
            _ => return Err(cx.at(raw.span(), "custom timing needs crst_s, megaot_s and hot_s")),
        },
    };
    let overridden = t.crst_s.is_some() || t.megaot_s.is_some() || t.hot_s.is_some();
    let timing = TimingModel {
        crst_s: t.crst_s.unwrap_or(base.crst_s),
        megaot_s: t.megaot_s.unwrap_or(base.megaot_s),
        hot_s: t.hot_s.unwrap_or(base.hot_s),
    };
    timing
        .validate()
        .map_err(|e| cx.at(raw.span(), e.to_string()))?;
    Ok((timing, if overridden { None } else { preset }))
}

fn build_model(
    cx: &Ctx<'_>,
    raw: &RawFuzzy,
    params: FearParams,
) -> Result<FearModel, ScenarioError> {
    let sys = |name: &str, def: FuzzySystem, over: &Option<Spanned<RawSystem>>| match over {
        Some(o) => {
            customize(def, o.get_ref()).map_err(|m| cx.at(o.span(), format!("fuzzy.{name}: {m}")))
        }
        None => Ok(def),
    };
    let model = FearModel::with_systems(
        params,
        sys("likelihood", default_likelihood_system(), &raw.likelihood)?,
        sys(
            "undesirability",
            default_undesirability_system(),
            &raw.undesirability,
        )?,
        sys("ig", default_ig_system(), &raw.ig)?,
    )
    .map_err(|e| cx.invalid(e.to_string()))?;
    let policy = if raw.strict {
        InputPolicy::Strict
    } else {
        InputPolicy::Clamp
    };
    model
        .with_engine_settings(
            raw.grid_resolution.unwrap_or(DEFAULT_GRID_RESOLUTION),
            policy,
        )
        .map(|m| m.with_defuzzifier(raw.defuzzifier))
        .map_err(|e| cx.invalid(format!("fuzzy: {e}")))
}

fn shapes(rows: &[[f64; 4]]) -> Result<Vec<MembershipFunction>, String> {
    rows.iter()
        .map(|&[a, b, c, d]| MembershipFunction::trapezoid(a, b, c, d).map_err(|e| e.to_string()))
        .collect()
}

fn reshape(var: &LinguisticVariable, rows: &[[f64; 4]]) -> Result<LinguisticVariable, String> {
    var.with_shapes(&shapes(rows)?).map_err(|e| e.to_string())
}

fn customize(def: FuzzySystem, raw: &RawSystem) -> Result<FuzzySystem, String> {
    let mut inputs = def.inputs().to_vec();
    if let Some(rows) = &raw.inputs {
        if rows.len() != inputs.len() {
            return Err(format!(
                "expected {} input term lists, got {}",
                inputs.len(),
                rows.len()
            ));
        }
        for (var, r) in inputs.iter_mut().zip(rows) {
            *var = reshape(var, r)?;
        }
    }
    let output = match &raw.output {
        Some(r) => reshape(def.output(), r)?,
        None => def.output().clone(),
    };
    let rb = def.rule_base();
    let rules = match &raw.rules {
        Some(rows) => rows
            .iter()
            .map(|r| match r.split_last() {
                Some((&consequent, antecedent)) => Ok(Rule {
                    antecedent: antecedent.to_vec(),
                    consequent,
                }),
                None => Err("empty rule".to_string()),
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => rb.rules().to_vec(),
    };
    let rule_base = RuleBase::new(
        rules,
        raw.conjunction.unwrap_or(rb.conjunction()),
        raw.implication.unwrap_or(rb.implication()),
    );
    FuzzySystem::new(inputs, output, rule_base).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        Scenario::parse(&dir.join("inline.toml"), text)
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = parse("[route]\ndb = \"survey.csv\"\n").unwrap();
        assert_eq!(s.config.initial_provider.as_str(), "SP1");
        assert_eq!(s.config.speed_mps, 4.0);
        assert_eq!(s.config.stop_m, s.db.length_m());
        assert_eq!(s.preset, Some(TimingPreset::Average));
    }

    #[test]
    fn labels_resolve_to_positions() {
        let s = parse("[route]\ndb = \"survey.csv\"\n[vehicle]\nstart = \"B\"\nstop = \"K\"\n")
            .unwrap();
        assert_eq!(s.config.start_m, s.db.position_of("B").unwrap());
        assert_eq!(s.config.stop_m, s.db.position_of("K").unwrap());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("[route]\ndb = \"missing.csv\"\n").unwrap_err();
        assert!(matches!(err, ScenarioError::At { line: 2, .. }), "{err}");
        let err =
            parse("[route]\ndb = \"survey.csv\"\n[vehicle]\nprovider = \"SP9\"\n").unwrap_err();
        assert!(matches!(err, ScenarioError::At { line: 4, .. }), "{err}");
        let err =
            parse("[route]\ndb = \"survey.csv\"\n\n[timing]\npreset = \"slow\"\n").unwrap_err();
        assert!(matches!(err, ScenarioError::At { line: 5, .. }), "{err}");
        let err = parse("[route]\ndb = \"survey.csv\"\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, ScenarioError::At { line: 3, .. }), "{err}");
        let err = parse("[route\n").unwrap_err();
        assert!(matches!(err, ScenarioError::At { line: 1, .. }), "{err}");
    }

    #[test]
    fn custom_timing() {
        let s = parse("[route]\ndb = \"survey.csv\"\n[timing]\npreset = \"custom\"\ncrst_s = 0.1\nmegaot_s = 0\nhot_s = 3\n").unwrap();
        assert_eq!(s.config.timing.hot_s, 3.0);
        assert_eq!(s.preset, None);
        assert!(parse("[route]\ndb = \"survey.csv\"\n[timing]\npreset = \"custom\"\n").is_err());
        let s = parse("[route]\ndb = \"survey.csv\"\n[timing]\npreset = \"worst\"\n").unwrap();
        assert_eq!(s.config.timing, TimingPreset::Worst.timing());
    }

    #[test]
    fn fuzzy_overrides_are_validated() {
        let s = parse("[route]\ndb = \"survey.csv\"\n[fuzzy.ig]\nconjunction = \"min\"\nrules = [[0, 0, 0]]\n").unwrap();
        assert_eq!(s.model.ig_system().rule_base().rules().len(), 1);
        let err =
            parse("[route]\ndb = \"survey.csv\"\n[fuzzy.ig]\nrules = [[0, 9, 0]]\n").unwrap_err();
        assert!(matches!(err, ScenarioError::At { line: 3, .. }), "{err}");
    }

    #[test]
    fn fault_names() {
        let s =
            parse("[route]\ndb = \"survey.csv\"\n[fault]\ninject = \"flip_success\"\n").unwrap();
        assert_eq!(s.config.fault, Some(Fault::FlipSuccess));
        assert!(parse("[route]\ndb = \"survey.csv\"\n[fault]\ninject = \"nope\"\n").is_err());
    }
}
