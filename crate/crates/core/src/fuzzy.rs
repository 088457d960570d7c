//! Mamdani-style fuzzy inference kernel.
//!
//! Inputs are fuzzified against trapezoidal terms, every rule fires with the
//! configured conjunction, consequents are shaped by the configured
//! implication, the shaped sets are aggregated with `max` and the result is
//! defuzzified by its centroid, either exactly or over a uniform sample grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of output-universe samples used by the centroid.
pub const DEFAULT_GRID_RESOLUTION: usize = 1001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("aggregated output set has zero membership everywhere (no rule fired)")]
    AllZeroMembership,
    #[error("input {value} for variable `{variable}` lies outside its universe [{lo}, {hi}]")]
    InputOutOfUniverse {
        variable: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid membership breakpoints ({a}, {b}, {c}, {d}): need a <= b <= c <= d")]
    InvalidMembership { a: f64, b: f64, c: f64, d: f64 },
    #[error("variable `{0}`: {1}")]
    InvalidVariable(String, String),
    #[error("rule {index}: {reason}")]
    InvalidRule { index: usize, reason: String },
    #[error("expected {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("centroid grid needs at least 2 samples, got {0}")]
    GridTooSmall(usize),
    #[error("sample and membership slices differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Trapezoid over `[a, d]` with plateau `[b, c]`; a triangle when `b == c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl MembershipFunction {
    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        let finite = [a, b, c, d].iter().all(|v| v.is_finite());
        if !finite || !(a <= b && b <= c && c <= d) {
            return Err(FuzzyError::InvalidMembership { a, b, c, d });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn triangle(a: f64, peak: f64, d: f64) -> Result<Self, FuzzyError> {
        Self::trapezoid(a, peak, peak, d)
    }

    pub fn breakpoints(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.d)
    }

    /// Degree of membership of `x`, always in `[0, 1]`.
    pub fn degree(&self, x: f64) -> f64 {
        let Self { a, b, c, d } = *self;
        if x < a || x > d {
            0.0
        } else if x >= b && x <= c {
            1.0
        } else if x < b {
            // a < x < b, so b > a here
            ((x - a) / (b - a)).clamp(0.0, 1.0)
        } else {
            ((d - x) / (d - c)).clamp(0.0, 1.0)
        }
    }
}

/// Free-function form of [`MembershipFunction::degree`].
pub fn membership(mf: &MembershipFunction, x: f64) -> f64 {
    mf.degree(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub mf: MembershipFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticVariable {
    name: String,
    lo: f64,
    hi: f64,
    terms: Vec<Term>,
}

impl LinguisticVariable {
    pub fn new(
        name: impl Into<String>,
        universe: (f64, f64),
        terms: Vec<Term>,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        let (lo, hi) = universe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::InvalidVariable(
                name,
                format!("universe [{lo}, {hi}] is empty"),
            ));
        }
        if terms.is_empty() {
            return Err(FuzzyError::InvalidVariable(name, "no terms".into()));
        }
        for t in &terms {
            let (a, d) = t.mf.support();
            if a < lo || d > hi {
                return Err(FuzzyError::InvalidVariable(
                    name,
                    format!("term `{}` support [{a}, {d}] leaves the universe", t.label),
                ));
            }
        }
        Ok(Self {
            name,
            lo,
            hi,
            terms,
        })
    }

    /// Five terms on `[0, 1]` using the standard intensity partition
    /// `0-0.24, 0.1-0.5, 0.25-0.73, 0.51-0.9, 0.76-1`.
    pub fn five_level(name: impl Into<String>, labels: [&str; 5]) -> Self {
        let parts = five_level_partition();
        let terms = labels
            .iter()
            .zip(parts)
            .map(|(label, mf)| Term {
                label: (*label).to_string(),
                mf,
            })
            .collect();
        Self::new(name, (0.0, 1.0), terms).expect("standard partition is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn universe(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn fuzzify(&self, x: f64) -> Vec<f64> {
        self.terms.iter().map(|t| t.mf.degree(x)).collect()
    }

    /// Copy of this variable with its term shapes replaced, labels kept.
    pub fn with_shapes(&self, shapes: &[MembershipFunction]) -> Result<Self, FuzzyError> {
        if shapes.len() != self.terms.len() {
            return Err(FuzzyError::InvalidVariable(
                self.name.clone(),
                format!(
                    "expected {} term shapes, got {}",
                    self.terms.len(),
                    shapes.len()
                ),
            ));
        }
        let terms = self
            .terms
            .iter()
            .zip(shapes)
            .map(|(t, mf)| Term {
                label: t.label.clone(),
                mf: *mf,
            })
            .collect();
        Self::new(self.name.clone(), (self.lo, self.hi), terms)
    }
}

/// `VL, L, M, H, VH` shapes on `[0, 1]`.
pub fn five_level_partition() -> [MembershipFunction; 5] {
    let mf = |a, b, c, d| MembershipFunction::trapezoid(a, b, c, d).unwrap();
    [
        mf(0.0, 0.0, 0.1, 0.24),
        mf(0.1, 0.3, 0.3, 0.5),
        mf(0.25, 0.49, 0.49, 0.73),
        mf(0.51, 0.7, 0.7, 0.9),
        mf(0.76, 0.9, 1.0, 1.0),
    ]
}

/// How the antecedent degrees of one rule combine into its firing strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conjunction {
    #[default]
    Min,
    Product,
}

impl Conjunction {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Conjunction::Min => a.min(b),
            Conjunction::Product => a * b,
        }
    }
}

/// How a firing strength shapes the consequent set: clipping or scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Implication {
    #[default]
    Min,
    Product,
}

impl Implication {
    fn apply(self, strength: f64, mu: f64) -> f64 {
        match self {
            Implication::Min => strength.min(mu),
            Implication::Product => strength * mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<usize>,
    pub consequent: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    rules: Vec<Rule>,
    conjunction: Conjunction,
    implication: Implication,
}

impl RuleBase {
    pub fn new(rules: Vec<Rule>, conjunction: Conjunction, implication: Implication) -> Self {
        Self {
            rules,
            conjunction,
            implication,
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn conjunction(&self) -> Conjunction {
        self.conjunction
    }

    pub fn implication(&self) -> Implication {
        self.implication
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputPolicy {
    /// Inputs outside a universe are clamped to its nearest edge.
    #[default]
    Clamp,
    /// Inputs outside a universe are rejected.
    Strict,
}

/// A sampled membership function over the output universe.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSet {
    pub xs: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Defuzzifier {
    /// Centroid of the piecewise-linear aggregated set, integrated exactly.
    #[default]
    Exact,
    /// `Σ xᵢ·μᵢ / Σ μᵢ` over the sample grid.
    Grid,
}

/// A consequent term shaped by its rule's firing strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedTerm {
    pub mf: MembershipFunction,
    pub strength: f64,
    pub implication: Implication,
}

impl ShapedTerm {
    pub fn degree(&self, x: f64) -> f64 {
        self.implication.apply(self.strength, self.mf.degree(x))
    }

    fn kinks(&self) -> impl Iterator<Item = f64> {
        let [a, b, c, d] = self.mf.breakpoints();
        let w = self.strength;
        let clip = match self.implication {
            Implication::Min if w > 0.0 && w < 1.0 => Some([a + w * (b - a), d - w * (d - c)]),
            _ => None,
        };
        [a, b, c, d].into_iter().chain(clip.into_iter().flatten())
    }

    /// Values at the ends of `[x0, x1]`, where the shape is linear. Sampled
    /// inside the interval so a vertical edge at either end is ignored.
    fn ends(&self, x0: f64, x1: f64) -> (f64, f64) {
        let h = x1 - x0;
        let u = self.degree(x0 + h / 3.0);
        let v = self.degree(x0 + 2.0 * h / 3.0);
        (2.0 * u - v, 2.0 * v - u)
    }
}

/// Exact centroid of `max` over `pieces`, restricted to `[lo, hi]`.
pub fn centroid_exact(pieces: &[ShapedTerm], universe: (f64, f64)) -> Result<f64, FuzzyError> {
    let (lo, hi) = universe;
    let mut xs: Vec<f64> = pieces
        .iter()
        .flat_map(ShapedTerm::kinks)
        .filter(|x| *x > lo && *x < hi)
        .chain([lo, hi])
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (mut num, mut den) = (0.0, 0.0);
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        let lines: Vec<(f64, f64)> = pieces.iter().map(|p| p.ends(x0, x1)).collect();
        let mut cuts = vec![0.0, 1.0];
        for (i, a) in lines.iter().enumerate() {
            for b in &lines[i + 1..] {
                let (d0, d1) = (a.0 - b.0, a.1 - b.1);
                if d0 * d1 < 0.0 {
                    cuts.push(d0 / (d0 - d1));
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let top = |s: f64| {
            lines
                .iter()
                .map(|(y0, y1)| y0 + (y1 - y0) * s)
                .fold(0.0_f64, f64::max)
        };
        for c in cuts.windows(2) {
            let (xa, xb) = (x0 + (x1 - x0) * c[0], x0 + (x1 - x0) * c[1]);
            let h = xb - xa;
            if h <= 0.0 {
                continue;
            }
            let (ya, yb) = (top(c[0]), top(c[1]));
            den += (ya + yb) * h / 2.0;
            num += h * (xa * (2.0 * ya + yb) + xb * (ya + 2.0 * yb)) / 6.0;
        }
    }
    if den <= 0.0 {
        return Err(FuzzyError::AllZeroMembership);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzySystem {
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rule_base: RuleBase,
    grid_resolution: usize,
    input_policy: InputPolicy,
    defuzzifier: Defuzzifier,
}

impl FuzzySystem {
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rule_base: RuleBase,
    ) -> Result<Self, FuzzyError> {
        let mut seen = std::collections::HashSet::new();
        for (index, rule) in rule_base.rules.iter().enumerate() {
            if rule.antecedent.len() != inputs.len() {
                return Err(FuzzyError::InvalidRule {
                    index,
                    reason: format!(
                        "antecedent has {} indices for {} inputs",
                        rule.antecedent.len(),
                        inputs.len()
                    ),
                });
            }
            for (var, &term) in inputs.iter().zip(&rule.antecedent) {
                if term >= var.terms.len() {
                    return Err(FuzzyError::InvalidRule {
                        index,
                        reason: format!("term {term} out of range for `{}`", var.name),
                    });
                }
            }
            if rule.consequent >= output.terms.len() {
                return Err(FuzzyError::InvalidRule {
                    index,
                    reason: format!("consequent {} out of range", rule.consequent),
                });
            }
            if !seen.insert(rule.antecedent.clone()) {
                return Err(FuzzyError::InvalidRule {
                    index,
                    reason: "duplicate antecedent".into(),
                });
            }
        }
        Ok(Self {
            inputs,
            output,
            rule_base,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            input_policy: InputPolicy::Clamp,
            defuzzifier: Defuzzifier::Exact,
        })
    }

    pub fn with_grid_resolution(mut self, n: usize) -> Result<Self, FuzzyError> {
        if n < 2 {
            return Err(FuzzyError::GridTooSmall(n));
        }
        self.grid_resolution = n;
        Ok(self)
    }

    pub fn with_input_policy(mut self, policy: InputPolicy) -> Self {
        self.input_policy = policy;
        self
    }

    pub fn with_defuzzifier(mut self, defuzzifier: Defuzzifier) -> Self {
        self.defuzzifier = defuzzifier;
        self
    }

    pub fn defuzzifier(&self) -> Defuzzifier {
        self.defuzzifier
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn output(&self) -> &LinguisticVariable {
        &self.output
    }

    pub fn rule_base(&self) -> &RuleBase {
        &self.rule_base
    }

    pub fn grid_resolution(&self) -> usize {
        self.grid_resolution
    }

    pub fn input_policy(&self) -> InputPolicy {
        self.input_policy
    }

    fn prepare_inputs(&self, values: &[f64]) -> Result<Vec<f64>, FuzzyError> {
        if values.len() != self.inputs.len() {
            return Err(FuzzyError::ArityMismatch {
                expected: self.inputs.len(),
                got: values.len(),
            });
        }
        self.inputs
            .iter()
            .zip(values)
            .map(|(var, &x)| {
                let (lo, hi) = var.universe();
                if (lo..=hi).contains(&x) {
                    Ok(x)
                } else if self.input_policy == InputPolicy::Clamp && !x.is_nan() {
                    Ok(x.clamp(lo, hi))
                } else {
                    Err(FuzzyError::InputOutOfUniverse {
                        variable: var.name.clone(),
                        value: x,
                        lo,
                        hi,
                    })
                }
            })
            .collect()
    }

    /// Firing strength of every rule, in rule-base order.
    pub fn firing_strengths(&self, values: &[f64]) -> Result<Vec<f64>, FuzzyError> {
        let values = self.prepare_inputs(values)?;
        let degrees: Vec<Vec<f64>> = self
            .inputs
            .iter()
            .zip(&values)
            .map(|(var, &x)| var.fuzzify(x))
            .collect();
        let conj = self.rule_base.conjunction;
        Ok(self
            .rule_base
            .rules
            .iter()
            .map(|rule| {
                rule.antecedent
                    .iter()
                    .zip(&degrees)
                    .map(|(&term, deg)| deg[term])
                    .reduce(|acc, d| conj.apply(acc, d))
                    .unwrap_or(0.0)
            })
            .collect())
    }

    /// The aggregated output set sampled on the centroid grid.
    pub fn aggregate(&self, values: &[f64]) -> Result<SampledSet, FuzzyError> {
        let strengths = self.firing_strengths(values)?;
        let (lo, hi) = self.output.universe();
        let n = self.grid_resolution;
        let step = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let mut mu = vec![0.0_f64; n];
        let imp = self.rule_base.implication;
        for (rule, &w) in self.rule_base.rules.iter().zip(&strengths) {
            if w <= 0.0 {
                continue;
            }
            let mf = &self.output.terms[rule.consequent].mf;
            for (m, &x) in mu.iter_mut().zip(&xs) {
                let shaped = imp.apply(w, mf.degree(x));
                if shaped > *m {
                    *m = shaped;
                }
            }
        }
        Ok(SampledSet { xs, mu })
    }

    /// Crisp output for one value per input variable.
    pub fn infer(&self, values: &[f64]) -> Result<f64, FuzzyError> {
        let (lo, hi) = self.output.universe();
        let c = match self.defuzzifier {
            Defuzzifier::Exact => centroid_exact(&self.shaped_terms(values)?, (lo, hi))?,
            Defuzzifier::Grid => {
                let set = self.aggregate(values)?;
                defuzz_centroid(&set.xs, &set.mu)?
            }
        };
        Ok(c.clamp(lo, hi))
    }

    /// Consequent sets of the rules that fired.
    pub fn shaped_terms(&self, values: &[f64]) -> Result<Vec<ShapedTerm>, FuzzyError> {
        let strengths = self.firing_strengths(values)?;
        Ok(self
            .rule_base
            .rules
            .iter()
            .zip(strengths)
            .filter(|(_, w)| *w > 0.0)
            .map(|(rule, strength)| ShapedTerm {
                mf: self.output.terms[rule.consequent].mf,
                strength,
                implication: self.rule_base.implication,
            })
            .collect())
    }
}

/// `Σ xᵢ·μᵢ / Σ μᵢ` over a sampled set.
pub fn defuzz_centroid(xs: &[f64], mu: &[f64]) -> Result<f64, FuzzyError> {
    if xs.len() != mu.len() {
        return Err(FuzzyError::LengthMismatch(xs.len(), mu.len()));
    }
    let (num, den) = xs
        .iter()
        .zip(mu)
        .fold((0.0, 0.0), |(num, den), (&x, &m)| (num + x * m, den + m));
    if den <= 0.0 {
        return Err(FuzzyError::AllZeroMembership);
    }
    Ok(num / den)
}

/// Full grid of rules over two five-term inputs where each input has a
/// "worse" direction. `rank` maps a term index to its 0..4 rank toward the
/// output-increasing direction; the consequent is the rounded mean rank.
pub fn monotone_grid_rules(increasing: [bool; 2]) -> Vec<Rule> {
    let rank = |inc: bool, i: usize| if inc { i } else { 4 - i };
    let mut rules = Vec::with_capacity(25);
    for i in 0..5 {
        for j in 0..5 {
            let mean = (rank(increasing[0], i) + rank(increasing[1], j)) as f64 / 2.0;
            rules.push(Rule {
                antecedent: vec![i, j],
                consequent: mean.round() as usize,
            });
        }
    }
    rules
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: f64, b: f64, c: f64) -> MembershipFunction {
        MembershipFunction::triangle(a, b, c).unwrap()
    }

    fn single_input_system(rules: Vec<Rule>, out: Vec<Term>) -> FuzzySystem {
        let input = LinguisticVariable::five_level("x", ["VL", "L", "M", "H", "VH"]);
        let output = LinguisticVariable::new("y", (0.0, 1.0), out).unwrap();
        FuzzySystem::new(
            vec![input],
            output,
            RuleBase::new(rules, Conjunction::Min, Implication::Min),
        )
        .unwrap()
    }

    #[test]
    fn trapezoid_edges_and_slopes() {
        let vl = MembershipFunction::trapezoid(0.0, 0.0, 0.1, 0.24).unwrap();
        assert_eq!(membership(&vl, 0.05), 1.0);
        assert_eq!(membership(&vl, 0.24), 0.0);
        // (0.24 - 0.17) / (0.24 - 0.10)
        assert!((membership(&vl, 0.17) - 0.5).abs() < 1e-12);
        assert_eq!(membership(&vl, -1.0), 0.0);
        assert_eq!(membership(&vl, 0.0), 1.0);
    }

    #[test]
    fn triangle_peak_and_shoulders() {
        let m = tri(0.25, 0.49, 0.73);
        assert_eq!(m.degree(0.49), 1.0);
        assert!((m.degree(0.37) - 0.5).abs() < 1e-12);
        assert!((m.degree(0.61) - 0.5).abs() < 1e-12);
        assert_eq!(m.degree(0.73), 0.0);
    }

    #[test]
    fn rejects_unordered_breakpoints() {
        assert!(MembershipFunction::trapezoid(0.3, 0.2, 0.4, 0.5).is_err());
        assert!(MembershipFunction::trapezoid(0.0, f64::NAN, 0.4, 0.5).is_err());
    }

    #[test]
    fn centroid_of_symmetric_shapes() {
        let n = 1001;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let t = tri(0.2, 0.5, 0.8);
        let mu: Vec<f64> = xs.iter().map(|&x| t.degree(x)).collect();
        assert!((defuzz_centroid(&xs, &mu).unwrap() - 0.5).abs() < 1e-12);
        let flat = vec![1.0; n];
        assert!((defuzz_centroid(&xs, &flat).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_centroid_of_known_shapes() {
        let shaped = |mf, strength, implication| ShapedTerm {
            mf,
            strength,
            implication,
        };
        let c = |p: &[ShapedTerm]| centroid_exact(p, (0.0, 1.0)).unwrap();
        let sym = shaped(tri(0.0, 0.5, 1.0), 0.4, Implication::Min);
        assert!((c(&[sym]) - 0.5).abs() < 1e-12);
        let ramp = tri(0.0, 0.0, 1.0);
        assert!((c(&[shaped(ramp, 1.0, Implication::Min)]) - 1.0 / 3.0).abs() < 1e-12);
        assert!((c(&[shaped(ramp, 0.5, Implication::Min)]) - 7.0 / 18.0).abs() < 1e-12);
        assert!((c(&[shaped(ramp, 0.5, Implication::Product)]) - 1.0 / 3.0).abs() < 1e-12);
        let mirrored = [
            shaped(tri(0.0, 0.0, 0.6), 0.7, Implication::Min),
            shaped(tri(0.4, 1.0, 1.0), 0.7, Implication::Min),
        ];
        assert!((c(&mirrored) - 0.5).abs() < 1e-12);
        assert!(matches!(
            centroid_exact(&[shaped(ramp, 0.0, Implication::Min)], (0.0, 1.0)),
            Err(FuzzyError::AllZeroMembership)
        ));
    }

    #[test]
    fn exact_and_grid_centroids_agree_closely() {
        let sys = single_input_system(
            vec![
                Rule {
                    antecedent: vec![1],
                    consequent: 0,
                },
                Rule {
                    antecedent: vec![2],
                    consequent: 1,
                },
            ],
            vec![
                Term {
                    label: "lo".into(),
                    mf: tri(0.0, 0.2, 0.6),
                },
                Term {
                    label: "hi".into(),
                    mf: tri(0.3, 0.8, 1.0),
                },
            ],
        );
        let exact = sys.infer(&[0.45]).unwrap();
        let grid = sys
            .clone()
            .with_defuzzifier(Defuzzifier::Grid)
            .infer(&[0.45])
            .unwrap();
        assert!((exact - grid).abs() < 1e-3);
    }

    #[test]
    fn centroid_rejects_empty_set() {
        let xs = [0.0, 0.5, 1.0];
        assert_eq!(
            defuzz_centroid(&xs, &[0.0; 3]),
            Err(FuzzyError::AllZeroMembership)
        );
        assert!(matches!(
            defuzz_centroid(&xs, &[1.0]),
            Err(FuzzyError::LengthMismatch(3, 1))
        ));
    }

    #[test]
    fn single_full_rule_gives_term_centroid() {
        let out = vec![Term {
            label: "T".into(),
            mf: tri(0.2, 0.5, 0.8),
        }];
        let rules = vec![Rule {
            antecedent: vec![0],
            consequent: 0,
        }];
        let sys = single_input_system(rules, out);
        // x = 0.05 sits on the VL plateau, so the rule fires at 1.
        assert!((sys.infer(&[0.05]).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn no_rule_firing_is_an_error() {
        let out = vec![Term {
            label: "T".into(),
            mf: tri(0.2, 0.5, 0.8),
        }];
        let rules = vec![Rule {
            antecedent: vec![4],
            consequent: 0,
        }];
        let sys = single_input_system(rules, out);
        assert_eq!(sys.infer(&[0.0]), Err(FuzzyError::AllZeroMembership));
    }

    #[test]
    fn clamp_and_strict_policies() {
        let out = vec![Term {
            label: "T".into(),
            mf: tri(0.2, 0.5, 0.8),
        }];
        let rules = vec![Rule {
            antecedent: vec![0],
            consequent: 0,
        }];
        let sys = single_input_system(rules, out);
        assert!(sys.infer(&[-3.0]).is_ok());
        let strict = sys.with_input_policy(InputPolicy::Strict);
        assert!(matches!(
            strict.infer(&[-3.0]),
            Err(FuzzyError::InputOutOfUniverse { .. })
        ));
        assert!(matches!(
            strict.infer(&[0.1, 0.2]),
            Err(FuzzyError::ArityMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn rule_validation() {
        let input = LinguisticVariable::five_level("x", ["a", "b", "c", "d", "e"]);
        let output = LinguisticVariable::five_level("y", ["a", "b", "c", "d", "e"]);
        let dup = vec![
            Rule {
                antecedent: vec![1],
                consequent: 0,
            },
            Rule {
                antecedent: vec![1],
                consequent: 2,
            },
        ];
        let err = FuzzySystem::new(
            vec![input.clone()],
            output.clone(),
            RuleBase::new(dup, Conjunction::Min, Implication::Min),
        );
        assert!(matches!(err, Err(FuzzyError::InvalidRule { index: 1, .. })));
        let oob = vec![Rule {
            antecedent: vec![7],
            consequent: 0,
        }];
        let err = FuzzySystem::new(
            vec![input],
            output,
            RuleBase::new(oob, Conjunction::Min, Implication::Min),
        );
        assert!(matches!(err, Err(FuzzyError::InvalidRule { index: 0, .. })));
    }

    #[test]
    fn variable_rejects_term_outside_universe() {
        let t = Term {
            label: "wide".into(),
            mf: tri(-0.5, 0.0, 0.5),
        };
        assert!(LinguisticVariable::new("v", (0.0, 1.0), vec![t]).is_err());
    }

    #[test]
    fn grid_rules_round_mean_rank() {
        let rules = monotone_grid_rules([false, false]);
        assert_eq!(rules.len(), 25);
        let c = |i: usize, j: usize| rules[i * 5 + j].consequent;
        assert_eq!(c(0, 0), 4);
        assert_eq!(c(4, 4), 0);
        assert_eq!(c(2, 2), 2);
        // (4 + 3) / 2 = 3.5 rounds away from zero
        assert_eq!(c(0, 1), 4);
        let inc = monotone_grid_rules([true, true]);
        assert_eq!(inc[24].consequent, 4);
        assert_eq!(inc[0].consequent, 0);
    }
}
