//! Matcher thresholds and rule base, loadable from TOML.
//!
//! Every key is optional; omitted keys keep the built-in defaults. A
//! `[fuzzy]` table, when present, replaces the whole default rule base.
//!
//! ```toml
//! [matcher]
//! candidate_radius_m = 50.0
//! junction_radius_m = 15.0
//! pd_escape_m = 35.0
//! min_likelihood = 50.0
//! reinit_after = 3
//! min_heading_separation_m = 1.0
//!
//! [fuzzy]
//! samples = 201
//!
//! [[fuzzy.inputs]]
//! name = "pd"
//! min = 0.0
//! max = 100.0
//! terms = [
//!   { label = "short", shape = "z", params = [10.0, 40.0] },
//!   { label = "long", shape = "s", params = [10.0, 40.0] },
//! ]
//!
//! # ... an input named "he", then:
//! [fuzzy.output]
//! name = "likelihood"
//! min = 0.0
//! max = 100.0
//! terms = [{ label = "high", shape = "triangular", params = [50.0, 100.0, 100.0] }]
//!
//! [[fuzzy.rules]]
//! if = [["pd", "short"], ["he", "small"]]
//! then = "high"
//! weight = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::engine::{FuzzyVariable, MembershipFunction, Rule, RuleBase, DEFAULT_SAMPLES};
use crate::error::{Error, Result};

/// Name of the perpendicular-distance input.
pub const PD: &str = "pd";
/// Name of the heading-error input.
pub const HE: &str = "he";

/// Thresholds driving the match state machine. None of these values come
/// from published results; they are repo defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherConfig {
    /// Search radius for candidate links.
    pub candidate_radius_m: f64,
    /// Distance from a node within which junction evaluation starts.
    pub junction_radius_m: f64,
    /// Perpendicular distance beyond which a tracked link is re-evaluated.
    pub pd_escape_m: f64,
    /// Lowest likelihood accepted as a confident match.
    pub min_likelihood: f64,
    /// Consecutive low-confidence junction steps before re-initializing.
    pub reinit_after: u32,
    /// Minimum displacement for a fresh heading; shorter moves keep the last one.
    pub min_heading_separation_m: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            candidate_radius_m: 50.0,
            junction_radius_m: 15.0,
            pd_escape_m: 35.0,
            min_likelihood: 50.0,
            reinit_after: 3,
            min_heading_separation_m: 1.0,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("candidate_radius_m", self.candidate_radius_m),
            ("junction_radius_m", self.junction_radius_m),
            ("pd_escape_m", self.pd_escape_m),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if !self.min_likelihood.is_finite() {
            return Err(Error::Config("min_likelihood must be finite".into()));
        }
        if !(self.min_heading_separation_m.is_finite() && self.min_heading_separation_m >= 0.0) {
            return Err(Error::Config(
                "min_heading_separation_m must be non-negative".into(),
            ));
        }
        if self.reinit_after == 0 {
            return Err(Error::Config("reinit_after must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub label: String,
    pub shape: String,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    #[serde(rename = "if")]
    pub antecedent: Vec<(String, String)>,
    #[serde(rename = "then")]
    pub consequent: String,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleBaseSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub inputs: Vec<VariableSpec>,
    pub output: VariableSpec,
    pub rules: Vec<RuleSpec>,
}

fn term(label: &str, shape: &str, params: &[f64]) -> TermSpec {
    TermSpec {
        label: label.into(),
        shape: shape.into(),
        params: params.to_vec(),
    }
}

impl Default for RuleBaseSpec {
    /// Two inputs (distance to link, heading error), three output levels and
    /// four rules.
    fn default() -> Self {
        let rule = |pd: &str, he: &str, then: &str| RuleSpec {
            antecedent: vec![(PD.into(), pd.into()), (HE.into(), he.into())],
            consequent: then.into(),
            weight: 1.0,
        };
        RuleBaseSpec {
            samples: DEFAULT_SAMPLES,
            inputs: vec![
                VariableSpec {
                    name: PD.into(),
                    min: 0.0,
                    max: 100.0,
                    terms: vec![
                        term("short", "z", &[10.0, 40.0]),
                        term("long", "s", &[10.0, 40.0]),
                    ],
                },
                VariableSpec {
                    name: HE.into(),
                    min: 0.0,
                    max: 180.0,
                    terms: vec![
                        term("small", "z", &[15.0, 60.0]),
                        term("large", "s", &[15.0, 60.0]),
                    ],
                },
            ],
            output: VariableSpec {
                name: "likelihood".into(),
                min: 0.0,
                max: 100.0,
                terms: vec![
                    term("low", "triangular", &[0.0, 0.0, 50.0]),
                    term("average", "triangular", &[25.0, 50.0, 75.0]),
                    term("high", "triangular", &[50.0, 100.0, 100.0]),
                ],
            },
            rules: vec![
                rule("short", "small", "high"),
                rule("short", "large", "average"),
                rule("long", "small", "average"),
                rule("long", "large", "low"),
            ],
        }
    }
}

impl VariableSpec {
    fn build(&self) -> Result<FuzzyVariable> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok((
                    t.label.clone(),
                    MembershipFunction::from_parts(&t.shape, &t.params)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        FuzzyVariable::new(self.name.clone(), self.min, self.max, terms)
    }
}

impl RuleBaseSpec {
    /// Builds the rule base; the matcher requires inputs named `pd` and `he`.
    pub fn build(&self) -> Result<RuleBase> {
        let inputs = self
            .inputs
            .iter()
            .map(VariableSpec::build)
            .collect::<Result<Vec<_>>>()?;
        for needed in [PD, HE] {
            if !inputs.iter().any(|v| v.name() == needed) {
                return Err(Error::Config(format!(
                    "rule base needs an input named {needed:?}"
                )));
            }
        }
        let rules = self
            .rules
            .iter()
            .map(|r| Rule {
                antecedent: r.antecedent.clone(),
                consequent: r.consequent.clone(),
                weight: r.weight,
            })
            .collect();
        RuleBase::with_samples(inputs, self.output.build()?, rules, self.samples)
    }
}

pub fn default_rule_base() -> RuleBase {
    RuleBaseSpec::default()
        .build()
        .expect("built-in rule base is valid")
}

/// Contents of a matcher config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherSettings {
    pub matcher: MatcherConfig,
    pub fuzzy: Option<RuleBaseSpec>,
}

impl MatcherSettings {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let settings: MatcherSettings =
            toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        settings.matcher.validate()?;
        Ok(settings)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("settings serialize to TOML")
    }

    pub fn rule_base(&self) -> Result<RuleBase> {
        match &self.fuzzy {
            Some(spec) => spec.build(),
            None => Ok(default_rule_base()),
        }
    }
}
