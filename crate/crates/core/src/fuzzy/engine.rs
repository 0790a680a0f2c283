//! Mamdani inference: min for conjunction, clipping for implication, max for
//! aggregation, centroid defuzzification on a uniform midpoint grid.

use crate::error::{Error, Result};

/// Number of midpoint samples used for centroid defuzzification.
pub const DEFAULT_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipFunction {
    Triangular {
        a: f64,
        b: f64,
        c: f64,
    },
    Trapezoidal {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    /// 1 below `a`, 0 above `b`, quadratic spline in between.
    ZShaped {
        a: f64,
        b: f64,
    },
    /// Mirror of `ZShaped`: 0 below `a`, 1 above `b`.
    SShaped {
        a: f64,
        b: f64,
    },
}

fn ordered(params: &[f64]) -> bool {
    params.iter().all(|p| p.is_finite()) && params.windows(2).all(|w| w[0] <= w[1])
}

fn rising(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        0.0
    } else if x >= b {
        1.0
    } else {
        (x - a) / (b - a)
    }
}

fn z_spline(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        1.0
    } else if x >= b {
        0.0
    } else if x <= (a + b) / 2.0 {
        1.0 - 2.0 * ((x - a) / (b - a)).powi(2)
    } else {
        2.0 * ((x - b) / (b - a)).powi(2)
    }
}

impl MembershipFunction {
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::Triangular { a, b, c }.validated()
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::Trapezoidal { a, b, c, d }.validated()
    }

    pub fn z_shaped(a: f64, b: f64) -> Result<Self> {
        Self::ZShaped { a, b }.validated()
    }

    pub fn s_shaped(a: f64, b: f64) -> Result<Self> {
        Self::SShaped { a, b }.validated()
    }

    /// Builds a shape from its config name and parameter list.
    pub fn from_parts(shape: &str, params: &[f64]) -> Result<Self> {
        let bad = || Error::Config(format!("shape {shape:?} got {} parameters", params.len()));
        match shape.to_ascii_lowercase().as_str() {
            "triangular" | "tri" => match *params {
                [a, b, c] => Self::triangular(a, b, c),
                _ => Err(bad()),
            },
            "trapezoidal" | "trap" => match *params {
                [a, b, c, d] => Self::trapezoidal(a, b, c, d),
                _ => Err(bad()),
            },
            "z" | "z-shaped" | "zshaped" => match *params {
                [a, b] => Self::z_shaped(a, b),
                _ => Err(bad()),
            },
            "s" | "s-shaped" | "sshaped" => match *params {
                [a, b] => Self::s_shaped(a, b),
                _ => Err(bad()),
            },
            _ => Err(Error::Config(format!("unknown membership shape {shape:?}"))),
        }
    }

    pub fn parts(&self) -> (&'static str, Vec<f64>) {
        match *self {
            Self::Triangular { a, b, c } => ("triangular", vec![a, b, c]),
            Self::Trapezoidal { a, b, c, d } => ("trapezoidal", vec![a, b, c, d]),
            Self::ZShaped { a, b } => ("z", vec![a, b]),
            Self::SShaped { a, b } => ("s", vec![a, b]),
        }
    }

    fn validated(self) -> Result<Self> {
        if ordered(&self.parts().1) {
            Ok(self)
        } else {
            Err(Error::Config(format!(
                "membership parameters out of order: {self:?}"
            )))
        }
    }

    /// Degree of membership in `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Triangular { a, b, c } => Self::Trapezoidal { a, b, c: b, d: c }.eval(x),
            Self::Trapezoidal { a, b, c, d } => {
                if x < a || x > d {
                    0.0
                } else if x < b {
                    rising(x, a, b)
                } else if x <= c {
                    1.0
                } else {
                    1.0 - rising(x, c, d)
                }
            }
            Self::ZShaped { a, b } => z_spline(x, a, b),
            Self::SShaped { a, b } => 1.0 - z_spline(x, a, b),
        }
    }
}

/// A linguistic variable over a closed universe.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyVariable {
    name: String,
    min: f64,
    max: f64,
    terms: Vec<(String, MembershipFunction)>,
}

impl FuzzyVariable {
    /// Checks that the universe is non-empty, labels are unique, and every
    /// point of the universe (probed on a fine grid) has some membership.
    pub fn new(
        name: impl Into<String>,
        min: f64,
        max: f64,
        terms: Vec<(String, MembershipFunction)>,
    ) -> Result<Self> {
        let name = name.into();
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Config(format!(
                "variable {name:?}: bad universe [{min}, {max}]"
            )));
        }
        if terms.is_empty() {
            return Err(Error::Config(format!("variable {name:?} has no terms")));
        }
        for (i, (l, _)) in terms.iter().enumerate() {
            if terms[..i].iter().any(|(o, _)| o == l) {
                return Err(Error::Config(format!(
                    "variable {name:?}: duplicate label {l:?}"
                )));
            }
        }
        let v = FuzzyVariable {
            name,
            min,
            max,
            terms,
        };
        const PROBES: usize = 1000;
        for i in 0..=PROBES {
            let x = min + (max - min) * i as f64 / PROBES as f64;
            if v.terms.iter().all(|(_, mf)| mf.eval(x) <= 0.0) {
                return Err(Error::Config(format!(
                    "variable {:?}: no term covers {x}",
                    v.name
                )));
            }
        }
        Ok(v)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn universe(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    pub fn terms(&self) -> &[(String, MembershipFunction)] {
        &self.terms
    }

    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|(l, _)| l == label)
    }

    /// Memberships per term, in term order. Inputs outside the universe are
    /// clamped to it.
    pub fn fuzzify(&self, crisp: f64) -> Vec<f64> {
        let x = crisp.clamp(self.min, self.max);
        self.terms.iter().map(|(_, mf)| mf.eval(x)).collect()
    }

    /// Same as [`fuzzify`](Self::fuzzify), keyed by label.
    pub fn fuzzify_labeled(&self, crisp: f64) -> Vec<(&str, f64)> {
        self.terms
            .iter()
            .map(|(l, _)| l.as_str())
            .zip(self.fuzzify(crisp))
            .collect()
    }
}

/// `if v1 is l1 and v2 is l2 ... then output is label`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub antecedent: Vec<(String, String)>,
    pub consequent: String,
    pub weight: f64,
}

impl Rule {
    pub fn new(antecedent: &[(&str, &str)], consequent: &str, weight: f64) -> Rule {
        Rule {
            antecedent: antecedent
                .iter()
                .map(|&(v, l)| (v.to_string(), l.to_string()))
                .collect(),
            consequent: consequent.to_string(),
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CompiledRule {
    antecedent: Vec<(usize, usize)>,
    consequent: usize,
    weight: f64,
}

/// Aggregated output set: each output term clipped at the strongest firing
/// of any rule that concludes it.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub levels: Vec<f64>,
}

impl Aggregate {
    pub fn eval(&self, output: &FuzzyVariable, x: f64) -> f64 {
        output
            .terms
            .iter()
            .zip(&self.levels)
            .map(|((_, mf), &lvl)| mf.eval(x).min(lvl))
            .fold(0.0, f64::max)
    }
}

/// Input variables, one output variable, and the rules linking them.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    inputs: Vec<FuzzyVariable>,
    output: FuzzyVariable,
    rules: Vec<Rule>,
    compiled: Vec<CompiledRule>,
    samples: usize,
    sample_x: Vec<f64>,
    // sample_mu[t][i] = membership of output term t at sample_x[i]
    sample_mu: Vec<Vec<f64>>,
}

impl RuleBase {
    pub fn new(
        inputs: Vec<FuzzyVariable>,
        output: FuzzyVariable,
        rules: Vec<Rule>,
    ) -> Result<Self> {
        Self::with_samples(inputs, output, rules, DEFAULT_SAMPLES)
    }

    pub fn with_samples(
        inputs: Vec<FuzzyVariable>,
        output: FuzzyVariable,
        rules: Vec<Rule>,
        samples: usize,
    ) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Config(
                "defuzzification needs at least one sample".into(),
            ));
        }
        let mut compiled = Vec::with_capacity(rules.len());
        for r in &rules {
            if !(0.0..=1.0).contains(&r.weight) {
                return Err(Error::Config(format!(
                    "rule weight {} outside [0, 1]",
                    r.weight
                )));
            }
            let mut ante = Vec::with_capacity(r.antecedent.len());
            for (var, label) in &r.antecedent {
                let vi = inputs.iter().position(|v| &v.name == var).ok_or_else(|| {
                    Error::Config(format!("rule references unknown variable {var:?}"))
                })?;
                let ti = inputs[vi].term_index(label).ok_or_else(|| {
                    Error::Config(format!("variable {var:?} has no label {label:?}"))
                })?;
                ante.push((vi, ti));
            }
            if ante.is_empty() {
                return Err(Error::Config("rule with empty antecedent".into()));
            }
            let ci = output
                .term_index(&r.consequent)
                .ok_or_else(|| Error::Config(format!("output has no label {:?}", r.consequent)))?;
            compiled.push(CompiledRule {
                antecedent: ante,
                consequent: ci,
                weight: r.weight,
            });
        }
        let (lo, hi) = output.universe();
        let h = (hi - lo) / samples as f64;
        let sample_x: Vec<f64> = (0..samples).map(|i| lo + (i as f64 + 0.5) * h).collect();
        let sample_mu = output
            .terms
            .iter()
            .map(|(_, mf)| sample_x.iter().map(|&x| mf.eval(x)).collect())
            .collect();
        Ok(RuleBase {
            inputs,
            output,
            rules,
            compiled,
            samples,
            sample_x,
            sample_mu,
        })
    }

    pub fn inputs(&self) -> &[FuzzyVariable] {
        &self.inputs
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|v| v.name == name)
    }

    pub fn output(&self) -> &FuzzyVariable {
        &self.output
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Fuzzifies one crisp value per input variable, in input order.
    pub fn fuzzify(&self, crisp: &[f64]) -> Vec<Vec<f64>> {
        self.inputs
            .iter()
            .zip(crisp)
            .map(|(v, &x)| v.fuzzify(x))
            .collect()
    }

    /// Min-conjunction firing, weighted, max-aggregated per output term.
    pub fn infer(&self, memberships: &[Vec<f64>]) -> Aggregate {
        let mut levels = vec![0.0f64; self.output.terms.len()];
        for r in &self.compiled {
            let strength = r
                .antecedent
                .iter()
                .map(|&(v, t)| memberships[v][t])
                .fold(1.0, f64::min)
                * r.weight;
            let slot = &mut levels[r.consequent];
            *slot = slot.max(strength);
        }
        Aggregate { levels }
    }

    /// Centroid of the aggregate by the midpoint rule; a massless aggregate
    /// yields the middle of the output universe.
    pub fn defuzzify(&self, agg: &Aggregate) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &x) in self.sample_x.iter().enumerate() {
            let mu = self
                .sample_mu
                .iter()
                .zip(&agg.levels)
                .map(|(col, &lvl)| col[i].min(lvl))
                .fold(0.0, f64::max);
            num += x * mu;
            den += mu;
        }
        if den > 0.0 {
            num / den
        } else {
            let (lo, hi) = self.output.universe();
            (lo + hi) / 2.0
        }
    }

    /// Crisp output for crisp inputs.
    pub fn evaluate(&self, crisp: &[f64]) -> f64 {
        self.defuzzify(&self.infer(&self.fuzzify(crisp)))
    }
}

/// Centroid of an arbitrary function over `[lo, hi]` by the midpoint rule.
pub fn defuzzify_centroid(mu: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    let h = (hi - lo) / samples as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..samples {
        let x = lo + (i as f64 + 0.5) * h;
        let m = mu(x);
        num += x * m;
        den += m;
    }
    if den > 0.0 {
        num / den
    } else {
        (lo + hi) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_values() {
        let t = MembershipFunction::triangular(0.0, 10.0, 20.0).unwrap();
        assert_eq!(t.eval(10.0), 1.0);
        assert_eq!(t.eval(15.0), 0.5);
        assert_eq!(t.eval(5.0), 0.5);
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(21.0), 0.0);
        let shoulder = MembershipFunction::triangular(0.0, 0.0, 50.0).unwrap();
        assert_eq!(shoulder.eval(0.0), 1.0);
        assert_eq!(shoulder.eval(25.0), 0.5);
        assert!(MembershipFunction::triangular(5.0, 1.0, 9.0).is_err());
    }

    #[test]
    fn z_and_s_are_complementary() {
        let z = MembershipFunction::z_shaped(10.0, 40.0).unwrap();
        let s = MembershipFunction::s_shaped(10.0, 40.0).unwrap();
        assert_eq!(z.eval(5.0), 1.0);
        assert_eq!(z.eval(25.0), 0.5);
        assert_eq!(z.eval(45.0), 0.0);
        for i in 0..100 {
            let x = i as f64 * 0.5;
            assert!((z.eval(x) + s.eval(x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clamps_crisp_into_universe() {
        let v = FuzzyVariable::new(
            "pd",
            0.0,
            100.0,
            vec![
                (
                    "short".into(),
                    MembershipFunction::z_shaped(10.0, 40.0).unwrap(),
                ),
                (
                    "long".into(),
                    MembershipFunction::s_shaped(10.0, 40.0).unwrap(),
                ),
            ],
        )
        .unwrap();
        assert_eq!(
            v.fuzzify_labeled(500.0),
            vec![("short", 0.0), ("long", 1.0)]
        );
    }

    #[test]
    fn coverage_gap_rejected() {
        let r = FuzzyVariable::new(
            "x",
            0.0,
            10.0,
            vec![(
                "a".into(),
                MembershipFunction::triangular(0.0, 2.0, 4.0).unwrap(),
            )],
        );
        assert!(r.is_err());
    }

    #[test]
    fn symmetric_triangle_centroid() {
        let c = defuzzify_centroid(
            |x| {
                MembershipFunction::triangular(25.0, 50.0, 75.0)
                    .unwrap()
                    .eval(x)
            },
            0.0,
            100.0,
            201,
        );
        assert!((c - 50.0).abs() < 1e-9);
        assert_eq!(defuzzify_centroid(|_| 0.0, 0.0, 100.0, 201), 50.0);
    }

    #[test]
    fn unknown_labels_rejected() {
        let out = FuzzyVariable::new(
            "y",
            0.0,
            1.0,
            vec![(
                "lo".into(),
                MembershipFunction::trapezoidal(0.0, 0.0, 1.0, 1.0).unwrap(),
            )],
        )
        .unwrap();
        let input = out.clone();
        let bad = RuleBase::new(
            vec![input.clone()],
            out.clone(),
            vec![Rule::new(&[("y", "nope")], "lo", 1.0)],
        );
        assert!(bad.is_err());
        let bad = RuleBase::new(
            vec![input],
            out,
            vec![Rule::new(&[("zz", "lo")], "lo", 1.0)],
        );
        assert!(bad.is_err());
    }
}
