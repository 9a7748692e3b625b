//! Scenario configuration, read from JSON with defaults for every field.

use std::path::Path;

use anyhow::{bail, Context as _};
use hometype::dyadic::{build_adjacent_systems, build_system, build_system_strict, AdjacentSystems, DyadicSystem};
use hometype::oscillation::BloomWeights;
use hometype::space::FiniteSpace;
use hometype::weights::Weight;
use serde::{Deserialize, Serialize};

use crate::generators::{make_space, make_symbol, make_weight, SpaceSpec, SymbolSpec, WeightSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    DyadicAxioms,
    Weights,
    Oscillation,
    Haar,
    Sparse,
    Domination,
    Compactness,
    Bilinear,
    LowerBound,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::DyadicAxioms,
        Suite::Weights,
        Suite::Oscillation,
        Suite::Haar,
        Suite::Sparse,
        Suite::Domination,
        Suite::Compactness,
        Suite::Bilinear,
        Suite::LowerBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::DyadicAxioms => "dyadic-axioms",
            Suite::Weights => "weights",
            Suite::Oscillation => "oscillation",
            Suite::Haar => "haar",
            Suite::Sparse => "sparse",
            Suite::Domination => "domination",
            Suite::Compactness => "compactness",
            Suite::Bilinear => "bilinear",
            Suite::LowerBound => "lower-bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DyadicSpec {
    pub delta: f64,
    /// Seeds tried in order when building adjacent systems; the first one
    /// is used for single-system suites.
    pub seeds: Vec<u64>,
    /// Use the small-`δ` construction with its fixed constants.
    pub strict: bool,
}

impl Default for DyadicSpec {
    fn default() -> Self {
        DyadicSpec {
            delta: 0.5,
            seeds: (0..8).collect(),
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub space: SpaceSpec,
    pub lam1: WeightSpec,
    pub lam2: WeightSpec,
    /// Weight on the second slot of bilinear forms.
    pub w: WeightSpec,
    pub symbol: SymbolSpec,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub dyadic: DyadicSpec,
    pub suites: Vec<Suite>,
    /// Tolerances for the compactness and bilinear splits, descending.
    pub eps_grid: Vec<f64>,
    /// Number of random instances per corpus.
    pub corpus: usize,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "default".to_string(),
            space: SpaceSpec::Grid1d { n: 64 },
            lam1: WeightSpec::Power { x0: None, alpha: 0.3 },
            lam2: WeightSpec::Random { spread: 0.5 },
            w: WeightSpec::Random { spread: 0.5 },
            symbol: SymbolSpec::Smooth { x0: None },
            p: 2.0,
            p1: 1.6,
            p2: 1.6,
            dyadic: DyadicSpec::default(),
            suites: Suite::ALL.to_vec(),
            eps_grid: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            corpus: 12,
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let sc: Scenario = serde_json::from_str(text).context("invalid scenario JSON")?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in scenario {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, p) in [("p", self.p), ("p1", self.p1), ("p2", self.p2)] {
            if !(p > 1.0 && p.is_finite()) {
                bail!("exponent {name} must exceed 1, got {p}");
            }
        }
        if !(self.dyadic.delta > 0.0 && self.dyadic.delta < 1.0) {
            bail!("dyadic.delta must lie in (0, 1), got {}", self.dyadic.delta);
        }
        if self.dyadic.seeds.is_empty() {
            bail!("dyadic.seeds must list at least one seed");
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0)) {
            bail!("eps_grid entries must be positive");
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            bail!("eps_grid must be strictly descending");
        }
        Ok(())
    }
}

/// Everything the suites share, built once per scenario.
pub struct Context {
    pub scenario: Scenario,
    pub space: FiniteSpace,
    pub bw: BloomWeights,
    pub w: Weight,
    pub b: Vec<f64>,
}

impl Context {
    pub fn build(scenario: &Scenario) -> anyhow::Result<Self> {
        scenario.validate()?;
        let seed = scenario.seed;
        let space = make_space(&scenario.space, seed)?;
        let lam1 = make_weight(&space, &scenario.lam1, seed.wrapping_add(1))?;
        let lam2 = make_weight(&space, &scenario.lam2, seed.wrapping_add(2))?;
        let w = make_weight(&space, &scenario.w, seed.wrapping_add(3))?;
        let b = make_symbol(&space, &scenario.symbol, seed.wrapping_add(4));
        let bw = BloomWeights::new(lam1, lam2, scenario.p)?;
        Ok(Context {
            scenario: scenario.clone(),
            space,
            bw,
            w,
            b,
        })
    }

    pub fn system(&self, seed: u64) -> anyhow::Result<DyadicSystem> {
        let d = &self.scenario.dyadic;
        Ok(if d.strict {
            build_system_strict(&self.space, seed)?
        } else {
            build_system(&self.space, d.delta, None, seed)?
        })
    }

    /// The system of the first listed seed.
    pub fn primary_system(&self) -> anyhow::Result<DyadicSystem> {
        self.system(self.scenario.dyadic.seeds[0])
    }

    pub fn adjacent(&self) -> anyhow::Result<AdjacentSystems> {
        let d = &self.scenario.dyadic;
        Ok(build_adjacent_systems(&self.space, d.delta, &d.seeds, d.strict)?)
    }

    /// A seed for the `k`-th random item of a corpus.
    pub fn item_seed(&self, salt: u64, k: usize) -> u64 {
        self.scenario
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(salt << 32)
            .wrapping_add(k as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let sc = Scenario::from_json(r#"{"space": {"kind": "cantor", "level": 3}, "suites": []}"#).unwrap();
        assert_eq!(sc.space, SpaceSpec::Cantor { level: 3 });
        assert!(sc.suites.is_empty());
        assert_eq!(sc.p, 2.0);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(Scenario::from_json(r#"{"p": 1.0}"#).is_err());
        assert!(Scenario::from_json(r#"{"eps_grid": [0.1, 0.2]}"#).is_err());
        assert!(Scenario::from_json(r#"{"colour": 3}"#).is_err());
        assert!(Scenario::from_json(r#"{"suites": ["magic"]}"#).is_err());
    }

    #[test]
    fn default_round_trips() {
        let sc = Scenario::default();
        let text = serde_json::to_string(&sc).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), sc);
    }
}
