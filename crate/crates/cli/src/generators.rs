//! Registry of spaces, weights and symbols that scenarios refer to by name.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context};
use hometype::oscillation::{alternating_symbol, log_distance_symbol, random_symbol, smooth_symbol};
use hometype::space::FiniteSpace;
use hometype::weights::{checkerboard_weight, power_weight, random_weight, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceSpec {
    /// `n` unit-mass points at unit spacing.
    Grid1d { n: usize },
    /// `w × h` unit-mass points with the Euclidean metric.
    Grid2d { w: usize, h: usize },
    /// The `2^level` left endpoints of the middle-thirds construction.
    Cantor { level: u32 },
    /// `grid1d(n)` with the metric `|x − y|^θ`; `a0` is fitted.
    Snowflake { n: usize, theta: f64 },
    /// Random points in the unit square with a minimum separation and
    /// random masses in `[0.5, 2]`.
    RandomDoubling { n: usize },
    /// A space stored as JSON.
    File { path: String },
}

impl SpaceSpec {
    pub const KINDS: [&'static str; 6] = ["grid1d", "grid2d", "cantor", "snowflake", "random-doubling", "file"];
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Grid1d { n } => write!(f, "grid1d:{n}"),
            SpaceSpec::Grid2d { w, h } => write!(f, "grid2d:{w}x{h}"),
            SpaceSpec::Cantor { level } => write!(f, "cantor:{level}"),
            SpaceSpec::Snowflake { n, theta } => write!(f, "snowflake:{n}:{theta}"),
            SpaceSpec::RandomDoubling { n } => write!(f, "random-doubling:{n}"),
            SpaceSpec::File { path } => write!(f, "file:{path}"),
        }
    }
}

/// Parses the short forms `grid1d:32`, `grid2d:4x4`, `cantor:4`,
/// `snowflake:16:0.5`, `random-doubling:24` and `file:<path>`.
impl FromStr for SpaceSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let num = |v: &str, what: &str| -> anyhow::Result<usize> { v.parse().with_context(|| format!("{what} in `{s}` is not a count")) };
        Ok(match kind {
            "grid1d" => SpaceSpec::Grid1d { n: num(rest, "size")? },
            "grid2d" => {
                let (w, h) = rest.split_once('x').context("grid2d expects WxH")?;
                SpaceSpec::Grid2d {
                    w: num(w, "width")?,
                    h: num(h, "height")?,
                }
            }
            "cantor" => SpaceSpec::Cantor {
                level: rest.parse().with_context(|| format!("bad cantor level in `{s}`"))?,
            },
            "snowflake" => {
                let (n, theta) = rest.split_once(':').context("snowflake expects N:THETA")?;
                SpaceSpec::Snowflake {
                    n: num(n, "size")?,
                    theta: theta.parse().with_context(|| format!("bad exponent in `{s}`"))?,
                }
            }
            "random-doubling" => SpaceSpec::RandomDoubling { n: num(rest, "size")? },
            "file" => SpaceSpec::File { path: rest.to_string() },
            other => bail!("unknown space kind `{other}`; expected one of {}", SpaceSpec::KINDS.join(", ")),
        })
    }
}

pub fn make_space(spec: &SpaceSpec, seed: u64) -> anyhow::Result<FiniteSpace> {
    let space = match spec {
        SpaceSpec::Grid1d { n } => {
            check_size(*n)?;
            FiniteSpace::from_fn(vec![1.0; *n], 1.0, |i, j| (i as f64 - j as f64).abs())?
        }
        SpaceSpec::Grid2d { w, h } => {
            check_size(w * h)?;
            let w = *w;
            let at = |i: usize| ((i % w) as f64, (i / w) as f64);
            FiniteSpace::from_fn(vec![1.0; w * h], 1.0, |i, j| {
                let (a, b) = (at(i), at(j));
                (a.0 - b.0).hypot(a.1 - b.1)
            })?
        }
        SpaceSpec::Cantor { level } => {
            if *level > 8 {
                bail!("cantor level {level} exceeds the supported maximum of 8");
            }
            let n = 1usize << level;
            let pos: Vec<f64> = (0..n)
                .map(|i| {
                    (0..*level)
                        .map(|k| {
                            if i >> (level - 1 - k) & 1 == 1 {
                                2.0 / 3f64.powi(k as i32 + 1)
                            } else {
                                0.0
                            }
                        })
                        .sum()
                })
                .collect();
            FiniteSpace::from_fn(vec![1.0; n], 1.0, |i, j| (pos[i] - pos[j]).abs())?
        }
        SpaceSpec::Snowflake { n, theta } => {
            check_size(*n)?;
            if !(*theta > 0.0 && theta.is_finite()) {
                bail!("snowflake exponent must be positive, got {theta}");
            }
            let t = *theta;
            FiniteSpace::fitted(vec![1.0; *n], |i, j| (i as f64 - j as f64).abs().powf(t))?
        }
        SpaceSpec::RandomDoubling { n } => {
            check_size(*n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sep = 0.5 / (*n as f64).sqrt();
            let mut pts: Vec<(f64, f64)> = Vec::with_capacity(*n);
            let mut tries = 0;
            while pts.len() < *n {
                tries += 1;
                if tries > 100_000 {
                    bail!("could not place {n} separated points");
                }
                let c = (rng.gen::<f64>(), rng.gen::<f64>());
                if pts.iter().all(|p| (p.0 - c.0).hypot(p.1 - c.1) >= sep) {
                    pts.push(c);
                }
            }
            let mass: Vec<f64> = (0..*n).map(|_| rng.gen_range(0.5..=2.0)).collect();
            FiniteSpace::from_fn(mass, 1.0, |i, j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1))?
        }
        SpaceSpec::File { path } => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading space file {path}"))?;
            FiniteSpace::from_json(&text)?
        }
    };
    Ok(space)
}

fn check_size(n: usize) -> anyhow::Result<()> {
    if !(2..=512).contains(&n) {
        bail!("space size {n} is outside 2..=512");
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    Constant {
        value: f64,
    },
    /// `max(d(x, x0), r_min)^alpha`, with `x0` defaulting to point 0 and
    /// `r_min` to the smallest positive distance.
    Power {
        #[serde(default)]
        x0: Option<usize>,
        alpha: f64,
    },
    Checkerboard {
        block: usize,
        high: f64,
        low: f64,
    },
    /// Log-uniform values in `[e^{−spread}, e^{spread}]`; the scenario seed
    /// is mixed in.
    Random {
        spread: f64,
    },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Constant { value: 1.0 }
    }
}

pub fn make_weight(space: &FiniteSpace, spec: &WeightSpec, seed: u64) -> anyhow::Result<Weight> {
    let n = space.len();
    Ok(match spec {
        WeightSpec::Constant { value } => Weight::new(vec![*value; n])?,
        WeightSpec::Power { x0, alpha } => {
            let r_min = space.min_positive_distance().unwrap_or(1.0);
            power_weight(space, x0.unwrap_or(0).min(n - 1), *alpha, r_min)?
        }
        WeightSpec::Checkerboard { block, high, low } => checkerboard_weight(n, *block, *high, *low)?,
        WeightSpec::Random { spread } => random_weight(n, *spread, seed)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolSpec {
    Constant {
        value: f64,
    },
    /// `d(x, x0)/diam`: oscillation dies out at small scales.
    Smooth {
        #[serde(default)]
        x0: Option<usize>,
    },
    /// `(−1)^x`: oscillation persists at every scale.
    Alternating,
    /// `ln max(d(x, x0), r_min)`.
    LogDistance {
        #[serde(default)]
        x0: Option<usize>,
    },
    Random {
        amp: f64,
    },
}

impl Default for SymbolSpec {
    fn default() -> Self {
        SymbolSpec::Smooth { x0: None }
    }
}

pub fn make_symbol(space: &FiniteSpace, spec: &SymbolSpec, seed: u64) -> Vec<f64> {
    let n = space.len();
    let r_min = space.min_positive_distance().unwrap_or(1.0);
    match spec {
        SymbolSpec::Constant { value } => vec![*value; n],
        SymbolSpec::Smooth { x0 } => smooth_symbol(space, x0.unwrap_or(0).min(n - 1)),
        SymbolSpec::Alternating => alternating_symbol(n),
        SymbolSpec::LogDistance { x0 } => log_distance_symbol(space, x0.unwrap_or(0).min(n - 1), r_min),
        SymbolSpec::Random { amp } => random_symbol(n, *amp, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms_round_trip() {
        for s in ["grid1d:4", "grid2d:3x5", "cantor:3", "snowflake:16:0.5", "random-doubling:20"] {
            let spec: SpaceSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("torus:4".parse::<SpaceSpec>().is_err());
        assert!("grid2d:4".parse::<SpaceSpec>().is_err());
    }

    #[test]
    fn four_point_grid() {
        let s = make_space(&SpaceSpec::Grid1d { n: 4 }, 0).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.d(0, 3), 3.0);
        assert_eq!(s.total_mass(), 4.0);
        assert_eq!(s.a0(), 1.0);
    }

    #[test]
    fn cantor_points_and_doubling() {
        let s = make_space(&SpaceSpec::Cantor { level: 3 }, 0).unwrap();
        assert_eq!(s.len(), 8);
        assert!((s.min_positive_distance().unwrap() - 2.0 / 27.0).abs() < 1e-12);
        assert!((s.diameter() - 26.0 / 27.0).abs() < 1e-12);
        // a ball around an endpoint doubles into its sibling block
        let d = s.doubling_constant();
        assert!(d.c_mu >= 2.0 && d.c_mu.is_finite());
    }

    #[test]
    fn snowflake_constant_is_fitted() {
        for theta in [0.5, 2.0] {
            let s = make_space(&SpaceSpec::Snowflake { n: 4, theta }, 0).unwrap();
            let bound = 2f64.powf((theta - 1.0).max(0.0));
            assert!(s.a0() <= bound + 1e-12);
            for x in 0..4 {
                for y in 0..4 {
                    for z in 0..4 {
                        assert!(s.d(x, y) <= s.a0() * (s.d(x, z) + s.d(z, y)) + 1e-12);
                    }
                }
            }
        }
        let sq = make_space(&SpaceSpec::Snowflake { n: 4, theta: 2.0 }, 0).unwrap();
        assert!(sq.a0() > 1.0);
    }

    #[test]
    fn random_doubling_is_seeded() {
        let a = make_space(&SpaceSpec::RandomDoubling { n: 12 }, 3).unwrap();
        let b = make_space(&SpaceSpec::RandomDoubling { n: 12 }, 3).unwrap();
        let c = make_space(&SpaceSpec::RandomDoubling { n: 12 }, 4).unwrap();
        assert_eq!(a.to_data(), b.to_data());
        assert_ne!(a.to_data(), c.to_data());
    }
}
