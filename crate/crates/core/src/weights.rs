//! Muckenhoupt weights on a finite space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::space::FiniteSpace;

/// A strictly positive function on the points of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    values: Vec<f64>,
}

impl Weight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return arg("weight has no values");
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return arg(format!("weight value {} at point {i} is not positive", values[i]));
        }
        Ok(Weight { values })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Weight { values: vec![c; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    /// `w(E) = Σ_{x∈E} w(x) m(x)`.
    pub fn measure(&self, space: &FiniteSpace, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.values[x] * space.mass(x)).sum()
    }

    pub fn powf(&self, e: f64) -> Weight {
        Weight {
            values: self.values.iter().map(|v| v.powf(e)).collect(),
        }
    }

    pub fn mul(&self, other: &Weight) -> Weight {
        Weight {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Weight {
        Weight {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    fn check(&self, space: &FiniteSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return arg(format!(
                "weight has {} values for a space of {} points",
                self.values.len(),
                space.len()
            ));
        }
        Ok(())
    }
}

/// `p' = p/(p−1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return arg(format!("exponent p must exceed 1, got {p}"));
    }
    Ok(())
}

/// `avg_E w^e` as `(ln scale, factor)`: the largest power is pulled out so
/// extreme weights do not overflow, and the masses stay out of the logs so a
/// constant weight averages to exactly one.
fn scaled_avg_pow(space: &FiniteSpace, w: &Weight, e: f64, set: &[usize]) -> (f64, f64) {
    let top = set.iter().map(|&x| e * w.values[x].ln()).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for &x in set {
        let m = space.mass(x);
        num += (e * w.values[x].ln() - top).exp() * m;
        den += m;
    }
    (top, num / den)
}

/// `(avg_E w)(avg_E w^{1/(1−p)})^{p−1}` for one set.
pub fn ap_functional(space: &FiniteSpace, w: &Weight, p: f64, set: &[usize]) -> f64 {
    let (ta, a) = scaled_avg_pow(space, w, 1.0, set);
    let (tb, b) = scaled_avg_pow(space, w, 1.0 / (1.0 - p), set);
    (ta + (p - 1.0) * tb).exp() * a * b.powf(p - 1.0)
}

/// `[w]_{A_p}` as the supremum over all distinct balls.
pub fn ap_constant(space: &FiniteSpace, w: &Weight, p: f64) -> Result<f64> {
    check_p(p)?;
    w.check(space)?;
    let sets: Vec<&[usize]> = space.distinct_balls().iter().map(|b| b.members.as_slice()).collect();
    Ok(ap_constant_on(space, w, p, &sets))
}

/// The `A_p` supremum over an arbitrary family of sets, e.g. dyadic cubes.
pub fn ap_constant_on(space: &FiniteSpace, w: &Weight, p: f64, sets: &[&[usize]]) -> f64 {
    sets.iter().map(|s| ap_functional(space, w, p, s)).fold(1.0, f64::max)
}

/// `w^{−1/(p−1)}`.
pub fn dual_weight(w: &Weight, p: f64) -> Result<Weight> {
    check_p(p)?;
    Ok(w.powf(-1.0 / (p - 1.0)))
}

/// `ν = λ1^{1/p} λ2^{−1/p}`.
pub fn bloom_weight(lam1: &Weight, lam2: &Weight, p: f64) -> Result<Weight> {
    check_p(p)?;
    if lam1.len() != lam2.len() {
        return arg("weights have different lengths");
    }
    Ok(lam1.powf(1.0 / p).mul(&lam2.powf(-1.0 / p)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFit {
    /// Largest `Ĉ1` with `Ĉ1 (μ(E)/μ(B))^p ≤ w(E)/w(B)`.
    pub chat1: f64,
    pub chat2: f64,
    /// Largest `σ ≤ 1` with `w(E)/w(B) ≤ Ĉ2 (μ(E)/μ(B))^σ`.
    pub sigma: f64,
    pub ap: f64,
    /// Both inequalities hold on every pair and `Ĉ1 ≥ 1/[w]_{A_p}`.
    pub holds: bool,
    pub pairs: usize,
}

/// Fit the two-sided comparison between `w(E)/w(B)` and `μ(E)/μ(B)`.
///
/// Every nonempty subset is used for balls of at most `subset_cap` points;
/// larger balls use the prefix chains of points sorted by weight, which are
/// the extremal subsets for both ratios at a given measure.
pub fn comparison_check(space: &FiniteSpace, w: &Weight, p: f64, subset_cap: usize) -> Result<ComparisonFit> {
    check_p(p)?;
    w.check(space)?;
    let ap = ap_constant(space, w, p)?;
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for ball in space.distinct_balls() {
        let m = &ball.members;
        let mb = space.measure(m);
        let wb = w.measure(space, m);
        let mut push = |set: &[usize]| {
            pairs.push((space.measure(set) / mb, w.measure(space, set) / wb));
        };
        if m.len() <= subset_cap.min(20) {
            let mut set = Vec::with_capacity(m.len());
            for mask in 1u32..(1u32 << m.len()) {
                set.clear();
                set.extend((0..m.len()).filter(|i| mask >> i & 1 == 1).map(|i| m[i]));
                push(&set);
            }
        } else {
            let mut sorted = m.clone();
            sorted.sort_by(|&a, &b| w.values[a].partial_cmp(&w.values[b]).unwrap().then(a.cmp(&b)));
            for j in 1..=sorted.len() {
                push(&sorted[..j]);
                push(&sorted[sorted.len() - j..]);
            }
        }
    }
    let mut chat1 = f64::INFINITY;
    let mut sigma: f64 = 1.0;
    for &(mr, wr) in &pairs {
        chat1 = chat1.min(wr / mr.powf(p));
        if mr < 1.0 - 1e-12 && wr < 1.0 - 1e-12 {
            sigma = sigma.min(wr.ln() / mr.ln());
        }
    }
    let tol = 1e-9;
    let holds = pairs
        .iter()
        .all(|&(mr, wr)| chat1 * mr.powf(p) <= wr * (1.0 + tol) && wr <= mr.powf(sigma) * (1.0 + tol))
        && chat1 * ap >= 1.0 - tol;
    Ok(ComparisonFit {
        chat1,
        chat2: 1.0,
        sigma,
        ap,
        holds,
        pairs: pairs.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDoubling {
    /// Max of `w(λB)/(λ^{np} w(B))` over canonical balls and `λ ∈ {2,4,8}`.
    pub max_ratio: f64,
    pub ap: f64,
    pub n: f64,
    pub holds: bool,
}

pub fn weight_doubling_check(space: &FiniteSpace, w: &Weight, p: f64) -> Result<WeightDoubling> {
    check_p(p)?;
    w.check(space)?;
    let ap = ap_constant(space, w, p)?;
    let n = space.doubling_constant().upper_dimension();
    let mut max_ratio: f64 = 0.0;
    for ball in space.canonical_balls() {
        let wb = w.measure(space, &ball.members);
        for lambda in [2.0f64, 4.0, 8.0] {
            let big = space.ball(ball.center, lambda * ball.radius)?;
            let ratio = w.measure(space, &big.members) / (lambda.powf(n * p) * wb);
            max_ratio = max_ratio.max(ratio);
        }
    }
    Ok(WeightDoubling {
        max_ratio,
        ap,
        n,
        holds: max_ratio <= ap * (1.0 + 1e-9),
    })
}

/// Fitted reverse-Hölder constants: for each `δ`, the max over balls of
/// `avg_B w / (avg_B w^δ)^{1/δ}`.
pub fn reverse_holder(space: &FiniteSpace, w: &Weight, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    w.check(space)?;
    let mut out = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::Argument(format!("reverse Hölder exponent {d} outside (0,1)")));
        }
        let c = space
            .distinct_balls()
            .iter()
            .map(|b| {
                let (ta, a) = scaled_avg_pow(space, w, 1.0, &b.members);
                let (td, ad) = scaled_avg_pow(space, w, d, &b.members);
                (ta - td / d).exp() * a / ad.powf(1.0 / d)
            })
            .fold(1.0, f64::max);
        out.push((d, c));
    }
    Ok(out)
}

/// `w(x) = max(d(x, x0), r_min)^α`.
pub fn power_weight(space: &FiniteSpace, x0: usize, alpha: f64, r_min: f64) -> Result<Weight> {
    if !(r_min > 0.0) {
        return arg("power weight needs a positive clipping radius");
    }
    Weight::new((0..space.len()).map(|x| space.d(x, x0).max(r_min).powf(alpha)).collect())
}

/// Alternating values on consecutive blocks of point ids.
pub fn checkerboard_weight(n: usize, block: usize, high: f64, low: f64) -> Result<Weight> {
    if block == 0 {
        return arg("checkerboard block must be positive");
    }
    Weight::new((0..n).map(|x| if (x / block) % 2 == 0 { high } else { low }).collect())
}

/// `exp(U(−spread, spread))` per point.
pub fn random_weight(n: usize, spread: f64, seed: u64) -> Result<Weight> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = spread.abs();
    Weight::new((0..n).map(|_| if s == 0.0 { 1.0 } else { rng.gen_range(-s..s).exp() }).collect())
}
