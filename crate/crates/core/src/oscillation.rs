//! Mean oscillation, medians, weighted BMO functionals and VMO profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::space::FiniteSpace;
use crate::weights::{bloom_weight, conjugate, dual_weight, Weight};

fn nonempty(set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return arg("oscillation over an empty set");
    }
    Ok(())
}

/// Smallest data value `α` of `b` on `set` with `μ{b ≤ α} ≥ μ(set)/2`.
/// It minimizes `Σ |b − c| m` and both strict level sets carry at most half
/// the mass.
pub fn median(space: &FiniteSpace, b: &[f64], set: &[usize]) -> Result<f64> {
    nonempty(set)?;
    let mut pts: Vec<usize> = set.to_vec();
    pts.sort_by(|&x, &y| b[x].partial_cmp(&b[y]).unwrap().then(x.cmp(&y)));
    let half = space.measure(set) / 2.0;
    let mut acc = 0.0;
    for &x in &pts {
        acc += space.mass(x);
        if acc >= half * (1.0 - 1e-12) {
            return Ok(b[x]);
        }
    }
    Ok(b[*pts.last().unwrap()])
}

/// `Ω(b, E) = (1/μ(E)) Σ_E |b − b_E| m`.
pub fn mean_oscillation(space: &FiniteSpace, b: &[f64], set: &[usize]) -> Result<f64> {
    nonempty(set)?;
    let avg = space.average(b, set);
    Ok(centered_oscillation(space, b, set, avg))
}

/// Mean absolute deviation from the median.
pub fn median_oscillation(space: &FiniteSpace, b: &[f64], set: &[usize]) -> Result<f64> {
    let m = median(space, b, set)?;
    Ok(centered_oscillation(space, b, set, m))
}

fn centered_oscillation(space: &FiniteSpace, b: &[f64], set: &[usize], c: f64) -> f64 {
    let s: f64 = set.iter().map(|&x| (b[x] - c).abs() * space.mass(x)).sum();
    s / space.measure(set)
}

/// `((1/w(E)) Σ_E |b − b_E|^r w^{1−r} m)^{1/r}`.
pub fn weighted_oscillation(space: &FiniteSpace, b: &[f64], w: &Weight, r: f64, set: &[usize]) -> Result<f64> {
    nonempty(set)?;
    if !(r >= 1.0) {
        return arg(format!("oscillation exponent must be at least 1, got {r}"));
    }
    let avg = space.average(b, set);
    let s: f64 = set
        .iter()
        .map(|&x| (b[x] - avg).abs().powf(r) * w.get(x).powf(1.0 - r) * space.mass(x))
        .sum();
    Ok((s / w.measure(space, set)).powf(1.0 / r))
}

/// Supremum of [`weighted_oscillation`] over a family of sets.
pub fn weighted_bmo_norm(space: &FiniteSpace, b: &[f64], w: &Weight, r: f64, sets: &[&[usize]]) -> Result<f64> {
    if sets.is_empty() {
        return arg("BMO norm over an empty family");
    }
    let mut best: f64 = 0.0;
    for s in sets {
        best = best.max(weighted_oscillation(space, b, w, r, s)?);
    }
    Ok(best)
}

/// The same norm over all distinct balls.
pub fn weighted_bmo_norm_balls(space: &FiniteSpace, b: &[f64], w: &Weight, r: f64) -> Result<f64> {
    let sets: Vec<&[usize]> = space.distinct_balls().iter().map(|b| b.members.as_slice()).collect();
    weighted_bmo_norm(space, b, w, r, &sets)
}

/// Two `A_p` weights together with the weights derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BloomWeights {
    pub p: f64,
    pub lam1: Weight,
    pub lam2: Weight,
    /// `λ1^{1/p} λ2^{−1/p}`.
    pub nu: Weight,
    /// `λ1^{−1/(p−1)}`.
    pub lam1_dual: Weight,
    /// `λ2^{−1/(p−1)}`.
    pub lam2_dual: Weight,
}

impl BloomWeights {
    pub fn new(lam1: Weight, lam2: Weight, p: f64) -> Result<Self> {
        let nu = bloom_weight(&lam1, &lam2, p)?;
        let lam1_dual = dual_weight(&lam1, p)?;
        let lam2_dual = dual_weight(&lam2, p)?;
        Ok(BloomWeights {
            p,
            lam1,
            lam2,
            nu,
            lam1_dual,
            lam2_dual,
        })
    }

    pub fn p_dual(&self) -> f64 {
        conjugate(self.p)
    }
}

/// The three normalizations of the oscillation of `b` in the two-weight setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `(1/ν(E)) Σ_E |b − b_E| m`.
    Nu,
    /// `((1/λ1(E)) Σ_E |b − b_E|^p λ2 m)^{1/p}`.
    Lambda,
    /// `((1/λ'2(E)) Σ_E |b − b_E|^{p'} λ'1 m)^{1/p'}`.
    LambdaPrime,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Nu, Variant::Lambda, Variant::LambdaPrime];
}

pub fn variant_oscillation(space: &FiniteSpace, b: &[f64], bw: &BloomWeights, variant: Variant, set: &[usize]) -> Result<f64> {
    nonempty(set)?;
    let avg = space.average(b, set);
    let (e, num, den) = match variant {
        Variant::Nu => (1.0, None, &bw.nu),
        Variant::Lambda => (bw.p, Some(&bw.lam2), &bw.lam1),
        Variant::LambdaPrime => (bw.p_dual(), Some(&bw.lam1_dual), &bw.lam2_dual),
    };
    let s: f64 = set
        .iter()
        .map(|&x| (b[x] - avg).abs().powf(e) * num.map_or(1.0, |w| w.get(x)) * space.mass(x))
        .sum();
    Ok((s / den.measure(space, set)).powf(1.0 / e))
}

/// Largest of the three variant functionals on one set.
pub fn max_variant_oscillation(space: &FiniteSpace, b: &[f64], bw: &BloomWeights, set: &[usize]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for v in Variant::ALL {
        best = best.max(variant_oscillation(space, b, bw, v, set)?);
    }
    Ok(best)
}

/// Fitted two-sided comparability `c0 ≤ F_ν / F_{λ'} ≤ C0` over the sets
/// where both functionals are nonzero.
pub fn variant_comparison(space: &FiniteSpace, b: &[f64], bw: &BloomWeights, sets: &[&[usize]]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for s in sets {
        let a = variant_oscillation(space, b, bw, Variant::Nu, s)?;
        let c = variant_oscillation(space, b, bw, Variant::LambdaPrime, s)?;
        if a > 1e-14 && c > 1e-14 {
            lo = lo.min(a / c);
            hi = hi.max(a / c);
        }
    }
    if hi == 0.0 {
        return Ok((1.0, 1.0));
    }
    Ok((lo, hi))
}

/// Center of a smallest enclosing ball: least eccentricity, then largest
/// mass, then lowest id.
pub fn default_base_point(space: &FiniteSpace) -> usize {
    let ecc = |x: usize| space.row(x).iter().cloned().fold(0.0, f64::max);
    (0..space.len())
        .min_by(|&a, &b| {
            ecc(a)
                .partial_cmp(&ecc(b))
                .unwrap()
                .then(space.mass(b).partial_cmp(&space.mass(a)).unwrap())
                .then(a.cmp(&b))
        })
        .unwrap()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub center: usize,
    pub radius: f64,
    /// `d(x0, B) = min_{y∈B} d(x0, y)`.
    pub distance: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VmoProfile {
    pub variant: Variant,
    pub x0: usize,
    pub delta: f64,
    /// `(δ^j, sup over δ^{j+1} < r ≤ δ^j)`, ordered by increasing radius.
    pub radius_buckets: Vec<(f64, f64)>,
    /// `(2^j s, sup over 2^j s ≤ d(x0,B) < 2^{j+1} s)` with `s` the smallest
    /// positive distance from `x0`; the first bucket also holds `d = 0`.
    pub far_buckets: Vec<(f64, f64)>,
    pub entries: Vec<ProfileEntry>,
    pub global: f64,
}

impl VmoProfile {
    /// Sup over balls with `r(B) ≤ a`.
    pub fn omega_small(&self, a: f64) -> f64 {
        self.sup_where(|e| e.radius <= a)
    }

    /// Sup over balls with `r(B) ≥ a`.
    pub fn omega_large(&self, a: f64) -> f64 {
        self.sup_where(|e| e.radius >= a)
    }

    /// Sup over balls with `d(x0, B) ≥ a`.
    pub fn omega_far(&self, a: f64) -> f64 {
        self.sup_where(|e| e.distance >= a)
    }

    fn sup_where(&self, keep: impl Fn(&ProfileEntry) -> bool) -> f64 {
        self.entries.iter().filter(|e| keep(e)).map(|e| e.value).fold(0.0, f64::max)
    }
}

fn bucket_sups(keys: impl Iterator<Item = (i64, f64)>) -> Vec<(i64, f64)> {
    let mut map = std::collections::BTreeMap::new();
    for (k, v) in keys {
        let e = map.entry(k).or_insert(0.0f64);
        *e = e.max(v);
    }
    map.into_iter().collect()
}

pub fn vmo_profile(
    space: &FiniteSpace,
    b: &[f64],
    bw: &BloomWeights,
    x0: Option<usize>,
    variant: Variant,
    delta: f64,
) -> Result<VmoProfile> {
    if !(delta > 0.0 && delta < 1.0) {
        return arg("profile scale must lie in (0,1)");
    }
    let x0 = x0.unwrap_or_else(|| default_base_point(space));
    if x0 >= space.len() {
        return arg(format!("base point {x0} is out of range"));
    }
    let row = space.row(x0);
    let mut entries = Vec::new();
    for ball in space.canonical_balls() {
        let value = variant_oscillation(space, b, bw, variant, &ball.members)?;
        let distance = ball.members.iter().map(|&y| row[y]).fold(f64::INFINITY, f64::min);
        entries.push(ProfileEntry {
            center: ball.center,
            radius: ball.radius,
            distance,
            value,
        });
    }
    let global = entries.iter().map(|e| e.value).fold(0.0, f64::max);
    // bucket j holds δ^{j+1} < r ≤ δ^j
    let radius_buckets: Vec<(f64, f64)> = bucket_sups(entries.iter().map(|e| {
        let mut j = (e.radius.ln() / delta.ln()).floor() as i64;
        while delta.powi(j as i32) < e.radius {
            j -= 1;
        }
        while delta.powi(j as i32 + 1) >= e.radius {
            j += 1;
        }
        (-j, e.value)
    }))
    .into_iter()
    .map(|(mj, v)| (delta.powi(-mj as i32), v))
    .collect();
    let s = space.row(x0).iter().cloned().filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    let s = if s.is_finite() { s } else { 1.0 };
    let far_buckets = bucket_sups(entries.iter().map(|e| {
        let j = if e.distance < s {
            0
        } else {
            (e.distance / s).log2().floor().max(0.0) as i64
        };
        (j, e.value)
    }))
    .into_iter()
    .map(|(j, v)| (s * 2f64.powi(j as i32), v))
    .collect();
    Ok(VmoProfile {
        variant,
        x0,
        delta,
        radius_buckets,
        far_buckets,
        entries,
        global,
    })
}

/// `ln max(d(x, x0), r_min)`.
pub fn log_distance_symbol(space: &FiniteSpace, x0: usize, r_min: f64) -> Vec<f64> {
    (0..space.len()).map(|x| space.d(x, x0).max(r_min).ln()).collect()
}

/// `Σ_i c_i 1_{E_i}`.
pub fn indicator_sum_symbol(n: usize, sets: &[(Vec<usize>, f64)]) -> Vec<f64> {
    let mut b = vec![0.0; n];
    for (set, c) in sets {
        for &x in set {
            b[x] += c;
        }
    }
    b
}

/// Independent uniform values in `[−amp, amp]`.
pub fn random_symbol(n: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| amp * rng.gen_range(-1.0..=1.0)).collect()
}

/// `d(x, x0) / diam`: oscillation shrinks with the scale of the ball.
pub fn smooth_symbol(space: &FiniteSpace, x0: usize) -> Vec<f64> {
    let diam = space.diameter().max(f64::MIN_POSITIVE);
    (0..space.len()).map(|x| space.d(x, x0) / diam).collect()
}

/// `(−1)^x`: oscillation of order one at every scale.
pub fn alternating_symbol(n: usize) -> Vec<f64> {
    (0..n).map(|x| if x % 2 == 0 { 1.0 } else { -1.0 }).collect()
}
