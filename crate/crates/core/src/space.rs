//! Finite quasi-metric measure spaces, their balls and doubling diagnostics.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Relative slack allowed when comparing the tight quasi-triangle constant
/// against the declared one.
const A0_SLACK: f64 = 1e-12;

/// JSON shape of a space: `{ "points": n, "dist": [[...]], "mass": [...], "a0": r }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceData {
    pub points: usize,
    pub dist: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub a0: f64,
}

#[derive(Clone, Debug)]
pub struct FiniteSpace {
    n: usize,
    dist: Vec<f64>,
    mass: Vec<f64>,
    a0: f64,
    balls: OnceLock<Vec<Ball>>,
}

/// An open ball `{ y : d(center, y) < radius }`. `reach` is the largest
/// distance from the center to a member, which is the smallest radius that
/// still describes the same set in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub reach: f64,
    pub members: Vec<usize>,
}

impl Ball {
    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Doubling {
    pub c_mu: f64,
    pub n_dim: f64,
}

impl Doubling {
    /// Exponent `n` with `μ(B(x, 2^j r)) ≤ (2^j)^n μ(B(x, r))`, obtained by
    /// iterating the doubling constant; never smaller than the fitted `n_dim`.
    pub fn upper_dimension(&self) -> f64 {
        self.n_dim.max(self.c_mu.log2())
    }
}

impl FiniteSpace {
    pub fn new(dist: Vec<Vec<f64>>, mass: Vec<f64>, a0: f64) -> Result<Self> {
        let n = mass.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::Space(format!("distance matrix must be {n}x{n} to match {n} masses")));
        }
        let flat = dist.into_iter().flatten().collect();
        Self::from_flat(n, flat, mass, a0)
    }

    pub fn from_fn(mass: Vec<f64>, a0: f64, d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = mass.len();
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                flat.push(if i == j { 0.0 } else { d(i, j) });
            }
        }
        Self::from_flat(n, flat, mass, a0)
    }

    /// Like [`FiniteSpace::from_fn`] but with `a0` set to the tight
    /// quasi-triangle constant of `d` (at least 1).
    pub fn fitted(mass: Vec<f64>, d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let probe = Self::from_fn_unchecked(mass.clone(), &d);
        let a0 = probe.quasi_triangle_constant().max(1.0);
        Self::from_fn(mass, a0, d)
    }

    fn from_fn_unchecked(mass: Vec<f64>, d: impl Fn(usize, usize) -> f64) -> Self {
        let n = mass.len();
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                flat.push(if i == j { 0.0 } else { d(i, j) });
            }
        }
        FiniteSpace {
            n,
            dist: flat,
            mass,
            a0: 1.0,
            balls: OnceLock::new(),
        }
    }

    fn from_flat(n: usize, dist: Vec<f64>, mass: Vec<f64>, a0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Space("a space needs at least one point".into()));
        }
        if !(a0 >= 1.0 && a0.is_finite()) {
            return Err(Error::Space(format!("a0 must be a finite real >= 1, got {a0}")));
        }
        for (x, &m) in mass.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Space(format!("mass of point {x} must be positive, got {m}")));
            }
        }
        for x in 0..n {
            if dist[x * n + x] != 0.0 {
                return Err(Error::Space(format!("d({x},{x}) must be 0")));
            }
            for y in (x + 1)..n {
                let (a, b) = (dist[x * n + y], dist[y * n + x]);
                if a != b {
                    return Err(Error::Space(format!("d({x},{y}) = {a} but d({y},{x}) = {b}")));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::Space(format!(
                        "d({x},{y}) = {a}; distinct points need a finite positive distance"
                    )));
                }
            }
        }
        let space = FiniteSpace {
            n,
            dist,
            mass,
            a0,
            balls: OnceLock::new(),
        };
        let tight = space.quasi_triangle_constant();
        if tight > a0 * (1.0 + A0_SLACK) {
            return Err(Error::Space(format!(
                "quasi-triangle inequality needs a0 >= {tight}, declared {a0}"
            )));
        }
        Ok(space)
    }

    pub fn from_data(data: SpaceData) -> Result<Self> {
        if data.points != data.mass.len() {
            return Err(Error::Space(format!(
                "\"points\" is {} but {} masses were given",
                data.points,
                data.mass.len()
            )));
        }
        Self::new(data.dist, data.mass, data.a0)
    }

    pub fn to_data(&self) -> SpaceData {
        SpaceData {
            points: self.n,
            dist: (0..self.n).map(|x| self.row(x).to_vec()).collect(),
            mass: self.mass.clone(),
            a0: self.a0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: SpaceData = serde_json::from_str(text).map_err(|e| Error::Space(format!("bad space JSON: {e}")))?;
        Self::from_data(data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    #[inline]
    pub fn mass(&self, x: usize) -> f64 {
        self.mass[x]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn measure(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.mass[x]).sum()
    }

    /// μ-average of `f` over `set`.
    pub fn average(&self, f: &[f64], set: &[usize]) -> f64 {
        let num: f64 = set.iter().map(|&x| f[x] * self.mass[x]).sum();
        num / self.measure(set)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .iter()
            .cloned()
            .filter(|&d| d > 0.0)
            .fold(None, |m, d| Some(m.map_or(d, |m: f64| m.min(d))))
    }

    /// Smallest `A` with `d(x,y) ≤ A (d(x,z) + d(z,y))` over all triples.
    pub fn quasi_triangle_constant(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = if n > 1 { 1.0 } else { 0.0 };
        for x in 0..n {
            let rx = self.row(x);
            for y in (x + 1)..n {
                let dxy = rx[y];
                let ry = self.row(y);
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    let ratio = dxy / (rx[z] + ry[z]);
                    if ratio > worst {
                        worst = ratio;
                    }
                }
            }
        }
        worst.max(1.0)
    }

    pub fn ball(&self, center: usize, radius: f64) -> Result<Ball> {
        self.check_point(center)?;
        if !(radius > 0.0) {
            return arg(format!("ball radius must be positive, got {radius}"));
        }
        let row = self.row(center);
        let members: Vec<usize> = (0..self.n).filter(|&y| row[y] < radius).collect();
        let reach = members.iter().map(|&y| row[y]).fold(0.0, f64::max);
        Ok(Ball {
            center,
            radius,
            reach,
            members,
        })
    }

    /// The closed ball `{ y : d(center, y) ≤ reach }`, carried with the
    /// canonical open radius describing the same set.
    pub fn closed_ball(&self, center: usize, reach: f64) -> Ball {
        let row = self.row(center);
        let mut members = Vec::new();
        let mut inner: f64 = 0.0;
        let mut next = f64::INFINITY;
        for (y, &d) in row.iter().enumerate() {
            if d <= reach {
                members.push(y);
                inner = inner.max(d);
            } else {
                next = next.min(d);
            }
        }
        let radius = if next.is_finite() { 0.5 * (inner + next) } else { inner + 1.0 };
        Ball {
            center,
            radius,
            reach: inner,
            members,
        }
    }

    /// Sorted distinct distances from `x`, starting with 0.
    pub fn distance_levels(&self, x: usize) -> Vec<f64> {
        let mut levels: Vec<f64> = self.row(x).to_vec();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        levels
    }

    /// Every ball centered at `x`, one per distance level, with radius at the
    /// midpoint to the next level (the last level uses `max + 1`).
    pub fn balls_at(&self, x: usize) -> Vec<Ball> {
        let levels = self.distance_levels(x);
        let row = self.row(x);
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap().then(a.cmp(&b)));
        let mut out = Vec::with_capacity(levels.len());
        let mut taken = 0;
        for (i, &level) in levels.iter().enumerate() {
            while taken < order.len() && row[order[taken]] <= level {
                taken += 1;
            }
            let mut members = order[..taken].to_vec();
            members.sort_unstable();
            let radius = match levels.get(i + 1) {
                Some(&next) => 0.5 * (level + next),
                None => level + 1.0,
            };
            out.push(Ball {
                center: x,
                radius,
                reach: level,
                members,
            });
        }
        out
    }

    /// All canonical balls of the space, center by center.
    pub fn canonical_balls(&self) -> Vec<Ball> {
        (0..self.n).flat_map(|x| self.balls_at(x)).collect()
    }

    /// Canonical balls with duplicate member sets removed; the first
    /// occurrence (lowest center, then smallest radius) is kept.
    pub fn distinct_balls(&self) -> &[Ball] {
        self.balls.get_or_init(|| {
            let mut seen = HashSet::new();
            self.canonical_balls()
                .into_iter()
                .filter(|b| seen.insert(b.members.clone()))
                .collect()
        })
    }

    /// Tight doubling constant and fitted upper dimension.
    pub fn doubling_constant(&self) -> Doubling {
        let mut c_mu: f64 = 1.0;
        // per center: distance levels and μ({d ≤ level})
        let mut tables = Vec::with_capacity(self.n);
        for x in 0..self.n {
            let levels = self.distance_levels(x);
            let row = self.row(x);
            let cumulative: Vec<f64> = levels
                .iter()
                .map(|&l| (0..self.n).filter(|&y| row[y] <= l).map(|y| self.mass[y]).sum())
                .collect();
            for i in 0..levels.len().saturating_sub(1) {
                // radii in (levels[i], levels[i+1]] give the same ball; the
                // doubled ball is largest at the right end.
                let doubled = 2.0 * levels[i + 1];
                let outer: f64 = (0..self.n).filter(|&y| row[y] < doubled).map(|y| self.mass[y]).sum();
                c_mu = c_mu.max(outer / cumulative[i]);
            }
            tables.push((levels, cumulative));
        }
        let mut n_dim: f64 = 0.0;
        for (levels, cumulative) in &tables {
            for i in 0..levels.len().saturating_sub(1) {
                let next = levels[i + 1];
                for j in (i + 1)..levels.len() {
                    let lambda = levels[j] / next;
                    let ratio = cumulative[j] / cumulative[i];
                    if lambda > 1.0 && ratio > c_mu {
                        n_dim = n_dim.max((ratio / c_mu).ln() / lambda.ln());
                    }
                }
            }
        }
        Doubling { c_mu, n_dim }
    }

    pub(crate) fn check_point(&self, x: usize) -> Result<()> {
        if x >= self.n {
            return arg(format!("point id {x} out of range for a {}-point space", self.n));
        }
        Ok(())
    }

    pub(crate) fn check_function(&self, f: &[f64], what: &str) -> Result<()> {
        if f.len() != self.n {
            return arg(format!("{what} has {} values for a {}-point space", f.len(), self.n));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return arg(format!("{what} has non-finite values"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> FiniteSpace {
        FiniteSpace::from_fn(vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap()
    }

    #[test]
    fn ball_uses_strict_inequality() {
        let s = grid(4);
        assert_eq!(s.ball(1, 1.5).unwrap().members, vec![0, 1, 2]);
        assert_eq!(s.ball(1, 1.0).unwrap().members, vec![1]);
        let two = grid(2);
        assert_eq!(two.ball(0, 0.5).unwrap().members, vec![0]);
    }

    #[test]
    fn surrogate_infinite_radius_covers_everything() {
        let s = grid(5);
        let r = s.diameter() + 1.0;
        for x in 0..5 {
            assert_eq!(s.ball(x, r).unwrap().len(), 5);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let s = grid(3);
        assert!(s.ball(3, 1.0).is_err());
        assert!(s.ball(0, 0.0).is_err());
        let dup = FiniteSpace::from_fn(vec![1.0; 3], 1.0, |i, j| if i + j == 1 { 0.0 } else { 1.0 });
        assert!(dup.is_err());
        let neg = FiniteSpace::from_fn(vec![1.0, -1.0], 1.0, |_, _| 1.0);
        assert!(neg.is_err());
        let asym = FiniteSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![1.0, 1.0], 1.0);
        assert!(asym.is_err());
    }

    #[test]
    fn declared_a0_must_dominate_tight_constant() {
        // d = |i-j|^2 on three collinear points: d(0,2)=4, d(0,1)+d(1,2)=2
        let sq = |i: usize, j: usize| (i as f64 - j as f64).powi(2);
        assert!(FiniteSpace::from_fn(vec![1.0; 3], 1.0, sq).is_err());
        let ok = FiniteSpace::from_fn(vec![1.0; 3], 2.0, sq).unwrap();
        assert!((ok.quasi_triangle_constant() - 2.0).abs() < 1e-15);
        let fitted = FiniteSpace::fitted(vec![1.0; 3], sq).unwrap();
        assert_eq!(fitted.a0(), 2.0);
    }

    #[test]
    fn doubling_examples() {
        let one = FiniteSpace::from_fn(vec![1.0], 1.0, |_, _| 0.0).unwrap();
        assert_eq!(one.doubling_constant().c_mu, 1.0);
        let two = FiniteSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 100.0], 1.0).unwrap();
        assert_eq!(two.doubling_constant().c_mu, 101.0);
    }

    #[test]
    fn doubling_constant_matches_brute_force_over_radii() {
        let s = grid(8);
        let mut brute: f64 = 1.0;
        // every distinct ball is realised by a radius in a fine grid
        for x in 0..8 {
            for step in 1..400 {
                let r = step as f64 * 0.025;
                let inner = s.measure(&s.ball(x, r).unwrap().members);
                let outer = s.measure(&s.ball(x, 2.0 * r).unwrap().members);
                brute = brute.max(outer / inner);
            }
        }
        let c = s.doubling_constant().c_mu;
        assert!((c - brute).abs() < 1e-12, "{c} vs {brute}");
        assert!(c <= 3.0);
    }

    #[test]
    fn canonical_balls_enumerate_every_ball() {
        let s = FiniteSpace::from_fn(vec![1.0, 2.0, 0.5, 1.5, 1.0], 1.0, |i, j| {
            let p: [f64; 5] = [0.0, 1.0, 2.5, 3.0, 7.0];
            (p[i] - p[j]).abs()
        })
        .unwrap();
        let canon: HashSet<Vec<usize>> = s.canonical_balls().into_iter().map(|b| b.members).collect();
        for x in 0..5 {
            for step in 1..200 {
                let b = s.ball(x, step as f64 * 0.05).unwrap();
                assert!(canon.contains(&b.members));
            }
        }
        for b in s.canonical_balls() {
            let again = s.ball(b.center, b.radius).unwrap();
            assert_eq!(again.members, b.members);
            assert_eq!(s.closed_ball(b.center, b.reach).members, b.members);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = grid(3);
        let text = serde_json::to_string(&s.to_data()).unwrap();
        let back = FiniteSpace::from_json(&text).unwrap();
        assert_eq!(back.to_data(), s.to_data());
    }
}
