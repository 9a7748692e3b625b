//! Haar functions on a dyadic system, the dyadic square function,
//! paraproducts, weighted atoms and the atomic decomposition.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicSystem;
use crate::error::{arg, Result};
use crate::norms::weighted_lp_norm;
use crate::oscillation::{variant_oscillation, weighted_oscillation, BloomWeights, Variant};
use crate::space::FiniteSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarFunction {
    pub cube: usize,
    /// `(point, value)` over the support.
    pub values: Vec<(usize, f64)>,
}

/// Orthonormal basis of `L²(μ)`: one normalized indicator per root cube plus
/// `m − 1` Haar functions for each cube with `m` children.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HaarBasis {
    n: usize,
    pub functions: Vec<HaarFunction>,
    /// Function indices per cube id.
    pub by_cube: Vec<Vec<usize>>,
    /// Root cube ids and their measures.
    pub roots: Vec<(usize, Vec<usize>, f64)>,
    /// Per cube: members and measure, cached for averages.
    cubes: Vec<(Vec<usize>, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    /// `⟨f, h⟩` for every Haar function.
    pub coef: Vec<f64>,
    /// `⟨f, 1_R⟩/√μ(R)` for every root.
    pub mean: Vec<f64>,
}

impl HaarBasis {
    pub fn new(space: &FiniteSpace, sys: &DyadicSystem) -> Self {
        let mut functions = Vec::new();
        let mut by_cube = vec![Vec::new(); sys.len()];
        for q in sys.cubes() {
            let kids = &q.children;
            if kids.len() < 2 {
                continue;
            }
            let mut union: Vec<usize> = Vec::new();
            let mut mu_u = 0.0;
            for j in 0..kids.len() - 1 {
                let prev = sys.cube(kids[j]);
                union.extend(prev.members.iter().copied());
                mu_u += prev.mass;
                let next = sys.cube(kids[j + 1]);
                let mu_v = next.mass;
                let norm = (1.0 / mu_u + 1.0 / mu_v).sqrt();
                let mut values: Vec<(usize, f64)> = union.iter().map(|&x| (x, 1.0 / mu_u / norm)).collect();
                values.extend(next.members.iter().map(|&x| (x, -1.0 / mu_v / norm)));
                values.sort_by_key(|&(x, _)| x);
                by_cube[q.id].push(functions.len());
                functions.push(HaarFunction { cube: q.id, values });
            }
        }
        let roots = sys
            .roots()
            .iter()
            .map(|&r| (r, sys.cube(r).members.clone(), sys.cube(r).mass))
            .collect();
        let _ = space;
        HaarBasis {
            n: space.len(),
            functions,
            by_cube,
            roots,
            cubes: sys.cubes().iter().map(|c| (c.members.clone(), c.mass)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Dense values of the `i`-th Haar function.
    pub fn dense(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for &(x, h) in &self.functions[i].values {
            v[x] = h;
        }
        v
    }

    pub fn expand(&self, space: &FiniteSpace, f: &[f64]) -> Expansion {
        let coef = self
            .functions
            .iter()
            .map(|h| h.values.iter().map(|&(x, v)| f[x] * v * space.mass(x)).sum())
            .collect();
        let mean = self
            .roots
            .iter()
            .map(|(_, members, mass)| members.iter().map(|&x| f[x] * space.mass(x)).sum::<f64>() / mass.sqrt())
            .collect();
        Expansion { coef, mean }
    }

    /// Inverse of [`HaarBasis::expand`].
    pub fn reconstruct(&self, e: &Expansion) -> Vec<f64> {
        let mut f = self.haar_part(&e.coef);
        for ((_, members, mass), c) in self.roots.iter().zip(&e.mean) {
            for &x in members {
                f[x] += c / mass.sqrt();
            }
        }
        f
    }

    /// `Σ c_i h_i`.
    pub fn haar_part(&self, coef: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.n];
        for (h, c) in self.functions.iter().zip(coef) {
            if *c != 0.0 {
                for &(x, v) in &h.values {
                    f[x] += c * v;
                }
            }
        }
        f
    }

    /// `S_D f = (Σ_Q Σ_ε f̂(Q,ε)² 1_Q/μ(Q))^{1/2}`.
    pub fn square_function(&self, space: &FiniteSpace, f: &[f64]) -> Vec<f64> {
        let e = self.expand(space, f);
        let mut s = vec![0.0; self.n];
        for (q, ids) in self.by_cube.iter().enumerate() {
            let energy: f64 = ids.iter().map(|&i| e.coef[i] * e.coef[i]).sum();
            if energy > 0.0 {
                let (members, mass) = &self.cubes[q];
                for &x in members {
                    s[x] += energy / mass;
                }
            }
        }
        s.iter().map(|v| v.sqrt()).collect()
    }

    fn cube_average(&self, space: &FiniteSpace, f: &[f64], q: usize) -> f64 {
        let (members, mass) = &self.cubes[q];
        members.iter().map(|&x| f[x] * space.mass(x)).sum::<f64>() / mass
    }

    /// `Π_b f = Σ b̂(Q) ⟨f⟩_Q h_Q`, or with `adjoint` set
    /// `Π*_b f = Σ b̂(Q) f̂(Q) 1_Q/μ(Q)`.
    pub fn paraproduct(&self, space: &FiniteSpace, b: &[f64], f: &[f64], adjoint: bool) -> Vec<f64> {
        let bh = self.expand(space, b);
        let mut out = vec![0.0; self.n];
        if adjoint {
            let fh = self.expand(space, f);
            for (i, h) in self.functions.iter().enumerate() {
                let c = bh.coef[i] * fh.coef[i];
                if c != 0.0 {
                    let (members, mass) = &self.cubes[h.cube];
                    for &x in members {
                        out[x] += c / mass;
                    }
                }
            }
        } else {
            for (i, h) in self.functions.iter().enumerate() {
                if bh.coef[i] == 0.0 {
                    continue;
                }
                let c = bh.coef[i] * self.cube_average(space, f, h.cube);
                for &(x, v) in &h.values {
                    out[x] += c * v;
                }
            }
        }
        out
    }
}

/// The three normalizations of a weighted atom supported in a set `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomVariant {
    /// `‖a‖_{L²_ν} ≤ ν(B)^{−1/2}`.
    NuL2,
    /// `‖a‖_{L^{p'}_{λ'2}} ≤ λ1(B)^{−1/p}`.
    LambdaPrime,
    /// `‖a‖_{L^p_{λ1}} ≤ λ'2(B)^{−1/p'}`.
    Lambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedAtom {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub variant: AtomVariant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub support_ok: bool,
    /// `|Σ a m|`.
    pub mean: f64,
    pub cancellation_ok: bool,
    pub norm: f64,
    pub bound: f64,
    pub valid: bool,
}

pub fn validate_atom(space: &FiniteSpace, atom: &WeightedAtom, bw: &BloomWeights) -> Result<AtomReport> {
    if atom.values.len() != space.len() {
        return arg("atom length does not match the space");
    }
    if atom.support.is_empty() {
        return arg("atom support is empty");
    }
    let support_ok = atom
        .values
        .iter()
        .enumerate()
        .all(|(x, v)| *v == 0.0 || atom.support.binary_search(&x).is_ok());
    let mean: f64 = atom.values.iter().enumerate().map(|(x, v)| v * space.mass(x)).sum();
    let scale: f64 = atom.values.iter().enumerate().map(|(x, v)| v.abs() * space.mass(x)).sum();
    let cancellation_ok = mean.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) || scale == 0.0;
    let (p, pd) = (bw.p, bw.p_dual());
    let set = &atom.support;
    let (norm, bound) = match atom.variant {
        AtomVariant::NuL2 => (
            weighted_lp_norm(space, &atom.values, &bw.nu, 2.0)?,
            bw.nu.measure(space, set).powf(-0.5),
        ),
        AtomVariant::LambdaPrime => (
            weighted_lp_norm(space, &atom.values, &bw.lam2_dual, pd)?,
            bw.lam1.measure(space, set).powf(-1.0 / p),
        ),
        AtomVariant::Lambda => (
            weighted_lp_norm(space, &atom.values, &bw.lam1, p)?,
            bw.lam2_dual.measure(space, set).powf(-1.0 / pd),
        ),
    };
    let valid = support_ok && cancellation_ok && norm <= bound * (1.0 + 1e-10);
    Ok(AtomReport {
        support_ok,
        mean,
        cancellation_ok,
        norm,
        bound,
        valid,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    /// `(β_j, a_j, stopping level k, maximal cube)`.
    pub atoms: Vec<(f64, WeightedAtom, i32, usize)>,
    /// The non-cancellative part `f − Σ β_j a_j`.
    pub mean_part: Vec<f64>,
    /// `‖S_D f‖_{L¹(ν)}`.
    pub square_norm: f64,
    /// `Σ|β_j| / ‖S_D f‖_{L¹(ν)}` (zero when there are no atoms).
    pub constant: f64,
}

/// Stopping-time decomposition of the cancellative part of `f` into atoms of
/// the `(λ'2, p')` normalization.
///
/// With `Ω_k = {S_D f > 2^k}`, a cube belongs to level `k` when
/// `ν(Q∩Ω_k) > ν(Q)/2 ≥ ν(Q∩Ω_{k+1})`; the Haar terms of the level-`k`
/// cubes below each maximal level-`k` cube form one atom.
pub fn atomic_decompose(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    basis: &HaarBasis,
    f: &[f64],
    bw: &BloomWeights,
) -> Result<AtomicDecomposition> {
    let mut e = basis.expand(space, f);
    // rounding noise from cancellative sums is not worth an atom
    let scale = e.coef.iter().chain(&e.mean).map(|c| c * c).sum::<f64>().sqrt();
    for c in e.coef.iter_mut() {
        if c.abs() <= 1e-12 * scale {
            *c = 0.0;
        }
    }
    let s = basis.square_function(space, &basis.haar_part(&e.coef));
    let square_norm: f64 = (0..space.len()).map(|x| s[x] * bw.nu.get(x) * space.mass(x)).sum();
    let mut level: Vec<Option<i32>> = vec![None; sys.len()];
    for q in sys.cubes() {
        let active = basis.by_cube[q.id].iter().any(|&i| e.coef[i] != 0.0);
        if !active {
            continue;
        }
        let nu_q = bw.nu.measure(space, &q.members);
        let mass_above = |k: i32| -> f64 {
            let t = 2f64.powi(k);
            q.members.iter().filter(|&&x| s[x] > t).map(|&x| bw.nu.get(x) * space.mass(x)).sum()
        };
        let smin = q.members.iter().map(|&x| s[x]).fold(f64::INFINITY, f64::min);
        let smax = q.members.iter().map(|&x| s[x]).fold(0.0, f64::max);
        // g(k) = ν(Q∩Ω_k) is full below log2(smin) and zero above log2(smax)
        let mut k = smin.log2().floor() as i32 - 1;
        let top = smax.log2().ceil() as i32 + 1;
        while k < top && mass_above(k + 1) > nu_q / 2.0 {
            k += 1;
        }
        level[q.id] = Some(k);
    }
    let mut atoms = Vec::new();
    let mut covered = vec![0.0; space.len()];
    for q in sys.cubes() {
        let Some(k) = level[q.id] else { continue };
        // maximal: no ancestor on the same level
        if sys.ancestors(q.id).iter().any(|&a| level[a] == Some(k)) {
            continue;
        }
        let mut coef = vec![0.0; basis.len()];
        let mut stack = vec![q.id];
        while let Some(r) = stack.pop() {
            if level[r] == Some(k) {
                for &i in &basis.by_cube[r] {
                    coef[i] = e.coef[i];
                }
            }
            stack.extend(sys.cube(r).children.iter().copied());
        }
        // descendants on the same level under a deeper maximal cube do not
        // exist: the nearest same-level ancestor of any such cube is q
        let piece = basis.haar_part(&coef);
        let size = weighted_lp_norm(space, &piece, &bw.lam2_dual, bw.p_dual())?;
        if size == 0.0 {
            continue;
        }
        let beta = size * bw.lam1.measure(space, &q.members).powf(1.0 / bw.p);
        for x in 0..space.len() {
            covered[x] += piece[x];
        }
        atoms.push((
            beta,
            WeightedAtom {
                support: q.members.clone(),
                values: piece.iter().map(|v| v / beta).collect(),
                variant: AtomVariant::LambdaPrime,
            },
            k,
            q.id,
        ));
    }
    let mean_part: Vec<f64> = (0..space.len()).map(|x| f[x] - covered[x]).collect();
    let total: f64 = atoms.iter().map(|a| a.0.abs()).sum();
    Ok(AtomicDecomposition {
        atoms,
        mean_part,
        square_norm,
        constant: if total == 0.0 { 0.0 } else { total / square_norm },
    })
}

/// `sup_Q` of the `(λ1, λ2)` oscillation over cubes, the dyadic
/// `BMO²(ν)` norm `sup_Q ((1/ν(Q)) ∫_Q |b − b_Q|² ν^{−1})^{1/2}`, and their ratio.
pub fn bmo2_comparison(space: &FiniteSpace, sys: &DyadicSystem, b: &[f64], bw: &BloomWeights) -> Result<(f64, f64, f64)> {
    let mut lhs: f64 = 0.0;
    let mut bmo2: f64 = 0.0;
    for q in sys.cubes() {
        lhs = lhs.max(variant_oscillation(space, b, bw, Variant::Lambda, &q.members)?);
        bmo2 = bmo2.max(weighted_oscillation(space, b, &bw.nu, 2.0, &q.members)?);
    }
    let ratio = if bmo2 > 0.0 { lhs / bmo2 } else { 0.0 };
    Ok((lhs, bmo2, ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::build_system;
    use crate::oscillation::random_symbol;
    use crate::weights::{random_weight, Weight};

    fn setup(n: usize, seed: u64) -> (FiniteSpace, DyadicSystem, HaarBasis) {
        let mass: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64 * 0.5).collect();
        let s = FiniteSpace::from_fn(mass, 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let sys = build_system(&s, 0.5, None, seed).unwrap();
        let h = HaarBasis::new(&s, &sys);
        (s, sys, h)
    }

    fn inner(s: &FiniteSpace, f: &[f64], g: &[f64]) -> f64 {
        (0..s.len()).map(|x| f[x] * g[x] * s.mass(x)).sum()
    }

    #[test]
    fn basis_is_orthonormal_and_complete() {
        let (s, _, h) = setup(8, 1);
        assert_eq!(h.len() + h.roots.len(), 8);
        for i in 0..h.len() {
            for j in 0..h.len() {
                let ip = inner(&s, &h.dense(i), &h.dense(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_has_no_haar_coefficients() {
        let (s, _, h) = setup(8, 2);
        let e = h.expand(&s, &[3.0; 8]);
        assert!(e.coef.iter().all(|c| c.abs() < 1e-12));
        assert!(h.square_function(&s, &[3.0; 8]).iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn haar_function_expands_to_a_unit_vector() {
        let (s, sys, h) = setup(8, 3);
        let f = h.dense(2);
        let e = h.expand(&s, &f);
        for (i, c) in e.coef.iter().enumerate() {
            assert!((c - if i == 2 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        let sq = h.square_function(&s, &f);
        let q = sys.cube(h.functions[2].cube);
        for x in 0..8 {
            let want = if q.contains(x) { q.mass.powf(-0.5) } else { 0.0 };
            assert!((sq[x] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_and_reconstruction() {
        let (s, _, h) = setup(8, 4);
        let f = random_symbol(8, 2.0, 11);
        let e = h.expand(&s, &f);
        let energy: f64 = e.coef.iter().chain(&e.mean).map(|c| c * c).sum();
        assert!((energy - inner(&s, &f, &f)).abs() < 1e-10);
        let back = h.reconstruct(&e);
        assert!(back.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-10));
        let sq = h.square_function(&s, &f);
        let haar_energy: f64 = e.coef.iter().map(|c| c * c).sum();
        assert!((inner(&s, &sq, &sq) - haar_energy).abs() < 1e-10);
    }

    #[test]
    fn paraproduct_examples() {
        let (s, sys, h) = setup(8, 5);
        let f = random_symbol(8, 1.0, 1);
        assert!(h.paraproduct(&s, &[2.0; 8], &f, false).iter().all(|v| v.abs() < 1e-12));
        let b = random_symbol(8, 1.0, 2);
        let out = h.paraproduct(&s, &b, &[1.5; 8], false);
        let mean = s.average(&b, &(0..8).collect::<Vec<_>>());
        for x in 0..8 {
            assert!((out[x] - 1.5 * (b[x] - mean)).abs() < 1e-10);
        }
        let g = random_symbol(8, 1.0, 3);
        let lhs = inner(&s, &h.paraproduct(&s, &b, &f, false), &g);
        let rhs = inner(&s, &f, &h.paraproduct(&s, &b, &g, true));
        assert!((lhs - rhs).abs() < 1e-10);
        for q in sys.cubes() {
            let ind: Vec<f64> = (0..8).map(|x| if q.contains(x) { 1.0 } else { 0.0 }).collect();
            let a = h.paraproduct(&s, &b, &ind, false);
            let c = h.paraproduct(&s, &b, &ind, true);
            let bq = s.average(&b, &q.members);
            for &x in &q.members {
                assert!((a[x] - c[x] - (b[x] - bq)).abs() < 1e-10);
            }
        }
    }

    fn bloom(n: usize) -> BloomWeights {
        BloomWeights::new(random_weight(n, 1.0, 7).unwrap(), random_weight(n, 1.0, 8).unwrap(), 2.5).unwrap()
    }

    #[test]
    fn atom_validation() {
        let s = FiniteSpace::from_fn(vec![1.0; 2], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let bw = BloomWeights::new(Weight::constant(2, 1.0), Weight::constant(2, 1.0), 2.0).unwrap();
        let zero = WeightedAtom {
            support: vec![0, 1],
            values: vec![0.0; 2],
            variant: AtomVariant::NuL2,
        };
        assert!(validate_atom(&s, &zero, &bw).unwrap().valid);
        // ±c with ν ≡ 1: ‖a‖ = c√2 ≤ 2^{−1/2} gives c = 1/2
        let bal = WeightedAtom {
            support: vec![0, 1],
            values: vec![0.5, -0.5],
            variant: AtomVariant::NuL2,
        };
        assert!(validate_atom(&s, &bal, &bw).unwrap().valid);
        let big = WeightedAtom {
            values: vec![0.6, -0.6],
            ..bal.clone()
        };
        assert!(!validate_atom(&s, &big, &bw).unwrap().valid);
        let biased = WeightedAtom {
            values: vec![0.5, -0.1],
            ..bal
        };
        let r = validate_atom(&s, &biased, &bw).unwrap();
        assert!(!r.cancellation_ok && !r.valid);
    }

    #[test]
    fn decomposition_of_constant_is_empty() {
        let (s, sys, h) = setup(8, 6);
        let d = atomic_decompose(&s, &sys, &h, &[2.0; 8], &bloom(8)).unwrap();
        assert!(d.atoms.is_empty());
        assert!(d.mean_part.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn decomposition_of_a_haar_function_is_one_atom() {
        let (s, sys, h) = setup(8, 7);
        let d = atomic_decompose(&s, &sys, &h, &h.dense(0), &bloom(8)).unwrap();
        assert_eq!(d.atoms.len(), 1);
    }

    #[test]
    fn random_decomposition_reconstructs_with_valid_atoms() {
        let (s, sys, h) = setup(16, 8);
        let bw = bloom(16);
        let f = random_symbol(16, 3.0, 21);
        let d = atomic_decompose(&s, &sys, &h, &f, &bw).unwrap();
        let mut sum = d.mean_part.clone();
        for (beta, a, _, _) in &d.atoms {
            assert!(validate_atom(&s, a, &bw).unwrap().valid);
            for x in 0..16 {
                sum[x] += beta * a.values[x];
            }
        }
        assert!(sum.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-10));
        // the remainder is the mean component only
        let e = h.expand(&s, &d.mean_part);
        assert!(e.coef.iter().all(|c| c.abs() < 1e-10));
        assert!(d.constant.is_finite() && d.constant > 0.0);
    }
}
