//! Bilinear sparse forms `T^{B,*}_{S,b}(f, g) = Σ_Q ⟨|b − b_Q| f⟩_Q ⟨g⟩_Q 1_Q`.
//!
//! The cube partition is the linear one taken at exponent `p1`. Each part is
//! controlled by the linear part times the dyadic maximal function of `g`:
//! pointwise `T^{B,*}_P(f, g) ≤ T*_P |f| · M_D g`, and Hölder with
//! `1/p = 1/p1 + 1/p2` splits `L^p(ŵ)` into `L^{p1}_{λ2} · L^{p2}_w`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicSystem;
use crate::error::{arg, Result};
use crate::maximal::dyadic_maximal;
use crate::norms::compact::{compact_split, tail_norm_report, CompactSplit, PART_NAMES};
use crate::norms::pnorm::operator_pnorm;
use crate::norms::{lp_sum, weighted_lp_norm};
use crate::oscillation::BloomWeights;
use crate::space::FiniteSpace;
use crate::sparse::{bilinear_bloom_apply, bloom_apply, sparse_matrix};
use crate::weights::Weight;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearWeights {
    pub p1: f64,
    pub p2: f64,
    /// `1/p = 1/p1 + 1/p2`; may be below 1.
    pub p: f64,
    pub w: Weight,
    /// `λ2^{p/p1} w^{p/p2}`.
    pub w_hat: Weight,
    /// `λ1, λ2` at exponent `p1`.
    pub linear: BloomWeights,
}

impl BilinearWeights {
    pub fn new(lam1: Weight, lam2: Weight, w: Weight, p1: f64, p2: f64) -> Result<Self> {
        if !(p1 > 1.0 && p2 > 1.0 && p1.is_finite() && p2.is_finite()) {
            return arg(format!("bilinear exponents must exceed 1, got ({p1}, {p2})"));
        }
        if lam1.len() != w.len() || lam2.len() != w.len() {
            return arg("weights of different lengths");
        }
        let p = 1.0 / (1.0 / p1 + 1.0 / p2);
        let w_hat = lam2.powf(p / p1).mul(&w.powf(p / p2));
        Ok(BilinearWeights {
            p1,
            p2,
            p,
            w,
            w_hat,
            linear: BloomWeights::new(lam1, lam2, p1)?,
        })
    }
}

/// `(Σ |f|^p w m)^{1/p}` for any `p > 0`; a quasi-norm when `p < 1`.
pub fn weighted_lp_quasinorm(space: &FiniteSpace, f: &[f64], w: &Weight, p: f64) -> f64 {
    lp_sum(space, f, Some(w), p).powf(1.0 / p)
}

/// The linear split at exponent `p1`; the same cubes split the bilinear form.
pub fn bilinear_compact_split(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    family: &[usize],
    b: &[f64],
    bw: &BilinearWeights,
    eps: f64,
) -> Result<CompactSplit> {
    compact_split(space, sys, family, b, &bw.linear, eps)
}

/// Random nonnegative `(f, g)` pairs.
pub fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let f = (0..n).map(|_| rng.gen::<f64>()).collect();
            let g = (0..n).map(|_| rng.gen::<f64>()).collect();
            (f, g)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearTail {
    pub part: String,
    /// Largest `‖T^{B,*}_P(f,g)‖_{L^p(ŵ)} / (‖f‖_{L^{p1}_{λ1}} ‖g‖_{L^{p2}_w})` over the corpus.
    pub measured: f64,
    /// Linear bound times `‖A_D‖_{L^{p2}_w}`.
    pub bound: f64,
    pub structural: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearTailReport {
    pub eps: f64,
    pub rank: usize,
    pub w_factor: f64,
    /// `‖A_D‖_{L^{p2}_w → L^{p2}_w}` over all cubes; dominates `M_D`.
    pub maximal_norm: f64,
    pub tails: Vec<BilinearTail>,
}

impl BilinearTailReport {
    pub fn holds(&self) -> bool {
        self.tails.iter().all(|t| t.measured <= t.bound * (1.0 + 1e-9))
    }

    pub fn structural(&self) -> f64 {
        self.tails.iter().map(|t| t.structural).fold(0.0, f64::max)
    }
}

pub fn bilinear_tail_report(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    split: &CompactSplit,
    b: &[f64],
    bw: &BilinearWeights,
    corpus: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<BilinearTailReport> {
    let linear = tail_norm_report(space, sys, split, b, &bw.linear, tol)?;
    let all: Vec<usize> = (0..sys.len()).collect();
    let a_d = sparse_matrix(space, sys, &all);
    let maximal_norm = operator_pnorm(space, &a_d, &bw.w, &bw.w, bw.p2, tol)?.upper;
    let mut tails = Vec::new();
    for (i, lin) in linear.tails.iter().enumerate() {
        let cubes = &split.parts[i].cubes;
        let mut measured: f64 = 0.0;
        for (f, g) in corpus {
            let den = weighted_lp_norm(space, f, &bw.linear.lam1, bw.p1)? * weighted_lp_norm(space, g, &bw.w, bw.p2)?;
            if den == 0.0 {
                continue;
            }
            let out = bilinear_bloom_apply(space, sys, cubes, b, f, g, true);
            measured = measured.max(weighted_lp_quasinorm(space, &out, &bw.w_hat, bw.p) / den);
        }
        let bound = lin.bound * maximal_norm;
        tails.push(BilinearTail {
            part: PART_NAMES[i].to_string(),
            measured,
            bound,
            structural: if linear.w_factor > 0.0 {
                bound / (split.eps * linear.w_factor)
            } else {
                0.0
            },
        });
    }
    Ok(BilinearTailReport {
        eps: split.eps,
        rank: split.rank,
        w_factor: linear.w_factor,
        maximal_norm,
        tails,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionCheck {
    /// `‖T^{B,*}(f,g)‖_{L^p(ŵ)}`.
    pub lhs: f64,
    /// `‖T* f‖_{L^{p1}_{λ2}} · ‖M_D g‖_{L^{p2}_w}`.
    pub rhs: f64,
}

impl ReductionCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-300
    }
}

/// Compare the bilinear form with the product of the linear form and the
/// dyadic maximal function, for one pair.
pub fn reduction_check(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    family: &[usize],
    b: &[f64],
    bw: &BilinearWeights,
    f: &[f64],
    g: &[f64],
) -> Result<ReductionCheck> {
    let lhs = weighted_lp_quasinorm(space, &bilinear_bloom_apply(space, sys, family, b, f, g, true), &bw.w_hat, bw.p);
    let tf = bloom_apply(space, sys, family, b, f, true);
    let rhs =
        weighted_lp_norm(space, &tf, &bw.linear.lam2, bw.p1)? * weighted_lp_norm(space, &dyadic_maximal(space, sys, g), &bw.w, bw.p2)?;
    Ok(ReductionCheck { lhs, rhs })
}
