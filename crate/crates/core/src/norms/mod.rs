//! Weighted norms, operator norm estimation, and the finite-rank splitting
//! of sparse commutators.

pub mod bilinear;
pub mod compact;
pub mod pnorm;
pub mod witness;

pub use bilinear::{bilinear_compact_split, bilinear_tail_report, reduction_check, BilinearWeights};
pub use compact::{compact_split, finite_rank_error_curve, tail_norm_report, CompactSplit};
pub use pnorm::{matrix_pnorm, operator_pnorm, PNorm};
pub use witness::{vmo_lower_witness, VmoWitness};

use crate::error::{arg, Result};
use crate::space::FiniteSpace;
use crate::weights::Weight;

/// `(Σ |f|^p w m)^{1/p}`.
pub fn weighted_lp_norm(space: &FiniteSpace, f: &[f64], w: &Weight, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return arg(format!("L^p exponent must lie in [1, ∞), got {p}"));
    }
    Ok(lp_sum(space, f, Some(w), p).powf(1.0 / p))
}

pub(crate) fn lp_sum(space: &FiniteSpace, f: &[f64], w: Option<&Weight>, p: f64) -> f64 {
    f.iter()
        .enumerate()
        .map(|(x, v)| v.abs().powf(p) * w.map_or(1.0, |w| w.get(x)) * space.mass(x))
        .sum()
}

/// Unweighted `L^p(μ)` norm.
pub fn lp_norm(space: &FiniteSpace, f: &[f64], p: f64) -> f64 {
    lp_sum(space, f, None, p).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{dual_weight, random_weight};

    #[test]
    fn norm_of_indicator_is_weighted_measure() {
        let s = FiniteSpace::from_fn(vec![1.0, 2.0, 0.5], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let w = Weight::new(vec![2.0, 1.0, 4.0]).unwrap();
        let n = weighted_lp_norm(&s, &[1.0, 0.0, 1.0], &w, 3.0).unwrap();
        assert!((n - 4f64.powf(1.0 / 3.0)).abs() < 1e-12);
        let one = weighted_lp_norm(&s, &[1.0; 3], &Weight::constant(3, 1.0), 2.0).unwrap();
        assert!((one - 3.5f64.sqrt()).abs() < 1e-12);
        assert!(weighted_lp_norm(&s, &[1.0; 3], &w, 0.5).is_err());
    }

    #[test]
    fn holder_with_dual_weight() {
        let s = FiniteSpace::from_fn(vec![1.0; 6], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let w = random_weight(6, 1.5, 9).unwrap();
        let f: [f64; 6] = [1.0, -2.0, 0.5, 3.0, 0.0, 1.0];
        let g = [0.3, 1.0, -1.0, 2.0, 5.0, 0.1];
        for p in [1.5, 2.0, 4.0] {
            let pd = p / (p - 1.0);
            let lhs: f64 = (0..6).map(|x| (f[x] * g[x]).abs()).sum();
            let wd = dual_weight(&w, p).unwrap();
            let rhs = weighted_lp_norm(&s, &f, &w, p).unwrap() * weighted_lp_norm(&s, &g, &wd, pd).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}
