//! Lower-bound witnesses for commutators of symbols that do not vanish in
//! oscillation at small scales.
//!
//! A chain of balls with radii shrinking at least four-fold, each carrying
//! oscillation `≥ δ0`, is paired with nearby disjoint companion balls. The
//! median of `b` on the companion splits both balls so that `|b(x) − b(y)|`
//! is at least `|b(x) − m|` across the split, and the trimmed companion
//! halves give disjointly supported normalized test functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maximal::{cz_commutator, maximal_commutator, KernelOperator};
use crate::norms::weighted_lp_norm;
use crate::oscillation::{median, variant_oscillation, BloomWeights, Variant};
use crate::space::{Ball, FiniteSpace};

/// Fraction of the BMO norm below which the finest-scale oscillation counts
/// as vanishing.
pub const FLATNESS_RATIO: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessElement {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
    /// `F_ν` on the ball.
    pub oscillation: f64,
    pub companion_center: usize,
    pub companion: Vec<usize>,
    /// `inf` distance between the ball and its companion.
    pub gap: f64,
    /// Median of `b` on the companion.
    pub median: f64,
    /// 1 pairs `{b ≥ m}` in the ball with `{b ≤ m}` in the companion; 2 the reverse.
    pub branch: u8,
    pub e_set: Vec<usize>,
    pub f_set: Vec<usize>,
    /// `f_set` minus the companions of later elements.
    pub f_trimmed: Vec<usize>,
    /// `1_{F̃} / λ1(Q)^{1/p}`.
    pub test_function: Vec<f64>,
    /// `‖f‖_{L^p_{λ1}}`.
    pub test_norm: f64,
    /// `‖C_b f‖_{L^p_{λ2}}`.
    pub response: f64,
    /// `‖[b, T] f‖_{L^p_{λ2}}` in kernel mode.
    pub kernel_response: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessChecks {
    /// Radii shrink at least four-fold along the chain.
    pub radius_decay: bool,
    /// Every element has oscillation at least `δ0`.
    pub oscillation: bool,
    /// Companions are disjoint from their balls, with gap at most `5r`.
    pub companions: bool,
    /// `μ(F) ≥ μ(Q̃)/2` for the median level set.
    pub median_half_mass: bool,
    /// `|b(x) − b(y)| ≥ |b(x) − m|` for `x ∈ E`, `y ∈ F`.
    pub pairing: bool,
    /// `μ(F̃) ≥ μ(Q̃)/6`.
    pub trim: bool,
    /// Test functions have pairwise disjoint supports.
    pub disjoint: bool,
}

impl WitnessChecks {
    pub fn all(&self) -> bool {
        self.radius_decay && self.oscillation && self.companions && self.median_half_mass && self.pairing && self.trim && self.disjoint
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VmoWitness {
    pub delta0: f64,
    /// Largest oscillation among the smallest non-singleton balls.
    pub omega_min: f64,
    /// Largest oscillation among all balls.
    pub bmo: f64,
    pub elements: Vec<WitnessElement>,
    /// Balls left out because trimming cost more than the 1/6 margin.
    pub dropped: usize,
    /// `max_j δ0 / ‖C_b f_j‖`.
    pub c_fit: f64,
    pub kernel_c_fit: Option<f64>,
    /// Range of `‖f_j‖_{L^p_{λ1}}`.
    pub norm_range: (f64, f64),
    pub checks: WitnessChecks,
}

struct Candidate<'a> {
    ball: &'a Ball,
    osc: f64,
}

fn set_gap(space: &FiniteSpace, a: &[usize], b: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &x in a {
        let row = space.row(x);
        for &y in b {
            best = best.min(row[y]);
        }
    }
    best
}

fn overlaps(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| b.binary_search(x).is_ok()).count()
}

/// Nearest disjoint ball of the same radius within `5r`; in kernel mode a
/// companion on which `K(x, ·)` keeps one sign and stays large is preferred.
fn companion(space: &FiniteSpace, ball: &Ball, kernel: Option<&KernelOperator>, avoid: &[usize]) -> Option<(Ball, f64)> {
    let mut best: Option<(Ball, f64, (usize, bool, f64))> = None;
    for c in 0..space.len() {
        if ball.contains(c) {
            continue;
        }
        let cand = space.ball(c, ball.radius).ok()?;
        if cand.members.iter().any(|y| ball.contains(*y)) {
            continue;
        }
        let gap = set_gap(space, &ball.members, &cand.members);
        if gap > 5.0 * ball.radius {
            continue;
        }
        let (same_sign, strength) = match kernel {
            None => (true, 0.0),
            Some(k) => {
                let vals: Vec<f64> = ball
                    .members
                    .iter()
                    .flat_map(|&x| cand.members.iter().map(move |&y| (x, y)))
                    .map(|(x, y)| k.kernel[(x, y)])
                    .collect();
                let pos = vals.iter().all(|v| *v > 0.0);
                let neg = vals.iter().all(|v| *v < 0.0);
                (pos || neg, vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min))
            }
        };
        let key = (overlaps(&cand.members, avoid), same_sign, strength);
        let better = match &best {
            None => true,
            Some((_, g, k)) => {
                key.0 < k.0
                    || (key.0 == k.0 && key.1 && !k.1)
                    || (key.0 == k.0 && key.1 == k.1 && (key.2 > k.2 || (key.2 == k.2 && gap < *g)))
            }
        };
        if better {
            best = Some((cand, gap, key));
        }
    }
    best.map(|(b, g, _)| (b, g))
}

struct Draft {
    ball: Ball,
    osc: f64,
    comp: Ball,
    gap: f64,
    median: f64,
    branch: u8,
    e_set: Vec<usize>,
    f_set: Vec<usize>,
}

fn split(space: &FiniteSpace, b: &[f64], ball: &Ball, comp: &Ball) -> Result<(f64, u8, Vec<usize>, Vec<usize>)> {
    let m = median(space, b, &comp.members)?;
    let e1: Vec<usize> = ball.members.iter().copied().filter(|&x| b[x] >= m).collect();
    let e2: Vec<usize> = ball.members.iter().copied().filter(|&x| b[x] < m).collect();
    let mass = |e: &[usize]| e.iter().map(|&x| (b[x] - m).abs() * space.mass(x)).sum::<f64>();
    if mass(&e1) >= mass(&e2) {
        let f: Vec<usize> = comp.members.iter().copied().filter(|&y| b[y] <= m).collect();
        Ok((m, 1, e1, f))
    } else {
        let f: Vec<usize> = comp.members.iter().copied().filter(|&y| b[y] >= m).collect();
        Ok((m, 2, e2, f))
    }
}

/// Build the witness chain for `b`, or report that its small-scale
/// oscillation is too small relative to its BMO norm.
pub fn vmo_lower_witness(space: &FiniteSpace, b: &[f64], bw: &BloomWeights, kernel: Option<&KernelOperator>) -> Result<VmoWitness> {
    space.check_function(b, "symbol")?;
    let balls: Vec<Candidate> = space
        .distinct_balls()
        .iter()
        .filter(|ball| ball.len() > 1)
        .map(|ball| {
            Ok(Candidate {
                ball,
                osc: variant_oscillation(space, b, bw, Variant::Nu, &ball.members)?,
            })
        })
        .collect::<Result<_>>()?;
    let bmo = balls.iter().map(|c| c.osc).fold(0.0, f64::max);
    let smallest = balls.iter().map(|c| c.ball.len()).min().unwrap_or(0);
    let omega_min = balls.iter().filter(|c| c.ball.len() == smallest).map(|c| c.osc).fold(0.0, f64::max);
    if bmo == 0.0 || omega_min <= FLATNESS_RATIO * bmo {
        return Err(Error::VmoFlat {
            modulus: omega_min,
            bmo,
            chain_len: 0,
        });
    }
    let delta0 = omega_min / 2.0;
    let mut pool: Vec<&Candidate> = balls.iter().filter(|c| c.osc >= delta0).collect();
    pool.sort_by(|a, c| {
        c.ball
            .radius
            .total_cmp(&a.ball.radius)
            .then(c.osc.total_cmp(&a.osc))
            .then(a.ball.center.cmp(&c.ball.center))
    });
    // greedy chain, largest admissible radius first
    let mut drafts: Vec<Draft> = Vec::new();
    let mut used: Vec<usize> = Vec::new();
    let mut limit = f64::INFINITY;
    for cand in &pool {
        if cand.ball.radius * 4.0 > limit {
            continue;
        }
        let Some((comp, gap)) = companion(space, cand.ball, kernel, &used) else {
            continue;
        };
        let (m, branch, e_set, f_set) = split(space, b, cand.ball, &comp)?;
        used.extend(f_set.iter().copied());
        used.sort_unstable();
        used.dedup();
        limit = cand.ball.radius;
        drafts.push(Draft {
            ball: cand.ball.clone(),
            osc: cand.osc,
            comp,
            gap,
            median: m,
            branch,
            e_set,
            f_set,
        });
    }
    // trim each F by the later companions; drop elements losing too much
    let mut kept: Vec<(Draft, Vec<usize>)> = Vec::new();
    let mut dropped = 0;
    for (j, d) in drafts.iter().enumerate() {
        let later: Vec<&Ball> = drafts[j + 1..].iter().map(|l| &l.comp).collect();
        let trimmed: Vec<usize> = d.f_set.iter().copied().filter(|y| !later.iter().any(|c| c.contains(*y))).collect();
        if space.measure(&trimmed) * 6.0 < space.measure(&d.comp.members) {
            dropped += 1;
            continue;
        }
        kept.push((
            Draft {
                ball: d.ball.clone(),
                osc: d.osc,
                comp: d.comp.clone(),
                gap: d.gap,
                median: d.median,
                branch: d.branch,
                e_set: d.e_set.clone(),
                f_set: d.f_set.clone(),
            },
            trimmed,
        ));
    }
    if kept.len() < 3 {
        return Err(Error::VmoFlat {
            modulus: omega_min,
            bmo,
            chain_len: kept.len(),
        });
    }
    let p = bw.p;
    let mut elements = Vec::new();
    for (d, trimmed) in kept {
        let scale = bw.lam1.measure(space, &d.ball.members).powf(1.0 / p);
        let mut f = vec![0.0; space.len()];
        for &y in &trimmed {
            f[y] = 1.0 / scale;
        }
        let test_norm = weighted_lp_norm(space, &f, &bw.lam1, p)?;
        let response = weighted_lp_norm(space, &maximal_commutator(space, b, &f), &bw.lam2, p)?;
        let kernel_response = match kernel {
            Some(k) => Some(weighted_lp_norm(space, &cz_commutator(space, k, b, &f), &bw.lam2, p)?),
            None => None,
        };
        elements.push(WitnessElement {
            center: d.ball.center,
            radius: d.ball.radius,
            members: d.ball.members,
            oscillation: d.osc,
            companion_center: d.comp.center,
            companion: d.comp.members,
            gap: d.gap,
            median: d.median,
            branch: d.branch,
            e_set: d.e_set,
            f_set: d.f_set,
            f_trimmed: trimmed,
            test_function: f,
            test_norm,
            response,
            kernel_response,
        });
    }
    let fit = |r: f64| if r > 0.0 { delta0 / r } else { f64::INFINITY };
    let c_fit = elements.iter().map(|e| fit(e.response)).fold(0.0, f64::max);
    let kernel_c_fit = kernel.map(|_| elements.iter().map(|e| fit(e.kernel_response.unwrap_or(0.0))).fold(0.0, f64::max));
    let norm_range = elements
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(e.test_norm), hi.max(e.test_norm)));
    let checks = check_elements(space, b, delta0, &elements);
    Ok(VmoWitness {
        delta0,
        omega_min,
        bmo,
        elements,
        dropped,
        c_fit,
        kernel_c_fit,
        norm_range,
        checks,
    })
}

/// Re-verify every defining inequality of the witness sets exhaustively.
pub fn check_elements(space: &FiniteSpace, b: &[f64], delta0: f64, elements: &[WitnessElement]) -> WitnessChecks {
    let radius_decay = elements.windows(2).all(|w| 4.0 * w[1].radius <= w[0].radius);
    let oscillation = elements.iter().all(|e| e.oscillation >= delta0);
    let companions = elements
        .iter()
        .all(|e| overlaps(&e.members, &e.companion) == 0 && set_gap(space, &e.members, &e.companion) <= 5.0 * e.radius);
    let median_half_mass = elements
        .iter()
        .all(|e| 2.0 * space.measure(&e.f_set) >= space.measure(&e.companion));
    let pairing = elements.iter().all(|e| {
        e.e_set
            .iter()
            .all(|&x| e.f_set.iter().all(|&y| (b[x] - b[y]).abs() >= (b[x] - e.median).abs()))
    });
    let trim = elements
        .iter()
        .all(|e| 6.0 * space.measure(&e.f_trimmed) >= space.measure(&e.companion));
    let support = |e: &WitnessElement| -> Vec<usize> { (0..space.len()).filter(|&y| e.test_function[y] != 0.0).collect() };
    let supports: Vec<Vec<usize>> = elements.iter().map(support).collect();
    let disjoint = (0..supports.len()).all(|i| (i + 1..supports.len()).all(|j| overlaps(&supports[i], &supports[j]) == 0));
    WitnessChecks {
        radius_decay,
        oscillation,
        companions,
        median_half_mass,
        pairing,
        trim,
        disjoint,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maximal::KernelSign;
    use crate::oscillation::{alternating_symbol, smooth_symbol};
    use crate::weights::{power_weight, Weight};

    fn grid(n: usize) -> FiniteSpace {
        FiniteSpace::from_fn(vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap()
    }

    fn unweighted(n: usize, p: f64) -> BloomWeights {
        BloomWeights::new(Weight::constant(n, 1.0), Weight::constant(n, 1.0), p).unwrap()
    }

    #[test]
    fn constant_symbol_is_flat() {
        let s = grid(16);
        assert!(matches!(
            vmo_lower_witness(&s, &[2.0; 16], &unweighted(16, 2.0), None),
            Err(Error::VmoFlat { .. })
        ));
    }

    #[test]
    fn smooth_symbol_is_flat() {
        let s = grid(128);
        let b = smooth_symbol(&s, 0);
        assert!(matches!(
            vmo_lower_witness(&s, &b, &unweighted(128, 2.0), None),
            Err(Error::VmoFlat { .. })
        ));
    }

    #[test]
    fn persistent_symbol_has_a_witness() {
        let s = grid(128);
        let b = alternating_symbol(128);
        let lam1 = power_weight(&s, 0, 0.3, 1.0).unwrap();
        let lam2 = power_weight(&s, 127, -0.2, 1.0).unwrap();
        let bw = BloomWeights::new(lam1, lam2, 2.0).unwrap();
        let w = vmo_lower_witness(&s, &b, &bw, None).unwrap();
        assert!(w.elements.len() >= 3);
        assert!(w.checks.all(), "{:?}", w.checks);
        assert!(w.c_fit.is_finite());
        for e in &w.elements {
            assert!(w.delta0 <= w.c_fit * e.response * (1.0 + 1e-12));
        }
        assert!(w.norm_range.0 > 0.0 && w.norm_range.1.is_finite());
    }

    #[test]
    fn sixty_four_point_grid_supports_three_scales() {
        let s = grid(64);
        let w = vmo_lower_witness(&s, &alternating_symbol(64), &unweighted(64, 2.0), None).unwrap();
        assert!(w.elements.len() >= 3);
        assert!(w.checks.all());
        for (i, a) in w.elements.iter().enumerate() {
            for c in &w.elements[i + 1..] {
                let both = (0..64).filter(|&y| a.test_function[y] != 0.0 && c.test_function[y] != 0.0).count();
                assert_eq!(both, 0);
            }
        }
    }

    #[test]
    fn kernel_mode_reports_commutator_response() {
        let s = grid(128);
        let k = KernelOperator::power(&s, 1.0, KernelSign::Antisymmetric);
        let w = vmo_lower_witness(&s, &alternating_symbol(128), &unweighted(128, 2.0), Some(&k)).unwrap();
        assert!(w.checks.all());
        let c = w.kernel_c_fit.unwrap();
        assert!(c.is_finite());
        assert!(w.elements.iter().all(|e| e.kernel_response.unwrap() > 0.0));
    }
}
