//! Finite-rank splitting of `T*_{S,b}` by scale and position.
//!
//! Cubes of the family are sorted into four parts relative to a large cube
//! `Q_N` and a small-scale cut: those strictly above `Q_N`, those disjoint
//! from it, those inside it below the cut, and the finitely many remaining
//! ones. Only the last part survives as the finite-rank approximation; the
//! other three are bounded by `ε` times weight characteristics.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicSystem;
use crate::error::{arg, Error, Result};
use crate::linalg::Mat;
use crate::norms::pnorm::operator_pnorm;
use crate::oscillation::{max_variant_oscillation, variant_oscillation, BloomWeights, Variant};
use crate::space::FiniteSpace;
use crate::sparse::{augment_oscillation_family, bloom_matrix};
use crate::weights::ap_constant;

/// Part labels in storage order.
pub const PART_NAMES: [&str; 4] = ["above", "disjoint", "fine", "retained"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPart {
    pub cubes: Vec<usize>,
    pub matrix: Mat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactSplit {
    pub eps: f64,
    /// Cubes of generation `≥ g_cut` count as small scale.
    pub g_cut: i32,
    /// Generation at which `Q_N` was sought.
    pub g_large: i32,
    pub q_n: usize,
    /// Largest oscillation at the finest non-trivial generation.
    pub floor: f64,
    /// Set when `ε` lies below the floor and the cut was pinned to the finest
    /// generation; tail bounds are then unavailable.
    pub clamped: bool,
    pub family: Vec<usize>,
    /// Above, disjoint, fine, retained.
    pub parts: [SplitPart; 4],
    /// Number of retained cubes.
    pub rank: usize,
}

impl CompactSplit {
    pub fn total(&self) -> Mat {
        let mut t = self.parts[0].matrix.clone();
        for part in &self.parts[1..] {
            t = t.add(&part.matrix);
        }
        t
    }

    /// `T − T4`.
    pub fn remainder(&self) -> Mat {
        self.parts[0].matrix.add(&self.parts[1].matrix).add(&self.parts[2].matrix)
    }
}

/// Largest of the three oscillation functionals on each cube; zero on singletons.
pub fn cube_oscillations(space: &FiniteSpace, sys: &DyadicSystem, b: &[f64], bw: &BloomWeights) -> Result<Vec<f64>> {
    sys.cubes()
        .iter()
        .map(|q| {
            if q.is_singleton() {
                Ok(0.0)
            } else {
                max_variant_oscillation(space, b, bw, &q.members)
            }
        })
        .collect()
}

fn generation_max(sys: &DyadicSystem, osc: &[f64], g: i32) -> f64 {
    sys.generation(g).iter().map(|&c| osc[c]).fold(0.0, f64::max)
}

/// Smallest `ε` the system can resolve: the largest oscillation at the
/// finest generation that still has a non-singleton cube.
pub fn feasibility_floor(sys: &DyadicSystem, osc: &[f64]) -> f64 {
    match sys.finest_nontrivial_generation() {
        Some(g) => generation_max(sys, osc, g),
        None => 0.0,
    }
}

struct Scales {
    g_cut: i32,
    g_large: i32,
    q_n: usize,
    floor: f64,
    clamped: bool,
}

fn choose_scales(sys: &DyadicSystem, osc: &[f64], eps: f64, clamp: bool) -> Result<Scales> {
    let g_fine = sys.finest_nontrivial_generation().unwrap_or(sys.k_min);
    let floor = feasibility_floor(sys, osc);
    let clamped = floor >= eps;
    if clamped && !clamp {
        return Err(Error::Infeasible { eps, floor });
    }
    let g_cut = if clamped {
        g_fine
    } else {
        let mut g = g_fine;
        while g > sys.k_min && generation_max(sys, osc, g - 1) < eps {
            g -= 1;
        }
        g
    };
    let mut g_large = sys.k_min;
    while g_large < g_fine && generation_max(sys, osc, g_large) < eps {
        g_large += 1;
    }
    // Q_N must leave only small oscillation outside itself; a larger cube
    // is preferred, then the lower id, then a coarser generation.
    let mut gen = g_large;
    loop {
        let mut best: Option<usize> = None;
        for &c in sys.generation(gen) {
            let ok = (0..sys.len()).all(|r| osc[r] < eps || sys.is_descendant(r, c) || sys.is_descendant(c, r));
            if ok {
                let better = match best {
                    None => true,
                    Some(b) => sys.cube(c).mass > sys.cube(b).mass,
                };
                if better {
                    best = Some(c);
                }
            }
        }
        if let Some(q_n) = best {
            return Ok(Scales {
                g_cut,
                g_large,
                q_n,
                floor,
                clamped,
            });
        }
        if gen == sys.k_min {
            return Err(Error::Infeasible { eps, floor });
        }
        gen -= 1;
    }
}

fn build(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    family: &[usize],
    b: &[f64],
    bw: &BloomWeights,
    eps: f64,
    clamp: bool,
) -> Result<CompactSplit> {
    if !(eps > 0.0) {
        return arg("ε must be positive");
    }
    if family.iter().any(|&c| c >= sys.len()) {
        return arg("family refers to a cube outside the system");
    }
    let mut family = family.to_vec();
    family.sort_unstable();
    family.dedup();
    let osc = cube_oscillations(space, sys, b, bw)?;
    let s = choose_scales(sys, &osc, eps, clamp)?;
    let mut groups: [Vec<usize>; 4] = Default::default();
    for &c in &family {
        let slot = if c != s.q_n && sys.is_descendant(s.q_n, c) {
            0
        } else if !sys.is_descendant(c, s.q_n) {
            1
        } else if sys.cube(c).generation >= s.g_cut {
            2
        } else {
            3
        };
        groups[slot].push(c);
    }
    let parts = groups.map(|cubes| SplitPart {
        matrix: bloom_matrix(space, sys, &cubes, b, true),
        cubes,
    });
    Ok(CompactSplit {
        eps,
        g_cut: s.g_cut,
        g_large: s.g_large,
        q_n: s.q_n,
        floor: s.floor,
        clamped: s.clamped,
        rank: parts[3].cubes.len(),
        family,
        parts,
    })
}

/// Split `T*_{S,b}` at tolerance `ε`; fails with the floor when `ε` is
/// below what the finest generation resolves.
pub fn compact_split(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    family: &[usize],
    b: &[f64],
    bw: &BloomWeights,
    eps: f64,
) -> Result<CompactSplit> {
    build(space, sys, family, b, bw, eps, false)
}

/// As [`compact_split`], but below the floor the small-scale cut is pinned
/// to the finest generation and the split is flagged as clamped.
pub fn compact_split_clamped(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    family: &[usize],
    b: &[f64],
    bw: &BloomWeights,
    eps: f64,
) -> Result<CompactSplit> {
    build(space, sys, family, b, bw, eps, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    pub part: String,
    /// Estimated `‖T_i‖_{L^p_{λ1} → L^p_{λ2}}`.
    pub measured: f64,
    pub bound: f64,
    /// `bound / (ε W)`.
    pub structural: f64,
    /// Entrywise domination by the majorant, when one was used.
    pub dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub eps: f64,
    pub rank: usize,
    /// `([λ1]_{A_p} [λ2]_{A_p})^{max(1, 1/(p−1))}`.
    pub w_factor: f64,
    pub aug_constant: f64,
    pub tails: Vec<TailEntry>,
}

impl TailReport {
    pub fn structural(&self) -> f64 {
        self.tails.iter().map(|t| t.structural).fold(0.0, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.tails.iter().all(|t| t.dominated && t.measured <= t.bound * (1.0 + 1e-6))
    }
}

/// `([λ1][λ2])^{max(1, 1/(p−1))}` over the balls of the space.
pub fn weight_factor(space: &FiniteSpace, bw: &BloomWeights) -> Result<f64> {
    let a1 = ap_constant(space, &bw.lam1, bw.p)?;
    let a2 = ap_constant(space, &bw.lam2, bw.p)?;
    Ok((a1 * a2).powf(1f64.max(1.0 / (bw.p - 1.0))))
}

/// `ε Σ_Q λ'2(Q)^{1/p'} λ2(Q)^{1/p} / μ(Q)`, from Hölder on each cube with
/// the `λ'` oscillation below `ε`.
fn holder_bound(space: &FiniteSpace, sys: &DyadicSystem, cubes: &[usize], bw: &BloomWeights, eps: f64) -> f64 {
    let (p, pd) = (bw.p, bw.p_dual());
    cubes
        .iter()
        .map(|&c| {
            let q = sys.cube(c);
            if q.is_singleton() {
                return 0.0;
            }
            eps * bw.lam2_dual.measure(space, &q.members).powf(1.0 / pd) * bw.lam2.measure(space, &q.members).powf(1.0 / p) / q.mass
        })
        .sum()
}

/// `G[x][y] = Σ_{Q∋x,y} (m_y/μ(Q)) C ε Σ_{R∈S̃, R⊆Q, R∋y} ν(R)/μ(R)`, which
/// dominates the part when every such `R` has oscillation below `ε`.
fn majorant(space: &FiniteSpace, sys: &DyadicSystem, cubes: &[usize], augmented: &[usize], c_aug: f64, bw: &BloomWeights, eps: f64) -> Mat {
    let n = space.len();
    let mut g = Mat::zeros(n, n);
    for &c in cubes {
        let q = sys.cube(c);
        let mut inner = vec![0.0; n];
        for &r in augmented {
            if sys.is_descendant(r, c) {
                let rc = sys.cube(r);
                let v = bw.nu.measure(space, &rc.members) / rc.mass;
                for &y in &rc.members {
                    inner[y] += v;
                }
            }
        }
        for &x in &q.members {
            for &y in &q.members {
                g[(x, y)] += space.mass(y) / q.mass * c_aug * eps * inner[y];
            }
        }
    }
    g
}

/// Measure the three tails and compare each with its `ε`-bound.
pub fn tail_norm_report(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    split: &CompactSplit,
    b: &[f64],
    bw: &BloomWeights,
    tol: f64,
) -> Result<TailReport> {
    if split.clamped {
        return arg(format!("split at ε = {} is below the floor {}", split.eps, split.floor));
    }
    let w_factor = weight_factor(space, bw)?;
    let aug = augment_oscillation_family(space, sys, &split.family, b)?;
    let mut tails = Vec::new();
    for (i, part) in split.parts[..3].iter().enumerate() {
        let measured = operator_pnorm(space, &part.matrix, &bw.lam1, &bw.lam2, bw.p, tol)?;
        let mut bound = holder_bound(space, sys, &part.cubes, bw, split.eps);
        let mut dominated = true;
        if i > 0 {
            // below or beside Q_N every augmented subcube also oscillates by less than ε
            let g = majorant(space, sys, &part.cubes, &aug.cubes, aug.constant, bw, split.eps);
            dominated = part.matrix.le(&g, 1e-12);
            let gn = operator_pnorm(space, &g, &bw.lam1, &bw.lam2, bw.p, tol)?;
            if dominated {
                bound = bound.min(gn.upper);
            }
        }
        let structural = if w_factor > 0.0 { bound / (split.eps * w_factor) } else { 0.0 };
        tails.push(TailEntry {
            part: PART_NAMES[i].to_string(),
            measured: measured.lower,
            bound,
            structural,
            dominated,
        });
    }
    Ok(TailReport {
        eps: split.eps,
        rank: split.rank,
        w_factor,
        aug_constant: aug.constant,
        tails,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eps: f64,
    pub rank: usize,
    /// `‖T − T4‖_{L^p_{λ1} → L^p_{λ2}}`.
    pub error: f64,
    pub clamped: bool,
}

impl CurvePoint {
    pub fn ratio(&self) -> f64 {
        self.error / self.eps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub floor: f64,
    pub points: Vec<CurvePoint>,
    /// Error never increases along the points sorted by rank.
    pub monotone: bool,
}

impl ErrorCurve {
    pub fn feasible(&self) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(|p| !p.clamped)
    }
}

/// Approximation error of the retained part along a grid of `ε`.
pub fn finite_rank_error_curve(
    space: &FiniteSpace,
    sys: &DyadicSystem,
    family: &[usize],
    b: &[f64],
    bw: &BloomWeights,
    eps_grid: &[f64],
    tol: f64,
) -> Result<ErrorCurve> {
    let osc = cube_oscillations(space, sys, b, bw)?;
    let floor = feasibility_floor(sys, &osc);
    let mut points = Vec::new();
    for &eps in eps_grid {
        let split = compact_split_clamped(space, sys, family, b, bw, eps)?;
        let error = operator_pnorm(space, &split.remainder(), &bw.lam1, &bw.lam2, bw.p, tol)?.upper;
        points.push(CurvePoint {
            eps,
            rank: split.rank,
            error,
            clamped: split.clamped,
        });
    }
    let mut by_rank: Vec<&CurvePoint> = points.iter().collect();
    by_rank.sort_by(|a, b| a.rank.cmp(&b.rank).then(b.error.total_cmp(&a.error)));
    let monotone = by_rank.windows(2).all(|w| w[1].error <= w[0].error * (1.0 + 10.0 * tol) + 1e-12);
    Ok(ErrorCurve { floor, points, monotone })
}

/// Oscillation of `b` in the `ν` normalization on one cube, exposed for reports.
pub fn nu_oscillation(space: &FiniteSpace, sys: &DyadicSystem, b: &[f64], bw: &BloomWeights, cube: usize) -> Result<f64> {
    variant_oscillation(space, b, bw, Variant::Nu, &sys.cube(cube).members)
}
