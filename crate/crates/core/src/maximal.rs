//! Maximal operators, the maximal commutator and its sparse domination, and
//! commutators with kernel operators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::{containing_cube, AdjacentSystems, DyadicSystem};
use crate::error::{arg, Error, Result};
use crate::linalg::Mat;
use crate::space::{Ball, FiniteSpace};
use crate::sparse::bloom_apply;
use crate::weights::Weight;

/// Ratios whose numerator is below this are treated as zero.
const TINY: f64 = 1e-12;

/// `sup_{B∋x}` of the (optionally `w`-weighted) average of `|f|`.
pub fn hl_maximal(space: &FiniteSpace, f: &[f64], w: Option<&Weight>) -> Vec<f64> {
    let weight = |x: usize| w.map_or(1.0, |w| w.get(x)) * space.mass(x);
    let mut out = vec![0.0f64; space.len()];
    for ball in space.distinct_balls() {
        let num: f64 = ball.members.iter().map(|&y| f[y].abs() * weight(y)).sum();
        let den: f64 = ball.members.iter().map(|&y| weight(y)).sum();
        let avg = num / den;
        for &x in &ball.members {
            out[x] = out[x].max(avg);
        }
    }
    out
}

/// Dyadic maximal function over every cube of a system.
pub fn dyadic_maximal(space: &FiniteSpace, sys: &DyadicSystem, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0f64; space.len()];
    for q in sys.cubes() {
        let avg = q.members.iter().map(|&y| f[y].abs() * space.mass(y)).sum::<f64>() / q.mass;
        for &x in &q.members {
            out[x] = out[x].max(avg);
        }
    }
    out
}

/// `sup_{t>0} t μ{Mh > t} / ‖h‖₁` for one function.
pub fn weak_type_ratio(space: &FiniteSpace, h: &[f64]) -> f64 {
    let norm: f64 = h.iter().enumerate().map(|(x, v)| v.abs() * space.mass(x)).sum();
    if norm == 0.0 {
        return 0.0;
    }
    let m = hl_maximal(space, h, None);
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.sort_by(|&a, &b| m[b].partial_cmp(&m[a]).unwrap());
    let mut acc = 0.0;
    let mut best: f64 = 0.0;
    for &x in &order {
        acc += space.mass(x);
        // sets {Mh ≥ m[x]} approach {Mh > t} from t slightly below m[x]
        best = best.max(m[x] * acc / norm);
    }
    best
}

/// `C_b f(x) = sup_{B∋x} (1/μ(B)) Σ_{y∈B} |b(x) − b(y)| |f(y)| m(y)`.
pub fn maximal_commutator(space: &FiniteSpace, b: &[f64], f: &[f64]) -> Vec<f64> {
    let all: Vec<usize> = (0..space.len()).collect();
    maximal_commutator_at(space, b, f, &all)
}

/// [`maximal_commutator`] evaluated at the given points only.
pub fn maximal_commutator_at(space: &FiniteSpace, b: &[f64], f: &[f64], points: &[usize]) -> Vec<f64> {
    let mut want = vec![usize::MAX; space.len()];
    for (i, &x) in points.iter().enumerate() {
        want[x] = i;
    }
    let support: Vec<usize> = (0..space.len()).filter(|&y| f[y] != 0.0).collect();
    let mut out = vec![0.0f64; points.len()];
    if support.is_empty() {
        return out;
    }
    for ball in space.distinct_balls() {
        let inner: Vec<usize> = support.iter().copied().filter(|y| ball.contains(*y)).collect();
        if inner.is_empty() {
            continue;
        }
        let mu = space.measure(&ball.members);
        for &x in &ball.members {
            let i = want[x];
            if i == usize::MAX {
                continue;
            }
            let s: f64 = inner.iter().map(|&y| (b[x] - b[y]).abs() * f[y].abs() * space.mass(y)).sum();
            out[i] = out[i].max(s / mu);
        }
    }
    out
}

/// `{ y : d(c, y) ≤ k·reach }`.
fn dilate(space: &FiniteSpace, ball: &Ball, k: f64) -> Vec<bool> {
    let row = space.row(ball.center);
    row.iter().map(|&d| d <= k * ball.reach).collect()
}

/// Local grand maximal truncation on the points of `b0`:
/// `sup_{x∈B⊆B0} max_{ξ∈B} M(f 1_{4A0B0 ∖ 4A0B})(ξ)`.
pub fn local_grand_maximal(space: &FiniteSpace, b0: &Ball, f: &[f64]) -> Vec<(usize, f64)> {
    let k = 4.0 * space.a0();
    let outer = dilate(space, b0, k);
    let mut best: BTreeMap<usize, f64> = b0.members.iter().map(|&x| (x, 0.0)).collect();
    for ball in space.distinct_balls() {
        if !ball.members.iter().all(|&y| b0.contains(y)) {
            continue;
        }
        let inner = dilate(space, ball, k);
        let g: Vec<f64> = (0..space.len()).map(|y| if outer[y] && !inner[y] { f[y] } else { 0.0 }).collect();
        let m = hl_maximal(space, &g, None);
        let top = ball.members.iter().map(|&xi| m[xi]).fold(0.0, f64::max);
        for &x in &ball.members {
            let e = best.get_mut(&x).unwrap();
            *e = e.max(top);
        }
    }
    best.into_iter().collect()
}

/// Smallest `C` with `M(f 1_{4A0B0})(x) ≤ C |f(x)| + M_{B0} f(x)` on `B0`.
/// Infinite when the left side exceeds the truncation at a zero of `f`.
pub fn local_maximal_constant(space: &FiniteSpace, b0: &Ball, f: &[f64]) -> f64 {
    let outer = dilate(space, b0, 4.0 * space.a0());
    let g: Vec<f64> = (0..space.len()).map(|y| if outer[y] { f[y] } else { 0.0 }).collect();
    let m = hl_maximal(space, &g, None);
    let mut c: f64 = 0.0;
    for (x, grand) in local_grand_maximal(space, b0, f) {
        let excess = m[x] - grand;
        if excess > TINY * (1.0 + m[x]) {
            c = c.max(if f[x] != 0.0 { excess / f[x].abs() } else { f64::INFINITY });
        }
    }
    c
}

/// Maximal cubes `P ⊆ root` with `μ(P ∩ E)/μ(P) > height`, selected top-down.
pub fn cz_decompose_indicator(space: &FiniteSpace, sys: &DyadicSystem, root: usize, e: &[usize], height: f64) -> Result<Vec<usize>> {
    if !(height > 0.0 && height < 1.0) {
        return arg(format!("stopping height must lie in (0,1), got {height}"));
    }
    let rq = sys.cube(root);
    if let Some(x) = e.iter().find(|&&x| !rq.contains(x)) {
        return arg(format!("point {x} of the set lies outside the root cube"));
    }
    let mut in_e = vec![false; space.len()];
    for &x in e {
        in_e[x] = true;
    }
    let mut out = Vec::new();
    if e.is_empty() {
        return Ok(out);
    }
    let mut stack = vec![root];
    while let Some(q) = stack.pop() {
        let c = sys.cube(q);
        let hit: f64 = c.members.iter().filter(|&&x| in_e[x]).map(|&x| space.mass(x)).sum();
        if hit == 0.0 {
            continue;
        }
        if hit / c.mass > height {
            out.push(q);
        } else {
            stack.extend(c.children.iter().copied());
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// One recursion step of the domination: the region it bounds, the cube it
/// charges and the charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationStep {
    pub region: Vec<usize>,
    pub system: usize,
    pub cube: usize,
    pub depth: usize,
    pub alpha: f64,
    /// Fitted local constant against the averages over the region's ball `D`.
    pub local: f64,
    /// `local · μ(Q0)/μ(D)`.
    pub charge: f64,
    pub stopping_cubes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationCertificate {
    /// Per system index: the cubes of its sparse family.
    pub families: Vec<(usize, Vec<usize>)>,
    /// Largest accumulated charge on a single cube.
    pub constant: f64,
    /// Brute-force `max_x C_b f(x) / Σ_t (T_{S_t,b}|f| + T*_{S_t,b}|f|)(x)`.
    pub max_ratio: f64,
    pub holds: bool,
    pub steps: Vec<DominationStep>,
    pub upper_dimension: f64,
}

struct Region {
    points: Vec<usize>,
    center: usize,
    reach: f64,
    depth: usize,
}

const MAX_DEPTH: usize = 64;

/// Construct sparse families `S_t` in the adjacent systems and a constant `C`
/// with `C_b f ≤ C Σ_t (T_{S_t,b}|f| + T*_{S_t,b}|f|)` at every point.
///
/// The space is covered by a ball `B0` around the support of `f` and by
/// pieces of the dyadic annuli around it. Each region is bounded against the
/// cube `Q0` sandwiching its enlarged ball `D`; an exceptional set of large
/// local maximal functions is stopped by a Calderón–Zygmund decomposition at
/// height `2^{−(n+1)}` and the stopping cubes are handled recursively.
pub fn dominate_maximal_commutator(space: &FiniteSpace, adj: &AdjacentSystems, b: &[f64], f: &[f64]) -> Result<DominationCertificate> {
    let n = space.len();
    if b.len() != n || f.len() != n {
        return arg("symbol and function must have one value per point");
    }
    let dim = space.doubling_constant().upper_dimension();
    let abs_f: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let support: Vec<usize> = (0..n).filter(|&x| f[x] != 0.0).collect();
    let mut steps = Vec::new();
    if !support.is_empty() {
        let a0 = space.a0();
        // B0: least reach over centers, then lowest id
        let (c0, r0) = (0..n)
            .map(|c| (c, support.iter().map(|&y| space.d(c, y)).fold(0.0, f64::max)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .unwrap();
        let base = if r0 > 0.0 {
            r0
        } else {
            space.min_positive_distance().unwrap_or(1.0)
        };
        let mut regions = Vec::new();
        let covers = |center: usize, reach: f64| support.iter().all(|&y| space.d(center, y) <= reach);
        let enlarge = |center: usize, rho: f64| {
            let mut reach = 3.0 * a0 * rho;
            while !covers(center, reach) {
                reach *= 2.0;
            }
            reach
        };
        let core: Vec<usize> = (0..n).filter(|&x| space.d(c0, x) <= base).collect();
        regions.push(Region {
            points: core,
            center: c0,
            reach: enlarge(c0, base),
            depth: 0,
        });
        let mut j = 1;
        while (0..n).any(|x| space.d(c0, x) > base * 2f64.powi(j - 1)) {
            let (lo, hi) = (base * 2f64.powi(j - 1), base * 2f64.powi(j));
            let rho = base * 2f64.powi(j - 2);
            let mut ring: Vec<usize> = (0..n).filter(|&x| space.d(c0, x) > lo && space.d(c0, x) <= hi).collect();
            while let Some(&c) = ring.first() {
                let piece: Vec<usize> = ring.iter().copied().filter(|&y| space.d(c, y) <= rho).collect();
                ring.retain(|y| space.d(c, *y) > rho);
                regions.push(Region {
                    points: piece,
                    center: c,
                    reach: enlarge(c, rho),
                    depth: 0,
                });
            }
            j += 1;
        }
        while let Some(region) = regions.pop() {
            let (step, children) = domination_step(space, adj, b, f, &region, dim)?;
            if let Some(s) = step {
                steps.push(s);
            }
            for child in children {
                if child.depth > MAX_DEPTH {
                    return Err(Error::Recursion {
                        depth: child.depth,
                        context: format!("stopping cube region around point {}", child.center),
                    });
                }
                regions.push(child);
            }
        }
    }

    let mut charges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for s in &steps {
        *charges.entry((s.system, s.cube)).or_insert(0.0) += s.charge;
    }
    let constant = charges.values().cloned().fold(0.0, f64::max);
    let mut families: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(t, q) in charges.keys() {
        families.entry(t).or_default().push(q);
    }
    let families: Vec<(usize, Vec<usize>)> = families.into_iter().collect();
    let (max_ratio, holds) = certificate_ratio(space, adj, &families, b, &abs_f, constant);
    Ok(DominationCertificate {
        families,
        constant,
        max_ratio,
        holds,
        steps,
        upper_dimension: dim,
    })
}

/// Brute-force ratio of `C_b f` to the sparse bound and whether it stays
/// within `constant`.
pub fn certificate_ratio(
    space: &FiniteSpace,
    adj: &AdjacentSystems,
    families: &[(usize, Vec<usize>)],
    b: &[f64],
    abs_f: &[f64],
    constant: f64,
) -> (f64, bool) {
    let cb = maximal_commutator(space, b, abs_f);
    let mut rhs = vec![0.0; space.len()];
    for (t, cubes) in families {
        let sys = &adj.systems[*t];
        for adjoint in [false, true] {
            for (r, v) in rhs.iter_mut().zip(bloom_apply(space, sys, cubes, b, abs_f, adjoint)) {
                *r += v;
            }
        }
    }
    let scale = cb.iter().cloned().fold(0.0, f64::max);
    let mut max_ratio: f64 = 0.0;
    for x in 0..space.len() {
        if cb[x] > TINY * (1.0 + scale) {
            max_ratio = max_ratio.max(if rhs[x] > 0.0 { cb[x] / rhs[x] } else { f64::INFINITY });
        }
    }
    (max_ratio, max_ratio <= constant * (1.0 + 1e-9))
}

fn domination_step(
    space: &FiniteSpace,
    adj: &AdjacentSystems,
    b: &[f64],
    f: &[f64],
    region: &Region,
    dim: f64,
) -> Result<(Option<DominationStep>, Vec<Region>)> {
    let n = space.len();
    let d_ball = space.closed_ball(region.center, region.reach);
    let in_d = {
        let mut v = vec![false; n];
        for &x in &d_ball.members {
            v[x] = true;
        }
        v
    };
    let fd: Vec<f64> = (0..n).map(|x| if in_d[x] { f[x] } else { 0.0 }).collect();
    let mu_d = space.measure(&d_ball.members);
    let avg_f = fd.iter().enumerate().map(|(x, v)| v.abs() * space.mass(x)).sum::<f64>() / mu_d;
    if avg_f == 0.0 {
        return Ok((None, Vec::new()));
    }
    let (t, q0) = containing_cube(space, adj, &d_ball)?;
    let sys = &adj.systems[t];
    let cube = sys.cube(q0);
    let bq0 = space.average(b, &cube.members);
    let g: Vec<f64> = (0..n).map(|x| (b[x] - bq0) * fd[x]).collect();
    let avg_g = g.iter().enumerate().map(|(x, v)| v.abs() * space.mass(x)).sum::<f64>() / mu_d;
    let m_f = hl_maximal(space, &fd, None);
    let m_g = hl_maximal(space, &g, None);
    let mu_u = space.measure(&region.points);
    let budget = 2f64.powf(-(5.0 + dim)) * mu_u;
    // Chebyshev and the weak-type ratios guarantee the budget from here on
    let alpha_cap = mu_d * (2.0 + weak_type_ratio(space, &fd) + weak_type_ratio(space, &g)) / budget;
    let mut alpha = 1.0f64;
    let exceptional = |alpha: f64| -> Vec<usize> {
        region
            .points
            .iter()
            .copied()
            .filter(|&x| fd[x].abs() > alpha * avg_f || m_f[x] > alpha * avg_f || g[x].abs() > alpha * avg_g || m_g[x] > alpha * avg_g)
            .collect()
    };
    let mut e = exceptional(alpha);
    while space.measure(&e) > budget && alpha < 2.0 * alpha_cap {
        alpha *= 2.0;
        e = exceptional(alpha);
    }
    let height = 2f64.powf(-(dim + 1.0));
    let stop = cz_decompose_indicator(space, sys, q0, &e, height)?;

    let mut owner = vec![usize::MAX; n];
    for (j, &p) in stop.iter().enumerate() {
        for &x in &sys.cube(p).members {
            owner[x] = j;
        }
    }
    let denom = |x: usize| (b[x] - bq0).abs() * avg_f + avg_g;
    let mut local: f64 = 0.0;
    let mut note = |num: f64, x: usize| {
        if num > TINY * (1.0 + avg_f) {
            let d = denom(x);
            local = local.max(if d > 0.0 { num / d } else { f64::INFINITY });
        }
    };
    let free: Vec<usize> = region.points.iter().copied().filter(|&x| owner[x] == usize::MAX).collect();
    for (x, v) in free.iter().zip(maximal_commutator_at(space, b, &fd, &free)) {
        note(v, *x);
    }
    let mut children = Vec::new();
    for (j, &p) in stop.iter().enumerate() {
        let pc = sys.cube(p);
        let pts: Vec<usize> = region.points.iter().copied().filter(|&x| owner[x] == j).collect();
        if pts.is_empty() {
            continue;
        }
        let reach = pc.members.iter().map(|&y| space.d(pc.center, y)).fold(0.0, f64::max);
        let dj = space.closed_ball(pc.center, reach);
        let rest: Vec<f64> = (0..n).map(|x| if dj.contains(x) { 0.0 } else { fd[x] }).collect();
        for (x, v) in pts.iter().zip(maximal_commutator_at(space, b, &rest, &pts)) {
            note(v, *x);
        }
        children.push(Region {
            points: pts,
            center: pc.center,
            reach,
            depth: region.depth + 1,
        });
    }
    if !local.is_finite() {
        return Err(Error::Argument(format!(
            "sparse bound vanishes where the maximal commutator does not (region around {})",
            region.center
        )));
    }
    let step = DominationStep {
        region: region.points.clone(),
        system: t,
        cube: q0,
        depth: region.depth,
        alpha,
        local,
        charge: local * cube.mass / mu_d,
        stopping_cubes: stop.len(),
    };
    Ok((Some(step), children))
}

/// An integral operator `Tf(x) = Σ_y K(x,y) f(y) m(y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOperator {
    pub kernel: Mat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelSign {
    Positive,
    /// `sign(y − x)` by point id, a discrete Hilbert-type kernel.
    Antisymmetric,
}

impl KernelOperator {
    pub fn apply(&self, space: &FiniteSpace, f: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = f.iter().enumerate().map(|(y, v)| v * space.mass(y)).collect();
        self.kernel.apply(&g)
    }

    /// `K(x,y) = ±d(x,y)^{−s}` off the diagonal and zero on it.
    pub fn power(space: &FiniteSpace, s: f64, sign: KernelSign) -> Self {
        let n = space.len();
        let kernel = Mat::from_fn(n, n, |x, y| {
            if x == y {
                return 0.0;
            }
            let v = space.d(x, y).powf(-s);
            match sign {
                KernelSign::Positive => v,
                KernelSign::Antisymmetric => {
                    if y > x {
                        v
                    } else {
                        -v
                    }
                }
            }
        });
        KernelOperator { kernel }
    }

    /// Diagonal `1/m(x)`, so that `Tf = f`.
    pub fn identity(space: &FiniteSpace) -> Self {
        let n = space.len();
        KernelOperator {
            kernel: Mat::from_fn(n, n, |x, y| if x == y { 1.0 / space.mass(x) } else { 0.0 }),
        }
    }

    pub fn zero(n: usize) -> Self {
        KernelOperator { kernel: Mat::zeros(n, n) }
    }
}

/// `[b, T] f = b·Tf − T(bf)`.
pub fn cz_commutator(space: &FiniteSpace, k: &KernelOperator, b: &[f64], f: &[f64]) -> Vec<f64> {
    let tf = k.apply(space, f);
    let bf: Vec<f64> = b.iter().zip(f).map(|(x, y)| x * y).collect();
    let tbf = k.apply(space, &bf);
    (0..space.len()).map(|x| b[x] * tf[x] - tbf[x]).collect()
}

/// A point `y` with `r ≤ d(x,y) < C̄ r` and `|K(x,y)| ≥ 1/(c0 μ(B(x,r)))`,
/// choosing the largest `|K|` and then the lowest id.
pub fn nondegenerate_pair(space: &FiniteSpace, k: &KernelOperator, x: usize, r: f64, c0: f64, cbar: f64) -> Result<Option<usize>> {
    let ball = space.ball(x, r)?;
    let need = 1.0 / (c0 * space.measure(&ball.members));
    let row = space.row(x);
    let mut best: Option<(usize, f64)> = None;
    for y in 0..space.len() {
        if row[y] < r || row[y] >= cbar * r {
            continue;
        }
        let v = k.kernel[(x, y)].abs();
        if v >= need && best.map_or(true, |(_, b)| v > b) {
            best = Some((y, v));
        }
    }
    Ok(best.map(|(y, _)| y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyScan {
    /// Smallest `c0` for which every scanned `(x, r)` has a witness.
    pub c0_min: f64,
    /// Pairs whose annulus holds no point at all.
    pub skipped: usize,
    pub checked: usize,
    /// Every witness can be taken with the sign of `K(x,·)` constant over the annulus.
    pub constant_sign: bool,
}

/// Scan all centers and canonical radii for the annulus lower bound.
pub fn nondegeneracy_scan(space: &FiniteSpace, k: &KernelOperator, cbar: f64) -> NondegeneracyScan {
    let mut c0_min: f64 = 0.0;
    let mut skipped = 0;
    let mut checked = 0;
    let mut constant_sign = true;
    for ball in space.canonical_balls() {
        let (x, r) = (ball.center, ball.radius);
        let row = space.row(x);
        let annulus: Vec<usize> = (0..space.len()).filter(|&y| row[y] >= r && row[y] < cbar * r).collect();
        if annulus.is_empty() {
            skipped += 1;
            continue;
        }
        checked += 1;
        let vals: Vec<f64> = annulus.iter().map(|&y| k.kernel[(x, y)]).collect();
        let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mu = space.measure(&ball.members);
        c0_min = c0_min.max(if top > 0.0 { 1.0 / (mu * top) } else { f64::INFINITY });
        if vals.iter().any(|v| *v > 0.0) && vals.iter().any(|v| *v < 0.0) {
            constant_sign = false;
        }
    }
    NondegeneracyScan {
        c0_min,
        skipped,
        checked,
        constant_sign,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_adjacent_systems, build_system};
    use crate::oscillation::{log_distance_symbol, random_symbol};

    fn grid(n: usize) -> FiniteSpace {
        FiniteSpace::from_fn(vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap()
    }

    #[test]
    fn maximal_of_constant_and_point_mass() {
        let s = grid(4);
        assert!(hl_maximal(&s, &[-2.0; 4], None).iter().all(|v| (v - 2.0).abs() < 1e-15));
        let m = hl_maximal(&s, &[1.0, 0.0, 0.0, 0.0], None);
        // the smallest ball holding x and 0 is [0, x]
        for x in 0..4 {
            assert!((m[x] - 1.0 / (x as f64 + 1.0)).abs() < 1e-12);
        }
        let w = Weight::constant(4, 1.0);
        assert_eq!(
            hl_maximal(&s, &[1.0, 0.0, 2.0, 0.0], Some(&w)),
            hl_maximal(&s, &[1.0, 0.0, 2.0, 0.0], None)
        );
    }

    #[test]
    fn maximal_commutator_examples() {
        let s = grid(2);
        assert_eq!(maximal_commutator(&s, &[0.0, 2.0], &[1.0, 1.0]), vec![1.0, 1.0]);
        assert!(maximal_commutator(&s, &[3.0, 3.0], &[1.0, 4.0]).iter().all(|v| *v == 0.0));
        let t = grid(6);
        let b = random_symbol(6, 1.0, 1);
        let f = random_symbol(6, 1.0, 2);
        let cb = maximal_commutator(&t, &b, &f);
        let b3: Vec<f64> = b.iter().map(|v| -3.0 * v).collect();
        let cb3 = maximal_commutator(&t, &b3, &f);
        assert!(cb.iter().zip(&cb3).all(|(a, c)| (3.0 * a - c).abs() < 1e-12));
    }

    #[test]
    fn cz_examples() {
        let s = grid(4);
        let sys = (0..64)
            .map(|seed| build_system(&s, 0.5, None, seed).unwrap())
            .find(|sys| sys.cubes().iter().filter(|c| c.members.len() == 2).count() == 2)
            .unwrap();
        let root = sys.root();
        assert!(cz_decompose_indicator(&s, &sys, root, &[], 0.25).unwrap().is_empty());
        assert_eq!(cz_decompose_indicator(&s, &sys, root, &[0, 1, 2, 3], 0.5).unwrap(), vec![root]);
        let sel = cz_decompose_indicator(&s, &sys, root, &[0], 0.25).unwrap();
        assert_eq!(sel.len(), 1);
        assert_eq!(sys.cube(sel[0]).members, vec![0, 1]);
        assert!(cz_decompose_indicator(&s, &sys, root, &[0], 1.0).is_err());
    }

    #[test]
    fn lemma_constant_is_at_most_one() {
        let s = grid(12);
        let b0 = s.closed_ball(5, 2.0);
        for seed in 0..5 {
            let f = random_symbol(12, 1.0, seed);
            assert!(local_maximal_constant(&s, &b0, &f) <= 1.0 + 1e-12);
        }
        let spike: Vec<f64> = (0..12).map(|x| if x == 5 { 1.0 } else { 0.0 }).collect();
        let grand = local_grand_maximal(&s, &s.closed_ball(5, 0.0), &spike);
        assert_eq!(grand, vec![(5, 0.0)]);
    }

    #[test]
    fn domination_certificate_holds() {
        let s = grid(16);
        let adj = build_adjacent_systems(&s, 0.5, &[0, 1, 2, 3, 4, 5], false).unwrap();
        let b = log_distance_symbol(&s, 3, 0.5);
        let f: Vec<f64> = (0..16).map(|x| if (5..9).contains(&x) { 1.0 } else { 0.0 }).collect();
        let cert = dominate_maximal_commutator(&s, &adj, &b, &f).unwrap();
        assert!(cert.holds, "ratio {} vs constant {}", cert.max_ratio, cert.constant);
        assert!(cert.constant.is_finite() && cert.constant > 0.0);
        let zero = dominate_maximal_commutator(&s, &adj, &b, &[0.0; 16]).unwrap();
        assert!(zero.holds && zero.families.is_empty());
        let flat = dominate_maximal_commutator(&s, &adj, &[1.0; 16], &f).unwrap();
        assert!(flat.holds && flat.max_ratio == 0.0);
    }

    #[test]
    fn kernel_commutators() {
        let s = grid(4);
        let f = [1.0, 0.0, 0.0, 0.0];
        let b = log_distance_symbol(&s, 0, 0.5);
        let id = KernelOperator::identity(&s);
        assert!(cz_commutator(&s, &id, &b, &f).iter().all(|v| v.abs() < 1e-15));
        let k = KernelOperator::power(&s, 1.0, KernelSign::Positive);
        assert!(cz_commutator(&s, &k, &[2.0; 4], &f).iter().all(|v| v.abs() < 1e-15));
        // [b,T]e_0 (x) = (b(x) − b(0)) K(x,0)
        let out = cz_commutator(&s, &k, &b, &f);
        for x in 1..4 {
            assert!((out[x] - (b[x] - b[0]) / x as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn nondegeneracy_examples() {
        let s = grid(8);
        let zero = KernelOperator::zero(8);
        assert_eq!(nondegenerate_pair(&s, &zero, 2, 1.5, 10.0, 4.0).unwrap(), None);
        let id = KernelOperator::identity(&s);
        assert_eq!(nondegenerate_pair(&s, &id, 2, 1.5, 1e9, 4.0).unwrap(), None);
        let k = KernelOperator::power(&s, 1.0, KernelSign::Positive);
        let y = nondegenerate_pair(&s, &k, 2, 1.5, 10.0, 4.0).unwrap().unwrap();
        assert!((s.d(2, y) - 2.0).abs() < 1e-12);
        let scan = nondegeneracy_scan(&s, &k, 4.0);
        assert!(scan.c0_min.is_finite() && scan.constant_sign);
        assert!(nondegeneracy_scan(&s, &zero, 4.0).c0_min.is_infinite());
    }
}
