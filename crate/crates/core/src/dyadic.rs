//! Dyadic systems of cubes on a finite space and adjacent (shifted) systems.
//!
//! Centers come from a greedy farthest-point traversal; the traversal order
//! fixes a nested family of nets, one per generation. Cubes are the sets of
//! points whose chain of nearest-center parents passes through a given
//! center.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::space::{Ball, FiniteSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub id: usize,
    pub generation: i32,
    pub center: usize,
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub sidelength: f64,
    pub mass: f64,
}

impl Cube {
    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicSystem {
    pub delta: f64,
    pub c1: f64,
    pub big_c1: f64,
    pub k_min: i32,
    pub k_max: i32,
    /// Largest number of children of a cube.
    pub m: usize,
    pub seed: u64,
    pub strict: bool,
    cubes: Vec<Cube>,
    generations: Vec<Vec<usize>>,
    /// `cube_at[g][x]`: cube of generation `k_min + g` containing `x`.
    cube_at: Vec<Vec<usize>>,
}

/// Parameters of the strict regime: `δ < (96 A0⁶)⁻¹`, `c1 = (12 A0⁴)⁻¹`,
/// `C1 = 4 A0²`, and the adjacent cover constant `C = 8 A0³ δ⁻³`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrictParams {
    pub delta: f64,
    pub c1: f64,
    pub big_c1: f64,
    pub cover: f64,
}

impl StrictParams {
    pub fn for_a0(a0: f64) -> Self {
        let delta = 0.5 / (96.0 * a0.powi(6));
        StrictParams {
            delta,
            c1: 1.0 / (12.0 * a0.powi(4)),
            big_c1: 4.0 * a0 * a0,
            cover: 8.0 * a0.powi(3) / delta.powi(3),
        }
    }
}

/// Upper bound `A1⁶ (A0⁴/δ)^{log2 Ã0}` on the number of adjacent systems,
/// where `A1` and `Ã0` are the geometric doubling constants of the space.
pub fn adjacent_count_bound(a0: f64, a1: f64, a0_tilde: f64, delta: f64) -> f64 {
    a1.powi(6) * (a0.powi(4) / delta).powf(a0_tilde.log2())
}

/// Outcome of checking every dyadic axiom on a system.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub partition: bool,
    pub nested: bool,
    pub unique_ancestor: bool,
    pub children: bool,
    pub containment: bool,
    pub monotone: bool,
    pub net_separation: bool,
    pub net_cover: bool,
    pub violations: Vec<String>,
}

impl AxiomReport {
    /// The six structural axioms, excluding the net diagnostics.
    pub fn all_axioms(&self) -> bool {
        self.partition && self.nested && self.unique_ancestor && self.children && self.containment && self.monotone
    }
}

fn pow(delta: f64, k: i32) -> f64 {
    delta.powi(k)
}

/// Largest `k` with `δ^k > diameter`, so generation `k` is a single cube.
pub fn coarsest_generation(delta: f64, diameter: f64) -> i32 {
    if diameter <= 0.0 {
        return 0;
    }
    let mut k = (diameter.ln() / delta.ln()).floor() as i32;
    while pow(delta, k) <= diameter {
        k -= 1;
    }
    while pow(delta, k + 1) > diameter {
        k += 1;
    }
    k
}

/// Smallest `k` with `δ^k` below the smallest positive distance, so cubes of
/// generation `k` are singletons.
pub fn finest_generation(delta: f64, min_distance: Option<f64>, k_min: i32) -> i32 {
    let Some(m) = min_distance else {
        return k_min;
    };
    let mut k = k_min;
    while pow(delta, k) >= m {
        k += 1;
    }
    k
}

/// Farthest-point traversal. Returns the visiting order and, per visited
/// point, its distance to the previously visited points (infinite for the
/// start). Ties are broken by a seeded random priority.
fn farthest_point_order(space: &FiniteSpace, seed: u64) -> (Vec<usize>, Vec<f64>) {
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut rng);
    let start = (0..n).min_by_key(|&x| rank[x]).unwrap();
    let mut order = vec![start];
    let mut radii = vec![f64::INFINITY];
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut gap: Vec<f64> = space.row(start).to_vec();
    for _ in 1..n {
        let mut best: Option<usize> = None;
        for y in 0..n {
            if visited[y] {
                continue;
            }
            best = match best {
                None => Some(y),
                Some(b) if gap[y] > gap[b] || (gap[y] == gap[b] && rank[y] < rank[b]) => Some(y),
                keep => keep,
            };
        }
        let y = best.unwrap();
        visited[y] = true;
        order.push(y);
        radii.push(gap[y]);
        let row = space.row(y);
        for z in 0..n {
            gap[z] = gap[z].min(row[z]);
        }
    }
    (order, radii)
}

/// Build a dyadic system with parameter `delta`. When `k_range` is `None` the
/// generations run from a single root cube down to singleton leaves.
pub fn build_system(space: &FiniteSpace, delta: f64, k_range: Option<(i32, i32)>, seed: u64) -> Result<DyadicSystem> {
    build(space, delta, k_range, seed, None)
}

/// Build a system in the strict parameter regime and check the axioms with
/// the fixed constants `c1 = (12 A0⁴)⁻¹`, `C1 = 4 A0²`.
pub fn build_system_strict(space: &FiniteSpace, seed: u64) -> Result<DyadicSystem> {
    let params = StrictParams::for_a0(space.a0());
    build(space, params.delta, None, seed, Some(params))
}

fn build(space: &FiniteSpace, delta: f64, k_range: Option<(i32, i32)>, seed: u64, strict: Option<StrictParams>) -> Result<DyadicSystem> {
    if !(delta > 0.0 && delta < 1.0) {
        return arg(format!("delta must lie in (0,1), got {delta}"));
    }
    let n = space.len();
    let diameter = space.diameter();
    let min_d = space.min_positive_distance();
    let (k_min, k_max) = match k_range {
        Some((lo, hi)) => {
            if lo > hi {
                return arg(format!("empty generation range {lo}..={hi}"));
            }
            if n > 1 && pow(delta, lo) < diameter {
                return arg(format!("delta^{lo} is below the diameter {diameter}"));
            }
            if let Some(m) = min_d {
                if pow(delta, hi) >= m {
                    return arg(format!("delta^{hi} does not separate points at distance {m}"));
                }
            }
            (lo, hi)
        }
        None => {
            let lo = coarsest_generation(delta, diameter);
            (lo, finest_generation(delta, min_d, lo))
        }
    };

    let (order, radii) = farthest_point_order(space, seed);
    let n_gen = (k_max - k_min + 1) as usize;
    // centers[g]: sorted centers of generation k_min + g
    let mut centers: Vec<Vec<usize>> = Vec::with_capacity(n_gen);
    for g in 0..n_gen {
        let scale = pow(delta, k_min + g as i32);
        let mut c: Vec<usize> = order.iter().zip(&radii).filter(|(_, &r)| r >= scale).map(|(&x, _)| x).collect();
        c.sort_unstable();
        centers.push(c);
    }
    // parent_center[g][i]: center of generation g-1 above centers[g][i]
    let nearest = |pool: &[usize], z: usize| -> usize {
        let row = space.row(z);
        *pool
            .iter()
            .min_by(|&&a, &&b| row[a].partial_cmp(&row[b]).unwrap().then(a.cmp(&b)))
            .unwrap()
    };
    // chain[g][x]: center of generation g above point x
    let mut chain: Vec<Vec<usize>> = vec![vec![0; n]; n_gen];
    for x in 0..n {
        chain[n_gen - 1][x] = if centers[n_gen - 1].binary_search(&x).is_ok() {
            x
        } else {
            nearest(&centers[n_gen - 1], x)
        };
    }
    for g in (0..n_gen - 1).rev() {
        for x in 0..n {
            let below = chain[g + 1][x];
            chain[g][x] = if centers[g].binary_search(&below).is_ok() {
                below
            } else {
                nearest(&centers[g], below)
            };
        }
    }

    let mut cubes = Vec::new();
    let mut generations = Vec::with_capacity(n_gen);
    let mut cube_at = vec![vec![usize::MAX; n]; n_gen];
    for g in 0..n_gen {
        let k = k_min + g as i32;
        let mut ids = Vec::new();
        for &c in &centers[g] {
            let members: Vec<usize> = (0..n).filter(|&x| chain[g][x] == c).collect();
            if members.is_empty() {
                continue;
            }
            let id = cubes.len();
            for &x in &members {
                cube_at[g][x] = id;
            }
            let parent = if g == 0 { None } else { Some(cube_at[g - 1][members[0]]) };
            let mass = space.measure(&members);
            cubes.push(Cube {
                id,
                generation: k,
                center: c,
                members,
                parent,
                children: Vec::new(),
                sidelength: pow(delta, k),
                mass,
            });
            ids.push(id);
        }
        generations.push(ids);
    }
    for id in 0..cubes.len() {
        if let Some(p) = cubes[id].parent {
            cubes[p].children.push(id);
        }
    }
    let m = cubes.iter().map(|c| c.children.len()).max().unwrap_or(0);

    let mut system = DyadicSystem {
        delta,
        c1: 0.0,
        big_c1: 0.0,
        k_min,
        k_max,
        m,
        seed,
        strict: strict.is_some(),
        cubes,
        generations,
        cube_at,
    };
    match strict {
        Some(params) => {
            system.c1 = params.c1;
            system.big_c1 = params.big_c1;
            let report = verify_system(space, &system);
            if !report.all_axioms() {
                let axiom = first_failed_axiom(&report);
                return Err(Error::Construction {
                    axiom,
                    detail: report.violations.join("; "),
                });
            }
        }
        None => system.fit_constants(space),
    }
    Ok(system)
}

fn first_failed_axiom(r: &AxiomReport) -> &'static str {
    if !r.partition {
        "partition"
    } else if !r.nested {
        "nesting"
    } else if !r.unique_ancestor {
        "unique ancestor"
    } else if !r.children {
        "child bound"
    } else if !r.containment {
        "ball containment"
    } else {
        "ball monotonicity"
    }
}

impl DyadicSystem {
    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn cube(&self, id: usize) -> &Cube {
        &self.cubes[id]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn generation_count(&self) -> usize {
        self.generations.len()
    }

    /// Cube ids of generation `k`.
    pub fn generation(&self, k: i32) -> &[usize] {
        &self.generations[(k - self.k_min) as usize]
    }

    pub fn containing(&self, k: i32, x: usize) -> usize {
        self.cube_at[(k - self.k_min) as usize][x]
    }

    pub fn root(&self) -> usize {
        self.generations[0][0]
    }

    pub fn roots(&self) -> &[usize] {
        &self.generations[0]
    }

    pub fn leaf(&self, x: usize) -> usize {
        self.containing(self.k_max, x)
    }

    /// Tree relation: `p` is `q` or lies below it.
    pub fn is_descendant(&self, p: usize, q: usize) -> bool {
        let target = self.cubes[q].generation;
        let mut cur = p;
        loop {
            let c = &self.cubes[cur];
            if c.generation < target {
                return false;
            }
            if c.generation == target {
                return cur == q;
            }
            match c.parent {
                Some(up) => cur = up,
                None => return false,
            }
        }
    }

    /// Ancestors of `id` from its parent up to the root.
    pub fn ancestors(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.cubes[id].parent;
        while let Some(c) = cur {
            out.push(c);
            cur = self.cubes[c].parent;
        }
        out
    }

    /// `q` and all cubes below it, parents before children.
    pub fn descendants(&self, q: usize) -> Vec<usize> {
        let mut out = vec![q];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.cubes[out[i]].children.iter().copied());
            i += 1;
        }
        out
    }

    /// Ids ordered from the finest generation to the coarsest, ties by id.
    pub fn deepest_first(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.cubes.len()).collect();
        ids.sort_by(|&a, &b| self.cubes[b].generation.cmp(&self.cubes[a].generation).then(a.cmp(&b)));
        ids
    }

    /// Largest generation containing a cube with more than one point.
    pub fn finest_nontrivial_generation(&self) -> Option<i32> {
        self.cubes.iter().filter(|c| c.members.len() > 1).map(|c| c.generation).max()
    }

    fn fit_constants(&mut self, space: &FiniteSpace) {
        let mut c1 = f64::INFINITY;
        let mut big: f64 = 0.0;
        for q in &self.cubes {
            let row = space.row(q.center);
            let mut inside: f64 = 0.0;
            let mut outside = f64::INFINITY;
            for y in 0..space.len() {
                if q.contains(y) {
                    inside = inside.max(row[y]);
                } else {
                    outside = outside.min(row[y]);
                }
            }
            c1 = c1.min(outside / q.sidelength);
            big = big.max(inside / q.sidelength);
        }
        // strict membership: a point at distance exactly C1 δ^k would fall out
        let mut big_c1 = (big * (1.0 + 1e-9)).max(f64::MIN_POSITIVE);
        if big == 0.0 {
            big_c1 = 1.0;
        }
        // grow C1 until nested cubes have nested containment balls; a large
        // enough C1 makes every containment ball the whole space.
        let ceiling = {
            let finest = pow(self.delta, self.k_max);
            2.0 * space.diameter().max(1.0) / finest
        };
        while big_c1 < ceiling && !self.monotone_with(space, big_c1) {
            big_c1 *= 1.25;
        }
        if !self.monotone_with(space, big_c1) {
            big_c1 = ceiling;
        }
        if !c1.is_finite() {
            c1 = big_c1;
        }
        self.c1 = c1.min(big_c1);
        self.big_c1 = big_c1;
    }

    fn containment_ball(&self, space: &FiniteSpace, id: usize, c: f64) -> Vec<usize> {
        let q = &self.cubes[id];
        let r = c * q.sidelength;
        (0..space.len()).filter(|&y| space.d(q.center, y) < r).collect()
    }

    fn monotone_with(&self, space: &FiniteSpace, c: f64) -> bool {
        self.cubes.iter().all(|q| match q.parent {
            None => true,
            Some(p) => {
                let outer = self.containment_ball(space, p, c);
                let inner = self.containment_ball(space, q.id, c);
                inner.iter().all(|y| outer.binary_search(y).is_ok())
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system serializes")
    }
}

/// Exhaustively check every axiom of a dyadic system.
pub fn verify_system(space: &FiniteSpace, sys: &DyadicSystem) -> AxiomReport {
    let n = space.len();
    let mut r = AxiomReport {
        partition: true,
        nested: true,
        unique_ancestor: true,
        children: true,
        containment: true,
        monotone: true,
        net_separation: true,
        net_cover: true,
        violations: Vec::new(),
    };
    let fail = |flag: &mut bool, msg: String, list: &mut Vec<String>| {
        *flag = false;
        if list.len() < 20 {
            list.push(msg);
        }
    };
    let mut violations = Vec::new();

    for (g, ids) in sys.generations.iter().enumerate() {
        let mut count = vec![0usize; n];
        for &id in ids {
            for &x in &sys.cubes[id].members {
                count[x] += 1;
            }
        }
        if let Some(x) = count.iter().position(|&c| c != 1) {
            let k = sys.k_min + g as i32;
            fail(
                &mut r.partition,
                format!("generation {k}: point {x} lies in {} cubes", count[x]),
                &mut violations,
            );
        }
    }

    for q in &sys.cubes {
        // nesting and unique ancestry: all members of q fall in one cube of
        // every coarser generation, and that cube contains all of q
        for k in sys.k_min..q.generation {
            let first = sys.containing(k, q.members[0]);
            if q.members.iter().any(|&x| sys.containing(k, x) != first) {
                fail(
                    &mut r.nested,
                    format!("cube {} straddles two cubes of generation {k}", q.id),
                    &mut violations,
                );
            }
            let anc = &sys.cubes[first];
            if !q.members.iter().all(|x| anc.contains(*x)) {
                fail(
                    &mut r.unique_ancestor,
                    format!("cube {} has no containing cube at generation {k}", q.id),
                    &mut violations,
                );
            }
        }
        if let Some(p) = q.parent {
            let parent = &sys.cubes[p];
            if parent.generation != q.generation - 1 || !q.members.iter().all(|x| parent.contains(*x)) {
                fail(
                    &mut r.unique_ancestor,
                    format!("cube {} is not inside its parent {p}", q.id),
                    &mut violations,
                );
            }
        }
        if q.generation < sys.k_max {
            if q.children.len() > sys.m || q.children.is_empty() {
                fail(
                    &mut r.children,
                    format!("cube {} has {} children (M = {})", q.id, q.children.len(), sys.m),
                    &mut violations,
                );
            }
            let mut union: Vec<usize> = q.children.iter().flat_map(|&c| sys.cubes[c].members.iter().copied()).collect();
            union.sort_unstable();
            if union != q.members {
                fail(
                    &mut r.children,
                    format!("children of cube {} do not tile it", q.id),
                    &mut violations,
                );
            }
        }
        let row = space.row(q.center);
        let inner_r = sys.c1 * q.sidelength;
        let outer_r = sys.big_c1 * q.sidelength;
        for y in 0..n {
            let inside = q.contains(y);
            if row[y] < inner_r && !inside {
                fail(
                    &mut r.containment,
                    format!("point {y} is in B(x, c1 δ^k) but not in cube {}", q.id),
                    &mut violations,
                );
            }
            if inside && row[y] >= outer_r {
                fail(
                    &mut r.containment,
                    format!("point {y} of cube {} lies outside B(x, C1 δ^k)", q.id),
                    &mut violations,
                );
            }
        }
    }
    if !sys.monotone_with(space, sys.big_c1) {
        fail(
            &mut r.monotone,
            "a child containment ball leaves its parent's".into(),
            &mut violations,
        );
    }

    // net diagnostics: centers δ^k-separated, every point within 2 A0 δ^k
    for (g, ids) in sys.generations.iter().enumerate() {
        let scale = pow(sys.delta, sys.k_min + g as i32);
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let (ca, cb) = (sys.cubes[a].center, sys.cubes[b].center);
                if space.d(ca, cb) < scale {
                    r.net_separation = false;
                }
            }
        }
        for x in 0..n {
            let near = ids.iter().map(|&id| space.d(x, sys.cubes[id].center)).fold(f64::INFINITY, f64::min);
            if near >= 2.0 * space.a0() * scale {
                r.net_cover = false;
            }
        }
    }
    r.violations = violations;
    r
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdjacentSystems {
    pub systems: Vec<DyadicSystem>,
    /// Achieved sandwich constant `C` with `B(x,r) ⊆ Q ⊆ B(x, C r)`.
    pub cover_constant: f64,
    /// Whether every covering cube also had its center within `2 A0 δ^k` of the ball center.
    pub centers_close: bool,
    pub balls_checked: usize,
}

impl AdjacentSystems {
    pub fn count(&self) -> usize {
        self.systems.len()
    }
}

/// Generation `k` with `δ^{k+3} < r ≤ δ^{k+2}`, clamped to the system range.
pub fn ball_generation(sys: &DyadicSystem, radius: f64) -> i32 {
    let t = radius.ln() / sys.delta.ln();
    let mut k = t.floor() as i32 - 2;
    // guard against rounding at exact powers
    while pow(sys.delta, k + 2) < radius {
        k -= 1;
    }
    while pow(sys.delta, k + 3) >= radius {
        k += 1;
    }
    k.clamp(sys.k_min, sys.k_max)
}

/// The covering cube for `ball` in `sys` and its sandwich ratio, if the
/// generation-`k` cube containing the center contains the whole ball.
fn cover_in(space: &FiniteSpace, sys: &DyadicSystem, ball: &Ball) -> Option<(usize, f64)> {
    let k = ball_generation(sys, ball.radius);
    let id = sys.containing(k, ball.center);
    let q = &sys.cubes[id];
    if !ball.members.iter().all(|&y| q.contains(y)) {
        return None;
    }
    let far = q.members.iter().map(|&y| space.d(ball.center, y)).fold(0.0, f64::max);
    Some((id, far / ball.radius))
}

/// Build systems from `seeds` in order, keeping a system only when it covers
/// a ball not yet covered, until every canonical ball is covered.
pub fn build_adjacent_systems(space: &FiniteSpace, delta: f64, seeds: &[u64], strict: bool) -> Result<AdjacentSystems> {
    if seeds.is_empty() {
        return arg("at least one seed is required");
    }
    let balls = space.canonical_balls();
    let mut covered = vec![false; balls.len()];
    let mut systems: Vec<DyadicSystem> = Vec::new();
    for &seed in seeds {
        let sys = if strict {
            build_system_strict(space, seed)?
        } else {
            build_system(space, delta, None, seed)?
        };
        let mut gain = false;
        for (i, b) in balls.iter().enumerate() {
            if !covered[i] && cover_in(space, &sys, b).is_some() {
                covered[i] = true;
                gain = true;
            }
        }
        if gain {
            systems.push(sys);
        }
        if covered.iter().all(|&c| c) {
            break;
        }
    }
    if let Some(i) = covered.iter().position(|&c| !c) {
        return Err(Error::Uncovered {
            center: balls[i].center,
            radius: balls[i].radius,
            systems: systems.len(),
        });
    }
    let mut cover: f64 = 1.0;
    let mut centers_close = true;
    for b in &balls {
        let best = systems
            .iter()
            .filter_map(|s| cover_in(space, s, b).map(|(id, c)| (s, id, c)))
            .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            .unwrap();
        cover = cover.max(best.2 * (1.0 + 1e-9));
        let (sys, id, _) = best;
        let q = sys.cube(id);
        if space.d(b.center, q.center) >= 2.0 * space.a0() * q.sidelength {
            centers_close = false;
        }
    }
    Ok(AdjacentSystems {
        systems,
        cover_constant: cover,
        centers_close,
        balls_checked: balls.len(),
    })
}

/// A cube of the adjacent systems with `B ⊆ Q ⊆ B(x, C r)`, choosing the
/// smallest `μ(Q)` and then the lowest `(t, id)`.
pub fn containing_cube(space: &FiniteSpace, adj: &AdjacentSystems, ball: &Ball) -> Result<(usize, usize)> {
    let limit = adj.cover_constant * ball.radius;
    let mut best: Option<(f64, usize, usize)> = None;
    for (t, sys) in adj.systems.iter().enumerate() {
        for k in sys.k_min..=sys.k_max {
            let id = sys.containing(k, ball.center);
            let q = sys.cube(id);
            if !ball.members.iter().all(|&y| q.contains(y)) {
                continue;
            }
            if q.members.iter().any(|&y| space.d(ball.center, y) >= limit) {
                continue;
            }
            let better = match best {
                None => true,
                Some((m, bt, bid)) => q.mass < m || (q.mass == m && (t, id) < (bt, bid)),
            };
            if better {
                best = Some((q.mass, t, id));
            }
        }
    }
    best.map(|(_, t, id)| (t, id)).ok_or(Error::NoContainingCube {
        center: ball.center,
        radius: ball.radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> FiniteSpace {
        FiniteSpace::from_fn(vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap()
    }

    #[test]
    fn one_point_space_has_identical_generations() {
        let s = FiniteSpace::from_fn(vec![2.0], 1.0, |_, _| 0.0).unwrap();
        let sys = build_system(&s, 0.5, None, 7).unwrap();
        assert!(sys.cubes().iter().all(|c| c.members == vec![0]));
        assert!(verify_system(&s, &sys).all_axioms());
        let adj = build_adjacent_systems(&s, 0.5, &[1, 2], false).unwrap();
        assert_eq!(adj.count(), 1);
        assert_eq!(adj.cover_constant, 1.0);
    }

    #[test]
    fn four_point_grid_gives_binary_tree() {
        // points 0,1,2,3 scaled so that centers are 0, {0,2}, all
        let s = grid(4);
        let sys = build_system(&s, 0.5, Some((-2, 1)), 0).unwrap();
        let report = verify_system(&s, &sys);
        assert!(report.all_axioms(), "{:?}", report.violations);
        for k in sys.k_min..=sys.k_max {
            let sizes: Vec<usize> = sys.generation(k).iter().map(|&id| sys.cube(id).members.len()).collect();
            assert_eq!(sizes.iter().sum::<usize>(), 4);
        }
        assert_eq!(sys.generation(sys.k_min).len(), 1);
        assert!(sys.generation(sys.k_max).iter().all(|&id| sys.cube(id).is_singleton()));
        assert!(sys.m >= 2);
    }

    #[test]
    fn automatic_range_has_single_root_and_singleton_leaves() {
        let s = grid(8);
        for seed in 0..10 {
            let sys = build_system(&s, 0.5, None, seed).unwrap();
            assert_eq!(sys.roots().len(), 1);
            assert_eq!(sys.cube(sys.root()).members.len(), 8);
            assert!(sys.generation(sys.k_max).iter().all(|&id| sys.cube(id).is_singleton()));
            let report = verify_system(&s, &sys);
            assert!(report.all_axioms(), "seed {seed}: {:?}", report.violations);
            assert!(report.net_separation && report.net_cover);
        }
    }

    #[test]
    fn descendants_and_tree_relation() {
        let s = grid(8);
        let sys = build_system(&s, 0.5, None, 3).unwrap();
        let root = sys.root();
        for id in 0..sys.len() {
            assert!(sys.is_descendant(id, root));
            for a in sys.ancestors(id) {
                assert!(sys.is_descendant(id, a));
                assert!(!sys.is_descendant(a, id));
            }
        }
        assert_eq!(sys.descendants(root).len(), sys.len());
    }

    #[test]
    fn invalid_delta_is_rejected() {
        let s = grid(4);
        assert!(build_system(&s, 1.0, None, 0).is_err());
        assert!(build_system(&s, 0.0, None, 0).is_err());
        assert!(build_system(&s, 0.5, Some((0, 3)), 0).is_err());
    }

    #[test]
    fn strict_mode_uses_paper_constants() {
        let s = grid(8);
        let sys = build_system_strict(&s, 1).unwrap();
        let p = StrictParams::for_a0(1.0);
        assert_eq!(sys.c1, p.c1);
        assert_eq!(sys.big_c1, p.big_c1);
        assert!(sys.delta < 1.0 / 96.0);
        assert!(verify_system(&s, &sys).all_axioms());
    }

    #[test]
    fn adjacent_systems_cover_every_ball_of_the_grid() {
        let s = grid(8);
        let adj = build_adjacent_systems(&s, 0.5, &(0..16).collect::<Vec<_>>(), false).unwrap();
        assert!(adj.count() <= 2);
        for b in s.canonical_balls() {
            assert!(adj.systems.iter().any(|sys| cover_in(&s, sys, &b).is_some()));
        }
    }

    #[test]
    fn more_seeds_never_worsen_the_constant() {
        let s = grid(8);
        let small = build_adjacent_systems(&s, 0.5, &[0], false).unwrap();
        let large = build_adjacent_systems(&s, 0.5, &[0, 1, 2, 3, 4], false).unwrap();
        assert!(large.cover_constant <= small.cover_constant);
    }

    #[test]
    fn containing_cube_picks_smallest_sandwich() {
        let s = grid(8);
        let adj = build_adjacent_systems(&s, 0.5, &[0, 1, 2, 3], false).unwrap();
        let whole = s.ball(0, 100.0).unwrap();
        let (t, id) = containing_cube(&s, &adj, &whole).unwrap();
        assert_eq!(adj.systems[t].cube(id).members.len(), 8);
        let single = s.ball(5, 0.5).unwrap();
        let (t, id) = containing_cube(&s, &adj, &single).unwrap();
        assert_eq!(adj.systems[t].cube(id).members, vec![5]);
    }
}
