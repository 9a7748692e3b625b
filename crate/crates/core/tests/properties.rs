use hometype::dyadic::{build_system, verify_system};
use hometype::haar::HaarBasis;
use hometype::linalg::Mat;
use hometype::maximal::{hl_maximal, maximal_commutator};
use hometype::norms::compact::compact_split;
use hometype::norms::{matrix_pnorm, operator_pnorm, weighted_lp_norm};
use hometype::oscillation::{mean_oscillation, median, random_symbol, variant_oscillation, vmo_profile, BloomWeights, Variant};
use hometype::space::FiniteSpace;
use hometype::sparse::{bloom_matrix, carleson_constant, check_reverse_doubling, random_subfamily, reverse_doubling_split, sparsify};
use hometype::weights::{ap_constant, bloom_weight, dual_weight, random_weight, reverse_holder, Weight};
use proptest::prelude::*;

/// Points on a line at random positions with random masses.
fn line_space() -> impl Strategy<Value = FiniteSpace> {
    (3usize..12).prop_flat_map(|n| {
        (prop::collection::vec(0.1f64..3.0, n), prop::collection::vec(0.2f64..4.0, n)).prop_map(|(gaps, mass)| {
            let mut pos = vec![0.0];
            for g in &gaps[1..] {
                pos.push(pos.last().unwrap() + g);
            }
            FiniteSpace::fitted(mass, |i, j| (pos[i] - pos[j]).abs()).unwrap()
        })
    })
}

/// A line space with a snowflaked metric `|x − y|^θ`.
fn snowflake_space() -> impl Strategy<Value = FiniteSpace> {
    (3usize..10, 0.3f64..1.0)
        .prop_map(|(n, theta)| FiniteSpace::fitted(vec![1.0; n], |i, j| (i as f64 - j as f64).abs().powf(theta)).unwrap())
}

fn grid(n: usize) -> FiniteSpace {
    FiniteSpace::from_fn(vec![1.0; n], 1.0, |i, j| (i as f64 - j as f64).abs()).unwrap()
}

fn vals(n: usize, seed: u64) -> Vec<f64> {
    random_symbol(n, 2.0, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quasi_triangle_holds_for_every_triple(s in prop_oneof![line_space(), snowflake_space()]) {
        let n = s.len();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    prop_assert!(s.d(x, y) <= s.a0() * (s.d(x, z) + s.d(z, y)) * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn balls_grow_with_radius(s in line_space(), r1 in 0.05f64..10.0, r2 in 0.05f64..10.0) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        for x in 0..s.len() {
            let a = s.ball(x, lo).unwrap();
            let b = s.ball(x, hi).unwrap();
            prop_assert!(a.members.iter().all(|y| b.contains(*y)));
            // same ball whenever no distance from x falls in [lo, hi)
            let jump = s.row(x).iter().any(|&d| d >= lo && d < hi);
            if !jump {
                prop_assert_eq!(&a.members, &b.members);
            }
        }
    }

    #[test]
    fn built_systems_satisfy_the_axioms(s in prop_oneof![line_space(), snowflake_space()], seed in 0u64..50) {
        let sys = build_system(&s, 0.5, None, seed).unwrap();
        let report = verify_system(&s, &sys);
        prop_assert!(report.all_axioms(), "{:?}", report.violations);
    }

    #[test]
    fn split_subfamilies_reverse_double(seed in 0u64..200, prob in 0.2f64..0.9) {
        let s = grid(16);
        let sys = build_system(&s, 0.5, None, seed % 5).unwrap();
        let fam = random_subfamily(&sys, prob, seed);
        let eta = 0.25;
        for group in reverse_doubling_split(&sys, &fam, eta) {
            prop_assert!(check_reverse_doubling(&sys, &group, eta));
        }
    }

    #[test]
    fn ap_constant_is_at_least_one(s in line_space(), seed in 0u64..1000, p in 1.2f64..4.0) {
        let w = random_weight(s.len(), 1.5, seed).unwrap();
        prop_assert!(ap_constant(&s, &w, p).unwrap() >= 1.0 - 1e-12);
        let one = Weight::constant(s.len(), 3.0);
        prop_assert!((ap_constant(&s, &one, p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_weight_identity(s in line_space(), seed in 0u64..1000, p in 1.2f64..4.0) {
        let w = random_weight(s.len(), 1.5, seed).unwrap();
        let pd = p / (p - 1.0);
        let lhs = ap_constant(&s, &dual_weight(&w, p).unwrap(), pd).unwrap();
        let rhs = ap_constant(&s, &w, p).unwrap().powf(pd - 1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn bloom_weight_is_a2_and_reverse_holder_is_finite(s in line_space(), seed in 0u64..1000, p in 1.3f64..3.0) {
        let l1 = random_weight(s.len(), 1.0, seed).unwrap();
        let l2 = random_weight(s.len(), 1.0, seed + 1).unwrap();
        let nu = bloom_weight(&l1, &l2, p).unwrap();
        prop_assert!(ap_constant(&s, &nu, 2.0).unwrap().is_finite());
        for (_, c) in reverse_holder(&s, &l1, &[0.25, 0.5, 0.75]).unwrap() {
            prop_assert!(c.is_finite() && c >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn median_level_sets_hold_half_the_mass(s in line_space(), seed in 0u64..1000) {
        let b = vals(s.len(), seed);
        for ball in s.distinct_balls() {
            let m = median(&s, &b, &ball.members).unwrap();
            let total = s.measure(&ball.members);
            let above: f64 = ball.members.iter().filter(|&&x| b[x] > m).map(|&x| s.mass(x)).sum();
            let below: f64 = ball.members.iter().filter(|&&x| b[x] < m).map(|&x| s.mass(x)).sum();
            prop_assert!(above <= total / 2.0 * (1.0 + 1e-12));
            prop_assert!(below <= total / 2.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn oscillation_is_affine_covariant(s in line_space(), seed in 0u64..1000, c in -5.0f64..5.0) {
        let b = vals(s.len(), seed);
        let shifted: Vec<f64> = b.iter().map(|v| v + c).collect();
        let scaled: Vec<f64> = b.iter().map(|v| v * c).collect();
        for ball in s.distinct_balls() {
            let o = mean_oscillation(&s, &b, &ball.members).unwrap();
            prop_assert!((mean_oscillation(&s, &shifted, &ball.members).unwrap() - o).abs() <= 1e-9 * (1.0 + o));
            prop_assert!((mean_oscillation(&s, &scaled, &ball.members).unwrap() - c.abs() * o).abs() <= 1e-9 * (1.0 + o));
        }
    }

    #[test]
    fn profile_buckets_stay_below_the_global_norm(s in line_space(), seed in 0u64..1000) {
        let b = vals(s.len(), seed);
        let bw = BloomWeights::new(random_weight(s.len(), 1.0, seed).unwrap(), random_weight(s.len(), 1.0, seed + 7).unwrap(), 2.0).unwrap();
        for v in Variant::ALL {
            let prof = vmo_profile(&s, &b, &bw, None, v, 0.5).unwrap();
            for (_, sup) in prof.radius_buckets.iter().chain(&prof.far_buckets) {
                prop_assert!(*sup <= prof.global);
            }
            // widening the window can only raise the sup
            let mut radii: Vec<f64> = prof.entries.iter().map(|e| e.radius).collect();
            radii.sort_by(f64::total_cmp);
            for w in radii.windows(2) {
                prop_assert!(prof.omega_small(w[0]) <= prof.omega_small(w[1]));
                prop_assert!(prof.omega_large(w[0]) >= prof.omega_large(w[1]));
            }
            prop_assert!(prof.omega_small(f64::INFINITY) == prof.global);
        }
    }

    #[test]
    fn haar_basis_is_orthonormal_and_complete(s in line_space(), seed in 0u64..20) {
        let sys = build_system(&s, 0.5, None, seed).unwrap();
        let basis = HaarBasis::new(&s, &sys);
        let n = s.len();
        let dense: Vec<Vec<f64>> = (0..basis.len()).map(|i| basis.dense(i)).collect();
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                let ip: f64 = (0..n).map(|x| dense[i][x] * dense[j][x] * s.mass(x)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - want).abs() < 1e-10);
            }
        }
        prop_assert_eq!(basis.len() + basis.roots.len(), n);
        let f = vals(n, seed);
        let back = basis.reconstruct(&basis.expand(&s, &f));
        for x in 0..n {
            prop_assert!((back[x] - f[x]).abs() < 1e-10);
        }
    }

    #[test]
    fn paraproduct_identity_on_every_cube(s in line_space(), seed in 0u64..50) {
        let sys = build_system(&s, 0.5, None, seed).unwrap();
        let basis = HaarBasis::new(&s, &sys);
        let b = vals(s.len(), seed);
        for q in sys.cubes() {
            let ind: Vec<f64> = (0..s.len()).map(|x| if q.contains(x) { 1.0 } else { 0.0 }).collect();
            let pi = basis.paraproduct(&s, &b, &ind, false);
            let pis = basis.paraproduct(&s, &b, &ind, true);
            let bq = s.average(&b, &q.members);
            for &x in &q.members {
                prop_assert!(((b[x] - bq) - (pi[x] - pis[x])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn carleson_and_sparse_are_equivalent(seed in 0u64..500, prob in 0.1f64..0.8) {
        let s = grid(16);
        let sys = build_system(&s, 0.5, None, seed % 4).unwrap();
        let fam = random_subfamily(&sys, prob, seed);
        let lambda = carleson_constant(&sys, &fam);
        let sp = sparsify(&s, &sys, &fam).unwrap();
        prop_assert!(sp.check(&s, &sys).valid());
        prop_assert!(sp.eta * lambda >= 1.0 - 1e-9);
        prop_assert!(lambda <= 1.0 / sp.eta * (1.0 + 1e-9));
    }

    #[test]
    fn maximal_function_envelopes(s in line_space(), seed in 0u64..1000) {
        let n = s.len();
        let f = vals(n, seed);
        let g = vals(n, seed + 1);
        let b = vals(n, seed + 2);
        let mf = hl_maximal(&s, &f, None);
        let mg = hl_maximal(&s, &g, None);
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, c)| a + c).collect();
        let msum = hl_maximal(&s, &sum, None);
        let binf = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let cb = maximal_commutator(&s, &b, &f);
        for x in 0..n {
            prop_assert!(mf[x] >= f[x].abs() * (1.0 - 1e-12));
            prop_assert!(msum[x] <= (mf[x] + mg[x]) * (1.0 + 1e-12) + 1e-12);
            prop_assert!(cb[x] <= 2.0 * binf * mf[x] * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn split_reconstructs_the_operator(seed in 0u64..200, eps in 0.05f64..1.0) {
        let s = grid(16);
        let sys = build_system(&s, 0.5, None, seed % 3).unwrap();
        let b: Vec<f64> = (0..16).map(|x| (x as f64 / 15.0) + 0.01 * vals(16, seed)[x]).collect();
        let bw = BloomWeights::new(random_weight(16, 0.5, seed).unwrap(), random_weight(16, 0.5, seed + 1).unwrap(), 2.0).unwrap();
        let fam = random_subfamily(&sys, 0.6, seed);
        if let Ok(split) = compact_split(&s, &sys, &fam, &b, &bw, eps) {
            let whole = bloom_matrix(&s, &sys, &fam, &b, true);
            prop_assert!(split.total().max_abs_diff(&whole) < 1e-12);
        }
    }

    #[test]
    fn pnorm_certificate_and_monotonicity(seed in 0u64..1000, p in 1.3f64..4.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::from_fn(5, 5, |_, _| rng.gen::<f64>());
        let bump = Mat::from_fn(5, 5, |_, _| rng.gen::<f64>() * 0.5);
        let big = a.add(&bump);
        let na = matrix_pnorm(&a, p, 1e-8).unwrap();
        let nb = matrix_pnorm(&big, p, 1e-8).unwrap();
        prop_assert!(na.lower <= na.upper && na.upper - na.lower <= 1e-8 * na.upper);
        prop_assert!(na.lower <= nb.upper);
    }

    #[test]
    fn adjoint_norm_matches_with_dual_weights(seed in 0u64..300, p in 1.4f64..3.5) {
        let s = grid(12);
        let sys = build_system(&s, 0.5, None, seed % 3).unwrap();
        let fam = random_subfamily(&sys, 0.5, seed);
        let b = vals(12, seed);
        let bw = BloomWeights::new(random_weight(12, 0.7, seed).unwrap(), random_weight(12, 0.7, seed + 3).unwrap(), p).unwrap();
        let t = bloom_matrix(&s, &sys, &fam, &b, true);
        // adjoint in L²(μ): m_x T[x][y] = m_y T*[y][x]
        let ts = Mat::from_fn(12, 12, |y, x| t[(x, y)] * s.mass(x) / s.mass(y));
        let fwd = operator_pnorm(&s, &t, &bw.lam1, &bw.lam2, p, 1e-8).unwrap().upper;
        let back = operator_pnorm(&s, &ts, &bw.lam2_dual, &bw.lam1_dual, bw.p_dual(), 1e-8).unwrap().upper;
        prop_assert!((fwd - back).abs() <= 1e-6 * fwd.max(1e-300));
    }

    #[test]
    fn lp_norm_is_homogeneous(s in line_space(), seed in 0u64..1000, c in -3.0f64..3.0, p in 1.0f64..5.0) {
        let f = vals(s.len(), seed);
        let w = random_weight(s.len(), 1.0, seed).unwrap();
        let cf: Vec<f64> = f.iter().map(|v| c * v).collect();
        let a = weighted_lp_norm(&s, &f, &w, p).unwrap();
        prop_assert!((weighted_lp_norm(&s, &cf, &w, p).unwrap() - c.abs() * a).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn variant_functionals_are_comparable(seed in 0u64..300) {
        let s = grid(10);
        let b = vals(10, seed);
        let bw = BloomWeights::new(random_weight(10, 0.5, seed).unwrap(), random_weight(10, 0.5, seed + 1).unwrap(), 2.0).unwrap();
        for ball in s.distinct_balls() {
            let a = variant_oscillation(&s, &b, &bw, Variant::Nu, &ball.members).unwrap();
            let c = variant_oscillation(&s, &b, &bw, Variant::LambdaPrime, &ball.members).unwrap();
            prop_assert!((a == 0.0) == (c == 0.0));
        }
    }
}
