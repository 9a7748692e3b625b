//! Verification suites. Each one appends rows and a details entry to the report.

use anyhow::Context as _;
use hometype::dyadic::{containing_cube, verify_system};
use hometype::haar::{atomic_decompose, bmo2_comparison, validate_atom, HaarBasis};
use hometype::maximal::{dominate_maximal_commutator, KernelOperator, KernelSign};
use hometype::norms::bilinear::{bilinear_compact_split, bilinear_tail_report, random_pairs, reduction_check, BilinearWeights};
use hometype::norms::compact::{compact_split, finite_rank_error_curve, tail_norm_report, ErrorCurve};
use hometype::norms::pnorm::{operator_pnorm, DEFAULT_TOL};
use hometype::norms::witness::vmo_lower_witness;
use hometype::oscillation::{
    alternating_symbol, median, smooth_symbol, variant_comparison, vmo_profile, weighted_bmo_norm_balls, BloomWeights, Variant,
};
use hometype::space::FiniteSpace;
use hometype::sparse::{
    augment_oscillation_family, bilinear_bloom_apply, bloom_apply, carleson_constant, check_reverse_doubling, random_subfamily,
    reverse_doubling_split, sparse_matrix, sparsify,
};
use hometype::weights::{ap_constant, comparison_check, conjugate, dual_weight, reverse_holder, weight_doubling_check, Weight};
use hometype::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::report::{Report, Row};
use crate::scenario::{Context, Scenario, Suite};

/// Build the context and run the selected suites in a fixed order.
pub fn run_suite(scenario: &Scenario) -> anyhow::Result<Report> {
    let mut report = Report::new(scenario.clone());
    let mut suites = scenario.suites.clone();
    suites.sort();
    suites.dedup();
    if suites.is_empty() {
        return Ok(report);
    }
    let ctx = Context::build(scenario)?;
    for suite in suites {
        run_one(&ctx, suite, &mut report).with_context(|| format!("suite {}", suite.name()))?;
    }
    Ok(report)
}

pub fn run_one(ctx: &Context, suite: Suite, report: &mut Report) -> anyhow::Result<()> {
    match suite {
        Suite::DyadicAxioms => dyadic_axioms(ctx, report),
        Suite::Weights => weights(ctx, report),
        Suite::Oscillation => oscillation(ctx, report),
        Suite::Haar => haar(ctx, report),
        Suite::Sparse => sparse(ctx, report),
        Suite::Domination => domination(ctx, report),
        Suite::Compactness => compactness(ctx, report),
        Suite::Bilinear => bilinear(ctx, report),
        Suite::LowerBound => lower_bound(ctx, report),
    }
}

fn dyadic_axioms(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let mut systems = Vec::new();
    for &seed in &ctx.scenario.dyadic.seeds {
        let sys = ctx.system(seed)?;
        let r = verify_system(&ctx.space, &sys);
        let id = |what: &str| format!("dyadic/seed{seed}/{what}");
        report.push(Row::flag(id("partition"), "generations partition the space", r.partition));
        report.push(Row::flag(id("nested"), "cubes are nested or disjoint", r.nested));
        report.push(Row::flag(
            id("unique-ancestor"),
            "unique ancestor per coarser generation",
            r.unique_ancestor,
        ));
        report.push(Row::flag(id("children"), "bounded number of children", r.children));
        report.push(Row::flag(id("containment"), "inner and outer balls around centers", r.containment));
        report.push(Row::flag(id("monotone"), "parents of larger cubes contain them", r.monotone));
        report.push(Row::flag(id("net-separation"), "generation centers are separated", r.net_separation).soft());
        report.push(Row::flag(id("net-cover"), "generation centers cover the space", r.net_cover).soft());
        systems.push(json!({
            "seed": seed,
            "cubes": sys.len(),
            "k_min": sys.k_min,
            "k_max": sys.k_max,
            "c1": sys.c1,
            "big_c1": sys.big_c1,
            "max_children": sys.m,
            "violations": r.violations,
        }));
    }
    let adjacent = match ctx.adjacent() {
        Ok(adj) => {
            let balls = ctx.space.canonical_balls();
            let sandwiched = balls.iter().filter(|b| containing_cube(&ctx.space, &adj, b).is_ok()).count();
            report.push(Row::at_least(
                "dyadic/adjacent/cover",
                "every ball sits in a comparable cube",
                sandwiched as f64 / balls.len() as f64,
                1.0,
            ));
            report.push(Row::record(
                "dyadic/adjacent/count",
                "number of adjacent systems",
                adj.count() as f64,
                ctx.scenario.dyadic.seeds.len() as f64,
            ));
            report.push(Row::record(
                "dyadic/adjacent/constant",
                "ball to cube sandwich constant",
                adj.cover_constant,
                0.0,
            ));
            json!({ "systems": adj.count(), "cover_constant": adj.cover_constant, "centers_close": adj.centers_close, "balls": adj.balls_checked })
        }
        Err(e) => {
            report.push(Row::flag("dyadic/adjacent/cover", "every ball sits in a comparable cube", false));
            json!({ "error": e.to_string() })
        }
    };
    report
        .details
        .insert("dyadic-axioms".into(), json!({ "systems": systems, "adjacent": adjacent }));
    Ok(())
}

fn weights(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let p = ctx.scenario.p;
    let one = ap_constant(s, &Weight::constant(s.len(), 1.0), p)?;
    report.push(Row::at_most(
        "weights/constant",
        "constant weights have unit characteristic",
        (one - 1.0).abs(),
        1e-12,
    ));
    let mut details = serde_json::Map::new();
    for (name, w) in [("lam1", &ctx.bw.lam1), ("lam2", &ctx.bw.lam2), ("w", &ctx.w)] {
        let ap = ap_constant(s, w, p)?;
        let pd = conjugate(p);
        let dual = ap_constant(s, &dual_weight(w, p)?, pd)?;
        let want = ap.powf(pd - 1.0);
        report.push(Row::at_least(
            format!("weights/{name}/ap"),
            "characteristic is at least one",
            ap,
            1.0 - 1e-12,
        ));
        report.push(Row::at_most(
            format!("weights/{name}/duality"),
            "dual weight characteristic identity",
            (dual - want).abs() / want,
            1e-10,
        ));
        let fit = comparison_check(s, w, p, 10)?;
        report.push(Row::flag(
            format!("weights/{name}/comparison"),
            "two-sided measure comparison",
            fit.holds,
        ));
        let rh = reverse_holder(s, w, &[0.25, 0.5, 0.75])?;
        let rh_max = rh.iter().map(|(_, c)| *c).fold(0.0, f64::max);
        report.push(Row::record(
            format!("weights/{name}/reverse-holder"),
            "reverse Hölder constant",
            rh_max,
            0.0,
        ));
        let dbl = weight_doubling_check(s, w, p)?;
        report.push(Row::flag(format!("weights/{name}/doubling"), "weighted doubling", dbl.holds).soft());
        details.insert(
            name.into(),
            json!({ "ap": ap, "dual_ap": dual, "chat1": fit.chat1, "sigma": fit.sigma, "reverse_holder": rh, "doubling_ratio": dbl.max_ratio }),
        );
    }
    let nu_a2 = ap_constant(s, &ctx.bw.nu, 2.0)?;
    report.push(Row::flag("weights/nu/a2", "intermediate weight is in A_2", nu_a2.is_finite()));
    details.insert("nu_a2".into(), json!(nu_a2));
    report.details.insert("weights".into(), serde_json::Value::Object(details));
    Ok(())
}

fn oscillation(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let b = &ctx.b;
    let mut worst: f64 = 0.0;
    for ball in s.distinct_balls() {
        let m = median(s, b, &ball.members)?;
        let total = s.measure(&ball.members);
        let above: f64 = ball.members.iter().filter(|&&x| b[x] > m).map(|&x| s.mass(x)).sum();
        let below: f64 = ball.members.iter().filter(|&&x| b[x] < m).map(|&x| s.mass(x)).sum();
        worst = worst.max(above.max(below) / total);
    }
    report.push(Row::at_most(
        "oscillation/median",
        "median level sets hold at most half the mass",
        worst,
        0.5 + 1e-12,
    ));
    let w = &ctx.bw.lam1;
    let n1 = weighted_bmo_norm_balls(s, b, w, 1.0)?;
    let mut jn = Vec::new();
    let mut exponents = vec![2.0, conjugate(ctx.scenario.p)];
    exponents.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for r in exponents {
        let nr = weighted_bmo_norm_balls(s, b, w, r)?;
        report.push(Row::at_most(
            format!("oscillation/jn/r{r:.3}/lower"),
            "first-power norm below the r-th power norm",
            n1,
            nr * (1.0 + 1e-12),
        ));
        let fit = if n1 > 0.0 { nr / n1 } else { 1.0 };
        report.push(Row::record(
            format!("oscillation/jn/r{r:.3}/upper"),
            "fitted John–Nirenberg constant",
            fit,
            0.0,
        ));
        jn.push(json!({ "r": r, "norm": nr, "fit": fit }));
    }
    let balls: Vec<&[usize]> = s.distinct_balls().iter().map(|b| b.members.as_slice()).collect();
    let (c0, big_c0) = variant_comparison(s, b, &ctx.bw, &balls)?;
    report.push(Row::record(
        "oscillation/variants",
        "ν and λ' normalizations are comparable",
        big_c0,
        c0,
    ));
    let mut profiles = serde_json::Map::new();
    for v in Variant::ALL {
        let prof = vmo_profile(s, b, &ctx.bw, None, v, ctx.scenario.dyadic.delta)?;
        let over = prof.radius_buckets.iter().any(|(_, sup)| *sup > prof.global);
        report.push(Row::flag(
            format!("oscillation/profile/{v:?}"),
            "bucket sups stay below the global norm",
            !over,
        ));
        profiles.insert(
            format!("{v:?}"),
            json!({ "x0": prof.x0, "global": prof.global, "radius": prof.radius_buckets, "far": prof.far_buckets }),
        );
    }
    report.details.insert(
        "oscillation".into(),
        json!({ "bmo1": n1, "john_nirenberg": jn, "variant_range": [c0, big_c0], "profiles": profiles }),
    );
    Ok(())
}

fn haar(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let n = s.len();
    let sys = ctx.primary_system()?;
    let basis = HaarBasis::new(s, &sys);
    let dense: Vec<Vec<f64>> = (0..basis.len()).map(|i| basis.dense(i)).collect();
    let mut ortho: f64 = 0.0;
    for i in 0..dense.len() {
        for j in i..dense.len() {
            let ip: f64 = (0..n).map(|x| dense[i][x] * dense[j][x] * s.mass(x)).sum();
            ortho = ortho.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    report.push(Row::at_most("haar/orthonormal", "Haar functions are orthonormal", ortho, 1e-10));
    let b = &ctx.b;
    let e = basis.expand(s, b);
    let energy: f64 = e.coef.iter().chain(&e.mean).map(|c| c * c).sum();
    let norm2: f64 = (0..n).map(|x| b[x] * b[x] * s.mass(x)).sum();
    report.push(Row::at_most(
        "haar/parseval",
        "Parseval identity",
        (energy - norm2).abs() / norm2.max(1e-300),
        1e-10,
    ));
    let mut para: f64 = 0.0;
    for q in sys.cubes() {
        let ind: Vec<f64> = (0..n).map(|x| if q.contains(x) { 1.0 } else { 0.0 }).collect();
        let pi = basis.paraproduct(s, b, &ind, false);
        let pis = basis.paraproduct(s, b, &ind, true);
        let bq = s.average(b, &q.members);
        for &x in &q.members {
            para = para.max(((b[x] - bq) - (pi[x] - pis[x])).abs());
        }
    }
    report.push(Row::at_most(
        "haar/paraproduct",
        "oscillation as a difference of paraproducts",
        para,
        1e-10,
    ));
    let dec = atomic_decompose(s, &sys, &basis, b, &ctx.bw)?;
    let mut rebuilt = dec.mean_part.clone();
    let mut valid = true;
    for (beta, atom, _, _) in &dec.atoms {
        for (x, v) in atom.values.iter().enumerate() {
            rebuilt[x] += beta * v;
        }
        valid &= validate_atom(s, atom, &ctx.bw)?.valid;
    }
    let recon = (0..n).map(|x| (rebuilt[x] - b[x]).abs()).fold(0.0, f64::max);
    report.push(Row::at_most(
        "haar/atoms/reconstruct",
        "atomic decomposition reconstructs the symbol",
        recon,
        1e-10,
    ));
    report.push(Row::flag(
        "haar/atoms/valid",
        "every atom is supported, cancellative and normalized",
        valid,
    ));
    report.push(Row::record(
        "haar/atoms/constant",
        "coefficient sum against the square function",
        dec.constant,
        0.0,
    ));
    let (lhs, bmo2, ratio) = bmo2_comparison(s, &sys, b, &ctx.bw)?;
    report.push(Row::record("haar/bmo2", "λ oscillation against the dyadic BMO² norm", ratio, 0.0));
    report.details.insert(
        "haar".into(),
        json!({ "functions": basis.len(), "atoms": dec.atoms.len(), "square_norm": dec.square_norm, "lambda_osc": lhs, "bmo2": bmo2 }),
    );
    Ok(())
}

fn sparse(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let sys = ctx.primary_system()?;
    let mut min_eta_lambda = f64::INFINITY;
    let mut max_lambda_eta: f64 = 0.0;
    let mut witnesses_ok = true;
    let mut split_ok = true;
    let mut aug_rows = Vec::new();
    let mut aug_ok = true;
    for k in 0..ctx.scenario.corpus {
        let seed = ctx.item_seed(11, k);
        let prob = 0.15 + 0.7 * (k as f64 + 0.5) / ctx.scenario.corpus as f64;
        let fam = random_subfamily(&sys, prob, seed);
        if fam.is_empty() {
            continue;
        }
        let lambda = carleson_constant(&sys, &fam);
        let sp = sparsify(s, &sys, &fam)?;
        witnesses_ok &= sp.check(s, &sys).valid();
        min_eta_lambda = min_eta_lambda.min(sp.eta * lambda);
        max_lambda_eta = max_lambda_eta.max(lambda * sp.eta);
        for group in reverse_doubling_split(&sys, &fam, sp.eta) {
            split_ok &= check_reverse_doubling(&sys, &group, sp.eta);
        }
        let aug = augment_oscillation_family(s, &sys, &fam, &ctx.b)?;
        aug_ok &= aug.sparsity() >= aug.sparsity_target() * (1.0 - 1e-12);
        aug_rows.push(json!({ "seed": seed, "constant": aug.constant, "sparsity": aug.sparsity(), "target": aug.sparsity_target() }));
    }
    report.push(Row::at_least("sparse/eta", "sparsify reaches η ≥ 1/Λ", min_eta_lambda, 1.0 - 1e-9));
    report.push(Row::flag(
        "sparse/witness",
        "witness sets are inside, large and of bounded overlap",
        witnesses_ok,
    ));
    report.push(Row::record(
        "sparse/carleson",
        "Carleson constant times sparsity",
        max_lambda_eta,
        0.0,
    ));
    report.push(Row::flag("sparse/reverse-doubling", "split subfamilies reverse double", split_ok));
    report.push(Row::flag("sparse/augment", "augmented family keeps sparsity γ/(2(γ+1))", aug_ok));
    let all: Vec<usize> = (0..sys.len()).collect();
    let a = sparse_matrix(s, &sys, &all);
    let p = ctx.scenario.p;
    let norm = operator_pnorm(s, &a, &ctx.bw.lam1, &ctx.bw.lam1, p, DEFAULT_TOL)?.upper;
    let ap = ap_constant(s, &ctx.bw.lam1, p)?;
    let scale = ap.powf(1f64.max(1.0 / (p - 1.0)));
    report.push(Row::record(
        "sparse/weighted-bound",
        "sparse operator norm over the weight power",
        norm / scale,
        0.0,
    ));
    report.details.insert(
        "sparse".into(),
        json!({ "augmentations": aug_rows, "operator_norm": norm, "ap": ap }),
    );
    Ok(())
}

fn random_nonnegative(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.gen::<f64>() < 0.3 { 0.0 } else { rng.gen::<f64>() })
        .collect()
}

fn domination(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let adj = ctx.adjacent()?;
    let count = ctx.scenario.corpus.clamp(1, 10);
    let mut all_hold = true;
    let mut worst: f64 = 0.0;
    let mut certs = Vec::new();
    for k in 0..count {
        let seed = ctx.item_seed(21, k);
        let mut f = random_nonnegative(s.len(), seed);
        if f.iter().all(|v| *v == 0.0) {
            f[0] = 1.0;
        }
        let cert = dominate_maximal_commutator(s, &adj, &ctx.b, &f)?;
        all_hold &= cert.holds;
        let ratio = if cert.constant > 0.0 { cert.max_ratio / cert.constant } else { 0.0 };
        worst = worst.max(ratio);
        let depth = cert.steps.iter().map(|st| st.depth).max().unwrap_or(0);
        certs.push(
            json!({ "seed": seed, "constant": cert.constant, "max_ratio": cert.max_ratio, "steps": cert.steps.len(), "depth": depth }),
        );
    }
    report.push(Row::flag(
        "domination/pointwise",
        "sparse bound dominates the maximal commutator everywhere",
        all_hold,
    ));
    report.push(Row::at_most(
        "domination/ratio",
        "brute-force ratio within the certificate constant",
        worst,
        1.0 + 1e-9,
    ));
    report
        .details
        .insert("domination".into(), json!({ "systems": adj.count(), "certificates": certs }));
    Ok(())
}

/// Tail checks over the feasible part of the grid; returns the largest
/// fitted structural constant.
fn split_checks(
    ctx: &Context,
    report: &mut Report,
    prefix: &str,
    b: &[f64],
    bw: &BloomWeights,
) -> anyhow::Result<(f64, Vec<serde_json::Value>)> {
    let s = &ctx.space;
    let sys = ctx.primary_system()?;
    let all: Vec<usize> = (0..sys.len()).collect();
    let whole = hometype::sparse::bloom_matrix(s, &sys, &all, b, true);
    let mut structural: f64 = 0.0;
    let mut entries = Vec::new();
    for &eps in &ctx.scenario.eps_grid {
        match compact_split(s, &sys, &all, b, bw, eps) {
            Ok(split) => {
                let err = split.total().max_abs_diff(&whole);
                report.push(Row::at_most(
                    format!("{prefix}/eps{eps}/identity"),
                    "parts sum to the operator",
                    err,
                    1e-12,
                ));
                let tails = tail_norm_report(s, &sys, &split, b, bw, DEFAULT_TOL)?;
                for t in &tails.tails {
                    report.push(Row::at_most(
                        format!("{prefix}/eps{eps}/{}", t.part),
                        "tail norm within its ε bound",
                        t.measured,
                        t.bound * (1.0 + 1e-6),
                    ));
                }
                report.push(Row::record(
                    format!("{prefix}/eps{eps}/rank"),
                    "cubes kept in the finite-rank part",
                    split.rank as f64,
                    all.len() as f64,
                ));
                structural = structural.max(tails.structural());
                entries.push(json!({ "eps": eps, "rank": split.rank, "q_n": split.q_n, "g_cut": split.g_cut, "tails": tails.tails, "w_factor": tails.w_factor, "aug_constant": tails.aug_constant }));
            }
            Err(Error::Infeasible { floor, .. }) => {
                report.push(Row::record(
                    format!("{prefix}/eps{eps}/infeasible"),
                    "ε below the resolvable floor",
                    eps,
                    floor,
                ));
                entries.push(json!({ "eps": eps, "skipped": true, "floor": floor }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((structural, entries))
}

fn curve_json(c: &ErrorCurve) -> serde_json::Value {
    json!({ "floor": c.floor, "monotone": c.monotone, "points": c.points })
}

fn compactness(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let (structural, entries) = split_checks(ctx, report, "compact", &ctx.b, &ctx.bw)?;
    report.push(Row::record(
        "compact/structural",
        "one structural constant over the ε grid",
        structural,
        0.0,
    ));
    let sys = ctx.primary_system()?;
    let all: Vec<usize> = (0..sys.len()).collect();
    let grid = &ctx.scenario.eps_grid;
    let flat_b = smooth_symbol(s, 0);
    let rough_b = alternating_symbol(s.len());
    let flat = finite_rank_error_curve(s, &sys, &all, &flat_b, &ctx.bw, grid, DEFAULT_TOL)?;
    let rough = finite_rank_error_curve(s, &sys, &all, &rough_b, &ctx.bw, grid, DEFAULT_TOL)?;
    report.push(Row::flag(
        "compact/curve/monotone",
        "error does not grow with the rank",
        flat.monotone && rough.monotone,
    ));
    let (flat_k, _) = split_checks(ctx, &mut Report::new(ctx.scenario.clone()), "flat", &flat_b, &ctx.bw)?;
    let w = hometype::norms::compact::weight_factor(s, &ctx.bw)?;
    let flat_ratio = flat.feasible().map(|p| p.error / (p.eps * w)).fold(0.0, f64::max);
    report.push(Row::at_most(
        "compact/dichotomy/flat",
        "flat symbol error below constant times ε",
        flat_ratio,
        3.0 * flat_k * (1.0 + 1e-6),
    ));
    let growth = match (rough.points.first(), rough.points.last()) {
        (Some(a), Some(z)) if a.ratio() > 0.0 => z.ratio() / a.ratio(),
        _ => 0.0,
    };
    report.push(Row::at_least(
        "compact/dichotomy/persistent",
        "persistent symbol error over ε keeps growing",
        growth,
        4.0,
    ));
    report.details.insert(
        "compactness".into(),
        json!({ "structural": structural, "splits": entries, "flat_curve": curve_json(&flat), "persistent_curve": curve_json(&rough) }),
    );
    Ok(())
}

fn bilinear(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let sc = &ctx.scenario;
    let bw = BilinearWeights::new(ctx.bw.lam1.clone(), ctx.bw.lam2.clone(), ctx.w.clone(), sc.p1, sc.p2)?;
    let sys = ctx.primary_system()?;
    let all: Vec<usize> = (0..sys.len()).collect();
    let pairs = random_pairs(s.len(), 30, ctx.item_seed(31, 0));
    let mut worst: f64 = 0.0;
    for (f, g) in &pairs {
        let r = reduction_check(s, &sys, &all, &ctx.b, &bw, f, g)?;
        worst = worst.max(if r.rhs > 0.0 { r.lhs / r.rhs } else { 0.0 });
    }
    report.push(Row::at_most(
        "bilinear/reduction",
        "bilinear form below linear form times maximal function",
        worst,
        1.0 + 1e-12,
    ));
    let (f, _) = &pairs[0];
    let lin = bloom_apply(s, &sys, &all, &ctx.b, f, true);
    let bil = bilinear_bloom_apply(s, &sys, &all, &ctx.b, f, &vec![1.0; s.len()], true);
    let diff = lin.iter().zip(&bil).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    report.push(Row::at_most(
        "bilinear/unit-slot",
        "unit second slot gives the linear form",
        diff,
        1e-12,
    ));
    let corpus = random_pairs(s.len(), sc.corpus.max(1), ctx.item_seed(32, 0));
    let mut structural: f64 = 0.0;
    let mut entries = Vec::new();
    for &eps in &sc.eps_grid {
        match bilinear_compact_split(s, &sys, &all, &ctx.b, &bw, eps) {
            Ok(split) => {
                let r = bilinear_tail_report(s, &sys, &split, &ctx.b, &bw, &corpus, DEFAULT_TOL)?;
                for t in &r.tails {
                    report.push(Row::at_most(
                        format!("bilinear/eps{eps}/{}", t.part),
                        "bilinear tail within its ε bound",
                        t.measured,
                        t.bound * (1.0 + 1e-9),
                    ));
                }
                structural = structural.max(r.structural());
                entries.push(serde_json::to_value(&r)?);
            }
            Err(Error::Infeasible { floor, .. }) => {
                report.push(Row::record(
                    format!("bilinear/eps{eps}/infeasible"),
                    "ε below the resolvable floor",
                    eps,
                    floor,
                ));
            }
            Err(e) => return Err(e.into()),
        }
    }
    report.push(Row::record(
        "bilinear/structural",
        "one structural constant over the ε grid",
        structural,
        0.0,
    ));
    report.details.insert(
        "bilinear".into(),
        json!({ "p": bw.p, "w_hat": bw.w_hat.values(), "splits": entries }),
    );
    Ok(())
}

fn witness_json(
    space: &FiniteSpace,
    b: &[f64],
    bw: &BloomWeights,
    kernel: Option<&KernelOperator>,
) -> (Result<serde_json::Value, Error>, bool, bool) {
    match vmo_lower_witness(space, b, bw, kernel) {
        Ok(w) => {
            let ok = w.checks.all();
            let v = json!({
                "delta0": w.delta0,
                "c_fit": w.c_fit,
                "kernel_c_fit": w.kernel_c_fit,
                "norm_range": [w.norm_range.0, w.norm_range.1],
                "dropped": w.dropped,
                "elements": w.elements.iter().map(|e| json!({
                    "center": e.center, "radius": e.radius, "companion": e.companion_center,
                    "support": e.f_trimmed, "value": e.test_function.iter().cloned().fold(0.0, f64::max),
                    "response": e.response, "kernel_response": e.kernel_response,
                })).collect::<Vec<_>>(),
            });
            (Ok(v), true, ok)
        }
        Err(e) => (Err(e), false, false),
    }
}

fn lower_bound(ctx: &Context, report: &mut Report) -> anyhow::Result<()> {
    let s = &ctx.space;
    let kernel = KernelOperator::power(s, 1.0, KernelSign::Antisymmetric);
    let (persistent, built, checks) = witness_json(s, &alternating_symbol(s.len()), &ctx.bw, Some(&kernel));
    let persistent = match persistent {
        Ok(v) => v,
        Err(Error::VmoFlat { chain_len, .. }) => json!({ "unresolved": true, "chain_len": chain_len }),
        Err(e) => return Err(e.into()),
    };
    // a space too small for three scales is reported, not failed
    report.push(Row::flag("witness/persistent/built", "persistent symbol admits a witness chain", built).soft());
    if built {
        report.push(Row::flag(
            "witness/persistent/sets",
            "median, pairing, trim and disjointness hold exactly",
            checks,
        ));
    }
    let (flat, flat_built, _) = witness_json(s, &smooth_symbol(s, 0), &ctx.bw, None);
    let flat_ok = matches!(flat, Err(Error::VmoFlat { .. }));
    report.push(Row::flag(
        "witness/flat/refused",
        "flat symbol is reported as VMO-flat",
        flat_ok && !flat_built,
    ));
    let (own, _, own_checks) = witness_json(s, &ctx.b, &ctx.bw, None);
    let own = match own {
        Ok(v) => {
            report.push(Row::flag(
                "witness/scenario/sets",
                "scenario symbol witness sets hold exactly",
                own_checks,
            ));
            v
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let scan = hometype::maximal::nondegeneracy_scan(s, &kernel, 4.0);
    report.push(Row::record("witness/kernel/c0", "kernel non-degeneracy constant", scan.c0_min, 0.0));
    report
        .details
        .insert("lower-bound".into(), json!({ "persistent": persistent, "scenario": own }));
    Ok(())
}
