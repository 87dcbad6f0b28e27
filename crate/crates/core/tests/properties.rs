use cadlag_localtime::crossing::{j_pi, k_pi_level, k_pi_lp_bound};
use cadlag_localtime::crossing::discrete_tanaka_residual;
use cadlag_localtime::dc::{bracket, builtin_suite, integrate_against_f2, mollify};
use cadlag_localtime::follmer::{jump_compensator, quadratic_variation, riemann_integral};
use cadlag_localtime::skorokhod::{
    count_all_levels, count_level, skorokhod_map, stieltjes_integral_fprime,
};
use cadlag_localtime::{DcFunction, LevelGrid, Mollifier, PartitionScheme, SampledCadlagPath};
use proptest::prelude::*;

fn path_strategy(max_len: usize) -> impl Strategy<Value = SampledCadlagPath> {
    (2..=max_len)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
        .prop_map(|(v, flags)| {
            let jumps: Vec<usize> = (1..v.len()).filter(|&i| flags[i]).collect();
            SampledCadlagPath::uniform(1.0, v, &jumps).unwrap()
        })
}

/// Brute force over every subsequence of samples: the longest alternating
/// chain of low/high samples. Returns `(up, down)` of the best chain for
/// each starting side.
fn subsequence_sup(values: &[f64], z: f64, eps: f64) -> (u64, u64) {
    let n = values.len();
    let (lo, hi) = (z - 0.5 * eps, z + 0.5 * eps);
    let mut best = (0, 0);
    for mask in 0u32..(1 << n) {
        let chosen: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).collect();
        // each chosen sample must alternate strictly between low and high
        let sides: Option<Vec<bool>> =
            chosen.iter().map(|&x| if x <= lo { Some(false) } else if x >= hi { Some(true) } else { None }).collect();
        let Some(sides) = sides else { continue };
        if sides.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let up = sides.windows(2).filter(|w| !w[0] && w[1]).count() as u64;
        let down = sides.windows(2).filter(|w| w[0] && !w[1]).count() as u64;
        best.0 = best.0.max(up);
        best.1 = best.1.max(down);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_scan_attains_subsequence_sup(
        v in prop::collection::vec(-1.0f64..1.0, 1..10),
        z in -1.0f64..1.0,
        eps in 0.01f64..1.0,
    ) {
        prop_assert_eq!(count_level(&v, z, eps, false).unwrap(), subsequence_sup(&v, z, eps));
    }

    #[test]
    fn all_levels_scan_equals_per_level_scan(
        v in prop::collection::vec(-1.0f64..1.0, 1..60),
        eps in 0.0f64..0.8,
        strict in any::<bool>(),
        du in 0.005f64..0.1,
    ) {
        let strict = strict || eps == 0.0;
        let grid = LevelGrid::covering(-1.0, 1.0, du, eps).unwrap();
        let fast = count_all_levels(&v, &grid, eps, strict).unwrap();
        for (k, z) in grid.nodes().enumerate() {
            let (u, d) = count_level(&v, z, eps, strict).unwrap();
            prop_assert_eq!(fast[k], u + d, "level {}", z);
        }
    }

    #[test]
    fn all_levels_scan_on_dyadic_values(
        v in prop::collection::vec(-16i32..16, 1..40),
        half_cells in 0usize..6,
    ) {
        // values, thresholds and nodes all coincide exactly
        let v: Vec<f64> = v.into_iter().map(|k| k as f64 / 8.0).collect();
        let grid = LevelGrid::covering(-2.0, 2.0, 0.125, 1.0).unwrap();
        let eps = half_cells as f64 * 0.125;
        for strict in [false, true] {
            if eps == 0.0 && !strict { continue; }
            let fast = count_all_levels(&v, &grid, eps, strict).unwrap();
            for (k, z) in grid.nodes().enumerate() {
                let (u, d) = count_level(&v, z, eps, strict).unwrap();
                prop_assert_eq!(fast[k], u + d);
            }
        }
    }

    #[test]
    fn counts_shrink_with_width(
        v in prop::collection::vec(-1.0f64..1.0, 1..40),
        z in -1.0f64..1.0,
        a in 0.01f64..1.0,
        b in 0.01f64..1.0,
    ) {
        let (small, large) = if a < b { (a, b) } else { (b, a) };
        let n = |c| { let (u, d) = count_level(&v, z, c, false).unwrap(); u + d };
        prop_assert!(n(large) <= n(small));
    }

    #[test]
    fn sandwich_bound_between_ladder_widths(
        v in prop::collection::vec(-1.0f64..1.0, 1..40),
        z in -1.0f64..1.0,
        k in 0u32..4,
        frac in 0.0f64..1.0,
    ) {
        // d_k = 0.8 / 2^k; c in (d_{k+1}, d_k]
        let dk = 0.8 / 2f64.powi(k as i32);
        let dk1 = dk / 2.0;
        let c = dk1 + (dk - dk1) * (1.0 - frac).max(1e-9);
        let n = |w| { let (u, d) = count_level(&v, z, w, false).unwrap(); (u + d) as f64 };
        let mid = c * n(c);
        prop_assert!((dk1 / dk) * dk * n(dk) <= mid + 1e-12);
        prop_assert!(mid <= (dk / dk1) * dk1 * n(dk1) + 1e-12);
    }

    #[test]
    fn skorokhod_invariants(p in path_strategy(30), eps in 0.01f64..1.5) {
        let s = skorokhod_map(&p, eps).unwrap();
        let h = eps / 2.0;
        prop_assert_eq!(s.deviation[0], 0.0);
        prop_assert!(s.deviation.iter().all(|d| d.abs() <= h));
        let xe = s.regularized.values();
        for i in 1..xe.len() {
            let d = xe[i] - xe[i - 1];
            if d > 0.0 { prop_assert!((s.deviation[i] - h).abs() <= 1e-12); }
            if d < 0.0 { prop_assert!((s.deviation[i] + h).abs() <= 1e-12); }
        }
        for seg in &s.segments {
            let w = &xe[seg.start..=seg.end];
            match seg.direction {
                1 => prop_assert!(w.windows(2).all(|p| p[1] >= p[0])),
                -1 => prop_assert!(w.windows(2).all(|p| p[1] <= p[0])),
                _ => prop_assert!(w.windows(2).all(|p| p[1] == p[0])),
            }
        }
        // the sweep integral of the indicatrix equals the variation
        prop_assert!((s.banach_indicatrix_integral(1.0) - s.total_variation()).abs() <= 1e-12 * (1.0 + s.total_variation()));
    }

    #[test]
    fn stieltjes_integral_by_parts(p in path_strategy(25), eps in 0.01f64..1.5) {
        // for convex f, f'(x^ε) moves in the direction of x^ε, where φ = ±ε/2
        let s = skorokhod_map(&p, eps).unwrap();
        let x = p.values();
        let xe = s.regularized.values();
        let n = x.len() - 1;
        for f in [DcFunction::half_square(), DcFunction::half_abs(0.1), DcFunction::relu(-0.3)] {
            let direct = stieltjes_integral_fprime(&p, &s, &f, 1.0).unwrap();
            let fp: Vec<f64> = xe.iter().map(|&u| f.deriv(u)).collect();
            let by_parts = fp[n] * x[n] - fp[0] * x[0]
                - (1..=n).map(|i| xe[i] * (fp[i] - fp[i - 1])).sum::<f64>()
                - 0.5 * eps * fp.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
            prop_assert!((direct - by_parts).abs() < 1e-9, "{}: {} vs {}", f.name(), direct, by_parts);
        }
    }

    #[test]
    fn jf_identity_on_random_pairs(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        for f in builtin_suite() {
            let lhs = f.jf_increment(a, b);
            let (lo, hi) = bracket(a, b);
            let rhs = integrate_against_f2(|u| (b - u).abs(), &f, (lo, hi), &[]);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + (a - b).powi(2)), "{}: {} vs {}", f.name(), lhs, rhs);
            prop_assert!((lhs - f.jf_measure(a, b)).abs() <= 1e-9 * (1.0 + (a - b).powi(2)));
        }
    }

    #[test]
    fn fundamental_theorem_for_suite(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        // f(b) - f(a) = ∫_a^b f'(u) du, oracle: fine midpoint rule
        for f in builtin_suite() {
            let m = 4000;
            let h = (b - a) / m as f64;
            let integral: f64 = (0..m).map(|k| f.deriv(a + (k as f64 + 0.5) * h)).sum::<f64>() * h;
            prop_assert!((f.eval(b) - f.eval(a) - integral).abs() < 1e-3 * (1.0 + (b - a).abs()));
        }
    }

    #[test]
    fn restriction_composes(p in path_strategy(20), s in 0.01f64..1.0, r in 0.0f64..1.0) {
        let t = s + (1.0 - s) * r;
        let once = p.restrict(s).unwrap();
        let twice = p.restrict(t).unwrap().restrict(s).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn variation_bounds(p in path_strategy(30)) {
        prop_assert!(p.total_variation() >= (p.last() - p.first()).abs() * (1.0 - 1e-12));
        let grid = LevelGrid::for_path(&p, 0.01, None).unwrap();
        let j = j_pi(&p, 1.0, &grid);
        let jump_var: f64 = p.jump_sizes().iter().map(|(_, d)| d.abs()).sum();
        prop_assert!(j.variation() <= 2.0 * jump_var + 1e-9);
        let mass: f64 = p.jump_sizes().iter().map(|(_, d)| 0.5 * d * d).sum();
        prop_assert!((j.integral() - mass).abs() <= 1e-12 * (1.0 + mass));
    }

    #[test]
    fn kpi_lp_bound_and_monotonicity(p in path_strategy(30)) {
        let grid = LevelGrid::for_path(&p, 0.01, None).unwrap();
        let full = PartitionScheme::full_grid(&p);
        let level = full.level(0).unwrap();
        let k = k_pi_level(&p, level, 1.0, &grid);
        for pw in [1.0, 2.0] {
            prop_assert!(k.lp_norm(pw) <= k_pi_lp_bound(&p, level, 1.0, pw) * (1.0 + 1e-12) + 1e-15);
        }
        let times = p.times().to_vec();
        let mut prev = vec![0.0; grid.len()];
        for &t in &times {
            let kt = k_pi_level(&p, level, t, &grid);
            prop_assert!(kt.values.iter().zip(&prev).all(|(a, b)| *a >= *b));
            prev = kt.values;
        }
    }

    #[test]
    fn quadratic_variation_on_full_grid(p in path_strategy(30)) {
        let full = PartitionScheme::full_grid(&p);
        let qv = quadratic_variation(&p, &full, 0).unwrap();
        for i in 0..qv.times.len() {
            prop_assert!((qv.total[i] - qv.continuous[i] - qv.jump[i]).abs() <= 1e-12 * (1.0 + qv.total[i]));
        }
        for w in qv.continuous.windows(2).chain(qv.jump.windows(2)).chain(qv.total.windows(2)) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!((qv.jump.last().unwrap() - p.jump_quadratic_variation()).abs() <= 1e-12);
    }

    #[test]
    fn telescoping_and_convex_compensator(p in path_strategy(30), t in 0.0f64..1.0) {
        let full = PartitionScheme::full_grid(&p);
        let r = riemann_integral(&p, |_| 1.0, full.level(0).unwrap(), t);
        prop_assert!((r - (p.value_at(t) - p.first())).abs() < 1e-12);
        let sq = DcFunction::half_square();
        let mut prev = 0.0;
        for &s in p.times() {
            let c = jump_compensator(&p, &sq, s);
            prop_assert!(c >= 0.0 && c >= prev);
            prev = c;
        }
    }

    #[test]
    fn mollified_functions_satisfy_tanaka_exactly(p in path_strategy(30), n in 1u32..8, one_sided in any::<bool>()) {
        let rho = if one_sided { Mollifier::one_sided() } else { Mollifier::symmetric() };
        let full = PartitionScheme::full_grid(&p);
        for f in [DcFunction::half_abs(0.1), DcFunction::default_mixture()] {
            let g = mollify(&f, n, &rho).unwrap();
            let r = discrete_tanaka_residual(&p, &g, &full, 0, 1.0).unwrap();
            prop_assert!(r.abs() <= 1e-9 * (1.0 + p.total_variation()), "{}: {r}", g.name());
        }
    }
}
