mod common;

use common::*;
use iterfe_core::solver::{bgk_surrogate, check_bg_zero, solve_e0, solve_particular, SolverParams};
use iterfe_core::transfer::{apply_transfer, build_alpha_table, iterate_exact, iterate_periodic};
use iterfe_core::verify::{check_hypotheses, class_report, jordan_parts_solve_e0, residual_e};
use iterfe_core::{almost_limit, AlmostLimitParams, FunctionRep, UnitMap, WeightedSystem};
use proptest::prelude::*;

fn params() -> SolverParams {
    SolverParams::default()
}

fn forcing_from(sys: &WeightedSystem, h: &FunctionRep) -> FunctionRep {
    FunctionRep::sum(vec![h.clone(), FunctionRep::scale(-1.0, apply_transfer(sys, h)).unwrap()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_preserves_endpoints(sys in increasing_system(), v in lattice_values()) {
        let h = lattice_fn(v);
        let th = apply_transfer(&sys, &h);
        prop_assert_eq!(th.apply(0.0), h.apply(0.0));
        prop_assert_eq!(th.apply(1.0), h.apply(1.0));
    }

    #[test]
    fn transfer_does_not_expand_sup_norm(sys in increasing_system(), v in lattice_values(), xs in prop::collection::vec(0.0..=1.0f64, 16)) {
        let sup = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        let th = apply_transfer(&sys, &lattice_fn(v));
        for x in xs {
            prop_assert!(th.apply(x).abs() <= sup);
        }
    }

    #[test]
    fn bh_is_a_fixed_point(sys in increasing_system(), v in lattice_values()) {
        let p = params();
        let sol = solve_e0(&sys, &lattice_fn(v), &lattice_grid(), &p).unwrap();
        prop_assert!(sol.residual_sup <= 10.0 * p.tol(), "residual {}", sol.residual_sup);
    }

    #[test]
    fn bstar_solves_the_equation(sys in increasing_system(), v in interior_values()) {
        let p = params();
        let g = forcing_from(&sys, &lattice_fn(v));
        let rep = solve_particular(&sys, &g, &lattice_grid(), &p).unwrap();
        prop_assert!(!rep.g_family.unbounded);
        prop_assert!(rep.residual_sup <= 10.0 * p.tol(), "residual {}", rep.residual_sup);
    }

    #[test]
    fn bg_vanishes_and_is_linear_in_k(sys in increasing_system(), v in interior_values(), k in 1usize..6) {
        let p = params();
        let g = forcing_from(&sys, &lattice_fn(v));
        let bg = check_bg_zero(&sys, &g, &lattice_grid(), &p).unwrap();
        prop_assert!(bg.sup <= p.tol());
        for (x, b) in bg.points.iter().filter(|b| b.1.certified()) {
            let bk = bgk_surrogate(&sys, &g, k, *x, &p).unwrap();
            if let Some(val) = bk.value {
                prop_assert!((val - k as f64 * b.value).abs() <= 2.0 * k as f64 * p.tol());
            }
        }
    }

    #[test]
    fn lipschitz_constant_does_not_grow(sys in mean_identity_system(), v in lattice_values()) {
        let grid = lattice_grid();
        prop_assert!(check_hypotheses(&sys, &grid).unwrap().h2_mean_lipschitz.pass);
        let p = params();
        let h = lattice_fn(v);
        let sol = solve_e0(&sys, &h, &grid, &p).unwrap();
        prop_assume!(sol.undecided_points.is_empty());
        let before = class_report(&h, &grid).lipschitz_estimate;
        let after = class_report(&sol.phi, &grid).lipschitz_estimate;
        prop_assert!(after <= before + 10.0 * p.tol(), "{after} > {before}");
    }

    #[test]
    fn monotone_h_gives_monotone_bh(sys in increasing_system(), v in nondecreasing_values()) {
        let grid = lattice_grid();
        prop_assert!(check_hypotheses(&sys, &grid).unwrap().h1_monotone.pass);
        let p = params();
        let sol = solve_e0(&sys, &lattice_fn(v), &grid, &p).unwrap();
        let certified: Vec<f64> = sol.points.iter().filter(|q| q.value.certified()).map(|q| q.value.value).collect();
        prop_assert!(certified.windows(2).all(|w| w[0] <= w[1] + 2.0 * p.tol()));
    }

    #[test]
    fn affine_functions_are_fixed_under_mean_identity(sys in mean_identity_system(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let grid = lattice_grid();
        prop_assert!(check_hypotheses(&sys, &grid).unwrap().mean_identity_holds());
        let r = residual_e(&FunctionRep::affine(a, b), &sys, &FunctionRep::constant(0.0), &grid);
        prop_assert!(r <= 1e-12, "residual {r}");
    }

    #[test]
    fn jordan_parts_solve_the_homogeneous_equation(sys in increasing_system(), v in lattice_values()) {
        let grid = lattice_grid();
        let p = params();
        let sol = solve_e0(&sys, &lattice_fn(v), &grid, &p).unwrap();
        prop_assume!(sol.undecided_points.is_empty());
        let (plus, minus) = jordan_parts_solve_e0(|x| sol.phi.apply(x), &sys, &grid).unwrap();
        prop_assert!(plus <= 10.0 * p.tol() && minus <= 10.0 * p.tol(), "{plus} {minus}");
    }

    #[test]
    fn alpha_table_matches_branch_enumeration(
        order in 2usize..=4,
        w in prop::collection::vec(1u32..10, 4),
        m in 0usize..=8,
        coeffs in prop::collection::vec(-1.0..1.0f64, 4),
        x_idx in 0usize..6,
    ) {
        let cycle = [0.15, 0.35, 0.55, 0.75];
        let swaps = (1..order).map(|i| UnitMap::point_swap(vec![(cycle[0], cycle[i])]).unwrap()).collect();
        let f = UnitMap::composition(swaps).unwrap();
        let s: u32 = w[..order].iter().sum();
        let weights = w[..order].iter().map(|&a| a as f64 / s as f64).collect();
        let sys = WeightedSystem::periodic(f, weights).unwrap().with_periodic_order(order).unwrap();
        let h = FunctionRep::poly(coeffs).unwrap();
        let x = [0.0, 0.15, 0.35, 0.55, 0.75, 0.5][x_idx];
        let table = build_alpha_table(&sys, 8).unwrap();
        let fast = iterate_periodic(&sys, &h, m, x, &table).unwrap();
        let slow = iterate_exact(&sys, &h, m, x, u64::MAX).unwrap();
        prop_assert!((fast.value - slow.value).abs() <= 1e-12);
    }

    #[test]
    fn convergent_sequences_are_certified(limit in -5.0..5.0f64, amp in -3.0..3.0f64, rate in 0.5..0.95f64) {
        let p = AlmostLimitParams::default();
        let seq: Vec<f64> = (0..p.m_max).map(|m| limit + amp * rate.powi(m as i32)).collect();
        let r = almost_limit(&seq, &p).unwrap();
        prop_assert!(r.is_certified());
        prop_assert!((r.value.unwrap() - limit).abs() <= p.tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_family_bound_is_within_twice_the_solution(sys in increasing_system(), v in interior_values()) {
        // g = h − Th has g_k = h − T^k h, so |g_k| ≤ 2 sup|h|
        let sup = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        let g = forcing_from(&sys, &lattice_fn(v));
        let rep = iterfe_core::solver::check_g_bounded(&sys, &g, &lattice_grid(), &params()).unwrap();
        prop_assert!(!rep.unbounded);
        prop_assert!(rep.bound <= 2.0 * sup + 1e-12);
    }
}
