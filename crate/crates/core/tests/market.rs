mod common;

use apiary_core::demography::{AgeStructure, ColonyState, EnergyCoefficients};
use apiary_core::flora::ForagingParams;
use apiary_core::market::{
    build_eta_cut, classify_regime, solve_case_a, solve_case_b, solve_case_b_scarce, target_ratio,
    AffineEfficiency, CaseB, NectarOption, Regime, SolveCase, SolverSettings,
};
use apiary_core::sim::{WeatherDay, WeatherSeries};
use apiary_core::thermo::{cluster_heating_power, ThermalParams};
use common::{greedy_cut, line, nectar_option, random_lines, rng};
use proptest::prelude::*;
use rand::{Rng, RngExt};

fn capacity(lines: &[AffineEfficiency]) -> f64 {
    lines.iter().map(|l| l.capacity).sum()
}

#[test]
fn cut_matches_greedy_allocation() {
    let mut r = rng(31);
    for _ in 0..50 {
        let n = r.random_range(1..=6);
        let lines = random_lines(&mut r, n);
        let demand = capacity(&lines) * r.random_range(0.05..0.95);
        let cut = build_eta_cut(&lines, demand).unwrap();
        assert!(cut.t0.is_finite() && cut.t1.is_finite());
        let top = 2.0 * cut.t1.max(1.0);
        let grid: Vec<f64> = (0..1000).map(|k| top * k as f64 / 999.0).collect();
        let mut prev = 0.0;
        for &tau in &grid {
            let v = cut.value(tau);
            assert!(
                (v - greedy_cut(&lines, demand, tau)).abs() < 1e-9,
                "tau {tau}"
            );
            assert!(v >= prev - 1e-12, "decreasing at {tau}");
            if tau <= cut.t0 {
                assert_eq!(v, 0.0);
            }
            prev = v;
        }
        assert!(cut.max_jump() < 1e-9);
        assert!(cut.value(cut.t0 + 1e-9 * cut.t0.max(1.0)) > 0.0);
        let (a, h) = (cut.t1, cut.t1.max(1.0));
        let curvature = cut.value(a + 2.0 * h) - 2.0 * cut.value(a + h) + cut.value(a);
        assert!(curvature.abs() < 1e-9 * cut.value(a + 2.0 * h).max(1.0));
    }
}

#[test]
fn cut_inverts_itself() {
    let mut r = rng(32);
    for _ in 0..50 {
        let n = r.random_range(1..=6);
        let lines = random_lines(&mut r, n);
        let cut = build_eta_cut(&lines, capacity(&lines) * 0.5).unwrap();
        for level in [0.01, 0.1, 0.5, 2.0] {
            let tau = cut.invert(level).unwrap();
            assert!((cut.value(tau) - level).abs() < 1e-9 * level.max(1.0));
        }
    }
}

#[test]
fn case_a_single_pair_closed_form() {
    let p = ForagingParams::default();
    let nectar = [nectar_option(1, 0.8, 400.0)];
    let pollen = [line(2, 0.25, -0.05, 300.0)];
    let min_income = 100.0 * pollen[0].income_per_bee(&p);
    let sol = solve_case_a(&nectar, &pollen, 1000.0, min_income, &p).unwrap();
    assert_eq!(sol.case, SolveCase::A);
    assert!((sol.pollen.foragers_on(2) - 100.0).abs() < 1e-9);
    assert_eq!(sol.nectar.foragers_on(1), 400.0);
    assert!((sol.pollen.reserve - 500.0).abs() < 1e-9);
    // τ = (η_cut + η̃_cost)/slope
    let tau = sol.tau.unwrap();
    assert!((tau - (0.8 + 0.05) / 0.25).abs() < 1e-12);
}

#[test]
fn case_a_price_is_scale_free() {
    let p = ForagingParams::default();
    let mut r = rng(33);
    for _ in 0..50 {
        let nectar: Vec<NectarOption> = (0..3)
            .map(|i| nectar_option(i + 1, r.random_range(0.2..2.0), r.random_range(50.0..500.0)))
            .collect();
        let pollen = random_lines(&mut r, 3)
            .into_iter()
            .map(|l| AffineEfficiency { id: l.id + 10, ..l })
            .collect::<Vec<_>>();
        let min_income = 0.2
            * pollen
                .iter()
                .map(|l| l.capacity * l.income_per_bee(&p))
                .sum::<f64>();
        let base = solve_case_a(&nectar, &pollen, 2000.0, min_income, &p).unwrap();
        let k = r.random_range(0.5..4.0);
        let scaled_nectar: Vec<NectarOption> = nectar
            .iter()
            .map(|n| NectarOption {
                efficiency: n.efficiency * k,
                ..*n
            })
            .collect();
        let scaled_pollen: Vec<AffineEfficiency> = pollen
            .iter()
            .map(|l| AffineEfficiency {
                slope: l.slope * k,
                intercept: l.intercept * k,
                ..*l
            })
            .collect();
        let scaled =
            solve_case_a(&scaled_nectar, &scaled_pollen, 2000.0, min_income * k, &p).unwrap();
        let (a, b) = (base.tau.unwrap(), scaled.tau.unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn case_a_reports_infeasible_income() {
    let p = ForagingParams::default();
    let pollen = [line(2, 0.25, -0.05, 10.0)];
    let need = 20.0 * pollen[0].income_per_bee(&p);
    assert!(solve_case_a(&[nectar_option(1, 1.0, 100.0)], &pollen, 1000.0, need, &p).is_err());
}

/// A surplus market whose pollen capacity covers every forager.
fn surplus_market<R: Rng>(r: &mut R) -> (Vec<NectarOption>, Vec<AffineEfficiency>, f64, f64) {
    let budget = r.random_range(500.0..3000.0);
    let nectar: Vec<NectarOption> = (0..3)
        .map(|i| {
            nectar_option(
                i + 1,
                r.random_range(0.3..2.0),
                budget * r.random_range(0.1..0.4),
            )
        })
        .collect();
    let n = r.random_range(2..=5);
    let pollen: Vec<AffineEfficiency> = (0..n)
        .map(|i| {
            line(
                i as u32 + 10,
                r.random_range(0.05..0.5),
                -r.random_range(0.0..0.1),
                budget * r.random_range(0.5..1.0),
            )
        })
        .collect();
    let reachable: f64 = nectar.iter().map(|o| o.efficiency * o.capacity).sum();
    let base_need = reachable * r.random_range(0.05..0.4);
    (nectar, pollen, budget, base_need)
}

#[test]
fn case_b_trace_is_nested_and_self_consistent() {
    let mut r = rng(34);
    let settings = SolverSettings::default();
    for _ in 0..50 {
        let (nectar, pollen, budget, base_need) = surplus_market(&mut r);
        let sol = solve_case_b(&nectar, &pollen, budget, base_need, settings).unwrap();
        assert_eq!(sol.case, SolveCase::B);
        assert!(sol.converged, "{:?}", sol.flags);
        assert!(!sol.trace.is_empty() && sol.trace.len() <= 100);
        let t = &sol.trace;
        if let [.., a, b] = t[..] {
            assert!((b - a).abs() < 1e-6 || sol.tau == Some(b));
        }
        for w in t.windows(3) {
            let (lo, hi) = (w[0].min(w[1]), w[0].max(w[1]));
            let slack = 1e-12 * hi.abs().max(1.0);
            assert!(w[2] >= lo - slack && w[2] <= hi + slack, "trace {t:?}");
        }
        let tau = sol.tau.unwrap();
        let bees = sol.pollen.assigned() + sol.pollen.reserve;
        let again = CaseB::new(&nectar, &pollen, budget, base_need, settings)
            .unwrap()
            .reprice(tau, bees)
            .unwrap()
            .unwrap();
        assert!((again - tau).abs() < 2e-6, "{tau} -> {again}");
    }
}

#[test]
fn case_b_without_pollen_cost_stops_at_once() {
    let nectar = [nectar_option(1, 1.0, 500.0)];
    let pollen = [line(10, 0.2, 0.0, 2000.0)];
    let sol = solve_case_b(&nectar, &pollen, 1000.0, 100.0, SolverSettings::default()).unwrap();
    assert_eq!(sol.trace.len(), 1);
    assert!((sol.tau.unwrap() - 5.0).abs() < 1e-12);
    assert_eq!(sol.pollen_cost, 0.0);
}

#[test]
fn jump_in_the_nectar_margin_leaves_a_two_cycle() {
    // filling the best nectar source moves the margin to the next one, so the
    // repricing map is a step that crosses the diagonal in its jump
    let nectar = [
        nectar_option(1, 0.7733563037900768, 178.0578056690267),
        nectar_option(2, 1.4227660339061279, 161.06790667427788),
        nectar_option(3, 1.5876344915531806, 157.53195295167524),
    ];
    let pollen = [
        line(
            10,
            0.4149748743915067,
            -0.08944172251725985,
            488.248830889469,
        ),
        line(
            11,
            0.45074444945799386,
            -0.05708819934497438,
            441.8266810092251,
        ),
        line(
            12,
            0.4214906517782659,
            -0.03793971971495787,
            654.5205147760407,
        ),
        line(
            13,
            0.41763059728234925,
            -0.0676992068728925,
            677.0332436521336,
        ),
        line(
            14,
            0.4352309188294095,
            -0.005162265662188137,
            668.9418703544709,
        ),
    ];
    let (budget, need) = (699.1206809882945, 244.91360575220293);
    let settings = SolverSettings::default();
    let sol = solve_case_b(&nectar, &pollen, budget, need, settings).unwrap();
    assert!(!sol.converged);
    assert_eq!(sol.trace.len(), settings.max_iter);
    assert_eq!(sol.flags.len(), 1);
    let (a, b) = (sol.trace[0], sol.trace[1]);
    assert!(a > b);
    assert!(sol.trace.chunks(2).all(|w| w == [a, b]));
    assert_eq!(sol.tau, Some(0.5 * (a + b)));

    let map = CaseB::new(&nectar, &pollen, budget, need, settings).unwrap();
    let g = |t: f64| map.reprice(t, 400.0).unwrap().unwrap();
    let (mut lo, mut hi) = (b, a);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert_eq!((g(lo), g(hi)), (a, b));
}

#[test]
fn scarce_pollen_keeps_a_reserve() {
    let p = ForagingParams::default();
    let nectar = [nectar_option(1, 1.0, 100.0)];
    let pollen = [line(10, 0.2, -0.02, 50.0)];
    assert!(solve_case_b(&nectar, &pollen, 1000.0, 50.0, SolverSettings::default()).is_err());
    let sol = solve_case_b_scarce(
        &nectar,
        &pollen,
        1000.0,
        50.0,
        SolverSettings::default(),
        &p,
    )
    .unwrap();
    assert_eq!(sol.case, SolveCase::BScarce);
    assert!(sol.pollen.foragers_on(10) <= 50.0);
    let total = sol.nectar.assigned() + sol.pollen.assigned() + sol.pollen.reserve;
    assert!((total - 1000.0).abs() < 1e-9);
    assert!(sol.pollen.reserve > 0.0);
}

#[test]
fn target_ratio_closed_form() {
    let p = ThermalParams::default();
    let empty = WeatherSeries::default();
    assert_eq!(
        target_ratio(850.0, 0.12, &empty, 1e4, &p).unwrap(),
        850.0 / 0.12
    );

    let gap = 12.0;
    let days = 40;
    let winter = WeatherSeries {
        days: vec![
            WeatherDay {
                t_out: p.t_target - gap,
                foraging_hours: 0.0,
                winter: true
            };
            days
        ],
    };
    let n = 12_000.0;
    let got = target_ratio(850.0, 0.12, &winter, n, &p).unwrap();
    let want = 850.0 / 0.12 + p.kappa * f64::cbrt(n) * gap * days as f64 * 86_400.0 / (n * 0.12);
    assert!((got - want).abs() <= 1e-12 * want);
    assert!(
        (cluster_heating_power(n, p.t_target - gap, &p) - p.kappa * f64::cbrt(n) * gap).abs()
            < 1e-15
    );
    assert!(target_ratio(850.0, 0.12, &winter, 0.0, &p).is_err());
}

fn colony(honey: f64, pollen: f64) -> ColonyState {
    ColonyState {
        honey,
        pollen,
        comb: 0.0,
        population: AgeStructure::new(vec![1.0; 10], 0.0).unwrap(),
        brood: Vec::new(),
        brood_energy: 0.0,
        brood_pollen: 0.0,
    }
}

#[test]
fn regimes_follow_the_ratio() {
    let c = EnergyCoefficients::default();
    let target = c.mu * 10.0;
    assert_eq!(
        classify_regime(&colony(0.0, 5.0), &c, target, 0.05).regime,
        Regime::Deficit
    );
    assert_eq!(
        classify_regime(&colony(5.0, 0.0), &c, target, 0.05).regime,
        Regime::Deficit
    );
    assert_eq!(
        classify_regime(&colony(100.0, 10.0), &c, target, 0.05).regime,
        Regime::Balanced
    );
    assert_eq!(
        classify_regime(&colony(104.0, 10.0), &c, target, 0.05).regime,
        Regime::Balanced
    );
    assert_eq!(
        classify_regime(&colony(200.0, 10.0), &c, target, 0.05).regime,
        Regime::Surplus
    );
    assert_eq!(
        classify_regime(&colony(50.0, 10.0), &c, target, 0.05).regime,
        Regime::Deficit
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_is_monotone_in_tau_and_demand(seed in any::<u64>(), share in 0.05f64..0.9, tau in 0.0f64..20.0) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let lines = random_lines(&mut r, n);
        let total = capacity(&lines);
        let small = build_eta_cut(&lines, total * share * 0.5).unwrap();
        let large = build_eta_cut(&lines, total * share).unwrap();
        prop_assert!(small.value(tau) >= large.value(tau) - 1e-12);
        prop_assert!(large.value(tau + 0.5) >= large.value(tau) - 1e-12);
        prop_assert!(small.t0 <= large.t0);
    }

    #[test]
    fn surplus_solution_spends_the_whole_budget(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (nectar, pollen, budget, base_need) = surplus_market(&mut r);
        let sol = solve_case_b(&nectar, &pollen, budget, base_need, SolverSettings::default()).unwrap();
        let total = sol.nectar.assigned() + sol.pollen.assigned() + sol.pollen.reserve;
        prop_assert!((total - budget).abs() <= 1e-9 * budget);
        for a in sol.nectar.assignments.iter().chain(&sol.pollen.assignments) {
            prop_assert!(a.foragers <= a.capacity * (1.0 + 1e-12));
        }
        let need_met: f64 = sol.nectar.assignments.iter()
            .map(|a| a.foragers * nectar.iter().find(|o| o.id == a.id).unwrap().efficiency)
            .sum();
        prop_assert!(need_met >= base_need * (1.0 - 1e-9));
    }
}
