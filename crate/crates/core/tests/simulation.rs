use apiary_core::sim::scenario::default_config;
use apiary_core::sim::{
    cluster_params, run, run_batch, write_reports_csv, HeatingModel, Scenario, ScenarioConfig,
    Stock,
};
use apiary_core::thermo::cluster_heating_power;
use apiary_core::Execution;
use proptest::prelude::*;
use serde_json::{json, Value};
use std::path::Path;

fn scenario(doc: Value) -> Scenario {
    Scenario::from_config(ScenarioConfig::from_value(doc).unwrap(), Path::new(".")).unwrap()
}

fn with(pairs: &[(&str, &str)]) -> Scenario {
    let owned: Vec<(String, String)> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    Scenario::load(None, &owned).unwrap()
}

fn csv_bytes(s: &Scenario) -> Vec<u8> {
    let out = run(s).unwrap();
    let mut buf = Vec::new();
    write_reports_csv(&out.reports, &mut buf).unwrap();
    buf
}

/// Constant cold weather, no flight, young bees that outlive the run.
fn winter_only(days: usize, t_out: f64, adults: f64) -> Value {
    let mut doc = default_config();
    doc["horizon"] = json!(days);
    doc["survival"] = json!({ "kind": "constant", "lifespan": 200 });
    let mut counts = vec![0.0; 201];
    counts[0] = adults;
    doc["colony"] = json!({
        "honey": 50000.0,
        "pollen": 500.0,
        "population": { "counts": counts, "males": 0.0 },
    });
    doc["weather"] = json!({ "days": vec![json!({ "t_out": t_out, "foraging_hours": 0.0, "winter": true }); days] });
    doc
}

#[test]
fn reports_rebuild_the_energy_ledger_exactly() {
    let s = with(&[("horizon", "365")]);
    let out = run(&s).unwrap();
    assert!(out.completed(), "{:?}", out.halt);
    assert_eq!(out.reports.len(), 365);
    let mut e = out.initial_energy;
    let mut p = out.initial_pollen;
    for r in &out.reports {
        e = r.replay_energy(e);
        p = r.replay_pollen(p);
        assert_eq!(e.to_bits(), r.energy.to_bits(), "day {}", r.day);
        assert_eq!(p.to_bits(), r.pollen_total.to_bits(), "day {}", r.day);
    }
    let scale = out.initial_energy.max(out.reports.last().unwrap().energy);
    assert!(out
        .reports
        .iter()
        .all(|r| r.energy_drift.abs() <= 1e-9 * scale));
}

#[test]
fn runs_are_byte_identical() {
    let s = with(&[("horizon", "365")]);
    assert_eq!(csv_bytes(&s), csv_bytes(&s));
}

#[test]
fn batch_matches_single_runs_in_either_mode() {
    let scenarios: Vec<Scenario> = (0..6)
        .map(|k| {
            with(&[
                ("horizon", "90"),
                ("colony.honey", &(8000.0 + 1000.0 * k as f64).to_string()),
            ])
        })
        .collect();
    let seq = run_batch(&scenarios, Execution::Sequential);
    let par = run_batch(&scenarios, Execution::Parallel);
    for ((s, a), b) in scenarios.iter().zip(seq).zip(par) {
        let single = run(s).unwrap();
        assert_eq!(a.unwrap(), single);
        assert_eq!(b.unwrap(), single);
    }
}

#[test]
fn winter_honey_declines_at_the_cluster_rate() {
    let (n, t_out) = (12_000.0, -2.0);
    let s = scenario(winter_only(30, t_out, n));
    let out = run(&s).unwrap();
    assert!(out.completed());
    let h = cluster_heating_power(n, t_out, &cluster_params(&s.thermal));
    let rate = (h + s.energy.pi * n) * 86_400.0 / s.energy.mu;
    let mut honey = s.initial.honey;
    for r in &out.reports {
        assert_eq!(r.heating_model, HeatingModel::Cluster);
        assert_eq!(r.population, n);
        assert!(
            ((honey - r.honey) - rate).abs() <= 1e-9 * rate,
            "day {}",
            r.day
        );
        honey = r.honey;
    }
}

#[test]
fn an_underprovisioned_winter_starves() {
    let mut doc = winter_only(60, -10.0, 20_000.0);
    doc["colony"]["honey"] = json!(300.0);
    let out = run(&scenario(doc)).unwrap();
    let halt = out.halt.expect("starves");
    assert_eq!(halt.stock, Stock::Honey);
    assert_eq!(out.reports.len(), halt.day);
    assert!(halt.day < 60);
}

#[test]
fn missing_colony_is_named() {
    let mut doc = default_config();
    doc.as_object_mut().unwrap().remove("colony");
    let err = ScenarioConfig::from_value(doc).unwrap_err().to_string();
    assert!(err.contains("colony"), "{err}");
}

#[test]
fn overrides_equal_edited_documents() {
    let by_flag = with(&[("energy.pi", "0.0006"), ("resources.0.distance", "650")]);
    let mut doc = default_config();
    doc["energy"]["pi"] = json!(0.0006);
    doc["resources"][0]["distance"] = json!(650.0);
    assert_eq!(by_flag, scenario(doc));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ledger_closes_for_any_start(honey in 2000.0f64..40000.0, pollen in 500.0f64..5000.0, adults in 5000.0f64..30000.0) {
        let s = with(&[
            ("horizon", "60"),
            ("colony.honey", &honey.to_string()),
            ("colony.pollen", &pollen.to_string()),
            ("colony.adults", &adults.to_string()),
        ]);
        let out = run(&s).unwrap();
        let mut e = out.initial_energy;
        for r in &out.reports {
            e = r.replay_energy(e);
            prop_assert_eq!(e.to_bits(), r.energy.to_bits());
            prop_assert!(r.honey >= 0.0 && r.pollen >= 0.0);
            prop_assert!(r.nectar_foragers + r.pollen_foragers + r.reserve_foragers <= r.foragers * (1.0 + 1e-9) + 1e-9);
        }
    }

    #[test]
    fn colder_winters_cost_more_honey(t in -20.0f64..15.0, dt in 0.5f64..10.0) {
        let warm = run(&scenario(winter_only(10, t, 10_000.0))).unwrap();
        let cold = run(&scenario(winter_only(10, t - dt, 10_000.0))).unwrap();
        prop_assert!(cold.final_state.honey < warm.final_state.honey);
    }
}
