//! Daily reports, the `reports.csv` format and the run summary.

use std::io::Write;

use serde::Serialize;

use super::{HeatingModel, RunOutcome, Scenario, Starvation, WinterCheck};
use crate::market::{Regime, SolveCase};
use crate::numeric::exact_sum;

/// One simulated day. Energies in J, pollen in g, bees as (fractional)
/// counts. Stocks and totals are end-of-day values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DailyReport {
    pub day: usize,
    pub regime: Regime,
    pub case: SolveCase,
    pub tau: Option<f64>,
    pub eta_cut: f64,
    pub t_out: f64,
    pub foraging_hours: f64,
    pub winter: bool,
    pub heating_model: HeatingModel,
    pub foragers: f64,
    pub nectar_foragers: f64,
    pub pollen_foragers: f64,
    pub reserve_foragers: f64,
    pub nectar_gain: f64,
    pub pollen_fetch: f64,
    pub mortality_loss: f64,
    pub upkeep: f64,
    pub heating: f64,
    pub energy: f64,
    pub energy_drift: f64,
    pub pollen_income: f64,
    pub pollen_mortality: f64,
    pub pollen_total: f64,
    pub pollen_drift: f64,
    pub deaths_natural: f64,
    pub deaths_predation: f64,
    pub eggs: f64,
    pub emerged: f64,
    pub population: f64,
    pub larvae: f64,
    pub honey: f64,
    pub pollen: f64,
    pub flags: String,
}

/// Column order of `reports.csv`. Frozen: new columns go at the end.
pub const REPORT_COLUMNS: [&str; 33] = [
    "day",
    "regime",
    "case",
    "tau",
    "eta_cut",
    "t_out",
    "foraging_hours",
    "winter",
    "heating_model",
    "foragers",
    "nectar_foragers",
    "pollen_foragers",
    "reserve_foragers",
    "nectar_gain",
    "pollen_fetch",
    "mortality_loss",
    "upkeep",
    "heating",
    "energy",
    "energy_drift",
    "pollen_income",
    "pollen_mortality",
    "pollen_total",
    "pollen_drift",
    "deaths_natural",
    "deaths_predation",
    "eggs",
    "emerged",
    "population",
    "larvae",
    "honey",
    "pollen",
    "flags",
];

impl DailyReport {
    /// Energy after the day, rebuilt from the energy before it and the
    /// booked increments in booking order.
    pub fn replay_energy(&self, before: f64) -> f64 {
        before + self.nectar_gain
            - self.pollen_fetch
            - self.mortality_loss
            - self.upkeep
            - self.heating
    }

    pub fn replay_pollen(&self, before: f64) -> f64 {
        before + self.pollen_income - self.pollen_mortality
    }
}

pub fn write_reports_csv<W: Write>(reports: &[DailyReport], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if reports.is_empty() {
        out.write_record(REPORT_COLUMNS)?;
    }
    for r in reports {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxTotals {
    pub nectar_gain: f64,
    pub pollen_fetch: f64,
    pub mortality_loss: f64,
    pub upkeep: f64,
    pub heating: f64,
    pub pollen_income: f64,
    pub pollen_mortality: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub horizon: usize,
    pub days_completed: usize,
    pub halt: Option<Starvation>,
    pub r_target: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub initial_pollen: f64,
    pub final_pollen: f64,
    pub totals: FluxTotals,
    pub max_abs_energy_drift: f64,
    pub max_abs_pollen_drift: f64,
    pub final_population: f64,
    pub final_honey: f64,
    pub final_pollen_stock: f64,
    pub days_deficit: usize,
    pub days_surplus: usize,
    pub days_balanced: usize,
    pub winter: WinterCheck,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, out: &RunOutcome) -> Self {
        let r = &out.reports;
        let total = |f: fn(&DailyReport) -> f64| exact_sum(r.iter().map(f));
        let max_abs = |f: fn(&DailyReport) -> f64| r.iter().map(|x| f(x).abs()).fold(0.0, f64::max);
        let count = |g: Regime| r.iter().filter(|x| x.regime == g).count();
        RunSummary {
            scenario: scenario.name.clone(),
            horizon: scenario.horizon,
            days_completed: r.len(),
            halt: out.halt.clone(),
            r_target: out.r_target,
            initial_energy: out.initial_energy,
            final_energy: r.last().map_or(out.initial_energy, |x| x.energy),
            initial_pollen: out.initial_pollen,
            final_pollen: r.last().map_or(out.initial_pollen, |x| x.pollen_total),
            totals: FluxTotals {
                nectar_gain: total(|x| x.nectar_gain),
                pollen_fetch: total(|x| x.pollen_fetch),
                mortality_loss: total(|x| x.mortality_loss),
                upkeep: total(|x| x.upkeep),
                heating: total(|x| x.heating),
                pollen_income: total(|x| x.pollen_income),
                pollen_mortality: total(|x| x.pollen_mortality),
            },
            max_abs_energy_drift: max_abs(|x| x.energy_drift),
            max_abs_pollen_drift: max_abs(|x| x.pollen_drift),
            final_population: out.final_state.population.total(),
            final_honey: out.final_state.honey,
            final_pollen_stock: out.final_state.pollen,
            days_deficit: count(Regime::Deficit),
            days_surplus: count(Regime::Surplus),
            days_balanced: count(Regime::Balanced),
            winter: super::winter_survival_check(
                &out.final_state,
                &scenario.first_winter(),
                &scenario.energy,
                &scenario.thermal,
                out.r_target,
            ),
        }
    }
}
