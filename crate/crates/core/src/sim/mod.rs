//! The daily driver.
//!
//! Each day the hive prices pollen, forages, loses bees, heats, feeds its
//! brood and ages by one day. Two running totals are booked alongside the
//! state: the colony energy `E = μM + αN + γC + (brood energy)` and its
//! pollen analog. Only flows across the hive boundary touch them (foraging,
//! deaths, upkeep, heating); feeding brood and emergence move value between
//! stocks without changing either total. Every report carries the increments
//! that were actually booked, so summing them reproduces the totals exactly.

pub mod report;
pub mod scenario;
mod weather;

use serde::Serialize;
use thiserror::Error;

use crate::demography::{
    advance_day_tracked, cohort_count, total_energy, total_pollen, ColonyState, DemographyError,
    EnergyCoefficients,
};
use crate::flora::{quality_at_distance, FloralResource, ResourceId};
use crate::foraging::{
    predation_flight_rate, predation_foraging_rate, trip_cycle, AllocationPlan, Assignment,
};
use crate::market::{
    classify_regime, nectar_only, nectar_option, pollen_affine, solve_case_a, solve_case_b,
    solve_case_b_scarce, target_ratio, AffineEfficiency, ExchangeSolution, MarketError,
    NectarOption, RatioState, Regime, SolveCase, SECONDS_PER_DAY,
};
use crate::numeric::{book, exact_sum, split_exact, ExactSum};
use crate::par::{self, Execution};
use crate::thermo::{active_heating_power, cluster_heating_power, ThermalParams};

pub use report::{write_reports_csv, DailyReport, RunSummary, REPORT_COLUMNS};
pub use scenario::{ConfigError, Scenario, ScenarioConfig};
pub use weather::{Seasonal, WeatherDay, WeatherSeries};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Demography(#[from] DemographyError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("day {day} is beyond the {len}-day weather series")]
    NoWeather { day: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stock {
    Honey,
    Pollen,
}

/// Why a run stopped before its horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Starvation {
    pub day: usize,
    pub stock: Stock,
    /// Amount missing (g).
    pub shortfall: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatingModel {
    Active,
    Cluster,
}

/// Parameters of the winter cluster, which holds its core at the minimal
/// winter temperature.
pub fn cluster_params(p: &ThermalParams) -> ThermalParams {
    p.with_target(p.t_center_min)
}

/// Brood-rearing parameters, which hold the nest at brood temperature.
pub fn brood_params(p: &ThermalParams) -> ThermalParams {
    p.with_target(p.t_brood)
}

/// Whether a colony can live through `winter` on its honey.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WinterCheck {
    pub survives: bool,
    /// Spare honey in days of average winter consumption; negative on a
    /// shortfall, infinite for an empty winter.
    pub margin_days: f64,
    /// Honey the winter consumes (g).
    pub need: f64,
}

/// Honey needed to heat the cluster and keep the bees over `winter`,
/// compared with the stock; also requires the honey/pollen ratio to reach
/// `r_target`.
pub fn winter_survival_check(
    state: &ColonyState,
    winter: &WeatherSeries,
    coeffs: &EnergyCoefficients,
    p: &ThermalParams,
    r_target: f64,
) -> WinterCheck {
    if winter.is_empty() {
        return WinterCheck {
            survives: true,
            margin_days: f64::INFINITY,
            need: 0.0,
        };
    }
    let n = state.population.total();
    let cluster = cluster_params(p);
    let need = winter
        .days
        .iter()
        .map(|d| {
            (cluster_heating_power(n, d.t_out, &cluster) + coeffs.pi * n) * SECONDS_PER_DAY
                / coeffs.mu
        })
        .collect::<ExactSum>()
        .value();
    let daily = need / winter.len() as f64;
    let margin_days = if daily > 0.0 {
        (state.honey - need) / daily
    } else {
        f64::INFINITY
    };
    let ratio_ok = state.pollen > 0.0 && coeffs.mu * state.honey / state.pollen >= r_target;
    WinterCheck {
        survives: state.honey >= need && ratio_ok,
        margin_days,
        need,
    }
}

/// Result of a run: the reports of completed days, and the starvation that
/// stopped it, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub reports: Vec<DailyReport>,
    pub halt: Option<Starvation>,
    pub initial_energy: f64,
    pub initial_pollen: f64,
    pub r_target: f64,
    pub final_state: ColonyState,
    pub final_solution: Option<ExchangeSolution>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.halt.is_none()
    }
}

/// A day's market as the colony faces it in the morning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quote {
    pub day: usize,
    pub ratio: RatioState,
    /// Foragers available.
    pub budget: f64,
    /// Upkeep plus heating (W), the nectar need before pollen costs.
    pub base_need: f64,
    #[serde(skip)]
    pub solution: Result<ExchangeSolution, MarketError>,
}

struct Morning {
    weather: WeatherDay,
    foragers: f64,
    nurses: f64,
    heating_model: HeatingModel,
    heating_power: f64,
    upkeep_power: f64,
}

/// Market inputs for one day.
struct Offer {
    nectar: Vec<NectarOption>,
    pollen: Vec<AffineEfficiency>,
}

/// A running simulation.
#[derive(Clone, Debug)]
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    state: ColonyState,
    energy: f64,
    pollen_total: f64,
    r_target: f64,
    previous: Option<ExchangeSolution>,
    day: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, SimError> {
        Self::from_state(scenario, scenario.initial.clone(), 0)
    }

    /// Resumes from an arbitrary state on `day`.
    pub fn from_state(
        scenario: &'a Scenario,
        state: ColonyState,
        day: usize,
    ) -> Result<Self, SimError> {
        state.validate()?;
        let n_winter = scenario
            .market
            .n_winter
            .unwrap_or_else(|| scenario.initial.population.total());
        let r_target = target_ratio(
            scenario.energy.alpha,
            scenario.energy.alpha_pollen,
            &scenario.first_winter(),
            n_winter,
            &cluster_params(&scenario.thermal),
        )?;
        Ok(Self {
            energy: total_energy(&state, &scenario.energy),
            pollen_total: total_pollen(&state, &scenario.energy),
            scenario,
            state,
            r_target,
            previous: None,
            day,
        })
    }

    pub fn state(&self) -> &ColonyState {
        &self.state
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn pollen_total(&self) -> f64 {
        self.pollen_total
    }

    pub fn r_target(&self) -> f64 {
        self.r_target
    }

    pub fn day(&self) -> usize {
        self.day
    }

    pub fn solution(&self) -> Option<&ExchangeSolution> {
        self.previous.as_ref()
    }

    fn offer(&self, day: usize) -> Offer {
        let sc = self.scenario;
        let p = &sc.foraging;
        let mut nectar = Vec::new();
        let mut pollen = Vec::new();
        for res in sc.resources.iter().filter(|r| r.in_bloom(day)) {
            let Some(d) = sc.distance(res) else { continue };
            if res.is_nectar() {
                let q = quality_at_distance(res, d, p).expect("nectar resource");
                nectar.push(nectar_option(res, d, q, p));
            } else {
                pollen.push(pollen_affine(res, d, sc.market.xi, p).expect("pollen resource"));
            }
        }
        Offer { nectar, pollen }
    }

    /// Solves the day's market; `Ok` carries solver failures so callers can
    /// decide whether to fall back.
    fn try_solve(
        &self,
        regime: Regime,
        offer: &Offer,
        budget: f64,
        base_need: f64,
    ) -> Result<ExchangeSolution, MarketError> {
        let sc = self.scenario;
        if !(budget > 0.0) || (offer.nectar.is_empty() && offer.pollen.is_empty()) {
            return Ok(ExchangeSolution::idle(budget));
        }
        let settings = sc.market.solver;
        match regime {
            Regime::Balanced => Ok(match &self.previous {
                Some(prev) => prev.frozen(),
                None => ExchangeSolution::idle(budget),
            }),
            Regime::Deficit => {
                let min_income = sc
                    .market
                    .min_pollen_income
                    .unwrap_or(sc.laying.queen_rate * sc.energy.alpha_pollen / SECONDS_PER_DAY);
                solve_case_a(
                    &offer.nectar,
                    &offer.pollen,
                    budget,
                    min_income,
                    &sc.foraging,
                )
            }
            Regime::Surplus => {
                match solve_case_b(&offer.nectar, &offer.pollen, budget, base_need, settings) {
                    Err(MarketError::ScarceMarket) => solve_case_b_scarce(
                        &offer.nectar,
                        &offer.pollen,
                        budget,
                        base_need,
                        settings,
                        &sc.foraging,
                    ),
                    other => other,
                }
            }
        }
    }

    fn solve(
        &self,
        regime: Regime,
        offer: &Offer,
        budget: f64,
        base_need: f64,
    ) -> ExchangeSolution {
        self.try_solve(regime, offer, budget, base_need)
            .unwrap_or_else(|e| {
                let case = match regime {
                    Regime::Deficit => SolveCase::A,
                    _ => SolveCase::B,
                };
                log::debug!("day {}: market fallback: {e}", self.day);
                nectar_only(case, &offer.nectar, budget, e.to_string())
            })
    }

    /// Conditions at the start of the current day.
    fn morning(&self) -> Result<Morning, SimError> {
        let sc = self.scenario;
        let day = self.day;
        let weather = *sc.weather.days.get(day).ok_or(SimError::NoWeather {
            day,
            len: sc.weather.len(),
        })?;
        let pop = &self.state.population;
        let adults = pop.total();
        let foragers = cohort_count(pop, &sc.tasks, sc.tasks.forager_index())?;
        let nurses = cohort_count(pop, &sc.tasks, sc.tasks.index_of("nurse")?)?;
        let larvae = self.state.larvae();
        let (heating_model, heating_power) = if weather.winter && larvae == 0.0 {
            (
                HeatingModel::Cluster,
                cluster_heating_power(adults, weather.t_out, &cluster_params(&sc.thermal)),
            )
        } else {
            (
                HeatingModel::Active,
                active_heating_power(nurses, weather.t_out, &brood_params(&sc.thermal)),
            )
        };
        Ok(Morning {
            weather,
            foragers,
            nurses,
            heating_model,
            heating_power,
            upkeep_power: sc.energy.pi * adults,
        })
    }

    /// Today's market without the nectar-only fallback the simulation uses.
    pub fn quote(&self) -> Result<Quote, SimError> {
        let m = self.morning()?;
        let ratio = classify_regime(
            &self.state,
            &self.scenario.energy,
            self.r_target,
            self.scenario.market.hysteresis,
        );
        let offer = self.offer(self.day);
        let base_need = m.upkeep_power + m.heating_power;
        Ok(Quote {
            day: self.day,
            ratio,
            budget: m.foragers,
            base_need,
            solution: self.try_solve(ratio.regime, &offer, m.foragers, base_need),
        })
    }

    /// Replaces the allocation a balanced day carries over.
    pub fn set_previous(&mut self, solution: Option<ExchangeSolution>) {
        self.previous = solution;
    }

    /// Fits an allocation to today's foragers and blooming resources.
    fn fit(
        solution: &ExchangeSolution,
        offer: &Offer,
        budget: f64,
    ) -> (AllocationPlan, AllocationPlan) {
        let keep = |plan: &AllocationPlan, ids: &[ResourceId]| -> Vec<Assignment> {
            plan.assignments
                .iter()
                .filter(|a| ids.contains(&a.id))
                .cloned()
                .collect()
        };
        let nectar_ids: Vec<ResourceId> = offer.nectar.iter().map(|n| n.id).collect();
        let pollen_ids: Vec<ResourceId> = offer.pollen.iter().map(|l| l.id).collect();
        let mut nectar = keep(&solution.nectar, &nectar_ids);
        let mut pollen = keep(&solution.pollen, &pollen_ids);
        let assigned = exact_sum(nectar.iter().chain(&pollen).map(|a| a.foragers));
        if assigned > budget && assigned > 0.0 {
            let scale = budget / assigned;
            for a in nectar.iter_mut().chain(pollen.iter_mut()) {
                a.foragers *= scale;
            }
        }
        let placed = exact_sum(nectar.iter().chain(&pollen).map(|a| a.foragers));
        (
            AllocationPlan {
                assignments: nectar,
                reserve: 0.0,
            },
            AllocationPlan {
                assignments: pollen,
                reserve: (budget - placed).max(0.0),
            },
        )
    }

    fn resource(&self, id: ResourceId) -> &FloralResource {
        self.scenario
            .resources
            .iter()
            .find(|r| r.id == id)
            .expect("allocations only name known resources")
    }

    /// Deaths per forager over `seconds` of foraging on `id`, as a
    /// probability.
    fn predation_probability(
        &self,
        id: ResourceId,
        tau: f64,
        seconds: f64,
    ) -> Result<f64, SimError> {
        let sc = self.scenario;
        let res = self.resource(id);
        let d = sc.distance(res).unwrap_or(0.0);
        let cycle = trip_cycle(res, d, &sc.foraging);
        let flight = predation_flight_rate(tau, &sc.energy, &sc.foraging, &sc.predation)
            .map_err(|e| MarketError::InvalidInput(e.to_string()))?;
        let site = predation_foraging_rate(res, tau, &sc.energy, &sc.foraging, &sc.predation)
            .map_err(|e| MarketError::InvalidInput(e.to_string()))?;
        let rate = (flight * cycle.t_flight + site * cycle.t_foraging) / cycle.total;
        Ok((rate * seconds).clamp(0.0, 1.0))
    }

    /// Runs one day. On starvation nothing is committed and the shortfall is
    /// returned.
    pub fn step(&mut self) -> Result<Result<DailyReport, Starvation>, SimError> {
        let sc = self.scenario;
        let coeffs = &sc.energy;
        let day = self.day;
        let Morning {
            weather: w,
            foragers,
            nurses,
            heating_model,
            heating_power,
            upkeep_power,
        } = self.morning()?;
        let seconds = w.foraging_seconds();
        let pop = &self.state.population;
        let lifespan = pop.lifespan();
        let forager_task = sc.tasks.forager_index();

        // (1)-(2) regime and prices
        let ratio = classify_regime(&self.state, coeffs, self.r_target, sc.market.hysteresis);
        let offer = self.offer(day);
        let solution = self.solve(ratio.regime, &offer, foragers, upkeep_power + heating_power);
        let (nectar_plan, pollen_plan) = Self::fit(&solution, &offer, foragers);

        // (3) income
        let nectar_rate =
            |id: ResourceId| offer.nectar.iter().find(|n| n.id == id).expect("fitted");
        let pollen_line =
            |id: ResourceId| offer.pollen.iter().find(|l| l.id == id).expect("fitted");
        let nectar_power = exact_sum(
            nectar_plan
                .assignments
                .iter()
                .map(|a| a.foragers * nectar_rate(a.id).efficiency),
        );
        let pollen_flux = exact_sum(
            pollen_plan
                .assignments
                .iter()
                .map(|a| a.foragers * pollen_line(a.id).income_per_bee(&sc.foraging)),
        );
        let fetch_power = exact_sum(
            pollen_plan
                .assignments
                .iter()
                .map(|a| a.foragers * pollen_line(a.id).cost()),
        );
        let nectar_gain = nectar_power * seconds;
        let pollen_fetch = fetch_power * seconds;
        let pollen_income = pollen_flux * seconds;

        // (4) predation on the forager cohort
        let tau = solution.tau.unwrap_or(0.0);
        let mut predation_expected = ExactSum::new();
        for a in nectar_plan
            .assignments
            .iter()
            .chain(&pollen_plan.assignments)
        {
            if a.foragers > 0.0 && seconds > 0.0 {
                predation_expected
                    .add(a.foragers * self.predation_probability(a.id, tau, seconds)?);
            }
        }
        let kill = if foragers > 0.0 {
            (predation_expected.value() / foragers).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut population = pop.clone();
        let mut predation_deaths = ExactSum::new();
        if kill > 0.0 {
            if let Some(window) = sc.tasks.window(forager_task, lifespan)? {
                for age in window {
                    let (kept, lost) = split_exact(population.counts[age], 1.0 - kill);
                    population.counts[age] = kept;
                    predation_deaths.add(lost);
                }
            }
        }
        let predation_deaths = predation_deaths.value();

        // (7) laying, feeding and emergence
        let eggs = if w.winter {
            0.0
        } else {
            sc.laying.queen_rate.min(sc.laying.nurse_factor * nurses)
        };
        let mut brood = self.state.brood.clone();
        let emerged = brood.pop().unwrap_or(0.0);
        brood.insert(0, eggs);
        let brood_days = brood.len() as f64;
        let rearing = exact_sum(brood.iter().copied());
        let feed_energy = rearing * coeffs.alpha / brood_days;
        let feed_pollen = rearing * coeffs.alpha_pollen / brood_days;

        // (8) ageing with natural mortality
        let transition = advance_day_tracked(&population, &sc.survival, emerged)?;
        let natural_deaths = transition.deaths();
        let deaths = predation_deaths + natural_deaths;

        // (5)-(6) energy fluxes
        let upkeep = upkeep_power * SECONDS_PER_DAY;
        let heating = heating_power * SECONDS_PER_DAY;
        let mortality_loss = coeffs.alpha * deaths;
        let pollen_mortality = coeffs.alpha_pollen * deaths;

        let honey = self.state.honey
            + (nectar_gain - pollen_fetch - upkeep - heating - feed_energy) / coeffs.mu;
        if honey < 0.0 {
            return Ok(Err(Starvation {
                day,
                stock: Stock::Honey,
                shortfall: -honey,
            }));
        }
        let pollen = self.state.pollen + pollen_income - feed_pollen;
        if pollen < 0.0 {
            return Ok(Err(Starvation {
                day,
                stock: Stock::Pollen,
                shortfall: -pollen,
            }));
        }

        // commit
        let mut energy = self.energy;
        let nectar_gain = book(&mut energy, nectar_gain);
        let pollen_fetch = 0.0 - book(&mut energy, -pollen_fetch);
        let mortality_loss = 0.0 - book(&mut energy, -mortality_loss);
        let upkeep = 0.0 - book(&mut energy, -upkeep);
        let heating = 0.0 - book(&mut energy, -heating);
        let mut pollen_total = self.pollen_total;
        let pollen_income = book(&mut pollen_total, pollen_income);
        let pollen_mortality = 0.0 - book(&mut pollen_total, -pollen_mortality);

        let (mut brood_energy, mut brood_pollen) =
            (self.state.brood_energy, self.state.brood_pollen);
        brood_energy += feed_energy - coeffs.alpha * emerged;
        brood_pollen += feed_pollen - coeffs.alpha_pollen * emerged;
        if rearing == 0.0 {
            // rounding leftovers of an emptied nest belong to the drift
            brood_energy = 0.0;
            brood_pollen = 0.0;
        }

        self.state = ColonyState {
            honey,
            pollen,
            comb: self.state.comb,
            population: transition.population,
            brood,
            brood_energy: brood_energy.max(0.0),
            brood_pollen: brood_pollen.max(0.0),
        };
        self.energy = energy;
        self.pollen_total = pollen_total;
        self.day += 1;

        let report = DailyReport {
            day,
            regime: ratio.regime,
            case: solution.case,
            tau: solution.tau,
            eta_cut: solution.eta_cut,
            t_out: w.t_out,
            foraging_hours: w.foraging_hours,
            winter: w.winter,
            heating_model,
            foragers,
            nectar_foragers: nectar_plan.assigned(),
            pollen_foragers: pollen_plan.assigned(),
            reserve_foragers: pollen_plan.reserve,
            nectar_gain,
            pollen_fetch,
            mortality_loss,
            upkeep,
            heating,
            energy,
            energy_drift: energy - total_energy(&self.state, coeffs),
            pollen_income,
            pollen_mortality,
            pollen_total,
            pollen_drift: pollen_total - total_pollen(&self.state, coeffs),
            deaths_natural: natural_deaths,
            deaths_predation: predation_deaths,
            eggs,
            emerged,
            population: self.state.population.total(),
            larvae: self.state.larvae(),
            honey: self.state.honey,
            pollen: self.state.pollen,
            flags: solution.flags.join("; "),
        };
        self.previous = Some(solution);
        Ok(Ok(report))
    }
}

/// One day from `state` with no earlier allocation to freeze.
pub fn step_day(
    state: &ColonyState,
    scenario: &Scenario,
    day: usize,
) -> Result<Result<(ColonyState, DailyReport), Starvation>, SimError> {
    let mut sim = Simulation::from_state(scenario, state.clone(), day)?;
    Ok(sim.step()?.map(|r| (sim.state.clone(), r)))
}

pub fn run(scenario: &Scenario) -> Result<RunOutcome, SimError> {
    let mut sim = Simulation::new(scenario)?;
    let mut reports = Vec::with_capacity(scenario.horizon);
    let mut halt = None;
    for _ in 0..scenario.horizon {
        match sim.step()? {
            Ok(r) => reports.push(r),
            Err(s) => {
                log::info!(
                    "{}: starved of {:?} on day {}",
                    scenario.name,
                    s.stock,
                    s.day
                );
                halt = Some(s);
                break;
            }
        }
    }
    Ok(RunOutcome {
        reports,
        halt,
        initial_energy: total_energy(&scenario.initial, &scenario.energy),
        initial_pollen: total_pollen(&scenario.initial, &scenario.energy),
        r_target: sim.r_target,
        final_state: sim.state.clone(),
        final_solution: sim.previous.clone(),
    })
}

/// Independent scenarios, one per task.
pub fn run_batch(scenarios: &[Scenario], exec: Execution) -> Vec<Result<RunOutcome, SimError>> {
    par::map(exec, scenarios, run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_runs_its_season() {
        let s = Scenario::builtin();
        let out = run(&s).unwrap();
        assert!(out.completed(), "{:?}", out.halt);
        assert_eq!(out.reports.len(), s.horizon);
    }

    #[test]
    fn winter_check_cases() {
        let s = Scenario::builtin();
        let state = s.initial.clone();
        let empty = WeatherSeries::default();
        let c = winter_survival_check(&state, &empty, &s.energy, &s.thermal, 0.0);
        assert!(c.survives && c.margin_days.is_infinite());

        let winter = WeatherSeries {
            days: vec![
                WeatherDay {
                    t_out: 0.0,
                    foraging_hours: 0.0,
                    winter: true
                };
                10
            ],
        };
        let c = winter_survival_check(&state, &winter, &s.energy, &s.thermal, 0.0);
        let mut exact = state.clone();
        exact.honey = c.need;
        let edge = winter_survival_check(&exact, &winter, &s.energy, &s.thermal, 0.0);
        assert!(edge.survives);
        assert_eq!(edge.margin_days, 0.0);
    }
}
