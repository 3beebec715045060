//! Pricing pollen in honey.
//!
//! Deficit hives buy a fixed pollen income first and let the nectar margin
//! set the price ([`solve_case_a`]). Surplus hives meet a nectar need first
//! and send every other forager to pollen; the price is the fixed point of
//! "pollen cost feeds back into the nectar need" ([`CaseB`]).

use serde::Serialize;

use super::cut::{build_eta_cut, ranking};
use super::{AffineEfficiency, MarketError, NectarOption, Result};
use crate::flora::ForagingParams;
use crate::foraging::{greedy_fill, AllocationPlan, Assignment, Candidate, FillTarget};
use crate::numeric::ExactSum;

/// Ranking metric for nectar and pollen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Power per forager (W/bee).
    Efficiency,
    /// Dimensionless quality; used when pollen is scarce.
    Quality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveCase {
    A,
    B,
    BScarce,
    /// Balanced hive: previous allocation kept, nothing solved.
    Frozen,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Absolute tolerance on successive `τ`.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Largest `τ` the scarce path will accept.
    pub tau_max: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iter: 100,
            tau_max: 1e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ExchangeSolution {
    pub case: SolveCase,
    /// Exchange rate; `None` when no pollen is worth fetching.
    pub tau: Option<f64>,
    /// Nectar margin in the units of the ranking metric.
    pub eta_cut: f64,
    pub metric: Metric,
    pub nectar: AllocationPlan,
    /// Pollen foragers; `reserve` counts foragers left without work.
    pub pollen: AllocationPlan,
    /// Power spent fetching pollen (W).
    pub pollen_cost: f64,
    /// Nectar power the allocation was sized for (W).
    pub nectar_need: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub flags: Vec<String>,
}

impl ExchangeSolution {
    /// The same allocation relabelled as a frozen carry-over.
    pub fn frozen(&self) -> ExchangeSolution {
        ExchangeSolution {
            case: SolveCase::Frozen,
            trace: Vec::new(),
            ..self.clone()
        }
    }

    /// Allocation-free placeholder for a hive with no market yet.
    pub fn idle(foragers: f64) -> ExchangeSolution {
        ExchangeSolution {
            case: SolveCase::Frozen,
            tau: None,
            eta_cut: 0.0,
            metric: Metric::Efficiency,
            nectar: AllocationPlan::default(),
            pollen: AllocationPlan {
                assignments: Vec::new(),
                reserve: foragers.max(0.0),
            },
            pollen_cost: 0.0,
            nectar_need: 0.0,
            trace: Vec::new(),
            converged: true,
            flags: Vec::new(),
        }
    }

    pub fn foragers(&self) -> f64 {
        exact(&[
            self.nectar.assigned(),
            self.pollen.assigned(),
            self.pollen.reserve,
        ])
    }
}

fn exact(values: &[f64]) -> f64 {
    values.iter().copied().collect::<ExactSum>().value()
}

fn rank_nectar(nectar: &[NectarOption], metric: Metric) -> Vec<NectarOption> {
    let mut useful: Vec<NectarOption> =
        nectar.iter().copied().filter(|n| n.quality > 0.0).collect();
    useful.sort_by(|a, b| {
        b.metric(metric)
            .total_cmp(&a.metric(metric))
            .then(a.id.cmp(&b.id))
    });
    useful
}

fn nectar_candidates(ranked: &[NectarOption]) -> Vec<Candidate> {
    ranked
        .iter()
        .map(|n| Candidate {
            id: n.id,
            capacity: n.capacity,
            rate: n.efficiency,
        })
        .collect()
}

/// Lowest metric over visited resources; with none visited, the best
/// available one is the margin.
fn nectar_margin(ranked: &[NectarOption], plan: &[Assignment], metric: Metric) -> f64 {
    ranked
        .iter()
        .zip(plan)
        .filter(|(_, a)| a.foragers > 0.0)
        .map(|(n, _)| n.metric(metric))
        .next_back()
        .unwrap_or_else(|| ranked[0].metric(metric))
}

fn plan(assignments: Vec<Assignment>, reserve: f64) -> AllocationPlan {
    AllocationPlan {
        assignments: assignments
            .into_iter()
            .filter(|a| a.foragers > 0.0)
            .collect(),
        reserve: reserve.max(0.0),
    }
}

/// Fallback when pricing fails: every forager goes to nectar, best first,
/// and `flag` records why.
pub fn nectar_only(
    case: SolveCase,
    nectar: &[NectarOption],
    budget: f64,
    flag: String,
) -> ExchangeSolution {
    let ranked = rank_nectar(nectar, Metric::Efficiency);
    let fill = greedy_fill(&nectar_candidates(&ranked), FillTarget::Bees(budget));
    let eta_cut = if ranked.is_empty() {
        0.0
    } else {
        nectar_margin(&ranked, &fill.assignments, Metric::Efficiency)
    };
    ExchangeSolution {
        case,
        tau: None,
        eta_cut,
        metric: Metric::Efficiency,
        nectar_need: fill.output,
        nectar: plan(fill.assignments, 0.0),
        pollen: plan(Vec::new(), budget - fill.bees),
        pollen_cost: 0.0,
        trace: Vec::new(),
        converged: false,
        flags: vec![flag],
    }
}

/// Deficit hive: buy `min_income` g/s of pollen with the best-yielding
/// resources, send the rest to nectar, and price `τ` so the marginal pollen
/// forager's costless efficiency covers the nectar margin plus the pooled
/// pollen cost.
pub fn solve_case_a(
    nectar: &[NectarOption],
    pollen: &[AffineEfficiency],
    budget: f64,
    min_income: f64,
    p: &ForagingParams,
) -> Result<ExchangeSolution> {
    if !(min_income > 0.0) {
        return Err(MarketError::InvalidInput(format!(
            "minimal pollen income must be > 0, got {min_income}"
        )));
    }
    if pollen.is_empty() {
        return Err(MarketError::NoPollenResources);
    }
    let ranked_nectar = rank_nectar(nectar, Metric::Efficiency);
    if ranked_nectar.is_empty() {
        return Err(MarketError::NoUsefulNectar);
    }

    let mut by_slope: Vec<&AffineEfficiency> = pollen.iter().collect();
    by_slope.sort_by(|a, b| b.slope.total_cmp(&a.slope).then(a.id.cmp(&b.id)));
    let candidates: Vec<Candidate> = by_slope
        .iter()
        .map(|l| Candidate {
            id: l.id,
            capacity: l.capacity,
            rate: l.income_per_bee(p),
        })
        .collect();
    let fill = greedy_fill(&candidates, FillTarget::Output(min_income));
    if !fill.met {
        let available = candidates
            .iter()
            .map(|c| c.capacity * c.rate)
            .collect::<ExactSum>()
            .value();
        return Err(MarketError::PollenIncomeInfeasible {
            available,
            required: min_income,
        });
    }
    if fill.bees > budget {
        return Err(MarketError::ForagerBudgetInfeasible {
            needed: fill.bees,
            budget,
        });
    }

    let mut weighted = ExactSum::new();
    let mut marginal = by_slope[0];
    for (line, a) in by_slope.iter().zip(&fill.assignments) {
        if a.foragers > 0.0 {
            weighted.add(a.foragers * line.cost());
            marginal = line;
        }
    }
    let pollen_cost = weighted.value();
    let pooled_cost = pollen_cost / fill.bees;

    let nectar_fill = greedy_fill(
        &nectar_candidates(&ranked_nectar),
        FillTarget::Bees(budget - fill.bees),
    );
    let eta_cut = nectar_margin(&ranked_nectar, &nectar_fill.assignments, Metric::Efficiency);
    let tau = (eta_cut + pooled_cost) / marginal.slope;
    let reserve = budget - fill.bees - nectar_fill.bees;

    Ok(ExchangeSolution {
        case: SolveCase::A,
        tau: Some(tau),
        eta_cut,
        metric: Metric::Efficiency,
        nectar_need: nectar_fill.output,
        nectar: plan(nectar_fill.assignments, 0.0),
        pollen: plan(fill.assignments, reserve),
        pollen_cost,
        trace: vec![tau],
        converged: true,
        flags: Vec::new(),
    })
}

/// Surplus-hive fixed point. Each round meets the current nectar need,
/// inverts the pollen cut at the nectar margin, and adds the resulting pollen
/// cost to the need.
#[derive(Clone, Debug)]
pub struct CaseB {
    nectar: Vec<NectarOption>,
    /// Lines in the units used for ranking and the cut.
    ranking_lines: Vec<AffineEfficiency>,
    /// The same lines in W/bee, for costs.
    power_lines: Vec<AffineEfficiency>,
    budget: f64,
    base_need: f64,
    settings: SolverSettings,
    metric: Metric,
}

/// One pass of steps (1)–(2) plus the pollen placement it implies.
#[derive(Clone, Debug)]
struct Round {
    tau: Option<f64>,
    eta_cut: f64,
    nectar: Vec<Assignment>,
    pollen_bees: f64,
}

#[derive(Clone, Debug)]
struct Placement {
    assignments: Vec<Assignment>,
    cost: f64,
}

impl CaseB {
    /// Abundant pollen: efficiencies rank both markets.
    pub fn new(
        nectar: &[NectarOption],
        pollen: &[AffineEfficiency],
        budget: f64,
        base_need: f64,
        settings: SolverSettings,
    ) -> Result<Self> {
        Self::build(
            nectar,
            pollen.to_vec(),
            pollen,
            budget,
            base_need,
            settings,
            Metric::Efficiency,
        )
    }

    /// Scarce pollen: qualities rank both markets and unemployed foragers are
    /// held in reserve.
    pub fn scarce(
        nectar: &[NectarOption],
        pollen: &[AffineEfficiency],
        budget: f64,
        base_need: f64,
        settings: SolverSettings,
        p: &ForagingParams,
    ) -> Result<Self> {
        let quality: Vec<AffineEfficiency> = pollen.iter().map(|l| l.quality_space(p)).collect();
        Self::build(
            nectar,
            quality,
            pollen,
            budget,
            base_need,
            settings,
            Metric::Quality,
        )
    }

    fn build(
        nectar: &[NectarOption],
        ranking_lines: Vec<AffineEfficiency>,
        power_lines: &[AffineEfficiency],
        budget: f64,
        base_need: f64,
        settings: SolverSettings,
        metric: Metric,
    ) -> Result<Self> {
        if !(budget > 0.0) {
            return Err(MarketError::InvalidInput(format!(
                "forager budget must be > 0, got {budget}"
            )));
        }
        if !(base_need >= 0.0) {
            return Err(MarketError::InvalidInput(format!(
                "nectar need must be >= 0, got {base_need}"
            )));
        }
        let nectar = rank_nectar(nectar, metric);
        if nectar.is_empty() {
            return Err(MarketError::NoUsefulNectar);
        }
        Ok(Self {
            nectar,
            ranking_lines,
            power_lines: power_lines.to_vec(),
            budget,
            base_need,
            settings,
            metric,
        })
    }

    fn is_scarce(&self) -> bool {
        self.metric == Metric::Quality
    }

    fn pollen_capacity(&self) -> f64 {
        self.ranking_lines
            .iter()
            .map(|l| l.capacity)
            .collect::<ExactSum>()
            .value()
    }

    fn round(&self, need: f64) -> Result<Round> {
        let fill = greedy_fill(&nectar_candidates(&self.nectar), FillTarget::Output(need));
        if !fill.met {
            return Err(MarketError::NectarNeedInfeasible {
                available: fill.output,
                required: need,
            });
        }
        if fill.bees > self.budget {
            return Err(MarketError::ForagerBudgetInfeasible {
                needed: fill.bees,
                budget: self.budget,
            });
        }
        let eta_cut = nectar_margin(&self.nectar, &fill.assignments, self.metric);
        let remaining = self.budget - fill.bees;
        let mut round = Round {
            tau: None,
            eta_cut,
            nectar: fill.assignments,
            pollen_bees: remaining,
        };
        if self.ranking_lines.is_empty() {
            if self.is_scarce() {
                return Ok(round);
            }
            return Err(MarketError::NoPollenResources);
        }
        if !(remaining > 0.0) {
            return Err(MarketError::NoForagersForPollen);
        }
        let demand = if self.is_scarce() {
            remaining.min(self.pollen_capacity())
        } else {
            remaining
        };
        if !(demand > 0.0) {
            return Ok(round);
        }
        let cut = build_eta_cut(&self.ranking_lines, demand)?;
        if !self.is_scarce() && cut.t0.is_infinite() {
            return Err(MarketError::ScarceMarket);
        }
        round.tau = cut.invert(eta_cut);
        if self.is_scarce() && round.tau.is_some_and(|t| t > self.settings.tau_max) {
            round.tau = None;
        }
        round.pollen_bees = demand;
        Ok(round)
    }

    fn place(&self, tau: f64, demand: f64) -> Placement {
        let order: Vec<usize> = ranking(&self.ranking_lines, tau)
            .into_iter()
            .filter(|&i| self.ranking_lines[i].value(tau) > 0.0)
            .collect();
        let candidates: Vec<Candidate> = order
            .iter()
            .map(|&i| Candidate {
                id: self.ranking_lines[i].id,
                capacity: self.ranking_lines[i].capacity,
                rate: 1.0,
            })
            .collect();
        let fill = greedy_fill(&candidates, FillTarget::Bees(demand));
        let cost = order
            .iter()
            .zip(&fill.assignments)
            .map(|(&i, a)| a.foragers * self.power_lines[i].cost())
            .collect::<ExactSum>()
            .value();
        Placement {
            assignments: fill.assignments,
            cost,
        }
    }

    /// Prices pollen at `tau` with `pollen_bees` foragers and runs one more
    /// round from the implied nectar need. Returns the new `τ`.
    pub fn reprice(&self, tau: f64, pollen_bees: f64) -> Result<Option<f64>> {
        let placed = self.place(tau, pollen_bees);
        Ok(self.round(self.base_need + placed.cost)?.tau)
    }

    pub fn solve(&self) -> Result<ExchangeSolution> {
        let case = if self.is_scarce() {
            SolveCase::BScarce
        } else {
            SolveCase::B
        };
        let mut need = self.base_need;
        let mut trace: Vec<f64> = Vec::new();
        let mut flags = Vec::new();
        let mut converged = false;
        let mut last: Option<(Round, Placement)> = None;
        let mut tau_out = None;

        for _ in 0..self.settings.max_iter {
            let round = self.round(need)?;
            let Some(tau) = round.tau else {
                flags
                    .push("no pollen resource is worth fetching at any admissible tau".to_string());
                return Ok(self.undefined(case, round, need, trace, flags));
            };
            trace.push(tau);
            let placed = self.place(tau, round.pollen_bees);
            let next_need = self.base_need + placed.cost;

            if let [.., prev, cur] = trace[..] {
                if (cur - prev).abs() < self.settings.tolerance {
                    converged = true;
                    tau_out = Some(0.5 * (prev + cur));
                    last = Some((round, placed));
                    break;
                }
            }
            if next_need == need {
                converged = true;
                tau_out = Some(tau);
                last = Some((round, placed));
                break;
            }
            need = next_need;
            last = Some((round, placed));
        }

        let (round, placed) =
            last.ok_or_else(|| MarketError::InvalidInput("max_iter must be >= 1".into()))?;
        let tau = match tau_out {
            Some(t) => t,
            None => {
                flags.push(format!(
                    "no convergence within {} iterations; returning the midpoint of the last bracket",
                    self.settings.max_iter
                ));
                match trace[..] {
                    [.., a, b] => 0.5 * (a + b),
                    [a] => a,
                    [] => unreachable!("a round without tau returns early"),
                }
            }
        };
        let reserve = round.pollen_bees_reserve(self.budget, &placed);
        Ok(ExchangeSolution {
            case,
            tau: Some(tau),
            eta_cut: round.eta_cut,
            metric: self.metric,
            nectar: plan(round.nectar, 0.0),
            pollen: plan(placed.assignments, reserve),
            pollen_cost: placed.cost,
            nectar_need: need,
            trace,
            converged,
            flags,
        })
    }

    fn undefined(
        &self,
        case: SolveCase,
        round: Round,
        need: f64,
        trace: Vec<f64>,
        flags: Vec<String>,
    ) -> ExchangeSolution {
        let nectar_bees = exact(&round.nectar.iter().map(|a| a.foragers).collect::<Vec<_>>());
        ExchangeSolution {
            case,
            tau: None,
            eta_cut: round.eta_cut,
            metric: self.metric,
            nectar: plan(round.nectar, 0.0),
            pollen: plan(Vec::new(), self.budget - nectar_bees),
            pollen_cost: 0.0,
            nectar_need: need,
            trace,
            converged: false,
            flags,
        }
    }
}

impl Round {
    fn pollen_bees_reserve(&self, budget: f64, placed: &Placement) -> f64 {
        let nectar = self.nectar.iter().map(|a| a.foragers);
        let pollen = placed.assignments.iter().map(|a| -a.foragers);
        let mut sum: ExactSum = nectar.map(|x| -x).chain(pollen).collect();
        sum.add(budget);
        sum.value()
    }
}

pub fn solve_case_b(
    nectar: &[NectarOption],
    pollen: &[AffineEfficiency],
    budget: f64,
    base_need: f64,
    settings: SolverSettings,
) -> Result<ExchangeSolution> {
    CaseB::new(nectar, pollen, budget, base_need, settings)?.solve()
}

pub fn solve_case_b_scarce(
    nectar: &[NectarOption],
    pollen: &[AffineEfficiency],
    budget: f64,
    base_need: f64,
    settings: SolverSettings,
    p: &ForagingParams,
) -> Result<ExchangeSolution> {
    CaseB::scarce(nectar, pollen, budget, base_need, settings, p)?.solve()
}
