//! Forager head-counts, power gain and efficiency per resource, and the
//! predation hazards that turn extra flight and site risk into deaths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demography::EnergyCoefficients;
use crate::flora::{
    critical_density, mean_interflower_distance, FloralResource, ForagingParams, ResourceId,
};
use crate::numeric::ExactSum;

#[derive(Debug, Error, PartialEq)]
pub enum ForagingError {
    #[error("local foraging range {local} m exceeds d_max = {d_max} m")]
    LocalRangeTooLong { local: f64, d_max: f64 },
    #[error(
        "local critical density {local} is below the resource's critical density {theoretical}"
    )]
    LocalDensityTooLow { local: f64, theoretical: f64 },
    #[error("forager career {forager} days exceeds average lifespan {average} days")]
    CareerTooLong { forager: f64, average: f64 },
}

/// Duration of one round trip between hive and patch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TripCycle {
    pub t_hive: f64,
    /// `2d/V`.
    pub t_flight: f64,
    /// `m_f·(β_f + k_n/(v_hop·ρ_f^{1/n}))`.
    pub t_foraging: f64,
    pub total: f64,
}

pub fn trip_cycle(res: &FloralResource, d: f64, p: &ForagingParams) -> TripCycle {
    let t_hive = p.hive_time;
    let t_flight = 2.0 * d / p.cruise_speed;
    let hop = mean_interflower_distance(res.density, res.dimension, p) / p.hop_speed;
    let t_foraging = res.flowers_per_trip * (res.visit_time + hop);
    TripCycle {
        t_hive,
        t_flight,
        t_foraging,
        total: t_hive + t_flight + t_foraging,
    }
}

/// Optimal number of foragers on a patch: `φ_f = S·ρ_f·(λ_f/q_f)·cycle`.
pub fn foragers_required(res: &FloralResource, d: f64, p: &ForagingParams) -> f64 {
    res.area * res.density * res.flow / res.quantum * trip_cycle(res, d, p).total
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gain {
    /// Power delivered to the hive (W).
    pub watts: f64,
    /// False when the quality at the hive is negative; such a resource is
    /// never allocated.
    pub useful: bool,
}

/// `μ·δM/dt = S·ρ_f·λ_f·(q₀/q_f)·𝒬_f` for a fully staffed patch.
pub fn resource_power_gain(res: &FloralResource, field_quality: f64, p: &ForagingParams) -> Gain {
    if field_quality < 0.0 {
        return Gain {
            watts: 0.0,
            useful: false,
        };
    }
    Gain {
        watts: res.area * res.density * res.flow * (p.q0 / res.quantum) * field_quality,
        useful: true,
    }
}

/// Power one forager delivers, `η_f = q₀·𝒬_f / cycle`.
pub fn efficiency(res: &FloralResource, d: f64, field_quality: f64, p: &ForagingParams) -> f64 {
    p.q0 * field_quality / trip_cycle(res, d, p).total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredationParams {
    /// Break-even distance once predation on the way is priced in (m).
    pub d_max_local: f64,
    /// Critical density once predation on site is priced in; `None` means
    /// no site predators (equal to each resource's own critical density).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_crit_local: Option<f64>,
    /// Average time a bee spends as a forager (days).
    pub forager_life: f64,
    /// Average total lifespan (days).
    pub average_life: f64,
}

impl Default for PredationParams {
    fn default() -> Self {
        Self {
            d_max_local: 10_000.0,
            rho_crit_local: None,
            forager_life: 14.0,
            average_life: 35.0,
        }
    }
}

impl PredationParams {
    pub fn violations(&self, p: &ForagingParams) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.d_max_local > 0.0) {
            v.push(format!(
                "predation.d_max_local must be > 0, got {}",
                self.d_max_local
            ));
        }
        if self.d_max_local > p.d_max {
            v.push(format!(
                "predation.d_max_local = {} exceeds foraging.d_max = {}",
                self.d_max_local, p.d_max
            ));
        }
        if self.forager_life > self.average_life {
            v.push(format!(
                "predation.forager_life = {} exceeds predation.average_life = {}",
                self.forager_life, self.average_life
            ));
        }
        if !(self.average_life > 0.0) {
            v.push(format!(
                "predation.average_life must be > 0, got {}",
                self.average_life
            ));
        }
        v
    }

    fn lifespan_ratio(&self) -> f64 {
        self.forager_life / (2.0 * self.average_life)
    }
}

/// Energy-equivalent loss when a forager is eaten: its own energy plus the
/// pollen it embodies, priced at `tau` and pro-rated over the remaining
/// lifespan: `α + τ·(α̃·q₀/q̃₀)·𝓛_forager/(2𝓛_average)`.
pub fn predation_cost_per_death(
    tau: f64,
    coeffs: &EnergyCoefficients,
    p: &ForagingParams,
    pred: &PredationParams,
) -> f64 {
    coeffs.alpha + tau * (coeffs.alpha_pollen * p.q0 / p.q0_pollen) * pred.lifespan_ratio()
}

/// Deaths per forager per second of flight.
pub fn predation_flight_rate(
    tau: f64,
    coeffs: &EnergyCoefficients,
    p: &ForagingParams,
    pred: &PredationParams,
) -> Result<f64, ForagingError> {
    if pred.d_max_local > p.d_max {
        return Err(ForagingError::LocalRangeTooLong {
            local: pred.d_max_local,
            d_max: p.d_max,
        });
    }
    let extra_cost_per_metre = p.q0 * (1.0 / pred.d_max_local - 1.0 / p.d_max);
    Ok(p.cruise_speed * extra_cost_per_metre / predation_cost_per_death(tau, coeffs, p, pred))
}

/// Deaths per forager per second on the foraging site of `res`.
pub fn predation_foraging_rate(
    res: &FloralResource,
    tau: f64,
    coeffs: &EnergyCoefficients,
    p: &ForagingParams,
    pred: &PredationParams,
) -> Result<f64, ForagingError> {
    let n = res.dimension;
    let rho_crit = critical_density(res, p);
    let local = pred.rho_crit_local.unwrap_or(rho_crit);
    if local < rho_crit {
        return Err(ForagingError::LocalDensityTooLow {
            local,
            theoretical: rho_crit,
        });
    }
    let k = p.spacing(n);
    let front = 1.0 / (1.0 / p.hop_speed + res.visit_time * n.root(res.density) / k);
    let site_cost = p.q0 * (n.root(local) - n.root(rho_crit));
    Ok(front * site_cost / (k * predation_cost_per_death(tau, coeffs, p, pred)))
}

/// Bees assigned to one resource.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: ResourceId,
    pub foragers: f64,
    /// Optimal head-count for the patch; `foragers` never exceeds it.
    pub capacity: f64,
}

/// Forager assignment over a set of resources plus the unassigned remainder.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub assignments: Vec<Assignment>,
    pub reserve: f64,
}

impl AllocationPlan {
    pub fn assigned(&self) -> f64 {
        self.assignments
            .iter()
            .map(|a| a.foragers)
            .collect::<ExactSum>()
            .value()
    }

    pub fn foragers_on(&self, id: ResourceId) -> f64 {
        self.assignments
            .iter()
            .filter(|a| a.id == id)
            .map(|a| a.foragers)
            .sum()
    }

    /// Ids of resources that received at least one forager.
    pub fn visited(&self) -> impl Iterator<Item = ResourceId> + '_ {
        self.assignments
            .iter()
            .filter(|a| a.foragers > 0.0)
            .map(|a| a.id)
    }
}

/// A resource as seen by a greedy filler: capacity in bees and output per
/// bee (W, g/s, or whatever the caller is filling towards).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub id: ResourceId,
    pub capacity: f64,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FillTarget {
    /// Place exactly this many bees (or all capacity, if less).
    Bees(f64),
    /// Place bees until their summed output reaches this amount.
    Output(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fill {
    /// One entry per candidate, in the candidates' order.
    pub assignments: Vec<Assignment>,
    pub bees: f64,
    pub output: f64,
    /// Whether the target was met.
    pub met: bool,
}

/// Fills `ranked` front to back; the last resource touched may be partially
/// staffed.
pub fn greedy_fill(ranked: &[Candidate], target: FillTarget) -> Fill {
    let mut bees = ExactSum::new();
    let mut output = ExactSum::new();
    let mut assignments = Vec::with_capacity(ranked.len());
    let mut met = match target {
        FillTarget::Bees(b) => b <= 0.0,
        FillTarget::Output(o) => o <= 0.0,
    };
    for c in ranked {
        let take = if met {
            0.0
        } else {
            match target {
                FillTarget::Bees(b) => (b - bees.value()).min(c.capacity),
                FillTarget::Output(o) if c.rate > 0.0 => {
                    ((o - output.value()) / c.rate).min(c.capacity)
                }
                FillTarget::Output(_) => 0.0,
            }
            .max(0.0)
        };
        if take > 0.0 {
            bees.add(take);
            output.add(take * c.rate);
            met = match target {
                FillTarget::Bees(b) => take < c.capacity || bees.value() >= b,
                FillTarget::Output(o) => take < c.capacity || output.value() >= o,
            };
        }
        assignments.push(Assignment {
            id: c.id,
            foragers: take,
            capacity: c.capacity,
        });
    }
    Fill {
        assignments,
        bees: bees.value(),
        output: output.value(),
        met,
    }
}
