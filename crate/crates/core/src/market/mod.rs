//! The pollen/honey exchange rate.
//!
//! A colony compares its honey/pollen ratio with the ratio it needs to
//! overwinter and, depending on which side it falls, prices pollen in honey
//! (`τ`) so that the marginal pollen forager is worth as much as the
//! marginal nectar forager. Pollen quality and efficiency are affine in `τ`;
//! the capacity-weighted marginal pollen efficiency is the piecewise-affine
//! [`CutFunction`]. The three solver paths live in [`solve`].

mod cut;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demography::{ColonyState, EnergyCoefficients};
use crate::flora::{hop_cost, FloralResource, ForagingParams, ResourceId, ResourceKind};
use crate::foraging::{efficiency, foragers_required, trip_cycle};
use crate::numeric::ExactSum;
use crate::sim::WeatherSeries;
use crate::thermo::{cluster_heating_power, ThermalParams};

pub use cut::{build_eta_cut, CutFunction, CutSegment};
pub use solve::{
    nectar_only, solve_case_a, solve_case_b, solve_case_b_scarce, CaseB, ExchangeSolution, Metric,
    SolveCase, SolverSettings,
};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MarketError {
    #[error("pollen resources can supply at most {available} g/s, below the minimal income {required} g/s")]
    PollenIncomeInfeasible { available: f64, required: f64 },
    #[error(
        "meeting the minimal pollen income needs {needed} foragers but only {budget} are available"
    )]
    ForagerBudgetInfeasible { needed: f64, budget: f64 },
    #[error("nectar resources can supply at most {available} W, below the need {required} W")]
    NectarNeedInfeasible { available: f64, required: f64 },
    #[error("no nectar resource has positive quality")]
    NoUsefulNectar,
    #[error("no pollen resources")]
    NoPollenResources,
    #[error("no foragers left for pollen after meeting the nectar need")]
    NoForagersForPollen,
    #[error("pollen capacity never reaches demand (t0 = ∞); use the scarce-resource path")]
    ScarceMarket,
    #[error("winter colony size must be positive")]
    EmptyWinterColony,
    #[error("invalid market input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, MarketError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Not enough honey relative to pollen.
    Deficit,
    /// Not enough pollen relative to honey.
    Surplus,
    Balanced,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Deficit => "deficit",
            Regime::Surplus => "surplus",
            Regime::Balanced => "balanced",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioState {
    /// Honey energy per gram of stored pollen (J/g); `None` without pollen.
    pub r_hive: Option<f64>,
    pub r_target: f64,
    pub regime: Regime,
}

/// Places the hive in one of the three regimes, with a relative hysteresis
/// band `δ` around the target. No stored pollen counts as a deficit.
pub fn classify_regime(
    state: &ColonyState,
    coeffs: &EnergyCoefficients,
    r_target: f64,
    hysteresis: f64,
) -> RatioState {
    if !(state.pollen > 0.0) {
        return RatioState {
            r_hive: None,
            r_target,
            regime: Regime::Deficit,
        };
    }
    let r_hive = coeffs.mu * state.honey / state.pollen;
    let regime = if r_hive < r_target * (1.0 - hysteresis) {
        Regime::Deficit
    } else if r_hive > r_target * (1.0 + hysteresis) {
        Regime::Surplus
    } else {
        Regime::Balanced
    };
    RatioState {
        r_hive: Some(r_hive),
        r_target,
        regime,
    }
}

/// Honey/pollen ratio to enter winter with: the per-bee ratio plus the
/// winter cluster's heating, integrated day by day, per gram of pollen in the
/// winter colony.
pub fn target_ratio(
    per_bee_honey: f64,
    per_bee_pollen: f64,
    winter: &WeatherSeries,
    n_winter: f64,
    p: &ThermalParams,
) -> Result<f64> {
    if !(n_winter > 0.0) {
        return Err(MarketError::EmptyWinterColony);
    }
    let heating: f64 = winter
        .days
        .iter()
        .map(|d| cluster_heating_power(n_winter, d.t_out, p) * SECONDS_PER_DAY)
        .collect::<ExactSum>()
        .value();
    Ok(per_bee_honey / per_bee_pollen + heating / (n_winter * per_bee_pollen))
}

/// `Q̃_f(τ) = τ·q̃_f/q̃₀ − ξ·(d/d_max + (ρ_crit/ρ_f)^{1/n})`.
pub fn pollen_quality(
    res: &FloralResource,
    d: f64,
    tau: f64,
    xi: f64,
    p: &ForagingParams,
) -> Result<f64> {
    if res.kind != ResourceKind::Pollen {
        return Err(MarketError::InvalidInput(format!(
            "resource {} offers nectar",
            res.id
        )));
    }
    Ok(tau * res.quantum / p.q0_pollen - pollen_cost_quality(res, d, xi, p))
}

fn pollen_cost_quality(res: &FloralResource, d: f64, xi: f64, p: &ForagingParams) -> f64 {
    xi * (d / p.d_max + hop_cost(res, p))
}

/// Pollen efficiency `η̃_f(τ) = slope·τ + intercept` (W/bee) with the patch's
/// optimal head-count as capacity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffineEfficiency {
    pub id: ResourceId,
    /// `q₀·(q̃_f/q̃₀)/cycle`.
    pub slope: f64,
    /// `−q₀·ξ·(d/d_max + (ρ_crit/ρ_f)^{1/n})/cycle`.
    pub intercept: f64,
    pub capacity: f64,
    /// Trip cycle length (s).
    pub cycle: f64,
}

impl AffineEfficiency {
    pub fn value(&self, tau: f64) -> f64 {
        self.slope * tau + self.intercept
    }

    /// `η̃_{f,costless}(τ)`.
    pub fn costless(&self, tau: f64) -> f64 {
        self.slope * tau
    }

    /// `η̃_{f,cost}` as a positive power per bee.
    pub fn cost(&self) -> f64 {
        -self.intercept
    }

    /// `τ` at which the resource breaks even.
    pub fn zero_crossing(&self) -> f64 {
        -self.intercept / self.slope
    }

    /// Pollen brought in per forager (g/s).
    pub fn income_per_bee(&self, p: &ForagingParams) -> f64 {
        self.slope * p.q0_pollen / p.q0
    }

    /// The same line in quality units, `Q̃_f(τ) = η̃_f(τ)·cycle/q₀`.
    pub fn quality_space(&self, p: &ForagingParams) -> AffineEfficiency {
        let k = self.cycle / p.q0;
        AffineEfficiency {
            slope: self.slope * k,
            intercept: self.intercept * k,
            ..*self
        }
    }
}

pub fn pollen_affine(
    res: &FloralResource,
    d: f64,
    xi: f64,
    p: &ForagingParams,
) -> Result<AffineEfficiency> {
    if res.kind != ResourceKind::Pollen {
        return Err(MarketError::InvalidInput(format!(
            "resource {} offers nectar",
            res.id
        )));
    }
    let cycle = trip_cycle(res, d, p).total;
    Ok(AffineEfficiency {
        id: res.id,
        slope: p.q0 * (res.quantum / p.q0_pollen) / cycle,
        intercept: -p.q0 * pollen_cost_quality(res, d, xi, p) / cycle,
        capacity: foragers_required(res, d, p),
        cycle,
    })
}

/// A nectar resource as the allocation sees it from the hive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NectarOption {
    pub id: ResourceId,
    /// `𝒬_f` at the hive.
    pub quality: f64,
    /// `η_f` (W/bee).
    pub efficiency: f64,
    pub capacity: f64,
}

impl NectarOption {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Efficiency => self.efficiency,
            Metric::Quality => self.quality,
        }
    }
}

pub fn nectar_option(
    res: &FloralResource,
    d: f64,
    field_quality: f64,
    p: &ForagingParams,
) -> NectarOption {
    NectarOption {
        id: res.id,
        quality: field_quality,
        efficiency: efficiency(res, d, field_quality, p),
        capacity: foragers_required(res, d, p),
    }
}
