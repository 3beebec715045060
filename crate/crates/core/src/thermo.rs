//! Hive heating: per-bee active heating while brood is present, and the
//! stationary spherical winter cluster.
//!
//! The cluster works in temperature-normalised units: conductivity is folded
//! into the coefficients, so source densities come out in K/m².

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThermoError {
    #[error("radius {r} outside the cluster [0, {radius}]")]
    OutsideCluster { r: f64, radius: f64 },
    #[error(
        "source density has a removable singularity at the core for nu = {nu}; limit is {limit}"
    )]
    RemovableSingularity { nu: u32, limit: f64 },
    #[error("local temperature {t_local} is not below the target {t_target}")]
    AtOrAboveTarget { t_local: f64, t_target: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalParams {
    /// Per-bee heating coefficient (W/K).
    pub theta: f64,
    /// Cluster coefficient (W/(K·bee^(1/3))).
    pub kappa: f64,
    /// Cluster profile exponent.
    pub nu: u32,
    /// Brood temperature (°C).
    pub t_brood: f64,
    /// Minimal core temperature of the winter cluster (°C).
    pub t_center_min: f64,
    /// Temperature currently being held (°C).
    pub t_target: f64,
    /// Cluster radius per cube root of bee count (m).
    pub r_bee: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            theta: 1.0e-3,
            kappa: 0.01,
            nu: 1,
            t_brood: 35.5,
            t_center_min: 20.0,
            t_target: 35.5,
            r_bee: 0.004,
        }
    }
}

impl ThermalParams {
    pub fn with_target(&self, t_target: f64) -> Self {
        Self {
            t_target,
            ..self.clone()
        }
    }

    /// Cluster radius `R = r_bee·N^(1/3)`.
    pub fn cluster_radius(&self, n_bees: f64) -> f64 {
        self.r_bee * n_bees.max(0.0).cbrt()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.theta > 0.0) {
            v.push(format!("thermal.theta must be > 0, got {}", self.theta));
        }
        if !(self.kappa > 0.0) {
            v.push(format!("thermal.kappa must be > 0, got {}", self.kappa));
        }
        if self.nu < 1 {
            v.push("thermal.nu must be >= 1".to_string());
        }
        if !(self.r_bee > 0.0) {
            v.push(format!("thermal.r_bee must be > 0, got {}", self.r_bee));
        }
        v
    }
}

/// `h = θ·N_h·|T_target − T_out|`.
pub fn active_heating_power(n_heaters: f64, t_out: f64, p: &ThermalParams) -> f64 {
    p.theta * n_heaters.max(0.0) * (p.t_target - t_out).abs()
}

fn check_radius(r: f64, radius: f64) -> Result<(), ThermoError> {
    if (0.0..=radius).contains(&r) {
        Ok(())
    } else {
        Err(ThermoError::OutsideCluster { r, radius })
    }
}

/// Stationary profile `T(r) = T_target − (T_target − T_out)(r/R)^{2ν}`.
pub fn cluster_temperature(
    r: f64,
    cluster_radius: f64,
    t_out: f64,
    p: &ThermalParams,
) -> Result<f64, ThermoError> {
    check_radius(r, cluster_radius)?;
    let x = r / cluster_radius;
    Ok(p.t_target - (p.t_target - t_out) * x.powi(2 * p.nu as i32))
}

/// Radial derivative of [`cluster_temperature`].
pub fn cluster_temperature_gradient(
    r: f64,
    cluster_radius: f64,
    t_out: f64,
    p: &ThermalParams,
) -> Result<f64, ThermoError> {
    check_radius(r, cluster_radius)?;
    let two_nu = 2 * p.nu as i32;
    Ok(-(p.t_target - t_out) * two_nu as f64 * r.powi(two_nu - 1) / cluster_radius.powi(two_nu))
}

/// Heat source holding the profile stationary:
/// `Q(r) = 2ν(2ν+1)·ΔT·r^{2ν−2}/R^{2ν}`, the negated spherical Laplacian of
/// `T(r)`.
pub fn cluster_source_density(
    r: f64,
    cluster_radius: f64,
    t_out: f64,
    p: &ThermalParams,
) -> Result<f64, ThermoError> {
    check_radius(r, cluster_radius)?;
    if r == 0.0 && p.nu > 1 {
        return Err(ThermoError::RemovableSingularity {
            nu: p.nu,
            limit: 0.0,
        });
    }
    let two_nu = 2 * p.nu as i32;
    let dt = p.t_target - t_out;
    Ok(two_nu as f64 * (two_nu + 1) as f64 * dt * r.powi(two_nu - 2) / cluster_radius.powi(two_nu))
}

/// Position-free source law a bee can evaluate from local information:
/// `Q = ((2ν+1)/(2ν))·‖∇T‖²/(T_target − T)`.
///
/// Published with the denominator `T_target − T` so that the source is
/// non-negative on the profile it generates.
pub fn local_source_from_gradient(
    grad_norm: f64,
    t_local: f64,
    p: &ThermalParams,
) -> Result<f64, ThermoError> {
    if !(t_local < p.t_target) {
        return Err(ThermoError::AtOrAboveTarget {
            t_local,
            t_target: p.t_target,
        });
    }
    let two_nu = 2.0 * p.nu as f64;
    Ok((two_nu + 1.0) / two_nu * grad_norm * grad_norm / (p.t_target - t_local))
}

/// Whole-cluster power `h = 𝒦·N^{1/3}·(T_target − T_out)`; zero when the
/// outside is already at or above the target.
pub fn cluster_heating_power(n_bees: f64, t_out: f64, p: &ThermalParams) -> f64 {
    let gap = p.t_target - t_out;
    if gap <= 0.0 {
        return 0.0;
    }
    p.kappa * n_bees.max(0.0).cbrt() * gap
}
