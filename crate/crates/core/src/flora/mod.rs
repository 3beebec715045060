//! Floral resources and the nectar quality they offer a hive.
//!
//! A resource's quality at distance `d` is
//! `q_f/q₀ − d/d_max − (ρ_crit/ρ_f)^{1/n}`: the per-trip quantum relative to
//! the benchmark flower, minus the flight cost, minus the hopping cost
//! between flowers. Over a landscape the best such value from any patch
//! defines the quality field; see [`field`].

mod edt;
pub mod field;
pub mod raster;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edt::squared_distance_transform;
pub use field::{
    eikonal_residual, quality_field, quality_field_with, resource_field, EikonalReport,
    QualityField,
};
pub use raster::{Landscape, Raster};

pub type ResourceId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum FloraError {
    #[error("no nectar resources in the landscape")]
    EmptyResources,
    #[error("resource {0} offers pollen; its quality depends on the exchange rate")]
    PollenResource(ResourceId),
    #[error("resource {0} offers nectar, not pollen")]
    NectarResource(ResourceId),
    #[error("cell size {cell_size} m is coarser than d_max/100 = {limit} m")]
    ResolutionTooCoarse { cell_size: f64, limit: f64 },
    #[error("raster references resource id {0} which is not in the resource table")]
    UnknownResource(ResourceId),
    #[error("resource {0} does not appear in the raster")]
    MissingFromRaster(ResourceId),
    #[error("resource {0} has neither a raster footprint nor a distance")]
    NoDistance(ResourceId),
    #[error("raster: {0}")]
    Raster(String),
    #[error("hive cell ({row}, {col}) outside the {rows}×{cols} raster")]
    HiveOutside {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

pub type Result<T> = std::result::Result<T, FloraError>;

/// Site-wide foraging constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForagingParams {
    /// Net energy per trip to the benchmark nectar flower (J).
    pub q0: f64,
    /// Pollen load per trip to the reference pollen flower (g).
    pub q0_pollen: f64,
    /// Distance at which a benchmark trip breaks even (m).
    pub d_max: f64,
    /// Long-distance flight speed (m/s).
    pub cruise_speed: f64,
    /// Flower-to-flower speed (m/s).
    pub hop_speed: f64,
    /// Spacing constant for flowers on a surface.
    pub k2: f64,
    /// Spacing constant for flowers in a volume (bushes, trees).
    pub k3: f64,
    /// Time spent in the hive between trips (s).
    pub hive_time: f64,
}

impl Default for ForagingParams {
    fn default() -> Self {
        Self {
            q0: 250.0,
            q0_pollen: 0.015,
            d_max: 10_000.0,
            cruise_speed: 7.0,
            hop_speed: 1.0,
            k2: 0.5,
            k3: 0.5,
            hive_time: 600.0,
        }
    }
}

impl ForagingParams {
    /// Energy cost of flight per metre, `q₀/d_max`.
    pub fn sigma(&self) -> f64 {
        self.q0 / self.d_max
    }

    pub fn spacing(&self, n: Dimension) -> f64 {
        match n {
            Dimension::Surface => self.k2,
            Dimension::Volume => self.k3,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        [
            ("foraging.q0", self.q0),
            ("foraging.q0_pollen", self.q0_pollen),
            ("foraging.d_max", self.d_max),
            ("foraging.cruise_speed", self.cruise_speed),
            ("foraging.hop_speed", self.hop_speed),
            ("foraging.k2", self.k2),
            ("foraging.k3", self.k3),
            ("foraging.hive_time", self.hive_time),
        ]
        .into_iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(k, v)| format!("{k} must be strictly positive, got {v}"))
        .collect()
    }
}

/// Geometric dimension of a flower arrangement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dimension {
    /// A field: `n = 2`.
    #[default]
    Surface,
    /// A bush or tree: `n = 3`.
    Volume,
}

impl Dimension {
    pub fn n(self) -> u8 {
        match self {
            Dimension::Surface => 2,
            Dimension::Volume => 3,
        }
    }

    /// `x^{1/n}`.
    pub fn root(self, x: f64) -> f64 {
        match self {
            Dimension::Surface => x.sqrt(),
            Dimension::Volume => x.cbrt(),
        }
    }

    pub fn pow(self, x: f64) -> f64 {
        x.powi(self.n() as i32)
    }
}

impl TryFrom<u8> for Dimension {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        match n {
            2 => Ok(Dimension::Surface),
            3 => Ok(Dimension::Volume),
            other => Err(format!("dimension must be 2 or 3, got {other}")),
        }
    }
}

impl From<Dimension> for u8 {
    fn from(d: Dimension) -> u8 {
        d.n()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Nectar,
    Pollen,
}

/// One flower species patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloralResource {
    pub id: ResourceId,
    #[serde(default)]
    pub name: String,
    pub kind: ResourceKind,
    /// Per-trip quantum: net energy (J) for nectar, pollen load (g) for
    /// pollen. For pollen, `quantum / q0_pollen` is the nutritional quality
    /// relative to the reference flower.
    pub quantum: f64,
    /// Floral density (flowers/m² or flowers/m³).
    pub density: f64,
    /// Offer per flower per second, in the units of `quantum`.
    pub flow: f64,
    /// Flowers visited per trip.
    pub flowers_per_trip: f64,
    /// Time on one flower (s).
    pub visit_time: f64,
    #[serde(default)]
    pub dimension: Dimension,
    /// Patch surface (m²).
    pub area: f64,
    /// Hive-to-patch distance (m) when the resource is not on a raster.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    /// Inclusive day-of-run window in which the resource is in bloom.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloom: Option<[usize; 2]>,
}

impl FloralResource {
    pub fn is_nectar(&self) -> bool {
        self.kind == ResourceKind::Nectar
    }

    pub fn in_bloom(&self, day: usize) -> bool {
        self.bloom.is_none_or(|[a, b]| (a..=b).contains(&day))
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let id = self.id;
        if !(self.density > 0.0) {
            v.push(format!(
                "resource {id}: density must be > 0, got {}",
                self.density
            ));
        }
        if !(self.flowers_per_trip >= 1.0) {
            v.push(format!(
                "resource {id}: flowers_per_trip must be >= 1, got {}",
                self.flowers_per_trip
            ));
        }
        if !(self.area > 0.0) {
            v.push(format!(
                "resource {id}: area must be > 0, got {}",
                self.area
            ));
        }
        if !(self.quantum > 0.0) {
            v.push(format!(
                "resource {id}: quantum must be > 0, got {}",
                self.quantum
            ));
        }
        if !(self.flow >= 0.0) {
            v.push(format!(
                "resource {id}: flow must be >= 0, got {}",
                self.flow
            ));
        }
        if !(self.visit_time >= 0.0) {
            v.push(format!(
                "resource {id}: visit_time must be >= 0, got {}",
                self.visit_time
            ));
        }
        if let Some(d) = self.distance {
            if !(d >= 0.0) {
                v.push(format!("resource {id}: distance must be >= 0, got {d}"));
            }
        }
        v
    }
}

/// Mean distance between neighbouring flowers, `k_n/ρ^{1/n}`.
pub fn mean_interflower_distance(rho: f64, n: Dimension, p: &ForagingParams) -> f64 {
    p.spacing(n) / n.root(rho)
}

/// Density at which hopping costs as much as a flight to `d_max`:
/// `ρ_crit = (k_n·m_f·v_hop/(d_max·V))^n`.
pub fn critical_density(res: &FloralResource, p: &ForagingParams) -> f64 {
    let n = res.dimension;
    n.pow(p.spacing(n) * res.flowers_per_trip * p.hop_speed / (p.d_max * p.cruise_speed))
}

/// Hopping cost in units of `q₀`, `(ρ_crit/ρ_f)^{1/n}`.
pub fn hop_cost(res: &FloralResource, p: &ForagingParams) -> f64 {
    res.dimension.root(critical_density(res, p) / res.density)
}

/// Quality of a nectar resource at zero distance. Negative values mean the
/// patch is not worth visiting even next to the hive.
pub fn intrinsic_quality(res: &FloralResource, p: &ForagingParams) -> Result<f64> {
    if !res.is_nectar() {
        return Err(FloraError::PollenResource(res.id));
    }
    Ok(res.quantum / p.q0 - hop_cost(res, p))
}

pub fn quality_at_distance(res: &FloralResource, d: f64, p: &ForagingParams) -> Result<f64> {
    Ok(intrinsic_quality(res, p)? - d / p.d_max)
}
