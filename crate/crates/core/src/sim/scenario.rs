//! Scenario documents: JSON in, a validated [`Scenario`] out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::weather::{Seasonal, WeatherDay, WeatherSeries};
use crate::demography::{
    AgeStructure, ColonyState, EnergyCoefficients, SurvivalCurve, Task, TaskSchedule,
};
use crate::flora::{FloralResource, ForagingParams, Landscape, Raster, ResourceId};
use crate::foraging::PredationParams;
use crate::market::SolverSettings;
use crate::thermo::ThermalParams;

pub const SCHEMA_VERSION: u32 = 1;

const DEFAULT_SCENARIO: &str = include_str!("default_scenario.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("override {key:?}: {reason}")]
    Override { key: String, reason: String },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColonyConfig {
    /// Honey (g).
    pub honey: f64,
    /// Stored pollen (g).
    pub pollen: f64,
    #[serde(default)]
    pub comb: f64,
    /// Explicit age structure. Takes precedence over `adults`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<AgeStructure>,
    /// Adult females, spread over ages in proportion to the survival curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adults: Option<f64>,
    #[serde(default)]
    pub males: f64,
    /// Brood by day of development.
    #[serde(default)]
    pub brood: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SurvivalConfig {
    Constant {
        lifespan: usize,
    },
    Linear {
        lifespan: usize,
    },
    Weibull {
        lifespan: usize,
        scale: f64,
        shape: f64,
    },
    Table {
        values: Vec<f64>,
    },
    Csv {
        path: PathBuf,
    },
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        SurvivalConfig::Weibull {
            lifespan: 60,
            scale: 35.0,
            shape: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayingConfig {
    /// Queen's laying cap (eggs/day).
    pub queen_rate: f64,
    /// Larvae one nurse can rear.
    pub nurse_factor: f64,
    /// Days from egg to adult.
    pub brood_days: usize,
}

impl Default for LayingConfig {
    fn default() -> Self {
        Self {
            queen_rate: 1500.0,
            nurse_factor: 3.0,
            brood_days: 21,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    /// Relative half-width of the balanced band around the target ratio.
    pub hysteresis: f64,
    /// Aerodynamic penalty of carrying pollen.
    pub xi: f64,
    /// Pollen income a deficit hive secures first (g/s). Defaults to the
    /// pollen needed to rear a full day of eggs, spread over the day.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pollen_income: Option<f64>,
    /// Cluster size used for the target ratio. Defaults to the initial
    /// adult population.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_winter: Option<f64>,
    pub solver: SolverSettings,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            hysteresis: 0.05,
            xi: 1.0,
            min_pollen_income: None,
            n_winter: None,
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum WeatherConfig {
    Days(Vec<WeatherDay>),
    Seasonal(Seasonal),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    /// Inline id grid, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<Vec<ResourceId>>>,
    /// CSV id grid, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids_csv: Option<PathBuf>,
    /// Cell edge (m).
    pub cell_size: f64,
    /// Hive cell as `[row, col]`.
    pub hive: [usize; 2],
    #[serde(default)]
    pub origin: [f64; 2],
}

/// The JSON document as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub horizon: usize,
    /// Reserved; the simulation is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub colony: ColonyConfig,
    #[serde(default)]
    pub survival: SurvivalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<Vec<Task>>,
    #[serde(default)]
    pub energy: EnergyCoefficients,
    #[serde(default)]
    pub thermal: ThermalParams,
    #[serde(default)]
    pub foraging: ForagingParams,
    #[serde(default)]
    pub predation: PredationParams,
    #[serde(default)]
    pub laying: LayingConfig,
    #[serde(default)]
    pub market: MarketConfig,
    pub weather: WeatherConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeConfig>,
    #[serde(default)]
    pub resources: Vec<FloralResource>,
}

/// A resolved, validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub horizon: usize,
    pub seed: u64,
    pub initial: ColonyState,
    pub survival: SurvivalCurve,
    pub tasks: TaskSchedule,
    pub energy: EnergyCoefficients,
    pub thermal: ThermalParams,
    pub foraging: ForagingParams,
    pub predation: PredationParams,
    pub laying: LayingConfig,
    pub market: MarketConfig,
    /// At least `horizon` days.
    pub weather: WeatherSeries,
    pub landscape: Option<Landscape>,
    pub resources: Vec<FloralResource>,
}

/// The built-in scenario as a JSON value.
pub fn default_config() -> Value {
    serde_json::from_str(DEFAULT_SCENARIO).expect("built-in scenario is valid JSON")
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `key` (dotted; array elements by index) to `raw`, parsed as JSON
/// when possible and as a string otherwise. Missing object keys are created.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let fail = |reason: String| ConfigError::Override {
        key: key.to_string(),
        reason,
    };
    if key.is_empty() {
        return Err(fail("empty key".into()));
    }
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), parse_scalar(raw));
                    return Ok(());
                }
                map.entry(part.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| fail(format!("{part:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| fail(format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = parse_scalar(raw);
                    return Ok(());
                }
                slot
            }
            _ => return Err(fail(format!("{part:?} is below a scalar"))),
        };
    }
    unreachable!("loop returns on the last part")
}

/// Splits `key=value`.
pub fn parse_assignment(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.to_string())),
        _ => Err(ConfigError::Override {
            key: s.to_string(),
            reason: "expected key=value".into(),
        }),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl ScenarioConfig {
    pub fn from_value(doc: Value) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_value(doc).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(vec![format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            )]));
        }
        Ok(cfg)
    }
}

/// Loads a JSON document from `path` (or the built-in scenario) and applies
/// overrides. Returns the document and the directory relative paths resolve
/// against.
pub fn load_document(
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<(Value, PathBuf)> {
    let (mut doc, base) = match path {
        Some(p) => {
            let text = read(p)?;
            let doc: Value =
                serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (doc, base)
        }
        None => (default_config(), PathBuf::from(".")),
    };
    for (k, v) in overrides {
        apply_override(&mut doc, k, v)?;
    }
    Ok((doc, base))
}

impl Scenario {
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let (doc, base) = load_document(path, overrides)?;
        Scenario::from_config(ScenarioConfig::from_value(doc)?, &base)
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Scenario::from_config(ScenarioConfig::from_value(doc)?, base)
    }

    pub fn builtin() -> Self {
        Scenario::from_json(DEFAULT_SCENARIO, Path::new(".")).expect("built-in scenario is valid")
    }

    /// Resolves files and derived defaults, then validates everything,
    /// reporting every violation at once.
    pub fn from_config(cfg: ScenarioConfig, base: &Path) -> Result<Self> {
        let mut errors = Vec::new();

        let survival = match &cfg.survival {
            SurvivalConfig::Constant { lifespan } => Ok(SurvivalCurve::constant(*lifespan)),
            SurvivalConfig::Linear { lifespan } => Ok(SurvivalCurve::linear(*lifespan)),
            SurvivalConfig::Weibull {
                lifespan,
                scale,
                shape,
            } => {
                if *scale > 0.0 && *shape > 0.0 {
                    Ok(SurvivalCurve::weibull(*lifespan, *scale, *shape))
                } else {
                    Err("survival: weibull scale and shape must be > 0".to_string())
                }
            }
            SurvivalConfig::Table { values } => {
                SurvivalCurve::new(values.clone()).map_err(|e| format!("survival.values: {e}"))
            }
            SurvivalConfig::Csv { path } => SurvivalCurve::from_csv_path(&base.join(path))
                .map_err(|e| format!("survival.path: {e}")),
        };
        let survival = survival.unwrap_or_else(|e| {
            errors.push(e);
            SurvivalCurve::constant(0)
        });

        let tasks = match &cfg.tasks {
            Some(t) => TaskSchedule::new(t.clone()).unwrap_or_else(|e| {
                errors.push(format!("tasks: {e}"));
                TaskSchedule::honeybee_default()
            }),
            None => TaskSchedule::honeybee_default(),
        };
        if tasks.index_of("nurse").is_err() {
            errors.push("tasks: a task labelled \"nurse\" is required".into());
        }

        let lifespan = survival.lifespan();
        let population = match (&cfg.colony.population, cfg.colony.adults) {
            (Some(p), _) => {
                if p.counts.len() != lifespan + 1 {
                    errors.push(format!(
                        "colony.population.counts: {} ages given, survival curve covers {}",
                        p.counts.len(),
                        lifespan + 1
                    ));
                }
                p.clone()
            }
            (None, Some(adults)) => {
                let weights = survival.values();
                let total: f64 = weights.iter().sum();
                AgeStructure {
                    counts: weights.iter().map(|w| adults * w / total).collect(),
                    males: cfg.colony.males,
                }
            }
            (None, None) => {
                errors.push("colony: one of `population` or `adults` is required".into());
                AgeStructure::zeros(lifespan)
            }
        };
        if let Err(e) = population.validate() {
            errors.push(format!("colony.population: {e}"));
        }

        let days = cfg.laying.brood_days;
        if days == 0 {
            errors.push("laying.brood_days must be >= 1".into());
        }
        if cfg.colony.brood.len() > days {
            errors.push(format!(
                "colony.brood: {} days of brood exceed laying.brood_days = {days}",
                cfg.colony.brood.len()
            ));
        }
        if cfg.colony.brood.iter().any(|b| !(*b >= 0.0)) {
            errors.push("colony.brood: counts must be >= 0".into());
        }
        let mut brood = cfg.colony.brood.clone();
        brood.resize(days, 0.0);
        let (brood_energy, brood_pollen) = provisioned(&brood, &cfg.energy);
        let initial = ColonyState {
            honey: cfg.colony.honey,
            pollen: cfg.colony.pollen,
            comb: cfg.colony.comb,
            population,
            brood,
            brood_energy,
            brood_pollen,
        };
        for (key, v) in [
            ("colony.honey", initial.honey),
            ("colony.pollen", initial.pollen),
            ("colony.comb", initial.comb),
        ] {
            if !(v >= 0.0) {
                errors.push(format!("{key} must be >= 0, got {v}"));
            }
        }

        if cfg.horizon == 0 {
            errors.push("horizon must be >= 1".into());
        }
        let weather = match &cfg.weather {
            WeatherConfig::Days(days) => WeatherSeries { days: days.clone() },
            WeatherConfig::Seasonal(s) => {
                if !(s.period > 0.0) {
                    errors.push("weather.seasonal.period must be > 0".into());
                }
                // a full year, so a short run still sees the winter ahead
                s.series(cfg.horizon.max(365))
            }
        };
        if weather.len() < cfg.horizon {
            errors.push(format!(
                "weather.days: {} days given, horizon is {}",
                weather.len(),
                cfg.horizon
            ));
        }
        errors.extend(weather.violations());

        errors.extend(cfg.energy.violations());
        errors.extend(cfg.thermal.violations());
        errors.extend(cfg.foraging.violations());
        errors.extend(cfg.predation.violations(&cfg.foraging));
        for (key, v) in [
            ("laying.queen_rate", cfg.laying.queen_rate),
            ("laying.nurse_factor", cfg.laying.nurse_factor),
        ] {
            if !(v >= 0.0) {
                errors.push(format!("{key} must be >= 0, got {v}"));
            }
        }
        let m = &cfg.market;
        if !(m.hysteresis >= 0.0 && m.hysteresis < 1.0) {
            errors.push(format!(
                "market.hysteresis must lie in [0, 1), got {}",
                m.hysteresis
            ));
        }
        if !(m.xi >= 0.0) {
            errors.push(format!("market.xi must be >= 0, got {}", m.xi));
        }
        if let Some(v) = m.min_pollen_income {
            if !(v > 0.0) {
                errors.push(format!("market.min_pollen_income must be > 0, got {v}"));
            }
        }
        if let Some(v) = m.n_winter {
            if !(v > 0.0) {
                errors.push(format!("market.n_winter must be > 0, got {v}"));
            }
        }
        if !(m.solver.tolerance > 0.0) || m.solver.max_iter == 0 || !(m.solver.tau_max > 0.0) {
            errors.push("market.solver: tolerance, max_iter and tau_max must be > 0".into());
        }

        let landscape = match &cfg.landscape {
            Some(l) => match build_landscape(l, base) {
                Ok(l) => Some(l),
                Err(e) => {
                    errors.push(e);
                    None
                }
            },
            None => None,
        };

        let mut seen = std::collections::BTreeSet::new();
        for r in &cfg.resources {
            if r.id == crate::flora::raster::VACUUM {
                errors.push("resource id 0 is reserved for floral vacuum".into());
            }
            if !seen.insert(r.id) {
                errors.push(format!("resource {}: duplicate id", r.id));
            }
            errors.extend(r.violations());
            let placed = landscape.as_ref().and_then(|l| l.distance_from_hive(r.id));
            if r.distance.is_none() && placed.is_none() {
                errors.push(format!(
                    "resource {}: no distance and no footprint on the landscape",
                    r.id
                ));
            }
            if let Some(local) = cfg.predation.rho_crit_local {
                let theoretical = crate::flora::critical_density(r, &cfg.foraging);
                if local < theoretical {
                    errors.push(format!(
                        "predation.rho_crit_local = {local} is below resource {}'s critical density {theoretical}",
                        r.id
                    ));
                }
            }
        }
        if let Some(l) = &landscape {
            for id in l.ids_present() {
                if !seen.contains(&id) {
                    errors.push(format!("landscape: id {id} is not in the resource table"));
                }
            }
        }

        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors));
        }
        Ok(Scenario {
            name: cfg.name,
            horizon: cfg.horizon,
            seed: cfg.seed,
            initial,
            survival,
            tasks,
            energy: cfg.energy,
            thermal: cfg.thermal,
            foraging: cfg.foraging,
            predation: cfg.predation,
            laying: cfg.laying,
            market: cfg.market,
            weather,
            landscape,
            resources: cfg.resources,
        })
    }

    /// Hive-to-patch distance: the explicit value if given, else the raster.
    pub fn distance(&self, res: &FloralResource) -> Option<f64> {
        res.distance.or_else(|| {
            self.landscape
                .as_ref()
                .and_then(|l| l.distance_from_hive(res.id))
        })
    }

    /// Winter days of the first year, used for the target ratio.
    pub fn first_winter(&self) -> WeatherSeries {
        WeatherSeries {
            days: self
                .weather
                .days
                .iter()
                .take(365)
                .copied()
                .filter(|d| d.winter)
                .collect(),
        }
    }
}

/// Energy and pollen already fed to `brood`, whose cohort at index `k` has
/// been fed `k + 1` daily rations.
pub(crate) fn provisioned(brood: &[f64], e: &EnergyCoefficients) -> (f64, f64) {
    let days = brood.len() as f64;
    let fed = |per_bee: f64| {
        brood
            .iter()
            .enumerate()
            .map(|(k, &n)| n * (k + 1) as f64 * per_bee / days)
            .collect::<crate::numeric::ExactSum>()
            .value()
    };
    (fed(e.alpha), fed(e.alpha_pollen))
}

fn build_landscape(l: &LandscapeConfig, base: &Path) -> std::result::Result<Landscape, String> {
    let ids = match (&l.ids, &l.ids_csv) {
        (Some(rows), None) => {
            let cols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != cols) {
                return Err("landscape.ids: rows differ in length".into());
            }
            Raster::from_vec(rows.len(), cols, rows.concat())
                .map_err(|e| format!("landscape.ids: {e}"))?
        }
        (None, Some(path)) => {
            let full = base.join(path);
            let file = std::fs::File::open(&full)
                .map_err(|e| format!("landscape.ids_csv: {}: {e}", full.display()))?;
            Landscape::read_ids_csv(file).map_err(|e| format!("landscape.ids_csv: {e}"))?
        }
        _ => return Err("landscape: give exactly one of `ids` or `ids_csv`".into()),
    };
    if ids.is_empty() {
        return Err("landscape: the raster is empty".into());
    }
    let mut land =
        Landscape::new(ids, l.cell_size, l.hive).map_err(|e| format!("landscape: {e}"))?;
    land.origin = l.origin;
    Ok(land)
}
