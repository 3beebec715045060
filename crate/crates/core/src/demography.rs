//! Age-structured colony population, task cohorts and survival-driven
//! mortality, plus the stock/coefficient types of the energy balance.
//!
//! Ages are whole days. `N_d` counts adult females of age `d ∈ [0, L]`, where
//! `L` is the maximal lifespan; males are one lumped count with no tasks.
//! Counts are real-valued expected head counts.

use std::io::Read;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{exact_sum, split_exact};

#[derive(Debug, Error, PartialEq)]
pub enum DemographyError {
    #[error("survival curve is empty")]
    EmptyCurve,
    #[error("survival must start at s(0) = 1, got {0}")]
    SurvivalStart(f64),
    #[error("survival fraction at age {age} is {value}, outside [0, 1]")]
    SurvivalRange { age: usize, value: f64 },
    #[error("survival increases between ages {age} and {}", age + 1)]
    SurvivalIncreasing { age: usize },
    #[error("survival CSV: {0}")]
    Csv(String),
    #[error("survival CSV ages must be contiguous from 0; expected {expected}, found {found}")]
    NonContiguousAge { expected: usize, found: String },
    #[error("negative head count {value} at age {age}")]
    NegativeCount { age: usize, value: f64 },
    #[error("population spans {population} ages but survival curve spans {survival}")]
    LifespanMismatch { population: usize, survival: usize },
    #[error("task schedule is empty")]
    EmptySchedule,
    #[error("task boundaries must be strictly increasing (task {index} starts at {start})")]
    ScheduleOrder { index: usize, start: usize },
    #[error("task index {index} out of range ({count} tasks)")]
    InvalidTask { index: usize, count: usize },
    #[error("no task labelled {0:?}")]
    UnknownTask(String),
    #[error("egg history too short: need day {needed} at t = {t}, history has {len} days")]
    HistoryTooShort { needed: usize, t: usize, len: usize },
    #[error("{count} bees of age {age} where survival is zero")]
    Inconsistent { age: usize, count: f64 },
}

pub type Result<T> = std::result::Result<T, DemographyError>;

/// Proportion `s(d)` of bees surviving to age `d`, for `d ∈ [0, L]`.
/// Beyond `L` the curve is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SurvivalCurve {
    s: Vec<f64>,
}

impl TryFrom<Vec<f64>> for SurvivalCurve {
    type Error = DemographyError;

    fn try_from(s: Vec<f64>) -> Result<Self> {
        SurvivalCurve::new(s)
    }
}

impl From<SurvivalCurve> for Vec<f64> {
    fn from(c: SurvivalCurve) -> Self {
        c.s
    }
}

impl SurvivalCurve {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        let first = *s.first().ok_or(DemographyError::EmptyCurve)?;
        if first != 1.0 {
            return Err(DemographyError::SurvivalStart(first));
        }
        for (age, &value) in s.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(DemographyError::SurvivalRange { age, value });
            }
        }
        if let Some(age) = s.windows(2).position(|w| w[1] > w[0]) {
            return Err(DemographyError::SurvivalIncreasing { age });
        }
        Ok(Self { s })
    }

    /// `s ≡ 1` on `[0, lifespan]`.
    pub fn constant(lifespan: usize) -> Self {
        Self {
            s: vec![1.0; lifespan + 1],
        }
    }

    /// `s(d) = 1 − d/(L+1)`.
    pub fn linear(lifespan: usize) -> Self {
        let l1 = (lifespan + 1) as f64;
        Self {
            s: (0..=lifespan).map(|d| 1.0 - d as f64 / l1).collect(),
        }
    }

    /// `s(d) = exp(−(d/scale)^shape)`, truncated at `lifespan`.
    pub fn weibull(lifespan: usize, scale: f64, shape: f64) -> Self {
        Self {
            s: (0..=lifespan)
                .map(|d| (-(d as f64 / scale).powf(shape)).exp())
                .collect(),
        }
    }

    /// Reads a two-column `age,fraction` CSV. A header row is optional; ages
    /// must run `0, 1, …, L` without gaps.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut s = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| DemographyError::Csv(e.to_string()))?;
            if record.len() != 2 {
                return Err(DemographyError::Csv(format!(
                    "row {} has {} columns, expected 2",
                    row + 1,
                    record.len()
                )));
            }
            let age_field = &record[0];
            let age = match age_field.parse::<usize>() {
                Ok(a) => a,
                Err(_) if row == 0 && age_field.parse::<f64>().is_err() => continue,
                Err(_) => {
                    return Err(DemographyError::NonContiguousAge {
                        expected: s.len(),
                        found: age_field.to_string(),
                    })
                }
            };
            if age != s.len() {
                return Err(DemographyError::NonContiguousAge {
                    expected: s.len(),
                    found: age.to_string(),
                });
            }
            let value = record[1]
                .parse::<f64>()
                .map_err(|e| DemographyError::Csv(format!("row {}: {e}", row + 1)))?;
            s.push(value);
        }
        Self::new(s)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| DemographyError::Csv(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    /// Maximal lifespan `L` in days.
    pub fn lifespan(&self) -> usize {
        self.s.len() - 1
    }

    pub fn at(&self, age: usize) -> f64 {
        self.s.get(age).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    /// Fraction of the age-`d` cohort still alive one day later.
    fn keep_fraction(&self, age: usize) -> Option<f64> {
        let here = self.at(age);
        (here > 0.0).then(|| self.at(age + 1) / here)
    }
}

/// Head counts `N_d` for adult females of age `d ∈ [0, L]`, plus males.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgeStructure {
    pub counts: Vec<f64>,
    #[serde(default)]
    pub males: f64,
}

impl AgeStructure {
    pub fn zeros(lifespan: usize) -> Self {
        Self {
            counts: vec![0.0; lifespan + 1],
            males: 0.0,
        }
    }

    pub fn new(counts: Vec<f64>, males: f64) -> Result<Self> {
        let pop = Self { counts, males };
        pop.validate()?;
        Ok(pop)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((age, &value)) = self.counts.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(DemographyError::NegativeCount { age, value });
        }
        if !(self.males >= 0.0) {
            return Err(DemographyError::NegativeCount {
                age: self.counts.len(),
                value: self.males,
            });
        }
        Ok(())
    }

    pub fn lifespan(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    pub fn females(&self) -> f64 {
        exact_sum(self.counts.iter().copied())
    }

    /// Females plus males.
    pub fn total(&self) -> f64 {
        exact_sum(self.counts.iter().copied().chain([self.males]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub label: String,
    /// First age (days) at which bees perform this task.
    pub start: usize,
}

/// Age windows of successive tasks. Task `i` covers `[start_i, start_{i+1} − 1]`;
/// the last task runs to the end of life.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Task>", into = "Vec<Task>")]
pub struct TaskSchedule {
    tasks: Vec<Task>,
}

impl TryFrom<Vec<Task>> for TaskSchedule {
    type Error = DemographyError;

    fn try_from(tasks: Vec<Task>) -> Result<Self> {
        TaskSchedule::new(tasks)
    }
}

impl From<TaskSchedule> for Vec<Task> {
    fn from(s: TaskSchedule) -> Self {
        s.tasks
    }
}

impl TaskSchedule {
    pub fn new(tasks: Vec<Task>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(DemographyError::EmptySchedule);
        }
        for (index, w) in tasks.windows(2).enumerate() {
            if w[1].start <= w[0].start {
                return Err(DemographyError::ScheduleOrder {
                    index: index + 1,
                    start: w[1].start,
                });
            }
        }
        Ok(Self { tasks })
    }

    pub fn from_pairs<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(label, start)| Task {
                    label: label.into(),
                    start,
                })
                .collect(),
        )
    }

    /// Cleaning, nursing, house work, foraging.
    pub fn honeybee_default() -> Self {
        Self::from_pairs([("cleaner", 0), ("nurse", 3), ("house", 12), ("forager", 21)])
            .expect("static schedule is ordered")
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.tasks
            .iter()
            .position(|t| t.label == label)
            .ok_or_else(|| DemographyError::UnknownTask(label.to_string()))
    }

    /// Index of the oldest task, which is foraging.
    pub fn forager_index(&self) -> usize {
        self.tasks.len() - 1
    }

    /// Age window of task `index`, clipped to `[0, lifespan]`. `None` when the
    /// window starts past the end of life.
    pub fn window(&self, index: usize, lifespan: usize) -> Result<Option<RangeInclusive<usize>>> {
        let task = self.tasks.get(index).ok_or(DemographyError::InvalidTask {
            index,
            count: self.tasks.len(),
        })?;
        let end = match self.tasks.get(index + 1) {
            Some(next) => (next.start - 1).min(lifespan),
            None => lifespan,
        };
        Ok((task.start <= end).then_some(task.start..=end))
    }
}

/// Number of bees performing task `task_index`: `Σ N_d` over its window.
pub fn cohort_count(pop: &AgeStructure, sched: &TaskSchedule, task_index: usize) -> Result<f64> {
    Ok(match sched.window(task_index, pop.lifespan())? {
        Some(w) => exact_sum(pop.counts[w].iter().copied()),
        None => 0.0,
    })
}

/// Cohort size reconstructed from the laying history:
/// `Σ_{d ∈ window} N_0(t − d)·s(d)`, where `egg_history[k]` is `N_0` on day `k`.
pub fn cohort_from_history(
    egg_history: &[f64],
    survival: &SurvivalCurve,
    sched: &TaskSchedule,
    task_index: usize,
    t: usize,
) -> Result<f64> {
    let Some(window) = sched.window(task_index, survival.lifespan())? else {
        return Ok(0.0);
    };
    let oldest = *window.end();
    if t < oldest || t >= egg_history.len() {
        return Err(DemographyError::HistoryTooShort {
            needed: t.saturating_sub(oldest),
            t,
            len: egg_history.len(),
        });
    }
    Ok(exact_sum(
        window.map(|d| egg_history[t - d] * survival.at(d)),
    ))
}

fn check_lengths(pop: &AgeStructure, survival: &SurvivalCurve) -> Result<()> {
    if pop.counts.len() != survival.values().len() {
        return Err(DemographyError::LifespanMismatch {
            population: pop.counts.len(),
            survival: survival.values().len(),
        });
    }
    Ok(())
}

/// Per-age `(survivors, deaths)` over one day; the two parts add up to
/// `N_d` exactly.
fn daily_split(pop: &AgeStructure, survival: &SurvivalCurve) -> Result<Vec<(f64, f64)>> {
    check_lengths(pop, survival)?;
    pop.counts
        .iter()
        .enumerate()
        .map(|(age, &n)| match survival.keep_fraction(age) {
            Some(keep) => Ok(split_exact(n, keep)),
            None if n == 0.0 => Ok((0.0, 0.0)),
            None => Err(DemographyError::Inconsistent { age, count: n }),
        })
        .collect()
}

/// Deaths over one day, `Σ_d N_d·(s(d) − s(d+1))/s(d)` with `s(L+1) = 0`.
pub fn daily_mortality(pop: &AgeStructure, survival: &SurvivalCurve) -> Result<f64> {
    Ok(exact_sum(
        daily_split(pop, survival)?
            .into_iter()
            .map(|(_, lost)| lost),
    ))
}

/// Result of one day of ageing.
#[derive(Clone, Debug, PartialEq)]
pub struct DayTransition {
    pub population: AgeStructure,
    pub deaths_by_age: Vec<f64>,
}

impl DayTransition {
    pub fn deaths(&self) -> f64 {
        exact_sum(self.deaths_by_age.iter().copied())
    }
}

/// Shifts every cohort up one day of age, applies the survival hazard and
/// places `new_eggs_emerging` at age 0. Males are carried unchanged.
pub fn advance_day_tracked(
    pop: &AgeStructure,
    survival: &SurvivalCurve,
    new_eggs_emerging: f64,
) -> Result<DayTransition> {
    let split = daily_split(pop, survival)?;
    let mut counts = Vec::with_capacity(pop.counts.len());
    counts.push(new_eggs_emerging.max(0.0));
    counts.extend(split.iter().take(split.len() - 1).map(|(kept, _)| *kept));
    debug_assert_eq!(split.last().map(|(k, _)| *k).unwrap_or(0.0), 0.0);
    Ok(DayTransition {
        population: AgeStructure {
            counts,
            males: pop.males,
        },
        deaths_by_age: split.into_iter().map(|(_, lost)| lost).collect(),
    })
}

pub fn advance_day(
    pop: &AgeStructure,
    survival: &SurvivalCurve,
    new_eggs_emerging: f64,
) -> Result<AgeStructure> {
    advance_day_tracked(pop, survival, new_eggs_emerging).map(|t| t.population)
}

/// Coefficients of the energy balance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyCoefficients {
    /// Energy per gram of honey (J/g).
    pub mu: f64,
    /// Energy embodied in one bee (J). Used for males too.
    pub alpha: f64,
    /// Pollen embodied in one bee (g).
    pub alpha_pollen: f64,
    /// Energy per gram of comb wax (J/g).
    pub gamma: f64,
    /// Upkeep power per adult bee (W).
    pub pi: f64,
}

impl Default for EnergyCoefficients {
    fn default() -> Self {
        Self {
            mu: 12_700.0,
            alpha: 850.0,
            alpha_pollen: 0.12,
            gamma: 40_000.0,
            pi: 5.0e-4,
        }
    }
}

impl EnergyCoefficients {
    pub fn violations(&self) -> Vec<String> {
        [
            ("energy.mu", self.mu),
            ("energy.alpha", self.alpha),
            ("energy.alpha_pollen", self.alpha_pollen),
            ("energy.gamma", self.gamma),
            ("energy.pi", self.pi),
        ]
        .into_iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(k, v)| format!("{k} must be strictly positive, got {v}"))
        .collect()
    }
}

/// Hive stocks and population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColonyState {
    /// Honey (g).
    pub honey: f64,
    /// Stored pollen (g).
    pub pollen: f64,
    /// Comb wax (g).
    pub comb: f64,
    pub population: AgeStructure,
    /// Developing larvae by day of development; index 0 holds today's eggs.
    #[serde(default)]
    pub brood: Vec<f64>,
    /// Honey energy already fed to the brood (J).
    #[serde(default)]
    pub brood_energy: f64,
    /// Pollen already fed to the brood (g).
    #[serde(default)]
    pub brood_pollen: f64,
}

impl ColonyState {
    pub fn larvae(&self) -> f64 {
        exact_sum(self.brood.iter().copied())
    }

    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        let stocks = [
            self.honey,
            self.pollen,
            self.comb,
            self.brood_energy,
            self.brood_pollen,
        ];
        if let Some(&value) = stocks.iter().find(|v| !(**v >= 0.0)) {
            return Err(DemographyError::NegativeCount { age: 0, value });
        }
        Ok(())
    }
}

/// `E = μM + αN + γC`, with energy already invested in the brood included.
pub fn total_energy(state: &ColonyState, coeffs: &EnergyCoefficients) -> f64 {
    exact_sum([
        coeffs.mu * state.honey,
        coeffs.alpha * state.population.total(),
        coeffs.gamma * state.comb,
        state.brood_energy,
    ])
}

/// Pollen analog of [`total_energy`]: stored pollen plus pollen embodied in
/// adults and brood.
pub fn total_pollen(state: &ColonyState, coeffs: &EnergyCoefficients) -> f64 {
    exact_sum([
        state.pollen,
        coeffs.alpha_pollen * state.population.total(),
        state.brood_pollen,
    ])
}
