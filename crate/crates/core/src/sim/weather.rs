use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherDay {
    /// Mean outside temperature (°C).
    pub t_out: f64,
    /// Hours fit for foraging.
    pub foraging_hours: f64,
    #[serde(default)]
    pub winter: bool,
}

impl WeatherDay {
    pub fn foraging_seconds(&self) -> f64 {
        self.foraging_hours * 3600.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeatherSeries {
    pub days: Vec<WeatherDay>,
}

impl WeatherSeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Days flagged as winter, in order.
    pub fn winter(&self) -> WeatherSeries {
        WeatherSeries {
            days: self.days.iter().copied().filter(|d| d.winter).collect(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        self.days
            .iter()
            .enumerate()
            .filter_map(|(i, d)| {
                if !(0.0..=24.0).contains(&d.foraging_hours) {
                    Some(format!(
                        "weather day {i}: foraging_hours must lie in [0, 24], got {}",
                        d.foraging_hours
                    ))
                } else if !d.t_out.is_finite() {
                    Some(format!("weather day {i}: t_out must be finite"))
                } else {
                    None
                }
            })
            .collect()
    }
}

/// A deterministic annual cycle: cosine temperature with the coldest day at
/// `coldest_day`, foraging hours growing linearly above a flight threshold,
/// and winter wherever the temperature falls below `winter_below`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seasonal {
    pub mean: f64,
    pub amplitude: f64,
    pub coldest_day: f64,
    pub period: f64,
    /// Foraging starts above this temperature (°C).
    pub flight_threshold: f64,
    /// Extra foraging hours per degree above the threshold.
    pub hours_per_degree: f64,
    pub max_hours: f64,
    pub winter_below: f64,
}

impl Default for Seasonal {
    fn default() -> Self {
        Self {
            mean: 11.0,
            amplitude: 10.0,
            coldest_day: 15.0,
            period: 365.0,
            flight_threshold: 10.0,
            hours_per_degree: 1.0,
            max_hours: 10.0,
            winter_below: 5.0,
        }
    }
}

impl Seasonal {
    pub fn day(&self, d: usize) -> WeatherDay {
        let phase = 2.0 * std::f64::consts::PI * (d as f64 - self.coldest_day) / self.period;
        let t_out = self.mean - self.amplitude * phase.cos();
        let foraging_hours =
            ((t_out - self.flight_threshold) * self.hours_per_degree).clamp(0.0, self.max_hours);
        WeatherDay {
            t_out,
            foraging_hours,
            winter: t_out < self.winter_below,
        }
    }

    pub fn series(&self, days: usize) -> WeatherSeries {
        WeatherSeries {
            days: (0..days).map(|d| self.day(d)).collect(),
        }
    }
}
