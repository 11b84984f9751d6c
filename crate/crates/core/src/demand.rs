//! Per-bus demand under homogeneous and heterogeneous heating.
//!
//! Homogeneous: `p_d,i(t) = PS_i · base(t) + PS_i · heat_natl(t)`, with the
//! national heat series computed from one population-weighted temperature.
//! Heterogeneous: `p_d,i(t) = PS_i · base(t) + heat_i(t)`, with each bus's
//! heat series computed from its own temperature and household count.
//!
//! Heat series come from a [`HeatResponseCurve`], which turns a day's mean
//! temperature into a daily electrical energy and spreads it over 48
//! half-hour slots. Grid steps aggregate whole half-hour slots, so a grid
//! that covers whole days carries exactly each day's energy.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use chrono::{Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{self, DailySeries, SeriesError};

pub const SLOTS_PER_DAY: usize = 48;
const SHAPE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("population weights must be >= 0 and sum to 1, got sum {0}")]
    WeightSumInvalid(f64),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("no heat series for bus `{0}`")]
    MissingBusSeries(String),
    #[error("no temperature series for area `{0}`")]
    MissingArea(String),
    #[error("temperature {temp} °C on {date} is outside the curve domain [{lo}, {hi}]")]
    TemperatureOutOfDomain { date: chrono::NaiveDate, temp: f64, lo: f64, hi: f64 },
    #[error("no temperature for {0}")]
    MissingTemperature(chrono::NaiveDate),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    /// τ, hours.
    pub step_hours: f64,
    /// Increasing within each week. Separate weeks are independent samples
    /// and may overlap in time.
    pub timestamps: Vec<NaiveDateTime>,
    /// Consecutive, disjoint ranges covering every step.
    pub week_boundaries: Vec<Range<usize>>,
}

impl TimeGrid {
    pub fn new(
        step_hours: f64,
        timestamps: Vec<NaiveDateTime>,
        week_boundaries: Vec<Range<usize>>,
    ) -> Result<Self, DemandError> {
        let bad = |m: &str| Err(DemandError::InvalidGrid(m.into()));
        if !(step_hours > 0.0) || !step_hours.is_finite() {
            return bad("step must be positive");
        }
        let mut next = 0;
        for w in &week_boundaries {
            if w.start != next || w.end <= w.start || w.end > timestamps.len() {
                return bad("week ranges must be non-empty, consecutive and disjoint");
            }
            if timestamps[w.clone()].windows(2).any(|p| p[1] <= p[0]) {
                return bad("timestamps must be strictly increasing within each week");
            }
            next = w.end;
        }
        if next != timestamps.len() {
            return bad("week ranges must cover every step");
        }
        Ok(TimeGrid { step_hours, timestamps, week_boundaries })
    }

    /// Evenly spaced grid forming a single period.
    pub fn uniform(start: NaiveDateTime, step_hours: f64, steps: usize) -> Result<Self, DemandError> {
        let step = Duration::seconds((step_hours * 3600.0).round() as i64);
        let ts = (0..steps as i32).map(|k| start + step * k).collect();
        let weeks = if steps == 0 { vec![] } else { vec![0..steps] };
        TimeGrid::new(step_hours, ts, weeks)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn week_of(&self, t: usize) -> usize {
        self.week_boundaries.iter().position(|w| w.contains(&t)).expect("step outside grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemandMode {
    #[serde(alias = "homo")]
    Homogeneous,
    #[serde(alias = "het")]
    Heterogeneous,
}

impl DemandMode {
    pub fn short(self) -> &'static str {
        match self {
            DemandMode::Homogeneous => "homo",
            DemandMode::Heterogeneous => "het",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    pub grid: TimeGrid,
    /// GW per step.
    pub per_bus: BTreeMap<String, Vec<f64>>,
    pub provenance: DemandMode,
}

impl DemandProfile {
    pub fn bus(&self, id: &str) -> Option<&[f64]> {
        self.per_bus.get(id).map(Vec::as_slice)
    }

    pub fn peak(&self, id: &str) -> Option<f64> {
        self.bus(id).map(|s| s.iter().copied().fold(0.0, f64::max))
    }

    pub fn mean(&self, id: &str) -> Option<f64> {
        self.bus(id).map(|s| if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 })
    }
}

/// Maps a day's mean temperature and household count to electrical heating
/// energy, and spreads that energy over the day.
pub trait HeatResponseCurve: Send + Sync {
    fn name(&self) -> &str;

    /// Temperatures the curve accepts, °C.
    fn domain(&self) -> (f64, f64);

    /// Daily electrical energy, GWh.
    fn daily_energy_gwh(&self, mean_temp_c: f64, households: f64) -> f64;

    /// Fraction of daily energy in each half-hour slot from midnight.
    fn intraday_shape(&self) -> &[f64];
}

/// `E_day = households · penetration · (gs·k_ground + as·k_air) · max(0, T_ref − T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegreeDayCurve {
    pub name: String,
    /// °C.
    pub t_ref: f64,
    /// kWh per household per °C-day.
    pub k_ground: f64,
    pub k_air: f64,
    pub ground_share: f64,
    pub air_share: f64,
    /// Fraction of households with a heat pump.
    pub penetration: f64,
    pub domain: (f64, f64),
    #[serde(skip)]
    pub shape: Vec<f64>,
}

impl Default for DegreeDayCurve {
    fn default() -> Self {
        DegreeDayCurve {
            name: "degree-day".into(),
            t_ref: 15.5,
            k_ground: 1.7,
            k_air: 2.1,
            ground_share: 0.25,
            air_share: 0.75,
            penetration: 1.0,
            domain: (-40.0, 45.0),
            shape: default_winter_shape(),
        }
    }
}

impl DegreeDayCurve {
    pub fn validate(&self) -> Result<(), DemandError> {
        let bad = |m: String| Err(DemandError::Invalid(m));
        if (self.ground_share + self.air_share - 1.0).abs() > 1e-9
            || self.ground_share < 0.0
            || self.air_share < 0.0
        {
            return bad(format!(
                "heat-pump shares must be >= 0 and sum to 1, got {} + {}",
                self.ground_share, self.air_share
            ));
        }
        if !(self.k_ground >= 0.0 && self.k_air >= 0.0) {
            return bad("degree-day coefficients must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.penetration) {
            return bad(format!("penetration {} outside [0, 1]", self.penetration));
        }
        if !(self.domain.0 < self.domain.1) || !self.t_ref.is_finite() {
            return bad("temperature domain must be a non-empty interval".into());
        }
        validate_shape(&self.shape)
    }

    /// kWh per household per °C-day after mixing source types.
    pub fn effective_k(&self) -> f64 {
        self.ground_share * self.k_ground + self.air_share * self.k_air
    }
}

impl HeatResponseCurve for DegreeDayCurve {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn daily_energy_gwh(&self, mean_temp_c: f64, households: f64) -> f64 {
        let kwh = households * self.penetration * self.effective_k() * (self.t_ref - mean_temp_c).max(0.0);
        kwh * 1e-6
    }

    fn intraday_shape(&self) -> &[f64] {
        &self.shape
    }
}

pub fn validate_shape(shape: &[f64]) -> Result<(), DemandError> {
    if shape.len() != SLOTS_PER_DAY {
        return Err(DemandError::Invalid(format!(
            "shape table needs {SLOTS_PER_DAY} entries, found {}",
            shape.len()
        )));
    }
    if shape.iter().any(|v| !(*v >= 0.0)) {
        return Err(DemandError::Invalid("shape fractions must be >= 0".into()));
    }
    let sum: f64 = shape.iter().sum();
    if (sum - 1.0).abs() > SHAPE_SUM_TOL {
        return Err(DemandError::Invalid(format!("shape fractions sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Reads a 48-row `slot,fraction` table.
pub fn read_shape(path: &Path) -> Result<Vec<f64>, DemandError> {
    let shape = series::read_value_column(path)?;
    validate_shape(&shape).map_err(|e| DemandError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(shape)
}

/// Winter heat-pump profile with a morning and an evening peak, normalised
/// to sum to 1.
pub fn default_winter_shape() -> Vec<f64> {
    let bump = |h: f64, centre: f64, width: f64| (-((h - centre) / width).powi(2) / 2.0).exp();
    let raw: Vec<f64> = (0..SLOTS_PER_DAY)
        .map(|s| {
            let h = s as f64 / 2.0 + 0.25;
            0.35 + 1.1 * bump(h, 7.5, 1.5) + 0.9 * bump(h, 18.0, 2.0) - 0.2 * bump(h, 3.0, 2.0)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Day-by-day weighted mean over areas.
pub fn population_weighted_temperature(
    local_temps: &BTreeMap<String, DailySeries>,
    weights: &BTreeMap<String, f64>,
) -> Result<DailySeries, DemandError> {
    let sum: f64 = weights.values().sum();
    if weights.is_empty() || weights.values().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(DemandError::WeightSumInvalid(sum));
    }
    let mut first: Option<&DailySeries> = None;
    for area in weights.keys() {
        let s = local_temps.get(area).ok_or_else(|| DemandError::MissingArea(area.clone()))?;
        match first {
            None => first = Some(s),
            Some(f) if f.start != s.start || f.values.len() != s.values.len() => {
                return Err(DemandError::LengthMismatch(format!(
                    "temperature series for `{area}` covers a different date range"
                )))
            }
            Some(_) => {}
        }
    }
    let f = first.unwrap();
    let mut values = vec![0.0; f.values.len()];
    for (area, w) in weights {
        for (v, t) in values.iter_mut().zip(&local_temps[area].values) {
            *v += w * t;
        }
    }
    Ok(DailySeries { start: f.start, values })
}

fn check_nonnegative(what: &str, s: &[f64]) -> Result<(), DemandError> {
    match s.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        Some(v) => Err(DemandError::Invalid(format!("{what} contains {v}; values must be finite and >= 0"))),
        None => Ok(()),
    }
}

fn check_shares(shares: &BTreeMap<String, f64>) -> Result<(), DemandError> {
    let sum: f64 = shares.values().sum();
    if shares.values().any(|s| !(0.0..=1.0).contains(s)) || sum > 1.0 + 1e-9 {
        return Err(DemandError::Invalid(format!("population shares must lie in [0, 1] and sum to <= 1, got sum {sum}")));
    }
    Ok(())
}

fn check_len(what: &str, s: &[f64], grid: &TimeGrid) -> Result<(), DemandError> {
    if s.len() != grid.len() {
        return Err(DemandError::LengthMismatch(format!(
            "{what} has {} steps, grid has {}",
            s.len(),
            grid.len()
        )));
    }
    Ok(())
}

pub fn homogeneous_demand(
    base_national: &[f64],
    heat_national: &[f64],
    shares: &BTreeMap<String, f64>,
    grid: &TimeGrid,
) -> Result<DemandProfile, DemandError> {
    check_len("base demand", base_national, grid)?;
    check_len("national heat", heat_national, grid)?;
    check_nonnegative("base demand", base_national)?;
    check_nonnegative("national heat", heat_national)?;
    check_shares(shares)?;
    let per_bus = shares
        .iter()
        .map(|(bus, &ps)| {
            let s = base_national.iter().zip(heat_national).map(|(b, h)| ps * b + ps * h).collect();
            (bus.clone(), s)
        })
        .collect();
    Ok(DemandProfile { grid: grid.clone(), per_bus, provenance: DemandMode::Homogeneous })
}

pub fn heterogeneous_demand(
    base_national: &[f64],
    local_heat: &BTreeMap<String, Vec<f64>>,
    shares: &BTreeMap<String, f64>,
    grid: &TimeGrid,
) -> Result<DemandProfile, DemandError> {
    check_len("base demand", base_national, grid)?;
    check_nonnegative("base demand", base_national)?;
    check_shares(shares)?;
    let mut per_bus = BTreeMap::new();
    for (bus, &ps) in shares {
        let heat = local_heat.get(bus).ok_or_else(|| DemandError::MissingBusSeries(bus.clone()))?;
        check_len(&format!("heat series for `{bus}`"), heat, grid)?;
        check_nonnegative(&format!("heat series for `{bus}`"), heat)?;
        let s = base_national.iter().zip(heat).map(|(b, h)| ps * b + h).collect();
        per_bus.insert(bus.clone(), s);
    }
    Ok(DemandProfile { grid: grid.clone(), per_bus, provenance: DemandMode::Heterogeneous })
}

/// Heat demand in GW at each grid step: the energy of the half-hour slots
/// covered by the step, divided by the step length. Steps must start on a
/// half hour and span a whole number of half hours.
pub fn synthesize_heat_series(
    curve: &dyn HeatResponseCurve,
    daily_temps: &DailySeries,
    households: f64,
    grid: &TimeGrid,
) -> Result<Vec<f64>, DemandError> {
    if !(households >= 0.0) || !households.is_finite() {
        return Err(DemandError::Invalid(format!("household count {households} must be >= 0")));
    }
    let shape = curve.intraday_shape();
    validate_shape(shape)?;
    let slots_per_step = grid.step_hours * 2.0;
    if (slots_per_step - slots_per_step.round()).abs() > 1e-9 || slots_per_step < 1.0 - 1e-9 {
        return Err(DemandError::InvalidGrid(format!(
            "step of {} h is not a whole number of half hours",
            grid.step_hours
        )));
    }
    let slots_per_step = slots_per_step.round() as usize;
    let (lo, hi) = curve.domain();
    let mut energy_cache: BTreeMap<chrono::NaiveDate, f64> = BTreeMap::new();
    let mut day_energy = |date: chrono::NaiveDate| -> Result<f64, DemandError> {
        if let Some(&e) = energy_cache.get(&date) {
            return Ok(e);
        }
        let temp = daily_temps.get(date).ok_or(DemandError::MissingTemperature(date))?;
        if !(lo..=hi).contains(&temp) {
            return Err(DemandError::TemperatureOutOfDomain { date, temp, lo, hi });
        }
        let e = curve.daily_energy_gwh(temp, households);
        energy_cache.insert(date, e);
        Ok(e)
    };

    let half_hour = Duration::minutes(30);
    let mut out = Vec::with_capacity(grid.len());
    for &ts in &grid.timestamps {
        if ts.second() != 0 || ts.minute() % 30 != 0 {
            return Err(DemandError::InvalidGrid(format!("{ts} does not start on a half hour")));
        }
        let mut energy = 0.0;
        for k in 0..slots_per_step as i32 {
            let at = ts + half_hour * k;
            let slot = (at.hour() * 2 + at.minute() / 30) as usize;
            energy += day_energy(at.date())? * shape[slot];
        }
        out.push(energy / grid.step_hours);
    }
    Ok(out)
}

/// Converts a series sampled every `from_hours` to `to_hours` steps. Coarser
/// targets take block means; finer targets repeat each value. Either way
/// the energy `Σ value · step` is preserved.
pub fn resample(values: &[f64], from_hours: f64, to_hours: f64) -> Result<Vec<f64>, DemandError> {
    let ratio = to_hours / from_hours;
    let inverse = from_hours / to_hours;
    if (ratio - ratio.round()).abs() < 1e-9 && ratio >= 1.0 - 1e-9 {
        let k = ratio.round() as usize;
        if values.len() % k != 0 {
            return Err(DemandError::LengthMismatch(format!(
                "{} steps cannot be grouped into blocks of {k}",
                values.len()
            )));
        }
        Ok(values.chunks(k).map(|c| c.iter().sum::<f64>() / k as f64).collect())
    } else if (inverse - inverse.round()).abs() < 1e-9 {
        let k = inverse.round() as usize;
        Ok(values.iter().flat_map(|&v| std::iter::repeat(v).take(k)).collect())
    } else {
        Err(DemandError::InvalidGrid(format!(
            "cannot resample {from_hours} h steps to {to_hours} h"
        )))
    }
}
