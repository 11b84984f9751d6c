//! Scenario files, input preparation and paired model runs.
//!
//! # Scenario file
//!
//! ```toml
//! name = "synthetic-3bus"
//! network = "../data/synthetic_3bus/network.toml"
//! step_hours = 3.0                  # τ; must divide 24
//! periods_per_year = 4.0            # capital amortisation periods
//! demand_mode = "heterogeneous"     # or "homogeneous"
//!
//! [demand]
//! base_national = "../data/synthetic_3bus/base_demand.csv"   # timestamp,GW
//! national_households = 2.8e7
//! shape = "../data/shapes/winter_48.csv"                     # optional
//! curve = { t_ref = 15.5, k_air = 2.1, k_ground = 1.7 }      # optional
//! bus_areas = { inland = "inland" }                          # bus → area
//! households = { inland = 2.2e6 }                            # optional
//!
//! [[demand.areas]]
//! name = "inland"
//! temperature = "../data/synthetic_3bus/temperature_inland.csv"  # date,°C
//! weight = 0.08                    # share of national population
//!
//! [weeks]
//! method = "min_net_demand"        # or "explicit" with start_dates
//! months = [1, 2, 11, 12]
//! wind_techs = ["wind_onshore", "wind_offshore"]
//!
//! [[technologies]]                  # see GeneratorTech
//! [storage]                         # see StorageSpec
//!
//! [[budgets]]
//! label = "2019"
//! national = 5.8e7                 # tCO₂e per year, scaled by the fractions
//! population_fraction = 0.2
//! period_fraction = 0.5
//! # or: value = 1.2e6
//! ```
//!
//! Paths are relative to the scenario file. Households at a bus default to
//! its population share of the national count.

mod weeks;

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{
    self, heterogeneous_demand, homogeneous_demand, population_weighted_temperature,
    synthesize_heat_series, DegreeDayCurve, DemandError, DemandMode, DemandProfile, TimeGrid,
};
use crate::expansion::{
    self, audit, decode, infeasible_rows, BudgetScope, CarbonBudget, ConstraintReport, ExpansionError,
    ExpansionProblem, ExpansionSolution, GeneratorTech, ModelInputs, StorageSpec,
};
use crate::lp::{self, LpError, LpStatus, SolverOptions};
use crate::network::{NetworkError, NetworkSpec};
use crate::series::{self, DailySeries, SeriesError, TimeSeries};

pub use weeks::{scale_budget, select_weeks, SelectedWeek, WeekError, DAYS_AFTER, DAYS_BEFORE, WEEK_DAYS};

pub const AUDIT_TOL: f64 = 1e-6;
const REPORTED_INFEASIBLE_ROWS: usize = 10;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}: file not found")]
    MissingFile(PathBuf),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Weeks(#[from] WeekError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{mode:?} model is infeasible; violated rows: {}", rows.join(", "))]
    Infeasible { mode: DemandMode, rows: Vec<String> },
    #[error("{mode:?} model ended with status {status:?}")]
    SolverFailed { mode: DemandMode, status: LpStatus },
    #[error("unknown budget `{0}`")]
    UnknownBudget(String),
}

impl ScenarioError {
    /// Errors caused by the inputs rather than by the model outcome.
    pub fn is_input_error(&self) -> bool {
        match self {
            ScenarioError::Config { .. }
            | ScenarioError::MissingFile(_)
            | ScenarioError::Series(_)
            | ScenarioError::Network(_)
            | ScenarioError::Demand(_)
            | ScenarioError::Weeks(_)
            | ScenarioError::UnknownBudget(_) => true,
            ScenarioError::Expansion(e) => !matches!(
                e,
                ExpansionError::NotOptimal(_) | ExpansionError::ObjectiveMismatch { .. }
            ),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaConfig {
    pub name: String,
    pub temperature: PathBuf,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandConfig {
    pub base_national: PathBuf,
    pub national_households: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<PathBuf>,
    #[serde(default)]
    pub curve: DegreeDayCurve,
    pub areas: Vec<AreaConfig>,
    pub bus_areas: BTreeMap<String, String>,
    #[serde(default)]
    pub households: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeekMethod {
    MinNetDemand,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeekConfig {
    pub method: WeekMethod,
    #[serde(default)]
    pub months: Vec<u32>,
    #[serde(default)]
    pub wind_techs: Vec<String>,
    #[serde(default)]
    pub start_dates: Vec<NaiveDate>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub national: Option<f64>,
    #[serde(default = "one")]
    pub population_fraction: f64,
    #[serde(default = "one")]
    pub period_fraction: f64,
    #[serde(default)]
    pub scope: BudgetScope,
}

impl BudgetConfig {
    pub fn resolve(&self) -> Result<CarbonBudget, WeekError> {
        let limit = match (self.value, self.national) {
            (Some(v), None) if v >= 0.0 => v,
            (None, Some(n)) => scale_budget(n, self.population_fraction, self.period_fraction)?,
            _ => {
                return Err(WeekError::Invalid(format!(
                    "budget `{}` needs exactly one of `value` (>= 0) or `national`",
                    self.label
                )))
            }
        };
        Ok(CarbonBudget { limit, label: self.label.clone(), scope: self.scope })
    }
}

fn default_periods() -> f64 {
    expansion::DEFAULT_PERIODS_PER_YEAR
}

fn default_mode() -> DemandMode {
    DemandMode::Heterogeneous
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub network: PathBuf,
    pub step_hours: f64,
    #[serde(default = "default_periods")]
    pub periods_per_year: f64,
    #[serde(default = "default_mode")]
    pub demand_mode: DemandMode,
    pub demand: DemandConfig,
    pub weeks: WeekConfig,
    pub technologies: Vec<GeneratorTech>,
    pub storage: StorageSpec,
    pub budgets: Vec<BudgetConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ScenarioError> {
        let mut config: ScenarioConfig = toml::from_str(text)
            .map_err(|e| ScenarioError::Config { path: path.into(), message: e.to_string() })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Reads the file and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ScenarioError::MissingFile(path.into()),
            _ => ScenarioError::Config { path: path.into(), message: e.to_string() },
        })?;
        let config = Self::parse(&text, path)?;
        for file in config.referenced_files() {
            if !file.is_file() {
                return Err(ScenarioError::MissingFile(file));
            }
        }
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    /// Files named directly by the scenario.
    pub fn referenced_files(&self) -> Vec<PathBuf> {
        let d = &self.demand;
        let mut out = vec![self.resolve(&self.network), self.resolve(&d.base_national)];
        out.extend(d.shape.iter().map(|s| self.resolve(s)));
        out.extend(d.areas.iter().map(|a| self.resolve(&a.temperature)));
        out
    }

    pub fn budget(&self, label: Option<&str>) -> Result<CarbonBudget, ScenarioError> {
        let chosen = match label {
            None => self.budgets.first().ok_or_else(|| ScenarioError::UnknownBudget("(none defined)".into()))?,
            Some(l) => self.budgets.iter().find(|b| b.label == l).ok_or_else(|| ScenarioError::UnknownBudget(l.into()))?,
        };
        Ok(chosen.resolve()?)
    }
}

/// Everything needed to build either demand variant on the model grid.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub config: ScenarioConfig,
    pub network: NetworkSpec,
    pub grid: TimeGrid,
    pub weeks: Vec<SelectedWeek>,
    pub homogeneous: DemandProfile,
    pub heterogeneous: DemandProfile,
    /// Every input file read, in reading order.
    pub files: Vec<PathBuf>,
}

impl PreparedScenario {
    pub fn demand(&self, mode: DemandMode) -> &DemandProfile {
        match mode {
            DemandMode::Homogeneous => &self.homogeneous,
            DemandMode::Heterogeneous => &self.heterogeneous,
        }
    }

    pub fn inputs<'a>(&'a self, mode: DemandMode, budget: &'a CarbonBudget) -> ModelInputs<'a> {
        ModelInputs {
            network: &self.network,
            demand: self.demand(mode),
            techs: &self.config.technologies,
            storage: &self.config.storage,
            budget,
            grid: &self.grid,
            periods_per_year: self.config.periods_per_year,
        }
    }
}

fn source_step_hours(ts: &[NaiveDateTime], path: &Path) -> Result<f64, ScenarioError> {
    let bad = |m: &str| ScenarioError::Config { path: path.into(), message: m.into() };
    if ts.len() < 2 {
        return Err(bad("time series needs at least two rows"));
    }
    let step = ts[1] - ts[0];
    if ts.windows(2).any(|w| w[1] - w[0] != step) {
        return Err(bad("time series must be evenly spaced"));
    }
    Ok(step.num_seconds() as f64 / 3600.0)
}

/// Heat series on `grid` for one household count and temperature series.
fn heat(
    curve: &DegreeDayCurve,
    temps: &DailySeries,
    households: f64,
    grid: &TimeGrid,
) -> Result<Vec<f64>, DemandError> {
    synthesize_heat_series(curve, temps, households, grid)
}

/// Loads data, selects weeks and builds both demand variants.
pub fn prepare(config: &ScenarioConfig, step_override: Option<f64>) -> Result<PreparedScenario, ScenarioError> {
    let step_hours = step_override.unwrap_or(config.step_hours);
    let network_path = config.resolve(&config.network);
    let loaded = NetworkSpec::load(&network_path)?;
    let mut files = loaded.files.clone();
    let d = &config.demand;

    let base_path = config.resolve(&d.base_national);
    let base: TimeSeries = series::read_time_series(&base_path)?;
    files.push(base_path.clone());
    if !loaded.timestamps.is_empty() && loaded.timestamps != base.timestamps {
        return Err(ScenarioError::Config {
            path: base_path,
            message: "timestamps differ from the network series".into(),
        });
    }
    let source_step = source_step_hours(&base.timestamps, &base_path)?;

    let mut curve = d.curve.clone();
    if let Some(shape) = &d.shape {
        let p = config.resolve(shape);
        curve.shape = demand::read_shape(&p)?;
        files.push(p);
    }
    curve.validate()?;

    let mut temps = BTreeMap::new();
    let mut weights = BTreeMap::new();
    for area in &d.areas {
        let p = config.resolve(&area.temperature);
        temps.insert(area.name.clone(), series::read_daily_series(&p)?);
        weights.insert(area.name.clone(), area.weight);
        files.push(p);
    }
    let national_temp = population_weighted_temperature(&temps, &weights)?;

    let net = &loaded.network;
    let shares: BTreeMap<String, f64> = net.buses.iter().map(|b| (b.id.clone(), b.population_share)).collect();
    let mut bus_temps = BTreeMap::new();
    let mut households = BTreeMap::new();
    for bus in &net.buses {
        let area = d.bus_areas.get(&bus.id).ok_or_else(|| ScenarioError::Config {
            path: config.base_dir.join("(scenario)"),
            message: format!("no temperature area assigned to bus `{}`", bus.id),
        })?;
        let t = temps.get(area).ok_or_else(|| DemandError::MissingArea(area.clone()))?;
        bus_temps.insert(bus.id.clone(), t.clone());
        let h = d.households.get(&bus.id).copied().unwrap_or(bus.population_share * d.national_households);
        households.insert(bus.id.clone(), h);
    }

    let source_grid = TimeGrid::new(source_step, base.timestamps.clone(), vec![0..base.len()])?;
    let weeks = match config.weeks.method {
        WeekMethod::MinNetDemand => {
            let mut wind = vec![0.0; base.len()];
            for bus in &net.buses {
                for tech in &config.weeks.wind_techs {
                    let cap = bus.existing(tech);
                    if cap > 0.0 {
                        for (t, w) in wind.iter_mut().enumerate() {
                            *w += cap * bus.availability_at(tech, t);
                        }
                    }
                }
            }
            let mut total = vec![0.0; base.len()];
            for bus in &net.buses {
                let h = heat(&curve, &bus_temps[&bus.id], households[&bus.id], &source_grid)?;
                for (t, v) in total.iter_mut().enumerate() {
                    *v += bus.population_share * base.values[t] + h[t];
                }
            }
            select_weeks(&wind, &total, &base.timestamps, &config.weeks.months)?
        }
        WeekMethod::Explicit => explicit_weeks(&config.weeks.start_dates, &base.timestamps, source_step)?,
    };

    let grid = model_grid(&weeks, &base.timestamps, source_step, step_hours)?;
    let pick = |s: &[f64]| -> Result<Vec<f64>, DemandError> {
        let mut out = Vec::with_capacity(grid.len());
        for w in &weeks {
            let values: Vec<f64> = w.indices().map(|k| s[k]).collect();
            out.extend(demand::resample(&values, source_step, step_hours)?);
        }
        Ok(out)
    };
    let base_model = pick(&base.values)?;
    let mut pick_err = None;
    let network = net.map_series(|s| {
        pick(s).unwrap_or_else(|e| {
            pick_err = Some(e);
            Vec::new()
        })
    });
    if let Some(e) = pick_err {
        return Err(e.into());
    }

    let national_heat = heat(&curve, &national_temp, d.national_households, &grid)?;
    let homogeneous = homogeneous_demand(&base_model, &national_heat, &shares, &grid)?;
    let mut local = BTreeMap::new();
    for bus in &net.buses {
        local.insert(bus.id.clone(), heat(&curve, &bus_temps[&bus.id], households[&bus.id], &grid)?);
    }
    let heterogeneous = heterogeneous_demand(&base_model, &local, &shares, &grid)?;
    info!(
        "prepared `{}`: {} weeks, {} steps of {} h",
        config.name,
        weeks.len(),
        grid.len(),
        step_hours
    );
    Ok(PreparedScenario { config: config.clone(), network, grid, weeks, homogeneous, heterogeneous, files })
}

fn explicit_weeks(
    starts: &[NaiveDate],
    timestamps: &[NaiveDateTime],
    step_hours: f64,
) -> Result<Vec<SelectedWeek>, ScenarioError> {
    if starts.is_empty() {
        return Err(WeekError::Invalid("explicit week selection needs start_dates".into()).into());
    }
    let per_day = (24.0 / step_hours).round() as usize;
    let first = timestamps[0];
    let mut out = Vec::new();
    for &start in starts {
        let offset = (start.and_hms_opt(0, 0, 0).unwrap() - first).num_hours() as f64 / step_hours;
        let end = offset as usize + WEEK_DAYS * per_day;
        if offset < 0.0 || end > timestamps.len() {
            return Err(WeekError::EdgeOfSeries(start).into());
        }
        let k = offset as usize;
        out.push(SelectedWeek {
            month: chrono::Datelike::month(&start),
            critical_index: k,
            critical_time: timestamps[k],
            min_net_demand: f64::NAN,
            max_residual_demand: f64::NAN,
            days: (0..WEEK_DAYS as i64).map(|i| start + Duration::days(i)).collect(),
            day_ranges: (0..WEEK_DAYS).map(|i| k + i * per_day..k + (i + 1) * per_day).collect(),
            wrapped: false,
        });
    }
    Ok(out)
}

fn model_grid(
    weeks: &[SelectedWeek],
    source_ts: &[NaiveDateTime],
    source_step: f64,
    step_hours: f64,
) -> Result<TimeGrid, ScenarioError> {
    let steps_per_day = 24.0 / step_hours;
    if !(step_hours > 0.0) || (steps_per_day - steps_per_day.round()).abs() > 1e-9 {
        return Err(DemandError::InvalidGrid(format!("step of {step_hours} h must divide 24 h")).into());
    }
    let step = Duration::seconds((step_hours * 3600.0).round() as i64);
    let mut ts = Vec::new();
    let mut boundaries: Vec<Range<usize>> = Vec::new();
    for w in weeks {
        let start = ts.len();
        for r in &w.day_ranges {
            let day_start = source_ts[r.start];
            let _ = source_step;
            for k in 0..steps_per_day.round() as i32 {
                ts.push(day_start + step * k);
            }
        }
        boundaries.push(start..ts.len());
    }
    Ok(TimeGrid::new(step_hours, ts, boundaries)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusMetrics {
    pub bus: String,
    pub peak_demand: f64,
    pub average_demand: f64,
    pub storage_energy: f64,
    pub storage_power: f64,
    /// Hours; absent when no storage power is built.
    pub ep_ratio: Option<f64>,
    pub new_capacity: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioMetrics {
    pub buses: Vec<BusMetrics>,
    pub total_storage_energy: f64,
    pub total_storage_power: f64,
    pub capital_cost: f64,
    pub dispatch_cost: f64,
    pub total_cost: f64,
}

/// Storage power below this is treated as not built.
pub const MIN_STORAGE_POWER: f64 = 1e-6;

impl ScenarioMetrics {
    pub fn compute(solution: &ExpansionSolution, demand: &DemandProfile) -> Self {
        let buses = solution
            .bus_ids
            .iter()
            .enumerate()
            .map(|(i, id)| BusMetrics {
                bus: id.clone(),
                peak_demand: demand.peak(id).unwrap_or(0.0),
                average_demand: demand.mean(id).unwrap_or(0.0),
                storage_energy: solution.storage_energy[i],
                storage_power: solution.storage_power[i],
                ep_ratio: solution.ratio(i, MIN_STORAGE_POWER),
                new_capacity: solution
                    .tech_names
                    .iter()
                    .zip(&solution.new_capacity[i])
                    .map(|(t, &c)| (t.clone(), c))
                    .collect(),
            })
            .collect();
        ScenarioMetrics {
            buses,
            total_storage_energy: solution.total_storage_energy(),
            total_storage_power: solution.total_storage_power(),
            capital_cost: solution.costs.capital(),
            dispatch_cost: solution.costs.dispatch(),
            total_cost: solution.costs.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverStats {
    pub status: LpStatus,
    pub iterations: usize,
    pub variables: usize,
    pub rows: usize,
    pub nonzeros: usize,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub mode: DemandMode,
    pub budget: CarbonBudget,
    pub problem: ExpansionProblem,
    pub solution: ExpansionSolution,
    pub audit: ConstraintReport,
    pub metrics: ScenarioMetrics,
    pub solver: SolverStats,
    pub seconds: f64,
    pub config: ScenarioConfig,
}

/// Builds, solves, decodes and audits one demand variant.
pub fn run_variant(
    prepared: &PreparedScenario,
    mode: DemandMode,
    budget: &CarbonBudget,
    options: &SolverOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let started = Instant::now();
    let inputs = prepared.inputs(mode, budget);
    let problem = expansion::build(&inputs)?;
    let solve_start = Instant::now();
    let lp_solution = lp::solve(&problem.lp, options)?;
    let solve_seconds = solve_start.elapsed().as_secs_f64();
    info!(
        "{} model: {:?} after {} iterations in {:.2} s",
        mode.short(),
        lp_solution.status,
        lp_solution.iterations,
        solve_seconds
    );
    match lp_solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            let rows = infeasible_rows(&problem, &lp_solution, options.tol_feas)
                .into_iter()
                .take(REPORTED_INFEASIBLE_ROWS)
                .map(|(name, v)| format!("{name} (off by {v:.3e})"))
                .collect();
            return Err(ScenarioError::Infeasible { mode, rows });
        }
        status => return Err(ScenarioError::SolverFailed { mode, status }),
    }
    let solution = decode(&problem, &lp_solution)?;
    let report = audit(&solution, &inputs, AUDIT_TOL)?;
    let metrics = ScenarioMetrics::compute(&solution, prepared.demand(mode));
    let solver = SolverStats {
        status: lp_solution.status,
        iterations: lp_solution.iterations,
        variables: problem.lp.num_vars(),
        rows: problem.lp.num_rows(),
        nonzeros: problem.lp.matrix.len(),
        solve_seconds,
    };
    Ok(ScenarioResult {
        mode,
        budget: budget.clone(),
        problem,
        solution,
        audit: report,
        metrics,
        solver,
        seconds: started.elapsed().as_secs_f64(),
        config: prepared.config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusDiff {
    pub bus: String,
    /// Heterogeneous minus homogeneous new capacity, GW.
    pub capacity_delta: BTreeMap<String, f64>,
    pub storage_energy_delta: f64,
    pub storage_power_delta: f64,
    pub ep_ratio_homogeneous: Option<f64>,
    pub ep_ratio_heterogeneous: Option<f64>,
}

/// Heterogeneous relative to homogeneous. Ratios are absent when the
/// homogeneous value is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffReport {
    pub buses: Vec<BusDiff>,
    pub total_storage_energy_delta: f64,
    pub total_storage_power_delta: f64,
    pub capital_cost_ratio: Option<f64>,
    pub dispatch_cost_ratio: Option<f64>,
    pub total_cost_ratio: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

impl DiffReport {
    pub fn between(homogeneous: &ScenarioResult, heterogeneous: &ScenarioResult) -> Self {
        let (a, b) = (&homogeneous.metrics, &heterogeneous.metrics);
        let buses = a
            .buses
            .iter()
            .zip(&b.buses)
            .map(|(x, y)| BusDiff {
                bus: x.bus.clone(),
                capacity_delta: x
                    .new_capacity
                    .iter()
                    .map(|(tech, c)| (tech.clone(), y.new_capacity.get(tech).copied().unwrap_or(0.0) - c))
                    .collect(),
                storage_energy_delta: y.storage_energy - x.storage_energy,
                storage_power_delta: y.storage_power - x.storage_power,
                ep_ratio_homogeneous: x.ep_ratio,
                ep_ratio_heterogeneous: y.ep_ratio,
            })
            .collect();
        DiffReport {
            buses,
            total_storage_energy_delta: b.total_storage_energy - a.total_storage_energy,
            total_storage_power_delta: b.total_storage_power - a.total_storage_power,
            capital_cost_ratio: ratio(b.capital_cost, a.capital_cost),
            dispatch_cost_ratio: ratio(b.dispatch_cost, a.dispatch_cost),
            total_cost_ratio: ratio(b.total_cost, a.total_cost),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairResult {
    pub homogeneous: ScenarioResult,
    pub heterogeneous: ScenarioResult,
    pub diff: DiffReport,
}

/// Solves both demand variants concurrently on identical inputs.
pub fn run_pair(
    prepared: &PreparedScenario,
    budget: &CarbonBudget,
    options: &SolverOptions,
) -> Result<PairResult, ScenarioError> {
    let (homo, het) = std::thread::scope(|scope| {
        let homo = scope.spawn(|| run_variant(prepared, DemandMode::Homogeneous, budget, options));
        let het = run_variant(prepared, DemandMode::Heterogeneous, budget, options);
        (homo.join().expect("homogeneous solve panicked"), het)
    });
    let homogeneous = homo?;
    let heterogeneous = het?;
    let diff = DiffReport::between(&homogeneous, &heterogeneous);
    Ok(PairResult { homogeneous, heterogeneous, diff })
}
