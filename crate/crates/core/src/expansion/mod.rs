//! Generation, storage and dispatch expansion as a linear program.
//!
//! # Variables
//!
//! For every step `t` and bus `i`, in this order: one dispatch variable per
//! technology, the seven power splits `g2n g2d g2s n2s n2d s2n s2d`, `soc`,
//! `net` (free) and `angle` (free; fixed at 0 on the slack bus). Then for
//! every line `l` at step `t`: `fp` and `fm`. After all steps: `cnew` per
//! bus and technology, `socmax` and `pmax` per bus, and `soc0` per bus and
//! week.
//!
//! # Rows
//!
//! For every step and bus: `gensplit`, `netbal`, `bal`, `demand`, `chg`,
//! `dis`, `socbox`, `soc`, then one `genlim` per technology. For every line
//! and step: `dcpf` and `flowlim`. Then `period` per bus and week,
//! `ratiomin` and `ratiomax` per bus, and the carbon rows (one joint row,
//! or one per week).
//!
//! With `N` buses, `G` technologies, `L` lines, `T` steps, `W` weeks and
//! `K` carbon rows:
//!
//! ```text
//! vars = T·(N·(G + 10) + 2L) + N·G + 2N + N·W
//! rows = T·(N·(8 + G) + 2L) + N·W + 2N + K
//! ```
//!
//! so one bus, one technology, one step has 15 variables and 13 rows.
//!
//! Names follow `kind[bus,t]`, `kind[bus,tech,t]`, `kind[line,t]`,
//! `kind[bus]`, `kind[bus,tech]` and `kind[bus,w]`, with `t` the global step
//! index and `w` the week index.
//!
//! # Conventions
//!
//! * `net = g2n + η·s2n − n2s − n2d` and `demand = g2d + η·s2d + n2d`:
//!   efficiency is applied on discharge, charging is lossless.
//! * `bal`: `net[i] = Σ_l L[i][l]·(fp[l] − fm[l])`, so a positive `net`
//!   exports to the network.
//! * Fixed injections enter `gensplit` alongside dispatch; their energy cost
//!   is a constant objective offset.
//! * Within a week, `soc` at the first step equals `soc0` and each later
//!   step adds the previous step's charge minus discharge times τ. The state
//!   after the last step of the week, obtained the same way, returns to
//!   `soc0`.
//! * A zero carbon budget fixes emitting dispatch to zero outright.

mod audit;
mod build;
mod decode;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{DemandProfile, TimeGrid};
use crate::lp::{LpProblem, LpStatus};
use crate::network::{NetworkError, NetworkSpec};

pub use audit::{audit, ConstraintReport, FamilyResidual};
pub use build::{build, infeasible_rows};
pub use decode::decode;

pub const DEFAULT_PERIODS_PER_YEAR: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("time grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unknown technology `{tech}` at bus `{bus}`")]
    UnknownTech { bus: String, tech: String },
    #[error("network is not connected: bus `{0}` is isolated from the slack bus")]
    DisconnectedNetwork(String),
    #[error("no demand series for bus `{0}`")]
    MissingDemand(String),
    #[error("invalid model input: {0}")]
    Invalid(String),
    #[error("lifetime must be positive, got {0}")]
    NonPositiveLifetime(f64),
    #[error("solution is not optimal (status {0:?})")]
    NotOptimal(LpStatus),
    #[error("decoded objective {decoded} differs from solver objective {solver}")]
    ObjectiveMismatch { decoded: f64, solver: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Network(NetworkError),
}

impl From<NetworkError> for ExpansionError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Disconnected(bus) => ExpansionError::DisconnectedNetwork(bus),
            other => ExpansionError::Network(other),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorTech {
    pub name: String,
    /// $/GWh.
    pub dispatch_cost: f64,
    /// $/GW nameplate.
    pub capital_cost: f64,
    /// tCO₂e/GWh.
    pub emission_intensity: f64,
    pub lifetime_years: f64,
    #[serde(default = "default_true")]
    pub expandable: bool,
    /// Variable output following an availability series. Other
    /// technologies must be fully available at every step.
    #[serde(default)]
    pub renewable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSpec {
    /// $/GWh.
    pub energy_capital_cost: f64,
    /// $/GW.
    pub power_capital_cost: f64,
    pub efficiency: f64,
    /// Hours.
    #[serde(default = "StorageSpec::default_ratio_min")]
    pub ratio_min: f64,
    #[serde(default = "StorageSpec::default_ratio_max")]
    pub ratio_max: f64,
    pub lifetime_years: f64,
}

impl StorageSpec {
    fn default_ratio_min() -> f64 {
        1.0
    }

    fn default_ratio_max() -> f64 {
        4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetScope {
    /// One limit over the whole horizon.
    #[default]
    Joint,
    /// The limit is split across weeks in proportion to their length.
    PerWeek,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonBudget {
    /// tCO₂e over the modelled horizon.
    pub limit: f64,
    pub label: String,
    #[serde(default)]
    pub scope: BudgetScope,
}

/// `cost / (lifetime · periods_per_year)`.
pub fn amortized_capital(
    cost_per_unit: f64,
    lifetime_years: f64,
    periods_per_year: f64,
) -> Result<f64, ExpansionError> {
    if !(lifetime_years > 0.0) {
        return Err(ExpansionError::NonPositiveLifetime(lifetime_years));
    }
    if !(periods_per_year > 0.0) {
        return Err(ExpansionError::Invalid(format!(
            "periods per year must be positive, got {periods_per_year}"
        )));
    }
    Ok(cost_per_unit / (lifetime_years * periods_per_year))
}

/// Everything `build` and `audit` read.
#[derive(Debug, Clone, Copy)]
pub struct ModelInputs<'a> {
    pub network: &'a NetworkSpec,
    pub demand: &'a DemandProfile,
    pub techs: &'a [GeneratorTech],
    pub storage: &'a StorageSpec,
    pub budget: &'a CarbonBudget,
    pub grid: &'a TimeGrid,
    pub periods_per_year: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    G2n,
    G2d,
    G2s,
    N2s,
    N2d,
    S2n,
    S2d,
}

impl Split {
    pub const ALL: [Split; 7] =
        [Split::G2n, Split::G2d, Split::G2s, Split::N2s, Split::N2d, Split::S2n, Split::S2d];

    pub fn label(self) -> &'static str {
        match self {
            Split::G2n => "g2n",
            Split::G2d => "g2d",
            Split::G2s => "g2s",
            Split::N2s => "n2s",
            Split::N2d => "n2d",
            Split::S2n => "s2n",
            Split::S2d => "s2d",
        }
    }
}

/// Column positions of every model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    pub buses: usize,
    pub techs: usize,
    pub lines: usize,
    pub steps: usize,
    pub weeks: usize,
}

impl VarIndex {
    const PER_BUS_EXTRA: usize = 10;

    fn per_bus(&self) -> usize {
        self.techs + Self::PER_BUS_EXTRA
    }

    fn stride(&self) -> usize {
        self.buses * self.per_bus() + 2 * self.lines
    }

    fn bus_base(&self, t: usize, i: usize) -> usize {
        t * self.stride() + i * self.per_bus()
    }

    fn capacity_base(&self) -> usize {
        self.steps * self.stride()
    }

    pub fn gen(&self, t: usize, i: usize, g: usize) -> usize {
        self.bus_base(t, i) + g
    }

    pub fn split(&self, t: usize, i: usize, s: Split) -> usize {
        self.bus_base(t, i) + self.techs + s as usize
    }

    pub fn soc(&self, t: usize, i: usize) -> usize {
        self.bus_base(t, i) + self.techs + 7
    }

    pub fn net(&self, t: usize, i: usize) -> usize {
        self.bus_base(t, i) + self.techs + 8
    }

    pub fn angle(&self, t: usize, i: usize) -> usize {
        self.bus_base(t, i) + self.techs + 9
    }

    pub fn flow_pos(&self, t: usize, l: usize) -> usize {
        t * self.stride() + self.buses * self.per_bus() + 2 * l
    }

    pub fn flow_neg(&self, t: usize, l: usize) -> usize {
        self.flow_pos(t, l) + 1
    }

    pub fn cnew(&self, i: usize, g: usize) -> usize {
        self.capacity_base() + i * self.techs + g
    }

    pub fn socmax(&self, i: usize) -> usize {
        self.capacity_base() + self.buses * self.techs + i
    }

    pub fn pmax(&self, i: usize) -> usize {
        self.capacity_base() + self.buses * self.techs + self.buses + i
    }

    pub fn soc0(&self, i: usize, w: usize) -> usize {
        self.capacity_base() + self.buses * (self.techs + 2) + i * self.weeks + w
    }

    pub fn num_vars(&self) -> usize {
        expected_vars(self.buses, self.techs, self.lines, self.steps, self.weeks)
    }
}

pub fn expected_vars(n: usize, g: usize, l: usize, t: usize, w: usize) -> usize {
    t * (n * (g + 10) + 2 * l) + n * g + 2 * n + n * w
}

pub fn expected_rows(n: usize, g: usize, l: usize, t: usize, w: usize, carbon_rows: usize) -> usize {
    t * (n * (8 + g) + 2 * l) + n * w + 2 * n + carbon_rows
}

/// Cost data carried from build to decode.
#[derive(Debug, Clone, PartialEq)]
pub struct CostData {
    /// $/GWh per technology.
    pub dispatch: Vec<f64>,
    /// Amortised $/GW per technology.
    pub capital: Vec<f64>,
    /// Amortised $/GWh.
    pub storage_energy: f64,
    /// Amortised $/GW.
    pub storage_power: f64,
    /// Constant cost of fixed injections.
    pub fixed_injection: f64,
}

#[derive(Debug, Clone)]
pub struct ExpansionProblem {
    pub lp: LpProblem,
    pub index: VarIndex,
    pub bus_ids: Vec<String>,
    pub tech_names: Vec<String>,
    pub line_ids: Vec<String>,
    pub step_hours: f64,
    pub weeks: Vec<Range<usize>>,
    pub efficiency: f64,
    pub costs: CostData,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub generation_capital: f64,
    pub storage_energy_capital: f64,
    pub storage_power_capital: f64,
    pub variable_dispatch: f64,
    pub fixed_injection: f64,
}

impl CostBreakdown {
    pub fn capital(&self) -> f64 {
        self.generation_capital + self.storage_energy_capital + self.storage_power_capital
    }

    pub fn dispatch(&self) -> f64 {
        self.variable_dispatch + self.fixed_injection
    }

    pub fn total(&self) -> f64 {
        self.capital() + self.dispatch()
    }
}

/// Decoded optimum. Series are indexed `[bus][..][t]` or `[line][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSolution {
    pub bus_ids: Vec<String>,
    pub tech_names: Vec<String>,
    pub line_ids: Vec<String>,
    pub step_hours: f64,
    pub weeks: Vec<Range<usize>>,
    pub efficiency: f64,
    /// GW, `[bus][tech][t]`.
    pub dispatch: Vec<Vec<Vec<f64>>>,
    /// GW, `[bus][tech]`.
    pub new_capacity: Vec<Vec<f64>>,
    /// GWh per bus.
    pub storage_energy: Vec<f64>,
    /// GW per bus.
    pub storage_power: Vec<f64>,
    /// GWh, `[bus][t]`.
    pub soc: Vec<Vec<f64>>,
    /// GWh, `[bus][week]`.
    pub soc_initial: Vec<Vec<f64>>,
    pub flow_pos: Vec<Vec<f64>>,
    pub flow_neg: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    pub net_injection: Vec<Vec<f64>>,
    /// GW, `[bus][split][t]` in [`Split::ALL`] order.
    pub splits: Vec<Vec<Vec<f64>>>,
    pub costs: CostBreakdown,
    pub objective: f64,
}

impl ExpansionSolution {
    pub fn split(&self, i: usize, s: Split) -> &[f64] {
        &self.splits[i][s as usize]
    }

    pub fn charge(&self, i: usize, t: usize) -> f64 {
        self.split(i, Split::G2s)[t] + self.split(i, Split::N2s)[t]
    }

    pub fn discharge(&self, i: usize, t: usize) -> f64 {
        self.split(i, Split::S2n)[t] + self.split(i, Split::S2d)[t]
    }

    /// State of charge after the last step of week `w`.
    pub fn soc_final(&self, i: usize, w: usize) -> f64 {
        let last = self.weeks[w].end - 1;
        self.soc[i][last] + self.step_hours * (self.charge(i, last) - self.discharge(i, last))
    }

    pub fn flow(&self, l: usize, t: usize) -> f64 {
        self.flow_pos[l][t] - self.flow_neg[l][t]
    }

    /// Energy-to-power ratio in hours, when power is above `min_power`.
    pub fn ratio(&self, i: usize, min_power: f64) -> Option<f64> {
        (self.storage_power[i] > min_power).then(|| self.storage_energy[i] / self.storage_power[i])
    }

    pub fn total_storage_energy(&self) -> f64 {
        self.storage_energy.iter().sum()
    }

    pub fn total_storage_power(&self) -> f64 {
        self.storage_power.iter().sum()
    }

    pub fn tech_index(&self, name: &str) -> Option<usize> {
        self.tech_names.iter().position(|n| n == name)
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_ids.iter().position(|b| b == id)
    }
}
