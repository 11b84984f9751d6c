//! Output bundles: CSV tables, the audit sidecar and the run manifest.
//!
//! Every bundle directory holds
//!
//! | file | header |
//! |------|--------|
//! | `capacity_expansion.csv` | `bus,technology,existing_gw,new_gw` |
//! | `storage.csv` | `bus,energy_gwh,power_gw,ep_hours` |
//! | `costs.csv` | `mode,budget,budget_tco2e,generation_capital,storage_energy_capital,storage_power_capital,capital,variable_dispatch,fixed_injection,dispatch,total` |
//! | `dispatch.csv` | `timestamp,step,week,` then per bus `demand_<bus>,gen_<bus>_<tech>...,fixed_<bus>,charge_<bus>,discharge_<bus>,soc_<bus>` and per line `flow_<line>` |
//! | `audit.json` | constraint residuals by family |
//! | `manifest.json` | provenance of the run |
//!
//! Values are written in shortest round-trip form, so identical inputs give
//! byte-identical CSV files.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use heatgrid::demand::{DemandMode, DemandProfile, TimeGrid};
use heatgrid::scenario::{PreparedScenario, ScenarioResult, SelectedWeek, SolverStats};
use heatgrid::series::TIMESTAMP_FORMAT;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const CAPACITY_FILE: &str = "capacity_expansion.csv";
pub const STORAGE_FILE: &str = "storage.csv";
pub const COSTS_FILE: &str = "costs.csv";
pub const DISPATCH_FILE: &str = "dispatch.csv";
pub const AUDIT_FILE: &str = "audit.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("{}: cannot open", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).with_context(|| format!("{}: read failed", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("{}: cannot write", path.display()))?;
    Ok(path)
}

pub fn capacity_csv(result: &ScenarioResult, prepared: &PreparedScenario) -> String {
    let s = &result.solution;
    let mut out = String::from("bus,technology,existing_gw,new_gw\n");
    for (i, bus) in prepared.network.buses.iter().enumerate() {
        for (g, tech) in s.tech_names.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", bus.id, tech, num(bus.existing(tech)), num(s.new_capacity[i][g]));
        }
    }
    out
}

pub fn storage_csv(result: &ScenarioResult) -> String {
    let mut out = String::from("bus,energy_gwh,power_gw,ep_hours\n");
    for b in &result.metrics.buses {
        let ep = b.ep_ratio.map(num).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", b.bus, num(b.storage_energy), num(b.storage_power), ep);
    }
    out
}

pub fn costs_csv(result: &ScenarioResult) -> String {
    let c = &result.solution.costs;
    let mut out = String::from(
        "mode,budget,budget_tco2e,generation_capital,storage_energy_capital,storage_power_capital,capital,\
         variable_dispatch,fixed_injection,dispatch,total\n",
    );
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{}",
        result.mode.short(),
        result.budget.label,
        num(result.budget.limit),
        num(c.generation_capital),
        num(c.storage_energy_capital),
        num(c.storage_power_capital),
        num(c.capital()),
        num(c.variable_dispatch),
        num(c.fixed_injection),
        num(c.dispatch()),
        num(c.total()),
    );
    out
}

pub fn dispatch_csv(result: &ScenarioResult, prepared: &PreparedScenario) -> String {
    let s = &result.solution;
    let grid = &prepared.grid;
    let demand = prepared.demand(result.mode);
    let mut out = String::from("timestamp,step,week");
    for bus in &s.bus_ids {
        let _ = write!(out, ",demand_{bus}");
        for tech in &s.tech_names {
            let _ = write!(out, ",gen_{bus}_{tech}");
        }
        let _ = write!(out, ",fixed_{bus},charge_{bus},discharge_{bus},soc_{bus}");
    }
    for line in &s.line_ids {
        let _ = write!(out, ",flow_{line}");
    }
    out.push('\n');
    for t in 0..grid.len() {
        let _ = write!(out, "{},{},{}", grid.timestamps[t].format(TIMESTAMP_FORMAT), t, grid.week_of(t));
        for (i, bus) in prepared.network.buses.iter().enumerate() {
            let d = demand.bus(&bus.id).expect("prepared demand covers every bus")[t];
            let _ = write!(out, ",{}", num(d));
            for g in 0..s.tech_names.len() {
                let _ = write!(out, ",{}", num(s.dispatch[i][g][t]));
            }
            let _ = write!(
                out,
                ",{},{},{},{}",
                num(bus.fixed_at(t)),
                num(s.charge(i, t)),
                num(s.discharge(i, t)),
                num(s.soc[i][t])
            );
        }
        for l in 0..s.line_ids.len() {
            let _ = write!(out, ",{}", num(s.flow(l, t)));
        }
        out.push('\n');
    }
    out
}

/// Wide demand table: `timestamp,step,week,<bus>...`.
pub fn demand_csv(profile: &DemandProfile, grid: &TimeGrid) -> String {
    let mut out = String::from("timestamp,step,week");
    for bus in profile.per_bus.keys() {
        let _ = write!(out, ",{bus}");
    }
    out.push('\n');
    for t in 0..grid.len() {
        let _ = write!(out, "{},{},{}", grid.timestamps[t].format(TIMESTAMP_FORMAT), t, grid.week_of(t));
        for series in profile.per_bus.values() {
            let _ = write!(out, ",{}", num(series[t]));
        }
        out.push('\n');
    }
    out
}

/// `mode,bus,peak_gw,average_gw`.
pub fn demand_summary_csv(prepared: &PreparedScenario) -> String {
    let mut out = String::from("mode,bus,peak_gw,average_gw\n");
    for mode in [DemandMode::Homogeneous, DemandMode::Heterogeneous] {
        let profile = prepared.demand(mode);
        for bus in profile.per_bus.keys() {
            let peak = profile.peak(bus).unwrap_or(0.0);
            let mean = profile.mean(bus).unwrap_or(0.0);
            let _ = writeln!(out, "{},{},{},{}", mode.short(), bus, num(peak), num(mean));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeekSummary {
    pub month: u32,
    pub critical_time: String,
    /// `wind − demand` at the critical hour, GW.
    pub min_net_demand_gw: Option<f64>,
    /// `demand − wind` at the same hour, GW.
    pub max_residual_demand_gw: Option<f64>,
    pub first_day: String,
    pub last_day: String,
    pub wrapped: bool,
}

impl WeekSummary {
    pub fn from_week(w: &SelectedWeek) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        WeekSummary {
            month: w.month,
            critical_time: w.critical_time.format(TIMESTAMP_FORMAT).to_string(),
            min_net_demand_gw: finite(w.min_net_demand),
            max_residual_demand_gw: finite(w.max_residual_demand),
            first_day: w.days.first().map(|d| d.to_string()).unwrap_or_default(),
            last_day: w.days.last().map(|d| d.to_string()).unwrap_or_default(),
            wrapped: w.wrapped,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetInfo {
    pub label: String,
    pub limit_tco2e: f64,
    pub scope: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command_line: Vec<String>,
    pub scenario: String,
    /// SHA-256 of the scenario file.
    pub config_hash: String,
    pub mode: Option<String>,
    pub budget: Option<BudgetInfo>,
    pub step_hours: f64,
    pub weeks: Vec<WeekSummary>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub solver: Option<SolverStats>,
}

/// Run-wide facts shared by every bundle of one command.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub command_line: Vec<String>,
    pub scenario_path: PathBuf,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub started_unix_seconds: u64,
    pub started: std::time::Instant,
}

impl RunContext {
    pub fn new(scenario_path: &Path, prepared: &PreparedScenario) -> Result<Self> {
        let mut inputs = Vec::new();
        for file in &prepared.files {
            inputs.push(FileDigest { path: file.display().to_string(), sha256: sha256_file(file)? });
        }
        Ok(RunContext {
            command_line: std::env::args().collect(),
            scenario_path: scenario_path.to_path_buf(),
            config_hash: sha256_file(scenario_path)?,
            inputs,
            started_unix_seconds: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            started: std::time::Instant::now(),
        })
    }

    fn manifest(
        &self,
        prepared: &PreparedScenario,
        result: Option<&ScenarioResult>,
        outputs: &[PathBuf],
    ) -> Result<RunManifest> {
        let outputs = outputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(RunManifest {
            tool: "heatgrid".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command_line: self.command_line.clone(),
            scenario: self.scenario_path.display().to_string(),
            config_hash: self.config_hash.clone(),
            mode: result.map(|r| r.mode.short().to_string()),
            budget: result.map(|r| BudgetInfo {
                label: r.budget.label.clone(),
                limit_tco2e: r.budget.limit,
                scope: format!("{:?}", r.budget.scope).to_lowercase(),
            }),
            step_hours: prepared.grid.step_hours,
            weeks: prepared.weeks.iter().map(WeekSummary::from_week).collect(),
            inputs: self.inputs.clone(),
            outputs,
            started_unix_seconds: self.started_unix_seconds,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            solver: result.map(|r| r.solver.clone()),
        })
    }

    fn write_manifest(
        &self,
        dir: &Path,
        prepared: &PreparedScenario,
        result: Option<&ScenarioResult>,
        outputs: &[PathBuf],
    ) -> Result<PathBuf> {
        let manifest = self.manifest(prepared, result, outputs)?;
        write_file(dir, MANIFEST_FILE, &(serde_json::to_string_pretty(&manifest)? + "\n"))
    }
}

/// Writes the six-file bundle of one solved variant into `dir`.
pub fn write_bundle(
    dir: &Path,
    ctx: &RunContext,
    prepared: &PreparedScenario,
    result: &ScenarioResult,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("{}: cannot create directory", dir.display()))?;
    let mut files = vec![
        write_file(dir, CAPACITY_FILE, &capacity_csv(result, prepared))?,
        write_file(dir, STORAGE_FILE, &storage_csv(result))?,
        write_file(dir, COSTS_FILE, &costs_csv(result))?,
        write_file(dir, DISPATCH_FILE, &dispatch_csv(result, prepared))?,
        write_file(dir, AUDIT_FILE, &(serde_json::to_string_pretty(&result.audit)? + "\n"))?,
    ];
    let manifest = ctx.write_manifest(dir, prepared, Some(result), &files)?;
    files.push(manifest);
    Ok(files)
}

/// Writes both demand variants and their summary into `dir`.
pub fn write_demand_bundle(dir: &Path, ctx: &RunContext, prepared: &PreparedScenario) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("{}: cannot create directory", dir.display()))?;
    let mut files = Vec::new();
    for mode in [DemandMode::Homogeneous, DemandMode::Heterogeneous] {
        let name = format!("demand_{}.csv", mode.short());
        files.push(write_file(dir, &name, &demand_csv(prepared.demand(mode), &prepared.grid))?);
    }
    files.push(write_file(dir, "demand_summary.csv", &demand_summary_csv(prepared))?);
    let manifest = ctx.write_manifest(dir, prepared, None, &files)?;
    files.push(manifest);
    Ok(files)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    write_file(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
}
