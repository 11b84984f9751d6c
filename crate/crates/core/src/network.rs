//! Buses, lines and the DC power-flow data derived from them.
//!
//! Per-unit base is 1 GW; angles are radians, so a line carries
//! `B · (δ_from − δ_to)` GW.
//!
//! # Configuration file
//!
//! ```toml
//! slack_bus = "london"
//! per_km_reactance_pct = 0.019        # used by lines that give length_km only
//!
//! [[buses]]
//! id = "london"
//! population_share = 0.14
//! existing_capacity = { ccgt = 6.0, onshore_wind = 0.5 }
//! availability = { onshore_wind = "series/london_onshore_wind.csv" }
//!
//! [[buses.fixed_injections]]
//! name = "interconnector"
//! price = 11000.0                     # $/GWh
//! file = "series/london_interconnector.csv"
//!
//! [[lines]]
//! id = "london-manchester"
//! from_bus = "london"
//! to_bus = "manchester"
//! thermal_limit = 5.0                 # GW
//! length_km = 262.0                   # or: reactance = 0.0498
//! ```
//!
//! Series paths are relative to the configuration file and use the
//! `timestamp,value` CSV layout of [`crate::series`]. All series in one
//! network must share the same timestamps.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{self, SeriesError};

pub const DEFAULT_PER_KM_REACTANCE_PCT: f64 = 0.019;
const SHARE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("line `{line}` references unknown bus `{bus}`")]
    DanglingEndpoint { line: String, bus: String },
    #[error("line `{line}` has non-positive reactance {value}")]
    NonPositiveReactance { line: String, value: f64 },
    #[error("{0} must be positive")]
    NonPositiveInput(&'static str),
    #[error("network is not connected: bus `{0}` cannot be reached from the slack bus")]
    Disconnected(String),
    #[error("slack bus `{0}` does not exist")]
    UnknownSlack(String),
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
}

/// Exogenous, non-dispatchable injection such as nuclear or imports.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedInjection {
    pub name: String,
    /// $/GWh.
    pub price: f64,
    /// GW per step.
    pub series: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub population_share: f64,
    /// GW by technology name.
    pub existing_capacity: BTreeMap<String, f64>,
    /// Availability fraction per step by technology name. Technologies
    /// without an entry are fully available.
    pub availability: BTreeMap<String, Vec<f64>>,
    pub fixed_injections: Vec<FixedInjection>,
}

impl Bus {
    pub fn new(id: impl Into<String>, population_share: f64) -> Self {
        Bus {
            id: id.into(),
            population_share,
            existing_capacity: BTreeMap::new(),
            availability: BTreeMap::new(),
            fixed_injections: Vec::new(),
        }
    }

    pub fn existing(&self, tech: &str) -> f64 {
        self.existing_capacity.get(tech).copied().unwrap_or(0.0)
    }

    pub fn availability_at(&self, tech: &str, t: usize) -> f64 {
        self.availability.get(tech).map_or(1.0, |s| s[t])
    }

    /// Total fixed injection at step `t`, GW.
    pub fn fixed_at(&self, t: usize) -> f64 {
        self.fixed_injections.iter().map(|f| f.series[t]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Per unit.
    pub reactance: f64,
    /// GW.
    pub thermal_limit: f64,
    pub length_km: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub slack_bus: String,
}

pub fn susceptance(line: &Line) -> Result<f64, NetworkError> {
    if !(line.reactance > 0.0) {
        return Err(NetworkError::NonPositiveReactance {
            line: line.id.clone(),
            value: line.reactance,
        });
    }
    Ok(1.0 / line.reactance)
}

/// `per_km` is in percent per unit per km.
pub fn reactance_from_length(length_km: f64, per_km: f64) -> Result<f64, NetworkError> {
    if !(length_km > 0.0) || !length_km.is_finite() {
        return Err(NetworkError::NonPositiveInput("line length"));
    }
    if !(per_km > 0.0) || !per_km.is_finite() {
        return Err(NetworkError::NonPositiveInput("per-km reactance"));
    }
    Ok(length_km * per_km / 100.0)
}

/// Buses × lines incidence: +1 where a line originates, −1 where it ends.
pub fn bus_line_matrix(network: &NetworkSpec) -> Result<Vec<Vec<i8>>, NetworkError> {
    let mut m = vec![vec![0i8; network.lines.len()]; network.buses.len()];
    for (l, line) in network.lines.iter().enumerate() {
        let from = network.bus_index(&line.from_bus).ok_or_else(|| {
            NetworkError::DanglingEndpoint { line: line.id.clone(), bus: line.from_bus.clone() }
        })?;
        let to = network.bus_index(&line.to_bus).ok_or_else(|| {
            NetworkError::DanglingEndpoint { line: line.id.clone(), bus: line.to_bus.clone() }
        })?;
        m[from][l] = 1;
        m[to][l] = -1;
    }
    Ok(m)
}

impl NetworkSpec {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.bus_index(&self.slack_bus)
    }

    /// `(from, to)` bus indices of each line.
    pub fn endpoints(&self) -> Result<Vec<(usize, usize)>, NetworkError> {
        let m = bus_line_matrix(self)?;
        Ok((0..self.lines.len())
            .map(|l| {
                let from = (0..self.buses.len()).find(|&i| m[i][l] == 1).unwrap();
                let to = (0..self.buses.len()).find(|&i| m[i][l] == -1).unwrap();
                (from, to)
            })
            .collect())
    }

    /// Common length of every availability and injection series, if any.
    pub fn series_len(&self) -> Option<usize> {
        self.buses
            .iter()
            .flat_map(|b| {
                b.availability.values().map(Vec::len).chain(b.fixed_injections.iter().map(|f| f.series.len()))
            })
            .next()
    }

    /// Applies `f` to every per-step series.
    pub fn map_series(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> NetworkSpec {
        let mut out = self.clone();
        for bus in &mut out.buses {
            for s in bus.availability.values_mut() {
                *s = f(s);
            }
            for inj in &mut bus.fixed_injections {
                inj.series = f(&inj.series);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let invalid = |m: String| Err(NetworkError::Invalid(m));
        if self.buses.is_empty() {
            return invalid("no buses".into());
        }
        let mut share_sum = 0.0;
        for (k, bus) in self.buses.iter().enumerate() {
            if self.buses[..k].iter().any(|b| b.id == bus.id) {
                return invalid(format!("duplicate bus id `{}`", bus.id));
            }
            if !(0.0..=1.0).contains(&bus.population_share) {
                return invalid(format!(
                    "bus `{}`: population share {} outside [0, 1]",
                    bus.id, bus.population_share
                ));
            }
            share_sum += bus.population_share;
            for (tech, &c) in &bus.existing_capacity {
                if !(c >= 0.0) || !c.is_finite() {
                    return invalid(format!("bus `{}`: existing {tech} capacity {c} < 0", bus.id));
                }
            }
            for (tech, s) in &bus.availability {
                if let Some(v) = s.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return invalid(format!("bus `{}`: {tech} availability {v} outside [0, 1]", bus.id));
                }
            }
            for inj in &bus.fixed_injections {
                if !(inj.price >= 0.0) || !inj.price.is_finite() {
                    return invalid(format!("bus `{}`: {} price must be >= 0", bus.id, inj.name));
                }
                if let Some(v) = inj.series.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                    return invalid(format!("bus `{}`: {} injection {v} < 0", bus.id, inj.name));
                }
            }
        }
        if share_sum > 1.0 + SHARE_TOL {
            return invalid(format!("population shares sum to {share_sum} > 1"));
        }
        if let Some(n) = self.series_len() {
            for bus in &self.buses {
                let lens = bus.availability.values().map(Vec::len);
                let lens = lens.chain(bus.fixed_injections.iter().map(|f| f.series.len()));
                if lens.into_iter().any(|len| len != n) {
                    return invalid(format!("bus `{}`: series lengths differ from {n}", bus.id));
                }
            }
        }
        for (k, line) in self.lines.iter().enumerate() {
            if self.lines[..k].iter().any(|l| l.id == line.id) {
                return invalid(format!("duplicate line id `{}`", line.id));
            }
            if line.from_bus == line.to_bus {
                return invalid(format!("line `{}` starts and ends at `{}`", line.id, line.from_bus));
            }
            susceptance(line)?;
            if !(line.thermal_limit > 0.0) {
                return invalid(format!("line `{}` thermal limit must be > 0", line.id));
            }
        }
        let endpoints = self.endpoints()?;
        let slack = self.slack_index().ok_or_else(|| NetworkError::UnknownSlack(self.slack_bus.clone()))?;

        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(i) = queue.pop_front() {
            for &(a, b) in &endpoints {
                let next = if a == i { b } else if b == i { a } else { continue };
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(NetworkError::Disconnected(self.buses[i].id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    slack_bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    per_km_reactance_pct: Option<f64>,
    buses: Vec<BusFile>,
    #[serde(default)]
    lines: Vec<LineFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusFile {
    id: String,
    population_share: f64,
    #[serde(default)]
    existing_capacity: BTreeMap<String, f64>,
    #[serde(default)]
    availability: BTreeMap<String, PathBuf>,
    #[serde(default)]
    fixed_injections: Vec<InjectionFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InjectionFile {
    name: String,
    price: f64,
    file: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineFile {
    id: String,
    from_bus: String,
    to_bus: String,
    thermal_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reactance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length_km: Option<f64>,
}

/// A network read from disk together with the timestamps of its series.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedNetwork {
    pub network: NetworkSpec,
    pub timestamps: Vec<NaiveDateTime>,
    /// Every file that was read, configuration first.
    pub files: Vec<PathBuf>,
}

impl NetworkSpec {
    pub fn load(path: &Path) -> Result<LoadedNetwork, NetworkError> {
        let config_err = |message: String| NetworkError::Config { path: path.into(), message };
        let text = std::fs::read_to_string(path).map_err(|e| config_err(e.to_string()))?;
        let file: NetworkFile = toml::from_str(&text).map_err(|e| config_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let per_km = file.per_km_reactance_pct.unwrap_or(DEFAULT_PER_KM_REACTANCE_PCT);

        let mut files = vec![path.to_path_buf()];
        let mut timestamps: Option<Vec<NaiveDateTime>> = None;
        let mut read = |rel: &Path| -> Result<Vec<f64>, NetworkError> {
            let full = base.join(rel);
            let s = series::read_time_series(&full)?;
            match &timestamps {
                None => timestamps = Some(s.timestamps),
                Some(ts) if *ts != s.timestamps => {
                    return Err(NetworkError::Config {
                        path: full,
                        message: "timestamps differ from the other network series".into(),
                    })
                }
                Some(_) => {}
            }
            files.push(full);
            Ok(s.values)
        };

        let mut buses = Vec::new();
        for b in file.buses {
            let mut bus = Bus::new(b.id, b.population_share);
            bus.existing_capacity = b.existing_capacity;
            for (tech, rel) in b.availability {
                bus.availability.insert(tech, read(&rel)?);
            }
            for inj in b.fixed_injections {
                let series = read(&inj.file)?;
                bus.fixed_injections.push(FixedInjection { name: inj.name, price: inj.price, series });
            }
            buses.push(bus);
        }
        let mut lines = Vec::new();
        for l in file.lines {
            let reactance = match (l.reactance, l.length_km) {
                (Some(x), _) => x,
                (None, Some(km)) => reactance_from_length(km, per_km)?,
                (None, None) => {
                    return Err(config_err(format!("line `{}` needs reactance or length_km", l.id)))
                }
            };
            lines.push(Line {
                id: l.id,
                from_bus: l.from_bus,
                to_bus: l.to_bus,
                reactance,
                thermal_limit: l.thermal_limit,
                length_km: l.length_km,
            });
        }
        let network = NetworkSpec { buses, lines, slack_bus: file.slack_bus };
        network.validate()?;
        Ok(LoadedNetwork { network, timestamps: timestamps.unwrap_or_default(), files })
    }

    /// Writes `network.toml` and one CSV per series under `dir`.
    pub fn save(&self, dir: &Path, timestamps: &[NaiveDateTime]) -> Result<PathBuf, NetworkError> {
        let config_path = dir.join("network.toml");
        let mut buses = Vec::new();
        for bus in &self.buses {
            let mut availability = BTreeMap::new();
            for (tech, s) in &bus.availability {
                let rel = PathBuf::from(format!("series/{}_{}.csv", bus.id, tech));
                series::write_time_series(&dir.join(&rel), "availability", timestamps, s)?;
                availability.insert(tech.clone(), rel);
            }
            let mut fixed_injections = Vec::new();
            for inj in &bus.fixed_injections {
                let file = PathBuf::from(format!("series/{}_{}.csv", bus.id, inj.name));
                series::write_time_series(&dir.join(&file), "injection_gw", timestamps, &inj.series)?;
                fixed_injections.push(InjectionFile { name: inj.name.clone(), price: inj.price, file });
            }
            buses.push(BusFile {
                id: bus.id.clone(),
                population_share: bus.population_share,
                existing_capacity: bus.existing_capacity.clone(),
                availability,
                fixed_injections,
            });
        }
        let lines = self
            .lines
            .iter()
            .map(|l| LineFile {
                id: l.id.clone(),
                from_bus: l.from_bus.clone(),
                to_bus: l.to_bus.clone(),
                thermal_limit: l.thermal_limit,
                reactance: Some(l.reactance),
                length_km: l.length_km,
            })
            .collect();
        let file = NetworkFile { slack_bus: self.slack_bus.clone(), per_km_reactance_pct: None, buses, lines };
        let text = toml::to_string(&file).map_err(|e| NetworkError::Config {
            path: config_path.clone(),
            message: e.to_string(),
        })?;
        std::fs::write(&config_path, text).map_err(|e| NetworkError::Config {
            path: config_path.clone(),
            message: e.to_string(),
        })?;
        Ok(config_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, from: &str, to: &str) -> Line {
        Line {
            id: id.into(),
            from_bus: from.into(),
            to_bus: to.into(),
            reactance: 0.05,
            thermal_limit: 5.0,
            length_km: None,
        }
    }

    fn triangle() -> NetworkSpec {
        NetworkSpec {
            buses: vec![Bus::new("a", 0.3), Bus::new("b", 0.3), Bus::new("c", 0.3)],
            lines: vec![line("ab", "a", "b"), line("bc", "b", "c"), line("ca", "c", "a")],
            slack_bus: "a".into(),
        }
    }

    #[test]
    fn incidence_two_bus() {
        let net = NetworkSpec {
            buses: vec![Bus::new("A", 0.5), Bus::new("B", 0.5)],
            lines: vec![line("l", "A", "B")],
            slack_bus: "A".into(),
        };
        assert_eq!(bus_line_matrix(&net).unwrap(), vec![vec![1], vec![-1]]);
    }

    #[test]
    fn incidence_triangle_rows_and_columns() {
        let m = bus_line_matrix(&triangle()).unwrap();
        for row in &m {
            assert_eq!(row.iter().filter(|&&v| v == 1).count(), 1);
            assert_eq!(row.iter().filter(|&&v| v == -1).count(), 1);
        }
        for l in 0..3 {
            assert_eq!(m.iter().map(|r| r[l] as i32).sum::<i32>(), 0);
        }
    }

    #[test]
    fn dangling_endpoint() {
        let mut net = triangle();
        net.lines[1].to_bus = "zz".into();
        assert!(matches!(bus_line_matrix(&net), Err(NetworkError::DanglingEndpoint { .. })));
    }

    #[test]
    fn susceptance_values() {
        let mut l = line("x", "a", "b");
        l.reactance = 0.5;
        assert_eq!(susceptance(&l).unwrap(), 2.0);
        l.reactance = reactance_from_length(540.0, 0.019).unwrap();
        assert!((l.reactance - 0.1026).abs() < 1e-12);
        assert!((susceptance(&l).unwrap() - 9.746588693957115).abs() < 1e-9);
        l.reactance = 0.0;
        assert!(matches!(susceptance(&l), Err(NetworkError::NonPositiveReactance { .. })));
    }

    #[test]
    fn reactance_from_length_values() {
        assert!((reactance_from_length(100.0, 0.019).unwrap() - 0.019).abs() < 1e-15);
        assert!(reactance_from_length(0.0, 0.019).is_err());
        assert!(reactance_from_length(10.0, -1.0).is_err());
    }

    #[test]
    fn validation_catches_structure_errors() {
        assert!(triangle().validate().is_ok());

        let mut net = triangle();
        net.lines.truncate(0);
        assert!(matches!(net.validate(), Err(NetworkError::Disconnected(_))));

        let mut net = triangle();
        net.slack_bus = "q".into();
        assert!(matches!(net.validate(), Err(NetworkError::UnknownSlack(_))));

        let mut net = triangle();
        net.buses[0].population_share = 0.5;
        assert!(net.validate().is_err());

        let mut net = triangle();
        net.lines[0].to_bus = "a".into();
        assert!(net.validate().is_err());

        let mut net = triangle();
        net.buses[1].availability.insert("wind".into(), vec![0.5, 1.2]);
        assert!(net.validate().is_err());
    }
}
