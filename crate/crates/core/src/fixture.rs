//! Deterministic synthetic 3-bus data set for one calendar year.
//!
//! Buses: `north` (windy, hosts nuclear), `coast` (mild, hosts an
//! interconnector) and `inland` (cold, the main load centre). Temperature
//! areas cover the three buses plus a mild `rest` area for the remainder
//! of the country. Cold snaps are planted with calm wind so the stress
//! weeks are known in advance.
//!
//! Output layout under the target directory:
//!
//! ```text
//! network.toml
//! series/<bus>_<tech>.csv          availability and fixed injections
//! base_demand.csv                  national non-heat demand, GW
//! temperature_<area>.csv           daily mean °C
//! winter_48.csv                    half-hourly heat shape
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::demand::default_winter_shape;
use crate::network::{Bus, FixedInjection, Line, NetworkError, NetworkSpec};
use crate::series::{self, DailySeries, SeriesError};

pub const AREAS: [&str; 4] = ["north", "coast", "inland", "rest"];

/// Day-of-year ranges (0-based, inclusive) of the planted cold, calm spells.
pub const COLD_SNAPS: [(usize, usize); 6] = [(20, 24), (38, 41), (64, 66), (318, 320), (337, 340), (355, 357)];

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureParams {
    pub seed: u64,
    pub year: i32,
    /// Population shares of north, coast and inland.
    pub shares: [f64; 3],
    /// Annual mean and winter amplitude of each area's temperature, °C.
    pub temp_mean: [f64; 4],
    pub temp_amplitude: [f64; 4],
    /// Depth multiplier applied to the cold-snap anomaly per area.
    pub snap_depth: [f64; 4],
    /// Logistic offset of wind availability at north, coast and inland.
    pub wind_offset: [f64; 3],
    pub national_base_gw: f64,
    pub line_limit_gw: f64,
    /// Existing CCGT and wind capacity at north, coast and inland, GW.
    pub existing_ccgt: [f64; 3],
    pub existing_wind: [f64; 3],
    pub nuclear_gw: f64,
    pub interconnector_gw: f64,
    /// Logistic wind offset applied on cold-snap days.
    pub calm_bias: f64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            seed: 2019,
            year: 2019,
            shares: [0.04, 0.06, 0.10],
            temp_mean: [8.5, 11.0, 8.0, 10.5],
            temp_amplitude: [5.0, 4.0, 7.0, 5.5],
            snap_depth: [1.45, 0.4, 1.6, 1.0],
            wind_offset: [0.5, -0.05, -0.55],
            national_base_gw: 38.7,
            line_limit_gw: 5.0,
            existing_ccgt: [0.6, 2.6, 2.5],
            existing_wind: [2.0, 0.8, 0.3],
            nuclear_gw: 1.0,
            interconnector_gw: 0.6,
            calm_bias: -2.35,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Four decimals keep the files small and their text stable.
fn round4(v: f64) -> f64 {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn in_snap(day: usize) -> bool {
    COLD_SNAPS.iter().any(|&(a, b)| (a..=b).contains(&day))
}

/// Winter-peaking seasonal factor in [-1, 1], largest in late January.
fn season(day: f64) -> f64 {
    (2.0 * PI * (day - 20.0) / 365.0).cos()
}

pub struct FixtureData {
    pub timestamps: Vec<NaiveDateTime>,
    pub network: NetworkSpec,
    pub base_demand: Vec<f64>,
    pub temperatures: BTreeMap<String, DailySeries>,
    pub shape: Vec<f64>,
}

pub fn synthesize(p: &FixtureParams) -> FixtureData {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let start_day = NaiveDate::from_ymd_opt(p.year, 1, 1).unwrap();
    let days = NaiveDate::from_ymd_opt(p.year + 1, 1, 1).unwrap().signed_duration_since(start_day).num_days() as usize;
    let hours = days * 24;
    let start = start_day.and_hms_opt(0, 0, 0).unwrap();
    let timestamps: Vec<NaiveDateTime> = (0..hours).map(|h| start + Duration::hours(h as i64)).collect();
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    // Daily temperature: shared anomaly plus local noise.
    let mut anomaly = 0.0;
    let mut temps = vec![Vec::with_capacity(days); AREAS.len()];
    for d in 0..days {
        anomaly = 0.75 * anomaly + 1.6 * normal();
        let snap = if in_snap(d) { -6.0 } else { 0.0 };
        for a in 0..AREAS.len() {
            let t = p.temp_mean[a] - p.temp_amplitude[a] * season(d as f64)
                + anomaly
                + p.snap_depth[a] * snap
                + 0.6 * normal();
            temps[a].push(round4(t.clamp(-35.0, 40.0)));
        }
    }

    // Hourly wind: one synoptic driver, calm during the snaps.
    let mut z = 0.0;
    let phi: f64 = 0.985;
    let scale = (1.0 - phi * phi).sqrt();
    let mut wind = vec![Vec::with_capacity(hours); 3];
    for h in 0..hours {
        let d = h / 24;
        z = phi * z + scale * normal();
        let bias = 0.5 * season(d as f64) + if in_snap(d) { p.calm_bias } else { 0.0 };
        for (b, w) in wind.iter_mut().enumerate() {
            let x = p.wind_offset[b] + bias + 1.5 * z + 0.3 * normal();
            w.push(round4(0.95 / (1.0 + (-x).exp())));
        }
    }

    // National non-heat demand with morning and evening peaks.
    let base: Vec<f64> = timestamps
        .iter()
        .enumerate()
        .map(|(h, ts)| {
            let hod = (h % 24) as f64;
            let daily = 0.12 * (-(hod - 8.0).powi(2) / 4.0).exp() + 0.18 * (-(hod - 18.0).powi(2) / 5.0).exp()
                - 0.15 * (-(hod - 3.0).powi(2) / 6.0).exp();
            let weekend = matches!(ts.weekday(), Weekday::Sat | Weekday::Sun);
            let level = 1.0 + 0.12 * season((h / 24) as f64) + daily - if weekend { 0.06 } else { 0.0 };
            round4(p.national_base_gw * level)
        })
        .collect();

    let nuclear = vec![p.nuclear_gw; hours];
    let interconnector: Vec<f64> = (0..hours)
        .map(|h| round4(p.interconnector_gw * (1.0 + 0.3 * (2.0 * PI * (h % 24) as f64 / 24.0).sin())))
        .collect();

    let names = ["north", "coast", "inland"];
    let buses = names
        .iter()
        .enumerate()
        .map(|(b, name)| {
            let mut bus = Bus::new(*name, p.shares[b]);
            bus.existing_capacity.insert("ccgt".into(), p.existing_ccgt[b]);
            bus.existing_capacity.insert("wind".into(), p.existing_wind[b]);
            bus.availability.insert("wind".into(), wind[b].clone());
            match *name {
                "north" => bus.fixed_injections.push(FixedInjection {
                    name: "nuclear".into(),
                    price: 29_000.0,
                    series: nuclear.clone(),
                }),
                "coast" => bus.fixed_injections.push(FixedInjection {
                    name: "interconnector".into(),
                    price: 11_000.0,
                    series: interconnector.clone(),
                }),
                _ => {}
            }
            bus
        })
        .collect();
    let line = |id: &str, from: &str, to: &str, km: f64| Line {
        id: id.into(),
        from_bus: from.into(),
        to_bus: to.into(),
        reactance: km * crate::network::DEFAULT_PER_KM_REACTANCE_PCT / 100.0,
        thermal_limit: p.line_limit_gw,
        length_km: Some(km),
    };
    let network = NetworkSpec {
        buses,
        lines: vec![
            line("north-coast", "north", "coast", 420.0),
            line("north-inland", "north", "inland", 360.0),
            line("coast-inland", "coast", "inland", 160.0),
        ],
        slack_bus: "coast".into(),
    };

    let temperatures = AREAS
        .iter()
        .zip(temps)
        .map(|(a, values)| (a.to_string(), DailySeries { start: start_day, values }))
        .collect();
    FixtureData { timestamps, network, base_demand: base, temperatures, shape: default_winter_shape() }
}

/// Writes the data set under `dir` and returns the files in writing order.
pub fn write(p: &FixtureParams, dir: &Path) -> Result<Vec<PathBuf>, FixtureError> {
    let data = synthesize(p);
    let mut files = vec![data.network.save(dir, &data.timestamps)?];
    let base = dir.join("base_demand.csv");
    series::write_time_series(&base, "demand_gw", &data.timestamps, &data.base_demand)?;
    files.push(base);
    for (area, s) in &data.temperatures {
        let path = dir.join(format!("temperature_{area}.csv"));
        series::write_daily_series(&path, "temperature_c", s)?;
        files.push(path);
    }
    let shape = dir.join("winter_48.csv");
    let io = |source| FixtureError::Io { path: shape.clone(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(&shape).map_err(io)?);
    writeln!(out, "slot,fraction").map_err(io)?;
    for (k, v) in data.shape.iter().enumerate() {
        writeln!(out, "{k},{v}").map_err(io)?;
    }
    out.flush().map_err(io)?;
    files.push(shape);
    Ok(files)
}
