use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use heatgrid::demand::{
    default_winter_shape, heterogeneous_demand, homogeneous_demand, population_weighted_temperature, resample,
    synthesize_heat_series, DegreeDayCurve, DemandError, HeatResponseCurve, TimeGrid,
};
use heatgrid::series::DailySeries;
use proptest::prelude::*;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 1).unwrap()
}

fn grid(step: f64, days: usize) -> TimeGrid {
    let steps = (days as f64 * 24.0 / step) as usize;
    TimeGrid::uniform(start().and_hms_opt(0, 0, 0).unwrap(), step, steps).unwrap()
}

fn temps(values: Vec<f64>) -> DailySeries {
    DailySeries { start: start(), values }
}

#[test]
fn default_shape_is_normalised_with_two_peaks() {
    let shape = default_winter_shape();
    assert_eq!(shape.len(), 48);
    assert!((shape.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let max_slot = (0..48).max_by(|&a, &b| shape[a].total_cmp(&shape[b])).unwrap();
    assert!((14..=16).contains(&max_slot), "peak at slot {max_slot}");
    assert!(shape[36] > shape[4]);
}

#[test]
fn heat_energy_matches_daily_totals() {
    let curve = DegreeDayCurve::default();
    let t = temps(vec![-3.0, 4.5, 20.0]);
    for step in [0.5, 1.0, 3.0, 6.0, 24.0] {
        let g = grid(step, 3);
        let heat = synthesize_heat_series(&curve, &t, 1.0e6, &g).unwrap();
        let per_day = (24.0 / step) as usize;
        for (d, temp) in t.values.iter().enumerate() {
            let energy: f64 = heat[d * per_day..(d + 1) * per_day].iter().sum::<f64>() * step;
            let expected = curve.daily_energy_gwh(*temp, 1.0e6);
            assert!((energy - expected).abs() < 1e-9 * (1.0 + expected), "step {step} day {d}");
        }
    }
    // 1e6 households at -3 °C: 1e6 · 2.0 kWh/°C-day · 18.5 °C = 37 GWh.
    assert!((curve.daily_energy_gwh(-3.0, 1.0e6) - 37.0).abs() < 1e-12);
    assert_eq!(curve.daily_energy_gwh(20.0, 1.0e6), 0.0);
}

#[test]
fn out_of_domain_and_missing_temperatures_are_rejected() {
    let curve = DegreeDayCurve::default();
    let g = grid(1.0, 2);
    let err = synthesize_heat_series(&curve, &temps(vec![5.0, -60.0]), 1.0, &g).unwrap_err();
    assert!(matches!(err, DemandError::TemperatureOutOfDomain { temp, .. } if temp == -60.0));
    let err = synthesize_heat_series(&curve, &temps(vec![5.0]), 1.0, &g).unwrap_err();
    assert!(matches!(err, DemandError::MissingTemperature(d) if d == start() + Duration::days(1)));
}

#[test]
fn zero_heat_gives_base_allocation_in_both_modes() {
    let g = grid(6.0, 1);
    let base = vec![30.0, 35.0, 40.0, 33.0];
    let shares = BTreeMap::from([("x".to_string(), 0.25), ("y".to_string(), 0.75)]);
    let zero = vec![0.0; 4];
    let homo = homogeneous_demand(&base, &zero, &shares, &g).unwrap();
    let local = shares.keys().map(|k| (k.clone(), zero.clone())).collect();
    let het = heterogeneous_demand(&base, &local, &shares, &g).unwrap();
    for (bus, ps) in &shares {
        let expected: Vec<f64> = base.iter().map(|b| ps * b).collect();
        assert_eq!(homo.bus(bus).unwrap(), &expected[..]);
        assert_eq!(het.bus(bus).unwrap(), &expected[..]);
    }
}

#[test]
fn weighted_temperature_requires_unit_weights() {
    let areas = BTreeMap::from([("a".to_string(), temps(vec![0.0, 10.0])), ("b".to_string(), temps(vec![10.0, 20.0]))]);
    let w = BTreeMap::from([("a".to_string(), 0.25), ("b".to_string(), 0.75)]);
    assert_eq!(population_weighted_temperature(&areas, &w).unwrap().values, vec![7.5, 17.5]);
    let w = BTreeMap::from([("a".to_string(), 0.5), ("b".to_string(), 0.4)]);
    assert!(matches!(population_weighted_temperature(&areas, &w), Err(DemandError::WeightSumInvalid(_))));
}

proptest! {
    #[test]
    fn resampling_preserves_energy(values in prop::collection::vec(0.0f64..50.0, 24), k in prop::sample::select(vec![1usize, 2, 3, 4, 6, 12, 24])) {
        let coarse = resample(&values, 1.0, k as f64).unwrap();
        let e0: f64 = values.iter().sum();
        let e1: f64 = coarse.iter().sum::<f64>() * k as f64;
        prop_assert!((e0 - e1).abs() < 1e-9 * (1.0 + e0));
        let fine = resample(&coarse, k as f64, 1.0).unwrap();
        prop_assert_eq!(fine.len(), 24);
        prop_assert!((fine.iter().sum::<f64>() - e1).abs() < 1e-9 * (1.0 + e1));
    }

    #[test]
    fn colder_days_never_need_less_heat(a in -40.0f64..45.0, b in -40.0f64..45.0, households in 0.0f64..1e7) {
        let curve = DegreeDayCurve::default();
        let (cold, warm) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(curve.daily_energy_gwh(cold, households) >= curve.daily_energy_gwh(warm, households));
        prop_assert!(curve.daily_energy_gwh(warm, households) >= 0.0);
    }

    #[test]
    fn heat_series_is_nonnegative_and_decomposes(
        day_temps in prop::collection::vec(-20.0f64..25.0, 3),
        households in 0.0f64..5e6,
        step in prop::sample::select(vec![0.5f64, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0]),
    ) {
        let curve = DegreeDayCurve::default();
        let g = grid(step, 3);
        let t = temps(day_temps.clone());
        let heat = synthesize_heat_series(&curve, &t, households, &g).unwrap();
        prop_assert!(heat.iter().all(|&v| v >= 0.0));
        let total: f64 = heat.iter().sum::<f64>() * step;
        let expected: f64 = day_temps.iter().map(|&x| curve.daily_energy_gwh(x, households)).sum();
        prop_assert!((total - expected).abs() < 1e-9 * (1.0 + expected));
    }

    #[test]
    fn demand_modes_share_base_and_differ_in_heat(
        base in prop::collection::vec(0.0f64..60.0, 4),
        heat_a in prop::collection::vec(0.0f64..20.0, 4),
        heat_b in prop::collection::vec(0.0f64..20.0, 4),
        share in 0.0f64..1.0,
    ) {
        let g = grid(6.0, 1);
        let shares = BTreeMap::from([("a".to_string(), share), ("b".to_string(), 1.0 - share)]);
        let national: Vec<f64> = heat_a.iter().zip(&heat_b).map(|(x, y)| x + y).collect();
        let homo = homogeneous_demand(&base, &national, &shares, &g).unwrap();
        let local = BTreeMap::from([("a".to_string(), heat_a.clone()), ("b".to_string(), heat_b.clone())]);
        let het = heterogeneous_demand(&base, &local, &shares, &g).unwrap();
        for t in 0..4 {
            let total_homo = homo.bus("a").unwrap()[t] + homo.bus("b").unwrap()[t];
            let total_het = het.bus("a").unwrap()[t] + het.bus("b").unwrap()[t];
            prop_assert!((total_homo - total_het).abs() < 1e-9 * (1.0 + total_het));
            prop_assert!((het.bus("a").unwrap()[t] - share * base[t] - heat_a[t]).abs() < 1e-9 * (1.0 + base[t]));
        }
    }
}
