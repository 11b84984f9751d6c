//! Representative-week selection and budget scaling.
//!
//! For each requested month the hour with the lowest net demand
//! (`wind − demand`) is found, earliest hour first on ties. The week is the
//! four days before that hour's day, the day itself and the two days after
//! it. Days that fall outside the data are replaced by the days at the
//! opposite edge of the same month, and the week's days are then kept in
//! calendar order; such weeks are flagged as wrapped.

use std::ops::Range;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::Serialize;
use thiserror::Error;

pub const DAYS_BEFORE: i64 = 4;
pub const DAYS_AFTER: i64 = 2;
pub const WEEK_DAYS: usize = 7;

#[derive(Debug, Error, PartialEq)]
pub enum WeekError {
    #[error("month {0} is not fully covered by the data")]
    IncompleteMonth(u32),
    #[error("the week around {0} cannot be completed from the data")]
    EdgeOfSeries(NaiveDate),
    #[error("{0}")]
    Invalid(String),
    #[error("{0} must lie in (0, 1], got {1}")]
    OutOfRange(&'static str, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedWeek {
    pub month: u32,
    /// Index of the critical hour in the source series.
    pub critical_index: usize,
    pub critical_time: NaiveDateTime,
    /// `wind − demand` at the critical hour, GW.
    pub min_net_demand: f64,
    /// `demand − wind` at the same hour, the maximum of that series.
    pub max_residual_demand: f64,
    pub days: Vec<NaiveDate>,
    /// Source indices covered by the week, one contiguous range per day.
    pub day_ranges: Vec<Range<usize>>,
    pub wrapped: bool,
}

impl SelectedWeek {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.day_ranges.iter().flat_map(|r| r.clone())
    }

    pub fn contains(&self, index: usize) -> bool {
        self.day_ranges.iter().any(|r| r.contains(&index))
    }
}

fn days_in_month(year: i32, month: u32) -> i64 {
    let first = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap()
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1).unwrap()
    };
    (next - first).num_days()
}

/// Picks one week per month. All series share `timestamps`, which must be
/// evenly spaced with a whole number of steps per day. A month number
/// refers to its first occurrence in the data.
pub fn select_weeks(
    wind_potential: &[f64],
    demand: &[f64],
    timestamps: &[NaiveDateTime],
    months: &[u32],
) -> Result<Vec<SelectedWeek>, WeekError> {
    if wind_potential.len() != timestamps.len() || demand.len() != timestamps.len() {
        return Err(WeekError::Invalid(format!(
            "series lengths differ: wind {}, demand {}, timestamps {}",
            wind_potential.len(),
            demand.len(),
            timestamps.len()
        )));
    }
    if timestamps.len() < 2 {
        return Err(WeekError::Invalid("need at least two time steps".into()));
    }
    let step = timestamps[1] - timestamps[0];
    if step <= Duration::zero() || timestamps.windows(2).any(|w| w[1] - w[0] != step) {
        return Err(WeekError::Invalid("timestamps must be evenly spaced".into()));
    }
    let day = Duration::days(1);
    if day.num_seconds() % step.num_seconds() != 0 {
        return Err(WeekError::Invalid("steps must divide a day".into()));
    }
    let per_day = (day.num_seconds() / step.num_seconds()) as usize;
    let first = timestamps[0];
    if first.time() != chrono::NaiveTime::MIN {
        return Err(WeekError::Invalid("series must start at midnight".into()));
    }
    let first_day = first.date();
    let n_days = timestamps.len() / per_day;
    let day_index = |d: NaiveDate| -> Option<usize> {
        let k = (d - first_day).num_days();
        (k >= 0 && (k as usize) < n_days).then_some(k as usize)
    };

    let mut out = Vec::with_capacity(months.len());
    for &month in months {
        if !(1..=12).contains(&month) {
            return Err(WeekError::Invalid(format!("month {month} outside 1..=12")));
        }
        let start_day = (0..n_days)
            .map(|k| first_day + Duration::days(k as i64))
            .find(|d| d.month() == month && d.day() == 1)
            .ok_or(WeekError::IncompleteMonth(month))?;
        let year = start_day.year();
        let len = days_in_month(year, month);
        let month_first = day_index(start_day).unwrap();
        if month_first + len as usize > n_days {
            return Err(WeekError::IncompleteMonth(month));
        }
        let range = month_first * per_day..(month_first + len as usize) * per_day;

        let mut critical = range.start;
        let mut best = f64::INFINITY;
        for t in range {
            let net = wind_potential[t] - demand[t];
            if net < best {
                best = net;
                critical = t;
            }
        }
        let critical_day = timestamps[critical].date();
        let mut days = Vec::with_capacity(WEEK_DAYS);
        let mut wrapped = false;
        for offset in -DAYS_BEFORE..=DAYS_AFTER {
            let mut d = critical_day + Duration::days(offset);
            if day_index(d).is_none() {
                wrapped = true;
                d = if d < start_day { d + Duration::days(len) } else { d - Duration::days(len) };
                if day_index(d).is_none() || d.month() != month {
                    return Err(WeekError::EdgeOfSeries(critical_day));
                }
            }
            days.push(d);
        }
        days.sort();
        let day_ranges = days
            .iter()
            .map(|&d| {
                let k = day_index(d).unwrap();
                k * per_day..(k + 1) * per_day
            })
            .collect();
        out.push(SelectedWeek {
            month,
            critical_index: critical,
            critical_time: timestamps[critical],
            min_net_demand: best,
            max_residual_demand: -best,
            days,
            day_ranges,
            wrapped,
        });
    }
    Ok(out)
}

/// `national_budget · population_fraction · period_fraction`.
pub fn scale_budget(
    national_budget: f64,
    population_fraction: f64,
    period_fraction: f64,
) -> Result<f64, WeekError> {
    if !(national_budget >= 0.0) || !national_budget.is_finite() {
        return Err(WeekError::Invalid(format!("national budget {national_budget} must be >= 0")));
    }
    for (name, f) in [("population fraction", population_fraction), ("period fraction", period_fraction)] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(WeekError::OutOfRange(name, f));
        }
    }
    Ok(national_budget * population_fraction * period_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hourly(year: i32, days: usize) -> Vec<NaiveDateTime> {
        let start = NaiveDate::from_ymd_opt(year, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        (0..days * 24).map(|h| start + Duration::hours(h as i64)).collect()
    }

    #[test]
    fn constant_series_picks_first_hour() {
        let ts = hourly(2019, 59);
        let w = vec![3.0; ts.len()];
        let d = vec![5.0; ts.len()];
        let weeks = select_weeks(&w, &d, &ts, &[1, 2]).unwrap();
        assert_eq!(weeks[0].critical_index, 0);
        assert_eq!(weeks[1].critical_index, 31 * 24);
        assert_eq!(weeks[1].min_net_demand, -2.0);
        assert_eq!(weeks[1].max_residual_demand, 2.0);
        // Jan 1 needs four days before the start of the data.
        assert!(weeks[0].wrapped);
        assert_eq!(weeks[0].days.first().unwrap().day(), 1);
        assert_eq!(weeks[0].days.last().unwrap().day(), 31);
        for w in &weeks {
            assert_eq!(w.days.len(), 7);
            assert_eq!(w.indices().count(), 7 * 24);
            assert!(w.contains(w.critical_index));
        }
    }

    #[test]
    fn window_shape_around_critical_day() {
        let ts = hourly(2019, 31);
        let w = vec![0.0; ts.len()];
        let mut d = vec![1.0; ts.len()];
        d[15 * 24 + 18] = 9.0;
        let week = &select_weeks(&w, &d, &ts, &[1]).unwrap()[0];
        let days: Vec<u32> = week.days.iter().map(|d| d.day()).collect();
        assert_eq!(days, vec![12, 13, 14, 15, 16, 17, 18]);
        assert!(!week.wrapped);
    }

    #[test]
    fn late_month_window_extends_into_next_month_when_data_allows() {
        let ts = hourly(2019, 59);
        let w = vec![0.0; ts.len()];
        let mut d = vec![1.0; ts.len()];
        d[30 * 24] = 5.0;
        let week = &select_weeks(&w, &d, &ts, &[1]).unwrap()[0];
        assert_eq!(week.days.last().unwrap(), &NaiveDate::from_ymd_opt(2019, 2, 2).unwrap());

        let ts = hourly(2019, 31);
        let week = &select_weeks(&w[..ts.len()], &d[..ts.len()], &ts, &[1]).unwrap()[0];
        assert!(week.wrapped);
        let days: Vec<u32> = week.days.iter().map(|d| d.day()).collect();
        assert_eq!(days, vec![1, 2, 27, 28, 29, 30, 31]);
    }

    #[test]
    fn incomplete_month_is_rejected() {
        let ts = hourly(2019, 40);
        let v = vec![0.0; ts.len()];
        assert_eq!(select_weeks(&v, &v, &ts, &[2]), Err(WeekError::IncompleteMonth(2)));
    }

    #[test]
    fn budget_scaling() {
        assert_eq!(scale_budget(5e7, 0.1, 1.0).unwrap(), 5e6);
        assert_eq!(scale_budget(5e7, 1.0, 1.0).unwrap(), 5e7);
        assert!(matches!(scale_budget(1.0, 0.0, 1.0), Err(WeekError::OutOfRange(..))));
        assert!(matches!(scale_budget(1.0, 1.0, 1.5), Err(WeekError::OutOfRange(..))));
        assert!(scale_budget(-1.0, 1.0, 1.0).is_err());
    }
}
