//! Household load profiles: aggregation of a day's 24 hourly values into `T`
//! slots and the monthly share of days whose charging price is increasing.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::charging::{ChargingScenario, Degeneracy};
use crate::error::{Error, Result};

pub const HOURS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalendarDate {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl CalendarDate {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid("month", alloc::format!("must be 1..=12, got {month}")));
        }
        let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        let days = match month {
            2 if leap => 29,
            2 => 28,
            4 | 6 | 9 | 11 => 30,
            _ => 31,
        };
        if day == 0 || day > days {
            return Err(Error::invalid(
                "day",
                alloc::format!("{year}-{month:02} has no day {day}"),
            ));
        }
        Ok(CalendarDate { year, month, day })
    }
}

impl fmt::Display for CalendarDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayLoad {
    pub date: CalendarDate,
    /// Consumption of hours 0..24, kWh.
    pub hours: [f64; HOURS],
}

/// Days in strictly increasing date order with nonnegative hourly values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadDataset {
    days: Vec<DayLoad>,
}

impl LoadDataset {
    pub fn new(days: Vec<DayLoad>) -> Result<Self> {
        for (i, d) in days.iter().enumerate() {
            if let Some(h) = d.hours.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(
                    alloc::format!("{}.h{h}", d.date),
                    alloc::format!("must be finite and >= 0, got {}", d.hours[h]),
                ));
            }
            if i > 0 && days[i - 1].date >= d.date {
                return Err(Error::invalid(
                    alloc::format!("{}", d.date),
                    "dates must be strictly increasing",
                ));
            }
        }
        Ok(LoadDataset { days })
    }

    pub fn days(&self) -> &[DayLoad] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Binning {
    /// Contiguous blocks of the ascending-sorted hourly values.
    #[default]
    Sorted,
    /// Contiguous blocks of hours in clock order.
    Chronological,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotProfile {
    pub ell0: Vec<f64>,
}

impl SlotProfile {
    pub fn slot_count(&self) -> usize {
        self.ell0.len()
    }

    pub fn total(&self) -> f64 {
        self.ell0.iter().sum()
    }
}

/// Sums 24 hourly values into `slots` blocks of `⌊24/T⌋` hours, the first
/// `24 mod T` blocks taking one extra hour. With [`Binning::Sorted`] the hours
/// are sorted ascending first; slot values are then nondecreasing whenever `T`
/// divides 24.
pub fn aggregate_day_to_slots(hours: &[f64; HOURS], slots: usize, binning: Binning) -> Result<SlotProfile> {
    if !(1..=HOURS).contains(&slots) {
        return Err(Error::invalid("T", alloc::format!("must be 1..=24, got {slots}")));
    }
    let mut values = *hours;
    if binning == Binning::Sorted {
        values.sort_by(f64::total_cmp);
    }
    let base = HOURS / slots;
    let extra = HOURS % slots;
    let mut ell0 = Vec::with_capacity(slots);
    let mut at = 0;
    for t in 0..slots {
        let size = base + usize::from(t < extra);
        ell0.push(values[at..at + size].iter().sum());
        at += size;
    }
    Ok(SlotProfile { ell0 })
}

/// How the per-slot cost coefficients are chosen for a day.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaPolicy {
    Uniform(f64),
    /// One coefficient per slot; the length must equal `T`.
    PerSlot(Vec<f64>),
}

impl Default for EtaPolicy {
    fn default() -> Self {
        EtaPolicy::Uniform(0.01)
    }
}

impl EtaPolicy {
    fn eta(&self, slots: usize) -> Result<Vec<f64>> {
        match self {
            EtaPolicy::Uniform(e) => Ok(vec![*e; slots]),
            EtaPolicy::PerSlot(v) if v.len() == slots => Ok(v.clone()),
            EtaPolicy::PerSlot(v) => Err(Error::invalid(
                "eta",
                alloc::format!("{} coefficients for {slots} slots", v.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonthStat {
    pub month: u8,
    pub days_counted: usize,
    pub increasing_days: usize,
    /// Days without any consumption, counted as increasing.
    pub zero_days: usize,
    /// `None` for a month without data.
    pub fraction: Option<f64>,
}

/// For every calendar month, the share of days whose aggregated profile gives
/// an increasing charging price.
pub fn monthly_increasing_fraction(
    ds: &LoadDataset,
    slots: usize,
    exponent: u32,
    eta: &EtaPolicy,
    binning: Binning,
) -> Result<Vec<MonthStat>> {
    let eta = eta.eta(slots)?;
    let mut stats: Vec<MonthStat> = (1..=12)
        .map(|month| MonthStat {
            month,
            days_counted: 0,
            increasing_days: 0,
            zero_days: 0,
            fraction: None,
        })
        .collect();
    for day in ds.days() {
        let profile = aggregate_day_to_slots(&day.hours, slots, binning)?;
        let sc = ChargingScenario::new(exponent, eta.clone(), profile.ell0)?;
        let m = sc.price_monotonicity();
        let s = &mut stats[usize::from(day.date.month) - 1];
        s.days_counted += 1;
        s.increasing_days += usize::from(m.increasing);
        s.zero_days += usize::from(m.degeneracy == Some(Degeneracy::NoNonflexibleLoad));
    }
    for s in stats.iter_mut() {
        if s.days_counted > 0 {
            s.fraction = Some(s.increasing_days as f64 / s.days_counted as f64);
        }
    }
    Ok(stats)
}

/// Share of increasing days over the whole dataset.
pub fn overall_fraction(stats: &[MonthStat]) -> Option<f64> {
    let days: usize = stats.iter().map(|s| s.days_counted).sum();
    let inc: usize = stats.iter().map(|s| s.increasing_days).sum();
    (days > 0).then(|| inc as f64 / days as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> [f64; HOURS] {
        core::array::from_fn(|h| (h + 1) as f64)
    }

    #[test]
    fn aggregation() {
        let flat = [1.0; HOURS];
        assert_eq!(
            aggregate_day_to_slots(&flat, 2, Binning::Sorted).unwrap().ell0,
            vec![12.0, 12.0]
        );
        assert_eq!(
            aggregate_day_to_slots(&ramp(), 2, Binning::Sorted).unwrap().ell0,
            vec![78.0, 222.0]
        );
        let mut rev = ramp();
        rev.reverse();
        let full = aggregate_day_to_slots(&rev, 24, Binning::Sorted).unwrap().ell0;
        assert_eq!(full, ramp().to_vec());
        let chrono = aggregate_day_to_slots(&rev, 2, Binning::Chronological).unwrap().ell0;
        assert_eq!(chrono, vec![222.0, 78.0]);
        // 24 = 5 + 5 + 5 + 5 + 4
        let five = aggregate_day_to_slots(&ramp(), 5, Binning::Sorted).unwrap().ell0;
        assert_eq!(five, vec![15.0, 40.0, 65.0, 90.0, 90.0]);
        assert!(aggregate_day_to_slots(&flat, 0, Binning::Sorted).is_err());
        assert!(aggregate_day_to_slots(&flat, 25, Binning::Sorted).is_err());
    }

    #[test]
    fn dates() {
        assert!(CalendarDate::new(2024, 2, 29).is_ok());
        assert!(CalendarDate::new(2023, 2, 29).is_err());
        assert!(CalendarDate::new(2023, 13, 1).is_err());
        assert_eq!(
            alloc::format!("{}", CalendarDate::new(2023, 3, 7).unwrap()),
            "2023-03-07"
        );
    }

    #[test]
    fn dataset_validation() {
        let d = |day, v| DayLoad {
            date: CalendarDate::new(2023, 1, day).unwrap(),
            hours: [v; HOURS],
        };
        assert!(LoadDataset::new(vec![d(1, 1.0), d(2, 1.0)]).is_ok());
        assert!(LoadDataset::new(vec![d(2, 1.0), d(2, 1.0)]).is_err());
        assert!(LoadDataset::new(vec![d(1, -1.0)]).is_err());
    }

    #[test]
    fn monthly_fractions() {
        let days = vec![
            DayLoad {
                date: CalendarDate::new(2023, 1, 1).unwrap(),
                hours: [1.0; HOURS],
            },
            DayLoad {
                date: CalendarDate::new(2023, 1, 2).unwrap(),
                hours: core::array::from_fn(|h| if h < 12 { 1.0 } else { 3.0 }),
            },
            DayLoad {
                date: CalendarDate::new(2023, 3, 1).unwrap(),
                hours: [0.0; HOURS],
            },
        ];
        let ds = LoadDataset::new(days).unwrap();
        let stats = monthly_increasing_fraction(&ds, 2, 2, &EtaPolicy::default(), Binning::Sorted).unwrap();
        assert_eq!(stats[0].fraction, Some(0.5));
        assert_eq!(stats[1].fraction, None);
        assert_eq!((stats[2].fraction, stats[2].zero_days), (Some(1.0), 1));
        assert_eq!(overall_fraction(&stats), Some(2.0 / 3.0));
        assert!(monthly_increasing_fraction(&ds, 2, 2, &EtaPolicy::PerSlot(vec![0.01]), Binning::Sorted).is_err());
    }
}
