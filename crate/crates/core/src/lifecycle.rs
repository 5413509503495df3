//! Life-cycle simulation: representative-day selection, yearly
//! accumulation, and the run loop that steps years until the battery
//! reaches its capacity-loss threshold.
//!
//! Two selection methods are supported. The typical-day method picks 36
//! calendar days per year (three per month, plus three fixed festivals)
//! and scales their totals by ten. The clustering method groups the whole
//! year by price shape and weights each cluster's representative day by
//! its day count. Prices are assumed to repeat annually, so representative
//! days are dispatched once and reused for every simulated year.

use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{cluster_days, ClusterError, ClusterModel, Metric};
use crate::degradation::DegradationParams;
use crate::dispatch::{simulate_day, BatteryParams, DailyResult, DispatchError, DispatchSolution};
use crate::market::{
    day_files_exist, load_day_from_root, shift_series, MarketDay, MarketError, SeriesField,
};
use crate::parallel;

#[derive(Debug, Error)]
pub enum LifecycleError {
    #[error("missing price data: {0}")]
    MissingData(String),
    #[error("typical-day accumulation needs exactly 36 results, got {0}")]
    WrongCount(usize),
    #[error("{results} cluster results do not match {counts} day counts")]
    CountMismatch { results: usize, counts: usize },
    #[error("annual capacity loss is zero; the ledger would never close within {horizon} years")]
    NeverDies { horizon: u32 },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Fixed scale factor of the typical-day method: each selected day stands
/// for ten calendar days.
pub const TYPICAL_SCALE: f64 = 10.0;
/// Capacity loss at which the accelerated-fade multiplier kicks in.
pub const FADE_KNEE: f64 = 0.20;
/// Loss multiplier beyond the knee.
pub const FADE_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Weekday,
    WeekendOrFestival,
}

/// The 36 typical days of one year: per month the first eligible weekday
/// of days 1-10, the first eligible weekend day of days 11-20, and the
/// first eligible weekday from day 21 on, with the three fixed festivals
/// substituted in and price outliers re-selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalDaySet {
    pub dates: Vec<NaiveDate>,
    pub kinds: Vec<SlotKind>,
    pub scale_factor: u32,
}

fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    };
    next.unwrap().pred_opt().unwrap().day()
}

struct Slot {
    date: NaiveDate,
    kind: SlotKind,
    festival: bool,
}

fn first_matching(
    year: i32,
    month: u32,
    day_range: std::ops::RangeInclusive<u32>,
    weekend: bool,
    eligible: &dyn Fn(NaiveDate) -> bool,
) -> Option<NaiveDate> {
    for day in day_range {
        if let Some(date) = NaiveDate::from_ymd_opt(year, month, day) {
            if is_weekend(date) == weekend && eligible(date) {
                return Some(date);
            }
        }
    }
    None
}

/// Deterministic selection of the year's 36 typical days from the price
/// tree under `price_root`.
pub fn select_typical_days(year: i32, price_root: &Path) -> Result<TypicalDaySet, LifecycleError> {
    let eligible = |date: NaiveDate| day_files_exist(price_root, date);
    let mut months: Vec<Vec<Slot>> = Vec::with_capacity(12);
    for month in 1..=12u32 {
        let last = days_in_month(year, month);
        let slot_a = first_matching(year, month, 1..=10, false, &eligible).ok_or_else(|| {
            LifecycleError::MissingData(format!(
                "no eligible weekday in {year}-{month:02} days 1-10"
            ))
        })?;
        let slot_b = first_matching(year, month, 11..=20, true, &eligible).ok_or_else(|| {
            LifecycleError::MissingData(format!(
                "no eligible weekend day in {year}-{month:02} days 11-20"
            ))
        })?;
        let slot_c = first_matching(year, month, 21..=last, false, &eligible).ok_or_else(|| {
            LifecycleError::MissingData(format!(
                "no eligible weekday in {year}-{month:02} days 21-{last}"
            ))
        })?;
        months.push(vec![
            Slot {
                date: slot_a,
                kind: SlotKind::Weekday,
                festival: false,
            },
            Slot {
                date: slot_b,
                kind: SlotKind::WeekendOrFestival,
                festival: false,
            },
            Slot {
                date: slot_c,
                kind: SlotKind::Weekday,
                festival: false,
            },
        ]);
    }

    // Festival substitution preserves each month's slot composition: a
    // weekend festival takes the weekend slot, a weekday festival takes
    // the nearest prior (else nearest) weekday slot.
    for (month, day) in [(7u32, 4u32), (11, 1), (12, 25)] {
        let date = NaiveDate::from_ymd_opt(year, month, day).unwrap();
        if !eligible(date) {
            return Err(LifecycleError::MissingData(format!(
                "festival {date} has no price data"
            )));
        }
        let slots = &mut months[(month - 1) as usize];
        let target = if is_weekend(date) {
            1
        } else {
            let candidates = [0usize, 2];
            candidates
                .into_iter()
                .filter(|&i| slots[i].date <= date)
                .max_by_key(|&i| slots[i].date)
                .unwrap_or_else(|| {
                    *candidates
                        .iter()
                        .min_by_key(|&&i| (slots[i].date - date).num_days().abs())
                        .unwrap()
                })
        };
        slots[target].date = date;
        slots[target].festival = true;
    }

    // Outlier re-selection: at most one swap per month, first offender in
    // date order. A day is an outlier when its mean energy price strays
    // more than three monthly standard deviations from the monthly mean.
    for (month_idx, slots) in months.iter_mut().enumerate() {
        let month = month_idx as u32 + 1;
        let last = days_in_month(year, month);
        let mut month_days: Vec<(NaiveDate, f64)> = Vec::new();
        for day in 1..=last {
            let date = NaiveDate::from_ymd_opt(year, month, day).unwrap();
            if eligible(date) {
                let loaded = load_day_from_root(price_root, date)?;
                let mean =
                    loaded.price_energy.iter().sum::<f64>() / loaded.price_energy.len() as f64;
                month_days.push((date, mean));
            }
        }
        let n = month_days.len() as f64;
        let mu = month_days.iter().map(|(_, m)| m).sum::<f64>() / n;
        let sigma = (month_days
            .iter()
            .map(|(_, m)| (m - mu) * (m - mu))
            .sum::<f64>()
            / n)
            .sqrt();
        if sigma == 0.0 {
            continue;
        }
        let mean_of = |date: NaiveDate| {
            month_days
                .iter()
                .find(|(d, _)| *d == date)
                .map(|(_, m)| *m)
                .unwrap_or(mu)
        };
        let is_outlier = |date: NaiveDate| (mean_of(date) - mu).abs() > 3.0 * sigma;

        let mut order: Vec<usize> = (0..slots.len()).collect();
        order.sort_by_key(|&i| slots[i].date);
        for i in order {
            if slots[i].festival || !is_outlier(slots[i].date) {
                continue;
            }
            let want_weekend = slots[i].kind == SlotKind::WeekendOrFestival;
            let taken: Vec<NaiveDate> = slots.iter().map(|s| s.date).collect();
            let mut cursor = slots[i].date;
            while let Some(next) = cursor.checked_add_days(Days::new(1)) {
                if next.month() != month {
                    break;
                }
                cursor = next;
                if is_weekend(next) == want_weekend
                    && eligible(next)
                    && !taken.contains(&next)
                    && !is_outlier(next)
                {
                    slots[i].date = next;
                    break;
                }
            }
            break; // one swap per month
        }
    }

    let mut picks: Vec<(NaiveDate, SlotKind)> = months
        .into_iter()
        .flatten()
        .map(|s| (s.date, s.kind))
        .collect();
    picks.sort_by_key(|(d, _)| *d);
    Ok(TypicalDaySet {
        dates: picks.iter().map(|(d, _)| *d).collect(),
        kinds: picks.iter().map(|(_, k)| *k).collect(),
        scale_factor: TYPICAL_SCALE as u32,
    })
}

/// One completed year of the ledger, cumulative since commissioning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub year: u32,
    /// Cumulative gross market income, $.
    pub income: f64,
    /// Cumulative operation and maintenance cost, $.
    pub cost_op: f64,
    /// Cumulative capacity loss, fraction of initial capacity.
    pub cap_loss: f64,
    /// Cumulative delivered energy, MWh.
    pub energy_out: f64,
    /// Cumulative charging energy cost, $.
    pub charge_cost: f64,
}

impl LedgerRow {
    pub fn origin() -> Self {
        LedgerRow {
            year: 0,
            income: 0.0,
            cost_op: 0.0,
            cap_loss: 0.0,
            energy_out: 0.0,
            charge_cost: 0.0,
        }
    }
}

/// Year-by-year accumulation up to end of life.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleLedger {
    /// Selection method tag: "typical" or "cluster".
    pub method: String,
    /// Capacity-loss fraction that ends the asset's life.
    pub threshold: f64,
    pub rows: Vec<LedgerRow>,
    pub end_of_life_year: u32,
    /// Set when the horizon cut the simulation short of the threshold.
    pub truncated: bool,
}

fn weighted_next(
    prev: &LedgerRow,
    results: &[DailyResult],
    weights: impl Fn(usize) -> f64,
) -> LedgerRow {
    let mut income = 0.0;
    let mut cost_op = 0.0;
    let mut cap_loss = 0.0;
    let mut energy_out = 0.0;
    let mut charge_cost = 0.0;
    for (i, r) in results.iter().enumerate() {
        let w = weights(i);
        income += w * r.gross_income;
        cost_op += w * (r.cost_op_fix + r.cost_op_var);
        cap_loss += w * r.cap_loss;
        energy_out += w * r.energy_out;
        charge_cost += w * r.charge_cost;
    }
    LedgerRow {
        year: prev.year + 1,
        income: prev.income + income,
        cost_op: prev.cost_op + cost_op,
        cap_loss: prev.cap_loss + cap_loss,
        energy_out: prev.energy_out + energy_out,
        charge_cost: prev.charge_cost + charge_cost,
    }
}

/// Advances the ledger one year under the typical-day rule: ten times the
/// 36 selected days' totals.
pub fn accumulate_typical(
    prev: &LedgerRow,
    daily: &[DailyResult],
) -> Result<LedgerRow, LifecycleError> {
    if daily.len() != 36 {
        return Err(LifecycleError::WrongCount(daily.len()));
    }
    Ok(weighted_next(prev, daily, |_| TYPICAL_SCALE))
}

/// Advances the ledger one year under the clustering rule: each cluster's
/// representative result weighted by its day count.
pub fn accumulate_cluster(
    prev: &LedgerRow,
    cluster_results: &[DailyResult],
    day_counts: &[usize],
) -> Result<LedgerRow, LifecycleError> {
    if cluster_results.len() != day_counts.len() {
        return Err(LifecycleError::CountMismatch {
            results: cluster_results.len(),
            counts: day_counts.len(),
        });
    }
    Ok(weighted_next(prev, cluster_results, |i| {
        day_counts[i] as f64
    }))
}

/// Applies one year's raw capacity-loss increment to the cumulative total.
/// With accelerated fade, loss accrued beyond the 20% knee counts three
/// times.
pub fn apply_fade(prev_cum: f64, increment: f64, accelerated: bool) -> f64 {
    if !accelerated {
        return prev_cum + increment;
    }
    if prev_cum >= FADE_KNEE {
        prev_cum + FADE_MULTIPLIER * increment
    } else if prev_cum + increment <= FADE_KNEE {
        prev_cum + increment
    } else {
        FADE_KNEE + FADE_MULTIPLIER * (prev_cum + increment - FADE_KNEE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Typical,
    Cluster,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Typical => "typical",
            Method::Cluster => "cluster",
        }
    }
}

/// Everything the run loop needs.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub price_root: &'a Path,
    pub year: i32,
    pub method: Method,
    pub k: usize,
    pub metric: Metric,
    pub seed: u64,
    /// Capacity-loss fraction ending the life, default 0.20.
    pub threshold: f64,
    pub accelerated_fade: bool,
    pub max_horizon_years: u32,
    /// Cyclic shift applied to the reserve series at load time, hours.
    pub res_shift_hours: i64,
    /// Multiplier on all four price families.
    pub price_scale: f64,
    pub battery: &'a BatteryParams,
    pub degradation: &'a DegradationParams,
}

/// A representative day with its yearly weight and solved dispatch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentativeDay {
    pub day: MarketDay,
    /// Days of the year this representative stands for.
    pub weight: f64,
    pub solution: DispatchSolution,
    pub result: DailyResult,
}

/// Constant per-year figures implied by the representative days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnualFigures {
    pub income: f64,
    pub cost_op: f64,
    pub cost_loss: f64,
    pub cap_loss: f64,
    pub energy_out: f64,
    pub charge_cost: f64,
}

/// Full output of one life-cycle simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifecycleRun {
    pub ledger: LifecycleLedger,
    pub typical: Option<TypicalDaySet>,
    pub cluster: Option<ClusterModel>,
    pub representative: Vec<RepresentativeDay>,
    pub annual: AnnualFigures,
}

fn load_scaled_day(
    root: &Path,
    date: NaiveDate,
    res_shift_hours: i64,
    price_scale: f64,
) -> Result<MarketDay, MarketError> {
    let mut day = load_day_from_root(root, date)?;
    if res_shift_hours != 0 {
        day = shift_series(&day, SeriesField::Res, res_shift_hours)?;
    }
    if price_scale != 1.0 {
        day = day.scaled(price_scale);
    }
    Ok(day)
}

fn year_dates(year: i32) -> Vec<NaiveDate> {
    let mut dates = Vec::with_capacity(366);
    let mut cursor = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
    while cursor.year() == year {
        dates.push(cursor);
        cursor = cursor.checked_add_days(Days::new(1)).unwrap();
    }
    dates
}

/// Representative days chosen by one of the selection methods, with
/// their yearly weights and the method's byproducts.
struct Selection {
    days: Vec<MarketDay>,
    weights: Vec<f64>,
    typical: Option<TypicalDaySet>,
    cluster: Option<ClusterModel>,
}

fn select_representatives(spec: &RunSpec) -> Result<Selection, LifecycleError> {
    match spec.method {
        Method::Typical => {
            let set = select_typical_days(spec.year, spec.price_root)?;
            let days = set
                .dates
                .iter()
                .map(|&d| {
                    load_scaled_day(spec.price_root, d, spec.res_shift_hours, spec.price_scale)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let weights = vec![TYPICAL_SCALE; days.len()];
            Ok(Selection {
                days,
                weights,
                typical: Some(set),
                cluster: None,
            })
        }
        Method::Cluster => {
            let mut all_days = Vec::new();
            for date in year_dates(spec.year) {
                if !day_files_exist(spec.price_root, date) {
                    return Err(LifecycleError::MissingData(format!(
                        "clustering needs the complete year, {date} is missing"
                    )));
                }
                all_days.push(load_scaled_day(
                    spec.price_root,
                    date,
                    spec.res_shift_hours,
                    spec.price_scale,
                )?);
            }
            let model = cluster_days(&all_days, spec.k, spec.metric, spec.seed)?;
            let days = model.centroid_days.clone();
            let weights: Vec<f64> = model.day_counts.iter().map(|&c| c as f64).collect();
            Ok(Selection {
                days,
                weights,
                typical: None,
                cluster: Some(model),
            })
        }
    }
}

/// Runs the life-cycle simulation: selects representative days, solves
/// each one's dispatch once, and accumulates years until the capacity-loss
/// threshold (or the horizon) is reached.
pub fn run_lifecycle(spec: &RunSpec) -> Result<LifecycleRun, LifecycleError> {
    let Selection {
        days,
        weights,
        typical,
        cluster,
    } = select_representatives(spec)?;

    let solved = parallel::try_map(&days, |day| {
        simulate_day(day, spec.battery, spec.degradation)
    })?;
    let representative: Vec<RepresentativeDay> = days
        .into_iter()
        .zip(solved)
        .zip(&weights)
        .map(|((day, (solution, result)), &weight)| RepresentativeDay {
            day,
            weight,
            solution,
            result,
        })
        .collect();

    let annual = {
        let mut a = AnnualFigures {
            income: 0.0,
            cost_op: 0.0,
            cost_loss: 0.0,
            cap_loss: 0.0,
            energy_out: 0.0,
            charge_cost: 0.0,
        };
        for rep in &representative {
            a.income += rep.weight * rep.result.gross_income;
            a.cost_op += rep.weight * (rep.result.cost_op_fix + rep.result.cost_op_var);
            a.cost_loss += rep.weight * rep.result.cost_loss;
            a.cap_loss += rep.weight * rep.result.cap_loss;
            a.energy_out += rep.weight * rep.result.energy_out;
            a.charge_cost += rep.weight * rep.result.charge_cost;
        }
        a
    };
    if annual.cap_loss <= 0.0 {
        return Err(LifecycleError::NeverDies {
            horizon: spec.max_horizon_years,
        });
    }

    let results: Vec<DailyResult> = representative.iter().map(|r| r.result.clone()).collect();
    let counts: Vec<usize> = weights.iter().map(|&w| w as usize).collect();
    let mut rows: Vec<LedgerRow> = Vec::new();
    let mut prev = LedgerRow::origin();
    let mut truncated = true;
    while prev.year < spec.max_horizon_years {
        let mut row = match spec.method {
            Method::Typical => accumulate_typical(&prev, &results)?,
            Method::Cluster => accumulate_cluster(&prev, &results, &counts)?,
        };
        let raw_increment = row.cap_loss - prev.cap_loss;
        row.cap_loss = apply_fade(prev.cap_loss, raw_increment, spec.accelerated_fade);
        rows.push(row);
        prev = row;
        // relative slack so sums like ten exact 2% steps count as 20%
        if row.cap_loss >= spec.threshold * (1.0 - 1e-9) {
            truncated = false;
            break;
        }
    }
    let end_of_life_year = prev.year;
    Ok(LifecycleRun {
        ledger: LifecycleLedger {
            method: spec.method.tag().to_string(),
            threshold: spec.threshold,
            rows,
            end_of_life_year,
            truncated,
        },
        typical,
        cluster,
        representative,
        annual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::HalfCycleList;

    fn result_with(income: f64, cap_loss: f64) -> DailyResult {
        DailyResult {
            income_energy: income,
            income_reg: 0.0,
            income_res: 0.0,
            cost_op_fix: 0.0,
            cost_op_var: 0.0,
            cap_loss,
            cost_loss: 0.0,
            gross_income: income,
            half_cycles: HalfCycleList::default(),
            energy_out: 0.0,
            energy_in: 0.0,
            charge_cost: 0.0,
        }
    }

    #[test]
    fn typical_accumulation_scales_by_ten() {
        let daily = vec![result_with(100.0, 0.0); 36];
        let row = accumulate_typical(&LedgerRow::origin(), &daily).unwrap();
        assert_eq!(row.year, 1);
        assert!((row.income - 36_000.0).abs() < 1e-9);

        let zeros = vec![result_with(0.0, 0.0); 36];
        let unchanged = accumulate_typical(&LedgerRow::origin(), &zeros).unwrap();
        assert_eq!(unchanged.income, 0.0);
        assert_eq!(unchanged.cap_loss, 0.0);

        assert!(matches!(
            accumulate_typical(&LedgerRow::origin(), &daily[..35]),
            Err(LifecycleError::WrongCount(35))
        ));
    }

    #[test]
    fn typical_accumulation_matches_resummation_oracle() {
        // mixed fixture against an independently coded re-summation
        let daily: Vec<DailyResult> = (0..36)
            .map(|i| result_with(50.0 + 3.0 * i as f64, 1e-4 * (i % 5) as f64))
            .collect();
        let row = accumulate_typical(&LedgerRow::origin(), &daily).unwrap();
        let mut income = 0.0;
        let mut loss = 0.0;
        for d in &daily {
            income += d.gross_income;
            loss += d.cap_loss;
        }
        assert!((row.income - 10.0 * income).abs() < 1e-9);
        assert!((row.cap_loss - 10.0 * loss).abs() < 1e-15);
    }

    #[test]
    fn cluster_accumulation_weights_by_day_counts() {
        let one = vec![result_with(0.0, 2.0)];
        let row = accumulate_cluster(&LedgerRow::origin(), &one, &[365]).unwrap();
        assert!((row.cap_loss - 730.0).abs() < 1e-12);

        let two = vec![result_with(10.0, 1.0), result_with(20.0, 3.0)];
        let row = accumulate_cluster(&LedgerRow::origin(), &two, &[100, 265]).unwrap();
        assert!((row.cap_loss - (100.0 + 795.0)).abs() < 1e-9);
        assert!((row.income - (1000.0 + 5300.0)).abs() < 1e-9);

        assert!(matches!(
            accumulate_cluster(&LedgerRow::origin(), &two, &[365]),
            Err(LifecycleError::CountMismatch { .. })
        ));
    }

    #[test]
    fn cluster_accumulation_matches_resummation_oracle() {
        let results: Vec<DailyResult> = (0..5)
            .map(|i| result_with(100.0 * (i + 1) as f64, 2e-4 * (i + 1) as f64))
            .collect();
        let counts = [40usize, 80, 120, 90, 35];
        let row = accumulate_cluster(&LedgerRow::origin(), &results, &counts).unwrap();
        let mut income = 0.0;
        let mut loss = 0.0;
        for (r, &c) in results.iter().zip(&counts) {
            income += c as f64 * r.gross_income;
            loss += c as f64 * r.cap_loss;
        }
        assert!((row.income - income).abs() < 1e-9);
        assert!((row.cap_loss - loss).abs() < 1e-12);
    }

    #[test]
    fn accumulation_is_order_independent() {
        let mut results: Vec<DailyResult> = (0..36)
            .map(|i| result_with(10.0 * i as f64, 1e-5 * i as f64))
            .collect();
        let forward = accumulate_typical(&LedgerRow::origin(), &results).unwrap();
        results.reverse();
        let backward = accumulate_typical(&LedgerRow::origin(), &results).unwrap();
        assert!((forward.income - backward.income).abs() < 1e-9);
        assert!((forward.cap_loss - backward.cap_loss).abs() < 1e-15);
    }

    #[test]
    fn fade_rule_arithmetic() {
        // plain accumulation below the knee
        assert!((apply_fade(0.10, 0.02, true) - 0.12).abs() < 1e-15);
        // fully beyond the knee: triple
        assert!((apply_fade(0.20, 0.02, true) - 0.26).abs() < 1e-15);
        // straddling the knee: split at 20%
        let crossed = apply_fade(0.19, 0.02, true);
        assert!((crossed - (0.20 + 3.0 * 0.01)).abs() < 1e-15);
        // disabled: plain sum regardless
        assert!((apply_fade(0.30, 0.02, false) - 0.32).abs() < 1e-15);
    }

    #[test]
    fn constant_loss_reaches_thresholds_on_schedule() {
        // 2%/yr at a 20% threshold: life ends in year 10
        let mut cum = 0.0;
        let mut year = 0;
        while cum < 0.20 * (1.0 - 1e-9) {
            cum = apply_fade(cum, 0.02, false);
            year += 1;
        }
        assert_eq!(year, 10);
        // accelerated fade to a 40% threshold: 10 + ceil(20 / 6) = 14
        let mut cum = 0.0;
        let mut year = 0;
        while cum < 0.40 * (1.0 - 1e-9) {
            cum = apply_fade(cum, 0.02, true);
            year += 1;
        }
        assert_eq!(year, 14);
    }

    #[test]
    fn typical_day_selection_on_synthetic_2021() {
        use crate::market::write_market_day;
        let dir = tempfile::tempdir().unwrap();
        // flat prices except an extreme outlier on 2021-03-01 (Monday)
        for date in year_dates(2021) {
            let price = if date == NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() {
                5000.0
            } else {
                30.0 + date.day() as f64 * 0.01
            };
            let day = MarketDay::new(
                date,
                vec![price; 24],
                vec![5.0; 24],
                vec![2.0; 24],
                vec![3.0; 24],
            )
            .unwrap();
            write_market_day(&day, &crate::market::day_dir(dir.path(), date)).unwrap();
        }
        let set = select_typical_days(2021, dir.path()).unwrap();
        assert_eq!(set.dates.len(), 36);
        assert_eq!(set.scale_factor, 10);

        // counting rule: 24 weekday slots, 12 weekend-or-festival slots
        let weekdays = set
            .kinds
            .iter()
            .filter(|k| **k == SlotKind::Weekday)
            .count();
        assert_eq!(weekdays, 24);
        assert_eq!(set.kinds.len() - weekdays, 12);

        // the three festivals are present
        for (m, d) in [(7, 4), (11, 1), (12, 25)] {
            let date = NaiveDate::from_ymd_opt(2021, m, d).unwrap();
            assert!(set.dates.contains(&date), "{date} missing");
        }

        // month composition: two weekdays and one weekend day each month
        for month in 1..=12u32 {
            let in_month: Vec<NaiveDate> = set
                .dates
                .iter()
                .copied()
                .filter(|d| d.month() == month)
                .collect();
            assert_eq!(in_month.len(), 3, "month {month}");
            let weekend = in_month.iter().filter(|d| is_weekend(**d)).count();
            assert_eq!(weekend, 1, "month {month}: {in_month:?}");
        }

        // outlier 2021-03-01 was re-selected: swapped to the next weekday
        assert!(!set
            .dates
            .contains(&NaiveDate::from_ymd_opt(2021, 3, 1).unwrap()));
        assert!(set
            .dates
            .contains(&NaiveDate::from_ymd_opt(2021, 3, 2).unwrap()));
    }

    #[test]
    fn selection_requires_festival_data() {
        use crate::market::write_market_day;
        let dir = tempfile::tempdir().unwrap();
        for date in year_dates(2021) {
            if date == NaiveDate::from_ymd_opt(2021, 7, 4).unwrap() {
                continue;
            }
            let day = MarketDay::new(
                date,
                vec![30.0; 24],
                vec![5.0; 24],
                vec![2.0; 24],
                vec![3.0; 24],
            )
            .unwrap();
            write_market_day(&day, &crate::market::day_dir(dir.path(), date)).unwrap();
        }
        assert!(matches!(
            select_typical_days(2021, dir.path()),
            Err(LifecycleError::MissingData(_))
        ));
    }
}
