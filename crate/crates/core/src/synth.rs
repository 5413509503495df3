//! Deterministic synthetic market data: shaped day profiles, whole years
//! with planted cluster structure, and price-tree writers. Used by the
//! test suites, the benchmarks, and for trying the pipeline without real
//! market archives.

use chrono::{Datelike, Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market::{day_dir, write_market_day, MarketDay, MarketError, HOURS};

/// A day whose revenue is dominated by overnight frequency regulation with
/// an evening reserve peak and a mild energy-price valley/peak pattern:
/// regulation prices are high through hours 1-12, the energy price dips in
/// hours 1-2 and 13-16 and peaks in hours 18-21, and reserve prices peak
/// in hours 18-22.
pub fn regulation_heavy_day(date: NaiveDate) -> MarketDay {
    let mut energy = Vec::with_capacity(HOURS);
    let mut reg_cap = Vec::with_capacity(HOURS);
    let mut reg_perf = Vec::with_capacity(HOURS);
    let mut res = Vec::with_capacity(HOURS);
    for t in 1..=HOURS {
        energy.push(match t {
            1..=2 => 14.0,
            13..=16 => 18.0,
            18..=21 => 42.0,
            _ => 28.0,
        });
        let reg_high = t <= 12;
        reg_cap.push(if reg_high { 38.0 } else { 4.0 });
        reg_perf.push(if reg_high { 16.0 } else { 1.5 });
        res.push(match t {
            18..=22 => 15.0,
            _ => 1.0,
        });
    }
    MarketDay::new(date, energy, reg_cap, reg_perf, res).expect("synthetic day is valid")
}

/// Distinct day shapes for planted clustering years. `shape` selects one
/// of five qualitatively different profiles; `noise` perturbs every price
/// multiplicatively without moving the shape.
pub fn shaped_day(date: NaiveDate, shape: usize, rng: &mut ChaCha8Rng, noise: f64) -> MarketDay {
    let jitter = |rng: &mut ChaCha8Rng| 1.0 + rng.random_range(-noise..=noise);
    let mut energy = Vec::with_capacity(HOURS);
    let mut reg_cap = Vec::with_capacity(HOURS);
    let mut reg_perf = Vec::with_capacity(HOURS);
    let mut res = Vec::with_capacity(HOURS);
    for t in 1..=HOURS {
        let x = t as f64;
        let (e, rc, rp, rs) = match shape % 5 {
            // regulation-heavy overnight profile with an evening reserve peak
            0 => {
                let reg_high = t <= 12;
                (
                    if (18..=21).contains(&t) { 42.0 } else { 20.0 },
                    if reg_high { 36.0 } else { 4.0 },
                    if reg_high { 15.0 } else { 1.0 },
                    if (18..=22).contains(&t) { 14.0 } else { 1.0 },
                )
            }
            // steep midday solar valley in the energy price
            1 => (
                45.0 - 30.0 * (-((x - 13.0) / 3.5).powi(2)).exp(),
                6.0,
                2.0,
                5.0,
            ),
            // double-peaked commuter day
            2 => (
                25.0 + 20.0 * (-((x - 8.0) / 2.0).powi(2)).exp()
                    + 25.0 * (-((x - 19.0) / 2.5).powi(2)).exp(),
                8.0 + 4.0 * (x / 24.0),
                3.0,
                2.0 + 6.0 * (-((x - 19.0) / 3.0).powi(2)).exp(),
            ),
            // flat cheap day with strong reserve demand
            3 => (
                15.0 + 0.5 * (x * 0.7).sin(),
                5.0,
                1.5,
                18.0 + 3.0 * (x * 0.4).cos(),
            ),
            // volatile high-priced day
            _ => (
                60.0 + 18.0 * (x * 0.9).sin(),
                14.0 + 6.0 * (x * 0.5).cos().abs(),
                6.0,
                8.0,
            ),
        };
        energy.push(e * jitter(rng));
        reg_cap.push((rc * jitter(rng)).max(0.0));
        reg_perf.push((rp * jitter(rng)).max(0.0));
        res.push((rs * jitter(rng)).max(0.0));
    }
    MarketDay::new(date, energy, reg_cap, reg_perf, res).expect("synthetic day is valid")
}

/// A full calendar year of shaped days with a planted cluster label per
/// day. Labels cycle through `n_shapes` profiles deterministically.
pub fn planted_year(
    year: i32,
    n_shapes: usize,
    seed: u64,
    noise: f64,
) -> (Vec<MarketDay>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut days = Vec::with_capacity(366);
    let mut labels = Vec::with_capacity(366);
    let mut cursor = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
    let mut index = 0usize;
    while cursor.year() == year {
        let shape = index % n_shapes.max(1);
        days.push(shaped_day(cursor, shape, &mut rng, noise));
        labels.push(shape);
        cursor = cursor.checked_add_days(Days::new(1)).unwrap();
        index += 1;
    }
    (days, labels)
}

/// Uniformly random prices for solver stress tests: energy may go
/// negative, ancillary prices stay non-negative.
pub fn random_day(date: NaiveDate, rng: &mut ChaCha8Rng) -> MarketDay {
    let energy: Vec<f64> = (0..HOURS).map(|_| rng.random_range(-15.0..80.0)).collect();
    let reg_cap: Vec<f64> = (0..HOURS).map(|_| rng.random_range(0.0..30.0)).collect();
    let reg_perf: Vec<f64> = (0..HOURS).map(|_| rng.random_range(0.0..15.0)).collect();
    let res: Vec<f64> = (0..HOURS).map(|_| rng.random_range(0.0..25.0)).collect();
    MarketDay::new(date, energy, reg_cap, reg_perf, res).expect("synthetic day is valid")
}

/// Writes days into the `<root>/<YYYY-MM-DD>/{energy,reg,res}.csv` layout.
pub fn write_price_tree(root: &std::path::Path, days: &[MarketDay]) -> Result<(), MarketError> {
    for day in days {
        write_market_day(day, &day_dir(root, day.date))?;
    }
    Ok(())
}
