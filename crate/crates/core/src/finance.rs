//! Project economics: cash-flow assembly, internal rate of return, and
//! levelized cost of storage with stepped discount rates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifecycle::LifecycleLedger;

#[derive(Debug, Error)]
pub enum FinanceError {
    #[error("ledger holds no completed years")]
    EmptyLedger,
    #[error("cash flows never change sign, IRR is undefined")]
    NoSignChange,
    #[error("no NPV root in the bracket (-0.99, 10]")]
    NoRootInBracket,
    #[error("discounted delivered energy is zero")]
    ZeroEnergy,
    #[error("invalid inputs: {0}")]
    Invalid(String),
}

/// Battery chemistry selector for bundled presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chemistry {
    Lfp,
    Ncm,
}

impl Chemistry {
    /// Assumed recycling value ratio of the retired battery.
    pub fn battery_recycle_ratio(self) -> f64 {
        match self {
            Chemistry::Lfp => 0.30,
            Chemistry::Ncm => 0.10,
        }
    }
}

/// Fixed investment costs and end-of-life recycling terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Battery purchase cost, $.
    pub cost_bat_pur: f64,
    /// Battery replacement cost, $: the decayed re-purchase price that
    /// values capacity loss.
    pub cost_bat_exc: f64,
    /// Power-conversion equipment cost, $.
    pub cost_equ: f64,
    /// Station design and construction cost, $.
    pub cost_sta: f64,
    /// Battery price decline ratio at replacement time.
    pub k_dec: f64,
    pub recycle_ratio_bat: f64,
    pub recycle_ratio_equ: f64,
    /// End-of-life recycling income, $.
    pub income_rcy: f64,
}

impl CostModel {
    /// Derives the replacement cost and recycling income from the primary
    /// inputs.
    pub fn new(
        cost_bat_pur: f64,
        cost_equ: f64,
        cost_sta: f64,
        k_dec: f64,
        recycle_ratio_bat: f64,
        recycle_ratio_equ: f64,
    ) -> Self {
        CostModel {
            cost_bat_pur,
            cost_bat_exc: k_dec * cost_bat_pur,
            cost_equ,
            cost_sta,
            k_dec,
            recycle_ratio_bat,
            recycle_ratio_equ,
            income_rcy: recycle_ratio_bat * cost_bat_pur + recycle_ratio_equ * cost_equ,
        }
    }

    /// LFP case-study price set.
    pub fn lfp() -> Self {
        CostModel::new(
            4_150_000.0,
            1_950_000.0,
            1_280_000.0,
            4.0 / 11.0,
            Chemistry::Lfp.battery_recycle_ratio(),
            0.40,
        )
    }

    /// NCM case-study price set: roughly double the LFP battery price.
    pub fn ncm() -> Self {
        CostModel::new(
            8_330_000.0,
            1_950_000.0,
            1_280_000.0,
            4.0 / 11.0,
            Chemistry::Ncm.battery_recycle_ratio(),
            0.40,
        )
    }

    pub fn validate(&self) -> Result<(), FinanceError> {
        for (name, v) in [
            ("cost_bat_pur", self.cost_bat_pur),
            ("cost_bat_exc", self.cost_bat_exc),
            ("cost_equ", self.cost_equ),
            ("cost_sta", self.cost_sta),
            ("k_dec", self.k_dec),
            ("recycle_ratio_bat", self.recycle_ratio_bat),
            ("recycle_ratio_equ", self.recycle_ratio_equ),
            ("income_rcy", self.income_rcy),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(FinanceError::Invalid(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Battery replacement cost: the purchase price scaled by the assumed
/// decline ratio.
pub fn replacement_cost(costs: &CostModel) -> f64 {
    costs.k_dec * costs.cost_bat_pur
}

/// End-of-life recycling income with the chemistry's standard battery
/// recycling ratio and the model's equipment ratio.
pub fn recycling_income(costs: &CostModel, chemistry: Chemistry) -> f64 {
    chemistry.battery_recycle_ratio() * costs.cost_bat_pur
        + costs.recycle_ratio_equ * costs.cost_equ
}

/// Year-indexed cash flows, C_0 (investment, negative) through C_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashFlowSeries {
    pub flows: Vec<f64>,
}

impl CashFlowSeries {
    pub fn new(flows: Vec<f64>) -> Result<Self, FinanceError> {
        if flows.len() < 2 {
            return Err(FinanceError::Invalid(format!(
                "a cash-flow series needs C_0 and at least one year, got {} entries",
                flows.len()
            )));
        }
        Ok(CashFlowSeries { flows })
    }

    fn sign_changes(&self) -> usize {
        let mut changes = 0;
        let mut last = 0.0f64;
        for &f in &self.flows {
            if f == 0.0 {
                continue;
            }
            if last != 0.0 && (f > 0.0) != (last > 0.0) {
                changes += 1;
            }
            last = f;
        }
        changes
    }
}

/// Whole-life cash flows per the investment structure: the initial outlay
/// up front, market income net of O&M each year, recycling income added to
/// the final year.
pub fn build_cashflows(
    ledger: &LifecycleLedger,
    costs: &CostModel,
) -> Result<CashFlowSeries, FinanceError> {
    if ledger.rows.is_empty() {
        return Err(FinanceError::EmptyLedger);
    }
    let mut flows = Vec::with_capacity(ledger.rows.len() + 1);
    flows.push(-(costs.cost_bat_pur + costs.cost_equ + costs.cost_sta));
    let mut prev_income = 0.0;
    let mut prev_cost = 0.0;
    for row in &ledger.rows {
        flows.push((row.income - prev_income) - (row.cost_op - prev_cost));
        prev_income = row.income;
        prev_cost = row.cost_op;
    }
    *flows.last_mut().unwrap() += costs.income_rcy;
    CashFlowSeries::new(flows)
}

/// Net present value at a flat discount rate; C_0 enters with its sign.
pub fn npv(flows: &CashFlowSeries, rate: f64) -> f64 {
    flows
        .flows
        .iter()
        .enumerate()
        .map(|(t, &c)| c / (1.0 + rate).powi(t as i32))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrrSolution {
    pub rate: f64,
    /// NPV at the returned rate; should be ~0.
    pub npv_residual: f64,
    /// Set when the flows change sign more than once, so other roots may
    /// exist. The smallest root in the bracket is returned.
    pub multiple_sign_changes: bool,
}

const IRR_GRID_STEPS: usize = 1099; // -0.99 to 10.00 in steps of 0.01

/// Internal rate of return: the smallest discount rate in (-0.99, 10] at
/// which the series' NPV vanishes. Grid scan plus bisection.
pub fn irr(flows: &CashFlowSeries) -> Result<IrrSolution, FinanceError> {
    if flows.sign_changes() == 0 {
        return Err(FinanceError::NoSignChange);
    }
    let multiple = flows.sign_changes() > 1;
    let tol = 1e-9 * flows.flows[0].abs().max(1.0);
    let grid = |k: usize| (k as f64) / 100.0 - 0.99;

    let mut prev_rate = grid(0);
    let mut prev_npv = npv(flows, prev_rate);
    if prev_npv.abs() <= tol {
        return Ok(IrrSolution {
            rate: prev_rate,
            npv_residual: prev_npv,
            multiple_sign_changes: multiple,
        });
    }
    for k in 1..=IRR_GRID_STEPS {
        let rate = grid(k);
        let value = npv(flows, rate);
        if value.abs() <= tol {
            return Ok(IrrSolution {
                rate,
                npv_residual: value,
                multiple_sign_changes: multiple,
            });
        }
        if (value > 0.0) != (prev_npv > 0.0) {
            // bisect inside [prev_rate, rate]
            let (mut lo, mut hi) = (prev_rate, rate);
            let mut lo_npv = prev_npv;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let mid_npv = npv(flows, mid);
                if mid_npv.abs() <= tol {
                    return Ok(IrrSolution {
                        rate: mid,
                        npv_residual: mid_npv,
                        multiple_sign_changes: multiple,
                    });
                }
                if (mid_npv > 0.0) == (lo_npv > 0.0) {
                    lo = mid;
                    lo_npv = mid_npv;
                } else {
                    hi = mid;
                }
            }
            let rate = 0.5 * (lo + hi);
            return Ok(IrrSolution {
                rate,
                npv_residual: npv(flows, rate),
                multiple_sign_changes: multiple,
            });
        }
        prev_rate = rate;
        prev_npv = value;
    }
    Err(FinanceError::NoRootInBracket)
}

/// One year of levelized-cost bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcosYear {
    /// Operating expenditure, $.
    pub opex: f64,
    /// Re-investment capital expenditure, $.
    pub capex_re: f64,
    /// Cost of charging energy, $.
    pub charge_cost: f64,
    /// Income credited against cost, $.
    pub other_income: f64,
    /// Electricity delivered, MWh.
    pub energy_out: f64,
}

/// Inputs to the levelized cost of storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcosInputs {
    pub capex: f64,
    pub yearly: Vec<LcosYear>,
    /// Discount rate per year, aligned with `yearly`. Stepped schedules
    /// compound cumulatively.
    pub discount_schedule: Vec<f64>,
}

/// Levelized cost of storage in $/MWh: discounted lifetime cost over
/// discounted delivered energy. Year t's discount factor is the running
/// product of (1 + rate_s) for s = 1..t.
pub fn lcos(inputs: &LcosInputs) -> Result<f64, FinanceError> {
    if inputs.yearly.is_empty() {
        return Err(FinanceError::Invalid("no operating years".to_string()));
    }
    if inputs.discount_schedule.len() != inputs.yearly.len() {
        return Err(FinanceError::Invalid(format!(
            "discount schedule covers {} years, need {}",
            inputs.discount_schedule.len(),
            inputs.yearly.len()
        )));
    }
    let mut cost = inputs.capex;
    let mut energy = 0.0;
    let mut factor = 1.0;
    for (year, rate) in inputs.yearly.iter().zip(&inputs.discount_schedule) {
        if *rate <= -1.0 {
            return Err(FinanceError::Invalid(format!(
                "discount rate {rate} is at or below -100%"
            )));
        }
        factor *= 1.0 + rate;
        let annual = year.opex + year.capex_re + year.charge_cost - year.other_income;
        cost += annual / factor;
        if year.energy_out < 0.0 {
            return Err(FinanceError::Invalid(format!(
                "delivered energy must be non-negative, got {}",
                year.energy_out
            )));
        }
        energy += year.energy_out / factor;
    }
    if energy <= 0.0 {
        return Err(FinanceError::ZeroEnergy);
    }
    Ok(cost / energy)
}

/// The case-study stepped discount schedule: 8% for the first five
/// operating years, 7% for the next five, 6% afterwards.
pub fn stepped_discount_schedule(years: usize) -> Vec<f64> {
    (1..=years)
        .map(|t| match t {
            1..=5 => 0.08,
            6..=10 => 0.07,
            _ => 0.06,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::{LedgerRow, LifecycleLedger};
    use proptest::prelude::*;

    fn ledger_with(rows: Vec<LedgerRow>) -> LifecycleLedger {
        let end = rows.last().map(|r| r.year).unwrap_or(0);
        LifecycleLedger {
            method: "typical".to_string(),
            threshold: 0.2,
            rows,
            end_of_life_year: end,
            truncated: false,
        }
    }

    #[test]
    fn replacement_cost_presets() {
        let lfp = replacement_cost(&CostModel::lfp());
        assert!((lfp - 4.0 / 11.0 * 4_150_000.0).abs() < 1e-6);
        assert!((lfp - 1_509_090.909).abs() < 1.0);
        let ncm = replacement_cost(&CostModel::ncm());
        assert!((ncm - 3_029_090.909).abs() < 1.0);
        let mut unity = CostModel::lfp();
        unity.k_dec = 1.0;
        assert_eq!(replacement_cost(&unity), unity.cost_bat_pur);
    }

    #[test]
    fn recycling_income_from_the_formula() {
        let lfp = recycling_income(&CostModel::lfp(), Chemistry::Lfp);
        assert!((lfp - (0.30 * 4_150_000.0 + 0.40 * 1_950_000.0)).abs() < 1e-6);
        assert!((lfp - 2_025_000.0).abs() < 1e-6);
        let ncm = recycling_income(&CostModel::ncm(), Chemistry::Ncm);
        assert!((ncm - (0.10 * 8_330_000.0 + 0.40 * 1_950_000.0)).abs() < 1e-6);
        assert!((ncm - 1_613_000.0).abs() < 1e-6);
        let mut zero = CostModel::new(1e6, 1e6, 0.0, 0.5, 0.0, 0.0);
        zero.recycle_ratio_equ = 0.0;
        assert_eq!(recycling_income(&zero, Chemistry::Ncm), 0.1 * 1e6);
        assert_eq!(CostModel::new(0.0, 0.0, 0.0, 0.5, 0.3, 0.4).income_rcy, 0.0);
    }

    #[test]
    fn cashflow_assembly() {
        let costs = CostModel::lfp();
        // idle ledger: no income, no cost, one year of life
        let ledger = ledger_with(vec![LedgerRow {
            year: 1,
            income: 0.0,
            cost_op: 0.0,
            cap_loss: 0.25,
            energy_out: 0.0,
            charge_cost: 0.0,
        }]);
        let flows = build_cashflows(&ledger, &costs).unwrap();
        assert!((flows.flows[0] + 7_380_000.0).abs() < 1.0);
        assert!((flows.flows[1] - costs.income_rcy).abs() < 1e-6);

        let ledger = ledger_with(vec![LedgerRow {
            year: 1,
            income: 100.0,
            cost_op: 10.0,
            cap_loss: 0.25,
            energy_out: 0.0,
            charge_cost: 0.0,
        }]);
        let mut costs5 = costs.clone();
        costs5.income_rcy = 5.0;
        let flows = build_cashflows(&ledger, &costs5).unwrap();
        assert_eq!(flows.flows.len(), 2);
        assert!((flows.flows[1] - 95.0).abs() < 1e-12);

        assert!(matches!(
            build_cashflows(&ledger_with(vec![]), &costs),
            Err(FinanceError::EmptyLedger)
        ));
    }

    #[test]
    fn cashflows_use_annual_deltas_of_the_cumulative_ledger() {
        let costs = CostModel::new(1000.0, 0.0, 0.0, 0.5, 0.0, 0.0);
        let ledger = ledger_with(vec![
            LedgerRow {
                year: 1,
                income: 100.0,
                cost_op: 10.0,
                cap_loss: 0.1,
                energy_out: 0.0,
                charge_cost: 0.0,
            },
            LedgerRow {
                year: 2,
                income: 250.0,
                cost_op: 15.0,
                cap_loss: 0.2,
                energy_out: 0.0,
                charge_cost: 0.0,
            },
        ]);
        let flows = build_cashflows(&ledger, &costs).unwrap();
        assert_eq!(flows.flows, vec![-1000.0, 90.0, 145.0]);
    }

    #[test]
    fn irr_one_period_closed_form() {
        let flows = CashFlowSeries::new(vec![-100.0, 110.0]).unwrap();
        let sol = irr(&flows).unwrap();
        assert!((sol.rate - 0.10).abs() < 1e-12, "rate {}", sol.rate);
        assert!(!sol.multiple_sign_changes);
    }

    #[test]
    fn irr_two_period_quadratic_oracle() {
        // positive root of 60x^2 + 60x - 100 = 0 with x = 1/(1+r),
        // solved independently by the quadratic formula
        let flows = CashFlowSeries::new(vec![-100.0, 60.0, 60.0]).unwrap();
        let sol = irr(&flows).unwrap();
        assert!(
            (sol.rate - 0.130_662_386_291_807_5).abs() < 1e-5,
            "rate {}",
            sol.rate
        );
    }

    #[test]
    fn irr_deferred_payoff() {
        let flows = CashFlowSeries::new(vec![-100.0, 0.0, 121.0]).unwrap();
        let sol = irr(&flows).unwrap();
        assert!((sol.rate - 0.10).abs() < 1e-9);
    }

    #[test]
    fn irr_requires_a_sign_change() {
        let flows = CashFlowSeries::new(vec![-100.0, -5.0, -1.0]).unwrap();
        assert!(matches!(irr(&flows), Err(FinanceError::NoSignChange)));
    }

    #[test]
    fn irr_flags_multiple_sign_changes() {
        // two real roots at 10% and 20%; the smaller one is returned
        let flows = CashFlowSeries::new(vec![-100.0, 230.0, -132.0]).unwrap();
        let sol = irr(&flows).unwrap();
        assert!(sol.multiple_sign_changes);
        assert!((sol.rate - 0.10).abs() < 1e-6, "rate {}", sol.rate);
    }

    #[test]
    fn npv_basics() {
        let flows = CashFlowSeries::new(vec![-100.0, 60.0, 50.0]).unwrap();
        assert!((npv(&flows, 0.0) - 10.0).abs() < 1e-12);
        let even = CashFlowSeries::new(vec![-100.0, 110.0]).unwrap();
        assert!(npv(&even, 0.10).abs() < 1e-12);
    }

    #[test]
    fn lcos_trivial_and_single_discount() {
        let base = LcosYear {
            opex: 0.0,
            capex_re: 0.0,
            charge_cost: 0.0,
            other_income: 0.0,
            energy_out: 100.0,
        };
        let flat = LcosInputs {
            capex: 1000.0,
            yearly: vec![base],
            discount_schedule: vec![0.0],
        };
        assert!((lcos(&flat).unwrap() - 10.0).abs() < 1e-12);
        let discounted = LcosInputs {
            capex: 1000.0,
            yearly: vec![base],
            discount_schedule: vec![0.10],
        };
        assert!((lcos(&discounted).unwrap() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn lcos_stepped_rates_compound() {
        let year = |energy: f64| LcosYear {
            opex: 0.0,
            capex_re: 0.0,
            charge_cost: 0.0,
            other_income: 0.0,
            energy_out: energy,
        };
        let inputs = LcosInputs {
            capex: 0.0,
            yearly: vec![year(10.0), year(10.0)],
            discount_schedule: vec![0.08, 0.07],
        };
        // cost zero except opex in year 2
        let mut with_cost = inputs.clone();
        with_cost.yearly[1].opex = 107.0 * 1.08;
        let value = lcos(&with_cost).unwrap();
        let energy = 10.0 / 1.08 + 10.0 / (1.08 * 1.07);
        assert!((value - 100.0 / energy).abs() < 1e-9);
    }

    #[test]
    fn lcos_rejects_zero_energy() {
        let inputs = LcosInputs {
            capex: 10.0,
            yearly: vec![LcosYear {
                opex: 0.0,
                capex_re: 0.0,
                charge_cost: 0.0,
                other_income: 0.0,
                energy_out: 0.0,
            }],
            discount_schedule: vec![0.05],
        };
        assert!(matches!(lcos(&inputs), Err(FinanceError::ZeroEnergy)));
    }

    #[test]
    fn discount_schedule_steps() {
        let s = stepped_discount_schedule(12);
        assert_eq!(&s[..5], &[0.08; 5]);
        assert_eq!(&s[5..10], &[0.07; 5]);
        assert_eq!(&s[10..], &[0.06; 2]);
    }

    proptest! {
        #[test]
        fn npv_vanishes_at_irr(invest in 50.0f64..500.0,
                               gains in proptest::collection::vec(1.0f64..200.0, 1..8)) {
            let mut flows = vec![-invest];
            flows.extend(gains);
            let series = CashFlowSeries::new(flows).unwrap();
            // single sign change by construction
            if let Ok(sol) = irr(&series) {
                prop_assert!(npv(&series, sol.rate).abs() <= 1e-9 * invest.max(1.0));
            }
        }

        #[test]
        fn irr_scale_invariant(scale in 0.01f64..100.0) {
            let base = CashFlowSeries::new(vec![-100.0, 40.0, 40.0, 40.0]).unwrap();
            let scaled = CashFlowSeries::new(base.flows.iter().map(|f| f * scale).collect()).unwrap();
            let a = irr(&base).unwrap().rate;
            let b = irr(&scaled).unwrap().rate;
            prop_assert!((a - b).abs() < 1e-7);
        }

        #[test]
        fn lcos_homogeneity(c in 0.1f64..10.0) {
            let yearly = vec![
                LcosYear { opex: 50.0, capex_re: 10.0, charge_cost: 20.0, other_income: 5.0, energy_out: 40.0 },
                LcosYear { opex: 55.0, capex_re: 0.0, charge_cost: 25.0, other_income: 0.0, energy_out: 45.0 },
            ];
            let schedule = vec![0.08, 0.07];
            let base = LcosInputs { capex: 1000.0, yearly: yearly.clone(), discount_schedule: schedule.clone() };
            let v = lcos(&base).unwrap();

            let cost_scaled = LcosInputs {
                capex: 1000.0 * c,
                yearly: yearly.iter().map(|y| LcosYear {
                    opex: y.opex * c, capex_re: y.capex_re * c,
                    charge_cost: y.charge_cost * c, other_income: y.other_income * c,
                    energy_out: y.energy_out,
                }).collect(),
                discount_schedule: schedule.clone(),
            };
            prop_assert!((lcos(&cost_scaled).unwrap() - c * v).abs() < 1e-9 * (1.0 + c * v.abs()));

            let energy_scaled = LcosInputs {
                capex: 1000.0,
                yearly: yearly.iter().map(|y| LcosYear { energy_out: y.energy_out * c, ..*y }).collect(),
                discount_schedule: schedule,
            };
            prop_assert!((lcos(&energy_scaled).unwrap() - v / c).abs() < 1e-9 * (1.0 + (v / c).abs()));
        }

        #[test]
        fn lcos_monotone_in_cost_and_energy(extra in 1.0f64..500.0) {
            let yearly = vec![
                LcosYear { opex: 50.0, capex_re: 0.0, charge_cost: 20.0, other_income: 5.0, energy_out: 40.0 },
            ];
            let base = LcosInputs { capex: 1000.0, yearly: yearly.clone(), discount_schedule: vec![0.06] };
            let v = lcos(&base).unwrap();

            let mut pricier = base.clone();
            pricier.yearly[0].opex += extra;
            prop_assert!(lcos(&pricier).unwrap() > v);

            let mut richer = base.clone();
            richer.yearly[0].energy_out += extra;
            prop_assert!(lcos(&richer).unwrap() < v);
        }
    }
}
