//! Sensitivity analysis: re-runs the life-cycle and IRR pipeline under
//! perturbed prices, cycle life, and replacement-cost assumptions, and
//! tabulates annual figures, lifetime, and IRR per scenario.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Resolved, ScenarioSpec};
use crate::finance::{build_cashflows, irr, FinanceError};
use crate::lifecycle::{run_lifecycle, LifecycleError};
use crate::parallel;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error(transparent)]
    Finance(#[from] FinanceError),
}

/// One scenario's outcome: annual figures, lifetime, and IRR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub scenario: String,
    /// Annual gross market income, $.
    pub income: f64,
    /// Annual operation and maintenance cost, $.
    pub cost_op: f64,
    /// Annual degradation cost, $.
    pub cost_loss: f64,
    /// Annual capacity loss, fraction.
    pub cap_loss: f64,
    pub lifetime_years: u32,
    pub irr: f64,
}

fn run_one(
    resolved: &Resolved,
    price_root: &Path,
    name: &str,
    price_scale: f64,
) -> Result<SensitivityRow, SensitivityError> {
    let run = run_lifecycle(&resolved.run_spec(price_root, price_scale))?;
    let flows = build_cashflows(&run.ledger, &resolved.costs)?;
    let irr_solution = irr(&flows)?;
    Ok(SensitivityRow {
        scenario: name.to_string(),
        income: run.annual.income,
        cost_op: run.annual.cost_op,
        cost_loss: run.annual.cost_loss,
        cap_loss: run.annual.cap_loss,
        lifetime_years: run.ledger.end_of_life_year,
        irr: irr_solution.rate,
    })
}

/// Runs the standard case followed by every scenario. Scenario runs are
/// independent and fan out over the worker pool.
pub fn run_sensitivity(
    base: &Resolved,
    scenarios: &[ScenarioSpec],
) -> Result<Vec<SensitivityRow>, SensitivityError> {
    let price_root = base
        .require_price_root()
        .map_err(|_| LifecycleError::MissingData("market.price_root is not set".to_string()))?;
    let mut rows = vec![run_one(base, price_root, "standard", 1.0)?];
    let scenario_rows = parallel::try_map(scenarios, |scenario| {
        let perturbed = scenario.apply(base);
        run_one(&perturbed, price_root, &scenario.name, scenario.price_scale)
    })?;
    rows.extend(scenario_rows);
    Ok(rows)
}

/// Renders rows as the sensitivity CSV table: comma-separated, full
/// precision, LF line endings.
pub fn sensitivity_csv(rows: &[SensitivityRow]) -> String {
    let mut out = String::from("scenario,income,cost_op,cost_loss,cap_loss,lifetime_years,irr\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scenario, r.income, r.cost_op, r.cost_loss, r.cap_loss, r.lifetime_years, r.irr
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let rows = vec![SensitivityRow {
            scenario: "standard".to_string(),
            income: 1234.5,
            cost_op: 10.0,
            cost_loss: 20.25,
            cap_loss: 0.01,
            lifetime_years: 15,
            irr: 0.25,
        }];
        let text = sensitivity_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,income,cost_op,cost_loss,cap_loss,lifetime_years,irr"
        );
        assert_eq!(
            lines.next().unwrap(),
            "standard,1234.5,10,20.25,0.01,15,0.25"
        );
        assert!(lines.next().is_none());
    }
}
