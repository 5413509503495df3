//! Economic viability analysis of grid-scale battery storage.
//!
//! The crate simulates a battery asset bidding into energy, frequency
//! regulation, and spinning reserve markets with degradation priced into
//! the daily dispatch optimization, projects the results over the asset's
//! life via typical-day or clustering methods, and computes IRR and LCOS.
//!
//! Representative-day solves and sensitivity scenarios are data-parallel;
//! the default `parallel` feature fans them out over rayon, and disabling
//! it falls back to sequential execution with identical results.

pub mod cluster;
pub mod config;
pub mod degradation;
pub mod dispatch;
pub mod finance;
pub mod lifecycle;
pub mod lp;
pub mod market;
pub mod parallel;
pub mod scenario;
pub mod synth;

pub use cluster::{cluster_days, dtw_distance, ClusterModel, Metric};
pub use config::{Config, Resolved, ScenarioSpec};
pub use degradation::{DegradationParams, HalfCycleList, StressPoint};
pub use dispatch::{
    build_daily_program, evaluate_solution, simulate_day, solve_daily, BatteryParams, DailyResult,
    DispatchSolution, MilpProgram,
};
pub use finance::{build_cashflows, irr, lcos, npv, CashFlowSeries, Chemistry, CostModel};
pub use lifecycle::{run_lifecycle, LifecycleLedger, LifecycleRun, Method, TypicalDaySet};
pub use market::{load_market_day, MarketDay, RegSignal};
