//! Daily profit-maximizing dispatch: builds the mixed-integer program for
//! one market day, solves it exactly by branch and bound over the hourly
//! charge/discharge mode binaries, and decomposes the optimum into income,
//! cost, and degradation terms.
//!
//! Per hour the program carries continuous charge, discharge, regulation,
//! and reserve bids, the end-of-hour energy level, the market energy change,
//! and an auxiliary variable bounding the absolute SoC step (which prices
//! degradation linearly); one binary picks the charge-or-discharge mode.
//! The SoC trajectory is pinned to E_min at both ends of the day.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degradation::{
    capacity_loss, extract_half_cycles, DegradationError, DegradationParams, HalfCycleList,
};
use crate::lp::{LinearProgram, LpError, LpSolution, Relation, Row};
use crate::market::MarketDay;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("invalid battery parameters: {0}")]
    InvalidParams(String),
    #[error("parameters admit no feasible schedule: {0}")]
    InfeasibleParams(String),
    #[error("daily program is infeasible")]
    Infeasible,
    #[error("daily program is unbounded, which indicates a modeling bug")]
    Unbounded,
    #[error("recomputed objective {recomputed} does not match solver objective {solver}")]
    ObjectiveMismatch { solver: f64, recomputed: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Degradation(#[from] DegradationError),
}

/// Physical and market parameters of the storage asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    /// Rated power, MW.
    pub p_r: f64,
    /// Rated energy, MWh.
    pub e_r: f64,
    /// Lower energy limit, MWh.
    pub e_min: f64,
    /// Upper energy limit, MWh.
    pub e_max: f64,
    /// Charging efficiency, fraction.
    pub eff_ch: f64,
    /// Discharging efficiency, fraction.
    pub eff_dch: f64,
    /// Self-discharge loss per hour, fraction of stored energy.
    pub r_self: f64,
    /// Sustained-output interval for spinning reserve, hours.
    pub t_res: f64,
    /// Sustained-output interval for regulation, hours.
    pub t_reg: f64,
    /// Probability that committed reserve is deployed.
    pub prob_res: f64,
    /// Regulation throughput per MW of capacity, MWh/MW/h.
    pub e_reg: f64,
    /// Historical regulation performance score, fraction.
    pub score_perf: f64,
    /// RegD-to-RegA mileage ratio.
    pub r_mileage: f64,
    /// Fixed O&M, $/MW/day.
    pub k_fix: f64,
    /// Variable O&M, $/MWh of throughput.
    pub k_var: f64,
    /// Full battery replacement cost, $; prices the capacity loss.
    pub cost_bat_unit: f64,
}

impl BatteryParams {
    /// The 10 MW / 20 MWh grid-side case-study asset with the LFP
    /// replacement cost.
    pub fn case_study() -> Self {
        BatteryParams {
            p_r: 10.0,
            e_r: 20.0,
            e_min: 2.0,
            e_max: 18.0,
            eff_ch: 0.94,
            eff_dch: 0.94,
            r_self: 0.01,
            t_res: 1.0,
            t_reg: 0.25,
            prob_res: 0.05,
            e_reg: 0.25,
            score_perf: 0.9,
            r_mileage: 2.8,
            k_fix: 10.0,
            k_var: 0.5,
            cost_bat_unit: 4_150_000.0 * 4.0 / 11.0,
        }
    }

    pub fn validate(&self) -> Result<(), DispatchError> {
        let err = |msg: String| Err(DispatchError::InvalidParams(msg));
        if !(self.p_r >= 0.0 && self.p_r.is_finite()) {
            return err(format!("p_r must be non-negative, got {}", self.p_r));
        }
        if self.e_r.is_nan() || self.e_r <= 0.0 {
            return err(format!("e_r must be positive, got {}", self.e_r));
        }
        if !(self.eff_ch > 0.0 && self.eff_ch <= 1.0) {
            return err(format!("eff_ch must lie in (0, 1], got {}", self.eff_ch));
        }
        if !(self.eff_dch > 0.0 && self.eff_dch <= 1.0) {
            return err(format!("eff_dch must lie in (0, 1], got {}", self.eff_dch));
        }
        if !(self.r_self >= 0.0 && self.r_self < 1.0) {
            return err(format!("r_self must lie in [0, 1), got {}", self.r_self));
        }
        if !(0.0 <= self.e_min && self.e_min <= self.e_max && self.e_max <= self.e_r) {
            return err(format!(
                "energy limits must satisfy 0 <= e_min <= e_max <= e_r, got [{}, {}] with e_r {}",
                self.e_min, self.e_max, self.e_r
            ));
        }
        if !(self.prob_res >= 0.0 && self.prob_res <= 1.0) {
            return err(format!(
                "prob_res must lie in [0, 1], got {}",
                self.prob_res
            ));
        }
        if !(self.score_perf >= 0.0 && self.score_perf <= 1.0) {
            return err(format!(
                "score_perf must lie in [0, 1], got {}",
                self.score_perf
            ));
        }
        if !(self.t_res > 0.0 && self.t_reg > 0.0) {
            return err(format!(
                "t_res and t_reg must be positive, got {} and {}",
                self.t_res, self.t_reg
            ));
        }
        if !(self.e_reg >= 0.0 && self.r_mileage >= 0.0) {
            return err("e_reg and r_mileage must be non-negative".to_string());
        }
        if !(self.k_fix >= 0.0 && self.k_var >= 0.0 && self.cost_bat_unit >= 0.0) {
            return err("cost coefficients must be non-negative".to_string());
        }
        Ok(())
    }
}

/// Variable indices for an `h`-hour program. Hours are 0-based here; SoC
/// carries `h + 1` samples with index 0 being the start of the day.
#[derive(Debug, Clone, Copy)]
struct Layout {
    h: usize,
}

impl Layout {
    fn ch(&self, t: usize) -> usize {
        t
    }
    fn dch(&self, t: usize) -> usize {
        self.h + t
    }
    fn reg(&self, t: usize) -> usize {
        2 * self.h + t
    }
    fn res(&self, t: usize) -> usize {
        3 * self.h + t
    }
    fn soc(&self, i: usize) -> usize {
        4 * self.h + i
    }
    fn de(&self, t: usize) -> usize {
        5 * self.h + 1 + t
    }
    fn v(&self, t: usize) -> usize {
        6 * self.h + 1 + t
    }
    fn b(&self, t: usize) -> usize {
        7 * self.h + 1 + t
    }
    fn n_vars(&self) -> usize {
        8 * self.h + 1
    }
}

/// Hourly price slices for an arbitrary horizon; [`build_daily_program`]
/// wraps a full [`MarketDay`], test fixtures use shorter horizons.
#[derive(Debug, Clone, Copy)]
pub struct HorizonPrices<'a> {
    pub energy: &'a [f64],
    pub reg_cap: &'a [f64],
    pub reg_perf: &'a [f64],
    pub res: &'a [f64],
}

/// The assembled mixed-integer program for one day.
#[derive(Debug, Clone)]
pub struct MilpProgram {
    lp: LinearProgram,
    layout: Layout,
    obj_constant: f64,
    battery: BatteryParams,
}

impl MilpProgram {
    pub fn hours(&self) -> usize {
        self.layout.h
    }
    pub fn num_rows(&self) -> usize {
        self.lp.rows.len()
    }
    pub fn num_binary(&self) -> usize {
        self.layout.h
    }
    pub fn num_continuous(&self) -> usize {
        self.layout.n_vars() - self.layout.h
    }
    pub fn battery(&self) -> &BatteryParams {
        &self.battery
    }
}

/// Builds the dispatch program for arbitrary-length price vectors.
pub fn build_horizon_program(
    prices: &HorizonPrices,
    battery: &BatteryParams,
    degr: &DegradationParams,
) -> Result<MilpProgram, DispatchError> {
    battery.validate()?;
    degr.validate()?;
    if (degr.alpha_cycle - 1.0).abs() > 1e-12 {
        return Err(DispatchError::InvalidParams(format!(
            "the linear degradation surrogate requires alpha_cycle = 1, got {}",
            degr.alpha_cycle
        )));
    }
    let h = prices.energy.len();
    if h == 0 || prices.reg_cap.len() != h || prices.reg_perf.len() != h || prices.res.len() != h {
        return Err(DispatchError::InvalidParams(format!(
            "price vectors must share one non-zero length, got {}/{}/{}/{}",
            prices.energy.len(),
            prices.reg_cap.len(),
            prices.reg_perf.len(),
            prices.res.len()
        )));
    }
    if battery.e_max - battery.e_min <= 0.0 && battery.r_self > 0.0 && battery.e_min > 0.0 {
        return Err(DispatchError::InfeasibleParams(
            "e_min = e_max leaves no headroom to replace self-discharge losses".to_string(),
        ));
    }

    let b = battery;
    let layout = Layout { h };
    let n = layout.n_vars();
    let dt = 1.0; // hourly market granularity
    let kappa = b.cost_bat_unit / (2.0 * b.e_r * degr.n_100);

    let mut objective = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    // never-binding slack bound that keeps the energy-change variable's
    // lower end finite
    let m_de = dt
        * (b.eff_ch * b.p_r
            + (b.p_r + b.prob_res * b.p_r) / b.eff_dch
            + b.e_reg * b.p_r * (1.0 / b.eff_dch - b.eff_ch).abs())
        + 1.0;
    for t in 0..h {
        objective[layout.ch(t)] = -prices.energy[t] * dt - b.k_var * dt;
        objective[layout.dch(t)] = prices.energy[t] * dt - b.k_var * dt;
        objective[layout.reg(t)] = b.score_perf
            * (prices.reg_cap[t] + b.r_mileage * prices.reg_perf[t])
            - 2.0 * b.k_var * b.e_reg * dt;
        objective[layout.res(t)] =
            prices.res[t] + prices.energy[t] * b.prob_res - b.k_var * b.prob_res * dt;
        objective[layout.v(t)] = -kappa;
        lower[layout.de(t)] = -m_de;
        upper[layout.b(t)] = 1.0;
    }
    for i in 0..=h {
        lower[layout.soc(i)] = b.e_min;
        upper[layout.soc(i)] = b.e_max;
    }

    let mut rows = Vec::with_capacity(12 * h + 2);
    for t in 0..h {
        // mode exclusivity with big-M = rated power
        rows.push(Row {
            coeffs: vec![(layout.dch(t), 1.0), (layout.b(t), b.p_r)],
            relation: Relation::Le,
            rhs: b.p_r,
        });
        rows.push(Row {
            coeffs: vec![(layout.ch(t), 1.0), (layout.b(t), -b.p_r)],
            relation: Relation::Le,
            rhs: 0.0,
        });
        rows.push(Row {
            coeffs: vec![(layout.reg(t), 1.0)],
            relation: Relation::Le,
            rhs: b.p_r,
        });
        rows.push(Row {
            coeffs: vec![(layout.res(t), 1.0)],
            relation: Relation::Le,
            rhs: b.p_r,
        });
        // headroom across services
        rows.push(Row {
            coeffs: vec![
                (layout.dch(t), 1.0),
                (layout.reg(t), 1.0),
                (layout.res(t), 1.0),
            ],
            relation: Relation::Le,
            rhs: b.p_r,
        });
        rows.push(Row {
            coeffs: vec![(layout.ch(t), 1.0), (layout.reg(t), 1.0)],
            relation: Relation::Le,
            rhs: b.p_r,
        });
        // sustained output must be backed by stored energy
        rows.push(Row {
            coeffs: vec![
                (layout.dch(t), dt / b.eff_dch),
                (layout.res(t), b.t_res / b.eff_dch),
                (layout.reg(t), b.t_reg / b.eff_dch),
                (layout.soc(t + 1), -1.0),
            ],
            relation: Relation::Le,
            rhs: 0.0,
        });
        rows.push(Row {
            coeffs: vec![
                (layout.soc(t + 1), 1.0),
                (layout.ch(t), dt * b.eff_ch),
                (layout.reg(t), b.t_reg * b.eff_ch),
            ],
            relation: Relation::Le,
            rhs: b.e_max,
        });
        // market energy change and the SoC recursion
        rows.push(Row {
            coeffs: vec![
                (layout.de(t), 1.0),
                (layout.ch(t), -b.eff_ch * dt),
                (layout.dch(t), dt / b.eff_dch),
                (layout.res(t), b.prob_res * dt / b.eff_dch),
                (layout.reg(t), b.e_reg * (1.0 / b.eff_dch - b.eff_ch) * dt),
            ],
            relation: Relation::Eq,
            rhs: 0.0,
        });
        rows.push(Row {
            coeffs: vec![
                (layout.soc(t + 1), 1.0),
                (layout.soc(t), -(1.0 - b.r_self)),
                (layout.de(t), -1.0),
            ],
            relation: Relation::Eq,
            rhs: 0.0,
        });
        // v_t bounds the absolute SoC step, pricing degradation linearly
        rows.push(Row {
            coeffs: vec![
                (layout.v(t), 1.0),
                (layout.soc(t + 1), -1.0),
                (layout.soc(t), 1.0),
            ],
            relation: Relation::Ge,
            rhs: 0.0,
        });
        rows.push(Row {
            coeffs: vec![
                (layout.v(t), 1.0),
                (layout.soc(t + 1), 1.0),
                (layout.soc(t), -1.0),
            ],
            relation: Relation::Ge,
            rhs: 0.0,
        });
    }
    // the day starts and ends at the energy floor
    rows.push(Row {
        coeffs: vec![(layout.soc(0), 1.0)],
        relation: Relation::Eq,
        rhs: b.e_min,
    });
    rows.push(Row {
        coeffs: vec![(layout.soc(h), 1.0)],
        relation: Relation::Eq,
        rhs: b.e_min,
    });

    Ok(MilpProgram {
        lp: LinearProgram {
            n_vars: n,
            objective,
            rows,
            lower,
            upper,
        },
        layout,
        obj_constant: -b.k_fix * b.p_r,
        battery: battery.clone(),
    })
}

/// Builds the program for a validated 24-hour market day.
pub fn build_daily_program(
    day: &MarketDay,
    battery: &BatteryParams,
    degr: &DegradationParams,
) -> Result<MilpProgram, DispatchError> {
    day.validate()
        .map_err(|e| DispatchError::InvalidParams(e.to_string()))?;
    build_horizon_program(
        &HorizonPrices {
            energy: &day.price_energy,
            reg_cap: &day.price_reg_cap,
            reg_perf: &day.price_reg_perf,
            res: &day.price_res,
        },
        battery,
        degr,
    )
}

/// Optimal hourly bids, SoC trajectory, and objective of one solved day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub cap_ch: Vec<f64>,
    pub cap_dch: Vec<f64>,
    pub cap_reg: Vec<f64>,
    pub cap_res: Vec<f64>,
    /// Mode binaries: 1 = charging allowed, 0 = discharging allowed.
    pub mode_b: Vec<u8>,
    /// Energy level e_0..e_H, MWh.
    pub soc: Vec<f64>,
    /// Market energy change per hour, MWh.
    pub delta_e: Vec<f64>,
    /// Optimal daily objective, $.
    pub objective: f64,
}

struct HeapNode {
    bound: f64,
    id: u64,
    fixes: Vec<i8>,
    x: Vec<f64>,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // best bound first; equal bounds explore the earlier-created node,
        // so the b_t = 1 child of the lower hour wins ties
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

const NODE_LIMIT: u64 = 1_000_000;

/// Solves the daily program to proven optimality by best-first branch and
/// bound over the hourly mode binaries.
pub fn solve_daily(program: &MilpProgram) -> Result<DispatchSolution, DispatchError> {
    let lp = &program.lp;
    let layout = program.layout;
    let h = layout.h;
    let b = &program.battery;
    let tol_c = 1e-7 * b.p_r.max(1e-3);
    let gap = |inc: f64| 1e-9 * (1.0 + inc.abs());

    let bounds_for = |fixes: &[i8]| {
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        for (t, &f) in fixes.iter().enumerate() {
            if f >= 0 {
                lower[layout.b(t)] = f as f64;
                upper[layout.b(t)] = f as f64;
            }
        }
        (lower, upper)
    };
    let solve_node = |fixes: &[i8]| -> Result<Option<LpSolution>, DispatchError> {
        let (lower, upper) = bounds_for(fixes);
        match lp.solve_with_bounds(&lower, &upper) {
            Ok(sol) => Ok(Some(sol)),
            Err(LpError::Infeasible) => Ok(None),
            Err(LpError::Unbounded) => Err(DispatchError::Unbounded),
            Err(LpError::Stalled) => Err(DispatchError::Numerical(
                "simplex stalled on a relaxation".to_string(),
            )),
        }
    };

    // lowest hour whose relaxation charges and discharges simultaneously
    let complementarity_violation = |x: &[f64]| -> Option<usize> {
        (0..h).find(|&t| x[layout.ch(t)] > tol_c && x[layout.dch(t)] > tol_c)
    };

    let root_fixes = vec![-1i8; h];
    let Some(root) = solve_node(&root_fixes)? else {
        return Err(DispatchError::Infeasible);
    };

    let mut heap = std::collections::BinaryHeap::new();
    let mut next_id = 0u64;
    heap.push(HeapNode {
        bound: root.objective + program.obj_constant,
        id: next_id,
        fixes: root_fixes,
        x: root.x,
    });
    next_id += 1;

    let mut incumbent: Option<(f64, LpSolution, Vec<u8>)> = None;

    while let Some(node) = heap.pop() {
        if let Some((inc_val, _, _)) = &incumbent {
            if node.bound <= inc_val + gap(*inc_val) {
                break;
            }
        }
        if next_id > NODE_LIMIT {
            return Err(DispatchError::Numerical(
                "branch and bound exceeded the node limit".to_string(),
            ));
        }

        match complementarity_violation(&node.x) {
            None => {
                // candidate: pin every free binary to the mode the
                // relaxation chose and re-solve for an exact vertex
                let mut modes = node.fixes.clone();
                for (t, mode) in modes.iter_mut().enumerate() {
                    if *mode < 0 {
                        *mode = i8::from(node.x[layout.ch(t)] > tol_c);
                    }
                }
                match solve_node(&modes)? {
                    Some(exact) => {
                        let value = exact.objective + program.obj_constant;
                        let better = match &incumbent {
                            None => true,
                            Some((inc_val, _, _)) => value > *inc_val,
                        };
                        if better {
                            incumbent =
                                Some((value, exact, modes.iter().map(|&m| m as u8).collect()));
                        }
                    }
                    None => {
                        // zeroing a hair-thin flow broke feasibility; branch
                        // on the first free hour instead
                        if let Some(t) = (0..h).find(|&t| node.fixes[t] < 0) {
                            for mode in [1i8, 0i8] {
                                let mut fixes = node.fixes.clone();
                                fixes[t] = mode;
                                if let Some(sol) = solve_node(&fixes)? {
                                    heap.push(HeapNode {
                                        bound: sol.objective + program.obj_constant,
                                        id: next_id,
                                        fixes,
                                        x: sol.x,
                                    });
                                }
                                next_id += 1;
                            }
                        }
                    }
                }
            }
            Some(t) => {
                for mode in [1i8, 0i8] {
                    let mut fixes = node.fixes.clone();
                    fixes[t] = mode;
                    if let Some(sol) = solve_node(&fixes)? {
                        let bound = sol.objective + program.obj_constant;
                        let keep = match &incumbent {
                            None => true,
                            Some((inc_val, _, _)) => bound > inc_val + gap(*inc_val),
                        };
                        if keep {
                            heap.push(HeapNode {
                                bound,
                                id: next_id,
                                fixes,
                                x: sol.x,
                            });
                        }
                    }
                    next_id += 1;
                }
            }
        }
    }

    let Some((value, exact, modes)) = incumbent else {
        return Err(DispatchError::Infeasible);
    };
    Ok(extract_solution(program, value, &exact, &modes))
}

fn extract_solution(
    program: &MilpProgram,
    value: f64,
    sol: &LpSolution,
    modes: &[u8],
) -> DispatchSolution {
    let layout = program.layout;
    let b = &program.battery;
    let h = layout.h;
    let clean = |v: f64| if v.abs() < 1e-11 { 0.0 } else { v };

    let mut cap_ch = Vec::with_capacity(h);
    let mut cap_dch = Vec::with_capacity(h);
    let mut cap_reg = Vec::with_capacity(h);
    let mut cap_res = Vec::with_capacity(h);
    let mut delta_e = Vec::with_capacity(h);
    for (t, &mode) in modes.iter().enumerate() {
        // the fixed mode makes exclusivity exact
        cap_ch.push(if mode == 1 {
            clean(sol.x[layout.ch(t)]).max(0.0)
        } else {
            0.0
        });
        cap_dch.push(if mode == 0 {
            clean(sol.x[layout.dch(t)]).max(0.0)
        } else {
            0.0
        });
        cap_reg.push(clean(sol.x[layout.reg(t)]).max(0.0));
        cap_res.push(clean(sol.x[layout.res(t)]).max(0.0));
        delta_e.push(clean(sol.x[layout.de(t)]));
    }
    let soc: Vec<f64> = (0..=h)
        .map(|i| sol.x[layout.soc(i)].clamp(b.e_min, b.e_max))
        .collect();

    DispatchSolution {
        cap_ch,
        cap_dch,
        cap_reg,
        cap_res,
        mode_b: modes.to_vec(),
        soc,
        delta_e,
        objective: value,
    }
}

/// Largest scaled violation of the operational constraints by a solution.
/// Power rows are scaled by rated power, energy rows by rated energy.
pub fn constraint_violation(sol: &DispatchSolution, b: &BatteryParams) -> f64 {
    let h = sol.cap_ch.len();
    let dt = 1.0;
    let p_scale = b.p_r.max(1.0);
    let e_scale = b.e_r.max(1.0);
    let mut worst = 0.0f64;
    let mut track = |v: f64| worst = worst.max(v);

    for t in 0..h {
        let (ch, dch, reg, res) = (
            sol.cap_ch[t],
            sol.cap_dch[t],
            sol.cap_reg[t],
            sol.cap_res[t],
        );
        let bt = f64::from(sol.mode_b[t]);
        for cap in [ch, dch, reg, res] {
            track(-cap / p_scale);
        }
        track((dch - b.p_r * (1.0 - bt)) / p_scale);
        track((ch - b.p_r * bt) / p_scale);
        track((reg - b.p_r) / p_scale);
        track((res - b.p_r) / p_scale);
        track((dch + reg + res - b.p_r) / p_scale);
        track((ch + reg - b.p_r) / p_scale);

        let e_next = sol.soc[t + 1];
        track(((dch * dt + res * b.t_res + reg * b.t_reg) / b.eff_dch - e_next) / e_scale);
        track((e_next + (ch * dt + reg * b.t_reg) * b.eff_ch - b.e_max) / e_scale);

        let de_expected = (ch * b.eff_ch
            - (dch + res * b.prob_res) / b.eff_dch
            - b.e_reg * reg * (1.0 / b.eff_dch - b.eff_ch))
            * dt;
        track((sol.delta_e[t] - de_expected).abs() / e_scale);
        track((e_next - (1.0 - b.r_self) * sol.soc[t] - sol.delta_e[t]).abs() / e_scale);
    }
    for &e in &sol.soc {
        track((b.e_min - e) / e_scale);
        track((e - b.e_max) / e_scale);
    }
    track((sol.soc[0] - b.e_min).abs() / e_scale);
    track((sol.soc[h] - b.e_min).abs() / e_scale);
    worst
}

/// Income, cost, and degradation decomposition of one simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyResult {
    /// Load-shift income in the energy market, $. May be negative.
    pub income_energy: f64,
    /// Regulation capacity plus performance income, $.
    pub income_reg: f64,
    /// Spinning reserve income including expected deployment energy, $.
    pub income_res: f64,
    pub cost_op_fix: f64,
    pub cost_op_var: f64,
    /// Capacity fraction lost over the day.
    pub cap_loss: f64,
    /// Degradation cost, $: replacement cost times capacity loss.
    pub cost_loss: f64,
    pub gross_income: f64,
    pub half_cycles: HalfCycleList,
    /// Energy delivered to the grid, MWh.
    pub energy_out: f64,
    /// Energy drawn from the grid, MWh.
    pub energy_in: f64,
    /// Money spent buying charging energy, $.
    pub charge_cost: f64,
}

/// Recomputes every income and cost term of a solution directly from the
/// payment formulas and checks the solver objective against the
/// decomposition identity.
pub fn evaluate_solution(
    sol: &DispatchSolution,
    day: &MarketDay,
    b: &BatteryParams,
    d: &DegradationParams,
) -> Result<DailyResult, DispatchError> {
    let h = sol.cap_ch.len();
    let dt = 1.0;
    let mut income_energy = 0.0;
    let mut income_reg = 0.0;
    let mut income_res = 0.0;
    let mut cost_op_var = 0.0;
    let mut energy_out = 0.0;
    let mut energy_in = 0.0;
    let mut charge_cost = 0.0;
    for t in 0..h {
        let (ch, dch, reg, res) = (
            sol.cap_ch[t],
            sol.cap_dch[t],
            sol.cap_reg[t],
            sol.cap_res[t],
        );
        income_energy += day.price_energy[t] * (dch - ch) * dt;
        income_reg += day.price_reg_cap[t] * reg * b.score_perf
            + day.price_reg_perf[t] * reg * b.r_mileage * b.score_perf;
        income_res += day.price_res[t] * res + day.price_energy[t] * res * b.prob_res;
        cost_op_var += b.k_var * (dch + ch + b.prob_res * res + 2.0 * b.e_reg * reg) * dt;
        energy_out += (dch + b.prob_res * res + b.e_reg * reg) * dt;
        energy_in += (ch + b.e_reg * reg) * dt;
        charge_cost += day.price_energy[t] * ch * dt;
    }
    let cost_op_fix = b.k_fix * b.p_r;
    let half_cycles = extract_half_cycles(&sol.soc, b.e_r)?;
    let cap_loss = capacity_loss(&half_cycles, d);
    let cost_loss = b.cost_bat_unit * cap_loss;
    let gross_income = income_energy + income_reg + income_res;
    let recomputed = gross_income - cost_op_fix - cost_op_var - cost_loss;
    if (recomputed - sol.objective).abs() > 1e-6 * (1.0 + sol.objective.abs()) {
        return Err(DispatchError::ObjectiveMismatch {
            solver: sol.objective,
            recomputed,
        });
    }
    Ok(DailyResult {
        income_energy,
        income_reg,
        income_res,
        cost_op_fix,
        cost_op_var,
        cap_loss,
        cost_loss,
        gross_income,
        half_cycles,
        energy_out,
        energy_in,
        charge_cost,
    })
}

/// Builds, solves, and evaluates one market day.
pub fn simulate_day(
    day: &MarketDay,
    b: &BatteryParams,
    d: &DegradationParams,
) -> Result<(DispatchSolution, DailyResult), DispatchError> {
    let program = build_daily_program(day, b, d)?;
    let sol = solve_daily(&program)?;
    let result = evaluate_solution(&sol, day, b, d)?;
    Ok((sol, result))
}
