//! Configuration file loading and resolution.
//!
//! The config is a sectioned TOML file with `battery.*`, `degradation.*`,
//! `costs.*`, `market.*`, `lifecycle.*`, and `sensitivity.*` keys. Every
//! section is optional and defaults to the bundled case-study values;
//! unknown keys are a hard error. Resolution cross-wires the sections:
//! the chemistry picks degradation and cost presets, the replacement cost
//! prices degradation in the dispatch objective, and a configured RegD
//! signal supplies the regulation energy rate.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::Metric;
use crate::degradation::DegradationParams;
use crate::dispatch::BatteryParams;
use crate::finance::{Chemistry, CostModel};
use crate::lifecycle::{Method, RunSpec};
use crate::market::{load_reg_signal, mileage_ratio, MarketError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("config has no market.price_root, required by this command")]
    MissingPriceRoot,
}

fn default_true_scale() -> f64 {
    1.0
}

/// One sensitivity scenario: multiplicative perturbations of the standard
/// case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Multiplier applied to all four price families.
    #[serde(default = "default_true_scale")]
    pub price_scale: f64,
    /// Multiplier on the 100%-DoD cycle count.
    #[serde(default = "default_true_scale")]
    pub n100_scale: f64,
    /// Replacement-cost decline ratio replacing the standard 4/11.
    #[serde(default)]
    pub k_dec_override: Option<f64>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.price_scale.is_nan()
            || self.price_scale <= 0.0
            || self.n100_scale.is_nan()
            || self.n100_scale <= 0.0
        {
            return Err(ConfigError::Invalid(format!(
                "scenario {:?}: multipliers must be positive",
                self.name
            )));
        }
        if let Some(kd) = self.k_dec_override {
            if kd.is_nan() || kd <= 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "scenario {:?}: k_dec_override must be positive",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Applies the parameter perturbations; the price multiplier is applied
    /// separately when days are loaded.
    pub fn apply(&self, base: &Resolved) -> Resolved {
        let mut r = base.clone();
        r.degradation.n_100 *= self.n100_scale;
        if let Some(kd) = self.k_dec_override {
            r.costs.k_dec = kd;
            r.costs.cost_bat_exc = kd * r.costs.cost_bat_pur;
            r.battery.cost_bat_unit = r.costs.cost_bat_exc;
        }
        r
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BatterySection {
    p_r: Option<f64>,
    e_r: Option<f64>,
    e_min: Option<f64>,
    e_max: Option<f64>,
    eff_ch: Option<f64>,
    eff_dch: Option<f64>,
    r_self: Option<f64>,
    t_res: Option<f64>,
    t_reg: Option<f64>,
    prob_res: Option<f64>,
    e_reg: Option<f64>,
    score_perf: Option<f64>,
    r_mileage: Option<f64>,
    k_fix: Option<f64>,
    k_var: Option<f64>,
    cost_bat_unit: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct DegradationSection {
    chemistry: Option<Chemistry>,
    beta: Option<f64>,
    k_t: Option<f64>,
    k_dod: Option<f64>,
    k_c_ch: Option<f64>,
    k_c_dch: Option<f64>,
    k_msoc: Option<f64>,
    alpha_opt: Option<f64>,
    t_ref: Option<f64>,
    msoc_ref: Option<f64>,
    n_100: Option<f64>,
    alpha_cycle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscountStep {
    pub years: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CostsSection {
    chemistry: Option<Chemistry>,
    cost_bat_pur: Option<f64>,
    cost_equ: Option<f64>,
    cost_sta: Option<f64>,
    k_dec: Option<f64>,
    recycle_ratio_bat: Option<f64>,
    recycle_ratio_equ: Option<f64>,
    /// Loads a published recycling income in place of the formula value.
    income_rcy_override: Option<f64>,
    discount_steps: Option<Vec<DiscountStep>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SignalSection {
    cadence_s: Option<f64>,
    regd_path: Option<PathBuf>,
    rega_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct MarketSection {
    price_root: Option<PathBuf>,
    res_shift_hours: Option<i64>,
    #[serde(default)]
    signal: SignalSection,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LifecycleSection {
    year: Option<i32>,
    method: Option<Method>,
    k: Option<usize>,
    seed: Option<u64>,
    metric: Option<Metric>,
    threshold: Option<f64>,
    accelerated_fade: Option<bool>,
    max_horizon_years: Option<u32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SensitivitySection {
    #[serde(default)]
    scenarios: Vec<ScenarioSpec>,
}

/// Raw parsed configuration; call [`Config::resolve`] to validate and
/// cross-wire it.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    battery: BatterySection,
    #[serde(default)]
    degradation: DegradationSection,
    #[serde(default)]
    costs: CostsSection,
    #[serde(default)]
    market: MarketSection,
    #[serde(default)]
    lifecycle: LifecycleSection,
    #[serde(default)]
    sensitivity: SensitivitySection,
}

/// Life-cycle loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifecycleSettings {
    pub year: i32,
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub metric: Metric,
    pub threshold: f64,
    pub accelerated_fade: bool,
    pub max_horizon_years: u32,
}

/// Fully validated configuration with every cross-section default applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub battery: BatteryParams,
    pub degradation: DegradationParams,
    pub costs: CostModel,
    pub chemistry: Chemistry,
    pub price_root: Option<PathBuf>,
    pub res_shift_hours: i64,
    pub signal_cadence_s: f64,
    pub lifecycle: LifecycleSettings,
    pub scenarios: Vec<ScenarioSpec>,
    pub discount_steps: Vec<DiscountStep>,
}

impl Config {
    /// Forces both the degradation and the cost preset onto one chemistry,
    /// as the CLI `--chemistry` flag does. Field-level overrides still
    /// apply on top.
    pub fn set_chemistry(&mut self, chemistry: Chemistry) {
        self.degradation.chemistry = Some(chemistry);
        self.costs.chemistry = Some(chemistry);
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Validates every section and resolves cross-section defaults. Reads
    /// the regulation signal files when configured.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let chemistry = self.degradation.chemistry.unwrap_or(Chemistry::Lfp);

        let mut degradation = match chemistry {
            Chemistry::Lfp => DegradationParams::lfp(),
            Chemistry::Ncm => DegradationParams::ncm(),
        };
        let d = &self.degradation;
        for (field, value) in [
            (&mut degradation.beta, d.beta),
            (&mut degradation.k_t, d.k_t),
            (&mut degradation.k_dod, d.k_dod),
            (&mut degradation.k_c_ch, d.k_c_ch),
            (&mut degradation.k_c_dch, d.k_c_dch),
            (&mut degradation.k_msoc, d.k_msoc),
            (&mut degradation.alpha_opt, d.alpha_opt),
            (&mut degradation.t_ref, d.t_ref),
            (&mut degradation.msoc_ref, d.msoc_ref),
            (&mut degradation.n_100, d.n_100),
            (&mut degradation.alpha_cycle, d.alpha_cycle),
        ] {
            if let Some(v) = value {
                *field = v;
            }
        }
        degradation
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let cost_chemistry = self.costs.chemistry.unwrap_or(chemistry);
        let base_costs = match cost_chemistry {
            Chemistry::Lfp => CostModel::lfp(),
            Chemistry::Ncm => CostModel::ncm(),
        };
        let c = &self.costs;
        let costs = {
            let mut m = CostModel::new(
                c.cost_bat_pur.unwrap_or(base_costs.cost_bat_pur),
                c.cost_equ.unwrap_or(base_costs.cost_equ),
                c.cost_sta.unwrap_or(base_costs.cost_sta),
                c.k_dec.unwrap_or(base_costs.k_dec),
                c.recycle_ratio_bat.unwrap_or(base_costs.recycle_ratio_bat),
                c.recycle_ratio_equ.unwrap_or(base_costs.recycle_ratio_equ),
            );
            if let Some(rcy) = c.income_rcy_override {
                m.income_rcy = rcy;
            }
            m.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            m
        };
        let discount_steps = c.discount_steps.clone().unwrap_or_else(|| {
            vec![
                DiscountStep {
                    years: 5,
                    rate: 0.08,
                },
                DiscountStep {
                    years: 5,
                    rate: 0.07,
                },
                DiscountStep {
                    years: u32::MAX,
                    rate: 0.06,
                },
            ]
        });
        for step in &discount_steps {
            if step.rate <= -1.0 {
                return Err(ConfigError::Invalid(format!(
                    "discount rate {} is at or below -100%",
                    step.rate
                )));
            }
        }

        let signal_cadence_s = self.market.signal.cadence_s.unwrap_or(2.0);
        let regd = self
            .market
            .signal
            .regd_path
            .as_ref()
            .map(|p| load_reg_signal(p, signal_cadence_s))
            .transpose()?;
        let rega = self
            .market
            .signal
            .rega_path
            .as_ref()
            .map(|p| load_reg_signal(p, signal_cadence_s))
            .transpose()?;

        let defaults = BatteryParams::case_study();
        let bsec = &self.battery;
        let e_r = bsec.e_r.unwrap_or(defaults.e_r);
        let mut battery = BatteryParams {
            p_r: bsec.p_r.unwrap_or(defaults.p_r),
            e_r,
            e_min: bsec.e_min.unwrap_or(0.1 * e_r),
            e_max: bsec.e_max.unwrap_or(0.9 * e_r),
            eff_ch: bsec.eff_ch.unwrap_or(defaults.eff_ch),
            eff_dch: bsec.eff_dch.unwrap_or(defaults.eff_dch),
            r_self: bsec.r_self.unwrap_or(defaults.r_self),
            t_res: bsec.t_res.unwrap_or(defaults.t_res),
            t_reg: bsec.t_reg.unwrap_or(defaults.t_reg),
            prob_res: bsec.prob_res.unwrap_or(defaults.prob_res),
            e_reg: bsec.e_reg.unwrap_or(defaults.e_reg),
            score_perf: bsec.score_perf.unwrap_or(defaults.score_perf),
            r_mileage: bsec.r_mileage.unwrap_or(defaults.r_mileage),
            k_fix: bsec.k_fix.unwrap_or(defaults.k_fix),
            k_var: bsec.k_var.unwrap_or(defaults.k_var),
            cost_bat_unit: bsec.cost_bat_unit.unwrap_or(costs.cost_bat_exc),
        };
        // a configured RegD signal supplies the regulation energy rate;
        // an explicit battery.e_reg key still wins
        if let Some(regd) = &regd {
            if bsec.e_reg.is_none() {
                battery.e_reg = regd.reg_energy_rate()?;
            }
            if let Some(rega) = &rega {
                if bsec.r_mileage.is_none() {
                    battery.r_mileage = mileage_ratio(rega, regd)?;
                }
            }
        }
        battery
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let l = &self.lifecycle;
        let lifecycle = LifecycleSettings {
            year: l.year.unwrap_or(2021),
            method: l.method.unwrap_or(Method::Cluster),
            k: l.k.unwrap_or(5),
            seed: l.seed.unwrap_or(0),
            metric: l.metric.unwrap_or(Metric::Dtw),
            threshold: l.threshold.unwrap_or(0.20),
            accelerated_fade: l.accelerated_fade.unwrap_or(false),
            max_horizon_years: l.max_horizon_years.unwrap_or(50),
        };
        if !(lifecycle.threshold > 0.0 && lifecycle.threshold < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "lifecycle.threshold must lie in (0, 1), got {}",
                lifecycle.threshold
            )));
        }

        for scenario in &self.sensitivity.scenarios {
            scenario.validate()?;
        }

        Ok(Resolved {
            battery,
            degradation,
            costs,
            chemistry: cost_chemistry,
            price_root: self.market.price_root.clone(),
            res_shift_hours: self.market.res_shift_hours.unwrap_or(0),
            signal_cadence_s,
            lifecycle,
            scenarios: self.sensitivity.scenarios.clone(),
            discount_steps,
        })
    }
}

impl Resolved {
    pub fn require_price_root(&self) -> Result<&Path, ConfigError> {
        self.price_root
            .as_deref()
            .ok_or(ConfigError::MissingPriceRoot)
    }

    /// Expands the stepped discount schedule to per-year rates.
    pub fn discount_schedule(&self, years: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(years);
        let mut step_idx = 0;
        let mut used_in_step = 0u32;
        for _ in 0..years {
            while step_idx < self.discount_steps.len() - 1
                && used_in_step >= self.discount_steps[step_idx].years
            {
                step_idx += 1;
                used_in_step = 0;
            }
            out.push(self.discount_steps[step_idx].rate);
            used_in_step += 1;
        }
        out
    }

    /// Assembles the run spec for the configured life cycle.
    pub fn run_spec<'a>(&'a self, price_root: &'a Path, price_scale: f64) -> RunSpec<'a> {
        RunSpec {
            price_root,
            year: self.lifecycle.year,
            method: self.lifecycle.method,
            k: self.lifecycle.k,
            metric: self.lifecycle.metric,
            seed: self.lifecycle.seed,
            threshold: self.lifecycle.threshold,
            accelerated_fade: self.lifecycle.accelerated_fade,
            max_horizon_years: self.lifecycle.max_horizon_years,
            res_shift_hours: self.res_shift_hours,
            price_scale,
            battery: &self.battery,
            degradation: &self.degradation,
        }
    }
}
