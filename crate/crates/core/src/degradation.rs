//! Cycle-aging model: stress-factor state of health, Miner's-rule cycle
//! life, half-cycle extraction from SoC trajectories, and capacity-loss
//! accounting.
//!
//! The fitted SOH surface covers NCM and LFP chemistries; presets carry the
//! published constants. Day-to-day accounting works on the simplified form:
//! one full cycle at depth-of-discharge `d` consumes `d^alpha / N_100` of
//! capacity, and a daily SoC trajectory decomposes into half cycles, each
//! charged at half that rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DegradationError {
    #[error("depth of discharge {0} outside (0, 1]")]
    DomainError(f64),
    #[error("SoC sample {index} = {value} MWh outside [0, {e_r}]")]
    SocOutOfRange { index: usize, value: f64, e_r: f64 },
    #[error("SOH never reaches {floor}% within {max_fec:.0} full equivalent cycles")]
    NoRoot { floor: f64, max_fec: f64 },
    #[error("invalid degradation parameters: {0}")]
    InvalidParams(String),
}

/// Fitted constants of the stress-factor SOH model plus the Miner's-rule
/// cycle-life pair (`n_100`, `alpha_cycle`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub beta: f64,
    pub k_t: f64,
    /// Per percent of depth of discharge.
    pub k_dod: f64,
    /// Per charging C-rate.
    pub k_c_ch: f64,
    /// Per discharging C-rate.
    pub k_c_dch: f64,
    /// Per percent of mean state of charge (the fitted b_mSOC).
    pub k_msoc: f64,
    /// Exponent on full equivalent cycles.
    pub alpha_opt: f64,
    /// Reference temperature, kelvin.
    pub t_ref: f64,
    /// Reference mean state of charge, percent.
    pub msoc_ref: f64,
    /// Cycles to end of life at 100% depth of discharge.
    pub n_100: f64,
    /// Exponent in per-cycle loss d^alpha / n_100.
    pub alpha_cycle: f64,
}

impl DegradationParams {
    /// Lithium iron phosphate preset.
    pub fn lfp() -> Self {
        DegradationParams {
            beta: 0.003414,
            k_t: 5.8755,
            k_dod: -0.0046,
            k_c_ch: 0.1038,
            k_c_dch: 0.296,
            k_msoc: 0.0513,
            alpha_opt: 0.869,
            t_ref: 293.0,
            msoc_ref: 42.0,
            n_100: 13627.0,
            alpha_cycle: 1.0,
        }
    }

    /// Lithium nickel cobalt manganese oxide preset.
    pub fn ncm() -> Self {
        DegradationParams {
            beta: 0.001673,
            k_t: 21.6745,
            k_dod: 0.022,
            k_c_ch: 0.2533,
            k_c_dch: 0.1571,
            k_msoc: -0.0212,
            alpha_opt: 0.915,
            t_ref: 293.0,
            msoc_ref: 42.0,
            n_100: 10420.0,
            alpha_cycle: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), DegradationError> {
        if self.n_100.is_nan() || self.n_100 <= 0.0 {
            return Err(DegradationError::InvalidParams(format!(
                "n_100 must be positive, got {}",
                self.n_100
            )));
        }
        if self.alpha_cycle.is_nan() || self.alpha_cycle <= 0.0 {
            return Err(DegradationError::InvalidParams(format!(
                "alpha_cycle must be positive, got {}",
                self.alpha_cycle
            )));
        }
        if self.t_ref.is_nan() || self.t_ref <= 0.0 {
            return Err(DegradationError::InvalidParams(format!(
                "t_ref must be positive kelvin, got {}",
                self.t_ref
            )));
        }
        if !(self.msoc_ref > 0.0 && self.msoc_ref <= 100.0) {
            return Err(DegradationError::InvalidParams(format!(
                "msoc_ref must lie in (0, 100], got {}",
                self.msoc_ref
            )));
        }
        Ok(())
    }
}

/// One operating point of the stress-factor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressPoint {
    /// Cell temperature, kelvin.
    pub t: f64,
    /// Depth of discharge, percent.
    pub dod: f64,
    /// Charging C-rate.
    pub c_ch: f64,
    /// Discharging C-rate.
    pub c_dch: f64,
    /// Mean state of charge, percent.
    pub msoc: f64,
    /// Full equivalent cycles accumulated.
    pub fec: f64,
}

/// Fixed operating stresses used when solving for cycle life: the FEC axis
/// is left free and depth of discharge is pinned at 100%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedStress {
    pub t: f64,
    pub c_ch: f64,
    pub c_dch: f64,
    pub msoc: f64,
}

impl Default for FixedStress {
    /// The case-study operating point: 30 °C, 0.5C both directions (2-hour
    /// battery), 50% mean state of charge.
    fn default() -> Self {
        FixedStress {
            t: 303.15,
            c_ch: 0.5,
            c_dch: 0.5,
            msoc: 50.0,
        }
    }
}

/// State of health in percent after `s.fec` full equivalent cycles at the
/// given stress point. 100 means pristine capacity.
pub fn soh_full(p: &DegradationParams, s: &StressPoint) -> f64 {
    let stress = p.beta
        * (p.k_t * (s.t - p.t_ref) / s.t
            + p.k_dod * s.dod
            + p.k_c_ch * s.c_ch
            + p.k_c_dch * s.c_dch)
            .exp();
    let msoc_factor = 1.0 + p.k_msoc * s.msoc * (1.0 - s.msoc / (2.0 * p.msoc_ref));
    100.0 - stress * msoc_factor * s.fec.powf(p.alpha_opt)
}

/// Maximum number of full cycles at depth of discharge `d` before end of
/// life: N_d = n_100 / d^alpha.
pub fn cycle_life(p: &DegradationParams, d: f64) -> Result<f64, DegradationError> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(DegradationError::DomainError(d));
    }
    Ok(p.n_100 / d.powf(p.alpha_cycle))
}

/// Capacity fraction consumed by one full cycle at depth of discharge `d`;
/// the inverse of [`cycle_life`], extended with 0 at d = 0.
pub fn per_cycle_loss(p: &DegradationParams, d: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&d), "d = {d} outside [0, 1]");
    if d == 0.0 {
        return 0.0;
    }
    d.powf(p.alpha_cycle) / p.n_100
}

/// Depths of discharge of the half cycles found in a daily SoC trajectory,
/// as fractions of rated energy, in trajectory order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HalfCycleList {
    pub cycles: Vec<f64>,
}

/// Splits an hourly SoC trajectory at its local extrema. Each monotone
/// segment becomes one half cycle of depth |peak − valley| / e_r. Plateaus
/// merge into the adjacent segment; zero-amplitude segments are dropped.
pub fn extract_half_cycles(soc: &[f64], e_r: f64) -> Result<HalfCycleList, DegradationError> {
    let tol = 1e-9 * e_r.max(1.0);
    for (i, &v) in soc.iter().enumerate() {
        if !v.is_finite() || v < -tol || v > e_r + tol {
            return Err(DegradationError::SocOutOfRange {
                index: i,
                value: v,
                e_r,
            });
        }
    }
    let mut cycles = Vec::new();
    if soc.is_empty() {
        return Ok(HalfCycleList { cycles });
    }
    let mut seg_start = soc[0];
    let mut prev = soc[0];
    let mut rising: Option<bool> = None;
    for &cur in &soc[1..] {
        if cur == prev {
            continue;
        }
        let step_rising = cur > prev;
        if let Some(dir) = rising {
            if dir != step_rising {
                cycles.push((prev - seg_start).abs() / e_r);
                seg_start = prev;
            }
        }
        rising = Some(step_rising);
        prev = cur;
    }
    if rising.is_some() && prev != seg_start {
        cycles.push((prev - seg_start).abs() / e_r);
    }
    Ok(HalfCycleList { cycles })
}

/// Total capacity fraction lost by a list of half cycles: each half cycle
/// at depth d costs d^alpha / (2 · n_100).
pub fn capacity_loss(h: &HalfCycleList, p: &DegradationParams) -> f64 {
    h.cycles
        .iter()
        .map(|&d| 0.5 * d.powf(p.alpha_cycle) / p.n_100)
        .sum()
}

const FEC_CEILING: f64 = 1e9;

/// Solves for the full-equivalent-cycle count at which the SOH surface hits
/// `soh_floor` (percent) at 100% depth of discharge and the given fixed
/// stresses. Bracketing plus bisection to 1e-10 relative width.
pub fn solve_n100_from_soh(
    p: &DegradationParams,
    stress: &FixedStress,
    soh_floor: f64,
) -> Result<f64, DegradationError> {
    if soh_floor.is_nan() || soh_floor <= 0.0 || soh_floor >= 100.0 {
        return Err(DegradationError::InvalidParams(format!(
            "soh floor must lie in (0, 100), got {soh_floor}"
        )));
    }
    let soh_at = |fec: f64| {
        soh_full(
            p,
            &StressPoint {
                t: stress.t,
                dod: 100.0,
                c_ch: stress.c_ch,
                c_dch: stress.c_dch,
                msoc: stress.msoc,
                fec,
            },
        )
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while soh_at(hi) > soh_floor {
        lo = hi;
        hi *= 2.0;
        if hi > FEC_CEILING {
            return Err(DegradationError::NoRoot {
                floor: soh_floor,
                max_fec: FEC_CEILING,
            });
        }
    }
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if soh_at(mid) > soh_floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
