//! Weighted multi-objective reward and the experimental condition registry.
//!
//! Every condition is composed from the same [`StepSignals`], so the
//! conditions differ only in their weights and in how comfort is scored.
//! Outdoor dry-bulb temperature stands in for indoor air temperature for
//! every comfort definition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comfort::{self, ComfortInputs};
use crate::error::{Error, Result};

/// Air speed used for the PMV comfort channel, m/s.
pub const PMV_AIR_SPEED: f64 = 0.1;
/// Metabolic rate used for the PMV comfort channel, met.
pub const PMV_METABOLIC_RATE: f64 = 1.2;
/// Fixed setpoint of the naive comfort proxy, °C.
pub const NAIVE_SETPOINT: f64 = 21.0;
/// Deviation at which the naive comfort proxy reaches zero, °C.
pub const NAIVE_SPAN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl RewardWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (field, value) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::domain(field, value, "reward weight must lie in [0, 1]"));
            }
        }
        Ok(Self { alpha, beta, gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl ConditionId {
    pub const ALL: [ConditionId; 5] = [
        ConditionId::E1,
        ConditionId::E2,
        ConditionId::E3,
        ConditionId::E4,
        ConditionId::E5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::E1 => "E1",
            ConditionId::E2 => "E2",
            ConditionId::E3 => "E3",
            ConditionId::E4 => "E4",
            ConditionId::E5 => "E5",
        }
    }

    /// The table row for this id with default weights.
    pub fn condition(self) -> Condition {
        condition_registry()
            .into_iter()
            .find(|c| c.id == self)
            .expect("registry covers every id")
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "E1" => Ok(ConditionId::E1),
            "E2" => Ok(ConditionId::E2),
            "E3" => Ok(ConditionId::E3),
            "E4" => Ok(ConditionId::E4),
            "E5" => Ok(ConditionId::E5),
            _ => Err(Error::Config(format!("unknown condition `{s}` (expected E1..E5)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComfortKind {
    /// Rule-based control; no learned reward.
    RuleBased,
    None,
    SetpointDeadband,
    NaiveDeviation,
    Pmv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub id: ConditionId,
    pub name: &'static str,
    /// `None` for the rule-based controller.
    pub weights: Option<RewardWeights>,
    pub comfort_kind: ComfortKind,
}

impl Condition {
    pub fn with_weights(mut self, weights: RewardWeights) -> Result<Self> {
        if self.weights.is_none() {
            return Err(Error::Config(format!(
                "{} is rule-based and takes no reward weights",
                self.id
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }
}

/// The five experimental conditions with their default weights.
pub fn condition_registry() -> Vec<Condition> {
    let w = |alpha, beta, gamma| Some(RewardWeights { alpha, beta, gamma });
    vec![
        Condition {
            id: ConditionId::E1,
            name: "rbc",
            weights: None,
            comfort_kind: ComfortKind::RuleBased,
        },
        Condition {
            id: ConditionId::E2,
            name: "manual",
            weights: w(0.60, 0.20, 0.20),
            comfort_kind: ComfortKind::SetpointDeadband,
        },
        Condition {
            id: ConditionId::E3,
            name: "energy-only",
            weights: w(1.00, 0.00, 0.00),
            comfort_kind: ComfortKind::None,
        },
        Condition {
            id: ConditionId::E4,
            name: "naive-comfort",
            weights: w(0.70, 0.20, 0.10),
            comfort_kind: ComfortKind::NaiveDeviation,
        },
        Condition {
            id: ConditionId::E5,
            name: "pmv-comfort",
            weights: w(0.60, 0.20, 0.20),
            comfort_kind: ComfortKind::Pmv,
        },
    ]
}

/// Raw per-timestep quantities every reward is composed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSignals {
    /// District net electricity, kWh; negative under net export.
    pub net_energy: f64,
    pub price: f64,
    /// kgCO₂/kWh.
    pub carbon_intensity: f64,
    /// Outdoor dry-bulb temperature, °C.
    pub t_out: f64,
    pub rh: f64,
    pub month: u32,
    pub hour: u32,
    pub setpoint: f64,
    pub pricing_available: bool,
}

/// Channel normalizers, frozen once per experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    /// Reference district draw, kWh.
    pub e_ref: f64,
    pub price_max: f64,
    pub carbon_max: f64,
    /// Score the grid channel on carbon intensity even when prices exist.
    #[serde(default)]
    pub force_carbon_fallback: bool,
}

impl Normalizers {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e_ref", self.e_ref),
            ("price_max", self.price_max),
            ("carbon_max", self.carbon_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("normalizer {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Setpoint deadband used by the manual comfort definition, °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Deadband {
    pub half_width: f64,
    pub span: f64,
}

impl Default for Deadband {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            span: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub normalizers: Normalizers,
    pub deadband: Deadband,
}

fn positive_draw(signals: &StepSignals) -> f64 {
    signals.net_energy.max(0.0)
}

pub fn r_energy(signals: &StepSignals, e_ref: f64) -> Result<f64> {
    if !(e_ref > 0.0) {
        return Err(Error::Config(format!("e_ref must be > 0, got {e_ref}")));
    }
    Ok(1.0 - (positive_draw(signals) / e_ref).min(1.0))
}

/// Grid channel: draw weighted by normalized price, or by carbon intensity
/// when pricing is unavailable (or forced off).
pub fn r_grid(signals: &StepSignals, normalizers: &Normalizers) -> Result<f64> {
    normalizers.validate()?;
    let factor = if signals.pricing_available && !normalizers.force_carbon_fallback {
        signals.price / normalizers.price_max
    } else {
        signals.carbon_intensity / normalizers.carbon_max
    };
    Ok(1.0 - (factor * positive_draw(signals) / normalizers.e_ref).min(1.0))
}

pub fn comfort_setpoint_deadband(t: f64, setpoint: f64, deadband: &Deadband) -> Result<f64> {
    if !t.is_finite() || !setpoint.is_finite() {
        return Err(Error::domain("t", t, "temperatures must be finite"));
    }
    let excess = ((t - setpoint).abs() - deadband.half_width).max(0.0);
    Ok((1.0 - excess / deadband.span).max(0.0))
}

pub fn comfort_naive(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::domain("t", t, "temperature must be finite"));
    }
    Ok((1.0 - (t - NAIVE_SETPOINT).abs() / NAIVE_SPAN).max(0.0))
}

/// PMV evaluated with the outdoor proxy: tdb = tr = t_out.
pub fn pmv_for_signals(signals: &StepSignals) -> Result<comfort::PmvResult> {
    let inputs = ComfortInputs::new(
        signals.t_out,
        signals.t_out,
        PMV_AIR_SPEED,
        signals.rh,
        PMV_METABOLIC_RATE,
        comfort::clothing_for_month(signals.month)?,
    )?;
    comfort::compute_pmv(&inputs)
}

/// Comfort channel for a condition; `None` when the condition scores no comfort.
pub fn r_comfort(kind: ComfortKind, signals: &StepSignals, deadband: &Deadband) -> Result<Option<f64>> {
    match kind {
        ComfortKind::RuleBased | ComfortKind::None => Ok(None),
        ComfortKind::SetpointDeadband => {
            comfort_setpoint_deadband(signals.t_out, signals.setpoint, deadband).map(Some)
        }
        ComfortKind::NaiveDeviation => comfort_naive(signals.t_out).map(Some),
        ComfortKind::Pmv => {
            let pmv = pmv_for_signals(signals)?.pmv;
            comfort::comfort_reward_pmv(pmv).map(Some)
        }
    }
}

/// The shaped reward α·r_energy + β·r_comfort + γ·r_grid.
pub fn compose(condition: &Condition, signals: &StepSignals, params: &RewardParams) -> Result<f64> {
    let weights = condition.weights.ok_or_else(|| {
        Error::Usage(format!("{} is rule-based and has no shaped reward", condition.id))
    })?;
    let energy = r_energy(signals, params.normalizers.e_ref)?;
    let grid = r_grid(signals, &params.normalizers)?;
    let comfort = r_comfort(condition.comfort_kind, signals, &params.deadband)?.unwrap_or(0.0);
    Ok(weights.alpha * energy + weights.beta * comfort + weights.gamma * grid)
}
