use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::reward::StepSignals;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryParams {
    /// kWh.
    pub capacity: f64,
    /// kW.
    pub nominal_power: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            capacity: 6.4,
            nominal_power: 5.0,
            charge_efficiency: 0.95,
            discharge_efficiency: 0.95,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err(Error::Config(format!("battery capacity must be > 0, got {}", self.capacity)));
        }
        if !(self.nominal_power > 0.0 && self.nominal_power.is_finite()) {
            return Err(Error::Config(format!(
                "battery nominal power must be > 0, got {}",
                self.nominal_power
            )));
        }
        for (name, eta) in [
            ("charge", self.charge_efficiency),
            ("discharge", self.discharge_efficiency),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config(format!("{name} efficiency must lie in (0, 1], got {eta}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub battery: BatteryParams,
    /// Initial state of charge as a fraction of capacity.
    pub initial_soc_fraction: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            battery: BatteryParams::default(),
            initial_soc_fraction: 0.5,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        if !(0.0..=1.0).contains(&self.initial_soc_fraction) {
            return Err(Error::Config(format!(
                "initial_soc_fraction must lie in [0, 1], got {}",
                self.initial_soc_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistrictState {
    pub t: usize,
    /// Per-building stored energy, kWh.
    pub soc: Vec<f64>,
    /// Cumulative grid energy drawn into each battery, kWh.
    pub charged: Vec<f64>,
    /// Cumulative energy each battery delivered to its building, kWh.
    pub released: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-building battery commands in [-1, 1]: fraction of nominal power,
/// positive to charge.
#[derive(Debug, Clone, PartialEq)]
pub struct Action(pub Vec<f64>);

impl Action {
    pub fn zeros(buildings: usize) -> Self {
        Action(vec![0.0; buildings])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub signals: StepSignals,
    pub done: bool,
}

/// Min/max scaling to [-1, 1], frozen when the dataset is attached.
#[derive(Debug, Clone, Copy)]
struct Scale {
    min: f64,
    max: f64,
}

impl Scale {
    fn of(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }

    fn apply(&self, x: f64) -> f64 {
        if self.max > self.min {
            (2.0 * (x - self.min) / (self.max - self.min) - 1.0).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ObsScaling {
    t_out: Scale,
    rh: Scale,
    price: Scale,
    carbon: Scale,
    setpoint: Scale,
}

/// Hourly district simulator with one battery per building.
#[derive(Debug, Clone)]
pub struct DistrictEnv {
    dataset: Arc<Dataset>,
    config: EnvConfig,
    scaling: ObsScaling,
    state: DistrictState,
    done: bool,
    seed: u64,
}

/// Observation layout: hour (sin, cos), month (sin, cos), t_out, rh,
/// price, carbon, setpoint, then one state of charge per building.
pub const EXOGENOUS_FEATURES: usize = 9;

impl DistrictEnv {
    pub fn new(dataset: Arc<Dataset>, config: EnvConfig) -> Result<Self> {
        config.validate()?;
        dataset.validate()?;
        let scaling = ObsScaling {
            t_out: Scale::of(&dataset.t_out),
            rh: Scale::of(&dataset.rh),
            price: Scale::of(&dataset.price),
            carbon: Scale::of(&dataset.carbon),
            setpoint: Scale::of(&dataset.setpoint),
        };
        let b = dataset.num_buildings();
        let mut env = Self {
            dataset,
            config,
            scaling,
            state: DistrictState {
                t: 0,
                soc: vec![0.0; b],
                charged: vec![0.0; b],
                released: vec![0.0; b],
            },
            done: false,
            seed: 0,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &DistrictState {
        &self.state
    }

    pub fn num_buildings(&self) -> usize {
        self.dataset.num_buildings()
    }

    pub fn horizon(&self) -> usize {
        self.dataset.len()
    }

    pub fn observation_dim(&self) -> usize {
        EXOGENOUS_FEATURES + self.num_buildings()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Seed of the last reset. The dynamics themselves are deterministic.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Overrides the stored energy, clamped to [0, capacity].
    pub fn set_soc(&mut self, soc: &[f64]) -> Result<()> {
        if soc.len() != self.num_buildings() {
            return Err(Error::Usage(format!(
                "expected {} state-of-charge values, got {}",
                self.num_buildings(),
                soc.len()
            )));
        }
        let cap = self.config.battery.capacity;
        for (s, &v) in self.state.soc.iter_mut().zip(soc) {
            *s = v.clamp(0.0, cap);
        }
        Ok(())
    }

    pub fn reset(&mut self, seed: u64) -> Observation {
        self.seed = seed;
        let initial = self.config.battery.capacity * self.config.initial_soc_fraction;
        let b = self.num_buildings();
        self.state = DistrictState {
            t: 0,
            soc: vec![initial; b],
            charged: vec![0.0; b],
            released: vec![0.0; b],
        };
        self.done = false;
        self.observe()
    }

    fn observe(&self) -> Observation {
        let ds = &self.dataset;
        let t = self.state.t % ds.len();
        let hour = 2.0 * PI * ds.hour[t] as f64 / 24.0;
        let month = 2.0 * PI * (ds.month[t] as f64 - 1.0) / 12.0;
        let s = &self.scaling;
        let mut obs = Vec::with_capacity(self.observation_dim());
        obs.extend([
            hour.sin(),
            hour.cos(),
            month.sin(),
            month.cos(),
            s.t_out.apply(ds.t_out[t]),
            s.rh.apply(ds.rh[t]),
            s.price.apply(ds.price[t]),
            s.carbon.apply(ds.carbon[t]),
            s.setpoint.apply(ds.setpoint[t]),
        ]);
        let cap = self.config.battery.capacity;
        obs.extend(self.state.soc.iter().map(|&soc| 2.0 * soc / cap - 1.0));
        Observation(obs)
    }

    /// Advances one hour. Commands are clipped to [-1, 1].
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage("step called after the episode finished; call reset".into()));
        }
        if action.0.len() != self.num_buildings() {
            return Err(Error::Usage(format!(
                "action has {} entries, expected {}",
                action.0.len(),
                self.num_buildings()
            )));
        }
        if let Some(bad) = action.0.iter().find(|a| !a.is_finite()) {
            return Err(Error::Usage(format!("non-finite action entry {bad}")));
        }

        let BatteryParams {
            capacity,
            nominal_power,
            charge_efficiency,
            discharge_efficiency,
        } = self.config.battery;
        let t = self.state.t;
        let ds = Arc::clone(&self.dataset);

        let mut net_energy = 0.0;
        for b in 0..self.num_buildings() {
            let command = action.0[b].clamp(-1.0, 1.0);
            // One-hour step: kW and kWh coincide.
            let requested = command * nominal_power;
            let soc = self.state.soc[b];
            let (draw, release) = if requested > 0.0 {
                let draw = requested.min((capacity - soc) / charge_efficiency).max(0.0);
                self.state.soc[b] = (soc + draw * charge_efficiency).min(capacity);
                (draw, 0.0)
            } else if requested < 0.0 {
                let release = (-requested).min(soc * discharge_efficiency);
                self.state.soc[b] = (soc - release / discharge_efficiency).max(0.0);
                (0.0, release)
            } else {
                (0.0, 0.0)
            };
            self.state.charged[b] += draw;
            self.state.released[b] += release;
            net_energy += ds.load[b][t] - ds.solar[b][t] + draw - release;
        }

        let signals = ds.signals(t, net_energy);
        self.state.t += 1;
        self.done = self.state.t == ds.len();
        Ok(StepOutcome {
            observation: self.observe(),
            signals,
            done: self.done,
        })
    }
}
