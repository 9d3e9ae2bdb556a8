//! Hour-driven rule-based controller (E1).

use serde::{Deserialize, Serialize};

use crate::env::Action;
use crate::error::{Error, Result};

/// Night-charge/peak-discharge schedule shared by every building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbcSchedule {
    pub charge_hours: Vec<u32>,
    pub discharge_hours: Vec<u32>,
    /// Fraction of nominal power per charging hour.
    pub charge_rate: f64,
    pub discharge_rate: f64,
}

impl Default for RbcSchedule {
    fn default() -> Self {
        Self {
            charge_hours: vec![22, 23, 0, 1, 2, 3, 4, 5, 6],
            discharge_hours: vec![16, 17, 18, 19, 20],
            charge_rate: 1.0 / 9.0,
            discharge_rate: 1.0 / 5.0,
        }
    }
}

impl RbcSchedule {
    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self
            .charge_hours
            .iter()
            .chain(&self.discharge_hours)
            .find(|&&h| h > 23)
        {
            return Err(Error::Config(format!("schedule hour {h} outside 0..=23")));
        }
        if let Some(h) = self.charge_hours.iter().find(|h| self.discharge_hours.contains(h)) {
            return Err(Error::Config(format!(
                "hour {h} is both a charge and a discharge hour"
            )));
        }
        for (name, rate) in [("charge", self.charge_rate), ("discharge", self.discharge_rate)] {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::Config(format!("{name}_rate must lie in (0, 1], got {rate}")));
            }
        }
        Ok(())
    }
}

/// The action for `hour`, independent of any other state.
pub fn rbc_action(hour: u32, schedule: &RbcSchedule, buildings: usize) -> Action {
    let command = if schedule.charge_hours.contains(&hour) {
        schedule.charge_rate
    } else if schedule.discharge_hours.contains(&hour) {
        -schedule.discharge_rate
    } else {
        0.0
    };
    Action(vec![command; buildings])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_rules() {
        let s = RbcSchedule::default();
        s.validate().unwrap();
        assert_eq!(rbc_action(23, &s, 5), Action(vec![1.0 / 9.0; 5]));
        assert_eq!(rbc_action(3, &s, 2), Action(vec![1.0 / 9.0; 2]));
        assert_eq!(rbc_action(18, &s, 5), Action(vec![-0.2; 5]));
        assert_eq!(rbc_action(12, &s, 5), Action::zeros(5));
        assert_eq!(rbc_action(7, &s, 5), rbc_action(7, &s, 5));
    }

    #[test]
    fn overlapping_hours_rejected() {
        let s = RbcSchedule {
            charge_hours: vec![1, 17],
            ..RbcSchedule::default()
        };
        assert!(s.validate().is_err());
        let s = RbcSchedule {
            discharge_rate: 0.0,
            ..RbcSchedule::default()
        };
        assert!(s.validate().is_err());
    }
}
