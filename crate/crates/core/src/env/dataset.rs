use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::{Normalizers, StepSignals};

pub const HOURS_PER_YEAR: usize = 8760;

const DAYS_IN_MONTH: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

const OFF_PEAK_PRICE: f64 = 0.20;
const PEAK_PRICE: f64 = 0.54;
const PEAK_HOURS: std::ops::RangeInclusive<u32> = 16..=20;
const SETPOINT: f64 = 21.0;

/// Calendar month (1..=12) of an hourly row in a non-leap year.
pub fn month_of_row(t: usize) -> u32 {
    let mut day = (t / 24) % 365;
    for (i, &days) in DAYS_IN_MONTH.iter().enumerate() {
        if day < days {
            return i as u32 + 1;
        }
        day -= days;
    }
    unreachable!("day of year < 365")
}

/// Hourly exogenous data for a district, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub hour: Vec<u32>,
    pub month: Vec<u32>,
    pub t_out: Vec<f64>,
    pub rh: Vec<f64>,
    pub price: Vec<f64>,
    pub carbon: Vec<f64>,
    pub setpoint: Vec<f64>,
    pub pricing_available: Vec<bool>,
    /// `load[b][t]`, kWh.
    pub load: Vec<Vec<f64>>,
    /// `solar[b][t]`, kWh.
    pub solar: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub seed: u64,
    pub buildings: usize,
    pub horizon: usize,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            seed: 2022,
            buildings: 5,
            horizon: HOURS_PER_YEAR,
        }
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon < 24 || horizon % 24 != 0 {
        return Err(Error::Config(format!(
            "horizon of {horizon} rows is not a positive multiple of 24"
        )));
    }
    Ok(())
}

fn gaussian_bump(x: f64, centre: f64, width: f64) -> f64 {
    (-(x - centre).powi(2) / (2.0 * width * width)).exp()
}

impl Dataset {
    /// Seeded synthetic stand-in for a residential district year.
    pub fn synthetic(params: &SyntheticParams) -> Result<Self> {
        let SyntheticParams {
            seed,
            buildings,
            horizon,
        } = *params;
        if buildings == 0 {
            return Err(Error::Config("at least one building is required".into()));
        }
        check_horizon(horizon)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

        let load_scale: Vec<f64> = (0..buildings).map(|_| rng.random_range(0.7..1.3)).collect();
        let solar_peak: Vec<f64> = (0..buildings).map(|_| rng.random_range(0.5..3.0)).collect();

        let mut ds = Dataset {
            hour: Vec::with_capacity(horizon),
            month: Vec::with_capacity(horizon),
            t_out: Vec::with_capacity(horizon),
            rh: Vec::with_capacity(horizon),
            price: Vec::with_capacity(horizon),
            carbon: Vec::with_capacity(horizon),
            setpoint: Vec::with_capacity(horizon),
            pricing_available: Vec::with_capacity(horizon),
            load: vec![Vec::with_capacity(horizon); buildings],
            solar: vec![Vec::with_capacity(horizon); buildings],
        };

        for t in 0..horizon {
            let hour = (t % 24) as u32;
            let h = hour as f64;
            let day = t as f64 / 24.0;
            // Annual trough in mid-January, diurnal trough at 05:00.
            let annual = -(2.0 * PI * (day - 15.0) / 365.0).cos();
            let diurnal = -(2.0 * PI * (h - 5.0) / 24.0).cos();
            let t_out = 14.0 + 11.0 * annual + 4.0 * diurnal + std_normal.sample(&mut rng);
            let rh = (60.0 - 8.0 * diurnal + 8.0 * std_normal.sample(&mut rng)).clamp(20.0, 95.0);
            let price = if PEAK_HOURS.contains(&hour) {
                PEAK_PRICE
            } else {
                OFF_PEAK_PRICE
            };
            let carbon = 0.275 + 0.175 * (2.0 * PI * (h - 19.0) / 24.0).cos();

            ds.hour.push(hour);
            ds.month.push(month_of_row(t));
            ds.t_out.push(t_out);
            ds.rh.push(rh);
            ds.price.push(price);
            ds.carbon.push(carbon);
            ds.setpoint.push(SETPOINT);
            ds.pricing_available.push(true);

            // Morning and evening peaks; air-conditioning and heating are
            // folded into the load through the outdoor temperature.
            let profile = 0.5 + 0.7 * gaussian_bump(h, 7.5, 1.5) + 1.2 * gaussian_bump(h, 19.0, 2.0);
            let hvac = 0.06 * (t_out - 24.0).max(0.0) + 0.04 * (14.0 - t_out).max(0.0);
            let daylight = if (6.0..=18.0).contains(&h) {
                (PI * (h - 6.0) / 12.0).sin()
            } else {
                0.0
            };
            let season = 0.75 - 0.25 * annual;
            for b in 0..buildings {
                let noise = 1.0 + 0.05 * std_normal.sample(&mut rng);
                ds.load[b].push((load_scale[b] * (profile + hvac) * noise).max(0.0));
                ds.solar[b].push(solar_peak[b] * season * daylight);
            }
        }
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.hour.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hour.is_empty()
    }

    pub fn num_buildings(&self) -> usize {
        self.load.len()
    }

    pub fn num_days(&self) -> usize {
        self.len() / 24
    }

    /// District non-shiftable load at each timestep.
    pub fn district_load(&self) -> Vec<f64> {
        (0..self.len())
            .map(|t| self.load.iter().map(|col| col[t]).sum())
            .collect()
    }

    /// Reward signals of row `t` with the given district net energy.
    pub fn signals(&self, t: usize, net_energy: f64) -> StepSignals {
        StepSignals {
            net_energy,
            price: self.price[t],
            carbon_intensity: self.carbon[t],
            t_out: self.t_out[t],
            rh: self.rh[t],
            month: self.month[t],
            hour: self.hour[t],
            setpoint: self.setpoint[t],
            pricing_available: self.pricing_available[t],
        }
    }

    /// Channel normalizers: e_ref is the 95th percentile of district load,
    /// price and carbon maxima are taken over the whole dataset.
    pub fn reward_normalizers(&self) -> Normalizers {
        let mut load = self.district_load();
        load.sort_by(f64::total_cmp);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Normalizers {
            e_ref: percentile_sorted(&load, 95.0),
            price_max: max(&self.price),
            carbon_max: max(&self.carbon),
            force_carbon_fallback: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Parse {
                row: 0,
                column: "*".into(),
                message: "dataset has no rows".into(),
            });
        }
        if n % 24 != 0 {
            return Err(Error::Parse {
                row: n,
                column: "*".into(),
                message: format!("row count {n} is not a multiple of 24 (whole days required)"),
            });
        }
        if self.load.is_empty() || self.load.len() != self.solar.len() {
            return Err(Error::Config(format!(
                "need matching load/solar columns for at least one building, got {} and {}",
                self.load.len(),
                self.solar.len()
            )));
        }
        let lens = [
            self.month.len(),
            self.t_out.len(),
            self.rh.len(),
            self.price.len(),
            self.carbon.len(),
            self.setpoint.len(),
            self.pricing_available.len(),
        ];
        if lens.iter().any(|&l| l != n)
            || self.load.iter().chain(&self.solar).any(|c| c.len() != n)
        {
            return Err(Error::Config("dataset columns have unequal lengths".into()));
        }
        let bad = |t: usize, column: &str, message: String| Error::Parse {
            row: t,
            column: column.to_string(),
            message,
        };
        for t in 0..n {
            if self.hour[t] as usize != t % 24 {
                return Err(bad(t, "hour", format!("expected hour {} got {}", t % 24, self.hour[t])));
            }
            if self.month[t] != month_of_row(t) {
                return Err(bad(
                    t,
                    "month",
                    format!("expected month {} got {}", month_of_row(t), self.month[t]),
                ));
            }
            let finite = [
                ("t_out", self.t_out[t]),
                ("rh", self.rh[t]),
                ("price", self.price[t]),
                ("carbon", self.carbon[t]),
                ("setpoint", self.setpoint[t]),
            ];
            for (col, v) in finite {
                if !v.is_finite() {
                    return Err(bad(t, col, format!("non-finite value {v}")));
                }
            }
            if !(0.0..=100.0).contains(&self.rh[t]) {
                return Err(bad(t, "rh", format!("{} outside [0, 100]", self.rh[t])));
            }
            if self.price[t] < 0.0 {
                return Err(bad(t, "price", "negative price".into()));
            }
            if self.carbon[t] < 0.0 {
                return Err(bad(t, "carbon", "negative carbon intensity".into()));
            }
            for (b, (l, s)) in self.load.iter().zip(&self.solar).enumerate() {
                if !(l[t].is_finite() && l[t] >= 0.0) {
                    return Err(bad(t, &format!("load_{b}"), format!("invalid load {}", l[t])));
                }
                if !(s[t].is_finite() && s[t] >= 0.0) {
                    return Err(bad(t, &format!("solar_{b}"), format!("invalid solar {}", s[t])));
                }
            }
        }
        Ok(())
    }

    fn header(&self) -> Vec<String> {
        let mut cols: Vec<String> = [
            "hour",
            "month",
            "t_out",
            "rh",
            "price",
            "carbon",
            "setpoint",
            "pricing_available",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend((0..self.num_buildings()).map(|b| format!("load_{b}")));
        cols.extend((0..self.num_buildings()).map(|b| format!("solar_{b}")));
        cols
    }

    /// Writes the CSV schema. Floats use shortest round-trip formatting, so
    /// reading the file back reproduces the dataset exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(self.header()).map_err(csv_err)?;
        for t in 0..self.len() {
            let mut rec = vec![
                self.hour[t].to_string(),
                self.month[t].to_string(),
                self.t_out[t].to_string(),
                self.rh[t].to_string(),
                self.price[t].to_string(),
                self.carbon[t].to_string(),
                self.setpoint[t].to_string(),
                self.pricing_available[t].to_string(),
            ];
            rec.extend(self.load.iter().map(|c| c[t].to_string()));
            rec.extend(self.solar.iter().map(|c| c[t].to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    /// Parses the CSV schema. Row numbers in errors are 1-based data rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = r
            .headers()
            .map_err(|e| Error::Parse {
                row: 0,
                column: "*".into(),
                message: e.to_string(),
            })?
            .clone();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(Error::Parse {
                row: 0,
                column: "*".into(),
                message: "missing header row".into(),
            });
        }
        let find = |name: &str| -> Result<usize> {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                row: 0,
                column: name.to_string(),
                message: "missing column".into(),
            })
        };
        let fixed = [
            "hour",
            "month",
            "t_out",
            "rh",
            "price",
            "carbon",
            "setpoint",
            "pricing_available",
        ];
        let fixed_idx = fixed.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
        let buildings = (0..)
            .take_while(|b| headers.iter().any(|h| h == format!("load_{b}")))
            .count();
        if buildings == 0 {
            return Err(Error::Parse {
                row: 0,
                column: "load_0".into(),
                message: "missing column".into(),
            });
        }
        let load_idx = (0..buildings)
            .map(|b| find(&format!("load_{b}")))
            .collect::<Result<Vec<_>>>()?;
        let solar_idx = (0..buildings)
            .map(|b| find(&format!("solar_{b}")))
            .collect::<Result<Vec<_>>>()?;

        let mut ds = Dataset {
            hour: vec![],
            month: vec![],
            t_out: vec![],
            rh: vec![],
            price: vec![],
            carbon: vec![],
            setpoint: vec![],
            pricing_available: vec![],
            load: vec![vec![]; buildings],
            solar: vec![vec![]; buildings],
        };

        for (i, rec) in r.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::Parse {
                row,
                column: "*".into(),
                message: e.to_string(),
            })?;
            let cell = |idx: usize| -> Result<&str> {
                rec.get(idx).map(str::trim).ok_or_else(|| Error::Parse {
                    row,
                    column: headers[idx].to_string(),
                    message: "missing cell".into(),
                })
            };
            let num = |idx: usize| -> Result<f64> {
                let s = cell(idx)?;
                s.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    column: headers[idx].to_string(),
                    message: format!("non-numeric cell `{s}`"),
                })
            };
            let int = |idx: usize| -> Result<u32> {
                let s = cell(idx)?;
                s.parse::<u32>().map_err(|_| Error::Parse {
                    row,
                    column: headers[idx].to_string(),
                    message: format!("expected a non-negative integer, got `{s}`"),
                })
            };
            ds.hour.push(int(fixed_idx[0])?);
            ds.month.push(int(fixed_idx[1])?);
            ds.t_out.push(num(fixed_idx[2])?);
            ds.rh.push(num(fixed_idx[3])?);
            ds.price.push(num(fixed_idx[4])?);
            ds.carbon.push(num(fixed_idx[5])?);
            ds.setpoint.push(num(fixed_idx[6])?);
            let flag = cell(fixed_idx[7])?;
            ds.pricing_available.push(match flag {
                "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(Error::Parse {
                        row,
                        column: "pricing_available".into(),
                        message: format!("expected true/false, got `{other}`"),
                    })
                }
            });
            for b in 0..buildings {
                ds.load[b].push(num(load_idx[b])?);
                ds.solar[b].push(num(solar_idx[b])?);
            }
        }
        // Validation reports 0-based rows; shift to the 1-based numbering used above.
        ds.validate().map_err(|e| match e {
            Error::Parse {
                row,
                column,
                message,
            } if column != "*" => Error::Parse {
                row: row + 1,
                column,
                message,
            },
            other => other,
        })?;
        Ok(ds)
    }
}

/// Linear-interpolation percentile of an ascending slice.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
