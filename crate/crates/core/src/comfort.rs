//! ISO 7730 thermal comfort: Fanger PMV, PPD, seasonal clothing and the
//! PMV-based comfort reward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1 met in W/m².
pub const MET_TO_W_M2: f64 = 58.15;
/// 1 clo in m²·K/W.
pub const CLO_TO_M2K_W: f64 = 0.155;

/// Lower/upper bound accepted for air and radiant temperature, °C.
pub const TEMPERATURE_RANGE: (f64, f64) = (-40.0, 60.0);

/// Clothing-surface temperature convergence threshold, °C.
pub const TCL_TOLERANCE: f64 = 1e-5;
pub const TCL_MAX_ITERATIONS: usize = 200;

/// The six PMV variables for one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortInputs {
    /// Air temperature, °C.
    pub tdb: f64,
    /// Mean radiant temperature, °C.
    pub tr: f64,
    /// Relative air speed, m/s.
    pub vr: f64,
    /// Relative humidity, %.
    pub rh: f64,
    /// Metabolic rate, met.
    pub met: f64,
    /// Clothing insulation, clo.
    pub clo: f64,
}

impl ComfortInputs {
    pub fn new(tdb: f64, tr: f64, vr: f64, rh: f64, met: f64, clo: f64) -> Result<Self> {
        let inputs = Self {
            tdb,
            tr,
            vr,
            rh,
            met,
            clo,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        check_temperature("tdb", self.tdb)?;
        check_temperature("tr", self.tr)?;
        check_humidity(self.rh)?;
        if !self.vr.is_finite() || self.vr < 0.0 {
            return Err(Error::domain("vr", self.vr, "air speed must be finite and >= 0"));
        }
        if !self.met.is_finite() || self.met <= 0.0 {
            return Err(Error::domain("met", self.met, "metabolic rate must be finite and > 0"));
        }
        if !self.clo.is_finite() || self.clo < 0.0 {
            return Err(Error::domain("clo", self.clo, "clothing insulation must be finite and >= 0"));
        }
        Ok(())
    }
}

fn check_temperature(field: &'static str, value: f64) -> Result<()> {
    let (lo, hi) = TEMPERATURE_RANGE;
    if !value.is_finite() || !(lo..=hi).contains(&value) {
        return Err(Error::domain(field, value, "temperature must lie in [-40, 60] °C"));
    }
    Ok(())
}

fn check_humidity(rh: f64) -> Result<()> {
    if !rh.is_finite() || !(0.0..=100.0).contains(&rh) {
        return Err(Error::domain("rh", rh, "relative humidity must lie in [0, 100] %"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmvResult {
    pub pmv: f64,
    /// Predicted percentage dissatisfied, %.
    pub ppd: f64,
}

/// Partial water-vapour pressure in Pa.
pub fn vapor_pressure(tdb: f64, rh: f64) -> Result<f64> {
    check_temperature("tdb", tdb)?;
    check_humidity(rh)?;
    Ok(rh / 100.0 * saturation_pressure(tdb))
}

/// Saturation vapour pressure over water in Pa (Antoine form).
fn saturation_pressure(tdb: f64) -> f64 {
    1000.0 * (16.6536 - 4030.183 / (tdb + 235.0)).exp()
}

/// PPD from PMV.
pub fn ppd_from_pmv(pmv: f64) -> f64 {
    100.0 - 95.0 * (-0.03353 * pmv.powi(4) - 0.2179 * pmv.powi(2)).exp()
}

/// Fanger PMV with zero external work.
pub fn compute_pmv(inputs: &ComfortInputs) -> Result<PmvResult> {
    inputs.validate()?;
    let ComfortInputs {
        tdb,
        tr,
        vr,
        rh,
        met,
        clo,
    } = *inputs;

    let pa = rh / 100.0 * saturation_pressure(tdb);
    let icl = CLO_TO_M2K_W * clo;
    let m = met * MET_TO_W_M2;
    // External work is zero: internal heat production equals metabolism.
    let mw = m;
    let f_cl = if icl <= 0.078 {
        1.0 + 1.29 * icl
    } else {
        1.05 + 0.645 * icl
    };

    let hcf = 12.1 * vr.sqrt();
    let taa = tdb + 273.0;
    let tra = tr + 273.0;
    let tra4 = (tra / 100.0).powi(4);

    let p1 = icl * f_cl;
    let p2 = p1 * 3.96;
    let p3 = p1 * 100.0;
    let p4 = p1 * taa;
    let p5 = 308.7 - 0.028 * mw + p2 * tra4;

    // Iterates are absolute clothing-surface temperatures scaled by 1/100.
    let tcla = taa + (35.5 - tdb) / (3.5 * (6.45 * icl + 0.1));
    let mut xn = tcla / 100.0;
    let mut xf = tcla / 50.0;
    let mut hc = hcf;
    let mut iterations = 0;
    while 100.0 * (xn - xf).abs() > TCL_TOLERANCE {
        if iterations == TCL_MAX_ITERATIONS {
            return Err(Error::Numerical(format!(
                "clothing surface temperature did not converge in {TCL_MAX_ITERATIONS} iterations for {inputs:?}"
            )));
        }
        xf = (xf + xn) / 2.0;
        let hcn = 2.38 * (100.0 * xf - taa).abs().powf(0.25);
        hc = hcn.max(hcf);
        xn = (p5 + p4 * hc - p2 * xf.powi(4)) / (100.0 + p3 * hc);
        iterations += 1;
    }
    let tcl = 100.0 * xn - 273.0;

    let skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - pa);
    let sweating = if mw > MET_TO_W_M2 {
        0.42 * (mw - MET_TO_W_M2)
    } else {
        0.0
    };
    let latent_respiration = 1.7e-5 * m * (5867.0 - pa);
    let dry_respiration = 0.0014 * m * (34.0 - tdb);
    let radiation = 3.96 * f_cl * (xn.powi(4) - tra4);
    let convection = f_cl * hc * (tcl - tdb);

    let sensitivity = 0.303 * (-0.036 * m).exp() + 0.028;
    let pmv = sensitivity
        * (mw
            - skin_diffusion
            - sweating
            - latent_respiration
            - dry_respiration
            - radiation
            - convection);
    if !pmv.is_finite() {
        return Err(Error::Numerical(format!("non-finite PMV for {inputs:?}")));
    }
    Ok(PmvResult {
        pmv,
        ppd: ppd_from_pmv(pmv),
    })
}

/// Clothing insulation by calendar month: light in June–September.
pub fn clothing_for_month(month: u32) -> Result<f64> {
    match month {
        6..=9 => Ok(0.5),
        1..=12 => Ok(1.0),
        _ => Err(Error::domain("month", month as f64, "month must lie in 1..=12")),
    }
}

/// Comfort score in [0, 1]: 1 at thermal neutrality, 0 once |pmv| reaches 3.
pub fn comfort_reward_pmv(pmv: f64) -> Result<f64> {
    if !pmv.is_finite() {
        return Err(Error::domain("pmv", pmv, "pmv must be finite"));
    }
    Ok(1.0 - pmv.abs().min(3.0) / 3.0)
}
