//! District KPIs and ratios against the rule-based controller.
//!
//! Billing-style KPIs (cost, carbon, consumption) count grid draw only;
//! exported energy is excluded. Grid-stress KPIs (ramping, daily peak) use
//! the signed net profile. All sums run left to right over time so results
//! are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawKpis {
    pub cost: f64,
    /// kgCO₂.
    pub carbon: f64,
    /// kWh drawn from the grid.
    pub consumption: f64,
    /// Σ |E_t − E_{t−1}|, kWh.
    pub ramping: f64,
    /// Mean over days of the daily maximum net draw, kWh.
    pub daily_peak: f64,
}

pub const KPI_NAMES: [&str; 5] = ["cost", "carbon", "consumption", "ramping", "daily_peak"];

impl RawKpis {
    pub fn values(&self) -> [f64; 5] {
        [self.cost, self.carbon, self.consumption, self.ramping, self.daily_peak]
    }
}

/// Ratios versus the RBC; `None` where the RBC value is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiRatios {
    pub cost: Option<f64>,
    pub carbon: Option<f64>,
    pub consumption: Option<f64>,
    pub ramping: Option<f64>,
    pub daily_peak: Option<f64>,
}

impl KpiRatios {
    pub fn values(&self) -> [Option<f64>; 5] {
        [self.cost, self.carbon, self.consumption, self.ramping, self.daily_peak]
    }

    fn from_values(v: [Option<f64>; 5]) -> Self {
        Self {
            cost: v[0],
            carbon: v[1],
            consumption: v[2],
            ramping: v[3],
            daily_peak: v[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub raw: RawKpis,
    pub ratios: KpiRatios,
}

pub fn compute_kpis(net_energy: &[f64], price: &[f64], carbon_intensity: &[f64]) -> Result<RawKpis> {
    let n = net_energy.len();
    if price.len() != n || carbon_intensity.len() != n {
        return Err(Error::Usage(format!(
            "series lengths differ: net {n}, price {}, carbon {}",
            price.len(),
            carbon_intensity.len()
        )));
    }
    if n == 0 || n % 24 != 0 {
        return Err(Error::Usage(format!(
            "series length {n} is not a positive multiple of 24"
        )));
    }

    let mut cost = 0.0;
    let mut carbon = 0.0;
    let mut consumption = 0.0;
    for t in 0..n {
        let draw = net_energy[t].max(0.0);
        cost += price[t] * draw;
        carbon += carbon_intensity[t] * draw;
        consumption += draw;
    }
    let ramping = net_energy
        .windows(2)
        .fold(0.0, |acc, w| acc + (w[1] - w[0]).abs());
    let peak_sum = net_energy.chunks_exact(24).fold(0.0, |acc, day| {
        acc + day.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    });
    let daily_peak = peak_sum / (n / 24) as f64;

    Ok(RawKpis {
        cost,
        carbon,
        consumption,
        ramping,
        daily_peak,
    })
}

/// Element-wise ratios of `policy` over `rbc`.
pub fn ratio_report(policy: &RawKpis, rbc: &RawKpis) -> KpiReport {
    let p = policy.values();
    let r = rbc.values();
    let ratios = std::array::from_fn(|i| (r[i] > 0.0).then(|| p[i] / r[i]));
    KpiReport {
        raw: *policy,
        ratios: KpiRatios::from_values(ratios),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Per-KPI ratio mean and sample standard deviation over seeds. A single
/// report has std 0. A KPI with any undefined ratio is itself undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub n: usize,
    pub cost: Option<MeanStd>,
    pub carbon: Option<MeanStd>,
    pub consumption: Option<MeanStd>,
    pub ramping: Option<MeanStd>,
    pub daily_peak: Option<MeanStd>,
}

impl SeedAggregate {
    pub fn values(&self) -> [Option<MeanStd>; 5] {
        [self.cost, self.carbon, self.consumption, self.ramping, self.daily_peak]
    }
}

pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

pub fn aggregate_seeds(reports: &[KpiReport]) -> Result<SeedAggregate> {
    if reports.is_empty() {
        return Err(Error::Usage("cannot aggregate an empty list of reports".into()));
    }
    let per_kpi: [Option<MeanStd>; 5] = std::array::from_fn(|i| {
        let vals: Option<Vec<f64>> = reports.iter().map(|r| r.ratios.values()[i]).collect();
        vals.map(|v| mean_std(&v))
    });
    Ok(SeedAggregate {
        n: reports.len(),
        cost: per_kpi[0],
        carbon: per_kpi[1],
        consumption: per_kpi[2],
        ramping: per_kpi[3],
        daily_peak: per_kpi[4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(prefix: &[f64]) -> Vec<f64> {
        let mut v = prefix.to_vec();
        v.resize(24, 0.0);
        v
    }

    #[test]
    fn ramping_of_short_pulse() {
        let e = day(&[1.0, 2.0, 1.0]);
        let k = compute_kpis(&e, &[0.0; 24], &[0.0; 24]).unwrap();
        // 2 from the pulse itself, 1 for the drop back to zero.
        assert_eq!(k.ramping, 3.0);
    }

    #[test]
    fn constant_day() {
        let k = compute_kpis(&[2.0; 24], &[0.5; 24], &[0.1; 24]).unwrap();
        assert_eq!(k.cost, 24.0 * 0.5 * 2.0);
        assert_eq!(k.daily_peak, 2.0);
        assert_eq!(k.ramping, 0.0);
    }

    #[test]
    fn exports_are_not_billed() {
        let e = day(&[-3.0, 2.0, -1.0]);
        let k = compute_kpis(&e, &[1.0; 24], &[1.0; 24]).unwrap();
        assert_eq!(k.consumption, 2.0);
        assert_eq!(k.cost, 2.0);
        assert_eq!(k.ramping, 5.0 + 3.0 + 1.0);
    }

    #[test]
    fn bad_lengths() {
        assert!(compute_kpis(&[0.0; 24], &[0.0; 23], &[0.0; 24]).is_err());
        assert!(compute_kpis(&[0.0; 25], &[0.0; 25], &[0.0; 25]).is_err());
        assert!(compute_kpis(&[], &[], &[]).is_err());
    }

    #[test]
    fn ratios() {
        let e: Vec<f64> = (0..48).map(|t| (t % 24) as f64 * 0.1 + 0.5).collect();
        let k = compute_kpis(&e, &[0.3; 48], &[0.2; 48]).unwrap();
        let self_ratio = ratio_report(&k, &k);
        assert!(self_ratio.ratios.values().iter().all(|r| *r == Some(1.0)));
        let doubled = RawKpis { cost: 2.0 * k.cost, ..k };
        assert_eq!(ratio_report(&doubled, &k).ratios.cost, Some(2.0));
        let zero = RawKpis { ramping: 0.0, ..k };
        assert_eq!(ratio_report(&k, &zero).ratios.ramping, None);
    }

    #[test]
    fn seed_aggregation() {
        let e = day(&[1.0, 3.0, 2.0]);
        let k = compute_kpis(&e, &[1.0; 24], &[1.0; 24]).unwrap();
        let one = ratio_report(&k, &k);
        let agg = aggregate_seeds(&[one]).unwrap();
        assert_eq!(agg.cost, Some(MeanStd { mean: 1.0, std: 0.0 }));
        let agg = aggregate_seeds(&[one; 5]).unwrap();
        assert!(agg.values().iter().all(|v| v.unwrap().std == 0.0));

        let with_cost = |c: f64| KpiReport {
            ratios: KpiRatios { cost: Some(c), ..one.ratios },
            ..one
        };
        let agg = aggregate_seeds(&[with_cost(1.0), with_cost(2.0), with_cost(3.0)]).unwrap();
        assert_eq!(agg.cost, Some(MeanStd { mean: 2.0, std: 1.0 }));
        assert!(aggregate_seeds(&[]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn ratios_are_scale_invariant(
            series in proptest::collection::vec(-5.0f64..10.0, 48),
            rbc in proptest::collection::vec(0.1f64..10.0, 48),
            c in 0.1f64..10.0,
        ) {
            let price = vec![0.3; 48];
            let carbon = vec![0.2; 48];
            let scale = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
            let base = ratio_report(
                &compute_kpis(&series, &price, &carbon).unwrap(),
                &compute_kpis(&rbc, &price, &carbon).unwrap(),
            );
            let scaled = ratio_report(
                &compute_kpis(&scale(&series), &price, &carbon).unwrap(),
                &compute_kpis(&scale(&rbc), &price, &carbon).unwrap(),
            );
            for (a, b) in base.ratios.values().iter().zip(scaled.ratios.values()) {
                match (a, b) {
                    (Some(a), Some(b)) => proptest::prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                    (None, None) => {}
                    _ => proptest::prop_assert!(false),
                }
            }
        }

        #[test]
        fn day_permutation_invariance(
            days in proptest::collection::vec(proptest::collection::vec(-2.0f64..6.0, 24), 3),
            prices in proptest::collection::vec(0.0f64..1.0, 3),
        ) {
            let flat = |order: &[usize]| -> (Vec<f64>, Vec<f64>) {
                let e = order.iter().flat_map(|&d| days[d].clone()).collect();
                let p = order.iter().flat_map(|&d| vec![prices[d]; 24]).collect();
                (e, p)
            };
            let (e1, p1) = flat(&[0, 1, 2]);
            let (e2, p2) = flat(&[2, 0, 1]);
            let a = compute_kpis(&e1, &p1, &p1).unwrap();
            let b = compute_kpis(&e2, &p2, &p2).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
            proptest::prop_assert!(close(a.consumption, b.consumption));
            proptest::prop_assert!(close(a.cost, b.cost));
            proptest::prop_assert!(close(a.daily_peak, b.daily_peak));
        }
    }
}
