use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::experiment::{write_with, ConditionReport, ExperimentReport, CONFIG_FILE, DATASET_FILE, REPORT_FILE};
use crate::comfort::{clothing_for_month, comfort_reward_pmv};
use crate::env::Dataset;
use crate::error::{Error, Result};
use crate::kpi::{MeanStd, KPI_NAMES};
use crate::reward::{pmv_for_signals, ConditionId};

pub const KPI_RATIOS_FILE: &str = "kpi_ratios.csv";
pub const DAILY_PEAK_FILE: &str = "daily_peak.csv";
pub const COST_RAMPING_FILE: &str = "cost_ramping.csv";
pub const SEASONAL_PMV_FILE: &str = "seasonal_pmv.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub kpi_ratios: PathBuf,
    pub daily_peak: PathBuf,
    pub cost_ramping: PathBuf,
    pub seasonal_pmv: PathBuf,
}

/// Monthly means of the PMV comfort channel over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonthlyComfort {
    pub month: u32,
    pub hours: usize,
    pub clo: f64,
    pub mean_t_out: f64,
    pub mean_pmv: f64,
    pub mean_comfort_reward: f64,
}

pub fn seasonal_comfort(dataset: &Dataset) -> Result<Vec<MonthlyComfort>> {
    let mut rows: Vec<MonthlyComfort> = Vec::new();
    for t in 0..dataset.len() {
        let signals = dataset.signals(t, 0.0);
        let pmv = pmv_for_signals(&signals)?.pmv;
        let reward = comfort_reward_pmv(pmv)?;
        let month = signals.month;
        let row = match rows.iter_mut().find(|r| r.month == month) {
            Some(r) => r,
            None => {
                rows.push(MonthlyComfort {
                    month,
                    hours: 0,
                    clo: clothing_for_month(month)?,
                    mean_t_out: 0.0,
                    mean_pmv: 0.0,
                    mean_comfort_reward: 0.0,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.hours += 1;
        row.mean_t_out += signals.t_out;
        row.mean_pmv += pmv;
        row.mean_comfort_reward += reward;
    }
    for r in &mut rows {
        let n = r.hours as f64;
        r.mean_t_out /= n;
        r.mean_pmv /= n;
        r.mean_comfort_reward /= n;
    }
    rows.sort_by_key(|r| r.month);
    Ok(rows)
}

/// (condition, seed) pairs the config asks for that the report lacks.
pub fn missing_runs(config: &ExperimentConfig, report: &ExperimentReport) -> Vec<(ConditionId, Option<u64>)> {
    let mut missing = Vec::new();
    for &id in &config.conditions {
        let runs = report.condition(id).map(|c| c.runs.as_slice()).unwrap_or(&[]);
        if id == ConditionId::E1 {
            if runs.is_empty() {
                missing.push((id, None));
            }
            continue;
        }
        for &seed in &config.seeds {
            if !runs.iter().any(|r| r.seed == Some(seed)) {
                missing.push((id, Some(seed)));
            }
        }
    }
    missing
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serde(e.to_string())
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    write_with(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header).map_err(csv_err)?;
        for row in rows {
            csv.write_record(row).map_err(csv_err)?;
        }
        csv.flush().map_err(|e| Error::Serde(e.to_string()))
    })
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn ms_cells(m: Option<MeanStd>) -> [String; 2] {
    [cell(m.map(|m| m.mean)), cell(m.map(|m| m.std))]
}

fn kpi_ratio_rows(conditions: &[&ConditionReport]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = strings(&["condition", "name", "n"]);
    for k in KPI_NAMES {
        header.push(format!("{k}_mean"));
        header.push(format!("{k}_std"));
    }
    let rows = conditions
        .iter()
        .map(|c| {
            let agg = c.aggregate.expect("complete runs have an aggregate");
            let mut row = vec![c.id.to_string(), c.name.clone(), agg.n.to_string()];
            for m in agg.values() {
                row.extend(ms_cells(m));
            }
            row
        })
        .collect();
    (header, rows)
}

/// Writes the four plot-ready tables for a completed run directory:
/// KPI ratio mean and std per condition, daily-peak ratios, per-seed
/// (cost, ramping) ratio points, and the monthly PMV comfort trace.
///
/// In the scatter table the seed-independent rule-based rollout appears
/// once per configured seed.
pub fn emit_plot_data(runs: &Path, out: &Path) -> Result<PlotFiles> {
    let config = ExperimentConfig::load(runs.join(CONFIG_FILE))?;
    let report = ExperimentReport::load(runs.join(REPORT_FILE))?;
    let missing = missing_runs(&config, &report);
    if !missing.is_empty() {
        let list: Vec<String> = missing
            .iter()
            .map(|(c, s)| match s {
                Some(s) => format!("({c}, {s})"),
                None => format!("({c}, -)"),
            })
            .collect();
        return Err(Error::Usage(format!(
            "{}: missing runs for {}",
            runs.display(),
            list.join(", ")
        )));
    }
    let dataset = Dataset::load(runs.join(DATASET_FILE))?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let files = PlotFiles {
        kpi_ratios: out.join(KPI_RATIOS_FILE),
        daily_peak: out.join(DAILY_PEAK_FILE),
        cost_ramping: out.join(COST_RAMPING_FILE),
        seasonal_pmv: out.join(SEASONAL_PMV_FILE),
    };

    let selected: Vec<&ConditionReport> = config
        .conditions
        .iter()
        .filter_map(|&id| report.condition(id))
        .collect();

    let (header, rows) = kpi_ratio_rows(&selected);
    write_table(&files.kpi_ratios, &header, &rows)?;

    let header = strings(&["condition", "name", "n", "mean", "std", "min", "max"]);
    let rows: Vec<Vec<String>> = selected
        .iter()
        .map(|c| {
            let values: Vec<f64> = c.runs.iter().filter_map(|r| r.kpis.ratios.daily_peak).collect();
            let agg = c.aggregate.and_then(|a| a.daily_peak);
            let [mean, std] = ms_cells(agg);
            let min = values.iter().copied().reduce(f64::min);
            let max = values.iter().copied().reduce(f64::max);
            vec![c.id.to_string(), c.name.clone(), c.runs.len().to_string(), mean, std, cell(min), cell(max)]
        })
        .collect();
    write_table(&files.daily_peak, &header, &rows)?;

    let header = strings(&["condition", "seed", "cost_ratio", "ramping_ratio"]);
    let mut rows = Vec::new();
    for c in &selected {
        if c.id == ConditionId::E1 {
            let r = &c.runs[0].kpis.ratios;
            for seed in &config.seeds {
                rows.push(vec![c.id.to_string(), seed.to_string(), cell(r.cost), cell(r.ramping)]);
            }
            continue;
        }
        for &seed in &config.seeds {
            let run = c.runs.iter().find(|r| r.seed == Some(seed)).expect("checked above");
            let r = &run.kpis.ratios;
            rows.push(vec![c.id.to_string(), seed.to_string(), cell(r.cost), cell(r.ramping)]);
        }
    }
    write_table(&files.cost_ramping, &header, &rows)?;

    let header = strings(&["month", "hours", "clo", "mean_t_out", "mean_pmv", "mean_comfort_reward"]);
    let rows: Vec<Vec<String>> = seasonal_comfort(&dataset)?
        .iter()
        .map(|m| {
            vec![
                m.month.to_string(),
                m.hours.to_string(),
                m.clo.to_string(),
                m.mean_t_out.to_string(),
                m.mean_pmv.to_string(),
                m.mean_comfort_reward.to_string(),
            ]
        })
        .collect();
    write_table(&files.seasonal_pmv, &header, &rows)?;
    Ok(files)
}
