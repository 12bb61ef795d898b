//! Turns a results file into the factorial matrix of one delay class and
//! writes the variation and effects reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ubrsim::network::{BufferLevel, DelayClass};
use ubrsim::switch::DropPolicy;
use ubrsim::tcp::Flavor;
use ubrsim_factorial::{
    write_effects_csv, write_text_report, write_variation_csv, Design, EffectsModel, Factor, Matrix,
};

use crate::batch::ResultRow;
use crate::{CliError, Result};

pub const CONFIDENCE: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    Efficiency,
    Fairness,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Efficiency, Metric::Fairness];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Efficiency => "efficiency",
            Metric::Fairness => "fairness",
        }
    }

    fn of(self, row: &ResultRow) -> Option<f64> {
        match self {
            Metric::Efficiency => row.efficiency,
            Metric::Fairness => row.fairness,
        }
    }
}

/// TCP flavor × buffer size × drop policy, in the level order of the grid.
pub fn design() -> Design {
    let flavors: Vec<&str> = Flavor::ALL.iter().map(|f| f.label()).collect();
    let buffers: Vec<&str> = BufferLevel::ALL.iter().map(|b| b.label()).collect();
    let policies: Vec<&str> = DropPolicy::ALL.iter().map(|p| p.label()).collect();
    Design::new(vec![
        Factor::new("TCP Flavor", &flavors),
        Factor::new("Buffer Size", &buffers),
        Factor::new("Drop Policy", &policies),
    ])
    .expect("grid design is valid")
}

fn canonical(row: &ResultRow) -> Result<Vec<&'static str>> {
    let bad = |e: ubrsim::Error| CliError::Usage(format!("results file: {e}"));
    Ok(vec![
        Flavor::from_str(&row.flavor).map_err(bad)?.label(),
        BufferLevel::from_str(&row.buffer).map_err(bad)?.label(),
        DropPolicy::from_str(&row.policy).map_err(bad)?.label(),
    ])
}

/// Classes present in `rows`, in WAN, MEO, GEO order.
pub fn classes_in(rows: &[ResultRow]) -> Result<Vec<DelayClass>> {
    let mut found = Vec::new();
    for r in rows {
        let dc = DelayClass::from_str(&r.delay_class)
            .map_err(|e| CliError::Usage(format!("results file: {e}")))?;
        if !found.contains(&dc) {
            found.push(dc);
        }
    }
    found.sort();
    Ok(found)
}

/// Matrix of `metric` for `class`. Replicates (rows differing only in seed)
/// are averaged; failed runs count as missing.
pub fn matrix(rows: &[ResultRow], class: DelayClass, metric: Metric) -> Result<Matrix> {
    let mut obs = Vec::new();
    for r in rows {
        if DelayClass::from_str(&r.delay_class).ok() != Some(class) || !r.is_ok() {
            continue;
        }
        if let Some(v) = metric.of(r) {
            obs.push((canonical(r)?, v));
        }
    }
    Ok(Matrix::from_observations(design(), &obs)?)
}

pub fn analyze(rows: &[ResultRow], class: DelayClass, metric: Metric) -> Result<EffectsModel> {
    Ok(EffectsModel::fit(&matrix(rows, class, metric)?))
}

pub fn text_report(model: &EffectsModel, class: DelayClass, metric: Metric) -> Result<String> {
    let mut buf = Vec::new();
    write_text_report(
        &mut buf,
        model,
        &format!("{} {}", class.label(), metric.label()),
        CONFIDENCE,
    )?;
    Ok(String::from_utf8(buf).expect("report is UTF-8"))
}

/// Writes `<class>_<metric>.txt`, `_variation.csv` and `_effects.csv` into
/// `dir`, returning the paths written.
pub fn write_reports(
    dir: &Path,
    model: &EffectsModel,
    class: DelayClass,
    metric: Metric,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let stem = format!("{}_{}", class.label().to_ascii_lowercase(), metric.label());
    let text = dir.join(format!("{stem}.txt"));
    fs::write(&text, text_report(model, class, metric)?).map_err(|e| CliError::io(&text, e))?;

    let variation = dir.join(format!("{stem}_variation.csv"));
    let f = fs::File::create(&variation).map_err(|e| CliError::io(&variation, e))?;
    write_variation_csv(f, model)?;

    let effects = dir.join(format!("{stem}_effects.csv"));
    let f = fs::File::create(&effects).map_err(|e| CliError::io(&effects, e))?;
    write_effects_csv(f, model, CONFIDENCE)?;
    Ok(vec![text, variation, effects])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(flavor: &str, buffer: &str, policy: &str, e: f64, seed: u64) -> ResultRow {
        ResultRow {
            delay_class: "GEO".into(),
            flavor: flavor.into(),
            policy: policy.into(),
            buffer: buffer.into(),
            efficiency: Some(e),
            fairness: Some(1.0 - e),
            seed,
            error: String::new(),
        }
    }

    fn full(seed: u64, offset: f64) -> Vec<ResultRow> {
        let mut v = Vec::new();
        for (i, f) in ["vanilla", "reno", "newreno", "sack"].iter().enumerate() {
            for (j, b) in ["0.5 RTT", "1 RTT", "2 RTT"].iter().enumerate() {
                for (k, p) in ["epd", "sd"].iter().enumerate() {
                    v.push(row(
                        f,
                        b,
                        p,
                        0.5 + 0.1 * i as f64 + 0.01 * j as f64 + 0.001 * k as f64 + offset,
                        seed,
                    ));
                }
            }
        }
        v
    }

    #[test]
    fn labels_are_normalised_and_replicates_averaged() {
        let mut rows = full(1, 0.0);
        rows.extend(full(2, 0.02));
        let m = matrix(&rows, DelayClass::Geo, Metric::Efficiency).unwrap();
        assert!((m.values[0] - 0.51).abs() < 1e-12);
        assert!((m.values[23] - (0.5 + 0.3 + 0.02 + 0.001 + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn missing_cells_are_named() {
        let mut rows = full(1, 0.0);
        rows.retain(|r| !(r.flavor == "sack" && r.policy == "sd"));
        rows[0].error = "failed".into();
        let err = matrix(&rows, DelayClass::Geo, Metric::Fairness).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("TCP Flavor=SACK, Buffer Size=2RTT, Drop Policy=SD"),
            "{msg}"
        );
        assert!(
            msg.contains("TCP Flavor=Vanilla, Buffer Size=0.5RTT, Drop Policy=EPD"),
            "{msg}"
        );
    }

    #[test]
    fn other_classes_are_ignored() {
        let rows = full(1, 0.0);
        assert!(matrix(&rows, DelayClass::Wan, Metric::Efficiency).is_err());
        assert_eq!(classes_in(&rows).unwrap(), vec![DelayClass::Geo]);
    }
}
