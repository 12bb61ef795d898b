//! Replays the published WAN, MEO and GEO result matrices through the
//! analysis and compares every reported number with the published tables.

use serde::Deserialize;
use ubrsim::network::DelayClass;
use ubrsim_factorial::EffectsModel;

use crate::analysis::{self, Metric, CONFIDENCE};
use crate::batch::{read_results, ResultRow};
use crate::Result;

pub const RESULTS_CSV: &str = include_str!("../fixtures/published_results.csv");
pub const VARIATION_CSV: &str = include_str!("../fixtures/published_variation.csv");
pub const EFFECTS_CSV: &str = include_str!("../fixtures/published_effects.csv");

/// Sums of squares, effects and interval ends are printed to 4 decimals.
pub const VALUE_TOL: f64 = 0.0005;
pub const PERCENT_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub delay_class: DelayClass,
    pub metric: Metric,
    pub item: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        (self.expected - self.actual).abs() <= self.tolerance
    }
}

#[derive(Debug, Deserialize)]
struct VariationRow {
    delay_class: String,
    metric: String,
    component: String,
    sum_of_squares: f64,
    percent: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct EffectRow {
    delay_class: String,
    metric: String,
    factor: String,
    level: String,
    effect: f64,
    ci_lo: f64,
    ci_hi: f64,
}

pub fn published_results() -> Result<Vec<ResultRow>> {
    read_results(RESULTS_CSV.as_bytes())
}

fn rows<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    Ok(csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?)
}

fn selects(class: DelayClass, metric: Metric, dc: &str, m: &str) -> bool {
    dc == class.label() && m == metric.label()
}

/// Every published number of the variation and effects tables of one class
/// and metric, against the model fitted to the published matrix.
pub fn checks_for(model: &EffectsModel, class: DelayClass, metric: Metric) -> Result<Vec<Check>> {
    let v = model.allocation_of_variation();
    let mut out = Vec::new();
    let mut push = |item: String, expected: f64, actual: f64, tolerance: f64| {
        out.push(Check {
            delay_class: class,
            metric,
            item,
            expected,
            actual,
            tolerance,
        })
    };

    for r in rows::<VariationRow>(VARIATION_CSV)? {
        if !selects(class, metric, &r.delay_class, &r.metric) {
            continue;
        }
        let (ss, pct) = match r.component.as_str() {
            "Individual Values" => (v.individual_values, None),
            "Overall Mean" => (v.overall_mean, None),
            "Total Variation" => (v.total, Some(100.0)),
            "Standard Error" => (model.standard_error()?, None),
            name => {
                let c = v
                    .main
                    .iter()
                    .chain(&v.interactions)
                    .find(|c| c.name == name)
                    .unwrap_or_else(|| panic!("fixture names unknown component {name:?}"));
                (c.sum_of_squares, c.percent)
            }
        };
        push(
            format!("{} sum of squares", r.component),
            r.sum_of_squares,
            ss,
            VALUE_TOL,
        );
        if let Some(expected) = r.percent {
            push(
                format!("{} percent", r.component),
                expected,
                pct.unwrap_or(f64::NAN),
                PERCENT_TOL,
            );
        }
    }

    let ci = model.confidence_intervals(CONFIDENCE)?;
    let d = &model.matrix.design;
    for r in rows::<EffectRow>(EFFECTS_CSV)? {
        if !selects(class, metric, &r.delay_class, &r.metric) {
            continue;
        }
        let f = d
            .factors
            .iter()
            .position(|f| f.name == r.factor)
            .unwrap_or_else(|| panic!("fixture names unknown factor {:?}", r.factor));
        let l = d.factors[f]
            .levels
            .iter()
            .position(|l| *l == r.level)
            .unwrap_or_else(|| panic!("fixture names unknown level {:?}", r.level));
        let iv = ci[f][l];
        push(
            format!("{} effect", r.level),
            r.effect,
            iv.effect,
            VALUE_TOL,
        );
        push(
            format!("{} interval low", r.level),
            r.ci_lo,
            iv.lo,
            VALUE_TOL,
        );
        push(
            format!("{} interval high", r.level),
            r.ci_hi,
            iv.hi,
            VALUE_TOL,
        );
    }
    Ok(out)
}

/// Checks for all three classes and both metrics.
pub fn all_checks() -> Result<Vec<Check>> {
    let results = published_results()?;
    let mut out = Vec::new();
    for class in DelayClass::ALL {
        for metric in Metric::ALL {
            let model = analysis::analyze(&results, class, metric)?;
            out.extend(checks_for(&model, class, metric)?);
        }
    }
    Ok(out)
}

/// Number of main effects whose interval encloses zero, out of the total.
pub fn enclosing_zero(model: &EffectsModel) -> Result<(usize, usize)> {
    let ci = model.confidence_intervals(CONFIDENCE)?;
    let all: Vec<_> = ci.iter().flatten().collect();
    Ok((all.iter().filter(|iv| !iv.significant()).count(), all.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_cover_every_table() {
        assert_eq!(published_results().unwrap().len(), 72);
        // 10 rows per metric and class; 9 levels per metric and class.
        assert_eq!(rows::<VariationRow>(VARIATION_CSV).unwrap().len(), 60);
        assert_eq!(rows::<EffectRow>(EFFECTS_CSV).unwrap().len(), 54);
    }
}
