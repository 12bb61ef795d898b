use std::io::Write;

use crate::model::{EffectsModel, VariationComponent};
use crate::Result;

fn pct(c: &VariationComponent) -> String {
    c.percent
        .map_or_else(|| "-".to_string(), |p| format!("{p:.2}"))
}

/// Variation table and main-effect intervals laid out as aligned text.
pub fn write_text_report<W: Write>(
    mut w: W,
    model: &EffectsModel,
    metric: &str,
    confidence: f64,
) -> Result<()> {
    let v = model.allocation_of_variation();
    let s_e = model.standard_error()?;
    let ci = model.confidence_intervals(confidence)?;
    let d = &model.matrix.design;

    writeln!(w, "Allocation of variation ({metric})")?;
    writeln!(
        w,
        "{:<34}{:>16}{:>20}",
        "Component", "Sum of Squares", "%age of Variation"
    )?;
    writeln!(
        w,
        "{:<34}{:>16.4}",
        "Individual Values", v.individual_values
    )?;
    writeln!(w, "{:<34}{:>16.4}", "Overall Mean", v.overall_mean)?;
    let total_pct = if v.is_degenerate() { "-" } else { "100.00" };
    writeln!(
        w,
        "{:<34}{:>16.4}{:>20}",
        "Total Variation", v.total, total_pct
    )?;
    writeln!(w, "Main Effects:")?;
    for c in &v.main {
        writeln!(
            w,
            "  {:<32}{:>16.4}{:>20}",
            c.name,
            c.sum_of_squares,
            pct(c)
        )?;
    }
    writeln!(w, "First-order Interactions:")?;
    for c in &v.interactions {
        writeln!(
            w,
            "  {:<32}{:>16.4}{:>20}",
            c.name,
            c.sum_of_squares,
            pct(c)
        )?;
    }
    writeln!(
        w,
        "{:<34}{:>16.4}{:>20}",
        "Residual",
        v.residual.sum_of_squares,
        pct(&v.residual)
    )?;
    writeln!(
        w,
        "Standard Error, s_e = {s_e:.4} ({} degrees of freedom)",
        model.residual_dof
    )?;
    if v.is_degenerate() {
        writeln!(
            w,
            "Note: all values are equal; total variation is zero and percentages are undefined."
        )?;
    }
    writeln!(w)?;

    let level = (confidence * 100.0).round();
    writeln!(
        w,
        "Main effects and {level}% confidence intervals ({metric})"
    )?;
    writeln!(
        w,
        "{:<24}{:>12}{:>26}{:>14}",
        "Factor", "Main Effect", "Confidence Interval", "Significant"
    )?;
    for (f, row) in d.factors.iter().zip(&ci) {
        writeln!(w, "{}:", f.name)?;
        for (l, iv) in f.levels.iter().zip(row) {
            let interval = format!("({:.4}, {:.4})", iv.lo, iv.hi);
            let sig = if iv.significant() { "yes" } else { "no" };
            writeln!(
                w,
                "  {:<22}{:>12.4}{:>26}{:>14}",
                l, iv.effect, interval, sig
            )?;
        }
    }
    Ok(())
}

/// `component,kind,sum_of_squares,percent`.
pub fn write_variation_csv<W: Write>(w: W, model: &EffectsModel) -> Result<()> {
    let v = model.allocation_of_variation();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["component", "kind", "sum_of_squares", "percent"])?;
    let num = |x: f64| format!("{x:.6}");
    let opt = |p: Option<f64>| p.map_or_else(String::new, |p| format!("{p:.4}"));
    out.write_record([
        "Individual Values",
        "summary",
        &num(v.individual_values),
        "",
    ])?;
    out.write_record(["Overall Mean", "summary", &num(v.overall_mean), ""])?;
    let total_pct = if v.is_degenerate() {
        String::new()
    } else {
        "100.0000".into()
    };
    out.write_record(["Total Variation", "summary", &num(v.total), &total_pct])?;
    for c in &v.main {
        out.write_record([
            c.name.as_str(),
            "main",
            &num(c.sum_of_squares),
            &opt(c.percent),
        ])?;
    }
    for c in &v.interactions {
        out.write_record([
            c.name.as_str(),
            "interaction",
            &num(c.sum_of_squares),
            &opt(c.percent),
        ])?;
    }
    out.write_record([
        "Residual",
        "residual",
        &num(v.residual.sum_of_squares),
        &opt(v.residual.percent),
    ])?;
    out.flush()?;
    Ok(())
}

/// `factor,level,effect,ci_lo,ci_hi,significant`.
pub fn write_effects_csv<W: Write>(w: W, model: &EffectsModel, confidence: f64) -> Result<()> {
    let ci = model.confidence_intervals(confidence)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["factor", "level", "effect", "ci_lo", "ci_hi", "significant"])?;
    for (f, row) in model.matrix.design.factors.iter().zip(&ci) {
        for (l, iv) in f.levels.iter().zip(row) {
            out.write_record([
                f.name.as_str(),
                l.as_str(),
                &format!("{:.6}", iv.effect),
                &format!("{:.6}", iv.lo),
                &format!("{:.6}", iv.hi),
                if iv.significant() { "true" } else { "false" },
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
