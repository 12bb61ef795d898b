use crate::design::Matrix;
use crate::tdist::t_quantile;
use crate::{Error, Result};

/// First-order interaction between factors `a < b`, indexed `[level_a][level_b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    pub values: Vec<Vec<f64>>,
}

/// Additive model with all first-order interactions, fitted to a complete
/// factorial matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectsModel {
    pub matrix: Matrix,
    pub mean: f64,
    /// `main_effects[factor][level]`.
    pub main_effects: Vec<Vec<f64>>,
    pub interactions: Vec<Interaction>,
    /// Per-cell residual after removing mean, main effects and interactions.
    pub residuals: Vec<f64>,
    pub residual_dof: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationComponent {
    pub name: String,
    pub sum_of_squares: f64,
    /// Share of total variation in percent; `None` when the total is zero.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationTable {
    /// Σ y².
    pub individual_values: f64,
    /// Π N_A · Y².
    pub overall_mean: f64,
    pub total: f64,
    pub main: Vec<VariationComponent>,
    pub interactions: Vec<VariationComponent>,
    pub residual: VariationComponent,
}

impl VariationTable {
    pub fn is_degenerate(&self) -> bool {
        negligible(self.total, self.individual_values)
    }
}

// Σy² − ΠY² of a constant matrix is rounding noise, not variation.
fn negligible(total: f64, individual: f64) -> bool {
    total <= 1e-12 * individual
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub effect: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// An effect is significant when its interval excludes zero.
    pub fn significant(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

impl EffectsModel {
    pub fn fit(matrix: &Matrix) -> Self {
        let d = &matrix.design;
        let k = d.factors.len();
        let cells: Vec<Vec<usize>> = (0..d.cells()).map(|c| d.levels_of(c)).collect();
        let y = &matrix.values;
        let overall = mean(y.iter().copied());

        let main_effects: Vec<Vec<f64>> = (0..k)
            .map(|f| {
                (0..d.factors[f].len())
                    .map(|l| {
                        mean(
                            cells
                                .iter()
                                .zip(y)
                                .filter(|(c, _)| c[f] == l)
                                .map(|(_, &v)| v),
                        ) - overall
                    })
                    .collect()
            })
            .collect();

        let mut interactions = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                let values = (0..d.factors[a].len())
                    .map(|la| {
                        (0..d.factors[b].len())
                            .map(|lb| {
                                let m = mean(
                                    cells
                                        .iter()
                                        .zip(y)
                                        .filter(|(c, _)| c[a] == la && c[b] == lb)
                                        .map(|(_, &v)| v),
                                );
                                m - (overall + main_effects[a][la] + main_effects[b][lb])
                            })
                            .collect()
                    })
                    .collect();
                interactions.push(Interaction { a, b, values });
            }
        }

        let residuals = cells
            .iter()
            .zip(y)
            .map(|(c, &v)| {
                let fitted = overall
                    + (0..k).map(|f| main_effects[f][c[f]]).sum::<f64>()
                    + interactions
                        .iter()
                        .map(|i| i.values[c[i.a]][c[i.b]])
                        .sum::<f64>();
                v - fitted
            })
            .collect();

        Self {
            matrix: matrix.clone(),
            mean: overall,
            main_effects,
            interactions,
            residuals,
            residual_dof: d.residual_dof(),
        }
    }

    /// Prediction of the model for a cell, residual excluded.
    pub fn fitted(&self, cell: usize) -> f64 {
        let c = self.matrix.design.levels_of(cell);
        self.mean
            + self
                .main_effects
                .iter()
                .enumerate()
                .map(|(f, me)| me[c[f]])
                .sum::<f64>()
            + self
                .interactions
                .iter()
                .map(|i| i.values[c[i.a]][c[i.b]])
                .sum::<f64>()
    }

    pub fn residual_sum_of_squares(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }

    /// `s_e = sqrt(Σe² / d_e)`.
    pub fn standard_error(&self) -> Result<f64> {
        if self.residual_dof <= 0 {
            return Err(Error::Saturated(self.residual_dof));
        }
        Ok((self.residual_sum_of_squares() / self.residual_dof as f64).sqrt())
    }

    /// Standard deviation of the main effects of `factor`.
    pub fn effect_std(&self, factor: usize) -> Result<f64> {
        let d = &self.matrix.design;
        let n = d.factors[factor].len() as f64;
        Ok(self.standard_error()? * ((n - 1.0) / d.cells() as f64).sqrt())
    }

    /// Two-sided intervals for every main effect, `[factor][level]`.
    pub fn confidence_intervals(&self, confidence: f64) -> Result<Vec<Vec<Interval>>> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::Quantile(confidence));
        }
        let p = 1.0 - (1.0 - confidence) / 2.0;
        let dof =
            u32::try_from(self.residual_dof).map_err(|_| Error::Saturated(self.residual_dof))?;
        let t = t_quantile(p, dof)?;
        (0..self.main_effects.len())
            .map(|f| {
                let half = self.effect_std(f)? * t;
                Ok(self.main_effects[f]
                    .iter()
                    .map(|&e| Interval {
                        effect: e,
                        lo: e - half,
                        hi: e + half,
                    })
                    .collect())
            })
            .collect()
    }

    pub fn allocation_of_variation(&self) -> VariationTable {
        let d = &self.matrix.design;
        let cells = d.cells() as f64;
        let individual: f64 = self.matrix.values.iter().map(|v| v * v).sum();
        let of_mean = cells * self.mean * self.mean;
        let total = individual - of_mean;
        let pct = |ss: f64| (!negligible(total, individual)).then(|| 100.0 * ss / total);
        let main = d
            .factors
            .iter()
            .zip(&self.main_effects)
            .map(|(f, me)| {
                let ss = cells / f.len() as f64 * me.iter().map(|e| e * e).sum::<f64>();
                VariationComponent {
                    name: f.name.clone(),
                    sum_of_squares: ss,
                    percent: pct(ss),
                }
            })
            .collect();
        let interactions = self
            .interactions
            .iter()
            .map(|i| {
                let per = cells / (d.factors[i.a].len() * d.factors[i.b].len()) as f64;
                let ss = per * i.values.iter().flatten().map(|e| e * e).sum::<f64>();
                VariationComponent {
                    name: format!("{}-{}", d.factors[i.a].name, d.factors[i.b].name),
                    sum_of_squares: ss,
                    percent: pct(ss),
                }
            })
            .collect();
        let sse = self.residual_sum_of_squares();
        VariationTable {
            individual_values: individual,
            overall_mean: of_mean,
            total,
            main,
            interactions,
            residual: VariationComponent {
                name: "Residual".into(),
                sum_of_squares: sse,
                percent: pct(sse),
            },
        }
    }
}
