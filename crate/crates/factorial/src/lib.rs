//! Full-factorial analysis with first-order interactions: overall mean, main
//! effects, interactions, allocation of variation, standard error and
//! confidence intervals for the main effects.

mod design;
mod model;
mod report;
mod tdist;

pub use design::{Design, Factor, Matrix};
pub use model::{EffectsModel, Interaction, Interval, VariationComponent, VariationTable};
pub use report::{write_effects_csv, write_text_report, write_variation_csv};
pub use tdist::t_quantile;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("design: {0}")]
    Design(String),
    #[error("missing cells: {}", .0.join("; "))]
    MissingCells(Vec<String>),
    #[error("saturated model: {0} residual degrees of freedom")]
    Saturated(i64),
    #[error("no t quantile for p = {0}")]
    Quantile(f64),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
