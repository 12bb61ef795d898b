use std::collections::HashMap;
use std::io::Read;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
}

impl Factor {
    pub fn new(name: impl Into<String>, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    fn position(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

/// Ordered factors; cells are indexed row-major with the last factor fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub factors: Vec<Factor>,
}

impl Design {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Design("at least one factor is required".into()));
        }
        for f in &factors {
            if f.levels.len() < 2 {
                return Err(Error::Design(format!(
                    "factor '{}' needs at least two levels",
                    f.name
                )));
            }
            let mut seen = f.levels.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != f.levels.len() {
                return Err(Error::Design(format!(
                    "factor '{}' has repeated levels",
                    f.name
                )));
            }
        }
        Ok(Self { factors })
    }

    /// Π N_A.
    pub fn cells(&self) -> usize {
        self.factors.iter().map(Factor::len).product()
    }

    pub fn index(&self, levels: &[usize]) -> usize {
        levels
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&l, f)| acc * f.len() + l)
    }

    pub fn levels_of(&self, mut cell: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            out[k] = cell % f.len();
            cell /= f.len();
        }
        out
    }

    fn describe(&self, levels: &[usize]) -> String {
        self.factors
            .iter()
            .zip(levels)
            .map(|(f, &l)| format!("{}={}", f.name, f.levels[l]))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Residual degrees of freedom of the first-order model.
    pub fn residual_dof(&self) -> i64 {
        let n: Vec<i64> = self.factors.iter().map(|f| f.len() as i64).collect();
        let main: i64 = n.iter().map(|k| k - 1).sum();
        let mut pairs = 0;
        for a in 0..n.len() {
            for b in a + 1..n.len() {
                pairs += (n[a] - 1) * (n[b] - 1);
            }
        }
        self.cells() as i64 - 1 - main - pairs
    }
}

/// One value per design cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub design: Design,
    pub values: Vec<f64>,
}

impl Matrix {
    pub fn new(design: Design, values: Vec<f64>) -> Result<Self> {
        if values.len() != design.cells() {
            return Err(Error::Design(format!(
                "expected {} values, got {}",
                design.cells(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value {v}")));
        }
        Ok(Self { design, values })
    }

    /// Builds a matrix from labelled observations. Replicates of a cell are
    /// averaged; unknown levels and empty cells are errors.
    pub fn from_observations<S: AsRef<str>>(
        design: Design,
        rows: &[(Vec<S>, f64)],
    ) -> Result<Self> {
        let k = design.factors.len();
        let mut sum = vec![0.0; design.cells()];
        let mut count = vec![0u32; design.cells()];
        for (labels, v) in rows {
            if labels.len() != k {
                return Err(Error::Input(format!(
                    "expected {k} factor labels, got {}",
                    labels.len()
                )));
            }
            let mut idx = Vec::with_capacity(k);
            for (f, l) in design.factors.iter().zip(labels) {
                let l = l.as_ref();
                idx.push(f.position(l).ok_or_else(|| {
                    Error::Input(format!("unknown level '{l}' for factor '{}'", f.name))
                })?);
            }
            let c = design.index(&idx);
            sum[c] += v;
            count[c] += 1;
        }
        let missing: Vec<String> = (0..design.cells())
            .filter(|&c| count[c] == 0)
            .map(|c| design.describe(&design.levels_of(c)))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingCells(missing));
        }
        let values = sum.iter().zip(&count).map(|(s, &n)| s / n as f64).collect();
        Self::new(design, values)
    }

    /// Reads a CSV with a header row. `factors` name the factor columns and
    /// `value` the response column. Levels are taken in order of first
    /// appearance unless `levels` fixes them for a factor.
    pub fn read_csv<R: Read>(
        reader: R,
        factors: &[&str],
        value: &str,
        levels: &HashMap<String, Vec<String>>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Input(format!("column '{name}' not found in header")))
        };
        let fcols = factors.iter().map(|f| col(f)).collect::<Result<Vec<_>>>()?;
        let vcol = col(value)?;

        let mut seen: Vec<Vec<String>> = vec![Vec::new(); factors.len()];
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let labels: Vec<String> = fcols
                .iter()
                .map(|&c| rec.get(c).unwrap_or("").to_string())
                .collect();
            let raw = rec.get(vcol).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::Input(format!("line {}: '{raw}' is not a number", line + 2)))?;
            for (s, l) in seen.iter_mut().zip(&labels) {
                if !s.contains(l) {
                    s.push(l.clone());
                }
            }
            rows.push((labels, v));
        }
        let design = Design::new(
            factors
                .iter()
                .zip(seen)
                .map(|(name, found)| Factor {
                    name: name.to_string(),
                    levels: levels.get(*name).cloned().unwrap_or(found),
                })
                .collect(),
        )?;
        Self::from_observations(design, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d432() -> Design {
        Design::new(vec![
            Factor::new("flavor", &["V", "R", "N", "S"]),
            Factor::new("buffer", &["0.5", "1", "2"]),
            Factor::new("policy", &["EPD", "SD"]),
        ])
        .unwrap()
    }

    #[test]
    fn dof_of_grid_design() {
        assert_eq!(d432().cells(), 24);
        assert_eq!(d432().residual_dof(), 6);
    }

    #[test]
    fn index_round_trip() {
        let d = d432();
        for c in 0..d.cells() {
            assert_eq!(d.index(&d.levels_of(c)), c);
        }
    }

    #[test]
    fn missing_cells_are_listed() {
        let d = Design::new(vec![
            Factor::new("a", &["x", "y"]),
            Factor::new("b", &["p", "q"]),
        ])
        .unwrap();
        let rows = vec![
            (vec!["x", "p"], 1.0),
            (vec!["y", "q"], 2.0),
            (vec!["x", "q"], 3.0),
        ];
        match Matrix::from_observations(d, &rows) {
            Err(Error::MissingCells(m)) => assert_eq!(m, vec!["a=y, b=p".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replicates_are_averaged() {
        let d = Design::new(vec![Factor::new("a", &["x", "y"])]).unwrap();
        let rows = vec![(vec!["x"], 1.0), (vec!["x"], 3.0), (vec!["y"], 5.0)];
        let m = Matrix::from_observations(d, &rows).unwrap();
        assert_eq!(m.values, vec![2.0, 5.0]);
    }

    #[test]
    fn read_csv_infers_levels() {
        let text = "a,b,y\nx,p,1\nx,q,2\ny,p,3\ny,q,4\n";
        let m = Matrix::read_csv(text.as_bytes(), &["b", "a"], "y", &HashMap::new()).unwrap();
        assert_eq!(m.design.factors[0].levels, vec!["p", "q"]);
        assert_eq!(m.values, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn read_csv_reports_bad_numbers() {
        let text = "a,y\nx,1\ny,oops\n";
        let err = Matrix::read_csv(text.as_bytes(), &["a"], "y", &HashMap::new()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn single_level_factor_rejected() {
        assert!(Design::new(vec![Factor::new("a", &["x"])]).is_err());
    }
}
