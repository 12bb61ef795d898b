//! Runs factorial grids across worker threads and reads and writes the
//! results file.
//!
//! Results CSV columns: `delay_class, flavor, policy, buffer, efficiency,
//! fairness, seed, error`. `error` is empty for a completed run; a failed run
//! leaves both metrics empty and describes the failure there.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use ubrsim::network::{self, factorial_grid, DelayClass, RunSpec, Treatment};

use crate::config::Config;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub delay_class: String,
    pub flavor: String,
    pub policy: String,
    pub buffer: String,
    pub efficiency: Option<f64>,
    pub fairness: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub error: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub delay_class: DelayClass,
    pub treatment: Treatment,
    pub seed: u64,
}

/// Class-major, then seed, then grid cell.
pub fn jobs(classes: &[DelayClass], seeds: &[u64]) -> Vec<Job> {
    let grid = factorial_grid();
    let mut v = Vec::with_capacity(classes.len() * seeds.len() * grid.len());
    for &delay_class in classes {
        for &seed in seeds {
            v.extend(grid.iter().map(|&treatment| Job {
                delay_class,
                treatment,
                seed,
            }));
        }
    }
    v
}

pub fn run_job(cfg: &Config, job: &Job) -> ResultRow {
    let t = job.treatment;
    let mut row = ResultRow {
        delay_class: job.delay_class.label().into(),
        flavor: t.flavor.label().into(),
        policy: t.policy.label().into(),
        buffer: t.buffer.label().into(),
        efficiency: None,
        fairness: None,
        seed: job.seed,
        error: String::new(),
    };
    let spec = RunSpec {
        scenario: cfg.scenario(job.delay_class).clone(),
        treatment: t,
        seed: job.seed,
        log_drops: false,
    };
    match network::run(&spec) {
        Err(e) => row.error = e.to_string(),
        Ok(out) if !(out.forward.conserved && out.reverse.conserved) => {
            row.error = "cell conservation violated at a bottleneck port".into();
        }
        Ok(out) if out.result.efficiency > 1.0 + 1e-9 => {
            row.error = format!("efficiency {} exceeds 1", out.result.efficiency);
        }
        Ok(out) => {
            row.efficiency = Some(out.result.efficiency);
            row.fairness = Some(out.result.fairness);
        }
    }
    row
}

/// Runs every job on up to `workers` threads. Rows come back in job order
/// whatever the completion order.
pub fn execute(
    cfg: &Config,
    jobs: &[Job],
    workers: usize,
    mut progress: impl FnMut(usize, &ResultRow),
) -> Vec<ResultRow> {
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut rows: Vec<Option<ResultRow>> = vec![None; jobs.len()];
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                if tx.send((i, run_job(cfg, job))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, row) in rx {
            progress(i, &row);
            rows[i] = Some(row);
        }
    });
    rows.into_iter()
        .map(|r| r.expect("every job reports"))
        .collect()
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}
