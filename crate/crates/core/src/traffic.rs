//! WWW workload: batched, pipelined client requests and infinitely fast
//! servers whose response sizes follow a five-class file-size mix.

use crate::error::{Error, Result};
use crate::kernel::{RngStream, SimTime, StreamPurpose};

pub const KB: u64 = 1_000;
pub const MB: u64 = 1_000_000;

/// Number of discrete sizes in each class.
pub const SIZES_PER_CLASS: u32 = 9;

/// One row of the file-size class table. Sizes in the class are
/// `unit_bytes × index` for `index` in `1..=9`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FileClass {
    pub class_id: u8,
    pub unit_bytes: u64,
    pub frequency: f64,
}

impl FileClass {
    pub fn size_range(&self) -> (u64, u64) {
        (self.unit_bytes, self.unit_bytes * SIZES_PER_CLASS as u64)
    }

    pub fn sizes(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=SIZES_PER_CLASS as u64).map(move |i| i * self.unit_bytes)
    }
}

pub fn default_classes() -> Vec<FileClass> {
    [
        (100, 0.20),
        (KB, 0.28),
        (10 * KB, 0.40),
        (100 * KB, 0.112),
        (MB, 0.008),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(unit_bytes, frequency))| FileClass {
        class_id: i as u8,
        unit_bytes,
        frequency,
    })
    .collect()
}

/// How a Poisson draw outside `[lo, hi]` is brought into range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangeRule {
    /// Move it to the nearest bound. Keeps the mean of Poisson(5) on
    /// `[1, 9]` at 4.95.
    #[default]
    Clamp,
    /// Draw again. Conditions the distribution on the range (mean 4.85 for Poisson(5) on `[1, 9]`).
    Resample,
}

impl RangeRule {
    pub fn draw(self, rng: &mut RngStream, mean: f64, lo: u32, hi: u32) -> Result<u32> {
        match self {
            RangeRule::Clamp => rng.clamped_poisson(mean, lo, hi),
            RangeRule::Resample => rng.truncated_poisson(mean, lo, hi),
        }
    }

    /// Expected value of the ranged draw.
    pub fn mean(self, mean: f64, lo: u32, hi: u32) -> f64 {
        let mut p = (-mean).exp();
        let (mut inside, mut inside_mass, mut below, mut above) = (0.0, 0.0, 0.0, 0.0);
        let mut k = 0u32;
        let mut total = 0.0;
        while total < 1.0 - 1e-15 && k < 2_000 {
            if k > 0 {
                p *= mean / k as f64;
            }
            total += p;
            if k < lo {
                below += p;
            } else if k > hi {
                above += p;
            } else {
                inside += k as f64 * p;
                inside_mass += p;
            }
            k += 1;
        }
        above += (1.0 - total).max(0.0);
        match self {
            RangeRule::Clamp => inside + below * lo as f64 + above * hi as f64,
            RangeRule::Resample => inside / inside_mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficParams {
    pub classes: Vec<FileClass>,
    pub batch_period: SimTime,
    pub gap_min_s: f64,
    pub gap_max_s: f64,
    pub request_bytes: u32,
    pub batch_mean: f64,
    pub batch_min: u32,
    pub batch_max: u32,
    pub size_index_mean: f64,
    /// Start each client's first batch at a random offset within one period.
    pub phase_jitter: bool,
    pub range_rule: RangeRule,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self {
            classes: default_classes(),
            batch_period: SimTime::from_secs(10),
            gap_min_s: 0.1,
            gap_max_s: 0.5,
            request_bytes: 128,
            batch_mean: 5.0,
            batch_min: 1,
            batch_max: 9,
            size_index_mean: 5.0,
            phase_jitter: false,
            range_rule: RangeRule::default(),
        }
    }
}

impl TrafficParams {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("traffic: class table is empty".into()));
        }
        let total: f64 = self.classes.iter().map(|c| c.frequency).sum();
        if (total - 1.0).abs() > 1e-9 || self.classes.iter().any(|c| c.frequency < 0.0) {
            return Err(Error::Config(format!(
                "traffic: class frequencies must be non-negative and sum to 1 (sum = {total})"
            )));
        }
        if self.classes.iter().any(|c| c.unit_bytes == 0) {
            return Err(Error::Config(
                "traffic: class unit size must be positive".into(),
            ));
        }
        if !(self.gap_min_s >= 0.0 && self.gap_min_s < self.gap_max_s) {
            return Err(Error::Config("traffic: need 0 <= gap_min < gap_max".into()));
        }
        if self.batch_period == SimTime::ZERO {
            return Err(Error::Config(
                "traffic: batch period must be positive".into(),
            ));
        }
        if self.request_bytes == 0 {
            return Err(Error::Config(
                "traffic: request size must be positive".into(),
            ));
        }
        let batch_ok = self.batch_min >= 1
            && self.batch_min <= self.batch_max
            && self.batch_mean >= self.batch_min as f64
            && self.batch_mean <= self.batch_max as f64;
        if !batch_ok {
            return Err(Error::Config(
                "traffic: need 1 <= batch_min <= batch_mean <= batch_max".into(),
            ));
        }
        if !(1.0..=SIZES_PER_CLASS as f64).contains(&self.size_index_mean) {
            return Err(Error::Config(
                "traffic: size index mean must lie in [1, 9]".into(),
            ));
        }
        Ok(())
    }

    /// Expected response size in bytes: Σ frequency × unit × E[index].
    pub fn mean_response_bytes(&self) -> f64 {
        let e_index = self
            .range_rule
            .mean(self.size_index_mean, 1, SIZES_PER_CLASS);
        self.classes
            .iter()
            .map(|c| c.frequency * c.unit_bytes as f64 * e_index)
            .sum()
    }
}

/// Maps a uniform draw to a class by cumulative access frequency.
pub fn classify_request(classes: &[FileClass], u: f64) -> &FileClass {
    let mut acc = 0.0;
    for c in classes {
        acc += c.frequency;
        if u < acc {
            return c;
        }
    }
    classes.last().expect("non-empty class table")
}

/// Size of the `index`-th (1-based) file in `class`.
pub fn sample_file_size(class: &FileClass, index: u32) -> u64 {
    debug_assert!((1..=SIZES_PER_CLASS).contains(&index));
    class.unit_bytes * index as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FileRequest {
    pub request_bytes: u32,
    pub response_bytes: u64,
    pub class_id: u8,
}

/// Client side: one batch of pipelined requests per period.
#[derive(Debug, Clone)]
pub struct ClientSession {
    pub client_id: u32,
    pub batch_size: u32,
    pub requests_sent: u64,
    count_rng: RngStream,
    gap_rng: RngStream,
    phase_rng: RngStream,
}

impl ClientSession {
    pub fn new(seed: u64, client_id: u32) -> Self {
        let idx = client_id as u64;
        Self {
            client_id,
            batch_size: 0,
            requests_sent: 0,
            count_rng: RngStream::new(seed, StreamPurpose::RequestCount, idx),
            gap_rng: RngStream::new(seed, StreamPurpose::InterRequestGap, idx),
            phase_rng: RngStream::new(seed, StreamPurpose::Phase, idx),
        }
    }

    /// Time of the first batch.
    pub fn first_batch_start(&mut self, params: &TrafficParams) -> SimTime {
        if params.phase_jitter {
            let period = params.batch_period.as_secs_f64();
            SimTime::from_secs_f64(self.phase_rng.uniform(0.0, period).unwrap_or(0.0))
        } else {
            SimTime::ZERO
        }
    }

    /// Draws a batch size and returns the request times of the batch
    /// beginning at `start`.
    pub fn batch_schedule(
        &mut self,
        params: &TrafficParams,
        start: SimTime,
    ) -> Result<Vec<SimTime>> {
        self.batch_size = params.range_rule.draw(
            &mut self.count_rng,
            params.batch_mean,
            params.batch_min,
            params.batch_max,
        )?;
        let mut times = Vec::with_capacity(self.batch_size as usize);
        let mut t = start;
        for i in 0..self.batch_size {
            if i > 0 {
                t += SimTime::from_secs_f64(
                    self.gap_rng.uniform(params.gap_min_s, params.gap_max_s)?,
                );
            }
            times.push(t);
        }
        Ok(times)
    }
}

/// Server side: zero service time, response size drawn per request.
#[derive(Debug, Clone)]
pub struct WwwServer {
    class_rng: RngStream,
    size_rng: RngStream,
    pub requests_served: u64,
    pub bytes_scheduled: u64,
}

impl WwwServer {
    pub fn new(seed: u64, server_id: u32) -> Self {
        let idx = server_id as u64;
        Self {
            class_rng: RngStream::new(seed, StreamPurpose::TrafficClass, idx),
            size_rng: RngStream::new(seed, StreamPurpose::FileSize, idx),
            requests_served: 0,
            bytes_scheduled: 0,
        }
    }

    pub fn respond(&mut self, params: &TrafficParams) -> Result<FileRequest> {
        let class = *classify_request(&params.classes, self.class_rng.unit());
        let index = params.range_rule.draw(
            &mut self.size_rng,
            params.size_index_mean,
            1,
            SIZES_PER_CLASS,
        )?;
        let response_bytes = sample_file_size(&class, index);
        self.requests_served += 1;
        self.bytes_scheduled += response_bytes;
        Ok(FileRequest {
            request_bytes: params.request_bytes,
            response_bytes,
            class_id: class.class_id,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OfferedLoad {
    pub requests: u64,
    pub response_bytes: u64,
    pub duration_s: f64,
}

impl OfferedLoad {
    pub fn mbps(&self) -> f64 {
        self.response_bytes as f64 * 8.0 / self.duration_s / 1e6
    }
}

/// Runs the workload without a network: every request issued before
/// `duration` is answered instantly.
pub fn generate_offered_load(
    params: &TrafficParams,
    clients: u32,
    duration: SimTime,
    seed: u64,
) -> Result<OfferedLoad> {
    params.validate()?;
    let mut load = OfferedLoad {
        duration_s: duration.as_secs_f64(),
        ..Default::default()
    };
    for id in 0..clients {
        let mut client = ClientSession::new(seed, id);
        let mut server = WwwServer::new(seed, id);
        let mut start = client.first_batch_start(params);
        while start < duration {
            for t in client.batch_schedule(params, start)? {
                if t < duration {
                    let r = server.respond(params)?;
                    load.requests += 1;
                    load.response_bytes += r.response_bytes;
                }
            }
            start += params.batch_period;
        }
    }
    Ok(load)
}
