//! Discrete-event engine: virtual clock, ordered event queue and seeded
//! random streams.
//!
//! Time is kept as integer nanoseconds so that event ordering and
//! tie-breaking are exact and identical on every platform. Events that fire
//! at the same instant are delivered in insertion order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A point in (or span of) simulated time, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    /// Rounds to the nearest nanosecond. Negative and NaN inputs map to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if !(s > 0.0) {
            return SimTime::ZERO;
        }
        SimTime((s * 1e9).round() as u64)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    /// Multiplies a span by an integer factor, saturating at [`SimTime::MAX`].
    pub fn saturating_mul(self, k: u64) -> SimTime {
        SimTime(self.0.saturating_mul(k))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs_f64())
    }
}

struct Entry<E> {
    fire_at: SimTime,
    sequence: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.sequence == other.sequence
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; reverse so the earliest (fire_at, sequence) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

/// Event queue plus the virtual clock.
pub struct Scheduler<E> {
    now: SimTime,
    next_sequence: u64,
    heap: BinaryHeap<Entry<E>>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Self {
            now: SimTime::ZERO,
            next_sequence: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    /// Queues `event` to fire at `fire_at`.
    ///
    /// Scheduling in the past is a logic error in the model and aborts the run.
    pub fn schedule(&mut self, fire_at: SimTime, event: E) {
        assert!(
            fire_at >= self.now,
            "event scheduled in the past: fire_at={} now={}",
            fire_at,
            self.now
        );
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Entry {
            fire_at,
            sequence,
            event,
        });
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) {
        let at = self.now + delay;
        self.schedule(at, event);
    }

    fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.fire_at)
    }

    fn pop(&mut self) -> Option<(SimTime, E)> {
        let entry = self.heap.pop()?;
        debug_assert!(entry.fire_at >= self.now);
        self.now = entry.fire_at;
        Some((entry.fire_at, entry.event))
    }
}

/// Cell-level counters a model reports at the end of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellCounts {
    pub forwarded: u64,
    pub dropped: u64,
}

/// Summary of a completed `run_until` call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events: u64,
    pub end_time: SimTime,
    pub cells_forwarded: u64,
    pub cells_dropped: u64,
}

/// Something driven by the event loop.
pub trait Model {
    type Event;

    fn handle(&mut self, sched: &mut Scheduler<Self::Event>, event: Self::Event);

    fn cell_counts(&self) -> CellCounts {
        CellCounts::default()
    }
}

/// A model together with its event queue.
pub struct Simulation<M: Model> {
    pub model: M,
    pub sched: Scheduler<M::Event>,
    events: u64,
}

impl<M: Model> Simulation<M> {
    pub fn new(model: M) -> Self {
        Self {
            model,
            sched: Scheduler::new(),
            events: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    /// Processes every event with `fire_at <= end`, then advances the clock to `end`.
    pub fn run_until(&mut self, end: SimTime) -> RunStats {
        while let Some(t) = self.sched.peek_time() {
            if t > end {
                break;
            }
            let (_, ev) = self.sched.pop().expect("peeked");
            self.events += 1;
            self.model.handle(&mut self.sched, ev);
        }
        if end > self.sched.now {
            self.sched.now = end;
        }
        let counts = self.model.cell_counts();
        RunStats {
            events: self.events,
            end_time: self.sched.now,
            cells_forwarded: counts.forwarded,
            cells_dropped: counts.dropped,
        }
    }
}

/// What a random stream is used for. Each purpose gets an independent stream
/// so adding draws for one purpose never perturbs another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    TrafficClass,
    FileSize,
    RequestCount,
    InterRequestGap,
    Phase,
    Test,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::TrafficClass => 1,
            StreamPurpose::FileSize => 2,
            StreamPurpose::RequestCount => 3,
            StreamPurpose::InterRequestGap => 4,
            StreamPurpose::Phase => 5,
            StreamPurpose::Test => 99,
        }
    }
}

/// SplitMix64 finalizer, used to derive stream and run seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a parent seed with a child index into a new seed.
pub fn derive_seed(parent: u64, child: u64) -> u64 {
    mix64(mix64(parent) ^ child.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// A reproducible pseudo-random stream identified by `(seed, purpose, index)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    purpose: StreamPurpose,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, purpose: StreamPurpose, index: u64) -> Self {
        let key = derive_seed(derive_seed(seed, purpose.tag()), index);
        let mut bytes = [0u8; 32];
        let mut s = key;
        for chunk in bytes.chunks_exact_mut(8) {
            s = mix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        Self {
            seed,
            purpose,
            index,
            rng: ChaCha8Rng::from_seed(bytes),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn purpose(&self) -> StreamPurpose {
        self.purpose
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Uniform draw on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!(
                "uniform bounds must satisfy lo < hi (got lo={lo}, hi={hi})"
            )));
        }
        let v = lo + (hi - lo) * self.unit();
        // Guard against rounding up to `hi`.
        Ok(if v >= hi { lo } else { v })
    }

    /// Poisson(`mean`) conditioned on `[lo, hi]`; out-of-range draws are resampled.
    pub fn truncated_poisson(&mut self, mean: f64, lo: u32, hi: u32) -> Result<u32> {
        if lo > hi || !(mean >= lo as f64 && mean <= hi as f64) || mean > 700.0 {
            return Err(Error::Config(format!(
                "truncated Poisson needs lo <= mean <= hi and mean <= 700 (got mean={mean}, lo={lo}, hi={hi})"
            )));
        }
        if lo == hi {
            return Ok(lo);
        }
        loop {
            let k = self.poisson(mean);
            if (lo..=hi).contains(&k) {
                return Ok(k);
            }
        }
    }

    /// Poisson(`mean`) with out-of-range draws moved to the nearest bound.
    pub fn clamped_poisson(&mut self, mean: f64, lo: u32, hi: u32) -> Result<u32> {
        if lo > hi || !(mean >= lo as f64 && mean <= hi as f64) || mean > 700.0 {
            return Err(Error::Config(format!(
                "clamped Poisson needs lo <= mean <= hi and mean <= 700 (got mean={mean}, lo={lo}, hi={hi})"
            )));
        }
        Ok(self.poisson(mean).clamp(lo, hi))
    }

    // Inversion by sequential search; fine for the small means used here.
    fn poisson(&mut self, mean: f64) -> u32 {
        let u = self.unit();
        let mut k = 0u32;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u >= cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 && cdf <= u {
                // Tail exhausted numerically.
                break;
            }
        }
        k
    }
}
