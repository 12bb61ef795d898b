//! UBR+ output port: a FIFO cell buffer with frame-level drop policies.
//!
//! Early Packet Discard drops every new frame once occupancy `X` exceeds
//! `R·K`. Selective Drop additionally requires the VC's own occupancy `X_i`
//! to exceed its fair share `Z·X/N_a`, where `N_a` counts VCs with at least
//! one buffered cell.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::atm::{self, Cell, VcId};
use crate::error::Error;
use crate::kernel::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropPolicy {
    Epd,
    Sd,
}

impl DropPolicy {
    pub const ALL: [DropPolicy; 2] = [DropPolicy::Epd, DropPolicy::Sd];

    pub fn label(self) -> &'static str {
        match self {
            DropPolicy::Epd => "EPD",
            DropPolicy::Sd => "SD",
        }
    }
}

impl fmt::Display for DropPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DropPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "EPD" => Ok(DropPolicy::Epd),
            "SD" => Ok(DropPolicy::Sd),
            _ => Err(Error::Config(format!("unknown drop policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortConfig {
    pub capacity_cells: u32,
    pub threshold_r: f64,
    pub threshold_z: f64,
    pub policy: DropPolicy,
    pub service_rate_bps: f64,
}

impl PortConfig {
    pub fn new(capacity_cells: u32, policy: DropPolicy, service_rate_bps: f64) -> Self {
        Self {
            capacity_cells,
            threshold_r: 0.8,
            threshold_z: 0.8,
            policy,
            service_rate_bps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    /// First cell of a frame rejected by the policy; the rest of the frame follows it.
    DropFrameStart,
    /// Buffer full; the remainder of the frame is discarded too.
    DropTailOverflow,
    /// Cell of a frame already being discarded.
    DropDiscarding,
}

impl Verdict {
    pub fn is_drop(self) -> bool {
        self != Verdict::Accept
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::DropFrameStart => "drop_frame_start",
            Verdict::DropTailOverflow => "drop_tail_overflow",
            Verdict::DropDiscarding => "drop_discarding",
        }
    }
}

/// The verdict together with the port state it was decided on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropDecision {
    pub verdict: Verdict,
    pub occupancy: u32,
    pub vc_occupancy: u32,
    pub active_vcs: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropRecord {
    pub time: SimTime,
    pub vc: VcId,
    pub decision: DropDecision,
}

#[derive(Debug, Clone, Copy, Default)]
struct VcState {
    occupancy: u32,
    mid_frame: bool,
    discarding: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PortCounters {
    pub cells_in: u64,
    pub cells_out: u64,
    pub cells_dropped: u64,
    pub frames_dropped_at_start: u64,
    pub tail_overflows: u64,
}

#[derive(Debug, Clone)]
pub struct SwitchPort {
    config: PortConfig,
    threshold_cells: u32,
    queue: VecDeque<Cell>,
    vcs: Vec<VcState>,
    active: u32,
    counters: PortCounters,
    max_occupancy: u32,
    log: Option<Vec<DropRecord>>,
}

impl SwitchPort {
    pub fn new(config: PortConfig, vc_count: usize) -> Self {
        let threshold_cells = (config.threshold_r * config.capacity_cells as f64).floor() as u32;
        Self {
            config,
            threshold_cells,
            queue: VecDeque::new(),
            vcs: vec![VcState::default(); vc_count],
            active: 0,
            counters: PortCounters::default(),
            max_occupancy: 0,
            log: None,
        }
    }

    /// Keep a record of every dropped cell.
    pub fn with_drop_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn config(&self) -> &PortConfig {
        &self.config
    }

    /// `R·K` rounded down to whole cells.
    pub fn threshold_cells(&self) -> u32 {
        self.threshold_cells
    }

    pub fn occupancy(&self) -> u32 {
        self.queue.len() as u32
    }

    pub fn vc_occupancy(&self, vc: VcId) -> u32 {
        self.vcs.get(vc as usize).map_or(0, |s| s.occupancy)
    }

    pub fn active_vc_count(&self) -> u32 {
        self.active
    }

    pub fn max_occupancy(&self) -> u32 {
        self.max_occupancy
    }

    pub fn counters(&self) -> PortCounters {
        self.counters
    }

    pub fn drop_log(&self) -> Option<&[DropRecord]> {
        self.log.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn cell_time(&self) -> SimTime {
        atm::cell_time(self.config.service_rate_bps)
    }

    /// `cells_in = cells_out + cells_dropped + X`.
    pub fn is_conserved(&self) -> bool {
        let c = self.counters;
        c.cells_in == c.cells_out + c.cells_dropped + self.queue.len() as u64
    }

    fn fair_share_exceeded(&self, x: u32, x_i: u32, n_a: u32) -> bool {
        if n_a == 0 {
            return false;
        }
        x_i as f64 > self.config.threshold_z * x as f64 / n_a as f64
    }

    pub fn enqueue_cell(&mut self, now: SimTime, mut cell: Cell) -> DropDecision {
        let idx = cell.vc as usize;
        if idx >= self.vcs.len() {
            self.vcs.resize(idx + 1, VcState::default());
        }
        self.counters.cells_in += 1;

        let x = self.queue.len() as u32;
        let n_a = self.active;
        let st = self.vcs[idx];
        let starts_frame = !st.mid_frame;
        let mut decision = DropDecision {
            verdict: Verdict::Accept,
            occupancy: x,
            vc_occupancy: st.occupancy,
            active_vcs: n_a,
        };

        let verdict = if st.discarding {
            Verdict::DropDiscarding
        } else if starts_frame
            && x > self.threshold_cells
            && self.policy_rejects(x, st.occupancy, n_a)
        {
            Verdict::DropFrameStart
        } else if x >= self.config.capacity_cells {
            Verdict::DropTailOverflow
        } else {
            Verdict::Accept
        };
        decision.verdict = verdict;

        let st = &mut self.vcs[idx];
        st.mid_frame = !cell.eom;
        match verdict {
            Verdict::Accept => {
                if st.occupancy == 0 {
                    self.active += 1;
                }
                st.occupancy += 1;
                cell.enqueue_time = now;
                self.queue.push_back(cell);
                self.max_occupancy = self.max_occupancy.max(self.queue.len() as u32);
            }
            _ => {
                st.discarding = !cell.eom;
                self.counters.cells_dropped += 1;
                match verdict {
                    Verdict::DropFrameStart => self.counters.frames_dropped_at_start += 1,
                    Verdict::DropTailOverflow => self.counters.tail_overflows += 1,
                    _ => {}
                }
                if let Some(log) = self.log.as_mut() {
                    log.push(DropRecord {
                        time: now,
                        vc: cell.vc,
                        decision,
                    });
                }
            }
        }
        decision
    }

    fn policy_rejects(&self, x: u32, x_i: u32, n_a: u32) -> bool {
        match self.config.policy {
            DropPolicy::Epd => true,
            DropPolicy::Sd => self.fair_share_exceeded(x, x_i, n_a),
        }
    }

    /// Removes the head-of-line cell for transmission.
    pub fn dequeue_cell(&mut self) -> Option<Cell> {
        let cell = self.queue.pop_front()?;
        let st = &mut self.vcs[cell.vc as usize];
        st.occupancy -= 1;
        if st.occupancy == 0 {
            self.active -= 1;
        }
        self.counters.cells_out += 1;
        Some(cell)
    }
}

/// Writes a drop log as CSV: `time,vc,verdict,X,X_i,N_a`.
pub fn write_drop_log<W: Write>(mut w: W, records: &[DropRecord]) -> io::Result<()> {
    writeln!(w, "time,vc,verdict,X,X_i,N_a")?;
    for r in records {
        writeln!(
            w,
            "{:.9},{},{},{},{},{}",
            r.time.as_secs_f64(),
            r.vc,
            r.decision.verdict.label(),
            r.decision.occupancy,
            r.decision.vc_occupancy,
            r.decision.active_vcs
        )?;
    }
    Ok(())
}

/// Checks a logged frame-start drop against the policy inequality, in exact
/// integer/rational arithmetic.
pub fn frame_drop_justified(
    policy: DropPolicy,
    capacity: u32,
    r: f64,
    z: f64,
    d: &DropDecision,
) -> bool {
    if d.verdict != Verdict::DropFrameStart {
        return true;
    }
    let above = d.occupancy as f64 > r * capacity as f64;
    match policy {
        DropPolicy::Epd => above,
        DropPolicy::Sd => {
            above
                && d.active_vcs > 0
                && d.vc_occupancy as f64 * d.active_vcs as f64 > z * d.occupancy as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(vc: VcId, frame: u64, frame_cells: u32, eom: bool) -> Cell {
        Cell {
            vc,
            frame,
            frame_cells,
            eom,
            enqueue_time: SimTime::ZERO,
        }
    }

    /// Fills the port with single-cell frames on the given VCs.
    fn fill(port: &mut SwitchPort, per_vc: &[(VcId, u32)]) {
        let mut f = 1000;
        for &(vc, n) in per_vc {
            for _ in 0..n {
                f += 1;
                assert_eq!(
                    port.enqueue_cell(SimTime::ZERO, cell(vc, f, 1, true))
                        .verdict,
                    Verdict::Accept
                );
            }
        }
    }

    fn loose_port(policy: DropPolicy, k: u32) -> SwitchPort {
        SwitchPort::new(PortConfig::new(k, policy, 45e6), 8)
    }

    #[test]
    fn epd_drops_new_frame_above_threshold() {
        // Fill with R disabled so we can reach X=801, then switch the threshold back on.
        let mut port = loose_port(DropPolicy::Epd, 1000);
        port.threshold_cells = u32::MAX;
        fill(&mut port, &[(0, 801)]);
        port.threshold_cells = 800;
        let d = port.enqueue_cell(SimTime::ZERO, cell(1, 1, 2, false));
        assert_eq!(d.verdict, Verdict::DropFrameStart);
        let d = port.enqueue_cell(SimTime::ZERO, cell(1, 1, 2, true));
        assert_eq!(d.verdict, Verdict::DropDiscarding);
        assert!(port.is_conserved());
    }

    #[test]
    fn epd_threshold_is_strict() {
        let mut port = loose_port(DropPolicy::Epd, 1000);
        fill(&mut port, &[(0, 800)]);
        let d = port.enqueue_cell(SimTime::ZERO, cell(1, 1, 1, true));
        assert_eq!(d.verdict, Verdict::Accept);
    }

    #[test]
    fn sd_drops_vc_above_fair_share() {
        let mut port = loose_port(DropPolicy::Sd, 1000);
        fill(&mut port, &[(0, 200), (1, 300), (2, 300), (3, 100)]);
        assert_eq!(port.occupancy(), 900);
        assert_eq!(port.active_vc_count(), 4);
        // fair share = 0.8 * 900 / 4 = 180
        let d = port.enqueue_cell(SimTime::ZERO, cell(0, 1, 3, false));
        assert_eq!(d.verdict, Verdict::DropFrameStart);
        assert_eq!((d.occupancy, d.vc_occupancy, d.active_vcs), (900, 200, 4));
    }

    #[test]
    fn sd_accepts_under_represented_vc() {
        let mut port = loose_port(DropPolicy::Sd, 1000);
        fill(&mut port, &[(0, 200), (1, 300), (2, 300), (3, 100)]);
        let d = port.enqueue_cell(SimTime::ZERO, cell(3, 1, 3, false));
        assert_eq!(d.verdict, Verdict::Accept);
        // Mid-frame cells follow the admitted frame.
        assert_eq!(
            port.enqueue_cell(SimTime::ZERO, cell(3, 1, 3, false))
                .verdict,
            Verdict::Accept
        );
        assert_eq!(
            port.enqueue_cell(SimTime::ZERO, cell(3, 1, 3, true))
                .verdict,
            Verdict::Accept
        );
    }

    #[test]
    fn sd_single_vc_uses_z_times_x() {
        let mut port = loose_port(DropPolicy::Sd, 100);
        fill(&mut port, &[(0, 81)]);
        // X_i = 81 > 0.8 * 81
        assert_eq!(
            port.enqueue_cell(SimTime::ZERO, cell(0, 1, 1, true))
                .verdict,
            Verdict::DropFrameStart
        );
        // A VC with nothing buffered is always under its share.
        assert_eq!(
            port.enqueue_cell(SimTime::ZERO, cell(1, 2, 1, true))
                .verdict,
            Verdict::Accept
        );
    }

    #[test]
    fn tail_overflow_discards_rest_of_frame() {
        let mut port = loose_port(DropPolicy::Epd, 10);
        port.threshold_cells = u32::MAX;
        fill(&mut port, &[(0, 8)]);
        let frame = [
            cell(1, 5, 4, false),
            cell(1, 5, 4, false),
            cell(1, 5, 4, false),
            cell(1, 5, 4, true),
        ];
        let v: Vec<Verdict> = frame
            .iter()
            .map(|c| port.enqueue_cell(SimTime::ZERO, *c).verdict)
            .collect();
        assert_eq!(
            v,
            vec![
                Verdict::Accept,
                Verdict::Accept,
                Verdict::DropTailOverflow,
                Verdict::DropDiscarding
            ]
        );
        // The next frame on that VC starts clean once space frees up.
        port.dequeue_cell();
        assert_eq!(
            port.enqueue_cell(SimTime::ZERO, cell(1, 6, 1, true))
                .verdict,
            Verdict::Accept
        );
        assert!(port.is_conserved());
    }

    #[test]
    fn dequeue_is_fifo_and_updates_counts() {
        let mut port = loose_port(DropPolicy::Epd, 100);
        fill(&mut port, &[(0, 3), (2, 1)]);
        assert_eq!(port.active_vc_count(), 2);
        let order: Vec<VcId> = std::iter::from_fn(|| port.dequeue_cell())
            .map(|c| c.vc)
            .collect();
        assert_eq!(order, vec![0, 0, 0, 2]);
        assert_eq!(port.active_vc_count(), 0);
        assert!(port.is_empty());
    }

    #[test]
    fn active_count_tracks_last_cell() {
        let mut port = loose_port(DropPolicy::Epd, 100);
        assert_eq!(port.active_vc_count(), 0);
        fill(&mut port, &[(0, 3), (2, 1)]);
        assert_eq!(port.active_vc_count(), 2);
        port.dequeue_cell();
        port.dequeue_cell();
        port.dequeue_cell();
        assert_eq!(port.active_vc_count(), 1);
    }

    #[test]
    fn cell_time_at_45mbps() {
        let port = loose_port(DropPolicy::Epd, 10);
        let t = port.cell_time().as_secs_f64();
        assert!((t - 424.0 / 45e6).abs() < 1e-9);
    }

    #[test]
    fn drop_log_audit() {
        let mut port =
            SwitchPort::new(PortConfig::new(50, DropPolicy::Sd, 45e6), 4).with_drop_log();
        let mut f = 0;
        for round in 0..40u64 {
            for vc in 0..4u32 {
                let n = 1 + ((round as u32 + vc) % 5);
                f += 1;
                for i in 0..n {
                    port.enqueue_cell(SimTime::ZERO, cell(vc, f, n, i + 1 == n));
                }
            }
            if round % 3 == 0 {
                for _ in 0..5 {
                    port.dequeue_cell();
                }
            }
        }
        let log = port.drop_log().unwrap();
        assert!(log
            .iter()
            .any(|r| r.decision.verdict == Verdict::DropFrameStart));
        for r in log {
            assert!(frame_drop_justified(
                DropPolicy::Sd,
                50,
                0.8,
                0.8,
                &r.decision
            ));
        }
        let mut buf = Vec::new();
        write_drop_log(&mut buf, log).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("time,vc,verdict,X,X_i,N_a\n"));
    }
}
