//! TCP sender and receiver with Vanilla, Reno, NewReno and SACK congestion
//! control.
//!
//! Sequence numbers are 64-bit byte offsets starting at zero. Connections are
//! considered established at time zero. Segment boundaries are fixed at first
//! transmission, so a retransmission always resends the same byte range.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::error::Error;
use crate::kernel::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    Vanilla,
    Reno,
    NewReno,
    Sack,
}

impl Flavor {
    pub const ALL: [Flavor; 4] = [Flavor::Vanilla, Flavor::Reno, Flavor::NewReno, Flavor::Sack];

    pub fn label(self) -> &'static str {
        match self {
            Flavor::Vanilla => "Vanilla",
            Flavor::Reno => "Reno",
            Flavor::NewReno => "NewReno",
            Flavor::Sack => "SACK",
        }
    }

    pub fn uses_sack(self) -> bool {
        self == Flavor::Sack
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(Flavor::Vanilla),
            "reno" | "frr" => Ok(Flavor::Reno),
            "newreno" => Ok(Flavor::NewReno),
            "sack" => Ok(Flavor::Sack),
            _ => Err(Error::Config(format!("unknown TCP flavor {s:?}"))),
        }
    }
}

/// Round-trip delay × bandwidth, in bytes.
pub fn initial_ssthresh(rtt_s: f64, bandwidth_bps: f64) -> u64 {
    (rtt_s * bandwidth_bps / 8.0).round() as u64
}

/// Largest window a receiver can advertise with a 16-bit field and the given scale.
pub fn max_advertised_window(window_scale: u8) -> u64 {
    65_535u64 << window_scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcpParams {
    pub mss: u32,
    pub timer_granularity: SimTime,
    /// Receive buffer; advertised as-is up to the scaled 16-bit limit.
    pub rcv_buffer: u64,
    pub window_scale: u8,
    pub initial_ssthresh: u64,
    pub initial_cwnd_segments: u32,
    pub initial_rto: SimTime,
    pub min_rto_granules: u32,
    pub max_rto: SimTime,
    pub dupack_threshold: u32,
}

impl TcpParams {
    pub fn new(mss: u32, rcv_buffer: u64, window_scale: u8, initial_ssthresh: u64) -> Self {
        Self {
            mss,
            timer_granularity: SimTime::from_millis(100),
            rcv_buffer,
            window_scale,
            initial_ssthresh,
            initial_cwnd_segments: 1,
            initial_rto: SimTime::from_secs(3),
            min_rto_granules: 2,
            max_rto: SimTime::from_secs(64),
            dupack_threshold: 3,
        }
    }

    pub fn rcv_wnd_max(&self) -> u64 {
        self.rcv_buffer
            .min(max_advertised_window(self.window_scale))
    }

    /// The window actually carried in ACKs, truncated to the scale unit.
    pub fn advertised_window(&self) -> u64 {
        (self.rcv_wnd_max() >> self.window_scale) << self.window_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SackBlock {
    pub left: u64,
    pub right: u64,
}

pub const MAX_SACK_BLOCKS: usize = 3;

/// A pure acknowledgment travelling back to the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ack {
    pub ack: u64,
    pub window: u64,
    blocks: [SackBlock; MAX_SACK_BLOCKS],
    block_count: u8,
}

impl Ack {
    pub fn new(ack: u64, window: u64) -> Self {
        Self {
            ack,
            window,
            blocks: [SackBlock::default(); MAX_SACK_BLOCKS],
            block_count: 0,
        }
    }

    pub fn with_blocks(mut self, blocks: &[SackBlock]) -> Self {
        let n = blocks.len().min(MAX_SACK_BLOCKS);
        self.blocks[..n].copy_from_slice(&blocks[..n]);
        self.block_count = n as u8;
        self
    }

    pub fn sack_blocks(&self) -> &[SackBlock] {
        &self.blocks[..self.block_count as usize]
    }
}

/// A data segment handed to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub seq: u64,
    pub len: u32,
    pub retransmission: bool,
}

impl Segment {
    pub fn end(&self) -> u64 {
        self.seq + self.len as u64
    }
}

#[derive(Debug, Clone, Copy)]
struct SentSeg {
    start: u64,
    len: u32,
    sacked: bool,
    lost: bool,
    retransmitted: bool,
}

impl SentSeg {
    fn end(&self) -> u64 {
        self.start + self.len as u64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub segments_sent: u64,
    pub bytes_sent: u64,
    pub retransmissions: u64,
    pub timeouts: u64,
    pub fast_retransmits: u64,
    pub partial_acks: u64,
    pub invalid_acks: u64,
    /// Number of times the congestion window was reduced (timeouts and fast retransmits).
    pub window_reductions: u64,
    /// New-data transmissions that would have exceeded the usable window.
    pub window_violations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub event: &'static str,
    pub cwnd: u64,
    pub ssthresh: u64,
    pub snd_una: u64,
}

pub fn write_trace<W: Write>(mut w: W, records: &[TraceRecord]) -> io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{:.6} {} {} {} {}",
            r.time.as_secs_f64(),
            r.event,
            r.cwnd,
            r.ssthresh,
            r.snd_una
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TcpSender {
    params: TcpParams,
    flavor: Flavor,
    snd_una: u64,
    /// Next byte to send; below `snd_max` only while going back after a timeout.
    snd_nxt: u64,
    snd_max: u64,
    app_end: u64,
    segs: VecDeque<SentSeg>,
    cwnd: u64,
    ssthresh: u64,
    peer_window: u64,
    dupacks: u32,
    in_recovery: bool,
    recover: u64,
    /// Highest sequence sent when the last timeout fired; fast retransmit is
    /// suppressed for duplicate ACKs below it.
    timeout_high: Option<u64>,
    srtt: Option<f64>,
    rttvar: f64,
    backoff: u32,
    timed: Option<(u64, SimTime)>,
    rto_deadline: Option<SimTime>,
    stats: SenderStats,
    trace: Option<Vec<TraceRecord>>,
}

impl TcpSender {
    pub fn new(params: TcpParams, flavor: Flavor) -> Self {
        let cwnd = params.mss as u64 * params.initial_cwnd_segments.max(1) as u64;
        let ssthresh = params.initial_ssthresh.max(2 * params.mss as u64);
        let peer_window = params.advertised_window();
        Self {
            params,
            flavor,
            snd_una: 0,
            snd_nxt: 0,
            snd_max: 0,
            app_end: 0,
            segs: VecDeque::new(),
            cwnd,
            ssthresh,
            peer_window,
            dupacks: 0,
            in_recovery: false,
            recover: 0,
            timeout_high: None,
            srtt: None,
            rttvar: 0.0,
            backoff: 0,
            timed: None,
            rto_deadline: None,
            stats: SenderStats::default(),
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn params(&self) -> &TcpParams {
        &self.params
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> u64 {
        self.ssthresh
    }

    pub fn snd_una(&self) -> u64 {
        self.snd_una
    }

    pub fn snd_max(&self) -> u64 {
        self.snd_max
    }

    pub fn app_end(&self) -> u64 {
        self.app_end
    }

    pub fn in_recovery(&self) -> bool {
        self.in_recovery
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    pub fn rto_deadline(&self) -> Option<SimTime> {
        self.rto_deadline
    }

    /// Bytes sent but not yet cumulatively acknowledged.
    pub fn flight_size(&self) -> u64 {
        self.snd_max - self.snd_una
    }

    /// Current retransmission timeout including backoff.
    pub fn rto(&self) -> SimTime {
        let g = self.params.timer_granularity.as_nanos().max(1);
        let base = match self.srtt {
            None => self.params.initial_rto.as_nanos(),
            Some(srtt) => {
                let raw =
                    srtt + (4.0 * self.rttvar).max(self.params.timer_granularity.as_secs_f64());
                let ns = (raw * 1e9).ceil() as u64;
                ns.div_ceil(g) * g
            }
        };
        let min = g * self.params.min_rto_granules as u64;
        let rto = base.max(min);
        let backed = rto.saturating_mul(1u64 << self.backoff.min(16));
        SimTime::from_nanos(backed.min(self.params.max_rto.as_nanos()))
    }

    /// SACK's estimate of bytes in the network.
    pub fn pipe(&self) -> u64 {
        self.segs
            .iter()
            .filter(|s| !s.sacked)
            .map(|s| {
                let mut p = 0;
                if !s.lost {
                    p += s.len as u64;
                }
                if s.retransmitted {
                    p += s.len as u64;
                }
                p
            })
            .sum()
    }

    fn record(&mut self, now: SimTime, event: &'static str) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord {
                time: now,
                event,
                cwnd: self.cwnd,
                ssthresh: self.ssthresh,
                snd_una: self.snd_una,
            });
        }
    }

    fn mss(&self) -> u64 {
        self.params.mss as u64
    }

    fn cwnd_cap(&self) -> u64 {
        max_advertised_window(self.params.window_scale)
    }

    fn seg_index(&self, seq: u64) -> Option<usize> {
        self.segs.binary_search_by(|s| s.start.cmp(&seq)).ok()
    }

    fn arm_timer(&mut self, now: SimTime) {
        if self.rto_deadline.is_none() {
            self.rto_deadline = Some(now + self.rto());
        }
    }

    fn restart_timer(&mut self, now: SimTime) {
        self.rto_deadline = if self.snd_max > self.snd_una {
            Some(now + self.rto())
        } else {
            None
        };
    }

    fn emit(&mut self, now: SimTime, seg: Segment, out: &mut Vec<Segment>) {
        self.stats.segments_sent += 1;
        self.stats.bytes_sent += seg.len as u64;
        if seg.retransmission {
            self.stats.retransmissions += 1;
            // Karn: never time a retransmitted range.
            self.timed = None;
        } else if self.timed.is_none() {
            self.timed = Some((seg.end(), now));
        }
        self.arm_timer(now);
        out.push(seg);
    }

    fn retransmit_at(&mut self, now: SimTime, seq: u64, out: &mut Vec<Segment>) {
        if let Some(i) = self.seg_index(seq) {
            let s = &mut self.segs[i];
            s.retransmitted = true;
            let seg = Segment {
                seq: s.start,
                len: s.len,
                retransmission: true,
            };
            self.emit(now, seg, out);
        }
    }

    /// Application write of `bytes` more bytes.
    pub fn write(&mut self, now: SimTime, bytes: u64, out: &mut Vec<Segment>) {
        if bytes == 0 {
            return;
        }
        self.app_end += bytes;
        self.transmit(now, out);
    }

    fn new_data_len(&self) -> Option<u32> {
        (self.app_end > self.snd_max).then(|| (self.app_end - self.snd_max).min(self.mss()) as u32)
    }

    fn send_new(&mut self, now: SimTime, len: u32, out: &mut Vec<Segment>) {
        let start = self.snd_max;
        self.segs.push_back(SentSeg {
            start,
            len,
            sacked: false,
            lost: false,
            retransmitted: false,
        });
        self.snd_max += len as u64;
        self.snd_nxt = self.snd_max;
        self.check_window();
        self.emit(
            now,
            Segment {
                seq: start,
                len,
                retransmission: false,
            },
            out,
        );
    }

    fn transmit(&mut self, now: SimTime, out: &mut Vec<Segment>) {
        if self.flavor.uses_sack() {
            self.transmit_sack(now, out);
        } else {
            self.transmit_window(now, out);
        }
    }

    // Window-gated sending used by Vanilla, Reno and NewReno.
    fn transmit_window(&mut self, now: SimTime, out: &mut Vec<Segment>) {
        loop {
            let win = self.cwnd.min(self.peer_window);
            if self.snd_nxt < self.snd_max {
                let Some(i) = self.seg_index(self.snd_nxt) else {
                    self.snd_nxt = self.snd_max;
                    continue;
                };
                let s = self.segs[i];
                if s.end() - self.snd_una > win {
                    break;
                }
                self.segs[i].retransmitted = true;
                self.snd_nxt = s.end();
                self.emit(
                    now,
                    Segment {
                        seq: s.start,
                        len: s.len,
                        retransmission: true,
                    },
                    out,
                );
            } else if let Some(len) = self.new_data_len() {
                if self.snd_max + len as u64 - self.snd_una > win {
                    break;
                }
                self.send_new(now, len, out);
            } else {
                break;
            }
        }
    }

    /// SACK counts the pipe during loss recovery and while repairing after a
    /// timeout; otherwise it is gated like the other flavors.
    fn pipe_gated(&self) -> bool {
        self.in_recovery || self.timeout_high.is_some_and(|h| self.snd_una < h)
    }

    // Holes marked lost go first, then new data.
    fn transmit_sack(&mut self, now: SimTime, out: &mut Vec<Segment>) {
        if !self.pipe_gated() {
            self.transmit_window(now, out);
            return;
        }
        let mut pipe = self.pipe();
        loop {
            let hole = self
                .segs
                .iter()
                .position(|s| s.lost && !s.sacked && !s.retransmitted);
            if let Some(i) = hole {
                let s = self.segs[i];
                if pipe + s.len as u64 > self.cwnd {
                    break;
                }
                self.segs[i].retransmitted = true;
                pipe += s.len as u64;
                self.emit(
                    now,
                    Segment {
                        seq: s.start,
                        len: s.len,
                        retransmission: true,
                    },
                    out,
                );
                continue;
            }
            let Some(len) = self.new_data_len() else {
                break;
            };
            if pipe + len as u64 > self.cwnd
                || self.snd_max + len as u64 - self.snd_una > self.peer_window
            {
                break;
            }
            pipe += len as u64;
            self.send_new(now, len, out);
        }
    }

    fn check_window(&mut self) {
        let ok = if self.flavor.uses_sack() && self.pipe_gated() {
            self.pipe() <= self.cwnd && self.snd_max - self.snd_una <= self.peer_window
        } else {
            self.snd_max - self.snd_una <= self.cwnd.min(self.peer_window)
        };
        if !ok {
            self.stats.window_violations += 1;
        }
    }

    fn grow_window(&mut self) {
        let mss = self.mss();
        if self.cwnd < self.ssthresh {
            self.cwnd += mss;
        } else {
            self.cwnd += (mss * mss / self.cwnd).max(1);
        }
        self.cwnd = self.cwnd.min(self.cwnd_cap());
    }

    fn halve(&mut self) {
        self.ssthresh = (self.flight_size() / 2).max(2 * self.mss());
        self.stats.window_reductions += 1;
    }

    fn update_rtt(&mut self, now: SimTime, ack: u64) {
        let Some((end, sent)) = self.timed else {
            return;
        };
        if ack < end {
            return;
        }
        self.timed = None;
        let r = (now - sent).as_secs_f64();
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - r).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * r);
            }
        }
        self.backoff = 0;
    }

    fn apply_sack_blocks(&mut self, blocks: &[SackBlock]) {
        for b in blocks {
            let first = self.segs.partition_point(|s| s.start < b.left);
            for s in self.segs.range_mut(first..) {
                if s.start >= b.right {
                    break;
                }
                if s.end() <= b.right {
                    s.sacked = true;
                }
            }
        }
        // A hole is lost once three SACKed segments sit above it.
        let mut sacked_above = 0u32;
        for s in self.segs.iter_mut().rev() {
            if s.sacked {
                sacked_above += 1;
            } else if sacked_above >= self.params.dupack_threshold {
                s.lost = true;
            }
        }
    }

    fn fast_retransmit_allowed(&self) -> bool {
        match self.flavor {
            Flavor::Vanilla => false,
            Flavor::Reno => true,
            Flavor::NewReno | Flavor::Sack => self.timeout_high.is_none_or(|h| self.snd_una >= h),
        }
    }

    /// Processes an incoming acknowledgment and emits whatever may now be sent.
    pub fn on_ack(&mut self, now: SimTime, ack: &Ack, out: &mut Vec<Segment>) {
        if ack.ack > self.snd_max {
            self.stats.invalid_acks += 1;
            return;
        }
        self.peer_window = ack.window;
        if self.flavor.uses_sack() {
            self.apply_sack_blocks(ack.sack_blocks());
        }

        if ack.ack > self.snd_una {
            let acked = ack.ack - self.snd_una;
            self.update_rtt(now, ack.ack);
            self.snd_una = ack.ack;
            while let Some(front) = self.segs.front_mut() {
                if front.end() <= ack.ack {
                    self.segs.pop_front();
                } else {
                    if front.start < ack.ack {
                        front.len -= (ack.ack - front.start) as u32;
                        front.start = ack.ack;
                    }
                    break;
                }
            }
            self.snd_nxt = self.snd_nxt.max(self.snd_una);
            self.dupacks = 0;
            self.on_new_ack(now, acked, out);
            self.restart_timer(now);
        } else if ack.ack == self.snd_una && self.snd_max > self.snd_una {
            self.dupacks += 1;
            self.on_dupack(now, out);
        }
        self.transmit(now, out);
    }

    fn on_new_ack(&mut self, now: SimTime, acked: u64, out: &mut Vec<Segment>) {
        let mss = self.mss();
        match self.flavor {
            Flavor::Vanilla => self.grow_window(),
            Flavor::Reno => {
                if self.in_recovery {
                    self.in_recovery = false;
                    self.cwnd = self.ssthresh;
                    self.record(now, "recovery_exit");
                } else {
                    self.grow_window();
                }
            }
            Flavor::NewReno => {
                if !self.in_recovery {
                    self.grow_window();
                } else if self.snd_una >= self.recover {
                    self.in_recovery = false;
                    self.cwnd = self.ssthresh.min(self.flight_size() + mss);
                    self.record(now, "recovery_exit");
                } else {
                    // Partial ACK: resend the next hole and stay in recovery.
                    self.stats.partial_acks += 1;
                    self.retransmit_at(now, self.snd_una, out);
                    self.cwnd = self.cwnd.saturating_sub(acked).max(mss) + mss;
                    self.record(now, "partial_ack");
                }
            }
            Flavor::Sack => {
                if !self.in_recovery {
                    self.grow_window();
                } else if self.snd_una >= self.recover {
                    self.in_recovery = false;
                    self.cwnd = self.ssthresh;
                    self.record(now, "recovery_exit");
                } else {
                    self.stats.partial_acks += 1;
                    // The segment now at the left edge has been missing for a full round.
                    if let Some(front) = self.segs.front_mut() {
                        if !front.sacked {
                            front.lost = true;
                        }
                    }
                }
            }
        }
    }

    fn on_dupack(&mut self, now: SimTime, out: &mut Vec<Segment>) {
        let mss = self.mss();
        let threshold = self.params.dupack_threshold;
        match self.flavor {
            Flavor::Vanilla => {}
            Flavor::Reno | Flavor::NewReno => {
                if self.in_recovery {
                    self.cwnd = (self.cwnd + mss).min(self.cwnd_cap());
                } else if self.dupacks == threshold && self.fast_retransmit_allowed() {
                    self.halve();
                    self.stats.fast_retransmits += 1;
                    self.recover = self.snd_max;
                    self.in_recovery = true;
                    self.retransmit_at(now, self.snd_una, out);
                    self.cwnd = self.ssthresh + threshold as u64 * mss;
                    self.record(now, "fast_retransmit");
                }
            }
            Flavor::Sack => {
                if !self.in_recovery && self.dupacks == threshold && self.fast_retransmit_allowed()
                {
                    self.halve();
                    self.stats.fast_retransmits += 1;
                    self.recover = self.snd_max;
                    self.in_recovery = true;
                    self.cwnd = self.ssthresh;
                    if let Some(front) = self.segs.front_mut() {
                        front.lost = true;
                    }
                    self.retransmit_at(now, self.snd_una, out);
                    self.record(now, "fast_retransmit");
                }
            }
        }
    }

    /// Retransmission timer expiry.
    pub fn on_timeout(&mut self, now: SimTime, out: &mut Vec<Segment>) {
        if self.snd_max == self.snd_una {
            self.rto_deadline = None;
            return;
        }
        self.stats.timeouts += 1;
        self.halve();
        self.cwnd = self.mss();
        self.dupacks = 0;
        self.in_recovery = false;
        self.timeout_high = Some(self.snd_max);
        self.timed = None;
        self.backoff = (self.backoff + 1).min(16);
        if self.flavor.uses_sack() {
            for s in self.segs.iter_mut().filter(|s| !s.sacked) {
                s.lost = true;
                s.retransmitted = false;
            }
        } else {
            self.snd_nxt = self.snd_una;
        }
        self.record(now, "timeout");
        self.rto_deadline = None;
        self.transmit(now, out);
        self.rto_deadline = Some(now + self.rto());
    }

    /// Fires the timeout if its deadline has passed; call on every timer tick.
    pub fn on_tick(&mut self, now: SimTime, out: &mut Vec<Segment>) -> bool {
        match self.rto_deadline {
            Some(d) if d <= now => {
                self.on_timeout(now, out);
                true
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReceiverStats {
    pub segments: u64,
    pub duplicates: u64,
    pub out_of_order: u64,
    pub beyond_window: u64,
}

#[derive(Debug, Clone)]
pub struct TcpReceiver {
    rcv_nxt: u64,
    window: u64,
    sack: bool,
    /// Out-of-order data as disjoint `[start, end)` ranges keyed by start.
    ooo: BTreeMap<u64, u64>,
    /// SACK blocks, most recently changed first.
    recent: Vec<SackBlock>,
    stats: ReceiverStats,
}

impl TcpReceiver {
    pub fn new(params: &TcpParams, sack: bool) -> Self {
        Self {
            rcv_nxt: 0,
            window: params.advertised_window(),
            sack,
            ooo: BTreeMap::new(),
            recent: Vec::new(),
            stats: ReceiverStats::default(),
        }
    }

    /// Highest in-order byte delivered to the application.
    pub fn rcv_nxt(&self) -> u64 {
        self.rcv_nxt
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn stats(&self) -> ReceiverStats {
        self.stats
    }

    pub fn out_of_order_ranges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.ooo.iter().map(|(&s, &e)| (s, e))
    }

    /// Handles an arriving data segment and returns the immediate ACK.
    pub fn on_segment(&mut self, seq: u64, len: u32) -> Ack {
        self.stats.segments += 1;
        let end = seq + len as u64;
        if end > self.rcv_nxt + self.window {
            self.stats.beyond_window += 1;
        } else if end <= self.rcv_nxt {
            self.stats.duplicates += 1;
        } else if seq <= self.rcv_nxt {
            self.rcv_nxt = end;
            while let Some((&s, &e)) = self.ooo.first_key_value() {
                if s > self.rcv_nxt {
                    break;
                }
                self.ooo.pop_first();
                self.rcv_nxt = self.rcv_nxt.max(e);
            }
            let nxt = self.rcv_nxt;
            self.recent.retain(|b| b.left > nxt);
        } else {
            self.stats.out_of_order += 1;
            self.insert_ooo(seq, end);
        }
        let ack = Ack::new(self.rcv_nxt, self.window);
        if self.sack {
            let n = self.recent.len().min(MAX_SACK_BLOCKS);
            ack.with_blocks(&self.recent[..n])
        } else {
            ack
        }
    }

    fn insert_ooo(&mut self, seq: u64, end: u64) {
        let mut left = seq;
        let mut right = end;
        // Merge with any range that overlaps or touches [left, right].
        let touching: Vec<u64> = self
            .ooo
            .range(..=right)
            .rev()
            .take_while(|(_, &e)| e >= left)
            .map(|(&s, _)| s)
            .collect();
        for s in touching {
            let e = self.ooo.remove(&s).expect("present");
            left = left.min(s);
            right = right.max(e);
        }
        self.ooo.insert(left, right);
        self.recent.retain(|b| b.right < left || b.left > right);
        self.recent.insert(0, SackBlock { left, right });
        self.recent.truncate(8);
    }
}
