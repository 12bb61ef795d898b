//! The two-switch WWW scenario: N servers behind switch A, N clients behind
//! switch B, one bottleneck link between the switches.
//!
//! Responses flow server → client through A's bottleneck port; requests and
//! the response ACKs flow client → server through B's bottleneck port. Each
//! connection is one VC carrying both TCP flows of that direction.
//!
//! Access links are delay plus rate with unbounded FIFOs. Cells reach a
//! bottleneck port one event at a time; after the port, the path to the far
//! host never queues (the access link is faster than the bottleneck), so the
//! arrival time of each frame is computed directly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::atm::{self, Cell, Reassembler, Reassembly, VcId};
use crate::error::{Error, Result};
use crate::kernel::{derive_seed, CellCounts, Model, RunStats, Scheduler, SimTime, Simulation};
use crate::metrics::NetworkResult;
use crate::switch::{DropPolicy, DropRecord, PortConfig, PortCounters, SwitchPort};
use crate::tcp::{self, Ack, Flavor, Segment, SenderStats, TcpParams, TcpReceiver, TcpSender};
use crate::traffic::{ClientSession, TrafficParams, WwwServer};

pub const T3_BPS: f64 = 45e6;
pub const OC3_PAYLOAD_BPS: f64 = 149.76e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DelayClass {
    Wan,
    Meo,
    Geo,
}

impl DelayClass {
    pub const ALL: [DelayClass; 3] = [DelayClass::Wan, DelayClass::Meo, DelayClass::Geo];

    pub fn label(self) -> &'static str {
        match self {
            DelayClass::Wan => "WAN",
            DelayClass::Meo => "MEO",
            DelayClass::Geo => "GEO",
        }
    }

    pub fn one_way_delay(self) -> SimTime {
        match self {
            DelayClass::Wan => SimTime::from_millis(5),
            DelayClass::Meo => SimTime::from_millis(100),
            DelayClass::Geo => SimTime::from_millis(275),
        }
    }

    pub fn mss(self) -> u32 {
        match self {
            DelayClass::Wan => 1024,
            DelayClass::Meo | DelayClass::Geo => 9180,
        }
    }

    pub fn window_scale(self) -> u8 {
        match self {
            DelayClass::Wan => 0,
            DelayClass::Meo => 5,
            DelayClass::Geo => 6,
        }
    }

    /// Switch buffer sizes in cells for 0.5, 1 and 2 RTT.
    pub fn buffer_cells(self) -> [u32; 3] {
        match self {
            DelayClass::Wan => [531, 1062, 2300],
            DelayClass::Meo => [10_615, 21_230, 42_460],
            DelayClass::Geo => [29_190, 58_380, 116_760],
        }
    }
}

impl fmt::Display for DelayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DelayClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wan" => Ok(DelayClass::Wan),
            "meo" | "leo" => Ok(DelayClass::Meo),
            "geo" => Ok(DelayClass::Geo),
            _ => Err(Error::Config(format!(
                "unknown delay class '{s}' (expected WAN, MEO or GEO)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BufferLevel {
    HalfRtt,
    OneRtt,
    TwoRtt,
}

impl BufferLevel {
    pub const ALL: [BufferLevel; 3] = [
        BufferLevel::HalfRtt,
        BufferLevel::OneRtt,
        BufferLevel::TwoRtt,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BufferLevel::HalfRtt => "0.5RTT",
            BufferLevel::OneRtt => "1RTT",
            BufferLevel::TwoRtt => "2RTT",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BufferLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BufferLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        match t.trim_end_matches("rtt") {
            "0.5" | ".5" => Ok(BufferLevel::HalfRtt),
            "1" | "1.0" => Ok(BufferLevel::OneRtt),
            "2" | "2.0" => Ok(BufferLevel::TwoRtt),
            _ => Err(Error::Config(format!(
                "unknown buffer level '{s}' (expected 0.5RTT, 1RTT or 2RTT)"
            ))),
        }
    }
}

/// Everything that describes the network and workload of one delay class.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub delay_class: DelayClass,
    pub connections: u32,
    pub duration: SimTime,
    pub bottleneck_bps: f64,
    pub bottleneck_delay: SimTime,
    pub access_bps: f64,
    pub access_delay: SimTime,
    pub mss: u32,
    pub rcv_buffer: u64,
    pub window_scale: u8,
    /// Buffer sizes in cells for the three buffer levels.
    pub buffer_cells: [u32; 3],
    pub threshold_r: f64,
    pub threshold_z: f64,
    pub traffic: TrafficParams,
}

impl Scenario {
    /// 100 connections, 100 s, full-rate T3.
    pub fn full(delay_class: DelayClass) -> Self {
        Self {
            delay_class,
            connections: 100,
            duration: SimTime::from_secs(100),
            bottleneck_bps: T3_BPS,
            bottleneck_delay: delay_class.one_way_delay(),
            access_bps: OC3_PAYLOAD_BPS,
            access_delay: SimTime::from_micros(5),
            mss: delay_class.mss(),
            rcv_buffer: tcp::max_advertised_window(delay_class.window_scale()),
            window_scale: delay_class.window_scale(),
            buffer_cells: delay_class.buffer_cells(),
            threshold_r: 0.8,
            threshold_z: 0.8,
            traffic: TrafficParams::default(),
        }
    }

    /// A tenth of the full scale: 10 connections, 20 s, bottleneck rate and
    /// buffers divided by ten so the load-to-capacity ratio is unchanged.
    pub fn desk(delay_class: DelayClass) -> Self {
        let full = Self::full(delay_class);
        Self {
            connections: 10,
            duration: SimTime::from_secs(20),
            bottleneck_bps: full.bottleneck_bps / 10.0,
            buffer_cells: full
                .buffer_cells
                .map(|b| ((b as f64) / 10.0).round() as u32),
            ..full
        }
    }

    /// Round-trip propagation delay.
    pub fn rtt(&self) -> SimTime {
        (self.bottleneck_delay + self.access_delay + self.access_delay).saturating_mul(2)
    }

    /// Round-trip propagation delay over the bottleneck alone, as used for
    /// window and buffer sizing.
    pub fn nominal_rtt(&self) -> SimTime {
        self.bottleneck_delay.saturating_mul(2)
    }

    /// Delay-bandwidth product of the bottleneck, in cells (rounded up).
    pub fn rtt_bandwidth_cells(&self) -> u64 {
        let bits = self.nominal_rtt().as_secs_f64() * self.bottleneck_bps;
        (bits / atm::CELL_BITS as f64 - 1e-9).ceil() as u64
    }

    pub fn initial_ssthresh(&self) -> u64 {
        tcp::initial_ssthresh(self.nominal_rtt().as_secs_f64(), self.bottleneck_bps)
    }

    pub fn tcp_params(&self) -> TcpParams {
        TcpParams::new(
            self.mss,
            self.rcv_buffer,
            self.window_scale,
            self.initial_ssthresh(),
        )
    }

    /// Maximum TCP goodput of the bottleneck in Mbps.
    pub fn capacity_mbps(&self) -> f64 {
        atm::max_tcp_throughput(self.mss, self.bottleneck_bps) / 1e6
    }

    pub fn buffer(&self, level: BufferLevel) -> u32 {
        self.buffer_cells[level.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.connections == 0 {
            return bad("connections must be at least 1");
        }
        if self.duration == SimTime::ZERO {
            return bad("duration must be positive");
        }
        if !(self.bottleneck_bps > 0.0) || !(self.access_bps > 0.0) {
            return bad("link rates must be positive");
        }
        if self.access_bps < self.bottleneck_bps {
            return bad("access links must be at least as fast as the bottleneck");
        }
        if self.mss == 0 {
            return bad("mss must be positive");
        }
        if self.window_scale > 14 {
            return bad("window scale must be at most 14");
        }
        if self.rcv_buffer < self.mss as u64 {
            return bad("receive buffer must hold at least one segment");
        }
        if self.buffer_cells.contains(&0) {
            return bad("buffer sizes must be positive");
        }
        if !(self.threshold_r > 0.0 && self.threshold_r <= 1.0)
            || !(self.threshold_z > 0.0 && self.threshold_z <= 1.0)
        {
            return bad("thresholds R and Z must lie in (0, 1]");
        }
        self.traffic.validate()
    }
}

/// One cell of the factorial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Treatment {
    pub flavor: Flavor,
    pub policy: DropPolicy,
    pub buffer: BufferLevel,
}

/// All 24 treatments, flavor-major, then buffer, then policy.
pub fn factorial_grid() -> Vec<Treatment> {
    let mut v = Vec::with_capacity(24);
    for flavor in Flavor::ALL {
        for buffer in BufferLevel::ALL {
            for policy in DropPolicy::ALL {
                v.push(Treatment {
                    flavor,
                    policy,
                    buffer,
                });
            }
        }
    }
    v
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub treatment: Treatment,
    /// Seeds the workload; identical seeds give identical request streams
    /// across treatments.
    pub seed: u64,
    pub log_drops: bool,
}

#[derive(Debug, Clone)]
pub struct PortReport {
    pub counters: PortCounters,
    pub conserved: bool,
    pub max_occupancy: u32,
    pub capacity: u32,
    pub threshold: u32,
    pub drop_log: Vec<DropRecord>,
}

/// End-of-run state of one client/server pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnReport {
    pub response: SenderStats,
    pub request: SenderStats,
    pub response_rto: SimTime,
    pub scheduled_bytes: u64,
    pub sent_bytes: u64,
    pub delivered_bytes: u64,
    pub requests_sent: u64,
    pub requests_answered: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: NetworkResult,
    pub stats: RunStats,
    /// Server-scheduled response load in Mbps.
    pub offered_mbps: f64,
    /// Bottleneck port of switch A (server → client) and of switch B.
    pub forward: PortReport,
    pub reverse: PortReport,
    pub wasted_cells: u64,
    pub senders: SenderStats,
    pub requests_answered: u64,
    pub connections: Vec<ConnReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    /// Server → client through switch A.
    Down,
    /// Client → server through switch B.
    Up,
}

impl Dir {
    fn idx(self) -> usize {
        match self {
            Dir::Down => 0,
            Dir::Up => 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Payload {
    Data { seq: u64, len: u32 },
    Ack(Ack),
}

#[derive(Debug, Clone, Copy)]
struct FrameInfo {
    conn: u32,
    payload: Payload,
}

#[derive(Debug, Clone, Copy)]
struct Train {
    dir: Dir,
    vc: VcId,
    frame: u64,
    cells: u32,
    next: u32,
}

#[derive(Debug)]
enum Event {
    /// Next cell of a frame reaches the bottleneck port.
    CellArrival {
        train: usize,
    },
    PortDepart {
        dir: Dir,
    },
    Deliver {
        dir: Dir,
        frame: u64,
    },
    /// Retransmission timer check for the sender of `conn` that transmits in `dir`.
    Timer {
        conn: u32,
        dir: Dir,
    },
    Batch {
        conn: u32,
    },
    Request {
        conn: u32,
    },
}

struct Connection {
    server_tx: TcpSender,
    client_rx: TcpReceiver,
    client_tx: TcpSender,
    server_rx: TcpReceiver,
    client: ClientSession,
    server: WwwServer,
    requests_answered: u64,
    /// Pending timer event per sending direction.
    timer_at: [Option<SimTime>; 2],
}

impl Connection {
    fn sender(&mut self, dir: Dir) -> &mut TcpSender {
        match dir {
            Dir::Down => &mut self.server_tx,
            Dir::Up => &mut self.client_tx,
        }
    }
}

struct Port {
    sw: SwitchPort,
    busy: bool,
    reasm: Reassembler,
}

struct Network {
    scenario: Scenario,
    conns: Vec<Connection>,
    ports: [Port; 2],
    /// Time each host's access link becomes free, indexed `[dir][conn]`.
    link_free: [Vec<SimTime>; 2],
    trains: Vec<Train>,
    free_trains: Vec<usize>,
    frames: HashMap<u64, FrameInfo>,
    next_frame: u64,
    access_cell: SimTime,
    out: Vec<Segment>,
    error: Option<Error>,
}

impl Network {
    fn new(spec: &RunSpec) -> Self {
        let sc = &spec.scenario;
        let n = sc.connections as usize;
        let params = sc.tcp_params();
        let flavor = spec.treatment.flavor;
        let conns = (0..sc.connections)
            .map(|i| Connection {
                server_tx: TcpSender::new(params.clone(), flavor),
                client_rx: TcpReceiver::new(&params, flavor.uses_sack()),
                client_tx: TcpSender::new(params.clone(), flavor),
                server_rx: TcpReceiver::new(&params, flavor.uses_sack()),
                client: ClientSession::new(spec.seed, i),
                server: WwwServer::new(spec.seed, i),
                requests_answered: 0,
                timer_at: [None, None],
            })
            .collect();
        let port = || {
            let cfg = PortConfig {
                threshold_r: sc.threshold_r,
                threshold_z: sc.threshold_z,
                ..PortConfig::new(
                    sc.buffer(spec.treatment.buffer),
                    spec.treatment.policy,
                    sc.bottleneck_bps,
                )
            };
            let sw = SwitchPort::new(cfg, n);
            Port {
                sw: if spec.log_drops {
                    sw.with_drop_log()
                } else {
                    sw
                },
                busy: false,
                reasm: Reassembler::new(n),
            }
        };
        Self {
            conns,
            ports: [port(), port()],
            link_free: [vec![SimTime::ZERO; n], vec![SimTime::ZERO; n]],
            trains: Vec::new(),
            free_trains: Vec::new(),
            frames: HashMap::new(),
            next_frame: 0,
            access_cell: atm::cell_time(sc.access_bps),
            out: Vec::new(),
            error: None,
            scenario: sc.clone(),
        }
    }

    /// Puts a frame on the sending host's access link.
    fn send_frame(
        &mut self,
        sched: &mut Scheduler<Event>,
        dir: Dir,
        conn: u32,
        segment_bytes: u32,
        payload: Payload,
    ) {
        let frame = self.next_frame;
        self.next_frame += 1;
        self.frames.insert(frame, FrameInfo { conn, payload });
        let cells = atm::cells_for_segment(segment_bytes);
        let free = &mut self.link_free[dir.idx()][conn as usize];
        let start = (*free).max(sched.now());
        *free = start + self.access_cell.saturating_mul(cells as u64);
        let train = Train {
            dir,
            vc: conn,
            frame,
            cells,
            next: 0,
        };
        let id = match self.free_trains.pop() {
            Some(id) => {
                self.trains[id] = train;
                id
            }
            None => {
                self.trains.push(train);
                self.trains.len() - 1
            }
        };
        sched.schedule(
            start + self.access_cell + self.scenario.access_delay,
            Event::CellArrival { train: id },
        );
    }

    /// Sends what the `dir` sender of `conn` just emitted and keeps its
    /// timer event no later than its retransmission deadline.
    fn send_segments(&mut self, sched: &mut Scheduler<Event>, dir: Dir, conn: u32) {
        let segs = std::mem::take(&mut self.out);
        for s in &segs {
            self.send_frame(
                sched,
                dir,
                conn,
                s.len,
                Payload::Data {
                    seq: s.seq,
                    len: s.len,
                },
            );
        }
        self.out = segs;
        self.out.clear();
        let c = &mut self.conns[conn as usize];
        if let Some(deadline) = c.sender(dir).rto_deadline() {
            let slot = &mut c.timer_at[dir.idx()];
            if slot.is_none_or(|t| t > deadline) {
                *slot = Some(deadline);
                sched.schedule(deadline, Event::Timer { conn, dir });
            }
        }
    }

    fn send_ack(&mut self, sched: &mut Scheduler<Event>, dir: Dir, conn: u32, ack: Ack) {
        self.send_frame(sched, dir, conn, 0, Payload::Ack(ack));
    }

    fn on_cell_arrival(&mut self, sched: &mut Scheduler<Event>, id: usize) {
        let now = sched.now();
        let t = self.trains[id];
        let cell = Cell {
            vc: t.vc,
            frame: t.frame,
            frame_cells: t.cells,
            eom: t.next + 1 == t.cells,
            enqueue_time: now,
        };
        let port = &mut self.ports[t.dir.idx()];
        let decision = port.sw.enqueue_cell(now, cell);
        if decision.verdict.is_drop() {
            if cell.eom {
                self.frames.remove(&t.frame);
            }
        } else if !port.busy {
            port.busy = true;
            sched.schedule(now + port.sw.cell_time(), Event::PortDepart { dir: t.dir });
        }
        if cell.eom {
            self.free_trains.push(id);
        } else {
            self.trains[id].next += 1;
            sched.schedule(now + self.access_cell, Event::CellArrival { train: id });
        }
    }

    fn on_port_depart(&mut self, sched: &mut Scheduler<Event>, dir: Dir) {
        let now = sched.now();
        let port = &mut self.ports[dir.idx()];
        let Some(cell) = port.sw.dequeue_cell() else {
            port.busy = false;
            return;
        };
        if port.sw.is_empty() {
            port.busy = false;
        } else {
            sched.schedule(now + port.sw.cell_time(), Event::PortDepart { dir });
        }
        match port.reasm.accept(&cell) {
            Reassembly::Pending => {}
            Reassembly::Complete { frame } => {
                let arrive = now
                    + self.scenario.bottleneck_delay
                    + self.access_cell
                    + self.scenario.access_delay;
                sched.schedule(arrive, Event::Deliver { dir, frame });
            }
            Reassembly::Corrupt { frame, .. } => {
                self.frames.remove(&frame);
            }
        }
    }

    fn on_deliver(&mut self, sched: &mut Scheduler<Event>, dir: Dir, frame: u64) {
        let Some(info) = self.frames.remove(&frame) else {
            return;
        };
        let now = sched.now();
        let i = info.conn as usize;
        match (dir, info.payload) {
            (Dir::Down, Payload::Data { seq, len }) => {
                let ack = self.conns[i].client_rx.on_segment(seq, len);
                self.send_ack(sched, Dir::Up, info.conn, ack);
            }
            (Dir::Down, Payload::Ack(ack)) => {
                self.conns[i].client_tx.on_ack(now, &ack, &mut self.out);
                self.send_segments(sched, Dir::Up, info.conn);
            }
            (Dir::Up, Payload::Data { seq, len }) => {
                let ack = self.conns[i].server_rx.on_segment(seq, len);
                self.send_ack(sched, Dir::Down, info.conn, ack);
                self.serve_requests(sched, info.conn);
            }
            (Dir::Up, Payload::Ack(ack)) => {
                self.conns[i].server_tx.on_ack(now, &ack, &mut self.out);
                self.send_segments(sched, Dir::Down, info.conn);
            }
        }
    }

    /// Answers every request that has fully arrived at the server.
    fn serve_requests(&mut self, sched: &mut Scheduler<Event>, conn: u32) {
        let now = sched.now();
        let req = self.scenario.traffic.request_bytes as u64;
        let c = &mut self.conns[conn as usize];
        let arrived = c.server_rx.rcv_nxt() / req;
        while c.requests_answered < arrived {
            c.requests_answered += 1;
            match c.server.respond(&self.scenario.traffic) {
                Ok(r) => c.server_tx.write(now, r.response_bytes, &mut self.out),
                Err(e) => {
                    self.error.get_or_insert(e);
                }
            }
        }
        self.send_segments(sched, Dir::Down, conn);
    }

    fn on_timer(&mut self, sched: &mut Scheduler<Event>, conn: u32, dir: Dir) {
        let now = sched.now();
        let c = &mut self.conns[conn as usize];
        if c.timer_at[dir.idx()] != Some(now) {
            // Superseded by an earlier event for the same sender.
            return;
        }
        c.timer_at[dir.idx()] = None;
        c.sender(dir).on_tick(now, &mut self.out);
        self.send_segments(sched, dir, conn);
    }

    fn on_batch(&mut self, sched: &mut Scheduler<Event>, conn: u32) {
        let now = sched.now();
        let c = &mut self.conns[conn as usize];
        match c.client.batch_schedule(&self.scenario.traffic, now) {
            Ok(times) => {
                for t in times {
                    sched.schedule(t, Event::Request { conn });
                }
            }
            Err(e) => {
                self.error.get_or_insert(e);
            }
        }
        let next = now + self.scenario.traffic.batch_period;
        if next < self.scenario.duration {
            sched.schedule(next, Event::Batch { conn });
        }
    }

    fn on_request(&mut self, sched: &mut Scheduler<Event>, conn: u32) {
        let now = sched.now();
        let bytes = self.scenario.traffic.request_bytes as u64;
        let c = &mut self.conns[conn as usize];
        c.client.requests_sent += 1;
        c.client_tx.write(now, bytes, &mut self.out);
        self.send_segments(sched, Dir::Up, conn);
    }
}

impl Model for Network {
    type Event = Event;

    fn handle(&mut self, sched: &mut Scheduler<Event>, event: Event) {
        match event {
            Event::CellArrival { train } => self.on_cell_arrival(sched, train),
            Event::PortDepart { dir } => self.on_port_depart(sched, dir),
            Event::Deliver { dir, frame } => self.on_deliver(sched, dir, frame),
            Event::Timer { conn, dir } => self.on_timer(sched, conn, dir),
            Event::Batch { conn } => self.on_batch(sched, conn),
            Event::Request { conn } => self.on_request(sched, conn),
        }
    }

    fn cell_counts(&self) -> CellCounts {
        self.ports.iter().fold(CellCounts::default(), |acc, p| {
            let c = p.sw.counters();
            CellCounts {
                forwarded: acc.forwarded + c.cells_out,
                dropped: acc.dropped + c.cells_dropped,
            }
        })
    }
}

fn port_report(p: &Port) -> PortReport {
    PortReport {
        counters: p.sw.counters(),
        conserved: p.sw.is_conserved(),
        max_occupancy: p.sw.max_occupancy(),
        capacity: p.sw.config().capacity_cells,
        threshold: p.sw.threshold_cells(),
        drop_log: p
            .sw
            .drop_log()
            .map(<[DropRecord]>::to_vec)
            .unwrap_or_default(),
    }
}

fn add_stats(a: &mut SenderStats, b: SenderStats) {
    a.segments_sent += b.segments_sent;
    a.bytes_sent += b.bytes_sent;
    a.retransmissions += b.retransmissions;
    a.timeouts += b.timeouts;
    a.fast_retransmits += b.fast_retransmits;
    a.partial_acks += b.partial_acks;
    a.invalid_acks += b.invalid_acks;
    a.window_reductions += b.window_reductions;
    a.window_violations += b.window_violations;
}

/// Simulates one treatment of one scenario.
pub fn run(spec: &RunSpec) -> Result<RunOutcome> {
    spec.scenario.validate()?;
    let sc = &spec.scenario;
    let mut sim = Simulation::new(Network::new(spec));
    for i in 0..sc.connections {
        let start = sim.model.conns[i as usize]
            .client
            .first_batch_start(&sc.traffic);
        sim.sched.schedule(start, Event::Batch { conn: i });
    }
    let stats = sim.run_until(sc.duration);
    let net = sim.model;
    if let Some(e) = net.error {
        return Err(e);
    }

    let secs = sc.duration.as_secs_f64();
    let mbps = |bytes: u64| bytes as f64 * 8.0 / secs / 1e6;
    let throughput: Vec<f64> = net
        .conns
        .iter()
        .map(|c| mbps(c.client_rx.rcv_nxt()))
        .collect();
    let scheduled: Vec<f64> = net
        .conns
        .iter()
        .map(|c| mbps(c.server.bytes_scheduled))
        .collect();
    let result = NetworkResult::from_rates(&throughput, &scheduled, sc.capacity_mbps())?;
    let mut senders = SenderStats::default();
    for c in &net.conns {
        add_stats(&mut senders, c.server_tx.stats());
        add_stats(&mut senders, c.client_tx.stats());
    }
    Ok(RunOutcome {
        offered_mbps: scheduled.iter().sum(),
        result,
        stats,
        forward: port_report(&net.ports[0]),
        reverse: port_report(&net.ports[1]),
        wasted_cells: net.ports.iter().map(|p| p.reasm.wasted_cells()).sum(),
        senders,
        requests_answered: net.conns.iter().map(|c| c.requests_answered).sum(),
        connections: net
            .conns
            .iter()
            .map(|c| ConnReport {
                response: c.server_tx.stats(),
                request: c.client_tx.stats(),
                response_rto: c.server_tx.rto(),
                scheduled_bytes: c.server.bytes_scheduled,
                sent_bytes: c.server_tx.snd_max(),
                delivered_bytes: c.client_rx.rcv_nxt(),
                requests_sent: c.client.requests_sent,
                requests_answered: c.requests_answered,
            })
            .collect(),
    })
}

/// Workload seed of replicate `replicate` under `master`. Every treatment of
/// a replicate sees the same request stream.
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    derive_seed(master, replicate)
}
