//! AAL5 framing of TCP segments into ATM cells and per-VC reassembly.
//!
//! Only lengths and frame boundaries are simulated; cell payload bytes are
//! never materialized.

use crate::kernel::SimTime;

pub const CELL_BYTES: u32 = 53;
pub const CELL_PAYLOAD_BYTES: u32 = 48;
pub const CELL_BITS: u64 = CELL_BYTES as u64 * 8;

pub const TCP_HEADER_BYTES: u32 = 20;
pub const IP_HEADER_BYTES: u32 = 20;
pub const LLC_HEADER_BYTES: u32 = 8;
pub const AAL5_TRAILER_BYTES: u32 = 8;

/// Per-segment overhead carried inside the AAL5 frame.
pub const FRAME_OVERHEAD_BYTES: u32 =
    TCP_HEADER_BYTES + IP_HEADER_BYTES + LLC_HEADER_BYTES + AAL5_TRAILER_BYTES;

/// Identifies a virtual circuit; one per TCP connection.
pub type VcId = u32;

/// Number of cells needed to carry a TCP segment with `segment_bytes` of data.
pub fn cells_for_segment(segment_bytes: u32) -> u32 {
    (segment_bytes + FRAME_OVERHEAD_BYTES).div_ceil(CELL_PAYLOAD_BYTES)
}

/// Bytes on the wire at the ATM layer for one segment.
pub fn wire_bytes(segment_bytes: u32) -> u64 {
    cells_for_segment(segment_bytes) as u64 * CELL_BYTES as u64
}

/// Best-case TCP goodput on a link of `link_rate_bps` when every segment
/// carries `mss` bytes.
pub fn max_tcp_throughput(mss: u32, link_rate_bps: f64) -> f64 {
    link_rate_bps * mss as f64 / wire_bytes(mss) as f64
}

/// Serialization time of one cell on a link.
pub fn cell_time(link_rate_bps: f64) -> SimTime {
    SimTime::from_secs_f64(CELL_BITS as f64 / link_rate_bps)
}

/// An AAL5 frame as seen by the switch: a segment plus its fixed overhead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Aal5Frame {
    pub segment_bytes: u32,
}

impl Aal5Frame {
    pub fn new(segment_bytes: u32) -> Self {
        Self { segment_bytes }
    }

    pub fn cell_count(&self) -> u32 {
        cells_for_segment(self.segment_bytes)
    }
}

/// A 53-byte ATM cell. `frame_cells` mirrors the length field an AAL5
/// receiver would find in the trailer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub vc: VcId,
    pub frame: u64,
    pub frame_cells: u32,
    pub eom: bool,
    pub enqueue_time: SimTime,
}

/// Splits a segment into its ordered cells; the last one carries `eom`.
pub fn segment_to_cells(vc: VcId, frame: u64, segment_bytes: u32, now: SimTime) -> Vec<Cell> {
    let n = cells_for_segment(segment_bytes);
    (0..n)
        .map(|i| Cell {
            vc,
            frame,
            frame_cells: n,
            eom: i + 1 == n,
            enqueue_time: now,
        })
        .collect()
}

/// Outcome of feeding one cell to the reassembler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reassembly {
    /// More cells needed.
    Pending,
    /// A complete, intact frame.
    Complete { frame: u64 },
    /// The frame closed by this cell was missing cells and was discarded.
    Corrupt { frame: u64, cells: u32 },
}

#[derive(Debug, Clone, Copy, Default)]
struct VcAssembly {
    frame: Option<u64>,
    cells: u32,
}

/// Per-VC AAL5 reassembly with frame-integrity checking.
#[derive(Debug, Clone, Default)]
pub struct Reassembler {
    vcs: Vec<VcAssembly>,
    wasted_cells: u64,
    frames_delivered: u64,
    frames_discarded: u64,
}

impl Reassembler {
    pub fn new(vc_count: usize) -> Self {
        Self {
            vcs: vec![VcAssembly::default(); vc_count],
            ..Default::default()
        }
    }

    /// Cells that reached the receiver but belonged to frames that could not
    /// be delivered.
    pub fn wasted_cells(&self) -> u64 {
        self.wasted_cells
    }

    pub fn frames_delivered(&self) -> u64 {
        self.frames_delivered
    }

    pub fn frames_discarded(&self) -> u64 {
        self.frames_discarded
    }

    pub fn accept(&mut self, cell: &Cell) -> Reassembly {
        let idx = cell.vc as usize;
        if idx >= self.vcs.len() {
            self.vcs.resize(idx + 1, VcAssembly::default());
        }
        let st = &mut self.vcs[idx];
        if st.frame != Some(cell.frame) {
            // A partial frame whose end-of-message cell never arrived.
            if st.cells > 0 {
                self.wasted_cells += st.cells as u64;
                self.frames_discarded += 1;
            }
            st.frame = Some(cell.frame);
            st.cells = 0;
        }
        st.cells += 1;
        if !cell.eom {
            return Reassembly::Pending;
        }
        let got = st.cells;
        st.frame = None;
        st.cells = 0;
        if got == cell.frame_cells {
            self.frames_delivered += 1;
            Reassembly::Complete { frame: cell.frame }
        } else {
            self.wasted_cells += got as u64;
            self.frames_discarded += 1;
            Reassembly::Corrupt {
                frame: cell.frame,
                cells: got,
            }
        }
    }
}
