//! Fixed-latency, bandwidth-limited main memory.

use std::collections::VecDeque;

use super::ram::Ram;
use super::{MemReq, MemRsp};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DramStats {
    pub reads: u64,
    pub writes: u64,
}

#[derive(Debug)]
pub struct Dram {
    latency: u32,
    bandwidth: u32,
    line_size: u32,
    inflight: VecDeque<(u64, MemRsp)>,
    accepted_this_cycle: u32,
    cycle: u64,
    pub stats: DramStats,
}

impl Dram {
    pub fn new(latency: u32, bandwidth: u32, line_size: u32) -> Self {
        assert!(latency >= 1 && bandwidth >= 1);
        Dram {
            latency,
            bandwidth,
            line_size,
            inflight: VecDeque::new(),
            accepted_this_cycle: 0,
            cycle: 0,
            stats: DramStats::default(),
        }
    }

    /// Starts cycle `now`, resetting the per-cycle acceptance budget.
    pub fn begin_cycle(&mut self, now: u64) {
        self.cycle = now;
        self.accepted_this_cycle = 0;
    }

    pub fn can_accept(&self) -> bool {
        self.accepted_this_cycle < self.bandwidth
    }

    /// Accepts a request. Reads capture their data and writes update the
    /// backing store at acceptance, so requests are serviced in order.
    pub fn accept(&mut self, req: MemReq, ram: &mut Ram) {
        debug_assert!(self.can_accept());
        self.accepted_this_cycle += 1;
        let data = match req.write {
            Some((bytes, mask)) => {
                ram.write_masked(req.line, &bytes, mask);
                self.stats.writes += 1;
                None
            }
            None => {
                let mut buf = vec![0; self.line_size as usize].into_boxed_slice();
                ram.read(req.line, &mut buf);
                self.stats.reads += 1;
                Some(buf)
            }
        };
        let ready = self.cycle + self.latency as u64;
        self.inflight.push_back((ready, MemRsp { line: req.line, data, src: req.src }));
    }

    /// Next response that has completed by the current cycle.
    pub fn pop_ready(&mut self) -> Option<MemRsp> {
        match self.inflight.front() {
            Some(&(ready, _)) if ready <= self.cycle => self.inflight.pop_front().map(|(_, r)| r),
            _ => None,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.inflight.is_empty()
    }
}
