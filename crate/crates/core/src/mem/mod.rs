//! Memory hierarchy: per-core L1 instruction and data caches, optional
//! shared L2 and L3, the DRAM timing model and the functional RAM behind it.
//!
//! Caches are write-back and write-allocate and hold real data, so the
//! values returned to the cores come from the modelled hierarchy itself.

pub mod bank;
pub mod cache;
pub mod dram;
pub mod port;
pub mod ram;
pub mod shared;

use serde::Serialize;

use crate::config::ProcessorConfig;
use bank::{Bank, BankOp, Payload};
use cache::{Cache, CacheStats};
use dram::{Dram, DramStats};
use port::CorePort;
use ram::Ram;

pub use cache::bank_index;
pub use port::select_and_coalesce;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReqKind {
    Ifetch,
    Load,
    Store,
    Texel,
}

/// Identifies the instruction a memory request belongs to. `token` is
/// unique per request so the merger can match responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RequestTag {
    pub pc: u32,
    pub wid: u32,
    pub core: u32,
    pub kind: ReqKind,
    pub token: u64,
}

/// One lane's access to a naturally aligned word. `wmask` holds the byte
/// enables of a store (zero for loads); `data` is already shifted into the
/// enabled byte lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneAccess {
    pub lane: u16,
    pub addr: u32,
    pub wmask: u8,
    pub data: u32,
}

/// Line-granular request towards the next level. A write carries the full
/// line plus a byte mask of the bytes actually written, so writebacks from
/// different cores to disjoint bytes of one line merge correctly. Every
/// request is answered, writes with an empty acknowledgement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemReq {
    pub line: u32,
    pub write: Option<(Box<[u8]>, u128)>,
    pub src: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemRsp {
    pub line: u32,
    pub data: Option<Box<[u8]>>,
    pub src: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BankOutput {
    Core { tag: RequestTag, data: Vec<(u16, u32)> },
    Line(MemRsp),
}

/// A finished core request: the word each lane observed, in lane order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub tag: RequestTag,
    pub data: Vec<(u16, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemStats {
    pub l1i: Vec<CacheStats>,
    pub l1d: Vec<CacheStats>,
    pub l2: Option<CacheStats>,
    pub l3: Option<CacheStats>,
    pub dram_reads: u64,
    pub dram_writes: u64,
}

/// Where a request source or response sink lives.
trait Sink {
    fn targets(&self) -> usize;
    fn target_of(&self, line: u32) -> usize;
    fn can_accept(&self, target: usize) -> bool;
    fn accept(&mut self, target: usize, req: MemReq, src: u32, ram: &mut Ram);
    /// Whether a target takes at most one grant per cycle.
    fn single_grant(&self) -> bool;
}

impl Sink for Cache {
    fn targets(&self) -> usize {
        self.banks.len()
    }
    fn target_of(&self, line: u32) -> usize {
        self.bank_of(line)
    }
    fn can_accept(&self, t: usize) -> bool {
        self.banks[t].can_accept()
    }
    fn accept(&mut self, t: usize, req: MemReq, src: u32, _: &mut Ram) {
        self.banks[t].push(BankOp { line: req.line, payload: Payload::Line { write: req.write, src } });
    }
    fn single_grant(&self) -> bool {
        true
    }
}

impl Sink for Dram {
    fn targets(&self) -> usize {
        1
    }
    fn target_of(&self, _: u32) -> usize {
        0
    }
    fn can_accept(&self, _: usize) -> bool {
        Dram::can_accept(self)
    }
    fn accept(&mut self, _: usize, req: MemReq, src: u32, ram: &mut Ram) {
        Dram::accept(self, MemReq { src, ..req }, ram)
    }
    fn single_grant(&self) -> bool {
        false
    }
}

/// Round-robin arbitration from the memory queues of `sources` into `sink`.
fn arbitrate(sources: &mut [&mut Bank], rr: &mut [usize], sink: &mut dyn Sink, ram: &mut Ram) {
    let n = sources.len();
    if n == 0 {
        return;
    }
    for t in 0..sink.targets() {
        loop {
            let mut granted = false;
            for k in 0..n {
                let s = (rr[t] + k) % n;
                let Some(head) = sources[s].memq_front() else { continue };
                if sink.target_of(head.line) != t || !sink.can_accept(t) {
                    continue;
                }
                let req = sources[s].memq_pop().unwrap();
                sink.accept(t, req, s as u32, ram);
                rr[t] = (s + 1) % n;
                granted = true;
                break;
            }
            if !granted || sink.single_grant() {
                break;
            }
        }
    }
}

#[derive(Debug)]
pub struct MemSystem {
    pub ram: Ram,
    l1i: Vec<Cache>,
    l1d: Vec<Cache>,
    ports: Vec<CorePort>,
    l2: Option<Cache>,
    l3: Option<Cache>,
    dram: Dram,
    rr_l2: Vec<usize>,
    rr_l3: Vec<usize>,
    rr_dram: Vec<usize>,
    completions: Vec<Vec<Completion>>,
}

impl MemSystem {
    pub fn new(cfg: &ProcessorConfig) -> Self {
        let cores = cfg.cores as usize;
        let l2 = cfg.l2_enable.then(|| Cache::new(cfg.l2));
        let l3 = (cfg.l2_enable && cfg.l3_enable).then(|| Cache::new(cfg.l3));
        MemSystem {
            ram: Ram::new(cfg.ram_base, cfg.ram_size),
            l1i: (0..cores).map(|_| Cache::new(cfg.icache)).collect(),
            l1d: (0..cores).map(|_| Cache::new(cfg.dcache)).collect(),
            ports: (0..cores).map(|_| CorePort::new(cfg.lsu_queue)).collect(),
            rr_l2: vec![0; l2.as_ref().map_or(0, |c| c.banks.len())],
            rr_l3: vec![0; l3.as_ref().map_or(0, |c| c.banks.len())],
            rr_dram: vec![0],
            l2,
            l3,
            dram: Dram::new(cfg.mem_latency, cfg.mem_bandwidth, cfg.dcache.line_size),
            completions: vec![Vec::new(); cores],
        }
    }

    pub fn cores(&self) -> usize {
        self.l1d.len()
    }

    /// Checks the instruction cache. A hit counts as a lookup.
    pub fn icache_probe(&mut self, core: usize, addr: u32) -> bool {
        let c = &mut self.l1i[core];
        if c.probe(addr) {
            let b = c.bank_of(addr);
            let s = &mut c.banks[b].stats;
            s.lookups += 1;
            s.hits += 1;
            s.lane_accesses += 1;
            true
        } else {
            false
        }
    }

    /// Sends an instruction fetch into the I-cache pipeline.
    pub fn icache_fetch(&mut self, core: usize, tag: RequestTag, addr: u32) -> bool {
        let c = &mut self.l1i[core];
        let b = c.bank_of(addr);
        if !c.banks[b].can_accept() {
            return false;
        }
        let line = c.line_of(addr);
        let lane = LaneAccess { lane: 0, addr: addr & !3, wmask: 0, data: 0 };
        c.banks[b].push(BankOp { line, payload: Payload::Core { tag, lanes: vec![lane] } });
        true
    }

    pub fn can_submit(&self, core: usize) -> bool {
        self.ports[core].can_submit()
    }

    /// Queues a batch of lane accesses for the data cache.
    pub fn submit(&mut self, core: usize, tag: RequestTag, lanes: Vec<LaneAccess>) {
        self.ports[core].submit(tag, lanes);
    }

    pub fn take_completions(&mut self, core: usize) -> Vec<Completion> {
        std::mem::take(&mut self.completions[core])
    }

    /// No data-cache traffic of this core is queued or in flight.
    pub fn core_quiescent(&self, core: usize) -> bool {
        self.ports[core].is_idle() && self.completions[core].iter().all(|c| c.tag.kind == ReqKind::Ifetch)
            && self.l1d[core].is_idle()
    }

    pub fn start_flush(&mut self, core: usize) {
        self.l1d[core].start_flush();
    }

    pub fn flush_done(&self, core: usize) -> bool {
        self.l1d[core].flush_done()
    }

    pub fn is_idle(&self) -> bool {
        self.l1i.iter().chain(&self.l1d).all(Cache::is_idle)
            && self.ports.iter().all(CorePort::is_idle)
            && self.l2.as_ref().is_none_or(Cache::is_idle)
            && self.l3.as_ref().is_none_or(Cache::is_idle)
            && self.dram.is_idle()
            && self.completions.iter().all(Vec::is_empty)
    }

    pub fn step(&mut self, now: u64) {
        for c in 0..self.cores() {
            self.ports[c].issue(&mut self.l1d[c]);
            for bank in &mut self.l1i[c].banks {
                bank.cycle();
                for o in bank.take_outputs() {
                    if let BankOutput::Core { tag, data } = o {
                        self.completions[c].push(Completion { tag, data });
                    }
                }
            }
            for bank in &mut self.l1d[c].banks {
                bank.cycle();
                for o in bank.take_outputs() {
                    if let BankOutput::Core { tag, data } = o {
                        self.ports[c].respond(tag, data);
                    }
                }
            }
            self.completions[c].extend(self.ports[c].take_ready());
        }

        let Self { l1i, l1d, l2, l3, dram, ram, rr_l2, rr_l3, rr_dram, .. } = self;
        let mut l1_sources: Vec<&mut Bank> = Vec::new();
        for (i, d) in l1i.iter_mut().zip(l1d.iter_mut()) {
            l1_sources.extend(i.banks.iter_mut());
            l1_sources.extend(d.banks.iter_mut());
        }
        dram.begin_cycle(now);
        match l2 {
            None => {
                arbitrate(&mut l1_sources, rr_dram, dram, ram);
                while let Some(r) = dram.pop_ready() {
                    l1_sources[r.src as usize].deliver(r);
                }
            }
            Some(l2) => {
                arbitrate(&mut l1_sources, rr_l2, l2, ram);
                cycle_shared(l2, &mut l1_sources);
                let mut l2_sources: Vec<&mut Bank> = l2.banks.iter_mut().collect();
                match l3 {
                    None => {
                        arbitrate(&mut l2_sources, rr_dram, dram, ram);
                        while let Some(r) = dram.pop_ready() {
                            l2_sources[r.src as usize].deliver(r);
                        }
                    }
                    Some(l3) => {
                        arbitrate(&mut l2_sources, rr_l3, l3, ram);
                        cycle_shared(l3, &mut l2_sources);
                        let mut l3_sources: Vec<&mut Bank> = l3.banks.iter_mut().collect();
                        arbitrate(&mut l3_sources, rr_dram, dram, ram);
                        while let Some(r) = dram.pop_ready() {
                            l3_sources[r.src as usize].deliver(r);
                        }
                    }
                }
            }
        }
    }

    /// Writes every dirty line back to RAM without consuming simulated
    /// time, innermost levels last so the newest copy wins. Only meaningful
    /// once the hierarchy is idle.
    pub fn drain_to_ram(&mut self) {
        let ram = &mut self.ram;
        for c in self.l3.iter_mut().chain(self.l2.iter_mut()).chain(self.l1d.iter_mut()) {
            for b in &mut c.banks {
                b.drain_dirty(|line, data, mask| ram.write_masked(line, data, mask));
            }
        }
    }

    /// Reads a word as the memory system currently sees it, looking through
    /// dirty cache copies of `core`'s L1D, then L2 and L3, then RAM.
    pub fn peek_u32(&self, core: usize, addr: u32) -> u32 {
        let levels = [Some(&self.l1d[core]), self.l2.as_ref(), self.l3.as_ref()];
        for c in levels.into_iter().flatten() {
            if let Some(v) = c.banks[c.bank_of(addr)].peek_dirty_word(addr) {
                return v;
            }
        }
        self.ram.read_u32(addr & !3)
    }

    pub fn stats(&self) -> MemStats {
        let DramStats { reads, writes } = self.dram.stats;
        let plain = |c: &Cache| {
            let s = c.bank_stats();
            c.stats(s.lookups, s.lookups, 0)
        };
        MemStats {
            l1i: self.l1i.iter().map(plain).collect(),
            l1d: self
                .l1d
                .iter()
                .zip(&self.ports)
                .map(|(c, p)| c.stats(p.stats.requests, p.stats.clean, p.stats.deferrals))
                .collect(),
            l2: self.l2.as_ref().map(plain),
            l3: self.l3.as_ref().map(plain),
            dram_reads: reads,
            dram_writes: writes,
        }
    }
}

fn cycle_shared(cache: &mut Cache, upper: &mut [&mut Bank]) {
    for bank in &mut cache.banks {
        bank.cycle();
        for o in bank.take_outputs() {
            if let BankOutput::Line(r) = o {
                upper[r.src as usize].deliver(r);
            }
        }
    }
}
