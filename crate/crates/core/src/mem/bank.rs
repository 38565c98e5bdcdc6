//! One cache bank: tag and data stores, MSHR, input/fill/memory queues and
//! the four-stage `schedule -> tag -> data -> response` pipeline.
//!
//! Functional effects (hit/miss resolution, line installation, data access)
//! happen when an operation enters the tag stage. Later stages only delay
//! the resulting responses and memory requests, so at most one tag access
//! and one data access occur per bank per cycle.

use std::collections::VecDeque;

use super::{BankOutput, LaneAccess, MemReq, MemRsp, RequestTag};
use crate::config::CacheConfig;

/// Work carried by a bank operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// Word accesses from a core (up to one per virtual port).
    Core { tag: RequestTag, lanes: Vec<LaneAccess> },
    /// Whole-line read or write from an upper cache level.
    Line { write: Option<(Box<[u8]>, u128)>, src: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankOp {
    pub line: u32,
    pub payload: Payload,
}

#[derive(Debug)]
struct MshrEntry {
    line: u32,
    pending: VecDeque<BankOp>,
    filled: bool,
    replays_in_flight: u32,
}

#[derive(Debug, Clone, Copy, Default)]
struct LineMeta {
    line: u32,
    /// One bit per byte written since the line was filled.
    dirty: u128,
    last_use: u64,
}

#[derive(Debug)]
enum Work {
    Fresh(BankOp),
    Replay(BankOp),
    Fill(u32, Box<[u8]>),
    /// Produced by the tag stage: nothing left to do but wait.
    Done,
}

#[derive(Debug)]
struct Slot {
    work: Work,
    emit: Option<MemReq>,
    output: Option<BankOutput>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BankStats {
    pub lookups: u64,
    pub hits: u64,
    pub misses: u64,
    pub mshr_merges: u64,
    pub lane_accesses: u64,
    pub fills: u64,
    pub writebacks: u64,
    pub mem_reads: u64,
    pub mshr_high_water: u32,
}

#[derive(Debug)]
pub struct Bank {
    cfg: CacheConfig,
    banks: u32,
    sets: u32,
    meta: Vec<Option<LineMeta>>,
    data: Vec<u8>,
    input: VecDeque<BankOp>,
    fills: VecDeque<(u32, Box<[u8]>)>,
    mshr: Vec<MshrEntry>,
    pipe: [Option<Slot>; 4],
    memq: VecDeque<MemReq>,
    out: Vec<BankOutput>,
    outstanding_writes: u32,
    flush_cursor: Option<usize>,
    clock: u64,
    pub stats: BankStats,
}

const SCHED: usize = 0;
const TAG: usize = 1;
const RSP: usize = 3;

impl Bank {
    pub fn new(cfg: CacheConfig) -> Self {
        let sets = cfg.sets_per_bank();
        let frames = (sets * cfg.ways) as usize;
        Bank {
            cfg,
            banks: cfg.banks,
            sets,
            meta: vec![None; frames],
            data: vec![0; frames * cfg.line_size as usize],
            input: VecDeque::new(),
            fills: VecDeque::new(),
            mshr: Vec::new(),
            pipe: [None, None, None, None],
            memq: VecDeque::new(),
            out: Vec::new(),
            outstanding_writes: 0,
            flush_cursor: None,
            clock: 0,
            stats: BankStats::default(),
        }
    }

    fn line_bytes(&self) -> usize {
        self.cfg.line_size as usize
    }

    fn set_of(&self, line: u32) -> u32 {
        (line / self.cfg.line_size / self.banks) % self.sets
    }

    fn frames(&self, line: u32) -> std::ops::Range<usize> {
        let s = (self.set_of(line) * self.cfg.ways) as usize;
        s..s + self.cfg.ways as usize
    }

    fn lookup(&self, line: u32) -> Option<usize> {
        self.frames(line).find(|&f| self.meta[f].is_some_and(|m| m.line == line))
    }

    /// Whether the line currently resides in the bank.
    pub fn probe(&self, line: u32) -> bool {
        self.lookup(line).is_some()
    }

    fn is_pinned(&self, line: u32) -> bool {
        self.mshr.iter().any(|e| e.line == line && e.filled)
    }

    fn pending_emits(&self) -> usize {
        self.pipe.iter().flatten().filter(|s| s.emit.is_some()).count()
    }

    pub fn mshr_live(&self) -> usize {
        self.mshr.len()
    }

    /// Early-full admission check used by the bank selector and arbiters.
    pub fn can_accept(&self) -> bool {
        self.flush_cursor.is_none()
            && self.input.len() < self.cfg.input_queue as usize
            && self.mshr.len() < self.cfg.mshr_entries as usize
            && self.memq.len() + 1 < self.cfg.mem_queue as usize
    }

    pub fn push(&mut self, op: BankOp) {
        debug_assert!(self.input.len() < self.cfg.input_queue as usize);
        self.input.push_back(op);
    }

    /// Delivers a response from the next level.
    pub fn deliver(&mut self, rsp: MemRsp) {
        match rsp.data {
            Some(data) => self.fills.push_back((rsp.line, data)),
            None => {
                debug_assert!(self.outstanding_writes > 0);
                self.outstanding_writes -= 1;
            }
        }
    }

    pub fn memq_front(&self) -> Option<&MemReq> {
        self.memq.front()
    }

    pub fn memq_pop(&mut self) -> Option<MemReq> {
        self.memq.pop_front()
    }

    pub fn take_outputs(&mut self) -> std::vec::Drain<'_, BankOutput> {
        self.out.drain(..)
    }

    /// True when nothing is queued, in flight or awaiting a response.
    pub fn is_idle(&self) -> bool {
        self.input.is_empty()
            && self.fills.is_empty()
            && self.mshr.is_empty()
            && self.pipe.iter().all(Option::is_none)
            && self.memq.is_empty()
            && self.out.is_empty()
            && self.outstanding_writes == 0
            && self.flush_cursor.is_none()
    }

    /// Begins writing back and invalidating every line. The caller must
    /// have drained its own traffic first.
    pub fn start_flush(&mut self) {
        self.flush_cursor = Some(0);
    }

    pub fn flush_done(&self) -> bool {
        self.flush_cursor.is_none() && self.outstanding_writes == 0 && self.memq.is_empty()
    }

    pub fn cycle(&mut self) {
        self.clock += 1;
        // Response stage.
        if let Some(slot) = self.pipe[RSP].take() {
            if let Some(req) = slot.emit {
                debug_assert!(self.memq.len() < self.cfg.mem_queue as usize, "memory queue overrun");
                self.memq.push_back(req);
            }
            if let Some(o) = slot.output {
                self.out.push(o);
            }
        }
        self.pipe.rotate_right(1);
        if let Some(slot) = self.pipe[TAG].as_mut() {
            let work = std::mem::replace(&mut slot.work, Work::Done);
            let (emit, output) = self.tag_stage(work);
            let slot = self.pipe[TAG].as_mut().unwrap();
            slot.emit = emit;
            slot.output = output;
        }
        self.pipe[SCHED] = self.schedule().map(|work| Slot { work, emit: None, output: None });
        if self.pipe.iter().all(Option::is_none) {
            self.step_flush();
        }
        self.stats.mshr_high_water = self.stats.mshr_high_water.max(self.mshr.len() as u32);
    }

    fn schedule(&mut self) -> Option<Work> {
        if let Some(e) = self.mshr.iter_mut().find(|e| e.filled && !e.pending.is_empty()) {
            e.replays_in_flight += 1;
            return Some(Work::Replay(e.pending.pop_front().unwrap()));
        }
        let cap = self.cfg.mem_queue as usize;
        let used = self.memq.len() + self.pending_emits();
        if let Some(&(line, _)) = self.fills.front() {
            let free_frame = self.frames(line).any(|f| match self.meta[f] {
                None => true,
                Some(m) => !self.is_pinned(m.line),
            });
            if free_frame && used < cap {
                let (line, data) = self.fills.pop_front().unwrap();
                return Some(Work::Fill(line, data));
            }
        }
        if !self.input.is_empty()
            && self.mshr.len() < self.cfg.mshr_entries as usize
            && used + 1 < cap
        {
            return Some(Work::Fresh(self.input.pop_front().unwrap()));
        }
        None
    }

    fn tag_stage(&mut self, work: Work) -> (Option<MemReq>, Option<BankOutput>) {
        match work {
            Work::Done => (None, None),
            Work::Fresh(op) => {
                self.stats.lookups += 1;
                if let Some(i) = self.mshr.iter().position(|e| e.line == op.line) {
                    let e = &mut self.mshr[i];
                    if e.filled && e.pending.is_empty() {
                        self.stats.hits += 1;
                        return (None, Some(self.access(op)));
                    }
                    e.pending.push_back(op);
                    self.stats.misses += 1;
                    self.stats.mshr_merges += 1;
                    return (None, None);
                }
                if self.lookup(op.line).is_some() {
                    self.stats.hits += 1;
                    return (None, Some(self.access(op)));
                }
                self.stats.misses += 1;
                self.stats.mem_reads += 1;
                let line = op.line;
                self.mshr.push(MshrEntry {
                    line,
                    pending: VecDeque::from([op]),
                    filled: false,
                    replays_in_flight: 0,
                });
                (Some(MemReq { line, write: None, src: 0 }), None)
            }
            Work::Replay(op) => {
                let line = op.line;
                let out = self.access(op);
                let i = self.mshr.iter().position(|e| e.line == line).expect("replay without MSHR entry");
                let e = &mut self.mshr[i];
                e.replays_in_flight -= 1;
                if e.pending.is_empty() && e.replays_in_flight == 0 {
                    self.mshr.remove(i);
                }
                (None, Some(out))
            }
            Work::Fill(line, data) => {
                self.stats.fills += 1;
                let frame = self.victim(line);
                let lb = self.line_bytes();
                let mut emit = None;
                if let Some(m) = self.meta[frame] {
                    if m.dirty != 0 {
                        let old = self.data[frame * lb..(frame + 1) * lb].to_vec().into_boxed_slice();
                        emit = Some(MemReq { line: m.line, write: Some((old, m.dirty)), src: 0 });
                        self.stats.writebacks += 1;
                        self.outstanding_writes += 1;
                    }
                }
                self.data[frame * lb..(frame + 1) * lb].copy_from_slice(&data);
                self.meta[frame] = Some(LineMeta { line, dirty: 0, last_use: self.clock });
                let e = self.mshr.iter_mut().find(|e| e.line == line).expect("fill without MSHR entry");
                debug_assert!(!e.filled);
                e.filled = true;
                (emit, None)
            }
        }
    }

    fn victim(&self, line: u32) -> usize {
        let frames = self.frames(line);
        if let Some(f) = frames.clone().find(|&f| self.meta[f].is_none()) {
            return f;
        }
        frames
            .filter(|&f| !self.is_pinned(self.meta[f].unwrap().line))
            .min_by_key(|&f| self.meta[f].unwrap().last_use)
            .expect("fill scheduled without a free frame")
    }

    fn access(&mut self, op: BankOp) -> BankOutput {
        let frame = self.lookup(op.line).expect("access to absent line");
        let lb = self.line_bytes();
        let m = self.meta[frame].as_mut().unwrap();
        m.last_use = self.clock;
        let line = &mut self.data[frame * lb..(frame + 1) * lb];
        match op.payload {
            Payload::Core { tag, lanes } => {
                let mut data = Vec::with_capacity(lanes.len());
                for l in &lanes {
                    let off = (l.addr as usize & (lb - 1)) & !3;
                    let word = &mut line[off..off + 4];
                    let old = u32::from_le_bytes(word.try_into().unwrap());
                    if l.wmask != 0 {
                        let bytes = l.data.to_le_bytes();
                        for (b, w) in word.iter_mut().enumerate() {
                            if l.wmask & (1 << b) != 0 {
                                *w = bytes[b];
                                m.dirty |= 1 << (off + b);
                            }
                        }
                    }
                    data.push((l.lane, old));
                }
                self.stats.lane_accesses += lanes.len() as u64;
                BankOutput::Core { tag, data }
            }
            Payload::Line { write, src } => {
                self.stats.lane_accesses += 1;
                match write {
                    Some((bytes, mask)) => {
                        for (i, (d, s)) in line.iter_mut().zip(bytes.iter()).enumerate() {
                            if mask & (1 << i) != 0 {
                                *d = *s;
                            }
                        }
                        m.dirty |= mask;
                        BankOutput::Line(MemRsp { line: op.line, data: None, src })
                    }
                    None => BankOutput::Line(MemRsp {
                        line: op.line,
                        data: Some(line.to_vec().into_boxed_slice()),
                        src,
                    }),
                }
            }
        }
    }

    fn step_flush(&mut self) {
        let Some(mut cur) = self.flush_cursor else { return };
        let lb = self.line_bytes();
        while cur < self.meta.len() {
            match self.meta[cur] {
                Some(m) if m.dirty != 0 => {
                    if self.memq.len() >= self.cfg.mem_queue as usize {
                        break;
                    }
                    let old = self.data[cur * lb..(cur + 1) * lb].to_vec().into_boxed_slice();
                    self.memq.push_back(MemReq { line: m.line, write: Some((old, m.dirty)), src: 0 });
                    self.stats.writebacks += 1;
                    self.outstanding_writes += 1;
                    self.meta[cur] = None;
                    cur += 1;
                    // One writeback per cycle.
                    break;
                }
                _ => {
                    self.meta[cur] = None;
                    cur += 1;
                }
            }
        }
        self.flush_cursor = (cur < self.meta.len()).then_some(cur);
    }

    /// Writes every dirty line to `sink` and invalidates the bank, without
    /// consuming simulated time. Used to extract final memory state.
    pub fn drain_dirty(&mut self, mut sink: impl FnMut(u32, &[u8], u128)) {
        let lb = self.line_bytes();
        for f in 0..self.meta.len() {
            if let Some(m) = self.meta[f] {
                if m.dirty != 0 {
                    sink(m.line, &self.data[f * lb..(f + 1) * lb], m.dirty);
                }
            }
            self.meta[f] = None;
        }
    }

    /// Reads a word if the line is resident (for debugger-style inspection).
    pub fn peek_word(&self, addr: u32) -> Option<u32> {
        let lb = self.line_bytes();
        let line = addr & !(self.cfg.line_size - 1);
        let f = self.lookup(line)?;
        let off = f * lb + (addr as usize & (lb - 1) & !3);
        Some(u32::from_le_bytes(self.data[off..off + 4].try_into().unwrap()))
    }

    pub fn peek_dirty_word(&self, addr: u32) -> Option<u32> {
        let line = addr & !(self.cfg.line_size - 1);
        let f = self.lookup(line)?;
        let off = addr as usize & (self.line_bytes() - 1) & !3;
        if self.meta[f].unwrap().dirty >> off & 0xF != 0 {
            self.peek_word(addr)
        } else {
            None
        }
    }
}
