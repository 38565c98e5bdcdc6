use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::*;
use crate::config::ProcessorConfig;
use crate::error::FaultKind;
use crate::mem::{Completion, LaneAccess, MemSystem, ReqKind, RequestTag};

/// Cycles spent in the filter stage after the last texel returns.
const FILTER_CYCLES: u64 = 2;
/// Requests that may wait for address generation and memory.
const QUEUE_DEPTH: usize = 2;

/// One `tex` instruction: per active lane `(lane, u, v, lod)`.
#[derive(Debug, Clone)]
pub struct TexRequest {
    pub wid: u32,
    pub rd: u8,
    pub pc: u32,
    pub stage: TextureStage,
    pub lanes: Vec<(u16, i32, i32, i32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TexResult {
    pub wid: u32,
    pub rd: u8,
    pub pc: u32,
    pub values: Vec<(u16, u32)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TexStats {
    pub batches: u64,
    pub total_texels: u64,
    pub unique_texels: u64,
    pub latency_sum: u64,
    pub avg_latency: f64,
}

struct Job {
    wid: u32,
    rd: u8,
    pc: u32,
    format: TexFormat,
    lanes: Vec<(u16, Footprint)>,
    /// Addresses sent to memory.
    fetch: Vec<u32>,
    /// Per lane, the index into `fetch` of each footprint corner.
    slots: Vec<[u16; 4]>,
    accepted: u64,
    ready_at: u64,
}

/// Per-core texture unit: address generation, one outstanding texel batch
/// through the data cache, then a fixed-latency filter stage.
pub struct TextureUnit {
    ram_base: u32,
    ram_size: u32,
    latency: u64,
    dedup: bool,
    waiting: VecDeque<Job>,
    in_mem: Option<(u64, Job)>,
    filtering: VecDeque<(u64, u64, TexResult)>,
    pub stats: TexStats,
}

impl TextureUnit {
    pub fn new(cfg: &ProcessorConfig) -> Self {
        TextureUnit {
            ram_base: cfg.ram_base,
            ram_size: cfg.ram_size,
            latency: cfg.latency.tex.max(1) as u64,
            dedup: cfg.tex_dedup,
            waiting: VecDeque::new(),
            in_mem: None,
            filtering: VecDeque::new(),
            stats: TexStats::default(),
        }
    }

    pub fn can_accept(&self) -> bool {
        self.waiting.len() < QUEUE_DEPTH
    }

    pub fn is_idle(&self) -> bool {
        self.waiting.is_empty() && self.in_mem.is_none() && self.filtering.is_empty()
    }

    /// Generates addresses for `req`. Faults if a texel lies outside RAM or
    /// is not aligned to its own size.
    pub fn accept(&mut self, now: u64, req: TexRequest) -> Result<(), FaultKind> {
        debug_assert!(self.can_accept());
        let st = req.stage;
        let stride = st.stride();
        let mut lanes = Vec::with_capacity(req.lanes.len());
        for &(lane, u, v, lod) in &req.lanes {
            let fp = address_gen(&st, u, v, lod, st.filter);
            for &a in fp.addrs() {
                let end = a as u64 + stride as u64;
                if a < self.ram_base || end > self.ram_base as u64 + self.ram_size as u64 {
                    return Err(FaultKind::OutOfRange { addr: a });
                }
                if a % stride != 0 {
                    return Err(FaultKind::Misaligned { addr: a, size: stride });
                }
            }
            lanes.push((lane, fp));
        }
        let mut fetch = Vec::new();
        let mut seen: HashMap<u32, u16> = HashMap::new();
        let slots = lanes
            .iter()
            .map(|(_, fp)| {
                let mut s = [0u16; 4];
                for (k, &a) in fp.addrs().iter().enumerate() {
                    s[k] = if self.dedup {
                        *seen.entry(a).or_insert_with(|| {
                            fetch.push(a);
                            fetch.len() as u16 - 1
                        })
                    } else {
                        fetch.push(a);
                        fetch.len() as u16 - 1
                    };
                }
                s
            })
            .collect();
        self.stats.total_texels += lanes.iter().map(|(_, fp)| fp.count as u64).sum::<u64>();
        self.waiting.push_back(Job {
            wid: req.wid,
            rd: req.rd,
            pc: req.pc,
            format: st.format,
            lanes,
            fetch,
            slots,
            accepted: now,
            ready_at: now + self.latency,
        });
        Ok(())
    }

    /// Advances the unit one cycle and returns finished instructions.
    pub fn step(&mut self, now: u64, core: usize, mem: &mut MemSystem, token: &mut u64) -> Vec<TexResult> {
        let mut out = vec![];
        while self.filtering.front().is_some_and(|f| f.0 <= now) {
            let (_, accepted, r) = self.filtering.pop_front().unwrap();
            self.stats.batches += 1;
            self.stats.latency_sum += now - accepted;
            self.stats.avg_latency = self.stats.latency_sum as f64 / self.stats.batches as f64;
            out.push(r);
        }
        if self.in_mem.is_none() && self.waiting.front().is_some_and(|j| j.ready_at <= now) && mem.can_submit(core) {
            let job = self.waiting.pop_front().unwrap();
            *token += 1;
            let tag = RequestTag { pc: job.pc, wid: job.wid, core: core as u32, kind: ReqKind::Texel, token: *token };
            let lanes = job
                .fetch
                .iter()
                .enumerate()
                .map(|(i, &addr)| LaneAccess { lane: i as u16, addr, wmask: 0, data: 0 })
                .collect();
            self.stats.unique_texels += job.fetch.len() as u64;
            mem.submit(core, tag, lanes);
            self.in_mem = Some((*token, job));
        }
        out
    }

    /// Consumes the texel batch returned by the data cache.
    pub fn complete(&mut self, now: u64, c: Completion) {
        let (token, job) = self.in_mem.take().expect("texel response with no batch in flight");
        debug_assert_eq!(token, c.tag.token);
        let mut words = vec![0u32; job.fetch.len()];
        for (lane, w) in c.data {
            words[lane as usize] = w;
        }
        let stride = job.format.stride();
        let texel = |i: u16| {
            let a = job.fetch[i as usize];
            let raw = words[i as usize] >> (8 * (a & 3));
            let raw = if stride == 4 { raw } else { raw & ((1 << (8 * stride)) - 1) };
            convert_format(raw, job.format)
        };
        let values = job
            .lanes
            .iter()
            .zip(&job.slots)
            .map(|(&(lane, fp), s)| {
                let c: [[u8; 4]; 4] = if fp.count == 1 { [texel(s[0]); 4] } else { std::array::from_fn(|k| texel(s[k])) };
                (lane, pack_rgba(filter_bilinear(c, fp.frac_u, fp.frac_v)))
            })
            .collect();
        let r = TexResult { wid: job.wid, rd: job.rd, pc: job.pc, values };
        self.filtering.push_back((now + FILTER_CYCLES, job.accepted, r));
    }
}
