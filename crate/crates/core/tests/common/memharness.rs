//! Drives a `MemSystem` with random lane traffic and checks every load and
//! the final memory image against a flat functional memory.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rvsimt::config::ProcessorConfig;
use rvsimt::mem::{LaneAccess, MemSystem, ReqKind, RequestTag};

pub struct TrafficShape {
    /// Bytes of address space touched, starting at the RAM base.
    pub region: u32,
    /// Probability that a core submits a batch in a given cycle.
    pub rate: f64,
    pub max_lanes: u16,
}

pub struct Report {
    pub cycles: u64,
    pub batches: u64,
    pub lane_requests: u64,
    pub max_stall: u64,
}

pub struct MemHarness {
    pub cfg: ProcessorConfig,
    pub mem: MemSystem,
    oracle: HashMap<u32, u32>,
    expect: BTreeMap<u64, (u32, Vec<(u16, Option<u32>)>)>,
    rng: ChaCha8Rng,
    token: u64,
    now: u64,
}

impl MemHarness {
    pub fn new(cfg: ProcessorConfig, seed: u64) -> Self {
        cfg.validate().expect("valid config");
        MemHarness {
            mem: MemSystem::new(&cfg),
            cfg,
            oracle: HashMap::new(),
            expect: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            token: 0,
            now: 0,
        }
    }

    fn oracle_word(&self, addr: u32) -> u32 {
        self.oracle.get(&addr).copied().unwrap_or(0)
    }

    /// Builds one random batch for `core`. Every word is owned by exactly one
    /// core (word index modulo core count), so per-core program order is the
    /// only ordering the oracle needs.
    fn random_batch(&mut self, core: u32, shape: &TrafficShape) -> (bool, Vec<LaneAccess>) {
        let cores = self.cfg.cores;
        let line = self.cfg.dcache.line_size;
        let words = shape.region / 4;
        let base = self.cfg.ram_base;
        let n = self.rng.gen_range(1..=shape.max_lanes);
        let store = self.rng.gen_bool(0.4);
        let pattern = self.rng.gen_range(0..4);
        let anchor: u32 = self.rng.gen_range(0..words);
        let mut seen = std::collections::BTreeSet::new();
        let mut lanes = Vec::new();
        for lane in 0..n {
            let w = match pattern {
                0 => self.rng.gen_range(0..words),
                // Same line.
                1 => (anchor & !(line / 4 - 1)) + self.rng.gen_range(0..line / 4),
                // Unit stride.
                2 => (anchor + lane as u32 * cores) % words,
                // Line stride: every lane in another line of the same bank.
                _ => (anchor + lane as u32 * line / 4 * self.cfg.dcache.banks) % words,
            };
            let w = (w - w % cores + core) % words;
            let w = w - w % cores + core;
            if w >= words {
                continue;
            }
            if store && !seen.insert(w) {
                continue;
            }
            let addr = base + 4 * w;
            let wmask = if store {
                match self.rng.gen_range(0..3) {
                    0 => 0xF,
                    1 => 1 << self.rng.gen_range(0..4),
                    _ => 0x3 << (2 * self.rng.gen_range(0..2)),
                }
            } else {
                0
            };
            lanes.push(LaneAccess { lane, addr, wmask, data: self.rng.gen() });
        }
        (store, lanes)
    }

    fn submit(&mut self, core: u32, store: bool, lanes: Vec<LaneAccess>) {
        let mut exp = Vec::new();
        for l in &lanes {
            let old = self.oracle_word(l.addr);
            if store {
                let mut bytes = old.to_le_bytes();
                let new = l.data.to_le_bytes();
                for b in 0..4 {
                    if l.wmask & (1 << b) != 0 {
                        bytes[b] = new[b];
                    }
                }
                self.oracle.insert(l.addr, u32::from_le_bytes(bytes));
                exp.push((l.lane, None));
            } else {
                exp.push((l.lane, Some(old)));
            }
        }
        exp.sort();
        self.token += 1;
        let kind = if store { ReqKind::Store } else { ReqKind::Load };
        let tag = RequestTag { pc: 0, wid: 0, core, kind, token: self.token };
        self.expect.insert(self.token, (core, exp));
        self.mem.submit(core as usize, tag, lanes);
    }

    fn collect(&mut self) -> usize {
        let mut n = 0;
        for c in 0..self.cfg.cores {
            for done in self.mem.take_completions(c as usize) {
                let (core, exp) = self.expect.remove(&done.tag.token).expect("unknown or duplicate token");
                assert_eq!(core, c, "response routed to wrong core");
                assert_eq!(exp.len(), done.data.len(), "lane count mismatch");
                for ((lane, want), &(got_lane, got)) in exp.iter().zip(&done.data) {
                    assert_eq!(*lane, got_lane);
                    if let Some(w) = want {
                        assert_eq!(*w, got, "load value mismatch on lane {lane} (token {})", done.tag.token);
                    }
                }
                n += 1;
            }
        }
        n
    }

    /// Submits `batches` random batches, then drains. Panics on any
    /// mismatch or when no request completes for `watchdog` cycles.
    pub fn run(&mut self, batches: u64, shape: &TrafficShape, watchdog: u64) -> Report {
        self.run_until(batches, u64::MAX, shape, watchdog)
    }

    /// Like [`run`](Self::run) but stops submitting at cycle `submit_until`.
    pub fn run_until(&mut self, batches: u64, submit_until: u64, shape: &TrafficShape, watchdog: u64) -> Report {
        let mut submitted = 0;
        let mut lane_requests = 0;
        let mut last_progress = self.now;
        let mut max_stall = 0;
        loop {
            let submitting = submitted < batches && self.now < submit_until;
            if !submitting && self.expect.is_empty() && self.mem.is_idle() {
                break;
            }
            for c in 0..self.cfg.cores {
                if submitting && self.rng.gen_bool(shape.rate) && self.mem.can_submit(c as usize) {
                    let (store, lanes) = self.random_batch(c, shape);
                    lane_requests += lanes.len() as u64;
                    self.submit(c, store, lanes);
                    submitted += 1;
                }
            }
            self.mem.step(self.now);
            self.now += 1;
            if self.collect() > 0 || self.expect.is_empty() {
                max_stall = max_stall.max(self.now - last_progress);
                last_progress = self.now;
            }
            assert!(
                self.now - last_progress < watchdog,
                "no progress for {watchdog} cycles at cycle {} ({} outstanding)",
                self.now,
                self.expect.len()
            );
        }
        Report { cycles: self.now, batches: submitted, lane_requests, max_stall }
    }

    /// Writes back all caches and compares RAM with the oracle.
    pub fn check_final_memory(&mut self) {
        self.mem.drain_to_ram();
        let mut addrs: Vec<_> = self.oracle.keys().copied().collect();
        addrs.sort();
        for a in addrs {
            assert_eq!(self.mem.ram.read_u32(a), self.oracle[&a], "final memory mismatch at {a:#x}");
        }
    }

    pub fn check_mshr_bounds(&self) {
        let s = self.mem.stats();
        for c in s.l1d.iter() {
            assert!(c.mshr_high_water <= self.cfg.dcache.mshr_entries);
        }
        if let Some(l2) = s.l2 {
            assert!(l2.mshr_high_water <= self.cfg.l2.mshr_entries);
        }
        if let Some(l3) = s.l3 {
            assert!(l3.mshr_high_water <= self.cfg.l3.mshr_entries);
        }
    }
}

/// The twelve cache configurations used for transparency checks.
pub fn cache_matrix() -> Vec<(&'static str, ProcessorConfig)> {
    let mut out = Vec::new();
    let base = ProcessorConfig::default;
    let mut push = |name, f: &dyn Fn(&mut ProcessorConfig)| {
        let mut c = base();
        f(&mut c);
        out.push((name, c));
    };
    push("default", &|_| {});
    push("1bank-1port", &|c| c.dcache.banks = 1);
    push("8banks-4ports", &|c| {
        c.dcache.banks = 8;
        c.dcache.ports = 4;
    });
    push("2way-lru", &|c| {
        c.dcache.ways = 2;
        c.dcache.ports = 2;
    });
    push("4way-tiny", &|c| {
        c.dcache.size = 1024;
        c.dcache.ways = 4;
    });
    push("direct-tiny", &|c| c.dcache.size = 256);
    push("mshr1-queues-min", &|c| {
        c.dcache.mshr_entries = 1;
        c.dcache.input_queue = 1;
        c.dcache.mem_queue = 2;
        c.lsu_queue = 1;
    });
    push("line64", &|c| {
        for cc in [&mut c.icache, &mut c.dcache] {
            cc.line_size = 64;
        }
        c.dcache.size = 2048;
    });
    push("slow-dram-bw2", &|c| {
        c.mem_latency = 50;
        c.mem_bandwidth = 2;
    });
    push("2cores-l2", &|c| {
        c.cores = 2;
        c.dcache.size = 512;
        c.l2_enable = true;
        c.l2.size = 2048;
        c.l2.banks = 2;
    });
    push("4cores-l2-l3", &|c| {
        c.cores = 4;
        c.dcache.size = 512;
        c.dcache.ports = 2;
        c.l2_enable = true;
        c.l2.size = 1024;
        c.l3_enable = true;
        c.l3.size = 4096;
        c.l3.banks = 2;
    });
    push("2cores-l2-min", &|c| {
        c.cores = 2;
        c.dcache.size = 256;
        c.dcache.mshr_entries = 2;
        c.l2_enable = true;
        c.l2.size = 512;
        c.l2.banks = 1;
        c.l2.mshr_entries = 1;
        c.l2.input_queue = 1;
        c.l2.mem_queue = 2;
    });
    out
}

/// Smallest legal queues everywhere, several cores and a three-level
/// hierarchy: the configurations most prone to resource deadlock.
pub fn minimum_queue_configs() -> Vec<(&'static str, ProcessorConfig)> {
    let min = |c: &mut rvsimt::config::CacheConfig| {
        c.mshr_entries = 1;
        c.input_queue = 1;
        c.mem_queue = 2;
    };
    let mut a = ProcessorConfig::default();
    min(&mut a.dcache);
    a.dcache.size = 256;
    a.lsu_queue = 1;
    let mut b = a.clone();
    b.cores = 4;
    b.l2_enable = true;
    b.l2.size = 512;
    b.l2.banks = 2;
    min(&mut b.l2);
    let mut c = b.clone();
    c.l3_enable = true;
    c.l3.size = 1024;
    c.l3.banks = 1;
    min(&mut c.l3);
    c.dcache.ports = 4;
    c.mem_latency = 3;
    vec![("l1-only", a), ("4cores-l2", b), ("4cores-l2-l3", c)]
}
