//! A banked cache: a set of independent [`Bank`]s with line-interleaved
//! address mapping.

use serde::Serialize;

use super::bank::{Bank, BankStats};
use crate::config::CacheConfig;

/// Line-interleaved bank mapping: `(address / line_size) mod banks`.
pub fn bank_index(addr: u32, line_size: u32, banks: u32) -> u32 {
    (addr / line_size) % banks
}

/// Aggregated statistics of one cache instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CacheStats {
    /// Word-level (lane) accesses served by the data store.
    pub accesses: u64,
    pub lookups: u64,
    pub hits: u64,
    pub misses: u64,
    pub mshr_merges: u64,
    pub fills: u64,
    pub writebacks: u64,
    pub mem_requests: u64,
    pub mshr_high_water: u32,
    /// Lane requests presented to the bank selector.
    pub requests: u64,
    /// Lane-cycles spent deferred by bank or port conflicts.
    pub deferrals: u64,
    /// Fraction of lane requests issued without ever meeting a conflict.
    pub bank_utilization: f64,
}

#[derive(Debug)]
pub struct Cache {
    pub cfg: CacheConfig,
    pub banks: Vec<Bank>,
}

impl Cache {
    pub fn new(cfg: CacheConfig) -> Self {
        Cache { cfg, banks: (0..cfg.banks).map(|_| Bank::new(cfg)).collect() }
    }

    pub fn line_of(&self, addr: u32) -> u32 {
        addr & !(self.cfg.line_size - 1)
    }

    pub fn bank_of(&self, addr: u32) -> usize {
        bank_index(addr, self.cfg.line_size, self.cfg.banks) as usize
    }

    pub fn probe(&self, addr: u32) -> bool {
        let line = self.line_of(addr);
        self.banks[self.bank_of(addr)].probe(line)
    }

    pub fn is_idle(&self) -> bool {
        self.banks.iter().all(Bank::is_idle)
    }

    pub fn start_flush(&mut self) {
        self.banks.iter_mut().for_each(Bank::start_flush);
    }

    pub fn flush_done(&self) -> bool {
        self.banks.iter().all(Bank::flush_done)
    }

    pub fn bank_stats(&self) -> BankStats {
        let mut t = BankStats::default();
        for b in &self.banks {
            let s = b.stats;
            t.lookups += s.lookups;
            t.hits += s.hits;
            t.misses += s.misses;
            t.mshr_merges += s.mshr_merges;
            t.lane_accesses += s.lane_accesses;
            t.fills += s.fills;
            t.writebacks += s.writebacks;
            t.mem_reads += s.mem_reads;
            t.mshr_high_water = t.mshr_high_water.max(s.mshr_high_water);
        }
        t
    }

    pub fn stats(&self, requests: u64, clean: u64, deferrals: u64) -> CacheStats {
        let s = self.bank_stats();
        CacheStats {
            accesses: s.lane_accesses,
            lookups: s.lookups,
            hits: s.hits,
            misses: s.misses,
            mshr_merges: s.mshr_merges,
            fills: s.fills,
            writebacks: s.writebacks,
            mem_requests: s.mem_reads + s.writebacks,
            mshr_high_water: s.mshr_high_water,
            requests,
            deferrals,
            bank_utilization: if requests == 0 { 0.0 } else { clean as f64 / requests as f64 },
        }
    }
}
