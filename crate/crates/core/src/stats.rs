//! Run statistics and their JSON form. The key set is fixed and does not
//! depend on the configuration.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{ConfigValue, ProcessorConfig};
use crate::mem::cache::CacheStats;
use crate::mem::MemStats;
use crate::texture::TexStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Completed,
    Timeout,
    Fault,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheReport {
    pub l1i: Vec<CacheStats>,
    pub l1d: Vec<CacheStats>,
    pub l2: Option<CacheStats>,
    pub l3: Option<CacheStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DramReport {
    pub reads: u64,
    pub writes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub config: BTreeMap<&'static str, ConfigValue>,
    pub cycles: u64,
    /// Wavefront instructions issued.
    pub instructions: u64,
    pub ipc_total: f64,
    pub ipc_per_core: Vec<f64>,
    /// Thread instructions per cycle.
    pub lane_ipc: f64,
    pub caches: CacheReport,
    pub texture: TexStats,
    pub dram: DramReport,
    pub console: String,
    pub terminated: Termination,
    pub fault: Option<String>,
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

impl RunStats {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cfg: &ProcessorConfig,
        cycles: u64,
        per_core: Vec<(u64, u64)>,
        mem: MemStats,
        texture: TexStats,
        console: &[u8],
        terminated: Termination,
        fault: Option<String>,
    ) -> Self {
        let instructions = per_core.iter().map(|c| c.0).sum();
        let lanes = per_core.iter().map(|c| c.1).sum();
        RunStats {
            config: cfg.entries(),
            cycles,
            instructions,
            ipc_total: ratio(instructions, cycles),
            ipc_per_core: per_core.iter().map(|c| ratio(c.0, cycles)).collect(),
            lane_ipc: ratio(lanes, cycles),
            caches: CacheReport { l1i: mem.l1i, l1d: mem.l1d, l2: mem.l2, l3: mem.l3 },
            texture,
            dram: DramReport { reads: mem.dram_reads, writes: mem.dram_writes },
            console: String::from_utf8_lossy(console).into_owned(),
            terminated,
            fault,
        }
    }

    /// Lane-weighted bank utilization over every core's data cache.
    pub fn dcache_utilization(&self) -> f64 {
        let req: u64 = self.caches.l1d.iter().map(|c| c.requests).sum();
        let util: f64 = self.caches.l1d.iter().map(|c| c.bank_utilization * c.requests as f64).sum();
        if req == 0 {
            0.0
        } else {
            util / req as f64
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}
