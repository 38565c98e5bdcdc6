//! Design-space sweeps: one fresh processor per point, points run in
//! parallel, results ordered by axis value.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::ProcessorConfig;
use crate::engine::Processor;
use crate::runtime::KernelImage;
use crate::stats::RunStats;

/// A kernel image plus the data it expects in RAM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub image: KernelImage,
    pub preload: Vec<(u32, Vec<u8>)>,
}

impl Workload {
    pub fn new(image: KernelImage) -> Self {
        Workload { image, preload: Vec::new() }
    }

    pub fn with_data(mut self, addr: u32, bytes: Vec<u8>) -> Self {
        self.preload.push((addr, bytes));
        self
    }

    /// Builds a processor for `cfg`, loads the workload and runs it.
    pub fn run(&self, cfg: &ProcessorConfig, max_cycles: u64) -> Result<(Processor, RunStats), String> {
        let mut p = Processor::new(cfg.clone()).map_err(|e| e.to_string())?;
        p.load_image(&self.image).map_err(|e| e.to_string())?;
        for (addr, bytes) in &self.preload {
            p.write_bytes(*addr, bytes).map_err(|e| e.to_string())?;
        }
        let stats = p.run(max_cycles);
        Ok((p, stats))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: u64,
    #[serde(flatten)]
    pub outcome: SweepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepOutcome {
    Stats(Box<RunStats>),
    Error(String),
}

impl SweepPoint {
    pub fn stats(&self) -> Option<&RunStats> {
        match &self.outcome {
            SweepOutcome::Stats(s) => Some(s),
            SweepOutcome::Error(_) => None,
        }
    }
}

/// Runs `workload` once per value of the config key `axis`. The workload
/// builder sees the point's config so kernels may depend on it. A point that
/// cannot be configured or loaded is reported and the rest still run.
pub fn sweep<F>(base: &ProcessorConfig, axis: &str, values: &[u64], max_cycles: u64, workload: F) -> Vec<SweepPoint>
where
    F: Fn(&ProcessorConfig) -> Workload + Sync,
{
    let point = |value: u64| {
        let mut cfg = base.clone();
        let outcome = cfg
            .set(axis, &value.to_string())
            .map_err(|e| e.to_string())
            .and_then(|_| cfg.validate().map_err(|e| e.to_string()))
            .and_then(|_| workload(&cfg).run(&cfg, max_cycles))
            .map_or_else(SweepOutcome::Error, |(_, st)| SweepOutcome::Stats(Box::new(st)));
        SweepPoint { value, outcome }
    };
    // Browsers cannot spawn threads from wasm without extra setup.
    let mut points: Vec<SweepPoint> = if cfg!(target_arch = "wasm32") {
        values.iter().map(|&v| point(v)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = values.iter().map(|&v| s.spawn(move || point(v))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        })
    };
    points.sort_by_key(|p| p.value);
    points
}

pub const CSV_HEADER: &str =
    "value,terminated,cycles,instructions,ipc,lane_ipc,l1d_hits,l1d_misses,l1d_deferrals,l1d_bank_utilization,dram_reads,dram_writes";

/// One CSV row per point; failed points carry the error in `terminated`.
pub fn to_csv(axis: &str, points: &[SweepPoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# axis={axis}");
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        match &p.outcome {
            SweepOutcome::Stats(s) => {
                let sum = |f: fn(&crate::mem::cache::CacheStats) -> u64| s.caches.l1d.iter().map(f).sum::<u64>();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.6},{:.6},{},{},{},{:.6},{},{}",
                    p.value,
                    serde_json::to_value(s.terminated).unwrap().as_str().unwrap(),
                    s.cycles,
                    s.instructions,
                    s.ipc_total,
                    s.lane_ipc,
                    sum(|c| c.hits),
                    sum(|c| c.misses),
                    sum(|c| c.deferrals),
                    s.dcache_utilization(),
                    s.dram.reads,
                    s.dram.writes
                );
            }
            SweepOutcome::Error(e) => {
                let _ = writeln!(out, "{},error: {},,,,,,,,,,", p.value, e.replace(',', ";"));
            }
        }
    }
    out
}
