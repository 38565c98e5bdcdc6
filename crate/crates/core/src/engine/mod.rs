//! The SIMT machine: per-core wavefront scheduling, divergence, barriers
//! and issue timing, wrapped by the multi-core [`Processor`].

mod alu;
mod barrier;
mod core;
mod ipdom;
mod sched;
mod trace;

pub use self::alu::{branch_taken, fp_op, int_op, CANONICAL_NAN};
pub use self::barrier::{Arrival, BarrierTable};
pub use self::core::{Core, Wavefront};
pub use self::ipdom::{join, split, IpdomEntry};
pub use self::sched::SchedulerMasks;
pub use self::trace::TraceRecord;

use self::core::StepCtx;
use crate::config::{ConfigError, ProcessorConfig};
use crate::error::SimFault;
use crate::mem::MemSystem;
use crate::runtime::{ImageError, KernelImage};
use crate::stats::{RunStats, Termination};
use crate::texture::TexStats;

/// Peak single-precision throughput in GFLOP/s: one operation per lane per
/// cycle.
pub fn peak_gflops(cores: u32, threads: u32, freq_ghz: f64) -> f64 {
    (cores as f64 * threads as f64) * freq_ghz
}

/// A complete simulated GPU: cores, memory hierarchy and global barriers.
pub struct Processor {
    cfg: ProcessorConfig,
    cores: Vec<Core>,
    pub mem: MemSystem,
    globals: BarrierTable,
    cycle: u64,
    console: Vec<u8>,
    trace_window: Option<(u64, u64)>,
    trace: Vec<TraceRecord>,
    fault: Option<SimFault>,
    entry: u32,
}

impl Processor {
    pub fn new(cfg: ProcessorConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let entry = cfg.ram_base;
        let mut p = Processor {
            mem: MemSystem::new(&cfg),
            cores: Vec::new(),
            globals: BarrierTable::new(cfg.global_barriers, cfg.cores as usize, cfg.cores * cfg.wavefronts),
            cycle: 0,
            console: Vec::new(),
            trace_window: None,
            trace: Vec::new(),
            fault: None,
            entry,
            cfg,
        };
        p.reset();
        Ok(p)
    }

    pub fn config(&self) -> &ProcessorConfig {
        &self.cfg
    }

    /// Returns every core, cache and counter to its power-on state. RAM
    /// contents are cleared too.
    fn reset(&mut self) {
        self.mem = MemSystem::new(&self.cfg);
        self.cores = (0..self.cfg.cores).map(|c| Core::new(c, &self.cfg, self.entry)).collect();
        self.globals = BarrierTable::new(self.cfg.global_barriers, self.cfg.cores as usize, self.cfg.cores * self.cfg.wavefronts);
        self.cycle = 0;
        self.console.clear();
        self.trace.clear();
        self.fault = None;
    }

    /// Copies `image` into RAM and resets the whole machine so every core
    /// starts wavefront 0, thread 0 at the entry point.
    pub fn load_image(&mut self, image: &KernelImage) -> Result<(), ImageError> {
        image.validate(&self.cfg)?;
        self.entry = image.entry;
        self.reset();
        self.mem.ram.write(image.load_base, &image.bytes);
        Ok(())
    }

    /// Preloads data (textures, inputs) into RAM. Call after `load_image`
    /// and before stepping.
    pub fn write_bytes(&mut self, addr: u32, bytes: &[u8]) -> Result<(), ImageError> {
        let end = addr as u64 + bytes.len() as u64;
        if addr < self.cfg.ram_base || end > self.cfg.ram_base as u64 + self.cfg.ram_size as u64 {
            return Err(ImageError::TooLarge { base: addr, len: bytes.len() });
        }
        self.mem.ram.write(addr, bytes);
        Ok(())
    }

    /// Records issued instructions whose cycle lies in `[start, end]`.
    pub fn set_trace_window(&mut self, start: u64, end: u64) {
        self.trace_window = Some((start, end));
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn console(&self) -> &[u8] {
        &self.console
    }

    pub fn fault(&self) -> Option<&SimFault> {
        self.fault.as_ref()
    }

    /// Every wavefront has exited and all memory traffic has drained.
    pub fn is_done(&self) -> bool {
        self.cores.iter().all(Core::is_done) && self.mem.is_idle()
    }

    /// Advances the machine by one cycle: cores in ascending order, then
    /// the memory hierarchy.
    pub fn step(&mut self) -> Result<(), SimFault> {
        if let Some(f) = &self.fault {
            return Err(f.clone());
        }
        let now = self.cycle;
        let tracing = self.trace_window.is_some_and(|(s, e)| (s..=e).contains(&now));
        let mut releases = Vec::new();
        for c in 0..self.cores.len() {
            let mut ctx = StepCtx {
                now,
                mem: &mut self.mem,
                globals: &mut self.globals,
                releases: &mut releases,
                console: &mut self.console,
                trace: tracing.then_some(&mut self.trace),
            };
            if let Err(f) = self.cores[c].step(&mut ctx) {
                self.fault = Some(f.clone());
                return Err(f);
            }
            for masks in releases.drain(..) {
                for (core, m) in self.cores.iter_mut().zip(masks) {
                    core.masks.release(m);
                }
            }
        }
        self.mem.step(now);
        self.cycle += 1;
        Ok(())
    }

    /// Runs until every wavefront exits, a fault, or `max_cycles` total
    /// cycles. Dirty cache lines are then written back to RAM.
    pub fn run(&mut self, max_cycles: u64) -> RunStats {
        let status = loop {
            if self.is_done() {
                break Termination::Completed;
            }
            if self.cycle >= max_cycles {
                break Termination::Timeout;
            }
            if self.step().is_err() {
                break Termination::Fault;
            }
        };
        self.mem.drain_to_ram();
        self.stats(status)
    }

    /// Reads a word from RAM. After `run` this is the final memory image.
    pub fn read_u32(&self, addr: u32) -> u32 {
        self.mem.ram.read_u32(addr)
    }

    pub fn read_bytes(&self, addr: u32, len: usize) -> Vec<u8> {
        let mut buf = vec![0; len];
        self.mem.ram.read(addr, &mut buf);
        buf
    }

    pub fn stats(&self, status: Termination) -> RunStats {
        let mut tex = TexStats::default();
        for c in &self.cores {
            let s = c.tex.stats;
            tex.batches += s.batches;
            tex.total_texels += s.total_texels;
            tex.unique_texels += s.unique_texels;
            tex.latency_sum += s.latency_sum;
        }
        if tex.batches > 0 {
            tex.avg_latency = tex.latency_sum as f64 / tex.batches as f64;
        }
        RunStats::new(
            &self.cfg,
            self.cycle,
            self.cores.iter().map(|c| (c.instructions, c.lane_instructions)).collect(),
            self.mem.stats(),
            tex,
            &self.console,
            status,
            self.fault.as_ref().map(ToString::to_string),
        )
    }
}
