//! The kernel-facing machine contract: memory map, identity CSRs, console
//! MMIO and kernel images.

use std::path::Path;

use thiserror::Error;

use crate::config::ProcessorConfig;

/// Base of the per-core shared scratchpad window.
pub const SHM_BASE: u32 = 0x6FF0_0000;
/// Write-only console byte. Loads read zero.
pub const CONSOLE_ADDR: u32 = 0xFFFF_0000;

pub const CSR_THREAD_ID: u16 = 0xCC0;
pub const CSR_WAVEFRONT_ID: u16 = 0xCC1;
pub const CSR_CORE_ID: u16 = 0xCC2;
pub const CSR_NUM_THREADS: u16 = 0xCC3;
pub const CSR_NUM_WAVEFRONTS: u16 = 0xCC4;
pub const CSR_NUM_CORES: u16 = 0xCC5;
pub const CSR_THREAD_MASK: u16 = 0xCC6;
pub const CSR_CYCLE: u16 = 0xC00;
pub const CSR_INSTRET: u16 = 0xC02;
pub const CSR_CYCLEH: u16 = 0xC80;
pub const CSR_INSTRETH: u16 = 0xC82;

/// Barrier ids with this bit set synchronise wavefronts across all cores.
pub const BARRIER_GLOBAL_BIT: u32 = 0x8000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CsrError {
    #[error("unknown CSR {0:#05x}")]
    Unknown(u16),
    #[error("write to read-only CSR {0:#05x}")]
    ReadOnly(u16),
    #[error("value {value:#x} is not valid for CSR {csr:#05x}")]
    BadValue { csr: u16, value: u32 },
}

/// Which region an address falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Ram,
    Shared { offset: u32 },
    Console,
}

pub fn classify(cfg: &ProcessorConfig, addr: u32) -> Option<Region> {
    if addr == CONSOLE_ADDR {
        return Some(Region::Console);
    }
    if addr >= SHM_BASE && ((addr - SHM_BASE) as u64) < cfg.shm_size as u64 {
        return Some(Region::Shared { offset: addr - SHM_BASE });
    }
    if addr >= cfg.ram_base && ((addr - cfg.ram_base) as u64) < cfg.ram_size as u64 {
        return Some(Region::Ram);
    }
    None
}

/// Identity of one hardware thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThreadIds {
    pub core: u32,
    pub wavefront: u32,
    pub thread: u32,
    pub tmask: u32,
}

/// Reads an identity CSR. Performance counters and texture CSRs are
/// handled by the core, so they are reported as unknown here.
pub fn read_id_csr(cfg: &ProcessorConfig, ids: ThreadIds, csr: u16) -> Result<u32, CsrError> {
    Ok(match csr {
        CSR_THREAD_ID => ids.thread,
        CSR_WAVEFRONT_ID => ids.wavefront,
        CSR_CORE_ID => ids.core,
        CSR_NUM_THREADS => cfg.threads,
        CSR_NUM_WAVEFRONTS => cfg.wavefronts,
        CSR_NUM_CORES => cfg.cores,
        CSR_THREAD_MASK => ids.tmask,
        _ => return Err(CsrError::Unknown(csr)),
    })
}

pub fn is_id_csr(csr: u16) -> bool {
    (CSR_THREAD_ID..=CSR_THREAD_MASK).contains(&csr)
}

/// Initial stack pointer of a thread: the top of its slot in the stack
/// carve-out at the top of RAM.
pub fn initial_sp(cfg: &ProcessorConfig, core: u32, wavefront: u32, thread: u32) -> u32 {
    let slot = (core as u64 * cfg.wavefronts as u64 + wavefront as u64) * cfg.threads as u64 + thread as u64;
    let top = cfg.ram_base as u64 + cfg.ram_size as u64;
    (top - slot * cfg.stack_size as u64) as u32
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image of {len} bytes at {base:#x} does not fit in RAM")]
    TooLarge { base: u32, len: usize },
    #[error("entry point {entry:#x} is outside the image or misaligned")]
    BadEntry { entry: u32 },
    #[error("load base {0:#x} is misaligned")]
    BadBase(u32),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A flat little-endian RV32 code+data blob.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelImage {
    pub load_base: u32,
    pub bytes: Vec<u8>,
    pub entry: u32,
}

impl KernelImage {
    pub fn new(load_base: u32, bytes: Vec<u8>) -> Self {
        KernelImage { load_base, bytes, entry: load_base }
    }

    pub fn from_words(load_base: u32, words: &[u32]) -> Self {
        Self::new(load_base, words.iter().flat_map(|w| w.to_le_bytes()).collect())
    }

    pub fn with_entry(mut self, entry: u32) -> Self {
        self.entry = entry;
        self
    }

    pub fn from_file(path: &Path, load_base: u32) -> Result<Self, ImageError> {
        let bytes = std::fs::read(path).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(load_base, bytes))
    }

    pub fn validate(&self, cfg: &ProcessorConfig) -> Result<(), ImageError> {
        if !self.load_base.is_multiple_of(4) {
            return Err(ImageError::BadBase(self.load_base));
        }
        let end = self.load_base as u64 + self.bytes.len() as u64;
        if self.load_base < cfg.ram_base || end > cfg.ram_base as u64 + cfg.ram_size as u64 {
            return Err(ImageError::TooLarge { base: self.load_base, len: self.bytes.len() });
        }
        if !self.entry.is_multiple_of(4) || self.entry < self.load_base || self.entry as u64 >= end {
            return Err(ImageError::BadEntry { entry: self.entry });
        }
        Ok(())
    }
}
