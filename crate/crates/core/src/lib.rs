//! Cycle-level simulator of a RISC-V SIMT GPU.
pub mod asm;
pub mod config;
pub mod engine;
pub mod error;
pub mod isa;
pub mod kernels;
pub mod mem;
pub mod runtime;
pub mod stats;
pub mod sweep;
pub mod texture;

pub use config::ProcessorConfig;
pub use engine::{peak_gflops, Processor};
pub use runtime::KernelImage;
pub use stats::{RunStats, Termination};
