//! Simulation faults raised by kernels.

use thiserror::Error;

use crate::isa::IllegalInstruction;
use crate::runtime::CsrError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultKind {
    #[error(transparent)]
    Illegal(#[from] IllegalInstruction),
    #[error("IPDOM stack overflow (limit {limit})")]
    IpdomOverflow { limit: usize },
    #[error("join with an empty IPDOM stack")]
    IpdomUnderflow,
    #[error("misaligned {size}-byte access at {addr:#010x}")]
    Misaligned { addr: u32, size: u32 },
    #[error("address {addr:#010x} is outside every memory region")]
    OutOfRange { addr: u32 },
    #[error(transparent)]
    Csr(#[from] CsrError),
    #[error("barrier {id:#x} armed for {armed} wavefronts but an arrival expects {got}")]
    BarrierMismatch { id: u32, armed: u32, got: u32 },
    #[error("barrier id {id:#x} is outside the barrier table")]
    BadBarrier { id: u32 },
    #[error("barrier {id:#x} expects {count} wavefronts, more than can ever arrive")]
    BadBarrierCount { id: u32, count: u32 },
    #[error("texture stage {0} is not configured")]
    BadTexStage(u32),
}

/// A fault together with the machine state that raised it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("core {core} wavefront {wid} pc {pc:#010x}: {kind}")]
pub struct SimFault {
    pub core: u32,
    pub wid: u32,
    pub pc: u32,
    pub kind: FaultKind,
}
