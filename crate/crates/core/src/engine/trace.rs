use std::fmt;

use crate::isa::Instruction;

/// One issued instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub core: u32,
    pub wid: u32,
    pub pc: u32,
    pub tmask: u32,
    pub instr: Instruction,
}

/// `cycle,core,wid,pc,tmask,disassembly`
impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{:#010x},{:#x},{}", self.cycle, self.core, self.wid, self.pc, self.tmask, self.instr)
    }
}
