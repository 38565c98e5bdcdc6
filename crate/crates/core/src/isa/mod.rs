//! Instruction set: RV32I, the M extension, a fixed single-precision F
//! subset, CSR access and the six SIMT extension instructions
//! (`wspawn`, `tmc`, `split`, `join`, `bar`, `tex`).
//!
//! The extension uses two major opcodes. `custom-0` (0x0B) holds the five
//! R-type control instructions selected by `funct7`; `custom-1` (0x2B) holds
//! the R4-type `tex`, whose `funct2` field selects the texture stage.

mod decode;
mod disasm;
mod encode;

use thiserror::Error;

pub use decode::decode;
pub use encode::encode;

pub const OPCODE_LUI: u32 = 0x37;
pub const OPCODE_AUIPC: u32 = 0x17;
pub const OPCODE_JAL: u32 = 0x6F;
pub const OPCODE_JALR: u32 = 0x67;
pub const OPCODE_BRANCH: u32 = 0x63;
pub const OPCODE_LOAD: u32 = 0x03;
pub const OPCODE_STORE: u32 = 0x23;
pub const OPCODE_OP_IMM: u32 = 0x13;
pub const OPCODE_OP: u32 = 0x33;
pub const OPCODE_MISC_MEM: u32 = 0x0F;
pub const OPCODE_SYSTEM: u32 = 0x73;
pub const OPCODE_LOAD_FP: u32 = 0x07;
pub const OPCODE_STORE_FP: u32 = 0x27;
pub const OPCODE_OP_FP: u32 = 0x53;
pub const OPCODE_FMADD: u32 = 0x43;
pub const OPCODE_FMSUB: u32 = 0x47;
/// Major opcode shared by `tmc`, `wspawn`, `split`, `join` and `bar`.
pub const OPCODE_SIMT: u32 = 0x0B;
/// Major opcode of the R4-type `tex` instruction.
pub const OPCODE_TEX: u32 = 0x2B;

/// Number of texture stages addressable from the `tex` encoding.
pub const TEX_STAGE_FIELD_LIMIT: u32 = 4;

/// Broad instruction class, used for latency and functional-unit selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstrKind {
    BaseAlu,
    MulDiv,
    Fp,
    Load,
    Store,
    Branch,
    Jump,
    Csr,
    Fence,
    Ext,
}

/// SIMT extension operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtOp {
    Wspawn,
    Tmc,
    Split,
    Join,
    Bar,
    Tex,
}

impl ExtOp {
    /// `funct7` value under [`OPCODE_SIMT`]; `None` for `tex`.
    pub fn funct7(self) -> Option<u32> {
        match self {
            ExtOp::Tmc => Some(0),
            ExtOp::Wspawn => Some(1),
            ExtOp::Split => Some(2),
            ExtOp::Join => Some(3),
            ExtOp::Bar => Some(4),
            ExtOp::Tex => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    // RV32I
    Lui,
    Auipc,
    Jal,
    Jalr,
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    Sb,
    Sh,
    Sw,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Fence,
    // Zicsr
    Csrrw,
    Csrrs,
    Csrrc,
    Csrrwi,
    Csrrsi,
    Csrrci,
    // M
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
    // F subset
    Flw,
    Fsw,
    FaddS,
    FsubS,
    FmulS,
    FdivS,
    FsqrtS,
    FmaddS,
    FmsubS,
    FminS,
    FmaxS,
    FeqS,
    FltS,
    FleS,
    FcvtWS,
    FcvtWuS,
    FcvtSW,
    FcvtSWu,
    FsgnjS,
    FsgnjnS,
    FsgnjxS,
    FmvXW,
    FmvWX,
    // SIMT extension
    Ext(ExtOp),
}

impl Op {
    pub fn kind(self) -> InstrKind {
        use Op::*;
        match self {
            Lui | Auipc | Addi | Slti | Sltiu | Xori | Ori | Andi | Slli | Srli | Srai | Add
            | Sub | Sll | Slt | Sltu | Xor | Srl | Sra | Or | And => InstrKind::BaseAlu,
            Jal | Jalr => InstrKind::Jump,
            Beq | Bne | Blt | Bge | Bltu | Bgeu => InstrKind::Branch,
            Lb | Lh | Lw | Lbu | Lhu | Flw => InstrKind::Load,
            Sb | Sh | Sw | Fsw => InstrKind::Store,
            Fence => InstrKind::Fence,
            Csrrw | Csrrs | Csrrc | Csrrwi | Csrrsi | Csrrci => InstrKind::Csr,
            Mul | Mulh | Mulhsu | Mulhu | Div | Divu | Rem | Remu => InstrKind::MulDiv,
            FaddS | FsubS | FmulS | FdivS | FsqrtS | FmaddS | FmsubS | FminS | FmaxS | FeqS
            | FltS | FleS | FcvtWS | FcvtWuS | FcvtSW | FcvtSWu | FsgnjS | FsgnjnS | FsgnjxS
            | FmvXW | FmvWX => InstrKind::Fp,
            Ext(_) => InstrKind::Ext,
        }
    }

    /// True for FP operations that carry a rounding-mode field.
    pub fn has_rm(self) -> bool {
        use Op::*;
        matches!(
            self,
            FaddS | FsubS | FmulS | FdivS | FsqrtS | FmaddS | FmsubS | FcvtWS | FcvtWuS | FcvtSW
                | FcvtSWu
        )
    }

    /// Register file written by `rd`, if any.
    pub fn dest_file(self) -> Option<RegFile> {
        use Op::*;
        match self {
            Sb | Sh | Sw | Fsw | Beq | Bne | Blt | Bge | Bltu | Bgeu | Fence => None,
            Ext(ExtOp::Tex) => Some(RegFile::Int),
            Ext(_) => None,
            Flw | FaddS | FsubS | FmulS | FdivS | FsqrtS | FmaddS | FmsubS | FminS | FmaxS
            | FcvtSW | FcvtSWu | FsgnjS | FsgnjnS | FsgnjxS | FmvWX => Some(RegFile::Float),
            _ => Some(RegFile::Int),
        }
    }

    /// Register files read through `rs1`, `rs2` and `rs3`.
    pub fn source_files(self) -> [Option<RegFile>; 3] {
        use Op::*;
        use RegFile::{Float as F, Int as I};
        match self {
            Lui | Auipc | Jal | Fence | Csrrwi | Csrrsi | Csrrci => [None, None, None],
            Ext(ExtOp::Join) => [None, None, None],
            Jalr | Lb | Lh | Lw | Lbu | Lhu | Flw | Addi | Slti | Sltiu | Xori | Ori | Andi
            | Slli | Srli | Srai | Csrrw | Csrrs | Csrrc => [Some(I), None, None],
            Ext(ExtOp::Tmc) | Ext(ExtOp::Split) => [Some(I), None, None],
            Fsw => [Some(I), Some(F), None],
            FsqrtS | FcvtWS | FcvtWuS | FmvXW => [Some(F), None, None],
            FcvtSW | FcvtSWu | FmvWX => [Some(I), None, None],
            FmaddS | FmsubS => [Some(F), Some(F), Some(F)],
            FaddS | FsubS | FmulS | FdivS | FminS | FmaxS | FeqS | FltS | FleS | FsgnjS
            | FsgnjnS | FsgnjxS => [Some(F), Some(F), None],
            Ext(ExtOp::Tex) => [Some(I), Some(I), Some(I)],
            _ => [Some(I), Some(I), None],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegFile {
    Int,
    Float,
}

/// A decoded instruction.
///
/// Fields that an operation does not use are zero. `imm` holds the
/// sign-extended immediate (the already-shifted upper value for `lui` and
/// `auipc`, the shift amount for immediate shifts, the zero-extended 5-bit
/// value for `csrr*i`, the raw 12-bit field for `fence` and the stage index
/// for `tex`). `rm` is the FP rounding-mode field for operations that have one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Op,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    pub rs3: u8,
    pub imm: i32,
    pub csr: u16,
    pub rm: u8,
}

impl Instruction {
    pub fn new(op: Op) -> Self {
        Instruction { op, rd: 0, rs1: 0, rs2: 0, rs3: 0, imm: 0, csr: 0, rm: 0 }
    }

    pub fn kind(&self) -> InstrKind {
        self.op.kind()
    }

    pub fn with_rd(mut self, rd: u8) -> Self {
        self.rd = rd;
        self
    }

    pub fn with_rs1(mut self, rs1: u8) -> Self {
        self.rs1 = rs1;
        self
    }

    pub fn with_rs2(mut self, rs2: u8) -> Self {
        self.rs2 = rs2;
        self
    }

    pub fn with_rs3(mut self, rs3: u8) -> Self {
        self.rs3 = rs3;
        self
    }

    pub fn with_imm(mut self, imm: i32) -> Self {
        self.imm = imm;
        self
    }

    pub fn with_csr(mut self, csr: u16) -> Self {
        self.csr = csr;
        self
    }

    pub fn with_rm(mut self, rm: u8) -> Self {
        self.rm = rm;
        self
    }

    /// Registers read by this instruction, tagged by file. `x0` is omitted.
    pub fn sources(&self) -> impl Iterator<Item = (RegFile, u8)> + '_ {
        let regs = [self.rs1, self.rs2, self.rs3];
        self.op
            .source_files()
            .into_iter()
            .zip(regs)
            .filter_map(|(file, r)| file.map(|f| (f, r)))
            .filter(|&(f, r)| !(f == RegFile::Int && r == 0))
    }

    /// Register written by this instruction. `x0` is reported as `None`.
    pub fn dest(&self) -> Option<(RegFile, u8)> {
        self.op
            .dest_file()
            .map(|f| (f, self.rd))
            .filter(|&(f, r)| !(f == RegFile::Int && r == 0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal instruction word {word:#010x}")]
pub struct IllegalInstruction {
    pub word: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("instruction cannot be encoded: {reason}")]
pub struct Unencodable {
    pub reason: String,
}
