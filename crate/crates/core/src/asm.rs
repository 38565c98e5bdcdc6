//! A small programmatic assembler for building kernels in Rust: labels,
//! forward references and the usual pseudo-instructions.
//!
//! ```
//! use rvsimt::asm::{reg::*, Asm};
//! let mut a = Asm::new(0x8000_0000);
//! a.li(T0, 3);
//! a.label("loop");
//! a.addi(T0, T0, -1);
//! a.bnez(T0, "loop");
//! a.tmc(ZERO);
//! let image = a.assemble().unwrap();
//! assert_eq!(image.bytes.len(), 16);
//! ```

use std::collections::HashMap;

use thiserror::Error;

use crate::isa::{encode, ExtOp, Instruction, Op, Unencodable};
use crate::runtime::KernelImage;

/// ABI register names.
pub mod reg {
    pub const ZERO: u8 = 0;
    pub const RA: u8 = 1;
    pub const SP: u8 = 2;
    pub const GP: u8 = 3;
    pub const TP: u8 = 4;
    pub const T0: u8 = 5;
    pub const T1: u8 = 6;
    pub const T2: u8 = 7;
    pub const S0: u8 = 8;
    pub const S1: u8 = 9;
    pub const A0: u8 = 10;
    pub const A1: u8 = 11;
    pub const A2: u8 = 12;
    pub const A3: u8 = 13;
    pub const A4: u8 = 14;
    pub const A5: u8 = 15;
    pub const A6: u8 = 16;
    pub const A7: u8 = 17;
    pub const S2: u8 = 18;
    pub const S3: u8 = 19;
    pub const S4: u8 = 20;
    pub const S5: u8 = 21;
    pub const S6: u8 = 22;
    pub const S7: u8 = 23;
    pub const S8: u8 = 24;
    pub const S9: u8 = 25;
    pub const S10: u8 = 26;
    pub const S11: u8 = 27;
    pub const T3: u8 = 28;
    pub const T4: u8 = 29;
    pub const T5: u8 = 30;
    pub const T6: u8 = 31;
}

#[derive(Debug, Error)]
pub enum AsmError {
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("label `{0}` defined twice")]
    DuplicateLabel(String),
    #[error("branch to `{label}` is out of range ({offset} bytes)")]
    OutOfRange { label: String, offset: i64 },
    #[error(transparent)]
    Encode(#[from] Unencodable),
}

#[derive(Debug, Clone)]
enum Item {
    Ins(Instruction),
    /// An instruction whose `imm` is the PC-relative offset of a label.
    Rel(Instruction, String),
    /// `auipc`+`addi` pair loading a label's address.
    La(u8, String),
    Word(u32),
}

impl Item {
    fn words(&self) -> u32 {
        match self {
            Item::La(..) => 2,
            _ => 1,
        }
    }
}

/// Kernel builder. Instructions are appended in order starting at `base`.
#[derive(Debug, Clone)]
pub struct Asm {
    base: u32,
    items: Vec<Item>,
    pc: u32,
    labels: HashMap<String, u32>,
    duplicate: Option<String>,
}

macro_rules! rtype {
    ($($name:ident => $op:expr),* $(,)?) => {$(
        pub fn $name(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Self {
            self.ins(Instruction::new($op).with_rd(rd).with_rs1(rs1).with_rs2(rs2))
        }
    )*};
}

macro_rules! itype {
    ($($name:ident => $op:expr),* $(,)?) => {$(
        pub fn $name(&mut self, rd: u8, rs1: u8, imm: i32) -> &mut Self {
            self.ins(Instruction::new($op).with_rd(rd).with_rs1(rs1).with_imm(imm))
        }
    )*};
}

macro_rules! stype {
    ($($name:ident => $op:expr),* $(,)?) => {$(
        /// `op rs2, imm(rs1)`
        pub fn $name(&mut self, rs2: u8, imm: i32, rs1: u8) -> &mut Self {
            self.ins(Instruction::new($op).with_rs1(rs1).with_rs2(rs2).with_imm(imm))
        }
    )*};
}

macro_rules! ltype {
    ($($name:ident => $op:expr),* $(,)?) => {$(
        /// `op rd, imm(rs1)`
        pub fn $name(&mut self, rd: u8, imm: i32, rs1: u8) -> &mut Self {
            self.ins(Instruction::new($op).with_rd(rd).with_rs1(rs1).with_imm(imm))
        }
    )*};
}

macro_rules! btype {
    ($($name:ident => $op:expr),* $(,)?) => {$(
        pub fn $name(&mut self, rs1: u8, rs2: u8, label: &str) -> &mut Self {
            self.rel(Instruction::new($op).with_rs1(rs1).with_rs2(rs2), label)
        }
    )*};
}

impl Asm {
    pub fn new(base: u32) -> Self {
        Asm { base, items: Vec::new(), pc: base, labels: HashMap::new(), duplicate: None }
    }

    /// Address the next instruction will occupy.
    pub fn pc(&self) -> u32 {
        self.pc
    }

    fn push(&mut self, item: Item) -> &mut Self {
        self.pc += 4 * item.words();
        self.items.push(item);
        self
    }

    /// Appends a fully specified instruction.
    pub fn ins(&mut self, i: Instruction) -> &mut Self {
        self.push(Item::Ins(i))
    }

    fn rel(&mut self, i: Instruction, label: &str) -> &mut Self {
        self.push(Item::Rel(i, label.to_string()))
    }

    pub fn label(&mut self, name: &str) -> &mut Self {
        if self.labels.insert(name.to_string(), self.pc).is_some() {
            self.duplicate.get_or_insert_with(|| name.to_string());
        }
        self
    }

    pub fn word(&mut self, w: u32) -> &mut Self {
        self.push(Item::Word(w))
    }

    rtype! {
        add => Op::Add, sub => Op::Sub, sll => Op::Sll, slt => Op::Slt, sltu => Op::Sltu,
        xor => Op::Xor, srl => Op::Srl, sra => Op::Sra, or => Op::Or, and => Op::And,
        mul => Op::Mul, mulh => Op::Mulh, mulhsu => Op::Mulhsu, mulhu => Op::Mulhu,
        div => Op::Div, divu => Op::Divu, rem => Op::Rem, remu => Op::Remu,
        fadd_s => Op::FaddS, fsub_s => Op::FsubS, fmul_s => Op::FmulS, fdiv_s => Op::FdivS,
        fmin_s => Op::FminS, fmax_s => Op::FmaxS, feq_s => Op::FeqS, flt_s => Op::FltS, fle_s => Op::FleS,
        fsgnj_s => Op::FsgnjS, fsgnjn_s => Op::FsgnjnS, fsgnjx_s => Op::FsgnjxS,
    }

    itype! {
        addi => Op::Addi, slti => Op::Slti, sltiu => Op::Sltiu, xori => Op::Xori, ori => Op::Ori,
        andi => Op::Andi, slli => Op::Slli, srli => Op::Srli, srai => Op::Srai, jalr => Op::Jalr,
    }

    ltype! { lb => Op::Lb, lh => Op::Lh, lw => Op::Lw, lbu => Op::Lbu, lhu => Op::Lhu, flw => Op::Flw }

    stype! { sb => Op::Sb, sh => Op::Sh, sw => Op::Sw, fsw => Op::Fsw }

    btype! {
        beq => Op::Beq, bne => Op::Bne, blt => Op::Blt, bge => Op::Bge, bltu => Op::Bltu, bgeu => Op::Bgeu,
    }

    pub fn lui(&mut self, rd: u8, upper: u32) -> &mut Self {
        self.ins(Instruction::new(Op::Lui).with_rd(rd).with_imm((upper << 12) as i32))
    }

    pub fn fsqrt_s(&mut self, rd: u8, rs1: u8) -> &mut Self {
        self.ins(Instruction::new(Op::FsqrtS).with_rd(rd).with_rs1(rs1))
    }

    pub fn fmadd_s(&mut self, rd: u8, rs1: u8, rs2: u8, rs3: u8) -> &mut Self {
        self.ins(Instruction::new(Op::FmaddS).with_rd(rd).with_rs1(rs1).with_rs2(rs2).with_rs3(rs3))
    }

    pub fn fmsub_s(&mut self, rd: u8, rs1: u8, rs2: u8, rs3: u8) -> &mut Self {
        self.ins(Instruction::new(Op::FmsubS).with_rd(rd).with_rs1(rs1).with_rs2(rs2).with_rs3(rs3))
    }

    pub fn fcvt_s_w(&mut self, rd: u8, rs1: u8) -> &mut Self {
        self.ins(Instruction::new(Op::FcvtSW).with_rd(rd).with_rs1(rs1))
    }

    pub fn fcvt_w_s(&mut self, rd: u8, rs1: u8) -> &mut Self {
        self.ins(Instruction::new(Op::FcvtWS).with_rd(rd).with_rs1(rs1))
    }

    pub fn fmv_w_x(&mut self, rd: u8, rs1: u8) -> &mut Self {
        self.ins(Instruction::new(Op::FmvWX).with_rd(rd).with_rs1(rs1))
    }

    pub fn fmv_x_w(&mut self, rd: u8, rs1: u8) -> &mut Self {
        self.ins(Instruction::new(Op::FmvXW).with_rd(rd).with_rs1(rs1))
    }

    pub fn jal(&mut self, rd: u8, label: &str) -> &mut Self {
        self.rel(Instruction::new(Op::Jal).with_rd(rd), label)
    }

    pub fn j(&mut self, label: &str) -> &mut Self {
        self.jal(0, label)
    }

    pub fn ret(&mut self) -> &mut Self {
        self.jalr(0, reg::RA, 0)
    }

    pub fn beqz(&mut self, rs: u8, label: &str) -> &mut Self {
        self.beq(rs, 0, label)
    }

    pub fn bnez(&mut self, rs: u8, label: &str) -> &mut Self {
        self.bne(rs, 0, label)
    }

    pub fn nop(&mut self) -> &mut Self {
        self.addi(0, 0, 0)
    }

    pub fn mv(&mut self, rd: u8, rs: u8) -> &mut Self {
        self.addi(rd, rs, 0)
    }

    /// Loads a 32-bit constant in one or two instructions.
    pub fn li(&mut self, rd: u8, value: i32) -> &mut Self {
        if (-2048..2048).contains(&value) {
            return self.addi(rd, 0, value);
        }
        let lo = (value << 20) >> 20;
        let hi = (value.wrapping_sub(lo) as u32) >> 12;
        self.lui(rd, hi);
        if lo != 0 {
            self.addi(rd, rd, lo);
        }
        self
    }

    /// Loads the address of `label`.
    pub fn la(&mut self, rd: u8, label: &str) -> &mut Self {
        self.push(Item::La(rd, label.to_string()))
    }

    pub fn csrr(&mut self, rd: u8, csr: u16) -> &mut Self {
        self.ins(Instruction::new(Op::Csrrs).with_rd(rd).with_csr(csr))
    }

    pub fn csrw(&mut self, csr: u16, rs: u8) -> &mut Self {
        self.ins(Instruction::new(Op::Csrrw).with_rs1(rs).with_csr(csr))
    }

    pub fn fence(&mut self) -> &mut Self {
        self.ins(Instruction::new(Op::Fence).with_imm(0xFF))
    }

    pub fn tmc(&mut self, rs1: u8) -> &mut Self {
        self.ins(Instruction::new(Op::Ext(ExtOp::Tmc)).with_rs1(rs1))
    }

    pub fn wspawn(&mut self, count: u8, pc: u8) -> &mut Self {
        self.ins(Instruction::new(Op::Ext(ExtOp::Wspawn)).with_rs1(count).with_rs2(pc))
    }

    pub fn split(&mut self, pred: u8) -> &mut Self {
        self.ins(Instruction::new(Op::Ext(ExtOp::Split)).with_rs1(pred))
    }

    pub fn join(&mut self) -> &mut Self {
        self.ins(Instruction::new(Op::Ext(ExtOp::Join)))
    }

    pub fn bar(&mut self, id: u8, count: u8) -> &mut Self {
        self.ins(Instruction::new(Op::Ext(ExtOp::Bar)).with_rs1(id).with_rs2(count))
    }

    pub fn tex(&mut self, rd: u8, u: u8, v: u8, lod: u8, stage: u32) -> &mut Self {
        self.ins(Instruction::new(Op::Ext(ExtOp::Tex)).with_rd(rd).with_rs1(u).with_rs2(v).with_rs3(lod).with_imm(stage as i32))
    }

    /// Resolves labels and encodes the program.
    pub fn assemble(&self) -> Result<KernelImage, AsmError> {
        if let Some(d) = &self.duplicate {
            return Err(AsmError::DuplicateLabel(d.clone()));
        }
        let target = |l: &String| self.labels.get(l).copied().ok_or_else(|| AsmError::UndefinedLabel(l.clone()));
        let mut words = Vec::new();
        let mut pc = self.base;
        for item in &self.items {
            match item {
                Item::Ins(i) => words.push(encode(i)?),
                Item::Word(w) => words.push(*w),
                Item::Rel(i, l) => {
                    let offset = target(l)? as i64 - pc as i64;
                    let limit = if i.op == Op::Jal { 1 << 20 } else { 1 << 12 };
                    if !(-limit..limit).contains(&offset) {
                        return Err(AsmError::OutOfRange { label: l.clone(), offset });
                    }
                    words.push(encode(&i.with_imm(offset as i32))?);
                }
                Item::La(rd, l) => {
                    let offset = target(l)?.wrapping_sub(pc) as i32;
                    let lo = (offset << 20) >> 20;
                    let hi = offset.wrapping_sub(lo);
                    words.push(encode(&Instruction::new(Op::Auipc).with_rd(*rd).with_imm(hi))?);
                    words.push(encode(&Instruction::new(Op::Addi).with_rd(*rd).with_rs1(*rd).with_imm(lo))?);
                }
            }
            pc += 4 * item.words();
        }
        Ok(KernelImage::from_words(self.base, &words))
    }
}
