use std::fmt;

use super::*;

fn mnemonic(op: Op) -> &'static str {
    use Op::*;
    match op {
        Lui => "lui",
        Auipc => "auipc",
        Jal => "jal",
        Jalr => "jalr",
        Beq => "beq",
        Bne => "bne",
        Blt => "blt",
        Bge => "bge",
        Bltu => "bltu",
        Bgeu => "bgeu",
        Lb => "lb",
        Lh => "lh",
        Lw => "lw",
        Lbu => "lbu",
        Lhu => "lhu",
        Sb => "sb",
        Sh => "sh",
        Sw => "sw",
        Addi => "addi",
        Slti => "slti",
        Sltiu => "sltiu",
        Xori => "xori",
        Ori => "ori",
        Andi => "andi",
        Slli => "slli",
        Srli => "srli",
        Srai => "srai",
        Add => "add",
        Sub => "sub",
        Sll => "sll",
        Slt => "slt",
        Sltu => "sltu",
        Xor => "xor",
        Srl => "srl",
        Sra => "sra",
        Or => "or",
        And => "and",
        Fence => "fence",
        Csrrw => "csrrw",
        Csrrs => "csrrs",
        Csrrc => "csrrc",
        Csrrwi => "csrrwi",
        Csrrsi => "csrrsi",
        Csrrci => "csrrci",
        Mul => "mul",
        Mulh => "mulh",
        Mulhsu => "mulhsu",
        Mulhu => "mulhu",
        Div => "div",
        Divu => "divu",
        Rem => "rem",
        Remu => "remu",
        Flw => "flw",
        Fsw => "fsw",
        FaddS => "fadd.s",
        FsubS => "fsub.s",
        FmulS => "fmul.s",
        FdivS => "fdiv.s",
        FsqrtS => "fsqrt.s",
        FmaddS => "fmadd.s",
        FmsubS => "fmsub.s",
        FminS => "fmin.s",
        FmaxS => "fmax.s",
        FeqS => "feq.s",
        FltS => "flt.s",
        FleS => "fle.s",
        FcvtWS => "fcvt.w.s",
        FcvtWuS => "fcvt.wu.s",
        FcvtSW => "fcvt.s.w",
        FcvtSWu => "fcvt.s.wu",
        FsgnjS => "fsgnj.s",
        FsgnjnS => "fsgnjn.s",
        FsgnjxS => "fsgnjx.s",
        FmvXW => "fmv.x.w",
        FmvWX => "fmv.w.x",
        Ext(ExtOp::Wspawn) => "wspawn",
        Ext(ExtOp::Tmc) => "tmc",
        Ext(ExtOp::Split) => "split",
        Ext(ExtOp::Join) => "join",
        Ext(ExtOp::Bar) => "bar",
        Ext(ExtOp::Tex) => "tex",
    }
}

fn fence_set(bits: i32) -> String {
    let s: String = [(8, 'i'), (4, 'o'), (2, 'r'), (1, 'w')]
        .iter()
        .filter(|(m, _)| bits & m != 0)
        .map(|&(_, c)| c)
        .collect();
    if s.is_empty() {
        "0".to_string()
    } else {
        s
    }
}

fn rm_suffix(rm: u8) -> &'static str {
    match rm {
        0 => ", rne",
        1 => ", rtz",
        2 => ", rdn",
        3 => ", rup",
        4 => ", rmm",
        _ => "",
    }
}

/// Formats in the usual `objdump`/`llvm-mc` register-number style
/// (`x5`, `f3`), e.g. `lw x5, 2044(x6)`.
impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Op::*;
        let m = mnemonic(self.op);
        let (rd, rs1, rs2, rs3) = (self.rd, self.rs1, self.rs2, self.rs3);
        match self.op {
            Lui | Auipc => write!(f, "{m} x{rd}, {:#x}", (self.imm as u32) >> 12),
            Jal => write!(f, "{m} x{rd}, {}", self.imm),
            Jalr | Lb | Lh | Lw | Lbu | Lhu => write!(f, "{m} x{rd}, {}(x{rs1})", self.imm),
            Flw => write!(f, "{m} f{rd}, {}(x{rs1})", self.imm),
            Sb | Sh | Sw => write!(f, "{m} x{rs2}, {}(x{rs1})", self.imm),
            Fsw => write!(f, "{m} f{rs2}, {}(x{rs1})", self.imm),
            Beq | Bne | Blt | Bge | Bltu | Bgeu => write!(f, "{m} x{rs1}, x{rs2}, {}", self.imm),
            Addi | Slti | Sltiu | Xori | Ori | Andi | Slli | Srli | Srai => {
                write!(f, "{m} x{rd}, x{rs1}, {}", self.imm)
            }
            Fence => write!(f, "{m} {}, {}", fence_set(self.imm >> 4), fence_set(self.imm)),
            Csrrw | Csrrs | Csrrc => write!(f, "{m} x{rd}, {:#x}, x{rs1}", self.csr),
            Csrrwi | Csrrsi | Csrrci => write!(f, "{m} x{rd}, {:#x}, {}", self.csr, self.imm),
            FaddS | FsubS | FmulS | FdivS => {
                write!(f, "{m} f{rd}, f{rs1}, f{rs2}{}", rm_suffix(self.rm))
            }
            FsqrtS => write!(f, "{m} f{rd}, f{rs1}{}", rm_suffix(self.rm)),
            FmaddS | FmsubS => {
                write!(f, "{m} f{rd}, f{rs1}, f{rs2}, f{rs3}{}", rm_suffix(self.rm))
            }
            FminS | FmaxS | FsgnjS | FsgnjnS | FsgnjxS => write!(f, "{m} f{rd}, f{rs1}, f{rs2}"),
            FeqS | FltS | FleS => write!(f, "{m} x{rd}, f{rs1}, f{rs2}"),
            FcvtWS | FcvtWuS => write!(f, "{m} x{rd}, f{rs1}{}", rm_suffix(self.rm)),
            FcvtSW | FcvtSWu => write!(f, "{m} f{rd}, x{rs1}{}", rm_suffix(self.rm)),
            FmvXW => write!(f, "{m} x{rd}, f{rs1}"),
            FmvWX => write!(f, "{m} f{rd}, x{rs1}"),
            Ext(ExtOp::Tmc) | Ext(ExtOp::Split) => write!(f, "{m} x{rs1}"),
            Ext(ExtOp::Wspawn) | Ext(ExtOp::Bar) => write!(f, "{m} x{rs1}, x{rs2}"),
            Ext(ExtOp::Join) => write!(f, "{m}"),
            Ext(ExtOp::Tex) => write!(f, "{m} x{rd}, x{rs1}, x{rs2}, x{rs3}, {}", self.imm),
            _ => write!(f, "{m} x{rd}, x{rs1}, x{rs2}"),
        }
    }
}
