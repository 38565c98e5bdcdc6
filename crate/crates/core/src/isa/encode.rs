use super::*;

fn err<T>(reason: impl Into<String>) -> Result<T, Unencodable> {
    Err(Unencodable { reason: reason.into() })
}

fn reg(r: u8) -> u32 {
    r as u32
}

fn check_signed(imm: i32, bits: u32, what: &str) -> Result<(), Unencodable> {
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    if (imm as i64) < lo || (imm as i64) > hi {
        return err(format!("{what} immediate {imm} out of range"));
    }
    Ok(())
}

fn r_type(opcode: u32, rd: u8, f3: u32, rs1: u8, rs2: u8, f7: u32) -> u32 {
    (f7 << 25) | (reg(rs2) << 20) | (reg(rs1) << 15) | (f3 << 12) | (reg(rd) << 7) | opcode
}

fn i_type(opcode: u32, rd: u8, f3: u32, rs1: u8, imm: i32) -> u32 {
    ((imm as u32 & 0xFFF) << 20) | (reg(rs1) << 15) | (f3 << 12) | (reg(rd) << 7) | opcode
}

fn s_type(opcode: u32, f3: u32, rs1: u8, rs2: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    (((imm >> 5) & 0x7F) << 25) | (reg(rs2) << 20) | (reg(rs1) << 15) | (f3 << 12) | ((imm & 0x1F) << 7) | opcode
}

fn b_type(f3: u32, rs1: u8, rs2: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    (((imm >> 12) & 1) << 31)
        | (((imm >> 5) & 0x3F) << 25)
        | (reg(rs2) << 20)
        | (reg(rs1) << 15)
        | (f3 << 12)
        | (((imm >> 1) & 0xF) << 8)
        | (((imm >> 11) & 1) << 7)
        | OPCODE_BRANCH
}

fn j_type(rd: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    (((imm >> 20) & 1) << 31)
        | (((imm >> 1) & 0x3FF) << 21)
        | (((imm >> 11) & 1) << 20)
        | (((imm >> 12) & 0xFF) << 12)
        | (reg(rd) << 7)
        | OPCODE_JAL
}

/// Encodes an instruction. Exact inverse of [`decode`] on the supported set:
/// instructions with out-of-range fields, reserved rounding modes or
/// nonzero unused fields are rejected.
pub fn encode(inst: &Instruction) -> Result<u32, Unencodable> {
    use Op::*;
    let i = inst;
    for (name, r) in [("rd", i.rd), ("rs1", i.rs1), ("rs2", i.rs2), ("rs3", i.rs3)] {
        if r >= 32 {
            return err(format!("{name}={r} is not a register"));
        }
    }
    if i.csr >= 4096 {
        return err(format!("csr address {:#x} exceeds 12 bits", i.csr));
    }
    if i.op.has_rm() {
        if !(i.rm <= 4 || i.rm == 7) {
            return err(format!("reserved rounding mode {}", i.rm));
        }
    } else if i.rm != 0 {
        return err("rounding mode on an operation without one");
    }
    let rm = i.rm as u32;

    let word = match i.op {
        Lui | Auipc => {
            if i.imm & 0xFFF != 0 {
                return err("upper immediate has low bits set");
            }
            let opc = if i.op == Lui { OPCODE_LUI } else { OPCODE_AUIPC };
            (i.imm as u32) | (reg(i.rd) << 7) | opc
        }
        Jal => {
            check_signed(i.imm, 21, "jal")?;
            if i.imm & 1 != 0 {
                return err("jal offset must be even");
            }
            j_type(i.rd, i.imm)
        }
        Jalr => {
            check_signed(i.imm, 12, "jalr")?;
            i_type(OPCODE_JALR, i.rd, 0, i.rs1, i.imm)
        }
        Beq | Bne | Blt | Bge | Bltu | Bgeu => {
            check_signed(i.imm, 13, "branch")?;
            if i.imm & 1 != 0 {
                return err("branch offset must be even");
            }
            let f3 = match i.op {
                Beq => 0,
                Bne => 1,
                Blt => 4,
                Bge => 5,
                Bltu => 6,
                _ => 7,
            };
            b_type(f3, i.rs1, i.rs2, i.imm)
        }
        Lb | Lh | Lw | Lbu | Lhu | Flw => {
            check_signed(i.imm, 12, "load")?;
            let (opc, f3) = match i.op {
                Lb => (OPCODE_LOAD, 0),
                Lh => (OPCODE_LOAD, 1),
                Lw => (OPCODE_LOAD, 2),
                Lbu => (OPCODE_LOAD, 4),
                Lhu => (OPCODE_LOAD, 5),
                _ => (OPCODE_LOAD_FP, 2),
            };
            i_type(opc, i.rd, f3, i.rs1, i.imm)
        }
        Sb | Sh | Sw | Fsw => {
            check_signed(i.imm, 12, "store")?;
            let (opc, f3) = match i.op {
                Sb => (OPCODE_STORE, 0),
                Sh => (OPCODE_STORE, 1),
                Sw => (OPCODE_STORE, 2),
                _ => (OPCODE_STORE_FP, 2),
            };
            s_type(opc, f3, i.rs1, i.rs2, i.imm)
        }
        Addi | Slti | Sltiu | Xori | Ori | Andi => {
            check_signed(i.imm, 12, "alu")?;
            let f3 = match i.op {
                Addi => 0,
                Slti => 2,
                Sltiu => 3,
                Xori => 4,
                Ori => 6,
                _ => 7,
            };
            i_type(OPCODE_OP_IMM, i.rd, f3, i.rs1, i.imm)
        }
        Slli | Srli | Srai => {
            if !(0..32).contains(&i.imm) {
                return err(format!("shift amount {} out of range", i.imm));
            }
            let (f3, f7) = match i.op {
                Slli => (1, 0),
                Srli => (5, 0),
                _ => (5, 0x20),
            };
            r_type(OPCODE_OP_IMM, i.rd, f3, i.rs1, i.imm as u8, f7)
        }
        Add | Sub | Sll | Slt | Sltu | Xor | Srl | Sra | Or | And | Mul | Mulh | Mulhsu | Mulhu
        | Div | Divu | Rem | Remu => {
            let (f7, f3) = match i.op {
                Add => (0, 0),
                Sub => (0x20, 0),
                Sll => (0, 1),
                Slt => (0, 2),
                Sltu => (0, 3),
                Xor => (0, 4),
                Srl => (0, 5),
                Sra => (0x20, 5),
                Or => (0, 6),
                And => (0, 7),
                Mul => (1, 0),
                Mulh => (1, 1),
                Mulhsu => (1, 2),
                Mulhu => (1, 3),
                Div => (1, 4),
                Divu => (1, 5),
                Rem => (1, 6),
                _ => (1, 7),
            };
            r_type(OPCODE_OP, i.rd, f3, i.rs1, i.rs2, f7)
        }
        Fence => {
            if !(0..4096).contains(&i.imm) {
                return err("fence field exceeds 12 bits");
            }
            ((i.imm as u32) << 20) | (reg(i.rs1) << 15) | (reg(i.rd) << 7) | OPCODE_MISC_MEM
        }
        Csrrw | Csrrs | Csrrc => {
            let f3 = match i.op {
                Csrrw => 1,
                Csrrs => 2,
                _ => 3,
            };
            ((i.csr as u32) << 20) | (reg(i.rs1) << 15) | (f3 << 12) | (reg(i.rd) << 7) | OPCODE_SYSTEM
        }
        Csrrwi | Csrrsi | Csrrci => {
            if !(0..32).contains(&i.imm) {
                return err("csr immediate exceeds 5 bits");
            }
            let f3 = match i.op {
                Csrrwi => 5,
                Csrrsi => 6,
                _ => 7,
            };
            ((i.csr as u32) << 20) | ((i.imm as u32) << 15) | (f3 << 12) | (reg(i.rd) << 7) | OPCODE_SYSTEM
        }
        FaddS => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, i.rs2, 0x00),
        FsubS => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, i.rs2, 0x04),
        FmulS => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, i.rs2, 0x08),
        FdivS => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, i.rs2, 0x0C),
        FsqrtS => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, 0, 0x2C),
        FsgnjS => r_type(OPCODE_OP_FP, i.rd, 0, i.rs1, i.rs2, 0x10),
        FsgnjnS => r_type(OPCODE_OP_FP, i.rd, 1, i.rs1, i.rs2, 0x10),
        FsgnjxS => r_type(OPCODE_OP_FP, i.rd, 2, i.rs1, i.rs2, 0x10),
        FminS => r_type(OPCODE_OP_FP, i.rd, 0, i.rs1, i.rs2, 0x14),
        FmaxS => r_type(OPCODE_OP_FP, i.rd, 1, i.rs1, i.rs2, 0x14),
        FeqS => r_type(OPCODE_OP_FP, i.rd, 2, i.rs1, i.rs2, 0x50),
        FltS => r_type(OPCODE_OP_FP, i.rd, 1, i.rs1, i.rs2, 0x50),
        FleS => r_type(OPCODE_OP_FP, i.rd, 0, i.rs1, i.rs2, 0x50),
        FcvtWS => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, 0, 0x60),
        FcvtWuS => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, 1, 0x60),
        FcvtSW => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, 0, 0x68),
        FcvtSWu => r_type(OPCODE_OP_FP, i.rd, rm, i.rs1, 1, 0x68),
        FmvXW => r_type(OPCODE_OP_FP, i.rd, 0, i.rs1, 0, 0x70),
        FmvWX => r_type(OPCODE_OP_FP, i.rd, 0, i.rs1, 0, 0x78),
        FmaddS | FmsubS => {
            let opc = if i.op == FmaddS { OPCODE_FMADD } else { OPCODE_FMSUB };
            (reg(i.rs3) << 27) | r_type(opc, i.rd, rm, i.rs1, i.rs2, 0)
        }
        Ext(ExtOp::Tex) => {
            if !(0..TEX_STAGE_FIELD_LIMIT as i32).contains(&i.imm) {
                return err(format!("texture stage {} not encodable", i.imm));
            }
            (reg(i.rs3) << 27) | r_type(OPCODE_TEX, i.rd, 0, i.rs1, i.rs2, i.imm as u32)
        }
        Ext(op) => {
            let f7 = op.funct7().expect("non-tex extension op has funct7");
            r_type(OPCODE_SIMT, i.rd, 0, i.rs1, i.rs2, f7)
        }
    };

    // Anything the format does not carry (e.g. rs2 on an I-type) must be
    // zero, otherwise the round trip would silently drop it.
    match decode(word) {
        Ok(back) if back == *inst => Ok(word),
        _ => err(format!("{:?} has fields its format does not carry", inst.op)),
    }
}
