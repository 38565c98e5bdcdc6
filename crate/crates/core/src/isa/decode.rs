use super::*;

#[inline]
fn bits(w: u32, hi: u32, lo: u32) -> u32 {
    (w >> lo) & ((1u32 << (hi - lo + 1)) - 1)
}

pub(super) fn imm_i(w: u32) -> i32 {
    (w as i32) >> 20
}

pub(super) fn imm_s(w: u32) -> i32 {
    (((w as i32) >> 25) << 5) | bits(w, 11, 7) as i32
}

pub(super) fn imm_b(w: u32) -> i32 {
    let v = (bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) | (bits(w, 30, 25) << 5) | (bits(w, 11, 8) << 1);
    ((v << 19) as i32) >> 19
}

pub(super) fn imm_j(w: u32) -> i32 {
    let v = (bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) | (bits(w, 20, 20) << 11) | (bits(w, 30, 21) << 1);
    ((v << 11) as i32) >> 11
}

fn valid_rm(rm: u32) -> bool {
    rm <= 4 || rm == 7
}

/// Decodes one 32-bit word. Total: every word yields either an instruction
/// or [`IllegalInstruction`]. Words with nonzero bits in fields the
/// operation does not use are illegal, so decoding is injective.
pub fn decode(w: u32) -> Result<Instruction, IllegalInstruction> {
    let illegal = Err(IllegalInstruction { word: w });
    let opcode = bits(w, 6, 0);
    let rd = bits(w, 11, 7) as u8;
    let f3 = bits(w, 14, 12);
    let rs1 = bits(w, 19, 15) as u8;
    let rs2 = bits(w, 24, 20) as u8;
    let f7 = bits(w, 31, 25);

    let r = |op: Op| Instruction::new(op).with_rd(rd).with_rs1(rs1).with_rs2(rs2);
    let i = |op: Op| Instruction::new(op).with_rd(rd).with_rs1(rs1).with_imm(imm_i(w));

    let inst = match opcode {
        OPCODE_LUI => Instruction::new(Op::Lui).with_rd(rd).with_imm((w & 0xFFFF_F000) as i32),
        OPCODE_AUIPC => Instruction::new(Op::Auipc).with_rd(rd).with_imm((w & 0xFFFF_F000) as i32),
        OPCODE_JAL => Instruction::new(Op::Jal).with_rd(rd).with_imm(imm_j(w)),
        OPCODE_JALR if f3 == 0 => i(Op::Jalr),
        OPCODE_BRANCH => {
            let op = match f3 {
                0 => Op::Beq,
                1 => Op::Bne,
                4 => Op::Blt,
                5 => Op::Bge,
                6 => Op::Bltu,
                7 => Op::Bgeu,
                _ => return illegal,
            };
            Instruction::new(op).with_rs1(rs1).with_rs2(rs2).with_imm(imm_b(w))
        }
        OPCODE_LOAD => {
            let op = match f3 {
                0 => Op::Lb,
                1 => Op::Lh,
                2 => Op::Lw,
                4 => Op::Lbu,
                5 => Op::Lhu,
                _ => return illegal,
            };
            i(op)
        }
        OPCODE_STORE => {
            let op = match f3 {
                0 => Op::Sb,
                1 => Op::Sh,
                2 => Op::Sw,
                _ => return illegal,
            };
            Instruction::new(op).with_rs1(rs1).with_rs2(rs2).with_imm(imm_s(w))
        }
        OPCODE_OP_IMM => match f3 {
            0 => i(Op::Addi),
            2 => i(Op::Slti),
            3 => i(Op::Sltiu),
            4 => i(Op::Xori),
            6 => i(Op::Ori),
            7 => i(Op::Andi),
            1 | 5 => {
                let op = match (f3, f7) {
                    (1, 0) => Op::Slli,
                    (5, 0) => Op::Srli,
                    (5, 0x20) => Op::Srai,
                    _ => return illegal,
                };
                Instruction::new(op).with_rd(rd).with_rs1(rs1).with_imm(rs2 as i32)
            }
            _ => unreachable!(),
        },
        OPCODE_OP => {
            let op = match (f7, f3) {
                (0, 0) => Op::Add,
                (0x20, 0) => Op::Sub,
                (0, 1) => Op::Sll,
                (0, 2) => Op::Slt,
                (0, 3) => Op::Sltu,
                (0, 4) => Op::Xor,
                (0, 5) => Op::Srl,
                (0x20, 5) => Op::Sra,
                (0, 6) => Op::Or,
                (0, 7) => Op::And,
                (1, 0) => Op::Mul,
                (1, 1) => Op::Mulh,
                (1, 2) => Op::Mulhsu,
                (1, 3) => Op::Mulhu,
                (1, 4) => Op::Div,
                (1, 5) => Op::Divu,
                (1, 6) => Op::Rem,
                (1, 7) => Op::Remu,
                _ => return illegal,
            };
            r(op)
        }
        OPCODE_MISC_MEM if f3 == 0 => Instruction::new(Op::Fence)
            .with_rd(rd)
            .with_rs1(rs1)
            .with_imm(bits(w, 31, 20) as i32),
        OPCODE_SYSTEM => {
            let csr = bits(w, 31, 20) as u16;
            let op = match f3 {
                1 => Op::Csrrw,
                2 => Op::Csrrs,
                3 => Op::Csrrc,
                5 => Op::Csrrwi,
                6 => Op::Csrrsi,
                7 => Op::Csrrci,
                _ => return illegal,
            };
            if f3 >= 5 {
                Instruction::new(op).with_rd(rd).with_imm(rs1 as i32).with_csr(csr)
            } else {
                Instruction::new(op).with_rd(rd).with_rs1(rs1).with_csr(csr)
            }
        }
        OPCODE_LOAD_FP if f3 == 2 => i(Op::Flw),
        OPCODE_STORE_FP if f3 == 2 => {
            Instruction::new(Op::Fsw).with_rs1(rs1).with_rs2(rs2).with_imm(imm_s(w))
        }
        OPCODE_FMADD | OPCODE_FMSUB => {
            if bits(w, 26, 25) != 0 || !valid_rm(f3) {
                return illegal;
            }
            let op = if opcode == OPCODE_FMADD { Op::FmaddS } else { Op::FmsubS };
            r(op).with_rs3(bits(w, 31, 27) as u8).with_rm(f3 as u8)
        }
        OPCODE_OP_FP => return decode_op_fp(w, rd, f3, rs1, rs2, f7),
        OPCODE_SIMT if f3 == 0 => {
            let (op, use_rs1, use_rs2) = match f7 {
                0 => (ExtOp::Tmc, true, false),
                1 => (ExtOp::Wspawn, true, true),
                2 => (ExtOp::Split, true, false),
                3 => (ExtOp::Join, false, false),
                4 => (ExtOp::Bar, true, true),
                _ => return illegal,
            };
            if rd != 0 || (!use_rs1 && rs1 != 0) || (!use_rs2 && rs2 != 0) {
                return illegal;
            }
            Instruction::new(Op::Ext(op)).with_rs1(rs1).with_rs2(rs2)
        }
        OPCODE_TEX if f3 == 0 => r(Op::Ext(ExtOp::Tex))
            .with_rs3(bits(w, 31, 27) as u8)
            .with_imm(bits(w, 26, 25) as i32),
        _ => return illegal,
    };
    Ok(inst)
}

fn decode_op_fp(w: u32, rd: u8, f3: u32, rs1: u8, rs2: u8, f7: u32) -> Result<Instruction, IllegalInstruction> {
    let illegal = Err(IllegalInstruction { word: w });
    let r = |op: Op| Instruction::new(op).with_rd(rd).with_rs1(rs1).with_rs2(rs2);
    let unary = |op: Op| Instruction::new(op).with_rd(rd).with_rs1(rs1);
    let with_rm = |inst: Instruction| -> Result<Instruction, IllegalInstruction> {
        if valid_rm(f3) {
            Ok(inst.with_rm(f3 as u8))
        } else {
            Err(IllegalInstruction { word: w })
        }
    };
    match f7 {
        0x00 => with_rm(r(Op::FaddS)),
        0x04 => with_rm(r(Op::FsubS)),
        0x08 => with_rm(r(Op::FmulS)),
        0x0C => with_rm(r(Op::FdivS)),
        0x2C if rs2 == 0 => with_rm(unary(Op::FsqrtS)),
        0x10 => match f3 {
            0 => Ok(r(Op::FsgnjS)),
            1 => Ok(r(Op::FsgnjnS)),
            2 => Ok(r(Op::FsgnjxS)),
            _ => illegal,
        },
        0x14 => match f3 {
            0 => Ok(r(Op::FminS)),
            1 => Ok(r(Op::FmaxS)),
            _ => illegal,
        },
        0x50 => match f3 {
            2 => Ok(r(Op::FeqS)),
            1 => Ok(r(Op::FltS)),
            0 => Ok(r(Op::FleS)),
            _ => illegal,
        },
        0x60 => match rs2 {
            0 => with_rm(unary(Op::FcvtWS)),
            1 => with_rm(unary(Op::FcvtWuS)),
            _ => illegal,
        },
        0x68 => match rs2 {
            0 => with_rm(unary(Op::FcvtSW)),
            1 => with_rm(unary(Op::FcvtSWu)),
            _ => illegal,
        },
        0x70 if rs2 == 0 && f3 == 0 => Ok(unary(Op::FmvXW)),
        0x78 if rs2 == 0 && f3 == 0 => Ok(unary(Op::FmvWX)),
        _ => illegal,
    }
}
