//! Lane-level functional semantics of the integer and FP datapaths.

use crate::isa::Op;

pub const CANONICAL_NAN: u32 = 0x7FC0_0000;
const SIGN: u32 = 0x8000_0000;

/// Integer register-register and register-immediate operations, including M.
pub fn int_op(op: Op, a: u32, b: u32) -> u32 {
    use Op::*;
    let (sa, sb) = (a as i32, b as i32);
    match op {
        Add | Addi => a.wrapping_add(b),
        Sub => a.wrapping_sub(b),
        Sll | Slli => a << (b & 31),
        Slt | Slti => (sa < sb) as u32,
        Sltu | Sltiu => (a < b) as u32,
        Xor | Xori => a ^ b,
        Srl | Srli => a >> (b & 31),
        Sra | Srai => (sa >> (b & 31)) as u32,
        Or | Ori => a | b,
        And | Andi => a & b,
        Mul => a.wrapping_mul(b),
        Mulh => ((sa as i64 * sb as i64) >> 32) as u32,
        Mulhsu => ((sa as i64 * b as i64) >> 32) as u32,
        Mulhu => ((a as u64 * b as u64) >> 32) as u32,
        Div => match sb {
            0 => u32::MAX,
            _ => sa.wrapping_div(sb) as u32,
        },
        Divu => a.checked_div(b).unwrap_or(u32::MAX),
        Rem => match sb {
            0 => a,
            _ => sa.wrapping_rem(sb) as u32,
        },
        Remu => a.checked_rem(b).unwrap_or(a),
        _ => unreachable!("{op:?} is not an integer ALU operation"),
    }
}

pub fn branch_taken(op: Op, a: u32, b: u32) -> bool {
    use Op::*;
    match op {
        Beq => a == b,
        Bne => a != b,
        Blt => (a as i32) < (b as i32),
        Bge => (a as i32) >= (b as i32),
        Bltu => a < b,
        Bgeu => a >= b,
        _ => unreachable!("{op:?} is not a branch"),
    }
}

fn canon(x: f32) -> u32 {
    if x.is_nan() {
        CANONICAL_NAN
    } else {
        x.to_bits()
    }
}

fn min_max(a: u32, b: u32, max: bool) -> u32 {
    let (x, y) = (f32::from_bits(a), f32::from_bits(b));
    match (x.is_nan(), y.is_nan()) {
        (true, true) => CANONICAL_NAN,
        (true, false) => b,
        (false, true) => a,
        _ if x == y => {
            if max {
                a & b
            } else {
                a | b
            }
        }
        _ if (x > y) == max => a,
        _ => b,
    }
}

/// FP operations on raw register bits. Comparisons and float-to-int
/// conversions return integer results. Every rounding uses
/// round-to-nearest-even.
pub fn fp_op(op: Op, a: u32, b: u32, c: u32) -> u32 {
    use Op::*;
    let (x, y, z) = (f32::from_bits(a), f32::from_bits(b), f32::from_bits(c));
    match op {
        FaddS => canon(x + y),
        FsubS => canon(x - y),
        FmulS => canon(x * y),
        FdivS => canon(x / y),
        FsqrtS => canon(x.sqrt()),
        FmaddS => canon(x.mul_add(y, z)),
        FmsubS => canon(x.mul_add(y, -z)),
        FminS => min_max(a, b, false),
        FmaxS => min_max(a, b, true),
        FeqS => (x == y) as u32,
        FltS => (x < y) as u32,
        FleS => (x <= y) as u32,
        FcvtWS => {
            if x.is_nan() {
                i32::MAX as u32
            } else {
                x.round_ties_even() as i32 as u32
            }
        }
        FcvtWuS => {
            if x.is_nan() {
                u32::MAX
            } else {
                x.round_ties_even() as u32
            }
        }
        FcvtSW => (a as i32 as f32).to_bits(),
        FcvtSWu => (a as f32).to_bits(),
        FsgnjS => a & !SIGN | b & SIGN,
        FsgnjnS => a & !SIGN | !b & SIGN,
        FsgnjxS => a ^ b & SIGN,
        FmvXW | FmvWX => a,
        _ => unreachable!("{op:?} is not an FP operation"),
    }
}
