//! Random straight-line RV32IM(F) programs with forward branches only, built
//! with hand-written encoders so they share nothing with the crate's
//! assembler.

use rand::seq::SliceRandom;
use rand::Rng;

/// Register that holds the data window base and is never overwritten.
pub const BASE_REG: u32 = 31;

pub fn r(f7: u32, rs2: u32, rs1: u32, f3: u32, rd: u32, op: u32) -> u32 {
    f7 << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | rd << 7 | op
}

pub fn i(imm: i32, rs1: u32, f3: u32, rd: u32, op: u32) -> u32 {
    ((imm as u32) & 0xFFF) << 20 | rs1 << 15 | f3 << 12 | rd << 7 | op
}

pub fn s(imm: i32, rs2: u32, rs1: u32, f3: u32) -> u32 {
    let u = imm as u32;
    (u >> 5 & 0x7F) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | (u & 31) << 7 | 0x23
}

pub fn b(imm: i32, rs2: u32, rs1: u32, f3: u32) -> u32 {
    let u = imm as u32;
    (u >> 12 & 1) << 31 | (u >> 5 & 0x3F) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | (u >> 1 & 0xF) << 8 | (u >> 11 & 1) << 7 | 0x63
}

pub fn j(imm: i32, rd: u32) -> u32 {
    let u = imm as u32;
    (u >> 20 & 1) << 31 | (u >> 1 & 0x3FF) << 21 | (u >> 11 & 1) << 20 | (u >> 12 & 0xFF) << 12 | rd << 7 | 0x6F
}

pub fn u(upper: u32, rd: u32, op: u32) -> u32 {
    upper << 12 | rd << 7 | op
}

pub const TMC_ZERO: u32 = 0x0000_000B;

/// Identity CSRs a generated program may read.
pub const ID_CSRS: [u16; 7] = [0xCC0, 0xCC1, 0xCC2, 0xCC3, 0xCC4, 0xCC5, 0xCC6];

fn fp_instr(rng: &mut impl Rng) -> u32 {
    let (rd, rs1, rs2, rs3) = (rng.gen_range(0..32), rng.gen_range(0..32), rng.gen_range(0..32), rng.gen_range(0..32));
    let xrd = rng.gen_range(1..BASE_REG);
    let xrs = rng.gen_range(0..32);
    match rng.gen_range(0..16) {
        0 => r(0x00, rs2, rs1, 0, rd, 0x53),
        1 => r(0x04, rs2, rs1, 0, rd, 0x53),
        2 => r(0x08, rs2, rs1, 0, rd, 0x53),
        3 => r(0x0C, rs2, rs1, 0, rd, 0x53),
        4 => r(0x2C, 0, rs1, 0, rd, 0x53),
        5 => r(0x10, rs2, rs1, rng.gen_range(0..3), rd, 0x53),
        6 => r(0x14, rs2, rs1, rng.gen_range(0..2), rd, 0x53),
        7 => r(0x50, rs2, rs1, rng.gen_range(0..3), xrd, 0x53),
        8 => r(0x60, rng.gen_range(0..2), rs1, 0, xrd, 0x53),
        9 | 10 => r(0x68, rng.gen_range(0..2), xrs, 0, rd, 0x53),
        11 => r(0x70, 0, rs1, 0, xrd, 0x53),
        12 | 13 => r(0x78, 0, xrs, 0, rd, 0x53),
        _ => rs3 << 27 | rs2 << 20 | rs1 << 15 | rd << 7 | if rng.gen() { 0x43 } else { 0x47 },
    }
}

/// Like [`random_program`], with a share of single-precision instructions
/// including FP loads and stores through the data window.
pub fn random_fp_program(rng: &mut impl Rng, max_len: usize, data_base: u32, window: i32) -> Vec<u32> {
    let mut words = random_program(rng, max_len, data_base, window);
    let body = words.len() - 2;
    for w in words[1..=body].iter_mut() {
        // Replace only straight-line slots so branch distances stay valid.
        let op = *w & 0x7F;
        if op != 0x63 && op != 0x6F && rng.gen_bool(0.4) {
            *w = match rng.gen_range(0..8) {
                0 => i(rng.gen_range(0..window / 4) * 4, BASE_REG, 2, rng.gen_range(0..32), 0x07),
                1 => {
                    let off = rng.gen_range(0..window / 4) * 4;
                    s(off, rng.gen_range(0..32), BASE_REG, 2) & !0x7F | 0x27
                }
                _ => fp_instr(rng),
            };
        }
    }
    // Forward branches land no further than the final `tmc`, so a block
    // inserted just before it is reached by every path.
    let tail = words.pop().unwrap();
    words.extend(numeric_block(rng));
    words.push(tail);
    words
}

/// Straight-line float code on full-mantissa operands. Random bit patterns
/// rarely expose fused rounding or conversion ties; this block does.
fn numeric_block(rng: &mut impl Rng) -> Vec<u32> {
    let mut out = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let mut f: Vec<u32> = (0..32).collect();
        f.shuffle(rng);
        let (a, b, c, t, d) = (f[0], f[1], f[2], f[3], f[4]);
        let xd = rng.gen_range(1..BASE_REG);
        out.extend([
            r(0x68, 0, rng.gen_range(1..32), 0, a, 0x53),
            r(0x68, 0, rng.gen_range(1..32), 0, b, 0x53),
            r(0x0C, b, a, 0, c, 0x53),
            r(0x08, c, a, 0, t, 0x53),
            // d = a*c - round(a*c): the rounding error of the product.
            t << 27 | c << 20 | a << 15 | d << 7 | 0x47,
            r(0x10, t, t, 1, t, 0x53),
            t << 27 | c << 20 | a << 15 | t << 7 | 0x43,
            r(0x60, rng.gen_range(0..2), c, 0, xd, 0x53),
            r(0x14, t, d, rng.gen_range(0..2), d, 0x53),
            r(0x70, 0, d, 0, rng.gen_range(1..BASE_REG), 0x53),
        ]);
        // n / 2 lands on a tie for odd n.
        let (xn, x2) = (rng.gen_range(1..BASE_REG), rng.gen_range(1..BASE_REG));
        out.extend([
            i(rng.gen_range(-9..10), 0, 0, xn, 0x13),
            i(2, 0, 0, x2, 0x13),
            r(0x68, 0, xn, 0, a, 0x53),
            r(0x68, 0, x2, 0, b, 0x53),
            r(0x0C, b, a, 0, c, 0x53),
            r(0x60, rng.gen_range(0..2), c, 0, xd, 0x53),
        ]);
    }
    out
}

/// A random program of at most `max_len` words. The data window of
/// `window` bytes sits at `data_base` (4 KiB aligned) and is addressed
/// through [`BASE_REG`].
pub fn random_program(rng: &mut impl Rng, max_len: usize, data_base: u32, window: i32) -> Vec<u32> {
    assert_eq!(data_base & 0xFFF, 0);
    let body = rng.gen_range(1..=max_len - 2);
    let mut out = vec![u(data_base >> 12, BASE_REG, 0x37)];
    let rd = |rng: &mut dyn rand::RngCore| rng.gen_range(1..BASE_REG);
    let rs = |rng: &mut dyn rand::RngCore| rng.gen_range(0..32);
    let small = |rng: &mut dyn rand::RngCore| -> i32 {
        if rng.gen_bool(0.3) {
            *[0, 1, -1, 2047, -2048].choose(rng).unwrap()
        } else {
            rng.gen_range(-2048..2048)
        }
    };
    for k in 0..body {
        let left = (body - k - 1) as i32;
        let w = match rng.gen_range(0..100) {
            0..=29 => {
                let (f3, f7) = *[(0, 0), (0, 0x20), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (5, 0x20), (6, 0), (7, 0)]
                    .choose(rng)
                    .unwrap();
                r(f7, rs(rng), rs(rng), f3, rd(rng), 0x33)
            }
            30..=44 => r(1, rs(rng), rs(rng), rng.gen_range(0..8), rd(rng), 0x33),
            45..=59 => match rng.gen_range(0..9) {
                f3 @ (0 | 2 | 3 | 4 | 6 | 7) => i(small(rng), rs(rng), f3, rd(rng), 0x13),
                1 => i(rng.gen_range(0..32), rs(rng), 1, rd(rng), 0x13),
                _ => i(rng.gen_range(0..32) | if rng.gen() { 0x400 } else { 0 }, rs(rng), 5, rd(rng), 0x13),
            },
            60..=63 => u(rng.gen(), rd(rng), if rng.gen() { 0x37 } else { 0x17 }),
            64..=77 => {
                let f3 = *[0, 1, 2, 4, 5].choose(rng).unwrap();
                let size = 1 << (f3 & 3);
                let off = rng.gen_range(0..window / size) * size;
                i(off, BASE_REG, f3, rd(rng), 0x03)
            }
            78..=89 => {
                let f3 = rng.gen_range(0..3);
                let size = 1 << f3;
                let off = rng.gen_range(0..window / size) * size;
                s(off, rs(rng), BASE_REG, f3)
            }
            90..=96 if left > 0 => {
                let skip = rng.gen_range(1..=left.min(8));
                let f3 = *[0, 1, 4, 5, 6, 7].choose(rng).unwrap();
                b(4 * (skip + 1), rs(rng), rs(rng), f3)
            }
            97 if left > 0 => j(4 * (rng.gen_range(1..=left.min(8)) + 1), rd(rng)),
            _ => i(0, 0, 2, rd(rng), 0x73) | (*ID_CSRS.choose(rng).unwrap() as u32) << 20,
        };
        out.push(w);
    }
    out.push(TMC_ZERO);
    out
}
