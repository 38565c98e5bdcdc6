//! Straight-line scalar RV32IMF interpreter used as a reference model. It
//! decodes instruction words itself, straight from the bit fields, and
//! treats the SIMT extension the way a single thread sees it: `tmc 0` halts,
//! every other extension instruction is a no-op.

use std::collections::HashMap;

pub struct Oracle {
    pub x: [u32; 32],
    pub f: [u32; 32],
    pub pc: u32,
    pub mem: HashMap<u32, u8>,
    pub csrs: HashMap<u16, u32>,
    pub console: Vec<u8>,
    pub halted: bool,
    pub steps: u64,
}

const CONSOLE: u32 = 0xFFFF_0000;

const QNAN: u32 = 0x7FC0_0000;

fn canonical(v: f32) -> u32 {
    if v.is_nan() {
        QNAN
    } else {
        v.to_bits()
    }
}

/// IEEE-754 minNum/maxNum as RISC-V defines them: a single NaN operand is
/// ignored, -0 orders below +0.
fn fminmax(a: u32, b: u32, max: bool) -> u32 {
    let (x, y) = (f32::from_bits(a), f32::from_bits(b));
    match (x.is_nan(), y.is_nan()) {
        (true, true) => QNAN,
        (true, false) => b,
        (false, true) => a,
        _ if x == y => {
            // Equal values differ only in the sign of zero.
            let neg = if max { a & b } else { a | b } & 0x8000_0000;
            (a & 0x7FFF_FFFF) | neg
        }
        _ => {
            if (x > y) == max {
                a
            } else {
                b
            }
        }
    }
}

/// Float to integer with round-to-nearest-even, saturating; NaN gives the
/// largest value.
fn to_int(v: f32, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        return hi;
    }
    let r = (v as f64).round_ties_even();
    r.clamp(lo, hi)
}

fn sext(v: u32, bits: u32) -> i32 {
    ((v << (32 - bits)) as i32) >> (32 - bits)
}

impl Oracle {
    pub fn new(pc: u32) -> Self {
        Oracle { x: [0; 32], f: [0; 32], pc, mem: HashMap::new(), csrs: HashMap::new(), console: vec![], halted: false, steps: 0 }
    }

    pub fn load(&mut self, addr: u32, bytes: &[u8]) {
        for (i, &b) in bytes.iter().enumerate() {
            self.mem.insert(addr + i as u32, b);
        }
    }

    pub fn byte(&self, addr: u32) -> u8 {
        self.mem.get(&addr).copied().unwrap_or(0)
    }

    pub fn read_word(&self, addr: u32) -> u32 {
        self.read(addr, 4)
    }

    fn read(&self, addr: u32, n: u32) -> u32 {
        if addr == CONSOLE {
            return 0;
        }
        (0..n).fold(0, |v, i| v | (self.byte(addr + i) as u32) << (8 * i))
    }

    fn write(&mut self, addr: u32, n: u32, v: u32) {
        if addr == CONSOLE {
            self.console.push(v as u8);
            return;
        }
        for i in 0..n {
            self.mem.insert(addr + i, (v >> (8 * i)) as u8);
        }
    }

    pub fn run(&mut self, max_steps: u64) -> Result<(), String> {
        while !self.halted {
            if self.steps >= max_steps {
                return Err("step limit".into());
            }
            self.step()?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<(), String> {
        let w = self.read(self.pc, 4);
        let opcode = w & 0x7F;
        let rd = (w >> 7 & 31) as usize;
        let f3 = w >> 12 & 7;
        let rs1 = (w >> 15 & 31) as usize;
        let rs2 = (w >> 20 & 31) as usize;
        let f7 = w >> 25;
        let (a, b) = (self.x[rs1], self.x[rs2]);
        let imm_i = sext(w >> 20, 12) as u32;
        let imm_s = sext((w >> 25) << 5 | (w >> 7 & 31), 12) as u32;
        let imm_b = sext((w >> 31) << 12 | (w >> 7 & 1) << 11 | (w >> 25 & 0x3F) << 5 | (w >> 8 & 0xF) << 1, 13) as u32;
        let imm_j = sext((w >> 31) << 20 | (w >> 12 & 0xFF) << 12 | (w >> 20 & 1) << 11 | (w >> 21 & 0x3FF) << 1, 21) as u32;
        let mut next = self.pc.wrapping_add(4);
        let mut result: Option<u32> = None;
        let bad = || Err(format!("oracle: unsupported word {w:#010x} at {:#x}", self.pc));
        match opcode {
            0x37 => result = Some(w & 0xFFFF_F000),
            0x17 => result = Some(self.pc.wrapping_add(w & 0xFFFF_F000)),
            0x6F => {
                result = Some(next);
                next = self.pc.wrapping_add(imm_j);
            }
            0x67 => {
                result = Some(next);
                next = a.wrapping_add(imm_i) & !1;
            }
            0x63 => {
                let taken = match f3 {
                    0 => a == b,
                    1 => a != b,
                    4 => (a as i32) < (b as i32),
                    5 => (a as i32) >= (b as i32),
                    6 => a < b,
                    7 => a >= b,
                    _ => return bad(),
                };
                if taken {
                    next = self.pc.wrapping_add(imm_b);
                }
            }
            0x03 => {
                let addr = a.wrapping_add(imm_i);
                result = Some(match f3 {
                    0 => sext(self.read(addr, 1), 8) as u32,
                    1 => sext(self.read(addr, 2), 16) as u32,
                    2 => self.read(addr, 4),
                    4 => self.read(addr, 1),
                    5 => self.read(addr, 2),
                    _ => return bad(),
                });
            }
            0x23 => {
                let addr = a.wrapping_add(imm_s);
                match f3 {
                    0 => self.write(addr, 1, b),
                    1 => self.write(addr, 2, b),
                    2 => self.write(addr, 4, b),
                    _ => return bad(),
                }
            }
            0x13 => {
                let sh = imm_i & 31;
                result = Some(match f3 {
                    0 => a.wrapping_add(imm_i),
                    2 => ((a as i32) < (imm_i as i32)) as u32,
                    3 => (a < imm_i) as u32,
                    4 => a ^ imm_i,
                    6 => a | imm_i,
                    7 => a & imm_i,
                    1 => a << sh,
                    5 if f7 == 0x20 => ((a as i32) >> sh) as u32,
                    5 => a >> sh,
                    _ => return bad(),
                });
            }
            0x33 if f7 == 1 => {
                let (sa, sb) = (a as i32 as i64, b as i32 as i64);
                let (ua, ub) = (a as u64, b as u64);
                result = Some(match f3 {
                    0 => (sa * sb) as u32,
                    1 => ((sa * sb) >> 32) as u32,
                    2 => ((sa * ub as i64) >> 32) as u32,
                    3 => ((ua * ub) >> 32) as u32,
                    4 => {
                        if b == 0 {
                            u32::MAX
                        } else {
                            (sa / sb) as i32 as u32
                        }
                    }
                    5 => {
                        if b == 0 {
                            u32::MAX
                        } else {
                            a / b
                        }
                    }
                    6 => {
                        if b == 0 {
                            a
                        } else {
                            (sa % sb) as i32 as u32
                        }
                    }
                    _ => {
                        if b == 0 {
                            a
                        } else {
                            a % b
                        }
                    }
                });
            }
            0x33 => {
                result = Some(match (f3, f7) {
                    (0, 0) => a.wrapping_add(b),
                    (0, 0x20) => a.wrapping_sub(b),
                    (1, 0) => a << (b & 31),
                    (2, 0) => ((a as i32) < (b as i32)) as u32,
                    (3, 0) => (a < b) as u32,
                    (4, 0) => a ^ b,
                    (5, 0) => a >> (b & 31),
                    (5, 0x20) => ((a as i32) >> (b & 31)) as u32,
                    (6, 0) => a | b,
                    (7, 0) => a & b,
                    _ => return bad(),
                });
            }
            0x0F => {}
            0x73 if f3 == 2 && rs1 == 0 => {
                let csr = (w >> 20) as u16;
                result = Some(*self.csrs.get(&csr).ok_or_else(|| format!("oracle: csr {csr:#x}"))?);
            }
            0x07 if f3 == 2 => self.f[rd] = self.read(a.wrapping_add(imm_i), 4),
            0x27 if f3 == 2 => {
                let v = self.f[rs2];
                self.write(a.wrapping_add(imm_s), 4, v);
            }
            0x43 | 0x47 if f7 & 3 == 0 => {
                let rs3 = (w >> 27) as usize;
                let (x, y, z) = (f32::from_bits(self.f[rs1]), f32::from_bits(self.f[rs2]), f32::from_bits(self.f[rs3]));
                let z = if opcode == 0x47 { -z } else { z };
                self.f[rd] = canonical(x.mul_add(y, z));
            }
            0x53 => {
                let (fa, fb) = (self.f[rs1], self.f[rs2]);
                let (x, y) = (f32::from_bits(fa), f32::from_bits(fb));
                let mut fres = None;
                match (f7, f3, rs2) {
                    (0x00, _, _) => fres = Some(canonical(x + y)),
                    (0x04, _, _) => fres = Some(canonical(x - y)),
                    (0x08, _, _) => fres = Some(canonical(x * y)),
                    (0x0C, _, _) => fres = Some(canonical(x / y)),
                    (0x2C, _, 0) => fres = Some(canonical(x.sqrt())),
                    (0x10, 0, _) => fres = Some(fa & 0x7FFF_FFFF | fb & 0x8000_0000),
                    (0x10, 1, _) => fres = Some(fa & 0x7FFF_FFFF | !fb & 0x8000_0000),
                    (0x10, 2, _) => fres = Some(fa ^ fb & 0x8000_0000),
                    (0x14, 0, _) => fres = Some(fminmax(fa, fb, false)),
                    (0x14, 1, _) => fres = Some(fminmax(fa, fb, true)),
                    (0x50, 2, _) => result = Some((x == y) as u32),
                    (0x50, 1, _) => result = Some((x < y) as u32),
                    (0x50, 0, _) => result = Some((x <= y) as u32),
                    (0x60, _, 0) => result = Some(to_int(x, i32::MIN as f64, i32::MAX as f64) as i32 as u32),
                    (0x60, _, 1) => result = Some(to_int(x, 0.0, u32::MAX as f64) as u32),
                    (0x68, _, 0) => fres = Some((a as i32 as f32).to_bits()),
                    (0x68, _, 1) => fres = Some((a as f32).to_bits()),
                    (0x70, 0, 0) => result = Some(fa),
                    (0x78, 0, 0) => fres = Some(a),
                    _ => return bad(),
                }
                if let Some(v) = fres {
                    self.f[rd] = v;
                }
            }
            0x0B => {
                if f7 == 0 && a == 0 {
                    self.halted = true;
                }
            }
            _ => return bad(),
        }
        if let Some(v) = result {
            if rd != 0 {
                self.x[rd] = v;
            }
        }
        self.pc = next;
        self.steps += 1;
        Ok(())
    }
}
