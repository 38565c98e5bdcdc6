//! Texture sampling: per-stage sampler state configured through CSRs, the
//! fixed-point address generator and bilinear filter, and the pipelined
//! per-core texture unit.
//!
//! Coordinates are signed 16.16 fixed point, normalised to the texture
//! (`0x10000` spans the full width). Blend weights are 8 bits. Texel
//! centres sit at `(i + 0.5) / size`.

mod unit;

pub use unit::{TexRequest, TexResult, TexStats, TextureUnit};

use crate::runtime::CsrError;

pub const TEX_CSR_BASE: u16 = 0x7C0;
pub const TEX_CSR_STRIDE: u16 = 32;
pub const MIP_LEVELS: usize = 16;

pub const FIELD_ADDR: u16 = 0;
pub const FIELD_MIPOFF0: u16 = 1;
pub const FIELD_WIDTH: u16 = 17;
pub const FIELD_HEIGHT: u16 = 18;
pub const FIELD_FORMAT: u16 = 19;
/// Bits 1:0 select the U wrap mode and bits 3:2 the V wrap mode.
pub const FIELD_WRAP: u16 = 20;
pub const FIELD_FILTER: u16 = 21;

/// CSR address of `field` in texture `stage`.
pub const fn tex_csr(stage: u32, field: u16) -> u16 {
    TEX_CSR_BASE + stage as u16 * TEX_CSR_STRIDE + field
}

/// Splits a CSR address into `(stage, field)` if it lies in the texture window.
pub fn decode_tex_csr(csr: u16) -> Option<(u32, u16)> {
    let off = csr.checked_sub(TEX_CSR_BASE)?;
    let (stage, field) = (off / TEX_CSR_STRIDE, off % TEX_CSR_STRIDE);
    (stage < crate::isa::TEX_STAGE_FIELD_LIMIT as u16 && field <= FIELD_FILTER).then_some((stage as u32, field))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TexFormat {
    #[default]
    Rgba8 = 0,
    Rgb565 = 1,
    R8 = 2,
}

impl TexFormat {
    pub fn from_u32(v: u32) -> Option<Self> {
        Some(match v {
            0 => TexFormat::Rgba8,
            1 => TexFormat::Rgb565,
            2 => TexFormat::R8,
            _ => return None,
        })
    }

    /// Bytes per texel.
    pub fn stride(self) -> u32 {
        match self {
            TexFormat::Rgba8 => 4,
            TexFormat::Rgb565 => 2,
            TexFormat::R8 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Wrap {
    #[default]
    Clamp = 0,
    Repeat = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Filter {
    #[default]
    Point = 0,
    Bilinear = 1,
}

/// Sampler state of one texture stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextureStage {
    pub addr: u32,
    pub mip_offsets: [u32; MIP_LEVELS],
    pub width: u32,
    pub height: u32,
    pub format: TexFormat,
    pub wrap_u: Wrap,
    pub wrap_v: Wrap,
    pub filter: Filter,
}

impl Default for TextureStage {
    fn default() -> Self {
        TextureStage {
            addr: 0,
            mip_offsets: [0; MIP_LEVELS],
            width: 1,
            height: 1,
            format: TexFormat::Rgba8,
            wrap_u: Wrap::Clamp,
            wrap_v: Wrap::Clamp,
            filter: Filter::Point,
        }
    }
}

impl TextureStage {
    pub fn stride(&self) -> u32 {
        self.format.stride()
    }

    /// Highest mip level the dimensions allow.
    pub fn max_level(&self) -> u32 {
        (31 - self.width.max(self.height).max(1).leading_zeros()).min(MIP_LEVELS as u32 - 1)
    }

    pub fn level_dims(&self, level: u32) -> (u32, u32) {
        ((self.width >> level).max(1), (self.height >> level).max(1))
    }

    /// Mip level selected by a 16.16 level of detail.
    pub fn level_of(&self, lod: i32) -> u32 {
        ((lod >> 16).max(0) as u32).min(self.max_level())
    }

    pub fn write_field(&mut self, field: u16, value: u32) -> Result<(), u32> {
        match field {
            FIELD_ADDR => self.addr = value,
            f @ FIELD_MIPOFF0..=16 => self.mip_offsets[(f - FIELD_MIPOFF0) as usize] = value,
            FIELD_WIDTH | FIELD_HEIGHT => {
                if value == 0 || value > 1 << 15 {
                    return Err(value);
                }
                if field == FIELD_WIDTH {
                    self.width = value;
                } else {
                    self.height = value;
                }
            }
            FIELD_FORMAT => self.format = TexFormat::from_u32(value).ok_or(value)?,
            FIELD_WRAP => {
                let mode = |m| match m {
                    0 => Ok(Wrap::Clamp),
                    1 => Ok(Wrap::Repeat),
                    _ => Err(value),
                };
                if value > 0xF {
                    return Err(value);
                }
                self.wrap_u = mode(value & 3)?;
                self.wrap_v = mode(value >> 2 & 3)?;
            }
            FIELD_FILTER => {
                self.filter = match value {
                    0 => Filter::Point,
                    1 => Filter::Bilinear,
                    _ => return Err(value),
                }
            }
            _ => return Err(value),
        }
        Ok(())
    }

    pub fn read_field(&self, field: u16) -> Option<u32> {
        Some(match field {
            FIELD_ADDR => self.addr,
            f @ FIELD_MIPOFF0..=16 => self.mip_offsets[(f - FIELD_MIPOFF0) as usize],
            FIELD_WIDTH => self.width,
            FIELD_HEIGHT => self.height,
            FIELD_FORMAT => self.format as u32,
            FIELD_WRAP => self.wrap_u as u32 | (self.wrap_v as u32) << 2,
            FIELD_FILTER => self.filter as u32,
            _ => return None,
        })
    }
}

/// The texture CSR block of one core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextureCsrs {
    pub stages: Vec<TextureStage>,
}

impl TextureCsrs {
    pub fn new(stages: u32) -> Self {
        TextureCsrs { stages: vec![TextureStage::default(); stages as usize] }
    }

    fn locate(&self, csr: u16) -> Result<(usize, u16), CsrError> {
        match decode_tex_csr(csr) {
            Some((s, f)) if (s as usize) < self.stages.len() => Ok((s as usize, f)),
            _ => Err(CsrError::Unknown(csr)),
        }
    }

    pub fn write(&mut self, csr: u16, value: u32) -> Result<(), CsrError> {
        let (s, f) = self.locate(csr)?;
        self.stages[s].write_field(f, value).map_err(|value| CsrError::BadValue { csr, value })
    }

    pub fn read(&self, csr: u16) -> Result<u32, CsrError> {
        let (s, f) = self.locate(csr)?;
        self.stages[s].read_field(f).ok_or(CsrError::Unknown(csr))
    }
}

/// Maps a possibly out-of-range texel index into `[0, size)`.
pub fn wrap_coord(i: i32, size: u32, mode: Wrap) -> u32 {
    let size = size.max(1) as i64;
    let i = i as i64;
    (match mode {
        Wrap::Clamp => i.clamp(0, size - 1),
        Wrap::Repeat => i.rem_euclid(size),
    }) as u32
}

/// Texel addresses and blend weights for one lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    /// `[x0y0, x1y0, x0y1, x1y1]`; only the first is used for point sampling.
    pub addrs: [u32; 4],
    pub count: usize,
    pub frac_u: u32,
    pub frac_v: u32,
}

impl Footprint {
    pub fn addrs(&self) -> &[u32] {
        &self.addrs[..self.count]
    }
}

/// Splits a 16.16 texel coordinate into the lower sample index and an 8-bit
/// blend weight rounded to nearest. A weight that rounds up to 1.0 moves to
/// the next texel with weight 0.
fn split_coord(x_fp: i64) -> (i32, u32) {
    let mut x0 = (x_fp >> 16) as i32;
    let mut f = ((x_fp & 0xFFFF) as u32 + 0x80) >> 8;
    if f == 256 {
        x0 += 1;
        f = 0;
    }
    (x0, f)
}

/// Address generation for one lane at mip level `level_of(lod)`.
pub fn address_gen(st: &TextureStage, u: i32, v: i32, lod: i32, filter: Filter) -> Footprint {
    let level = st.level_of(lod);
    let (w, h) = st.level_dims(level);
    let base = st.addr.wrapping_add(st.mip_offsets[level as usize]);
    let at = |x: u32, y: u32| base.wrapping_add((y * w + x) * st.stride());
    let (ux, vy) = (u as i64 * w as i64, v as i64 * h as i64);
    match filter {
        Filter::Point => {
            let x = wrap_coord((ux >> 16) as i32, w, st.wrap_u);
            let y = wrap_coord((vy >> 16) as i32, h, st.wrap_v);
            let a = at(x, y);
            Footprint { addrs: [a; 4], count: 1, frac_u: 0, frac_v: 0 }
        }
        Filter::Bilinear => {
            let (x0, fu) = split_coord(ux - 0x8000);
            let (y0, fv) = split_coord(vy - 0x8000);
            let (xa, xb) = (wrap_coord(x0, w, st.wrap_u), wrap_coord(x0.saturating_add(1), w, st.wrap_u));
            let (ya, yb) = (wrap_coord(y0, h, st.wrap_v), wrap_coord(y0.saturating_add(1), h, st.wrap_v));
            Footprint { addrs: [at(xa, ya), at(xb, ya), at(xa, yb), at(xb, yb)], count: 4, frac_u: fu, frac_v: fv }
        }
    }
}

/// Expands a raw texel (little-endian, low `stride` bytes) to RGBA8.
pub fn convert_format(raw: u32, format: TexFormat) -> [u8; 4] {
    match format {
        TexFormat::Rgba8 => raw.to_le_bytes(),
        TexFormat::Rgb565 => {
            let r = (raw >> 11 & 0x1F) as u8;
            let g = (raw >> 5 & 0x3F) as u8;
            let b = (raw & 0x1F) as u8;
            [r << 3 | r >> 2, g << 2 | g >> 4, b << 3 | b >> 2, 255]
        }
        TexFormat::R8 => [raw as u8, 0, 0, 255],
    }
}

/// `a + (b - a) * f / 256`, rounded half up. `f` may be 0..=256.
pub fn lerp8(a: u8, b: u8, f: u32) -> u8 {
    let (a, b) = (a as i32, b as i32);
    (a + (((b - a) * f as i32 + 128) >> 8)) as u8
}

pub fn lerp_rgba(a: [u8; 4], b: [u8; 4], f: u32) -> [u8; 4] {
    std::array::from_fn(|i| lerp8(a[i], b[i], f))
}

/// Bilinear blend of the corners `[c00, c10, c01, c11]`.
pub fn filter_bilinear(c: [[u8; 4]; 4], frac_u: u32, frac_v: u32) -> [u8; 4] {
    lerp_rgba(lerp_rgba(c[0], c[1], frac_u), lerp_rgba(c[2], c[3], frac_u), frac_v)
}

/// Packs RGBA as `0xAABBGGRR`.
pub fn pack_rgba(c: [u8; 4]) -> u32 {
    u32::from_le_bytes(c)
}

pub fn unpack_rgba(v: u32) -> [u8; 4] {
    v.to_le_bytes()
}

/// Reads the raw texel at `addr` through `read_byte`.
pub fn fetch_texel(addr: u32, format: TexFormat, mut read_byte: impl FnMut(u32) -> u8) -> u32 {
    (0..format.stride()).fold(0, |acc, i| acc | (read_byte(addr.wrapping_add(i)) as u32) << (8 * i))
}

/// Host-side reference of one `tex` instruction using the same fixed-point
/// datapath as the hardware unit.
pub fn sample(st: &TextureStage, u: i32, v: i32, lod: i32, read_byte: &mut impl FnMut(u32) -> u8) -> u32 {
    let fp = address_gen(st, u, v, lod, st.filter);
    let texel = |a: u32, rb: &mut dyn FnMut(u32) -> u8| convert_format(fetch_texel(a, st.format, rb), st.format);
    let c: [[u8; 4]; 4] = if fp.count == 1 {
        [texel(fp.addrs[0], read_byte); 4]
    } else {
        std::array::from_fn(|i| texel(fp.addrs[i], read_byte))
    };
    pack_rgba(filter_bilinear(c, fp.frac_u, fp.frac_v))
}

/// Blend weight for the trilinear step: the rounded fraction of `lod`,
/// in `0..=256`.
pub fn lod_fraction(lod: i32) -> u32 {
    if lod < 0 {
        0
    } else {
        ((lod as u32 & 0xFFFF) + 0x80) >> 8
    }
}

/// Trilinear pseudo-instruction: two `tex` samples at adjacent mip levels
/// blended by the fractional level of detail.
pub fn trilinear(st: &TextureStage, u: i32, v: i32, lod: i32, read_byte: &mut impl FnMut(u32) -> u8) -> u32 {
    let a = sample(st, u, v, lod, read_byte);
    let b = sample(st, u, v, lod.saturating_add(1 << 16), read_byte);
    pack_rgba(lerp_rgba(unpack_rgba(a), unpack_rgba(b), lod_fraction(lod)))
}
