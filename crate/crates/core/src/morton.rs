//! Coordinate quantization and Z-order (Morton) codes.
//!
//! Points are mapped affinely onto `[0, 2^B)²` and the two quantized axes
//! are bit-interleaved, x in the even bits. A quadtree square at depth `d`
//! is then exactly the code interval sharing the top `2d` bits.

use crate::graph::{BoundingBox, Point};

/// Bits per axis.
pub const DEFAULT_BITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quantizer {
    bbox: BoundingBox,
    bits: u32,
}

impl Quantizer {
    /// `bits` must lie in `1..=16` so codes fit a `u32`.
    pub fn new(bbox: BoundingBox, bits: u32) -> Self {
        assert!((1..=16).contains(&bits), "bits per axis must be in 1..=16");
        Quantizer { bbox, bits }
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn axis(&self, v: i64, lo: i64, extent: i64) -> u32 {
        let q = ((v - lo) as i128) << self.bits;
        (q / (extent as i128 + 1)).clamp(0, (1i128 << self.bits) - 1) as u32
    }

    pub fn quantize(&self, p: Point) -> (u32, u32) {
        (
            self.axis(p.x, self.bbox.min_x, self.bbox.width()),
            self.axis(p.y, self.bbox.min_y, self.bbox.height()),
        )
    }

    pub fn code(&self, p: Point) -> u32 {
        let (x, y) = self.quantize(p);
        interleave(x, y)
    }

    /// Code of the square at `depth` containing `code`.
    pub fn prefix(&self, code: u32, depth: u32) -> u32 {
        if depth == 0 {
            0
        } else {
            code >> (2 * (self.bits - depth))
        }
    }

    /// Inclusive code range of the square `(depth, prefix)`.
    pub fn square_range(&self, depth: u32, prefix: u32) -> (u32, u32) {
        let shift = 2 * (self.bits - depth);
        let lo = (prefix as u64) << shift;
        let hi = ((prefix as u64 + 1) << shift) - 1;
        (lo as u32, hi as u32)
    }

    /// Largest code.
    pub fn max_code(&self) -> u32 {
        ((1u64 << (2 * self.bits)) - 1) as u32
    }
}

fn spread(v: u32) -> u32 {
    let mut x = v & 0xffff;
    x = (x | (x << 8)) & 0x00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333;
    (x | (x << 1)) & 0x5555_5555
}

fn compact(v: u32) -> u32 {
    let mut x = v & 0x5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333;
    x = (x | (x >> 2)) & 0x0f0f_0f0f;
    x = (x | (x >> 4)) & 0x00ff_00ff;
    (x | (x >> 8)) & 0xffff
}

/// Interleaves the low 16 bits of `x` (even bits) and `y` (odd bits).
pub fn interleave(x: u32, y: u32) -> u32 {
    spread(x) | (spread(y) << 1)
}

pub fn deinterleave(code: u32) -> (u32, u32) {
    (compact(code), compact(code >> 1))
}
