//! Binary masks and the box-counting dimension estimate.

use std::io::Write;

use serde::Serialize;

use crate::fit::{least_squares, LineFit};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![true; width * height] }
    }

    /// Level-`level` middle-thirds Cantor dust drawn on a `size × size` grid:
    /// a pixel is set iff its centre lies in the dust. Choose `level` so the
    /// smallest squares span a few pixels.
    pub fn cantor_dust(size: usize, level: u32) -> Self {
        let in_cantor = |mut t: f64| {
            for _ in 0..level {
                t *= 3.0;
                let digit = t.floor();
                t -= digit;
                if digit == 1.0 {
                    return false;
                }
            }
            true
        };
        let axis: Vec<bool> = (0..size).map(|i| in_cantor((i as f64 + 0.5) / size as f64)).collect();
        let mut mask = Self::empty(size, size);
        for y in 0..size {
            for x in 0..size {
                mask.bits[y * size + x] = axis[x] && axis[y];
            }
        }
        mask
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Binary portable bitmap (P4); set pixels are black.
    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        let row_bytes = self.width.div_ceil(8);
        for y in 0..self.height {
            let mut row = vec![0u8; row_bytes];
            for x in 0..self.width {
                if self.get(x, y) {
                    row[x / 8] |= 0x80 >> (x % 8);
                }
            }
            out.extend_from_slice(&row);
        }
        out
    }

    /// Number of `size × size` tiles containing at least one set pixel.
    pub fn occupied_boxes(&self, size: usize) -> usize {
        let bw = self.width.div_ceil(size);
        let bh = self.height.div_ceil(size);
        let mut occupied = vec![false; bw * bh];
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    occupied[(y / size) * bw + x / size] = true;
                }
            }
        }
        occupied.into_iter().filter(|&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCountRow {
    pub box_size: usize,
    pub occupied: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCount {
    pub dimension: f64,
    pub fit: LineFit,
    pub rows: Vec<BoxCountRow>,
}

/// Box sizes `1, 2, 4, …` up to a quarter of the shorter mask side.
pub fn default_box_sizes(mask: &Mask) -> Vec<usize> {
    let limit = (mask.width.min(mask.height) / 4).max(8);
    std::iter::successors(Some(1usize), |s| Some(s * 2)).take_while(|&s| s <= limit).collect()
}

/// Slope of `log N(s)` against `log(1/s)` over dyadic box sizes `s`.
pub fn box_counting(mask: &Mask, box_sizes: &[usize]) -> Result<BoxCount> {
    if box_sizes.len() < 4 {
        return Err(Error::InvalidParameter("at least four box sizes are required".into()));
    }
    if let Some(bad) = box_sizes.iter().find(|s| !s.is_power_of_two()) {
        return Err(Error::InvalidParameter(format!("box size {bad} is not dyadic")));
    }
    if mask.count() == 0 {
        return Err(Error::DegenerateMask("no pixel is set".into()));
    }
    let rows: Vec<BoxCountRow> =
        box_sizes.iter().map(|&s| BoxCountRow { box_size: s, occupied: mask.occupied_boxes(s) }).collect();
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (-(r.box_size as f64).ln(), (r.occupied as f64).ln())).collect();
    let fit = least_squares(&pts).ok_or_else(|| Error::DegenerateMask("box sizes coincide".into()))?;
    Ok(BoxCount { dimension: fit.slope, fit, rows })
}

pub fn write_box_count_csv<W: Write>(out: W, count: &BoxCount) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &count.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
