//! Escape/pole-capture classification images and a box-counting estimate of
//! the classification boundary.

mod boxcount;

pub use boxcount::{box_counting, default_box_sizes, write_box_count_csv, BoxCount, BoxCountRow, Mask};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::families::FamilySpec;
use crate::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderGrid {
    pub center: C,
    pub width: f64,
    pub pixels_x: usize,
    pub pixels_y: usize,
    pub max_iter: u32,
    pub escape_radius: f64,
    pub pole_capture_radius: f64,
}

impl Default for RenderGrid {
    fn default() -> Self {
        Self {
            center: C::new(0.0, 0.0),
            width: 4.0,
            pixels_x: 512,
            pixels_y: 512,
            max_iter: 64,
            escape_radius: 1e6,
            pole_capture_radius: 1e-6,
        }
    }
}

impl RenderGrid {
    pub fn validate(&self) -> Result<()> {
        if self.pixels_x < 16 || self.pixels_y < 16 {
            return Err(Error::InvalidParameter("at least 16 pixels per side".into()));
        }
        if !(self.width > 0.0) || !self.center.is_finite() {
            return Err(Error::InvalidParameter("width must be positive and the centre finite".into()));
        }
        if !(self.escape_radius > self.width) {
            return Err(Error::InvalidParameter("escape radius must exceed the frame width".into()));
        }
        if !(self.pole_capture_radius > 0.0) {
            return Err(Error::InvalidParameter("pole capture radius must be positive".into()));
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.width * self.pixels_y as f64 / self.pixels_x as f64
    }

    /// Centre of pixel `(x, y)`, with row 0 at the top.
    pub fn pixel_center(&self, x: usize, y: usize) -> C {
        let step = self.width / self.pixels_x as f64;
        C::new(
            self.center.re - 0.5 * self.width + (x as f64 + 0.5) * step,
            self.center.im + 0.5 * self.height() - (y as f64 + 0.5) * step,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    EscapedAtStep(u32),
    CapturedByPole(u32),
    Undecided,
}

impl Label {
    fn kind(self) -> u8 {
        match self {
            Label::EscapedAtStep(_) => 0,
            Label::CapturedByPole(_) => 1,
            Label::Undecided => 2,
        }
    }

    fn color(self, max_iter: u32) -> [u8; 3] {
        let shade = |k: u32| 255 - (200 * k.min(max_iter) / max_iter.max(1)) as u8;
        match self {
            Label::EscapedAtStep(k) => [0, shade(k) / 2, shade(k)],
            Label::CapturedByPole(k) => [shade(k), shade(k) / 3, 0],
            Label::Undecided => [0, 0, 0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    /// Row-major, top row first.
    pub labels: Vec<Label>,
}

impl Classification {
    /// Binary portable pixmap (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.labels.len());
        for label in &self.labels {
            out.extend_from_slice(&label.color(self.max_iter));
        }
        out
    }

    /// Pixels whose label kind differs from at least one 4-neighbour.
    pub fn julia_mask(&self) -> Mask {
        let mut mask = Mask::empty(self.width, self.height);
        let at = |x: usize, y: usize| self.labels[y * self.width + x].kind();
        for y in 0..self.height {
            for x in 0..self.width {
                let k = at(x, y);
                let differs = (x > 0 && at(x - 1, y) != k)
                    || (x + 1 < self.width && at(x + 1, y) != k)
                    || (y > 0 && at(x, y - 1) != k)
                    || (y + 1 < self.height && at(x, y + 1) != k);
                mask.set(x, y, differs);
            }
        }
        mask
    }
}

fn classify(f: &FamilySpec, grid: &RenderGrid, start: C) -> Label {
    let mut z = start;
    for k in 0..grid.max_iter {
        if f.pole_distance(z) < grid.pole_capture_radius {
            return Label::CapturedByPole(k);
        }
        match f.eval(z) {
            Ok(v) => match v.value() {
                Some(next) => z = next,
                None => return Label::CapturedByPole(k),
            },
            // overflow next to a pole
            Err(_) => return Label::CapturedByPole(k),
        }
        if !(z.norm() <= grid.escape_radius) {
            return Label::EscapedAtStep(k + 1);
        }
    }
    Label::Undecided
}

/// Classifies every pixel centre. `threads = None` uses the global pool; the
/// result does not depend on the thread count.
pub fn render(f: &FamilySpec, grid: &RenderGrid, threads: Option<usize>) -> Result<Classification> {
    grid.validate()?;
    let run = || -> Vec<Label> {
        (0..grid.pixels_x * grid.pixels_y)
            .into_par_iter()
            .map(|i| classify(f, grid, grid.pixel_center(i % grid.pixels_x, i / grid.pixels_x)))
            .collect()
    };
    let labels = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run),
        None => run(),
    };
    Ok(Classification { width: grid.pixels_x, height: grid.pixels_y, max_iter: grid.max_iter, labels })
}
