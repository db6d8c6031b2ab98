//! Winding numbers of `f − a` around axis-aligned rectangles.
//!
//! `(1/2πi) ∮ f′/(f − a) dz` is integrated edge by edge with adaptive
//! 7/15-point Gauss–Kronrod. The result only has to land within 0.25 of an
//! integer, so the quadrature tolerance is loose; what matters is that a
//! near-singular integrand (a zero or pole close to the contour) is either
//! resolved or reported as a collision.

use num_complex::Complex64;
use serde::Serialize;

use crate::families::FamilySpec;
use crate::{Error, Result};

type C = Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0: x0.min(x1), x1: x0.max(x1), y0: y0.min(y1), y1: y0.max(y1) }
    }

    pub fn centered(center: C, half_width: f64, half_height: f64) -> Self {
        Self::new(center.re - half_width, center.re + half_width, center.im - half_height, center.im + half_height)
    }

    pub fn center(&self) -> C {
        C::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, z: C) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    /// Distance from `z` to the boundary, zero outside the rectangle.
    pub fn boundary_distance(&self, z: C) -> f64 {
        if !self.contains(z) {
            return 0.0;
        }
        (z.re - self.x0).min(self.x1 - z.re).min(z.im - self.y0).min(self.y1 - z.im)
    }

    /// Four children split at the given fractions of width and height.
    pub fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.x0 + fx * self.width();
        let ym = self.y0 + fy * self.height();
        [
            Rect::new(self.x0, xm, self.y0, ym),
            Rect::new(xm, self.x1, self.y0, ym),
            Rect::new(self.x0, xm, ym, self.y1),
            Rect::new(xm, self.x1, ym, self.y1),
        ]
    }

    fn corners(&self) -> [C; 4] {
        [C::new(self.x0, self.y0), C::new(self.x1, self.y0), C::new(self.x1, self.y1), C::new(self.x0, self.y1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourConfig {
    /// Absolute tolerance on the whole contour integral.
    pub tolerance: f64,
    /// Edges are pre-split into pieces no longer than this before adaptation.
    pub max_piece: f64,
    pub max_depth: u32,
    /// Zeros or poles closer than this to the contour count as collisions.
    pub collision_distance: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { tolerance: 0.1, max_piece: 0.25, max_depth: 48, collision_distance: 1e-6 }
    }
}

struct Integrand<'a> {
    f: &'a FamilySpec,
    a: C,
    z0: C,
    dz: C,
    collision: f64,
}

impl Integrand<'_> {
    fn at(&self, s: f64) -> Result<C> {
        let z = self.z0 + s * self.dz;
        let (v, dv) = self.f.eval_with_derivative(z)?.ok_or(Error::BoundaryCollision)?;
        let r = v - self.a;
        if r.norm() == 0.0 || r.norm() < self.collision * dv.norm() {
            return Err(Error::BoundaryCollision);
        }
        Ok(dv / r * self.dz)
    }

    fn kronrod(&self, lo: f64, hi: f64) -> Result<(C, C)> {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let fc = self.at(c)?;
        let mut k = WGK[7] * fc;
        let mut g = WG[3] * fc;
        for j in 0..7 {
            let pair = self.at(c - h * XGK[j])? + self.at(c + h * XGK[j])?;
            k += WGK[j] * pair;
            if j % 2 == 1 {
                g += WG[j / 2] * pair;
            }
        }
        Ok((k * h, g * h))
    }

    fn adaptive(&self, lo: f64, hi: f64, tol: f64, depth: u32, max_depth: u32) -> Result<C> {
        let (k, g) = self.kronrod(lo, hi)?;
        if (k - g).norm() <= tol {
            return Ok(k);
        }
        if depth >= max_depth {
            return Err(Error::QuadratureNotConverged);
        }
        let mid = 0.5 * (lo + hi);
        Ok(self.adaptive(lo, mid, 0.5 * tol, depth + 1, max_depth)?
            + self.adaptive(mid, hi, 0.5 * tol, depth + 1, max_depth)?)
    }
}

/// Raw winding number of `f − a` around `rect`: zeros minus poles, not rounded.
pub fn winding_number(f: &FamilySpec, a: C, rect: &Rect, cfg: &ContourConfig) -> Result<f64> {
    let corners = rect.corners();
    let perimeter = 2.0 * (rect.width() + rect.height());
    if !(perimeter > 0.0) {
        return Err(Error::InvalidParameter("empty rectangle".into()));
    }
    let mut total = C::new(0.0, 0.0);
    for e in 0..4 {
        let z0 = corners[e];
        let z1 = corners[(e + 1) % 4];
        let len = (z1 - z0).norm();
        let pieces = (len / cfg.max_piece).ceil().max(1.0) as usize;
        let integrand = Integrand { f, a, z0, dz: z1 - z0, collision: cfg.collision_distance };
        let tol = cfg.tolerance * (len / pieces as f64) / perimeter;
        for p in 0..pieces {
            let lo = p as f64 / pieces as f64;
            let hi = (p + 1) as f64 / pieces as f64;
            total += integrand.adaptive(lo, hi, tol, 0, cfg.max_depth)?;
        }
    }
    Ok(total.im / (2.0 * std::f64::consts::PI))
}

/// Number of solutions of `f(z) = a` inside `rect`, counted with multiplicity.
///
/// The winding number counts zeros minus poles of `f − a`; catalogued poles
/// inside the rectangle are added back.
pub fn count_zeros_in_rectangle(f: &FamilySpec, a: C, rect: &Rect, cfg: &ContourConfig) -> Result<usize> {
    let half_diag = 0.5 * rect.diameter() + cfg.collision_distance;
    let mut pole_count = 0u64;
    for pole in f.poles_near(rect.center(), half_diag)? {
        let inside = rect.contains(pole.location);
        let gap = if inside {
            rect.boundary_distance(pole.location)
        } else {
            let z = pole.location;
            let dx = (rect.x0 - z.re).max(z.re - rect.x1).max(0.0);
            let dy = (rect.y0 - z.im).max(z.im - rect.y1).max(0.0);
            dx.hypot(dy)
        };
        if gap < cfg.collision_distance {
            return Err(Error::BoundaryCollision);
        }
        if inside {
            pole_count += pole.multiplicity as u64;
        }
    }
    let w = winding_number(f, a, rect, cfg)?;
    let nearest = w.round();
    if (w - nearest).abs() >= 0.25 {
        return Err(Error::BoundaryCollision);
    }
    let zeros = nearest as i64 + pole_count as i64;
    if zeros < 0 {
        return Err(Error::BoundaryCollision);
    }
    Ok(zeros as usize)
}
