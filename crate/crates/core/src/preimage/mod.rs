//! Certified enumeration of `a`-points `{z : f(z) = a}` in a disk.
//!
//! An enclosing square is subdivided recursively; each cell carries its
//! argument-principle count, empty cells are dropped and single-root cells
//! are refined by Newton from the cell centre. The children's counts must add
//! up to the parent's, and the number of refined roots must equal the count
//! on the enclosing square.

mod contour;

use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use contour::{count_zeros_in_rectangle, winding_number, ContourConfig, Rect};

use crate::families::FamilySpec;
use crate::fit::least_squares;
use crate::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preimage {
    pub point: C,
    pub target: C,
    pub residual: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingSample {
    pub radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub contour: ContourConfig,
    /// Below this diameter a cell that still cannot be resolved is a hard failure.
    pub min_cell: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub max_retries: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            contour: ContourConfig::default(),
            min_cell: 1e-7,
            newton_tol: 1e-12,
            newton_max_iter: 40,
            max_retries: 5,
            seed: 42,
        }
    }
}

/// Newton's method for `f(z) = a` from `start`. Gives up when the iterate
/// wanders further than `leash` from the start.
pub fn newton_solve(f: &FamilySpec, a: C, start: C, leash: f64, cfg: &SolverConfig) -> Result<C> {
    let mut z = start;
    for _ in 0..cfg.newton_max_iter {
        let (v, dv) = f.eval_with_derivative(z)?.ok_or(Error::NewtonDiverged)?;
        if dv.norm() == 0.0 {
            return Err(Error::NewtonDiverged);
        }
        let step = (v - a) / dv;
        z -= step;
        if !z.is_finite() || (z - start).norm() > leash {
            return Err(Error::NewtonDiverged);
        }
        if step.norm() <= cfg.newton_tol * z.norm().max(1.0) {
            let v = f.eval(z)?.value().ok_or(Error::NewtonDiverged)?;
            if (v - a).norm() < 1e-9 * a.norm().max(1.0) {
                return Ok(z);
            }
        }
    }
    Err(Error::NewtonDiverged)
}

struct Solver<'a> {
    f: &'a FamilySpec,
    a: C,
    cfg: &'a SolverConfig,
}

fn cell_rng(seed: u64, key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl Solver<'_> {
    fn count(&self, rect: &Rect) -> Result<usize> {
        count_zeros_in_rectangle(self.f, self.a, rect, &self.cfg.contour)
    }

    fn solve_cell(&self, rect: Rect, count: usize, key: u64) -> Result<Vec<C>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if count == 1 {
            if let Ok(z) = newton_solve(self.f, self.a, rect.center(), rect.diameter(), self.cfg) {
                if rect.contains(z) {
                    return Ok(vec![z]);
                }
            }
        }
        if rect.diameter() < self.cfg.min_cell {
            return Err(Error::CountMismatch { expected: count, found: 0 });
        }

        let mut rng = cell_rng(self.cfg.seed, key);
        let mut last_err = Error::BoundaryCollision;
        for _ in 0..=self.cfg.max_retries {
            let fx = rng.gen_range(0.4..0.6);
            let fy = rng.gen_range(0.4..0.6);
            let children = rect.split(fx, fy);
            let counts: Result<Vec<usize>> = children.iter().map(|c| self.count(c)).collect();
            let counts = match counts {
                Ok(c) => c,
                Err(e @ (Error::BoundaryCollision | Error::QuadratureNotConverged)) => {
                    last_err = e;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let total: usize = counts.iter().sum();
            if total != count {
                last_err = Error::CountMismatch { expected: count, found: total };
                continue;
            }
            let nested: Result<Vec<Vec<C>>> = children
                .par_iter()
                .zip(counts.par_iter())
                .enumerate()
                .map(|(i, (child, &n))| self.solve_cell(*child, n, key.wrapping_mul(4).wrapping_add(i as u64 + 1)))
                .collect();
            return Ok(nested?.into_iter().flatten().collect());
        }
        Err(last_err)
    }
}

fn sort_key(z: C) -> (i64, i64) {
    let arg = z.im.atan2(z.re).rem_euclid(2.0 * std::f64::consts::PI);
    ((z.norm() * 1e9).round() as i64, (arg * 1e9).round() as i64)
}

/// All solutions of `f(z) = a` in `rect`, certified against the
/// argument-principle count on `rect`.
pub fn find_preimages_in_rect(f: &FamilySpec, a: C, rect: &Rect, cfg: &SolverConfig) -> Result<Vec<C>> {
    let solver = Solver { f, a, cfg };
    let count = solver.count(rect)?;
    let mut roots = solver.solve_cell(*rect, count, 0)?;
    if roots.len() != count {
        return Err(Error::CountMismatch { expected: count, found: roots.len() });
    }
    roots.sort_by_key(|&z| sort_key(z));
    for w in roots.windows(2) {
        if (w[0] - w[1]).norm() <= 1e-8 {
            return Err(Error::CountMismatch { expected: count, found: roots.len() - 1 });
        }
    }
    Ok(roots)
}

/// All solutions of `f(z) = a` with `|z| ≤ radius`, sorted by modulus then
/// argument.
pub fn find_preimages(f: &FamilySpec, a: C, radius: f64, cfg: &SolverConfig) -> Result<Vec<Preimage>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let mut rng = cell_rng(cfg.seed, u64::MAX);
    let mut last_err = Error::BoundaryCollision;
    for _ in 0..=cfg.max_retries {
        let jitter = 0.01 * radius.max(1.0);
        let centre = C::new(rng.gen_range(-jitter..jitter), rng.gen_range(-jitter..jitter));
        let half = radius + 2.0 * jitter + rng.gen_range(0.0..jitter);
        let rect = Rect::centered(centre, half, half);
        match find_preimages_in_rect(f, a, &rect, cfg) {
            Ok(roots) => {
                let mut out = Vec::with_capacity(roots.len());
                for z in roots.into_iter().filter(|z| z.norm() <= radius) {
                    let v = f.eval(z)?.value().ok_or(Error::AtPole { re: z.re, im: z.im })?;
                    out.push(Preimage { point: z, target: a, residual: (v - a).norm(), modulus: z.norm() });
                }
                return Ok(out);
            }
            Err(e @ (Error::BoundaryCollision | Error::QuadratureNotConverged)) => last_err = e,
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

/// `N(r) = #{n : |z_n| ≤ r}` for each radius.
pub fn counting_function(preimages: &[Preimage], radii: &[f64]) -> Result<Vec<CountingSample>> {
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("radii must be sorted ascending".into()));
    }
    let mut moduli: Vec<f64> = preimages.iter().map(|p| p.modulus).collect();
    moduli.sort_by(f64::total_cmp);
    Ok(radii
        .iter()
        .map(|&radius| CountingSample { radius, count: moduli.partition_point(|&m| m <= radius) })
        .collect())
}

/// Slope of `log N(r)` against `log r` over the upper half of the radius
/// range. For a Borel point this is the order `ρ`.
pub fn estimate_order_of_growth(samples: &[CountingSample]) -> Result<f64> {
    let usable: Vec<&CountingSample> = samples.iter().filter(|s| s.count >= 1 && s.radius > 0.0).collect();
    if usable.len() < 5 {
        return Err(Error::InsufficientData(format!("{} samples with N(r) ≥ 1, need 5", usable.len())));
    }
    let r_min = usable.iter().map(|s| s.radius).fold(f64::INFINITY, f64::min);
    let r_max = usable.iter().map(|s| s.radius).fold(0.0, f64::max);
    let cut = 0.5 * (r_min + r_max);
    let pts: Vec<(f64, f64)> =
        usable.iter().filter(|s| s.radius >= cut).map(|s| (s.radius.ln(), (s.count as f64).ln())).collect();
    least_squares(&pts)
        .map(|fit| fit.slope)
        .ok_or_else(|| Error::InsufficientData("radius range collapses in the upper half".into()))
}

pub fn write_preimages_csv<W: Write>(mut out: W, preimages: &[Preimage]) -> io::Result<()> {
    writeln!(out, "re,im,modulus,residual")?;
    for p in preimages {
        writeln!(out, "{},{},{},{}", p.point.re, p.point.im, p.modulus, p.residual)?;
    }
    Ok(())
}
