//! Weierstrass ℘ for an arbitrary period lattice.
//!
//! The lattice basis is Gauss-reduced so that `τ = b/a` lies in the standard
//! fundamental domain (`Im τ ≥ √3/2`). With `k = π/a`, summing the defining
//! double series along rows of the lattice gives
//!
//! ```text
//! ℘(z)  = k² [ c₀ + Σₙ csc²(k(z + n·b)) ],     c₀ = −1/3 − 2 Σ_{n≥1} csc²(π n τ)
//! ℘′(z) = −2 k³ Σₙ csc²(k(z + n·b)) · cot(k(z + n·b))
//! ```
//!
//! Each row term decays like `e^{−2π|n| Im τ}`, so a handful of rows reach
//! double precision. The invariants `g₂`, `g₃` come from the q-expansions of
//! the Eisenstein series `E₄`, `E₆`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

type C = Complex64;

const MAX_ROWS: usize = 64;
const ROW_TOL: f64 = 1e-17;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lattice {
    pub omega1: C,
    pub omega2: C,
    pub g2: C,
    pub g3: C,
    #[serde(skip)]
    a: C,
    #[serde(skip)]
    b: C,
    #[serde(skip)]
    tau: C,
    #[serde(skip)]
    k: C,
    #[serde(skip)]
    c0: C,
}

/// `csc²(u)` and `cot(u)`, stable for large `|Im u|`.
fn csc2_cot(u: C) -> (C, C) {
    if u.im.abs() < 2.0 {
        let s = u.sin();
        let c = u.cos();
        return (1.0 / (s * s), c / s);
    }
    let i = C::i();
    if u.im > 0.0 {
        let e = (2.0 * i * u).exp();
        let one_m = 1.0 - e;
        (-4.0 * e / (one_m * one_m), -i * (1.0 + e) / one_m)
    } else {
        let e = (-2.0 * i * u).exp();
        let one_m = 1.0 - e;
        (-4.0 * e / (one_m * one_m), i * (1.0 + e) / one_m)
    }
}

fn divisor_power_sum(n: u64, p: i32) -> f64 {
    (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(p)).sum()
}

impl Lattice {
    /// Builds the lattice `ω₁ℤ + ω₂ℤ`. Either orientation of the generators is
    /// accepted; only a degenerate pair is rejected.
    pub fn new(omega1: C, omega2: C) -> Result<Self> {
        if !(omega1.is_finite() && omega2.is_finite()) || omega1.norm() == 0.0 || omega2.norm() == 0.0 {
            return Err(Error::DegenerateLattice);
        }
        let ratio = omega1 / omega2;
        if ratio.im.abs() < 1e-12 * ratio.norm().max(1.0) {
            return Err(Error::DegenerateLattice);
        }

        let (mut a, mut b) = (omega1, omega2);
        for _ in 0..200 {
            if b.norm_sqr() < a.norm_sqr() {
                std::mem::swap(&mut a, &mut b);
            }
            let mu = (b / a).re.round();
            if mu == 0.0 {
                break;
            }
            b -= mu * a;
        }
        if (b / a).im < 0.0 {
            b = -b;
        }
        let tau = b / a;
        let k = PI / a;

        let mut tail = C::new(0.0, 0.0);
        for n in 1..=MAX_ROWS {
            let (csc2, _) = csc2_cot(PI * n as f64 * tau);
            tail += csc2;
            if csc2.norm() < ROW_TOL {
                break;
            }
        }
        let c0 = C::new(-1.0 / 3.0, 0.0) - 2.0 * tail;

        let q = (2.0 * PI * C::i() * tau).exp();
        let (mut e4, mut e6) = (C::new(1.0, 0.0), C::new(1.0, 0.0));
        let mut qn = C::new(1.0, 0.0);
        for n in 1..=MAX_ROWS as u64 {
            qn *= q;
            let t6 = divisor_power_sum(n, 5) * qn;
            e4 += 240.0 * divisor_power_sum(n, 3) * qn;
            e6 -= 504.0 * t6;
            if t6.norm() < 1e-18 {
                break;
            }
        }
        let g2 = 60.0 * PI.powi(4) / 45.0 * e4 / a.powi(4);
        let g3 = 140.0 * 2.0 * PI.powi(6) / 945.0 * e6 / a.powi(6);

        Ok(Self { omega1, omega2, g2, g3, a, b, tau, k, c0 })
    }

    pub fn square() -> Self {
        Self::new(C::new(1.0, 0.0), C::new(0.0, 1.0)).expect("square lattice is non-degenerate")
    }

    /// Reduced, positively oriented basis `(a, b)`.
    pub fn reduced_basis(&self) -> (C, C) {
        (self.a, self.b)
    }

    pub fn tau(&self) -> C {
        self.tau
    }

    pub fn cell_area(&self) -> f64 {
        (self.a.conj() * self.b).im.abs()
    }

    fn coords(&self, z: C) -> (f64, f64) {
        let w = z / self.a;
        let t = w.im / self.tau.im;
        (w.re - t * self.tau.re, t)
    }

    /// Splits `z = z' + ω` with `ω` a lattice point and `z'` in the centred
    /// fundamental parallelogram.
    pub fn reduce(&self, z: C) -> (C, C) {
        let (s, t) = self.coords(z);
        let (ns, nt) = (s.round(), t.round());
        let omega = ns * self.a + nt * self.b;
        (z - ns * self.a - nt * self.b, omega)
    }

    pub fn nearest_point(&self, z: C) -> C {
        let (s, t) = self.coords(z);
        let (ns, nt) = (s.round(), t.round());
        let mut best = ns * self.a + nt * self.b;
        let mut best_d = (z - best).norm();
        for i in -1..=1 {
            for j in -1..=1 {
                let w = (ns + i as f64) * self.a + (nt + j as f64) * self.b;
                let d = (z - w).norm();
                if d < best_d {
                    best = w;
                    best_d = d;
                }
            }
        }
        best
    }

    /// Lattice points with `|ω − center| ≤ radius` (unsorted).
    pub fn points_in_disk(&self, center: C, radius: f64) -> Vec<C> {
        let mut out = Vec::new();
        let c = center / self.a;
        let r = radius / self.a.norm();
        let n_lo = ((c.im - r) / self.tau.im).floor() as i64;
        let n_hi = ((c.im + r) / self.tau.im).ceil() as i64;
        for n in n_lo..=n_hi {
            let shift = n as f64 * self.tau.re - c.re;
            let m_lo = (-r - shift).floor() as i64;
            let m_hi = (r - shift).ceil() as i64;
            for m in m_lo..=m_hi {
                let w = m as f64 * self.a + n as f64 * self.b;
                if (w - center).norm() <= radius {
                    out.push(w);
                }
            }
        }
        out
    }

    /// The three half periods `a/2`, `b/2`, `(a+b)/2`.
    pub fn half_periods(&self) -> [C; 3] {
        [self.a / 2.0, self.b / 2.0, (self.a + self.b) / 2.0]
    }

    /// Half-period points (critical points of ℘) inside a disk.
    pub fn half_points_in_disk(&self, center: C, radius: f64) -> Vec<C> {
        let mut out = Vec::new();
        for h in self.half_periods() {
            for w in self.points_in_disk(center - h, radius) {
                out.push(w + h);
            }
        }
        out
    }

    /// The critical values `e₁, e₂, e₃`.
    pub fn critical_values(&self) -> Result<[C; 3]> {
        let [h1, h2, h3] = self.half_periods();
        Ok([self.wp(h1)?.0, self.wp(h2)?.0, self.wp(h3)?.0])
    }

    /// `(℘(z), ℘′(z))`. Fails with `AtPole` only on an exact lattice point.
    pub fn wp(&self, z: C) -> Result<(C, C)> {
        if !z.is_finite() {
            return Err(Error::SeriesNotConverged { re: z.re, im: z.im });
        }
        let (zr, _) = self.reduce(z);
        if zr.norm() == 0.0 {
            return Err(Error::AtPole { re: z.re, im: z.im });
        }
        let (mut s2, cot0) = csc2_cot(self.k * zr);
        let mut sc = s2 * cot0;
        let mut converged = false;
        for n in 1..=MAX_ROWS {
            let shift = n as f64 * self.b;
            let (p2, pc) = csc2_cot(self.k * (zr + shift));
            let (m2, mc) = csc2_cot(self.k * (zr - shift));
            let t2 = p2 + m2;
            let tc = p2 * pc + m2 * mc;
            s2 += t2;
            sc += tc;
            let scale = 1.0 + s2.norm() + sc.norm();
            if t2.norm() < ROW_TOL * scale && tc.norm() < ROW_TOL * scale {
                converged = true;
                break;
            }
        }
        let k2 = self.k * self.k;
        let value = k2 * (self.c0 + s2);
        let deriv = -2.0 * k2 * self.k * sc;
        if !converged || !value.is_finite() || !deriv.is_finite() {
            return Err(Error::SeriesNotConverged { re: z.re, im: z.im });
        }
        Ok((value, deriv))
    }

    /// Solutions of `℘(z) = value` in the centred fundamental parallelogram.
    /// Two points for a regular value, one for a critical value.
    pub fn solve_wp(&self, value: C) -> Result<Vec<C>> {
        let mut roots: Vec<C> = Vec::new();
        let grid = 8;
        for i in 0..grid {
            for j in 0..grid {
                let s = (i as f64 + 0.5) / grid as f64 - 0.5;
                let t = (j as f64 + 0.5) / grid as f64 - 0.5;
                let mut z = s * self.a + t * self.b;
                let mut ok = false;
                for _ in 0..60 {
                    let Ok((p, dp)) = self.wp(z) else { break };
                    let r = p - value;
                    if r.norm() <= 1e-13 * value.norm().max(1.0) {
                        ok = true;
                        break;
                    }
                    if dp.norm() == 0.0 {
                        break;
                    }
                    let step = r / dp;
                    z -= step;
                    if step.norm() < 1e-15 * z.norm().max(1.0) {
                        ok = self.wp(z).map(|(p, _)| (p - value).norm() < 1e-8 * value.norm().max(1.0)).unwrap_or(false);
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                let zr = self.reduce(z).0;
                let dup = roots.iter().any(|&r| {
                    let d = self.reduce(zr - r).0;
                    d.norm() < 1e-6
                });
                if !dup {
                    roots.push(zr);
                }
            }
        }
        Ok(roots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct lattice sum `z⁻² + Σ′[(z−ω)⁻² − ω⁻²]` over `|ω| ≤ cutoff`.
    fn brute_wp(omega1: C, omega2: C, z: C, cutoff: f64) -> C {
        let n = (cutoff / omega1.norm().min(omega2.norm()) * 2.0).ceil() as i64;
        let mut sum = 1.0 / (z * z);
        for i in -n..=n {
            for j in -n..=n {
                if i == 0 && j == 0 {
                    continue;
                }
                let w = i as f64 * omega1 + j as f64 * omega2;
                if w.norm() > cutoff {
                    continue;
                }
                sum += 1.0 / ((z - w) * (z - w)) - 1.0 / (w * w);
            }
        }
        sum
    }

    fn brute_eisenstein(omega1: C, omega2: C, power: i32, cutoff: f64) -> C {
        let n = (cutoff / omega1.norm().min(omega2.norm()) * 2.0).ceil() as i64;
        let mut sum = C::new(0.0, 0.0);
        for i in -n..=n {
            for j in -n..=n {
                let w = i as f64 * omega1 + j as f64 * omega2;
                if (i, j) != (0, 0) && w.norm() <= cutoff {
                    sum += w.powi(-power);
                }
            }
        }
        sum
    }

    #[test]
    fn matches_brute_force_lattice_sum() {
        let lat = Lattice::square();
        let z = C::new(0.3, 0.2);
        let (p, _) = lat.wp(z).unwrap();
        let oracle = brute_wp(C::new(1.0, 0.0), C::i(), z, 200.0);
        assert!((p - oracle).norm() < 1e-8, "℘ = {p}, oracle = {oracle}");
    }

    #[test]
    fn skewed_lattice_matches_brute_force() {
        let (w1, w2) = (C::new(1.3, 0.2), C::new(0.4, 1.1));
        let lat = Lattice::new(w1, w2).unwrap();
        for z in [C::new(0.21, 0.17), C::new(-0.4, 0.33), C::new(2.7, -3.1)] {
            let (p, _) = lat.wp(z).unwrap();
            let oracle = brute_wp(w1, w2, z, 300.0);
            assert!((p - oracle).norm() < 1e-7 * oracle.norm().max(1.0), "z={z}: {p} vs {oracle}");
        }
    }

    #[test]
    fn invariants_match_truncated_eisenstein_sums() {
        let (w1, w2) = (C::new(1.3, 0.2), C::new(0.4, 1.1));
        let lat = Lattice::new(w1, w2).unwrap();
        let g2 = 60.0 * brute_eisenstein(w1, w2, 4, 150.0);
        let g3 = 140.0 * brute_eisenstein(w1, w2, 6, 150.0);
        assert!((lat.g2 - g2).norm() < 1e-6 * g2.norm(), "{} vs {}", lat.g2, g2);
        assert!((lat.g3 - g3).norm() < 1e-6 * g3.norm().max(1.0), "{} vs {}", lat.g3, g3);
    }

    #[test]
    fn square_lattice_invariants() {
        let lat = Lattice::square();
        // g₂(ℤ[i]) = Γ(1/4)⁸ / (16π²), g₃ = 0
        let gamma_quarter: f64 = 3.625_609_908_221_908_3;
        let expected = gamma_quarter.powi(8) / (16.0 * PI * PI);
        assert!((lat.g2.re - expected).abs() < 1e-9 * expected);
        assert!(lat.g2.im.abs() < 1e-9);
        assert!(lat.g3.norm() < 1e-9);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let lat = Lattice::new(C::new(1.0, 0.0), C::new(0.3, 0.9)).unwrap();
        let z = C::new(0.37, 0.21);
        let h = 1e-6;
        let fd = (lat.wp(z + h).unwrap().0 - lat.wp(z - h).unwrap().0) / (2.0 * h);
        let (_, dp) = lat.wp(z).unwrap();
        assert!((fd - dp).norm() < 1e-6 * dp.norm());
    }

    #[test]
    fn reduction_is_lattice_shift() {
        let lat = Lattice::new(C::new(2.0, 0.1), C::new(-0.7, 1.4)).unwrap();
        let z = C::new(13.3, -7.9);
        let (zr, w) = lat.reduce(z);
        assert!((zr + w - z).norm() < 1e-12);
        assert!((lat.reduce(w).0).norm() < 1e-12);
        assert!(lat.nearest_point(w + C::new(1e-3, 0.0)) == w);
    }

    #[test]
    fn points_in_disk_counts_square_lattice() {
        let lat = Lattice::square();
        let pts = lat.points_in_disk(C::new(0.0, 0.0), 1.1);
        assert_eq!(pts.len(), 5);
        let pts = lat.points_in_disk(C::new(0.0, 0.0), 10.0);
        // Gauss circle problem: N(10) = 317
        assert_eq!(pts.len(), 317);
    }

    #[test]
    fn degenerate_lattice_rejected() {
        assert_eq!(Lattice::new(C::new(1.0, 0.0), C::new(2.0, 0.0)), Err(Error::DegenerateLattice));
        assert_eq!(Lattice::new(C::new(0.0, 0.0), C::new(0.0, 1.0)), Err(Error::DegenerateLattice));
    }

    #[test]
    fn solve_wp_finds_two_points() {
        let lat = Lattice::square();
        let roots = lat.solve_wp(C::new(1.0, 0.0)).unwrap();
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert!((lat.wp(r).unwrap().0 - 1.0).norm() < 1e-10);
        }
        let e = lat.critical_values().unwrap();
        // g₃ = 0 forces e = 0, ±√g₂/2
        let half_sqrt_g2 = lat.g2.re.sqrt() / 2.0;
        assert!((e[0].re - half_sqrt_g2).abs() < 1e-9, "{:?}", e);
        assert!((e[1].re + half_sqrt_g2).abs() < 1e-9, "{:?}", e);
        assert!(e[2].norm() < 1e-9, "{:?}", e);
    }
}
