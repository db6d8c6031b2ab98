//! The two-level inverse-branch system attached to a pole `b`.
//!
//! For a `b`-point `z_n` (so `f(z_n) = b`) the map `Φₙ = ψₙ ∘ φₙ` sends the
//! disk `D = D(b, r)` into itself: `φₙ` is the branch of `f⁻¹` with
//! `φₙ(b) = z_n`, and `ψₙ` the branch of `f⁻¹` near `b` with
//! `ψₙ(z_n) = w_n ∈ D`. By the chain rule
//! `|Φₙ′(b)| = 1 / (|f′(w_n)|·|f′(z_n)|)`.
//!
//! A pole of order `q` has `q` local solutions of `f(w) = z_n`; each one is
//! kept as its own branch.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::families::{FamilySpec, PoleData};
use crate::fit::least_squares;
use crate::preimage::Preimage;
use crate::{Error, Result};

type C = Complex64;

/// Fraction of the `b`-point modulus cut used by the separation claim.
pub const CLAIM_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IfsConfig {
    pub pole: PoleData,
    /// Radius `r` of `D = D(b, r)`.
    pub inner_radius: f64,
    /// Radius `2r` of `D*`.
    pub safety_radius: f64,
    /// `R` with `{|z| > R} ⊂ f(D ∖ {b})`.
    pub outer_radius: f64,
    pub max_branches: usize,
}

impl IfsConfig {
    pub fn new(f: &FamilySpec, pole: PoleData, inner_radius: f64, outer_radius: f64, max_branches: usize) -> Result<Self> {
        if !(inner_radius > 0.0) || !(outer_radius > 0.0) {
            return Err(Error::InvalidParameter("radii must be positive".into()));
        }
        if max_branches == 0 {
            return Err(Error::InvalidParameter("max_branches must be positive".into()));
        }
        let cfg = Self { pole, inner_radius, safety_radius: 2.0 * inner_radius, outer_radius, max_branches };
        cfg.validate(f)?;
        Ok(cfg)
    }

    /// Default construction: the first catalogued pole (by modulus) that is
    /// not a singular value, `r` = half the distance to the nearest other
    /// pole, critical point or singular value (capped at 0.5), and `R` from
    /// the image of the circle `|z − b| = r`.
    pub fn for_family(f: &FamilySpec, max_branches: usize) -> Result<Self> {
        let pole = default_pole(f)?;
        let r = default_inner_radius(f, &pole)?;
        let big_r = circle_image_radius(f, &pole, r)?;
        Self::new(f, pole, r, big_r, max_branches)
    }

    pub fn with_pole(f: &FamilySpec, pole: PoleData, max_branches: usize) -> Result<Self> {
        let r = default_inner_radius(f, &pole)?;
        let big_r = circle_image_radius(f, &pole, r)?;
        Self::new(f, pole, r, big_r, max_branches)
    }

    /// `b`-points are used only beyond this modulus.
    pub fn bpoint_cutoff(&self) -> f64 {
        CLAIM_FACTOR * self.outer_radius
    }

    /// Checks that `D*` holds no other pole and that `f′` does not vanish on
    /// a sampling grid of `D* ∖ {b}`.
    pub fn validate(&self, f: &FamilySpec) -> Result<()> {
        let b = self.pole.location;
        for p in f.poles_near(b, self.safety_radius)? {
            if (p.location - b).norm() > 1e-12 {
                return Err(Error::InvalidParameter(format!("pole {} lies inside D*", p.location)));
            }
        }
        let n = 21;
        for i in 0..n {
            for j in 0..n {
                let dz = C::new(
                    (2.0 * i as f64 / (n - 1) as f64 - 1.0) * self.safety_radius,
                    (2.0 * j as f64 / (n - 1) as f64 - 1.0) * self.safety_radius,
                );
                if dz.norm() >= self.safety_radius || dz.norm() < 1e-9 * self.inner_radius {
                    continue;
                }
                match f.deriv(b + dz)?.value() {
                    Some(d) if d.norm() > 0.0 && d.is_finite() => {}
                    _ => {
                        return Err(Error::InvalidParameter(format!("f′ vanishes near {} inside D*", b + dz)));
                    }
                }
            }
        }
        Ok(())
    }
}

fn default_pole(f: &FamilySpec) -> Result<PoleData> {
    let singular = f.singular_values()?;
    let mut radius = 4.0;
    for _ in 0..6 {
        for pole in f.poles_in_disk(radius)? {
            let clear = singular.iter().all(|s| (s - pole.location).norm() > 1e-3);
            if clear && pole.multiplicity == f.max_pole_multiplicity {
                return Ok(pole);
            }
        }
        radius *= 2.0;
    }
    Err(Error::InvalidParameter("no pole outside the singular values was found".into()))
}

fn default_inner_radius(f: &FamilySpec, pole: &PoleData) -> Result<f64> {
    let b = pole.location;
    let mut nearest = 1.0_f64;
    for p in f.poles_near(b, 1.0)? {
        let d = (p.location - b).norm();
        if d > 1e-12 {
            nearest = nearest.min(d);
        }
    }
    for c in f.critical_points_near(b, 1.0)? {
        nearest = nearest.min((c - b).norm());
    }
    for s in f.singular_values()? {
        nearest = nearest.min((s - b).norm());
    }
    Ok((0.5 * nearest).min(0.5))
}

/// `1.05 · max |f|` on the circle `|z − b| = r`: every `|w|` beyond it has `q`
/// preimages in `D` by Rouché.
fn circle_image_radius(f: &FamilySpec, pole: &PoleData, r: f64) -> Result<f64> {
    let mut max = 0.0_f64;
    for k in 0..720 {
        let z = pole.location + C::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / 720.0);
        let v = f.eval(z)?.value().ok_or(Error::AtPole { re: z.re, im: z.im })?;
        max = max.max(v.norm());
    }
    Ok(1.05 * max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    /// 1-based position in the branch list.
    pub index: usize,
    /// 1-based rank of `z_n` among the admissible `b`-points.
    pub bpoint_index: usize,
    /// Which of the `q` local solutions near `b`.
    pub root_index: usize,
    pub z_n: C,
    pub w_n: C,
    pub phi_deriv_mag: f64,
    /// `(|f(z_n) − b|, |f(w_n) − z_n|)`
    pub residuals: (f64, f64),
}

/// Solves `f(w) = target` near the pole by Newton on `1/f(w) − 1/target`.
fn invert_near_pole(f: &FamilySpec, target: C, seed: C) -> Option<C> {
    let mut w = seed;
    for _ in 0..60 {
        let (v, dv) = f.eval_with_derivative(w).ok()??;
        if dv.norm() == 0.0 {
            return None;
        }
        let step = v * (v - target) / (target * dv);
        w -= step;
        if !w.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * w.norm().max(1.0) {
            break;
        }
    }
    let v = f.eval(w).ok()?.value()?;
    ((v - target).norm() < 1e-9 * target.norm()).then_some(w)
}

/// Builds up to `cfg.max_branches` branches from `b`-points with
/// `|z_n| > 3R`, ordered by `(n, root)`.
pub fn build_branches(f: &FamilySpec, cfg: &IfsConfig, bpoints: &[Preimage]) -> Result<Vec<Branch>> {
    let b = cfg.pole.location;
    let q = cfg.pole.multiplicity;
    let g = cfg.pole.leading_coefficient;
    let cutoff = cfg.bpoint_cutoff();

    let mut admissible: Vec<&Preimage> = bpoints.iter().filter(|p| p.modulus > cutoff).collect();
    admissible.sort_by(|x, y| x.modulus.total_cmp(&y.modulus));

    let mut out = Vec::new();
    'outer: for (n, bp) in admissible.iter().enumerate() {
        let z = bp.point;
        let (fz, dfz) = f
            .eval_with_derivative(z)?
            .ok_or(Error::AtPole { re: z.re, im: z.im })?;
        let principal = (g / z).powf(1.0 / q as f64);
        let mut roots: Vec<C> = Vec::with_capacity(q as usize);
        for k in 0..q {
            let seed = b + principal * C::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / q as f64);
            let Some(w) = invert_near_pole(f, z, seed) else {
                return Err(Error::NewtonDiverged);
            };
            if (w - b).norm() >= cfg.inner_radius {
                // seed escaped D: this root contributes no branch
                continue;
            }
            let scale = (w - b).norm();
            if roots.iter().all(|r| (r - w).norm() > 1e-9 * scale) {
                roots.push(w);
            }
        }
        roots.sort_by(|x, y| {
            let ax = (x - b).arg().rem_euclid(2.0 * std::f64::consts::PI);
            let ay = (y - b).arg().rem_euclid(2.0 * std::f64::consts::PI);
            ax.total_cmp(&ay)
        });
        for (k, w) in roots.into_iter().enumerate() {
            if out.len() >= cfg.max_branches {
                break 'outer;
            }
            let (fw, dfw) = f
                .eval_with_derivative(w)?
                .ok_or(Error::AtPole { re: w.re, im: w.im })?;
            out.push(Branch {
                index: out.len() + 1,
                bpoint_index: n + 1,
                root_index: k + 1,
                z_n: z,
                w_n: w,
                phi_deriv_mag: 1.0 / (dfw.norm() * dfz.norm()),
                residuals: ((fz - b).norm(), (fw - z).norm()),
            });
        }
    }
    Ok(out)
}

/// `Σ_{index ≥ n0} |Φₙ′(b)|^t`.
pub fn poincare_sum(branches: &[Branch], t: f64, n0: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("t must be positive".into()));
    }
    if branches.is_empty() {
        return Err(Error::InsufficientBranches { needed: 1, got: 0 });
    }
    Ok(branches.iter().filter(|b| b.index >= n0).map(|b| b.phi_deriv_mag.powf(t)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockSum {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub sum: f64,
}

/// Partial Poincaré sums over dyadic shells `2^k ≤ |z_n| < 2^{k+1}`. Only
/// shells fully covered by the branch data are returned.
pub fn dyadic_block_sums(branches: &[Branch], t: f64) -> Vec<BlockSum> {
    let Some(max_mod) = branches.iter().map(|b| b.z_n.norm()).reduce(f64::max) else {
        return Vec::new();
    };
    let min_mod = branches.iter().map(|b| b.z_n.norm()).fold(f64::INFINITY, f64::min);
    let k_lo = min_mod.log2().ceil() as i32;
    let mut out = Vec::new();
    let mut k = k_lo;
    while 2f64.powi(k + 1) <= max_mod {
        let (lower, upper) = (2f64.powi(k), 2f64.powi(k + 1));
        let shell: Vec<f64> =
            branches.iter().filter(|b| (lower..upper).contains(&b.z_n.norm())).map(|b| b.phi_deriv_mag.powf(t)).collect();
        out.push(BlockSum { lower, upper, count: shell.len(), sum: shell.iter().sum() });
        k += 1;
    }
    out
}

/// Dyadic block sums that do not decay (the later blocks stay above half the
/// earlier ones) point to a divergent series at this exponent.
pub fn divergence_indicated(blocks: &[BlockSum]) -> Option<bool> {
    if blocks.len() < 3 {
        return None;
    }
    let first = blocks[0].sum.max(blocks[1].sum);
    let last = blocks[blocks.len() - 1].sum;
    Some(last >= 0.5 * first)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEstimate {
    /// Slope of `log|Φₙ′(b)|` against `log|z_n|`; expected `−(α₁ + 1 + 1/q)`.
    pub slope_beta: f64,
    pub intercept: f64,
    pub rho_hat: f64,
    pub theta_hat: f64,
    pub r_squared: f64,
    pub n_used: usize,
    /// `r² < 0.9`
    pub degenerate_fit: bool,
}

pub const MIN_THETA_BRANCHES: usize = 30;

pub fn estimate_theta(branches: &[Branch], rho_hat: f64) -> Result<ThetaEstimate> {
    estimate_theta_windowed(branches, rho_hat, 1.0)
}

/// As [`estimate_theta`], fitting only the `window` fraction of branches with
/// the largest `|z_n|`.
pub fn estimate_theta_windowed(branches: &[Branch], rho_hat: f64, window: f64) -> Result<ThetaEstimate> {
    if !(rho_hat > 0.0) {
        return Err(Error::InvalidParameter("rho_hat must be positive".into()));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter("regression window must lie in (0, 1]".into()));
    }
    let mut sorted: Vec<&Branch> = branches.iter().collect();
    sorted.sort_by(|a, b| a.z_n.norm().total_cmp(&b.z_n.norm()));
    let keep = ((sorted.len() as f64 * window).round() as usize).min(sorted.len());
    let used = &sorted[sorted.len() - keep..];
    if used.len() < MIN_THETA_BRANCHES {
        return Err(Error::InsufficientBranches { needed: MIN_THETA_BRANCHES, got: used.len() });
    }
    let pts: Vec<(f64, f64)> = used.iter().map(|b| (b.z_n.norm().ln(), b.phi_deriv_mag.ln())).collect();
    let fit = least_squares(&pts).ok_or_else(|| Error::InsufficientData("all |z_n| coincide".into()))?;
    if !(fit.slope < 0.0) {
        return Err(Error::InsufficientData(format!("non-negative slope {}", fit.slope)));
    }
    Ok(ThetaEstimate {
        slope_beta: fit.slope,
        intercept: fit.intercept,
        rho_hat,
        theta_hat: rho_hat / fit.slope.abs(),
        r_squared: fit.r_squared,
        n_used: fit.n,
        degenerate_fit: fit.r_squared < 0.9,
    })
}

/// Koebe distortion bound `(1 + s)/(1 − s)³` for a univalent map on the unit
/// disk restricted to `|z| ≤ s`.
pub fn koebe_distortion(s: f64) -> f64 {
    (1.0 + s) / (1.0 - s).powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionMode {
    Off,
    Koebe,
}

impl DistortionMode {
    pub fn factor(self, cfg: &IfsConfig) -> f64 {
        match self {
            DistortionMode::Off => 1.0,
            DistortionMode::Koebe => koebe_distortion(cfg.inner_radius / cfg.safety_radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BowenRoot {
    pub value: f64,
    /// Set when a single contracting branch leaves `Σ = 1` unattainable for `t > 0`.
    pub no_root: bool,
}

/// Root `t*` of `Σ_{first subset_size} (|Φₙ′(b)| / distortion)^t = 1` by
/// bisection on `[10⁻⁶, 10]`.
pub fn bowen_one_level(branches: &[Branch], subset_size: usize, distortion_factor: f64) -> Result<BowenRoot> {
    if subset_size == 0 || subset_size > branches.len() {
        return Err(Error::InvalidParameter(format!(
            "subset size {subset_size} outside 1..={}",
            branches.len()
        )));
    }
    if !(distortion_factor >= 1.0) {
        return Err(Error::InvalidParameter("distortion factor must be at least 1".into()));
    }
    let logs: Vec<f64> = branches[..subset_size]
        .iter()
        .map(|b| {
            if b.phi_deriv_mag >= 1.0 || !(b.phi_deriv_mag > 0.0) {
                Err(Error::NotContracting(b.phi_deriv_mag))
            } else {
                Ok((b.phi_deriv_mag / distortion_factor).ln())
            }
        })
        .collect::<Result<_>>()?;
    if subset_size == 1 {
        return Ok(BowenRoot { value: 0.0, no_root: true });
    }
    let pressure = |t: f64| logs.iter().map(|l| (t * l).exp()).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (1e-6, 10.0);
    if pressure(lo) <= 0.0 || pressure(hi) > 0.0 {
        return Err(Error::NoRoot);
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if pressure(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BowenRoot { value: 0.5 * (lo + hi), no_root: false })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The outer Koebe disk of this branch leaves `D`.
    OutsideDomain { index: usize },
    /// The inner Koebe disks of two branches meet.
    Overlap { first: usize, second: usize },
}

impl Violation {
    fn blocking_index(&self) -> usize {
        match *self {
            Violation::OutsideDomain { index } => index,
            Violation::Overlap { first, second } => first.min(second),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub n0: usize,
    pub checked_up_to: usize,
    pub violations: Vec<Violation>,
}

/// Brackets each image `Φₙ(D)` between `D(w_n, ρₙ/4)` and `D(w_n, 4ρₙ)`,
/// `ρₙ = |Φₙ′(b)|·r`, and finds the first index from which every outer disk
/// lies in `D` and the inner disks are pairwise disjoint.
pub fn separation_check(branches: &[Branch], cfg: &IfsConfig) -> SeparationReport {
    let b = cfg.pole.location;
    let r = cfg.inner_radius;
    let mut violations = Vec::new();
    for br in branches {
        let rho = br.phi_deriv_mag * r;
        if (br.w_n - b).norm() + 4.0 * rho >= r {
            violations.push(Violation::OutsideDomain { index: br.index });
        }
    }

    let mut order: Vec<&Branch> = branches.iter().collect();
    order.sort_by(|x, y| x.w_n.re.total_cmp(&y.w_n.re));
    let max_inner = branches.iter().map(|br| 0.25 * br.phi_deriv_mag * r).fold(0.0, f64::max);
    let mut overlaps = Vec::new();
    for (i, bi) in order.iter().enumerate() {
        let ri = 0.25 * bi.phi_deriv_mag * r;
        for bj in &order[i + 1..] {
            if bj.w_n.re - bi.w_n.re > ri + max_inner {
                break;
            }
            let rj = 0.25 * bj.phi_deriv_mag * r;
            if (bi.w_n - bj.w_n).norm() <= ri + rj {
                let (lo, hi) = (bi.index.min(bj.index), bi.index.max(bj.index));
                overlaps.push(Violation::Overlap { first: lo, second: hi });
            }
        }
    }
    overlaps.sort_by_key(|v| match v {
        Violation::Overlap { first, second } => (*first, *second),
        Violation::OutsideDomain { index } => (*index, 0),
    });
    violations.extend(overlaps);

    let n0 = violations.iter().map(|v| v.blocking_index() + 1).max().unwrap_or(1);
    SeparationReport { n0, checked_up_to: branches.len(), violations }
}
