//! Catalogued meromorphic families, their derivatives and analytic metadata.
//!
//! Every variant carries its order `ρ`, the derivative-growth exponent `α₁`
//! on preimages of a pole neighbourhood, and the maximal pole multiplicity
//! `q`. These are closed-form metadata, validated by tests rather than
//! inferred at runtime.

mod polynomial;
mod tan;
mod weierstrass;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

pub use polynomial::Polynomial;
pub use weierstrass::Lattice;

use crate::fit::least_squares;
use crate::{Error, Result};

pub type ComplexPoint = Complex64;
type C = Complex64;

pub const DEFAULT_POLE_EXCLUSION_RADIUS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalResult {
    Value(ComplexPoint),
    AtPole,
}

impl EvalResult {
    pub fn value(self) -> Option<ComplexPoint> {
        match self {
            EvalResult::Value(v) => Some(v),
            EvalResult::AtPole => None,
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, EvalResult::AtPole)
    }
}

/// A pole `b` with local form `f(z) = g(z)/(z − b)^q`, `g(b) ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleData {
    pub location: ComplexPoint,
    pub multiplicity: u32,
    pub leading_coefficient: ComplexPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant")]
pub enum Variant {
    /// `λ·tan(z)^m`
    TanPower { lambda: ComplexPoint, m: u32 },
    /// `℘(z)`
    WeierstrassP { lattice: Lattice },
    /// `℘(P(z))`
    EllipticComposePoly { lattice: Lattice, poly: Polynomial },
    /// `λ·(1 + ℘(z)/d)^d`
    ExpElliptic { lambda: ComplexPoint, d: u32, lattice: Lattice },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySpec {
    pub variant: Variant,
    pub order: f64,
    pub alpha1: f64,
    pub max_pole_multiplicity: u32,
    pub pole_exclusion_radius: f64,
}

fn sort_key(z: C) -> (i64, i64) {
    let arg = z.im.atan2(z.re).rem_euclid(2.0 * PI);
    ((z.norm() * 1e9).round() as i64, (arg * 1e9).round() as i64)
}

fn sort_points(points: &mut [C]) {
    points.sort_by_key(|&z| sort_key(z));
}

impl FamilySpec {
    fn build(variant: Variant, order: f64, alpha1: f64, q: u32) -> Self {
        Self {
            variant,
            order,
            alpha1,
            max_pole_multiplicity: q,
            pole_exclusion_radius: DEFAULT_POLE_EXCLUSION_RADIUS,
        }
    }

    pub fn tan_power(lambda: ComplexPoint, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        if lambda.norm() == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter("λ must be a finite nonzero number".into()));
        }
        Ok(Self::build(Variant::TanPower { lambda, m }, 1.0, 0.0, m))
    }

    pub fn weierstrass(lattice: Lattice) -> Self {
        Self::build(Variant::WeierstrassP { lattice }, 2.0, 0.0, 2)
    }

    pub fn elliptic_compose_poly(lattice: Lattice, poly: Polynomial) -> Result<Self> {
        let d = poly.degree();
        if d == 0 {
            return Err(Error::InvalidParameter("P must have degree at least 1".into()));
        }
        let df = d as f64;
        Ok(Self::build(Variant::EllipticComposePoly { lattice, poly }, 2.0 * df, df - 1.0, 2))
    }

    pub fn exp_elliptic(lambda: ComplexPoint, d: u32, lattice: Lattice) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be positive".into()));
        }
        if lambda.norm() == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter("λ must be a finite nonzero number".into()));
        }
        Ok(Self::build(Variant::ExpElliptic { lambda, d, lattice }, 2.0, 0.0, 2 * d))
    }

    pub fn with_pole_exclusion_radius(mut self, radius: f64) -> Self {
        self.pole_exclusion_radius = radius;
        self
    }

    pub fn label(&self) -> String {
        match &self.variant {
            Variant::TanPower { lambda, m } => format!("tan(lambda={lambda}, m={m})"),
            Variant::WeierstrassP { lattice } => {
                format!("weierstrass(omega1={}, omega2={})", lattice.omega1, lattice.omega2)
            }
            Variant::EllipticComposePoly { poly, .. } => format!("elliptic-poly(d={})", poly.degree()),
            Variant::ExpElliptic { lambda, d, .. } => format!("exp-elliptic(lambda={lambda}, d={d})"),
        }
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        match &self.variant {
            Variant::TanPower { .. } => None,
            Variant::WeierstrassP { lattice }
            | Variant::EllipticComposePoly { lattice, .. }
            | Variant::ExpElliptic { lattice, .. } => Some(lattice),
        }
    }

    /// Distance from `z` to the nearest pole. First-order estimate for ℘∘P.
    pub fn pole_distance(&self, z: ComplexPoint) -> f64 {
        match &self.variant {
            Variant::TanPower { .. } => (z - tan::pole_location(tan::nearest_pole_index(z))).norm(),
            Variant::WeierstrassP { lattice } | Variant::ExpElliptic { lattice, .. } => {
                (z - lattice.nearest_point(z)).norm()
            }
            Variant::EllipticComposePoly { lattice, poly } => {
                let (w, dw) = poly.eval_with_derivative(z);
                let gap = (w - lattice.nearest_point(w)).norm();
                if gap == 0.0 {
                    0.0
                } else if dw.norm() == 0.0 {
                    f64::INFINITY
                } else {
                    gap / dw.norm()
                }
            }
        }
    }

    /// `(f(z), f′(z))`, or `None` inside the pole exclusion disk.
    pub fn eval_with_derivative(&self, z: ComplexPoint) -> Result<Option<(ComplexPoint, ComplexPoint)>> {
        if !z.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite argument {z}")));
        }
        if self.pole_distance(z) < self.pole_exclusion_radius {
            return Ok(None);
        }
        let pair = match &self.variant {
            Variant::TanPower { lambda, m } => {
                let t = tan::tan(z);
                let m = *m as i32;
                let tm1 = t.powi(m - 1);
                (lambda * tm1 * t, lambda * m as f64 * tm1 * (1.0 + t * t))
            }
            Variant::WeierstrassP { lattice } => lattice.wp(z)?,
            Variant::EllipticComposePoly { lattice, poly } => {
                let (w, dw) = poly.eval_with_derivative(z);
                let (p, dp) = lattice.wp(w)?;
                (p, dp * dw)
            }
            Variant::ExpElliptic { lambda, d, lattice } => {
                let (p, dp) = lattice.wp(z)?;
                let base = 1.0 + p / *d as f64;
                let pow = base.powu(*d - 1);
                (lambda * pow * base, lambda * pow * dp)
            }
        };
        if !(pair.0.is_finite() && pair.1.is_finite()) {
            return Err(Error::SeriesNotConverged { re: z.re, im: z.im });
        }
        Ok(Some(pair))
    }

    pub fn eval(&self, z: ComplexPoint) -> Result<EvalResult> {
        Ok(match self.eval_with_derivative(z)? {
            Some((v, _)) => EvalResult::Value(v),
            None => EvalResult::AtPole,
        })
    }

    pub fn deriv(&self, z: ComplexPoint) -> Result<EvalResult> {
        Ok(match self.eval_with_derivative(z)? {
            Some((_, d)) => EvalResult::Value(d),
            None => EvalResult::AtPole,
        })
    }

    /// Poles in the closed disk `|z − center| ≤ radius`, sorted by modulus then
    /// argument.
    pub fn poles_near(&self, center: ComplexPoint, radius: f64) -> Result<Vec<PoleData>> {
        let mut poles = match &self.variant {
            Variant::TanPower { lambda, m } => {
                let k_lo = ((center.re - radius - PI / 2.0) / PI).floor() as i64;
                let k_hi = ((center.re + radius - PI / 2.0) / PI).ceil() as i64;
                let lead = lambda * if m % 2 == 0 { 1.0 } else { -1.0 };
                (k_lo..=k_hi)
                    .map(|k| tan::pole_location(k as f64))
                    .filter(|p| (p - center).norm() <= radius)
                    .map(|location| PoleData { location, multiplicity: *m, leading_coefficient: lead })
                    .collect::<Vec<_>>()
            }
            Variant::WeierstrassP { lattice } => lattice
                .points_in_disk(center, radius)
                .into_iter()
                .map(|location| PoleData { location, multiplicity: 2, leading_coefficient: C::new(1.0, 0.0) })
                .collect(),
            Variant::ExpElliptic { lambda, d, lattice } => {
                let lead = lambda / (*d as f64).powi(*d as i32);
                lattice
                    .points_in_disk(center, radius)
                    .into_iter()
                    .map(|location| PoleData { location, multiplicity: 2 * d, leading_coefficient: lead })
                    .collect()
            }
            Variant::EllipticComposePoly { lattice, poly } => {
                let bound = poly.modulus_bound(center.norm() + radius);
                let mut out = Vec::new();
                for omega in lattice.points_in_disk(C::new(0.0, 0.0), bound) {
                    let roots = poly.solve(omega)?;
                    out.extend(compose_poles(poly, &roots).into_iter().filter(|p| (p.location - center).norm() <= radius));
                }
                out
            }
        };
        poles.sort_by_key(|p| sort_key(p.location));
        Ok(poles)
    }

    pub fn poles_in_disk(&self, radius: f64) -> Result<Vec<PoleData>> {
        self.poles_near(C::new(0.0, 0.0), radius)
    }

    /// Critical points of `f` in the disk `|z − center| ≤ radius`.
    pub fn critical_points_near(&self, center: ComplexPoint, radius: f64) -> Result<Vec<ComplexPoint>> {
        let mut pts = match &self.variant {
            Variant::TanPower { m, .. } => {
                if *m == 1 {
                    Vec::new()
                } else {
                    let k_lo = ((center.re - radius) / PI).floor() as i64;
                    let k_hi = ((center.re + radius) / PI).ceil() as i64;
                    (k_lo..=k_hi)
                        .map(|k| C::new(k as f64 * PI, 0.0))
                        .filter(|p| (p - center).norm() <= radius)
                        .collect()
                }
            }
            Variant::WeierstrassP { lattice } => lattice.half_points_in_disk(center, radius),
            Variant::ExpElliptic { d, lattice, .. } => {
                let mut pts = lattice.half_points_in_disk(center, radius);
                if *d >= 2 {
                    for s in lattice.solve_wp(C::new(-(*d as f64), 0.0))? {
                        pts.extend(lattice.points_in_disk(center - s, radius).into_iter().map(|w| w + s));
                    }
                }
                pts
            }
            Variant::EllipticComposePoly { lattice, poly } => {
                let mut pts = Vec::new();
                if let Some(dp) = poly.derivative() {
                    pts.extend(dp.solve(C::new(0.0, 0.0))?.into_iter().filter(|z| (z - center).norm() <= radius));
                }
                let bound = poly.modulus_bound(center.norm() + radius);
                for h in lattice.half_points_in_disk(C::new(0.0, 0.0), bound) {
                    pts.extend(poly.solve(h)?.into_iter().filter(|z| (z - center).norm() <= radius));
                }
                pts
            }
        };
        sort_points(&mut pts);
        Ok(pts)
    }

    /// The finite set of singular values (critical and asymptotic values).
    pub fn singular_values(&self) -> Result<Vec<ComplexPoint>> {
        Ok(match &self.variant {
            Variant::TanPower { lambda, m } => {
                let i = C::i();
                let mut v = vec![lambda * i.powu(*m), lambda * (-i).powu(*m)];
                if *m > 1 {
                    v.push(C::new(0.0, 0.0));
                }
                v
            }
            Variant::WeierstrassP { lattice } => lattice.critical_values()?.to_vec(),
            Variant::ExpElliptic { lambda, d, lattice } => {
                let df = *d as f64;
                let mut v: Vec<C> =
                    lattice.critical_values()?.iter().map(|e| lambda * (1.0 + e / df).powu(*d)).collect();
                if *d >= 2 {
                    v.push(C::new(0.0, 0.0));
                }
                v
            }
            Variant::EllipticComposePoly { lattice, poly } => {
                let mut v = lattice.critical_values()?.to_vec();
                if let Some(dp) = poly.derivative() {
                    for c in dp.solve(C::new(0.0, 0.0))? {
                        if let Some(val) = self.eval(c)?.value() {
                            v.push(val);
                        }
                    }
                }
                v
            }
        })
    }

    /// Least-squares slope of `log|f′|` against `log|f|` along a ray into
    /// the pole, with `ε` log-spaced in `[10⁻⁶, 10⁻²]`. Near a pole of order
    /// `q` this is `1 + 1/q`.
    pub fn near_pole_scaling_exponent(&self, pole: &PoleData, samples: usize) -> Result<f64> {
        if samples < 10 {
            return Err(Error::InvalidParameter("need at least 10 samples".into()));
        }
        let direction = C::from_polar(1.0, 0.3);
        let mut pts = Vec::with_capacity(samples);
        for k in 0..samples {
            let eps = 10f64.powf(-6.0 + 4.0 * k as f64 / (samples - 1) as f64);
            let z = pole.location + eps * direction;
            let (v, dv) = self
                .eval_with_derivative(z)?
                .ok_or(Error::AtPole { re: z.re, im: z.im })?;
            pts.push((v.norm().ln(), dv.norm().ln()));
        }
        least_squares(&pts)
            .map(|fit| fit.slope)
            .ok_or_else(|| Error::InsufficientData("degenerate scaling samples".into()))
    }
}

/// Poles of `℘∘P` over the roots of `P(z) = ω`. Clustered roots merge into a
/// single pole of multiplicity `2k`.
fn compose_poles(poly: &Polynomial, roots: &[C]) -> Vec<PoleData> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let cluster: Vec<usize> = (i..roots.len()).filter(|&j| !used[j] && (roots[j] - roots[i]).norm() < 1e-6).collect();
        let k = cluster.len();
        let centre = cluster.iter().map(|&j| roots[j]).sum::<C>() / k as f64;
        for j in cluster {
            used[j] = true;
        }
        // k-th Taylor coefficient of P at the root
        let mut deriv = poly.clone();
        let mut factorial = 1.0;
        for n in 1..=k {
            deriv = match deriv.derivative() {
                Some(d) => d,
                None => break,
            };
            factorial *= n as f64;
        }
        let ck = deriv.eval(centre) / factorial;
        out.push(PoleData {
            location: centre,
            multiplicity: 2 * k as u32,
            leading_coefficient: 1.0 / (ck * ck),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn tan1() -> FamilySpec {
        FamilySpec::tan_power(c(1.0, 0.0), 1).unwrap()
    }

    fn wp() -> FamilySpec {
        FamilySpec::weierstrass(Lattice::square())
    }

    #[test]
    fn tan_at_quarter_pi() {
        let v = tan1().eval(c(PI / 4.0, 0.0)).unwrap().value().unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        let d = tan1().deriv(c(0.0, 0.0)).unwrap().value().unwrap();
        assert!((d - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lattice_point_is_pole() {
        assert_eq!(wp().eval(c(0.0, 0.0)).unwrap(), EvalResult::AtPole);
        assert_eq!(wp().eval(c(1.0, 1.0)).unwrap(), EvalResult::AtPole);
        assert_eq!(tan1().eval(c(FRAC_PI_2, 0.0)).unwrap(), EvalResult::AtPole);
        assert!(tan1().eval(c(FRAC_PI_2 + 1e-9, 0.0)).unwrap().value().is_some());
    }

    #[test]
    fn metadata_closed_forms() {
        let lat = Lattice::square();
        let f = FamilySpec::tan_power(c(2.0, 1.0), 3).unwrap();
        assert_eq!((f.order, f.alpha1, f.max_pole_multiplicity), (1.0, 0.0, 3));
        let f = wp();
        assert_eq!((f.order, f.alpha1, f.max_pole_multiplicity), (2.0, 0.0, 2));
        let p = Polynomial::new(vec![c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let f = FamilySpec::elliptic_compose_poly(lat.clone(), p).unwrap();
        assert_eq!((f.order, f.alpha1, f.max_pole_multiplicity), (4.0, 1.0, 2));
        let f = FamilySpec::exp_elliptic(c(1.0, 0.0), 3, lat).unwrap();
        assert_eq!((f.order, f.alpha1, f.max_pole_multiplicity), (2.0, 0.0, 6));
        assert!(FamilySpec::tan_power(c(0.0, 0.0), 1).is_err());
        assert!(FamilySpec::tan_power(c(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn tan_poles_in_disk() {
        let poles = tan1().poles_in_disk(2.0).unwrap();
        assert_eq!(poles.len(), 2);
        assert!((poles[0].location - c(FRAC_PI_2, 0.0)).norm() < 1e-15);
        assert!((poles[1].location - c(-FRAC_PI_2, 0.0)).norm() < 1e-15);
        let f = FamilySpec::tan_power(c(1.0, 0.0), 4).unwrap();
        assert!(f.poles_in_disk(2.0).unwrap().iter().all(|p| p.multiplicity == 4));
    }

    #[test]
    fn lattice_poles_in_disk() {
        let poles = wp().poles_in_disk(1.1).unwrap();
        assert_eq!(poles.len(), 5);
        assert_eq!(poles[0].location, c(0.0, 0.0));
        for target in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(poles.iter().any(|p| (p.location - target).norm() < 1e-14));
        }
        assert!(poles.iter().all(|p| p.multiplicity == 2));

        let f = FamilySpec::exp_elliptic(c(1.0, 0.0), 3, Lattice::square()).unwrap();
        let poles = f.poles_in_disk(0.5).unwrap();
        assert_eq!(poles.len(), 1);
        assert_eq!(poles[0].multiplicity, 6);
    }

    #[test]
    fn compose_poles_are_preimages_of_lattice() {
        let p = Polynomial::new(vec![c(0.3, 0.1), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let f = FamilySpec::elliptic_compose_poly(Lattice::square(), p.clone()).unwrap();
        let poles = f.poles_in_disk(2.0).unwrap();
        assert!(!poles.is_empty());
        for pole in &poles {
            let w = p.eval(pole.location);
            assert!((w - Lattice::square().nearest_point(w)).norm() < 1e-10);
            assert_eq!(pole.multiplicity, 2);
        }
        // points with |P(z)| small: P(z) = 0 ⇔ z = ±√(−0.3−0.1i) must be poles
        let r = (c(-0.3, -0.1)).sqrt();
        assert!(poles.iter().any(|q| (q.location - r).norm() < 1e-10));
        assert!(poles.iter().any(|q| (q.location + r).norm() < 1e-10));
    }

    fn check_leading_coefficient(f: &FamilySpec, pole: &PoleData) {
        let h = C::from_polar(1e-4, 0.7);
        let v = f.eval(pole.location + h).unwrap().value().unwrap();
        let g = v * h.powu(pole.multiplicity);
        assert!(
            (g - pole.leading_coefficient).norm() < 1e-3 * pole.leading_coefficient.norm(),
            "{}: {g} vs {}",
            f.label(),
            pole.leading_coefficient
        );
    }

    #[test]
    fn leading_coefficients() {
        let lat = Lattice::new(c(1.0, 0.0), c(0.2, 1.1)).unwrap();
        let families = vec![
            FamilySpec::tan_power(c(1.5, -0.5), 1).unwrap(),
            FamilySpec::tan_power(c(1.0, 0.0), 2).unwrap(),
            FamilySpec::weierstrass(lat.clone()),
            FamilySpec::exp_elliptic(c(0.5, 0.5), 2, lat.clone()).unwrap(),
            FamilySpec::elliptic_compose_poly(lat, Polynomial::new(vec![c(0.2, 0.0), c(1.0, 0.5), c(0.5, 0.0)]).unwrap())
                .unwrap(),
        ];
        for f in &families {
            for pole in f.poles_in_disk(2.0).unwrap().iter().take(4) {
                check_leading_coefficient(f, pole);
            }
        }
    }

    #[test]
    fn exp_elliptic_derivative_matches_finite_difference() {
        let f = FamilySpec::exp_elliptic(c(0.7, 0.2), 3, Lattice::square()).unwrap();
        for z in [c(0.31, 0.27), c(-0.2, 0.41), c(1.37, -0.66)] {
            let h = 1e-6;
            let fd = (f.eval(z + h).unwrap().value().unwrap() - f.eval(z - h).unwrap().value().unwrap()) / (2.0 * h);
            let d = f.deriv(z).unwrap().value().unwrap();
            assert!((fd - d).norm() < 1e-5 * d.norm(), "{z}: {fd} vs {d}");
        }
    }

    #[test]
    fn near_pole_scaling_slopes() {
        let cases = [
            (tan1(), c(FRAC_PI_2, 0.0), 2.0),
            (wp(), c(0.0, 0.0), 1.5),
            (FamilySpec::exp_elliptic(c(1.0, 0.0), 2, Lattice::square()).unwrap(), c(0.0, 0.0), 1.25),
        ];
        for (f, loc, expected) in cases {
            let pole = f.poles_near(loc, 1e-9).unwrap()[0];
            let slope = f.near_pole_scaling_exponent(&pole, 40).unwrap();
            assert!((slope - expected).abs() < 0.02, "{}: {slope}", f.label());
        }
    }

    #[test]
    fn scaling_needs_ten_samples() {
        let f = tan1();
        let pole = f.poles_in_disk(2.0).unwrap()[0];
        assert!(f.near_pole_scaling_exponent(&pole, 9).is_err());
    }

    #[test]
    fn singular_values_and_critical_points() {
        let sv = tan1().singular_values().unwrap();
        assert!(sv.iter().any(|v| (v - C::i()).norm() < 1e-15));
        assert!(sv.iter().any(|v| (v + C::i()).norm() < 1e-15));
        assert!(tan1().critical_points_near(c(0.0, 0.0), 10.0).unwrap().is_empty());

        let crit = wp().critical_points_near(c(1.0, 0.0), 0.6).unwrap();
        for p in &crit {
            let d = wp().deriv(*p).unwrap().value().unwrap();
            assert!(d.norm() < 1e-8, "{p}: {d}");
        }
        assert_eq!(crit.len(), 4);

        let f = FamilySpec::exp_elliptic(c(1.0, 0.0), 2, Lattice::square()).unwrap();
        let crit = f.critical_points_near(c(0.0, 0.0), 1.0).unwrap();
        assert!(crit.len() > 4);
        for p in &crit {
            let d = f.deriv(*p).unwrap().value().unwrap();
            assert!(d.norm() < 1e-6, "{p}: {d}");
        }
    }
}
