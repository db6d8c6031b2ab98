use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

type C = Complex64;

/// Complex polynomial, coefficients lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coefficients: Vec<C>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<C>) -> Result<Self> {
        match coefficients.last() {
            None => Err(Error::InvalidParameter("polynomial needs at least one coefficient".into())),
            Some(lead) if lead.norm() == 0.0 => {
                Err(Error::InvalidParameter("leading coefficient must be nonzero".into()))
            }
            Some(_) if coefficients.iter().any(|c| !c.is_finite()) => {
                Err(Error::InvalidParameter("non-finite coefficient".into()))
            }
            Some(_) => Ok(Self { coefficients }),
        }
    }

    pub fn coefficients(&self) -> &[C] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, z: C) -> C {
        self.coefficients.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `(P(z), P′(z))` by Horner.
    pub fn eval_with_derivative(&self, z: C) -> (C, C) {
        let mut p = C::new(0.0, 0.0);
        let mut dp = C::new(0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Option<Polynomial> {
        if self.degree() == 0 {
            return None;
        }
        let coeffs = self.coefficients.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect();
        Polynomial::new(coeffs).ok()
    }

    /// Upper bound on `|P(z)|` over `|z| ≤ radius`.
    pub fn modulus_bound(&self, radius: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * radius + c.norm())
    }

    /// All roots of `P(z) = target`, with multiplicity, by Aberth–Ehrlich
    /// iteration. Always returns exactly `degree` roots or fails.
    pub fn solve(&self, target: C) -> Result<Vec<C>> {
        let d = self.degree();
        if d == 0 {
            return Ok(Vec::new());
        }
        let mut coeffs = self.coefficients.clone();
        coeffs[0] -= target;
        let lead = coeffs[d];
        if d == 1 {
            return Ok(vec![-coeffs[0] / lead]);
        }
        let shifted = Polynomial { coefficients: coeffs };

        // Cauchy bound for the initial circle
        let bound = 1.0 + shifted.coefficients[..d].iter().map(|c| (c / lead).norm()).fold(0.0, f64::max);
        let radius = bound.min(1e6).max(1e-3) * 0.5;
        let mut roots: Vec<C> = (0..d)
            .map(|k| C::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4))
            .collect();

        for _ in 0..500 {
            let mut max_step: f64 = 0.0;
            for i in 0..d {
                let (p, dp) = shifted.eval_with_derivative(roots[i]);
                if p.norm() == 0.0 {
                    continue;
                }
                let ratio = p / dp;
                let repulsion: C = (0..d)
                    .filter(|&j| j != i)
                    .map(|j| 1.0 / (roots[i] - roots[j]))
                    .sum();
                let step = ratio / (1.0 - ratio * repulsion);
                if step.is_finite() {
                    roots[i] -= step;
                    max_step = max_step.max(step.norm() / roots[i].norm().max(1.0));
                }
            }
            if max_step < 1e-15 {
                break;
            }
        }
        for r in &roots {
            let (p, _) = shifted.eval_with_derivative(*r);
            let scale = shifted.modulus_bound(r.norm()).max(1e-300);
            if !r.is_finite() || p.norm() > 1e-8 * scale {
                return Err(Error::CountMismatch { expected: d, found: 0 });
            }
        }
        Ok(roots)
    }
}
