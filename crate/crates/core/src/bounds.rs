//! Closed-form lower bound `ρ / (α₁ + 1 + 1/q)` and its specialisations.

use std::io::Write;

use serde::Serialize;

use crate::families::FamilySpec;
use crate::{Error, Result};

/// Tolerance on `|θ̂ − bound|` (and on the Bowen root exceeding the bound) for
/// a consistent verdict.
pub const CONSISTENCY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInput {
    pub rho: f64,
    pub alpha1: f64,
    pub q: u32,
}

impl BoundInput {
    pub fn new(rho: f64, alpha1: f64, q: u32) -> Self {
        Self { rho, alpha1, q }
    }

    pub fn for_family(f: &FamilySpec) -> Self {
        Self { rho: f.order, alpha1: f.alpha1, q: f.max_pole_multiplicity }
    }

    /// `α₁ + 1 + 1/q`, the decay exponent of `|Φₙ′(b)|` in `|z_n|`.
    pub fn exponent(&self) -> f64 {
        self.alpha1 + 1.0 + 1.0 / self.q as f64
    }
}

pub fn theorem1_bound(input: &BoundInput) -> Result<f64> {
    if input.q == 0 {
        return Err(Error::InvalidParameter("pole multiplicity must be positive".into()));
    }
    if !(input.rho > 0.0) {
        return Err(Error::InvalidParameter("order must be positive".into()));
    }
    let limit = -1.0 - 1.0 / input.q as f64;
    if !(input.alpha1 > limit) {
        return Err(Error::HypothesisViolated { alpha1: input.alpha1, limit });
    }
    Ok(input.rho / input.exponent())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    NumericsUnavailable,
}

/// Consistent iff `|θ̂ − theory| ≤ 0.05` and, when given, the Bowen root does
/// not exceed `theory + 0.05`.
pub fn compare(theory: f64, theta_hat: Option<f64>, bowen_root: Option<f64>) -> Verdict {
    let Some(theta) = theta_hat else {
        return Verdict::NumericsUnavailable;
    };
    let theta_ok = (theta - theory).abs() <= CONSISTENCY_TOLERANCE;
    let bowen_ok = bowen_root.map_or(true, |t| t <= theory + CONSISTENCY_TOLERANCE);
    if theta_ok && bowen_ok {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub family_label: String,
    pub rho: f64,
    pub alpha1: f64,
    pub q: u32,
    pub theoretical: f64,
    pub theta_hat: Option<f64>,
    pub bowen_root: Option<f64>,
    pub verdict: Verdict,
}

impl BoundReport {
    pub fn theory_only(label: impl Into<String>, input: BoundInput) -> Result<Self> {
        Ok(Self {
            family_label: label.into(),
            rho: input.rho,
            alpha1: input.alpha1,
            q: input.q,
            theoretical: theorem1_bound(&input)?,
            theta_hat: None,
            bowen_root: None,
            verdict: Verdict::NumericsUnavailable,
        })
    }

    pub fn with_numerics(mut self, theta_hat: Option<f64>, bowen_root: Option<f64>) -> Self {
        self.theta_hat = theta_hat;
        self.bowen_root = bowen_root;
        self.verdict = compare(self.theoretical, theta_hat, bowen_root);
        self
    }
}

/// Theory rows for every closed-form specialisation: tan powers, elliptic
/// functions, ℘∘P, exponential-elliptic approximants, Riccati solutions and
/// Schwarzian-equation solutions.
pub fn corollary_table() -> Vec<BoundReport> {
    let mut rows = Vec::new();
    let mut push = |label: String, input: BoundInput| {
        rows.push(BoundReport::theory_only(label, input).expect("catalogued rows satisfy the hypothesis"));
    };
    for m in 1..=5 {
        push(format!("tan_power(m={m})"), BoundInput::new(1.0, 0.0, m));
    }
    for q in 2..=3 {
        push(format!("elliptic(q={q})"), BoundInput::new(2.0, 0.0, q));
    }
    for d in 1..=4u32 {
        push(format!("elliptic_compose_poly(d={d},q=2)"), BoundInput::new(2.0 * d as f64, d as f64 - 1.0, 2));
    }
    for d in 1..=10u32 {
        push(format!("exp_elliptic(d={d},q=2)"), BoundInput::new(2.0, 0.0, 2 * d));
    }
    for d0 in 0..=4u32 {
        for d1 in 0..=4u32 {
            let rho = 1.0 + (d0 as f64 / 2.0).max(d1 as f64);
            push(format!("riccati(d0={d0},d1={d1})"), BoundInput::new(rho, d0.max(d1) as f64, 1));
        }
    }
    for d in [0u32, 2, 4] {
        push(format!("schwarzian(d={d})"), BoundInput::new(d as f64 / 2.0 + 1.0, d as f64 / 2.0, 1));
    }
    rows
}

/// The exponential-elliptic rows increase strictly and stay below 2.
pub fn exp_elliptic_rows_increase_to_two(rows: &[BoundReport]) -> bool {
    let values: Vec<f64> =
        rows.iter().filter(|r| r.family_label.starts_with("exp_elliptic")).map(|r| r.theoretical).collect();
    !values.is_empty() && values.windows(2).all(|w| w[0] < w[1]) && values.iter().all(|&v| v < 2.0)
}

pub fn write_csv<W: Write>(out: W, rows: &[BoundReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
