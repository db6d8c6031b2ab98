//! End-to-end run: `b`-points → order estimate → branches → separation →
//! θ̂ and Bowen root → comparison with the closed-form bound.

use serde::Serialize;

use crate::bounds::{theorem1_bound, BoundInput, BoundReport};
use crate::families::FamilySpec;
use crate::ifs::{
    bowen_one_level, build_branches, divergence_indicated, dyadic_block_sums, estimate_theta_windowed, separation_check,
    BlockSum, BowenRoot, Branch, DistortionMode, IfsConfig, SeparationReport, ThetaEstimate,
};
use crate::preimage::{counting_function, estimate_order_of_growth, find_preimages, CountingSample, Preimage, SolverConfig};
use crate::Result;

/// Number of radii sampled for the counting function.
const COUNTING_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Search radius for `b`-points; `None` picks a family default.
    pub preimage_radius: Option<f64>,
    /// Overrides the computed `R`.
    pub outer_radius: Option<f64>,
    pub max_branches: usize,
    pub distortion: DistortionMode,
    /// Fraction of branches (largest `|z_n|`) used in the θ regression.
    pub regression_window: f64,
    pub solver: SolverConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preimage_radius: None,
            outer_radius: None,
            max_branches: 20_000,
            distortion: DistortionMode::Off,
            regression_window: 1.0,
            solver: SolverConfig::default(),
        }
    }
}

/// `200π` for order at most one, otherwise `3R + 8`: the `b`-points beyond the
/// `3R` cut then fill an annulus wide enough for the regression.
pub fn default_preimage_radius(f: &FamilySpec, ifs: &IfsConfig) -> f64 {
    if f.order <= 1.0 {
        200.0 * std::f64::consts::PI
    } else {
        ifs.bpoint_cutoff() + 8.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineResult {
    pub family_label: String,
    pub bound_input: BoundInput,
    pub theoretical: f64,
    pub ifs: IfsConfig,
    pub preimage_radius: f64,
    #[serde(skip)]
    pub preimages: Vec<Preimage>,
    pub preimage_count: usize,
    pub counting: Vec<CountingSample>,
    pub rho_hat: f64,
    #[serde(skip)]
    pub branches: Vec<Branch>,
    pub branch_count: usize,
    pub separation: SeparationReport,
    pub theta: ThetaEstimate,
    pub distortion_factor: f64,
    pub bowen: BowenRoot,
    pub block_sums_at_theta: Vec<BlockSum>,
    /// Whether dyadic blocks of `Σ_θ̂` fail to decay; `None` with too few blocks.
    pub divergence_at_theta: Option<bool>,
    pub report: BoundReport,
}

pub fn run(f: &FamilySpec, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let bound_input = BoundInput::for_family(f);
    let theoretical = theorem1_bound(&bound_input)?;

    let mut ifs = IfsConfig::for_family(f, cfg.max_branches)?;
    if let Some(big_r) = cfg.outer_radius {
        ifs = IfsConfig::new(f, ifs.pole, ifs.inner_radius, big_r, cfg.max_branches)?;
    }
    let radius = cfg.preimage_radius.unwrap_or_else(|| default_preimage_radius(f, &ifs));

    let preimages = find_preimages(f, ifs.pole.location, radius, &cfg.solver)?;
    let radii: Vec<f64> = (1..=COUNTING_SAMPLES).map(|k| radius * k as f64 / COUNTING_SAMPLES as f64).collect();
    let counting = counting_function(&preimages, &radii)?;
    let rho_hat = estimate_order_of_growth(&counting)?;

    let branches = build_branches(f, &ifs, &preimages)?;
    let separation = separation_check(&branches, &ifs);
    let theta = estimate_theta_windowed(&branches, rho_hat, cfg.regression_window)?;

    let tail: Vec<Branch> = branches.iter().filter(|b| b.index >= separation.n0).copied().collect();
    let distortion_factor = cfg.distortion.factor(&ifs);
    let bowen = bowen_one_level(&tail, tail.len(), distortion_factor)?;

    let block_sums_at_theta = dyadic_block_sums(&tail, theta.theta_hat);
    let divergence_at_theta = divergence_indicated(&block_sums_at_theta);

    let report = BoundReport::theory_only(f.label(), bound_input)?.with_numerics(Some(theta.theta_hat), Some(bowen.value));

    Ok(PipelineResult {
        family_label: f.label(),
        bound_input,
        theoretical,
        ifs,
        preimage_radius: radius,
        preimage_count: preimages.len(),
        preimages,
        counting,
        rho_hat,
        branch_count: branches.len(),
        branches,
        separation,
        theta,
        distortion_factor,
        bowen,
        block_sums_at_theta,
        divergence_at_theta,
        report,
    })
}
