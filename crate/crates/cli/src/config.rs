//! Run configuration: TOML file, command-line overrides and the conversion
//! into core types.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use hypdim_core::ifs::DistortionMode;
use hypdim_core::pipeline::PipelineConfig;
use hypdim_core::preimage::SolverConfig;
use hypdim_core::render::RenderGrid;
use hypdim_core::{ComplexPoint, FamilySpec, Lattice, Polynomial};
use serde::{Deserialize, Serialize};

pub fn parse_complex(text: &str) -> Result<ComplexPoint> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    ComplexPoint::from_str(&compact).map_err(|_| anyhow!("`{text}` is not a complex number (try 1, -0.5+2i, i)"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Tan,
    Weierstrass,
    EllipticPoly,
    ExpElliptic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyBlock {
    pub variant: FamilyKind,
    /// Multiplier for `tan` and `exp-elliptic`.
    pub lambda: String,
    /// Power of `tan`.
    pub m: u32,
    pub omega1: String,
    pub omega2: String,
    /// Exponent of the exponential-elliptic approximant.
    pub d: u32,
    /// Polynomial coefficients, lowest degree first.
    pub poly: Vec<String>,
}

impl Default for FamilyBlock {
    fn default() -> Self {
        Self {
            variant: FamilyKind::Tan,
            lambda: "1".into(),
            m: 1,
            omega1: "1".into(),
            omega2: "i".into(),
            d: 2,
            poly: vec!["0".into(), "1".into()],
        }
    }
}

impl FamilyBlock {
    pub fn build(&self) -> Result<FamilySpec> {
        let lattice = || -> Result<Lattice> {
            Ok(Lattice::new(parse_complex(&self.omega1)?, parse_complex(&self.omega2)?)?)
        };
        Ok(match self.variant {
            FamilyKind::Tan => FamilySpec::tan_power(parse_complex(&self.lambda)?, self.m)?,
            FamilyKind::Weierstrass => FamilySpec::weierstrass(lattice()?),
            FamilyKind::EllipticPoly => {
                let coeffs = self.poly.iter().map(|c| parse_complex(c)).collect::<Result<Vec<_>>>()?;
                FamilySpec::elliptic_compose_poly(lattice()?, Polynomial::new(coeffs)?)?
            }
            FamilyKind::ExpElliptic => FamilySpec::exp_elliptic(parse_complex(&self.lambda)?, self.d, lattice()?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineBlock {
    /// `b`-point search radius; omitted means the family default.
    pub radius: Option<f64>,
    /// Overrides `R`, the modulus beyond which every value is covered.
    pub outer_radius: Option<f64>,
    pub max_branches: usize,
    pub distortion: DistortionMode,
    pub regression_window: f64,
    pub seed: u64,
}

impl Default for PipelineBlock {
    fn default() -> Self {
        let core = PipelineConfig::default();
        Self {
            radius: None,
            outer_radius: None,
            max_branches: core.max_branches,
            distortion: core.distortion,
            regression_window: core.regression_window,
            seed: core.solver.seed,
        }
    }
}

impl PipelineBlock {
    pub fn build(&self) -> PipelineConfig {
        PipelineConfig {
            preimage_radius: self.radius,
            outer_radius: self.outer_radius,
            max_branches: self.max_branches,
            distortion: self.distortion,
            regression_window: self.regression_window,
            solver: SolverConfig { seed: self.seed, ..SolverConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderBlock {
    pub center: String,
    pub width: f64,
    pub pixels_x: usize,
    pub pixels_y: usize,
    pub max_iter: u32,
    pub escape_radius: f64,
    pub pole_capture_radius: f64,
}

impl Default for RenderBlock {
    fn default() -> Self {
        let g = RenderGrid::default();
        Self {
            center: "0".into(),
            width: g.width,
            pixels_x: g.pixels_x,
            pixels_y: g.pixels_y,
            max_iter: g.max_iter,
            escape_radius: g.escape_radius,
            pole_capture_radius: g.pole_capture_radius,
        }
    }
}

impl RenderBlock {
    pub fn build(&self) -> Result<RenderGrid> {
        let grid = RenderGrid {
            center: parse_complex(&self.center)?,
            width: self.width,
            pixels_x: self.pixels_x,
            pixels_y: self.pixels_y,
            max_iter: self.max_iter,
            escape_radius: self.escape_radius,
            pole_capture_radius: self.pole_capture_radius,
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("hypdim-out"), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub family: Option<FamilyBlock>,
    pub pipeline: PipelineBlock,
    pub render: Option<RenderBlock>,
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        // the toml error message carries line and column
        toml::from_str(text).map_err(|e| anyhow!("invalid configuration: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn family_spec(&self) -> Result<FamilySpec> {
        match &self.family {
            Some(block) => block.build(),
            None => bail!("no family selected: pass --family or add a [family] block"),
        }
    }
}

/// Family flags. Any flag given overrides the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega2: Option<String>,
    #[arg(long)]
    pub d: Option<u32>,
    /// Comma-separated polynomial coefficients, lowest degree first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub poly: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Search radius for b-points.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub outer_radius: Option<f64>,
    #[arg(long)]
    pub max_branches: Option<usize>,
    #[arg(long, value_parser = parse_distortion)]
    pub distortion: Option<DistortionMode>,
    /// Fraction of branches with the largest |z_n| used in the regression.
    #[arg(long)]
    pub window: Option<f64>,
}

fn parse_distortion(text: &str) -> Result<DistortionMode, String> {
    match text {
        "off" => Ok(DistortionMode::Off),
        "koebe" => Ok(DistortionMode::Koebe),
        other => Err(format!("unknown distortion mode `{other}` (expected off or koebe)")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RenderArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    #[arg(long)]
    pub width: Option<f64>,
    /// Pixels per side.
    #[arg(long)]
    pub pixels: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<u32>,
    #[arg(long)]
    pub escape_radius: Option<f64>,
}

impl RenderArgs {
    pub fn touched(&self) -> bool {
        self.center.is_some()
            || self.width.is_some()
            || self.pixels.is_some()
            || self.max_iter.is_some()
            || self.escape_radius.is_some()
    }
}

impl RunConfig {
    pub fn apply_family(&mut self, args: &FamilyArgs) {
        let touched = args.family.is_some()
            || args.lambda.is_some()
            || args.m.is_some()
            || args.omega1.is_some()
            || args.omega2.is_some()
            || args.d.is_some()
            || args.poly.is_some();
        if !touched {
            return;
        }
        let block = self.family.get_or_insert_with(FamilyBlock::default);
        if let Some(v) = args.family {
            block.variant = v;
        }
        if let Some(v) = &args.lambda {
            block.lambda = v.clone();
        }
        if let Some(v) = args.m {
            block.m = v;
        }
        if let Some(v) = &args.omega1 {
            block.omega1 = v.clone();
        }
        if let Some(v) = &args.omega2 {
            block.omega2 = v.clone();
        }
        if let Some(v) = args.d {
            block.d = v;
        }
        if let Some(v) = &args.poly {
            block.poly = v.clone();
        }
    }

    pub fn apply_pipeline(&mut self, args: &PipelineArgs) {
        let p = &mut self.pipeline;
        if args.radius.is_some() {
            p.radius = args.radius;
        }
        if args.outer_radius.is_some() {
            p.outer_radius = args.outer_radius;
        }
        if let Some(v) = args.max_branches {
            p.max_branches = v;
        }
        if let Some(v) = args.distortion {
            p.distortion = v;
        }
        if let Some(v) = args.window {
            p.regression_window = v;
        }
    }

    pub fn apply_render(&mut self, args: &RenderArgs) {
        let r = self.render.get_or_insert_with(RenderBlock::default);
        if let Some(v) = &args.center {
            r.center = v.clone();
        }
        if let Some(v) = args.width {
            r.width = v;
        }
        if let Some(v) = args.pixels {
            r.pixels_x = v;
            r.pixels_y = v;
        }
        if let Some(v) = args.max_iter {
            r.max_iter = v;
        }
        if let Some(v) = args.escape_radius {
            r.escape_radius = v;
        }
    }
}
