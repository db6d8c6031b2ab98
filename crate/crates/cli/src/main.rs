mod config;
mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hypdim_core::bounds::{corollary_table, write_csv, BoundReport, Verdict};
use hypdim_core::ifs::{Branch, IfsConfig};
use hypdim_core::pipeline::{self, PipelineResult};
use hypdim_core::preimage::{find_preimages, write_preimages_csv};
use hypdim_core::render::{box_counting, default_box_sizes, render, write_box_count_csv, BoxCount};
use serde::Serialize;

use crate::config::{parse_complex, FamilyArgs, Format, PipelineArgs, RenderArgs, RunConfig};
use crate::manifest::{sha256_hex, Invocation, Manifest, OutputFile};

/// Lower bounds for the hyperbolic dimension of meromorphic Julia sets.
///
/// Settings come from `--config` (TOML) first; any flag given on the command
/// line overrides the file.
#[derive(Parser, Debug)]
#[command(name = "hypdim", version, about)]
struct Cli {
    /// TOML configuration with [family], [pipeline], [render] and [output] blocks.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the jittered subdivision retries.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form bound table, plus the numerical comparison when a family is selected.
    Bound {
        /// Print only the theory table.
        #[arg(long)]
        table_only: bool,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Certified solutions of f(z) = target (default: the IFS pole) as CSV.
    Preimages {
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Critical-exponent estimate and Bowen root as JSON.
    Theta {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Escape/pole-capture image, boundary mask and box-counting estimate.
    Render {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Every stage bundled in one JSON report.
    Report {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Repeat the run recorded in a manifest.
    Rerun { manifest: PathBuf },
}

struct Session {
    config: RunConfig,
    threads: Option<usize>,
    outputs: Vec<OutputFile>,
}

impl Session {
    fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }

    fn wants(&self, format: Format) -> bool {
        self.config.output.formats.contains(&format)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir().join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputFile { path: PathBuf::from(name), sha256: sha256_hex(bytes) });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish(mut self, invocation: Invocation) -> Result<()> {
        // the resolved settings, reusable with --config
        let resolved = self.config.to_toml()?;
        self.write("config.toml", resolved.as_bytes())?;
        let manifest = Manifest::new(invocation, &self.config, self.threads, self.outputs)?;
        let path = self.config.output.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn print_table(rows: &[BoundReport]) {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    println!("{:<44} {:>6} {:>6} {:>3} {:>11} {:>9} {:>9}  verdict", "family", "rho", "alpha1", "q", "theoretical", "theta_hat", "bowen");
    for r in rows {
        println!(
            "{:<44} {:>6.3} {:>6.3} {:>3} {:>11.6} {:>9} {:>9}  {:?}",
            r.family_label,
            r.rho,
            r.alpha1,
            r.q,
            r.theoretical,
            opt(r.theta_hat),
            opt(r.bowen_root),
            r.verdict
        );
    }
}

fn branches_csv(branches: &[Branch]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row {
        index: usize,
        bpoint_index: usize,
        root_index: usize,
        z_re: f64,
        z_im: f64,
        w_re: f64,
        w_im: f64,
        phi_deriv_mag: f64,
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for b in branches {
        w.serialize(Row {
            index: b.index,
            bpoint_index: b.bpoint_index,
            root_index: b.root_index,
            z_re: b.z_n.re,
            z_im: b.z_n.im,
            w_re: b.w_n.re,
            w_im: b.w_n.im,
            phi_deriv_mag: b.phi_deriv_mag,
        })?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))
}

#[derive(Serialize)]
struct ThetaOutput<'a> {
    family_label: &'a str,
    theoretical: f64,
    rho_hat: f64,
    theta: &'a hypdim_core::ifs::ThetaEstimate,
    bowen: &'a hypdim_core::ifs::BowenRoot,
    distortion_factor: f64,
    separation_n0: usize,
    branch_count: usize,
    verdict: Verdict,
}

fn theta_output(res: &PipelineResult) -> ThetaOutput<'_> {
    ThetaOutput {
        family_label: &res.family_label,
        theoretical: res.theoretical,
        rho_hat: res.rho_hat,
        theta: &res.theta,
        bowen: &res.bowen,
        distortion_factor: res.distortion_factor,
        separation_n0: res.separation.n0,
        branch_count: res.branch_count,
        verdict: res.report.verdict,
    }
}

#[derive(Serialize)]
struct RenderSummary {
    box_dimension: Option<f64>,
    boundary_pixels: usize,
    box_count: Option<BoxCount>,
}

fn run_render(session: &mut Session) -> Result<RenderSummary> {
    let f = session.config.family_spec()?;
    let grid = session.config.render.clone().unwrap_or_default().build()?;
    let classes = render(&f, &grid, None)?;
    session.write("julia.ppm", &classes.to_ppm())?;
    let mask = classes.julia_mask();
    session.write("julia-mask.pbm", &mask.to_pbm())?;
    let box_count = box_counting(&mask, &default_box_sizes(&mask)).ok();
    if let (Some(bc), true) = (&box_count, session.wants(Format::Csv)) {
        let mut buf = Vec::new();
        write_box_count_csv(&mut buf, bc)?;
        session.write("boxcount.csv", &buf)?;
    }
    Ok(RenderSummary { box_dimension: box_count.as_ref().map(|b| b.dimension), boundary_pixels: mask.count(), box_count })
}

/// 2 flags a numerical estimate that disagrees with the closed form.
fn verdict_exit_code(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Consistent | Verdict::NumericsUnavailable => 0,
        Verdict::Inconsistent => 2,
    }
}

fn execute(invocation: &Invocation, config: RunConfig, threads: Option<usize>) -> Result<ExitCode> {
    fs::create_dir_all(&config.output.dir).with_context(|| format!("creating {}", config.output.dir.display()))?;
    let mut session = Session { config, threads, outputs: Vec::new() };
    let mut code = ExitCode::SUCCESS;
    match invocation {
        Invocation::Bound { table_only } => {
            let mut rows = corollary_table();
            if !table_only && session.config.family.is_some() {
                let f = session.config.family_spec()?;
                let res = pipeline::run(&f, &session.config.pipeline.build())?;
                code = ExitCode::from(verdict_exit_code(res.report.verdict));
                rows.push(res.report);
            }
            print_table(&rows);
            if session.wants(Format::Csv) {
                let mut buf = Vec::new();
                write_csv(&mut buf, &rows)?;
                session.write("bound.csv", &buf)?;
            }
            if session.wants(Format::Json) {
                session.write_json("bound.json", &rows)?;
            }
        }
        Invocation::Preimages { target } => {
            let f = session.config.family_spec()?;
            let cfg = session.config.pipeline.build();
            let ifs = IfsConfig::for_family(&f, cfg.max_branches)?;
            let a = match target {
                Some(t) => parse_complex(t)?,
                None => ifs.pole.location,
            };
            let radius = cfg.preimage_radius.unwrap_or_else(|| pipeline::default_preimage_radius(&f, &ifs));
            let pts = find_preimages(&f, a, radius, &cfg.solver)?;
            let mut buf = Vec::new();
            write_preimages_csv(&mut buf, &pts)?;
            session.write("preimages.csv", &buf)?;
            eprintln!("{} solutions of f(z) = {a} with |z| <= {radius}", pts.len());
        }
        Invocation::Theta => {
            let f = session.config.family_spec()?;
            let res = pipeline::run(&f, &session.config.pipeline.build())?;
            let out = theta_output(&res);
            println!("{}", serde_json::to_string_pretty(&out)?);
            session.write_json("theta.json", &out)?;
            if session.wants(Format::Csv) {
                let csv = branches_csv(&res.branches)?;
                session.write("branches.csv", &csv)?;
            }
        }
        Invocation::Render => {
            let summary = run_render(&mut session)?;
            match summary.box_dimension {
                Some(d) => println!("box-counting dimension of the boundary mask: {d:.4}"),
                None => println!("boundary mask is empty; no box-counting estimate"),
            }
        }
        Invocation::Report => {
            let f = session.config.family_spec()?;
            let res = pipeline::run(&f, &session.config.pipeline.build())?;
            code = ExitCode::from(verdict_exit_code(res.report.verdict));
            let render = match session.config.render {
                Some(_) => Some(run_render(&mut session)?),
                None => None,
            };
            #[derive(Serialize)]
            struct Report<'a> {
                pipeline: &'a PipelineResult,
                render: Option<RenderSummary>,
            }
            let report = Report { pipeline: &res, render };
            session.write_json("report.json", &report)?;
            print_table(std::slice::from_ref(&res.report));
        }
    }
    session.finish(invocation.clone())?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match try_main(cli) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn try_main(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if let Command::Rerun { manifest } = &cli.command {
        let m = Manifest::load(manifest)?;
        let mut config = m.config;
        if let Some(out) = &cli.out {
            config.output.dir = out.clone();
        }
        return execute(&m.invocation, config, cli.threads.or(m.threads));
    }

    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let invocation = match &cli.command {
        Command::Bound { table_only, family, pipeline } => {
            config.apply_family(family);
            config.apply_pipeline(pipeline);
            Invocation::Bound { table_only: *table_only }
        }
        Command::Preimages { target, family, pipeline } => {
            config.apply_family(family);
            config.apply_pipeline(pipeline);
            Invocation::Preimages { target: target.clone() }
        }
        Command::Theta { family, pipeline } => {
            config.apply_family(family);
            config.apply_pipeline(pipeline);
            Invocation::Theta
        }
        Command::Render { family, render } => {
            config.apply_family(family);
            config.apply_render(render);
            Invocation::Render
        }
        Command::Report { family, pipeline, render } => {
            config.apply_family(family);
            config.apply_pipeline(pipeline);
            if render.touched() {
                config.apply_render(render);
            }
            Invocation::Report
        }
        Command::Rerun { .. } => unreachable!("handled above"),
    };
    if let Some(seed) = cli.seed {
        config.pipeline.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output.dir = out;
    }
    execute(&invocation, config, cli.threads)
}
