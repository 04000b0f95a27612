//! Command-line front end.
//!
//! Point clouds are CSV files with one point per row and an optional header
//! line. Results are written in long format with columns
//! `metric,parameter,value,std_error`, and a JSON sidecar echoes the full
//! configuration.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::discrepancies::{DiscrepancyKind, GradientMethodConfig, OptimizerConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    convergence_rate, four_mode_centers, gaussian_modes, gmm_fit, kappa_sweep, mode_shares,
    particle_flow, ExperimentResult, FlowConfig, GmmFitConfig, Record,
};
use crate::fgw1d::{FgwConfig, PointCloud};
use crate::rng::SeededRng;

#[derive(Debug, Parser, Serialize)]
#[command(name = "ssfg", version, about = "Sliced fused Gromov-Wasserstein discrepancies")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Discrepancy between two point clouds.
    Discrepancy(DiscrepancyArgs),
    /// SSFG over a grid of concentrations, with SFG and max-SFG rows.
    SweepKappa(SweepArgs),
    /// Sample-complexity rate on the uniform distribution over the unit cube.
    Convergence(ConvergenceArgs),
    /// Particle flow toward a target cloud.
    Flow(FlowArgs),
    /// Gaussian mixture fit to a target cloud.
    GmmFit(GmmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Sfg,
    MaxSfg,
    Ssfg,
    Pssfg,
    Mssfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientArg {
    Pathwise,
    FiniteDifference,
}

#[derive(Debug, Args, Serialize)]
pub struct CommonArgs {
    /// Fused weight of the Gromov-Wasserstein term.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Ground-cost exponent.
    #[arg(long, default_value_t = 2)]
    pub r: u32,
    /// Directions per Monte Carlo estimate.
    #[arg(long = "L", visible_alias = "num-projections", default_value_t = 50)]
    pub num_projections: usize,
    #[arg(long, default_value_t = 10)]
    pub max_iter: usize,
    /// Adam learning rate for the slicing locations.
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub adam_beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub adam_beta2: f64,
    /// Random starts for max-SFG.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value_t = GradientArg::Pathwise)]
    pub gradient: GradientArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Results CSV; the JSON sidecar goes next to it. Stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KindArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Ssfg)]
    pub kind: KindArg,
    /// Concentration for ssfg and pssfg.
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    /// Mixture concentrations; a single value is repeated for every component.
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    /// Mixture components.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Mixture weights; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct DiscrepancyArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    pub mu: PathBuf,
    pub nu: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 10.0, 50.0, 100.0])]
    pub kappas: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[command(flatten)]
    pub common: CommonArgs,
    pub mu: PathBuf,
    pub nu: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergenceArgs {
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![10, 20, 40, 80, 160, 320, 640])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FlowArgs {
    /// Target cloud; four Gaussian modes at (+-4, +-4) when absent.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Particles (and generated target points).
    #[arg(long, default_value_t = 512)]
    pub particles: usize,
    #[arg(long, default_value_t = 3000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub step_size: f64,
    /// Location-ascent iterations per flow step.
    #[arg(long, default_value_t = 1)]
    pub inner_iter: usize,
    #[arg(long, default_value_t = 100)]
    pub snapshot_every: usize,
    /// Write the final particles here.
    #[arg(long)]
    pub save_particles: Option<PathBuf>,
    #[command(flatten)]
    pub kind: KindArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GmmArgs {
    /// Target cloud; four Gaussian modes at (+-4, +-4) when absent.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Points in the generated target.
    #[arg(long, default_value_t = 1024)]
    pub target_size: usize,
    #[arg(long, default_value_t = 10)]
    pub components: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 1)]
    pub inner_iter: usize,
    #[command(flatten)]
    pub kind: KindArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

impl CommonArgs {
    fn fgw(&self) -> Result<FgwConfig> {
        FgwConfig::new(self.beta, self.r)
    }

    fn optimizer(&self) -> Result<OptimizerConfig> {
        let opt = OptimizerConfig {
            learning_rate: self.lr,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            max_iter: self.max_iter,
            num_projections: self.num_projections,
            gradient_method: match self.gradient {
                GradientArg::Pathwise => GradientMethodConfig::Pathwise,
                GradientArg::FiniteDifference => GradientMethodConfig::FiniteDifference,
            },
            restarts: self.restarts,
            seed: self.seed,
        };
        opt.validate()?;
        Ok(opt)
    }
}

impl KindArgs {
    fn discrepancy(&self) -> Result<DiscrepancyKind> {
        Ok(match self.kind {
            KindArg::Sfg => DiscrepancyKind::Sfg,
            KindArg::MaxSfg => DiscrepancyKind::MaxSfg,
            KindArg::Ssfg => DiscrepancyKind::Ssfg { kappa: self.kappa },
            KindArg::Pssfg => DiscrepancyKind::Pssfg { kappa: self.kappa },
            KindArg::Mssfg => {
                if self.k == 0 {
                    return Err(Error::InvalidParameter("k must be >= 1".into()));
                }
                let kappas = match &self.kappas {
                    None => vec![self.kappa; self.k],
                    Some(v) if v.len() == 1 => vec![v[0]; self.k],
                    Some(v) => v.clone(),
                };
                let alphas = self
                    .alphas
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / kappas.len() as f64; kappas.len()]);
                if kappas.len() != self.k || alphas.len() != self.k {
                    return Err(Error::InvalidParameter(format!(
                        "--k {} needs {} kappas and alphas, got {} and {}",
                        self.k,
                        self.k,
                        kappas.len(),
                        alphas.len()
                    )));
                }
                DiscrepancyKind::Mssfg { kappas, alphas }
            }
        })
    }
}

fn parse_cell(cell: &str, line: u64, column: usize) -> Result<f64> {
    let text = cell.trim();
    let value: f64 = text.parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("not a number: {text:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            column,
            message: format!("non-finite value: {text:?}"),
        });
    }
    Ok(value)
}

/// Reads a point cloud from CSV text.
pub fn read_point_cloud(reader: impl Read) -> Result<PointCloud> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut width = None;
    for (index, record) in csv.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if index == 0 && record.iter().any(|c| c.trim().parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                line,
                expected,
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            data.push(parse_cell(cell, line, j + 1)?);
        }
    }
    let d = width.unwrap_or(0);
    if data.is_empty() || d == 0 {
        return Err(Error::EmptyInput);
    }
    PointCloud::from_flat(data.len() / d, d, data)
}

pub fn parse_point_cloud(path: &Path) -> Result<PointCloud> {
    read_point_cloud(File::open(path)?)
}

/// Writes one point per line with shortest round-trip decimals.
pub fn write_point_cloud(cloud: &PointCloud, out: &mut impl Write) -> Result<()> {
    for row in cloud.rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_results(records: &[Record], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "parameter", "value", "std_error"])?;
    for r in records {
        w.write_record([
            r.metric.clone(),
            r.parameter.clone(),
            format!("{}", r.value),
            format!("{}", r.std_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("json")
}

fn record(metric: &str, parameter: impl Into<String>, value: f64, std_error: f64) -> Record {
    Record {
        metric: metric.to_owned(),
        parameter: parameter.into(),
        value,
        std_error,
    }
}

fn load_pair(mu: &Path, nu: &Path) -> Result<(PointCloud, PointCloud)> {
    Ok((parse_point_cloud(mu)?, parse_point_cloud(nu)?))
}

fn run_discrepancy(args: &DiscrepancyArgs) -> Result<ExperimentResult> {
    let kind = args.kind.discrepancy()?;
    let cfg = args.common.fgw()?;
    let opt = args.common.optimizer()?;
    let (mu, nu) = load_pair(&args.mu, &args.nu)?;
    let report = kind.compute(&mu, &nu, &cfg, &opt, &mut opt.rng())?;
    let mut records = vec![record("value", kind.name(), report.value, report.std_error)];
    for t in &report.trace {
        records.push(record("trace", format!("iter={}", t.iteration), t.objective, 0.0));
    }
    for (c, loc) in report.final_slicing.locations().iter().enumerate() {
        for (j, x) in loc.as_slice().iter().enumerate() {
            records.push(record("location", format!("component={c};coord={j}"), *x, 0.0));
        }
    }
    Ok(ExperimentResult {
        records,
        metadata: json!({
            "kind": kind,
            "num_projections_used": report.num_projections_used,
        }),
    })
}

fn run_sweep(args: &SweepArgs) -> Result<ExperimentResult> {
    let cfg = args.common.fgw()?;
    let opt = args.common.optimizer()?;
    let (mu, nu) = load_pair(&args.mu, &args.nu)?;
    kappa_sweep(&mu, &nu, &cfg, &args.kappas, &opt, args.trials, &mut opt.rng())
}

fn run_convergence(args: &ConvergenceArgs) -> Result<ExperimentResult> {
    let cfg = args.common.fgw()?;
    let opt = args.common.optimizer()?;
    convergence_rate(args.d, &args.sizes, args.trials, &cfg, args.kappa, &opt, &mut opt.rng())
}

fn target_or_modes(path: &Option<PathBuf>, n: usize, rng: &mut SeededRng) -> Result<PointCloud> {
    match path {
        Some(p) => parse_point_cloud(p),
        None => Ok(gaussian_modes(&four_mode_centers(), 0.5, n, rng)),
    }
}

fn run_flow(args: &FlowArgs) -> Result<ExperimentResult> {
    let mut opt = args.common.optimizer()?;
    opt.max_iter = args.inner_iter;
    opt.validate()?;
    let flow = FlowConfig {
        discrepancy: args.kind.discrepancy()?,
        fgw: args.common.fgw()?,
        opt,
        steps: args.steps,
        step_size: args.step_size,
        snapshot_every: args.snapshot_every,
        ..FlowConfig::default()
    };
    let mut rng = flow.opt.rng();
    let target = target_or_modes(&args.target, args.particles, &mut rng)?;
    let traj = particle_flow(&target, args.particles, &flow, &mut rng)?;
    let mut records = Vec::new();
    for (step, _) in &traj.snapshots {
        if let Some(v) = traj.trace.get(*step) {
            records.push(record("trace", format!("step={step}"), *v, 0.0));
        }
    }
    if let Some(last) = traj.trace.last() {
        records.push(record("trace", format!("step={}", traj.trace.len() - 1), *last, 0.0));
    }
    if args.target.is_none() {
        for (i, s) in mode_shares(&traj.final_particles, &four_mode_centers()).iter().enumerate() {
            records.push(record("mode_share", format!("mode={i}"), *s, 0.0));
        }
    }
    if let Some(path) = &args.save_particles {
        let mut file = io::BufWriter::new(File::create(path)?);
        write_point_cloud(&traj.final_particles, &mut file)?;
        file.flush()?;
    }
    Ok(ExperimentResult {
        records,
        metadata: json!({ "kind": flow.discrepancy, "target_size": target.len() }),
    })
}

fn run_gmm(args: &GmmArgs) -> Result<ExperimentResult> {
    let mut opt = args.common.optimizer()?;
    opt.max_iter = args.inner_iter;
    opt.validate()?;
    let fit = GmmFitConfig {
        k: args.components,
        discrepancy: args.kind.discrepancy()?,
        fgw: args.common.fgw()?,
        opt,
        steps: args.steps,
        step_size: args.step_size,
        batch: args.batch,
    };
    let mut rng = fit.opt.rng();
    let target = target_or_modes(&args.target, args.target_size, &mut rng)?;
    let params = gmm_fit(&target, &fit, &mut rng)?;
    let mut records = Vec::new();
    let stds = params.std_devs();
    for c in 0..params.k() {
        records.push(record("weight", format!("component={c}"), params.weights[c], 0.0));
        for j in 0..params.dim() {
            let p = format!("component={c};coord={j}");
            records.push(record("mean", p.clone(), params.means[c][j], 0.0));
            records.push(record("std", p, stds[c][j], 0.0));
        }
    }
    Ok(ExperimentResult {
        records,
        metadata: json!({ "kind": fit.discrepancy, "target_size": target.len() }),
    })
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Discrepancy(a) => &a.common,
            Command::SweepKappa(a) => &a.common,
            Command::Convergence(a) => &a.common,
            Command::Flow(a) => &a.common,
            Command::GmmFit(a) => &a.common,
        }
    }
}

/// Executes a parsed configuration and writes its outputs.
pub fn run(config: &RunConfig) -> Result<()> {
    let result = match &config.command {
        Command::Discrepancy(a) => run_discrepancy(a),
        Command::SweepKappa(a) => run_sweep(a),
        Command::Convergence(a) => run_convergence(a),
        Command::Flow(a) => run_flow(a),
        Command::GmmFit(a) => run_gmm(a),
    }?;
    let common = config.command.common();
    match &common.output {
        Some(path) => {
            write_results(&result.records, io::BufWriter::new(File::create(path)?))?;
            let sidecar = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "seed": common.seed,
                "config": config,
                "result": result.metadata,
            });
            let mut file = io::BufWriter::new(File::create(sidecar_path(path))?);
            serde_json::to_writer_pretty(&mut file, &sidecar)?;
            writeln!(file)?;
            file.flush()?;
        }
        None => write_results(&result.records, io::stdout().lock())?,
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code: 0 on success,
/// 1 for bad input, 2 for numerical failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_cloud() {
        let c = read_point_cloud("0,0\n1,0\n".as_bytes()).unwrap();
        assert_eq!((c.len(), c.dim()), (2, 2));
        assert_eq!(c.as_flat(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn skips_header() {
        let c = read_point_cloud("x,y\n0,0\n".as_bytes()).unwrap();
        assert_eq!((c.len(), c.dim()), (1, 2));
    }

    #[test]
    fn ragged_row_names_line() {
        match read_point_cloud("0,0\n1\n".as_bytes()) {
            Err(Error::RaggedRow { line, expected, found }) => {
                assert_eq!((line, expected, found), (2, 2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_cells_name_line_and_column() {
        match read_point_cloud("1,2\n3,abc\n".as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
        match read_point_cloud("1,2\ninf,0\n".as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(read_point_cloud("".as_bytes()), Err(Error::EmptyInput)));
        assert!(matches!(read_point_cloud("x,y\n".as_bytes()), Err(Error::EmptyInput)));
    }

    #[test]
    fn write_then_read_round_trips() {
        let c = PointCloud::from_rows(&[vec![0.1, -1e-300], vec![1.0 / 3.0, 12345.678]]).unwrap();
        let mut buf = Vec::new();
        write_point_cloud(&c, &mut buf).unwrap();
        assert_eq!(read_point_cloud(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert_eq!(main_with_args(["ssfg", "convergence", "--bogus", "1"]), 1);
    }

    #[test]
    fn mixture_defaults() {
        let k = KindArgs {
            kind: KindArg::Mssfg,
            kappa: 5.0,
            kappas: None,
            k: 4,
            alphas: None,
        };
        match k.discrepancy().unwrap() {
            DiscrepancyKind::Mssfg { kappas, alphas } => {
                assert_eq!(kappas, vec![5.0; 4]);
                assert_eq!(alphas, vec![0.25; 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
