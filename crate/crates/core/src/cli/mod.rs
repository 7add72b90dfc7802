//! Command-line front end: `certify`, `optimize`, `simulate`, `verify`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 infeasible
//! certificate (or, for `verify`, a violated bound).

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::certificate::{certify_with_grid, Certificate, Gate, LyapunovWeights};
use crate::discretize::{build_system_with, DiscreteSystem, SystemOptions};
use crate::error::{Error, Result};
use crate::params::BeamParameters;
use crate::simulate::{check_bound, integrate_with, sample_initial_condition, BoundReport};
use crate::weight_search::{maximize_kappa2, SearchOutcome};

pub use config::{
    parse_pi_expr, BeamSpec, DiscretizationSpec, FieldSpec, IcSpec, InitialConditionSpec, OutputSpec,
    RunConfig, Scalar,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "timo", version, about = "Decay certificates for damped Timoshenko beams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the weights given in the config.
    Certify(RunOptions),
    /// Search for weights maximising the certified rate.
    Optimize(RunOptions),
    /// Integrate the discrete beam and compare against the bound.
    Simulate(RunOptions),
    /// Certify, simulate and check the bound; fails unless all succeed.
    Verify(RunOptions),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunOptions {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the weight search, overriding `search.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the dense J, R, Q matrices to this path.
    #[arg(long)]
    pub dump_system: Option<PathBuf>,
    /// Grid intervals for the coefficient infima, overriding `grid`.
    #[arg(long)]
    pub grid: Option<usize>,
}

/// Parses `args` (program name first) and runs the chosen subcommand.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let (opts, cmd): (&RunOptions, fn(&RunConfig, &RunOptions) -> i32) = match &cli.command {
        Command::Certify(o) => (o, cmd_certify),
        Command::Optimize(o) => (o, cmd_optimize),
        Command::Simulate(o) => (o, cmd_simulate),
        Command::Verify(o) => (o, cmd_verify),
    };
    match load_config(&opts.config) {
        Ok(cfg) => cmd(&cfg, opts),
        Err(e) => usage_error(&e),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn usage_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

/// Fully resolved inputs shared by every subcommand.
struct Prepared {
    config: RunConfig,
    params: BeamParameters,
    out_dir: PathBuf,
}

fn prepare(config: &RunConfig, opts: &RunOptions) -> Result<Prepared> {
    let mut config = config.clone();
    if let Some(g) = opts.grid {
        config.grid = g;
    }
    if let Some(seed) = opts.seed {
        config.search.get_or_insert_with(Default::default).seed = seed;
    }
    config.validate()?;
    let params = config.beam.to_parameters()?;
    let out_dir = opts.out.clone().unwrap_or_else(|| config.output.directory.clone());
    fs::create_dir_all(&out_dir)
        .map_err(|e| Error::Precondition(format!("cannot create {}: {e}", out_dir.display())))?;
    Ok(Prepared {
        config,
        params,
        out_dir,
    })
}

impl Prepared {
    /// Parameters in coordinates with the clamped end at zero.
    fn certified_params(&self) -> BeamParameters {
        self.params.oriented(self.config.beam.layout)
    }

    fn certify(&self, weights: &LyapunovWeights) -> Certificate {
        certify_with_grid(weights, &self.certified_params(), self.config.grid)
    }

    fn search(&self) -> Result<SearchOutcome> {
        maximize_kappa2(&self.certified_params(), &self.config.search_config())
    }

    fn system(&self) -> Result<DiscreteSystem> {
        build_system_with(
            &self.params,
            self.config.discretization.n_elements,
            SystemOptions {
                layout: self.config.beam.layout,
                ..Default::default()
            },
        )
    }

    fn dump_system(&self, sys: &DiscreteSystem, opts: &RunOptions) -> Result<()> {
        let mut targets = Vec::new();
        if let Some(p) = &opts.dump_system {
            targets.push(p.clone());
        }
        if self.config.output.dump_system {
            targets.push(self.out_dir.join("system.txt"));
        }
        for path in targets {
            write_with(&path, |w| sys.write_dense(w))?;
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<String> {
        let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
        let path = self.out_dir.join(name);
        fs::write(&path, &text).map_err(|e| io_error(&path, e))?;
        Ok(text)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Precondition(format!("cannot write {}: {e}", path.display()))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(path, e))?;
    }
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| io_error(path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| io_error(path, e))
}

/// Contents of `certificate.json`.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub weights: LyapunovWeights,
    pub gate: Gate,
    pub feasible: bool,
    /// Rate under `gate`, absent when infeasible.
    pub decay_rate: Option<f64>,
    pub blocking_constraint: Option<String>,
    /// Sign of `ess inf c1`, reported separately because the default gate
    /// ignores it.
    pub c1_sign: &'static str,
    pub certificate: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub seed_weights: Option<LyapunovWeights>,
    pub seed_kappa2: Option<f64>,
    pub evaluations: usize,
    pub random_seed: u64,
}

impl CertificateReport {
    pub fn new(weights: LyapunovWeights, certificate: Certificate, gate: Gate) -> Self {
        let c1 = certificate.c_essinf[0];
        CertificateReport {
            weights,
            gate,
            feasible: certificate.is_feasible(gate),
            decay_rate: certificate.decay_rate(gate),
            blocking_constraint: certificate.blocking_constraint(gate).map(|c| c.to_string()),
            c1_sign: if c1 > 0.0 {
                "positive"
            } else if c1 < 0.0 {
                "negative"
            } else {
                "zero"
            },
            certificate,
            search: None,
        }
    }

    fn from_search(outcome: &SearchOutcome, random_seed: u64) -> Self {
        let mut report = Self::new(outcome.weights, outcome.certificate.clone(), outcome.gate);
        report.search = Some(SearchSummary {
            seed_weights: outcome.seed.map(|(w, _)| w),
            seed_kappa2: outcome.seed.map(|(_, r)| r),
            evaluations: outcome.trace.len(),
            random_seed,
        });
        report
    }
}

/// Contents of `report.json` written by `simulate` and `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub n_elements: usize,
    pub states: usize,
    pub dt: f64,
    pub t_end: f64,
    pub spectral_abscissa: f64,
    pub initial_lyapunov: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub bound: BoundReport,
    pub certificate: CertificateReport,
    pub passed: bool,
}

fn missing_weights(command: &str) -> Error {
    Error::Precondition(format!(
        "config is missing key `weights`, required by `{command}`"
    ))
}

/// Weights from the config, or from a search when `search` is given.
/// Exactly one of the two must be present.
fn resolve_weights(p: &Prepared, command: &str) -> Result<(LyapunovWeights, Option<SearchOutcome>)> {
    match (&p.config.weights, &p.config.search) {
        (Some(w), None) => Ok((*w, None)),
        (None, Some(_)) => {
            let outcome = p.search()?;
            Ok((outcome.weights, Some(outcome)))
        }
        (Some(_), Some(_)) => Err(Error::Precondition(format!(
            "`{command}` needs exactly one of `weights` and `search`, both are present"
        ))),
        (None, None) => Err(Error::Precondition(format!(
            "config is missing key `weights` (or `search`), required by `{command}`"
        ))),
    }
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::FeasibilityNotFound { .. } => {
            eprintln!("error: {e}");
            EXIT_INFEASIBLE
        }
        _ => usage_error(e),
    }
}

pub fn cmd_certify(config: &RunConfig, opts: &RunOptions) -> i32 {
    let result = (|| {
        let p = prepare(config, opts)?;
        let weights = p.config.weights.ok_or_else(|| missing_weights("certify"))?;
        if opts.dump_system.is_some() || p.config.output.dump_system {
            p.dump_system(&p.system()?, opts)?;
        }
        let report = CertificateReport::new(weights, p.certify(&weights), p.config.gate);
        let text = p.write_json("certificate.json", &report)?;
        print!("{text}");
        Ok(report.feasible)
    })();
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_INFEASIBLE,
        Err(e) => exit_for(&e),
    }
}

pub fn cmd_optimize(config: &RunConfig, opts: &RunOptions) -> i32 {
    let result = (|| {
        let p = prepare(config, opts)?;
        if opts.dump_system.is_some() || p.config.output.dump_system {
            p.dump_system(&p.system()?, opts)?;
        }
        let search = p.config.search_config();
        let outcome = p.search()?;
        write_with(&p.out_dir.join("search_trace.csv"), |w| outcome.write_trace_csv(w))?;
        let report = CertificateReport::from_search(&outcome, search.seed);
        let text = p.write_json("certificate.json", &report)?;
        print!("{text}");
        Ok(())
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => exit_for(&e),
    }
}

/// Shared body of `simulate` and `verify`.
fn simulate_and_check(p: &Prepared, opts: &RunOptions, command: &str) -> Result<SimulationReport> {
    let (weights, outcome) = resolve_weights(p, command)?;
    let mut cert_report = match &outcome {
        Some(o) => CertificateReport::from_search(o, p.config.search_config().seed),
        None => CertificateReport::new(weights, p.certify(&weights), p.config.gate),
    };
    if let Some(o) = &outcome {
        write_with(&p.out_dir.join("search_trace.csv"), |w| o.write_trace_csv(w))?;
    }

    let sys = p.system()?;
    p.dump_system(&sys, opts)?;
    let ic = p
        .config
        .initial_condition
        .to_initial_condition(p.params.length)?;
    let z0 = sample_initial_condition(&ic, &sys);
    let d = p.config.discretization;
    let mut traj = integrate_with(&sys, &z0, d.integration_options())?;
    traj.annotate(&sys, &weights, &cert_report.certificate, p.config.gate)?;
    let bound = check_bound(&traj, &cert_report.certificate, p.config.gate);
    write_with(&p.out_dir.join("trajectory.csv"), |w| traj.write_csv(w))?;

    cert_report.gate = p.config.gate;
    let passed = cert_report.feasible && bound.passed;
    Ok(SimulationReport {
        n_elements: sys.n_elements(),
        states: sys.dim(),
        dt: d.dt,
        t_end: d.t_end,
        spectral_abscissa: sys.spectral_abscissa()?,
        initial_lyapunov: traj.lyapunov.first().copied().unwrap_or(0.0),
        initial_norm: traj.norm_z.first().copied().unwrap_or(0.0),
        final_norm: traj.norm_z.last().copied().unwrap_or(0.0),
        bound,
        certificate: cert_report,
        passed,
    })
}

pub fn cmd_simulate(config: &RunConfig, opts: &RunOptions) -> i32 {
    let result = (|| {
        let p = prepare(config, opts)?;
        let report = simulate_and_check(&p, opts, "simulate")?;
        p.write_json("report.json", &report)?;
        print_summary(&report);
        Ok(report.certificate.feasible)
    })();
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_INFEASIBLE,
        Err(e) => exit_for(&e),
    }
}

pub fn cmd_verify(config: &RunConfig, opts: &RunOptions) -> i32 {
    let result = (|| {
        let p = prepare(config, opts)?;
        let report = simulate_and_check(&p, opts, "verify")?;
        p.write_json("certificate.json", &report.certificate)?;
        p.write_json("report.json", &report)?;
        print_summary(&report);
        Ok(report.passed)
    })();
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_INFEASIBLE,
        Err(e) => exit_for(&e),
    }
}

fn print_summary(r: &SimulationReport) {
    let c = &r.certificate;
    println!("states: {}", r.states);
    println!("feasible ({:?}): {}", c.gate, c.feasible);
    if let Some(rate) = c.decay_rate {
        println!("kappa1 = {:.6}, eta = {:.6}, kappa2 = {:.6}", c.certificate.kappa1, c.certificate.eta, rate);
    } else if let Some(b) = &c.blocking_constraint {
        println!("blocking constraint: {b}");
    }
    println!("spectral abscissa: {:.6e}", r.spectral_abscissa);
    println!(
        "bound: {} ({} samples, {} violations, max ratio {:.6})",
        if r.bound.passed { "holds" } else { "violated" },
        r.bound.samples,
        r.bound.violations,
        r.bound.max_ratio
    );
    if let Some(f) = &r.bound.failure {
        println!("bound check failure: {f}");
    }
}
