//! The `moduli` command-line front end.
//!
//! Every invocation writes one manifest next to its primary output. Exit
//! codes: 0 success, 1 I/O or runtime failure, 2 validation failure,
//! 3 numerical abort; `aai` exits with 10 + level, or 9 when no level
//! passes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use moduli_core::aai::{aai_index, assign_level, drift_runs};
use moduli_core::eval::{evaluate_battery, probe_panel_scores, EvalError};
use moduli_core::geometry::{
    canonicalize, coverage_certificate, greedy_net, lipschitz_estimate, DistanceMatrix,
    GeometryError, Metric, ModuliPoint, DEFAULT_EXACT_CAP,
};
use moduli_core::gvu::{
    kappa_estimate, kappa_from_series, preset, run_replicas, variance_analysis, GvuError,
    KappaEstimate, PresetKind, VarianceOptions,
};
use moduli_core::model::{Aggregation, Architecture, Battery, CapabilityConfig};
use moduli_core::testbed::probe_panel_v1;

use crate::exec::{Rayon, JOBS_ENV};
use crate::formats::law::{read_law, write_law, StoredLaw};
use crate::formats::spec::{
    battery_architecture, read_agent, read_battery, read_gates, read_gvu, GvuSetup,
};
use crate::formats::{from_json, read_file, write_file, FormatError, Mode};
use crate::manifest::{write_manifest, ManifestBuilder};
use crate::{fixtures, hexfloat, report};

#[derive(Debug, Parser)]
#[command(
    name = "moduli",
    version,
    about = "Battery evaluation, moduli-space geometry, AAI gating and GVU dynamics on synthetic testbeds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Root of every random stream (default 0; for `gvu`, overrides the config's seed_root)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; 0 means one per core. Results do not depend on it
    #[arg(long, short = 'j', global = true, env = JOBS_ENV)]
    pub jobs: Option<usize>,

    /// Ignore unknown fields in input files instead of rejecting them
    #[arg(long, global = true)]
    pub permissive: bool,

    /// Manifest path (default: the primary output path plus `.manifest.json`)
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate an agent's battery score and capability, writing one CSV row
    Eval(EvalArgs),
    /// Wasserstein distance between the canonical forms of two score laws
    Dist(DistArgs),
    /// Greedy k-center net over score laws
    Net(NetArgs),
    /// Check Lipschitz coverage of held-out laws by a net
    Cover(CoverArgs),
    /// AAI index and level of an agent over a directory of batteries
    Aai(AaiArgs),
    /// Generator-verifier-updater flows and one-step variance analysis
    #[command(subcommand)]
    Gvu(GvuCommand),
    /// Write the versioned fixture specs
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct CapabilityArgs {
    /// Resource penalty weight λ
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,

    /// Uncertainty penalty weight β (multiplies the CI half-width)
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,

    /// Aggregate by this lower quantile instead of the mean
    #[arg(long, value_name = "Q")]
    pub quantile: Option<f64>,
}

impl CapabilityArgs {
    fn config(&self) -> Result<CapabilityConfig, CliError> {
        if !(self.lambda >= 0.0 && self.beta >= 0.0) {
            return Err(CliError::Validation(
                "--lambda and --beta must be >= 0".into(),
            ));
        }
        let aggregation = match self.quantile {
            None => Aggregation::Mean,
            Some(q) if (0.0..=1.0).contains(&q) => Aggregation::Quantile(q),
            Some(q) => {
                return Err(CliError::Validation(format!(
                    "--quantile {q} outside [0,1]"
                )))
            }
        };
        Ok(CapabilityConfig {
            resource_penalty_lambda: self.lambda,
            uncertainty_penalty_beta: self.beta,
            aggregation,
        })
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Agent spec file
    #[arg(long, value_name = "PATH")]
    pub agent: PathBuf,

    /// Battery spec file
    #[arg(long, value_name = "PATH")]
    pub battery: PathBuf,

    /// Number of Monte Carlo samples
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    #[command(flatten)]
    pub capability: CapabilityArgs,

    /// Report CSV path
    #[arg(long, value_name = "PATH", default_value = "eval.csv")]
    pub out: PathBuf,

    /// Also write the agent's score law (JSON header plus .bin data)
    #[arg(long, value_name = "PATH")]
    pub law: Option<PathBuf>,

    /// Also write the probe-panel score law used for moduli geometry
    #[arg(long, value_name = "PATH")]
    pub panel_law: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Use the exact assignment solver (default)
    #[arg(long, conflicts_with = "sliced")]
    pub exact: bool,

    /// Use the sliced approximation with this many projections
    #[arg(long, value_name = "N")]
    pub sliced: Option<usize>,

    /// Largest sample count the exact solver accepts
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    pub cap: usize,
}

impl MetricArgs {
    fn metric(&self, seed: u64) -> Metric {
        match self.sliced {
            Some(projections) => Metric::Sliced { projections, seed },
            None => Metric::Exact { cap: self.cap },
        }
    }
}

fn metric_label(m: &Metric) -> String {
    match m {
        Metric::Exact { cap } => format!("exact(cap={cap})"),
        Metric::Sliced { projections, seed } => {
            format!("sliced(projections={projections},seed={seed})")
        }
    }
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// First score-law header
    pub law_a: PathBuf,

    /// Second score-law header
    pub law_b: PathBuf,

    #[command(flatten)]
    pub metric: MetricArgs,

    /// Distance matrix CSV path
    #[arg(long, value_name = "PATH", default_value = "dist.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    /// Number of centers
    #[arg(long)]
    pub k: usize,

    /// Target radius recorded in the report
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,

    /// Score-law headers
    #[arg(required = true)]
    pub laws: Vec<PathBuf>,

    #[command(flatten)]
    pub metric: MetricArgs,

    /// Comma-separated region vocabulary every law's region must belong to
    #[arg(long, value_delimiter = ',')]
    pub regions: Option<Vec<String>>,

    /// Net JSON path
    #[arg(long, value_name = "PATH", default_value = "net.json")]
    pub out: PathBuf,

    /// Also write the full distance matrix CSV
    #[arg(long, value_name = "PATH")]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Field {
    /// Mean of one panel member's canonical (rank) coordinate
    CanonicalMean,
    /// Mean of one panel member's raw scores
    RawMean,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// Lipschitz constant; estimated from the net's centers when omitted
    #[arg(long = "L", value_name = "L")]
    pub lipschitz: Option<f64>,

    /// Coverage radius ε
    #[arg(long)]
    pub eps: f64,

    /// Net JSON written by `net`
    #[arg(long, value_name = "PATH")]
    pub net: PathBuf,

    /// Held-out score-law headers
    #[arg(required = true)]
    pub heldout: Vec<PathBuf>,

    /// Field evaluated on each law
    #[arg(long, value_enum, default_value_t = Field::CanonicalMean)]
    pub field: Field,

    /// Panel member whose scores define the field
    #[arg(long, default_value_t = 0)]
    pub member: usize,

    /// Extra absolute tolerance added to the Lipschitz check
    #[arg(long, default_value_t = 0.0)]
    pub ci_slack: f64,

    #[command(flatten)]
    pub metric: MetricArgs,

    /// Certificate JSON path
    #[arg(long, value_name = "PATH", default_value = "cover.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AaiArgs {
    /// Agent spec file
    #[arg(long, value_name = "PATH")]
    pub agent: PathBuf,

    /// Gate table spec file
    #[arg(long, value_name = "PATH")]
    pub gates: PathBuf,

    /// Directory of battery spec files, grouped by their family
    #[arg(long, value_name = "DIR")]
    pub batteries: PathBuf,

    /// Monte Carlo samples per battery and drift
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    #[command(flatten)]
    pub capability: CapabilityArgs,

    /// Flow trace CSV supplying κ evidence for the level-4 gate (replica 0)
    #[arg(long, value_name = "PATH")]
    pub kappa_trace: Option<PathBuf>,

    /// Number of trailing trace entries in the κ window (default: all)
    #[arg(long)]
    pub kappa_window: Option<usize>,

    /// Profile JSON path
    #[arg(long, value_name = "PATH", default_value = "aai.json")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum GvuCommand {
    /// Run replicated flows and write their traces
    Run(GvuRunArgs),
    /// Predicted versus measured one-step improvement over an η grid
    Analyze(GvuAnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct GvuSource {
    /// GVU spec file
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    pub config: Option<PathBuf>,

    /// Built-in preset: rl, self-play, lm-self-improve or gan-style
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct GvuRunArgs {
    #[command(flatten)]
    pub source: GvuSource,

    /// Override the number of steps
    #[arg(long)]
    pub steps: Option<usize>,

    /// Override the number of replicas
    #[arg(long)]
    pub replicas: Option<usize>,

    /// Trailing entries used for κ (default: whole trace)
    #[arg(long)]
    pub kappa_window: Option<usize>,

    /// Trace CSV path
    #[arg(long, value_name = "PATH", default_value = "trace.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GvuAnalyzeArgs {
    #[command(flatten)]
    pub source: GvuSource,

    /// Comma-separated parameters (decimal or hex-float); default: the config's theta0
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<String>>,

    /// Log-spaced η grid as lo:hi:n
    #[arg(long, default_value = "0.001:0.1:9")]
    pub eta_grid: String,

    /// Monte Carlo replicas per η
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,

    /// Central-difference step for landscapes without analytic derivatives
    #[arg(long, default_value_t = moduli_core::gvu::DEFAULT_FD_STEP)]
    pub fd_step: f64,

    /// Report JSON path
    #[arg(long, value_name = "PATH", default_value = "analyze.json")]
    pub out: PathBuf,

    /// Curves CSV path (default: the report path with `.curves.csv`)
    #[arg(long, value_name = "PATH")]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "fixtures/v1")]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Format(e) if e.is_validation() => 2,
            CliError::Format(_) | CliError::Runtime(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GvuError> for CliError {
    fn from(e: GvuError) -> Self {
        match e {
            GvuError::NonFiniteEvaluation { .. } | GvuError::NonFiniteTheta { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Result of a successful command: exit code, text for stdout and the
/// manifest status line.
struct Done {
    code: i32,
    stdout: String,
    status: String,
}

impl Done {
    fn ok(stdout: String) -> Self {
        Done {
            code: 0,
            stdout,
            status: "ok".into(),
        }
    }
}

struct Ctx {
    mode: Mode,
    seed: u64,
    exec: Rayon,
    manifest: ManifestBuilder,
}

impl Ctx {
    fn write(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        write_file(path, contents.as_bytes())?;
        self.manifest.output(path);
        Ok(())
    }

    fn read_law(&mut self, path: &Path) -> Result<StoredLaw, CliError> {
        let law = read_law(path, self.mode)?;
        self.manifest.input(path)?;
        Ok(law)
    }
}

fn default_manifest(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn primary_output(cmd: &Command) -> PathBuf {
    match cmd {
        Command::Eval(a) => a.out.clone(),
        Command::Dist(a) => a.out.clone(),
        Command::Net(a) => a.out.clone(),
        Command::Cover(a) => a.out.clone(),
        Command::Aai(a) => a.out.clone(),
        Command::Gvu(GvuCommand::Run(a)) => a.out.clone(),
        Command::Gvu(GvuCommand::Analyze(a)) => a.out.clone(),
        Command::Fixtures(a) => a.out.join("fixtures"),
    }
}

/// Runs a parsed command line. `args` are the raw arguments after the
/// program name, recorded in the manifest. Returns the process exit code.
pub fn run(cli: Cli, args: &[String]) -> i32 {
    match execute(cli, args) {
        Ok(done) => {
            print!("{}", done.stdout);
            done.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, args: &[String]) -> Result<Done, CliError> {
    let exec = Rayon::new(cli.jobs.unwrap_or(0)).map_err(|e| CliError::Runtime(e.to_string()))?;
    let manifest_path = cli
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest(&primary_output(&cli.command)));
    let mut ctx = Ctx {
        mode: if cli.permissive {
            Mode::Permissive
        } else {
            Mode::Strict
        },
        seed: cli.seed.unwrap_or(0),
        exec,
        manifest: ManifestBuilder::start(args, cli.seed),
    };
    let done = match cli.command {
        Command::Eval(a) => cmd_eval(&mut ctx, a),
        Command::Dist(a) => cmd_dist(&mut ctx, a),
        Command::Net(a) => cmd_net(&mut ctx, a),
        Command::Cover(a) => cmd_cover(&mut ctx, a),
        Command::Aai(a) => cmd_aai(&mut ctx, a),
        Command::Gvu(GvuCommand::Run(a)) => cmd_gvu_run(&mut ctx, a, cli.seed),
        Command::Gvu(GvuCommand::Analyze(a)) => cmd_gvu_analyze(&mut ctx, a, cli.seed),
        Command::Fixtures(a) => cmd_fixtures(&mut ctx, a),
    }?;
    let m = ctx.manifest.finish(&done.status)?;
    write_manifest(&manifest_path, &m)?;
    Ok(done)
}

fn cmd_eval(ctx: &mut Ctx, a: EvalArgs) -> Result<Done, CliError> {
    let agent = read_agent(&a.agent, ctx.mode)?;
    ctx.manifest.input(&a.agent)?;
    let battery = read_battery(&a.battery, ctx.mode)?;
    ctx.manifest.input(&a.battery)?;
    let cfg = a.capability.config()?;
    let (rep, law) = evaluate_battery(&agent, &battery, a.n, ctx.seed, &cfg, &ctx.exec)?;
    let csv = report::eval_csv(std::slice::from_ref(&rep));
    ctx.write(&a.out, &csv)?;
    let region = battery.primary_family().unwrap_or("").to_string();
    if let Some(p) = &a.law {
        for f in write_law(p, &law, &region)? {
            ctx.manifest.output(&f);
        }
    }
    if let Some(p) = &a.panel_law {
        let panel = panel_for(&battery)?;
        let panel_law = probe_panel_scores(&panel, &battery, a.n, ctx.seed, &ctx.exec)?;
        for f in write_law(p, &panel_law, &region)? {
            ctx.manifest.output(&f);
        }
    }
    Ok(Done::ok(csv))
}

fn panel_for(b: &Battery) -> Result<Vec<moduli_core::model::Agent>, CliError> {
    let arch = battery_architecture(b).unwrap_or(Architecture::QuadraticField);
    let dim = b.input_dim().unwrap_or(1);
    Ok(probe_panel_v1(arch, dim))
}

fn points(laws: &[StoredLaw], vocabulary: Option<&[String]>) -> Result<Vec<ModuliPoint>, CliError> {
    let vocab: Vec<String> = match vocabulary {
        Some(v) => v.to_vec(),
        None => laws.iter().map(|l| l.region.clone()).collect(),
    };
    laws.iter()
        .map(|l| {
            ModuliPoint::new(
                canonicalize(&l.law),
                l.law.provenance.battery_id.clone(),
                l.region.clone(),
                &vocab,
            )
            .map_err(CliError::from)
        })
        .collect()
}

fn cmd_dist(ctx: &mut Ctx, a: DistArgs) -> Result<Done, CliError> {
    let laws = vec![ctx.read_law(&a.law_a)?, ctx.read_law(&a.law_b)?];
    let pts = points(&laws, None)?;
    let metric = a.metric.metric(ctx.seed);
    let dm = DistanceMatrix::compute(&pts, &metric, &ctx.exec)?;
    let csv = report::distance_csv(&dm);
    ctx.write(&a.out, &csv)?;
    Ok(Done::ok(format!(
        "{}\n",
        crate::formats::fmt_f64(dm.get(0, 1))
    )))
}

fn cmd_net(ctx: &mut Ctx, a: NetArgs) -> Result<Done, CliError> {
    let laws = a
        .laws
        .iter()
        .map(|p| ctx.read_law(p))
        .collect::<Result<Vec<_>, _>>()?;
    let pts = points(&laws, a.regions.as_deref())?;
    let metric = a.metric.metric(ctx.seed);
    let dm = DistanceMatrix::compute(&pts, &metric, &ctx.exec)?;
    let net = greedy_net(&dm, a.k, a.eps)?;
    let paths: Vec<String> = a
        .laws
        .iter()
        .map(|p| p.to_string_lossy().into_owned())
        .collect();
    let file = report::NetFile::new(&net, a.k, metric_label(&metric), &paths);
    ctx.write(&a.out, &crate::formats::to_json(&file))?;
    if let Some(m) = &a.matrix {
        ctx.write(m, &report::distance_csv(&dm))?;
    }
    Ok(Done::ok(format!(
        "radius {} with centers {}\n",
        crate::formats::fmt_f64(net.radius),
        net.centers.join(",")
    )))
}

fn field_value(law: &StoredLaw, field: Field, member: usize) -> Result<f64, CliError> {
    if member >= law.law.dim {
        return Err(CliError::Validation(format!(
            "--member {member} but law `{}` has {} panel members",
            law.law.provenance.battery_id, law.law.dim
        )));
    }
    Ok(match field {
        Field::CanonicalMean => canonicalize(&law.law).coordinate_mean(member),
        Field::RawMean => {
            let col = law.law.column(member);
            col.iter().sum::<f64>() / col.len() as f64
        }
    })
}

fn cmd_cover(ctx: &mut Ctx, a: CoverArgs) -> Result<Done, CliError> {
    let net: report::NetFile = from_json(&read_file(&a.net)?, &a.net, ctx.mode)?;
    ctx.manifest.input(&a.net)?;
    if net.schema != report::NET_SCHEMA {
        return Err(FormatError::invalid(
            &a.net,
            "schema",
            format!("expected `{}`", report::NET_SCHEMA),
        )
        .into());
    }
    let base = a.net.parent().unwrap_or_else(|| Path::new(""));
    let center_laws = net
        .center_laws
        .iter()
        .map(|p| {
            let path = Path::new(p);
            if path.exists() {
                ctx.read_law(path)
            } else {
                ctx.read_law(&base.join(path))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let held = a
        .heldout
        .iter()
        .map(|p| ctx.read_law(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut all = center_laws.clone();
    all.extend(held.iter().cloned());
    let pts = points(&all, None)?;
    let values = all
        .iter()
        .map(|l| field_value(l, a.field, a.member))
        .collect::<Result<Vec<_>, _>>()?;
    let metric = a.metric.metric(ctx.seed);
    let nc = center_laws.len();
    let lipschitz = match a.lipschitz {
        Some(l) => l,
        None if nc >= 2 => {
            let dm = DistanceMatrix::compute(&pts[..nc], &metric, &ctx.exec)?;
            lipschitz_estimate(&values[..nc], &dm)?.l_hat
        }
        None => {
            return Err(CliError::Validation(
                "--L is required when the net has fewer than two centers".into(),
            ))
        }
    };
    let centers: Vec<(ModuliPoint, f64)> = pts[..nc]
        .iter()
        .cloned()
        .zip(values[..nc].iter().copied())
        .collect();
    let heldout: Vec<(ModuliPoint, f64)> = pts[nc..]
        .iter()
        .cloned()
        .zip(values[nc..].iter().copied())
        .collect();
    let cert = coverage_certificate(&centers, &heldout, lipschitz, a.eps, a.ci_slack, &metric)?;
    let field = format!(
        "{}(member {})",
        match a.field {
            Field::CanonicalMean => "canonical-mean",
            Field::RawMean => "raw-mean",
        },
        a.member
    );
    ctx.write(
        &a.out,
        &report::coverage_json(&cert, lipschitz, a.eps, a.ci_slack, field),
    )?;
    let verdict = if cert.pass { "pass" } else { "fail" };
    let mut out = format!(
        "coverage {verdict} (L = {})\n",
        crate::formats::fmt_f64(lipschitz)
    );
    if let Some(w) = &cert.worst_offender {
        out.push_str(&format!("worst offender {w}\n"));
    }
    Ok(Done::ok(out))
}

fn battery_dir(
    dir: &Path,
    mode: Mode,
    ctx: &mut Ctx,
) -> Result<BTreeMap<String, Vec<Battery>>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| FormatError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Validation(format!(
            "no battery files in {}",
            dir.display()
        )));
    }
    let mut by_family: BTreeMap<String, Vec<Battery>> = BTreeMap::new();
    for f in files {
        let b = read_battery(&f, mode)?;
        ctx.manifest.input(&f)?;
        let family = b
            .primary_family()
            .ok_or_else(|| CliError::Validation(format!("{}: battery has no family", f.display())))?
            .to_string();
        by_family.entry(family).or_default().push(b);
    }
    Ok(by_family)
}

fn kappa_from_trace(path: &Path, window: Option<usize>) -> Result<KappaEstimate, CliError> {
    let text = read_file(path)?;
    let series =
        report::parse_trace_csv(&text).map_err(|e| FormatError::invalid(path, "trace", e))?;
    let (_, ts, fs) = series
        .into_iter()
        .find(|(r, _, _)| *r == 0)
        .ok_or_else(|| FormatError::invalid(path, "trace", "no replica 0"))?;
    let w = window.unwrap_or(ts.len());
    if w < 2 || w > ts.len() {
        return Err(CliError::Validation(format!(
            "κ window {w} needs 2..={} entries",
            ts.len()
        )));
    }
    Ok(kappa_from_series(&ts[ts.len() - w..], &fs[fs.len() - w..])?)
}

fn cmd_aai(ctx: &mut Ctx, a: AaiArgs) -> Result<Done, CliError> {
    let agent = read_agent(&a.agent, ctx.mode)?;
    ctx.manifest.input(&a.agent)?;
    let gates = read_gates(&a.gates, ctx.mode)?;
    ctx.manifest.input(&a.gates)?;
    let by_family = battery_dir(&a.batteries, ctx.mode, ctx)?;
    let kappa = match &a.kappa_trace {
        Some(p) => {
            let k = kappa_from_trace(p, a.kappa_window)?;
            ctx.manifest.input(p)?;
            Some(k)
        }
        None => None,
    };
    let cfg = a.capability.config()?;
    let mut profile = aai_index(&agent, &by_family, &cfg, a.n, ctx.seed, &ctx.exec)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let runs = drift_runs(&agent, &by_family, &cfg, a.n, ctx.seed, &ctx.exec)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let assignment = assign_level(&mut profile, &gates, &runs, kappa.as_ref());
    ctx.write(
        &a.out,
        &report::profile_json(&profile, &gates, kappa.as_ref()),
    )?;
    let code = assignment.level.map_or(9, |l| 10 + i32::from(l));
    Ok(Done {
        code,
        stdout: report::profile_table(&profile),
        status: match assignment.level {
            Some(l) => format!("ok: level {l}"),
            None => "ok: no level".into(),
        },
    })
}

fn load_gvu(ctx: &mut Ctx, src: &GvuSource, seed: Option<u64>) -> Result<GvuSetup, CliError> {
    let mut setup = match (&src.config, &src.preset) {
        (Some(p), _) => {
            let s = read_gvu(p, ctx.mode)?;
            ctx.manifest.input(p)?;
            s
        }
        (None, Some(name)) => GvuSetup::from(preset(PresetKind::from_id(name)?, seed.unwrap_or(0))),
        (None, None) => {
            return Err(CliError::Validation(
                "one of --config or --preset is required".into(),
            ))
        }
    };
    if let Some(s) = seed {
        setup.config.seed_root = s;
    }
    Ok(setup)
}

fn cmd_gvu_run(ctx: &mut Ctx, a: GvuRunArgs, seed: Option<u64>) -> Result<Done, CliError> {
    let mut setup = load_gvu(ctx, &a.source, seed)?;
    if let Some(s) = a.steps {
        setup.config.steps = s;
    }
    if let Some(r) = a.replicas {
        setup.config.replicas = r;
    }
    let traces = run_replicas(&setup.theta0, &setup.config, &setup.landscape, &ctx.exec)?;
    ctx.write(&a.out, &report::trace_csv(&traces))?;
    let rows: Vec<_> = traces
        .iter()
        .map(|t| {
            let w = a.kappa_window.unwrap_or(t.entries.len());
            (
                t.replica,
                t.aborted.clone(),
                kappa_estimate(t, w).map_err(|e| e.to_string()),
            )
        })
        .collect();
    let stdout = report::kappa_table(&rows);
    let aborted = traces.iter().filter(|t| t.aborted.is_some()).count();
    if aborted > 0 {
        eprintln!(
            "error: {aborted} replica(s) aborted on non-finite parameters; partial traces written"
        );
        return Ok(Done {
            code: 3,
            stdout,
            status: format!("numerical abort in {aborted} replica(s)"),
        });
    }
    Ok(Done::ok(stdout))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || {
        CliError::Validation(format!(
            "--eta-grid `{s}` must be lo:hi:n with 0 < lo <= hi and n >= 1"
        ))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite() && n >= 1) {
        return Err(bad());
    }
    Ok(VarianceOptions::log_grid(lo, hi, n))
}

fn curves_path(out: &Path) -> PathBuf {
    out.with_extension("curves.csv")
}

fn cmd_gvu_analyze(ctx: &mut Ctx, a: GvuAnalyzeArgs, seed: Option<u64>) -> Result<Done, CliError> {
    let mut setup = load_gvu(ctx, &a.source, seed)?;
    let theta = match &a.theta {
        Some(xs) => xs
            .iter()
            .map(|x| hexfloat::parse(x).map_err(|e| CliError::Validation(format!("--theta {e}"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => setup.theta0.clone(),
    };
    let opts = VarianceOptions {
        eta_grid: parse_grid(&a.eta_grid)?,
        replicas: a.replicas,
        fd_step: a.fd_step,
    };
    let r = variance_analysis(
        &theta,
        &setup.config,
        &opts,
        &mut setup.landscape,
        &ctx.exec,
    )?;
    ctx.write(&a.out, &report::variance_json(&r))?;
    let curves = a.curves.clone().unwrap_or_else(|| curves_path(&a.out));
    ctx.write(&curves, &report::curves_csv(&r))?;
    Ok(Done::ok(format!(
        "eta_star_hat {} condition_holds {} taylor_condition_holds {}\n",
        crate::formats::fmt_f64(r.eta_star_hat),
        r.condition_holds,
        r.taylor_condition_holds
    )))
}

fn cmd_fixtures(ctx: &mut Ctx, a: FixturesArgs) -> Result<Done, CliError> {
    let set = fixtures::fixture_set();
    for (rel, text) in &set {
        ctx.write(&a.out.join(rel), text)?;
    }
    Ok(Done::ok(format!(
        "wrote {} fixture files ({}) to {}\n",
        set.len(),
        fixtures::VERSION,
        a.out.display()
    )))
}
