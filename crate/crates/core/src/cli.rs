//! Command-line front end: argument and config-file parsing, experiment
//! orchestration, and the tabular output format.
//!
//! Every output starts with `#` header lines that echo the effective
//! arguments and all resolved parameters, followed by comma-separated rows.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::correlations::{g_mn, random_separable_mixture};
use crate::detection::{
    phase_scan, pulses_for_floor_counts, DetectorModel, ScanConfig, ScanResult,
};
use crate::error::CphError;
use crate::fock::CutoffPolicy;
use crate::holes::{reduce_phase, solve_holes, HoleSolution, HoleSpec};
use crate::optics::{interfere, joint_distribution};

const SUBCOMMANDS: [&str; 5] = [
    "solve",
    "scan",
    "correlations",
    "reproduce-fig2",
    "reproduce-fig3",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error(transparent)]
    Run(#[from] CphError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "cph",
    version,
    about = "Correlated multiphoton hole simulator",
    args_override_self = true
)]
pub struct Cli {
    /// File of `key = value` lines mirroring the long flags; flags given on
    /// the command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Find the (gamma, phi) points that cancel an (N1, N2) coincidence.
    Solve(SolveArgs),
    /// Simulate a coincidence-versus-phase scan.
    Scan(ScanArgs),
    /// Correlation functions at the holes and a classical-mixture check.
    Correlations(CorrelationArgs),
    /// The (2,2) hole scan with gamma^2 = 3.
    ReproduceFig2(FigureArgs),
    /// The (5,0) hole scan with gamma = 15/(5 - sqrt 10).
    ReproduceFig3(FigureArgs),
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[arg(long)]
    pub n1: usize,
    #[arg(long)]
    pub n2: usize,
    /// Squeeze parameter of the down-converted input.
    #[arg(long, default_value_t = HoleSpec::DEFAULT_R)]
    pub r: f64,
    /// Discard holes with a larger amplitude ratio.
    #[arg(long, default_value_t = HoleSpec::DEFAULT_GAMMA_MAX)]
    pub gamma_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorKind {
    /// Arrays of on/off detectors behind a balanced split.
    Multiplexed,
    /// Photon-number-resolving detectors.
    Resolving,
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    /// Detectors in the mode-1 array.
    #[arg(long, default_value_t = 2)]
    pub k1: usize,
    /// Detectors in the mode-2 array.
    #[arg(long, default_value_t = 2)]
    pub k2: usize,
    /// Overall transmission for both modes.
    #[arg(long, default_value_t = 0.125)]
    pub eta: f64,
    /// Mode-1 transmission (overrides --eta).
    #[arg(long)]
    pub eta1: Option<f64>,
    /// Mode-2 transmission (overrides --eta).
    #[arg(long)]
    pub eta2: Option<f64>,
    #[arg(long, value_enum, default_value_t = DetectorKind::Multiplexed)]
    pub detector: DetectorKind,
    /// Do not post-select on mode 2.
    #[arg(long)]
    pub unmonitored2: bool,
}

impl DetectorArgs {
    fn models(&self) -> Result<(DetectorModel, DetectorModel), CphError> {
        let build = |k, eta| match self.detector {
            DetectorKind::Multiplexed => DetectorModel::multiplexed(k, eta),
            DetectorKind::Resolving => DetectorModel::number_resolving(eta),
        };
        let first = build(self.k1, self.eta1.unwrap_or(self.eta))?;
        let second = if self.unmonitored2 {
            DetectorModel::Unmonitored
        } else {
            build(self.k2, self.eta2.unwrap_or(self.eta))?
        };
        Ok((first, second))
    }
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    /// Pump pulses used for the shot-noise significance.
    #[arg(long, conflicts_with = "floor_counts")]
    pub pulses: Option<u64>,
    /// Choose the pulse count so that the classical floor at the deepest
    /// point yields this many expected counts.
    #[arg(long)]
    pub floor_counts: Option<f64>,
    /// Truncation tolerance on discarded probability.
    #[arg(long, default_value_t = 1e-12)]
    pub tail_epsilon: f64,
    /// Largest Fock cutoff per mode.
    #[arg(long, default_value_t = 128)]
    pub hard_max: usize,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 2)]
    pub n1: usize,
    #[arg(long, default_value_t = 2)]
    pub n2: usize,
    /// Amplitude ratio |alpha|^2 / r.
    #[arg(long, conflicts_with_all = ["gamma_sq", "alpha"])]
    pub gamma: Option<f64>,
    /// Squared amplitude ratio (default 3).
    #[arg(long, conflicts_with = "alpha")]
    pub gamma_sq: Option<f64>,
    /// Coherent amplitude |alpha|; sets gamma = alpha^2 / r.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub r: f64,
    /// Phase samples.
    #[arg(long, default_value_t = 128)]
    pub points: usize,
    /// Scanned range in units of pi, starting at 0.
    #[arg(long, default_value_t = 2.0)]
    pub span: f64,
    #[command(flatten)]
    pub detectors: DetectorArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct CorrelationArgs {
    /// Mode-1 order; with --n2 restricts the report to one hole family.
    #[arg(long, requires = "n2")]
    pub n1: Option<usize>,
    #[arg(long, requires = "n1")]
    pub n2: Option<usize>,
    #[arg(long, default_value_t = HoleSpec::DEFAULT_R)]
    pub r: f64,
    /// Random classical states to test against the bound.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Poissonian components per mode, at most.
    #[arg(long, default_value_t = 4)]
    pub max_components: usize,
    /// Largest Poissonian mean in a random mixture.
    #[arg(long, default_value_t = 2.0)]
    pub max_mean: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct FigureArgs {
    #[arg(long, default_value_t = 0.2)]
    pub r: f64,
    #[arg(long, default_value_t = 0.125)]
    pub eta: f64,
    #[arg(long, default_value_t = 128)]
    pub points: usize,
    /// Detectors in the mode-1 array (preset default).
    #[arg(long)]
    pub k1: Option<usize>,
    /// Detectors in the mode-2 array (preset default).
    #[arg(long)]
    pub k2: Option<usize>,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

/// Parsed command line together with the effective argument list.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub cli: Cli,
    /// Arguments after config-file expansion, without the program name.
    pub args: Vec<String>,
}

impl RunConfig {
    /// Parses `args` (program name first), expanding any `--config` file.
    pub fn from_args<I, S>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let raw: Vec<String> = args.into_iter().map(Into::into).collect();
        let expanded = expand_config(&raw)?;
        let cli = Cli::try_parse_from(&expanded)?;
        Ok(Self {
            cli,
            args: expanded.into_iter().skip(1).collect(),
        })
    }
}

fn config_path(args: &[String]) -> Option<String> {
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        if a == "--config" {
            return iter.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Turns `key = value` lines into long flags. `true` and `false` switch
/// boolean flags; `command` names the subcommand.
pub fn parse_config_text(text: &str) -> Result<(Option<String>, Vec<String>), CphError> {
    let mut command = None;
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CphError::InvalidConfig(format!(
                "config line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(CphError::InvalidConfig(format!(
                "config line {}: invalid key `{key}`",
                lineno + 1
            )));
        }
        match (key.as_str(), value) {
            ("command", v) => command = Some(v.to_string()),
            ("config", _) => {
                return Err(CphError::InvalidConfig(format!(
                    "config line {}: config files cannot include other config files",
                    lineno + 1
                )))
            }
            (_, "true") => flags.push(format!("--{key}")),
            (_, "false") => {}
            (_, v) => {
                flags.push(format!("--{key}"));
                flags.push(v.to_string());
            }
        }
    }
    Ok((command, flags))
}

fn expand_config(args: &[String]) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(args) else {
        return Ok(args.to_vec());
    };
    let text = fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: PathBuf::from(&path),
        source,
    })?;
    let (file_command, file_flags) = parse_config_text(&text)?;
    let position = args
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map(|i| i + 1);
    let mut out = vec![args.first().cloned().unwrap_or_else(|| "cph".into())];
    let rest: Vec<String> = match position {
        Some(i) => {
            out.push(args[i].clone());
            args[1..i].iter().chain(&args[i + 1..]).cloned().collect()
        }
        None => {
            let command = file_command.ok_or_else(|| {
                CphError::InvalidConfig(format!(
                    "no subcommand given on the command line or as `command = ...` in {path}"
                ))
            })?;
            out.push(command);
            args[1..].to_vec()
        }
    };
    out.extend(file_flags);
    out.extend(rest);
    Ok(out)
}

/// `(2,2)` scan at `γ² = 3` with two-detector arrays on both modes.
pub fn fig2_preset(r: f64, eta: f64, points: usize) -> Result<ScanConfig, CphError> {
    Ok(ScanConfig {
        n1: 2,
        n2: 2,
        gamma: 3f64.sqrt(),
        r,
        detectors1: DetectorModel::multiplexed(2, eta)?,
        detectors2: DetectorModel::multiplexed(2, eta)?,
        phi_grid: ScanConfig::uniform_grid(points, 2.0 * PI),
        pulses: None,
        policy: CutoffPolicy::default(),
    })
}

/// `(5,0)` scan at `γ = 15/(5 − √10)`: five detectors on mode 1, mode 2
/// unmonitored.
pub fn fig3_preset(r: f64, eta: f64, points: usize) -> Result<ScanConfig, CphError> {
    Ok(ScanConfig {
        n1: 5,
        n2: 0,
        gamma: 15.0 / (5.0 - 10f64.sqrt()),
        r,
        detectors1: DetectorModel::multiplexed(5, eta)?,
        detectors2: DetectorModel::Unmonitored,
        phi_grid: ScanConfig::uniform_grid(points, 2.0 * PI),
        pulses: None,
        policy: CutoffPolicy::default(),
    })
}

/// Runs the configured command and returns the output text.
pub fn run(config: &RunConfig) -> Result<String, CliError> {
    let mut out = String::new();
    let name = match &config.cli.command {
        Command::Solve(_) => "solve",
        Command::Scan(_) => "scan",
        Command::Correlations(_) => "correlations",
        Command::ReproduceFig2(_) => "reproduce-fig2",
        Command::ReproduceFig3(_) => "reproduce-fig3",
    };
    line(&mut out, format!("cph {name}"));
    line(&mut out, format!("args: {}", config.args.join(" ")));
    match &config.cli.command {
        Command::Solve(a) => solve(&mut out, a)?,
        Command::Scan(a) => scan(&mut out, a)?,
        Command::Correlations(a) => correlations(&mut out, a)?,
        Command::ReproduceFig2(a) => figure(&mut out, a, fig2_preset)?,
        Command::ReproduceFig3(a) => figure(&mut out, a, fig3_preset)?,
    }
    Ok(out)
}

/// Runs the command and writes to `--output` or stdout.
pub fn run_and_write(config: &RunConfig) -> Result<(), CliError> {
    let text = run(config)?;
    match &config.cli.output {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn line(out: &mut String, text: impl AsRef<str>) {
    out.push_str("# ");
    out.push_str(text.as_ref());
    out.push('\n');
}

fn param(out: &mut String, key: &str, value: impl std::fmt::Display) {
    line(out, format!("{key} = {value}"));
}

fn describe(model: &DetectorModel) -> String {
    match model {
        DetectorModel::Multiplexed(a) => format!("multiplexed k={} eta={}", a.k(), a.eta()),
        DetectorModel::NumberResolving { eta } => format!("resolving eta={eta}"),
        DetectorModel::Unmonitored => "unmonitored".into(),
    }
}

fn policy(numeric: &NumericArgs) -> Result<CutoffPolicy, CphError> {
    CutoffPolicy::new(numeric.tail_epsilon, numeric.hard_max)
}

fn solve(out: &mut String, a: &SolveArgs) -> Result<(), CphError> {
    let spec = HoleSpec::new(a.n1, a.n2, a.r)?.with_gamma_max(a.gamma_max)?;
    param(out, "n1", a.n1);
    param(out, "n2", a.n2);
    param(out, "r", a.r);
    param(out, "gamma_max", a.gamma_max);
    let holes = solve_holes(&spec)?;
    param(out, "solutions", holes.len());
    out.push_str(
        "root_index,gamma,gamma_sq,phi,phi_plus_pi,phi_over_pi,gamma_exact,phi_exact,relative_residual\n",
    );
    for h in &holes {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:e},{:e},{:.3e}",
            h.root_index,
            h.gamma,
            h.gamma_squared(),
            h.phi,
            h.phi + PI,
            h.phi / PI,
            h.gamma,
            h.phi,
            h.relative_residual()
        )
        .unwrap();
    }
    Ok(())
}

fn scan(out: &mut String, a: &ScanArgs) -> Result<(), CphError> {
    let gamma = match (a.gamma, a.gamma_sq, a.alpha) {
        (Some(g), _, _) => g,
        (_, Some(g2), _) => g2.sqrt(),
        (_, _, Some(alpha)) => alpha * alpha / a.r,
        _ => 3f64.sqrt(),
    };
    if !(a.span > 0.0 && a.span.is_finite()) {
        return Err(CphError::InvalidParameter {
            name: "span",
            value: a.span,
            reason: "must be a positive multiple of pi",
        });
    }
    let (detectors1, detectors2) = a.detectors.models()?;
    let config = ScanConfig {
        n1: a.n1,
        n2: a.n2,
        gamma,
        r: a.r,
        detectors1,
        detectors2,
        phi_grid: ScanConfig::uniform_grid(a.points, a.span * PI),
        pulses: a.numeric.pulses,
        policy: policy(&a.numeric)?,
    };
    scan_output(out, &config, &a.numeric, a.span)
}

fn figure(
    out: &mut String,
    a: &FigureArgs,
    preset: fn(f64, f64, usize) -> Result<ScanConfig, CphError>,
) -> Result<(), CphError> {
    let mut config = preset(a.r, a.eta, a.points)?;
    for (k, model) in [
        (a.k1, &mut config.detectors1),
        (a.k2, &mut config.detectors2),
    ] {
        if let Some(k) = k {
            if matches!(model, DetectorModel::Unmonitored) {
                return Err(CphError::InvalidConfig(
                    "this preset leaves mode 2 unmonitored; drop --k2".into(),
                ));
            }
            *model = DetectorModel::multiplexed(k, a.eta)?;
        }
    }
    config.pulses = a.numeric.pulses;
    config.policy = policy(&a.numeric)?;
    line(out, "r is an assumed squeeze parameter; set it with --r");
    scan_output(out, &config, &a.numeric, 2.0)
}

fn scan_output(
    out: &mut String,
    config: &ScanConfig,
    numeric: &NumericArgs,
    span: f64,
) -> Result<(), CphError> {
    let mut result = phase_scan(config)?;
    let pulses = match numeric.floor_counts {
        Some(counts) => {
            let floor = result.deepest().map_or(0.0, |p| p.classical_floor);
            let pulses = pulses_for_floor_counts(floor, counts)?;
            result.set_pulses(pulses);
            Some(pulses)
        }
        None => config.pulses,
    };
    param(out, "n1", config.n1);
    param(out, "n2", config.n2);
    param(out, "gamma", config.gamma);
    param(out, "gamma_sq", config.gamma * config.gamma);
    param(out, "r", config.r);
    param(out, "alpha", (config.gamma * config.r).sqrt());
    param(out, "detectors1", describe(&config.detectors1));
    param(out, "detectors2", describe(&config.detectors2));
    param(out, "points", config.phi_grid.len());
    param(out, "span_pi", span);
    if let Some(c) = numeric.floor_counts {
        param(out, "floor_counts", c);
    }
    if let Some(p) = pulses {
        param(out, "pulses", p);
    }
    param(out, "tail_epsilon", config.policy.tail_epsilon());
    param(out, "hard_max", config.policy.hard_max());
    summary(out, &result);
    out.push_str("phi,coincidence_prob,singles1,singles2,g_mn,classical_floor\n");
    for p in &result.points {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            p.phi, p.coincidence, p.singles1, p.singles2, p.g_mn, p.classical_floor
        )
        .unwrap();
    }
    Ok(())
}

fn summary(out: &mut String, result: &ScanResult) {
    param(out, "visibility", result.visibility);
    param(out, "minima", result.minima.len());
    for m in &result.minima {
        let mut text = format!(
            "minimum phi={:e} coincidence_prob={:e} classical_floor={:e} g_mn={:e} g_margin={:e} floor_margin={:e}",
            m.phi,
            m.coincidence,
            m.classical_floor,
            m.g_mn,
            m.g_margin,
            m.coincidence - m.classical_floor
        );
        if let Some(s) = m.sigma {
            write!(text, " sigma={s:.4}").unwrap();
        }
        line(out, text);
    }
}

/// `g^(N1,N2)` of the exact photon statistics at a solved hole.
pub fn hole_correlation(hole: &HoleSolution) -> Result<f64, CphError> {
    let spec = HoleSpec::new(hole.n1, hole.n2, hole.r)?;
    let policy = CutoffPolicy::default().with_min_cutoff(spec.total());
    let state = interfere(spec.magnitude(hole.gamma), hole.phi, hole.r, &policy)?;
    Ok(g_mn(&joint_distribution(&state), hole.n1, hole.n2)?.value)
}

fn correlations(out: &mut String, a: &CorrelationArgs) -> Result<(), CphError> {
    let orders = match (a.n1, a.n2) {
        (Some(n1), Some(n2)) => vec![(n1, n2)],
        _ => vec![(1, 1), (2, 2), (5, 0)],
    };
    param(out, "r", a.r);
    param(out, "trials", a.trials);
    param(out, "seed", a.seed);
    param(out, "max_components", a.max_components);
    param(out, "max_mean", a.max_mean);
    let mixture_policy = CutoffPolicy::new(1e-30, 128)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut min_g = vec![f64::INFINITY; orders.len()];
    for _ in 0..a.trials {
        let d = random_separable_mixture(&mut rng, a.max_components, a.max_mean, &mixture_policy)?;
        for (slot, &(m, n)) in min_g.iter_mut().zip(&orders) {
            *slot = slot.min(g_mn(&d, m, n)?.value);
        }
    }
    for (&(m, n), g) in orders.iter().zip(&min_g) {
        line(
            out,
            format!(
                "classical_mixtures n1={m} n2={n} min_g={g:e} min_margin={:e}",
                g - 1.0
            ),
        );
    }
    out.push_str("n1,n2,root_index,gamma,phi,g_mn,classical_margin\n");
    for &(n1, n2) in &orders {
        for hole in solve_holes(&HoleSpec::new(n1, n2, a.r)?)? {
            let g = hole_correlation(&hole)?;
            writeln!(
                out,
                "{n1},{n2},{},{:.9},{:.9},{g:e},{:e}",
                hole.root_index,
                hole.gamma,
                reduce_phase(hole.phi),
                g - 1.0
            )
            .unwrap();
        }
    }
    Ok(())
}
