//! Command-line front end: configuration merging, commands, and artifact output.
//!
//! Every command reads a [`RunConfig`] assembled from an optional JSON file
//! (`--config`) overlaid with flags. Artifacts are CSV files with a JSON
//! sidecar holding everything needed to reproduce them.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::base::{BaseSystem, Marginal};
use crate::diagnostics::{cf_consistency, koopman_series, pow2_sequence, rigidity_scan, CorrelationSeries};
use crate::error::Error;
use crate::levy::{Observable, SignCocycle, StableConfig, Window};
use crate::simulator::{SimOptions, Simulator};
use crate::stats::{hill_tail_index, sum_stability_test};
use crate::verify::{
    cocycle_suite, quasi_invariance_suite, self_similarity_suite, semi_stable_suite, Report,
    DEFAULT_DILATIONS, KS_LEVEL,
};

/// Version of the CSV and sidecar layouts.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Odometer,
    Bernoulli,
    Translation,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpMode {
    /// Gaussian replacement of the smallest fibers (symmetric configs).
    Gaussian,
    /// Every fiber above eps is sampled.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// `2^k` for `k = kmin..=kmax`.
    Pow2,
    /// `k` for `k = kmin..=kmax`.
    Linear,
}

/// Run parameters; every field is optional so files and flags can be merged.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file with defaults for any of these fields; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemKind>,
    /// Odometer bias, in (1/2, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Translation decay, in (0, 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Shift marginal: uniform, normal, or coin:q.
    #[arg(long, value_parser = parse_marginal)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal: Option<Marginal>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Spectral function, e.g. dyadic_sum, bit:1, centered_coordinate, site:0.
    #[arg(long, value_parser = parse_observable)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<Observable>,
    /// Sign cocycle: plus, bit1, coordinate_sign, site_parity.
    #[arg(long, value_parser = parse_xi)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<SignCocycle>,
    /// Totally skewed instead of symmetric.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymmetric: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Index window `start:end`, inclusive.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_jumps: Option<SmallJumpMode>,
    /// Expected number of exactly sampled points per path in Gaussian mode.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_points: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_budget: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    /// Monte-Carlo sample count.
    #[arg(long, visible_alias = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Output file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmin: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<i64>,
    /// Coefficient vector `lag:value,...`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_step: Option<f64>,
    /// Dilation factor for the self-similarity suite.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    /// `self` with every field set in `top` replaced.
    pub fn overlaid(mut self, top: &RunConfig) -> RunConfig {
        overlay!(self, top; config, system, p, r, marginal, alpha, f, xi, asymmetric, eps,
            window, small_jumps, mean_points, point_budget, paths, samples, seed, workers, out,
            sequence, kmin, kmax, max_lag, coefficients, theta_max, theta_step, c);
        self
    }

    /// Reads `--config` if given and applies the flags on top.
    pub fn load(flags: &RunConfig) -> Result<RunConfig, CliError> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        Ok(file.overlaid(flags))
    }

    pub fn system(&self) -> Result<BaseSystem, CliError> {
        let marginal = self.marginal.unwrap_or(Marginal::Uniform);
        let sys = match self.system.unwrap_or(SystemKind::Odometer) {
            SystemKind::Odometer => BaseSystem::odometer(self.p.unwrap_or(2.0 / 3.0)),
            SystemKind::Bernoulli => BaseSystem::bernoulli(marginal),
            SystemKind::Translation => BaseSystem::translation(self.r.unwrap_or(0.5)),
            SystemKind::Identity => {
                let s = BaseSystem::Identity { marginal };
                s.validate().map(|_| s)
            }
        };
        Ok(sys?)
    }

    /// The configured `f`, or the default for the system.
    pub fn observable(&self, sys: &BaseSystem) -> Observable {
        self.f.clone().unwrap_or_else(|| default_observable(sys))
    }

    pub fn alpha(&self) -> Result<f64, CliError> {
        self.alpha
            .ok_or_else(|| CliError::Usage("--alpha is required for this command".into()))
    }

    pub fn stable_config(&self) -> Result<StableConfig, CliError> {
        let sys = self.system()?;
        let f = self.observable(&sys);
        Ok(StableConfig::new(
            self.alpha()?,
            sys,
            f,
            self.xi.unwrap_or_default(),
            !self.asymmetric.unwrap_or(false),
            self.window.unwrap_or(Window { start: 0, end: 0 }),
        )?)
    }

    pub fn sim_options(&self, cfg: &StableConfig) -> SimOptions {
        let eps = self.eps.unwrap_or(1e-4);
        let mode = self.small_jumps.unwrap_or(if cfg.symmetric {
            SmallJumpMode::Gaussian
        } else {
            SmallJumpMode::Exact
        });
        let mut opts = match mode {
            SmallJumpMode::Gaussian => SimOptions::gaussian(eps, self.mean_points.unwrap_or(64.0)),
            SmallJumpMode::Exact => SimOptions::truncated(eps),
        };
        if let Some(b) = self.point_budget {
            opts.point_budget = b;
        }
        if let Some(n) = self.samples {
            opts.base_samples = n;
        }
        opts
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or(1).max(1)
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

/// `dyadic_sum` on the odometer, `site:0` on the translation, and the centered
/// coordinate on shift spaces.
pub fn default_observable(sys: &BaseSystem) -> Observable {
    match sys {
        BaseSystem::Odometer(_) => Observable::DyadicSum,
        BaseSystem::DissipativeTranslation { .. } => Observable::SiteIndicator { k: 0 },
        _ => Observable::CenteredCoordinate,
    }
}

fn split_arg(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    }
}

fn need<T: std::str::FromStr>(name: &str, v: Option<&str>) -> Result<T, String> {
    v.ok_or_else(|| format!("`{name}` needs a parameter, as in {name}:value"))?
        .parse()
        .map_err(|_| format!("bad parameter for `{name}`"))
}

pub fn parse_marginal(s: &str) -> Result<Marginal, String> {
    match split_arg(s) {
        ("uniform", None) => Ok(Marginal::Uniform),
        ("normal", None) => Ok(Marginal::StandardNormal),
        ("coin", q) => Ok(Marginal::Coin { q: need("coin", q)? }),
        _ => Err(format!("unknown marginal `{s}` (uniform, normal, coin:q)")),
    }
}

pub fn parse_observable(s: &str) -> Result<Observable, String> {
    Ok(match split_arg(s) {
        ("one", None) => Observable::One,
        ("constant", v) => Observable::Constant { c: need("constant", v)? },
        ("dyadic_sum", None) => Observable::DyadicSum,
        ("bit", v) => Observable::Bit { i: need("bit", v)? },
        ("coordinate", None) => Observable::Coordinate,
        ("centered_coordinate", None) => Observable::CenteredCoordinate,
        ("cos", v) => Observable::CosCoordinate { k: need("cos", v)? },
        ("sin", v) => Observable::SinCoordinate { k: need("sin", v)? },
        ("indicator_below", v) => Observable::CenteredIndicatorBelow {
            c: need("indicator_below", v)?,
        },
        ("centered_product", None) => Observable::CenteredProduct,
        ("site", v) => Observable::SiteIndicator { k: need("site", v)? },
        _ => return Err(format!("unknown observable `{s}`")),
    })
}

pub fn parse_xi(s: &str) -> Result<SignCocycle, String> {
    match s {
        "plus" => Ok(SignCocycle::Plus),
        "bit1" => Ok(SignCocycle::Bit1),
        "coordinate_sign" => Ok(SignCocycle::CoordinateSign),
        "site_parity" => Ok(SignCocycle::SiteParity),
        _ => Err(format!("unknown sign cocycle `{s}`")),
    }
}

/// Parses `lag:value,lag:value`.
pub fn parse_coefficients(s: &str) -> Result<Vec<(i64, f64)>, CliError> {
    let bad = || CliError::Usage(format!("coefficients must look like `0:1,1:-0.5`, got `{s}`"));
    let mut out: Vec<(i64, f64)> = Vec::new();
    for part in s.split(',') {
        let (k, v) = part.split_once(':').ok_or_else(bad)?;
        let k: i64 = k.trim().parse().map_err(|_| bad())?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        if out.iter().any(|(j, _)| *j == k) {
            return Err(CliError::Usage(format!("lag {k} appears twice in `{s}`")));
        }
        out.push((k, v));
    }
    Ok(out)
}

/// `k * step` for `|k * step| <= max`, so the grid contains 0 exactly.
pub fn theta_grid(max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(max >= 0.0 && step > 0.0 && max.is_finite()) {
        return Err(CliError::Usage("theta grid needs max >= 0 and step > 0".into()));
    }
    let k = (max / step + 1e-9).floor() as i64;
    Ok((-k..=k).map(|j| j as f64 * step).collect())
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("verification failed")]
    VerifyFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(e) => match e {
                Error::InvalidParameter { .. }
                | Error::ObservableMismatch { .. }
                | Error::BiasedConfiguration(_)
                | Error::PointBudgetExceeded { .. }
                | Error::InsufficientSamples { .. }
                | Error::Unsupported(_)
                | Error::Json(_) => 2,
                _ => 1,
            },
            CliError::VerifyFailed => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "maharam", version, about = "Stationary stable processes over Maharam extensions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate paths; writes `path_id,n,value` CSV and a JSON sidecar.
    Simulate(RunConfig),
    /// Ergodic diagnostics.
    #[command(subcommand)]
    Diagnose(Diagnose),
    /// Invariant suites; exit code 1 on any failure.
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Debug, Subcommand)]
pub enum Diagnose {
    /// Normalized correlations along a lag sequence, with a trend verdict.
    Rigidity(RunConfig),
    /// Koopman correlations at lags 0..=max-lag.
    Correlate(RunConfig),
    /// Empirical characteristic function against the Lévy-Khinchine formula.
    Cf(RunConfig),
    /// Hill tail index and sum-stability of the marginal.
    Tails(RunConfig),
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    Cocycle(RunConfig),
    QuasiInvariance(RunConfig),
    SelfSimilarity(RunConfig),
    SemiStable(RunConfig),
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::VerifyFailed) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => cmd_simulate(&RunConfig::load(&c)?),
        Command::Diagnose(d) => match d {
            Diagnose::Rigidity(c) => cmd_rigidity(&RunConfig::load(&c)?),
            Diagnose::Correlate(c) => cmd_correlate(&RunConfig::load(&c)?),
            Diagnose::Cf(c) => cmd_cf(&RunConfig::load(&c)?),
            Diagnose::Tails(c) => cmd_tails(&RunConfig::load(&c)?),
        },
        Command::Verify(v) => {
            let report = match v {
                Verify::Cocycle(c) => verify_cocycle(&RunConfig::load(&c)?)?,
                Verify::QuasiInvariance(c) => verify_quasi_invariance(&RunConfig::load(&c)?)?,
                Verify::SelfSimilarity(c) => verify_self_similarity(&RunConfig::load(&c)?)?,
                Verify::SemiStable(c) => verify_semi_stable(&RunConfig::load(&c)?)?,
            };
            if report.pass() {
                Ok(())
            } else {
                Err(CliError::VerifyFailed)
            }
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(Error::from)?))
}

/// Sidecar path: the artifact path with a `.json` extension.
pub fn sidecar_path(artifact: &Path) -> PathBuf {
    artifact.with_extension("json")
}

fn write_sidecar(artifact: &Path, command: &str, rc: &RunConfig, extra: Value) -> Result<(), CliError> {
    let mut meta = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": rc.seed(),
        "workers": rc.workers(),
        "config": rc,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    let mut w = create(&sidecar_path(artifact))?;
    serde_json::to_writer_pretty(&mut w, &meta).map_err(Error::from)?;
    writeln!(w).map_err(Error::from)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn config_meta(cfg: &StableConfig) -> Value {
    json!({
        "alpha": cfg.alpha,
        "system": cfg.system,
        "f": cfg.f,
        "xi": cfg.xi,
        "symmetric": cfg.symmetric,
        "window": cfg.window,
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

fn io<T>(r: std::io::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Run(Error::from(e)))
}

pub fn cmd_simulate(rc: &RunConfig) -> Result<(), CliError> {
    let cfg = rc.stable_config()?;
    let opts = rc.sim_options(&cfg);
    let (seed, workers) = (rc.seed(), rc.workers());
    let sim = Simulator::new(&cfg, opts, seed, workers)?;
    let batch = sim.simulate(rc.paths.unwrap_or(1000), seed, workers)?;
    let out = rc.out_or("paths.csv");
    let mut w = create(&out)?;
    io(writeln!(w, "path_id,n,value"))?;
    for (i, p) in batch.paths.iter().enumerate() {
        for (n, v) in batch.indices.iter().zip(&p.values) {
            io(writeln!(w, "{i},{n},{v}"))?;
        }
    }
    io(w.flush())?;
    let extra = merge(
        config_meta(&cfg),
        json!({
            "eps": opts.eps,
            "small_jumps": opts.small_jumps,
            "paths": batch.paths.len(),
            "point_count": batch.point_count(),
            "compensator": batch.compensator.iter().map(|c| c.value).collect::<Vec<_>>(),
        }),
    );
    write_sidecar(&out, "simulate", rc, extra)?;
    println!("wrote {} rows to {}", batch.paths.len() * batch.indices.len(), out.display());
    Ok(())
}

fn write_series(path: &Path, s: &CorrelationSeries) -> Result<(), CliError> {
    let mut w = create(path)?;
    io(writeln!(w, "lag,estimate,se"))?;
    for ((l, e), se) in s.lags.iter().zip(&s.estimates).zip(&s.se) {
        io(writeln!(w, "{l},{e},{se}"))?;
    }
    io(w.flush())
}

pub fn cmd_rigidity(rc: &RunConfig) -> Result<(), CliError> {
    let sys = rc.system()?;
    let f = rc.observable(&sys);
    let (kmin, kmax) = (rc.kmin.unwrap_or(2), rc.kmax.unwrap_or(14));
    if kmin > kmax || kmax > 40 {
        return Err(CliError::Usage(format!("need kmin <= kmax <= 40, got {kmin}..{kmax}")));
    }
    let lags = match rc.sequence.unwrap_or(SequenceKind::Pow2) {
        SequenceKind::Pow2 => pow2_sequence(kmin, kmax),
        SequenceKind::Linear => (kmin as i64..=kmax as i64).collect(),
    };
    let s = rigidity_scan(&sys, &f, &lags, rc.samples.unwrap_or(100_000), rc.seed(), rc.workers())?;
    let out = rc.out_or("rigidity.csv");
    write_series(&out, &s)?;
    let verdict = if s.lags.len() >= 3 { Some(s.verdict()?) } else { None };
    if let Some(v) = &verdict {
        println!(
            "rigidity verdict: {} (Mann-Kendall p={:.3e}, final gap {} ± {})",
            if v.rigid { "rigid" } else { "not rigid" },
            v.trend.p_decreasing,
            v.final_gap,
            v.final_se
        );
    }
    let extra = json!({
        "system": sys,
        "f": f,
        "samples": s.samples,
        "normalized": true,
        "verdict": verdict,
    });
    write_sidecar(&out, "diagnose rigidity", rc, extra)
}

pub fn cmd_correlate(rc: &RunConfig) -> Result<(), CliError> {
    let sys = rc.system()?;
    let f = rc.observable(&sys);
    let max_lag = rc.max_lag.unwrap_or(64);
    if max_lag < 0 {
        return Err(CliError::Usage("--max-lag must be non-negative".into()));
    }
    let lags: Vec<i64> = (0..=max_lag).collect();
    let s = koopman_series(&sys, &f, &lags, rc.samples.unwrap_or(100_000), rc.seed(), rc.workers())?;
    let out = rc.out_or("correlations.csv");
    write_series(&out, &s)?;
    let extra = json!({ "system": sys, "f": f, "samples": s.samples, "normalized": false });
    write_sidecar(&out, "diagnose correlate", rc, extra)
}

pub fn cmd_cf(rc: &RunConfig) -> Result<(), CliError> {
    let cfg = rc.stable_config()?;
    let a = parse_coefficients(rc.coefficients.as_deref().unwrap_or("0:1"))?;
    let thetas = theta_grid(rc.theta_max.unwrap_or(4.0), rc.theta_step.unwrap_or(0.5))?;
    let opts = rc.sim_options(&cfg);
    let samples = rc.samples.unwrap_or(100_000);
    let r = cf_consistency(
        &cfg,
        &a,
        &thetas,
        opts,
        rc.paths.unwrap_or(100_000),
        samples,
        rc.seed(),
        rc.workers(),
    )?;
    let out = rc.out_or("cf.csv");
    let mut w = create(&out)?;
    io(writeln!(w, "theta,re,im,se"))?;
    for ((t, v), se) in r.thetas.iter().zip(&r.empirical).zip(&r.empirical_se) {
        io(writeln!(w, "{t},{},{},{se}", v.re, v.im))?;
    }
    io(w.flush())?;
    println!("sup gap {} (se {}) against exp(exponent)", r.sup_gap, r.sup_se);
    let extra = merge(
        config_meta(&cfg),
        json!({
            "eps": opts.eps,
            "coefficients": a,
            "predicted": r.predicted.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "gaps": r.gaps,
            "sup_gap": r.sup_gap,
            "sup_se": r.sup_se,
            "truncation_effect": r.truncation_effect,
        }),
    );
    write_sidecar(&out, "diagnose cf", rc, extra)
}

pub fn cmd_tails(rc: &RunConfig) -> Result<(), CliError> {
    let mut cfg = rc.stable_config()?;
    cfg.window = Window { start: 0, end: 0 };
    let opts = rc.sim_options(&cfg);
    let sim = Simulator::new(&cfg, opts, rc.seed(), rc.workers())?;
    let batch = sim.simulate(rc.paths.unwrap_or(100_000), rc.seed(), rc.workers())?;
    let x = batch.column(0);
    let hill = hill_tail_index(&x, 0.01)?;
    let ks = sum_stability_test(&x, cfg.alpha)?;
    let hill_ok = (hill.alpha - cfg.alpha).abs() <= 0.1;
    let ks_ok = ks.passes(KS_LEVEL);
    println!(
        "{} hill alpha {} ± {} (k = {}, target {} ± 0.1)",
        if hill_ok { "PASS" } else { "FAIL" },
        hill.alpha,
        hill.se,
        hill.k,
        cfg.alpha
    );
    println!(
        "{} sum stability KS D = {} p = {}",
        if ks_ok { "PASS" } else { "FAIL" },
        ks.statistic,
        ks.p_value
    );
    let out = rc.out_or("tails.json");
    let mut w = create(&out)?;
    let report = merge(
        config_meta(&cfg),
        json!({
            "schema_version": SCHEMA_VERSION,
            "seed": rc.seed(),
            "workers": rc.workers(),
            "eps": opts.eps,
            "paths": x.len(),
            "point_count": batch.point_count(),
            "hill": hill,
            "sum_stability": ks,
        }),
    );
    serde_json::to_writer_pretty(&mut w, &report).map_err(Error::from)?;
    io(writeln!(w))?;
    io(w.flush())
}

fn finish_report(rc: &RunConfig, report: Report) -> Result<Report, CliError> {
    println!("{report}");
    if let Some(path) = &rc.out {
        let mut w = create(path)?;
        let v = json!({
            "schema_version": SCHEMA_VERSION,
            "seed": rc.seed(),
            "workers": rc.workers(),
            "config": rc,
            "pass": report.pass(),
            "report": report,
        });
        serde_json::to_writer_pretty(&mut w, &v).map_err(Error::from)?;
        io(writeln!(w))?;
        io(w.flush())?;
    }
    Ok(report)
}

fn alphas(rc: &RunConfig, default: &[f64]) -> Vec<f64> {
    rc.alpha.map_or_else(|| default.to_vec(), |a| vec![a])
}

pub fn verify_cocycle(rc: &RunConfig) -> Result<Report, CliError> {
    let systems = [
        BaseSystem::odometer(rc.p.unwrap_or(2.0 / 3.0))?,
        BaseSystem::translation(rc.r.unwrap_or(0.5))?,
    ];
    let trials = rc.samples.unwrap_or(10_000);
    let report = cocycle_suite(&systems, trials, 32, 2_000, 4096, rc.seed())?;
    finish_report(rc, report)
}

pub fn verify_quasi_invariance(rc: &RunConfig) -> Result<Report, CliError> {
    let sys = rc.system()?;
    let report = quasi_invariance_suite(
        &sys,
        &alphas(rc, &[0.8, 1.5]),
        rc.samples.unwrap_or(1_000_000),
        rc.seed(),
        rc.workers(),
    )?;
    finish_report(rc, report)
}

pub fn verify_self_similarity(rc: &RunConfig) -> Result<Report, CliError> {
    let cs = rc.c.map_or_else(|| DEFAULT_DILATIONS.to_vec(), |c| vec![c]);
    let mut checks = Vec::new();
    for alpha in alphas(rc, &[1.5]) {
        let r = self_similarity_suite(alpha, &cs, rc.samples.unwrap_or(200_000), rc.seed(), rc.workers())?;
        checks.extend(r.checks);
    }
    finish_report(
        rc,
        Report {
            suite: "self-similarity".into(),
            checks,
        },
    )
}

pub fn verify_semi_stable(rc: &RunConfig) -> Result<Report, CliError> {
    let p = rc.p.unwrap_or(2.0 / 3.0);
    if !(p > 0.5 && p < 1.0) {
        return Err(CliError::Usage(format!("--p must lie in (1/2, 1), got {p}")));
    }
    let lambda = (1.0 - p) / p;
    let report = semi_stable_suite(
        lambda,
        &alphas(rc, &[0.8, 1.0, 1.5]),
        rc.samples.unwrap_or(100_000),
        rc.seed(),
    )?;
    finish_report(rc, report)
}
