//! `hankel-degree`: probabilistic Hankel norm bounds and McMillan degree lower
//! bounds from the command line. CSV goes to stdout, commentary to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use hankel_degree::bounds::{alpha_for_prob, hankel_norm_threshold, prob, Variant};
use hankel_degree::identification::{
    aic_scan, degree_lower_bound, empirical_degree_lower_bound, nearest_rank_percentile,
    sample_noise_norms, simulate_lti, DegreeEstimate, EstimatorOptions,
};
use hankel_degree::signals::{
    add_noise, load_signal_csv, nmr_signal, random_modal_system, read_matrix_market,
    write_signal_csv, NmrParameters,
};
use hankel_degree::stochastics::{NoiseKind, NoiseModel, SeededGenerator};
use num_complex::Complex64;

#[derive(Parser, Debug)]
#[command(
    name = "hankel-degree",
    version,
    about = "Hankel 2-norm bounds and McMillan degree lower bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate or invert the probabilistic norm bound.
    Bound(BoundArgs),
    /// Lower-bound the McMillan degree of a noisy signal.
    Estimate(EstimateArgs),
    /// Compare the analytic thresholds with Monte Carlo.
    Calibrate(CalibrateArgs),
    /// Write a synthetic test signal.
    Synth(SynthArgs),
    /// Score model orders 1..=qmax with AIC.
    Aic(AicArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Dist {
    RealIid,
    ComplexIid,
    RealCov,
    ComplexCov,
}

impl From<Dist> for NoiseKind {
    fn from(d: Dist) -> Self {
        match d {
            Dist::RealIid => NoiseKind::RealIid,
            Dist::ComplexIid => NoiseKind::ComplexIid,
            Dist::RealCov => NoiseKind::RealCov,
            Dist::ComplexCov => NoiseKind::ComplexCov,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Paper,
    ExactIid,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Paper => Variant::Paper,
            VariantArg::ExactIid => Variant::ExactIid,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    Nmr,
    Modal,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    /// Noise distribution.
    #[arg(long, value_enum, default_value = "complex-iid")]
    dist: Dist,
    /// Matrix Market covariance, required for the -cov distributions.
    #[arg(long, value_name = "PATH")]
    sigma: Option<PathBuf>,
}

impl NoiseArgs {
    fn check(&self) {
        let kind = NoiseKind::from(self.dist);
        if kind.has_covariance() && self.sigma.is_none() {
            usage_error(
                ErrorKind::MissingRequiredArgument,
                format!("--dist {kind} requires --sigma <PATH>"),
            );
        }
        if !kind.has_covariance() && self.sigma.is_some() {
            usage_error(
                ErrorKind::ArgumentConflict,
                format!("--sigma only applies to covariance distributions, not {kind}"),
            );
        }
    }

    fn model(&self) -> Result<NoiseModel> {
        let sigma = match &self.sigma {
            Some(p) => Some(read_matrix_market(p)?),
            None => None,
        };
        Ok(NoiseModel::from_kind(self.dist.into(), sigma)?)
    }
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Signal length.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Evaluate p(alpha) at this alpha.
    #[arg(long, value_parser = positive, conflicts_with = "prob", required_unless_present = "prob")]
    alpha: Option<f64>,
    /// Find alpha with p(alpha) equal to this probability.
    #[arg(long, value_parser = open_unit)]
    prob: Option<f64>,
    #[arg(long, value_enum, default_value = "paper")]
    variant: VariantArg,
    /// Noise scale; adds the column threshold = alpha * eps * sqrt(n).
    #[arg(long, value_parser = positive)]
    eps: Option<f64>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Signal CSV with header index,re,im.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Noise scale eps.
    #[arg(long, value_parser = positive)]
    eps: f64,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Confidence of the analytic bound.
    #[arg(long, value_parser = open_unit, default_value_t = 0.99, conflicts_with = "empirical")]
    prob: f64,
    #[arg(
        long,
        value_enum,
        default_value = "paper",
        conflicts_with = "empirical"
    )]
    variant: VariantArg,
    /// Use the Monte Carlo threshold instead of the analytic bound.
    #[arg(long)]
    empirical: bool,
    /// Percentile of the Monte Carlo norms.
    #[arg(long, value_parser = percent, default_value_t = 99.0, requires = "empirical")]
    gamma: f64,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 400, requires = "empirical")]
    trials: usize,
    /// Hankel column count (default floor(n / 2)).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    m: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the computed singular values as CSV "k,sigma".
    #[arg(long, value_name = "PATH")]
    svals_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    noise: NoiseArgs,
    /// Comma-separated signal lengths.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(2..))]
    n_list: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Matched confidence: analytic p-hat and percentile 100 * p-hat.
    #[arg(long, value_parser = open_unit, default_value_t = 0.99)]
    prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "nmr")]
    kind: SynthKind,
    /// Model order of the modal system.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    q: u64,
    /// Signal length (default 256).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    /// Outer radius of the modal eigenvalue annulus.
    #[arg(long, default_value_t = 0.95, value_parser = radius)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add noise at this scale.
    #[arg(long, value_parser = positive)]
    eps: Option<f64>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Output CSV (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AicArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_parser = positive)]
    eps: f64,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Largest model order scored.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    qmax: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    m: Option<u64>,
    /// Output CSV "q,aic,residual" (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

fn percent(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 100.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 100), got {v}"))
    }
}

fn radius(s: &str) -> Result<f64, String> {
    open_unit(s)
}

fn usage_error(kind: ErrorKind, msg: impl std::fmt::Display) -> ! {
    Cli::command().error(kind, msg).exit()
}

fn configure_threads() {
    let Ok(raw) = std::env::var("HANKEL_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(k) if k > 0 => {
            // only fails if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global();
        }
        _ => usage_error(
            ErrorKind::InvalidValue,
            format!("HANKEL_THREADS must be a positive integer, got {raw:?}"),
        ),
    }
}

/// Output sink: a file when a path is given, stdout otherwise.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_bound(a: BoundArgs) -> Result<()> {
    let model = a.noise.model()?;
    let n = a.n as usize;
    model.check_dim(n)?;
    let variant = Variant::from(a.variant);
    let (alpha, p) = match (a.alpha, a.prob) {
        (Some(alpha), _) => (alpha, prob(alpha, &model, n, variant)?),
        (None, Some(p)) => {
            let alpha = alpha_for_prob(p, &model, n, variant)?;
            (alpha, prob(alpha, &model, n, variant)?)
        }
        (None, None) => unreachable!("clap requires --alpha or --prob"),
    };
    let mut out = String::from("n,dist,variant,alpha,probability,alpha_sqrt_n");
    if a.eps.is_some() {
        out.push_str(",threshold");
    }
    let _ = write!(
        out,
        "\n{n},{},{},{alpha:.17e},{p:.17e},{:.17e}",
        model.kind(),
        variant.as_str(),
        alpha * (n as f64).sqrt()
    );
    if let Some(eps) = a.eps {
        let _ = write!(out, ",{:.17e}", hankel_norm_threshold(alpha, eps, n));
    }
    out.push('\n');
    emit(None, &out)
}

fn estimator_options(m: Option<u64>, seed: u64) -> EstimatorOptions {
    EstimatorOptions {
        m: m.map(|m| m as usize),
        lanczos_seed: seed,
        ..Default::default()
    }
}

fn run_estimate(a: EstimateArgs) -> Result<()> {
    let model = a.noise.model()?;
    let y = load_signal_csv(&a.input)?;
    let opts = estimator_options(a.m, a.seed);
    let est: DegreeEstimate = if a.empirical {
        eprintln!(
            "estimating the noise norm percentile from {} trials",
            a.trials
        );
        empirical_degree_lower_bound(&y, a.eps, &model, a.gamma, a.trials, a.seed, &opts)?
    } else {
        degree_lower_bound(&y, a.eps, &model, a.prob, a.variant.into(), &opts)?
    };
    if !est.certified {
        eprintln!("warning: truncated spectrum, the count is a loose lower bound");
    }
    eprintln!(
        "McMillan degree >= {} with probability {} ({} threshold {:.6e})",
        est.lower_bound, est.probability, est.method, est.threshold
    );
    if let Some(path) = &a.svals_out {
        let mut s = String::from("k,sigma\n");
        for (k, v) in est.spectrum.values.iter().enumerate() {
            let _ = writeln!(s, "{},{v:.17e}", k + 1);
        }
        emit(Some(path), &s)?;
    }
    let out = format!(
        "lower_bound,threshold,method,certified,probability,n,m\n{},{:.17e},{},{},{},{},{}\n",
        est.lower_bound, est.threshold, est.method, est.certified, est.probability, est.n, est.m
    );
    emit(None, &out)
}

fn run_calibrate(a: CalibrateArgs) -> Result<()> {
    let model = a.noise.model()?;
    let kind = model.kind();
    let gamma = 100.0 * a.prob;
    let mut out = String::from(
        "n,alpha_paper,alpha_exact,thresh_paper,thresh_exact,empirical_pctile,coverage\n",
    );
    for &n in &a.n_list {
        let n = n as usize;
        model.check_dim(n)?;
        let root_n = (n as f64).sqrt();
        let alpha_paper = alpha_for_prob(a.prob, &model, n, Variant::Paper)?;
        let alpha_exact = if kind.has_covariance() {
            None
        } else {
            Some(alpha_for_prob(a.prob, &model, n, Variant::ExactIid)?)
        };
        eprintln!("n = {n}: {} trials", a.trials);
        let norms = sample_noise_norms(&model, n, n / 2, a.trials, a.seed ^ n as u64)?;
        if norms.is_empty() {
            bail!("--trials must be at least 1");
        }
        let pctile = nearest_rank_percentile(&norms, gamma)?;
        let thresh_paper = alpha_paper * root_n;
        let coverage =
            norms.iter().filter(|&&s| s <= thresh_paper).count() as f64 / norms.len() as f64;
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{n},{alpha_paper:.17e},{},{:.17e},{},{pctile:.17e},{coverage}",
            fmt_opt(alpha_exact),
            thresh_paper,
            fmt_opt(alpha_exact.map(|x| x * root_n)),
        );
    }
    emit(a.out.as_deref(), &out)
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let mut y: Vec<Complex64> = match a.kind {
        SynthKind::Nmr => {
            let mut p = NmrParameters::default();
            if let Some(n) = a.n {
                p.n = n as usize;
            }
            nmr_signal(&p)?
        }
        SynthKind::Modal => {
            let sys = random_modal_system(a.q as usize, a.radius, a.seed)?;
            simulate_lti(&sys, a.n.unwrap_or(256) as usize)
        }
    };
    if let Some(eps) = a.eps {
        let model = a.noise.model()?;
        // stream 1 keeps the noise independent of the modal system draw
        y = add_noise(&y, eps, &model, &mut SeededGenerator::new(a.seed, 1))?;
    }
    let mut s = String::new();
    write_signal_csv(&mut s, &y);
    emit(a.out.as_deref(), &s)
}

fn run_aic(a: AicArgs) -> Result<()> {
    let model = a.noise.model()?;
    let y = load_signal_csv(&a.input)?;
    let opts = estimator_options(a.m, 0x5eed);
    let scan = aic_scan(&y, a.eps, &model, a.qmax as usize, &opts)?;
    let mut s = String::from("q,aic,residual\n");
    for q in 1..=a.qmax as usize {
        match (scan.scores.get(&q), scan.residuals.get(&q)) {
            (Some(score), Some(res)) => {
                let _ = writeln!(s, "{q},{score:.17e},{res:.17e}");
            }
            _ => {
                let _ = writeln!(s, "{q},,");
                eprintln!(
                    "q = {q}: {}",
                    scan.failures.get(&q).map_or("fit failed", String::as_str)
                );
            }
        }
    }
    emit(a.out.as_deref(), &s)?;
    eprintln!("argmin q = {}", scan.argmin_q);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Bound(a) => {
            a.noise.check();
            run_bound(a)
        }
        Command::Estimate(a) => {
            a.noise.check();
            run_estimate(a)
        }
        Command::Calibrate(a) => {
            a.noise.check();
            run_calibrate(a)
        }
        Command::Synth(a) => {
            if a.eps.is_some() {
                a.noise.check();
            }
            run_synth(a)
        }
        Command::Aic(a) => {
            a.noise.check();
            run_aic(a)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
