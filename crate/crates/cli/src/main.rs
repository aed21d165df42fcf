//! `vpack`: run the online packing engine on instance files, generated
//! samples, sweeps over instance families, and adaptive adversaries.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vpack::generators::InstanceSample;
use vpack::harness::{
    self, duel, io as inst_io, sweep, trial, CsvRow, Distribution, HarnessError, SweepConfig,
    TrialConfig, TrialReport,
};
use vpack::scalar::{self, Scalar};

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "vpack",
    version,
    about = "Online submodular packing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the engine once on an instance file or a generated sample.
    Run(RunArgs),
    /// Run the engine over many seeded samples of one family.
    Sweep(SweepArgs),
    /// Play an algorithm against an adaptive adversary.
    Duel(DuelArgs),
    /// Write a generated sample as an instance file.
    Gen(GenArgs),
    /// Scale every weight of an instance down.
    Rescale(RescaleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct Family {
    /// Family parameter as key=value; repeatable.
    #[arg(short = 'p', long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl Family {
    fn map(&self) -> Result<BTreeMap<String, String>, HarnessError> {
        self.params
            .iter()
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| HarnessError::Usage(format!("expected KEY=VALUE, got `{kv}`")))
            })
            .collect()
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Instance file (line-delimited JSON).
    #[arg(conflicts_with = "generator", required_unless_present = "generator")]
    instance: Option<PathBuf>,
    /// Generate the instance instead: slack-random, noslack, smallweight or random.
    #[arg(long)]
    generator: Option<String>,
    #[command(flatten)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Engine slack (fraction or decimal); defaults to the instance's slack.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long, value_enum, default_value = "on")]
    audit: Toggle,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// slack-random, noslack, smallweight or random.
    distribution: String,
    #[command(flatten)]
    family: Family,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// First seed; trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long, value_enum, default_value = "on")]
    audit: Toggle,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    /// Writes `<out>.json` (summary) and `<out>.csv` (one row per trial).
    /// Without it, the format picks what goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Algorithm {
    Engine,
    Greedy,
}

#[derive(Args, Debug)]
struct DuelArgs {
    /// slack-deterministic or slack-subsets.
    adversary: String,
    #[command(flatten)]
    family: Family,
    /// Slack of the adversary's items and of the engine.
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    #[arg(long, value_enum, default_value = "engine")]
    algorithm: Algorithm,
    #[arg(long, value_enum, default_value = "on")]
    audit: Toggle,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct GenArgs {
    generator: String,
    #[command(flatten)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RescaleArgs {
    instance: PathBuf,
    /// Scale by 1/(1+epsilon).
    #[arg(long, conflicts_with = "factor", required_unless_present = "factor")]
    epsilon: Option<String>,
    /// Scale by this factor in (0, 1].
    #[arg(long)]
    factor: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Harness(HarnessError),
    Invariant(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Harness(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Harness(e.into())
    }
}

fn parse_scalar(what: &str, raw: &str) -> Result<Scalar, HarnessError> {
    scalar::parse_scalar(raw).map_err(|e| HarnessError::Usage(format!("--{what} {raw}: {e}")))
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_instance(path: &Path) -> Result<InstanceSample, HarnessError> {
    let file =
        File::open(path).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
    Ok(inst_io::read_instance(BufReader::new(file))?)
}

fn write_json<T: serde::Serialize>(value: &T, out: &mut dyn Write) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| HarnessError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn emit_trial(report: &TrialReport, output: &Output) -> Result<(), Failure> {
    let mut out = sink(output.out.as_deref())?;
    match output.format {
        Format::Json => write_json(report, &mut out)?,
        Format::Csv => sweep::write_csv(&[CsvRow::from(report)], &mut out)?,
    }
    out.flush()?;
    eprintln!("{}", report.summary());
    if report.invariants_hold() {
        Ok(())
    } else {
        Err(Failure::Invariant(report.violations.join("\n")))
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let sample = match (&args.instance, &args.generator) {
        (Some(path), _) => load_instance(path)?,
        (None, Some(name)) => {
            Distribution::from_params(name, &args.family.map()?)?.sample(args.seed)?
        }
        (None, None) => unreachable!("clap requires one of them"),
    };
    let epsilon = args
        .epsilon
        .as_deref()
        .map(|e| parse_scalar("epsilon", e))
        .transpose()?;
    let cfg = TrialConfig {
        epsilon,
        audit: args.audit == Toggle::On,
        opt: trial::OptPolicy::Auto,
    };
    let report = harness::run_trial(&sample, &cfg)?;
    emit_trial(&report, &args.output)
}

fn sweep_cmd(args: SweepArgs) -> Result<(), Failure> {
    let dist = Distribution::from_params(&args.distribution, &args.family.map()?)?;
    let mut cfg = SweepConfig::new(dist, args.trials, args.seed);
    cfg.epsilon = args
        .epsilon
        .as_deref()
        .map(|e| parse_scalar("epsilon", e))
        .transpose()?;
    cfg.audit = args.audit == Toggle::On;
    cfg.parallel = !args.serial;
    let outcome = harness::run_sweep(&cfg)?;
    let rows = outcome.rows();
    match &args.out {
        Some(stem) => {
            let mut json = sink(Some(&stem.with_extension("json")))?;
            write_json(&outcome.report, &mut json)?;
            json.flush()?;
            let mut csv = sink(Some(&stem.with_extension("csv")))?;
            sweep::write_csv(&rows, &mut csv)?;
            csv.flush()?;
        }
        None => {
            let mut out = sink(None)?;
            match args.format {
                Format::Json => write_json(&outcome.report, &mut out)?,
                Format::Csv => sweep::write_csv(&rows, &mut out)?,
            }
            out.flush()?;
        }
    }
    let r = &outcome.report;
    eprintln!(
        "{} {:?}: {} trials, mean f(S) = {:.4} +- {:.4}, opt = {}, ratio = {}, bound = {}",
        r.distribution,
        r.params,
        r.trials,
        r.f_s.mean_approx,
        r.f_s.stderr,
        r.opt_value.as_ref().map_or("?".into(), scalar::to_string),
        r.empirical_ratio_approx
            .map_or("?".into(), |x| format!("{x:.4}")),
        r.expected_value_bound_approx
            .map_or("none".into(), |x| format!("{x:.4}")),
    );
    if r.audit_failures > 0 {
        return Err(Failure::Invariant(format!(
            "{} of {} trials violated an invariant",
            r.audit_failures, r.trials
        )));
    }
    Ok(())
}

fn duel_cmd(args: DuelArgs) -> Result<(), Failure> {
    let epsilon = parse_scalar("epsilon", &args.epsilon)?;
    let params = args.family.map()?;
    let report = match args.algorithm {
        Algorithm::Engine => {
            duel::duel_engine(&args.adversary, &params, &epsilon, args.audit == Toggle::On)?
        }
        Algorithm::Greedy => {
            let mut adv = duel::make_adversary(&args.adversary, &params, &epsilon)?;
            duel::run_duel(adv.as_mut(), &mut trial::GreedyBaseline::new())?
        }
    };
    emit_trial(&report, &args.output)
}

fn gen_cmd(args: GenArgs) -> Result<(), Failure> {
    let sample =
        Distribution::from_params(&args.generator, &args.family.map()?)?.sample(args.seed)?;
    let mut out = sink(args.out.as_deref())?;
    inst_io::write_instance(&sample, &mut out)?;
    out.flush()?;
    Ok(())
}

fn rescale_cmd(args: RescaleArgs) -> Result<(), Failure> {
    let sample = load_instance(&args.instance)?;
    let factor = match (&args.epsilon, &args.factor) {
        (Some(e), _) => {
            let e = parse_scalar("epsilon", e)?;
            if e < scalar::int(0) {
                return Err(HarnessError::Usage("--epsilon must be non-negative".into()).into());
            }
            scalar::int(1) / (scalar::int(1) + e)
        }
        (None, Some(f)) => parse_scalar("factor", f)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let scaled = harness::rescale_instance(&sample, &factor)?;
    let mut out = sink(args.out.as_deref())?;
    inst_io::write_instance(&scaled, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Duel(a) => duel_cmd(a),
        Command::Gen(a) => gen_cmd(a),
        Command::Rescale(a) => rescale_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violation:\n{msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                HarnessError::Parse(_) => EXIT_PARSE,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}
