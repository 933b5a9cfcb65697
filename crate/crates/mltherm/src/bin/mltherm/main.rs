//! Command-line front end: dataset analysis, oracle verification, network
//! reports, shift pipelines, mixing experiments, and the grid-entropy demo.
//!
//! Reports are JSON (tables CSV), written to `--out` or stdout, and are
//! byte-identical across runs for identical arguments, inputs, and seeds.
//! Exit codes: 0 success, 1 a verification check failed, 2 usage, 3 invalid
//! configuration or data, 4 file I/O, 5 computation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mltherm::dataset::stats;
use mltherm::energy::{min_energy, trace_final_energy_estimate};
use mltherm::evolution::{
    mixing_experiment, refresh_pipeline, JointModelConfig, MarginalSpec, PipelineConfig,
};
use mltherm::nn::{efficiency_and_classification, mc_nn_initial_energy, NnSpec};
use mltherm::report::{
    to_json_string, LayerReportJson, Metric, MixingReportJson, OracleInfo, ShiftReportJson,
    TemperatureReportJson,
};
use mltherm::thermo::{temperature_type1_with_energy, Method, TemperatureReport};
use mltherm::verification::{run_suite, to_csv};
use mltherm::{
    asymptotic_temperature, differential_entropy, discrete_entropy_grid, mc_mean_energy,
    temperature_type1, AsymptoticFamily, BaseEnergy, Dataset, EnergyForm, Error,
    InitDistribution, Regularization, SolverOptions,
};

#[derive(Parser)]
#[command(name = "mltherm", version, about = "Thermodynamic analysis of ML systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temperature report for one (dataset, energy, initialization) system.
    Analyze(AnalyzeArgs),
    /// Closed-form vs Monte-Carlo verification table (CSV).
    Verify(VerifyArgs),
    /// Per-layer network report: energies, temperatures, efficiency, engine class.
    Nn(NnArgs),
    /// Train/retrain pipeline over a dataset sequence.
    Shift(ShiftArgs),
    /// Mix two systems and report temperatures and energy flow.
    Mix(MixArgs),
    /// Grid-entropy identity table.
    EntropyDemo(EntropyDemoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnergyArg {
    Mse,
    Mae,
    Mbe,
    Ce,
}

impl EnergyArg {
    fn base(self) -> BaseEnergy {
        match self {
            EnergyArg::Mse => BaseEnergy::Mse,
            EnergyArg::Mae => BaseEnergy::Mae,
            EnergyArg::Mbe => BaseEnergy::Mbe,
            EnergyArg::Ce => BaseEnergy::CrossEntropy,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegArg {
    None,
    L1,
    L2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Normal,
    Uniform,
    Mixed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MarginalArg {
    Empirical,
    Uniform,
}

#[derive(Args)]
struct EnergyFlags {
    /// Energy form.
    #[arg(long, value_enum)]
    energy: EnergyArg,
    /// Regularization.
    #[arg(long, value_enum, default_value = "none")]
    reg: RegArg,
    /// Regularization strength.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
}

impl EnergyFlags {
    fn form(&self) -> Result<EnergyForm, CliError> {
        let reg = match self.reg {
            RegArg::None => Regularization::None,
            RegArg::L1 => Regularization::L1,
            RegArg::L2 => Regularization::L2,
        };
        EnergyForm::new(self.energy.base(), reg, self.lambda).map_err(CliError::from)
    }
}

#[derive(Args)]
struct InitFlags {
    /// Initialization family.
    #[arg(long, value_enum)]
    init: InitArg,
    /// Normal-block standard deviations, comma separated; a single value is
    /// broadcast over all parameter dimensions.
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
    /// Uniform-block box widths, comma separated; a single value broadcasts.
    #[arg(long, value_delimiter = ',')]
    length: Vec<f64>,
}

impl InitFlags {
    fn dist(&self, param_dim: usize) -> Result<InitDistribution, CliError> {
        let broadcast = |values: &[f64], what: &str| -> Result<Vec<f64>, CliError> {
            match values.len() {
                0 => Err(CliError::config(format!("--init requires --{what}"))),
                1 => Ok(vec![values[0]; param_dim]),
                n if n == param_dim => Ok(values.to_vec()),
                n => Err(CliError::config(format!(
                    "--{what} has {n} entries but the dataset needs {param_dim}"
                ))),
            }
        };
        let dist = match self.init {
            InitArg::Normal => {
                InitDistribution::diagonal_normal(broadcast(&self.sigma, "sigma")?)?
            }
            InitArg::Uniform => InitDistribution::uniform_box(broadcast(&self.length, "length")?)?,
            InitArg::Mixed => {
                if self.sigma.len() + self.length.len() != param_dim {
                    return Err(CliError::config(format!(
                        "mixed init needs explicit --sigma and --length lists totalling {param_dim} entries"
                    )));
                }
                InitDistribution::mixed(self.sigma.clone(), self.length.clone())?
            }
        };
        Ok(dist)
    }

    fn family(&self) -> Result<AsymptoticFamily, CliError> {
        match self.init {
            InitArg::Normal => Ok(AsymptoticFamily::Normal),
            InitArg::Uniform => Ok(AsymptoticFamily::Uniform),
            InitArg::Mixed => Err(CliError::config(
                "asymptotic evaluation needs --init normal or uniform".into(),
            )),
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Label column name.
    #[arg(long)]
    label: String,
    #[command(flatten)]
    energy: EnergyFlags,
    #[command(flatten)]
    init: InitFlags,
    /// Evaluate the large-scale asymptotic row instead of the exact form.
    #[arg(long)]
    asymptotic: bool,
    /// Scale (σ or l) for --asymptotic.
    #[arg(long)]
    scale: Option<f64>,
    /// Monte-Carlo samples for energies without a closed form.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver gradient tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Solver iteration budget.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo samples per case.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NnArgs {
    /// Network spec JSON.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label: String,
    /// Forward-pass Monte-Carlo samples; omit to skip the oracle.
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShiftArgs {
    /// Input CSVs, one per state, in sequence order (repeat the flag).
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    #[arg(long)]
    label: String,
    #[command(flatten)]
    energy: EnergyFlags,
    #[command(flatten)]
    init: InitFlags,
    /// Feature bins per axis for the joint estimate; `⌈√n⌉` when omitted.
    #[arg(long)]
    bins: Option<usize>,
    /// Feature-marginal assumption.
    #[arg(long, value_enum, default_value = "empirical")]
    marginal: MarginalArg,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MixArgs {
    /// Exactly two input CSVs: system A then system B.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    #[arg(long)]
    label: String,
    #[command(flatten)]
    energy: EnergyFlags,
    /// Initialization family (normal or uniform).
    #[arg(long, value_enum)]
    init: InitArg,
    /// Shared asymptotic scale.
    #[arg(long)]
    scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyDemoArgs {
    /// Normal-case standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Uniform-case box width.
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    /// Grid spacings to tabulate (repeat the flag).
    #[arg(long = "delta", default_values_t = [0.1, 0.01])]
    deltas: Vec<f64>,
    /// Normal-case halfwidth in units of σ.
    #[arg(long, default_value_t = 8.0)]
    halfwidth_sigmas: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error tagged with its exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: String) -> Self {
        CliError { code: 3, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::MissingFile { .. } | Error::Io(_) | Error::Csv(_) => 4,
            Error::MissingColumn { .. }
            | Error::NonNumericCell { .. }
            | Error::EmptyBody
            | Error::InvalidDataset { .. }
            | Error::InvalidDistribution { .. }
            | Error::InvalidParams { .. }
            | Error::DimensionMismatch { .. } => 3,
            _ => 5,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = std::env::var("MLTHERM_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => log::warn!("ignoring invalid MLTHERM_THREADS={threads}"),
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Verify(args) => verify(args),
        Command::Nn(args) => nn(args),
        Command::Shift(args) => shift(args),
        Command::Mix(args) => mix(args),
        Command::EntropyDemo(args) => entropy_demo(args),
    }
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| CliError {
            code: 4,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<u8, CliError> {
    let d = Dataset::load_csv(&args.data, &args.label)?;
    let form = args.energy.form()?;
    let opts = SolverOptions {
        max_iter: args.max_iter,
        grad_tol: args.tol,
        ..SolverOptions::default()
    };

    let (report, oracle) = if args.asymptotic {
        let scale = args
            .scale
            .ok_or_else(|| CliError::config("--asymptotic requires --scale".into()))?;
        let family = args.init.family()?;
        let (t, formula_id) = asymptotic_temperature(&form, family, &d, scale, None)?;
        // record the dropped minimum next to the kept term when it exists
        let dropped = min_energy(&form, &d, &opts).ok().map(|m| m.energy);
        (
            TemperatureReport {
                mean_initial_energy: None,
                final_energy: dropped,
                entropy: None,
                temperature: t,
                method: Method::Asymptotic,
                formula_id,
                scale: Some(scale),
            },
            None,
        )
    } else {
        let dist = args.init.dist(d.param_dim())?;
        match temperature_type1(&form, &dist, &d) {
            Ok(r) => (r, None),
            Err(Error::Unsupported { .. }) => {
                let mc = mc_mean_energy(&form, &dist, &d, args.samples, args.seed)?;
                let r = temperature_type1_with_energy(mc.estimate, &form, &dist, &d)?;
                (r, Some(OracleInfo::from(&mc)))
            }
            Err(e) => return Err(e.into()),
        }
    };

    let mut json = TemperatureReportJson::from_report(&report, oracle);
    if form.base() == BaseEnergy::Mse {
        json.trace_ef = trace_final_energy_estimate(&stats(&d), d.len()).map(Metric::from);
    }
    emit(args.out.as_ref(), &to_json_string(&json))?;
    Ok(0)
}

fn verify(args: VerifyArgs) -> Result<u8, CliError> {
    let rows = run_suite(args.seed, args.samples, 3)?;
    emit(args.out.as_ref(), &to_csv(&rows))?;
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
}

fn nn(args: NnArgs) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&args.spec).map_err(|e| CliError {
        code: 4,
        message: format!("cannot read {}: {e}", args.spec.display()),
    })?;
    let spec: NnSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid network spec: {e}")))?;
    let d = Dataset::load_csv(&args.data, &args.label)?;
    let report = efficiency_and_classification(&spec, &d)?;
    let mc = match args.mc_samples {
        Some(samples) => {
            let est = mc_nn_initial_energy(&spec, &d, samples, args.seed)?;
            Some(OracleInfo {
                estimate: Metric::from(est.estimate),
                stderr: Metric::opt(est.stderr),
                samples: est.samples,
            })
        }
        None => None,
    };
    emit(args.out.as_ref(), &to_json_string(&LayerReportJson::from_report(&report, mc)))?;
    Ok(0)
}

fn shift(args: ShiftArgs) -> Result<u8, CliError> {
    if args.data.len() < 2 {
        return Err(CliError::config("shift needs at least two --data files".into()));
    }
    let datasets: Vec<Dataset> = args
        .data
        .iter()
        .map(|p| Dataset::load_csv(p, &args.label))
        .collect::<Result<_, _>>()?;
    let form = args.energy.form()?;
    let dist = args.init.dist(datasets[0].param_dim())?;
    let cfg = PipelineConfig {
        joint: JointModelConfig {
            marginal: match args.marginal {
                MarginalArg::Empirical => MarginalSpec::Empirical,
                MarginalArg::Uniform => MarginalSpec::UniformOverRange,
            },
            noise: None,
            x_bins: args.bins,
        },
        mc_samples: args.samples,
        seed: args.seed,
        solver: SolverOptions::default(),
    };
    let steps = refresh_pipeline(&datasets, &form, &dist, &cfg)?;
    let report = ShiftReportJson::new(&steps, cfg.joint.marginal);
    emit(args.out.as_ref(), &to_json_string(&report))?;
    Ok(0)
}

fn mix(args: MixArgs) -> Result<u8, CliError> {
    if args.data.len() != 2 {
        return Err(CliError::config("mix needs exactly two --data files".into()));
    }
    let a = Dataset::load_csv(&args.data[0], &args.label)?;
    let b = Dataset::load_csv(&args.data[1], &args.label)?;
    let form = args.energy.form()?;
    let family = match args.init {
        InitArg::Normal => AsymptoticFamily::Normal,
        InitArg::Uniform => AsymptoticFamily::Uniform,
        InitArg::Mixed => {
            return Err(CliError::config("mix needs --init normal or uniform".into()))
        }
    };
    let report = mixing_experiment(&a, &b, &form, family, args.scale)?;
    emit(args.out.as_ref(), &to_json_string(&MixingReportJson::from(&report)))?;
    Ok(0)
}

fn entropy_demo(args: EntropyDemoArgs) -> Result<u8, CliError> {
    let mut out = String::from("case,delta,gridEntropy,diffEntropy,reconstructed,error,pass\n");
    let mut all_pass = true;
    let cases = [
        (
            "normal",
            InitDistribution::diagonal_normal(vec![args.sigma])?,
            args.halfwidth_sigmas * args.sigma,
        ),
        (
            "uniform",
            InitDistribution::uniform_box(vec![args.length])?,
            args.length / 2.0,
        ),
    ];
    for (name, dist, halfwidth) in &cases {
        let s_diff = differential_entropy(dist);
        for &delta in &args.deltas {
            let s_grid = discrete_entropy_grid(dist, delta, *halfwidth)?;
            let reconstructed = s_grid + delta.ln();
            let error = (reconstructed - s_diff).abs() / s_diff.abs().max(1.0);
            let pass = error < 0.01;
            all_pass &= pass;
            out.push_str(&format!(
                "{name},{delta},{s_grid:.9},{s_diff:.9},{reconstructed:.9},{error:.3e},{}\n",
                if pass { "pass" } else { "fail" }
            ));
        }
    }
    emit(args.out.as_ref(), &out)?;
    Ok(if all_pass { 0 } else { 1 })
}
