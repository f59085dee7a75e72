//! Command-line front end.
//!
//! Exit codes: 0 success, 1 locality verification failed, 2 configuration or
//! parse error, 3 Monte Carlo internal inconsistency, 4 acceptance floor
//! breached. Output goes to stdout (or `--out-file`), diagnostics to stderr.
//! All randomness derives from `--seed`; output bytes do not depend on
//! `--parallelism`.

pub mod files;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    chsh, estimate_correlations, mi_finite_settings_tb, mi_gg_uniform, mi_tb_quadrature,
    singlet_correlation, singlet_table, verify_bell_local, CorrelationTable, EstimateOptions,
    MIEstimate, MIMethod, DEFAULT_PANELS,
};
use crate::error::{Error, Result};
use crate::geom::RandomSource;
use crate::models::{
    brans_build, input_broadcast_build, BellSampler, ExactCsModel, FiniteSettings, GisinGisin,
    SettingsSpec, TonerBacon,
};
use crate::probcore::InfoBits;
use crate::transforms::{
    comm_to_cs, det_to_cs, TransformOptions, TransformReport, DEFAULT_ACCEPTANCE_FLOOR,
    EXACT_TOLERANCE, SIGMA_GATE,
};
use files::{format_real, ChshRecord, DetectionRecord, ModelFile, Real, TableFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;
pub const EXIT_ACCEPTANCE_FLOOR: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "measdep", version, about = "Bell-local models with correlated settings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a correlation table by simulating a model.
    Simulate(SimulateArgs),
    /// Compute I(x,y:λ) for one of the built-in targets or a model file.
    MutualInfo(MutualInfoArgs),
    /// Turn a model into a correlated-settings model and report on it.
    Transform(TransformArgs),
    /// Check Bell locality of a finite model file.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Tb,
    Gg,
    Brans,
    InputBroadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Chsh,
    Parallel,
    /// Independent uniform directions on the sphere.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    TbUniform,
    GgUniform,
    TbFinite,
    ExactModelFile,
}

#[derive(Debug, Clone, Args)]
pub struct SettingsArgs {
    #[arg(long, value_enum, conflicts_with = "settings_file")]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub settings_file: Option<PathBuf>,
    /// Replaces the input distribution P(x,y) of the chosen settings.
    #[arg(long)]
    pub input_dist_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub parallelism: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[command(flatten)]
    pub settings: SettingsArgs,
    /// Table to reproduce (brans, input-broadcast); default is the singlet.
    #[arg(long)]
    pub correlations_file: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MutualInfoArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    #[command(flatten)]
    pub settings: SettingsArgs,
    /// Finite model for `exact-model-file`.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Simpson panels for `tb-uniform`.
    #[arg(long, default_value_t = DEFAULT_PANELS)]
    pub panels: usize,
    /// μ samples for `tb-finite`.
    #[arg(long, default_value_t = 100_000)]
    pub mu_samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub parallelism: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[arg(long)]
    pub correlations_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ACCEPTANCE_FLOOR)]
    pub acceptance_floor: f64,
    #[arg(long, default_value_t = DEFAULT_PANELS)]
    pub panels: usize,
    /// Also write the model (or sampler descriptor) alone to this file.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// What a command produced: the bytes to write and the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub exit_code: i32,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Inconsistent(_) => EXIT_INCONSISTENT,
        Error::AcceptanceFloor { .. } => EXIT_ACCEPTANCE_FLOOR,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first), runs, writes output, and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => match write_output(&cli, &out.text) {
            Ok(()) => out.exit_code,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_output(cli: &Cli, text: &str) -> Result<()> {
    let target = match &cli.command {
        Command::Simulate(a) => &a.out.out_file,
        Command::MutualInfo(a) => &a.out.out_file,
        Command::Transform(a) => &a.out.out_file,
        Command::Verify(a) => &a.out.out_file,
    };
    match target {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Runs a parsed command without touching stdout.
pub fn execute(cli: &Cli) -> Result<CommandOutput> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::MutualInfo(a) => cmd_mutual_info(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn ok(text: String) -> Result<CommandOutput> {
    Ok(CommandOutput { text, exit_code: EXIT_OK })
}

/// Preset or settings file (default: CHSH), then the optional P(x,y) file.
pub fn resolve_settings(args: &SettingsArgs) -> Result<SettingsSpec> {
    let spec = match (&args.preset, &args.settings_file) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("--preset and --settings-file are mutually exclusive".into()))
        }
        (_, Some(path)) => SettingsSpec::Finite(files::read_settings(path)?),
        (Some(Preset::Parallel), None) => SettingsSpec::Finite(FiniteSettings::parallel()),
        (Some(Preset::Uniform), None) => SettingsSpec::ContinuousUniform,
        (Some(Preset::Chsh), None) | (None, None) => SettingsSpec::Finite(FiniteSettings::chsh()),
    };
    match &args.input_dist_file {
        None => Ok(spec),
        Some(path) => {
            let input = files::read_input_distribution(path)?;
            match spec {
                SettingsSpec::Finite(f) => Ok(SettingsSpec::Finite(f.with_input(input)?)),
                SettingsSpec::ContinuousUniform => Err(Error::Config(
                    "an input distribution needs a finite settings list".into(),
                )),
            }
        }
    }
}

fn require_finite(spec: SettingsSpec, what: &str) -> Result<FiniteSettings> {
    match spec {
        SettingsSpec::Finite(f) => Ok(f),
        SettingsSpec::ContinuousUniform => {
            Err(Error::Config(format!("{what} needs a finite settings list")))
        }
    }
}

/// The table a finite model should reproduce: the file if given (with the
/// requested settings' P(x,y) when a preset or file was named), else the
/// singlet on `settings`.
fn target_table(file: &Option<PathBuf>, settings: &FiniteSettings) -> Result<CorrelationTable> {
    match file {
        None => singlet_table(settings),
        Some(path) => {
            let t = files::read_table(path)?;
            if t.settings().alice() != settings.alice() || t.settings().bob() != settings.bob() {
                return Err(Error::Config(
                    "correlations file settings differ from the selected settings".into(),
                ));
            }
            Ok(t)
        }
    }
}

/// When a correlations file is given without explicit settings, its own
/// settings (and P(x,y)) are used.
fn settings_for_table(args: &SettingsArgs, file: &Option<PathBuf>) -> Result<SettingsSpec> {
    if let (None, None, Some(path)) = (&args.preset, &args.settings_file, file) {
        let t = files::read_table(path)?;
        let mut s = t.settings().clone();
        if let Some(p) = &args.input_dist_file {
            s = s.with_input(files::read_input_distribution(p)?)?;
        }
        return Ok(SettingsSpec::Finite(s));
    }
    resolve_settings(args)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<CommandOutput> {
    let spec = settings_for_table(&a.settings, &a.correlations_file)?;
    let settings = require_finite(spec, "simulate")?;
    let rng = RandomSource::new(a.run.seed);
    let opts = EstimateOptions {
        cycle: false,
        parallelism: a.run.parallelism as usize,
    };

    let (name, target, table) = match a.model {
        ModelKind::Tb => (
            "toner-bacon",
            singlet_table(&settings)?,
            estimate_correlations(&TonerBacon, &settings, a.run.rounds, &rng, &opts)?,
        ),
        ModelKind::Gg => (
            "gisin-gisin",
            singlet_table(&settings)?,
            estimate_correlations(&GisinGisin, &settings, a.run.rounds, &rng, &opts)?,
        ),
        ModelKind::Brans => {
            let target = target_table(&a.correlations_file, &settings)?;
            let model = brans_build(&target, &settings)?;
            let table = estimate_correlations(&model.player(), &settings, a.run.rounds, &rng, &opts)?;
            ("brans", target, table)
        }
        ModelKind::InputBroadcast => {
            let target = target_table(&a.correlations_file, &settings)?;
            let model = input_broadcast_build(&target, &settings)?;
            let table = estimate_correlations(&model as &dyn BellSampler, &settings, a.run.rounds, &rng, &opts)?;
            ("input-broadcast", target, table)
        }
    };

    let file = annotate(&table, &target, name, a.run.rounds, a.run.seed);
    match a.out.output {
        Format::Json => ok(files::to_json(&file)?),
        Format::Csv => ok(table_csv(&file)),
    }
}

/// Adds correlators, standard errors, singlet and target columns, 4σ flags,
/// CHSH (for 2×2 tables) and overall detection efficiencies.
fn annotate(table: &CorrelationTable, target: &CorrelationTable, model: &str, rounds: u64, seed: u64) -> TableFile {
    let mut file = TableFile::from_table(table);
    file.model = Some(model.to_string());
    file.rounds = Some(rounds);
    file.seed = Some(seed);
    let s = table.settings();
    for rec in &mut file.cells {
        let cell = table.cell(rec.x, rec.y);
        let want = target.cell(rec.x, rec.y);
        rec.quantum = Some(Real(singlet_correlation(s.alice()[rec.x], s.bob()[rec.y])));
        if want.is_empty() {
            continue;
        }
        rec.target = Some(Real(want.correlator()));
        if cell.is_empty() {
            rec.flagged = Some(s.input().get(rec.x, rec.y) > 0.0);
            continue;
        }
        let e = cell.correlator();
        let se = cell.correlator_std_error();
        let d = (e - want.correlator()).abs();
        let sigma = if d <= EXACT_TOLERANCE {
            0.0
        } else if se > 0.0 {
            d / se
        } else {
            f64::INFINITY
        };
        rec.correlator = Some(Real(e));
        rec.std_error = Some(Real(se));
        rec.prob_std_errors = Some(cell.std_errors().map(Real));
        rec.deviation_sigma = Some(Real(sigma));
        rec.flagged = Some(sigma > SIGMA_GATE);
    }
    if s.n_alice() == 2 && s.n_bob() == 2 {
        if let Ok(v) = chsh(table, 0, 1, 0, 1) {
            file.chsh = Some(ChshRecord {
                s: Real(v.s),
                std_error: Real(v.std_error),
                abs_s: Real(v.s.abs()),
            });
        }
    }
    file.detection = table.total_detection().as_ref().map(DetectionRecord::from);
    file
}

fn opt_real(v: Option<Real>) -> String {
    v.map(|r| format_real(r.0)).unwrap_or_default()
}

fn opt_display<T: ToString>(v: Option<T>) -> String {
    v.map(|t| t.to_string()).unwrap_or_default()
}

fn table_csv(file: &TableFile) -> String {
    let mut out = String::from(
        "x,y,pp,pm,mp,mm,n,correlator,std_error,quantum,target,deviation_sigma,flagged,alice_efficiency,bob_efficiency\n",
    );
    for c in &file.cells {
        let (ea, eb) = match &c.detection {
            Some(d) => (opt_real(d.alice_efficiency), opt_real(d.bob_efficiency)),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.x,
            c.y,
            format_real(c.pp.0),
            format_real(c.pm.0),
            format_real(c.mp.0),
            format_real(c.mm.0),
            c.n,
            opt_real(c.correlator),
            opt_real(c.std_error),
            opt_real(c.quantum),
            opt_real(c.target),
            opt_real(c.deviation_sigma),
            opt_display(c.flagged),
            ea,
            eb
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct MiOutput {
    target: &'static str,
    value: Real,
    method: MIMethod,
    uncertainty: Real,
    /// H(m) or the message length where defined.
    bound: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    panels: Option<usize>,
}

fn cmd_mutual_info(a: &MutualInfoArgs) -> Result<CommandOutput> {
    let out = match a.target {
        Target::TbUniform => {
            let est = mi_tb_quadrature(a.panels)?;
            mi_output("tb-uniform", est, Some(1.0), None, None, Some(a.panels))
        }
        Target::GgUniform => mi_output("gg-uniform", mi_gg_uniform(), None, None, None, None),
        Target::TbFinite => {
            let settings = require_finite(resolve_settings(&a.settings)?, "tb-finite")?;
            let est = mi_finite_settings_tb(
                &settings,
                a.mu_samples,
                &RandomSource::new(a.seed),
                a.parallelism as usize,
            )?;
            mi_output("tb-finite", est, Some(1.0), Some(a.seed), Some(a.mu_samples), None)
        }
        Target::ExactModelFile => {
            let path = a
                .model_file
                .as_ref()
                .ok_or_else(|| Error::Config("exact-model-file needs --model-file".into()))?;
            let model = ExactCsModel::from_table(files::read_model(path)?)?;
            let hidden = model.hidden_variables();
            if hidden.is_empty() {
                return Err(Error::Config("model has no hidden variables".into()));
            }
            let value = model.mutual_information(&["x", "y"], &hidden)?;
            let bound = if hidden.contains(&"m") {
                Some(model.table().entropy(&["m"])?.bits())
            } else {
                None
            };
            let est = MIEstimate {
                value,
                method: MIMethod::Exact,
                uncertainty: 0.0,
            };
            mi_output("exact-model-file", est, bound, None, None, None)
        }
    };
    match a.out.output {
        Format::Json => ok(files::to_json(&out)?),
        Format::Csv => ok(format!(
            "target,value,method,uncertainty,bound\n{},{},{},{},{}\n",
            out.target,
            format_real(out.value.0),
            method_name(out.method),
            format_real(out.uncertainty.0),
            opt_real(out.bound)
        )),
    }
}

fn method_name(m: MIMethod) -> &'static str {
    match m {
        MIMethod::Exact => "exact",
        MIMethod::ClosedForm => "closed-form",
        MIMethod::Quadrature => "quadrature",
        MIMethod::MonteCarlo => "monte-carlo",
    }
}

fn mi_output(
    target: &'static str,
    est: MIEstimate,
    bound: Option<f64>,
    seed: Option<u64>,
    samples: Option<u64>,
    panels: Option<usize>,
) -> MiOutput {
    MiOutput {
        target,
        value: Real(est.value.bits()),
        method: est.method,
        uncertainty: Real(est.uncertainty),
        bound: bound.map(Real),
        seed,
        samples,
        panels,
    }
}

fn cmd_transform(a: &TransformArgs) -> Result<CommandOutput> {
    let options = TransformOptions {
        rounds: a.run.rounds,
        seed: a.run.seed,
        parallelism: a.run.parallelism as usize,
        acceptance_floor: a.acceptance_floor,
    };
    let (report, model) = match a.model {
        ModelKind::Tb => {
            let spec = resolve_settings(&a.settings)?;
            let (_, mut report) = comm_to_cs(&TonerBacon, &spec, &options)?;
            if spec.finite().is_none() {
                report.mi_value = Some(mi_tb_quadrature(a.panels)?);
            }
            (report, ModelDoc::Sampler(descriptor("toner-bacon", &["lambda1", "lambda2", "m"], &spec, None)))
        }
        ModelKind::Gg => {
            let spec = resolve_settings(&a.settings)?;
            let (_, mut report) = det_to_cs(&GisinGisin, &spec, &options)?;
            if spec.finite().is_none() {
                report.mi_value = Some(mi_gg_uniform());
            }
            (
                report,
                ModelDoc::Sampler(descriptor("gisin-gisin", &["lambda"], &spec, Some(a.acceptance_floor))),
            )
        }
        ModelKind::InputBroadcast => {
            let settings = require_finite(
                settings_for_table(&a.settings, &a.correlations_file)?,
                "input-broadcast",
            )?;
            let target = target_table(&a.correlations_file, &settings)?;
            let ib = input_broadcast_build(&target, &settings)?;
            let (model, mut report) = comm_to_cs(&ib, &SettingsSpec::Finite(settings), &options)?;
            let exact = model
                .exact()
                .ok_or_else(|| Error::Inconsistent("μ support was not enumerated".into()))?;
            // Compare against the supplied table rather than the model's copy.
            report.correlation_deviation = exact.correlation_table(target.settings())?.max_deviation(&target);
            report.within_tolerance &= report.correlation_deviation <= EXACT_TOLERANCE;
            (report, ModelDoc::Finite(ModelFile::from_distribution(exact.table())))
        }
        ModelKind::Brans => {
            let settings =
                require_finite(settings_for_table(&a.settings, &a.correlations_file)?, "brans")?;
            let target = target_table(&a.correlations_file, &settings)?;
            let model = brans_build(&target, &settings)?;
            (brans_report(&model, &target)?, ModelDoc::Finite(ModelFile::from_distribution(model.table())))
        }
    };

    if let Some(path) = &a.model_out {
        std::fs::write(path, files::to_json(&model)?)?;
    }
    match a.out.output {
        Format::Json => ok(files::to_json(&TransformDoc { report, model })?),
        Format::Csv => ok(report_csv(&report)),
    }
}

/// A finite model file where the construction is exact, else a sampler
/// descriptor.
#[derive(Debug, Serialize)]
#[serde(untagged)]
enum ModelDoc {
    Finite(ModelFile),
    Sampler(SamplerDescriptor),
}

#[derive(Debug, Serialize)]
struct TransformDoc {
    report: TransformReport,
    model: ModelDoc,
}

#[derive(Debug, Serialize)]
struct SamplerDescriptor {
    descriptor: &'static str,
    source: String,
    hidden: Vec<String>,
    /// "continuous-uniform" or a settings object.
    settings: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    acceptance_floor: Option<f64>,
}

fn brans_report(model: &ExactCsModel, target: &CorrelationTable) -> Result<TransformReport> {
    let reproduced = model.correlation_table(target.settings())?;
    let deviation = reproduced.max_deviation(target);
    let declared = target.settings().input().matrix();
    let got = model.input_distribution()?;
    let input_deviation = declared
        .iter()
        .flatten()
        .zip(got.matrix().iter().flatten())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let hidden = model.hidden_variables();
    Ok(TransformReport {
        source: "brans".into(),
        exact: true,
        correlation_deviation: deviation,
        input_deviation: Some(input_deviation),
        max_sigma: None,
        within_tolerance: deviation <= EXACT_TOLERANCE && input_deviation <= EXACT_TOLERANCE,
        rounds: None,
        acceptance_rate: None,
        mi_value: Some(MIEstimate {
            value: model.mutual_information(&["x", "y"], &hidden)?,
            method: MIMethod::Exact,
            uncertainty: 0.0,
        }),
        mi_bound: Some(model.table().entropy(&["x", "y"])?),
    })
}

fn descriptor(source: &str, hidden: &[&str], spec: &SettingsSpec, floor: Option<f64>) -> SamplerDescriptor {
    let settings = match spec.finite() {
        None => json!("continuous-uniform"),
        Some(f) => json!({
            "alice_settings": f.alice().iter().map(|v| v.to_array()).collect::<Vec<_>>(),
            "bob_settings": f.bob().iter().map(|v| v.to_array()).collect::<Vec<_>>(),
            "p_xy": f.input().matrix(),
        }),
    };
    SamplerDescriptor {
        descriptor: "sampler",
        source: source.to_string(),
        hidden: hidden.iter().map(|h| h.to_string()).collect(),
        settings,
        acceptance_floor: floor,
    }
}

fn report_csv(r: &TransformReport) -> String {
    let bits = |v: Option<InfoBits>| v.map(|b| format_real(b.bits())).unwrap_or_default();
    let mut out = String::from("field,value\n");
    let rows: [(&str, String); 11] = [
        ("source", r.source.clone()),
        ("exact", r.exact.to_string()),
        ("correlation_deviation", format_real(r.correlation_deviation)),
        ("input_deviation", r.input_deviation.map(format_real).unwrap_or_default()),
        ("max_sigma", r.max_sigma.map(format_real).unwrap_or_default()),
        ("within_tolerance", r.within_tolerance.to_string()),
        ("rounds", opt_display(r.rounds)),
        ("acceptance_rate", r.acceptance_rate.map(format_real).unwrap_or_default()),
        ("mi_value", bits(r.mi_value.map(|m| m.value))),
        ("mi_uncertainty", r.mi_value.map(|m| format_real(m.uncertainty)).unwrap_or_default()),
        ("mi_bound", bits(r.mi_bound)),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

fn cmd_verify(a: &VerifyArgs) -> Result<CommandOutput> {
    if !(a.tol >= 0.0) {
        return Err(Error::Config(format!("tolerance must be non-negative, got {}", a.tol)));
    }
    let model = ExactCsModel::from_table(files::read_model(&a.model_file)?)?;
    let report = verify_bell_local(&model, a.tol)?;
    let text = match a.out.output {
        Format::Json => files::to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("condition,max_deviation,passed\n");
            for c in &report.checks {
                let _ = writeln!(s, "{},{},{}", c.condition, format_real(c.max_deviation), c.max_deviation <= a.tol);
            }
            s
        }
    };
    if !report.passed {
        eprintln!(
            "locality check failed: max deviation {:e} > tolerance {:e}",
            report.max_deviation, a.tol
        );
    }
    Ok(CommandOutput {
        text,
        exit_code: if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<CommandOutput> {
        let cli = Cli::try_parse_from(std::iter::once("measdep").chain(args.iter().copied()))
            .map_err(|e| Error::Config(e.to_string()))?;
        execute(&cli)
    }

    #[test]
    fn preset_and_file_conflict() {
        assert!(run(&["simulate", "--model", "tb", "--preset", "chsh", "--settings-file", "x.json"]).is_err());
    }

    #[test]
    fn simulate_needs_finite_settings() {
        let err = run(&["simulate", "--model", "tb", "--preset", "uniform", "--rounds", "10"]).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn zero_rounds_rejected_by_parser() {
        assert!(Cli::try_parse_from(["measdep", "simulate", "--model", "tb", "--rounds", "0"]).is_err());
    }

    #[test]
    fn tb_finite_reports_one_bit_bound() {
        let out = run(&["mutual-info", "--target", "tb-finite", "--preset", "chsh", "--mu-samples", "2000"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert_eq!(v["bound"].as_f64(), Some(1.0));
        assert!(v["value"].as_f64().unwrap() <= 1.0);
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let out = run(&["simulate", "--model", "gg", "--rounds", "2000", "--output", "csv"]).unwrap();
        assert_eq!(out.text.lines().count(), 5);
        assert!(out.text.starts_with("x,y,pp"));
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::Inconsistent("x".into())), 3);
        assert_eq!(
            exit_code(&Error::AcceptanceFloor {
                floor: 1e-6,
                accepted: 0,
                attempts: 1
            }),
            4
        );
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
    }
}
