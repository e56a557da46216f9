use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use aulas::coarray::{analyze, CoarrayReport};
use aulas::estimation::{monte_carlo, run_trial, MonteCarloResult, MusicConfig};
use aulas::geometry::{Family, SensorArray};
use aulas::signal::{simulate_snapshots, write_snapshots, Scenario};
use aulas::summary::{self, ArraySummary};
use aulas::verify;
use aulas::CouplingModel;

#[derive(Parser)]
#[command(
    name = "aulas",
    version,
    about = "Sparse array design and co-array DOA experiments"
)]
struct Cli {
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the sensor positions of an array as a descriptor.
    Design(ArraySource),
    /// Co-array metrics, weights and coupling leakage of one array.
    Analyze {
        #[command(flatten)]
        array: ArraySource,
        #[arg(long, default_value = "paper-v")]
        coupling: String,
    },
    /// Metrics for a range of N across families.
    Sweep {
        /// Comma-separated family names.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "aulas,saulas,tsaulas,cotsaulas"
        )]
        families: Vec<Family>,
        #[arg(long, default_value_t = 9)]
        n_min: usize,
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        #[arg(long, default_value = "paper-v")]
        coupling: String,
    },
    /// Simulate snapshots and run co-array MUSIC.
    Music(MusicArgs),
    /// Check the closed-form co-array properties by enumeration.
    VerifyLemmas {
        #[arg(long, default_value_t = 9)]
        n_min: usize,
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        #[arg(long, default_value_t = 5)]
        tsaulas_n_min: usize,
    },
}

#[derive(Args)]
struct ArraySource {
    #[arg(long, requires = "n", conflicts_with = "file")]
    family: Option<Family>,
    #[arg(long)]
    n: Option<usize>,
    /// Array descriptor JSON.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct MusicArgs {
    #[command(flatten)]
    array: ArraySource,
    /// Built-in scenario: fig12 or fig13.
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Scenario JSON.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Coupling preset; fig13 defaults to paper-v, everything else to none.
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = MusicConfig::DEFAULT_STEP)]
    grid_step: f64,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
    /// Also write the first trial's spectrum CSV here.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Also write the first trial's raw snapshots here.
    #[arg(long)]
    dump_snapshots: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

fn validation(msg: impl Into<String>) -> anyhow::Error {
    aulas::Error::Validation(msg.into()).into()
}

fn load_array(src: &ArraySource) -> anyhow::Result<SensorArray> {
    match (&src.family, src.n, &src.file) {
        (Some(f), Some(n), None) => Ok(f.design(n)?),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(SensorArray::from_json(&text)?)
        }
        _ => Err(validation("give either --family with --n, or --file")),
    }
}

fn coupling_preset(name: &str) -> anyhow::Result<Option<CouplingModel>> {
    Ok(match name {
        "none" => None,
        other => Some(CouplingModel::preset(other)?),
    })
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    summary: &'a ArraySummary,
    report: &'a CoarrayReport,
}

#[derive(Serialize)]
struct MusicOutput<'a> {
    rmse_deg: f64,
    detection_rate: f64,
    trials: usize,
    config: &'a MusicConfig,
    scenario: &'a Scenario,
    coupling: Option<&'a CouplingModel>,
    result: &'a MonteCarloResult,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    pass: bool,
    reports: &'a [verify::LemmaReport],
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let output = cli.output.as_deref();
    let ok = ExitCode::SUCCESS;
    match cli.command {
        Command::Design(src) => {
            let p = load_array(&src)?;
            let mut out = open_output(output)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => writeln!(out, "{}", p.to_json())?,
                Format::Csv => {
                    writeln!(out, "position")?;
                    for m in p.positions() {
                        writeln!(out, "{m}")?;
                    }
                }
                Format::Text => writeln!(out, "{p}")?,
            }
            out.flush()?;
        }
        Command::Analyze { array, coupling } => {
            let p = load_array(&array)?;
            let model = CouplingModel::preset(&coupling)?;
            let row = ArraySummary::of(&p, &model)?;
            let mut out = open_output(output)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => write_json(
                    &mut out,
                    &AnalyzeOutput {
                        summary: &row,
                        report: &analyze(&p),
                    },
                )?,
                _ => summary::write_csv(&[row], &mut out)?,
            }
            out.flush()?;
        }
        Command::Sweep {
            families,
            n_min,
            n_max,
            coupling,
        } => {
            if n_min > n_max {
                bail!(validation(format!("empty range {n_min}..={n_max}")));
            }
            let rows =
                summary::sweep(&families, n_min..=n_max, &CouplingModel::preset(&coupling)?)?;
            let mut out = open_output(output)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => write_json(&mut out, &rows)?,
                _ => summary::write_csv(&rows, &mut out)?,
            }
            out.flush()?;
        }
        Command::Music(args) => return music(args, output, cli.format, cli.seed),
        Command::VerifyLemmas {
            n_min,
            n_max,
            tsaulas_n_min,
        } => {
            if n_min > n_max || tsaulas_n_min > n_max {
                bail!(validation("empty N range"));
            }
            let reports = verify::sweep_lemmas(n_min..=n_max, tsaulas_n_min..=n_max)?;
            let pass = reports.iter().all(|r| r.pass());
            let mut out = open_output(output)?;
            match cli.format.unwrap_or(Format::Text) {
                Format::Json => write_json(
                    &mut out,
                    &VerifyOutput {
                        pass,
                        reports: &reports,
                    },
                )?,
                Format::Csv => {
                    writeln!(out, "family,N,closed_form_udofs,brute_force_udofs,pass")?;
                    for r in &reports {
                        writeln!(
                            out,
                            "{},{},{},{},{}",
                            r.family.name(),
                            r.n,
                            r.closed_form_udofs,
                            r.brute_force_udofs,
                            r.pass()
                        )?;
                    }
                }
                Format::Text => write!(out, "{}", verify::render_table(&reports))?,
            }
            out.flush()?;
            if !pass {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ok)
}

fn music(
    args: MusicArgs,
    output: Option<&Path>,
    format: Option<Format>,
    seed: Option<u64>,
) -> anyhow::Result<ExitCode> {
    let p = load_array(&args.array)?;
    let mut scenario = match (&args.preset, &args.scenario) {
        (Some(name), None) => Scenario::preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| validation(format!("scenario {}: {e}", path.display())))?
        }
        _ => return Err(validation("give either --preset or --scenario")),
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    scenario.validate()?;
    let default_coupling = if args.preset.as_deref() == Some("fig13") {
        "paper-v"
    } else {
        "none"
    };
    let coupling = coupling_preset(args.coupling.as_deref().unwrap_or(default_coupling))?;
    if args.grid_step.is_nan() || args.grid_step <= 0.0 {
        return Err(validation("--grid-step must be positive"));
    }
    let cfg = MusicConfig::with_step(-90.0, 90.0, args.grid_step, scenario.num_sources());

    let result = match args.precision {
        Precision::F64 => monte_carlo::<f64>(&p, &scenario, &cfg, args.trials, coupling.as_ref())?,
        Precision::F32 => monte_carlo::<f32>(&p, &scenario, &cfg, args.trials, coupling.as_ref())?,
    };
    let format = format.unwrap_or(Format::Json);
    let spectrum_target = match format {
        Format::Csv => Some(output),
        _ => None,
    };
    if spectrum_target.is_some() || args.spectrum.is_some() {
        let first = match args.precision {
            Precision::F64 => run_trial::<f64>(&p, &scenario, &cfg, coupling.as_ref(), 0)?,
            Precision::F32 => run_trial::<f32>(&p, &scenario, &cfg, coupling.as_ref(), 0)?,
        };
        if let Some(path) = &args.spectrum {
            let mut out = open_output(Some(path))?;
            first.spectrum.write_csv(&mut out)?;
        }
        if let Some(target) = spectrum_target {
            let mut out = open_output(target)?;
            first.spectrum.write_csv(&mut out)?;
        }
    }
    if let Some(path) = &args.dump_snapshots {
        let x = simulate_snapshots::<f64>(&p, &scenario, coupling.as_ref())?;
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write_snapshots(&mut w, &x)?;
        w.flush()?;
    }
    if spectrum_target.is_none() {
        let mut out = open_output(output)?;
        write_json(
            &mut out,
            &MusicOutput {
                rmse_deg: result.rmse_deg,
                detection_rate: result.detection_rate,
                trials: args.trials,
                config: &cfg,
                scenario: &scenario,
                coupling: coupling.as_ref(),
                result: &result,
            },
        )?;
        out.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err
                .downcast_ref::<aulas::Error>()
                .is_some_and(aulas::Error::is_validation);
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}
