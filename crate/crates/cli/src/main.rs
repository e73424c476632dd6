use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tubeslice::constructions::materialize;
use tubeslice::harness::{
    emit_plot_data, run_config, verify_suite, write_atomic, ExperimentConfig, HarnessError, OutputFormat, TraceSpec,
    TubeSpec,
};
use tubeslice::ChunkSet;

#[derive(Parser)]
#[command(
    name = "tubeslice",
    version,
    about = "Lattice sets, dimension traces and tube-slice sweeps"
)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized suites; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Build the set and write its chunk listing (and points, for csv).
    Generate,
    /// Mass-ratio trace over the level schedule.
    Massdim,
    /// Counting-ratio trace over the designated level boxes.
    Countdim,
    /// Slice-ratio trace for one tube.
    Slicedim {
        #[arg(long, allow_hyphen_values = true)]
        u: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<f64>,
        /// Vertical band `[x0, x0 + 1)` instead of `(u, v)`.
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["u", "v"])]
        x0: Option<f64>,
    },
    /// Run the sweeps listed in the config.
    Sweep,
    /// Run a verification suite.
    Verify {
        /// intro, strip, cone, fattened, density or marstrand_mass.
        suite: String,
    },
    /// Merge trace CSVs into `series,level,x,y`.
    EmitPlotData {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

enum Failure {
    Checks,
    Usage(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command needs --config <path>".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.format {
        cfg.experiment.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    Ok(cfg)
}

/// Runs `cfg` into `--out`, or into a scratch directory echoed to stdout.
fn run_and_report(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), Failure> {
    match &cli.out {
        Some(dir) => {
            for p in run_config(cfg, dir)? {
                println!("{}", p.display());
            }
        }
        None => {
            let dir = std::env::temp_dir().join(format!("tubeslice-{}", std::process::id()));
            let res = run_config(cfg, &dir);
            let files = res.inspect_err(|_| {
                let _ = std::fs::remove_dir_all(&dir);
            })?;
            for p in &files {
                print!("{}", std::fs::read_to_string(p).unwrap_or_default());
            }
            let _ = std::fs::remove_dir_all(&dir);
        }
    }
    Ok(())
}

fn only_traces(mut cfg: ExperimentConfig, t: TraceSpec) -> ExperimentConfig {
    cfg.experiment.traces = vec![t];
    cfg.experiment.sweeps.clear();
    cfg.experiment.chunks = None;
    cfg
}

fn emit(out: &Option<PathBuf>, name: &str, body: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            let p = dir.join(name);
            write_atomic(&p, body.as_bytes())?;
            println!("{}", p.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn generate(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let cs = ChunkSet::build(&cfg.construction).map_err(|e| Failure::Usage(format!("construction failed: {e}")))?;
    let listing = serde_json::to_string_pretty(&cs.to_json()).expect("chunk listing serializes");
    emit(&cli.out, "chunks.json", &format!("{listing}\n"))?;
    if cfg.experiment.format == OutputFormat::Csv && cli.out.is_some() {
        let exact: Vec<u32> = cs.levels.iter().filter(|l| l.is_exact()).map(|l| l.m).collect();
        if let (Some(&a), Some(&b)) = (exact.first(), exact.last()) {
            let pts = materialize(&cs, a..=b).map_err(|e| Failure::Usage(format!("materialize failed: {e}")))?;
            emit(&cli.out, "points.csv", &pts.to_csv())?;
        }
    }
    Ok(())
}

fn real_main(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Generate => generate(cli),
        Command::Massdim => {
            let cfg = only_traces(
                load(cli)?,
                TraceSpec::Mass {
                    output: "massdim".into(),
                    scales: None,
                },
            );
            run_and_report(cli, &cfg)
        }
        Command::Countdim => {
            let cfg = only_traces(
                load(cli)?,
                TraceSpec::Counting {
                    output: "countdim".into(),
                    boxes: None,
                },
            );
            run_and_report(cli, &cfg)
        }
        Command::Slicedim { u, v, x0 } => {
            let tube = match (u, v, x0) {
                (_, _, Some(x0)) => TubeSpec::Vertical { x0: *x0 },
                (Some(u), Some(v), None) => TubeSpec::Params(tubeslice::TubeParams { u: *u, v: *v }),
                _ => return Err(Failure::Usage("slicedim needs --u and --v, or --x0".into())),
            };
            let cfg = only_traces(
                load(cli)?,
                TraceSpec::Slice {
                    output: "slicedim".into(),
                    tube,
                },
            );
            cfg.validate()?;
            run_and_report(cli, &cfg)
        }
        Command::Sweep => {
            let mut cfg = load(cli)?;
            if cfg.experiment.sweeps.is_empty() {
                return Err(Failure::Usage("config lists no sweeps".into()));
            }
            cfg.experiment.traces.clear();
            cfg.experiment.chunks = None;
            run_and_report(cli, &cfg)
        }
        Command::Verify { suite } => {
            let seed = match (&cli.config, cli.seed) {
                (_, Some(s)) => s,
                (Some(_), None) => load(cli)?.seed,
                (None, None) => 0,
            };
            let report = verify_suite(suite, seed)?;
            let body = match cli.format {
                Some(Format::Json) => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                _ => report.to_text(),
            };
            let ext = if matches!(cli.format, Some(Format::Json)) {
                "json"
            } else {
                "txt"
            };
            emit(&cli.out, &format!("verify_{suite}.{ext}"), &body)?;
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::EmitPlotData { files } => {
            let body = emit_plot_data(files)?;
            emit(&cli.out, "plot_data.csv", &body)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
