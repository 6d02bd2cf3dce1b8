use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pulsed_rc::harness::{
    emit_figure_data, read_records, run_experiment, run_sweep, with_threads, write_text, Axis,
    ExperimentSpec, Figure, ResultsWriter, RunOptions, TaskSpec,
};
use pulsed_rc::tasks::{gen_narma, write_csv, NarmaConfig, NarmaSum};
use pulsed_rc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pulsed-rc",
    version,
    about = "Delay-based phase-encoded reservoir computing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment from a spec file.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write the first replication's test trace here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Run the Cartesian product of one or more axes over a spec file.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `field=v1,v2,...` or `field=a..b`; repeat for more axes.
        #[arg(long = "axis")]
        axes: Vec<String>,
    },
    /// Write a NARMA-N dataset as CSV with columns `u,y`.
    NarmaGen {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        input_low: f64,
        #[arg(long, default_value_t = 0.5)]
        input_high: f64,
        #[arg(long)]
        compat_narma_sum: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn results into a plot-ready table.
    Figure {
        #[arg(long, value_enum)]
        kind: FigureKind,
        /// Results file (pearson-vs-n).
        #[arg(long, required_if_eq("kind", "pearson-vs-n"))]
        records: Option<PathBuf>,
        /// Spec file to rerun for a prediction trace (prediction-trace).
        #[arg(long, required_if_eq("kind", "prediction-trace"))]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Use the N-term NARMA feedback sum.
    #[arg(long)]
    compat_narma_sum: bool,
    /// Write duration_ms as 0 so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureKind {
    PearsonVsN,
    PredictionTrace,
}

impl Common {
    fn load(&self) -> Result<ExperimentSpec> {
        load_spec(
            &self.spec,
            self.seed,
            self.replications,
            self.compat_narma_sum,
        )
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            threads: self.threads,
            include_timing: !self.no_timing,
        }
    }
}

fn load_spec(
    path: &Path,
    seed: Option<u64>,
    replications: Option<usize>,
    compat: bool,
) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(r) = replications {
        spec.replications = r;
    }
    if compat {
        match &mut spec.task {
            TaskSpec::Narma { sum, .. } => *sum = NarmaSum::Compat,
            other => {
                return Err(Error::Spec(format!(
                    "--compat-narma-sum needs a narma task, spec has {}",
                    other.label()
                )))
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, trace_out } => {
            let spec = common.load()?;
            let opts = common.options();
            let mut writer = ResultsWriter::create(&common.out, &spec, &[])?;
            let mut record = with_threads(opts.threads, || run_experiment(&spec))??;
            if !opts.include_timing {
                record.duration_ms = 0;
            }
            writer.write(&record)?;
            if let Some(path) = trace_out {
                write_text(
                    &path,
                    &emit_figure_data(&[record.clone()], Figure::PredictionTrace { record: 0 })?,
                )?;
            }
            eprintln!(
                "pearson {:.4} +/- {:.4}, nrmse {:.4} +/- {:.4} over {} replications",
                record.pearson_mean,
                record.pearson_std,
                record.nrmse_mean,
                record.nrmse_std,
                record.replications
            );
        }
        Command::Sweep { common, axes } => {
            let spec = common.load()?;
            let axes = axes
                .iter()
                .map(|a| Axis::parse(a))
                .collect::<Result<Vec<_>>>()?;
            let mut writer = ResultsWriter::create(&common.out, &spec, &axes)?;
            let records = run_sweep(&spec, &axes, common.options(), |r| {
                eprintln!(
                    "[{}] {}{} V={} pearson {:.4} +/- {:.4}",
                    r.record,
                    r.task,
                    r.order.map(|n| format!(" N={n}")).unwrap_or_default(),
                    r.num_nodes,
                    r.pearson_mean,
                    r.pearson_std
                );
                writer.write(r)
            })?;
            eprintln!(
                "{} records written to {}",
                records.len(),
                common.out.display()
            );
        }
        Command::NarmaGen {
            order,
            length,
            seed,
            input_low,
            input_high,
            compat_narma_sum,
            out,
        } => {
            let cfg = NarmaConfig {
                order,
                length,
                seed,
                input_low,
                input_high,
                sum: if compat_narma_sum {
                    NarmaSum::Compat
                } else {
                    NarmaSum::Inclusive
                },
            };
            cfg.validate().map_err(|e| Error::Spec(e.to_string()))?;
            let ds = gen_narma(&cfg)?;
            write_csv(&ds, &out)?;
        }
        Command::Figure {
            kind,
            records,
            spec,
            out,
        } => {
            let text = match kind {
                FigureKind::PearsonVsN => {
                    let path =
                        records.ok_or_else(|| Error::Spec("--records is required".into()))?;
                    emit_figure_data(&read_records(&path)?, Figure::PearsonVsN)?
                }
                FigureKind::PredictionTrace => {
                    let path = spec.ok_or_else(|| Error::Spec("--spec is required".into()))?;
                    let mut s = load_spec(&path, None, None, false)?;
                    s.replications = 1;
                    let record = run_experiment(&s)?;
                    emit_figure_data(&[record], Figure::PredictionTrace { record: 0 })?
                }
            };
            write_text(&out, &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_spec_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
