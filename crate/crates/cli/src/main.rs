use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use jamsim::harness::{
    export_results, run_adaptive, run_gan_study, run_sweep, write_table, ExportFormat, GanSection,
    JammerChoice, RetrainPolicy, ScenarioConfig, Simulator, SweepAxis, SweepSpec, Tabular,
    DEFAULT_STUDY_ARMS, SWEEP_P_MIN,
};
use jamsim::jammer::PowerBudget;
use jamsim::metrics::{compute_metrics, load_slot_log, metrics_to_json, save_metrics, save_slot_log, Subject};

/// Marks errors caused by the invocation rather than by the run.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "jamsim", version, about = "Simulate learning-based jamming of a cognitive transmitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train both agents and evaluate one scenario.
    Run(Scenario),
    /// Run a scenario for every value of one parameter and several seeds.
    Sweep {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values; gan-counts takes REAL+SYNTH pairs.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 5)]
        replications: usize,
    },
    /// Compare the jammer's classifier trained on few real, few real plus
    /// GAN-generated, and many real samples.
    GanAugment {
        #[command(flatten)]
        scenario: Scenario,
        /// Also write the GAN loss trace as CSV.
        #[arg(long)]
        loss_trace: Option<PathBuf>,
    },
    /// Search the transmitter's defense level online.
    AdaptDefense(Scenario),
    /// Recompute metrics from a saved slot log.
    Export {
        /// Slot log CSV written by `run`.
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value = "transmitter")]
        subject: SubjectArg,
        /// Output JSON file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    JammerType,
    Tau,
    #[value(name = "p_avg", alias = "p-avg")]
    PAvg,
    #[value(name = "p_d", alias = "p-d")]
    PD,
    #[value(name = "mobility-circle-R", alias = "mobility-circle-r")]
    CircleR,
    #[value(name = "mobility-circle-B", alias = "mobility-circle-b")]
    CircleB,
    GanCounts,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubjectArg {
    Transmitter,
    Jammer,
}

#[derive(Clone, Copy, ValueEnum)]
enum JammerArg {
    None,
    Dl,
    Sensing,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum RetrainArg {
    PerIteration,
    Never,
}

/// Scenario settings shared by the simulation subcommands. Flags override
/// the configuration file, which overrides the defaults.
#[derive(Args)]
struct Scenario {
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    jammer: Option<JammerArg>,
    /// Sensing jammer threshold.
    #[arg(long)]
    tau: Option<f64>,
    /// Random jammer probability.
    #[arg(long)]
    p_jam: Option<f64>,
    /// Average jamming power budget for the deep-learning jammer.
    #[arg(long)]
    p_avg: Option<f64>,
    /// Defense level: fraction of slots whose decision T inverts.
    #[arg(long)]
    p_d: Option<f64>,
    #[arg(long, requires = "gan_synth")]
    gan_real: Option<usize>,
    #[arg(long, requires = "gan_real")]
    gan_synth: Option<usize>,
    #[arg(long, value_enum)]
    retrain_jammer: Option<RetrainArg>,
    /// Output file, or directory for `run`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Scenario {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                ScenarioConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(j) = self.jammer {
            cfg.jammer.kind = match j {
                JammerArg::None => JammerChoice::None,
                JammerArg::Dl => JammerChoice::Dl,
                JammerArg::Sensing => JammerChoice::Sensing,
                JammerArg::Random => JammerChoice::Random,
            };
        }
        if let Some(tau) = self.tau {
            cfg.jammer.tau = tau;
        }
        if let Some(p) = self.p_jam {
            cfg.jammer.p_jam = p;
        }
        if let Some(p_avg) = self.p_avg {
            let (p_min, p_max) = match cfg.jammer.budget {
                Some(b) => (b.p_min, b.p_max),
                None => (SWEEP_P_MIN, cfg.jammer.power),
            };
            cfg.jammer.budget = Some(PowerBudget { p_min, p_max, p_avg });
        }
        if let Some(p_d) = self.p_d {
            cfg.transmitter.defense.p_d = p_d;
        }
        if let (Some(n_real), Some(n_synthetic)) = (self.gan_real, self.gan_synth) {
            let model = cfg.gan.map(|g| g.model).unwrap_or_default();
            cfg.gan = Some(GanSection {
                n_real,
                n_synthetic,
                model,
            });
        }
        if let Some(r) = self.retrain_jammer {
            cfg.jammer.retrain = match r {
                RetrainArg::PerIteration => RetrainPolicy::PerIteration,
                RetrainArg::Never => RetrainPolicy::Never,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_axis(axis: Axis, values: &[String]) -> Result<SweepAxis> {
    let floats = || -> Result<Vec<f64>> {
        values
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("not a number: {v:?}"))))
            .collect()
    };
    Ok(match axis {
        Axis::JammerType => SweepAxis::JammerType(
            values
                .iter()
                .map(|v| JammerChoice::parse(v.trim()).ok_or_else(|| usage(format!("unknown jammer {v:?}"))))
                .collect::<Result<_>>()?,
        ),
        Axis::Tau => SweepAxis::Tau(floats()?),
        Axis::PAvg => SweepAxis::PAvg(floats()?),
        Axis::PD => SweepAxis::PD(floats()?),
        Axis::CircleR => SweepAxis::CircleR(floats()?),
        Axis::CircleB => SweepAxis::CircleB(floats()?),
        Axis::GanCounts => SweepAxis::GanCounts(
            values
                .iter()
                .map(|v| {
                    let (r, s) = v
                        .trim()
                        .split_once('+')
                        .ok_or_else(|| usage(format!("expected REAL+SYNTH, got {v:?}")))?;
                    let n = |x: &str| x.parse::<usize>().map_err(|_| usage(format!("bad count in {v:?}")));
                    Ok((n(r)?, n(s)?))
                })
                .collect::<Result<_>>()?,
        ),
    })
}

fn emit_table<T: Tabular>(rows: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => export_results(rows, path, ExportFormat::from_path(path))?,
        None => write_table(rows, ExportFormat::Csv, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut sim = Simulator::new();
    match cli.command {
        Command::Run(s) => {
            let cfg = s.config()?;
            let out = sim.run_scenario(&cfg)?;
            match &s.out {
                Some(dir) => {
                    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                    save_slot_log(&out.log, &dir.join("slot_log.csv"))?;
                    save_metrics(&out.transmitter, &dir.join("metrics_transmitter.json"))?;
                    save_metrics(&out.jammer, &dir.join("metrics_jammer.json"))?;
                    let summary = serde_json::to_string_pretty(&out.summary)? + "\n";
                    fs::write(dir.join("training_summary.json"), summary)
                        .with_context(|| format!("writing into {}", dir.display()))?;
                }
                None => {
                    print!("{}", metrics_to_json(&out.transmitter));
                    print!("{}", metrics_to_json(&out.jammer));
                }
            }
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            replications,
        } => {
            let cfg = scenario.config()?;
            let spec = SweepSpec {
                axis: parse_axis(axis, &values)?,
                replications,
            };
            let rows = run_sweep(&mut sim, &cfg, &spec)?;
            emit_table(&rows, scenario.out.as_deref())?;
        }
        Command::GanAugment { scenario, loss_trace } => {
            let cfg = scenario.config()?;
            let arms = match cfg.gan {
                Some(g) if scenario.gan_real.is_some() => vec![(g.n_real, 0), (g.n_real, g.n_synthetic)],
                _ => DEFAULT_STUDY_ARMS.to_vec(),
            };
            let out = run_gan_study(&mut sim, &cfg, &arms)?;
            emit_table(&out.rows, scenario.out.as_deref())?;
            if let Some(path) = loss_trace {
                let trace = out.loss_traces.first().map(Vec::as_slice).unwrap_or(&[]);
                let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                jamsim::gan::write_loss_trace(trace, file).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::AdaptDefense(s) => {
            let cfg = s.config()?;
            let out = run_adaptive(&mut sim, &cfg)?;
            emit_table(&out.trajectory, s.out.as_deref())?;
            eprintln!(
                "p_d = {} after {} iterations{}",
                out.p_d,
                out.iterations,
                if out.converged { "" } else { " (not converged)" }
            );
        }
        Command::Export { log, subject, out } => {
            // A malformed log is bad input data, not bad configuration.
            let records = load_slot_log(&log).map_err(|e| anyhow::anyhow!("{e}"))?;
            let subject = match subject {
                SubjectArg::Transmitter => Subject::Transmitter,
                SubjectArg::Jammer => Subject::Jammer,
            };
            let m = compute_metrics(&records, subject)?;
            match out {
                Some(path) => save_metrics(&m, &path)?,
                None => print!("{}", metrics_to_json(&m)),
            }
        }
    }
    Ok(())
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<UsageError>().is_some()
            || c.downcast_ref::<jamsim::Error>().is_some_and(jamsim::Error::is_config_error)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
