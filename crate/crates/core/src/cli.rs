//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::crsite::TimingPreset;
use crate::export;
use crate::scenario::Scenario;
use crate::sim::{replay_reference, required_for, RunLog, Simulation};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fearover",
    version,
    about = "Fear-driven spectrum handover simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its reports.
    Run(RunArgs),
    /// Run a scenario and check the three invariants.
    Validate(ScenarioArgs),
    /// Replay the ten reference handover attempts under each timing preset.
    ReplayTables {
        #[arg(long)]
        preset: Option<TimingPreset>,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override the scenario's timing with a named preset.
    #[arg(long)]
    pub preset: Option<TimingPreset>,
    /// Start at a random position drawn with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output directory; defaults to the scenario's `[output] dir`, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit 1 when any invariant fails.
    #[arg(long)]
    pub strict: bool,
}

impl clap::ValueEnum for TimingPreset {
    fn value_variants<'a>() -> &'a [Self] {
        &TimingPreset::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

fn load(args: &ScenarioArgs) -> Result<Scenario, String> {
    let mut s = Scenario::load(&args.scenario).map_err(|e| e.to_string())?;
    if let Some(p) = args.preset {
        s = s.with_preset(p);
    }
    if let Some(seed) = args.seed {
        s = s.with_seed(seed);
    }
    Ok(s)
}

fn simulate(s: &Scenario) -> Result<RunLog, String> {
    Simulation::with_fear_model(s.config.clone(), &s.db, s.model.clone())
        .and_then(Simulation::run)
        .map_err(|e| format!("{}: {e}", s.path.display()))
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> u8 {
    let (scenario, log) = match load(&args.scenario).and_then(|s| simulate(&s).map(|l| (s, l))) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = args
        .out
        .clone()
        .or(scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let written = match export::write_outputs(&log, &dir) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let _ = write!(out, "{}", export::summary_text(&log));
    for p in written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    if args.strict && !log.all_invariants_hold() {
        let _ = write!(out, "{}", export::invariants_text(&log));
        return EXIT_FAILED;
    }
    EXIT_OK
}

fn cmd_validate(args: &ScenarioArgs, out: &mut dyn Write) -> u8 {
    let log = match load(args).and_then(|s| simulate(&s)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let _ = write!(out, "{}", export::invariants_text(&log));
    if log.all_invariants_hold() {
        EXIT_OK
    } else {
        let failed: Vec<_> = log
            .invariants
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.invariant.name())
            .collect();
        let _ = writeln!(out, "failed: {}", failed.join(", "));
        EXIT_FAILED
    }
}

/// Expected number of successful attempts per preset.
pub fn expected_successes(p: TimingPreset) -> usize {
    match p {
        TimingPreset::Worst => 4,
        TimingPreset::Average => 9,
        TimingPreset::Best => 10,
    }
}

pub fn cmd_replay_tables(preset: Option<TimingPreset>, out: &mut dyn Write) -> u8 {
    let presets: Vec<TimingPreset> = match preset {
        Some(p) => vec![p],
        None => TimingPreset::ALL.to_vec(),
    };
    let mut all_match = true;
    for p in presets {
        let rows = replay_reference(p);
        let _ = writeln!(out, "preset {p} (required {} s)", required_for(p));
        let _ = writeln!(out, "  distance_patches  time_left_s  result");
        for r in &rows {
            let _ = writeln!(
                out,
                "  {:>16}  {:>11}  {}",
                r.distance_patches,
                r.attempt.time_left_s,
                if r.attempt.success {
                    "success"
                } else {
                    "failure"
                }
            );
        }
        let ok = rows.iter().filter(|r| r.attempt.success).count();
        let _ = writeln!(out, "  total: {ok} successes, {} failures", rows.len() - ok);
        all_match &= ok == expected_successes(p);
    }
    if all_match {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> u8 {
    match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::ReplayTables { preset } => cmd_replay_tables(*preset, out),
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FEAROVER_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    ExitCode::from(execute(&cli, &mut std::io::stdout().lock()))
}
