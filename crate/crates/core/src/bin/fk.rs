use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fkmdim::config::{ConfigFile, ExperimentConfig, Mode, Overrides};
use fkmdim::harness::{exit_code, run_experiment, write_artifacts};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Dist,
    Cover,
    Pack,
    MdimB,
    MdimP,
    LocalEntropy,
    VpCheck,
    VerifyLemmas,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Mode {
        match c {
            Command::Dist => Mode::Dist,
            Command::Cover => Mode::Cover,
            Command::Pack => Mode::Pack,
            Command::MdimB => Mode::MdimB,
            Command::MdimP => Mode::MdimP,
            Command::LocalEntropy => Mode::LocalEntropy,
            Command::VpCheck => Mode::VpCheck,
            Command::VerifyLemmas => Mode::VerifyLemmas,
        }
    }
}

/// Feldman-Katok distances, covers, packings and metric mean dimension estimates.
#[derive(Debug, Parser)]
#[command(name = "fk", version)]
struct Cli {
    command: Command,
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// full-shift-K, unit-cube-shift, rotation-alpha or doubling-map.
    #[arg(long)]
    system: Option<String>,
    /// System parameter, e.g. `--param L=84` (repeatable).
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Comma-separated scales.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    out: Option<String>,
    /// uniform, bernoulli:p, orbit or orbit:x0 (comma-separated).
    #[arg(long, value_delimiter = ',')]
    measure: Option<Vec<String>>,
    /// Atoms per empirical measure.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    eval_points: Option<usize>,
    /// Checks to run: chain, five-r, sandwich, frostman, sum-in-interval, closure, all.
    #[arg(long, value_delimiter = ',')]
    which: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Repeating pattern of the first point (comma-separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    /// Repeating pattern of the second point (comma-separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    /// Orbit length for `dist`.
    #[arg(long)]
    n: Option<usize>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VALUE")?;
    let v = v.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((k.trim().to_string(), v))
}

fn resolve(cli: &Cli) -> fkmdim::Result<ExperimentConfig> {
    let mut file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let overrides = Overrides {
        mode: Some(cli.command.into()),
        seed: cli.seed,
        output: cli.out.clone(),
        system: cli.system.clone(),
        params: cli.params.iter().cloned().collect::<BTreeMap<_, _>>(),
        epsilons: cli.eps.clone(),
        n_min: cli.n_min,
        n_max: cli.n_max,
        samples: cli.samples,
        measures: cli.measure.clone(),
        atoms: cli.m,
        eval_points: cli.eval_points,
        which: cli.which.clone(),
        trials: cli.trials,
        x: cli.x.clone(),
        y: cli.y.clone(),
        n: cli.n,
    };
    file.apply(&overrides);
    file.resolve()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|cfg| {
        let outcome = run_experiment(&cfg)?;
        match &cfg.output {
            Some(dir) => {
                print!("{}", outcome.summary);
                for path in write_artifacts(&outcome, Path::new(dir))? {
                    println!("wrote {}", path.display());
                }
            }
            None => {
                eprint!("{}", outcome.summary);
                print!("{}", outcome.json);
            }
        }
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("fk: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
