use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use superdiff::config::{ExperimentConfig, RungConfig, SCHEMA};
use superdiff::correlator::Estimator;
use superdiff::experiments;
use superdiff::model::{Axis, InteractionVector};
use superdiff::output::config_hash;
use superdiff::{Error, Result};

/// Floquet simulations of spin transport in Heisenberg chains with rungs.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Autocorrelator and running exponents for one rung setting.
    Simulate(Common),
    /// Reflection and transmission between two chains joined by a rung.
    Scatter(Common),
    /// Every lambda at every rung strength ratio, against the 1D reference.
    Sweep(Common),
    /// Exponents at several Trotter steps with the total time held fixed.
    TauStudy(Common),
    /// Late-time standard error against the number of scrambling cycles.
    CycleStudy(Common),
    /// Check a config and print it with defaults filled in.
    ValidateConfig {
        config: Option<PathBuf>,
        /// Print the JSON schema instead.
        #[arg(long)]
        schema: bool,
    },
    /// Compare the typicality estimate with the exact trace on a small lattice.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory for this run.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Rung strength as a multiple of the chain coupling.
    #[arg(long, allow_hyphen_values = true)]
    ratio: Option<f64>,
    /// Rung interaction vector, `x,y,z`.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    lambda: Option<InteractionVector>,
    #[arg(long)]
    chain_len: Option<usize>,
    /// Distance of a single rung from the probe end.
    #[arg(long)]
    distance: Option<usize>,
    #[arg(long)]
    axis: Option<Axis>,
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<Estimator>,
    /// Also write the site-resolved profile.
    #[arg(long)]
    profile: bool,
    #[arg(long)]
    max_qubits: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long = "cycle-list", value_delimiter = ',')]
    cycle_list: Option<Vec<usize>>,
}

fn parse_vector(s: &str) -> std::result::Result<InteractionVector, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(InteractionVector::new(x, y, z)),
        _ => Err(format!("expected three components, got {}", v.len())),
    }
}

fn parse_estimator(s: &str) -> std::result::Result<Estimator, String> {
    match s {
        "single_sided" | "single-sided" => Ok(Estimator::SingleSided),
        "antisymmetric" => Ok(Estimator::Antisymmetric),
        _ => Err(format!("unknown estimator {s:?}")),
    }
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json(&text)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = load(self.config.as_deref())?;
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(seed => protocol.seed);
        set!(realizations => protocol.realizations);
        set!(cycles => protocol.cycles);
        set!(axis => protocol.axis);
        set!(steps => physics.steps);
        set!(tau => physics.tau);
        set!(ratio => physics.jperp_ratio);
        set!(lambda => physics.lambda);
        set!(chain_len => geometry.chain_len);
        set!(max_qubits => limits.max_qubits);
        set!(ratios => studies.ratios);
        set!(taus => studies.taus);
        set!(cycle_list => studies.cycles);
        if let Some(d) = self.distance {
            cfg.geometry.rungs = vec![RungConfig::at_distance(d)];
        }
        if let Some(e) = self.estimator {
            cfg.protocol.estimator = Some(e);
        }
        cfg.output.profile |= self.profile;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Explicit directory, else `$SUPERDIFF_OUT` or `runs`, joined with the
/// verb and a prefix of the config hash.
fn out_dir(flag: Option<&Path>, cfg: &ExperimentConfig, verb: &str) -> PathBuf {
    if let Some(d) = flag.or(cfg.output.directory.as_deref()) {
        return d.to_path_buf();
    }
    let root = std::env::var_os("SUPERDIFF_OUT").map(PathBuf::from).unwrap_or_else(|| "runs".into());
    root.join(format!("{verb}-{}", &config_hash(cfg)[..12]))
}

#[derive(Serialize)]
struct Done<T: Serialize> {
    directory: PathBuf,
    report: T,
}

fn emit<T: Serialize>((directory, report): (PathBuf, T)) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&Done { directory, report })?);
    Ok(())
}

fn run_verb(verb: &str, common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let dir = out_dir(common.out.as_deref(), &cfg, verb);
    let go = || -> Result<()> {
        match verb {
            "simulate" => emit(experiments::cmd_simulate(&cfg, &dir)?),
            "scatter" => emit(experiments::cmd_scatter(&cfg, &dir)?),
            "sweep" => emit(experiments::cmd_sweep(&cfg, &dir)?),
            "tau-study" => emit(experiments::cmd_tau_study(&cfg, &dir)?),
            "cycle-study" => emit(experiments::cmd_cycle_study(&cfg, &dir)?),
            "oracle-check" => {
                let (d, report) = experiments::cmd_oracle_check(&cfg, &dir)?;
                let pass = report.pass;
                emit((d, report))?;
                if pass {
                    Ok(())
                } else {
                    Err(Error::Numeric("estimate disagrees with the exact trace".into()))
                }
            }
            _ => unreachable!(),
        }
    };
    match common.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(go),
        None => go(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(c) => run_verb("simulate", c),
        Command::Scatter(c) => run_verb("scatter", c),
        Command::Sweep(c) => run_verb("sweep", c),
        Command::TauStudy(c) => run_verb("tau-study", c),
        Command::CycleStudy(c) => run_verb("cycle-study", c),
        Command::OracleCheck(c) => run_verb("oracle-check", c),
        Command::ValidateConfig { config, schema } => {
            if *schema {
                print!("{SCHEMA}");
            } else {
                let cfg = load(config.as_deref())?;
                let spec = cfg.folded_lattice()?;
                cfg.program(&spec, cfg.physics.lambda, cfg.physics.jperp_ratio)?;
                println!("{}", cfg.to_json());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let body = serde_json::json!({ "error": "usage", "message": e.to_string(), "exit_code": 2 });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
