use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixlab::config::{
    BoundConfig, ExperimentConfig, ExperimentKind, FamilyConfig, FisherConfig, PriorConfig, SettingName, SgldSection,
    TrainingOverrides,
};
use mixlab::run::{run, EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_OK};
use mixlab::verify::{run_suite, Level};
use mixlab_core::fim_experiment::DatasetKind;

#[derive(Parser)]
#[command(name = "mixlab", version, about = "Regret, weight and Fisher-spectrum experiments for Bayesian mixture learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; beats the config and $MIXLAB_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: Level,
    },
    /// Fisher spectrum of a softmax network on structured and random data.
    Spectrum(SpectrumArgs),
    /// Langevin posterior samples for coin flips.
    Sgld(SgldArgs),
    /// Weight bound next to the exact regret.
    Bound(BoundArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, default_value_t = 5)]
    inputs: usize,
    #[arg(long, default_value_t = 8)]
    hidden: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 300)]
    n_train: usize,
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args)]
struct SgldArgs {
    /// Number of ones among the observations.
    #[arg(long, default_value_t = 30)]
    ones: usize,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 1e-4)]
    step_size: f64,
    #[arg(long, default_value_t = 205_000)]
    steps: usize,
    #[arg(long, default_value_t = 5_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 20)]
    thinning: usize,
    #[arg(long, default_value_t = 1)]
    chains: usize,
}

#[derive(Args)]
struct BoundArgs {
    /// Alphabet size; 2 selects the Bernoulli family.
    #[arg(long, default_value_t = 2)]
    alphabet: usize,
    /// True parameter, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    theta0: Vec<f64>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,8,32,128")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    n_mc: usize,
    #[arg(long, default_value_t = 2001)]
    grid_nodes: usize,
}

fn base(experiment: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        seed: 0,
        output: None,
        threads: None,
        family: None,
        theta0: None,
        prior: PriorConfig::default(),
        n: vec![],
        supervised: None,
        regret: None,
        bound: None,
        fisher: None,
        sgld: None,
        dominance: None,
        deep_linear: None,
    }
}

fn synthesize(cmd: &Command) -> Option<ExperimentConfig> {
    match cmd {
        Command::Spectrum(a) => Some(ExperimentConfig {
            family: Some(FamilyConfig::SoftmaxNet {
                inputs: a.inputs,
                hidden: a.hidden,
                classes: a.classes,
                half_width: 10.0,
            }),
            fisher: Some(FisherConfig {
                datasets: vec![DatasetKind::Structured, DatasetKind::RandomLabels, DatasetKind::RandomInputs],
                n_train: a.n_train,
                replicates: a.replicates,
                training: TrainingOverrides { max_steps: a.max_steps, ..Default::default() },
                ..Default::default()
            }),
            ..base(ExperimentKind::Fisher)
        }),
        Command::Sgld(a) => {
            let mut data = vec![1usize; a.ones.min(a.n)];
            data.resize(a.n, 0);
            Some(ExperimentConfig {
                family: Some(FamilyConfig::Bernoulli {}),
                n: vec![a.n],
                sgld: Some(SgldSection {
                    step_size: a.step_size,
                    steps: a.steps,
                    burn_in: a.burn_in,
                    thinning: a.thinning,
                    chains: a.chains,
                    data: Some(data),
                    ..Default::default()
                }),
                ..base(ExperimentKind::Sgld)
            })
        }
        Command::Bound(a) => Some(ExperimentConfig {
            family: Some(if a.alphabet == 2 {
                FamilyConfig::Bernoulli {}
            } else {
                FamilyConfig::Categorical { alphabet: a.alphabet }
            }),
            theta0: Some(a.theta0.clone()),
            prior: PriorConfig::Uniform { grid_nodes: a.grid_nodes, particles: 4096 },
            n: a.n.clone(),
            bound: Some(BoundConfig {
                settings: vec![SettingName::Online, SettingName::Batch],
                n_mc: a.n_mc,
                ..Default::default()
            }),
            ..base(ExperimentKind::Bound)
        }),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Verify { level } = cli.command {
        let results = run_suite(level, cli.seed.unwrap_or(2024), |r| println!("{}", r.line()));
        let failed = results.iter().filter(|r| !r.passed).count();
        println!("{} passed, {failed} failed", results.len() - failed);
        if let Some(dir) = &cli.out {
            let written = std::fs::create_dir_all(dir).and_then(|_| {
                let json = serde_json::to_string_pretty(&results).map_err(std::io::Error::other)?;
                std::fs::write(dir.join("verify.json"), json + "\n")
            });
            if let Err(e) = written {
                eprintln!("error: cannot write verify.json: {e}");
            }
        }
        return ExitCode::from(if failed == 0 { EXIT_OK } else { EXIT_ACCEPTANCE });
    }
    let loaded = match &cli.command {
        Command::Run { config } => ExperimentConfig::load(config),
        other => Ok(synthesize(other).expect("shorthand subcommand")),
    };
    let mut config = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    match run(&config, cli.out.as_deref(), cli.threads) {
        Ok((code, dir)) => {
            eprintln!("wrote {}", dir.join("report.json").display());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
