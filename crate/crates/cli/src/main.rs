use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gbridge_cli::config::ObservationSpec;
use gbridge_cli::{run, Command, LoadedConfig};
use gbridge_core::compensator::Mode;

/// Gamma bridges of random length: simulation, filtering, compensation and validation.
#[derive(Parser, Debug)]
#[command(name = "gbridge", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate an ensemble of random-length bridges.
    Simulate {
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Posterior law of the pinning time given one observation.
    Filter {
        #[command(flatten)]
        obs: ObsArgs,
        /// Realized pinning time for a stopped observation.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Predictive law of the bridge at a later time.
    Predict {
        #[command(flatten)]
        obs: ObsArgs,
        #[arg(long)]
        u: Option<f64>,
    },
    /// Compensate simulated paths and summarize the residuals.
    Compensate {
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Run the Monte Carlo gate suite.
    Validate {
        /// Include negative controls, which are expected to fail.
        #[arg(long)]
        negative_controls: bool,
        /// Multiplies every default sample size.
        #[arg(long)]
        scale: Option<f64>,
        /// Run only these sections (repeatable).
        #[arg(long = "section")]
        sections: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct ObsArgs {
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
}

fn apply_observation(loaded: &mut LoadedConfig, obs: &ObsArgs, tau: Option<f64>) {
    let run = &mut loaded.config.run;
    if obs.t.is_none() && obs.x.is_none() && tau.is_none() {
        return;
    }
    let base = run.observation.unwrap_or(ObservationSpec {
        t: f64::NAN,
        x: f64::NAN,
        tau: None,
    });
    run.observation = Some(ObservationSpec {
        t: obs.t.unwrap_or(base.t),
        x: obs.x.unwrap_or(base.x),
        tau: tau.or(base.tau),
    });
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut loaded = match &cli.config {
        Some(path) => match LoadedConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => LoadedConfig::defaults(),
    };
    if let Some(seed) = cli.seed {
        loaded.config.seed = seed;
    }
    let command = match &cli.command {
        Cmd::Simulate { paths } => {
            if let Some(n) = paths {
                loaded.config.run.paths = *n;
            }
            Command::Simulate
        }
        Cmd::Filter { obs, tau } => {
            apply_observation(&mut loaded, obs, *tau);
            Command::Filter
        }
        Cmd::Predict { obs, u } => {
            apply_observation(&mut loaded, obs, None);
            if u.is_some() {
                loaded.config.run.horizon = *u;
            }
            Command::Predict
        }
        Cmd::Compensate { mode, paths } => {
            if let Some(m) = mode {
                loaded.config.run.mode = *m;
            }
            if let Some(n) = paths {
                loaded.config.run.paths = *n;
            }
            Command::Compensate
        }
        Cmd::Validate {
            negative_controls,
            scale,
            sections,
        } => {
            if *negative_controls {
                loaded.config.run.negative_controls = true;
            }
            if let Some(s) = scale {
                loaded.config.run.scale = *s;
            }
            if !sections.is_empty() {
                loaded.config.run.sections = Some(sections.clone());
            }
            Command::Validate
        }
    };
    match run(command, &loaded, &cli.out) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for (path, hash) in &outcome.files {
                println!("wrote {} sha256={hash}", path.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
