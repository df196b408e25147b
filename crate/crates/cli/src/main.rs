use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dvolab_core::inclusion::{ball_in_body, body_in_ball, cube_in_body};
use dvolab_core::widths::{critical_dimension, eps_critical_dimension, mean_width};
use dvolab_core::{BodyDescriptor, ConvexBody, InclusionOptions, Status};
use dvolab_experiments::harness::{summarize, verify_manifest, HarnessError, MANIFEST_FILE};
use dvolab_experiments::{parse_config, run_suite, SuiteOptions};
use serde_json::json;

const PASS: u8 = 0;
const FAIL: u8 = 1;
const CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "dvolab", version, about = "Numerical checks of subgaussian Dvoretzky-type embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean width, Euclidean radius and critical dimension of one body.
    Estimate {
        #[command(flatten)]
        body: BodyArgs,
        /// Gaussian samples for the width estimate.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Also report k*_ε for this ε in (0, 1/2).
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One inclusion certificate; exits 1 when the inclusion is refuted.
    Check {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_enum)]
        test: TestKind,
        /// ρ for ball-in-body, R for body-in-ball, r for cube-in-body.
        #[arg(long)]
        value: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Run an experiment suite and write CSV/JSON reports plus a manifest.
    Run(RunArgs),
    /// Summarize the reports in an output directory and verify their digests.
    Report {
        #[arg(long, default_value = "dvolab-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BodyArgs {
    /// Body as JSON, e.g. '{"kind": "l1", "dim": 64}'.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    body: Option<String>,
    /// File holding the body JSON; matrix paths inside resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replaces every experiment's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "dvolab-out")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    #[arg(long)]
    trials_override: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    BallInBody,
    BodyInBall,
    CubeInBody,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Estimate { body, samples, eps, seed } => estimate(&body, samples, eps, seed),
        Command::Check { body, test, value, seed, restarts, iterations } => {
            check(&body, test, value, seed, restarts, iterations)
        }
        Command::Run(args) => run(&args),
        Command::Report { out } => report(&out),
    };
    ExitCode::from(code)
}

fn config_error(e: impl std::fmt::Display) -> u8 {
    eprintln!("error: {e}");
    CONFIG_ERROR
}

fn load_body(args: &BodyArgs) -> Result<ConvexBody, String> {
    let (text, base) = match (&args.body, &args.config) {
        (Some(text), _) => (text.clone(), PathBuf::from(".")),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            (text, path.parent().unwrap_or(Path::new(".")).to_path_buf())
        }
        (None, None) => return Err("need --body or --config".into()),
    };
    let descriptor = BodyDescriptor::from_json(&text).map_err(|e| format!("body: {e}"))?;
    descriptor.build(&base).map_err(|e| format!("body: {e}"))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn estimate(args: &BodyArgs, samples: usize, eps: Option<f64>, seed: u64) -> u8 {
    let body = match load_body(args) {
        Ok(b) => b,
        Err(e) => return config_error(e),
    };
    let result = (|| {
        let width = mean_width(&body, samples, seed)?;
        let radius = body.euclidean_radius();
        let k_star = critical_dimension(&body, &width)?;
        let k_star_eps = eps.map(|e| eps_critical_dimension(k_star, e)).transpose()?;
        Ok::<_, dvolab_core::Error>(json!({
            "dim": body.dim(),
            "mean_width": width.mean,
            "std_error": width.std_error,
            "samples": width.samples,
            "radius": radius.value,
            "radius_exact": radius.exact,
            "k_star": k_star,
            "eps": eps,
            "k_star_eps": k_star_eps,
        }))
    })();
    match result {
        Ok(v) => {
            print_json(&v);
            PASS
        }
        Err(e) => config_error(e),
    }
}

fn check(
    args: &BodyArgs,
    test: TestKind,
    value: f64,
    seed: u64,
    restarts: Option<usize>,
    iterations: Option<usize>,
) -> u8 {
    let body = match load_body(args) {
        Ok(b) => b,
        Err(e) => return config_error(e),
    };
    let mut opts = InclusionOptions { seed, ..InclusionOptions::default() };
    if let Some(r) = restarts {
        opts.restarts = r;
        opts.sup_restarts = r;
    }
    if let Some(i) = iterations {
        opts.iterations = i;
    }
    let cert = match test {
        TestKind::BallInBody => ball_in_body(&body, value, &opts),
        TestKind::BodyInBall => body_in_ball(&body, value, &opts),
        TestKind::CubeInBody => cube_in_body(&body, value, &opts),
    };
    match cert {
        Ok(cert) => {
            print_json(&serde_json::to_value(&cert).expect("certificates serialize"));
            if cert.status == Status::Refuted {
                FAIL
            } else {
                PASS
            }
        }
        Err(e) => config_error(e),
    }
}

fn run(args: &RunArgs) -> u8 {
    let configs = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let base_dir = args.config.parent().unwrap_or(Path::new("."));
    let opts = SuiteOptions {
        parallelism: args.parallelism,
        config_path: Some(args.config.clone()),
        seed_override: args.seed,
        trials_override: args.trials_override,
        ..SuiteOptions::new(&args.out)
    };
    let manifest = match run_suite(&configs, base_dir, &opts) {
        Ok((manifest, _)) => manifest,
        Err(e @ HarnessError::Config(_)) => return config_error(e),
        Err(e) => {
            eprintln!("error: {e}");
            return FAIL;
        }
    };
    for e in &manifest.experiments {
        println!("{:<20} {:<24} {}", e.status.to_string(), e.id, e.kind);
    }
    println!("wrote {}", args.out.join(MANIFEST_FILE).display());
    if manifest.any_failed() {
        FAIL
    } else {
        PASS
    }
}

fn report(out: &Path) -> u8 {
    match summarize(out) {
        Ok((text, manifest)) => {
            print!("{text}");
            if manifest.any_failed() || !verify_manifest(out, &manifest).is_empty() {
                FAIL
            } else {
                PASS
            }
        }
        Err(e) => config_error(e),
    }
}
