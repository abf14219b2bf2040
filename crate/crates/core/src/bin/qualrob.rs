use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qualrob::distributions::Distribution;
use qualrob::lab::{self, ExperimentConfig, ExperimentKind, MetricSpec};
use qualrob::processes::{simulate_linear, LinearProcessSpec};
use qualrob::prohorov::{prohorov_distance, FiniteLaw};
use qualrob::{Error, Result};

/// Probability metrics, mixing bounds and Monte Carlo experiments for
/// strongly mixing linear processes.
#[derive(Parser)]
#[command(name = "qualrob", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two laws given as JSON
    Metric {
        /// kolmogorov, kolmogorov-phi:<gauge>, levy, psi-vague:<gauge>,
        /// psi-levy:<gauge> or prohorov (atomic laws)
        #[arg(long)]
        kind: String,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
    },
    /// Simulate a path and print it as CSV
    Simulate {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Truncation index of the MA(∞) sum (default: within 1e-10)
        #[arg(long)]
        s_max: Option<usize>,
        /// Output file (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strong-mixing bound α(n) of a linear process
    MixingBound {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        n: usize,
        /// Print the constants and α(0..=n) instead of α(n) alone
        #[arg(long)]
        profile: bool,
    },
    /// P[d(empirical, marginal) >= δ] over a process class
    Ugc(ExperimentArgs),
    /// Distance between estimator laws under two processes
    Robustness(ExperimentArgs),
    /// Maximal partial sums against Rio's inequality
    RioCheck(ExperimentArgs),
    /// Law-of-large-numbers frequencies against their tail bound
    LlnCheck(ExperimentArgs),
    /// Bracket construction and sample-wise domination
    BracketCheck(ExperimentArgs),
}

#[derive(Args)]
struct ProcessArgs {
    /// Full process spec as JSON; overrides the ARMA flags
    #[arg(long)]
    spec: Option<String>,
    /// Autoregressive coefficients φ_1, φ_2, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    phi: Vec<f64>,
    /// Moving-average coefficients θ_1, θ_2, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Vec<f64>,
    /// Noise law as JSON (default: standard Gaussian)
    #[arg(long)]
    noise: Option<String>,
}

impl ProcessArgs {
    fn spec(&self) -> Result<LinearProcessSpec> {
        if let Some(s) = &self.spec {
            return Ok(serde_json::from_str(s)?);
        }
        let noise = match &self.noise {
            Some(s) => serde_json::from_str(s)?,
            None => Distribution::gaussian(0.0, 1.0)?,
        };
        Ok(LinearProcessSpec::arma(&self.phi, &self.theta, noise))
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Result table (CSV); the manifest goes next to it
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(Error),
    Assertion(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

fn law(json: &str) -> Result<Distribution> {
    Ok(serde_json::from_str(json)?)
}

fn metric(kind: &str, mu: &str, nu: &str) -> Result<f64> {
    let (mu, nu) = (law(mu)?, law(nu)?);
    match kind {
        "prohorov" => {
            let finite = |d: &Distribution| -> Result<FiniteLaw> {
                if !d.is_discrete() {
                    return Err(Error::Config(format!(
                        "prohorov needs atomic laws, got {}",
                        d.describe()
                    )));
                }
                let (p, w): (Vec<f64>, Vec<f64>) = d.atoms().into_iter().unzip();
                FiniteLaw::on_real_line(p, w)
            };
            prohorov_distance(&finite(&mu)?, &finite(&nu)?)
        }
        "kolmogorov" => "kolmogorov-phi:one"
            .parse::<MetricSpec>()?
            .distance(&mu, &nu),
        other => other.parse::<MetricSpec>()?.distance(&mu, &nu),
    }
}

fn simulate(
    process: &ProcessArgs,
    n: usize,
    seed: u64,
    s_max: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let path = simulate_linear(&process.spec()?, n, seed, s_max)?;
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "x"])?;
    for (t, x) in path.iter().enumerate() {
        w.write_record([(t + 1).to_string(), lab::format_float(*x)])?;
    }
    w.flush()?;
    Ok(())
}

fn mixing_bound(process: &ProcessArgs, n: usize, profile: bool) -> Result<()> {
    let spec = process.spec()?;
    let p = spec.profile()?;
    if !profile {
        println!("{}", p.alpha(n));
        return Ok(());
    }
    println!("# process: {}", spec.describe());
    println!("# M = {}", p.smoothness);
    println!("# E|Z| = {}", p.noise_abs_mean);
    println!("# sum |b_s| = {}", p.b_abs_sum);
    println!("# factor 2 M E|Z| sum|b_s| = {}", p.factor);
    println!("n,tail,alpha");
    for j in 0..=n {
        println!("{j},{},{}", p.tail_factor(j), p.alpha(j));
    }
    Ok(())
}

fn experiment(kind: ExperimentKind, args: &ExperimentArgs) -> std::result::Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let config = ExperimentConfig::from_json(&text)?;
    if config.experiment_kind != kind {
        return Err(Error::Config(format!(
            "config describes a {} experiment, not {kind}",
            config.experiment_kind
        ))
        .into());
    }
    let run = lab::run(&config)?;
    let manifest = lab::write_outputs(&config, &run, &args.out)?;
    eprintln!(
        "{kind}: {} rows in {:.1} s on {} threads -> {} ({})",
        run.outcome.table.rows.len(),
        run.wall_clock_seconds,
        run.threads,
        args.out.display(),
        manifest.display()
    );
    for f in &run.outcome.failures {
        eprintln!("member failure: {f}");
    }
    if run.outcome.passed() {
        Ok(())
    } else {
        Err(Failure::Assertion(run.outcome.violations))
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Metric { kind, mu, nu } => println!("{}", metric(&kind, &mu, &nu)?),
        Command::Simulate {
            process,
            n,
            seed,
            s_max,
            out,
        } => simulate(&process, n, seed, s_max, out.as_deref())?,
        Command::MixingBound {
            process,
            n,
            profile,
        } => mixing_bound(&process, n, profile)?,
        Command::Ugc(a) => experiment(ExperimentKind::Ugc, &a)?,
        Command::Robustness(a) => experiment(ExperimentKind::Robustness, &a)?,
        Command::RioCheck(a) => experiment(ExperimentKind::RioCheck, &a)?,
        Command::LlnCheck(a) => experiment(ExperimentKind::LlnCheck, &a)?,
        Command::BracketCheck(a) => experiment(ExperimentKind::BracketCheck, &a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(v)) => {
            for line in v {
                eprintln!("violation: {line}");
            }
            ExitCode::from(2)
        }
    }
}
