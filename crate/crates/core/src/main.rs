use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crossphase::cli::{cmd_evaluate, cmd_generate, cmd_retrieve, CliError, KbarRule, OrderArg, RunConfig};
use crossphase::crosswords::ConjugateBit;
use crossphase::spectral::CandidateMode;

#[derive(Parser)]
#[command(name = "crossphase", version, about = "Phase retrieval of 2-D spectra from square amplitudes on rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realize a scenario: source file, nominal spectrum, power grid, metadata.
    Generate(Common),
    /// Retrieve the spectrum from a power grid.
    Retrieve {
        #[command(flatten)]
        common: Common,
        /// Power grid; `<out>/power.prg1` when absent.
        #[arg(long)]
        power: Option<PathBuf>,
    },
    /// Compare a recovered spectrum with the nominal one.
    Evaluate {
        #[arg(long)]
        nominal: PathBuf,
        #[arg(long)]
        recovered: PathBuf,
        /// Run configuration or scenario, for deformation or excitation errors.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Aligned NSE above which an error flag is raised.
        #[arg(long, default_value_t = 1e-3)]
        nse_limit: f64,
        #[arg(long)]
        kbar: Option<KbarRule>,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration, or a bare scenario document.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long = "tol-deg")]
    tol_deg: Option<f64>,
    /// Ring radius: a number or `half-nyquist`.
    #[arg(long)]
    kbar: Option<KbarRule>,
    /// Ring order: a number or `fit`.
    #[arg(long = "H")]
    order: Option<OrderArg>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<CandidateMode>,
    /// `u,v,sign`: known sign of Im(F(u,v)·conj(F(P0))).
    #[arg(long = "conjugate-bit", allow_hyphen_values = true)]
    conjugate_bit: Option<ConjugateBit>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_mode(s: &str) -> Result<CandidateMode, String> {
    match s {
        "balanced" => Ok(CandidateMode::Balanced),
        "full" => Ok(CandidateMode::Full),
        _ => Err(format!("expected `balanced` or `full`, got `{s}`")),
    }
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(&self.config)?;
        if let Some(snr) = self.snr {
            c.snr_db = Some(snr);
        }
        if let Some(tol) = self.tol_deg {
            c.solver.phase_tol_deg = tol;
        }
        if let Some(k) = self.kbar {
            c.kbar = k;
        }
        if let Some(OrderArg(rule)) = self.order {
            c.solver.order = rule;
        }
        if let Some(mode) = self.mode {
            c.solver.candidate_mode = mode;
        }
        if let Some(bit) = self.conjugate_bit {
            c.solver.conjugate_bit = Some(bit);
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if let Some(seed) = self.seed {
            c.noise_seed = seed;
        }
        c.validate()?;
        Ok(c)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(common) => {
            let config = common.load()?;
            let meta = cmd_generate(&config)?;
            println!("wrote {} to {}", meta.files.join(", "), config.out.display());
        }
        Command::Retrieve { common, power } => {
            let config = common.load()?;
            let power = power.unwrap_or_else(|| config.out.join("power.prg1"));
            let (_, summary) = cmd_retrieve(&config, &power)?;
            println!(
                "{} solution(s) in {:.1} s, wrote {} to {}",
                summary.solutions.len(),
                summary.seconds,
                summary.files.join(", "),
                config.out.display()
            );
        }
        Command::Evaluate { nominal, recovered, config, out, nse_limit, kbar } => {
            let config = match config {
                Some(p) => {
                    let mut c = RunConfig::load(&p)?;
                    if let Some(k) = kbar {
                        c.kbar = k;
                    }
                    Some(c)
                }
                None => None,
            };
            let report = cmd_evaluate(&nominal, &recovered, config.as_ref(), nse_limit, &out)?;
            println!("{}", serde_json::to_string(&report).unwrap_or_default());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
