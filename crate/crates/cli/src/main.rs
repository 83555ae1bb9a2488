use clap::{Parser, Subcommand};
use qloop_cli::{run_convergence, run_suite, write_report, CliError, Suite, SuiteConfig, EXIT_CONFIG, EXIT_FAIL};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qloop", version, about = "Residual checks for quantum loop algebra vertex models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and report one row per identity.
    ///
    /// Exit status: 0 all checks pass, 1 a check failed, 2 config error,
    /// 3 memory budget (QLOOP_MEMORY_MIB) exceeded.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the Trotter convergence series as CSV (stdout) and CSV + JSON (--out).
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("qloop: {e}");
    ExitCode::from(match e {
        CliError::Config(_) => EXIT_CONFIG,
        CliError::Io { .. } => EXIT_FAIL,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { config, suite, seed, out } => {
            let mut cfg = match SuiteConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if let Some(s) = suite {
                cfg.suite = s;
            }
            if let Some(k) = seed {
                cfg.seed = k;
            }
            let bundle = match run_suite(&cfg) {
                Ok(b) => b,
                Err(e) => return fail(e),
            };
            print!("{}", bundle.table());
            if let Some(dir) = out.or(cfg.output.dir.clone()) {
                if let Err(e) = write_report(&bundle, &dir) {
                    return fail(e);
                }
            }
            let failed = bundle.rows.iter().filter(|r| !r.pass).count();
            println!("{} of {} checks passed", bundle.rows.len() - failed, bundle.rows.len());
            ExitCode::from(bundle.exit_code())
        }
        Command::Convergence { config, out } => {
            let cfg = match SuiteConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let table = match run_convergence(&cfg) {
                Ok(Ok(t)) => t,
                Ok(Err(e)) => {
                    eprintln!("qloop: {e}");
                    let code = if matches!(e, qloop::Error::TooLarge { .. }) { qloop_cli::EXIT_BUDGET } else { EXIT_FAIL };
                    return ExitCode::from(code);
                }
                Err(e) => return fail(e),
            };
            print!("{}", table.to_csv());
            if let Some(dir) = out.or(cfg.output.dir.clone()) {
                let series: Vec<(usize, f64)> = table.rows.iter().map(|r| (r.n, r.error)).collect();
                if let Err(e) = qloop_cli::emit_convergence(&series, &dir) {
                    return fail(e);
                }
            }
            ExitCode::SUCCESS
        }
    }
}
