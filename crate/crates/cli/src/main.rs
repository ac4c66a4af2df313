use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use secweave_cli::commands::{self, Failure, EXIT_INPUT};
use secweave_cli::{repl, server};
use secweave_core::simulator::Session;
use secweave_core::testgen::GenParams;

#[derive(Parser)]
#[command(name = "secweave", version, about = "Weave access-control policies into EFSM models and generate tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and print its diagnostics
    Validate { model: PathBuf },
    /// Integrate a policy into a model
    Weave {
        model: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Observation mapping (.weave)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Step through a model interactively on stdin
    Simulate { model: PathBuf },
    /// Derive one test purpose per value of a parameter
    Objectives {
        model: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long)]
        input: String,
        #[arg(long)]
        param: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a test case covering a sequence of purposes
    Testgen {
        model: PathBuf,
        #[arg(long)]
        purposes: PathBuf,
        #[arg(long, default_value_t = GenParams::default().depth_limit)]
        depth: usize,
        #[arg(long, default_value_t = GenParams::default().rng_seed)]
        seed: u64,
        #[arg(long, default_value_t = GenParams::default().max_jumps)]
        jumps: usize,
        #[arg(long, default_value_t = GenParams::default().max_total_steps)]
        max_steps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP/JSON service
    Serve {
        #[arg(long, env = server::PORT_ENV, default_value_t = server::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Keep uploaded and woven models in this directory
        #[arg(long)]
        store_dir: Option<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cmd {
        Command::Validate { model } => commands::validate(&model, &mut out),
        Command::Weave { model, policy, config, output } => {
            commands::weave_files(&model, &policy, config.as_deref(), &output, &mut out)
        }
        Command::Simulate { model } => {
            let m = commands::load_model(&model)?;
            let mut session = Session::new(Arc::new(m));
            repl::run(&mut session, io::stdin().lock(), &mut out)?;
            Ok(())
        }
        Command::Objectives { model, state, input, param, output } => {
            commands::objectives(&model, &state, &input, &param, output.as_deref(), &mut out)
        }
        Command::Testgen { model, purposes, depth, seed, jumps, max_steps, output } => {
            let gp = GenParams {
                depth_limit: depth,
                max_jumps: jumps,
                rng_seed: seed,
                max_total_steps: max_steps,
            };
            commands::testgen(&model, &purposes, &gp, output.as_deref(), &mut out)
        }
        Command::Serve { port, host, store_dir } => {
            drop(out);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(SocketAddr::new(host, port), store_dir.as_deref()))
                .map_err(|e| Failure::new(EXIT_INPUT, format!("server: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = io::stdout().flush();
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
