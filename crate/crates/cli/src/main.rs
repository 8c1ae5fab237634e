use std::io::{self, IsTerminal};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use janus_cli::{bench_command, repl, run_script, CliConfig, OutputMode, Session};
use janus_core::adapter::{Server, DEFAULT_ALLOW};
use janus_core::bench::{SuiteConfig, BENCH_NAMES};
use janus_core::engine::DEFAULT_BUDGET;
use janus_core::runtime::LocalRuntime;

#[derive(Parser)]
#[command(name = "janus", version, about = "Logic engine and host runtime bridge")]
struct Cli {
    /// Directories searched for logic programs and host module definitions.
    #[arg(long, value_delimiter = ',', global = true)]
    paths: Vec<PathBuf>,
    /// Resolution steps allowed per query.
    #[arg(long, default_value_t = DEFAULT_BUDGET, global = true)]
    budget: u64,
    /// Deepest structure translated between the runtimes.
    #[arg(long, default_value_t = 100_000, global = true)]
    depth_limit: usize,
    #[arg(long, value_enum, default_value_t = OutputMode::Plain, global = true)]
    output: OutputMode,
    /// Seed for the random host callbacks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use an out-of-process host: tcp:HOST:PORT or stdio:COMMAND.
    #[arg(long, global = true)]
    adapter: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Read directives from standard input.
    Repl,
    /// Run a file of directives, stopping at the first error.
    Run { script: PathBuf },
    /// Run benchmarks (NAME, NAME:DIRECTION or transfer:SHAPE).
    Bench {
        selectors: Vec<String>,
        /// Transfer sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Write the CSV here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Small iteration counts.
        #[arg(long)]
        quick: bool,
    },
    /// Serve the host runtime over the wire protocol.
    ServeHost {
        /// Listen on this address instead of using stdio.
        #[arg(long)]
        tcp: Option<String>,
        /// Modules clients may call.
        #[arg(long, value_delimiter = ',')]
        allow: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = CliConfig {
        paths: cli.paths,
        budget: cli.budget,
        depth_limit: cli.depth_limit,
        output: cli.output,
        seed: cli.seed,
        adapter: cli.adapter,
        ..CliConfig::default()
    };
    let code = match cli.command.unwrap_or(Command::Repl) {
        Command::Repl => with_session(cfg, |s| {
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            repl(s, stdin.lock(), prompt)
        }),
        Command::Run { script } => with_session(cfg, |s| run_script(s, &script)),
        Command::Bench {
            selectors,
            sizes,
            out,
            quick,
        } => {
            if quick {
                cfg.bench = SuiteConfig::quick();
            }
            if !sizes.is_empty() {
                cfg.bench.transfer_sizes = sizes;
            }
            let selectors = if selectors.is_empty() {
                BENCH_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                selectors
            };
            bench_command(&cfg, &selectors, out.as_deref(), &mut io::stdout())
        }
        Command::ServeHost { tcp, allow } => serve_host(&cfg, tcp, allow),
    };
    ExitCode::from(code)
}

fn with_session(cfg: CliConfig, f: impl FnOnce(&mut Session<io::Stdout>) -> u8) -> u8 {
    match Session::new(cfg, io::stdout()) {
        Ok(mut s) => f(&mut s),
        Err(e) => {
            for line in janus_cli::format_error(&e, OutputMode::Plain) {
                eprintln!("{line}");
            }
            2
        }
    }
}

fn serve_host(cfg: &CliConfig, tcp: Option<String>, allow: Vec<String>) -> u8 {
    let allow: Vec<&str> = if allow.is_empty() {
        DEFAULT_ALLOW.to_vec()
    } else {
        allow.iter().map(String::as_str).collect()
    };
    let mut server = Server::new(LocalRuntime::new().with_search_path(cfg.paths.clone()), &allow);
    let result = match tcp {
        Some(addr) => TcpListener::bind(&addr).and_then(|listener| {
            eprintln!("listening on {}", listener.local_addr()?);
            server.serve_tcp(listener)
        }),
        None => server.serve(io::stdin().lock(), io::stdout().lock()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
