use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{CommandFactory, Parser};
use vqh::server::{spawn_server, ApiState, BookStore, Feed};
use vqh::session::{BookSink, Platform, Protocol, Session, SessionError, SessionOptions};
use vqh_core::sonify::MappingConfig;

/// Variational Quantum Harmonizer session.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Session name; data goes to `<SESSIONPATH>_Data/`.
    #[arg(value_name = "SESSIONPATH")]
    session: String,
    /// Where circuits run (only `local`).
    #[arg(value_name = "PLATFORM")]
    platform: String,
    /// Measurement protocol (only `basis`).
    #[arg(value_name = "PROTOCOL")]
    protocol: String,
    /// Folder holding `h_setup.csv` and `vqe_conf.json`.
    #[arg(long, default_value = ".")]
    workdir: PathBuf,
    /// Send OSC control streams to this `host:port`.
    #[arg(long, env = "VQH_OSC")]
    osc: Option<String>,
    /// Post a book for each experiment to this API base URL.
    #[arg(long, env = "VQH_API")]
    api: Option<String>,
    /// Serve the book API and session endpoints on this address.
    #[arg(long, value_name = "ADDR")]
    serve: Option<String>,
    /// Sonification settings as JSON.
    #[arg(long, value_name = "FILE")]
    mapping: Option<PathBuf>,
    /// With --serve: no prompt, serve until killed.
    #[arg(long, requires = "serve")]
    headless: bool,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
    ExitCode::from(2)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if Platform::from_name(&cli.platform).is_none() {
        return Ok(usage_error(&format!("unknown platform {:?}; available: local", cli.platform)));
    }
    if Protocol::from_name(&cli.protocol).is_none() {
        return Ok(usage_error(&format!("unknown protocol {:?}; available: basis", cli.protocol)));
    }
    let mapping = match &cli.mapping {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
            serde_json::from_str::<MappingConfig>(&text).with_context(|| path.display().to_string())?
        }
        None => MappingConfig::default(),
    };

    let mut opts = SessionOptions {
        osc_target: cli.osc.clone(),
        mapping,
        ..Default::default()
    };
    if let Some(url) = &cli.api {
        opts.books = BookSink::Http(url.clone());
    }
    let api = match &cli.serve {
        Some(_) => {
            let books = cli.workdir.join(format!("{}_Data", cli.session)).join("books");
            let store = BookStore::open(&books).context("opening the book store")?;
            let feed = Feed::default();
            let api = ApiState::new(Arc::new(store), feed.clone());
            opts.feed = Some(feed);
            if cli.api.is_none() {
                opts.books = BookSink::Local(api.clone());
            }
            Some(api)
        }
        None => None,
    };

    let session = match Session::open(&cli.session, &cli.platform, &cli.protocol, &cli.workdir, opts) {
        Ok(s) => s,
        Err(SessionError::Usage(msg)) => return Ok(usage_error(&msg)),
        Err(e) => return Err(e.into()),
    };
    println!("session folder {}", session.data_dir().display());
    match session.load_inputs() {
        Ok((_, seq, cfg)) => println!(
            "loaded {} Hamiltonian(s) on {} qubits, optimizer {}",
            seq.len(),
            seq.n(),
            cfg.optimizer_name.name()
        ),
        Err(e) => println!("warning: {e}"),
    }

    let server = match (api, &cli.serve) {
        (Some(mut api), Some(addr)) => {
            api.session = Some(Arc::new(session.clone()));
            let handle = spawn_server(addr, api).with_context(|| format!("binding {addr}"))?;
            println!("serving on {}", handle.url());
            Some(handle)
        }
        _ => None,
    };

    if cli.headless {
        if let Some(server) = server {
            server.wait();
        }
        return Ok(ExitCode::SUCCESS);
    }
    let stdin = std::io::stdin();
    vqh::repl::repl(&session, stdin.lock(), std::io::stdout())?;
    drop(server);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
