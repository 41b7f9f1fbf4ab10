use std::io::{self, BufRead, IsTerminal, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rdfg_core::linter::{lint, LintConfig};
use rdfg_core::project::PluginRegistry;
use rdfg_core::queries::{dependencies, run_queries};
use rdfg_core::slicer::Direction;
use rdfg_core::state::{AnalysisOptions, AnalysisState};
use rdfg_cli::repl::ReplSession;
use rdfg_cli::server::{Server, Transport, DEFAULT_PORT};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "rdfg", version, about = "Dataflow analysis, slicing and linting for R")]
struct Cli {
    /// Start the analysis server instead of the REPL.
    #[arg(long)]
    server: bool,
    /// Serve over WebSocket instead of raw TCP.
    #[arg(long, requires = "server")]
    ws: bool,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Project root used to relativize and check file paths.
    #[arg(long)]
    root: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a file or directory and print a report.
    Analyze {
        path: PathBuf,
        #[arg(long)]
        lint: bool,
        /// Backward slice for a criterion (`$id`, `line:col`, `line@name`).
        #[arg(long)]
        slice: Option<String>,
        /// A query object or an array of them.
        #[arg(long)]
        query: Option<String>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Some(Command::Analyze {
            path,
            lint,
            slice,
            query,
            format,
        }) => analyze(&path, cli.root, lint, slice, query, format),
        None if cli.server => serve(cli.ws, cli.port, cli.root),
        None => repl(cli.root),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn serve(ws: bool, port: u16, root: Option<PathBuf>) -> anyhow::Result<()> {
    let transport = if ws { Transport::WebSocket } else { Transport::Tcp };
    let addr = SocketAddr::from((Ipv4Addr::UNSPECIFIED, port));
    let server = Server::bind(addr, transport, root).with_context(|| format!("cannot bind port {port}"))?;
    eprintln!(
        "listening on {} ({})",
        server.local_addr()?,
        if ws { "websocket" } else { "tcp" }
    );
    server.run()?;
    Ok(())
}

fn repl(root: Option<PathBuf>) -> anyhow::Result<()> {
    let mut session = ReplSession::new(root, std::env::current_dir()?);
    let interactive = io::stdin().is_terminal();
    let mut stdout = io::stdout();
    writeln!(stdout, "{}", ReplSession::greeting())?;
    let mut lines = io::stdin().lock().lines();
    loop {
        if interactive {
            write!(stdout, "R> ")?;
            stdout.flush()?;
        }
        let Some(line) = lines.next() else { break };
        let out = session.eval(&line?);
        if !out.text.is_empty() {
            writeln!(stdout, "{}", out.text)?;
        }
        if out.quit {
            break;
        }
    }
    Ok(())
}

fn analyze(
    path: &PathBuf,
    root: Option<PathBuf>,
    with_lint: bool,
    slice: Option<String>,
    query: Option<String>,
    format: OutputFormat,
) -> anyhow::Result<()> {
    let options = AnalysisOptions {
        root,
        ..AnalysisOptions::default()
    };
    let state = AnalysisState::from_path(path, &PluginRegistry::default(), options)?;
    let report = dependencies(&state);
    let diagnostics = with_lint.then(|| lint(&state, &LintConfig::default()));
    let slice = slice
        .map(|c| state.slice(&[c], Direction::Backward))
        .transpose()
        .map_err(|e| anyhow!(e))?;
    let query = match query {
        Some(q) => {
            let value: Value = serde_json::from_str(&q).context("malformed --query")?;
            let queries = match value {
                Value::Array(items) => items,
                other => vec![other],
            };
            Some(run_queries(&state, &queries))
        }
        None => None,
    };
    let mut out = String::new();
    match format {
        OutputFormat::Json => {
            let mut v = json!({
                "files": state.files.iter().map(|f| f.source.origin()).collect::<Vec<_>>(),
                "vertices": state.graph.vertex_count(),
                "edges": state.graph.edge_count(),
                "dependencies": report,
            });
            if let Some(d) = &diagnostics {
                v["diagnostics"] = json!(d);
            }
            if let Some(s) = &slice {
                v["slice"] = json!(s);
            }
            if let Some(q) = &query {
                v["query"] = json!(q);
            }
            out = serde_json::to_string_pretty(&v)?;
        }
        OutputFormat::Text => {
            out.push_str(&format!(
                "{} file(s), {} vertices, {} edges\n",
                state.files.len(),
                state.graph.vertex_count(),
                state.graph.edge_count()
            ));
            out.push_str(&report.render_text());
            if let Some(d) = &diagnostics {
                out.push_str(&format!("{} diagnostic(s)\n", d.len()));
                for x in d {
                    out.push_str(&format!("{x}\n"));
                }
            }
            if let Some(s) = &slice {
                out.push_str(&s.text);
                if !s.text.ends_with('\n') {
                    out.push('\n');
                }
            }
            if let Some(q) = &query {
                out.push_str(&serde_json::to_string_pretty(q)?);
            }
        }
    }
    println!("{}", out.trim_end());
    Ok(())
}
