//! Command-line and HTTP front ends over a saved index bundle.

pub mod commands;
pub mod server;

use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use pegraph::peg::ExportFormat;
use pegraph::Execution;

#[derive(Debug, Parser)]
#[command(name = "pegraph", version, about = "Build paper indexes and extract paper evolution graphs")]
pub struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factorize a corpus and write an index bundle.
    Index(IndexArgs),
    /// Extract an evolution graph from an index bundle.
    Query(QueryArgs),
    /// Serve an index bundle over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic corpus with planted communities.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct IndexArgs {
    /// Corpus file, one JSON paper record per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output bundle directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of communities.
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Citation, content and authorship weights, comma separated.
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 3]>,
    /// Stop-word list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub min_doc_freq: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Restart probability of the word-influence walk.
    #[arg(long)]
    pub restart: Option<f64>,
    /// Keep citations directed in the factorization.
    #[arg(long)]
    pub directed: bool,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["paper", "papers", "keyword"])))]
pub struct QueryArgs {
    /// Index bundle directory.
    #[arg(long)]
    pub index: PathBuf,
    /// Single-paper query.
    #[arg(long)]
    pub paper: Option<String>,
    /// Two-paper query, as `A,B`.
    #[arg(long, value_parser = parse_pair)]
    pub papers: Option<PaperPair>,
    /// Keyword query.
    #[arg(long)]
    pub keyword: Option<String>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub format: ExportFormat,
    /// Chain length.
    #[arg(long)]
    pub len: Option<usize>,
    /// Topic drift allowed between consecutive links.
    #[arg(long)]
    pub r: Option<f64>,
    /// Community membership threshold.
    #[arg(long)]
    pub com_t: Option<f64>,
    /// Candidates per community for paper queries.
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// Candidates for keyword queries.
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long)]
    pub beam_width: Option<usize>,
    /// Must match the index; these are fixed when it is built.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 3]>,
    /// Write the graph here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of static explorer assets.
    #[arg(long)]
    pub assets: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub papers: usize,
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0)]
    pub bridges: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated weights, got {}", parts.len()));
    }
    let mut w = [0.0; 3];
    for (slot, p) in w.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| format!("invalid weight {p:?}"))?;
    }
    Ok(w)
}

/// Two paper ids given as `A,B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperPair(pub String, pub String);

fn parse_pair(s: &str) -> Result<PaperPair, String> {
    match s.split(',').map(str::trim).collect::<Vec<_>>()[..] {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok(PaperPair(a.to_string(), b.to_string())),
        _ => Err(format!("expected two paper ids as A,B, got {s:?}")),
    }
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse().map_err(|e: pegraph::Error| e.to_string())
}

/// Run a parsed command line, returning the process exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let exec = cli.execution();
    let result = match cli.command {
        Command::Index(args) => commands::cmd_index(&args, exec).map(|report| {
            for w in &report.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let _ = stdout.write_all(report.summary.as_bytes());
        }),
        Command::Query(args) => commands::cmd_query(&args, exec).and_then(|out| {
            for w in &out.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            match &args.out {
                Some(path) => std::fs::write(path, &out.bytes).map_err(|e| pegraph::Error::Io {
                    path: path.clone(),
                    source: e,
                }),
                None => {
                    let _ = stdout.write_all(&out.bytes);
                    Ok(())
                }
            }
        }),
        Command::Serve(args) => server::serve_blocking(&args, exec),
        Command::Synth(args) => commands::cmd_synth(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
