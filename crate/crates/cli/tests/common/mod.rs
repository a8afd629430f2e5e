#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::Parser;
use pegraph_cli::{Cli, Command};

pub fn fixture_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/remote_sensing.jsonl")
}

pub fn parse(args: &[&str]) -> Command {
    Cli::try_parse_from(std::iter::once("pegraph").chain(args.iter().copied()))
        .unwrap()
        .command
}

pub fn build_index(out: &Path, extra: &[&str]) {
    let corpus = fixture_corpus();
    let mut args = vec!["index", "--corpus", corpus.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(&["--k", "2", "--seed", "7"]);
    args.extend_from_slice(extra);
    let Command::Index(a) = parse(&args) else { unreachable!() };
    pegraph_cli::commands::cmd_index(&a, pegraph::Execution::Sequential).unwrap();
}

/// One index over the fixture corpus, shared by every test in a binary.
pub fn shared_index() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index");
        build_index(&path, &[]);
        (dir, path)
    });
    path
}

/// PEG bytes from the command-line query path.
pub fn cli_query(index: &Path, args: &[&str]) -> pegraph::Result<Vec<u8>> {
    let mut all = vec!["query", "--index", index.to_str().unwrap()];
    all.extend_from_slice(args);
    let Command::Query(a) = parse(&all) else { unreachable!() };
    pegraph_cli::commands::cmd_query(&a, pegraph::Execution::Sequential).map(|o| o.bytes)
}
