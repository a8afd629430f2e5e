use std::fmt::Write as _;
use std::fs;

use pegraph::chains::QuerySpec;
use pegraph::corpus::{default_stopwords, load_corpus, load_stopwords};
use pegraph::factorization::RelationWeights;
use pegraph::index::Manifest;
use pegraph::peg::{export_graph, run_query};
use pegraph::synthetic::{planted_corpus, PlantedSpec};
use pegraph::{EngineConfig, Error, Execution, Index, Result};

use crate::{IndexArgs, QueryArgs, SynthArgs};

#[derive(Debug, Clone)]
pub struct IndexReport {
    pub manifest: Manifest,
    /// Human-readable summary: objective trace and community sizes.
    pub summary: String,
    pub warnings: Vec<String>,
}

pub fn index_config(args: &IndexArgs) -> EngineConfig {
    let d = EngineConfig::default();
    EngineConfig {
        k: args.k,
        seed: args.seed,
        weights: args.weights.map(RelationWeights).unwrap_or(d.weights),
        restart: args.restart.unwrap_or(d.restart),
        min_doc_freq: args.min_doc_freq.unwrap_or(d.min_doc_freq),
        symmetrize_citation: !args.directed,
        max_iters: args.max_iters.unwrap_or(d.max_iters),
        tol: args.tol.unwrap_or(d.tol),
        ..d
    }
}

pub fn cmd_index(args: &IndexArgs, exec: Execution) -> Result<IndexReport> {
    let config = index_config(args);
    config.validate()?;
    let corpus = load_corpus(&args.corpus)?;
    let stopwords = match &args.stopwords {
        Some(p) => load_stopwords(p)?,
        None => default_stopwords(),
    };
    let mut warnings = Vec::new();
    let report = corpus.report();
    for d in &report.dropped_records {
        warnings.push(format!("record {} dropped: {}", d.ordinal, d.reason));
    }
    if !report.dangling_citations.is_empty() {
        warnings.push(format!(
            "{} citations point outside the corpus and were ignored",
            report.dangling_citations.len()
        ));
    }
    let index = Index::build(corpus, stopwords, config, exec)?;
    index.save(&args.out)?;

    let manifest = index.manifest();
    let trace = &index.model.objective_trace;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "indexed {} papers, {} terms, {} authors into {}",
        manifest.n_papers,
        manifest.n_terms,
        manifest.n_authors,
        args.out.display()
    );
    let _ = writeln!(
        summary,
        "objective {:.6} -> {:.6} over {} iterations ({})",
        trace.first().copied().unwrap_or(f64::NAN),
        manifest.final_objective,
        manifest.iterations,
        if manifest.converged { "converged" } else { "iteration cap reached" }
    );
    for c in index.community_summaries(index.config.com_t) {
        let _ = writeln!(summary, "community {:>3}: {:>5} papers  {}", c.id, c.size, c.top_words.join(" "));
    }
    Ok(IndexReport {
        manifest,
        summary,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct QueryOutput {
    pub bytes: Vec<u8>,
    pub warnings: Vec<String>,
}

/// The wire-format query described by command-line flags.
pub fn query_spec(args: &QueryArgs) -> Result<QuerySpec> {
    let mut spec = match (&args.paper, &args.papers, &args.keyword) {
        (Some(p), None, None) => QuerySpec::single_paper(p),
        (None, Some(pair), None) => QuerySpec::two_paper(&pair.0, &pair.1),
        (None, None, Some(k)) => QuerySpec::keyword(k),
        _ => {
            return Err(Error::Validation(
                "give exactly one of --paper ID, --papers A,B or --keyword TEXT".into(),
            ))
        }
    };
    spec.chain_length = args.len;
    spec.r = args.r;
    spec.com_t = args.com_t;
    spec.m = args.m;
    spec.n = args.n;
    spec.beam_width = args.beam_width;
    spec.weights = args.weights;
    Ok(spec)
}

/// Parameters baked into the factorization cannot be changed per query.
pub fn check_immutable(args: &QueryArgs, config: &EngineConfig) -> Result<()> {
    if let Some(k) = args.k.filter(|&k| k != config.k) {
        return Err(Error::Validation(format!(
            "index was built with K = {}, not {k}; rebuild the index to change it",
            config.k
        )));
    }
    if let Some(seed) = args.seed.filter(|&s| s != config.seed) {
        return Err(Error::Validation(format!(
            "index was built with seed {}, not {seed}; rebuild the index to change it",
            config.seed
        )));
    }
    Ok(())
}

pub fn cmd_query(args: &QueryArgs, exec: Execution) -> Result<QueryOutput> {
    let spec = query_spec(args)?;
    let index = Index::load(&args.index)?;
    check_immutable(args, &index.config)?;
    let outcome = run_query(&index, &spec, exec)?;
    Ok(QueryOutput {
        bytes: export_graph(&outcome.graph, args.format),
        warnings: outcome.warnings,
    })
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let planted = planted_corpus(&PlantedSpec {
        n_papers: args.papers,
        n_blocks: args.blocks,
        n_bridges: args.bridges,
        seed: args.seed,
        ..Default::default()
    })?;
    fs::write(&args.out, planted.corpus.to_jsonl()).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })
}
