//! Paper evolution graphs: per-community chain extraction and merging.

mod export;

pub use export::{export_graph, ExportFormat};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chains::{
    best_chain, candidate_pool_keyword, candidate_pool_pair, candidate_pool_single, CandidatePool, QuerySpec, QueryTarget,
    SearchMode, SearchParams,
};
use crate::coherence::{Chain, CoherenceResult};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::factorization::Communities;
use crate::index::Index;

/// Topic words reported per chain.
pub const TOPIC_WORDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PegNode {
    pub id: String,
    pub title: String,
    pub year: i32,
    pub communities: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PegEdge {
    pub from: String,
    pub to: String,
    pub chains: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PegChain {
    pub label: String,
    pub papers: Vec<String>,
    pub score: f64,
    pub topic_words: Vec<String>,
}

/// Union of labeled chains. Nodes are in chronological order, edges by
/// their endpoints' chronological positions, chains in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionGraph {
    pub nodes: Vec<PegNode>,
    pub edges: Vec<PegEdge>,
    pub chains: Vec<PegChain>,
}

impl EvolutionGraph {
    pub fn from_json(bytes: &[u8]) -> Result<EvolutionGraph> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            ordinal: e.line(),
            message: format!("evolution graph: {e}"),
        })
    }

    pub fn node(&self, id: &str) -> Option<&PegNode> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// A scored chain ready to be merged.
#[derive(Debug, Clone)]
pub struct LabeledChain {
    pub label: String,
    pub chain: Chain,
    pub coherence: CoherenceResult,
}

/// Merge chains into one graph; shared papers become one node and shared
/// steps one edge carrying every label.
pub fn merge_chains(
    corpus: &Corpus,
    communities: &Communities,
    terms: &[String],
    chains: &[LabeledChain],
) -> Result<EvolutionGraph> {
    if chains.is_empty() {
        return Err(Error::validation("nothing to merge: no chains"));
    }
    let mut nodes = BTreeSet::new();
    let mut edges: BTreeMap<(usize, usize), BTreeSet<&str>> = BTreeMap::new();
    for lc in chains {
        nodes.extend(lc.chain.papers().iter().copied());
        for link in lc.chain.links() {
            edges.entry(link).or_default().insert(&lc.label);
        }
    }
    let chrono = |p: &usize| corpus.chrono_key(*p);
    let mut nodes: Vec<usize> = nodes.into_iter().collect();
    nodes.sort_by_key(chrono);
    let mut edge_list: Vec<((usize, usize), BTreeSet<&str>)> = edges.into_iter().collect();
    edge_list.sort_by(|a, b| (chrono(&a.0 .0), chrono(&a.0 .1)).cmp(&(chrono(&b.0 .0), chrono(&b.0 .1))));
    let mut peg_chains: Vec<PegChain> = chains
        .iter()
        .map(|lc| PegChain {
            label: lc.label.clone(),
            papers: lc.chain.ids(corpus).into_iter().map(String::from).collect(),
            score: lc.coherence.score,
            topic_words: lc
                .coherence
                .top_words(TOPIC_WORDS)
                .into_iter()
                .map(|w| terms.get(w).cloned().unwrap_or_else(|| format!("#{w}")))
                .collect(),
        })
        .collect();
    peg_chains.sort_by(|a, b| label_key(&a.label).cmp(&label_key(&b.label)));
    Ok(EvolutionGraph {
        nodes: nodes
            .into_iter()
            .map(|p| {
                let rec = corpus.get(p);
                PegNode {
                    id: rec.id.clone(),
                    title: rec.title.clone(),
                    year: rec.year,
                    communities: communities.of_paper[p].clone(),
                }
            })
            .collect(),
        edges: edge_list
            .into_iter()
            .map(|((a, b), labels)| PegEdge {
                from: corpus.get(a).id.clone(),
                to: corpus.get(b).id.clone(),
                chains: sort_labels(labels.into_iter()),
            })
            .collect(),
        chains: peg_chains,
    })
}

/// Orders `chain-2` before `chain-10`; other labels sort after, by text.
pub(crate) fn label_key(label: &str) -> (usize, &str) {
    let n = label.strip_prefix("chain-").and_then(|n| n.parse().ok()).unwrap_or(usize::MAX);
    (n, label)
}

fn sort_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<&str> = labels.collect();
    v.sort_by_key(|l| label_key(l));
    v.into_iter().map(String::from).collect()
}

/// A finished query: the graph plus notes on communities that were skipped.
#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub graph: EvolutionGraph,
    pub warnings: Vec<String>,
}

/// Per-community failures of the query itself are recorded and skipped;
/// anything else aborts the query.
fn degrade(k: usize, e: Error, warnings: &mut Vec<String>) -> Result<()> {
    match e {
        Error::Validation(_) | Error::Query(_) => {
            warnings.push(format!("community {k} skipped: {e}"));
            Ok(())
        }
        other => Err(other),
    }
}

/// Resolve a query against an index, extract one chain per relevant
/// community and merge them.
pub fn run_query(index: &Index, spec: &QuerySpec, exec: Execution) -> Result<QueryOutcome> {
    let resolved = spec.resolve(&index.config, &index.corpus)?;
    let cfg = &resolved.config;
    let communities = index.communities(cfg.com_t);
    let corpus = &index.corpus;
    let mut warnings = Vec::new();
    let mut pools: Vec<CandidatePool> = Vec::new();
    match &resolved.target {
        QueryTarget::Single(p) => {
            let ks = &communities.of_paper[*p];
            if ks.is_empty() {
                return Err(Error::query(format!("paper {} belongs to no community", corpus.get(*p).id)));
            }
            for &k in ks {
                match candidate_pool_single(&index.model, &communities, corpus, *p, k, cfg.m, cfg.chain_length) {
                    Ok(pool) => pools.push(pool),
                    Err(e) => degrade(k, e, &mut warnings)?,
                }
            }
        }
        QueryTarget::Pair(s, t) => {
            let shared: Vec<usize> = communities.of_paper[*s]
                .iter()
                .copied()
                .filter(|k| communities.of_paper[*t].contains(k))
                .collect();
            if shared.is_empty() {
                return Err(Error::query("papers share no community"));
            }
            for k in shared {
                match candidate_pool_pair(&index.model, &communities, corpus, *s, *t, k, cfg.m, cfg.chain_length) {
                    Ok(pool) => pools.push(pool),
                    Err(e) => degrade(k, e, &mut warnings)?,
                }
            }
        }
        QueryTarget::Keyword(text) => {
            let out = candidate_pool_keyword(index, &communities, text, cfg.n, cfg.chain_length)?;
            for d in out.dropped {
                warnings.push(format!(
                    "community {} skipped: community too small ({} relevant papers for a chain of {})",
                    d.community, d.size, cfg.chain_length
                ));
            }
            pools = out.pools;
        }
    }

    let params = SearchParams {
        chain_length: cfg.chain_length,
        r: cfg.r,
        mode: SearchMode::Beam(cfg.beam_width),
        execution: exec,
    };
    let constraint = resolved.target.constraint();
    let found = exec.map_slice(&pools, |pool| best_chain(corpus, pool, constraint, &params, &index.influence));
    let mut chains = Vec::new();
    for (pool, res) in pools.iter().zip(found) {
        match res {
            Ok((chain, coherence)) => chains.push((pool.community, chain, coherence)),
            Err(e) => degrade(pool.community, e, &mut warnings)?,
        }
    }
    if chains.is_empty() {
        let mut msg = String::from("no coherent chain found");
        if !warnings.is_empty() {
            msg.push_str(": ");
            msg.push_str(&warnings.join("; "));
        }
        return Err(Error::Query(msg));
    }
    let labeled: Vec<LabeledChain> = chains
        .into_iter()
        .enumerate()
        .map(|(i, (_, chain, coherence))| LabeledChain {
            label: format!("chain-{}", i + 1),
            chain,
            coherence,
        })
        .collect();
    let graph = merge_chains(corpus, &communities, index.vocab.terms(), &labeled)?;
    Ok(QueryOutcome { graph, warnings })
}
