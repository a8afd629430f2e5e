use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{by_relevance, CandidatePool, PoolSource};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::factorization::{Communities, MetaFacModel};
use crate::index::Index;

fn check_member(communities: &Communities, corpus: &Corpus, p: usize, k: usize) -> Result<()> {
    if k >= communities.members.len() {
        return Err(Error::Lookup(format!("community {k} does not exist")));
    }
    if !communities.contains(k, p) {
        return Err(Error::query(format!("paper {} is not in community {k}", corpus.get(p).id)));
    }
    Ok(())
}

fn too_small(k: usize, size: usize, chain_length: usize) -> Error {
    Error::Validation(format!(
        "community too small: community {k} offers {size} candidates for a chain of {chain_length}"
    ))
}

/// Affinity `Σ_k p_k Π_i U1(i, k)` of a set of papers.
fn affinity(model: &MetaFacModel, papers: &[usize]) -> f64 {
    (0..model.k)
        .map(|k| model.core[k] * papers.iter().map(|&i| model.papers.get(i, k)).product::<f64>())
        .sum()
}

/// Top `m` members of community `k` by affinity with `p`, always including
/// `p` itself.
pub fn candidate_pool_single(
    model: &MetaFacModel,
    communities: &Communities,
    corpus: &Corpus,
    p: usize,
    k: usize,
    m: usize,
    chain_length: usize,
) -> Result<CandidatePool> {
    check_member(communities, corpus, p, k)?;
    let members = &communities.members[k];
    if members.len() < chain_length {
        return Err(too_small(k, members.len(), chain_length));
    }
    let mut scored: Vec<(usize, f64)> = members.iter().map(|&i| (i, affinity(model, &[p, i]))).collect();
    scored.sort_by(|a, b| by_relevance(corpus, a, b));
    scored.truncate(m);
    if !scored.iter().any(|&(i, _)| i == p) {
        scored.pop();
        scored.push((p, affinity(model, &[p, p])));
        scored.sort_by(|a, b| by_relevance(corpus, a, b));
    }
    Ok(CandidatePool {
        community: k,
        papers: scored,
        source: PoolSource::SinglePaper(p),
    })
}

/// Top `m` members of community `k` lying strictly between `s` and `t` in
/// chronological order, ranked by joint affinity with both, plus the two
/// endpoints.
#[allow(clippy::too_many_arguments)]
pub fn candidate_pool_pair(
    model: &MetaFacModel,
    communities: &Communities,
    corpus: &Corpus,
    s: usize,
    t: usize,
    k: usize,
    m: usize,
    chain_length: usize,
) -> Result<CandidatePool> {
    if s == t {
        return Err(Error::validation("distinct papers required"));
    }
    let (s, t) = if corpus.chrono_key(s) <= corpus.chrono_key(t) { (s, t) } else { (t, s) };
    check_member(communities, corpus, s, k)?;
    check_member(communities, corpus, t, k)?;
    let (lo, hi) = (corpus.chrono_key(s), corpus.chrono_key(t));
    let mut scored: Vec<(usize, f64)> = communities.members[k]
        .iter()
        .filter(|&&i| {
            let key = corpus.chrono_key(i);
            key > lo && key < hi
        })
        .map(|&i| (i, affinity(model, &[s, t, i])))
        .collect();
    scored.sort_by(|a, b| by_relevance(corpus, a, b));
    scored.truncate(m);
    scored.push((s, affinity(model, &[s, t, s])));
    scored.push((t, affinity(model, &[s, t, t])));
    scored.sort_by(|a, b| by_relevance(corpus, a, b));
    if scored.len() < chain_length {
        return Err(too_small(k, scored.len(), chain_length));
    }
    Ok(CandidatePool {
        community: k,
        papers: scored,
        source: PoolSource::PaperPair(s, t),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPool {
    pub community: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordPools {
    /// Pools large enough for the chain, in community order.
    pub pools: Vec<CandidatePool>,
    pub dropped: Vec<DroppedPool>,
}

/// The `top_n` papers with positive summed TF-IDF over the query's stems,
/// split by soft community membership.
pub fn candidate_pool_keyword(
    index: &Index,
    communities: &Communities,
    keyword: &str,
    top_n: usize,
    chain_length: usize,
) -> Result<KeywordPools> {
    let terms = index.vocab.query_terms(keyword, &index.stopwords);
    if terms.is_empty() {
        return Err(Error::query(format!("unknown keyword: no term of \"{keyword}\" is in the vocabulary")));
    }
    let content = &index.relations.content;
    let mut scored: Vec<(usize, f64)> = (0..index.corpus.len())
        .map(|p| (p, terms.iter().map(|&w| content.get(p, w)).sum::<f64>()))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    scored.sort_by(|a, b| by_relevance(&index.corpus, a, b));
    scored.truncate(top_n);

    let mut groups: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for &(p, v) in &scored {
        for &k in &communities.of_paper[p] {
            groups.entry(k).or_default().push((p, v));
        }
    }
    let mut pools = Vec::new();
    let mut dropped = Vec::new();
    for (community, papers) in groups {
        if papers.len() < chain_length {
            dropped.push(DroppedPool {
                community,
                size: papers.len(),
            });
        } else {
            pools.push(CandidatePool {
                community,
                papers,
                source: PoolSource::Keyword(keyword.to_string()),
            });
        }
    }
    Ok(KeywordPools { pools, dropped })
}
