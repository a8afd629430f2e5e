//! Topical coherence of chronological paper chains.
//!
//! A chain's coherence is its weakest link's strength under the best topic
//! weighting, either one topic shared by every link or a sequence of topics
//! that may drift by at most `r` per word between consecutive links.

pub mod lp;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::influence::InfluenceProfile;
use lp::{LinearProgram, PivotRule, Relation};

/// Words seeded into the restricted program from each link before pricing.
const SEED_WORDS_PER_LINK: usize = 4;
/// Words added per pricing round.
const PRICING_BATCH: usize = 16;
const PRICING_TOLERANCE: f64 = 1e-10;
const MAX_PRICING_ROUNDS: usize = 10_000;

/// Chronologically ordered simple path of papers, stored as corpus positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chain {
    papers: Vec<usize>,
}

impl Chain {
    /// Checks length ≥ 2, distinctness and strict `(year, id)` order.
    pub fn new(corpus: &Corpus, papers: Vec<usize>) -> Result<Chain> {
        if papers.len() < 2 {
            return Err(Error::validation("a chain needs at least two papers"));
        }
        if let Some(&p) = papers.iter().find(|&&p| p >= corpus.len()) {
            return Err(Error::Lookup(format!("paper index {p} out of range")));
        }
        for pair in papers.windows(2) {
            if corpus.chrono_key(pair[0]) >= corpus.chrono_key(pair[1]) {
                return Err(Error::validation(format!(
                    "chain is not chronological at {} -> {}",
                    corpus.get(pair[0]).id,
                    corpus.get(pair[1]).id
                )));
            }
        }
        Ok(Chain { papers })
    }

    pub fn from_ids<S: AsRef<str>>(corpus: &Corpus, ids: &[S]) -> Result<Chain> {
        let papers = ids.iter().map(|id| corpus.require(id.as_ref())).collect::<Result<_>>()?;
        Chain::new(corpus, papers)
    }

    pub fn papers(&self) -> &[usize] {
        &self.papers
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.papers.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn ids<'a>(&self, corpus: &'a Corpus) -> Vec<&'a str> {
        self.papers.iter().map(|&p| corpus.get(p).id.as_str()).collect()
    }
}

/// One topic per link, each over the active words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSequence {
    pub topics: Vec<Vec<f64>>,
    /// `None` for a single shared topic.
    pub smoothness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceResult {
    pub score: f64,
    pub topics: TopicSequence,
    /// Vocabulary indices that the topic vectors range over.
    pub active_words: Vec<usize>,
}

impl CoherenceResult {
    /// Topic of link `j` spread back over the full vocabulary.
    pub fn dense_topic(&self, j: usize, n_words: usize) -> Vec<f64> {
        let mut t = vec![0.0; n_words];
        for (&w, &v) in self.active_words.iter().zip(&self.topics.topics[j]) {
            t[w] = v;
        }
        t
    }

    /// The `k` heaviest words of the link-averaged topic, heaviest first.
    pub fn top_words(&self, k: usize) -> Vec<usize> {
        let links = self.topics.topics.len().max(1) as f64;
        let mut avg: Vec<(usize, f64)> = self
            .active_words
            .iter()
            .enumerate()
            .map(|(a, &w)| (w, self.topics.topics.iter().map(|t| t[a]).sum::<f64>() / links))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        avg.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        avg.into_iter().take(k).map(|(w, _)| w).collect()
    }
}

/// Optimum of the max-min program over dense link vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximinSolution {
    pub score: f64,
    /// `weights[j]` is link `j`'s topic over all `d` words.
    pub weights: Vec<Vec<f64>>,
}

/// Maximize `s` subject to `a_j·t_j ≥ s`, `t_j` on the simplex and
/// `|t_{j,i} − t_{j+1,i}| ≤ r` for every word `i`.
pub fn solve_maximin_lp(link_vectors: &[Vec<f64>], r: f64) -> Result<MaximinSolution> {
    if link_vectors.is_empty() {
        return Err(Error::validation("no links"));
    }
    let d = link_vectors[0].len();
    if d == 0 {
        return Err(Error::validation("link vectors have dimension 0"));
    }
    if link_vectors.iter().any(|v| v.len() != d) {
        return Err(Error::validation("link vectors differ in dimension"));
    }
    let sparse: Vec<Vec<(usize, f64)>> = link_vectors
        .iter()
        .map(|v| v.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect())
        .collect();
    let refs: Vec<&[(usize, f64)]> = sparse.iter().map(Vec::as_slice).collect();
    let res = maximin(&refs, d, Some(r))?;
    let weights = (0..link_vectors.len()).map(|j| res.dense_topic(j, d)).collect();
    Ok(MaximinSolution {
        score: res.score,
        weights,
    })
}

/// Best single topic shared by every link of the chain.
pub fn coherence_fixed_topic(chain: &Chain, profiles: &[&InfluenceProfile]) -> Result<CoherenceResult> {
    check_profiles(chain, profiles)?;
    link_coherence(profiles, None)
}

/// Best sequence of topics drifting at most `r` per word between links.
pub fn coherence_evolving_topic(chain: &Chain, profiles: &[&InfluenceProfile], r: f64) -> Result<CoherenceResult> {
    check_profiles(chain, profiles)?;
    link_coherence(profiles, Some(r))
}

fn check_profiles(chain: &Chain, profiles: &[&InfluenceProfile]) -> Result<()> {
    if profiles.len() + 1 != chain.len() {
        return Err(Error::validation(format!(
            "{} profiles for a chain of {} papers",
            profiles.len(),
            chain.len()
        )));
    }
    for ((s, t), p) in chain.links().zip(profiles) {
        if (p.source, p.target) != (s, t) {
            return Err(Error::validation(format!(
                "profile for ({}, {}) given for link ({s}, {t})",
                p.source, p.target
            )));
        }
    }
    Ok(())
}

/// Coherence of consecutive links given by their influence profiles, with
/// `r = None` meaning one shared topic.
pub fn link_coherence(profiles: &[&InfluenceProfile], r: Option<f64>) -> Result<CoherenceResult> {
    let Some(first) = profiles.first() else {
        return Err(Error::validation("no links"));
    };
    let n_words = first.n_words;
    if profiles.iter().any(|p| p.n_words != n_words) {
        return Err(Error::validation("profiles disagree on vocabulary size"));
    }
    let links: Vec<&[(usize, f64)]> = profiles.iter().map(|p| p.per_word.as_slice()).collect();
    maximin(&links, n_words, r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Shared,
    /// Per-link topics; `None` when the drift bound cannot bind (`r ≥ 1`).
    Evolving(Option<f64>),
}

/// Column generation: solve over a few promising words, then add any word
/// whose variables price out positively under the optimal duals, until none
/// does. The restricted optimum is then optimal over the whole vocabulary.
fn maximin(links: &[&[(usize, f64)]], n_words: usize, r: Option<f64>) -> Result<CoherenceResult> {
    let mode = match r {
        None => Mode::Shared,
        Some(r) if !(r >= 0.0) => {
            return Err(Error::validation(format!("smoothness r = {r} must be nonnegative")));
        }
        Some(r) => Mode::Evolving((r < 1.0).then_some(r)),
    };
    let ell = links.len();
    let mut support = BTreeSet::new();
    let mut scale: f64 = 0.0;
    for link in links {
        for &(w, v) in *link {
            if !v.is_finite() || v < -1e-12 {
                return Err(Error::validation(format!("influence {v} of word {w} is not a nonnegative number")));
            }
            if w >= n_words {
                return Err(Error::Lookup(format!("word index {w} out of range")));
            }
            if v > 0.0 {
                support.insert(w);
                scale = scale.max(v);
            }
        }
    }
    if scale == 0.0 {
        let uniform = vec![1.0 / n_words as f64; n_words];
        return Ok(CoherenceResult {
            score: 0.0,
            topics: TopicSequence {
                topics: vec![uniform; ell],
                smoothness: r,
            },
            active_words: (0..n_words).collect(),
        });
    }
    // Dense ℓ × |support| matrix, scaled so the largest entry is 1.
    let support: Vec<usize> = support.into_iter().collect();
    let mut a = vec![vec![0.0; support.len()]; ell];
    for (j, link) in links.iter().enumerate() {
        for &(w, v) in *link {
            if v > 0.0 {
                let c = support.binary_search(&w).expect("word in support");
                a[j][c] = v / scale;
            }
        }
    }

    let mut active: BTreeSet<usize> = BTreeSet::new();
    for row in &a {
        let mut order: Vec<usize> = (0..row.len()).filter(|&c| row[c] > 0.0).collect();
        order.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        active.extend(order.into_iter().take(SEED_WORDS_PER_LINK));
    }

    for _ in 0..MAX_PRICING_ROUNDS {
        let cols: Vec<usize> = active.iter().copied().collect();
        let sol = solve_restricted(&a, &cols, mode)?;
        let mut entering: Vec<(f64, usize)> = (0..support.len())
            .filter(|c| !active.contains(c))
            .filter_map(|c| {
                let gain = price(&a, c, &sol, mode);
                (gain > PRICING_TOLERANCE).then_some((gain, c))
            })
            .collect();
        if entering.is_empty() {
            let active_words: Vec<usize> = cols.iter().map(|&c| support[c]).collect();
            let topics: Vec<Vec<f64>> = sol.topics.into_iter().map(clean_topic).collect();
            let score = (0..ell)
                .map(|j| cols.iter().zip(&topics[j]).map(|(&c, t)| a[j][c] * t).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                * scale;
            return Ok(CoherenceResult {
                score,
                topics: TopicSequence { topics, smoothness: r },
                active_words,
            });
        }
        entering.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        active.extend(entering.into_iter().take(PRICING_BATCH).map(|(_, c)| c));
    }
    Err(Error::Numeric {
        iteration: MAX_PRICING_ROUNDS,
        message: "column generation did not settle".into(),
    })
}

/// Clamp round-off below zero and renormalize onto the simplex.
fn clean_topic(mut t: Vec<f64>) -> Vec<f64> {
    for v in &mut t {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = t.iter().sum();
    if total > 0.0 {
        t.iter_mut().for_each(|v| *v /= total);
    }
    t
}

struct Restricted {
    topics: Vec<Vec<f64>>,
    /// Prices of the rows `s − a_j·t_j ≤ 0`.
    link_duals: Vec<f64>,
    /// Prices of the rows `Σ_i t_{j,i} = 1` (a single one for a shared topic).
    simplex_duals: Vec<f64>,
}

/// Best objective gain from letting word column `c` enter. With `r = 0` the
/// word's weights move together, so the reduced costs add up; otherwise one
/// link can take weight alone and any positive reduced cost helps.
fn price(a: &[Vec<f64>], c: usize, sol: &Restricted, mode: Mode) -> f64 {
    let weighted = a.iter().zip(&sol.link_duals).map(|(row, y)| y * row[c]);
    match mode {
        Mode::Shared => weighted.sum::<f64>() - sol.simplex_duals[0],
        Mode::Evolving(Some(r)) if r == 0.0 => weighted.zip(&sol.simplex_duals).map(|(g, mu)| g - mu).sum(),
        Mode::Evolving(_) => weighted
            .zip(&sol.simplex_duals)
            .map(|(g, mu)| g - mu)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// The max-min program restricted to word columns `cols` of `a`.
fn solve_restricted(a: &[Vec<f64>], cols: &[usize], mode: Mode) -> Result<Restricted> {
    let ell = a.len();
    let dc = cols.len();
    let n_topics = if mode == Mode::Shared { 1 } else { ell };
    let var = |j: usize, k: usize| 1 + (j % n_topics) * dc + k;
    let mut lp = LinearProgram::new(1 + n_topics * dc);
    lp.objective[0] = 1.0;
    for (j, row) in a.iter().enumerate() {
        let mut coeffs = vec![(0, 1.0)];
        coeffs.extend(cols.iter().enumerate().filter(|(_, &c)| row[c] != 0.0).map(|(k, &c)| (var(j, k), -row[c])));
        lp.add_row(coeffs, Relation::Le, 0.0);
    }
    for j in 0..n_topics {
        lp.add_row((0..dc).map(|k| (var(j, k), 1.0)).collect(), Relation::Eq, 1.0);
    }
    if let Mode::Evolving(Some(r)) = mode {
        for j in 0..ell.saturating_sub(1) {
            for k in 0..dc {
                lp.add_row(vec![(var(j, k), 1.0), (var(j + 1, k), -1.0)], Relation::Le, r);
                lp.add_row(vec![(var(j, k), -1.0), (var(j + 1, k), 1.0)], Relation::Le, r);
            }
        }
    }
    let sol = lp.solve(PivotRule::default())?;
    let topics = (0..ell)
        .map(|j| (0..dc).map(|k| sol.x[var(j, k)]).collect())
        .collect();
    Ok(Restricted {
        topics,
        link_duals: sol.duals[..ell].to_vec(),
        simplex_duals: sol.duals[ell..ell + n_topics].to_vec(),
    })
}
