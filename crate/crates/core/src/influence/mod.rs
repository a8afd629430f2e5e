//! Word influence between papers via random walks on the paper–word graph.
//!
//! `influence(i, j | w)` is the drop in the probability of reaching paper
//! `j` from paper `i` when word `w` loses its outgoing edges. Two routes
//! compute it: [`word_influence_vector`] re-runs the blocked walk for every
//! visited word, while [`InfluenceEngine`] obtains all words at once from a
//! rank-one update of the walk's resolvent, reusing per-source, per-target
//! and per-word solves across pairs.

mod walk;

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

pub use walk::{
    build_walk_graph, from_content, visit_probabilities, walk_mass, BipartiteWalkGraph, WalkMass, DEFAULT_RESTART,
    WALK_MAX_ITERS, WALK_TOLERANCE,
};

/// Tolerance for the solves behind the engine's rank-one route.
const ENGINE_TOLERANCE: f64 = 1e-13;

/// Per-word influence of a source paper on a target paper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceProfile {
    pub source: usize,
    pub target: usize,
    pub n_words: usize,
    /// Unblocked visit probability `p(target | source)`.
    pub baseline: f64,
    /// `(word, influence)` sorted by word; omitted words have influence 0.
    pub per_word: Vec<(usize, f64)>,
}

impl InfluenceProfile {
    pub fn get(&self, word: usize) -> f64 {
        match self.per_word.binary_search_by_key(&word, |(w, _)| *w) {
            Ok(pos) => self.per_word[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_words];
        for &(w, x) in &self.per_word {
            v[w] = x;
        }
        v
    }

    pub fn max_influence(&self) -> f64 {
        self.per_word.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// Direct route: one blocked walk per word visited from `source`.
pub fn word_influence_vector(g: &BipartiteWalkGraph, source: usize, target: usize) -> Result<InfluenceProfile> {
    if target >= g.n_papers() {
        return Err(Error::Lookup(format!("paper index {target} out of range")));
    }
    let base = walk_mass(g, source, None, WALK_TOLERANCE, WALK_MAX_ITERS)?;
    let z = base.paper_total();
    let baseline = base.papers[target] / z;
    let mut per_word = Vec::new();
    for (w, &mass) in base.words.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let blocked = walk_mass(g, source, Some(w), WALK_TOLERANCE, WALK_MAX_ITERS)?;
        let v = baseline - blocked.papers[target] / z;
        if v != 0.0 {
            per_word.push((w, v));
        }
    }
    Ok(InfluenceProfile {
        source,
        target,
        n_words: g.n_words(),
        baseline,
        per_word,
    })
}

/// Link strength under a topic: `Σ_n t_n · influence(w_n)`.
pub fn topic_similarity(profile: &InfluenceProfile, topic: &[f64]) -> Result<f64> {
    if topic.len() != profile.n_words {
        return Err(Error::validation(format!(
            "topic has {} weights, vocabulary has {}",
            topic.len(),
            profile.n_words
        )));
    }
    if topic.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::validation("topic weights must be nonnegative"));
    }
    let total: f64 = topic.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("topic weights sum to {total}, expected 1")));
    }
    Ok(profile.per_word.iter().map(|&(w, v)| topic[w] * v).sum())
}

/// Anything that can hand out influence profiles for ordered paper pairs.
pub trait InfluenceSource: Sync {
    fn n_words(&self) -> usize;

    fn profile(&self, source: usize, target: usize) -> Result<Arc<InfluenceProfile>>;

    /// Warm whatever caches back `profile` for a batch of pairs.
    fn prefetch(&self, _pairs: &[(usize, usize)], _exec: Execution) -> Result<()> {
        Ok(())
    }
}

struct Forward {
    words: Vec<f64>,
    papers: Vec<f64>,
    paper_total: f64,
    /// Start paper has no words, so the walker never leaves it.
    stuck: bool,
}

type Memo<K, V> = RwLock<HashMap<K, Arc<V>>>;

/// Memoizing influence calculator over an immutable walk graph.
///
/// With `x` the restart walk from the source, `z_j` the target's row of the
/// resolvent `(I − (1 − α)Tᵀ)⁻¹`, `t_w` the outgoing distribution of word
/// `w` and `h_w = t_w · z_w`, blocking `w` lowers the target's mass by
/// `(1 − α) x_w (t_w · z_j) / (1 + (1 − α) h_w)`. Every term is nonnegative.
pub struct InfluenceEngine {
    graph: BipartiteWalkGraph,
    forward: Memo<usize, Forward>,
    target_rows: Memo<usize, Vec<f64>>,
    self_return: Memo<usize, f64>,
    profiles: Memo<(usize, usize), InfluenceProfile>,
}

impl InfluenceEngine {
    pub fn new(graph: BipartiteWalkGraph) -> Self {
        InfluenceEngine {
            graph,
            forward: RwLock::default(),
            target_rows: RwLock::default(),
            self_return: RwLock::default(),
            profiles: RwLock::default(),
        }
    }

    pub fn graph(&self) -> &BipartiteWalkGraph {
        &self.graph
    }

    pub fn cached_profiles(&self) -> usize {
        self.profiles.read().unwrap().len()
    }

    fn memo<K, V>(memo: &Memo<K, V>, key: K, compute: impl FnOnce() -> Result<V>) -> Result<Arc<V>>
    where
        K: std::hash::Hash + Eq + Copy,
    {
        if let Some(v) = memo.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(compute()?);
        Ok(memo.write().unwrap().entry(key).or_insert(v).clone())
    }

    fn forward(&self, source: usize) -> Result<Arc<Forward>> {
        Self::memo(&self.forward, source, || {
            let stuck = self.graph.is_empty_paper(source);
            let mass = walk_mass(&self.graph, source, None, ENGINE_TOLERANCE, WALK_MAX_ITERS)?;
            Ok(Forward {
                paper_total: mass.paper_total(),
                words: mass.words,
                papers: mass.papers,
                stuck,
            })
        })
    }

    fn target_row(&self, target: usize) -> Result<Arc<Vec<f64>>> {
        Self::memo(&self.target_rows, target, || {
            walk::inverse_row(&self.graph, target, ENGINE_TOLERANCE, WALK_MAX_ITERS).map(|(p, _)| p)
        })
    }

    fn self_return(&self, word: usize) -> Result<Arc<f64>> {
        Self::memo(&self.self_return, word, || {
            let node = self.graph.n_papers() + word;
            let (zp, _) = walk::inverse_row(&self.graph, node, ENGINE_TOLERANCE, WALK_MAX_ITERS)?;
            Ok(self.graph.word_to_paper.row(word).map(|(p, t)| t * zp[p]).sum())
        })
    }

    fn compute(&self, source: usize, target: usize) -> Result<InfluenceProfile> {
        let g = &self.graph;
        if source >= g.n_papers() || target >= g.n_papers() {
            return Err(Error::Lookup(format!("paper pair ({source}, {target}) out of range")));
        }
        let fwd = self.forward(source)?;
        let baseline = fwd.papers[target] / fwd.paper_total;
        let mut per_word = Vec::new();
        if !fwd.stuck {
            let zj = self.target_row(target)?;
            let damp = 1.0 - g.restart;
            for (w, &xw) in fwd.words.iter().enumerate() {
                if xw <= 0.0 {
                    continue;
                }
                let reach: f64 = g.word_to_paper.row(w).map(|(p, t)| t * zj[p]).sum();
                if reach <= 0.0 {
                    continue;
                }
                let h = *self.self_return(w)?;
                let v = damp * xw * reach / (1.0 + damp * h) / fwd.paper_total;
                if v > 0.0 {
                    per_word.push((w, v));
                }
            }
        }
        Ok(InfluenceProfile {
            source,
            target,
            n_words: g.n_words(),
            baseline,
            per_word,
        })
    }

    /// Persist memoized profiles, tagged with the corpus hash and restart.
    pub fn save_cache(&self, path: impl AsRef<Path>, corpus_hash: &str) -> Result<()> {
        let path = path.as_ref();
        let mut profiles: Vec<InfluenceProfile> =
            self.profiles.read().unwrap().values().map(|p| (**p).clone()).collect();
        profiles.sort_by_key(|p| (p.source, p.target));
        let file = CacheFile {
            corpus_hash: corpus_hash.to_string(),
            restart: self.graph.restart,
            profiles,
        };
        let text = serde_json::to_string(&file).expect("cache serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Load profiles written by [`save_cache`](Self::save_cache). Returns the
    /// number of profiles adopted; a cache for a different corpus or restart
    /// is rejected.
    pub fn load_cache(&self, path: impl AsRef<Path>, corpus_hash: &str) -> Result<usize> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CacheFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            ordinal: e.line(),
            message: format!("influence cache: {e}"),
        })?;
        if file.corpus_hash != corpus_hash || file.restart != self.graph.restart {
            return Err(Error::validation("influence cache was built for a different index"));
        }
        let mut memo = self.profiles.write().unwrap();
        let n = file.profiles.len();
        for p in file.profiles {
            memo.insert((p.source, p.target), Arc::new(p));
        }
        Ok(n)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    corpus_hash: String,
    restart: f64,
    profiles: Vec<InfluenceProfile>,
}

impl InfluenceSource for InfluenceEngine {
    fn n_words(&self) -> usize {
        self.graph.n_words()
    }

    fn profile(&self, source: usize, target: usize) -> Result<Arc<InfluenceProfile>> {
        Self::memo(&self.profiles, (source, target), || self.compute(source, target))
    }

    fn prefetch(&self, pairs: &[(usize, usize)], exec: Execution) -> Result<()> {
        let missing: Vec<(usize, usize)> = {
            let memo = self.profiles.read().unwrap();
            pairs.iter().copied().filter(|k| !memo.contains_key(k)).collect()
        };
        if missing.is_empty() {
            return Ok(());
        }
        let mut sources: Vec<usize> = missing.iter().map(|p| p.0).collect();
        sources.sort_unstable();
        sources.dedup();
        let mut targets: Vec<usize> = missing.iter().map(|p| p.1).collect();
        targets.sort_unstable();
        targets.dedup();
        exec.map_slice(&sources, |&s| self.forward(s).map(|_| ()))
            .into_iter()
            .collect::<Result<()>>()?;
        exec.map_slice(&targets, |&t| self.target_row(t).map(|_| ()))
            .into_iter()
            .collect::<Result<()>>()?;
        let words: Vec<usize> = (0..self.graph.n_words()).collect();
        let needed: Vec<usize> = {
            let fwd = self.forward.read().unwrap();
            let done = self.self_return.read().unwrap();
            words
                .into_iter()
                .filter(|w| !done.contains_key(w) && sources.iter().any(|s| fwd[s].words[*w] > 0.0))
                .collect()
        };
        exec.map_slice(&needed, |&w| self.self_return(w).map(|_| ()))
            .into_iter()
            .collect::<Result<()>>()?;
        exec.map_slice(&missing, |&(s, t)| self.profile(s, t).map(|_| ()))
            .into_iter()
            .collect::<Result<()>>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    fn graph(rows: usize, cols: usize, t: Vec<(usize, usize, f64)>) -> BipartiteWalkGraph {
        from_content(&SparseMatrix::from_triplets(rows, cols, t), 0.15).unwrap()
    }

    fn toy() -> BipartiteWalkGraph {
        // four papers, five words
        graph(
            4,
            5,
            vec![
                (0, 0, 1.0),
                (0, 1, 2.0),
                (1, 1, 1.0),
                (1, 2, 1.5),
                (2, 2, 0.5),
                (2, 3, 1.0),
                (3, 3, 2.0),
                (3, 4, 1.0),
                (0, 4, 0.3),
            ],
        )
    }

    #[test]
    fn unique_channel_carries_all_influence() {
        // words 1 and 2 exist in the vocabulary but carry no edges
        let g = graph(2, 3, vec![(0, 0, 1.0), (1, 0, 1.0)]);
        let p = word_influence_vector(&g, 0, 1).unwrap();
        assert!((p.get(0) - p.baseline).abs() < 1e-9);
        assert!(p.baseline > 0.0);
        assert_eq!(p.per_word.len(), 1);
        let fast = InfluenceEngine::new(g).profile(0, 1).unwrap();
        assert!((fast.get(0) - p.baseline).abs() < 1e-9);
        assert_eq!(fast.per_word.len(), 1);
    }

    #[test]
    fn self_influence_is_nonnegative() {
        let g = toy();
        let p = word_influence_vector(&g, 2, 2).unwrap();
        assert!(p.per_word.iter().all(|(_, v)| *v >= -1e-12));
    }

    #[test]
    fn engine_matches_direct_route() {
        let g = toy();
        let engine = InfluenceEngine::new(g.clone());
        for i in 0..4 {
            for j in 0..4 {
                let direct = word_influence_vector(&g, i, j).unwrap().dense();
                let fast = engine.profile(i, j).unwrap();
                for (w, d) in direct.iter().enumerate() {
                    assert!((d - fast.get(w)).abs() < 1e-9, "pair ({i},{j}) word {w}: {d} vs {}", fast.get(w));
                }
            }
        }
    }

    #[test]
    fn prefetch_then_lookup_is_identical() {
        let engine = InfluenceEngine::new(toy());
        let pairs = [(0, 1), (1, 2), (2, 3), (0, 3)];
        engine.prefetch(&pairs, Execution::Parallel).unwrap();
        assert_eq!(engine.cached_profiles(), 4);
        let fresh = InfluenceEngine::new(toy());
        for &(s, t) in &pairs {
            assert_eq!(*engine.profile(s, t).unwrap(), *fresh.profile(s, t).unwrap());
        }
    }

    #[test]
    fn stuck_source_has_no_influence() {
        let g = graph(3, 1, vec![(0, 0, 1.0), (1, 0, 1.0)]);
        let engine = InfluenceEngine::new(g);
        let p = engine.profile(2, 0).unwrap();
        assert!(p.per_word.is_empty());
        assert_eq!(p.baseline, 0.0);
    }

    #[test]
    fn similarity_of_basis_and_uniform_topics() {
        let p = InfluenceProfile {
            source: 0,
            target: 1,
            n_words: 4,
            baseline: 0.5,
            per_word: vec![(0, 0.1), (2, 0.3)],
        };
        assert_eq!(topic_similarity(&p, &[0.0, 0.0, 1.0, 0.0]).unwrap(), 0.3);
        assert!((topic_similarity(&p, &[0.25; 4]).unwrap() - 0.1).abs() < 1e-15);
        assert!(topic_similarity(&p, &[0.5; 2]).is_err());
        let zero = InfluenceProfile { per_word: vec![], ..p };
        assert_eq!(topic_similarity(&zero, &[0.25; 4]).unwrap(), 0.0);
    }

    #[test]
    fn cache_file_round_trip() {
        let engine = InfluenceEngine::new(toy());
        engine.profile(0, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("influence.json");
        engine.save_cache(&path, "abc").unwrap();
        let other = InfluenceEngine::new(toy());
        assert_eq!(other.load_cache(&path, "abc").unwrap(), 1);
        assert_eq!(*other.profile(0, 3).unwrap(), *engine.profile(0, 3).unwrap());
        assert!(other.load_cache(&path, "zzz").is_err());
    }
}
