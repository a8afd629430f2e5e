use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, Constraint};
use crate::coherence::{link_coherence, Chain, CoherenceResult};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::influence::{InfluenceProfile, InfluenceSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Score every valid chain.
    Exhaustive,
    /// Keep the best `B` partial chains per length.
    Beam(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub chain_length: usize,
    pub r: f64,
    pub mode: SearchMode,
    pub execution: Execution,
}

/// Extensions scored per parallel batch in the beam.
const BEAM_BATCH: usize = 32;

struct Searcher<'a> {
    corpus: &'a Corpus,
    source: &'a dyn InfluenceSource,
    /// Pool papers in chronological order.
    cands: Vec<usize>,
    n: usize,
    r: f64,
    exec: Execution,
    /// Position of the query paper, or the pair endpoints, in `cands`.
    constraint: Slots,
}

#[derive(Clone, Copy)]
enum Slots {
    Free,
    Contains(usize),
    Endpoints(usize, usize),
}

#[derive(Clone)]
struct Partial {
    seq: Vec<usize>,
    score: f64,
}

impl<'a> Searcher<'a> {
    fn paper(&self, slot: usize) -> usize {
        self.cands[slot]
    }

    fn profile(&self, a: usize, b: usize) -> Result<Arc<InfluenceProfile>> {
        self.source.profile(self.paper(a), self.paper(b))
    }

    fn evaluate(&self, seq: &[usize]) -> Result<CoherenceResult> {
        let profiles = seq.windows(2).map(|w| self.profile(w[0], w[1])).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&InfluenceProfile> = profiles.iter().map(|p| p.as_ref()).collect();
        link_coherence(&refs, Some(self.r))
    }

    /// Score descending, then the id sequence ascending.
    fn rank(&self, a: &Partial, b: &Partial) -> Ordering {
        b.score.total_cmp(&a.score).then_with(|| {
            let ids = |p: &Partial| p.seq.iter().map(|&s| self.corpus.get(self.paper(s)).id.as_str()).collect::<Vec<_>>();
            ids(a).cmp(&ids(b))
        })
    }

    /// Whether slot `next` may follow a partial chain of `len` papers ending
    /// at `last` (`None` for an empty chain) that does or does not yet hold
    /// the query paper, such that a full-length chain is still reachable.
    fn may_extend(&self, last: Option<usize>, len: usize, has_query: bool, next: usize) -> bool {
        if last.is_some_and(|l| next <= l) {
            return false;
        }
        let pos = len + 1;
        let after = self.cands.len() - 1 - next;
        let remaining = self.n - pos;
        match self.constraint {
            Slots::Free => after >= remaining,
            Slots::Contains(q) => {
                let holds = has_query || next == q;
                after >= remaining && (holds || (q > next && remaining > 0))
            }
            Slots::Endpoints(s, t) => {
                if pos == 1 {
                    next == s
                } else if pos == self.n {
                    next == t
                } else {
                    next < t && t - next > remaining - 1
                }
            }
        }
    }

    fn holds_query(&self, seq: &[usize]) -> bool {
        match self.constraint {
            Slots::Contains(q) => seq.contains(&q),
            _ => true,
        }
    }

    fn starts(&self) -> Vec<Partial> {
        (0..self.cands.len())
            .filter(|&i| self.may_extend(None, 0, false, i))
            .map(|i| Partial {
                seq: vec![i],
                score: f64::INFINITY,
            })
            .collect()
    }

    fn prefetch(&self) -> Result<()> {
        let mut pairs = Vec::new();
        for i in 0..self.cands.len() {
            for j in i + 1..self.cands.len() {
                pairs.push((self.paper(i), self.paper(j)));
            }
        }
        self.source.prefetch(&pairs, self.exec)
    }

    fn exhaustive(&self) -> Result<Option<(Vec<usize>, CoherenceResult)>> {
        let mut complete = Vec::new();
        let mut stack = self.starts();
        while let Some(p) = stack.pop() {
            if p.seq.len() == self.n {
                complete.push(p.seq);
                continue;
            }
            let last = *p.seq.last().unwrap();
            let has_q = self.holds_query(&p.seq);
            for next in last + 1..self.cands.len() {
                if self.may_extend(Some(last), p.seq.len(), has_q, next) {
                    let mut seq = p.seq.clone();
                    seq.push(next);
                    stack.push(Partial { seq, score: 0.0 });
                }
            }
        }
        let scored = self.exec.map_slice(&complete, |seq| self.evaluate(seq));
        let mut best: Option<(Partial, CoherenceResult)> = None;
        for (seq, res) in complete.into_iter().zip(scored) {
            let res = res?;
            let cand = Partial { seq, score: res.score };
            if best.as_ref().is_none_or(|(b, _)| self.rank(&cand, b) == Ordering::Less) {
                best = Some((cand, res));
            }
        }
        Ok(best.map(|(p, r)| (p.seq, r)))
    }

    /// Level-wise beam. Extensions are visited in order of the upper bound
    /// `min(parent score, best single-word influence of the new link)`; once
    /// that bound falls below the `B`-th best exact score, no later
    /// extension can enter the beam, so the rest are skipped.
    fn beam(&self, width: usize) -> Result<Option<(Vec<usize>, CoherenceResult)>> {
        let mut level = self.starts();
        for len in 1..self.n {
            let mut ext: Vec<(f64, Vec<usize>)> = Vec::new();
            for p in &level {
                let last = *p.seq.last().unwrap();
                let has_q = self.holds_query(&p.seq);
                for next in last + 1..self.cands.len() {
                    if self.may_extend(Some(last), len, has_q, next) {
                        let bound = p.score.min(self.profile(last, next)?.max_influence());
                        let mut seq = p.seq.clone();
                        seq.push(next);
                        ext.push((bound, seq));
                    }
                }
            }
            ext.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let mut kept: Vec<Partial> = Vec::new();
            let mut i = 0;
            while i < ext.len() {
                if kept.len() >= width && ext[i].0 < kept[width - 1].score {
                    break;
                }
                let end = (i + BEAM_BATCH).min(ext.len());
                let batch = &ext[i..end];
                let scores = self.exec.map_slice(batch, |(_, seq)| self.evaluate(seq).map(|r| r.score));
                for ((_, seq), s) in batch.iter().zip(scores) {
                    kept.push(Partial { seq: seq.clone(), score: s? });
                }
                kept.sort_by(|a, b| self.rank(a, b));
                kept.truncate(width);
                i = end;
            }
            if kept.is_empty() {
                return Ok(None);
            }
            level = kept;
        }
        let best = level.into_iter().next().expect("non-empty level");
        let res = self.evaluate(&best.seq)?;
        Ok(Some((best.seq, res)))
    }
}

/// The most coherent chain of `params.chain_length` pool papers meeting the
/// constraint, scored by evolving-topic coherence with smoothness
/// `params.r`. Ties go to the lexicographically smallest id sequence.
pub fn best_chain(
    corpus: &Corpus,
    pool: &CandidatePool,
    constraint: Constraint,
    params: &SearchParams,
    source: &dyn InfluenceSource,
) -> Result<(Chain, CoherenceResult)> {
    let n = params.chain_length;
    if n < 2 {
        return Err(Error::validation("chain length must be at least 2"));
    }
    if pool.len() < n {
        return Err(Error::Validation(format!(
            "community too small: pool of {} for a chain of {n}",
            pool.len()
        )));
    }
    let mut cands: Vec<usize> = pool.papers.iter().map(|&(p, _)| p).collect();
    cands.sort_by(|&a, &b| corpus.chrono_key(a).cmp(&corpus.chrono_key(b)));
    cands.dedup();
    let slot = |p: usize| -> Result<usize> {
        cands
            .iter()
            .position(|&c| c == p)
            .ok_or_else(|| Error::query(format!("paper {} is not in the candidate pool", corpus.get(p).id)))
    };
    let slots = match constraint {
        Constraint::Free => Slots::Free,
        Constraint::Contains(p) => Slots::Contains(slot(p)?),
        Constraint::Endpoints(s, t) => {
            let (a, b) = (slot(s)?, slot(t)?);
            if a >= b {
                return Err(Error::query("chain endpoints are not in chronological order"));
            }
            Slots::Endpoints(a, b)
        }
    };
    let searcher = Searcher {
        corpus,
        source,
        cands,
        n,
        r: params.r,
        exec: params.execution,
        constraint: slots,
    };
    searcher.prefetch()?;
    let found = match params.mode {
        SearchMode::Exhaustive => searcher.exhaustive()?,
        SearchMode::Beam(width) => searcher.beam(width.max(1))?,
    };
    let Some((seq, res)) = found else {
        return Err(Error::query(format!(
            "no valid chain of length {n} in community {}",
            pool.community
        )));
    };
    let chain = Chain::new(corpus, seq.iter().map(|&s| searcher.paper(s)).collect())?;
    Ok((chain, res))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;
    use std::sync::RwLock;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::chains::PoolSource;
    use crate::corpus::parse_corpus;

    /// Random sparse influence vectors, fixed per ordered pair.
    struct RandomSource {
        seed: u64,
        n_words: usize,
        memo: RwLock<HashMap<(usize, usize), Arc<InfluenceProfile>>>,
    }

    impl RandomSource {
        fn new(seed: u64, n_words: usize) -> Self {
            RandomSource {
                seed,
                n_words,
                memo: RwLock::default(),
            }
        }
    }

    impl InfluenceSource for RandomSource {
        fn n_words(&self) -> usize {
            self.n_words
        }

        fn profile(&self, s: usize, t: usize) -> Result<Arc<InfluenceProfile>> {
            if let Some(p) = self.memo.read().unwrap().get(&(s, t)) {
                return Ok(p.clone());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ ((s as u64) << 32) ^ t as u64);
            let per_word = (0..self.n_words)
                .filter_map(|w| rng.random_bool(0.5).then(|| (w, rng.random_range(0.0..1.0))))
                .collect();
            let p = Arc::new(InfluenceProfile {
                source: s,
                target: t,
                n_words: self.n_words,
                baseline: 1.0,
                per_word,
            });
            self.memo.write().unwrap().insert((s, t), p.clone());
            Ok(p)
        }
    }

    fn corpus(n: usize, seed: u64) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lines: Vec<String> = (0..n)
            .map(|i| format!(r#"{{"id":"p{i:02}","title":"t","year":{}}}"#, 2000 + rng.random_range(0..6)))
            .collect();
        parse_corpus(&lines.join("\n")).unwrap()
    }

    fn pool(n: usize) -> CandidatePool {
        CandidatePool {
            community: 0,
            papers: (0..n).map(|i| (i, 1.0 - i as f64 / 100.0)).collect(),
            source: PoolSource::Keyword("k".into()),
        }
    }

    fn params(n: usize, mode: SearchMode) -> SearchParams {
        SearchParams {
            chain_length: n,
            r: 0.05,
            mode,
            execution: Execution::default(),
        }
    }

    fn assert_valid(c: &Corpus, chain: &Chain, n: usize) {
        assert_eq!(chain.len(), n);
        assert!(Chain::new(c, chain.papers().to_vec()).is_ok());
    }

    #[test]
    fn pool_of_exactly_n_has_one_answer() {
        let c = corpus(4, 1);
        let src = RandomSource::new(1, 6);
        let (a, _) = best_chain(&c, &pool(4), Constraint::Free, &params(4, SearchMode::Exhaustive), &src).unwrap();
        let (b, _) = best_chain(&c, &pool(4), Constraint::Free, &params(4, SearchMode::Beam(64)), &src).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = (0..4).collect();
        all.sort_by_key(|&p| c.chrono_key(p));
        assert_eq!(a.papers(), all.as_slice());
    }

    #[test]
    fn unbounded_beam_equals_exhaustive() {
        for seed in 0..12 {
            let size = 5 + (seed as usize % 6);
            let c = corpus(size, seed);
            let src = RandomSource::new(seed, 5);
            for (constraint, n) in [
                (Constraint::Free, 3),
                (Constraint::Contains(2), 4),
                (Constraint::Endpoints(sorted(&c)[0], sorted(&c)[size - 1]), 4),
            ] {
                let ex = best_chain(&c, &pool(size), constraint, &params(n, SearchMode::Exhaustive), &src).unwrap();
                let bm = best_chain(&c, &pool(size), constraint, &params(n, SearchMode::Beam(usize::MAX)), &src).unwrap();
                assert_eq!(ex.0, bm.0, "seed {seed} {constraint:?}");
                assert_eq!(ex.1.score, bm.1.score);
                assert_valid(&c, &ex.0, n);
            }
        }
    }

    fn sorted(c: &Corpus) -> Vec<usize> {
        let mut v: Vec<usize> = (0..c.len()).collect();
        v.sort_by_key(|&p| c.chrono_key(p));
        v
    }

    #[test]
    fn constraints_shape_the_chain() {
        let c = corpus(9, 5);
        let src = RandomSource::new(5, 6);
        let order = sorted(&c);
        let (s, t) = (order[1], order[7]);
        for mode in [SearchMode::Exhaustive, SearchMode::Beam(8)] {
            let (chain, _) = best_chain(&c, &pool(9), Constraint::Endpoints(s, t), &params(5, mode), &src).unwrap();
            assert_eq!(chain.papers()[0], s);
            assert_eq!(*chain.papers().last().unwrap(), t);
            let (chain, _) = best_chain(&c, &pool(9), Constraint::Contains(order[8]), &params(3, mode), &src).unwrap();
            assert!(chain.papers().contains(&order[8]));
        }
    }

    #[test]
    fn impossible_endpoints_are_a_query_error() {
        let c = corpus(6, 2);
        let src = RandomSource::new(2, 4);
        let order = sorted(&c);
        let res = best_chain(&c, &pool(6), Constraint::Endpoints(order[0], order[1]), &params(3, SearchMode::Beam(64)), &src);
        assert!(matches!(res, Err(Error::Query(_))));
        let too_small = best_chain(&c, &pool(6), Constraint::Free, &params(7, SearchMode::Beam(64)), &src);
        assert!(matches!(too_small, Err(Error::Validation(ref m)) if m.starts_with("community too small")));
    }

    #[test]
    fn unused_low_relevance_candidate_can_be_dropped() {
        for seed in 20..26 {
            let c = corpus(9, seed);
            let src = RandomSource::new(seed, 5);
            let p = params(4, SearchMode::Exhaustive);
            let (chain, res) = best_chain(&c, &pool(9), Constraint::Free, &p, &src).unwrap();
            let mut smaller = pool(9);
            let (last, _) = smaller.papers.pop().unwrap();
            if chain.papers().contains(&last) {
                continue;
            }
            let (again, res2) = best_chain(&c, &smaller, Constraint::Free, &p, &src).unwrap();
            assert_eq!(chain, again);
            assert_eq!(res.score, res2.score);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let c = corpus(10, 9);
        let src = RandomSource::new(9, 6);
        let mut seq = params(4, SearchMode::Beam(16));
        seq.execution = Execution::Sequential;
        let a = best_chain(&c, &pool(10), Constraint::Free, &seq, &src).unwrap();
        seq.execution = Execution::Parallel;
        let b = best_chain(&c, &pool(10), Constraint::Free, &seq, &src).unwrap();
        assert_eq!(a, b);
    }
}
