//! Planted-community corpora for tests, benches and demos.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{analyze, default_stopwords, Corpus, PaperRecord};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub n_papers: usize,
    pub n_blocks: usize,
    pub n_words: usize,
    pub n_authors: usize,
    /// Citation probability between two papers of the same block.
    pub p_in: f64,
    /// Citation probability across blocks.
    pub p_out: f64,
    /// Extra papers drawing equally on blocks 0 and 1.
    pub n_bridges: usize,
    pub years: (i32, i32),
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n_papers: 300,
            n_blocks: 3,
            n_words: 200,
            n_authors: 60,
            p_in: 0.2,
            p_out: 0.01,
            n_bridges: 0,
            years: (1990, 2012),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    /// Planted block of each paper (corpus order); `None` for bridges.
    pub blocks: Vec<Option<usize>>,
}

impl PlantedCorpus {
    pub fn bridge_ids(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_none())
            .map(|(i, _)| self.corpus.get(i).id.as_str())
            .collect()
    }
}

/// Pronounceable tokens that survive stop-word removal and stemming
/// unchanged, so each one is its own vocabulary term.
pub fn pseudo_words(n: usize) -> Vec<String> {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v"];
    const VOWELS: [&str; 4] = ["a", "o", "u", "i"];
    const CODAS: [&str; 5] = ["k", "t", "m", "p", "r"];
    let sw = default_stopwords();
    let mut out = Vec::with_capacity(n);
    'outer: for o1 in ONSETS {
        for v1 in VOWELS {
            for o2 in ONSETS {
                for v2 in VOWELS {
                    for c in CODAS {
                        let w = format!("{o1}{v1}{o2}{v2}{c}");
                        if analyze(&w, &sw) == [w.as_str()] {
                            out.push(w);
                            if out.len() == n {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
    }
    assert_eq!(out.len(), n, "not enough stable pseudo-words");
    out
}

/// Papers split evenly into blocks; each block has its own words and
/// authors, and citations follow a planted block model pointing backward
/// in `(year, id)` order.
pub fn planted_corpus(spec: &PlantedSpec) -> Result<PlantedCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let words = pseudo_words(spec.n_words);
    let nb = spec.n_blocks.max(1);
    // A fifth of the vocabulary is shared; the rest is split among blocks.
    let n_shared = spec.n_words / 5;
    let (shared, own) = words.split_at(n_shared);
    let per_block = own.len() / nb;
    let block_words: Vec<&[String]> = (0..nb).map(|b| &own[b * per_block..(b + 1) * per_block]).collect();
    let per_author_block = (spec.n_authors / nb).max(1);
    let author = |b: usize, i: usize| format!("Author {:02}", (b * per_author_block + i) % spec.n_authors.max(1));

    let total = spec.n_papers + spec.n_bridges;
    let mut blocks = Vec::with_capacity(total);
    for i in 0..spec.n_papers {
        blocks.push(Some(i * nb / spec.n_papers.max(1)));
    }
    blocks.extend(std::iter::repeat_n(None, spec.n_bridges));

    let draw = |rng: &mut ChaCha8Rng, b: usize, count: usize| -> Vec<String> {
        (0..count)
            .map(|_| {
                if rng.random_bool(0.8) {
                    block_words[b].choose(rng).unwrap().clone()
                } else {
                    shared.choose(rng).unwrap().clone()
                }
            })
            .collect()
    };

    let mut records: Vec<PaperRecord> = Vec::with_capacity(total);
    for (i, block) in blocks.iter().enumerate() {
        let home = |rng: &mut ChaCha8Rng| block.unwrap_or_else(|| rng.random_range(0..2.min(nb)));
        let words = |count: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
            (0..count)
                .flat_map(|_| {
                    let b = home(rng);
                    draw(rng, b, 1)
                })
                .collect()
        };
        let title = words(6, &mut rng);
        let body = words(40, &mut rng);
        let n_auth = rng.random_range(2..=3);
        let mut authors: Vec<String> = (0..n_auth)
            .map(|_| {
                let b = home(&mut rng);
                author(b, rng.random_range(0..per_author_block))
            })
            .collect();
        authors.sort();
        authors.dedup();
        records.push(PaperRecord {
            id: format!("P{:04}", i + 1),
            title: title.join(" "),
            abstract_text: body.join(" "),
            keywords: vec![],
            authors,
            year: rng.random_range(spec.years.0..=spec.years.1),
            venue: String::new(),
            cites: vec![],
        });
    }

    let key = |r: &PaperRecord| (r.year, r.id.clone());
    for i in 0..total {
        for j in 0..total {
            if key(&records[j]) >= key(&records[i]) {
                continue;
            }
            let p = match (blocks[i], blocks[j]) {
                (Some(a), Some(b)) if a == b => spec.p_in,
                (Some(a), Some(b)) if a != b => spec.p_out,
                // Bridges cite into, and are cited from, blocks 0 and 1.
                (x, y) if x.unwrap_or(0) < 2 && y.unwrap_or(0) < 2 => spec.p_in / 2.0,
                _ => spec.p_out,
            };
            if rng.random_bool(p) {
                let target = records[j].id.clone();
                records[i].cites.push(target);
            }
        }
    }

    let corpus = Corpus::from_records(records)?;
    Ok(PlantedCorpus { corpus, blocks })
}
