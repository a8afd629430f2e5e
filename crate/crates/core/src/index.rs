//! Built index: corpus, vocabulary, relations, fitted model and influence
//! engine, with an on-disk bundle format.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::corpus::{build_relations, build_vocabulary, load_stopwords, parse_corpus, Corpus, RelationSet, Stopwords, Vocabulary};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::factorization::{factorize, Communities, FactorizeOptions, MetaFacModel};
use crate::influence::{build_walk_graph, InfluenceEngine};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const CORPUS: &str = "corpus.jsonl";
const VOCABULARY: &str = "vocabulary.json";
const MODEL: &str = "model.json";
const STOPWORDS: &str = "stopwords.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub config: EngineConfig,
    pub corpus_hash: String,
    pub n_papers: usize,
    pub n_terms: usize,
    pub n_authors: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
}

/// Everything a query needs, immutable once built.
pub struct Index {
    pub config: EngineConfig,
    pub corpus: Corpus,
    pub stopwords: Stopwords,
    pub vocab: Vocabulary,
    pub relations: RelationSet,
    pub model: MetaFacModel,
    pub influence: InfluenceEngine,
}

/// A paper matched by free-text search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperHit {
    pub id: String,
    pub title: String,
    pub year: i32,
    /// Summed TF-IDF of the query's stems in the paper.
    pub score: f64,
}

/// Community size and characteristic words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySummary {
    pub id: usize,
    pub size: usize,
    pub top_words: Vec<String>,
}

impl Index {
    pub fn build(corpus: Corpus, stopwords: Stopwords, config: EngineConfig, exec: Execution) -> Result<Index> {
        config.validate()?;
        let vocab = build_vocabulary(&corpus, &stopwords, config.min_doc_freq)?;
        let relations = build_relations(&corpus, &vocab, &stopwords, config.symmetrize_citation);
        let opts = FactorizeOptions {
            k: config.k,
            weights: config.weights,
            seed: config.seed,
            max_iters: config.max_iters,
            tol: config.tol,
            execution: exec,
        };
        let model = factorize(&relations, &opts)?;
        Self::assemble(config, corpus, stopwords, vocab, relations, model)
    }

    fn assemble(
        config: EngineConfig,
        corpus: Corpus,
        stopwords: Stopwords,
        vocab: Vocabulary,
        relations: RelationSet,
        model: MetaFacModel,
    ) -> Result<Index> {
        let graph = build_walk_graph(&relations, config.restart)?;
        Ok(Index {
            config,
            corpus,
            stopwords,
            vocab,
            relations,
            model,
            influence: InfluenceEngine::new(graph),
        })
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            corpus_hash: self.corpus.fingerprint(),
            n_papers: self.corpus.len(),
            n_terms: self.vocab.len(),
            n_authors: self.relations.authors.len(),
            iterations: self.model.objective_trace.len().saturating_sub(1),
            converged: self.model.converged,
            final_objective: self.model.objective_trace.last().copied().unwrap_or(f64::NAN),
        }
    }

    pub fn communities(&self, com_t: f64) -> Communities {
        Communities::new(&self.model, com_t)
    }

    /// Size and top five words of every community under `com_t`.
    pub fn community_summaries(&self, com_t: f64) -> Vec<CommunitySummary> {
        let comms = self.communities(com_t);
        (0..self.model.k)
            .map(|k| {
                let mut words: Vec<(usize, f64)> =
                    (0..self.vocab.len()).map(|w| (w, self.model.words.get(w, k))).collect();
                words.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                CommunitySummary {
                    id: k,
                    size: comms.members[k].len(),
                    top_words: words.iter().take(5).map(|&(w, _)| self.vocab.term(w).to_string()).collect(),
                }
            })
            .collect()
    }

    /// Papers whose id or title contains `query` (case-insensitive) come
    /// first, then papers containing any of its stems, by summed TF-IDF.
    pub fn search_papers(&self, query: &str, limit: usize) -> Vec<PaperHit> {
        let needle = query.trim().to_lowercase();
        if needle.is_empty() {
            return Vec::new();
        }
        let terms = self.vocab.query_terms(&needle, &self.stopwords);
        let content = &self.relations.content;
        let mut hits: Vec<(bool, f64, usize)> = (0..self.corpus.len())
            .filter_map(|i| {
                let p = self.corpus.get(i);
                let literal = p.title.to_lowercase().contains(&needle) || p.id.to_lowercase().contains(&needle);
                let score: f64 = terms.iter().map(|&w| content.get(i, w)).sum();
                (literal || score > 0.0).then_some((literal, score, i))
            })
            .collect();
        hits.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(b.1.total_cmp(&a.1))
                .then_with(|| self.corpus.get(a.2).id.cmp(&self.corpus.get(b.2).id))
        });
        hits.into_iter()
            .take(limit)
            .map(|(_, score, i)| {
                let p = self.corpus.get(i);
                PaperHit {
                    id: p.id.clone(),
                    title: p.title.clone(),
                    year: p.year,
                    score,
                }
            })
            .collect()
    }

    /// Write the bundle to `dir`. Files go to a sibling temporary directory
    /// that is renamed into place, so a failed save leaves no partial bundle.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let parent = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".pegraph-index-")
            .tempdir_in(&parent)
            .map_err(|e| Error::io(&parent, e))?;
        let write = |name: &str, contents: &str| {
            let path = staging.path().join(name);
            fs::write(&path, contents).map_err(|e| Error::io(&path, e))
        };
        let manifest = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        write(MANIFEST, &manifest)?;
        write(CORPUS, &self.corpus.to_jsonl())?;
        write(VOCABULARY, &serde_json::to_string(&self.vocab).expect("vocabulary serializes"))?;
        write(MODEL, &self.model.to_json())?;
        let mut stop: Vec<&str> = self.stopwords.iter().map(String::as_str).collect();
        stop.sort_unstable();
        write(STOPWORDS, &(stop.join("\n") + "\n"))?;

        if dir.exists() {
            if !dir.join(MANIFEST).is_file() {
                return Err(Error::validation(format!(
                    "{} exists and is not an index bundle; refusing to overwrite",
                    dir.display()
                )));
            }
            let old = tempfile::Builder::new()
                .prefix(".pegraph-old-")
                .tempdir_in(&parent)
                .map_err(|e| Error::io(&parent, e))?;
            let old_path = old.path().join("bundle");
            fs::rename(dir, &old_path).map_err(|e| Error::io(dir, e))?;
            if let Err(e) = fs::rename(staging.path(), dir) {
                let _ = fs::rename(&old_path, dir);
                return Err(Error::io(dir, e));
            }
        } else {
            fs::rename(staging.path(), dir).map_err(|e| Error::io(dir, e))?;
        }
        // The staging directory now lives at `dir`; don't delete it on drop.
        let _ = staging.keep();
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Index> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let manifest: Manifest = serde_json::from_str(&read(MANIFEST)?).map_err(|e| Error::Parse {
            ordinal: e.line(),
            message: format!("{}: {e}", dir.join(MANIFEST).display()),
        })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::validation(format!(
                "index format version {} is not supported (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        manifest.config.validate()?;
        let corpus = parse_corpus(&read(CORPUS)?)?;
        if corpus.fingerprint() != manifest.corpus_hash {
            return Err(Error::validation("index corpus does not match its manifest hash"));
        }
        let stopwords = load_stopwords(dir.join(STOPWORDS))?;
        let vocab: Vocabulary = serde_json::from_str(&read(VOCABULARY)?).map_err(|e| Error::Parse {
            ordinal: e.line(),
            message: format!("{}: {e}", dir.join(VOCABULARY).display()),
        })?;
        let model = MetaFacModel::from_json(&read(MODEL)?)?;
        let relations = build_relations(&corpus, &vocab, &stopwords, manifest.config.symmetrize_citation);
        if model.papers.rows() != corpus.len() || model.words.rows() != vocab.len() || model.authors.rows() != relations.authors.len() {
            return Err(Error::validation("index model does not match its corpus"));
        }
        Self::assemble(manifest.config, corpus, stopwords, vocab, relations, model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::default_stopwords;

    fn tiny() -> Index {
        let text = [
            r#"{"id":"a","title":"snow cover mapping","year":2001,"authors":["X"],"cites":[]}"#,
            r#"{"id":"b","title":"snow depth radar","year":2002,"authors":["X","Y"],"cites":["a"]}"#,
            r#"{"id":"c","title":"radar altimetry ice","year":2003,"authors":["Y"],"cites":["b"]}"#,
            r#"{"id":"d","title":"ice sheet altimetry","year":2004,"authors":["Z"],"cites":["c"]}"#,
        ]
        .join("\n");
        let config = EngineConfig {
            k: 2,
            seed: 3,
            chain_length: 2,
            m: 4,
            n: 4,
            min_doc_freq: 1,
            ..Default::default()
        };
        Index::build(parse_corpus(&text).unwrap(), default_stopwords(), config, Execution::Sequential).unwrap()
    }

    #[test]
    fn bundle_round_trip_and_overwrite() {
        let idx = tiny();
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("idx");
        idx.save(&out).unwrap();
        idx.save(&out).unwrap();
        let back = Index::load(&out).unwrap();
        assert_eq!(back.model, idx.model);
        assert_eq!(back.vocab, idx.vocab);
        assert_eq!(back.manifest(), idx.manifest());
        assert_eq!(back.relations.content, idx.relations.content);
        let leftovers: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(leftovers, vec![std::ffi::OsString::from("idx")]);
    }

    #[test]
    fn refuses_to_clobber_a_foreign_directory() {
        let idx = tiny();
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("notes.txt"), "keep me").unwrap();
        assert!(idx.save(tmp.path()).is_err());
        assert!(tmp.path().join("notes.txt").exists());
    }

    #[test]
    fn tampered_corpus_is_detected() {
        let idx = tiny();
        let tmp = tempfile::tempdir().unwrap();
        idx.save(tmp.path().join("i")).unwrap();
        let path = tmp.path().join("i").join(CORPUS);
        let text = fs::read_to_string(&path).unwrap().replace("snow depth", "snow drift");
        fs::write(&path, text).unwrap();
        assert!(matches!(Index::load(tmp.path().join("i")), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_bundle_is_an_io_error() {
        let err = Index::load("/nonexistent/bundle").err().unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/bundle"));
    }

    #[test]
    fn summaries_cover_every_community() {
        let idx = tiny();
        let s = idx.community_summaries(0.2);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|c| c.top_words.len() == 5));
    }

    #[test]
    fn search_puts_literal_matches_first() {
        let idx = tiny();
        let ids = |q: &str| idx.search_papers(q, 10).into_iter().map(|h| h.id).collect::<Vec<_>>();
        assert_eq!(ids("altimetry"), vec!["c", "d"]);
        // "mapped" shares only its stem with paper a.
        assert_eq!(ids("mapped"), vec!["a"]);
        assert_eq!(ids("SNOW D")[0], "b");
        assert!(ids("  ").is_empty());
        assert_eq!(idx.search_papers("snow", 1).len(), 1);
    }
}
