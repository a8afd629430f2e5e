use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::text::{analyze, Stopwords};
use super::{Corpus, PaperRecord};
use crate::error::{Error, Result};

/// Stemmed terms in lexicographic order with their document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_papers: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    n_papers: usize,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::new(r.terms, r.doc_freq, r.n_papers)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            n_papers: v.n_papers,
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    fn new(terms: Vec<String>, doc_freq: Vec<usize>, n_papers: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            doc_freq,
            n_papers,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, i: usize) -> usize {
        self.doc_freq[i]
    }

    pub fn n_papers(&self) -> usize {
        self.n_papers
    }

    /// Natural-log inverse document frequency of term `i`.
    pub fn idf(&self, i: usize) -> f64 {
        (self.n_papers as f64 / self.doc_freq[i] as f64).ln()
    }

    /// In-vocabulary term counts of one paper, keyed by term index.
    pub fn term_counts(&self, paper: &PaperRecord, stopwords: &Stopwords) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for stem in analyze(&paper.text(), stopwords) {
            if let Some(i) = self.position(&stem) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Distinct in-vocabulary stems of free text, in vocabulary order.
    pub fn query_terms(&self, text: &str, stopwords: &Stopwords) -> Vec<usize> {
        let mut ids: Vec<usize> = analyze(text, stopwords)
            .iter()
            .filter_map(|s| self.position(s))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Collect stems from title, keywords and abstract, keeping those that occur
/// in at least `min_doc_freq` papers.
pub fn build_vocabulary(corpus: &Corpus, stopwords: &Stopwords, min_doc_freq: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::validation("empty corpus"));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for paper in corpus.papers() {
        let mut stems = analyze(&paper.text(), stopwords);
        stems.sort_unstable();
        stems.dedup();
        for s in stems {
            *df.entry(s).or_insert(0) += 1;
        }
    }
    let min_doc_freq = min_doc_freq.max(1);
    let (terms, doc_freq): (Vec<String>, Vec<usize>) = df.into_iter().filter(|(_, d)| *d >= min_doc_freq).unzip();
    if terms.is_empty() {
        return Err(Error::validation("empty vocabulary"));
    }
    Ok(Vocabulary::new(terms, doc_freq, corpus.len()))
}

/// `tf · ln(|P| / df)` with `tf` the raw count of `term` (already stemmed) in
/// the paper's text fields.
pub fn tfidf_weight(term: &str, paper: &PaperRecord, vocab: &Vocabulary, stopwords: &Stopwords) -> Result<f64> {
    let i = vocab
        .position(term)
        .ok_or_else(|| Error::Lookup(format!("term {term:?} not in vocabulary")))?;
    let tf = analyze(&paper.text(), stopwords).iter().filter(|s| *s == term).count();
    Ok(tf as f64 * vocab.idf(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::text::default_stopwords;

    fn paper(id: &str, title: &str, abstract_text: &str) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            keywords: vec![],
            authors: vec![],
            year: 2000,
            venue: String::new(),
            cites: vec![],
        }
    }

    #[test]
    fn stemmed_terms_with_doc_freq() {
        let corpus = Corpus::from_records(vec![paper("a", "", "sparse coding"), paper("b", "", "sparse graphs")]).unwrap();
        let v = build_vocabulary(&corpus, &Stopwords::new(), 1).unwrap();
        assert_eq!(v.terms(), ["code", "graph", "spars"]);
        assert_eq!(v.doc_freq(v.position("spars").unwrap()), 2);
    }

    #[test]
    fn stopword_only_text() {
        let sw: Stopwords = ["the", "of"].iter().map(|s| s.to_string()).collect();
        let corpus = Corpus::from_records(vec![paper("a", "the map of maps", "")]).unwrap();
        let v = build_vocabulary(&corpus, &sw, 1).unwrap();
        assert_eq!(v.terms(), ["map"]);
    }

    #[test]
    fn impossible_threshold() {
        let corpus = Corpus::from_records(vec![paper("a", "sparse", ""), paper("b", "sparse", "")]).unwrap();
        let err = build_vocabulary(&corpus, &Stopwords::new(), 3).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m == "empty vocabulary"));
    }

    #[test]
    fn tfidf_closed_form() {
        // 100 papers, "radar" in 10 of them, twice in paper 0.
        let mut papers: Vec<PaperRecord> = (0..100).map(|i| paper(&format!("p{i}"), "filler", "")).collect();
        for p in papers.iter_mut().take(10) {
            p.abstract_text = "radar".into();
        }
        papers[0].abstract_text = "radar radar".into();
        let corpus = Corpus::from_records(papers).unwrap();
        let sw = default_stopwords();
        let v = build_vocabulary(&corpus, &sw, 1).unwrap();
        let w = tfidf_weight("radar", corpus.get(0), &v, &sw).unwrap();
        assert!((w - 4.605170185988091).abs() < 1e-12, "{w}");
        assert_eq!(tfidf_weight("radar", corpus.get(50), &v, &sw).unwrap(), 0.0);
        // in every paper: idf = 0
        assert_eq!(tfidf_weight("filler", corpus.get(0), &v, &sw).unwrap(), 0.0);
        assert!(matches!(tfidf_weight("lidar", corpus.get(0), &v, &sw), Err(Error::Lookup(_))));
    }

    #[test]
    fn serde_rebuilds_index() {
        let corpus = Corpus::from_records(vec![paper("a", "", "sparse coding")]).unwrap();
        let v = build_vocabulary(&corpus, &Stopwords::new(), 1).unwrap();
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.position("code"), Some(0));
    }
}
