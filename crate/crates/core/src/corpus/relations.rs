use std::collections::BTreeSet;
use std::collections::HashMap;

use super::text::Stopwords;
use super::vocab::Vocabulary;
use super::Corpus;
use crate::sparse::SparseMatrix;

/// The three observed relations over papers, words and authors.
///
/// Row `i` of every matrix is paper `i` of the corpus. The key vectors name
/// the entity behind every row and column.
#[derive(Debug, Clone)]
pub struct RelationSet {
    /// Paper × paper, 0-1 (symmetrized on request).
    pub citation: SparseMatrix,
    /// Paper × word TF-IDF.
    pub content: SparseMatrix,
    /// Paper × author, 0-1.
    pub authorship: SparseMatrix,
    pub paper_ids: Vec<String>,
    pub terms: Vec<String>,
    pub authors: Vec<String>,
    pub author_index: HashMap<String, usize>,
    pub dangling_dropped: usize,
}

impl RelationSet {
    pub fn n_papers(&self) -> usize {
        self.paper_ids.len()
    }
}

pub fn build_relations(
    corpus: &Corpus,
    vocab: &Vocabulary,
    stopwords: &Stopwords,
    symmetrize_citation: bool,
) -> RelationSet {
    let n = corpus.len();

    let mut content = Vec::new();
    for (i, paper) in corpus.papers().iter().enumerate() {
        for (term, tf) in vocab.term_counts(paper, stopwords) {
            content.push((i, term, tf as f64 * vocab.idf(term)));
        }
    }

    let authors: Vec<String> = corpus
        .papers()
        .iter()
        .flat_map(|p| p.authors.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let author_index: HashMap<String, usize> = authors.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    let mut authorship = Vec::new();
    for (i, paper) in corpus.papers().iter().enumerate() {
        let distinct: BTreeSet<usize> = paper.authors.iter().map(|a| author_index[a]).collect();
        authorship.extend(distinct.into_iter().map(|a| (i, a, 1.0)));
    }

    let mut links = BTreeSet::new();
    let mut dangling = 0;
    for (i, paper) in corpus.papers().iter().enumerate() {
        for target in &paper.cites {
            match corpus.position(target) {
                Some(j) => {
                    links.insert((i, j));
                    if symmetrize_citation {
                        links.insert((j, i));
                    }
                }
                None => dangling += 1,
            }
        }
    }
    let citation = links.into_iter().map(|(i, j)| (i, j, 1.0)).collect();

    RelationSet {
        citation: SparseMatrix::from_triplets(n, n, citation),
        content: SparseMatrix::from_triplets(n, vocab.len(), content),
        authorship: SparseMatrix::from_triplets(n, authors.len(), authorship),
        paper_ids: corpus.papers().iter().map(|p| p.id.clone()).collect(),
        terms: vocab.terms().to_vec(),
        authors,
        author_index,
        dangling_dropped: dangling,
    }
}
