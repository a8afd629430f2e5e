//! Query specifications, candidate pools and chain search.

mod pools;
mod search;

pub use pools::{candidate_pool_keyword, candidate_pool_pair, candidate_pool_single, KeywordPools};
pub use search::{best_chain, SearchMode, SearchParams};

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Keyword,
    SinglePaper,
    TwoPaper,
}

/// A query as accepted on the wire. Only the fields that `kind` calls for
/// may be present; the remaining fields override configuration defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub kind: QueryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_length: Option<usize>,
    /// Must match the index when given; weights are fixed at index time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub com_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_width: Option<usize>,
}

impl QuerySpec {
    fn bare(kind: QueryKind) -> QuerySpec {
        QuerySpec {
            kind,
            keyword: None,
            paper_a: None,
            paper_b: None,
            chain_length: None,
            weights: None,
            com_t: None,
            r: None,
            m: None,
            n: None,
            beam_width: None,
        }
    }

    pub fn keyword(text: impl Into<String>) -> QuerySpec {
        QuerySpec {
            keyword: Some(text.into()),
            ..Self::bare(QueryKind::Keyword)
        }
    }

    pub fn single_paper(id: impl Into<String>) -> QuerySpec {
        QuerySpec {
            paper_a: Some(id.into()),
            ..Self::bare(QueryKind::SinglePaper)
        }
    }

    pub fn two_paper(a: impl Into<String>, b: impl Into<String>) -> QuerySpec {
        QuerySpec {
            paper_a: Some(a.into()),
            paper_b: Some(b.into()),
            ..Self::bare(QueryKind::TwoPaper)
        }
    }

    pub fn with_length(mut self, n: usize) -> QuerySpec {
        self.chain_length = Some(n);
        self
    }

    /// Check field presence against `kind` and merge overrides into `base`.
    pub fn resolve(&self, base: &EngineConfig, corpus: &Corpus) -> Result<ResolvedQuery> {
        let present = |v: &Option<String>| v.as_deref().is_some_and(|s| !s.trim().is_empty());
        let (need_kw, need_a, need_b) = match self.kind {
            QueryKind::Keyword => (true, false, false),
            QueryKind::SinglePaper => (false, true, false),
            QueryKind::TwoPaper => (false, true, true),
        };
        let mut problems = Vec::new();
        for (name, value, needed) in [
            ("keyword", &self.keyword, need_kw),
            ("paper_a", &self.paper_a, need_a),
            ("paper_b", &self.paper_b, need_b),
        ] {
            match (needed, value.is_some(), present(value)) {
                (true, _, false) => problems.push(format!("{name} is required for this kind")),
                (false, true, _) => problems.push(format!("{name} is not allowed for this kind")),
                _ => {}
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems.join("; ")));
        }
        if let Some(w) = self.weights {
            let fixed = base.weights.0;
            if w.iter().zip(&fixed).any(|(a, b)| (a - b).abs() > 1e-9) {
                return Err(Error::validation(format!(
                    "weights are fixed at index time ({:?}); rebuild the index to change them",
                    fixed
                )));
            }
        }
        let mut config = base.clone();
        config.chain_length = self.chain_length.unwrap_or(config.chain_length);
        config.com_t = self.com_t.unwrap_or(config.com_t);
        config.r = self.r.unwrap_or(config.r);
        config.m = self.m.unwrap_or(config.m);
        config.n = self.n.unwrap_or(config.n);
        config.beam_width = self.beam_width.unwrap_or(config.beam_width);
        config.validate_query()?;

        let target = match self.kind {
            QueryKind::Keyword => QueryTarget::Keyword(self.keyword.clone().unwrap_or_default()),
            QueryKind::SinglePaper => QueryTarget::Single(corpus.require(self.paper_a.as_deref().unwrap_or_default())?),
            QueryKind::TwoPaper => {
                let a = corpus.require(self.paper_a.as_deref().unwrap_or_default())?;
                let b = corpus.require(self.paper_b.as_deref().unwrap_or_default())?;
                if a == b {
                    return Err(Error::validation("distinct papers required"));
                }
                if corpus.chrono_key(a) <= corpus.chrono_key(b) {
                    QueryTarget::Pair(a, b)
                } else {
                    QueryTarget::Pair(b, a)
                }
            }
        };
        Ok(ResolvedQuery { target, config })
    }
}

/// What the query is anchored on, as corpus positions. Pairs are in
/// chronological order.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryTarget {
    Keyword(String),
    Single(usize),
    Pair(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedQuery {
    pub target: QueryTarget,
    pub config: EngineConfig,
}

/// Structural requirement a chain must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Free,
    Contains(usize),
    /// Start at the first paper and end at the second.
    Endpoints(usize, usize),
}

impl QueryTarget {
    pub fn constraint(&self) -> Constraint {
        match *self {
            QueryTarget::Keyword(_) => Constraint::Free,
            QueryTarget::Single(p) => Constraint::Contains(p),
            QueryTarget::Pair(s, t) => Constraint::Endpoints(s, t),
        }
    }
}

/// Where a candidate pool came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSource {
    SinglePaper(usize),
    PaperPair(usize, usize),
    Keyword(String),
}

/// Candidate papers of one community, by relevance descending (ties by
/// paper id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub community: usize,
    pub papers: Vec<(usize, f64)>,
    pub source: PoolSource,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn contains(&self, paper: usize) -> bool {
        self.papers.iter().any(|&(p, _)| p == paper)
    }
}

/// `a` precedes `b` by relevance descending, then paper id.
fn by_relevance(corpus: &Corpus, a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then_with(|| corpus.get(a.0).id.cmp(&corpus.get(b.0).id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    fn corpus() -> Corpus {
        parse_corpus(
            &[
                r#"{"id":"x","title":"t","year":2003}"#,
                r#"{"id":"y","title":"t","year":2001}"#,
            ]
            .join("\n"),
        )
        .unwrap()
    }

    #[test]
    fn wire_format_is_strict() {
        let ok: QuerySpec = serde_json::from_str(r#"{"kind":"single_paper","paper_a":"x","chain_length":5}"#).unwrap();
        assert_eq!(ok, QuerySpec::single_paper("x").with_length(5));
        assert!(serde_json::from_str::<QuerySpec>(r#"{"kind":"single_paper","paper_a":"x","bogus":1}"#).is_err());
        assert!(serde_json::from_str::<QuerySpec>(r#"{"kind":"three_paper"}"#).is_err());
        let m: QuerySpec = serde_json::from_str(r#"{"kind":"keyword","keyword":"k","M":7,"N":9}"#).unwrap();
        assert_eq!((m.m, m.n), (Some(7), Some(9)));
    }

    #[test]
    fn fields_must_match_kind() {
        let c = corpus();
        let base = EngineConfig::default();
        let both = QuerySpec {
            keyword: Some("radar".into()),
            ..QuerySpec::single_paper("x")
        };
        let err = both.resolve(&base, &c).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("keyword is not allowed")));
        assert!(QuerySpec::keyword("  ").resolve(&base, &c).is_err());
        let missing_b = QuerySpec {
            paper_b: None,
            ..QuerySpec::two_paper("x", "y")
        };
        assert!(missing_b.resolve(&base, &c).is_err());
    }

    #[test]
    fn pairs_are_put_in_chronological_order() {
        let c = corpus();
        let q = QuerySpec::two_paper("x", "y").resolve(&EngineConfig::default(), &c).unwrap();
        assert_eq!(q.target, QueryTarget::Pair(1, 0));
        let same = QuerySpec::two_paper("x", "x").resolve(&EngineConfig::default(), &c);
        assert!(matches!(same, Err(Error::Validation(ref m)) if m == "distinct papers required"));
    }

    #[test]
    fn overrides_and_fixed_weights() {
        let c = corpus();
        let base = EngineConfig::default();
        let q = QuerySpec {
            r: Some(0.3),
            com_t: Some(0.1),
            ..QuerySpec::single_paper("x").with_length(4)
        }
        .resolve(&base, &c)
        .unwrap();
        assert_eq!((q.config.r, q.config.com_t, q.config.chain_length), (0.3, 0.1, 4));
        let w = QuerySpec {
            weights: Some([0.6, 0.2, 0.2]),
            ..QuerySpec::single_paper("x")
        };
        assert!(w.resolve(&base, &c).is_err());
        let same = QuerySpec {
            weights: Some([1.0 / 3.0; 3]),
            ..QuerySpec::single_paper("x")
        };
        assert!(same.resolve(&base, &c).is_ok());
        assert!(matches!(QuerySpec::single_paper("nope").resolve(&base, &c), Err(Error::Lookup(_))));
        assert!(QuerySpec::single_paper("x").with_length(1).resolve(&base, &c).is_err());
    }
}
