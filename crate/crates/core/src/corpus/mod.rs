//! Paper corpus loading, text normalization and relation construction.
//!
//! The on-disk corpus is UTF-8 JSON lines, one paper per line:
//!
//! ```text
//! {"id": "p1", "title": "...", "abstract": "...", "keywords": ["..."],
//!  "authors": ["..."], "year": 2004, "venue": "...", "cites": ["p0"]}
//! ```
//!
//! `id`, `title` and `year` are mandatory; a record missing one of them is
//! dropped and listed in the [`LoadReport`]. Unknown fields are ignored.

mod relations;
mod text;
mod vocab;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use relations::{build_relations, RelationSet};
pub use text::{analyze, default_stopwords, load_stopwords, Stopwords};
pub use vocab::{build_vocabulary, tfidf_weight, Vocabulary};

pub const MIN_YEAR: i32 = 1800;
pub const MAX_YEAR: i32 = 2200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub authors: Vec<String>,
    pub year: i32,
    #[serde(default)]
    pub venue: String,
    #[serde(default)]
    pub cites: Vec<String>,
}

impl PaperRecord {
    /// Text fields that feed the content relation, in a fixed order.
    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.abstract_text.len() + 64);
        s.push_str(&self.title);
        for k in &self.keywords {
            s.push('\n');
            s.push_str(k);
        }
        s.push('\n');
        s.push_str(&self.abstract_text);
        s
    }
}

/// Lenient mirror of [`PaperRecord`] so missing mandatory fields can be
/// reported instead of failing the whole file.
#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract", default)]
    abstract_text: Option<String>,
    #[serde(default)]
    keywords: Vec<String>,
    #[serde(default)]
    authors: Vec<String>,
    year: Option<i32>,
    #[serde(default)]
    venue: Option<String>,
    #[serde(default)]
    cites: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DanglingCitation {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub ordinal: usize,
    pub reason: String,
}

/// What the loader had to skip.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub dangling_citations: Vec<DanglingCitation>,
    pub dropped_records: Vec<DroppedRecord>,
}

impl LoadReport {
    pub fn is_empty(&self) -> bool {
        self.dangling_citations.is_empty() && self.dropped_records.is_empty()
    }
}

/// Validated, immutable paper collection.
#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    index: HashMap<String, usize>,
    report: LoadReport,
}

impl Corpus {
    /// Validate records and index them by id.
    pub fn from_records(records: Vec<PaperRecord>) -> Result<Self> {
        Self::build(records, LoadReport::default())
    }

    fn build(papers: Vec<PaperRecord>, mut report: LoadReport) -> Result<Self> {
        if papers.is_empty() {
            return Err(Error::validation("empty corpus"));
        }
        let mut index = HashMap::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if p.id.is_empty() {
                return Err(Error::validation(format!("record {}: empty id", i + 1)));
            }
            if !(MIN_YEAR..=MAX_YEAR).contains(&p.year) {
                return Err(Error::validation(format!(
                    "paper {}: year {} outside [{MIN_YEAR}, {MAX_YEAR}]",
                    p.id, p.year
                )));
            }
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::validation(format!("duplicate paper id {}", p.id)));
            }
        }
        report.dangling_citations = papers
            .iter()
            .flat_map(|p| {
                p.cites
                    .iter()
                    .filter(|c| !index.contains_key(c.as_str()))
                    .map(|c| DanglingCitation {
                        from: p.id.clone(),
                        to: c.clone(),
                    })
            })
            .collect();
        Ok(Corpus {
            papers,
            index,
            report,
        })
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn get(&self, i: usize) -> &PaperRecord {
        &self.papers[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.position(id)
            .ok_or_else(|| Error::Lookup(format!("unknown paper id {id}")))
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    /// Chronological total order: year, then id.
    pub fn chrono_key(&self, i: usize) -> (i32, &str) {
        let p = &self.papers[i];
        (p.year, p.id.as_str())
    }

    /// Serialize back to the JSON-lines corpus format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.papers {
            out.push_str(&serde_json::to_string(p).expect("paper record serializes"));
            out.push('\n');
        }
        out
    }

    /// Content hash of the normalized records, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_jsonl().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parse the JSON-lines corpus format from memory.
pub fn parse_corpus(content: &str) -> Result<Corpus> {
    let mut report = LoadReport::default();
    let mut papers = Vec::new();
    for (line_no, line) in content.lines().enumerate() {
        let ordinal = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            ordinal,
            message: e.to_string(),
        })?;
        let missing: Vec<&str> = [
            ("id", raw.id.as_deref().is_none_or(str::is_empty)),
            ("title", raw.title.is_none()),
            ("year", raw.year.is_none()),
        ]
        .into_iter()
        .filter_map(|(name, absent)| absent.then_some(name))
        .collect();
        if !missing.is_empty() {
            report.dropped_records.push(DroppedRecord {
                ordinal,
                reason: format!("missing {}", missing.join(", ")),
            });
            continue;
        }
        let mut authors = Vec::with_capacity(raw.authors.len());
        for a in raw.authors {
            let a = a.trim().to_string();
            if !a.is_empty() && !authors.contains(&a) {
                authors.push(a);
            }
        }
        papers.push(PaperRecord {
            id: raw.id.unwrap(),
            title: raw.title.unwrap(),
            abstract_text: raw.abstract_text.unwrap_or_default(),
            keywords: raw.keywords,
            authors,
            year: raw.year.unwrap(),
            venue: raw.venue.unwrap_or_default(),
            cites: raw.cites,
        });
    }
    Corpus::build(papers, report)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&content)
}
