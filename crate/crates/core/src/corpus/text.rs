use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

pub type Stopwords = HashSet<String>;

/// The bundled English stop-word list.
pub fn default_stopwords() -> Stopwords {
    parse_stopwords(ENGLISH_STOPWORDS)
}

/// Read a stop-word file: one token per line, blank lines ignored.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<Stopwords> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&content))
}

fn parse_stopwords(content: &str) -> Stopwords {
    content
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Lowercase, split on non-alphanumerics, drop stop words and tokens without
/// a letter, then Porter-stem.
pub fn analyze(text: &str, stopwords: &Stopwords) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && t.chars().any(char::is_alphabetic))
        .filter(|t| !stopwords.contains(*t))
        .map(porter_stemmer::stem)
        .filter(|s| !s.is_empty())
        .collect()
}
