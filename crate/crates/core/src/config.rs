use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::RelationWeights;
use crate::influence::DEFAULT_RESTART;

/// Engine parameters. `k`, `weights`, `seed`, `restart`, `min_doc_freq` and
/// `symmetrize_citation` are fixed when an index is built; the rest are
/// per-query defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub k: usize,
    pub weights: RelationWeights,
    pub seed: u64,
    pub restart: f64,
    pub min_doc_freq: usize,
    pub symmetrize_citation: bool,
    pub max_iters: usize,
    pub tol: f64,
    pub com_t: f64,
    pub chain_length: usize,
    /// Candidate pool size for paper queries.
    #[serde(rename = "M")]
    pub m: usize,
    /// Relevant papers kept for keyword queries.
    #[serde(rename = "N")]
    pub n: usize,
    pub r: f64,
    pub beam_width: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k: 30,
            weights: RelationWeights::default(),
            seed: 0,
            restart: DEFAULT_RESTART,
            min_doc_freq: 2,
            symmetrize_citation: true,
            max_iters: 300,
            tol: 1e-6,
            com_t: 0.2,
            chain_length: 6,
            m: 50,
            n: 100,
            r: 0.05,
            beam_width: 64,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.k == 0 {
            return fail("K must be at least 1".into());
        }
        if !(self.restart > 0.0 && self.restart < 1.0) {
            return fail(format!("restart {} outside (0, 1)", self.restart));
        }
        if self.min_doc_freq == 0 {
            return fail("min_doc_freq must be at least 1".into());
        }
        if self.max_iters == 0 || !(self.tol > 0.0) {
            return fail("max_iters and tol must be positive".into());
        }
        self.validate_query()
    }

    /// Checks only the per-query fields.
    pub fn validate_query(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if !(self.com_t > 0.0 && self.com_t <= 1.0) {
            return fail(format!("com_t {} outside (0, 1]", self.com_t));
        }
        if self.chain_length < 2 {
            return fail(format!("chain length {} below 2", self.chain_length));
        }
        if self.m < self.chain_length || self.n < self.chain_length {
            return fail(format!(
                "pool sizes M = {} and N = {} must be at least the chain length {}",
                self.m, self.n, self.chain_length
            ));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return fail(format!("smoothness r = {} must be a nonnegative number", self.r));
        }
        if self.beam_width == 0 {
            return fail("beam width must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = EngineConfig::default();
        c.validate().unwrap();
        assert_eq!((c.k, c.com_t, c.chain_length, c.m, c.n, c.r, c.restart, c.beam_width), (30, 0.2, 6, 50, 100, 0.05, 0.15, 64));
    }

    #[test]
    fn out_of_range_fields_are_rejected() {
        let bad = [
            EngineConfig { k: 0, ..Default::default() },
            EngineConfig { com_t: 0.0, ..Default::default() },
            EngineConfig { chain_length: 1, ..Default::default() },
            EngineConfig { m: 3, ..Default::default() },
            EngineConfig { r: -0.1, ..Default::default() },
            EngineConfig { restart: 1.0, ..Default::default() },
            EngineConfig { beam_width: 0, ..Default::default() },
            EngineConfig { weights: RelationWeights([0.5, 0.5, 0.5]), ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Validation(_))), "{c:?}");
        }
    }

    #[test]
    fn json_round_trip() {
        let c = EngineConfig { seed: 7, ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"M\":50"));
        assert_eq!(serde_json::from_str::<EngineConfig>(&text).unwrap(), c);
    }
}
