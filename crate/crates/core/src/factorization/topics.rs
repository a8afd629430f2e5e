use serde::{Deserialize, Serialize};

use super::MetaFacModel;
use crate::error::{Error, Result};

/// Posterior community distribution `p(k | paper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub probs: Vec<f64>,
}

impl TopicDistribution {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = k;
            }
        }
        best
    }
}

/// Bayes rule on the paper factor: `p(k|i) ∝ U1(i,k) · p_k`.
pub fn topic_distribution(model: &MetaFacModel, paper: usize) -> Result<TopicDistribution> {
    if paper >= model.papers.rows() {
        return Err(Error::Lookup(format!("paper index {paper} out of range")));
    }
    let joint: Vec<f64> = model
        .papers
        .row(paper)
        .iter()
        .zip(&model.core)
        .map(|(u, p)| u * p)
        .collect();
    let evidence: f64 = joint.iter().sum();
    if evidence <= 0.0 || !evidence.is_finite() {
        return Err(Error::query(format!(
            "paper at index {paper} has no community signal"
        )));
    }
    Ok(TopicDistribution {
        probs: joint.into_iter().map(|j| j / evidence).collect(),
    })
}

/// Communities whose probability reaches `com_t`; falls back to the single
/// most probable community (lowest index on ties) when none does.
pub fn assign_communities(t: &TopicDistribution, com_t: f64) -> Vec<usize> {
    let hits: Vec<usize> = t
        .probs
        .iter()
        .enumerate()
        .filter(|(_, p)| **p >= com_t)
        .map(|(k, _)| k)
        .collect();
    if hits.is_empty() && !t.probs.is_empty() {
        vec![t.argmax()]
    } else {
        hits
    }
}

/// Soft community memberships of every paper under one threshold.
#[derive(Debug, Clone)]
pub struct Communities {
    pub com_t: f64,
    /// Communities of each paper; empty for papers without community signal.
    pub of_paper: Vec<Vec<usize>>,
    /// Papers of each community, ascending by index.
    pub members: Vec<Vec<usize>>,
}

impl Communities {
    pub fn new(model: &MetaFacModel, com_t: f64) -> Self {
        let n = model.papers.rows();
        let mut of_paper = Vec::with_capacity(n);
        let mut members = vec![Vec::new(); model.k];
        for i in 0..n {
            let ks = match topic_distribution(model, i) {
                Ok(t) => assign_communities(&t, com_t),
                Err(_) => Vec::new(),
            };
            for &k in &ks {
                members[k].push(i);
            }
            of_paper.push(ks);
        }
        Communities {
            com_t,
            of_paper,
            members,
        }
    }

    pub fn contains(&self, community: usize, paper: usize) -> bool {
        self.of_paper[paper].contains(&community)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::{Factor, RelationWeights};

    fn probs_with(k: usize, entries: &[(usize, f64)]) -> TopicDistribution {
        let mut probs = vec![0.0; k];
        for (i, p) in entries {
            probs[*i] = *p;
        }
        TopicDistribution { probs }
    }

    #[test]
    fn threshold_picks_both_communities() {
        let t = probs_with(30, &[(8, 0.26), (14, 0.74)]);
        assert_eq!(assign_communities(&t, 0.2), vec![8, 14]);
    }

    #[test]
    fn two_dominant_communities() {
        let t = probs_with(30, &[(11, 0.65), (14, 0.34), (3, 0.01)]);
        assert_eq!(assign_communities(&t, 0.2), vec![11, 14]);
    }

    #[test]
    fn uniform_falls_back_to_lowest_argmax() {
        let t = TopicDistribution {
            probs: vec![1.0 / 30.0; 30],
        };
        assert_eq!(assign_communities(&t, 0.2), vec![0]);
    }

    fn model_with_papers(rows: Vec<Vec<f64>>, core: Vec<f64>) -> MetaFacModel {
        let k = core.len();
        let mut papers = Factor::zeros(rows.len(), k);
        for (i, r) in rows.iter().enumerate() {
            papers.row_mut(i).copy_from_slice(r);
        }
        MetaFacModel {
            k,
            core,
            papers,
            words: Factor::zeros(0, k),
            authors: Factor::zeros(0, k),
            weights: RelationWeights::default(),
            seed: 0,
            objective_trace: vec![],
            converged: true,
        }
    }

    #[test]
    fn single_community_is_certain() {
        let m = model_with_papers(vec![vec![0.4], vec![0.6]], vec![1.0]);
        assert_eq!(topic_distribution(&m, 1).unwrap().probs, vec![1.0]);
    }

    #[test]
    fn one_hot_row_gives_point_mass() {
        let m = model_with_papers(vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]], vec![1.0 / 3.0; 3]);
        assert_eq!(topic_distribution(&m, 0).unwrap().probs, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_row_is_degenerate() {
        let m = model_with_papers(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0.5, 0.5]);
        assert!(matches!(topic_distribution(&m, 0), Err(Error::Query(_))));
        let c = Communities::new(&m, 0.2);
        assert!(c.of_paper[0].is_empty());
        assert_eq!(c.members, vec![vec![1], vec![1]]);
    }
}
