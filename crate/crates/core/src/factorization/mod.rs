//! Joint nonnegative factorization of the citation, content and authorship
//! relations with a shared paper factor and a diagonal community core.
//!
//! Each relation `X` over facets `(a, b)` is modelled as
//! `X̂(i, j) = Σ_k p_k · U_a(i, k) · U_b(j, k)`, and the weighted sum of
//! generalized KL divergences is minimized by EM-style multiplicative
//! updates. Responsibilities are only ever formed at nonzero cells.
//!
//! Relations are rescaled to unit total mass before fitting: with columns of
//! every factor and the core on the simplex, the model itself has unit mass.

mod objective;
mod topics;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::RelationSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sparse::SparseMatrix;

pub use objective::{generalized_kl_dense, objective_value, relation_divergence};
pub use topics::{assign_communities, topic_distribution, Communities, TopicDistribution};

/// Divisor floor used throughout the updates.
pub const DENOM_FLOOR: f64 = 1e-12;

/// Dense row-major nonnegative factor matrix (`rows × k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    rows: usize,
    k: usize,
    data: Vec<f64>,
}

impl Factor {
    pub fn zeros(rows: usize, k: usize) -> Self {
        Factor {
            rows,
            k,
            data: vec![0.0; rows * k],
        }
    }

    /// Factor from row-major values; the length must be `rows * k`.
    pub fn from_data(rows: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * k {
            return Err(Error::validation(format!("{} values for a {rows} x {k} factor", data.len())));
        }
        Ok(Factor { rows, k, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.k + k]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.k];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    /// Rescale every column to sum to one. A column with no mass becomes
    /// uniform so the simplex constraint always holds.
    fn normalize_columns(&mut self) {
        if self.rows == 0 {
            return;
        }
        let sums = self.column_sums();
        let uniform = 1.0 / self.rows as f64;
        for i in 0..self.rows {
            let k = self.k;
            let row = &mut self.data[i * k..(i + 1) * k];
            for (v, s) in row.iter_mut().zip(&sums) {
                *v = if *s > 0.0 { *v / s } else { uniform };
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// The three entity sets a relation can connect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Facet {
    Paper,
    Word,
    Author,
}

impl Facet {
    fn tag(self) -> &'static str {
        match self {
            Facet::Paper => "paper",
            Facet::Word => "word",
            Facet::Author => "author",
        }
    }
}

/// Relation weights `(citation, content, authorship)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationWeights(pub [f64; 3]);

impl Default for RelationWeights {
    fn default() -> Self {
        RelationWeights([1.0 / 3.0; 3])
    }
}

impl RelationWeights {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::validation("relation weights must be nonnegative"));
        }
        let total: f64 = self.0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("relation weights sum to {total}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FactorizeOptions {
    pub k: usize,
    pub weights: RelationWeights,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once `|ΔJ| / J` falls below this.
    pub tol: f64,
    pub execution: Execution,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        FactorizeOptions {
            k: 30,
            weights: RelationWeights::default(),
            seed: 0,
            max_iters: 300,
            tol: 1e-6,
            execution: Execution::default(),
        }
    }
}

/// Fitted community model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFacModel {
    pub k: usize,
    /// Community probabilities `p_k`.
    pub core: Vec<f64>,
    pub papers: Factor,
    pub words: Factor,
    pub authors: Factor,
    pub weights: RelationWeights,
    pub seed: u64,
    /// Objective value of the parameters entering each iteration; the last
    /// entry belongs to the returned parameters.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl MetaFacModel {
    pub fn factor(&self, facet: Facet) -> &Factor {
        match facet {
            Facet::Paper => &self.papers,
            Facet::Word => &self.words,
            Facet::Author => &self.authors,
        }
    }

    /// Structured-text checkpoint. Floats round-trip exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            ordinal: e.line(),
            message: format!("model checkpoint: {e}"),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Model value at one cell of a relation between `row_facet` and `col_facet`.
    pub fn reconstruct(&self, row_facet: Facet, i: usize, col_facet: Facet, j: usize) -> f64 {
        let a = self.factor(row_facet).row(i);
        let b = self.factor(col_facet).row(j);
        (0..self.k).map(|k| self.core[k] * a[k] * b[k]).sum()
    }
}

/// One relation prepared for fitting: unit-mass data plus its transpose for
/// the column-side accumulation.
pub(crate) struct FitRelation {
    pub data: SparseMatrix,
    pub transposed: SparseMatrix,
    pub row_facet: Facet,
    pub col_facet: Facet,
    pub weight: f64,
}

pub(crate) fn prepare(relations: &RelationSet, weights: &RelationWeights) -> Vec<FitRelation> {
    let specs = [
        (&relations.citation, Facet::Paper, weights.0[0]),
        (&relations.content, Facet::Word, weights.0[1]),
        (&relations.authorship, Facet::Author, weights.0[2]),
    ];
    specs
        .into_iter()
        .map(|(m, col_facet, weight)| {
            let total = m.total();
            let data = if total > 0.0 { m.scaled(1.0 / total) } else { m.clone() };
            FitRelation {
                transposed: data.transpose(),
                data,
                row_facet: Facet::Paper,
                col_facet,
                weight,
            }
        })
        .collect()
}

fn entity_seed(seed: u64, facet: Facet, key: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(facet.tag().as_bytes());
    h.update([0u8]);
    h.update(key.as_bytes());
    h.finalize().into()
}

/// Uniform draws in `[0.1, 1.0)` seeded per entity, so reordering the
/// entities reorders the initial rows identically.
fn init_factor(keys: &[String], facet: Facet, k: usize, seed: u64) -> Factor {
    let mut f = Factor::zeros(keys.len(), k);
    for (i, key) in keys.iter().enumerate() {
        let mut rng = ChaCha8Rng::from_seed(entity_seed(seed, facet, key));
        for v in f.row_mut(i) {
            *v = rng.random_range(0.1..1.0);
        }
    }
    f.normalize_columns();
    f
}

/// Per-relation result of one E-step pass.
struct EStep {
    /// Responsibility mass per row entity and community.
    row_acc: Factor,
    /// Responsibility mass per column entity and community.
    col_acc: Factor,
    /// `Σ x ln(x / x̂)` over nonzero cells.
    log_term: f64,
}

fn cell_terms(core: &[f64], a: &[f64], b: &[f64], buf: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..core.len() {
        let t = core[k] * a[k] * b[k];
        buf[k] = t;
        total += t;
    }
    total
}

fn e_step(rel: &FitRelation, core: &[f64], rows: &Factor, cols: &Factor, exec: Execution) -> EStep {
    let k = core.len();
    let row_parts = exec.map_range(rel.data.rows(), |i| {
        let mut acc = vec![0.0; k];
        let mut buf = vec![0.0; k];
        let mut log_term = 0.0;
        for (j, x) in rel.data.row(i) {
            let xhat = cell_terms(core, rows.row(i), cols.row(j), &mut buf).max(DENOM_FLOOR);
            log_term += x * (x / xhat).ln();
            let ratio = x / xhat;
            for (a, t) in acc.iter_mut().zip(&buf) {
                *a += ratio * t;
            }
        }
        (acc, log_term)
    });
    let col_parts = exec.map_range(rel.transposed.rows(), |j| {
        let mut acc = vec![0.0; k];
        let mut buf = vec![0.0; k];
        for (i, x) in rel.transposed.row(j) {
            let xhat = cell_terms(core, rows.row(i), cols.row(j), &mut buf).max(DENOM_FLOOR);
            let ratio = x / xhat;
            for (a, t) in acc.iter_mut().zip(&buf) {
                *a += ratio * t;
            }
        }
        acc
    });
    let mut row_acc = Factor::zeros(rows.rows(), k);
    let mut log_term = 0.0;
    for (i, (acc, lt)) in row_parts.into_iter().enumerate() {
        row_acc.row_mut(i).copy_from_slice(&acc);
        log_term += lt;
    }
    let mut col_acc = Factor::zeros(cols.rows(), k);
    for (j, acc) in col_parts.into_iter().enumerate() {
        col_acc.row_mut(j).copy_from_slice(&acc);
    }
    EStep {
        row_acc,
        col_acc,
        log_term,
    }
}

/// Total model mass of a relation: `Σ_k p_k (Σ_i U_a(i,k)) (Σ_j U_b(j,k))`.
pub(crate) fn model_mass(core: &[f64], rows: &Factor, cols: &Factor) -> f64 {
    let ra = rows.column_sums();
    let cb = cols.column_sums();
    (0..core.len()).map(|k| core[k] * ra[k] * cb[k]).sum()
}

fn add_scaled(target: &mut Factor, source: &Factor, w: f64) {
    for (t, s) in target.data.iter_mut().zip(&source.data) {
        *t += w * s;
    }
}

/// Fit the community model by alternating E- and M-steps until the relative
/// objective change drops below `opts.tol` or `opts.max_iters` updates ran.
pub fn factorize(relations: &RelationSet, opts: &FactorizeOptions) -> Result<MetaFacModel> {
    let k = opts.k;
    if k == 0 {
        return Err(Error::validation("community count must be at least 1"));
    }
    opts.weights.validate()?;
    let n_papers = relations.n_papers();
    if n_papers == 0 {
        return Err(Error::validation("empty relations"));
    }
    let min_dim = [n_papers, relations.terms.len(), relations.authors.len()]
        .into_iter()
        .filter(|d| *d > 0)
        .min()
        .unwrap();
    if k > min_dim {
        return Err(Error::validation(format!(
            "community count {k} exceeds smallest facet size {min_dim}"
        )));
    }
    let fit = prepare(relations, &opts.weights);
    if fit.iter().all(|r| r.weight == 0.0 || r.data.nnz() == 0) {
        return Err(Error::validation("no weighted relation has observations"));
    }

    let mut model = MetaFacModel {
        k,
        core: vec![1.0 / k as f64; k],
        papers: init_factor(&relations.paper_ids, Facet::Paper, k, opts.seed),
        words: init_factor(&relations.terms, Facet::Word, k, opts.seed),
        authors: init_factor(&relations.authors, Facet::Author, k, opts.seed),
        weights: opts.weights,
        seed: opts.seed,
        objective_trace: Vec::new(),
        converged: false,
    };

    for iteration in 0..=opts.max_iters {
        let mut objective = 0.0;
        let mut paper_acc = Factor::zeros(n_papers, k);
        let mut word_acc = Factor::zeros(model.words.rows(), k);
        let mut author_acc = Factor::zeros(model.authors.rows(), k);
        let mut core_acc = vec![0.0; k];

        for rel in &fit {
            if rel.weight == 0.0 {
                continue;
            }
            let rows = model.factor(rel.row_facet);
            let cols = model.factor(rel.col_facet);
            let mass = model_mass(&model.core, rows, cols);
            if rel.data.nnz() == 0 {
                objective += rel.weight * mass;
                continue;
            }
            let e = e_step(rel, &model.core, rows, cols, opts.execution);
            objective += rel.weight * (e.log_term - rel.data.total() + mass);

            add_scaled(&mut paper_acc, &e.row_acc, rel.weight);
            let col_target = match rel.col_facet {
                Facet::Paper => &mut paper_acc,
                Facet::Word => &mut word_acc,
                Facet::Author => &mut author_acc,
            };
            add_scaled(col_target, &e.col_acc, rel.weight);
            for (c, s) in core_acc.iter_mut().zip(e.row_acc.column_sums()) {
                *c += rel.weight * s;
            }
        }

        if !objective.is_finite() {
            return Err(Error::Numeric {
                iteration,
                message: format!("objective is {objective}"),
            });
        }
        let previous = model.objective_trace.last().copied();
        model.objective_trace.push(objective);
        if let Some(prev) = previous {
            let change = (prev - objective).abs() / prev.abs().max(DENOM_FLOOR);
            if change < opts.tol {
                model.converged = true;
                break;
            }
        }
        if iteration == opts.max_iters {
            break;
        }

        let core_total: f64 = core_acc.iter().sum::<f64>().max(DENOM_FLOOR);
        model.core = core_acc.iter().map(|c| c / core_total).collect();
        paper_acc.normalize_columns();
        word_acc.normalize_columns();
        author_acc.normalize_columns();
        // Facets no weighted relation touches keep their current values.
        let touched = |facet: Facet| fit.iter().any(|r| r.weight > 0.0 && r.data.nnz() > 0 && r.col_facet == facet);
        model.papers = paper_acc;
        if touched(Facet::Word) {
            model.words = word_acc;
        }
        if touched(Facet::Author) {
            model.authors = author_acc;
        }
        if !(model.papers.is_finite() && model.words.is_finite() && model.authors.is_finite())
            || model.core.iter().any(|c| !c.is_finite())
        {
            return Err(Error::Numeric {
                iteration,
                message: "non-finite factor entry after update".into(),
            });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    pub(crate) fn relations_from(
        citation: SparseMatrix,
        content: SparseMatrix,
        authorship: SparseMatrix,
    ) -> RelationSet {
        let n = content.rows();
        RelationSet {
            paper_ids: (0..n).map(|i| format!("p{i}")).collect(),
            terms: (0..content.cols()).map(|i| format!("w{i}")).collect(),
            authors: (0..authorship.cols()).map(|i| format!("a{i}")).collect(),
            author_index: HashMap::new(),
            citation,
            content,
            authorship,
            dangling_dropped: 0,
        }
    }

    fn dense(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> SparseMatrix {
        let t = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, f(i, j)))
            .collect();
        SparseMatrix::from_triplets(rows, cols, t)
    }

    #[test]
    fn rank_one_content_is_recovered() {
        let a = [0.1, 0.4, 0.2, 0.3];
        let b = [0.5, 0.25, 0.125, 0.125];
        let content = dense(4, 4, |i, j| a[i] * b[j]);
        let rel = relations_from(SparseMatrix::zeros(4, 4), content.clone(), SparseMatrix::zeros(4, 0));
        let opts = FactorizeOptions {
            k: 1,
            weights: RelationWeights([0.0, 1.0, 0.0]),
            seed: 3,
            max_iters: 50,
            tol: 1e-12,
            execution: Execution::Sequential,
        };
        let model = factorize(&rel, &opts).unwrap();
        let xhat: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| model.reconstruct(Facet::Paper, i, Facet::Word, j)).collect())
            .collect();
        let kl = generalized_kl_dense(&content.to_dense(), &xhat);
        assert!(kl < 1e-6, "kl = {kl}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let content = dense(3, 2, |_, _| 1.0);
        let rel = relations_from(SparseMatrix::zeros(3, 3), content, SparseMatrix::zeros(3, 0));
        let mut opts = FactorizeOptions {
            k: 3,
            ..Default::default()
        };
        assert!(matches!(factorize(&rel, &opts), Err(Error::Validation(_))));
        opts.k = 0;
        assert!(matches!(factorize(&rel, &opts), Err(Error::Validation(_))));
        opts.k = 1;
        opts.weights = RelationWeights([0.5, 0.6, 0.0]);
        assert!(matches!(factorize(&rel, &opts), Err(Error::Validation(_))));
    }

    #[test]
    fn default_weights_are_equal_thirds() {
        assert_eq!(RelationWeights::default().0, [1.0 / 3.0; 3]);
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let content = dense(5, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.5);
        let authors = dense(5, 3, |i, j| ((i + j) % 2) as f64);
        let rel = relations_from(SparseMatrix::zeros(5, 5), content, authors);
        let opts = FactorizeOptions {
            k: 2,
            max_iters: 20,
            ..Default::default()
        };
        let model = factorize(&rel, &opts).unwrap();
        let back = MetaFacModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json(), model.to_json());
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let content = dense(8, 6, |i, j| ((i * 5 + j * 11) % 7) as f64);
        let citation = dense(8, 8, |i, j| ((i + j) % 3 == 0 && i != j) as u8 as f64);
        let authors = dense(8, 4, |i, j| (i % 4 == j) as u8 as f64);
        let rel = relations_from(citation, content, authors);
        let mut opts = FactorizeOptions {
            k: 3,
            max_iters: 40,
            execution: Execution::Sequential,
            ..Default::default()
        };
        let a = factorize(&rel, &opts).unwrap();
        opts.execution = Execution::Parallel;
        let b = factorize(&rel, &opts).unwrap();
        assert_eq!(a, b);
    }
}
