//! Random walk with restart on the paper–word bipartite graph.

use serde::{Deserialize, Serialize};

use crate::corpus::RelationSet;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const DEFAULT_RESTART: f64 = 0.15;
pub const WALK_TOLERANCE: f64 = 1e-10;
pub const WALK_MAX_ITERS: usize = 10_000;

/// Directed bipartite graph with TF-IDF edge weights normalized into
/// transition probabilities in both directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartiteWalkGraph {
    pub paper_to_word: SparseMatrix,
    pub word_to_paper: SparseMatrix,
    pub restart: f64,
    /// Papers without any weighted word; a walker there jumps back to its start.
    pub empty_papers: Vec<usize>,
}

impl BipartiteWalkGraph {
    pub fn n_papers(&self) -> usize {
        self.paper_to_word.rows()
    }

    pub fn n_words(&self) -> usize {
        self.paper_to_word.cols()
    }

    pub fn is_empty_paper(&self, p: usize) -> bool {
        self.paper_to_word.row_nnz(p) == 0
    }
}

pub fn build_walk_graph(relations: &RelationSet, restart: f64) -> Result<BipartiteWalkGraph> {
    from_content(&relations.content, restart)
}

/// Walk graph straight from a paper × word weight matrix.
pub fn from_content(content: &SparseMatrix, restart: f64) -> Result<BipartiteWalkGraph> {
    if !(restart > 0.0 && restart < 1.0) {
        return Err(Error::validation(format!("restart probability {restart} outside (0, 1)")));
    }
    if content.nnz() == 0 {
        return Err(Error::validation("content relation is empty"));
    }
    let paper_to_word = content.row_normalized();
    let word_to_paper = content.transpose().row_normalized();
    let empty_papers = (0..content.rows()).filter(|&p| content.row_nnz(p) == 0).collect();
    Ok(BipartiteWalkGraph {
        paper_to_word,
        word_to_paper,
        restart,
        empty_papers,
    })
}

/// Unnormalized walk state over all nodes.
#[derive(Debug, Clone)]
pub struct WalkMass {
    pub papers: Vec<f64>,
    pub words: Vec<f64>,
    pub iterations: usize,
}

impl WalkMass {
    pub fn paper_total(&self) -> f64 {
        self.papers.iter().sum()
    }
}

/// Power iteration for `x = α e_start + (1 − α) Tᵀ x`, where mass entering
/// `blocked` is absorbed and mass at an empty paper returns to the start.
/// Stops when the L1 change drops below `tol`.
pub fn walk_mass(
    g: &BipartiteWalkGraph,
    start: usize,
    blocked: Option<usize>,
    tol: f64,
    max_iters: usize,
) -> Result<WalkMass> {
    let (np, nw) = (g.n_papers(), g.n_words());
    if start >= np {
        return Err(Error::Lookup(format!("paper index {start} out of range")));
    }
    let alpha = g.restart;
    let mut papers = vec![0.0; np];
    let mut words = vec![0.0; nw];
    papers[start] = 1.0;
    let mut next_p = vec![0.0; np];
    let mut next_w = vec![0.0; nw];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        next_p.iter_mut().for_each(|v| *v = 0.0);
        next_w.iter_mut().for_each(|v| *v = 0.0);
        let mut to_start = alpha;
        for (p, &m) in papers.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            if g.paper_to_word.row_nnz(p) == 0 {
                to_start += (1.0 - alpha) * m;
                continue;
            }
            for (w, t) in g.paper_to_word.row(p) {
                next_w[w] += (1.0 - alpha) * m * t;
            }
        }
        for (w, &m) in words.iter().enumerate() {
            if m == 0.0 || Some(w) == blocked {
                continue;
            }
            for (p, t) in g.word_to_paper.row(w) {
                next_p[p] += (1.0 - alpha) * m * t;
            }
        }
        next_p[start] += to_start;
        residual = l1_diff(&papers, &next_p) + l1_diff(&words, &next_w);
        std::mem::swap(&mut papers, &mut next_p);
        std::mem::swap(&mut words, &mut next_w);
        if residual < tol {
            return Ok(WalkMass {
                papers,
                words,
                iterations: it,
            });
        }
    }
    Err(Error::Numeric {
        iteration: max_iters,
        message: format!("walk from paper {start} did not converge, L1 residual {residual:e}"),
    })
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Visit distribution over papers for a walk restarting at `start`.
///
/// The unblocked distribution is normalized to sum to one over papers. With
/// `blocked_word` set, the blocked walk's paper mass is divided by that same
/// unblocked normalizer, so mass lost into the blocked word stays lost.
pub fn visit_probabilities(g: &BipartiteWalkGraph, start: usize, blocked_word: Option<usize>) -> Result<Vec<f64>> {
    let base = walk_mass(g, start, None, WALK_TOLERANCE, WALK_MAX_ITERS)?;
    let z = base.paper_total();
    let mass = match blocked_word {
        None => base,
        Some(w) => {
            if w >= g.n_words() {
                return Err(Error::Lookup(format!("word index {w} out of range")));
            }
            walk_mass(g, start, Some(w), WALK_TOLERANCE, WALK_MAX_ITERS)?
        }
    };
    Ok(mass.papers.iter().map(|m| m / z).collect())
}

/// Row of `(I − (1 − α)Tᵀ)⁻¹` for `node` (papers first, then words), i.e.
/// the fixed point of `y = e_node + (1 − α) T y`. Rows of empty papers are
/// treated as absorbing; they are unreachable from any other node.
pub(crate) fn inverse_row(g: &BipartiteWalkGraph, node: usize, tol: f64, max_iters: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (np, nw) = (g.n_papers(), g.n_words());
    let damp = 1.0 - g.restart;
    let mut yp = vec![0.0; np];
    let mut yw = vec![0.0; nw];
    let unit = |yp: &mut [f64], yw: &mut [f64]| {
        if node < np {
            yp[node] += 1.0;
        } else {
            yw[node - np] += 1.0;
        }
    };
    unit(&mut yp, &mut yw);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let mut np_vec: Vec<f64> = (0..np)
            .map(|p| damp * g.paper_to_word.row(p).map(|(w, t)| t * yw[w]).sum::<f64>())
            .collect();
        let mut nw_vec: Vec<f64> = (0..nw)
            .map(|w| damp * g.word_to_paper.row(w).map(|(p, t)| t * yp[p]).sum::<f64>())
            .collect();
        unit(&mut np_vec, &mut nw_vec);
        residual = linf_diff(&yp, &np_vec).max(linf_diff(&yw, &nw_vec));
        yp = np_vec;
        yw = nw_vec;
        if residual < tol {
            return Ok((yp, yw));
        }
    }
    Err(Error::Numeric {
        iteration: max_iters,
        message: format!("inverse row for node {node} did not converge, residual {residual:e}"),
    })
}

fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
