//! Ranking generated code and tests from their mutual pass/fail outcomes.

mod codet;
mod dual;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use codet::{codet_scores, consensus_sets, ConsensusSet};
pub use dual::{dual_critic, dual_critic_scores, DualCritic, DualCriticScores, ScoringConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("pass matrix is empty")]
    EmptyMatrix,
    #[error("invalid scoring config: {0}")]
    InvalidConfig(String),
    #[error("{scores} scores for {ids} ids")]
    LengthMismatch { scores: usize, ids: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Code,
    Test,
}

/// Which scorer produced a set of scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scorer {
    Dual,
    Codet,
}

impl Scorer {
    pub fn label(self) -> &'static str {
        match self {
            Scorer::Dual => "dual-critic",
            Scorer::Codet => "consensus-set",
        }
    }

    pub fn score(self, matrix: &crate::PassMatrix, cfg: &ScoringConfig) -> Result<(ScoreVector, ScoreVector), ScoringError> {
        match self {
            Scorer::Dual => dual_critic_scores(matrix, cfg),
            Scorer::Codet => codet_scores(matrix),
        }
    }
}

/// Scores aligned with the ids of the matrix they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub kind: ScoreKind,
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(kind: ScoreKind, ids: Vec<String>, values: Vec<f64>) -> Self {
        debug_assert_eq!(ids.len(), values.len());
        ScoreVector { kind, ids, values }
    }

    pub fn ranked(&self) -> Vec<Ranked> {
        rank(&self.values, &self.ids).expect("aligned by construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub index: usize,
    pub id: String,
    pub score: f64,
    /// 1 + number of strictly higher scores, so ties share a rank.
    pub rank: usize,
}

/// Indices sorted by descending score; ties keep their original order.
pub fn ranking_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

pub fn rank(scores: &[f64], ids: &[String]) -> Result<Vec<Ranked>, ScoringError> {
    if scores.len() != ids.len() {
        return Err(ScoringError::LengthMismatch { scores: scores.len(), ids: ids.len() });
    }
    let order = ranking_order(scores);
    let mut out: Vec<Ranked> = Vec::with_capacity(order.len());
    for (pos, &i) in order.iter().enumerate() {
        let rank = match out.last() {
            Some(prev) if prev.score.total_cmp(&scores[i]).is_eq() => prev.rank,
            _ => pos + 1,
        };
        out.push(Ranked { index: i, id: ids[i].clone(), score: scores[i], rank });
    }
    Ok(out)
}

/// Tie-inclusive top-`n`: every item scoring at least the `n`-th best score,
/// in ranking order. The result can hold more than `n` items.
pub fn top_n(scores: &[f64], n: usize) -> Vec<usize> {
    if n == 0 || scores.is_empty() {
        return Vec::new();
    }
    let order = ranking_order(scores);
    let cutoff = scores[order[n.min(order.len()) - 1]];
    order.into_iter().take_while(|&i| scores[i].total_cmp(&cutoff).is_ge()).collect()
}
