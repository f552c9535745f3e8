use serde::{Deserialize, Serialize};

use super::{ScoreKind, ScoreVector, ScoringError};
use crate::sandbox::PassMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub iterations: usize,
    /// Added to every normalizer so all-zero score vectors stay finite.
    pub epsilon: f64,
    /// Stop once no score moves by more than this between iterations.
    pub convergence_tol: Option<f64>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            iterations: 500,
            epsilon: 1e-8,
            convergence_tol: Some(1e-9),
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if self.iterations == 0 {
            return Err(ScoringError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ScoringError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(tol) = self.convergence_tol {
            if tol.is_nan() || tol < 0.0 {
                return Err(ScoringError::InvalidConfig(format!("convergence_tol must be >= 0, got {tol}")));
            }
        }
        Ok(())
    }
}

/// Mutual scoring state. Each [`step`](Self::step) rescores every code by
/// the normalized score mass of the tests it passes, then every test by the
/// normalized mass of the codes passing it.
#[derive(Debug, Clone)]
pub struct DualCritic<'a> {
    matrix: &'a PassMatrix,
    epsilon: f64,
    code: Vec<f64>,
    test: Vec<f64>,
}

impl<'a> DualCritic<'a> {
    pub fn new(matrix: &'a PassMatrix, epsilon: f64) -> Self {
        DualCritic {
            matrix,
            epsilon,
            code: vec![1.0; matrix.num_codes()],
            test: vec![1.0; matrix.num_tests()],
        }
    }

    pub fn code_scores(&self) -> &[f64] {
        &self.code
    }

    pub fn test_scores(&self) -> &[f64] {
        &self.test
    }

    /// Performs one update and returns the largest absolute change.
    pub fn step(&mut self) -> f64 {
        let m = self.matrix;
        let test_norm = self.test.iter().sum::<f64>() + self.epsilon;
        let code: Vec<f64> = (0..m.num_codes())
            .map(|i| {
                let mass: f64 = m.row(i).iter().zip(&self.test).map(|(&p, &t)| if p { t } else { 0.0 }).sum();
                mass / test_norm
            })
            .collect();
        let code_norm = code.iter().sum::<f64>() + self.epsilon;
        let test: Vec<f64> = (0..m.num_tests())
            .map(|j| {
                let mass: f64 = (0..m.num_codes()).map(|i| if m.get(i, j) { code[i] } else { 0.0 }).sum();
                mass / code_norm
            })
            .collect();
        let delta = max_abs_diff(&code, &self.code).max(max_abs_diff(&test, &self.test));
        self.code = code;
        self.test = test;
        delta
    }

    pub fn into_vectors(self) -> (ScoreVector, ScoreVector) {
        (
            ScoreVector::new(ScoreKind::Code, self.matrix.code_ids().to_vec(), self.code),
            ScoreVector::new(ScoreKind::Test, self.matrix.test_ids().to_vec(), self.test),
        )
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Scores produced by the dual-critic update, together with how many
/// iterations actually ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCriticScores {
    pub code: ScoreVector,
    pub test: ScoreVector,
    pub iterations_run: usize,
}

pub fn dual_critic(matrix: &PassMatrix, cfg: &ScoringConfig) -> Result<DualCriticScores, ScoringError> {
    cfg.validate()?;
    if matrix.is_empty() {
        return Err(ScoringError::EmptyMatrix);
    }
    let mut state = DualCritic::new(matrix, cfg.epsilon);
    let mut iterations_run = 0;
    for _ in 0..cfg.iterations {
        let delta = state.step();
        iterations_run += 1;
        if cfg.convergence_tol.is_some_and(|tol| delta < tol) {
            break;
        }
    }
    let (code, test) = state.into_vectors();
    Ok(DualCriticScores { code, test, iterations_run })
}

/// Code and test scores from the dual-critic iteration.
pub fn dual_critic_scores(matrix: &PassMatrix, cfg: &ScoringConfig) -> Result<(ScoreVector, ScoreVector), ScoringError> {
    dual_critic(matrix, cfg).map(|s| (s.code, s.test))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route for the 2x2 case: the code recurrence
    /// c <- 1 / (1 + c) with c0 = 1, run until it stops moving.
    fn golden_oracle() -> f64 {
        let mut c = 1.0f64;
        for _ in 0..10_000 {
            let next = 1.0 / (1.0 + c);
            if (next - c).abs() < 1e-15 {
                break;
            }
            c = next;
        }
        c
    }

    #[test]
    fn all_ones_is_a_fixed_point() {
        let m = PassMatrix::from_rows(&vec![vec![1; 4]; 3]).unwrap();
        let (c, t) = dual_critic_scores(&m, &ScoringConfig::default()).unwrap();
        assert!(c.values.iter().chain(&t.values).all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn all_zeros_collapse_after_one_step() {
        let m = PassMatrix::from_rows(&vec![vec![0; 3]; 2]).unwrap();
        let mut s = DualCritic::new(&m, 1e-8);
        s.step();
        assert!(s.code_scores().iter().chain(s.test_scores()).all(|&v| v == 0.0));
        let out = dual_critic(&m, &ScoringConfig::default()).unwrap();
        assert!(out.code.values.iter().chain(&out.test.values).all(|&v| v == 0.0));
    }

    #[test]
    fn golden_ratio_conjugate() {
        let oracle = golden_oracle();
        assert!((oracle - 0.618_034).abs() < 1e-6);
        let m = PassMatrix::from_rows(&[vec![1, 1], vec![1, 0]]).unwrap();
        let cfg = ScoringConfig {
            convergence_tol: None,
            ..ScoringConfig::default()
        };
        let (c, t) = dual_critic_scores(&m, &cfg).unwrap();
        for v in [&c.values, &t.values] {
            assert!((v[0] - 1.0).abs() < 1e-6);
            assert!((v[1] - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn early_stop_triggers() {
        let m = PassMatrix::from_rows(&[vec![1, 1], vec![1, 0]]).unwrap();
        let out = dual_critic(&m, &ScoringConfig::default()).unwrap();
        assert!(out.iterations_run < 500, "ran {}", out.iterations_run);
    }

    #[test]
    fn config_and_shape_errors() {
        let m = PassMatrix::from_rows(&[vec![1]]).unwrap();
        let bad = ScoringConfig {
            iterations: 0,
            ..ScoringConfig::default()
        };
        assert!(matches!(dual_critic(&m, &bad), Err(ScoringError::InvalidConfig(_))));
        let bad = ScoringConfig {
            epsilon: 0.0,
            ..ScoringConfig::default()
        };
        assert!(dual_critic(&m, &bad).is_err());
        let empty = PassMatrix::from_rows(&[]).unwrap();
        assert!(matches!(dual_critic(&empty, &ScoringConfig::default()), Err(ScoringError::EmptyMatrix)));
    }

    fn matrix_strategy() -> impl proptest::strategy::Strategy<Value = Vec<Vec<u8>>> {
        use proptest::prelude::*;
        (1usize..8, 1usize..8).prop_flat_map(|(c, t)| prop::collection::vec(prop::collection::vec(0u8..2, t), c))
    }

    proptest::proptest! {
        #[test]
        fn scores_bounded_and_dominance_respected(rows in matrix_strategy()) {
            let m = PassMatrix::from_rows(&rows).unwrap();
            let mut s = DualCritic::new(&m, 1e-8);
            for _ in 0..50 {
                s.step();
                let (c, t) = (s.code_scores(), s.test_scores());
                proptest::prop_assert!(c.iter().chain(t).all(|v| (0.0..=1.0).contains(v)));
                for i in 0..rows.len() {
                    for j in 0..rows.len() {
                        if rows[i].iter().zip(&rows[j]).all(|(a, b)| a >= b) {
                            proptest::prop_assert!(c[i] >= c[j]);
                        }
                    }
                    if rows[i].iter().all(|&b| b == 1) {
                        let max = c.iter().cloned().fold(0.0, f64::max);
                        proptest::prop_assert_eq!(c[i], max);
                    }
                }
            }
        }
    }
}
