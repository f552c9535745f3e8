use std::collections::HashMap;

use super::{ScoreKind, ScoreVector, ScoringError};
use crate::sandbox::PassMatrix;

/// One group of codes sharing an identical pass pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusSet {
    pub codes: Vec<usize>,
    pub tests: Vec<usize>,
}

impl ConsensusSet {
    pub fn score(&self) -> usize {
        self.codes.len() * self.tests.len()
    }
}

/// Groups codes by pass pattern, in order of first appearance.
pub fn consensus_sets(matrix: &PassMatrix) -> Vec<ConsensusSet> {
    let mut index: HashMap<&[bool], usize> = HashMap::new();
    let mut sets: Vec<ConsensusSet> = Vec::new();
    for i in 0..matrix.num_codes() {
        let row = matrix.row(i);
        let k = *index.entry(row).or_insert_with(|| {
            sets.push(ConsensusSet {
                codes: Vec::new(),
                tests: row.iter().enumerate().filter(|(_, &p)| p).map(|(j, _)| j).collect(),
            });
            sets.len() - 1
        });
        sets[k].codes.push(i);
    }
    sets
}

/// Consensus-set baseline: a set scores `|codes| * |tests passed|`, every
/// member code gets its set's score, and every test gets the best score among
/// the sets that pass it (0 when no code passes it).
pub fn codet_scores(matrix: &PassMatrix) -> Result<(ScoreVector, ScoreVector), ScoringError> {
    if matrix.is_empty() {
        return Err(ScoringError::EmptyMatrix);
    }
    let mut code = vec![0.0; matrix.num_codes()];
    let mut test = vec![0.0f64; matrix.num_tests()];
    for set in consensus_sets(matrix) {
        let score = set.score() as f64;
        for &i in &set.codes {
            code[i] = score;
        }
        for &j in &set.tests {
            test[j] = test[j].max(score);
        }
    }
    Ok((
        ScoreVector::new(ScoreKind::Code, matrix.code_ids().to_vec(), code),
        ScoreVector::new(ScoreKind::Test, matrix.test_ids().to_vec(), test),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(rows: &[Vec<u8>]) -> (Vec<f64>, Vec<f64>) {
        let (c, t) = codet_scores(&PassMatrix::from_rows(rows).unwrap()).unwrap();
        (c.values, t.values)
    }

    #[test]
    fn single_set() {
        assert_eq!(scores(&[vec![1, 1], vec![1, 1]]), (vec![4.0, 4.0], vec![4.0, 4.0]));
    }

    #[test]
    fn singletons() {
        assert_eq!(scores(&[vec![1, 0], vec![0, 1]]), (vec![1.0, 1.0], vec![1.0, 1.0]));
    }

    #[test]
    fn nothing_passes() {
        assert_eq!(scores(&[vec![0, 0], vec![0, 0]]), (vec![0.0, 0.0], vec![0.0, 0.0]));
    }

    #[test]
    fn test_takes_best_set() {
        // sets: {0,1} pass {0} -> 2; {2} passes {0,1,2} -> 3
        let (c, t) = scores(&[vec![1, 0, 0], vec![1, 0, 0], vec![1, 1, 1]]);
        assert_eq!(c, vec![2.0, 2.0, 3.0]);
        assert_eq!(t, vec![3.0, 3.0, 3.0]);
    }

    #[test]
    fn grouping_order() {
        let m = PassMatrix::from_rows(&[vec![0, 1], vec![1, 0], vec![0, 1]]).unwrap();
        let sets = consensus_sets(&m);
        assert_eq!(sets[0].codes, vec![0, 2]);
        assert_eq!(sets[1].codes, vec![1]);
    }
}
