use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetError;

pub const MIN_SPLIT_ROWS: usize = 10;

/// Disjoint train/valid/test row indices covering every row exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitIndices {
    pub fn total(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }
}

/// Sizes of an 80/10/10 split: validation and test each get `round(n / 10)`
/// rows and training absorbs the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let tenth = (n as f64 / 10.0).round() as usize;
    (n - 2 * tenth, tenth, tenth)
}

/// Seeded uniform shuffle of `0..n_rows` followed by contiguous slicing
/// into train, validation and test.
pub fn split(n_rows: usize, seed: u64) -> Result<SplitIndices, DatasetError> {
    if n_rows < MIN_SPLIT_ROWS {
        return Err(DatasetError::TooFewRows {
            rows: n_rows,
            min: MIN_SPLIT_ROWS,
        });
    }
    let mut idx: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let (n_train, n_valid, _) = split_sizes(n_rows);
    let test = idx.split_off(n_train + n_valid);
    let valid = idx.split_off(n_train);
    Ok(SplitIndices {
        train: idx,
        valid,
        test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportions() {
        assert_eq!(split_sizes(100), (80, 10, 10));
        assert_eq!(split_sizes(4944), (3956, 494, 494));
        let s = split(100, 7).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (80, 10, 10));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(split(50, 3).unwrap(), split(50, 3).unwrap());
        assert_ne!(split(50, 3).unwrap().train, split(50, 4).unwrap().train);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            split(9, 0),
            Err(DatasetError::TooFewRows { rows: 9, .. })
        ));
    }

    #[test]
    fn partition_for_every_size() {
        for n in 10..=5000 {
            let s = split(n, n as u64).unwrap();
            let mut seen = vec![false; n];
            for &i in s.train.iter().chain(&s.valid).chain(&s.test) {
                assert!(!seen[i], "row {i} repeated for n={n}");
                seen[i] = true;
            }
            assert!(seen.iter().all(|&b| b), "n={n}");
            let (a, b, c) = split_sizes(n);
            assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (a, b, c));
        }
    }
}
