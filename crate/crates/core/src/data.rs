//! Training and test data generation.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::benchmarks::BenchmarkProblem;
use crate::seed;

pub const TEST_POINTS: usize = 200;
pub const MAX_RESAMPLES_PER_POINT: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("problem `{problem}` stayed singular after {retries} resamples")]
    SingularDomain { problem: String, retries: usize },
    #[error("n_points must be at least 1")]
    NoPoints,
    #[error("noise fraction {0} outside [0, 1]")]
    NoiseOutOfRange(f64),
}

/// Sampled inputs (stored column-major) with their targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    var_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    targets: Vec<f64>,
    noise_fraction: f64,
    seed: u64,
    resampled: usize,
}

impl Dataset {
    /// Builds a dataset from explicit rows.
    pub fn from_rows(var_names: Vec<String>, rows: &[Vec<f64>], targets: Vec<f64>) -> Dataset {
        assert_eq!(rows.len(), targets.len(), "row/target count mismatch");
        let mut columns = vec![Vec::with_capacity(rows.len()); var_names.len()];
        for row in rows {
            assert_eq!(row.len(), var_names.len(), "row width mismatch");
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(*v);
            }
        }
        Dataset { var_names, columns, targets, noise_fraction: 0.0, seed: 0, resampled: 0 }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dimensionality(&self) -> usize {
        self.columns.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn noise_fraction(&self) -> f64 {
        self.noise_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of singular draws that were discarded while sampling.
    pub fn resampled(&self) -> usize {
        self.resampled
    }

    /// Writes a CSV with the variable names and `y` as header.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.var_names.iter().map(String::as_str).collect();
        header.push("y");
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut record: Vec<String> = self.columns.iter().map(|c| c[i].to_string()).collect();
            record.push(self.targets[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> csv::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Draws `n_points` uniform inputs and targets `f(x)(1 + eps)`, `eps ~ U[-R/2, R/2]`.
pub fn sample_dataset<R: Rng + ?Sized>(
    problem: &BenchmarkProblem,
    n_points: usize,
    noise_fraction: f64,
    rng: &mut R,
) -> Result<Dataset, DataError> {
    if n_points == 0 {
        return Err(DataError::NoPoints);
    }
    if !(0.0..=1.0).contains(&noise_fraction) {
        return Err(DataError::NoiseOutOfRange(noise_fraction));
    }
    let dim = problem.dimensionality();
    let mut columns = vec![Vec::with_capacity(n_points); dim];
    let mut targets = Vec::with_capacity(n_points);
    let mut point = vec![0.0; dim];
    let mut resampled = 0;
    for _ in 0..n_points {
        let mut attempts = 0;
        let clean = loop {
            for (slot, var) in point.iter_mut().zip(&problem.variables) {
                *slot = rng.random_range(var.lo..var.hi);
            }
            match problem.evaluate(&point) {
                Ok(v) => break v,
                Err(_) if attempts < MAX_RESAMPLES_PER_POINT => {
                    attempts += 1;
                    resampled += 1;
                }
                Err(_) => {
                    return Err(DataError::SingularDomain {
                        problem: problem.id.clone(),
                        retries: MAX_RESAMPLES_PER_POINT,
                    })
                }
            }
        };
        let eps = noise_fraction * (rng.random::<f64>() - 0.5);
        for (col, v) in columns.iter_mut().zip(&point) {
            col.push(*v);
        }
        targets.push(clean * (1.0 + eps));
    }
    Ok(Dataset {
        var_names: problem.variables.iter().map(|v| v.name.clone()).collect(),
        columns,
        targets,
        noise_fraction,
        seed: 0,
        resampled,
    })
}

/// Seeded variant of [`sample_dataset`] that records the seed.
pub fn sample_dataset_seeded(
    problem: &BenchmarkProblem,
    n_points: usize,
    noise_fraction: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = sample_dataset(problem, n_points, noise_fraction, &mut rng)?;
    ds.seed = seed;
    Ok(ds)
}

/// Fixed seed used for a problem's clean test set.
pub fn test_seed(problem: &BenchmarkProblem) -> u64 {
    seed::mix(&[seed::text(&problem.id), 0x7e57_da7a])
}

/// The clean 200-point test set for `problem`; identical on every call.
pub fn test_dataset(problem: &BenchmarkProblem) -> Result<Dataset, DataError> {
    sample_dataset_seeded(problem, TEST_POINTS, 0.0, test_seed(problem))
}
