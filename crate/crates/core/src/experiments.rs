//! Trial orchestration, sweeps and result summaries.
//!
//! Every trial is seeded from `(master_seed, problem, objective, n_points,
//! noise, trial)`, so a cell can be recomputed on its own and the output does
//! not depend on how many worker threads ran it. Results go to a CSV sink in
//! canonical trial order; reopening the same file skips completed trials.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{modified_problem, BenchmarkProblem};
use crate::data::{sample_dataset_seeded, test_dataset, DataError, Dataset};
use crate::evolution::{run_evolution, EvolutionConfig, EvolutionError, Termination};
use crate::fitness::{test_score, Objective};
use crate::seed;

pub const PERFECT_THRESHOLD: f64 = 1e-6;
pub const TIE_EPSILON: f64 = 1e-9;
pub const RESULTS_HEADER: &str =
    "problem,objective,n_points,noise,trial,seed,train_fitness,test_rmse,test_r2,generations,wall_seconds,best_program";

/// Coarse point schedule: 3, 23, ..., 193.
pub fn coarse_point_schedule() -> Vec<usize> {
    (3..=193).step_by(20).collect()
}

/// Fine point schedule: 3, 5, ..., 19.
pub fn fine_point_schedule() -> Vec<usize> {
    (3..=19).step_by(2).collect()
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("results file: {0}")]
    Io(#[from] std::io::Error),
    #[error("results file: {0}")]
    Csv(#[from] csv::Error),
    #[error("no {missing} result for problem `{problem}` at {n_points} points, noise {noise}")]
    MissingCounterpart { problem: String, n_points: usize, noise: f64, missing: Objective },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// `rng_seed` is ignored; each trial derives its own.
    pub evolution: EvolutionConfig,
    pub master_seed: u64,
    pub perfect_threshold: f64,
    pub tie_epsilon: f64,
    /// Record measured wall time in results. Off by default so reruns are
    /// byte-identical; always on under a wall-clock budget.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            evolution: EvolutionConfig::default(),
            master_seed: 0,
            perfect_threshold: PERFECT_THRESHOLD,
            tie_epsilon: TIE_EPSILON,
            record_timing: false,
        }
    }
}

/// One row of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    #[serde(rename = "problem")]
    pub problem_id: String,
    pub objective: Objective,
    pub n_points: usize,
    #[serde(rename = "noise")]
    pub noise_fraction: f64,
    #[serde(rename = "trial")]
    pub trial_index: usize,
    pub seed: u64,
    pub train_fitness: f64,
    pub test_rmse: f64,
    pub test_r2: f64,
    pub generations: usize,
    pub wall_seconds: f64,
    pub best_program: String,
}

impl TrialResult {
    fn key(&self) -> TrialKey {
        TrialKey {
            problem: self.problem_id.clone(),
            objective: self.objective,
            n_points: self.n_points,
            noise_bits: self.noise_fraction.to_bits(),
            trial: self.trial_index,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct TrialKey {
    problem: String,
    objective: Objective,
    n_points: usize,
    noise_bits: u64,
    trial: usize,
}

/// Seed for one trial cell.
pub fn trial_seed(
    master: u64,
    problem_id: &str,
    objective: Objective,
    n_points: usize,
    noise: f64,
    trial: usize,
) -> u64 {
    let objective_word = match objective {
        Objective::Rmse => 1,
        Objective::Correlation => 2,
    };
    seed::mix(&[master, seed::text(problem_id), objective_word, n_points as u64, noise.to_bits(), trial as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub problem_id: String,
    pub objective: Objective,
    pub n_points: usize,
    pub noise_fraction: f64,
    pub median_test_rmse: f64,
    pub median_test_r2: f64,
    pub trial_count: usize,
    pub perfect_count: usize,
}

/// Lower-middle median (element `(n - 1) / 2` after sorting). `NaN` for empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[(sorted.len() - 1) / 2]
}

/// Groups trials by cell and summarises each; output sorted by
/// (problem, objective, n_points, noise).
pub fn summarize(results: &[TrialResult], perfect_threshold: f64) -> Vec<SweepSummary> {
    let mut cells: BTreeMap<(String, Objective, usize, u64), Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        cells.entry((r.problem_id.clone(), r.objective, r.n_points, r.noise_fraction.to_bits())).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((problem_id, objective, n_points, noise_bits), trials)| {
            let rmses: Vec<f64> = trials.iter().map(|t| t.test_rmse).collect();
            let r2s: Vec<f64> = trials.iter().map(|t| t.test_r2).collect();
            SweepSummary {
                problem_id,
                objective,
                n_points,
                noise_fraction: f64::from_bits(noise_bits),
                median_test_rmse: median(&rmses),
                median_test_r2: median(&r2s),
                trial_count: trials.len(),
                perfect_count: rmses.iter().filter(|&&v| v < perfect_threshold).count(),
            }
        })
        .collect()
}

fn condition_key(objective: Objective, n_points: usize, noise: f64) -> String {
    format!("{objective}/n={n_points}/noise={noise}")
}

/// Nested `problem -> condition -> {median_rmse, median_r2, perfect_count, trial_count}`.
pub fn summary_json(summaries: &[SweepSummary]) -> serde_json::Value {
    let mut root: BTreeMap<&str, BTreeMap<String, serde_json::Value>> = BTreeMap::new();
    for s in summaries {
        root.entry(&s.problem_id).or_default().insert(
            condition_key(s.objective, s.n_points, s.noise_fraction),
            serde_json::json!({
                "median_rmse": finite_or_string(s.median_test_rmse),
                "median_r2": finite_or_string(s.median_test_r2),
                "perfect_count": s.perfect_count,
                "trial_count": s.trial_count,
            }),
        );
    }
    serde_json::to_value(root).expect("summary serialises")
}

fn finite_or_string(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::json!(v.to_string())
    }
}

/// Table-2 style counts for one (n_points, noise) condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n_points: usize,
    pub noise_fraction: f64,
    pub problems: usize,
    pub better: usize,
    pub tied: usize,
    pub perfectly_solved: usize,
    pub perfect_where_rmse_failed: usize,
}

/// Compares correlation against RMSE medians problem by problem.
pub fn summarize_comparison(
    summaries: &[SweepSummary],
    perfect_threshold: f64,
    tie_epsilon: f64,
) -> Result<Vec<ComparisonRow>, ExperimentError> {
    type Pair = (Option<f64>, Option<f64>);
    let mut by_condition: BTreeMap<(usize, u64), BTreeMap<&str, Pair>> = BTreeMap::new();
    for s in summaries {
        let slot = by_condition
            .entry((s.n_points, s.noise_fraction.to_bits()))
            .or_default()
            .entry(s.problem_id.as_str())
            .or_default();
        match s.objective {
            Objective::Correlation => slot.0 = Some(s.median_test_rmse),
            Objective::Rmse => slot.1 = Some(s.median_test_rmse),
        }
    }
    let mut rows = Vec::with_capacity(by_condition.len());
    for ((n_points, noise_bits), problems) in by_condition {
        let noise = f64::from_bits(noise_bits);
        let mut row = ComparisonRow {
            n_points,
            noise_fraction: noise,
            problems: problems.len(),
            better: 0,
            tied: 0,
            perfectly_solved: 0,
            perfect_where_rmse_failed: 0,
        };
        for (problem, pair) in problems {
            let missing = |missing| ExperimentError::MissingCounterpart {
                problem: problem.to_string(),
                n_points,
                noise,
                missing,
            };
            let corr = pair.0.ok_or_else(|| missing(Objective::Correlation))?;
            let rmse = pair.1.ok_or_else(|| missing(Objective::Rmse))?;
            if (corr - rmse).abs() <= tie_epsilon || corr == rmse {
                row.tied += 1;
            } else if corr < rmse {
                row.better += 1;
            }
            if corr < perfect_threshold {
                row.perfectly_solved += 1;
                if rmse >= perfect_threshold {
                    row.perfect_where_rmse_failed += 1;
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One line of the constant-sensitivity table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantRow {
    pub constant: f64,
    pub n_points: usize,
    pub noise_fraction: f64,
    pub rmse_median: f64,
    pub correlation_median: f64,
}

/// CSV with header `Constant,Points,Noise%,RMSE,Correlation`.
pub fn constant_table_csv(rows: &[ConstantRow]) -> String {
    let mut out = String::from("Constant,Points,Noise%,RMSE,Correlation\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.constant,
            r.n_points,
            r.noise_fraction * 100.0,
            r.rmse_median,
            r.correlation_median
        ));
    }
    out
}

/// Reads every trial row from a results CSV.
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<TrialResult>, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows = reader.deserialize().collect::<Result<Vec<TrialResult>, _>>()?;
    Ok(rows)
}

struct ResultStore {
    completed: HashMap<TrialKey, TrialResult>,
    file: Option<File>,
}

impl ResultStore {
    fn in_memory() -> Self {
        ResultStore { completed: HashMap::new(), file: None }
    }

    fn open(path: &Path) -> Result<Self, ExperimentError> {
        let mut completed = HashMap::new();
        let mut needs_header = true;
        if path.exists() {
            let mut text = std::fs::read_to_string(path)?;
            if !text.is_empty() && !text.ends_with('\n') {
                // drop a row cut short by an interrupted write
                let keep = text.rfind('\n').map_or(0, |i| i + 1);
                text.truncate(keep);
                std::fs::write(path, &text)?;
            }
            if !text.is_empty() {
                needs_header = false;
                let mut reader = csv::Reader::from_reader(text.as_bytes());
                for row in reader.deserialize::<TrialResult>() {
                    let row = row?;
                    completed.insert(row.key(), row);
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if needs_header {
            writeln!(file, "{RESULTS_HEADER}")?;
        }
        Ok(ResultStore { completed, file: Some(file) })
    }

    fn append(&mut self, result: TrialResult) -> Result<(), ExperimentError> {
        if let Some(file) = self.file.as_mut() {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.serialize(&result)?;
            let bytes = w.into_inner().map_err(|e| e.into_error())?;
            file.write_all(&bytes)?;
            file.flush()?;
        }
        self.completed.insert(result.key(), result);
        Ok(())
    }
}

/// Holds the experiment configuration and the result sink.
pub struct Experiment {
    config: ExperimentConfig,
    store: Mutex<ResultStore>,
    output: Option<PathBuf>,
}

struct Pending {
    next: usize,
    ready: BTreeMap<usize, TrialResult>,
    error: Option<ExperimentError>,
}

impl Experiment {
    /// Experiment whose results are kept in memory only.
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.evolution.validate()?;
        Ok(Experiment { config, store: Mutex::new(ResultStore::in_memory()), output: None })
    }

    /// Experiment that appends to (and resumes from) a results CSV.
    pub fn with_output(config: ExperimentConfig, path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        config.evolution.validate()?;
        let path = path.as_ref().to_path_buf();
        let store = ResultStore::open(&path)?;
        Ok(Experiment { config, store: Mutex::new(store), output: Some(path) })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn output(&self) -> Option<&Path> {
        self.output.as_deref()
    }

    fn run_trial(
        &self,
        problem: &BenchmarkProblem,
        objective: Objective,
        n_points: usize,
        noise: f64,
        trial_index: usize,
        test: &Dataset,
    ) -> Result<TrialResult, ExperimentError> {
        let started = Instant::now();
        let seed = trial_seed(self.config.master_seed, &problem.id, objective, n_points, noise, trial_index);
        let mut result = TrialResult {
            problem_id: problem.id.clone(),
            objective,
            n_points,
            noise_fraction: noise,
            trial_index,
            seed,
            train_fitness: f64::INFINITY,
            test_rmse: f64::INFINITY,
            test_r2: f64::NEG_INFINITY,
            generations: 0,
            wall_seconds: 0.0,
            best_program: String::new(),
        };
        // A trial whose data cannot be generated is recorded as failed.
        if let Ok(train) = sample_dataset_seeded(problem, n_points, noise, seed) {
            let config = self.config.evolution.clone().with_seed(seed::mix(&[seed, 0xe70]));
            let run = run_evolution(&config, objective, &train)?;
            let score = test_score(&run.best.program, objective, &train, test);
            result.train_fitness = run.best.fitness.value;
            result.test_rmse = score.rmse;
            result.test_r2 = score.r2;
            result.generations = run.generations_completed;
            result.best_program = run.best.program.to_string();
        }
        let timed = self.config.record_timing || matches!(self.config.evolution.termination, Termination::WallClock(_));
        if timed {
            result.wall_seconds = started.elapsed().as_secs_f64();
        }
        Ok(result)
    }

    /// Runs (or recalls) `n_trials` independent trials of one cell.
    pub fn run_trials(
        &self,
        problem: &BenchmarkProblem,
        objective: Objective,
        n_points: usize,
        noise_fraction: f64,
        n_trials: usize,
    ) -> Result<Vec<TrialResult>, ExperimentError> {
        if n_trials == 0 {
            return Err(ExperimentError::ConfigInvalid("n_trials must be at least 1".into()));
        }
        if n_points == 0 {
            return Err(ExperimentError::ConfigInvalid("n_points must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&noise_fraction) {
            return Err(ExperimentError::ConfigInvalid(format!("noise {noise_fraction} outside [0, 1]")));
        }
        let key = |trial| TrialKey {
            problem: problem.id.clone(),
            objective,
            n_points,
            noise_bits: noise_fraction.to_bits(),
            trial,
        };
        let missing: Vec<usize> = {
            let store = self.store.lock().unwrap();
            (0..n_trials).filter(|&t| !store.completed.contains_key(&key(t))).collect()
        };
        if !missing.is_empty() {
            let test = test_dataset(problem)?;
            let pending = Mutex::new(Pending { next: 0, ready: BTreeMap::new(), error: None });
            missing.par_iter().enumerate().for_each(|(slot, &trial)| {
                let outcome = self.run_trial(problem, objective, n_points, noise_fraction, trial, &test);
                let mut p = pending.lock().unwrap();
                match outcome {
                    Ok(r) => {
                        p.ready.insert(slot, r);
                    }
                    Err(e) => {
                        p.error.get_or_insert(e);
                    }
                }
                if p.error.is_some() {
                    return;
                }
                // flush in canonical order
                let mut store = self.store.lock().unwrap();
                loop {
                    let next = p.next;
                    let Some(r) = p.ready.remove(&next) else { break };
                    if let Err(e) = store.append(r) {
                        p.error.get_or_insert(e);
                        break;
                    }
                    p.next += 1;
                }
            });
            if let Some(e) = pending.into_inner().unwrap().error {
                return Err(e);
            }
        }
        let store = self.store.lock().unwrap();
        Ok((0..n_trials).map(|t| store.completed[&key(t)].clone()).collect())
    }

    pub fn point_sweep(
        &self,
        problem: &BenchmarkProblem,
        objective: Objective,
        points_schedule: &[usize],
        noise_fraction: f64,
        n_trials: usize,
    ) -> Result<Vec<SweepSummary>, ExperimentError> {
        if points_schedule.is_empty() {
            return Err(ExperimentError::ConfigInvalid("point schedule is empty".into()));
        }
        if points_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::ConfigInvalid("point schedule must be strictly ascending".into()));
        }
        let mut out = Vec::with_capacity(points_schedule.len());
        for &n in points_schedule {
            let trials = self.run_trials(problem, objective, n, noise_fraction, n_trials)?;
            out.extend(summarize(&trials, self.config.perfect_threshold));
        }
        Ok(out)
    }

    pub fn noise_sweep(
        &self,
        problem: &BenchmarkProblem,
        objective: Objective,
        n_points: usize,
        noise_schedule: &[f64],
        n_trials: usize,
    ) -> Result<Vec<SweepSummary>, ExperimentError> {
        if noise_schedule.is_empty() {
            return Err(ExperimentError::ConfigInvalid("noise schedule is empty".into()));
        }
        let mut out = Vec::with_capacity(noise_schedule.len());
        for &noise in noise_schedule {
            let trials = self.run_trials(problem, objective, n_points, noise, n_trials)?;
            out.extend(summarize(&trials, self.config.perfect_threshold));
        }
        Ok(out)
    }

    /// Both objectives on `constant + base` for each constant and noise level.
    pub fn constant_sensitivity(
        &self,
        base: &BenchmarkProblem,
        constants: &[f64],
        n_points: usize,
        noise_levels: &[f64],
        n_trials: usize,
    ) -> Result<Vec<ConstantRow>, ExperimentError> {
        if constants.is_empty() {
            return Err(ExperimentError::ConfigInvalid("no constants given".into()));
        }
        if noise_levels.is_empty() {
            return Err(ExperimentError::ConfigInvalid("no noise levels given".into()));
        }
        let mut rows = Vec::with_capacity(constants.len() * noise_levels.len());
        for &constant in constants {
            let problem = modified_problem(base, constant);
            for &noise in noise_levels {
                let mut medians = [0.0; 2];
                for (slot, objective) in Objective::BOTH.into_iter().enumerate() {
                    let trials = self.run_trials(&problem, objective, n_points, noise, n_trials)?;
                    let rmses: Vec<f64> = trials.iter().map(|t| t.test_rmse).collect();
                    medians[slot] = median(&rmses);
                }
                rows.push(ConstantRow {
                    constant,
                    n_points,
                    noise_fraction: noise,
                    rmse_median: medians[0],
                    correlation_median: medians[1],
                });
            }
        }
        Ok(rows)
    }
}
