//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::benchmarks::{load_registry, Registry};
use crate::data::{sample_dataset_seeded, test_dataset};
use crate::evolution::{EvolutionConfig, Termination};
use crate::experiments::{
    coarse_point_schedule, constant_table_csv, fine_point_schedule, read_results, summarize, summarize_comparison,
    summary_json, Experiment, ExperimentConfig, SweepSummary, PERFECT_THRESHOLD, TIE_EPSILON,
};
use crate::fitness::{fit_alignment, score_with_alignment, Alignment, Objective};
use crate::program::StackProgram;

pub const REGISTRY_ENV: &str = "CORR_SR_REGISTRY";

#[derive(Parser, Debug)]
#[command(name = "corr-sr", version, about = "GP symbolic regression with RMSE or correlation fitness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run repeated trials of one (problem, objective, points, noise) cell.
    Run {
        #[arg(long)]
        problem: String,
        #[arg(long, value_parser = parse_objective)]
        objective: Objective,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        evo: EvoArgs,
    },
    /// Sweep the number of training points.
    PointSweep {
        #[arg(long)]
        problem: String,
        #[arg(long, value_parser = parse_objective)]
        objective: Objective,
        /// `coarse` (3..193 by 20), `fine` (3..19 by 2) or a comma list.
        #[arg(long, default_value = "coarse")]
        schedule: String,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        evo: EvoArgs,
    },
    /// Sweep the noise fraction.
    NoiseSweep {
        #[arg(long)]
        problem: String,
        #[arg(long, value_parser = parse_objective)]
        objective: Objective,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value = "0,0.02,0.04,0.06,0.08,0.1,0.12,0.14,0.16,0.18,0.2")]
        noise_levels: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        evo: EvoArgs,
    },
    /// Add constants to a problem and compare both objectives.
    ConstSweep {
        #[arg(long, default_value = "feynman-I.12.1")]
        problem: String,
        #[arg(long, default_value = "1,5,50")]
        constants: String,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value = "0.1,0")]
        noise_levels: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        evo: EvoArgs,
    },
    /// Summarise a results CSV: per-cell medians and comparison counts.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also write the nested JSON summary here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = PERFECT_THRESHOLD)]
        perfect_threshold: f64,
        #[arg(long, default_value_t = TIE_EPSILON)]
        tie_epsilon: f64,
    },
    /// Print the problem registry.
    ListProblems,
    /// Score a postfix program on a problem's test set, raw and aligned.
    EvalProgram {
        #[arg(long)]
        program: String,
        #[arg(long)]
        problem: String,
        /// Training points used to fit the alignment.
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug, Clone)]
struct EvoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "wall_seconds")]
    generations: Option<usize>,
    #[arg(long)]
    wall_seconds: Option<f64>,
    #[arg(long, default_value_t = 300)]
    population: usize,
    #[arg(long, default_value_t = 5)]
    tournament: usize,
    #[arg(long, default_value_t = 10)]
    elitism: usize,
    #[arg(long, default_value_t = 2)]
    subpops: usize,
    #[arg(long, default_value_t = 79)]
    mutation_rate: u32,
    #[arg(long, default_value_t = 11)]
    crossover_rate: u32,
    #[arg(long, default_value_t = 10)]
    spawn_rate: u32,
    #[arg(long, default_value_t = crate::program::DEFAULT_MAX_LENGTH)]
    max_length: usize,
    /// Worker threads for trials; defaults to available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Record measured wall time per trial (results are then not byte-stable).
    #[arg(long)]
    record_timing: bool,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn runtime(err: impl std::fmt::Display) -> Failure {
    Failure::Runtime(err.to_string())
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("error: invalid arguments");
            let _ = writeln!(err, "{line}");
            return 1;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn registry() -> Result<Registry, Failure> {
    match std::env::var_os(REGISTRY_ENV) {
        Some(path) => load_registry(&path).map_err(runtime),
        None => Ok(Registry::bundled()),
    }
}

fn problem<'r>(reg: &'r Registry, id: &str) -> Result<&'r crate::BenchmarkProblem, Failure> {
    reg.get(id).ok_or_else(|| usage(format!("--problem: unknown problem `{id}`")))
}

fn check_noise(flag: &str, noise: f64) -> Outcome {
    if (0.0..=1.0).contains(&noise) {
        Ok(())
    } else {
        Err(usage(format!("{flag}: noise {noise} outside [0, 1]")))
    }
}

fn check_positive(flag: &str, value: usize) -> Outcome {
    if value >= 1 {
        Ok(())
    } else {
        Err(usage(format!("{flag}: must be at least 1")))
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>, Failure> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| usage(format!("{flag}: cannot parse `{}`", s.trim()))))
        .collect::<Result<Vec<T>, _>>()?;
    if values.is_empty() {
        return Err(usage(format!("{flag}: empty list")));
    }
    Ok(values)
}

impl EvoArgs {
    fn experiment_config(&self) -> Result<ExperimentConfig, Failure> {
        let termination = match (self.generations, self.wall_seconds) {
            (_, Some(w)) if !(w.is_finite() && w > 0.0) => {
                return Err(usage("--wall-seconds: must be positive"));
            }
            (_, Some(w)) => Termination::WallClock(Duration::from_secs_f64(w)),
            (Some(g), None) => Termination::Generations(g),
            (None, None) => Termination::Generations(200),
        };
        let evolution = EvolutionConfig {
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            spawn_rate: self.spawn_rate,
            elitism_count: self.elitism,
            tournament_size: self.tournament,
            population_size: self.population,
            sub_populations: self.subpops,
            termination,
            rng_seed: self.seed,
            max_length: self.max_length,
        };
        evolution.validate().map_err(|e| usage(e.to_string()))?;
        if let Some(k) = self.workers {
            check_positive("--workers", k)?;
            // Only the first call in a process can size the global pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
        Ok(ExperimentConfig {
            evolution,
            master_seed: self.seed,
            record_timing: self.record_timing,
            ..ExperimentConfig::default()
        })
    }

    fn experiment(&self, out: &Option<PathBuf>) -> Result<Experiment, Failure> {
        let config = self.experiment_config()?;
        match out {
            Some(path) => Experiment::with_output(config, path).map_err(runtime),
            None => Experiment::new(config).map_err(runtime),
        }
    }
}

fn write_summaries(out: &mut dyn Write, summaries: &[SweepSummary]) -> Outcome {
    writeln!(out, "problem,objective,n_points,noise,median_test_rmse,median_test_r2,trial_count,perfect_count")
        .map_err(runtime)?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.problem_id,
            s.objective,
            s.n_points,
            s.noise_fraction,
            s.median_test_rmse,
            s.median_test_r2,
            s.trial_count,
            s.perfect_count
        )
        .map_err(runtime)?;
    }
    Ok(())
}

fn execute(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Run { problem: id, objective, points, noise, trials, out: path, evo } => {
            check_positive("--points", points)?;
            check_positive("--trials", trials)?;
            check_noise("--noise", noise)?;
            let reg = registry()?;
            let p = problem(&reg, &id)?;
            let exp = evo.experiment(&path)?;
            let results = exp.run_trials(p, objective, points, noise, trials).map_err(runtime)?;
            writeln!(out, "trial,test_rmse,test_r2,train_fitness,best_program").map_err(runtime)?;
            for r in &results {
                writeln!(out, "{},{},{},{},{}", r.trial_index, r.test_rmse, r.test_r2, r.train_fitness, r.best_program)
                    .map_err(runtime)?;
            }
            let s = summarize(&results, exp.config().perfect_threshold);
            writeln!(
                out,
                "median test_rmse {} | median test_r2 {} | perfect {}/{}",
                s[0].median_test_rmse, s[0].median_test_r2, s[0].perfect_count, s[0].trial_count
            )
            .map_err(runtime)
        }
        Command::PointSweep { problem: id, objective, schedule, noise, trials, out: path, evo } => {
            check_trials_and_noise(trials, "--noise", &[noise])?;
            let schedule: Vec<usize> = match schedule.as_str() {
                "coarse" => coarse_point_schedule(),
                "fine" => fine_point_schedule(),
                list => parse_list("--schedule", list)?,
            };
            if schedule.contains(&0) || schedule.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("--schedule: point counts must be positive and strictly ascending"));
            }
            let reg = registry()?;
            let p = problem(&reg, &id)?;
            let exp = evo.experiment(&path)?;
            let summaries = exp.point_sweep(p, objective, &schedule, noise, trials).map_err(runtime)?;
            write_summaries(out, &summaries)
        }
        Command::NoiseSweep { problem: id, objective, points, noise_levels, trials, out: path, evo } => {
            check_positive("--points", points)?;
            let levels: Vec<f64> = parse_list("--noise-levels", &noise_levels)?;
            check_trials_and_noise(trials, "--noise-levels", &levels)?;
            let reg = registry()?;
            let p = problem(&reg, &id)?;
            let exp = evo.experiment(&path)?;
            let summaries = exp.noise_sweep(p, objective, points, &levels, trials).map_err(runtime)?;
            write_summaries(out, &summaries)
        }
        Command::ConstSweep { problem: id, constants, points, noise_levels, trials, out: path, evo } => {
            check_positive("--points", points)?;
            let constants: Vec<f64> = parse_list("--constants", &constants)?;
            let levels: Vec<f64> = parse_list("--noise-levels", &noise_levels)?;
            check_trials_and_noise(trials, "--noise-levels", &levels)?;
            let reg = registry()?;
            let p = problem(&reg, &id)?;
            let exp = evo.experiment(&path)?;
            let rows = exp.constant_sensitivity(p, &constants, points, &levels, trials).map_err(runtime)?;
            write!(out, "{}", constant_table_csv(&rows)).map_err(runtime)
        }
        Command::Summarize { input, json, perfect_threshold, tie_epsilon } => {
            let results = read_results(&input).map_err(runtime)?;
            let summaries = summarize(&results, perfect_threshold);
            write_summaries(out, &summaries)?;
            // Comparison counts only make sense when both objectives are present.
            match summarize_comparison(&summaries, perfect_threshold, tie_epsilon) {
                Ok(rows) => {
                    writeln!(out, "n_points,noise,problems,better,tied,perfectly_solved,perfect_where_rmse_failed")
                        .map_err(runtime)?;
                    for r in rows {
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{}",
                            r.n_points,
                            r.noise_fraction,
                            r.problems,
                            r.better,
                            r.tied,
                            r.perfectly_solved,
                            r.perfect_where_rmse_failed
                        )
                        .map_err(runtime)?;
                    }
                }
                Err(e) => writeln!(out, "# comparison skipped: {e}").map_err(runtime)?,
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&summary_json(&summaries)).map_err(runtime)?;
                std::fs::write(path, text + "\n").map_err(runtime)?;
            }
            Ok(())
        }
        Command::ListProblems => {
            let reg = registry()?;
            for p in reg.iter() {
                let vars: Vec<String> = p.variables.iter().map(|v| format!("{}:[{},{}]", v.name, v.lo, v.hi)).collect();
                writeln!(out, "{}\t{}\t{}\t{}", p.id, p.dimensionality(), vars.join(" "), p.expression)
                    .map_err(runtime)?;
            }
            Ok(())
        }
        Command::EvalProgram { program, problem: id, points, noise, seed } => {
            check_positive("--points", points)?;
            check_noise("--noise", noise)?;
            let model: StackProgram = program.parse().map_err(|e| usage(format!("--program: {e}")))?;
            let reg = registry()?;
            let p = problem(&reg, &id)?;
            if model.max_var_index().is_some_and(|i| i >= p.dimensionality()) {
                return Err(usage(format!("--program: reads a variable beyond the {} of `{id}`", p.dimensionality())));
            }
            let test = test_dataset(p).map_err(runtime)?;
            let train = sample_dataset_seeded(p, points, noise, seed).map_err(runtime)?;
            let raw = score_with_alignment(&model, Alignment::IDENTITY, &test);
            writeln!(out, "raw test_rmse {} r2 {}", raw.rmse, raw.r2).map_err(runtime)?;
            match fit_alignment(&model, Objective::Correlation, &train) {
                Some(a) => {
                    let aligned = score_with_alignment(&model, a, &test);
                    writeln!(
                        out,
                        "aligned test_rmse {} r2 {} (slope {}, intercept {})",
                        aligned.rmse, aligned.r2, a.slope, a.intercept
                    )
                    .map_err(runtime)
                }
                None => {
                    writeln!(out, "aligned unavailable: model output has no variance on training data").map_err(runtime)
                }
            }
        }
    }
}

fn check_trials_and_noise(trials: usize, flag: &str, levels: &[f64]) -> Outcome {
    check_positive("--trials", trials)?;
    for &n in levels {
        check_noise(flag, n)?;
    }
    Ok(())
}
