//! Stack-based genetic programming for symbolic regression, comparing an RMSE
//! objective against a correlation (`1 - R^2`) objective followed by a linear
//! alignment step, plus the benchmark harness used to compare them.

pub mod benchmarks;
pub mod cli;
pub mod data;
pub mod equation;
pub mod evolution;
pub mod experiments;
pub mod fitness;
pub mod program;
pub mod seed;

pub use benchmarks::{load_registry, modified_problem, BenchmarkProblem, Registry};
pub use data::{sample_dataset, test_dataset, Dataset};
pub use equation::{eval_tree, parse, ExprNode};
pub use evolution::{run_evolution, EvolutionConfig, Individual, RunResult, Termination};
pub use experiments::{Experiment, ExperimentConfig, SweepSummary, TrialResult};
pub use fitness::{align, correlation_fitness, pearson_r, rmse, Alignment, FitnessValue, Objective};
pub use program::{EvalFailure, Instruction, Opcode, StackProgram};
