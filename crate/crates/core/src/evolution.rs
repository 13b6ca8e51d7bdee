//! Generational GP search over stack programs.
//!
//! Each generation keeps the `elitism_count` best individuals unchanged and
//! fills the rest with offspring made by mutation, two-point crossover or
//! fresh spawning, parents chosen by tournament. Independent sub-populations
//! run in parallel and are only merged when they finish.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::fitness::{fit_alignment, Alignment, FitnessValue, Objective};
use crate::program::{Instruction, Opcode, StackProgram, DEFAULT_MAX_LENGTH};
use crate::seed;

pub const CONSTANT_RANGE: (f64, f64) = (-10.0, 10.0);
pub const SPAWN_LENGTH: (usize, usize) = (3, 16);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid evolution config: {0}")]
    ConfigInvalid(String),
    #[error("population is empty")]
    EmptyPopulation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Generations(usize),
    WallClock(Duration),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Offspring percentages; must sum to 100.
    pub mutation_rate: u32,
    pub crossover_rate: u32,
    pub spawn_rate: u32,
    /// Individuals copied unchanged into each generation.
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub population_size: usize,
    pub sub_populations: usize,
    pub termination: Termination,
    pub rng_seed: u64,
    pub max_length: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            mutation_rate: 79,
            crossover_rate: 11,
            spawn_rate: 10,
            elitism_count: 10,
            tournament_size: 5,
            population_size: 300,
            sub_populations: 2,
            termination: Termination::Generations(200),
            rng_seed: 0,
            max_length: DEFAULT_MAX_LENGTH,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: String| Err(EvolutionError::ConfigInvalid(m));
        let total = self.mutation_rate + self.crossover_rate + self.spawn_rate;
        if total != 100 {
            return bad(format!("mutation + crossover + spawn rates sum to {total}, expected 100"));
        }
        if self.population_size <= self.elitism_count {
            return bad(format!(
                "population_size {} must exceed elitism_count {}",
                self.population_size, self.elitism_count
            ));
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be at least 1".into());
        }
        if self.sub_populations == 0 {
            return bad("sub_populations must be at least 1".into());
        }
        if self.max_length < SPAWN_LENGTH.1 {
            return bad(format!("max_length must be at least {}", SPAWN_LENGTH.1));
        }
        Ok(())
    }

    pub fn with_generations(mut self, generations: usize) -> Self {
        self.termination = Termination::Generations(generations);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub program: StackProgram,
    pub fitness: FitnessValue,
    pub birth_generation: usize,
}

impl Individual {
    pub fn evaluate(program: StackProgram, objective: Objective, train: &Dataset, birth_generation: usize) -> Self {
        let fitness = evaluate_fitness(&program, objective, train);
        Individual { program, fitness, birth_generation }
    }
}

pub fn evaluate_fitness(program: &StackProgram, objective: Objective, train: &Dataset) -> FitnessValue {
    match program.evaluate_batch(train) {
        Ok(predictions) => objective.score(train.targets(), &predictions),
        Err(_) => FitnessValue::worst(objective),
    }
}

/// Sort order for populations: fitness, then shorter program.
fn rank(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    a.fitness.cmp_value(&b.fitness).then(a.program.len().cmp(&b.program.len()))
}

fn sort_population(population: &mut [Individual]) {
    population.sort_by(rank);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OffspringOperator {
    Mutation,
    Crossover,
    Spawn,
}

/// Draws an offspring operator with the configured percentages.
pub fn choose_operator<R: Rng + ?Sized>(config: &EvolutionConfig, rng: &mut R) -> OffspringOperator {
    let roll = rng.random_range(0..100u32);
    if roll < config.mutation_rate {
        OffspringOperator::Mutation
    } else if roll < config.mutation_rate + config.crossover_rate {
        OffspringOperator::Crossover
    } else {
        OffspringOperator::Spawn
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorCounts {
    pub mutation: usize,
    pub crossover: usize,
    pub spawn: usize,
}

impl OperatorCounts {
    fn record(&mut self, op: OffspringOperator) {
        match op {
            OffspringOperator::Mutation => self.mutation += 1,
            OffspringOperator::Crossover => self.crossover += 1,
            OffspringOperator::Spawn => self.spawn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.mutation + self.crossover + self.spawn
    }

    fn add(&mut self, other: &OperatorCounts) {
        self.mutation += other.mutation;
        self.crossover += other.crossover;
        self.spawn += other.spawn;
    }
}

/// Best of `size` uniform draws with replacement; first drawn wins ties.
pub fn tournament_select<'a, R: Rng + ?Sized>(
    population: &'a [Individual],
    size: usize,
    rng: &mut R,
) -> Result<&'a Individual, EvolutionError> {
    if population.is_empty() {
        return Err(EvolutionError::EmptyPopulation);
    }
    let mut best = &population[rng.random_range(0..population.len())];
    for _ in 1..size {
        let challenger = &population[rng.random_range(0..population.len())];
        if challenger.fitness.cmp_value(&best.fitness).is_lt() {
            best = challenger;
        }
    }
    Ok(best)
}

/// `a[..i] ++ b[k..l] ++ a[j..]`, truncated to `max_length`. An empty splice
/// result falls back to a copy of `a`.
pub fn crossover_with_cuts(
    a: &StackProgram,
    b: &StackProgram,
    (i, j): (usize, usize),
    (k, l): (usize, usize),
    max_length: usize,
) -> StackProgram {
    let (a, b) = (a.instructions(), b.instructions());
    assert!(i <= j && j <= a.len() && k <= l && l <= b.len(), "cut points out of range");
    let mut child: Vec<Instruction> = Vec::with_capacity(i + (l - k) + (a.len() - j));
    child.extend_from_slice(&a[..i]);
    child.extend_from_slice(&b[k..l]);
    child.extend_from_slice(&a[j..]);
    child.truncate(max_length);
    if child.is_empty() {
        child.extend_from_slice(&a[..a.len().min(max_length)]);
    }
    StackProgram::from_vec_unchecked(child)
}

fn ordered_cuts<R: Rng + ?Sized>(len: usize, rng: &mut R) -> (usize, usize) {
    let x = rng.random_range(0..=len);
    let y = rng.random_range(0..=len);
    (x.min(y), x.max(y))
}

/// Two-point crossover producing a single child.
pub fn crossover_two_point<R: Rng + ?Sized>(
    a: &StackProgram,
    b: &StackProgram,
    max_length: usize,
    rng: &mut R,
) -> StackProgram {
    let cut_a = ordered_cuts(a.len(), rng);
    let cut_b = ordered_cuts(b.len(), rng);
    crossover_with_cuts(a, b, cut_a, cut_b, max_length)
}

fn random_constant<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(CONSTANT_RANGE.0..=CONSTANT_RANGE.1)
}

fn random_terminal<R: Rng + ?Sized>(dimensionality: usize, rng: &mut R) -> Instruction {
    if rng.random_bool(2.0 / 3.0) {
        Instruction::PushVar(rng.random_range(0..dimensionality))
    } else {
        Instruction::PushConst(random_constant(rng))
    }
}

fn random_opcode_of_arity<R: Rng + ?Sized>(arity: usize, rng: &mut R) -> Opcode {
    if arity == 2 {
        Opcode::BINARY[rng.random_range(0..Opcode::BINARY.len())]
    } else {
        Opcode::UNARY[rng.random_range(0..Opcode::UNARY.len())]
    }
}

fn random_instruction<R: Rng + ?Sized>(dimensionality: usize, rng: &mut R) -> Instruction {
    if rng.random_bool(0.5) {
        random_terminal(dimensionality, rng)
    } else {
        Instruction::Op(Opcode::ALL[rng.random_range(0..Opcode::ALL.len())])
    }
}

/// Replacement with the same stack effect, so program structure is kept.
fn compatible_instruction<R: Rng + ?Sized>(current: &Instruction, dimensionality: usize, rng: &mut R) -> Instruction {
    match current {
        Instruction::Op(op) => Instruction::Op(random_opcode_of_arity(op.arity(), rng)),
        _ => random_terminal(dimensionality, rng),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    Replace,
    Insert,
    Delete,
    PerturbConstant,
}

impl MutationKind {
    pub const ALL: [MutationKind; 4] =
        [MutationKind::Replace, MutationKind::Insert, MutationKind::Delete, MutationKind::PerturbConstant];
}

/// Applies one uniformly chosen mutation.
pub fn mutate<R: Rng + ?Sized>(
    program: &StackProgram,
    dimensionality: usize,
    max_length: usize,
    rng: &mut R,
) -> StackProgram {
    let kind = MutationKind::ALL[rng.random_range(0..MutationKind::ALL.len())];
    mutate_with(program, kind, dimensionality, max_length, rng)
}

/// Applies mutation `kind`, falling back to `Replace` when it cannot apply
/// (delete on a single instruction, insert at the length limit, perturb
/// without constants).
pub fn mutate_with<R: Rng + ?Sized>(
    program: &StackProgram,
    kind: MutationKind,
    dimensionality: usize,
    max_length: usize,
    rng: &mut R,
) -> StackProgram {
    let mut code = program.instructions().to_vec();
    let constants: Vec<usize> =
        code.iter().enumerate().filter(|(_, ins)| matches!(ins, Instruction::PushConst(_))).map(|(i, _)| i).collect();
    let kind = match kind {
        MutationKind::Delete if code.len() <= 1 => MutationKind::Replace,
        MutationKind::Insert if code.len() >= max_length => MutationKind::Replace,
        MutationKind::PerturbConstant if constants.is_empty() => MutationKind::Replace,
        k => k,
    };
    match kind {
        MutationKind::Replace => {
            let at = rng.random_range(0..code.len());
            code[at] = compatible_instruction(&code[at], dimensionality, rng);
        }
        MutationKind::Insert => {
            let at = rng.random_range(0..=code.len());
            code.insert(at, random_instruction(dimensionality, rng));
        }
        MutationKind::Delete => {
            code.remove(rng.random_range(0..code.len()));
        }
        MutationKind::PerturbConstant => {
            let at = constants[rng.random_range(0..constants.len())];
            if let Instruction::PushConst(value) = code[at] {
                let noise = Normal::new(0.0, 0.1 * value.abs() + 0.1).expect("finite std dev");
                let perturbed = value + noise.sample(rng);
                code[at] = Instruction::PushConst(if perturbed.is_finite() { perturbed } else { value });
            }
        }
    }
    code.truncate(max_length);
    StackProgram::from_vec_unchecked(code)
}

/// Fresh random program whose final stack is never empty.
pub fn spawn<R: Rng + ?Sized>(dimensionality: usize, rng: &mut R) -> StackProgram {
    let length = rng.random_range(SPAWN_LENGTH.0..=SPAWN_LENGTH.1);
    spawn_with_length(dimensionality, length, rng)
}

pub fn spawn_with_length<R: Rng + ?Sized>(dimensionality: usize, length: usize, rng: &mut R) -> StackProgram {
    assert!(dimensionality >= 1 && length >= 1);
    let mut code = Vec::with_capacity(length);
    let mut depth = 0usize;
    for _ in 0..length {
        let ins = if depth == 0 || rng.random_bool(0.5) {
            random_terminal(dimensionality, rng)
        } else {
            let arity = if depth >= 2 && rng.random_bool(0.5) { 2 } else { 1 };
            Instruction::Op(random_opcode_of_arity(arity, rng))
        };
        depth = depth + 1 - ins.arity();
        code.push(ins);
    }
    StackProgram::from_vec_unchecked(code)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best: Individual,
    /// Sorted best first.
    pub final_population: Vec<Individual>,
    pub generations_completed: usize,
    /// Best objective value after each completed generation.
    pub best_fitness_history: Vec<f64>,
    pub subpopulation_histories: Vec<Vec<f64>>,
    /// Fitted on the training data when the objective is correlation.
    pub alignment: Option<Alignment>,
    pub operator_counts: OperatorCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub best_program: String,
    pub objective: Objective,
    pub fitness: f64,
    pub alignment: Option<Alignment>,
    pub generations: usize,
    pub history: Vec<f64>,
}

impl RunResult {
    pub fn record(&self) -> RunRecord {
        RunRecord {
            best_program: self.best.program.to_string(),
            objective: self.best.fitness.objective,
            fitness: self.best.fitness.value,
            alignment: self.alignment,
            generations: self.generations_completed,
            history: self.best_fitness_history.clone(),
        }
    }

    pub fn to_record_text(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("run record serialises")
    }
}

struct Budget {
    termination: Termination,
    started: Instant,
}

impl Budget {
    fn exhausted(&self, completed: usize) -> bool {
        match self.termination {
            Termination::Generations(n) => completed >= n,
            Termination::WallClock(limit) => self.started.elapsed() >= limit,
        }
    }
}

/// Evolves one isolated population.
pub fn evolve_subpopulation<R: Rng + ?Sized>(
    config: &EvolutionConfig,
    objective: Objective,
    train: &Dataset,
    rng: &mut R,
) -> Result<RunResult, EvolutionError> {
    config.validate()?;
    if train.is_empty() {
        return Err(EvolutionError::ConfigInvalid("training data is empty".into()));
    }
    let budget = Budget { termination: config.termination, started: Instant::now() };
    let dim = train.dimensionality();
    let mut population: Vec<Individual> =
        (0..config.population_size).map(|_| Individual::evaluate(spawn(dim, rng), objective, train, 0)).collect();
    sort_population(&mut population);

    let mut history = Vec::new();
    let mut counts = OperatorCounts::default();
    let mut generation = 0;
    while !budget.exhausted(generation) {
        generation += 1;
        let mut next: Vec<Individual> = population[..config.elitism_count].to_vec();
        while next.len() < config.population_size {
            let op = choose_operator(config, rng);
            counts.record(op);
            let child = match op {
                OffspringOperator::Mutation => {
                    let parent = tournament_select(&population, config.tournament_size, rng)?;
                    mutate(&parent.program, dim, config.max_length, rng)
                }
                OffspringOperator::Crossover => {
                    let a = tournament_select(&population, config.tournament_size, rng)?;
                    let b = tournament_select(&population, config.tournament_size, rng)?;
                    crossover_two_point(&a.program, &b.program, config.max_length, rng)
                }
                OffspringOperator::Spawn => spawn(dim, rng),
            };
            next.push(Individual::evaluate(child, objective, train, generation));
        }
        sort_population(&mut next);
        population = next;
        history.push(population[0].fitness.value);
    }

    Ok(RunResult {
        best: population[0].clone(),
        final_population: population,
        generations_completed: generation,
        best_fitness_history: history.clone(),
        subpopulation_histories: vec![history],
        alignment: None,
        operator_counts: counts,
    })
}

/// Runs `config.sub_populations` isolated searches and merges them.
pub fn run_evolution(
    config: &EvolutionConfig,
    objective: Objective,
    train: &Dataset,
) -> Result<RunResult, EvolutionError> {
    let seeds: Vec<u64> = (0..config.sub_populations).map(|i| seed::subpopulation(config.rng_seed, i)).collect();
    run_evolution_with_seeds(config, objective, train, &seeds)
}

/// As [`run_evolution`] with explicit per-sub-population seeds.
pub fn run_evolution_with_seeds(
    config: &EvolutionConfig,
    objective: Objective,
    train: &Dataset,
    seeds: &[u64],
) -> Result<RunResult, EvolutionError> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(EvolutionError::ConfigInvalid("no sub-population seeds".into()));
    }
    let runs: Vec<RunResult> = seeds
        .par_iter()
        .map(|&s| evolve_subpopulation(config, objective, train, &mut ChaCha8Rng::seed_from_u64(s)))
        .collect::<Result<_, _>>()?;

    let generations_completed = runs.iter().map(|r| r.generations_completed).max().unwrap_or(0);
    let subpopulation_histories: Vec<Vec<f64>> = runs.iter().map(|r| r.best_fitness_history.clone()).collect();
    let mut best_fitness_history = Vec::with_capacity(generations_completed);
    let mut running = f64::INFINITY;
    for g in 0..generations_completed {
        for h in &subpopulation_histories {
            if let Some(&v) = h.get(g) {
                running = running.min(v);
            }
        }
        best_fitness_history.push(running);
    }
    let mut operator_counts = OperatorCounts::default();
    let mut merged: Vec<Individual> = Vec::with_capacity(config.population_size * runs.len());
    for run in runs {
        operator_counts.add(&run.operator_counts);
        merged.extend(run.final_population);
    }
    sort_population(&mut merged);
    merged.truncate(config.population_size);
    let best = merged[0].clone();
    let alignment = match objective {
        Objective::Correlation => fit_alignment(&best.program, objective, train),
        Objective::Rmse => None,
    };
    Ok(RunResult {
        best,
        final_population: merged,
        generations_completed,
        best_fitness_history,
        subpopulation_histories,
        alignment,
        operator_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::Instruction::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn individual(text: &str, value: f64) -> Individual {
        Individual {
            program: text.parse().unwrap(),
            fitness: FitnessValue::new(Objective::Rmse, value),
            birth_generation: 0,
        }
    }

    #[test]
    fn default_config_matches_parameter_table() {
        let c = EvolutionConfig::default();
        assert_eq!((c.mutation_rate, c.crossover_rate, c.spawn_rate), (79, 11, 10));
        assert_eq!(c.elitism_count, 10);
        assert_eq!(c.tournament_size, 5);
        assert_eq!(c.population_size, 300);
        assert_eq!(c.sub_populations, 2);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn invalid_configs() {
        let base = EvolutionConfig::default();
        let cases = [
            EvolutionConfig { mutation_rate: 80, ..base.clone() },
            EvolutionConfig { population_size: 10, ..base.clone() },
            EvolutionConfig { tournament_size: 0, ..base.clone() },
            EvolutionConfig { sub_populations: 0, ..base.clone() },
            EvolutionConfig { max_length: 4, ..base.clone() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(EvolutionError::ConfigInvalid(_))));
        }
    }

    #[test]
    fn tournament_edge_cases() {
        let mut r = rng(1);
        assert_eq!(tournament_select(&[], 5, &mut r), Err(EvolutionError::EmptyPopulation));
        let one = [individual("x0", 3.0)];
        assert_eq!(tournament_select(&one, 5, &mut r).unwrap(), &one[0]);
    }

    #[test]
    fn tournament_ties_go_to_first_draw() {
        let pop: Vec<Individual> = (0..4).map(|i| individual(&format!("{i}"), 1.0)).collect();
        let mut hits = [0usize; 4];
        let mut r = rng(2);
        for _ in 0..40_000 {
            let w = tournament_select(&pop, 5, &mut r).unwrap();
            let idx = pop.iter().position(|p| std::ptr::eq(p, w)).unwrap();
            hits[idx] += 1;
        }
        for h in hits {
            assert!((h as f64 / 40_000.0 - 0.25).abs() < 0.02, "{hits:?}");
        }
    }

    #[test]
    fn crossover_with_empty_swap_keeps_parent() {
        let a: StackProgram = "x0 x1 + 2 *".parse().unwrap();
        let b: StackProgram = "x1 sin".parse().unwrap();
        for i in 0..=a.len() {
            let child = crossover_with_cuts(&a, &b, (i, i), (1, 1), 64);
            assert_eq!(child, a);
        }
        let child = crossover_with_cuts(&a, &b, (1, 3), (0, 2), 64);
        assert_eq!(child.to_string(), "x0 x1 sin 2 *");
    }

    #[test]
    fn crossover_never_empty_or_too_long() {
        let a: StackProgram = "x0".parse().unwrap();
        let b: StackProgram = "x1 x1 *".parse().unwrap();
        assert_eq!(crossover_with_cuts(&a, &b, (0, 1), (1, 1), 64), a);
        let long = StackProgram::new(vec![PushVar(0); 60]).unwrap();
        assert_eq!(crossover_with_cuts(&long, &long, (60, 60), (0, 60), 64).len(), 64);
    }

    #[test]
    fn crossover_of_identical_parents_reuses_tokens() {
        let a: StackProgram = "x0 3 * x1 sqrt +".parse().unwrap();
        let mut r = rng(3);
        for _ in 0..200 {
            let child = crossover_two_point(&a, &a, 64, &mut r);
            assert!(child.instructions().iter().all(|ins| a.instructions().contains(ins)));
        }
    }

    #[test]
    fn delete_on_single_instruction_falls_back_to_replace() {
        let p: StackProgram = "x0".parse().unwrap();
        let mut r = rng(4);
        for _ in 0..50 {
            let m = mutate_with(&p, MutationKind::Delete, 3, 64, &mut r);
            assert_eq!(m.len(), 1);
            assert_eq!(m.instructions()[0].arity(), 0);
        }
    }

    #[test]
    fn perturb_changes_only_the_constant() {
        let p: StackProgram = "2.5".parse().unwrap();
        let mut r = rng(5);
        let m = mutate_with(&p, MutationKind::PerturbConstant, 1, 64, &mut r);
        assert_eq!(m.len(), 1);
        match m.instructions()[0] {
            PushConst(v) => assert_ne!(v, 2.5),
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replace_keeps_stack_effect() {
        let p: StackProgram = "x0 x1 + sin 3 *".parse().unwrap();
        let mut r = rng(6);
        for _ in 0..200 {
            let m = mutate_with(&p, MutationKind::Replace, 2, 64, &mut r);
            assert_eq!(m.len(), p.len());
            for (a, b) in m.instructions().iter().zip(p.instructions()) {
                assert_eq!(a.arity(), b.arity());
            }
        }
    }

    #[test]
    fn insert_at_limit_keeps_length() {
        let p = StackProgram::new(vec![PushVar(0); 64]).unwrap();
        let mut r = rng(7);
        assert_eq!(mutate_with(&p, MutationKind::Insert, 1, 64, &mut r).len(), 64);
    }

    #[test]
    fn spawn_is_deterministic_and_in_bounds() {
        let a = spawn(1, &mut rng(9));
        let b = spawn(1, &mut rng(9));
        assert_eq!(a, b);
        let mut r = rng(10);
        for _ in 0..1000 {
            let p = spawn(1, &mut r);
            assert!(p.max_var_index().unwrap_or(0) == 0);
            assert!((SPAWN_LENGTH.0..=SPAWN_LENGTH.1).contains(&p.len()));
        }
    }

    #[test]
    fn operator_draws_follow_rates() {
        let config = EvolutionConfig::default();
        let mut r = rng(11);
        let mut counts = OperatorCounts::default();
        for _ in 0..100_000 {
            counts.record(choose_operator(&config, &mut r));
        }
        assert!((counts.mutation as f64 / 1e5 - 0.79).abs() < 0.01);
        assert!((counts.crossover as f64 / 1e5 - 0.11).abs() < 0.01);
        assert!((counts.spawn as f64 / 1e5 - 0.10).abs() < 0.01);
    }
}
