//! Postfix stack programs: the genotype evolved by the search.
//!
//! A program is a flat sequence of instructions run left to right against an
//! operand stack. Every opcode has total semantics, so evaluation only fails
//! when nothing is left on the stack or the final value is not finite.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::data::Dataset;

pub const DEFAULT_MAX_LENGTH: usize = 64;

/// Magnitude below which a denominator or log argument counts as zero.
pub const PROTECTION_EPSILON: f64 = 1e-12;
/// Exponent clamp applied before `exp`.
pub const EXP_CLAMP: f64 = 300.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sqrt,
    Square,
    Exp,
    Log,
    Sin,
    Cos,
    Pow,
}

impl Opcode {
    pub const ALL: [Opcode; 12] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Neg,
        Opcode::Sqrt,
        Opcode::Square,
        Opcode::Exp,
        Opcode::Log,
        Opcode::Sin,
        Opcode::Cos,
        Opcode::Pow,
    ];

    pub const UNARY: [Opcode; 7] =
        [Opcode::Neg, Opcode::Sqrt, Opcode::Square, Opcode::Exp, Opcode::Log, Opcode::Sin, Opcode::Cos];

    pub const BINARY: [Opcode; 5] = [Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::Div, Opcode::Pow];

    pub fn arity(self) -> usize {
        match self {
            Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::Div | Opcode::Pow => 2,
            _ => 1,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Opcode::Add => "+",
            Opcode::Sub => "-",
            Opcode::Mul => "*",
            Opcode::Div => "/",
            Opcode::Neg => "neg",
            Opcode::Sqrt => "sqrt",
            Opcode::Square => "square",
            Opcode::Exp => "exp",
            Opcode::Log => "log",
            Opcode::Sin => "sin",
            Opcode::Cos => "cos",
            Opcode::Pow => "pow",
        }
    }

    fn from_token(token: &str) -> Option<Opcode> {
        Opcode::ALL.into_iter().find(|op| op.token() == token)
    }

    /// Protected unary semantics. Panics if called on a binary opcode.
    #[inline]
    pub fn apply_unary(self, x: f64) -> f64 {
        match self {
            Opcode::Neg => -x,
            Opcode::Sqrt => x.abs().sqrt(),
            Opcode::Square => x * x,
            Opcode::Exp => x.clamp(-EXP_CLAMP, EXP_CLAMP).exp(),
            Opcode::Log => {
                let magnitude = x.abs();
                if magnitude < PROTECTION_EPSILON {
                    0.0
                } else {
                    magnitude.ln()
                }
            }
            Opcode::Sin => x.sin(),
            Opcode::Cos => x.cos(),
            _ => unreachable!("{self:?} is not unary"),
        }
    }

    /// Protected binary semantics, `lhs` being the deeper stack operand.
    #[inline]
    pub fn apply_binary(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Opcode::Add => lhs + rhs,
            Opcode::Sub => lhs - rhs,
            Opcode::Mul => lhs * rhs,
            Opcode::Div => {
                if rhs.abs() < PROTECTION_EPSILON {
                    1.0
                } else {
                    lhs / rhs
                }
            }
            Opcode::Pow => lhs.abs().powf(rhs),
            _ => unreachable!("{self:?} is not binary"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Instruction {
    PushVar(usize),
    PushConst(f64),
    Op(Opcode),
}

impl Instruction {
    /// Number of operands consumed (0 for pushes).
    pub fn arity(&self) -> usize {
        match self {
            Instruction::Op(op) => op.arity(),
            _ => 0,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::PushVar(i) => write!(f, "x{i}"),
            Instruction::PushConst(c) => write!(f, "{c}"),
            Instruction::Op(op) => f.write_str(op.token()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("program is empty")]
    Empty,
    #[error("program has {len} instructions, limit is {max}")]
    TooLong { len: usize, max: usize },
    #[error("constant {0} is not finite")]
    NonFiniteConstant(f64),
    #[error("unrecognised token `{0}`")]
    BadToken(String),
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum EvalFailure {
    #[error("stack empty at end of program")]
    EmptyStack,
    #[error("program output is not finite")]
    NonFinite,
    #[error("program reads x{index} but only {available} inputs were supplied")]
    MissingInput { index: usize, available: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackProgram {
    instructions: Vec<Instruction>,
}

impl StackProgram {
    pub fn new(instructions: Vec<Instruction>) -> Result<Self, ProgramError> {
        Self::with_max_length(instructions, DEFAULT_MAX_LENGTH)
    }

    pub fn with_max_length(instructions: Vec<Instruction>, max: usize) -> Result<Self, ProgramError> {
        if instructions.is_empty() {
            return Err(ProgramError::Empty);
        }
        if instructions.len() > max {
            return Err(ProgramError::TooLong { len: instructions.len(), max });
        }
        for ins in &instructions {
            if let Instruction::PushConst(c) = ins {
                if !c.is_finite() {
                    return Err(ProgramError::NonFiniteConstant(*c));
                }
            }
        }
        Ok(StackProgram { instructions })
    }

    /// Builds a program from instructions already known to satisfy the invariants.
    pub(crate) fn from_vec_unchecked(instructions: Vec<Instruction>) -> Self {
        debug_assert!(!instructions.is_empty());
        StackProgram { instructions }
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn into_instructions(self) -> Vec<Instruction> {
        self.instructions
    }

    /// Highest variable index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        self.instructions
            .iter()
            .filter_map(|ins| match ins {
                Instruction::PushVar(i) => Some(*i),
                _ => None,
            })
            .max()
    }

    /// Stack depth left after running the program. Depends only on structure,
    /// since underflowing operators are skipped regardless of the data.
    pub fn final_depth(&self) -> usize {
        let mut depth = 0usize;
        for ins in &self.instructions {
            match ins {
                Instruction::Op(op) => {
                    let arity = op.arity();
                    if depth >= arity {
                        depth = depth - arity + 1;
                    }
                }
                _ => depth += 1,
            }
        }
        depth
    }

    /// Evaluates the program on a single input point.
    pub fn evaluate(&self, inputs: &[f64]) -> Result<f64, EvalFailure> {
        self.check_inputs(inputs.len())?;
        let mut stack: Vec<f64> = Vec::with_capacity(self.instructions.len());
        for ins in &self.instructions {
            match *ins {
                Instruction::PushVar(i) => stack.push(inputs[i]),
                Instruction::PushConst(c) => stack.push(c),
                Instruction::Op(op) => {
                    if op.arity() == 2 {
                        if stack.len() < 2 {
                            continue;
                        }
                        let rhs = stack.pop().unwrap();
                        let lhs = stack.last_mut().unwrap();
                        *lhs = op.apply_binary(*lhs, rhs);
                    } else if let Some(top) = stack.last_mut() {
                        *top = op.apply_unary(*top);
                    }
                }
            }
        }
        match stack.last() {
            None => Err(EvalFailure::EmptyStack),
            Some(v) if !v.is_finite() => Err(EvalFailure::NonFinite),
            Some(v) => Ok(*v),
        }
    }

    /// Evaluates the program on every row of `dataset`, column at a time.
    pub fn evaluate_batch(&self, dataset: &Dataset) -> Result<Vec<f64>, EvalFailure> {
        self.evaluate_columns(dataset.columns(), dataset.len())
    }

    /// Column-major batch evaluation; `columns[v][row]` is variable `v` at `row`.
    pub fn evaluate_columns(&self, columns: &[Vec<f64>], rows: usize) -> Result<Vec<f64>, EvalFailure> {
        self.check_inputs(columns.len())?;
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(8);
        let mut pool: Vec<Vec<f64>> = Vec::new();
        let fresh = |pool: &mut Vec<Vec<f64>>| -> Vec<f64> {
            let mut buf = pool.pop().unwrap_or_default();
            buf.clear();
            buf
        };
        for ins in &self.instructions {
            match *ins {
                Instruction::PushVar(i) => {
                    let mut buf = fresh(&mut pool);
                    buf.extend_from_slice(&columns[i][..rows]);
                    stack.push(buf);
                }
                Instruction::PushConst(c) => {
                    let mut buf = fresh(&mut pool);
                    buf.resize(rows, c);
                    stack.push(buf);
                }
                Instruction::Op(op) => {
                    if op.arity() == 2 {
                        if stack.len() < 2 {
                            continue;
                        }
                        let rhs = stack.pop().unwrap();
                        let lhs = stack.last_mut().unwrap();
                        for (l, r) in lhs.iter_mut().zip(&rhs) {
                            *l = op.apply_binary(*l, *r);
                        }
                        pool.push(rhs);
                    } else if let Some(top) = stack.last_mut() {
                        for v in top.iter_mut() {
                            *v = op.apply_unary(*v);
                        }
                    }
                }
            }
        }
        let out = stack.pop().ok_or(EvalFailure::EmptyStack)?;
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(EvalFailure::NonFinite)
        }
    }

    fn check_inputs(&self, available: usize) -> Result<(), EvalFailure> {
        match self.max_var_index() {
            Some(index) if index >= available => Err(EvalFailure::MissingInput { index, available }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StackProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ins) in self.instructions.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{ins}")?;
        }
        Ok(())
    }
}

impl FromStr for StackProgram {
    type Err = ProgramError;

    /// Parses space-separated postfix text such as `x0 x0 * 3.5 +`.
    /// `pi` is accepted as a constant token.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let instructions = s.split_whitespace().map(parse_token).collect::<Result<Vec<_>, _>>()?;
        StackProgram::new(instructions)
    }
}

fn parse_token(token: &str) -> Result<Instruction, ProgramError> {
    if let Some(op) = Opcode::from_token(token) {
        return Ok(Instruction::Op(op));
    }
    if token == "pi" {
        return Ok(Instruction::PushConst(std::f64::consts::PI));
    }
    if let Some(index) = token.strip_prefix('x') {
        return index.parse::<usize>().map(Instruction::PushVar).map_err(|_| ProgramError::BadToken(token.to_string()));
    }
    match token.parse::<f64>() {
        Ok(c) if c.is_finite() => Ok(Instruction::PushConst(c)),
        Ok(c) => Err(ProgramError::NonFiniteConstant(c)),
        Err(_) => Err(ProgramError::BadToken(token.to_string())),
    }
}
