//! Benchmark problem registry.
//!
//! Registry files are UTF-8, one problem per line:
//!
//! ```text
//! # comment
//! id | name:[lo,hi] name:[lo,hi] ... | infix expression [| eq:N]
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. The optional fourth
//! field records an equation number.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

use crate::equation::{self, BinaryOp, ExprNode, TreeEvalError};

pub const BUNDLED_REGISTRY: &str = include_str!("../problems/registry.txt");
pub const FEYNMAN_PREFIX: &str = "feynman-";

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkProblem {
    pub id: String,
    pub expression: ExprNode,
    pub variables: Vec<Variable>,
    pub eq_number: Option<u32>,
}

impl BenchmarkProblem {
    pub fn dimensionality(&self) -> usize {
        self.variables.len()
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    /// Evaluates the ground-truth expression at a point given in variable order.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, TreeEvalError> {
        self.expression.eval_with(&|name: &str| {
            self.variables.iter().position(|v| v.name == name).and_then(|i| point.get(i).copied())
        })
    }

    fn to_line(&self) -> String {
        let mut line = format!("{} |", self.id);
        for v in &self.variables {
            let _ = write!(line, " {}:[{},{}]", v.name, v.lo, v.hi);
        }
        let _ = write!(line, " | {}", self.expression);
        if let Some(eq) = self.eq_number {
            let _ = write!(line, " | eq:{eq}");
        }
        line
    }
}

/// Returns `constant + base` as a new problem with the same variables.
pub fn modified_problem(base: &BenchmarkProblem, constant: f64) -> BenchmarkProblem {
    BenchmarkProblem {
        id: format!("{}+{}", base.id, constant),
        expression: ExprNode::binary(BinaryOp::Add, ExprNode::constant(constant), base.expression.clone()),
        variables: base.variables.clone(),
        eq_number: base.eq_number,
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry: {0}")]
    Io(#[from] std::io::Error),
    #[error("registry line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("registry line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Registry {
    problems: IndexMap<String, BenchmarkProblem>,
}

impl Registry {
    pub fn bundled() -> Registry {
        Registry::parse(BUNDLED_REGISTRY).expect("bundled registry is well formed")
    }

    pub fn parse(text: &str) -> Result<Registry, RegistryError> {
        let mut problems = IndexMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let problem = parse_line(content).map_err(|reason| RegistryError::Format { line, reason })?;
            if problems.contains_key(&problem.id) {
                return Err(RegistryError::DuplicateId { line, id: problem.id });
            }
            problems.insert(problem.id.clone(), problem);
        }
        Ok(Registry { problems })
    }

    pub fn insert(&mut self, problem: BenchmarkProblem) -> Option<BenchmarkProblem> {
        self.problems.insert(problem.id.clone(), problem)
    }

    pub fn get(&self, id: &str) -> Option<&BenchmarkProblem> {
        self.problems.get(id)
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BenchmarkProblem> {
        self.problems.values()
    }

    pub fn feynman(&self) -> impl Iterator<Item = &BenchmarkProblem> {
        self.iter().filter(|p| p.id.starts_with(FEYNMAN_PREFIX))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in self.problems.values() {
            out.push_str(&p.to_line());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RegistryError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<Registry, RegistryError> {
    let text = std::fs::read_to_string(path)?;
    Registry::parse(&text)
}

fn parse_line(content: &str) -> Result<BenchmarkProblem, String> {
    let fields: Vec<&str> = content.split('|').map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 `|`-separated fields, found {}", fields.len()));
    }
    let id = fields[0];
    if id.is_empty() || id.contains(char::is_whitespace) {
        return Err(format!("invalid id `{id}`"));
    }
    let variables = fields[1].split_whitespace().map(parse_variable).collect::<Result<Vec<_>, _>>()?;
    if variables.is_empty() {
        return Err("no variables declared".into());
    }
    for (i, v) in variables.iter().enumerate() {
        if variables[..i].iter().any(|w| w.name == v.name) {
            return Err(format!("variable `{}` declared twice", v.name));
        }
    }
    let expression = equation::parse(fields[2]).map_err(|e| e.to_string())?;
    let names: Vec<&str> = variables.iter().map(|v| v.name.as_str()).collect();
    equation::check_variables(&expression, &names)?;
    let eq_number = match fields.get(3) {
        None => None,
        Some(f) => Some(
            f.strip_prefix("eq:")
                .and_then(|n| n.trim().parse::<u32>().ok())
                .ok_or_else(|| format!("malformed equation field `{f}`"))?,
        ),
    };
    Ok(BenchmarkProblem { id: id.to_string(), expression, variables, eq_number })
}

fn parse_variable(spec: &str) -> Result<Variable, String> {
    let bad = || format!("malformed variable `{spec}`, expected name:[lo,hi]");
    let (name, range) = spec.split_once(':').ok_or_else(bad)?;
    let inner = range.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
    let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let valid_name = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid_name || name == "pi" {
        return Err(format!("invalid variable name `{name}`"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("variable `{name}` needs finite lo < hi"));
    }
    Ok(Variable { name: name.to_string(), lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    const KORNS_LINE: &str =
        "korns-8 | x0:[-50,50] x1:[-50,50] x2:[-50,50] x3:[-50,50] x4:[-50,50] | 6.87 + 29.58*sqrt(x0*x3*x4)";

    #[test]
    fn parses_korns_line() {
        let reg = Registry::parse(KORNS_LINE).unwrap();
        let p = reg.get("korns-8").unwrap();
        assert_eq!(p.dimensionality(), 5);
        assert_eq!(p.variables[2], Variable { name: "x2".into(), lo: -50.0, hi: 50.0 });
        assert_eq!(p.eq_number, None);
        let v = p.evaluate(&[1.0, 9.0, 9.0, 1.0, 1.0]).unwrap();
        assert!((v - 36.45).abs() < 1e-12);
    }

    #[test]
    fn empty_and_comment_only() {
        assert!(Registry::parse("").unwrap().is_empty());
        assert!(Registry::parse("# nothing\n\n   \n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id() {
        let text = format!("{KORNS_LINE}\n# again\n{KORNS_LINE}\n");
        match Registry::parse(&text) {
            Err(RegistryError::DuplicateId { line, id }) => {
                assert_eq!(line, 3);
                assert_eq!(id, "korns-8");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn format_errors_carry_line_numbers() {
        let cases = [
            "a | x:[0,1]",
            "a | x:[1,0] | x",
            "a | x:[0,1] | y",
            "a | x:0,1 | x",
            "a | | x",
            "a | x:[0,1] | (x",
            "a | x:[0,1] | x | eq:abc",
            "a | x:[0,1] x:[0,2] | x",
            "a | pi:[0,1] | pi",
        ];
        for case in cases {
            let text = format!("# header\n{case}\n");
            match Registry::parse(&text) {
                Err(RegistryError::Format { line: 2, .. }) => {}
                other => panic!("{case}: {other:?}"),
            }
        }
    }

    #[test]
    fn equation_number_field() {
        let reg = Registry::parse("k | x:[-1,1] | x^2 | eq:7").unwrap();
        assert_eq!(reg.get("k").unwrap().eq_number, Some(7));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_registry("/nonexistent/registry.txt"), Err(RegistryError::Io(_))));
    }

    #[test]
    fn modified_problem_adds_constant() {
        let reg = Registry::bundled();
        let base = reg.get("feynman-I.12.1").unwrap();
        let zero = modified_problem(base, 0.0);
        let five = modified_problem(base, 5.0);
        assert_eq!(five.id, "feynman-I.12.1+5");
        assert_eq!(five.expression.to_string(), "5 + mu * Nn");
        for point in [[1.0, 1.0], [2.5, 3.0], [4.9, 1.1]] {
            let b = base.evaluate(&point).unwrap();
            assert_eq!(zero.evaluate(&point).unwrap(), b);
            assert_eq!(five.evaluate(&point).unwrap(), 5.0 + b);
            assert_eq!(modified_problem(base, 50.0).evaluate(&point).unwrap(), 50.0 + b);
        }
    }
}
