//! Infix equation parsing for ground-truth target functions.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right associative
//! atom    := number | 'pi' | name | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! A `-` directly in front of a numeric literal folds into a negative
//! constant. Evaluation is unprotected: any non-finite intermediate result
//! surfaces as [`TreeEvalError::GenerationFailure`].

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Tanh,
    Asin,
    Acos,
    Abs,
}

impl UnaryOp {
    const FUNCTIONS: [UnaryOp; 10] = [
        UnaryOp::Sqrt,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Tanh,
        UnaryOp::Asin,
        UnaryOp::Acos,
        UnaryOp::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Asin => "asin",
            UnaryOp::Acos => "acos",
            UnaryOp::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<UnaryOp> {
        if name == "ln" {
            return Some(UnaryOp::Log);
        }
        UnaryOp::FUNCTIONS.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => x.ln(),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tan => x.tan(),
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Asin => x.asin(),
            UnaryOp::Acos => x.acos(),
            UnaryOp::Abs => x.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => PREC_SUM,
            BinaryOp::Mul | BinaryOp::Div => PREC_PRODUCT,
            BinaryOp::Pow => PREC_POWER,
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Pow => a.powf(b),
        }
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

#[derive(Clone, Debug, PartialEq)]
pub enum ExprNode {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<ExprNode>),
    Binary(BinaryOp, Box<ExprNode>, Box<ExprNode>),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeEvalError {
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("expression is not finite at this point")]
    GenerationFailure,
}

impl ExprNode {
    pub fn constant(value: f64) -> Self {
        ExprNode::Const(value)
    }

    pub fn var(name: impl Into<String>) -> Self {
        ExprNode::Var(name.into())
    }

    pub fn unary(op: UnaryOp, child: ExprNode) -> Self {
        ExprNode::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, lhs: ExprNode, rhs: ExprNode) -> Self {
        ExprNode::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Distinct variable names referenced by the tree.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            ExprNode::Const(_) => {}
            ExprNode::Var(name) => {
                out.insert(name.as_str());
            }
            ExprNode::Unary(_, c) => c.collect_vars(out),
            ExprNode::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Evaluates with unprotected semantics against a name lookup.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<f64, TreeEvalError>
    where
        F: Fn(&str) -> Option<f64>,
    {
        let value = match self {
            ExprNode::Const(c) => *c,
            ExprNode::Var(name) => lookup(name).ok_or_else(|| TreeEvalError::UnboundVariable(name.clone()))?,
            ExprNode::Unary(op, c) => op.apply(c.eval_with(lookup)?),
            ExprNode::Binary(op, l, r) => op.apply(l.eval_with(lookup)?, r.eval_with(lookup)?),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(TreeEvalError::GenerationFailure)
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ExprNode::Const(c) if c.is_sign_negative() => PREC_UNARY,
            ExprNode::Const(_) | ExprNode::Var(_) => PREC_ATOM,
            ExprNode::Unary(UnaryOp::Neg, _) => PREC_UNARY,
            ExprNode::Unary(_, _) => PREC_ATOM,
            ExprNode::Binary(op, _, _) => op.precedence(),
        }
    }
}

/// Evaluates `node` with the given bindings.
pub fn eval_tree(node: &ExprNode, bindings: &HashMap<String, f64>) -> Result<f64, TreeEvalError> {
    node.eval_with(&|name: &str| bindings.get(name).copied())
}

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Const(c) => write!(f, "{c}"),
            ExprNode::Var(name) => f.write_str(name),
            ExprNode::Unary(UnaryOp::Neg, child) => {
                // A literal right after `-` would fold into a negative constant.
                let wrap = child.precedence() < PREC_UNARY || matches!(**child, ExprNode::Const(_));
                f.write_str("-")?;
                write_operand(f, child, wrap)
            }
            ExprNode::Unary(op, child) => write!(f, "{}({child})", op.name()),
            ExprNode::Binary(op, lhs, rhs) => {
                let prec = op.precedence();
                let (wrap_l, wrap_r) = if *op == BinaryOp::Pow {
                    (lhs.precedence() <= prec, rhs.precedence() < prec)
                } else {
                    (lhs.precedence() < prec, rhs.precedence() <= prec)
                };
                write_operand(f, lhs, wrap_l)?;
                match op {
                    BinaryOp::Pow => f.write_str("^")?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                write_operand(f, rhs, wrap_r)
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, node: &ExprNode, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({node})")
    } else {
        write!(f, "{node}")
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Symbol(char),
}

fn tokenize(source: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &source[start..i];
            let value = text
                .parse::<f64>()
                .map_err(|_| ParseError { position: start, message: format!("malformed number `{text}`") })?;
            tokens.push((start, Token::Number(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((start, Token::Ident(source[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            tokens.push((i, Token::Symbol(c)));
            i += 1;
        } else {
            return Err(ParseError { position: i, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { position: self.offset(), message: message.into() }
    }

    fn eat_symbol(&mut self, symbol: char) -> bool {
        if self.peek() == Some(&Token::Symbol(symbol)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.product()?;
        loop {
            let op = if self.eat_symbol('+') {
                BinaryOp::Add
            } else if self.eat_symbol('-') {
                BinaryOp::Sub
            } else {
                return Ok(node);
            };
            node = ExprNode::binary(op, node, self.product()?);
        }
    }

    fn product(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.unary()?;
        loop {
            let op = if self.eat_symbol('*') {
                BinaryOp::Mul
            } else if self.eat_symbol('/') {
                BinaryOp::Div
            } else {
                return Ok(node);
            };
            node = ExprNode::binary(op, node, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<ExprNode, ParseError> {
        if self.eat_symbol('-') {
            if let Some(Token::Number(v)) = self.peek() {
                let v = *v;
                // Fold only when the literal is not itself a power base.
                if self.tokens.get(self.pos + 1).map(|(_, t)| t) != Some(&Token::Symbol('^')) {
                    self.pos += 1;
                    return Ok(ExprNode::Const(-v));
                }
            }
            return Ok(ExprNode::unary(UnaryOp::Neg, self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode, ParseError> {
        let base = self.atom()?;
        if self.eat_symbol('^') {
            let exponent = self.unary()?;
            return Ok(ExprNode::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprNode, ParseError> {
        let Some(token) = self.peek().cloned() else {
            return Err(self.error("expected an operand, found end of input"));
        };
        match token {
            Token::Number(v) => {
                self.pos += 1;
                Ok(ExprNode::Const(v))
            }
            Token::Ident(name) => {
                let at = self.offset();
                self.pos += 1;
                if self.peek() == Some(&Token::Symbol('(')) {
                    let Some(op) = UnaryOp::from_name(&name) else {
                        return Err(ParseError { position: at, message: format!("unknown function `{name}`") });
                    };
                    self.pos += 1;
                    let arg = self.sum()?;
                    if !self.eat_symbol(')') {
                        return Err(self.error("expected `)` to close function call"));
                    }
                    return Ok(ExprNode::unary(op, arg));
                }
                if UnaryOp::from_name(&name).is_some() {
                    return Err(ParseError { position: at, message: format!("function `{name}` needs `(`") });
                }
                if name == "pi" {
                    return Ok(ExprNode::Const(std::f64::consts::PI));
                }
                Ok(ExprNode::Var(name))
            }
            Token::Symbol('(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat_symbol(')') {
                    return Err(self.error("unbalanced parenthesis, expected `)`"));
                }
                Ok(inner)
            }
            Token::Symbol(c) => Err(self.error(format!("expected an operand, found `{c}`"))),
        }
    }
}

/// Parses an infix expression.
pub fn parse(source: &str) -> Result<ExprNode, ParseError> {
    let tokens = tokenize(source)?;
    if tokens.is_empty() {
        return Err(ParseError { position: 0, message: "empty expression".into() });
    }
    let mut parser = Parser { tokens, pos: 0, end: source.len() };
    let node = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        let msg = match parser.peek() {
            Some(Token::Symbol(')')) => "unbalanced parenthesis, unexpected `)`".to_string(),
            Some(t) => format!("unexpected trailing token {t:?}"),
            None => unreachable!(),
        };
        return Err(parser.error(msg));
    }
    Ok(node)
}

/// Ensures every variable in `node` is one of `allowed`.
pub fn check_variables(node: &ExprNode, allowed: &[&str]) -> Result<(), String> {
    match node.variables().into_iter().find(|v| !allowed.contains(v)) {
        Some(unknown) => Err(format!("unknown identifier `{unknown}`")),
        None => Ok(()),
    }
}
