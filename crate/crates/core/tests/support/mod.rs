//! Independent tree-walk oracle shared by the oracle and acceptance targets.

use std::collections::HashMap;

use corr_sr::equation::{BinaryOp, UnaryOp};
use corr_sr::evolution::spawn;
use corr_sr::{eval_tree, EvalFailure, ExprNode, Instruction, Opcode, StackProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REL_TOL: f64 = 1e-12;

/// Expression tree rebuilt from a postfix program, honouring skip-on-underflow.
#[derive(Clone, Debug)]
enum Tree {
    Var(usize),
    Const(f64),
    Un(Opcode, Box<Tree>),
    Bin(Opcode, Box<Tree>, Box<Tree>),
}

fn to_tree(program: &StackProgram) -> Option<Tree> {
    let mut stack: Vec<Tree> = Vec::new();
    for ins in program.instructions() {
        match *ins {
            Instruction::PushVar(i) => stack.push(Tree::Var(i)),
            Instruction::PushConst(c) => stack.push(Tree::Const(c)),
            Instruction::Op(op) if op.arity() == 2 => {
                if stack.len() >= 2 {
                    let r = stack.pop().unwrap();
                    let l = stack.pop().unwrap();
                    stack.push(Tree::Bin(op, Box::new(l), Box::new(r)));
                }
            }
            Instruction::Op(op) => {
                if let Some(t) = stack.pop() {
                    stack.push(Tree::Un(op, Box::new(t)));
                }
            }
        }
    }
    stack.pop()
}

/// Recursive evaluation with the protected rules written out longhand.
/// The flag reports whether any protection or non-finite intermediate was hit.
fn oracle(tree: &Tree, x: &[f64], hit: &mut bool) -> f64 {
    let v = match tree {
        Tree::Var(i) => x[*i],
        Tree::Const(c) => *c,
        Tree::Un(op, t) => {
            let a = oracle(t, x, hit);
            match op {
                Opcode::Neg => -a,
                Opcode::Square => a * a,
                Opcode::Sin => a.sin(),
                Opcode::Cos => a.cos(),
                Opcode::Sqrt => {
                    *hit |= a < 0.0;
                    a.abs().sqrt()
                }
                Opcode::Exp => {
                    if a > 300.0 {
                        *hit = true;
                        300f64.exp()
                    } else if a < -300.0 {
                        *hit = true;
                        (-300f64).exp()
                    } else {
                        a.exp()
                    }
                }
                Opcode::Log => {
                    *hit |= a <= 0.0;
                    if a.abs() < 1e-12 {
                        0.0
                    } else {
                        a.abs().ln()
                    }
                }
                _ => unreachable!(),
            }
        }
        Tree::Bin(op, l, r) => {
            let a = oracle(l, x, hit);
            let b = oracle(r, x, hit);
            match op {
                Opcode::Add => a + b,
                Opcode::Sub => a - b,
                Opcode::Mul => a * b,
                Opcode::Div => {
                    if b.abs() < 1e-12 {
                        *hit = true;
                        1.0
                    } else {
                        a / b
                    }
                }
                Opcode::Pow => {
                    *hit |= a < 0.0;
                    a.abs().powf(b)
                }
                _ => unreachable!(),
            }
        }
    };
    *hit |= !v.is_finite();
    v
}

fn to_expr(tree: &Tree) -> ExprNode {
    match tree {
        Tree::Var(i) => ExprNode::var(format!("x{i}")),
        Tree::Const(c) => ExprNode::constant(*c),
        Tree::Un(op, t) => {
            let c = to_expr(t);
            match op {
                Opcode::Neg => ExprNode::unary(UnaryOp::Neg, c),
                Opcode::Square => ExprNode::binary(BinaryOp::Mul, c.clone(), c),
                Opcode::Sin => ExprNode::unary(UnaryOp::Sin, c),
                Opcode::Cos => ExprNode::unary(UnaryOp::Cos, c),
                Opcode::Sqrt => ExprNode::unary(UnaryOp::Sqrt, c),
                Opcode::Exp => ExprNode::unary(UnaryOp::Exp, c),
                Opcode::Log => ExprNode::unary(UnaryOp::Log, c),
                _ => unreachable!(),
            }
        }
        Tree::Bin(op, l, r) => {
            let (l, r) = (to_expr(l), to_expr(r));
            let op = match op {
                Opcode::Add => BinaryOp::Add,
                Opcode::Sub => BinaryOp::Sub,
                Opcode::Mul => BinaryOp::Mul,
                Opcode::Div => BinaryOp::Div,
                Opcode::Pow => BinaryOp::Pow,
                _ => unreachable!(),
            };
            ExprNode::binary(op, l, r)
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

pub fn random_program(rng: &mut ChaCha8Rng, dim: usize) -> StackProgram {
    // Mix well-formed spawns with arbitrary sequences that exercise underflow.
    if rng.random_bool(0.5) {
        spawn(dim, rng)
    } else {
        let len = rng.random_range(1..=24);
        let code = (0..len)
            .map(|_| match rng.random_range(0..3) {
                0 => Instruction::PushVar(rng.random_range(0..dim)),
                1 => Instruction::PushConst(rng.random_range(-10.0..10.0)),
                _ => Instruction::Op(Opcode::ALL[rng.random_range(0..Opcode::ALL.len())]),
            })
            .collect();
        StackProgram::new(code).unwrap()
    }
}

/// Compares stack evaluation against the oracle on `count` random programs.
/// Returns how many were also checked against the library tree evaluator.
pub fn check_against_oracle(count: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 3;
    let mut compared_with_library = 0;
    for _ in 0..count {
        let program = random_program(&mut rng, dim);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let stack = program.evaluate(&x);
        let Some(tree) = to_tree(&program) else {
            if stack != Err(EvalFailure::EmptyStack) {
                return Err(format!("{program}: expected empty stack, got {stack:?}"));
            }
            continue;
        };
        let mut hit = false;
        let expected = oracle(&tree, &x, &mut hit);
        match stack {
            Ok(v) if !close(v, expected) => return Err(format!("{program} at {x:?}: stack {v}, oracle {expected}")),
            Err(e) if e != EvalFailure::NonFinite || expected.is_finite() => {
                return Err(format!("{program}: stack failed with {e:?}, oracle gave {expected}"))
            }
            _ => {}
        }
        if !hit {
            let bindings: HashMap<String, f64> = (0..dim).map(|i| (format!("x{i}"), x[i])).collect();
            let tree_value = eval_tree(&to_expr(&tree), &bindings).map_err(|e| format!("{program}: {e:?}"))?;
            if !close(stack.unwrap(), tree_value) {
                return Err(format!("{program}: library tree gave {tree_value}"));
            }
            compared_with_library += 1;
        }
    }
    Ok(compared_with_library)
}
