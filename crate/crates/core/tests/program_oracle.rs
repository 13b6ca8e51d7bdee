mod support;

use corr_sr::evolution::{spawn, spawn_with_length};
use corr_sr::{EvalFailure, Instruction, Opcode, StackProgram};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::random_program;

#[test]
fn stack_matches_tree_oracle_on_random_programs() {
    let compared = support::check_against_oracle(1000, 0x0ac1e).unwrap();
    assert!(compared > 300, "only {compared} unprotected programs");
}

#[test]
fn batch_evaluation_matches_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..2).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    let data = corr_sr::Dataset::from_rows(vec!["a".into(), "b".into()], &rows, vec![0.0; rows.len()]);
    for _ in 0..300 {
        let program = random_program(&mut rng, 2);
        let pointwise: Result<Vec<f64>, EvalFailure> = rows.iter().map(|r| program.evaluate(r)).collect();
        match (program.evaluate_batch(&data), pointwise) {
            (Ok(b), Ok(p)) => assert_eq!(b, p, "{program}"),
            (Err(_), Err(_)) => {}
            (b, p) => panic!("{program}: batch {b:?} vs pointwise {p:?}"),
        }
    }
}

#[test]
fn spawned_programs_never_end_empty() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..10_000 {
        let p = spawn(1 + i % 5, &mut rng);
        assert!((3..=16).contains(&p.len()));
        assert!(p.final_depth() >= 1, "{p}");
    }
    for len in 1..=64 {
        assert!(spawn_with_length(2, len, &mut rng).final_depth() >= 1);
    }
}

fn instruction() -> impl Strategy<Value = Instruction> {
    prop_oneof![
        (0usize..3).prop_map(Instruction::PushVar),
        (-1e3f64..1e3).prop_map(Instruction::PushConst),
        (0usize..12).prop_map(|i| Instruction::Op(Opcode::ALL[i])),
    ]
}

proptest! {
    #[test]
    fn evaluation_is_total_and_deterministic(
        code in prop::collection::vec(instruction(), 1..64),
        x in prop::collection::vec(-1e6f64..1e6, 3),
    ) {
        let p = StackProgram::new(code).unwrap();
        let first = p.evaluate(&x);
        if let Ok(v) = first {
            prop_assert!(v.is_finite());
        }
        prop_assert_eq!(first, p.evaluate(&x));
    }

    #[test]
    fn text_round_trip(code in prop::collection::vec(instruction(), 1..64)) {
        let p = StackProgram::new(code).unwrap();
        let back: StackProgram = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }
}
