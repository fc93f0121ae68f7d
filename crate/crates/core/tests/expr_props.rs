mod common {
    pub mod gen;
}

use common::gen::{oracle_env, Gen, Oracle};
use leam_core::expr::{parse_expr, EvalError, Expr, ParamEnv};
use proptest::prelude::*;

fn oracle(seed: u64) -> Oracle {
    Oracle::random(&mut Gen::new(seed), 5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parenthesized_text_parses_to_the_same_tree(seed in any::<u64>()) {
        let o = oracle(seed);
        prop_assert_eq!(parse_expr(&o.text()).unwrap(), o.to_expr());
    }

    #[test]
    fn canonical_text_round_trips(seed in any::<u64>()) {
        let e = oracle(seed).to_expr();
        let text = e.to_string();
        let back = parse_expr(&text).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string(), text.clone());
        let squeezed: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(parse_expr(&squeezed).unwrap(), e);
    }

    #[test]
    fn evaluation_matches_oracle(seed in any::<u64>()) {
        let o = oracle(seed);
        let env = oracle_env();
        let parsed = parse_expr(&o.to_expr().to_string()).unwrap();
        match (o.eval(), parsed.eval(&env)) {
            (Some(want), Ok(got)) => {
                let rel = (got - want).abs() / want.abs().max(1.0);
                prop_assert!(rel < 1e-12, "{} -> {} vs oracle {}", parsed, got, want);
            }
            (None, Err(EvalError::DivisionByZero | EvalError::NonFinite)) => {}
            (want, got) => prop_assert!(false, "oracle {:?}, library {:?}", want, got),
        }
    }

    #[test]
    fn unbound_names_are_reported(seed in any::<u64>()) {
        let e = oracle(seed).to_expr();
        let free = e.free_params();
        match e.eval(&ParamEnv::new()) {
            Err(EvalError::UnboundParameter(n)) => prop_assert!(free.contains(&n)),
            Ok(_) | Err(EvalError::DivisionByZero | EvalError::NonFinite) => {
                prop_assert!(free.is_empty())
            }
        }
    }
}

#[test]
fn precedence_and_associativity() {
    let cases = [
        ("a - (b - c)", "a - (b - c)"),
        ("(a - b) - c", "a - b - c"),
        ("a / (b * c)", "a / (b * c)"),
        ("(a * b) / c", "a * b / c"),
        ("-(a + b) * c", "-(a + b) * c"),
        ("--a", "--a"),
        ("((((x1))))", "x1"),
        ("2*PatchW+0.5", "2 * PatchW + 0.5"),
    ];
    for (input, canonical) in cases {
        assert_eq!(parse_expr(input).unwrap().to_string(), canonical, "{input}");
    }
}

#[test]
fn malformed_literals() {
    for bad in [".5", "5.", "1e3", "1..2", "a +", "(a", "a)", "", "3 $"] {
        assert!(parse_expr(bad).is_err(), "{bad:?}");
    }
    assert_eq!(Expr::num(-2.5).to_string(), "-2.5");
}
