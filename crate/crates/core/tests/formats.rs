mod common;

use brp_core::bench::generate_instance;
use brp_core::io::{parse_instance, parse_instance_with, parse_moves, serialize_instance, serialize_moves, ParseOptions};
use brp_core::mip::{build_brp_m3, build_brp_m3r, emit_lp, emit_program, parse_lp};
use brp_core::oracle::{solve_exact, OracleError, SearchLimits};
use brp_core::Configuration;
use common::{irregular, irregular_with_height};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn instance_text_round_trips(c in irregular(16)) {
        let text = serialize_instance(&c);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(back.stacks(), c.stacks());
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn renumbering_keeps_order(c in irregular(10), scale in 2u32..50, shift in 0u32..100) {
        let spread = Configuration::from_stacks(
            &c.stacks().iter().map(|s| s.iter().map(|b| b * scale + shift).collect::<Vec<_>>()).collect::<Vec<_>>(),
        );
        let text = serialize_instance(&spread);
        let back = parse_instance_with(&text, ParseOptions { renumber: true }).unwrap();
        prop_assert_eq!(back.stacks(), c.stacks());
        if scale > 1 && c.num_blocks() > 1 {
            prop_assert!(parse_instance(&text).is_err());
        }
    }

    #[test]
    fn move_text_round_trips(c in irregular_with_height(7)) {
        let seq = match solve_exact(&c, &SearchLimits::default()) {
            Err(OracleError::Infeasible) => return Ok(()),
            r => r.unwrap().witness,
        };
        let text = serialize_moves(&seq);
        prop_assert_eq!(parse_moves(&text).unwrap(), seq);
    }

    #[test]
    fn lp_text_round_trips(seed in any::<u64>(), w in 2usize..4, limited in any::<bool>(), l in 1usize..3, extra in 0usize..2) {
        let c = generate_instance(seed, 2, w);
        let h = limited.then_some(4);
        for m in [build_brp_m3(&c, h, l, l + extra), build_brp_m3r(&c, h, l)] {
            let Ok(m) = m else { continue };
            let text = emit_lp(&m);
            let back = parse_lp(&text).unwrap();
            prop_assert!(back.equivalent(&m.program));
            prop_assert_eq!(emit_program(&back), emit_program(&m.program));
        }
    }
}

#[test]
fn emission_is_deterministic() {
    let c = Configuration::from_stacks(&[vec![1, 3, 4], vec![2], vec![]]);
    let a = emit_lp(&build_brp_m3(&c, Some(4), 2, 3).unwrap());
    let b = emit_lp(&build_brp_m3(&c.clone(), Some(4), 2, 3).unwrap());
    assert_eq!(a, b);
}

#[test]
fn generator_is_seed_stable() {
    assert_eq!(generate_instance(42, 3, 4), generate_instance(42, 3, 4));
    assert_ne!(generate_instance(42, 3, 4), generate_instance(43, 3, 4));
    let c = generate_instance(42, 3, 4);
    assert!(c.stacks().iter().all(|s| s.len() == 3));
    let mut all: Vec<u32> = c.stacks().concat();
    all.sort();
    assert_eq!(all, (1..=12).collect::<Vec<_>>());
}

#[test]
fn golden_lp_for_two_block_model() {
    let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
    let text = emit_lp(&build_brp_m3(&c, None, 1, 1).unwrap());
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/two_block_m3_L1_T1.lp");
    let golden = std::fs::read_to_string(path).expect("golden file present");
    assert_eq!(text, golden);
}
