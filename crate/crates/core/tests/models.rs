mod common;

use brp_core::bounds::lb4;
use brp_core::mip::{
    build_brp_m3, build_brp_m3r, check_assignment, decode_assignment, encode_sequence, expected_binary_count,
    Backend, Budget, InternalBackend, SolveStatus,
};
use brp_core::oracle::{solve_exact, OracleError, SearchLimits};
use brp_core::Configuration;
use common::irregular_with_height;
use proptest::prelude::*;

fn solved(c: &Configuration) -> Option<brp_core::oracle::OptimalResult> {
    match solve_exact(c, &SearchLimits::default()) {
        Err(OracleError::Infeasible) => None,
        r => Some(r.unwrap()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// An optimal sequence encodes to a feasible point whose objective is its
    /// relocation count, and decodes back to a sequence of the same length.
    #[test]
    fn m3_encoding_is_sound(c in irregular_with_height(7), slack in 0usize..2) {
        let Some(r) = solved(&c) else { return Ok(()) };
        if r.optimum == 0 {
            return Ok(());
        }
        let l = lb4(&c).value;
        let m = build_brp_m3(&c, c.height_limit(), l, r.optimum + slack).unwrap();
        prop_assert_eq!(m.program.binary_count(), expected_binary_count(m.meta.blocks, m.meta.t));
        let a = encode_sequence(&m, &r.witness).unwrap();
        let rep = check_assignment(&m, &a).unwrap();
        prop_assert!(rep.is_feasible(), "{:?}", rep.violations);
        prop_assert_eq!(rep.objective, r.optimum as f64);
        let back = decode_assignment(&m, &a).unwrap();
        prop_assert_eq!(back.validate(&c), Ok(r.optimum));
    }

    /// Truncating any feasible sequence to L relocations is feasible for the
    /// relaxation, so its optimum never exceeds the true optimum.
    #[test]
    fn relaxation_is_below_the_optimum(c in irregular_with_height(7)) {
        let Some(r) = solved(&c) else { return Ok(()) };
        let l = lb4(&c).value;
        if l == 0 {
            return Ok(());
        }
        let m = build_brp_m3r(&c, c.height_limit(), l).unwrap();
        let a = encode_sequence(&m, &r.witness).unwrap();
        let rep = check_assignment(&m, &a).unwrap();
        prop_assert!(rep.is_feasible(), "{:?}", rep.violations);
        // Each remaining direct blockage costs at least one more relocation.
        prop_assert!(rep.objective <= r.optimum as f64 + 1e-9);
        let out = InternalBackend.solve(&m, None, &Budget::default()).unwrap();
        prop_assert_eq!(out.status, SolveStatus::Optimal);
        let v = out.objective.unwrap();
        prop_assert!(v >= l as f64 - 1e-9 && v <= r.optimum as f64 + 1e-9, "{} not in [{}, {}]", v, l, r.optimum);
        prop_assert!(v <= rep.objective + 1e-9);
        let cert = check_assignment(&m, out.assignment.as_ref().unwrap()).unwrap();
        prop_assert!(cert.is_feasible());
        prop_assert!((cert.objective - v).abs() < 1e-9);
    }

    #[test]
    fn internal_m3_agrees_with_search(c in irregular_with_height(7)) {
        let Some(r) = solved(&c) else { return Ok(()) };
        if r.optimum == 0 {
            return Ok(());
        }
        let m = build_brp_m3(&c, c.height_limit(), lb4(&c).value, r.optimum + 1).unwrap();
        let out = InternalBackend.solve(&m, None, &Budget::default()).unwrap();
        prop_assert_eq!(out.status, SolveStatus::Optimal);
        prop_assert_eq!(out.objective, Some(r.optimum as f64));
        let seq = decode_assignment(&m, out.assignment.as_ref().unwrap()).unwrap();
        prop_assert_eq!(seq.validate(&c), Ok(r.optimum));
    }
}

#[test]
fn horizon_below_optimum_is_infeasible() {
    let c = Configuration::from_stacks(&[vec![1, 3, 4], vec![2], vec![]]);
    let f = solve_exact(&c, &SearchLimits::default()).unwrap().optimum;
    assert!(f >= 2);
    let m = build_brp_m3(&c, None, 1, f - 1).unwrap();
    let out = InternalBackend.solve(&m, None, &Budget::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Infeasible);
}

/// The relaxation can be strictly stronger than LB4: here LB4 = 2 while the
/// relaxation at L = 2 already reaches the optimum 3.
#[test]
fn relaxation_can_close_the_gap_left_by_lb4() {
    let c = Configuration::from_stacks(&[vec![5, 1, 6], vec![4, 3, 2]]);
    assert_eq!(lb4(&c).value, 2);
    assert_eq!(solve_exact(&c, &SearchLimits::default()).unwrap().optimum, 3);
    let out = InternalBackend.solve(&build_brp_m3r(&c, None, 2).unwrap(), None, &Budget::default()).unwrap();
    assert_eq!(out.objective, Some(3.0));
}
