//! Cross-checks the LP text against a real MILP solver through the external
//! backend. Skipped when python3 with highspy is not installed.

use std::process::Command;

use brp_core::bench::generate_instance;
use brp_core::bounds::lb4;
use brp_core::mip::{
    build_brp_m3, build_brp_m3r, decode_assignment, Backend, BackendError, Budget, ExternalBackend,
    InternalBackend, SolveStatus,
};
use brp_core::oracle::{solve_exact, SearchLimits};
use brp_core::{Configuration, HeightMode};

fn highs() -> Option<ExternalBackend> {
    let ok = Command::new("python3")
        .args(["-c", "import highspy"])
        .output()
        .is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("skipped: python3 with highspy not available");
        return None;
    }
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scripts/highs_solve.py");
    Some(ExternalBackend::new(format!("python3 {script} {{lp}} {{sol}} {{time}}")))
}

fn cases() -> Vec<Configuration> {
    let mut v = vec![
        Configuration::from_stacks(&[vec![1, 2], vec![]]),
        Configuration::from_stacks(&[vec![1, 3, 4], vec![2], vec![]]),
    ];
    for seed in 0..6 {
        let mode = if seed % 2 == 0 { HeightMode::Unlimited } else { HeightMode::PlusTwo };
        v.push(mode.apply(generate_instance(500 + seed, 2, 3)).unwrap());
    }
    v
}

#[test]
fn external_matches_internal() {
    let Some(ext) = highs() else { return };
    let budget = Budget {
        time: Some(std::time::Duration::from_secs(60)),
        ..Budget::default()
    };
    for c in cases() {
        let f = solve_exact(&c, &SearchLimits::default()).unwrap().optimum;
        if f == 0 {
            continue;
        }
        let l = lb4(&c).value;
        let h = c.height_limit();

        let m3 = build_brp_m3(&c, h, l, f + 1).unwrap();
        let out = ext.solve(&m3, None, &budget).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal, "{c}");
        assert_eq!(out.objective.map(f64::round), Some(f as f64), "{c}");
        let seq = decode_assignment(&m3, out.assignment.as_ref().unwrap()).unwrap();
        assert_eq!(seq.validate(&c), Ok(f));

        let m3r = build_brp_m3r(&c, h, l).unwrap();
        let a = ext.solve(&m3r, None, &budget).unwrap();
        let b = InternalBackend.solve(&m3r, None, &budget).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(a.objective.map(f64::round), b.objective, "{c}");
    }
}

#[test]
fn short_horizon_is_infeasible_externally() {
    let Some(ext) = highs() else { return };
    let c = Configuration::from_stacks(&[vec![1, 3, 4], vec![2], vec![]]);
    let m = build_brp_m3(&c, None, 1, 1).unwrap();
    let out = ext.solve(&m, None, &Budget::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Infeasible);
}

#[test]
fn missing_tool_is_reported_unavailable() {
    let ext = ExternalBackend::new("no-such-solver-binary-xyz {lp} {sol}");
    let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
    let m = build_brp_m3(&c, None, 1, 1).unwrap();
    assert!(matches!(ext.solve(&m, None, &Budget::default()), Err(BackendError::Unavailable(_))));
}
