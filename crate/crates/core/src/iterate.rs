//! The iterative schemes: repeated BRP-m3R solves whose optimum becomes the
//! next relocation budget, until the optimum equals the budget.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::lb4;
use crate::config::{ConfigError, Configuration};
use crate::heuristics::{best_heuristic, greedy_min_max, repair_height};
use crate::mip::{
    build_brp_m3r, decode_assignment, encode_sequence, Backend, BackendError, Budget, CodecError,
    ModelError, SolveStatus,
};
use crate::moves::{MoveSequence, SequenceError};
use crate::oracle::OptimalResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Unlimited,
    Limited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub phase: Phase,
    pub l: usize,
    pub objective: Option<f64>,
    pub time: Duration,
    pub status: SolveStatus,
}

/// How the height-aware scheme finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exit {
    /// The unlimited solution already respected the height limit.
    FirstPhase,
    /// Repair kept the relocation count at the unlimited optimum.
    Repaired,
    SecondPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub sequence: MoveSequence,
    pub proven: bool,
    pub exit: Option<Exit>,
}

impl IterationTrace {
    /// `iteration,phase,L,objective,time_s,status`, one row per solve.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,phase,L,objective,time_s,status\n");
        for (k, r) in self.records.iter().enumerate() {
            let phase = match r.phase {
                Phase::Unlimited => "unlimited",
                Phase::Limited => "limited",
            };
            let obj = r.objective.map_or(String::new(), |v| format!("{v}"));
            writeln!(
                out,
                "{},{phase},{},{obj},{:.6},{}",
                k + 1,
                r.l,
                r.time.as_secs_f64(),
                r.status
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IterateError {
    #[error(transparent)]
    Layout(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("decoding the relaxation failed: {0}")]
    Decode(#[from] CodecError),
    #[error("decoded sequence is invalid: {0}")]
    Sequence(#[from] SequenceError),
    #[error("no complete retrieval exists under the height limit")]
    Infeasible,
    #[error("a zero starting bound cannot start the loop while blocks are badly placed")]
    ZeroStart,
    #[error("budget exhausted with no feasible sequence (lower bound {lower_bound})")]
    Budget { lower_bound: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IterateOptions {
    pub budget: Budget,
    /// Pass heuristic solutions, truncated to `L` relocations, as warm starts.
    pub warm_start: bool,
}

struct LoopEnd {
    /// Complete sequence from the last relaxation, when it closed the gap.
    sequence: Option<MoveSequence>,
    l: usize,
    proven: bool,
    nodes: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    c: &Configuration,
    h: Option<usize>,
    backend: &dyn Backend,
    mut l: usize,
    mut l_next: usize,
    phase: Phase,
    opts: &IterateOptions,
    trace: &mut IterationTrace,
) -> Result<LoopEnd, IterateError> {
    let cfg = c.clone().with_height_limit(h)?;
    let warm_source = if opts.warm_start {
        best_heuristic(&cfg).map(|s| s.sequence)
    } else {
        None
    };
    let mut last = None;
    let mut nodes = 0;
    while l < l_next {
        l = l_next;
        let model = build_brp_m3r(c, h, l)?;
        let warm = warm_source
            .as_ref()
            .filter(|s| s.relocation_count() >= l)
            .and_then(|s| encode_sequence(&model, s).ok());
        let start = Instant::now();
        let out = backend.solve(&model, warm.as_ref(), &opts.budget)?;
        nodes += out.nodes;
        trace.records.push(IterationRecord {
            phase,
            l,
            objective: out.objective,
            time: start.elapsed(),
            status: out.status,
        });
        match out.status {
            SolveStatus::Optimal => {
                let obj = out.objective.expect("optimal outcome carries an objective");
                l_next = obj.round() as usize;
                last = Some((model, out.assignment.expect("optimal outcome carries values")));
            }
            SolveStatus::Infeasible => return Err(IterateError::Infeasible),
            SolveStatus::Feasible | SolveStatus::Budget => {
                return Ok(LoopEnd {
                    sequence: None,
                    l,
                    proven: false,
                    nodes,
                });
            }
        }
    }
    let Some((model, a)) = last else {
        // The loop never ran: no relocation is needed.
        let (rest, prefix) = cfg.auto_retrieve();
        if !rest.is_empty() {
            return Err(IterateError::ZeroStart);
        }
        return Ok(LoopEnd {
            sequence: Some(MoveSequence::new(prefix)),
            l,
            proven: true,
            nodes,
        });
    };
    let mut seq = decode_assignment(&model, &a)?;
    let mut end = seq.replay(&cfg)?;
    seq.extend(end.auto_retrieve_in_place());
    seq.validate(&cfg)?;
    Ok(LoopEnd {
        sequence: Some(seq),
        l,
        proven: true,
        nodes,
    })
}

fn finish(
    c: &Configuration,
    end: LoopEnd,
    mut trace: IterationTrace,
) -> Result<(OptimalResult, IterationTrace), IterateError> {
    let (witness, proven) = match end.sequence {
        Some(seq) => (seq, end.proven),
        None => {
            let fallback = best_heuristic(c)
                .or_else(|| greedy_min_max(c).ok())
                .ok_or(IterateError::Budget { lower_bound: end.l })?;
            (fallback.sequence, false)
        }
    };
    trace.sequence = witness.clone();
    trace.proven = proven;
    let optimum = witness.relocation_count();
    Ok((
        OptimalResult {
            optimum,
            witness,
            nodes: end.nodes,
            proven,
            lower_bound: if proven { optimum } else { end.l },
        },
        trace,
    ))
}

fn empty_trace() -> IterationTrace {
    IterationTrace {
        records: Vec::new(),
        sequence: MoveSequence::default(),
        proven: false,
        exit: None,
    }
}

/// The iterative scheme. `l0` defaults to LB4. The result is proven when
/// every relaxation was solved to optimality.
pub fn run_is(
    c: &Configuration,
    h: Option<usize>,
    backend: &dyn Backend,
    l0: Option<usize>,
    opts: &IterateOptions,
) -> Result<(OptimalResult, IterationTrace), IterateError> {
    let cfg = c.clone().with_height_limit(h)?;
    let start = l0.unwrap_or_else(|| lb4(&cfg).value);
    let mut trace = empty_trace();
    let end = run_loop(c, h, backend, 0, start, Phase::Unlimited, opts, &mut trace)?;
    finish(&cfg, end, trace)
}

/// The height-aware scheme: iterate without the limit, return that solution
/// if it respects `h`, else try repairing it, else iterate again with the
/// limit starting from the unlimited optimum.
pub fn run_is_star(
    c: &Configuration,
    h: usize,
    backend: &dyn Backend,
    opts: &IterateOptions,
) -> Result<(OptimalResult, IterationTrace), IterateError> {
    let free = c.clone().with_height_limit(None)?;
    let limited = c.clone().with_height_limit(Some(h))?;
    let opts1 = IterateOptions {
        warm_start: true,
        ..*opts
    };
    let mut trace = empty_trace();
    let start = lb4(&free).value;
    let first = run_loop(c, None, backend, 0, start, Phase::Unlimited, &opts1, &mut trace)?;
    let l = first.l;
    let Some(sln1) = first.sequence.clone() else {
        return finish(&limited, first, trace);
    };
    if sln1.validate(&limited).is_ok() {
        trace.exit = Some(Exit::FirstPhase);
        return finish(&limited, first, trace);
    }
    if let Ok(sln2) = repair_height(&free, &sln1, h) {
        if sln2.relocation_count() == l && sln2.validate(&limited).is_ok() {
            trace.exit = Some(Exit::Repaired);
            let end = LoopEnd {
                sequence: Some(sln2),
                ..first
            };
            return finish(&limited, end, trace);
        }
    }
    let mut second = run_loop(c, Some(h), backend, 0, l, Phase::Limited, &opts1, &mut trace)?;
    second.proven &= first.proven;
    second.nodes += first.nodes;
    trace.exit = Some(Exit::SecondPhase);
    finish(&limited, second, trace)
}
