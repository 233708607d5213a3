use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use anyhow::anyhow;
use serde_json::json;

use brp_core::bench::{generate_instance, run_suite, SuiteSpec};
use brp_core::bounds::{bound_with, BoundKind, BoundOptions, BoundReport};
use brp_core::heuristics::best_heuristic;
use brp_core::io::{parse_instance_with, parse_moves, serialize_instance, serialize_moves, ParseOptions};
use brp_core::iterate::{run_is, run_is_star, IterateError, IterateOptions};
use brp_core::mip::{
    build_brp_m3, build_brp_m3r, decode_assignment, emit_lp, Backend, BackendError, Budget,
    ExternalBackend, InternalBackend, Model, ModelError, SolveStatus,
};
use brp_core::oracle::{solve_exact, solve_restricted, OracleError, SearchLimits};
use brp_core::{Configuration, MoveSequence};

use crate::output::{render, Record};
use crate::{BackendArgs, BackendKind, BudgetArgs, Cli, Command, InstanceArgs, SolveMethod, VariantArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Other = 1,
    Usage = 2,
    Parse = 3,
    Infeasible = 4,
    Backend = 5,
    Budget = 6,
    Io = 7,
}

pub struct Failure {
    pub code: Code,
    pub error: anyhow::Error,
}

fn fail(code: Code, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

type Res<T> = Result<T, Failure>;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| fail(Code::Io, anyhow!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| fail(Code::Io, anyhow!("{}: {e}", path.display())))
}

/// The instance with its height limit applied.
fn load(inst: &InstanceArgs) -> Res<Configuration> {
    let text = read(&inst.instance)?;
    let c = parse_instance_with(
        &text,
        ParseOptions {
            renumber: inst.renumber,
        },
    )
    .map_err(|e| fail(Code::Parse, anyhow!("{}: {e}", inst.instance.display())))?;
    inst.height
        .apply(c)
        .map_err(|e| fail(Code::Infeasible, e))
}

fn budget(b: &BudgetArgs) -> Budget {
    Budget {
        time: b.time_limit.map(Duration::from_secs_f64),
        nodes: b.node_budget,
    }
}

fn limits(b: &BudgetArgs) -> SearchLimits {
    SearchLimits {
        node_budget: b.node_budget,
        time_budget: b.time_limit.map(Duration::from_secs_f64),
        ..SearchLimits::default()
    }
}

fn backend(b: &BackendArgs) -> Res<Box<dyn Backend + Sync>> {
    match b.backend {
        BackendKind::Internal => Ok(Box::new(InternalBackend)),
        BackendKind::External => {
            let ext = match &b.solver_cmd {
                Some(t) => ExternalBackend::new(t.clone()),
                None => ExternalBackend::from_env().map_err(|e| fail(Code::Backend, e))?,
            };
            Ok(Box::new(ext))
        }
    }
}

fn oracle_failure(e: OracleError) -> Failure {
    let code = match e {
        OracleError::Infeasible => Code::Infeasible,
        OracleError::Budget { .. } => Code::Budget,
        OracleError::TooLarge { .. } => Code::Other,
    };
    fail(code, e)
}

fn model_failure(e: ModelError) -> Failure {
    let code = match e {
        ModelError::HorizonTooShort { .. } => Code::Usage,
        ModelError::TriviallyInfeasible(_) => Code::Infeasible,
        _ => Code::Other,
    };
    fail(code, e)
}

fn backend_failure(e: BackendError) -> Failure {
    fail(Code::Backend, e)
}

fn out(cli: &Cli, human: &str, records: &[Record]) {
    print!("{}", render(cli.format, human, records));
}

fn moves_inline(seq: &MoveSequence) -> String {
    seq.moves()
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn record(pairs: Vec<(&str, serde_json::Value)>) -> Record {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn run(cli: &Cli) -> Res<()> {
    match &cli.command {
        Command::Bounds {
            inst,
            certificates,
            keep_retrievable,
            continue_after_miss,
        } => bounds(cli, inst, *certificates, *keep_retrievable, *continue_after_miss),
        Command::Oracle {
            inst,
            budget,
            restricted,
            moves_out,
        } => oracle(cli, inst, budget, *restricted, moves_out.as_deref()),
        Command::Solve {
            inst,
            method,
            backend,
            budget,
            l,
            t,
            trace,
            moves_out,
        } => solve(cli, inst, *method, backend, budget, *l, *t, trace.as_deref(), moves_out.as_deref()),
        Command::Emit {
            inst,
            variant,
            l,
            t,
            budget,
            output,
        } => emit(inst, *variant, *l, *t, budget, output.as_deref()),
        Command::Validate { inst, moves } => validate(cli, inst, moves),
        Command::Bench {
            suite,
            methods,
            height,
            time_limit,
            node_budget,
            backend: b,
            instances_out,
            output,
        } => {
            let mut spec = match suite {
                Some(p) => read(p)?
                    .parse::<SuiteSpec>()
                    .map_err(|e| fail(Code::Parse, anyhow!("{}: {e}", p.display())))?,
                None => SuiteSpec::default(),
            };
            if let Some(m) = methods {
                spec.methods = m
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| fail(Code::Usage, e))?;
            }
            if let Some(h) = height {
                spec.height = *h;
            }
            if let Some(t) = time_limit {
                spec.budget.time = Some(Duration::from_secs_f64(*t));
            }
            if let Some(n) = node_budget {
                spec.budget.nodes = *n;
            }
            let be: Box<dyn Backend + Sync> = if spec.methods.iter().any(|m| m.uses_backend()) {
                backend(b)?
            } else {
                Box::new(InternalBackend)
            };
            let report = run_suite(&spec, be.as_ref());
            if let Some(p) = instances_out {
                write(p, &report.instances_csv())?;
            }
            let text = match cli.format {
                crate::output::Format::JsonLines => report
                    .aggregates
                    .iter()
                    .map(|a| format!("{}\n", serde_json::to_string(a).unwrap()))
                    .collect(),
                _ => report.aggregates_csv(),
            };
            match output {
                Some(p) => write(p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Gen {
            rows,
            stacks,
            seed,
            count,
            out,
        } => {
            if *rows == 0 || *stacks == 0 {
                return Err(fail(Code::Usage, anyhow!("--rows and --stacks must be positive")));
            }
            match out {
                None => {
                    for k in 0..*count as u64 {
                        print!("{}", serialize_instance(&generate_instance(seed + k, *rows, *stacks)));
                    }
                }
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| fail(Code::Io, e))?;
                    for k in 0..*count as u64 {
                        let s = seed + k;
                        let path = dir.join(format!("{rows}-{stacks}-{s}.dat"));
                        write(&path, &serialize_instance(&generate_instance(s, *rows, *stacks)))?;
                    }
                }
            }
            Ok(())
        }
    }
}

fn certificate(r: &BoundReport) -> String {
    let join = |xs: &[u32]| xs.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ");
    let mut parts = vec![format!("bp={}", join(&r.bp_set))];
    if r.top_layers > 0 {
        parts.push(format!("top_layers={}", r.top_layers));
    }
    for o in &r.overlapped {
        parts.push(format!(
            "overlapped=upper {} / lower {} / shared {}",
            join(&o.upper.blocks()),
            join(&o.lower.blocks()),
            o.shared
        ));
    }
    for l in &r.layers {
        parts.push(format!("layer={}", join(&l.blocks())));
    }
    if let Some(b) = &r.blocking_set {
        parts.push(format!("blocking={}", join(b)));
    }
    parts.join("; ")
}

fn bounds(cli: &Cli, inst: &InstanceArgs, certs: bool, keep: bool, cont: bool) -> Res<()> {
    let c = load(inst)?;
    let opts = BoundOptions {
        keep_retrievable: keep,
        continue_after_miss: cont,
    };
    let kinds = [BoundKind::Lb1, BoundKind::Lb2, BoundKind::Lb3, BoundKind::LbN, BoundKind::Lb4];
    let reports: Vec<BoundReport> = kinds
        .iter()
        .map(|&k| bound_with(&c, k, &opts))
        .collect();
    let mut human = String::new();
    for r in &reports {
        writeln!(human, "{} {}", r.kind, r.value).unwrap();
        if certs && r.kind == BoundKind::Lb4 {
            for part in certificate(r).split("; ") {
                writeln!(human, "  {part}").unwrap();
            }
        }
    }
    let records: Vec<Record> = reports
        .iter()
        .map(|r| {
            record(vec![
                ("bound", json!(r.kind.to_string())),
                ("value", json!(r.value)),
                ("certificate", json!(certificate(r))),
            ])
        })
        .collect();
    out(cli, &human, &records);
    Ok(())
}

fn oracle(cli: &Cli, inst: &InstanceArgs, b: &BudgetArgs, restricted: bool, moves_out: Option<&Path>) -> Res<()> {
    let c = load(inst)?;
    let res = if restricted {
        solve_restricted(&c, &limits(b))
    } else {
        solve_exact(&c, &limits(b))
    }
    .map_err(oracle_failure)?;
    let status = if res.proven { "optimal" } else { "feasible" };
    let mut human = format!("{status} {}\n", res.optimum);
    if !res.proven {
        writeln!(human, "lower bound {}", res.lower_bound).unwrap();
    }
    human.push_str(&serialize_moves(&res.witness));
    let records = vec![record(vec![
        ("status", json!(status)),
        ("relocations", json!(res.optimum)),
        ("lower_bound", json!(res.lower_bound)),
        ("nodes", json!(res.nodes)),
        ("moves", json!(moves_inline(&res.witness))),
    ])];
    if let Some(p) = moves_out {
        write(p, &serialize_moves(&res.witness))?;
    }
    out(cli, &human, &records);
    Ok(())
}

/// T for BRP-m3: the restricted optimum, else the best heuristic count.
fn default_horizon(c: &Configuration, b: &BudgetArgs) -> Res<usize> {
    solve_restricted(c, &limits(b))
        .map(|r| r.optimum)
        .ok()
        .or_else(|| best_heuristic(c).map(|h| h.relocations))
        .ok_or_else(|| fail(Code::Budget, anyhow!("no horizon: restricted search and heuristics failed")))
}

fn build(c: &Configuration, variant: VariantArg, l: Option<usize>, t: Option<usize>, b: &BudgetArgs) -> Res<Model> {
    let h = c.height_limit();
    let lb = || brp_core::bounds::lb4(c).value;
    match variant {
        VariantArg::M3 => {
            let t = match t {
                Some(t) => t,
                None => default_horizon(c, b)?,
            };
            let l = l.unwrap_or_else(|| lb().min(t));
            build_brp_m3(c, h, l, t).map_err(model_failure)
        }
        VariantArg::M3r => {
            if t.is_some() {
                return Err(fail(Code::Usage, anyhow!("--T applies to m3 only; m3r uses T = L")));
            }
            build_brp_m3r(c, h, l.unwrap_or_else(lb)).map_err(model_failure)
        }
    }
}

fn emit(inst: &InstanceArgs, variant: VariantArg, l: Option<usize>, t: Option<usize>, b: &BudgetArgs, output: Option<&Path>) -> Res<()> {
    let c = load(inst)?;
    let model = build(&c, variant, l, t, b)?;
    let text = emit_lp(&model);
    match output {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn iterate_failure(e: IterateError) -> Failure {
    let code = match e {
        IterateError::Backend(_) => Code::Backend,
        IterateError::Infeasible | IterateError::Layout(_) => Code::Infeasible,
        IterateError::Budget { .. } => Code::Budget,
        IterateError::ZeroStart => Code::Usage,
        _ => Code::Other,
    };
    fail(code, e)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    cli: &Cli,
    inst: &InstanceArgs,
    method: SolveMethod,
    b: &BackendArgs,
    budget_args: &BudgetArgs,
    l: Option<usize>,
    t: Option<usize>,
    trace_out: Option<&Path>,
    moves_out: Option<&Path>,
) -> Res<()> {
    let c = load(inst)?;
    let be = backend(b)?;
    let bud = budget(budget_args);
    let (status, value, lower, seq, iterations) = match method {
        SolveMethod::M3 | SolveMethod::M3r => {
            let variant = if method == SolveMethod::M3 { VariantArg::M3 } else { VariantArg::M3r };
            if method == SolveMethod::M3r && l == Some(0) {
                let blockages = c.auto_retrieve().0.direct_blockages();
                let human = format!("relaxation {blockages}\ndegenerate L=0: direct blockages {blockages}\n");
                let records = vec![record(vec![
                    ("status", json!("optimal")),
                    ("value", json!(blockages)),
                    ("L", json!(0)),
                ])];
                out(cli, &human, &records);
                return Ok(());
            }
            let model = build(&c, variant, l, t, budget_args)?;
            let o = be.solve(&model, None, &bud).map_err(backend_failure)?;
            match o.status {
                SolveStatus::Infeasible => {
                    return Err(fail(Code::Infeasible, anyhow!("model is infeasible (L={}, T={})", model.meta.l, model.meta.t)))
                }
                SolveStatus::Budget => return Err(fail(Code::Budget, anyhow!("budget exhausted without a solution"))),
                _ => {}
            }
            let a = o.assignment.as_ref().expect("feasible outcome carries values");
            let seq = decode_assignment(&model, a).map_err(|e| fail(Code::Backend, e))?;
            let value = o.objective.unwrap_or_default().round() as usize;
            let lower = o.bound.map(|v| v.round() as usize);
            (o.status, value, lower, seq, None)
        }
        SolveMethod::Is | SolveMethod::IsStar => {
            let opts = IterateOptions {
                budget: bud,
                warm_start: true,
            };
            let res = match (method, c.height_limit()) {
                (SolveMethod::IsStar, Some(h)) => run_is_star(&c, h, be.as_ref(), &opts),
                (SolveMethod::IsStar, None) => {
                    return Err(fail(Code::Usage, anyhow!("is* needs --height plus2 or an integer")))
                }
                _ => run_is(&c, c.height_limit(), be.as_ref(), l, &opts),
            };
            let (r, trace) = res.map_err(iterate_failure)?;
            if let Some(p) = trace_out {
                write(p, &trace.to_csv())?;
            }
            let status = if r.proven { SolveStatus::Optimal } else { SolveStatus::Feasible };
            (status, r.optimum, Some(r.lower_bound), r.witness, Some(trace.records.len()))
        }
    };
    let label = if method == SolveMethod::M3r { "relaxation" } else { "" };
    let mut human = if label.is_empty() {
        format!("{status} {value}\n")
    } else {
        format!("{label} {value}\nstatus {status}\n")
    };
    if status != SolveStatus::Optimal {
        if let Some(lb) = lower {
            writeln!(human, "lower bound {lb}").unwrap();
        }
    }
    if let Some(k) = iterations {
        writeln!(human, "iterations {k}").unwrap();
    }
    human.push_str(&serialize_moves(&seq));
    let mut rec = record(vec![
        ("status", json!(status.to_string())),
        ("value", json!(value)),
        ("lower_bound", json!(lower)),
        ("moves", json!(moves_inline(&seq))),
    ]);
    if let Some(k) = iterations {
        rec.insert("iterations".into(), json!(k));
    }
    if let Some(p) = moves_out {
        write(p, &serialize_moves(&seq))?;
    }
    out(cli, &human, &[rec]);
    Ok(())
}

fn validate(cli: &Cli, inst: &InstanceArgs, moves: &Path) -> Res<()> {
    let c = load(inst)?;
    let seq = parse_moves(&read(moves)?)
        .map_err(|e| fail(Code::Parse, anyhow!("{}: {e}", moves.display())))?;
    let n = seq.validate(&c).map_err(|e| fail(Code::Infeasible, e))?;
    let human = format!("valid {n}\n");
    let records = vec![record(vec![("valid", json!(true)), ("relocations", json!(n))])];
    out(cli, &human, &records);
    Ok(())
}
