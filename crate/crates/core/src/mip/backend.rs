//! Solver backends. Every assignment a backend returns has passed
//! [`check_assignment`].

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::check::check_assignment;
use super::codec::{encode_sequence, Assignment};
use super::lp::emit_lp;
use super::model::{Model, VarKind, Variant};
use crate::config::{Block, Configuration};
use crate::moves::{Move, MoveSequence};
use crate::oracle::{solve_exact, OracleError, SearchLimits};

/// Environment variable holding the external solver command template.
pub const SOLVER_CMD_ENV: &str = "BRP_SOLVER_CMD";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Budget,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Budget => "budget",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub time: Option<Duration>,
    pub nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            time: None,
            nodes: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// A certified lower bound on the optimum, when the backend has one.
    pub bound: Option<f64>,
    pub assignment: Option<Assignment>,
    pub backend: String,
    pub wall_time: Duration,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("solver exited with status {code:?}: {stderr}")]
    ToolFailed { code: Option<i32>, stderr: String },
    #[error("malformed solution file: {0}")]
    MalformedSolution(String),
    #[error("model not supported by this backend: {0}")]
    Unsupported(String),
    #[error("returned assignment violates {0}")]
    CheckFailed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub trait Backend {
    fn id(&self) -> &str;
    fn solve(
        &self,
        model: &Model,
        warm: Option<&Assignment>,
        budget: &Budget,
    ) -> Result<SolveOutcome, BackendError>;
}

/// Checks `a` against `m` and returns its objective.
fn certify(m: &Model, a: &Assignment) -> Result<f64, BackendError> {
    let report = check_assignment(m, a).map_err(|e| BackendError::MalformedSolution(e.to_string()))?;
    match report.violations.first() {
        None => Ok(report.objective),
        Some(v) => Err(BackendError::CheckFailed(format!(
            "{} ({}) and {} other row(s)",
            v.name,
            v.group,
            report.violations.len() - 1
        ))),
    }
}

/// Reference backend for models built by this crate. It solves the
/// underlying relocation problem by state-space search and encodes the result.
///
/// BRP-m3 is answered from the exact oracle, so it requires `L` to be at most
/// the optimum. BRP-m3R is searched directly with optional retrievals.
#[derive(Debug, Clone, Default)]
pub struct InternalBackend;

impl Backend for InternalBackend {
    fn id(&self) -> &str {
        "internal"
    }

    fn solve(
        &self,
        model: &Model,
        warm: Option<&Assignment>,
        budget: &Budget,
    ) -> Result<SolveOutcome, BackendError> {
        let start = Instant::now();
        let mut out = match model.meta.variant {
            Variant::M3 => solve_m3(model, budget)?,
            Variant::M3R => solve_m3r(model, warm, budget)?,
        };
        out.wall_time = start.elapsed();
        Ok(out)
    }
}

fn outcome(status: SolveStatus) -> SolveOutcome {
    SolveOutcome {
        status,
        objective: None,
        bound: None,
        assignment: None,
        backend: "internal".into(),
        wall_time: Duration::ZERO,
        nodes: 0,
    }
}

fn solve_m3(m: &Model, budget: &Budget) -> Result<SolveOutcome, BackendError> {
    let meta = &m.meta;
    let limits = SearchLimits {
        node_budget: budget.nodes,
        time_budget: budget.time,
        ..SearchLimits::default()
    };
    let res = match solve_exact(&meta.source, &limits) {
        Ok(r) => r,
        Err(OracleError::Infeasible) => return Ok(outcome(SolveStatus::Infeasible)),
        Err(OracleError::Budget { lower_bound }) => {
            let mut o = outcome(SolveStatus::Budget);
            o.bound = Some(lower_bound as f64);
            return Ok(o);
        }
        Err(e @ OracleError::TooLarge { .. }) => return Err(BackendError::Unsupported(e.to_string())),
    };
    let best = res.optimum;
    if res.proven && best < meta.l {
        return Err(BackendError::Unsupported(format!(
            "optimum {best} is below the forced relocation count L={}",
            meta.l
        )));
    }
    if res.proven && best > meta.t {
        let mut o = outcome(SolveStatus::Infeasible);
        o.nodes = res.nodes;
        return Ok(o);
    }
    if !res.proven && (res.lower_bound > meta.t || best > meta.t || best < meta.l) {
        let mut o = outcome(if res.lower_bound > meta.t {
            SolveStatus::Infeasible
        } else {
            SolveStatus::Budget
        });
        o.bound = Some(res.lower_bound as f64);
        o.nodes = res.nodes;
        return Ok(o);
    }
    let a = encode_sequence(m, &res.witness).map_err(|e| BackendError::Unsupported(e.to_string()))?;
    let objective = certify(m, &a)?;
    let mut o = outcome(if res.proven {
        SolveStatus::Optimal
    } else {
        SolveStatus::Feasible
    });
    o.objective = Some(objective);
    o.bound = Some(if res.proven { objective } else { res.lower_bound as f64 });
    o.assignment = Some(a);
    o.nodes = res.nodes;
    Ok(o)
}

/// Depth-first search for `rem` more relocations ending with at most `v`
/// direct blockages. One relocation changes the blockage count by at most
/// one, and a retrieval never changes it.
struct Relaxation {
    budget: Budget,
    start: Instant,
    nodes: u64,
    exhausted: bool,
    /// (canonical layout, turns left) to the largest `v` refuted from it.
    refuted: HashMap<(Vec<Vec<Block>>, usize), usize>,
    path: Vec<Move>,
}

impl Relaxation {
    fn over_budget(&mut self) -> bool {
        if self.nodes >= self.budget.nodes {
            self.exhausted = true;
        }
        if let Some(t) = self.budget.time {
            if self.nodes.is_multiple_of(256) && self.start.elapsed() >= t {
                self.exhausted = true;
            }
        }
        self.exhausted
    }

    fn reach(&mut self, c: &Configuration, rem: usize, v: usize) -> bool {
        let blockages = c.direct_blockages();
        if blockages > v + rem {
            return false;
        }
        if rem == 0 {
            return true;
        }
        let mut key_stacks = c.stacks().to_vec();
        key_stacks.sort_unstable();
        let key = (key_stacks, rem);
        if self.refuted.get(&key).is_some_and(|&w| w >= v) {
            return false;
        }
        self.nodes += 1;
        if self.over_budget() {
            return false;
        }
        let n = c.num_stacks();
        for from in 0..n {
            let Some(block) = c.top(from) else { continue };
            let mut empty_tried = false;
            for to in 0..n {
                if to == from || !c.has_room(to) {
                    continue;
                }
                if c.stack(to).is_empty() {
                    if empty_tried || c.stack(from).len() == 1 {
                        continue;
                    }
                    empty_tried = true;
                }
                let m = Move::Relocate { block, from, to };
                let next = c.apply_move(&m).expect("legal relocation");
                let (_, chain) = next.auto_retrieve();
                for k in (0..=chain.len()).rev() {
                    let mut state = next.clone();
                    for r in &chain[..k] {
                        state.apply_in_place(r).expect("exposed target");
                    }
                    let mark = self.path.len();
                    self.path.push(m);
                    self.path.extend_from_slice(&chain[..k]);
                    if self.reach(&state, rem - 1, v) {
                        return true;
                    }
                    self.path.truncate(mark);
                    if self.exhausted {
                        return false;
                    }
                }
            }
        }
        let w = self.refuted.entry(key).or_insert(v);
        *w = (*w).max(v);
        false
    }
}

fn solve_m3r(m: &Model, warm: Option<&Assignment>, budget: &Budget) -> Result<SolveOutcome, BackendError> {
    let meta = &m.meta;
    let l = meta.l as f64;
    // A warm start that passes the checker caps the search.
    let incumbent = warm.and_then(|a| certify(m, a).ok().map(|obj| (a.clone(), obj)));
    let cap = incumbent.as_ref().map(|(_, obj)| (obj - l).round() as usize);
    let mut search = Relaxation {
        budget: *budget,
        start: Instant::now(),
        nodes: 0,
        exhausted: false,
        refuted: HashMap::new(),
        path: Vec::new(),
    };
    for v in 0..=meta.blocks {
        if cap == Some(v) {
            let (a, obj) = incumbent.unwrap();
            let mut o = outcome(SolveStatus::Optimal);
            o.objective = Some(obj);
            o.bound = Some(obj);
            o.assignment = Some(a);
            o.nodes = search.nodes;
            return Ok(o);
        }
        search.path.clear();
        if search.reach(&meta.initial, meta.l, v) {
            let mut seq = MoveSequence::new(meta.prefix.clone());
            seq.extend(search.path.iter().copied());
            let a = encode_sequence(m, &seq).map_err(|e| BackendError::Unsupported(e.to_string()))?;
            let objective = certify(m, &a)?;
            let mut o = outcome(SolveStatus::Optimal);
            o.objective = Some(objective);
            o.bound = Some(objective);
            o.assignment = Some(a);
            o.nodes = search.nodes;
            return Ok(o);
        }
        if search.exhausted {
            let mut o = outcome(SolveStatus::Budget);
            o.bound = Some(l + v as f64);
            o.nodes = search.nodes;
            if let Some((a, obj)) = incumbent {
                o.status = SolveStatus::Feasible;
                o.objective = Some(obj);
                o.assignment = Some(a);
            }
            return Ok(o);
        }
    }
    let mut o = outcome(SolveStatus::Infeasible);
    o.nodes = search.nodes;
    Ok(o)
}

/// Runs an external command on the emitted LP file.
///
/// The template may use `{lp}`, `{sol}` and `{time}` (seconds) and is run
/// with `sh -c`. The command must write a solution file: a `status` line
/// (`optimal`, `feasible`, `infeasible` or `budget`), an optional
/// `objective` line, then one `name value` line per variable.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    template: String,
    keep_files: Option<PathBuf>,
}

impl ExternalBackend {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
            keep_files: None,
        }
    }

    /// Reads the template from [`SOLVER_CMD_ENV`].
    pub fn from_env() -> Result<Self, BackendError> {
        match std::env::var(SOLVER_CMD_ENV) {
            Ok(t) if !t.trim().is_empty() => Ok(Self::new(t)),
            _ => Err(BackendError::Unavailable(format!("{SOLVER_CMD_ENV} is not set"))),
        }
    }

    /// Writes the LP and solution files into `dir` instead of a temporary
    /// directory.
    pub fn keep_files_in(mut self, dir: impl Into<PathBuf>) -> Self {
        self.keep_files = Some(dir.into());
        self
    }
}

impl Backend for ExternalBackend {
    fn id(&self) -> &str {
        "external"
    }

    fn solve(
        &self,
        model: &Model,
        _warm: Option<&Assignment>,
        budget: &Budget,
    ) -> Result<SolveOutcome, BackendError> {
        let start = Instant::now();
        let io = |e: std::io::Error| BackendError::Io(e.to_string());
        let tmp;
        let dir = match &self.keep_files {
            Some(d) => {
                std::fs::create_dir_all(d).map_err(io)?;
                d.clone()
            }
            None => {
                tmp = tempfile::tempdir().map_err(io)?;
                tmp.path().to_path_buf()
            }
        };
        let lp = dir.join("model.lp");
        let sol = dir.join("model.sol");
        std::fs::write(&lp, emit_lp(model)).map_err(io)?;
        let _ = std::fs::remove_file(&sol);
        let secs = budget.time.map_or(1e9, |t| t.as_secs_f64());
        let cmd = self
            .template
            .replace("{lp}", &lp.display().to_string())
            .replace("{sol}", &sol.display().to_string())
            .replace("{time}", &format!("{secs}"));
        let output = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr).trim().to_string();
            return Err(match output.status.code() {
                Some(127) => BackendError::Unavailable(stderr),
                code => BackendError::ToolFailed { code, stderr },
            });
        }
        let text = std::fs::read_to_string(&sol)
            .map_err(|e| BackendError::MalformedSolution(format!("{}: {e}", sol.display())))?;
        let parsed = parse_solution(&text)?;
        let mut out = SolveOutcome {
            status: parsed.status,
            objective: None,
            bound: None,
            assignment: None,
            backend: "external".into(),
            wall_time: Duration::ZERO,
            nodes: 0,
        };
        if matches!(parsed.status, SolveStatus::Optimal | SolveStatus::Feasible)
            || (parsed.status == SolveStatus::Budget && !parsed.values.is_empty())
        {
            let a = complete_assignment(model, parsed.values)?;
            let objective = certify(model, &a)?;
            if parsed.status == SolveStatus::Budget {
                out.status = SolveStatus::Feasible;
            }
            out.objective = Some(objective);
            if out.status == SolveStatus::Optimal {
                out.bound = Some(objective);
            }
            out.assignment = Some(a);
        }
        out.wall_time = start.elapsed();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Assignment,
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, BackendError> {
    let bad = |msg: String| BackendError::MalformedSolution(msg);
    let mut status = None;
    let mut objective = None;
    let mut values = Assignment::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(key), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad(format!("line {}: expected `name value`", k + 1)));
        };
        match key {
            "status" => {
                status = Some(match val {
                    "optimal" => SolveStatus::Optimal,
                    "feasible" => SolveStatus::Feasible,
                    "infeasible" => SolveStatus::Infeasible,
                    "budget" => SolveStatus::Budget,
                    _ => return Err(bad(format!("line {}: unknown status {val:?}", k + 1))),
                })
            }
            _ => {
                let v: f64 = val
                    .parse()
                    .map_err(|_| bad(format!("line {}: {val:?} is not a number", k + 1)))?;
                if key == "objective" {
                    objective = Some(v);
                } else if values.insert(key.to_string(), v).is_some() {
                    return Err(bad(format!("line {}: {key} given twice", k + 1)));
                }
            }
        }
    }
    Ok(SolutionFile {
        status: status.ok_or_else(|| bad("no status line".into()))?,
        objective,
        values,
    })
}

/// Requires a value for every model variable and rounds binaries that lie
/// within 1e-5 of 0 or 1.
fn complete_assignment(m: &Model, mut values: Assignment) -> Result<Assignment, BackendError> {
    for v in &m.program.variables {
        let x = values
            .get_mut(&v.name)
            .ok_or_else(|| BackendError::MalformedSolution(format!("no value for {}", v.name)))?;
        if v.kind == VarKind::Binary {
            if x.abs() <= 1e-5 {
                *x = 0.0;
            } else if (*x - 1.0).abs() <= 1e-5 {
                *x = 1.0;
            }
        }
    }
    Ok(values)
}
