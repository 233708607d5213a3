//! Random instances, suite runner and CSV reports.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{all_bounds, BoundKind, Bounds};
use crate::config::{Block, Configuration, HeightMode};
use crate::heuristics::best_heuristic;
use crate::iterate::{run_is, run_is_star, IterateOptions};
use crate::mip::{build_brp_m3, build_brp_m3r, Backend, Budget, SolveStatus};
use crate::oracle::{solve_exact, solve_restricted, SearchLimits};

/// A uniformly random permutation of `1..=h*w` dealt into `w` stacks of
/// height `h`, bottom to top. Deterministic per seed.
pub fn generate_instance(seed: u64, h: usize, w: usize) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks: Vec<Block> = (1..=(h * w) as Block).collect();
    blocks.shuffle(&mut rng);
    Configuration::from_stacks(&blocks.chunks(h.max(1)).map(<[Block]>::to_vec).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Bounds,
    Oracle,
    M3,
    M3R,
    Is,
    IsStar,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Bounds,
        Method::Oracle,
        Method::M3,
        Method::M3R,
        Method::Is,
        Method::IsStar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Bounds => "bounds",
            Method::Oracle => "oracle",
            Method::M3 => "m3",
            Method::M3R => "m3r",
            Method::Is => "is",
            Method::IsStar => "is*",
        }
    }

    /// Methods that need a solver backend.
    pub fn uses_backend(&self) -> bool {
        matches!(self, Method::M3 | Method::M3R | Method::Is | Method::IsStar)
    }
}

impl FromStr for Method {
    type Err = SuiteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SuiteError::Value {
                key: "methods".into(),
                msg: format!("unknown method {s:?}"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    /// Stack height `a` of an `a-b` group.
    pub height: usize,
    /// Stack count `b`.
    pub stacks: usize,
    pub count: usize,
    pub seed: u64,
}

impl GroupSpec {
    pub fn label(&self) -> String {
        format!("{}-{}", self.height, self.stacks)
    }

    pub fn instances(&self) -> impl Iterator<Item = (u64, Configuration)> + '_ {
        (0..self.count as u64).map(move |k| {
            let seed = self.seed.wrapping_add(k);
            (seed, generate_instance(seed, self.height, self.stacks))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub groups: Vec<GroupSpec>,
    pub height: HeightMode,
    pub methods: Vec<Method>,
    pub budget: Budget,
}

impl Default for SuiteSpec {
    /// Groups small enough for the oracle to certify every instance.
    fn default() -> Self {
        let g = |height, stacks| GroupSpec {
            height,
            stacks,
            count: 20,
            seed: 1,
        };
        Self {
            groups: vec![g(2, 2), g(3, 3), g(3, 4), g(4, 4)],
            height: HeightMode::Unlimited,
            methods: vec![Method::Bounds, Method::Oracle],
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {msg}")]
    Value { key: String, msg: String },
}

fn parse_group(s: &str) -> Result<GroupSpec, SuiteError> {
    let bad = |msg: String| SuiteError::Value {
        key: "groups".into(),
        msg,
    };
    let parts: Vec<&str> = s.trim().split(':').collect();
    let (shape, count, seed) = match parts[..] {
        [shape] => (shape, "20", "1"),
        [shape, count] => (shape, count, "1"),
        [shape, count, seed] => (shape, count, seed),
        _ => return Err(bad(format!("{s:?} is not h-w[:count[:seed]]"))),
    };
    let (h, w) = shape
        .split_once('-')
        .ok_or_else(|| bad(format!("{shape:?} is not h-w")))?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad(format!("{x:?} is not a number")));
    let g = GroupSpec {
        height: num(h)?,
        stacks: num(w)?,
        count: num(count)?,
        seed: seed.trim().parse().map_err(|_| bad(format!("{seed:?} is not a seed")))?,
    };
    if g.height == 0 || g.stacks == 0 || g.count == 0 {
        return Err(bad(format!("{s:?} has a zero field")));
    }
    Ok(g)
}

impl FromStr for SuiteSpec {
    type Err = SuiteError;

    /// `key = value` lines; `#` starts a comment. Keys: `groups`
    /// (comma-separated `h-w[:count[:seed]]`), `height` (`none`, `plus2` or
    /// an integer), `methods`, `time_limit` (seconds per solve) and
    /// `node_budget`. Missing keys keep their defaults.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut spec = SuiteSpec::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(SuiteError::Syntax { line: k + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |msg: String| SuiteError::Value {
                key: key.to_string(),
                msg,
            };
            match key {
                "groups" => {
                    spec.groups = value.split(',').map(parse_group).collect::<Result<_, _>>()?;
                }
                "height" => spec.height = value.parse().map_err(|e: String| bad(e))?,
                "methods" => {
                    spec.methods = value.split(',').map(str::parse).collect::<Result<_, _>>()?;
                }
                "time_limit" => {
                    let s: f64 = value.parse().map_err(|_| bad(format!("{value:?}")))?;
                    spec.budget.time = Some(Duration::from_secs_f64(s));
                }
                "node_budget" => {
                    spec.budget.nodes = value.parse().map_err(|_| bad(format!("{value:?}")))?;
                }
                _ => return Err(SuiteError::UnknownKey(key.to_string())),
            }
        }
        Ok(spec)
    }
}

/// One method on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub case: String,
    pub seed: u64,
    pub height: Option<usize>,
    pub method: Method,
    pub feasible: bool,
    pub optimal: bool,
    /// Relocations of the returned sequence, or the relaxation value for m3r.
    pub value: Option<usize>,
    pub time: Duration,
    pub nodes: u64,
    pub bounds: Bounds,
    /// Certified optimum from any method, when one exists.
    pub opt: Option<usize>,
    pub error: Option<String>,
}

pub const INSTANCE_HEADER: &str =
    "case,seed,height,method,feasible,optimal,value,time_s,nodes,lb1,lb2,lb3,lbn,lb4,opt,error";

impl InstanceRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        let b = &self.bounds;
        format!(
            "{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{},{},{}",
            self.case,
            self.seed,
            self.height.map_or("none".to_string(), |h| h.to_string()),
            self.method.name(),
            self.feasible as u8,
            self.optimal as u8,
            opt(self.value),
            self.time.as_secs_f64(),
            self.nodes,
            b.lb1,
            b.lb2,
            b.lb3,
            b.lbn,
            b.lb4,
            opt(self.opt),
            self.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        )
    }
}

/// Gap statistics of one bound against known optima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    /// Mean of `(opt - lb) / opt` over instances with `opt > 0`.
    pub mean_relative: f64,
    pub max_absolute: usize,
    /// Share of instances where the bound equals the optimum.
    pub equal_share: f64,
}

/// One (group, method) aggregate line of a benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub case: String,
    pub height: String,
    pub method: Method,
    pub instances: usize,
    pub feasible: usize,
    pub optimal: usize,
    pub mean_time: f64,
    /// Mean time and nodes over the instances every selected method solved
    /// to optimality.
    pub mean_time_star: Option<f64>,
    pub mean_nodes_star: Option<f64>,
    /// Per bound, in the order LB1, LB2, LB3, LB-N, LB4; only on `bounds` rows.
    pub gaps: Option<[GapStats; 5]>,
}

pub const AGGREGATE_HEADER: &str = "case,height,method,instances,feasible,optimal,time_s,time_star_s,nodes_star,\
rgap_lb1,rgap_lb2,rgap_lb3,rgap_lbn,rgap_lb4,\
maxgap_lb1,maxgap_lb2,maxgap_lb3,maxgap_lbn,maxgap_lb4,\
eq_lb1,eq_lb2,eq_lb3,eq_lbn,eq_lb4";

impl AggregateRow {
    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        let mut s = format!(
            "{},{},{},{},{},{},{:.6},{},{}",
            self.case,
            self.height,
            self.method.name(),
            self.instances,
            self.feasible,
            self.optimal,
            self.mean_time,
            f(self.mean_time_star),
            f(self.mean_nodes_star),
        );
        match &self.gaps {
            Some(g) => {
                for x in g {
                    write!(s, ",{:.6}", x.mean_relative).unwrap();
                }
                for x in g {
                    write!(s, ",{}", x.max_absolute).unwrap();
                }
                for x in g {
                    write!(s, ",{:.6}", x.equal_share).unwrap();
                }
            }
            None => s.push_str(&",".repeat(15)),
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub instances: Vec<InstanceRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl SuiteReport {
    pub fn instances_csv(&self) -> String {
        let mut out = format!("{INSTANCE_HEADER}\n");
        for r in &self.instances {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        let mut out = format!("{AGGREGATE_HEADER}\n");
        for r in &self.aggregates {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }
}

fn limits(budget: &Budget) -> SearchLimits {
    SearchLimits {
        node_budget: budget.nodes,
        time_budget: budget.time,
        ..SearchLimits::default()
    }
}

struct Run {
    feasible: bool,
    optimal: bool,
    value: Option<usize>,
    nodes: u64,
    error: Option<String>,
}

impl Run {
    fn failed(e: impl ToString) -> Self {
        Run {
            feasible: false,
            optimal: false,
            value: None,
            nodes: 0,
            error: Some(e.to_string()),
        }
    }
}

fn run_method(
    method: Method,
    c: &Configuration,
    h: Option<usize>,
    budget: &Budget,
    backend: &dyn Backend,
) -> Run {
    let opts = IterateOptions {
        budget: *budget,
        warm_start: true,
    };
    let cfg = match c.clone().with_height_limit(h) {
        Ok(c) => c,
        Err(e) => return Run::failed(e),
    };
    match method {
        Method::Bounds => Run {
            feasible: false,
            optimal: false,
            value: None,
            nodes: 0,
            error: None,
        },
        Method::Oracle => match solve_exact(&cfg, &limits(budget)) {
            Ok(r) => Run {
                feasible: true,
                optimal: r.proven,
                value: Some(r.optimum),
                nodes: r.nodes,
                error: None,
            },
            Err(e) => Run::failed(e),
        },
        Method::M3 => {
            let t = solve_restricted(&cfg, &limits(budget))
                .map(|r| r.optimum)
                .ok()
                .or_else(|| best_heuristic(&cfg).map(|s| s.relocations));
            let Some(t) = t else {
                return Run::failed("no horizon: restricted search and heuristics failed");
            };
            let l = crate::bounds::lb4(&cfg).value.min(t);
            let model = match build_brp_m3(c, h, l, t) {
                Ok(m) => m,
                Err(e) => return Run::failed(e),
            };
            match backend.solve(&model, None, budget) {
                Ok(o) => Run {
                    feasible: o.assignment.is_some(),
                    optimal: o.status == SolveStatus::Optimal,
                    value: o.objective.map(|v| v.round() as usize),
                    nodes: o.nodes,
                    error: None,
                },
                Err(e) => Run::failed(e),
            }
        }
        Method::M3R => {
            let l = crate::bounds::lb4(&cfg).value;
            if l == 0 {
                return Run {
                    feasible: true,
                    optimal: true,
                    value: Some(cfg.auto_retrieve().0.direct_blockages()),
                    nodes: 0,
                    error: None,
                };
            }
            let model = match build_brp_m3r(c, h, l) {
                Ok(m) => m,
                Err(e) => return Run::failed(e),
            };
            match backend.solve(&model, None, budget) {
                Ok(o) => Run {
                    feasible: o.assignment.is_some(),
                    optimal: o.status == SolveStatus::Optimal,
                    value: o.objective.map(|v| v.round() as usize),
                    nodes: o.nodes,
                    error: None,
                },
                Err(e) => Run::failed(e),
            }
        }
        Method::Is | Method::IsStar => {
            let res = match (method, h) {
                (Method::IsStar, Some(h)) => run_is_star(c, h, backend, &opts),
                (Method::IsStar, None) => return Run::failed("is* needs a height limit"),
                _ => run_is(c, h, backend, None, &opts),
            };
            match res {
                Ok((r, _)) => Run {
                    feasible: true,
                    optimal: r.proven,
                    value: Some(r.optimum),
                    nodes: r.nodes,
                    error: None,
                },
                Err(e) => Run::failed(e),
            }
        }
    }
}

fn evaluate(
    case: &str,
    seed: u64,
    c: &Configuration,
    spec: &SuiteSpec,
    backend: &(dyn Backend + Sync),
) -> Vec<InstanceRow> {
    let h = spec.height.limit_for(c);
    let bounds = match c.clone().with_height_limit(h) {
        Ok(cfg) => all_bounds(&cfg),
        Err(_) => all_bounds(c),
    };
    let mut rows: Vec<InstanceRow> = spec
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let run = run_method(method, c, h, &spec.budget, backend);
            InstanceRow {
                case: case.to_string(),
                seed,
                height: h,
                method,
                feasible: run.feasible,
                optimal: run.optimal,
                value: run.value,
                time: start.elapsed(),
                nodes: run.nodes,
                bounds,
                opt: None,
                error: run.error,
            }
        })
        .collect();
    let opt = rows
        .iter()
        .find(|r| r.optimal && r.method != Method::M3R && r.method != Method::Bounds)
        .and_then(|r| r.value);
    for r in &mut rows {
        r.opt = opt;
    }
    rows
}

fn gap_stats(rows: &[&InstanceRow], kind: BoundKind) -> GapStats {
    let known: Vec<(usize, usize)> = rows
        .iter()
        .filter_map(|r| r.opt.map(|o| (o, r.bounds.get(kind))))
        .collect();
    let positive: Vec<f64> = known
        .iter()
        .filter(|(o, _)| *o > 0)
        .map(|&(o, lb)| (o as f64 - lb as f64) / o as f64)
        .collect();
    GapStats {
        mean_relative: if positive.is_empty() {
            0.0
        } else {
            positive.iter().sum::<f64>() / positive.len() as f64
        },
        max_absolute: known.iter().map(|&(o, lb)| o.saturating_sub(lb)).max().unwrap_or(0),
        equal_share: if known.is_empty() {
            0.0
        } else {
            known.iter().filter(|(o, lb)| o == lb).count() as f64 / known.len() as f64
        },
    }
}

/// Aggregates per (case, height regime, method), in first-seen order.
pub fn aggregate(rows: &[InstanceRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, String, Method)> = Vec::new();
    let height_label = |r: &InstanceRow| r.height.map_or("none".to_string(), |h| h.to_string());
    for r in rows {
        let k = (r.case.clone(), height_label(r), r.method);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    // Instances every solving method finished to optimality.
    let solved_by_all = |case: &str, seed: u64| {
        rows.iter()
            .filter(|r| r.case == case && r.seed == seed && r.method != Method::Bounds)
            .all(|r| r.optimal)
    };
    keys.into_iter()
        .map(|(case, height, method)| {
            let group: Vec<&InstanceRow> = rows
                .iter()
                .filter(|r| r.case == case && height_label(r) == height && r.method == method)
                .collect();
            let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
            let star: Vec<&&InstanceRow> = group.iter().filter(|r| solved_by_all(&case, r.seed)).collect();
            let times: Vec<f64> = group.iter().map(|r| r.time.as_secs_f64()).collect();
            let star_times: Vec<f64> = star.iter().map(|r| r.time.as_secs_f64()).collect();
            let star_nodes: Vec<f64> = star.iter().map(|r| r.nodes as f64).collect();
            let gaps = (method == Method::Bounds && group.iter().any(|r| r.opt.is_some())).then(|| {
                [
                    BoundKind::Lb1,
                    BoundKind::Lb2,
                    BoundKind::Lb3,
                    BoundKind::LbN,
                    BoundKind::Lb4,
                ]
                .map(|k| gap_stats(&group, k))
            });
            AggregateRow {
                instances: group.len(),
                feasible: group.iter().filter(|r| r.feasible).count(),
                optimal: group.iter().filter(|r| r.optimal).count(),
                mean_time: mean(&times).unwrap_or(0.0),
                mean_time_star: if method == Method::Bounds { None } else { mean(&star_times) },
                mean_nodes_star: if method == Method::Bounds { None } else { mean(&star_nodes) },
                gaps,
                case,
                height,
                method,
            }
        })
        .collect()
}

/// Runs every method on every instance. Failures become rows; the suite
/// never aborts.
pub fn run_suite(spec: &SuiteSpec, backend: &(dyn Backend + Sync)) -> SuiteReport {
    let work: Vec<(String, u64, Configuration)> = spec
        .groups
        .iter()
        .flat_map(|g| g.instances().map(move |(seed, c)| (g.label(), seed, c)))
        .collect();
    let per_instance: Vec<Vec<InstanceRow>> = work
        .par_iter()
        .map(|(case, seed, c)| evaluate(case, *seed, c, spec, backend))
        .collect();
    let instances: Vec<InstanceRow> = per_instance.into_iter().flatten().collect();
    let aggregates = aggregate(&instances);
    SuiteReport {
        instances,
        aggregates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::InternalBackend;

    #[test]
    fn one_by_one() {
        assert_eq!(generate_instance(7, 1, 1), Configuration::from_stacks(&[vec![1]]));
    }

    #[test]
    fn shape_and_determinism() {
        let a = generate_instance(42, 3, 3);
        assert_eq!(a, generate_instance(42, 3, 3));
        assert!(a.stacks().iter().all(|s| s.len() == 3));
        let mut all = a.blocks();
        all.sort_unstable();
        assert_eq!(all, (1..=9).collect::<Vec<Block>>());
        assert_ne!(a, generate_instance(43, 3, 3));
    }

    #[test]
    fn suite_spec_text() {
        let s: SuiteSpec = "# desk\ngroups = 2-2:5:3, 3-3\nheight = plus2\nmethods = bounds, is*\ntime_limit = 2.5\n"
            .parse()
            .unwrap();
        assert_eq!(s.groups.len(), 2);
        assert_eq!(s.groups[0], GroupSpec { height: 2, stacks: 2, count: 5, seed: 3 });
        assert_eq!(s.groups[1].count, 20);
        assert_eq!(s.height, HeightMode::PlusTwo);
        assert_eq!(s.methods, vec![Method::Bounds, Method::IsStar]);
        assert_eq!(s.budget.time, Some(Duration::from_millis(2500)));
        assert!("colour = red".parse::<SuiteSpec>().is_err());
        assert!("groups = 0-2".parse::<SuiteSpec>().is_err());
    }

    #[test]
    fn bounds_only_suite_has_no_gaps() {
        let spec = SuiteSpec {
            groups: vec![GroupSpec { height: 2, stacks: 2, count: 3, seed: 1 }],
            methods: vec![Method::Bounds],
            ..SuiteSpec::default()
        };
        let r = run_suite(&spec, &InternalBackend);
        assert_eq!(r.instances.len(), 3);
        assert_eq!(r.aggregates.len(), 1);
        assert!(r.aggregates[0].gaps.is_none());
        let csv = r.aggregates_csv();
        assert_eq!(csv.lines().next().unwrap(), AGGREGATE_HEADER);
        let cols = AGGREGATE_HEADER.split(',').count();
        assert!(csv.lines().all(|l| l.split(',').count() == cols));
    }

    #[test]
    fn small_suite_methods_agree() {
        let spec = SuiteSpec {
            groups: vec![GroupSpec { height: 2, stacks: 2, count: 6, seed: 11 }],
            height: HeightMode::PlusTwo,
            methods: vec![Method::Bounds, Method::Oracle, Method::M3, Method::Is, Method::IsStar],
            budget: Budget::default(),
        };
        let r = run_suite(&spec, &InternalBackend);
        for row in &r.instances {
            assert!(row.error.is_none(), "{row:?}");
            if row.method != Method::Bounds {
                assert!(row.optimal);
                assert_eq!(row.value, row.opt);
            }
        }
        let bounds = r.aggregates.iter().find(|a| a.method == Method::Bounds).unwrap();
        assert!(bounds.gaps.is_some());
    }
}
