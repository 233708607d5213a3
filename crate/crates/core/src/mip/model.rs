//! The abstract integer program and the BRP-m3 / BRP-m3R builders.
//!
//! Blocks are indexed `1..=n` in priority order after all exposed targets are
//! retrieved; index `n + 1` is the floor. Turn 0 is the initial layout and its
//! adjacency values are substituted as constants.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Block, ConfigError, Configuration};
use crate::moves::Move;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// Constraint family. `X5`, `X6`, `X7` and `U3` are variable domains; they
/// only appear in feasibility reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    X2,
    X3,
    X4,
    X5,
    X6,
    X7,
    Ym1,
    Ym2,
    Ym3,
    Ym4,
    Yp1,
    Yp2,
    Yp3,
    Yp4,
    Yp5,
    Yp6,
    Z1,
    Z2,
    U1,
    U2,
    U3,
}

impl Group {
    pub const ALL: [Group; 21] = [
        Group::X2,
        Group::X3,
        Group::X4,
        Group::X5,
        Group::X6,
        Group::X7,
        Group::Ym1,
        Group::Ym2,
        Group::Ym3,
        Group::Ym4,
        Group::Yp1,
        Group::Yp2,
        Group::Yp3,
        Group::Yp4,
        Group::Yp5,
        Group::Yp6,
        Group::Z1,
        Group::Z2,
        Group::U1,
        Group::U2,
        Group::U3,
    ];

    /// Row-name prefix, e.g. `Ym4`.
    pub fn prefix(&self) -> &'static str {
        match self {
            Group::X2 => "X2",
            Group::X3 => "X3",
            Group::X4 => "X4",
            Group::X5 => "X5",
            Group::X6 => "X6",
            Group::X7 => "X7",
            Group::Ym1 => "Ym1",
            Group::Ym2 => "Ym2",
            Group::Ym3 => "Ym3",
            Group::Ym4 => "Ym4",
            Group::Yp1 => "Yp1",
            Group::Yp2 => "Yp2",
            Group::Yp3 => "Yp3",
            Group::Yp4 => "Yp4",
            Group::Yp5 => "Yp5",
            Group::Yp6 => "Yp6",
            Group::Z1 => "Z1",
            Group::Z2 => "Z2",
            Group::U1 => "U1",
            Group::U2 => "U2",
            Group::U3 => "U3",
        }
    }

    pub fn from_prefix(p: &str) -> Option<Group> {
        Group::ALL.into_iter().find(|g| g.prefix() == p)
    }
}

impl fmt::Display for Group {
    /// Tag form, e.g. `Ym-4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prefix();
        let split = p.len() - 1;
        write!(f, "{}-{}", &p[..split], &p[split..])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub group: Group,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

/// A minimisation problem over named variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

impl Program {
    pub fn var_index(&self) -> HashMap<&str, VarId> {
        self.variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect()
    }

    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Name-keyed comparison, insensitive to variable order.
    pub fn equivalent(&self, other: &Program) -> bool {
        let kinds = |p: &Program| -> BTreeMap<String, String> {
            p.variables
                .iter()
                .map(|v| (v.name.clone(), format!("{:?}", v.kind)))
                .collect()
        };
        let named = |p: &Program, terms: &[(VarId, f64)]| -> Vec<(String, String)> {
            let mut t: Vec<(String, String)> = terms
                .iter()
                .map(|&(v, a)| (p.variables[v].name.clone(), format!("{a}")))
                .collect();
            t.sort();
            t
        };
        let rows = |p: &Program| -> Vec<String> {
            p.constraints
                .iter()
                .map(|c| {
                    format!(
                        "{}|{:?}|{:?}|{}|{}",
                        c.name,
                        c.group,
                        named(p, &c.terms),
                        c.sense.symbol(),
                        c.rhs
                    )
                })
                .collect()
        };
        kinds(self) == kinds(other)
            && rows(self) == rows(other)
            && self.objective.constant == other.objective.constant
            && named(self, &self.objective.terms) == named(other, &other.objective.terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    M3,
    M3R,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::M3 => "m3",
            Variant::M3R => "m3r",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m3" => Ok(Variant::M3),
            "m3r" => Ok(Variant::M3R),
            _ => Err(format!("unknown variant {s:?}; expected m3 or m3r")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub variant: Variant,
    pub blocks: usize,
    pub stacks: usize,
    pub height: Option<usize>,
    pub l: usize,
    pub t: usize,
    /// The instance as given.
    pub source: Configuration,
    /// Retrievals that turn `source` into `initial`.
    pub prefix: Vec<Move>,
    /// Turn-0 layout, with the height limit applied.
    pub initial: Configuration,
}

impl ModelMeta {
    pub fn offset(&self) -> Block {
        self.initial.retrieved_up_to()
    }

    pub fn floor(&self) -> usize {
        self.blocks + 1
    }

    pub fn index_of(&self, b: Block) -> usize {
        (b - self.offset()) as usize
    }

    pub fn block_of(&self, i: usize) -> Block {
        i as Block + self.offset()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub meta: ModelMeta,
    pub program: Program,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("horizon T={t} is shorter than the lower bound L={l}")]
    HorizonTooShort { l: usize, t: usize },
    #[error("priorities must be consecutive after retrieval; renumber the instance")]
    NotCanonical,
    #[error("degenerate L=0: the relaxation reduces to counting direct blockages ({blockages})")]
    Degenerate { blockages: usize },
    #[error("row {0} is constant and violated; the horizon admits no solution")]
    TriviallyInfeasible(String),
    #[error(transparent)]
    Layout(#[from] ConfigError),
}

pub fn x_name(i: usize, j: usize, t: usize) -> String {
    format!("x_{i}_{j}_{t}")
}
pub fn ym_name(i: usize, j: usize, t: usize) -> String {
    format!("ym_{i}_{j}_{t}")
}
pub fn yp_name(i: usize, j: usize, t: usize) -> String {
    format!("yp_{i}_{j}_{t}")
}
pub fn z_name(i: usize, j: usize, t: usize) -> String {
    format!("z_{i}_{j}_{t}")
}
pub fn u_name(i: usize, t: usize) -> String {
    format!("u_{i}_{t}")
}

/// `C_ij`: 1 when block `i` rests directly on `j` (floor = `n + 1`).
pub(crate) fn adjacency(meta: &ModelMeta) -> Vec<Vec<u8>> {
    let n = meta.blocks;
    let mut c = vec![vec![0u8; n + 2]; n + 2];
    for st in meta.initial.stacks() {
        for (d, &b) in st.iter().enumerate() {
            let i = meta.index_of(b);
            let j = if d == 0 { n + 1 } else { meta.index_of(st[d - 1]) };
            c[i][j] = 1;
        }
    }
    c
}

/// Linear expression with a constant part.
#[derive(Default, Clone)]
struct Expr {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl Expr {
    fn add(&mut self, e: Term, coef: f64) {
        match e {
            Term::Var(v) => self.terms.push((v, coef)),
            Term::Const(k) => self.constant += coef * k,
        }
    }
}

#[derive(Clone, Copy)]
enum Term {
    Var(VarId),
    Const(f64),
}

struct Builder {
    meta: ModelMeta,
    c: Vec<Vec<u8>>,
    prog: Program,
    index: HashMap<String, VarId>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind) {
        self.index.insert(name.clone(), self.prog.variables.len());
        self.prog.variables.push(Variable { name, kind });
    }

    fn v(&self, name: &str) -> Term {
        Term::Var(self.index[name])
    }

    fn x(&self, i: usize, j: usize, t: usize) -> Term {
        if t == 0 {
            Term::Const(self.c[i][j] as f64)
        } else {
            self.v(&x_name(i, j, t))
        }
    }

    fn row(&mut self, name: String, group: Group, lhs: Expr, sense: Sense, rhs: Expr) -> Result<(), ModelError> {
        let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, a) in lhs.terms {
            *acc.entry(v).or_default() += a;
        }
        for (v, a) in rhs.terms {
            *acc.entry(v).or_default() -= a;
        }
        let terms: Vec<(VarId, f64)> = acc.into_iter().filter(|&(_, a)| a != 0.0).collect();
        let rhs = rhs.constant - lhs.constant;
        if terms.is_empty() {
            let ok = match sense {
                Sense::Le => 0.0 <= rhs,
                Sense::Eq => rhs == 0.0,
                Sense::Ge => 0.0 >= rhs,
            };
            return if ok {
                Ok(())
            } else {
                Err(ModelError::TriviallyInfeasible(name))
            };
        }
        self.prog.constraints.push(Constraint {
            name,
            group,
            terms,
            sense,
            rhs,
        });
        Ok(())
    }
}

fn k(v: f64) -> Expr {
    Expr {
        terms: Vec::new(),
        constant: v,
    }
}

fn prepare(
    c: &Configuration,
    h: Option<usize>,
    variant: Variant,
    l: usize,
    t: usize,
) -> Result<ModelMeta, ModelError> {
    let source = c.clone().with_height_limit(h)?;
    let (initial, prefix) = source.auto_retrieve();
    if !initial.is_canonical() {
        return Err(ModelError::NotCanonical);
    }
    Ok(ModelMeta {
        variant,
        blocks: initial.num_blocks(),
        stacks: initial.num_stacks(),
        height: h,
        l,
        t,
        source,
        prefix,
        initial,
    })
}

/// BRP-m3 over turns `1..=t`, with exactly one relocation in each of the
/// first `l` turns.
pub fn build_brp_m3(c: &Configuration, h: Option<usize>, l: usize, t: usize) -> Result<Model, ModelError> {
    if t < l {
        return Err(ModelError::HorizonTooShort { l, t });
    }
    let meta = prepare(c, h, Variant::M3, l, t)?;
    build(meta)
}

/// BRP-m3R over exactly `l` turns. `l == 0` is rejected as degenerate.
pub fn build_brp_m3r(c: &Configuration, h: Option<usize>, l: usize) -> Result<Model, ModelError> {
    let meta = prepare(c, h, Variant::M3R, l, l)?;
    if l == 0 {
        return Err(ModelError::Degenerate {
            blockages: meta.initial.direct_blockages(),
        });
    }
    build(meta)
}

fn build(meta: ModelMeta) -> Result<Model, ModelError> {
    let n = meta.blocks;
    let fl = n + 1;
    let big_t = meta.t;
    let l = meta.l;
    let m3 = meta.variant == Variant::M3;
    let mut b = Builder {
        c: adjacency(&meta),
        meta,
        prog: Program::default(),
        index: HashMap::new(),
    };
    let blocks = 1..=n;
    let others = |i: usize| (1..=fl).filter(move |&j| j != i);

    for t in 1..=big_t {
        for i in blocks.clone() {
            for j in others(i) {
                b.var(x_name(i, j, t), VarKind::Binary);
            }
        }
        for i in blocks.clone() {
            for j in others(i) {
                b.var(ym_name(i, j, t), VarKind::Binary);
            }
        }
        for i in blocks.clone() {
            for j in others(i) {
                b.var(yp_name(i, j, t), VarKind::Binary);
            }
        }
        for i in blocks.clone() {
            for j in i + 1..=fl {
                b.var(z_name(i, j, t), VarKind::Binary);
            }
        }
        if let Some(h) = b.meta.height {
            for i in blocks.clone() {
                b.var(
                    u_name(i, t),
                    VarKind::Continuous {
                        lower: 0.0,
                        upper: (h - 1) as f64,
                    },
                );
            }
        }
    }

    // Objective.
    if m3 {
        for t in 1..=big_t {
            for i in blocks.clone() {
                for j in others(i) {
                    let v = b.index[&yp_name(i, j, t)];
                    b.prog.objective.terms.push((v, 1.0));
                }
            }
        }
    } else {
        b.prog.objective.constant = l as f64;
        for i in blocks.clone() {
            for j in 1..i {
                let v = b.index[&x_name(i, j, l)];
                b.prog.objective.terms.push((v, 1.0));
            }
        }
    }

    for t in 1..=big_t {
        // X-2 and X-3: adjacency dynamics.
        for i in blocks.clone() {
            for j in others(i) {
                let mut lhs = Expr::default();
                lhs.add(b.x(i, j, t), 1.0);
                let mut rhs = Expr::default();
                rhs.add(b.x(i, j, t - 1), 1.0);
                rhs.add(b.v(&ym_name(i, j, t)), -1.0);
                rhs.add(b.v(&yp_name(i, j, t)), 1.0);
                let group = if j < i {
                    Group::X2
                } else {
                    rhs.add(b.v(&z_name(i, j, t)), -1.0);
                    Group::X3
                };
                b.row(format!("{}_{i}_{j}_{t}", group.prefix()), group, lhs, Sense::Eq, rhs)?;
            }
        }
    }

    if m3 {
        for i in blocks.clone() {
            for j in others(i) {
                let mut lhs = Expr::default();
                lhs.add(b.x(i, j, big_t), 1.0);
                b.row(format!("X4_{i}_{j}_{big_t}"), Group::X4, lhs, Sense::Eq, k(0.0))?;
            }
        }
    }

    for t in 1..=big_t {
        let all_y = |b: &Builder, name: fn(usize, usize, usize) -> String, t: usize| {
            let mut e = Expr::default();
            for i in 1..=n {
                for j in (1..=fl).filter(|&j| j != i) {
                    e.add(b.v(&name(i, j, t)), 1.0);
                }
            }
            e
        };
        // Y-1 / Y-2 for lift-ups, then lift-downs.
        for (name, g1, g2) in [
            (ym_name as fn(usize, usize, usize) -> String, Group::Ym1, Group::Ym2),
            (yp_name, Group::Yp1, Group::Yp2),
        ] {
            if t <= l {
                let lhs = all_y(&b, name, t);
                b.row(format!("{}_{t}", g1.prefix()), g1, lhs, Sense::Eq, k(1.0))?;
            } else if t > 1 && m3 {
                let lhs = all_y(&b, name, t);
                let rhs = all_y(&b, name, t - 1);
                b.row(format!("{}_{t}", g2.prefix()), g2, lhs, Sense::Le, rhs)?;
            }
        }

        // Y-3: lift only from the block directly below.
        for i in blocks.clone() {
            for j in others(i) {
                let mut lhs = Expr::default();
                lhs.add(b.v(&ym_name(i, j, t)), 1.0);
                let mut rhs = Expr::default();
                rhs.add(b.x(i, j, t - 1), 1.0);
                b.row(format!("Ym3_{i}_{j}_{t}"), Group::Ym3, lhs, Sense::Le, rhs)?;
            }
        }
        // Y-4: lift only a topmost block.
        for i in blocks.clone() {
            let mut lhs = Expr::default();
            let mut rhs = Expr::default();
            for j in others(i) {
                lhs.add(b.v(&ym_name(i, j, t)), 1.0);
                rhs.add(b.x(i, j, t - 1), 1.0);
            }
            for j in blocks.clone().filter(|&j| j != i) {
                rhs.add(b.x(j, i, t - 1), -1.0);
            }
            b.row(format!("Ym4_{i}_{t}"), Group::Ym4, lhs, Sense::Le, rhs)?;
        }
        // Y+-3: the lifted block is the one put down.
        for i in blocks.clone() {
            let mut lhs = Expr::default();
            let mut rhs = Expr::default();
            for j in others(i) {
                lhs.add(b.v(&yp_name(i, j, t)), 1.0);
                rhs.add(b.v(&ym_name(i, j, t)), 1.0);
            }
            b.row(format!("Yp3_{i}_{t}"), Group::Yp3, lhs, Sense::Eq, rhs)?;
        }
        // Y+-4: never put down where the lift happened.
        for j in 1..=fl {
            let mut lhs = Expr::default();
            let mut rhs = k(1.0);
            for i in blocks.clone().filter(|&i| i != j) {
                lhs.add(b.v(&yp_name(i, j, t)), 1.0);
                rhs.add(b.v(&ym_name(i, j, t)), -1.0);
            }
            b.row(format!("Yp4_{j}_{t}"), Group::Yp4, lhs, Sense::Le, rhs)?;
        }
        // Y+-5: put down only on a topmost block.
        for j in blocks.clone() {
            let mut lhs = Expr::default();
            let mut rhs = Expr::default();
            for i in blocks.clone().filter(|&i| i != j) {
                lhs.add(b.v(&yp_name(i, j, t)), 1.0);
                rhs.add(b.x(i, j, t - 1), -1.0);
            }
            for i in others(j) {
                rhs.add(b.x(j, i, t - 1), 1.0);
            }
            b.row(format!("Yp5_{j}_{t}"), Group::Yp5, lhs, Sense::Le, rhs)?;
        }
        // Y+-6: the floor holds at most S stacks.
        {
            let mut lhs = Expr::default();
            let mut rhs = k(b.meta.stacks as f64);
            for i in blocks.clone() {
                lhs.add(b.v(&yp_name(i, fl, t)), 1.0);
                rhs.add(b.x(i, fl, t - 1), -1.0);
            }
            b.row(format!("Yp6_{t}"), Group::Yp6, lhs, Sense::Le, rhs)?;
        }
        // Z-1: retrieve only a present block with no later block on it.
        for i in blocks.clone() {
            let mut lhs = Expr::default();
            let mut rhs = Expr::default();
            for j in i + 1..=fl {
                lhs.add(b.v(&z_name(i, j, t)), 1.0);
            }
            for j in others(i) {
                rhs.add(b.x(i, j, t - 1), 1.0);
            }
            for j in i + 1..=n {
                rhs.add(b.x(j, i, t - 1), -1.0);
                rhs.add(b.v(&ym_name(j, i, t)), 1.0);
                rhs.add(b.v(&yp_name(j, i, t)), -1.0);
            }
            b.row(format!("Z1_{i}_{t}"), Group::Z1, lhs, Sense::Le, rhs)?;
        }
        // Z-2: retrieval follows priority order.
        for i in 2..=n {
            let mut lhs = Expr::default();
            let mut rhs = Expr::default();
            for tp in 1..=t {
                for j in i + 1..=fl {
                    lhs.add(b.v(&z_name(i, j, tp)), 1.0);
                }
                for j in i..=fl {
                    rhs.add(b.v(&z_name(i - 1, j, tp)), 1.0);
                }
            }
            b.row(format!("Z2_{i}_{t}"), Group::Z2, lhs, Sense::Le, rhs)?;
        }
        // U-1 and U-2: stack heights.
        if let Some(h) = b.meta.height {
            let hf = h as f64;
            for i in blocks.clone() {
                let mut lhs = Expr::default();
                lhs.add(b.v(&u_name(i, t)), 1.0);
                b.row(format!("U1_{i}_{t}"), Group::U1, lhs, Sense::Le, k(hf - 1.0))?;
            }
            for i in blocks.clone() {
                for j in blocks.clone().filter(|&j| j != i) {
                    let mut lhs = Expr::default();
                    lhs.add(b.v(&u_name(i, t)), 1.0);
                    let mut rhs = k(1.0 - hf);
                    rhs.add(b.v(&u_name(j, t)), 1.0);
                    rhs.add(b.x(i, j, t), hf);
                    b.row(format!("U2_{i}_{j}_{t}"), Group::U2, lhs, Sense::Ge, rhs)?;
                }
            }
        }
    }

    Ok(Model {
        meta: b.meta,
        program: b.prog,
    })
}

/// Binary variable count implied by the variable definitions:
/// `T * (3 n^2 + n (n + 1) / 2)`.
pub fn expected_binary_count(n: usize, t: usize) -> usize {
    t * (3 * n * n + n * (n + 1) / 2)
}
