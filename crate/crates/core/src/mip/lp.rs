//! LP-format text for a [`Program`], and a reader for the same subset.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::model::{Constraint, Group, Model, Objective, Program, Sense, VarId, VarKind, Variable};

const TERMS_PER_LINE: usize = 8;

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn write_terms(out: &mut String, prog: &Program, terms: &[(VarId, f64)]) {
    for (k, &(v, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let mag = a.abs();
        let name = &prog.variables[v].name;
        if mag == 1.0 {
            write!(out, " {sign} {name}").unwrap();
        } else {
            write!(out, " {sign} {} {name}", num(mag)).unwrap();
        }
    }
}

/// Deterministic LP text: objective, named rows, bounds, binaries.
pub fn emit_lp(m: &Model) -> String {
    let meta = &m.meta;
    let mut out = String::new();
    writeln!(
        out,
        "\\ brp {} blocks={} stacks={} height={} L={} T={}",
        meta.variant,
        meta.blocks,
        meta.stacks,
        meta.height.map_or("none".to_string(), |h| h.to_string()),
        meta.l,
        meta.t
    )
    .unwrap();
    out.push_str(&emit_program(&m.program));
    out
}

pub fn emit_program(prog: &Program) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, prog, &prog.objective.terms);
    let c = prog.objective.constant;
    if c != 0.0 || prog.objective.terms.is_empty() {
        let sign = if c < 0.0 { '-' } else { '+' };
        write!(out, " {sign} {}", num(c.abs())).unwrap();
    }
    out.push_str("\nSubject To\n");
    for row in &prog.constraints {
        write!(out, " {}:", row.name).unwrap();
        write_terms(&mut out, prog, &row.terms);
        writeln!(out, " {} {}", row.sense.symbol(), num(row.rhs)).unwrap();
    }
    let bounded: Vec<&Variable> = prog
        .variables
        .iter()
        .filter(|v| matches!(v.kind, VarKind::Continuous { .. }))
        .collect();
    if !bounded.is_empty() {
        out.push_str("Bounds\n");
        for v in bounded {
            if let VarKind::Continuous { lower, upper } = v.kind {
                writeln!(out, " {} <= {} <= {}", num(lower), v.name, num(upper)).unwrap();
            }
        }
    }
    let binaries: Vec<&str> = prog
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            writeln!(out, " {}", chunk.join(" ")).unwrap();
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing section {0}")]
    MissingSection(&'static str),
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Bounds,
    Binaries,
}

struct Reader {
    prog: Program,
    index: HashMap<String, VarId>,
}

impl Reader {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = self.prog.variables.len();
        self.prog.variables.push(Variable {
            name: name.to_string(),
            kind: VarKind::Continuous {
                lower: 0.0,
                upper: f64::INFINITY,
            },
        });
        self.index.insert(name.to_string(), v);
        v
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> LpParseError {
    LpParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses `+ 3 x - y + 2` into terms and a constant.
fn parse_linear(r: &mut Reader, tokens: &[&str], line: usize) -> Result<(Vec<(VarId, f64)>, f64), LpParseError> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    // A number not yet attached to a variable.
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" | "-" => {
                if let Some(v) = coef.take() {
                    constant += sign * v;
                }
                sign = if tok == "-" { -1.0 } else { 1.0 };
            }
            _ => match tok.parse::<f64>() {
                Ok(v) if coef.is_none() => coef = Some(v),
                Ok(_) => return Err(syntax(line, format!("two numbers in a row at {tok:?}"))),
                Err(_) => {
                    let v = r.var(tok);
                    terms.push((v, sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            },
        }
    }
    if let Some(v) = coef {
        constant += sign * v;
    }
    Ok((terms, constant))
}

/// Reads LP text written by [`emit_program`]. Row groups come from row-name
/// prefixes.
pub fn parse_lp(text: &str) -> Result<Program, LpParseError> {
    let mut r = Reader {
        prog: Program::default(),
        index: HashMap::new(),
    };
    let mut section = Section::None;
    let mut seen_objective = false;
    let mut declared: Vec<VarId> = Vec::new();
    // Logical lines: a continuation starts with whitespace and no label.
    let mut logical: Vec<(usize, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lno = k + 1;
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let head = line.trim().to_ascii_lowercase();
        let is_header = matches!(
            head.as_str(),
            "minimize" | "minimise" | "subject to" | "bounds" | "binaries" | "binary" | "end"
        );
        let continuation = !is_header
            && line.starts_with("   ")
            && !line.trim().contains(':')
            && !logical.is_empty();
        if continuation {
            let last = logical.last_mut().unwrap();
            last.1.push(' ');
            last.1.push_str(line.trim());
        } else {
            logical.push((lno, line.trim().to_string()));
        }
    }
    for (lno, line) in logical {
        let lower = line.to_ascii_lowercase();
        match lower.as_str() {
            "minimize" | "minimise" => {
                section = Section::Objective;
                continue;
            }
            "subject to" => {
                section = Section::Rows;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" | "binary" => {
                section = Section::Binaries;
                continue;
            }
            "end" => break,
            _ => {}
        }
        match section {
            Section::None => return Err(syntax(lno, "text before the objective section")),
            Section::Objective => {
                let body = line.split_once(':').map_or(line.as_str(), |(_, b)| b);
                let toks: Vec<&str> = body.split_whitespace().collect();
                let (terms, constant) = parse_linear(&mut r, &toks, lno)?;
                r.prog.objective = Objective { constant, terms };
                seen_objective = true;
            }
            Section::Rows => {
                let (name, body) = line
                    .split_once(':')
                    .ok_or_else(|| syntax(lno, "row without a name"))?;
                let name = name.trim().to_string();
                let toks: Vec<&str> = body.split_whitespace().collect();
                let pos = toks
                    .iter()
                    .position(|t| matches!(*t, "<=" | "=" | ">=" | "=<" | "=>"))
                    .ok_or_else(|| syntax(lno, "row without a sense"))?;
                let sense = match toks[pos] {
                    "<=" | "=<" => Sense::Le,
                    ">=" | "=>" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let (terms, constant) = parse_linear(&mut r, &toks[..pos], lno)?;
                let rhs_toks = &toks[pos + 1..];
                let rhs: f64 = rhs_toks
                    .join("")
                    .parse()
                    .map_err(|_| syntax(lno, "right-hand side must be a number"))?;
                let prefix = name.split('_').next().unwrap_or("");
                let group = Group::from_prefix(prefix)
                    .ok_or_else(|| syntax(lno, format!("unknown row group {prefix:?}")))?;
                r.prog.constraints.push(Constraint {
                    name,
                    group,
                    terms,
                    sense,
                    rhs: rhs - constant,
                });
            }
            Section::Bounds => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 5 || toks[1] != "<=" || toks[3] != "<=" {
                    return Err(syntax(lno, "bounds must read `lo <= name <= hi`"));
                }
                let lower: f64 = toks[0].parse().map_err(|_| syntax(lno, "bad lower bound"))?;
                let upper: f64 = toks[4].parse().map_err(|_| syntax(lno, "bad upper bound"))?;
                let v = r.var(toks[2]);
                r.prog.variables[v].kind = VarKind::Continuous { lower, upper };
                declared.push(v);
            }
            Section::Binaries => {
                for name in line.split_whitespace() {
                    let v = r.var(name);
                    r.prog.variables[v].kind = VarKind::Binary;
                    declared.push(v);
                }
            }
        }
    }
    if !seen_objective {
        return Err(LpParseError::MissingSection("Minimize"));
    }
    Ok(declaration_order(r.prog, &declared))
}

/// Renumbers variables: bounded ones, then binaries, each in declaration
/// order, then any never declared. Term order inside rows is kept.
fn declaration_order(mut prog: Program, declared: &[VarId]) -> Program {
    let n = prog.variables.len();
    let mut order: Vec<VarId> = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    for v in declared.iter().copied().chain(0..n) {
        if !placed[v] {
            placed[v] = true;
            order.push(v);
        }
    }
    let mut new_id = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        new_id[v] = k;
    }
    let remap = |terms: &mut Vec<(VarId, f64)>| {
        for t in terms.iter_mut() {
            t.0 = new_id[t.0];
        }
    };
    remap(&mut prog.objective.terms);
    for c in &mut prog.constraints {
        remap(&mut c.terms);
    }
    prog.variables = order.into_iter().map(|v| prog.variables[v].clone()).collect();
    prog
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Configuration;
    use crate::mip::model::build_brp_m3;

    #[test]
    fn one_variable_program() {
        let prog = Program {
            variables: vec![Variable {
                name: "a".into(),
                kind: VarKind::Binary,
            }],
            constraints: vec![Constraint {
                name: "X2_1_1_1".into(),
                group: Group::X2,
                terms: vec![(0, 2.0)],
                sense: Sense::Ge,
                rhs: 1.0,
            }],
            objective: Objective {
                constant: 0.0,
                terms: vec![(0, 1.0)],
            },
        };
        let text = emit_program(&prog);
        assert_eq!(
            text,
            "Minimize\n obj: + a\nSubject To\n X2_1_1_1: + 2 a >= 1\nBinaries\n a\nEnd\n"
        );
        assert!(parse_lp(&text).unwrap().equivalent(&prog));
    }

    #[test]
    fn tiny_model_round_trips() {
        let c = Configuration::from_stacks(&[vec![1, 2], vec![]]);
        let m = build_brp_m3(&c, Some(3), 1, 2).unwrap();
        let text = emit_lp(&m);
        assert_eq!(text, emit_lp(&m));
        let back = parse_lp(&text).unwrap();
        assert!(back.equivalent(&m.program));
    }

    #[test]
    fn objective_constant_survives() {
        let prog = Program {
            variables: vec![Variable {
                name: "x_2_1_1".into(),
                kind: VarKind::Binary,
            }],
            constraints: vec![],
            objective: Objective {
                constant: 3.0,
                terms: vec![(0, 1.0)],
            },
        };
        let back = parse_lp(&emit_program(&prog)).unwrap();
        assert_eq!(back.objective.constant, 3.0);
        assert!(back.equivalent(&prog));
    }

    #[test]
    fn bad_rows_are_rejected() {
        let e = parse_lp("Minimize\n obj: + a\nSubject To\n Q1_1: + a <= 1\nEnd\n").unwrap_err();
        assert!(matches!(e, LpParseError::Syntax { line: 4, .. }));
        assert_eq!(
            parse_lp("Subject To\nEnd\n").unwrap_err(),
            LpParseError::MissingSection("Minimize")
        );
        assert!(matches!(
            parse_lp("x_1_2_1\nMinimize\n").unwrap_err(),
            LpParseError::Syntax { line: 1, .. }
        ));
    }
}
