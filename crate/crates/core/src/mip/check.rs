//! Literal constraint-by-constraint check of an assignment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::codec::Assignment;
use super::model::{Group, Model, Sense, VarKind};

pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Row name, or the variable name for a domain violation.
    pub name: String,
    pub group: Group,
    pub lhs: f64,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
    pub objective: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn groups(&self) -> BTreeSet<Group> {
        self.violations.iter().map(|v| v.group).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("assignment has no value for variable {0}")]
    MissingVariable(String),
}

fn domain_group(name: &str) -> Group {
    match name.split('_').next() {
        Some("x") => Group::X5,
        Some("ym") | Some("yp") => Group::X6,
        Some("z") => Group::X7,
        _ => Group::U3,
    }
}

pub fn check_assignment(m: &Model, a: &Assignment) -> Result<FeasibilityReport, CheckError> {
    let prog = &m.program;
    let values: Vec<f64> = prog
        .variables
        .iter()
        .map(|v| {
            a.get(&v.name)
                .copied()
                .ok_or_else(|| CheckError::MissingVariable(v.name.clone()))
        })
        .collect::<Result<_, _>>()?;

    let mut violations = Vec::new();
    for (v, &x) in prog.variables.iter().zip(&values) {
        let (ok, lo, hi) = match v.kind {
            VarKind::Binary => (
                x.abs() <= TOLERANCE || (x - 1.0).abs() <= TOLERANCE,
                0.0,
                1.0,
            ),
            VarKind::Continuous { lower, upper } => (
                x >= lower - TOLERANCE && x <= upper + TOLERANCE,
                lower,
                upper,
            ),
        };
        if !ok {
            violations.push(Violation {
                name: v.name.clone(),
                group: domain_group(&v.name),
                lhs: x,
                sense: if x < lo { Sense::Ge } else { Sense::Le },
                rhs: if x < lo { lo } else { hi },
            });
        }
    }
    for row in &prog.constraints {
        let lhs: f64 = row.terms.iter().map(|&(v, c)| c * values[v]).sum();
        let ok = match row.sense {
            Sense::Le => lhs <= row.rhs + TOLERANCE,
            Sense::Ge => lhs >= row.rhs - TOLERANCE,
            Sense::Eq => (lhs - row.rhs).abs() <= TOLERANCE,
        };
        if !ok {
            violations.push(Violation {
                name: row.name.clone(),
                group: row.group,
                lhs,
                sense: row.sense,
                rhs: row.rhs,
            });
        }
    }
    let objective = prog.objective.constant
        + prog
            .objective
            .terms
            .iter()
            .map(|&(v, c)| c * values[v])
            .sum::<f64>();
    Ok(FeasibilityReport {
        violations,
        objective,
    })
}
