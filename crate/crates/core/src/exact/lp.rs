//! Minimal LP-format writer and reader.
//!
//! The emitted subset of the CPLEX LP text format is: an objective under
//! `Minimize`, named constraint rows under `Subject To`, a `Binary` section
//! and `End`. Continuous variables use the format's default bounds
//! `0 <= x < +inf`, which is exactly what the downstream/coverage variables
//! need, so no `Bounds` section is written. The reader accepts exactly this
//! subset (plus `\` comment lines) and is used for round-trip checks.

use std::fmt::Write as _;

use super::ExactError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpOp {
    Le,
    Ge,
    Eq,
}

impl LpOp {
    fn symbol(self) -> &'static str {
        match self {
            LpOp::Le => "<=",
            LpOp::Ge => ">=",
            LpOp::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpConstraint {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub op: LpOp,
    pub rhs: f64,
}

/// A linear program in the order it is written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LpFile {
    pub name: String,
    pub objective: Vec<(f64, String)>,
    pub constraints: Vec<LpConstraint>,
    pub binaries: Vec<String>,
}

fn write_terms(out: &mut String, terms: &[(f64, String)]) {
    for (idx, (coef, var)) in terms.iter().enumerate() {
        if idx == 0 {
            if *coef < 0.0 {
                let _ = write!(out, "- {} {}", -coef, var);
            } else {
                let _ = write!(out, "{coef} {var}");
            }
        } else if *coef < 0.0 {
            let _ = write!(out, " - {} {}", -coef, var);
        } else {
            let _ = write!(out, " + {coef} {var}");
        }
    }
}

pub fn render(lp: &LpFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", lp.name);
    out.push_str("Minimize\n obj: ");
    write_terms(&mut out, &lp.objective);
    out.push_str("\nSubject To\n");
    for c in &lp.constraints {
        let _ = write!(out, " {}: ", c.name);
        write_terms(&mut out, &c.terms);
        let _ = writeln!(out, " {} {}", c.op.symbol(), c.rhs);
    }
    out.push_str("Binary\n");
    for b in &lp.binaries {
        let _ = writeln!(out, " {b}");
    }
    out.push_str("End\n");
    out
}

fn parse_terms(text: &str) -> Result<Vec<(f64, String)>, ExactError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in text.split_whitespace() {
        match tok {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(v) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(ExactError::Parse(format!(
                            "two consecutive numbers in term list: {tok}"
                        )));
                    }
                    coef = Some(v);
                } else {
                    terms.push((sign * coef.unwrap_or(1.0), tok.to_string()));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(ExactError::Parse("dangling coefficient".into()));
    }
    Ok(terms)
}

/// Parse a file previously produced by [`render`].
pub fn parse(text: &str) -> Result<LpFile, ExactError> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Objective,
        Constraints,
        Binary,
        Done,
    }
    let mut section = Section::Preamble;
    let mut name = String::new();
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    let mut binaries = Vec::new();

    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('\\') {
            if name.is_empty() {
                name = comment.trim().to_string();
            }
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "minimize" | "min" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "s.t." | "st" => {
                section = Section::Constraints;
                continue;
            }
            "binary" | "binaries" | "bin" => {
                section = Section::Binary;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Preamble | Section::Done => {
                return Err(ExactError::Parse(format!("unexpected line: {line}")));
            }
            Section::Objective => {
                let body = line
                    .split_once(':')
                    .map(|(_, b)| b)
                    .unwrap_or(line);
                objective.extend(parse_terms(body)?);
            }
            Section::Constraints => {
                let (cname, body) = line.split_once(':').ok_or_else(|| {
                    ExactError::Parse(format!("constraint without a name: {line}"))
                })?;
                let (op, op_pos, op_len) = ["<=", ">=", "="]
                    .iter()
                    .find_map(|sym| body.find(sym).map(|p| (*sym, p, sym.len())))
                    .ok_or_else(|| {
                        ExactError::Parse(format!("constraint without an operator: {line}"))
                    })?;
                let lhs = &body[..op_pos];
                let rhs: f64 = body[op_pos + op_len..].trim().parse().map_err(|_| {
                    ExactError::Parse(format!("bad right-hand side in: {line}"))
                })?;
                constraints.push(LpConstraint {
                    name: cname.trim().to_string(),
                    terms: parse_terms(lhs)?,
                    op: match op {
                        "<=" => LpOp::Le,
                        ">=" => LpOp::Ge,
                        _ => LpOp::Eq,
                    },
                    rhs,
                });
            }
            Section::Binary => {
                binaries.push(line.to_string());
            }
        }
    }
    if section != Section::Done {
        return Err(ExactError::Parse("missing End marker".into()));
    }
    Ok(LpFile {
        name,
        objective,
        constraints,
        binaries,
    })
}
