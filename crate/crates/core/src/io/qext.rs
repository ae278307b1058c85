use std::collections::BTreeSet;
use std::fmt::Write;

use super::{err, tokens, IoError, Token};
use crate::formula::{Atom, Clause, Lit, QuantifiedFormula, Semantics, Var};

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dialect {
    Qext,
    Qdimacs,
}

/// A parsed QEXT file: the formula plus its comment lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QextDocument {
    pub formula: QuantifiedFormula,
    pub comments: Vec<String>,
}

impl QextDocument {
    pub fn parse(text: &str) -> Result<QextDocument, IoError> {
        parse_prenex(text, Dialect::Qext)
    }

    /// Canonical text: header, comments, `a` line, `e` line, clauses in
    /// matrix order. Empty blocks are omitted.
    pub fn serialize(&self) -> String {
        let f = &self.formula;
        let has_const = f.matrix().iter().any(Clause::has_constant);
        let mut out = format!("p qext {} {} {}", f.max_var(), f.matrix().len(), f.semantics());
        if f.constants_allowed() && !has_const {
            out.push_str(" const");
        }
        out.push('\n');
        for c in &self.comments {
            if c.is_empty() {
                out.push_str("c\n");
            } else {
                let _ = writeln!(out, "c {c}");
            }
        }
        write_body(&mut out, f, |a| match a {
            Atom::Lit(l) => l.to_dimacs().to_string(),
            Atom::Const(true) => "T".into(),
            Atom::Const(false) => "F".into(),
        });
        out
    }
}

pub(crate) fn write_body(out: &mut String, f: &QuantifiedFormula, atom: impl Fn(Atom) -> String) {
    for (tag, block) in [("a", f.universals()), ("e", f.existentials())] {
        if !block.is_empty() {
            out.push_str(tag);
            for v in block {
                let _ = write!(out, " {}", v.id());
            }
            out.push_str(" 0\n");
        }
    }
    for c in f.matrix() {
        for &a in c.atoms() {
            out.push_str(&atom(a));
            out.push(' ');
        }
        out.push_str("0\n");
    }
}

pub fn parse_qext(text: &str) -> Result<QuantifiedFormula, IoError> {
    Ok(QextDocument::parse(text)?.formula)
}

pub fn serialize_qext(formula: &QuantifiedFormula) -> String {
    QextDocument {
        formula: formula.clone(),
        comments: Vec::new(),
    }
    .serialize()
}

struct Header {
    line: usize,
    nvars: u32,
    nclauses: usize,
    nclauses_column: usize,
    semantics: Semantics,
    constants: bool,
}

fn parse_header(line: usize, toks: &[Token], dialect: Dialect) -> Result<Header, IoError> {
    let want = match dialect {
        Dialect::Qext => "qext",
        Dialect::Qdimacs => "cnf",
    };
    let bad = |column: usize, what: &str| err(line, column, format!("malformed header: {what}"));
    match toks.get(1) {
        Some(t) if t.text == want => {}
        Some(t) => return Err(bad(t.column, &format!("expected `{want}`, found `{}`", t.text))),
        None => return Err(bad(toks[0].column, &format!("expected `p {want} ...`"))),
    }
    let number = |i: usize, what: &str| -> Result<u64, IoError> {
        let t = toks.get(i).ok_or_else(|| bad(toks[toks.len() - 1].column, &format!("missing {what}")))?;
        t.text
            .parse::<u64>()
            .map_err(|_| bad(t.column, &format!("{what} `{}` is not a non-negative integer", t.text)))
    };
    let nvars = number(2, "variable count")?;
    let nvars = u32::try_from(nvars).map_err(|_| bad(toks[2].column, "variable count too large"))?;
    let nclauses = number(3, "clause count")? as usize;
    let mut semantics = Semantics::Sat;
    let mut constants = false;
    let mut rest = toks[4..].iter();
    if dialect == Dialect::Qext {
        let t = rest.next().ok_or_else(|| bad(toks[3].column, "missing semantics tag"))?;
        semantics = match t.text {
            "sat" => Semantics::Sat,
            "nae" => Semantics::Nae,
            other => return Err(bad(t.column, &format!("semantics `{other}` is not sat or nae"))),
        };
        if let Some(t) = rest.clone().next() {
            if t.text == "const" {
                constants = true;
                rest.next();
            }
        }
    }
    if let Some(t) = rest.next() {
        return Err(bad(t.column, &format!("unexpected token `{}`", t.text)));
    }
    Ok(Header {
        line,
        nvars,
        nclauses,
        nclauses_column: toks[3].column,
        semantics,
        constants,
    })
}

/// Splits off the terminating `0`.
fn zero_terminated<'a, 'b>(line: usize, toks: &'b [Token<'a>], what: &str) -> Result<&'b [Token<'a>], IoError> {
    match toks.split_last() {
        Some((last, body)) if last.text == "0" => Ok(body),
        Some((last, _)) => Err(err(line, last.column + last.text.len(), format!("{what} is not terminated by 0"))),
        None => Err(err(line, 1, format!("empty {what}"))),
    }
}

fn variable(line: usize, t: &Token, nvars: u32) -> Result<i64, IoError> {
    let n: i64 = t
        .text
        .parse()
        .map_err(|_| err(line, t.column, format!("`{}` is not an integer literal", t.text)))?;
    if n == 0 {
        return Err(err(line, t.column, "0 may only terminate a line"));
    }
    if n.unsigned_abs() > u64::from(nvars) {
        return Err(err(line, t.column, format!("variable {} exceeds the declared count {nvars}", n.abs())));
    }
    Ok(n)
}

pub(crate) fn parse_prenex(text: &str, dialect: Dialect) -> Result<QextDocument, IoError> {
    let mut comments = Vec::new();
    let mut header: Option<Header> = None;
    let mut universals = Vec::new();
    let mut existentials = Vec::new();
    let mut declared = BTreeSet::new();
    let mut seen_e = false;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut first_const_line = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks = tokens(raw);
        let Some(first) = toks.first() else { continue };
        if first.text == "c" {
            let body = raw.trim_start().strip_prefix('c').unwrap_or("");
            comments.push(body.strip_prefix(' ').unwrap_or(body).trim_end().to_string());
            continue;
        }
        if first.text == "p" {
            if header.is_some() {
                return Err(err(line, first.column, "second header line"));
            }
            header = Some(parse_header(line, &toks, dialect)?);
            continue;
        }
        let Some(h) = &header else {
            return Err(err(line, first.column, "expected the `p` header before any other line"));
        };
        if first.text == "a" || first.text == "e" {
            let universal = first.text == "a";
            if !clauses.is_empty() {
                return Err(err(line, first.column, "quantifier line after the first clause"));
            }
            if universal && seen_e {
                return Err(err(line, first.column, "universal block after the existential block"));
            }
            seen_e |= !universal;
            for t in zero_terminated(line, &toks[1..], "quantifier line")? {
                let n = variable(line, t, h.nvars)?;
                if n < 0 {
                    return Err(err(line, t.column, "quantified variables must be positive"));
                }
                let v = Var::new(n as u32);
                if !declared.insert(v) {
                    return Err(err(line, t.column, format!("variable {n} declared twice")));
                }
                if universal {
                    universals.push(v);
                } else {
                    existentials.push(v);
                }
            }
            continue;
        }
        let body = zero_terminated(line, &toks, "clause")?;
        if body.is_empty() {
            return Err(err(line, first.column, "empty clause"));
        }
        if body.len() > Clause::MAX_LEN {
            return Err(err(
                line,
                body[Clause::MAX_LEN].column,
                format!("clause has {} atoms; at most 3 are allowed", body.len()),
            ));
        }
        let mut atoms = Vec::with_capacity(body.len());
        for t in body {
            let atom = match (t.text, dialect) {
                ("T" | "F", Dialect::Qext) => {
                    if h.semantics == Semantics::Sat {
                        return Err(err(line, t.column, "constants are not allowed in a sat-semantics file"));
                    }
                    first_const_line.get_or_insert((line, t.column));
                    Atom::Const(t.text == "T")
                }
                _ => {
                    let n = variable(line, t, h.nvars)?;
                    let v = Var::new(n.unsigned_abs() as u32);
                    if !declared.contains(&v) {
                        return Err(err(line, t.column, format!("variable {} is not declared", n.abs())));
                    }
                    Atom::from(Lit::new(v, n < 0))
                }
            };
            atoms.push(atom);
        }
        if clauses.len() == h.nclauses {
            return Err(err(line, first.column, format!("more clauses than the {} declared", h.nclauses)));
        }
        clauses.push(Clause::new(atoms)?);
    }

    let h = header.ok_or_else(|| err(1, 1, "missing `p` header"))?;
    if clauses.len() != h.nclauses {
        return Err(err(
            h.line,
            h.nclauses_column,
            format!("header declares {} clauses, found {}", h.nclauses, clauses.len()),
        ));
    }
    if let (Some((line, column)), false) = (first_const_line, universals.is_empty()) {
        return Err(err(line, column, "constants are only allowed without universal variables"));
    }
    if h.constants && !universals.is_empty() {
        return Err(err(h.line, 1, "`const` formulas cannot have universal variables"));
    }
    let mut formula = QuantifiedFormula::new(universals, existentials, clauses, h.semantics)?;
    if h.constants {
        formula = formula.with_constants_allowed(true)?;
    }
    Ok(QextDocument { formula, comments })
}
