use std::fs;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use qbforge::deciders::{decide_poly, VerdictAnswer, POLY_CLASSES};
use qbforge::formula::{validate_class, ClassSpec, Semantics};
use qbforge::gadgets::{build_named, verify_contract, GadgetKind};
use qbforge::io::{export_qdimacs, generate_instance, parse_qdimacs, serialize_qext, GeneratorConfig, QextDocument};
use qbforge::oracle::{check_equivalence, decide_forall_exists, Budget};
use qbforge::reductions::{run_route, ReductionError, Route};
use qbforge::{QuantifiedFormula, VariableAllocator};
use serde_json::{json, Value};

use crate::{Cli, Command, Dialect, Format, GadgetAction, Method, SemanticsArg};

struct Ctx {
    json: bool,
    budget: Budget,
}

impl Ctx {
    /// Prints `text` or, in JSON mode, `value` on one line.
    fn emit(&self, text: impl AsRef<str>, value: Value) {
        if self.json {
            println!("{value}");
        } else {
            let text = text.as_ref();
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn is_qdimacs(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('c'))
        .is_some_and(|l| l.split_whitespace().nth(1) == Some("cnf"))
}

/// Reads QEXT, or QDIMACS when the header says `p cnf`.
fn load(path: &Path) -> Result<QuantifiedFormula> {
    let text = read_text(path)?;
    let f = if is_qdimacs(&text) {
        parse_qdimacs(&text)
    } else {
        QextDocument::parse(&text).map(|d| d.formula)
    };
    f.with_context(|| format!("parsing {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn answer_code(yes: bool) -> u8 {
    if yes {
        0
    } else {
        1
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let ctx = Ctx {
        json: cli.format == Format::Json,
        budget: Budget::new(cli.budget)?,
    };
    match cli.command {
        Command::Validate { file, class } => validate(&ctx, &load(&file)?, class.as_deref()),
        Command::Decide { file, method } => decide(&ctx, &load(&file)?, method),
        Command::Reduce {
            file,
            route,
            output,
            trace,
        } => reduce(&ctx, &load(&file)?, &route, output.as_deref(), trace.as_deref()),
        Command::CheckEquiv { source, target } => {
            let r = check_equivalence(&load(&source)?, &load(&target)?, ctx.budget)?;
            ctx.emit(
                format!(
                    "source {}\ntarget {}\n{}",
                    r.source.answer,
                    r.target.answer,
                    if r.agree { "agree" } else { "DISAGREE" }
                ),
                json!({
                    "agree": r.agree,
                    "source": r.source.answer,
                    "target": r.target.answer,
                    "budget_used": r.source.evaluations + r.target.evaluations,
                }),
            );
            Ok(answer_code(r.agree))
        }
        Command::Gadget { action } => gadget(&ctx, action),
        Command::Gen {
            seed,
            universals,
            existentials,
            clauses,
            class,
            semantics,
            universal_appearances,
            output,
        } => {
            let cfg = GeneratorConfig {
                seed,
                universals,
                existentials,
                clauses,
                class,
                semantics: match semantics {
                    SemanticsArg::Sat => Semantics::Sat,
                    SemanticsArg::Nae => Semantics::Nae,
                },
                universal_appearances,
                ..GeneratorConfig::default()
            };
            write_out(output.as_deref(), &serialize_qext(&generate_instance(&cfg)?))?;
            Ok(0)
        }
        Command::Convert { file, to, output } => {
            let f = load(&file)?;
            let text = match to {
                Dialect::Qext => serialize_qext(&f),
                Dialect::Qdimacs => export_qdimacs(&f)?,
            };
            write_out(output.as_deref(), &text)?;
            Ok(0)
        }
    }
}

fn validate(ctx: &Ctx, f: &QuantifiedFormula, class: Option<&str>) -> Result<u8> {
    let Some(name) = class else {
        let matching: Vec<&str> = ClassSpec::NAMES
            .iter()
            .copied()
            .filter(|n| validate_class(f, &ClassSpec::named(n).expect("listed")).passed())
            .collect();
        let text = if matching.is_empty() {
            "no named class matches".to_string()
        } else {
            matching.join("\n")
        };
        ctx.emit(text, json!({ "classes": matching }));
        return Ok(0);
    };
    let spec = ClassSpec::named(name)
        .ok_or_else(|| anyhow!("unknown class `{name}`; known: {}", ClassSpec::NAMES.join(", ")))?;
    let report = validate_class(f, &spec);
    ctx.emit(
        format!("{report}{}", if report.passed() { "pass" } else { "FAIL" }),
        json!({ "class": name, "passed": report.passed(), "results": report.results }),
    );
    Ok(answer_code(report.passed()))
}

fn oracle_decide(ctx: &Ctx, f: &QuantifiedFormula, start: Instant) -> Result<u8> {
    let v = decide_forall_exists(f, ctx.budget)?;
    let certificate = v.counterexample.as_ref().or(v.witness.as_ref());
    let mut text = format!("{}\nmethod oracle\n", v.answer);
    if let Some(c) = &v.counterexample {
        text += &format!("counterexample {}\n", join(&c.to_dimacs()));
    }
    if let Some(w) = &v.witness {
        text += &format!("witness {}\n", join(&w.to_dimacs()));
    }
    ctx.emit(
        text,
        json!({
            "verdict": v.answer,
            "method": "oracle",
            "certificate": certificate.map(|a| a.to_dimacs()).unwrap_or_default(),
            "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
            "budget_used": v.evaluations,
        }),
    );
    Ok(answer_code(v.is_yes()))
}

fn join(lits: &[i64]) -> String {
    lits.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

fn decide(ctx: &Ctx, f: &QuantifiedFormula, method: Method) -> Result<u8> {
    let start = Instant::now();
    if method == Method::Oracle {
        return oracle_decide(ctx, f, start);
    }
    let Some(v) = decide_poly(f)? else {
        if method == Method::Auto {
            return oracle_decide(ctx, f, start);
        }
        bail!(
            "no polynomial decider applies; the instance is in none of {}",
            POLY_CLASSES.join(", ")
        );
    };
    let mut text = format!("{}\nmethod poly\nrule {}\n{}\n", v.answer, v.rule, v.detail);
    if let Some(c) = &v.certificate {
        text += &format!("counterexample {}\n", join(&c.to_dimacs()));
    }
    ctx.emit(
        text,
        json!({
            "verdict": v.answer,
            "method": "poly",
            "rule": v.rule,
            "detail": v.detail,
            "certificate": v.certificate.as_ref().map(|a| a.to_dimacs()).unwrap_or_default(),
            "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
            "steps": v.steps,
        }),
    );
    Ok(answer_code(v.answer != VerdictAnswer::No))
}

fn reduce(ctx: &Ctx, f: &QuantifiedFormula, route: &str, output: Option<&Path>, trace: Option<&Path>) -> Result<u8> {
    let route = Route::parse(route).with_context(|| format!("known routes: {}", Route::NAMES.join(", ")))?;
    let r = match run_route(route, f) {
        Ok(r) => r,
        Err(ReductionError::SourceIsNo { clause_index }) => {
            ctx.emit(
                format!("NO\nsource clause {clause_index} can never hold; nothing to reduce"),
                json!({ "verdict": "NO", "clause": clause_index }),
            );
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let target = serialize_qext(r.target());
    let bounds: Vec<Value> = r
        .size_bounds()
        .map(|(route, b)| json!({ "route": route, "expression": b.expression, "limit": b.limit }))
        .collect();
    if ctx.json {
        let steps: Vec<&qbforge::reductions::TraceStep> = r.trace().collect();
        let mut report = json!({
            "route": r.route,
            "target_class": r.target_class,
            "trace": steps,
            "bounds": bounds,
        });
        match output {
            Some(p) => fs::write(p, &target).with_context(|| format!("writing {}", p.display()))?,
            None => report["target"] = Value::String(target),
        }
        println!("{report}");
        if let Some(p) = trace {
            fs::write(p, serde_json::to_string_pretty(&report["trace"])?)?;
        }
        return Ok(0);
    }
    write_out(output, &target)?;
    let trace_text = r.to_string();
    match trace {
        Some(p) => fs::write(p, &trace_text).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{trace_text}"),
    }
    Ok(0)
}

fn gadget(ctx: &Ctx, action: GadgetAction) -> Result<u8> {
    let kinds = |name: &str| -> Result<Vec<GadgetKind>> {
        if name == "all" {
            return Ok(GadgetKind::ALL.to_vec());
        }
        let names: Vec<&str> = GadgetKind::ALL.iter().map(|k| k.name()).collect();
        GadgetKind::from_name(name)
            .map(|k| vec![k])
            .ok_or_else(|| anyhow!("unknown gadget `{name}`; known: {}, all", names.join(", ")))
    };
    match action {
        GadgetAction::Verify { name } => {
            let mut ok = true;
            let mut lines = String::new();
            let mut reports = Vec::new();
            for k in kinds(&name)? {
                let g = build_named(k, &mut VariableAllocator::starting_at(1))?;
                let r = verify_contract(&g, ctx.budget)?;
                ok &= r.passed();
                lines += &format!(
                    "{} {:<9} {} ({} cases)\n",
                    if r.passed() { "pass" } else { "FAIL" },
                    k.name(),
                    r.predicate,
                    r.cases
                );
                reports.push(r);
            }
            ctx.emit(lines, json!({ "passed": ok, "gadgets": reports }));
            Ok(answer_code(ok))
        }
        GadgetAction::Show { name } => {
            let [k] = kinds(&name)?[..] else { bail!("show takes a single gadget name") };
            let g = build_named(k, &mut VariableAllocator::starting_at(1))?;
            let mut comments = vec![format!("gadget {}", k.name())];
            comments.extend(g.roles.iter().map(|(r, v)| format!("{r} = {}", v.id())));
            let doc = QextDocument {
                formula: g.to_formula()?,
                comments,
            };
            print!("{}", doc.serialize());
            Ok(0)
        }
    }
}
