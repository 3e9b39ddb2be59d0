//! The `regime` command line.
//!
//! Exit codes: 0 holds or succeeded, 1 fails or refused, 2 input error,
//! 3 observational conditional undefined during transfer, 4 a proven
//! implication between conditions was violated (an engine fault).

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::ci::numeric::{check_extended_ci, CommonVersion, Verdict};
use crate::ci::semigraphoid::derivable;
use crate::conditions::{condition_report, CheckReport, Checker, ConditionReport, CONDITIONS};
use crate::diagram::InfluenceDiagram;
use crate::dsl::{parse_ci, parse_diagram, parse_loss, parse_model, parse_premises, parse_strategy};
use crate::error::Error;
use crate::fixtures::{fixture, verify_fixture, Verification};
use crate::grecursion::{
    consequence_brute_force, g_recursion_traced, g_transfer, OutcomeFunctional, Trace, Transfer, TransferPolicy,
};
use crate::model::{RegimeKind, RegimeModel};
use crate::rational::{fmt_decimal, fmt_exact, Rational};
use crate::strategy::{evaluate_strategy, instantiate_regime, optimize, EvaluationRow, Mode, Safety};

pub const SCHEMA: &str = "regime-report/1";

#[derive(Debug, Parser)]
#[command(
    name = "regime",
    version,
    about = "Exact checks and evaluation of sequential strategies across regimes"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Leave out tool version and input paths so reports can be compared byte for byte.
    #[arg(long, global = true)]
    canonical: bool,
    /// Significant digits for decimal renderings in text output.
    #[arg(long, default_value_t = 12, global = true)]
    digits: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    G,
    Brute,
    Transfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptMode {
    Oracle,
    Transfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SepMethod {
    D,
    Moral,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check identifying conditions for an interventional regime.
    Check {
        /// Model file, or `fixture:NAME`.
        model: String,
        #[arg(long)]
        regime: Option<String>,
        /// One of the condition names, or `all`.
        #[arg(long, default_value = "all")]
        condition: String,
    },
    /// Expected loss of a regime or of a strategy file.
    Evaluate {
        model: String,
        #[arg(long)]
        regime: Option<String>,
        /// Loss file, or inline pairs such as `0=0,1=1`.
        #[arg(long)]
        loss: String,
        #[arg(long, value_enum, default_value_t = Method::G)]
        method: Method,
        /// Transfer even when stability or positivity fails.
        #[arg(long)]
        force: bool,
        /// Evaluate this strategy on the observational nature kernels instead of a regime.
        #[arg(long)]
        strategy: Option<String>,
        /// Print the G-recursion value table.
        #[arg(long)]
        trace: bool,
    },
    /// Least expected loss over every non-randomized strategy.
    Optimize {
        model: String,
        #[arg(long)]
        loss: String,
        #[arg(long, value_enum, default_value_t = OptMode::Oracle)]
        mode: OptMode,
    },
    /// Semi-graphoid derivation of a statement from premises.
    Derive {
        #[arg(long)]
        premises: String,
        #[arg(long)]
        target: String,
        /// Ground symbols, comma or space separated.
        #[arg(long)]
        ground: Option<String>,
    },
    /// Read a statement off a diagram.
    Dsep {
        /// Diagram file, or `fixture:NAME`.
        dag: String,
        statement: String,
        #[arg(long, value_enum, default_value_t = SepMethod::D)]
        method: SepMethod,
    },
    /// Check one conditional independence statement on a model.
    Ci {
        model: String,
        statement: String,
        /// Regimes to compare, comma separated (default: all).
        #[arg(long)]
        regimes: Option<String>,
    },
    /// Print or verify a built-in fixture.
    Fixture {
        name: String,
        #[arg(long)]
        verify: bool,
    },
}

/// Error with the input file it came from.
struct Failure {
    path: Option<String>,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { path: None, error }
    }
}

type Res<T> = std::result::Result<T, Failure>;

struct Outcome {
    code: i32,
    status: &'static str,
    text: String,
    result: Value,
}

struct Ctx<'h> {
    digits: usize,
    inputs: Vec<String>,
    hooks: &'h Hooks<'h>,
}

pub type CheckHook<'a> = dyn Fn(&mut Vec<CheckReport>) + 'a;

/// Test seams for paths that correct inputs cannot reach.
#[derive(Default)]
pub struct Hooks<'a> {
    /// Rewrites the checks of `check --condition all` before implications are evaluated.
    pub checks: Option<&'a CheckHook<'a>>,
}

impl Ctx<'_> {
    fn num(&self, v: &Rational) -> String {
        let exact = fmt_exact(v);
        let dec = fmt_decimal(v, self.digits);
        if exact == dec {
            exact
        } else {
            format!("{exact} ({dec})")
        }
    }

    fn read(&mut self, path: &str) -> Res<String> {
        self.inputs.push(path.to_string());
        std::fs::read_to_string(path).map_err(|e| Failure {
            path: Some(path.to_string()),
            error: Error::Io(e),
        })
    }

    fn model(&mut self, arg: &str) -> Res<RegimeModel> {
        if let Some(name) = arg.strip_prefix("fixture:") {
            self.inputs.push(arg.to_string());
            let fx = fixture(name)?;
            return match fx.parse_model()? {
                Some(m) => Ok(m),
                None => Err(Error::Precondition(format!("fixture `{name}` has no model")).into()),
            };
        }
        let text = self.read(arg)?;
        parse_model(&text).map_err(|error| Failure {
            path: Some(arg.to_string()),
            error,
        })
    }

    fn diagram(&mut self, arg: &str) -> Res<InfluenceDiagram> {
        if let Some(name) = arg.strip_prefix("fixture:") {
            self.inputs.push(arg.to_string());
            let fx = fixture(name)?;
            return match fx.parse_diagram()? {
                Some(d) => Ok(d),
                None => Err(Error::Precondition(format!("fixture `{name}` has no diagram")).into()),
            };
        }
        let text = self.read(arg)?;
        parse_diagram(&text).map_err(|error| Failure {
            path: Some(arg.to_string()),
            error,
        })
    }

    fn loss(&mut self, model: &RegimeModel, arg: &str) -> Res<OutcomeFunctional> {
        if !Path::new(arg).exists() && arg.contains('=') {
            return Ok(parse_loss(model, arg)?);
        }
        let text = self.read(arg)?;
        parse_loss(model, &text).map_err(|error| Failure {
            path: Some(arg.to_string()),
            error,
        })
    }
}

fn default_regime(model: &RegimeModel, regime: Option<String>) -> Res<String> {
    match regime {
        Some(r) => {
            model.regime(&r)?;
            Ok(r)
        }
        None => model
            .interventional()
            .next()
            .map(|r| r.id.clone())
            .ok_or_else(|| Error::Precondition("model has no interventional regime".to_string()).into()),
    }
}

/// Parses `args` (program name first), writes the report to `out` and
/// diagnostics to `err`, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, out, err, &Hooks::default())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, hooks: &Hooks<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let command = command_name(&cli.command);
    let mut ctx = Ctx {
        digits: cli.digits,
        inputs: Vec::new(),
        hooks,
    };
    let result = dispatch(&cli.command, &mut ctx);
    match result {
        Ok(o) => {
            match cli.format {
                Format::Text => {
                    let _ = write!(out, "{}", o.text);
                }
                Format::Json => {
                    let mut env = json!({
                        "schema": SCHEMA,
                        "command": command,
                        "status": o.status,
                        "exit_code": o.code,
                        "result": o.result,
                    });
                    if !cli.canonical {
                        env["tool"] = json!({ "name": "regime", "version": env!("CARGO_PKG_VERSION") });
                        env["inputs"] = json!(ctx.inputs);
                    }
                    let _ = writeln!(
                        out,
                        "{}",
                        serde_json::to_string_pretty(&env).expect("serializable report")
                    );
                }
            }
            o.code
        }
        Err(f) => {
            let code = f.error.exit_code();
            let location = match (&f.path, f.error.span()) {
                (Some(p), Some(_)) => format!("{p}:"),
                (Some(p), None) => format!("{p}: "),
                (None, _) => String::new(),
            };
            let _ = writeln!(err, "error: {location}{}", f.error);
            if cli.format == Format::Json {
                let mut e = json!({ "kind": f.error.kind(), "message": f.error.to_string() });
                if let Some(span) = f.error.span() {
                    e["line"] = json!(span.line);
                    e["col"] = json!(span.col);
                }
                if let (Some(p), false) = (&f.path, cli.canonical) {
                    e["path"] = json!(p);
                }
                let env =
                    json!({ "schema": SCHEMA, "command": command, "status": "error", "exit_code": code, "error": e });
                let _ = writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&env).expect("serializable error")
                );
            }
            code
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check { .. } => "check",
        Command::Evaluate { .. } => "evaluate",
        Command::Optimize { .. } => "optimize",
        Command::Derive { .. } => "derive",
        Command::Dsep { .. } => "dsep",
        Command::Ci { .. } => "ci",
        Command::Fixture { .. } => "fixture",
    }
}

fn dispatch(command: &Command, ctx: &mut Ctx<'_>) -> Res<Outcome> {
    match command {
        Command::Check {
            model,
            regime,
            condition,
        } => check(ctx, model, regime.clone(), condition),
        Command::Evaluate {
            model,
            regime,
            loss,
            method,
            force,
            strategy,
            trace,
        } => evaluate(
            ctx,
            model,
            regime.clone(),
            loss,
            *method,
            *force,
            strategy.as_deref(),
            *trace,
        ),
        Command::Optimize { model, loss, mode } => optimize_cmd(ctx, model, loss, *mode),
        Command::Derive {
            premises,
            target,
            ground,
        } => derive(ctx, premises, target, ground.as_deref()),
        Command::Dsep { dag, statement, method } => dsep(ctx, dag, statement, *method),
        Command::Ci {
            model,
            statement,
            regimes,
        } => ci(ctx, model, statement, regimes.as_deref()),
        Command::Fixture { name, verify } => fixture_cmd(ctx, name, *verify),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

fn mark(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "FAILS"
    }
}

fn render_check(text: &mut String, c: &CheckReport) {
    let _ = writeln!(text, "  {:<32} {}", c.label(), mark(c.holds));
    for w in &c.witnesses {
        let _ = writeln!(text, "      {w}");
    }
    for n in &c.notes {
        let _ = writeln!(text, "      note: {n}");
    }
}

fn render_report(r: &ConditionReport, o: &str) -> String {
    let mut text = format!("conditions for regime {} against {o}\n", r.regime);
    for c in &r.checks {
        render_check(&mut text, c);
    }
    if !r.implications.is_empty() {
        text.push_str("implications\n");
        for i in &r.implications {
            let state = if i.violated {
                "VIOLATED"
            } else if i.premises_hold {
                "premises hold, conclusion holds"
            } else {
                "premises do not all hold"
            };
            let _ = writeln!(
                text,
                "  {} => {} ({}): {state}",
                i.premises.join(" & "),
                i.conclusion,
                i.name
            );
        }
    }
    for n in &r.notes {
        let _ = writeln!(text, "note: {n}");
    }
    text
}

fn check(ctx: &mut Ctx<'_>, path: &str, regime: Option<String>, condition: &str) -> Res<Outcome> {
    let model = ctx.model(path)?;
    let s = default_regime(&model, regime)?;
    if model.regime(&s)?.kind != RegimeKind::Interventional {
        return Err(Error::Precondition(format!("regime `{s}` is not interventional")).into());
    }
    let o = model.observational().id.clone();
    if condition == "all" {
        let mut r = condition_report(&model, &s)?;
        if let Some(tamper) = ctx.hooks.checks {
            let mut checks = std::mem::take(&mut r.checks);
            tamper(&mut checks);
            r = ConditionReport::from_checks(&s, &o, model.is_extended(), checks, r.notes);
        }
        let (code, status) = if r.internal_error {
            (4, "internal-error")
        } else if r.all_hold() {
            (0, "holds")
        } else {
            (1, "fails")
        };
        let mut text = render_report(&r, &o);
        if r.internal_error {
            text.push_str("internal error: a proven implication between conditions was violated\n");
        }
        return Ok(Outcome {
            code,
            status,
            text,
            result: to_value(&r),
        });
    }
    if !CONDITIONS.contains(&condition) {
        return Err(Error::Precondition(format!(
            "unknown condition `{condition}`; expected one of {} or all",
            CONDITIONS.join(", ")
        ))
        .into());
    }
    let checker = Checker::new(&model)?;
    let reports = match checker.check(condition, &s) {
        Ok(r) => r,
        Err(Error::Precondition(msg)) if condition == "lemma1" => {
            let text = format!("lemma1 not run: {msg}\n");
            return Ok(Outcome {
                code: 1,
                status: "precondition-unmet",
                text,
                result: json!({ "condition": "lemma1", "skipped": msg }),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let holds = reports.iter().all(|r| r.holds);
    let mut text = format!("regime {s} against {o}\n");
    for r in &reports {
        render_check(&mut text, r);
    }
    Ok(Outcome {
        code: if holds { 0 } else { 1 },
        status: if holds { "holds" } else { "fails" },
        text,
        result: json!({ "regime": s, "checks": to_value(&reports) }),
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    ctx: &mut Ctx<'_>,
    path: &str,
    regime: Option<String>,
    loss: &str,
    method: Method,
    force: bool,
    strategy: Option<&str>,
    trace: bool,
) -> Res<Outcome> {
    let mut model = ctx.model(path)?;
    let k = ctx.loss(&model, loss)?;
    let s = match strategy {
        Some(file) => {
            let text = ctx.read(file)?;
            let strat = parse_strategy(&model, &text).map_err(|error| Failure {
                path: Some(file.to_string()),
                error,
            })?;
            let id = "strategy";
            let o = model.observational().id.clone();
            model = instantiate_regime(&model, &strat, id, &o)?;
            id.to_string()
        }
        None => default_regime(&model, regime)?,
    };
    let mut result = json!({ "regime": s, "method": format!("{method:?}").to_lowercase() });
    let mut text = String::new();
    match method {
        Method::Brute => {
            let v = consequence_brute_force(&model, &s, &k)?;
            let _ = writeln!(text, "E{{k({}); {s}}} = {} [brute force]", k.outcome(), ctx.num(&v));
            result["consequence"] = json!(fmt_exact(&v));
        }
        Method::G => {
            let r = g_recursion_traced(
                &model,
                &s,
                &k,
                &Trace {
                    version: None,
                    record: trace,
                },
            )?;
            let _ = writeln!(
                text,
                "E{{k({}); {s}}} = {} [G-recursion]",
                k.outcome(),
                ctx.num(&r.value)
            );
            if trace {
                text.push_str("value table\n");
                for e in &r.table {
                    let _ = writeln!(text, "  f({}) = {}", e.history, fmt_exact(&e.value));
                }
                result["table"] = to_value(&r.table);
            }
            result["consequence"] = json!(fmt_exact(&r.value));
        }
        Method::Transfer => {
            let policy = if force {
                TransferPolicy::Force
            } else {
                TransferPolicy::RequireChecks
            };
            match g_transfer(&model, &s, &k, policy)? {
                Transfer::Refused { checks } => {
                    let failing: Vec<&CheckReport> = checks.iter().filter(|c| !c.holds).collect();
                    let names: Vec<&str> = failing.iter().map(|c| c.condition.as_str()).collect();
                    let _ = writeln!(text, "transfer refused: {} failed", names.join(" and "));
                    for c in &failing {
                        render_check(&mut text, c);
                    }
                    result["refused"] = json!(true);
                    result["checks"] = to_value(&checks);
                    return Ok(Outcome {
                        code: 1,
                        status: "refused",
                        text,
                        result,
                    });
                }
                Transfer::Value {
                    value,
                    verified,
                    checks,
                } => {
                    let tag = if verified {
                        "verified"
                    } else {
                        "UNSAFE: checks failed, forced"
                    };
                    let _ = writeln!(
                        text,
                        "E{{k({}); {s}}} = {} [transfer from observational, {tag}]",
                        k.outcome(),
                        ctx.num(&value)
                    );
                    result["consequence"] = json!(fmt_exact(&value));
                    result["safety"] = json!(if verified { "verified" } else { "unsafe" });
                    if !verified {
                        for c in checks.iter().filter(|c| !c.holds) {
                            render_check(&mut text, c);
                        }
                        result["checks"] = to_value(&checks);
                    }
                }
            }
        }
    }
    Ok(Outcome {
        code: 0,
        status: "ok",
        text,
        result,
    })
}

fn render_rows(ctx: &Ctx<'_>, rows: &[EvaluationRow]) -> String {
    let mut text = String::new();
    for r in rows {
        let value = r.consequence.as_ref().map_or("-".to_string(), |v| ctx.num(v));
        let safety = match r.safety {
            Safety::Verified => "verified",
            Safety::Unsafe => "unsafe",
            Safety::Refused => "refused",
        };
        let _ = write!(text, "  {:<28} {:<24} {safety}", r.id, value);
        if let Some(reason) = &r.reason {
            let _ = write!(text, " ({reason})");
        }
        text.push('\n');
    }
    text
}

fn optimize_cmd(ctx: &mut Ctx<'_>, path: &str, loss: &str, mode: OptMode) -> Res<Outcome> {
    let model = ctx.model(path)?;
    let k = ctx.loss(&model, loss)?;
    let mode = match mode {
        OptMode::Oracle => Mode::Oracle,
        OptMode::Transfer => Mode::Transfer,
    };
    let opt = match optimize(&model, &k, mode) {
        Ok(o) => o,
        Err(e @ Error::NotIdentifiable(_)) => {
            // report the table anyway
            let mut rows = Vec::new();
            for s in crate::strategy::enumerate_strategies(&model)? {
                rows.push(evaluate_strategy(&model, &s.id, &s.strategy, &k, mode)?);
            }
            let text = format!("{e}\n{}", render_rows(ctx, &rows));
            return Ok(Outcome {
                code: 1,
                status: "not-identifiable",
                text,
                result: json!({ "table": to_value(&rows) }),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let mut text = format!(
        "best: {} with expected loss {}\n",
        opt.best.id,
        opt.best.consequence.as_ref().map_or("-".to_string(), |v| ctx.num(v))
    );
    text.push_str(&render_rows(ctx, &opt.table));
    Ok(Outcome {
        code: 0,
        status: "ok",
        text,
        result: to_value(&opt),
    })
}

fn derive(ctx: &mut Ctx<'_>, premises: &str, target: &str, ground: Option<&str>) -> Res<Outcome> {
    let text = ctx.read(premises)?;
    let premises_list = parse_premises(&text).map_err(|error| Failure {
        path: Some(premises.to_string()),
        error,
    })?;
    let target_stmt = parse_ci(target)?;
    let ground: Option<Vec<String>> = ground.map(|g| {
        g.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| if s == "σ" { "sigma".to_string() } else { s.to_string() })
            .collect()
    });
    let d = derivable(&premises_list, &target_stmt, ground.as_deref())?;
    let mut out = format!(
        "{} is {}derivable over {{{}}} ({} statements in the closure)\n",
        target_stmt,
        if d.derivable { "" } else { "not " },
        d.ground.join(", "),
        d.closure_size
    );
    for (i, step) in d.trace.iter().enumerate() {
        let _ = writeln!(out, "  {:>3}. {step}", i + 1);
    }
    Ok(Outcome {
        code: if d.derivable { 0 } else { 1 },
        status: if d.derivable { "derivable" } else { "not-derivable" },
        text: out,
        result: json!({ "target": target_stmt.to_string(), "derivation": to_value(&d) }),
    })
}

fn dsep(ctx: &mut Ctx<'_>, path: &str, statement: &str, method: SepMethod) -> Res<Outcome> {
    let dag = ctx.diagram(path)?;
    let stmt = parse_ci(statement)?;
    if stmt.regime.is_some() {
        return Err(Error::InvalidStatement("a diagram query takes no regime suffix".to_string()).into());
    }
    let (separated, path_text) = match method {
        SepMethod::D => {
            let s = dag.implies(&stmt)?;
            (s.separated, s.active_path)
        }
        SepMethod::Moral => {
            let sep = stmt.is_trivial() || dag.moral_separated(&stmt.x_names(), &stmt.y_names(), &stmt.z_names())?;
            (sep, None)
        }
    };
    let mut text = format!("{stmt}: {}\n", if separated { "separated" } else { "not separated" });
    if let Some(p) = &path_text {
        let _ = writeln!(text, "  active path: {p}");
    }
    let mut result = json!({ "statement": stmt.to_string(), "separated": separated, "method": format!("{method:?}").to_lowercase() });
    if let Some(p) = path_text {
        result["active_path"] = json!(p);
    }
    Ok(Outcome {
        code: if separated { 0 } else { 1 },
        status: if separated { "separated" } else { "not-separated" },
        text,
        result,
    })
}

fn render_version(ctx: &Ctx<'_>, text: &mut String, cv: &CommonVersion) {
    let cols: Vec<String> = cv.x_cells.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(text, "common version of P({} | {})", cv.x.join(","), cv.z.join(","));
    for row in &cv.rows {
        let probs: Vec<String> = row.probs.iter().map(|p| ctx.num(p)).collect();
        let by = if row.constrained_by.is_empty() {
            "unconstrained, filled uniformly".to_string()
        } else {
            format!("fixed by {}", row.constrained_by.join(","))
        };
        let pairs: Vec<String> = cols.iter().zip(&probs).map(|(c, p)| format!("{c}: {p}")).collect();
        let _ = writeln!(text, "  {}: {} ({by})", row.z, pairs.join(", "));
    }
}

fn ci(ctx: &mut Ctx<'_>, path: &str, statement: &str, regimes: Option<&str>) -> Res<Outcome> {
    let model = ctx.model(path)?;
    let stmt = parse_ci(statement)?;
    let ids: Vec<String> = match regimes {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        None => model.regime_ids(),
    };
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let v: Verdict = check_extended_ci(&model, &refs, &stmt)?;
    let mut text = format!("{stmt}: {}\n", mark(v.holds));
    for w in &v.witnesses {
        let _ = writeln!(text, "  {w}");
    }
    if let Some(cv) = &v.common_version {
        render_version(ctx, &mut text, cv);
    }
    Ok(Outcome {
        code: if v.holds { 0 } else { 1 },
        status: if v.holds { "holds" } else { "fails" },
        text,
        result: json!({ "statement": stmt.to_string(), "regimes": ids, "verdict": to_value(&v) }),
    })
}

fn render_verification(v: &Verification) -> String {
    let mut text = format!("fixture {}: {}\n", v.fixture, if v.passed { "PASS" } else { "FAIL" });
    for e in &v.expectations {
        let ok = if e.passed { "ok  " } else { "FAIL" };
        if e.passed {
            let _ = writeln!(text, "  {ok} {:<64} {}", e.check, e.actual);
        } else {
            let _ = writeln!(text, "  {ok} {:<64} expected {}, got {}", e.check, e.expected, e.actual);
        }
    }
    for n in &v.notes {
        let _ = writeln!(text, "  note: {n}");
    }
    text
}

fn fixture_cmd(ctx: &mut Ctx<'_>, name: &str, verify: bool) -> Res<Outcome> {
    ctx.inputs.push(format!("fixture:{name}"));
    if verify {
        let v = verify_fixture(name)?;
        return Ok(Outcome {
            code: if v.passed { 0 } else { 1 },
            status: if v.passed { "pass" } else { "fail" },
            text: render_verification(&v),
            result: to_value(&v),
        });
    }
    let fx = fixture(name)?;
    let mut text = format!("# {}: {}\n", fx.name, fx.description);
    if let Some(m) = &fx.model {
        text.push_str(m);
    }
    if let Some(d) = &fx.diagram {
        if fx.model.is_some() {
            text.push_str("\n# paired diagram\n");
        }
        text.push_str(d);
    }
    Ok(Outcome {
        code: 0,
        status: "ok",
        text,
        result: to_value(&fx),
    })
}
