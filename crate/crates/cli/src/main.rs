use std::collections::BTreeSet;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use wfreconf::ccsdp::{Ccs, CcsError, Name, Proc, Witness};
use wfreconf::cpog::{canonicalize, first_difference, ActionName, ControlMap, CpogExpr};
use wfreconf::cpog_lts::{reachable_bounded, LtsError};
use wfreconf::ltl::{check, reconfigured_runs, runs_of, structure_of_trace, KripkeStructure};
use wfreconf::project::{Project, ProjectError, BUILTIN};
use wfreconf::reconfig::{
    consistency, enumerate_consistent_bounded, fmt_history, make_safe, History, ReconfigAnalysis,
    ReconfigError, ReconfigSpec, DEFAULT_ALPHABET_BOUND,
};
use wfreconf::workflow::{
    render_test, tracesof_bounded, Choices, Event, OrderPicker, Trace, WfError,
};

#[derive(Parser)]
#[command(
    name = "wfreconf",
    version,
    about = "Verification of workflow reconfiguration models"
)]
struct Cli {
    /// Project file: a path, or one of the built-in projects
    /// (case-study, examples, design2, design3, design4).
    #[arg(long, global = true, default_value = "case-study")]
    file: String,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Resource bound for the engine in use (alphabet size, CPOG vertices,
    /// explored process states or workflow traces).
    #[arg(long, global = true)]
    bound: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BisimKind {
    StrongOf,
    Weak,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical form of a CPOG: vertex conditions, then arc conditions.
    Canonicalize {
        /// CPOG name or inline expression.
        cpog: String,
        /// List the transitively closed arcs instead of the reduced ones.
        #[arg(long)]
        closed: bool,
    },
    /// Equivalence of two CPOGs, with the first differing condition.
    Equiv { a: String, b: String },
    /// Condition under which a history is consistent with a CPOG.
    Consistency {
        cpog: String,
        /// Comma-separated actions.
        #[arg(long)]
        history: String,
    },
    /// Consistent histories of a CPOG, or safe histories of a reconfiguration.
    Histories { name: String },
    /// Safety of reconfiguring after a history, or every safe history.
    SafeReconfig {
        reconfig: String,
        /// Comma-separated actions; without it every safe history is listed.
        #[arg(long)]
        history: Option<String>,
    },
    /// Checks that every consistent history free of forbidden actions is safe.
    Guideline {
        reconfig: String,
        /// Comma-separated forbidden actions, overriding the declaration.
        /// An empty string checks the empty set.
        #[arg(long)]
        forbid: Option<String>,
    },
    /// Reachable transition system of a CPOG or of a reconfiguration.
    Lts {
        /// CPOG name, inline expression or reconfiguration name.
        name: String,
        /// For a reconfiguration, use its safe specification.
        #[arg(long)]
        safe: bool,
        /// Fire sets of enabled actions in one step.
        #[arg(long)]
        concurrent: bool,
        /// Graphviz output.
        #[arg(long)]
        dot: bool,
    },
    /// Every complete trace of a workflow.
    Traces { workflow: String },
    /// Runs a workflow under given choices, optionally reconfiguring it.
    Simulate {
        /// Workflow name or inline workflow.
        workflow: String,
        /// A preset name or `Action=bool,...`.
        #[arg(long, default_value = "NoProblems")]
        choices: String,
        /// Seed for the order of parallel actions; without it the first
        /// written action goes first.
        #[arg(long)]
        seed: Option<u64>,
        /// Name printed in the test header.
        #[arg(long)]
        test_name: Option<String>,
        /// Action after which reconfiguration is requested.
        #[arg(long, requires = "target")]
        reconfigure_at: Option<String>,
        /// Workflow name or inline workflow replacing the remaining one.
        #[arg(long, requires = "reconfigure_at")]
        target: Option<String>,
    },
    /// Checks an LTL formula on Kripke structures of workflow runs.
    Ltl {
        /// Formula name or inline formula.
        formula: String,
        /// A declared run.
        #[arg(long, group = "subject")]
        run: Option<String>,
        /// Every run of a workflow.
        #[arg(long, group = "subject")]
        workflow: Option<String>,
        /// Every accepted reconfiguration from the first to the second
        /// configuration.
        #[arg(long, group = "subject")]
        reconfigured: bool,
    },
    /// Bisimilarity of two process terms.
    Bisim {
        #[arg(value_enum)]
        kind: BisimKind,
        p: String,
        q: String,
        /// Comma-separated names kept visible by weak bisimulation; all
        /// other names become internal.
        #[arg(long)]
        observe: Option<String>,
    },
    /// Fewest internal steps from a process to a state weakly bisimilar to a target.
    Reach {
        p: String,
        target: String,
        #[arg(long, default_value_t = 10)]
        max_steps: usize,
        #[arg(long)]
        observe: Option<String>,
    },
    /// Fraction nesting depths of a process term.
    Depth { p: String },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Bound(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Bound(_) => 3,
        }
    }
}

impl From<ProjectError> for CliError {
    fn from(e: ProjectError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ReconfigError> for CliError {
    fn from(e: ReconfigError) -> Self {
        CliError::Bound(e.to_string())
    }
}

impl From<LtsError> for CliError {
    fn from(e: LtsError) -> Self {
        match e {
            LtsError::StateBoundExceeded { .. } => CliError::Bound(e.to_string()),
            LtsError::UnknownAction(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CcsError> for CliError {
    fn from(e: CcsError) -> Self {
        match e {
            CcsError::UnfoldBoundExceeded { .. } | CcsError::DepthUnbounded => {
                CliError::Bound(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<WfError> for CliError {
    fn from(e: WfError) -> Self {
        match e {
            WfError::TraceBoundExceeded { .. } => CliError::Bound(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// The text and JSON renderings of a result, with its exit code.
struct Report {
    text: String,
    json: Value,
    code: u8,
}

impl Report {
    fn new(text: String, json: Value, ok: bool) -> Self {
        Report {
            text,
            json,
            code: if ok { 0 } else { 1 },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            match cli.format {
                Format::Text => print!("{}", r.text),
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&r.json).expect("JSON values serialize")
                ),
            }
            ExitCode::from(r.code)
        }
        Err(e) => {
            match cli.format {
                Format::Text => eprintln!("error: {e}"),
                Format::Json => println!("{}", json!({ "error": e.to_string() })),
            }
            ExitCode::from(e.code())
        }
    }
}

fn load(file: &str) -> Result<Project, CliError> {
    if BUILTIN.iter().any(|(n, _)| *n == file) {
        return Ok(Project::builtin(file).expect("listed built-in"));
    }
    let src = std::fs::read_to_string(file)
        .map_err(|e| CliError::Usage(format!("cannot read `{file}`: {e}")))?;
    Ok(Project::parse(&src)?)
}

fn actions(list: &str) -> BTreeSet<ActionName> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(ActionName::new)
        .collect()
}

fn names(list: &str) -> BTreeSet<Name> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Name::parse)
        .collect()
}

fn history_json(h: &History) -> Value {
    json!(h.iter().map(|a| a.as_str()).collect::<Vec<_>>())
}

fn trace_json(t: &[Event]) -> Value {
    json!(t.iter().map(|e| e.to_string()).collect::<Vec<_>>())
}

fn trace_text(t: &[Event]) -> String {
    let v: Vec<String> = t.iter().map(|e| e.to_string()).collect();
    format!("[{}]", v.join(", "))
}

fn analysis(spec: ReconfigSpec, bound: Option<usize>) -> ReconfigAnalysis {
    ReconfigAnalysis::with_bound(spec, bound.unwrap_or(DEFAULT_ALPHABET_BOUND))
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let project = load(&cli.file)?;
    match &cli.command {
        Command::Canonicalize { cpog, closed } => {
            let cf = canonicalize(&project.cpog_or_expr(cpog)?);
            let cf = if *closed {
                cf.transitive_close()
            } else {
                cf.transitive_reduce()
            };
            let json = json!({
                "vertices": cf.vertices.iter().map(|(a, f)| json!({"action": a.as_str(), "condition": f.to_string()})).collect::<Vec<_>>(),
                "arcs": cf.arcs.iter().map(|((a, b), f)| json!({"from": a.as_str(), "to": b.as_str(), "condition": f.to_string()})).collect::<Vec<_>>(),
            });
            Ok(Report::new(cf.listing(), json, true))
        }
        Command::Equiv { a, b } => {
            let (pa, pb) = (project.cpog_or_expr(a)?, project.cpog_or_expr(b)?);
            match first_difference(&canonicalize(&pa), &canonicalize(&pb)) {
                None => Ok(Report::new("equal\n".into(), json!({"equal": true}), true)),
                Some(d) => Ok(Report::new(
                    format!("differ at {d}\n"),
                    json!({"equal": false, "difference": d.to_string()}),
                    false,
                )),
            }
        }
        Command::Consistency { cpog, history } => {
            let h = actions(history);
            let c = consistency(&h, &project.cpog_or_expr(cpog)?);
            let sat = c.is_satisfiable();
            Ok(Report::new(
                format!("{}: {c}\n", fmt_history(&h)),
                json!({"history": history_json(&h), "condition": c.to_string(), "satisfiable": sat}),
                sat,
            ))
        }
        Command::Histories { name } => {
            let hs = match project.reconfigs.get(name) {
                Some(d) => analysis(d.spec.clone(), cli.bound).safe_histories()?,
                None => enumerate_consistent_bounded(
                    &project.cpog_or_expr(name)?,
                    cli.bound.unwrap_or(DEFAULT_ALPHABET_BOUND),
                )?,
            };
            Ok(histories_report(&hs))
        }
        Command::SafeReconfig { reconfig, history } => {
            let an = analysis(project.reconfig(reconfig)?.spec.clone(), cli.bound);
            match history {
                None => Ok(histories_report(&an.safe_histories()?)),
                Some(h) => {
                    let h = actions(h);
                    let safe = an.is_safe(&h);
                    let verdict = if safe { "safe" } else { "unsafe" };
                    Ok(Report::new(
                        format!("{}: {verdict}\n", fmt_history(&h)),
                        json!({"history": history_json(&h), "safe": safe}),
                        safe,
                    ))
                }
            }
        }
        Command::Guideline { reconfig, forbid } => {
            let decl = project.reconfig(reconfig)?;
            let forbidden = forbid
                .as_deref()
                .map_or_else(|| decl.forbidden.clone(), actions);
            let res =
                analysis(decl.spec.clone(), cli.bound).check_forbidden_guideline(&forbidden)?;
            let mut text = format!(
                "forbidden {}\n{} ({} histories checked)\n",
                fmt_history(&forbidden),
                if res.pass { "PASS" } else { "FAIL" },
                res.checked
            );
            if let Some(h) = &res.counterexample {
                text.push_str(&format!("counterexample {}\n", fmt_history(h)));
            }
            let json = json!({
                "forbidden": history_json(&forbidden),
                "pass": res.pass,
                "checked": res.checked,
                "counterexample": res.counterexample.as_ref().map(history_json),
            });
            Ok(Report::new(text, json, res.pass))
        }
        Command::Lts {
            name,
            safe,
            concurrent,
            dot,
        } => {
            let (expr, ctrl): (CpogExpr, ControlMap) = match project.reconfigs.get(name) {
                Some(d) => {
                    let e = if *safe {
                        make_safe(&d.spec, &d.forbidden)
                    } else {
                        d.spec.combined.clone()
                    };
                    let mut ctrl = project.control.clone();
                    for (v, c) in d.spec.control().iter() {
                        if ctrl.get(v).is_none() {
                            ctrl.insert(v.clone(), c.action.clone(), c.kind)
                                .map_err(|e| CliError::Usage(e.to_string()))?;
                        }
                    }
                    (e, ctrl)
                }
                None if *safe => {
                    return Err(CliError::Usage(format!(
                        "--safe needs a reconfiguration, `{name}` is not one"
                    )))
                }
                None => (project.cpog_or_expr(name)?, project.control.clone()),
            };
            let lts = reachable_bounded(
                &canonicalize(&expr),
                &ctrl,
                *concurrent,
                cli.bound.unwrap_or(usize::MAX),
            )?;
            let text = if *dot { lts.to_dot() } else { lts.to_text() };
            let json = json!({
                "initial": lts.initial.to_string(),
                "states": lts.states.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "transitions": lts.transitions.iter().map(|(s, l, t)| json!({
                    "from": s.to_string(),
                    "label": l.iter().map(|a| a.as_str()).collect::<Vec<_>>(),
                    "to": t.to_string(),
                })).collect::<Vec<_>>(),
                "deadlocks": lts.deadlocks.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            });
            Ok(Report::new(text, json, true))
        }
        Command::Traces { workflow } => {
            let w = project.workflow_or_expr(workflow)?;
            let bound = cli.bound.unwrap_or(project.interpreter().trace_bound);
            let ts = tracesof_bounded(&w, bound)?;
            let text: String = ts.iter().map(|t| trace_text(t) + "\n").collect();
            let json = json!(ts.iter().map(|t| trace_json(t)).collect::<Vec<_>>());
            Ok(Report::new(text, json, true))
        }
        Command::Simulate {
            workflow,
            choices,
            seed,
            test_name,
            reconfigure_at,
            target,
        } => {
            let mut it = project.interpreter();
            if let Some(b) = cli.bound {
                it.trace_bound = b;
            }
            let w = project.workflow_or_expr(workflow)?;
            let c = match Choices::preset(choices) {
                Some(c) => c,
                None => Choices::parse(choices)?,
            };
            let mut picker = OrderPicker::from_seed(*seed);
            match (reconfigure_at, target) {
                (Some(at), Some(target)) => {
                    let w2 = project.workflow_or_expr(target)?;
                    let rep =
                        it.test_reconfig_from(w, &c, &ActionName::new(at), w2, &mut picker)?;
                    let json = match &rep.outcome {
                        Ok(t) => {
                            json!({"before": trace_json(&rep.before), "accepted": true, "trace": trace_json(t)})
                        }
                        Err((_, invalid)) => json!({
                            "before": trace_json(&rep.before),
                            "accepted": false,
                            "invalid": invalid.iter().map(|t| {
                                let shown: Trace = t.iter().filter(|e| **e != Event::Terminate).cloned().collect();
                                trace_json(&shown)
                            }).collect::<Vec<_>>(),
                        }),
                    };
                    Ok(Report::new(rep.render(), json, rep.accepted()))
                }
                _ => {
                    let s = it.init(w)?;
                    let done = it.execute(&s, &c, &mut picker)?;
                    let name = test_name.as_deref().unwrap_or(workflow);
                    Ok(Report::new(
                        render_test(name, &done.trace),
                        json!({"test": name, "trace": trace_json(&done.trace)}),
                        true,
                    ))
                }
            }
        }
        Command::Ltl {
            formula,
            run,
            workflow,
            reconfigured,
        } => {
            let f = project.formula(formula)?;
            let it = project.interpreter();
            let structures: Vec<(String, KripkeStructure)> = if let Some(r) = run {
                let decl = project.run(r)?;
                let w = project.workflow(&decl.workflow)?;
                let ks = structure_of_trace(&it, w, &decl.trace).ok_or_else(|| {
                    CliError::Usage(format!("run `{r}` is not a run of `{}`", decl.workflow))
                })?;
                vec![(r.clone(), ks)]
            } else if let Some(wname) = workflow {
                let w = project.workflow_or_expr(wname)?;
                runs_of(&it, &w)
                    .into_iter()
                    .enumerate()
                    .map(|(i, ks)| (format!("{wname}#{}", i + 1), ks))
                    .collect()
            } else if *reconfigured {
                reconfigured_runs(&it)
                    .into_iter()
                    .enumerate()
                    .map(|(i, ks)| (format!("reconfigured#{}", i + 1), ks))
                    .collect()
            } else {
                return Err(CliError::Usage(
                    "one of --run, --workflow or --reconfigured is required".into(),
                ));
            };
            let mut text = String::new();
            let mut rows = Vec::new();
            let mut all = true;
            for (name, ks) in &structures {
                let holds = check(ks, &f);
                all &= holds;
                let verdict = if holds { "holds" } else { "fails" };
                text.push_str(&format!("{name}: {verdict} {}\n", trace_text(&ks.trace())));
                rows.push(json!({"name": name, "holds": holds, "trace": trace_json(&ks.trace())}));
            }
            text.push_str(if all { "holds\n" } else { "fails\n" });
            Ok(Report::new(
                text,
                json!({"formula": f.to_string(), "holds": all, "structures": rows}),
                all,
            ))
        }
        Command::Bisim {
            kind,
            p,
            q,
            observe,
        } => {
            let ccs = engine(&project, cli.bound);
            let (pp, qq) = (ccs.parse(p)?, ccs.parse(q)?);
            match kind {
                BisimKind::StrongOf => {
                    let b = ccs.strong_of_bisim(&pp, &qq)?;
                    Ok(verdict_report(b, None))
                }
                BisimKind::Weak => {
                    let obs = observe.as_deref().map(names);
                    let r = ccs.weak_obs_bisim(&pp, &qq, obs.as_ref())?;
                    Ok(verdict_report(r.bisimilar, r.witness.as_ref()))
                }
            }
        }
        Command::Reach {
            p,
            target,
            max_steps,
            observe,
        } => {
            let ccs = engine(&project, cli.bound);
            let (pp, tt) = (ccs.parse(p)?, ccs.parse(target)?);
            let obs = observe.as_deref().map(names);
            match ccs.tau_distance(&pp, &tt, *max_steps, obs.as_ref())? {
                Some((steps, state)) => Ok(Report::new(
                    format!(
                        "reached in {steps} internal step{}\nstate {state}\n",
                        if steps == 1 { "" } else { "s" }
                    ),
                    json!({"reached": true, "steps": steps, "state": state.to_string()}),
                    true,
                )),
                None => Ok(Report::new(
                    format!("not reached within {max_steps} internal steps\n"),
                    json!({"reached": false, "max_steps": max_steps}),
                    false,
                )),
            }
        }
        Command::Depth { p } => {
            let ccs = engine(&project, cli.bound);
            let pp: Proc = ccs.parse(p)?;
            let (fd, sd) = (ccs.fdrdepth(&pp)?, ccs.sfdrdepth(&pp)?);
            Ok(Report::new(
                format!("fdrdepth {fd}\nsfdrdepth {sd}\n"),
                json!({"fdrdepth": fd, "sfdrdepth": sd}),
                true,
            ))
        }
    }
}

fn engine(project: &Project, bound: Option<usize>) -> Ccs {
    match bound {
        Some(b) => Ccs::with_bound(project.process.clone(), b),
        None => Ccs::new(project.process.clone()),
    }
}

fn histories_report(hs: &[History]) -> Report {
    let text: String = hs.iter().map(|h| fmt_history(h) + "\n").collect();
    Report::new(
        text,
        json!(hs.iter().map(history_json).collect::<Vec<_>>()),
        true,
    )
}

fn verdict_report(bisimilar: bool, witness: Option<&Witness>) -> Report {
    let mut text = String::from(if bisimilar {
        "bisimilar\n"
    } else {
        "not bisimilar\n"
    });
    if let Some(w) = witness {
        text.push_str(&format!("witness: {w}\n"));
    }
    let witness = witness.map(|w| {
        json!({
            "trace": w.trace.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
            "label": w.label.to_string(),
            "side": if w.left_can { "left" } else { "right" },
        })
    });
    Report::new(
        text,
        json!({"bisimilar": bisimilar, "witness": witness}),
        bisimilar,
    )
}
