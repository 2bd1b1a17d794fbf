//! Project files: one text file holding every model of an analysis.
//!
//! A project is split into sections, each opened by a line holding only
//! `[name]`:
//!
//! ```text
//! [alphabet]   action names, whitespace separated (optional)
//! [variables]  Boolean variable names (optional)
//! [control]    x = Action;  or  x = Action flag;
//! [cpog]       name = expression;
//! [reconfig]   name = r, flag : from => to forbid {A, B};
//! [workflow]   name = workflow;
//! [runs]       name = Workflow : A, B, ..., TERMINATE;
//! [formulas]   name = ltl formula;
//! [process]    set O = {o1}; Name(params) := process;
//! ```
//!
//! When `[alphabet]` or `[variables]` is present, every action or variable
//! used elsewhere must be declared there.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::boolean::VarName;
use crate::ccsdp::Env;
use crate::cpog::{parse_cpog_at, ActionName, ControlKind, ControlMap, CpogExpr, CpogScope};
use crate::lexer::{tokenize, Cursor, ParseError};
use crate::ltl::{parse_ltl_at, Ltl};
use crate::reconfig::ReconfigSpec;
use crate::workflow::{
    configuration1, configuration2, parse_workflow_at, Event, Interpreter, Trace, Workflow,
};

/// The case-study project.
pub const CASE_STUDY: &str = include_str!("../data/case_study.wfp");

/// Small CPOG examples of choice placement and reconfiguration interference.
pub const EXAMPLES: &str = include_str!("../data/examples.wfp");

/// Variants of configuration 1 that differ in where recursion happens.
pub const DESIGN2: &str = include_str!("../data/design2.wfp");
pub const DESIGN3: &str = include_str!("../data/design3.wfp");
pub const DESIGN4: &str = include_str!("../data/design4.wfp");

/// Built-in projects by name.
pub const BUILTIN: &[(&str, &str)] = &[
    ("case-study", CASE_STUDY),
    ("examples", EXAMPLES),
    ("design2", DESIGN2),
    ("design3", DESIGN3),
    ("design4", DESIGN4),
];

const SECTIONS: &[&str] = &[
    "alphabet",
    "variables",
    "control",
    "cpog",
    "reconfig",
    "workflow",
    "runs",
    "formulas",
    "process",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectError {
    #[error("in section [{section}]: {source}")]
    Parse { section: String, source: ParseError },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: section [{name}] appears twice")]
    DuplicateSection { line: usize, name: String },
    #[error("line {line}: text before the first section")]
    TextOutsideSection { line: usize },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("action `{0}` is not declared in [alphabet]")]
    UndeclaredAction(String),
    #[error("variable `{0}` is not declared in [variables]")]
    UndeclaredVariable(String),
}

/// A reconfiguration declared in a project, with its forbidden actions.
#[derive(Debug, Clone)]
pub struct ReconfigDecl {
    pub spec: ReconfigSpec,
    pub forbidden: BTreeSet<ActionName>,
}

/// A named action trace of a workflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDecl {
    pub workflow: String,
    pub trace: Trace,
}

/// Every model of a project file.
#[derive(Debug, Clone, Default)]
pub struct Project {
    pub alphabet: Option<BTreeSet<ActionName>>,
    pub variables: Option<BTreeSet<VarName>>,
    pub control: ControlMap,
    pub cpogs: BTreeMap<String, CpogExpr>,
    pub reconfigs: BTreeMap<String, ReconfigDecl>,
    pub workflows: BTreeMap<String, Workflow>,
    pub runs: BTreeMap<String, RunDecl>,
    pub formulas: BTreeMap<String, Ltl>,
    pub process: Env,
}

struct Section<'a> {
    name: &'a str,
    first_line: usize,
    text: String,
}

impl Project {
    pub fn case_study() -> Self {
        Project::parse(CASE_STUDY).expect("the built-in case study parses")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, src)| Project::parse(src).expect("built-in projects parse"))
    }

    pub fn parse(src: &str) -> Result<Self, ProjectError> {
        let sections = split_sections(src)?;
        let get = |name: &str| sections.iter().find(|s| s.name == name);
        let mut p = Project::default();

        if let Some(s) = get("alphabet") {
            p.alphabet = Some(word_list(s)?.into_iter().map(ActionName::new).collect());
        }
        if let Some(s) = get("variables") {
            p.variables = Some(word_list(s)?.into_iter().map(VarName::new).collect());
        }
        if let Some(s) = get("control") {
            p.control = in_section(s, parse_control)?;
        }
        let explicit_control = get("control").is_some();
        if let Some(s) = get("cpog") {
            let mut scope = CpogScope {
                defs: BTreeMap::new(),
                control: p.control.clone(),
                auto_control: !explicit_control,
            };
            in_section(s, |cur| {
                while !cur.at_end() {
                    let name = cur.expect_ident()?;
                    cur.expect_punct("=")?;
                    let e = parse_cpog_at(cur, &mut scope)?;
                    cur.expect_punct(";")?;
                    if scope.defs.insert(name.clone(), e).is_some() {
                        return Err(cur.error(format!("`{name}` is defined twice")));
                    }
                }
                Ok(())
            })?;
            p.control = scope.control;
            p.cpogs = scope.defs;
        }
        if let Some(s) = get("reconfig") {
            let cpogs = &p.cpogs;
            p.reconfigs = in_section(s, |cur| parse_reconfigs(cur, cpogs))?;
        }
        if let Some(s) = get("workflow") {
            p.workflows = in_section(s, |cur| {
                let mut defs = BTreeMap::new();
                while !cur.at_end() {
                    let name = cur.expect_ident()?;
                    cur.expect_punct("=")?;
                    let w = parse_workflow_at(cur, &defs)?;
                    cur.expect_punct(";")?;
                    if defs.insert(name.clone(), w).is_some() {
                        return Err(cur.error(format!("`{name}` is defined twice")));
                    }
                }
                Ok(defs)
            })?;
        }
        if let Some(s) = get("runs") {
            let workflows = &p.workflows;
            p.runs = in_section(s, |cur| parse_runs(cur, workflows))?;
        }
        if let Some(s) = get("formulas") {
            p.formulas = in_section(s, |cur| {
                let mut defs = BTreeMap::new();
                while !cur.at_end() {
                    let name = cur.expect_ident()?;
                    cur.expect_punct("=")?;
                    let f = parse_ltl_at(cur)?;
                    cur.expect_punct(";")?;
                    if defs.insert(name.clone(), f).is_some() {
                        return Err(cur.error(format!("`{name}` is defined twice")));
                    }
                }
                Ok(defs)
            })?;
        }
        if let Some(s) = get("process") {
            let mut env = Env::default();
            env.extend(&s.text).map_err(|e| shift(s, e))?;
            p.process = env;
        }
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), ProjectError> {
        if let Some(alpha) = &self.alphabet {
            let mut used: BTreeSet<ActionName> = BTreeSet::new();
            for e in self.cpogs.values() {
                used.extend(e.actions());
            }
            for d in self.reconfigs.values() {
                used.insert(d.spec.r.clone());
                used.extend(d.forbidden.iter().cloned());
            }
            for (_, c) in self.control.iter() {
                used.insert(c.action.clone());
            }
            for w in self.workflows.values() {
                collect_workflow_actions(w, &mut used);
            }
            if let Some(a) = used.iter().find(|a| !alpha.contains(*a)) {
                return Err(ProjectError::UndeclaredAction(a.to_string()));
            }
        }
        if let Some(vars) = &self.variables {
            let mut used: BTreeSet<VarName> = self.control.variables().cloned().collect();
            for e in self.cpogs.values() {
                used.extend(e.variables());
            }
            for d in self.reconfigs.values() {
                used.insert(d.spec.flag.clone());
            }
            if let Some(v) = used.iter().find(|v| !vars.contains(*v)) {
                return Err(ProjectError::UndeclaredVariable(v.to_string()));
            }
        }
        Ok(())
    }

    pub fn cpog(&self, name: &str) -> Result<&CpogExpr, ProjectError> {
        self.cpogs.get(name).ok_or_else(|| unknown("CPOG", name))
    }

    pub fn reconfig(&self, name: &str) -> Result<&ReconfigDecl, ProjectError> {
        self.reconfigs
            .get(name)
            .ok_or_else(|| unknown("reconfiguration", name))
    }

    pub fn workflow(&self, name: &str) -> Result<&Workflow, ProjectError> {
        self.workflows
            .get(name)
            .ok_or_else(|| unknown("workflow", name))
    }

    pub fn run(&self, name: &str) -> Result<&RunDecl, ProjectError> {
        self.runs.get(name).ok_or_else(|| unknown("run", name))
    }

    /// A named CPOG, or an expression written inline over the named ones.
    pub fn cpog_or_expr(&self, text: &str) -> Result<CpogExpr, ProjectError> {
        if let Some(e) = self.cpogs.get(text) {
            return Ok(e.clone());
        }
        let inline = |source| ProjectError::Parse {
            section: "expression argument".into(),
            source,
        };
        let toks = tokenize(text).map_err(inline)?;
        let mut cur = Cursor::new(&toks);
        let mut scope = CpogScope {
            defs: self.cpogs.clone(),
            control: self.control.clone(),
            auto_control: false,
        };
        let e = parse_cpog_at(&mut cur, &mut scope).map_err(inline)?;
        cur.expect_end().map_err(inline)?;
        Ok(e)
    }

    /// A named workflow, or a workflow written inline.
    pub fn workflow_or_expr(&self, text: &str) -> Result<Workflow, ProjectError> {
        if let Some(w) = self.workflows.get(text) {
            return Ok(w.clone());
        }
        crate::workflow::parse_workflow(text).map_err(|source| ProjectError::Parse {
            section: "workflow argument".into(),
            source,
        })
    }

    /// A named formula, or a formula written inline.
    pub fn formula(&self, text: &str) -> Result<Ltl, ProjectError> {
        if let Some(f) = self.formulas.get(text) {
            return Ok(f.clone());
        }
        crate::ltl::parse_ltl(text).map_err(|source| ProjectError::Parse {
            section: "formula argument".into(),
            source,
        })
    }

    /// The interpreter over `Configuration1` and `Configuration2` when the
    /// project defines them, else over the built-in case-study workflows.
    pub fn interpreter(&self) -> Interpreter {
        let c1 = self
            .workflows
            .get("Configuration1")
            .cloned()
            .unwrap_or_else(configuration1);
        let c2 = self
            .workflows
            .get("Configuration2")
            .cloned()
            .unwrap_or_else(configuration2);
        Interpreter::new(c1, c2)
    }
}

fn unknown(kind: &'static str, name: &str) -> ProjectError {
    ProjectError::UnknownName {
        kind,
        name: name.to_string(),
    }
}

fn collect_workflow_actions(w: &Workflow, out: &mut BTreeSet<ActionName>) {
    match w {
        Workflow::End => {}
        Workflow::Simple(a, w) => {
            out.insert(a.clone());
            collect_workflow_actions(w, out);
        }
        Workflow::Branch(a, t, f) => {
            out.insert(a.clone());
            collect_workflow_actions(t, out);
            collect_workflow_actions(f, out);
        }
        Workflow::Par(a, b, w) => {
            out.insert(a.clone());
            out.insert(b.clone());
            collect_workflow_actions(w, out);
        }
    }
}

fn section_header(line: &str) -> Option<&str> {
    let t = line.trim_end();
    let inner = t.strip_prefix('[')?.strip_suffix(']')?;
    (!inner.is_empty() && inner.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
        .then_some(inner)
}

fn split_sections(src: &str) -> Result<Vec<Section<'_>>, ProjectError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let lineno = i + 1;
        if let Some(name) = section_header(line) {
            if !SECTIONS.contains(&name) {
                return Err(ProjectError::UnknownSection {
                    line: lineno,
                    name: name.to_string(),
                });
            }
            if out.iter().any(|s| s.name == name) {
                return Err(ProjectError::DuplicateSection {
                    line: lineno,
                    name: name.to_string(),
                });
            }
            out.push(Section {
                name,
                first_line: lineno + 1,
                text: String::new(),
            });
            continue;
        }
        match out.last_mut() {
            Some(s) => {
                s.text.push_str(line);
                s.text.push('\n');
            }
            None => {
                let code = line.split('#').next().unwrap_or("").trim();
                if !code.is_empty() && !code.starts_with("//") {
                    return Err(ProjectError::TextOutsideSection { line: lineno });
                }
            }
        }
    }
    Ok(out)
}

fn shift(s: &Section, mut e: ParseError) -> ProjectError {
    e.line += s.first_line - 1;
    ProjectError::Parse {
        section: s.name.to_string(),
        source: e,
    }
}

fn in_section<T>(
    s: &Section,
    f: impl FnOnce(&mut Cursor) -> Result<T, ParseError>,
) -> Result<T, ProjectError> {
    let toks = tokenize(&s.text).map_err(|e| shift(s, e))?;
    let mut cur = Cursor::new(&toks);
    let v = f(&mut cur).map_err(|e| shift(s, e))?;
    cur.expect_end().map_err(|e| shift(s, e))?;
    Ok(v)
}

fn word_list(s: &Section) -> Result<Vec<String>, ProjectError> {
    in_section(s, |cur| {
        let mut out = Vec::new();
        while !cur.at_end() {
            out.push(cur.expect_ident()?);
            cur.eat_punct(",");
        }
        Ok(out)
    })
}

fn parse_control(cur: &mut Cursor) -> Result<ControlMap, ParseError> {
    let mut m = ControlMap::new();
    while !cur.at_end() {
        let var = cur.expect_ident()?;
        cur.expect_punct("=")?;
        let action = cur.expect_ident()?;
        let kind = if cur.eat_ident("flag") {
            ControlKind::Flag
        } else {
            cur.eat_ident("choice");
            ControlKind::Choice
        };
        cur.expect_punct(";")?;
        m.insert(VarName::new(&var), ActionName::new(&action), kind)
            .map_err(|e| cur.error(e.to_string()))?;
    }
    Ok(m)
}

fn action_set(cur: &mut Cursor) -> Result<BTreeSet<ActionName>, ParseError> {
    cur.expect_punct("{")?;
    let mut out = BTreeSet::new();
    while !cur.eat_punct("}") {
        out.insert(ActionName::new(cur.expect_ident()?));
        if !cur.is_punct("}") {
            cur.expect_punct(",")?;
        }
    }
    Ok(out)
}

fn parse_reconfigs(
    cur: &mut Cursor,
    cpogs: &BTreeMap<String, CpogExpr>,
) -> Result<BTreeMap<String, ReconfigDecl>, ParseError> {
    let mut out = BTreeMap::new();
    while !cur.at_end() {
        let name = cur.expect_ident()?;
        cur.expect_punct("=")?;
        let r = cur.expect_ident()?;
        cur.expect_punct(",")?;
        let flag = cur.expect_ident()?;
        cur.expect_punct(":")?;
        let lookup = |cur: &mut Cursor| -> Result<CpogExpr, ParseError> {
            let n = cur.expect_ident()?;
            cpogs
                .get(&n)
                .cloned()
                .ok_or_else(|| cur.error(format!("unknown CPOG `{n}`")))
        };
        let from = lookup(cur)?;
        cur.expect_punct("=>")?;
        let to = lookup(cur)?;
        let forbidden = if cur.eat_ident("forbid") {
            action_set(cur)?
        } else {
            BTreeSet::new()
        };
        cur.expect_punct(";")?;
        let spec = ReconfigSpec::new(ActionName::new(&r), VarName::new(&flag), from, to);
        if out
            .insert(name.clone(), ReconfigDecl { spec, forbidden })
            .is_some()
        {
            return Err(cur.error(format!("`{name}` is defined twice")));
        }
    }
    Ok(out)
}

fn parse_runs(
    cur: &mut Cursor,
    workflows: &BTreeMap<String, Workflow>,
) -> Result<BTreeMap<String, RunDecl>, ParseError> {
    let mut out = BTreeMap::new();
    while !cur.at_end() {
        let name = cur.expect_ident()?;
        cur.expect_punct("=")?;
        let workflow = cur.expect_ident()?;
        if !workflows.contains_key(&workflow) {
            return Err(cur.error(format!("unknown workflow `{workflow}`")));
        }
        cur.expect_punct(":")?;
        let mut trace = Vec::new();
        loop {
            let a = cur.expect_ident()?;
            trace.push(if a == "TERMINATE" {
                Event::Terminate
            } else {
                Event::action(&a)
            });
            if !cur.eat_punct(",") {
                break;
            }
        }
        cur.expect_punct(";")?;
        if out
            .insert(name.clone(), RunDecl { workflow, trace })
            .is_some()
        {
            return Err(cur.error(format!("`{name}` is defined twice")));
        }
    }
    Ok(out)
}

/// Parses a comma-separated action trace; `TERMINATE` denotes the final event.
pub fn parse_trace(src: &str) -> Trace {
    src.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|a| {
            if a == "TERMINATE" {
                Event::Terminate
            } else {
                Event::action(a)
            }
        })
        .collect()
}
