//! `ooasp`: validate, complete and reconcile configuration instantiations
//! stored as fact files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ooasp::completion::{check_model_consistency, complete, CompletionConfig, Consistency, Outcome, UnsatCause};
use ooasp::dot::{change_set_dot, instantiation_dot};
use ooasp::dsl::{check_references, parse_constraints, ConstraintRule};
use ooasp::error::{Error, ParseError};
use ooasp::parser::{instantiation_to_text, parse_facts, violations_to_text, FactFile};
use ooasp::reconcile::{reconcile, CostTable, ReconcileOutcome};
use ooasp::report;
use ooasp::session::Session;
use ooasp::validation::{validate, Mode};
use ooasp::{Instantiation, Model};

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_UNSAT: u8 = 20;
const EXIT_INPUT_INVALID: u8 = 21;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "ooasp", version, about = "Reasoning over object-oriented configuration models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instantiation against its model and constraints.
    Validate(ValidateArgs),
    /// Extend a partial instantiation into valid complete ones.
    Complete(CompleteArgs),
    /// Search for any valid instantiation of a model.
    CheckModel(CheckModelArgs),
    /// Turn a legacy instantiation into a valid one for a new model at minimum cost.
    Reconcile(ReconcileArgs),
    /// Render an instantiation as a Graphviz graph.
    Export(ExportArgs),
}

#[derive(Args)]
struct InstanceInput {
    /// Model fact file(s).
    #[arg(short = 'm', long = "model", value_name = "FILE")]
    models: Vec<PathBuf>,
    /// Instantiation fact file(s); may also hold model facts.
    #[arg(short = 'i', long = "inst", value_name = "FILE", required = true)]
    insts: Vec<PathBuf>,
    /// Instantiation id, when the files declare several.
    #[arg(long = "instantiation", value_name = "ID")]
    inst_id: Option<String>,
}

#[derive(Args)]
struct Constraints {
    /// Constraint rule file(s).
    #[arg(short = 'c', long = "constraints", value_name = "FILE")]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct Bounds {
    /// Maximum number of new objects of a leaf class.
    #[arg(long = "max-new", value_name = "CLASS=N", value_parser = class_count)]
    max_new: Vec<(String, u32)>,
    /// Minimum number of new objects of a leaf class.
    #[arg(long = "min-new", value_name = "CLASS=N", value_parser = class_count)]
    min_new: Vec<(String, u32)>,
    /// Maximum number of new objects for every leaf class not named by --max-new.
    #[arg(long = "max-new-all", value_name = "N")]
    max_new_all: Option<u32>,
    /// Domain for integer attributes without declared bounds.
    #[arg(long = "int-domain", value_name = "LO..HI", value_parser = int_range)]
    int_domain: Option<(i64, i64)>,
    /// First id for new objects.
    #[arg(long = "id-base", value_name = "N")]
    id_base: Option<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Partial,
    Complete,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InstanceInput,
    #[command(flatten)]
    constraints: Constraints,
    #[arg(long, value_enum, default_value = "complete")]
    mode: ModeArg,
    /// Write violation facts here instead of standard output.
    #[arg(short = 'o', long = "output", value_name = "FILE")]
    output: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    #[command(flatten)]
    input: InstanceInput,
    #[command(flatten)]
    constraints: Constraints,
    #[command(flatten)]
    bounds: Bounds,
    /// Number of solutions to return.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    solutions: u64,
    /// Directory for per-solution fact and DOT files; standard output otherwise.
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Write the JSON summary here.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CheckModelArgs {
    /// Model fact file(s).
    #[arg(short = 'm', long = "model", value_name = "FILE", required = true)]
    models: Vec<PathBuf>,
    /// Model id, when the files declare several.
    #[arg(long = "model-id", value_name = "ID")]
    model_id: Option<String>,
    #[command(flatten)]
    constraints: Constraints,
    #[command(flatten)]
    bounds: Bounds,
    /// Write the witness facts here instead of standard output.
    #[arg(short = 'o', long = "output", value_name = "FILE")]
    output: Option<PathBuf>,
    /// Write the witness as a DOT graph.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct ReconcileArgs {
    /// Legacy instantiation fact file(s).
    #[arg(long = "old-inst", value_name = "FILE", required = true)]
    old_insts: Vec<PathBuf>,
    /// Legacy model fact file(s); only needed for rendering.
    #[arg(long = "old-model", value_name = "FILE")]
    old_models: Vec<PathBuf>,
    /// Legacy instantiation id, when the files declare several.
    #[arg(long = "instantiation", value_name = "ID")]
    inst_id: Option<String>,
    /// Target model fact file(s).
    #[arg(long = "new-model", value_name = "FILE", required = true)]
    new_models: Vec<PathBuf>,
    /// Target model id, when the files declare several.
    #[arg(long = "target", value_name = "ID")]
    target: Option<String>,
    #[command(flatten)]
    constraints: Constraints,
    /// Cost table with lines `action kind cost`.
    #[arg(long, value_name = "FILE")]
    costs: Option<PathBuf>,
    #[command(flatten)]
    bounds: Bounds,
    /// Directory for changeset.json, result.lp and diff.dot; result facts go
    /// to standard output otherwise.
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Write the change set JSON here.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InstanceInput,
    /// DOT output file; standard output otherwise.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
    /// Also write the instantiation in canonical fact order.
    #[arg(long, value_name = "FILE")]
    facts: Option<PathBuf>,
}

fn class_count(s: &str) -> Result<(String, u32), String> {
    let (class, n) = s.split_once('=').ok_or_else(|| format!("expected CLASS=N, got `{s}`"))?;
    let n = n.trim().parse().map_err(|_| format!("`{n}` is not a non-negative integer"))?;
    if class.trim().is_empty() {
        return Err("empty class name".into());
    }
    Ok((class.trim().to_string(), n))
}

fn int_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: i64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: i64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

/// A failed run: message for standard error and the exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::input(e.to_string())
    }
}

type Run = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    write(path, &(serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n"))
}

fn located(path: &Path, e: ParseError) -> Failure {
    Failure::input(format!("{}:{}", path.display(), e))
}

fn load_files(paths: &[&PathBuf]) -> Result<(Session, Vec<String>), Failure> {
    let mut files: Vec<FactFile> = Vec::new();
    for p in paths {
        files.push(parse_facts(&read(p)?).map_err(|e| located(p, e))?);
    }
    let session = Session::load(&files)?;
    Ok((session, paths.iter().map(|p| p.display().to_string()).collect()))
}

fn load_rules(c: &Constraints) -> Result<Vec<ConstraintRule>, Failure> {
    let mut rules = Vec::new();
    for p in &c.files {
        rules.extend(parse_constraints(&read(p)?).map_err(|e| located(p, e))?);
    }
    Ok(rules)
}

fn pick_instantiation<'s>(session: &'s Session, id: Option<&str>) -> Result<&'s Instantiation, Failure> {
    match id {
        Some(id) => Ok(session.instantiation(id)?),
        None => session.only_instantiation().ok_or_else(|| {
            let ids: Vec<&str> = session.instantiations.keys().map(String::as_str).collect();
            Failure::usage(format!("expected one instantiation, found {}; choose with --instantiation", ids.len()))
        }),
    }
}

fn pick_model<'s>(session: &'s Session, id: Option<&str>, flag: &str) -> Result<&'s Model, Failure> {
    match id {
        Some(id) => Ok(session.model(id)?),
        None => session
            .only_model()
            .ok_or_else(|| Failure::usage(format!("expected one model, found {}; choose with {flag}", session.models.len()))),
    }
}

fn config(b: &Bounds, model: &Model, solutions: usize) -> CompletionConfig {
    let mut c = match b.max_new_all {
        Some(n) => CompletionConfig::uniform(model, n),
        None => CompletionConfig::default(),
    };
    for (class, n) in &b.max_new {
        c.max_new_per_class.insert(class.clone(), *n);
    }
    for (class, n) in &b.min_new {
        c.min_new_per_class.insert(class.clone(), *n);
    }
    c.default_int_domain = b.int_domain;
    c.id_base = b.id_base;
    c.max_solutions = solutions;
    c
}

fn run_validate(a: &ValidateArgs) -> Run {
    let (session, files) = load_files(&a.input.models.iter().chain(&a.input.insts).collect::<Vec<_>>())?;
    let inst = pick_instantiation(&session, a.input.inst_id.as_deref())?;
    let model = session.model_of(inst)?;
    let rules = load_rules(&a.constraints)?;
    let mode = match a.mode {
        ModeArg::Partial => Mode::Partial,
        ModeArg::Complete => Mode::Complete,
    };
    let report = validate(model, inst, &rules, mode)?;
    let facts = violations_to_text(&report.violations);
    match &a.output {
        Some(p) => write(p, &facts)?,
        None => print!("{facts}"),
    }
    if let Some(p) = &a.json {
        write_json(p, &report::validation_json(&report, inst, Some(&session), &files))?;
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(if report.is_valid() { 0 } else { EXIT_VIOLATIONS })
}

fn run_complete(a: &CompleteArgs) -> Run {
    let (session, _) = load_files(&a.input.models.iter().chain(&a.input.insts).collect::<Vec<_>>())?;
    let inst = pick_instantiation(&session, a.input.inst_id.as_deref())?;
    let model = session.model_of(inst)?;
    let rules = load_rules(&a.constraints)?;
    let solutions = usize::try_from(a.solutions).unwrap_or(usize::MAX);
    let result = complete(model, inst, &rules, &config(&a.bounds, model, solutions))?;
    if let Some(p) = &a.json {
        write_json(p, &report::completion_json(inst, &result))?;
    }
    let existing = inst.mentioned_objects();
    match &result.outcome {
        Outcome::Solutions(sols) => {
            for (k, s) in sols.iter().enumerate() {
                let facts = instantiation_to_text(s);
                match &a.out_dir {
                    Some(dir) => {
                        write(&dir.join(format!("{}_{}.lp", s.inst_id, k + 1)), &facts)?;
                        write(&dir.join(format!("{}_{}.dot", s.inst_id, k + 1)), &instantiation_dot(s, &existing))?;
                    }
                    None => print!("% solution {}\n{facts}", k + 1),
                }
            }
            eprintln!("{} solution(s), {} nodes", sols.len(), result.stats.nodes);
            Ok(0)
        }
        Outcome::Unsat { cause: UnsatCause::UnsatWithinBounds, .. } => {
            eprintln!("no valid completion within the given bounds");
            Ok(EXIT_UNSAT)
        }
        Outcome::Unsat { cause: UnsatCause::InputInvalid, report } => {
            eprintln!("the input cannot be completed; it already violates:");
            let violations = report.as_ref().map(|r| violations_to_text(&r.violations)).unwrap_or_default();
            eprint!("{violations}");
            Ok(EXIT_INPUT_INVALID)
        }
    }
}

fn run_check_model(a: &CheckModelArgs) -> Run {
    let (session, _) = load_files(&a.models.iter().collect::<Vec<_>>())?;
    let model = pick_model(&session, a.model_id.as_deref(), "--model-id")?;
    let rules = load_rules(&a.constraints)?;
    match check_model_consistency(model, &rules, &config(&a.bounds, model, 1))? {
        Consistency::Consistent(w) => {
            let facts = instantiation_to_text(&w);
            match &a.output {
                Some(p) => write(p, &facts)?,
                None => print!("{facts}"),
            }
            if let Some(p) = &a.dot {
                write(p, &instantiation_dot(&w, &Default::default()))?;
            }
            eprintln!("model {} is consistent; witness has {} objects", model.id, w.objects().len());
            Ok(0)
        }
        Consistency::NoWitnessWithinBounds => {
            eprintln!("no instantiation of model {} within the given bounds", model.id);
            Ok(EXIT_UNSAT)
        }
    }
}

fn run_reconcile(a: &ReconcileArgs) -> Run {
    let (old, _) = load_files(&a.old_models.iter().chain(&a.old_insts).collect::<Vec<_>>())?;
    let legacy = pick_instantiation(&old, a.inst_id.as_deref())?;
    let (new, _) = load_files(&a.new_models.iter().collect::<Vec<_>>())?;
    let target = pick_model(&new, a.target.as_deref(), "--target")?;
    let rules = load_rules(&a.constraints)?;
    check_references(&rules, target)?;
    let costs = match &a.costs {
        Some(p) => CostTable::parse(&read(p)?).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?,
        None => CostTable::default(),
    };
    let run = reconcile(legacy, target, &rules, &costs, &config(&a.bounds, target, 1))?;
    match &run.outcome {
        ReconcileOutcome::Repaired(cs) => {
            let json = report::change_set_json(legacy, cs, &run);
            let facts = instantiation_to_text(&cs.result);
            match &a.out_dir {
                Some(dir) => {
                    write_json(&dir.join("changeset.json"), &json)?;
                    write(&dir.join("result.lp"), &facts)?;
                    write(&dir.join("diff.dot"), &change_set_dot(legacy, cs))?;
                }
                None => print!("{facts}"),
            }
            if let Some(p) = &a.json {
                write_json(p, &json)?;
            }
            eprintln!(
                "total cost {}: {} reused, {} deleted, {} created",
                cs.total_cost,
                cs.reused.len(),
                cs.deleted.len(),
                cs.created.len()
            );
            Ok(0)
        }
        ReconcileOutcome::UnsatWithinBounds => {
            let json = report::unsat_reconciliation_json(legacy, &target.id, &run);
            if let Some(dir) = &a.out_dir {
                write_json(&dir.join("changeset.json"), &json)?;
            }
            if let Some(p) = &a.json {
                write_json(p, &json)?;
            }
            eprintln!("no valid instantiation of {} reachable within the given bounds", target.id);
            Ok(EXIT_UNSAT)
        }
    }
}

fn run_export(a: &ExportArgs) -> Run {
    let (session, _) = load_files(&a.input.models.iter().chain(&a.input.insts).collect::<Vec<_>>())?;
    let inst = pick_instantiation(&session, a.input.inst_id.as_deref())?;
    let dot = instantiation_dot(inst, &inst.mentioned_objects());
    match &a.dot {
        Some(p) => write(p, &dot)?,
        None => print!("{dot}"),
    }
    if let Some(p) = &a.facts {
        write(p, &instantiation_to_text(inst))?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Validate(a) => run_validate(a),
        Command::Complete(a) => run_complete(a),
        Command::CheckModel(a) => run_check_model(a),
        Command::Reconcile(a) => run_reconcile(a),
        Command::Export(a) => run_export(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
