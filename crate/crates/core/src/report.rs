//! JSON documents written by the command-line tool.
//!
//! Every document carries `schema_version`; fields are only ever added under
//! the same version.

use serde_json::{json, Value as Json};

use crate::completion::{CompletionResult, Outcome};
use crate::instance::{FactKind, InstanceFact, Instantiation};
use crate::reconcile::{ChangeSet, Reconciliation};
use crate::session::Session;
use crate::validation::{ValidationReport, Violation};

pub const SCHEMA_VERSION: u32 = 1;

/// Input facts a violation is about: the class facts of its objects, and
/// their links or values for the association or attribute it names.
pub fn related_facts<'a>(inst: &'a Instantiation, v: &Violation) -> Vec<&'a InstanceFact> {
    let objects = v.objects();
    let names: Vec<&str> = v.args.iter().filter_map(|a| a.as_str()).collect();
    inst.facts
        .iter()
        .filter(|f| objects.iter().any(|o| f.mentions(*o)))
        .filter(|f| match f {
            InstanceFact::Isa { .. } => true,
            InstanceFact::Associated { assoc, .. } => names.contains(&assoc.as_str()),
            InstanceFact::AttributeValue { attr, .. } => names.contains(&attr.as_str()),
        })
        .collect()
}

fn fact_entry(inst_id: &str, f: &InstanceFact) -> Json {
    json!({ "kind": f.kind(), "fact": f.render(inst_id) })
}

/// `files` names the inputs in the order they were given to the session.
pub fn validation_json(report: &ValidationReport, inst: &Instantiation, session: Option<&Session>, files: &[String]) -> Json {
    let violations: Vec<Json> = report
        .violations
        .iter()
        .map(|v| {
            let locations: Vec<Json> = related_facts(inst, v)
                .into_iter()
                .filter_map(|f| {
                    let (file, loc) = session?.origins.get(&(inst.inst_id.clone(), f.clone()))?;
                    Some(json!({
                        "fact": f.render(&inst.inst_id),
                        "file": files.get(*file),
                        "line": loc.line,
                        "column": loc.column,
                    }))
                })
                .collect();
            json!({
                "kind": v.kind,
                "args": v.args,
                "fact": v.to_string(),
                "message": v.message(),
                "builtin": v.is_builtin(),
                "locations": locations,
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "instantiation": inst.inst_id,
        "model": inst.model_id,
        "mode": report.mode,
        "valid": report.is_valid(),
        "violations": violations,
        "notes": report.notes,
    })
}

pub fn completion_json(input: &Instantiation, result: &CompletionResult) -> Json {
    let stats = json!({ "nodes": result.stats.nodes, "elapsed_ms": result.stats.elapsed.as_millis() as u64 });
    match &result.outcome {
        Outcome::Solutions(sols) => json!({
            "schema_version": SCHEMA_VERSION,
            "instantiation": input.inst_id,
            "model": input.model_id,
            "outcome": "solutions",
            "solutions": sols.iter().map(|s| {
                let added: Vec<Json> = s.facts.difference(&input.facts).map(|f| fact_entry(&s.inst_id, f)).collect();
                json!({ "facts": s.len(), "added": added })
            }).collect::<Vec<_>>(),
            "stats": stats,
        }),
        Outcome::Unsat { cause, report } => json!({
            "schema_version": SCHEMA_VERSION,
            "instantiation": input.inst_id,
            "model": input.model_id,
            "outcome": "unsat",
            "cause": cause,
            "violations": report.as_ref().map(|r| r.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
            "stats": stats,
        }),
    }
}

pub fn change_set_json(legacy: &Instantiation, cs: &ChangeSet, run: &Reconciliation) -> Json {
    let id = &legacy.inst_id;
    let count = |facts: &mut dyn Iterator<Item = &InstanceFact>| {
        let mut by_kind = serde_json::Map::new();
        let facts: Vec<&InstanceFact> = facts.collect();
        for k in FactKind::ALL {
            by_kind.insert(k.as_str().to_string(), json!(facts.iter().filter(|f| f.kind() == k).count()));
        }
        Json::Object(by_kind)
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "instantiation": id,
        "legacy_model": legacy.model_id,
        "target_model": cs.result.model_id,
        "outcome": "repaired",
        "total_cost": cs.total_cost,
        "reused": cs.reused.iter().map(|r| fact_entry(id, &r.fact)).collect::<Vec<_>>(),
        "deleted": cs.deleted.iter().map(|r| fact_entry(id, &r.fact)).collect::<Vec<_>>(),
        "created": cs.created.iter().map(|f| fact_entry(id, f)).collect::<Vec<_>>(),
        "counts": {
            "reused": count(&mut cs.reused.iter().map(|r| &r.fact)),
            "deleted": count(&mut cs.deleted.iter().map(|r| &r.fact)),
            "created": count(&mut cs.created.iter()),
        },
        "stats": { "rounds": run.rounds, "nodes": run.nodes, "elapsed_ms": run.elapsed.as_millis() as u64 },
    })
}

pub fn unsat_reconciliation_json(legacy: &Instantiation, target_model: &str, run: &Reconciliation) -> Json {
    json!({
        "schema_version": SCHEMA_VERSION,
        "instantiation": legacy.inst_id,
        "legacy_model": legacy.model_id,
        "target_model": target_model,
        "outcome": "unsat_within_bounds",
        "stats": { "rounds": run.rounds, "nodes": run.nodes, "elapsed_ms": run.elapsed.as_millis() as u64 },
    })
}
