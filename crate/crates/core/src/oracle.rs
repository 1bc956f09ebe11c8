//! Brute-force reference implementations of completion and reconciliation.
//!
//! No pruning and no symmetry reasoning: every combination of object
//! existence, link presence and attribute value (or none) is generated and
//! kept if it validates. The model's integrity constraints are stratified
//! and each choice is independent, so this enumeration yields exactly the
//! valid extensions of the input within the bounds. Only usable on tiny
//! inputs, and guarded by a cap on the number of decisions.

use std::collections::BTreeSet;

use crate::canonical::canonicalize;
use crate::completion::{id_base, id_sensitive, prepare, CompletionConfig};
use crate::dsl::ConstraintRule;
use crate::error::{Error, Result};
use crate::instance::{InstanceFact, Instantiation, ObjectId};
use crate::model::Model;
use crate::reconcile::{Action, CostTable};
use crate::validation::{validate, Mode};

pub const DEFAULT_CAP: usize = 16;

/// A potential new object.
struct Slot {
    class: String,
}

fn slots(model: &Model, config: &CompletionConfig) -> Vec<Slot> {
    let mut out = Vec::new();
    for class in model.leaf_classes() {
        for _ in 0..config.max_new_per_class.get(class).copied().unwrap_or(0) {
            out.push(Slot { class: class.to_string() });
        }
    }
    out
}

/// Choices for one decision: absent, or one of the listed facts.
type Decision = Vec<InstanceFact>;

/// Link and value decisions over the objects of `inst` (base facts plus
/// object declarations).
fn decisions(model: &Model, base: &Instantiation, inst: &Instantiation, default_int: Option<(i64, i64)>) -> Result<Vec<Decision>> {
    let objects = inst.objects();
    let is = |o: &ObjectId, c: &str| objects[o].iter().any(|k| model.is_a(k, c));
    let mut out = Vec::new();
    for (a, assoc) in &model.associations {
        for f in objects.keys().filter(|o| is(o, &assoc.class1)) {
            for t in objects.keys().filter(|o| is(o, &assoc.class2)) {
                let link = InstanceFact::Associated { assoc: a.clone(), from: *f, to: *t };
                if !base.facts.contains(&link) {
                    out.push(vec![link]);
                }
            }
        }
    }
    for (o, classes) in &objects {
        for c in classes {
            for decl in model.applicable_attributes(c).unwrap_or_default() {
                if base.values().any(|(a, x, _)| a == decl.id && x == *o) {
                    continue;
                }
                let domain = decl
                    .domain(default_int)
                    .ok_or_else(|| Error::UnboundedDomain { class: c.to_string(), attr: decl.id.clone() })?;
                out.push(
                    domain
                        .into_iter()
                        .map(|value| InstanceFact::AttributeValue { attr: decl.id.clone(), object: *o, value })
                        .collect(),
                );
            }
        }
    }
    Ok(out)
}

fn with_slots(base: &Instantiation, chosen: &[&Slot], first_id: i64) -> (Instantiation, BTreeSet<ObjectId>) {
    let mut inst = base.clone();
    let mut new = BTreeSet::new();
    for (k, s) in chosen.iter().enumerate() {
        let id = ObjectId(first_id + k as i64);
        inst.insert(InstanceFact::Isa { class: s.class.clone(), object: id });
        new.insert(id);
    }
    (inst, new)
}

/// Number of slot, link and value decisions with every slot in use.
fn decision_points(model: &Model, base: &Instantiation, config: &CompletionConfig, first_id: i64) -> Result<usize> {
    let all = slots(model, config);
    let refs: Vec<&Slot> = all.iter().collect();
    let (full, _) = with_slots(base, &refs, first_id);
    Ok(all.len() + decisions(model, base, &full, config.default_int_domain)?.len())
}

/// Every valid extension of `base`, with raw ids, paired with its set of new
/// objects.
fn raw_completions(
    model: &Model,
    base: &Instantiation,
    rules: &[ConstraintRule],
    config: &CompletionConfig,
    first_id: i64,
) -> Result<Vec<(Instantiation, BTreeSet<ObjectId>)>> {
    let all = slots(model, config);
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << all.len()) {
        let chosen: Vec<&Slot> = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| s).collect();
        let respects_min = config
            .min_new_per_class
            .iter()
            .all(|(c, min)| chosen.iter().filter(|s| &s.class == c).count() as u32 >= *min);
        if !respects_min {
            continue;
        }
        let (inst, new) = with_slots(base, &chosen, first_id);
        let decs = decisions(model, base, &inst, config.default_int_domain)?;
        // Odometer over (absent | option k) for every decision.
        let mut pos = vec![0usize; decs.len()];
        loop {
            let mut cand = inst.clone();
            for (d, &p) in decs.iter().zip(&pos) {
                if p > 0 {
                    cand.insert(d[p - 1].clone());
                }
            }
            if validate(model, &cand, rules, Mode::Complete)?.is_valid() {
                out.push((cand, new.clone()));
            }
            let mut i = 0;
            while i < pos.len() {
                pos[i] += 1;
                if pos[i] <= decs[i].len() {
                    break;
                }
                pos[i] = 0;
                i += 1;
            }
            if i == pos.len() {
                break;
            }
        }
    }
    Ok(out)
}

fn check_ids(base: &Instantiation, first_id: i64, n: usize) -> Result<()> {
    if base.mentioned_objects().iter().any(|o| o.0 >= first_id && o.0 < first_id + n as i64) {
        return Err(Error::InvalidConfig(format!("new-object ids from {first_id} collide with existing objects")));
    }
    Ok(())
}

/// All valid completions of `inst`, new objects renamed canonically unless a
/// rule can observe ids.
pub fn enumerate_completions_bruteforce(
    model: &Model,
    inst: &Instantiation,
    rules: &[ConstraintRule],
    config: &CompletionConfig,
    cap: usize,
) -> Result<BTreeSet<Instantiation>> {
    let scoped = prepare(model, inst, rules, config)?;
    let first_id = id_base(inst, config);
    check_ids(inst, first_id, slots(model, config).len())?;
    let points = decision_points(model, inst, config, first_id)?;
    if points > cap {
        return Err(Error::CapExceeded { points, cap });
    }
    let canonical = !id_sensitive(&scoped, inst);
    Ok(raw_completions(model, inst, rules, config, first_id)?
        .into_iter()
        .map(|(s, new)| if canonical { canonicalize(&s, &new, first_id).inst } else { s })
        .collect())
}

/// Minimum total cost over every reuse/delete choice for the legacy facts
/// combined with every completion; `None` when nothing validates.
pub fn min_repair_cost_bruteforce(
    legacy: &Instantiation,
    target: &Model,
    rules: &[ConstraintRule],
    costs: &CostTable,
    config: &CompletionConfig,
    cap: usize,
) -> Result<Option<u64>> {
    let relabeled = Instantiation { model_id: target.id.clone(), ..legacy.clone() };
    prepare(target, &relabeled, rules, config)?;
    let first_id = id_base(legacy, config);
    check_ids(legacy, first_id, slots(target, config).len())?;
    let objects_only = Instantiation {
        facts: relabeled.facts.iter().filter(|f| matches!(f, InstanceFact::Isa { .. })).cloned().collect(),
        ..relabeled.clone()
    };
    let facts: Vec<&InstanceFact> = relabeled.facts.iter().collect();
    let points = facts.len() + decision_points(target, &objects_only, config, first_id)?;
    if points > cap {
        return Err(Error::CapExceeded { points, cap });
    }
    let mut best: Option<u64> = None;
    for mask in 0u64..(1u64 << facts.len()) {
        let mut base = Instantiation::new(target.id.clone(), legacy.inst_id.clone());
        let mut cost = 0;
        for (i, f) in facts.iter().enumerate() {
            if mask >> i & 1 == 1 {
                base.insert((*f).clone());
                cost += costs.fact_cost(Action::Reuse, f);
            } else {
                cost += costs.fact_cost(Action::Delete, f);
            }
        }
        for (s, _) in raw_completions(target, &base, rules, config, first_id)? {
            let created: u64 =
                s.facts.iter().filter(|f| !base.facts.contains(f)).map(|f| costs.fact_cost(Action::Create, f)).sum();
            let total = cost + created;
            best = Some(best.map_or(total, |b| b.min(total)));
        }
    }
    Ok(best)
}
