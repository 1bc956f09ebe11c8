//! Property checks over generated cases, shared by the core test suites and
//! the acceptance harness. Each returns the number of cases checked or the
//! first counterexample.

use std::collections::BTreeSet;

use ooasp::completion::{complete, CompletionConfig, Outcome};
use ooasp::dsl::parse_constraints;
use ooasp::error::Error;
use ooasp::fact::Fact;
use ooasp::instance::{InstanceFact, ObjectId, Value};
use ooasp::oracle::{enumerate_completions_bruteforce, min_repair_cost_bruteforce};
use ooasp::parser::{parse_facts, serialize_facts};
use ooasp::reconcile::{reconcile, Action, CostTable, ReconcileOutcome};
use ooasp::validation::{validate, Mode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{case, legacy_case, Case};

pub const CAP: usize = 12;

pub const FIXTURES: [(&str, &str); 9] = [
    ("modules_v1.lp", include_str!("../../../../fixtures/modules_v1.lp")),
    ("modules_v2.lp", include_str!("../../../../fixtures/modules_v2.lp")),
    ("c2.lp", include_str!("../../../../fixtures/c2.lp")),
    ("c3.lp", include_str!("../../../../fixtures/c3.lp")),
    ("empty_v1.lp", include_str!("../../../../fixtures/empty_v1.lp")),
    ("c4_complete.lp", include_str!("../../../../fixtures/c4_complete.lp")),
    ("modules.oc", include_str!("../../../../fixtures/modules.oc")),
    ("adjacency_v2.oc", include_str!("../../../../fixtures/adjacency_v2.oc")),
    ("costs_default.txt", include_str!("../../../../fixtures/costs_default.txt")),
];

fn describe(c: &Case) -> String {
    format!(
        "model: {}\ninst: {:?}\nrules: {:?}\nconfig: {:?}",
        c.text,
        c.inst.facts,
        c.rules.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        c.config
    )
}

#[derive(Debug, Default)]
pub struct Tally {
    pub checked: usize,
    /// Cases with at least one solution or repair.
    pub positive: usize,
}

/// Completion solution sets equal the brute-force enumeration.
pub fn completion_equivalence(seed: u64, cases: usize) -> Result<Tally, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut t, mut attempts) = (Tally::default(), 0);
    while t.checked < cases {
        attempts += 1;
        if attempts > 50 * cases {
            return Err("generator rarely fits the cap".into());
        }
        let c = case(&mut rng, 3);
        let expected = match enumerate_completions_bruteforce(&c.model, &c.inst, &c.rules, &c.config, CAP) {
            Ok(s) => s,
            Err(Error::CapExceeded { .. }) => continue,
            Err(e) => return Err(format!("oracle failed: {e}\n{}", describe(&c))),
        };
        let got: BTreeSet<_> = match complete(&c.model, &c.inst, &c.rules, &c.config).map_err(|e| e.to_string())?.outcome {
            Outcome::Solutions(s) => s.into_iter().collect(),
            Outcome::Unsat { .. } => BTreeSet::new(),
        };
        if got != expected {
            return Err(format!("case {}: engine {:?}\noracle {:?}\n{}", t.checked, got, expected, describe(&c)));
        }
        t.positive += usize::from(!expected.is_empty());
        t.checked += 1;
    }
    Ok(t)
}

/// Optimal reconciliation costs equal the brute-force minimum.
pub fn reconciliation_equivalence(seed: u64, cases: usize) -> Result<Tally, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut t, mut attempts) = (Tally::default(), 0);
    let costs = CostTable::default();
    while t.checked < cases {
        attempts += 1;
        if attempts > 50 * cases {
            return Err("generator rarely fits the cap".into());
        }
        let c = legacy_case(&mut rng, 3);
        let expected = match min_repair_cost_bruteforce(&c.inst, &c.model, &c.rules, &costs, &c.config, CAP) {
            Ok(v) => v,
            Err(Error::CapExceeded { .. }) => continue,
            Err(e) => return Err(format!("oracle failed: {e}\n{}", describe(&c))),
        };
        let got = match reconcile(&c.inst, &c.model, &c.rules, &costs, &c.config).map_err(|e| e.to_string())?.outcome {
            ReconcileOutcome::Repaired(cs) => Some(cs.total_cost),
            ReconcileOutcome::UnsatWithinBounds => None,
        };
        if got != expected {
            return Err(format!("case {}: engine {got:?}, oracle {expected:?}\n{}", t.checked, describe(&c)));
        }
        t.positive += usize::from(expected.is_some());
        t.checked += 1;
    }
    Ok(t)
}

/// Every solution contains its input, validates, and appears once.
pub fn completion_invariants(seed: u64, cases: usize) -> Result<Tally, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    while t.checked < cases {
        let c = case(&mut rng, 3);
        let config = CompletionConfig { max_solutions: 20, ..c.config.clone() };
        let Ok(r) = complete(&c.model, &c.inst, &c.rules, &config) else { continue };
        t.checked += 1;
        let Outcome::Solutions(sols) = r.outcome else { continue };
        t.positive += 1;
        for s in &sols {
            if !c.inst.facts.is_subset(&s.facts) {
                return Err(format!("solution drops input facts: {:?}\n{}", s.facts, describe(&c)));
            }
            let report = validate(&c.model, s, &c.rules, Mode::Complete).map_err(|e| e.to_string())?;
            if !report.is_valid() {
                return Err(format!("invalid solution {:?}: {:?}\n{}", s.facts, report.violations, describe(&c)));
            }
        }
        if sols.iter().collect::<BTreeSet<_>>().len() != sols.len() {
            return Err(format!("duplicate solutions\n{}", describe(&c)));
        }
    }
    Ok(t)
}

/// Change sets partition the legacy facts, build the result from reused and
/// created facts, price correctly, validate, and never keep facts about a
/// removed object.
pub fn change_set_invariants(seed: u64, cases: usize) -> Result<Tally, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let costs = CostTable::default();
    while t.checked < cases {
        let c = legacy_case(&mut rng, 4);
        let run = reconcile(&c.inst, &c.model, &c.rules, &costs, &c.config).map_err(|e| e.to_string())?;
        t.checked += 1;
        let ReconcileOutcome::Repaired(cs) = run.outcome else { continue };
        t.positive += 1;
        let fail = |what: &str| Err(format!("{what}: {cs:?}\n{}", describe(&c)));
        let reused: BTreeSet<InstanceFact> = cs.reused.iter().map(|r| r.fact.clone()).collect();
        let deleted: BTreeSet<InstanceFact> = cs.deleted.iter().map(|r| r.fact.clone()).collect();
        if !reused.is_disjoint(&deleted) || &reused | &deleted != c.inst.facts {
            return fail("reused/deleted do not partition the legacy facts");
        }
        if &reused | &cs.created != cs.result.facts || !reused.is_disjoint(&cs.created) {
            return fail("result is not reused plus created");
        }
        let classified: BTreeSet<ObjectId> = cs
            .result
            .facts
            .iter()
            .filter_map(|f| match f {
                InstanceFact::Isa { object, .. } => Some(*object),
                _ => None,
            })
            .collect();
        for d in &deleted {
            if let InstanceFact::Isa { object, .. } = d {
                if !classified.contains(object) && cs.result.facts.iter().any(|f| f.mentions(*object)) {
                    return fail("facts about a deleted object survive");
                }
            }
        }
        let total: u64 = reused.iter().map(|f| costs.fact_cost(Action::Reuse, f)).sum::<u64>()
            + deleted.iter().map(|f| costs.fact_cost(Action::Delete, f)).sum::<u64>()
            + cs.created.iter().map(|f| costs.fact_cost(Action::Create, f)).sum::<u64>();
        if total != cs.total_cost {
            return fail("total cost does not match the cost table");
        }
        if !validate(&c.model, &cs.result, &c.rules, Mode::Complete).map_err(|e| e.to_string())?.is_valid() {
            return fail("result does not validate");
        }
    }
    Ok(t)
}

/// Fixture fact files and constraint files survive print and re-parse.
pub fn fixture_round_trips() -> Result<usize, String> {
    let mut n = 0;
    for (name, text) in FIXTURES {
        if name.ends_with(".lp") {
            let facts = parse_facts(text).map_err(|e| format!("{name}: {e}"))?.facts;
            let printed = serialize_facts(facts.clone());
            let again = parse_facts(&printed).map_err(|e| format!("{name} reprinted: {e}"))?.facts;
            if again.iter().collect::<BTreeSet<_>>() != facts.iter().collect::<BTreeSet<_>>() || serialize_facts(again) != printed {
                return Err(format!("{name} does not round-trip"));
            }
        } else if name.ends_with(".oc") {
            let rules = parse_constraints(text).map_err(|e| format!("{name}: {e}"))?;
            let printed: String = rules.iter().map(|r| format!("{r}\n")).collect();
            if parse_constraints(&printed).map_err(|e| format!("{name} reprinted: {e}"))? != rules {
                return Err(format!("{name} does not round-trip"));
            }
        } else {
            let costs = CostTable::parse(text).map_err(|e| format!("{name}: {e}"))?;
            if CostTable::parse(&costs.to_text()).map_err(|e| e.to_string())? != costs {
                return Err(format!("{name} does not round-trip"));
            }
        }
        n += 1;
    }
    Ok(n)
}

fn name(rng: &mut ChaCha8Rng) -> String {
    let first = *b"AbZq".choose(rng).unwrap() as char;
    let len = rng.gen_range(0..6);
    std::iter::once(first).chain((0..len).map(|_| *b"aZ09_x".choose(rng).unwrap() as char)).collect()
}

fn value(rng: &mut ChaCha8Rng) -> Value {
    if rng.gen_bool(0.5) {
        Value::Int(rng.gen_range(-50..50))
    } else {
        Value::Str(name(rng))
    }
}

fn random_fact(rng: &mut ChaCha8Rng) -> Fact {
    let (m, c, d) = (name(rng), name(rng), name(rng));
    let small = |rng: &mut ChaCha8Rng| rng.gen_range(0..6);
    match rng.gen_range(0..12) {
        0 => Fact::Class { model: m, class: c },
        1 => Fact::Subclass { model: m, class: c, superclass: d },
        2 => Fact::Assoc {
            model: m,
            assoc: name(rng),
            class1: c,
            min1: small(rng),
            max1: small(rng),
            class2: d,
            min2: small(rng),
            max2: small(rng),
        },
        3 => Fact::Attribute { model: m, class: c, attr: d, base_type: ["integer", "string", "boolean"].choose(rng).unwrap().to_string() },
        4 => Fact::AttributeMin { model: m, class: c, attr: d, value: rng.gen_range(-9..9) },
        5 => Fact::AttributeMax { model: m, class: c, attr: d, value: rng.gen_range(-9..9) },
        6 => Fact::AttributeEnum { model: m, class: c, attr: d, value: name(rng) },
        7 => Fact::Instantiation { model: m, inst: c },
        8 => Fact::Isa { inst: m, class: c, object: ObjectId(rng.gen_range(-5..100)) },
        9 => Fact::Associated { inst: m, assoc: c, from: ObjectId(rng.gen_range(0..100)), to: ObjectId(rng.gen_range(0..100)) },
        10 => Fact::AttributeValue { inst: m, attr: c, object: ObjectId(rng.gen_range(0..100)), value: value(rng) },
        _ => Fact::Violation { inst: m, kind: c.to_lowercase(), args: (0..rng.gen_range(0..4)).map(|_| value(rng)).collect() },
    }
}

/// Randomly generated fact files, printed with random spacing and comments,
/// parse back to the same facts.
pub fn random_round_trips(seed: u64, files: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..files {
        let facts: Vec<Fact> = (0..rng.gen_range(0..25)).map(|_| random_fact(&mut rng)).collect();
        let mut text = String::new();
        for f in &facts {
            let printed = f.to_string();
            text.push_str(&printed);
            text.push_str([" ", "\n", "\n\n  ", " % note\n", "\t"].choose(&mut rng).unwrap());
        }
        let parsed = parse_facts(&text).map_err(|e| format!("{e}\n{text}"))?.facts;
        if parsed != facts {
            return Err(format!("parsed facts differ for\n{text}"));
        }
        let canonical = serialize_facts(parsed.clone());
        let again = parse_facts(&canonical).map_err(|e| format!("{e}\n{canonical}"))?.facts;
        if serialize_facts(again) != canonical {
            return Err(format!("canonical form is not stable for\n{canonical}"));
        }
    }
    Ok(files)
}
