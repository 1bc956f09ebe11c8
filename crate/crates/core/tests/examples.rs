//! The modules example end to end through the library.

use std::collections::BTreeSet;

use ooasp::completion::{check_model_consistency, complete, CompletionConfig, Consistency, Outcome, UnsatCause};
use ooasp::dsl::parse_constraints;
use ooasp::instance::{InstanceFact, Instantiation, Value};
use ooasp::model::Model;
use ooasp::parser::parse_facts;
use ooasp::reconcile::{reconcile, reify, CostTable, ReconcileOutcome};
use ooasp::session::Session;
use ooasp::validation::{validate, Mode};

const V1: &str = include_str!("../../../fixtures/modules_v1.lp");
const V2: &str = include_str!("../../../fixtures/modules_v2.lp");
const RULES: &str = include_str!("../../../fixtures/modules.oc");
const ADJ: &str = include_str!("../../../fixtures/adjacency_v2.oc");

fn session(parts: &[&str]) -> Session {
    Session::load(&[parse_facts(&parts.concat()).unwrap()]).unwrap()
}

fn count_class(model: &Model, inst: &Instantiation, class: &str) -> usize {
    inst.objects().values().filter(|cs| cs.iter().any(|c| model.is_a(c, class))).count()
}

fn elements(n: i64) -> String {
    let mut s = String::from("ooasp_instantiation(\"v1\",\"e\").\n");
    for o in 10..10 + n {
        s.push_str(&format!("ooasp_isa(\"e\",\"ElementA\",{o}).\n"));
    }
    s
}

#[test]
fn empty_instantiation_completes_to_itself() {
    let s = session(&[V1, include_str!("../../../fixtures/empty_v1.lp")]);
    let model = s.model("v1").unwrap();
    let inst = s.only_instantiation().unwrap();
    let r = complete(model, inst, &parse_constraints(RULES).unwrap(), &CompletionConfig::default().with_solutions(10)).unwrap();
    assert_eq!(r.solutions(), std::slice::from_ref(inst));
}

#[test]
fn six_elements_need_two_frames() {
    let s = session(&[V1, &elements(6)]);
    let model = s.model("v1").unwrap();
    let inst = s.instantiation("e").unwrap();
    let rules = parse_constraints(RULES).unwrap();

    // With at most two frames available, ruling out zero and one frame
    // leaves exactly two in every solution.
    for frames in [0, 1] {
        let config = CompletionConfig::default().with_max("Frame", frames).with_max("ModuleA", 6);
        let r = complete(model, inst, &rules, &config).unwrap();
        assert!(matches!(r.outcome, Outcome::Unsat { cause: UnsatCause::UnsatWithinBounds, .. }));
    }

    let two = CompletionConfig::default().with_max("Frame", 2).with_max("ModuleA", 6).with_solutions(25);
    let r = complete(model, inst, &rules, &two).unwrap();
    let sols = r.solutions();
    assert_eq!(sols.len(), 25);
    for s in sols {
        assert_eq!(count_class(model, s, "Frame"), 2);
        assert_eq!(count_class(model, s, "ModuleA"), 6);
        assert!(validate(model, s, &rules, Mode::Complete).unwrap().is_valid());
    }
}

#[test]
fn model_v1_is_consistent() {
    let s = session(&[V1]);
    let model = s.model("v1").unwrap();
    let rules = parse_constraints(RULES).unwrap();
    let c = check_model_consistency(model, &rules, &CompletionConfig::uniform(model, 1)).unwrap();
    let Consistency::Consistent(w) = c else { panic!("expected a witness") };
    assert!(w.is_empty());
}

#[test]
fn forbidden_frame_has_no_witness() {
    let s = session(&[V1]);
    let model = s.model("v1").unwrap();
    let rules = parse_constraints(&format!("{RULES}\ncv no_frames(X) :- isa(X,\"Frame\").")).unwrap();
    let config = CompletionConfig::uniform(model, 1).with_min("Frame", 1);
    assert_eq!(check_model_consistency(model, &rules, &config).unwrap(), Consistency::NoWitnessWithinBounds);
}

#[test]
fn model_v2_with_adjacency_has_a_full_witness() {
    let s = session(&[V2]);
    let model = s.model("v2").unwrap();
    let rules = parse_constraints(&format!("{RULES}\n{ADJ}")).unwrap();
    let bounds = CompletionConfig::default().with_max("Frame", 2).with_max("ModuleA", 5).with_max("ModuleB", 5);
    let Consistency::Consistent(w) = check_model_consistency(model, &rules, &bounds).unwrap() else { panic!() };
    assert!(w.is_empty());
    // Three ModuleA and two ModuleB in one frame still fit.
    let forced = bounds
        .with_max("ElementA", 3)
        .with_max("ElementB", 2)
        .with_min("ElementA", 3)
        .with_min("ElementB", 2)
        .with_max("Frame", 1);
    let Consistency::Consistent(w) = check_model_consistency(model, &rules, &forced).unwrap() else { panic!() };
    assert_eq!(count_class(model, &w, "Module"), 5);
    let mut a_positions: Vec<i64> = w
        .values()
        .filter(|(_, o, _)| w.objects()[o].contains("ModuleA"))
        .filter_map(|(_, _, v)| v.as_int())
        .collect();
    a_positions.sort();
    assert_eq!(a_positions, [1, 3, 5]);
}

#[test]
fn c3_completion_places_five_modules() {
    let s = session(&[V1, include_str!("../../../fixtures/c3.lp")]);
    let model = s.model("v1").unwrap();
    let inst = s.instantiation("c3").unwrap();
    let rules = parse_constraints(RULES).unwrap();
    let config = CompletionConfig::default().with_max("Frame", 1).with_max("ModuleA", 3).with_max("ModuleB", 2).with_solutions(200);
    let r = complete(model, inst, &rules, &config).unwrap();
    assert!(!r.solutions().is_empty());
    for sol in r.solutions() {
        let modules: BTreeSet<_> = sol.objects().into_iter().filter(|(_, cs)| cs.iter().any(|c| model.is_a(c, "Module"))).map(|(o, _)| o).collect();
        assert_eq!(modules.len(), 5);
        let positions: BTreeSet<&Value> = sol.values().filter(|(a, o, _)| *a == "position" && modules.contains(o)).map(|(_, _, v)| v).collect();
        assert_eq!(positions.len(), 5);
    }
}

#[test]
fn c4_reconciles_by_moving_two_modules() {
    let s = session(&[V1, V2, include_str!("../../../fixtures/c4_complete.lp")]);
    let legacy = s.instantiation("c4").unwrap();
    assert_eq!(reify(legacy).len(), 26);
    let rules = parse_constraints(&format!("{RULES}\n{ADJ}")).unwrap();
    let r = reconcile(legacy, s.model("v2").unwrap(), &rules, &CostTable::default(), &CompletionConfig::default()).unwrap();
    let ReconcileOutcome::Repaired(cs) = r.outcome else { panic!() };
    assert_eq!(cs.total_cost, 4);
    let deleted: Vec<_> = cs.deleted.iter().map(|r| r.fact.clone()).collect();
    assert_eq!(deleted, [InstanceFact::value("position", 21, 2), InstanceFact::value("position", 24, 5)]);
    assert_eq!(cs.created, [InstanceFact::value("position", 21, 5), InstanceFact::value("position", 24, 2)].into());
    assert_eq!(cs.reused.len(), 24);
}

#[test]
fn valid_legacy_is_reused_whole() {
    let s = session(&[V1, V2, include_str!("../../../fixtures/c4_complete.lp")]);
    let legacy = s.instantiation("c4").unwrap();
    let rules = parse_constraints(RULES).unwrap();
    let r = reconcile(legacy, s.model("v2").unwrap(), &rules, &CostTable::default(), &CompletionConfig::default()).unwrap();
    let ReconcileOutcome::Repaired(cs) = r.outcome else { panic!() };
    assert_eq!((cs.total_cost, cs.deleted.len(), cs.created.len()), (0, 0, 0));
}
