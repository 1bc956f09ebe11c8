//! Seeded generator of small models, instantiations and rule sets.

#![allow(dead_code)]

pub mod checks;

use ooasp::completion::CompletionConfig;
use ooasp::dsl::{parse_constraints, ConstraintRule};
use ooasp::instance::{InstanceFact as F, Instantiation, Value};
use ooasp::model::{build_model, Model};
use ooasp::parser::parse_facts;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub model: Model,
    pub inst: Instantiation,
    pub rules: Vec<ConstraintRule>,
    pub config: CompletionConfig,
    pub text: String,
}

#[derive(Clone, Copy, PartialEq)]
pub enum AttrType {
    None,
    Int(i64),
    Bool,
    Enum,
}

pub fn model_text(rng: &mut ChaCha8Rng) -> (String, Vec<&'static str>, Vec<&'static str>, AttrType) {
    let mut t = String::new();
    let with_c = rng.gen_bool(0.3);
    let hierarchy = rng.gen_bool(0.5);
    let mut classes = vec!["A", "B"];
    if with_c {
        classes.push("C");
    }
    let mut all = classes.clone();
    if hierarchy {
        all.push("R");
        t.push_str(r#"ooasp_class("m","R"). ooasp_subclass("m","A","R"). ooasp_subclass("m","B","R")."#);
    }
    for c in &classes {
        t.push_str(&format!(r#"ooasp_class("m","{c}")."#));
    }
    let mut assocs = Vec::new();
    for name in ["r0", "r1"] {
        if name == "r1" && rng.gen_bool(0.6) {
            break;
        }
        let c1 = all.choose(rng).unwrap();
        let c2 = all.choose(rng).unwrap();
        let (min1, min2) = (rng.gen_range(0..=1), rng.gen_range(0..=1));
        let (max1, max2) = (min1 + rng.gen_range(0..=1).max(1 - min1), min2 + rng.gen_range(0..=1).max(1 - min2));
        t.push_str(&format!(r#"ooasp_assoc("m","{name}","{c1}",{min1},{max1},"{c2}",{min2},{max2})."#));
        assocs.push(name);
    }
    let owner = all.choose(rng).unwrap();
    let attr = match rng.gen_range(0..5) {
        0 | 1 => AttrType::None,
        2 => AttrType::Int(rng.gen_range(1..=3)),
        3 => AttrType::Bool,
        _ => AttrType::Enum,
    };
    match attr {
        AttrType::None => {}
        AttrType::Int(hi) => t.push_str(&format!(
            r#"ooasp_attribute("m","{owner}","w","integer"). ooasp_attribute_minInclusive("m","{owner}","w",1). ooasp_attribute_maxInclusive("m","{owner}","w",{hi})."#
        )),
        AttrType::Bool => t.push_str(&format!(r#"ooasp_attribute("m","{owner}","w","boolean")."#)),
        AttrType::Enum => t.push_str(&format!(
            r#"ooasp_attribute("m","{owner}","w","string"). ooasp_attribute_enum("m","{owner}","w","x"). ooasp_attribute_enum("m","{owner}","w","y")."#
        )),
    }
    (t, classes, assocs, attr)
}

fn rules_for(rng: &mut ChaCha8Rng, assocs: &[&str], attr: AttrType) -> String {
    let mut pool: Vec<&str> = vec![r#"cv pair(X,Y) :- isa(X,"A"), isa(Y,"A"), X < Y."#, r#"cv b_alone(X) :- isa(X,"B"), not isa(X,"A")."#];
    if assocs.contains(&"r0") {
        pool.push(r#"cv typed(X,Y) :- associated("r0",X,Y), isa(X,"A"), not isa(Y,"B")."#);
        pool.push(r#"cv loop(X) :- associated("r0",X,X)."#);
        pool.push(r#"cv lonely(X) :- isa(X,"A"), not associated("r0",X,X)."#);
    }
    if let AttrType::Int(_) = attr {
        pool.push(r#"cv high(X) :- value("w",X,V), V > 1."#);
        pool.push(r#"cv next(X,Y) :- value("w",X,V), value("w",Y,V+1)."#);
        if assocs.contains(&"r0") {
            pool.push(r#"cv same(X,Y,F) :- associated("r0",F,X), associated("r0",F,Y), value("w",X,V), value("w",Y,V), X != Y."#);
        }
    }
    if attr == AttrType::Enum {
        pool.push(r#"cv isx(X) :- value("w",X,"x"), isa(X,"B")."#);
    }
    let n = rng.gen_range(0..=2);
    pool.choose_multiple(rng, n).copied().collect::<Vec<_>>().join("\n")
}

/// Random facts over a few objects; some may be ill-typed.
pub fn instance_facts(rng: &mut ChaCha8Rng, classes: &[&str], assocs: &[&str], attr: AttrType, max_objects: usize) -> Vec<F> {
    let n = rng.gen_range(0..=max_objects);
    let ids: Vec<i64> = (1..=n as i64).collect();
    let mut facts = Vec::new();
    for id in &ids {
        let class = if rng.gen_bool(0.1) { "Old" } else { classes.choose(rng).unwrap() };
        facts.push(F::isa(class, *id));
    }
    if !ids.is_empty() {
        for _ in 0..rng.gen_range(0..=2) {
            if let Some(a) = assocs.choose(rng) {
                facts.push(F::link(a, *ids.choose(rng).unwrap(), *ids.choose(rng).unwrap()));
            }
        }
        if attr != AttrType::None && rng.gen_bool(0.5) {
            let v = match attr {
                AttrType::Int(hi) => Value::Int(rng.gen_range(1..=hi + 1)),
                AttrType::Bool => Value::Str("true".into()),
                _ => Value::Str(["x", "y", "z"].choose(rng).unwrap().to_string()),
            };
            facts.push(F::value("w", *ids.choose(rng).unwrap(), v));
        }
    }
    facts
}

pub fn case(rng: &mut ChaCha8Rng, max_objects: usize) -> Case {
    let (text, classes, assocs, attr) = model_text(rng);
    let model = build_model(&parse_facts(&text).unwrap().facts).unwrap();
    let rules = parse_constraints(&rules_for(rng, &assocs, attr)).unwrap();
    let facts: Vec<F> = instance_facts(rng, &classes, &assocs, attr, max_objects)
        .into_iter()
        .filter(|f| !matches!(f, F::Isa { class, .. } if class == "Old"))
        .collect();
    let inst = Instantiation::new("m", "i").with_facts(facts);
    let mut config = CompletionConfig::default().with_solutions(1_000_000);
    for c in &classes {
        let max = rng.gen_range(0..=2);
        config.max_new_per_class.insert(c.to_string(), max);
        if max > 0 && rng.gen_bool(0.15) {
            config.min_new_per_class.insert(c.to_string(), 1);
        }
    }
    Case { model, inst, rules, config, text }
}

/// A legacy instantiation for reconciliation into a fresh model; may hold
/// facts about classes the target lacks.
pub fn legacy_case(rng: &mut ChaCha8Rng, max_objects: usize) -> Case {
    let (text, classes, assocs, attr) = model_text(rng);
    let model = build_model(&parse_facts(&text).unwrap().facts).unwrap();
    let rules = parse_constraints(&rules_for(rng, &assocs, attr)).unwrap();
    let inst = Instantiation::new("old", "l").with_facts(instance_facts(rng, &classes, &assocs, attr, max_objects));
    let mut config = CompletionConfig::default();
    for c in &classes {
        config.max_new_per_class.insert(c.to_string(), rng.gen_range(0..=1));
    }
    Case { model, inst, rules, config, text }
}
