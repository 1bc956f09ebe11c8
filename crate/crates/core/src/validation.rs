//! Checks an instantiation against its model and the domain constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::dsl::{evaluate_constraints, ConstraintRule};
use crate::error::{Error, Result};
use crate::fact::Fact;
use crate::instance::{Instantiation, ObjectId, Value};
use crate::model::{Model, ValueFault};

pub const MIN_CARD: &str = "mincardviolated";
pub const MAX_CARD: &str = "maxcardviolated";
pub const ASSOC_TYPE: &str = "assoc_type_violated";
pub const DANGLING: &str = "dangling_reference";
pub const WRONG_TYPE: &str = "attr_unknown_value_type";
pub const RANGE: &str = "attr_range_violated";
pub const ENUM: &str = "attr_enum_violated";
pub const MISSING: &str = "attr_missing";
pub const MULTIPLE: &str = "attr_multiple";
pub const MULTI_CLASS: &str = "multiple_classification";
pub const UNKNOWN_CLASS: &str = "unknown_class";
pub const UNKNOWN_ASSOC: &str = "unknown_association";
pub const UNDECLARED_ATTR: &str = "attr_undeclared";

/// Kinds produced by the model-derived checks, as opposed to user rules.
pub const BUILTIN_KINDS: [&str; 13] = [
    MIN_CARD, MAX_CARD, ASSOC_TYPE, DANGLING, WRONG_TYPE, RANGE, ENUM, MISSING, MULTIPLE, MULTI_CLASS,
    UNKNOWN_CLASS, UNKNOWN_ASSOC, UNDECLARED_ATTR,
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Violation {
    pub inst_id: String,
    pub kind: String,
    pub args: Vec<Value>,
}

impl Violation {
    pub fn new(inst_id: &str, kind: &str, args: Vec<Value>) -> Self {
        Violation { inst_id: inst_id.to_string(), kind: kind.to_string(), args }
    }

    pub fn is_builtin(&self) -> bool {
        BUILTIN_KINDS.contains(&self.kind.as_str())
    }

    pub fn to_fact(&self) -> Fact {
        Fact::Violation { inst: self.inst_id.clone(), kind: self.kind.clone(), args: self.args.clone() }
    }

    /// The violation term, e.g. `mincardviolated(10,"Element_module")`.
    pub fn term(&self) -> String {
        if self.args.is_empty() {
            return self.kind.clone();
        }
        let args: Vec<String> = self.args.iter().map(Value::to_string).collect();
        format!("{}({})", self.kind, args.join(","))
    }

    /// Objects named by the arguments, for kinds whose argument positions are
    /// known.
    pub fn objects(&self) -> Vec<ObjectId> {
        let at = |i: usize| self.args.get(i).and_then(Value::as_int).map(ObjectId);
        let idx: &[usize] = match self.kind.as_str() {
            MIN_CARD | MAX_CARD | WRONG_TYPE | RANGE | ENUM | MISSING | MULTIPLE | MULTI_CLASS | UNKNOWN_CLASS
            | UNDECLARED_ATTR => &[0],
            ASSOC_TYPE | UNKNOWN_ASSOC => &[1, 2],
            DANGLING => &[1],
            _ => return self.args.iter().filter_map(Value::as_int).map(ObjectId).collect(),
        };
        idx.iter().filter_map(|&i| at(i)).collect()
    }

    pub fn message(&self) -> String {
        let a = |i: usize| self.args.get(i).map(|v| v.to_string()).unwrap_or_default();
        match self.kind.as_str() {
            MIN_CARD => format!("object {} has too few partners in association {}", a(0), a(1)),
            MAX_CARD => format!("object {} has too many partners in association {}", a(0), a(1)),
            ASSOC_TYPE => format!("link {}({},{}) connects objects of the wrong classes", a(0), a(1), a(2)),
            DANGLING => format!("{} refers to object {}, which has no class", a(0), a(1)),
            WRONG_TYPE => format!("value {} of attribute {} on object {} has the wrong type", a(2), a(1), a(0)),
            RANGE => format!("value {} of attribute {} on object {} is out of range", a(2), a(1), a(0)),
            ENUM => format!("value {} of attribute {} on object {} is not an allowed value", a(2), a(1), a(0)),
            MISSING => format!("object {} has no value for attribute {}", a(0), a(1)),
            MULTIPLE => format!("object {} has several values for attribute {}", a(0), a(1)),
            MULTI_CLASS => format!("object {} is declared with more than one class", a(0)),
            UNKNOWN_CLASS => format!("object {} is declared with unknown class {}", a(0), a(1)),
            UNKNOWN_ASSOC => format!("link ({},{}) uses unknown association {}", a(1), a(2), a(0)),
            UNDECLARED_ATTR => format!("object {} has a value for attribute {}, which its class lacks", a(0), a(1)),
            _ => format!("constraint {} violated", self.term()),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ooasp_cv(\"{}\",{})", self.inst_id, self.term())
    }
}

/// Partial mode skips the checks a later completion could still satisfy:
/// minimum cardinalities and missing attribute values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Partial,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: BTreeSet<Violation>,
    pub mode: Mode,
    /// Informational remarks that do not make the instantiation invalid.
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(model: &Model, inst: &Instantiation, rules: &[ConstraintRule], mode: Mode) -> Result<ValidationReport> {
    if inst.model_id != model.id {
        return Err(Error::ModelMismatch {
            inst: inst.inst_id.clone(),
            inst_model: inst.model_id.clone(),
            model: model.id.clone(),
        });
    }
    let (mut violations, notes) = builtin_violations(model, inst, mode);
    violations.extend(evaluate_constraints(rules, model, inst)?);
    Ok(ValidationReport { violations, mode, notes })
}

/// The model-derived checks alone, plus informational notes.
pub fn builtin_violations(model: &Model, inst: &Instantiation, mode: Mode) -> (BTreeSet<Violation>, Vec<String>) {
    let id = inst.inst_id.as_str();
    let mut out = BTreeSet::new();
    let mut notes = Vec::new();
    let mut push = |kind: &str, args: Vec<Value>| {
        out.insert(Violation::new(id, kind, args));
    };
    let objects = inst.objects();
    let is_instance = |o: ObjectId, class: &str| {
        objects.get(&o).is_some_and(|cs| cs.iter().any(|c| model.is_a(c, class)))
    };

    for (o, classes) in &objects {
        if classes.len() > 1 {
            push(MULTI_CLASS, vec![(*o).into()]);
        }
        for c in classes {
            if !model.classes.contains(*c) {
                push(UNKNOWN_CLASS, vec![(*o).into(), Value::from(*c)]);
            } else if !model.is_leaf(c) {
                notes.push(format!("object {o} is an instance of non-leaf class {c}"));
            }
        }
    }

    // Correctly typed partner counts: (object, assoc) -> count, per side.
    let mut as_first: BTreeMap<(ObjectId, &str), u32> = BTreeMap::new();
    let mut as_second: BTreeMap<(ObjectId, &str), u32> = BTreeMap::new();
    for (a, from, to) in inst.links() {
        let Some(assoc) = model.associations.get(a) else {
            push(UNKNOWN_ASSOC, vec![a.into(), from.into(), to.into()]);
            continue;
        };
        let mut dangling = false;
        for o in [from, to] {
            if !objects.contains_key(&o) {
                push(DANGLING, vec![a.into(), o.into()]);
                dangling = true;
            }
        }
        if dangling {
            continue;
        }
        if !is_instance(from, &assoc.class1) || !is_instance(to, &assoc.class2) {
            push(ASSOC_TYPE, vec![a.into(), from.into(), to.into()]);
            continue;
        }
        *as_first.entry((from, a)).or_default() += 1;
        *as_second.entry((to, a)).or_default() += 1;
    }
    for o in objects.keys() {
        for (a, assoc) in &model.associations {
            let mut check = |count: u32, min: u32, max: u32| {
                if count > max {
                    push(MAX_CARD, vec![(*o).into(), a.as_str().into()]);
                }
                if mode == Mode::Complete && count < min {
                    push(MIN_CARD, vec![(*o).into(), a.as_str().into()]);
                }
            };
            if is_instance(*o, &assoc.class1) {
                check(as_first.get(&(*o, a.as_str())).copied().unwrap_or(0), assoc.min2, assoc.max2);
            }
            if is_instance(*o, &assoc.class2) {
                check(as_second.get(&(*o, a.as_str())).copied().unwrap_or(0), assoc.min1, assoc.max1);
            }
        }
    }

    let mut value_counts: BTreeMap<(ObjectId, &str), u32> = BTreeMap::new();
    for (at, o, v) in inst.values() {
        let Some(classes) = objects.get(&o) else {
            push(DANGLING, vec![at.into(), o.into()]);
            continue;
        };
        *value_counts.entry((o, at)).or_default() += 1;
        let Some(decl) = classes.iter().find_map(|c| model.attribute_for(c, at)) else {
            push(UNDECLARED_ATTR, vec![o.into(), at.into()]);
            continue;
        };
        let kind = match decl.check(v) {
            Ok(()) => continue,
            Err(ValueFault::WrongType) => WRONG_TYPE,
            Err(ValueFault::OutOfRange) => RANGE,
            Err(ValueFault::NotInEnum) => ENUM,
        };
        push(kind, vec![o.into(), at.into(), v.clone()]);
    }
    for ((o, at), n) in &value_counts {
        if *n > 1 {
            push(MULTIPLE, vec![(*o).into(), (*at).into()]);
        }
    }
    if mode == Mode::Complete {
        for (o, classes) in &objects {
            for c in classes {
                for decl in model.applicable_attributes(c).unwrap_or_default() {
                    if !value_counts.contains_key(&(*o, decl.id.as_str())) {
                        push(MISSING, vec![(*o).into(), decl.id.as_str().into()]);
                    }
                }
            }
        }
    }
    (out, notes)
}
