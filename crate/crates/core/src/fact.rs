//! Syntax-level facts of the DDL fact language.

use std::cmp::Ordering;
use std::fmt;

use crate::instance::{InstanceFact, ObjectId, Value};

/// An argument of a fact. Functor terms only occur inside `ooasp_cv`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Str(String),
    Func(String, Vec<Term>),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Str(s) => write!(f, "\"{s}\""),
            Term::Func(name, args) if args.is_empty() => write!(f, "{name}"),
            Term::Func(name, args) => {
                write!(f, "{name}(")?;
                write_args(f, args)?;
                write!(f, ")")
            }
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl From<&Value> for Term {
    fn from(v: &Value) -> Self {
        match v {
            Value::Int(i) => Term::Int(*i),
            Value::Str(s) => Term::Str(s.clone()),
        }
    }
}

/// One fact of the DDL vocabulary (eleven model/instance predicates plus the
/// violation atom `ooasp_cv`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Fact {
    Class { model: String, class: String },
    Subclass { model: String, class: String, superclass: String },
    Assoc { model: String, assoc: String, class1: String, min1: i64, max1: i64, class2: String, min2: i64, max2: i64 },
    Attribute { model: String, class: String, attr: String, base_type: String },
    AttributeMin { model: String, class: String, attr: String, value: i64 },
    AttributeMax { model: String, class: String, attr: String, value: i64 },
    AttributeEnum { model: String, class: String, attr: String, value: String },
    Instantiation { model: String, inst: String },
    Isa { inst: String, class: String, object: ObjectId },
    Associated { inst: String, assoc: String, from: ObjectId, to: ObjectId },
    AttributeValue { inst: String, attr: String, object: ObjectId, value: Value },
    Violation { inst: String, kind: String, args: Vec<Value> },
}

/// Predicate name and arity of every fact the reader accepts.
pub const PREDICATES: [(&str, usize); 12] = [
    ("ooasp_class", 2),
    ("ooasp_subclass", 3),
    ("ooasp_assoc", 8),
    ("ooasp_attribute", 4),
    ("ooasp_attribute_minInclusive", 4),
    ("ooasp_attribute_maxInclusive", 4),
    ("ooasp_attribute_enum", 4),
    ("ooasp_instantiation", 2),
    ("ooasp_isa", 3),
    ("ooasp_associated", 4),
    ("ooasp_attribute_value", 4),
    ("ooasp_cv", 2),
];

impl Fact {
    pub fn predicate(&self) -> &'static str {
        match self {
            Fact::Class { .. } => "ooasp_class",
            Fact::Subclass { .. } => "ooasp_subclass",
            Fact::Assoc { .. } => "ooasp_assoc",
            Fact::Attribute { .. } => "ooasp_attribute",
            Fact::AttributeMin { .. } => "ooasp_attribute_minInclusive",
            Fact::AttributeMax { .. } => "ooasp_attribute_maxInclusive",
            Fact::AttributeEnum { .. } => "ooasp_attribute_enum",
            Fact::Instantiation { .. } => "ooasp_instantiation",
            Fact::Isa { .. } => "ooasp_isa",
            Fact::Associated { .. } => "ooasp_associated",
            Fact::AttributeValue { .. } => "ooasp_attribute_value",
            Fact::Violation { .. } => "ooasp_cv",
        }
    }

    pub fn args(&self) -> Vec<Term> {
        let s = |x: &String| Term::Str(x.clone());
        let o = |x: &ObjectId| Term::Int(x.0);
        match self {
            Fact::Class { model, class } => vec![s(model), s(class)],
            Fact::Subclass { model, class, superclass } => vec![s(model), s(class), s(superclass)],
            Fact::Assoc { model, assoc, class1, min1, max1, class2, min2, max2 } => vec![
                s(model),
                s(assoc),
                s(class1),
                Term::Int(*min1),
                Term::Int(*max1),
                s(class2),
                Term::Int(*min2),
                Term::Int(*max2),
            ],
            Fact::Attribute { model, class, attr, base_type } => vec![s(model), s(class), s(attr), s(base_type)],
            Fact::AttributeMin { model, class, attr, value } | Fact::AttributeMax { model, class, attr, value } => {
                vec![s(model), s(class), s(attr), Term::Int(*value)]
            }
            Fact::AttributeEnum { model, class, attr, value } => vec![s(model), s(class), s(attr), s(value)],
            Fact::Instantiation { model, inst } => vec![s(model), s(inst)],
            Fact::Isa { inst, class, object } => vec![s(inst), s(class), o(object)],
            Fact::Associated { inst, assoc, from, to } => vec![s(inst), s(assoc), o(from), o(to)],
            Fact::AttributeValue { inst, attr, object, value } => vec![s(inst), s(attr), o(object), value.into()],
            Fact::Violation { inst, kind, args } => {
                vec![s(inst), Term::Func(kind.clone(), args.iter().map(Term::from).collect())]
            }
        }
    }

    pub fn is_model_level(&self) -> bool {
        matches!(
            self,
            Fact::Class { .. }
                | Fact::Subclass { .. }
                | Fact::Assoc { .. }
                | Fact::Attribute { .. }
                | Fact::AttributeMin { .. }
                | Fact::AttributeMax { .. }
                | Fact::AttributeEnum { .. }
        )
    }

    /// Model id of a model-level fact.
    pub fn model_id(&self) -> Option<&str> {
        match self {
            Fact::Class { model, .. }
            | Fact::Subclass { model, .. }
            | Fact::Assoc { model, .. }
            | Fact::Attribute { model, .. }
            | Fact::AttributeMin { model, .. }
            | Fact::AttributeMax { model, .. }
            | Fact::AttributeEnum { model, .. } => Some(model),
            _ => None,
        }
    }

    /// Splits an instance-level fact into its instantiation id and content.
    pub fn to_instance_fact(&self) -> Option<(&str, InstanceFact)> {
        match self {
            Fact::Isa { inst, class, object } => Some((inst, InstanceFact::Isa { class: class.clone(), object: *object })),
            Fact::Associated { inst, assoc, from, to } => {
                Some((inst, InstanceFact::Associated { assoc: assoc.clone(), from: *from, to: *to }))
            }
            Fact::AttributeValue { inst, attr, object, value } => Some((
                inst,
                InstanceFact::AttributeValue { attr: attr.clone(), object: *object, value: value.clone() },
            )),
            _ => None,
        }
    }

    pub fn from_instance_fact(inst: &str, fact: &InstanceFact) -> Self {
        let inst = inst.to_string();
        match fact.clone() {
            InstanceFact::Isa { class, object } => Fact::Isa { inst, class, object },
            InstanceFact::Associated { assoc, from, to } => Fact::Associated { inst, assoc, from, to },
            InstanceFact::AttributeValue { attr, object, value } => Fact::AttributeValue { inst, attr, object, value },
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate())?;
        write_args(f, &self.args())?;
        write!(f, ").")
    }
}

impl Ord for Fact {
    fn cmp(&self, other: &Self) -> Ordering {
        self.predicate().cmp(other.predicate()).then_with(|| self.args().cmp(&other.args()))
    }
}

impl PartialOrd for Fact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nested_violation() {
        let f = Fact::Violation {
            inst: "c2".into(),
            kind: "mincardviolated".into(),
            args: vec![Value::Int(10), Value::Str("Element_module".into())],
        };
        assert_eq!(f.to_string(), r#"ooasp_cv("c2",mincardviolated(10,"Element_module"))."#);
    }

    #[test]
    fn orders_by_predicate_then_args() {
        let a = Fact::Isa { inst: "c".into(), class: "B".into(), object: ObjectId(1) };
        let b = Fact::Isa { inst: "c".into(), class: "A".into(), object: ObjectId(2) };
        let c = Fact::Class { model: "z".into(), class: "Z".into() };
        let mut v = vec![a.clone(), b.clone(), c.clone()];
        v.sort();
        assert_eq!(v, vec![c, b, a]);
    }
}
