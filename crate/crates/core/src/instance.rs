//! Instantiations: objects, association links and attribute values claimed to
//! realize a model. Facts are kept as a set, so duplicates collapse and the
//! iteration order is canonical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

/// Integer object identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ObjectId(pub i64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<i64> for ObjectId {
    fn from(v: i64) -> Self {
        ObjectId(v)
    }
}

/// A ground constant: attribute values, violation arguments and the bindings
/// of constraint variables. Integers order before strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            Value::Int(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<ObjectId> for Value {
    fn from(v: ObjectId) -> Self {
        Value::Int(v.0)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

/// The three kinds of instance-level facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactKind {
    Isa,
    Associated,
    AttributeValue,
}

impl FactKind {
    pub const ALL: [FactKind; 3] = [FactKind::Isa, FactKind::Associated, FactKind::AttributeValue];

    pub fn as_str(self) -> &'static str {
        match self {
            FactKind::Isa => "isa",
            FactKind::Associated => "associated",
            FactKind::AttributeValue => "attribute_value",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        FactKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// One instance-level fact, independent of the instantiation that holds it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstanceFact {
    Isa { class: String, object: ObjectId },
    Associated { assoc: String, from: ObjectId, to: ObjectId },
    AttributeValue { attr: String, object: ObjectId, value: Value },
}

impl InstanceFact {
    pub fn isa(class: &str, object: i64) -> Self {
        InstanceFact::Isa { class: class.to_string(), object: ObjectId(object) }
    }

    pub fn link(assoc: &str, from: i64, to: i64) -> Self {
        InstanceFact::Associated { assoc: assoc.to_string(), from: ObjectId(from), to: ObjectId(to) }
    }

    pub fn value(attr: &str, object: i64, value: impl Into<Value>) -> Self {
        InstanceFact::AttributeValue { attr: attr.to_string(), object: ObjectId(object), value: value.into() }
    }

    pub fn kind(&self) -> FactKind {
        match self {
            InstanceFact::Isa { .. } => FactKind::Isa,
            InstanceFact::Associated { .. } => FactKind::Associated,
            InstanceFact::AttributeValue { .. } => FactKind::AttributeValue,
        }
    }

    /// Objects mentioned by the fact, in argument order.
    pub fn objects(&self) -> Vec<ObjectId> {
        match self {
            InstanceFact::Isa { object, .. } | InstanceFact::AttributeValue { object, .. } => vec![*object],
            InstanceFact::Associated { from, to, .. } => vec![*from, *to],
        }
    }

    pub fn mentions(&self, o: ObjectId) -> bool {
        self.objects().contains(&o)
    }

    /// The same fact with every object id passed through `f`.
    pub fn renamed(&self, f: impl Fn(ObjectId) -> ObjectId) -> Self {
        match self {
            InstanceFact::Isa { class, object } => InstanceFact::Isa { class: class.clone(), object: f(*object) },
            InstanceFact::Associated { assoc, from, to } => {
                InstanceFact::Associated { assoc: assoc.clone(), from: f(*from), to: f(*to) }
            }
            InstanceFact::AttributeValue { attr, object, value } => {
                InstanceFact::AttributeValue { attr: attr.clone(), object: f(*object), value: value.clone() }
            }
        }
    }

    /// Renders the fact as it appears inside instantiation `inst`.
    pub fn render(&self, inst: &str) -> String {
        match self {
            InstanceFact::Isa { class, object } => format!("ooasp_isa(\"{inst}\",\"{class}\",{object})."),
            InstanceFact::Associated { assoc, from, to } => {
                format!("ooasp_associated(\"{inst}\",\"{assoc}\",{from},{to}).")
            }
            InstanceFact::AttributeValue { attr, object, value } => {
                format!("ooasp_attribute_value(\"{inst}\",\"{attr}\",{object},{value}).")
            }
        }
    }
}

/// An instantiation `inst_id` of model `model_id`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instantiation {
    pub inst_id: String,
    pub model_id: String,
    pub facts: BTreeSet<InstanceFact>,
}

impl Instantiation {
    pub fn new(model_id: impl Into<String>, inst_id: impl Into<String>) -> Self {
        Instantiation { inst_id: inst_id.into(), model_id: model_id.into(), facts: BTreeSet::new() }
    }

    pub fn with_facts(mut self, facts: impl IntoIterator<Item = InstanceFact>) -> Self {
        self.facts.extend(facts);
        self
    }

    pub fn insert(&mut self, fact: InstanceFact) -> bool {
        self.facts.insert(fact)
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    /// Declared classes per object, as written in the `isa` facts.
    pub fn objects(&self) -> BTreeMap<ObjectId, BTreeSet<&str>> {
        let mut out: BTreeMap<ObjectId, BTreeSet<&str>> = BTreeMap::new();
        for f in &self.facts {
            if let InstanceFact::Isa { class, object } = f {
                out.entry(*object).or_default().insert(class);
            }
        }
        out
    }

    /// Every object id mentioned by any fact, declared or not.
    pub fn mentioned_objects(&self) -> BTreeSet<ObjectId> {
        self.facts.iter().flat_map(|f| f.objects()).collect()
    }

    pub fn max_object_id(&self) -> Option<i64> {
        self.mentioned_objects().iter().next_back().map(|o| o.0)
    }

    pub fn links(&self) -> impl Iterator<Item = (&str, ObjectId, ObjectId)> {
        self.facts.iter().filter_map(|f| match f {
            InstanceFact::Associated { assoc, from, to } => Some((assoc.as_str(), *from, *to)),
            _ => None,
        })
    }

    pub fn values(&self) -> impl Iterator<Item = (&str, ObjectId, &Value)> {
        self.facts.iter().filter_map(|f| match f {
            InstanceFact::AttributeValue { attr, object, value } => Some((attr.as_str(), *object, value)),
            _ => None,
        })
    }

    pub fn count(&self, kind: FactKind) -> usize {
        self.facts.iter().filter(|f| f.kind() == kind).count()
    }
}
