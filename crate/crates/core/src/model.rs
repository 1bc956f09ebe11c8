//! Object models: classes in a single-inheritance forest, associations with
//! two-sided cardinalities and typed attributes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::fact::Fact;
use crate::instance::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseType {
    String,
    Integer,
    Boolean,
}

impl BaseType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "string" => Some(BaseType::String),
            "integer" => Some(BaseType::Integer),
            "boolean" => Some(BaseType::Boolean),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BaseType::String => "string",
            BaseType::Integer => "integer",
            BaseType::Boolean => "boolean",
        }
    }
}

/// Association `id` between `class1` and `class2`. Every instance of `class1`
/// has between `min2` and `max2` partners of `class2`, and every instance of
/// `class2` between `min1` and `max1` partners of `class1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Association {
    pub id: String,
    pub class1: String,
    pub min1: u32,
    pub max1: u32,
    pub class2: String,
    pub min2: u32,
    pub max2: u32,
}

/// Why a value does not fit an attribute declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueFault {
    WrongType,
    OutOfRange,
    NotInEnum,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeDecl {
    pub owner: String,
    pub id: String,
    pub base_type: BaseType,
    pub min_value: Option<i64>,
    pub max_value: Option<i64>,
    pub enum_values: Option<BTreeSet<String>>,
}

impl AttributeDecl {
    pub fn check(&self, value: &Value) -> Result<(), ValueFault> {
        match (self.base_type, value) {
            (BaseType::Integer, Value::Int(v)) => {
                if self.min_value.is_some_and(|m| *v < m) || self.max_value.is_some_and(|m| *v > m) {
                    Err(ValueFault::OutOfRange)
                } else {
                    Ok(())
                }
            }
            (BaseType::String, Value::Str(s)) => match &self.enum_values {
                Some(e) if !e.contains(s) => Err(ValueFault::NotInEnum),
                _ => Ok(()),
            },
            (BaseType::Boolean, Value::Str(s)) if s == "true" || s == "false" => Ok(()),
            _ => Err(ValueFault::WrongType),
        }
    }

    /// Finite value domain, ascending. Integer bounds missing from the
    /// declaration are taken from `default_int`; `None` when no finite
    /// domain exists.
    pub fn domain(&self, default_int: Option<(i64, i64)>) -> Option<Vec<Value>> {
        match self.base_type {
            BaseType::Integer => {
                let lo = self.min_value.or(default_int.map(|d| d.0))?;
                let hi = self.max_value.or(default_int.map(|d| d.1))?;
                Some((lo..=hi).map(Value::Int).collect())
            }
            BaseType::Boolean => Some(vec![Value::Str("false".into()), Value::Str("true".into())]),
            BaseType::String => {
                self.enum_values.as_ref().map(|e| e.iter().map(|s| Value::Str(s.clone())).collect())
            }
        }
    }
}

/// A well-formedness failure found while building a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelDiagnostic {
    NoDeclarations,
    MixedModelIds { expected: String, found: String },
    NotAModelFact(String),
    UndeclaredClass { context: String, class: String },
    MultipleParents { class: String, parents: Vec<String> },
    SubclassCycle { classes: Vec<String> },
    BadCardinality { assoc: String, detail: String },
    ConflictingAssociation { assoc: String },
    UnknownBaseType { class: String, attr: String, base_type: String },
    ConflictingAttribute { class: String, attr: String },
    DuplicateAttributeOnChain { attr: String, classes: (String, String) },
    BoundWithoutAttribute { class: String, attr: String },
    BoundOnWrongType { class: String, attr: String, bound: &'static str },
    ConflictingBound { class: String, attr: String, bound: &'static str },
    EmptyRange { class: String, attr: String, min: i64, max: i64 },
}

impl fmt::Display for ModelDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ModelDiagnostic::*;
        match self {
            NoDeclarations => write!(f, "no model declarations"),
            MixedModelIds { expected, found } => write!(f, "declaration for model `{found}` mixed into model `{expected}`"),
            NotAModelFact(s) => write!(f, "`{s}` is not a model declaration"),
            UndeclaredClass { context, class } => write!(f, "{context} refers to undeclared class `{class}`"),
            MultipleParents { class, parents } => {
                write!(f, "class `{class}` has several superclasses: {}", parents.join(", "))
            }
            SubclassCycle { classes } => write!(f, "subclass cycle through {}", classes.join(" -> ")),
            BadCardinality { assoc, detail } => write!(f, "association `{assoc}`: {detail}"),
            ConflictingAssociation { assoc } => write!(f, "association `{assoc}` declared twice with different ends"),
            UnknownBaseType { class, attr, base_type } => {
                write!(f, "attribute `{class}.{attr}` has unknown type `{base_type}`")
            }
            ConflictingAttribute { class, attr } => write!(f, "attribute `{class}.{attr}` declared with two types"),
            DuplicateAttributeOnChain { attr, classes } => {
                write!(f, "attribute `{attr}` declared on both `{}` and its descendant `{}`", classes.0, classes.1)
            }
            BoundWithoutAttribute { class, attr } => write!(f, "bound for undeclared attribute `{class}.{attr}`"),
            BoundOnWrongType { class, attr, bound } => {
                write!(f, "{bound} not allowed on attribute `{class}.{attr}` of this type")
            }
            ConflictingBound { class, attr, bound } => write!(f, "attribute `{class}.{attr}` has two different {bound}s"),
            EmptyRange { class, attr, min, max } => write!(f, "attribute `{class}.{attr}` has empty range {min}..{max}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub id: String,
    pub classes: BTreeSet<String>,
    /// Direct superclass of each subclass.
    pub parent: BTreeMap<String, String>,
    pub associations: BTreeMap<String, Association>,
    /// Keyed by (owner class, attribute id).
    pub attributes: BTreeMap<(String, String), AttributeDecl>,
}

impl Model {
    /// `class` followed by its superclasses up to the root.
    pub fn ancestors(&self, class: &str) -> Result<Vec<&str>> {
        let start = self.classes.get(class).ok_or_else(|| Error::UnknownClass(class.to_string()))?;
        let mut out = vec![start.as_str()];
        let mut cur = start.as_str();
        while let Some(p) = self.parent.get(cur) {
            out.push(p);
            cur = p;
        }
        Ok(out)
    }

    /// Whether `class` equals `ancestor` or inherits from it. Unknown classes
    /// only match themselves.
    pub fn is_a(&self, class: &str, ancestor: &str) -> bool {
        let mut cur = class;
        loop {
            if cur == ancestor {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    pub fn is_leaf(&self, class: &str) -> bool {
        self.classes.contains(class) && !self.parent.values().any(|p| p == class)
    }

    pub fn leaf_classes(&self) -> Vec<&str> {
        self.classes.iter().map(String::as_str).filter(|c| self.is_leaf(c)).collect()
    }

    /// Attributes declared on `class` or inherited, ordered by owner depth
    /// (root first) and then attribute id.
    pub fn applicable_attributes(&self, class: &str) -> Result<Vec<&AttributeDecl>> {
        let chain = self.ancestors(class)?;
        let mut out = Vec::new();
        for owner in chain.iter().rev() {
            out.extend(self.attributes.range((owner.to_string(), String::new())..).take_while(|(k, _)| k.0 == *owner).map(|(_, d)| d));
        }
        Ok(out)
    }

    /// The declaration of `attr` visible from `class`, if any.
    pub fn attribute_for(&self, class: &str, attr: &str) -> Option<&AttributeDecl> {
        let mut cur = class;
        loop {
            if let Some(d) = self.attributes.get(&(cur.to_string(), attr.to_string())) {
                return Some(d);
            }
            cur = self.parent.get(cur)?;
        }
    }

    pub fn declares_attribute(&self, attr: &str) -> bool {
        self.attributes.keys().any(|(_, a)| a == attr)
    }

    /// The model as DDL facts, in canonical order.
    pub fn to_facts(&self) -> Vec<Fact> {
        let m = || self.id.clone();
        let mut out = Vec::new();
        for c in &self.classes {
            out.push(Fact::Class { model: m(), class: c.clone() });
        }
        for (c, p) in &self.parent {
            out.push(Fact::Subclass { model: m(), class: c.clone(), superclass: p.clone() });
        }
        for a in self.associations.values() {
            out.push(Fact::Assoc {
                model: m(),
                assoc: a.id.clone(),
                class1: a.class1.clone(),
                min1: a.min1.into(),
                max1: a.max1.into(),
                class2: a.class2.clone(),
                min2: a.min2.into(),
                max2: a.max2.into(),
            });
        }
        for d in self.attributes.values() {
            let (class, attr) = (d.owner.clone(), d.id.clone());
            out.push(Fact::Attribute {
                model: m(),
                class: class.clone(),
                attr: attr.clone(),
                base_type: d.base_type.as_str().into(),
            });
            if let Some(v) = d.min_value {
                out.push(Fact::AttributeMin { model: m(), class: class.clone(), attr: attr.clone(), value: v });
            }
            if let Some(v) = d.max_value {
                out.push(Fact::AttributeMax { model: m(), class: class.clone(), attr: attr.clone(), value: v });
            }
            for v in d.enum_values.iter().flatten() {
                out.push(Fact::AttributeEnum { model: m(), class: class.clone(), attr: attr.clone(), value: v.clone() });
            }
        }
        out.sort();
        out
    }
}

/// Builds a model from its declarations, reporting every well-formedness
/// failure at once.
pub fn build_model(declarations: &[Fact]) -> Result<Model> {
    let mut diags = Vec::new();
    let Some(id) = declarations.iter().find_map(|f| f.model_id()) else {
        let d = match declarations.first() {
            Some(f) => ModelDiagnostic::NotAModelFact(f.to_string()),
            None => ModelDiagnostic::NoDeclarations,
        };
        return Err(Error::IllFormedModel(vec![d]));
    };
    let id = id.to_string();

    let mut classes = BTreeSet::new();
    let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut associations: BTreeMap<String, Association> = BTreeMap::new();
    let mut attr_types: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    let mut mins: BTreeMap<(String, String), BTreeSet<i64>> = BTreeMap::new();
    let mut maxs: BTreeMap<(String, String), BTreeSet<i64>> = BTreeMap::new();
    let mut enums: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();

    for f in declarations {
        match f.model_id() {
            None => {
                diags.push(ModelDiagnostic::NotAModelFact(f.to_string()));
                continue;
            }
            Some(m) if m != id => {
                diags.push(ModelDiagnostic::MixedModelIds { expected: id.clone(), found: m.to_string() });
                continue;
            }
            _ => {}
        }
        match f {
            Fact::Class { class, .. } => {
                classes.insert(class.clone());
            }
            Fact::Subclass { class, superclass, .. } => {
                parents.entry(class.clone()).or_default().insert(superclass.clone());
            }
            Fact::Assoc { assoc, class1, min1, max1, class2, min2, max2, .. } => {
                let card = |v: i64, what: &str, diags: &mut Vec<ModelDiagnostic>| match u32::try_from(v) {
                    Ok(v) => v,
                    Err(_) => {
                        diags.push(ModelDiagnostic::BadCardinality {
                            assoc: assoc.clone(),
                            detail: format!("{what} {v} is not a non-negative integer"),
                        });
                        0
                    }
                };
                let a = Association {
                    id: assoc.clone(),
                    class1: class1.clone(),
                    min1: card(*min1, "min1", &mut diags),
                    max1: card(*max1, "max1", &mut diags),
                    class2: class2.clone(),
                    min2: card(*min2, "min2", &mut diags),
                    max2: card(*max2, "max2", &mut diags),
                };
                if a.min1 > a.max1 {
                    diags.push(ModelDiagnostic::BadCardinality {
                        assoc: assoc.clone(),
                        detail: format!("min1 {} exceeds max1 {}", a.min1, a.max1),
                    });
                }
                if a.min2 > a.max2 {
                    diags.push(ModelDiagnostic::BadCardinality {
                        assoc: assoc.clone(),
                        detail: format!("min2 {} exceeds max2 {}", a.min2, a.max2),
                    });
                }
                match associations.get(assoc) {
                    Some(prev) if *prev != a => diags.push(ModelDiagnostic::ConflictingAssociation { assoc: assoc.clone() }),
                    _ => {
                        associations.insert(assoc.clone(), a);
                    }
                }
            }
            Fact::Attribute { class, attr, base_type, .. } => {
                attr_types.entry((class.clone(), attr.clone())).or_default().insert(base_type.clone());
            }
            Fact::AttributeMin { class, attr, value, .. } => {
                mins.entry((class.clone(), attr.clone())).or_default().insert(*value);
            }
            Fact::AttributeMax { class, attr, value, .. } => {
                maxs.entry((class.clone(), attr.clone())).or_default().insert(*value);
            }
            Fact::AttributeEnum { class, attr, value, .. } => {
                enums.entry((class.clone(), attr.clone())).or_default().insert(value.clone());
            }
            _ => unreachable!("non-model facts filtered above"),
        }
    }

    // Inheritance forest.
    let mut parent = BTreeMap::new();
    for (class, ps) in &parents {
        if !classes.contains(class) {
            diags.push(ModelDiagnostic::UndeclaredClass { context: "subclass declaration".into(), class: class.clone() });
        }
        for p in ps {
            if !classes.contains(p) {
                diags.push(ModelDiagnostic::UndeclaredClass {
                    context: format!("superclass of `{class}`"),
                    class: p.clone(),
                });
            }
        }
        if ps.len() > 1 {
            diags.push(ModelDiagnostic::MultipleParents { class: class.clone(), parents: ps.iter().cloned().collect() });
        }
        if let Some(p) = ps.iter().next() {
            parent.insert(class.clone(), p.clone());
        }
    }
    let mut reported: BTreeSet<String> = BTreeSet::new();
    for start in parent.keys() {
        let mut seen = vec![start.clone()];
        let mut cur = start;
        while let Some(p) = parent.get(cur) {
            if let Some(pos) = seen.iter().position(|c| c == p) {
                let mut cycle: Vec<String> = seen[pos..].to_vec();
                let min = cycle.iter().min().cloned().unwrap_or_default();
                if reported.insert(min.clone()) {
                    let rot = cycle.iter().position(|c| *c == min).unwrap_or(0);
                    cycle.rotate_left(rot);
                    cycle.push(min);
                    diags.push(ModelDiagnostic::SubclassCycle { classes: cycle });
                }
                break;
            }
            seen.push(p.clone());
            cur = p;
        }
    }

    for a in associations.values() {
        for c in [&a.class1, &a.class2] {
            if !classes.contains(c) {
                diags.push(ModelDiagnostic::UndeclaredClass { context: format!("association `{}`", a.id), class: c.clone() });
            }
        }
    }

    // Attributes and their domains.
    let mut attributes = BTreeMap::new();
    for ((class, attr), types) in &attr_types {
        if !classes.contains(class) {
            diags.push(ModelDiagnostic::UndeclaredClass { context: format!("attribute `{attr}`"), class: class.clone() });
        }
        if types.len() > 1 {
            diags.push(ModelDiagnostic::ConflictingAttribute { class: class.clone(), attr: attr.clone() });
        }
        let raw = types.iter().next().expect("nonempty");
        let Some(base_type) = BaseType::parse(raw) else {
            diags.push(ModelDiagnostic::UnknownBaseType { class: class.clone(), attr: attr.clone(), base_type: raw.clone() });
            continue;
        };
        let key = (class.clone(), attr.clone());
        let single = |m: &BTreeMap<(String, String), BTreeSet<i64>>, bound: &'static str, diags: &mut Vec<ModelDiagnostic>| {
            let vs = m.get(&key)?;
            if vs.len() > 1 {
                diags.push(ModelDiagnostic::ConflictingBound { class: class.clone(), attr: attr.clone(), bound });
            }
            vs.iter().next().copied()
        };
        let min_value = single(&mins, "minimum", &mut diags);
        let max_value = single(&maxs, "maximum", &mut diags);
        let enum_values = enums.get(&key).cloned();
        if base_type != BaseType::Integer {
            if min_value.is_some() {
                diags.push(ModelDiagnostic::BoundOnWrongType { class: class.clone(), attr: attr.clone(), bound: "minimum" });
            }
            if max_value.is_some() {
                diags.push(ModelDiagnostic::BoundOnWrongType { class: class.clone(), attr: attr.clone(), bound: "maximum" });
            }
        }
        if base_type != BaseType::String && enum_values.is_some() {
            diags.push(ModelDiagnostic::BoundOnWrongType { class: class.clone(), attr: attr.clone(), bound: "enumeration" });
        }
        if let (Some(lo), Some(hi)) = (min_value, max_value) {
            if lo > hi {
                diags.push(ModelDiagnostic::EmptyRange { class: class.clone(), attr: attr.clone(), min: lo, max: hi });
            }
        }
        attributes.insert(
            key.clone(),
            AttributeDecl { owner: class.clone(), id: attr.clone(), base_type, min_value, max_value, enum_values },
        );
    }
    for key in mins.keys().chain(maxs.keys()).chain(enums.keys()) {
        if !attr_types.contains_key(key) {
            let d = ModelDiagnostic::BoundWithoutAttribute { class: key.0.clone(), attr: key.1.clone() };
            if !diags.contains(&d) {
                diags.push(d);
            }
        }
    }

    let model = Model { id, classes, parent, associations, attributes };

    // Attribute ids must be unique along every inheritance chain. Only
    // meaningful once the forest itself is sound.
    if diags.is_empty() {
        for (owner, attr) in model.attributes.keys() {
            let mut cur = owner.as_str();
            while let Some(p) = model.parent.get(cur) {
                if model.attributes.contains_key(&(p.clone(), attr.clone())) {
                    diags.push(ModelDiagnostic::DuplicateAttributeOnChain {
                        attr: attr.clone(),
                        classes: (p.clone(), owner.clone()),
                    });
                }
                cur = p;
            }
        }
    }

    if diags.is_empty() {
        Ok(model)
    } else {
        Err(Error::IllFormedModel(diags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_facts;

    const MODEL_V1: &str = include_str!("../../../fixtures/modules_v1.lp");

    fn v1() -> Model {
        build_model(&parse_facts(MODEL_V1).unwrap().facts).unwrap()
    }

    #[test]
    fn builds_modules_model() {
        let m = v1();
        assert_eq!(m.classes.len(), 8);
        assert_eq!(m.parent.len(), 7);
        assert_eq!(m.associations.len(), 2);
        assert_eq!(m.attributes.len(), 1);
        let pos = &m.attributes[&("Module".to_string(), "position".to_string())];
        assert_eq!(pos.base_type, BaseType::Integer);
        assert_eq!((pos.min_value, pos.max_value), (Some(1), Some(5)));
    }

    #[test]
    fn minimal_model() {
        let m = build_model(&parse_facts(r#"ooasp_class("m","X")."#).unwrap().facts).unwrap();
        assert_eq!(m.classes.len(), 1);
        assert!(m.associations.is_empty());
        assert_eq!(m.ancestors("X").unwrap(), vec!["X"]);
    }

    #[test]
    fn injected_cycle_is_rejected() {
        let text = format!("{MODEL_V1}\nooasp_subclass(\"v1\",\"HwObject\",\"Frame\").");
        let err = build_model(&parse_facts(&text).unwrap().facts).unwrap_err();
        let Error::IllFormedModel(d) = err else { panic!("expected diagnostics") };
        assert!(d.iter().any(|d| matches!(d, ModelDiagnostic::SubclassCycle { classes }
            if classes.contains(&"Frame".to_string()) && classes.contains(&"HwObject".to_string()))));
    }

    #[test]
    fn ancestors_child_to_root() {
        let m = v1();
        assert_eq!(m.ancestors("ElementA").unwrap(), vec!["ElementA", "Element", "HwObject"]);
        assert_eq!(m.ancestors("HwObject").unwrap(), vec!["HwObject"]);
        assert_eq!(m.ancestors("ModuleB").unwrap(), vec!["ModuleB", "Module", "HwObject"]);
        assert!(matches!(m.ancestors("Nope"), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn inherited_attributes() {
        let m = v1();
        let ids = |c: &str| m.applicable_attributes(c).unwrap().iter().map(|d| d.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids("ModuleA"), vec!["position"]);
        assert_eq!(ids("Module"), vec!["position"]);
        assert!(ids("Frame").is_empty());
        assert!(m.applicable_attributes("Ghost").is_err());
    }

    #[test]
    fn collects_every_diagnostic() {
        let text = r#"
            ooasp_class("m","A"). ooasp_class("m","B"). ooasp_class("m","C").
            ooasp_subclass("m","C","A"). ooasp_subclass("m","C","B").
            ooasp_assoc("m","r","A",3,1,"Z",0,1).
            ooasp_attribute("m","A","x","integer").
            ooasp_attribute("m","C","x","integer").
            ooasp_attribute("m","B","s","string").
            ooasp_attribute_minInclusive("m","B","s",1).
            ooasp_attribute_enum("m","A","x","red").
            ooasp_attribute_maxInclusive("m","A","y",4).
        "#;
        let Error::IllFormedModel(d) = build_model(&parse_facts(text).unwrap().facts).unwrap_err() else {
            panic!()
        };
        assert!(d.iter().any(|d| matches!(d, ModelDiagnostic::MultipleParents { .. })));
        assert!(d.iter().any(|d| matches!(d, ModelDiagnostic::BadCardinality { .. })));
        assert!(d.iter().any(|d| matches!(d, ModelDiagnostic::UndeclaredClass { class, .. } if class == "Z")));
        assert!(d.iter().any(|d| matches!(d, ModelDiagnostic::BoundOnWrongType { bound: "minimum", .. })));
        assert!(d.iter().any(|d| matches!(d, ModelDiagnostic::BoundOnWrongType { bound: "enumeration", .. })));
        assert!(d.iter().any(|d| matches!(d, ModelDiagnostic::BoundWithoutAttribute { attr, .. } if attr == "y")));
    }

    #[test]
    fn duplicate_attribute_on_chain() {
        let text = r#"
            ooasp_class("m","A"). ooasp_class("m","C"). ooasp_subclass("m","C","A").
            ooasp_attribute("m","A","x","integer"). ooasp_attribute("m","C","x","string").
        "#;
        let Error::IllFormedModel(d) = build_model(&parse_facts(text).unwrap().facts).unwrap_err() else {
            panic!()
        };
        assert_eq!(
            d,
            vec![ModelDiagnostic::DuplicateAttributeOnChain { attr: "x".into(), classes: ("A".into(), "C".into()) }]
        );
    }

    #[test]
    fn mixed_model_ids() {
        let text = r#"ooasp_class("a","X"). ooasp_class("b","Y")."#;
        assert!(matches!(build_model(&parse_facts(text).unwrap().facts), Err(Error::IllFormedModel(_))));
    }

    #[test]
    fn attribute_checks() {
        let m = v1();
        let pos = m.attribute_for("ModuleB", "position").unwrap();
        assert_eq!(pos.check(&Value::Int(3)), Ok(()));
        assert_eq!(pos.check(&Value::Int(7)), Err(ValueFault::OutOfRange));
        assert_eq!(pos.check(&Value::Str("3".into())), Err(ValueFault::WrongType));
        assert_eq!(pos.domain(None).unwrap().len(), 5);
        assert!(m.attribute_for("Frame", "position").is_none());
    }
}
