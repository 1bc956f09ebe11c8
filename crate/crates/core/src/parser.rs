//! Reader and writer for DDL fact files.
//!
//! Grammar: `pred(arg, ..., arg).` where each argument is a double-quoted
//! string or a decimal integer; `%` starts a comment that runs to the end of
//! the line. The only nested terms are the violation functors inside
//! `ooasp_cv`, e.g. `ooasp_cv("c2",mincardviolated(10,"Element_module")).`

use crate::error::{Location, ParseError, ParseErrorKind};
use crate::fact::{Fact, Term, PREDICATES};
use crate::instance::{Instantiation, ObjectId, Value};
use crate::lexer::{Cursor, Tok};
use crate::model::Model;
use crate::validation::Violation;

/// Parsed facts in source order, with the location of each fact.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactFile {
    pub facts: Vec<Fact>,
    pub locations: Vec<Location>,
}

impl FactFile {
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Fact, Location)> {
        self.facts.iter().zip(self.locations.iter().copied())
    }
}

pub fn parse_facts(text: &str) -> Result<FactFile, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut file = FactFile::default();
    while !cur.at_end() {
        let loc = cur.location();
        let name = cur.ident()?;
        cur.expect("(")?;
        let mut args = vec![parse_term(&mut cur)?];
        while cur.eat(",") {
            args.push(parse_term(&mut cur)?);
        }
        cur.expect(")")?;
        cur.expect(".")?;
        file.facts.push(typed_fact(&name, args, loc)?);
        file.locations.push(loc);
    }
    Ok(file)
}

fn parse_term(cur: &mut Cursor) -> Result<Term, ParseError> {
    match cur.peek() {
        Some(Tok::Str(_)) => Ok(Term::Str(cur.string()?)),
        Some(Tok::Int(_)) | Some(Tok::Punct("-")) => Ok(Term::Int(cur.int()?)),
        Some(Tok::Ident(_)) => {
            let name = cur.ident()?;
            let mut args = Vec::new();
            if cur.eat("(") {
                args.push(parse_term(cur)?);
                while cur.eat(",") {
                    args.push(parse_term(cur)?);
                }
                cur.expect(")")?;
            }
            Ok(Term::Func(name, args))
        }
        Some(t) => Err(cur.error(format!("expected an argument, found {}", t.describe()))),
        None => Err(cur.error("expected an argument, found end of input")),
    }
}

fn typed_fact(name: &str, args: Vec<Term>, loc: Location) -> Result<Fact, ParseError> {
    let Some(&(_, arity)) = PREDICATES.iter().find(|(p, _)| *p == name) else {
        return Err(ParseError::new(loc, ParseErrorKind::UnknownPredicate(name.to_string())));
    };
    if args.len() != arity {
        return Err(ParseError::new(
            loc,
            ParseErrorKind::WrongArity { name: name.to_string(), expected: arity, found: args.len() },
        ));
    }
    let bad = |index: usize, expected: &'static str| {
        ParseError::new(loc, ParseErrorKind::BadArgument { name: name.to_string(), index: index + 1, expected })
    };
    let s = |i: usize| match &args[i] {
        Term::Str(s) => Ok(s.clone()),
        _ => Err(bad(i, "a quoted string")),
    };
    let n = |i: usize| match &args[i] {
        Term::Int(v) => Ok(*v),
        _ => Err(bad(i, "an integer")),
    };
    let obj = |i: usize| match &args[i] {
        Term::Int(v) => Ok(ObjectId(*v)),
        _ => Err(bad(i, "an integer object id")),
    };
    let val = |i: usize| match &args[i] {
        Term::Int(v) => Ok(Value::Int(*v)),
        Term::Str(s) => Ok(Value::Str(s.clone())),
        Term::Func(..) => Err(bad(i, "a string or integer value")),
    };
    Ok(match name {
        "ooasp_class" => Fact::Class { model: s(0)?, class: s(1)? },
        "ooasp_subclass" => Fact::Subclass { model: s(0)?, class: s(1)?, superclass: s(2)? },
        "ooasp_assoc" => Fact::Assoc {
            model: s(0)?,
            assoc: s(1)?,
            class1: s(2)?,
            min1: n(3)?,
            max1: n(4)?,
            class2: s(5)?,
            min2: n(6)?,
            max2: n(7)?,
        },
        "ooasp_attribute" => Fact::Attribute { model: s(0)?, class: s(1)?, attr: s(2)?, base_type: s(3)? },
        "ooasp_attribute_minInclusive" => Fact::AttributeMin { model: s(0)?, class: s(1)?, attr: s(2)?, value: n(3)? },
        "ooasp_attribute_maxInclusive" => Fact::AttributeMax { model: s(0)?, class: s(1)?, attr: s(2)?, value: n(3)? },
        "ooasp_attribute_enum" => Fact::AttributeEnum { model: s(0)?, class: s(1)?, attr: s(2)?, value: s(3)? },
        "ooasp_instantiation" => Fact::Instantiation { model: s(0)?, inst: s(1)? },
        "ooasp_isa" => Fact::Isa { inst: s(0)?, class: s(1)?, object: obj(2)? },
        "ooasp_associated" => Fact::Associated { inst: s(0)?, assoc: s(1)?, from: obj(2)?, to: obj(3)? },
        "ooasp_attribute_value" => Fact::AttributeValue { inst: s(0)?, attr: s(1)?, object: obj(2)?, value: val(3)? },
        "ooasp_cv" => {
            let Term::Func(kind, inner) = &args[1] else {
                return Err(bad(1, "a violation term such as kind(arg, ...)"));
            };
            let mut vals = Vec::with_capacity(inner.len());
            for t in inner {
                match t {
                    Term::Int(v) => vals.push(Value::Int(*v)),
                    Term::Str(s) => vals.push(Value::Str(s.clone())),
                    Term::Func(..) => return Err(bad(1, "a violation term with constant arguments")),
                }
            }
            Fact::Violation { inst: s(0)?, kind: kind.clone(), args: vals }
        }
        _ => unreachable!("predicate table covers every name"),
    })
}

/// Sorts facts canonically (predicate name, then arguments) and writes one
/// per line. Duplicates are dropped.
pub fn serialize_facts(facts: impl IntoIterator<Item = Fact>) -> String {
    let mut facts: Vec<Fact> = facts.into_iter().collect();
    facts.sort();
    facts.dedup();
    let mut out = String::new();
    for f in facts {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

pub fn model_to_text(model: &Model) -> String {
    serialize_facts(model.to_facts())
}

pub fn instantiation_facts(inst: &Instantiation) -> Vec<Fact> {
    let mut out = vec![Fact::Instantiation { model: inst.model_id.clone(), inst: inst.inst_id.clone() }];
    out.extend(inst.facts.iter().map(|f| Fact::from_instance_fact(&inst.inst_id, f)));
    out
}

pub fn instantiation_to_text(inst: &Instantiation) -> String {
    serialize_facts(instantiation_facts(inst))
}

pub fn violations_to_text<'a>(violations: impl IntoIterator<Item = &'a Violation>) -> String {
    serialize_facts(violations.into_iter().map(Violation::to_fact))
}
