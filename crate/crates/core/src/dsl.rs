//! Domain-specific constraints.
//!
//! ```text
//! rule    := "cv" kind [ "(" var { "," var } ")" ] [ "model" string ] ":-" literal { "," literal } "."
//! literal := [ "not" ] atom | term cmp term
//! atom    := isa(term, class) | associated(assoc, term, term) | value(attr, term, term)
//! term    := Var | integer | string | Var ("+"|"-") integer
//! cmp     := "=" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//!
//! Variables start with an uppercase letter. A rule derives one violation
//! atom `kind(head vars)` per satisfying binding of its body. `isa` holds
//! for an object and every superclass of its declared class; `not` is
//! negation as failure.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::ControlFlow;

use crate::error::{Error, Location, ParseError, ParseErrorKind, Result};
use crate::instance::{InstanceFact, Instantiation, ObjectId, Value};
use crate::lexer::{Cursor, Tok};
use crate::model::Model;
use crate::validation::Violation;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Int(i64),
    Str(String),
    /// Variable plus a constant offset.
    Offset(usize, i64),
}

impl Term {
    fn var(&self) -> Option<usize> {
        match self {
            Term::Var(v) | Term::Offset(v, _) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Isa { object: Term, class: String },
    Associated { assoc: String, from: Term, to: Term },
    Value { attr: String, object: Term, value: Term },
}

impl Atom {
    fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Isa { object, .. } => vec![object],
            Atom::Associated { from, to, .. } => vec![from, to],
            Atom::Value { object, value, .. } => vec![object, value],
        }
    }

    fn object_terms(&self) -> Vec<&Term> {
        match self {
            Atom::Isa { object, .. } | Atom::Value { object, .. } => vec![object],
            Atom::Associated { from, to, .. } => vec![from, to],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyLiteral {
    Positive(Atom),
    Negative(Atom),
    Compare(Term, CmpOp, Term),
}

impl BodyLiteral {
    fn vars(&self) -> BTreeSet<usize> {
        match self {
            BodyLiteral::Positive(a) | BodyLiteral::Negative(a) => a.terms().iter().filter_map(|t| t.var()).collect(),
            BodyLiteral::Compare(l, _, r) => [l.var(), r.var()].into_iter().flatten().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Step {
    Match(usize),
    Filter(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstraintRule {
    pub kind: String,
    pub head: Vec<usize>,
    pub scope: Option<String>,
    pub body: Vec<BodyLiteral>,
    /// Variable names, indexed by variable number.
    pub vars: Vec<String>,
    plan: Vec<Step>,
}

impl ConstraintRule {
    pub fn applies_to(&self, model_id: &str) -> bool {
        self.scope.as_deref().is_none_or(|s| s == model_id)
    }

    pub fn has_negation(&self) -> bool {
        self.body.iter().any(|l| matches!(l, BodyLiteral::Negative(_)))
    }

    /// Whether the rule can tell new objects apart by their numeric ids:
    /// arithmetic or ordering on object variables, comparisons of object
    /// variables with constants, or object variables reused as attribute
    /// values. Such rules are not invariant under renaming of created objects.
    pub fn id_sensitive(&self) -> bool {
        let mut object_vars = BTreeSet::new();
        let mut value_vars = BTreeSet::new();
        for lit in &self.body {
            if let BodyLiteral::Positive(a) | BodyLiteral::Negative(a) = lit {
                for t in a.object_terms() {
                    match t {
                        Term::Offset(..) => return true,
                        Term::Var(v) => {
                            object_vars.insert(*v);
                        }
                        _ => {}
                    }
                }
                if let Atom::Value { value, .. } = a {
                    if let Some(v) = value.var() {
                        value_vars.insert(v);
                    }
                }
            }
        }
        if !object_vars.is_disjoint(&value_vars) {
            return true;
        }
        self.body.iter().any(|lit| match lit {
            BodyLiteral::Compare(l, op, r) => {
                let obj = |t: &Term| t.var().is_some_and(|v| object_vars.contains(&v));
                if !(obj(l) || obj(r)) {
                    return false;
                }
                let plain_objects = matches!((l, r), (Term::Var(a), Term::Var(b))
                    if object_vars.contains(a) && object_vars.contains(b));
                !(plain_objects && matches!(op, CmpOp::Eq | CmpOp::Ne))
            }
            _ => false,
        })
    }

    /// Integer constants written in object positions.
    pub fn object_literals(&self) -> Vec<ObjectId> {
        let mut out = Vec::new();
        for lit in &self.body {
            if let BodyLiteral::Positive(a) | BodyLiteral::Negative(a) = lit {
                for t in a.object_terms() {
                    if let Term::Int(v) = t {
                        out.push(ObjectId(*v));
                    }
                }
            }
        }
        out
    }

    fn plan(body: &[BodyLiteral]) -> Vec<Step> {
        let mut plan = Vec::new();
        let mut bound = BTreeSet::new();
        let mut pending: Vec<usize> =
            (0..body.len()).filter(|&i| !matches!(body[i], BodyLiteral::Positive(_))).collect();
        let flush = |bound: &BTreeSet<usize>, pending: &mut Vec<usize>, plan: &mut Vec<Step>| {
            pending.retain(|&i| {
                if body[i].vars().is_subset(bound) {
                    plan.push(Step::Filter(i));
                    false
                } else {
                    true
                }
            });
        };
        flush(&bound, &mut pending, &mut plan);
        for (i, lit) in body.iter().enumerate() {
            if let BodyLiteral::Positive(_) = lit {
                plan.push(Step::Match(i));
                bound.extend(lit.vars());
                flush(&bound, &mut pending, &mut plan);
            }
        }
        debug_assert!(pending.is_empty(), "safety guarantees every filter is scheduled");
        plan
    }

    fn fmt_term(&self, t: &Term) -> String {
        match t {
            Term::Var(v) => self.vars[*v].clone(),
            Term::Int(i) => i.to_string(),
            Term::Str(s) => format!("\"{s}\""),
            Term::Offset(v, k) if *k < 0 => format!("{} - {}", self.vars[*v], -k),
            Term::Offset(v, k) => format!("{} + {}", self.vars[*v], k),
        }
    }

    fn fmt_atom(&self, a: &Atom) -> String {
        match a {
            Atom::Isa { object, class } => format!("isa({},\"{class}\")", self.fmt_term(object)),
            Atom::Associated { assoc, from, to } => {
                format!("associated(\"{assoc}\",{},{})", self.fmt_term(from), self.fmt_term(to))
            }
            Atom::Value { attr, object, value } => {
                format!("value(\"{attr}\",{},{})", self.fmt_term(object), self.fmt_term(value))
            }
        }
    }
}

impl fmt::Display for ConstraintRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cv {}", self.kind)?;
        if !self.head.is_empty() {
            let h: Vec<&str> = self.head.iter().map(|v| self.vars[*v].as_str()).collect();
            write!(f, "({})", h.join(","))?;
        }
        if let Some(s) = &self.scope {
            write!(f, " model \"{s}\"")?;
        }
        write!(f, " :- ")?;
        let lits: Vec<String> = self
            .body
            .iter()
            .map(|l| match l {
                BodyLiteral::Positive(a) => self.fmt_atom(a),
                BodyLiteral::Negative(a) => format!("not {}", self.fmt_atom(a)),
                BodyLiteral::Compare(l, op, r) => format!("{} {} {}", self.fmt_term(l), op.as_str(), self.fmt_term(r)),
            })
            .collect();
        write!(f, "{}.", lits.join(", "))
    }
}

// ---------------------------------------------------------------------------
// Parsing

pub fn parse_constraints(text: &str) -> Result<Vec<ConstraintRule>, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut rules = Vec::new();
    while !cur.at_end() {
        rules.push(parse_rule(&mut cur)?);
    }
    Ok(rules)
}

struct RuleBuilder {
    vars: Vec<String>,
    first_seen: Vec<Location>,
}

impl RuleBuilder {
    fn var(&mut self, name: &str, loc: Location) -> usize {
        if let Some(i) = self.vars.iter().position(|v| v == name) {
            return i;
        }
        self.vars.push(name.to_string());
        self.first_seen.push(loc);
        self.vars.len() - 1
    }
}

fn is_var(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_uppercase() || c == '_')
}

fn parse_rule(cur: &mut Cursor) -> Result<ConstraintRule, ParseError> {
    let start = cur.location();
    let kw = cur.ident()?;
    if kw != "cv" {
        return Err(ParseError::new(start, ParseErrorKind::Syntax(format!("expected `cv`, found `{kw}`"))));
    }
    let kind_loc = cur.location();
    let kind = cur.ident()?;
    if is_var(&kind) {
        return Err(ParseError::new(kind_loc, ParseErrorKind::Syntax("violation kind must start lowercase".into())));
    }
    let mut b = RuleBuilder { vars: Vec::new(), first_seen: Vec::new() };
    let mut head = Vec::new();
    let mut head_locs = Vec::new();
    if cur.eat("(") && !cur.eat(")") {
        loop {
            let loc = cur.location();
            let name = cur.ident()?;
            if !is_var(&name) {
                return Err(ParseError::new(loc, ParseErrorKind::Syntax(format!("head argument `{name}` is not a variable"))));
            }
            head.push(b.var(&name, loc));
            head_locs.push(loc);
            if !cur.eat(",") {
                cur.expect(")")?;
                break;
            }
        }
    }
    let mut scope = None;
    if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "model") {
        cur.next();
        scope = Some(cur.string()?);
    }
    cur.expect(":-")?;
    let mut body = Vec::new();
    let mut lit_locs = Vec::new();
    loop {
        lit_locs.push(cur.location());
        body.push(parse_literal(cur, &mut b)?);
        if !cur.eat(",") {
            cur.expect(".")?;
            break;
        }
    }

    // Safety: variables in the head, under negation or in comparisons need a
    // positive occurrence.
    let positive: BTreeSet<usize> = body
        .iter()
        .filter(|l| matches!(l, BodyLiteral::Positive(_)))
        .flat_map(|l| l.vars())
        .collect();
    let mut needed: Vec<usize> = head.clone();
    for l in &body {
        if !matches!(l, BodyLiteral::Positive(_)) {
            needed.extend(l.vars());
        }
    }
    needed.sort_by_key(|v| b.first_seen[*v]);
    if let Some(v) = needed.iter().find(|v| !positive.contains(v)) {
        return Err(ParseError::new(b.first_seen[*v], ParseErrorKind::UnsafeVariable(b.vars[*v].clone())));
    }

    let plan = ConstraintRule::plan(&body);
    Ok(ConstraintRule { kind, head, scope, body, vars: b.vars, plan })
}

fn parse_literal(cur: &mut Cursor, b: &mut RuleBuilder) -> Result<BodyLiteral, ParseError> {
    let negated = matches!(cur.peek(), Some(Tok::Ident(s)) if s == "not");
    if negated {
        cur.next();
    }
    let loc = cur.location();
    if let Some(Tok::Ident(name)) = cur.peek() {
        if !is_var(name) {
            let name = name.clone();
            if name == "cv" || name == "ooasp_cv" {
                return Err(ParseError::new(loc, ParseErrorKind::NotStratified));
            }
            cur.next();
            let atom = parse_atom(&name, cur, b, loc)?;
            return Ok(if negated { BodyLiteral::Negative(atom) } else { BodyLiteral::Positive(atom) });
        }
    }
    if negated {
        return Err(cur.error("expected an atom after `not`"));
    }
    let lhs = parse_term(cur, b)?;
    let op_loc = cur.location();
    let op = match cur.next() {
        Some(Tok::Punct("=")) => CmpOp::Eq,
        Some(Tok::Punct("!=")) => CmpOp::Ne,
        Some(Tok::Punct("<")) => CmpOp::Lt,
        Some(Tok::Punct("<=")) => CmpOp::Le,
        Some(Tok::Punct(">")) => CmpOp::Gt,
        Some(Tok::Punct(">=")) => CmpOp::Ge,
        _ => return Err(ParseError::new(op_loc, ParseErrorKind::Syntax("expected a comparison operator".into()))),
    };
    let rhs = parse_term(cur, b)?;
    for t in [&lhs, &rhs] {
        if let Term::Str(s) = t {
            return Err(ParseError::new(loc, ParseErrorKind::NonIntegerComparison(format!("\"{s}\""))));
        }
    }
    Ok(BodyLiteral::Compare(lhs, op, rhs))
}

fn parse_atom(name: &str, cur: &mut Cursor, b: &mut RuleBuilder, loc: Location) -> Result<Atom, ParseError> {
    cur.expect("(")?;
    let atom = match name {
        "isa" => {
            let object = parse_term(cur, b)?;
            cur.expect(",")?;
            let class = cur.string()?;
            Atom::Isa { object, class }
        }
        "associated" => {
            let assoc = cur.string()?;
            cur.expect(",")?;
            let from = parse_term(cur, b)?;
            cur.expect(",")?;
            let to = parse_term(cur, b)?;
            Atom::Associated { assoc, from, to }
        }
        "value" => {
            let attr = cur.string()?;
            cur.expect(",")?;
            let object = parse_term(cur, b)?;
            cur.expect(",")?;
            let value = parse_term(cur, b)?;
            Atom::Value { attr, object, value }
        }
        other => {
            return Err(ParseError::new(
                loc,
                ParseErrorKind::Syntax(format!("unknown atom `{other}`; expected isa, associated or value")),
            ))
        }
    };
    cur.expect(")")?;
    Ok(atom)
}

fn parse_term(cur: &mut Cursor, b: &mut RuleBuilder) -> Result<Term, ParseError> {
    let loc = cur.location();
    match cur.peek() {
        Some(Tok::Str(_)) => Ok(Term::Str(cur.string()?)),
        Some(Tok::Int(_)) | Some(Tok::Punct("-")) => Ok(Term::Int(cur.int()?)),
        Some(Tok::Ident(name)) if is_var(name) => {
            let name = name.clone();
            cur.next();
            let v = b.var(&name, loc);
            if cur.eat("+") {
                Ok(Term::Offset(v, cur.int()?))
            } else if cur.eat("-") {
                Ok(Term::Offset(v, -cur.int()?))
            } else {
                Ok(Term::Var(v))
            }
        }
        Some(t) => Err(cur.error(format!("expected a term, found {}", t.describe()))),
        None => Err(cur.error("expected a term, found end of input")),
    }
}

/// Checks that every in-scope rule names classes, associations and
/// attributes declared by `model`.
pub fn check_references(rules: &[ConstraintRule], model: &Model) -> Result<()> {
    let undeclared = |what, name: &str| Error::UndeclaredReference { what, name: name.to_string(), model: model.id.clone() };
    for rule in rules.iter().filter(|r| r.applies_to(&model.id)) {
        for lit in &rule.body {
            if let BodyLiteral::Positive(a) | BodyLiteral::Negative(a) = lit {
                match a {
                    Atom::Isa { class, .. } if !model.classes.contains(class) => return Err(undeclared("class", class)),
                    Atom::Associated { assoc, .. } if !model.associations.contains_key(assoc) => {
                        return Err(undeclared("association", assoc))
                    }
                    Atom::Value { attr, .. } if !model.declares_attribute(attr) => {
                        return Err(undeclared("attribute", attr))
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Evaluation

/// Facts known to hold, indexed for rule matching. `isa` entries are stored
/// under the inheritance closure of each declared class.
#[derive(Debug, Clone, Default)]
pub struct FactIndex {
    by_class: HashMap<String, Vec<ObjectId>>,
    classes_of: HashMap<ObjectId, Vec<String>>,
    links: HashMap<String, Vec<(ObjectId, ObjectId)>>,
    values: HashMap<String, Vec<(ObjectId, Value)>>,
}

impl FactIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_instantiation(model: &Model, inst: &Instantiation) -> Self {
        let mut idx = FactIndex::new();
        for f in &inst.facts {
            idx.push(model, f);
        }
        idx
    }

    fn closure<'m>(model: &'m Model, class: &'m str) -> Vec<&'m str> {
        model.ancestors(class).unwrap_or_else(|_| vec![class])
    }

    pub fn push_isa(&mut self, model: &Model, object: ObjectId, class: &str) {
        for c in Self::closure(model, class) {
            self.by_class.entry(c.to_string()).or_default().push(object);
            self.classes_of.entry(object).or_default().push(c.to_string());
        }
    }

    /// Undoes the most recent `push_isa` for the same arguments.
    pub fn pop_isa(&mut self, model: &Model, object: ObjectId, class: &str) {
        for c in Self::closure(model, class).into_iter().rev() {
            if let Some(v) = self.by_class.get_mut(c) {
                if let Some(p) = v.iter().rposition(|o| *o == object) {
                    v.remove(p);
                }
            }
            if let Some(v) = self.classes_of.get_mut(&object) {
                if let Some(p) = v.iter().rposition(|x| x == c) {
                    v.remove(p);
                }
            }
        }
    }

    pub fn push_link(&mut self, assoc: &str, from: ObjectId, to: ObjectId) {
        self.links.entry(assoc.to_string()).or_default().push((from, to));
    }

    pub fn pop_link(&mut self, assoc: &str) {
        if let Some(v) = self.links.get_mut(assoc) {
            v.pop();
        }
    }

    pub fn push_value(&mut self, attr: &str, object: ObjectId, value: Value) {
        self.values.entry(attr.to_string()).or_default().push((object, value));
    }

    pub fn pop_value(&mut self, attr: &str) {
        if let Some(v) = self.values.get_mut(attr) {
            v.pop();
        }
    }

    pub fn push(&mut self, model: &Model, fact: &InstanceFact) {
        match fact {
            InstanceFact::Isa { class, object } => self.push_isa(model, *object, class),
            InstanceFact::Associated { assoc, from, to } => self.push_link(assoc, *from, *to),
            InstanceFact::AttributeValue { attr, object, value } => self.push_value(attr, *object, value.clone()),
        }
    }

    pub fn pop(&mut self, model: &Model, fact: &InstanceFact) {
        match fact {
            InstanceFact::Isa { class, object } => self.pop_isa(model, *object, class),
            InstanceFact::Associated { assoc, .. } => self.pop_link(assoc),
            InstanceFact::AttributeValue { attr, .. } => self.pop_value(attr),
        }
    }

    pub fn has_isa(&self, object: ObjectId, class: &str) -> bool {
        self.classes_of.get(&object).is_some_and(|cs| cs.iter().any(|c| c == class))
    }

    pub fn has_link(&self, assoc: &str, from: ObjectId, to: ObjectId) -> bool {
        self.links.get(assoc).is_some_and(|v| v.contains(&(from, to)))
    }

    pub fn has_value(&self, attr: &str, object: ObjectId, value: &Value) -> bool {
        self.values.get(attr).is_some_and(|v| v.iter().any(|(o, x)| *o == object && x == value))
    }

    fn holds(&self, a: &GroundAtom<'_>) -> bool {
        match *a {
            GroundAtom::Isa(o, c) => self.has_isa(o, c),
            GroundAtom::Associated(a, f, t) => self.has_link(a, f, t),
            GroundAtom::Value(at, o, v) => self.has_value(at, o, v),
        }
    }
}

/// A ground atom, used to ask whether a currently absent fact may still be
/// added.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundAtom<'a> {
    Isa(ObjectId, &'a str),
    Associated(&'a str, ObjectId, ObjectId),
    Value(&'a str, ObjectId, &'a Value),
}

/// Facts that are absent from the index but not yet ruled out. A negated
/// literal only succeeds when its atom is absent and cannot appear later, so
/// every derived violation is final.
pub trait OpenWorld {
    fn may_become_true(&self, atom: &GroundAtom<'_>) -> bool;
}

/// Every absent fact is false.
pub struct ClosedWorld;

impl OpenWorld for ClosedWorld {
    fn may_become_true(&self, _: &GroundAtom<'_>) -> bool {
        false
    }
}

/// Calls `out` with every ground head derivable from `rule` over `index`.
pub fn derive(
    rule: &ConstraintRule,
    index: &FactIndex,
    open: &dyn OpenWorld,
    out: &mut dyn FnMut(&ConstraintRule, Vec<Value>) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut env = vec![None; rule.vars.len()];
    let mut ctx = Eval { rule, index, open, out };
    ctx.run(0, &mut env)
}

struct Eval<'a> {
    rule: &'a ConstraintRule,
    index: &'a FactIndex,
    open: &'a dyn OpenWorld,
    out: &'a mut dyn FnMut(&ConstraintRule, Vec<Value>) -> ControlFlow<()>,
}

type Env = Vec<Option<Value>>;

fn ground(t: &Term, env: &Env) -> Option<Value> {
    match t {
        Term::Var(v) => env[*v].clone(),
        Term::Int(i) => Some(Value::Int(*i)),
        Term::Str(s) => Some(Value::Str(s.clone())),
        Term::Offset(v, k) => match &env[*v] {
            Some(Value::Int(b)) => b.checked_add(*k).map(Value::Int),
            _ => None,
        },
    }
}

/// Matches `t` against `v`, recording any new binding in `bound`.
fn unify(t: &Term, v: &Value, env: &mut Env, bound: &mut Vec<usize>) -> bool {
    match t {
        Term::Var(x) => match &env[*x] {
            Some(cur) => cur == v,
            None => {
                env[*x] = Some(v.clone());
                bound.push(*x);
                true
            }
        },
        Term::Int(i) => matches!(v, Value::Int(j) if i == j),
        Term::Str(s) => matches!(v, Value::Str(w) if s == w),
        Term::Offset(x, k) => {
            let Value::Int(n) = v else { return false };
            match &env[*x] {
                Some(Value::Int(b)) => b.checked_add(*k) == Some(*n),
                Some(_) => false,
                None => match n.checked_sub(*k) {
                    Some(b) => {
                        env[*x] = Some(Value::Int(b));
                        bound.push(*x);
                        true
                    }
                    None => false,
                },
            }
        }
    }
}

fn as_object(v: &Value) -> Option<ObjectId> {
    v.as_int().map(ObjectId)
}

impl Eval<'_> {
    fn run(&mut self, step: usize, env: &mut Env) -> ControlFlow<()> {
        let Some(&s) = self.rule.plan.get(step) else {
            let head = self.rule.head.iter().map(|v| env[*v].clone().expect("head vars are bound")).collect();
            return (self.out)(self.rule, head);
        };
        match s {
            Step::Filter(i) => {
                if self.filter(&self.rule.body[i], env) {
                    self.run(step + 1, env)
                } else {
                    ControlFlow::Continue(())
                }
            }
            Step::Match(i) => {
                let BodyLiteral::Positive(atom) = &self.rule.body[i] else { unreachable!() };
                self.match_atom(atom, step, env)
            }
        }
    }

    fn try_bind(&mut self, pairs: &[(&Term, &Value)], step: usize, env: &mut Env) -> ControlFlow<()> {
        let mut bound = Vec::new();
        let ok = pairs.iter().all(|(t, v)| unify(t, v, env, &mut bound));
        let r = if ok { self.run(step + 1, env) } else { ControlFlow::Continue(()) };
        for x in bound {
            env[x] = None;
        }
        r
    }

    fn match_atom(&mut self, atom: &Atom, step: usize, env: &mut Env) -> ControlFlow<()> {
        let index = self.index;
        match atom {
            Atom::Isa { object, class } => {
                if let Some(v) = ground(object, env) {
                    return match as_object(&v) {
                        Some(o) if index.has_isa(o, class) => self.run(step + 1, env),
                        _ => ControlFlow::Continue(()),
                    };
                }
                for o in index.by_class.get(class).map(Vec::as_slice).unwrap_or(&[]) {
                    self.try_bind(&[(object, &Value::from(*o))], step, env)?;
                }
            }
            Atom::Associated { assoc, from, to } => {
                for (f, t) in index.links.get(assoc).map(Vec::as_slice).unwrap_or(&[]) {
                    self.try_bind(&[(from, &Value::from(*f)), (to, &Value::from(*t))], step, env)?;
                }
            }
            Atom::Value { attr, object, value } => {
                for (o, v) in index.values.get(attr).map(Vec::as_slice).unwrap_or(&[]) {
                    self.try_bind(&[(object, &Value::from(*o)), (value, v)], step, env)?;
                }
            }
        }
        ControlFlow::Continue(())
    }

    fn filter(&self, lit: &BodyLiteral, env: &Env) -> bool {
        match lit {
            BodyLiteral::Compare(l, op, r) => match (ground(l, env), ground(r, env)) {
                (Some(Value::Int(a)), Some(Value::Int(b))) => op.holds(a, b),
                _ => false,
            },
            BodyLiteral::Negative(atom) => {
                let vals: Vec<Value> = atom.terms().iter().map(|t| ground(t, env).expect("safe rule")).collect();
                let ground_atom = match atom {
                    Atom::Isa { class, .. } => as_object(&vals[0]).map(|o| GroundAtom::Isa(o, class)),
                    Atom::Associated { assoc, .. } => match (as_object(&vals[0]), as_object(&vals[1])) {
                        (Some(f), Some(t)) => Some(GroundAtom::Associated(assoc, f, t)),
                        _ => None,
                    },
                    Atom::Value { attr, .. } => as_object(&vals[0]).map(|o| GroundAtom::Value(attr, o, &vals[1])),
                };
                match ground_atom {
                    // A non-integer object position can never match a fact.
                    None => true,
                    Some(g) => !self.index.holds(&g) && !self.open.may_become_true(&g),
                }
            }
            BodyLiteral::Positive(_) => unreachable!("positive literals are matched, not filtered"),
        }
    }
}

/// Every violation the in-scope rules derive over `inst`.
pub fn evaluate_constraints(rules: &[ConstraintRule], model: &Model, inst: &Instantiation) -> Result<BTreeSet<Violation>> {
    check_references(rules, model)?;
    if inst.model_id != model.id {
        return Ok(BTreeSet::new());
    }
    let index = FactIndex::from_instantiation(model, inst);
    let mut out = BTreeSet::new();
    for rule in rules.iter().filter(|r| r.applies_to(&inst.model_id)) {
        let _ = derive(rule, &index, &ClosedWorld, &mut |r, args| {
            out.insert(Violation { inst_id: inst.inst_id.clone(), kind: r.kind.clone(), args });
            ControlFlow::Continue(())
        });
    }
    Ok(out)
}

/// Whether any in-scope rule derives a violation under `open`.
pub fn any_violation(rules: &[&ConstraintRule], index: &FactIndex, open: &dyn OpenWorld) -> bool {
    rules.iter().any(|r| derive(r, index, open, &mut |_, _| ControlFlow::Break(())).is_break())
}
