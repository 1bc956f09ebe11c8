//! Completion: extend a partial instantiation into a valid one by adding
//! objects, links and attribute values within per-class bounds.
//!
//! The search decides, in order:
//! 1. how many new objects each leaf class gets (ascending counts, new
//!    objects of a class always fill the lowest slots);
//! 2. for every type-correct link not already present, whether to add it
//!    (links between existing objects first, then links from each new object
//!    to existing ones, then links among new objects);
//! 3. a value for every attribute an object lacks, in ascending domain order.
//!
//! Cardinality bounds are enforced per endpoint as links are decided, and a
//! constraint rule is checked whenever its body can no longer change. New
//! objects of one class are interchangeable, so unless a rule can observe
//! object ids, only assignments that are lexicographically minimal under
//! swapping adjacent slots are explored, and solutions are reported with
//! canonical ids.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::canonical::canonicalize;
use crate::dsl::{any_violation, check_references, derive, ClosedWorld, Atom, BodyLiteral, ConstraintRule, FactIndex, GroundAtom, OpenWorld};
use crate::error::{Error, Result};
use crate::instance::{FactKind, InstanceFact, Instantiation, ObjectId, Value};
use crate::model::Model;
use crate::validation::{builtin_violations, Mode, Violation, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionConfig {
    /// Upper bound on created objects per leaf class; absent classes get 0.
    pub max_new_per_class: BTreeMap<String, u32>,
    /// Lower bound on created objects per leaf class; absent classes get 0.
    pub min_new_per_class: BTreeMap<String, u32>,
    /// Range for integer attributes that declare no bounds.
    pub default_int_domain: Option<(i64, i64)>,
    pub max_solutions: usize,
    /// First id handed to new objects; defaults to one above the largest
    /// existing id.
    pub id_base: Option<i64>,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            max_new_per_class: BTreeMap::new(),
            min_new_per_class: BTreeMap::new(),
            default_int_domain: None,
            max_solutions: 1,
            id_base: None,
        }
    }
}

impl CompletionConfig {
    pub fn with_max(mut self, class: &str, n: u32) -> Self {
        self.max_new_per_class.insert(class.to_string(), n);
        self
    }

    pub fn with_min(mut self, class: &str, n: u32) -> Self {
        self.min_new_per_class.insert(class.to_string(), n);
        self
    }

    pub fn with_solutions(mut self, n: usize) -> Self {
        self.max_solutions = n;
        self
    }

    /// Same bound for every leaf class of `model`.
    pub fn uniform(model: &Model, n: u32) -> Self {
        let mut c = CompletionConfig::default();
        for leaf in model.leaf_classes() {
            c.max_new_per_class.insert(leaf.to_string(), n);
        }
        c
    }

    fn check(&self, model: &Model) -> Result<()> {
        if self.max_solutions == 0 {
            return Err(Error::InvalidConfig("max_solutions must be at least 1".into()));
        }
        for class in self.max_new_per_class.keys().chain(self.min_new_per_class.keys()) {
            if !model.classes.contains(class) {
                return Err(Error::UnknownClass(class.clone()));
            }
            if !model.is_leaf(class) {
                return Err(Error::InvalidConfig(format!("bound on non-leaf class `{class}`")));
            }
        }
        for (class, min) in &self.min_new_per_class {
            if *min > self.max(class) {
                return Err(Error::InvalidConfig(format!("lower bound for `{class}` exceeds its upper bound")));
            }
        }
        if let Some((lo, hi)) = self.default_int_domain {
            if lo > hi {
                return Err(Error::InvalidConfig(format!("empty integer domain {lo}..{hi}")));
            }
        }
        Ok(())
    }

    fn max(&self, class: &str) -> u32 {
        self.max_new_per_class.get(class).copied().unwrap_or(0)
    }

    fn min(&self, class: &str) -> u32 {
        self.min_new_per_class.get(class).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnsatCause {
    /// No valid extension exists within the configured bounds.
    UnsatWithinBounds,
    /// The input has violations that adding facts cannot repair.
    InputInvalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solutions(Vec<Instantiation>),
    Unsat { cause: UnsatCause, report: Option<ValidationReport> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResult {
    pub outcome: Outcome,
    pub stats: Stats,
}

impl CompletionResult {
    pub fn solutions(&self) -> &[Instantiation] {
        match &self.outcome {
            Outcome::Solutions(s) => s,
            Outcome::Unsat { .. } => &[],
        }
    }
}

pub fn complete(model: &Model, inst: &Instantiation, rules: &[ConstraintRule], config: &CompletionConfig) -> Result<CompletionResult> {
    let start = Instant::now();
    let scoped = prepare(model, inst, rules, config)?;
    let out = search(model, inst, &scoped, config, None, config.max_solutions)?;
    let stats = Stats { nodes: out.nodes, elapsed: start.elapsed() };
    let outcome = match out.input_invalid {
        Some(report) => Outcome::Unsat { cause: UnsatCause::InputInvalid, report: Some(report) },
        None if out.solutions.is_empty() => Outcome::Unsat { cause: UnsatCause::UnsatWithinBounds, report: None },
        None => Outcome::Solutions(out.solutions.into_iter().map(|s| s.inst).collect()),
    };
    Ok(CompletionResult { outcome, stats })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    Consistent(Instantiation),
    NoWitnessWithinBounds,
}

/// Looks for any valid instantiation of `model` by completing the empty one.
pub fn check_model_consistency(model: &Model, rules: &[ConstraintRule], config: &CompletionConfig) -> Result<Consistency> {
    let empty = Instantiation::new(model.id.clone(), format!("{}_witness", model.id));
    let config = CompletionConfig { max_solutions: 1, ..config.clone() };
    let r = complete(model, &empty, rules, &config)?;
    Ok(match r.outcome {
        Outcome::Solutions(mut s) => Consistency::Consistent(s.remove(0)),
        Outcome::Unsat { .. } => Consistency::NoWitnessWithinBounds,
    })
}

/// Checks ids and references; returns the rules that apply to `model`.
pub(crate) fn prepare<'r>(
    model: &Model,
    inst: &Instantiation,
    rules: &'r [ConstraintRule],
    config: &CompletionConfig,
) -> Result<Vec<&'r ConstraintRule>> {
    if inst.model_id != model.id {
        return Err(Error::ModelMismatch {
            inst: inst.inst_id.clone(),
            inst_model: inst.model_id.clone(),
            model: model.id.clone(),
        });
    }
    config.check(model)?;
    check_references(rules, model)?;
    Ok(rules.iter().filter(|r| r.applies_to(&model.id)).collect())
}

/// Creation costs per fact kind plus a budget, for cost-bounded search.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CostLimit {
    pub isa: u64,
    pub link: u64,
    pub value: u64,
    pub budget: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct Found {
    pub inst: Instantiation,
    /// Creation cost under the cost limit, 0 without one.
    pub cost: u64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct SearchOutput {
    pub solutions: Vec<Found>,
    pub nodes: u64,
    pub input_invalid: Option<ValidationReport>,
    /// Smallest lower bound that exceeded the budget.
    pub next_bound: Option<u64>,
}

/// Id allocation start for `base` under `config`.
pub(crate) fn id_base(base: &Instantiation, config: &CompletionConfig) -> i64 {
    config.id_base.unwrap_or_else(|| base.max_object_id().map_or(1, |m| m + 1))
}

/// Whether the rules can tell new objects apart by id, in which case
/// solutions are neither symmetry-reduced nor renamed.
pub(crate) fn id_sensitive(rules: &[&ConstraintRule], base: &Instantiation) -> bool {
    let existing = base.objects();
    rules.iter().any(|r| r.id_sensitive() || r.object_literals().iter().any(|o| !existing.contains_key(o)))
}

pub(crate) fn search(
    model: &Model,
    base: &Instantiation,
    rules: &[&ConstraintRule],
    config: &CompletionConfig,
    cost: Option<CostLimit>,
    limit: usize,
) -> Result<SearchOutput> {
    let mut out = SearchOutput::default();

    let (hard, notes) = builtin_violations(model, base, Mode::Partial);
    let mut dsl_hard = BTreeSet::new();
    let index = FactIndex::from_instantiation(model, base);
    for rule in rules.iter().filter(|r| !r.has_negation()) {
        let _ = derive(rule, &index, &ClosedWorld, &mut |r, args| {
            dsl_hard.insert(Violation { inst_id: base.inst_id.clone(), kind: r.kind.clone(), args });
            ControlFlow::Continue(())
        });
    }
    if !hard.is_empty() || !dsl_hard.is_empty() {
        let mut violations = hard;
        violations.extend(dsl_hard);
        out.input_invalid = Some(ValidationReport { violations, mode: Mode::Partial, notes });
        return Ok(out);
    }

    let base_id = id_base(base, config);
    let classes: Vec<(String, u32, u32)> = model
        .leaf_classes()
        .into_iter()
        .map(|c| (c.to_string(), config.min(c), config.max(c)))
        .filter(|(_, _, max)| *max > 0)
        .collect();
    let total_max: i64 = classes.iter().map(|c| i64::from(c.2)).sum();
    if total_max > 0 && base.mentioned_objects().iter().any(|o| o.0 >= base_id && o.0 < base_id + total_max) {
        return Err(Error::InvalidConfig(format!("new-object ids from {base_id} collide with existing objects")));
    }

    // Every domain that may be needed must be finite.
    let objects = base.objects();
    let mut needs_domain: Vec<&str> = objects.values().flat_map(|cs| cs.iter().copied()).collect();
    needs_domain.extend(classes.iter().map(|c| c.0.as_str()));
    for class in needs_domain {
        for decl in model.applicable_attributes(class).unwrap_or_default() {
            if decl.domain(config.default_int_domain).is_none() {
                return Err(Error::UnboundedDomain { class: class.to_string(), attr: decl.id.clone() });
            }
        }
    }

    let symmetric = !id_sensitive(rules, base);
    let mut s = Search {
        model,
        base,
        rules,
        config,
        cost,
        limit,
        symmetric,
        id_base: base_id,
        classes,
        out: &mut out,
        seen: BTreeSet::new(),
    };
    let mut counts = Vec::new();
    let _ = s.phase1(&mut counts);
    Ok(out)
}

struct Search<'a> {
    model: &'a Model,
    base: &'a Instantiation,
    rules: &'a [&'a ConstraintRule],
    config: &'a CompletionConfig,
    cost: Option<CostLimit>,
    limit: usize,
    symmetric: bool,
    id_base: i64,
    /// Leaf classes that may receive new objects, with (min, max).
    classes: Vec<(String, u32, u32)>,
    out: &'a mut SearchOutput,
    seen: BTreeSet<BTreeSet<InstanceFact>>,
}

/// A link that may be added.
struct Cand {
    assoc: String,
    from: ObjectId,
    to: ObjectId,
    /// Endpoint counters for the two sides.
    ends: [usize; 2],
}

/// Partner counter of one object in one association role.
#[derive(Clone)]
struct End {
    min: u32,
    max: u32,
    count: u32,
    remaining: u32,
}

struct ValVar {
    object: ObjectId,
    attr: String,
    domain: Vec<Value>,
}

struct State {
    new_ids: Vec<ObjectId>,
    new_classes: Vec<String>,
    cands: Vec<Cand>,
    cand_index: HashMap<(String, ObjectId, ObjectId), usize>,
    /// Candidates before this index are decided.
    link_pos: usize,
    chosen: Vec<bool>,
    ends: Vec<End>,
    /// Boundaries where a slot's links to existing objects are complete:
    /// (end index, start of previous slot's group, start of this group, length).
    lex_groups: HashMap<usize, Vec<(usize, usize, usize)>>,
    vals: Vec<ValVar>,
    val_index: HashMap<(String, ObjectId), usize>,
    val_pos: usize,
    assigned: Vec<usize>,
    /// Variable permutations for swapping adjacent slots of one class.
    swaps: Vec<Vec<usize>>,
    index: FactIndex,
    cost: u64,
    links_added: u64,
    links_needed: u64,
    rule_preds: Vec<(BTreeSet<String>, BTreeSet<String>)>,
}

impl OpenWorld for State {
    fn may_become_true(&self, atom: &GroundAtom<'_>) -> bool {
        match *atom {
            GroundAtom::Isa(..) => false,
            GroundAtom::Associated(a, f, t) => {
                self.cand_index.get(&(a.to_string(), f, t)).is_some_and(|&i| i >= self.link_pos)
            }
            GroundAtom::Value(at, o, _) => self.val_index.get(&(at.to_string(), o)).is_some_and(|&i| i >= self.val_pos),
        }
    }
}

enum Pred<'p> {
    Assoc(&'p str),
    Attr(&'p str),
    All,
}

impl Search<'_> {
    fn phase1(&mut self, counts: &mut Vec<u32>) -> ControlFlow<()> {
        if counts.len() == self.classes.len() {
            return self.universe(counts);
        }
        let (_, min, max) = self.classes[counts.len()];
        for k in min..=max {
            counts.push(k);
            let r = self.phase1(counts);
            counts.pop();
            r?;
        }
        ControlFlow::Continue(())
    }

    fn prune_on_cost(&mut self, lb: u64) -> bool {
        match self.cost {
            Some(c) if lb > c.budget => {
                self.out.next_bound = Some(self.out.next_bound.map_or(lb, |b| b.min(lb)));
                true
            }
            _ => false,
        }
    }

    fn universe(&mut self, counts: &[u32]) -> ControlFlow<()> {
        self.out.nodes += 1;
        let model = self.model;
        let mut classes: BTreeMap<ObjectId, String> =
            self.base.objects().into_iter().map(|(o, cs)| (o, cs.into_iter().next().unwrap().to_string())).collect();
        let existing: Vec<ObjectId> = classes.keys().copied().collect();
        let mut new_ids = Vec::new();
        // Class index of each new object, in id order.
        let mut slots = Vec::new();
        for (ci, k) in counts.iter().enumerate() {
            for _ in 0..*k {
                let id = ObjectId(self.id_base + new_ids.len() as i64);
                classes.insert(id, self.classes[ci].0.clone());
                new_ids.push(id);
                slots.push(ci);
            }
        }
        let instance_of = |o: &ObjectId, c: &str| model.is_a(&classes[o], c);

        // Value variables.
        let mut vals = Vec::new();
        let have: BTreeSet<(ObjectId, &str)> = self.base.values().map(|(a, o, _)| (o, a)).collect();
        for o in existing.iter().chain(new_ids.iter()) {
            for decl in model.applicable_attributes(&classes[o]).unwrap_or_default() {
                if !have.contains(&(*o, decl.id.as_str())) {
                    let domain = decl.domain(self.config.default_int_domain).expect("checked finite");
                    vals.push(ValVar { object: *o, attr: decl.id.clone(), domain });
                }
            }
        }

        let (isa_cost, value_cost) = self.cost.map_or((0, 0), |c| (c.isa, c.value));
        let cost = isa_cost * new_ids.len() as u64;
        if self.prune_on_cost(cost + value_cost * vals.len() as u64) {
            return ControlFlow::Continue(());
        }

        // Endpoint counters.
        let mut ends = Vec::new();
        let mut end_of: HashMap<(ObjectId, &str, usize), usize> = HashMap::new();
        for (a, assoc) in &model.associations {
            for o in classes.keys() {
                if instance_of(o, &assoc.class1) {
                    end_of.insert((*o, a, 0), ends.len());
                    ends.push(End { min: assoc.min2, max: assoc.max2, count: 0, remaining: 0 });
                }
                if instance_of(o, &assoc.class2) {
                    end_of.insert((*o, a, 1), ends.len());
                    ends.push(End { min: assoc.min1, max: assoc.max1, count: 0, remaining: 0 });
                }
            }
        }
        for (a, f, t) in self.base.links() {
            ends[end_of[&(f, a, 0)]].count += 1;
            ends[end_of[&(t, a, 1)]].count += 1;
        }

        // Global count check: the number of links of each association must
        // fit both sides' bounds.
        for (a, assoc) in &model.associations {
            let n1 = classes.keys().filter(|o| instance_of(o, &assoc.class1)).count() as u64;
            let n2 = classes.keys().filter(|o| instance_of(o, &assoc.class2)).count() as u64;
            let present = self.base.links().filter(|l| l.0 == a).count() as u64;
            let lo = (n1 * u64::from(assoc.min2)).max(n2 * u64::from(assoc.min1)).max(present);
            let hi = (n1 * u64::from(assoc.max2)).min(n2 * u64::from(assoc.max1)).min(present + n1 * n2);
            if lo > hi {
                return ControlFlow::Continue(());
            }
        }

        // Candidate links in decision order.
        let mut cands = Vec::new();
        let mut lex_groups: HashMap<usize, Vec<(usize, usize, usize)>> = HashMap::new();
        let push = |cands: &mut Vec<Cand>, a: &str, f: ObjectId, t: ObjectId| {
            if classes.contains_key(&f)
                && classes.contains_key(&t)
                && instance_of(&f, &model.associations[a].class1)
                && instance_of(&t, &model.associations[a].class2)
                && !self.base.facts.contains(&InstanceFact::Associated { assoc: a.to_string(), from: f, to: t })
            {
                cands.push(Cand { assoc: a.to_string(), from: f, to: t, ends: [end_of[&(f, a, 0)], end_of[&(t, a, 1)]] });
            }
        };
        for a in model.associations.keys() {
            for f in &existing {
                for t in &existing {
                    push(&mut cands, a, *f, *t);
                }
            }
        }
        let mut group_start = Vec::new();
        for (si, n) in new_ids.iter().enumerate() {
            let start = cands.len();
            group_start.push(start);
            for a in model.associations.keys() {
                for e in &existing {
                    push(&mut cands, a, *n, *e);
                }
                for e in &existing {
                    push(&mut cands, a, *e, *n);
                }
            }
            let end = cands.len();
            if self.symmetric && si > 0 && slots[si - 1] == slots[si] {
                let prev = group_start[si - 1];
                debug_assert_eq!(start - prev, end - start);
                if end > start {
                    lex_groups.entry(end).or_default().push((prev, start, end - start));
                }
            }
        }
        for a in model.associations.keys() {
            for f in &new_ids {
                for t in &new_ids {
                    push(&mut cands, a, *f, *t);
                }
            }
        }
        for c in &cands {
            for e in c.ends {
                ends[e].remaining += 1;
            }
        }
        for e in &ends {
            if e.count > e.max || e.count + e.remaining < e.min {
                return ControlFlow::Continue(());
            }
        }
        let cand_index: HashMap<(String, ObjectId, ObjectId), usize> =
            cands.iter().enumerate().map(|(i, c)| ((c.assoc.clone(), c.from, c.to), i)).collect();
        let val_index: HashMap<(String, ObjectId), usize> =
            vals.iter().enumerate().map(|(i, v)| ((v.attr.clone(), v.object), i)).collect();

        // Permutations of the variable vector for swapping adjacent slots.
        let mut swaps = Vec::new();
        if self.symmetric {
            for si in 1..new_ids.len() {
                if slots[si - 1] != slots[si] {
                    continue;
                }
                let (p, q) = (new_ids[si - 1], new_ids[si]);
                let sw = |o: ObjectId| if o == p { q } else if o == q { p } else { o };
                let mut perm = Vec::with_capacity(cands.len() + vals.len());
                for c in &cands {
                    perm.push(cand_index[&(c.assoc.clone(), sw(c.from), sw(c.to))]);
                }
                for v in &vals {
                    perm.push(cands.len() + val_index[&(v.attr.clone(), sw(v.object))]);
                }
                swaps.push(perm);
            }
        }

        let links_needed = model
            .associations
            .keys()
            .map(|a| {
                let side = |s: usize| {
                    classes
                        .keys()
                        .filter_map(|o| end_of.get(&(*o, a.as_str(), s)))
                        .map(|&e| u64::from(ends[e].min.saturating_sub(ends[e].count)))
                        .sum::<u64>()
                };
                side(0).max(side(1))
            })
            .sum::<u64>();

        let mut index = FactIndex::from_instantiation(model, self.base);
        for n in &new_ids {
            index.push_isa(model, *n, &classes[n]);
        }
        let rule_preds = self.rules.iter().map(|r| mentioned(r)).collect();
        let new_classes = slots.iter().map(|&ci| self.classes[ci].0.clone()).collect();
        let mut st = State {
            new_ids,
            new_classes,
            chosen: vec![false; cands.len()],
            cands,
            cand_index,
            link_pos: 0,
            ends,
            lex_groups,
            assigned: vec![0; vals.len()],
            vals,
            val_index,
            val_pos: 0,
            swaps,
            index,
            cost,
            links_added: 0,
            links_needed,
            rule_preds,
        };
        if self.prune_on_cost(self.lower_bound(&st)) || !self.dsl_ok(&st, Pred::All) {
            return ControlFlow::Continue(());
        }
        self.links(&mut st)
    }

    fn lower_bound(&self, st: &State) -> u64 {
        let Some(c) = self.cost else { return 0 };
        st.cost + c.link * st.links_needed.saturating_sub(st.links_added) + c.value * (st.vals.len() - st.val_pos) as u64
    }

    fn dsl_ok(&self, st: &State, pred: Pred<'_>) -> bool {
        for (rule, (assocs, attrs)) in self.rules.iter().zip(&st.rule_preds) {
            let relevant = match pred {
                Pred::All => true,
                Pred::Assoc(a) => assocs.contains(a),
                Pred::Attr(a) => attrs.contains(a),
            };
            if relevant && derive(rule, &st.index, st, &mut |_, _| ControlFlow::Break(())).is_break() {
                return false;
            }
        }
        true
    }

    fn links(&mut self, st: &mut State) -> ControlFlow<()> {
        self.out.nodes += 1;
        let i = st.link_pos;
        if let Some(groups) = st.lex_groups.get(&i) {
            for &(p, q, len) in groups {
                // true sorts before false
                let a = st.chosen[p..p + len].iter().map(|b| !b);
                let b = st.chosen[q..q + len].iter().map(|b| !b);
                if a.gt(b) {
                    return ControlFlow::Continue(());
                }
            }
        }
        if i == st.cands.len() {
            return self.values(st);
        }
        let [e1, e2] = st.cands[i].ends;
        let link_cost = self.cost.map_or(0, |c| c.link);
        for take in [true, false] {
            st.link_pos = i + 1;
            st.ends[e1].remaining -= 1;
            st.ends[e2].remaining -= 1;
            if take {
                st.ends[e1].count += 1;
                st.ends[e2].count += 1;
                st.chosen[i] = true;
                st.cost += link_cost;
                st.links_added += 1;
                let c = &st.cands[i];
                st.index.push_link(&c.assoc, c.from, c.to);
            }
            let ok = [e1, e2].iter().all(|&e| {
                let e = &st.ends[e];
                e.count <= e.max && e.count + e.remaining >= e.min
            });
            let r = if ok && !self.prune_on_cost(self.lower_bound(st)) && self.dsl_ok(st, Pred::Assoc(&st.cands[i].assoc)) {
                self.links(st)
            } else {
                ControlFlow::Continue(())
            };
            if take {
                st.ends[e1].count -= 1;
                st.ends[e2].count -= 1;
                st.chosen[i] = false;
                st.cost -= link_cost;
                st.links_added -= 1;
                st.index.pop_link(&st.cands[i].assoc);
            }
            st.ends[e1].remaining += 1;
            st.ends[e2].remaining += 1;
            st.link_pos = i;
            r?;
        }
        ControlFlow::Continue(())
    }

    fn values(&mut self, st: &mut State) -> ControlFlow<()> {
        self.out.nodes += 1;
        let j = st.val_pos;
        if j == st.vals.len() {
            return self.leaf(st);
        }
        let value_cost = self.cost.map_or(0, |c| c.value);
        for d in 0..st.vals[j].domain.len() {
            st.assigned[j] = d;
            st.val_pos = j + 1;
            st.cost += value_cost;
            let v = &st.vals[j];
            st.index.push_value(&v.attr, v.object, v.domain[d].clone());
            let r = if !self.prune_on_cost(self.lower_bound(st)) && self.dsl_ok(st, Pred::Attr(&st.vals[j].attr)) {
                self.values(st)
            } else {
                ControlFlow::Continue(())
            };
            st.index.pop_value(&st.vals[j].attr);
            st.cost -= value_cost;
            st.val_pos = j;
            r?;
        }
        ControlFlow::Continue(())
    }

    fn leaf(&mut self, st: &State) -> ControlFlow<()> {
        // Full lex-leader check under each adjacent-slot swap.
        let n = st.cands.len();
        let var = |i: usize| if i < n { usize::from(!st.chosen[i]) } else { st.assigned[i - n] };
        for perm in &st.swaps {
            for (i, &j) in perm.iter().enumerate() {
                let (a, b) = (var(i), var(j));
                if a < b {
                    break;
                }
                if a > b {
                    return ControlFlow::Continue(());
                }
            }
        }

        let mut inst = self.base.clone();
        for (o, class) in st.new_ids.iter().zip(&st.new_classes) {
            inst.insert(InstanceFact::Isa { class: class.clone(), object: *o });
        }
        for (i, c) in st.cands.iter().enumerate() {
            if st.chosen[i] {
                inst.insert(InstanceFact::Associated { assoc: c.assoc.clone(), from: c.from, to: c.to });
            }
        }
        for (j, v) in st.vals.iter().enumerate() {
            inst.insert(InstanceFact::AttributeValue { attr: v.attr.clone(), object: v.object, value: v.domain[st.assigned[j]].clone() });
        }
        if !builtin_violations(self.model, &inst, Mode::Complete).0.is_empty()
            || any_violation(self.rules, &st.index, &ClosedWorld)
        {
            return ControlFlow::Continue(());
        }
        let inst = if self.symmetric {
            canonicalize(&inst, &st.new_ids.iter().copied().collect(), self.id_base).inst
        } else {
            inst
        };
        if self.seen.insert(inst.facts.clone()) {
            self.out.solutions.push(Found { inst, cost: st.cost });
            if self.out.solutions.len() >= self.limit {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    }
}

/// Associations and attributes a rule's body mentions.
fn mentioned(rule: &ConstraintRule) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut assocs = BTreeSet::new();
    let mut attrs = BTreeSet::new();
    for lit in &rule.body {
        if let BodyLiteral::Positive(a) | BodyLiteral::Negative(a) = lit {
            match a {
                Atom::Associated { assoc, .. } => {
                    assocs.insert(assoc.clone());
                }
                Atom::Value { attr, .. } => {
                    attrs.insert(attr.clone());
                }
                Atom::Isa { .. } => {}
            }
        }
    }
    (assocs, attrs)
}

/// Facts of `solution` that are not in `base`.
pub fn added_facts<'s>(base: &Instantiation, solution: &'s Instantiation) -> Vec<&'s InstanceFact> {
    solution.facts.iter().filter(|f| !base.facts.contains(f)).collect()
}

/// Number of facts of `kind` in `solution` but not in `base`.
pub fn added_count(base: &Instantiation, solution: &Instantiation, kind: FactKind) -> usize {
    added_facts(base, solution).iter().filter(|f| f.kind() == kind).count()
}
