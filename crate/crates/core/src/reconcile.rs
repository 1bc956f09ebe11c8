//! Reconciliation: turn a legacy instantiation into a valid instantiation of
//! a target model at minimum cost.
//!
//! Every legacy fact is either reused or deleted; further facts may be
//! created by completion. Costs come from a per-(action, kind) table. The
//! optimum is found by iterative deepening on the total cost: each round
//! explores reuse/delete choices (reuse first) with a budget, completes every
//! surviving choice under the remaining budget, and raises the budget to the
//! smallest bound that was cut off. Among optimal change sets the one with
//! the smallest (deleted, created) fact lists wins.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::completion::{id_base, prepare, search, CompletionConfig, CostLimit};
use crate::dsl::{derive, ConstraintRule, FactIndex, GroundAtom, OpenWorld};
use crate::error::{Error, Result};
use crate::instance::{FactKind, InstanceFact, Instantiation, ObjectId};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Reuse,
    Delete,
    Create,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Reuse, Action::Delete, Action::Create];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Reuse => "reuse",
            Action::Delete => "delete",
            Action::Create => "create",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Action::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

/// Cost of each action per fact kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    costs: BTreeMap<(Action, FactKind), u64>,
}

impl Default for CostTable {
    fn default() -> Self {
        let mut costs = BTreeMap::new();
        for k in FactKind::ALL {
            costs.insert((Action::Reuse, k), 0);
            costs.insert((Action::Delete, k), 1);
            costs.insert((Action::Create, k), 1);
        }
        CostTable { costs }
    }
}

impl CostTable {
    pub fn get(&self, action: Action, kind: FactKind) -> u64 {
        self.costs[&(action, kind)]
    }

    pub fn set(&mut self, action: Action, kind: FactKind, cost: u64) {
        self.costs.insert((action, kind), cost);
    }

    /// Reads `action kind cost` lines; `%` starts a comment. Entries not
    /// listed keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = CostTable::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('%').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::InvalidConfig(format!("cost table line {}: {msg}", n + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [action, kind, cost] = parts[..] else {
                return Err(bad("expected `action kind cost`"));
            };
            let action = Action::parse(action).ok_or_else(|| bad("action must be reuse, delete or create"))?;
            let kind = FactKind::parse(kind).ok_or_else(|| bad("kind must be isa, associated or attribute_value"))?;
            let cost = cost.parse::<u64>().map_err(|_| bad("cost must be a non-negative integer"))?;
            t.set(action, kind, cost);
        }
        Ok(t)
    }

    pub fn to_text(&self) -> String {
        self.costs.iter().map(|((a, k), c)| format!("{} {} {c}\n", a.as_str(), k.as_str())).collect()
    }

    pub fn fact_cost(&self, action: Action, fact: &InstanceFact) -> u64 {
        self.get(action, fact.kind())
    }
}

/// A legacy fact as the subject of a reuse or delete decision.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReifiedFact {
    pub fact: InstanceFact,
}

pub fn reify(inst: &Instantiation) -> BTreeSet<ReifiedFact> {
    inst.facts.iter().map(|f| ReifiedFact { fact: f.clone() }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeSet {
    pub reused: BTreeSet<ReifiedFact>,
    pub deleted: BTreeSet<ReifiedFact>,
    pub created: BTreeSet<InstanceFact>,
    pub total_cost: u64,
    pub result: Instantiation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReconcileOutcome {
    Repaired(ChangeSet),
    UnsatWithinBounds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    pub outcome: ReconcileOutcome,
    /// Budgets tried, in order.
    pub rounds: Vec<u64>,
    pub nodes: u64,
    pub elapsed: Duration,
}

/// Whether a legacy fact names something the target model lacks.
pub fn forced_deletion(model: &Model, fact: &InstanceFact) -> bool {
    match fact {
        InstanceFact::Isa { class, .. } => !model.classes.contains(class),
        InstanceFact::Associated { assoc, .. } => !model.associations.contains_key(assoc),
        InstanceFact::AttributeValue { attr, .. } => !model.declares_attribute(attr),
    }
}

pub fn reconcile(
    legacy: &Instantiation,
    target: &Model,
    rules: &[ConstraintRule],
    costs: &CostTable,
    config: &CompletionConfig,
) -> Result<Reconciliation> {
    let start = Instant::now();
    let empty = Instantiation::new(target.id.clone(), legacy.inst_id.clone());
    let rules = prepare(target, &empty, rules, config)?;
    let config = CompletionConfig { id_base: Some(id_base(legacy, config)), ..config.clone() };

    let (forced, free): (Vec<&InstanceFact>, Vec<&InstanceFact>) =
        legacy.facts.iter().partition(|f| forced_deletion(target, f));
    let forced_cost: u64 = forced.iter().map(|f| costs.fact_cost(Action::Delete, f)).sum();
    // Cheapest possible decision for each suffix of the free facts.
    let mut suffix_min = vec![0; free.len() + 1];
    for i in (0..free.len()).rev() {
        let f = free[i];
        suffix_min[i] = suffix_min[i + 1] + costs.fact_cost(Action::Reuse, f).min(costs.fact_cost(Action::Delete, f));
    }

    let mut r = Reconciler {
        target,
        rules: &rules,
        costs,
        config: &config,
        free: &free,
        suffix_min: &suffix_min,
        reused: Instantiation::new(target.id.clone(), legacy.inst_id.clone()),
        deleted: forced.iter().map(|f| (*f).clone()).collect(),
        index: FactIndex::new(),
        cost: forced_cost,
        budget: 0,
        next_bound: None,
        found: Vec::new(),
        nodes: 0,
    };
    let mut rounds = Vec::new();
    let mut budget = forced_cost + suffix_min[0];
    loop {
        rounds.push(budget);
        r.budget = budget;
        r.next_bound = None;
        r.dfs(0)?;
        if !r.found.is_empty() {
            break;
        }
        match r.next_bound {
            Some(b) => budget = b,
            None => {
                return Ok(Reconciliation {
                    outcome: ReconcileOutcome::UnsatWithinBounds,
                    rounds,
                    nodes: r.nodes,
                    elapsed: start.elapsed(),
                })
            }
        }
    }
    let best = r.found.into_iter().min_by(|a, b| a.key().cmp(&b.key())).expect("found is non-empty");
    Ok(Reconciliation { outcome: ReconcileOutcome::Repaired(best.change_set), rounds, nodes: r.nodes, elapsed: start.elapsed() })
}

struct Candidate {
    change_set: ChangeSet,
}

impl Candidate {
    fn key(&self) -> (Vec<&InstanceFact>, Vec<&InstanceFact>) {
        (self.change_set.deleted.iter().map(|r| &r.fact).collect(), self.change_set.created.iter().collect())
    }
}

struct Reconciler<'a> {
    target: &'a Model,
    rules: &'a [&'a ConstraintRule],
    costs: &'a CostTable,
    config: &'a CompletionConfig,
    free: &'a [&'a InstanceFact],
    suffix_min: &'a [u64],
    reused: Instantiation,
    deleted: BTreeSet<InstanceFact>,
    index: FactIndex,
    cost: u64,
    budget: u64,
    next_bound: Option<u64>,
    found: Vec<Candidate>,
    nodes: u64,
}

/// During the reuse/delete search, a legacy `isa` fact not yet decided may
/// still hold, and links and values may always be created later.
struct Undecided<'a> {
    pending: &'a [&'a InstanceFact],
    model: &'a Model,
}

impl OpenWorld for Undecided<'_> {
    fn may_become_true(&self, atom: &GroundAtom<'_>) -> bool {
        match *atom {
            GroundAtom::Isa(o, c) => self.pending.iter().any(|f| {
                matches!(f, InstanceFact::Isa { class, object } if *object == o && self.model.is_a(class, c))
            }),
            GroundAtom::Associated(..) | GroundAtom::Value(..) => true,
        }
    }
}

impl Reconciler<'_> {
    fn bound(&mut self, lb: u64) -> bool {
        if lb > self.budget {
            self.next_bound = Some(self.next_bound.map_or(lb, |b| b.min(lb)));
            return false;
        }
        true
    }

    fn dfs(&mut self, i: usize) -> Result<()> {
        self.nodes += 1;
        if !self.bound(self.cost + self.suffix_min[i] + self.creation_floor(i)) {
            return Ok(());
        }
        if i == self.free.len() {
            return self.leaf();
        }
        let f = self.free[i];
        for action in [Action::Reuse, Action::Delete] {
            let c = self.costs.fact_cost(action, f);
            self.cost += c;
            if action == Action::Reuse {
                if self.can_reuse(f) {
                    self.reused.insert(f.clone());
                    self.index.push(self.target, f);
                    if self.dsl_ok(i + 1) {
                        self.dfs(i + 1)?;
                    }
                    self.index.pop(self.target, f);
                    self.reused.facts.remove(f);
                }
            } else {
                self.deleted.insert(f.clone());
                if f.kind() != FactKind::Isa || self.dsl_ok(i + 1) {
                    self.dfs(i + 1)?;
                }
                self.deleted.remove(f);
            }
            self.cost -= c;
        }
        Ok(())
    }

    fn dsl_ok(&self, next: usize) -> bool {
        let open = Undecided { pending: &self.free[next..], model: self.target };
        !self.rules.iter().any(|r| derive(r, &self.index, &open, &mut |_, _| ControlFlow::Break(())).is_break())
    }

    /// Rejects reuse decisions that leave a violation no later choice or
    /// creation can remove.
    fn can_reuse(&self, f: &InstanceFact) -> bool {
        let m = self.target;
        let class_of = |o: ObjectId| {
            self.reused.facts.iter().find_map(|g| match g {
                InstanceFact::Isa { class, object } if *object == o => Some(class.as_str()),
                _ => None,
            })
        };
        match f {
            InstanceFact::Isa { object, .. } => class_of(*object).is_none(),
            InstanceFact::Associated { assoc, from, to } => {
                let a = &m.associations[assoc];
                let (Some(c1), Some(c2)) = (class_of(*from), class_of(*to)) else { return false };
                if !m.is_a(c1, &a.class1) || !m.is_a(c2, &a.class2) {
                    return false;
                }
                let links = self.reused.links().filter(|l| l.0 == assoc);
                let (mut n1, mut n2) = (0, 0);
                for (_, f2, t2) in links {
                    n1 += u32::from(f2 == *from);
                    n2 += u32::from(t2 == *to);
                }
                n1 < a.max2 && n2 < a.max1
            }
            InstanceFact::AttributeValue { attr, object, value } => {
                let Some(c) = class_of(*object) else { return false };
                let Some(decl) = m.attribute_for(c, attr) else { return false };
                decl.check(value).is_ok() && !self.reused.values().any(|(a, o, _)| a == attr && o == *object)
            }
        }
    }

    /// Creation cost every completion must pay, whatever happens to the
    /// facts from `next` on: one value per attribute no reused or pending fact
    /// provides, and enough links to cover minimum cardinalities.
    fn creation_floor(&self, next: usize) -> u64 {
        let m = self.target;
        let pending = &self.free[next..];
        let objects = self.reused.objects();
        let has_value = |attr: &str, o: ObjectId| {
            self.reused.values().any(|(a, x, _)| a == attr && x == o)
                || pending.iter().any(|f| matches!(f, InstanceFact::AttributeValue { attr: a, object, .. } if a == attr && *object == o))
        };
        let all_links: Vec<(&str, ObjectId, ObjectId)> = self
            .reused
            .links()
            .chain(pending.iter().filter_map(|f| match f {
                InstanceFact::Associated { assoc, from, to } => Some((assoc.as_str(), *from, *to)),
                _ => None,
            }))
            .collect();
        let mut values = 0u64;
        for (o, classes) in &objects {
            for c in classes {
                for decl in m.applicable_attributes(c).unwrap_or_default() {
                    values += u64::from(!has_value(&decl.id, *o));
                }
            }
        }
        let mut links = 0u64;
        for (a, assoc) in &m.associations {
            let deficit = |class: &str, min: u32, side: usize| -> u64 {
                objects
                    .iter()
                    .filter(|(_, cs)| cs.iter().any(|c| m.is_a(c, class)))
                    .map(|(o, _)| {
                        let n = all_links.iter().filter(|l| l.0 == a && [l.1, l.2][side] == *o).count() as u64;
                        u64::from(min).saturating_sub(n)
                    })
                    .sum()
            };
            links += deficit(&assoc.class1, assoc.min2, 0).max(deficit(&assoc.class2, assoc.min1, 1));
        }
        values * self.costs.get(Action::Create, FactKind::AttributeValue)
            + links * self.costs.get(Action::Create, FactKind::Associated)
    }

    fn leaf(&mut self) -> Result<()> {
        let remaining = self.budget - self.cost;
        let limit = CostLimit {
            isa: self.costs.get(Action::Create, FactKind::Isa),
            link: self.costs.get(Action::Create, FactKind::Associated),
            value: self.costs.get(Action::Create, FactKind::AttributeValue),
            budget: remaining,
        };
        let out = search(self.target, &self.reused, self.rules, self.config, Some(limit), usize::MAX)?;
        self.nodes += out.nodes;
        if let Some(b) = out.next_bound {
            self.bound(self.cost + b);
        }
        for found in out.solutions {
            let created: BTreeSet<InstanceFact> =
                found.inst.facts.iter().filter(|f| !self.reused.facts.contains(f)).cloned().collect();
            let change_set = ChangeSet {
                reused: reify(&self.reused),
                deleted: self.deleted.iter().map(|f| ReifiedFact { fact: f.clone() }).collect(),
                created,
                total_cost: self.cost + found.cost,
                result: found.inst,
            };
            self.found.push(Candidate { change_set });
        }
        Ok(())
    }
}
