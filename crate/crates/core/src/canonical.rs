//! Canonical renaming of created objects, so that solutions differing only in
//! the ids of new objects compare equal.
//!
//! New objects are colored by class, then refined by the facts they occur in
//! (existing objects are referenced by id, new ones by color) until stable.
//! Remaining ties are broken by trying every member of the first ambiguous
//! cell; the lexicographically smallest renamed fact set wins.

use std::collections::{BTreeMap, BTreeSet};

use crate::instance::{InstanceFact, Instantiation, ObjectId, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    pub inst: Instantiation,
    /// Old id to new id, for the renamed objects only.
    pub mapping: BTreeMap<ObjectId, ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Ref {
    Existing(i64),
    Me,
    New(usize),
}

type Sig<'a> = (u8, &'a str, Ref, Ref, Option<&'a Value>);

struct Graph<'a> {
    new: Vec<ObjectId>,
    index: BTreeMap<ObjectId, usize>,
    facts: Vec<&'a InstanceFact>,
    /// Fact indices mentioning each new object.
    incident: Vec<Vec<usize>>,
}

impl<'a> Graph<'a> {
    fn reference(&self, o: ObjectId, me: usize, colors: &[usize]) -> Ref {
        match self.index.get(&o) {
            Some(&i) if i == me => Ref::Me,
            Some(&i) => Ref::New(colors[i]),
            None => Ref::Existing(o.0),
        }
    }

    fn sig(&self, f: &'a InstanceFact, me: usize, colors: &[usize]) -> Sig<'a> {
        match f {
            InstanceFact::Isa { class, .. } => (0, class, Ref::Me, Ref::Me, None),
            InstanceFact::Associated { assoc, from, to } => {
                (1, assoc, self.reference(*from, me, colors), self.reference(*to, me, colors), None)
            }
            InstanceFact::AttributeValue { attr, value, .. } => (2, attr, Ref::Me, Ref::Me, Some(value)),
        }
    }

    /// Ranks objects by (previous color, incident fact signatures) until the
    /// partition is stable.
    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let mut cells = distinct(&colors);
        loop {
            let sigs: Vec<(usize, Vec<Sig<'a>>)> = (0..self.new.len())
                .map(|i| {
                    let mut s: Vec<Sig<'a>> = self.incident[i].iter().map(|&f| self.sig(self.facts[f], i, &colors)).collect();
                    s.sort();
                    (colors[i], s)
                })
                .collect();
            let mut ranked: Vec<&(usize, Vec<Sig<'a>>)> = sigs.iter().collect();
            ranked.sort();
            ranked.dedup();
            colors = sigs.iter().map(|s| ranked.binary_search(&s).unwrap()).collect();
            let now = ranked.len();
            if now == cells {
                return colors;
            }
            cells = now;
        }
    }

    fn search(&self, colors: Vec<usize>, id_base: i64, best: &mut Option<(BTreeSet<InstanceFact>, Vec<usize>)>) {
        let colors = self.refine(colors);
        let mut counts = BTreeMap::new();
        for c in &colors {
            *counts.entry(*c).or_insert(0) += 1;
        }
        let Some((&cell, _)) = counts.iter().find(|(_, n)| **n > 1) else {
            let renamed: BTreeSet<InstanceFact> = self.facts.iter().map(|f| f.renamed(|o| self.rename(o, &colors, id_base))).collect();
            if best.as_ref().is_none_or(|(b, _)| renamed < *b) {
                *best = Some((renamed, colors));
            }
            return;
        };
        for m in (0..colors.len()).filter(|&i| colors[i] == cell) {
            let split = colors.iter().enumerate().map(|(i, &c)| 2 * c + usize::from(c == cell && i != m)).collect();
            self.search(split, id_base, best);
        }
    }

    fn rename(&self, o: ObjectId, colors: &[usize], id_base: i64) -> ObjectId {
        match self.index.get(&o) {
            Some(&i) => ObjectId(id_base + colors[i] as i64),
            None => o,
        }
    }
}

fn distinct(colors: &[usize]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

/// Renames the objects in `new` to `id_base, id_base + 1, ...` in an order
/// that depends only on the structure of the instantiation, never on the
/// original ids of `new`. Other objects keep their ids.
pub fn canonicalize(inst: &Instantiation, new: &BTreeSet<ObjectId>, id_base: i64) -> Canonical {
    let new: Vec<ObjectId> = new.iter().copied().collect();
    let index: BTreeMap<ObjectId, usize> = new.iter().enumerate().map(|(i, o)| (*o, i)).collect();
    let facts: Vec<&InstanceFact> = inst.facts.iter().collect();
    let mut incident = vec![Vec::new(); new.len()];
    for (fi, f) in facts.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for o in f.objects() {
            if let Some(&i) = index.get(&o) {
                if seen.insert(i) {
                    incident[i].push(fi);
                }
            }
        }
    }
    let g = Graph { new, index, facts, incident };

    let objects = inst.objects();
    let class_of: Vec<Vec<&str>> =
        g.new.iter().map(|o| objects.get(o).map(|cs| cs.iter().copied().collect()).unwrap_or_default()).collect();
    let mut sorted = class_of.clone();
    sorted.sort();
    sorted.dedup();
    let initial = class_of.iter().map(|c| sorted.binary_search(c).unwrap()).collect();

    let mut best = None;
    g.search(initial, id_base, &mut best);
    let (facts, colors) = best.expect("search reaches at least one leaf");
    let mapping = g.new.iter().enumerate().map(|(i, o)| (*o, ObjectId(id_base + colors[i] as i64))).collect();
    Canonical { inst: Instantiation { inst_id: inst.inst_id.clone(), model_id: inst.model_id.clone(), facts }, mapping }
}
