//! Graphviz export of instantiations and reconciliation diffs.
//!
//! Objects become record-like nodes listing their class and attribute
//! values; links become labelled edges. Objects of the input are filled
//! gray. In a diff, deleted facts are red and struck through (dashed for
//! edges) and created facts are green.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::instance::{InstanceFact, Instantiation, ObjectId};
use crate::reconcile::ChangeSet;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Kept,
    Deleted,
    Created,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn styled(text: &str, status: Status) -> String {
    let text = escape(text);
    match status {
        Status::Kept => text,
        Status::Deleted => format!("<FONT COLOR=\"red\"><S>{text}</S></FONT>"),
        Status::Created => format!("<FONT COLOR=\"darkgreen\"><B>{text}</B></FONT>"),
    }
}

/// Facts grouped per object (classes and values) plus the links.
#[derive(Default)]
struct Layout {
    rows: BTreeMap<ObjectId, Vec<(u8, String, Status)>>,
    fills: BTreeMap<ObjectId, &'static str>,
    edges: Vec<(ObjectId, ObjectId, String, Status)>,
}

impl Layout {
    fn add(&mut self, fact: &InstanceFact, status: Status) {
        match fact {
            InstanceFact::Isa { class, object } => {
                self.rows.entry(*object).or_default().push((0, class.clone(), status));
            }
            InstanceFact::AttributeValue { attr, object, value } => {
                self.rows.entry(*object).or_default().push((1, format!("{attr} = {value}"), status));
            }
            InstanceFact::Associated { assoc, from, to } => {
                self.rows.entry(*from).or_default();
                self.rows.entry(*to).or_default();
                self.edges.push((*from, *to, assoc.clone(), status));
            }
        }
    }

    fn render(mut self, name: &str) -> String {
        let mut out = String::new();
        writeln!(out, "digraph \"{}\" {{", name.replace('"', "\\\"")).unwrap();
        writeln!(out, "  node [shape=plaintext, fontname=\"Helvetica\"];").unwrap();
        writeln!(out, "  edge [fontname=\"Helvetica\", fontsize=10];").unwrap();
        for (o, rows) in &mut self.rows {
            rows.sort();
            let fill = self.fills.get(o).copied().unwrap_or("white");
            let mut cells = format!("<TR><TD><B>{o}</B></TD></TR>");
            for (_, text, status) in rows.iter() {
                write!(cells, "<TR><TD>{}</TD></TR>", styled(text, *status)).unwrap();
            }
            writeln!(out, "  o{o} [label=<<TABLE BORDER=\"1\" CELLBORDER=\"0\" BGCOLOR=\"{fill}\">{cells}</TABLE>>];")
                .unwrap();
        }
        self.edges.sort();
        for (from, to, assoc, status) in &self.edges {
            let style = match status {
                Status::Kept => String::new(),
                Status::Deleted => ", color=\"red\", fontcolor=\"red\", style=\"dashed\"".into(),
                Status::Created => ", color=\"darkgreen\", fontcolor=\"darkgreen\", penwidth=2".into(),
            };
            writeln!(out, "  o{from} -> o{to} [label=\"{}\"{style}];", assoc.replace('"', "\\\"")).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

/// Renders `inst`; objects in `existing` are filled gray.
pub fn instantiation_dot(inst: &Instantiation, existing: &BTreeSet<ObjectId>) -> String {
    let mut layout = Layout::default();
    for f in &inst.facts {
        layout.add(f, Status::Kept);
    }
    for o in existing {
        if layout.rows.contains_key(o) {
            layout.fills.insert(*o, "lightgray");
        }
    }
    layout.render(&inst.inst_id)
}

/// Renders the union of the legacy and repaired instantiations. Legacy
/// objects that survive are gray, removed objects pink, new ones pale green.
pub fn change_set_dot(legacy: &Instantiation, cs: &ChangeSet) -> String {
    let mut layout = Layout::default();
    for r in &cs.reused {
        layout.add(&r.fact, Status::Kept);
    }
    for r in &cs.deleted {
        layout.add(&r.fact, Status::Deleted);
    }
    for f in &cs.created {
        layout.add(f, Status::Created);
    }
    let before = legacy.mentioned_objects();
    let after = cs.result.mentioned_objects();
    let objects: Vec<ObjectId> = layout.rows.keys().copied().collect();
    for o in objects {
        let fill = match (before.contains(&o), after.contains(&o)) {
            (true, true) => "lightgray",
            (true, false) => "mistyrose",
            _ => "honeydew",
        };
        layout.fills.insert(o, fill);
    }
    layout.render(&cs.result.inst_id)
}
