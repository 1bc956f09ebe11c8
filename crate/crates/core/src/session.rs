//! Loads one or more fact files into models and instantiations.

use std::collections::BTreeMap;

use crate::error::{Error, Location, Result};
use crate::fact::Fact;
use crate::instance::{InstanceFact, Instantiation};
use crate::model::{build_model, Model};
use crate::parser::FactFile;
use crate::validation::Violation;

/// Where an instance fact was read from: file index and location.
pub type Origin = (usize, Location);

#[derive(Debug, Clone, Default)]
pub struct Session {
    pub models: BTreeMap<String, Model>,
    pub instantiations: BTreeMap<String, Instantiation>,
    pub violations: Vec<Violation>,
    pub origins: BTreeMap<(String, InstanceFact), Origin>,
}

impl Session {
    /// Model facts are grouped by model id, instance facts by instantiation
    /// id. Every instance fact must name an instantiation declared by an
    /// `ooasp_instantiation` fact in one of the files.
    pub fn load(files: &[FactFile]) -> Result<Self> {
        let mut model_facts: BTreeMap<String, Vec<Fact>> = BTreeMap::new();
        let mut declared: BTreeMap<String, String> = BTreeMap::new();
        let mut session = Session::default();

        for file in files {
            for (fact, _) in file.iter() {
                if let Fact::Instantiation { model, inst } = fact {
                    match declared.get(inst) {
                        Some(prev) if prev != model => {
                            return Err(Error::ConflictingInstantiation {
                                inst: inst.clone(),
                                first: prev.clone(),
                                second: model.clone(),
                            })
                        }
                        _ => {
                            declared.insert(inst.clone(), model.clone());
                        }
                    }
                }
            }
        }
        for (inst, model) in &declared {
            session.instantiations.insert(inst.clone(), Instantiation::new(model.clone(), inst.clone()));
        }

        for (idx, file) in files.iter().enumerate() {
            for (fact, loc) in file.iter() {
                if let Some(m) = fact.model_id() {
                    model_facts.entry(m.to_string()).or_default().push(fact.clone());
                } else if let Some((inst, content)) = fact.to_instance_fact() {
                    let target = session
                        .instantiations
                        .get_mut(inst)
                        .ok_or_else(|| Error::UndeclaredInstantiation { inst: inst.to_string(), location: loc })?;
                    target.insert(content.clone());
                    session.origins.entry((inst.to_string(), content)).or_insert((idx, loc));
                } else if let Fact::Violation { inst, kind, args } = fact {
                    session.violations.push(Violation { inst_id: inst.clone(), kind: kind.clone(), args: args.clone() });
                }
            }
        }

        let mut diags = Vec::new();
        for (id, facts) in model_facts {
            match build_model(&facts) {
                Ok(m) => {
                    session.models.insert(id, m);
                }
                Err(Error::IllFormedModel(d)) => diags.extend(d),
                Err(e) => return Err(e),
            }
        }
        if !diags.is_empty() {
            return Err(Error::IllFormedModel(diags));
        }
        Ok(session)
    }

    pub fn model(&self, id: &str) -> Result<&Model> {
        self.models.get(id).ok_or_else(|| Error::UnknownModel(id.to_string()))
    }

    pub fn instantiation(&self, id: &str) -> Result<&Instantiation> {
        self.instantiations.get(id).ok_or_else(|| Error::UnknownInstantiation(id.to_string()))
    }

    /// The model an instantiation refers to.
    pub fn model_of(&self, inst: &Instantiation) -> Result<&Model> {
        self.model(&inst.model_id)
    }

    /// Takes the single model when exactly one is loaded.
    pub fn only_model(&self) -> Option<&Model> {
        if self.models.len() == 1 {
            self.models.values().next()
        } else {
            None
        }
    }

    pub fn only_instantiation(&self) -> Option<&Instantiation> {
        if self.instantiations.len() == 1 {
            self.instantiations.values().next()
        } else {
            None
        }
    }
}
