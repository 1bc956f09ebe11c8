//! Object-oriented configuration models: parsing, validation, completion and
//! reconciliation of instantiations.

pub mod canonical;
pub mod completion;
pub mod dot;
pub mod dsl;
pub mod error;
pub mod fact;
pub mod instance;
pub(crate) mod lexer;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod reconcile;
pub mod report;
pub mod session;
pub mod validation;

pub use completion::{complete, CompletionConfig, Outcome};
pub use dsl::{parse_constraints, ConstraintRule};
pub use error::{Error, Result};
pub use instance::{InstanceFact, Instantiation, ObjectId, Value};
pub use model::Model;
pub use parser::parse_facts;
pub use reconcile::{reconcile, ChangeSet, CostTable};
pub use session::Session;
pub use validation::{validate, Mode, ValidationReport, Violation};
