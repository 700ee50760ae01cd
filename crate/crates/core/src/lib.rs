//! Interest taxonomy engineering: an OWL-subset axiom store maintained
//! through an event-sourced log of composite changes, with refactoring
//! planners, rule-driven entity tags, multilingual display names, quality
//! lint, discussions, access control and relational export.

pub mod authz;
pub mod changelog;
pub mod discussions;
pub mod error;
pub mod events;
pub mod export;
pub mod ids;
pub mod links;
pub mod lint;
pub mod iri;
pub mod model;
pub mod multilang;
pub mod project;
pub mod ofn;
pub mod refactor;
pub mod search;
pub mod seed;
pub mod synth;
pub mod tags;
pub mod vocab;

pub use changelog::{LogError, ProjectLog, Provenance, Revision};
pub use error::{ChangeError, ModelError, UnknownEntity};
pub use ids::{ProjectId, TagId, ThreadId, UserId};
pub use iri::{Iri, LanguageTag};
pub use model::{
    AnnotationAssertion, AnnotationValue, AtomicChange, Axiom, ChangeOp, HierarchyMode, Taxonomy,
    ValidationReport, Violation,
};
pub use ofn::{parse_ofn, serialize_ofn, write_taxonomy, OfnDocument, OfnError};
pub use vocab::{vocab, AnnotationVocabulary};
pub use authz::{AuthzError, ProjectAcl, Role};
pub use events::{EventEnvelope, EventKind};
pub use project::{Project, ProjectError, ProjectSettings, SettingsUpdate};
