use thiserror::Error;

use crate::iri::Iri;
use crate::model::Axiom;

/// Malformed identifiers and literal values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid IRI: {0:?}")]
    InvalidIri(String),
    #[error("invalid language tag: {0:?}")]
    InvalidLanguageTag(String),
    #[error("a literal cannot carry both a language tag and a datatype")]
    LangWithDatatype,
    #[error("boolean literal must be \"true\" or \"false\", got {0:?}")]
    InvalidBoolean(String),
}

/// Why a single atomic change could not be applied.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChangeError {
    #[error("cannot remove missing axiom {0}")]
    RemoveMissingAxiom(Axiom),
    #[error("axiom already present: {0}")]
    AddDuplicateAxiom(Axiom),
    #[error("adding {0} would create a cycle")]
    WouldCreateCycle(Axiom),
    #[error("adding {0} would give the class a second parent")]
    WouldCreateSecondParent(Axiom),
    #[error("entity {0} is not declared")]
    UndeclaredEntity(Iri),
    #[error("the root class cannot have a parent")]
    RootCannotHaveParent,
    #[error("the root class cannot be removed")]
    CannotRemoveRoot,
    #[error("cannot remove declaration of {0}: still referenced by other axioms")]
    EntityStillReferenced(Iri),
    #[error("{0} would be left without a parent")]
    WouldOrphan(Iri),
}

/// Query on an entity that is not declared.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown entity {0}")]
pub struct UnknownEntity(pub Iri);
