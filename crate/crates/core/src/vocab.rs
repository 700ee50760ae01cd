//! The recognized annotation vocabulary and well-known namespaces.

use std::sync::OnceLock;

use crate::iri::Iri;

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";
/// Namespace of the domain-specific curation properties.
pub const TOPIARY: &str = "https://w3id.org/topiary/vocab#";

/// Annotation properties the tooling understands. Other properties are kept
/// in the axiom store untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationVocabulary {
    pub label: Iri,
    pub alt_label: Iri,
    pub definition: Iri,
    pub no_ads: Iri,
    pub is_human_reviewed: Iri,
    pub deprecated: Iri,
    pub example_pin: Iri,
    pub xsd_boolean: Iri,
    pub xsd_integer: Iri,
    pub xsd_string: Iri,
}

impl AnnotationVocabulary {
    fn build() -> Self {
        let iri = |ns: &str, local: &str| Iri::parse(&format!("{ns}{local}")).expect("static IRI");
        AnnotationVocabulary {
            label: iri(RDFS, "label"),
            alt_label: iri(SKOS, "altLabel"),
            definition: iri(SKOS, "definition"),
            no_ads: iri(TOPIARY, "noAds"),
            is_human_reviewed: iri(TOPIARY, "isHumanReviewed"),
            deprecated: iri(OWL, "deprecated"),
            example_pin: iri(TOPIARY, "examplePin"),
            xsd_boolean: iri(XSD, "boolean"),
            xsd_integer: iri(XSD, "integer"),
            xsd_string: iri(XSD, "string"),
        }
    }

    /// All recognized annotation properties.
    pub fn properties(&self) -> [&Iri; 7] {
        [
            &self.label,
            &self.alt_label,
            &self.definition,
            &self.no_ads,
            &self.is_human_reviewed,
            &self.deprecated,
            &self.example_pin,
        ]
    }
}

/// Shared vocabulary instance.
pub fn vocab() -> &'static AnnotationVocabulary {
    static VOCAB: OnceLock<AnnotationVocabulary> = OnceLock::new();
    VOCAB.get_or_init(AnnotationVocabulary::build)
}

/// Standard prefixes always emitted by the serializer.
pub fn standard_prefixes() -> [(&'static str, &'static str); 6] {
    [
        ("owl", OWL),
        ("rdf", RDF),
        ("rdfs", RDFS),
        ("skos", SKOS),
        ("topiary", TOPIARY),
        ("xsd", XSD),
    ]
}
